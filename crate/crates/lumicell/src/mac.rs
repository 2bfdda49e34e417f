//! Framed slotted ALOHA: slot selection, collision simulation in both the
//! slot-aligned and free-running-phase regimes, and success-rate analytics.
//!
//! The theoretical success rate for perfectly aligned slots is the falling
//! factorial N(N-1)...(N-n+1) / N^n — the probability that all n transmitters
//! pick distinct slots in one frame.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MacError {
    #[error("no transmissions in log")]
    EmptyLog,
    #[error("considered transmitter set is empty")]
    NoConsideredTransmitters,
}

/// Per-luminaire BFSA state: a fresh uniform slot draw every MAC frame.
#[derive(Debug, Clone)]
pub struct SlotSchedule {
    pub n_slots: usize,
    /// Seconds; equals the packet on-air time.
    pub slot_duration: f64,
    /// Transmitter clock offset in seconds, in [0, n_slots * slot_duration).
    pub phase_offset: f64,
    rng: ChaCha8Rng,
}

impl SlotSchedule {
    pub fn new(n_slots: usize, slot_duration: f64, phase_offset: f64, rng_seed: u64) -> Self {
        assert!(n_slots >= 1);
        assert!(phase_offset >= 0.0 && phase_offset < n_slots as f64 * slot_duration);
        SlotSchedule { n_slots, slot_duration, phase_offset, rng: ChaCha8Rng::seed_from_u64(rng_seed) }
    }

    /// Frame duration in seconds.
    pub fn frame_duration(&self) -> f64 {
        self.n_slots as f64 * self.slot_duration
    }

    /// Uniform draw over {0, .., n_slots - 1}; reproducible under the seed.
    pub fn draw_slot(&mut self) -> usize {
        self.rng.random_range(0..self.n_slots)
    }
}

/// One transmission interval of one transmitter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransmissionRecord {
    pub tx_id: u16,
    pub frame: usize,
    pub slot_index: usize,
    pub start: f64,
    pub end: f64,
    pub delivered: bool,
}

/// P(all n transmitters pick distinct slots) = N(N-1)..(N-n+1) / N^n.
///
/// Returns 1 for n <= 1 and 0 for n > N.
pub fn theoretical_success_rate(n_slots: u64, n_tx: u64) -> f64 {
    assert!(n_slots >= 1);
    if n_tx <= 1 {
        return 1.0;
    }
    if n_tx > n_slots {
        return 0.0;
    }
    let mut p = 1.0;
    for i in 0..n_tx {
        p *= (n_slots - i) as f64 / n_slots as f64;
    }
    p
}

/// Monte-Carlo success rate with perfectly aligned slots: per MAC frame all
/// transmitters draw, success iff all slots are distinct.
pub fn simulate_sync(n_slots: usize, n_tx: usize, frames: usize, seed: u64) -> f64 {
    assert!(frames >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut slots = vec![0usize; n_tx];
    let mut successes = 0usize;
    for _ in 0..frames {
        for s in slots.iter_mut() {
            *s = rng.random_range(0..n_slots);
        }
        slots.sort_unstable();
        if slots.windows(2).all(|w| w[0] != w[1]) {
            successes += 1;
        }
    }
    successes as f64 / frames as f64
}

/// Monte-Carlo success rate with free-running transmitter clocks.
///
/// Each transmitter keeps an independent uniform phase offset; messages are
/// delivered iff their interval overlaps no other transmitter's interval.
/// Round k succeeds when every transmitter's k-th message is delivered;
/// the first and last rounds of the horizon are discarded so every counted
/// message has neighbors on both sides.
pub fn simulate_async(n_slots: usize, n_tx: usize, frames: usize, seed: u64) -> f64 {
    assert!(frames >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let frame_dur = n_slots as f64; // slot duration 1.0, messages of length 1
    let horizon_frames = frames + 2;

    // (start, tx, round) of every message over the horizon
    let mut msgs: Vec<(f64, u16, usize)> = Vec::with_capacity(horizon_frames * n_tx);
    for tx in 0..n_tx {
        let phase: f64 = rng.random_range(0.0..frame_dur);
        for k in 0..horizon_frames {
            let slot = rng.random_range(0..n_slots);
            msgs.push((phase + k as f64 * frame_dur + slot as f64, tx as u16, k));
        }
    }
    msgs.sort_by(|a, b| a.0.total_cmp(&b.0));

    // all messages have length 1, so only sorted neighbors can overlap
    let mut round_ok = vec![true; horizon_frames];
    for i in 0..msgs.len() {
        let (start, tx, round) = msgs[i];
        let clear_before = i == 0 || msgs[i - 1].1 == tx || msgs[i - 1].0 + 1.0 <= start;
        let clear_after =
            i + 1 == msgs.len() || msgs[i + 1].1 == tx || start + 1.0 <= msgs[i + 1].0;
        if !(clear_before && clear_after) {
            round_ok[round] = false;
        }
    }

    let successes = round_ok[1..=frames].iter().filter(|&&v| v).count();
    successes as f64 / frames as f64
}

/// Mark `delivered` on every record: a message survives iff its interval
/// overlaps no interval of a different transmitter.
pub fn mark_deliveries(records: &mut [TransmissionRecord]) {
    let mut order: Vec<usize> = (0..records.len()).collect();
    order.sort_by(|&a, &b| records[a].start.total_cmp(&records[b].start));
    for (rank, &i) in order.iter().enumerate() {
        let r = records[i];
        let mut ok = true;
        // scan left and right neighbors in start order
        for &j in order[..rank].iter().rev() {
            let o = records[j];
            if o.end <= r.start {
                break;
            }
            if o.tx_id != r.tx_id {
                ok = false;
                break;
            }
        }
        if ok {
            for &j in order[rank + 1..].iter() {
                let o = records[j];
                if o.start >= r.end {
                    break;
                }
                if o.tx_id != r.tx_id {
                    ok = false;
                    break;
                }
            }
        }
        records[i].delivered = ok;
    }
}

/// Delivered / sent ratio restricted to the `considered` transmitter ids.
///
/// Collision state must already be marked against all transmitters — lights
/// outside the considered set still corrupt the medium.
pub fn per_message_success(
    log: &[TransmissionRecord],
    considered: &[u16],
) -> Result<f64, MacError> {
    if considered.is_empty() {
        return Err(MacError::NoConsideredTransmitters);
    }
    if log.is_empty() {
        return Err(MacError::EmptyLog);
    }
    let mut sent = 0usize;
    let mut delivered = 0usize;
    for r in log {
        if considered.contains(&r.tx_id) {
            sent += 1;
            if r.delivered {
                delivered += 1;
            }
        }
    }
    if sent == 0 {
        return Err(MacError::EmptyLog);
    }
    Ok(delivered as f64 / sent as f64)
}

/// Wilson score interval for a binomial proportion at ~95% confidence.
pub fn wilson_interval(successes: usize, trials: usize) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let z = 1.96f64;
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = (z / denom) * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((center - half).max(0.0), (center + half).min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn theory_examples() {
        assert_eq!(theoretical_success_rate(20, 1), 1.0);
        assert_eq!(theoretical_success_rate(3, 4), 0.0);
        let p = theoretical_success_rate(20, 4);
        // 20*19*18*17 / 20^4
        assert!((p - 0.72675).abs() < 1e-12, "{p}");
        assert!((theoretical_success_rate(50, 4) - 50.0 * 49.0 * 48.0 * 47.0 / 50f64.powi(4)).abs() < 1e-12);
    }

    #[test]
    fn draw_slot_single_slot_and_determinism() {
        let mut s = SlotSchedule::new(1, 5.6e-3, 0.0, 42);
        for _ in 0..10 {
            assert_eq!(s.draw_slot(), 0);
        }
        let mut a = SlotSchedule::new(20, 5.6e-3, 0.0, 7);
        let mut b = SlotSchedule::new(20, 5.6e-3, 0.0, 7);
        let da: Vec<usize> = (0..100).map(|_| a.draw_slot()).collect();
        let db: Vec<usize> = (0..100).map(|_| b.draw_slot()).collect();
        assert_eq!(da, db);
    }

    #[test]
    fn draw_slot_is_uniform() {
        // chi-square against uniform over 20 slots, 10^6 draws
        let mut s = SlotSchedule::new(20, 5.6e-3, 0.0, 123);
        let draws = 1_000_000usize;
        let mut counts = [0usize; 20];
        for _ in 0..draws {
            counts[s.draw_slot()] += 1;
        }
        let expected = draws as f64 / 20.0;
        let sigma = (draws as f64 * (1.0 / 20.0) * (19.0 / 20.0)).sqrt();
        for (i, &c) in counts.iter().enumerate() {
            assert!(
                (c as f64 - expected).abs() < 5.0 * sigma,
                "slot {i}: count {c} vs expected {expected}"
            );
        }
    }

    #[test]
    fn sync_simulation_matches_theory() {
        for (n_slots, n_tx) in [(20usize, 4usize), (50, 4), (10, 3)] {
            let frames = 100_000;
            let p_hat = simulate_sync(n_slots, n_tx, frames, 99);
            let p = theoretical_success_rate(n_slots as u64, n_tx as u64);
            let sigma = (p * (1.0 - p) / frames as f64).sqrt();
            assert!(
                (p_hat - p).abs() <= 4.0 * sigma.max(1e-4),
                "N={n_slots} n={n_tx}: {p_hat} vs {p}"
            );
        }
    }

    #[test]
    fn sync_degenerate_cases() {
        assert_eq!(simulate_sync(1, 2, 1000, 1), 0.0);
        assert_eq!(simulate_sync(5, 1, 1000, 1), 1.0);
    }

    #[test]
    fn async_single_transmitter_always_succeeds() {
        for n_slots in [5usize, 20] {
            assert_eq!(simulate_async(n_slots, 1, 5000, 3), 1.0);
        }
    }

    #[test]
    fn async_never_beats_sync() {
        for n_slots in [10usize, 20, 40] {
            let frames = 50_000;
            let sync = simulate_sync(n_slots, 4, frames, 11);
            let asyn = simulate_async(n_slots, 4, frames, 12);
            let sigma = (sync * (1.0 - sync) / frames as f64).sqrt();
            assert!(asyn <= sync + 2.0 * sigma, "N={n_slots}: async {asyn} sync {sync}");
        }
    }

    #[test]
    fn async_improves_with_more_slots() {
        let rates: Vec<f64> =
            [10usize, 20, 40, 80].iter().map(|&n| simulate_async(n, 4, 50_000, 21)).collect();
        for w in rates.windows(2) {
            assert!(w[1] >= w[0] - 0.01, "rates not monotone: {rates:?}");
        }
    }

    #[test]
    fn simulators_are_deterministic() {
        assert_eq!(simulate_sync(20, 4, 10_000, 5), simulate_sync(20, 4, 10_000, 5));
        assert_eq!(simulate_async(20, 4, 10_000, 5), simulate_async(20, 4, 10_000, 5));
    }

    fn rec(tx: u16, start: f64) -> TransmissionRecord {
        TransmissionRecord {
            tx_id: tx,
            frame: 0,
            slot_index: 0,
            start,
            end: start + 1.0,
            delivered: false,
        }
    }

    #[test]
    fn per_message_success_basics() {
        // no overlaps -> 1.0
        let mut log = vec![rec(1, 0.0), rec(2, 2.0), rec(1, 10.0), rec(2, 12.0)];
        mark_deliveries(&mut log);
        assert_eq!(per_message_success(&log, &[1, 2]).unwrap(), 1.0);

        // two considered always colliding, two never -> 0.5
        let mut log = vec![
            rec(1, 0.0),
            rec(2, 0.5),
            rec(3, 5.0),
            rec(4, 8.0),
            rec(1, 20.0),
            rec(2, 20.5),
            rec(3, 25.0),
            rec(4, 28.0),
        ];
        mark_deliveries(&mut log);
        assert_eq!(per_message_success(&log, &[1, 2, 3, 4]).unwrap(), 0.5);

        // invariant under id relabeling
        let mut relabeled: Vec<TransmissionRecord> = log.clone();
        for r in relabeled.iter_mut() {
            r.tx_id += 100;
            r.delivered = false;
        }
        mark_deliveries(&mut relabeled);
        assert_eq!(per_message_success(&relabeled, &[101, 102, 103, 104]).unwrap(), 0.5);
    }

    #[test]
    fn collisions_against_unconsidered_still_count() {
        // considered tx 1 collides with unconsidered tx 9
        let mut log = vec![rec(1, 0.0), rec(9, 0.2)];
        mark_deliveries(&mut log);
        assert_eq!(per_message_success(&log, &[1]).unwrap(), 0.0);
    }

    #[test]
    fn empty_inputs_error() {
        assert_eq!(per_message_success(&[], &[1]), Err(MacError::EmptyLog));
        assert_eq!(per_message_success(&[rec(1, 0.0)], &[]), Err(MacError::NoConsideredTransmitters));
    }

    #[test]
    fn wilson_interval_brackets_point() {
        let (lo, hi) = wilson_interval(85, 100);
        assert!(lo < 0.85 && 0.85 < hi);
        assert!(lo > 0.75 && hi < 0.92);
    }
}
