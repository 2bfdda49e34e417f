//! Scenario orchestration: fingerprint survey generation, beacon
//! broadcasting at waveform or interval granularity, observation extraction,
//! and the canonical testbed / floor-scale experiments.

use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use thiserror::Error;

use crate::bayes::{
    error_metrics, init_belief, map_estimate, predict_step, update_step, BayesError, ErrorMetrics,
    MotionParams, Observation, Reading,
};
use crate::channel::{channel_gain, rss_model, ChannelError, Luminaire, ReceiverModel};
use crate::gpr::{FingerprintSet, IntensityMapSet};
use crate::mac::TransmissionRecord;
use crate::phy::{
    demodulate, encode_frame, receiver_chain_scaled, BeaconFrame, PhyConfig, PhyError,
};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("scenario has no luminaires")]
    NoLuminaires,
    #[error("eval point ({0}, {1}) outside the scene footprint")]
    PointOutsideScene(f64, f64),
    #[error("at point ({point:?}): {source}")]
    Phy { point: [f64; 2], source: PhyError },
    #[error("at point ({point:?}): {source}")]
    Channel { point: [f64; 2], source: ChannelError },
    #[error(transparent)]
    Bayes(#[from] BayesError),
    #[error("no luminaire within FOV at point ({0}, {1})")]
    NothingInFov(f64, f64),
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
}

/// Medium-access regime of a scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MacMode {
    /// Interval-level collisions with perfectly aligned slots.
    Synchronized,
    /// Interval-level collisions with free-running per-light phase offsets.
    Asynchronous,
    /// Full waveform synthesis (aligned slots) through the PHY and DSP chain.
    Waveform,
}

/// Everything needed to run one experiment.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub luminaires: Vec<Luminaire>,
    /// Receiver template; the position is overwritten per evaluation point.
    pub receiver: ReceiverModel,
    pub phy: PhyConfig,
    pub n_slots: usize,
    pub mode: MacMode,
    pub eval_points: Vec<[f64; 2]>,
    pub fingerprint_points: Vec<[f64; 2]>,
    /// MAC frames per evaluation point.
    pub repetitions: usize,
    pub seed: u64,
    /// Scene footprint, [min, max] in x/y.
    pub extent: ([f64; 2], [f64; 2]),
    /// Strongest-signal set size for the modified success rate.
    pub top_k: usize,
}

impl Scenario {
    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.luminaires.is_empty() {
            return Err(HarnessError::NoLuminaires);
        }
        let (lo, hi) = self.extent;
        for p in self.eval_points.iter().chain(self.fingerprint_points.iter()) {
            if p[0] < lo[0] || p[0] > hi[0] || p[1] < lo[1] || p[1] > hi[1] {
                return Err(HarnessError::PointOutsideScene(p[0], p[1]));
            }
        }
        Ok(())
    }

    /// Slot duration in seconds: the packet on-air time.
    pub fn slot_duration(&self) -> f64 {
        crate::phy::layout::FRAME_SYMBOLS as f64 / self.phy.f_mod
    }

    fn receiver_at(&self, point: [f64; 2]) -> ReceiverModel {
        ReceiverModel { position: [point[0], point[1], self.receiver.position[2]], ..self.receiver }
    }

    fn point_seed(&self, index: usize) -> u64 {
        // splitmix-style stream separation keeps parallel points independent
        self.seed.wrapping_add((index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15))
    }
}

/// One decoded beacon message.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decoded {
    pub beacon_id: u16,
    pub rss: f64,
    pub clean: bool,
}

/// Decodes of every MAC frame at one evaluation point, plus the modified
/// success rate against the point's strongest-signal set.
#[derive(Debug, Clone)]
pub struct PointTrace {
    pub point: [f64; 2],
    pub frames: Vec<Vec<Decoded>>,
    pub success_rate: f64,
}

#[derive(Debug, Clone)]
pub struct ObservationTrace {
    pub points: Vec<PointTrace>,
}

/// The hardware testbed: four luminaires at the corners of a 3 m x 3 m area
/// at 2.37 m height, a 6x6 fingerprint grid spaced 0.4 m in the central
/// area, and a 5x5 evaluation grid covering center and border.
///
/// `light4_on = false` removes light #4 (id 4) for the robustness
/// experiment.
pub fn canonical_testbed(light4_on: bool) -> Scenario {
    let h = 2.37;
    // transmit power normalized so the strongest achievable in-scene RSS is 1
    let peak_gain = 2.0 / (2.0 * std::f64::consts::PI * h * h);
    let tx_power = 1.0 / peak_gain;
    let corners = [[0.0, 0.0], [3.0, 0.0], [0.0, 3.0], [3.0, 3.0]];
    let mut luminaires: Vec<Luminaire> = corners
        .iter()
        .enumerate()
        .map(|(i, c)| Luminaire {
            id: i as u16 + 1,
            position: [c[0], c[1], h],
            lambertian_order: 1.0,
            tx_power,
        })
        .collect();
    if !light4_on {
        luminaires.retain(|l| l.id != 4);
    }

    let mut fingerprint_points = Vec::new();
    for iy in 0..6 {
        for ix in 0..6 {
            fingerprint_points.push([0.8 + 0.4 * ix as f64, 0.8 + 0.4 * iy as f64]);
        }
    }
    let mut eval_points = Vec::new();
    for iy in 0..5 {
        for ix in 0..5 {
            eval_points.push([0.3 + 0.6 * ix as f64, 0.3 + 0.6 * iy as f64]);
        }
    }

    Scenario {
        luminaires,
        receiver: ReceiverModel::default(),
        phy: PhyConfig::default(),
        n_slots: 20,
        mode: MacMode::Waveform,
        eval_points,
        fingerprint_points,
        repetitions: 20,
        seed: 0,
        extent: ([0.0, 0.0], [3.0, 3.0]),
        top_k: 4,
    }
}

/// The floor-scale scenario: 81 luminaires on a 9x9 ceiling grid at 3 m
/// pitch and 2.5 m height over a 30 m x 30 m floor, evaluated on a uniform
/// 40x40 ground grid with aligned slots at waveform level.
pub fn canonical_floor(n_slots: usize) -> Scenario {
    let h = 2.5;
    let peak_gain = 2.0 / (2.0 * std::f64::consts::PI * h * h);
    let tx_power = 1.0 / peak_gain;
    let mut luminaires = Vec::with_capacity(81);
    for iy in 0..9 {
        for ix in 0..9 {
            luminaires.push(Luminaire {
                id: (iy * 9 + ix) as u16 + 1,
                position: [3.0 + 3.0 * ix as f64, 3.0 + 3.0 * iy as f64, h],
                lambertian_order: 1.0,
                tx_power,
            });
        }
    }
    let mut eval_points = Vec::with_capacity(1600);
    let pitch = 30.0 / 40.0;
    for iy in 0..40 {
        for ix in 0..40 {
            eval_points.push([(ix as f64 + 0.5) * pitch, (iy as f64 + 0.5) * pitch]);
        }
    }
    Scenario {
        luminaires,
        receiver: ReceiverModel::default(),
        phy: PhyConfig::default(),
        n_slots,
        mode: MacMode::Waveform,
        eval_points,
        fingerprint_points: Vec::new(),
        repetitions: 20,
        seed: 0,
        extent: ([0.0, 0.0], [30.0, 30.0]),
        top_k: 4,
    }
}

/// Ids of the `k` luminaires with the strongest expected RSS at `point`,
/// ties broken by smaller id. Returns the whole in-FOV set with a warning
/// when fewer than `k` lights are visible.
pub fn top_k_beacons(
    scenario: &Scenario,
    point: [f64; 2],
    k: usize,
) -> Result<Vec<u16>, HarnessError> {
    assert!(k >= 1);
    let rx = scenario.receiver_at(point);
    let mut ranked: Vec<(u16, f64)> = Vec::new();
    for lum in &scenario.luminaires {
        let rss = rss_model(lum, &rx)
            .map_err(|source| HarnessError::Channel { point, source })?;
        if rss > 0.0 {
            ranked.push((lum.id, rss));
        }
    }
    if ranked.is_empty() {
        return Err(HarnessError::NothingInFov(point[0], point[1]));
    }
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    if ranked.len() < k {
        log::warn!(
            "only {} of {k} requested luminaires in FOV at ({}, {})",
            ranked.len(),
            point[0],
            point[1]
        );
    }
    Ok(ranked.into_iter().take(k).map(|(id, _)| id).collect())
}

/// Decodes per MAC frame at one point plus the modified success rate.
fn observe_point(
    scenario: &Scenario,
    point: [f64; 2],
    frames: usize,
    seed: u64,
) -> Result<(Vec<Vec<Decoded>>, f64), HarnessError> {
    match scenario.mode {
        MacMode::Waveform => observe_point_waveform(scenario, point, frames, seed),
        MacMode::Synchronized | MacMode::Asynchronous => {
            observe_point_interval(scenario, point, frames, seed)
        }
    }
}

fn in_fov_weights(
    scenario: &Scenario,
    point: [f64; 2],
) -> Result<Vec<(usize, f64)>, HarnessError> {
    let rx = scenario.receiver_at(point);
    let mut out = Vec::new();
    for (i, lum) in scenario.luminaires.iter().enumerate() {
        let g = channel_gain(lum, &rx)
            .map_err(|source| HarnessError::Channel { point, source })?;
        if g > 0.0 {
            out.push((i, g * lum.tx_power));
        }
    }
    if out.is_empty() {
        return Err(HarnessError::NothingInFov(point[0], point[1]));
    }
    Ok(out)
}

fn success_against_top_k(
    scenario: &Scenario,
    point: [f64; 2],
    frames: &[Vec<Decoded>],
) -> Result<f64, HarnessError> {
    let top = top_k_beacons(scenario, point, scenario.top_k)?;
    let mut delivered = 0usize;
    for frame in frames {
        let mut seen = Vec::new();
        for d in frame {
            if d.clean && top.contains(&d.beacon_id) && !seen.contains(&d.beacon_id) {
                seen.push(d.beacon_id);
                delivered += 1;
            }
        }
    }
    Ok(delivered as f64 / (frames.len() * top.len()) as f64)
}

/// Waveform-level broadcast: every light transmits its beacon packet in its
/// drawn slot and the out-of-band dummy carrier elsewhere; the weighted sum
/// goes through the receiver chain and the demodulator.
fn observe_point_waveform(
    scenario: &Scenario,
    point: [f64; 2],
    frames: usize,
    seed: u64,
) -> Result<(Vec<Vec<Decoded>>, f64), HarnessError> {
    let cfg = &scenario.phy;
    cfg.validate().map_err(|source| HarnessError::Phy { point, source })?;
    let weights = in_fov_weights(scenario, point)?;
    let slot_samples = (scenario.slot_duration() * cfg.sample_rate).round() as usize;
    let mac_frame_samples = scenario.n_slots * slot_samples;
    let capture_len = frames * mac_frame_samples;

    // every idle light emits the dummy carrier, so the baseline is the
    // weight-scaled carrier; each light's beacon packet then replaces its
    // own dummy contribution inside its drawn slot
    let total_weight: f64 = weights.iter().map(|(_, w)| w).sum();
    let dummy = crate::phy::dummy_carrier(capture_len, cfg, 1.0);
    let mut samples: Vec<f64> = dummy.samples.iter().map(|&v| v * total_weight).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for &(li, w) in &weights {
        let lum = &scenario.luminaires[li];
        let frame_wave = encode_frame(&BeaconFrame::new(lum.id));
        let frame_wave = crate::phy::modulate(&frame_wave, cfg, 1.0)
            .map_err(|source| HarnessError::Phy { point, source })?;
        for f in 0..frames {
            let slot = rng.random_range(0..scenario.n_slots);
            let start = f * mac_frame_samples + slot * slot_samples;
            for (j, &v) in frame_wave.samples.iter().enumerate() {
                samples[start + j] += w * (v - dummy.samples[start + j]);
            }
            // the tail of the slot past the packet stays on the dummy carrier
        }
    }
    if scenario.receiver.noise_sigma > 0.0 {
        let normal = Normal::new(0.0, scenario.receiver.noise_sigma).expect("valid sigma");
        for v in samples.iter_mut() {
            *v += normal.sample(&mut rng);
        }
    }

    let wave = crate::phy::Waveform {
        samples,
        sample_rate: cfg.sample_rate,
        coupling: crate::phy::Coupling::Unipolar,
    };
    let (bipolar, scale) =
        receiver_chain_scaled(&wave, cfg).map_err(|source| HarnessError::Phy { point, source })?;
    let decoded = demodulate(&bipolar, cfg);

    // payloads outside the scene's id registry are collision debris that
    // slipped past the checksum; a deployed receiver filters against its
    // known beacon registry the same way
    let registry: Vec<u16> = scenario.luminaires.iter().map(|l| l.id).collect();
    let mut per_frame: Vec<Vec<Decoded>> = vec![Vec::new(); frames];
    for d in decoded {
        if !registry.contains(&d.frame.payload()) {
            continue;
        }
        let f = (d.start_sample / mac_frame_samples).min(frames - 1);
        per_frame[f].push(Decoded {
            beacon_id: d.frame.payload(),
            // undo the capture-wide peak normalization so RSS stays
            // comparable across captures and light configurations
            rss: d.rss * scale,
            clean: d.clean,
        });
    }
    let rate = success_against_top_k(scenario, point, &per_frame)?;
    Ok((per_frame, rate))
}

/// Amplitude-aware binary collision rule: a message is destroyed only by an
/// overlapping transmission strong enough that the waveform receiver would
/// lose it — either by bit errors or by tripping the amplitude-fluctuation
/// gate. That threshold is the received-weight ratio at which the
/// fluctuation statistic (w + wi) / (w - wi) reaches the configured limit,
/// making this the noise-free limit of the waveform pipeline. Weaker
/// overlaps ride through (capture effect).
fn mark_deliveries_weighted(
    records: &mut [TransmissionRecord],
    weight: &[f64],
    cfg: &crate::phy::PhyConfig,
) {
    let ratio = (cfg.fluctuation_limit - 1.0) / (cfg.fluctuation_limit + 1.0);
    let mut order: Vec<usize> = (0..records.len()).collect();
    order.sort_by(|&a, &b| records[a].start.total_cmp(&records[b].start));
    for (rank, &i) in order.iter().enumerate() {
        let r = records[i];
        let threshold = ratio * weight[i];
        let destroys = |j: usize| records[j].tx_id != r.tx_id && weight[j] > threshold;
        let mut ok = true;
        for &j in order[..rank].iter().rev() {
            if records[j].end <= r.start {
                break;
            }
            if destroys(j) {
                ok = false;
                break;
            }
        }
        if ok {
            for &j in order[rank + 1..].iter() {
                if records[j].start >= r.end {
                    break;
                }
                if destroys(j) {
                    ok = false;
                    break;
                }
            }
        }
        records[i].delivered = ok;
    }
}

/// Interval-level broadcast: delivery by slot-interval overlap against all
/// in-FOV lights, RSS taken from the noiseless channel model.
fn observe_point_interval(
    scenario: &Scenario,
    point: [f64; 2],
    frames: usize,
    seed: u64,
) -> Result<(Vec<Vec<Decoded>>, f64), HarnessError> {
    let weights = in_fov_weights(scenario, point)?;
    let rx = scenario.receiver_at(point);
    // record times are in slot units, so synchronized slot boundaries are
    // exact integers and touching slots never register as overlapping
    let frame_dur = scenario.n_slots as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut records: Vec<TransmissionRecord> = Vec::with_capacity(weights.len() * frames);
    let mut rec_weight: Vec<f64> = Vec::with_capacity(weights.len() * frames);
    for &(li, w) in &weights {
        let lum = &scenario.luminaires[li];
        let phase = match scenario.mode {
            MacMode::Asynchronous => rng.random_range(0.0..frame_dur),
            _ => 0.0,
        };
        for f in 0..frames {
            let slot = rng.random_range(0..scenario.n_slots);
            let start = phase + (f * scenario.n_slots + slot) as f64;
            records.push(TransmissionRecord {
                tx_id: lum.id,
                frame: f,
                slot_index: slot,
                start,
                end: start + 1.0,
                delivered: false,
            });
            rec_weight.push(w);
        }
    }
    mark_deliveries_weighted(&mut records, &rec_weight, &scenario.phy);

    let mut per_frame: Vec<Vec<Decoded>> = vec![Vec::new(); frames];
    for r in &records {
        if !r.delivered {
            continue;
        }
        let lum = scenario.luminaires.iter().find(|l| l.id == r.tx_id).expect("known id");
        let rss = rss_model(lum, &rx).map_err(|source| HarnessError::Channel { point, source })?;
        per_frame[r.frame].push(Decoded { beacon_id: r.tx_id, rss, clean: true });
    }
    let rate = success_against_top_k(scenario, point, &per_frame)?;
    Ok((per_frame, rate))
}

/// Broadcast at every evaluation point. Points are independent work units
/// with derived seeds, so results do not depend on the parallelism degree.
pub fn run_broadcast(scenario: &Scenario) -> Result<ObservationTrace, HarnessError> {
    scenario.validate()?;
    let points: Result<Vec<PointTrace>, HarnessError> = scenario
        .eval_points
        .par_iter()
        .enumerate()
        .map(|(i, &point)| {
            let (frames, success_rate) =
                observe_point(scenario, point, scenario.repetitions, scenario.point_seed(i))?;
            Ok(PointTrace { point, frames, success_rate })
        })
        .collect();
    Ok(ObservationTrace { points: points? })
}

/// Survey the fingerprint grid: at each point the fingerprint RSS of a
/// beacon is the mean over its clean decodes; beacons never decoded get 0.
pub fn generate_fingerprints(scenario: &Scenario) -> Result<FingerprintSet, HarnessError> {
    scenario.validate()?;
    let mut beacon_ids: Vec<u16> = scenario.luminaires.iter().map(|l| l.id).collect();
    beacon_ids.sort_unstable();

    let rows: Result<Vec<Vec<f64>>, HarnessError> = scenario
        .fingerprint_points
        .par_iter()
        .enumerate()
        .map(|(i, &point)| {
            let seed = scenario.point_seed(i ^ 0x5A5A_0000_0000);
            let (frames, _) = observe_point(scenario, point, scenario.repetitions, seed)?;
            let row = beacon_ids
                .iter()
                .map(|&id| {
                    let clean: Vec<f64> = frames
                        .iter()
                        .flatten()
                        .filter(|d| d.beacon_id == id && d.clean)
                        .map(|d| d.rss)
                        .collect();
                    if clean.is_empty() {
                        0.0
                    } else {
                        clean.iter().sum::<f64>() / clean.len() as f64
                    }
                })
                .collect();
            Ok(row)
        })
        .collect();
    let rows = rows?;

    let readings: Vec<Vec<f64>> = (0..beacon_ids.len())
        .map(|b| rows.iter().map(|r| r[b]).collect())
        .collect();
    Ok(FingerprintSet {
        positions: scenario.fingerprint_points.clone(),
        beacon_ids,
        readings,
    })
}

/// One step of a localization run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocRecord {
    pub t: f64,
    pub estimate: [f64; 2],
    pub truth: [f64; 2],
    pub error: f64,
}

#[derive(Debug, Clone)]
pub struct LocalizationRun {
    pub records: Vec<LocRecord>,
    pub metrics: ErrorMetrics,
}

/// MAC frames observed per localization step. Readings are averaged over the
/// window so a single collided frame does not drop a beacon from the update.
pub const OBSERVATION_FRAMES: usize = 5;

/// Run the Bayes filter along a trajectory of timed true positions: one
/// observation cycle ([`OBSERVATION_FRAMES`] MAC frames, clean readings
/// averaged per beacon) per step, diffusion prediction, then the measurement
/// update and MAP estimate.
pub fn run_localization(
    scenario: &Scenario,
    maps: &IntensityMapSet,
    trajectory: &[(f64, [f64; 2])],
    motion: &MotionParams,
) -> Result<LocalizationRun, HarnessError> {
    scenario.validate()?;
    let mut belief = init_belief(&maps.grid)?;
    let mut records = Vec::with_capacity(trajectory.len());
    for (step, &(t, truth)) in trajectory.iter().enumerate() {
        let seed = scenario.point_seed(step ^ 0x0C0C_0000_0000);
        let (frames, _) = observe_point(scenario, truth, OBSERVATION_FRAMES, seed)?;
        let mut sums: std::collections::BTreeMap<u16, (f64, usize)> = Default::default();
        for d in frames.iter().flatten().filter(|d| d.clean) {
            let e = sums.entry(d.beacon_id).or_insert((0.0, 0));
            e.0 += d.rss;
            e.1 += 1;
        }
        let readings: Vec<Reading> = sums
            .into_iter()
            .map(|(id, (sum, n))| Reading { beacon_id: id, rss: sum / n as f64, clean: true })
            .collect();
        let obs = Observation { t, readings };
        belief = predict_step(&belief, motion);
        belief = update_step(&belief, maps, &obs)?;
        let (estimate, _) = map_estimate(&belief);
        let error = crate::grid::dist2(estimate, truth).sqrt();
        records.push(LocRecord { t, estimate, truth, error });
    }
    let estimates: Vec<[f64; 2]> = records.iter().map(|r| r.estimate).collect();
    let truths: Vec<[f64; 2]> = records.iter().map(|r| r.truth).collect();
    let metrics = error_metrics(&estimates, &truths)?;
    Ok(LocalizationRun { records, metrics })
}

/// Static-point accuracy experiment: for every eval point, run `runs`
/// independently seeded filter runs of `steps` stationary updates each and
/// report the per-point mean of the final-step errors. Pooling several runs
/// de-noises the figure enough that small accuracy shifts — such as a
/// disabled luminaire — stand out above single-run jitter.
pub fn static_experiment(
    scenario: &Scenario,
    maps: &IntensityMapSet,
    motion: &MotionParams,
    steps: usize,
    runs: usize,
) -> Result<Vec<f64>, HarnessError> {
    scenario.validate()?;
    if steps == 0 || runs == 0 {
        return Err(HarnessError::InvalidScenario("steps and runs must be >= 1".into()));
    }
    scenario
        .eval_points
        .par_iter()
        .enumerate()
        .map(|(i, &p)| {
            let traj: Vec<(f64, [f64; 2])> = (0..steps).map(|k| (k as f64, p)).collect();
            let mut acc = 0.0;
            for r in 0..runs {
                let mut s = scenario.clone();
                s.seed = scenario.point_seed((i * runs + r) ^ 0x5EED_0000_0000);
                let run = run_localization(&s, maps, &traj, motion)?;
                acc += run.records.last().expect("steps >= 1").error;
            }
            Ok(acc / runs as f64)
        })
        .collect()
}

/// Waypoints of two nested closed rectangles walked at constant step length,
/// the reference trajectory of the real-time experiment.
pub fn rectangle_trajectory(step_len: f64, dt: f64) -> Vec<(f64, [f64; 2])> {
    let rects = [([0.6, 0.6], [2.4, 2.4]), ([1.0, 1.0], [2.0, 2.0])];
    let mut points: Vec<[f64; 2]> = Vec::new();
    for (lo, hi) in rects {
        let corners =
            [[lo[0], lo[1]], [hi[0], lo[1]], [hi[0], hi[1]], [lo[0], hi[1]], [lo[0], lo[1]]];
        for seg in corners.windows(2) {
            let (a, b) = (seg[0], seg[1]);
            let len = crate::grid::dist2(a, b).sqrt();
            let n = (len / step_len).ceil() as usize;
            for k in 0..n {
                let s = k as f64 / n as f64;
                points.push([a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])]);
            }
        }
        // close the loop explicitly
        points.push([lo[0], lo[1]]);
    }
    points.into_iter().enumerate().map(|(i, p)| (i as f64 * dt, p)).collect()
}

/// Histogram of per-point success rates over [0, 1].
pub fn success_histogram(rates: &[f64], bins: usize) -> Vec<(f64, f64, usize)> {
    let mut counts = vec![0usize; bins];
    for &r in rates {
        let b = ((r * bins as f64) as usize).min(bins - 1);
        counts[b] += 1;
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(i, c)| (i as f64 / bins as f64, (i + 1) as f64 / bins as f64, c))
        .collect()
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

pub fn interquartile_range(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n < 4 {
        return 0.0;
    }
    v[(3 * n) / 4] - v[n / 4]
}

/// Trace CSV: `point_x,point_y,frame,beacon_id,rss,clean`.
pub fn write_trace_csv<W: Write>(out: &mut W, trace: &ObservationTrace) -> io::Result<()> {
    writeln!(out, "point_x,point_y,frame,beacon_id,rss,clean")?;
    for pt in &trace.points {
        for (f, frame) in pt.frames.iter().enumerate() {
            for d in frame {
                writeln!(
                    out,
                    "{},{},{},{:04x},{:.6e},{}",
                    pt.point[0], pt.point[1], f, d.beacon_id, d.rss, d.clean
                )?;
            }
        }
    }
    Ok(())
}

/// Histogram CSV: `bin_low,bin_high,count`.
pub fn write_histogram_csv<W: Write>(
    out: &mut W,
    hist: &[(f64, f64, usize)],
) -> io::Result<()> {
    writeln!(out, "bin_low,bin_high,count")?;
    for (lo, hi, c) in hist {
        writeln!(out, "{lo},{hi},{c}")?;
    }
    Ok(())
}

/// Trajectory CSV: `t,x_est,y_est,x_true,y_true,error`.
pub fn write_trajectory_csv<W: Write>(out: &mut W, run: &LocalizationRun) -> io::Result<()> {
    writeln!(out, "t,x_est,y_est,x_true,y_true,error")?;
    for r in &run.records {
        writeln!(
            out,
            "{},{:.4},{:.4},{:.4},{:.4},{:.6}",
            r.t, r.estimate[0], r.estimate[1], r.truth[0], r.truth[1], r.error
        )?;
    }
    Ok(())
}

/// CDF CSV: `percentile,error_m`.
pub fn write_cdf_csv<W: Write>(out: &mut W, metrics: &ErrorMetrics) -> io::Result<()> {
    writeln!(out, "percentile,error_m")?;
    for (p, e) in &metrics.cdf {
        writeln!(out, "{p},{e:.6}")?;
    }
    Ok(())
}
