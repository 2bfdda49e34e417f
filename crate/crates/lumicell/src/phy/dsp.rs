//! Receiver signal chain: DC-bias removal, Butterworth low-pass filtering,
//! and peak normalization into bipolar [-1, 1] form.

use super::layout::FRAME_SYMBOLS;
use super::modem::{Coupling, PhyConfig, PhyError, Waveform};

/// Second-order IIR section, direct form II transposed.
#[derive(Debug, Clone, Copy)]
struct Biquad {
    b0: f64,
    b1: f64,
    b2: f64,
    a1: f64,
    a2: f64,
}

impl Biquad {
    fn run(&self, x: &mut [f64]) {
        let mut z1 = 0.0;
        let mut z2 = 0.0;
        for v in x.iter_mut() {
            let input = *v;
            let out = self.b0 * input + z1;
            z1 = self.b1 * input - self.a1 * out + z2;
            z2 = self.b2 * input - self.a2 * out;
            *v = out;
        }
    }
}

/// Digital Butterworth low-pass as a cascade of bilinear-transformed
/// sections. `order` >= 1, `cutoff` below Nyquist.
pub(crate) fn butterworth_lowpass(x: &mut [f64], order: usize, cutoff: f64, sample_rate: f64) {
    assert!(order >= 1);
    assert!(cutoff > 0.0 && cutoff < sample_rate / 2.0, "cutoff must be below Nyquist");
    let k = (std::f64::consts::PI * cutoff / sample_rate).tan();

    // conjugate pole pairs of the analog prototype: s^2 + c s + 1 with
    // c = 2 sin(pi (2j+1) / (2 order))
    for j in 0..order / 2 {
        let c = 2.0 * ((std::f64::consts::PI * (2 * j + 1) as f64) / (2.0 * order as f64)).sin();
        let norm = 1.0 / (1.0 + c * k + k * k);
        let b0 = k * k * norm;
        Biquad {
            b0,
            b1: 2.0 * b0,
            b2: b0,
            a1: 2.0 * (k * k - 1.0) * norm,
            a2: (1.0 - c * k + k * k) * norm,
        }
        .run(x);
    }
    if order % 2 == 1 {
        // real pole: first-order section folded into biquad form
        let norm = 1.0 / (1.0 + k);
        Biquad { b0: k * norm, b1: k * norm, b2: 0.0, a1: (k - 1.0) * norm, a2: 0.0 }.run(x);
    }
}

/// Subtract a running mean with a window of at least ten frame durations,
/// modeling the TIA DC-bias correction. Inputs shorter than the window get
/// their global mean removed.
fn remove_dc(x: &mut [f64], cfg: &PhyConfig) {
    let n = x.len();
    if n == 0 {
        return;
    }
    let window = (10.0 * FRAME_SYMBOLS as f64 * cfg.samples_per_symbol()).ceil() as usize;
    if n <= window {
        let mean = x.iter().sum::<f64>() / n as f64;
        for v in x.iter_mut() {
            *v -= mean;
        }
        return;
    }
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0);
    let mut acc = 0.0;
    for &v in x.iter() {
        acc += v;
        prefix.push(acc);
    }
    let half = window / 2;
    for i in 0..n {
        let lo = i.saturating_sub(half);
        let hi = (i + half + 1).min(n);
        let mean = (prefix[hi] - prefix[lo]) / (hi - lo) as f64;
        x[i] -= mean;
    }
}

/// Full receiver chain, additionally returning the peak amplitude removed by
/// the normalization step. Multiplying decoded RSS values by the scale
/// restores them to pre-normalization units.
pub fn receiver_chain_scaled(w: &Waveform, cfg: &PhyConfig) -> Result<(Waveform, f64), PhyError> {
    cfg.validate()?;
    if w.is_empty() {
        return Ok((
            Waveform { samples: Vec::new(), sample_rate: w.sample_rate, coupling: Coupling::Bipolar },
            1.0,
        ));
    }
    let mut x = w.samples.clone();
    remove_dc(&mut x, cfg);
    butterworth_lowpass(&mut x, cfg.lpf_order, cfg.lpf_cutoff, w.sample_rate);
    let peak = x.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
    let scale = if peak > 0.0 { peak } else { 1.0 };
    for v in x.iter_mut() {
        *v /= scale;
    }
    Ok((Waveform { samples: x, sample_rate: w.sample_rate, coupling: Coupling::Bipolar }, scale))
}

/// Receiver chain: DC removal, order-`lpf_order` Butterworth low-pass at
/// `lpf_cutoff`, then peak normalization into [-1, 1]. Output is bipolar.
pub fn receiver_chain(w: &Waveform, cfg: &PhyConfig) -> Result<Waveform, PhyError> {
    receiver_chain_scaled(w, cfg).map(|(w, _)| w)
}
