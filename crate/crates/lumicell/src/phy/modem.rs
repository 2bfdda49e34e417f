//! Waveform synthesis: OOK modulation of symbol frames and the out-of-band
//! dummy carrier transmitted during idle slots.

use thiserror::Error;

use super::frame::SymbolFrame;
use super::layout::FRAME_SYMBOLS;

#[derive(Debug, Error, PartialEq)]
pub enum PhyError {
    #[error("invalid PHY config: {0}")]
    InvalidConfig(String),
    #[error("amplitude must be positive, got {0}")]
    NonPositiveAmplitude(f64),
}

/// Signal polarity convention of a [`Waveform`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Coupling {
    /// Optical intensity, samples >= 0.
    Unipolar,
    /// AC-coupled receiver output, normalized within [-1, 1].
    Bipolar,
}

/// A sampled signal. The unit of PHY synthesis and decoding.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    pub samples: Vec<f64>,
    pub sample_rate: f64,
    pub coupling: Coupling,
}

impl Waveform {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// PHY timing and filter parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhyConfig {
    /// Modulation clock, Hz.
    pub f_mod: f64,
    /// ADC sample rate, Hz.
    pub sample_rate: f64,
    /// Symbol clock of the idle-slot dummy carrier, Hz.
    pub dummy_carrier_freq: f64,
    /// Butterworth low-pass order of the receiver chain.
    pub lpf_order: usize,
    /// Butterworth cutoff, Hz.
    pub lpf_cutoff: f64,
    /// Intra-frame amplitude fluctuation (max/min pair amplitude) above which
    /// a decoded frame's RSS is flagged unclean.
    pub fluctuation_limit: f64,
}

impl Default for PhyConfig {
    fn default() -> Self {
        PhyConfig {
            f_mod: 10_000.0,
            sample_rate: 48_000.0,
            dummy_carrier_freq: 100_000.0,
            lpf_order: 4,
            lpf_cutoff: 20_000.0,
            fluctuation_limit: 1.5,
        }
    }
}

impl PhyConfig {
    pub fn validate(&self) -> Result<(), PhyError> {
        if !(self.f_mod > 0.0) {
            return Err(PhyError::InvalidConfig(format!("f_mod must be > 0, got {}", self.f_mod)));
        }
        if !(self.sample_rate > 2.0 * self.f_mod) {
            return Err(PhyError::InvalidConfig(format!(
                "sample_rate {} must exceed 2 * f_mod {}",
                self.sample_rate, self.f_mod
            )));
        }
        if !(self.dummy_carrier_freq > self.lpf_cutoff && self.lpf_cutoff > self.f_mod) {
            return Err(PhyError::InvalidConfig(format!(
                "need dummy_carrier_freq {} > lpf_cutoff {} > f_mod {}",
                self.dummy_carrier_freq, self.lpf_cutoff, self.f_mod
            )));
        }
        if self.lpf_order == 0 {
            return Err(PhyError::InvalidConfig("lpf_order must be >= 1".into()));
        }
        if !(self.fluctuation_limit >= 1.0) {
            return Err(PhyError::InvalidConfig(format!(
                "fluctuation_limit must be >= 1, got {}",
                self.fluctuation_limit
            )));
        }
        Ok(())
    }

    /// Samples per modulation symbol (fractional).
    pub fn samples_per_symbol(&self) -> f64 {
        self.sample_rate / self.f_mod
    }

    /// Sample index of the boundary before symbol `k` (per-boundary rounding,
    /// no resampling).
    pub fn symbol_boundary(&self, k: usize) -> usize {
        (k as f64 * self.samples_per_symbol()).floor() as usize
    }

    /// On-air sample count of one full frame.
    pub fn frame_samples(&self) -> usize {
        self.symbol_boundary(FRAME_SYMBOLS)
    }
}

/// OOK-modulate a symbol frame: each symbol held for one modulation clock
/// period, high = `amplitude`, low = 0.
pub fn modulate(sf: &SymbolFrame, cfg: &PhyConfig, amplitude: f64) -> Result<Waveform, PhyError> {
    cfg.validate()?;
    if !(amplitude > 0.0) {
        return Err(PhyError::NonPositiveAmplitude(amplitude));
    }
    Ok(modulate_symbols(sf.symbols(), cfg, amplitude))
}

pub(crate) fn modulate_symbols(symbols: &[bool], cfg: &PhyConfig, amplitude: f64) -> Waveform {
    let mut samples = Vec::with_capacity(cfg.symbol_boundary(symbols.len()));
    for (k, &level) in symbols.iter().enumerate() {
        let n = cfg.symbol_boundary(k + 1) - cfg.symbol_boundary(k);
        let v = if level { amplitude } else { 0.0 };
        samples.extend(std::iter::repeat(v).take(n));
    }
    Waveform { samples, sample_rate: cfg.sample_rate, coupling: Coupling::Unipolar }
}

/// Idle-slot dummy carrier as seen after the ADC: repeated "01" symbols at
/// `dummy_carrier_freq`, 50% duty cycle, mean intensity `amplitude / 2` —
/// the same mean as Manchester-coded data at the same amplitude.
///
/// The carrier clock sits far above Nyquist at the capture rate, and any
/// real converter's anti-alias stage suppresses it before the rate
/// reduction, leaving only the DC mean in the samples. Naive point sampling
/// would instead fold the carrier fundamental into the signal band, where no
/// receiver-side filter could undo it.
pub fn dummy_carrier(duration_samples: usize, cfg: &PhyConfig, amplitude: f64) -> Waveform {
    debug_assert!(cfg.dummy_carrier_freq > cfg.sample_rate / 2.0);
    Waveform {
        samples: vec![amplitude * 0.5; duration_samples],
        sample_rate: cfg.sample_rate,
        coupling: Coupling::Unipolar,
    }
}

#[cfg(test)]
mod tests {
    use super::super::frame::{encode_frame, BeaconFrame};
    use super::*;

    #[test]
    fn frame_sample_count_at_defaults() {
        // 56 symbols * 4.8 samples/symbol -> 268 samples by boundary rounding
        let cfg = PhyConfig::default();
        let w = modulate(&encode_frame(&BeaconFrame::new(0x1234)), &cfg, 1.0).unwrap();
        assert_eq!(w.len(), 268);
        assert_eq!(cfg.frame_samples(), 268);
        // per-symbol counts follow floor((k+1)*4.8) - floor(k*4.8)
        for k in 0..56 {
            let n = cfg.symbol_boundary(k + 1) - cfg.symbol_boundary(k);
            assert!(n == 4 || n == 5);
        }
    }

    #[test]
    fn single_high_symbol() {
        let cfg = PhyConfig::default();
        let w = modulate_symbols(&[true], &cfg, 1.0);
        assert_eq!(w.len(), 4); // floor(4.8)
        assert!(w.samples.iter().all(|&s| s == 1.0));
    }

    #[test]
    fn all_low_symbols_are_zero() {
        let cfg = PhyConfig::default();
        let w = modulate_symbols(&[false; 10], &cfg, 2.5);
        assert!(w.samples.iter().all(|&s| s == 0.0));
    }

    #[test]
    fn rejects_bad_config_and_amplitude() {
        let sf = encode_frame(&BeaconFrame::new(1));
        let mut cfg = PhyConfig::default();
        cfg.sample_rate = 15_000.0; // below 2 * f_mod
        assert!(modulate(&sf, &cfg, 1.0).is_err());
        assert!(modulate(&sf, &PhyConfig::default(), 0.0).is_err());
    }

    #[test]
    fn dummy_carrier_empty_and_mean() {
        let cfg = PhyConfig::default();
        assert!(dummy_carrier(0, &cfg, 1.0).is_empty());

        let w = dummy_carrier(48_000, &cfg, 1.0);
        let mean = w.samples.iter().sum::<f64>() / w.len() as f64;
        // mean intensity amplitude/2, matching the Manchester data mean
        assert!((mean - 0.5).abs() < 1e-12, "mean {mean}");
        assert!(w.samples.iter().all(|&s| (0.0..=1.0).contains(&s)));
    }
}
