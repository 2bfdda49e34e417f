//! Lambertian optical channel: geometry, DC channel gains, and superposition
//! of concurrent transmitters into one received intensity waveform.
//!
//! All powers and areas are relative units; fingerprinting downstream is
//! model-free, so absolute radiometry is never needed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::phy::{Coupling, Waveform};

#[derive(Debug, Error, PartialEq)]
pub enum ChannelError {
    #[error("degenerate geometry: luminaire and receiver coincide")]
    DegenerateGeometry,
    #[error("mismatched sample rates: {0} vs {1}")]
    SampleRateMismatch(f64, f64),
    #[error("negative gain {0}")]
    NegativeGain(f64),
}

/// A ceiling-mounted LED beacon, facing straight down.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Luminaire {
    /// Beacon payload broadcast by this light.
    pub id: u16,
    pub position: [f64; 3],
    /// Lambertian order m; m = 1 is the first-order model.
    pub lambertian_order: f64,
    /// Relative optical transmit power.
    pub tx_power: f64,
}

/// An upward-facing photodiode receiver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReceiverModel {
    pub position: [f64; 3],
    /// Incidence half-angle beyond which the gain is zero, radians.
    pub fov_half_angle: f64,
    /// Relative detector area.
    pub area: f64,
    /// Std of the additive white Gaussian noise, relative units.
    pub noise_sigma: f64,
}

impl Default for ReceiverModel {
    fn default() -> Self {
        ReceiverModel {
            position: [0.0, 0.0, 0.0],
            fov_half_angle: 60f64.to_radians(),
            area: 1.0,
            noise_sigma: 0.01,
        }
    }
}

/// DC channel gain of the Lambertian line-of-sight link:
/// `(m+1) A cos^m(phi) cos(psi) / (2 pi d^2)`, zero outside the FOV.
///
/// With the fixed down/up normals both angle cosines equal `dz / d`.
pub fn channel_gain(lum: &Luminaire, rx: &ReceiverModel) -> Result<f64, ChannelError> {
    let dx = lum.position[0] - rx.position[0];
    let dy = lum.position[1] - rx.position[1];
    let dz = lum.position[2] - rx.position[2];
    let d2 = dx * dx + dy * dy + dz * dz;
    if d2 == 0.0 {
        return Err(ChannelError::DegenerateGeometry);
    }
    let d = d2.sqrt();
    let cos_angle = dz / d; // cos(phi) = cos(psi) for facing normals
    if cos_angle <= 0.0 {
        return Ok(0.0);
    }
    if cos_angle.acos() > rx.fov_half_angle {
        return Ok(0.0);
    }
    let m = lum.lambertian_order;
    Ok((m + 1.0) * rx.area * cos_angle.powf(m) * cos_angle / (2.0 * std::f64::consts::PI * d2))
}

/// Expected noiseless RSS: transmit power times channel gain. Feeds both the
/// fingerprint generator and the observation ground truth.
pub fn rss_model(lum: &Luminaire, rx: &ReceiverModel) -> Result<f64, ChannelError> {
    Ok(lum.tx_power * channel_gain(lum, rx)?)
}

/// Sample-wise weighted sum of waveforms, zero-padded to the longest, plus
/// i.i.d. Gaussian noise. Deterministic under `seed`; noise is applied once,
/// after summation.
pub fn superpose(
    waveforms: &[(&Waveform, f64)],
    noise_sigma: f64,
    seed: u64,
) -> Result<Waveform, ChannelError> {
    let mut sample_rate = None;
    let mut len = 0usize;
    for (w, gain) in waveforms {
        if *gain < 0.0 {
            return Err(ChannelError::NegativeGain(*gain));
        }
        match sample_rate {
            None => sample_rate = Some(w.sample_rate),
            Some(r) if r != w.sample_rate => {
                return Err(ChannelError::SampleRateMismatch(r, w.sample_rate))
            }
            _ => {}
        }
        len = len.max(w.len());
    }
    let mut samples = vec![0.0; len];
    for (w, gain) in waveforms {
        for (acc, &v) in samples.iter_mut().zip(w.samples.iter()) {
            *acc += gain * v;
        }
    }
    if noise_sigma > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, noise_sigma).expect("valid sigma");
        for v in samples.iter_mut() {
            *v += normal.sample(&mut rng);
        }
    }
    Ok(Waveform {
        samples,
        sample_rate: sample_rate.unwrap_or(0.0),
        coupling: Coupling::Unipolar,
    })
}
