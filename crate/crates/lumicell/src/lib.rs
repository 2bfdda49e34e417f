//! VLC beacon broadcasting and fingerprinting localization, simulated end to end.
//!
//! The stack mirrors a real deployment: LED luminaires broadcast 16-bit beacon
//! identifiers as Manchester-coded OOK waveforms, share the optical medium via
//! framed slotted ALOHA, and a single photodiode receiver decodes the summed
//! intensity signal. On top of the decoded (id, RSS) observations, Gaussian
//! process regression builds per-beacon intensity maps and a grid-based Bayes
//! filter estimates the receiver position.
//!
//! Module map:
//! - [`phy`] — frame codec, OOK modulation, receiver DSP chain, demodulation
//! - [`mac`] — slotted-ALOHA slot selection, collision simulation, analytics
//! - [`channel`] — Lambertian channel gains and waveform superposition
//! - [`gpr`] — GP regression and intensity map construction
//! - [`bayes`] — grid Bayes filter and error metrics
//! - [`harness`] — scenario orchestration (testbed and floor-scale experiments)

pub mod bayes;
pub mod channel;
pub mod gpr;
pub mod grid;
pub mod harness;
pub mod mac;
pub mod phy;
