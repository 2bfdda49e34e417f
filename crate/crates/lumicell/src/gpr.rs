//! Gaussian process regression over RSS fingerprints and rasterization into
//! per-beacon intensity mean/variance maps.
//!
//! Isotropic RBF kernel, Cholesky factorization of `K + sigma_n^2 I` with
//! jitter escalation on conditioning failures. Each beacon is fitted
//! independently over the shared design matrix.

use std::io::{self, BufRead, Write};

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use thiserror::Error;

use crate::grid::{dist2, GridSpec};

#[derive(Debug, Error, PartialEq)]
pub enum GprError {
    #[error("ill-conditioned kernel matrix for beacon {beacon:#06x}")]
    IllConditioned { beacon: u16 },
    #[error("empty fingerprint set")]
    EmptyFingerprints,
    #[error("fingerprint length mismatch: beacon {beacon:#06x} has {got} readings, expected {expected}")]
    LengthMismatch { beacon: u16, got: usize, expected: usize },
    #[error("no hyperparameter candidates")]
    NoCandidates,
    #[error("unknown beacon id {0:#06x}")]
    UnknownBeacon(u16),
}

/// RBF kernel hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GpHyperparams {
    /// Signal variance sigma_f^2.
    pub sigma_f2: f64,
    /// Length scale l, meters.
    pub length_scale: f64,
    /// Observation noise variance sigma_n^2.
    pub sigma_n2: f64,
}

impl GpHyperparams {
    pub fn validate(&self) {
        assert!(self.sigma_f2 > 0.0 && self.length_scale > 0.0 && self.sigma_n2 > 0.0);
    }
}

/// `sigma_f^2 exp(-||xp - xq||^2 / (2 l^2))`.
pub fn kernel(xp: [f64; 2], xq: [f64; 2], hp: &GpHyperparams) -> f64 {
    hp.sigma_f2 * (-dist2(xp, xq) / (2.0 * hp.length_scale * hp.length_scale)).exp()
}

/// Survey data: shared 2D positions, one RSS vector per beacon.
#[derive(Debug, Clone, PartialEq)]
pub struct FingerprintSet {
    pub positions: Vec<[f64; 2]>,
    /// Parallel to `readings`.
    pub beacon_ids: Vec<u16>,
    /// `readings[b][i]` is the RSS of beacon `b` at `positions[i]`.
    pub readings: Vec<Vec<f64>>,
}

impl FingerprintSet {
    pub fn validate(&self) -> Result<(), GprError> {
        if self.positions.is_empty() || self.beacon_ids.is_empty() {
            return Err(GprError::EmptyFingerprints);
        }
        for (id, y) in self.beacon_ids.iter().zip(self.readings.iter()) {
            if y.len() != self.positions.len() {
                return Err(GprError::LengthMismatch {
                    beacon: *id,
                    got: y.len(),
                    expected: self.positions.len(),
                });
            }
        }
        Ok(())
    }

    /// Default hyperparameters when selection is skipped: l = 1 m,
    /// sigma_f^2 = pooled sample variance of the readings,
    /// sigma_n^2 = 0.01 sigma_f^2.
    pub fn default_hyperparams(&self) -> GpHyperparams {
        let all: Vec<f64> = self.readings.iter().flatten().copied().collect();
        let n = all.len().max(1) as f64;
        let mean = all.iter().sum::<f64>() / n;
        let var = all.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        let sigma_f2 = if var > 0.0 { var } else { 1.0 };
        GpHyperparams { sigma_f2, length_scale: 1.0, sigma_n2: 0.01 * sigma_f2 }
    }

    /// Candidate grid for [`select_hyperparams`]: length scales spanning the
    /// fingerprint spacing up to the scene scale, noise floored at
    /// 1e-3 sigma_f^2. Fingerprints are averages of a handful of noisy
    /// decodes, so quasi-interpolating noise levels would overfit that
    /// residual noise into map wiggles; the floor keeps the selected model
    /// honest about it.
    pub fn candidate_hyperparams(&self) -> Vec<GpHyperparams> {
        let base = self.default_hyperparams();
        let mut out = Vec::new();
        for l in [0.3, 0.5, 0.7, 1.0, 1.5] {
            for n in [1e-3, 3e-3, 1e-2] {
                out.push(GpHyperparams {
                    sigma_f2: base.sigma_f2,
                    length_scale: l,
                    sigma_n2: n * base.sigma_f2,
                });
            }
        }
        out
    }

    /// Long-format CSV: `x,y,beacon_id,rss`, one row per (position, beacon).
    pub fn write_csv<W: Write>(&self, out: &mut W) -> io::Result<()> {
        writeln!(out, "x,y,beacon_id,rss")?;
        for (b, id) in self.beacon_ids.iter().enumerate() {
            for (i, p) in self.positions.iter().enumerate() {
                writeln!(out, "{},{},{:04x},{}", p[0], p[1], id, self.readings[b][i])?;
            }
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(input: R) -> io::Result<Self> {
        let bad = |line: usize, msg: String| {
            io::Error::new(io::ErrorKind::InvalidData, format!("line {}: {msg}", line + 1))
        };
        let mut positions: Vec<[f64; 2]> = Vec::new();
        let mut beacon_ids: Vec<u16> = Vec::new();
        let mut readings: Vec<Vec<f64>> = Vec::new();
        for (lineno, line) in input.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with('x') {
                continue;
            }
            let parts: Vec<&str> = line.split(',').collect();
            if parts.len() != 4 {
                return Err(bad(lineno, format!("expected 4 fields, got {}", parts.len())));
            }
            let x: f64 = parts[0].trim().parse().map_err(|e| bad(lineno, format!("{e}")))?;
            let y: f64 = parts[1].trim().parse().map_err(|e| bad(lineno, format!("{e}")))?;
            let id = u16::from_str_radix(parts[2].trim(), 16)
                .map_err(|e| bad(lineno, format!("{e}")))?;
            let rss: f64 = parts[3].trim().parse().map_err(|e| bad(lineno, format!("{e}")))?;

            let pi = positions
                .iter()
                .position(|p| p[0] == x && p[1] == y)
                .unwrap_or_else(|| {
                    positions.push([x, y]);
                    positions.len() - 1
                });
            let bi = beacon_ids.iter().position(|&b| b == id).unwrap_or_else(|| {
                beacon_ids.push(id);
                readings.push(Vec::new());
                readings.len() - 1
            });
            if readings[bi].len() != pi {
                return Err(bad(lineno, "rows out of position order".into()));
            }
            readings[bi].push(rss);
        }
        Ok(FingerprintSet { positions, beacon_ids, readings })
    }
}

/// Prediction at one query point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub mean: f64,
    /// Latent variance `k(x*,x*) - k*^T (K + sigma_n^2 I)^-1 k*`.
    pub var_latent: f64,
    /// Latent variance plus observation noise.
    pub var_observation: f64,
}

/// A fitted per-beacon GP model.
#[derive(Debug, Clone)]
pub struct BeaconModel {
    train: Vec<[f64; 2]>,
    hp: GpHyperparams,
    chol: Cholesky<f64, Dyn>,
    /// `(K + sigma_n^2 I)^-1 y`.
    weights: DVector<f64>,
    y: DVector<f64>,
    /// Jitter that was needed to factorize, 0 when none.
    pub jitter: f64,
}

const JITTER_START: f64 = 1e-10;
const JITTER_MAX: f64 = 1e-6;

fn kernel_matrix(x: &[[f64; 2]], hp: &GpHyperparams) -> DMatrix<f64> {
    let n = x.len();
    DMatrix::from_fn(n, n, |i, j| kernel(x[i], x[j], hp))
}

/// Fit one beacon: factorize `K + sigma_n^2 I` and solve for the weights.
/// Escalates jitter from 1e-10 by factors of 10 up to 1e-6 before failing.
pub fn fit_single(
    beacon: u16,
    x: &[[f64; 2]],
    y: &[f64],
    hp: &GpHyperparams,
) -> Result<BeaconModel, GprError> {
    hp.validate();
    let n = x.len();
    let base = {
        let mut k = kernel_matrix(x, hp);
        for i in 0..n {
            k[(i, i)] += hp.sigma_n2;
        }
        k
    };
    let mut jitter = 0.0;
    loop {
        let mut k = base.clone();
        if jitter > 0.0 {
            for i in 0..n {
                k[(i, i)] += jitter;
            }
        }
        if let Some(chol) = Cholesky::new(k) {
            let yv = DVector::from_column_slice(y);
            let weights = chol.solve(&yv);
            return Ok(BeaconModel { train: x.to_vec(), hp: *hp, chol, weights, y: yv, jitter });
        }
        jitter = if jitter == 0.0 { JITTER_START } else { jitter * 10.0 };
        if jitter > JITTER_MAX {
            return Err(GprError::IllConditioned { beacon });
        }
    }
}

impl BeaconModel {
    /// Posterior mean and variance at a query point.
    pub fn predict(&self, x: [f64; 2]) -> Prediction {
        let kstar = DVector::from_fn(self.train.len(), |i, _| kernel(self.train[i], x, &self.hp));
        let mean = kstar.dot(&self.weights);
        let v = self.chol.solve(&kstar);
        let var_latent = (kernel(x, x, &self.hp) - kstar.dot(&v)).max(0.0);
        Prediction { mean, var_latent, var_observation: var_latent + self.hp.sigma_n2 }
    }

    /// Log marginal likelihood of the training data under this model.
    pub fn log_marginal_likelihood(&self) -> f64 {
        let n = self.y.len() as f64;
        let log_det: f64 = self.chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>() * 2.0;
        -0.5 * self.y.dot(&self.weights)
            - 0.5 * log_det
            - 0.5 * n * (2.0 * std::f64::consts::PI).ln()
    }
}

/// Fitted models for every beacon of a fingerprint set.
#[derive(Debug, Clone)]
pub struct GprModelSet {
    pub beacon_ids: Vec<u16>,
    pub models: Vec<BeaconModel>,
    pub hyperparams: GpHyperparams,
}

/// Fit every beacon of the fingerprint set. Beacons are independent; a
/// conditioning failure names the offending beacon.
pub fn fit(fp: &FingerprintSet, hp: &GpHyperparams) -> Result<GprModelSet, GprError> {
    fp.validate()?;
    let mut models = Vec::with_capacity(fp.beacon_ids.len());
    for (id, y) in fp.beacon_ids.iter().zip(fp.readings.iter()) {
        models.push(fit_single(*id, &fp.positions, y, hp)?);
    }
    Ok(GprModelSet { beacon_ids: fp.beacon_ids.clone(), models, hyperparams: *hp })
}

/// Per-beacon mean and variance rasters on a shared grid.
#[derive(Debug, Clone)]
pub struct IntensityMapSet {
    pub grid: GridSpec,
    pub beacon_ids: Vec<u16>,
    /// `mean[b][i]` at grid node `i` (linear index).
    pub mean: Vec<Vec<f64>>,
    /// Predictive observation variance (latent + sigma_n^2), strictly positive.
    pub variance: Vec<Vec<f64>>,
    /// Latent variance, kept for diagnostics.
    pub variance_latent: Vec<Vec<f64>>,
}

impl IntensityMapSet {
    pub fn beacon_index(&self, id: u16) -> Result<usize, GprError> {
        self.beacon_ids.iter().position(|&b| b == id).ok_or(GprError::UnknownBeacon(id))
    }

    /// One beacon's raster as CSV rows `x,y,mean,variance`.
    pub fn write_beacon_csv<W: Write>(&self, out: &mut W, id: u16) -> io::Result<()> {
        let b = self
            .beacon_index(id)
            .map_err(|e| io::Error::new(io::ErrorKind::InvalidInput, e.to_string()))?;
        writeln!(out, "x,y,mean,variance")?;
        for (i, p) in self.grid.nodes().enumerate() {
            writeln!(out, "{},{},{},{}", p[0], p[1], self.mean[b][i], self.variance[b][i])?;
        }
        Ok(())
    }
}

/// Rasterize the per-beacon posterior over all grid nodes.
///
/// Warns (does not fail) when the grid extends beyond the fingerprint hull;
/// border extrapolation is expected to be less accurate.
pub fn build_maps(
    fp: &FingerprintSet,
    hp: &GpHyperparams,
    grid: &GridSpec,
) -> Result<IntensityMapSet, GprError> {
    let models = fit(fp, hp)?;
    let (min, max) = fp.positions.iter().fold(
        ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]),
        |(mut lo, mut hi), p| {
            for a in 0..2 {
                lo[a] = lo[a].min(p[a]);
                hi[a] = hi[a].max(p[a]);
            }
            (lo, hi)
        },
    );
    if !grid.contains(min) || !grid.contains(max) {
        log::warn!("fingerprint hull extends beyond map grid");
    }
    let g00 = grid.node(0, 0);
    let gmax = grid.node(grid.nx - 1, grid.ny - 1);
    if g00[0] < min[0] || g00[1] < min[1] || gmax[0] > max[0] || gmax[1] > max[1] {
        log::warn!(
            "map grid extrapolates beyond the fingerprint hull ([{:?}..{:?}] vs [{:?}..{:?}])",
            g00,
            gmax,
            min,
            max
        );
    }

    let mut mean = Vec::with_capacity(models.models.len());
    let mut variance = Vec::with_capacity(models.models.len());
    let mut variance_latent = Vec::with_capacity(models.models.len());
    for model in &models.models {
        let mut mu = Vec::with_capacity(grid.len());
        let mut var = Vec::with_capacity(grid.len());
        let mut lat = Vec::with_capacity(grid.len());
        for p in grid.nodes() {
            let pred = model.predict(p);
            mu.push(pred.mean);
            var.push(pred.var_observation);
            lat.push(pred.var_latent);
        }
        mean.push(mu);
        variance.push(var);
        variance_latent.push(lat);
    }
    Ok(IntensityMapSet {
        grid: *grid,
        beacon_ids: models.beacon_ids,
        mean,
        variance,
        variance_latent,
    })
}

/// Pick the candidate maximizing the log marginal likelihood summed over
/// beacons. Candidates that fail to factorize are skipped; erring only when
/// all do.
pub fn select_hyperparams(
    fp: &FingerprintSet,
    candidates: &[GpHyperparams],
) -> Result<GpHyperparams, GprError> {
    if candidates.is_empty() {
        return Err(GprError::NoCandidates);
    }
    fp.validate()?;
    let mut best: Option<(f64, GpHyperparams)> = None;
    let mut last_err = None;
    for hp in candidates {
        match fit(fp, hp) {
            Ok(set) => {
                let lml: f64 = set.models.iter().map(|m| m.log_marginal_likelihood()).sum();
                if best.map_or(true, |(b, _)| lml > b) {
                    best = Some((lml, *hp));
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    best.map(|(_, hp)| hp).ok_or_else(|| last_err.unwrap_or(GprError::NoCandidates))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn hp(sigma_f2: f64, l: f64, sigma_n2: f64) -> GpHyperparams {
        GpHyperparams { sigma_f2, length_scale: l, sigma_n2 }
    }

    #[test]
    fn kernel_examples() {
        let h = hp(2.0, 0.5, 0.1);
        assert_eq!(kernel([1.0, 1.0], [1.0, 1.0], &h), 2.0);
        // at distance l: sigma_f^2 e^{-1/2}
        let k = kernel([0.0, 0.0], [0.5, 0.0], &h);
        assert!((k - 2.0 * (-0.5f64).exp()).abs() < 1e-12);
        assert!((k / 2.0 - 0.60653).abs() < 1e-5);
        assert!(kernel([0.0, 0.0], [100.0, 0.0], &h) < 1e-12);
    }

    #[test]
    fn single_point_posterior_shrinks_toward_prior() {
        // n=1: mean at the training point is y * sigma_f^2 / (sigma_f^2 + sigma_n^2)
        let h = hp(1.5, 1.0, 0.3);
        let m = fit_single(1, &[[0.0, 0.0]], &[2.0], &h).unwrap();
        let p = m.predict([0.0, 0.0]);
        assert!((p.mean - 2.0 * 1.5 / 1.8).abs() < 1e-12);
    }

    #[test]
    fn duplicated_point_is_regularized() {
        let h = hp(1.0, 1.0, 0.1);
        assert!(fit_single(1, &[[0.0, 0.0], [0.0, 0.0]], &[1.0, 1.1], &h).is_ok());
    }

    #[test]
    fn permutation_invariance() {
        let h = hp(1.0, 0.7, 0.05);
        let x = vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]];
        let y = vec![1.0, 2.0, 3.0, 4.0];
        let m1 = fit_single(1, &x, &y, &h).unwrap();
        let xp = vec![x[2], x[0], x[3], x[1]];
        let yp = vec![y[2], y[0], y[3], y[1]];
        let m2 = fit_single(1, &xp, &yp, &h).unwrap();
        for q in [[0.5, 0.5], [0.1, 0.9], [2.0, -1.0]] {
            assert!((m1.predict(q).mean - m2.predict(q).mean).abs() < 1e-10);
        }
    }

    #[test]
    fn prior_recovery_far_from_data() {
        let h = hp(1.3, 0.4, 0.01);
        let m = fit_single(1, &[[0.0, 0.0]], &[5.0], &h).unwrap();
        let p = m.predict([100.0, 100.0]);
        assert!(p.mean.abs() < 1e-9);
        assert!((p.var_latent - 1.3).abs() < 1e-9);
    }

    #[test]
    fn interpolation_limit_small_noise() {
        let h = hp(1.0, 0.5, 1e-10);
        let x = vec![[0.0, 0.0], [1.0, 0.0], [0.3, 0.8]];
        let y = vec![0.7, -0.2, 1.4];
        let m = fit_single(1, &x, &y, &h).unwrap();
        for (xi, yi) in x.iter().zip(y.iter()) {
            assert!((m.predict(*xi).mean - yi).abs() < 1e-6);
        }
    }

    #[test]
    fn variances_are_nonnegative() {
        let h = hp(2.0, 0.6, 0.05);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x: Vec<[f64; 2]> =
            (0..20).map(|_| [rng.random_range(0.0..3.0), rng.random_range(0.0..3.0)]).collect();
        let y: Vec<f64> = (0..20).map(|_| rng.random_range(-1.0..1.0)).collect();
        let m = fit_single(1, &x, &y, &h).unwrap();
        for _ in 0..10_000 {
            let q = [rng.random_range(-1.0..4.0), rng.random_range(-1.0..4.0)];
            let p = m.predict(q);
            assert!(p.var_latent >= 0.0);
            assert!(p.var_observation >= h.sigma_n2 - 1e-12);
        }
    }

    #[test]
    fn mean_is_linear_in_y() {
        let h = hp(1.0, 0.8, 0.02);
        let x = vec![[0.0, 0.0], [1.0, 1.0], [2.0, 0.5]];
        let y = vec![1.0, -0.5, 0.25];
        let ys: Vec<f64> = y.iter().map(|v| 3.0 * v).collect();
        let m1 = fit_single(1, &x, &y, &h).unwrap();
        let m2 = fit_single(1, &x, &ys, &h).unwrap();
        for q in [[0.5, 0.2], [1.5, 0.9]] {
            assert!((m2.predict(q).mean - 3.0 * m1.predict(q).mean).abs() < 1e-10);
        }
    }

    #[test]
    fn extra_training_point_never_increases_latent_variance() {
        let h = hp(1.0, 0.7, 0.05);
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..20 {
            let n = rng.random_range(3..10);
            let x: Vec<[f64; 2]> = (0..n)
                .map(|_| [rng.random_range(0.0..3.0), rng.random_range(0.0..3.0)])
                .collect();
            let y: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let m_small = fit_single(1, &x, &y, &h).unwrap();
            let mut x2 = x.clone();
            let mut y2 = y.clone();
            x2.push([rng.random_range(0.0..3.0), rng.random_range(0.0..3.0)]);
            y2.push(rng.random_range(-1.0..1.0));
            let m_big = fit_single(1, &x2, &y2, &h).unwrap();
            for _ in 0..20 {
                let q = [rng.random_range(0.0..3.0), rng.random_range(0.0..3.0)];
                assert!(m_big.predict(q).var_latent <= m_small.predict(q).var_latent + 1e-9);
            }
        }
    }

    #[test]
    fn build_maps_grid_and_identity() {
        let fp = FingerprintSet {
            positions: vec![[0.0, 0.0], [3.0, 0.0], [0.0, 3.0], [3.0, 3.0]],
            beacon_ids: vec![0xA, 0xB],
            readings: vec![vec![1.0, 0.5, 0.5, 0.2], vec![0.0, 0.0, 0.0, 0.0]],
        };
        let h = hp(1.0, 1.0, 0.01);
        let grid = GridSpec::covering([0.0, 0.0], [3.0, 3.0], 0.04);
        let maps = build_maps(&fp, &h, &grid).unwrap();
        assert_eq!((maps.grid.nx, maps.grid.ny), (76, 76));

        // all-zero observations -> zero mean raster
        let b = maps.beacon_index(0xB).unwrap();
        assert!(maps.mean[b].iter().all(|&v| v.abs() < 1e-12));

        // raster value equals a direct predict at the node
        let model = fit_single(0xA, &fp.positions, &fp.readings[0], &h).unwrap();
        let a = maps.beacon_index(0xA).unwrap();
        let i = 40 * maps.grid.nx + 17;
        let p = model.predict(maps.grid.node_at(i));
        assert_eq!(maps.mean[a][i], p.mean);
        assert_eq!(maps.variance[a][i], p.var_observation);
        assert!(maps.variance[a].iter().all(|&v| v > 0.0));
    }

    #[test]
    fn select_hyperparams_single_and_recovery() {
        let fp = FingerprintSet {
            positions: vec![[0.0, 0.0], [1.0, 0.0]],
            beacon_ids: vec![1],
            readings: vec![vec![0.5, 0.7]],
        };
        let only = hp(1.0, 1.0, 0.1);
        assert_eq!(select_hyperparams(&fp, &[only]).unwrap(), only);

        // draw from a GP with known length scale, then recover it
        let true_l = 0.6;
        let true_hp = hp(1.0, true_l, 1e-4);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 60;
        let x: Vec<[f64; 2]> =
            (0..n).map(|_| [rng.random_range(0.0..3.0), rng.random_range(0.0..3.0)]).collect();
        let k = kernel_matrix(&x, &true_hp) + DMatrix::identity(n, n) * 1e-9;
        let chol = Cholesky::new(k).unwrap();
        let z = DVector::from_fn(n, |_, _| {
            // Box-Muller
            let u1: f64 = rng.random_range(1e-12..1.0);
            let u2: f64 = rng.random_range(0.0..1.0);
            (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
        });
        let y = chol.l() * z;
        let fp = FingerprintSet {
            positions: x,
            beacon_ids: vec![1],
            readings: vec![y.iter().copied().collect()],
        };
        let grid: Vec<GpHyperparams> =
            [0.2, 0.4, 0.6, 0.8, 1.0, 1.2].iter().map(|&l| hp(1.0, l, 1e-4)).collect();
        let chosen = select_hyperparams(&fp, &grid).unwrap();
        assert!(
            (chosen.length_scale - true_l).abs() <= 0.2 + 1e-12,
            "chose l={}",
            chosen.length_scale
        );
    }

    #[test]
    fn fingerprint_csv_roundtrip() {
        let fp = FingerprintSet {
            positions: vec![[0.5, 0.25], [1.0, 2.0]],
            beacon_ids: vec![0x0001, 0x00FF],
            readings: vec![vec![0.1, 0.2], vec![0.3, 0.4]],
        };
        let mut buf = Vec::new();
        fp.write_csv(&mut buf).unwrap();
        let back = FingerprintSet::read_csv(&buf[..]).unwrap();
        assert_eq!(back, fp);
    }
}
