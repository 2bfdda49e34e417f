//! Grid-based Bayes filter over the intensity maps: uniform prior, Gaussian
//! observation likelihood per beacon, diffusion-only motion prediction, and
//! the MAP position estimate.

use thiserror::Error;

use crate::gpr::IntensityMapSet;
use crate::grid::GridSpec;

#[derive(Debug, Error, PartialEq)]
pub enum BayesError {
    #[error("unknown beacon id {0:#06x} in observation")]
    UnknownBeacon(u16),
    #[error("observation inconsistent with map: posterior vanished")]
    InconsistentObservation,
    #[error("empty grid")]
    EmptyGrid,
    #[error("estimate/truth length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
}

/// Normalized belief raster over the map grid.
#[derive(Debug, Clone, PartialEq)]
pub struct BeliefGrid {
    pub grid: GridSpec,
    pub p: Vec<f64>,
}

impl BeliefGrid {
    /// Total mass; 1 +- 1e-9 for any valid belief.
    pub fn mass(&self) -> f64 {
        self.p.iter().sum()
    }

    fn normalize(&mut self) {
        let m = self.mass();
        if m > 0.0 {
            for v in self.p.iter_mut() {
                *v /= m;
            }
        }
    }
}

/// One RSS reading; only clean readings enter the likelihood.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reading {
    pub beacon_id: u16,
    pub rss: f64,
    pub clean: bool,
}

/// Decoded observations of one update cycle.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub t: f64,
    pub readings: Vec<Reading>,
}

/// Zero-mean Gaussian displacement model per filter step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotionParams {
    /// Std of the per-step displacement, meters.
    pub sigma_move: f64,
}

/// Uniform belief over the grid.
pub fn init_belief(grid: &GridSpec) -> Result<BeliefGrid, BayesError> {
    if grid.is_empty() {
        return Err(BayesError::EmptyGrid);
    }
    let n = grid.len();
    Ok(BeliefGrid { grid: *grid, p: vec![1.0 / n as f64; n] })
}

fn gaussian_log_density(x: f64, mean: f64, var: f64) -> f64 {
    let d = x - mean;
    -0.5 * (d * d / var + var.ln() + (2.0 * std::f64::consts::PI).ln())
}

/// Log-likelihood of the observation at grid cell `i`: sum over clean
/// readings of the Gaussian log density under the per-beacon map. Beacons
/// absent from the observation contribute nothing — a missing beacon is
/// usually a MAC collision, not geometric evidence.
fn log_likelihood_cell(
    maps: &IntensityMapSet,
    beacon_indices: &[(usize, f64)],
    i: usize,
) -> f64 {
    beacon_indices
        .iter()
        .map(|&(b, rss)| gaussian_log_density(rss, maps.mean[b][i], maps.variance[b][i]))
        .sum()
}

fn clean_beacon_indices(
    maps: &IntensityMapSet,
    obs: &Observation,
) -> Result<Vec<(usize, f64)>, BayesError> {
    obs.readings
        .iter()
        .map(|r| maps.beacon_index(r.beacon_id).map_err(|_| BayesError::UnknownBeacon(r.beacon_id)))
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .zip(obs.readings.iter())
        .filter(|(_, r)| r.clean)
        .map(|(b, r)| Ok((b, r.rss)))
        .collect()
}

/// Observation density at one cell position (product of per-beacon Gaussian
/// densities; 1 when no clean readings).
pub fn likelihood(
    maps: &IntensityMapSet,
    obs: &Observation,
    cell: usize,
) -> Result<f64, BayesError> {
    let idx = clean_beacon_indices(maps, obs)?;
    Ok(log_likelihood_cell(maps, &idx, cell).exp())
}

/// Diffusion-only motion prediction: convolve the belief with an isotropic
/// Gaussian of std `sigma_move / resolution` cells, truncated at 4 sigma,
/// then renormalize. `sigma_move = 0` is the identity.
pub fn predict_step(belief: &BeliefGrid, motion: &MotionParams) -> BeliefGrid {
    assert!(motion.sigma_move >= 0.0);
    if motion.sigma_move == 0.0 {
        return belief.clone();
    }
    let sigma_cells = motion.sigma_move / belief.grid.resolution;
    let radius = (4.0 * sigma_cells).ceil() as isize;
    let kernel: Vec<f64> = (-radius..=radius)
        .map(|k| (-0.5 * (k as f64 / sigma_cells).powi(2)).exp())
        .collect();
    let ksum: f64 = kernel.iter().sum();
    let kernel: Vec<f64> = kernel.into_iter().map(|v| v / ksum).collect();

    let (nx, ny) = (belief.grid.nx, belief.grid.ny);
    // separable convolution, x then y, zero boundary
    let mut tmp = vec![0.0; belief.p.len()];
    for iy in 0..ny {
        for ix in 0..nx {
            let v = belief.p[iy * nx + ix];
            if v == 0.0 {
                continue;
            }
            for (kk, &w) in kernel.iter().enumerate() {
                let jx = ix as isize + kk as isize - radius;
                if (0..nx as isize).contains(&jx) {
                    tmp[iy * nx + jx as usize] += v * w;
                }
            }
        }
    }
    let mut out = vec![0.0; belief.p.len()];
    for iy in 0..ny {
        for ix in 0..nx {
            let v = tmp[iy * nx + ix];
            if v == 0.0 {
                continue;
            }
            for (kk, &w) in kernel.iter().enumerate() {
                let jy = iy as isize + kk as isize - radius;
                if (0..ny as isize).contains(&jy) {
                    out[jy as usize * nx + ix] += v * w;
                }
            }
        }
    }
    let mut b = BeliefGrid { grid: belief.grid, p: out };
    b.normalize();
    b
}

/// Measurement update: cell-wise product of prior and likelihood,
/// renormalized. Falls back to log-space with max-subtraction when the
/// linear-space mass underflows.
pub fn update_step(
    belief: &BeliefGrid,
    maps: &IntensityMapSet,
    obs: &Observation,
) -> Result<BeliefGrid, BayesError> {
    let idx = clean_beacon_indices(maps, obs)?;
    if idx.is_empty() {
        return Ok(belief.clone());
    }
    let log_lik: Vec<f64> =
        (0..belief.p.len()).map(|i| log_likelihood_cell(maps, &idx, i)).collect();

    let mut post: Vec<f64> =
        belief.p.iter().zip(log_lik.iter()).map(|(&p, &ll)| p * ll.exp()).collect();
    let mass: f64 = post.iter().sum();
    if mass < 1e-300 {
        // re-run in log space, normalizing via max subtraction
        let max_ll = belief
            .p
            .iter()
            .zip(log_lik.iter())
            .filter(|(&p, _)| p > 0.0)
            .map(|(&p, &ll)| p.ln() + ll)
            .fold(f64::NEG_INFINITY, f64::max);
        if !max_ll.is_finite() {
            return Err(BayesError::InconsistentObservation);
        }
        post = belief
            .p
            .iter()
            .zip(log_lik.iter())
            .map(|(&p, &ll)| if p > 0.0 { (p.ln() + ll - max_ll).exp() } else { 0.0 })
            .collect();
        if post.iter().sum::<f64>() <= 0.0 {
            return Err(BayesError::InconsistentObservation);
        }
    }
    let mut b = BeliefGrid { grid: belief.grid, p: post };
    b.normalize();
    Ok(b)
}

/// MAP estimate: coordinates and mass of the maximal cell; ties break to the
/// smallest linear (row-major) index.
pub fn map_estimate(belief: &BeliefGrid) -> ([f64; 2], f64) {
    let mut best = 0usize;
    for (i, &v) in belief.p.iter().enumerate() {
        if v > belief.p[best] {
            best = i;
        }
    }
    (belief.grid.node_at(best), belief.p[best])
}

/// Accuracy and precision summary of a localization run.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorMetrics {
    pub mean: f64,
    /// Empirical CDF sampled at 1-percentile steps: (percentile, error).
    pub cdf: Vec<(u32, f64)>,
    pub p90: f64,
}

/// Euclidean error statistics between estimates and ground truth.
pub fn error_metrics(
    estimates: &[[f64; 2]],
    truths: &[[f64; 2]],
) -> Result<ErrorMetrics, BayesError> {
    if estimates.len() != truths.len() {
        return Err(BayesError::LengthMismatch(estimates.len(), truths.len()));
    }
    if estimates.is_empty() {
        return Err(BayesError::LengthMismatch(0, 0));
    }
    let mut errors: Vec<f64> = estimates
        .iter()
        .zip(truths.iter())
        .map(|(e, t)| crate::grid::dist2(*e, *t).sqrt())
        .collect();
    let mean = errors.iter().sum::<f64>() / errors.len() as f64;
    errors.sort_by(f64::total_cmp);
    let n = errors.len();
    // nearest-rank percentiles
    let at = |p: u32| errors[((p as usize * n).div_ceil(100)).clamp(1, n) - 1];
    let cdf: Vec<(u32, f64)> = (1..=100).map(|p| (p, at(p))).collect();
    Ok(ErrorMetrics { mean, p90: at(90), cdf })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gpr::{build_maps, FingerprintSet, GpHyperparams};

    fn toy_maps() -> IntensityMapSet {
        let fp = FingerprintSet {
            positions: vec![[0.0, 0.0], [2.0, 0.0], [0.0, 2.0], [2.0, 2.0], [1.0, 1.0]],
            beacon_ids: vec![0x1, 0x2],
            readings: vec![vec![1.0, 0.2, 0.2, 0.05, 0.4], vec![0.05, 0.2, 0.2, 1.0, 0.4]],
        };
        let hp = GpHyperparams { sigma_f2: 0.2, length_scale: 0.8, sigma_n2: 0.002 };
        let grid = GridSpec::covering([0.0, 0.0], [2.0, 2.0], 0.1);
        build_maps(&fp, &hp, &grid).unwrap()
    }

    fn obs(readings: &[(u16, f64)]) -> Observation {
        Observation {
            t: 0.0,
            readings: readings
                .iter()
                .map(|&(beacon_id, rss)| Reading { beacon_id, rss, clean: true })
                .collect(),
        }
    }

    #[test]
    fn init_is_uniform() {
        let grid = GridSpec::covering([0.0, 0.0], [3.0, 3.0], 0.04);
        let b = init_belief(&grid).unwrap();
        assert_eq!(b.p.len(), 5776);
        assert!(b.p.iter().all(|&v| (v - 1.0 / 5776.0).abs() < 1e-15));
        assert!((b.mass() - 1.0).abs() < 1e-9);
        // uniform tie breaks to the first cell
        let (pos, _) = map_estimate(&b);
        assert_eq!(pos, grid.node(0, 0));
    }

    #[test]
    fn empty_observation_is_identity() {
        let maps = toy_maps();
        let b = init_belief(&maps.grid).unwrap();
        let b2 = update_step(&b, &maps, &obs(&[])).unwrap();
        assert_eq!(b.p, b2.p);
        // unclean readings are ignored too
        let mut o = obs(&[(0x1, 0.9)]);
        o.readings[0].clean = false;
        let b3 = update_step(&b, &maps, &o).unwrap();
        assert_eq!(b.p, b3.p);
    }

    #[test]
    fn unknown_beacon_errors() {
        let maps = toy_maps();
        let b = init_belief(&maps.grid).unwrap();
        assert_eq!(
            update_step(&b, &maps, &obs(&[(0xBAD, 0.5)])).unwrap_err(),
            BayesError::UnknownBeacon(0xBAD)
        );
    }

    #[test]
    fn posterior_peaks_near_consistent_cell() {
        let maps = toy_maps();
        let b = init_belief(&maps.grid).unwrap();
        // observation matching the corner (0,0): beacon 1 strong, beacon 2 weak
        let i00 = 0usize;
        let o = obs(&[(0x1, maps.mean[0][i00]), (0x2, maps.mean[1][i00])]);
        let post = update_step(&b, &maps, &o).unwrap();
        let (pos, _) = map_estimate(&post);
        assert!(crate::grid::dist2(pos, [0.0, 0.0]).sqrt() < 0.3, "peak at {pos:?}");
        assert!((post.mass() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn larger_variance_lowers_density_at_mean() {
        let maps = toy_maps();
        // same mean, different variance: density at rss = mean is 1/sqrt(2 pi var)
        let i = 5;
        let o = obs(&[(0x1, maps.mean[0][i])]);
        let d = likelihood(&maps, &o, i).unwrap();
        assert!((d - 1.0 / (2.0 * std::f64::consts::PI * maps.variance[0][i]).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn predict_zero_sigma_is_identity() {
        let maps = toy_maps();
        let b = init_belief(&maps.grid).unwrap();
        let b2 = predict_step(&b, &MotionParams { sigma_move: 0.0 });
        assert_eq!(b.p, b2.p);
    }

    #[test]
    fn predict_spreads_point_mass_symmetrically() {
        let grid = GridSpec::covering([0.0, 0.0], [2.0, 2.0], 0.1);
        let mut b = init_belief(&grid).unwrap();
        b.p.iter_mut().for_each(|v| *v = 0.0);
        let center = (grid.ny / 2) * grid.nx + grid.nx / 2;
        b.p[center] = 1.0;
        let b2 = predict_step(&b, &MotionParams { sigma_move: 0.1 });
        assert!((b2.mass() - 1.0).abs() < 1e-9);
        let (pos, _) = map_estimate(&b2);
        assert_eq!(pos, grid.node_at(center));
        // symmetry along x
        let (cx, cy) = (grid.nx / 2, grid.ny / 2);
        for d in 1..3 {
            let l = b2.p[cy * grid.nx + cx - d];
            let r = b2.p[cy * grid.nx + cx + d];
            assert!((l - r).abs() < 1e-12);
        }
    }

    #[test]
    fn repeated_updates_concentrate_belief() {
        let maps = toy_maps();
        let mut b = init_belief(&maps.grid).unwrap();
        let i = 7 * maps.grid.nx + 7;
        let o = obs(&[(0x1, maps.mean[0][i]), (0x2, maps.mean[1][i])]);
        let mut prev_max = 0.0;
        for _ in 0..10 {
            b = update_step(&b, &maps, &o).unwrap();
            let (_, mass) = map_estimate(&b);
            assert!(mass >= prev_max - 1e-12);
            prev_max = mass;
            assert!((b.mass() - 1.0).abs() < 1e-9);
            assert!(b.p.iter().all(|&v| v >= 0.0));
        }
        // neighboring cells share nearly identical map means, so judge
        // concentration by the mass near the true cell, not one cell's mass
        let truth = maps.grid.node_at(i);
        let (pos, _) = map_estimate(&b);
        assert!(crate::grid::dist2(pos, truth).sqrt() < 0.3, "MAP drifted to {pos:?}");
        let near: f64 = (0..b.p.len())
            .filter(|&j| crate::grid::dist2(maps.grid.node_at(j), truth) < 0.4 * 0.4)
            .map(|j| b.p[j])
            .sum();
        assert!(near > 0.9, "mass near truth only {near}");
    }

    #[test]
    fn map_estimate_point_mass() {
        let grid = GridSpec::covering([0.0, 0.0], [1.0, 1.0], 0.5);
        let mut b = init_belief(&grid).unwrap();
        b.p.iter_mut().for_each(|v| *v = 0.0);
        b.p[4] = 1.0;
        let (pos, mass) = map_estimate(&b);
        assert_eq!(pos, grid.node_at(4));
        assert_eq!(mass, 1.0);
    }

    #[test]
    fn likelihood_scale_invariance_of_map() {
        // multiplying all likelihoods by a constant leaves the argmax alone;
        // realized here as update followed by renormalization being scale-free
        let maps = toy_maps();
        let b = init_belief(&maps.grid).unwrap();
        let i = 3 * maps.grid.nx + 3;
        let o = obs(&[(0x1, maps.mean[0][i])]);
        let p1 = update_step(&b, &maps, &o).unwrap();
        let mut scaled = b.clone();
        scaled.p.iter_mut().for_each(|v| *v *= 1.0); // prior already normalized
        let p2 = update_step(&scaled, &maps, &o).unwrap();
        assert_eq!(map_estimate(&p1).0, map_estimate(&p2).0);
    }

    #[test]
    fn extreme_observation_uses_log_fallback() {
        let maps = toy_maps();
        let b = init_belief(&maps.grid).unwrap();
        // wildly off-map rss drives every linear-space density to zero, but
        // the log-space fallback still produces a proper posterior
        let o = obs(&[(0x1, 1e4), (0x2, -1e4)]);
        let post = update_step(&b, &maps, &o).unwrap();
        assert!((post.mass() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn error_metrics_examples() {
        let m = error_metrics(&[[1.0, 1.0]], &[[1.0, 1.0]]).unwrap();
        assert_eq!(m.mean, 0.0);
        assert!(m.cdf.iter().all(|&(_, e)| e == 0.0));

        let m = error_metrics(&[[0.0, 0.0]], &[[3.0, 4.0]]).unwrap();
        assert_eq!(m.mean, 5.0);
        assert_eq!(m.p90, 5.0);
        assert!(m.cdf.iter().all(|&(_, e)| e == 5.0));

        assert!(error_metrics(&[[0.0, 0.0]], &[]).is_err());
    }
}
