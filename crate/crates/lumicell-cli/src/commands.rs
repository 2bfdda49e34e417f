//! One function per subcommand: scenario configs in, CSV/JSON artifacts out.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde_json::json;
use thiserror::Error;

use lumicell::bayes::MotionParams;
use lumicell::gpr::{build_maps, select_hyperparams, GpHyperparams, IntensityMapSet};
use lumicell::grid::GridSpec;
use lumicell::harness::{
    canonical_floor, canonical_testbed, generate_fingerprints, interquartile_range, median,
    rectangle_trajectory, run_broadcast, run_localization, static_experiment, success_histogram,
    write_cdf_csv, write_histogram_csv, write_trajectory_csv, MacMode, Scenario,
};
use lumicell::mac::{simulate_async, simulate_sync, theoretical_success_rate, wilson_interval};
use lumicell::phy::{
    demodulate, encode_frame, layout, modulate, receiver_chain, BeaconFrame, Coupling, PhyConfig,
    Waveform,
};

use crate::config::{ConfigError, Settings};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Acceptance(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Acceptance(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        match e {
            ConfigError::Read { .. } => CliError::Io(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<lumicell::harness::HarnessError> for CliError {
    fn from(e: lumicell::harness::HarnessError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<lumicell::gpr::GprError> for CliError {
    fn from(e: lumicell::gpr::GprError) -> Self {
        CliError::Validation(e.to_string())
    }
}

/// Create `<outdir>/<subcommand>/` and return it.
fn prepare_outdir(outdir: &Path, subcommand: &str) -> Result<PathBuf, CliError> {
    let dir = outdir.join(subcommand);
    fs::create_dir_all(&dir)
        .map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))?;
    Ok(dir)
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |e| CliError::Io(format!("cannot write {}: {e}", path.display()))
}

/// Apply `phy.*` config keys on top of the defaults, then validate.
fn phy_overrides(s: &mut Settings, cfg: &mut PhyConfig) -> Result<(), CliError> {
    cfg.f_mod = s.f64_or("phy.f_mod", cfg.f_mod)?;
    cfg.sample_rate = s.f64_or("phy.sample_rate", cfg.sample_rate)?;
    cfg.dummy_carrier_freq = s.f64_or("phy.dummy_carrier_freq", cfg.dummy_carrier_freq)?;
    cfg.lpf_order = s.usize_or("phy.lpf_order", cfg.lpf_order)?;
    cfg.lpf_cutoff = s.f64_or("phy.lpf_cutoff", cfg.lpf_cutoff)?;
    cfg.fluctuation_limit = s.f64_or("phy.fluctuation_limit", cfg.fluctuation_limit)?;
    cfg.validate().map_err(|e| CliError::Validation(e.to_string()))
}

/// Nearest-rank percentile of an unsorted sample.
fn percentile(values: &[f64], p: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let rank = ((p / 100.0 * v.len() as f64).ceil() as usize).clamp(1, v.len());
    v[rank - 1]
}

fn frame_section(symbol: usize) -> &'static str {
    if symbol < layout::SFD_SYMBOLS {
        "sfd"
    } else if symbol < layout::SFD_SYMBOLS + layout::SYNC_SYMBOLS {
        "sync"
    } else if symbol < layout::DATA_END {
        "data"
    } else {
        "eof"
    }
}

/// Encode/decode `count` random payloads through the full modulate →
/// receiver-chain → demodulate path, optionally sweep single-symbol
/// corruptions, and write a section-annotated sample waveform.
pub fn cmd_phy_roundtrip(
    outdir: &Path,
    seed: u64,
    corrupt: Option<usize>,
    mut s: Settings,
) -> Result<(), CliError> {
    let mut cfg = PhyConfig::default();
    phy_overrides(&mut s, &mut cfg)?;
    let count = s.usize_or("run.count", 1000)?;
    let noise_sigma = s.f64_or("run.noise_sigma", 0.02)?;
    Settings::require_range("run.noise_sigma", noise_sigma, 0.0, 1.0)?;
    if let Some(k) = corrupt {
        if k != 1 {
            return Err(CliError::Validation(format!(
                "--corrupt {k}: only single-symbol corruption (--corrupt 1) is supported"
            )));
        }
    }
    s.finish()?;
    let dir = prepare_outdir(outdir, "phy-roundtrip")?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, noise_sigma)
        .map_err(|e| CliError::Validation(format!("run.noise_sigma: {e}")))?;
    let mut ok = 0usize;
    for _ in 0..count {
        let payload: u16 = rng.random();
        let pad: usize = rng.random_range(0..96);
        let frame = BeaconFrame::new(payload);
        let w = modulate(&encode_frame(&frame), &cfg, 1.0)
            .map_err(|e| CliError::Validation(e.to_string()))?;
        let mut samples = vec![0.0; pad];
        samples.extend(&w.samples);
        samples.extend(std::iter::repeat(0.0).take(60));
        for v in &mut samples {
            *v += noise.sample(&mut rng);
        }
        let wav = Waveform { samples, sample_rate: cfg.sample_rate, coupling: Coupling::Unipolar };
        let filtered =
            receiver_chain(&wav, &cfg).map_err(|e| CliError::Validation(e.to_string()))?;
        let decoded = demodulate(&filtered, &cfg);
        if decoded.len() == 1 && decoded[0].frame.payload() == payload {
            ok += 1;
        }
    }

    // single-symbol corruption sweep: invert every sample of one symbol and
    // count decodes that still report a *different* payload
    let mut false_accepts = 0usize;
    let mut swept = 0usize;
    if corrupt.is_some() {
        let payload: u16 = rng.random();
        let clean = modulate(&encode_frame(&BeaconFrame::new(payload)), &cfg, 1.0)
            .map_err(|e| CliError::Validation(e.to_string()))?;
        for k in 0..layout::FRAME_SYMBOLS {
            let mut w = clean.clone();
            for i in cfg.symbol_boundary(k)..cfg.symbol_boundary(k + 1) {
                w.samples[i] = 1.0 - w.samples[i];
            }
            let filtered =
                receiver_chain(&w, &cfg).map_err(|e| CliError::Validation(e.to_string()))?;
            for d in demodulate(&filtered, &cfg) {
                if d.frame.payload() != payload {
                    false_accepts += 1;
                }
            }
            swept += 1;
        }
    }

    // annotated sample waveform: one frame, section per symbol
    let sample_payload = 0x00A7u16;
    let w = modulate(&encode_frame(&BeaconFrame::new(sample_payload)), &cfg, 1.0)
        .map_err(|e| CliError::Validation(e.to_string()))?;
    let path = dir.join("sample_waveform.csv");
    let mut out = create(&path)?;
    writeln!(out, "sample,t,value,section").map_err(io_err(&path))?;
    let mut symbol = 0usize;
    for (i, v) in w.samples.iter().enumerate() {
        while i >= cfg.symbol_boundary(symbol + 1) {
            symbol += 1;
        }
        writeln!(out, "{i},{:.8e},{v},{}", i as f64 / cfg.sample_rate, frame_section(symbol))
            .map_err(io_err(&path))?;
    }

    let path = dir.join("report.txt");
    let mut out = create(&path)?;
    writeln!(out, "roundtrips_ok={ok}/{count}").map_err(io_err(&path))?;
    if corrupt.is_some() {
        writeln!(out, "corruption_false_accepts={false_accepts}/{swept}").map_err(io_err(&path))?;
    }
    writeln!(out, "sample_payload={sample_payload:#06x}").map_err(io_err(&path))?;
    drop(out);

    println!("phy-roundtrip: {ok}/{count} round-trips ok");
    if corrupt.is_some() {
        println!("phy-roundtrip: {false_accepts}/{swept} false accepts under single-symbol corruption");
    }
    if ok != count {
        return Err(CliError::Acceptance(format!("{} round-trip(s) failed", count - ok)));
    }
    if false_accepts > 0 {
        return Err(CliError::Acceptance(format!(
            "{false_accepts} corrupted frame(s) decoded to a wrong payload"
        )));
    }
    Ok(())
}

/// Sweep the slot count for a fixed number of transmitters and tabulate the
/// theoretical, synchronized-simulated, and asynchronous-simulated success
/// rates side by side, plus a long-format table with confidence intervals.
pub fn cmd_success_rate(outdir: &Path, seed: u64, mut s: Settings) -> Result<(), CliError> {
    let n_tx = s.usize_or("mac.n_tx", 4)?;
    let slots = s.usize_list_or("mac.slots", &[5, 10, 15, 20, 25, 30])?;
    let frames = s.usize_or("mac.frames", 100_000)?;
    if n_tx == 0 {
        return Err(CliError::Validation("config key `mac.n_tx`: must be >= 1".into()));
    }
    if frames == 0 {
        return Err(CliError::Validation("config key `mac.frames`: must be >= 1".into()));
    }
    if slots.iter().any(|&n| n == 0) {
        return Err(CliError::Validation("config key `mac.slots`: every entry must be >= 1".into()));
    }
    s.finish()?;
    let dir = prepare_outdir(outdir, "success-rate")?;

    let rows: Vec<(usize, f64, f64, f64)> = slots
        .iter()
        .map(|&n| {
            let theory = theoretical_success_rate(n as u64, n_tx as u64);
            let sync = simulate_sync(n, n_tx, frames, seed.wrapping_add((n as u64) << 8));
            let asyn = simulate_async(n, n_tx, frames, seed.wrapping_add(((n as u64) << 8) | 1));
            (n, theory, sync, asyn)
        })
        .collect();

    let path = dir.join("success_rate.csv");
    let mut out = create(&path)?;
    writeln!(out, "n_slots,n_tx,frames,theoretical,synchronized,asynchronous")
        .map_err(io_err(&path))?;
    for &(n, theory, sync, asyn) in &rows {
        writeln!(out, "{n},{n_tx},{frames},{theory:.6},{sync:.6},{asyn:.6}")
            .map_err(io_err(&path))?;
    }
    drop(out);

    let path = dir.join("success_rate_long.csv");
    let mut out = create(&path)?;
    writeln!(out, "N,n,mode,frames,success_rate,ci_low,ci_high").map_err(io_err(&path))?;
    for &(n, theory, sync, asyn) in &rows {
        writeln!(out, "{n},{n_tx},theoretical,0,{theory:.6},{theory:.6},{theory:.6}")
            .map_err(io_err(&path))?;
        // each frame contributes n_tx Bernoulli message trials
        let trials = frames * n_tx;
        for (mode, rate) in [("synchronized", sync), ("asynchronous", asyn)] {
            let (lo, hi) = wilson_interval((rate * trials as f64).round() as usize, trials);
            writeln!(out, "{n},{n_tx},{mode},{frames},{rate:.6},{lo:.6},{hi:.6}")
                .map_err(io_err(&path))?;
        }
    }
    drop(out);

    for &(n, theory, sync, asyn) in &rows {
        println!(
            "success-rate: N={n:<3} theory={theory:.4} sync={sync:.4} async={asyn:.4}"
        );
    }
    Ok(())
}

fn parse_mode(name: &str) -> MacMode {
    match name {
        "synchronized" => MacMode::Synchronized,
        "asynchronous" => MacMode::Asynchronous,
        _ => MacMode::Waveform,
    }
}

/// Broadcast over the 81-luminaire floor scenario and histogram the
/// per-point modified success rates.
pub fn cmd_floor_sim(outdir: &Path, seed: u64, mut s: Settings) -> Result<(), CliError> {
    let n_slots = s.usize_or("mac.n_slots", 20)?;
    let mode = s.choice_or(
        "sim.mode",
        &["waveform", "synchronized", "asynchronous"],
        "waveform",
    )?;
    let repetitions = s.usize_or("sim.repetitions", 20)?;
    let stride = s.usize_or("sim.eval_stride", 1)?;
    let noise_sigma = s.f64_or("channel.noise_sigma", 0.01)?;
    Settings::require_range("channel.noise_sigma", noise_sigma, 0.0, 1.0)?;
    if n_slots == 0 {
        return Err(CliError::Validation("config key `mac.n_slots`: must be >= 1".into()));
    }
    if repetitions == 0 {
        return Err(CliError::Validation("config key `sim.repetitions`: must be >= 1".into()));
    }
    if stride == 0 {
        return Err(CliError::Validation("config key `sim.eval_stride`: must be >= 1".into()));
    }
    let mut scenario = canonical_floor(n_slots);
    phy_overrides(&mut s, &mut scenario.phy)?;
    s.finish()?;
    let dir = prepare_outdir(outdir, "floor-sim")?;

    scenario.seed = seed;
    scenario.mode = parse_mode(&mode);
    scenario.repetitions = repetitions;
    scenario.receiver.noise_sigma = noise_sigma;
    scenario.eval_points = scenario.eval_points.into_iter().step_by(stride).collect();
    if scenario.mode == MacMode::Waveform && scenario.eval_points.len() > 400 {
        eprintln!(
            "floor-sim: {} points at waveform level; for a quick pass use \
             --set sim.mode=synchronized or --set sim.eval_stride=4",
            scenario.eval_points.len()
        );
    }

    let trace = run_broadcast(&scenario)?;
    let rates: Vec<f64> = trace.points.iter().map(|p| p.success_rate).collect();

    let path = dir.join("rates.csv");
    let mut out = create(&path)?;
    writeln!(out, "point_x,point_y,success_rate").map_err(io_err(&path))?;
    for pt in &trace.points {
        writeln!(out, "{},{},{:.6}", pt.point[0], pt.point[1], pt.success_rate)
            .map_err(io_err(&path))?;
    }
    drop(out);

    let path = dir.join("histogram.csv");
    let mut out = create(&path)?;
    write_histogram_csv(&mut out, &success_histogram(&rates, 20)).map_err(io_err(&path))?;
    drop(out);

    let med = median(&rates);
    let iqr = interquartile_range(&rates);
    let summary = json!({
        "n_slots": n_slots,
        "mode": mode,
        "n_points": rates.len(),
        "repetitions": repetitions,
        "median": med,
        "iqr": iqr,
        "seed": seed,
    });
    let path = dir.join("summary.json");
    let mut out = create(&path)?;
    writeln!(out, "{}", serde_json::to_string_pretty(&summary).expect("serializable"))
        .map_err(io_err(&path))?;
    drop(out);

    println!(
        "floor-sim: N={n_slots} mode={mode} points={} median={med:.4} iqr={iqr:.4}",
        rates.len()
    );
    Ok(())
}

struct LocalizePipeline {
    fingerprint_hp: GpHyperparams,
    maps: IntensityMapSet,
    scenario: Scenario,
}

/// Survey fingerprints, pick GP hyperparameters by marginal likelihood, and
/// rasterize the intensity maps for one testbed variant.
fn build_pipeline(
    mut scenario: Scenario,
    seed: u64,
    noise_sigma: f64,
    n_slots: usize,
    grid: &GridSpec,
) -> Result<LocalizePipeline, CliError> {
    scenario.seed = seed;
    scenario.receiver.noise_sigma = noise_sigma;
    scenario.n_slots = n_slots;
    let fp = generate_fingerprints(&scenario)?;
    let hp = select_hyperparams(&fp, &fp.candidate_hyperparams())?;
    let maps = build_maps(&fp, &hp, grid)?;
    Ok(LocalizePipeline { fingerprint_hp: hp, maps, scenario })
}

fn write_static_errors(
    path: &Path,
    points: &[[f64; 2]],
    errors: &[f64],
) -> Result<(), CliError> {
    let mut out = create(path)?;
    writeln!(out, "point_x,point_y,mean_error_m").map_err(io_err(path))?;
    for (p, e) in points.iter().zip(errors) {
        writeln!(out, "{},{},{e:.6}", p[0], p[1]).map_err(io_err(path))?;
    }
    Ok(())
}

/// Full localization study on the four-luminaire testbed: fingerprints and
/// intensity maps, static-point accuracy, fixed-point precision, the nested
/// rectangle trajectory, and the light-off robustness variant.
pub fn cmd_localize(outdir: &Path, seed: u64, mut s: Settings) -> Result<(), CliError> {
    let resolution = s.f64_or("map.resolution", 0.04)?;
    Settings::require_range("map.resolution", resolution, 1e-3, 1.0)?;
    let noise_sigma = s.f64_or("channel.noise_sigma", 0.01)?;
    Settings::require_range("channel.noise_sigma", noise_sigma, 0.0, 1.0)?;
    let n_slots = s.usize_or("mac.n_slots", 20)?;
    let steps = s.usize_or("loc.steps", 10)?;
    let runs = s.usize_or("loc.runs", 8)?;
    let fixed_reps = s.usize_or("loc.fixed_reps", 20)?;
    let sigma_move = s.f64_or("loc.sigma_move", 0.15)?;
    Settings::require_range("loc.sigma_move", sigma_move, 1e-6, 10.0)?;
    let traj_step = s.f64_or("loc.traj_step", 0.15)?;
    Settings::require_range("loc.traj_step", traj_step, 1e-3, 3.0)?;
    for (key, v) in [
        ("mac.n_slots", n_slots),
        ("loc.steps", steps),
        ("loc.runs", runs),
        ("loc.fixed_reps", fixed_reps),
    ] {
        if v == 0 {
            return Err(CliError::Validation(format!("config key `{key}`: must be >= 1")));
        }
    }
    s.finish()?;
    let dir = prepare_outdir(outdir, "localize")?;

    let grid = GridSpec::covering([0.0, 0.0], [3.0, 3.0], resolution);
    let motion = MotionParams { sigma_move };

    // baseline: all four luminaires
    let base = build_pipeline(canonical_testbed(true), seed, noise_sigma, n_slots, &grid)?;

    let path = dir.join("fingerprints.csv");
    let fp = generate_fingerprints(&base.scenario)?;
    let mut out = create(&path)?;
    fp.write_csv(&mut out).map_err(io_err(&path))?;
    drop(out);

    for &id in &base.maps.beacon_ids {
        let path = dir.join(format!("map_beacon_{id:04}.csv"));
        let mut out = create(&path)?;
        base.maps.write_beacon_csv(&mut out, id).map_err(io_err(&path))?;
        drop(out);
    }

    let static_errors = static_experiment(&base.scenario, &base.maps, &motion, steps, runs)?;
    write_static_errors(&dir.join("static_errors.csv"), &base.scenario.eval_points, &static_errors)?;
    let mean = static_errors.iter().sum::<f64>() / static_errors.len() as f64;
    let p90 = percentile(&static_errors, 90.0);

    let path = dir.join("static_cdf.csv");
    let mut out = create(&path)?;
    writeln!(out, "percentile,error_m").map_err(io_err(&path))?;
    for p in 1..=100u32 {
        writeln!(out, "{p},{:.6}", percentile(&static_errors, p as f64)).map_err(io_err(&path))?;
    }
    drop(out);

    // fixed-point precision: repeated independent runs at the room center
    let fixed_truth = [1.5, 1.5];
    let traj: Vec<(f64, [f64; 2])> = (0..steps).map(|k| (k as f64, fixed_truth)).collect();
    let mut estimates = Vec::with_capacity(fixed_reps);
    let path = dir.join("fixed_point.csv");
    let mut out = create(&path)?;
    writeln!(out, "rep,x_est,y_est,error_m").map_err(io_err(&path))?;
    for rep in 0..fixed_reps {
        let mut scen = base.scenario.clone();
        scen.seed = seed.wrapping_add(1000 + rep as u64);
        let run = run_localization(&scen, &base.maps, &traj, &motion)?;
        let last = run.records.last().expect("steps >= 1");
        writeln!(out, "{rep},{:.4},{:.4},{:.6}", last.estimate[0], last.estimate[1], last.error)
            .map_err(io_err(&path))?;
        estimates.push(last.estimate);
    }
    drop(out);
    let centroid = estimates.iter().fold([0.0f64; 2], |acc, e| {
        [acc[0] + e[0] / estimates.len() as f64, acc[1] + e[1] / estimates.len() as f64]
    });
    let fixed_std = (estimates
        .iter()
        .map(|e| lumicell::grid::dist2(*e, centroid))
        .sum::<f64>()
        / estimates.len() as f64)
        .sqrt();

    // nested rectangle walk
    let trajectory = rectangle_trajectory(traj_step, 1.0);
    let traj_run = run_localization(&base.scenario, &base.maps, &trajectory, &motion)?;
    let path = dir.join("trajectory.csv");
    let mut out = create(&path)?;
    write_trajectory_csv(&mut out, &traj_run).map_err(io_err(&path))?;
    drop(out);
    let path = dir.join("trajectory_cdf.csv");
    let mut out = create(&path)?;
    write_cdf_csv(&mut out, &traj_run.metrics).map_err(io_err(&path))?;
    drop(out);

    // robustness: light #4 disabled, maps rebuilt from its own survey
    let off = build_pipeline(canonical_testbed(false), seed, noise_sigma, n_slots, &grid)?;
    let off_errors = static_experiment(&off.scenario, &off.maps, &motion, steps, runs)?;
    write_static_errors(&dir.join("light_off_errors.csv"), &off.scenario.eval_points, &off_errors)?;
    let off_mean = off_errors.iter().sum::<f64>() / off_errors.len() as f64;

    let hp = base.fingerprint_hp;
    let summary = json!({
        "mean_m": mean,
        "p90_m": p90,
        "n_points": static_errors.len(),
        "fixed_point_std_m": fixed_std,
        "trajectory_mean_m": traj_run.metrics.mean,
        "trajectory_p90_m": traj_run.metrics.p90,
        "light_off_mean_m": off_mean,
        "hyperparams": {
            "sigma_f2": hp.sigma_f2,
            "length_scale": hp.length_scale,
            "sigma_n2": hp.sigma_n2,
        },
        "seed": seed,
    });
    let path = dir.join("summary.json");
    let mut out = create(&path)?;
    writeln!(out, "{}", serde_json::to_string_pretty(&summary).expect("serializable"))
        .map_err(io_err(&path))?;
    drop(out);

    println!(
        "localize: static mean={mean:.3} m p90={p90:.3} m | fixed-point std={fixed_std:.3} m | \
         trajectory mean={:.3} m | light-off mean={off_mean:.3} m",
        traj_run.metrics.mean
    );
    Ok(())
}
