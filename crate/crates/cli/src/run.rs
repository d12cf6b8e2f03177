use std::fmt;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;

use nvpol::bath::{nn_dipolar_coupling, sample_bath, sample_bath_with, BOND_LENGTH};
use nvpol::config::RunConfig;
use nvpol::hamiltonian::SystemSpec;
use nvpol::instrument::{angle_enhancement_sweep, effective_rabi, SweepInputs};
use nvpol::output::{
    aggregate_traces, render_curve_csv, render_json, render_trace_csv, CurveResult, Manifest,
    SimulateResult,
};
use nvpol::protocols::{
    ise_transfer_numeric, lz_probability, lz_single_crossing_numeric, novel_transfer,
    pbar_extremum_search, polarization_cycle_run, NovelSequence, PolarizationTrace, Protocol,
    SweepPropagationOptions,
};

/// Command failure with the process exit code it maps to:
/// 2 validation, 3 oracle failure, 1 runtime.
#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Oracle(String),
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Oracle(_) => 3,
            CliError::Runtime(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "validation error: {m}"),
            CliError::Oracle(m) => write!(f, "oracle failure: {m}"),
            CliError::Runtime(m) => write!(f, "error: {m}"),
        }
    }
}

impl From<nvpol::Error> for CliError {
    fn from(e: nvpol::Error) -> Self {
        match e {
            nvpol::Error::Io(io) => CliError::Runtime(io.to_string()),
            other => CliError::Validation(other.to_string()),
        }
    }
}

/// Which result bodies to write.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
    Both,
}

impl OutputFormat {
    fn csv(self) -> bool {
        matches!(self, OutputFormat::Csv | OutputFormat::Both)
    }
    fn json(self) -> bool {
        matches!(self, OutputFormat::Json | OutputFormat::Both)
    }
}

fn write_file(path: &Path, body: &str) -> Result<(), CliError> {
    std::fs::write(path, body)
        .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))
}

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", dir.display())))
}

fn write_manifest(config: &RunConfig, out_dir: &Path, started: Instant) -> Result<(), CliError> {
    let manifest = Manifest {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        manifest_hash: config.manifest_hash(),
        master_seed: config.master_seed,
        wall_time_ms: started.elapsed().as_secs_f64() * 1e3,
        config: config.clone(),
    };
    write_file(&out_dir.join("manifest.json"), &render_json(&manifest)?)
}

/// Files produced by a command.
#[derive(Debug, Default)]
pub struct Artifacts {
    pub files: Vec<PathBuf>,
}

/// Run the configured protocol over the configured seeds and write the trace
/// CSV, result JSON and manifest. Identical config and seed produce
/// byte-identical CSV/JSON bodies at any thread count.
pub fn cmd_simulate(config: &RunConfig, out_dir: &Path, format: OutputFormat) -> Result<Artifacts, CliError> {
    let started = Instant::now();
    config.validate()?;
    let spec = config.system_spec()?;
    let mut protocol = config.protocol_instance()?;

    // the resonator filters the swept drive amplitude at the resonance
    if let Protocol::Ise(ref mut sweep) = protocol {
        let resonator = config.resonator()?;
        sweep.rabi = effective_rabi(&spec, &resonator)?;
    }
    let mut warnings = Vec::new();
    if let Protocol::Novel(ref seq) = protocol {
        warnings.extend(seq.warnings());
    }

    let engine = config.engine_params();
    let bath_params = config.bath_params();
    let seeds = config.bath_seeds();

    let traces: Vec<Result<PolarizationTrace, CliError>> = seeds
        .par_iter()
        .map(|&seed| {
            let bath = sample_bath_with(
                seed,
                bath_params.radius_nm,
                bath_params.abundance,
                bath_params.nv_axis,
                bath_params.frozen_threshold_mhz,
            )?;
            Ok(polarization_cycle_run(&bath, &spec, &protocol, &engine)?)
        })
        .collect();
    let traces: Vec<PolarizationTrace> = traces.into_iter().collect::<Result<_, _>>()?;

    let stats = aggregate_traces(&traces);
    let finals: Vec<f64> = traces.iter().map(|t| t.final_bulk()).collect();
    let n = finals.len() as f64;
    let final_mean = finals.iter().sum::<f64>() / n;
    let final_stderr = if finals.len() > 1 {
        let var = finals.iter().map(|v| (v - final_mean).powi(2)).sum::<f64>() / (n - 1.0);
        (var / n).sqrt()
    } else {
        0.0
    };
    let result = SimulateResult {
        manifest_hash: config.manifest_hash(),
        protocol: match config.protocol {
            nvpol::config::ProtocolKind::Novel => "novel".into(),
            nvpol::config::ProtocolKind::Ise => "ise".into(),
        },
        n_seeds: seeds.len(),
        n_cycles: config.n_cycles,
        cycle_time_ms: traces.first().map(|t| t.cycle_time_ms).unwrap_or(0.0),
        final_bulk_mean: final_mean,
        final_bulk_stderr: final_stderr,
        final_frozen_core_mean: stats.last().map(|s| s.frozen_core_mean).unwrap_or(0.0),
        per_seed_final_bulk: finals,
        per_cycle: stats.clone(),
        per_spin_final: if config.include_per_spin {
            Some(traces.iter().map(|t| t.per_cycle.last().unwrap().per_spin.clone()).collect())
        } else {
            None
        },
        warnings,
    };

    ensure_dir(out_dir)?;
    let mut artifacts = Artifacts::default();
    if format.csv() {
        let path = out_dir.join("trace.csv");
        write_file(&path, &render_trace_csv(&stats, &result.manifest_hash))?;
        artifacts.files.push(path);
    }
    if format.json() {
        let path = out_dir.join("result.json");
        write_file(&path, &render_json(&result)?)?;
        artifacts.files.push(path);
    }
    write_manifest(config, out_dir, started)?;
    artifacts.files.push(out_dir.join("manifest.json"));
    Ok(artifacts)
}

/// Run the enhancement curve over the configured angles and write the curve
/// CSV, JSON summary and manifest.
pub fn cmd_angle_sweep(
    config: &RunConfig,
    out_dir: &Path,
    format: OutputFormat,
    disable_resonator: bool,
) -> Result<Artifacts, CliError> {
    let started = Instant::now();
    let mut config = config.clone();
    if disable_resonator {
        config.resonator_hwhm_mhz = f64::INFINITY;
    }
    config.validate()?;
    if config.angles_deg.len() < 2 {
        return Err(CliError::Validation(format!(
            "angle sweep needs at least 2 angles, got {} (angles_deg)",
            config.angles_deg.len()
        )));
    }

    let spec = config.system_spec()?;
    let sweep = config.ise_sweep()?;
    let bath = config.bath_params();
    let engine = config.engine_params();
    let resonator = config.resonator()?;
    let laser = config.laser();
    let seeds = config.bath_seeds();
    let angles_rad: Vec<f64> = config.angles_deg.iter().map(|d| d.to_radians()).collect();

    let inputs = SweepInputs {
        base_spec: &spec,
        sweep: &sweep,
        bath: &bath,
        bath_seeds: &seeds,
        engine: &engine,
        resonator: &resonator,
        laser: &laser,
    };
    let curve = angle_enhancement_sweep(&angles_rad, &inputs)?;
    let result = CurveResult { manifest_hash: config.manifest_hash(), curve };

    ensure_dir(out_dir)?;
    let mut artifacts = Artifacts::default();
    if format.csv() {
        let path = out_dir.join("curve.csv");
        write_file(&path, &render_curve_csv(&result.curve, &result.manifest_hash))?;
        artifacts.files.push(path);
    }
    if format.json() {
        let path = out_dir.join("curve.json");
        write_file(&path, &render_json(&result)?)?;
        artifacts.files.push(path);
    }
    write_manifest(&config, out_dir, started)?;
    artifacts.files.push(out_dir.join("manifest.json"));
    Ok(artifacts)
}

/// One oracle check result.
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// Run the built-in oracle suite and print one line per check.
///
/// Checks: the Landau-Zener analytic-vs-numeric grid, the transfer-maximum
/// location, unitarity of swept propagation, diffusion conservation, the
/// spin-lock flip-flop period, and the dipolar-coupling scales.
pub fn cmd_validate(config: &RunConfig) -> Result<Vec<Check>, CliError> {
    config.validate()?;
    let mut checks = Vec::new();
    let opts = SweepPropagationOptions::default();

    // Landau-Zener grid
    let mut max_dev: f64 = 0.0;
    for mu in [0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0] {
        let numeric = lz_single_crossing_numeric(mu, 1.0, &opts)?;
        let analytic = lz_probability(mu)?;
        max_dev = max_dev.max((numeric - analytic).abs());
    }
    checks.push(Check {
        name: "lz_single_crossing_grid",
        passed: max_dev <= 0.02,
        detail: format!("max |analytic - numeric| = {max_dev:.2e} (tolerance 0.02)"),
    });

    // transfer maximum
    let (mu_star, pbar_max) = pbar_extremum_search();
    let mu_expected = std::f64::consts::LN_2 / (2.0 * std::f64::consts::PI);
    let mu_err = (mu_star - mu_expected).abs();
    let pbar_err = (pbar_max - 0.5).abs();
    checks.push(Check {
        name: "transfer_maximum",
        passed: mu_err <= 1e-9 && pbar_err <= 1e-9,
        detail: format!("|μ* - ln2/2π| = {mu_err:.2e}, |max - 0.5| = {pbar_err:.2e} (tolerance 1e-9)"),
    });

    // flip-flop at exact matching
    let spec = SystemSpec { a_x: 0.1, ..Default::default() };
    let seq = NovelSequence { lock_rabi: spec.nuclear_larmor(), lock_duration: 10.0, laser_continuous: true };
    let transfer = novel_transfer(&spec, &seq)?;
    checks.push(Check {
        name: "flip_flop_full_transfer",
        passed: (transfer - 1.0).abs() <= 1e-4,
        detail: format!("|transfer - 1| = {:.2e} at 1/a_x (tolerance 1e-4)", (transfer - 1.0).abs()),
    });

    // unitarity of the swept propagation over a window around the resonance
    let sweep_spec = SystemSpec { a_x: 0.1, ..Default::default() };
    let sweep = nvpol::protocols::IseSweep {
        center_freq: nvpol::hamiltonian::resonance_frequency(&sweep_spec)?,
        range: 20.0,
        rate: config.sweep_rate_mhz_per_us,
        rabi: 1.0,
        direction: nvpol::protocols::SweepDirection::Down,
    };
    let outcome = ise_transfer_numeric(&sweep_spec, &sweep, &opts)?;
    checks.push(Check {
        name: "sweep_unitarity",
        passed: outcome.max_unitarity_defect <= 1e-9,
        detail: format!(
            "max defect {:.2e} over {} segments (tolerance 1e-9)",
            outcome.max_unitarity_defect, outcome.segments
        ),
    });

    // diffusion conservation
    let bath = sample_bath(config.master_seed, 3.0, config.abundance)?;
    let model = nvpol::bath::DiffusionModel::new(&bath, config.diffusion_linewidth_mhz, config.diffusion_cutoff_nm)?;
    let n = bath.spins.len();
    let mut pol: Vec<f64> = (0..n).map(|i| if i % 2 == 0 { 0.9 } else { -0.2 }).collect();
    let total0: f64 = pol.iter().sum();
    for _ in 0..10_000 {
        model.step(&mut pol, 0.01, true);
    }
    let drift = (pol.iter().sum::<f64>() - total0).abs();
    checks.push(Check {
        name: "diffusion_conservation",
        passed: drift <= 1e-9,
        detail: format!("total polarization drift {drift:.2e} over 1e4 steps (tolerance 1e-9)"),
    });

    // dipolar scales
    let nn = nn_dipolar_coupling(BOND_LENGTH) * 1e3;
    let nn_ok = (nn - 2.0).abs() <= 0.3;
    let (a_z, _) = nvpol::bath::hyperfine_coupling([0.0, 0.0, 2.0], [0.0, 0.0, 1.0])?;
    let nv_khz = a_z.abs() * 1e3;
    let nv_ok = (10.0 / 4.0..=10.0 * 4.0).contains(&nv_khz);
    checks.push(Check {
        name: "dipolar_scales",
        passed: nn_ok && nv_ok,
        detail: format!("nn coupling {nn:.3} kHz (2 kHz ± 15%), NV coupling at 2 nm {nv_khz:.2} kHz (10 kHz ÷/× 4)"),
    });

    Ok(checks)
}

/// The default configuration as a commented, ready-to-edit config file.
pub fn print_defaults() -> String {
    RunConfig::default().render()
}
