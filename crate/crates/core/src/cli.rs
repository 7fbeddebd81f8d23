//! `rfwater` command line.

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::io::config::{load_scenario, model_or_default};
use crate::io::{
    compute_stages, read_sweep_dir, read_trace_samples, samples_to_trace, write_reports,
    write_stages, write_sweep_dir, write_trace_file, RunManifest,
};
use crate::microstrip::{stub_capacitance_range, synthesize_stub_length, MicrostripLine};
use crate::pipeline::{run_pipeline, Action, PipelineConfig};
use crate::response::{parse_grid, CalibrationCurve};
use crate::simulate::{simulate_scenario, sweeps_for_trace, DEFAULT_SAMPLE_PERIOD};

#[derive(Debug, Parser)]
#[command(
    name = "rfwater",
    version,
    about = "Water sensor models, simulator and event detector"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Render a scenario file to a resonance trace.
    Simulate(SimulateArgs),
    /// Detect solid and liquid events in a trace or sweep directory.
    Analyze(AnalyzeArgs),
    /// Microstrip line parameters and open-stub synthesis.
    Design(DesignArgs),
    /// Write a model-derived calibration curve.
    Calibrate(CalibrateArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the scenario's seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write one S11 sweep per sample under `sweeps/`.
    #[arg(long)]
    pub emit_sweeps: bool,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Trace CSV or directory of sweep CSVs.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Calibration CSV; the built-in model curve when omitted.
    #[arg(long)]
    pub calibration: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Write intermediate signals under `stages/`.
    #[arg(long)]
    pub dump_stages: bool,
    /// Sample period of a sweep directory, s.
    #[arg(long, default_value_t = DEFAULT_SAMPLE_PERIOD)]
    pub sample_period: f64,
    /// Pure-water resonance, Hz.
    #[arg(long)]
    pub reference_hz: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Debug, Args)]
pub struct DesignArgs {
    /// Trace width, m.
    #[arg(long)]
    pub w: f64,
    /// Substrate height, m.
    #[arg(long)]
    pub h: f64,
    /// Substrate relative permittivity.
    #[arg(long)]
    pub eps_r: f64,
    /// Design frequency, Hz.
    #[arg(long)]
    pub f: f64,
    /// Capacitance the open stub should present, F.
    #[arg(long)]
    pub stub_c: Option<f64>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    /// `default`, a comma list of mol/L values, or `geom:START:STOP:N` items.
    #[arg(long, default_value = "default")]
    pub grid: String,
    #[arg(long)]
    pub out: PathBuf,
    /// Dielectric/resonator model file.
    #[arg(long)]
    pub model: Option<PathBuf>,
}

pub fn run(cli: Cli, stdout: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Simulate(a) => cmd_simulate(&a, stdout),
        Command::Analyze(a) => cmd_analyze(&a, stdout),
        Command::Design(a) => cmd_design(&a, stdout),
        Command::Calibrate(a) => cmd_calibrate(&a, stdout),
    }
}

fn out_err(e: std::io::Error) -> Error {
    Error::io("<stdout>", e)
}

pub fn cmd_simulate(a: &SimulateArgs, stdout: &mut dyn Write) -> Result<()> {
    let mut scenario = load_scenario(&a.config)?;
    if let Some(seed) = a.seed {
        scenario.config.seed = seed;
    }
    let cfg = &scenario.config;
    RunManifest::new("simulate", &a.config, Some(cfg.seed), &a.out).write()?;

    let trace = simulate_scenario(cfg)?;
    let trace_path = a.out.join("trace.csv");
    write_trace_file(&trace_path, &trace)?;
    if a.emit_sweeps {
        write_sweep_dir(&a.out.join("sweeps"), &sweeps_for_trace(cfg, &trace)?)?;
    }
    writeln!(
        stdout,
        "simulated {} samples over {} s (seed {}) -> {}",
        trace.len(),
        cfg.duration,
        cfg.seed,
        trace_path.display()
    )
    .map_err(out_err)
}

fn load_input(a: &AnalyzeArgs) -> Result<Vec<(f64, f64)>> {
    if a.input.is_dir() {
        Ok(read_sweep_dir(&a.input, a.sample_period)?.iter().collect())
    } else {
        read_trace_samples(&a.input)
    }
}

pub fn cmd_analyze(a: &AnalyzeArgs, stdout: &mut dyn Write) -> Result<()> {
    let config_path = a.calibration.clone().unwrap_or_default();
    RunManifest::new("analyze", &config_path, None, &a.out).write()?;

    let mut cfg = PipelineConfig {
        reference_frequency: a.reference_hz,
        ..Default::default()
    };
    if let Some(p) = &a.calibration {
        cfg.calibration = CalibrationCurve::read_csv(p)?;
    }
    let samples = load_input(a)?;
    if samples.len() >= 2 {
        cfg.sample_period = samples[1].0 - samples[0].0;
    }
    let reports = run_pipeline(samples.iter().copied(), &cfg)?;

    let report_path = a.out.join("reports.ndjson");
    let file = std::fs::File::create(&report_path).map_err(|e| Error::io(&report_path, e))?;
    write_reports(std::io::BufWriter::new(file), &reports)
        .map_err(|e| Error::io(&report_path, e))?;

    if a.dump_stages && samples.len() >= 2 {
        let trace = samples_to_trace(&samples, cfg.jitter_tolerance)?;
        write_stages(&a.out.join("stages"), &compute_stages(&trace, &cfg)?)?;
    }

    let count = |act: Action| reports.iter().filter(|r| r.action == act).count();
    writeln!(
        stdout,
        "analyzed {} samples: {} FLUSH, {} ANALYZE, {} IDLE -> {}",
        samples.len(),
        count(Action::Flush),
        count(Action::Analyze),
        count(Action::Idle),
        report_path.display()
    )
    .map_err(out_err)
}

#[derive(Debug, Serialize)]
pub struct DesignReport {
    pub trace_width_m: f64,
    pub substrate_height_m: f64,
    pub substrate_eps_r: f64,
    pub frequency_hz: f64,
    pub eps_eff: f64,
    pub z0_ohm: f64,
    pub beta_rad_per_m: f64,
    pub guided_wavelength_m: f64,
    pub stub_capacitance_min_f: f64,
    pub stub_capacitance_max_f: f64,
    pub stub_capacitance_f: Option<f64>,
    pub stub_length_m: Option<f64>,
}

pub fn design_report(a: &DesignArgs) -> Result<DesignReport> {
    let line = MicrostripLine::new(a.w, a.h, a.eps_r)?;
    let beta = line.beta(a.f)?;
    let (c_min, c_max) = stub_capacitance_range(a.f, &line)?;
    let stub_length_m = a
        .stub_c
        .map(|c| synthesize_stub_length(c, a.f, &line))
        .transpose()?;
    Ok(DesignReport {
        trace_width_m: a.w,
        substrate_height_m: a.h,
        substrate_eps_r: a.eps_r,
        frequency_hz: a.f,
        eps_eff: line.eps_eff,
        z0_ohm: line.z0,
        beta_rad_per_m: beta,
        guided_wavelength_m: line.guided_wavelength(a.f)?,
        stub_capacitance_min_f: c_min,
        stub_capacitance_max_f: c_max,
        stub_capacitance_f: a.stub_c,
        stub_length_m,
    })
}

pub fn cmd_design(a: &DesignArgs, stdout: &mut dyn Write) -> Result<()> {
    let r = design_report(a)?;
    match a.format {
        Format::Json => {
            serde_json::to_writer_pretty(&mut *stdout, &r).map_err(|e| out_err(e.into()))?;
            writeln!(stdout).map_err(out_err)
        }
        Format::Text => write_design_text(stdout, &r).map_err(out_err),
    }
}

fn write_design_text(out: &mut dyn Write, r: &DesignReport) -> std::io::Result<()> {
    writeln!(
        out,
        "w/h                 {}",
        r.trace_width_m / r.substrate_height_m
    )?;
    writeln!(out, "eps_eff             {}", r.eps_eff)?;
    writeln!(out, "Z0                  {} ohm", r.z0_ohm)?;
    writeln!(out, "beta                {} rad/m", r.beta_rad_per_m)?;
    writeln!(out, "lambda_g            {} m", r.guided_wavelength_m)?;
    writeln!(
        out,
        "stub C range        [{:e}, {:e}] F",
        r.stub_capacitance_min_f, r.stub_capacitance_max_f
    )?;
    if let (Some(c), Some(l)) = (r.stub_capacitance_f, r.stub_length_m) {
        writeln!(out, "stub length         {l} m for {c:e} F")?;
    }
    Ok(())
}

pub fn cmd_calibrate(a: &CalibrateArgs, stdout: &mut dyn Write) -> Result<()> {
    let grid = parse_grid(&a.grid)?;
    let model = model_or_default(a.model.as_deref())?;
    let curve = model.calibration(&grid)?;
    curve.write_csv_file(&a.out)?;
    writeln!(
        stdout,
        "wrote {} calibration points -> {}",
        curve.points().len(),
        a.out.display()
    )
    .map_err(out_err)
}

/// Installs the `TS_LOG`-controlled logger (default `warn`).
pub fn init_logging() {
    let env = env_logger::Env::new().filter_or("TS_LOG", "warn");
    let _ = env_logger::Builder::from_env(env)
        .format_timestamp(None)
        .try_init();
}
