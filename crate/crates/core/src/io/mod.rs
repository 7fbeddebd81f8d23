//! File formats. Numbers are written in shortest round-trip form so that
//! reading and re-writing any file reproduces it byte for byte.

pub mod config;

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::pipeline::{
    band_magnitude_series, differentiate, extract_resonance, Action, Bandpass, EventClass,
    EventReport, PipelineConfig,
};
use crate::simulate::{FrequencyTrace, Sweep};

pub const TRACE_HEADER: &str = "time_s,frequency_hz";
pub const SWEEP_HEADER: &str = "frequency_hz,s11_db";

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

/// Reads a two-column numeric CSV with the given header.
fn read_pairs(path: &Path, header: &str) -> Result<Vec<(f64, f64)>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::parse(path, e.to_string()))?;
    let got = rdr
        .headers()
        .map_err(|e| Error::parse(path, e.to_string()))?
        .iter()
        .collect::<Vec<_>>()
        .join(",");
    if got != header {
        return Err(Error::parse(
            path,
            format!("expected header `{header}`, found `{got}`"),
        ));
    }
    rdr.deserialize()
        .enumerate()
        .map(|(i, row)| {
            let (a, b): (f64, f64) =
                row.map_err(|e| Error::parse(path, format!("row {}: {e}", i + 1)))?;
            if !(a.is_finite() && b.is_finite()) {
                return Err(Error::parse(
                    path,
                    format!("row {}: non-finite value", i + 1),
                ));
            }
            Ok((a, b))
        })
        .collect()
}

fn write_pairs<W: Write>(
    mut out: W,
    header: &str,
    rows: impl IntoIterator<Item = (f64, f64)>,
) -> std::io::Result<()> {
    writeln!(out, "{header}")?;
    for (a, b) in rows {
        writeln!(out, "{a},{b}")?;
    }
    out.flush()
}

/// `(time_s, frequency_hz)` rows of a trace file.
pub fn read_trace_samples(path: &Path) -> Result<Vec<(f64, f64)>> {
    read_pairs(path, TRACE_HEADER)
}

pub fn write_trace_samples<W: Write>(
    out: W,
    rows: impl IntoIterator<Item = (f64, f64)>,
) -> std::io::Result<()> {
    write_pairs(out, TRACE_HEADER, rows)
}

pub fn write_trace_file(path: &Path, trace: &FrequencyTrace) -> Result<()> {
    write_trace_samples(create(path)?, trace.iter()).map_err(|e| Error::io(path, e))
}

/// Builds a uniform trace from timestamped samples, rejecting spacing that
/// strays more than `tolerance` (relative) from the mean step.
pub fn samples_to_trace(samples: &[(f64, f64)], tolerance: f64) -> Result<FrequencyTrace> {
    if samples.len() < 2 {
        return Err(Error::Ingest(format!(
            "trace needs at least two samples, got {}",
            samples.len()
        )));
    }
    let n = samples.len();
    let dt = (samples[n - 1].0 - samples[0].0) / (n - 1) as f64;
    if !(dt > 0.0) {
        return Err(Error::Ingest("timestamps must increase".into()));
    }
    if let Some(w) = samples
        .windows(2)
        .find(|w| ((w[1].0 - w[0].0) - dt).abs() > tolerance * dt)
    {
        return Err(Error::Ingest(format!(
            "non-uniform sampling: step {} s at t = {} s, mean step {dt} s",
            w[1].0 - w[0].0,
            w[0].0
        )));
    }
    FrequencyTrace::new(samples[0].0, dt, samples.iter().map(|s| s.1).collect())
}

pub fn read_sweep(path: &Path) -> Result<Sweep> {
    let (f, s) = read_pairs(path, SWEEP_HEADER)?.into_iter().unzip();
    Sweep::new(f, s).map_err(|e| Error::parse(path, e.to_string()))
}

pub fn write_sweep<W: Write>(out: W, sweep: &Sweep) -> std::io::Result<()> {
    write_pairs(
        out,
        SWEEP_HEADER,
        sweep
            .frequencies
            .iter()
            .copied()
            .zip(sweep.s11_db.iter().copied()),
    )
}

/// Writes `step_NNNNNN.csv` files, zero-padded so that name order is time
/// order.
pub fn write_sweep_dir(dir: &Path, sweeps: &[Sweep]) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let width = sweeps.len().max(1).to_string().len().max(6);
    for (k, sw) in sweeps.iter().enumerate() {
        let p = dir.join(format!("step_{k:0width$}.csv"));
        write_sweep(create(&p)?, sw).map_err(|e| Error::io(&p, e))?;
    }
    Ok(())
}

/// CSV files of a sweep directory in lexicographic order.
pub fn sweep_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .map(|e| e.map(|e| e.path()).map_err(|e| Error::io(dir, e)))
        .collect::<Result<Vec<_>>>()?;
    files.retain(|p| p.is_file() && p.extension().is_some_and(|x| x == "csv"));
    files.sort();
    if files.is_empty() {
        return Err(Error::Ingest(format!(
            "{}: no sweep CSV files",
            dir.display()
        )));
    }
    Ok(files)
}

/// Resonance trace from a sweep directory, one file per sample.
pub fn read_sweep_dir(dir: &Path, sample_period: f64) -> Result<FrequencyTrace> {
    let resonances = sweep_files(dir)?
        .iter()
        .map(|p| {
            extract_resonance(&read_sweep(p)?).map_err(|e| match e {
                Error::EdgeMinimum { .. } => Error::Ingest(format!("{}: {e}", p.display())),
                e => e,
            })
        })
        .collect::<Result<Vec<f64>>>()?;
    FrequencyTrace::new(0.0, sample_period, resonances)
}

#[derive(Serialize)]
struct ReportLine {
    time_s: f64,
    class: EventClass,
    band_peak_hz_per_s: f64,
    est_concentration_mol_per_l: Option<f64>,
    action: Action,
}

/// One NDJSON line (without newline). Out-of-span liquids carry a `null`
/// concentration.
pub fn report_json(r: &EventReport) -> String {
    serde_json::to_string(&ReportLine {
        time_s: r.time,
        class: r.class,
        band_peak_hz_per_s: r.band_peak_magnitude,
        est_concentration_mol_per_l: r.concentration,
        action: r.action,
    })
    .expect("report fields serialise")
}

pub fn write_reports<W: Write>(mut out: W, reports: &[EventReport]) -> std::io::Result<()> {
    for r in reports {
        writeln!(out, "{}", report_json(r))?;
    }
    out.flush()
}

/// Intermediate signals of an analysis, for plotting.
#[derive(Debug, Clone, PartialEq)]
pub struct Stages {
    /// `f − f0`, with `f0` the mean of the leading baseline interval.
    pub shift: Vec<(f64, f64)>,
    pub derivative: Vec<(f64, f64)>,
    pub filtered: Vec<(f64, f64)>,
    /// Band magnitude of each analysis window, stamped at its last sample.
    pub band_magnitude: Vec<(f64, f64)>,
}

pub fn compute_stages(trace: &FrequencyTrace, cfg: &PipelineConfig) -> Result<Stages> {
    let n_base =
        ((cfg.min_baseline / trace.sample_period).ceil() as usize).clamp(1, trace.len().max(1));
    let f0 = trace.samples.iter().take(n_base).sum::<f64>() / n_base as f64;
    let shift = trace.iter().map(|(t, f)| (t, f - f0)).collect();
    let d = differentiate(trace)?;
    let filtered = Bandpass::design(cfg.band, trace.sample_period)?.filtfilt(&d.samples);
    let filtered = filtered
        .into_iter()
        .enumerate()
        .map(|(i, v)| (d.time(i), v))
        .collect();
    let band_magnitude = band_magnitude_series(trace, cfg)?
        .into_iter()
        .map(|(t, f)| (t, f.peak.magnitude))
        .collect();
    Ok(Stages {
        shift,
        derivative: d.iter().collect(),
        filtered,
        band_magnitude,
    })
}

pub fn write_stages(dir: &Path, stages: &Stages) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for (name, header, rows) in [
        ("shift.csv", "time_s,shift_hz", &stages.shift),
        (
            "derivative.csv",
            "time_s,derivative_hz_per_s",
            &stages.derivative,
        ),
        ("filtered.csv", "time_s,filtered_hz_per_s", &stages.filtered),
        (
            "band_magnitude.csv",
            "time_s,band_magnitude_hz_per_s",
            &stages.band_magnitude,
        ),
    ] {
        let p = dir.join(name);
        write_pairs(create(&p)?, header, rows.iter().copied()).map_err(|e| Error::io(&p, e))?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, serde::Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config_path: PathBuf,
    pub seed: Option<u64>,
    pub output_dir: PathBuf,
    pub tool_version: String,
}

impl RunManifest {
    pub fn new(command: &str, config_path: &Path, seed: Option<u64>, output_dir: &Path) -> Self {
        Self {
            command: command.into(),
            config_path: config_path.into(),
            seed,
            output_dir: output_dir.into(),
            tool_version: env!("CARGO_PKG_VERSION").into(),
        }
    }

    /// Writes `manifest.json` into the output directory, creating it.
    pub fn write(&self) -> Result<PathBuf> {
        fs::create_dir_all(&self.output_dir).map_err(|e| Error::io(&self.output_dir, e))?;
        let p = self.output_dir.join("manifest.json");
        let mut out = create(&p)?;
        serde_json::to_writer_pretty(&mut out, self).map_err(|e| Error::io(&p, e.into()))?;
        writeln!(out)
            .and_then(|_| out.flush())
            .map_err(|e| Error::io(&p, e))?;
        Ok(p)
    }
}
