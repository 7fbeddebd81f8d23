//! Transient detection: resonance tracking, ripple-band spectral features,
//! solid/liquid discrimination and concentration estimation.

mod filter;
mod spectrum;
mod stream;

pub use filter::Bandpass;
pub use spectrum::{band_peak_magnitude, BandPeak, SpectrumAnalyzer};
pub use stream::{run_pipeline, Action, EventClass, EventReport, Pipeline};

use crate::error::{Error, Result};
use crate::response::{
    default_calibration, fit_exponential, invert_concentration, CalibrationCurve, ExpFit,
    DEFAULT_INJECTION_RATE,
};
use crate::simulate::{FrequencyTrace, Sweep, DEFAULT_SAMPLE_PERIOD, RIPPLE_BAND};

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    /// Expected sample spacing, s.
    pub sample_period: f64,
    /// Ripple band, Hz.
    pub band: (f64, f64),
    pub window_length: usize,
    pub hop: usize,
    /// Absolute floor of the solid threshold, Hz/s.
    pub solid_threshold: f64,
    /// Multiple of the rolling noise floor that also has to be exceeded.
    pub noise_floor_factor: f64,
    /// Span of band magnitudes the noise floor median is taken over, s.
    pub baseline_window: f64,
    pub calibration: CalibrationCurve,
    /// mL/s
    pub injection_rate_assumed: f64,
    /// Lockout after a flush, s.
    pub settle_time: f64,
    /// Quiet time needed before a liquid onset can be detected, s.
    pub min_baseline: f64,
    /// Length of the transient handed to the fit, s.
    pub liquid_window: f64,
    /// Lower bound on the baseline noise estimate, Hz.
    pub min_noise_sigma: f64,
    /// Pure-water resonance, Hz. When unset the level before the first
    /// liquid event (or after a flush) is taken as pure water.
    pub reference_frequency: Option<f64>,
    /// Allowed relative deviation of sample spacing.
    pub jitter_tolerance: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            sample_period: DEFAULT_SAMPLE_PERIOD,
            band: RIPPLE_BAND,
            window_length: 128,
            hop: 16,
            solid_threshold: 15e3,
            noise_floor_factor: 5.0,
            baseline_window: 30.0,
            calibration: default_calibration(),
            injection_rate_assumed: DEFAULT_INJECTION_RATE,
            settle_time: 5.0,
            min_baseline: 5.0,
            liquid_window: 150.0,
            min_noise_sigma: 10.0,
            reference_frequency: None,
            jitter_tolerance: 0.01,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.sample_period > 0.0 && self.sample_period.is_finite()) {
            return bad(format!(
                "sample_period must be positive, got {}",
                self.sample_period
            ));
        }
        let nyquist = 0.5 / self.sample_period;
        let (lo, hi) = self.band;
        if !(lo > 0.0 && lo < hi && hi < nyquist) {
            return bad(format!(
                "band ({lo}, {hi}) Hz must satisfy 0 < low < high < Nyquist ({nyquist} Hz)"
            ));
        }
        if self.window_length < 32 {
            return bad(format!(
                "window_length must be >= 32, got {}",
                self.window_length
            ));
        }
        if self.hop < 1 {
            return bad("hop must be >= 1".into());
        }
        for (name, v) in [
            ("solid_threshold", self.solid_threshold),
            ("noise_floor_factor", self.noise_floor_factor),
            ("baseline_window", self.baseline_window),
            ("settle_time", self.settle_time),
            ("min_baseline", self.min_baseline),
            ("min_noise_sigma", self.min_noise_sigma),
            ("jitter_tolerance", self.jitter_tolerance),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(format!("{name} must be finite and non-negative, got {v}"));
            }
        }
        if !(self.injection_rate_assumed > 0.0) {
            return bad("injection_rate_assumed must be positive".into());
        }
        if !(self.liquid_window > 0.0) {
            return bad("liquid_window must be positive".into());
        }
        Ok(())
    }

    fn samples_in(&self, seconds: f64) -> usize {
        (seconds / self.sample_period).ceil() as usize
    }
}

/// Frequency of the S11 minimum, refined by a parabola through the lowest
/// grid point and its neighbours.
pub fn extract_resonance(sweep: &Sweep) -> Result<f64> {
    let (f, s) = (&sweep.frequencies, &sweep.s11_db);
    let k = s
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(k, _)| k)
        .ok_or_else(|| Error::domain("empty sweep"))?;
    if k == 0 || k == s.len() - 1 {
        return Err(Error::EdgeMinimum { frequency: f[k] });
    }
    // local coordinates keep the squares well conditioned at hundreds of MHz
    let (u0, u2) = (f[k - 1] - f[k], f[k + 1] - f[k]);
    let (d0, d2) = (s[k - 1] - s[k], s[k + 1] - s[k]);
    let det = u0 * u2 * (u2 - u0);
    let p = (d0 * u2 * u2 - d2 * u0 * u0) / det;
    let q = (d2 * u0 - d0 * u2) / det;
    if !(q > 0.0) {
        return Ok(f[k]);
    }
    Ok(f[k] - p / (2.0 * q))
}

/// First difference over the sample period. Each output sample is stamped
/// with the later of its two input times.
pub fn differentiate(trace: &FrequencyTrace) -> Result<FrequencyTrace> {
    if trace.len() < 2 {
        return Err(Error::domain(format!(
            "differentiation needs at least 2 samples, got {}",
            trace.len()
        )));
    }
    let dt = trace.sample_period;
    let d = trace
        .samples
        .windows(2)
        .map(|w| (w[1] - w[0]) / dt)
        .collect();
    FrequencyTrace::new(trace.start_time + dt, dt, d)
}

pub fn bandpass(trace: &FrequencyTrace, band: (f64, f64)) -> Result<FrequencyTrace> {
    let bp = Bandpass::design(band, trace.sample_period)?;
    FrequencyTrace::new(
        trace.start_time,
        trace.sample_period,
        bp.filtfilt(&trace.samples),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WindowClass {
    Solid,
    NoneSoFar,
}

pub fn solid_threshold(cfg: &PipelineConfig, noise_floor: f64) -> f64 {
    cfg.solid_threshold
        .max(cfg.noise_floor_factor * noise_floor)
}

pub fn classify_window(magnitude: f64, cfg: &PipelineConfig, noise_floor: f64) -> WindowClass {
    if magnitude > solid_threshold(cfg, noise_floor) {
        WindowClass::Solid
    } else {
        WindowClass::NoneSoFar
    }
}

/// Band feature of one analysis window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowFeature {
    pub peak: BandPeak,
    /// Index into the raw window of the first sample where the filtered
    /// derivative reaches half its largest excursion.
    pub burst_index: usize,
}

/// Derivative → bandpass → tapered spectrum on `window_length + 1` raw
/// samples.
pub struct WindowAnalyzer {
    bandpass: Bandpass,
    spectrum: SpectrumAnalyzer,
    deriv: Vec<f64>,
    sample_period: f64,
}

impl WindowAnalyzer {
    pub fn new(cfg: &PipelineConfig) -> Result<Self> {
        Ok(Self {
            bandpass: Bandpass::design(cfg.band, cfg.sample_period)?,
            spectrum: SpectrumAnalyzer::new(cfg.window_length, cfg.sample_period, cfg.band)?,
            deriv: Vec::with_capacity(cfg.window_length),
            sample_period: cfg.sample_period,
        })
    }

    pub fn raw_len(&self) -> usize {
        self.spectrum.len() + 1
    }

    pub fn analyze<'a>(&mut self, raw: impl IntoIterator<Item = &'a f64>) -> Result<WindowFeature> {
        self.deriv.clear();
        let mut prev: Option<f64> = None;
        for &x in raw {
            if let Some(p) = prev {
                self.deriv.push((x - p) / self.sample_period);
            }
            prev = Some(x);
        }
        let filtered = self.bandpass.filtfilt(&self.deriv);
        let peak = self.spectrum.band_peak(&filtered)?;
        let max = filtered.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let burst = filtered
            .iter()
            .position(|v| v.abs() >= 0.5 * max)
            .unwrap_or(0);
        Ok(WindowFeature {
            peak,
            burst_index: burst + 1,
        })
    }
}

/// Band feature of every analysis window of a trace, stamped with the time
/// of the window's last sample. Windows are those a streaming run would
/// evaluate when nothing is detected.
pub fn band_magnitude_series(
    trace: &FrequencyTrace,
    cfg: &PipelineConfig,
) -> Result<Vec<(f64, WindowFeature)>> {
    let cfg = PipelineConfig {
        sample_period: trace.sample_period,
        ..cfg.clone()
    };
    let mut an = WindowAnalyzer::new(&cfg)?;
    let n = an.raw_len();
    if trace.len() < n {
        return Ok(Vec::new());
    }
    (n - 1..trace.len())
        .step_by(cfg.hop)
        .map(|end| {
            Ok((
                trace.time(end),
                an.analyze(&trace.samples[end + 1 - n..=end])?,
            ))
        })
        .collect()
}

/// Result of fitting one liquid transient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LiquidEstimate {
    pub onset_time: f64,
    /// Resonance just before the onset, Hz.
    pub pre_level: f64,
    pub fit: ExpFit,
    /// Steady shift relative to pure water, Hz.
    pub total_shift: f64,
    /// Mixture molarity, `None` when the shift is outside the calibration.
    pub concentration: Option<f64>,
}

#[derive(Debug, Default, Clone, Copy)]
pub(crate) struct RunningStats {
    n: u64,
    mean: f64,
    m2: f64,
}

impl RunningStats {
    pub(crate) fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub(crate) fn count(&self) -> u64 {
        self.n
    }

    pub(crate) fn mean(&self) -> f64 {
        self.mean
    }

    pub(crate) fn std(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            (self.m2 / (self.n - 1) as f64).sqrt()
        }
    }
}

pub(crate) fn analyze_liquid(
    samples: &[(f64, f64)],
    onset_time: f64,
    pre_level: f64,
    sigma: f64,
    reference: f64,
    cfg: &PipelineConfig,
) -> Result<LiquidEstimate> {
    if samples.len() < 3 {
        return Err(Error::NoEvent);
    }
    let tail = &samples[samples.len().saturating_sub(cfg.hop.max(1))..];
    let tail_shift = tail.iter().map(|s| s.1).sum::<f64>() / tail.len() as f64 - pre_level;
    if tail_shift.abs() <= 5.0 * sigma {
        return Err(Error::NoEvent);
    }
    let points: Vec<(f64, f64)> = samples
        .iter()
        .map(|&(t, f)| (cfg.injection_rate_assumed * (t - onset_time), f - pre_level))
        .collect();
    let fit = fit_exponential(&points)?;
    let total_shift = pre_level - reference + fit.a;
    Ok(LiquidEstimate {
        onset_time,
        pre_level,
        fit,
        total_shift,
        concentration: invert_concentration(total_shift, &cfg.calibration).ok(),
    })
}

/// Onset of a liquid transient: first of three consecutive samples more than
/// three noise sigmas from `mean`.
fn find_onset(samples: &[f64], from: usize, mean: f64, sigma: f64) -> Option<usize> {
    let mut run = 0;
    for (k, &x) in samples.iter().enumerate().skip(from) {
        if (x - mean).abs() > 3.0 * sigma {
            run += 1;
            if run == 3 {
                return Some(k - 2);
            }
        } else {
            run = 0;
        }
    }
    None
}

/// Whole-trace concentration estimate for a trace holding one liquid event
/// and no solids.
pub fn estimate_concentration(
    trace: &FrequencyTrace,
    cfg: &PipelineConfig,
) -> Result<LiquidEstimate> {
    cfg.validate()?;
    let cfg = PipelineConfig {
        sample_period: trace.sample_period,
        ..cfg.clone()
    };
    let n_base = cfg.samples_in(cfg.min_baseline).max(2);
    if trace.len() < n_base + 3 {
        return Err(Error::NoEvent);
    }
    let mut base = RunningStats::default();
    trace.samples[..n_base].iter().for_each(|&x| base.push(x));
    let sigma = base.std().max(cfg.min_noise_sigma);
    let onset = find_onset(&trace.samples, n_base, base.mean(), sigma).ok_or(Error::NoEvent)?;

    let pre_level = trace.samples[..onset].iter().sum::<f64>() / onset as f64;
    let end = (onset + cfg.samples_in(cfg.liquid_window)).min(trace.len());
    let window: Vec<(f64, f64)> = (onset..end)
        .map(|k| (trace.time(k), trace.samples[k]))
        .collect();
    let reference = cfg.reference_frequency.unwrap_or(pre_level);
    let est = analyze_liquid(
        &window,
        trace.time(onset),
        pre_level,
        sigma,
        reference,
        &cfg,
    )?;
    if est.concentration.is_none() {
        invert_concentration(est.total_shift, &cfg.calibration)?;
    }
    Ok(est)
}
