//! Scripted basin scenarios rendered as resonance-frequency time series.
//!
//! A trace is the pure-water resonance plus three kinds of deviation:
//!
//! * liquid injections raise the basin concentration as volume accrues; the
//!   steady shift of the running mixture reaches the sensor through a
//!   first-order lag (`mixing_time_constant`), and the stream hitting the
//!   surface adds a small ripple burst;
//! * solid insertions add a damped-sinusoid ripple burst and a constant
//!   offset from the displaced water, both scaled linearly by mass;
//! * white Gaussian measurement noise.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::response::{
    default_calibration, mix_concentration, steady_shift, BasinState, CalibrationCurve, Injection,
};

pub const DEFAULT_SAMPLE_PERIOD: f64 = 0.110;
/// Operating band of the sensor, Hz.
pub const OPERATING_BAND: (f64, f64) = (670e6, 730e6);
/// Band that carries surface-ripple energy, Hz.
pub const RIPPLE_BAND: (f64, f64) = (1.6, 3.0);
pub const REFERENCE_MASS_G: f64 = 50.0;
pub const DEFAULT_RIPPLE_FREQUENCY: f64 = 2.2;
/// Ripple amplitude of a reference-mass solid, Hz of resonance deviation.
pub const DEFAULT_RIPPLE_AMPLITUDE: f64 = 10e3;
pub const DEFAULT_RIPPLE_DECAY: f64 = 2.0;
/// Resonance offset left by a reference-mass solid, Hz.
pub const DEFAULT_SOLID_OFFSET: f64 = 5e3;
pub const DEFAULT_MIXING_TIME_CONSTANT: f64 = 3.0;
pub const DEFAULT_LIQUID_RIPPLE_RATIO: f64 = 0.15;
pub const DEFAULT_NOISE_SIGMA: f64 = 200.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolidEvent {
    /// s
    pub time: f64,
    /// g
    pub mass: f64,
    /// Hz
    pub ripple_frequency: f64,
    /// Hz of resonance deviation for a [`REFERENCE_MASS_G`] object.
    pub ripple_amplitude: f64,
    /// s
    pub decay_time: f64,
    /// Hz for a [`REFERENCE_MASS_G`] object.
    pub offset: f64,
}

impl SolidEvent {
    pub fn at(time: f64) -> Self {
        Self {
            time,
            ..Default::default()
        }
    }

    fn mass_scale(&self) -> f64 {
        self.mass / REFERENCE_MASS_G
    }
}

impl Default for SolidEvent {
    fn default() -> Self {
        Self {
            time: 0.0,
            mass: REFERENCE_MASS_G,
            ripple_frequency: DEFAULT_RIPPLE_FREQUENCY,
            ripple_amplitude: DEFAULT_RIPPLE_AMPLITUDE,
            decay_time: DEFAULT_RIPPLE_DECAY,
            offset: DEFAULT_SOLID_OFFSET,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScenarioEvent {
    Liquid(Injection),
    Solid(SolidEvent),
}

impl ScenarioEvent {
    pub fn start_time(&self) -> f64 {
        match self {
            ScenarioEvent::Liquid(i) => i.start_time,
            ScenarioEvent::Solid(s) => s.time,
        }
    }
}

/// Shape of the synthetic S11 dip written alongside a trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepShape {
    pub depth_db: f64,
    pub q_factor: f64,
    /// Half-width of the span around the baseline, Hz.
    pub half_span: f64,
    pub n_points: usize,
}

impl Default for SweepShape {
    fn default() -> Self {
        Self {
            depth_db: 20.0,
            q_factor: 50.0,
            half_span: 5e6,
            n_points: 1001,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub duration: f64,
    pub sample_period: f64,
    /// Pure-water resonance, Hz.
    pub baseline_frequency: f64,
    pub basin: BasinState,
    pub noise_sigma: f64,
    pub events: Vec<ScenarioEvent>,
    pub seed: u64,
    pub mixing_time_constant: f64,
    pub liquid_ripple_ratio: f64,
    pub calibration: CalibrationCurve,
    /// Accept baselines outside [`OPERATING_BAND`] and ripple frequencies
    /// outside [`RIPPLE_BAND`].
    pub allow_out_of_band: bool,
    pub sweep: SweepShape,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            duration: 60.0,
            sample_period: DEFAULT_SAMPLE_PERIOD,
            baseline_frequency: 700e6,
            basin: BasinState::default(),
            noise_sigma: DEFAULT_NOISE_SIGMA,
            events: Vec::new(),
            seed: 0,
            mixing_time_constant: DEFAULT_MIXING_TIME_CONSTANT,
            liquid_ripple_ratio: DEFAULT_LIQUID_RIPPLE_RATIO,
            calibration: default_calibration(),
            allow_out_of_band: false,
            sweep: SweepShape::default(),
        }
    }
}

impl ScenarioConfig {
    pub fn nyquist(&self) -> f64 {
        0.5 / self.sample_period
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.sample_period > 0.0 && self.sample_period.is_finite()) {
            return bad(format!(
                "sample_period must be positive, got {}",
                self.sample_period
            ));
        }
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return bad(format!("duration must be positive, got {}", self.duration));
        }
        if !(self.noise_sigma >= 0.0) {
            return bad(format!(
                "noise_sigma must be non-negative, got {}",
                self.noise_sigma
            ));
        }
        if !(self.mixing_time_constant >= 0.0) {
            return bad("mixing_time_constant must be non-negative".into());
        }
        if !(self.liquid_ripple_ratio >= 0.0) {
            return bad("liquid_ripple_ratio must be non-negative".into());
        }
        let (lo, hi) = OPERATING_BAND;
        if !self.allow_out_of_band && !(lo..=hi).contains(&self.baseline_frequency) {
            return bad(format!(
                "baseline_frequency {} Hz outside the {lo}-{hi} Hz operating band",
                self.baseline_frequency
            ));
        }
        if !(self.baseline_frequency > 0.0) {
            return bad("baseline_frequency must be positive".into());
        }
        self.basin.validate()?;

        let mut prev = f64::NEG_INFINITY;
        for (k, ev) in self.events.iter().enumerate() {
            let t = ev.start_time();
            if !(t >= 0.0) {
                return bad(format!("event {k} has negative start time {t}"));
            }
            if t < prev {
                return bad(format!(
                    "event {k} at {t} s is out of order (previous at {prev} s)"
                ));
            }
            prev = t;
            match ev {
                ScenarioEvent::Liquid(inj) => inj.validate()?,
                ScenarioEvent::Solid(s) => self.validate_solid(k, s)?,
            }
        }

        let final_conc = self.basin_at(f64::INFINITY)?.concentration;
        let (c_lo, c_hi) = self.calibration.concentration_span();
        if !(c_lo..=c_hi).contains(&self.basin.concentration) || final_conc > c_hi {
            return bad(format!(
                "basin concentration leaves the calibration span [{c_lo}, {c_hi}] mol/L"
            ));
        }
        Ok(())
    }

    fn validate_solid(&self, k: usize, s: &SolidEvent) -> Result<()> {
        if !(s.mass > 0.0 && s.ripple_amplitude > 0.0 && s.decay_time > 0.0) {
            return Err(Error::Config(format!(
                "solid event {k} needs positive mass, ripple amplitude and decay time"
            )));
        }
        if !(s.ripple_frequency > 0.0 && s.ripple_frequency < self.nyquist()) {
            return Err(Error::Config(format!(
                "solid event {k} ripple frequency {} Hz is not below Nyquist ({} Hz)",
                s.ripple_frequency,
                self.nyquist()
            )));
        }
        let (lo, hi) = RIPPLE_BAND;
        if !self.allow_out_of_band && !(lo..=hi).contains(&s.ripple_frequency) {
            return Err(Error::Config(format!(
                "solid event {k} ripple frequency {} Hz outside {lo}-{hi} Hz",
                s.ripple_frequency
            )));
        }
        Ok(())
    }

    /// Basin contents at time `t`, with every injection poured at its rate.
    pub fn basin_at(&self, t: f64) -> Result<BasinState> {
        self.events
            .iter()
            .try_fold(self.basin, |state, ev| match ev {
                ScenarioEvent::Liquid(inj) => {
                    mix_concentration(state, inj.volume_added(t), inj.concentration)
                }
                ScenarioEvent::Solid(_) => Ok(state),
            })
    }

    pub fn sample_count(&self) -> usize {
        (self.duration / self.sample_period + 1e-9).floor() as usize + 1
    }
}

/// Uniformly sampled resonance frequency, Hz.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrequencyTrace {
    pub start_time: f64,
    pub sample_period: f64,
    pub samples: Vec<f64>,
}

impl FrequencyTrace {
    pub fn new(start_time: f64, sample_period: f64, samples: Vec<f64>) -> Result<Self> {
        if !(sample_period > 0.0) {
            return Err(Error::domain("sample period must be positive"));
        }
        if samples.iter().any(|x| !x.is_finite()) {
            return Err(Error::domain("trace samples must be finite"));
        }
        Ok(Self {
            start_time,
            sample_period,
            samples,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn time(&self, i: usize) -> f64 {
        self.start_time + i as f64 * self.sample_period
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.samples
            .iter()
            .enumerate()
            .map(|(i, &f)| (self.time(i), f))
    }
}

/// Damped-sinusoid ripple seen by the resonance after a solid enters.
pub fn ripple_burst(t_since_event: f64, ev: &SolidEvent) -> f64 {
    if t_since_event < 0.0 {
        return 0.0;
    }
    ev.ripple_amplitude
        * ev.mass_scale()
        * (-t_since_event / ev.decay_time).exp()
        * (2.0 * PI * ev.ripple_frequency * t_since_event).sin()
}

fn solid_contribution(t: f64, ev: &SolidEvent) -> f64 {
    if t < ev.time {
        return 0.0;
    }
    ripple_burst(t - ev.time, ev) + ev.offset * ev.mass_scale()
}

/// Steady shift of the running mixture passed through a first-order lag.
///
/// The lag is discretised exactly for input that is linear between samples.
fn lagged_liquid_shift(cfg: &ScenarioConfig, times: &[f64]) -> Result<Vec<f64>> {
    let has_liquid = cfg
        .events
        .iter()
        .any(|e| matches!(e, ScenarioEvent::Liquid(_)));
    let base = steady_shift(cfg.basin.concentration, &cfg.calibration)?;
    if !has_liquid {
        return Ok(vec![base; times.len()]);
    }
    let target = times
        .iter()
        .map(|&t| steady_shift(cfg.basin_at(t)?.concentration, &cfg.calibration))
        .collect::<Result<Vec<f64>>>()?;
    let tau = cfg.mixing_time_constant;
    if tau == 0.0 {
        return Ok(target);
    }
    let h = cfg.sample_period;
    let decay = (-h / tau).exp();
    let ramp_gain = tau / h * (1.0 - decay);
    let mut out = Vec::with_capacity(target.len());
    let mut y = target[0];
    out.push(y);
    for w in target.windows(2) {
        y = w[1] + decay * (y - w[0]) - (w[1] - w[0]) * ramp_gain;
        out.push(y);
    }
    Ok(out)
}

pub fn simulate_scenario(cfg: &ScenarioConfig) -> Result<FrequencyTrace> {
    cfg.validate()?;
    let n = cfg.sample_count();
    let times: Vec<f64> = (0..n).map(|k| k as f64 * cfg.sample_period).collect();
    let liquid = lagged_liquid_shift(cfg, &times)?;

    let splash = SolidEvent {
        ripple_amplitude: cfg.liquid_ripple_ratio * DEFAULT_RIPPLE_AMPLITUDE,
        ..Default::default()
    };

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let noise = Normal::new(0.0, cfg.noise_sigma)
        .map_err(|e| Error::Config(format!("noise_sigma: {e}")))?;

    let samples = times
        .iter()
        .zip(&liquid)
        .map(|(&t, &shift)| {
            let mut dev = shift;
            for ev in &cfg.events {
                dev += match ev {
                    ScenarioEvent::Solid(s) => solid_contribution(t, s),
                    ScenarioEvent::Liquid(inj) if cfg.liquid_ripple_ratio > 0.0 => {
                        ripple_burst(t - inj.start_time, &splash)
                    }
                    ScenarioEvent::Liquid(_) => 0.0,
                };
            }
            cfg.baseline_frequency + dev + noise.sample(&mut rng)
        })
        .collect();
    FrequencyTrace::new(0.0, cfg.sample_period, samples)
}

/// Reflection-coefficient sweep, dB.
#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub frequencies: Vec<f64>,
    pub s11_db: Vec<f64>,
}

impl Sweep {
    pub fn new(frequencies: Vec<f64>, s11_db: Vec<f64>) -> Result<Self> {
        if frequencies.len() != s11_db.len() {
            return Err(Error::domain(
                "sweep frequency and S11 columns differ in length",
            ));
        }
        if frequencies.len() < 3 {
            return Err(Error::domain("sweep needs at least three points"));
        }
        if frequencies.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::domain(
                "sweep frequencies must be strictly ascending",
            ));
        }
        if s11_db.iter().chain(&frequencies).any(|x| !x.is_finite()) {
            return Err(Error::domain("sweep values must be finite"));
        }
        Ok(Self {
            frequencies,
            s11_db,
        })
    }
}

/// Lorentzian absorption dip: `|S11|² = 1 − (1 − 10^(−depth/10)) / (1 + (2Q δ)²)`
/// with `δ = (f − f_r)/f_r`, sampled on `n_points` uniform frequencies.
pub fn synth_sweep(
    resonance: f64,
    depth_db: f64,
    q_factor: f64,
    span: (f64, f64),
    n_points: usize,
) -> Result<Sweep> {
    let (lo, hi) = span;
    if !(lo < hi && (lo..=hi).contains(&resonance)) {
        return Err(Error::Config(format!(
            "resonance {resonance} Hz outside sweep span [{lo}, {hi}] Hz"
        )));
    }
    if n_points < 16 {
        return Err(Error::Config(format!(
            "sweep needs at least 16 points, got {n_points}"
        )));
    }
    if !(q_factor > 0.0 && depth_db > 0.0) {
        return Err(Error::Config("sweep Q and depth must be positive".into()));
    }
    let floor = 10f64.powf(-depth_db / 10.0);
    let step = (hi - lo) / (n_points - 1) as f64;
    let frequencies: Vec<f64> = (0..n_points)
        .map(|i| {
            if i == n_points - 1 {
                hi
            } else {
                lo + i as f64 * step
            }
        })
        .collect();
    let s11_db = frequencies
        .iter()
        .map(|&f| {
            let x = 2.0 * q_factor * (f - resonance) / resonance;
            10.0 * (1.0 - (1.0 - floor) / (1.0 + x * x)).log10()
        })
        .collect();
    Sweep::new(frequencies, s11_db)
}

/// One sweep per trace sample, spanning `baseline ± half_span`.
pub fn sweeps_for_trace(cfg: &ScenarioConfig, trace: &FrequencyTrace) -> Result<Vec<Sweep>> {
    let s = cfg.sweep;
    let span = (
        cfg.baseline_frequency - s.half_span,
        cfg.baseline_frequency + s.half_span,
    );
    trace
        .samples
        .iter()
        .map(|&f| synth_sweep(f, s.depth_db, s.q_factor, span, s.n_points))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quiet() -> ScenarioConfig {
        ScenarioConfig {
            noise_sigma: 0.0,
            ..Default::default()
        }
    }

    #[test]
    fn empty_noiseless_is_constant() {
        let cfg = quiet();
        let tr = simulate_scenario(&cfg).unwrap();
        assert_eq!(tr.len(), cfg.sample_count());
        assert!(tr.samples.iter().all(|&f| f == cfg.baseline_frequency));
    }

    #[test]
    fn sample_count_covers_duration() {
        let cfg = ScenarioConfig {
            duration: 600.0,
            ..quiet()
        };
        assert_eq!(cfg.sample_count(), 5455);
    }

    #[test]
    fn ripple_burst_shape() {
        let ev = SolidEvent {
            ripple_amplitude: 1.0,
            ..Default::default()
        };
        assert_eq!(ripple_burst(0.0, &ev), 0.0);
        let at_decay = ripple_burst(ev.decay_time, &ev);
        assert!(at_decay.abs() <= (-1.0f64).exp() + 1e-15);
        assert_eq!(ripple_burst(-0.5, &ev), 0.0);
        let heavy = SolidEvent { mass: 100.0, ..ev };
        for t in [0.05, 0.3, 1.1, 4.0] {
            assert_eq!(ripple_burst(t, &heavy), 2.0 * ripple_burst(t, &ev));
        }
    }

    #[test]
    fn event_order_is_checked() {
        let cfg = ScenarioConfig {
            events: vec![
                ScenarioEvent::Solid(SolidEvent::at(20.0)),
                ScenarioEvent::Solid(SolidEvent::at(10.0)),
            ],
            ..quiet()
        };
        assert!(matches!(simulate_scenario(&cfg), Err(Error::Config(_))));
        let cfg = ScenarioConfig {
            events: vec![ScenarioEvent::Solid(SolidEvent::at(-1.0))],
            ..quiet()
        };
        assert!(simulate_scenario(&cfg).is_err());
    }

    #[test]
    fn nyquist_and_band_checks() {
        let mut ev = SolidEvent::at(1.0);
        ev.ripple_frequency = 4.0;
        let cfg = ScenarioConfig {
            events: vec![ScenarioEvent::Solid(ev)],
            ..quiet()
        };
        assert!(cfg.validate().is_err());
        let cfg = ScenarioConfig {
            allow_out_of_band: true,
            ..cfg
        };
        assert!(cfg.validate().is_ok());
        ev.ripple_frequency = 5.0;
        let cfg = ScenarioConfig {
            events: vec![ScenarioEvent::Solid(ev)],
            ..cfg
        };
        assert!(cfg.validate().is_err());
        // every default ripple frequency sits below Nyquist at 110 ms
        assert!(RIPPLE_BAND.1 < quiet().nyquist());
    }

    #[test]
    fn baseline_band() {
        let cfg = ScenarioConfig {
            baseline_frequency: 900e6,
            ..quiet()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn liquid_settles_to_mixture_shift() {
        let inj = Injection {
            concentration: 0.125,
            total_volume: 220.0,
            rate: 17.0,
            start_time: 5.0,
        };
        let cfg = ScenarioConfig {
            duration: 80.0,
            liquid_ripple_ratio: 0.0,
            events: vec![ScenarioEvent::Liquid(inj)],
            ..quiet()
        };
        let tr = simulate_scenario(&cfg).unwrap();
        let mix = mix_concentration(cfg.basin, 220.0, 0.125).unwrap();
        let want = steady_shift(mix.concentration, &cfg.calibration).unwrap();
        let end_of_pour = inj.start_time + inj.duration();
        let settle = end_of_pour + 7.0 * cfg.mixing_time_constant;
        for (t, f) in tr.iter().filter(|(t, _)| *t >= settle) {
            let got = f - cfg.baseline_frequency;
            assert!(
                ((got - want) / want).abs() < 1e-3,
                "t = {t}: {got} vs {want}"
            );
        }
        // monotone rise
        assert!(tr.samples.windows(2).all(|w| w[1] >= w[0] - 1e-6));
    }

    #[test]
    fn deterministic_per_seed() {
        let cfg = ScenarioConfig {
            seed: 99,
            events: vec![ScenarioEvent::Solid(SolidEvent::at(3.0))],
            ..Default::default()
        };
        let a = simulate_scenario(&cfg).unwrap();
        let b = simulate_scenario(&cfg).unwrap();
        assert_eq!(a, b);
        let c = simulate_scenario(&ScenarioConfig { seed: 100, ..cfg }).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn noise_statistics() {
        let cfg = ScenarioConfig {
            duration: 10_000.0 * DEFAULT_SAMPLE_PERIOD,
            seed: 5,
            ..Default::default()
        };
        let tr = simulate_scenario(&cfg).unwrap();
        let dev: Vec<f64> = tr
            .samples
            .iter()
            .map(|f| f - cfg.baseline_frequency)
            .collect();
        let n = dev.len() as f64;
        let mean = dev.iter().sum::<f64>() / n;
        let sd = (dev.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        assert!(dev.len() >= 10_000);
        assert!(mean.abs() < 4.0 * cfg.noise_sigma / n.sqrt());
        assert!(((sd - cfg.noise_sigma) / cfg.noise_sigma).abs() < 0.05);
    }

    #[test]
    fn sweep_dip_sits_on_resonance() {
        let sw = synth_sweep(700e6, 20.0, 50.0, (695e6, 705e6), 101).unwrap();
        let imin = sw
            .s11_db
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .unwrap()
            .0;
        assert_eq!(imin, 50);
        assert!((sw.s11_db[50] + 20.0).abs() < 1e-9);
        assert!(synth_sweep(710e6, 20.0, 50.0, (695e6, 705e6), 101).is_err());
        assert!(synth_sweep(700e6, 20.0, 50.0, (695e6, 705e6), 8).is_err());
    }

    /// Full width where the Lorentzian absorption falls to half, measured on
    /// the sampled curve by linear interpolation.
    fn absorption_width(sw: &Sweep, depth_db: f64) -> f64 {
        let floor = 10f64.powf(-depth_db / 10.0);
        let absorb: Vec<f64> = sw
            .s11_db
            .iter()
            .map(|db| (1.0 - 10f64.powf(db / 10.0)) / (1.0 - floor))
            .collect();
        let crossings: Vec<f64> = absorb
            .windows(2)
            .enumerate()
            .filter(|(_, w)| (w[0] - 0.5) * (w[1] - 0.5) < 0.0)
            .map(|(i, w)| {
                let u = (0.5 - w[0]) / (w[1] - w[0]);
                sw.frequencies[i] + u * (sw.frequencies[i + 1] - sw.frequencies[i])
            })
            .collect();
        assert_eq!(crossings.len(), 2);
        crossings[1] - crossings[0]
    }

    #[test]
    fn doubling_q_halves_bandwidth() {
        let span = (650e6, 750e6);
        // an even count keeps the half-absorption points off grid nodes
        let w1 = absorption_width(&synth_sweep(700e6, 20.0, 40.0, span, 20000).unwrap(), 20.0);
        let w2 = absorption_width(&synth_sweep(700e6, 20.0, 80.0, span, 20000).unwrap(), 20.0);
        assert!((w1 / w2 - 2.0).abs() < 1e-3, "{w1} {w2}");
        assert!((w1 - 700e6 / 40.0).abs() < 1e3);
    }
}
