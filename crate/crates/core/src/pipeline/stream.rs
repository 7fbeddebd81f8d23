//! Single-pass detector.
//!
//! Every `hop` samples the last `window_length + 1` resonance readings are
//! turned into a ripple-band magnitude. A magnitude above the solid threshold
//! triggers a flush: detection locks out for `settle_time`, then all state
//! (baseline, pure-water reference) starts afresh since washing also removes
//! dissolved salt. Otherwise the raw level is watched for a liquid onset, and
//! `liquid_window` seconds of the transient are fitted for a concentration.

use std::collections::VecDeque;

use serde::Serialize;

use super::{
    analyze_liquid, classify_window, PipelineConfig, RunningStats, WindowAnalyzer, WindowClass,
};
use crate::error::{Error, Result};
use crate::response::ExpFit;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum EventClass {
    Solid,
    Liquid,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Action {
    Flush,
    Analyze,
    Idle,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventReport {
    /// Located event time, s. For liquids, the onset of the transient.
    pub time: f64,
    pub class: EventClass,
    /// Largest ripple-band magnitude tied to the event, Hz/s.
    pub band_peak_magnitude: f64,
    /// Mixture molarity; `None` for liquids outside the calibration span.
    pub concentration: Option<f64>,
    pub fit: Option<ExpFit>,
    pub action: Action,
}

impl EventReport {
    pub fn out_of_span(&self) -> bool {
        self.class == EventClass::Liquid && self.concentration.is_none()
    }
}

#[derive(Debug)]
struct Track {
    onset: f64,
    pre_level: f64,
    sigma: f64,
    samples: Vec<(f64, f64)>,
}

#[derive(Debug)]
enum Mode {
    Monitor,
    Tracking(Track),
    Lockout { until: f64 },
}

pub struct Pipeline {
    cfg: PipelineConfig,
    analyzer: WindowAnalyzer,
    ring: VecDeque<f64>,
    since_hop: usize,
    /// (time, band magnitude) over the last `baseline_window` seconds.
    history: VecDeque<(f64, f64)>,
    mode: Mode,
    baseline: RunningStats,
    /// Noise sigma fixed when the baseline arms, so a slow ramp cannot widen
    /// its own detection band.
    sigma: Option<f64>,
    pending: Vec<(f64, f64)>,
    water_reference: Option<f64>,
    last_time: Option<f64>,
    last_report_time: f64,
    reports: usize,
    max_magnitude: f64,
    /// Largest magnitude seen since the current liquid onset.
    track_magnitude: f64,
}

impl Pipeline {
    pub fn new(cfg: PipelineConfig) -> Result<Self> {
        cfg.validate()?;
        let analyzer = WindowAnalyzer::new(&cfg)?;
        let n = analyzer.raw_len();
        Ok(Self {
            analyzer,
            ring: VecDeque::with_capacity(n),
            since_hop: 0,
            history: VecDeque::new(),
            mode: Mode::Monitor,
            baseline: RunningStats::default(),
            sigma: None,
            pending: Vec::with_capacity(3),
            water_reference: cfg.reference_frequency,
            last_time: None,
            last_report_time: f64::NEG_INFINITY,
            reports: 0,
            max_magnitude: 0.0,
            track_magnitude: 0.0,
            cfg,
        })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.cfg
    }

    /// Feeds one sample. Returns a report when one completes at this sample.
    pub fn push(&mut self, t: f64, f: f64) -> Result<Option<EventReport>> {
        if !(t.is_finite() && f.is_finite()) {
            return Err(Error::Ingest(format!("non-finite sample ({t}, {f})")));
        }
        if let Some(prev) = self.last_time {
            let dt = t - prev;
            let p = self.cfg.sample_period;
            if (dt - p).abs() > self.cfg.jitter_tolerance * p {
                return Err(Error::Ingest(format!(
                    "sample at {t} s is {dt} s after the previous one; expected {p} s"
                )));
            }
        }
        self.last_time = Some(t);

        if let Mode::Lockout { until } = self.mode {
            if t < until {
                return Ok(None);
            }
            self.reset();
        }

        if let Some(report) = self.spectral_step(t, f)? {
            return Ok(Some(self.emit(report)));
        }
        let report = match self.mode {
            Mode::Monitor => {
                self.monitor(t, f);
                None
            }
            Mode::Tracking(ref mut track) => {
                track.samples.push((t, f));
                if t - track.onset >= self.cfg.liquid_window {
                    self.close_track()
                } else {
                    None
                }
            }
            Mode::Lockout { .. } => unreachable!("lockout handled above"),
        };
        Ok(report.map(|r| self.emit(r)))
    }

    /// Ends the stream. Analyses a transient still being tracked, and returns
    /// an idle summary if nothing was ever reported.
    pub fn finish(&mut self) -> Option<EventReport> {
        if matches!(self.mode, Mode::Tracking(_)) {
            if let Some(r) = self.close_track() {
                return Some(self.emit(r));
            }
        }
        if self.reports == 0 {
            let r = EventReport {
                time: self.last_time.unwrap_or(0.0),
                class: EventClass::None,
                band_peak_magnitude: self.max_magnitude,
                concentration: None,
                fit: None,
                action: Action::Idle,
            };
            return Some(self.emit(r));
        }
        None
    }

    fn emit(&mut self, mut r: EventReport) -> EventReport {
        r.time = r.time.max(self.last_report_time);
        self.last_report_time = r.time;
        self.reports += 1;
        r
    }

    fn reset(&mut self) {
        self.mode = Mode::Monitor;
        self.ring.clear();
        self.since_hop = 0;
        self.history.clear();
        self.baseline = RunningStats::default();
        self.sigma = None;
        self.pending.clear();
        self.water_reference = self.cfg.reference_frequency;
    }

    /// Median band magnitude over the baseline window. Zero until the window
    /// is full, so a burst's own leading edge cannot raise the threshold.
    fn noise_floor(&self) -> f64 {
        let hop_time = self.cfg.hop as f64 * self.cfg.sample_period;
        let needed = ((self.cfg.baseline_window / hop_time).floor() as usize).max(1);
        if self.history.len() < needed {
            return 0.0;
        }
        let mut v: Vec<f64> = self.history.iter().map(|h| h.1).collect();
        v.sort_by(f64::total_cmp);
        let m = v.len() / 2;
        if v.len() % 2 == 1 {
            v[m]
        } else {
            0.5 * (v[m - 1] + v[m])
        }
    }

    fn spectral_step(&mut self, t: f64, f: f64) -> Result<Option<EventReport>> {
        let n = self.analyzer.raw_len();
        if self.ring.len() == n {
            self.ring.pop_front();
        }
        self.ring.push_back(f);
        self.since_hop += 1;
        if self.ring.len() < n {
            return Ok(None);
        }
        // first full window is analysed immediately, then every hop
        if self.since_hop < self.cfg.hop && self.since_hop != n {
            return Ok(None);
        }
        self.since_hop = 0;

        let feature = self.analyzer.analyze(self.ring.iter())?;
        let mag = feature.peak.magnitude;
        self.max_magnitude = self.max_magnitude.max(mag);
        if matches!(self.mode, Mode::Tracking(_)) {
            self.track_magnitude = self.track_magnitude.max(mag);
        }

        let floor = self.noise_floor();
        if classify_window(mag, &self.cfg, floor) == WindowClass::Solid {
            let dt = self.cfg.sample_period;
            let located = t - (n - 1 - feature.burst_index) as f64 * dt;
            log::debug!(
                "solid at {located:.2} s (detected {t:.2} s, {mag:.0} Hz/s, floor {floor:.0})"
            );
            self.mode = Mode::Lockout {
                until: t + self.cfg.settle_time,
            };
            self.ring.clear();
            return Ok(Some(EventReport {
                time: located,
                class: EventClass::Solid,
                band_peak_magnitude: mag,
                concentration: None,
                fit: None,
                action: Action::Flush,
            }));
        }

        self.history.push_back((t, mag));
        while let Some(&(t0, _)) = self.history.front() {
            if t - t0 > self.cfg.baseline_window {
                self.history.pop_front();
            } else {
                break;
            }
        }
        Ok(None)
    }

    fn monitor(&mut self, t: f64, f: f64) {
        let armed = self.baseline.count() as f64 * self.cfg.sample_period >= self.cfg.min_baseline;
        if !armed {
            self.baseline.push(f);
            return;
        }
        let sigma = *self
            .sigma
            .get_or_insert(self.baseline.std().max(self.cfg.min_noise_sigma));
        let mean = self.baseline.mean();
        if (f - mean).abs() > 3.0 * sigma {
            self.pending.push((t, f));
            if self.pending.len() == 3 {
                log::debug!("liquid onset at {:.2} s", self.pending[0].0);
                self.water_reference.get_or_insert(mean);
                self.track_magnitude = 0.0;
                self.mode = Mode::Tracking(Track {
                    onset: self.pending[0].0,
                    pre_level: mean,
                    sigma,
                    samples: std::mem::take(&mut self.pending),
                });
            }
        } else {
            // a broken run is treated as outliers, not baseline
            self.pending.clear();
            self.baseline.push(f);
        }
    }

    fn close_track(&mut self) -> Option<EventReport> {
        let Mode::Tracking(track) = std::mem::replace(&mut self.mode, Mode::Monitor) else {
            return None;
        };
        self.baseline = RunningStats::default();
        self.sigma = None;
        self.pending.clear();
        let reference = self.water_reference.unwrap_or(track.pre_level);
        match analyze_liquid(
            &track.samples,
            track.onset,
            track.pre_level,
            track.sigma,
            reference,
            &self.cfg,
        ) {
            Ok(est) => Some(EventReport {
                time: track.onset,
                class: EventClass::Liquid,
                band_peak_magnitude: self.track_magnitude,
                concentration: est.concentration,
                fit: Some(est.fit),
                action: Action::Analyze,
            }),
            Err(Error::NoEvent) => {
                log::debug!("transient at {:.2} s not significant", track.onset);
                None
            }
            Err(e) => {
                log::warn!("transient at {:.2} s not analysed: {e}", track.onset);
                None
            }
        }
    }
}

/// Runs a whole stream through a fresh [`Pipeline`].
pub fn run_pipeline(
    samples: impl IntoIterator<Item = (f64, f64)>,
    cfg: &PipelineConfig,
) -> Result<Vec<EventReport>> {
    let mut p = Pipeline::new(cfg.clone())?;
    let mut out = Vec::new();
    for (t, f) in samples {
        out.extend(p.push(t, f)?);
    }
    out.extend(p.finish());
    Ok(out)
}
