use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dielectric::{debye_saline, DielectricModel, REFERENCE_TEMPERATURE_C};
use crate::error::{Error, Result};

/// NaCl molarities spanning the sensor's tested range: the halving ladder
/// from 0.5 M plus the 3.125 mM detection floor.
pub const CONCENTRATION_LADDER: [f64; 9] = [
    3.125e-3,
    3.906_25e-3,
    7.812_5e-3,
    1.562_5e-2,
    3.125e-2,
    6.25e-2,
    0.125,
    0.25,
    0.5,
];

/// Monotone map from basin molarity to steady-state resonance shift.
///
/// Interpolation is piecewise linear in log-concentration. A segment that
/// starts at the `c = 0` baseline knot is linear in concentration instead.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationCurve {
    points: Vec<(f64, f64)>,
}

#[derive(Serialize, Deserialize)]
struct CalibrationRow {
    concentration_mol_per_l: f64,
    shift_hz: f64,
}

impl CalibrationCurve {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::config("calibration curve needs at least two points"));
        }
        if points
            .iter()
            .any(|&(c, s)| !(c >= 0.0 && c.is_finite() && s.is_finite()))
        {
            return Err(Error::config(
                "calibration concentrations must be finite and non-negative",
            ));
        }
        if points.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::config(
                "calibration concentrations must be strictly increasing",
            ));
        }
        let rising = points[1].1 > points[0].1;
        let monotone = points.windows(2).all(|w| {
            if rising {
                w[1].1 > w[0].1
            } else {
                w[1].1 < w[0].1
            }
        });
        if !monotone {
            return Err(Error::config(
                "calibration shifts must be strictly monotone",
            ));
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn concentration_span(&self) -> (f64, f64) {
        (self.points[0].0, self.points[self.points.len() - 1].0)
    }

    /// (min, max) of the shift values.
    pub fn shift_span(&self) -> (f64, f64) {
        let a = self.points[0].1;
        let b = self.points[self.points.len() - 1].1;
        (a.min(b), a.max(b))
    }

    fn increasing(&self) -> bool {
        self.points[1].1 > self.points[0].1
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut reader =
            csv::Reader::from_path(path).map_err(|e| Error::parse(path, e.to_string()))?;
        let headers = reader
            .headers()
            .map_err(|e| Error::parse(path, e.to_string()))?
            .clone();
        if headers.iter().collect::<Vec<_>>() != ["concentration_mol_per_l", "shift_hz"] {
            return Err(Error::parse(
                path,
                "expected header `concentration_mol_per_l,shift_hz`",
            ));
        }
        let points = reader
            .deserialize::<CalibrationRow>()
            .map(|r| r.map(|r| (r.concentration_mol_per_l, r.shift_hz)))
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::parse(path, e.to_string()))?;
        Self::new(points).map_err(|e| Error::parse(path, e.to_string()))
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "concentration_mol_per_l,shift_hz")?;
        for &(c, s) in &self.points {
            writeln!(out, "{c},{s}")?;
        }
        Ok(())
    }

    pub fn write_csv_file(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = std::io::BufWriter::new(file);
        self.write_csv(&mut out)
            .and_then(|_| out.flush())
            .map_err(|e| Error::io(path, e))
    }
}

/// Interpolation coordinate of a concentration within segment `[c0, c1]`.
fn segment_fraction(c0: f64, c1: f64, c: f64) -> f64 {
    if c0 == 0.0 {
        c / c1
    } else {
        (c / c0).ln() / (c1 / c0).ln()
    }
}

pub fn steady_shift(c: f64, curve: &CalibrationCurve) -> Result<f64> {
    let (lo, hi) = curve.concentration_span();
    if !(lo..=hi).contains(&c) {
        return Err(Error::Range {
            what: "concentration",
            value: c,
            lo,
            hi,
        });
    }
    let pts = &curve.points;
    let i = pts.partition_point(|p| p.0 <= c);
    if i > 0 && pts[i - 1].0 == c {
        return Ok(pts[i - 1].1);
    }
    let (c0, s0) = pts[i - 1];
    let (c1, s1) = pts[i];
    Ok(s0 + segment_fraction(c0, c1, c) * (s1 - s0))
}

pub fn invert_concentration(shift: f64, curve: &CalibrationCurve) -> Result<f64> {
    let (lo, hi) = curve.shift_span();
    if !(lo..=hi).contains(&shift) {
        return Err(Error::Range {
            what: "shift (Hz)",
            value: shift,
            lo,
            hi,
        });
    }
    let pts = &curve.points;
    let inc = curve.increasing();
    let i = pts.partition_point(|p| if inc { p.1 <= shift } else { p.1 >= shift });
    if i > 0 && pts[i - 1].1 == shift {
        return Ok(pts[i - 1].0);
    }
    let (c0, s0) = pts[i - 1];
    let (c1, s1) = pts[i];
    let u = (shift - s0) / (s1 - s0);
    Ok(if c0 == 0.0 {
        u * c1
    } else {
        c0 * (u * (c1 / c0).ln()).exp()
    })
}

/// Resonance shift from dielectric loading of the basin water.
///
/// The tracked resonance scales as `f0 / sqrt(1 + η (ε′(c)/ε′(0) − 1))`, where
/// `η` is the fraction of the resonator's stored electric energy that sits in
/// the water and `ε′` is evaluated at `f0` (the permittivity is taken as flat
/// across the 670–730 MHz band).
#[derive(Debug, Clone, PartialEq)]
pub struct ResonatorModel {
    pub baseline_frequency: f64,
    pub fill_factor: f64,
    pub temperature: f64,
    pub dielectric: DielectricModel,
}

impl Default for ResonatorModel {
    fn default() -> Self {
        Self {
            baseline_frequency: 700e6,
            fill_factor: 0.1,
            temperature: REFERENCE_TEMPERATURE_C,
            dielectric: DielectricModel::default(),
        }
    }
}

impl ResonatorModel {
    fn water_real_part(&self, c: f64) -> Result<f64> {
        let p = self.dielectric.saline_params(c, self.temperature)?;
        Ok(debye_saline(self.baseline_frequency, &p)?.real_part)
    }

    pub fn shift(&self, c: f64) -> Result<f64> {
        if !(self.fill_factor > 0.0 && self.fill_factor <= 1.0) {
            return Err(Error::config(format!(
                "fill factor must lie in (0, 1], got {}",
                self.fill_factor
            )));
        }
        let ratio = self.water_real_part(c)? / self.water_real_part(0.0)?;
        let f0 = self.baseline_frequency;
        Ok(f0 / (1.0 + self.fill_factor * (ratio - 1.0)).sqrt() - f0)
    }

    /// Calibration curve sampled on `grid` (mol/L).
    pub fn calibration(&self, grid: &[f64]) -> Result<CalibrationCurve> {
        let mut grid = grid.to_vec();
        grid.sort_by(f64::total_cmp);
        if grid.len() < 2 {
            return Err(Error::config(
                "calibration grid needs at least two concentrations",
            ));
        }
        if grid.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::config(
                "calibration grid has duplicate concentrations",
            ));
        }
        let points = grid
            .iter()
            .map(|&c| Ok((c, self.shift(c)?)))
            .collect::<Result<Vec<_>>>()?;
        CalibrationCurve::new(points)
    }
}

/// `0` followed by [`CONCENTRATION_LADDER`].
pub fn default_concentration_grid() -> Vec<f64> {
    std::iter::once(0.0).chain(CONCENTRATION_LADDER).collect()
}

/// Model-derived curve over the default grid.
pub fn default_calibration() -> CalibrationCurve {
    ResonatorModel::default()
        .calibration(&default_concentration_grid())
        .expect("default resonator model yields a monotone curve")
}

/// Parses a grid spec: comma-separated items, each a concentration or
/// `geom:START:STOP:N` (N log-spaced points), or the word `default`.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let spec = spec.trim();
    if spec == "default" {
        return Ok(default_concentration_grid());
    }
    let mut grid = Vec::new();
    for item in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        if let Some(rest) = item.strip_prefix("geom:") {
            let parts: Vec<&str> = rest.split(':').collect();
            let bad = || Error::config(format!("bad geometric range `{item}`"));
            if parts.len() != 3 {
                return Err(bad());
            }
            let start: f64 = parts[0].parse().map_err(|_| bad())?;
            let stop: f64 = parts[1].parse().map_err(|_| bad())?;
            let n: usize = parts[2].parse().map_err(|_| bad())?;
            if !(start > 0.0 && stop > start && n >= 2) {
                return Err(bad());
            }
            let ratio = (stop / start).ln() / (n - 1) as f64;
            grid.extend((0..n).map(|k| {
                if k == n - 1 {
                    stop
                } else {
                    start * (ratio * k as f64).exp()
                }
            }));
        } else {
            let c: f64 = item
                .parse()
                .map_err(|_| Error::config(format!("bad concentration `{item}`")))?;
            grid.push(c);
        }
    }
    if grid.iter().any(|c| !(0.0..=1.0).contains(c)) {
        return Err(Error::config(
            "grid concentrations must lie in [0, 1] mol/L",
        ));
    }
    Ok(grid)
}
