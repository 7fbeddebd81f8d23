//! Complex permittivity of pure and saline water.
//!
//! Permittivity is stored as `ε = ε′ − j·ε″` with `ε″ ≥ 0`. The single-pole
//! Debye relaxation `ε∞ + (εs − ε∞)/(1 + j·2πfτ)` therefore has a positive
//! loss part, and ionic conduction adds `σ/(2πf·ε0)` to it.
//!
//! Concentration dependence of the static permittivity, relaxation time and
//! conductivity follows Stogryn's polynomial fits for NaCl solutions, anchored
//! to configurable pure-water values at 25 °C. Measured calibrations can be
//! substituted through [`SalinityTable`].

use std::f64::consts::PI;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Vacuum permittivity in F/m (CODATA 2018).
pub const VACUUM_PERMITTIVITY: f64 = 8.854_187_812_8e-12;

/// Reference temperature for the pure-water defaults, °C.
pub const REFERENCE_TEMPERATURE_C: f64 = 25.0;

const MAX_CONCENTRATION: f64 = 1.0;
const MAX_TEMPERATURE_C: f64 = 50.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexPermittivity {
    /// ε′
    pub real_part: f64,
    /// ε″, non-negative
    pub loss_part: f64,
}

impl ComplexPermittivity {
    pub fn new(real_part: f64, loss_part: f64) -> Self {
        Self {
            real_part,
            loss_part,
        }
    }

    /// `ε′ − j·ε″` as a complex number.
    pub fn to_complex(self) -> Complex64 {
        Complex64::new(self.real_part, -self.loss_part)
    }
}

/// Single-relaxation Debye parameters of pure water.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaterDebyeParams {
    pub eps_inf: f64,
    pub eps_static: f64,
    /// Relaxation time, seconds.
    pub tau: f64,
}

impl WaterDebyeParams {
    /// Pure water at 25 °C.
    pub const DEFAULT: WaterDebyeParams = WaterDebyeParams {
        eps_inf: 5.2,
        eps_static: 78.36,
        tau: 8.27e-12,
    };

    pub fn validate(&self) -> Result<()> {
        if !(self.eps_inf > 1.0 && self.eps_static > self.eps_inf && self.tau > 0.0) {
            return Err(Error::domain(format!(
                "water Debye parameters need eps_static > eps_inf > 1 and tau > 0, got {self:?}"
            )));
        }
        Ok(())
    }
}

impl Default for WaterDebyeParams {
    fn default() -> Self {
        Self::DEFAULT
    }
}

/// Debye parameters of an ionic solution plus its DC conductivity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SalineDebyeParams {
    pub eps_inf: f64,
    pub eps_static: f64,
    pub tau: f64,
    /// S/m
    pub conductivity: f64,
}

impl SalineDebyeParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.eps_static > self.eps_inf && self.tau > 0.0 && self.conductivity >= 0.0) {
            return Err(Error::domain(format!(
                "saline Debye parameters need eps_static > eps_inf, tau > 0, conductivity >= 0, got {self:?}"
            )));
        }
        Ok(())
    }
}

impl From<WaterDebyeParams> for SalineDebyeParams {
    fn from(w: WaterDebyeParams) -> Self {
        Self {
            eps_inf: w.eps_inf,
            eps_static: w.eps_static,
            tau: w.tau,
            conductivity: 0.0,
        }
    }
}

fn check_frequency(f: f64) -> Result<()> {
    if f > 0.0 && f.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "frequency must be positive, got {f}"
        )))
    }
}

/// Debye relaxation term split into (ε′, ε″) without conduction loss.
fn debye_term(f: f64, eps_inf: f64, eps_static: f64, tau: f64) -> ComplexPermittivity {
    let x = 2.0 * PI * f * tau;
    let denom = 1.0 + x * x;
    let delta = eps_static - eps_inf;
    ComplexPermittivity {
        real_part: eps_inf + delta / denom,
        loss_part: delta * x / denom,
    }
}

pub fn debye_pure_water(f: f64, p: &WaterDebyeParams) -> Result<ComplexPermittivity> {
    check_frequency(f)?;
    Ok(debye_term(f, p.eps_inf, p.eps_static, p.tau))
}

/// Conduction contribution `σ/(2πf·ε0)` to the loss part.
pub fn conduction_loss(f: f64, conductivity: f64) -> f64 {
    conductivity / (2.0 * PI * f * VACUUM_PERMITTIVITY)
}

pub fn debye_saline(f: f64, p: &SalineDebyeParams) -> Result<ComplexPermittivity> {
    check_frequency(f)?;
    let mut e = debye_term(f, p.eps_inf, p.eps_static, p.tau);
    e.loss_part += conduction_loss(f, p.conductivity);
    Ok(e)
}

pub fn loss_tangent(e: ComplexPermittivity) -> Result<f64> {
    if e.real_part <= 0.0 {
        return Err(Error::domain(format!(
            "loss tangent needs a positive real part, got {}",
            e.real_part
        )));
    }
    Ok(e.loss_part / e.real_part)
}

/// Stogryn (1971) fits. Temperature in °C, normality in mol/L.
mod stogryn {
    use std::f64::consts::PI;

    pub fn eps_static_water(t: f64) -> f64 {
        87.74 - 0.40008 * t + 9.398e-4 * t * t + 1.410e-6 * t * t * t
    }

    pub fn tau_water(t: f64) -> f64 {
        (1.1109e-10 - 3.824e-12 * t + 6.938e-14 * t * t - 5.096e-16 * t * t * t) / (2.0 * PI)
    }

    /// Multiplier on the static permittivity.
    pub fn eps_factor(n: f64) -> f64 {
        1.0 - 0.2551 * n + 5.151e-2 * n * n - 6.889e-3 * n * n * n
    }

    /// Multiplier on the relaxation time.
    pub fn tau_factor(n: f64, t: f64) -> f64 {
        0.1463e-2 * n * t + 1.0 - 0.04896 * n - 0.02967 * n * n + 5.644e-3 * n * n * n
    }

    pub fn conductivity(n: f64, t: f64) -> f64 {
        let at_25 = n
            * (10.394 - 2.3776 * n + 0.68258 * n * n - 0.13538 * n.powi(3) + 1.0086e-2 * n.powi(4));
        let d = 25.0 - t;
        let alpha = 2.033e-2 + 1.266e-4 * d + 2.464e-6 * d * d
            - n * (1.849e-5 - 2.551e-7 * d + 2.551e-8 * d * d);
        at_25 * (-d * alpha).exp()
    }
}

/// Measured (concentration → Debye parameters) calibration, linearly
/// interpolated in concentration.
#[derive(Debug, Clone, PartialEq)]
pub struct SalinityTable {
    rows: Vec<SalinityRow>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SalinityRow {
    pub concentration_mol_per_l: f64,
    pub eps_static: f64,
    pub tau_s: f64,
    pub conductivity_s_per_m: f64,
}

impl SalinityTable {
    pub fn new(rows: Vec<SalinityRow>) -> Result<Self> {
        if rows.len() < 2 {
            return Err(Error::config("salinity table needs at least two rows"));
        }
        for w in rows.windows(2) {
            let (a, b) = (w[0], w[1]);
            if b.concentration_mol_per_l <= a.concentration_mol_per_l {
                return Err(Error::config(
                    "salinity table concentrations must be strictly increasing",
                ));
            }
            if b.eps_static > a.eps_static {
                return Err(Error::config(
                    "salinity table eps_static must be non-increasing in concentration",
                ));
            }
            if b.conductivity_s_per_m <= a.conductivity_s_per_m {
                return Err(Error::config(
                    "salinity table conductivity must be increasing in concentration",
                ));
            }
        }
        if rows
            .iter()
            .any(|r| r.tau_s <= 0.0 || r.conductivity_s_per_m < 0.0)
        {
            return Err(Error::config(
                "salinity table has non-positive tau or negative conductivity",
            ));
        }
        Ok(Self { rows })
    }

    /// Reads `concentration_mol_per_l,eps_static,tau_s,conductivity_s_per_m`.
    pub fn from_csv(path: &Path) -> Result<Self> {
        let mut reader =
            csv::Reader::from_path(path).map_err(|e| Error::parse(path, e.to_string()))?;
        let rows = reader
            .deserialize()
            .collect::<std::result::Result<Vec<SalinityRow>, _>>()
            .map_err(|e| Error::parse(path, e.to_string()))?;
        Self::new(rows)
    }

    pub fn span(&self) -> (f64, f64) {
        (
            self.rows[0].concentration_mol_per_l,
            self.rows[self.rows.len() - 1].concentration_mol_per_l,
        )
    }

    fn lookup(&self, c: f64) -> Result<SalinityRow> {
        let (lo, hi) = self.span();
        if !(lo..=hi).contains(&c) {
            return Err(Error::Range {
                what: "concentration",
                value: c,
                lo,
                hi,
            });
        }
        let i = self
            .rows
            .partition_point(|r| r.concentration_mol_per_l <= c)
            .clamp(1, self.rows.len() - 1);
        let (a, b) = (self.rows[i - 1], self.rows[i]);
        let s = (c - a.concentration_mol_per_l)
            / (b.concentration_mol_per_l - a.concentration_mol_per_l);
        let lerp = |x: f64, y: f64| x + s * (y - x);
        Ok(SalinityRow {
            concentration_mol_per_l: c,
            eps_static: lerp(a.eps_static, b.eps_static),
            tau_s: lerp(a.tau_s, b.tau_s),
            conductivity_s_per_m: lerp(a.conductivity_s_per_m, b.conductivity_s_per_m),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub enum SalinityModel {
    #[default]
    Stogryn1971,
    Table(SalinityTable),
}

/// Pure-water reference values plus the salinity law.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DielectricModel {
    /// Pure water at [`REFERENCE_TEMPERATURE_C`].
    pub water: WaterDebyeParams,
    pub salinity: SalinityModel,
}

impl DielectricModel {
    /// Pure-water parameters at `temperature`, scaled from the 25 °C
    /// reference by the ratio of Stogryn's temperature fits.
    pub fn water_at(&self, temperature: f64) -> WaterDebyeParams {
        let t0 = REFERENCE_TEMPERATURE_C;
        WaterDebyeParams {
            eps_inf: self.water.eps_inf,
            eps_static: self.water.eps_static * stogryn::eps_static_water(temperature)
                / stogryn::eps_static_water(t0),
            tau: self.water.tau * stogryn::tau_water(temperature) / stogryn::tau_water(t0),
        }
    }

    pub fn saline_params(&self, c: f64, temperature: f64) -> Result<SalineDebyeParams> {
        if !(0.0..=MAX_CONCENTRATION).contains(&c) {
            return Err(Error::Range {
                what: "concentration (mol/L)",
                value: c,
                lo: 0.0,
                hi: MAX_CONCENTRATION,
            });
        }
        if !(0.0..=MAX_TEMPERATURE_C).contains(&temperature) {
            return Err(Error::Range {
                what: "temperature (degC)",
                value: temperature,
                lo: 0.0,
                hi: MAX_TEMPERATURE_C,
            });
        }
        let water = self.water_at(temperature);
        let params = match &self.salinity {
            // NaCl is monovalent, so normality equals molarity.
            SalinityModel::Stogryn1971 => {
                let n = c;
                SalineDebyeParams {
                    eps_inf: water.eps_inf,
                    eps_static: water.eps_static * stogryn::eps_factor(n),
                    tau: water.tau * stogryn::tau_factor(n, temperature),
                    conductivity: stogryn::conductivity(n, temperature),
                }
            }
            SalinityModel::Table(table) => {
                let row = table.lookup(c)?;
                SalineDebyeParams {
                    eps_inf: water.eps_inf,
                    eps_static: row.eps_static,
                    tau: row.tau_s,
                    conductivity: row.conductivity_s_per_m,
                }
            }
        };
        params.validate()?;
        Ok(params)
    }
}

/// Saline Debye parameters from the default Stogryn model.
pub fn saline_params_from_concentration(c: f64, temperature: f64) -> Result<SalineDebyeParams> {
    DielectricModel::default().saline_params(c, temperature)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    /// Straight complex evaluation of the Debye formula, used as an oracle.
    fn oracle(f: f64, eps_inf: f64, eps_static: f64, tau: f64, sigma: f64) -> Complex64 {
        let j = Complex64::i();
        let e = Complex64::from(eps_inf)
            + Complex64::from(eps_static - eps_inf) / (1.0 + j * 2.0 * PI * f * tau);
        e - j * sigma / (2.0 * PI * f * VACUUM_PERMITTIVITY)
    }

    #[test]
    fn dc_limit() {
        let e = debye_pure_water(1.0, &WaterDebyeParams::DEFAULT).unwrap();
        assert!((e.real_part - 78.36).abs() < 1e-6);
        assert!(e.loss_part.abs() < 1e-6);
    }

    #[test]
    fn loss_peak_at_relaxation_frequency() {
        let p = WaterDebyeParams::DEFAULT;
        let e = debye_pure_water(1.0 / (2.0 * PI * p.tau), &p).unwrap();
        assert!((e.loss_part - (p.eps_static - p.eps_inf) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn matches_complex_oracle_at_700_mhz() {
        let p = WaterDebyeParams::DEFAULT;
        let e = debye_pure_water(700e6, &p).unwrap();
        let z = oracle(700e6, p.eps_inf, p.eps_static, p.tau, 0.0);
        assert!(rel(e.real_part, z.re) < 1e-14);
        assert!(rel(e.loss_part, -z.im) < 1e-12);
        // Frozen from an mpmath evaluation.
        assert!(rel(e.real_part, 78.263_335_650_757_13) < 1e-12);
        assert!(rel(e.loss_part, 2.657_558_991_667_734) < 1e-12);
    }

    #[test]
    fn rejects_non_positive_frequency() {
        let p = WaterDebyeParams::DEFAULT;
        assert!(matches!(debye_pure_water(0.0, &p), Err(Error::Domain(_))));
        assert!(matches!(
            debye_saline(-1.0, &p.into()),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn saline_reduces_to_pure_water() {
        let w = WaterDebyeParams::DEFAULT;
        for k in 0..50 {
            let f = 1e8 * 10f64.powf(2.0 * k as f64 / 49.0);
            let a = debye_pure_water(f, &w).unwrap();
            let b = debye_saline(f, &w.into()).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn conductivity_term_at_700_mhz() {
        let w = WaterDebyeParams::DEFAULT;
        let mut p: SalineDebyeParams = w.into();
        let base = debye_saline(700e6, &p).unwrap();
        p.conductivity = 1.0;
        let lossy = debye_saline(700e6, &p).unwrap();
        // 1/(2π·700e6·ε0), hand-evaluated
        assert!((lossy.loss_part - base.loss_part - 25.678_719_406_5).abs() < 1e-9);
        assert!(
            rel(
                lossy.loss_part - base.loss_part,
                oracle(700e6, 0.0, 0.0, 1.0, 1.0).im.abs()
            ) < 1e-12
        );
        assert_eq!(lossy.real_part, base.real_part);
    }

    #[test]
    fn conduction_diverges_at_low_frequency() {
        let mut p: SalineDebyeParams = WaterDebyeParams::DEFAULT.into();
        p.conductivity = 0.5;
        for f in [1e3, 1e4, 1e5] {
            let hi = debye_saline(f, &p).unwrap().loss_part;
            let lo = debye_saline(f / 10.0, &p).unwrap().loss_part;
            assert!(lo > 9.0 * hi);
        }
    }

    #[test]
    fn zero_concentration_gives_water_defaults() {
        let p = saline_params_from_concentration(0.0, 25.0).unwrap();
        let w = WaterDebyeParams::DEFAULT;
        assert_eq!(p.eps_static, w.eps_static);
        assert_eq!(p.eps_inf, w.eps_inf);
        assert_eq!(p.tau, w.tau);
        assert_eq!(p.conductivity, 0.0);
    }

    #[test]
    fn conductivity_increases_with_concentration() {
        let a = saline_params_from_concentration(0.0625, 25.0).unwrap();
        let b = saline_params_from_concentration(0.125, 25.0).unwrap();
        assert!(b.conductivity > a.conductivity);
        assert!(b.eps_static <= a.eps_static);
    }

    #[test]
    fn half_molar_fixture() {
        // Independent mpmath evaluation of the Stogryn polynomials at N = 0.5, T = 25.
        let p = saline_params_from_concentration(0.5, 25.0).unwrap();
        assert!(rel(p.eps_static, 69.306_785_145) < 1e-9);
        assert!(rel(p.tau, 8.163_279_785e-12) < 1e-9);
        assert!(rel(p.conductivity, 4.679_776_437_5) < 1e-9);
        assert_eq!(p.eps_inf, 5.2);
    }

    #[test]
    fn out_of_range_inputs() {
        assert!(matches!(
            saline_params_from_concentration(1.5, 25.0),
            Err(Error::Range { .. })
        ));
        assert!(matches!(
            saline_params_from_concentration(0.1, 60.0),
            Err(Error::Range { .. })
        ));
        assert!(saline_params_from_concentration(-0.01, 25.0).is_err());
    }

    #[test]
    fn loss_tangent_cases() {
        let t = loss_tangent(ComplexPermittivity::new(2.2, 0.0198)).unwrap();
        assert!((t - 0.009).abs() < 1e-15);
        assert_eq!(
            loss_tangent(ComplexPermittivity::new(3.0, 0.0)).unwrap(),
            0.0
        );
        assert!(loss_tangent(ComplexPermittivity::new(0.0, 1.0)).is_err());

        let p = WaterDebyeParams::DEFAULT;
        let z = oracle(700e6, p.eps_inf, p.eps_static, p.tau, 0.0);
        let t = loss_tangent(debye_pure_water(700e6, &p).unwrap()).unwrap();
        assert!(rel(t, -z.im / z.re) < 1e-12);
    }

    #[test]
    fn table_model_interpolates() {
        let table = SalinityTable::new(vec![
            SalinityRow {
                concentration_mol_per_l: 0.0,
                eps_static: 78.0,
                tau_s: 8e-12,
                conductivity_s_per_m: 0.0,
            },
            SalinityRow {
                concentration_mol_per_l: 1.0,
                eps_static: 60.0,
                tau_s: 7e-12,
                conductivity_s_per_m: 8.0,
            },
        ])
        .unwrap();
        let model = DielectricModel {
            salinity: SalinityModel::Table(table),
            ..Default::default()
        };
        let p = model.saline_params(0.25, 25.0).unwrap();
        assert!((p.eps_static - 73.5).abs() < 1e-12);
        assert!((p.conductivity - 2.0).abs() < 1e-12);
    }

    #[test]
    fn table_rejects_non_monotone_rows() {
        let row = |c, e, s| SalinityRow {
            concentration_mol_per_l: c,
            eps_static: e,
            tau_s: 8e-12,
            conductivity_s_per_m: s,
        };
        assert!(SalinityTable::new(vec![row(0.0, 78.0, 0.0), row(0.5, 79.0, 1.0)]).is_err());
        assert!(SalinityTable::new(vec![row(0.0, 78.0, 1.0), row(0.5, 70.0, 1.0)]).is_err());
        assert!(SalinityTable::new(vec![row(0.0, 78.0, 0.0)]).is_err());
    }
}
