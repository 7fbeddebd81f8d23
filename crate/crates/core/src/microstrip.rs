//! Microstrip line parameters and open-stub design.
//!
//! Closed-form quasi-static formulas for the wide-trace case (`w/h >= 1`):
//!
//! ```text
//! eps_eff = (eps_r + 1)/2 + (eps_r - 1)/2 * (1 + 12 h/w)^(-1/2)
//! Z0      = 120π / (sqrt(eps_eff) * (w/h + 1.393 + 0.667 ln(w/h + 1.444)))
//! ```
//!
//! Line sections use the lossless input-impedance transform, and an open stub
//! presents `-j Z0 cot(βl)`. Poles of either expression come back as
//! [`Impedance::Pole`] instead of an overflowing complex number.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

const POLE_RATIO: f64 = 1e-12;

/// Substrate record for the sensor board.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Substrate {
    pub eps_r: f64,
    pub tan_delta: f64,
    /// Dielectric thickness, m.
    pub height: f64,
    /// Copper cladding thickness, m. Informational only.
    pub copper_thickness: f64,
}

impl Substrate {
    /// RT5880 laminate.
    pub const RT5880: Substrate = Substrate {
        eps_r: 2.2,
        tan_delta: 0.009,
        height: 0.79e-3,
        copper_thickness: 0.018e-3,
    };
}

impl Default for Substrate {
    fn default() -> Self {
        Self::RT5880
    }
}

/// Input impedance of a line section, or a pole.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Impedance {
    Finite(Complex64),
    Pole,
}

impl Impedance {
    pub fn finite(self) -> Option<Complex64> {
        match self {
            Impedance::Finite(z) => Some(z),
            Impedance::Pole => None,
        }
    }

    pub fn is_pole(self) -> bool {
        matches!(self, Impedance::Pole)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Termination {
    Load(Complex64),
    Open,
}

fn check_geometry(w: f64, h: f64, eps_r: f64) -> Result<()> {
    if !(w > 0.0 && h > 0.0) {
        return Err(Error::domain(format!(
            "trace width and substrate height must be positive, got w = {w}, h = {h}"
        )));
    }
    if !(eps_r >= 1.0) {
        return Err(Error::domain(format!(
            "substrate eps_r must be >= 1, got {eps_r}"
        )));
    }
    Ok(())
}

pub fn effective_permittivity(w: f64, h: f64, eps_r: f64) -> Result<f64> {
    check_geometry(w, h, eps_r)?;
    Ok((eps_r + 1.0) / 2.0 + (eps_r - 1.0) / 2.0 / (1.0 + 12.0 * h / w).sqrt())
}

pub fn characteristic_impedance(w: f64, h: f64, eps_r: f64) -> Result<f64> {
    let eps_eff = effective_permittivity(w, h, eps_r)?;
    let ratio = w / h;
    if ratio < 1.0 {
        return Err(Error::Validity { ratio });
    }
    Ok(120.0 * PI / (eps_eff.sqrt() * (ratio + 1.393 + 0.667 * (ratio + 1.444).ln())))
}

/// β = 2πf·sqrt(eps_eff)/c in rad/m.
pub fn phase_constant(f: f64, eps_eff: f64) -> Result<f64> {
    if !(f > 0.0) {
        return Err(Error::domain(format!(
            "frequency must be positive, got {f}"
        )));
    }
    if !(eps_eff >= 1.0) {
        return Err(Error::domain(format!(
            "eps_eff must be >= 1, got {eps_eff}"
        )));
    }
    Ok(2.0 * PI * f * eps_eff.sqrt() / SPEED_OF_LIGHT)
}

pub fn guided_wavelength(beta: f64) -> f64 {
    2.0 * PI / beta
}

fn check_line(z0: f64, length: f64) -> Result<()> {
    if !(z0 > 0.0) {
        return Err(Error::domain(format!("Z0 must be positive, got {z0}")));
    }
    if !(length > 0.0) {
        return Err(Error::domain(format!(
            "line length must be positive, got {length}"
        )));
    }
    Ok(())
}

/// `Z0 (ZL + jZ0 tan βl) / (Z0 + jZL tan βl)`, evaluated in sine/cosine form.
pub fn terminated_line_impedance(
    z0: f64,
    termination: Termination,
    beta: f64,
    length: f64,
) -> Result<Impedance> {
    let z_load = match termination {
        Termination::Open => return open_stub_impedance(z0, beta, length),
        Termination::Load(z) => z,
    };
    check_line(z0, length)?;
    let (s, c) = (beta * length).sin_cos();
    let j = Complex64::i();
    let num = z0 * (z_load * c + j * z0 * s);
    let den = z0 * c + j * z_load * s;
    if den.norm() < POLE_RATIO * num.norm() {
        return Ok(Impedance::Pole);
    }
    Ok(Impedance::Finite(num / den))
}

/// `-j Z0 cot(βl)`.
pub fn open_stub_impedance(z0: f64, beta: f64, length: f64) -> Result<Impedance> {
    check_line(z0, length)?;
    let (s, c) = (beta * length).sin_cos();
    if s.abs() < POLE_RATIO * c.abs() {
        return Ok(Impedance::Pole);
    }
    Ok(Impedance::Finite(Complex64::new(0.0, -z0 * c / s)))
}

/// A microstrip trace over a grounded substrate with its derived parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MicrostripLine {
    pub trace_width: f64,
    pub substrate_height: f64,
    pub substrate_eps_r: f64,
    pub eps_eff: f64,
    pub z0: f64,
}

impl MicrostripLine {
    pub fn new(trace_width: f64, substrate_height: f64, substrate_eps_r: f64) -> Result<Self> {
        let z0 = characteristic_impedance(trace_width, substrate_height, substrate_eps_r)?;
        let eps_eff = effective_permittivity(trace_width, substrate_height, substrate_eps_r)?;
        Ok(Self {
            trace_width,
            substrate_height,
            substrate_eps_r,
            eps_eff,
            z0,
        })
    }

    pub fn on_substrate(trace_width: f64, substrate: &Substrate) -> Result<Self> {
        Self::new(trace_width, substrate.height, substrate.eps_r)
    }

    pub fn beta(&self, f: f64) -> Result<f64> {
        phase_constant(f, self.eps_eff)
    }

    pub fn guided_wavelength(&self, f: f64) -> Result<f64> {
        Ok(guided_wavelength(self.beta(f)?))
    }
}

/// A length of line ending in a load or an open circuit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineSection {
    pub line: MicrostripLine,
    pub length: f64,
    pub termination: Termination,
}

impl LineSection {
    pub fn input_impedance(&self, f: f64) -> Result<Impedance> {
        terminated_line_impedance(
            self.line.z0,
            self.termination,
            self.line.beta(f)?,
            self.length,
        )
    }
}

/// Range of capacitances an open stub shorter than λg/4 can present at `f`.
pub fn stub_capacitance_range(f: f64, line: &MicrostripLine) -> Result<(f64, f64)> {
    let lambda = line.guided_wavelength(f)?;
    let beta = line.beta(f)?;
    let eps = lambda * 1e-9;
    let cap = |l: f64| (beta * l).tan() / (2.0 * PI * f * line.z0);
    Ok((cap(eps), cap(lambda / 4.0 - eps)))
}

/// Length of open stub whose reactance `-Z0 cot(βl)` equals that of a
/// capacitor `-1/(2πfC)`.
///
/// Bisects on `(ε, λg/4 − ε)` with `ε = λg·1e-9`; the reactance is monotone
/// there, so the bracket always holds when the target is achievable.
pub fn synthesize_stub_length(
    target_capacitance: f64,
    f: f64,
    line: &MicrostripLine,
) -> Result<f64> {
    if !(target_capacitance > 0.0 && target_capacitance.is_finite()) {
        return Err(Error::domain(format!(
            "target capacitance must be positive, got {target_capacitance}"
        )));
    }
    let (c_min, c_max) = stub_capacitance_range(f, line)?;
    if !(c_min..=c_max).contains(&target_capacitance) {
        return Err(Error::Synthesis {
            target: target_capacitance,
            min: c_min,
            max: c_max,
        });
    }

    let beta = line.beta(f)?;
    let lambda = guided_wavelength(beta);
    // cot(βl) = 1/(ωC Z0); residual is increasing in l on the bracket.
    let target_cot = 1.0 / (2.0 * PI * f * target_capacitance * line.z0);
    let residual = |l: f64| {
        let (s, c) = (beta * l).sin_cos();
        target_cot - c / s
    };

    let mut lo = lambda * 1e-9;
    let mut hi = lambda / 4.0 - lambda * 1e-9;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if residual(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-16 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}
