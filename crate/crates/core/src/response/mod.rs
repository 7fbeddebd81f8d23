//! Basin state, calibration curves and the exponential transient model.

mod calibration;
mod fit;

pub use calibration::{
    default_calibration, default_concentration_grid, invert_concentration, parse_grid,
    steady_shift, CalibrationCurve, ResonatorModel, CONCENTRATION_LADDER,
};
pub use fit::{fit_exponential, ExpFit};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default injection rate, mL/s.
pub const DEFAULT_INJECTION_RATE: f64 = 17.0;

/// Water volume and NaCl molarity of the basin the sensor looks into.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BasinState {
    /// mL
    pub volume: f64,
    /// mol/L
    pub concentration: f64,
}

impl BasinState {
    pub fn new(volume: f64, concentration: f64) -> Result<Self> {
        let s = Self {
            volume,
            concentration,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.volume > 0.0 && self.concentration >= 0.0) {
            return Err(Error::domain(format!(
                "basin needs volume > 0 and concentration >= 0, got {self:?}"
            )));
        }
        Ok(())
    }
}

impl Default for BasinState {
    fn default() -> Self {
        Self {
            volume: 4000.0,
            concentration: 0.0,
        }
    }
}

/// A solution poured into the basin at a constant rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Injection {
    pub concentration: f64,
    /// mL
    pub total_volume: f64,
    /// mL/s
    pub rate: f64,
    /// s
    pub start_time: f64,
}

impl Injection {
    pub fn validate(&self) -> Result<()> {
        if !(self.concentration > 0.0
            && self.total_volume > 0.0
            && self.rate > 0.0
            && self.start_time >= 0.0)
        {
            return Err(Error::config(format!(
                "injection needs positive concentration, volume and rate and a non-negative start, got {self:?}"
            )));
        }
        Ok(())
    }

    pub fn duration(&self) -> f64 {
        self.total_volume / self.rate
    }

    /// Volume poured so far at time `t`.
    pub fn volume_added(&self, t: f64) -> f64 {
        ((t - self.start_time) * self.rate).clamp(0.0, self.total_volume)
    }
}

/// Perfect-mixing mass balance.
pub fn mix_concentration(
    state: BasinState,
    added_volume: f64,
    added_concentration: f64,
) -> Result<BasinState> {
    if !(added_volume >= 0.0 && added_concentration >= 0.0) {
        return Err(Error::domain(format!(
            "added volume and concentration must be non-negative, got {added_volume} mL at {added_concentration} M"
        )));
    }
    if added_volume == 0.0 {
        return Ok(state);
    }
    let volume = state.volume + added_volume;
    let concentration = if added_concentration == state.concentration {
        state.concentration
    } else {
        (state.concentration * state.volume + added_concentration * added_volume) / volume
    };
    Ok(BasinState {
        volume,
        concentration,
    })
}

/// `a (1 − e^(−b v))`; volumes below zero count as nothing added yet.
pub fn transient_shift(v: f64, fit: &ExpFit) -> f64 {
    -fit.a * (-fit.b * v.max(0.0)).exp_m1()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mixing_200_ml_into_4_litres() {
        let s = mix_concentration(BasinState::new(4000.0, 0.0).unwrap(), 200.0, 0.125).unwrap();
        assert_eq!(s.volume, 4200.0);
        assert!((s.concentration - 5.952_380_952_380_952e-3).abs() < 1e-15);
    }

    #[test]
    fn zero_addition_is_identity() {
        let s = BasinState::new(3000.0, 0.02).unwrap();
        assert_eq!(mix_concentration(s, 0.0, 0.5).unwrap(), s);
    }

    #[test]
    fn same_concentration_is_a_fixed_point() {
        let s = BasinState::new(3000.0, 0.0371).unwrap();
        for v in [1.0, 33.3, 1e4] {
            assert_eq!(
                mix_concentration(s, v, 0.0371).unwrap().concentration,
                0.0371
            );
        }
    }

    #[test]
    fn negative_addition_rejected() {
        assert!(mix_concentration(BasinState::default(), -1.0, 0.1).is_err());
    }

    fn fit(a: f64, b: f64) -> ExpFit {
        ExpFit {
            a,
            b,
            residual_rms: 0.0,
            rate_identifiable: true,
        }
    }

    #[test]
    fn transient_closed_forms() {
        let f = fit(3.0, 0.02);
        assert_eq!(transient_shift(0.0, &f), 0.0);
        assert!((transient_shift(50.0, &f) - 3.0 * (1.0 - (-1.0f64).exp())).abs() < 1e-15);
        let f = fit(2e6, 0.01);
        // 2e6·(1 − e^−2.2), mpmath
        assert!((transient_shift(220.0, &f) - 1_778_393.683_275_332_3).abs() < 1e-6);
    }

    #[test]
    fn injection_volume_schedule() {
        let inj = Injection {
            concentration: 0.125,
            total_volume: 220.0,
            rate: DEFAULT_INJECTION_RATE,
            start_time: 10.0,
        };
        assert_eq!(inj.volume_added(5.0), 0.0);
        assert_eq!(inj.volume_added(11.0), 17.0);
        assert_eq!(inj.volume_added(100.0), 220.0);
        assert!((inj.duration() - 220.0 / 17.0).abs() < 1e-15);
    }
}
