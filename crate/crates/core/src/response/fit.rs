//! Least-squares fit of `Δf = a (1 − e^(−b v))`.
//!
//! The amplitude is linear, so for any rate `b` the best `a` is closed form
//! and the residual can be profiled over `b` alone. The profile is scanned on
//! a log grid around `1/max(v)`, refined by golden-section search, and the
//! pair is then polished with damped Gauss–Newton.

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExpFit {
    /// Asymptotic shift, Hz.
    pub a: f64,
    /// Rate constant, 1/mL.
    pub b: f64,
    pub residual_rms: f64,
    /// False when the data do not pin down `b` (flat data, or the optimum
    /// ran to an end of the search range).
    pub rate_identifiable: bool,
}

const DECADES: f64 = 4.0;
const POINTS_PER_DECADE: usize = 24;

struct Profile<'a> {
    v: &'a [f64],
    y: &'a [f64],
    yy: f64,
}

impl Profile<'_> {
    /// Optimal amplitude and residual sum of squares for rate `b`.
    fn eval(&self, b: f64) -> (f64, f64) {
        let (mut gy, mut gg) = (0.0, 0.0);
        for (&v, &y) in self.v.iter().zip(self.y) {
            let g = -(-b * v).exp_m1();
            gy += g * y;
            gg += g * g;
        }
        if gg == 0.0 {
            return (0.0, self.yy);
        }
        let a = gy / gg;
        (a, (self.yy - gy * gy / gg).max(0.0))
    }

    fn sse(&self, a: f64, b: f64) -> f64 {
        self.v
            .iter()
            .zip(self.y)
            .map(|(&v, &y)| {
                let r = y + a * (-b * v).exp_m1();
                r * r
            })
            .sum()
    }
}

fn golden_section(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > 1e-12 * (1.0 + lo.abs().max(hi.abs())) {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        }
    }
    0.5 * (lo + hi)
}

/// Damped Gauss–Newton on (a, b). Only accepts steps that lower the residual.
fn polish(p: &Profile, mut a: f64, mut b: f64) -> (f64, f64) {
    let mut sse = p.sse(a, b);
    let mut lambda = 1e-6;
    for _ in 0..60 {
        let (mut jaa, mut jab, mut jbb, mut ga, mut gb) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for (&v, &y) in p.v.iter().zip(p.y) {
            let e = (-b * v).exp();
            let da = 1.0 - e;
            let db = a * v * e;
            let r = y - a * da;
            jaa += da * da;
            jab += da * db;
            jbb += db * db;
            ga += da * r;
            gb += db * r;
        }
        let mut improved = false;
        for _ in 0..20 {
            let (maa, mbb) = (jaa * (1.0 + lambda), jbb * (1.0 + lambda));
            let det = maa * mbb - jab * jab;
            if det <= 0.0 || !det.is_finite() {
                lambda *= 10.0;
                continue;
            }
            let step_a = (mbb * ga - jab * gb) / det;
            let step_b = (maa * gb - jab * ga) / det;
            let (na, nb) = (a + step_a, b + step_b);
            if nb > 0.0 {
                let nsse = p.sse(na, nb);
                if nsse <= sse {
                    let converged = (sse - nsse) <= 1e-30 + 1e-15 * sse
                        && step_b.abs() <= 1e-14 * b
                        && step_a.abs() <= 1e-14 * a.abs().max(f64::MIN_POSITIVE);
                    a = na;
                    b = nb;
                    sse = nsse;
                    lambda = (lambda * 0.1).max(1e-12);
                    improved = !converged;
                    break;
                }
            }
            lambda *= 10.0;
        }
        if !improved {
            break;
        }
    }
    (a, b)
}

/// Fits `(v, shift)` samples. Needs at least three samples with distinct,
/// non-negative volumes.
pub fn fit_exponential(samples: &[(f64, f64)]) -> Result<ExpFit> {
    if samples.len() < 3 {
        return Err(Error::Fit(format!(
            "need at least 3 samples, got {}",
            samples.len()
        )));
    }
    if samples
        .iter()
        .any(|&(v, y)| !(v >= 0.0 && v.is_finite() && y.is_finite()))
    {
        return Err(Error::Fit("volumes must be finite and non-negative".into()));
    }
    let mut sorted: Vec<f64> = samples.iter().map(|s| s.0).collect();
    sorted.sort_by(f64::total_cmp);
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::Fit("volumes must be distinct".into()));
    }
    let v_max = sorted[sorted.len() - 1];
    let b0 = 1.0 / v_max;

    let v: Vec<f64> = samples.iter().map(|s| s.0).collect();
    let y: Vec<f64> = samples.iter().map(|s| s.1).collect();
    let y_scale = y.iter().fold(0.0f64, |m, y| m.max(y.abs()));

    if y_scale == 0.0 {
        return Ok(ExpFit {
            a: 0.0,
            b: b0,
            residual_rms: 0.0,
            rate_identifiable: false,
        });
    }
    if y.iter().all(|&yi| yi == y[0]) {
        return Err(Error::Fit(
            "all shifts equal and non-zero; rate constant is unbounded".into(),
        ));
    }

    let profile = Profile {
        v: &v,
        y: &y,
        yy: y.iter().map(|y| y * y).sum(),
    };
    let n_grid = (2.0 * DECADES) as usize * POINTS_PER_DECADE + 1;
    let log_b = |k: usize| {
        b0.ln() + (k as f64 / POINTS_PER_DECADE as f64 - DECADES) * std::f64::consts::LN_10
    };
    let grid: Vec<f64> = (0..n_grid)
        .map(|k| profile.eval(log_b(k).exp()).1)
        .collect();
    let best = grid
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(k, _)| k)
        .unwrap_or(0);
    let interior = best > 0 && best < n_grid - 1;

    let lo = log_b(best.saturating_sub(1));
    let hi = log_b((best + 1).min(n_grid - 1));
    let b_est = golden_section(lo, hi, |lb| profile.eval(lb.exp()).1).exp();
    let (a_est, _) = profile.eval(b_est);
    let (a, b) = if interior {
        polish(&profile, a_est, b_est)
    } else {
        (a_est, b_est)
    };

    let sse = profile.sse(a, b);
    if !(a.is_finite() && b.is_finite() && b > 0.0) {
        return Err(Error::Fit(format!("solver diverged (a = {a}, b = {b})")));
    }
    Ok(ExpFit {
        a,
        b,
        residual_rms: (sse / samples.len() as f64).sqrt(),
        rate_identifiable: interior,
    })
}
