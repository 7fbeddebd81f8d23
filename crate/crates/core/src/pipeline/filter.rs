//! Zero-phase Butterworth bandpass.
//!
//! A second-order Butterworth low-pass prototype is mapped to a fourth-order
//! bandpass (two biquads) by the bilinear transform with pre-warped edges, and
//! run forward then backward so the combined response has no phase shift and
//! squared magnitude. Edges are padded by odd reflection and each pass starts
//! from the steady state of its first input sample.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
struct Biquad {
    b: [f64; 3],
    a: [f64; 3],
}

impl Biquad {
    fn response(&self, z_inv: Complex64) -> Complex64 {
        let num = self.b[0] + z_inv * (self.b[1] + z_inv * self.b[2]);
        let den = self.a[0] + z_inv * (self.a[1] + z_inv * self.a[2]);
        num / den
    }

    /// Transposed direct-form II, starting at the steady state for a
    /// constant input `x[0]`.
    fn run(&self, x: &mut [f64]) {
        let Some(&x0) = x.first() else { return };
        let [b0, b1, b2] = self.b;
        let [_, a1, a2] = self.a;
        let dc = (b0 + b1 + b2) / (1.0 + a1 + a2);
        let y0 = dc * x0;
        let mut z1 = y0 - b0 * x0;
        let mut z2 = b2 * x0 - a2 * y0;
        for v in x.iter_mut() {
            let xin = *v;
            let y = b0 * xin + z1;
            z1 = b1 * xin - a1 * y + z2;
            z2 = b2 * xin - a2 * y;
            *v = y;
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bandpass {
    sections: [Biquad; 2],
    sample_period: f64,
    band: (f64, f64),
}

impl Bandpass {
    pub fn design(band: (f64, f64), sample_period: f64) -> Result<Self> {
        let (low, high) = band;
        let nyquist = 0.5 / sample_period;
        if !(sample_period > 0.0) {
            return Err(Error::config("sample period must be positive"));
        }
        if !(low > 0.0 && low < high && high < nyquist) {
            return Err(Error::Config(format!(
                "band ({low}, {high}) Hz must satisfy 0 < low < high < Nyquist ({nyquist} Hz)"
            )));
        }
        let t = sample_period;
        let warp = |f: f64| 2.0 / t * (PI * f * t).tan();
        let (w1, w2) = (warp(low), warp(high));
        let w0_sq = w1 * w2;
        let bw = w2 - w1;

        // One prototype pole of the conjugate pair; its mirror yields the
        // conjugate sections, which share coefficients.
        let p = Complex64::from_polar(1.0, 3.0 * PI / 4.0);
        let disc = (p * p * bw * bw - 4.0 * w0_sq).sqrt();
        let analog = [(p * bw + disc) / 2.0, (p * bw - disc) / 2.0];

        let mut sections = analog.map(|s| {
            let z = (1.0 + s * t / 2.0) / (1.0 - s * t / 2.0);
            Biquad {
                b: [1.0, 0.0, -1.0],
                a: [1.0, -2.0 * z.re, z.norm_sqr()],
            }
        });

        let center = (w0_sq.sqrt() * t / 2.0).atan() / (PI * t);
        let z_inv = Complex64::from_polar(1.0, -2.0 * PI * center * t);
        let gain = sections
            .iter()
            .map(|s| s.response(z_inv))
            .product::<Complex64>()
            .norm();
        for b in sections[0].b.iter_mut() {
            *b /= gain;
        }
        Ok(Self {
            sections,
            sample_period,
            band,
        })
    }

    pub fn band(&self) -> (f64, f64) {
        self.band
    }

    /// Single-pass magnitude response at `f` Hz.
    pub fn gain(&self, f: f64) -> f64 {
        let z_inv = Complex64::from_polar(1.0, -2.0 * PI * f * self.sample_period);
        self.sections
            .iter()
            .map(|s| s.response(z_inv))
            .product::<Complex64>()
            .norm()
    }

    fn run_once(&self, x: &mut [f64]) {
        for s in &self.sections {
            s.run(x);
        }
    }

    /// Forward–backward filtering. Output has the input's length.
    pub fn filtfilt(&self, x: &[f64]) -> Vec<f64> {
        let n = x.len();
        if n == 0 {
            return Vec::new();
        }
        let pad = (3 * (2 * self.sections.len() + 1)).min(n - 1);
        let mut ext = Vec::with_capacity(n + 2 * pad);
        ext.extend((1..=pad).rev().map(|i| 2.0 * x[0] - x[i]));
        ext.extend_from_slice(x);
        ext.extend((1..=pad).map(|i| 2.0 * x[n - 1] - x[n - 1 - i]));

        self.run_once(&mut ext);
        ext.reverse();
        self.run_once(&mut ext);
        ext.reverse();
        ext.drain(..pad);
        ext.truncate(n);
        ext
    }
}
