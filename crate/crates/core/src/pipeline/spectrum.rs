use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Largest in-band spectral line of a window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandPeak {
    /// Amplitude-corrected magnitude, same units as the input.
    pub magnitude: f64,
    /// Centre frequency of the peak bin, Hz.
    pub frequency: f64,
}

/// Hann-tapered magnitude spectrum restricted to a band.
///
/// Magnitudes are scaled by `2/Σw`, so a unit sinusoid centred on a bin reads
/// 1.0 and one between bins reads no lower than the taper's 1.42 dB
/// scalloping loss allows.
pub struct SpectrumAnalyzer {
    fft: Arc<dyn Fft<f64>>,
    taper: Vec<f64>,
    scale: f64,
    bins: std::ops::RangeInclusive<usize>,
    bin_width: f64,
    buf: Vec<Complex64>,
}

impl SpectrumAnalyzer {
    pub fn new(len: usize, sample_period: f64, band: (f64, f64)) -> Result<Self> {
        if len < 2 {
            return Err(Error::config("spectral window needs at least two samples"));
        }
        let bin_width = 1.0 / (len as f64 * sample_period);
        let first = (band.0 / bin_width).ceil() as usize;
        let last = ((band.1 / bin_width).floor() as usize).min(len / 2);
        if first > last {
            return Err(Error::Config(format!(
                "no {bin_width:.4} Hz bin falls inside {}-{} Hz; lengthen the window",
                band.0, band.1
            )));
        }
        let taper: Vec<f64> = (0..len)
            .map(|n| 0.5 - 0.5 * (2.0 * PI * n as f64 / len as f64).cos())
            .collect();
        let scale = 2.0 / taper.iter().sum::<f64>();
        Ok(Self {
            fft: FftPlanner::new().plan_fft_forward(len),
            taper,
            scale,
            bins: first..=last,
            bin_width,
            buf: vec![Complex64::default(); len],
        })
    }

    pub fn len(&self) -> usize {
        self.taper.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taper.is_empty()
    }

    pub fn bin_width(&self) -> f64 {
        self.bin_width
    }

    pub fn band_bins(&self) -> std::ops::RangeInclusive<usize> {
        self.bins.clone()
    }

    pub fn band_peak(&mut self, window: &[f64]) -> Result<BandPeak> {
        if window.len() != self.len() {
            return Err(Error::Config(format!(
                "window has {} samples, analyzer expects {}",
                window.len(),
                self.len()
            )));
        }
        for ((slot, &x), &w) in self.buf.iter_mut().zip(window).zip(&self.taper) {
            *slot = Complex64::new(x * w, 0.0);
        }
        self.fft.process(&mut self.buf);
        let (k, mag) = self
            .bins
            .clone()
            .map(|k| (k, self.buf[k].norm() * self.scale))
            .fold((*self.bins.start(), f64::NEG_INFINITY), |best, cur| {
                if cur.1 > best.1 {
                    cur
                } else {
                    best
                }
            });
        Ok(BandPeak {
            magnitude: mag,
            frequency: k as f64 * self.bin_width,
        })
    }
}

pub fn band_peak_magnitude(
    window: &[f64],
    sample_period: f64,
    band: (f64, f64),
) -> Result<BandPeak> {
    SpectrumAnalyzer::new(window.len(), sample_period, band)?.band_peak(window)
}
