//! Periodogram spectral estimation.

use realfft::RealFftPlanner;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectrumError {
    #[error("series is empty")]
    EmptySeries,
    #[error("time step must be positive and finite, got {0}")]
    BadStep(f64),
    #[error("segment length {0} must be at least 2")]
    SegmentTooShort(usize),
    #[error("segment length {segment} exceeds series length {len}")]
    SegmentTooLong { segment: usize, len: usize },
    #[error("spectra to average have mismatched frequency grids")]
    GridMismatch,
}

/// Uniformly sampled real series. `dt` and `t0` are in μs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealSeries {
    dt: f64,
    t0: f64,
    values: Vec<f64>,
}

impl RealSeries {
    pub fn new(dt: f64, t0: f64, values: Vec<f64>) -> Result<Self, SpectrumError> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(SpectrumError::BadStep(dt));
        }
        if values.is_empty() {
            return Err(SpectrumError::EmptySeries);
        }
        Ok(Self { dt, t0, values })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Sample variance about the mean (population normalization).
    pub fn variance(&self) -> f64 {
        let n = self.values.len() as f64;
        let m = self.values.iter().sum::<f64>() / n;
        self.values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n
    }
}

/// One-sided PSD on a frequency grid in Hz.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumEstimate {
    pub freqs: Vec<f64>,
    pub psd: Vec<f64>,
    pub n_averages: usize,
}

impl SpectrumEstimate {
    pub fn empty() -> Self {
        Self {
            freqs: Vec::new(),
            psd: Vec::new(),
            n_averages: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.freqs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freqs.is_empty()
    }

    /// Bin spacing, assuming a uniform grid.
    pub fn df(&self) -> Option<f64> {
        match self.freqs.len() {
            0 => None,
            1 => Some(self.freqs[0]),
            _ => Some(self.freqs[1] - self.freqs[0]),
        }
    }

    /// Σ psd·Δf over the grid.
    pub fn total_power(&self) -> f64 {
        self.df()
            .map(|df| self.psd.iter().sum::<f64>() * df)
            .unwrap_or(0.0)
    }

    /// Weighted mean of spectra sharing one grid; weights are `n_averages`.
    pub fn average(spectra: &[SpectrumEstimate]) -> Result<SpectrumEstimate, SpectrumError> {
        let first = spectra.first().ok_or(SpectrumError::EmptySeries)?;
        let mut psd = vec![0.0; first.psd.len()];
        let mut total = 0usize;
        for s in spectra {
            if s.freqs.len() != first.freqs.len()
                || s.freqs.iter().zip(&first.freqs).any(|(a, b)| (a - b).abs() > 1e-9 * b.abs())
            {
                return Err(SpectrumError::GridMismatch);
            }
            let w = s.n_averages.max(1);
            for (acc, p) in psd.iter_mut().zip(&s.psd) {
                *acc += p * w as f64;
            }
            total += w;
        }
        for p in &mut psd {
            *p /= total as f64;
        }
        Ok(SpectrumEstimate {
            freqs: first.freqs.clone(),
            psd,
            n_averages: total,
        })
    }

    /// Least-squares slope of log10(psd) against log10(f) over `[f_lo, f_hi]`.
    /// Non-positive bins are ignored; `None` with fewer than two usable bins.
    pub fn loglog_slope(&self, f_lo: f64, f_hi: f64) -> Option<f64> {
        let pts: Vec<(f64, f64)> = self
            .freqs
            .iter()
            .zip(&self.psd)
            .filter(|(f, p)| **f >= f_lo && **f <= f_hi && **p > 0.0)
            .map(|(f, p)| (f.log10(), p.log10()))
            .collect();
        loglog_fit(&pts).map(|(slope, _)| slope)
    }

    /// Mean PSD over bins inside `[f_lo, f_hi]`.
    pub fn band_mean(&self, f_lo: f64, f_hi: f64) -> Option<f64> {
        let vals: Vec<f64> = self
            .freqs
            .iter()
            .zip(&self.psd)
            .filter(|(f, _)| **f >= f_lo && **f <= f_hi)
            .map(|(_, p)| *p)
            .collect();
        if vals.is_empty() {
            None
        } else {
            Some(vals.iter().sum::<f64>() / vals.len() as f64)
        }
    }
}

/// Straight-line fit `y = slope·x + intercept`.
pub fn loglog_fit(pts: &[(f64, f64)]) -> Option<(f64, f64)> {
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

/// Bartlett-averaged one-sided periodogram with a rectangular window.
///
/// The series is cut into `len / segment_len` non-overlapping segments, each
/// mean-removed. Bins run from Δf to the Nyquist frequency (DC omitted); the
/// Nyquist bin of an even segment carries no doubling, so Σ psd·Δf equals the
/// mean-removed variance exactly for a single segment.
pub fn periodogram_psd(
    series: &RealSeries,
    segment_len: usize,
) -> Result<SpectrumEstimate, SpectrumError> {
    if segment_len < 2 {
        return Err(SpectrumError::SegmentTooShort(segment_len));
    }
    if segment_len > series.len() {
        return Err(SpectrumError::SegmentTooLong {
            segment: segment_len,
            len: series.len(),
        });
    }
    let dt_s = series.dt * 1e-6;
    let l = segment_len;
    let n_seg = series.len() / l;
    let n_bins = l / 2;
    let df = 1.0 / (l as f64 * dt_s);

    let mut planner = RealFftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(l);
    let mut input = fft.make_input_vec();
    let mut output = fft.make_output_vec();
    let mut psd = vec![0.0; n_bins];

    for s in 0..n_seg {
        let seg = &series.values[s * l..(s + 1) * l];
        let mean = seg.iter().sum::<f64>() / l as f64;
        for (dst, v) in input.iter_mut().zip(seg) {
            *dst = v - mean;
        }
        fft.process(&mut input, &mut output)
            .expect("buffer sizes come from the plan");
        for k in 1..=n_bins {
            let fold = if 2 * k == l { 1.0 } else { 2.0 };
            psd[k - 1] += fold * dt_s / l as f64 * output[k].norm_sqr();
        }
    }
    for p in &mut psd {
        *p /= n_seg as f64;
    }
    let freqs = (1..=n_bins).map(|k| k as f64 * df).collect();
    Ok(SpectrumEstimate {
        freqs,
        psd,
        n_averages: n_seg,
    })
}
