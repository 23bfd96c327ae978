//! Welch power-spectral-density estimation over Hann-windowed segments.

use super::Signal1D;
use crate::error::{Error, Result};
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

/// One-sided power spectral density on an ascending frequency grid.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub freqs: Vec<f64>,
    pub power: Vec<f64>,
}

impl Spectrum {
    /// Frequency-grid spacing in Hz.
    pub fn df(&self) -> f64 {
        self.freqs[1] - self.freqs[0]
    }

    /// Integrated power over [lo, hi] (rectangle rule on the PSD grid).
    pub fn band_power(&self, lo: f64, hi: f64) -> f64 {
        let df = self.df();
        self.freqs
            .iter()
            .zip(self.power.iter())
            .filter(|(f, _)| **f >= lo && **f <= hi)
            .map(|(_, p)| p * df)
            .sum()
    }

    /// Index of the highest-power bin with frequency in [lo, hi].
    pub fn argmax_in_band(&self, lo: f64, hi: f64) -> Option<usize> {
        let mut best: Option<usize> = None;
        for (i, (f, p)) in self.freqs.iter().zip(self.power.iter()).enumerate() {
            if *f >= lo && *f <= hi {
                if best.map_or(true, |b| *p > self.power[b]) {
                    best = Some(i);
                }
            }
        }
        best
    }
}

/// Welch estimation parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WelchConfig {
    pub seg_len: usize,
    pub overlap_frac: f64,
    pub nfft: usize,
}

impl WelchConfig {
    /// Defaults for an N-sample signal: segments of min(N, 256), half
    /// overlap, FFT length the next power of two at or above max(1024, N).
    pub fn default_for_len(n: usize) -> Self {
        let seg_len = n.min(256);
        let nfft = max_pow2_at_least(n.max(1024));
        Self { seg_len, overlap_frac: 0.5, nfft }
    }
}

fn max_pow2_at_least(n: usize) -> usize {
    let mut p = 1usize;
    while p < n {
        p <<= 1;
    }
    p
}

fn hann(n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![1.0];
    }
    (0..n)
        .map(|i| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / (n - 1) as f64).cos())
        .collect()
}

/// Averaged periodogram over Hann-windowed, mean-removed segments, scaled as
/// a one-sided density so that the integral approximates signal variance.
pub fn welch_psd(signal: &Signal1D, cfg: &WelchConfig) -> Result<Spectrum> {
    let n = signal.len();
    if cfg.seg_len < 2 || cfg.seg_len > n {
        return Err(Error::InvalidInput(format!(
            "segment length {} invalid for signal of {n} samples",
            cfg.seg_len
        )));
    }
    if !(0.0..1.0).contains(&cfg.overlap_frac) {
        return Err(Error::InvalidInput(format!("overlap fraction {} not in [0, 1)", cfg.overlap_frac)));
    }
    if cfg.nfft < cfg.seg_len {
        return Err(Error::InvalidInput(format!(
            "nfft {} shorter than segment length {}",
            cfg.nfft, cfg.seg_len
        )));
    }

    let seg = cfg.seg_len;
    let hop = ((seg as f64 * (1.0 - cfg.overlap_frac)).round() as usize).max(1);
    let window = hann(seg);
    let win_norm: f64 = window.iter().map(|w| w * w).sum();
    let n_freq = cfg.nfft / 2 + 1;

    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(cfg.nfft);
    let mut acc = vec![0.0f64; n_freq];
    let mut count = 0usize;
    let mut buf = vec![Complex::new(0.0, 0.0); cfg.nfft];

    let mut start = 0usize;
    while start + seg <= n {
        let chunk = &signal.samples[start..start + seg];
        let mean = chunk.iter().sum::<f64>() / seg as f64;
        for b in buf.iter_mut() {
            *b = Complex::new(0.0, 0.0);
        }
        for (i, (&x, &w)) in chunk.iter().zip(window.iter()).enumerate() {
            buf[i] = Complex::new((x - mean) * w, 0.0);
        }
        fft.process(&mut buf);
        for k in 0..n_freq {
            let mut p = buf[k].norm_sqr() / (signal.fs * win_norm);
            if k != 0 && !(cfg.nfft % 2 == 0 && k == cfg.nfft / 2) {
                p *= 2.0;
            }
            acc[k] += p;
        }
        count += 1;
        start += hop;
    }
    debug_assert!(count > 0);
    for p in &mut acc {
        *p /= count as f64;
    }
    let freqs = (0..n_freq).map(|k| k as f64 * signal.fs / cfg.nfft as f64).collect();
    Ok(Spectrum { freqs, power: acc })
}
