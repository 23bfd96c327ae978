//! Filtering, detrending, windowing, and power-spectral-density primitives
//! shared by every downstream stage.

mod filter;
mod welch;

pub use filter::{bandpass_fir, design_bandpass, BandpassSpec};
pub use welch::{welch_psd, Spectrum, WelchConfig};

use crate::error::{Error, Result};

/// A uniformly sampled one-dimensional signal.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal1D {
    pub samples: Vec<f64>,
    /// Sampling rate in Hz.
    pub fs: f64,
}

impl Signal1D {
    pub fn new(samples: Vec<f64>, fs: f64) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InvalidInput("signal must be non-empty".into()));
        }
        if !fs.is_finite() || fs <= 0.0 {
            return Err(Error::InvalidInput(format!("sampling rate must be finite and positive, got {fs}")));
        }
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("signal contains NaN or infinite samples".into()));
        }
        Ok(Self { samples, fs })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.fs
    }
}

/// Detrending strategy for [`detrend`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DetrendMethod {
    /// Least-squares straight-line removal.
    Linear,
    /// Smoothness-priors detrending with regularisation parameter lambda.
    SmoothnessPriors { lambda: f64 },
}

/// Removes the slow trend from a signal. Output has the same length and rate.
pub fn detrend(signal: &Signal1D, method: DetrendMethod) -> Result<Signal1D> {
    let n = signal.len();
    if n < 3 {
        return Err(Error::InvalidInput(format!("detrend needs at least 3 samples, got {n}")));
    }
    let out = match method {
        DetrendMethod::Linear => detrend_linear(&signal.samples),
        DetrendMethod::SmoothnessPriors { lambda } => detrend_smoothness_priors(&signal.samples, lambda),
    };
    Ok(Signal1D { samples: out, fs: signal.fs })
}

fn detrend_linear(x: &[f64]) -> Vec<f64> {
    let n = x.len() as f64;
    let mean_t = (n - 1.0) / 2.0;
    let mean_x = x.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (i, &v) in x.iter().enumerate() {
        let dt = i as f64 - mean_t;
        num += dt * (v - mean_x);
        den += dt * dt;
    }
    let slope = if den > 0.0 { num / den } else { 0.0 };
    x.iter()
        .enumerate()
        .map(|(i, &v)| v - (mean_x + slope * (i as f64 - mean_t)))
        .collect()
}

/// Smoothness-priors detrender: removes z = (I + lambda^2 D2' D2)^-1 x, where
/// D2 is the second-difference operator. Solved with a banded Cholesky pass.
fn detrend_smoothness_priors(x: &[f64], lambda: f64) -> Vec<f64> {
    let n = x.len();
    if n < 4 {
        return detrend_linear(x);
    }
    let l2 = lambda * lambda;
    // A = I + l2 * D2^T D2 is pentadiagonal, symmetric positive definite.
    // Band rows: diag, off1, off2.
    let mut diag = vec![0.0f64; n];
    let mut off1 = vec![0.0f64; n - 1];
    let mut off2 = vec![0.0f64; n - 2];
    for i in 0..n {
        let mut d = 1.0;
        // Row i of D2^T D2: sum over k of d2[k][i]^2 where row k of D2 is
        // (.. 1 -2 1 ..) at columns k, k+1, k+2, k = 0..n-3.
        for k in i.saturating_sub(2)..=i.min(n.saturating_sub(3)) {
            let c = d2_coeff(i, k);
            d += l2 * c * c;
        }
        diag[i] = d;
        if i + 1 < n {
            let mut v = 0.0;
            for k in i.saturating_sub(2)..=(i + 1).min(n.saturating_sub(3)) {
                v += l2 * d2_coeff(i, k) * d2_coeff(i + 1, k);
            }
            off1[i] = v;
        }
        if i + 2 < n {
            let mut v = 0.0;
            for k in i.saturating_sub(2)..=(i + 2).min(n.saturating_sub(3)) {
                v += l2 * d2_coeff(i, k) * d2_coeff(i + 2, k);
            }
            off2[i] = v;
        }
    }
    let trend = solve_pentadiagonal(&diag, &off1, &off2, x);
    x.iter().zip(trend.iter()).map(|(a, b)| a - b).collect()
}

#[inline]
fn d2_coeff(col: usize, row: usize) -> f64 {
    // Row `row` of the (n-2) x n second-difference matrix.
    match col as isize - row as isize {
        0 => 1.0,
        1 => -2.0,
        2 => 1.0,
        _ => 0.0,
    }
}

/// Cholesky solve for a symmetric positive-definite pentadiagonal system.
fn solve_pentadiagonal(diag: &[f64], off1: &[f64], off2: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    // L has the same bandwidth: ld (diag), l1, l2.
    let mut ld = vec![0.0f64; n];
    let mut l1 = vec![0.0f64; n.saturating_sub(1)];
    let mut l2 = vec![0.0f64; n.saturating_sub(2)];
    for i in 0..n {
        let mut s = diag[i];
        if i >= 1 {
            s -= l1[i - 1] * l1[i - 1];
        }
        if i >= 2 {
            s -= l2[i - 2] * l2[i - 2];
        }
        ld[i] = s.max(1e-300).sqrt();
        if i + 1 < n {
            let mut s = off1[i];
            if i >= 1 {
                s -= l1[i - 1] * l2[i - 1];
            }
            l1[i] = s / ld[i];
        }
        if i + 2 < n {
            l2[i] = off2[i] / ld[i];
        }
    }
    // Forward substitution L y = rhs.
    let mut y = vec![0.0f64; n];
    for i in 0..n {
        let mut s = rhs[i];
        if i >= 1 {
            s -= l1[i - 1] * y[i - 1];
        }
        if i >= 2 {
            s -= l2[i - 2] * y[i - 2];
        }
        y[i] = s / ld[i];
    }
    // Back substitution L^T z = y.
    let mut z = vec![0.0f64; n];
    for i in (0..n).rev() {
        let mut s = y[i];
        if i + 1 < n {
            s -= l1[i] * z[i + 1];
        }
        if i + 2 < n {
            s -= l2[i] * z[i + 2];
        }
        z[i] = s / ld[i];
    }
    z
}

/// Centered moving average; edges handled by shrinking the window.
pub fn moving_average(signal: &Signal1D, width: usize) -> Result<Signal1D> {
    let n = signal.len();
    if width == 0 || width > n {
        return Err(Error::InvalidInput(format!(
            "moving average width must be in 1..={n}, got {width}"
        )));
    }
    let half_left = (width - 1) / 2;
    let half_right = width / 2;
    let x = &signal.samples;
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let lo = i.saturating_sub(half_left);
        let hi = (i + half_right).min(n - 1);
        let w = &x[lo..=hi];
        out.push(w.iter().sum::<f64>() / w.len() as f64);
    }
    Ok(Signal1D { samples: out, fs: signal.fs })
}

/// A window cut from a longer signal, tagged with its start time.
#[derive(Debug, Clone)]
pub struct Windowed {
    pub start_s: f64,
    pub signal: Signal1D,
}

/// Cuts `signal` into sliding windows of `win_s` seconds advancing by
/// `step_s`. The last partial window is dropped; a signal shorter than one
/// window yields an empty sequence.
pub fn sliding_windows(signal: &Signal1D, win_s: f64, step_s: f64) -> Result<Vec<Windowed>> {
    let win_len = (win_s * signal.fs).round() as usize;
    if win_len < 2 {
        return Err(Error::InvalidInput(format!(
            "window of {win_s} s at {} Hz holds fewer than 2 samples",
            signal.fs
        )));
    }
    if step_s <= 0.0 {
        return Err(Error::InvalidInput("step must be positive".into()));
    }
    let n = signal.len();
    let mut out = Vec::new();
    let mut k = 0usize;
    loop {
        let start_s = k as f64 * step_s;
        let start = (start_s * signal.fs).round() as usize;
        if start + win_len > n {
            break;
        }
        out.push(Windowed {
            start_s,
            signal: Signal1D {
                samples: signal.samples[start..start + win_len].to_vec(),
                fs: signal.fs,
            },
        });
        k += 1;
    }
    Ok(out)
}

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

pub fn variance(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / x.len() as f64
}

pub fn std_dev(x: &[f64]) -> f64 {
    variance(x).sqrt()
}
