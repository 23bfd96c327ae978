//! Kaiser-window FIR band-pass design and zero-phase application.

use super::Signal1D;
use crate::error::{Error, Result};

/// Band-pass design parameters.
///
/// `num_taps` must be odd so the filter has linear phase with an integer
/// group delay.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandpassSpec {
    pub low_hz: f64,
    pub high_hz: f64,
    /// Kaiser window shape parameter.
    pub beta: f64,
    pub num_taps: usize,
}

impl BandpassSpec {
    pub fn new(low_hz: f64, high_hz: f64, beta: f64, num_taps: usize) -> Result<Self> {
        if !(low_hz > 0.0 && high_hz > low_hz) {
            return Err(Error::InvalidBand(format!(
                "band edges must satisfy 0 < low < high, got {low_hz}..{high_hz}"
            )));
        }
        if num_taps % 2 == 0 || num_taps < 3 {
            return Err(Error::InvalidInput(format!("num_taps must be odd and >= 3, got {num_taps}")));
        }
        if !(beta >= 0.0) {
            return Err(Error::InvalidInput(format!("beta must be non-negative, got {beta}")));
        }
        Ok(Self { low_hz, high_hz, beta, num_taps })
    }

    /// Pulse-band default: 0.75-4 Hz, beta 25, round(4.2 * fs) taps forced odd.
    pub fn pulse_band_default(fs: f64) -> Self {
        let mut taps = (4.2 * fs).round() as usize;
        if taps % 2 == 0 {
            taps += 1;
        }
        Self { low_hz: 0.75, high_hz: 4.0, beta: 25.0, num_taps: taps.max(3) }
    }

    fn validate_for(&self, fs: f64) -> Result<()> {
        if self.high_hz >= fs / 2.0 {
            return Err(Error::InvalidBand(format!(
                "band {}..{} Hz does not fit below Nyquist {} Hz",
                self.low_hz,
                self.high_hz,
                fs / 2.0
            )));
        }
        Ok(())
    }
}

/// Zeroth-order modified Bessel function of the first kind, by power series.
fn bessel_i0(x: f64) -> f64 {
    let q = x * x / 4.0;
    let mut term = 1.0f64;
    let mut sum = 1.0f64;
    for k in 1..200 {
        term *= q / ((k * k) as f64);
        sum += term;
        if term < sum * 1e-18 {
            break;
        }
    }
    sum
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        let px = std::f64::consts::PI * x;
        px.sin() / px
    }
}

/// Designs the windowed-sinc band-pass taps for `spec` at rate `fs`.
///
/// The taps are scaled so the response is exactly unity at the band centre.
pub fn design_bandpass(spec: &BandpassSpec, fs: f64) -> Result<Vec<f64>> {
    spec.validate_for(fs)?;
    let n = spec.num_taps;
    let m = (n - 1) as f64 / 2.0;
    let nyq = fs / 2.0;
    let c1 = spec.low_hz / nyq;
    let c2 = spec.high_hz / nyq;
    let i0_beta = bessel_i0(spec.beta);
    let mut h = Vec::with_capacity(n);
    for i in 0..n {
        let t = i as f64 - m;
        let ideal = c2 * sinc(c2 * t) - c1 * sinc(c1 * t);
        let r = 2.0 * i as f64 / (n - 1) as f64 - 1.0;
        let w = bessel_i0(spec.beta * (1.0 - r * r).max(0.0).sqrt()) / i0_beta;
        h.push(ideal * w);
    }
    // Unity gain at the band centre.
    let fc = (c1 + c2) / 2.0;
    let mut s = 0.0;
    for (i, &v) in h.iter().enumerate() {
        s += v * (std::f64::consts::PI * (i as f64 - m) * fc).cos();
    }
    for v in &mut h {
        *v /= s;
    }
    Ok(h)
}

/// Direct-form causal FIR pass.
fn fir_forward(taps: &[f64], x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let t = taps.len();
    let mut y = vec![0.0f64; n];
    for i in 0..n {
        let kmax = t.min(i + 1);
        let mut acc = 0.0;
        for k in 0..kmax {
            acc += taps[k] * x[i - k];
        }
        y[i] = acc;
    }
    y
}

/// Zero-phase band-pass: forward-backward application of the designed FIR
/// with odd-reflection edge padding. Length is preserved and the squared
/// magnitude response applies.
pub fn bandpass_fir(signal: &Signal1D, spec: &BandpassSpec) -> Result<Signal1D> {
    let n = signal.len();
    if n < spec.num_taps {
        return Err(Error::InvalidInput(format!(
            "signal of {n} samples is shorter than the {}-tap filter",
            spec.num_taps
        )));
    }
    let taps = design_bandpass(spec, signal.fs)?;
    // Remove the mean first: the windowed design leaves a small DC residue
    // and the band excludes DC anyway.
    let m = signal.samples.iter().sum::<f64>() / n as f64;
    let centered: Vec<f64> = signal.samples.iter().map(|v| v - m).collect();
    let samples = filtfilt(&taps, &centered);
    Ok(Signal1D { samples, fs: signal.fs })
}

/// Forward-backward filtering with odd-reflection padding, on raw samples.
pub(crate) fn filtfilt(taps: &[f64], x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let pad = (3 * (taps.len() - 1)).min(n - 1);
    let mut ext = Vec::with_capacity(n + 2 * pad);
    for i in (1..=pad).rev() {
        ext.push(2.0 * x[0] - x[i]);
    }
    ext.extend_from_slice(x);
    for i in (1..=pad).rev() {
        ext.push(2.0 * x[n - 1] - x[n - 1 - i]);
    }
    let mut y = fir_forward(taps, &ext);
    y.reverse();
    let mut y = fir_forward(taps, &y);
    y.reverse();
    // The forward pass delays by (t-1), fully undone by the backward pass;
    // the padded extension absorbs the startup transients.
    y[pad..pad + n].to_vec()
}
