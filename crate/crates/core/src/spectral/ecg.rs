//! R-peak detection: band-limited derivative, squaring, moving-window
//! integration, and an adaptive threshold with a refractory period.

use crate::dsp::{moving_average, Signal1D};
use crate::error::{Error, Result};

/// Detects R peaks and returns their times in seconds.
pub fn detect_r_peaks(ecg: &Signal1D) -> Result<Vec<f64>> {
    let n = ecg.len();
    if n < (ecg.fs as usize).max(16) {
        return Err(Error::InvalidInput("ECG shorter than one second".into()));
    }
    let fs = ecg.fs;

    // Detrend with a wide moving average, then derivative and squaring.
    let baseline = moving_average(ecg, ((0.6 * fs) as usize).max(3).min(n))?;
    let centered: Vec<f64> =
        ecg.samples.iter().zip(baseline.samples.iter()).map(|(a, b)| a - b).collect();
    let mut deriv = vec![0.0f64; n];
    for i in 1..n {
        deriv[i] = (centered[i] - centered[i - 1]) * fs;
    }
    let squared: Vec<f64> = deriv.iter().map(|v| v * v).collect();
    let integ = moving_average(
        &Signal1D { samples: squared, fs },
        ((0.15 * fs) as usize).max(1).min(n),
    )?;

    // Adaptive threshold over 2 s blocks, refractory period 0.25 s.
    let refractory = (0.25 * fs) as usize;
    let block = ((2.0 * fs) as usize).max(4);
    let x = &integ.samples;
    let mut peaks = Vec::new();
    let mut last_peak: Option<usize> = None;
    for start in (0..n).step_by(block) {
        let end = (start + block).min(n);
        let local_max = x[start..end].iter().cloned().fold(f64::MIN, f64::max);
        let thr = 0.3 * local_max;
        if !(thr > 0.0) {
            continue;
        }
        let mut i = start.max(1);
        while i < end.min(n - 1) {
            if x[i] > thr && x[i] >= x[i - 1] && x[i] >= x[i + 1] {
                if last_peak.map_or(true, |lp| i - lp > refractory) {
                    // Refine to the steepest point of the raw waveform nearby.
                    let lo = i.saturating_sub((0.08 * fs) as usize);
                    let hi = (i + (0.08 * fs) as usize).min(n - 1);
                    let best = (lo..=hi)
                        .max_by(|&a, &b| centered[a].abs().partial_cmp(&centered[b].abs()).unwrap())
                        .unwrap_or(i);
                    peaks.push(best);
                    last_peak = Some(i);
                    i += refractory;
                    continue;
                }
            }
            i += 1;
        }
    }
    peaks.dedup();
    Ok(peaks.into_iter().map(|i| i as f64 / fs).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn regular_spikes_are_all_found() {
        let fs = 250.0;
        let secs = 20.0;
        let n = (fs * secs) as usize;
        let mut x = vec![0.0f64; n];
        let mut expected = Vec::new();
        let mut t_peak = 0.4;
        while t_peak < secs - 0.4 {
            expected.push(t_peak);
            for i in 0..n {
                let t = i as f64 / fs;
                x[i] += 1.0 * (-((t - t_peak) * (t - t_peak)) / (2.0 * 0.008 * 0.008)).exp();
                // T-wave bump, lower and wider.
                x[i] += 0.25 * (-((t - t_peak - 0.25) * (t - t_peak - 0.25)) / (2.0 * 0.05 * 0.05)).exp();
            }
            t_peak += 0.8;
        }
        let s = Signal1D::new(x, fs).unwrap();
        let peaks = detect_r_peaks(&s).unwrap();
        assert_eq!(peaks.len(), expected.len(), "found {} of {}", peaks.len(), expected.len());
        for (p, e) in peaks.iter().zip(expected.iter()) {
            assert!((p - e).abs() < 0.05, "peak at {p} vs {e}");
        }
    }
}
