//! Per-window heart-rate estimation and heart-rate series assembly. The
//! same estimation path serves extracted and reference signals so the two
//! sides of the evaluation are never treated differently.

mod ecg;

pub use ecg::detect_r_peaks;

use crate::dsp::{sliding_windows, welch_psd, Signal1D, WelchConfig};
use crate::error::{Error, Result};
use crate::rppg::PulseWindow;

/// Heart-rate estimation parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralConfig {
    /// Pulse band in Hz; 0.75-4 Hz corresponds to 45-240 bpm.
    pub band: (f64, f64),
    pub win_s: f64,
    pub step_s: f64,
}

impl Default for SpectralConfig {
    fn default() -> Self {
        Self { band: (0.75, 4.0), win_s: 10.0, step_s: 1.0 }
    }
}

/// Per-window heart-rate estimates on a uniform window grid.
#[derive(Debug, Clone, PartialEq)]
pub struct HrSeries {
    /// Window start times, step = step_s.
    pub times: Vec<f64>,
    pub bpm: Vec<f64>,
    /// False for flat or gap-masked windows (bpm holds the previous value).
    pub valid: Vec<bool>,
}

impl HrSeries {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn step_s(&self) -> f64 {
        if self.times.len() >= 2 {
            self.times[1] - self.times[0]
        } else {
            1.0
        }
    }
}

/// Reference signal kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReferenceKind {
    Bvp,
    Ecg,
}

/// Welch argmax in the pulse band with 3-point parabolic refinement.
/// Flat windows and windows without an in-band bin yield None.
pub fn estimate_hr(window: &PulseWindow, cfg: &SpectralConfig) -> Option<f64> {
    if window.flat {
        return None;
    }
    estimate_hr_samples(&window.as_signal(), cfg)
}

/// A spectral peak at f whose subharmonic bin near f/2 carries at least
/// this fraction of its power is treated as a pulse harmonic and the
/// fundamental is reported instead. Band-edge attenuation can otherwise
/// tip the argmax onto the first harmonic for low heart rates.
const SUBHARMONIC_POWER_RATIO: f64 = 0.5;

fn estimate_hr_samples(signal: &Signal1D, cfg: &SpectralConfig) -> Option<f64> {
    let wcfg = WelchConfig::default_for_len(signal.len());
    let spec = welch_psd(signal, &wcfg).ok()?;
    let mut peak = spec.argmax_in_band(cfg.band.0, cfg.band.1)?;
    if spec.power[peak] <= 0.0 {
        return None;
    }
    let half = spec.freqs[peak] / 2.0;
    if half >= cfg.band.0 {
        let lo = (half - 2.0 * spec.df()).max(cfg.band.0);
        let hi = half + 2.0 * spec.df();
        if let Some(sub) = spec.argmax_in_band(lo, hi) {
            if spec.power[sub] >= SUBHARMONIC_POWER_RATIO * spec.power[peak] {
                peak = sub;
            }
        }
    }
    // A window dominated by out-of-band content has no trustworthy in-band
    // peak; near-DC bins below 0.1 Hz are ignored (segment mean removal).
    let out_peak = spec
        .freqs
        .iter()
        .zip(spec.power.iter())
        .filter(|(f, _)| **f >= 0.1 && (**f < cfg.band.0 || **f > cfg.band.1))
        .map(|(_, p)| *p)
        .fold(0.0f64, f64::max);
    if out_peak > spec.power[peak] {
        return None;
    }
    let mut freq = spec.freqs[peak];
    if peak > 0 && peak + 1 < spec.power.len() {
        let a = spec.power[peak - 1];
        let b = spec.power[peak];
        let c = spec.power[peak + 1];
        let denom = a - 2.0 * b + c;
        if denom.abs() > 1e-300 {
            let delta = 0.5 * (a - c) / denom;
            if delta.abs() <= 1.0 {
                freq += delta * spec.df();
            }
        }
    }
    Some(60.0 * freq)
}

/// Flat-signal guard matching the trace-method threshold.
fn window_is_flat(samples: &[f64]) -> bool {
    crate::dsp::variance(samples) < 1e-24
}

/// Sliding-window heart-rate series. Invalid windows (flat signal or no
/// in-band peak) hold the previous valid value and are flagged; leading
/// invalid windows take the first valid value.
pub fn hr_series(signal: &Signal1D, cfg: &SpectralConfig) -> Result<HrSeries> {
    let wins = sliding_windows(signal, cfg.win_s, cfg.step_s)?;
    if wins.is_empty() {
        return Err(Error::EmptySeries);
    }
    let mut times = Vec::with_capacity(wins.len());
    let mut raw: Vec<Option<f64>> = Vec::with_capacity(wins.len());
    for w in &wins {
        times.push(w.start_s);
        if window_is_flat(&w.signal.samples) {
            raw.push(None);
        } else {
            raw.push(estimate_hr_samples(&w.signal, cfg));
        }
    }
    Ok(fill_invalid(times, raw))
}

/// Assembles an HrSeries from raw per-window estimates: invalid windows
/// hold the previous valid value (leading ones take the first valid) and
/// are flagged. Shared by the extraction pipelines so their window grid
/// and fill semantics match [`hr_series`] exactly.
pub fn assemble_series(times: Vec<f64>, raw: Vec<Option<f64>>) -> HrSeries {
    fill_invalid(times, raw)
}

fn fill_invalid(times: Vec<f64>, raw: Vec<Option<f64>>) -> HrSeries {
    let first_valid = raw.iter().flatten().next().copied().unwrap_or(0.0);
    let mut bpm = Vec::with_capacity(raw.len());
    let mut valid = Vec::with_capacity(raw.len());
    let mut last = first_valid;
    for r in raw {
        match r {
            Some(v) => {
                last = v;
                bpm.push(v);
                valid.push(true);
            }
            None => {
                bpm.push(last);
                valid.push(false);
            }
        }
    }
    HrSeries { times, bpm, valid }
}

/// Heart rate from a reference signal.
///
/// BVP references run through exactly the same function as extracted
/// signals ([`hr_series`]); ECG references use R-peak detection and
/// RR-interval averaging on the identical window grid.
pub fn reference_hr(reference: &Signal1D, kind: ReferenceKind, cfg: &SpectralConfig) -> Result<HrSeries> {
    match kind {
        ReferenceKind::Bvp => hr_series(reference, cfg),
        ReferenceKind::Ecg => ecg_hr_series(reference, cfg),
    }
}

fn ecg_hr_series(reference: &Signal1D, cfg: &SpectralConfig) -> Result<HrSeries> {
    let total_s = reference.duration_s();
    if total_s < cfg.win_s {
        return Err(Error::EmptySeries);
    }
    let peaks_s = ecg::detect_r_peaks(reference)?;
    let n_windows = ((total_s - cfg.win_s) / cfg.step_s).floor() as usize + 1;
    let mut times = Vec::with_capacity(n_windows);
    let mut raw: Vec<Option<f64>> = Vec::with_capacity(n_windows);
    for k in 0..n_windows {
        let t0 = k as f64 * cfg.step_s;
        let t1 = t0 + cfg.win_s;
        times.push(t0);
        // RR intervals with both beats inside the window.
        let mut rr_sum = 0.0;
        let mut rr_count = 0usize;
        for pair in peaks_s.windows(2) {
            if pair[0] >= t0 && pair[1] <= t1 {
                rr_sum += pair[1] - pair[0];
                rr_count += 1;
            }
        }
        if rr_count >= 2 {
            raw.push(Some(60.0 / (rr_sum / rr_count as f64)));
        } else {
            raw.push(None);
        }
    }
    Ok(fill_invalid(times, raw))
}

/// Marks samples inside flatline runs: absolute successive difference
/// below `eps_frac` of the signal's dynamic range for longer than
/// `min_gap_s`. Returns a per-sample validity mask (false = inside a gap).
pub fn mask_reference_gaps(reference: &Signal1D) -> Vec<bool> {
    mask_reference_gaps_with(reference, 1e-6, 0.5)
}

pub fn mask_reference_gaps_with(reference: &Signal1D, eps_frac: f64, min_gap_s: f64) -> Vec<bool> {
    let n = reference.len();
    let mut mask = vec![true; n];
    if n < 2 {
        return mask;
    }
    let min_v = reference.samples.iter().cloned().fold(f64::MAX, f64::min);
    let max_v = reference.samples.iter().cloned().fold(f64::MIN, f64::max);
    let eps = eps_frac * (max_v - min_v).max(f64::MIN_POSITIVE);
    let min_run = (min_gap_s * reference.fs).round() as usize;

    let mut run_start = 0usize;
    let mut i = 1;
    while i <= n {
        let still_flat = i < n && (reference.samples[i] - reference.samples[i - 1]).abs() < eps;
        if !still_flat {
            // Run of flat steps covers samples run_start..i.
            let run_len = i - run_start;
            if run_len > min_run && run_len >= 2 {
                for m in mask.iter_mut().take(i).skip(run_start) {
                    *m = false;
                }
            }
            run_start = i;
        }
        i += 1;
    }
    mask
}

/// Invalidates HrSeries windows whose sample span is more than
/// `max_invalid_frac` gap-masked.
pub fn apply_gap_mask(series: &mut HrSeries, mask: &[bool], fs: f64, cfg: &SpectralConfig, max_invalid_frac: f64) {
    for (k, t0) in series.times.iter().enumerate() {
        let start = (t0 * fs).round() as usize;
        let end = ((t0 + cfg.win_s) * fs).round().min(mask.len() as f64) as usize;
        if start >= end {
            continue;
        }
        let invalid = mask[start..end].iter().filter(|v| !**v).count();
        if invalid as f64 > max_invalid_frac * (end - start) as f64 {
            series.valid[k] = false;
        }
    }
}
