//! Statistical and fractal quality measures for region traces.

use crate::dsp::{mean, std_dev, variance, welch_psd, Signal1D, WelchConfig};
use crate::error::{Error, Result};

/// Katz fractal dimension of a waveform.
///
/// D = log10(n) / (log10(d/L) + log10(n)) with L the summed absolute
/// successive differences, a = L/(N-1) their mean, d the largest absolute
/// deviation from the first sample, and n = L/a. Scale-invariant.
pub fn katz_fd(series: &[f64]) -> Result<f64> {
    if series.len() < 3 {
        return Err(Error::InvalidInput(format!("katz_fd needs >= 3 samples, got {}", series.len())));
    }
    let mut length = 0.0f64;
    for w in series.windows(2) {
        length += (w[1] - w[0]).abs();
    }
    let d = series.iter().map(|v| (v - series[0]).abs()).fold(0.0f64, f64::max);
    if length <= 0.0 || d <= 0.0 {
        return Err(Error::UndefinedKfd);
    }
    let n = (series.len() - 1) as f64; // L / a with a = L/(N-1)
    let log_n = n.log10();
    // log10(d/L) + log10(n) = log10(d/a); computing the ratio first keeps
    // the d = a degeneracy exact.
    let denom = (d * n / length).log10();
    if denom <= 0.0 {
        // The waveform never escapes its mean step; maximal complexity.
        return Ok(f64::INFINITY);
    }
    Ok(log_n / denom)
}

/// Detrended fluctuation analysis exponent.
///
/// Integrates the mean-removed series, computes the RMS residual of
/// per-box linear fits F(n) for ~10 log-spaced box sizes in [4, N/4], and
/// returns the least-squares slope of log F against log n.
pub fn dfa_alpha(series: &[f64]) -> Result<f64> {
    let n = series.len();
    if n < 64 {
        return Err(Error::InvalidInput(format!("dfa_alpha needs >= 64 samples, got {n}")));
    }
    let m = mean(series);
    let mut profile = Vec::with_capacity(n);
    let mut acc = 0.0;
    for &v in series {
        acc += v - m;
        profile.push(acc);
    }

    let max_box = n / 4;
    let mut sizes: Vec<usize> = Vec::new();
    let lo = (4.0f64).ln();
    let hi = (max_box as f64).ln();
    for k in 0..10 {
        let s = (lo + (hi - lo) * k as f64 / 9.0).exp().round() as usize;
        if sizes.last() != Some(&s) {
            sizes.push(s);
        }
    }

    let mut log_n = Vec::with_capacity(sizes.len());
    let mut log_f = Vec::with_capacity(sizes.len());
    for &box_len in &sizes {
        let boxes = n / box_len;
        if boxes == 0 {
            continue;
        }
        let mut sq_sum = 0.0;
        for b in 0..boxes {
            let seg = &profile[b * box_len..(b + 1) * box_len];
            sq_sum += linear_fit_residual_mse(seg);
        }
        let f = (sq_sum / boxes as f64).sqrt();
        if f > 0.0 {
            log_n.push((box_len as f64).ln());
            log_f.push(f.ln());
        }
    }
    if log_n.len() < 2 {
        return Err(Error::InvalidInput("series has no fluctuation structure".into()));
    }
    // Least-squares slope of log F vs log n.
    let mx = mean(&log_n);
    let my = mean(&log_f);
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, y) in log_n.iter().zip(log_f.iter()) {
        num += (x - mx) * (y - my);
        den += (x - mx) * (x - mx);
    }
    Ok(num / den)
}

/// Mean squared residual of the least-squares line through `seg`.
fn linear_fit_residual_mse(seg: &[f64]) -> f64 {
    let n = seg.len() as f64;
    let mt = (n - 1.0) / 2.0;
    let my = mean(seg);
    let mut num = 0.0;
    let mut den = 0.0;
    for (i, &v) in seg.iter().enumerate() {
        let dt = i as f64 - mt;
        num += dt * (v - my);
        den += dt * dt;
    }
    let slope = if den > 0.0 { num / den } else { 0.0 };
    let mut sq = 0.0;
    for (i, &v) in seg.iter().enumerate() {
        let fit = my + slope * (i as f64 - mt);
        sq += (v - fit) * (v - fit);
    }
    sq / seg.len() as f64
}

/// Sample entropy with embedding length m and tolerance r (Chebyshev).
pub fn sample_entropy(series: &[f64], m: usize, r: f64) -> f64 {
    let n = series.len();
    if n <= m + 1 {
        return 0.0;
    }
    let count_matches = |len: usize| -> u64 {
        let mut count = 0u64;
        let last = n - len;
        for i in 0..last {
            for j in (i + 1)..last {
                let mut ok = true;
                for k in 0..len {
                    if (series[i + k] - series[j + k]).abs() > r {
                        ok = false;
                        break;
                    }
                }
                if ok {
                    count += 1;
                }
            }
        }
        count
    };
    let b = count_matches(m);
    let a = count_matches(m + 1);
    if a == 0 || b == 0 {
        // No recurrences at tolerance r; conventionally maximal irregularity.
        return (n as f64).ln();
    }
    -((a as f64) / (b as f64)).ln()
}

/// Zero crossings of the mean-removed series. Exact zeros extend the
/// previous run, so a sampled sine over k full periods counts 2k.
pub fn zero_crossings(series: &[f64]) -> usize {
    let m = mean(series);
    let mut last_sign = 0i8;
    let mut count = 0usize;
    for &v in series {
        let d = v - m;
        let s = if d > 0.0 {
            1i8
        } else if d < 0.0 {
            -1i8
        } else {
            0i8
        };
        if s != 0 {
            if last_sign != 0 && s != last_sign {
                count += 1;
            }
            last_sign = s;
        }
    }
    count
}

/// In-band SNR: power within ±0.2 Hz of the in-band spectral peak against
/// the remaining in-band power, in dB.
pub fn snr_db(signal: &Signal1D, band: (f64, f64)) -> f64 {
    let cfg = WelchConfig::default_for_len(signal.len());
    let Ok(spec) = welch_psd(signal, &cfg) else { return f64::NEG_INFINITY };
    let Some(peak) = spec.argmax_in_band(band.0, band.1) else { return f64::NEG_INFINITY };
    let f_peak = spec.freqs[peak];
    let df = spec.df();
    let mut in_peak = 0.0;
    let mut rest = 0.0;
    for (f, p) in spec.freqs.iter().zip(spec.power.iter()) {
        if *f < band.0 || *f > band.1 {
            continue;
        }
        if (*f - f_peak).abs() <= 0.2 {
            in_peak += p * df;
        } else {
            rest += p * df;
        }
    }
    10.0 * (in_peak / rest.max(1e-300)).log10()
}

/// In-band spectral energy (Welch PSD integral over the band).
pub fn psd_band_energy(signal: &Signal1D, band: (f64, f64)) -> f64 {
    let cfg = WelchConfig::default_for_len(signal.len());
    match welch_psd(signal, &cfg) {
        Ok(spec) => spec.band_power(band.0, band.1),
        Err(_) => 0.0,
    }
}

pub(crate) fn basic_moments(series: &[f64]) -> (f64, f64, f64) {
    (mean(series), std_dev(series), variance(series))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn katz_of_linear_series_is_one() {
        let ramp: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let d = katz_fd(&ramp).unwrap();
        assert!((d - 1.0).abs() < 1e-9, "ramp kfd {d}");
        let steep: Vec<f64> = (0..64).map(|i| -3.7 * i as f64 + 11.0).collect();
        let d = katz_fd(&steep).unwrap();
        assert!((d - 1.0).abs() < 1e-9, "steep kfd {d}");
    }

    #[test]
    fn katz_of_constant_series_is_undefined() {
        match katz_fd(&[2.0; 32]) {
            Err(Error::UndefinedKfd) => {}
            other => panic!("expected undefined-kfd, got {other:?}"),
        }
    }

    /// Independent transcription of the formula for the oracle check.
    fn katz_oracle(series: &[f64]) -> f64 {
        let diffs: Vec<f64> = series.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
        let length: f64 = diffs.iter().sum();
        let a = length / diffs.len() as f64;
        let d = series.iter().map(|v| (v - series[0]).abs()).fold(0.0f64, f64::max);
        (length / a).log10() / ((d / a).log10())
    }

    #[test]
    fn katz_matches_direct_transcription() {
        // The alternating series drives d/a to 1, where the formula blows up;
        // both routes must agree there and on a generic series.
        let alt = [0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0];
        let ours = katz_fd(&alt).unwrap();
        let oracle = katz_oracle(&alt);
        assert_eq!(ours.is_infinite(), oracle.is_infinite());

        let wavy = [0.0, 0.8, 0.3, 1.4, -0.2, 0.9, 0.1, 1.1, 0.4, 1.6];
        let ours = katz_fd(&wavy).unwrap();
        let oracle = katz_oracle(&wavy);
        assert!((ours - oracle).abs() < 1e-12, "{ours} vs {oracle}");
    }

    #[test]
    fn katz_at_least_one_for_random_series() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let series: Vec<f64> = (0..50).map(|_| rng.gen::<f64>() * 4.0 - 2.0).collect();
            let d = katz_fd(&series).unwrap();
            assert!(d >= 1.0 - 1e-12, "kfd {d}");
        }
    }

    #[test]
    fn katz_is_scale_invariant() {
        let series: Vec<f64> = (0..100).map(|i| ((i as f64) * 0.7).sin() + 0.3 * ((i as f64) * 2.1).cos()).collect();
        let scaled: Vec<f64> = series.iter().map(|v| 37.5 * v).collect();
        let a = katz_fd(&series).unwrap();
        let b = katz_fd(&scaled).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn dfa_white_noise_near_half() {
        let mut in_range = 0;
        for seed in 0..20u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x: Vec<f64> = (0..2048).map(|_| rng.gen::<f64>() - 0.5).collect();
            let a = dfa_alpha(&x).unwrap();
            if (0.4..=0.6).contains(&a) {
                in_range += 1;
            }
        }
        assert!(in_range >= 18, "white noise alpha in range only {in_range}/20");
    }

    #[test]
    fn dfa_random_walk_near_three_halves() {
        let mut in_range = 0;
        for seed in 0..20u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut acc = 0.0;
            let x: Vec<f64> = (0..2048)
                .map(|_| {
                    acc += rng.gen::<f64>() - 0.5;
                    acc
                })
                .collect();
            let a = dfa_alpha(&x).unwrap();
            if (1.3..=1.7).contains(&a) {
                in_range += 1;
            }
        }
        assert!(in_range >= 18, "random walk alpha in range only {in_range}/20");
    }

    #[test]
    fn dfa_too_short_errors() {
        assert!(dfa_alpha(&vec![0.5; 32]).is_err());
    }

    #[test]
    fn sample_entropy_orders_noise_above_near_sine() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 400;
        let white: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() - 0.5).collect();
        let sine: Vec<f64> = (0..n)
            .map(|i| (2.0 * std::f64::consts::PI * 1.2 * i as f64 / 30.0).sin() + 0.02 * (rng.gen::<f64>() - 0.5))
            .collect();
        let se_white = sample_entropy(&white, 2, 0.2 * std_dev(&white));
        let se_sine = sample_entropy(&sine, 2, 0.2 * std_dev(&sine));
        assert!(se_white > se_sine, "white {se_white} vs sine {se_sine}");
    }

    #[test]
    fn zero_crossings_of_full_periods() {
        // k full periods sampled from just before the first up-crossing:
        // two sign changes per cycle.
        let fs = 30.0;
        for k in [3usize, 7, 12] {
            let f = 1.2;
            let n = (k as f64 * fs / f).round() as usize;
            let x: Vec<f64> =
                (0..n).map(|i| (2.0 * std::f64::consts::PI * f * i as f64 / fs - 0.13).sin()).collect();
            assert_eq!(zero_crossings(&x), 2 * k, "k = {k}");
        }
    }

    #[test]
    fn snr_of_pure_tone_is_high() {
        let fs = 30.0;
        let x: Vec<f64> = (0..600).map(|i| (2.0 * std::f64::consts::PI * 1.5 * i as f64 / fs).sin()).collect();
        let s = Signal1D::new(x, fs).unwrap();
        assert!(snr_db(&s, (0.75, 4.0)) >= 20.0);
    }
}
