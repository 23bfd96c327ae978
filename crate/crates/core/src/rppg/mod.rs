//! RGB-to-pulse transformation methods: GREEN, ICA, PCA, CHROM, PBV, 2SR,
//! LAB, POS, LGI, and OMIT.

mod color;
mod ica;
mod methods;
mod qr;
mod ssr;

pub use qr::householder_qr_3xn;
pub use ssr::{mesh_skin_mask, ssr_2sr, SsrReport};

use crate::dsp::{mean, variance, welch_psd, Signal1D, WelchConfig};
use crate::error::{Error, Result};

/// 3 x N matrix of mean R, G, B traces over one analysis window.
#[derive(Debug, Clone)]
pub struct TraceMatrix {
    pub rows: [Vec<f64>; 3],
    pub fs: f64,
}

impl TraceMatrix {
    pub fn new(r: Vec<f64>, g: Vec<f64>, b: Vec<f64>, fs: f64) -> Result<Self> {
        let n = r.len();
        if n < 32 {
            return Err(Error::InvalidInput(format!("trace matrix needs N >= 32, got {n}")));
        }
        if g.len() != n || b.len() != n {
            return Err(Error::InvalidInput("trace rows differ in length".into()));
        }
        for row in [&r, &g, &b] {
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidInput("trace contains NaN or infinite values".into()));
            }
        }
        Ok(Self { rows: [r, g, b], fs })
    }

    pub fn len(&self) -> usize {
        self.rows[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows[0].is_empty()
    }

    /// Temporal normalization: each row divided by its mean. Rows that are
    /// already zero-mean (pre-filtered) are interpreted as normalized
    /// fluctuations and shifted to sit around 1. Identically-zero rows are
    /// degenerate.
    pub fn normalized_rows(&self) -> Result<[Vec<f64>; 3]> {
        let mut out: [Vec<f64>; 3] = Default::default();
        for (k, row) in self.rows.iter().enumerate() {
            let m = mean(row);
            let rms = (row.iter().map(|v| v * v).sum::<f64>() / row.len() as f64).sqrt();
            if rms < 1e-300 {
                return Err(Error::DegenerateTrace(format!("channel {k} is identically zero")));
            }
            if m.abs() > 1e-8 * rms {
                out[k] = row.iter().map(|v| v / m).collect();
            } else {
                out[k] = row.iter().map(|v| v + 1.0).collect();
            }
        }
        Ok(out)
    }

    /// Rows with their means removed.
    pub fn mean_removed_rows(&self) -> [Vec<f64>; 3] {
        let mut out: [Vec<f64>; 3] = Default::default();
        for (k, row) in self.rows.iter().enumerate() {
            let m = mean(row);
            out[k] = row.iter().map(|v| v - m).collect();
        }
        out
    }

    /// Mean per-row variance; reference scale for the flat-output check.
    pub fn input_variance(&self) -> f64 {
        self.rows.iter().map(|r| variance(r)).sum::<f64>() / 3.0
    }
}

/// One window of extracted pulse signal.
#[derive(Debug, Clone)]
pub struct PulseWindow {
    pub samples: Vec<f64>,
    pub fs: f64,
    pub method: MethodId,
    /// Output variance collapsed relative to the input; the window should
    /// not produce an HR estimate.
    pub flat: bool,
}

impl PulseWindow {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn as_signal(&self) -> Signal1D {
        Signal1D { samples: self.samples.clone(), fs: self.fs }
    }
}

/// Registry of RGB-to-pulse conversion methods.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MethodId {
    Green,
    Ica,
    Pca,
    Chrom,
    Pbv,
    TwoSr,
    Lab,
    Pos,
    Lgi,
    Omit,
}

impl MethodId {
    pub const ALL: [MethodId; 10] = [
        MethodId::Green,
        MethodId::Ica,
        MethodId::Pca,
        MethodId::Chrom,
        MethodId::Pbv,
        MethodId::TwoSr,
        MethodId::Lab,
        MethodId::Pos,
        MethodId::Lgi,
        MethodId::Omit,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            MethodId::Green => "green",
            MethodId::Ica => "ica",
            MethodId::Pca => "pca",
            MethodId::Chrom => "chrom",
            MethodId::Pbv => "pbv",
            MethodId::TwoSr => "2sr",
            MethodId::Lab => "lab",
            MethodId::Pos => "pos",
            MethodId::Lgi => "lgi",
            MethodId::Omit => "omit",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.name() == name)
            .ok_or_else(|| Error::InvalidInput(format!("unknown method '{name}'")))
    }

    /// 2SR consumes pixel rasters rather than mean traces.
    pub fn needs_pixels(&self) -> bool {
        matches!(self, MethodId::TwoSr)
    }
}

/// Options shared by the trace-based methods.
#[derive(Debug, Clone, Copy)]
pub struct MethodOptions {
    /// Seed for the ICA fixed-point initialisation.
    pub ica_seed: u64,
    /// Blood-volume-pulse signature for PBV.
    pub pbv_signature: [f64; 3],
    /// Raster dynamic-range maximum for the Lab conversion.
    pub white_scale: f64,
    /// Band for PCA/ICA component selection.
    pub selection_band: (f64, f64),
}

impl Default for MethodOptions {
    fn default() -> Self {
        Self {
            ica_seed: 7,
            pbv_signature: [0.33, 0.77, 0.53],
            white_scale: 255.0,
            selection_band: (0.75, 4.0),
        }
    }
}

/// Runs a trace-based method over one window. The output is mean-removed
/// and flagged flat when its variance collapses relative to the input.
pub fn apply_method(method: MethodId, c: &TraceMatrix, opts: &MethodOptions) -> Result<PulseWindow> {
    if method.needs_pixels() {
        return Err(Error::InvalidInput(
            "2sr operates on pixel stacks; use ssr_2sr with a NormalizedFaceStack window".into(),
        ));
    }
    let raw = match method {
        MethodId::Green => methods::green(c),
        MethodId::Chrom => methods::chrom(c)?,
        MethodId::Pos => methods::pos(c)?,
        MethodId::Pca => methods::pca(c, opts)?,
        MethodId::Ica => ica::ica(c, opts)?,
        MethodId::Pbv => methods::pbv(c, opts)?,
        MethodId::Lgi => methods::lgi(c)?,
        MethodId::Lab => methods::lab(c, opts),
        MethodId::Omit => methods::omit(c),
        MethodId::TwoSr => unreachable!(),
    };
    Ok(finish_window(raw, c, method))
}

pub(crate) fn finish_window(mut samples: Vec<f64>, c: &TraceMatrix, method: MethodId) -> PulseWindow {
    let m = mean(&samples);
    for v in &mut samples {
        *v -= m;
    }
    let out_var = variance(&samples);
    let flat = out_var < 1e-12 * c.input_variance().max(f64::MIN_POSITIVE);
    PulseWindow { samples, fs: c.fs, method, flat }
}

/// In-band peak-power concentration used to pick PCA/ICA components, and
/// the shared sign convention (positive correlation with the green trace).
pub(crate) fn component_band_score(comp: &[f64], fs: f64, band: (f64, f64)) -> f64 {
    let sig = Signal1D { samples: comp.to_vec(), fs };
    let cfg = WelchConfig::default_for_len(comp.len());
    let Ok(spec) = welch_psd(&sig, &cfg) else { return 0.0 };
    let mut total = 0.0;
    let mut peak = 0.0f64;
    for (f, p) in spec.freqs.iter().zip(spec.power.iter()) {
        if *f >= band.0 && *f <= band.1 {
            total += p;
            peak = peak.max(*p);
        }
    }
    if total > 0.0 {
        peak / total
    } else {
        0.0
    }
}

pub(crate) fn align_sign_with(comp: &mut [f64], reference: &[f64]) {
    let m = mean(reference);
    let dot: f64 = comp.iter().zip(reference.iter()).map(|(a, b)| a * (b - m)).sum();
    if dot < 0.0 {
        for v in comp.iter_mut() {
            *v = -*v;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_names_round_trip() {
        let names = ["green", "ica", "pca", "chrom", "pbv", "2sr", "lab", "pos", "lgi", "omit"];
        for (m, n) in MethodId::ALL.iter().zip(names.iter()) {
            assert_eq!(m.name(), *n);
            assert_eq!(MethodId::from_name(n).unwrap(), *m);
        }
        assert!(MethodId::from_name("bogus").is_err());
    }

    #[test]
    fn trace_matrix_validates() {
        assert!(TraceMatrix::new(vec![1.0; 8], vec![1.0; 8], vec![1.0; 8], 30.0).is_err());
        assert!(TraceMatrix::new(vec![1.0; 64], vec![1.0; 32], vec![1.0; 64], 30.0).is_err());
        assert!(TraceMatrix::new(vec![f64::NAN; 64], vec![1.0; 64], vec![1.0; 64], 30.0).is_err());
    }

    #[test]
    fn two_sr_requires_pixel_entry_point() {
        let c = TraceMatrix::new(vec![1.0; 64], vec![1.0; 64], vec![1.0; 64], 30.0).unwrap();
        assert!(apply_method(MethodId::TwoSr, &c, &MethodOptions::default()).is_err());
    }

    #[test]
    fn every_output_is_zero_mean_and_full_length() {
        // Full-rank fluctuations so ICA whitening succeeds.
        let fs = 30.0;
        let n = 300;
        let t: Vec<f64> = (0..n).map(|i| i as f64 / fs).collect();
        let w = 2.0 * std::f64::consts::PI;
        let r: Vec<f64> = t.iter().map(|t| 120.0 + (w * 1.2 * t).sin() + 0.4 * (w * 2.3 * t).cos()).collect();
        let g: Vec<f64> = t.iter().map(|t| 100.0 + 2.0 * (w * 1.2 * t).sin() + 0.3 * (w * 0.9 * t).sin()).collect();
        let b: Vec<f64> = t.iter().map(|t| 80.0 + 0.5 * (w * 1.2 * t).sin() + 0.2 * (w * 3.1 * t).cos()).collect();
        let c = TraceMatrix::new(r, g, b, fs).unwrap();
        for m in MethodId::ALL {
            if m.needs_pixels() {
                continue;
            }
            let w = apply_method(m, &c, &MethodOptions::default()).unwrap();
            assert_eq!(w.len(), n, "{}", m.name());
            let mn = mean(&w.samples);
            let sd = variance(&w.samples).sqrt();
            assert!(mn.abs() <= 1e-9 * sd.max(1e-300), "{} mean {mn}", m.name());
        }
    }
}
