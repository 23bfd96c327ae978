//! Spatial subspace rotation (2SR) on normalized-face pixel stacks.

use super::{MethodId, PulseWindow};
use crate::dsp::{mean, std_dev, variance};
use crate::error::{Error, Result};
use crate::facegeom::NormalizedFaceStack;
use nalgebra::{Matrix3, SymmetricEigen, Vector3};

/// Diagnostics for one 2SR window.
#[derive(Debug, Clone, Default)]
pub struct SsrReport {
    /// Frames where the dominant eigenvalue was not strictly the largest.
    pub eigenvalue_order_violations: usize,
}

struct FrameSubspace {
    // Eigenvalues descending with matching eigenvectors.
    lambda: [f64; 3],
    u: [Vector3<f64>; 3],
}

fn frame_subspace(frame: &crate::raster::RgbRaster, mask: &[bool]) -> Result<FrameSubspace> {
    let mut corr = Matrix3::zeros();
    let mut count = 0usize;
    for (pi, keep) in mask.iter().enumerate() {
        if !keep {
            continue;
        }
        let base = pi * 3;
        let v = Vector3::new(
            frame.data[base] as f64 / 255.0,
            frame.data[base + 1] as f64 / 255.0,
            frame.data[base + 2] as f64 / 255.0,
        );
        corr += v * v.transpose();
        count += 1;
    }
    if count == 0 {
        return Err(Error::InvalidInput("2sr skin mask selects no pixels".into()));
    }
    corr /= count as f64;
    let eig = SymmetricEigen::new(corr);
    // Sort descending.
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap());
    let mut lambda = [0.0; 3];
    let mut u = [Vector3::zeros(), Vector3::zeros(), Vector3::zeros()];
    for (slot, &k) in order.iter().enumerate() {
        lambda[slot] = eig.eigenvalues[k];
        u[slot] = Vector3::new(eig.eigenvectors[(0, k)], eig.eigenvectors[(1, k)], eig.eigenvectors[(2, k)]);
    }
    // The dominant direction of a correlation matrix of color vectors has
    // non-negative entries; fix the global sign so frames are comparable.
    if u[0].sum() < 0.0 {
        u[0] = -u[0];
    }
    Ok(FrameSubspace { lambda, u })
}

/// Pulse from the temporal rotation of the skin-pixel color subspace
/// against the window's first frame. The backward stride equals the window
/// length, so one anchor serves the whole window.
pub fn ssr_2sr(stack: &NormalizedFaceStack, mask: &[bool], range: std::ops::Range<usize>) -> Result<(PulseWindow, SsrReport)> {
    let frames = &stack.frames[range.clone()];
    if frames.is_empty() {
        return Err(Error::InvalidInput("2sr window is empty".into()));
    }
    let expected = (frames[0].width * frames[0].height) as usize;
    if mask.len() != expected {
        return Err(Error::InvalidInput(format!(
            "mask has {} entries for {} pixels",
            mask.len(),
            expected
        )));
    }

    let mut report = SsrReport::default();
    let subspaces: Vec<FrameSubspace> = frames
        .iter()
        .map(|f| frame_subspace(f, mask))
        .collect::<Result<_>>()?;
    for s in &subspaces {
        if !(s.lambda[0] > s.lambda[1]) {
            report.eigenvalue_order_violations += 1;
        }
    }

    // Rotation components against the anchor, back-projected into RGB:
    // SR(t) = S1(t) u2(0) + S2(t) u3(0). The R and G rows of the
    // back-projected series carry the pulse with opposite signs, so the
    // sigma-ratio subtraction reinforces it.
    let anchor = &subspaces[0];
    let l2 = anchor.lambda[1].max(1e-300);
    let l3 = anchor.lambda[2].max(1e-300);
    let mut sr_r = Vec::with_capacity(frames.len());
    let mut sr_g = Vec::with_capacity(frames.len());
    for sub in &subspaces {
        let s1 = (sub.lambda[0] / l2).sqrt() * sub.u[0].dot(&anchor.u[1]);
        let s2 = (sub.lambda[0] / l3).sqrt() * sub.u[0].dot(&anchor.u[2]);
        let back = anchor.u[1] * s1 + anchor.u[2] * s2;
        sr_r.push(back[0]);
        sr_g.push(back[1]);
    }
    let sd_r = std_dev(&sr_r);
    let sd_g = std_dev(&sr_g);
    let alpha = if sd_g > 0.0 { sd_r / sd_g } else { 0.0 };
    let mut pulse: Vec<f64> = (0..frames.len()).map(|i| sr_r[i] - alpha * sr_g[i]).collect();
    let m = mean(&pulse);
    for v in &mut pulse {
        *v -= m;
    }

    // Flat-output check against the pixel-intensity scale of the window.
    let out_var = variance(&pulse);
    let flat = out_var < 1e-24;
    Ok((
        PulseWindow { samples: pulse, fs: stack.fs, method: MethodId::TwoSr, flat },
        report,
    ))
}

/// Convenience mask: every canonical pixel covered by the mesh.
pub fn mesh_skin_mask(mesh: &crate::facegeom::CanonicalMesh) -> Vec<bool> {
    let mut mask = Vec::with_capacity((mesh.width * mesh.height) as usize);
    for y in 0..mesh.height {
        for x in 0..mesh.width {
            mask.push(mesh.triangle_at(x, y).is_some());
        }
    }
    mask
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::RgbRaster;

    fn stack_of(frames: Vec<RgbRaster>) -> NormalizedFaceStack {
        let n = frames.len();
        NormalizedFaceStack { frames, fs: 30.0, validity: vec![true; n] }
    }

    #[test]
    fn constant_stack_is_flat() {
        let frames: Vec<RgbRaster> = (0..64).map(|_| RgbRaster::filled(16, 16, [180, 140, 120])).collect();
        let stack = stack_of(frames);
        let mask = vec![true; 256];
        let (w, rep) = ssr_2sr(&stack, &mask, 0..64).unwrap();
        assert!(w.flat, "constant stack must be flat");
        assert_eq!(rep.eigenvalue_order_violations, 0);
    }

    #[test]
    fn green_modulation_produces_peak_at_that_frequency() {
        let fs = 30.0;
        let n = 300;
        let frames: Vec<RgbRaster> = (0..n)
            .map(|i| {
                let t = i as f64 / fs;
                let g = 150.0 + 3.0 * (2.0 * std::f64::consts::PI * 1.2 * t).sin();
                RgbRaster::filled(16, 16, [180, g.round() as u8, 120])
            })
            .collect();
        let stack = stack_of(frames);
        let mask = vec![true; 256];
        let (w, _) = ssr_2sr(&stack, &mask, 0..n).unwrap();
        assert!(!w.flat);
        let spec = crate::dsp::welch_psd(
            &w.as_signal(),
            &crate::dsp::WelchConfig::default_for_len(n),
        )
        .unwrap();
        let k = spec.argmax_in_band(0.75, 4.0).unwrap();
        assert!((spec.freqs[k] - 1.2).abs() < 0.1, "peak at {}", spec.freqs[k]);
    }

    #[test]
    fn dominant_eigenvalue_is_strict_on_textured_frames() {
        let fs = 30.0;
        let frames: Vec<RgbRaster> = (0..64)
            .map(|i| {
                let mut f = RgbRaster::new(16, 16);
                for y in 0..16u32 {
                    for x in 0..16u32 {
                        let base = 120 + ((x * 5 + y * 3) % 40) as u8;
                        let t = i as f64 / fs;
                        let g = base as f64 * (1.0 + 0.01 * (2.0 * std::f64::consts::PI * 1.5 * t).sin());
                        f.set_pixel(x, y, [base, g.round() as u8, base / 2 + 40]);
                    }
                }
                f
            })
            .collect();
        let stack = stack_of(frames);
        let mask = vec![true; 256];
        let (_, rep) = ssr_2sr(&stack, &mask, 0..64).unwrap();
        assert_eq!(rep.eigenvalue_order_violations, 0);
    }
}
