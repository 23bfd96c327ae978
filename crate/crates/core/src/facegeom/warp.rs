//! Piecewise-affine warp of face frames onto the canonical raster.

use super::mesh::CanonicalMesh;
use super::{ensure_85, LandmarkFrame};
use crate::error::{Error, Result};
use crate::raster::RgbRaster;
use rayon::prelude::*;

/// Minimal source-triangle area before its pixels are zeroed and flagged.
const EPS_AREA: f64 = 1e-6;

/// Spatiotemporal matrix of faces warped to canonical coordinates.
#[derive(Debug, Clone)]
pub struct NormalizedFaceStack {
    pub frames: Vec<RgbRaster>,
    pub fs: f64,
    /// False where landmarks were missing and the previous frame was held.
    pub validity: Vec<bool>,
}

impl NormalizedFaceStack {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }
}

/// Per-frame warp diagnostics.
#[derive(Debug, Clone, Default)]
pub struct WarpReport {
    /// Indices of mesh triangles whose source triangle was degenerate.
    pub degenerate_triangles: Vec<usize>,
}

/// Affine map canonical -> source solved from three vertex pairs.
/// Returns [a, b, c, d, e, f]: x' = a x + b y + c, y' = d x + e y + f.
fn affine_from_triangles(src: [(f64, f64); 3], dst: [(f64, f64); 3]) -> Option<[f64; 6]> {
    let (x0, y0) = src[0];
    let (x1, y1) = src[1];
    let (x2, y2) = src[2];
    let det = (x1 - x0) * (y2 - y0) - (x2 - x0) * (y1 - y0);
    if det.abs() < 1e-12 {
        return None;
    }
    // Solve for each output coordinate against the basis (p1-p0, p2-p0).
    let inv = 1.0 / det;
    let m00 = (y2 - y0) * inv;
    let m01 = -(x2 - x0) * inv;
    let m10 = -(y1 - y0) * inv;
    let m11 = (x1 - x0) * inv;
    let (u0, v0) = dst[0];
    let (u1, v1) = dst[1];
    let (u2, v2) = dst[2];
    let du1 = u1 - u0;
    let du2 = u2 - u0;
    let dv1 = v1 - v0;
    let dv2 = v2 - v0;
    let a = du1 * m00 + du2 * m10;
    let b = du1 * m01 + du2 * m11;
    let d = dv1 * m00 + dv2 * m10;
    let e = dv1 * m01 + dv2 * m11;
    let c = u0 - a * x0 - b * y0;
    let f = v0 - d * x0 - e * y0;
    Some([a, b, c, d, e, f])
}

/// Warps one frame onto the canonical raster: for every mesh triangle an
/// affine map is solved from the canonical vertices to the (clamped) source
/// landmarks, and each covered canonical pixel samples the source
/// bilinearly. Pixels outside all triangles stay zero; triangles whose
/// source shape is degenerate are zeroed and reported.
pub fn warp_to_canonical(
    frame: &RgbRaster,
    lm: &LandmarkFrame,
    mesh: &CanonicalMesh,
) -> Result<(RgbRaster, WarpReport)> {
    let lm85 = ensure_85(lm)?;
    let max_x = (frame.width - 1) as f64;
    let max_y = (frame.height - 1) as f64;
    let src_pts: Vec<(f64, f64)> =
        lm85.points.iter().map(|(x, y)| (x.clamp(0.0, max_x), y.clamp(0.0, max_y))).collect();

    let mut affines: Vec<Option<[f64; 6]>> = Vec::with_capacity(mesh.triangles.len());
    let mut report = WarpReport::default();
    for (ti, t) in mesh.triangles.iter().enumerate() {
        let canon = [mesh.vertices[t[0]], mesh.vertices[t[1]], mesh.vertices[t[2]]];
        let src = [src_pts[t[0]], src_pts[t[1]], src_pts[t[2]]];
        let area = super::mesh::triangle_area(src[0], src[1], src[2]);
        if area < EPS_AREA {
            affines.push(None);
            report.degenerate_triangles.push(ti);
        } else {
            affines.push(affine_from_triangles(canon, src));
        }
    }

    let mut out = RgbRaster::new(mesh.width, mesh.height);
    for y in 0..mesh.height {
        for x in 0..mesh.width {
            let Some(ti) = mesh.triangle_at(x, y) else { continue };
            let Some(m) = affines[ti] else { continue };
            let cx = x as f64;
            let cy = y as f64;
            let sx = m[0] * cx + m[1] * cy + m[2];
            let sy = m[3] * cx + m[4] * cy + m[5];
            let rgb = frame.sample_bilinear(sx, sy);
            out.set_pixel(x, y, [
                rgb[0].round().clamp(0.0, 255.0) as u8,
                rgb[1].round().clamp(0.0, 255.0) as u8,
                rgb[2].round().clamp(0.0, 255.0) as u8,
            ]);
        }
    }
    Ok((out, report))
}

/// Warps a frame sequence. Frames with missing landmarks hold the previous
/// valid raster and carry validity = false; leading gaps are back-filled
/// with the first valid raster. Errors if no frame has landmarks.
pub fn normalize_sequence(
    frames: &[RgbRaster],
    landmarks: &[Option<LandmarkFrame>],
    mesh: &CanonicalMesh,
    fs: f64,
) -> Result<NormalizedFaceStack> {
    if frames.len() != landmarks.len() {
        return Err(Error::InvalidInput(format!(
            "{} frames but {} landmark entries",
            frames.len(),
            landmarks.len()
        )));
    }
    if !landmarks.iter().any(|l| l.is_some()) {
        return Err(Error::EmptyStack);
    }

    let warped: Vec<Option<RgbRaster>> = frames
        .par_iter()
        .zip(landmarks.par_iter())
        .map(|(frame, lm)| match lm {
            Some(lm) => warp_to_canonical(frame, lm, mesh).ok().map(|(r, _)| r),
            None => None,
        })
        .collect();

    let first_valid = warped.iter().position(|w| w.is_some()).ok_or(Error::EmptyStack)?;
    let mut out_frames = Vec::with_capacity(frames.len());
    let mut validity = Vec::with_capacity(frames.len());
    let mut last: RgbRaster = warped[first_valid].clone().unwrap();
    for w in warped {
        match w {
            Some(r) => {
                last = r.clone();
                out_frames.push(r);
                validity.push(true);
            }
            None => {
                out_frames.push(last.clone());
                validity.push(false);
            }
        }
    }
    Ok(NormalizedFaceStack { frames: out_frames, fs, validity })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::facegeom::{canonical_85, CANONICAL_68};

    fn canon_frame_uniform(rgb: [u8; 3]) -> RgbRaster {
        RgbRaster::filled(180, 180, rgb)
    }

    fn lm_canonical() -> LandmarkFrame {
        LandmarkFrame::new(CANONICAL_68.to_vec(), 0).unwrap()
    }

    fn gradient_frame(w: u32, h: u32, dx: i64, dy: i64) -> RgbRaster {
        let mut f = RgbRaster::new(w, h);
        for y in 0..h {
            for x in 0..w {
                let sx = (x as i64 - dx).rem_euclid(256) as u8;
                let sy = (y as i64 - dy).rem_euclid(256) as u8;
                f.set_pixel(x, y, [sx, sy, sx ^ sy]);
            }
        }
        f
    }

    #[test]
    fn identity_landmarks_reproduce_the_frame() {
        let mesh = CanonicalMesh::builtin();
        let frame = gradient_frame(180, 180, 0, 0);
        let (out, rep) = warp_to_canonical(&frame, &lm_canonical(), &mesh).unwrap();
        assert!(rep.degenerate_triangles.is_empty());
        let mut err_sum = 0f64;
        let mut n = 0usize;
        for y in 0..180 {
            for x in 0..180 {
                if mesh.triangle_at(x, y).is_some() {
                    let a = out.pixel(x, y);
                    let b = frame.pixel(x, y);
                    for c in 0..3 {
                        err_sum += (a[c] as f64 - b[c] as f64).abs();
                        n += 1;
                    }
                }
            }
        }
        assert!(err_sum / n as f64 <= 2.0, "mean abs err {}", err_sum / n as f64);
    }

    #[test]
    fn uniform_frame_warps_to_uniform_color() {
        let mesh = CanonicalMesh::builtin();
        let frame = canon_frame_uniform([120, 80, 200]);
        let (out, _) = warp_to_canonical(&frame, &lm_canonical(), &mesh).unwrap();
        for y in 0..180 {
            for x in 0..180 {
                if mesh.triangle_at(x, y).is_some() {
                    assert_eq!(out.pixel(x, y), [120, 80, 200]);
                }
            }
        }
    }

    #[test]
    fn translation_equivariance_of_warp() {
        let mesh = CanonicalMesh::builtin();
        let base = gradient_frame(200, 200, 0, 0);
        let moved = gradient_frame(200, 200, 7, 3);
        let lm0 = lm_canonical();
        let lm1 = LandmarkFrame::new(
            CANONICAL_68.iter().map(|(x, y)| (x + 7.0, y + 3.0)).collect(),
            0,
        )
        .unwrap();
        let (a, _) = warp_to_canonical(&base, &lm0, &mesh).unwrap();
        let (b, _) = warp_to_canonical(&moved, &lm1, &mesh).unwrap();
        let mut err_sum = 0f64;
        let mut n = 0usize;
        for y in 0..180 {
            for x in 0..180 {
                if mesh.triangle_at(x, y).is_some() {
                    for c in 0..3 {
                        err_sum += (a.pixel(x, y)[c] as f64 - b.pixel(x, y)[c] as f64).abs();
                        n += 1;
                    }
                }
            }
        }
        assert!(err_sum / n as f64 <= 2.0, "mean abs diff {}", err_sum / n as f64);
    }

    #[test]
    fn degenerate_source_triangle_is_flagged_not_fatal() {
        let mesh = CanonicalMesh::builtin();
        let frame = canon_frame_uniform([100, 100, 100]);
        // Collapse the three vertices of one mesh triangle in the source.
        let t = mesh.triangles[40];
        let mut pts = canonical_85();
        let p = pts[t[0]];
        pts[t[1]] = p;
        pts[t[2]] = p;
        let lm = LandmarkFrame::new(pts, 0).unwrap();
        let (_, rep) = warp_to_canonical(&frame, &lm, &mesh).unwrap();
        assert!(rep.degenerate_triangles.contains(&40));
    }

    #[test]
    fn missing_landmarks_hold_last_valid_frame() {
        let mesh = CanonicalMesh::builtin();
        let frames: Vec<RgbRaster> = (0..8u8).map(|i| canon_frame_uniform([i * 10, 0, 0])).collect();
        let mut lms: Vec<Option<LandmarkFrame>> = (0..8).map(|i| {
            let mut l = lm_canonical();
            l.frame_index = i;
            Some(l)
        }).collect();
        lms[5] = None;
        let stack = normalize_sequence(&frames, &lms, &mesh, 30.0).unwrap();
        assert_eq!(stack.len(), 8);
        assert!(!stack.validity[5]);
        assert!(stack.validity[4]);
        assert_eq!(stack.frames[5], stack.frames[4]);
    }

    #[test]
    fn all_missing_is_an_empty_stack_error() {
        let mesh = CanonicalMesh::builtin();
        let frames = vec![canon_frame_uniform([1, 2, 3]); 4];
        let lms: Vec<Option<LandmarkFrame>> = vec![None; 4];
        match normalize_sequence(&frames, &lms, &mesh, 30.0) {
            Err(Error::EmptyStack) => {}
            other => panic!("expected empty-stack, got {other:?}"),
        }
    }

    #[test]
    fn stack_is_deterministic() {
        let mesh = CanonicalMesh::builtin();
        let frames: Vec<RgbRaster> = (0..6).map(|i| gradient_frame(200, 200, i, 2 * i)).collect();
        let lms: Vec<Option<LandmarkFrame>> = (0..6).map(|_| Some(lm_canonical())).collect();
        let a = normalize_sequence(&frames, &lms, &mesh, 30.0).unwrap();
        let b = normalize_sequence(&frames, &lms, &mesh, 30.0).unwrap();
        for (fa, fb) in a.frames.iter().zip(b.frames.iter()) {
            assert_eq!(fa.data, fb.data);
        }
    }
}
