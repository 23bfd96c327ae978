//! Landmark extension, the fixed canonical triangle mesh, and warping of
//! each frame's face into canonical coordinates.

pub mod delaunay;
mod mesh;
mod warp;

pub use mesh::{generate_canonical_mesh, CanonicalMesh, CANONICAL_SIZE};
pub use warp::{normalize_sequence, warp_to_canonical, NormalizedFaceStack, WarpReport};

use crate::error::{Error, Result};

/// Per-frame facial landmarks. The first 68 points follow the Multi-PIE
/// 68-point scheme; 85-point frames carry the 17 extended forehead points.
#[derive(Debug, Clone, PartialEq)]
pub struct LandmarkFrame {
    pub points: Vec<(f64, f64)>,
    pub frame_index: usize,
    pub confidence: Option<f64>,
}

impl LandmarkFrame {
    pub fn new(points: Vec<(f64, f64)>, frame_index: usize) -> Result<Self> {
        if points.len() != 68 && points.len() != 85 {
            return Err(Error::InvalidInput(format!(
                "landmark frame must have 68 or 85 points, got {}",
                points.len()
            )));
        }
        if points.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
            return Err(Error::InvalidInput("landmark coordinates must be finite".into()));
        }
        Ok(Self { points, frame_index, confidence: None })
    }
}

/// The canonical frontal 68-point shape in the 180x180 canonical raster.
///
/// Jaw 0-16, brows 17-26, nose 27-35, eyes 36-47, outer lip 48-59, inner
/// lip 60-67. Coordinates are pixel centres, y grows downward.
pub const CANONICAL_68: [(f64, f64); 68] = [
    (22.0, 90.0),
    (29.3, 101.1),
    (35.7, 114.2),
    (42.5, 127.1),
    (48.2, 139.0),
    (52.2, 149.0),
    (64.0, 156.6),
    (76.7, 161.4),
    (90.0, 163.0),
    (103.3, 161.4),
    (116.0, 156.6),
    (127.8, 149.0),
    (138.1, 139.0),
    (138.0, 127.1),
    (145.3, 114.2),
    (150.7, 101.1),
    (158.0, 90.0),
    (45.0, 78.0),
    (52.0, 74.0),
    (60.0, 72.5),
    (68.0, 74.0),
    (75.0, 77.0),
    (105.0, 77.0),
    (112.0, 74.0),
    (120.0, 72.5),
    (128.0, 74.0),
    (135.0, 78.0),
    (90.2, 88.0),
    (89.9, 97.0),
    (90.1, 106.0),
    (90.0, 115.3),
    (78.0, 122.0),
    (84.0, 124.2),
    (90.1, 125.4),
    (96.0, 124.2),
    (102.0, 122.0),
    (50.0, 92.0),
    (57.0, 88.0),
    (65.0, 88.3),
    (72.0, 92.0),
    (65.5, 95.6),
    (57.2, 95.3),
    (108.0, 92.0),
    (115.0, 88.3),
    (123.0, 88.0),
    (130.0, 92.0),
    (122.8, 95.3),
    (114.5, 95.6),
    (68.0, 140.0),
    (75.0, 134.5),
    (83.0, 132.0),
    (90.0, 133.0),
    (97.0, 132.0),
    (105.0, 134.5),
    (112.0, 140.0),
    (105.0, 146.5),
    (97.0, 150.0),
    (90.0, 151.0),
    (83.0, 150.0),
    (75.0, 146.5),
    (73.0, 140.0),
    (83.0, 137.0),
    (90.0, 137.8),
    (97.0, 137.0),
    (107.0, 140.0),
    (97.0, 143.5),
    (90.0, 144.3),
    (83.0, 143.5),
];

/// Per-point offset scales for the forehead construction: brows (outer to
/// inner), temple points (from jaw points 1/15), and the apex (from the
/// nose tip 30).
const BROW_SCALES: [f64; 5] = [4.24, 3.41, 3.35, 3.83, 4.82];
const TEMPLE_SCALE: f64 = 1.57;
const APEX_SCALE: f64 = 2.53;
/// Blend points are midpoints pulled this fraction toward the landmark
/// centroid so they stay strictly inside the forehead dome.
const BLEND_PULL: f64 = 0.06;

/// Pushes `p` away from the chin side of the line through `a` and `b`,
/// scaling its offset from the line by `scale`.
fn push_from_chin(p: (f64, f64), a: (f64, f64), b: (f64, f64), chin: (f64, f64), scale: f64) -> (f64, f64) {
    let dx = b.0 - a.0;
    let dy = b.1 - a.1;
    let len = (dx * dx + dy * dy).sqrt();
    let (ux, uy) = (dx / len, dy / len);
    let t = (p.0 - a.0) * ux + (p.1 - a.1) * uy;
    let foot = (a.0 + t * ux, a.1 + t * uy);
    let cross = |q: (f64, f64)| dx * (q.1 - a.1) - dy * (q.0 - a.0);
    let sgn = if cross(p) * cross(chin) > 0.0 { -1.0 } else { 1.0 };
    (foot.0 + scale * sgn * (p.0 - foot.0), foot.1 + scale * sgn * (p.1 - foot.1))
}

/// Extends 68 Multi-PIE landmarks with 17 forehead points (indices 68-84).
///
/// The forehead points are fixed affine combinations of the input points:
/// brow points 17-26 pushed above the 0-16 line with per-point scales, two
/// temple points from jaw points 1/15, an apex from the nose tip, and four
/// blend points. Output order, left temple to right temple:
/// temple, blend, brows 17-21, blend, apex, blend, brows 22-26, blend, temple.
pub fn extend_landmarks(lm: &LandmarkFrame) -> Result<LandmarkFrame> {
    if lm.points.len() != 68 {
        return Err(Error::InvalidInput(format!(
            "extend_landmarks expects 68 points, got {}",
            lm.points.len()
        )));
    }
    let p = &lm.points;
    // Degeneracy check: all points within a hair of one line.
    let a = p[0];
    let b = p[16];
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let axis_len = (dx * dx + dy * dy).sqrt();
    if axis_len < 1e-9 {
        return Err(Error::DegenerateFace("landmarks 0 and 16 coincide".into()));
    }
    let max_off = p
        .iter()
        .map(|q| (dx * (q.1 - a.1) - dy * (q.0 - a.0)).abs() / axis_len)
        .fold(0.0f64, f64::max);
    if max_off < 1e-6 * axis_len.max(1.0) {
        return Err(Error::DegenerateFace("landmark points are collinear".into()));
    }

    let chin = p[8];
    let n = p.len() as f64;
    let center = p.iter().fold((0.0, 0.0), |acc, q| (acc.0 + q.0 / n, acc.1 + q.1 / n));
    let up = |q: (f64, f64), s: f64| push_from_chin(q, a, b, chin, s);
    let temple_l = up(p[1], TEMPLE_SCALE);
    let temple_r = up(p[15], TEMPLE_SCALE);
    let apex = up(p[30], APEX_SCALE);
    let brows_l: Vec<(f64, f64)> = (0..5).map(|i| up(p[17 + i], BROW_SCALES[i])).collect();
    let brows_r: Vec<(f64, f64)> = (0..5).map(|i| up(p[22 + i], BROW_SCALES[4 - i])).collect();
    let blend = |u: (f64, f64), v: (f64, f64)| {
        let m = ((u.0 + v.0) / 2.0, (u.1 + v.1) / 2.0);
        ((1.0 - BLEND_PULL) * m.0 + BLEND_PULL * center.0, (1.0 - BLEND_PULL) * m.1 + BLEND_PULL * center.1)
    };

    let mut out = p.clone();
    out.push(temple_l);
    out.push(blend(temple_l, brows_l[0]));
    out.extend_from_slice(&brows_l);
    out.push(blend(brows_l[4], apex));
    out.push(apex);
    out.push(blend(apex, brows_r[0]));
    out.extend_from_slice(&brows_r);
    out.push(blend(brows_r[4], temple_r));
    out.push(temple_r);
    debug_assert_eq!(out.len(), 85);
    Ok(LandmarkFrame { points: out, frame_index: lm.frame_index, confidence: lm.confidence })
}

/// Returns the 85 canonical vertices (canonical 68 extended).
pub fn canonical_85() -> Vec<(f64, f64)> {
    let lm = LandmarkFrame::new(CANONICAL_68.to_vec(), 0).unwrap();
    extend_landmarks(&lm).unwrap().points
}

/// 85-point passthrough: extends 68-point frames, leaves 85-point frames
/// untouched.
pub fn ensure_85(lm: &LandmarkFrame) -> Result<LandmarkFrame> {
    match lm.points.len() {
        85 => Ok(lm.clone()),
        68 => extend_landmarks(lm),
        n => Err(Error::InvalidInput(format!("landmark frame has {n} points"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lm68() -> LandmarkFrame {
        LandmarkFrame::new(CANONICAL_68.to_vec(), 0).unwrap()
    }

    #[test]
    fn canonical_input_reproduces_mesh_vertices() {
        let mesh = CanonicalMesh::builtin();
        let ext = extend_landmarks(&lm68()).unwrap();
        for (i, (p, v)) in ext.points.iter().zip(mesh.vertices.iter()).enumerate() {
            assert!((p.0 - v.0).abs() < 1e-9 && (p.1 - v.1).abs() < 1e-9, "vertex {i}: {p:?} vs {v:?}");
        }
    }

    #[test]
    fn translation_equivariant() {
        let base = extend_landmarks(&lm68()).unwrap();
        let moved: Vec<(f64, f64)> = CANONICAL_68.iter().map(|(x, y)| (x + 10.0, y + 5.0)).collect();
        let ext = extend_landmarks(&LandmarkFrame::new(moved, 0).unwrap()).unwrap();
        for (p, q) in ext.points.iter().zip(base.points.iter()) {
            assert!((p.0 - (q.0 + 10.0)).abs() < 1e-6);
            assert!((p.1 - (q.1 + 5.0)).abs() < 1e-6);
        }
    }

    #[test]
    fn scale_equivariant_about_centroid() {
        let base = extend_landmarks(&lm68()).unwrap();
        let n = 68.0;
        let c = CANONICAL_68.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0 / n, a.1 + p.1 / n));
        let scaled: Vec<(f64, f64)> =
            CANONICAL_68.iter().map(|(x, y)| (c.0 + 2.0 * (x - c.0), c.1 + 2.0 * (y - c.1))).collect();
        let ext = extend_landmarks(&LandmarkFrame::new(scaled, 0).unwrap()).unwrap();
        for (p, q) in ext.points.iter().zip(base.points.iter()) {
            let expect = (c.0 + 2.0 * (q.0 - c.0), c.1 + 2.0 * (q.1 - c.1));
            assert!((p.0 - expect.0).abs() < 1e-6, "{p:?} vs {expect:?}");
            assert!((p.1 - expect.1).abs() < 1e-6);
        }
    }

    #[test]
    fn collinear_input_is_degenerate() {
        let pts: Vec<(f64, f64)> = (0..68).map(|i| (i as f64, 2.0 * i as f64)).collect();
        match extend_landmarks(&LandmarkFrame::new(pts, 0).unwrap()) {
            Err(Error::DegenerateFace(_)) => {}
            other => panic!("expected degenerate-face, got {other:?}"),
        }
    }

    #[test]
    fn forehead_arc_sits_above_the_brows() {
        // Interior arc points clear the brows; the temple endpoints sit at
        // the side of the face, above the eye line.
        let ext = extend_landmarks(&lm68()).unwrap();
        let brow_top = (17..27).map(|i| ext.points[i].1).fold(f64::MAX, f64::min);
        for i in 69..84 {
            assert!(ext.points[i].1 < brow_top, "point {i} at {:?}", ext.points[i]);
        }
        let eye_line = ext.points[36].1.min(ext.points[45].1);
        assert!(ext.points[68].1 < eye_line);
        assert!(ext.points[84].1 < eye_line);
    }
}
