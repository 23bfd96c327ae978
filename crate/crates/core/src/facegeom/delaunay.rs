//! Bowyer-Watson Delaunay triangulation for the canonical mesh generator.
//!
//! Deterministic for a fixed input order; intended for the 85-vertex
//! canonical point set, not for large or adversarial inputs.

#[derive(Debug, Clone, Copy)]
struct Tri {
    v: [usize; 3],
}

fn circumcircle_contains(pts: &[(f64, f64)], t: &Tri, p: (f64, f64)) -> bool {
    let (ax, ay) = pts[t.v[0]];
    let (bx, by) = pts[t.v[1]];
    let (cx, cy) = pts[t.v[2]];
    // Ensure counter-clockwise orientation for the sign convention.
    let orient = (bx - ax) * (cy - ay) - (by - ay) * (cx - ax);
    let (bx, by, cx, cy) = if orient > 0.0 { (bx, by, cx, cy) } else { (cx, cy, bx, by) };
    let adx = ax - p.0;
    let ady = ay - p.1;
    let bdx = bx - p.0;
    let bdy = by - p.1;
    let cdx = cx - p.0;
    let cdy = cy - p.1;
    let ad = adx * adx + ady * ady;
    let bd = bdx * bdx + bdy * bdy;
    let cd = cdx * cdx + cdy * cdy;
    let det = adx * (bdy * cd - bd * cdy) - ady * (bdx * cd - bd * cdx) + ad * (bdx * cdy - bdy * cdx);
    det > 0.0
}

/// Triangulates `points`, returning triangles as ascending vertex-index
/// triples in lexicographic order.
pub fn triangulate(points: &[(f64, f64)]) -> Vec<[usize; 3]> {
    let n = points.len();
    assert!(n >= 3, "need at least 3 points");

    let min_x = points.iter().map(|p| p.0).fold(f64::MAX, f64::min);
    let max_x = points.iter().map(|p| p.0).fold(f64::MIN, f64::max);
    let min_y = points.iter().map(|p| p.1).fold(f64::MAX, f64::min);
    let max_y = points.iter().map(|p| p.1).fold(f64::MIN, f64::max);
    let d = (max_x - min_x).max(max_y - min_y).max(1.0);
    let cx = (min_x + max_x) / 2.0;
    let cy = (min_y + max_y) / 2.0;

    let mut pts: Vec<(f64, f64)> = points.to_vec();
    // Super-triangle vertices, indices n, n+1, n+2.
    pts.push((cx - 20.0 * d, cy - d));
    pts.push((cx + 20.0 * d, cy - d));
    pts.push((cx, cy + 20.0 * d));

    let mut tris = vec![Tri { v: [n, n + 1, n + 2] }];

    for p_idx in 0..n {
        let p = pts[p_idx];
        let mut bad = Vec::new();
        for (i, t) in tris.iter().enumerate() {
            if circumcircle_contains(&pts, t, p) {
                bad.push(i);
            }
        }
        // Boundary of the cavity: edges appearing in exactly one bad triangle.
        let mut edges: Vec<(usize, usize)> = Vec::new();
        for &bi in &bad {
            let t = &tris[bi];
            for k in 0..3 {
                let a = t.v[k];
                let b = t.v[(k + 1) % 3];
                let e = if a < b { (a, b) } else { (b, a) };
                if let Some(pos) = edges.iter().position(|x| *x == e) {
                    edges.remove(pos);
                } else {
                    edges.push(e);
                }
            }
        }
        for &bi in bad.iter().rev() {
            tris.remove(bi);
        }
        for (a, b) in edges {
            tris.push(Tri { v: [a, b, p_idx] });
        }
    }

    let mut out: Vec<[usize; 3]> = tris
        .into_iter()
        .filter(|t| t.v.iter().all(|&v| v < n))
        .map(|t| {
            let mut v = t.v;
            v.sort_unstable();
            v
        })
        .collect();
    out.sort_unstable();
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_with_center_gives_four_triangles() {
        let pts = vec![(0.0, 0.0), (10.0, 0.1), (10.1, 10.0), (0.1, 10.1), (5.0, 5.05)];
        let tris = triangulate(&pts);
        assert_eq!(tris.len(), 4);
        // Every triangle uses the centre point.
        for t in &tris {
            assert!(t.contains(&4));
        }
    }

    #[test]
    fn triangle_count_matches_euler_formula() {
        // 2n - 2 - h triangles for n points with h on the hull.
        let mut pts = Vec::new();
        for i in 0..12 {
            let a = i as f64 / 12.0 * std::f64::consts::TAU;
            pts.push((10.0 * a.cos() + 0.01 * i as f64, 10.0 * a.sin()));
        }
        pts.push((0.5, 0.3));
        pts.push((-2.0, 1.7));
        let tris = triangulate(&pts);
        assert_eq!(tris.len(), 2 * 14 - 2 - 12);
    }
}
