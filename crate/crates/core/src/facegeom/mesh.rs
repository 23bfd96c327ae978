//! The fixed 85-vertex, 131-triangle canonical face mesh.
//!
//! The mesh ships as a versioned text file generated once by
//! [`generate_canonical_mesh`] (see `examples/meshgen.rs`); the loader
//! verifies the embedded checksum. Triangulation is Delaunay over the
//! canonical vertices, pruned of the triangles covering the eye and inner
//! mouth interiors.

use super::delaunay;
use crate::error::{Error, Result};

/// Canonical raster side in pixels.
pub const CANONICAL_SIZE: u32 = 180;

const MESH_FILE: &str = include_str!("canonical_mesh_v1.txt");

/// Vertex-index polygons whose interiors are excluded from the mesh.
const EYE_LEFT: [usize; 6] = [36, 37, 38, 39, 40, 41];
const EYE_RIGHT: [usize; 6] = [42, 43, 44, 45, 46, 47];
const MOUTH_INNER: [usize; 8] = [60, 61, 62, 63, 64, 65, 66, 67];

/// The canonical face mesh with a precomputed pixel-to-triangle map.
#[derive(Debug, Clone)]
pub struct CanonicalMesh {
    pub width: u32,
    pub height: u32,
    pub vertices: Vec<(f64, f64)>,
    /// 131 ascending-index vertex triples.
    pub triangles: Vec<[usize; 3]>,
    /// Per-pixel triangle index, -1 outside the mesh. len = width * height.
    pixel_tri: Vec<i16>,
}

impl CanonicalMesh {
    /// Loads the mesh shipped with the crate.
    pub fn builtin() -> Self {
        Self::from_file_str(MESH_FILE).expect("embedded canonical mesh is valid")
    }

    pub fn from_file_str(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::Format("empty mesh file".into()))?;
        if header.trim() != "canonical-face-mesh v1" {
            return Err(Error::Format(format!("unexpected mesh header: {header}")));
        }
        let raster = lines.next().ok_or_else(|| Error::Format("missing raster line".into()))?;
        let mut it = raster.split_whitespace();
        if it.next() != Some("raster") {
            return Err(Error::Format("missing raster line".into()));
        }
        let width: u32 = parse_field(it.next(), "raster width")?;
        let height: u32 = parse_field(it.next(), "raster height")?;
        let checksum_line = lines.next().ok_or_else(|| Error::Format("missing checksum".into()))?;
        let expected = checksum_line
            .strip_prefix("checksum ")
            .ok_or_else(|| Error::Format("missing checksum".into()))?
            .trim()
            .to_string();

        let body: Vec<&str> = lines.collect();
        let actual = format!("{:016x}", fnv1a64(body.join("\n").as_bytes()));
        if actual != expected {
            return Err(Error::Format(format!("mesh checksum mismatch: {actual} != {expected}")));
        }

        let mut body = body.into_iter();
        let vcount: usize = parse_count(body.next(), "vertices")?;
        if vcount != 85 {
            return Err(Error::Format(format!("expected 85 vertices, got {vcount}")));
        }
        let mut vertices = Vec::with_capacity(vcount);
        for i in 0..vcount {
            let line = body.next().ok_or_else(|| Error::Format("truncated vertex list".into()))?;
            let mut it = line.split_whitespace();
            let idx: usize = parse_field(it.next(), "vertex index")?;
            if idx != i {
                return Err(Error::Format(format!("vertex rows out of order at {i}")));
            }
            let x: f64 = parse_field(it.next(), "vertex x")?;
            let y: f64 = parse_field(it.next(), "vertex y")?;
            vertices.push((x, y));
        }
        let tcount: usize = parse_count(body.next(), "triangles")?;
        if tcount != 131 {
            return Err(Error::Format(format!("expected 131 triangles, got {tcount}")));
        }
        let mut triangles = Vec::with_capacity(tcount);
        for _ in 0..tcount {
            let line = body.next().ok_or_else(|| Error::Format("truncated triangle list".into()))?;
            let mut it = line.split_whitespace();
            let a: usize = parse_field(it.next(), "triangle index")?;
            let b: usize = parse_field(it.next(), "triangle index")?;
            let c: usize = parse_field(it.next(), "triangle index")?;
            if a >= 85 || b >= 85 || c >= 85 {
                return Err(Error::Format(format!("triangle ({a},{b},{c}) references vertex >= 85")));
            }
            triangles.push([a, b, c]);
        }
        Self::new(width, height, vertices, triangles)
    }

    pub fn new(width: u32, height: u32, vertices: Vec<(f64, f64)>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        for t in &triangles {
            if triangle_area(vertices[t[0]], vertices[t[1]], vertices[t[2]]) <= 0.0 {
                return Err(Error::DegenerateFace(format!("zero-area mesh triangle {t:?}")));
            }
        }
        let pixel_tri = rasterize_map(width, height, &vertices, &triangles);
        Ok(Self { width, height, vertices, triangles, pixel_tri })
    }

    /// Triangle index covering pixel (x, y), if any.
    #[inline]
    pub fn triangle_at(&self, x: u32, y: u32) -> Option<usize> {
        let v = self.pixel_tri[(y * self.width + x) as usize];
        (v >= 0).then_some(v as usize)
    }

    /// Number of canonical pixels covered by the mesh.
    pub fn coverage(&self) -> usize {
        self.pixel_tri.iter().filter(|v| **v >= 0).count()
    }

    pub fn serialize(&self) -> String {
        let mut body = String::new();
        body.push_str(&format!("vertices {}\n", self.vertices.len()));
        for (i, (x, y)) in self.vertices.iter().enumerate() {
            body.push_str(&format!("{i} {x} {y}\n"));
        }
        body.push_str(&format!("triangles {}\n", self.triangles.len()));
        for t in &self.triangles {
            body.push_str(&format!("{} {} {}\n", t[0], t[1], t[2]));
        }
        let body_for_sum = body.trim_end_matches('\n');
        let checksum = fnv1a64(body_for_sum.as_bytes());
        format!(
            "canonical-face-mesh v1\nraster {} {}\nchecksum {:016x}\n{}",
            self.width, self.height, checksum, body
        )
    }
}

fn parse_field<T: std::str::FromStr>(field: Option<&str>, what: &str) -> Result<T> {
    field
        .ok_or_else(|| Error::Format(format!("missing {what}")))?
        .parse()
        .map_err(|_| Error::Format(format!("unparseable {what}")))
}

fn parse_count(line: Option<&str>, keyword: &str) -> Result<usize> {
    let line = line.ok_or_else(|| Error::Format(format!("missing {keyword} line")))?;
    let mut it = line.split_whitespace();
    if it.next() != Some(keyword) {
        return Err(Error::Format(format!("expected {keyword} line, got: {line}")));
    }
    parse_field(it.next(), keyword)
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf29ce484222325u64;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}

pub(crate) fn triangle_area(a: (f64, f64), b: (f64, f64), c: (f64, f64)) -> f64 {
    0.5 * ((b.0 - a.0) * (c.1 - a.1) - (c.0 - a.0) * (b.1 - a.1)).abs()
}

fn point_in_polygon(poly: &[(f64, f64)], q: (f64, f64)) -> bool {
    let mut inside = false;
    let n = poly.len();
    for i in 0..n {
        let (x1, y1) = poly[i];
        let (x2, y2) = poly[(i + 1) % n];
        if (y1 > q.1) != (y2 > q.1) {
            let xin = (x2 - x1) * (q.1 - y1) / (y2 - y1) + x1;
            if q.0 < xin {
                inside = !inside;
            }
        }
    }
    inside
}

fn rasterize_map(width: u32, height: u32, vertices: &[(f64, f64)], triangles: &[[usize; 3]]) -> Vec<i16> {
    let mut map = vec![-1i16; (width * height) as usize];
    for (ti, t) in triangles.iter().enumerate() {
        let (a, b, c) = (vertices[t[0]], vertices[t[1]], vertices[t[2]]);
        let min_x = a.0.min(b.0).min(c.0).floor().max(0.0) as u32;
        let max_x = (a.0.max(b.0).max(c.0).ceil() as u32).min(width - 1);
        let min_y = a.1.min(b.1).min(c.1).floor().max(0.0) as u32;
        let max_y = (a.1.max(b.1).max(c.1).ceil() as u32).min(height - 1);
        for y in min_y..=max_y {
            for x in min_x..=max_x {
                let idx = (y * width + x) as usize;
                if map[idx] >= 0 {
                    continue;
                }
                let p = (x as f64, y as f64);
                if barycentric_inside(a, b, c, p, 1e-9) {
                    map[idx] = ti as i16;
                }
            }
        }
    }
    map
}

#[inline]
pub(crate) fn barycentric_inside(a: (f64, f64), b: (f64, f64), c: (f64, f64), p: (f64, f64), eps: f64) -> bool {
    let det = (b.0 - a.0) * (c.1 - a.1) - (c.0 - a.0) * (b.1 - a.1);
    if det.abs() < 1e-12 {
        return false;
    }
    let u = ((p.0 - a.0) * (c.1 - a.1) - (c.0 - a.0) * (p.1 - a.1)) / det;
    let v = ((b.0 - a.0) * (p.1 - a.1) - (p.0 - a.0) * (b.1 - a.1)) / det;
    u >= -eps && v >= -eps && u + v <= 1.0 + eps
}

/// Regenerates the canonical mesh from the canonical landmark tables:
/// Delaunay over the 85 canonical vertices, pruned of triangles whose
/// centroids fall inside the eye or inner-mouth polygons.
pub fn generate_canonical_mesh() -> Result<CanonicalMesh> {
    let vertices = super::canonical_85();
    let tris = delaunay::triangulate(&vertices);
    let polys: [&[usize]; 3] = [&EYE_LEFT, &EYE_RIGHT, &MOUTH_INNER];
    let poly_pts: Vec<Vec<(f64, f64)>> =
        polys.iter().map(|idx| idx.iter().map(|&i| vertices[i]).collect()).collect();
    let kept: Vec<[usize; 3]> = tris
        .into_iter()
        .filter(|t| {
            let cx = (vertices[t[0]].0 + vertices[t[1]].0 + vertices[t[2]].0) / 3.0;
            let cy = (vertices[t[0]].1 + vertices[t[1]].1 + vertices[t[2]].1) / 3.0;
            !poly_pts.iter().any(|poly| point_in_polygon(poly, (cx, cy)))
        })
        .collect();
    CanonicalMesh::new(CANONICAL_SIZE, CANONICAL_SIZE, vertices, kept)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generated_mesh_has_exactly_131_triangles() {
        let mesh = generate_canonical_mesh().unwrap();
        assert_eq!(mesh.vertices.len(), 85);
        assert_eq!(mesh.triangles.len(), 131);
    }

    #[test]
    fn shipped_file_matches_regeneration() {
        let generated = generate_canonical_mesh().unwrap();
        assert_eq!(generated.serialize(), MESH_FILE, "regenerate with: cargo run -p rppg-core --example meshgen");
    }

    #[test]
    fn builtin_roundtrips_through_serialization() {
        let mesh = CanonicalMesh::builtin();
        let re = CanonicalMesh::from_file_str(&mesh.serialize()).unwrap();
        assert_eq!(re.vertices, mesh.vertices);
        assert_eq!(re.triangles, mesh.triangles);
    }

    #[test]
    fn corrupted_checksum_is_rejected() {
        let mut text = CanonicalMesh::builtin().serialize();
        text = text.replacen("checksum ", "checksum f", 1);
        assert!(CanonicalMesh::from_file_str(&text).is_err());
    }

    #[test]
    fn triangle_areas_sum_to_face_region() {
        // Hull area minus the pruned eye/mouth hole areas, within 1%.
        let mesh = CanonicalMesh::builtin();
        let total: f64 = mesh
            .triangles
            .iter()
            .map(|t| triangle_area(mesh.vertices[t[0]], mesh.vertices[t[1]], mesh.vertices[t[2]]))
            .sum();
        let hull = convex_hull_area(&mesh.vertices);
        let holes: f64 = [&EYE_LEFT[..], &EYE_RIGHT[..], &MOUTH_INNER[..]]
            .iter()
            .map(|idx| polygon_area(&idx.iter().map(|&i| mesh.vertices[i]).collect::<Vec<_>>()))
            .sum();
        let expect = hull - holes;
        assert!((total - expect).abs() / expect < 0.01, "mesh area {total} vs region {expect}");
    }

    #[test]
    fn triangle_interiors_do_not_overlap() {
        // Strict-interior sampling: no pixel centre may fall inside two triangles.
        let mesh = CanonicalMesh::builtin();
        for y in 0..mesh.height {
            for x in 0..mesh.width {
                let p = (x as f64, y as f64);
                let mut hits = 0;
                for t in &mesh.triangles {
                    if barycentric_inside(mesh.vertices[t[0]], mesh.vertices[t[1]], mesh.vertices[t[2]], p, -1e-9)
                    {
                        hits += 1;
                    }
                }
                assert!(hits <= 1, "pixel ({x},{y}) inside {hits} triangles");
            }
        }
    }

    #[test]
    fn vertex_indices_in_range() {
        let mesh = CanonicalMesh::builtin();
        for t in &mesh.triangles {
            assert!(t.iter().all(|&v| v < 85));
        }
    }

    #[test]
    fn mesh_covers_a_substantial_face_region() {
        let mesh = CanonicalMesh::builtin();
        let frac = mesh.coverage() as f64 / (mesh.width * mesh.height) as f64;
        assert!(frac > 0.4, "coverage {frac}");
    }

    fn polygon_area(poly: &[(f64, f64)]) -> f64 {
        let n = poly.len();
        let mut s = 0.0;
        for i in 0..n {
            let (x1, y1) = poly[i];
            let (x2, y2) = poly[(i + 1) % n];
            s += x1 * y2 - x2 * y1;
        }
        s.abs() / 2.0
    }

    fn convex_hull_area(pts: &[(f64, f64)]) -> f64 {
        // Monotone chain.
        let mut p: Vec<(f64, f64)> = pts.to_vec();
        p.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let cross = |o: (f64, f64), a: (f64, f64), b: (f64, f64)| {
            (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
        };
        let mut lower: Vec<(f64, f64)> = Vec::new();
        for &pt in &p {
            while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], pt) <= 0.0 {
                lower.pop();
            }
            lower.push(pt);
        }
        let mut upper: Vec<(f64, f64)> = Vec::new();
        for &pt in p.iter().rev() {
            while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], pt) <= 0.0 {
                upper.pop();
            }
            upper.push(pt);
        }
        lower.pop();
        upper.pop();
        lower.extend(upper);
        polygon_area(&lower)
    }
}
