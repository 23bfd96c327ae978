//! Landmark CSV: header `frame,x0,y0,...,x67,y67` (or the 85-point
//! variant); one row per frame, missing frames absent.

use crate::error::{Error, Result};
use crate::facegeom::LandmarkFrame;
use std::path::Path;

/// Loads a landmark CSV into a frame-indexed vector; absent frames are
/// None. Malformed rows report their line number.
pub fn load_landmarks(path: &Path) -> Result<Vec<Option<LandmarkFrame>>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Format(format!("cannot read {}: {e}", path.display())))?;
    parse_landmarks(&text)
}

pub fn parse_landmarks(text: &str) -> Result<Vec<Option<LandmarkFrame>>> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| Error::Format("empty landmark file".into()))?;
    let cols: Vec<&str> = header.split(',').collect();
    let n_points = match cols.len() {
        137 => 68usize, // frame + 68 pairs
        171 => 85,
        n => {
            return Err(Error::Format(format!(
                "landmark header has {n} columns; expected 137 (68 points) or 171 (85 points)"
            )))
        }
    };
    if cols[0] != "frame" {
        return Err(Error::Format("landmark header must start with 'frame'".into()));
    }

    let mut rows: Vec<(usize, LandmarkFrame)> = Vec::new();
    let mut max_index = 0usize;
    for (lineno, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 1 + 2 * n_points {
            return Err(Error::Format(format!(
                "line {}: expected {} columns, got {}",
                lineno + 1,
                1 + 2 * n_points,
                fields.len()
            )));
        }
        let frame_index: usize = fields[0]
            .trim()
            .parse()
            .map_err(|_| Error::Format(format!("line {}: bad frame index '{}'", lineno + 1, fields[0])))?;
        let mut points = Vec::with_capacity(n_points);
        for p in 0..n_points {
            let x: f64 = fields[1 + 2 * p]
                .trim()
                .parse()
                .map_err(|_| Error::Format(format!("line {}: bad x{} value", lineno + 1, p)))?;
            let y: f64 = fields[2 + 2 * p]
                .trim()
                .parse()
                .map_err(|_| Error::Format(format!("line {}: bad y{} value", lineno + 1, p)))?;
            points.push((x, y));
        }
        let lm = LandmarkFrame::new(points, frame_index)
            .map_err(|e| Error::Format(format!("line {}: {e}", lineno + 1)))?;
        max_index = max_index.max(frame_index);
        rows.push((frame_index, lm));
    }
    if rows.is_empty() {
        return Err(Error::Format("landmark file has no data rows".into()));
    }
    let mut out: Vec<Option<LandmarkFrame>> = vec![None; max_index + 1];
    for (idx, lm) in rows {
        out[idx] = Some(lm);
    }
    Ok(out)
}

/// Writes landmarks in the CSV format read by [`load_landmarks`].
pub fn save_landmarks(path: &Path, landmarks: &[Option<LandmarkFrame>]) -> Result<()> {
    let n_points = landmarks
        .iter()
        .flatten()
        .next()
        .map(|l| l.points.len())
        .ok_or_else(|| Error::InvalidInput("no landmark frames to save".into()))?;
    let mut out = String::from("frame");
    for p in 0..n_points {
        out.push_str(&format!(",x{p},y{p}"));
    }
    out.push('\n');
    for (i, lm) in landmarks.iter().enumerate() {
        if let Some(lm) = lm {
            out.push_str(&i.to_string());
            for (x, y) in &lm.points {
                out.push_str(&format!(",{x},{y}"));
            }
            out.push('\n');
        }
    }
    std::fs::write(path, out)?;
    Ok(())
}
