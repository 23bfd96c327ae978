//! Fixed facial patches (forehead, cheeks) in canonical coordinates.

use super::RegionBox;
use crate::error::{Error, Result};
use crate::facegeom::LandmarkFrame;

/// Which fixed patches to return.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PatchMode {
    Forehead,
    Cheeks,
    Combined,
}

/// Builds the fixed patch boxes from an 85-point landmark frame (usually
/// the canonical mesh vertices). Boxes are clamped to `raster` bounds.
///
/// Forehead: spans the inner brow columns, from the hairline arc down to
/// just above the brows. Cheeks: from the outer eye corner to the nose
/// wing, below the lower lid, down to the mouth-corner row.
pub fn fixed_patches(lm: &LandmarkFrame, mode: PatchMode, raster: (u32, u32)) -> Result<Vec<RegionBox>> {
    if lm.points.len() != 85 {
        return Err(Error::InvalidInput(format!(
            "fixed patches need 85 landmarks, got {}",
            lm.points.len()
        )));
    }
    let p = &lm.points;
    let clamp_box = |id: usize, x0: f64, y0: f64, x1: f64, y1: f64| -> Result<RegionBox> {
        let (w, h) = raster;
        let x0 = x0.round().clamp(0.0, (w - 1) as f64) as u32;
        let y0 = y0.round().clamp(0.0, (h - 1) as f64) as u32;
        let x1 = x1.round().clamp(1.0, w as f64) as u32;
        let y1 = y1.round().clamp(1.0, h as f64) as u32;
        if x1 <= x0 || y1 <= y0 {
            return Err(Error::InvalidInput(format!("degenerate patch {id}: ({x0},{y0})..({x1},{y1})")));
        }
        Ok(RegionBox { id, x0, y0, x1, y1 })
    };

    // Forehead: x across the brow span, y from the forehead arc's low edge
    // in that span down to just above the brow tops.
    let brow_top = (17..27).map(|i| p[i].1).fold(f64::MAX, f64::min);
    let fx0 = p[18].0;
    let fx1 = p[25].0;
    let arc_low = (68..85)
        .filter(|&i| p[i].0 >= fx0 && p[i].0 <= fx1)
        .map(|i| p[i].1)
        .fold(f64::MIN, f64::max);
    let forehead = clamp_box(0, fx0, arc_low, fx1, brow_top - 1.0)?;

    // Cheeks: eye corner to nose wing, lower lid to mouth corner row.
    let left = clamp_box(
        1,
        p[36].0,
        p[40].1.max(p[41].1) + 2.0,
        p[31].0,
        p[48].1,
    )?;
    let right = clamp_box(
        2,
        p[35].0,
        p[46].1.max(p[47].1) + 2.0,
        p[45].0,
        p[54].1,
    )?;

    Ok(match mode {
        PatchMode::Forehead => vec![forehead],
        PatchMode::Cheeks => vec![left, right],
        PatchMode::Combined => vec![forehead, left, right],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::facegeom::canonical_85;

    fn lm() -> LandmarkFrame {
        LandmarkFrame::new(canonical_85(), 0).unwrap()
    }

    #[test]
    fn combined_mode_returns_three_boxes() {
        let boxes = fixed_patches(&lm(), PatchMode::Combined, (180, 180)).unwrap();
        assert_eq!(boxes.len(), 3);
        assert_eq!(fixed_patches(&lm(), PatchMode::Forehead, (180, 180)).unwrap().len(), 1);
        assert_eq!(fixed_patches(&lm(), PatchMode::Cheeks, (180, 180)).unwrap().len(), 2);
    }

    #[test]
    fn forehead_sits_strictly_above_the_brows() {
        let frame = lm();
        let boxes = fixed_patches(&frame, PatchMode::Forehead, (180, 180)).unwrap();
        let brow_top = (17..27).map(|i| frame.points[i].1).fold(f64::MAX, f64::min);
        assert!((boxes[0].y1 as f64) < brow_top, "forehead bottom {} vs brows {brow_top}", boxes[0].y1);
    }

    #[test]
    fn cheeks_flank_the_nose() {
        let frame = lm();
        let boxes = fixed_patches(&frame, PatchMode::Cheeks, (180, 180)).unwrap();
        let nose_x = frame.points[30].0;
        assert!((boxes[0].x1 as f64) <= nose_x);
        assert!((boxes[1].x0 as f64) >= nose_x);
    }
}
