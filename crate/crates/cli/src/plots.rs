//! Deterministic plot rendering: per-video HR-envelope overlays and
//! per-method MAE box plots, written as PNG files.

use crate::font::{glyph, GLYPH_W};
use anyhow::{bail, Context, Result};
use std::path::Path;

pub struct Canvas {
    pub w: u32,
    pub h: u32,
    pub data: Vec<u8>,
}

const BG: [u8; 3] = [252, 252, 250];
const AXIS: [u8; 3] = [60, 60, 60];
const GRID: [u8; 3] = [225, 225, 225];
const REF_COLOR: [u8; 3] = [50, 80, 200];
const EST_COLOR: [u8; 3] = [200, 50, 40];
const BOX_FILL: [u8; 3] = [120, 160, 215];

impl Canvas {
    fn new(w: u32, h: u32) -> Self {
        let mut data = Vec::with_capacity((w * h * 3) as usize);
        for _ in 0..w * h {
            data.extend_from_slice(&BG);
        }
        Self { w, h, data }
    }

    fn put(&mut self, x: i64, y: i64, c: [u8; 3]) {
        if x < 0 || y < 0 || x >= self.w as i64 || y >= self.h as i64 {
            return;
        }
        let i = ((y as u32 * self.w + x as u32) * 3) as usize;
        self.data[i..i + 3].copy_from_slice(&c);
    }

    fn line(&mut self, x0: f64, y0: f64, x1: f64, y1: f64, c: [u8; 3]) {
        let steps = ((x1 - x0).abs().max((y1 - y0).abs()).ceil() as usize).max(1);
        for s in 0..=steps {
            let t = s as f64 / steps as f64;
            let x = x0 + (x1 - x0) * t;
            let y = y0 + (y1 - y0) * t;
            self.put(x.round() as i64, y.round() as i64, c);
            // A second pixel thickens diagonal strokes.
            self.put(x.round() as i64, y.round() as i64 + 1, c);
        }
    }

    fn rect(&mut self, x0: i64, y0: i64, x1: i64, y1: i64, c: [u8; 3]) {
        for y in y0..=y1 {
            for x in x0..=x1 {
                self.put(x, y, c);
            }
        }
    }

    fn text(&mut self, x: i64, y: i64, s: &str, c: [u8; 3]) {
        let mut cx = x;
        for ch in s.chars() {
            let g = glyph(ch);
            for (row, bits) in g.iter().enumerate() {
                for col in 0..GLYPH_W {
                    if bits & (1 << (GLYPH_W - 1 - col)) != 0 {
                        self.put(cx + col as i64, y + row as i64, c);
                    }
                }
            }
            cx += GLYPH_W as i64 + 1;
        }
    }

    fn save(&self, path: &Path) -> Result<()> {
        let img = image::RgbImage::from_raw(self.w, self.h, self.data.clone())
            .context("canvas buffer size mismatch")?;
        img.save(path).with_context(|| format!("saving {}", path.display()))?;
        Ok(())
    }
}

const MARGIN_L: f64 = 52.0;
const MARGIN_R: f64 = 14.0;
const MARGIN_T: f64 = 14.0;
const MARGIN_B: f64 = 30.0;

struct Axes {
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
    w: f64,
    h: f64,
}

impl Axes {
    fn px(&self, x: f64) -> f64 {
        MARGIN_L + (x - self.x_min) / (self.x_max - self.x_min) * (self.w - MARGIN_L - MARGIN_R)
    }
    fn py(&self, y: f64) -> f64 {
        (self.h - MARGIN_B) - (y - self.y_min) / (self.y_max - self.y_min) * (self.h - MARGIN_T - MARGIN_B)
    }
}

fn nice_ticks(lo: f64, hi: f64, target: usize) -> Vec<f64> {
    let span = (hi - lo).max(1e-9);
    let raw = span / target as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| span / s <= target as f64)
        .unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() * step;
    let mut ticks = Vec::new();
    let mut t = first;
    while t <= hi + 1e-9 {
        ticks.push(t);
        t += step;
    }
    ticks
}

fn fmt_tick(v: f64) -> String {
    if (v - v.round()).abs() < 1e-9 {
        format!("{}", v.round() as i64)
    } else {
        format!("{v:.1}")
    }
}

/// HR-envelope overlay: reference in blue, extracted in red.
pub fn render_overlay(rows: &[(f64, f64, f64)], title: &str) -> Canvas {
    let mut canvas = Canvas::new(900, 360);
    let x_min = rows.first().map(|r| r.0).unwrap_or(0.0);
    let x_max = rows.last().map(|r| r.0).unwrap_or(1.0).max(x_min + 1.0);
    let mut y_min = f64::MAX;
    let mut y_max = f64::MIN;
    for (_, a, b) in rows {
        y_min = y_min.min(*a).min(*b);
        y_max = y_max.max(*a).max(*b);
    }
    let pad = ((y_max - y_min) * 0.1).max(2.0);
    let ax = Axes {
        x_min,
        x_max,
        y_min: y_min - pad,
        y_max: y_max + pad,
        w: canvas.w as f64,
        h: canvas.h as f64,
    };

    for t in nice_ticks(ax.y_min, ax.y_max, 6) {
        let y = ax.py(t);
        canvas.line(MARGIN_L, y, ax.w - MARGIN_R, y, GRID);
        canvas.text(6, y as i64 - 3, &fmt_tick(t), AXIS);
    }
    for t in nice_ticks(ax.x_min, ax.x_max, 10) {
        let x = ax.px(t);
        canvas.line(x, MARGIN_T, x, ax.h - MARGIN_B, GRID);
        canvas.text(x as i64 - 6, (ax.h - MARGIN_B) as i64 + 8, &fmt_tick(t), AXIS);
    }
    canvas.line(MARGIN_L, MARGIN_T, MARGIN_L, ax.h - MARGIN_B, AXIS);
    canvas.line(MARGIN_L, ax.h - MARGIN_B, ax.w - MARGIN_R, ax.h - MARGIN_B, AXIS);

    for pair in rows.windows(2) {
        let (t0, r0, e0) = pair[0];
        let (t1, r1, e1) = pair[1];
        canvas.line(ax.px(t0), ax.py(r0), ax.px(t1), ax.py(r1), REF_COLOR);
        canvas.line(ax.px(t0), ax.py(e0), ax.px(t1), ax.py(e1), EST_COLOR);
    }
    canvas.text(MARGIN_L as i64 + 8, 4, title, AXIS);
    canvas.text(MARGIN_L as i64 + 8, (MARGIN_T as i64) + 2, "ref", REF_COLOR);
    canvas.text(MARGIN_L as i64 + 40, (MARGIN_T as i64) + 2, "est", EST_COLOR);
    canvas
}

fn quartiles(sorted: &[f64]) -> (f64, f64, f64) {
    let q = |p: f64| -> f64 {
        let idx = p * (sorted.len() - 1) as f64;
        let lo = idx.floor() as usize;
        let hi = idx.ceil() as usize;
        let w = idx - lo as f64;
        sorted[lo] * (1.0 - w) + sorted[hi] * w
    };
    (q(0.25), q(0.5), q(0.75))
}

/// Per-method MAE box plot; log_scale plots log10 MAE.
pub fn render_mae_boxes(groups: &[(String, Vec<f64>)], log_scale: bool) -> Canvas {
    let mut canvas = Canvas::new(900, 360);
    let transform = |v: f64| if log_scale { v.max(1e-3).log10() } else { v };
    let mut y_min = f64::MAX;
    let mut y_max = f64::MIN;
    for (_, vs) in groups {
        for v in vs {
            let t = transform(*v);
            y_min = y_min.min(t);
            y_max = y_max.max(t);
        }
    }
    if y_min > y_max {
        y_min = 0.0;
        y_max = 1.0;
    }
    let pad = ((y_max - y_min) * 0.15).max(0.1);
    let ax = Axes {
        x_min: 0.0,
        x_max: groups.len() as f64,
        y_min: y_min - pad,
        y_max: y_max + pad,
        w: canvas.w as f64,
        h: canvas.h as f64,
    };

    for t in nice_ticks(ax.y_min, ax.y_max, 6) {
        let y = ax.py(t);
        canvas.line(MARGIN_L, y, ax.w - MARGIN_R, y, GRID);
        let label = if log_scale { format!("{:.2}", 10f64.powf(t)) } else { fmt_tick(t) };
        canvas.text(6, y as i64 - 3, &label, AXIS);
    }
    canvas.line(MARGIN_L, MARGIN_T, MARGIN_L, ax.h - MARGIN_B, AXIS);
    canvas.line(MARGIN_L, ax.h - MARGIN_B, ax.w - MARGIN_R, ax.h - MARGIN_B, AXIS);

    for (k, (name, vs)) in groups.iter().enumerate() {
        let mut sorted: Vec<f64> = vs.iter().map(|v| transform(*v)).collect();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        if sorted.is_empty() {
            continue;
        }
        let (q1, med, q3) = quartiles(&sorted);
        let lo = sorted[0];
        let hi = sorted[sorted.len() - 1];
        let cx = ax.px(k as f64 + 0.5);
        let half_w = (ax.px(0.35) - ax.px(0.0)).max(6.0);
        canvas.line(cx, ax.py(lo), cx, ax.py(q1), AXIS);
        canvas.line(cx, ax.py(q3), cx, ax.py(hi), AXIS);
        canvas.rect(
            (cx - half_w) as i64,
            ax.py(q3) as i64,
            (cx + half_w) as i64,
            ax.py(q1) as i64,
            BOX_FILL,
        );
        canvas.line(cx - half_w, ax.py(med), cx + half_w, ax.py(med), [30, 30, 80]);
        canvas.text((cx - 2.5 * name.len() as f64) as i64, (ax.h - MARGIN_B) as i64 + 8, name, AXIS);
    }
    let label = if log_scale { "mae bpm - log scale" } else { "mae bpm" };
    canvas.text(MARGIN_L as i64 + 8, 4, label, AXIS);
    canvas
}

/// Renders every overlay and the MAE box plot from a finished run
/// directory; file names are deterministic.
pub fn run_plots(run_dir: &Path, log_scale: bool) -> Result<Vec<std::path::PathBuf>> {
    let reports = run_dir.join("reports.csv");
    if !reports.exists() {
        bail!("{} has no reports.csv; run evaluate first", run_dir.display());
    }
    let mut written = Vec::new();

    // Overlays from hr_*.csv.
    let mut hr_files: Vec<std::path::PathBuf> = std::fs::read_dir(run_dir)?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with("hr_") && n.ends_with(".csv"))
        })
        .collect();
    hr_files.sort();
    for f in &hr_files {
        let text = std::fs::read_to_string(f)?;
        let mut rows = Vec::new();
        for line in text.lines().skip(1) {
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() >= 3 {
                let t: f64 = cols[0].parse().unwrap_or(0.0);
                let r: f64 = cols[1].parse().unwrap_or(0.0);
                let e: f64 = cols[2].parse().unwrap_or(0.0);
                rows.push((t, r, e));
            }
        }
        if rows.is_empty() {
            continue;
        }
        let stem = f.file_stem().unwrap().to_string_lossy().to_string();
        let title: String = stem.trim_start_matches("hr_").replace('_', " ");
        let canvas = render_overlay(&rows, &title);
        let out = run_dir.join(format!("overlay_{}.png", stem.trim_start_matches("hr_")));
        canvas.save(&out)?;
        written.push(out);
    }

    // MAE box plot grouped by method.
    let text = std::fs::read_to_string(&reports)?;
    let mut groups: Vec<(String, Vec<f64>)> = Vec::new();
    for line in text.lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() < 6 {
            continue;
        }
        let method = cols[2].to_string();
        let mae: f64 = cols[5].parse().unwrap_or(f64::NAN);
        if !mae.is_finite() {
            continue;
        }
        match groups.iter_mut().find(|(m, _)| *m == method) {
            Some((_, v)) => v.push(mae),
            None => groups.push((method, vec![mae])),
        }
    }
    if !groups.is_empty() {
        let canvas = render_mae_boxes(&groups, log_scale);
        let out = run_dir.join(if log_scale { "mae_box_log.png" } else { "mae_box.png" });
        canvas.save(&out)?;
        written.push(out);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overlay_rendering_is_deterministic() {
        let rows: Vec<(f64, f64, f64)> =
            (0..50).map(|i| (i as f64, 70.0 + (i as f64 * 0.3).sin() * 5.0, 71.0 + (i as f64 * 0.3).cos() * 5.0)).collect();
        let a = render_overlay(&rows, "demo");
        let b = render_overlay(&rows, "demo");
        assert_eq!(a.data, b.data);
    }

    #[test]
    fn box_plot_handles_log_scale() {
        let groups = vec![
            ("omit".to_string(), vec![0.5, 1.0, 2.0, 4.0]),
            ("chrom".to_string(), vec![0.8, 1.5, 3.0]),
        ];
        let lin = render_mae_boxes(&groups, false);
        let log = render_mae_boxes(&groups, true);
        assert_ne!(lin.data, log.data);
    }
}
