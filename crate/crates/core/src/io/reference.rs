//! Reference-signal CSV: either one value per line at a declared rate, or
//! `t,value` rows resampled to the declared rate by linear interpolation.

use crate::dsp::Signal1D;
use crate::error::{Error, Result};
use std::path::Path;

pub fn load_reference(path: &Path, fs: f64) -> Result<Signal1D> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Format(format!("cannot read {}: {e}", path.display())))?;
    parse_reference(&text, fs)
}

pub fn parse_reference(text: &str, fs: f64) -> Result<Signal1D> {
    if !(fs > 0.0) {
        return Err(Error::InvalidInput(format!("reference rate must be positive, got {fs}")));
    }
    let mut values: Vec<f64> = Vec::new();
    let mut timestamped: Vec<(f64, f64)> = Vec::new();
    let mut mode: Option<bool> = None; // true = timestamped

    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let first: std::result::Result<f64, _> = fields[0].parse();
        if first.is_err() {
            if lineno == 0 {
                continue; // header line
            }
            return Err(Error::Format(format!("line {}: unparseable value", lineno + 1)));
        }
        match fields.len() {
            1 => {
                if mode == Some(true) {
                    return Err(Error::Format(format!("line {}: mixed column counts", lineno + 1)));
                }
                mode = Some(false);
                values.push(first.unwrap());
            }
            2 => {
                if mode == Some(false) {
                    return Err(Error::Format(format!("line {}: mixed column counts", lineno + 1)));
                }
                mode = Some(true);
                let v: f64 = fields[1]
                    .parse()
                    .map_err(|_| Error::Format(format!("line {}: unparseable value", lineno + 1)))?;
                timestamped.push((first.unwrap(), v));
            }
            n => return Err(Error::Format(format!("line {}: expected 1 or 2 columns, got {n}", lineno + 1))),
        }
    }

    match mode {
        Some(false) => Signal1D::new(values, fs),
        Some(true) => {
            for pair in timestamped.windows(2) {
                if pair[1].0 <= pair[0].0 {
                    return Err(Error::Format(format!(
                        "timestamps not strictly increasing at t = {}",
                        pair[1].0
                    )));
                }
            }
            Ok(resample_linear(&timestamped, fs))
        }
        None => Err(Error::Format("reference file has no data".into())),
    }
}

/// Linear interpolation of (t, v) pairs onto a uniform grid at `fs`
/// starting at the first timestamp.
fn resample_linear(points: &[(f64, f64)], fs: f64) -> Signal1D {
    let t0 = points[0].0;
    let t_end = points[points.len() - 1].0;
    let n = ((t_end - t0) * fs).floor() as usize + 1;
    let mut out = Vec::with_capacity(n);
    let mut seg = 0usize;
    for k in 0..n {
        let t = t0 + k as f64 / fs;
        while seg + 2 < points.len() && points[seg + 1].0 < t {
            seg += 1;
        }
        let (ta, va) = points[seg];
        let (tb, vb) = points[seg + 1];
        let w = ((t - ta) / (tb - ta)).clamp(0.0, 1.0);
        out.push(va * (1.0 - w) + vb * w);
    }
    Signal1D { samples: out, fs }
}

/// Writes a value-per-line reference file.
pub fn save_reference(path: &Path, signal: &Signal1D) -> Result<()> {
    let mut out = String::with_capacity(signal.len() * 12);
    for v in &signal.samples {
        out.push_str(&format!("{v}\n"));
    }
    std::fs::write(path, out)?;
    Ok(())
}
