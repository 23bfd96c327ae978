//! Trace-based conversion methods.

use super::color::srgb_to_lab_a;
use super::qr::householder_qr_3xn;
use super::{MethodOptions, TraceMatrix};
use crate::dsp::{mean, std_dev};
use crate::error::{Error, Result};
use nalgebra::{Matrix3, SymmetricEigen, Vector3};

/// Mean-removed green channel.
pub fn green(c: &TraceMatrix) -> Vec<f64> {
    c.rows[1].clone()
}

/// Chrominance projection on temporally normalized rows:
/// X = 3R - 2G, Y = 1.5R + G - 1.5B, S = X - (sX/sY) Y.
pub fn chrom(c: &TraceMatrix) -> Result<Vec<f64>> {
    let [r, g, b] = c.normalized_rows()?;
    let n = c.len();
    let mut x = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        x.push(3.0 * r[i] - 2.0 * g[i]);
        y.push(1.5 * r[i] + g[i] - 1.5 * b[i]);
    }
    let sx = std_dev(&x);
    let sy = std_dev(&y);
    let alpha = if sy > 0.0 { sx / sy } else { 0.0 };
    Ok((0..n).map(|i| x[i] - alpha * y[i]).collect())
}

/// Plane-orthogonal-to-skin with 1.6 s sliding sub-windows and overlap-add.
pub fn pos(c: &TraceMatrix) -> Result<Vec<f64>> {
    let n = c.len();
    let l = ((1.6 * c.fs).round() as usize).clamp(2, n);
    let mut out = vec![0.0f64; n];
    for end in (l - 1)..n {
        let start = end + 1 - l;
        // Mean-normalize each channel inside the sub-window.
        let mut norm: [Vec<f64>; 3] = Default::default();
        for (k, row) in c.rows.iter().enumerate() {
            let seg = &row[start..=end];
            let m = mean(seg);
            let rms = (seg.iter().map(|v| v * v).sum::<f64>() / seg.len() as f64).sqrt();
            if rms < 1e-300 {
                return Err(Error::DegenerateTrace(format!("channel {k} is identically zero")));
            }
            norm[k] = if m.abs() > 1e-8 * rms {
                seg.iter().map(|v| v / m).collect()
            } else {
                seg.iter().map(|v| v + 1.0).collect()
            };
        }
        let [r, g, b] = norm;
        let mut s1 = Vec::with_capacity(l);
        let mut s2 = Vec::with_capacity(l);
        for i in 0..l {
            s1.push(g[i] - b[i]);
            s2.push(-2.0 * r[i] + g[i] + b[i]);
        }
        let sd1 = std_dev(&s1);
        let sd2 = std_dev(&s2);
        let alpha = if sd2 > 0.0 { sd1 / sd2 } else { 0.0 };
        let mut h: Vec<f64> = (0..l).map(|i| s1[i] + alpha * s2[i]).collect();
        let hm = mean(&h);
        for v in &mut h {
            *v -= hm;
        }
        for (i, v) in h.into_iter().enumerate() {
            out[start + i] += v;
        }
    }
    Ok(out)
}

fn covariance3(rows: &[Vec<f64>; 3]) -> Matrix3<f64> {
    let n = rows[0].len() as f64;
    let mut m = Matrix3::zeros();
    for i in 0..3 {
        for j in i..3 {
            let c: f64 = rows[i].iter().zip(rows[j].iter()).map(|(a, b)| a * b).sum::<f64>() / n;
            m[(i, j)] = c;
            m[(j, i)] = c;
        }
    }
    m
}

fn project(rows: &[Vec<f64>; 3], w: &Vector3<f64>) -> Vec<f64> {
    (0..rows[0].len())
        .map(|i| w[0] * rows[0][i] + w[1] * rows[1][i] + w[2] * rows[2][i])
        .collect()
}

/// Principal component projection; the component with the highest in-band
/// peak concentration wins, sign fixed against the green trace.
pub fn pca(c: &TraceMatrix, opts: &MethodOptions) -> Result<Vec<f64>> {
    let rows = c.mean_removed_rows();
    let eig = SymmetricEigen::new(covariance3(&rows));
    let mut best: Option<(f64, Vec<f64>)> = None;
    for k in 0..3 {
        let w = Vector3::new(eig.eigenvectors[(0, k)], eig.eigenvectors[(1, k)], eig.eigenvectors[(2, k)]);
        let comp = project(&rows, &w);
        let score = super::component_band_score(&comp, c.fs, opts.selection_band);
        if best.as_ref().map_or(true, |(s, _)| score > *s) {
            best = Some((score, comp));
        }
    }
    let (_, mut comp) = best.ok_or_else(|| Error::DegenerateTrace("no principal component".into()))?;
    super::align_sign_with(&mut comp, &c.rows[1]);
    Ok(comp)
}

/// Blood-volume-pulse signature projection: S = pbv^T (Cn Cn^T)^-1 Cn on
/// mean-normalized, mean-removed rows, with a ridge fallback when the
/// 3x3 Gram matrix is near-singular.
pub fn pbv(c: &TraceMatrix, opts: &MethodOptions) -> Result<Vec<f64>> {
    let norm = c.normalized_rows()?;
    let mut rows: [Vec<f64>; 3] = Default::default();
    for (k, row) in norm.iter().enumerate() {
        let m = mean(row);
        rows[k] = row.iter().map(|v| v - m).collect();
    }
    let sig = Vector3::from_column_slice(&opts.pbv_signature).normalize();
    let q = covariance3(&rows) * rows[0].len() as f64;
    let w = match q.try_inverse() {
        Some(inv) => inv * sig,
        None => {
            let ridge = q + Matrix3::identity() * (1e-9 * q.trace());
            ridge
                .try_inverse()
                .ok_or_else(|| Error::DegenerateTrace("gram matrix not invertible".into()))?
                * sig
        }
    };
    Ok(project(&rows, &w))
}

/// Local group invariance: project out the dominant direction of the
/// mean-removed traces, output the second row of the residual.
pub fn lgi(c: &TraceMatrix) -> Result<Vec<f64>> {
    let rows = c.mean_removed_rows();
    let eig = SymmetricEigen::new(covariance3(&rows));
    // Dominant eigenvector.
    let mut k_max = 0;
    for k in 1..3 {
        if eig.eigenvalues[k] > eig.eigenvalues[k_max] {
            k_max = k;
        }
    }
    let s = Vector3::new(
        eig.eigenvectors[(0, k_max)],
        eig.eigenvectors[(1, k_max)],
        eig.eigenvectors[(2, k_max)],
    );
    // Row 1 of (I - s s^T) C.
    let n = c.len();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let dot = s[0] * rows[0][i] + s[1] * rows[1][i] + s[2] * rows[2][i];
        out.push(rows[1][i] - s[1] * dot);
    }
    Ok(out)
}

/// Orthogonal matrix image transformation: Householder QR of the trace
/// matrix, S = Q's first column (sign fixed toward the mean color),
/// P = I - S S^T, output = second row of P C.
pub fn omit(c: &TraceMatrix) -> Vec<f64> {
    let (q, _) = householder_qr_3xn(&c.rows);
    let mut s = q.column(0);
    let mu = [mean(&c.rows[0]), mean(&c.rows[1]), mean(&c.rows[2])];
    let orient = s[0] * mu[0] + s[1] * mu[1] + s[2] * mu[2];
    let orient = if orient.abs() > 1e-12 { orient } else { s[0] + s[1] + s[2] };
    if orient < 0.0 {
        for v in &mut s {
            *v = -*v;
        }
    }
    let n = c.len();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let dot = s[0] * c.rows[0][i] + s[1] * c.rows[1][i] + s[2] * c.rows[2][i];
        out.push(c.rows[1][i] - s[1] * dot);
    }
    out
}

/// CIELab chroma route: the per-frame mean color converted to Lab, output
/// is the mean-removed a-channel series.
pub fn lab(c: &TraceMatrix, opts: &MethodOptions) -> Vec<f64> {
    let n = c.len();
    let scale = opts.white_scale;
    (0..n)
        .map(|i| srgb_to_lab_a(c.rows[0][i] / scale, c.rows[1][i] / scale, c.rows[2][i] / scale))
        .collect()
}
