//! Symmetric fixed-point ICA (tanh contrast) on whitened trace rows.

use super::{MethodOptions, TraceMatrix};
use crate::error::{Error, Result};
use nalgebra::{Matrix3, SymmetricEigen, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const MAX_ITERS: usize = 500;
const TOL: f64 = 1e-12;

/// Recovers the pulse component by blind source separation: whiten the
/// mean-removed rows, run symmetric FastICA with a seeded start, pick the
/// component with the highest in-band concentration, fix its sign against
/// the green trace.
pub fn ica(c: &TraceMatrix, opts: &MethodOptions) -> Result<Vec<f64>> {
    let rows = c.mean_removed_rows();
    let n = c.len();
    let cov = {
        let mut m = Matrix3::zeros();
        for i in 0..3 {
            for j in i..3 {
                let v: f64 = rows[i].iter().zip(rows[j].iter()).map(|(a, b)| a * b).sum::<f64>() / n as f64;
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        m
    };
    let eig = SymmetricEigen::new(cov);
    let lmax = eig.eigenvalues.iter().cloned().fold(f64::MIN, f64::max);
    if !(lmax > 0.0) || eig.eigenvalues.iter().any(|&l| l <= 1e-12 * lmax) {
        return Err(Error::DegenerateTrace("trace covariance is rank deficient; whitening impossible".into()));
    }
    // Whitening matrix D^-1/2 E^T.
    let mut wh = Matrix3::zeros();
    for k in 0..3 {
        let s = 1.0 / eig.eigenvalues[k].sqrt();
        for j in 0..3 {
            wh[(k, j)] = s * eig.eigenvectors[(j, k)];
        }
    }
    // Whitened data Z = Wh * rows (3 x N).
    let z: [Vec<f64>; 3] = std::array::from_fn(|k| {
        (0..n)
            .map(|i| wh[(k, 0)] * rows[0][i] + wh[(k, 1)] * rows[1][i] + wh[(k, 2)] * rows[2][i])
            .collect()
    });

    // Seeded random orthogonal start.
    let mut rng = ChaCha8Rng::seed_from_u64(opts.ica_seed);
    let mut b = Matrix3::from_fn(|_, _| rng.gen::<f64>() * 2.0 - 1.0);
    b = symmetric_decorrelate(&b)?;

    for _ in 0..MAX_ITERS {
        let mut b_new = Matrix3::zeros();
        for r in 0..3 {
            let w = Vector3::new(b[(r, 0)], b[(r, 1)], b[(r, 2)]);
            // E[z g(w^T z)] - E[g'(w^T z)] w, g = tanh.
            let mut ezg = Vector3::zeros();
            let mut eg_prime = 0.0;
            for i in 0..n {
                let u = w[0] * z[0][i] + w[1] * z[1][i] + w[2] * z[2][i];
                let t = u.tanh();
                ezg[0] += z[0][i] * t;
                ezg[1] += z[1][i] * t;
                ezg[2] += z[2][i] * t;
                eg_prime += 1.0 - t * t;
            }
            let inv_n = 1.0 / n as f64;
            let next = ezg * inv_n - w * (eg_prime * inv_n);
            for j in 0..3 {
                b_new[(r, j)] = next[j];
            }
        }
        let b_next = symmetric_decorrelate(&b_new)?;
        // Convergence: rows aligned with previous iteration up to sign.
        let mut delta = 0.0f64;
        for r in 0..3 {
            let dot: f64 = (0..3).map(|j| b_next[(r, j)] * b[(r, j)]).sum();
            delta = delta.max((1.0 - dot.abs()).abs());
        }
        b = b_next;
        if delta < TOL {
            break;
        }
    }

    // Components S = B Z; pick by in-band concentration.
    let mut best: Option<(f64, Vec<f64>)> = None;
    for r in 0..3 {
        let comp: Vec<f64> =
            (0..n).map(|i| b[(r, 0)] * z[0][i] + b[(r, 1)] * z[1][i] + b[(r, 2)] * z[2][i]).collect();
        let score = super::component_band_score(&comp, c.fs, opts.selection_band);
        if best.as_ref().map_or(true, |(s, _)| score > *s) {
            best = Some((score, comp));
        }
    }
    let (_, mut comp) = best.ok_or_else(|| Error::DegenerateTrace("no independent component".into()))?;
    super::align_sign_with(&mut comp, &c.rows[1]);
    Ok(comp)
}

/// B <- (B B^T)^-1/2 B.
fn symmetric_decorrelate(b: &Matrix3<f64>) -> Result<Matrix3<f64>> {
    let bbt = b * b.transpose();
    let eig = SymmetricEigen::new(bbt);
    if eig.eigenvalues.iter().any(|&l| l <= 1e-300) {
        return Err(Error::DegenerateTrace("ica basis collapsed during decorrelation".into()));
    }
    let mut inv_sqrt = Matrix3::zeros();
    for k in 0..3 {
        let s = 1.0 / eig.eigenvalues[k].sqrt();
        for i in 0..3 {
            for j in 0..3 {
                inv_sqrt[(i, j)] += s * eig.eigenvectors[(i, k)] * eig.eigenvectors[(j, k)];
            }
        }
    }
    Ok(inv_sqrt * b)
}
