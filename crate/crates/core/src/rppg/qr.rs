//! Householder QR factorization of a 3 x N trace matrix.

/// QR of A (3 rows, n columns): A = Q * R with Q orthonormal 3x3 and R
/// upper-trapezoidal 3xN. Built from two Householder reflections.
pub fn householder_qr_3xn(rows: &[Vec<f64>; 3]) -> (Q3, Vec<[f64; 3]>) {
    let n = rows[0].len();
    // Column-major working copy: r[c][i] = A[i][c].
    let mut r: Vec<[f64; 3]> = (0..n).map(|c| [rows[0][c], rows[1][c], rows[2][c]]).collect();
    let mut q = Q3::identity();

    for k in 0..2usize.min(n) {
        // Householder vector for column k, rows k..3.
        let mut x = [0.0f64; 3];
        for i in k..3 {
            x[i] = r[k][i];
        }
        let norm = (k..3).map(|i| x[i] * x[i]).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let alpha = if x[k] >= 0.0 { -norm } else { norm };
        let mut v = [0.0f64; 3];
        for i in k..3 {
            v[i] = x[i];
        }
        v[k] -= alpha;
        let vnorm2: f64 = (k..3).map(|i| v[i] * v[i]).sum();
        if vnorm2 < 1e-300 {
            continue;
        }
        // Apply H = I - 2 v v^T / (v^T v) to every column of R.
        for col in r.iter_mut() {
            let dot: f64 = (k..3).map(|i| v[i] * col[i]).sum();
            let s = 2.0 * dot / vnorm2;
            for i in k..3 {
                col[i] -= s * v[i];
            }
        }
        // Accumulate Q = Q * H (H symmetric).
        for row in q.m.iter_mut() {
            let dot: f64 = (k..3).map(|i| v[i] * row[i]).sum();
            let s = 2.0 * dot / vnorm2;
            for i in k..3 {
                row[i] -= s * v[i];
            }
        }
    }
    (q, r)
}

/// A 3x3 orthonormal matrix, row-major.
#[derive(Debug, Clone, Copy)]
pub struct Q3 {
    pub m: [[f64; 3]; 3],
}

impl Q3 {
    pub fn identity() -> Self {
        Self { m: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]] }
    }

    pub fn column(&self, c: usize) -> [f64; 3] {
        [self.m[0][c], self.m[1][c], self.m[2][c]]
    }

    /// max |Q^T Q - I| entry.
    pub fn orthonormality_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..3 {
            for j in 0..3 {
                let dot: f64 = (0..3).map(|k| self.m[k][i] * self.m[k][j]).sum();
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot - target).abs());
            }
        }
        worst
    }
}
