//! Small dense symmetric helpers (dimension <= a few dozen).

use alloc::vec;
use alloc::vec::Vec;

use crate::math::{abs, sqrt};

/// Row-major square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Square {
    pub n: usize,
    pub data: Vec<f64>,
}

impl Square {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![0.0; n * n] }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    pub fn symmetrize(&mut self) {
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                let v = 0.5 * (self.get(i, j) + self.get(j, i));
                self.set(i, j, v);
                self.set(j, i, v);
            }
        }
    }
}

/// Solves `(A + shift I) x = b` by Cholesky. `None` if not positive definite.
pub fn cholesky_solve(a: &Square, shift: f64, b: &[f64]) -> Option<Vec<f64>> {
    let n = a.n;
    let mut l = Square::zeros(n);
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a.get(i, j) + if i == j { shift } else { 0.0 };
            for k in 0..j {
                sum -= l.get(i, k) * l.get(j, k);
            }
            if i == j {
                if !(sum > 0.0) {
                    return None;
                }
                l.set(i, i, sqrt(sum));
            } else {
                l.set(i, j, sum / l.get(j, j));
            }
        }
    }
    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut sum = b[i];
        for k in 0..i {
            sum -= l.get(i, k) * y[k];
        }
        y[i] = sum / l.get(i, i);
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut sum = y[i];
        for k in (i + 1)..n {
            sum -= l.get(k, i) * x[k];
        }
        x[i] = sum / l.get(i, i);
    }
    Some(x)
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
pub fn symmetric_eigenvalues(a: &Square) -> Vec<f64> {
    let n = a.n;
    let mut m = a.clone();
    m.symmetrize();
    for _sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += m.get(i, j) * m.get(i, j);
            }
        }
        let scale: f64 = m.data.iter().map(|v| v * v).sum();
        if off <= 1e-30 * scale || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m.get(p, q);
                if apq == 0.0 {
                    continue;
                }
                let theta = (m.get(q, q) - m.get(p, p)) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + sqrt(1.0 + theta * theta))
                } else {
                    -1.0 / (-theta + sqrt(1.0 + theta * theta))
                };
                let c = 1.0 / sqrt(1.0 + t * t);
                let s = t * c;
                for k in 0..n {
                    let akp = m.get(k, p);
                    let akq = m.get(k, q);
                    m.set(k, p, c * akp - s * akq);
                    m.set(k, q, s * akp + c * akq);
                }
                for k in 0..n {
                    let apk = m.get(p, k);
                    let aqk = m.get(q, k);
                    m.set(p, k, c * apk - s * aqk);
                    m.set(q, k, s * apk + c * aqk);
                }
            }
        }
    }
    let mut eig: Vec<f64> = (0..n).map(|i| m.get(i, i)).collect();
    eig.sort_by(|a, b| a.total_cmp(b));
    eig
}

/// Eigenvalues and eigenvectors of a symmetric tridiagonal matrix (implicit QL).
/// Returns `(values, vectors)` with `vectors[k]` the k-th eigenvector, unsorted.
pub fn tridiagonal_eigen(diag: &[f64], off: &[f64]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = diag.len();
    let mut d = diag.to_vec();
    let mut e = vec![0.0; n];
    e[..n.saturating_sub(1)].copy_from_slice(&off[..n.saturating_sub(1)]);
    let mut z: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut row = vec![0.0; n];
            row[i] = 1.0;
            row
        })
        .collect();
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = abs(d[m]) + abs(d[m + 1]);
                if abs(e[m]) <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                break;
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = crate::math::hypot(g, 1.0);
            g = d[m] - d[l] + e[l] / (g + crate::math::copysign(r, g));
            let mut s = 1.0;
            let mut c = 1.0;
            let mut p = 0.0;
            let mut i = m;
            let mut underflow = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = crate::math::hypot(f, g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                // columns of z are eigenvectors; store transposed rows
                for row in z.iter_mut() {
                    let fz = row[i + 1];
                    row[i + 1] = s * row[i] + c * fz;
                    row[i] = c * row[i] - s * fz;
                }
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    let vectors = (0..n).map(|k| (0..n).map(|i| z[i][k]).collect()).collect();
    (d, vectors)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cholesky_solves_spd_system() {
        let mut a = Square::zeros(3);
        a.data = vec![4.0, 1.0, 0.5, 1.0, 3.0, 0.2, 0.5, 0.2, 2.0];
        let b = [1.0, 2.0, 3.0];
        let x = cholesky_solve(&a, 0.0, &b).unwrap();
        for i in 0..3 {
            let row: f64 = (0..3).map(|j| a.get(i, j) * x[j]).sum();
            assert!((row - b[i]).abs() < 1e-14);
        }
        let mut indefinite = Square::zeros(2);
        indefinite.data = vec![1.0, 2.0, 2.0, 1.0];
        assert!(cholesky_solve(&indefinite, 0.0, &[1.0, 1.0]).is_none());
        assert!(cholesky_solve(&indefinite, 1.5, &[1.0, 1.0]).is_some());
    }

    #[test]
    fn jacobi_eigenvalues() {
        let mut a = Square::zeros(2);
        a.data = vec![1.0, 2.0, 2.0, 1.0];
        let eig = symmetric_eigenvalues(&a);
        assert!((eig[0] + 1.0).abs() < 1e-14 && (eig[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn tridiagonal_matches_closed_form() {
        // discrete Laplacian: eigenvalues 2 - 2 cos(k pi / (n + 1))
        let n = 12;
        let diag = vec![2.0; n];
        let off = vec![-1.0; n - 1];
        let (mut values, vectors) = tridiagonal_eigen(&diag, &off);
        for (k, v) in vectors.iter().enumerate() {
            // T v = lambda v
            for i in 0..n {
                let mut tv = diag[i] * v[i];
                if i > 0 {
                    tv += off[i - 1] * v[i - 1];
                }
                if i + 1 < n {
                    tv += off[i] * v[i + 1];
                }
                assert!((tv - values[k] * v[i]).abs() < 1e-12);
            }
        }
        values.sort_by(|a, b| a.total_cmp(b));
        for (k, value) in values.iter().enumerate() {
            let expected = 2.0 - 2.0 * (((k + 1) as f64) * core::f64::consts::PI / (n as f64 + 1.0)).cos();
            assert!((value - expected).abs() < 1e-12);
        }
    }
}
