//! Cyclic Jacobi eigen-decomposition for dense symmetric matrices.

use nalgebra::DMatrix;

use super::SymMat;

const MAX_SWEEPS: usize = 100;
/// Sweeps stop once off(A) <= CONVERGENCE * ||A||_F.
const CONVERGENCE: f64 = 1e-14;
/// Components below this magnitude are skipped by the sign convention.
const SIGN_EPS: f64 = 1e-12;

/// x = O diag(λ) Oᵀ with λ₁ ≥ … ≥ λ_d.
///
/// Each eigenvector is normalised so its first component with magnitude above
/// `1e-12` is positive, which makes decompositions reproducible across calls.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenDecomp {
    pub rotation: DMatrix<f64>,
    pub eigenvalues: Vec<f64>,
}

impl EigenDecomp {
    pub fn new(x: &SymMat) -> Self {
        let d = x.dim();
        let mut a = vec![0.0; d * d];
        let mut v = vec![0.0; d * d];
        let mut w = vec![0.0; d];
        x.write_full(&mut a);
        jacobi_in_place(&mut a, &mut v, &mut w, d);
        Self {
            rotation: DMatrix::from_row_slice(d, d, &v),
            eigenvalues: w,
        }
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn min(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(0.0)
    }

    pub fn max(&self) -> f64 {
        self.eigenvalues.first().copied().unwrap_or(0.0)
    }

    /// O diag(f(λᵢ)) Oᵀ.
    pub fn reconstruct(&self, f: impl Fn(f64) -> f64) -> SymMat {
        let d = self.dim();
        let fl: Vec<f64> = self.eigenvalues.iter().map(|&l| f(l)).collect();
        SymMat::from_fn(d, |i, j| {
            (0..d)
                .map(|k| self.rotation[(i, k)] * fl[k] * self.rotation[(j, k)])
                .sum()
        })
    }

    /// Column `k` of the rotation.
    pub fn vector(&self, k: usize) -> Vec<f64> {
        self.rotation.column(k).iter().copied().collect()
    }
}

/// Diagonalises the row-major symmetric `a` (destroyed) in place.
///
/// On return `v` holds the eigenvectors as columns (row-major) and `w` the
/// eigenvalues in descending order. Returns the number of sweeps used.
pub(crate) fn jacobi_in_place(a: &mut [f64], v: &mut [f64], w: &mut [f64], n: usize) -> usize {
    debug_assert!(a.len() == n * n && v.len() == n * n && w.len() == n);
    v.iter_mut().for_each(|e| *e = 0.0);
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let norm = a.iter().map(|e| e * e).sum::<f64>().sqrt();
    let threshold = CONVERGENCE * norm;
    let mut sweeps = 0;
    while sweeps < MAX_SWEEPS {
        let off = off_diagonal_norm(a, n);
        if off <= threshold || off == 0.0 {
            break;
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                rotate(a, v, n, p, q, c, s);
            }
        }
    }
    for i in 0..n {
        w[i] = a[i * n + i];
    }
    sort_descending(v, w, n);
    sweeps
}

#[inline]
fn rotate(a: &mut [f64], v: &mut [f64], n: usize, p: usize, q: usize, c: f64, s: f64) {
    for k in 0..n {
        let akp = a[k * n + p];
        let akq = a[k * n + q];
        a[k * n + p] = c * akp - s * akq;
        a[k * n + q] = s * akp + c * akq;
    }
    for k in 0..n {
        let apk = a[p * n + k];
        let aqk = a[q * n + k];
        a[p * n + k] = c * apk - s * aqk;
        a[q * n + k] = s * apk + c * aqk;
    }
    a[p * n + q] = 0.0;
    a[q * n + p] = 0.0;
    for k in 0..n {
        let vkp = v[k * n + p];
        let vkq = v[k * n + q];
        v[k * n + p] = c * vkp - s * vkq;
        v[k * n + q] = s * vkp + c * vkq;
    }
}

fn off_diagonal_norm(a: &[f64], n: usize) -> f64 {
    let mut s = 0.0;
    for p in 0..n {
        for q in 0..n {
            if p != q {
                s += a[p * n + q] * a[p * n + q];
            }
        }
    }
    s.sqrt()
}

fn sort_descending(v: &mut [f64], w: &mut [f64], n: usize) {
    for i in 0..n {
        let mut best = i;
        for j in (i + 1)..n {
            if w[j] > w[best] {
                best = j;
            }
        }
        if best != i {
            w.swap(i, best);
            for k in 0..n {
                v.swap(k * n + i, k * n + best);
            }
        }
        let lead = (0..n).map(|k| v[k * n + i]).find(|c| c.abs() > SIGN_EPS);
        if matches!(lead, Some(c) if c < 0.0) {
            for k in 0..n {
                v[k * n + i] = -v[k * n + i];
            }
        }
    }
}
