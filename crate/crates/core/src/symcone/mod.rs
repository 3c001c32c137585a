//! Symmetric matrices and the geometry of the positive semidefinite cone.
//!
//! [`SymMat`] stores the upper triangle of a symmetric `d×d` matrix row by
//! row, so symmetry holds by construction. The inner product is the trace
//! pairing `⟨x, y⟩ = tr(xy)`, and all norms are Frobenius norms.

mod eigen;
mod ops;

use nalgebra::DMatrix;

pub use eigen::EigenDecomp;
pub(crate) use eigen::jacobi_in_place;

use crate::error::{Error, Result};

/// Default relative tolerance for positive semidefiniteness checks.
pub const PSD_TOL: f64 = 1e-10;

/// Dense symmetric matrix, upper triangle stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMat {
    dim: usize,
    upper: Vec<f64>,
}

/// Position of `(i, j)`, `i <= j`, in the packed upper triangle.
#[inline]
pub fn packed_index(d: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    i * d - i * (i + 1) / 2 + j
}

/// Number of free coordinates of a `d×d` symmetric matrix.
#[inline]
pub fn packed_len(d: usize) -> usize {
    d * (d + 1) / 2
}

impl SymMat {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            upper: vec![0.0; packed_len(dim)],
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::scaled_identity(dim, 1.0)
    }

    pub fn scaled_identity(dim: usize, a: f64) -> Self {
        Self::from_fn(dim, |i, j| if i == j { a } else { 0.0 })
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        Self::from_fn(diag.len(), |i, j| if i == j { diag[i] } else { 0.0 })
    }

    /// Builds from the packed upper triangle `[x11, x12, …, x1d, x22, …, xdd]`.
    pub fn from_upper(dim: usize, upper: Vec<f64>) -> Result<Self> {
        if upper.len() != packed_len(dim) {
            return Err(Error::DimensionMismatch {
                expected: packed_len(dim),
                found: upper.len(),
            });
        }
        let m = Self { dim, upper };
        if !m.is_finite() {
            return Err(Error::NonFinite("symmetric matrix entries".into()));
        }
        Ok(m)
    }

    /// Entry `(i, j)` for `i <= j` is `f(i, j)`.
    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut upper = Vec::with_capacity(packed_len(dim));
        for i in 0..dim {
            for j in i..dim {
                upper.push(f(i, j));
            }
        }
        Self { dim, upper }
    }

    /// Symmetric part `(m + mᵀ)/2` of a square matrix.
    pub fn from_mat(m: &DMatrix<f64>) -> Self {
        assert_eq!(m.nrows(), m.ncols(), "square matrix required");
        Self::from_fn(m.nrows(), |i, j| 0.5 * (m[(i, j)] + m[(j, i)]))
    }

    /// Standard basis element `c^{ij}`: ones at `(i, j)` and `(j, i)`.
    pub fn basis(dim: usize, i: usize, j: usize) -> Self {
        let mut m = Self::zeros(dim);
        m.set(i, j, 1.0);
        m
    }

    /// Rank-one Gram matrix `v vᵀ`.
    pub fn outer(v: &[f64]) -> Self {
        Self::from_fn(v.len(), |i, j| v[i] * v[j])
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    #[inline]
    pub fn upper_mut(&mut self) -> &mut [f64] {
        &mut self.upper
    }

    pub fn into_upper(self) -> Vec<f64> {
        self.upper
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.upper[packed_index(self.dim, i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let k = packed_index(self.dim, i, j);
        self.upper[k] = v;
    }

    pub fn to_mat(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.dim, self.dim, |i, j| self.get(i, j))
    }

    /// Writes the full row-major matrix into `out` (length `d²`).
    pub fn write_full(&self, out: &mut [f64]) {
        let d = self.dim;
        let mut k = 0;
        for i in 0..d {
            for j in i..d {
                out[i * d + j] = self.upper[k];
                out[j * d + i] = self.upper[k];
                k += 1;
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        self.upper.iter().all(|v| v.is_finite())
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    /// `tr(self · other)`. Panics on dimension mismatch; see [`inner`].
    pub fn dot(&self, other: &SymMat) -> f64 {
        assert_eq!(self.dim, other.dim, "dimension mismatch in inner product");
        packed_dot(self.dim, &self.upper, &other.upper)
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn max_abs_diff(&self, other: &SymMat) -> f64 {
        self.upper
            .iter()
            .zip(&other.upper)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn is_diagonal(&self) -> bool {
        (0..self.dim).all(|i| ((i + 1)..self.dim).all(|j| self.get(i, j) == 0.0))
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    pub fn eigen(&self) -> EigenDecomp {
        EigenDecomp::new(self)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        if self.dim == 0 {
            return 0.0;
        }
        self.eigen().min()
    }

    /// `g · self · gᵀ` for a square `g`.
    pub fn congruence(&self, g: &DMatrix<f64>) -> SymMat {
        SymMat::from_mat(&(g * self.to_mat() * g.transpose()))
    }

    /// `self · mid · self`.
    pub fn sandwich(&self, mid: &SymMat) -> SymMat {
        let s = self.to_mat();
        SymMat::from_mat(&(&s * mid.to_mat() * &s))
    }

    /// Removes row and column `i`.
    pub fn delete_index(&self, i: usize) -> SymMat {
        let keep: Vec<usize> = (0..self.dim).filter(|&k| k != i).collect();
        SymMat::from_fn(keep.len(), |a, b| self.get(keep[a], keep[b]))
    }

    /// Principal submatrix on the given indices.
    pub fn principal(&self, idx: &[usize]) -> SymMat {
        SymMat::from_fn(idx.len(), |a, b| self.get(idx[a], idx[b]))
    }
}

/// Trace pairing of two packed triangles of dimension `d`.
#[inline]
pub(crate) fn packed_dot(d: usize, x: &[f64], y: &[f64]) -> f64 {
    let mut s = 0.0;
    let mut k = 0;
    for i in 0..d {
        s += x[k] * y[k];
        k += 1;
        for _ in (i + 1)..d {
            s += 2.0 * x[k] * y[k];
            k += 1;
        }
    }
    s
}

fn check_dims(x: &SymMat, y: &SymMat) -> Result<()> {
    if x.dim() != y.dim() {
        return Err(Error::DimensionMismatch {
            expected: x.dim(),
            found: y.dim(),
        });
    }
    Ok(())
}

/// `⟨x, y⟩ = tr(xy)`.
pub fn inner(x: &SymMat, y: &SymMat) -> Result<f64> {
    check_dims(x, y)?;
    Ok(x.dot(y))
}

/// `λ_min(x) ≥ −tol·(1 + ‖x‖_F)`, with `tol` floored at the round-off level
/// `8 d ε` of the eigensolver.
pub fn is_psd(x: &SymMat, tol: f64) -> bool {
    let floor = 8.0 * x.dim() as f64 * f64::EPSILON;
    x.dim() == 0 || x.min_eigenvalue() >= -tol.max(floor) * (1.0 + x.norm())
}

/// `x ⪯ y` within tolerance.
pub fn preceq(x: &SymMat, y: &SymMat, tol: f64) -> Result<bool> {
    check_dims(x, y)?;
    Ok(is_psd(&(y - x), tol))
}

/// Principal square root `O diag(√max(λ,0)) Oᵀ`.
pub fn sqrt_psd(x: &SymMat) -> Result<SymMat> {
    let e = x.eigen();
    if e.min() < -PSD_TOL * (1.0 + x.norm()) {
        return Err(Error::NotPsd {
            what: "sqrt_psd argument".into(),
            min_eigenvalue: e.min(),
        });
    }
    Ok(e.reconstruct(|l| l.max(0.0).sqrt()))
}

/// Nearest PSD matrix in Frobenius norm (eigenvalue clamp).
pub fn project_psd(x: &SymMat) -> SymMat {
    let e = x.eigen();
    if e.min() >= 0.0 {
        return x.clone();
    }
    e.reconstruct(|l| l.max(0.0))
}

/// Generators of the normal cone `{u ⪰ 0 : ⟨u, x⟩ = 0}` at `x`.
///
/// The numerical null space collects eigenvectors with
/// `λ ≤ rank_tol · λ_max`; the generators are `O e^{ab} Oᵀ` over that block,
/// i.e. `vₐvₐᵀ` and `(vₐ + v_b)(vₐ + v_b)ᵀ`. Empty when `x` is positive definite.
pub fn normal_cone_basis(x: &SymMat, rank_tol: f64) -> Vec<SymMat> {
    let e = x.eigen();
    let cut = rank_tol * e.max().max(0.0);
    let null: Vec<Vec<f64>> = (0..x.dim())
        .filter(|&k| e.eigenvalues[k] <= cut)
        .map(|k| e.vector(k))
        .collect();
    let mut out = Vec::new();
    for a in 0..null.len() {
        out.push(SymMat::outer(&null[a]));
        for b in (a + 1)..null.len() {
            let v: Vec<f64> = null[a].iter().zip(&null[b]).map(|(p, q)| p + q).collect();
            out.push(SymMat::outer(&v));
        }
    }
    out
}

/// Gradient of `det` at `y` in the unrestricted-entry convention.
///
/// Equals the adjugate. For diagonal `y` this is `diag(∏_{k≠i} y_kk)`;
/// otherwise `O diag(∏_{k≠i} λ_k) Oᵀ`.
pub fn det_gradient(y: &SymMat) -> SymMat {
    let d = y.dim();
    if y.is_diagonal() {
        let diag = y.diag();
        return SymMat::from_diag(
            &(0..d)
                .map(|i| (0..d).filter(|&k| k != i).map(|k| diag[k]).product())
                .collect::<Vec<f64>>(),
        );
    }
    let e = y.eigen();
    let cof: Vec<f64> = (0..d)
        .map(|i| (0..d).filter(|&k| k != i).map(|k| e.eigenvalues[k]).product())
        .collect();
    SymMat::from_fn(d, |i, j| {
        (0..d)
            .map(|k| e.rotation[(i, k)] * cof[k] * e.rotation[(j, k)])
            .sum()
    })
}

/// `∂²det(x)/∂x_ij ∂x_ji` at `y` (0-based indices).
///
/// Zero for `i == j`. For `i ≠ j` it is minus the principal minor with rows and
/// columns `i, j` removed, which reduces to `−∏_{k≠i,j} y_kk` at diagonal `y`.
pub fn det_second_pair(y: &SymMat, i: usize, j: usize) -> f64 {
    let d = y.dim();
    assert!(i < d && j < d, "index out of range");
    if i == j {
        return 0.0;
    }
    let keep: Vec<usize> = (0..d).filter(|&k| k != i && k != j).collect();
    if y.is_diagonal() {
        return -keep.iter().map(|&k| y.get(k, k)).product::<f64>();
    }
    if keep.is_empty() {
        return -1.0;
    }
    -y.principal(&keep).to_mat().determinant()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn packed_layout() {
        let x = SymMat::from_upper(3, vec![1., 2., 3., 4., 5., 6.]).unwrap();
        assert_eq!(x.get(0, 2), 3.0);
        assert_eq!(x.get(2, 0), 3.0);
        assert_eq!(x.get(1, 1), 4.0);
        assert_eq!(x.get(1, 2), 5.0);
        assert_eq!(x.get(2, 2), 6.0);
        for d in 1..6 {
            let mut k = 0;
            for i in 0..d {
                for j in i..d {
                    assert_eq!(packed_index(d, i, j), k);
                    k += 1;
                }
            }
        }
    }

    #[test]
    fn inner_examples() {
        let i2 = SymMat::identity(2);
        assert_eq!(inner(&i2, &i2).unwrap(), 2.0);
        let c12 = SymMat::basis(2, 0, 1);
        assert_eq!(inner(&c12, &c12).unwrap(), 2.0);
        assert!(matches!(
            inner(&i2, &SymMat::identity(3)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn rejects_bad_packed_input() {
        assert!(SymMat::from_upper(2, vec![1.0, 2.0]).is_err());
        assert!(SymMat::from_upper(1, vec![f64::NAN]).is_err());
    }

    #[test]
    fn psd_examples() {
        assert!(is_psd(&SymMat::identity(3), 0.0));
        assert!(!is_psd(&SymMat::from_diag(&[1.0, -1.0]), 1e-10));
        assert!(!is_psd(&SymMat::from_diag(&[1.0, -1e-12]), 0.0));
        assert!(is_psd(&SymMat::outer(&[0.3, -1.7, 2.2]), 0.0));
    }

    #[test]
    fn sqrt_examples() {
        assert_eq!(sqrt_psd(&SymMat::identity(3)).unwrap(), SymMat::identity(3));
        let r = sqrt_psd(&SymMat::from_diag(&[4.0, 9.0])).unwrap();
        assert!(r.max_abs_diff(&SymMat::from_diag(&[2.0, 3.0])) < 1e-15);
        assert!(sqrt_psd(&SymMat::from_diag(&[1.0, -0.5])).is_err());
    }

    #[test]
    fn projection_examples() {
        let p = project_psd(&SymMat::from_diag(&[1.0, -2.0]));
        assert!(p.max_abs_diff(&SymMat::from_diag(&[1.0, 0.0])) < 1e-15);
        let q = SymMat::from_upper(2, vec![2.0, 1.0, 1.0]).unwrap();
        assert_eq!(project_psd(&q), q);
    }

    #[test]
    fn normal_cone_examples() {
        assert!(normal_cone_basis(&SymMat::identity(2), 1e-10).is_empty());
        let g = normal_cone_basis(&SymMat::from_diag(&[1.0, 0.0]), 1e-10);
        assert_eq!(g, vec![SymMat::from_diag(&[0.0, 1.0])]);
        assert_eq!(normal_cone_basis(&SymMat::zeros(2), 1e-10).len(), 3);
    }

    #[test]
    fn det_derivative_examples() {
        let g = det_gradient(&SymMat::from_diag(&[2.0, 3.0]));
        assert_eq!(g, SymMat::from_diag(&[3.0, 2.0]));
        assert_eq!(det_second_pair(&SymMat::from_diag(&[2.0, 3.0, 5.0]), 0, 1), -5.0);
        assert_eq!(det_second_pair(&SymMat::from_diag(&[2.0, 3.0]), 0, 1), -1.0);
        assert_eq!(det_second_pair(&SymMat::from_diag(&[2.0, 3.0]), 1, 1), 0.0);
    }

    #[test]
    fn det_gradient_general_is_adjugate() {
        let y = SymMat::from_upper(2, vec![2.0, 1.0, 3.0]).unwrap();
        // adj [[2,1],[1,3]] = [[3,-1],[-1,2]]
        let g = det_gradient(&y);
        let want = SymMat::from_upper(2, vec![3.0, -1.0, 2.0]).unwrap();
        assert!(g.max_abs_diff(&want) < 1e-13);
    }

    #[test]
    fn delete_index_drops_row_and_column() {
        let x = SymMat::from_upper(3, vec![1., 2., 3., 4., 5., 6.]).unwrap();
        assert_eq!(x.delete_index(1), SymMat::from_upper(2, vec![1., 3., 6.]).unwrap());
    }
}
