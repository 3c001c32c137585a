use nalgebra::DMatrix;

use super::{transform, AffineParams};
use crate::error::{Error, Result};
use crate::symcone::SymMat;

fn block(m: &DMatrix<f64>, rows: std::ops::Range<usize>, cols: std::ops::Range<usize>) -> DMatrix<f64> {
    m.view((rows.start, cols.start), (rows.len(), cols.len())).into_owned()
}

/// Moore–Penrose inverse of a symmetric matrix, cutting eigenvalues at `tol`.
fn sym_pinv(m: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    let e = SymMat::from_mat(m).eigen();
    let cut = tol * (1.0 + e.max().abs());
    e.reconstruct(|l| if l > cut { 1.0 / l } else { 0.0 }).to_mat()
}

/// Rotation `P` with `P s Pᵀ` diagonal, eigenvalues descending.
fn diagonalising_rotation(s: &DMatrix<f64>) -> DMatrix<f64> {
    SymMat::from_mat(s).eigen().rotation.transpose()
}

/// Finds `g` with `g α gᵀ = I_r^d` and `g b gᵀ` diagonal, and returns
/// `(transform(p, g), g)`.
///
/// The rank `r` counts eigenvalues of `α` above `rank_tol · (1 + ‖α‖)`.
/// An eigenvalue within a factor 10 of that threshold is ambiguous and
/// rejected.
pub fn canonicalize(p: &AffineParams, rank_tol: f64) -> Result<(AffineParams, DMatrix<f64>)> {
    p.check_structure()?;
    if !(rank_tol > 0.0) {
        return Err(Error::InvalidArgument("rank_tol must be positive".into()));
    }
    let d = p.dim;
    let eig = p.alpha.eigen();
    let threshold = rank_tol * (1.0 + p.alpha.norm());
    if let Some(&l) = eig
        .eigenvalues
        .iter()
        .find(|&&l| l > threshold / 10.0 && l < threshold * 10.0)
    {
        return Err(Error::RankAmbiguous {
            what: "alpha".into(),
            tol: rank_tol,
            eigenvalue: l,
        });
    }
    let r = eig.eigenvalues.iter().filter(|&&l| l > threshold).count();

    let mut scale = DMatrix::identity(d, d);
    for k in 0..r {
        scale[(k, k)] = 1.0 / eig.eigenvalues[k].sqrt();
    }
    let g1 = scale * eig.rotation.transpose();
    let b1 = p.b.congruence(&g1).to_mat();

    let mut ga = DMatrix::identity(d, d);
    if r > 0 && r < d {
        let k = -block(&b1, 0..r, r..d) * sym_pinv(&block(&b1, r..d, r..d), rank_tol);
        ga.view_mut((0, r), (r, d - r)).copy_from(&k);
    }
    let b2 = &ga * &b1 * ga.transpose();

    let mut gb = DMatrix::zeros(d, d);
    if r > 0 {
        gb.view_mut((0, 0), (r, r))
            .copy_from(&diagonalising_rotation(&block(&b2, 0..r, 0..r)));
    }
    if r < d {
        gb.view_mut((r, r), (d - r, d - r))
            .copy_from(&diagonalising_rotation(&block(&b2, r..d, r..d)));
    }
    let g = gb * ga * g1;
    Ok((transform(p, &g)?, g))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::LinearDrift;

    fn params(alpha: &[f64], b: &[f64]) -> AffineParams {
        AffineParams::jump_free(SymMat::from_diag(alpha), SymMat::from_diag(b), LinearDrift::zero(alpha.len())).unwrap()
    }

    #[test]
    fn already_canonical_up_to_order() {
        let (q, g) = canonicalize(&params(&[1.0, 1.0], &[3.0, 5.0]), 1e-10).unwrap();
        assert!(q.alpha.max_abs_diff(&SymMat::identity(2)) < 1e-14);
        assert!(q.b.max_abs_diff(&SymMat::from_diag(&[5.0, 3.0])) < 1e-14);
        let abs: Vec<f64> = g.iter().map(|v| v.abs()).collect();
        assert_eq!(abs, vec![0.0, 1.0, 1.0, 0.0]);
    }

    #[test]
    fn degenerate_diffusion() {
        let (q, g) = canonicalize(&params(&[4.0, 0.0], &[1.0, 1.0]), 1e-10).unwrap();
        assert!((g - DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, 1.0])).abs().max() < 1e-15);
        assert!(q.alpha.max_abs_diff(&SymMat::from_diag(&[1.0, 0.0])) < 1e-15);
        assert!(q.b.max_abs_diff(&SymMat::from_diag(&[0.25, 1.0])) < 1e-15);
    }

    #[test]
    fn coupled_degenerate_block() {
        // α = v vᵀ, b couples range and null space.
        let alpha = SymMat::from_upper(3, vec![1.0, 1.0, 0.0, 1.0, 0.0, 0.0]).unwrap();
        let b = SymMat::from_upper(3, vec![3.0, 1.0, 0.5, 4.0, 0.2, 2.0]).unwrap();
        let p = AffineParams::jump_free(alpha, b, LinearDrift::zero(3)).unwrap();
        let (q, _) = canonicalize(&p, 1e-10).unwrap();
        assert!(q.alpha.max_abs_diff(&SymMat::from_diag(&[1.0, 0.0, 0.0])) < 1e-12);
        assert!(q.b.is_finite());
        let off: f64 = (0..3)
            .flat_map(|i| (i + 1..3).map(move |j| (i, j)))
            .map(|(i, j)| q.b.get(i, j).abs())
            .fold(0.0, f64::max);
        assert!(off < 1e-12, "{off}");
    }

    #[test]
    fn ambiguous_rank_rejected() {
        let p = params(&[1.0, 3e-10], &[1.0, 1.0]);
        assert!(matches!(canonicalize(&p, 1e-10), Err(Error::RankAmbiguous { .. })));
    }
}
