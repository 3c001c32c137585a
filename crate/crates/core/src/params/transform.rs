use nalgebra::DMatrix;

use super::{AffineParams, LinearDrift};
use crate::error::{Error, Result};
use crate::jumps::{chi, kernel_normaliser, MatrixAtom, MatrixAtomMeasure, ScalarAtom, ScalarAtomMeasure};

/// Parameters of `Y = g X gᵀ` when `X` has parameters `p`.
///
/// Jump atoms move to `g ξ gᵀ`. Matrix-atom weights are conjugated and
/// rescaled so the jump intensities are unchanged, and the linear drift
/// absorbs the difference between `g χ(ξ) gᵀ` and `χ(g ξ gᵀ)` so the result
/// uses the standard truncation.
pub fn transform(p: &AffineParams, g: &DMatrix<f64>) -> Result<AffineParams> {
    p.check_structure()?;
    let d = p.dim;
    if g.nrows() != d || g.ncols() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: g.nrows(),
        });
    }
    if g.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("transformation matrix".into()));
    }
    let det = g.determinant();
    if det.abs() <= 1e-12 {
        return Err(Error::Singular { det });
    }
    let g_inv = g.clone().try_inverse().ok_or(Error::Singular { det })?;
    let g_t = g.transpose();
    let g_inv_t = g_inv.transpose();

    let m = ScalarAtomMeasure::new(
        d,
        p.m.atoms()
            .iter()
            .map(|a| ScalarAtom {
                xi: a.xi.congruence(g),
                weight: a.weight,
            })
            .collect(),
    )?;

    // (image atom, shifted truncation Δ, n')
    let mut shifts = Vec::with_capacity(p.mu.atoms().len());
    let mut mu_atoms = Vec::with_capacity(p.mu.atoms().len());
    for a in p.mu.atoms() {
        let xi = a.xi.congruence(g);
        let n = kernel_normaliser(&a.xi);
        let n_img = kernel_normaliser(&xi);
        let weight = &a.weight.congruence(&g_inv_t) * (n_img / n);
        let delta = &chi(&a.xi).congruence(g) - &chi(&xi);
        shifts.push((delta, weight.clone(), n_img));
        mu_atoms.push(MatrixAtom { xi, weight });
    }
    let mu = MatrixAtomMeasure::new(d, mu_atoms)?;

    let drift = LinearDrift::from_adjoint(d, |v| {
        let mut out = p.drift.adjoint(&v.congruence(&g_t)).congruence(&g_inv_t);
        for (delta, w, n) in &shifts {
            let s = delta.dot(v) / n;
            if s != 0.0 {
                out -= &(w * s);
            }
        }
        out
    });

    AffineParams::new(
        p.alpha.congruence(g),
        p.b.congruence(g),
        drift,
        p.c,
        p.gamma.congruence(&g_inv_t),
        m,
        mu,
    )
}
