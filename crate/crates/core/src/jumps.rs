//! Finite-activity jump measures.
//!
//! Both the constant jump measure `m` and the matrix-valued linear jump
//! coefficient `μ` are finite lists of atoms on `S_d^+ \ {0}`, so every jump
//! integral in the model is an exact finite sum. Small jumps are compensated
//! with the fixed truncation `χ(ξ) = ξ·1{‖ξ‖ ≤ 1}` (closed ball).

use crate::error::{Error, Result};
use crate::symcone::{is_psd, SymMat, PSD_TOL};

/// Atom of the constant jump measure `m`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarAtom {
    pub xi: SymMat,
    pub weight: f64,
}

/// Atom of the linear jump coefficient `μ`, carrying a PSD matrix weight.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixAtom {
    pub xi: SymMat,
    pub weight: SymMat,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScalarAtomMeasure {
    atoms: Vec<ScalarAtom>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MatrixAtomMeasure {
    atoms: Vec<MatrixAtom>,
}

fn check_jump_size(xi: &SymMat, dim: usize) -> Result<()> {
    if xi.dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: xi.dim(),
        });
    }
    if !xi.is_finite() {
        return Err(Error::NonFinite("jump atom".into()));
    }
    if xi.norm() == 0.0 {
        return Err(Error::InvalidArgument("jump atom at the origin".into()));
    }
    if !is_psd(xi, PSD_TOL) {
        return Err(Error::NotPsd {
            what: "jump atom".into(),
            min_eigenvalue: xi.min_eigenvalue(),
        });
    }
    Ok(())
}

impl ScalarAtomMeasure {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn new(dim: usize, atoms: Vec<ScalarAtom>) -> Result<Self> {
        for a in &atoms {
            check_jump_size(&a.xi, dim)?;
            if !(a.weight.is_finite() && a.weight > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "scalar atom weight must be positive, got {}",
                    a.weight
                )));
            }
        }
        Ok(Self { atoms })
    }

    pub fn atoms(&self) -> &[ScalarAtom] {
        &self.atoms
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.weight).sum()
    }
}

impl MatrixAtomMeasure {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn new(dim: usize, atoms: Vec<MatrixAtom>) -> Result<Self> {
        for a in &atoms {
            check_jump_size(&a.xi, dim)?;
            if a.weight.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: a.weight.dim(),
                });
            }
            if !a.weight.is_finite() {
                return Err(Error::NonFinite("matrix atom weight".into()));
            }
            if !is_psd(&a.weight, PSD_TOL) {
                return Err(Error::NotPsd {
                    what: "matrix atom weight".into(),
                    min_eigenvalue: a.weight.min_eigenvalue(),
                });
            }
        }
        Ok(Self { atoms })
    }

    pub fn atoms(&self) -> &[MatrixAtom] {
        &self.atoms
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }
}

/// Truncation `χ(ξ) = ξ` if `‖ξ‖_F ≤ 1`, else `0`.
pub fn chi(xi: &SymMat) -> SymMat {
    if xi.norm() <= 1.0 {
        xi.clone()
    } else {
        SymMat::zeros(xi.dim())
    }
}

/// `‖ξ‖² ∧ 1`, the normalisation of the kernel `M(x, dξ)`.
pub fn kernel_normaliser(xi: &SymMat) -> f64 {
    xi.dot(xi).min(1.0)
}

/// Per-atom intensities `λ_k(x) = ⟨x, W_k⟩ / (‖ξ_k‖² ∧ 1)`.
///
/// Round-off negatives above `-1e-12` are clamped to zero.
pub fn kernel_intensity(mu: &MatrixAtomMeasure, x: &SymMat) -> Result<Vec<f64>> {
    mu.atoms
        .iter()
        .map(|a| {
            if a.weight.dim() != x.dim() {
                return Err(Error::DimensionMismatch {
                    expected: a.weight.dim(),
                    found: x.dim(),
                });
            }
            let l = x.dot(&a.weight) / kernel_normaliser(&a.xi);
            Ok(if l < 0.0 && l > -1e-12 { 0.0 } else { l })
        })
        .collect()
}

/// `∫ χ(ξ) M(x, dξ) = Σ_k χ(ξ_k) λ_k(x)`.
pub fn compensator_drift(mu: &MatrixAtomMeasure, x: &SymMat) -> Result<SymMat> {
    let lambda = kernel_intensity(mu, x)?;
    let mut out = SymMat::zeros(x.dim());
    for (a, l) in mu.atoms.iter().zip(lambda) {
        out += &(chi(&a.xi) * l);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_atom(xi: SymMat, w: SymMat) -> MatrixAtomMeasure {
        let d = xi.dim();
        MatrixAtomMeasure::new(d, vec![MatrixAtom { xi, weight: w }]).unwrap()
    }

    #[test]
    fn intensity_examples() {
        let mu = one_atom(SymMat::identity(2), SymMat::identity(2));
        assert_eq!(kernel_intensity(&mu, &SymMat::zeros(2)).unwrap(), vec![0.0]);
        assert_eq!(kernel_intensity(&mu, &SymMat::identity(2)).unwrap(), vec![2.0]);
        let x = SymMat::from_upper(2, vec![1.0, 0.3, 0.5]).unwrap();
        let l1 = kernel_intensity(&mu, &x).unwrap()[0];
        let l2 = kernel_intensity(&mu, &(&x * 2.0)).unwrap()[0];
        assert_eq!(l2, 2.0 * l1);
        assert!(kernel_intensity(&mu, &SymMat::identity(3)).is_err());
    }

    #[test]
    fn chi_examples() {
        let half = SymMat::scaled_identity(2, 0.5);
        assert_eq!(chi(&half), half);
        assert_eq!(chi(&SymMat::identity(2)), SymMat::zeros(2));
        assert_eq!(chi(&chi(&half)), chi(&half));
        // the unit sphere belongs to the small-jump side
        let edge = SymMat::from_diag(&[1.0, 0.0]);
        assert_eq!(chi(&edge), edge);
    }

    #[test]
    fn compensator_examples() {
        let big = one_atom(SymMat::identity(2), SymMat::identity(2));
        assert_eq!(
            compensator_drift(&big, &SymMat::identity(2)).unwrap(),
            SymMat::zeros(2)
        );
        let small = one_atom(SymMat::scaled_identity(2, 0.5), SymMat::identity(2));
        assert_eq!(
            compensator_drift(&small, &SymMat::zeros(2)).unwrap(),
            SymMat::zeros(2)
        );
        // λ = 2 / 0.5 = 4, χ(ξ) = ξ
        let c = compensator_drift(&small, &SymMat::identity(2)).unwrap();
        assert!(c.max_abs_diff(&SymMat::scaled_identity(2, 2.0)) < 1e-15);
    }

    #[test]
    fn rejects_invalid_atoms() {
        let bad_xi = SymMat::from_diag(&[1.0, -1.0]);
        assert!(ScalarAtomMeasure::new(2, vec![ScalarAtom { xi: bad_xi, weight: 1.0 }]).is_err());
        let zero = SymMat::zeros(2);
        assert!(ScalarAtomMeasure::new(2, vec![ScalarAtom { xi: zero, weight: 1.0 }]).is_err());
        let xi = SymMat::identity(2);
        assert!(ScalarAtomMeasure::new(2, vec![ScalarAtom { xi: xi.clone(), weight: 0.0 }]).is_err());
        let w = SymMat::from_diag(&[1.0, -0.1]);
        assert!(MatrixAtomMeasure::new(2, vec![MatrixAtom { xi, weight: w }]).is_err());
    }
}
