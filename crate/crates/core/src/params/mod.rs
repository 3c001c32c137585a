//! Admissible parameter sets `(α, b, β^{ij}, c, γ, m, μ)`.

mod canonical;
mod transform;
pub(crate) mod validate;

use nalgebra::DMatrix;

pub use canonical::canonicalize;
pub use transform::transform;
pub use validate::{validate_admissible, Condition, ConditionCheck, ValidationReport, SLACK_TOL};

use crate::error::{Error, Result};
use crate::jumps::{MatrixAtomMeasure, ScalarAtomMeasure};
use crate::symcone::{packed_index, packed_len, SymMat};

/// Linear drift `B(x) = Σ_{i,j} β^{ij} x_ij` with `β^{ij} = β^{ji}`.
///
/// Only `β^{ij}` for `i ≤ j` are stored; the sum runs over all ordered pairs,
/// so an off-diagonal coordinate contributes `2 β^{ij} x_ij`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearDrift {
    dim: usize,
    beta: Vec<SymMat>,
}

impl LinearDrift {
    pub fn zero(dim: usize) -> Self {
        Self {
            dim,
            beta: vec![SymMat::zeros(dim); packed_len(dim)],
        }
    }

    /// Builds from explicit `(i, j, β^{ij})` entries (0-based); missing entries are zero.
    pub fn from_betas(dim: usize, entries: impl IntoIterator<Item = (usize, usize, SymMat)>) -> Result<Self> {
        let mut out = Self::zero(dim);
        let mut seen = vec![false; packed_len(dim)];
        for (i, j, m) in entries {
            if i >= dim || j >= dim {
                return Err(Error::InvalidArgument(format!(
                    "beta index ({i}, {j}) out of range for d = {dim}"
                )));
            }
            if m.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: m.dim(),
                });
            }
            if !m.is_finite() {
                return Err(Error::NonFinite(format!("beta({i}, {j})")));
            }
            let k = packed_index(dim, i, j);
            if seen[k] {
                return Err(Error::InvalidArgument(format!("duplicate beta entry ({i}, {j})")));
            }
            seen[k] = true;
            out.beta[k] = m;
        }
        Ok(out)
    }

    /// Recovers `β` from the forward map: `β^{ij} = B(c^{ij}) / (2 − δ_ij)`.
    pub fn from_forward(dim: usize, forward: impl Fn(&SymMat) -> SymMat) -> Self {
        let mut beta = Vec::with_capacity(packed_len(dim));
        for i in 0..dim {
            for j in i..dim {
                let img = forward(&SymMat::basis(dim, i, j));
                beta.push(if i == j { img } else { img * 0.5 });
            }
        }
        Self { dim, beta }
    }

    /// Recovers `β` from the adjoint: `β^{ij}_{ab} = Bᵀ(c^{ab})_ij / (2 − δ_ab)`.
    pub fn from_adjoint(dim: usize, adjoint: impl Fn(&SymMat) -> SymMat) -> Self {
        let mut out = Self::zero(dim);
        for a in 0..dim {
            for b in a..dim {
                let img = adjoint(&SymMat::basis(dim, a, b));
                let scale = if a == b { 1.0 } else { 0.5 };
                for (k, beta) in out.beta.iter_mut().enumerate() {
                    let v = img.upper()[k] * scale;
                    beta.set(a, b, v);
                }
            }
        }
        out
    }

    /// `B(x) = Hx + xHᵀ`.
    pub fn wishart(h: &DMatrix<f64>) -> Self {
        let d = h.nrows();
        Self::from_forward(d, |x| {
            let hx = h * x.to_mat();
            SymMat::from_mat(&(&hx + hx.transpose()))
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn beta(&self, i: usize, j: usize) -> &SymMat {
        &self.beta[packed_index(self.dim, i, j)]
    }

    /// `(i, j, β^{ij})` for `i ≤ j`.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, &SymMat)> {
        let d = self.dim;
        (0..d)
            .flat_map(move |i| (i..d).map(move |j| (i, j)))
            .zip(self.beta.iter())
            .map(|((i, j), m)| (i, j, m))
    }

    pub fn is_zero(&self) -> bool {
        self.beta.iter().all(|b| b.upper().iter().all(|&v| v == 0.0))
    }

    pub fn apply(&self, x: &SymMat) -> SymMat {
        assert_eq!(x.dim(), self.dim, "dimension mismatch");
        let mut out = SymMat::zeros(self.dim);
        for (k, (i, j, beta)) in self.entries().enumerate() {
            let w = x.upper()[k] * if i == j { 1.0 } else { 2.0 };
            if w != 0.0 {
                out += &(beta * w);
            }
        }
        out
    }

    /// `Bᵀ(u)_ij = ⟨β^{ij}, u⟩`.
    pub fn adjoint(&self, u: &SymMat) -> SymMat {
        assert_eq!(u.dim(), self.dim, "dimension mismatch");
        let upper = self.beta.iter().map(|b| b.dot(u)).collect();
        SymMat::from_upper(self.dim, upper).unwrap_or_else(|_| SymMat::zeros(self.dim))
    }

    /// Dense matrix of `B` on packed coordinates: `B(x)_r = Σ_c M[r][c] x_c`, row-major.
    pub fn packed_operator(&self) -> Vec<f64> {
        let n = packed_len(self.dim);
        let mut m = vec![0.0; n * n];
        for (c, (i, j, beta)) in self.entries().enumerate() {
            let w = if i == j { 1.0 } else { 2.0 };
            for r in 0..n {
                m[r * n + c] = w * beta.upper()[r];
            }
        }
        m
    }

    /// Operator norm of `Bᵀ` on `(S_d, ‖·‖_F)`.
    pub fn adjoint_op_norm(&self) -> f64 {
        let d = self.dim;
        let n = packed_len(d);
        let basis: Vec<SymMat> = (0..d)
            .flat_map(|i| (i..d).map(move |j| (i, j)))
            .map(|(i, j)| {
                let s = if i == j { 1.0 } else { std::f64::consts::FRAC_1_SQRT_2 };
                SymMat::basis(d, i, j) * s
            })
            .collect();
        let images: Vec<SymMat> = basis.iter().map(|e| self.adjoint(e)).collect();
        let t = DMatrix::from_fn(n, n, |r, c| basis[r].dot(&images[c]));
        let gram = SymMat::from_mat(&(t.transpose() * &t));
        gram.eigen().max().max(0.0).sqrt()
    }
}

/// Full parameter tuple of an affine process on `S_d^+`.
///
/// Construction checks shapes and finiteness only; admissibility is checked
/// by [`validate_admissible`].
#[derive(Debug, Clone, PartialEq)]
pub struct AffineParams {
    pub dim: usize,
    pub alpha: SymMat,
    pub b: SymMat,
    pub drift: LinearDrift,
    pub c: f64,
    pub gamma: SymMat,
    pub m: ScalarAtomMeasure,
    pub mu: MatrixAtomMeasure,
}

impl AffineParams {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        alpha: SymMat,
        b: SymMat,
        drift: LinearDrift,
        c: f64,
        gamma: SymMat,
        m: ScalarAtomMeasure,
        mu: MatrixAtomMeasure,
    ) -> Result<Self> {
        let p = Self {
            dim: alpha.dim(),
            alpha,
            b,
            drift,
            c,
            gamma,
            m,
            mu,
        };
        p.check_structure()?;
        Ok(p)
    }

    /// No killing, no jumps.
    pub fn jump_free(alpha: SymMat, b: SymMat, drift: LinearDrift) -> Result<Self> {
        let d = alpha.dim();
        Self::new(
            alpha,
            b,
            drift,
            0.0,
            SymMat::zeros(d),
            ScalarAtomMeasure::empty(),
            MatrixAtomMeasure::empty(),
        )
    }

    /// Bru's Wishart diffusion: `α = I`, `b = δI`, everything else zero.
    pub fn wishart(dim: usize, delta: f64) -> Self {
        Self::jump_free(
            SymMat::identity(dim),
            SymMat::scaled_identity(dim, delta),
            LinearDrift::zero(dim),
        )
        .unwrap_or_else(|e| panic!("wishart preset: {e}"))
    }

    pub fn check_structure(&self) -> Result<()> {
        let d = self.dim;
        let mismatch = |found: usize| Error::DimensionMismatch { expected: d, found };
        for m in [&self.alpha, &self.b, &self.gamma] {
            if m.dim() != d {
                return Err(mismatch(m.dim()));
            }
            if !m.is_finite() {
                return Err(Error::NonFinite("parameter matrix".into()));
            }
        }
        if self.drift.dim() != d {
            return Err(mismatch(self.drift.dim()));
        }
        if self.drift.entries().any(|(_, _, m)| !m.is_finite()) {
            return Err(Error::NonFinite("linear drift".into()));
        }
        if !self.c.is_finite() {
            return Err(Error::NonFinite("killing rate c".into()));
        }
        for a in self.m.atoms() {
            if a.xi.dim() != d {
                return Err(mismatch(a.xi.dim()));
            }
        }
        for a in self.mu.atoms() {
            if a.xi.dim() != d || a.weight.dim() != d {
                return Err(mismatch(a.xi.dim().min(a.weight.dim())));
            }
        }
        Ok(())
    }

    /// Constant drift characteristic `b + B(x)` minus the small-jump compensator.
    pub fn effective_drift(&self, x: &SymMat) -> SymMat {
        let comp = crate::jumps::compensator_drift(&self.mu, x)
            .unwrap_or_else(|_| SymMat::zeros(self.dim));
        &self.b + &self.drift.apply(x) - comp
    }

    /// Killing rate `c + ⟨γ, x⟩`.
    pub fn killing_rate(&self, x: &SymMat) -> f64 {
        self.c + self.gamma.dot(x)
    }

    pub fn has_jumps(&self) -> bool {
        !self.m.is_empty() || !self.mu.is_empty()
    }
}

/// `c = 0` and `γ = 0`. With finite atoms the moment condition on `μ` always
/// holds, so this is also necessary.
pub fn is_conservative(p: &AffineParams) -> bool {
    p.c == 0.0 && p.gamma.upper().iter().all(|&v| v == 0.0)
}
