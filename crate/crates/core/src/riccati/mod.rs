//! Laplace exponents `F`, `R` and the generalized Riccati system
//! `φ' = F(ψ)`, `ψ' = R(ψ)`, `φ(0) = 0`, `ψ(0) = u`.

mod dopri;

use dopri::{integrate, Tolerances, Verdict};

use crate::error::{Error, Result};
use crate::jumps::{chi, kernel_normaliser};
use crate::params::{validate::exact_checks, AffineParams};
use crate::symcone::{is_psd, project_psd, SymMat, PSD_TOL};

/// Right-hand sides with the per-atom constants precomputed.
#[derive(Debug, Clone)]
pub struct RiccatiField<'a> {
    p: &'a AffineParams,
    mu_chi: Vec<SymMat>,
    mu_norm: Vec<f64>,
}

impl<'a> RiccatiField<'a> {
    pub fn new(p: &'a AffineParams) -> Self {
        Self {
            p,
            mu_chi: p.mu.atoms().iter().map(|a| chi(&a.xi)).collect(),
            mu_norm: p.mu.atoms().iter().map(|a| kernel_normaliser(&a.xi)).collect(),
        }
    }

    pub fn f(&self, u: &SymMat) -> f64 {
        let mut v = self.p.b.dot(u) + self.p.c;
        for a in self.p.m.atoms() {
            v -= a.weight * (-u.dot(&a.xi)).exp_m1();
        }
        v
    }

    pub fn r(&self, u: &SymMat) -> SymMat {
        let p = self.p;
        let mut v = &(&p.drift.adjoint(u) + &p.gamma) - &(&u.sandwich(&p.alpha) * 2.0);
        for ((a, chi), n) in p.mu.atoms().iter().zip(&self.mu_chi).zip(&self.mu_norm) {
            let s = (-u.dot(&a.xi)).exp_m1() + chi.dot(u);
            if s != 0.0 {
                v -= &(&a.weight * (s / n));
            }
        }
        v
    }
}

/// `F(u) = ⟨b, u⟩ + c − Σ_k w_k (e^{−⟨u, ξ_k⟩} − 1)`.
pub fn f_of(p: &AffineParams, u: &SymMat) -> f64 {
    RiccatiField::new(p).f(u)
}

/// `R(u) = −2uαu + Bᵀ(u) + γ − Σ_k (e^{−⟨u, ξ_k⟩} − 1 + ⟨χ(ξ_k), u⟩) W_k / (‖ξ_k‖² ∧ 1)`.
pub fn r_of(p: &AffineParams, u: &SymMat) -> SymMat {
    RiccatiField::new(p).r(u)
}

/// Constant `K` with `⟨u, R(u)⟩ ≤ K/2 (‖u‖² + 1)` on the cone.
pub fn growth_constant(p: &AffineParams) -> f64 {
    let w: f64 = p.mu.atoms().iter().map(|a| a.weight.norm()).sum();
    2.0 * (p.drift.adjoint_op_norm() + p.gamma.norm() + w)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_step: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-8,
            atol: 1e-10,
            max_step: 0.1,
        }
    }
}

impl SolverOptions {
    pub fn tight() -> Self {
        Self {
            rtol: 1e-11,
            atol: 1e-13,
            max_step: 0.05,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SolverDiagnostics {
    pub accepted: usize,
    pub rejected: usize,
    /// Smallest `λ_min(ψ)` over accepted steps, before repair.
    pub min_eigenvalue: f64,
    /// Accepted steps whose `ψ` was projected back onto the cone.
    pub repairs: usize,
    /// Sign changes of `λ_min(ψ)` across accepted steps. Nonzero values
    /// flag boundary initial data hovering at the cone boundary.
    pub boundary_sign_changes: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RiccatiSolution {
    pub times: Vec<f64>,
    pub phi: Vec<f64>,
    pub psi: Vec<SymMat>,
    pub u0: SymMat,
    pub diagnostics: SolverDiagnostics,
}

impl RiccatiSolution {
    pub fn last(&self) -> (f64, &SymMat) {
        let k = self.times.len() - 1;
        (self.phi[k], &self.psi[k])
    }

    /// `e^{−φ(t_k) − ⟨ψ(t_k), x⟩}`.
    pub fn laplace_at(&self, k: usize, x: &SymMat) -> f64 {
        (-self.phi[k] - self.psi[k].dot(x)).exp()
    }
}

pub(crate) fn ensure_solvable(p: &AffineParams) -> Result<()> {
    let failed: Vec<&str> = exact_checks(p)?
        .iter()
        .filter(|c| !c.passed)
        .map(|c| c.condition.label())
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Error::NotAdmissible(failed.join(", ")))
    }
}

/// Solves on `[0, t_end]` and records only the endpoints.
pub fn solve_riccati(p: &AffineParams, u0: &SymMat, t_end: f64, opts: SolverOptions) -> Result<RiccatiSolution> {
    if !(t_end >= 0.0) || !t_end.is_finite() {
        return Err(Error::InvalidArgument(format!("t_end must be finite and nonnegative, got {t_end}")));
    }
    solve_riccati_on_grid(p, u0, &[t_end], opts)
}

/// Solves through the nondecreasing output times `grid`; `t = 0` is
/// prepended when absent. Steps are clipped to land on each grid time.
pub fn solve_riccati_on_grid(
    p: &AffineParams,
    u0: &SymMat,
    grid: &[f64],
    opts: SolverOptions,
) -> Result<RiccatiSolution> {
    ensure_solvable(p)?;
    if u0.dim() != p.dim {
        return Err(Error::DimensionMismatch {
            expected: p.dim,
            found: u0.dim(),
        });
    }
    if !u0.is_finite() {
        return Err(Error::NonFinite("u0".into()));
    }
    if !is_psd(u0, PSD_TOL) {
        return Err(Error::NotPsd {
            what: "u0".into(),
            min_eigenvalue: u0.min_eigenvalue(),
        });
    }
    if !(opts.rtol > 0.0 && opts.atol > 0.0 && opts.max_step > 0.0) {
        return Err(Error::InvalidArgument("solver tolerances must be positive".into()));
    }
    let mut times = Vec::with_capacity(grid.len() + 1);
    if grid.first() != Some(&0.0) {
        times.push(0.0);
    }
    for &t in grid {
        if !t.is_finite() || t < 0.0 || times.last().is_some_and(|&l| t < l) {
            return Err(Error::InvalidArgument("output grid must be finite, nonnegative and nondecreasing".into()));
        }
        times.push(t);
    }

    let d = p.dim;
    let field = RiccatiField::new(p);
    let unpack = |y: &[f64]| SymMat::from_upper(d, y[1..].to_vec()).expect("packed state length");
    let rhs = |y: &[f64], dy: &mut [f64]| {
        let u = unpack(y);
        dy[0] = field.f(&u);
        dy[1..].copy_from_slice(field.r(&u).upper());
    };

    let mut diag = SolverDiagnostics {
        min_eigenvalue: u0.min_eigenvalue(),
        ..Default::default()
    };
    let mut last_sign = diag.min_eigenvalue >= 0.0;
    let atol = opts.atol;
    let hook = |y: &mut [f64]| {
        let u = unpack(y);
        let lam = u.min_eigenvalue();
        if !lam.is_finite() || lam <= -atol {
            return Verdict::Reject;
        }
        diag.min_eigenvalue = diag.min_eigenvalue.min(lam);
        let sign = lam >= 0.0;
        if sign != last_sign {
            diag.boundary_sign_changes += 1;
            last_sign = sign;
        }
        if lam < 0.0 {
            diag.repairs += 1;
            y[1..].copy_from_slice(project_psd(&u).upper());
            Verdict::Repaired
        } else {
            Verdict::Accept
        }
    };

    let mut phi = Vec::with_capacity(times.len());
    let mut psi = Vec::with_capacity(times.len());
    let mut y = Vec::with_capacity(1 + u0.upper().len());
    y.push(0.0);
    y.extend_from_slice(u0.upper());
    let tol = Tolerances {
        rtol: opts.rtol,
        atol: opts.atol,
        max_step: opts.max_step,
    };
    let counters = integrate(&mut y, &times, tol, rhs, hook, |_, y| {
        phi.push(y[0]);
        psi.push(unpack(y));
    })?;
    diag.accepted = counters.accepted;
    diag.rejected = counters.rejected;
    Ok(RiccatiSolution {
        times,
        phi,
        psi,
        u0: u0.clone(),
        diagnostics: diag,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct WishartValue {
    pub phi: f64,
    pub psi: SymMat,
    pub laplace: f64,
}

/// Closed-form exponents of the Wishart diffusion with `α = I`, `b = δI`:
/// `φ = (δ/2) log det(I + 2tu)`, `ψ = (I + 2tu)⁻¹ u`.
pub fn wishart_closed_form(delta: f64, x: &SymMat, u: &SymMat, t: f64) -> WishartValue {
    let e = u.eigen();
    let phi = 0.5 * delta * e.eigenvalues.iter().map(|&l| (2.0 * t * l).ln_1p()).sum::<f64>();
    let psi = if t == 0.0 {
        u.clone()
    } else {
        e.reconstruct(|l| l / (1.0 + 2.0 * t * l))
    };
    let laplace = (-phi - psi.dot(x)).exp();
    WishartValue { phi, psi, laplace }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SemiflowReport {
    pub psi_defect: f64,
    pub phi_defect: f64,
    /// `1 + ‖ψ(t+s, u)‖`.
    pub scale: f64,
    pub passed: bool,
}

/// Compares `ψ(t+s, u)` with `ψ(s, ψ(t, u))` and `φ(t+s, u)` with
/// `φ(t, u) + φ(s, ψ(t, u))`.
pub fn check_semiflow(
    p: &AffineParams,
    u0: &SymMat,
    t: f64,
    s: f64,
    tol: f64,
    opts: SolverOptions,
) -> Result<SemiflowReport> {
    let first = solve_riccati(p, u0, t, opts)?;
    let (phi_t, psi_t) = first.last();
    let whole = solve_riccati(p, u0, t + s, opts)?;
    let (phi_ts, psi_ts) = whole.last();
    let second = solve_riccati(p, psi_t, s, opts)?;
    let (phi_s, psi_s) = second.last();
    let psi_defect = (psi_ts - psi_s).norm();
    let phi_defect = (phi_ts - phi_t - phi_s).abs();
    let scale = 1.0 + psi_ts.norm();
    Ok(SemiflowReport {
        psi_defect,
        phi_defect,
        scale,
        passed: psi_defect <= tol * scale && phi_defect <= tol * (1.0 + phi_ts.abs()),
    })
}
