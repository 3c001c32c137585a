//! Boundary viability audit for the regularised equation.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::vol::{phi_n, sigma_kl_reg, strato_correction};
use crate::error::Result;
use crate::jumps::compensator_drift;
use crate::params::AffineParams;
use crate::symcone::{normal_cone_basis, sqrt_psd, SymMat};

/// Tolerance on all audit slacks.
pub const AUDIT_TOL: f64 = 1e-9;
const RANK_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuditCheck {
    /// Smallest slack (for the volatility check: minus the largest
    /// `|⟨σ^{kl}, u⟩|`).
    pub worst: f64,
    pub passed: bool,
}

impl AuditCheck {
    fn new() -> Self {
        Self {
            worst: f64::INFINITY,
            passed: true,
        }
    }

    fn update(&mut self, slack: f64) {
        self.worst = self.worst.min(slack);
        self.passed = self.worst >= -AUDIT_TOL;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuditReport {
    pub points: usize,
    /// `x + ξ_k ⪰ 0` for every atom.
    pub jump_support: AuditCheck,
    /// `⟨σ^{kl}_{ε,n}(x), u⟩ = 0` for normal-cone directions `u`.
    pub volatility_tangent: AuditCheck,
    /// `⟨b + B(φ_n x) − ∫χ M(φ_n x) − ½ΣDσσ, u⟩ ≥ 0` for normal-cone directions `u`.
    pub drift_inward: AuditCheck,
    /// Boundary point of the worst drift slack.
    pub worst_drift_point: Option<SymMat>,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.jump_support.passed && self.volatility_tangent.passed && self.drift_inward.passed
    }
}

fn random_rotation(d: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let a = DMatrix::<f64>::from_fn(d, d, |_, _| StandardNormal.sample(rng));
    let qr = a.qr();
    let mut q = qr.q();
    let r = qr.r();
    for k in 0..d {
        if r[(k, k)] < 0.0 {
            q.column_mut(k).neg_mut();
        }
    }
    q
}

/// Samples `n_points` boundary points `O diag(λ_1..λ_r, 0..0) Oᵀ` with
/// random rotation and rank `r < d`, and checks the viability conditions
/// of the regularised equation at each.
pub fn viability_audit(p: &AffineParams, eps: f64, n: f64, n_points: usize, seed: u64) -> Result<AuditReport> {
    p.check_structure()?;
    let d = p.dim;
    let sigma = sqrt_psd(&p.alpha)?.to_mat();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = AuditReport {
        points: n_points,
        jump_support: AuditCheck::new(),
        volatility_tangent: AuditCheck::new(),
        drift_inward: AuditCheck::new(),
        worst_drift_point: None,
    };
    let vol_free = p.alpha.upper().iter().all(|&v| v == 0.0);
    for _ in 0..n_points {
        let o = random_rotation(d, &mut rng);
        let rank = rng.random_range(0..d);
        let mut lam = DMatrix::zeros(d, d);
        for k in 0..rank {
            lam[(k, k)] = rng.random_range(0.05..2.0);
        }
        let x = SymMat::from_mat(&(&o * lam * o.transpose()));
        for a in p.m.atoms() {
            report.jump_support.update((&x + &a.xi).min_eigenvalue());
        }
        for a in p.mu.atoms() {
            report.jump_support.update((&x + &a.xi).min_eigenvalue());
        }
        let normals = normal_cone_basis(&x, RANK_TOL);
        if normals.is_empty() {
            continue;
        }
        if !vol_free {
            for k in 0..d {
                for l in 0..d {
                    let s = sigma_kl_reg(&x, &sigma, eps, n, k, l)?;
                    for u in &normals {
                        report.volatility_tangent.update(-s.dot(u).abs() / u.norm());
                    }
                }
            }
        }
        let xc = &x * phi_n(&x, n);
        let drift = &(&(&p.b + &p.drift.apply(&xc)) - &compensator_drift(&p.mu, &xc)?)
            - &strato_correction(&x, &sigma, eps, n)?;
        for u in &normals {
            let slack = drift.dot(u) / u.norm();
            if slack < report.drift_inward.worst {
                report.worst_drift_point = Some(x.clone());
            }
            report.drift_inward.update(slack);
        }
    }
    for c in [
        &mut report.jump_support,
        &mut report.volatility_tangent,
        &mut report.drift_inward,
    ] {
        if c.worst == f64::INFINITY {
            c.worst = 0.0;
        }
    }
    Ok(report)
}
