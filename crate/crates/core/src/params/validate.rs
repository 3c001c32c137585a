use std::fmt;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};

use super::AffineParams;
use crate::error::{Error, Result};
use crate::jumps::{chi, kernel_normaliser};
use crate::symcone::{is_psd, SymMat, PSD_TOL};

/// Absolute tolerance on worst-case slack of the inequality conditions.
pub const SLACK_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Condition {
    DiffusionPsd,
    DriftDominatesDiffusion,
    KillingNonnegative,
    LinearKillingPsd,
    ConstantJumps,
    LinearJumpWeights,
    TransversalMoments,
    DiagonalDeletion,
    InwardDrift,
}

impl Condition {
    pub const ALL: [Condition; 9] = [
        Condition::DiffusionPsd,
        Condition::DriftDominatesDiffusion,
        Condition::KillingNonnegative,
        Condition::LinearKillingPsd,
        Condition::ConstantJumps,
        Condition::LinearJumpWeights,
        Condition::TransversalMoments,
        Condition::DiagonalDeletion,
        Condition::InwardDrift,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Condition::DiffusionPsd => "diffusion-psd",
            Condition::DriftDominatesDiffusion => "drift-dominates-diffusion",
            Condition::KillingNonnegative => "killing-nonnegative",
            Condition::LinearKillingPsd => "linear-killing-psd",
            Condition::ConstantJumps => "constant-jumps",
            Condition::LinearJumpWeights => "linear-jump-weights",
            Condition::TransversalMoments => "transversal-moments",
            Condition::DiagonalDeletion => "inward-drift-diagonal",
            Condition::InwardDrift => "inward-drift-pairs",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            Condition::DiffusionPsd => "alpha is positive semidefinite",
            Condition::DriftDominatesDiffusion => "b - (d-1) alpha is positive semidefinite",
            Condition::KillingNonnegative => "c >= 0",
            Condition::LinearKillingPsd => "gamma is positive semidefinite",
            Condition::ConstantJumps => "m atoms are nonzero cone elements with positive weight",
            Condition::LinearJumpWeights => "mu weights are positive semidefinite",
            Condition::TransversalMoments => "transversal moment condition on mu",
            Condition::DiagonalDeletion => "diagonal-deletion necessary test for inward drift",
            Condition::InwardDrift => "<B(x),u> - sum <chi,u> M(x) >= 0 on complementary pairs",
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionCheck {
    pub condition: Condition,
    pub passed: bool,
    /// Smallest value of the quantity required to be nonnegative.
    pub worst_slack: f64,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub checks: Vec<ConditionCheck>,
    pub pairs_checked: usize,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &ConditionCheck> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn get(&self, condition: Condition) -> Option<&ConditionCheck> {
        self.checks.iter().find(|c| c.condition == condition)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            write!(
                f,
                "{:<5} {:<26} slack={:+.3e}",
                if c.passed { "PASS" } else { "FAIL" },
                c.condition.label(),
                c.worst_slack
            )?;
            if !c.note.is_empty() {
                write!(f, "  ({})", c.note)?;
            }
            writeln!(f)?;
        }
        write!(
            f,
            "{} ({} pair evaluations)",
            if self.passed() { "admissible" } else { "NOT admissible" },
            self.pairs_checked
        )
    }
}

fn check(condition: Condition, worst_slack: f64, passed: bool, note: impl Into<String>) -> ConditionCheck {
    ConditionCheck {
        condition,
        passed,
        worst_slack,
        note: note.into(),
    }
}

fn psd_check(condition: Condition, m: &SymMat) -> ConditionCheck {
    check(condition, m.min_eigenvalue(), is_psd(m, PSD_TOL), "")
}

/// Checks all admissibility conditions that are decided exactly by
/// eigenvalue computations on finitely many matrices.
pub(crate) fn exact_checks(p: &AffineParams) -> Result<Vec<ConditionCheck>> {
    p.check_structure()?;
    let d = p.dim;
    let mut out = vec![
        psd_check(Condition::DiffusionPsd, &p.alpha),
        psd_check(
            Condition::DriftDominatesDiffusion,
            &(&p.b - &(&p.alpha * (d as f64 - 1.0))),
        ),
        check(Condition::KillingNonnegative, p.c, p.c >= 0.0, ""),
        psd_check(Condition::LinearKillingPsd, &p.gamma),
    ];

    let mut worst = f64::INFINITY;
    let mut ok = true;
    for a in p.m.atoms() {
        let lam = a.xi.min_eigenvalue();
        worst = worst.min(lam).min(a.weight);
        ok &= is_psd(&a.xi, PSD_TOL) && a.weight > 0.0 && a.xi.norm() > 0.0;
    }
    out.push(check(
        Condition::ConstantJumps,
        if p.m.is_empty() { 0.0 } else { worst },
        ok,
        if p.m.is_empty() { "no atoms" } else { "" },
    ));

    let mut worst = f64::INFINITY;
    let mut ok = true;
    for a in p.mu.atoms() {
        worst = worst.min(a.weight.min_eigenvalue()).min(a.xi.min_eigenvalue());
        ok &= is_psd(&a.weight, PSD_TOL) && is_psd(&a.xi, PSD_TOL) && a.xi.norm() > 0.0;
    }
    out.push(check(
        Condition::LinearJumpWeights,
        if p.mu.is_empty() { 0.0 } else { worst },
        ok,
        if p.mu.is_empty() { "no atoms" } else { "" },
    ));

    out.push(check(
        Condition::TransversalMoments,
        0.0,
        true,
        "automatic for finitely many atoms",
    ));

    let mut worst = f64::INFINITY;
    for i in 0..d {
        if d == 1 {
            break;
        }
        let mut m = p.drift.beta(i, i).delete_index(i);
        for a in p.mu.atoms() {
            let w = a.weight.get(i, i) / kernel_normaliser(&a.xi);
            m -= &(&chi(&a.xi).delete_index(i) * w);
        }
        worst = worst.min(m.min_eigenvalue());
    }
    if d == 1 {
        out.push(check(Condition::DiagonalDeletion, 0.0, true, "vacuous for d = 1"));
    } else {
        out.push(check(Condition::DiagonalDeletion, worst, worst >= -SLACK_TOL, ""));
    }
    Ok(out)
}

/// Per-`u` part of the drift slack: `Q(u) = Bᵀ(u) − Σ_k ⟨χ(ξ_k), u⟩ W_k / (‖ξ_k‖² ∧ 1)`,
/// so that the slack at `(x, u)` is `⟨x, Q(u)⟩`.
fn slack_operator(p: &AffineParams, u: &SymMat) -> SymMat {
    let mut q = p.drift.adjoint(u);
    for a in p.mu.atoms() {
        let s = chi(&a.xi).dot(u) / kernel_normaliser(&a.xi);
        if s != 0.0 {
            q -= &(&a.weight * s);
        }
    }
    q
}

fn givens(d: usize, i: usize, j: usize, theta: f64) -> DMatrix<f64> {
    let mut g = DMatrix::identity(d, d);
    let (s, c) = theta.sin_cos();
    g[(i, i)] = c;
    g[(j, j)] = c;
    g[(i, j)] = -s;
    g[(j, i)] = s;
    g
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

/// Worst slack over rank-one complementary pairs built from the columns of `o`.
/// The slack is bilinear, so this covers all pairs diagonal in the basis `o`.
fn rank_one_slack(p: &AffineParams, o: &DMatrix<f64>) -> (f64, usize) {
    let d = p.dim;
    let mut worst = f64::INFINITY;
    let mut n = 0;
    for b in 0..d {
        let z: Vec<f64> = o.column(b).iter().copied().collect();
        let q = slack_operator(p, &SymMat::outer(&z)).to_mat();
        for a in 0..d {
            if a == b {
                continue;
            }
            let y = o.column(a);
            worst = worst.min((y.transpose() * &q * y)[(0, 0)]);
            n += 1;
        }
    }
    (worst, n)
}

/// Block pairs `x = O diag(λ⁺, 0) Oᵀ`, `u = O diag(0, w) Oᵀ` with random
/// positive `λ⁺` and random PSD block `w`, both normalised.
fn block_slack(p: &AffineParams, o: &DMatrix<f64>, rng: &mut ChaCha8Rng) -> (f64, usize) {
    let d = p.dim;
    let unit = Uniform::new(0.05, 1.0).expect("valid range");
    let mut worst = f64::INFINITY;
    for r in 1..d {
        let mut xd = DMatrix::zeros(d, d);
        for k in 0..r {
            xd[(k, k)] = unit.sample(rng);
        }
        let s = d - r;
        let g = DMatrix::<f64>::from_fn(s, s, |_, _| StandardNormal.sample(rng));
        let w = &g * g.transpose();
        let mut ud = DMatrix::zeros(d, d);
        ud.view_mut((r, r), (s, s)).copy_from(&w);
        let x = SymMat::from_mat(&(o * xd * o.transpose()));
        let u = SymMat::from_mat(&(o * ud * o.transpose()));
        let (nx, nu) = (x.norm(), u.norm());
        if nx == 0.0 || nu == 0.0 {
            continue;
        }
        worst = worst.min(x.dot(&slack_operator(p, &u)) / (nx * nu));
    }
    (worst, d.saturating_sub(1))
}

/// Full admissibility report. Exact eigenvalue checks for the cone
/// conditions; the inward-drift condition is checked by the exact
/// diagonal-deletion test plus a grid of rotations and `n_random_pairs`
/// random rotations drawn from a generator seeded with `seed`.
pub fn validate_admissible(p: &AffineParams, n_random_pairs: usize, seed: u64) -> Result<ValidationReport> {
    let mut checks = exact_checks(p)?;
    let d = p.dim;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut worst = f64::INFINITY;
    let mut pairs = 0usize;
    if d > 1 {
        let mut grid = vec![DMatrix::identity(d, d)];
        for i in 0..d {
            for j in i + 1..d {
                for theta in [std::f64::consts::FRAC_PI_4, std::f64::consts::FRAC_PI_6] {
                    grid.push(givens(d, i, j, theta));
                }
            }
        }
        for o in &grid {
            let (w, n) = rank_one_slack(p, o);
            worst = worst.min(w);
            pairs += n;
        }
        for _ in 0..n_random_pairs {
            let o = random_rotation(d, &mut rng);
            let (w, n) = rank_one_slack(p, &o);
            worst = worst.min(w);
            pairs += n;
            let (w, n) = block_slack(p, &o, &mut rng);
            worst = worst.min(w);
            pairs += n;
        }
    }
    if !worst.is_finite() {
        if worst.is_nan() {
            return Err(Error::NonFinite("inward drift slack".into()));
        }
        checks.push(check(Condition::InwardDrift, 0.0, true, "vacuous for d = 1"));
    } else {
        checks.push(check(
            Condition::InwardDrift,
            worst,
            worst >= -SLACK_TOL,
            format!("{pairs} pairs"),
        ));
    }
    Ok(ValidationReport {
        checks,
        pairs_checked: pairs,
    })
}
