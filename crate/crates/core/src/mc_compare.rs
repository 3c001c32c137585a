//! Monte Carlo against Riccati (and the Wishart closed form when it applies).

use serde::Serialize;

use crate::error::{Error, Result};
use crate::params::{is_conservative, AffineParams};
use crate::riccati::{solve_riccati_on_grid, wishart_closed_form, SolverOptions};
use crate::simulate::{simulate_paths, SimConfig};
use crate::symcone::{sqrt_psd, SymMat};

pub const DEFAULT_BIAS_BUDGET: f64 = 2e-2;

#[derive(Debug, Clone, PartialEq)]
pub struct CompareConfig {
    pub sim: SimConfig,
    /// Allowance for discretisation bias at `sim.dt`.
    pub bias_budget: f64,
    pub solver: SolverOptions,
}

impl CompareConfig {
    pub fn new(sim: SimConfig) -> Self {
        Self {
            sim,
            bias_budget: DEFAULT_BIAS_BUDGET,
            solver: SolverOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareEntry {
    pub t: f64,
    pub u: SymMat,
    pub mc_estimate: f64,
    pub mc_stderr: f64,
    pub riccati_value: f64,
    pub closed_form_value: Option<f64>,
    pub z_score: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub dt: f64,
    pub bias_budget: f64,
    /// Median over seeds of the largest `|mc − riccati|` over all queries.
    pub median_abs_error: f64,
    pub max_stderr: f64,
    pub mean_projection_mass: f64,
    pub all_pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareReport {
    pub entries: Vec<CompareEntry>,
    pub bias_budget: f64,
    pub n_paths: usize,
    pub n_aborted: usize,
    /// `δ` when the parameters match the Wishart pattern.
    pub wishart_delta: Option<f64>,
    pub mean_projection_mass: f64,
    pub convergence: Vec<ConvergenceRow>,
}

impl CompareReport {
    pub fn passed(&self) -> bool {
        self.entries.iter().all(|e| e.pass) && self.convergence.iter().all(|r| r.all_pass)
    }

    pub fn max_abs_error(&self) -> f64 {
        self.entries
            .iter()
            .map(|e| (e.mc_estimate - e.riccati_value).abs())
            .fold(0.0, f64::max)
    }
}

/// Parameters reducible to the standard Wishart law: no jumps, no killing,
/// `B = 0`, `α` positive definite and `b = δ α`.
#[derive(Debug, Clone, PartialEq)]
pub struct WishartPattern {
    pub delta: f64,
    /// `α^{1/2}`.
    pub root: SymMat,
    /// `α^{−1/2}`.
    pub inv_root: SymMat,
}

impl WishartPattern {
    pub fn detect(p: &AffineParams) -> Option<Self> {
        if p.has_jumps() || !is_conservative(p) || !p.drift.is_zero() {
            return None;
        }
        let e = p.alpha.eigen();
        if e.min() <= 1e-10 * (1.0 + e.max()) {
            return None;
        }
        let delta = p.b.dot(&p.alpha) / p.alpha.dot(&p.alpha);
        if (&p.b - &(&p.alpha * delta)).norm() > 1e-12 * (1.0 + p.b.norm()) {
            return None;
        }
        Some(Self {
            delta,
            root: e.reconstruct(f64::sqrt),
            inv_root: e.reconstruct(|l| 1.0 / l.sqrt()),
        })
    }

    /// `E_x[e^{−⟨u, X_t⟩}]` via `Y = α^{−1/2} X α^{−1/2}`.
    pub fn laplace(&self, x: &SymMat, u: &SymMat, t: f64) -> f64 {
        wishart_closed_form(self.delta, &self.inv_root.sandwich(x), &self.root.sandwich(u), t).laplace
    }
}

fn entry(t: f64, u: &SymMat, mc: (f64, f64), riccati: f64, closed: Option<f64>, budget: f64) -> CompareEntry {
    let (mean, se) = mc;
    let diff = mean - riccati;
    let z = if se > 0.0 {
        diff / se
    } else if diff == 0.0 {
        0.0
    } else {
        diff.signum() * f64::MAX
    };
    CompareEntry {
        t,
        u: u.clone(),
        mc_estimate: mean,
        mc_stderr: se,
        riccati_value: riccati,
        closed_form_value: closed,
        z_score: z,
        pass: diff.abs() <= 3.0 * se + budget,
    }
}

/// Estimates `E[survival · e^{−⟨u, X_t⟩}]` for every `(t, u)` from a single
/// ensemble and compares with the Riccati transform. Times are snapped to
/// the simulation step grid and the Riccati side is evaluated at the
/// snapped times.
pub fn compare(
    p: &AffineParams,
    x0: &SymMat,
    u_list: &[SymMat],
    t_list: &[f64],
    cfg: &CompareConfig,
) -> Result<CompareReport> {
    if u_list.is_empty() || t_list.is_empty() {
        return Err(Error::InvalidArgument("compare needs at least one u and one t".into()));
    }
    let mut times = t_list.to_vec();
    times.sort_by(f64::total_cmp);
    let t_end = *times.last().expect("nonempty");
    let mut sim = cfg.sim.clone();
    sim.t_end = t_end;
    sim.record_grid = times;
    let ens = simulate_paths(p, x0, &sim)?;
    let pattern = WishartPattern::detect(p);

    let mut entries = Vec::with_capacity(u_list.len() * ens.grid.len());
    for u in u_list {
        sqrt_psd(u)?;
        let sol = solve_riccati_on_grid(p, u, &ens.grid, cfg.solver)?;
        let offset = sol.times.len() - ens.grid.len();
        for (k, &t) in ens.grid.iter().enumerate() {
            let est = ens.laplace_estimate(k, u);
            let ric = sol.laplace_at(k + offset, x0);
            let closed = pattern.as_ref().map(|w| w.laplace(x0, u, t));
            entries.push(entry(t, u, (est.mean, est.stderr), ric, closed, cfg.bias_budget));
        }
    }
    Ok(CompareReport {
        entries,
        bias_budget: cfg.bias_budget,
        n_paths: ens.n_paths,
        n_aborted: ens.n_aborted(),
        wishart_delta: pattern.map(|w| w.delta),
        mean_projection_mass: ens.mean_projection_mass(),
        convergence: Vec::new(),
    })
}

/// Repeats [`compare`] for each step size in `dts` and each seed, with the
/// bias budget scaled in proportion to `dt`.
pub fn convergence_table(
    p: &AffineParams,
    x0: &SymMat,
    u_list: &[SymMat],
    t_list: &[f64],
    base: &CompareConfig,
    dts: &[f64],
    seeds: &[u64],
) -> Result<Vec<ConvergenceRow>> {
    if seeds.is_empty() {
        return Err(Error::InvalidArgument("convergence table needs at least one seed".into()));
    }
    let mut rows = Vec::with_capacity(dts.len());
    for &dt in dts {
        let mut cfg = base.clone();
        cfg.sim.dt = dt;
        cfg.bias_budget = base.bias_budget * dt / base.sim.dt;
        let mut errors = Vec::with_capacity(seeds.len());
        let mut max_se: f64 = 0.0;
        let mut mass = 0.0;
        let mut all_pass = true;
        for &seed in seeds {
            cfg.sim.seed = seed;
            let r = compare(p, x0, u_list, t_list, &cfg)?;
            errors.push(r.max_abs_error());
            max_se = r.entries.iter().map(|e| e.mc_stderr).fold(max_se, f64::max);
            mass += r.mean_projection_mass / seeds.len() as f64;
            all_pass &= r.entries.iter().all(|e| e.pass);
        }
        rows.push(ConvergenceRow {
            dt,
            bias_budget: cfg.bias_budget,
            median_abs_error: median(&mut errors),
            max_stderr: max_se,
            mean_projection_mass: mass,
            all_pass,
        });
    }
    Ok(rows)
}

pub(crate) fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}
