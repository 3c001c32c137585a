//! Path simulation: Euler steps with cone projection or regularised
//! volatility, step-level jump thinning and multiplicative killing weights.

mod audit;
mod kernel;
mod rng;
mod vol;

pub use audit::{viability_audit, AuditCheck, AuditReport, AUDIT_TOL};
pub use rng::{PathRng, StreamFactory, Substream};
pub use vol::{cutoff_profile, phi_n, phi_n_gradient, s_eps_n, sigma_kl, sigma_kl_reg, strato_correction};

use kernel::{PathOutput, Stepper};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::params::AffineParams;
use crate::symcone::{is_psd, packed_len, SymMat, PSD_TOL};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scheme {
    /// Euler step with `√x`, then eigenvalue clamping.
    EulerProject,
    /// Euler step with `s_{ε,n}` and the cutoff `φ_n` applied to the linear
    /// parts, then eigenvalue clamping.
    EulerRegularized { eps: f64, n_cut: f64 },
}

impl Scheme {
    pub const DEFAULT_EPS: f64 = 1e-6;
    pub const DEFAULT_N_CUT: f64 = 1e6;

    pub fn regularized_default() -> Self {
        Scheme::EulerRegularized {
            eps: Self::DEFAULT_EPS,
            n_cut: Self::DEFAULT_N_CUT,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub dt: f64,
    pub t_end: f64,
    pub n_paths: usize,
    pub seed: u64,
    pub scheme: Scheme,
    /// Output times in `[0, t_end]`, nondecreasing; each is rounded to the
    /// nearest step boundary.
    pub record_grid: Vec<f64>,
    /// Worker threads; `1` runs on the calling thread.
    pub workers: usize,
}

impl SimConfig {
    pub fn new(dt: f64, t_end: f64, n_paths: usize, seed: u64) -> Self {
        Self {
            dt,
            t_end,
            n_paths,
            seed,
            scheme: Scheme::EulerProject,
            record_grid: vec![t_end],
            workers: 1,
        }
    }

    pub fn with_grid(mut self, grid: Vec<f64>) -> Self {
        self.record_grid = grid;
        self
    }

    pub fn with_scheme(mut self, scheme: Scheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }

    pub fn n_steps(&self) -> usize {
        ((self.t_end / self.dt) - 1e-9).ceil().max(1.0) as usize
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.t_end >= self.dt && self.t_end.is_finite()) {
            return bad(format!("t_end must be at least dt, got {}", self.t_end));
        }
        if self.n_paths == 0 {
            return bad("n_paths must be at least 1".into());
        }
        if self.workers == 0 {
            return bad("workers must be at least 1".into());
        }
        if let Scheme::EulerRegularized { eps, n_cut } = self.scheme {
            if !(eps > 0.0 && n_cut > 0.0) {
                return bad(format!("regularisation needs eps > 0 and n > 0, got {eps}, {n_cut}"));
            }
        }
        let mut prev = 0.0;
        for &t in &self.record_grid {
            if !(t >= prev && t <= self.t_end * (1.0 + 1e-12)) {
                return bad("record grid must be nondecreasing within [0, t_end]".into());
            }
            prev = t;
        }
        Ok(())
    }

    fn record_steps(&self) -> Vec<usize> {
        let n = self.n_steps();
        self.record_grid
            .iter()
            .map(|&t| {
                if t >= self.t_end * (1.0 - 1e-12) {
                    n
                } else {
                    ((t / self.dt).round() as usize).min(n)
                }
            })
            .collect()
    }

    fn step_time(&self, k: usize) -> f64 {
        if k >= self.n_steps() {
            self.t_end
        } else {
            k as f64 * self.dt
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JumpSource {
    /// Constant-intensity atom of `m`.
    Constant,
    /// State-dependent atom of `μ`.
    StateDependent,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpMark {
    /// End of the step in which the jump was applied.
    pub time: f64,
    pub atom: usize,
    pub source: JumpSource,
}

/// Monte Carlo mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub n: usize,
}

/// Pairwise summation; the result depends only on the order of `v`.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 16 {
        return v.iter().sum();
    }
    let mid = v.len() / 2;
    pairwise_sum(&v[..mid]) + pairwise_sum(&v[mid..])
}

impl Estimate {
    pub fn from_samples(v: &[f64]) -> Self {
        let n = v.len();
        if n == 0 {
            return Self {
                mean: f64::NAN,
                stderr: f64::NAN,
                n,
            };
        }
        let mean = pairwise_sum(v) / n as f64;
        let stderr = if n > 1 {
            let sq: Vec<f64> = v.iter().map(|x| (x - mean) * (x - mean)).collect();
            (pairwise_sum(&sq) / ((n - 1) as f64 * n as f64)).sqrt()
        } else {
            f64::INFINITY
        };
        Self { mean, stderr, n }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathEnsemble {
    pub dim: usize,
    /// Recorded times (step boundaries).
    pub grid: Vec<f64>,
    pub n_paths: usize,
    pub config: SimConfig,
    /// Number of `m` atoms; compensator and count indices for `μ` atoms
    /// start after them.
    pub n_constant_atoms: usize,
    pub n_state_atoms: usize,
    states: Vec<f64>,
    survival: Vec<f64>,
    compensators: Vec<f64>,
    pub jump_marks: Vec<Vec<JumpMark>>,
    /// Abort reason per path; aborted paths are excluded from estimators.
    pub aborted: Vec<Option<String>>,
    /// Total clamped eigenvalue mass per path.
    pub projection_mass: Vec<f64>,
}

impl PathEnsemble {
    fn stride(&self) -> usize {
        packed_len(self.dim)
    }

    pub fn state(&self, path: usize, k: usize) -> SymMat {
        let s = self.stride();
        let off = (path * self.grid.len() + k) * s;
        SymMat::from_upper(self.dim, self.states[off..off + s].to_vec())
            .unwrap_or_else(|_| SymMat::zeros(self.dim))
    }

    /// Packed upper triangle of a recorded state.
    pub fn state_packed(&self, path: usize, k: usize) -> &[f64] {
        let s = self.stride();
        let off = (path * self.grid.len() + k) * s;
        &self.states[off..off + s]
    }

    pub fn survival(&self, path: usize, k: usize) -> f64 {
        self.survival[path * self.grid.len() + k]
    }

    /// `∫_0^T λ_atom(X_s) ds` along `path`, `m` atoms first.
    pub fn compensator(&self, path: usize, atom: usize) -> f64 {
        self.compensators[path * (self.n_constant_atoms + self.n_state_atoms) + atom]
    }

    pub fn jump_count(&self, path: usize, source: JumpSource, atom: usize) -> usize {
        self.jump_marks[path]
            .iter()
            .filter(|j| j.source == source && j.atom == atom)
            .count()
    }

    pub fn is_aborted(&self, path: usize) -> bool {
        self.aborted[path].is_some()
    }

    pub fn valid_paths(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.n_paths).filter(|&p| !self.is_aborted(p))
    }

    pub fn n_aborted(&self) -> usize {
        self.aborted.iter().filter(|a| a.is_some()).count()
    }

    /// `E[survival · e^{−⟨u, X_{t_k}⟩}]`.
    pub fn laplace_estimate(&self, k: usize, u: &SymMat) -> Estimate {
        let v: Vec<f64> = self
            .valid_paths()
            .map(|p| {
                let x = self.state(p, k);
                self.survival(p, k) * (-u.dot(&x)).exp()
            })
            .collect();
        Estimate::from_samples(&v)
    }

    /// Entrywise mean of `X_{t_k}` and its standard errors.
    pub fn mean_state(&self, k: usize) -> (SymMat, SymMat) {
        let s = self.stride();
        let mut mean = vec![0.0; s];
        let mut se = vec![0.0; s];
        for r in 0..s {
            let v: Vec<f64> = self.valid_paths().map(|p| self.state_packed(p, k)[r]).collect();
            let e = Estimate::from_samples(&v);
            mean[r] = e.mean;
            se[r] = e.stderr;
        }
        (
            SymMat::from_upper(self.dim, mean).unwrap_or_else(|_| SymMat::zeros(self.dim)),
            SymMat::from_upper(self.dim, se).unwrap_or_else(|_| SymMat::zeros(self.dim)),
        )
    }

    /// Mean over paths of `N_atom(T) − ∫_0^T λ_atom ds`, which has mean zero.
    pub fn compensated_count(&self, source: JumpSource, atom: usize) -> Estimate {
        let idx = match source {
            JumpSource::Constant => atom,
            JumpSource::StateDependent => self.n_constant_atoms + atom,
        };
        let v: Vec<f64> = self
            .valid_paths()
            .map(|p| self.jump_count(p, source, atom) as f64 - self.compensator(p, idx))
            .collect();
        Estimate::from_samples(&v)
    }

    pub fn mean_projection_mass(&self) -> f64 {
        let v: Vec<f64> = self.valid_paths().map(|p| self.projection_mass[p]).collect();
        if v.is_empty() {
            0.0
        } else {
            pairwise_sum(&v) / v.len() as f64
        }
    }
}

fn check_inputs(p: &AffineParams, x0: &SymMat, cfg: &SimConfig) -> Result<()> {
    p.check_structure()?;
    cfg.validate()?;
    if x0.dim() != p.dim {
        return Err(Error::DimensionMismatch {
            expected: p.dim,
            found: x0.dim(),
        });
    }
    if !x0.is_finite() {
        return Err(Error::NonFinite("x0".into()));
    }
    if !is_psd(x0, PSD_TOL) {
        return Err(Error::NotPsd {
            what: "x0".into(),
            min_eigenvalue: x0.min_eigenvalue(),
        });
    }
    crate::riccati::ensure_solvable(p)
}

/// Simulates `cfg.n_paths` independent paths from `x0`. Path `i` draws
/// only from stream `i`, so results do not depend on `cfg.workers`.
pub fn simulate_paths(p: &AffineParams, x0: &SymMat, cfg: &SimConfig) -> Result<PathEnsemble> {
    check_inputs(p, x0, cfg)?;
    let stepper = Stepper::new(p, cfg.scheme)?;
    let factory = StreamFactory::new(cfg.seed);
    let record = cfg.record_steps();
    let n_steps = cfg.n_steps();

    let run = |stepper: &mut Stepper, path: usize| {
        let mut out = PathOutput::default();
        let mut rng = factory.path(path as u64);
        stepper.run(x0, &mut rng, n_steps, cfg.dt, cfg.t_end, &record, &mut out);
        out
    };
    let outputs: Vec<PathOutput> = if cfg.workers <= 1 {
        let mut s = stepper.clone();
        (0..cfg.n_paths).map(|i| run(&mut s, i)).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.workers)
            .build()
            .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
        pool.install(|| {
            (0..cfg.n_paths)
                .into_par_iter()
                .map_init(|| stepper.clone(), |s, i| run(s, i))
                .collect()
        })
    };

    let n_atoms = p.m.atoms().len() + p.mu.atoms().len();
    let stride = packed_len(p.dim);
    let mut ens = PathEnsemble {
        dim: p.dim,
        grid: record.iter().map(|&k| cfg.step_time(k)).collect(),
        n_paths: cfg.n_paths,
        config: cfg.clone(),
        n_constant_atoms: p.m.atoms().len(),
        n_state_atoms: p.mu.atoms().len(),
        states: Vec::with_capacity(cfg.n_paths * record.len() * stride),
        survival: Vec::with_capacity(cfg.n_paths * record.len()),
        compensators: Vec::with_capacity(cfg.n_paths * n_atoms),
        jump_marks: Vec::with_capacity(cfg.n_paths),
        aborted: Vec::with_capacity(cfg.n_paths),
        projection_mass: Vec::with_capacity(cfg.n_paths),
    };
    for o in outputs {
        ens.states.extend_from_slice(&o.states);
        ens.survival.extend_from_slice(&o.survival);
        ens.compensators.extend_from_slice(&o.compensators);
        ens.jump_marks.push(o.jumps);
        ens.aborted.push(o.aborted);
        ens.projection_mass.push(o.projection_mass);
    }
    Ok(ens)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::LinearDrift;

    #[test]
    fn deterministic_linear_path() {
        let b0 = SymMat::from_upper(2, vec![1.5, 0.3, 1.2]).unwrap();
        let p = AffineParams::jump_free(SymMat::zeros(2), b0.clone(), LinearDrift::zero(2)).unwrap();
        let x0 = SymMat::from_diag(&[0.5, 0.2]);
        let cfg = SimConfig::new(0.01, 1.0, 3, 1).with_grid(vec![0.0, 0.5, 1.0]);
        let ens = simulate_paths(&p, &x0, &cfg).unwrap();
        for path in 0..3 {
            for (k, &t) in ens.grid.iter().enumerate() {
                let want = &x0 + &(&b0 * t);
                assert!(ens.state(path, k).max_abs_diff(&want) < 1e-12);
                assert_eq!(ens.survival(path, k), 1.0);
            }
        }
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let p = AffineParams::wishart(2, 2.0);
        let cfg = SimConfig::new(0.01, 0.3, 40, 9).with_grid(vec![0.1, 0.3]);
        let a = simulate_paths(&p, &SymMat::identity(2), &cfg).unwrap();
        let b = simulate_paths(&p, &SymMat::identity(2), &cfg.clone().with_workers(3)).unwrap();
        assert_eq!(a.states, b.states);
        assert_eq!(a, PathEnsemble { config: a.config.clone(), ..b });
    }

    #[test]
    fn states_stay_in_cone() {
        let p = AffineParams::wishart(2, 1.0);
        let cfg = SimConfig::new(0.05, 1.0, 50, 3).with_grid((0..=20).map(|k| 0.05 * k as f64).collect());
        let ens = simulate_paths(&p, &SymMat::from_diag(&[0.1, 0.0]), &cfg).unwrap();
        for path in 0..50 {
            for k in 0..ens.grid.len() {
                assert!(ens.state(path, k).min_eigenvalue() >= -1e-12);
            }
        }
        assert!(ens.mean_projection_mass() > 0.0);
    }

    #[test]
    fn short_last_step() {
        let cfg = SimConfig::new(0.3, 1.0, 1, 0);
        assert_eq!(cfg.n_steps(), 4);
        assert_eq!(SimConfig::new(0.1, 1.0, 1, 0).n_steps(), 10);
    }

    #[test]
    fn config_validation() {
        assert!(SimConfig::new(0.0, 1.0, 1, 0).validate().is_err());
        assert!(SimConfig::new(0.1, 0.05, 1, 0).validate().is_err());
        assert!(SimConfig::new(0.1, 1.0, 0, 0).validate().is_err());
        assert!(SimConfig::new(0.1, 1.0, 1, 0).with_grid(vec![0.5, 0.2]).validate().is_err());
    }

    #[test]
    fn killing_weights() {
        let mut p = AffineParams::jump_free(SymMat::zeros(1), SymMat::identity(1), LinearDrift::zero(1)).unwrap();
        p.c = 0.2;
        p.gamma = SymMat::identity(1);
        let cfg = SimConfig::new(0.001, 1.0, 1, 0);
        let ens = simulate_paths(&p, &SymMat::identity(1), &cfg).unwrap();
        // x_t = 1 + t, survival = exp(-∫(0.2 + 1 + s) ds) = exp(-1.7)
        assert!((ens.survival(0, 0) - (-1.7f64).exp()).abs() < 1e-3);
    }
}
