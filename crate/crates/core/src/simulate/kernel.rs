//! Allocation-free Euler step for one path.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::rng::{PathRng, Substream};
use super::vol::{cutoff_profile, shifted_root};
use super::{JumpMark, JumpSource, Scheme};
use crate::jumps::{chi, kernel_normaliser};
use crate::params::AffineParams;
use crate::symcone::{jacobi_in_place, packed_len, sqrt_psd, SymMat};

/// Per-path output in flat form.
#[derive(Debug, Clone, Default)]
pub(crate) struct PathOutput {
    pub states: Vec<f64>,
    pub survival: Vec<f64>,
    pub jumps: Vec<JumpMark>,
    pub compensators: Vec<f64>,
    pub projection_mass: f64,
    pub aborted: Option<String>,
}

/// Precomputed coefficients plus scratch space.
#[derive(Debug, Clone)]
pub(crate) struct Stepper {
    d: usize,
    n: usize,
    scheme: Scheme,
    b: Vec<f64>,
    drift_op: Vec<f64>,
    sigma: Vec<f64>,
    gamma: Vec<f64>,
    c: f64,
    m_xi: Vec<Vec<f64>>,
    m_w: Vec<f64>,
    m_total: f64,
    mu_xi: Vec<Vec<f64>>,
    mu_chi: Vec<Vec<f64>>,
    /// `W_k / (‖ξ_k‖² ∧ 1)` in packed form with off-diagonals doubled, so
    /// `λ_k(x) = Σ_r w[r] x[r]`.
    mu_w: Vec<Vec<f64>>,
    // scratch
    x: Vec<f64>,
    xp: Vec<f64>,
    drift: Vec<f64>,
    vecs: Vec<f64>,
    vals: Vec<f64>,
    work: Vec<f64>,
    root: Vec<f64>,
    g: Vec<f64>,
    tmp: Vec<f64>,
    y: Vec<f64>,
    lambda: Vec<f64>,
}

fn packed_doubled(m: &SymMat) -> Vec<f64> {
    let d = m.dim();
    let mut out = m.upper().to_vec();
    let mut k = 0;
    for i in 0..d {
        for j in i..d {
            if i != j {
                out[k] *= 2.0;
            }
            k += 1;
        }
    }
    out
}

impl Stepper {
    pub fn new(p: &AffineParams, scheme: Scheme) -> crate::error::Result<Self> {
        let d = p.dim;
        let n = packed_len(d);
        let sigma_sym = sqrt_psd(&p.alpha)?;
        let mut sigma = vec![0.0; d * d];
        sigma_sym.write_full(&mut sigma);
        Ok(Self {
            d,
            n,
            scheme,
            b: p.b.upper().to_vec(),
            drift_op: p.drift.packed_operator(),
            sigma,
            gamma: packed_doubled(&p.gamma),
            c: p.c,
            m_xi: p.m.atoms().iter().map(|a| a.xi.upper().to_vec()).collect(),
            m_w: p.m.atoms().iter().map(|a| a.weight).collect(),
            m_total: p.m.total_mass(),
            mu_xi: p.mu.atoms().iter().map(|a| a.xi.upper().to_vec()).collect(),
            mu_chi: p.mu.atoms().iter().map(|a| chi(&a.xi).upper().to_vec()).collect(),
            mu_w: p
                .mu
                .atoms()
                .iter()
                .map(|a| packed_doubled(&(&a.weight * (1.0 / kernel_normaliser(&a.xi)))))
                .collect(),
            x: vec![0.0; d * d],
            xp: vec![0.0; n],
            drift: vec![0.0; n],
            vecs: vec![0.0; d * d],
            vals: vec![0.0; d],
            work: vec![0.0; d * d],
            root: vec![0.0; d * d],
            g: vec![0.0; d * d],
            tmp: vec![0.0; d * d],
            y: vec![0.0; d * d],
            lambda: vec![0.0; p.mu.atoms().len()],
        })
    }

    pub fn n_atoms(&self) -> usize {
        self.m_w.len() + self.mu_w.len()
    }

    fn pack(&mut self) {
        let d = self.d;
        let mut k = 0;
        for i in 0..d {
            for j in i..d {
                self.xp[k] = self.x[i * d + j];
                k += 1;
            }
        }
    }

    fn add_packed(&mut self, v: &[f64], s: f64) {
        let d = self.d;
        let mut k = 0;
        for i in 0..d {
            for j in i..d {
                self.x[i * d + j] += s * v[k];
                if i != j {
                    self.x[j * d + i] += s * v[k];
                }
                k += 1;
            }
        }
    }

    /// Eigen-decomposes `x`, clamps negative eigenvalues and rebuilds `x`
    /// when needed. Returns the clamped mass.
    fn project(&mut self) -> f64 {
        let d = self.d;
        self.work.copy_from_slice(&self.x);
        jacobi_in_place(&mut self.work, &mut self.vecs, &mut self.vals, d);
        let mut mass = 0.0;
        for v in self.vals.iter_mut() {
            if *v < 0.0 {
                mass -= *v;
                *v = 0.0;
            }
        }
        if mass > 0.0 {
            for i in 0..d {
                for j in i..d {
                    let mut s = 0.0;
                    for k in 0..d {
                        s += self.vecs[i * d + k] * self.vals[k] * self.vecs[j * d + k];
                    }
                    self.x[i * d + j] = s;
                    self.x[j * d + i] = s;
                }
            }
        }
        mass
    }

    /// Runs one path. `record[k]` is the number of completed steps at the
    /// `k`-th record time.
    #[allow(clippy::too_many_arguments)]
    pub fn run(
        &mut self,
        x0: &SymMat,
        rng: &mut PathRng,
        n_steps: usize,
        dt: f64,
        t_end: f64,
        record: &[usize],
        out: &mut PathOutput,
    ) {
        let d = self.d;
        let n = self.n;
        x0.write_full(&mut self.x);
        out.states.clear();
        out.survival.clear();
        out.jumps.clear();
        out.compensators.clear();
        out.compensators.resize(self.n_atoms(), 0.0);
        out.projection_mass = 0.0;
        out.aborted = None;
        self.project();

        let mut survival = 1.0;
        let mut rec = 0;
        let emit = |step: usize, xp: &[f64], survival: f64, out: &mut PathOutput, rec: &mut usize| {
            while *rec < record.len() && record[*rec] == step {
                out.states.extend_from_slice(xp);
                out.survival.push(survival);
                *rec += 1;
            }
        };
        self.pack();
        emit(0, &self.xp, survival, out, &mut rec);

        let n_m = self.m_w.len();
        for step in 0..n_steps {
            let t0 = step as f64 * dt;
            let h = if step + 1 == n_steps { t_end - t0 } else { dt };
            let t1 = if step + 1 == n_steps { t_end } else { t0 + dt };

            // Cutoff and volatility root in the current eigenbasis.
            let (scale, eps) = match self.scheme {
                Scheme::EulerProject => (1.0, None),
                Scheme::EulerRegularized { eps, n_cut } => {
                    let r = self.xp_norm();
                    (cutoff_profile(r, n_cut).0, Some(eps))
                }
            };
            for k in 0..d {
                let l = self.vals[k];
                self.tmp[k] = match eps {
                    None => l.max(0.0).sqrt(),
                    Some(e) => shifted_root(scale * l, e),
                };
            }
            for i in 0..d {
                for j in i..d {
                    let mut s = 0.0;
                    for k in 0..d {
                        s += self.vecs[i * d + k] * self.tmp[k] * self.vecs[j * d + k];
                    }
                    self.root[i * d + j] = s;
                    self.root[j * d + i] = s;
                }
            }

            // Killing weight at the left point.
            let rate = self.c + dot(&self.gamma, &self.xp);
            survival *= (-rate * h).exp();

            // Intensities and compensated drift.
            let mut total = self.m_total;
            for (k, w) in self.mu_w.iter().enumerate() {
                let l = scale * dot(w, &self.xp);
                let l = if l < 0.0 { 0.0 } else { l };
                self.lambda[k] = l;
                total += l;
                out.compensators[n_m + k] += l * h;
            }
            for (k, w) in self.m_w.iter().enumerate() {
                out.compensators[k] += w * h;
            }
            for r in 0..n {
                let row = &self.drift_op[r * n..(r + 1) * n];
                self.drift[r] = self.b[r] + scale * dot(row, &self.xp);
            }
            for (k, chi) in self.mu_chi.iter().enumerate() {
                let l = self.lambda[k];
                if l != 0.0 {
                    for r in 0..n {
                        self.drift[r] -= chi[r] * l;
                    }
                }
            }

            // Diffusion: Y = root · G · Σ, increment Y + Yᵀ.
            let sq = h.sqrt();
            {
                let g_rng = rng.seek(step as u64, Substream::Gaussian);
                for v in self.g.iter_mut() {
                    let z: f64 = StandardNormal.sample(g_rng);
                    *v = z * sq;
                }
            }
            matmul(&self.root, &self.g, &mut self.tmp, d);
            matmul(&self.tmp, &self.sigma, &mut self.y, d);
            for i in 0..d {
                for j in i..d {
                    let inc = self.y[i * d + j] + self.y[j * d + i];
                    self.x[i * d + j] += inc;
                    if i != j {
                        self.x[j * d + i] += inc;
                    }
                }
            }
            let drift = std::mem::take(&mut self.drift);
            self.add_packed(&drift, h);
            self.drift = drift;

            // At most one jump per step.
            if total > 0.0 {
                let j_rng = rng.seek(step as u64, Substream::Jump);
                let u: f64 = j_rng.random();
                if u < -(-total * h).exp_m1() {
                    let mut pick = j_rng.random::<f64>() * total;
                    let mut chosen = None;
                    for (k, &w) in self.m_w.iter().enumerate() {
                        if pick < w {
                            chosen = Some((JumpSource::Constant, k));
                            break;
                        }
                        pick -= w;
                    }
                    if chosen.is_none() {
                        for (k, &l) in self.lambda.iter().enumerate() {
                            if l > 0.0 && pick < l {
                                chosen = Some((JumpSource::StateDependent, k));
                                break;
                            }
                            pick -= l;
                        }
                    }
                    // Rounding can leave `pick` past the last atom.
                    let chosen = chosen.or_else(|| {
                        self.lambda
                            .iter()
                            .rposition(|&l| l > 0.0)
                            .map(|k| (JumpSource::StateDependent, k))
                            .or_else(|| (!self.m_w.is_empty()).then(|| (JumpSource::Constant, n_m - 1)))
                    });
                    if let Some((source, atom)) = chosen {
                        let xi = match source {
                            JumpSource::Constant => std::mem::take(&mut self.m_xi[atom]),
                            JumpSource::StateDependent => std::mem::take(&mut self.mu_xi[atom]),
                        };
                        self.add_packed(&xi, 1.0);
                        match source {
                            JumpSource::Constant => self.m_xi[atom] = xi,
                            JumpSource::StateDependent => self.mu_xi[atom] = xi,
                        }
                        out.jumps.push(JumpMark { time: t1, atom, source });
                    }
                }
            }

            if self.x.iter().any(|v| !v.is_finite()) {
                out.aborted = Some(format!("non-finite state at t = {t1}"));
                break;
            }
            out.projection_mass += self.project();
            self.pack();
            emit(step + 1, &self.xp, survival, out, &mut rec);
        }
        if out.aborted.is_some() {
            let stride = n;
            while out.survival.len() < record.len() {
                out.states.extend(std::iter::repeat_n(f64::NAN, stride));
                out.survival.push(f64::NAN);
            }
        }
    }

    fn xp_norm(&self) -> f64 {
        self.x.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
fn matmul(a: &[f64], b: &[f64], out: &mut [f64], d: usize) {
    for i in 0..d {
        for j in 0..d {
            let mut s = 0.0;
            for k in 0..d {
                s += a[i * d + k] * b[k * d + j];
            }
            out[i * d + j] = s;
        }
    }
}
