//! Affine transform formula and the infinitesimal generator.

use crate::error::{Error, Result};
use crate::jumps::{compensator_drift, kernel_intensity};
use crate::params::AffineParams;
use crate::riccati::{solve_riccati, RiccatiField, SolverOptions};
use crate::symcone::{is_psd, SymMat, PSD_TOL};

#[derive(Debug, Clone, PartialEq)]
pub struct TransformQuery {
    pub params: AffineParams,
    pub x0: SymMat,
    pub u: SymMat,
    pub t: f64,
}

fn require_psd(what: &str, m: &SymMat, d: usize) -> Result<()> {
    if m.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: m.dim(),
        });
    }
    if !is_psd(m, PSD_TOL) {
        return Err(Error::NotPsd {
            what: what.into(),
            min_eigenvalue: m.min_eigenvalue(),
        });
    }
    Ok(())
}

/// `E_x[e^{−⟨u, X_t⟩}] = e^{−φ(t,u) − ⟨ψ(t,u), x⟩}`.
pub fn laplace_transform(q: &TransformQuery, opts: SolverOptions) -> Result<f64> {
    require_psd("x0", &q.x0, q.params.dim)?;
    let sol = solve_riccati(&q.params, &q.u, q.t, opts)?;
    Ok(sol.laplace_at(sol.times.len() - 1, &q.x0))
}

/// `A e^{−⟨u,·⟩}(x) = (−F(u) − ⟨R(u), x⟩) e^{−⟨u, x⟩}`.
pub fn generator_on_exponential(p: &AffineParams, u: &SymMat, x: &SymMat) -> f64 {
    let field = RiccatiField::new(p);
    (-field.f(u) - field.r(u).dot(x)) * (-u.dot(x)).exp()
}

/// `A_{ijkl}(x) = x_ik α_jl + x_il α_jk + x_jk α_il + x_jl α_ik`.
pub fn diffusion_coefficient(alpha: &SymMat, x: &SymMat, i: usize, j: usize, k: usize, l: usize) -> f64 {
    x.get(i, k) * alpha.get(j, l)
        + x.get(i, l) * alpha.get(j, k)
        + x.get(j, k) * alpha.get(i, l)
        + x.get(j, l) * alpha.get(i, k)
}

/// Generator applied to a smooth `f` at `x`, with first and second
/// derivatives by central differences on the free coordinates `x_ij`,
/// `i ≤ j`, and jump integrals as exact sums. `fd_step` defaults to
/// `1e-4 (1 + ‖x‖)`. `f` must be defined on a neighbourhood of `x`.
pub fn generator_apply(
    p: &AffineParams,
    f: &dyn Fn(&SymMat) -> f64,
    x: &SymMat,
    fd_step: Option<f64>,
) -> Result<f64> {
    let d = p.dim;
    if x.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, found: x.dim() });
    }
    let h = fd_step.unwrap_or(1e-4 * (1.0 + x.norm()));
    if !(h > 0.0) {
        return Err(Error::InvalidArgument("fd_step must be positive".into()));
    }
    let eval = |m: &SymMat| -> Result<f64> {
        let v = f(m);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFinite("test function value".into()))
        }
    };
    let coords: Vec<(usize, usize)> = (0..d).flat_map(|i| (i..d).map(move |j| (i, j))).collect();
    let n = coords.len();
    let shifted = |a: usize, sa: f64, b: Option<(usize, f64)>| {
        let mut m = x.clone();
        m.upper_mut()[a] += sa;
        if let Some((b, sb)) = b {
            m.upper_mut()[b] += sb;
        }
        m
    };

    let f0 = eval(x)?;
    let mut grad = vec![0.0; n];
    let mut plus = vec![0.0; n];
    let mut minus = vec![0.0; n];
    for a in 0..n {
        plus[a] = eval(&shifted(a, h, None))?;
        minus[a] = eval(&shifted(a, -h, None))?;
        grad[a] = (plus[a] - minus[a]) / (2.0 * h);
    }
    let directional = |v: &SymMat| v.upper().iter().zip(&grad).map(|(a, g)| a * g).sum::<f64>();

    let mut diffusion = 0.0;
    for a in 0..n {
        let (i, j) = coords[a];
        for b in a..n {
            let (k, l) = coords[b];
            let coef = diffusion_coefficient(&p.alpha, x, i, j, k, l);
            if coef == 0.0 {
                continue;
            }
            let second = if a == b {
                (plus[a] - 2.0 * f0 + minus[a]) / (h * h)
            } else {
                (eval(&shifted(a, h, Some((b, h))))? - eval(&shifted(a, h, Some((b, -h))))?
                    - eval(&shifted(a, -h, Some((b, h))))?
                    + eval(&shifted(a, -h, Some((b, -h))))?)
                    / (4.0 * h * h)
            };
            diffusion += if a == b { 0.5 * coef * second } else { coef * second };
        }
    }

    let drift = &(&p.b + &p.drift.apply(x)) - &compensator_drift(&p.mu, x)?;
    let mut value = diffusion + directional(&drift) - p.killing_rate(x) * f0;
    for a in p.m.atoms() {
        value += a.weight * (eval(&(x + &a.xi))? - f0);
    }
    for (a, lam) in p.mu.atoms().iter().zip(kernel_intensity(&p.mu, x)?) {
        if lam != 0.0 {
            value += lam * (eval(&(x + &a.xi))? - f0);
        }
    }
    Ok(value)
}
