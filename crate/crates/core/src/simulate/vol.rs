//! Volatility factors `σ^{kl}`, their regularised versions and the
//! Stratonovich correction `½ Σ_{kl} Dσ^{kl}_{ε,n} σ^{kl}_{ε,n}`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::symcone::{sqrt_psd, SymMat};

/// `√x M^{kl} Σ + Σᵀ M^{lk} √x` for a given square root `r = √x`.
fn factor_from_root(r: &DMatrix<f64>, sigma: &DMatrix<f64>, k: usize, l: usize) -> SymMat {
    let d = r.nrows();
    SymMat::from_fn(d, |i, j| r[(i, k)] * sigma[(l, j)] + r[(j, k)] * sigma[(l, i)])
}

fn check_sigma(x: &SymMat, sigma: &DMatrix<f64>) -> Result<()> {
    let d = x.dim();
    if sigma.nrows() != d || sigma.ncols() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: sigma.nrows(),
        });
    }
    Ok(())
}

/// `σ^{kl}(x) = √x M^{kl} Σ + Σᵀ M^{lk} √x` with `M^{kl} = e_k e_lᵀ`.
pub fn sigma_kl(x: &SymMat, sigma: &DMatrix<f64>, k: usize, l: usize) -> Result<SymMat> {
    check_sigma(x, sigma)?;
    Ok(factor_from_root(&sqrt_psd(x)?.to_mat(), sigma, k, l))
}

fn smooth_step(tau: f64) -> (f64, f64) {
    if tau <= 0.0 {
        return (0.0, 0.0);
    }
    if tau >= 1.0 {
        return (1.0, 0.0);
    }
    let e = |t: f64| (-1.0 / t).exp();
    let (a, b) = (e(tau), e(1.0 - tau));
    let (da, db) = (a / (tau * tau), b / ((1.0 - tau) * (1.0 - tau)));
    let s = a / (a + b);
    let ds = (da * b + a * db) / ((a + b) * (a + b));
    (s, ds)
}

/// Radial profile of the cutoff: `1` on `[0, n]`, `n/r` on `[n+1, ∞)`,
/// smooth in between. Returns `(h(r), h'(r))`.
pub fn cutoff_profile(r: f64, n: f64) -> (f64, f64) {
    if r <= n {
        return (1.0, 0.0);
    }
    let tail = n / r;
    let dtail = -n / (r * r);
    let (s, ds) = smooth_step(r - n);
    (1.0 - s + s * tail, -ds + ds * tail + s * dtail)
}

/// Smooth cutoff `φ_n(x) = h(‖x‖)` with values in `(0, 1]`.
pub fn phi_n(x: &SymMat, n: f64) -> f64 {
    cutoff_profile(x.norm(), n).0
}

/// Gradient of `φ_n` with respect to the trace inner product.
pub fn phi_n_gradient(x: &SymMat, n: f64) -> SymMat {
    let r = x.norm();
    let (_, dh) = cutoff_profile(r, n);
    if dh == 0.0 || r == 0.0 {
        return SymMat::zeros(x.dim());
    }
    x * (dh / r)
}

/// `√(a + ε) − √ε` without cancellation; negative `a` is treated as zero.
#[inline]
pub(crate) fn shifted_root(a: f64, eps: f64) -> f64 {
    let a = a.max(0.0);
    let den = (a + eps).sqrt() + eps.sqrt();
    if den == 0.0 {
        0.0
    } else {
        a / den
    }
}

fn check_reg(eps: f64, n: f64) -> Result<()> {
    if !(eps >= 0.0) || !(n > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "regularisation needs eps >= 0 and n > 0, got eps = {eps}, n = {n}"
        )));
    }
    Ok(())
}

/// `s_{ε,n}(x) = √(φ_n(x) x + εI) − √ε I`.
pub fn s_eps_n(x: &SymMat, eps: f64, n: f64) -> Result<SymMat> {
    check_reg(eps, n)?;
    let phi = phi_n(x, n);
    Ok(x.eigen().reconstruct(|l| shifted_root(phi * l, eps)))
}

/// `σ^{kl}_{ε,n}(x) = s_{ε,n}(x) M^{kl} Σ + Σᵀ M^{lk} s_{ε,n}(x)`.
pub fn sigma_kl_reg(x: &SymMat, sigma: &DMatrix<f64>, eps: f64, n: f64, k: usize, l: usize) -> Result<SymMat> {
    check_sigma(x, sigma)?;
    Ok(factor_from_root(&s_eps_n(x, eps, n)?.to_mat(), sigma, k, l))
}

/// Closed form of `½ Σ_{k,l} Dσ^{kl}_{ε,n}(x) σ^{kl}_{ε,n}(x)` in the
/// eigenbasis `x = O Λ Oᵀ`, with `α = ΣᵀΣ`.
pub fn strato_correction(x: &SymMat, sigma: &DMatrix<f64>, eps: f64, n: f64) -> Result<SymMat> {
    check_sigma(x, sigma)?;
    check_reg(eps, n)?;
    let d = x.dim();
    let e = x.eigen();
    let o = &e.rotation;
    let lam: Vec<f64> = e.eigenvalues.iter().map(|&l| l.max(0.0)).collect();
    let phi = phi_n(x, n);
    let alpha = sigma.transpose() * sigma;
    let alpha_o = &alpha * o;
    let root: Vec<f64> = lam.iter().map(|&l| (phi * l + eps).sqrt()).collect();
    let s: Vec<f64> = lam.iter().map(|&l| shifted_root(phi * l, eps)).collect();

    let ratio = |num: f64, den: f64| if den == 0.0 { 0.0 } else { num / den };
    let mut coef = vec![0.0; d];
    for i in 0..d {
        let mut c = ratio(phi * s[i], root[i]);
        for j in 0..d {
            if j != i {
                c += ratio(phi * s[j], root[i] + root[j]);
            }
        }
        coef[i] = 0.5 * c;
    }
    let mut out = SymMat::from_fn(d, |m, nn| {
        (0..d)
            .map(|i| coef[i] * (alpha_o[(m, i)] * o[(nn, i)] + alpha_o[(nn, i)] * o[(m, i)]))
            .sum()
    });

    let grad = phi_n_gradient(x, n);
    if grad.upper().iter().any(|&g| g != 0.0) {
        let s_mat = e.reconstruct(|l| shifted_root(phi * l.max(0.0), eps)).to_mat();
        for k in 0..d {
            for l in 0..d {
                let g = grad.dot(&factor_from_root(&s_mat, sigma, k, l));
                if g == 0.0 {
                    continue;
                }
                for i in 0..d {
                    let w = 0.5 * g * ratio(lam[i], 2.0 * root[i]) * o[(k, i)];
                    if w == 0.0 {
                        continue;
                    }
                    for m in 0..d {
                        for nn in m..d {
                            let z = o[(m, i)] * sigma[(l, nn)] + o[(nn, i)] * sigma[(l, m)];
                            let v = out.get(m, nn) + w * z;
                            out.set(m, nn, v);
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}
