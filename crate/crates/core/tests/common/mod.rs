#![allow(dead_code)]

use affine_psd::jumps::{chi, kernel_normaliser};
use affine_psd::{AffineParams, LinearDrift, MatrixAtom, MatrixAtomMeasure, ScalarAtom, ScalarAtomMeasure, SymMat};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    DMatrix::<f64>::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

/// `G Gᵀ` with `G` of shape `d × rank`, scaled so that its trace is about `scale · d`.
pub fn random_psd_rank(d: usize, rank: usize, scale: f64, rng: &mut ChaCha8Rng) -> SymMat {
    if rank == 0 {
        return SymMat::zeros(d);
    }
    let g = gaussian_matrix(d, rank, rng);
    let m = &g * g.transpose() * (scale / rank as f64);
    SymMat::from_mat(&m)
}

pub fn random_psd(d: usize, scale: f64, rng: &mut ChaCha8Rng) -> SymMat {
    random_psd_rank(d, d, scale, rng)
}

/// Positive definite with eigenvalues bounded below by `floor`.
pub fn random_pd(d: usize, scale: f64, floor: f64, rng: &mut ChaCha8Rng) -> SymMat {
    &random_psd(d, scale, rng) + &SymMat::scaled_identity(d, floor)
}

/// Haar-distributed orthogonal matrix.
pub fn random_rotation(d: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let qr = gaussian_matrix(d, d, rng).qr();
    let mut q = qr.q();
    let r = qr.r();
    for k in 0..d {
        if r[(k, k)] < 0.0 {
            q.column_mut(k).neg_mut();
        }
    }
    q
}

/// Invertible matrix with singular values in `[0.5, 2]`.
pub fn random_invertible(d: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let a = random_rotation(d, rng);
    let b = random_rotation(d, rng);
    let s = DMatrix::from_diagonal(&nalgebra::DVector::from_fn(d, |_, _| rng.random_range(0.5..2.0)));
    a * s * b
}

/// PSD matrix with Frobenius norm `target`.
pub fn psd_with_norm(d: usize, target: f64, rng: &mut ChaCha8Rng) -> SymMat {
    let rank = rng.random_range(1..=d);
    let x = random_psd_rank(d, rank, 1.0, rng);
    &x * (target / x.norm())
}

/// Random admissible parameter set.
///
/// The linear drift is `Hx + xHᵀ + AxAᵀ + Σ_k χ(ξ_k)⟨x, W_k⟩/(‖ξ_k‖²∧1)`:
/// the first two terms vanish on complementary pairs, the third is
/// nonnegative there, and the last cancels the small-jump compensator.
/// `α` may be rank deficient and `b = (d−1)α + S` with `S ⪰ 0`.
pub fn random_admissible(d: usize, with_jumps: bool, rng: &mut ChaCha8Rng) -> AffineParams {
    let rank = rng.random_range(0..=d);
    let alpha = random_psd_rank(d, rank, 0.5, rng);
    let b = &(&alpha * (d as f64 - 1.0)) + &random_psd(d, 0.5, rng);
    let h = gaussian_matrix(d, d, rng) * 0.3;
    let a = gaussian_matrix(d, d, rng) * 0.3;
    let (c, gamma, m, mu) = if with_jumps {
        let c = rng.random_range(0.0..0.5);
        let gamma = random_psd_rank(d, rng.random_range(0..=d), 0.3, rng);
        let m_atoms = (0..rng.random_range(1..=2))
            .map(|k| ScalarAtom {
                xi: psd_with_norm(d, if k == 0 { 0.4 } else { 1.8 }, rng),
                weight: rng.random_range(0.2..1.0),
            })
            .collect();
        let mu_atoms = (0..rng.random_range(1..=2))
            .map(|k| MatrixAtom {
                xi: psd_with_norm(d, if k == 0 { 0.6 } else { 1.5 }, rng),
                weight: random_psd(d, 0.3, rng),
            })
            .collect();
        (
            c,
            gamma,
            ScalarAtomMeasure::new(d, m_atoms).unwrap(),
            MatrixAtomMeasure::new(d, mu_atoms).unwrap(),
        )
    } else {
        (0.0, SymMat::zeros(d), ScalarAtomMeasure::empty(), MatrixAtomMeasure::empty())
    };
    let atoms: Vec<(SymMat, SymMat, f64)> = mu
        .atoms()
        .iter()
        .map(|at| (chi(&at.xi), at.weight.clone(), kernel_normaliser(&at.xi)))
        .collect();
    let drift = LinearDrift::from_forward(d, |x| {
        let xm = x.to_mat();
        let mut out = SymMat::from_mat(&(&h * &xm + &xm * h.transpose() + &a * &xm * a.transpose()));
        for (chi_xi, w, n) in &atoms {
            out = &out + &(chi_xi * (x.dot(w) / n));
        }
        out
    });
    AffineParams::new(alpha, b, drift, c, gamma, m, mu).unwrap()
}

/// Pure-jump set on `S_2^+`: `α = 0`, `b = I`, one constant atom `0.3I` with
/// weight 1 and one state-dependent atom `diag(0.6, 0.3)` with weight `I/2`.
pub fn pure_jump_example() -> AffineParams {
    let d = 2;
    let xi_mu = SymMat::from_diag(&[0.6, 0.3]);
    let w_mu = SymMat::scaled_identity(d, 0.5);
    let n_mu = xi_mu.norm().powi(2).min(1.0);
    let chi_mu = chi(&xi_mu);
    let w_for_drift = w_mu.clone();
    // Mean reversion plus the exact small-jump compensator of the μ atom.
    let drift = LinearDrift::from_forward(d, move |x| &(x * -1.0) + &(&chi_mu * (x.dot(&w_for_drift) / n_mu)));
    AffineParams::new(
        SymMat::zeros(d),
        SymMat::identity(d),
        drift,
        0.0,
        SymMat::zeros(d),
        ScalarAtomMeasure::new(
            d,
            vec![ScalarAtom {
                xi: SymMat::scaled_identity(d, 0.3),
                weight: 1.0,
            }],
        )
        .unwrap(),
        MatrixAtomMeasure::new(
            d,
            vec![MatrixAtom {
                xi: xi_mu,
                weight: w_mu,
            }],
        )
        .unwrap(),
    )
    .unwrap()
}
