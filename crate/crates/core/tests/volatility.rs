mod common;

use affine_psd::simulate::{phi_n, s_eps_n, sigma_kl_reg, strato_correction, viability_audit};
use affine_psd::symcone::sqrt_psd;
use affine_psd::SymMat;
use common::*;
use nalgebra::DMatrix;
use rand::Rng;

/// `½ Σ_{k,l} Dσ^{kl}(x)[σ^{kl}(x)]` by central differences along each direction.
fn strato_by_differences(x: &SymMat, sigma: &DMatrix<f64>, eps: f64, n: f64) -> SymMat {
    let d = x.dim();
    let tau = 1e-5;
    let mut out = SymMat::zeros(d);
    for k in 0..d {
        for l in 0..d {
            let dir = sigma_kl_reg(x, sigma, eps, n, k, l).unwrap();
            let plus = sigma_kl_reg(&(x + &(&dir * tau)), sigma, eps, n, k, l).unwrap();
            let minus = sigma_kl_reg(&(x - &(&dir * tau)), sigma, eps, n, k, l).unwrap();
            out = &out + &(&(&plus - &minus) * (0.5 / (2.0 * tau)));
        }
    }
    out
}

fn check_against_differences(x: &SymMat, sigma: &DMatrix<f64>, eps: f64, n: f64) {
    let closed = strato_correction(x, sigma, eps, n).unwrap();
    let fd = strato_by_differences(x, sigma, eps, n);
    assert!((&closed - &fd).norm() <= 1e-4, "closed {closed:?} vs fd {fd:?}");
}

#[test]
fn correction_matches_differences_at_interior_points() {
    let mut rng = rng(31);
    for k in 0..30 {
        let d = 2 + k % 2;
        let alpha = random_pd(d, 1.0, 0.05, &mut rng);
        let sigma = sqrt_psd(&alpha).unwrap().to_mat();
        let x = random_pd(d, 1.0, 0.2, &mut rng);
        check_against_differences(&x, &sigma, 0.1, 1e6);
    }
}

#[test]
fn correction_depends_on_the_factor_only_through_alpha() {
    let mut rng = rng(32);
    for k in 0..10 {
        let d = 2 + k % 2;
        let alpha = random_pd(d, 1.0, 0.05, &mut rng);
        let sym = sqrt_psd(&alpha).unwrap().to_mat();
        let rotated = random_rotation(d, &mut rng) * &sym;
        let x = random_pd(d, 1.0, 0.2, &mut rng);
        check_against_differences(&x, &rotated, 0.1, 1e6);
        let a = strato_correction(&x, &sym, 0.1, 1e6).unwrap();
        let b = strato_correction(&x, &rotated, 0.1, 1e6).unwrap();
        assert!((&a - &b).norm() < 1e-12);
    }
}

#[test]
fn correction_matches_differences_inside_the_cutoff_band() {
    let mut rng = rng(33);
    for k in 0..20 {
        let d = 2 + k % 2;
        let alpha = random_pd(d, 1.0, 0.05, &mut rng);
        let sigma = sqrt_psd(&alpha).unwrap().to_mat();
        let raw = random_pd(d, 1.0, 0.2, &mut rng);
        let x = &raw * (rng.random_range(1.2..1.8) / raw.norm());
        let phi = phi_n(&x, 1.0);
        assert!(phi < 1.0 && phi > 0.5);
        check_against_differences(&x, &sigma, 0.1, 1.0);
    }
}

#[test]
fn regularised_root_tends_to_cut_root() {
    let mut rng = rng(34);
    for k in 0..20 {
        let d = 2 + k % 2;
        let x = random_psd_rank(d, rng.random_range(0..=d), 2.0, &mut rng);
        for n in [1.0, 1e6] {
            let s = s_eps_n(&x, 1e-12, n).unwrap();
            let direct = sqrt_psd(&(&x * phi_n(&x, n))).unwrap();
            assert!((&s - &direct).norm() <= 1e-5);
        }
    }
}

#[test]
fn random_admissible_sets_pass_the_audit() {
    let mut rng = rng(35);
    for k in 0..10 {
        let d = 2 + k % 2;
        let p = random_admissible(d, k % 2 == 0, &mut rng);
        let r = viability_audit(&p, 1e-6, 1e6, 100, 35 + k as u64).unwrap();
        assert!(r.passed(), "{r:?}");
    }
}
