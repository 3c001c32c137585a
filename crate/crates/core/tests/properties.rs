mod common;

use affine_psd::jumps::{chi, compensator_drift, kernel_intensity, kernel_normaliser};
use affine_psd::params::{transform, validate_admissible};
use affine_psd::riccati::{growth_constant, r_of};
use affine_psd::symcone::{inner, is_psd, normal_cone_basis, preceq, project_psd, sqrt_psd};
use affine_psd::SymMat;
use common::*;
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::Rng;

fn dims() -> impl Strategy<Value = usize> {
    2usize..=4
}

/// Complementary pair `x = O diag(λ, 0) Oᵀ`, `u = O diag(0, w) Oᵀ` with rank split `r`.
fn complementary_pair(d: usize, rng: &mut rand_chacha::ChaCha8Rng) -> (SymMat, SymMat, DMatrix<f64>, usize) {
    let o = random_rotation(d, rng);
    let r = rng.random_range(1..d);
    let mut top = DMatrix::zeros(d, d);
    let lam = random_pd(r, 1.0, 0.05, rng).to_mat();
    top.view_mut((0, 0), (r, r)).copy_from(&lam);
    let mut bottom = DMatrix::zeros(d, d);
    let w = random_psd(d - r, 1.0, rng).to_mat();
    bottom.view_mut((r, r), (d - r, d - r)).copy_from(&w);
    let x = SymMat::from_mat(&(&o * top * o.transpose()));
    let u = SymMat::from_mat(&(&o * bottom * o.transpose()));
    (x, u, o, r)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn inner_matches_double_sum(d in dims(), seed in any::<u64>()) {
        let mut rng = rng(seed);
        let x = SymMat::from_mat(&gaussian_matrix(d, d, &mut rng).symmetric_part());
        let y = SymMat::from_mat(&gaussian_matrix(d, d, &mut rng).symmetric_part());
        let mut brute = 0.0;
        for i in 0..d {
            for j in 0..d {
                brute += x.get(i, j) * y.get(i, j);
            }
        }
        let v = inner(&x, &y).unwrap();
        prop_assert!((v - brute).abs() <= 1e-12 * (1.0 + brute.abs()));
        prop_assert_eq!(v, inner(&y, &x).unwrap());
    }

    #[test]
    fn eigen_decomposition_is_orthogonal_and_reconstructs(d in 1usize..=8, seed in any::<u64>()) {
        let mut rng = rng(seed);
        let x = SymMat::from_mat(&gaussian_matrix(d, d, &mut rng).symmetric_part());
        let e = x.eigen();
        let o = &e.rotation;
        let ortho = (o.transpose() * o - DMatrix::<f64>::identity(d, d)).norm();
        prop_assert!(ortho <= 1e-12 * d as f64);
        let back = e.reconstruct(|l| l);
        prop_assert!((&back - &x).norm() <= 1e-10 * (1.0 + x.norm()));
        prop_assert!(e.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn gram_matrices_are_psd(d in dims(), seed in any::<u64>()) {
        let mut rng = rng(seed);
        let v: Vec<f64> = gaussian_matrix(d, 1, &mut rng).iter().copied().collect();
        prop_assert!(is_psd(&SymMat::outer(&v), 0.0));
        prop_assert!(is_psd(&random_psd(d, 1.0, &mut rng), 1e-12));
    }

    #[test]
    fn sqrt_squares_back(d in dims(), seed in any::<u64>()) {
        let mut rng = rng(seed);
        let x = random_psd_rank(d, rng.random_range(0..=d), 1.0, &mut rng);
        let r = sqrt_psd(&x).unwrap();
        prop_assert!((&r.sandwich(&SymMat::identity(d)) - &x).norm() <= 1e-8 * (1.0 + x.norm()));
    }

    #[test]
    fn sqrt_of_square_is_identity_on_definite_inputs(d in dims(), seed in any::<u64>()) {
        let mut rng = rng(seed);
        let x = random_pd(d, 1.0, 1e-3, &mut rng);
        let sq = x.sandwich(&SymMat::identity(d));
        prop_assert!((&sqrt_psd(&sq).unwrap() - &x).norm() <= 1e-8 * (1.0 + x.norm()));
    }

    #[test]
    fn sqrt_of_square_on_singular_inputs_within_root_epsilon(d in dims(), seed in any::<u64>()) {
        let mut rng = rng(seed);
        let x = random_psd_rank(d, rng.random_range(0..d), 1.0, &mut rng);
        let sq = x.sandwich(&SymMat::identity(d));
        // Round-off of order ε‖x‖² in the null eigenvalues of x² becomes √ε‖x‖ after the root.
        let bound = 4.0 * (d as f64 * f64::EPSILON).sqrt() * (1.0 + x.norm());
        prop_assert!((&sqrt_psd(&sq).unwrap() - &x).norm() <= bound);
    }

    #[test]
    fn projection_is_idempotent_and_nearest(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let x = SymMat::from_mat(&gaussian_matrix(2, 2, &mut rng).symmetric_part());
        let p = project_psd(&x);
        prop_assert!(p.min_eigenvalue() >= -1e-14);
        prop_assert!((&project_psd(&p) - &p).norm() <= 1e-14);
        let dist = (&p - &x).norm();
        // In 2×2 the distance to the cone is the norm of the negative eigenvalues.
        let neg: f64 = x.eigen().eigenvalues.iter().map(|l| l.min(0.0).powi(2)).sum::<f64>().sqrt();
        prop_assert!((dist - neg).abs() <= 1e-12);
        for _ in 0..50 {
            let y = random_psd_rank(2, rng.random_range(0..=2), 2.0, &mut rng);
            prop_assert!(dist <= (&x - &y).norm() + 1e-12);
        }
    }

    #[test]
    fn order_is_antisymmetric(d in dims(), seed in any::<u64>()) {
        let mut rng = rng(seed);
        let x = random_psd(d, 1.0, &mut rng);
        let y = &x + &random_psd_rank(d, rng.random_range(0..=d), 1.0, &mut rng);
        prop_assert!(preceq(&x, &y, 1e-10).unwrap());
        if preceq(&y, &x, 1e-10).unwrap() {
            prop_assert!((&x - &y).norm() <= 1e-8 * (1.0 + x.norm()));
        }
    }

    #[test]
    fn normal_cone_generators_annihilate_boundary_point(d in dims(), seed in any::<u64>()) {
        let mut rng = rng(seed);
        let (x, _, _, r) = complementary_pair(d, &mut rng);
        let gens = normal_cone_basis(&x, 1e-9);
        let k = d - r;
        prop_assert_eq!(gens.len(), k * (k + 1) / 2);
        for u in &gens {
            prop_assert!(is_psd(u, 0.0) || u.min_eigenvalue() > -1e-14);
            prop_assert!(inner(u, &x).unwrap().abs() <= 1e-10);
            let prod = u.to_mat() * x.to_mat();
            prop_assert!(prod.norm() <= 1e-9);
        }
    }

    #[test]
    fn projector_complement_generators(d in dims(), seed in any::<u64>()) {
        let mut rng = rng(seed);
        let o = random_rotation(d, &mut rng);
        let r = rng.random_range(1..d);
        let mut diag = DMatrix::zeros(d, d);
        for i in 0..r {
            diag[(i, i)] = 1.0;
        }
        let p = &o * diag * o.transpose();
        let q = DMatrix::<f64>::identity(d, d) - &p;
        for v in normal_cone_basis(&SymMat::from_mat(&p), 1e-9) {
            let vm = v.to_mat();
            prop_assert!((&q * &vm * &q - &vm).norm() <= 1e-10);
        }
    }

    #[test]
    fn intensities_are_nonnegative_and_compensator_sums(d in dims(), seed in any::<u64>()) {
        let mut rng = rng(seed);
        let p = random_admissible(d, true, &mut rng);
        let x = random_psd_rank(d, rng.random_range(0..=d), 1.0, &mut rng);
        let lam = kernel_intensity(&p.mu, &x).unwrap();
        prop_assert!(lam.iter().all(|&l| l >= 0.0));
        let mut brute = SymMat::zeros(d);
        for a in p.mu.atoms() {
            brute = &brute + &(&chi(&a.xi) * (x.dot(&a.weight) / kernel_normaliser(&a.xi)));
        }
        prop_assert!((&compensator_drift(&p.mu, &x).unwrap() - &brute).norm() <= 1e-12 * (1.0 + brute.norm()));
        let doubled = kernel_intensity(&p.mu, &(&x * 2.0)).unwrap();
        for (a, b) in lam.iter().zip(&doubled) {
            prop_assert!((2.0 * a - b).abs() <= 1e-12 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn transversal_terms_are_finite_and_nonnegative(d in dims(), seed in any::<u64>()) {
        let mut rng = rng(seed);
        let p = random_admissible(d, true, &mut rng);
        let (x, u, _, _) = complementary_pair(d, &mut rng);
        let lam = kernel_intensity(&p.mu, &x).unwrap();
        for (a, l) in p.mu.atoms().iter().zip(lam) {
            let term = chi(&a.xi).dot(&u) * l;
            prop_assert!(term.is_finite());
            prop_assert!(term >= -1e-12);
        }
    }

    #[test]
    fn adjoint_identity(d in dims(), seed in any::<u64>()) {
        let mut rng = rng(seed);
        let p = random_admissible(d, seed % 2 == 0, &mut rng);
        let x = SymMat::from_mat(&gaussian_matrix(d, d, &mut rng).symmetric_part());
        let u = SymMat::from_mat(&gaussian_matrix(d, d, &mut rng).symmetric_part());
        let lhs = p.drift.apply(&x).dot(&u);
        let rhs = p.drift.adjoint(&u).dot(&x);
        let scale = 1.0 + p.drift.apply(&x).norm() * u.norm();
        prop_assert!((lhs - rhs).abs() <= 1e-10 * scale);
    }

    #[test]
    fn larger_constant_drift_stays_admissible(d in dims(), seed in any::<u64>()) {
        let mut rng = rng(seed);
        let mut p = random_admissible(d, seed % 2 == 0, &mut rng);
        prop_assert!(validate_admissible(&p, 8, seed).unwrap().passed());
        p.b = &p.b + &random_psd_rank(d, rng.random_range(0..=d), 1.0, &mut rng);
        prop_assert!(validate_admissible(&p, 8, seed).unwrap().passed());
    }

    #[test]
    fn transform_preserves_admissibility(d in dims(), seed in any::<u64>()) {
        let mut rng = rng(seed);
        let p = random_admissible(d, seed % 2 == 0, &mut rng);
        let g = random_invertible(d, &mut rng);
        let report = validate_admissible(&transform(&p, &g).unwrap(), 8, seed).unwrap();
        prop_assert!(report.passed(), "{}", report);
    }

    #[test]
    fn riccati_field_is_quasi_monotone(d in dims(), seed in any::<u64>()) {
        let mut rng = rng(seed);
        let p = random_admissible(d, seed % 2 == 0, &mut rng);
        let (x, w, _, _) = complementary_pair(d, &mut rng);
        let u = random_psd_rank(d, rng.random_range(0..=d), 1.0, &mut rng);
        let v = &u + &w;
        let gap = (&r_of(&p, &v) - &r_of(&p, &u)).dot(&x);
        prop_assert!(gap >= -1e-9, "gap {}", gap);
    }

    #[test]
    fn riccati_field_growth_bound(d in dims(), seed in any::<u64>(), scale in 0.0f64..20.0) {
        let mut rng = rng(seed);
        let p = random_admissible(d, seed % 2 == 0, &mut rng);
        let u = &random_psd_rank(d, rng.random_range(0..=d), 1.0, &mut rng) * scale;
        let k = growth_constant(&p);
        prop_assert!(u.dot(&r_of(&p, &u)) <= 0.5 * k * (u.dot(&u) + 1.0) + 1e-12);
    }
}
