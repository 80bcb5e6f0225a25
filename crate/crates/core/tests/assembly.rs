mod common;

use mlmc_eig::assembly::{assemble, assemble_unconstrained, peclet, tau, Discretization};
use mlmc_eig::fields::{eval_kappa, eval_velocity, SampleVector};
use mlmc_eig::mesh::build_mesh;
use mlmc_eig::sampling::mc_sample;
use proptest::prelude::*;

#[test]
fn galerkin_matches_reference_assembly() {
    let mesh = build_mesh(1, 0.125_f64).unwrap();
    for cfg in [common::case1(), common::case3(3)] {
        for i in 0..3 {
            let w = mc_sample(11, 0, i, cfg.dim());
            let sys = assemble(&mesh, &cfg, &w, Discretization::Galerkin, 1.0).unwrap();
            let (ra, rm) = common::reference_galerkin(
                &mesh,
                |x| eval_kappa(&cfg, &w, x).unwrap(),
                |x| eval_velocity(&cfg, &w, x).unwrap(),
            );
            let (a, m) = common::dense_pair(&sys);
            assert!((a - &ra).amax() <= 1e-11 * ra.amax());
            assert!((m - &rm).amax() <= 1e-15);
        }
    }
}

#[test]
fn homotopy_scales_convection_only() {
    let mesh = build_mesh(0, 0.125_f64).unwrap();
    let cfg = common::case1();
    let w = mc_sample(3, 0, 0, 25);
    let full = assemble(&mesh, &cfg, &w, Discretization::Galerkin, 1.0).unwrap();
    let half = assemble(&mesh, &cfg, &w, Discretization::Galerkin, 0.5).unwrap();
    let none = assemble(&mesh, &cfg, &w, Discretization::Galerkin, 0.0).unwrap();
    let (a1, _) = common::dense_pair(&full);
    let (ah, _) = common::dense_pair(&half);
    let (a0, _) = common::dense_pair(&none);
    assert!((&ah - (&a0 + (&a1 - &a0) * 0.5)).amax() < 1e-12);
}

#[test]
fn pure_diffusion_pencil_is_symmetric() {
    let mesh = build_mesh(1, 0.125_f64).unwrap();
    let cfg = common::case1();
    let w = mc_sample(5, 0, 1, 25);
    for kind in [Discretization::Galerkin, Discretization::Supg] {
        let sys = assemble(&mesh, &cfg, &w, kind, 0.0).unwrap();
        assert!(sys.a.asymmetry() < 1e-13);
        assert!(sys.m.asymmetry() < 1e-16);
    }
    let g = assemble(&mesh, &cfg, &w, Discretization::Galerkin, 1.0).unwrap();
    assert!(g.m.asymmetry() < 1e-16);
}

#[test]
fn unconstrained_mass_is_partition_of_unity() {
    let mesh = build_mesh(2, 0.125_f64).unwrap();
    let cfg = common::case1();
    let w = mc_sample(9, 0, 0, 25);
    let sys = assemble_unconstrained(&mesh, &cfg, &w, Discretization::Galerkin, 1.0).unwrap();
    let total: f64 = sys.m.values().iter().sum();
    assert!((total - 1.0).abs() < 1e-13);
}

#[test]
fn diffusion_eigenvalue_converges_to_two_pi_squared() {
    let cfg = common::unit_kappa([0.0, 0.0]);
    let w = SampleVector::zeros(1);
    let exact = 2.0 * std::f64::consts::PI.powi(2);
    let err: Vec<f64> = (0..3)
        .map(|l| {
            let sys = assemble(&build_mesh(l, 0.125).unwrap(), &cfg, &w, Discretization::Galerkin, 1.0).unwrap();
            (common::dense_smallest(&sys).re - exact).abs()
        })
        .collect();
    assert!(err[0] > err[1] && err[1] > err[2]);
    assert!((err[1] / err[2]).log2() > 1.8);
}

#[test]
fn peclet_and_tau_examples() {
    let cfg = common::unit_kappa([50.0, 0.0]);
    let w = SampleVector::zeros(1);
    let x = [0.3, 0.7];
    assert_eq!(peclet(0.125, x, &cfg, &w).unwrap(), 3.125);
    assert_eq!(tau(0.125, x, &cfg, &w, 1.0).unwrap(), 1.25e-3);
    let slow = common::unit_kappa([20.0, 0.0]);
    let h = 2f64.powi(-7);
    assert_eq!(peclet(h, x, &slow, &w).unwrap(), 0.078125);
    assert!((tau(h, x, &slow, &w, 1.0).unwrap() - h * h / 12.0).abs() < 1e-20);
    let still = common::unit_kappa([0.0, 0.0]);
    assert_eq!(peclet(0.125, x, &still, &w).unwrap(), 0.0);
    assert!((tau(0.125, x, &still, &w, 1.0).unwrap() - 0.125f64.powi(2) / 12.0).abs() < 1e-18);
}

#[test]
fn f32_pencil_tracks_f64() {
    let (m32, m64) = (build_mesh(0, 0.125_f32).unwrap(), build_mesh(0, 0.125_f64).unwrap());
    let cfg64 = common::case1();
    let cfg32 = mlmc_eig::FieldConfig32::on_grid(5, 5, 12.5, mlmc_eig::fields::VelocityField::Constant([20.0, 0.0])).unwrap();
    let w: SampleVector<f64> = mc_sample(2, 0, 0, 25);
    let s64 = assemble(&m64, &cfg64, &w, Discretization::Supg, 1.0).unwrap();
    let s32 = assemble(&m32, &cfg32, &w.cast::<f32>(), Discretization::Supg, 1.0).unwrap();
    for (x, y) in s32.a.values().iter().zip(s64.a.values()) {
        assert!((*x as f64 - y).abs() <= 1e-5 * y.abs().max(1.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn galerkin_convection_is_skew(a1 in -60.0..60.0f64, a2 in -60.0..60.0f64, seed in 0u64..1000) {
        let mesh = build_mesh(0, 0.125_f64).unwrap();
        let cfg = common::unit_kappa([a1, a2]);
        let w = mc_sample(seed, 0, 0, 1);
        let with = assemble(&mesh, &cfg, &w, Discretization::Galerkin, 1.0).unwrap();
        let without = assemble(&mesh, &cfg, &w, Discretization::Galerkin, 0.0).unwrap();
        let (a, _) = common::dense_pair(&with);
        let (k, _) = common::dense_pair(&without);
        let b = a - k;
        prop_assert!((&b + b.transpose()).amax() <= 1e-12);
    }

    #[test]
    fn supg_equals_galerkin_without_convection(seed in 0u64..1000) {
        let mesh = build_mesh(0, 0.125_f64).unwrap();
        let cfg = common::case3(3);
        let w = mc_sample(seed, 0, 0, cfg.dim());
        let g = assemble(&mesh, &cfg, &w, Discretization::Galerkin, 0.0).unwrap();
        let s = assemble(&mesh, &cfg, &w, Discretization::Supg, 0.0).unwrap();
        prop_assert_eq!(g.a.values(), s.a.values());
        prop_assert_eq!(g.m.values(), s.m.values());
    }

    #[test]
    fn unconstrained_diffusion_annihilates_constants(seed in 0u64..1000) {
        let mesh = build_mesh(1, 0.125_f64).unwrap();
        let cfg = common::case1();
        let w = mc_sample(seed, 0, 0, 25);
        let sys = assemble_unconstrained(&mesh, &cfg, &w, Discretization::Galerkin, 0.0).unwrap();
        let r = sys.a.matvec(&vec![1.0; sys.n()]);
        prop_assert!(r.iter().all(|v| v.abs() < 1e-11));
    }
}
