mod common;

use mlmc_eig::fields::{center_grid, eval_kappa, eval_velocity, FieldConfig, SampleVector, VelocityField};
use mlmc_eig::mesh::{build_mesh, prolongate};
use proptest::prelude::*;

#[test]
fn finest_grid_has_16129_unknowns() {
    let m = build_mesh(4, 0.125_f64).unwrap();
    assert_eq!(m.h(), 2f64.powi(-7));
    assert_eq!(m.n_interior(), 16129);
}

#[test]
fn coarse_nodes_are_fine_nodes() {
    let (c, f) = (build_mesh(0, 0.125_f64).unwrap(), build_mesh(1, 0.125_f64).unwrap());
    for p in c.nodes() {
        assert!(f.nodes().iter().any(|q| (p[0] - q[0]).abs() < 1e-15 && (p[1] - q[1]).abs() < 1e-15));
    }
}

#[test]
fn all_ones_kappa_matches_direct_sum() {
    let cfg = common::case1();
    let w = SampleVector::new(vec![1.0; 25]).unwrap();
    let x = [0.5, 0.5];
    let mut sum = 0.0;
    for i in 0..5 {
        for j in 0..5 {
            let (cx, cy) = (i as f64 / 4.0, j as f64 / 4.0);
            sum += (-12.5 * ((x[0] - cx).powi(2) + (x[1] - cy).powi(2)).sqrt()).exp();
        }
    }
    let k = eval_kappa(&cfg, &w, x).unwrap();
    assert!((k - sum.exp()).abs() <= 1e-14 * k);
}

#[test]
fn stream_velocity_on_line_through_single_center() {
    let c = [0.3, 0.6];
    let cfg = FieldConfig::<f64>::new(vec![[0.9, 0.9]], 12.5, VelocityField::Stream { centers: vec![c] }).unwrap();
    let w = SampleVector::new(vec![0.0, 1.0]).unwrap();
    let x = [0.5, 0.6];
    let a = eval_velocity(&cfg, &w, x).unwrap();
    let r: f64 = 0.2;
    let k = (-12.5 * r).exp();
    let s = k.exp();
    assert!(a[0].abs() < 1e-14);
    assert!((a[1] - s * 12.5 * k).abs() < 1e-12 * a[1].abs());
}

fn sample(s: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0..=1.0f64, s)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn prolongation_is_linear(u in sample(49), v in sample(49), a in -3.0..3.0f64, b in -3.0..3.0f64) {
        let (c, f) = (build_mesh(0, 0.125_f64).unwrap(), build_mesh(1, 0.125_f64).unwrap());
        let comb: Vec<f64> = u.iter().zip(&v).map(|(x, y)| a * x + b * y).collect();
        let lhs = prolongate(&c, &f, &comb).unwrap();
        let (pu, pv) = (prolongate(&c, &f, &u).unwrap(), prolongate(&c, &f, &v).unwrap());
        for i in 0..lhs.len() {
            prop_assert!((lhs[i] - (a * pu[i] + b * pv[i])).abs() < 1e-13);
        }
    }

    #[test]
    fn prolongation_keeps_coincident_values_and_composes(u in sample(49)) {
        let m: Vec<_> = (0..3).map(|l| build_mesh(l, 0.125_f64).unwrap()).collect();
        let once = prolongate(&m[0], &m[1], &u).unwrap();
        for (k, &g) in m[0].interior_nodes().iter().enumerate() {
            let p = m[0].nodes()[g];
            let fine = m[1].interior_nodes().iter().position(|&q| {
                let r = m[1].nodes()[q];
                (r[0] - p[0]).abs() < 1e-15 && (r[1] - p[1]).abs() < 1e-15
            }).unwrap();
            prop_assert_eq!(once[fine], u[k]);
        }
        let twice = prolongate(&m[1], &m[2], &once).unwrap();
        let direct = prolongate(&m[0], &m[2], &u).unwrap();
        for (x, y) in twice.iter().zip(&direct) {
            prop_assert!((x - y).abs() < 1e-13);
        }
    }

    #[test]
    fn kappa_bounds(w in sample(25), x in 0.0..=1.0f64, y in 0.0..=1.0f64) {
        let cfg = common::case1();
        let k = eval_kappa(&cfg, &SampleVector::new(w).unwrap(), [x, y]).unwrap();
        prop_assert!((1.0..=25f64.exp()).contains(&k));
    }

    #[test]
    fn stream_field_is_divergence_free(w in sample(50), x in 0.05..0.95f64, y in 0.05..0.95f64) {
        let cfg = FieldConfig::new(center_grid(5, 5), 12.5, VelocityField::Stream { centers: center_grid(5, 5) }).unwrap();
        let w = SampleVector::new(w).unwrap();
        let d = 1e-6;
        let a = |p: [f64; 2]| eval_velocity(&cfg, &w, p).unwrap();
        let too_close = center_grid::<f64>(5, 5).iter().any(|c| ((x - c[0]).powi(2) + (y - c[1]).powi(2)).sqrt() < 1e-3);
        prop_assume!(!too_close);
        let div = (a([x + d, y])[0] - a([x - d, y])[0]) / (2.0 * d) + (a([x, y + d])[1] - a([x, y - d])[1]) / (2.0 * d);
        let v = a([x, y]);
        prop_assert!(div.abs() <= 1e-5 * v[0].hypot(v[1]).max(1.0), "div {} at ({}, {})", div, x, y);
    }

    #[test]
    fn field_evaluation_is_deterministic(w in sample(50), x in 0.0..=1.0f64, y in 0.0..=1.0f64) {
        let cfg = common::case3(5);
        let w = SampleVector::new(w).unwrap();
        prop_assert_eq!(eval_kappa(&cfg, &w, [x, y]).unwrap().to_bits(), eval_kappa(&cfg, &w, [x, y]).unwrap().to_bits());
        if let (Ok(a), Ok(b)) = (eval_velocity(&cfg, &w, [x, y]), eval_velocity(&cfg, &w, [x, y])) {
            prop_assert_eq!(a.map(f64::to_bits), b.map(f64::to_bits));
        }
    }
}
