mod common;

use std::collections::HashSet;

use mlmc_eig::sampling::{default_generating_vector, lattice_point, mc_sample, LatticeRule};
use proptest::prelude::*;

#[test]
fn mc_coordinates_are_uniform_in_mean() {
    let n = 100_000u64;
    let mean = (0..n).map(|i| mc_sample::<f64>(3, 0, i, 1).as_slice()[0]).sum::<f64>() / n as f64;
    assert!((mean - 0.5).abs() < 0.005);
}

#[test]
fn consecutive_indices_do_not_collide() {
    let firsts: HashSet<u64> = (0..10_000u64).map(|i| mc_sample::<f64>(5, 2, i, 3).as_slice()[0].to_bits()).collect();
    assert_eq!(firsts.len(), 10_000);
}

#[test]
fn lattice_small_examples() {
    let rule = LatticeRule::new(vec![1, 1], 4, vec![vec![0.0, 0.0]]).unwrap();
    assert_eq!(lattice_point(&rule, 2, 0).unwrap().as_slice(), &[0.5, 0.5]);
    assert_eq!(lattice_point(&rule, 0, 0).unwrap().as_slice(), &[0.0, 0.0]);
}

fn product_integrand(w: &[f64]) -> f64 {
    w.iter().map(|x| x + 0.5).product()
}

#[test]
fn shifted_lattice_average_is_unbiased() {
    let z = default_generating_vector();
    let (s, n, r) = (6, 1u64 << 10, 16);
    let rule = LatticeRule::with_random_shifts(&z, s, n, r, 21, 0).unwrap();
    let means: Vec<f64> = (0..r)
        .map(|q| (0..n).map(|k| product_integrand(lattice_point(&rule, k, q).unwrap().as_slice())).sum::<f64>() / n as f64)
        .collect();
    let m = means.iter().sum::<f64>() / r as f64;
    let var = means.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (r - 1) as f64;
    let se = (var / r as f64).sqrt();
    assert!((m - 1.0).abs() <= 3.0 * se.max(1e-15), "mean {m}, se {se}");
}

#[test]
fn qmc_error_decays_faster_than_monte_carlo() {
    let z = default_generating_vector();
    let (s, r) = (8, 32);
    let f = |w: &[f64]| w.iter().map(|x| 1.0 + 0.1 * (x - 0.5)).product::<f64>();
    let ms: Vec<u32> = (4..=12).collect();
    let rule = LatticeRule::with_random_shifts(&z, s, 1 << 12, r, 17, 0).unwrap();
    let mut ns = Vec::new();
    let mut mse = Vec::new();
    for &m in &ms {
        let n = 1u64 << m;
        let stride = 1u64 << (12 - m);
        let means: Vec<f64> = (0..r)
            .map(|q| (0..n).map(|k| f(lattice_point(&rule, k * stride, q).unwrap().as_slice())).sum::<f64>() / n as f64)
            .collect();
        let err = means.iter().map(|x| (x - 1.0).powi(2)).sum::<f64>() / r as f64;
        ns.push(n as f64);
        mse.push(err);
    }
    let slope = common::slope(&ns, &mse);
    assert!(slope <= -1.5, "slope {slope}");
}

#[test]
fn rejects_invalid_rules() {
    assert!(LatticeRule::new(vec![2, 3], 4, vec![vec![0.0, 0.0]]).is_err());
    assert!(LatticeRule::new(vec![1], 1 << 21, vec![vec![0.0]]).is_err());
    assert!(LatticeRule::new(vec![1], 8, vec![vec![1.0]]).is_err());
    assert!(LatticeRule::with_random_shifts(&[1, 3], 3, 8, 2, 0, 0).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn samples_are_pure_functions_of_their_key(seed in any::<u64>(), level in -2i64..8, index in any::<u64>()) {
        let a = mc_sample::<f64>(seed, level, index, 7);
        let b = mc_sample::<f64>(seed, level, index, 7);
        prop_assert_eq!(a.as_slice(), b.as_slice());
        prop_assert!(a.as_slice().iter().all(|x| (0.0..1.0).contains(x)));
    }

    #[test]
    fn shifts_translate_the_unshifted_lattice(m in 1u32..12, k in any::<u64>(), shift in prop::collection::vec(0.0..1.0f64, 5)) {
        let z = default_generating_vector()[..5].to_vec();
        let n = 1u64 << m;
        let k = k % n;
        let rule = LatticeRule::new(z, n, vec![vec![0.0; 5], shift.clone()]).unwrap();
        let base = lattice_point(&rule, k, 0).unwrap();
        let moved = lattice_point(&rule, k, 1).unwrap();
        for j in 0..5 {
            let expect = (base.as_slice()[j] + shift[j]).fract();
            let d = (moved.as_slice()[j] - expect).abs();
            prop_assert!(d < 1e-15 || (1.0 - d) < 1e-15);
        }
    }

    #[test]
    fn lattice_is_a_group(m in 1u32..12, a in any::<u64>(), b in any::<u64>()) {
        let z = default_generating_vector()[..4].to_vec();
        let n = 1u64 << m;
        let (a, b) = (a % n, b % n);
        let rule = LatticeRule::new(z, n, vec![vec![0.0; 4]]).unwrap();
        let (pa, pb) = (lattice_point(&rule, a, 0).unwrap(), lattice_point(&rule, b, 0).unwrap());
        let sum = lattice_point(&rule, (a + b) % n, 0).unwrap();
        for j in 0..4 {
            prop_assert_eq!((pa.as_slice()[j] + pb.as_slice()[j]).fract(), sum.as_slice()[j]);
        }
    }
}
