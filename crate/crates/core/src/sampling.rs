//! Reproducible sample streams: counter-keyed Monte Carlo points and randomly
//! shifted rank-1 lattice points.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::fields::SampleVector;
use crate::scalar::Real;

/// Default generating vector: embedded CBC construction with product weights
/// `1/j^2`, 100 dimensions, good for every `N = 2^4 .. 2^16`.
const DEFAULT_LATTICE: &str = include_str!("../data/lattice_default.txt");

/// Largest number of lattice points accepted.
pub const MAX_LATTICE_POINTS: u64 = 1 << 20;

/// Level used for shift streams.
pub const SHIFT_LEVEL: i64 = -1;

/// SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// 64-bit key of the stream `(seed, level, index)`.
pub fn stream_key(seed: u64, level: i64, index: u64) -> u64 {
    let mut k = splitmix64(seed);
    k = splitmix64(k ^ level as u64);
    splitmix64(k ^ index)
}

/// Identifies one deterministic sample stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SampleStream {
    pub seed: u64,
    pub level: i64,
    pub kind: StreamKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StreamKind {
    Mc,
    Qmc { shift_index: usize },
}

/// `s` uniform coordinates in `[0, 1)` for sample `index` on `level`.
pub fn mc_sample<T: Real>(seed: u64, level: i64, index: u64, s: usize) -> SampleVector<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(stream_key(seed, level, index));
    let omega = (0..s).map(|_| T::lit(rng.gen::<f64>())).collect();
    SampleVector::new(omega).expect("uniform draws lie in [0, 1)")
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Rank-1 lattice `{k z / N + shift}` with `R` shifts.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeRule {
    z: Vec<u64>,
    n: u64,
    shifts: Vec<Vec<f64>>,
}

impl LatticeRule {
    pub fn new(z: Vec<u64>, n: u64, shifts: Vec<Vec<f64>>) -> Result<Self> {
        if n == 0 || n > MAX_LATTICE_POINTS {
            return Err(Error::InvalidLattice(format!("N = {n} outside 1..=2^20")));
        }
        if let Some(bad) = z.iter().find(|&&zj| zj == 0 || gcd(zj, n) != 1) {
            return Err(Error::InvalidLattice(format!("component {bad} is not coprime to N = {n}")));
        }
        if shifts.is_empty() {
            return Err(Error::InvalidLattice("at least one shift is required".into()));
        }
        for d in &shifts {
            if d.len() != z.len() {
                return Err(Error::DimensionMismatch { expected: z.len(), got: d.len() });
            }
            if !d.iter().all(|&x| (0.0..1.0).contains(&x)) {
                return Err(Error::InvalidLattice("shift coordinates must lie in [0, 1)".into()));
            }
        }
        Ok(Self { z, n, shifts })
    }

    /// First `s` components of `z` with `r` shifts drawn from the stream
    /// `(seed, SHIFT_LEVEL, stream_offset + shift)`.
    pub fn with_random_shifts(z: &[u64], s: usize, n: u64, r: usize, seed: u64, stream_offset: u64) -> Result<Self> {
        if z.len() < s {
            return Err(Error::InvalidLattice(format!(
                "generating vector has {} components, {s} needed",
                z.len()
            )));
        }
        let shifts = (0..r)
            .map(|i| mc_sample::<f64>(seed, SHIFT_LEVEL, stream_offset + i as u64, s).as_slice().to_vec())
            .collect();
        Self::new(z[..s].to_vec(), n, shifts)
    }

    pub fn z(&self) -> &[u64] {
        &self.z
    }

    pub fn n_points(&self) -> u64 {
        self.n
    }

    pub fn n_shifts(&self) -> usize {
        self.shifts.len()
    }

    pub fn dim(&self) -> usize {
        self.z.len()
    }

    pub fn shift(&self, i: usize) -> &[f64] {
        &self.shifts[i]
    }
}

/// Point `k` of the lattice translated by shift `shift_index`, each
/// component reduced into `[0, 1)`.
pub fn lattice_point(rule: &LatticeRule, k: u64, shift_index: usize) -> Result<SampleVector<f64>> {
    if k >= rule.n {
        return Err(Error::InvalidInput(format!("lattice index {k} >= N = {}", rule.n)));
    }
    let shift = rule
        .shifts
        .get(shift_index)
        .ok_or_else(|| Error::InvalidInput(format!("shift index {shift_index} >= R = {}", rule.shifts.len())))?;
    let n = rule.n as u128;
    let omega = rule
        .z
        .iter()
        .zip(shift)
        .map(|(&zj, &dj)| {
            let base = ((k as u128 * zj as u128) % n) as f64 / rule.n as f64;
            let x = base + dj;
            if x >= 1.0 {
                x - 1.0
            } else {
                x
            }
        })
        .collect();
    SampleVector::new(omega)
}

/// Parses a generating vector: one positive integer per line, `#` starts a
/// comment, blank lines are ignored.
pub fn parse_generating_vector(text: &str) -> Result<Vec<u64>> {
    let mut z = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let v: u64 = body
            .parse()
            .map_err(|_| Error::InvalidLattice(format!("line {}: '{body}' is not a positive integer", lineno + 1)))?;
        if v == 0 {
            return Err(Error::InvalidLattice(format!("line {}: zero component", lineno + 1)));
        }
        z.push(v);
    }
    if z.is_empty() {
        return Err(Error::InvalidLattice("no generating vector components found".into()));
    }
    Ok(z)
}

pub fn load_generating_vector(path: &Path) -> Result<Vec<u64>> {
    parse_generating_vector(&std::fs::read_to_string(path)?)
}

pub fn default_generating_vector() -> Vec<u64> {
    parse_generating_vector(DEFAULT_LATTICE).expect("embedded lattice file is valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn direct_formula() {
        let rule = LatticeRule::new(vec![1, 1], 4, vec![vec![0.0, 0.0]]).unwrap();
        assert_eq!(lattice_point(&rule, 2, 0).unwrap().as_slice(), &[0.5, 0.5]);
        assert_eq!(lattice_point(&rule, 0, 0).unwrap().as_slice(), &[0.0, 0.0]);
        assert!(lattice_point(&rule, 4, 0).is_err());
        assert!(lattice_point(&rule, 1, 1).is_err());
    }

    #[test]
    fn rejects_non_coprime_components() {
        assert!(LatticeRule::new(vec![2, 3], 8, vec![vec![0.0, 0.0]]).is_err());
        assert!(LatticeRule::new(vec![1], 8, vec![]).is_err());
        assert!(LatticeRule::new(vec![1], 8, vec![vec![1.0]]).is_err());
    }

    #[test]
    fn parser_handles_comments() {
        let z = parse_generating_vector("# header\n1\n\n  433 # trailing\n").unwrap();
        assert_eq!(z, vec![1, 433]);
        assert!(parse_generating_vector("1\nx\n").is_err());
        assert!(parse_generating_vector("# only\n").is_err());
    }

    #[test]
    fn default_vector_is_usable() {
        let z = default_generating_vector();
        assert!(z.len() >= 100);
        assert!(z.iter().all(|&v| v % 2 == 1));
    }

    #[test]
    fn streams_are_pure_and_distinct() {
        let a = mc_sample::<f64>(7, 2, 11, 5);
        assert_eq!(a, mc_sample(7, 2, 11, 5));
        assert_ne!(a, mc_sample(7, 2, 12, 5));
        assert_ne!(a, mc_sample(7, 3, 11, 5));
        assert_ne!(a, mc_sample(8, 2, 11, 5));
    }
}
