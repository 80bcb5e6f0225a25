//! Multilevel quasi-Monte Carlo with randomly shifted embedded lattice rules.

use std::time::Instant;

use serde::Serialize;

use super::mlmc::{galerkin_screen, level_stats};
use super::problem::{Problem, SampleOutcome};
use super::{assert_positive, fit_rates, mean_var, Executor, LevelStats, MLResult, Method, DEFAULT_ALPHA};
use crate::error::{Error, Result};
use crate::sampling::{lattice_point, mc_sample, LatticeRule};

#[derive(Debug, Clone, PartialEq)]
pub struct MlqmcOptions {
    pub eps: f64,
    pub levels: Option<usize>,
    pub max_level: usize,
    /// QMC variance decay exponent, `var ~ N^(-1/eta)`.
    pub eta: f64,
    /// Number of random shifts.
    pub shifts: usize,
    /// Variance decay rate of the level differences in `h`.
    pub beta: f64,
    pub alpha: Option<f64>,
    pub seed: u64,
    pub z: Vec<u64>,
    /// Largest admissible number of lattice points per shift.
    pub max_points: u64,
}

impl MlqmcOptions {
    pub fn new(eps: f64, seed: u64, z: Vec<u64>) -> Self {
        Self {
            eps,
            levels: None,
            max_level: 6,
            eta: 0.61,
            shifts: 32,
            beta: 4.0,
            alpha: None,
            seed,
            z,
            max_points: 1 << 16,
        }
    }

    pub fn with_levels(mut self, l: usize) -> Self {
        self.levels = Some(l);
        self
    }

    fn validate(&self, s: usize) -> Result<()> {
        if !(self.eps > 0.0) {
            return Err(Error::InvalidInput(format!("eps must be positive, got {}", self.eps)));
        }
        if !(self.eta > 0.5 && self.eta <= 1.0) {
            return Err(Error::InvalidInput(format!("eta must lie in (1/2, 1], got {}", self.eta)));
        }
        if self.shifts < 8 {
            return Err(Error::InvalidInput(format!("at least 8 shifts are needed, got {}", self.shifts)));
        }
        if self.z.len() < s {
            return Err(Error::InvalidLattice(format!("generating vector has {} components, {s} needed", self.z.len())));
        }
        Ok(())
    }
}

/// Lattice samples on one level: `values[r][k]` for shift `r` and point `k`
/// of the current `n`-point rule.
struct QmcLevel {
    level: usize,
    n: u64,
    values: Vec<Vec<SampleOutcome>>,
}

impl QmcLevel {
    fn rule(&self, opts: &MlqmcOptions, s: usize, n: u64) -> Result<LatticeRule> {
        LatticeRule::with_random_shifts(&opts.z, s, n, opts.shifts, opts.seed, (self.level * opts.shifts) as u64)
    }

    /// Grows the rule to `target` points (a power of two) reusing the
    /// embedded points already evaluated.
    fn grow(&mut self, problem: &Problem, exec: &Executor, opts: &MlqmcOptions, target: u64) -> Result<()> {
        let s = problem.dim();
        let r_count = opts.shifts as u64;
        let level = self.level;
        while self.n < target || self.values.is_empty() {
            let n_new = if self.values.is_empty() { 1 } else { 2 * self.n };
            if n_new > opts.max_points {
                return Err(Error::InvalidLattice(format!(
                    "level {level} needs more than {} lattice points",
                    opts.max_points
                )));
            }
            let rule = self.rule(opts, s, n_new)?;
            // Fresh rule: all points; doubled rule: only the odd indices.
            let (stride, offset, count) = if self.values.is_empty() { (1, 0, n_new) } else { (2, 1, self.n) };
            let fresh = exec.map(0..r_count * count, |flat| {
                let (r, j) = ((flat / count) as usize, flat % count);
                let k = offset + stride * j;
                let omega = lattice_point(&rule, k, r)?;
                problem
                    .sample_difference(level, &omega, 1.0, 1.0)
                    .map_err(|e| Error::Sample { level, index: flat, source: Box::new(e) })
            })?;
            let mut values = Vec::with_capacity(opts.shifts);
            for r in 0..opts.shifts {
                let new = &fresh[r * count as usize..(r + 1) * count as usize];
                if self.values.is_empty() {
                    values.push(new.to_vec());
                } else {
                    let old = &self.values[r];
                    let mut merged = Vec::with_capacity(2 * old.len());
                    for (a, b) in old.iter().zip(new) {
                        merged.push(*a);
                        merged.push(*b);
                    }
                    values.push(merged);
                }
            }
            self.values = values;
            self.n = n_new;
        }
        Ok(())
    }

    /// Shift averages of the level differences.
    fn shift_means(&self) -> Vec<f64> {
        self.values
            .iter()
            .map(|v| v.iter().map(|o| o.diff).sum::<f64>() / v.len() as f64)
            .collect()
    }

    /// Mean over shifts and its estimated mean-square error.
    fn estimate(&self) -> (f64, f64) {
        let q = self.shift_means();
        let (m, v) = mean_var(&q);
        (m, v / q.len() as f64)
    }

    fn stats(&self, problem: &Problem) -> LevelStats {
        let all: Vec<SampleOutcome> = self.values.iter().flatten().copied().collect();
        let mut st = level_stats(problem, self.level, 1.0, &all);
        st.n = self.n;
        st.mean_diff = self.estimate().0;
        st
    }
}

fn next_pow2(x: f64) -> u64 {
    if x <= 1.0 {
        1
    } else {
        (x.ceil() as u64).next_power_of_two()
    }
}

fn allocate(problem: &Problem, exec: &Executor, levels: &mut [QmcLevel], opts: &MlqmcOptions) -> Result<()> {
    for lv in levels.iter_mut() {
        lv.grow(problem, exec, opts, 1)?;
    }
    let ratio = opts.eta / (opts.eta + 1.0);
    let mut n0 = 1u64;
    loop {
        let costs: Vec<f64> = levels.iter().map(|lv| lv.stats(problem).cost_per_sample).collect();
        let w0 = problem.h(0).powf(opts.beta) / costs[0];
        for (lv, c) in levels.iter_mut().zip(&costs) {
            let w = problem.h(lv.level).powf(opts.beta) / c;
            let target = next_pow2(n0 as f64 * (w / w0).powf(ratio));
            lv.grow(problem, exec, opts, target)?;
        }
        let mse: f64 = levels.iter().map(|lv| lv.estimate().1).sum();
        if mse <= opts.eps * opts.eps / 2.0 {
            return Ok(());
        }
        n0 *= 2;
        if n0 > opts.max_points {
            return Err(Error::InvalidLattice(format!("more than {} lattice points needed", opts.max_points)));
        }
    }
}

/// Multilevel QMC estimate of the expected smallest eigenvalue.
pub fn mlqmc_estimate(problem: &Problem, opts: &MlqmcOptions, exec: &Executor) -> Result<MLResult> {
    opts.validate(problem.dim())?;
    let start = Instant::now();
    galerkin_screen(problem, opts.seed)?;
    let mut l = opts.levels.unwrap_or(2.min(opts.max_level));
    let mut levels: Vec<QmcLevel> = Vec::new();
    let alpha = loop {
        while levels.len() <= l {
            levels.push(QmcLevel { level: levels.len(), n: 0, values: Vec::new() });
        }
        allocate(problem, exec, &mut levels, opts)?;
        let stats: Vec<LevelStats> = levels.iter().map(|lv| lv.stats(problem)).collect();
        let alpha = opts
            .alpha
            .or_else(|| fit_rates(&stats).ok().map(|r| r.alpha).filter(|a| a.is_finite() && *a > 0.5))
            .unwrap_or(DEFAULT_ALPHA);
        if opts.levels.is_some() {
            break alpha;
        }
        let y_l = stats[l].mean_diff.abs();
        if l > 0 && y_l <= (2f64.powf(alpha) - 1.0) * opts.eps / 2f64.sqrt() {
            break alpha;
        }
        if l + 1 > opts.max_level {
            return Err(Error::BiasNotMet { max_level: opts.max_level, last_mean: y_l });
        }
        l += 1;
    };

    let stats: Vec<LevelStats> = levels.iter().map(|lv| lv.stats(problem)).collect();
    let mse: f64 = levels.iter().map(|lv| lv.estimate().1).sum();
    let r = opts.shifts as f64;
    let result = MLResult {
        method: Method::Mlqmc,
        estimate: stats.iter().map(|s| s.mean_diff).sum(),
        eps_target: opts.eps,
        bias_est: if l > 0 { stats[l].mean_diff.abs() / (2f64.powf(alpha) - 1.0) } else { f64::NAN },
        stat_err_est: mse.sqrt(),
        total_cost: stats.iter().map(|s| s.cost_per_sample * s.n as f64 * r).sum(),
        rates: fit_rates(&stats).ok(),
        levels: stats,
        wall_time: start.elapsed().as_secs_f64(),
    };
    assert_positive(result)
}

/// Mean-square errors of QMC and MC estimates of `E[lambda_level]` with `n`
/// points per replicate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QmcRatePoint {
    pub n: u64,
    pub qmc_mse: f64,
    pub mc_mse: f64,
}

/// MSE of lattice and plain MC means for `N = 2^m_min .. 2^m_max`, each over
/// `shifts` independent replicates. Smaller rules are the embedded sub-rules
/// of the largest one, and MC replicates are nested prefixes.
pub fn qmc_rate_experiment(
    problem: &Problem,
    level: usize,
    m_range: std::ops::RangeInclusive<u32>,
    shifts: usize,
    z: &[u64],
    seed: u64,
    exec: &Executor,
) -> Result<Vec<QmcRatePoint>> {
    let (m_min, m_max) = (*m_range.start(), *m_range.end());
    if m_min > m_max || shifts < 2 {
        return Err(Error::InvalidInput("need m_min <= m_max and at least 2 replicates".into()));
    }
    let s = problem.dim();
    let n_max = 1u64 << m_max;
    let rule = LatticeRule::with_random_shifts(z, s, n_max, shifts, seed, 0)?;
    let count = shifts as u64 * n_max;
    let qmc = exec.map(0..count, |flat| {
        let omega = lattice_point(&rule, flat % n_max, (flat / n_max) as usize)?;
        Ok(problem.sample_value(level, &omega, 1.0)?.value)
    })?;
    let mc = exec.map(0..count, |flat| {
        let omega = mc_sample(seed, level as i64, flat, s);
        Ok(problem.sample_value(level, &omega, 1.0)?.value)
    })?;

    let mut out = Vec::new();
    for m in m_min..=m_max {
        let n = 1u64 << m;
        let stride = (n_max / n) as usize;
        let mut qm = Vec::with_capacity(shifts);
        let mut mm = Vec::with_capacity(shifts);
        for r in 0..shifts {
            let block = &qmc[r * n_max as usize..(r + 1) * n_max as usize];
            qm.push(block.iter().step_by(stride).sum::<f64>() / n as f64);
            let block = &mc[r * n_max as usize..(r + 1) * n_max as usize];
            mm.push(block[..n as usize].iter().sum::<f64>() / n as f64);
        }
        let r = shifts as f64;
        out.push(QmcRatePoint { n, qmc_mse: mean_var(&qm).1 / r, mc_mse: mean_var(&mm).1 / r });
    }
    Ok(out)
}
