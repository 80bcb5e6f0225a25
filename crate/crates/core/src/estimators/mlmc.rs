//! Single-level Monte Carlo and the adaptive multilevel drivers.

use std::time::Instant;

use super::problem::{Problem, SampleOutcome};
use super::{
    assert_positive, fit_rates, homotopy_schedule, mean_var, sample_sizes, Executor, LevelStats, MLResult, Method,
    DEFAULT_ALPHA,
};
use crate::assembly::Discretization;
use crate::eigen::{arnoldi_smallest, detect_instability, SolverSettings};
use crate::error::{Error, Result};
use crate::sampling::mc_sample;

/// Warm-up samples per level.
pub const N_WARM: u64 = 50;

/// Probe samples for the Galerkin stability screen.
pub const GALERKIN_PROBES: usize = 5;

/// Stream level reserved for the stability probes.
pub const SCREEN_LEVEL: i64 = -2;

/// Cap on allocation rounds per hierarchy depth.
const MAX_ALLOCATION_ROUNDS: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct MlmcOptions {
    /// Target root-mean-square error.
    pub eps: f64,
    /// Fixed finest level; `None` selects it adaptively.
    pub levels: Option<usize>,
    /// Deepest level the adaptive mode may reach.
    pub max_level: usize,
    pub n_warm: u64,
    pub seed: u64,
    /// Bias decay rate for the stopping test; fitted when `None`.
    pub alpha: Option<f64>,
    /// Homotopy parameters per level, overriding the default schedule.
    pub schedule: Option<Vec<f64>>,
}

impl MlmcOptions {
    pub fn new(eps: f64, seed: u64) -> Self {
        Self { eps, levels: None, max_level: 6, n_warm: N_WARM, seed, alpha: None, schedule: None }
    }

    pub fn with_levels(mut self, l: usize) -> Self {
        self.levels = Some(l);
        self
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0) {
            return Err(Error::InvalidInput(format!("eps must be positive, got {}", self.eps)));
        }
        if self.n_warm < 2 {
            return Err(Error::InvalidInput("at least two warm-up samples are needed".into()));
        }
        Ok(())
    }
}

/// Samples taken on one level for a fixed pair of homotopy parameters.
#[derive(Debug, Clone)]
pub(crate) struct LevelData {
    pub level: usize,
    pub t_fine: f64,
    pub t_coarse: f64,
    pub outcomes: Vec<SampleOutcome>,
}

impl LevelData {
    pub fn new(level: usize, t_fine: f64, t_coarse: f64) -> Self {
        Self { level, t_fine, t_coarse, outcomes: Vec::new() }
    }

    /// Extends the level to `n` MC samples from the stream `(seed, level, i)`.
    pub fn extend_mc(&mut self, problem: &Problem, exec: &Executor, seed: u64, n: u64) -> Result<()> {
        let have = self.outcomes.len() as u64;
        if n <= have {
            return Ok(());
        }
        let (level, tf, tc, s) = (self.level, self.t_fine, self.t_coarse, problem.dim());
        let new = exec.map(have..n, |i| {
            let omega = mc_sample(seed, level as i64, i, s);
            problem
                .sample_difference(level, &omega, tf, tc)
                .map_err(|e| Error::Sample { level, index: i, source: Box::new(e) })
        })?;
        self.outcomes.extend(new);
        Ok(())
    }

    pub fn stats(&self, problem: &Problem) -> LevelStats {
        level_stats(problem, self.level, self.t_fine, &self.outcomes)
    }
}

pub(crate) fn level_stats(problem: &Problem, level: usize, t: f64, outcomes: &[SampleOutcome]) -> LevelStats {
    let diffs: Vec<f64> = outcomes.iter().map(|o| o.diff).collect();
    let vals: Vec<f64> = outcomes.iter().map(|o| o.value).collect();
    let (mean_diff, var_diff) = mean_var(&diffs);
    let (mean_val, var_val) = mean_var(&vals);
    let n = outcomes.len().max(1) as f64;
    let cost_per_sample = match problem.cost_model {
        super::CostModel::Work => outcomes.iter().map(|o| problem.cost_seconds(o)).sum::<f64>() / n,
        super::CostModel::WallClock => {
            let mut w: Vec<f64> = outcomes.iter().map(|o| o.wall).collect();
            w.sort_by(f64::total_cmp);
            w.get(w.len() / 2).copied().unwrap_or(f64::NAN)
        }
    };
    LevelStats {
        level,
        h: problem.h(level),
        t,
        n: outcomes.len() as u64,
        mean_diff,
        var_diff,
        mean_val,
        var_val,
        cost_per_sample,
        iters_avg: outcomes.iter().map(|o| o.iterations as f64).sum::<f64>() / n,
    }
}

/// Rejects a Galerkin discretization whose coarsest level has a complex
/// smallest eigenvalue for any of the probe samples.
pub fn galerkin_screen(problem: &Problem, seed: u64) -> Result<()> {
    if problem.kind != Discretization::Galerkin {
        return Ok(());
    }
    let settings = SolverSettings::for_level(0).with_eps(1e-10);
    let mut unstable = 0;
    for i in 0..GALERKIN_PROBES {
        let omega = mc_sample(seed, SCREEN_LEVEL, i as u64, problem.dim());
        let sys = problem.assemble(0, &omega, 1.0)?;
        let spectrum = arnoldi_smallest(&sys, 2, &settings)?;
        if detect_instability(&spectrum) {
            unstable += 1;
        }
    }
    if unstable > 0 {
        return Err(Error::GalerkinUnstable { unstable, probes: GALERKIN_PROBES });
    }
    Ok(())
}

/// Mean of `lambda_l` over `n` Monte Carlo samples.
pub fn mc_estimate(problem: &Problem, level: usize, n: u64, seed: u64, exec: &Executor) -> Result<MLResult> {
    if n < 2 {
        return Err(Error::InvalidInput(format!("MC needs at least 2 samples, got {n}")));
    }
    let start = Instant::now();
    let mut data = LevelData::new(level, 1.0, 1.0);
    extend_values(&mut data, problem, exec, seed, n)?;
    mc_result(problem, &data, f64::NAN, start)
}

/// Monte Carlo on `level` with the sample size grown until the statistical
/// error `sqrt(V / N)` is at most `eps / sqrt(2)`.
pub fn mc_estimate_eps(problem: &Problem, level: usize, eps: f64, n_warm: u64, seed: u64, exec: &Executor) -> Result<MLResult> {
    if !(eps > 0.0) || n_warm < 2 {
        return Err(Error::InvalidInput(format!("MC needs eps > 0 and at least 2 warm-up samples, got {eps} and {n_warm}")));
    }
    let start = Instant::now();
    let mut data = LevelData::new(level, 1.0, 1.0);
    let mut n = n_warm;
    for _ in 0..MAX_ALLOCATION_ROUNDS {
        extend_values(&mut data, problem, exec, seed, n)?;
        let (_, var) = mean_var(&data.outcomes.iter().map(|o| o.value).collect::<Vec<_>>());
        let needed = (2.0 * var / (eps * eps)).ceil() as u64;
        if needed <= n {
            break;
        }
        n = needed;
    }
    mc_result(problem, &data, eps, start)
}

fn extend_values(data: &mut LevelData, problem: &Problem, exec: &Executor, seed: u64, n: u64) -> Result<()> {
    let (level, have, s) = (data.level, data.outcomes.len() as u64, problem.dim());
    if n <= have {
        return Ok(());
    }
    let new = exec.map(have..n, |i| {
        let omega = mc_sample(seed, level as i64, i, s);
        problem
            .sample_value(level, &omega, 1.0)
            .map_err(|e| Error::Sample { level, index: i, source: Box::new(e) })
    })?;
    data.outcomes.extend(new);
    Ok(())
}

fn mc_result(problem: &Problem, data: &LevelData, eps: f64, start: Instant) -> Result<MLResult> {
    let st = data.stats(problem);
    let result = MLResult {
        method: Method::Mc,
        estimate: st.mean_val,
        eps_target: eps,
        bias_est: f64::NAN,
        stat_err_est: (st.var_val / st.n as f64).sqrt(),
        total_cost: st.cost_per_sample * st.n as f64,
        rates: None,
        levels: vec![st],
        wall_time: start.elapsed().as_secs_f64(),
    };
    assert_positive(result)
}

fn schedule_for(opts: &MlmcOptions, homotopy: bool, l: usize) -> Result<Vec<f64>> {
    if let Some(s) = &opts.schedule {
        if s.len() < l + 1 {
            return Err(Error::InvalidInput(format!("homotopy schedule has {} entries, {} needed", s.len(), l + 1)));
        }
        if s.iter().any(|t| !(0.0..=1.0).contains(t)) || s.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::InvalidInput("homotopy schedule must be nondecreasing within [0, 1]".into()));
        }
        return Ok(s[..=l].to_vec());
    }
    if homotopy && l > 0 {
        homotopy_schedule(l)
    } else {
        Ok(vec![1.0; l + 1])
    }
}

/// Keeps samples whose homotopy parameters are unchanged and resets the rest.
fn sync_levels(data: &mut Vec<LevelData>, ts: &[f64]) {
    data.truncate(ts.len());
    for (l, &t) in ts.iter().enumerate() {
        let tc = if l == 0 { t } else { ts[l - 1] };
        match data.get_mut(l) {
            Some(d) if d.t_fine == t && d.t_coarse == tc => {}
            Some(d) => *d = LevelData::new(l, t, tc),
            None => data.push(LevelData::new(l, t, tc)),
        }
    }
}

fn allocate(problem: &Problem, exec: &Executor, data: &mut [LevelData], opts: &MlmcOptions) -> Result<()> {
    for d in data.iter_mut() {
        d.extend_mc(problem, exec, opts.seed, opts.n_warm)?;
    }
    for _ in 0..MAX_ALLOCATION_ROUNDS {
        let stats: Vec<LevelStats> = data.iter().map(|d| d.stats(problem)).collect();
        let v: Vec<f64> = stats.iter().map(|s| s.var_diff).collect();
        let c: Vec<f64> = stats.iter().map(|s| s.cost_per_sample).collect();
        let n = sample_sizes(&v, &c, opts.eps)?;
        let mut grew = false;
        for (d, &target) in data.iter_mut().zip(&n) {
            if target > d.outcomes.len() as u64 {
                d.extend_mc(problem, exec, opts.seed, target)?;
                grew = true;
            }
        }
        if !grew {
            return Ok(());
        }
    }
    Ok(())
}

fn alpha_for(opts: &MlmcOptions, stats: &[LevelStats]) -> f64 {
    opts.alpha
        .or_else(|| fit_rates(stats).ok().map(|r| r.alpha).filter(|a| a.is_finite() && *a > 0.5))
        .unwrap_or(DEFAULT_ALPHA)
}

fn run_mlmc(problem: &Problem, opts: &MlmcOptions, exec: &Executor, homotopy: bool) -> Result<MLResult> {
    opts.validate()?;
    let start = Instant::now();
    galerkin_screen(problem, opts.seed)?;
    let mut l = opts.levels.unwrap_or(2.min(opts.max_level));
    let mut data: Vec<LevelData> = Vec::new();
    let alpha = loop {
        let ts = schedule_for(opts, homotopy, l)?;
        sync_levels(&mut data, &ts);
        allocate(problem, exec, &mut data, opts)?;
        let stats: Vec<LevelStats> = data.iter().map(|d| d.stats(problem)).collect();
        let alpha = alpha_for(opts, &stats);
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
    let method = if homotopy { Method::MlmcHomotopy } else { Method::Mlmc };
    let stats: Vec<LevelStats> = data.iter().map(|d| d.stats(problem)).collect();
    assert_positive(summarize(method, stats, opts.eps, alpha, start))
}

pub(crate) fn summarize(method: Method, stats: Vec<LevelStats>, eps: f64, alpha: f64, start: Instant) -> MLResult {
    let l = stats.len() - 1;
    MLResult {
        method,
        estimate: stats.iter().map(|s| s.mean_diff).sum(),
        eps_target: eps,
        bias_est: if l > 0 { stats[l].mean_diff.abs() / (2f64.powf(alpha) - 1.0) } else { f64::NAN },
        stat_err_est: stats.iter().map(|s| s.var_diff / s.n as f64).sum::<f64>().sqrt(),
        total_cost: stats.iter().map(|s| s.cost_per_sample * s.n as f64).sum(),
        rates: fit_rates(&stats).ok(),
        levels: stats,
        wall_time: start.elapsed().as_secs_f64(),
    }
}

/// Multilevel Monte Carlo with tgRQI or Arnoldi differences at `t = 1`.
pub fn mlmc_estimate(problem: &Problem, opts: &MlmcOptions, exec: &Executor) -> Result<MLResult> {
    run_mlmc(problem, opts, exec, false)
}

/// Multilevel Monte Carlo along the homotopy schedule, starting from pure
/// diffusion on the coarsest level.
pub fn mlmc_homotopy_estimate(problem: &Problem, opts: &MlmcOptions, exec: &Executor) -> Result<MLResult> {
    run_mlmc(problem, opts, exec, true)
}

/// Fixed `n` samples on each of the levels `0..=l_max`, for rate fitting.
pub fn rates_experiment(
    problem: &Problem,
    l_max: usize,
    n: u64,
    seed: u64,
    homotopy: bool,
    exec: &Executor,
) -> Result<MLResult> {
    if n < 2 {
        return Err(Error::InvalidInput(format!("rates need at least 2 samples per level, got {n}")));
    }
    let start = Instant::now();
    galerkin_screen(problem, seed)?;
    let opts = MlmcOptions { n_warm: n, ..MlmcOptions::new(f64::NAN, seed) };
    let ts = schedule_for(&opts, homotopy, l_max)?;
    let mut data = Vec::new();
    sync_levels(&mut data, &ts);
    for d in &mut data {
        d.extend_mc(problem, exec, seed, n)?;
    }
    let stats: Vec<LevelStats> = data.iter().map(|d| d.stats(problem)).collect();
    let alpha = fit_rates(&stats).map(|r| r.alpha).unwrap_or(DEFAULT_ALPHA);
    let method = if homotopy { Method::MlmcHomotopy } else { Method::Mlmc };
    assert_positive(summarize(method, stats, f64::NAN, alpha, start))
}
