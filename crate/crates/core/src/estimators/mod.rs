//! Monte Carlo, multilevel Monte Carlo (plain and homotopy) and multilevel
//! quasi-Monte Carlo estimators of the expected smallest eigenvalue.

mod exec;
mod mlmc;
mod mlqmc;
mod problem;

use serde::Serialize;

use crate::error::{Error, Result};

pub use exec::Executor;
pub use mlmc::{
    galerkin_screen, mc_estimate, mc_estimate_eps, mlmc_estimate, mlmc_homotopy_estimate, rates_experiment, MlmcOptions,
    GALERKIN_PROBES, N_WARM, SCREEN_LEVEL,
};
pub use mlqmc::{mlqmc_estimate, qmc_rate_experiment, MlqmcOptions, QmcRatePoint};
pub use problem::{CostModel, Problem, SampleOutcome, SolverKind, MAX_HIERARCHY_LEVEL, NOMINAL_FLOPS_PER_SECOND};

/// Variance-to-mean decay rate assumed before it can be fitted.
pub const DEFAULT_ALPHA: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Method {
    #[serde(rename = "MC")]
    Mc,
    #[serde(rename = "MLMC")]
    Mlmc,
    #[serde(rename = "MLMC_Homotopy")]
    MlmcHomotopy,
    #[serde(rename = "MLQMC")]
    Mlqmc,
}

/// Per-level summary of the samples taken.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelStats {
    pub level: usize,
    pub h: f64,
    pub t: f64,
    #[serde(rename = "N")]
    pub n: u64,
    pub mean_diff: f64,
    pub var_diff: f64,
    pub mean_val: f64,
    pub var_val: f64,
    /// Seconds under the active cost model.
    pub cost_per_sample: f64,
    pub iters_avg: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Rates {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MLResult {
    pub method: Method,
    pub estimate: f64,
    pub levels: Vec<LevelStats>,
    pub eps_target: f64,
    pub bias_est: f64,
    pub stat_err_est: f64,
    /// Seconds under the active cost model.
    pub total_cost: f64,
    pub rates: Option<Rates>,
    /// Measured wall time of the whole run.
    pub wall_time: f64,
}

/// True iff the estimate is strictly positive.
pub fn positivity_check(result: &MLResult) -> bool {
    result.estimate > 0.0
}

pub(crate) fn assert_positive(result: MLResult) -> Result<MLResult> {
    if positivity_check(&result) {
        Ok(result)
    } else {
        Err(Error::NonPositiveEstimate(result.estimate))
    }
}

/// Homotopy parameters `t_0 = 0`, `t_l = 1 - 4^(-l)` and `t_L = 1`, so that
/// `1 - t_l` decays like `h_l^2`.
pub fn homotopy_schedule(l_max: usize) -> Result<Vec<f64>> {
    if l_max == 0 {
        return Err(Error::InvalidInput("homotopy schedule needs L >= 1".into()));
    }
    Ok((0..=l_max)
        .map(|l| match l {
            0 => 0.0,
            l if l == l_max => 1.0,
            l => 1.0 - 4f64.powi(-(l as i32)),
        })
        .collect())
}

/// Optimal MLMC sample sizes `N_l = ceil(2 eps^-2 sqrt(V_l / C_l) sum_k sqrt(V_k C_k))`.
pub fn sample_sizes(variances: &[f64], costs: &[f64], eps: f64) -> Result<Vec<u64>> {
    if variances.len() != costs.len() {
        return Err(Error::DimensionMismatch { expected: variances.len(), got: costs.len() });
    }
    if !(eps > 0.0) || costs.iter().any(|&c| !(c > 0.0)) || variances.iter().any(|&v| !(v >= 0.0)) {
        return Err(Error::InvalidInput("sample sizes need eps > 0, C > 0 and V >= 0".into()));
    }
    let sum: f64 = variances.iter().zip(costs).map(|(v, c)| (v * c).sqrt()).sum();
    Ok(variances
        .iter()
        .zip(costs)
        .map(|(v, c)| (2.0 / (eps * eps) * (v / c).sqrt() * sum).ceil() as u64)
        .collect())
}

fn slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Least-squares slope of `log2 y` against `log2 x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.log2()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.log2()).collect();
    slope(&lx, &ly)
}

/// Decay rates of `|E[Y_l]|` and `V[Y_l]` and growth rate of the cost,
/// fitted by least squares over the levels `l >= 1`.
pub fn fit_rates(levels: &[LevelStats]) -> Result<Rates> {
    if levels.len() < 3 {
        return Err(Error::InsufficientLevels { needed: 3, got: levels.len() });
    }
    let diff = &levels[1..];
    let l: Vec<f64> = diff.iter().map(|s| s.level as f64).collect();
    let fit = |f: &dyn Fn(&LevelStats) -> f64| slope(&l, &diff.iter().map(|s| f(s).log2()).collect::<Vec<_>>());
    Ok(Rates {
        alpha: -fit(&|s| s.mean_diff.abs()),
        beta: -fit(&|s| s.var_diff),
        gamma: fit(&|s| s.cost_per_sample),
    })
}

/// Mean and unbiased variance accumulated in index order.
pub(crate) fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, f64::NAN);
    }
    let ss: f64 = xs.iter().map(|x| (x - mean) * (x - mean)).sum();
    (mean, ss / (n - 1) as f64)
}
