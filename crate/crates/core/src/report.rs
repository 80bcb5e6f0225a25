//! CSV and JSON writers for estimator results, spectra and QMC rate runs.
//! Floats are printed with 17 significant digits.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::eigen::EigenResult;
use crate::error::{Error, Result};
use crate::estimators::{MLResult, QmcRatePoint};

pub const LEVELS_HEADER: &str = "level,h,t,N,mean_diff,var_diff,mean_val,var_val,cost_ms,iters";
pub const COMPLEXITY_HEADER: &str = "eps,total_cost_s,estimate,stat_err,bias_est";
pub const SPECTRUM_HEADER: &str = "re,im";
pub const QMC_RATE_HEADER: &str = "N,qmc_mse,mc_mse";

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv(header: &str, rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut out = String::from(header);
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Per-level table of a multilevel or single-level run.
pub fn levels_csv(result: &MLResult) -> String {
    csv(
        LEVELS_HEADER,
        result.levels.iter().map(|l| {
            vec![
                l.level.to_string(),
                num(l.h),
                num(l.t),
                l.n.to_string(),
                num(l.mean_diff),
                num(l.var_diff),
                num(l.mean_val),
                num(l.var_val),
                num(l.cost_per_sample * 1e3),
                num(l.iters_avg),
            ]
        }),
    )
}

/// One row per tolerance of an eps sweep.
pub fn complexity_csv(results: &[MLResult]) -> String {
    csv(
        COMPLEXITY_HEADER,
        results.iter().map(|r| vec![num(r.eps_target), num(r.total_cost), num(r.estimate), num(r.stat_err_est), num(r.bias_est)]),
    )
}

pub fn spectrum_csv<T: crate::scalar::Real>(spectrum: &[EigenResult<T>]) -> String {
    csv(SPECTRUM_HEADER, spectrum.iter().map(|e| vec![num(e.lambda.re.as_f64()), num(e.lambda.im.as_f64())]))
}

pub fn qmc_rate_csv(points: &[QmcRatePoint]) -> String {
    csv(QMC_RATE_HEADER, points.iter().map(|p| vec![p.n.to_string(), num(p.qmc_mse), num(p.mc_mse)]))
}

/// Pretty JSON with non-finite numbers written as `null`.
pub fn to_json<S: Serialize>(value: &S) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

/// Machine-readable description of a failed run.
pub fn error_json(err: &Error) -> String {
    let mut chain = String::new();
    let mut source = std::error::Error::source(err);
    while let Some(e) = source {
        let _ = write!(chain, "{}{e}", if chain.is_empty() { "" } else { "; " });
        source = e.source();
    }
    let v = serde_json::json!({
        "status": "error",
        "kind": err.kind(),
        "message": err.to_string(),
        "cause": if chain.is_empty() { None } else { Some(chain) },
    });
    format!("{v}\n")
}

pub fn write(dir: &Path, name: &str, contents: &str) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(name), contents)?;
    Ok(())
}
