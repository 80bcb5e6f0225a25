//! Command-line front end: presets, configuration merging, dispatch and
//! artifact output.

use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::assembly::{assemble, Discretization};
use crate::eigen::{arnoldi_smallest, detect_instability, SolverSettings};
use crate::error::{Error, Result};
use crate::estimators::{
    fit_rates, loglog_slope, mc_estimate, mc_estimate_eps, mlmc_estimate, mlmc_homotopy_estimate, mlqmc_estimate,
    qmc_rate_experiment, rates_experiment, CostModel, Executor, MLResult, MlmcOptions, MlqmcOptions, Problem,
    SolverKind, N_WARM,
};
use crate::fields::{center_grid, FieldConfig, SampleVector, VelocityField};
use crate::mesh::build_mesh;
use crate::report;
use crate::sampling::{default_generating_vector, load_generating_vector, mc_sample};

const DESK_SAMPLES: u64 = 200;
const PAPER_SAMPLES: u64 = 10_000;
const GALERKIN_CASE2_MAX_H0: f64 = 1.0 / 32.0;

#[derive(Debug, Parser)]
#[command(name = "mlmc-eig", version, about = "Multilevel (quasi-)Monte Carlo for random convection-diffusion eigenvalues")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CommandKind {
    Mc,
    Mlmc,
    MlmcHomotopy,
    Mlqmc,
    Rates,
    Spectrum,
    QmcRate,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Single-level Monte Carlo on the finest level
    Mc(Settings),
    /// Multilevel Monte Carlo with tgRQI or Arnoldi differences
    Mlmc(Settings),
    /// Multilevel Monte Carlo along the homotopy schedule
    MlmcHomotopy(Settings),
    /// Multilevel quasi-Monte Carlo with randomly shifted lattice rules
    Mlqmc(Settings),
    /// Fixed samples per level for fitting alpha, beta and gamma
    Rates(Settings),
    /// Smallest eigenvalues of one discretized operator
    Spectrum(Settings),
    /// Mean-square error of QMC and MC against the number of points
    QmcRate(Settings),
}

impl Command {
    fn split(self) -> (CommandKind, Settings) {
        match self {
            Command::Mc(s) => (CommandKind::Mc, s),
            Command::Mlmc(s) => (CommandKind::Mlmc, s),
            Command::MlmcHomotopy(s) => (CommandKind::MlmcHomotopy, s),
            Command::Mlqmc(s) => (CommandKind::Mlqmc, s),
            Command::Rates(s) => (CommandKind::Rates, s),
            Command::Spectrum(s) => (CommandKind::Spectrum, s),
            Command::QmcRate(s) => (CommandKind::QmcRate, s),
        }
    }
}

/// Flags shared by every subcommand. A `--config` JSON file may set the same
/// keys; flags given on the command line take precedence.
#[derive(Debug, Clone, Default, Args, Deserialize, Serialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct Settings {
    /// JSON file with default values for these flags
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// case1, case2, case3 or custom
    #[arg(long)]
    pub preset: Option<String>,
    /// galerkin or supg
    #[arg(long)]
    pub disc: Option<String>,
    /// rqi or arnoldi
    #[arg(long)]
    pub solver: Option<String>,
    /// Coarsest mesh width, e.g. 2^-3 or 0.125
    #[arg(long)]
    pub h0: Option<String>,
    /// Finest level L (fixed); adaptive when omitted
    #[arg(long)]
    pub levels: Option<usize>,
    /// Deepest level the adaptive mode may use
    #[arg(long)]
    pub max_level: Option<usize>,
    /// Target RMSE; a comma separated list runs a sweep
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub eps: Option<Vec<f64>>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Samples per level (rates, mc)
    #[arg(long)]
    pub samples: Option<u64>,
    /// Warm-up samples per level
    #[arg(long)]
    pub n_warm: Option<u64>,
    /// Generating vector file, one integer per line
    #[arg(long)]
    pub lattice_file: Option<PathBuf>,
    /// Number of random lattice shifts
    #[arg(long)]
    pub shifts: Option<usize>,
    /// Output directory
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads (0 = all cores)
    #[arg(long)]
    pub workers: Option<usize>,
    /// Use 10^4 samples per level for rate runs
    #[arg(long)]
    #[serde(default)]
    pub paper_scale: bool,
    /// Mesh width for the spectrum command
    #[arg(long)]
    pub h: Option<String>,
    /// Number of eigenvalues for the spectrum command
    #[arg(short = 'k')]
    pub k: Option<usize>,
    /// Sample index for the spectrum command; kappa = 1 when omitted
    #[arg(long)]
    pub sample: Option<u64>,
    /// QMC variance exponent
    #[arg(long)]
    pub eta: Option<f64>,
    /// Bias decay rate used by the stopping test
    #[arg(long)]
    pub alpha: Option<f64>,
    /// work (deterministic flop model) or wallclock
    #[arg(long)]
    pub cost_model: Option<String>,
    /// Use the homotopy schedule in the rates command
    #[arg(long)]
    #[serde(default)]
    pub homotopy: bool,
    /// Level for mc and qmc-rate
    #[arg(long)]
    pub level: Option<usize>,
    /// Smallest log2 N for qmc-rate
    #[arg(long)]
    pub m_min: Option<u32>,
    /// Largest log2 N for qmc-rate
    #[arg(long)]
    pub m_max: Option<u32>,
    /// Constant velocity "a1,a2" (custom preset)
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub velocity: Option<Vec<f64>>,
    /// Stream-function velocity (custom preset)
    #[arg(long)]
    #[serde(default)]
    pub stream: bool,
    /// Kernel centers per side (custom preset)
    #[arg(long)]
    pub grid: Option<usize>,
    /// Kernel decay rate (custom preset)
    #[arg(long)]
    pub decay: Option<f64>,
}

macro_rules! merge_fields {
    ($a:ident, $b:ident; $($f:ident),*) => {
        Settings {
            config: $a.config,
            paper_scale: $a.paper_scale || $b.paper_scale,
            homotopy: $a.homotopy || $b.homotopy,
            stream: $a.stream || $b.stream,
            $($f: $a.$f.or($b.$f),)*
        }
    };
}

impl Settings {
    /// Fills unset flags from `file`.
    pub fn merge(self, file: Settings) -> Settings {
        merge_fields!(self, file; preset, disc, solver, h0, levels, max_level, eps, seed, samples, n_warm,
            lattice_file, shifts, out, workers, h, k, sample, eta, alpha, cost_model, level, m_min, m_max,
            velocity, grid, decay)
    }

    fn has_field_overrides(&self) -> bool {
        self.velocity.is_some() || self.stream || self.grid.is_some() || self.decay.is_some()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Case1,
    Case2,
    Case3,
    Custom,
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "case1" => Ok(Preset::Case1),
            "case2" => Ok(Preset::Case2),
            "case3" => Ok(Preset::Case3),
            "custom" => Ok(Preset::Custom),
            other => Err(Error::Config(format!("unknown preset '{other}'"))),
        }
    }
}

/// Parses `2^-k`, `2^{-k}` or a decimal width.
pub fn parse_width(s: &str) -> Result<f64> {
    let t: String = s.chars().filter(|c| !matches!(c, '{' | '}' | ' ')).collect();
    let v = match t.strip_prefix("2^") {
        Some(e) => e.parse::<i32>().map(|e| 2f64.powi(e)).ok(),
        None => t.parse::<f64>().ok(),
    };
    v.filter(|v| v.is_finite() && *v > 0.0).ok_or_else(|| Error::Config(format!("cannot parse mesh width '{s}'")))
}

/// Fully resolved experiment description, recorded in the manifest.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentConfig {
    pub command: CommandKind,
    pub preset: Preset,
    pub velocity: String,
    pub grid: usize,
    pub decay: f64,
    pub disc: String,
    pub solver: String,
    pub cost_model: String,
    pub h0: f64,
    pub levels: Option<usize>,
    pub max_level: usize,
    pub eps: Vec<f64>,
    pub seed: u64,
    pub samples: u64,
    pub n_warm: u64,
    pub lattice_file: Option<PathBuf>,
    pub shifts: usize,
    pub eta: f64,
    pub alpha: Option<f64>,
    pub out: PathBuf,
    pub workers: usize,
    pub h: f64,
    pub k: usize,
    pub sample: Option<u64>,
    pub homotopy: bool,
    pub level: usize,
    pub m_min: u32,
    pub m_max: u32,
    #[serde(skip)]
    pub field: FieldConfig<f64>,
    #[serde(skip)]
    pub discretization: Discretization,
    #[serde(skip)]
    pub solver_kind: SolverKind,
    #[serde(skip)]
    pub cost: CostModel,
}

impl ExperimentConfig {
    pub fn resolve(command: CommandKind, s: Settings) -> Result<Self> {
        let preset = match &s.preset {
            Some(p) => p.parse()?,
            None if s.has_field_overrides() => Preset::Custom,
            None => Preset::Case1,
        };
        if preset != Preset::Custom && s.has_field_overrides() {
            return Err(Error::Config(format!(
                "preset {} fixes the field settings; use --preset custom to set velocity, stream, grid or decay",
                serde_json::to_value(preset)?.as_str().unwrap_or_default()
            )));
        }
        let (grid, decay) = (s.grid.unwrap_or(5), s.decay.unwrap_or(12.5));
        if grid == 0 {
            return Err(Error::Config("grid must be positive".into()));
        }
        let (velocity, default_disc) = match preset {
            Preset::Case1 => (VelocityField::Constant([20.0, 0.0]), Discretization::Galerkin),
            Preset::Case2 => (VelocityField::Constant([50.0, 0.0]), Discretization::Supg),
            Preset::Case3 => (VelocityField::Stream { centers: center_grid(grid, grid) }, Discretization::Supg),
            Preset::Custom => match (&s.velocity, s.stream) {
                (Some(_), true) => return Err(Error::Config("give either --velocity or --stream, not both".into())),
                (Some(v), false) => match v[..] {
                    [a1, a2] => (VelocityField::Constant([a1, a2]), Discretization::Galerkin),
                    _ => return Err(Error::Config(format!("--velocity needs two components, got {}", v.len()))),
                },
                (None, true) => (VelocityField::Stream { centers: center_grid(grid, grid) }, Discretization::Supg),
                (None, false) => (VelocityField::Constant([0.0, 0.0]), Discretization::Galerkin),
            },
        };
        let velocity_label = match &velocity {
            VelocityField::Constant(a) => format!("constant({},{})", a[0], a[1]),
            VelocityField::Stream { .. } => format!("stream({grid}x{grid})"),
        };
        let field = FieldConfig::new(center_grid(grid, grid), decay, velocity)?;
        let discretization = match &s.disc {
            Some(d) => d.parse()?,
            None => default_disc,
        };
        let solver_kind: SolverKind = s.solver.as_deref().unwrap_or("rqi").parse()?;
        let cost: CostModel = s.cost_model.as_deref().unwrap_or("work").parse()?;
        let h0 = s.h0.as_deref().map(parse_width).transpose()?.unwrap_or(0.125);
        build_mesh(0, h0)?;
        if preset == Preset::Case2
            && discretization == Discretization::Galerkin
            && h0 > GALERKIN_CASE2_MAX_H0
            && command != CommandKind::Spectrum
        {
            return Err(Error::Config(format!(
                "Galerkin on case2 is unstable for h0 = {h0}; use --h0 2^-5 or smaller, or --disc supg"
            )));
        }
        let h = s.h.as_deref().map(parse_width).transpose()?.unwrap_or(h0);
        let eps = s.eps.clone().unwrap_or_default();
        if eps.iter().any(|e| !(*e > 0.0)) {
            return Err(Error::Config("every eps must be positive".into()));
        }
        if matches!(command, CommandKind::Mlmc | CommandKind::MlmcHomotopy | CommandKind::Mlqmc) && eps.is_empty() {
            return Err(Error::Config("--eps is required".into()));
        }
        let samples = s.samples.unwrap_or(if s.paper_scale { PAPER_SAMPLES } else { DESK_SAMPLES });
        let default_levels = matches!(command, CommandKind::Rates | CommandKind::Mc).then_some(3);
        let levels = s.levels.or(default_levels);
        let (m_min, m_max) = (s.m_min.unwrap_or(4), s.m_max.unwrap_or(10));
        if m_min > m_max || m_max > 20 {
            return Err(Error::Config(format!("need m-min <= m-max <= 20, got {m_min} and {m_max}")));
        }
        Ok(Self {
            command,
            preset,
            velocity: velocity_label,
            grid,
            decay,
            disc: discretization.to_string(),
            solver: solver_label(solver_kind).into(),
            cost_model: cost_label(cost).into(),
            h0,
            levels,
            max_level: s.max_level.unwrap_or(6),
            eps,
            seed: s.seed.unwrap_or(1),
            samples,
            n_warm: s.n_warm.unwrap_or(N_WARM),
            lattice_file: s.lattice_file,
            shifts: s.shifts.unwrap_or(32),
            eta: s.eta.unwrap_or(0.61),
            alpha: s.alpha,
            out: s.out.unwrap_or_else(|| PathBuf::from("results")),
            workers: s.workers.unwrap_or(0),
            h,
            k: s.k.unwrap_or(20),
            sample: s.sample,
            homotopy: s.homotopy,
            level: s.level.or(levels).unwrap_or(0),
            m_min,
            m_max,
            field,
            discretization,
            solver_kind,
            cost,
        })
    }

    fn problem(&self) -> Result<Problem> {
        Ok(Problem::new(self.field.clone(), self.discretization, self.h0, self.solver_kind)?.with_cost_model(self.cost))
    }

    fn generating_vector(&self) -> Result<Vec<u64>> {
        match &self.lattice_file {
            Some(p) => load_generating_vector(p),
            None => Ok(default_generating_vector()),
        }
    }
}

fn solver_label(s: SolverKind) -> &'static str {
    match s {
        SolverKind::Rqi => "rqi",
        SolverKind::Arnoldi => "arnoldi",
    }
}

fn cost_label(c: CostModel) -> &'static str {
    match c {
        CostModel::Work => "work",
        CostModel::WallClock => "wallclock",
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    name: &'static str,
    version: &'static str,
    config: &'a ExperimentConfig,
    artifacts: &'a [String],
    wall_time_s: f64,
}

struct Outputs {
    dir: PathBuf,
    written: Vec<String>,
}

impl Outputs {
    fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        report::write(&self.dir, name, contents)?;
        self.written.push(name.to_string());
        Ok(())
    }
}

/// Runs one experiment and writes its artifacts; returns the summary line.
pub fn run(cfg: &ExperimentConfig) -> Result<String> {
    let start = Instant::now();
    let exec = Executor::new(cfg.workers)?;
    let mut out = Outputs { dir: cfg.out.clone(), written: Vec::new() };
    let line = match cfg.command {
        CommandKind::Mc | CommandKind::Mlmc | CommandKind::MlmcHomotopy | CommandKind::Mlqmc => {
            run_estimator(cfg, &exec, &mut out)?
        }
        CommandKind::Rates => {
            let problem = cfg.problem()?;
            let l = cfg.levels.unwrap_or(3);
            let mut r = rates_experiment(&problem, l, cfg.samples, cfg.seed, cfg.homotopy, &exec)?;
            r.rates = fit_rates(&r.levels).ok();
            out.write("levels.csv", &report::levels_csv(&r))?;
            out.write("summary.json", &report::to_json(&r)?)?;
            match r.rates {
                Some(x) => format!("alpha {:.3} beta {:.3} gamma {:.3}", x.alpha, x.beta, x.gamma),
                None => "rates not fitted".into(),
            }
        }
        CommandKind::Spectrum => {
            let mesh = build_mesh(0, cfg.h)?;
            let omega = match cfg.sample {
                Some(i) => mc_sample(cfg.seed, 0, i, cfg.field.dim()),
                None => SampleVector::zeros(cfg.field.dim()),
            };
            let sys = assemble(&mesh, &cfg.field, &omega, cfg.discretization, 1.0)?;
            if cfg.k == 0 || cfg.k + 1 >= sys.n() {
                return Err(Error::Config(format!("-k must lie in 1..{} for this mesh", sys.n().saturating_sub(1))));
            }
            let spectrum = arnoldi_smallest(&sys, cfg.k, &SolverSettings::for_level(0).with_eps(1e-10))?;
            out.write("spectrum.csv", &report::spectrum_csv(&spectrum))?;
            let l0 = spectrum[0].lambda;
            format!(
                "smallest {:.10e}{:+.10e}i, {}",
                l0.re,
                l0.im,
                if detect_instability(&spectrum) { "unstable (complex smallest eigenvalue)" } else { "stable" }
            )
        }
        CommandKind::QmcRate => {
            let problem = cfg.problem()?;
            let z = cfg.generating_vector()?;
            let pts = qmc_rate_experiment(&problem, cfg.level, cfg.m_min..=cfg.m_max, cfg.shifts, &z, cfg.seed, &exec)?;
            out.write("qmc_rate.csv", &report::qmc_rate_csv(&pts))?;
            let n: Vec<f64> = pts.iter().map(|p| p.n as f64).collect();
            let q: Vec<f64> = pts.iter().map(|p| p.qmc_mse).collect();
            let m: Vec<f64> = pts.iter().map(|p| p.mc_mse).collect();
            format!("qmc slope {:.3} mc slope {:.3}", loglog_slope(&n, &q), loglog_slope(&n, &m))
        }
    };
    let manifest = Manifest {
        name: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        config: cfg,
        artifacts: &out.written.clone(),
        wall_time_s: start.elapsed().as_secs_f64(),
    };
    out.write("manifest.json", &report::to_json(&manifest)?)?;
    Ok(line)
}

fn run_estimator(cfg: &ExperimentConfig, exec: &Executor, out: &mut Outputs) -> Result<String> {
    let problem = cfg.problem()?;
    let eps_list: Vec<Option<f64>> = if cfg.eps.is_empty() { vec![None] } else { cfg.eps.iter().copied().map(Some).collect() };
    let mut results = Vec::new();
    for eps in &eps_list {
        results.push(estimate_once(cfg, &problem, *eps, exec)?);
    }
    if results.len() == 1 {
        out.write("levels.csv", &report::levels_csv(&results[0]))?;
        out.write("summary.json", &report::to_json(&results[0])?)?;
    } else {
        for (i, r) in results.iter().enumerate() {
            out.write(&format!("levels_{i}.csv"), &report::levels_csv(r))?;
        }
        out.write("summary.json", &report::to_json(&results)?)?;
    }
    if cfg.eps.len() > 1 || (!cfg.eps.is_empty() && cfg.command != CommandKind::Mc) {
        out.write("complexity.csv", &report::complexity_csv(&results))?;
    }
    Ok(results
        .iter()
        .map(|r| {
            format!(
                "estimate {:.10e} stat_err {:.3e} bias {:.3e} cost {:.3e}s",
                r.estimate, r.stat_err_est, r.bias_est, r.total_cost
            )
        })
        .collect::<Vec<_>>()
        .join("\n"))
}

fn estimate_once(cfg: &ExperimentConfig, problem: &Problem, eps: Option<f64>, exec: &Executor) -> Result<MLResult> {
    let mlmc_opts = |eps: f64| MlmcOptions {
        levels: cfg.levels,
        max_level: cfg.max_level,
        n_warm: cfg.n_warm,
        alpha: cfg.alpha,
        ..MlmcOptions::new(eps, cfg.seed)
    };
    match (cfg.command, eps) {
        (CommandKind::Mc, Some(e)) => mc_estimate_eps(problem, cfg.level, e, cfg.n_warm, cfg.seed, exec),
        (CommandKind::Mc, None) => mc_estimate(problem, cfg.level, cfg.samples, cfg.seed, exec),
        (CommandKind::Mlmc, Some(e)) => mlmc_estimate(problem, &mlmc_opts(e), exec),
        (CommandKind::MlmcHomotopy, Some(e)) => mlmc_homotopy_estimate(problem, &mlmc_opts(e), exec),
        (CommandKind::Mlqmc, Some(e)) => {
            let opts = MlqmcOptions {
                levels: cfg.levels,
                max_level: cfg.max_level,
                eta: cfg.eta,
                shifts: cfg.shifts,
                alpha: cfg.alpha,
                ..MlqmcOptions::new(e, cfg.seed, cfg.generating_vector()?)
            };
            mlqmc_estimate(problem, &opts, exec)
        }
        _ => Err(Error::Config("--eps is required".into())),
    }
}

fn load_settings(path: &Path) -> Result<Settings> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

/// Parses the arguments, runs the experiment and returns the process exit
/// code. Failures print a JSON error report on stdout.
pub fn main_with_args<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let (command, flags) = cli.command.split();
    let out_dir = flags.out.clone();
    let resolved = flags
        .config
        .as_deref()
        .map(load_settings)
        .transpose()
        .and_then(|file| ExperimentConfig::resolve(command, match file {
            Some(f) => flags.merge(f),
            None => flags,
        }));
    let cfg = match resolved {
        Ok(c) => c,
        Err(e) => {
            print!("{}", report::error_json(&e));
            return 2;
        }
    };
    match run(&cfg) {
        Ok(line) => {
            println!("{line}");
            0
        }
        Err(e) => {
            let json = report::error_json(&e);
            print!("{json}");
            let _ = report::write(out_dir.as_deref().unwrap_or(&cfg.out), "error.json", &json);
            1
        }
    }
}
