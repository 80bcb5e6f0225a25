//! A configured level hierarchy and the per-sample eigenvalue computations
//! the estimators are built from.

use std::str::FromStr;
use std::sync::{Arc, OnceLock};
use std::time::Instant;

use serde::Serialize;

use crate::assembly::{assemble, AssembledSystem, Discretization};
use crate::eigen::{arnoldi_smallest, coarse_initial_guess, rqi_from_guess, tg_rqi, SolverSettings, TG_EPS_STOP};
use crate::error::{Error, Result};
use crate::fields::{FieldConfig, SampleVector};
use crate::mesh::{build_mesh, Mesh};

/// Deepest level a hierarchy may reach.
pub const MAX_HIERARCHY_LEVEL: usize = 10;

/// Nominal machine rate converting operation counts into seconds.
pub const NOMINAL_FLOPS_PER_SECOND: f64 = 1e9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    /// Three-grid Rayleigh quotient iteration.
    Rqi,
    /// Shift-invert Arnoldi on each level independently.
    Arnoldi,
}

impl FromStr for SolverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rqi" | "tgrqi" => Ok(SolverKind::Rqi),
            "arnoldi" => Ok(SolverKind::Arnoldi),
            other => Err(Error::Config(format!("unknown solver '{other}'"))),
        }
    }
}

/// How per-sample cost enters the sample allocation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CostModel {
    /// Deterministic operation counts at a nominal 1 GFlop/s.
    Work,
    /// Median measured wall time.
    WallClock,
}

impl FromStr for CostModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "work" | "flops" => Ok(CostModel::Work),
            "wall" | "wallclock" | "wall-clock" => Ok(CostModel::WallClock),
            other => Err(Error::Config(format!("unknown cost model '{other}'"))),
        }
    }
}

/// Result of one sample on one level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleOutcome {
    /// `lambda_l - lambda_{l-1}`, or `lambda_0` on level 0.
    pub diff: f64,
    /// `lambda_l` alone.
    pub value: f64,
    pub flops: u64,
    pub wall: f64,
    /// Solver iterations on the level itself.
    pub iterations: usize,
}

#[derive(Debug)]
pub struct Problem {
    pub cfg: FieldConfig<f64>,
    pub kind: Discretization,
    pub h0: f64,
    pub solver: SolverKind,
    pub cost_model: CostModel,
    meshes: Vec<OnceLock<Arc<Mesh<f64>>>>,
}

impl Problem {
    pub fn new(cfg: FieldConfig<f64>, kind: Discretization, h0: f64, solver: SolverKind) -> Result<Self> {
        build_mesh(0, h0)?;
        Ok(Self {
            cfg,
            kind,
            h0,
            solver,
            cost_model: CostModel::Work,
            meshes: (0..=MAX_HIERARCHY_LEVEL).map(|_| OnceLock::new()).collect(),
        })
    }

    pub fn with_cost_model(mut self, model: CostModel) -> Self {
        self.cost_model = model;
        self
    }

    pub fn dim(&self) -> usize {
        self.cfg.dim()
    }

    pub fn h(&self, level: usize) -> f64 {
        self.h0 * 0.5f64.powi(level as i32)
    }

    pub fn mesh(&self, level: usize) -> Result<Arc<Mesh<f64>>> {
        let slot = self
            .meshes
            .get(level)
            .ok_or_else(|| Error::InvalidInput(format!("level {level} exceeds the maximum {MAX_HIERARCHY_LEVEL}")))?;
        if let Some(m) = slot.get() {
            return Ok(m.clone());
        }
        let m = Arc::new(build_mesh(level, self.h0)?);
        Ok(slot.get_or_init(|| m).clone())
    }

    pub fn assemble(&self, level: usize, omega: &SampleVector<f64>, t: f64) -> Result<AssembledSystem<f64>> {
        assemble(&*self.mesh(level)?, &self.cfg, omega, self.kind, t)
    }

    /// Modelled or measured cost of one sample in seconds.
    pub fn cost_seconds(&self, outcome: &SampleOutcome) -> f64 {
        match self.cost_model {
            CostModel::Work => outcome.flops as f64 / NOMINAL_FLOPS_PER_SECOND,
            CostModel::WallClock => outcome.wall,
        }
    }

    /// `lambda_l(omega, t)` on its own.
    pub fn sample_value(&self, level: usize, omega: &SampleVector<f64>, t: f64) -> Result<SampleOutcome> {
        let start = Instant::now();
        let out = match self.solver {
            SolverKind::Rqi => {
                let s0 = self.assemble(0, omega, t)?;
                let mut flops = s0.flops;
                if level == 0 {
                    let settings = SolverSettings::default().with_eps(TG_EPS_STOP);
                    let g = coarse_initial_guess(&s0, &settings)?;
                    let r = rqi_from_guess(&s0, &g, &settings)?;
                    flops += g.flops + r.flops;
                    (real_part(r.lambda), flops, r.iterations)
                } else {
                    let sl = self.assemble(level, omega, t)?;
                    flops += sl.flops;
                    let (m0, ml) = (self.mesh(0)?, self.mesh(level)?);
                    let r = tg_rqi([&s0, &s0, &sl], [&m0, &m0, &ml], &SolverSettings::default())?;
                    (real_part(r.lambda_fine), flops + r.flops, r.fine.iterations)
                }
            }
            SolverKind::Arnoldi => {
                let (v, f, it) = self.arnoldi_value(level, omega, t)?;
                (v, f, it)
            }
        };
        Ok(SampleOutcome { diff: out.0, value: out.0, flops: out.1, wall: start.elapsed().as_secs_f64(), iterations: out.2 })
    }

    fn arnoldi_value(&self, level: usize, omega: &SampleVector<f64>, t: f64) -> Result<(f64, u64, usize)> {
        let sys = self.assemble(level, omega, t)?;
        let r = arnoldi_smallest(&sys, 1, &SolverSettings::for_level(level))?;
        Ok((real_part(r[0].lambda), sys.flops + r[0].flops, r[0].iterations))
    }

    /// `lambda_l(omega, t_fine) - lambda_{l-1}(omega, t_coarse)` for `l >= 1`,
    /// or `lambda_0(omega, t_fine)` for `l = 0`.
    pub fn sample_difference(&self, level: usize, omega: &SampleVector<f64>, t_fine: f64, t_coarse: f64) -> Result<SampleOutcome> {
        if level == 0 {
            return self.sample_value(0, omega, t_fine);
        }
        let start = Instant::now();
        let (diff, value, flops, iterations) = match self.solver {
            SolverKind::Rqi => {
                let s0 = self.assemble(0, omega, t_coarse)?;
                let s2 = self.assemble(level, omega, t_fine)?;
                let (m0, m1, m2) = (self.mesh(0)?, self.mesh(level - 1)?, self.mesh(level)?);
                let mut flops = s0.flops + s2.flops;
                let r = if level == 1 {
                    tg_rqi([&s0, &s0, &s2], [&m0, &m0, &m2], &SolverSettings::default())?
                } else {
                    let s1 = self.assemble(level - 1, omega, t_coarse)?;
                    flops += s1.flops;
                    tg_rqi([&s0, &s1, &s2], [&m0, &m1, &m2], &SolverSettings::default())?
                };
                let fine = real_part(r.lambda_fine);
                let coarse = real_part(r.lambda_coarse);
                (fine - coarse, fine, flops + r.flops, r.fine.iterations)
            }
            SolverKind::Arnoldi => {
                let (fine, f1, it) = self.arnoldi_value(level, omega, t_fine)?;
                let (coarse, f0, _) = self.arnoldi_value(level - 1, omega, t_coarse)?;
                (fine - coarse, fine, f0 + f1, it)
            }
        };
        Ok(SampleOutcome { diff, value, flops, wall: start.elapsed().as_secs_f64(), iterations })
    }
}

/// The sample value of a computed smallest eigenvalue. An unstable
/// discretisation can turn it into a complex pair; the pair shares its real
/// part, which is used instead.
fn real_part(l: num_complex::Complex<f64>) -> f64 {
    if l.im.abs() > 1e-8 * l.norm() {
        log::warn!("smallest eigenvalue {l} is not real; using its real part");
    }
    l.re
}
