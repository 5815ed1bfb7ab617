//! Cascadic drivers: exact solve on the coarsest grid, then prolong, denoise
//! and smooth on each finer grid. Also the single-level Krylov baseline.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::degradation::{apply_blur, build_toeplitz_capped, GaussianPsf};
use crate::error::{invalid, Error, Result};
use crate::krylov::{make_operator_action, smooth, SmootherKind, SolveControl};
use crate::multigrid::denoise::{pm_denoise, PmParams};
use crate::multigrid::hierarchy::{build_hierarchy_with, GridHierarchy};
use crate::multigrid::prolong::{prolong_first, prolong_quadratic};
use crate::multigrid::schedule::{IterationSchedule, ScheduleKind};
use crate::tensor::{direct_solve_capped, fro_norm, Dims3, ImageTensor, DEFAULT_DENSE_CAP};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Baseline,
    Ctmg,
    Ectmg,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Baseline, Method::Ctmg, Method::Ectmg];

    pub fn name(&self) -> &'static str {
        match self {
            Method::Baseline => "baseline",
            Method::Ctmg => "ctmg",
            Method::Ectmg => "ectmg",
        }
    }

    pub fn schedule_kind(&self) -> Option<ScheduleKind> {
        match self {
            Method::Baseline => None,
            Method::Ctmg => Some(ScheduleKind::Classic),
            Method::Ectmg => Some(ScheduleKind::Economic),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "baseline" => Ok(Method::Baseline),
            "ctmg" => Ok(Method::Ctmg),
            "ectmg" => Ok(Method::Ectmg),
            other => Err(invalid(format!(
                "unknown method `{other}` (expected baseline|ctmg|ectmg)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CascadeConfig {
    pub sigma: f64,
    pub levels: usize,
    pub smoother: SmootherKind,
    pub pm: PmParams,
    pub schedule: IterationSchedule,
    /// Truncation radius of the blur kernel; `None` uses `ceil(6 sigma)`.
    pub radius: Option<usize>,
    /// Unknown cap for the coarsest-level direct solve.
    pub coarse_cap: usize,
    pub record_history: bool,
}

impl CascadeConfig {
    pub fn new(sigma: f64, levels: usize, smoother: SmootherKind, schedule: IterationSchedule) -> Self {
        Self {
            sigma,
            levels,
            smoother,
            pm: PmParams::default(),
            schedule,
            radius: None,
            coarse_cap: DEFAULT_DENSE_CAP,
            record_history: false,
        }
    }

    pub fn psf(&self) -> Result<GaussianPsf> {
        match self.radius {
            Some(r) => GaussianPsf::new(self.sigma, r),
            None => GaussianPsf::with_default_radius(self.sigma),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LevelReport {
    pub level: usize,
    pub dims: Dims3,
    /// Smoothing iterations; 0 on the directly solved coarsest level.
    pub iters: usize,
    pub matvecs: usize,
    pub final_rel_residual: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residual_history: Option<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct CascadeOutcome {
    pub restored: ImageTensor,
    /// Coarsest level first.
    pub levels: Vec<LevelReport>,
    pub wall_seconds: f64,
}

impl CascadeOutcome {
    pub fn iters_per_level(&self) -> Vec<usize> {
        self.levels.iter().map(|l| l.iters).collect()
    }

    pub fn total_smoothing_iters(&self) -> usize {
        self.levels.iter().map(|l| l.iters).sum()
    }

    pub fn fine_level(&self) -> &LevelReport {
        self.levels.last().expect("at least one level")
    }
}

/// Runs the cascade with the schedule in `cfg`.
pub fn cascade(g: &ImageTensor, cfg: &CascadeConfig) -> Result<CascadeOutcome> {
    let start = Instant::now();
    cfg.schedule.validate()?;
    cfg.pm.validate()?;
    let psf = cfg.psf()?;
    let hierarchy = build_hierarchy_with(g, &psf, cfg.levels, cfg.coarse_cap)?;
    let (restored, levels) = run_levels(&hierarchy, cfg)?;
    Ok(CascadeOutcome {
        restored,
        levels,
        wall_seconds: start.elapsed().as_secs_f64(),
    })
}

fn run_levels(h: &GridHierarchy, cfg: &CascadeConfig) -> Result<(ImageTensor, Vec<LevelReport>)> {
    let finest = h.finest_level();
    let coarsest = h.level(1);
    let dense = build_toeplitz_capped(&coarsest.psf, coarsest.dims(), cfg.coarse_cap)?;
    let exact = direct_solve_capped(&dense, &coarsest.data, cfg.coarse_cap)?;
    let coarse_residual = {
        let r = coarsest.data.sub(&apply_blur(&coarsest.psf, &exact))?;
        fro_norm(&r) / fro_norm(&coarsest.data).max(f64::MIN_POSITIVE)
    };
    let mut reports = vec![LevelReport {
        level: 1,
        dims: coarsest.dims(),
        iters: 0,
        matvecs: 0,
        final_rel_residual: coarse_residual,
        residual_history: None,
    }];

    // the two most recent level solutions, finer last
    let mut previous: Option<ImageTensor> = None;
    let mut current = exact;
    for l in 2..=finest {
        let level = h.level(l);
        let initial = match &previous {
            None => prolong_first(&current),
            Some(coarser) => prolong_quadratic(&current, coarser)?,
        };
        let denoised = pm_denoise(&initial, &cfg.pm)?;
        let mut ctl = SolveControl::fixed(cfg.schedule.count(l, finest));
        ctl.record_history = cfg.record_history;
        let op = make_operator_action(&level.psf);
        let out = smooth(cfg.smoother, &op, &level.data, &denoised, &ctl)?;
        reports.push(LevelReport {
            level: l,
            dims: level.dims(),
            iters: out.iters_done,
            matvecs: out.matvecs,
            final_rel_residual: out.final_rel_residual,
            residual_history: out.residual_history,
        });
        previous = Some(std::mem::replace(&mut current, out.solution));
    }
    Ok((current, reports))
}

/// Classic cascadic tensor multigrid: `m_l = m_star * l^2`.
pub fn ctmg(
    g: &ImageTensor,
    sigma: f64,
    levels: usize,
    smoother: SmootherKind,
    pm: &PmParams,
    schedule: &IterationSchedule,
) -> Result<CascadeOutcome> {
    if schedule.kind != ScheduleKind::Classic {
        return Err(invalid("ctmg needs a classic schedule"));
    }
    let mut cfg = CascadeConfig::new(sigma, levels, smoother, *schedule);
    cfg.pm = *pm;
    cascade(g, &cfg)
}

/// Economic cascadic tensor multigrid.
pub fn ectmg(
    g: &ImageTensor,
    sigma: f64,
    levels: usize,
    smoother: SmootherKind,
    pm: &PmParams,
    schedule: &IterationSchedule,
) -> Result<CascadeOutcome> {
    if schedule.kind != ScheduleKind::Economic {
        return Err(invalid("ectmg needs an economic schedule"));
    }
    let mut cfg = CascadeConfig::new(sigma, levels, smoother, *schedule);
    cfg.pm = *pm;
    cascade(g, &cfg)
}

/// Single-level Krylov solve on the finest grid starting from `F0 = G`.
pub fn baseline(
    g: &ImageTensor,
    psf: &GaussianPsf,
    smoother: SmootherKind,
    ctl: &SolveControl,
) -> Result<CascadeOutcome> {
    let start = Instant::now();
    let op = make_operator_action(psf);
    let out = smooth(smoother, &op, g, g, ctl)?;
    Ok(CascadeOutcome {
        levels: vec![LevelReport {
            level: 1,
            dims: g.dims(),
            iters: out.iters_done,
            matvecs: out.matvecs,
            final_rel_residual: out.final_rel_residual,
            residual_history: out.residual_history,
        }],
        restored: out.solution,
        wall_seconds: start.elapsed().as_secs_f64(),
    })
}
