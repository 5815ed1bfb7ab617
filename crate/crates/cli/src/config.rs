use std::path::PathBuf;

use anyhow::{bail, Result};
use ctmg_core::{
    baseline, cascade, CascadeConfig, CascadeOutcome, GaussianPsf, ImageTensor, IterationSchedule, Method,
    PmParams, SmootherKind, SolveControl,
};
use serde::{Deserialize, Serialize};

/// Everything that determines a restoration run. Serialized verbatim into
/// every report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub input: Option<PathBuf>,
    pub reference: Option<PathBuf>,
    pub sigma: f64,
    /// Kernel truncation radius; `None` means `ceil(6 sigma)`.
    pub radius: Option<usize>,
    pub noise: f64,
    pub seed: u64,
    pub method: Method,
    pub smoother: SmootherKind,
    pub levels: usize,
    pub m_star: u32,
    pub m0: f64,
    pub beta: f64,
    pub eps0: f64,
    pub pm: PmParams,
    /// Baseline stopping tolerance on the relative residual.
    pub rel_tol: f64,
    /// Baseline iteration cap (tolerance mode) or exact count (fixed mode).
    pub max_iters: usize,
    /// Run the baseline for exactly `max_iters` sweeps instead of to `rel_tol`.
    pub fixed_iters: bool,
    pub out_png: Option<PathBuf>,
    pub out_eten: Option<PathBuf>,
    pub report: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let econ = IterationSchedule::economic();
        Self {
            input: None,
            reference: None,
            sigma: 0.9,
            radius: None,
            noise: 0.001,
            seed: 0,
            method: Method::Ctmg,
            smoother: SmootherKind::Cr,
            levels: 4,
            m_star: 1,
            m0: econ.m0,
            beta: econ.beta,
            eps0: econ.eps0,
            pm: PmParams::default(),
            rel_tol: 1e-6,
            max_iters: 2000,
            fixed_iters: false,
            out_png: None,
            out_eten: None,
            report: None,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            bail!("sigma must be positive and finite, got {}", self.sigma);
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            bail!("noise amplitude must be finite and >= 0, got {}", self.noise);
        }
        if self.radius == Some(0) {
            bail!("radius must be at least 1");
        }
        if self.method != Method::Baseline && self.levels < 2 {
            bail!("a cascade needs at least 2 levels, got {}", self.levels);
        }
        if !(self.rel_tol > 0.0 && self.rel_tol < 1.0) {
            bail!("rel_tol must lie in (0, 1), got {}", self.rel_tol);
        }
        if self.max_iters == 0 {
            bail!("max_iters must be at least 1");
        }
        self.schedule().validate()?;
        self.pm.validate()?;
        Ok(())
    }

    pub fn psf(&self) -> Result<GaussianPsf> {
        Ok(match self.radius {
            Some(r) => GaussianPsf::new(self.sigma, r)?,
            None => GaussianPsf::with_default_radius(self.sigma)?,
        })
    }

    pub fn schedule(&self) -> IterationSchedule {
        let base = match self.method {
            Method::Ectmg => IterationSchedule::economic(),
            _ => IterationSchedule::classic(self.m_star),
        };
        IterationSchedule {
            m_star: self.m_star,
            m0: self.m0,
            beta: self.beta,
            eps0: self.eps0,
            ..base
        }
    }

    pub fn baseline_control(&self) -> SolveControl {
        if self.fixed_iters {
            SolveControl::fixed(self.max_iters)
        } else {
            SolveControl::tolerance(self.rel_tol).with_max_iters(self.max_iters)
        }
    }

    /// Runs the configured method on degraded data `g`.
    pub fn restore(&self, g: &ImageTensor, record_history: bool) -> Result<CascadeOutcome> {
        self.validate()?;
        let out = match self.method {
            Method::Baseline => {
                let mut ctl = self.baseline_control();
                ctl.record_history = record_history;
                baseline(g, &self.psf()?, self.smoother, &ctl)?
            }
            Method::Ctmg | Method::Ectmg => {
                let mut cfg = CascadeConfig::new(self.sigma, self.levels, self.smoother, self.schedule());
                cfg.pm = self.pm;
                cfg.radius = self.radius;
                cfg.record_history = record_history;
                cascade(g, &cfg)?
            }
        };
        Ok(out)
    }
}
