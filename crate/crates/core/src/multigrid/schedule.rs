//! Per-level smoothing counts for the classic and economic cascades.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScheduleKind {
    Classic,
    Economic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationSchedule {
    pub kind: ScheduleKind,
    /// Classic multiplier: `m_l = ceil(m_star * l^2)`.
    pub m_star: u32,
    /// Economic fine-regime multiplier.
    pub m0: f64,
    /// Economic fine-regime growth factor per level below the finest.
    pub beta: f64,
    pub eps0: f64,
    /// Regime split; `None` means `L / 2`, compared unrounded.
    pub l0: Option<f64>,
    /// Coefficient of the economic coarse regime. Printed once as `m_star^2`
    /// and once as `1 / m_star^2`; both are 1 for `m_star = 1`.
    pub coarse_scale: f64,
}

impl IterationSchedule {
    pub fn classic(m_star: u32) -> Self {
        Self {
            kind: ScheduleKind::Classic,
            ..Self::economic()
        }
        .with_m_star(m_star)
    }

    /// Economic schedule with `m0 = 1`, `beta = 4`, `eps0 = 1/2`, `L0 = L/2`.
    pub fn economic() -> Self {
        Self {
            kind: ScheduleKind::Economic,
            m_star: 1,
            m0: 1.0,
            beta: 4.0,
            eps0: 0.5,
            l0: None,
            coarse_scale: 1.0,
        }
    }

    pub fn for_kind(kind: ScheduleKind) -> Self {
        Self {
            kind,
            ..Self::economic()
        }
    }

    pub fn with_m_star(mut self, m_star: u32) -> Self {
        self.m_star = m_star;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.m_star < 1 {
            return Err(invalid("m_star must be at least 1"));
        }
        for (name, v) in [
            ("m0", self.m0),
            ("beta", self.beta),
            ("eps0", self.eps0),
            ("coarse_scale", self.coarse_scale),
        ] {
            if !v.is_finite() {
                return Err(invalid(format!("{name} must be finite")));
            }
        }
        Ok(())
    }

    pub fn split_level(&self, finest: usize) -> f64 {
        self.l0.unwrap_or(finest as f64 / 2.0)
    }

    /// Smoothing count at level `l` of an `finest`-level cascade
    /// (`2 <= l <= finest`); always at least 1.
    pub fn count(&self, l: usize, finest: usize) -> usize {
        debug_assert!(l >= 2 && l <= finest);
        let raw = match self.kind {
            ScheduleKind::Classic => return (self.m_star as usize) * l * l,
            ScheduleKind::Economic => {
                let big_l = finest as f64;
                let l0 = self.split_level(finest);
                let lf = l as f64;
                if lf > l0 {
                    self.m0 * (big_l - l0).powi(2) * self.beta.powi((finest - l) as i32)
                } else {
                    // h_l = (1/2)^(l-1), so h_l^-2 = 4^(l-1)
                    let h_inv_sq = 4f64.powi(l as i32 - 1);
                    self.coarse_scale * (big_l - (2.0 - self.eps0) * lf) * h_inv_sq
                }
            }
        };
        // smallest positive integer not less than `raw`
        let c = raw.ceil();
        if c >= 1.0 {
            c as usize
        } else {
            1
        }
    }

    /// Counts for levels `2..=finest`.
    pub fn counts(&self, finest: usize) -> Vec<usize> {
        (2..=finest).map(|l| self.count(l, finest)).collect()
    }

    pub fn total(&self, finest: usize) -> usize {
        self.counts(finest).iter().sum()
    }

    /// Smoothing work in fine-grid sweep equivalents: level `l` has
    /// `4^(l - finest)` times the unknowns of the finest level.
    pub fn work(&self, finest: usize) -> f64 {
        (2..=finest)
            .map(|l| self.count(l, finest) as f64 * 0.25f64.powi((finest - l) as i32))
            .sum()
    }
}
