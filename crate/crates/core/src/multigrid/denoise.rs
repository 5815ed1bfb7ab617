//! Perona-Malik edge-preserving diffusion, applied channel by channel with
//! an explicit four-neighbor scheme.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::tensor::ImageTensor;

/// How the edge threshold `k` of the diffusion coefficient is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeThreshold {
    Fixed(f64),
    /// `k = factor * max |grad u|` per channel, measured on the input of each
    /// `pm_denoise` call.
    RelativeToMaxGradient(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PmParams {
    pub tau: f64,
    pub threshold: EdgeThreshold,
    pub iters: usize,
}

impl Default for PmParams {
    fn default() -> Self {
        Self {
            tau: 0.25,
            threshold: EdgeThreshold::RelativeToMaxGradient(0.1),
            iters: 10,
        }
    }
}

impl PmParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0 && self.tau <= 0.25) {
            return Err(invalid(format!("tau must lie in (0, 1/4], got {}", self.tau)));
        }
        match self.threshold {
            EdgeThreshold::Fixed(k) | EdgeThreshold::RelativeToMaxGradient(k) if !(k > 0.0) || !k.is_finite() => {
                Err(invalid(format!("edge threshold must be positive, got {k}")))
            }
            _ => Ok(()),
        }
    }
}

/// Diffusion coefficient `g(s) = 1 / (1 + (s/k)^2)`.
#[inline]
pub fn edge_stopping(s: f64, k: f64) -> f64 {
    let t = s / k;
    1.0 / (1.0 + t * t)
}

/// Largest forward-difference gradient magnitude of a plane (replicate
/// boundary).
pub fn max_gradient(plane: &[f64], rows: usize, cols: usize) -> f64 {
    let mut best = 0.0f64;
    for i in 0..rows {
        for j in 0..cols {
            let u = plane[i * cols + j];
            let dy = if i + 1 < rows { plane[(i + 1) * cols + j] - u } else { 0.0 };
            let dx = if j + 1 < cols { plane[i * cols + j + 1] - u } else { 0.0 };
            best = best.max((dx * dx + dy * dy).sqrt());
        }
    }
    best
}

/// One explicit step `u + tau * sum_d g(|D_d u|) D_d u` over the four
/// one-sided neighbor differences.
pub fn pm_step(plane: &[f64], rows: usize, cols: usize, tau: f64, k: f64) -> Vec<f64> {
    let mut out = vec![0.0; plane.len()];
    for i in 0..rows {
        for j in 0..cols {
            let u = plane[i * cols + j];
            let mut flux = 0.0;
            let mut visit = |v: f64| {
                let d = v - u;
                if d != 0.0 {
                    flux += edge_stopping(d.abs(), k) * d;
                }
            };
            if i > 0 {
                visit(plane[(i - 1) * cols + j]);
            }
            if i + 1 < rows {
                visit(plane[(i + 1) * cols + j]);
            }
            if j > 0 {
                visit(plane[i * cols + j - 1]);
            }
            if j + 1 < cols {
                visit(plane[i * cols + j + 1]);
            }
            out[i * cols + j] = u + tau * flux;
        }
    }
    out
}

pub fn pm_denoise(x: &ImageTensor, p: &PmParams) -> Result<ImageTensor> {
    p.validate()?;
    let d = x.dims();
    let mut out = x.clone();
    if p.iters == 0 {
        return Ok(out);
    }
    for k in 0..d.channels {
        let mut plane = x.channel(k);
        let threshold = match p.threshold {
            EdgeThreshold::Fixed(t) => t,
            EdgeThreshold::RelativeToMaxGradient(f) => f * max_gradient(&plane, d.rows, d.cols),
        };
        // zero threshold means a flat channel, which diffusion leaves alone
        if threshold == 0.0 {
            continue;
        }
        for _ in 0..p.iters {
            plane = pm_step(&plane, d.rows, d.cols, p.tau, threshold);
        }
        out.set_channel(k, &plane);
    }
    Ok(out)
}
