//! Sweep of images x sigmas x methods x smoothers. Rows are computed in
//! parallel but always emitted in sweep order.

use std::io::Write;

use anyhow::Result;
use ctmg_core::metrics::{format_psnr, score};
use ctmg_core::{degrade, ImageTensor, Method, NoiseSpec, SmootherKind};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::scenes::ImageSource;

pub const CSV_HEADER: [&str; 10] = [
    "image",
    "sigma",
    "method",
    "smoother",
    "levels",
    "cpu_seconds",
    "psnr_db",
    "re",
    "iters_per_level",
    "status",
];

pub const TRACE_HEADER: [&str; 7] = ["image", "sigma", "method", "smoother", "level", "iteration", "rel_residual"];

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchConfig {
    pub images: Vec<String>,
    pub sigmas: Vec<f64>,
    pub methods: Vec<Method>,
    pub smoothers: Vec<SmootherKind>,
    /// Template for every row; method, smoother and sigma are overwritten.
    pub run: RunConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkRow {
    pub image: String,
    pub sigma: f64,
    pub method: Method,
    pub smoother: SmootherKind,
    pub levels: usize,
    pub cpu_seconds: f64,
    pub psnr: Option<f64>,
    pub re: Option<f64>,
    pub iters_per_level: Vec<usize>,
    /// `None` on success, the error message otherwise.
    pub error: Option<String>,
    /// `(level, relative residual per iteration)`.
    pub traces: Vec<(usize, Vec<f64>)>,
}

impl BenchmarkRow {
    pub fn csv_record(&self) -> Vec<String> {
        let opt = |v: Option<f64>, f: fn(f64) -> String| v.map(f).unwrap_or_default();
        vec![
            self.image.clone(),
            self.sigma.to_string(),
            self.method.to_string(),
            self.smoother.to_string(),
            self.levels.to_string(),
            self.cpu_seconds.to_string(),
            opt(self.psnr, format_psnr),
            opt(self.re, |v| v.to_string()),
            self.iters_per_level
                .iter()
                .map(|i| i.to_string())
                .collect::<Vec<_>>()
                .join(";"),
            match &self.error {
                None => "ok".to_string(),
                Some(e) => format!("error: {e}"),
            },
        ]
    }
}

struct Job<'a> {
    image: &'a str,
    image_idx: usize,
    sigma_idx: usize,
    sigma: f64,
    method: Method,
    smoother: SmootherKind,
}

/// Noise seed for an (image, sigma) pair; every method and smoother sees
/// the same degraded data.
pub fn row_seed(base: u64, image_idx: usize, sigma_idx: usize) -> u64 {
    base.wrapping_add((image_idx as u64) << 32).wrapping_add(sigma_idx as u64)
}

fn run_job(cfg: &BenchConfig, job: &Job<'_>, original: &Result<ImageTensor, String>) -> BenchmarkRow {
    let mut run = cfg.run.clone();
    run.sigma = job.sigma;
    run.method = job.method;
    run.smoother = job.smoother;
    run.seed = row_seed(cfg.run.seed, job.image_idx, job.sigma_idx);
    let mut row = BenchmarkRow {
        image: job.image.to_string(),
        sigma: job.sigma,
        method: job.method,
        smoother: job.smoother,
        levels: if job.method == Method::Baseline { 1 } else { run.levels },
        cpu_seconds: 0.0,
        psnr: None,
        re: None,
        iters_per_level: Vec::new(),
        error: None,
        traces: Vec::new(),
    };
    let mut attempt = || -> Result<()> {
        let f = original.as_ref().map_err(|e| anyhow::anyhow!("{e}"))?;
        let g = degrade(f, &run.psf()?, &NoiseSpec::new(run.noise, run.seed)?);
        let out = run.restore(&g, true)?;
        let q = score(f, &out.restored)?;
        row.cpu_seconds = out.wall_seconds;
        row.psnr = Some(q.psnr);
        row.re = Some(q.re);
        row.iters_per_level = out.iters_per_level();
        row.traces = out
            .levels
            .iter()
            .filter_map(|l| l.residual_history.clone().map(|h| (l.level, h)))
            .collect();
        Ok(())
    };
    if let Err(e) = attempt() {
        row.error = Some(format!("{e:#}"));
    }
    row
}

pub fn run_benchmark(cfg: &BenchConfig) -> Vec<BenchmarkRow> {
    let originals: Vec<Result<ImageTensor, String>> = cfg
        .images
        .iter()
        .map(|s| {
            s.parse::<ImageSource>()
                .and_then(|src| src.load())
                .map_err(|e| format!("{e:#}"))
        })
        .collect();
    let mut jobs = Vec::new();
    for (image_idx, image) in cfg.images.iter().enumerate() {
        for (sigma_idx, &sigma) in cfg.sigmas.iter().enumerate() {
            for &method in &cfg.methods {
                for &smoother in &cfg.smoothers {
                    jobs.push(Job {
                        image,
                        image_idx,
                        sigma_idx,
                        sigma,
                        method,
                        smoother,
                    });
                }
            }
        }
    }
    jobs.par_iter()
        .map(|job| run_job(cfg, job, &originals[job.image_idx]))
        .collect()
}

pub fn write_csv<W: Write>(w: W, rows: &[BenchmarkRow]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(CSV_HEADER)?;
    for row in rows {
        out.write_record(row.csv_record())?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_traces<W: Write>(w: W, rows: &[BenchmarkRow]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(TRACE_HEADER)?;
    for row in rows {
        for (level, history) in &row.traces {
            for (it, r) in history.iter().enumerate() {
                out.write_record([
                    row.image.clone(),
                    row.sigma.to_string(),
                    row.method.to_string(),
                    row.smoother.to_string(),
                    level.to_string(),
                    it.to_string(),
                    r.to_string(),
                ])?;
            }
        }
    }
    out.flush()?;
    Ok(())
}
