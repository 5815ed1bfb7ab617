//! Deterministic synthetic test scenes: sharp edges, smooth gradients and a
//! band of fine texture. Values are multiples of 1/255 so the scenes survive
//! a PNG round trip unchanged.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use anyhow::{anyhow, bail, Result};
use ctmg_core::{Dims3, ImageTensor};

use crate::png_io::{load_png, quantize};

pub const SCENE_NAMES: [&str; 3] = ["shapes", "stripes", "rings"];

fn shapes(y: f64, x: f64, k: usize) -> f64 {
    let kf = k as f64;
    let mut v = 0.25 + 0.35 * x + 0.15 * y * (kf + 1.0) / 3.0;
    if ((x - 0.35).powi(2) + (y - 0.4).powi(2)).sqrt() < 0.2 {
        v = 0.85 - 0.2 * kf;
    }
    if x > 0.6 && x < 0.85 && y > 0.55 && y < 0.8 {
        v = 0.15 + 0.3 * kf;
    }
    if y > 0.85 {
        v += 0.1 * ((x * 115.0).sin() * (y * 90.0).cos());
    }
    v
}

fn stripes(y: f64, x: f64, k: usize) -> f64 {
    let band = ((x * 8.0).floor() as i64 + k as i64) % 3;
    let base = 0.2 + 0.25 * band as f64;
    base + 0.2 * (std::f64::consts::PI * y).sin() * if y > 0.5 { 1.0 } else { -0.5 }
}

fn rings(y: f64, x: f64, k: usize) -> f64 {
    let r = ((x - 0.5).powi(2) + (y - 0.5).powi(2)).sqrt();
    let ring = if ((r * 10.0).floor() as i64) % 2 == 0 { 0.7 } else { 0.3 };
    ring + 0.15 * ((k as f64 + 1.0) * 2.0 * x).cos() * (1.0 - r)
}

/// Renders a named scene at `n x n x 3`.
pub fn synthetic(name: &str, n: usize) -> Result<ImageTensor> {
    let f: fn(f64, f64, usize) -> f64 = match name {
        "shapes" => shapes,
        "stripes" => stripes,
        "rings" => rings,
        other => bail!("unknown scene `{other}` (known: {})", SCENE_NAMES.join(", ")),
    };
    let nf = n as f64;
    Ok(ImageTensor::from_fn(Dims3::new(n, n, 3), |i, j, k| {
        quantize(f(i as f64 / nf, j as f64 / nf, k)) as f64 / 255.0
    }))
}

/// A benchmark input: `synth:<name>[:<size>]` or a PNG path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ImageSource {
    Synthetic { name: String, size: usize },
    Png(PathBuf),
}

pub const DEFAULT_SCENE_SIZE: usize = 128;

impl ImageSource {
    pub fn id(&self) -> String {
        self.to_string()
    }

    pub fn load(&self) -> Result<ImageTensor> {
        match self {
            ImageSource::Synthetic { name, size } => synthetic(name, *size),
            ImageSource::Png(p) => load_png(p),
        }
    }
}

impl fmt::Display for ImageSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ImageSource::Synthetic { name, size } => write!(f, "synth:{name}:{size}"),
            ImageSource::Png(p) => write!(f, "{}", p.display()),
        }
    }
}

impl FromStr for ImageSource {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        let Some(rest) = s.strip_prefix("synth:") else {
            return Ok(ImageSource::Png(PathBuf::from(s)));
        };
        let (name, size) = match rest.split_once(':') {
            Some((name, size)) => (
                name,
                size.parse::<usize>().map_err(|e| anyhow!("bad scene size in `{s}`: {e}"))?,
            ),
            None => (rest, DEFAULT_SCENE_SIZE),
        };
        if !SCENE_NAMES.contains(&name) {
            bail!("unknown scene `{name}` (known: {})", SCENE_NAMES.join(", "));
        }
        if size == 0 {
            bail!("scene size must be positive");
        }
        Ok(ImageSource::Synthetic {
            name: name.to_string(),
            size,
        })
    }
}
