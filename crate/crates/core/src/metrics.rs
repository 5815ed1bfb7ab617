//! Restoration quality: relative Frobenius error and PSNR, plus the report
//! that bundles them with the solver accounting.

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::krylov::SmootherKind;
use crate::multigrid::{CascadeOutcome, LevelReport, Method};
use crate::tensor::{ensure_same, fro_norm, ImageTensor};

/// `||candidate - reference||_F / ||reference||_F`.
pub fn relative_error(reference: &ImageTensor, candidate: &ImageTensor) -> Result<f64> {
    ensure_same(reference.dims(), candidate.dims())?;
    let denom = fro_norm(reference);
    if denom == 0.0 {
        return Err(Error::ZeroReference);
    }
    Ok(fro_norm(&candidate.sub(reference)?) / denom)
}

/// `10 log10(n1 n2 n3 F_max^2 / ||candidate - reference||_F^2)` with `F_max`
/// the largest entry of the reference. Identical images give `+inf`.
pub fn psnr(reference: &ImageTensor, candidate: &ImageTensor) -> Result<f64> {
    ensure_same(reference.dims(), candidate.dims())?;
    let diff = candidate.sub(reference)?;
    let err2: f64 = diff.data().iter().map(|v| v * v).sum();
    if err2 == 0.0 {
        return Ok(f64::INFINITY);
    }
    let peak = reference.max_value();
    let n = reference.dims().len() as f64;
    Ok(10.0 * (n * peak * peak / err2).log10())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QualityScore {
    #[serde(serialize_with = "serialize_psnr")]
    pub psnr: f64,
    pub re: f64,
    pub f_max: f64,
}

pub fn score(reference: &ImageTensor, candidate: &ImageTensor) -> Result<QualityScore> {
    Ok(QualityScore {
        psnr: psnr(reference, candidate)?,
        re: relative_error(reference, candidate)?,
        f_max: reference.max_value(),
    })
}

/// Formats a PSNR value, writing `inf` for identical images.
pub fn format_psnr(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".to_string()
    } else {
        format!("{v}")
    }
}

fn serialize_psnr<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else {
        s.serialize_str(&format_psnr(*v))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RestorationReport {
    pub method: Method,
    pub smoother: SmootherKind,
    pub sigma: f64,
    pub levels: Vec<LevelReport>,
    pub iters_per_level: Vec<usize>,
    pub total_smoothing_iters: usize,
    pub wall_seconds: f64,
    pub final_rel_residual: f64,
    /// Present when a reference image was supplied.
    pub quality: Option<QualityScore>,
}

impl RestorationReport {
    pub fn assemble(
        method: Method,
        smoother: SmootherKind,
        sigma: f64,
        outcome: &CascadeOutcome,
        reference: Option<&ImageTensor>,
    ) -> Result<Self> {
        let quality = reference.map(|r| score(r, &outcome.restored)).transpose()?;
        Ok(Self {
            method,
            smoother,
            sigma,
            levels: outcome.levels.clone(),
            iters_per_level: outcome.iters_per_level(),
            total_smoothing_iters: outcome.total_smoothing_iters(),
            wall_seconds: outcome.wall_seconds,
            final_rel_residual: outcome.fine_level().final_rel_residual,
            quality,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::Dims3;
    use proptest::prelude::*;

    #[test]
    fn identical_images() {
        let f = ImageTensor::filled(Dims3::new(2, 2, 3), 0.5);
        assert_eq!(relative_error(&f, &f).unwrap(), 0.0);
        assert_eq!(psnr(&f, &f).unwrap(), f64::INFINITY);
        assert_eq!(format_psnr(f64::INFINITY), "inf");
    }

    #[test]
    fn uniform_offset_relative_error() {
        let f = ImageTensor::filled(Dims3::new(2, 2, 3), 1.0);
        let g = ImageTensor::filled(Dims3::new(2, 2, 3), 1.1);
        assert!((relative_error(&f, &g).unwrap() - 0.1).abs() < 1e-15);
    }

    #[test]
    fn single_pixel_psnr() {
        let d = Dims3::new(1, 1, 1);
        let f = ImageTensor::new(d, vec![1.0]).unwrap();
        let g = ImageTensor::new(d, vec![0.9]).unwrap();
        assert!((psnr(&f, &g).unwrap() - 20.0).abs() < 1e-12);
    }

    #[test]
    fn psnr_is_size_invariant_for_equal_per_pixel_error() {
        let small = Dims3::new(2, 2, 3);
        let big = Dims3::new(4, 2, 3);
        let pattern = |i: usize, j: usize, k: usize| 0.2 + 0.1 * ((i + j + k) % 3) as f64;
        let f1 = ImageTensor::from_fn(small, |i, j, k| pattern(i % 2, j, k));
        let g1 = ImageTensor::from_fn(small, |i, j, k| pattern(i % 2, j, k) + if (i + k) % 2 == 0 { 0.05 } else { -0.03 });
        let f2 = ImageTensor::from_fn(big, |i, j, k| pattern(i % 2, j, k));
        let g2 = ImageTensor::from_fn(big, |i, j, k| pattern(i % 2, j, k) + if (i + k) % 2 == 0 { 0.05 } else { -0.03 });
        assert!((psnr(&f1, &g1).unwrap() - psnr(&f2, &g2).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn error_paths() {
        let z = ImageTensor::zeros(Dims3::new(2, 2, 1));
        assert!(matches!(relative_error(&z, &z), Err(Error::ZeroReference)));
        let other = ImageTensor::zeros(Dims3::new(2, 1, 1));
        assert!(psnr(&z, &other).is_err());
    }

    proptest! {
        #[test]
        fn re_is_scale_invariant(c in prop_oneof![-5.0f64..-0.1, 0.1f64..5.0], seed in 0u64..1000) {
            let d = Dims3::new(3, 2, 3);
            let f = ImageTensor::from_fn(d, |i, j, k| 0.1 + ((i * 7 + j * 3 + k + seed as usize) % 5) as f64);
            let g = ImageTensor::from_fn(d, |i, j, k| ((i + j * 5 + k * 2 + seed as usize) % 7) as f64 * 0.3);
            let a = relative_error(&f, &g).unwrap();
            let b = relative_error(&f.scaled(c), &g.scaled(c)).unwrap();
            prop_assert!((a - b).abs() <= 1e-12 * a.max(1.0));
        }

        #[test]
        fn psnr_and_re_move_together(e1 in 0.001f64..0.5, e2 in 0.001f64..0.5) {
            let d = Dims3::new(2, 3, 3);
            let f = ImageTensor::from_fn(d, |i, j, k| 0.2 + 0.1 * (i + j + k) as f64);
            let g1 = ImageTensor::from_fn(d, |i, j, k| f.get(i, j, k) + e1 * if (i + j) % 2 == 0 { 1.0 } else { -1.0 });
            let g2 = ImageTensor::from_fn(d, |i, j, k| f.get(i, j, k) + e2 * if (i + j) % 2 == 0 { 1.0 } else { -1.0 });
            let (p1, p2) = (psnr(&f, &g1).unwrap(), psnr(&f, &g2).unwrap());
            let (r1, r2) = (relative_error(&f, &g1).unwrap(), relative_error(&f, &g2).unwrap());
            if e1 < e2 {
                prop_assert!(p1 > p2 && r1 < r2);
            } else if e1 > e2 {
                prop_assert!(p1 < p2 && r1 > r2);
            }
        }
    }
}
