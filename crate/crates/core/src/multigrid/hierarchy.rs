use crate::degradation::GaussianPsf;
use crate::error::{invalid, Error, Result};
use crate::tensor::{Dims3, ImageTensor, DEFAULT_DENSE_CAP};

/// 2x2 block average per channel; halves both spatial extents.
pub fn restrict(x: &ImageTensor) -> Result<ImageTensor> {
    let d = x.dims();
    if d.rows % 2 != 0 || d.cols % 2 != 0 {
        return Err(invalid(format!("cannot restrict odd spatial dims {d}")));
    }
    let coarse = Dims3::new(d.rows / 2, d.cols / 2, d.channels);
    Ok(ImageTensor::from_fn(coarse, |i, j, k| {
        let (r, c) = (2 * i, 2 * j);
        0.25 * (x.get(r, c, k) + x.get(r, c + 1, k) + x.get(r + 1, c, k) + x.get(r + 1, c + 1, k))
    }))
}

#[derive(Debug, Clone)]
pub struct Level {
    /// 1 is the coarsest level.
    pub level: usize,
    pub psf: GaussianPsf,
    pub data: ImageTensor,
}

impl Level {
    pub fn dims(&self) -> Dims3 {
        self.data.dims()
    }
}

/// Levels `1..=L`, each holding the restricted data and the blur kernel.
#[derive(Debug, Clone)]
pub struct GridHierarchy {
    levels: Vec<Level>,
}

impl GridHierarchy {
    pub fn finest_level(&self) -> usize {
        self.levels.len()
    }

    /// Level `l`, 1-based.
    pub fn level(&self, l: usize) -> &Level {
        assert!(l >= 1 && l <= self.levels.len(), "level {l} out of range");
        &self.levels[l - 1]
    }

    pub fn dims_at(&self, l: usize) -> Dims3 {
        self.level(l).dims()
    }

    pub fn psf_at(&self, l: usize) -> &GaussianPsf {
        &self.level(l).psf
    }

    pub fn data_at(&self, l: usize) -> &ImageTensor {
        &self.level(l).data
    }

    pub fn iter(&self) -> impl Iterator<Item = &Level> {
        self.levels.iter()
    }
}

/// Checks that `dims` supports `levels` grid levels with a directly solvable
/// coarsest level.
pub fn check_hierarchy_shape(dims: Dims3, levels: usize, coarse_cap: usize) -> Result<Dims3> {
    if levels < 2 {
        return Err(invalid(format!("need at least 2 levels, got {levels}")));
    }
    let factor = 1usize
        .checked_shl((levels - 1) as u32)
        .filter(|f| *f <= dims.rows.max(dims.cols))
        .ok_or_else(|| invalid(format!("{levels} levels is too deep for {dims}")))?;
    if dims.rows % factor != 0 || dims.cols % factor != 0 {
        return Err(invalid(format!(
            "spatial dims of {dims} must be divisible by 2^(L-1) = {factor}"
        )));
    }
    let coarsest = Dims3::new(dims.rows / factor, dims.cols / factor, dims.channels);
    if coarsest.len() > coarse_cap {
        return Err(Error::DenseCapExceeded {
            unknowns: coarsest.len(),
            cap: coarse_cap,
        });
    }
    Ok(coarsest)
}

/// Restricts `g` down `levels - 1` times. Every level blurs with the same
/// `sigma` (in its own pixel units) and the default truncation radius.
pub fn build_hierarchy(g: &ImageTensor, sigma: f64, levels: usize) -> Result<GridHierarchy> {
    let psf = GaussianPsf::with_default_radius(sigma)?;
    build_hierarchy_with(g, &psf, levels, DEFAULT_DENSE_CAP)
}

pub fn build_hierarchy_with(
    g: &ImageTensor,
    psf: &GaussianPsf,
    levels: usize,
    coarse_cap: usize,
) -> Result<GridHierarchy> {
    check_hierarchy_shape(g.dims(), levels, coarse_cap)?;
    let mut data = vec![g.clone()];
    for _ in 1..levels {
        let next = restrict(data.last().expect("non-empty"))?;
        data.push(next);
    }
    data.reverse();
    let levels = data
        .into_iter()
        .enumerate()
        .map(|(idx, data)| Level {
            level: idx + 1,
            psf: psf.clone(),
            data,
        })
        .collect();
    Ok(GridHierarchy { levels })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn restrict_constant_and_block_mean() {
        let c = ImageTensor::filled(Dims3::new(4, 6, 3), 0.3);
        let r = restrict(&c).unwrap();
        assert_eq!(r.dims(), Dims3::new(2, 3, 3));
        assert!(r.data().iter().all(|v| (*v - 0.3).abs() < 1e-16));

        let block = ImageTensor::new(Dims3::new(2, 2, 1), vec![0.0, 1.0, 2.0, 3.0]).unwrap();
        assert_eq!(restrict(&block).unwrap().data(), &[1.5]);
    }

    #[test]
    fn restrict_preserves_channel_means() {
        let x = ImageTensor::from_fn(Dims3::new(6, 4, 3), |i, j, k| ((i * 5 + j * 3 + k * 7) % 11) as f64);
        let r = restrict(&x).unwrap();
        for k in 0..3 {
            let fine: f64 = x.channel(k).iter().sum::<f64>() / 24.0;
            let coarse: f64 = r.channel(k).iter().sum::<f64>() / 6.0;
            assert!((fine - coarse).abs() < 1e-14);
        }
    }

    #[test]
    fn restrict_rejects_odd_dims() {
        assert!(restrict(&ImageTensor::zeros(Dims3::new(3, 4, 3))).is_err());
        assert!(restrict(&ImageTensor::zeros(Dims3::new(4, 5, 3))).is_err());
    }

    #[test]
    fn four_level_dims() {
        let g = ImageTensor::zeros(Dims3::new(128, 128, 3));
        let h = build_hierarchy(&g, 0.9, 4).unwrap();
        assert_eq!(h.finest_level(), 4);
        let sizes: Vec<_> = (1..=4).map(|l| h.dims_at(l).rows).collect();
        assert_eq!(sizes, vec![16, 32, 64, 128]);
        assert!(h.iter().all(|lvl| lvl.psf.sigma() == 0.9 && lvl.dims().channels == 3));
        assert_eq!(h.data_at(4), &g);
    }

    #[test]
    fn two_level_constant() {
        let g = ImageTensor::filled(Dims3::new(8, 8, 3), 0.7);
        let h = build_hierarchy(&g, 0.7, 2).unwrap();
        for l in 1..=2 {
            assert!(h.data_at(l).data().iter().all(|v| (*v - 0.7).abs() < 1e-15));
        }
    }

    #[test]
    fn shape_violations() {
        let g = ImageTensor::zeros(Dims3::new(32, 32, 3));
        assert!(build_hierarchy(&g, 0.7, 1).is_err());
        assert!(build_hierarchy(&ImageTensor::zeros(Dims3::new(36, 32, 3)), 0.7, 4).is_err());
        // coarsest 32x32x3 is above the dense cap
        assert!(matches!(
            build_hierarchy(&ImageTensor::zeros(Dims3::new(64, 64, 3)), 0.7, 2),
            Err(Error::DenseCapExceeded { .. })
        ));
        assert!(build_hierarchy(&g, 0.7, 7).is_err());
    }
}
