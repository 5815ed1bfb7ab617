//! Gaussian point-spread function, the Toeplitz blur operator it generates,
//! and synthesis of degraded observations `G = T *3 F + N`.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::tensor::{Dims3, ImageTensor, Operator6, DEFAULT_DENSE_CAP};

/// Largest channel offset that can couple two channels of an RGB tensor.
pub const MAX_CHANNEL_OFFSET: usize = 2;

/// Unnormalized 3D Gaussian sample
/// `S(i, j, k) = exp(-(i^2 + j^2 + k^2) / (2 sigma^2)) / (sqrt(2 pi) sigma)^3`.
pub fn gaussian_value(sigma: f64, di: i64, dj: i64, dk: i64) -> f64 {
    let r2 = (di * di + dj * dj + dk * dk) as f64;
    let s = (2.0 * PI).sqrt() * sigma;
    (-r2 / (2.0 * sigma * sigma)).exp() / (s * s * s)
}

fn axis_weight(sigma: f64, d: i64) -> f64 {
    (-((d * d) as f64) / (2.0 * sigma * sigma)).exp() / ((2.0 * PI).sqrt() * sigma)
}

pub fn default_radius(sigma: f64) -> usize {
    ((6.0 * sigma).ceil() as usize).max(1)
}

/// Truncated Gaussian kernel over offsets `[-radius, radius]^2 x [-c, c]`
/// with `c = min(radius, 2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianPsf {
    sigma: f64,
    radius: usize,
    channel_radius: usize,
    kernel: Vec<f64>,
    /// 1D factors `(spatial, channel)` when the kernel is an exact outer product.
    factors: Option<(Vec<f64>, Vec<f64>)>,
}

impl GaussianPsf {
    pub fn new(sigma: f64, radius: usize) -> Result<Self> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(invalid(format!("sigma must be positive, got {sigma}")));
        }
        if radius < 1 {
            return Err(invalid("psf radius must be at least 1"));
        }
        let channel_radius = radius.min(MAX_CHANNEL_OFFSET);
        let (r, c) = (radius as i64, channel_radius as i64);
        let mut kernel = Vec::with_capacity((2 * radius + 1).pow(2) * (2 * channel_radius + 1));
        for di in -r..=r {
            for dj in -r..=r {
                for dk in -c..=c {
                    kernel.push(gaussian_value(sigma, di, dj, dk));
                }
            }
        }
        let spatial = (-r..=r).map(|d| axis_weight(sigma, d)).collect();
        let channel = (-c..=c).map(|d| axis_weight(sigma, d)).collect();
        Ok(Self {
            sigma,
            radius,
            channel_radius,
            kernel,
            factors: Some((spatial, channel)),
        })
    }

    pub fn with_default_radius(sigma: f64) -> Result<Self> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(invalid(format!("sigma must be positive, got {sigma}")));
        }
        Self::new(sigma, default_radius(sigma))
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn channel_radius(&self) -> usize {
        self.channel_radius
    }

    fn index(&self, di: i64, dj: i64, dk: i64) -> Option<usize> {
        let (r, c) = (self.radius as i64, self.channel_radius as i64);
        if di.abs() > r || dj.abs() > r || dk.abs() > c {
            return None;
        }
        let w = 2 * r + 1;
        let wc = 2 * c + 1;
        Some((((di + r) * w + (dj + r)) * wc + (dk + c)) as usize)
    }

    /// Kernel value at an offset; zero outside the truncation box.
    pub fn at(&self, di: i64, dj: i64, dk: i64) -> f64 {
        self.index(di, dj, dk).map_or(0.0, |i| self.kernel[i])
    }

    pub fn kernel(&self) -> &[f64] {
        &self.kernel
    }

    pub fn kernel_sum(&self) -> f64 {
        self.kernel.iter().sum()
    }

    /// Returns a copy with one kernel tap shifted by `delta`. The copy loses
    /// its separable factorization, so blurring goes through the direct 3D path.
    pub fn perturbed(&self, offset: [i64; 3], delta: f64) -> Self {
        let mut out = self.clone();
        if let Some(idx) = out.index(offset[0], offset[1], offset[2]) {
            out.kernel[idx] += delta;
        }
        out.factors = None;
        out
    }

    /// Same kernel, forced onto the direct (non-separable) correlation path.
    pub fn without_factorization(&self) -> Self {
        Self {
            factors: None,
            ..self.clone()
        }
    }
}

pub fn gaussian_psf(sigma: f64, radius: usize) -> Result<GaussianPsf> {
    GaussianPsf::new(sigma, radius)
}

/// Dense order-6 Toeplitz operator `T[i, j] = S(j - i)` with `S` evaluated
/// exactly (no truncation).
pub fn build_toeplitz(psf: &GaussianPsf, dims: Dims3) -> Result<Operator6> {
    build_toeplitz_capped(psf, dims, DEFAULT_DENSE_CAP)
}

pub fn build_toeplitz_capped(psf: &GaussianPsf, dims: Dims3, cap: usize) -> Result<Operator6> {
    let sigma = psf.sigma();
    Operator6::from_fn_capped(dims, cap, |i, j| {
        gaussian_value(
            sigma,
            j[0] as i64 - i[0] as i64,
            j[1] as i64 - i[1] as i64,
            j[2] as i64 - i[2] as i64,
        )
    })
}

/// Zero-padded correlation along one axis of a row-major 3D buffer.
fn correlate_axis(src: &[f64], dst: &mut [f64], dims: Dims3, axis: usize, weights: &[f64]) {
    let [n1, n2, n3] = dims.as_array();
    let r = (weights.len() / 2) as i64;
    let (len, stride) = match axis {
        0 => (n1, n2 * n3),
        1 => (n2, n3),
        _ => (n3, 1),
    };
    for (idx, out) in dst.iter_mut().enumerate() {
        let pos = ((idx / stride) % len) as i64;
        let lo = (-r).max(-pos);
        let hi = r.min(len as i64 - 1 - pos);
        let mut acc = 0.0;
        for d in lo..=hi {
            let src_idx = (idx as i64 + d * stride as i64) as usize;
            acc += weights[(d + r) as usize] * src[src_idx];
        }
        *out = acc;
    }
}

/// Zero-padded 3D correlation `Y[i] = sum_o S(o) X[i + o]` over the truncated
/// kernel. Channels participate, so colors are coupled.
pub fn apply_blur(psf: &GaussianPsf, x: &ImageTensor) -> ImageTensor {
    let dims = x.dims();
    match &psf.factors {
        Some((spatial, channel)) => {
            let mut a = vec![0.0; dims.len()];
            let mut b = vec![0.0; dims.len()];
            correlate_axis(x.data(), &mut a, dims, 0, spatial);
            correlate_axis(&a, &mut b, dims, 1, spatial);
            correlate_axis(&b, &mut a, dims, 2, channel);
            ImageTensor::from_raw(dims, a)
        }
        None => apply_blur_direct(psf, x),
    }
}

fn apply_blur_direct(psf: &GaussianPsf, x: &ImageTensor) -> ImageTensor {
    let dims = x.dims();
    let (r, c) = (psf.radius as i64, psf.channel_radius as i64);
    let [n1, n2, n3] = dims.as_array().map(|v| v as i64);
    ImageTensor::from_fn(dims, |i, j, k| {
        let (i, j, k) = (i as i64, j as i64, k as i64);
        let mut acc = 0.0;
        for di in (-r).max(-i)..=r.min(n1 - 1 - i) {
            for dj in (-r).max(-j)..=r.min(n2 - 1 - j) {
                for dk in (-c).max(-k)..=c.min(n3 - 1 - k) {
                    acc += psf.at(di, dj, dk)
                        * x.get((i + di) as usize, (j + dj) as usize, (k + dk) as usize);
                }
            }
        }
        acc
    })
}

/// Additive noise drawn uniformly from `[0, amplitude)` with a ChaCha8 stream
/// seeded by `seed`, one draw per entry in storage order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub amplitude: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn new(amplitude: f64, seed: u64) -> Result<Self> {
        if !(amplitude >= 0.0) || !amplitude.is_finite() {
            return Err(invalid(format!("noise amplitude must be >= 0, got {amplitude}")));
        }
        Ok(Self { amplitude, seed })
    }

    pub fn none() -> Self {
        Self {
            amplitude: 0.0,
            seed: 0,
        }
    }

    pub fn sample(&self, dims: Dims3) -> ImageTensor {
        if self.amplitude == 0.0 {
            return ImageTensor::zeros(dims);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let data = (0..dims.len())
            .map(|_| self.amplitude * rng.random::<f64>())
            .collect();
        ImageTensor::from_raw(dims, data)
    }
}

/// `G = apply_blur(psf, F) + N`.
pub fn degrade(f: &ImageTensor, psf: &GaussianPsf, noise: &NoiseSpec) -> ImageTensor {
    let mut g = apply_blur(psf, f);
    if noise.amplitude > 0.0 {
        g.axpy(1.0, &noise.sample(f.dims()));
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{einstein_product, fro_norm, unfold_operator};

    fn pseudo_random(dims: Dims3, seed: u64) -> ImageTensor {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        ImageTensor::from_fn(dims, |_, _, _| rng.random::<f64>() * 2.0 - 1.0)
    }

    #[test]
    fn center_value_and_ratio() {
        let psf = gaussian_psf(0.7, 4).unwrap();
        // 1 / ((2 pi)^{3/2} * 0.343)
        assert!((psf.at(0, 0, 0) - 0.185_111_8).abs() < 1e-6);
        let ratio = psf.at(1, 0, 0) / psf.at(0, 0, 0);
        assert!((ratio - (-1.0f64 / 0.98).exp()).abs() < 1e-15);
        assert!((ratio - 0.360_447).abs() < 1e-6);
    }

    #[test]
    fn kernel_is_even_positive_and_peaked() {
        for sigma in [0.7, 0.8, 0.9, 1.7] {
            let psf = GaussianPsf::with_default_radius(sigma).unwrap();
            let (r, c) = (psf.radius() as i64, psf.channel_radius() as i64);
            let center = psf.at(0, 0, 0);
            for di in -r..=r {
                for dj in -r..=r {
                    for dk in -c..=c {
                        let v = psf.at(di, dj, dk);
                        assert!(v > 0.0);
                        assert!(v <= center);
                        assert_eq!(v, psf.at(-di, -dj, -dk));
                    }
                }
            }
        }
    }

    #[test]
    fn invalid_parameters() {
        assert!(gaussian_psf(0.0, 3).is_err());
        assert!(gaussian_psf(-1.0, 3).is_err());
        assert!(gaussian_psf(0.7, 0).is_err());
        assert!(NoiseSpec::new(-0.1, 1).is_err());
    }

    #[test]
    fn default_radius_rule() {
        assert_eq!(default_radius(0.7), 5);
        assert_eq!(default_radius(0.8), 5);
        assert_eq!(default_radius(0.9), 6);
        assert_eq!(GaussianPsf::with_default_radius(0.9).unwrap().channel_radius(), 2);
    }

    #[test]
    fn toeplitz_single_pixel() {
        let psf = gaussian_psf(0.8, 3).unwrap();
        let t = build_toeplitz(&psf, Dims3::new(1, 1, 1)).unwrap();
        assert_eq!(t.data(), &[gaussian_value(0.8, 0, 0, 0)]);
    }

    #[test]
    fn toeplitz_is_symmetric() {
        let psf = gaussian_psf(0.9, 4).unwrap();
        let t = build_toeplitz(&psf, Dims3::new(3, 4, 3)).unwrap();
        assert!(t.is_symmetric(0.0));
    }

    #[test]
    fn toeplitz_row_sums() {
        let sigma = 0.8;
        let dims = Dims3::new(4, 4, 3);
        let t = build_toeplitz(&gaussian_psf(sigma, 4).unwrap(), dims).unwrap();
        let m = unfold_operator(&t);
        // full-space sum by enumerating offsets far past the tail
        let mut full = 0.0;
        for di in -30i64..=30 {
            for dj in -30i64..=30 {
                for dk in -30i64..=30 {
                    full += gaussian_value(sigma, di, dj, dk);
                }
            }
        }
        let row_sum = |i: usize, j: usize, k: usize| m.row(dims.flat(i, j, k)).sum();
        for idx in 0..dims.len() {
            let [i, j, k] = dims.unflat(idx);
            assert!(row_sum(i, j, k) < full);
        }
        // rows at mirror-image positions see the same truncated offsets
        let interior = row_sum(1, 1, 1);
        for (i, j) in [(1, 2), (2, 1), (2, 2)] {
            assert!((row_sum(i, j, 1) - interior).abs() < 1e-15);
        }
        assert!(row_sum(0, 0, 0) < interior);
    }

    #[test]
    fn blur_matches_dense_toeplitz() {
        let dims = Dims3::new(4, 4, 3);
        let psf = gaussian_psf(0.9, 4).unwrap();
        let t = build_toeplitz(&psf, dims).unwrap();
        for seed in 0..5 {
            let x = pseudo_random(dims, seed);
            let fast = apply_blur(&psf, &x);
            let dense = einstein_product(&t, &x).unwrap();
            let rel = fro_norm(&fast.sub(&dense).unwrap()) / fro_norm(&x);
            assert!(rel < 1e-10, "rel {rel}");
        }
    }

    #[test]
    fn separable_and_direct_paths_agree() {
        let dims = Dims3::new(7, 5, 3);
        let psf = GaussianPsf::with_default_radius(0.8).unwrap();
        let x = pseudo_random(dims, 9);
        let a = apply_blur(&psf, &x);
        let b = apply_blur(&psf.without_factorization(), &x);
        assert!(fro_norm(&a.sub(&b).unwrap()) < 1e-14 * fro_norm(&x));
    }

    #[test]
    fn impulse_response_reproduces_kernel() {
        let dims = Dims3::new(9, 9, 3);
        let psf = gaussian_psf(0.7, 4).unwrap();
        let mut x = ImageTensor::zeros(dims);
        x.set(4, 4, 1, 1.0);
        let y = apply_blur(&psf, &x);
        for i in 0..9 {
            for j in 0..9 {
                for k in 0..3 {
                    let expect = psf.at(4 - i as i64, 4 - j as i64, 1 - k as i64);
                    assert!((y.get(i, j, k) - expect).abs() <= 1e-14 * expect);
                }
            }
        }
    }

    #[test]
    fn zero_and_constant_images() {
        let dims = Dims3::new(16, 16, 3);
        let psf = GaussianPsf::with_default_radius(0.7).unwrap();
        let z = apply_blur(&psf, &ImageTensor::zeros(dims));
        assert!(z.data().iter().all(|v| *v == 0.0));

        let c = 0.6;
        let y = apply_blur(&psf, &ImageTensor::filled(dims, c));
        let r = psf.radius();
        // spatially interior, every channel offset in range for the middle channel
        let spatial: f64 = (-(r as i64)..=r as i64).map(|d| axis_weight(0.7, d)).sum();
        let mid_channel: f64 = (-1i64..=1).map(|d| axis_weight(0.7, d)).sum();
        let expect = c * spatial * spatial * mid_channel;
        assert!((y.get(r, r, 1) - expect).abs() < 1e-14);
        assert!((y.get(8, 8, 1) - expect).abs() < 1e-14);
        for i in 0..r {
            assert!(y.get(i, 8, 1) < expect);
            assert!(y.get(8, i, 1) < expect);
        }
    }

    #[test]
    fn blur_is_linear_and_positive() {
        let dims = Dims3::new(6, 5, 3);
        let psf = GaussianPsf::with_default_radius(0.9).unwrap();
        let x = pseudo_random(dims, 1);
        let y = pseudo_random(dims, 2);
        let mut comb = x.scaled(2.0);
        comb.axpy(-0.5, &y);
        let mut expect = apply_blur(&psf, &x).scaled(2.0);
        expect.axpy(-0.5, &apply_blur(&psf, &y));
        assert!(fro_norm(&apply_blur(&psf, &comb).sub(&expect).unwrap()) < 1e-13);

        let nonneg = ImageTensor::from_fn(dims, |i, j, k| ((i * j + k) % 3) as f64);
        assert!(apply_blur(&psf, &nonneg).min_value() >= 0.0);
    }

    #[test]
    fn degrade_noise_contract() {
        let dims = Dims3::new(8, 8, 3);
        let psf = GaussianPsf::with_default_radius(0.8).unwrap();
        let f = pseudo_random(dims, 3);
        let clean = apply_blur(&psf, &f);
        assert_eq!(degrade(&f, &psf, &NoiseSpec::new(0.0, 77).unwrap()), clean);

        let noise = NoiseSpec::new(0.001, 42).unwrap();
        let g1 = degrade(&f, &psf, &noise);
        let g2 = degrade(&f, &psf, &noise);
        assert_eq!(
            g1.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            g2.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        );
        let diff = g1.sub(&clean).unwrap();
        assert!(diff.max_value() < 0.001);
        assert!(diff.min_value() >= -1e-15);
        assert!(diff.max_value() > 0.0);
        assert_ne!(g1, degrade(&f, &psf, &NoiseSpec::new(0.001, 43).unwrap()));
    }
}
