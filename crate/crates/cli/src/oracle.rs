//! Cross-module self checks at small sizes (at most 8x8x3), run by the
//! `oracle` subcommand. The list and its order are fixed.

use std::io::Cursor;

use ctmg_core::degradation::gaussian_value;
use ctmg_core::eten::{self, EtenTensor};
use ctmg_core::multigrid::{edge_stopping, pm_denoise, prolong_first, prolong_quadratic, PmParams};
use ctmg_core::{
    apply_blur, build_toeplitz, direct_solve, einstein_product, fro_norm, make_operator_action, smooth,
    unfold_operator, unfold_tensor, Dims3, GaussianPsf, ImageTensor, NoiseSpec, Operator6, SmootherKind,
    SolveControl,
};

#[derive(Debug, Clone, Copy, Default)]
pub struct OracleOptions {
    /// Debug hook: blur with a kernel whose tap at offset (1, 0, 0) is
    /// nudged, so the convolution-vs-dense check must fail.
    pub perturb_kernel: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

type CheckFn = fn(&OracleOptions) -> Result<String, String>;

pub const CHECKS: [(&str, CheckFn); 9] = [
    ("blur-matches-dense-einstein", blur_vs_dense),
    ("unfolding-homomorphism", unfolding),
    ("toeplitz-structure", toeplitz_structure),
    ("prolongation-constants", prolong_constants),
    ("prolongation-quadratics", prolong_quadratics),
    ("pm-fixed-point-and-coefficient", pm_basics),
    ("smoothers-match-direct-solve", smoothers_vs_direct),
    ("cr-residual-monotone", cr_monotone),
    ("eten-round-trip", eten_round_trip),
];

pub fn check_names() -> Vec<&'static str> {
    CHECKS.iter().map(|(n, _)| *n).collect()
}

pub fn run_oracle(opts: &OracleOptions) -> Vec<CheckResult> {
    CHECKS
        .iter()
        .map(|(name, f)| {
            let (passed, detail) = match f(opts) {
                Ok(d) => (true, d),
                Err(d) => (false, d),
            };
            CheckResult { name, passed, detail }
        })
        .collect()
}

/// Values in [-0.5, 0.5), reproducible per seed.
pub fn random_tensor(dims: Dims3, seed: u64) -> ImageTensor {
    let u = NoiseSpec::new(1.0, seed).expect("unit amplitude").sample(dims);
    ImageTensor::from_fn(dims, |i, j, k| u.get(i, j, k) - 0.5)
}

fn rel_diff(a: &ImageTensor, b: &ImageTensor) -> f64 {
    fro_norm(&a.sub(b).expect("same dims")) / fro_norm(b).max(f64::MIN_POSITIVE)
}

fn ensure(ok: bool, detail: String) -> Result<String, String> {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn blur_vs_dense(opts: &OracleOptions) -> Result<String, String> {
    let mut worst = 0.0f64;
    let mut seed = 0;
    for sigma in [0.7, 0.8, 0.9] {
        let psf = GaussianPsf::with_default_radius(sigma).map_err(|e| e.to_string())?;
        let fast = if opts.perturb_kernel {
            psf.perturbed([1, 0, 0], 1e-3 * psf.at(0, 0, 0))
        } else {
            psf.clone()
        };
        for dims in [Dims3::new(1, 1, 1), Dims3::new(3, 5, 2), Dims3::new(6, 6, 3), Dims3::new(8, 8, 3)] {
            let t = build_toeplitz(&psf, dims).map_err(|e| e.to_string())?;
            for _ in 0..5 {
                seed += 1;
                let x = random_tensor(dims, seed);
                let dense = einstein_product(&t, &x).map_err(|e| e.to_string())?;
                let err = fro_norm(&apply_blur(&fast, &x).sub(&dense).unwrap()) / fro_norm(&x);
                worst = worst.max(err);
            }
        }
    }
    ensure(worst < 1e-10, format!("max relative difference {worst:.2e} (limit 1e-10)"))
}

fn unfolding(_: &OracleOptions) -> Result<String, String> {
    let mut worst = 0.0f64;
    for (n, dims) in [Dims3::new(2, 3, 1), Dims3::new(4, 4, 3), Dims3::new(3, 2, 3)].into_iter().enumerate() {
        let seed = 100 + n as u64;
        let entries = random_tensor(Dims3::new(dims.len(), dims.len(), 1), seed);
        let t = Operator6::from_unfolded(dims, entries.into_data()).map_err(|e| e.to_string())?;
        let x = random_tensor(dims, seed + 50);
        let lhs = unfold_tensor(&einstein_product(&t, &x).map_err(|e| e.to_string())?);
        let rhs = unfold_operator(&t) * unfold_tensor(&x);
        worst = worst.max((lhs - &rhs).norm() / rhs.norm());
    }
    ensure(worst < 1e-12, format!("max relative difference {worst:.2e} (limit 1e-12)"))
}

fn toeplitz_structure(_: &OracleOptions) -> Result<String, String> {
    let psf = GaussianPsf::new(0.8, 3).map_err(|e| e.to_string())?;
    let dims = Dims3::new(5, 4, 3);
    let t = build_toeplitz(&psf, dims).map_err(|e| e.to_string())?;
    let mut bad = 0;
    for a in 0..dims.len() {
        for b in 0..dims.len() {
            let (i, j) = (dims.unflat(a), dims.unflat(b));
            let off = [0, 1, 2].map(|d| j[d] as i64 - i[d] as i64);
            if t.get(i, j) != gaussian_value(psf.sigma(), off[0], off[1], off[2]) {
                bad += 1;
            }
        }
    }
    ensure(
        bad == 0 && t.is_symmetric(0.0),
        format!("{bad} entries differ from S(j - i); symmetric: {}", t.is_symmetric(0.0)),
    )
}

fn sample(rows: usize, cols: usize, spacing: f64, f: impl Fn(f64, f64) -> f64) -> ImageTensor {
    ImageTensor::from_fn(Dims3::new(rows, cols, 3), |i, j, k| f(i as f64 * spacing, j as f64 * spacing) + k as f64)
}

fn prolong_constants(_: &OracleOptions) -> Result<String, String> {
    let coarser = ImageTensor::filled(Dims3::new(2, 4, 3), 0.3);
    let coarse = ImageTensor::filled(Dims3::new(4, 8, 3), 0.3);
    let mut worst = 0.0f64;
    for out in [prolong_quadratic(&coarse, &coarser).map_err(|e| e.to_string())?, prolong_first(&coarse)] {
        for v in out.data() {
            worst = worst.max((v - 0.3).abs());
        }
    }
    ensure(worst < 1e-12, format!("max deviation {worst:.2e} (limit 1e-12)"))
}

/// Largest interior error when prolonging samples of `f` from spacings 1/2
/// and 1 to spacing 1/4 on an 8x8 fine grid; the last 4 fine rows and
/// columns see the clamped border and are excluded.
pub fn prolongation_interior_error(f: impl Fn(f64, f64) -> f64 + Copy) -> f64 {
    let coarser = sample(2, 2, 1.0, f);
    let coarse = sample(4, 4, 0.5, f);
    let expect = sample(8, 8, 0.25, f);
    let mut worst = 0.0f64;
    for out in [prolong_quadratic(&coarse, &coarser).expect("matching levels"), prolong_first(&coarse)] {
        for i in 0..4 {
            for j in 0..4 {
                for k in 0..3 {
                    worst = worst.max((out.get(i, j, k) - expect.get(i, j, k)).abs());
                }
            }
        }
    }
    worst
}

fn prolong_quadratics(_: &OracleOptions) -> Result<String, String> {
    let ramp = prolongation_interior_error(|x, y| 0.2 + 0.5 * x - 0.3 * y);
    let quad = prolongation_interior_error(|x, y| 0.1 + x * x - 0.5 * x * y + 0.25 * y * y);
    // the row stencil at offset 1/4 on the ramp f = y
    let quarter = prolong_quadratic(&sample(4, 4, 0.5, |_, y| y), &sample(2, 2, 1.0, |_, y| y))
        .map_err(|e| e.to_string())?
        .get(0, 1, 0);
    ensure(
        ramp < 1e-12 && quad < 1e-12 && quarter == 0.25,
        format!("ramp {ramp:.2e}, quadratic {quad:.2e}, ramp at 1/4 = {quarter}"),
    )
}

fn pm_basics(_: &OracleOptions) -> Result<String, String> {
    let c = ImageTensor::filled(Dims3::new(8, 8, 3), 0.42);
    let out = pm_denoise(&c, &PmParams::default()).map_err(|e| e.to_string())?;
    let fixed = out.data() == c.data();
    let g_k = edge_stopping(0.3, 0.3);
    let g_0 = edge_stopping(0.0, 0.3);
    ensure(
        fixed && g_k == 0.5 && g_0 == 1.0,
        format!("constant preserved: {fixed}, g(k) = {g_k}, g(0) = {g_0}"),
    )
}

fn smoothers_vs_direct(_: &OracleOptions) -> Result<String, String> {
    let dims = Dims3::new(8, 8, 3);
    let psf = GaussianPsf::with_default_radius(0.7).map_err(|e| e.to_string())?;
    let f = random_tensor(dims, 7);
    let g = apply_blur(&psf, &f);
    let exact = direct_solve(&build_toeplitz(&psf, dims).map_err(|e| e.to_string())?, &g).map_err(|e| e.to_string())?;
    let op = make_operator_action(&psf);
    let mut parts = Vec::new();
    let mut ok = true;
    for kind in SmootherKind::ALL {
        let out = smooth(kind, &op, &g, &g, &SolveControl::tolerance(1e-8).with_max_iters(5000))
            .map_err(|e| e.to_string())?;
        let d = rel_diff(&out.solution, &exact);
        ok &= d < 1e-6;
        parts.push(format!("{kind} {d:.1e}"));
    }
    ensure(ok, format!("{} (limit 1e-6)", parts.join(", ")))
}

fn cr_monotone(_: &OracleOptions) -> Result<String, String> {
    let dims = Dims3::new(8, 8, 3);
    let psf = GaussianPsf::with_default_radius(0.9).map_err(|e| e.to_string())?;
    let g = apply_blur(&psf, &random_tensor(dims, 11));
    let out = smooth(SmootherKind::Cr, &make_operator_action(&psf), &g, &g, &SolveControl::fixed(40).with_history())
        .map_err(|e| e.to_string())?;
    let h = out.residual_history.unwrap_or_default();
    let rises = h.windows(2).filter(|w| w[1] > w[0] * (1.0 + 1e-12)).count();
    ensure(rises == 0 && h.len() > 1, format!("{} residuals, {rises} increases", h.len()))
}

fn eten_round_trip(_: &OracleOptions) -> Result<String, String> {
    let x = random_tensor(Dims3::new(3, 5, 3), 21);
    let mut buf = Vec::new();
    eten::write_image(&mut buf, &x).map_err(|e| e.to_string())?;
    match eten::read(&mut Cursor::new(&buf)).map_err(|e| e.to_string())? {
        EtenTensor::Image(y) => ensure(y == x, format!("{} bytes", buf.len())),
        EtenTensor::Operator(_) => Err("read back an operator".into()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_checks_pass() {
        for r in run_oracle(&OracleOptions::default()) {
            assert!(r.passed, "{}: {}", r.name, r.detail);
        }
    }

    #[test]
    fn perturbed_kernel_is_caught() {
        let r = run_oracle(&OracleOptions { perturb_kernel: true });
        assert!(!r[0].passed);
        assert!(r[1..].iter().all(|c| c.passed));
    }

    #[test]
    fn names_are_unique_and_stable() {
        let names = check_names();
        assert_eq!(names[0], "blur-matches-dense-einstein");
        let mut sorted = names.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), names.len());
    }
}
