//! Krylov iterations in tensor format (BiCG, CGS, CR) where every
//! matrix-vector product is an Einstein-product action and every inner
//! product is the Frobenius pairing of image tensors.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::degradation::{apply_blur, GaussianPsf};
use crate::error::{invalid, Error, Result};
use crate::tensor::{dot, einstein_product, ensure_same, fro_norm, Dims3, ImageTensor, Operator6};

/// Relative threshold below which a recurrence denominator counts as a breakdown.
pub const BREAKDOWN_TOL: f64 = 1e-14;

/// The residual is recomputed from `G - T*F` every this many iterations.
pub const RESIDUAL_REFRESH: usize = 25;

/// A linear, shape-preserving action on image tensors.
pub trait LinearOperator {
    /// Shape the operator is restricted to, if any.
    fn domain(&self) -> Option<Dims3> {
        None
    }

    fn apply(&self, x: &ImageTensor) -> ImageTensor;

    /// Action of the adjoint. Defaults to `apply` (symmetric operators).
    fn apply_transpose(&self, x: &ImageTensor) -> ImageTensor {
        self.apply(x)
    }
}

impl<T: LinearOperator + ?Sized> LinearOperator for &T {
    fn domain(&self) -> Option<Dims3> {
        (**self).domain()
    }
    fn apply(&self, x: &ImageTensor) -> ImageTensor {
        (**self).apply(x)
    }
    fn apply_transpose(&self, x: &ImageTensor) -> ImageTensor {
        (**self).apply_transpose(x)
    }
}

impl LinearOperator for Operator6 {
    fn domain(&self) -> Option<Dims3> {
        Some(self.dims())
    }

    fn apply(&self, x: &ImageTensor) -> ImageTensor {
        einstein_product(self, x).expect("operator domain checked before iterating")
    }

    fn apply_transpose(&self, x: &ImageTensor) -> ImageTensor {
        self.transpose_product(x)
            .expect("operator domain checked before iterating")
    }
}

/// Matrix-free blur action: the Toeplitz operator applied as a convolution.
#[derive(Debug, Clone)]
pub struct BlurAction {
    psf: GaussianPsf,
}

impl BlurAction {
    pub fn psf(&self) -> &GaussianPsf {
        &self.psf
    }
}

impl LinearOperator for BlurAction {
    fn apply(&self, x: &ImageTensor) -> ImageTensor {
        apply_blur(&self.psf, x)
    }
}

pub fn make_operator_action(psf: &GaussianPsf) -> BlurAction {
    BlurAction { psf: psf.clone() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SmootherKind {
    BiCg,
    Cgs,
    Cr,
}

impl SmootherKind {
    pub const ALL: [SmootherKind; 3] = [SmootherKind::BiCg, SmootherKind::Cgs, SmootherKind::Cr];

    pub fn name(&self) -> &'static str {
        match self {
            SmootherKind::BiCg => "bicg",
            SmootherKind::Cgs => "cgs",
            SmootherKind::Cr => "cr",
        }
    }
}

impl fmt::Display for SmootherKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SmootherKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bicg" => Ok(SmootherKind::BiCg),
            "cgs" => Ok(SmootherKind::Cgs),
            "cr" => Ok(SmootherKind::Cr),
            other => Err(invalid(format!("unknown smoother `{other}` (expected bicg|cgs|cr)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveControl {
    /// `None` means unbounded; then `rel_tol` must be positive.
    pub max_iters: Option<usize>,
    pub rel_tol: f64,
    pub record_history: bool,
}

impl SolveControl {
    /// Exactly `iters` iterations unless the residual vanishes first.
    pub fn fixed(iters: usize) -> Self {
        Self {
            max_iters: Some(iters),
            rel_tol: 0.0,
            record_history: false,
        }
    }

    pub fn tolerance(rel_tol: f64) -> Self {
        Self {
            max_iters: None,
            rel_tol,
            record_history: false,
        }
    }

    pub fn with_max_iters(mut self, max_iters: usize) -> Self {
        self.max_iters = Some(max_iters);
        self
    }

    pub fn with_history(mut self) -> Self {
        self.record_history = true;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol >= 0.0) {
            return Err(invalid(format!("rel_tol must be >= 0, got {}", self.rel_tol)));
        }
        if self.max_iters.is_none() && self.rel_tol == 0.0 {
            return Err(invalid("unbounded iteration count needs a positive rel_tol"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Breakdown {
    /// `<shadow, residual>` vanished.
    Rho,
    /// The step-length denominator vanished.
    StepDenominator,
}

#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub solution: ImageTensor,
    pub iters_done: usize,
    /// Recomputed from scratch for the returned solution.
    pub final_rel_residual: f64,
    /// Relative residual before the first iteration and after each one.
    pub residual_history: Option<Vec<f64>>,
    pub breakdown: Option<Breakdown>,
    /// Operator applications, including the final residual check.
    pub matvecs: usize,
}

struct Tracker<'a, A: LinearOperator> {
    op: &'a A,
    g: &'a ImageTensor,
    scale: f64,
    ctl: SolveControl,
    matvecs: usize,
    iters: usize,
    history: Option<Vec<f64>>,
    best: Option<(f64, ImageTensor)>,
}

impl<'a, A: LinearOperator> Tracker<'a, A> {
    fn apply(&mut self, x: &ImageTensor) -> ImageTensor {
        self.matvecs += 1;
        self.op.apply(x)
    }

    fn apply_transpose(&mut self, x: &ImageTensor) -> ImageTensor {
        self.matvecs += 1;
        self.op.apply_transpose(x)
    }

    fn residual(&mut self, x: &ImageTensor) -> ImageTensor {
        let ax = self.apply(x);
        let mut r = self.g.clone();
        r.axpy(-1.0, &ax);
        r
    }

    fn refresh_due(&self) -> bool {
        self.iters > 0 && self.iters % RESIDUAL_REFRESH == 0
    }

    /// Records the residual of `x` and reports whether iteration should stop.
    fn record(&mut self, x: &ImageTensor, r: &ImageTensor) -> bool {
        let rel = fro_norm(r) / self.scale;
        if let Some(h) = self.history.as_mut() {
            h.push(rel);
        }
        if self.best.as_ref().map_or(true, |(b, _)| rel < *b) {
            self.best = Some((rel, x.clone()));
        }
        rel <= self.ctl.rel_tol || self.ctl.max_iters.is_some_and(|m| self.iters >= m)
    }

    fn finish(mut self, x: ImageTensor, breakdown: Option<Breakdown>) -> SolveOutcome {
        let solution = match (breakdown, self.best.take()) {
            (Some(_), Some((_, best))) => best,
            _ => x,
        };
        let r = self.residual(&solution);
        SolveOutcome {
            final_rel_residual: fro_norm(&r) / self.scale,
            solution,
            iters_done: self.iters,
            residual_history: self.history,
            breakdown,
            matvecs: self.matvecs,
        }
    }
}

fn vanishes(value: f64, a: &ImageTensor, b: &ImageTensor) -> bool {
    !(value.abs() > BREAKDOWN_TOL * fro_norm(a) * fro_norm(b))
}

/// Runs the selected Krylov recurrence from `f0` for the system `T * F = G`.
pub fn smooth<A: LinearOperator>(
    kind: SmootherKind,
    op: &A,
    g: &ImageTensor,
    f0: &ImageTensor,
    ctl: &SolveControl,
) -> Result<SolveOutcome> {
    ctl.validate()?;
    ensure_same(g.dims(), f0.dims())?;
    if let Some(d) = op.domain() {
        ensure_same(d, g.dims())?;
    }
    let gnorm = fro_norm(g);
    let mut tr = Tracker {
        op,
        g,
        scale: if gnorm > 0.0 { gnorm } else { 1.0 },
        ctl: *ctl,
        matvecs: 0,
        iters: 0,
        history: ctl.record_history.then(Vec::new),
        best: None,
    };
    let Finished(x, breakdown) = match kind {
        SmootherKind::Cr => conjugate_residual(&mut tr, f0.clone()),
        SmootherKind::BiCg => bicg(&mut tr, f0.clone()),
        SmootherKind::Cgs => cgs(&mut tr, f0.clone()),
    };
    Ok(tr.finish(x, breakdown))
}

struct Finished(ImageTensor, Option<Breakdown>);

fn conjugate_residual<A: LinearOperator>(tr: &mut Tracker<'_, A>, mut x: ImageTensor) -> Finished {
    let mut r = tr.residual(&x);
    if tr.record(&x, &r) {
        return Finished(x, None);
    }
    let mut ar = tr.apply(&r);
    let mut p = r.clone();
    let mut ap = ar.clone();
    let mut rho = dot(r.data(), ar.data());
    if vanishes(rho, &r, &ar) {
        return Finished(x, Some(Breakdown::Rho));
    }
    loop {
        let denom = dot(ap.data(), ap.data());
        if !(denom > 0.0) {
            return Finished(x, Some(Breakdown::StepDenominator));
        }
        let alpha = rho / denom;
        x.axpy(alpha, &p);
        r.axpy(-alpha, &ap);
        tr.iters += 1;
        if tr.refresh_due() {
            r = tr.residual(&x);
        }
        if tr.record(&x, &r) {
            return Finished(x, None);
        }
        ar = tr.apply(&r);
        let rho_next = dot(r.data(), ar.data());
        if vanishes(rho_next, &r, &ar) {
            return Finished(x, Some(Breakdown::Rho));
        }
        let beta = rho_next / rho;
        p.xpby(&r, beta);
        ap.xpby(&ar, beta);
        rho = rho_next;
    }
}

fn bicg<A: LinearOperator>(tr: &mut Tracker<'_, A>, mut x: ImageTensor) -> Finished {
    let mut r = tr.residual(&x);
    if tr.record(&x, &r) {
        return Finished(x, None);
    }
    let mut shadow = r.clone();
    let mut p = r.clone();
    let mut p_shadow = shadow.clone();
    let mut rho = dot(shadow.data(), r.data());
    if vanishes(rho, &shadow, &r) {
        return Finished(x, Some(Breakdown::Rho));
    }
    loop {
        let q = tr.apply(&p);
        let q_shadow = tr.apply_transpose(&p_shadow);
        let denom = dot(p_shadow.data(), q.data());
        if vanishes(denom, &p_shadow, &q) {
            return Finished(x, Some(Breakdown::StepDenominator));
        }
        let alpha = rho / denom;
        x.axpy(alpha, &p);
        r.axpy(-alpha, &q);
        shadow.axpy(-alpha, &q_shadow);
        tr.iters += 1;
        if tr.refresh_due() {
            r = tr.residual(&x);
        }
        if tr.record(&x, &r) {
            return Finished(x, None);
        }
        let rho_next = dot(shadow.data(), r.data());
        if vanishes(rho_next, &shadow, &r) {
            return Finished(x, Some(Breakdown::Rho));
        }
        let beta = rho_next / rho;
        p.xpby(&r, beta);
        p_shadow.xpby(&shadow, beta);
        rho = rho_next;
    }
}

fn cgs<A: LinearOperator>(tr: &mut Tracker<'_, A>, mut x: ImageTensor) -> Finished {
    let mut r = tr.residual(&x);
    if tr.record(&x, &r) {
        return Finished(x, None);
    }
    let shadow = r.clone();
    let mut u = r.clone();
    let mut p = r.clone();
    let mut rho = dot(shadow.data(), r.data());
    if vanishes(rho, &shadow, &r) {
        return Finished(x, Some(Breakdown::Rho));
    }
    loop {
        let v = tr.apply(&p);
        let sigma = dot(shadow.data(), v.data());
        if vanishes(sigma, &shadow, &v) {
            return Finished(x, Some(Breakdown::StepDenominator));
        }
        let alpha = rho / sigma;
        // q = u - alpha v, w = u + q
        let mut q = u.clone();
        q.axpy(-alpha, &v);
        let mut w = u.clone();
        w.axpy(1.0, &q);
        x.axpy(alpha, &w);
        let aw = tr.apply(&w);
        r.axpy(-alpha, &aw);
        tr.iters += 1;
        if tr.refresh_due() {
            r = tr.residual(&x);
        }
        if tr.record(&x, &r) {
            return Finished(x, None);
        }
        let rho_next = dot(shadow.data(), r.data());
        if vanishes(rho_next, &shadow, &r) {
            return Finished(x, Some(Breakdown::Rho));
        }
        let beta = rho_next / rho;
        // u = r + beta q; p = u + beta (q + beta p)
        u = r.clone();
        u.axpy(beta, &q);
        p.xpby(&q, beta);
        p.xpby(&u, beta);
        rho = rho_next;
    }
}
