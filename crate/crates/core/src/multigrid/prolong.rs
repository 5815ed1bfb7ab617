//! Quadratic-interpolation prolongation.
//!
//! Coordinates are measured in units of the level `l-2` grid: level `l-2`
//! node `a` sits at `a`, level `l-1` node `p` at `p/2`, level `l` node `q` at
//! `q/4`. A level-`l` node with even index coincides with a level-`l-1` node
//! and takes its value. An odd index `q = 4a + 1` (offset `a + 1/4`) or
//! `q = 4a + 3` (offset `a + 3/4`) is interpolated from the three level-`l-1`
//! nodes `2a, 2a+1, 2a+2`, of which the one at `a` (resp. `a + 1`) is "near".
//!
//! Along lines of the level `l-2` grid the extrapolated stencil
//!
//! ```text
//! f(a + 1/4) = [ (9 f'(a) + 12 f'(a + 1/2) - f'(a + 1)) - (3 f''(a) + f''(a + 1)) ] / 16
//! ```
//!
//! is used (`f'` level `l-1`, `f''` level `l-2`); everywhere else the plain
//! three-point quadratic `3/8 near + 3/4 mid - 1/8 far`. Indices past the
//! grid end are clamped to the last node.

use crate::error::{invalid, Result};
use crate::tensor::{ensure_same, Dims3, ImageTensor};

#[inline]
fn quadratic(near: f64, mid: f64, far: f64) -> f64 {
    0.375 * near + 0.75 * mid - 0.125 * far
}

#[inline]
fn extrapolated(near: f64, mid: f64, far: f64, coarse_near: f64, coarse_far: f64) -> f64 {
    ((9.0 * near + 12.0 * mid - far) - (3.0 * coarse_near + coarse_far)) / 16.0
}

/// Level `l-1` indices `(near, mid, far)` and level `l-2` indices
/// `(near, far)` for odd fine index `q`, before clamping.
#[inline]
fn stencil(q: usize) -> ([usize; 3], [usize; 2]) {
    let a = q / 4;
    if q % 4 == 1 {
        ([2 * a, 2 * a + 1, 2 * a + 2], [a, a + 1])
    } else {
        ([2 * a + 2, 2 * a + 1, 2 * a], [a + 1, a])
    }
}

/// Row-major 2D plane with clamped access.
struct Plane<'a> {
    values: &'a [f64],
    rows: usize,
    cols: usize,
}

impl Plane<'_> {
    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i.min(self.rows - 1) * self.cols + j.min(self.cols - 1)]
    }
}

fn prolong_plane(coarse: &Plane<'_>, coarser: Option<&Plane<'_>>) -> Vec<f64> {
    let (rows, cols) = (2 * coarse.rows, 2 * coarse.cols);
    let mut fine = vec![0.0; rows * cols];

    // Nodes on level l-1 rows: injection and horizontal interpolation.
    for qr in (0..rows).step_by(2) {
        let pr = qr / 2;
        for qc in 0..cols {
            let v = if qc % 2 == 0 {
                coarse.at(pr, qc / 2)
            } else {
                let ([n, m, f], [cn, cf]) = stencil(qc);
                let (near, mid, far) = (coarse.at(pr, n), coarse.at(pr, m), coarse.at(pr, f));
                match coarser {
                    Some(c2) if qr % 4 == 0 => {
                        extrapolated(near, mid, far, c2.at(qr / 4, cn), c2.at(qr / 4, cf))
                    }
                    _ => quadratic(near, mid, far),
                }
            };
            fine[qr * cols + qc] = v;
        }
    }

    // Odd rows on level l-1 columns: vertical interpolation.
    for qr in (1..rows).step_by(2) {
        let ([n, m, f], [cn, cf]) = stencil(qr);
        for qc in (0..cols).step_by(2) {
            let pc = qc / 2;
            let (near, mid, far) = (coarse.at(n, pc), coarse.at(m, pc), coarse.at(f, pc));
            fine[qr * cols + qc] = match coarser {
                Some(c2) if qc % 4 == 0 => {
                    extrapolated(near, mid, far, c2.at(cn, qc / 4), c2.at(cf, qc / 4))
                }
                _ => quadratic(near, mid, far),
            };
        }
    }

    // Remaining nodes: horizontal quadratic through the values just computed
    // on the same fine row at fine columns 2n, 2m, 2f.
    for qr in (1..rows).step_by(2) {
        let row = &fine[qr * cols..(qr + 1) * cols];
        let at = |p: usize| row[(2 * p).min(cols - 2)];
        let values: Vec<(usize, f64)> = (1..cols)
            .step_by(2)
            .map(|qc| {
                let ([n, m, f], _) = stencil(qc);
                (qc, quadratic(at(n), at(m), at(f)))
            })
            .collect();
        for (qc, v) in values {
            fine[qr * cols + qc] = v;
        }
    }
    fine
}

fn prolong(coarse: &ImageTensor, coarser: Option<&ImageTensor>) -> ImageTensor {
    let d = coarse.dims();
    let fine_dims = Dims3::new(2 * d.rows, 2 * d.cols, d.channels);
    let mut out = ImageTensor::zeros(fine_dims);
    for k in 0..d.channels {
        let cv = coarse.channel(k);
        let c_plane = Plane {
            values: &cv,
            rows: d.rows,
            cols: d.cols,
        };
        let c2v = coarser.map(|c2| c2.channel(k));
        let c2_plane = coarser.zip(c2v.as_deref()).map(|(c2, values)| Plane {
            values,
            rows: c2.dims().rows,
            cols: c2.dims().cols,
        });
        out.set_channel(k, &prolong_plane(&c_plane, c2_plane.as_ref()));
    }
    out
}

/// Prolongs the level `l-1` solution to level `l`, extrapolating with the
/// level `l-2` solution along the coarsest grid lines.
pub fn prolong_quadratic(coarse: &ImageTensor, coarser: &ImageTensor) -> Result<ImageTensor> {
    let d = coarse.dims();
    let d2 = coarser.dims();
    if d.rows % 2 != 0 || d.cols % 2 != 0 {
        return Err(invalid(format!(
            "level l-1 dims {d} must be even to pair with a level l-2 grid"
        )));
    }
    ensure_same(Dims3::new(d.rows / 2, d.cols / 2, d.channels), d2)?;
    Ok(prolong(coarse, Some(coarser)))
}

/// Prolongation when no level `l-2` solution exists: the extrapolated
/// stencil with `f''` taken as `f'` at the shared nodes, which reduces to
/// plain quadratic interpolation.
pub fn prolong_first(coarse: &ImageTensor) -> ImageTensor {
    prolong(coarse, None)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(rows: usize, cols: usize, spacing: f64, f: impl Fn(f64, f64) -> f64) -> ImageTensor {
        ImageTensor::from_fn(Dims3::new(rows, cols, 3), |i, j, k| {
            f(i as f64 * spacing, j as f64 * spacing) + k as f64
        })
    }

    #[test]
    fn ramp_stencil_arithmetic() {
        // f(x) = x: near 0, mid 1/2, far 1; coarse near 0, far 1.
        assert_eq!(extrapolated(0.0, 0.5, 1.0, 0.0, 1.0), 0.25);
        assert_eq!(extrapolated(1.0, 0.5, 0.0, 1.0, 0.0), 0.75);
        // f(x) = x^2: 0, 1/4, 1; coarse 0, 1.
        assert_eq!(extrapolated(0.0, 0.25, 1.0, 0.0, 1.0), 1.0 / 16.0);
        assert_eq!(quadratic(0.0, 0.5, 1.0), 0.25);
    }

    #[test]
    fn coefficient_sets_sum_to_one() {
        assert_eq!((9.0 + 12.0 - 1.0 - 3.0 - 1.0) / 16.0, 1.0);
        assert_eq!(0.375 + 0.75 - 0.125, 1.0);
    }

    #[test]
    fn constants_are_reproduced() {
        let c2 = ImageTensor::filled(Dims3::new(3, 4, 3), 0.4);
        let c1 = ImageTensor::filled(Dims3::new(6, 8, 3), 0.4);
        for out in [prolong_quadratic(&c1, &c2).unwrap(), prolong_first(&c1)] {
            assert_eq!(out.dims(), Dims3::new(12, 16, 3));
            assert!(out.data().iter().all(|v| (*v - 0.4).abs() < 1e-15));
        }
    }

    #[test]
    fn first_prolongation_doubles_dims() {
        let c = ImageTensor::zeros(Dims3::new(5, 3, 1));
        assert_eq!(prolong_first(&c).dims(), Dims3::new(10, 6, 1));
    }

    #[test]
    fn injection_at_shared_nodes() {
        let c2 = sample(4, 4, 1.0, |x, y| (x * 1.3).sin() + y);
        let c1 = sample(8, 8, 0.5, |x, y| (x * 0.7).cos() * y);
        let out = prolong_quadratic(&c1, &c2).unwrap();
        for i in 0..8 {
            for j in 0..8 {
                assert_eq!(out.get(2 * i, 2 * j, 1), c1.get(i, j, 1));
            }
        }
    }

    #[test]
    fn quadratic_exactness_in_interior() {
        let q = |x: f64, y: f64| 0.3 + 0.5 * x - 0.2 * y + 0.7 * x * x - 0.4 * x * y + 0.25 * y * y;
        let c2 = sample(5, 6, 1.0, q);
        let c1 = sample(10, 12, 0.5, q);
        let expect = sample(20, 24, 0.25, q);
        for out in [prolong_quadratic(&c1, &c2).unwrap(), prolong_first(&c1)] {
            for i in 0..=15 {
                for j in 0..=19 {
                    for k in 0..3 {
                        let diff = (out.get(i, j, k) - expect.get(i, j, k)).abs();
                        assert!(diff < 1e-12, "({i},{j},{k}) off by {diff}");
                    }
                }
            }
        }
    }

    #[test]
    fn extrapolation_uses_coarser_level() {
        let c1 = sample(4, 4, 0.5, |x, _| x);
        let c2 = sample(2, 2, 1.0, |x, _| x);
        let shifted = ImageTensor::from_fn(c2.dims(), |i, j, k| c2.get(i, j, k) + 0.16);
        let a = prolong_quadratic(&c1, &c2).unwrap();
        let b = prolong_quadratic(&c1, &shifted).unwrap();
        // node (0, 1) lies on a level l-2 row: correction -(3 + 1) * 0.16 / 16
        assert!((a.get(0, 1, 0) - b.get(0, 1, 0) - 0.04).abs() < 1e-15);
        // node (2, 1) is on a level l-1 row only: no correction
        assert_eq!(a.get(2, 1, 0), b.get(2, 1, 0));
    }

    #[test]
    fn mismatched_levels_rejected() {
        let c1 = ImageTensor::zeros(Dims3::new(8, 8, 3));
        assert!(prolong_quadratic(&c1, &ImageTensor::zeros(Dims3::new(4, 3, 3))).is_err());
        assert!(prolong_quadratic(&c1, &ImageTensor::zeros(Dims3::new(4, 4, 1))).is_err());
        assert!(prolong_quadratic(&ImageTensor::zeros(Dims3::new(7, 8, 3)), &ImageTensor::zeros(Dims3::new(3, 4, 3))).is_err());
    }
}
