//! Conservative semi-Lagrangian transport.
//!
//! Every update is a constant shift along one axis, written in flux form: the
//! new cell value is the mass of the departure cell, so mass is conserved to
//! roundoff. With `ClippedCubic` the departure integral uses the third-order
//! primitive reconstruction (exact for quadratics), limited only where
//! positivity would fail.

use crate::domain::{Boundary, Domain};
use crate::error::{Error, Result};
use crate::fields::ElectricField;

use super::{Interpolation, PhaseDistribution};

/// Largest `|v_max dt|` accepted, as a fraction of the domain length.
pub const CFL_MAX: f64 = 1.0;

/// Mass of the rightmost fraction `alpha` of the middle cell.
#[inline]
fn right_flux(left: f64, mid: f64, right: f64, alpha: f64, scheme: Interpolation) -> f64 {
    if alpha == 0.0 {
        return 0.0;
    }
    match scheme {
        Interpolation::Linear => alpha * mid,
        Interpolation::ClippedCubic => {
            let up = if right > mid {
                (2.0 * mid / (right - mid)).min(1.0)
            } else {
                1.0
            };
            let down = if mid < left {
                (2.0 * mid / (left - mid)).min(1.0)
            } else {
                1.0
            };
            let b = 1.0 - alpha;
            alpha
                * (mid
                    + up * b * (2.0 - alpha) / 6.0 * (right - mid)
                    + down * b * (1.0 + alpha) / 6.0 * (mid - left))
        }
    }
}

/// Shifts a periodic line by `sigma` cells (in the positive direction when
/// `sigma > 0`).
pub fn shift_line_periodic(line: &[f64], sigma: f64, scheme: Interpolation) -> Vec<f64> {
    if sigma < 0.0 {
        let rev: Vec<f64> = line.iter().rev().copied().collect();
        let mut out = shift_line_periodic(&rev, -sigma, scheme);
        out.reverse();
        return out;
    }
    let n = line.len();
    let whole = sigma.floor();
    let alpha = sigma - whole;
    let shift = (whole as usize) % n;
    let flux: Vec<f64> = (0..n)
        .map(|i| {
            right_flux(
                line[(i + n - 1) % n],
                line[i],
                line[(i + 1) % n],
                alpha,
                scheme,
            )
        })
        .collect();
    (0..n)
        .map(|j| {
            let src = (j + n - shift) % n;
            line[src] + flux[(src + n - 1) % n] - flux[src]
        })
        .collect()
}

/// Shifts a line with empty exterior by `sigma` cells; returns the new line
/// and the mass (in cell-value units) pushed out of it.
pub fn shift_line_open(line: &[f64], sigma: f64, scheme: Interpolation) -> (Vec<f64>, f64) {
    if sigma < 0.0 {
        let rev: Vec<f64> = line.iter().rev().copied().collect();
        let (mut out, lost) = shift_line_open(&rev, -sigma, scheme);
        out.reverse();
        return (out, lost);
    }
    let n = line.len();
    let whole = sigma.floor() as usize;
    let alpha = sigma - whole as f64;
    let pad = whole + 2;
    let len = n + 2 * pad;
    let mut ext = vec![0.0; len];
    ext[pad..pad + n].copy_from_slice(line);
    let at = |i: isize| -> f64 {
        if i < 0 || i as usize >= len {
            0.0
        } else {
            ext[i as usize]
        }
    };
    let flux: Vec<f64> = (0..len as isize)
        .map(|i| right_flux(at(i - 1), at(i), at(i + 1), alpha, scheme))
        .collect();
    let fl = |i: isize| -> f64 {
        if i < 0 || i as usize >= len {
            0.0
        } else {
            flux[i as usize]
        }
    };
    let mut out = vec![0.0; n];
    let mut lost = 0.0;
    for j in 0..len as isize {
        let src = j - whole as isize;
        let value = at(src) + fl(src - 1) - fl(src);
        let ju = j as usize;
        if ju >= pad && ju < pad + n {
            out[ju - pad] = value;
        } else {
            lost += value;
        }
    }
    (out, lost)
}

/// Free streaming `f(x, v) <- f(x - v dt, v)` with periodic wrap or specular
/// walls (1D): on an interval the rows `v` and `-v` form one periodic loop of
/// length `2L`, which is exactly the unfolded reflected motion.
pub fn advect_x(
    f: &PhaseDistribution,
    dt: f64,
    scheme: Interpolation,
) -> Result<PhaseDistribution> {
    let dom: &Domain = &f.domain;
    let space = &dom.space;
    let vg = &dom.velocity;
    if !(dt >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "dt = {dt} must be nonnegative"
        )));
    }
    for (axis, l) in space.lengths.iter().enumerate() {
        if vg.v_max * dt > CFL_MAX * l {
            return Err(Error::Cfl(format!(
                "v_max * dt = {:e} exceeds {CFL_MAX} x L[{axis}] = {l}",
                vg.v_max * dt
            )));
        }
    }
    let nv = vg.len();
    let mut out = f.clone();
    match space.boundary {
        Boundary::Periodic => {
            for axis in 0..space.dim() {
                let n = space.shape[axis];
                let stride = space.stride(axis) * nv;
                let h = space.spacing[axis];
                let total = out.values.len();
                let mut line = vec![0.0; n];
                for outer in 0..total / (n * stride) {
                    for inner in 0..stride {
                        let start = outer * n * stride + inner;
                        let iv = start % nv;
                        let sigma = vg.component(iv, axis) * dt / h;
                        for (k, l) in line.iter_mut().enumerate() {
                            *l = out.values[start + k * stride];
                        }
                        let shifted = shift_line_periodic(&line, sigma, scheme);
                        for (k, s) in shifted.into_iter().enumerate() {
                            out.values[start + k * stride] = s;
                        }
                    }
                }
            }
        }
        Boundary::Specular => {
            let n = space.shape[0];
            let h = space.spacing[0];
            let mut loop_line = vec![0.0; 2 * n];
            for iv in 0..nv {
                let v = vg.component(iv, 0);
                if v <= 0.0 {
                    continue;
                }
                let mirror = vg.mirror(iv, 0);
                for j in 0..n {
                    loop_line[j] = f.values[j * nv + iv];
                    loop_line[n + j] = f.values[(n - 1 - j) * nv + mirror];
                }
                let shifted = shift_line_periodic(&loop_line, v * dt / h, scheme);
                for j in 0..n {
                    out.values[j * nv + iv] = shifted[j];
                    out.values[(n - 1 - j) * nv + mirror] = shifted[n + j];
                }
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct VelocityAdvection {
    pub f: PhaseDistribution,
    /// Mass shifted past `+-v_max` and dropped.
    pub lost_mass: f64,
}

/// Acceleration `f(x, v) <- f(x, v - a dt)` with `a = sign * E(x)`. Velocity
/// components beyond the spatial dimension feel no force.
pub fn advect_v(
    f: &PhaseDistribution,
    e: &ElectricField,
    sign: f64,
    dt: f64,
    scheme: Interpolation,
) -> Result<VelocityAdvection> {
    let dom = &f.domain;
    let vg = &dom.velocity;
    if e.grid.len() != dom.space.len() {
        return Err(Error::GridMismatch("electric field grid".into()));
    }
    let shift_max = e.max_norm() * dt;
    if shift_max > vg.v_max {
        return Err(Error::VelocityCfl {
            shift: shift_max,
            v_max: vg.v_max,
        });
    }
    let nv = vg.len();
    let n = vg.n;
    let mut out = f.clone();
    let mut lost = 0.0;
    let mut line = vec![0.0; n];
    for ix in 0..dom.space.len() {
        let block = &mut out.values[ix * nv..(ix + 1) * nv];
        for (axis, comp) in e.components.iter().enumerate().take(vg.dim) {
            let a = sign * comp[ix];
            if a == 0.0 {
                continue;
            }
            let sigma = a * dt / vg.spacing;
            let stride = vg.stride(axis);
            for outer in 0..nv / (n * stride) {
                for inner in 0..stride {
                    let start = outer * n * stride + inner;
                    for (k, l) in line.iter_mut().enumerate() {
                        *l = block[start + k * stride];
                    }
                    let (shifted, gone) = shift_line_open(&line, sigma, scheme);
                    lost += gone;
                    for (k, s) in shifted.into_iter().enumerate() {
                        block[start + k * stride] = s;
                    }
                }
            }
        }
    }
    Ok(VelocityAdvection {
        f: out,
        lost_mass: lost * dom.phase_cell_measure(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn integer_shift_is_exact() {
        let line: Vec<f64> = (0..10).map(|i| (i * i) as f64).collect();
        let out = shift_line_periodic(&line, 3.0, Interpolation::ClippedCubic);
        for j in 0..10 {
            assert_eq!(out[j], line[(j + 7) % 10]);
        }
    }

    #[test]
    fn cubic_flux_reproduces_quadratics() {
        // cell averages of a positive quadratic keep the limiter idle
        let avg = |x: f64| 3.0 + 0.4 * x + 0.02 * (x * x + 1.0 / 12.0);
        let n = 40;
        let line: Vec<f64> = (0..n).map(|j| avg(j as f64)).collect();
        for s in [0.3, 2.37, -1.6] {
            let (out, _) = shift_line_open(&line, s, Interpolation::ClippedCubic);
            for (j, v) in out.iter().enumerate().take(n - 6).skip(6) {
                assert!((v - avg(j as f64 - s)).abs() < 1e-12, "{s} {j}");
            }
        }
    }

    #[test]
    fn open_shift_records_lost_mass() {
        let line = vec![1.0; 8];
        let (out, lost) = shift_line_open(&line, 1.5, Interpolation::Linear);
        let total: f64 = out.iter().sum();
        assert!((total + lost - 8.0).abs() < 1e-14);
        assert!((lost - 1.5).abs() < 1e-14);
        let (_, lost) = shift_line_open(&line, -0.25, Interpolation::ClippedCubic);
        assert!(lost > 0.0);
    }

    proptest! {
        #[test]
        fn periodic_shift_conserves_and_stays_positive(
            line in prop::collection::vec(0.0f64..10.0, 4..40),
            sigma in -30.0f64..30.0,
            cubic in any::<bool>(),
        ) {
            let scheme = if cubic { Interpolation::ClippedCubic } else { Interpolation::Linear };
            let out = shift_line_periodic(&line, sigma, scheme);
            let before: f64 = line.iter().sum();
            let after: f64 = out.iter().sum();
            prop_assert!((before - after).abs() <= 1e-12 * before.max(1.0));
            prop_assert!(out.iter().all(|v| *v >= -1e-14 * before.max(1.0)));
        }

        #[test]
        fn open_shift_balances_mass(
            line in prop::collection::vec(0.0f64..10.0, 4..40),
            sigma in -8.0f64..8.0,
        ) {
            let (out, lost) = shift_line_open(&line, sigma, Interpolation::ClippedCubic);
            let before: f64 = line.iter().sum();
            let after: f64 = out.iter().sum();
            prop_assert!((before - after - lost).abs() <= 1e-12 * before.max(1.0));
            prop_assert!(lost >= -1e-14 && out.iter().all(|v| *v >= -1e-14 * before.max(1.0)));
        }
    }
}
