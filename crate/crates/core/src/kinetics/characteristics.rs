use crate::domain::{Boundary, SpatialGrid};
use crate::error::{Error, Result};

/// `v - 2 (v.n) n` for a unit normal `n`.
pub fn specular_reflect(v: &[f64], normal: &[f64]) -> Vec<f64> {
    let dot: f64 = v.iter().zip(normal).map(|(a, b)| a * b).sum();
    v.iter()
        .zip(normal)
        .map(|(a, b)| a - 2.0 * dot * b)
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub x: Vec<f64>,
    pub v: Vec<f64>,
    pub reflections: usize,
}

/// Integrates `x' = v, v' = accel(x, t)` from `t0` to `t1` with `steps`
/// velocity-Verlet steps, wrapping on periodic domains and reflecting
/// specularly at interval walls.
#[allow(clippy::too_many_arguments)]
pub fn trace_characteristic(
    grid: &SpatialGrid,
    x0: &[f64],
    v0: &[f64],
    accel: impl Fn(&[f64], f64) -> Vec<f64>,
    t0: f64,
    t1: f64,
    steps: usize,
    max_reflections: usize,
) -> Result<Trajectory> {
    let d = grid.dim();
    if x0.len() != d || v0.len() < d {
        return Err(Error::GridMismatch(format!(
            "position has {} components and velocity {}, domain dimension {d}",
            x0.len(),
            v0.len()
        )));
    }
    if steps == 0 {
        return Err(Error::InvalidInput("at least one step is required".into()));
    }
    let mut x = x0.to_vec();
    let mut v = v0.to_vec();
    let mut reflections = 0usize;
    let h = (t1 - t0) / steps as f64;
    let mut a = accel(&x, t0);
    for k in 0..steps {
        let t = t0 + (k + 1) as f64 * h;
        for i in 0..d {
            v[i] += 0.5 * h * a.get(i).copied().unwrap_or(0.0);
            x[i] += h * v[i];
        }
        for (i, l) in grid.lengths.iter().enumerate() {
            match grid.boundary {
                Boundary::Periodic => x[i] = x[i].rem_euclid(*l),
                Boundary::Specular => loop {
                    if x[i] < 0.0 {
                        x[i] = -x[i];
                    } else if x[i] > *l {
                        x[i] = 2.0 * l - x[i];
                    } else {
                        break;
                    }
                    v[i] = -v[i];
                    reflections += 1;
                    if reflections > max_reflections {
                        return Err(Error::TooManyReflections(max_reflections));
                    }
                },
            }
        }
        a = accel(&x, t);
        for i in 0..d {
            v[i] += 0.5 * h * a.get(i).copied().unwrap_or(0.0);
        }
    }
    Ok(Trajectory { x, v, reflections })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{build_domain, DomainSpec};

    fn interval(l: f64) -> SpatialGrid {
        build_domain(&DomainSpec::interval_1d(l, 8, 4.0, 8))
            .unwrap()
            .0
    }

    #[test]
    fn reflection_is_an_involution() {
        let n = [0.6, 0.8];
        let v = [1.5, -0.3];
        let r = specular_reflect(&v, &n);
        let back = specular_reflect(&r, &n);
        assert!((back[0] - v[0]).abs() < 1e-15 && (back[1] - v[1]).abs() < 1e-15);
        let dot = |a: &[f64]| a[0] * n[0] + a[1] * n[1];
        assert!((dot(&r) + dot(&v)).abs() < 1e-15);
        assert_eq!(specular_reflect(&[2.0], &[1.0]), vec![-2.0]);
    }

    #[test]
    fn free_flight_bounces_between_walls() {
        let g = interval(1.0);
        let tr =
            trace_characteristic(&g, &[0.2], &[1.0], |_, _| vec![0.0], 0.0, 2.5, 10, 10).unwrap();
        // 0.2 -> 1 -> 0 -> 0.7 with v flipped twice
        assert!((tr.x[0] - 0.7).abs() < 1e-12);
        assert!((tr.v[0] - 1.0).abs() < 1e-15);
        assert_eq!(tr.reflections, 2);
        let err = trace_characteristic(&g, &[0.2], &[1.0], |_, _| vec![0.0], 0.0, 2.5, 10, 1);
        assert!(matches!(err, Err(Error::TooManyReflections(1))));
    }

    #[test]
    fn constant_force_is_integrated_exactly() {
        let g = build_domain(&DomainSpec::periodic_1d(100.0, 8, 4.0, 8))
            .unwrap()
            .0;
        let tr =
            trace_characteristic(&g, &[10.0], &[1.0], |_, _| vec![0.5], 0.0, 2.0, 3, 0).unwrap();
        assert!((tr.x[0] - 13.0).abs() < 1e-12);
        assert!((tr.v[0] - 2.0).abs() < 1e-12);
    }
}
