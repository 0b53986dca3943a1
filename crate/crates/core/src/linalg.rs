//! Discrete Laplacian on the spatial grid and solvers for
//! `(-lambda^2 Lap_h + diag(d)) u = b`.
//!
//! The stencil is the standard 3-point (5-point in 2D) one. Periodic axes wrap;
//! specular (Neumann) axes mirror a ghost cell, so the boundary face carries
//! zero flux. With these closures `-sum(u * Lap_h u) = sum over faces |D u|^2`
//! holds exactly, which the field-energy quadrature relies on.

use crate::domain::{Boundary, SpatialGrid};
use crate::error::{Error, Result};

/// `out = Lap_h u`.
pub fn laplacian(grid: &SpatialGrid, u: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; u.len()];
    for axis in 0..grid.dim() {
        let n = grid.shape[axis];
        let stride = grid.stride(axis);
        let inv_h2 = 1.0 / (grid.spacing[axis] * grid.spacing[axis]);
        for (idx, o) in out.iter_mut().enumerate() {
            let k = (idx / stride) % n;
            let base = idx - k * stride;
            let (left, right) = match grid.boundary {
                Boundary::Periodic => (
                    base + ((k + n - 1) % n) * stride,
                    base + ((k + 1) % n) * stride,
                ),
                Boundary::Specular => (
                    if k == 0 { idx } else { idx - stride },
                    if k + 1 == n { idx } else { idx + stride },
                ),
            };
            *o += (u[left] - 2.0 * u[idx] + u[right]) * inv_h2;
        }
    }
    out
}

/// Squared face differences summed over all interior (and, if periodic,
/// wrapping) faces, times the cell measure: the discrete `int |grad u|^2`.
pub fn gradient_energy(grid: &SpatialGrid, u: &[f64]) -> f64 {
    let mut acc = 0.0;
    for axis in 0..grid.dim() {
        let n = grid.shape[axis];
        let stride = grid.stride(axis);
        let h = grid.spacing[axis];
        for (idx, &ui) in u.iter().enumerate() {
            let k = (idx / stride) % n;
            let next = if k + 1 < n {
                idx + stride
            } else {
                match grid.boundary {
                    Boundary::Periodic => idx - k * stride,
                    Boundary::Specular => continue,
                }
            };
            let d = (u[next] - ui) / h;
            acc += d * d;
        }
    }
    acc * grid.cell_measure()
}

/// Solves `(-lambda^2 Lap_h + diag(diag)) u = rhs` with `diag >= 0`.
///
/// When `diag` vanishes identically the operator is singular; `rhs` is then
/// projected to zero mean and the zero-mean solution is returned.
pub fn solve_shifted(
    grid: &SpatialGrid,
    lambda2: f64,
    diag: &[f64],
    rhs: &[f64],
) -> Result<Vec<f64>> {
    let singular = diag.iter().all(|&d| d == 0.0);
    let mut rhs = rhs.to_vec();
    if singular {
        let mean = rhs.iter().sum::<f64>() / rhs.len() as f64;
        rhs.iter_mut().for_each(|r| *r -= mean);
    }
    let mut u = if grid.dim() == 1 {
        let h2 = grid.spacing[0] * grid.spacing[0];
        let off = -lambda2 / h2;
        match (grid.boundary, singular) {
            (Boundary::Specular, false) => neumann_tridiagonal(off, diag, &rhs)?,
            (Boundary::Periodic, false) => cyclic_tridiagonal(off, diag, &rhs)?,
            (_, true) => integrate_poisson_1d(grid, lambda2, &rhs),
        }
    } else {
        conjugate_gradient(grid, lambda2, diag, &rhs, singular)?
    };
    if singular {
        let mean = u.iter().sum::<f64>() / u.len() as f64;
        u.iter_mut().for_each(|x| *x -= mean);
    }
    Ok(u)
}

/// Thomas algorithm for the Neumann-closed tridiagonal system.
fn neumann_tridiagonal(off: f64, diag: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = rhs.len();
    let main: Vec<f64> = (0..n)
        .map(|i| {
            let neighbours = if i == 0 || i + 1 == n { 1.0 } else { 2.0 };
            -off * neighbours + diag[i]
        })
        .collect();
    thomas(off, &main, off, rhs)
}

fn thomas(lower: f64, main: &[f64], upper: f64, rhs: &[f64]) -> Result<Vec<f64>> {
    let n = rhs.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut beta = main[0];
    if beta == 0.0 {
        return Err(Error::LinearSolve("zero pivot".into()));
    }
    c[0] = upper / beta;
    d[0] = rhs[0] / beta;
    for i in 1..n {
        beta = main[i] - lower * c[i - 1];
        if beta == 0.0 || !beta.is_finite() {
            return Err(Error::LinearSolve("zero pivot".into()));
        }
        c[i] = upper / beta;
        d[i] = (rhs[i] - lower * d[i - 1]) / beta;
    }
    for i in (0..n - 1).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    Ok(d)
}

/// Periodic tridiagonal system via Sherman-Morrison.
fn cyclic_tridiagonal(off: f64, diag: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = rhs.len();
    let mut main: Vec<f64> = diag.iter().map(|d| -2.0 * off + d).collect();
    let gamma = -main[0];
    main[0] -= gamma;
    main[n - 1] -= off * off / gamma;
    let x = thomas(off, &main, off, rhs)?;
    let mut u = vec![0.0; n];
    u[0] = gamma;
    u[n - 1] = off;
    let z = thomas(off, &main, off, &u)?;
    let v_dot = |w: &[f64]| w[0] + off / gamma * w[n - 1];
    let denom = 1.0 + v_dot(&z);
    if denom == 0.0 {
        return Err(Error::LinearSolve("singular cyclic system".into()));
    }
    let fact = v_dot(&x) / denom;
    Ok(x.iter().zip(&z).map(|(a, b)| a - fact * b).collect())
}

/// Exact 1D solve of `-lambda^2 Lap_h u = rhs` for zero-mean `rhs`, by summing
/// face fluxes. Returns a solution up to an additive constant.
fn integrate_poisson_1d(grid: &SpatialGrid, lambda2: f64, rhs: &[f64]) -> Vec<f64> {
    let n = rhs.len();
    let h = grid.spacing[0];
    // flux[k] = lambda^2 (u[k+1]-u[k]) / h through face k+1/2
    let mut flux = vec![0.0; n];
    let mut acc = 0.0;
    for k in 0..n {
        acc -= rhs[k] * h;
        flux[k] = acc;
    }
    if grid.boundary == Boundary::Periodic {
        // any constant can be added to the fluxes; pick the one closing the loop
        let shift = flux.iter().sum::<f64>() / n as f64;
        flux.iter_mut().for_each(|f| *f -= shift);
    }
    let mut u = vec![0.0; n];
    for k in 1..n {
        u[k] = u[k - 1] + flux[k - 1] * h / lambda2;
    }
    u
}

fn conjugate_gradient(
    grid: &SpatialGrid,
    lambda2: f64,
    diag: &[f64],
    rhs: &[f64],
    singular: bool,
) -> Result<Vec<f64>> {
    let n = rhs.len();
    let apply = |x: &[f64]| -> Vec<f64> {
        let lap = laplacian(grid, x);
        lap.iter()
            .zip(diag)
            .zip(x)
            .map(|((l, d), xi)| -lambda2 * l + d * xi)
            .collect()
    };
    let inv_h2: f64 = grid.spacing.iter().map(|h| 1.0 / (h * h)).sum();
    let precond: Vec<f64> = diag
        .iter()
        .map(|d| 1.0 / (2.0 * lambda2 * inv_h2 + d))
        .collect();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let project = |v: &mut Vec<f64>| {
        if singular {
            let m = v.iter().sum::<f64>() / n as f64;
            v.iter_mut().for_each(|x| *x -= m);
        }
    };

    let b_norm = dot(rhs, rhs).sqrt();
    let mut x = vec![0.0; n];
    if b_norm == 0.0 {
        return Ok(x);
    }
    let mut r = rhs.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&precond).map(|(a, p)| a * p).collect();
    project(&mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let max_iter = 20 * n + 100;
    for _ in 0..max_iter {
        let ap = apply(&p);
        let alpha = rz / dot(&p, &ap);
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        if dot(&r, &r).sqrt() <= 1e-14 * b_norm {
            return Ok(x);
        }
        z = r.iter().zip(&precond).map(|(a, p)| a * p).collect();
        project(&mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    let res = dot(&r, &r).sqrt() / b_norm;
    if res <= 1e-10 {
        Ok(x)
    } else {
        Err(Error::LinearSolve(format!(
            "conjugate gradient stalled at relative residual {res:e}"
        )))
    }
}
