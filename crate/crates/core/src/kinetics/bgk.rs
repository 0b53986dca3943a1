//! BGK relaxation towards the local Maxwellian.
//!
//! The target in each cell is the discrete Maxwellian `exp(a + b.v + c|v|^2/2)`
//! on the velocity grid whose discrete density, momentum and energy equal those
//! of `f`, found by Newton on the convex dual. The update
//! `f <- e^{-r dt} f + (1 - e^{-r dt}) M` is then exact in time, conserves the
//! discrete moments and cannot increase the discrete entropy.

use crate::domain::VelocityGrid;
use crate::error::{Error, Result};

use super::PhaseDistribution;

const MAX_NEWTON: usize = 60;

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct BgkReport {
    /// Change of `int f log f` over all relaxed cells (never positive).
    pub entropy_change: f64,
    pub relaxed_cells: usize,
    /// Cells left alone: vacuum, no discrete equilibrium, or already relaxed.
    pub skipped_cells: usize,
}

fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col] == 0.0 || !a[piv][col].is_finite() {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let m = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= m * a[col][k];
            }
            b[row] -= m * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    Some(x)
}

/// Collision invariants `1, v_1 .. v_d, |v|^2/2` at every velocity node.
fn invariants(vg: &VelocityGrid) -> Vec<Vec<f64>> {
    (0..vg.len())
        .map(|iv| {
            let v = vg.velocity(iv);
            let mut m = Vec::with_capacity(v.len() + 2);
            m.push(1.0);
            m.extend(v.iter().copied());
            m.push(0.5 * vg.speed_squared(iv));
            m
        })
        .collect()
}

fn maxwellian_from_dual(basis: &[Vec<f64>], target: &[f64], guess: Vec<f64>) -> Option<Vec<f64>> {
    let m = target.len();
    let eval = |alpha: &[f64]| -> Option<Vec<f64>> {
        let mut out = Vec::with_capacity(basis.len());
        for row in basis {
            let e: f64 = row.iter().zip(alpha).map(|(a, b)| a * b).sum();
            if e > 700.0 {
                return None;
            }
            out.push(e.exp());
        }
        Some(out)
    };
    let dual = |vals: &[f64], alpha: &[f64]| -> f64 {
        vals.iter().sum::<f64>() - alpha.iter().zip(target).map(|(a, t)| a * t).sum::<f64>()
    };
    let scale: Vec<f64> = (0..m)
        .map(|i| {
            basis
                .iter()
                .map(|r| r[i].abs())
                .fold(0.0, f64::max)
                .max(1.0)
                * target[0]
        })
        .collect();
    let mut alpha = guess;
    let mut vals = eval(&alpha)?;
    for _ in 0..MAX_NEWTON {
        let mut g = target.iter().map(|t| -t).collect::<Vec<_>>();
        let mut h = vec![vec![0.0; m]; m];
        for (row, &w) in basis.iter().zip(&vals) {
            for i in 0..m {
                g[i] += row[i] * w;
                for j in 0..=i {
                    h[i][j] += row[i] * row[j] * w;
                }
            }
        }
        for i in 0..m {
            for j in 0..i {
                h[j][i] = h[i][j];
            }
        }
        if g.iter().zip(&scale).all(|(gi, s)| gi.abs() <= 1e-14 * s) {
            return Some(vals);
        }
        let step = solve_dense(h, g.iter().map(|x| -x).collect())?;
        let slope: f64 = step.iter().zip(&g).map(|(a, b)| a * b).sum();
        let current = dual(&vals, &alpha);
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let trial: Vec<f64> = alpha.iter().zip(&step).map(|(a, s)| a + t * s).collect();
            if let Some(tv) = eval(&trial) {
                let value = dual(&tv, &trial);
                if value <= current + 1e-4 * t * slope || value <= current {
                    alpha = trial;
                    vals = tv;
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    // accept a slightly looser fit once progress stalls at roundoff
    let mut g = target.iter().map(|t| -t).collect::<Vec<_>>();
    for (row, &w) in basis.iter().zip(&vals) {
        for i in 0..m {
            g[i] += row[i] * w;
        }
    }
    if g.iter().zip(&scale).all(|(gi, s)| gi.abs() <= 1e-11 * s) {
        Some(vals)
    } else {
        None
    }
}

/// Discrete Maxwellian with the same discrete moments as the velocity block
/// `cell`, or `None` when the moments admit none (vacuum, or a temperature far
/// below the grid resolution).
pub fn discrete_maxwellian(vg: &VelocityGrid, cell: &[f64]) -> Option<Vec<f64>> {
    let basis = invariants(vg);
    discrete_maxwellian_with(vg, &basis, cell)
}

fn discrete_maxwellian_with(
    vg: &VelocityGrid,
    basis: &[Vec<f64>],
    cell: &[f64],
) -> Option<Vec<f64>> {
    let m = vg.dim + 2;
    let mut target = vec![0.0; m];
    for (row, f) in basis.iter().zip(cell) {
        for i in 0..m {
            target[i] += row[i] * f;
        }
    }
    let n = target[0];
    if !(n > 0.0) {
        return None;
    }
    let u: Vec<f64> = target[1..=vg.dim].iter().map(|p| p / n).collect();
    let u2: f64 = u.iter().map(|x| x * x).sum();
    let theta = (2.0 * target[m - 1] - n * u2) / (vg.dim as f64 * n);
    if !(theta > 0.0) {
        return None;
    }
    // continuous Maxwellian in node units: sum over nodes ~ n / h^d
    let hd = vg.cell_measure();
    let mut guess = Vec::with_capacity(m);
    guess.push(
        (n * hd).ln()
            - 0.5 * vg.dim as f64 * (2.0 * std::f64::consts::PI * theta).ln()
            - 0.5 * u2 / theta,
    );
    guess.extend(u.iter().map(|ub| ub / theta));
    guess.push(-1.0 / theta);
    maxwellian_from_dual(basis, &target, guess)
}

/// `sum (g log g - f log f)` with the difference formed per node without
/// cancellation.
fn entropy_change(before: &[f64], after: &[f64]) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for (&f, &g) in before.iter().zip(after) {
        let term = if f > 0.0 && g > 0.0 {
            let d = g - f;
            d * f.ln() + g * (d / f).ln_1p()
        } else if g > 0.0 {
            g * g.ln()
        } else if f > 0.0 {
            -f * f.ln()
        } else {
            0.0
        };
        let y = term - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    sum
}

/// One exact BGK step of length `dt` at collision frequency `rate`.
pub fn bgk_relax(
    f: &PhaseDistribution,
    rate: f64,
    dt: f64,
) -> Result<(PhaseDistribution, BgkReport)> {
    if !(rate >= 0.0 && dt >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "collision rate {rate} and dt {dt} must be nonnegative"
        )));
    }
    let weight = -(-rate * dt).exp_m1();
    let mut out = f.clone();
    let mut report = BgkReport::default();
    if weight == 0.0 {
        return Ok((out, report));
    }
    let vg = &f.domain.velocity;
    let nv = vg.len();
    let basis = invariants(vg);
    let total: f64 = f.values.iter().sum();
    let floor = 1e-13 * total / f.domain.space.len() as f64;
    let mut trial = vec![0.0; nv];
    for (ix, block) in f.values.chunks(nv).enumerate() {
        let n: f64 = block.iter().sum();
        if !(n > floor) {
            report.skipped_cells += 1;
            continue;
        }
        let Some(m) = discrete_maxwellian_with(vg, &basis, block) else {
            report.skipped_cells += 1;
            continue;
        };
        for ((t, &fv), &mv) in trial.iter_mut().zip(block).zip(&m) {
            *t = fv + weight * (mv - fv);
        }
        let dh = entropy_change(block, &trial);
        if dh > 0.0 {
            report.skipped_cells += 1;
            continue;
        }
        out.values[ix * nv..(ix + 1) * nv].copy_from_slice(&trial);
        report.entropy_change += dh;
        report.relaxed_cells += 1;
    }
    report.entropy_change *= f.domain.phase_cell_measure();
    Ok((out, report))
}
