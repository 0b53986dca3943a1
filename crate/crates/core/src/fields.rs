//! Poisson-Boltzmann field solves.
//!
//! For fixed inverse temperature `beta` the potential solves
//! `-lambda^2 Lap phi + exp(beta phi) = n_I` with periodic or Neumann closure.
//! The energy `E(beta) = m0 d / (2 beta) + lambda^2/2 int |grad phi|^2` is
//! strictly decreasing in `beta`, which is what `find_beta` exploits.

use std::sync::Arc;

use serde::Serialize;

use crate::domain::{Boundary, SpatialGrid};
use crate::error::{Error, Result};
use crate::linalg;

/// Largest `beta * phi` accepted before the exponential is declared blown up.
const MAX_EXPONENT: f64 = 700.0;

/// Scalar field on the spatial grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialField {
    pub grid: Arc<SpatialGrid>,
    pub values: Vec<f64>,
}

impl SpatialField {
    pub fn new(grid: Arc<SpatialGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} values for {} cells",
                values.len(),
                grid.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite value at cell {i}")));
        }
        Ok(SpatialField { grid, values })
    }

    pub fn constant(grid: Arc<SpatialGrid>, value: f64) -> Self {
        let values = vec![value; grid.len()];
        SpatialField { grid, values }
    }

    pub fn from_fn(grid: Arc<SpatialGrid>, f: impl Fn(&[f64]) -> f64) -> Self {
        let values = grid.sample(f);
        SpatialField { grid, values }
    }

    pub fn integral(&self) -> f64 {
        self.grid.integrate(&self.values)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> SpatialField {
        SpatialField {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Rescales so that the integral equals `mass`.
    pub fn normalized_to(&self, mass: f64) -> SpatialField {
        let s = mass / self.integral();
        self.map(|v| v * s)
    }

    /// Discrete `int |grad u|^2` from face differences.
    pub fn gradient_energy(&self) -> f64 {
        linalg::gradient_energy(&self.grid, &self.values)
    }

    pub fn check_grid(&self, other: &SpatialGrid) -> Result<()> {
        if *self.grid != *other {
            return Err(Error::GridMismatch("fields live on different grids".into()));
        }
        Ok(())
    }
}

/// Cell-centered `E = -grad phi`, one component vector per spatial dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct ElectricField {
    pub grid: Arc<SpatialGrid>,
    pub components: Vec<Vec<f64>>,
}

impl ElectricField {
    pub fn zero(grid: Arc<SpatialGrid>) -> Self {
        let components = vec![vec![0.0; grid.len()]; grid.dim()];
        ElectricField { grid, components }
    }

    /// Max over cells of the Euclidean norm.
    pub fn max_norm(&self) -> f64 {
        (0..self.grid.len())
            .map(|i| {
                self.components
                    .iter()
                    .map(|c| c[i] * c[i])
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0, f64::max)
    }
}

/// Fourth-order central differences of `-phi`; Neumann walls mirror ghost
/// cells. This stencil is the cell-centred dual of the face fluxes of the
/// cubic transport, so the work done by the field matches the change of the
/// potential energy to high order.
pub fn electric_field(phi: &SpatialField) -> ElectricField {
    let g = &phi.grid;
    let u = &phi.values;
    let components = (0..g.dim())
        .map(|axis| {
            let n = g.shape[axis] as isize;
            let stride = g.stride(axis);
            let h = g.spacing[axis];
            let wrap = |k: isize| -> usize {
                let k = match g.boundary {
                    Boundary::Periodic => k.rem_euclid(n),
                    Boundary::Specular if k < 0 => -k - 1,
                    Boundary::Specular if k >= n => 2 * n - 1 - k,
                    Boundary::Specular => k,
                };
                k as usize
            };
            (0..u.len())
                .map(|idx| {
                    let k = ((idx / stride) % n as usize) as isize;
                    let base = idx - k as usize * stride;
                    let at = |j: isize| u[base + wrap(k + j) * stride];
                    -(8.0 * (at(1) - at(-1)) - (at(2) - at(-2))) / (12.0 * h)
                })
                .collect()
        })
        .collect();
    ElectricField {
        grid: g.clone(),
        components,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FieldTolerances {
    /// Max-norm residual of the Poisson-Boltzmann equation.
    pub pde: f64,
    /// Relative tolerance on `E(beta) - E1`.
    pub energy: f64,
    /// Relative tolerance on mass identities.
    pub mass: f64,
    pub max_newton: usize,
    pub max_halvings: usize,
    pub max_doublings: usize,
    pub max_beta_iters: usize,
}

impl Default for FieldTolerances {
    fn default() -> Self {
        FieldTolerances {
            pde: 1e-10,
            energy: 1e-10,
            mass: 1e-8,
            max_newton: 100,
            max_halvings: 30,
            max_doublings: 60,
            max_beta_iters: 200,
        }
    }
}

/// A converged `(beta, phi)` pair and how it was obtained.
#[derive(Debug, Clone)]
pub struct BetaSolution {
    pub beta: f64,
    pub phi: SpatialField,
    /// `E(beta)` at the returned pair.
    pub energy: f64,
    pub newton_iters: usize,
    pub bisect_iters: usize,
    pub pde_residual: f64,
    /// `E(beta) - E1`.
    pub energy_residual: f64,
    /// `int exp(beta phi) - m0`.
    pub mass_residual: f64,
}

#[derive(Debug, Clone)]
pub struct PhiSolution {
    pub phi: SpatialField,
    pub newton_iters: usize,
    pub residual: f64,
}

/// Poisson-Boltzmann problem data shared by all the solves.
#[derive(Debug, Clone, Copy)]
pub struct PoissonBoltzmann {
    pub lambda_d: f64,
    pub velocity_dim: usize,
    pub tol: FieldTolerances,
}

impl PoissonBoltzmann {
    pub fn new(lambda_d: f64, velocity_dim: usize) -> Self {
        PoissonBoltzmann {
            lambda_d,
            velocity_dim,
            tol: FieldTolerances::default(),
        }
    }

    pub fn with_tolerances(mut self, tol: FieldTolerances) -> Self {
        self.tol = tol;
        self
    }

    fn lambda2(&self) -> f64 {
        self.lambda_d * self.lambda_d
    }

    /// `-lambda^2 Lap phi + exp(beta phi) - n_I`.
    pub fn residual(&self, n_i: &SpatialField, beta: f64, phi: &[f64]) -> Vec<f64> {
        let lap = linalg::laplacian(&n_i.grid, phi);
        let l2 = self.lambda2();
        phi.iter()
            .zip(&lap)
            .zip(&n_i.values)
            .map(|((p, l), n)| -l2 * l + (beta * p).exp() - n)
            .collect()
    }

    pub fn solve_phi(&self, n_i: &SpatialField, beta: f64) -> Result<PhiSolution> {
        self.solve_phi_from(n_i, beta, None)
    }

    /// Damped Newton; `guess` overrides the default `log(max(n_I, floor))/beta`.
    pub fn solve_phi_from(
        &self,
        n_i: &SpatialField,
        beta: f64,
        guess: Option<&[f64]>,
    ) -> Result<PhiSolution> {
        if !(beta.is_finite() && beta > 0.0) {
            return Err(Error::InvalidInput(format!(
                "beta = {beta} must be positive"
            )));
        }
        if n_i.values.iter().any(|&v| v < 0.0) {
            return Err(Error::InvalidInput(
                "ion density must be nonnegative".into(),
            ));
        }
        let m0 = n_i.integral();
        if !(m0 > 0.0) {
            return Err(Error::ZeroMass(m0));
        }
        let grid = &n_i.grid;
        let floor = 1e-12 * m0 / grid.total_measure();
        let mut phi: Vec<f64> = match guess {
            Some(g) if g.len() == n_i.values.len() => g.to_vec(),
            _ => n_i
                .values
                .iter()
                .map(|&n| n.max(floor).ln() / beta)
                .collect(),
        };
        check_exponent(beta, &phi)?;

        let l2 = self.lambda2();
        let norm = |r: &[f64]| r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut res = self.residual(n_i, beta, &phi);
        let mut res_norm = norm(&res);
        let mut iters = 0;
        while res_norm > self.tol.pde {
            if iters >= self.tol.max_newton {
                return Err(Error::NewtonNonConvergence {
                    iters,
                    residual: res_norm,
                });
            }
            iters += 1;
            let diag: Vec<f64> = phi.iter().map(|p| beta * (beta * p).exp()).collect();
            let rhs: Vec<f64> = res.iter().map(|r| -r).collect();
            let step = linalg::solve_shifted(grid, l2, &diag, &rhs)?;

            let mut t = 1.0;
            let mut accepted = false;
            for _ in 0..=self.tol.max_halvings {
                let trial: Vec<f64> = phi.iter().zip(&step).map(|(p, s)| p + t * s).collect();
                if trial.iter().all(|p| (beta * p).abs() <= MAX_EXPONENT) {
                    let r = self.residual(n_i, beta, &trial);
                    let rn = norm(&r);
                    if rn.is_finite() && rn < res_norm {
                        phi = trial;
                        res = r;
                        res_norm = rn;
                        accepted = true;
                        break;
                    }
                }
                t *= 0.5;
            }
            if !accepted {
                // no damped step decreases the residual: at roundoff level or stuck
                if res_norm <= 1e3 * self.tol.pde {
                    break;
                }
                check_exponent(beta, &phi)?;
                return Err(Error::NewtonNonConvergence {
                    iters,
                    residual: res_norm,
                });
            }
        }
        Ok(PhiSolution {
            phi: SpatialField {
                grid: grid.clone(),
                values: phi,
            },
            newton_iters: iters,
            residual: res_norm,
        })
    }

    /// Discrete field energy `lambda^2/2 int |grad phi|^2`.
    pub fn field_energy(&self, phi: &SpatialField) -> f64 {
        0.5 * self.lambda2() * phi.gradient_energy()
    }

    /// `E(beta)` together with the potential it was evaluated at.
    pub fn energy_with_phi(
        &self,
        n_i: &SpatialField,
        m0: f64,
        beta: f64,
        guess: Option<&[f64]>,
    ) -> Result<(f64, PhiSolution)> {
        let sol = self.solve_phi_from(n_i, beta, guess)?;
        let e = self.electron_thermal_energy(m0, beta) + self.field_energy(&sol.phi);
        Ok((e, sol))
    }

    pub fn energy_of_beta(&self, n_i: &SpatialField, m0: f64, beta: f64) -> Result<f64> {
        self.energy_with_phi(n_i, m0, beta, None).map(|(e, _)| e)
    }

    /// `m0 d / (2 beta)`, the kinetic energy of the Maxwell-Boltzmann electrons.
    pub fn electron_thermal_energy(&self, m0: f64, beta: f64) -> f64 {
        m0 * self.velocity_dim as f64 / (2.0 * beta)
    }

    /// `dE/dbeta` at a solved pair via the linearized problem
    /// `(-lambda^2 Lap + beta e^{beta phi}) psi = -e^{beta phi} phi`.
    pub fn d_energy_d_beta(&self, m0: f64, beta: f64, phi: &SpatialField) -> Result<f64> {
        let grid = &phi.grid;
        let e: Vec<f64> = phi.values.iter().map(|p| (beta * p).exp()).collect();
        let diag: Vec<f64> = e.iter().map(|x| beta * x).collect();
        let rhs: Vec<f64> = e.iter().zip(&phi.values).map(|(x, p)| -x * p).collect();
        let psi = linalg::solve_shifted(grid, self.lambda2(), &diag, &rhs)?;
        let lap = linalg::laplacian(grid, &psi);
        let cross: Vec<f64> = phi.values.iter().zip(&lap).map(|(p, l)| p * l).collect();
        let d = self.velocity_dim as f64;
        Ok(-m0 * d / (2.0 * beta * beta) - self.lambda2() * grid.integrate(&cross))
    }

    pub fn find_beta(&self, n_i: &SpatialField, m0: f64, e1: f64) -> Result<BetaSolution> {
        self.find_beta_from(n_i, m0, e1, None)
    }

    /// Safeguarded Newton on `E(beta) = E1` inside a bracket seeded at the
    /// exact lower bound `m0 d / (2 E1)`. `warm` is a previous `(beta, phi)`
    /// as starting point.
    pub fn find_beta_from(
        &self,
        n_i: &SpatialField,
        m0: f64,
        e1: f64,
        warm: Option<(f64, &SpatialField)>,
    ) -> Result<BetaSolution> {
        if !(e1.is_finite() && e1 > 0.0) {
            return Err(Error::NonPositiveEnergy(e1));
        }
        if !(m0 > 0.0) {
            return Err(Error::ZeroMass(m0));
        }
        let integral = n_i.integral();
        if (integral - m0).abs() > self.tol.mass * m0 {
            return Err(Error::MassMismatch { integral, m0 });
        }
        let target_tol = self.tol.energy * e1;
        let beta_lo0 = self.velocity_dim as f64 * m0 / (2.0 * e1);

        let mut newton_total = 0;
        let (e_lo, sol_lo) = self.energy_with_phi(n_i, m0, beta_lo0, None)?;
        newton_total += sol_lo.newton_iters;
        if e_lo - e1 <= target_tol {
            // field energy negligible: the lower bound is the root
            return Ok(self.finish(n_i, m0, e1, beta_lo0, e_lo, sol_lo, newton_total, 0));
        }

        let mut lo = beta_lo0;
        let mut hi = f64::INFINITY;
        let mut current = (beta_lo0, e_lo, sol_lo);
        if let Some((wb, wphi)) = warm.filter(|w| w.0 > beta_lo0) {
            let (e, sol) = self.energy_with_phi(n_i, m0, wb, Some(&wphi.values))?;
            newton_total += sol.newton_iters;
            if e > e1 {
                lo = wb;
            } else {
                hi = wb;
            }
            current = (wb, e, sol);
        }

        // expand the upper end until E(hi) < E1
        if hi.is_infinite() {
            let mut b = 2.0 * lo;
            let mut doublings = 0;
            loop {
                let (e, sol) = self.energy_with_phi(n_i, m0, b, Some(&current.2.phi.values))?;
                newton_total += sol.newton_iters;
                if e < e1 {
                    hi = b;
                    if (e - e1).abs() < (current.1 - e1).abs() {
                        current = (b, e, sol);
                    }
                    break;
                }
                lo = b;
                current = (b, e, sol);
                doublings += 1;
                if doublings > self.tol.max_doublings {
                    return Err(Error::BracketExpansion {
                        beta_hi: b,
                        energy: e,
                        e1,
                    });
                }
                b *= 2.0;
            }
        }

        let mut bisect_iters = 0;
        let mut last_step = f64::INFINITY;
        for _ in 0..self.tol.max_beta_iters {
            let (beta, e, sol) = &current;
            let g = e - e1;
            if g.abs() <= target_tol && last_step <= 1e-14 * beta {
                break;
            }
            if hi - lo <= 4.0 * f64::EPSILON * hi {
                break;
            }
            let slope = self.d_energy_d_beta(m0, *beta, &sol.phi)?;
            let newton = beta - g / slope;
            let next = if slope < 0.0 && newton > lo && newton < hi {
                newton
            } else {
                bisect_iters += 1;
                0.5 * (lo + hi)
            };
            last_step = (next - beta).abs();
            let (e_next, sol_next) = self.energy_with_phi(n_i, m0, next, Some(&sol.phi.values))?;
            newton_total += sol_next.newton_iters;
            if e_next > e1 {
                lo = lo.max(next);
            } else {
                hi = hi.min(next);
            }
            current = (next, e_next, sol_next);
        }
        let (beta, e, sol) = current;
        if (e - e1).abs() > target_tol {
            return Err(Error::NewtonNonConvergence {
                iters: self.tol.max_beta_iters,
                residual: (e - e1).abs(),
            });
        }
        Ok(self.finish(n_i, m0, e1, beta, e, sol, newton_total, bisect_iters))
    }

    #[allow(clippy::too_many_arguments)]
    fn finish(
        &self,
        n_i: &SpatialField,
        m0: f64,
        e1: f64,
        beta: f64,
        energy: f64,
        sol: PhiSolution,
        newton_iters: usize,
        bisect_iters: usize,
    ) -> BetaSolution {
        let ne: Vec<f64> = sol.phi.values.iter().map(|p| (beta * p).exp()).collect();
        let mass_residual = n_i.grid.integrate(&ne) - m0;
        BetaSolution {
            beta,
            energy,
            newton_iters,
            bisect_iters,
            pde_residual: sol.residual,
            energy_residual: energy - e1,
            mass_residual,
            phi: sol.phi,
        }
    }
}

fn check_exponent(beta: f64, phi: &[f64]) -> Result<()> {
    let worst = phi.iter().fold(0.0f64, |m, p| m.max((beta * p).abs()));
    if !(worst <= MAX_EXPONENT) {
        return Err(Error::ExpOverflow(worst));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{build_domain, DomainSpec};
    use std::f64::consts::PI;

    fn periodic(n: usize, l: f64) -> Arc<SpatialGrid> {
        Arc::new(
            build_domain(&DomainSpec::periodic_1d(l, n, 1.0, 4))
                .unwrap()
                .0,
        )
    }

    fn interval(n: usize, l: f64) -> Arc<SpatialGrid> {
        Arc::new(
            build_domain(&DomainSpec::interval_1d(l, n, 1.0, 4))
                .unwrap()
                .0,
        )
    }

    #[test]
    fn unit_density_gives_zero_potential() {
        let g = periodic(16, 2.0 * PI);
        let pb = PoissonBoltzmann::new(1.0, 1);
        for beta in [0.3, 1.0, 7.0] {
            let s = pb
                .solve_phi(&SpatialField::constant(g.clone(), 1.0), beta)
                .unwrap();
            assert!(s.phi.max_abs() < 1e-14);
        }
    }

    #[test]
    fn constant_density_closed_form() {
        let g = interval(20, 3.0);
        let pb = PoissonBoltzmann::new(1.0, 1);
        let m0 = 5.0;
        let n = SpatialField::constant(g.clone(), m0 / 3.0);
        let beta = 2.5;
        let s = pb.solve_phi(&n, beta).unwrap();
        let expect = (m0 / 3.0f64).ln() / beta;
        assert!(s.phi.values.iter().all(|p| (p - expect).abs() < 1e-12));
    }

    #[test]
    fn residual_and_mass_identity_on_nonuniform_density() {
        for g in [periodic(64, 2.0 * PI), interval(64, 2.0 * PI)] {
            let pb = PoissonBoltzmann::new(0.8, 1);
            let n = SpatialField::from_fn(g.clone(), |p| 1.0 + 0.6 * p[0].cos());
            let s = pb.solve_phi(&n, 1.7).unwrap();
            let r = pb.residual(&n, 1.7, &s.phi.values);
            assert!(r.iter().all(|x| x.abs() <= 1e-10));
            let ne = s.phi.map(|p| (1.7 * p).exp());
            assert!((ne.integral() - n.integral()).abs() < 1e-9);
        }
    }

    #[test]
    fn newton_handles_near_vacuum_density() {
        let g = periodic(64, 2.0 * PI);
        let pb = PoissonBoltzmann::new(1.0, 1);
        let n = SpatialField::from_fn(g.clone(), |p| (-(p[0] - PI).powi(2) * 4.0).exp() * 3.0);
        let s = pb.solve_phi(&n, 2.0).unwrap();
        assert!(s.residual <= 1e-10);
    }

    #[test]
    fn rejects_bad_inputs() {
        let g = periodic(8, 1.0);
        let pb = PoissonBoltzmann::new(1.0, 1);
        let zero = SpatialField::constant(g.clone(), 0.0);
        assert!(matches!(pb.solve_phi(&zero, 1.0), Err(Error::ZeroMass(_))));
        assert!(pb
            .solve_phi(&SpatialField::constant(g.clone(), 1.0), 0.0)
            .is_err());
        assert!(matches!(
            pb.find_beta(&zero, 0.0, 1.0),
            Err(Error::ZeroMass(_))
        ));
        let one = SpatialField::constant(g.clone(), 1.0);
        assert!(matches!(
            pb.find_beta(&one, 1.0, -1.0),
            Err(Error::NonPositiveEnergy(_))
        ));
        assert!(matches!(
            pb.find_beta(&one, 2.0, 1.0),
            Err(Error::MassMismatch { .. })
        ));
        assert!(SpatialField::new(g, vec![1.0; 3]).is_err());
    }

    #[test]
    fn uniform_energy_is_thermal_only() {
        let g = periodic(16, 1.0);
        let pb = PoissonBoltzmann::new(1.0, 1);
        let n = SpatialField::constant(g, 2.0);
        let e1 = pb.energy_of_beta(&n, 2.0, 1.0).unwrap();
        let e2 = pb.energy_of_beta(&n, 2.0, 2.0).unwrap();
        assert!((e1 - 1.0).abs() < 1e-14);
        assert!((e2 - 0.5).abs() < 1e-14);
        let s = pb.solve_phi(&n, 1.0).unwrap();
        assert!((pb.d_energy_d_beta(2.0, 1.0, &s.phi).unwrap() + 1.0).abs() < 1e-14);
    }

    #[test]
    fn find_beta_uniform_closed_forms() {
        let g = periodic(16, 1.0);
        let pb = PoissonBoltzmann::new(1.0, 1);
        let n = SpatialField::constant(g, 2.0);
        let s = pb.find_beta(&n, 2.0, 1.0).unwrap();
        assert!((s.beta - 1.0).abs() < 1e-12);
        assert!(s.phi.values.iter().all(|p| (p - 2f64.ln()).abs() < 1e-12));
        let s = pb.find_beta(&n, 2.0, 10.0).unwrap();
        assert!((s.beta - 0.1).abs() < 1e-12);
    }

    #[test]
    fn find_beta_with_warm_start_matches_cold() {
        let g = interval(48, 2.0 * PI);
        let pb = PoissonBoltzmann::new(1.0, 2);
        let n = SpatialField::from_fn(g, |p| 1.0 + 0.4 * p[0].cos());
        let m0 = n.integral();
        let cold = pb.find_beta(&n, m0, 3.0).unwrap();
        let warm = pb
            .find_beta_from(&n, m0, 3.05, Some((cold.beta, &cold.phi)))
            .unwrap();
        let cold2 = pb.find_beta(&n, m0, 3.05).unwrap();
        assert!((warm.beta - cold2.beta).abs() < 1e-11 * cold2.beta);
        assert!(warm.energy_residual.abs() <= 1e-10 * 3.05);
        assert!(warm.mass_residual.abs() <= 1e-8 * m0);
    }

    #[test]
    fn electric_field_basics() {
        let g = periodic(64, 2.0 * PI);
        let e = electric_field(&SpatialField::constant(g.clone(), 3.0));
        assert!(e.max_norm() == 0.0);

        let err = |n: usize| {
            let g = periodic(n, 2.0 * PI);
            let phi = SpatialField::from_fn(g.clone(), |p| p[0].sin());
            let e = electric_field(&phi);
            g.sample(|p| -p[0].cos())
                .iter()
                .zip(&e.components[0])
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
        };
        let r = err(32) / err(64);
        assert!((r - 16.0).abs() < 0.5, "ratio {r}");

        // Neumann: the wall-adjacent component vanishes under refinement
        let wall = |n: usize| {
            let g = interval(n, PI);
            let phi = SpatialField::from_fn(g, |p| p[0].cos());
            electric_field(&phi).components[0][0].abs()
        };
        assert!(wall(64) < 0.6 * wall(32));
        assert!(wall(256) < 0.02);
    }
}
