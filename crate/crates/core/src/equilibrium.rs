//! Stationary Maxwell-Boltzmann electrons over a given ion density.

use std::sync::Arc;

use serde::Serialize;

use crate::domain::Domain;
use crate::error::Result;
use crate::fields::{FieldTolerances, PoissonBoltzmann, SpatialField};
use crate::kinetics::{maxwellian, moments, PhaseDistribution, Species};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MaxwellBoltzmannReport {
    /// `max |f - (beta/2pi)^{d/2} e^{-beta(|v|^2/2 - phi)}|`.
    pub pointwise: f64,
    /// `max |<f> - e^{beta phi}|`.
    pub density: f64,
    /// `|int <|v|^2/2 f> - m0 d / (2 beta)|` with `m0 = int <f>`.
    pub kinetic_energy: f64,
}

pub fn verify_maxwell_boltzmann(
    f: &PhaseDistribution,
    phi: &SpatialField,
    beta: f64,
) -> Result<MaxwellBoltzmannReport> {
    let exact = maxwellian(beta, phi, f.domain.clone(), f.species)?;
    let density = moments(f).density;
    let dens_err = density
        .values
        .iter()
        .zip(&phi.values)
        .fold(0.0f64, |m, (n, p)| m.max((n - (beta * p).exp()).abs()));
    let m0 = density.integral();
    let d = f.domain.velocity_dim() as f64;
    Ok(MaxwellBoltzmannReport {
        pointwise: f.max_abs_diff(&exact),
        density: dens_err,
        kinetic_energy: (f.kinetic_energy() - m0 * d / (2.0 * beta)).abs(),
    })
}

#[derive(Debug, Clone)]
pub struct Equilibrium {
    pub f: PhaseDistribution,
    pub phi: SpatialField,
    pub beta: f64,
    pub pde_residual: f64,
    pub report: MaxwellBoltzmannReport,
}

/// Electron equilibrium `f = M(beta, phi)` over `n_i` at energy `e1`.
pub fn self_consistent_equilibrium(
    domain: Arc<Domain>,
    n_i: &SpatialField,
    m0: f64,
    e1: f64,
    tol: FieldTolerances,
) -> Result<Equilibrium> {
    n_i.check_grid(&domain.space)?;
    let pb = PoissonBoltzmann::new(domain.lambda_d(), domain.velocity_dim()).with_tolerances(tol);
    let sol = pb.find_beta(n_i, m0, e1)?;
    let f = maxwellian(sol.beta, &sol.phi, domain, Species::Electron)?;
    let report = verify_maxwell_boltzmann(&f, &sol.phi, sol.beta)?;
    Ok(Equilibrium {
        f,
        beta: sol.beta,
        pde_residual: sol.pde_residual,
        phi: sol.phi,
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::DomainSpec;
    use std::f64::consts::PI;

    #[test]
    fn round_trip_and_point_perturbation() {
        let dom = Domain::new(DomainSpec::periodic_1d(2.0 * PI, 32, 10.0, 128)).unwrap();
        let n_i = SpatialField::from_fn(dom.space.clone(), |x| 1.0 + 0.3 * x[0].cos());
        let m0 = n_i.integral();
        let eq =
            self_consistent_equilibrium(dom.clone(), &n_i, m0, 4.0, FieldTolerances::default())
                .unwrap();
        assert!(eq.pde_residual <= 1e-10);
        assert_eq!(eq.report.pointwise, 0.0);
        assert!(eq.report.density < 1e-10 && eq.report.kinetic_energy < 1e-9);

        let mut g = eq.f.clone();
        g.values[77] += 1e-3;
        let r = verify_maxwell_boltzmann(&g, &eq.phi, eq.beta).unwrap();
        assert!((r.pointwise - 1e-3).abs() < 1e-15);
    }

    #[test]
    fn uniform_density_gives_closed_form() {
        let dom = Domain::new(DomainSpec::periodic_1d(1.0, 16, 8.0, 64)).unwrap();
        let n_i = SpatialField::constant(dom.space.clone(), 2.0);
        let eq =
            self_consistent_equilibrium(dom, &n_i, 2.0, 1.0, FieldTolerances::default()).unwrap();
        assert!((eq.beta - 1.0).abs() < 1e-10);
        assert!(eq.phi.values.iter().all(|p| (p - 2f64.ln()).abs() < 1e-10));
    }
}
