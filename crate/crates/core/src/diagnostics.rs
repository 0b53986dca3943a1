//! Conserved and monotone quantities logged along every run.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fields::{BetaSolution, FieldTolerances, PoissonBoltzmann, SpatialField};
use crate::kinetics::{maxwellian, PhaseDistribution, Species};

/// Values below this count as vacuum in entropy integrands.
pub const ENTROPY_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub mass_ion: f64,
    pub mass_electron: Option<f64>,
    pub kinetic_ion: f64,
    /// Electron kinetic energy: `m0 d / (2 beta)` in the reduced model.
    pub kinetic_electron: f64,
    pub field_energy: f64,
    pub total_energy: f64,
    pub beta: Option<f64>,
    pub beta_invariant: Option<f64>,
    pub entropy_ion: f64,
    pub entropy_electron: Option<f64>,
    pub relative_entropy: Option<f64>,
    pub arnold_functional: Option<f64>,
    pub cumulative_mass_loss: f64,
    /// `int_0^t ||E||_inf`.
    pub max_speed_bound: f64,
}

impl DiagnosticsRecord {
    pub const COLUMNS: [&'static str; 15] = [
        "t",
        "mass_ion",
        "mass_electron",
        "kinetic_ion",
        "kinetic_electron",
        "field_energy",
        "total_energy",
        "beta",
        "beta_invariant",
        "entropy_ion",
        "entropy_electron",
        "relative_entropy",
        "arnold_functional",
        "cumulative_mass_loss",
        "max_speed_bound",
    ];

    pub fn values(&self) -> [Option<f64>; 15] {
        [
            Some(self.t),
            Some(self.mass_ion),
            self.mass_electron,
            Some(self.kinetic_ion),
            Some(self.kinetic_electron),
            Some(self.field_energy),
            Some(self.total_energy),
            self.beta,
            self.beta_invariant,
            Some(self.entropy_ion),
            self.entropy_electron,
            self.relative_entropy,
            self.arnold_functional,
            Some(self.cumulative_mass_loss),
            Some(self.max_speed_bound),
        ]
    }
}

/// `int <f log f>` with `0 log 0 = 0`.
pub fn entropy(f: &PhaseDistribution) -> f64 {
    let s: f64 = f
        .values
        .iter()
        .filter(|v| **v >= ENTROPY_FLOOR)
        .map(|v| v * v.ln())
        .sum();
    s * f.domain.phase_cell_measure()
}

/// `r log r - r + 1`, accurate near `r = 1`.
fn relative_entropy_density(r: f64) -> f64 {
    let x = r - 1.0;
    if x.abs() < 1e-2 {
        // sum_{k>=2} (-x)^k / (k (k-1))
        let mut term = x * x;
        let mut sum = 0.0;
        for k in 2..12 {
            sum += term / (k * (k - 1)) as f64;
            term *= -x;
        }
        sum
    } else if r < ENTROPY_FLOOR {
        1.0
    } else {
        r * r.ln() - x
    }
}

/// `H(f|F) = int int [f log(f/F) - f + F]`.
pub fn relative_entropy(f: &PhaseDistribution, reference: &PhaseDistribution) -> Result<f64> {
    if f.values.len() != reference.values.len() {
        return Err(Error::GridMismatch("relative entropy operands".into()));
    }
    let mut sum = 0.0;
    for (a, b) in f.values.iter().zip(&reference.values) {
        if !(*b > 0.0) {
            return Err(Error::InvalidInput(
                "reference distribution must be positive on the grid".into(),
            ));
        }
        sum += b * relative_entropy_density(a / b);
    }
    Ok(sum.max(0.0) * f.domain.phase_cell_measure())
}

/// `epsilon [H(f|F) + (beta lambda^2 / 2) int |grad(phi - Phi)|^2]`.
///
/// Both terms carry `epsilon` because the electron continuity equation reads
/// `eps d_t n + div j = 0`; with this weighting the time derivative is the
/// collisional entropy dissipation, which is never positive.
pub fn arnold_functional(
    f: &PhaseDistribution,
    phi: &SpatialField,
    reference: &PhaseDistribution,
    reference_phi: &SpatialField,
    epsilon: f64,
    beta: f64,
) -> Result<f64> {
    phi.check_grid(&reference_phi.grid)?;
    let diff = SpatialField {
        grid: phi.grid.clone(),
        values: phi
            .values
            .iter()
            .zip(&reference_phi.values)
            .map(|(a, b)| a - b)
            .collect(),
    };
    let lambda2 = f.domain.lambda_d().powi(2);
    Ok(epsilon * (relative_entropy(f, reference)? + 0.5 * beta * lambda2 * diff.gradient_energy()))
}

/// Stationary electron state `(F, Phi, beta)` for ion density `n_i`.
#[derive(Debug, Clone)]
pub struct StationaryReference {
    pub f: PhaseDistribution,
    pub phi: SpatialField,
    pub beta: f64,
    pub solution: BetaSolution,
    /// `max |-lambda^2 Lap Phi + <F> - n_i|`, field residual plus velocity cutoff.
    pub residual: f64,
}

pub fn stationary_reference(
    domain: std::sync::Arc<crate::domain::Domain>,
    n_i: &SpatialField,
    m0: f64,
    e1: f64,
    tol: FieldTolerances,
) -> Result<StationaryReference> {
    n_i.check_grid(&domain.space)?;
    let pb = PoissonBoltzmann::new(domain.lambda_d(), domain.velocity_dim()).with_tolerances(tol);
    let solution = pb.find_beta(n_i, m0, e1)?;
    let f = maxwellian(
        solution.beta,
        &solution.phi,
        domain.clone(),
        Species::Electron,
    )?;
    let density = crate::kinetics::moments(&f).density;
    let lap = crate::linalg::laplacian(&domain.space, &solution.phi.values);
    let lambda2 = domain.lambda_d().powi(2);
    let residual = lap
        .iter()
        .zip(&density.values)
        .zip(&n_i.values)
        .fold(0.0f64, |m, ((l, n), ni)| {
            m.max((-lambda2 * l + n - ni).abs())
        });
    Ok(StationaryReference {
        f,
        phi: solution.phi.clone(),
        beta: solution.beta,
        solution,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{Domain, DomainSpec};
    use std::f64::consts::PI;

    #[test]
    fn entropy_closed_forms() {
        // phase domain [0,1) x [-0.5, 0.5) has unit measure
        let dom = Domain::new(DomainSpec::periodic_1d(1.0, 8, 0.5, 8)).unwrap();
        let one = PhaseDistribution::new(dom.clone(), Species::Ion, vec![1.0; 64]).unwrap();
        assert!(entropy(&one).abs() < 1e-15);
        let c = 3.0;
        let f = PhaseDistribution::new(dom.clone(), Species::Ion, vec![c; 64]).unwrap();
        assert!((entropy(&f) - c * c.ln()).abs() < 1e-14);
        let zero = PhaseDistribution::zeros(dom, Species::Ion);
        assert_eq!(entropy(&zero), 0.0);
    }

    #[test]
    fn relative_entropy_closed_forms() {
        let dom = Domain::new(DomainSpec::periodic_1d(2.0 * PI, 16, 6.0, 32)).unwrap();
        let phi = SpatialField::from_fn(dom.space.clone(), |x| 0.1 * x[0].cos());
        let big_f = maxwellian(1.0, &phi, dom.clone(), Species::Electron).unwrap();
        assert_eq!(relative_entropy(&big_f, &big_f).unwrap(), 0.0);
        let mut twice = big_f.clone();
        twice.values.iter_mut().for_each(|v| *v *= 2.0);
        let expect = (2.0 * 2f64.ln() - 1.0) * big_f.mass();
        assert!((relative_entropy(&twice, &big_f).unwrap() - expect).abs() < 1e-12 * expect);
        let mut near = big_f.clone();
        near.values[100] *= 1.0 + 1e-9;
        let h = relative_entropy(&near, &big_f).unwrap();
        let expect = 0.5 * 1e-18 * big_f.values[100] * dom.phase_cell_measure();
        assert!((h - expect).abs() < 1e-6 * expect);
    }

    #[test]
    fn series_matches_closed_form() {
        for r in [0.985, 0.995, 1.0, 1.004, 1.0099] {
            let direct = r * f64::ln(r) - r + 1.0;
            assert!((relative_entropy_density(r) - direct).abs() < 1e-15);
        }
        assert_eq!(relative_entropy_density(0.0), 1.0);
    }

    #[test]
    fn arnold_functional_vanishes_at_reference() {
        let dom = Domain::new(DomainSpec::periodic_1d(2.0 * PI, 32, 8.0, 64)).unwrap();
        let n_i = SpatialField::from_fn(dom.space.clone(), |x| 1.0 + 0.3 * x[0].cos());
        let m0 = n_i.integral();
        let r =
            stationary_reference(dom.clone(), &n_i, m0, 5.0, FieldTolerances::default()).unwrap();
        assert!(r.residual < 1e-8);
        let a = arnold_functional(&r.f, &r.phi, &r.f, &r.phi, 0.1, r.beta).unwrap();
        assert_eq!(a, 0.0);
        let shifted = r.phi.map(|p| p + 0.01 * p * p);
        assert!(arnold_functional(&r.f, &shifted, &r.f, &r.phi, 0.1, r.beta).unwrap() > 0.0);
    }
}
