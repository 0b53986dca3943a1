//! Kinetic ions with Maxwell-Boltzmann electrons whose inverse temperature is
//! fixed at every instant by conservation of the total energy.

use serde::Serialize;

use crate::diagnostics::{entropy, DiagnosticsRecord};
use crate::error::{Error, Result};
use crate::fields::{electric_field, FieldTolerances, PoissonBoltzmann, SpatialField};
use crate::kinetics::{advect_v, advect_x, moments, Interpolation, PhaseDistribution};

/// Ions accelerate along `E = -grad phi`.
pub const ION_SIGN: f64 = 1.0;

#[derive(Debug, Clone, Serialize)]
pub struct ReducedParams {
    /// Total energy budget.
    pub e0: f64,
    /// Initial ion kinetic energy must not exceed `compatibility * e0`.
    pub compatibility: f64,
    pub interpolation: Interpolation,
    /// Skip ion transport (fixed ion background).
    pub freeze_ions: bool,
    /// Abort once the mass lost through `|v| = v_max` exceeds this times `m0`.
    pub mass_loss_limit: f64,
    /// Abort once more than this fraction of the mass sits in `|v| > 0.9 v_max`.
    pub tail_limit: f64,
    pub tol: FieldTolerances,
}

impl ReducedParams {
    pub fn new(e0: f64) -> Self {
        ReducedParams {
            e0,
            compatibility: 0.9,
            interpolation: Interpolation::default(),
            freeze_ions: false,
            mass_loss_limit: 1e-6,
            tail_limit: 1e-3,
            tol: FieldTolerances::default(),
        }
    }

    fn solver(&self, f: &PhaseDistribution) -> PoissonBoltzmann {
        PoissonBoltzmann::new(f.domain.lambda_d(), f.domain.velocity_dim())
            .with_tolerances(self.tol)
    }
}

#[derive(Debug, Clone)]
pub struct SimState {
    pub t: f64,
    pub steps: usize,
    pub f_plus: PhaseDistribution,
    pub beta: f64,
    pub phi: SpatialField,
    pub m0: f64,
    pub e0: f64,
    /// Value of the beta-invariant at `t = 0`.
    pub c0: f64,
    pub cumulative_mass_loss: f64,
    pub max_speed_bound: f64,
}

/// `m0 d log beta + 2 int beta phi e^{beta phi}`: constant in time along exact
/// solutions (differentiate and use the energy balance and ion continuity).
pub fn invariant_of(m0: f64, velocity_dim: usize, beta: f64, phi: &SpatialField) -> f64 {
    let s: Vec<f64> = phi
        .values
        .iter()
        .map(|p| {
            let x = beta * p;
            x * x.exp()
        })
        .collect();
    m0 * velocity_dim as f64 * beta.ln() + 2.0 * phi.grid.integrate(&s)
}

pub fn beta_invariant(state: &SimState) -> f64 {
    invariant_of(
        state.m0,
        state.f_plus.domain.velocity_dim(),
        state.beta,
        &state.phi,
    )
}

impl SimState {
    pub fn kinetic_energy(&self) -> f64 {
        self.f_plus.kinetic_energy()
    }

    pub fn field_energy(&self) -> f64 {
        0.5 * self.f_plus.domain.lambda_d().powi(2) * self.phi.gradient_energy()
    }

    /// `m d / (2 beta)` for the current ion mass `m`.
    pub fn electron_energy(&self) -> f64 {
        self.f_plus.mass() * self.f_plus.domain.velocity_dim() as f64 / (2.0 * self.beta)
    }

    pub fn total_energy(&self) -> f64 {
        self.electron_energy() + self.field_energy() + self.kinetic_energy()
    }

    /// `[m0 d / (2 E0), exp((C0 + 2|Omega|/e) / (m0 d))]`.
    pub fn beta_bounds(&self) -> (f64, f64) {
        let d = self.f_plus.domain.velocity_dim() as f64;
        let omega = self.f_plus.domain.space.total_measure();
        let lower = self.m0 * d / (2.0 * self.e0);
        let upper = ((self.c0 + 2.0 * omega / std::f64::consts::E) / (self.m0 * d)).exp();
        (lower, upper)
    }

    /// Step size `cfl * min(h_x / v_max, h_v / ||E||)`.
    pub fn stable_dt(&self, cfl: f64) -> f64 {
        let dom = &self.f_plus.domain;
        let hx = dom
            .space
            .spacing
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        let e = electric_field(&self.phi).max_norm();
        let mut dt = hx / dom.velocity.v_max;
        if e > 0.0 {
            dt = dt.min(dom.velocity.spacing / e);
        }
        cfl * dt
    }

    pub fn record(&self) -> DiagnosticsRecord {
        let kinetic_ion = self.kinetic_energy();
        let kinetic_electron = self.electron_energy();
        let field_energy = self.field_energy();
        DiagnosticsRecord {
            t: self.t,
            mass_ion: self.f_plus.mass(),
            mass_electron: None,
            kinetic_ion,
            kinetic_electron,
            field_energy,
            total_energy: kinetic_ion + kinetic_electron + field_energy,
            beta: Some(self.beta),
            beta_invariant: Some(beta_invariant(self)),
            entropy_ion: entropy(&self.f_plus),
            entropy_electron: None,
            relative_entropy: None,
            arnold_functional: None,
            cumulative_mass_loss: self.cumulative_mass_loss,
            max_speed_bound: self.max_speed_bound,
        }
    }
}

fn solve_fields(
    params: &ReducedParams,
    f: &PhaseDistribution,
    warm: Option<(f64, &SpatialField)>,
) -> Result<(f64, SpatialField)> {
    let kinetic = f.kinetic_energy();
    let e1 = params.e0 - kinetic;
    if !(e1 > 0.0) {
        return Err(Error::EnergyExhausted {
            kinetic,
            e0: params.e0,
        });
    }
    let density = moments(f).density;
    let mass = density.integral();
    let sol = params.solver(f).find_beta_from(&density, mass, e1, warm)?;
    Ok((sol.beta, sol.phi))
}

pub fn init(params: &ReducedParams, f0: PhaseDistribution) -> Result<SimState> {
    if !(params.compatibility > 0.0 && params.compatibility < 1.0) {
        return Err(Error::InvalidInput(format!(
            "compatibility factor {} must lie in (0, 1)",
            params.compatibility
        )));
    }
    let m0 = f0.mass();
    if !(m0 > 0.0) {
        return Err(Error::ZeroMass(m0));
    }
    let kinetic = f0.kinetic_energy();
    let bound = params.compatibility * params.e0;
    if kinetic > bound {
        return Err(Error::Compatibility { kinetic, bound });
    }
    let (beta, phi) = solve_fields(params, &f0, None)?;
    let c0 = invariant_of(m0, f0.domain.velocity_dim(), beta, &phi);
    Ok(SimState {
        t: 0.0,
        steps: 0,
        f_plus: f0,
        beta,
        phi,
        m0,
        e0: params.e0,
        c0,
        cumulative_mass_loss: 0.0,
        max_speed_bound: 0.0,
    })
}

/// One Strang step: half streaming, field solve, full acceleration, half
/// streaming; the fields are then re-solved so the state is consistent.
pub fn step(params: &ReducedParams, state: &SimState, dt: f64) -> Result<SimState> {
    if !(dt > 0.0) {
        return Err(Error::InvalidInput(format!("dt = {dt} must be positive")));
    }
    let scheme = params.interpolation;
    let mut next = state.clone();
    let warm = Some((state.beta, &state.phi));
    let (beta, phi, e_norm) = if params.freeze_ions {
        let (beta, phi) = solve_fields(params, &state.f_plus, warm)?;
        let e = electric_field(&phi).max_norm();
        (beta, phi, e)
    } else {
        let half = advect_x(&state.f_plus, 0.5 * dt, scheme)?;
        let (beta_mid, phi_mid) = solve_fields(params, &half, warm)?;
        let e = electric_field(&phi_mid);
        let accel = advect_v(&half, &e, ION_SIGN, dt, scheme)?;
        next.cumulative_mass_loss += accel.lost_mass;
        next.f_plus = advect_x(&accel.f, 0.5 * dt, scheme)?;
        let (beta, phi) = solve_fields(params, &next.f_plus, Some((beta_mid, &phi_mid)))?;
        (beta, phi, e.max_norm())
    };
    next.beta = beta;
    next.phi = phi;
    next.t += dt;
    next.steps += 1;
    next.max_speed_bound += e_norm * dt;
    let limit = params.mass_loss_limit * state.m0;
    if next.cumulative_mass_loss > limit {
        return Err(Error::SupportLoss {
            lost: next.cumulative_mass_loss,
            limit,
        });
    }
    let tail = next.f_plus.tail_fraction(0.9);
    if tail > params.tail_limit {
        return Err(Error::SupportLoss {
            lost: tail * next.f_plus.mass(),
            limit: params.tail_limit * next.f_plus.mass(),
        });
    }
    Ok(next)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum TimeStep {
    Fixed(f64),
    /// Re-evaluated every step via [`SimState::stable_dt`].
    Cfl(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RunControl {
    pub t_end: f64,
    pub step: TimeStep,
    /// Diagnostics cadence in steps; the final state is always recorded.
    pub output_every: usize,
    pub max_steps: usize,
}

/// Advances `state` to `control.t_end` (the last step is shortened to land on
/// it), calling `observe` after every step.
pub fn run(
    params: &ReducedParams,
    mut state: SimState,
    control: &RunControl,
    mut observe: impl FnMut(&SimState) -> Result<()>,
) -> Result<(SimState, Vec<DiagnosticsRecord>)> {
    let every = control.output_every.max(1);
    let mut records = vec![state.record()];
    let tiny = 1e-12 * control.t_end.abs().max(1.0);
    while state.t < control.t_end - tiny {
        if state.steps >= control.max_steps {
            return Err(Error::InvalidInput(format!(
                "step limit {} reached at t = {}",
                control.max_steps, state.t
            ))
            .at_time(state.t));
        }
        let dt = match control.step {
            TimeStep::Fixed(dt) => dt,
            TimeStep::Cfl(c) => state.stable_dt(c),
        };
        let dt = dt.min(control.t_end - state.t);
        state = step(params, &state, dt).map_err(|e| e.at_time(state.t))?;
        observe(&state)?;
        let last = state.t >= control.t_end - tiny;
        if state.steps.is_multiple_of(every) || last {
            records.push(state.record());
        }
    }
    Ok((state, records))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{Domain, DomainSpec};
    use crate::kinetics::Species;
    use std::f64::consts::PI;

    #[test]
    fn uniform_closed_form() {
        // |Omega| = 1, n = 2, ion kinetic energy k, E0 = 1 + k
        let dom = Domain::new(DomainSpec::periodic_1d(1.0, 16, 6.0, 64)).unwrap();
        let n = SpatialField::constant(dom.space.clone(), 2.0);
        let f0 = PhaseDistribution::with_density(dom, Species::Ion, &n, &[0.0], 0.25).unwrap();
        let k = f0.kinetic_energy();
        let state = init(&ReducedParams::new(1.0 + k), f0).unwrap();
        assert!((state.beta - 1.0).abs() < 1e-10);
        assert!(state
            .phi
            .values
            .iter()
            .all(|p| (p - 2f64.ln()).abs() < 1e-10));
        assert!((state.c0 - 4.0 * 2f64.ln()).abs() < 1e-9);
        assert!((state.total_energy() - (1.0 + k)).abs() < 1e-12);
    }

    #[test]
    fn compatibility_is_enforced() {
        let dom = Domain::new(DomainSpec::periodic_1d(1.0, 8, 6.0, 32)).unwrap();
        let n = SpatialField::constant(dom.space.clone(), 1.0);
        let f0 = PhaseDistribution::with_density(dom, Species::Ion, &n, &[0.0], 1.0).unwrap();
        let k = f0.kinetic_energy();
        let err = init(&ReducedParams::new(k), f0.clone()).unwrap_err();
        assert!(matches!(err, Error::Compatibility { .. }));
        assert!(init(&ReducedParams::new(1.2 * k), f0).is_ok());
    }

    #[test]
    fn uniform_state_is_a_fixed_point() {
        let dom = Domain::new(DomainSpec::periodic_1d(2.0 * PI, 16, 6.0, 32)).unwrap();
        let n = SpatialField::constant(dom.space.clone(), 1.0);
        let f0 = PhaseDistribution::with_density(dom, Species::Ion, &n, &[0.0], 1.0).unwrap();
        let params = ReducedParams::new(3.0 * f0.kinetic_energy());
        let mut s = init(&params, f0.clone()).unwrap();
        for _ in 0..100 {
            s = step(&params, &s, 0.05).unwrap();
        }
        assert!(s.f_plus.max_abs_diff(&f0) < 1e-10);
    }

    #[test]
    fn perturbed_run_keeps_mass_and_energy() {
        let dom = Domain::new(DomainSpec::periodic_1d(2.0 * PI, 32, 6.0, 48)).unwrap();
        let n = SpatialField::from_fn(dom.space.clone(), |x| 1.0 + 0.1 * x[0].cos());
        let f0 = PhaseDistribution::with_density(dom, Species::Ion, &n, &[0.0], 0.5).unwrap();
        let params = ReducedParams::new(3.0);
        let s = init(&params, f0).unwrap();
        let control = RunControl {
            t_end: 1.0,
            step: TimeStep::Cfl(0.5),
            output_every: 5,
            max_steps: 10_000,
        };
        let (end, rec) = run(&params, s.clone(), &control, |_| Ok(())).unwrap();
        assert!((end.t - 1.0).abs() < 1e-12);
        for r in &rec {
            assert!((r.mass_ion - s.m0).abs() < 1e-12 * s.m0);
            assert!((r.total_energy - 3.0).abs() < 1e-9);
            let (lo, hi) = s.beta_bounds();
            let b = r.beta.unwrap();
            assert!(b >= lo && b <= hi);
        }
        assert!((beta_invariant(&end) - s.c0).abs() < 1e-3 * s.c0.abs());
    }

    #[test]
    fn zero_length_run_records_initial_state() {
        let dom = Domain::new(DomainSpec::periodic_1d(1.0, 8, 6.0, 32)).unwrap();
        let n = SpatialField::constant(dom.space.clone(), 1.0);
        let f0 = PhaseDistribution::with_density(dom, Species::Ion, &n, &[0.0], 1.0).unwrap();
        let params = ReducedParams::new(2.0);
        let s = init(&params, f0).unwrap();
        let control = RunControl {
            t_end: 0.0,
            step: TimeStep::Fixed(0.1),
            output_every: 1,
            max_steps: 10,
        };
        let (_, rec) = run(&params, s, &control, |_| Ok(())).unwrap();
        assert_eq!(rec.len(), 1);
    }
}
