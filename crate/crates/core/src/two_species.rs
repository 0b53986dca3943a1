//! Kinetic ions and electrons coupled by the linear Poisson equation, with the
//! electron equation in the fast scaling `eps d_t f + v.grad f + grad phi.grad_v f
//! = eta Q(f)` and BGK collisions.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::diagnostics::{
    arnold_functional, entropy, relative_entropy, DiagnosticsRecord, StationaryReference,
};
use crate::error::{Error, Result};
use crate::fields::{electric_field, SpatialField};
use crate::kinetics::{advect_v, advect_x, bgk_relax, moments, Interpolation, PhaseDistribution};
use crate::linalg;
use crate::reduced_ions::ION_SIGN;

/// Electrons accelerate along `-E = grad phi`.
pub const ELECTRON_SIGN: f64 = -1.0;

/// Relative charge imbalance tolerated by the periodic/Neumann Poisson solve.
pub const CHARGE_TOL: f64 = 1e-8;

/// Collision scale `eta(eps) = coefficient * eps^exponent`. The fast-relaxation
/// scaling needs `eta / eps -> infinity` and `eta` bounded, i.e.
/// `0 <= exponent < 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EtaRule {
    pub coefficient: f64,
    pub exponent: f64,
}

impl EtaRule {
    pub const SQRT: EtaRule = EtaRule {
        coefficient: 1.0,
        exponent: 0.5,
    };

    pub fn eta(&self, epsilon: f64) -> f64 {
        self.coefficient * epsilon.powf(self.exponent)
    }

    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if !(self.coefficient > 0.0 && self.coefficient.is_finite()) {
            v.push(format!(
                "eta rule coefficient {} must be positive",
                self.coefficient
            ));
        }
        if !(self.exponent >= 0.0 && self.exponent < 1.0) {
            v.push(format!(
                "eta rule exponent {} violates the scaling assumption eta/eps -> infinity with eta bounded (need 0 <= p < 1)",
                self.exponent
            ));
        }
        v
    }
}

impl Default for EtaRule {
    fn default() -> Self {
        EtaRule::SQRT
    }
}

impl fmt::Display for EtaRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if *self == EtaRule::SQRT {
            write!(f, "sqrt")
        } else if self.exponent == 0.0 {
            write!(f, "const:{}", self.coefficient)
        } else {
            write!(f, "power:{}:{}", self.coefficient, self.exponent)
        }
    }
}

impl FromStr for EtaRule {
    type Err = String;

    /// `sqrt`, `const:C` or `power:C:P`.
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let parts: Vec<&str> = s.trim().split(':').collect();
        let num = |t: &str| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| format!("bad number '{t}' in eta rule '{s}'"))
        };
        match parts.as_slice() {
            ["sqrt"] => Ok(EtaRule::SQRT),
            ["const", c] => Ok(EtaRule {
                coefficient: num(c)?,
                exponent: 0.0,
            }),
            ["power", c, p] => Ok(EtaRule {
                coefficient: num(c)?,
                exponent: num(p)?,
            }),
            _ => Err(format!(
                "unknown eta rule '{s}' (expected sqrt, const:C or power:C:P)"
            )),
        }
    }
}

/// `-lambda^2 Lap phi = <f+> - <f->`, gauge fixed by zero mean.
pub fn solve_poisson_linear(
    f_plus: &PhaseDistribution,
    f_minus: &PhaseDistribution,
) -> Result<SpatialField> {
    if f_plus.values.len() != f_minus.values.len() {
        return Err(Error::GridMismatch("ion and electron grids differ".into()));
    }
    let np = moments(f_plus).density;
    let ne = moments(f_minus).density;
    let (ions, electrons) = (np.integral(), ne.integral());
    if (ions - electrons).abs() > CHARGE_TOL * ions.abs().max(electrons.abs()).max(1e-300) {
        return Err(Error::IncompatibleCharge { ions, electrons });
    }
    let grid = np.grid.clone();
    let rhs: Vec<f64> = np
        .values
        .iter()
        .zip(&ne.values)
        .map(|(a, b)| a - b)
        .collect();
    let lambda2 = f_plus.domain.lambda_d().powi(2);
    let u = linalg::solve_shifted(&grid, lambda2, &vec![0.0; rhs.len()], &rhs)?;
    Ok(SpatialField { grid, values: u })
}

#[derive(Debug, Clone, Serialize)]
pub struct TwoSpeciesParams {
    pub interpolation: Interpolation,
    /// Fraction of the electron transport stability limit used per substep.
    pub electron_cfl: f64,
    pub max_substeps: usize,
    /// Re-solve the potential inside every electron substep instead of
    /// freezing it over the ion step.
    pub resolve_per_substep: bool,
    pub freeze_ions: bool,
    pub mass_loss_limit: f64,
}

impl Default for TwoSpeciesParams {
    fn default() -> Self {
        TwoSpeciesParams {
            interpolation: Interpolation::default(),
            electron_cfl: 0.5,
            max_substeps: 100_000,
            resolve_per_substep: false,
            freeze_ions: false,
            mass_loss_limit: 1e-6,
        }
    }
}

/// Entropy bookkeeping across collision substeps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EntropyMonitor {
    pub collision_substeps: usize,
    /// Largest electron entropy change seen across a single collision substep.
    pub max_change: f64,
    /// Substeps whose change was positive.
    pub increases: usize,
    /// Accumulated collisional dissipation (sum of the changes).
    pub dissipated: f64,
}

impl Default for EntropyMonitor {
    fn default() -> Self {
        EntropyMonitor {
            collision_substeps: 0,
            max_change: f64::NEG_INFINITY,
            increases: 0,
            dissipated: 0.0,
        }
    }
}

impl EntropyMonitor {
    fn push(&mut self, change: f64) {
        self.collision_substeps += 1;
        self.max_change = self.max_change.max(change);
        if change > 0.0 {
            self.increases += 1;
        }
        self.dissipated += change;
    }
}

#[derive(Debug, Clone)]
pub struct TwoSpeciesState {
    pub t: f64,
    pub steps: usize,
    pub f_minus: PhaseDistribution,
    pub f_plus: PhaseDistribution,
    pub phi: SpatialField,
    pub epsilon: f64,
    pub eta: f64,
    /// Optional ion collision frequency.
    pub sigma: Option<f64>,
    pub m0: f64,
    pub cumulative_mass_loss: f64,
    pub max_speed_bound: f64,
    pub entropy_monitor: EntropyMonitor,
}

impl TwoSpeciesState {
    pub fn new(
        f_plus: PhaseDistribution,
        f_minus: PhaseDistribution,
        epsilon: f64,
        eta: f64,
        sigma: Option<f64>,
    ) -> Result<Self> {
        let mut bad = Vec::new();
        if !(epsilon > 0.0 && epsilon <= 1.0) {
            bad.push(format!("epsilon = {epsilon} must lie in (0, 1]"));
        }
        if !(eta > 0.0 && eta.is_finite()) {
            bad.push(format!("eta = {eta} must be positive"));
        }
        if let Some(s) = sigma.filter(|s| !(*s >= 0.0)) {
            bad.push(format!("ion collision frequency {s} must be nonnegative"));
        }
        if !bad.is_empty() {
            return Err(Error::Config(bad));
        }
        let phi = solve_poisson_linear(&f_plus, &f_minus)?;
        let m0 = f_plus.mass();
        Ok(TwoSpeciesState {
            t: 0.0,
            steps: 0,
            f_minus,
            f_plus,
            phi,
            epsilon,
            eta,
            sigma,
            m0,
            cumulative_mass_loss: 0.0,
            max_speed_bound: 0.0,
            entropy_monitor: EntropyMonitor::default(),
        })
    }

    pub fn field_energy(&self) -> f64 {
        0.5 * self.f_plus.domain.lambda_d().powi(2) * self.phi.gradient_energy()
    }

    pub fn total_energy(&self) -> f64 {
        self.f_minus.kinetic_energy() + self.f_plus.kinetic_energy() + self.field_energy()
    }

    /// Ion step `cfl * min(h_x / v_max, h_v / ||E||)`.
    pub fn stable_dt(&self, cfl: f64) -> f64 {
        transport_dt(&self.f_plus, &self.phi, cfl)
    }

    pub fn record(&self, reference: Option<&StationaryReference>) -> Result<DiagnosticsRecord> {
        let kinetic_ion = self.f_plus.kinetic_energy();
        let kinetic_electron = self.f_minus.kinetic_energy();
        let field_energy = self.field_energy();
        let (relative, arnold) = match reference {
            Some(r) => (
                Some(relative_entropy(&self.f_minus, &r.f)?),
                Some(arnold_functional(
                    &self.f_minus,
                    &self.phi,
                    &r.f,
                    &r.phi,
                    self.epsilon,
                    r.beta,
                )?),
            ),
            None => (None, None),
        };
        Ok(DiagnosticsRecord {
            t: self.t,
            mass_ion: self.f_plus.mass(),
            mass_electron: Some(self.f_minus.mass()),
            kinetic_ion,
            kinetic_electron,
            field_energy,
            total_energy: kinetic_ion + kinetic_electron + field_energy,
            beta: None,
            beta_invariant: None,
            entropy_ion: entropy(&self.f_plus),
            entropy_electron: Some(entropy(&self.f_minus)),
            relative_entropy: relative,
            arnold_functional: arnold,
            cumulative_mass_loss: self.cumulative_mass_loss,
            max_speed_bound: self.max_speed_bound,
        })
    }
}

fn transport_dt(f: &PhaseDistribution, phi: &SpatialField, cfl: f64) -> f64 {
    let dom = &f.domain;
    let hx = dom
        .space
        .spacing
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    let e = electric_field(phi).max_norm();
    let mut dt = hx / dom.velocity.v_max;
    if e > 0.0 {
        dt = dt.min(dom.velocity.spacing / e);
    }
    cfl * dt
}

/// Advances both species by `dt`: ions by Strang splitting around one field
/// solve, electrons by substeps of the rescaled equation (transport over
/// `delta / eps`, then exact BGK at rate `eta / eps` over `delta`).
pub fn two_species_step(
    params: &TwoSpeciesParams,
    state: &TwoSpeciesState,
    dt: f64,
) -> Result<TwoSpeciesState> {
    if !(dt > 0.0) {
        return Err(Error::InvalidInput(format!("dt = {dt} must be positive")));
    }
    let scheme = params.interpolation;
    let eps = state.epsilon;
    let mut next = state.clone();

    let ions_mid = if params.freeze_ions {
        state.f_plus.clone()
    } else {
        advect_x(&state.f_plus, 0.5 * dt, scheme)?
    };
    let phi_mid = solve_poisson_linear(&ions_mid, &state.f_minus)?;
    let e_mid = electric_field(&phi_mid);

    let tau_max = transport_dt(&state.f_minus, &phi_mid, params.electron_cfl);
    let needed = (dt / (eps * tau_max)).ceil().max(1.0);
    if needed > params.max_substeps as f64 {
        return Err(Error::TooManySubsteps {
            needed: needed.min(usize::MAX as f64) as usize,
            max: params.max_substeps,
        });
    }
    let n_sub = needed as usize;
    let delta = dt / n_sub as f64;
    let tau = delta / eps;
    let rate = state.eta / eps;
    let mut fe = state.f_minus.clone();
    let mut e_field = e_mid.clone();
    for _ in 0..n_sub {
        fe = advect_x(&fe, 0.5 * tau, scheme)?;
        if params.resolve_per_substep {
            e_field = electric_field(&solve_poisson_linear(&ions_mid, &fe)?);
        }
        let acc = advect_v(&fe, &e_field, ELECTRON_SIGN, tau, scheme)?;
        next.cumulative_mass_loss += acc.lost_mass;
        fe = advect_x(&acc.f, 0.5 * tau, scheme)?;
        let (relaxed, report) = bgk_relax(&fe, rate, delta)?;
        next.entropy_monitor.push(report.entropy_change);
        fe = relaxed;
        next.max_speed_bound += e_field.max_norm() * delta;
    }
    next.f_minus = fe;

    if !params.freeze_ions {
        let acc = advect_v(&ions_mid, &e_mid, ION_SIGN, dt, scheme)?;
        next.cumulative_mass_loss += acc.lost_mass;
        let mut fi = advect_x(&acc.f, 0.5 * dt, scheme)?;
        if let Some(sigma) = state.sigma.filter(|s| *s > 0.0) {
            fi = bgk_relax(&fi, sigma, dt)?.0;
        }
        next.f_plus = fi;
    }
    next.phi = solve_poisson_linear(&next.f_plus, &next.f_minus)?;
    next.t += dt;
    next.steps += 1;
    let limit = params.mass_loss_limit * state.m0;
    if next.cumulative_mass_loss > limit {
        return Err(Error::SupportLoss {
            lost: next.cumulative_mass_loss,
            limit,
        });
    }
    Ok(next)
}

/// `||<f-> - e^{beta phi}||_1 / m0` with `beta = m0 d / (2 K_e)` and `phi`
/// shifted so that `int e^{beta phi} = m0`.
pub fn mb_deviation(state: &TwoSpeciesState) -> f64 {
    let f = &state.f_minus;
    let density = moments(f).density;
    let m0 = density.integral();
    let kinetic = f.kinetic_energy();
    if !(kinetic > 0.0 && m0 > 0.0) {
        return f64::NAN;
    }
    let beta = m0 * f.domain.velocity_dim() as f64 / (2.0 * kinetic);
    let grid = &state.phi.grid;
    let top = state
        .phi
        .values
        .iter()
        .fold(f64::NEG_INFINITY, |m, p| m.max(beta * p));
    let weights: Vec<f64> = state
        .phi
        .values
        .iter()
        .map(|p| (beta * p - top).exp())
        .collect();
    let norm = grid.integrate(&weights);
    let diff: Vec<f64> = weights
        .iter()
        .zip(&density.values)
        .map(|(w, n)| (n - m0 * w / norm).abs())
        .collect();
    grid.integrate(&diff) / m0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TwoSpeciesControl {
    pub t_end: f64,
    /// Ion step; `None` re-evaluates `cfl * stable_dt` every step.
    pub dt: Option<f64>,
    pub cfl: f64,
    pub output_every: usize,
    pub max_steps: usize,
}

pub fn run_two_species(
    params: &TwoSpeciesParams,
    mut state: TwoSpeciesState,
    control: &TwoSpeciesControl,
    reference: Option<&StationaryReference>,
    mut observe: impl FnMut(&TwoSpeciesState) -> Result<()>,
) -> Result<(TwoSpeciesState, Vec<DiagnosticsRecord>)> {
    let every = control.output_every.max(1);
    let mut records = vec![state.record(reference)?];
    let tiny = 1e-12 * control.t_end.abs().max(1.0);
    while state.t < control.t_end - tiny {
        if state.steps >= control.max_steps {
            return Err(
                Error::InvalidInput(format!("step limit {} reached", control.max_steps))
                    .at_time(state.t),
            );
        }
        let dt = control
            .dt
            .unwrap_or_else(|| state.stable_dt(control.cfl))
            .min(control.t_end - state.t);
        state = two_species_step(params, &state, dt).map_err(|e| e.at_time(state.t))?;
        observe(&state)?;
        let last = state.t >= control.t_end - tiny;
        if state.steps.is_multiple_of(every) || last {
            records.push(state.record(reference)?);
        }
    }
    Ok((state, records))
}

#[derive(Debug, Clone, Serialize)]
pub struct LimitRow {
    pub epsilon: f64,
    pub eta: f64,
    /// `mb_deviation` at the horizon; `None` if the run failed.
    pub deviation: Option<f64>,
    pub final_entropy: Option<f64>,
    /// `(t, electron entropy)` at every recorded step.
    pub entropy_series: Vec<(f64, f64)>,
    pub entropy_monitor: EntropyMonitor,
    pub error: Option<String>,
    #[serde(skip)]
    pub records: Vec<DiagnosticsRecord>,
    #[serde(skip)]
    pub final_state: Option<TwoSpeciesState>,
}

/// Runs the same initial data for every `eps` (in parallel) to `control.t_end`.
pub fn limit_experiment(
    params: &TwoSpeciesParams,
    f_plus: &PhaseDistribution,
    f_minus: &PhaseDistribution,
    epsilons: &[f64],
    eta_rule: EtaRule,
    sigma: Option<f64>,
    control: &TwoSpeciesControl,
) -> Result<Vec<LimitRow>> {
    let bad = eta_rule.violations();
    if !bad.is_empty() {
        return Err(Error::Config(bad));
    }
    if let Some(e) = epsilons.iter().find(|e| !(**e > 0.0 && **e < 1.0)) {
        return Err(Error::Config(vec![format!(
            "epsilon {e} must lie in (0, 1)"
        )]));
    }
    let one = |eps: f64| -> LimitRow {
        let eta = eta_rule.eta(eps);
        let mut row = LimitRow {
            epsilon: eps,
            eta,
            deviation: None,
            final_entropy: None,
            entropy_series: Vec::new(),
            entropy_monitor: EntropyMonitor::default(),
            error: None,
            records: Vec::new(),
            final_state: None,
        };
        let mut last = None;
        let outcome = TwoSpeciesState::new(f_plus.clone(), f_minus.clone(), eps, eta, sigma)
            .and_then(|s| {
                run_two_species(params, s, control, None, |st| {
                    last = Some(st.entropy_monitor);
                    Ok(())
                })
            });
        match outcome {
            Ok((state, records)) => {
                row.deviation = Some(mb_deviation(&state));
                row.final_entropy = Some(entropy(&state.f_minus));
                row.entropy_series = records
                    .iter()
                    .filter_map(|r| r.entropy_electron.map(|h| (r.t, h)))
                    .collect();
                row.entropy_monitor = state.entropy_monitor;
                row.records = records;
                row.final_state = Some(state);
            }
            Err(e) => {
                row.error = Some(e.to_string());
                if let Some(m) = last {
                    row.entropy_monitor = m;
                }
            }
        }
        row
    };
    let rows = std::thread::scope(|scope| {
        let handles: Vec<_> = epsilons
            .iter()
            .map(|&eps| scope.spawn(move || one(eps)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("sweep worker panicked"))
            .collect::<Vec<_>>()
    });
    Ok(rows)
}
