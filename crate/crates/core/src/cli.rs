//! Batch driver: turns a [`RunConfig`] into files on disk.
//!
//! Every command writes into the output directory:
//! `config.echo` (canonical config), `summary.json`, and depending on the
//! model `diagnostics.csv`, `phi.csv` and binary snapshots. A sweep writes one
//! `eps_<value>/` subdirectory per entry plus `sweep.csv`.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use serde_json::{json, Value};

use crate::config::{fmt_f64, Model, Profile, RunConfig, SpeciesInit};
use crate::diagnostics::{stationary_reference, DiagnosticsRecord, StationaryReference};
use crate::domain::Domain;
use crate::equilibrium::self_consistent_equilibrium;
use crate::error::{Error, Result};
use crate::fields::{PoissonBoltzmann, SpatialField};
use crate::io;
use crate::kinetics::{moments, PhaseDistribution, Species};
use crate::reduced_ions::{self, beta_invariant, ReducedParams, RunControl, SimState, TimeStep};
use crate::two_species::{
    limit_experiment, mb_deviation, run_two_species, TwoSpeciesControl, TwoSpeciesParams,
    TwoSpeciesState,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    /// Whatever `run.model` names.
    Run,
    SolvePb,
    LimitSweep,
    Equilibrium,
}

impl Command {
    fn expected(self) -> Option<Model> {
        match self {
            Command::Run => None,
            Command::SolvePb => Some(Model::SolvePb),
            Command::LimitSweep => Some(Model::LimitSweep),
            Command::Equilibrium => Some(Model::Equilibrium),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Invocation {
    pub command: Command,
    pub config: PathBuf,
    /// Overrides `output.dir`.
    pub out: Option<PathBuf>,
    pub verbose: bool,
    pub dry_run: bool,
}

#[derive(Debug)]
pub struct Outcome {
    pub config: RunConfig,
    /// `None` for a dry run.
    pub out_dir: Option<PathBuf>,
    pub summary: Value,
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path)?;
    RunConfig::parse(&text)
}

pub fn execute(inv: &Invocation) -> Result<Outcome> {
    let config = load_config(&inv.config)?;
    if let Some(m) = inv.command.expected() {
        if m != config.model {
            return Err(Error::Config(vec![format!(
                "this subcommand runs model {m}, but run.model = {}",
                config.model
            )]));
        }
    }
    if inv.dry_run {
        return Ok(Outcome {
            summary: json!({ "model": config.model, "valid": true }),
            config,
            out_dir: None,
        });
    }
    let base = inv
        .config
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_default();
    let out_dir = inv
        .out
        .clone()
        .unwrap_or_else(|| base.join(&config.output.dir));
    fs::create_dir_all(&out_dir)?;
    fs::write(out_dir.join("config.echo"), config.dump())?;
    let ctx = Context {
        cfg: &config,
        base,
        out: out_dir.clone(),
        verbose: inv.verbose,
    };
    let start = Instant::now();
    let mut summary = match config.model {
        Model::ReducedIons => ctx.reduced_ions()?,
        Model::TwoSpecies | Model::Arnold => ctx.two_species()?,
        Model::LimitSweep => ctx.limit_sweep()?,
        Model::Equilibrium => ctx.equilibrium()?,
        Model::SolvePb => ctx.solve_pb()?,
    };
    summary["model"] = json!(config.model);
    summary["wall_seconds"] = json!(start.elapsed().as_secs_f64());
    fs::write(
        out_dir.join("summary.json"),
        serde_json::to_string_pretty(&summary)? + "\n",
    )?;
    Ok(Outcome {
        config,
        out_dir: Some(out_dir),
        summary,
    })
}

/// Largest `|x_k - x_0|` over a column.
fn drift(
    records: &[DiagnosticsRecord],
    col: impl Fn(&DiagnosticsRecord) -> Option<f64>,
) -> Option<f64> {
    let x0 = col(records.first()?)?;
    records
        .iter()
        .filter_map(&col)
        .map(|x| (x - x0).abs())
        .reduce(f64::max)
}

/// `1 + a cos(k x_0)` style density, rescaled to `init.mass` when given.
pub fn analytic_density(grid: Arc<crate::domain::SpatialGrid>, init: &SpeciesInit) -> SpatialField {
    let (a, k) = (init.amplitude, init.wavenumber);
    let n = match init.profile {
        Profile::Cosine => SpatialField::from_fn(grid, |x| 1.0 + a * (k * x[0]).cos()),
        Profile::Sine => SpatialField::from_fn(grid, |x| 1.0 + a * (k * x[0]).sin()),
        _ => SpatialField::constant(grid, 1.0),
    };
    match init.mass {
        Some(m) => n.normalized_to(m),
        None => n,
    }
}

struct Context<'a> {
    cfg: &'a RunConfig,
    /// Directory relative snapshot paths are resolved against.
    base: PathBuf,
    out: PathBuf,
    verbose: bool,
}

impl Context<'_> {
    fn domain(&self) -> Result<Arc<Domain>> {
        Domain::new(self.cfg.domain.clone())
    }

    fn log(&self, msg: impl FnOnce() -> String) {
        if self.verbose {
            eprintln!("{}", msg());
        }
    }

    /// Analytic or snapshot species; `default_mass` applies when the config
    /// leaves `mass` unset.
    fn species(
        &self,
        dom: &Arc<Domain>,
        species: Species,
        init: &SpeciesInit,
        default_mass: Option<f64>,
    ) -> Result<PhaseDistribution> {
        let mass = init.mass.or(default_mass);
        let f = if init.profile == Profile::Snapshot {
            let rel = init.snapshot.as_deref().unwrap_or_default();
            let (f, _) = io::read_snapshot(&self.base.join(rel), dom.clone(), species)?;
            f
        } else {
            let n = analytic_density(dom.space.clone(), init);
            let n = match mass {
                Some(m) => n.normalized_to(m),
                None => n,
            };
            PhaseDistribution::with_density(
                dom.clone(),
                species,
                &n,
                &init.drift,
                init.temperature,
            )?
        };
        Ok(match mass {
            Some(m) if init.profile == Profile::Snapshot => scaled_to(f, m)?,
            _ => f,
        })
    }

    /// Electrons over the ion density; the equilibrium profile is the
    /// stationary state at `e1` times `1 + a cos(k x)`.
    fn electrons(&self, dom: &Arc<Domain>, ions: &PhaseDistribution) -> Result<PhaseDistribution> {
        let init = &self.cfg.electrons;
        let mass = init.mass.unwrap_or_else(|| ions.mass());
        if init.profile != Profile::Equilibrium {
            return self.species(dom, Species::Electron, init, Some(mass));
        }
        let n_i = moments(ions).density.normalized_to(mass);
        let e1 = self.cfg.physics.e1.unwrap_or_default();
        let reference = stationary_reference(dom.clone(), &n_i, mass, e1, self.cfg.numerics.tol)?;
        let mut f = reference.f;
        let nv = f.n_velocity();
        let (a, k) = (init.amplitude, init.wavenumber);
        for ix in 0..dom.space.len() {
            let w = 1.0 + a * (k * dom.space.position(ix)[0]).cos();
            f.values[ix * nv..(ix + 1) * nv]
                .iter_mut()
                .for_each(|v| *v *= w);
        }
        scaled_to(f, mass)
    }

    fn snapshot(&self, name: &str, f: &PhaseDistribution, t: f64) -> Result<()> {
        io::write_snapshot(&self.out.join(name), f, t)
    }

    fn reduced_ions(&self) -> Result<Value> {
        let cfg = self.cfg;
        let dom = self.domain()?;
        let f0 = self.species(&dom, Species::Ion, &cfg.ions, None)?;
        let n = &cfg.numerics;
        let params = ReducedParams {
            e0: cfg.physics.e0.unwrap_or_default(),
            compatibility: cfg.physics.compatibility,
            interpolation: n.interpolation,
            freeze_ions: cfg.physics.freeze_ions,
            mass_loss_limit: n.mass_loss_limit,
            tail_limit: n.tail_limit,
            tol: n.tol,
        };
        let state = reduced_ions::init(&params, f0)?;
        let bounds = state.beta_bounds();
        let control = RunControl {
            t_end: n.t_end,
            step: n.dt.map_or(TimeStep::Cfl(n.cfl), TimeStep::Fixed),
            output_every: cfg.output.every,
            max_steps: n.max_steps,
        };
        let mut pending = SnapshotTimes::new(&cfg.output.snapshot_times);
        pending.due(state.t, |t| {
            self.snapshot(&snap_name("ions", t), &state.f_plus, state.t)
        })?;
        let (end, records) = reduced_ions::run(&params, state, &control, |s: &SimState| {
            self.log(|| format!("t = {:.6} beta = {:.12} steps = {}", s.t, s.beta, s.steps));
            pending.due(s.t, |t| {
                self.snapshot(&snap_name("ions", t), &s.f_plus, s.t)
            })
        })?;
        io::write_diagnostics(&self.out.join("diagnostics.csv"), &records)?;
        self.snapshot("final_ions.bin", &end.f_plus, end.t)?;
        let betas: Vec<f64> = records.iter().filter_map(|r| r.beta).collect();
        let in_bounds = betas.iter().all(|b| *b >= bounds.0 && *b <= bounds.1);
        Ok(json!({
            "steps": end.steps,
            "t_final": end.t,
            "m0": end.m0,
            "e0": end.e0,
            "beta_invariant_initial": end.c0,
            "beta_invariant_final": beta_invariant(&end),
            "beta_final": end.beta,
            "beta_bounds": [bounds.0, bounds.1],
            "beta_within_bounds": in_bounds,
            "max_mass_drift": drift(&records, |r| Some(r.mass_ion)),
            "max_energy_drift": drift(&records, |r| Some(r.total_energy)),
            "max_beta_invariant_drift": drift(&records, |r| r.beta_invariant),
            "cumulative_mass_loss": end.cumulative_mass_loss,
            "final": records.last(),
        }))
    }

    fn two_species_setup(
        &self,
    ) -> Result<(
        Arc<Domain>,
        PhaseDistribution,
        PhaseDistribution,
        TwoSpeciesParams,
        TwoSpeciesControl,
    )> {
        let cfg = self.cfg;
        let dom = self.domain()?;
        let ions = self.species(&dom, Species::Ion, &cfg.ions, None)?;
        let electrons = self.electrons(&dom, &ions)?;
        let n = &cfg.numerics;
        let params = TwoSpeciesParams {
            interpolation: n.interpolation,
            electron_cfl: n.electron_cfl,
            max_substeps: n.max_substeps,
            resolve_per_substep: n.resolve_per_substep,
            freeze_ions: cfg.physics.freeze_ions,
            mass_loss_limit: n.mass_loss_limit,
        };
        let control = TwoSpeciesControl {
            t_end: n.t_end,
            dt: n.dt,
            cfl: n.cfl,
            output_every: cfg.output.every,
            max_steps: n.max_steps,
        };
        Ok((dom, ions, electrons, params, control))
    }

    fn two_species(&self) -> Result<Value> {
        let cfg = self.cfg;
        let (dom, ions, electrons, params, control) = self.two_species_setup()?;
        let eps = cfg.physics.epsilon;
        let eta = cfg.physics.eta_rule.eta(eps);
        let state =
            TwoSpeciesState::new(ions, electrons, eps, eta, cfg.physics.ion_collision_rate)?;
        // The Arnold reference carries the electron energy (thermal plus field)
        // of the initial data, so the functional measures distance from the
        // stationary state the run relaxes to.
        let reference: Option<StationaryReference> = if cfg.model == Model::Arnold {
            let mass = state.f_minus.mass();
            let n_i = moments(&state.f_plus).density.normalized_to(mass);
            let energy = state.f_minus.kinetic_energy() + state.field_energy();
            Some(stationary_reference(
                dom.clone(),
                &n_i,
                mass,
                energy,
                cfg.numerics.tol,
            )?)
        } else {
            None
        };
        let mut pending = SnapshotTimes::new(&cfg.output.snapshot_times);
        let write_both = |s: &TwoSpeciesState, t: f64| -> Result<()> {
            self.snapshot(&snap_name("ions", t), &s.f_plus, s.t)?;
            self.snapshot(&snap_name("electrons", t), &s.f_minus, s.t)
        };
        pending.due(state.t, |t| write_both(&state, t))?;
        let (end, records) = run_two_species(&params, state, &control, reference.as_ref(), |s| {
            self.log(|| {
                format!(
                    "t = {:.6} steps = {} substeps = {}",
                    s.t, s.steps, s.entropy_monitor.collision_substeps
                )
            });
            pending.due(s.t, |t| write_both(s, t))
        })?;
        io::write_diagnostics(&self.out.join("diagnostics.csv"), &records)?;
        self.snapshot("final_ions.bin", &end.f_plus, end.t)?;
        self.snapshot("final_electrons.bin", &end.f_minus, end.t)?;
        let mut summary = json!({
            "steps": end.steps,
            "t_final": end.t,
            "epsilon": end.epsilon,
            "eta": end.eta,
            "mb_deviation": mb_deviation(&end),
            "entropy_monitor": end.entropy_monitor,
            "max_mass_drift": drift(&records, |r| r.mass_electron),
            "max_energy_drift": drift(&records, |r| Some(r.total_energy)),
            "final": records.last(),
        });
        if let Some(r) = &reference {
            let a: Vec<f64> = records.iter().filter_map(|r| r.arnold_functional).collect();
            let worst = a
                .windows(2)
                .map(|w| w[1] - w[0])
                .fold(f64::NEG_INFINITY, f64::max);
            summary["reference_beta"] = json!(r.beta);
            summary["reference_residual"] = json!(r.residual);
            summary["arnold_initial"] = json!(a.first());
            summary["arnold_final"] = json!(a.last());
            summary["arnold_max_increase"] = json!(worst);
        }
        Ok(summary)
    }

    fn limit_sweep(&self) -> Result<Value> {
        let cfg = self.cfg;
        let (_, ions, electrons, params, control) = self.two_species_setup()?;
        let p = &cfg.physics;
        let rows = limit_experiment(
            &params,
            &ions,
            &electrons,
            &p.epsilons,
            p.eta_rule,
            p.ion_collision_rate,
            &control,
        )?;
        let mut table = io::csv_writer(fs::File::create(self.out.join("sweep.csv"))?)?;
        table.write_record([
            "epsilon",
            "eta",
            "mb_deviation",
            "final_entropy",
            "max_entropy_change",
            "collision_substeps",
            "error",
        ])?;
        let opt = |x: Option<f64>| x.map(|v| format!("{v:e}")).unwrap_or_default();
        for row in &rows {
            let dir = self.out.join(format!("eps_{}", fmt_f64(row.epsilon)));
            fs::create_dir_all(&dir)?;
            io::write_diagnostics(&dir.join("diagnostics.csv"), &row.records)?;
            if let Some(s) = &row.final_state {
                io::write_snapshot(&dir.join("final_electrons.bin"), &s.f_minus, s.t)?;
            }
            table.write_record([
                format!("{:e}", row.epsilon),
                format!("{:e}", row.eta),
                opt(row.deviation),
                opt(row.final_entropy),
                format!("{:e}", row.entropy_monitor.max_change),
                row.entropy_monitor.collision_substeps.to_string(),
                row.error.clone().unwrap_or_default(),
            ])?;
            self.log(|| format!("eps = {} deviation = {:?}", row.epsilon, row.deviation));
        }
        table.flush()?;
        let devs: Vec<Option<f64>> = rows.iter().map(|r| r.deviation).collect();
        let decreasing = devs
            .windows(2)
            .all(|w| matches!(w, [Some(a), Some(b)] if b < a));
        Ok(json!({
            "rows": rows,
            "deviation_strictly_decreasing": decreasing,
            "failures": rows.iter().filter(|r| r.error.is_some()).count(),
        }))
    }

    fn ion_density(&self) -> Result<(Arc<Domain>, SpatialField)> {
        let dom = self.domain()?;
        let n = if self.cfg.ions.profile == Profile::Snapshot {
            moments(&self.species(&dom, Species::Ion, &self.cfg.ions, None)?).density
        } else {
            analytic_density(dom.space.clone(), &self.cfg.ions)
        };
        Ok((dom, n))
    }

    fn write_phi(&self, phi: &SpatialField) -> Result<()> {
        let mut w = io::csv_writer(fs::File::create(self.out.join("phi.csv"))?)?;
        w.write_record(["index", "x", "phi"])?;
        for (i, p) in phi.values.iter().enumerate() {
            w.write_record([
                i.to_string(),
                format!("{:e}", phi.grid.position(i)[0]),
                format!("{p:e}"),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    fn solve_pb(&self) -> Result<Value> {
        let (dom, n_i) = self.ion_density()?;
        let m0 = n_i.integral();
        let e1 = self.cfg.physics.e1.unwrap_or_default();
        let pb = PoissonBoltzmann::new(dom.lambda_d(), dom.velocity_dim())
            .with_tolerances(self.cfg.numerics.tol);
        let sol = pb.find_beta(&n_i, m0, e1)?;
        self.write_phi(&sol.phi)?;
        Ok(json!({
            "m0": m0,
            "e1": e1,
            "beta": sol.beta,
            "energy": sol.energy,
            "newton_iters": sol.newton_iters,
            "bisect_iters": sol.bisect_iters,
            "pde_residual": sol.pde_residual,
            "energy_residual": sol.energy_residual,
            "mass_residual": sol.mass_residual,
            "phi_min": sol.phi.values.iter().copied().fold(f64::INFINITY, f64::min),
            "phi_max": sol.phi.values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }))
    }

    fn equilibrium(&self) -> Result<Value> {
        let (dom, n_i) = self.ion_density()?;
        let m0 = n_i.integral();
        let e1 = self.cfg.physics.e1.unwrap_or_default();
        let eq = self_consistent_equilibrium(dom, &n_i, m0, e1, self.cfg.numerics.tol)?;
        self.write_phi(&eq.phi)?;
        self.snapshot("equilibrium_electrons.bin", &eq.f, 0.0)?;
        Ok(json!({
            "m0": m0,
            "e1": e1,
            "beta": eq.beta,
            "pde_residual": eq.pde_residual,
            "residuals": eq.report,
        }))
    }
}

fn scaled_to(mut f: PhaseDistribution, mass: f64) -> Result<PhaseDistribution> {
    let m = f.mass();
    if !(m > 0.0) {
        return Err(Error::ZeroMass(m));
    }
    let s = mass / m;
    f.values.iter_mut().for_each(|v| *v *= s);
    Ok(f)
}

fn snap_name(species: &str, t: f64) -> String {
    format!("{species}_t{}.bin", fmt_f64(t))
}

/// Requested snapshot times not yet written, in increasing order.
struct SnapshotTimes(Vec<f64>);

impl SnapshotTimes {
    fn new(times: &[f64]) -> Self {
        let mut v = times.to_vec();
        v.sort_by(|a, b| b.total_cmp(a));
        SnapshotTimes(v)
    }

    /// Fires `write(requested_time)` once for every requested time `<= t`.
    fn due(&mut self, t: f64, mut write: impl FnMut(f64) -> Result<()>) -> Result<()> {
        while let Some(&next) = self.0.last() {
            if next > t + 1e-12 * t.abs().max(1.0) {
                break;
            }
            self.0.pop();
            write(next)?;
        }
        Ok(())
    }
}
