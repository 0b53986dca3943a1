//! Sectioned `key = value` run configuration.
//!
//! ```text
//! # comment (anything after '#' is ignored)
//! [section]
//! key = value          # lists are comma separated; `none` is the empty list
//! ```
//!
//! Only `run.model` is mandatory. Unknown sections and keys are rejected, and
//! every bad value is reported in one batch. [`RunConfig::dump`] writes all keys
//! in canonical form, so parsing a dump gives back the same config and dumping
//! that again gives the same bytes.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::str::FromStr;

use serde::Serialize;

use crate::domain::{DomainSpec, Geometry};
use crate::error::{Error, Result};
use crate::fields::FieldTolerances;
use crate::kinetics::Interpolation;
use crate::two_species::EtaRule;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    ReducedIons,
    TwoSpecies,
    Equilibrium,
    SolvePb,
    LimitSweep,
    Arnold,
}

impl Model {
    pub const ALL: [Model; 6] = [
        Model::ReducedIons,
        Model::TwoSpecies,
        Model::Equilibrium,
        Model::SolvePb,
        Model::LimitSweep,
        Model::Arnold,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Model::ReducedIons => "reduced_ions",
            Model::TwoSpecies => "two_species",
            Model::Equilibrium => "equilibrium",
            Model::SolvePb => "solve_pb",
            Model::LimitSweep => "limit_sweep",
            Model::Arnold => "arnold",
        }
    }

    /// Models that evolve kinetic electrons.
    pub fn has_electrons(self) -> bool {
        matches!(self, Model::TwoSpecies | Model::LimitSweep | Model::Arnold)
    }
}

impl FromStr for Model {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Model::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Model::ALL.iter().map(|m| m.name()).collect();
                format!("unknown model '{s}' (expected one of {})", names.join(", "))
            })
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Initial density profile, `1 + amplitude * cos(k x)` and so on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    Uniform,
    Cosine,
    Sine,
    /// Electrons only: the stationary state over the ion density at energy
    /// `e1`, multiplied by `1 + amplitude * cos(k x)`.
    Equilibrium,
    /// Read from a snapshot file.
    Snapshot,
}

impl Profile {
    const ALL: [(Profile, &'static str); 5] = [
        (Profile::Uniform, "uniform"),
        (Profile::Cosine, "cosine"),
        (Profile::Sine, "sine"),
        (Profile::Equilibrium, "equilibrium"),
        (Profile::Snapshot, "snapshot"),
    ];

    pub fn name(self) -> &'static str {
        Self::ALL.iter().find(|(p, _)| *p == self).unwrap().1
    }
}

impl FromStr for Profile {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Self::ALL
            .iter()
            .find(|(_, n)| *n == s)
            .map(|(p, _)| *p)
            .ok_or_else(|| format!("unknown profile '{s}'"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpeciesInit {
    pub profile: Profile,
    pub amplitude: f64,
    pub wavenumber: f64,
    pub temperature: f64,
    /// Mean velocity per component; missing components are zero.
    pub drift: Vec<f64>,
    /// Rescale the density to this total mass.
    pub mass: Option<f64>,
    pub snapshot: Option<String>,
}

impl Default for SpeciesInit {
    fn default() -> Self {
        SpeciesInit {
            profile: Profile::Uniform,
            amplitude: 0.0,
            wavenumber: 1.0,
            temperature: 1.0,
            drift: Vec::new(),
            mass: None,
            snapshot: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Physics {
    /// Total energy budget of the reduced ions model.
    pub e0: Option<f64>,
    /// Electron energy (thermal plus field) for stationary solves.
    pub e1: Option<f64>,
    /// Initial ion kinetic energy must stay below `compatibility * e0`.
    pub compatibility: f64,
    pub epsilon: f64,
    pub epsilons: Vec<f64>,
    pub eta_rule: EtaRule,
    /// Ion BGK rate; `None` disables ion collisions.
    pub ion_collision_rate: Option<f64>,
    pub freeze_ions: bool,
}

impl Default for Physics {
    fn default() -> Self {
        Physics {
            e0: None,
            e1: None,
            compatibility: 0.9,
            epsilon: 0.1,
            epsilons: vec![0.2, 0.1, 0.05],
            eta_rule: EtaRule::SQRT,
            ion_collision_rate: None,
            freeze_ions: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Numerics {
    pub t_end: f64,
    /// `None` picks `cfl * stable_dt` every step.
    pub dt: Option<f64>,
    pub cfl: f64,
    pub interpolation: Interpolation,
    pub electron_cfl: f64,
    pub max_substeps: usize,
    pub resolve_per_substep: bool,
    pub max_steps: usize,
    pub mass_loss_limit: f64,
    pub tail_limit: f64,
    pub tol: FieldTolerances,
}

impl Default for Numerics {
    fn default() -> Self {
        Numerics {
            t_end: 1.0,
            dt: None,
            cfl: 0.5,
            interpolation: Interpolation::ClippedCubic,
            electron_cfl: 0.5,
            max_substeps: 100_000,
            resolve_per_substep: false,
            max_steps: 1_000_000,
            mass_loss_limit: 1e-6,
            tail_limit: 1e-3,
            tol: FieldTolerances::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Output {
    pub dir: String,
    /// Diagnostics cadence in steps.
    pub every: usize,
    pub snapshot_times: Vec<f64>,
}

impl Default for Output {
    fn default() -> Self {
        Output {
            dir: "out".into(),
            every: 1,
            snapshot_times: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub model: Model,
    pub domain: DomainSpec,
    pub physics: Physics,
    pub numerics: Numerics,
    pub ions: SpeciesInit,
    pub electrons: SpeciesInit,
    pub output: Output,
}

impl RunConfig {
    /// All defaults: periodic `[0, 2pi)`, 64 x 64 cells, `v_max = 6`.
    pub fn new(model: Model) -> Self {
        RunConfig {
            model,
            domain: DomainSpec::periodic_1d(std::f64::consts::TAU, 64, 6.0, 64),
            physics: Physics::default(),
            numerics: Numerics::default(),
            ions: SpeciesInit::default(),
            electrons: SpeciesInit::default(),
            output: Output::default(),
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut table = Table::read(text)?;
        let model = table.take("run", "model", |s| s.parse::<Model>());
        let mut cfg = RunConfig::new(model.unwrap_or(Model::ReducedIons));
        if model.is_none() && table.errors.is_empty() {
            table.errors.push("run.model is required".into());
        }
        table.fill(&mut cfg);
        let mut errors = table.finish();
        if errors.is_empty() {
            errors = cfg.violations();
        }
        if errors.is_empty() {
            Ok(cfg)
        } else {
            Err(Error::Config(errors))
        }
    }

    /// Every violated bound, in key order.
    pub fn violations(&self) -> Vec<String> {
        let mut v: Vec<String> = self.domain.violations();
        let p = &self.physics;
        let n = &self.numerics;
        let positive = |v: &mut Vec<String>, name: &str, x: f64| {
            if !(x > 0.0 && x.is_finite()) {
                v.push(format!("{name} = {x} must be positive"));
            }
        };

        match self.model {
            Model::ReducedIons => match p.e0 {
                Some(e0) => positive(&mut v, "physics.e0", e0),
                None => v.push("physics.e0 is required for model reduced_ions".into()),
            },
            Model::Equilibrium | Model::SolvePb | Model::Arnold => match p.e1 {
                Some(e1) => positive(&mut v, "physics.e1", e1),
                None => v.push(format!("physics.e1 is required for model {}", self.model)),
            },
            _ => {}
        }
        if !(p.compatibility > 0.0 && p.compatibility < 1.0) {
            v.push(format!(
                "physics.compatibility = {} violates the compatibility condition: need 0 < a < 1 with K(0) <= a E0",
                p.compatibility
            ));
        }
        let eps_ok = |e: f64| e > 0.0 && e < 1.0;
        if matches!(self.model, Model::TwoSpecies | Model::Arnold) && !eps_ok(p.epsilon) {
            v.push(format!(
                "physics.epsilon = {} must lie in (0, 1)",
                p.epsilon
            ));
        }
        if self.model == Model::LimitSweep {
            if p.epsilons.is_empty() {
                v.push("physics.epsilons must list at least one value".into());
            }
            for e in p.epsilons.iter().filter(|e| !eps_ok(**e)) {
                v.push(format!("physics.epsilons entry {e} must lie in (0, 1)"));
            }
        }
        if self.model.has_electrons() {
            v.extend(
                p.eta_rule
                    .violations()
                    .into_iter()
                    .map(|m| format!("physics.eta_rule: {m}")),
            );
        }
        if let Some(r) = p.ion_collision_rate {
            if !(r >= 0.0) {
                v.push(format!(
                    "physics.ion_collision_rate = {r} must be nonnegative"
                ));
            }
        }
        if self.model == Model::Arnold {
            if !p.freeze_ions {
                v.push("physics.freeze_ions must be true for model arnold".into());
            }
            if self.electrons.profile != Profile::Equilibrium {
                v.push("electrons.profile must be equilibrium for model arnold".into());
            }
        }

        if !(n.t_end >= 0.0 && n.t_end.is_finite()) {
            v.push(format!("numerics.t_end = {} must be nonnegative", n.t_end));
        }
        if let Some(dt) = n.dt {
            positive(&mut v, "numerics.dt", dt);
        }
        for (name, c) in [
            ("numerics.cfl", n.cfl),
            ("numerics.electron_cfl", n.electron_cfl),
        ] {
            if !(c > 0.0 && c <= 1.0) {
                v.push(format!("{name} = {c} must lie in (0, 1]"));
            }
        }
        if n.max_substeps == 0 {
            v.push("numerics.max_substeps must be at least 1".into());
        }
        if n.max_steps == 0 {
            v.push("numerics.max_steps must be at least 1".into());
        }
        for (name, x) in [
            ("numerics.mass_loss_limit", n.mass_loss_limit),
            ("numerics.tail_limit", n.tail_limit),
            ("numerics.tol_pde", n.tol.pde),
            ("numerics.tol_energy", n.tol.energy),
            ("numerics.tol_mass", n.tol.mass),
        ] {
            positive(&mut v, name, x);
        }
        for (name, k) in [
            ("numerics.max_newton", n.tol.max_newton),
            ("numerics.max_beta_iters", n.tol.max_beta_iters),
        ] {
            if k == 0 {
                v.push(format!("{name} must be at least 1"));
            }
        }

        self.species_violations("ions", &self.ions, &mut v);
        if self.model.has_electrons() {
            self.species_violations("electrons", &self.electrons, &mut v);
        }

        if self.output.dir.is_empty() {
            v.push("output.dir must not be empty".into());
        }
        if self.output.every == 0 {
            v.push("output.every must be at least 1".into());
        }
        for t in self.output.snapshot_times.iter().filter(|t| !(**t >= 0.0)) {
            v.push(format!(
                "output.snapshot_times entry {t} must be nonnegative"
            ));
        }
        v
    }

    fn species_violations(&self, name: &str, s: &SpeciesInit, v: &mut Vec<String>) {
        match s.profile {
            Profile::Cosine | Profile::Sine | Profile::Equilibrium => {
                if !(s.amplitude.abs() < 1.0) {
                    v.push(format!(
                        "{name}.amplitude = {} must satisfy |a| < 1 to keep the density positive",
                        s.amplitude
                    ));
                }
            }
            Profile::Snapshot if s.snapshot.is_none() => {
                v.push(format!(
                    "{name}.snapshot path is required for profile snapshot"
                ));
            }
            _ => {}
        }
        if s.profile == Profile::Equilibrium {
            if name == "ions" {
                v.push("ions.profile = equilibrium is only available for electrons".into());
            } else if self.physics.e1.is_none() {
                v.push("electrons.profile = equilibrium needs physics.e1".into());
            }
        }
        if !s.wavenumber.is_finite() {
            v.push(format!(
                "{name}.wavenumber = {} must be finite",
                s.wavenumber
            ));
        }
        if !(s.temperature > 0.0 && s.temperature.is_finite()) {
            v.push(format!(
                "{name}.temperature = {} must be positive",
                s.temperature
            ));
        }
        if s.drift.len() > self.domain.velocity_dim {
            v.push(format!(
                "{name}.drift has {} components but velocity_dim = {}",
                s.drift.len(),
                self.domain.velocity_dim
            ));
        }
        if let Some(m) = s.mass {
            if !(m > 0.0 && m.is_finite()) {
                v.push(format!("{name}.mass = {m} must be positive"));
            }
        }
    }

    /// Canonical text: every key, fixed order, shortest round-trip floats.
    pub fn dump(&self) -> String {
        let mut o = String::new();
        let section = |o: &mut String, name: &str, rows: &[(&str, String)]| {
            if !o.is_empty() {
                o.push('\n');
            }
            let _ = writeln!(o, "[{name}]");
            for (k, val) in rows {
                let _ = writeln!(o, "{k} = {val}");
            }
        };
        section(&mut o, "run", &[("model", self.model.to_string())]);

        let d = &self.domain;
        let (geometry, lengths) = match &d.geometry {
            Geometry::Periodic { lengths } => ("periodic", lengths.clone()),
            Geometry::Interval { length } => ("interval", vec![*length]),
        };
        section(
            &mut o,
            "domain",
            &[
                ("geometry", geometry.into()),
                ("length", fmt_list(&lengths)),
                ("n_x", d.n_x.to_string()),
                ("velocity_dim", d.velocity_dim.to_string()),
                ("v_max", fmt_f64(d.v_max)),
                ("n_v", d.n_v.to_string()),
                ("lambda_d", fmt_f64(d.lambda_d)),
            ],
        );

        let p = &self.physics;
        section(
            &mut o,
            "physics",
            &[
                ("e0", fmt_opt(p.e0, "none")),
                ("e1", fmt_opt(p.e1, "none")),
                ("compatibility", fmt_f64(p.compatibility)),
                ("epsilon", fmt_f64(p.epsilon)),
                ("epsilons", fmt_list(&p.epsilons)),
                ("eta_rule", p.eta_rule.to_string()),
                ("ion_collision_rate", fmt_opt(p.ion_collision_rate, "none")),
                ("freeze_ions", p.freeze_ions.to_string()),
            ],
        );

        let n = &self.numerics;
        section(
            &mut o,
            "numerics",
            &[
                ("t_end", fmt_f64(n.t_end)),
                ("dt", fmt_opt(n.dt, "auto")),
                ("cfl", fmt_f64(n.cfl)),
                ("interpolation", fmt_interp(n.interpolation).into()),
                ("electron_cfl", fmt_f64(n.electron_cfl)),
                ("max_substeps", n.max_substeps.to_string()),
                ("resolve_per_substep", n.resolve_per_substep.to_string()),
                ("max_steps", n.max_steps.to_string()),
                ("mass_loss_limit", fmt_f64(n.mass_loss_limit)),
                ("tail_limit", fmt_f64(n.tail_limit)),
                ("tol_pde", fmt_f64(n.tol.pde)),
                ("tol_energy", fmt_f64(n.tol.energy)),
                ("tol_mass", fmt_f64(n.tol.mass)),
                ("max_newton", n.tol.max_newton.to_string()),
                ("max_halvings", n.tol.max_halvings.to_string()),
                ("max_doublings", n.tol.max_doublings.to_string()),
                ("max_beta_iters", n.tol.max_beta_iters.to_string()),
            ],
        );

        for (name, s) in [("ions", &self.ions), ("electrons", &self.electrons)] {
            section(
                &mut o,
                name,
                &[
                    ("profile", s.profile.name().into()),
                    ("amplitude", fmt_f64(s.amplitude)),
                    ("wavenumber", fmt_f64(s.wavenumber)),
                    ("temperature", fmt_f64(s.temperature)),
                    ("drift", fmt_list(&s.drift)),
                    ("mass", fmt_opt(s.mass, "none")),
                    (
                        "snapshot",
                        s.snapshot.clone().unwrap_or_else(|| "none".into()),
                    ),
                ],
            );
        }

        let out = &self.output;
        section(
            &mut o,
            "output",
            &[
                ("dir", out.dir.clone()),
                ("every", out.every.to_string()),
                ("snapshot_times", fmt_list(&out.snapshot_times)),
            ],
        );
        o
    }
}

pub fn fmt_f64(x: f64) -> String {
    if x == 0.0 || (1e-4..1e15).contains(&x.abs()) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

fn fmt_opt(x: Option<f64>, absent: &str) -> String {
    x.map(fmt_f64).unwrap_or_else(|| absent.into())
}

fn fmt_list(xs: &[f64]) -> String {
    if xs.is_empty() {
        "none".into()
    } else {
        xs.iter()
            .map(|x| fmt_f64(*x))
            .collect::<Vec<_>>()
            .join(", ")
    }
}

fn fmt_interp(i: Interpolation) -> &'static str {
    match i {
        Interpolation::Linear => "linear",
        Interpolation::ClippedCubic => "cubic",
    }
}

type Parsed<T> = std::result::Result<T, String>;

fn float(s: &str) -> Parsed<f64> {
    match s.parse::<f64>() {
        Ok(x) if x.is_finite() => Ok(x),
        _ => Err(format!("expected a finite number, got '{s}'")),
    }
}

fn int(s: &str) -> Parsed<usize> {
    s.parse()
        .map_err(|_| format!("expected a nonnegative integer, got '{s}'"))
}

fn boolean(s: &str) -> Parsed<bool> {
    match s {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(format!("expected true or false, got '{s}'")),
    }
}

fn opt_float(absent: &'static str) -> impl Fn(&str) -> Parsed<Option<f64>> {
    move |s| {
        if s == absent {
            Ok(None)
        } else {
            float(s).map(Some)
        }
    }
}

fn float_list(s: &str) -> Parsed<Vec<f64>> {
    if s == "none" {
        return Ok(Vec::new());
    }
    s.split(',').map(|x| float(x.trim())).collect()
}

fn text(s: &str) -> Parsed<String> {
    Ok(s.to_string())
}

fn opt_text(s: &str) -> Parsed<Option<String>> {
    Ok((s != "none").then(|| s.to_string()))
}

fn interpolation(s: &str) -> Parsed<Interpolation> {
    match s {
        "cubic" => Ok(Interpolation::ClippedCubic),
        "linear" => Ok(Interpolation::Linear),
        _ => Err(format!("expected cubic or linear, got '{s}'")),
    }
}

const SECTIONS: [&str; 7] = [
    "run",
    "domain",
    "physics",
    "numerics",
    "ions",
    "electrons",
    "output",
];

struct Entry {
    value: String,
    line: usize,
}

/// Raw `(section, key) -> value` pairs; values are consumed by `take`.
struct Table {
    entries: BTreeMap<(String, String), Entry>,
    errors: Vec<String>,
}

impl Table {
    /// Structural errors (bad lines, unknown sections, duplicates) stop here.
    fn read(text: &str) -> Result<Table> {
        let mut entries = BTreeMap::new();
        let mut section: Option<String> = None;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let syntax = |message: String| Error::ConfigSyntax { line, message };
            if let Some(rest) = body.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| syntax(format!("unterminated section header '{body}'")))?
                    .trim();
                if !SECTIONS.contains(&name) {
                    return Err(syntax(format!(
                        "unknown section [{name}] (expected one of {})",
                        SECTIONS.join(", ")
                    )));
                }
                section = Some(name.to_string());
                continue;
            }
            let (key, value) = body
                .split_once('=')
                .ok_or_else(|| syntax(format!("expected 'key = value', got '{body}'")))?;
            let key = key.trim();
            if key.is_empty() || !key.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
                return Err(syntax(format!("invalid key '{key}'")));
            }
            let sec = section
                .clone()
                .ok_or_else(|| syntax(format!("key '{key}' appears before any [section]")))?;
            let value = value.trim().to_string();
            if value.is_empty() {
                return Err(syntax(format!("key '{key}' has no value")));
            }
            if let Some(prev) =
                entries.insert((sec.clone(), key.to_string()), Entry { value, line })
            {
                return Err(syntax(format!(
                    "duplicate key {sec}.{key} (first set on line {})",
                    prev.line
                )));
            }
        }
        Ok(Table {
            entries,
            errors: Vec::new(),
        })
    }

    fn take<T>(
        &mut self,
        section: &str,
        key: &str,
        parse: impl Fn(&str) -> Parsed<T>,
    ) -> Option<T> {
        let entry = self
            .entries
            .remove(&(section.to_string(), key.to_string()))?;
        match parse(&entry.value) {
            Ok(v) => Some(v),
            Err(m) => {
                self.errors
                    .push(format!("line {}: {section}.{key}: {m}", entry.line));
                None
            }
        }
    }

    fn set<T>(
        &mut self,
        section: &str,
        key: &str,
        slot: &mut T,
        parse: impl Fn(&str) -> Parsed<T>,
    ) {
        if let Some(v) = self.take(section, key, parse) {
            *slot = v;
        }
    }

    fn fill(&mut self, c: &mut RunConfig) {
        let d = &mut c.domain;
        let geometry = self.take("domain", "geometry", |s| match s {
            "periodic" | "interval" => Ok(s.to_string()),
            _ => Err(format!("expected periodic or interval, got '{s}'")),
        });
        let lengths = self.take("domain", "length", float_list);
        let current = match &d.geometry {
            Geometry::Periodic { lengths } => lengths.clone(),
            Geometry::Interval { length } => vec![*length],
        };
        let lengths = lengths.unwrap_or(current);
        match geometry.as_deref() {
            Some("interval") => {
                if lengths.len() == 1 {
                    d.geometry = Geometry::Interval { length: lengths[0] };
                } else {
                    self.errors.push(format!(
                        "domain.length: interval geometry takes one length, got {}",
                        lengths.len()
                    ));
                }
            }
            _ => d.geometry = Geometry::Periodic { lengths },
        }
        self.set("domain", "n_x", &mut d.n_x, int);
        self.set("domain", "velocity_dim", &mut d.velocity_dim, int);
        self.set("domain", "v_max", &mut d.v_max, float);
        self.set("domain", "n_v", &mut d.n_v, int);
        self.set("domain", "lambda_d", &mut d.lambda_d, float);

        let p = &mut c.physics;
        self.set("physics", "e0", &mut p.e0, opt_float("none"));
        self.set("physics", "e1", &mut p.e1, opt_float("none"));
        self.set("physics", "compatibility", &mut p.compatibility, float);
        self.set("physics", "epsilon", &mut p.epsilon, float);
        self.set("physics", "epsilons", &mut p.epsilons, float_list);
        self.set("physics", "eta_rule", &mut p.eta_rule, |s| {
            s.parse::<EtaRule>().map_err(|e| e.to_string())
        });
        self.set(
            "physics",
            "ion_collision_rate",
            &mut p.ion_collision_rate,
            opt_float("none"),
        );
        self.set("physics", "freeze_ions", &mut p.freeze_ions, boolean);

        let n = &mut c.numerics;
        self.set("numerics", "t_end", &mut n.t_end, float);
        self.set("numerics", "dt", &mut n.dt, opt_float("auto"));
        self.set("numerics", "cfl", &mut n.cfl, float);
        self.set(
            "numerics",
            "interpolation",
            &mut n.interpolation,
            interpolation,
        );
        self.set("numerics", "electron_cfl", &mut n.electron_cfl, float);
        self.set("numerics", "max_substeps", &mut n.max_substeps, int);
        self.set(
            "numerics",
            "resolve_per_substep",
            &mut n.resolve_per_substep,
            boolean,
        );
        self.set("numerics", "max_steps", &mut n.max_steps, int);
        self.set("numerics", "mass_loss_limit", &mut n.mass_loss_limit, float);
        self.set("numerics", "tail_limit", &mut n.tail_limit, float);
        self.set("numerics", "tol_pde", &mut n.tol.pde, float);
        self.set("numerics", "tol_energy", &mut n.tol.energy, float);
        self.set("numerics", "tol_mass", &mut n.tol.mass, float);
        self.set("numerics", "max_newton", &mut n.tol.max_newton, int);
        self.set("numerics", "max_halvings", &mut n.tol.max_halvings, int);
        self.set("numerics", "max_doublings", &mut n.tol.max_doublings, int);
        self.set("numerics", "max_beta_iters", &mut n.tol.max_beta_iters, int);

        for (name, s) in [("ions", &mut c.ions), ("electrons", &mut c.electrons)] {
            self.set(name, "profile", &mut s.profile, |v| v.parse::<Profile>());
            self.set(name, "amplitude", &mut s.amplitude, float);
            self.set(name, "wavenumber", &mut s.wavenumber, float);
            self.set(name, "temperature", &mut s.temperature, float);
            self.set(name, "drift", &mut s.drift, float_list);
            self.set(name, "mass", &mut s.mass, opt_float("none"));
            self.set(name, "snapshot", &mut s.snapshot, opt_text);
        }

        let o = &mut c.output;
        self.set("output", "dir", &mut o.dir, text);
        self.set("output", "every", &mut o.every, int);
        self.set(
            "output",
            "snapshot_times",
            &mut o.snapshot_times,
            float_list,
        );
    }

    /// Value errors followed by every key nobody asked for.
    fn finish(self) -> Vec<String> {
        let mut errors = self.errors;
        errors.extend(
            self.entries
                .iter()
                .map(|((s, k), e)| format!("line {}: unknown key {s}.{k}", e.line)),
        );
        errors
    }
}
