//! Phase-space distributions, their velocity moments, Maxwellians, transport
//! and BGK collisions.

mod bgk;
mod characteristics;
mod transport;

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::fields::SpatialField;

pub use bgk::{bgk_relax, discrete_maxwellian, BgkReport};
pub use characteristics::{specular_reflect, trace_characteristic, Trajectory};
pub use transport::{advect_v, advect_x, shift_line_open, shift_line_periodic, VelocityAdvection};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Species {
    Ion,
    Electron,
}

/// Reconstruction used by the conservative semi-Lagrangian transport.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum Interpolation {
    /// Donor-cell (piecewise constant) fluxes: first order, very diffusive.
    Linear,
    /// Third-order primitive reconstruction with positivity limiters.
    #[default]
    ClippedCubic,
}

/// `f(x, v) >= 0` on the phase grid; flat index `ix * n_velocity + iv`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseDistribution {
    pub domain: Arc<Domain>,
    pub species: Species,
    pub values: Vec<f64>,
}

impl PhaseDistribution {
    pub fn zeros(domain: Arc<Domain>, species: Species) -> Self {
        let n = domain.space.len() * domain.velocity.len();
        PhaseDistribution {
            domain,
            species,
            values: vec![0.0; n],
        }
    }

    pub fn new(domain: Arc<Domain>, species: Species, values: Vec<f64>) -> Result<Self> {
        let n = domain.space.len() * domain.velocity.len();
        if values.len() != n {
            return Err(Error::GridMismatch(format!(
                "{} phase values for {n} cells",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidInput(format!(
                "distribution must be finite and nonnegative (cell {i} = {})",
                values[i]
            )));
        }
        Ok(PhaseDistribution {
            domain,
            species,
            values,
        })
    }

    pub fn from_fn(
        domain: Arc<Domain>,
        species: Species,
        f: impl Fn(&[f64], &[f64]) -> f64,
    ) -> Result<Self> {
        let nv = domain.velocity.len();
        let mut values = Vec::with_capacity(domain.space.len() * nv);
        for ix in 0..domain.space.len() {
            let x = domain.space.position(ix);
            for iv in 0..nv {
                values.push(f(&x, &domain.velocity.velocity(iv)));
            }
        }
        Self::new(domain, species, values)
    }

    /// Drifting Maxwellian with temperature `theta` whose discrete density
    /// equals `density` in every cell exactly.
    pub fn with_density(
        domain: Arc<Domain>,
        species: Species,
        density: &SpatialField,
        drift: &[f64],
        theta: f64,
    ) -> Result<Self> {
        density.check_grid(&domain.space)?;
        if !(theta > 0.0) {
            return Err(Error::InvalidInput(format!(
                "temperature {theta} must be positive"
            )));
        }
        let vg = &domain.velocity;
        let profile: Vec<f64> = (0..vg.len())
            .map(|iv| {
                let v = vg.velocity(iv);
                let d2: f64 = v
                    .iter()
                    .enumerate()
                    .map(|(b, vb)| {
                        let u = drift.get(b).copied().unwrap_or(0.0);
                        (vb - u) * (vb - u)
                    })
                    .sum();
                (-d2 / (2.0 * theta)).exp()
            })
            .collect();
        let norm = profile.iter().sum::<f64>() * vg.cell_measure();
        let mut values = Vec::with_capacity(density.values.len() * profile.len());
        for &n in &density.values {
            values.extend(profile.iter().map(|p| n * p / norm));
        }
        Self::new(domain, species, values)
    }

    pub fn n_velocity(&self) -> usize {
        self.domain.velocity.len()
    }

    /// Velocity block of spatial cell `ix`.
    pub fn cell(&self, ix: usize) -> &[f64] {
        let nv = self.n_velocity();
        &self.values[ix * nv..(ix + 1) * nv]
    }

    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.domain.phase_cell_measure()
    }

    /// `int <|v|^2/2 f> dx`.
    pub fn kinetic_energy(&self) -> f64 {
        let vg = &self.domain.velocity;
        let half_v2: Vec<f64> = (0..vg.len()).map(|iv| 0.5 * vg.speed_squared(iv)).collect();
        let nv = vg.len();
        let mut acc = 0.0;
        for block in self.values.chunks(nv) {
            acc += block.iter().zip(&half_v2).map(|(f, e)| f * e).sum::<f64>();
        }
        acc * self.domain.phase_cell_measure()
    }

    /// Fraction of the mass carried by cells with `|v| > fraction * v_max`.
    pub fn tail_fraction(&self, fraction: f64) -> f64 {
        let vg = &self.domain.velocity;
        let cut = (fraction * vg.v_max).powi(2);
        let nv = vg.len();
        let outer: Vec<bool> = (0..nv).map(|iv| vg.speed_squared(iv) > cut).collect();
        let total: f64 = self.values.iter().sum();
        if total == 0.0 {
            return 0.0;
        }
        let tail: f64 = self
            .values
            .chunks(nv)
            .map(|b| {
                b.iter()
                    .zip(&outer)
                    .filter(|(_, o)| **o)
                    .map(|(f, _)| f)
                    .sum::<f64>()
            })
            .sum();
        tail / total
    }

    pub fn max_abs_diff(&self, other: &PhaseDistribution) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    /// Reflects every velocity through `v -> -v`.
    pub fn reflect_velocities(&self) -> PhaseDistribution {
        let vg = &self.domain.velocity;
        let nv = vg.len();
        let mut out = self.clone();
        for (ix, block) in self.values.chunks(nv).enumerate() {
            for iv in 0..nv {
                let mut m = iv;
                for axis in 0..vg.dim {
                    m = vg.mirror(m, axis);
                }
                out.values[ix * nv + m] = block[iv];
            }
        }
        out
    }
}

/// Velocity moments `<f>`, `<v f>` and `<|v|^2/2 f>` per spatial cell.
#[derive(Debug, Clone)]
pub struct Moments {
    pub density: SpatialField,
    /// One field per velocity component.
    pub momentum: Vec<SpatialField>,
    pub kinetic_energy_density: SpatialField,
}

impl Moments {
    /// Bulk velocity and temperature `theta = <|v-u|^2 f> / (d n)` in cell `ix`.
    pub fn drift_and_temperature(&self, ix: usize) -> Option<(Vec<f64>, f64)> {
        let n = self.density.values[ix];
        if !(n > 0.0) {
            return None;
        }
        let u: Vec<f64> = self.momentum.iter().map(|m| m.values[ix] / n).collect();
        let u2: f64 = u.iter().map(|x| x * x).sum();
        let d = self.momentum.len() as f64;
        let theta = (2.0 * self.kinetic_energy_density.values[ix] - n * u2) / (d * n);
        Some((u, theta))
    }
}

pub fn moments(f: &PhaseDistribution) -> Moments {
    let dom = &f.domain;
    let vg = &dom.velocity;
    let nv = vg.len();
    let hv = vg.cell_measure();
    let vel: Vec<Vec<f64>> = (0..nv).map(|iv| vg.velocity(iv)).collect();
    let nx = dom.space.len();
    let mut density = vec![0.0; nx];
    let mut momentum = vec![vec![0.0; nx]; vg.dim];
    let mut energy = vec![0.0; nx];
    for (ix, block) in f.values.chunks(nv).enumerate() {
        let mut n = 0.0;
        let mut e = 0.0;
        for (iv, &fv) in block.iter().enumerate() {
            n += fv;
            let v = &vel[iv];
            let mut v2 = 0.0;
            for (b, vb) in v.iter().enumerate() {
                momentum[b][ix] += vb * fv;
                v2 += vb * vb;
            }
            e += 0.5 * v2 * fv;
        }
        density[ix] = n * hv;
        energy[ix] = e * hv;
    }
    let grid = dom.space.clone();
    Moments {
        density: SpatialField {
            grid: grid.clone(),
            values: density,
        },
        momentum: momentum
            .into_iter()
            .map(|m| SpatialField {
                grid: grid.clone(),
                values: m.into_iter().map(|x| x * hv).collect(),
            })
            .collect(),
        kinetic_energy_density: SpatialField {
            grid,
            values: energy,
        },
    }
}

/// Pointwise `(beta/2pi)^{d/2} exp(-beta(|v|^2/2 - phi))`.
pub fn maxwellian(
    beta: f64,
    phi: &SpatialField,
    domain: Arc<Domain>,
    species: Species,
) -> Result<PhaseDistribution> {
    if !(beta > 0.0) {
        return Err(Error::InvalidInput(format!(
            "beta = {beta} must be positive"
        )));
    }
    phi.check_grid(&domain.space)?;
    let worst = phi
        .values
        .iter()
        .fold(f64::NEG_INFINITY, |m, p| m.max(beta * p));
    if worst > 700.0 {
        return Err(Error::ExpOverflow(worst));
    }
    let vg = &domain.velocity;
    let d = vg.dim as f64;
    let norm = (beta / (2.0 * PI)).powf(0.5 * d);
    let gauss: Vec<f64> = (0..vg.len())
        .map(|iv| (-0.5 * beta * vg.speed_squared(iv)).exp())
        .collect();
    let mut values = Vec::with_capacity(phi.values.len() * gauss.len());
    for p in &phi.values {
        let c = norm * (beta * p).exp();
        values.extend(gauss.iter().map(|g| c * g));
    }
    PhaseDistribution::new(domain, species, values)
}
