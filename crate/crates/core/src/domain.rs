//! Uniform cell-centered grids in space and velocity.
//!
//! Every quadrature in the crate is the midpoint rule on these grids, so a
//! sum of cell values times the cell measure is the integral.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MIN_CELLS: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Geometry {
    /// Periodic box with one length per spatial dimension (1 or 2 dims).
    Periodic { lengths: Vec<f64> },
    /// The interval (0, L) with specular walls; one spatial dimension only.
    Interval { length: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Boundary {
    Periodic,
    /// Specular reflection for particles, homogeneous Neumann for the potential.
    Specular,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec {
    pub geometry: Geometry,
    /// Cells per spatial dimension.
    pub n_x: usize,
    pub velocity_dim: usize,
    pub v_max: f64,
    /// Cells per velocity dimension.
    pub n_v: usize,
    pub lambda_d: f64,
}

impl DomainSpec {
    pub fn periodic_1d(length: f64, n_x: usize, v_max: f64, n_v: usize) -> Self {
        DomainSpec {
            geometry: Geometry::Periodic {
                lengths: vec![length],
            },
            n_x,
            velocity_dim: 1,
            v_max,
            n_v,
            lambda_d: 1.0,
        }
    }

    pub fn interval_1d(length: f64, n_x: usize, v_max: f64, n_v: usize) -> Self {
        DomainSpec {
            geometry: Geometry::Interval { length },
            n_x,
            velocity_dim: 1,
            v_max,
            n_v,
            lambda_d: 1.0,
        }
    }

    pub fn spatial_dim(&self) -> usize {
        match &self.geometry {
            Geometry::Periodic { lengths } => lengths.len(),
            Geometry::Interval { .. } => 1,
        }
    }

    /// Collects every violated invariant instead of stopping at the first.
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        let dx = self.spatial_dim();
        match &self.geometry {
            Geometry::Periodic { lengths } => {
                if lengths.is_empty() || lengths.len() > 2 {
                    v.push(format!(
                        "periodic geometry needs 1 or 2 lengths, got {}",
                        lengths.len()
                    ));
                }
                for (i, l) in lengths.iter().enumerate() {
                    if !(l.is_finite() && *l > 0.0) {
                        v.push(format!("length[{i}] = {l} must be positive"));
                    }
                }
            }
            Geometry::Interval { length } => {
                if !(length.is_finite() && *length > 0.0) {
                    v.push(format!("interval length {length} must be positive"));
                }
            }
        }
        if self.n_x < MIN_CELLS {
            v.push(format!("n_x = {} must be at least {MIN_CELLS}", self.n_x));
        }
        if self.n_v < MIN_CELLS {
            v.push(format!("n_v = {} must be at least {MIN_CELLS}", self.n_v));
        }
        if !(1..=2).contains(&self.velocity_dim) {
            v.push(format!(
                "velocity_dim = {} must be 1 or 2",
                self.velocity_dim
            ));
        }
        if self.velocity_dim < dx {
            v.push(format!(
                "velocity_dim = {} must be >= spatial dim {dx}",
                self.velocity_dim
            ));
        }
        if !(self.v_max.is_finite() && self.v_max > 0.0) {
            v.push(format!("v_max = {} must be positive", self.v_max));
        }
        if !(self.lambda_d.is_finite() && self.lambda_d > 0.0) {
            v.push(format!("lambda_d = {} must be positive", self.lambda_d));
        }
        v
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidDomain(v.join("; ")))
        }
    }
}

/// Cell-centered spatial grid, row-major over dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialGrid {
    pub boundary: Boundary,
    pub shape: Vec<usize>,
    pub lengths: Vec<f64>,
    pub spacing: Vec<f64>,
}

impl SpatialGrid {
    pub fn dim(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cell_measure(&self) -> f64 {
        self.spacing.iter().product()
    }

    pub fn total_measure(&self) -> f64 {
        self.lengths.iter().product()
    }

    /// Cell centers along one axis.
    pub fn centers(&self, axis: usize) -> Vec<f64> {
        let h = self.spacing[axis];
        (0..self.shape[axis])
            .map(|k| (k as f64 + 0.5) * h)
            .collect()
    }

    /// Stride of `axis` in the flat index.
    pub fn stride(&self, axis: usize) -> usize {
        self.shape[axis + 1..].iter().product()
    }

    /// Coordinates of the flat cell `idx`.
    pub fn position(&self, idx: usize) -> Vec<f64> {
        let mut rem = idx;
        let mut out = vec![0.0; self.dim()];
        for axis in (0..self.dim()).rev() {
            let k = rem % self.shape[axis];
            rem /= self.shape[axis];
            out[axis] = (k as f64 + 0.5) * self.spacing[axis];
        }
        out
    }

    /// Samples a function of position at every cell center.
    pub fn sample(&self, f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
        (0..self.len()).map(|i| f(&self.position(i))).collect()
    }

    /// Midpoint quadrature over the domain.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.len());
        values.iter().sum::<f64>() * self.cell_measure()
    }
}

/// Cell-centered velocity grid on [-v_max, v_max]^d, symmetric under v -> -v.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityGrid {
    pub dim: usize,
    pub n: usize,
    pub v_max: f64,
    pub spacing: f64,
}

impl VelocityGrid {
    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cell_measure(&self) -> f64 {
        self.spacing.powi(self.dim as i32)
    }

    pub fn total_measure(&self) -> f64 {
        (2.0 * self.v_max).powi(self.dim as i32)
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.n)
            .map(|k| -self.v_max + (k as f64 + 0.5) * self.spacing)
            .collect()
    }

    pub fn stride(&self, axis: usize) -> usize {
        self.n.pow((self.dim - 1 - axis) as u32)
    }

    /// Velocity vector of flat velocity cell `idx`.
    pub fn velocity(&self, idx: usize) -> Vec<f64> {
        let mut rem = idx;
        let mut out = vec![0.0; self.dim];
        for axis in (0..self.dim).rev() {
            let k = rem % self.n;
            rem /= self.n;
            out[axis] = -self.v_max + (k as f64 + 0.5) * self.spacing;
        }
        out
    }

    /// Component `axis` of the velocity of flat cell `idx`.
    pub fn component(&self, idx: usize, axis: usize) -> f64 {
        let k = (idx / self.stride(axis)) % self.n;
        -self.v_max + (k as f64 + 0.5) * self.spacing
    }

    /// Flat index of the cell whose `axis` component is mirrored.
    pub fn mirror(&self, idx: usize, axis: usize) -> usize {
        let s = self.stride(axis);
        let k = (idx / s) % self.n;
        idx - k * s + (self.n - 1 - k) * s
    }

    pub fn speed_squared(&self, idx: usize) -> f64 {
        self.velocity(idx).iter().map(|v| v * v).sum()
    }
}

/// Both grids plus the physical parameters they were built from.
#[derive(Debug, Clone, PartialEq)]
pub struct Domain {
    pub spec: DomainSpec,
    pub space: Arc<SpatialGrid>,
    pub velocity: Arc<VelocityGrid>,
}

impl Domain {
    pub fn new(spec: DomainSpec) -> Result<Arc<Self>> {
        let (space, velocity) = build_domain(&spec)?;
        Ok(Arc::new(Domain {
            spec,
            space: Arc::new(space),
            velocity: Arc::new(velocity),
        }))
    }

    pub fn lambda_d(&self) -> f64 {
        self.spec.lambda_d
    }

    pub fn velocity_dim(&self) -> usize {
        self.velocity.dim
    }

    pub fn phase_cell_measure(&self) -> f64 {
        self.space.cell_measure() * self.velocity.cell_measure()
    }
}

pub fn build_domain(spec: &DomainSpec) -> Result<(SpatialGrid, VelocityGrid)> {
    spec.validate()?;
    let (boundary, lengths) = match &spec.geometry {
        Geometry::Periodic { lengths } => (Boundary::Periodic, lengths.clone()),
        Geometry::Interval { length } => (Boundary::Specular, vec![*length]),
    };
    let shape = vec![spec.n_x; lengths.len()];
    let spacing = lengths.iter().map(|l| l / spec.n_x as f64).collect();
    let space = SpatialGrid {
        boundary,
        shape,
        lengths,
        spacing,
    };
    let velocity = VelocityGrid {
        dim: spec.velocity_dim,
        n: spec.n_v,
        v_max: spec.v_max,
        spacing: 2.0 * spec.v_max / spec.n_v as f64,
    };
    Ok((space, velocity))
}
