use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("total mass must be positive (got {0})")]
    ZeroMass(f64),

    #[error("mass mismatch: integral of n_I is {integral}, expected m0 = {m0}")]
    MassMismatch { integral: f64, m0: f64 },

    #[error("Newton did not converge after {iters} iterations (residual {residual:e})")]
    NewtonNonConvergence { iters: usize, residual: f64 },

    #[error("exponential overflow: beta*phi reached {0:e}; reduce the time step")]
    ExpOverflow(f64),

    #[error("linear solve failed: {0}")]
    LinearSolve(String),

    #[error("beta bracket expansion failed: E(beta_hi = {beta_hi:e}) = {energy:e} still above E1 = {e1:e}")]
    BracketExpansion { beta_hi: f64, energy: f64, e1: f64 },

    #[error("energy target E1 = {0:e} must be positive")]
    NonPositiveEnergy(f64),

    #[error("CFL violation: {0}")]
    Cfl(String),

    #[error("velocity CFL violation: |a*dt| = {shift:e} exceeds v_max = {v_max:e}")]
    VelocityCfl { shift: f64, v_max: f64 },

    #[error("velocity cutoff lost {lost:e} mass, above the limit {limit:e}")]
    SupportLoss { lost: f64, limit: f64 },

    #[error("compatibility violated: initial kinetic energy {kinetic:e} exceeds a*E0 = {bound:e} (a < 1 required)")]
    Compatibility { kinetic: f64, bound: f64 },

    #[error("kinetic energy {kinetic:e} reached the energy budget E0 = {e0:e}; the compatibility condition forbids this")]
    EnergyExhausted { kinetic: f64, e0: f64 },

    #[error("incompatible charge: ion mass {ions:e} vs electron mass {electrons:e}")]
    IncompatibleCharge { ions: f64, electrons: f64 },

    #[error("electron substep count {needed} exceeds max_substeps = {max}")]
    TooManySubsteps { needed: usize, max: usize },

    #[error("characteristic hit {0} reflections in one step")]
    TooManyReflections(usize),

    #[error("config line {line}: {message}")]
    ConfigSyntax { line: usize, message: String },

    #[error("invalid config:\n  {}", .0.join("\n  "))]
    Config(Vec<String>),

    #[error("snapshot format: {0}")]
    Snapshot(String),

    #[error("at t = {t}: {source}")]
    AtTime {
        t: f64,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn at_time(self, t: f64) -> Self {
        match self {
            e @ Error::AtTime { .. } => e,
            e => Error::AtTime {
                t,
                source: Box::new(e),
            },
        }
    }
}
