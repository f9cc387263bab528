use thiserror::Error;

/// Errors produced by the simulator.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("coupling g = {g} is below {epsilon}; the dressed basis is ill-defined")]
    DegenerateCoupling { g: f64, epsilon: f64 },

    #[error("dressed level `{0}` does not exist in this truncation")]
    UnknownLevel(String),

    #[error("invalid ablation: {0}")]
    InvalidAblation(String),

    #[error("unknown ablation preset `{0}`")]
    UnknownPreset(String),

    #[error("singular linear system: {0}")]
    SingularSystem(String),

    #[error(
        "harmonic truncation m_max = {m_max} not converged: |rho_edge|/|rho_0| = {ratio:.3e} exceeds {tolerance:.1e}"
    )]
    NonConvergent { m_max: usize, ratio: f64, tolerance: f64 },

    #[error("time step {dt} too large: step-doubling defect {defect:.3e} exceeds {tolerance:.1e}")]
    StepSizeTooLarge { dt: f64, defect: f64, tolerance: f64 },

    #[error("no sample of the mask falls inside the coupling window [{lo}, {hi}]")]
    EmptySupport { lo: f64, hi: f64 },

    #[error("closed-form extrema need gamma/kappa = 2 and g^2 > (2 + E^2)/2: {0}")]
    FormulaDomain(String),

    #[error("no interior peak in window [{lo}, {hi}]: {reason}")]
    NoInteriorPeak { lo: f64, hi: f64, reason: String },

    #[error("at g = {g}: {source}")]
    AtCoupling { g: f64, source: Box<Error> },

    #[error("at delta_tilde = {delta_tilde}: {source}")]
    AtDetuning { delta_tilde: f64, source: Box<Error> },

    #[error("malformed table line {line}: {reason}")]
    Table { line: usize, reason: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }

    pub(crate) fn at_coupling(self, g: f64) -> Self {
        Error::AtCoupling { g, source: Box::new(self) }
    }

    pub(crate) fn at_detuning(self, delta_tilde: f64) -> Self {
        Error::AtDetuning { delta_tilde, source: Box::new(self) }
    }
}
