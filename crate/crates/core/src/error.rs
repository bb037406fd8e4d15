use thiserror::Error;

/// A single violated parameter invariant.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    NegativeRate { name: &'static str, value: f64 },
    NegativeStart(f64),
    NonPositiveScale(f64),
    NonPositiveJumpRate(f64),
    NonFinite(&'static str),
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::NegativeRate { name, value } => write!(f, "{name} must be >= 0 (got {value})"),
            Violation::NegativeStart(v) => write!(f, "x0 must be >= 0 (got {v})"),
            Violation::NonPositiveScale(v) => write!(f, "y0 must be > 0 (got {v})"),
            Violation::NonPositiveJumpRate(v) => write!(f, "jump_gamma must be > 0 (got {v})"),
            Violation::NonFinite(name) => write!(f, "{name} is not finite"),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {}", join(.0))]
    InvalidParams(Vec<Violation>),

    #[error("custom jump law has no Laplace transform")]
    MissingLaplace,

    #[error("custom jump law has no sampler; it cannot be simulated")]
    MissingSampler,

    #[error("Laplace transform evaluated at or beyond its abscissa of convergence ({0})")]
    PoleEvaluation(String),

    #[error("jump-size moment of order {0} is infinite or undeclared")]
    InfiniteMoment(u32),

    #[error("moment order {0} not supported (only 1 and 2)")]
    UnsupportedMoment(u32),

    #[error("drift velocity must be > 0 for this quantity")]
    DriftRequired,

    #[error("exponential jump law required")]
    ExponentialLawRequired,

    #[error("no stationary law: the reset rate lambda_reset must be > 0")]
    NoStationaryLaw,

    #[error("unsupported regime: {0}")]
    UnsupportedRegime(String),

    #[error("domain error: {0}")]
    DomainError(String),

    #[error("time {t} outside simulated horizon [0, {horizon}]")]
    OutOfHorizon { t: f64, horizon: f64 },

    #[error("event budget of {budget} exhausted before exit ({censored} censored path(s))")]
    NoExitBudget { budget: u64, censored: u64 },

    #[error("self-consistency equation for the survival transform is singular at s = {0}")]
    SelfConsistencySingular(String),

    #[error("numerical inversion did not converge: {0}")]
    NonConvergence(String),

    #[error("Gaver-Stehfest order {0} loses precision in double arithmetic")]
    PrecisionLoss(usize),

    #[error("invalid inversion config: {0}")]
    InvalidConfig(String),

    #[error("quadrature failed: {0}")]
    QuadratureFailure(String),

    #[error("insufficient tail: {usable} usable bins, need at least {needed}")]
    InsufficientTail { usable: usize, needed: usize },

    #[error("config parse error: {0}")]
    Config(String),
}

fn join(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

pub type Result<T> = std::result::Result<T, Error>;
