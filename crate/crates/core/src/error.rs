use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-positive specific volume u = {0}")]
    NonPositiveVolume(f64),
    #[error("non-positive density rho = {0}")]
    NonPositiveDensity(f64),
    #[error("empty domain: total mass {0} is not positive")]
    EmptyDomain(f64),
    #[error("empty support")]
    EmptySupport,
    #[error("input must be positive, got {0}")]
    NonPositiveInput(f64),
    #[error("inconsistent wave pattern: {0}")]
    InconsistentPattern(String),
    #[error("fronts {0} and {1} are not adjacent")]
    NonAdjacentFronts(u64, u64),
    #[error("front {0} is not at the boundary")]
    NotAtBoundary(u64),
    #[error("no active front with id {0}")]
    UnknownFront(u64),
    #[error("time step too large: M*dt = {0} must be < 1")]
    TimeStepTooLarge(f64),
    #[error("root bracket failure: {0}")]
    BracketFailure(String),
    #[error("outgoing rarefaction of size {eps} exceeds eta = {eta} at t = {t}")]
    RarefactionTooLarge { eps: f64, eta: f64, t: f64 },
    #[error("need at least {needed} samples, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("velocity oscillation is identically zero")]
    AllZeroOscillation,
    #[error("degenerate jump at discontinuity {0}")]
    DegenerateJump(usize),
    #[error("schema error: {0}")]
    Schema(String),
    #[error("configuration rejected: {0}")]
    ConfigRejected(String),
    #[error("event cap of {cap} exceeded at t = {t}")]
    EventCapExceeded { cap: u64, t: f64 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
