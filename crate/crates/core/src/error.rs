use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("exponent ordering violated: need 0 < s <= t < 1 and 1 < p <= q < inf ({0})")]
    OrderViolation(String),
    #[error(
        "sobolev conjugate of {which} is not determined by the exponents (sp >= n); supply an override in (p, inf)"
    )]
    ConjugateRequired { which: &'static str },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("no grid node inside the sampled region")]
    EmptySample,
    #[error("hölder data (alpha, [a]_alpha) is required for this operation")]
    MissingHolderData,
    #[error("coefficient hypothesis violated: {0}")]
    CoefficientViolation(String),
    #[error("kernel hypothesis violated: {0}")]
    KernelViolation(String),

    #[error("grid too fine: {per_axis} cells per axis exceeds the limit of {limit}")]
    ResolutionTooFine { per_axis: usize, limit: usize },
    #[error("domain does not fit inside the box with the required margin ({margin} < {required})")]
    DomainTouchesBoundary { margin: f64, required: f64 },
    #[error("pair weight requested for the diagonal pair ({0}, {0})")]
    DiagonalPair(usize),
    #[error("exterior datum is not constant beyond the truncation box")]
    NonconstantExteriorBeyondBox,
    #[error("node function has {got} values, grid has {expected} nodes")]
    LengthMismatch { expected: usize, got: usize },
    #[error("non-finite value at node {0}")]
    NonfiniteValue(usize),
    #[error("node {0} is exterior and the function has a frozen exterior")]
    FrozenExterior(usize),

    #[error("density evaluated at coincident points")]
    CoincidentPoints,
    #[error("empty node set")]
    EmptySet,
    #[error("ball of radius {radius} is not contained in the truncation box")]
    BallOutsideBox { radius: f64 },
    #[error("test function is nonzero at exterior node {0}")]
    TestFunctionNotCompactlySupported(usize),

    #[error("maximum iterations ({0}) exceeded")]
    MaxItersExceeded(usize),
    #[error("non-finite energy or gradient encountered at iteration {0}")]
    NonfiniteEncountered(usize),
    #[error("direct solver requires p = q = 2 (got p = {p}, q = {q})")]
    NotQuadratic { p: f64, q: f64 },
    #[error("linear system is singular")]
    SingularSystem,

    #[error("cutoff is not supported strictly inside the ball or leaves [0, 1]: {0}")]
    CutoffUnsupported(String),
    #[error("ball is not contained in the domain")]
    BallOutsideDomain,
    #[error("function is negative inside the ball (min {0})")]
    NegativeInBall(f64),
    #[error("invalid radii: {0}")]
    BadRadii(String),
    #[error("xi must exceed 1 (got {0})")]
    BadXi(f64),
    #[error("fewer than three usable oscillation levels ({0})")]
    TooFewLevels(usize),
    #[error("kappa = {0} must exceed 1")]
    DegenerateKappa(f64),
    #[error("empty ball")]
    EmptyBall,
    #[error("inclusion between equal orders requires p = q")]
    DegenerateOrder,
    #[error("structural assumption violated: {0}")]
    AssumptionViolated(String),
    #[error("radii out of range: {0}")]
    RadiiOutOfRange(String),

    #[error("io: {0}")]
    Io(String),
    #[error("parse: {0}")]
    Parse(String),
    #[error("solution grid does not match the configured grid: {0}")]
    GridMismatch(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
