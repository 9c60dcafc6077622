use num_complex::Complex64;
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("denominator is the zero polynomial")]
    ZeroDenominator,
    #[error("1 - G22*c vanishes identically; the lower LFT is not defined")]
    SingularLoop,
    #[error("evaluation point {s} is within tolerance of a pole")]
    PoleProximity { s: Complex64 },
    #[error("function is improper (numerator degree {num} > denominator degree {den})")]
    ImproperFunction { num: usize, den: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("eigenvalue iteration failed to converge on a {0}x{0} matrix")]
    EigenFailure(usize),
    #[error("evaluation failed at omega = {omega}: {reason}")]
    EvaluationFailure { omega: f64, reason: String },

    #[error("biquadratic test is degenerate: b0 = b1 = b2 = 0")]
    DegenerateDenominator,
    #[error("feedthrough D + D^T is not positive definite ({0})")]
    IndefiniteFeedthrough(f64),
    #[error("p is not stable (pole or characteristic root at {0})")]
    UnstableP(Complex64),
    #[error("p(0) = {0} is numerically zero")]
    ZeroDc(f64),
    #[error("no gamma down to {0:e} gives class membership")]
    InfeasibleAtSeed(f64),
    #[error("invalid multiplier: {0}")]
    InvalidMultiplier(String),
    #[error("theta = {theta} cannot be fitted with the stage budget (max phase error {error_deg:.3} deg)")]
    InfeasibleTheta { theta: f64, error_deg: f64 },
    #[error("input {index} is not ESPR (grid margin {margin:e})")]
    NotEsprInput { index: usize, margin: f64 },
    #[error("no passivity multiplier found up to T = {0:e}")]
    SearchExhausted(f64),
    #[error("state-space method requires a rational function")]
    NotRational,

    #[error("bus {bus}: {source}")]
    Bus { bus: usize, source: Box<Error> },
    #[error("bus {0} has no incident lines (gamma_i = 0)")]
    IsolatedBus(usize),
    #[error("eliminated block of the Laplacian is singular")]
    SingularInterior,
    #[error("index out of range or invalid: {0}")]
    Index(String),
    #[error("bus {0} carries a delay model; use the simulator instead")]
    DelayModelPresent(usize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("no violation of the decentralized condition was found")]
    NoViolation,
    #[error("interpolation target has non-positive real part ({0})")]
    NonPositiveTarget(Complex64),
    #[error("interpolant failed ESPR verification: {0}")]
    InterpolationFailure(String),

    #[error("droop constant r = {r} exceeds r_max = {r_max}")]
    InfeasibleR { r: f64, r_max: f64 },
    #[error("local loop m s + d + e^(-s tau)/r has {0} right half-plane roots")]
    UnstableLocalLoop(i64),
}

impl Error {
    pub fn at_bus(self, bus: usize) -> Self {
        Error::Bus {
            bus,
            source: Box::new(self),
        }
    }
}
