use thiserror::Error;

/// Failures raised by the numerical and bookkeeping layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("ambiguous lift: coordinate {coord} jumps by {jump:.6} between samples {index} and {next}", next = index + 1)]
    AmbiguousLift { index: usize, coord: usize, jump: f64 },

    #[error("field factor {factor} is resonant: tau*a ranges over [{lo:.9}, {hi:.9}], which is not inside any (2 pi k, 2 pi (k+1))")]
    Resonant { factor: usize, lo: f64, hi: f64 },

    #[error("matrix is not almost complex: max |J^2 + Id| = {0:.3e}")]
    NotAlmostComplex(f64),

    #[error("almost complex structure is not compatible with dlambda: {0}")]
    NotCompatible(String),

    #[error("step size underflow at t = {t}")]
    StepSizeUnderflow { t: f64 },

    #[error("trajectory is not periodic: endpoint gap {gap:.3e}")]
    NotPeriodic { gap: f64 },

    #[error("loop has winding {0:?}; the action is only single-valued on contractible loops")]
    NonContractible(Vec<i64>),

    #[error("loop is not a critical point: gradient norm {0:.3e}")]
    NotCritical(f64),

    #[error("index counts did not stabilise up to K = {0}")]
    NotConverged(usize),

    #[error("nullity {nullity} is inconsistent with the declared nondegeneracy ({nondegenerate})")]
    InconsistentNullity { nullity: usize, nondegenerate: bool },

    #[error("line search stalled at iteration {0}")]
    LineSearchStall(usize),

    #[error("audit requires nondegenerate orbits with a grading; found a degenerate or ungraded orbit")]
    DegenerateOrbitPresent,

    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
