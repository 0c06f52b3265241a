use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("invalid field discriminant {0}: {1}")]
    InvalidDiscriminant(String, &'static str),

    #[error("field mismatch: {0} is not in Q(sqrt({1}))")]
    FieldMismatch(String, String),

    #[error("division by zero")]
    DivisionByZero,

    #[error("cannot parse quadratic element {input:?}: {reason}")]
    Parse { input: String, reason: String },

    #[error("element is not an algebraic integer: {0}")]
    NotIntegral(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("comparison undecidable at precision cap of {cap_bits} bits (possible exact equality)")]
    Undecidable { cap_bits: u64 },

    #[error("logarithm of zero in magnitude expression")]
    LogOfZero,

    #[error("non-exact division: {0}")]
    NonExactDivision(String),

    #[error("zero trace encountered in a denominator (divisor {0})")]
    ZeroTrace(u64),

    #[error("no norm -1 solution to the Pell equation for D = {0}")]
    NoNegativePell(String),

    #[error("moduli {0} and {1} are not coprime")]
    NotCoprime(String, String),

    #[error("exponent {0} exceeds the supported range")]
    ExponentTooLarge(String),

    #[error("spectrum enclosures overlap at {bits} bits and the precision cap was reached")]
    PrecisionExhausted { bits: u64 },

    #[error("internal identity check failed: {0}")]
    IdentityFailed(String),
}
