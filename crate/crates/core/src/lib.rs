//! Exact arithmetic in real quadratic fields and explicit constructions of
//! rational approximations to quadratic irrationals whose numerators and
//! denominators split into two factors of prescribed size.

pub mod construct;
pub mod error;
pub mod interval;
pub mod json;
pub mod numtheory;
pub mod par;
pub mod pell;
pub mod qfield;
pub mod spectrum;
pub mod tracefact;

pub use error::{Error, Result};
pub use par::Execution;
pub use qfield::{FieldDesc, LogExpr, Precision, QuadElem};
