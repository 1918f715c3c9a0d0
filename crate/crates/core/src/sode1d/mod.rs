//! Scalar second-order equations quadratic in the velocity and their
//! generalised Sundman transformations.

mod linearize;
mod sode;
mod transform;

pub use linearize::{
    function_json, linearize, linearize_rhs, linearize_split, transform_json, Linearisation, LinearisationOutcome,
    Normalization, EXPORT_KNOTS,
};
pub use sode::{normalize, Normalized, QDiagnostics, QuadraticSode, POSITION, PROBE_POINTS, VELOCITY};
pub use transform::{compose, FactorOrder, Factors, GenSundman};
pub(crate) use sode::probe as probe_function;
