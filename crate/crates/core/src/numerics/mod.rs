//! Numerical kernels: quadrature, antiderivatives, inversion, initial-value
//! integration and affine fitting.

mod fit;
mod function;
mod invert;
mod ivp;
mod quad;

pub use fit::{fit_affine, AffineFit};
pub use function::{antiderivative, antiderivative_with_knots, NumericFunction, DEFAULT_KNOTS};
pub use invert::{invert_monotone, invert_monotone_with_slope};
pub use ivp::{solve_ivp, solve_ivp_with, IvpOptions, IvpStats, Termination, Trajectory};
pub use quad::{quad, quad_detailed, QuadResult, MAX_PANELS};
