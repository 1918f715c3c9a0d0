pub mod config;
pub mod demo;
pub mod document;
pub mod error;
pub mod expr;
pub mod fixtures;
pub mod interval;
pub mod numerics;
pub mod sode1d;
pub mod sodend;
pub mod verify;

pub use error::{Error, Result};
pub use expr::{differentiate, parse, simplify, Expr, ScalarFunction};
pub use interval::Interval;
pub use config::{OutputFormat, RunConfig};
