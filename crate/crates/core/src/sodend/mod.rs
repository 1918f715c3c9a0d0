//! Second-order vector fields in n dimensions: time changes with
//! quasi-velocities, linearity detectors, Hamel symbols and energy-restricted
//! reduction of natural systems.

mod detect;
mod energy;
mod field;
mod hamel;

pub use detect::{
    check_fibre_linear, check_inhomogeneous_linear, check_linear, AffineCertificate, FibreLinearCheck,
    LinearityCheck, FIT_TOL, IDENTITY_TOL,
};
pub use energy::{
    energy_reduce, energy_reduce_with, find_energy_f, fit_quadratic, EnergyFunction, EnergyMode, EnergyReduction,
    NaturalSystem, QuadraticFit, DEFAULT_EXPONENTS, ENERGY_SAMPLES, QUADRATIC_TOL,
};
pub use field::{position_names, transform_system, velocity_names, BasicFunction, SodeField, MAX_PROBES, VELOCITY_BOX};
pub use hamel::{frame_apply, frame_bracket, hamel_expansion, hamel_symbol};
