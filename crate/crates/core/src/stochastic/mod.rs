//! Spectral Wiener noise, the Stratonovich frame equation, the stochastic
//! nonlinear heat equation and the construction of weak SLLG solutions.

mod frame;
mod noise;
mod she;
mod sllg;

pub use frame::{frame_time_step, heun_average, rotate_node, time_generator};
pub use noise::{basis_function, CoefficientProfile, DerivativeRule, Increments, NoiseFields, NoiseModel};
pub use she::{
    c_field, internal_coeffs, phase_increment, stochastic_heat_step, InternalCoeffs, SheParams,
    SheStep,
};
pub use sllg::{assemble_wtilde, run_ensemble, run_sllg, EnsembleSpec, SllgConfig, SllgPath};
