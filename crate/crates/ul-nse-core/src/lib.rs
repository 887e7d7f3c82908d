//! Numerical toolbox for the damped Navier-Stokes equations on a large
//! periodic box: spectral fields and operators, weighted and uniformly-local
//! norms, the whole-space pressure-gradient operator with its kernel
//! splitting, divergence-free approximation via stream functions,
//! Littlewood-Paley / Besov machinery, and a vorticity-form time stepper
//! with estimate diagnostics.

pub mod divfree;
pub mod error;
mod fft;
pub mod fields;
pub mod littlewood;
pub mod pressure;
pub mod solver;
pub mod weights;

pub use error::{Error, Result};
pub use fields::{
    ball_norm, biot_savart, box_norm, read_snapshot, write_snapshot, Grid, SampledField,
    ScalarField, VectorField,
};
pub use weights::{EstimateReport, WeightFamily};
