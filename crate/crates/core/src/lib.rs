//! Full-duplex multiuser MIMO transmit-power minimisation.
//!
//! The crate builds conventional SDR beamformers, constructive-interference
//! (CI) symbol-level precoders for PSK and 16-QAM, weighted-Tchebycheff
//! trade-off problems between downlink and uplink power, and worst-case
//! robust variants under norm-bounded CSI errors. All problems are lowered to
//! a solver-agnostic [`conic::ConicProblem`] and solved by an embedded
//! interior-point backend.
//!
//! Module map:
//! - [`model`]: channels, constellations, receivers and the evaluators every
//!   other module is checked against.
//! - [`conic`]: standard-form cone programs, the solver adapter and rank-one
//!   extraction for semidefinite relaxations.
//! - [`formulations`]: the nine perfect-CSI problems and the trade-off wrapper.
//! - [`robust`]: worst-case robust trade-off problems and sampled verification.
//! - [`oracles`]: independent correctness checks.
//! - [`experiments`]: Monte Carlo harness.

// Links the system OpenBLAS used by the solver's PSD cone.
extern crate openblas_src;

pub mod conic;
pub mod experiments;
pub mod formulations;
pub mod model;
pub mod oracles;
pub mod robust;

pub use nalgebra::Complex;

/// Complex scalar used throughout.
pub type C64 = Complex<f64>;
/// Dense complex column vector.
pub type CVector = nalgebra::DVector<C64>;
/// Dense complex matrix.
pub type CMatrix = nalgebra::DMatrix<C64>;

/// Converts decibels to a linear ratio.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Converts a linear ratio to decibels.
pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}
