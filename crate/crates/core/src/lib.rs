//! Numerics for a one-dimensional wave segment coupled through its
//! endpoint to a heat half-line: the generator's point spectrum, the
//! closed-form resolvent and its norm scaling along the imaginary axis,
//! energy-dissipating time integration, and the admissibility classes that
//! govern the sharp `t^{-2}` energy decay.
//!
//! Everything is generic over the floating scalar (`f32` or `f64`) through
//! [`scalar::Real`]; the `*64` aliases below fix `f64`, which all shipped
//! tools use.

pub mod admissible;
mod banded;
pub mod csvio;
pub mod error;
pub mod fd;
pub mod fit;
pub mod grid;
pub mod quad;
pub mod resolvent;
pub mod scalar;
pub mod spectral;
pub mod state;
pub mod synth;
pub mod timedomain;

pub use error::{Error, Result};
pub use scalar::{cplx, real, Cplx, Real};

/// Complex double.
pub type C64 = Cplx<f64>;
/// Grid function over `f64`.
pub type GridFunction64 = grid::GridFunction<f64>;
/// State triple over `f64`.
pub type State64 = state::State<f64>;
/// Simulation configuration over `f64`.
pub type SimConfig64 = timedomain::SimConfig<f64>;
/// Power-law fit over `f64`.
pub type DecayFit64 = fit::DecayFit<f64>;
/// Resolvent scan point over `f64`.
pub type ScanPoint64 = resolvent::ScanPoint<f64>;
/// Root record over `f64`.
pub type RootRecord64 = spectral::RootRecord<f64>;
