//! Numerical laboratory for the expansion-normalized Euler equations on a
//! power-law expanding background `a(t) = t^alpha`, reduced to one periodic
//! spatial dimension.
//!
//! The crate is `no_std` (it needs `alloc`) and contains only the numerics:
//! state types, the pseudo-spectral operators, the RK4 integrator, energy
//! diagnostics, the breaking-time regressions and the Riemann-invariant
//! characteristics tracer. File formats, the CLI and parallel sweeps live in
//! the `eel` crate.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

mod error;
mod fft;
mod math;

pub mod characteristics;
pub mod diagnostics;
pub mod evolution;
pub mod params;
pub mod scaling;
pub mod spectral;
pub mod state;

pub use error::Error;
pub use fft::Fft;
pub use params::SimParams;
pub use state::FluidState;

pub type Result<T> = core::result::Result<T, Error>;
