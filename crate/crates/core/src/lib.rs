//! Spectral analysis and dissipative dynamics of a three-level open quantum
//! battery.
//!
//! The battery has a ground level `|0⟩`, a long-lived storage level `|1⟩` and
//! a short-lived excited level `|2⟩`. An engineered thermal reservoir with mean
//! occupation `N_th` pumps `|0⟩ ↔ |2⟩`, and a coherent drive of Rabi frequency
//! `Ω` (detuning `δ`) transfers population `|2⟩ → |1⟩`.
//!
//! The crate is `no_std` and only needs `alloc`. Modules, bottom-up:
//!
//! - [`linalg`]: small dense complex matrices, LU, QR eigensolver, matrix
//!   exponential, singular values.
//! - [`model`]: parameters, density matrices, the master-equation right-hand
//!   side and scalar observables.
//! - [`liouvillian`]: the 9×9 superoperator, its block structure and the
//!   vectorization convention.
//! - [`spectrum`]: biorthogonal eigendecomposition, gaps, steady state and the
//!   spectral expansion.
//! - [`dynamics`]: propagation, relaxation time, charging power and decay
//!   envelope fits.
//! - [`slow_sector`]: the reduced zero-detuning generator, its cubic, Cardano
//!   roots, exceptional-point location and the large-`N_th` asymptote.
//!
//! Time is measured in microseconds, rates in μs⁻¹, `Ω` and `δ` in rad/μs and
//! level energies in eV.
#![no_std]
// NaN must fail the range checks, so `!(x > 0.0)` is deliberate
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod dynamics;
pub mod error;
pub mod linalg;
pub mod liouvillian;
pub mod model;
pub mod slow_sector;
pub mod spectrum;

pub use error::{Error, Result};
pub use linalg::{CMatrix, C64};
pub use model::{DensityMatrix, Observables, SystemParams};
