//! Toolkit for feedback-suppressed ("squashed") light.
//!
//! * [`spectra`]: closed-form in-loop and free-field quadrature spectra.
//! * [`loop_sim`], [`welch`], [`stability`]: a stochastic simulation of the
//!   homodyne feedback loop and the spectral estimator used to check it.
//! * [`liouville`]: 4×4 superoperators for a two-level atom in a squeezed
//!   and/or squashed bath, steady states and regression-theorem spectra.
//! * [`bloch`]: closed-form Bloch rates, trajectories and fluorescence.
//! * [`acceptance`]: the end-to-end verification checks.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod acceptance;
pub mod bloch;
pub mod error;
pub mod liouville;
pub mod loop_sim;
pub mod spectra;
pub mod stability;
pub mod welch;

pub use error::{Error, Result};
