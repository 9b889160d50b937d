//! Localization of sparse forced-oscillation sources in sampled linear
//! systems.
//!
//! The pipeline takes noisy sensor records of a plant `(A, B, C)` driven by a
//! few sinusoids at a few of its `m` inputs, and returns which inputs are
//! active at which frequencies, together with each sinusoid's amplitude and
//! phase:
//!
//! 1. [`spectrum::windowed_dft`] computes the scaled N-point DFT of the
//!    post-transient record,
//! 2. [`spectrum::detect_bins`] keeps the bins whose cross-channel peak
//!    exceeds a threshold `τ`,
//! 3. [`localizer::build_stacked`] evaluates the sampled plant's transfer
//!    matrix at those bins,
//! 4. [`classo::solve`] fits a complex ℓ1-regularized least-squares model per
//!    bin by coordinate descent, and
//! 5. [`localizer::recover_parameters`] reads locations, frequencies,
//!    amplitudes and phases off the nonzero coefficients.
//!
//! [`localizer::localize`] chains all of it. [`bench`] generates synthetic
//! plants and runs Monte-Carlo sweeps over the regularization level.

pub mod bench;
pub mod classo;
pub mod error;
pub mod expm;
pub mod io;
pub mod localizer;
pub mod lti;
pub mod spectrum;

pub use error::{Error, Result};
