//! Spectral estimation, zero-phase Butterworth bandpass filtering and
//! relative-delay tools shared by the estimators.

pub(crate) mod delay;
pub(crate) mod fft;
mod filter;
mod psd;

pub use delay::{compensate_delay, estimate_delay, parabolic_peak, shift_samples};
pub use filter::{butterworth_bandpass, FilterSpec};
pub use psd::{periodogram, psd_estimate, Psd, Window};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DspError {
    #[error("invalid filter: {0}")]
    Spec(String),
    #[error("need at least {needed} sets, got {got}")]
    TooFewSets { needed: usize, got: usize },
    #[error("traces must be non-empty and of equal length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("no cross-correlation peak: prominence {prominence:.2} below 3x background rms")]
    NoPeak { prominence: f64 },
    #[error("delay of {delay_samples:.2} samples exceeds 10% of the {len}-sample trace")]
    DelayTooLarge { delay_samples: f64, len: usize },
}
