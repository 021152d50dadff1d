//! Simulation and analysis of macroscopic Cauchy-Schwarz inequality tests on
//! bright twin beams produced by seeded four-wave mixing.
//!
//! The crate is organized bottom-up:
//!
//! * [`theory`]: closed-form Gaussian predictions for the seeded two-mode
//!   squeezer, a truncated Fock-space oracle, and the broadband photocurrent
//!   cross-spectral model.
//! * [`synth`]: four-channel digitized photodetector traces realizing a
//!   [`synth::FwmModel`].
//! * [`dsp`]: periodograms, zero-phase Butterworth bandpass, delay tools.
//! * [`estimators`]: g² curves, violation factor statistics, SQL-normalized
//!   spectra and both CSI verdicts.
//! * [`harness`]: scenario presets, configuration, the `CSTF` trace container
//!   and report writers used by the `csilab` binary.

pub mod dsp;
pub mod estimators;
pub mod harness;
pub mod synth;
pub mod theory;
