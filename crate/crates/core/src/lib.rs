//! Fourth-order cumulant Gaussianity test for telling OFDM signals apart from
//! single-carrier PSK/FSK/QAM signals.
//!
//! The received baseband is reduced to its real part, diagonal-lag fourth-order
//! cumulants `c4(l, l, 0)` for `l = 0..=M` are estimated together with their
//! covariance matrix, and the quadratic form `c' * cov^+ * c` is compared with a
//! chi-squared threshold. OFDM samples are close to Gaussian, so the statistic
//! stays small; single-carrier signals push it above the threshold.
//!
//! The crate also contains the simulation pieces used to evaluate the detector:
//! waveform synthesis ([`waveforms`]), a multipath/offset/noise channel
//! ([`channel`]) and a Monte-Carlo sweep runner ([`harness`]).

// `!(x > 0.0)` style checks are used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod covariance;
pub mod detector;
mod error;
pub mod harness;
pub mod hos;
pub mod rng;
pub mod waveforms;

pub use error::{Error, Result};
