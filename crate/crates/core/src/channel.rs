//! Received-signal model: sample-spaced multipath, carrier frequency and phase
//! offset, then additive white Gaussian noise.
//!
//! Each stage takes its own seed so the channel, phase and noise draws are
//! independent streams.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::waveforms::SampledSignal;
use crate::{Error, Result};

const POWER_SUM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fading {
    /// Deterministic taps `sqrt(power)`.
    Static,
    /// Independent complex Gaussian taps per coherence block.
    PerSymbolRayleigh,
}

/// Tapped-delay-line channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelProfile {
    pub n_taps: usize,
    pub tap_delays_samples: Vec<usize>,
    pub tap_power_profile: Vec<f64>,
    pub fading: Fading,
    /// Samples per block over which the taps stay constant.
    pub coherence_samples: usize,
}

impl ChannelProfile {
    /// Single static unit tap.
    pub fn identity() -> Self {
        Self {
            n_taps: 1,
            tap_delays_samples: vec![0],
            tap_power_profile: vec![1.0],
            fading: Fading::Static,
            coherence_samples: 1,
        }
    }

    /// `n_taps` consecutive sample-spaced Rayleigh taps with powers
    /// proportional to `exp(-m / decay)`.
    pub fn exponential_rayleigh(n_taps: usize, decay: f64, coherence_samples: usize) -> Self {
        let raw: Vec<f64> = (0..n_taps).map(|m| (-(m as f64) / decay).exp()).collect();
        let total: f64 = raw.iter().sum();
        Self {
            n_taps,
            tap_delays_samples: (0..n_taps).collect(),
            tap_power_profile: raw.iter().map(|p| p / total).collect(),
            fading: Fading::PerSymbolRayleigh,
            coherence_samples,
        }
    }

    /// Four Rayleigh taps, unit decay, constant over one 160-sample OFDM symbol.
    pub fn default_fading() -> Self {
        Self::exponential_rayleigh(4, 1.0, 160)
    }

    pub fn max_delay(&self) -> usize {
        self.tap_delays_samples.last().copied().unwrap_or(0)
    }

    pub fn validate(&self) -> Result<()> {
        if self.tap_delays_samples.is_empty() {
            return Err(Error::config("channel profile has no taps"));
        }
        if self.tap_delays_samples.len() != self.n_taps || self.tap_power_profile.len() != self.n_taps {
            return Err(Error::config(format!(
                "n_taps = {} but {} delays and {} powers given",
                self.n_taps,
                self.tap_delays_samples.len(),
                self.tap_power_profile.len()
            )));
        }
        if self.tap_delays_samples[0] != 0 {
            return Err(Error::config("first tap delay must be 0"));
        }
        if self.tap_delays_samples.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::config("tap delays must be strictly increasing"));
        }
        if self.tap_power_profile.iter().any(|&p| !(p > 0.0)) {
            return Err(Error::config("tap powers must be positive"));
        }
        let total: f64 = self.tap_power_profile.iter().sum();
        if (total - 1.0).abs() > POWER_SUM_TOL {
            return Err(Error::config(format!("tap powers sum to {total}, not 1")));
        }
        if self.coherence_samples == 0 {
            return Err(Error::config("coherence_samples must be positive"));
        }
        Ok(())
    }
}

impl Default for ChannelProfile {
    fn default() -> Self {
        Self::identity()
    }
}

/// Offsets and noise level applied after the multipath stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImpairmentConfig {
    /// Carrier frequency offset in cycles per sample.
    pub cfo_normalized: f64,
    pub phase_offset_rad: f64,
    /// Standard deviation of the per-sample phase random walk.
    #[serde(default)]
    pub phase_walk_std: f64,
    /// Signal-to-noise ratio; `inf` disables the noise stage.
    pub snr_db: f64,
    #[serde(default)]
    pub seed: u64,
}

impl Default for ImpairmentConfig {
    fn default() -> Self {
        Self {
            // 10 Hz at 1 MHz sampling.
            cfo_normalized: 1e-5,
            phase_offset_rad: 0.0,
            phase_walk_std: 0.0,
            snr_db: f64::INFINITY,
            seed: 0,
        }
    }
}

impl ImpairmentConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.cfo_normalized.abs() < 0.5) {
            return Err(Error::config(format!(
                "normalized CFO must satisfy |cfo| < 0.5, got {}",
                self.cfo_normalized
            )));
        }
        if !(self.phase_walk_std >= 0.0 && self.phase_walk_std.is_finite()) {
            return Err(Error::config("phase_walk_std must be finite and non-negative"));
        }
        if !self.phase_offset_rad.is_finite() || self.snr_db.is_nan() || self.snr_db == f64::NEG_INFINITY {
            return Err(Error::config("phase offset and SNR must be numbers"));
        }
        Ok(())
    }
}

fn complex_gaussian<R: Rng>(rng: &mut R, variance: f64) -> Complex64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re * s, im * s)
}

/// Block-wise tapped delay line: `y(i) = sum_m h_m x(i - d_m)`, with the taps
/// of the block containing `i`. Samples before the start count as zero.
pub fn apply_multipath(sig: &SampledSignal, prof: &ChannelProfile, seed: u64) -> Result<SampledSignal> {
    prof.validate()?;
    let x = sig.samples();
    if prof.max_delay() >= x.len() {
        return Err(Error::config(format!(
            "maximum tap delay {} is not shorter than the signal ({} samples)",
            prof.max_delay(),
            x.len()
        )));
    }
    let mut rng = crate::rng::rng_from_seed(seed);
    let fixed: Vec<Complex64> = prof
        .tap_power_profile
        .iter()
        .map(|p| Complex64::new(p.sqrt(), 0.0))
        .collect();
    let mut out = Vec::with_capacity(x.len());
    for block_start in (0..x.len()).step_by(prof.coherence_samples) {
        let taps = match prof.fading {
            Fading::Static => fixed.clone(),
            Fading::PerSymbolRayleigh => prof
                .tap_power_profile
                .iter()
                .map(|&p| complex_gaussian(&mut rng, p))
                .collect(),
        };
        let block_end = (block_start + prof.coherence_samples).min(x.len());
        for i in block_start..block_end {
            let mut acc = Complex64::new(0.0, 0.0);
            for (&d, h) in prof.tap_delays_samples.iter().zip(&taps) {
                if i >= d {
                    acc += h * x[i - d];
                }
            }
            out.push(acc);
        }
    }
    sig.with_samples(out)
}

/// Rotates sample `i` by `theta_i + 2 pi cfo i`, where `theta_i` starts at the
/// phase offset and then follows a Gaussian random walk.
pub fn apply_cfo_phase(sig: &SampledSignal, imp: &ImpairmentConfig) -> Result<SampledSignal> {
    imp.validate()?;
    let mut rng = crate::rng::rng_from_seed(imp.seed);
    let mut theta = imp.phase_offset_rad;
    let out = sig
        .samples()
        .iter()
        .enumerate()
        .map(|(i, z)| {
            if i > 0 && imp.phase_walk_std > 0.0 {
                let step: f64 = StandardNormal.sample(&mut rng);
                theta += imp.phase_walk_std * step;
            }
            let cycles = (imp.cfo_normalized * i as f64).fract();
            z * Complex64::from_polar(1.0, theta + std::f64::consts::TAU * cycles)
        })
        .collect();
    sig.with_samples(out)
}

/// Adds circular complex Gaussian noise with variance `P_sig * 10^(-snr/10)`,
/// where `P_sig` is the measured input power. Infinite SNR returns the input.
pub fn add_awgn(sig: &SampledSignal, snr_db: f64, seed: u64) -> Result<SampledSignal> {
    if snr_db == f64::INFINITY {
        return Ok(sig.clone());
    }
    if !snr_db.is_finite() {
        return Err(Error::config(format!("invalid SNR {snr_db} dB")));
    }
    let p = sig.mean_power();
    if !(p > 0.0) {
        return Err(Error::config("cannot set a finite SNR on a zero-power signal"));
    }
    let variance = p * 10f64.powf(-snr_db / 10.0);
    let mut rng = crate::rng::rng_from_seed(seed);
    let out = sig
        .samples()
        .iter()
        .map(|z| z + complex_gaussian(&mut rng, variance))
        .collect();
    sig.with_samples(out)
}

/// Multipath, then offsets, then noise, with one seed per stage.
pub fn apply_channel(
    sig: &SampledSignal,
    prof: &ChannelProfile,
    imp: &ImpairmentConfig,
    multipath_seed: u64,
    noise_seed: u64,
) -> Result<SampledSignal> {
    let faded = apply_multipath(sig, prof, multipath_seed)?;
    let rotated = apply_cfo_phase(&faded, imp)?;
    add_awgn(&rotated, imp.snr_db, noise_seed)
}
