//! Baseband waveform synthesis and the shared I/Q file format.

mod constellation;
mod file;
mod ofdm;
mod rrc;
mod single_carrier;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use constellation::{constellation, map_symbols};
pub use file::{read_waveform, sidecar_path, write_waveform, WaveformMeta};
pub use ofdm::{generate_ofdm, OfdmConfig};
pub use rrc::rrc_taps;
pub use single_carrier::{generate_sc, ScConfig};

/// Single-carrier modulation families (OFDM subcarriers always use QAM).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModulationScheme {
    Psk,
    Fsk,
    Qam,
}

impl std::fmt::Display for ModulationScheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ModulationScheme::Psk => "psk",
            ModulationScheme::Fsk => "fsk",
            ModulationScheme::Qam => "qam",
        })
    }
}

/// Complex baseband samples with their sample rate and a provenance label.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledSignal {
    samples: Vec<Complex64>,
    sample_rate: f64,
    label: String,
}

impl SampledSignal {
    pub fn new(samples: Vec<Complex64>, sample_rate: f64, label: impl Into<String>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::config("signal has no samples"));
        }
        if let Some(i) = samples.iter().position(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::Numerical(format!("non-finite sample at index {i}")));
        }
        if !(sample_rate > 0.0 && sample_rate.is_finite()) {
            return Err(Error::config(format!("invalid sample rate {sample_rate}")));
        }
        Ok(Self {
            samples,
            sample_rate,
            label: label.into(),
        })
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Mean of `|x|^2`.
    pub fn mean_power(&self) -> f64 {
        mean_power(&self.samples)
    }

    /// Same metadata, new samples.
    pub fn with_samples(&self, samples: Vec<Complex64>) -> Result<Self> {
        Self::new(samples, self.sample_rate, self.label.clone())
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn into_samples(self) -> Vec<Complex64> {
        self.samples
    }
}

pub(crate) fn mean_power(samples: &[Complex64]) -> f64 {
    samples.iter().map(|z| z.norm_sqr()).sum::<f64>() / samples.len() as f64
}

/// Scales `samples` to unit mean power. All-zero input is left alone.
pub(crate) fn normalize_power(samples: &mut [Complex64]) {
    let p = mean_power(samples);
    if p > 0.0 {
        let g = 1.0 / p.sqrt();
        samples.iter_mut().for_each(|z| *z *= g);
    }
}

pub(crate) fn check_order(order: u32) -> Result<()> {
    if !(2..=256).contains(&order) || !order.is_power_of_two() {
        return Err(Error::config(format!(
            "modulation order must be a power of two in 2..=256, got {order}"
        )));
    }
    Ok(())
}

/// Sample excess kurtosis `m4 / m2^2 - 3` of a real sequence.
pub fn excess_kurtosis(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let (m2, m4) = x.iter().fold((0.0, 0.0), |(a, b), v| {
        let d = (v - mean) * (v - mean);
        (a + d, b + d * d)
    });
    (m4 / n) / (m2 / n).powi(2) - 3.0
}
