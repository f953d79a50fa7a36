use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::constellation::{constellation, draw_symbols};
use super::{check_order, normalize_power, ModulationScheme, SampledSignal};
use crate::{Error, Result};

/// OFDM transmitter layout.
///
/// The `active_carriers` subcarriers sit on the bins nearest DC, half above and
/// half below, with the DC bin left empty. An IDFT larger than the number of
/// active carriers oversamples the signal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OfdmConfig {
    pub active_carriers: usize,
    pub idft_size: usize,
    /// Useful symbol duration `T_D` in samples; must equal `idft_size`.
    pub data_duration_samples: usize,
    /// Cyclic prefix length relative to `T_D`.
    pub cp_fraction: f64,
    pub subcarrier_modulation: ModulationScheme,
    pub modulation_order: u32,
    pub n_symbols: usize,
    pub seed: u64,
    #[serde(default = "default_sample_rate")]
    pub sample_rate: f64,
}

fn default_sample_rate() -> f64 {
    // 250 kHz subcarrier spacing on a 128-point IDFT.
    32e6
}

impl Default for OfdmConfig {
    fn default() -> Self {
        Self {
            active_carriers: 64,
            idft_size: 128,
            data_duration_samples: 128,
            cp_fraction: 0.25,
            subcarrier_modulation: ModulationScheme::Qam,
            modulation_order: 32,
            n_symbols: 1024,
            seed: 0,
            sample_rate: default_sample_rate(),
        }
    }
}

impl OfdmConfig {
    pub fn cp_samples(&self) -> usize {
        (self.cp_fraction * self.data_duration_samples as f64).round() as usize
    }

    pub fn symbol_samples(&self) -> usize {
        self.data_duration_samples + self.cp_samples()
    }

    pub fn validate(&self) -> Result<()> {
        check_order(self.modulation_order)?;
        if self.subcarrier_modulation != ModulationScheme::Qam {
            return Err(Error::config("OFDM subcarriers must use QAM"));
        }
        if self.active_carriers == 0 || self.active_carriers >= self.idft_size {
            return Err(Error::config(format!(
                "{} active carriers do not fit an IDFT of size {} with an empty DC bin",
                self.active_carriers, self.idft_size
            )));
        }
        if self.data_duration_samples != self.idft_size {
            return Err(Error::config(format!(
                "data duration ({}) must equal the IDFT size ({})",
                self.data_duration_samples, self.idft_size
            )));
        }
        if !(self.cp_fraction > 0.0 && self.cp_fraction <= 1.0) {
            return Err(Error::config(format!(
                "cyclic prefix fraction must lie in (0, 1], got {}",
                self.cp_fraction
            )));
        }
        if self.n_symbols == 0 {
            return Err(Error::config("n_symbols must be positive"));
        }
        Ok(())
    }

    /// IDFT bin indices of the active carriers.
    pub fn active_bins(&self) -> Vec<usize> {
        let k = self.active_carriers;
        let above = k.div_ceil(2);
        let below = k - above;
        (1..=above)
            .chain((1..=below).map(|b| self.idft_size - b))
            .collect()
    }
}

/// Concatenated cyclic-prefixed OFDM symbols with unit mean power.
pub fn generate_ofdm(cfg: &OfdmConfig) -> Result<SampledSignal> {
    cfg.validate()?;
    let points = constellation(ModulationScheme::Qam, cfg.modulation_order)?;
    let mut rng = crate::rng::rng_from_seed(cfg.seed);
    let bins = cfg.active_bins();
    let n = cfg.idft_size;
    let cp = cfg.cp_samples();
    let ifft = FftPlanner::new().plan_fft_inverse(n);

    let mut out = Vec::with_capacity(cfg.n_symbols * (n + cp));
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    for _ in 0..cfg.n_symbols {
        buf.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
        for (&bin, s) in bins.iter().zip(draw_symbols(&points, bins.len(), &mut rng)) {
            buf[bin] = s;
        }
        ifft.process(&mut buf);
        out.extend_from_slice(&buf[n - cp..]);
        out.extend_from_slice(&buf);
    }
    normalize_power(&mut out);
    SampledSignal::new(out, cfg.sample_rate, format!("ofdm-qam{}", cfg.modulation_order))
}
