use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::constellation::{constellation, draw_symbols};
use super::{check_order, normalize_power, rrc_taps, ModulationScheme, SampledSignal};
use crate::{Error, Result};

/// Single-carrier transmitter parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScConfig {
    pub scheme: ModulationScheme,
    pub modulation_order: u32,
    pub samples_per_symbol: usize,
    pub rrc_rolloff: f64,
    pub rrc_span_symbols: usize,
    /// FSK tone spacing in cycles per sample; `1 / (2 * sps)` when absent.
    #[serde(default)]
    pub fsk_tone_spacing: Option<f64>,
    pub n_symbols: usize,
    pub seed: u64,
    #[serde(default = "default_sample_rate")]
    pub sample_rate: f64,
}

fn default_sample_rate() -> f64 {
    // 250 kHz symbol rate at 4 samples per symbol.
    1e6
}

impl Default for ScConfig {
    fn default() -> Self {
        Self {
            scheme: ModulationScheme::Qam,
            modulation_order: 32,
            samples_per_symbol: 4,
            rrc_rolloff: 0.3,
            rrc_span_symbols: 8,
            fsk_tone_spacing: None,
            n_symbols: 1024,
            seed: 0,
            sample_rate: default_sample_rate(),
        }
    }
}

impl ScConfig {
    pub fn tone_spacing(&self) -> f64 {
        self.fsk_tone_spacing
            .unwrap_or(1.0 / (2.0 * self.samples_per_symbol as f64))
    }

    /// Output length: PSK/QAM keep the `span * sps` filter transient.
    pub fn output_len(&self) -> usize {
        let body = self.n_symbols * self.samples_per_symbol;
        match self.scheme {
            ModulationScheme::Fsk => body,
            _ => body + self.rrc_span_symbols * self.samples_per_symbol,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_order(self.modulation_order)?;
        if self.samples_per_symbol < 2 {
            return Err(Error::config("samples_per_symbol must be at least 2"));
        }
        if self.n_symbols == 0 {
            return Err(Error::config("n_symbols must be positive"));
        }
        if self.scheme == ModulationScheme::Fsk {
            let s = self.tone_spacing();
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::config(format!("invalid FSK tone spacing {s}")));
            }
        }
        Ok(())
    }
}

/// Single-carrier PSK, QAM or continuous-phase FSK with unit mean power.
///
/// PSK and QAM symbols are zero-stuffed to `sps` samples per symbol and passed
/// through the full RRC convolution, so the record carries `span * sps` extra
/// transient samples. FSK emits one constant-modulus tone per symbol with
/// phase carried across symbol boundaries.
pub fn generate_sc(cfg: &ScConfig) -> Result<SampledSignal> {
    cfg.validate()?;
    let mut rng = crate::rng::rng_from_seed(cfg.seed);
    let sps = cfg.samples_per_symbol;
    let mut out = match cfg.scheme {
        ModulationScheme::Fsk => {
            let m = cfg.modulation_order as f64;
            let spacing = cfg.tone_spacing();
            let mut phase = 0.0f64;
            let mut out = Vec::with_capacity(cfg.output_len());
            for _ in 0..cfg.n_symbols {
                let tone = rng.gen_range(0..cfg.modulation_order) as f64;
                let step = std::f64::consts::TAU * (tone - (m - 1.0) / 2.0) * spacing;
                for _ in 0..sps {
                    out.push(Complex64::from_polar(1.0, phase));
                    phase = (phase + step).rem_euclid(std::f64::consts::TAU);
                }
            }
            out
        }
        scheme => {
            let points = constellation(scheme, cfg.modulation_order)?;
            let symbols = draw_symbols(&points, cfg.n_symbols, &mut rng);
            let taps = rrc_taps(cfg.rrc_rolloff, cfg.rrc_span_symbols, sps)?;
            let mut out = vec![Complex64::new(0.0, 0.0); cfg.output_len()];
            for (k, s) in symbols.iter().enumerate() {
                for (j, h) in taps.iter().enumerate() {
                    out[k * sps + j] += s * h;
                }
            }
            out
        }
    };
    normalize_power(&mut out);
    SampledSignal::new(
        out,
        cfg.sample_rate,
        format!("sc-{}{}", cfg.scheme, cfg.modulation_order),
    )
}
