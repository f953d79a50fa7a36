//! Monte-Carlo experiment runner.
//!
//! An [`ExperimentConfig`] describes one transmitter, one channel and one
//! detector setting swept over an SNR grid. Each trial regenerates the waveform,
//! channel and noise from seeds derived from the master seed, so any single
//! trial can be replayed in isolation and the sweep output does not depend on
//! how trials are scheduled across threads.

mod plot;
mod report;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{add_awgn, apply_cfo_phase, apply_multipath, ChannelProfile, ImpairmentConfig};
use crate::detector::{identify, DetectorConfig, GaussianityDecision, Verdict};
use crate::hos::{cumulant_vector, demean, RealSeries};
use crate::rng::{derive_seed, stream};
use crate::waveforms::{generate_ofdm, generate_sc, ModulationScheme, OfdmConfig, SampledSignal, ScConfig};
use crate::{Error, Result};

pub use plot::plot_sweep;
pub use report::{append_csv, emit_csv, read_csv, CSV_HEADER};

/// Two-sided 95% standard normal quantile.
const Z_95: f64 = 1.959_963_984_540_054;

/// Transmitted signal family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Modulation {
    #[serde(rename = "ofdm")]
    Ofdm,
    #[serde(rename = "sc-psk")]
    ScPsk,
    #[serde(rename = "sc-fsk")]
    ScFsk,
    #[serde(rename = "sc-qam")]
    ScQam,
}

impl Modulation {
    pub fn as_str(self) -> &'static str {
        match self {
            Modulation::Ofdm => "ofdm",
            Modulation::ScPsk => "sc-psk",
            Modulation::ScFsk => "sc-fsk",
            Modulation::ScQam => "sc-qam",
        }
    }

    fn sc_scheme(self) -> Option<ModulationScheme> {
        match self {
            Modulation::Ofdm => None,
            Modulation::ScPsk => Some(ModulationScheme::Psk),
            Modulation::ScFsk => Some(ModulationScheme::Fsk),
            Modulation::ScQam => Some(ModulationScheme::Qam),
        }
    }
}

impl fmt::Display for Modulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Modulation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ofdm" => Ok(Modulation::Ofdm),
            "sc-psk" => Ok(Modulation::ScPsk),
            "sc-fsk" => Ok(Modulation::ScFsk),
            "sc-qam" => Ok(Modulation::ScQam),
            other => Err(Error::config(format!(
                "unknown modulation '{other}' (expected ofdm, sc-psk, sc-fsk or sc-qam)"
            ))),
        }
    }
}

/// Pulse-shaping and framing parameters that are not swept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WaveformShape {
    pub samples_per_symbol: usize,
    pub rrc_rolloff: f64,
    pub rrc_span_symbols: usize,
    pub fsk_tone_spacing: Option<f64>,
    pub ofdm_active_carriers: usize,
    pub ofdm_idft_size: usize,
    pub ofdm_cp_fraction: f64,
}

impl Default for WaveformShape {
    fn default() -> Self {
        let sc = ScConfig::default();
        let ofdm = OfdmConfig::default();
        Self {
            samples_per_symbol: sc.samples_per_symbol,
            rrc_rolloff: sc.rrc_rolloff,
            rrc_span_symbols: sc.rrc_span_symbols,
            fsk_tone_spacing: None,
            ofdm_active_carriers: ofdm.active_carriers,
            ofdm_idft_size: ofdm.idft_size,
            ofdm_cp_fraction: ofdm.cp_fraction,
        }
    }
}

/// One sweep: a transmitter, channel and detector evaluated over an SNR grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub modulation: Modulation,
    /// Constellation order; for OFDM the QAM order on each subcarrier.
    pub order: u32,
    pub n_symbols: usize,
    pub snr_grid_db: Vec<f64>,
    #[serde(default)]
    pub channel: ChannelProfile,
    /// Offsets applied to every trial. Its `snr_db` and `seed` are replaced by
    /// the grid point and the per-trial seed.
    #[serde(default)]
    pub impairments: ImpairmentConfig,
    pub detector: DetectorConfig,
    pub trials: usize,
    pub master_seed: u64,
    #[serde(default)]
    pub waveform: WaveformShape,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::config("trials must be at least 1"));
        }
        if self.snr_grid_db.is_empty() {
            return Err(Error::config("snr_grid_db must not be empty"));
        }
        for (i, snr) in self.snr_grid_db.iter().enumerate() {
            if snr.is_nan() || *snr == f64::NEG_INFINITY {
                return Err(Error::config(format!("invalid SNR grid value {snr}")));
            }
            if self.snr_grid_db[..i].iter().any(|s| s.to_bits() == snr.to_bits()) {
                return Err(Error::config(format!("SNR grid value {snr} appears twice")));
            }
        }
        self.channel.validate()?;
        self.impairments.validate()?;
        self.detector.validate()?;
        match self.modulation {
            Modulation::Ofdm => self.ofdm_config(0).validate(),
            _ => self.sc_config(0).validate(),
        }
    }

    /// Parses and validates a TOML document.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_toml_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(message) => Error::Format {
                path: path.to_path_buf(),
                message,
            },
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::config(e.to_string()))
    }

    fn ofdm_config(&self, seed: u64) -> OfdmConfig {
        OfdmConfig {
            active_carriers: self.waveform.ofdm_active_carriers,
            idft_size: self.waveform.ofdm_idft_size,
            data_duration_samples: self.waveform.ofdm_idft_size,
            cp_fraction: self.waveform.ofdm_cp_fraction,
            subcarrier_modulation: ModulationScheme::Qam,
            modulation_order: self.order,
            n_symbols: self.n_symbols,
            seed,
            ..OfdmConfig::default()
        }
    }

    fn sc_config(&self, seed: u64) -> ScConfig {
        ScConfig {
            scheme: self.modulation.sc_scheme().unwrap_or(ModulationScheme::Qam),
            modulation_order: self.order,
            samples_per_symbol: self.waveform.samples_per_symbol,
            rrc_rolloff: self.waveform.rrc_rolloff,
            rrc_span_symbols: self.waveform.rrc_span_symbols,
            fsk_tone_spacing: self.waveform.fsk_tone_spacing,
            n_symbols: self.n_symbols,
            seed,
            ..ScConfig::default()
        }
    }

    /// Transmitted waveform for a given waveform seed.
    pub fn generate(&self, seed: u64) -> Result<SampledSignal> {
        match self.modulation {
            Modulation::Ofdm => generate_ofdm(&self.ofdm_config(seed)),
            _ => generate_sc(&self.sc_config(seed)),
        }
    }

    /// Number of complex samples per trial.
    pub fn samples_per_trial(&self) -> usize {
        match self.modulation {
            Modulation::Ofdm => self.n_symbols * self.ofdm_config(0).symbol_samples(),
            _ => self.sc_config(0).output_len(),
        }
    }
}

/// Seed of one trial: `derive_seed(master_seed, [snr_db bits, trial_index])`.
///
/// The stage seeds are then `derive_seed(trial_seed, [stream])` with the
/// labels in [`crate::rng::stream`].
pub fn trial_seed(master_seed: u64, snr_db: f64, trial_index: u64) -> u64 {
    derive_seed(master_seed, &[snr_db.to_bits(), trial_index])
}

/// Received signal of one trial: waveform, multipath, offsets, then noise.
pub fn received_signal(cfg: &ExperimentConfig, snr_db: f64, trial_index: u64) -> Result<SampledSignal> {
    let seed = trial_seed(cfg.master_seed, snr_db, trial_index);
    let tx = cfg.generate(derive_seed(seed, &[stream::WAVEFORM]))?;
    let faded = apply_multipath(&tx, &cfg.channel, derive_seed(seed, &[stream::MULTIPATH]))?;
    let imp = ImpairmentConfig {
        snr_db,
        seed: derive_seed(seed, &[stream::PHASE]),
        ..cfg.impairments.clone()
    };
    let rotated = apply_cfo_phase(&faded, &imp)?;
    add_awgn(&rotated, snr_db, derive_seed(seed, &[stream::NOISE]))
}

/// Simulates and classifies one trial.
pub fn run_trial(cfg: &ExperimentConfig, snr_db: f64, trial_index: u64) -> Result<GaussianityDecision> {
    identify(&received_signal(cfg, snr_db, trial_index)?, &cfg.detector)
}

/// Wilson score interval at 95% confidence for `successes` out of `trials`.
pub fn wilson_interval(successes: usize, trials: usize) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = Z_95 * Z_95;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = Z_95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let lo = if successes == 0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if successes >= trials { 1.0 } else { (center + half).min(1.0) };
    (lo, hi)
}

/// One grid point of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub snr_db: f64,
    pub modulation: Modulation,
    pub order: u32,
    pub n_symbols: usize,
    pub alpha: f64,
    pub m_lags: usize,
    pub trials: usize,
    /// Fraction of trials declared single-carrier: the detection rate for
    /// single-carrier inputs and the false-alarm rate for OFDM.
    pub p_reject: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

impl SweepRow {
    pub fn from_counts(cfg: &ExperimentConfig, snr_db: f64, rejections: usize, trials: usize) -> Self {
        let (ci_lo, ci_hi) = wilson_interval(rejections, trials);
        Self {
            snr_db,
            modulation: cfg.modulation,
            order: cfg.order,
            n_symbols: cfg.n_symbols,
            alpha: cfg.detector.significance,
            m_lags: cfg.detector.max_lag,
            trials,
            p_reject: if trials == 0 { 0.0 } else { rejections as f64 / trials as f64 },
            ci_lo,
            ci_hi,
        }
    }
}

/// Rows of a sweep, in grid order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    pub fn row_at(&self, snr_db: f64) -> Option<&SweepRow> {
        self.rows.iter().find(|r| r.snr_db == snr_db)
    }
}

/// Number of trials at `snr_db` declared single-carrier. Trials run in
/// parallel; the count is a plain sum and so independent of scheduling.
pub fn count_rejections(cfg: &ExperimentConfig, snr_db: f64) -> Result<usize> {
    (0..cfg.trials as u64)
        .into_par_iter()
        .map(|i| run_trial(cfg, snr_db, i).map(|d| usize::from(d.verdict == Verdict::SingleCarrier)))
        .try_reduce(|| 0, |a, b| Ok(a + b))
}

/// Runs every trial at every grid point.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<SweepResult> {
    cfg.validate()?;
    let rows = cfg
        .snr_grid_db
        .iter()
        .map(|&snr| {
            let rejections = count_rejections(cfg, snr)?;
            log::info!("{} order {} at {snr} dB: {rejections}/{} rejected", cfg.modulation, cfg.order, cfg.trials);
            Ok(SweepRow::from_counts(cfg, snr, rejections, cfg.trials))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult { rows })
}

/// Fixed-threshold comparison rule: single-carrier iff the summed magnitude of
/// the diagonal cumulants `c4(l, l, 0)`, `l = 0..=max_lag`, of the demeaned
/// series exceeds `threshold`. Unlike the chi-squared test its false-alarm rate
/// depends on the signal power and channel.
pub fn baseline_sum_cumulant(series: &RealSeries, max_lag: usize, threshold: f64) -> Result<Verdict> {
    if !(threshold > 0.0) {
        return Err(Error::config(format!("baseline threshold must be positive, got {threshold}")));
    }
    let c = cumulant_vector(&demean(series), max_lag)?;
    let total: f64 = c.values().iter().map(|v| v.abs()).sum();
    Ok(if total > threshold {
        Verdict::SingleCarrier
    } else {
        Verdict::MultiCarrierOfdm
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::Fading;
    use std::collections::HashSet;

    pub(super) fn small_config(modulation: Modulation) -> ExperimentConfig {
        ExperimentConfig {
            modulation,
            order: 4,
            n_symbols: 128,
            snr_grid_db: vec![0.0, 10.0],
            channel: ChannelProfile::identity(),
            impairments: ImpairmentConfig::default(),
            detector: DetectorConfig::for_samples_per_symbol(4.0, 0.1),
            trials: 5,
            master_seed: 42,
            waveform: WaveformShape::default(),
        }
    }

    #[test]
    fn wilson_reference_values() {
        // 50/100: p = 0.5, interval (0.4038, 0.5962).
        let (lo, hi) = wilson_interval(50, 100);
        assert!((lo - 0.403_831_7).abs() < 1e-6, "{lo}");
        assert!((hi - 0.596_168_3).abs() < 1e-6, "{hi}");
        let (lo, hi) = wilson_interval(0, 10);
        assert_eq!(lo, 0.0);
        assert!((hi - 0.277_532_4).abs() < 1e-6, "{hi}");
        let (lo, hi) = wilson_interval(10, 10);
        assert!((lo - 0.722_467_6).abs() < 1e-6, "{lo}");
        assert_eq!(hi, 1.0);
    }

    #[test]
    fn modulation_names_round_trip() {
        for m in [Modulation::Ofdm, Modulation::ScPsk, Modulation::ScFsk, Modulation::ScQam] {
            assert_eq!(m.as_str().parse::<Modulation>().unwrap(), m);
        }
        assert!("qam".parse::<Modulation>().is_err());
    }

    #[test]
    fn trial_is_deterministic() {
        let cfg = small_config(Modulation::ScQam);
        let a = run_trial(&cfg, 5.0, 3).unwrap();
        let b = run_trial(&cfg, 5.0, 3).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.record_line(), b.record_line());
        let c = run_trial(&cfg, 5.0, 4).unwrap();
        assert_ne!(a.statistic, c.statistic);
    }

    #[test]
    fn trial_seeds_are_distinct_across_sweep() {
        let grid: Vec<f64> = (-4..=15).map(f64::from).collect();
        let mut seen = HashSet::new();
        for &snr in &grid {
            for i in 0..2000 {
                assert!(seen.insert(trial_seed(7, snr, i)));
            }
        }
    }

    #[test]
    fn single_trial_gives_zero_or_one() {
        let mut cfg = small_config(Modulation::ScPsk);
        cfg.trials = 1;
        let res = run_experiment(&cfg).unwrap();
        assert_eq!(res.rows.len(), 2);
        for row in &res.rows {
            assert!(row.p_reject == 0.0 || row.p_reject == 1.0);
            assert!(row.ci_lo <= row.p_reject && row.p_reject <= row.ci_hi);
        }
    }

    #[test]
    fn rows_follow_grid_order() {
        let mut cfg = small_config(Modulation::ScFsk);
        cfg.snr_grid_db = vec![10.0, -2.0, 3.5];
        let res = run_experiment(&cfg).unwrap();
        let snrs: Vec<f64> = res.rows.iter().map(|r| r.snr_db).collect();
        assert_eq!(snrs, cfg.snr_grid_db);
        assert_eq!(res.rows[0].m_lags, 6);
        assert_eq!(res.rows[0].alpha, 0.1);
        assert_eq!(res.row_at(3.5).unwrap().trials, 5);
    }

    #[test]
    fn config_validation() {
        let good = small_config(Modulation::Ofdm);
        assert!(good.validate().is_ok());
        let mut bad = good.clone();
        bad.trials = 0;
        assert!(bad.validate().unwrap_err().is_config());
        let mut bad = good.clone();
        bad.snr_grid_db.clear();
        assert!(bad.validate().is_err());
        let mut bad = good.clone();
        bad.snr_grid_db = vec![1.0, 1.0];
        assert!(bad.validate().is_err());
        let mut bad = good.clone();
        bad.order = 3;
        assert!(bad.validate().is_err());
        let mut bad = good;
        bad.channel.tap_power_profile = vec![0.5];
        assert!(bad.validate().is_err());
    }

    #[test]
    fn toml_round_trip() {
        let mut cfg = small_config(Modulation::ScQam);
        cfg.channel = ChannelProfile::default_fading();
        cfg.snr_grid_db = vec![-4.0, 0.5, f64::INFINITY];
        let text = cfg.to_toml_string().unwrap();
        assert!(text.contains("snr_grid_db"));
        assert!(text.contains("master_seed"));
        assert_eq!(ExperimentConfig::from_toml_str(&text).unwrap(), cfg);
    }

    #[test]
    fn minimal_toml_uses_defaults() {
        let text = r#"
            modulation = "sc-fsk"
            order = 32
            n_symbols = 256
            snr_grid_db = [0.0, 3.0]
            trials = 10
            master_seed = 1

            [detector]
            significance = 0.01
            max_lag = 6
        "#;
        let cfg = ExperimentConfig::from_toml_str(text).unwrap();
        assert_eq!(cfg.modulation, Modulation::ScFsk);
        assert_eq!(cfg.channel, ChannelProfile::identity());
        assert_eq!(cfg.impairments.cfo_normalized, 1e-5);
        assert_eq!(cfg.waveform.samples_per_symbol, 4);
        assert_eq!(cfg.samples_per_trial(), 1024);
        let unknown = format!("{text}\nextra = 1\n");
        assert!(ExperimentConfig::from_toml_str(&unknown).is_err());
    }

    #[test]
    fn ofdm_trial_length() {
        let cfg = small_config(Modulation::Ofdm);
        assert_eq!(cfg.samples_per_trial(), 128 * 160);
        assert_eq!(received_signal(&cfg, 10.0, 0).unwrap().len(), 128 * 160);
    }

    #[test]
    fn fading_trial_runs() {
        let mut cfg = small_config(Modulation::ScQam);
        cfg.channel = ChannelProfile::default_fading();
        assert_eq!(cfg.channel.fading, Fading::PerSymbolRayleigh);
        let d = run_trial(&cfg, 3.0, 0).unwrap();
        assert!(d.statistic >= 0.0);
    }

    #[test]
    fn baseline_examples() {
        let zero = RealSeries::new(vec![0.0; 64]).unwrap();
        assert_eq!(baseline_sum_cumulant(&zero, 4, 1e-3).unwrap(), Verdict::MultiCarrierOfdm);
        let bpsk = RealSeries::new((0..1000).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect()).unwrap();
        assert_eq!(baseline_sum_cumulant(&bpsk, 0, 1.0).unwrap(), Verdict::SingleCarrier);
        assert!(baseline_sum_cumulant(&bpsk, 0, 0.0).is_err());
    }
}
