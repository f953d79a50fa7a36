//! Chi-squared CFAR Gaussianity test.
//!
//! Under the Gaussian hypothesis the cumulant vector is asymptotically
//! zero-mean normal, so `d = c' * cov^+ * c` is chi-squared with `M + 1`
//! degrees of freedom. The threshold is the upper `alpha` quantile of that
//! distribution, which fixes the false-alarm rate independently of the signal
//! scale. A statistic above the threshold rejects Gaussianity and the signal is
//! declared single-carrier.

mod chi2;
mod pinv;

use std::fmt;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::covariance::{covariance_matrix_with, default_kn, CovarianceEstimate, CovarianceForm};
use crate::hos::{cumulant_vector, default_lag_span, demean, CumulantVector, RealSeries};
use crate::waveforms::SampledSignal;
use crate::{Error, Result};

pub use chi2::{chi2_quantile, chi2_sf, gamma_p, gamma_q, ln_gamma};
pub use pinv::{pinv_psd, pinv_symmetric};

/// Lag span used when the symbol duration is unknown.
pub const BLIND_LAG_SPAN: usize = 12;
pub const DEFAULT_PINV_REL_TOL: f64 = 1e-10;

/// Outcome of the test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    /// Gaussianity retained.
    MultiCarrierOfdm,
    /// Gaussianity rejected.
    SingleCarrier,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::MultiCarrierOfdm => "ofdm",
            Verdict::SingleCarrier => "single_carrier",
        })
    }
}

/// Which component of the complex baseband feeds the test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SignalPart {
    #[default]
    Real,
    Imaginary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorConfig {
    /// Target false-alarm probability.
    pub significance: f64,
    /// Largest cumulant lag `M`, in samples.
    pub max_lag: usize,
    /// Covariance truncation limit; chosen from the data when absent.
    #[serde(default)]
    pub kn: Option<usize>,
    #[serde(default = "default_pinv_rel_tol")]
    pub pinv_rel_tol: f64,
    #[serde(default = "default_covariance_form")]
    pub covariance_form: CovarianceForm,
}

fn default_pinv_rel_tol() -> f64 {
    DEFAULT_PINV_REL_TOL
}

fn default_covariance_form() -> CovarianceForm {
    CovarianceForm::GaussianNull
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            significance: 0.1,
            max_lag: BLIND_LAG_SPAN,
            kn: None,
            pinv_rel_tol: DEFAULT_PINV_REL_TOL,
            covariance_form: default_covariance_form(),
        }
    }
}

impl DetectorConfig {
    /// Lag span of one and a half symbols for a known oversampling factor.
    pub fn for_samples_per_symbol(samples_per_symbol: f64, significance: f64) -> Self {
        Self {
            significance,
            max_lag: default_lag_span(samples_per_symbol),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.significance > 0.0 && self.significance < 1.0) {
            return Err(Error::config(format!(
                "significance must lie in (0, 1), got {}",
                self.significance
            )));
        }
        if !(self.pinv_rel_tol >= 0.0 && self.pinv_rel_tol < 1.0) {
            return Err(Error::config(format!(
                "pinv_rel_tol must lie in [0, 1), got {}",
                self.pinv_rel_tol
            )));
        }
        Ok(())
    }

    pub fn dof(&self) -> u32 {
        self.max_lag as u32 + 1
    }
}

/// Full record of one test.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianityDecision {
    pub statistic: f64,
    pub threshold: f64,
    pub dof: u32,
    pub verdict: Verdict,
    pub cumulants: CumulantVector,
    /// Largest over smallest retained eigenvalue of the covariance estimate.
    pub covariance_condition: f64,
    pub kn: usize,
}

impl GaussianityDecision {
    pub const RECORD_HEADER: &'static str = "statistic,threshold,dof,verdict,condition";

    /// One comma-separated line matching [`Self::RECORD_HEADER`].
    pub fn record_line(&self) -> String {
        format!(
            "{},{},{},{},{}",
            self.statistic, self.threshold, self.dof, self.verdict, self.covariance_condition
        )
    }
}

/// `statistic > threshold` rejects Gaussianity; ties keep it.
pub fn decide(statistic: f64, threshold: f64) -> Verdict {
    if statistic > threshold {
        Verdict::SingleCarrier
    } else {
        Verdict::MultiCarrierOfdm
    }
}

fn quadratic_form(
    cumulants: &CumulantVector,
    cov: &CovarianceEstimate,
    rel_tol: f64,
) -> Result<(f64, f64)> {
    if cumulants.len() != cov.dim() {
        return Err(Error::Dimension {
            expected: cov.dim(),
            actual: cumulants.len(),
        });
    }
    let c = DVector::from_column_slice(cumulants.values());
    if c.iter().all(|&v| v == 0.0) {
        return Ok((0.0, f64::INFINITY));
    }
    let (inv, condition) = pinv_psd(cov.matrix(), rel_tol)?;
    let d = c.dot(&(inv * &c));
    if !d.is_finite() {
        return Err(Error::Numerical("Gaussianity statistic is not finite".into()));
    }
    Ok((d.max(0.0), condition))
}

/// `c' * cov^+ * c` with the pseudo-inverse taken on the positive
/// semidefinite part of `cov`.
pub fn gaussianity_statistic(cumulants: &CumulantVector, cov: &CovarianceEstimate) -> Result<f64> {
    quadratic_form(cumulants, cov, DEFAULT_PINV_REL_TOL).map(|(d, _)| d)
}

/// Runs the test on a real series. The series is demeaned first.
pub fn identify_series(series: &RealSeries, cfg: &DetectorConfig) -> Result<GaussianityDecision> {
    cfg.validate()?;
    let series = demean(series);
    let m = cfg.max_lag;
    let kn = cfg.kn.unwrap_or_else(|| default_kn(&series, m));
    let n = series.len();
    if n <= m + kn {
        return Err(Error::Range {
            what: "series length",
            value: n as i64,
            limit: (m + kn) as i64 + 1,
        });
    }
    let cumulants = cumulant_vector(&series, m)?;
    let cov = covariance_matrix_with(&series, m, kn, cfg.covariance_form)?;
    let (statistic, covariance_condition) = quadratic_form(&cumulants, &cov, cfg.pinv_rel_tol)?;
    let threshold = chi2_quantile(cfg.dof(), cfg.significance)?;
    Ok(GaussianityDecision {
        statistic,
        threshold,
        dof: cfg.dof(),
        verdict: decide(statistic, threshold),
        cumulants,
        covariance_condition,
        kn,
    })
}

/// Runs the test on one component of a complex baseband signal.
pub fn identify_part(
    sig: &SampledSignal,
    cfg: &DetectorConfig,
    part: SignalPart,
) -> Result<GaussianityDecision> {
    let values = sig
        .samples()
        .iter()
        .map(|z| match part {
            SignalPart::Real => z.re,
            SignalPart::Imaginary => z.im,
        })
        .collect();
    identify_series(&RealSeries::new(values)?, cfg)
}

/// Decides OFDM versus single-carrier from the real part of `sig`.
pub fn identify(sig: &SampledSignal, cfg: &DetectorConfig) -> Result<GaussianityDecision> {
    identify_part(sig, cfg, SignalPart::Real)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hos::cumulant_vector_from_values;
    use nalgebra::DMatrix;
    use num_complex::Complex64;
    use rand_distr::{Distribution, StandardNormal};

    fn gaussian_signal(n: usize, seed: u64, scale: f64) -> SampledSignal {
        let mut rng = crate::rng::rng_from_seed(seed);
        let samples = (0..n)
            .map(|_| {
                let re: f64 = StandardNormal.sample(&mut rng);
                let im: f64 = StandardNormal.sample(&mut rng);
                Complex64::new(re, im) * scale
            })
            .collect();
        SampledSignal::new(samples, 1.0, "noise").unwrap()
    }

    #[test]
    fn decide_examples() {
        assert_eq!(decide(5.0, 10.6), Verdict::MultiCarrierOfdm);
        assert_eq!(decide(18.5, 10.6), Verdict::SingleCarrier);
        assert_eq!(decide(10.6, 10.6), Verdict::MultiCarrierOfdm);
    }

    #[test]
    fn statistic_examples() {
        let cov = CovarianceEstimate::new(DMatrix::identity(3, 3), 4, 100).unwrap();
        let zero = cumulant_vector_from_values(vec![0.0; 3], 100).unwrap();
        assert_eq!(gaussianity_statistic(&zero, &cov).unwrap(), 0.0);
        let unit = cumulant_vector_from_values(vec![1.0, 0.0, 0.0], 100).unwrap();
        assert!((gaussianity_statistic(&unit, &cov).unwrap() - 1.0).abs() < 1e-14);
        let short = cumulant_vector_from_values(vec![1.0, 0.0], 100).unwrap();
        assert!(gaussianity_statistic(&short, &cov).is_err());
    }

    #[test]
    fn decision_record_fields() {
        let sig = gaussian_signal(2048, 1, 1.0);
        let cfg = DetectorConfig {
            max_lag: 6,
            ..DetectorConfig::default()
        };
        let d = identify(&sig, &cfg).unwrap();
        assert_eq!(d.dof, 7);
        assert_eq!(d.cumulants.len(), 7);
        assert!(d.statistic >= 0.0);
        assert_eq!(d.verdict, decide(d.statistic, d.threshold));
        assert!((d.threshold - chi2_quantile(7, 0.1).unwrap()).abs() < 1e-12);
        assert_eq!(d.record_line().split(',').count(), 5);
    }

    #[test]
    fn statistic_is_scale_free() {
        let cfg = DetectorConfig {
            max_lag: 6,
            ..DetectorConfig::default()
        };
        let sig = gaussian_signal(3000, 4, 1.0);
        let base = identify(&sig, &cfg).unwrap();
        for a in [1e-3, 0.5, 7.0, 1e3] {
            let scaled = gaussian_signal(3000, 4, a);
            let d = identify(&scaled, &cfg).unwrap();
            assert!(
                (d.statistic - base.statistic).abs() <= 1e-6 * base.statistic.max(1e-12),
                "a={a}: {} vs {}",
                d.statistic,
                base.statistic
            );
            assert_eq!(d.verdict, base.verdict);
        }
    }

    #[test]
    fn dof_follows_lag_span() {
        let sig = gaussian_signal(2000, 9, 1.0);
        for m in [0usize, 3, 6, 12] {
            let cfg = DetectorConfig {
                max_lag: m,
                ..DetectorConfig::default()
            };
            let d = identify(&sig, &cfg).unwrap();
            assert_eq!(d.dof, m as u32 + 1);
            assert_eq!(d.threshold, chi2_quantile(m as u32 + 1, 0.1).unwrap());
        }
    }

    #[test]
    fn imaginary_part_is_available() {
        let sig = gaussian_signal(1500, 3, 1.0);
        let cfg = DetectorConfig::default();
        let re = identify_part(&sig, &cfg, SignalPart::Real).unwrap();
        let im = identify_part(&sig, &cfg, SignalPart::Imaginary).unwrap();
        assert_ne!(re.statistic, im.statistic);
    }

    #[test]
    fn too_short_signal_is_rejected() {
        // M = 12 needs at least M + K_N + 1 = 14 samples.
        let sig = gaussian_signal(13, 3, 1.0);
        assert!(identify(&sig, &DetectorConfig::default()).is_err());
        let sig = gaussian_signal(14, 3, 1.0);
        assert!(identify(&sig, &DetectorConfig::default()).is_ok());
    }

    #[test]
    fn config_validation() {
        let bad = DetectorConfig {
            significance: 1.5,
            ..DetectorConfig::default()
        };
        assert!(bad.validate().is_err());
        assert_eq!(DetectorConfig::for_samples_per_symbol(4.0, 0.01).max_lag, 6);
    }

    #[test]
    fn constant_modulus_signal_is_rejected() {
        // Real part of a unit-modulus random-phase signal is arcsine distributed.
        use rand::Rng;
        let mut rng = crate::rng::rng_from_seed(5);
        let samples = (0..4096)
            .map(|_| Complex64::from_polar(1.0, rng.gen_range(0.0..std::f64::consts::TAU)))
            .collect();
        let sig = SampledSignal::new(samples, 1.0, "cm").unwrap();
        let cfg = DetectorConfig {
            max_lag: 6,
            significance: 0.01,
            ..DetectorConfig::default()
        };
        assert_eq!(identify(&sig, &cfg).unwrap().verdict, Verdict::SingleCarrier);
    }
}
