//! Sample moments and diagonal-lag fourth-order cumulants of a real series.
//!
//! All estimators are biased: sums run over the indices that stay inside the
//! series and are divided by the full length `N`, never by the number of terms.

use crate::{Error, Result};

/// Series length below which the Gaussianity approximation gets unreliable.
pub const MIN_RELIABLE_LEN: usize = 200;

/// Finite real-valued samples, at least two of them.
#[derive(Debug, Clone, PartialEq)]
pub struct RealSeries(Vec<f64>);

impl RealSeries {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::config(format!(
                "series needs at least 2 samples, got {}",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numerical(format!("non-finite sample at index {i}")));
        }
        Ok(Self(values))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// Multiplies every sample by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self(self.0.iter().map(|v| v * factor).collect())
    }
}

/// Diagonal-lag cumulants `c4(l, l, 0)` for `l = 0..=max_lag`.
#[derive(Debug, Clone, PartialEq)]
pub struct CumulantVector {
    values: Vec<f64>,
    series_len: usize,
}

impl CumulantVector {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Largest lag `M`; the vector holds `M + 1` entries.
    pub fn max_lag(&self) -> usize {
        self.values.len() - 1
    }

    pub fn series_len(&self) -> usize {
        self.series_len
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

fn check_lag(what: &'static str, lag: i64, n: usize) -> Result<()> {
    if lag.unsigned_abs() >= n as u64 {
        return Err(Error::Range {
            what,
            value: lag,
            limit: n as i64 - 1,
        });
    }
    Ok(())
}

/// Subtracts the sample mean.
pub fn demean(series: &RealSeries) -> RealSeries {
    let x = series.as_slice();
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    RealSeries(x.iter().map(|v| v - mean).collect())
}

/// Biased autocorrelation `(1/N) * sum_i y(i) y(i + lag)`.
///
/// Negative lags pair `y(i)` with `y(i - |lag|)`; both signs give the same
/// value because the two sums contain the same products.
pub fn autocorr_biased(series: &RealSeries, lag: isize) -> Result<f64> {
    let x = series.as_slice();
    check_lag("autocorrelation lag", lag as i64, x.len())?;
    let l = lag.unsigned_abs();
    let s: f64 = x[..x.len() - l].iter().zip(&x[l..]).map(|(a, b)| a * b).sum();
    Ok(s / x.len() as f64)
}

/// Biased joint moment of order `lags.len() + 1`:
/// `(1/N) * sum_t y(t) y(t + l_1) ... y(t + l_{k-1})`.
///
/// The sum covers every `t` for which all indices fall inside the series.
/// Lags may be negative.
pub fn moment_est(series: &RealSeries, lags: &[isize]) -> Result<f64> {
    let x = series.as_slice();
    let n = x.len();
    for &l in lags {
        check_lag("moment lag", l as i64, n)?;
    }
    let lo = lags.iter().copied().min().unwrap_or(0).min(0);
    let hi = lags.iter().copied().max().unwrap_or(0).max(0);
    let start = (-lo) as usize;
    let end = n as isize - hi;
    if end <= start as isize {
        return Ok(0.0);
    }
    let mut sum = 0.0;
    for t in start..end as usize {
        let mut p = x[t];
        for &l in lags {
            p *= x[(t as isize + l) as usize];
        }
        sum += p;
    }
    Ok(sum / n as f64)
}

/// `c4(l, l, 0) = m4(l, l, 0) - c2(l)^2 - c2(l) c2(-l) - c2(0)^2`.
///
/// The fourth-order term sums `y^2(i) y^2(i + l)` over `i < N - l`; the last
/// correction uses the full-length `c2(0)`. The series is expected to be
/// demeaned already.
pub fn cumulant4_diag(series: &RealSeries, lag: usize) -> Result<f64> {
    let x = series.as_slice();
    let n = x.len();
    check_lag("cumulant lag", lag as i64, n)?;
    let mut m4 = 0.0;
    let mut r = 0.0;
    for (a, b) in x[..n - lag].iter().zip(&x[lag..]) {
        let p = a * b;
        m4 += p * p;
        r += p;
    }
    let nf = n as f64;
    let m4 = m4 / nf;
    let r_pos = r / nf;
    let r_neg = autocorr_biased(series, -(lag as isize))?;
    let r0 = autocorr_biased(series, 0)?;
    Ok(m4 - r_pos * r_pos - r_pos * r_neg - r0 * r0)
}

/// Cumulants `c4(l, l, 0)` for every lag `0..=max_lag`.
pub fn cumulant_vector(series: &RealSeries, max_lag: usize) -> Result<CumulantVector> {
    let n = series.len();
    check_lag("maximum lag", max_lag as i64, n)?;
    if n < MIN_RELIABLE_LEN {
        log::warn!("series of {n} samples is short; Gaussianity estimates are unreliable below {MIN_RELIABLE_LEN}");
    }
    let values = (0..=max_lag)
        .map(|l| cumulant4_diag(series, l))
        .collect::<Result<Vec<_>>>()?;
    Ok(CumulantVector {
        values,
        series_len: n,
    })
}

/// Builds a cumulant vector from precomputed values.
pub fn cumulant_vector_from_values(values: Vec<f64>, series_len: usize) -> Result<CumulantVector> {
    if values.is_empty() || values.len() > series_len {
        return Err(Error::config(format!(
            "cumulant vector of length {} does not fit a series of {series_len} samples",
            values.len()
        )));
    }
    Ok(CumulantVector { values, series_len })
}

/// Lag span covering `symbols` symbol durations, rounded to whole samples.
pub fn lag_span_for_symbols(samples_per_symbol: f64, symbols: f64) -> usize {
    (symbols * samples_per_symbol).round().max(0.0) as usize
}

/// Default lag span: one and a half symbol durations.
pub fn default_lag_span(samples_per_symbol: f64) -> usize {
    lag_span_for_symbols(samples_per_symbol, 1.5)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn series(v: &[f64]) -> RealSeries {
        RealSeries::new(v.to_vec()).unwrap()
    }

    fn gaussian(n: usize, seed: u64) -> RealSeries {
        let mut rng = crate::rng::rng_from_seed(seed);
        RealSeries::new((0..n).map(|_| StandardNormal.sample(&mut rng)).collect()).unwrap()
    }

    #[test]
    fn rejects_bad_series() {
        assert!(RealSeries::new(vec![1.0]).is_err());
        assert!(RealSeries::new(vec![1.0, f64::NAN]).is_err());
        assert!(RealSeries::new(vec![f64::INFINITY, 0.0]).is_err());
    }

    #[test]
    fn demean_examples() {
        assert_eq!(demean(&series(&[1.0, 1.0, 1.0, 1.0])).as_slice(), &[0.0; 4]);
        assert_eq!(
            demean(&series(&[1.0, -1.0, 1.0, -1.0])).as_slice(),
            &[1.0, -1.0, 1.0, -1.0]
        );
        assert_eq!(demean(&series(&[2.0, 4.0])).as_slice(), &[-1.0, 1.0]);
    }

    #[test]
    fn autocorr_examples() {
        let ones = series(&[1.0; 4]);
        assert_eq!(autocorr_biased(&ones, 1).unwrap(), 0.75);
        assert_eq!(autocorr_biased(&ones, 0).unwrap(), 1.0);
        let alt = series(&[1.0, -1.0, 1.0, -1.0]);
        assert_eq!(autocorr_biased(&alt, 1).unwrap(), -0.75);
        assert!(autocorr_biased(&ones, 4).is_err());
        assert!(autocorr_biased(&ones, -4).is_err());
    }

    #[test]
    fn autocorr_is_even_in_lag() {
        let s = gaussian(257, 3);
        for lag in 0..20 {
            assert_eq!(
                autocorr_biased(&s, lag).unwrap(),
                autocorr_biased(&s, -lag).unwrap()
            );
        }
    }

    #[test]
    fn moment_examples() {
        let c = 1.7;
        let s = series(&[c; 9]);
        let m = moment_est(&s, &[0, 0, 0]).unwrap();
        assert!((m - c.powi(4)).abs() < 1e-12);

        let n = 40;
        let ones = series(&vec![1.0; n]);
        for lag in 0..10 {
            let m = moment_est(&ones, &[lag, lag, 0]).unwrap();
            assert_eq!(m, (n - lag as usize) as f64 / n as f64);
        }
        assert!(moment_est(&ones, &[3, n as isize]).is_err());
    }

    #[test]
    fn second_order_moment_matches_autocorrelation() {
        let s = gaussian(300, 11);
        for lag in -15..15 {
            assert_eq!(
                moment_est(&s, &[lag]).unwrap(),
                autocorr_biased(&s, lag).unwrap()
            );
        }
    }

    #[test]
    fn bpsk_zero_lag_cumulant_is_minus_two() {
        let mut rng = crate::rng::rng_from_seed(5);
        for n in [2usize, 17, 1000] {
            let v: Vec<f64> = (0..n)
                .map(|_| if rng.gen::<bool>() { 1.0 } else { -1.0 })
                .collect();
            assert_eq!(cumulant4_diag(&series(&v), 0).unwrap(), -2.0);
        }
    }

    #[test]
    fn zero_lag_reduces_to_m4_minus_three_m2_squared() {
        let s = gaussian(500, 8);
        let m4 = moment_est(&s, &[0, 0, 0]).unwrap();
        let m2 = moment_est(&s, &[0]).unwrap();
        let c = cumulant4_diag(&s, 0).unwrap();
        assert!((c - (m4 - 3.0 * m2 * m2)).abs() < 1e-12);
    }

    #[test]
    fn cumulant_vector_shape() {
        let s = gaussian(400, 1);
        let v = cumulant_vector(&s, 0).unwrap();
        assert_eq!(v.values(), &[cumulant4_diag(&s, 0).unwrap()]);
        assert_eq!(cumulant_vector(&s, 6).unwrap().len(), 7);
        assert!(cumulant_vector(&s, 400).is_err());
    }

    #[test]
    fn bpsk_symbol_rate_cumulants_decay() {
        let mut rng = crate::rng::rng_from_seed(21);
        let v: Vec<f64> = (0..4000)
            .map(|_| if rng.gen::<bool>() { 1.0 } else { -1.0 })
            .collect();
        let c = cumulant_vector(&series(&v), 2).unwrap();
        assert_eq!(c.values()[0], -2.0);
        assert!(c.values()[1].abs() < 0.1);
        assert!(c.values()[2].abs() < 0.1);
    }

    #[test]
    fn lag_span_helpers() {
        assert_eq!(default_lag_span(4.0), 6);
        assert_eq!(lag_span_for_symbols(4.0, 0.5), 2);
        assert_eq!(lag_span_for_symbols(4.0, 2.5), 10);
    }

    proptest! {
        #[test]
        fn cumulant_scales_with_fourth_power(
            v in proptest::collection::vec(-3.0f64..3.0, 8..80),
            a in 0.1f64..5.0,
            lag in 0usize..6,
        ) {
            let s = demean(&RealSeries::new(v).unwrap());
            prop_assume!(lag < s.len());
            let base = cumulant4_diag(&s, lag).unwrap();
            let scaled = cumulant4_diag(&s.scaled(a), lag).unwrap();
            let tol = 1e-10 * (base.abs() * a.powi(4)).max(1e-12);
            prop_assert!((scaled - a.powi(4) * base).abs() <= tol.max(1e-12 * a.powi(4)));
        }

        #[test]
        fn demeaned_cumulant_ignores_offset(
            v in proptest::collection::vec(-3.0f64..3.0, 8..80),
            offset in -10.0f64..10.0,
        ) {
            let s = RealSeries::new(v.clone()).unwrap();
            let shifted = RealSeries::new(v.iter().map(|x| x + offset).collect()).unwrap();
            let a = cumulant4_diag(&demean(&s), 1).unwrap();
            let b = cumulant4_diag(&demean(&shifted), 1).unwrap();
            prop_assert!((a - b).abs() < 1e-9 * (1.0 + a.abs()));
        }

        #[test]
        fn demean_leaves_zero_mean(v in proptest::collection::vec(-1e3f64..1e3, 2..200)) {
            let max = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            let d = demean(&RealSeries::new(v).unwrap());
            let mean = d.as_slice().iter().sum::<f64>() / d.len() as f64;
            prop_assert!(mean.abs() <= 1e-12 * max.max(1.0));
        }
    }
}
