//! Covariance of the diagonal-lag cumulant vector.
//!
//! `cov{c4(l,l,0), c4(b,b,0)}` is assembled from three groups of moment
//! covariances:
//!
//! * `c1`: fourth-order moment against fourth-order moment,
//! * `c2`: fourth-order moments against products of autocorrelations,
//! * `c3`: products of autocorrelations against each other.
//!
//! Each elementary covariance `cov{m_a, m_b}` of two sample moments is
//! estimated by the truncated lag sum
//! `(1/N) * sum_{tau=-K..K} [ m_{a,b}(tau) - m_a * m_b ]`, where `m_{a,b}(tau)`
//! is the joint moment of the product `a(t) b(t + tau)`.
//!
//! Two ways of combining the groups are available through [`CovarianceForm`].
//! [`CovarianceForm::DeltaMethod`] linearises `c4 = m4 - r(l)^2 - r(l) r(-l) - r(0)^2`
//! around the sample moments: the cross group enters with a minus sign and the
//! autocorrelation group keeps its mean terms. It is the default here; under
//! Gaussian input `N * cov{c4(0,0,0)}` converges to `24 sigma^8`.
//! [`CovarianceForm::AsPrinted`] adds `c1 + c2 + c3` with the closed-form
//! `c3` built from squared moment covariances. It is kept for comparison; it
//! overstates the variance of Gaussian input by roughly an order of magnitude.
//!
//! [`CovarianceForm::GaussianNull`] skips the higher-order moments entirely.
//! For a Gaussian process the linearised cumulant estimator is a sum of
//! fourth-order Wick products, whose covariance is a permanent of
//! autocorrelations:
//! `N cov = sum_{tau=-K..K} perm[ r(a_i - b_j - tau) ]` with `a = (0, 0, l, l)`
//! and `b = (0, 0, b, b)`. It is exact only under the Gaussian hypothesis but
//! has far less sampling noise than the moment-based forms, which is why the
//! detector uses it by default: the eighth-order sample moments in `c1` are
//! noisy enough at a few thousand samples to inflate the quadratic form.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::hos::{autocorr_biased, RealSeries};
use crate::{Error, Result};

/// Relative autocorrelation level under which a lag counts as decorrelated.
pub const DEFAULT_KN_REL_TOL: f64 = 0.05;

/// How the three covariance groups are combined into a matrix entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CovarianceForm {
    /// `c1 - c2 + sum_ab w_a w_b cov{r(a), r(b)}`.
    #[default]
    DeltaMethod,
    /// `c1 + c2 + c3` with the closed-form `c3`.
    AsPrinted,
    /// Covariance the cumulant estimates would have if the input were a
    /// Gaussian process with the measured autocorrelation.
    GaussianNull,
}

/// Symmetric `(M+1) x (M+1)` covariance matrix of a cumulant vector.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceEstimate {
    matrix: DMatrix<f64>,
    kn: usize,
    series_len: usize,
}

impl CovarianceEstimate {
    pub fn new(matrix: DMatrix<f64>, kn: usize, series_len: usize) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::Dimension {
                expected: matrix.nrows(),
                actual: matrix.ncols(),
            });
        }
        Ok(Self {
            matrix,
            kn,
            series_len,
        })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn kn(&self) -> usize {
        self.kn
    }

    pub fn series_len(&self) -> usize {
        self.series_len
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }
}

/// Named partial sums of the `c2` and `c3` groups for one `(l, b)` pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct CovarianceTerms {
    /// cov{m4(l,l,0), r(b)}
    pub omega: f64,
    /// cov{m4(l,l,0), r(-b)}
    pub phi: f64,
    /// cov{m4(l,l,0), r(0)}
    pub psi: f64,
    /// cov{r(l), r(b)}
    pub gamma: f64,
    /// cov{r(l), r(-b)}
    pub lambda: f64,
    /// cov{r(l), r(0)}
    pub theta: f64,
    /// cov{r(-l), r(-b)}
    pub delta: f64,
    /// Same defining sum as `gamma`.
    pub upsilon: f64,
    /// cov{r(-l), r(b)}
    pub neg_lag_beta: f64,
    /// cov{r(-l), r(0)}
    pub neg_lag_zero: f64,
    /// cov{r(0), r(-b)}
    pub zero_neg_beta: f64,
    /// cov{r(0), r(0)}
    pub zero_zero: f64,
}

/// Lag products of one series, zero-padded to the series length, with their
/// `[-K, K]` window sums.
struct Product {
    values: Vec<f64>,
    window: Vec<f64>,
    mean: f64,
}

impl Product {
    fn new(values: Vec<f64>, kn: usize) -> Self {
        let n = values.len();
        let mean = values.iter().sum::<f64>() / n as f64;
        let window = (0..n)
            .map(|t| {
                let lo = t.saturating_sub(kn);
                let hi = (t + kn).min(n - 1);
                values[lo..=hi].iter().sum()
            })
            .collect();
        Self {
            values,
            window,
            mean,
        }
    }
}

/// Precomputed lag products for covariance estimation up to a fixed lag span.
///
/// Holds `y(t)^2 y(t+l)^2` for `l = 0..=M` and `y(t) y(t+b)` for
/// `b = -M..=M`. Every moment covariance is then a single pass over the series.
pub struct CumulantCovariance {
    n: usize,
    kn: usize,
    max_lag: usize,
    quartic: Vec<Product>,
    pairs: Vec<Product>,
    /// `r(k)` for `k = 0..=2M + K`, zero past the end of the series.
    acf: Vec<f64>,
}

impl CumulantCovariance {
    pub fn new(series: &RealSeries, max_lag: usize, kn: usize) -> Result<Self> {
        let x = series.as_slice();
        let n = x.len();
        if max_lag + kn >= n {
            return Err(Error::Range {
                what: "lag span plus K_N",
                value: (max_lag + kn) as i64,
                limit: n as i64 - 1,
            });
        }
        let quartic = (0..=max_lag)
            .map(|l| {
                let mut v = vec![0.0; n];
                for t in 0..n - l {
                    let p = x[t] * x[t + l];
                    v[t] = p * p;
                }
                Product::new(v, kn)
            })
            .collect();
        let m = max_lag as isize;
        let pairs = (-m..=m)
            .map(|b| {
                let mut v = vec![0.0; n];
                let start = (-b).max(0) as usize;
                let end = (n as isize - b.max(0)) as usize;
                for (t, slot) in v.iter_mut().enumerate().take(end).skip(start) {
                    *slot = x[t] * x[(t as isize + b) as usize];
                }
                Product::new(v, kn)
            })
            .collect();
        let acf = null_acf(x, max_lag, kn);
        Ok(Self {
            n,
            kn,
            max_lag,
            quartic,
            pairs,
            acf,
        })
    }

    pub fn kn(&self) -> usize {
        self.kn
    }

    pub fn max_lag(&self) -> usize {
        self.max_lag
    }

    fn check(&self, lag: usize, beta: usize) -> Result<()> {
        let worst = lag.max(beta);
        if worst > self.max_lag {
            return Err(Error::Range {
                what: "covariance lag",
                value: worst as i64,
                limit: self.max_lag as i64,
            });
        }
        Ok(())
    }

    fn pair(&self, b: isize) -> &Product {
        &self.pairs[(b + self.max_lag as isize) as usize]
    }

    /// `(1/N) sum_tau [ m_{a,b}(tau) - m_a m_b ]`.
    fn lagged_cov(&self, a: &Product, b: &Product) -> f64 {
        let joint: f64 = a.values.iter().zip(&b.window).map(|(u, w)| u * w).sum();
        let nf = self.n as f64;
        let width = (2 * self.kn + 1) as f64;
        (joint / nf - width * a.mean * b.mean) / nf
    }

    /// Sample autocorrelation `r(b)`.
    fn r(&self, b: isize) -> f64 {
        self.pair(b).mean
    }

    /// cov{m4(l,l,0), r(b)}
    fn cov_quartic_pair(&self, lag: usize, b: isize) -> f64 {
        self.lagged_cov(&self.quartic[lag], self.pair(b))
    }

    /// cov{r(a), r(b)}
    fn cov_pair_pair(&self, a: isize, b: isize) -> f64 {
        self.lagged_cov(self.pair(a), self.pair(b))
    }

    pub(crate) fn terms(&self, lag: usize, beta: usize) -> Result<CovarianceTerms> {
        self.check(lag, beta)?;
        let (l, b) = (lag as isize, beta as isize);
        let gamma = self.cov_pair_pair(l, b);
        Ok(CovarianceTerms {
            omega: self.cov_quartic_pair(lag, b),
            phi: self.cov_quartic_pair(lag, -b),
            psi: self.cov_quartic_pair(lag, 0),
            gamma,
            lambda: self.cov_pair_pair(l, -b),
            theta: self.cov_pair_pair(l, 0),
            delta: self.cov_pair_pair(-l, -b),
            upsilon: gamma,
            neg_lag_beta: self.cov_pair_pair(-l, b),
            neg_lag_zero: self.cov_pair_pair(-l, 0),
            zero_neg_beta: self.cov_pair_pair(0, -b),
            zero_zero: self.cov_pair_pair(0, 0),
        })
    }

    /// cov{m4(l,l,0), m4(b,b,0)}.
    pub fn c1(&self, lag: usize, beta: usize) -> Result<f64> {
        self.check(lag, beta)?;
        Ok(self.lagged_cov(&self.quartic[lag], &self.quartic[beta]))
    }

    /// `Omega (2 r(b) + r(-b)) + Phi r(b) + 2 Psi r(0)`: the covariance of
    /// `m4(l,l,0)` with the autocorrelation products of `c4(b,b,0)`.
    fn cross_half(&self, lag: usize, beta: usize) -> f64 {
        let b = beta as isize;
        let omega = self.cov_quartic_pair(lag, b);
        let phi = self.cov_quartic_pair(lag, -b);
        let psi = self.cov_quartic_pair(lag, 0);
        omega * (2.0 * self.r(b) + self.r(-b)) + phi * self.r(b) + 2.0 * psi * self.r(0)
    }

    /// Cross group: the six covariances of a fourth-order moment with an
    /// autocorrelation product, three per side. Equals
    /// `2 (Omega (2 r(b) + r(-b)) + Phi r(b) + 2 Psi r(0))` on the diagonal.
    pub fn c2(&self, lag: usize, beta: usize) -> Result<f64> {
        self.check(lag, beta)?;
        Ok(self.cross_half(lag, beta) + self.cross_half(beta, lag))
    }

    /// Closed-form autocorrelation group built from squared moment covariances.
    pub fn c3(&self, lag: usize, beta: usize) -> Result<f64> {
        let t = self.terms(lag, beta)?;
        let (l, b) = (lag as isize, beta as isize);
        let cov_l_negb = self.cov_pair_pair(l, -b);
        Ok(2.0 * t.gamma * t.gamma
            + 2.0 * t.gamma * t.lambda
            + 2.0 * t.theta * t.theta
            + 2.0 * t.gamma * cov_l_negb
            + t.delta * (t.gamma + t.lambda)
            + 2.0 * t.theta * t.neg_lag_zero
            + 2.0 * t.upsilon * t.upsilon
            + 2.0 * t.upsilon * t.zero_neg_beta
            + 2.0 * t.zero_zero * t.zero_zero)
    }

    /// Linearised autocorrelation group:
    /// `sum_{a in {l,-l,0}} sum_{b' in {b,-b,0}} w_l(a) w_b(b') cov{r(a), r(b')}`
    /// with weights `w_l = (2 r(l) + r(-l), r(l), 2 r(0))`.
    pub fn c3_linearized(&self, lag: usize, beta: usize) -> Result<f64> {
        self.check(lag, beta)?;
        let weights = |k: usize| {
            let k = k as isize;
            [
                (k, 2.0 * self.r(k) + self.r(-k)),
                (-k, self.r(k)),
                (0, 2.0 * self.r(0)),
            ]
        };
        let mut sum = 0.0;
        for (a, wa) in weights(lag) {
            for (b, wb) in weights(beta) {
                sum += wa * wb * self.cov_pair_pair(a, b);
            }
        }
        Ok(sum)
    }

    /// Gaussian-process covariance of `c4(l,l,0)` and `c4(b,b,0)`.
    pub fn gaussian_null(&self, lag: usize, beta: usize) -> Result<f64> {
        self.check(lag, beta)?;
        let r = |d: isize| self.acf[d.unsigned_abs()];
        Ok(wick_lag_sum(r, lag, beta, self.kn) / self.n as f64)
    }

    pub fn entry(&self, lag: usize, beta: usize, form: CovarianceForm) -> Result<f64> {
        Ok(match form {
            CovarianceForm::DeltaMethod => {
                self.c1(lag, beta)? - self.c2(lag, beta)? + self.c3_linearized(lag, beta)?
            }
            CovarianceForm::AsPrinted => self.c1(lag, beta)? + self.c2(lag, beta)? + self.c3(lag, beta)?,
            CovarianceForm::GaussianNull => self.gaussian_null(lag, beta)?,
        })
    }

    /// Fills the lower triangle and mirrors it.
    pub fn matrix(&self, form: CovarianceForm) -> Result<CovarianceEstimate> {
        let dim = self.max_lag + 1;
        let mut m = DMatrix::zeros(dim, dim);
        for lag in 0..dim {
            for beta in 0..=lag {
                let v = self.entry(lag, beta, form)?;
                m[(lag, beta)] = v;
                m[(beta, lag)] = v;
            }
        }
        CovarianceEstimate::new(m, self.kn, self.n)
    }
}

/// `r(k)` for `k = 0..=2M + K`, zero past the end of the series.
fn null_acf(x: &[f64], max_lag: usize, kn: usize) -> Vec<f64> {
    let n = x.len();
    (0..=2 * max_lag + kn)
        .map(|k| {
            if k >= n {
                0.0
            } else {
                x[..n - k].iter().zip(&x[k..]).map(|(a, b)| a * b).sum::<f64>() / n as f64
            }
        })
        .collect()
}

/// Gaussian-null covariance matrix from the autocorrelation alone, without
/// building the higher-order product sequences.
pub fn gaussian_null_matrix(series: &RealSeries, max_lag: usize, kn: usize) -> Result<CovarianceEstimate> {
    let x = series.as_slice();
    let n = x.len();
    if max_lag + kn >= n {
        return Err(Error::Range {
            what: "lag span plus K_N",
            value: (max_lag + kn) as i64,
            limit: n as i64 - 1,
        });
    }
    let acf = null_acf(x, max_lag, kn);
    let r = |d: isize| acf[d.unsigned_abs()];
    let dim = max_lag + 1;
    let mut m = DMatrix::zeros(dim, dim);
    for lag in 0..dim {
        for beta in 0..=lag {
            let v = wick_lag_sum(r, lag, beta, kn) / n as f64;
            m[(lag, beta)] = v;
            m[(beta, lag)] = v;
        }
    }
    CovarianceEstimate::new(m, kn, n)
}

/// `sum_{tau=-K..K} perm[ r(a_i - b_j) ]` with `a = (0, 0, l, l)` and
/// `b = (tau, tau, tau + b, tau + b)`.
fn wick_lag_sum(r: impl Fn(isize) -> f64, lag: usize, beta: usize, kn: usize) -> f64 {
    let a = [0, 0, lag as isize, lag as isize];
    let k = kn as isize;
    (-k..=k)
        .map(|tau| {
            let b = [tau, tau, tau + beta as isize, tau + beta as isize];
            let mut m = [[0.0; 4]; 4];
            for i in 0..4 {
                for j in 0..4 {
                    m[i][j] = r(a[i] - b[j]);
                }
            }
            permanent4(&m)
        })
        .sum()
}

/// Permanent of a 4x4 matrix by expansion along the first row.
fn permanent4(m: &[[f64; 4]; 4]) -> f64 {
    let perm3 = |skip: usize| -> f64 {
        let c: Vec<usize> = (0..4).filter(|&j| j != skip).collect();
        let (r1, r2, r3) = (&m[1], &m[2], &m[3]);
        r1[c[0]] * (r2[c[1]] * r3[c[2]] + r2[c[2]] * r3[c[1]])
            + r1[c[1]] * (r2[c[0]] * r3[c[2]] + r2[c[2]] * r3[c[0]])
            + r1[c[2]] * (r2[c[0]] * r3[c[1]] + r2[c[1]] * r3[c[0]])
    };
    (0..4).map(|j| m[0][j] * perm3(j)).sum()
}

/// Picks the truncation limit `K_N` of the covariance lag sums.
///
/// Finds the first lag `tau >= 1` at which `|r(tau)|` and the next three
/// autocorrelations all fall below `rel_tol * r(0)`, returns `tau + 1`, and
/// clamps the result to `[max_lag + 1, min(cap, N / 10)]`. The upper bound wins
/// when the interval is empty.
pub fn select_kn(series: &RealSeries, max_lag: usize, rel_tol: f64, cap: usize) -> usize {
    let n = series.len();
    let upper = cap.min(n / 10).max(1);
    let lower = max_lag + 1;
    let r0 = autocorr_biased(series, 0).unwrap_or(0.0);
    let limit = rel_tol * r0.abs();
    let below = |tau: usize| -> bool {
        tau < n
            && autocorr_biased(series, tau as isize)
                .map(|r| r.abs() < limit)
                .unwrap_or(true)
    };
    let found = if r0 <= 0.0 {
        lower
    } else {
        (1..=upper)
            .find(|&tau| (tau..tau + 4).all(below))
            .map(|tau| tau + 1)
            .unwrap_or(upper)
    };
    found.max(lower).min(upper)
}

/// Default `K_N` for a lag span `M`: [`select_kn`] with a 5% tolerance and a
/// cap of `4 (M + 1)`.
pub fn default_kn(series: &RealSeries, max_lag: usize) -> usize {
    select_kn(series, max_lag, DEFAULT_KN_REL_TOL, 4 * (max_lag + 1))
}

fn single_pair(series: &RealSeries, lag: usize, beta: usize, kn: usize) -> Result<CumulantCovariance> {
    CumulantCovariance::new(series, lag.max(beta), kn)
}

/// Fourth-order moment group `c1` for one matrix entry.
pub fn cov_c1(series: &RealSeries, lag: usize, beta: usize, kn: usize) -> Result<f64> {
    single_pair(series, lag, beta, kn)?.c1(lag, beta)
}

/// Cross group `c2` for one matrix entry.
pub fn cov_c2(series: &RealSeries, lag: usize, beta: usize, kn: usize) -> Result<f64> {
    single_pair(series, lag, beta, kn)?.c2(lag, beta)
}

/// Closed-form autocorrelation group `c3` for one matrix entry.
pub fn cov_c3(series: &RealSeries, lag: usize, beta: usize, kn: usize) -> Result<f64> {
    single_pair(series, lag, beta, kn)?.c3(lag, beta)
}

/// Covariance matrix of `c4(l,l,0)`, `l = 0..=max_lag`, in the default form.
pub fn covariance_matrix(series: &RealSeries, max_lag: usize, kn: usize) -> Result<CovarianceEstimate> {
    covariance_matrix_with(series, max_lag, kn, CovarianceForm::default())
}

pub fn covariance_matrix_with(
    series: &RealSeries,
    max_lag: usize,
    kn: usize,
    form: CovarianceForm,
) -> Result<CovarianceEstimate> {
    match form {
        CovarianceForm::GaussianNull => gaussian_null_matrix(series, max_lag, kn),
        _ => CumulantCovariance::new(series, max_lag, kn)?.matrix(form),
    }
}
