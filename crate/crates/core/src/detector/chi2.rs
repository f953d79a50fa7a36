#![allow(clippy::excessive_precision)]

//! Chi-squared upper-tail quantiles via the regularized incomplete gamma function.

use crate::{Error, Result};

const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Natural log of the gamma function for `x > 0` (Lanczos, g = 7).
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = LANCZOS[0];
    let t = x + 7.5;
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

/// Regularized lower incomplete gamma `P(a, x)`.
pub fn gamma_p(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x < a + 1.0 {
        series_p(a, x)
    } else {
        1.0 - continued_fraction_q(a, x)
    }
}

/// Regularized upper incomplete gamma `Q(a, x) = 1 - P(a, x)`.
pub fn gamma_q(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        1.0
    } else if x < a + 1.0 {
        1.0 - series_p(a, x)
    } else {
        continued_fraction_q(a, x)
    }
}

fn series_p(a: f64, x: f64) -> f64 {
    let mut term = 1.0 / a;
    let mut sum = term;
    let mut ap = a;
    for _ in 0..1000 {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if term.abs() < sum.abs() * 1e-17 {
            break;
        }
    }
    sum * (-x + a * x.ln() - ln_gamma(a)).exp()
}

// Modified Lentz evaluation of the continued fraction for Q.
fn continued_fraction_q(a: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..1000 {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < 1e-17 {
            break;
        }
    }
    (-x + a * x.ln() - ln_gamma(a)).exp() * h
}

/// `P[chi2_dof >= x]`.
pub fn chi2_sf(dof: u32, x: f64) -> f64 {
    gamma_q(dof as f64 / 2.0, x / 2.0)
}

/// Threshold `t` with `P[chi2_dof >= t] = significance`.
///
/// Starts from the Wilson-Hilferty approximation and refines with Newton steps
/// on the tail probability, falling back to bisection whenever a step leaves
/// the current bracket.
pub fn chi2_quantile(dof: u32, significance: f64) -> Result<f64> {
    if dof == 0 {
        return Err(Error::config("chi-squared degrees of freedom must be at least 1"));
    }
    if !(significance > 0.0 && significance < 1.0) {
        return Err(Error::config(format!(
            "significance must lie in (0, 1), got {significance}"
        )));
    }
    let k = dof as f64;
    let half = k / 2.0;
    let ln_norm = ln_gamma(half) + half * 2f64.ln();
    let density = |x: f64| ((half - 1.0) * x.ln() - x / 2.0 - ln_norm).exp();

    // Bracket [lo, hi] with sf(lo) > significance >= sf(hi).
    let mut lo = 0.0;
    let mut hi = k.max(1.0);
    while chi2_sf(dof, hi) > significance {
        lo = hi;
        hi *= 2.0;
    }

    let z = standard_normal_upper_quantile(significance);
    let h = 2.0 / (9.0 * k);
    let mut x = k * (1.0 - h + z * h.sqrt()).powi(3);
    if !(x > lo && x < hi) {
        x = 0.5 * (lo + hi);
    }
    for _ in 0..200 {
        let f = chi2_sf(dof, x) - significance;
        if f > 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let step = f / density(x);
        let mut next = x + step;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = 0.5 * (lo + hi);
        }
        if (next - x).abs() <= 1e-14 * x.max(1.0) {
            return Ok(next);
        }
        x = next;
    }
    Err(Error::Numerical(format!(
        "chi-squared quantile did not converge for dof={dof}, alpha={significance}"
    )))
}

// Acklam's rational approximation; only used as a starting point.
fn standard_normal_upper_quantile(p: f64) -> f64 {
    let q = 1.0 - p;
    let a = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    let b = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    let c = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    let d = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    let tail = |r: f64| {
        (((((c[0] * r + c[1]) * r + c[2]) * r + c[3]) * r + c[4]) * r + c[5])
            / ((((d[0] * r + d[1]) * r + d[2]) * r + d[3]) * r + 1.0)
    };
    if q < 0.02425 {
        tail((-2.0 * q.ln()).sqrt())
    } else if q > 1.0 - 0.02425 {
        -tail((-2.0 * (1.0 - q).ln()).sqrt())
    } else {
        let u = q - 0.5;
        let r = u * u;
        (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * u
            / (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_values() {
        for (dof, alpha, expected) in [
            (1, 0.05, 3.841_459),
            (7, 0.01, 18.475_307),
            (6, 0.10, 10.644_641),
        ] {
            let t = chi2_quantile(dof, alpha).unwrap();
            assert!((t - expected).abs() < 1e-6, "dof={dof} alpha={alpha}: {t}");
        }
    }

    #[test]
    fn quantile_inverts_tail() {
        for dof in [1, 2, 3, 7, 13, 30, 100] {
            for alpha in [0.5, 0.1, 0.01, 1e-4] {
                let t = chi2_quantile(dof, alpha).unwrap();
                assert!((chi2_sf(dof, t) - alpha).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn quantile_decreases_with_significance() {
        let mut prev = f64::INFINITY;
        for alpha in [0.001, 0.01, 0.05, 0.1, 0.3, 0.9] {
            let t = chi2_quantile(7, alpha).unwrap();
            assert!(t < prev);
            prev = t;
        }
    }

    #[test]
    fn domain_errors() {
        assert!(chi2_quantile(0, 0.1).is_err());
        assert!(chi2_quantile(3, 0.0).is_err());
        assert!(chi2_quantile(3, 1.0).is_err());
        assert!(chi2_quantile(3, f64::NAN).is_err());
    }

    #[test]
    fn ln_gamma_known_values() {
        assert!(ln_gamma(1.0).abs() < 1e-14);
        assert!((ln_gamma(0.5) - std::f64::consts::PI.sqrt().ln()).abs() < 1e-13);
        assert!((ln_gamma(10.0) - 362_880f64.ln()).abs() < 1e-12);
    }
}
