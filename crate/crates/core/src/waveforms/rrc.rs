use std::f64::consts::PI;

use crate::{Error, Result};

/// Unnormalised root-raised-cosine impulse response at `t` symbol periods.
fn rrc_at(t: f64, rolloff: f64) -> f64 {
    // Even function; evaluating at |t| keeps the taps exactly symmetric.
    let t = t.abs();
    if t == 0.0 {
        return 1.0 - rolloff + 4.0 * rolloff / PI;
    }
    if rolloff > 0.0 && ((4.0 * rolloff * t).abs() - 1.0).abs() < 1e-12 {
        let a = PI / (4.0 * rolloff);
        return rolloff / 2f64.sqrt() * ((1.0 + 2.0 / PI) * a.sin() + (1.0 - 2.0 / PI) * a.cos());
    }
    let num = (PI * t * (1.0 - rolloff)).sin() + 4.0 * rolloff * t * (PI * t * (1.0 + rolloff)).cos();
    let den = PI * t * (1.0 - (4.0 * rolloff * t).powi(2));
    num / den
}

/// Root-raised-cosine FIR taps, `span_symbols * sps + 1` long, unit energy.
pub fn rrc_taps(rolloff: f64, span_symbols: usize, sps: usize) -> Result<Vec<f64>> {
    if !(0.0..=1.0).contains(&rolloff) {
        return Err(Error::config(format!("roll-off must lie in [0, 1], got {rolloff}")));
    }
    if span_symbols < 2 || sps < 2 {
        return Err(Error::config(format!(
            "RRC span ({span_symbols}) and samples per symbol ({sps}) must both be at least 2"
        )));
    }
    let len = span_symbols * sps + 1;
    let center = (len - 1) as f64 / 2.0;
    let mut taps: Vec<f64> = (0..len)
        .map(|i| rrc_at((i as f64 - center) / sps as f64, rolloff))
        .collect();
    let energy = taps.iter().map(|h| h * h).sum::<f64>().sqrt();
    taps.iter_mut().for_each(|h| *h /= energy);
    Ok(taps)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_and_unit_energy() {
        for (b, span, sps) in [(0.3, 8, 4), (0.0, 6, 2), (1.0, 10, 8), (0.25, 4, 4), (0.5, 7, 3)] {
            let h = rrc_taps(b, span, sps).unwrap();
            assert_eq!(h.len(), span * sps + 1);
            for i in 0..h.len() {
                assert!((h[i] - h[h.len() - 1 - i]).abs() < 1e-15);
            }
            assert!((h.iter().map(|x| x * x).sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(h.iter().all(|x| x.is_finite()));
        }
    }

    #[test]
    fn center_tap_limit() {
        // With T = 4 samples the grid never hits t = T / (4 * 0.3), so every
        // other tap comes from the closed form.
        let (b, span, sps) = (0.3, 8usize, 4usize);
        let h = rrc_taps(b, span, sps).unwrap();
        let raw: Vec<f64> = (0..=span * sps)
            .map(|i| {
                let t = (i as f64 - (span * sps / 2) as f64) / sps as f64;
                if t == 0.0 {
                    f64::NAN
                } else {
                    ((PI * t * (1.0 - b)).sin() + 4.0 * b * t * (PI * t * (1.0 + b)).cos())
                        / (PI * t * (1.0 - (4.0 * b * t).powi(2)))
                }
            })
            .collect();
        let center_raw = 1.0 - b + 4.0 * b / PI;
        let energy: f64 = raw
            .iter()
            .map(|v| if v.is_nan() { center_raw * center_raw } else { v * v })
            .sum();
        let expected = center_raw / energy.sqrt();
        assert!((h[span * sps / 2] - expected).abs() < 1e-14);
    }

    #[test]
    fn singular_points_are_continuous() {
        // roll-off 0.25 and 4 samples per symbol hits t = +-1 exactly.
        let b = 0.25;
        let at = rrc_at(1.0, b);
        let near = rrc_at(1.0 + 1e-7, b);
        assert!((at - near).abs() < 1e-5);
        let h = rrc_taps(b, 6, 4).unwrap();
        assert!(h.iter().all(|x| x.is_finite()));
    }

    #[test]
    fn invalid_arguments() {
        assert!(rrc_taps(1.5, 8, 4).is_err());
        assert!(rrc_taps(0.3, 1, 4).is_err());
        assert!(rrc_taps(0.3, 8, 1).is_err());
    }
}
