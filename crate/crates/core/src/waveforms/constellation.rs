use num_complex::Complex64;
use rand::Rng;

use super::{check_order, ModulationScheme};
use crate::{Error, Result};

/// Points of a unit-average-power constellation.
///
/// PSK uses the `order`-th roots of unity. QAM uses a square grid when
/// `log2(order)` is even; odd sizes use a cross constellation (a
/// `3*2^(k-1)`-sided square grid with `2^(k-2)`-sided corner squares removed,
/// giving 32 and 128 points), with two fall-backs: order 2 is antipodal on the
/// real axis and order 8 is a 4x2 rectangle.
pub fn constellation(scheme: ModulationScheme, order: u32) -> Result<Vec<Complex64>> {
    check_order(order)?;
    let points = match scheme {
        ModulationScheme::Psk => (0..order)
            .map(|k| Complex64::from_polar(1.0, std::f64::consts::TAU * k as f64 / order as f64))
            .collect(),
        ModulationScheme::Qam => qam_points(order),
        ModulationScheme::Fsk => {
            return Err(Error::config(
                "FSK has no symbol constellation; it is generated as tones",
            ))
        }
    };
    Ok(unit_power(points))
}

fn grid_levels(n: u32) -> impl Iterator<Item = f64> + Clone {
    (0..n).map(move |i| 2.0 * i as f64 - (n as f64 - 1.0))
}

fn qam_points(order: u32) -> Vec<Complex64> {
    let bits = order.trailing_zeros();
    match order {
        2 => vec![Complex64::new(-1.0, 0.0), Complex64::new(1.0, 0.0)],
        8 => grid_levels(4)
            .flat_map(|i| grid_levels(2).map(move |q| Complex64::new(i, q)))
            .collect(),
        _ if bits.is_multiple_of(2) => {
            let side = 1 << (bits / 2);
            grid_levels(side)
                .flat_map(|i| grid_levels(side).map(move |q| Complex64::new(i, q)))
                .collect()
        }
        _ => {
            let k = bits / 2;
            let side = 3 << (k - 1);
            let corner = 1u32 << (k - 1).saturating_sub(1);
            let half = side as f64;
            let edge = half - 2.0 * corner as f64;
            grid_levels(side)
                .flat_map(|i| grid_levels(side).map(move |q| Complex64::new(i, q)))
                .filter(|z| !(z.re.abs() > edge && z.im.abs() > edge))
                .collect()
        }
    }
}

fn unit_power(mut points: Vec<Complex64>) -> Vec<Complex64> {
    let p = points.iter().map(|z| z.norm_sqr()).sum::<f64>() / points.len() as f64;
    let g = 1.0 / p.sqrt();
    points.iter_mut().for_each(|z| *z *= g);
    points
}

pub(crate) fn draw_symbols<R: Rng>(points: &[Complex64], count: usize, rng: &mut R) -> Vec<Complex64> {
    (0..count).map(|_| points[rng.gen_range(0..points.len())]).collect()
}

/// `count` i.i.d. uniform draws from [`constellation`].
pub fn map_symbols(order: u32, scheme: ModulationScheme, count: usize, seed: u64) -> Result<Vec<Complex64>> {
    let points = constellation(scheme, order)?;
    let mut rng = crate::rng::rng_from_seed(seed);
    Ok(draw_symbols(&points, count, &mut rng))
}
