//! Static SVG chart of rejection rate against SNR.

use std::path::Path;

use plotters::prelude::*;

use super::SweepResult;
use crate::{Error, Result};

const PALETTE: [RGBColor; 6] = [
    RGBColor(31, 119, 180),
    RGBColor(214, 39, 40),
    RGBColor(44, 160, 44),
    RGBColor(148, 103, 189),
    RGBColor(255, 127, 14),
    RGBColor(23, 190, 207),
];

fn plot_error(path: &Path, err: impl std::fmt::Display) -> Error {
    Error::Format {
        path: path.to_path_buf(),
        message: format!("plot failed: {err}"),
    }
}

/// Draws one line per (modulation, order, symbols, alpha, M) group, with the
/// Wilson interval as vertical bars.
pub fn plot_sweep(result: &SweepResult, path: &Path) -> Result<()> {
    let finite: Vec<_> = result.rows.iter().filter(|r| r.snr_db.is_finite()).collect();
    if finite.is_empty() {
        return Err(Error::config("nothing to plot: no rows with finite SNR"));
    }
    let lo = finite.iter().map(|r| r.snr_db).fold(f64::INFINITY, f64::min);
    let hi = finite.iter().map(|r| r.snr_db).fold(f64::NEG_INFINITY, f64::max);
    let (lo, hi) = if hi > lo { (lo, hi) } else { (lo - 1.0, hi + 1.0) };

    let mut groups: Vec<(String, Vec<&super::SweepRow>)> = Vec::new();
    for r in &finite {
        let key = format!(
            "{} {} N={} a={} M={}",
            r.modulation, r.order, r.n_symbols, r.alpha, r.m_lags
        );
        match groups.iter_mut().find(|(k, _)| *k == key) {
            Some((_, rows)) => rows.push(r),
            None => groups.push((key, vec![r])),
        }
    }

    let root = SVGBackend::new(path, (800, 560)).into_drawing_area();
    root.fill(&WHITE).map_err(|e| plot_error(path, e))?;
    let mut chart = ChartBuilder::on(&root)
        .margin(20)
        .x_label_area_size(40)
        .y_label_area_size(50)
        .build_cartesian_2d(lo..hi, 0.0..1.0)
        .map_err(|e| plot_error(path, e))?;
    chart
        .configure_mesh()
        .x_desc("SNR (dB)")
        .y_desc("P(reject Gaussian)")
        .draw()
        .map_err(|e| plot_error(path, e))?;

    for (i, (key, rows)) in groups.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let mut pts: Vec<(f64, f64)> = rows.iter().map(|r| (r.snr_db, r.p_reject)).collect();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        chart
            .draw_series(LineSeries::new(pts.clone(), color.stroke_width(2)))
            .map_err(|e| plot_error(path, e))?
            .label(key.as_str())
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], color));
        chart
            .draw_series(pts.iter().map(|&p| Circle::new(p, 3, color.filled())))
            .map_err(|e| plot_error(path, e))?;
        chart
            .draw_series(
                rows.iter()
                    .map(|r| PathElement::new(vec![(r.snr_db, r.ci_lo), (r.snr_db, r.ci_hi)], color)),
            )
            .map_err(|e| plot_error(path, e))?;
    }
    chart
        .configure_series_labels()
        .background_style(WHITE.mix(0.8))
        .border_style(BLACK)
        .position(SeriesLabelPosition::LowerRight)
        .draw()
        .map_err(|e| plot_error(path, e))?;
    root.present().map_err(|e| plot_error(path, e))
}
