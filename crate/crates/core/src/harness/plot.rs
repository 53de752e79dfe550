//! Static SVG charts of sweep results; the CSV files remain the canonical
//! output.

use std::path::Path;

use anyhow::{anyhow, Result};
use plotters::prelude::*;

use super::{HSweep, PRow};

fn log_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| *v > 0.0 && v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if lo.is_finite() {
        (lo / 2.0, hi * 2.0)
    } else {
        (1e-16, 1.0)
    }
}

fn draw(path: &Path, title: &str, xlabel: &str, series: &[(&str, Vec<(f64, f64)>)], log_x: bool) -> Result<()> {
    let err = |e: &dyn std::fmt::Display| anyhow!("plot: {e}");
    let root = SVGBackend::new(path, (720, 480)).into_drawing_area();
    root.fill(&WHITE).map_err(|e| err(&e))?;
    let (x0, x1) = if log_x {
        log_range(series.iter().flat_map(|s| s.1.iter().map(|p| p.0)))
    } else {
        let xs = series.iter().flat_map(|s| s.1.iter().map(|p| p.0));
        xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v - 0.5), b.max(v + 0.5)))
    };
    let (y0, y1) = log_range(series.iter().flat_map(|s| s.1.iter().map(|p| p.1)));
    let mut builder = ChartBuilder::on(&root);
    builder.caption(title, ("sans-serif", 20)).margin(12).x_label_area_size(40).y_label_area_size(70);
    let colors = [BLUE, RED, GREEN, BLACK];
    macro_rules! body {
        ($chart:expr) => {{
            let mut chart = $chart;
            chart.configure_mesh().x_desc(xlabel).y_desc("error").draw().map_err(|e| err(&e))?;
            for (k, (name, pts)) in series.iter().enumerate() {
                let c = colors[k % colors.len()];
                let pts: Vec<(f64, f64)> = pts.iter().copied().filter(|p| p.1 > 0.0 && p.1.is_finite()).collect();
                chart
                    .draw_series(LineSeries::new(pts.clone(), c.stroke_width(2)))
                    .map_err(|e| err(&e))?
                    .label(*name)
                    .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 16, y)], c));
                chart.draw_series(pts.iter().map(|p| Circle::new(*p, 3, c.filled()))).map_err(|e| err(&e))?;
            }
            chart.configure_series_labels().border_style(BLACK).background_style(WHITE).draw().map_err(|e| err(&e))?;
        }};
    }
    if log_x {
        body!(builder.build_cartesian_2d((x0..x1).log_scale(), (y0..y1).log_scale()).map_err(|e| err(&e))?);
    } else {
        body!(builder.build_cartesian_2d(x0..x1, (y0..y1).log_scale()).map_err(|e| err(&e))?);
    }
    root.present().map_err(|e| err(&e))?;
    Ok(())
}

/// Log–log chart of energy and L² errors against `h_max`.
pub fn plot_h_sweep(sweep: &HSweep, path: &Path) -> Result<()> {
    let r0 = &sweep.rows[0];
    let energy = sweep.rows.iter().map(|r| (r.h_max, r.report.energy)).collect();
    let l2 = sweep.rows.iter().map(|r| (r.h_max, r.report.l2_total)).collect();
    let title = format!(
        "{} p={}: energy rate {:.2}, L2 rate {:.2}",
        r0.space, r0.p, sweep.energy_rate, sweep.l2_rate
    );
    draw(path, &title, "h", &[("energy", energy), ("L2", l2)], true)
}

/// Errors against the polynomial degree.
pub fn plot_p_sweep(rows: &[PRow], path: &Path) -> Result<()> {
    let ok: Vec<_> = rows.iter().filter_map(|r| r.result.as_ref().ok()).collect();
    let energy = ok.iter().map(|r| (r.p as f64, r.report.energy)).collect();
    let l2 = ok.iter().map(|r| (r.p as f64, r.report.l2_total)).collect();
    let space = ok.first().map(|r| r.space.as_str()).unwrap_or("");
    draw(path, &format!("{space}: p-sweep"), "p", &[("energy", energy), ("L2", l2)], false)
}
