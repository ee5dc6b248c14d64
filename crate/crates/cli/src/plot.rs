use std::path::Path;

use hfsim::pipeline::{Mode, PointReport};
use hfsim::{Error, Result};
use plotters::prelude::*;

const COLORS: [RGBColor; 4] = [RED, BLUE, GREEN, MAGENTA];

fn plot_err<E: std::fmt::Display>(e: E) -> Error {
    Error::Numerical(format!("plot: {e}"))
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    let pad = ((hi - lo) * 0.05).max(1e-9);
    (lo - pad, hi + pad)
}

/// Energy and absolute error against spacing, one series per mode.
pub fn render_curve(path: &Path, curve: &[(f64, PointReport)], modes: &[Mode]) -> Result<()> {
    let root = SVGBackend::new(path, (1100, 450)).into_drawing_area();
    root.fill(&WHITE).map_err(plot_err)?;
    let (left, right) = root.split_horizontally(550);

    let xs = bounds(curve.iter().map(|(s, _)| *s));
    let energies = curve
        .iter()
        .flat_map(|(_, r)| r.results.iter().map(|m| m.energy).chain([r.reference_energy]));
    let ys = bounds(energies);
    let mut energy = ChartBuilder::on(&left)
        .caption("Energy", ("sans-serif", 20))
        .margin(10)
        .x_label_area_size(35)
        .y_label_area_size(60)
        .build_cartesian_2d(xs.0..xs.1, ys.0..ys.1)
        .map_err(plot_err)?;
    energy
        .configure_mesh()
        .x_desc("spacing (Å)")
        .y_desc("energy (Ha)")
        .draw()
        .map_err(plot_err)?;
    energy
        .draw_series(LineSeries::new(curve.iter().map(|(s, r)| (*s, r.reference_energy)), BLACK))
        .map_err(plot_err)?
        .label("RHF")
        .legend(|(x, y)| PathElement::new(vec![(x, y), (x + 15, y)], BLACK));

    let floor = 1e-6;
    let errs = curve
        .iter()
        .flat_map(|(_, r)| r.results.iter().map(|m| m.error.abs().max(floor)));
    let (lo, hi) = errs.fold((f64::INFINITY, 0.0f64), |(lo, hi), v| (lo.min(v), hi.max(v)));
    let mut error = ChartBuilder::on(&right)
        .caption("|error|", ("sans-serif", 20))
        .margin(10)
        .x_label_area_size(35)
        .y_label_area_size(60)
        .build_cartesian_2d(xs.0..xs.1, (lo * 0.5..hi * 2.0).log_scale())
        .map_err(plot_err)?;
    error
        .configure_mesh()
        .x_desc("spacing (Å)")
        .y_desc("|E − E_RHF| (Ha)")
        .draw()
        .map_err(plot_err)?;

    for (k, &mode) in modes.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let series: Vec<(f64, f64, f64)> = curve
            .iter()
            .filter_map(|(s, r)| r.result(mode).map(|m| (*s, m.energy, m.error.abs().max(floor))))
            .collect();
        energy
            .draw_series(LineSeries::new(series.iter().map(|p| (p.0, p.1)), color))
            .map_err(plot_err)?
            .label(mode.label())
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 15, y)], color));
        error
            .draw_series(LineSeries::new(series.iter().map(|p| (p.0, p.2)), color))
            .map_err(plot_err)?;
    }
    energy
        .configure_series_labels()
        .background_style(WHITE.mix(0.8))
        .border_style(BLACK)
        .draw()
        .map_err(plot_err)?;
    root.present().map_err(plot_err)?;
    Ok(())
}
