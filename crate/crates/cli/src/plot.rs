//! Self-contained SVG plots of CSV series.

use plotters::prelude::*;

use crate::error::{CliError, CliResult};
use crate::table::Series;

const SIZE: (u32, u32) = (800, 600);
/// Largest heatmap resolution per axis; denser grids are strided.
const MAX_CELLS: usize = 128;
const PALETTE: [RGBColor; 4] = [BLUE, RED, GREEN, MAGENTA];

/// Analytic curve drawn over a line plot.
pub struct Overlay<'a> {
    pub label: String,
    pub f: &'a dyn Fn(f64) -> f64,
}

fn plot_err<E: std::fmt::Debug>(e: E) -> CliError {
    CliError::Numerical(format!("plot rendering: {e:?}"))
}

fn finite_range(values: impl Iterator<Item = f64>) -> Option<(f64, f64)> {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if lo > hi {
        return None;
    }
    let pad = if hi > lo { 0.05 * (hi - lo) } else { 0.5 * lo.abs().max(1.0) };
    Some((lo - pad, hi + pad))
}

/// Line plot of `ys` against `x`; axes are labeled from the column headers.
/// `markers` draws points instead of connected lines.
pub fn line_plot(
    series: &Series,
    x: &str,
    ys: &[&str],
    overlay: Option<Overlay>,
    markers: bool,
    title: &str,
) -> CliResult<String> {
    let xs = series.column(x)?;
    let cols: Vec<&[f64]> = ys.iter().map(|y| series.column(y)).collect::<CliResult<_>>()?;
    if series.is_empty() || ys.is_empty() {
        return Err(CliError::validation(format!("cannot plot an empty series ({title})")));
    }
    let xr = finite_range(xs.iter().copied())
        .ok_or_else(|| CliError::validation(format!("column {x:?} has no finite values")))?;
    let overlay_pts: Vec<(f64, f64)> = overlay
        .as_ref()
        .map(|o| {
            (0..=400)
                .map(|k| xr.0 + (xr.1 - xr.0) * k as f64 / 400.0)
                .map(|t| (t, (o.f)(t)))
                .filter(|(_, v)| v.is_finite())
                .collect()
        })
        .unwrap_or_default();
    let yr = finite_range(cols.iter().flat_map(|c| c.iter().copied()).chain(overlay_pts.iter().map(|p| p.1)))
        .ok_or_else(|| CliError::validation(format!("columns {ys:?} have no finite values")))?;

    let mut svg = String::new();
    {
        let root = SVGBackend::with_string(&mut svg, SIZE).into_drawing_area();
        root.fill(&WHITE).map_err(plot_err)?;
        let mut chart = ChartBuilder::on(&root)
            .caption(title, ("sans-serif", 20))
            .margin(15)
            .x_label_area_size(45)
            .y_label_area_size(70)
            .build_cartesian_2d(xr.0..xr.1, yr.0..yr.1)
            .map_err(plot_err)?;
        chart
            .configure_mesh()
            .x_desc(x)
            .y_desc(ys.join(", "))
            .draw()
            .map_err(plot_err)?;
        for (k, (name, col)) in ys.iter().zip(&cols).enumerate() {
            let color = PALETTE[k % PALETTE.len()];
            let pts: Vec<(f64, f64)> = xs
                .iter()
                .zip(col.iter())
                .filter(|(a, b)| a.is_finite() && b.is_finite())
                .map(|(a, b)| (*a, *b))
                .collect();
            let anno = if markers {
                chart
                    .draw_series(pts.into_iter().map(|p| Circle::new(p, 4, color.filled())))
                    .map_err(plot_err)?
            } else {
                chart.draw_series(LineSeries::new(pts, color)).map_err(plot_err)?
            };
            anno.label(*name)
                .legend(move |(a, b)| PathElement::new(vec![(a, b), (a + 20, b)], color));
        }
        if let Some(o) = &overlay {
            chart
                .draw_series(LineSeries::new(overlay_pts, BLACK))
                .map_err(plot_err)?
                .label(o.label.as_str())
                .legend(|(a, b)| PathElement::new(vec![(a, b), (a + 20, b)], BLACK));
        }
        chart
            .configure_series_labels()
            .background_style(WHITE.mix(0.8))
            .border_style(BLACK)
            .draw()
            .map_err(plot_err)?;
        root.present().map_err(plot_err)?;
    }
    Ok(svg)
}

fn grid_axis(values: &[f64]) -> Vec<f64> {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

fn diverging(t: f64) -> RGBColor {
    let t = t.clamp(-1.0, 1.0);
    let fade = |x: f64| (255.0 * (1.0 - x.abs())).round() as u8;
    if t >= 0.0 {
        RGBColor(255, fade(t), fade(t))
    } else {
        RGBColor(fade(t), fade(t), 255)
    }
}

/// Heatmap of `z` over the rectilinear `(x, y)` grid found in the series;
/// positive values red, negative blue, scaled by `max |z|`.
pub fn heatmap(series: &Series, x: &str, y: &str, z: &str, title: &str) -> CliResult<String> {
    let (xs, ys, zs) = (series.column(x)?, series.column(y)?, series.column(z)?);
    if series.is_empty() {
        return Err(CliError::validation(format!("cannot plot an empty series ({title})")));
    }
    let (gx, gy) = (grid_axis(xs), grid_axis(ys));
    if gx.len() < 2 || gy.len() < 2 {
        return Err(CliError::validation("heatmap needs at least two distinct values per axis"));
    }
    let (sx, sy) = (gx.len().div_ceil(MAX_CELLS), gy.len().div_ceil(MAX_CELLS));
    let (dx, dy) = ((gx[1] - gx[0]) * sx as f64, (gy[1] - gy[0]) * sy as f64);
    let zmax = zs.iter().filter(|v| v.is_finite()).fold(0.0f64, |m, v| m.max(v.abs()));
    let scale = if zmax > 0.0 { zmax } else { 1.0 };

    let mut svg = String::new();
    {
        let root = SVGBackend::with_string(&mut svg, SIZE).into_drawing_area();
        root.fill(&WHITE).map_err(plot_err)?;
        let mut chart = ChartBuilder::on(&root)
            .caption(format!("{title} (max |{z}| = {zmax:.4e})"), ("sans-serif", 20))
            .margin(15)
            .x_label_area_size(45)
            .y_label_area_size(70)
            .build_cartesian_2d(gx[0]..gx[gx.len() - 1] + dx, gy[0]..gy[gy.len() - 1] + dy)
            .map_err(plot_err)?;
        chart
            .configure_mesh()
            .disable_mesh()
            .x_desc(x)
            .y_desc(y)
            .draw()
            .map_err(plot_err)?;
        let cells = (0..series.len()).filter_map(|k| {
            let ix = gx.binary_search_by(|v| v.total_cmp(&xs[k])).ok()?;
            let iy = gy.binary_search_by(|v| v.total_cmp(&ys[k])).ok()?;
            if ix % sx != 0 || iy % sy != 0 || !zs[k].is_finite() {
                return None;
            }
            let (x0, y0) = (gx[ix], gy[iy]);
            Some(Rectangle::new([(x0, y0), (x0 + dx, y0 + dy)], diverging(zs[k] / scale).filled()))
        });
        chart.draw_series(cells).map_err(plot_err)?;
        root.present().map_err(plot_err)?;
    }
    Ok(svg)
}
