use anyhow::{anyhow, Result};
use plotters::prelude::*;
use sfcsim::TraceSet;
use std::path::Path;

pub struct Series<'a> {
    pub title: &'a str,
    pub y_label: &'a str,
    pub values: &'a [f64],
    /// Horizontal reference line, e.g. the current limit.
    pub limit: Option<(f64, &'a str)>,
}

/// Renders one trace column against time as an SVG file. Fault intervals
/// are shaded.
pub fn write_svg(trace: &TraceSet, series: &Series<'_>, path: &Path) -> Result<()> {
    let t = &trace.time;
    let (t0, t1) = (t[0], t[t.len() - 1]);
    let mut lo = series.values.iter().copied().fold(f64::INFINITY, f64::min);
    let mut hi = series.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if let Some((l, _)) = series.limit {
        lo = lo.min(l);
        hi = hi.max(l);
    }
    let pad = ((hi - lo) * 0.08).max(1e-3);
    let (lo, hi) = (lo.min(0.0) - pad, hi + pad);

    let root = SVGBackend::new(path, (960, 480)).into_drawing_area();
    let draw = |e| anyhow!("plotting {}: {e}", path.display());
    root.fill(&WHITE).map_err(draw)?;
    let mut chart = ChartBuilder::on(&root)
        .caption(series.title, ("sans-serif", 22))
        .margin(12)
        .x_label_area_size(40)
        .y_label_area_size(60)
        .build_cartesian_2d(t0..t1, lo..hi)
        .map_err(draw)?;
    chart
        .configure_mesh()
        .x_desc("time (s)")
        .y_desc(series.y_label)
        .draw()
        .map_err(draw)?;

    let mut k = 0;
    while k < t.len() {
        if trace.fault[k] {
            let start = k;
            while k < t.len() && trace.fault[k] {
                k += 1;
            }
            let end = t[k.min(t.len() - 1)];
            chart
                .draw_series(std::iter::once(Rectangle::new(
                    [(t[start], lo), (end, hi)],
                    RGBColor(255, 220, 200).filled(),
                )))
                .map_err(draw)?;
        }
        k += 1;
    }

    chart
        .draw_series(LineSeries::new(t.iter().copied().zip(series.values.iter().copied()), &BLUE))
        .map_err(draw)?;
    if let Some((l, name)) = series.limit {
        chart
            .draw_series(LineSeries::new([(t0, l), (t1, l)], RED.stroke_width(1)))
            .map_err(draw)?
            .label(name)
            .legend(|(x, y)| PathElement::new([(x, y), (x + 20, y)], RED));
        chart
            .configure_series_labels()
            .background_style(WHITE.mix(0.8))
            .border_style(BLACK)
            .draw()
            .map_err(draw)?;
    }
    root.present().map_err(draw)?;
    Ok(())
}
