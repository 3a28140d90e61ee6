//! SVG line charts of aggregated series with a shaded ±1 standard error band.

use plotters::prelude::*;

use crate::error::{Error, Result};
use crate::harness::aggregate::{AggregateRow, AggregateSeries};

/// Which aggregated quantity to draw.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Regret,
    Violations,
}

impl Metric {
    fn select(self, row: &AggregateRow) -> (f64, f64) {
        match self {
            Metric::Regret => (row.regret_mean, row.regret_stderr),
            Metric::Violations => (row.violations_mean, row.violations_stderr),
        }
    }

    fn label(self) -> &'static str {
        match self {
            Metric::Regret => "cumulative expected regret",
            Metric::Violations => "cumulative safety violations",
        }
    }

    pub fn file_name(self) -> &'static str {
        match self {
            Metric::Regret => "regret.svg",
            Metric::Violations => "violations.svg",
        }
    }
}

fn color_for(algorithm: &str, fallback: usize) -> RGBColor {
    match algorithm {
        "klucb-br" => RGBColor(230, 120, 20),
        "bubblerank-random" => RGBColor(200, 40, 40),
        "original" => RGBColor(128, 128, 128),
        "uniform-random" => RGBColor(40, 90, 200),
        _ => {
            let (r, g, b) = Palette99::pick(fallback).to_rgba().rgb();
            RGBColor(r, g, b)
        }
    }
}

fn plot_err(e: impl std::fmt::Display) -> Error {
    Error::Plot(e.to_string())
}

/// Renders one metric of `series` as an SVG document.
pub fn render_svg(series: &AggregateSeries, metric: Metric) -> Result<String> {
    let algorithms = series.algorithms();
    if algorithms.is_empty() {
        return Err(Error::input("nothing to plot: no algorithms in series"));
    }
    let t_max = series.rows.iter().map(|r| r.t).max().unwrap_or(1).max(1) as f64;
    let y_max = series
        .rows
        .iter()
        .map(|r| {
            let (m, s) = metric.select(r);
            m + s
        })
        .fold(0.0_f64, f64::max);
    let y_max = if y_max > 0.0 { y_max * 1.05 } else { 1.0 };

    let mut svg = String::new();
    {
        let root = SVGBackend::with_string(&mut svg, (800, 500)).into_drawing_area();
        root.fill(&WHITE).map_err(plot_err)?;
        let mut chart = ChartBuilder::on(&root)
            .margin(15)
            .caption(metric.label(), ("sans-serif", 20))
            .x_label_area_size(40)
            .y_label_area_size(70)
            .build_cartesian_2d(0.0..t_max, 0.0..y_max)
            .map_err(plot_err)?;
        chart
            .configure_mesh()
            .x_desc("round t")
            .y_desc(metric.label())
            .draw()
            .map_err(plot_err)?;

        for (idx, name) in algorithms.iter().enumerate() {
            let color = color_for(name, idx);
            let points: Vec<(f64, f64, f64)> = series
                .rows_for(name)
                .map(|r| {
                    let (m, s) = metric.select(r);
                    (r.t as f64, m, s)
                })
                .collect();

            let mut band: Vec<(f64, f64)> = points.iter().map(|&(t, m, s)| (t, m + s)).collect();
            band.extend(points.iter().rev().map(|&(t, m, s)| (t, (m - s).max(0.0))));
            chart
                .draw_series(std::iter::once(Polygon::new(band, color.mix(0.2).filled())))
                .map_err(plot_err)?;

            chart
                .draw_series(LineSeries::new(
                    points.iter().map(|&(t, m, _)| (t, m)),
                    color.stroke_width(2),
                ))
                .map_err(plot_err)?
                .label(name.to_string())
                .legend(move |(x, y)| {
                    PathElement::new(vec![(x, y), (x + 20, y)], color.stroke_width(2))
                });
        }

        chart
            .configure_series_labels()
            .background_style(WHITE.mix(0.8))
            .border_style(BLACK)
            .position(SeriesLabelPosition::UpperLeft)
            .draw()
            .map_err(plot_err)?;
        root.present().map_err(plot_err)?;
    }
    Ok(svg)
}
