use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;

use serde::{Deserialize, Serialize};

use super::{escape, format_value, svg_close, svg_open};
use crate::diachrony::{ChangeSeries, RateCurve, SquareMatrix};
use crate::error::{Error, Result};

/// Panels drawn by default.
pub const DEFAULT_PANELS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmallMultiplesConfig {
    pub max_panels: usize,
    pub columns: usize,
    pub panel_width: f64,
    pub panel_height: f64,
}

impl Default for SmallMultiplesConfig {
    fn default() -> Self {
        SmallMultiplesConfig {
            max_panels: DEFAULT_PANELS,
            columns: 4,
            panel_width: 180.0,
            panel_height: 90.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Panel {
    pub title: String,
    pub x: f64,
    pub y: f64,
    pub min: f64,
    pub max: f64,
    pub min_label: String,
    pub max_label: String,
    /// Polyline points in canvas coordinates.
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmallMultiples {
    pub width: f64,
    pub height: f64,
    pub first_year: i32,
    pub last_year: i32,
    pub panels: Vec<Panel>,
}

const LABEL_GUTTER: f64 = 44.0;
const TITLE_BAND: f64 = 16.0;

/// One mini panel per series on a shared year axis. Each panel's y-axis is
/// scaled to that series and labelled with its minimum and maximum.
pub fn small_multiples(series: &[ChangeSeries], config: &SmallMultiplesConfig) -> Result<SmallMultiples> {
    if series.is_empty() {
        return Err(Error::InvalidParameter(
            "small multiples need at least one series".into(),
        ));
    }
    let shown = &series[..series.len().min(config.max_panels.max(1))];
    let first_year = shown.iter().filter_map(|s| s.years.first()).copied().min().unwrap_or(0);
    let last_year = shown.iter().filter_map(|s| s.years.last()).copied().max().unwrap_or(0);
    let span = f64::from((last_year - first_year).max(1));
    let columns = config.columns.max(1);
    let cell_w = config.panel_width + LABEL_GUTTER;
    let cell_h = config.panel_height + TITLE_BAND + 8.0;

    let panels = shown
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let x = (i % columns) as f64 * cell_w + LABEL_GUTTER;
            let y = (i / columns) as f64 * cell_h + TITLE_BAND;
            let (min, max) = (s.min(), s.max());
            let range = max - min;
            let points = s
                .years
                .iter()
                .zip(&s.values)
                .map(|(&year, &v)| {
                    let px = x + f64::from(year - first_year) / span * config.panel_width;
                    let frac = if range > 0.0 { (v - min) / range } else { 0.5 };
                    (px, y + config.panel_height * (1.0 - frac))
                })
                .collect();
            Panel {
                title: s.word.surface().into(),
                x,
                y,
                min,
                max,
                min_label: format_value(min),
                max_label: format_value(max),
                points,
            }
        })
        .collect::<Vec<_>>();
    let rows = shown.len().div_ceil(columns);
    Ok(SmallMultiples {
        width: columns.min(shown.len()) as f64 * cell_w + 8.0,
        height: rows as f64 * cell_h + 24.0,
        first_year,
        last_year,
        panels,
    })
}

pub fn small_multiples_svg(layout: &SmallMultiples, config: &SmallMultiplesConfig) -> String {
    let mut out = String::new();
    svg_open(&mut out, layout.width, layout.height);
    for p in &layout.panels {
        let _ = writeln!(
            out,
            "<g class=\"panel\"><text x=\"{:.2}\" y=\"{:.2}\" font-size=\"11\">{}</text>",
            p.x,
            p.y - 4.0,
            escape(&p.title)
        );
        let _ = writeln!(
            out,
            "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"none\" stroke=\"#cccccc\"/>",
            p.x, p.y, config.panel_width, config.panel_height
        );
        let _ = writeln!(
            out,
            "<text class=\"max\" x=\"{:.2}\" y=\"{:.2}\" font-size=\"9\" text-anchor=\"end\">{}</text>",
            p.x - 3.0,
            p.y + 8.0,
            p.max_label
        );
        let _ = writeln!(
            out,
            "<text class=\"min\" x=\"{:.2}\" y=\"{:.2}\" font-size=\"9\" text-anchor=\"end\">{}</text>",
            p.x - 3.0,
            p.y + config.panel_height,
            p.min_label
        );
        out.push_str("<polyline fill=\"none\" stroke=\"#000000\" stroke-width=\"1\" points=\"");
        for (i, (x, y)) in p.points.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            let _ = write!(out, "{x:.2},{y:.2}");
        }
        out.push_str("\"/></g>\n");
    }
    let _ = writeln!(
        out,
        "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"10\">{}–{}</text>",
        LABEL_GUTTER,
        layout.height - 6.0,
        layout.first_year,
        layout.last_year
    );
    svg_close(&mut out);
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatePlotConfig {
    pub width: f64,
    pub height: f64,
    /// Draws years before and from this year in two panels with separate
    /// y-scales.
    pub split_year: Option<i32>,
}

impl Default for RatePlotConfig {
    fn default() -> Self {
        RatePlotConfig {
            width: 640.0,
            height: 240.0,
            split_year: None,
        }
    }
}

/// Line plot of a rate curve. Gaps break the line and are marked with a
/// cross on the baseline.
pub fn rate_plot(curve: &RateCurve, config: &RatePlotConfig) -> Result<String> {
    if curve.points.is_empty() {
        return Err(Error::InvalidParameter("rate curve has no points".into()));
    }
    let mut out = String::new();
    svg_open(&mut out, config.width, config.height);
    let parts: Vec<&[crate::diachrony::RatePoint]> = match config.split_year {
        Some(split) => {
            let at = curve.points.partition_point(|p| p.year < split);
            [&curve.points[..at], &curve.points[at..]]
                .into_iter()
                .filter(|s| !s.is_empty())
                .collect()
        }
        None => alloc::vec![&curve.points[..]],
    };
    let margin = 40.0;
    let panel_w = (config.width - margin * (parts.len() as f64 + 1.0)) / parts.len() as f64;
    let plot_h = config.height - 2.0 * margin;
    for (k, points) in parts.iter().enumerate() {
        let x0 = margin + k as f64 * (panel_w + margin);
        let first = points[0].year;
        let last = points[points.len() - 1].year;
        let span = f64::from((last - first).max(1));
        let top = points.iter().filter_map(|p| p.v).fold(0.0f64, f64::max);
        let scale = if top > 0.0 { top } else { 1.0 };
        let px = |year: i32| x0 + f64::from(year - first) / span * panel_w;
        let py = |v: f64| margin + plot_h * (1.0 - v / scale);
        let _ = writeln!(
            out,
            "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"#000000\"/>",
            x0,
            py(0.0),
            x0 + panel_w,
            py(0.0)
        );
        let _ = writeln!(
            out,
            "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"9\" text-anchor=\"end\">{}</text>",
            x0 - 3.0,
            margin + 4.0,
            format_value(scale)
        );
        let _ = writeln!(
            out,
            "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"9\">{}</text><text x=\"{:.2}\" y=\"{:.2}\" font-size=\"9\" text-anchor=\"end\">{}</text>",
            x0,
            py(0.0) + 14.0,
            first,
            x0 + panel_w,
            py(0.0) + 14.0,
            last
        );
        let mut segment: Vec<(f64, f64)> = Vec::new();
        let flush = |seg: &mut Vec<(f64, f64)>, out: &mut String| {
            if seg.len() == 1 {
                let _ = writeln!(
                    out,
                    "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"1.5\" fill=\"#000000\"/>",
                    seg[0].0, seg[0].1
                );
            } else if seg.len() > 1 {
                out.push_str("<polyline class=\"rate\" fill=\"none\" stroke=\"#000000\" points=\"");
                for (i, (x, y)) in seg.iter().enumerate() {
                    if i > 0 {
                        out.push(' ');
                    }
                    let _ = write!(out, "{x:.2},{y:.2}");
                }
                out.push_str("\"/>\n");
            }
            seg.clear();
        };
        for p in points.iter() {
            match p.v {
                Some(v) => segment.push((px(p.year), py(v))),
                None => {
                    flush(&mut segment, &mut out);
                    let (x, y) = (px(p.year), py(0.0));
                    let _ = writeln!(
                        out,
                        "<path class=\"gap\" d=\"M{:.2},{:.2} L{:.2},{:.2} M{:.2},{:.2} L{:.2},{:.2}\" stroke=\"#c00000\"/>",
                        x - 3.0,
                        y - 3.0,
                        x + 3.0,
                        y + 3.0,
                        x - 3.0,
                        y + 3.0,
                        x + 3.0,
                        y - 3.0
                    );
                }
            }
        }
        flush(&mut segment, &mut out);
    }
    svg_close(&mut out);
    Ok(out)
}

/// Heat grid of a square matrix, darker for larger values, with a legend.
pub fn matrix_plot(m: &SquareMatrix) -> Result<String> {
    if m.is_empty() {
        return Err(Error::InvalidParameter("matrix is empty".into()));
    }
    let n = m.len();
    let cell = (480.0 / n as f64).clamp(6.0, 40.0);
    let gutter = 70.0;
    let size = gutter + cell * n as f64;
    let mut out = String::new();
    svg_open(&mut out, size + 90.0, size + 20.0);
    let max = m.values.iter().flatten().copied().fold(0.0f64, f64::max);
    let shade = |v: f64| {
        let frac = if max > 0.0 { v / max } else { 0.0 };
        libm::round(255.0 * (1.0 - frac)) as u8
    };
    for (i, label) in m.labels.iter().enumerate() {
        let _ = writeln!(
            out,
            "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"9\" text-anchor=\"end\">{}</text>",
            gutter - 4.0,
            gutter + cell * (i as f64 + 0.5) + 3.0,
            escape(label)
        );
        let _ = writeln!(
            out,
            "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"9\" text-anchor=\"start\" transform=\"rotate(-60 {:.2} {:.2})\">{}</text>",
            gutter + cell * (i as f64 + 0.5),
            gutter - 4.0,
            gutter + cell * (i as f64 + 0.5),
            gutter - 4.0,
            escape(label)
        );
    }
    for (i, row) in m.values.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            let g = shade(v);
            let _ = writeln!(
                out,
                "<rect class=\"cell\" x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"#{g:02x}{g:02x}{g:02x}\" data-value=\"{}\"/>",
                gutter + cell * j as f64,
                gutter + cell * i as f64,
                cell,
                cell,
                v
            );
        }
    }
    // legend
    let lx = size + 20.0;
    for step in 0..10 {
        let v = max * f64::from(9 - step) / 9.0;
        let g = shade(v);
        let _ = writeln!(
            out,
            "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"14\" height=\"{:.2}\" fill=\"#{g:02x}{g:02x}{g:02x}\"/>",
            lx,
            gutter + f64::from(step) * 12.0,
            12.0
        );
    }
    let _ = writeln!(
        out,
        "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"9\">{}</text><text x=\"{:.2}\" y=\"{:.2}\" font-size=\"9\">0</text>",
        lx + 18.0,
        gutter + 9.0,
        format_value(max),
        lx + 18.0,
        gutter + 117.0
    );
    svg_close(&mut out);
    Ok(out)
}
