//! SVG 1.1 figures: word clouds, small multiples, rate curves, pair-matrix
//! heat grids and dendrograms.
//!
//! Every renderer is a pure function of its input, so identical inputs give
//! byte-identical documents. Layout structs are returned alongside the SVG
//! so clients can draw the same figure natively.

mod charts;
mod cloud;
mod dendrogram;

pub use charts::{
    matrix_plot, rate_plot, small_multiples, small_multiples_svg, Panel, RatePlotConfig, SmallMultiples,
    SmallMultiplesConfig, DEFAULT_PANELS,
};
pub use cloud::{cloud_svg, word_cloud, CloudConfig, CloudLayout, PlacedWord, Shade};
pub use dendrogram::{dendrogram_layout, dendrogram_svg, Bracket, DendrogramLayout};

use alloc::string::String;
use core::fmt::Write;

/// Appends `text` with XML special characters escaped.
pub(crate) fn escape_into(out: &mut String, text: &str) {
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            _ => out.push(c),
        }
    }
}

pub(crate) fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    escape_into(&mut out, text);
    out
}

pub(crate) fn svg_open(out: &mut String, width: f64, height: f64) {
    let _ = write!(
        out,
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" \
         width=\"{width:.2}\" height=\"{height:.2}\" viewBox=\"0 0 {width:.2} {height:.2}\" \
         font-family=\"Helvetica, Arial, sans-serif\">\n<rect x=\"0\" y=\"0\" width=\"{width:.2}\" \
         height=\"{height:.2}\" fill=\"#ffffff\"/>\n"
    );
}

pub(crate) fn svg_close(out: &mut String) {
    out.push_str("</svg>\n");
}

/// Axis label for a value: integers without decimals, others to 4 places.
pub fn format_value(v: f64) -> String {
    let mut s = String::new();
    if v.is_finite() && v == libm::round(v) && v.abs() < 1e15 {
        let _ = write!(s, "{}", v as i64);
    } else {
        let _ = write!(s, "{v:.4}");
    }
    s
}
