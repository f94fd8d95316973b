use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Write;

use serde::{Deserialize, Serialize};

use super::{escape, format_value, svg_close, svg_open};
use crate::clustering::Dendrogram;

/// One merge drawn as a rectilinear bracket.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bracket {
    pub left_x: f64,
    pub right_x: f64,
    /// Heights of the two children, in tree units.
    pub left_height: f64,
    pub right_height: f64,
    pub height: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DendrogramLayout {
    /// Leaf indices left to right.
    pub order: Vec<usize>,
    /// x positions (in leaf slots) of each leaf index.
    pub leaf_x: Vec<f64>,
    pub brackets: Vec<Bracket>,
    pub max_height: f64,
}

/// Positions leaves in left-to-right tree order and one bracket per merge.
pub fn dendrogram_layout(tree: &Dendrogram) -> DendrogramLayout {
    let n = tree.len();
    let order = tree.leaf_order();
    let mut x = vec![0.0; n + tree.merges.len()];
    for (slot, &leaf) in order.iter().enumerate() {
        x[leaf] = slot as f64;
    }
    let mut brackets = Vec::with_capacity(tree.merges.len());
    for (step, m) in tree.merges.iter().enumerate() {
        x[n + step] = (x[m.left] + x[m.right]) / 2.0;
        brackets.push(Bracket {
            left_x: x[m.left],
            right_x: x[m.right],
            left_height: tree.height(m.left),
            right_height: tree.height(m.right),
            height: m.height,
        });
    }
    DendrogramLayout {
        leaf_x: x[..n].to_vec(),
        max_height: tree.merges.iter().map(|m| m.height).fold(0.0, f64::max),
        order,
        brackets,
    }
}

const SLOT: f64 = 16.0;
const PLOT_HEIGHT: f64 = 300.0;
const TOP: f64 = 20.0;
const LEFT: f64 = 50.0;
const LABEL_BAND: f64 = 110.0;

/// Standard dendrogram with leaves along the bottom and merge height on the
/// vertical axis. Leaf labels are drawn as given (including any sign).
pub fn dendrogram_svg(tree: &Dendrogram) -> String {
    let layout = dendrogram_layout(tree);
    let n = tree.len();
    let width = LEFT + SLOT * n as f64 + 20.0;
    let height = TOP + PLOT_HEIGHT + LABEL_BAND;
    let scale = if layout.max_height > 0.0 {
        layout.max_height
    } else {
        1.0
    };
    let px = |slot: f64| LEFT + SLOT * (slot + 0.5);
    let py = |h: f64| TOP + PLOT_HEIGHT * (1.0 - h / scale);

    let mut out = String::new();
    svg_open(&mut out, width, height);
    let _ = writeln!(
        out,
        "<line x1=\"{l:.2}\" y1=\"{:.2}\" x2=\"{l:.2}\" y2=\"{:.2}\" stroke=\"#000000\"/>\
         <text x=\"{:.2}\" y=\"{:.2}\" font-size=\"9\" text-anchor=\"end\">{}</text>\
         <text x=\"{:.2}\" y=\"{:.2}\" font-size=\"9\" text-anchor=\"end\">0</text>",
        py(scale),
        py(0.0),
        LEFT - 10.0,
        py(scale) + 3.0,
        format_value(scale),
        LEFT - 10.0,
        py(0.0) + 3.0,
        l = LEFT - 6.0,
    );
    for b in &layout.brackets {
        let _ = writeln!(
            out,
            "<path class=\"bracket\" data-height=\"{}\" d=\"M{:.2},{:.2} L{:.2},{:.2} L{:.2},{:.2} L{:.2},{:.2}\" fill=\"none\" stroke=\"#000000\"/>",
            b.height,
            px(b.left_x),
            py(b.left_height),
            px(b.left_x),
            py(b.height),
            px(b.right_x),
            py(b.height),
            px(b.right_x),
            py(b.right_height),
        );
    }
    for (slot, &leaf) in layout.order.iter().enumerate() {
        let (x, y) = (px(slot as f64), py(0.0) + 6.0);
        let _ = writeln!(
            out,
            "<text class=\"leaf\" x=\"{x:.2}\" y=\"{y:.2}\" font-size=\"10\" text-anchor=\"end\" \
             transform=\"rotate(-90 {x:.2} {y:.2})\">{}</text>",
            escape(&tree.leaves[leaf])
        );
    }
    svg_close(&mut out);
    out
}
