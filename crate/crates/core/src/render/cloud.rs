use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::Write;

use serde::{Deserialize, Serialize};

use super::{escape, svg_close, svg_open};
use crate::divergence::{sort_by_partial, ContributionRecord, Direction};
use crate::error::{Error, Result};
use crate::pos::{word_class, WordClass};

/// Two-level shading of a cloud word.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shade {
    /// More frequent in the first snapshot.
    Dark,
    /// More frequent in the second snapshot.
    Light,
}

impl Shade {
    pub fn of(direction: Direction) -> Shade {
        match direction {
            Direction::Second => Shade::Light,
            Direction::First | Direction::Equal => Shade::Dark,
        }
    }

    pub fn color(self) -> &'static str {
        match self {
            Shade::Dark => "#000000",
            Shade::Light => "#a0a0a0",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CloudConfig {
    /// Words taken from each of the function and content classes.
    pub per_class: usize,
    /// Font size gained per natural-log unit of partial contribution.
    pub size_per_log_unit: f64,
    /// Font size of the smallest selected partial.
    pub min_font: f64,
    /// Glyph advance as a fraction of the font size.
    pub char_width: f64,
    /// Minimum canvas size; the canvas grows to fit the layout.
    pub width: f64,
    pub height: f64,
    pub padding: f64,
}

impl Default for CloudConfig {
    fn default() -> Self {
        CloudConfig {
            per_class: 64,
            size_per_log_unit: 4.0,
            min_font: 10.0,
            char_width: 0.6,
            width: 800.0,
            height: 600.0,
            padding: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlacedWord {
    pub text: String,
    pub partial: f64,
    pub direction: Direction,
    pub class: WordClass,
    /// Centre of the bounding box.
    pub x: f64,
    pub y: f64,
    pub font_size: f64,
    pub box_width: f64,
    pub box_height: f64,
    pub shade: Shade,
}

impl PlacedWord {
    fn bounds(&self) -> (f64, f64, f64, f64) {
        (
            self.x - self.box_width / 2.0,
            self.y - self.box_height / 2.0,
            self.x + self.box_width / 2.0,
            self.y + self.box_height / 2.0,
        )
    }

    pub fn overlaps(&self, other: &PlacedWord) -> bool {
        let (ax0, ay0, ax1, ay1) = self.bounds();
        let (bx0, by0, bx1, by1) = other.bounds();
        ax0 < bx1 && bx0 < ax1 && ay0 < by1 && by0 < ay1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CloudLayout {
    pub width: f64,
    pub height: f64,
    /// In placement order, i.e. by partial descending.
    pub words: Vec<PlacedWord>,
    pub notes: Vec<String>,
}

/// Selects the strongest function and content words and places them on an
/// Archimedean spiral, largest first.
///
/// Font size is `min_font + size_per_log_unit * ln(partial / smallest)`.
/// Records with a zero partial carry no change and are skipped.
pub fn word_cloud(records: &[ContributionRecord], config: &CloudConfig) -> Result<CloudLayout> {
    if records.is_empty() {
        return Err(Error::InvalidParameter("word cloud needs at least one record".into()));
    }
    let mut ranked: Vec<ContributionRecord> = records.iter().filter(|r| r.partial > 0.0).cloned().collect();
    sort_by_partial(&mut ranked);

    let mut notes = Vec::new();
    let mut selected = Vec::new();
    for class in [WordClass::Function, WordClass::Content] {
        let picked: Vec<ContributionRecord> = ranked
            .iter()
            .filter(|r| word_class(&r.word) == class)
            .take(config.per_class)
            .cloned()
            .collect();
        if picked.len() < config.per_class {
            notes.push(format!(
                "{} {:?} words available, {} requested",
                picked.len(),
                class,
                config.per_class
            ));
        }
        selected.extend(picked);
    }
    sort_by_partial(&mut selected);

    let Some(smallest) = selected.last().map(|r| r.partial) else {
        return Ok(CloudLayout {
            width: config.width,
            height: config.height,
            words: Vec::new(),
            notes,
        });
    };
    let log_floor = libm::log(smallest);

    let mut placed: Vec<PlacedWord> = Vec::with_capacity(selected.len());
    for record in &selected {
        let font_size = config.min_font + config.size_per_log_unit * (libm::log(record.partial) - log_floor);
        let text = record.word.surface().to_string();
        let glyphs = text.chars().count().max(1) as f64;
        let mut word = PlacedWord {
            partial: record.partial,
            direction: record.direction,
            class: word_class(&record.word),
            x: 0.0,
            y: 0.0,
            font_size,
            box_width: glyphs * font_size * config.char_width + 2.0 * config.padding,
            box_height: font_size + 2.0 * config.padding,
            shade: Shade::of(record.direction),
            text,
        };
        place_on_spiral(&mut word, &placed);
        placed.push(word);
    }

    // fit the canvas around the layout and centre it
    let (mut x0, mut y0, mut x1, mut y1) = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for w in &placed {
        let (a, b, c, d) = w.bounds();
        x0 = x0.min(a);
        y0 = y0.min(b);
        x1 = x1.max(c);
        y1 = y1.max(d);
    }
    let margin = 10.0;
    let width = config.width.max(x1 - x0 + 2.0 * margin);
    let height = config.height.max(y1 - y0 + 2.0 * margin);
    let dx = width / 2.0 - (x0 + x1) / 2.0;
    let dy = height / 2.0 - (y0 + y1) / 2.0;
    for w in &mut placed {
        w.x += dx;
        w.y += dy;
    }
    Ok(CloudLayout {
        width,
        height,
        words: placed,
        notes,
    })
}

fn place_on_spiral(word: &mut PlacedWord, placed: &[PlacedWord]) {
    const STEP: f64 = 0.1;
    const GROWTH: f64 = 2.0;
    let mut t = 0.0f64;
    loop {
        word.x = GROWTH * t * libm::cos(t);
        word.y = GROWTH * t * libm::sin(t) * 0.6;
        if placed.iter().all(|p| !p.overlaps(word)) {
            return;
        }
        t += STEP;
    }
}

pub fn cloud_svg(layout: &CloudLayout) -> String {
    let mut out = String::new();
    svg_open(&mut out, layout.width, layout.height);
    for w in &layout.words {
        let _ = writeln!(
            out,
            "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"{:.2}\" fill=\"{}\" text-anchor=\"middle\" \
             dominant-baseline=\"central\" data-partial=\"{}\">{}</text>",
            w.x,
            w.y,
            w.font_size,
            w.shade.color(),
            w.partial,
            escape(&w.text)
        );
    }
    svg_close(&mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::WordKey;

    fn record(word: &str, pos: &str, partial: f64, direction: Direction) -> ContributionRecord {
        ContributionRecord {
            word: WordKey::new(word, pos).unwrap(),
            partial,
            direction,
            observed: [0, 0],
            expected: [0.0, 0.0],
        }
    }

    #[test]
    fn single_word_is_centred() {
        let layout = word_cloud(&[record("x", "", 3.0, Direction::First)], &CloudConfig::default()).unwrap();
        assert_eq!(layout.words.len(), 1);
        let w = &layout.words[0];
        assert!((w.x - layout.width / 2.0).abs() < 1e-9);
        assert!((w.y - layout.height / 2.0).abs() < 1e-9);
    }

    #[test]
    fn log_scaling_with_unit_step() {
        let cfg = CloudConfig {
            size_per_log_unit: 1.0,
            ..CloudConfig::default()
        };
        let p = 1.7;
        let layout = word_cloud(
            &[
                record("a", "", p, Direction::First),
                record("b", "", p * libm::exp(2.0), Direction::Second),
            ],
            &cfg,
        )
        .unwrap();
        let size = |t: &str| layout.words.iter().find(|w| w.text == t).unwrap().font_size;
        assert!((size("b") - size("a") - 2.0).abs() < 1e-9);
    }

    #[test]
    fn shades_follow_direction() {
        let layout = word_cloud(
            &[
                record("a", "", 2.0, Direction::First),
                record("b", "", 1.0, Direction::Second),
            ],
            &CloudConfig::default(),
        )
        .unwrap();
        assert_eq!(layout.words[0].shade, Shade::Dark);
        assert_eq!(layout.words[1].shade, Shade::Light);
        let svg = cloud_svg(&layout);
        assert!(svg.contains("#a0a0a0"));
    }

    #[test]
    fn classes_are_capped() {
        let records: Vec<ContributionRecord> = (0..10)
            .map(|i| {
                record(
                    &format!("w{i}"),
                    if i % 2 == 0 { "at0" } else { "nn1" },
                    10.0 - i as f64,
                    Direction::First,
                )
            })
            .collect();
        let cfg = CloudConfig {
            per_class: 3,
            ..CloudConfig::default()
        };
        let layout = word_cloud(&records, &cfg).unwrap();
        assert_eq!(layout.words.len(), 6);
        assert!(layout.notes.is_empty());
        let short = word_cloud(&records[..2], &cfg).unwrap();
        assert_eq!(short.notes.len(), 2);
    }

    #[test]
    fn zero_partials_give_empty_cloud() {
        let layout = word_cloud(&[record("a", "", 0.0, Direction::Equal)], &CloudConfig::default()).unwrap();
        assert!(layout.words.is_empty());
        assert!(word_cloud(&[], &CloudConfig::default()).is_err());
    }
}
