//! Frequency snapshots and their alignment into a union table.
//!
//! A [`FrequencySnapshot`] maps word types to token counts for one corpus or
//! one time bucket. Two snapshots are compared through a [`UnionTable`],
//! which lists every word type present in either snapshot together with both
//! counts. Counts are `u64`; all probability arithmetic is `f64`.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A word type: surface form plus optional part-of-speech tag.
///
/// The surface is case-preserved. An absent tag is stored as the empty
/// string, so equality and ordering are plain byte comparisons of
/// `(surface, pos)`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct WordKey {
    surface: String,
    pos: String,
}

impl WordKey {
    pub fn new(surface: impl Into<String>, pos: impl Into<String>) -> Result<Self> {
        let surface = surface.into();
        if surface.is_empty() {
            return Err(Error::EmptySurface);
        }
        Ok(WordKey {
            surface,
            pos: pos.into(),
        })
    }

    /// A key without a POS tag.
    pub fn plain(surface: impl Into<String>) -> Result<Self> {
        Self::new(surface, String::new())
    }

    /// Parses the `word[_POS]` field used by the snapshot and GBC formats.
    ///
    /// The tag is split off at the last underscore when both sides are
    /// non-empty and the suffix consists of ASCII alphanumerics, `-` or `.`.
    /// Anything else is taken as a bare surface form.
    pub fn parse_field(field: &str) -> Result<Self> {
        if let Some(at) = field.rfind('_') {
            let (surface, suffix) = (&field[..at], &field[at + 1..]);
            let tag_like = !suffix.is_empty()
                && suffix
                    .chars()
                    .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '.');
            if !surface.is_empty() && tag_like {
                return Self::new(surface, suffix);
            }
        }
        Self::plain(field)
    }

    pub fn surface(&self) -> &str {
        &self.surface
    }

    pub fn pos(&self) -> Option<&str> {
        if self.pos.is_empty() {
            None
        } else {
            Some(&self.pos)
        }
    }

    /// The tag as stored, empty when absent.
    pub fn pos_or_empty(&self) -> &str {
        &self.pos
    }
}

impl fmt::Display for WordKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.pos.is_empty() {
            f.write_str(&self.surface)
        } else {
            write!(f, "{}_{}", self.surface, self.pos)
        }
    }
}

/// Token counts per word type for one corpus or one time bucket.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrequencySnapshot {
    label: String,
    counts: BTreeMap<WordKey, u64>,
    total: u64,
}

impl FrequencySnapshot {
    pub fn new(label: impl Into<String>) -> Self {
        FrequencySnapshot {
            label: label.into(),
            counts: BTreeMap::new(),
            total: 0,
        }
    }

    /// Builds a snapshot, summing duplicate keys and discarding zero counts.
    pub fn from_counts<I>(label: impl Into<String>, counts: I) -> Self
    where
        I: IntoIterator<Item = (WordKey, u64)>,
    {
        let mut snapshot = Self::new(label);
        for (key, count) in counts {
            snapshot.add(key, count);
        }
        snapshot
    }

    /// Convenience constructor for untagged words, mostly for tests and demos.
    pub fn from_pairs(label: impl Into<String>, pairs: &[(&str, u64)]) -> Result<Self> {
        let mut snapshot = Self::new(label);
        for &(word, count) in pairs {
            snapshot.add(WordKey::plain(word)?, count);
        }
        Ok(snapshot)
    }

    pub fn add(&mut self, key: WordKey, count: u64) {
        if count == 0 {
            return;
        }
        *self.counts.entry(key).or_insert(0) += count;
        self.total += count;
    }

    /// Adds every count of `other` into `self`.
    pub fn merge(&mut self, other: &FrequencySnapshot) {
        for (key, &count) in &other.counts {
            self.add(key.clone(), count);
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn set_label(&mut self, label: impl Into<String>) {
        self.label = label.into();
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn get(&self, key: &WordKey) -> u64 {
        self.counts.get(key).copied().unwrap_or(0)
    }

    /// Iterates entries in key order.
    pub fn iter(&self) -> impl Iterator<Item = (&WordKey, u64)> + '_ {
        self.counts.iter().map(|(k, &c)| (k, c))
    }

    pub fn keys(&self) -> impl Iterator<Item = &WordKey> + '_ {
        self.counts.keys()
    }
}

/// Two snapshots aligned over their shared vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct UnionTable {
    labels: [String; 2],
    vocabulary: Vec<WordKey>,
    first: Vec<u64>,
    second: Vec<u64>,
    totals: [u64; 2],
}

impl UnionTable {
    /// Builds a table from parallel columns. Rows with both counts zero are
    /// dropped; the totals are recomputed from the rows.
    pub fn from_rows<I>(labels: [String; 2], rows: I) -> Self
    where
        I: IntoIterator<Item = (WordKey, u64, u64)>,
    {
        let mut table = UnionTable {
            labels,
            vocabulary: Vec::new(),
            first: Vec::new(),
            second: Vec::new(),
            totals: [0, 0],
        };
        for (key, a, b) in rows {
            if a == 0 && b == 0 {
                continue;
            }
            table.vocabulary.push(key);
            table.first.push(a);
            table.second.push(b);
            table.totals[0] += a;
            table.totals[1] += b;
        }
        table
    }

    pub fn labels(&self) -> (&str, &str) {
        (&self.labels[0], &self.labels[1])
    }

    pub fn vocabulary(&self) -> &[WordKey] {
        &self.vocabulary
    }

    pub fn len(&self) -> usize {
        self.vocabulary.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vocabulary.is_empty()
    }

    /// Counts of row `i` in the first and second snapshot.
    pub fn counts(&self, i: usize) -> (u64, u64) {
        (self.first[i], self.second[i])
    }

    pub fn first_counts(&self) -> &[u64] {
        &self.first
    }

    pub fn second_counts(&self) -> &[u64] {
        &self.second
    }

    pub fn total_first(&self) -> u64 {
        self.totals[0]
    }

    pub fn total_second(&self) -> u64 {
        self.totals[1]
    }

    /// `N_u = N_1 + N_2`.
    pub fn union_total(&self) -> u64 {
        self.totals[0] + self.totals[1]
    }

    /// Relative frequency of row `i` in the union corpus.
    pub fn union_probability(&self, i: usize) -> f64 {
        (self.first[i] + self.second[i]) as f64 / self.union_total() as f64
    }

    pub fn rows(&self) -> impl Iterator<Item = (&WordKey, u64, u64)> + '_ {
        self.vocabulary
            .iter()
            .zip(self.first.iter().zip(&self.second))
            .map(|(k, (&a, &b))| (k, a, b))
    }

    /// The same table with the two columns exchanged.
    pub fn swapped(&self) -> UnionTable {
        UnionTable {
            labels: [self.labels[1].clone(), self.labels[0].clone()],
            vocabulary: self.vocabulary.clone(),
            first: self.second.clone(),
            second: self.first.clone(),
            totals: [self.totals[1], self.totals[0]],
        }
    }
}

/// Aligns two snapshots into a union table over the set union of their keys.
pub fn align(a: &FrequencySnapshot, b: &FrequencySnapshot) -> Result<UnionTable> {
    for s in [a, b] {
        if s.is_empty() {
            return Err(Error::EmptySnapshot(s.label().to_string()));
        }
    }
    let mut rows = Vec::with_capacity(a.len().max(b.len()));
    let mut left = a.counts.iter().peekable();
    let mut right = b.counts.iter().peekable();
    loop {
        let row = match (left.peek(), right.peek()) {
            (None, None) => break,
            (Some(_), None) => {
                let (k, &c) = left.next().unwrap();
                (k.clone(), c, 0)
            }
            (None, Some(_)) => {
                let (k, &c) = right.next().unwrap();
                (k.clone(), 0, c)
            }
            (Some((ka, _)), Some((kb, _))) => match ka.cmp(kb) {
                Ordering::Less => {
                    let (k, &c) = left.next().unwrap();
                    (k.clone(), c, 0)
                }
                Ordering::Greater => {
                    let (k, &c) = right.next().unwrap();
                    (k.clone(), 0, c)
                }
                Ordering::Equal => {
                    let (k, &ca) = left.next().unwrap();
                    let (_, &cb) = right.next().unwrap();
                    (k.clone(), ca, cb)
                }
            },
        };
        rows.push(row);
    }
    Ok(UnionTable::from_rows(
        [a.label().to_string(), b.label().to_string()],
        rows,
    ))
}

/// Keeps the `k` rows with the highest union count.
///
/// Ties are broken by key order (surface, then POS). Totals are recomputed
/// over the kept rows, which stay in vocabulary order.
pub fn restrict_top_k(table: &UnionTable, k: usize) -> UnionTable {
    let mut order: Vec<usize> = (0..table.len()).collect();
    order.sort_by(|&i, &j| {
        let ui = table.first[i] + table.second[i];
        let uj = table.first[j] + table.second[j];
        uj.cmp(&ui).then_with(|| table.vocabulary[i].cmp(&table.vocabulary[j]))
    });
    order.truncate(k.max(1));
    order.sort_unstable();
    UnionTable::from_rows(
        table.labels.clone(),
        order
            .into_iter()
            .map(|i| (table.vocabulary[i].clone(), table.first[i], table.second[i])),
    )
}
