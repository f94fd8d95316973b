//! Per-year counts from diachronic corpora.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;

use crate::corpus::{FrequencySnapshot, WordKey};
use crate::error::{Error, Result};

/// Counts keyed by word type and year, restricted to a declared year range.
///
/// Internally one [`FrequencySnapshot`] per year that has data, so per-year
/// totals are always the sum of that year's counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TimeIndexedCounts {
    year_from: i32,
    year_to: i32,
    years: BTreeMap<i32, FrequencySnapshot>,
}

impl TimeIndexedCounts {
    pub fn new(year_from: i32, year_to: i32) -> Result<Self> {
        if year_from > year_to {
            return Err(Error::InvalidParameter(format!(
                "year range {year_from}..={year_to} is reversed"
            )));
        }
        Ok(TimeIndexedCounts {
            year_from,
            year_to,
            years: BTreeMap::new(),
        })
    }

    pub fn year_from(&self) -> i32 {
        self.year_from
    }

    pub fn year_to(&self) -> i32 {
        self.year_to
    }

    pub fn covers(&self, year: i32) -> bool {
        (self.year_from..=self.year_to).contains(&year)
    }

    /// Adds a record; years outside the declared range are rejected.
    pub fn add(&mut self, key: WordKey, year: i32, count: u64) -> Result<()> {
        if !self.covers(year) {
            return Err(self.range_error(year, year));
        }
        self.years
            .entry(year)
            .or_insert_with(|| FrequencySnapshot::new(format!("{year}")))
            .add(key, count);
        Ok(())
    }

    /// Replaces the snapshot for one year.
    pub fn insert_year(&mut self, year: i32, mut snapshot: FrequencySnapshot) -> Result<()> {
        if !self.covers(year) {
            return Err(self.range_error(year, year));
        }
        snapshot.set_label(format!("{year}"));
        if snapshot.is_empty() {
            self.years.remove(&year);
        } else {
            self.years.insert(year, snapshot);
        }
        Ok(())
    }

    /// Sums `other` into `self`, widening the declared range to cover both.
    pub fn merge(&mut self, other: &TimeIndexedCounts) {
        self.year_from = self.year_from.min(other.year_from);
        self.year_to = self.year_to.max(other.year_to);
        for (&year, snapshot) in &other.years {
            self.years
                .entry(year)
                .or_insert_with(|| FrequencySnapshot::new(format!("{year}")))
                .merge(snapshot);
        }
    }

    pub fn year(&self, year: i32) -> Option<&FrequencySnapshot> {
        self.years.get(&year)
    }

    /// Years that carry at least one token, ascending.
    pub fn years(&self) -> impl Iterator<Item = (i32, &FrequencySnapshot)> + '_ {
        self.years.iter().map(|(&y, s)| (y, s))
    }

    pub fn year_total(&self, year: i32) -> u64 {
        self.years.get(&year).map_or(0, FrequencySnapshot::total)
    }

    pub fn total(&self) -> u64 {
        self.years.values().map(FrequencySnapshot::total).sum()
    }

    pub fn count(&self, key: &WordKey, year: i32) -> u64 {
        self.years.get(&year).map_or(0, |s| s.get(key))
    }

    /// All `(key, year, count)` records in year order.
    pub fn records(&self) -> impl Iterator<Item = (&WordKey, i32, u64)> + '_ {
        self.years
            .iter()
            .flat_map(|(&y, s)| s.iter().map(move |(k, c)| (k, y, c)))
    }

    /// Counts of one word for each year in `from..=to`, zero where absent.
    pub fn series(&self, key: &WordKey, from: i32, to: i32) -> Vec<u64> {
        (from..=to).map(|y| self.count(key, y)).collect()
    }

    /// Applies `f` to every year snapshot, keeping the declared range.
    pub fn try_map_years<F>(&self, mut f: F) -> Result<TimeIndexedCounts>
    where
        F: FnMut(i32, &FrequencySnapshot) -> Result<FrequencySnapshot>,
    {
        let mut out = TimeIndexedCounts::new(self.year_from, self.year_to)?;
        for (&year, snapshot) in &self.years {
            out.insert_year(year, f(year, snapshot)?)?;
        }
        Ok(out)
    }

    fn range_error(&self, from: i32, to: i32) -> Error {
        Error::YearRange {
            from,
            to,
            covered_from: self.year_from,
            covered_to: self.year_to,
        }
    }
}

/// Sums the counts of years `from..=to` into one snapshot labelled
/// `from-to`.
pub fn slice_years(counts: &TimeIndexedCounts, from: i32, to: i32) -> Result<FrequencySnapshot> {
    if from > to || !counts.covers(from) || !counts.covers(to) {
        return Err(counts.range_error(from, to));
    }
    let mut out = FrequencySnapshot::new(format!("{from}-{to}"));
    for (_, snapshot) in counts.years.range(from..=to) {
        out.merge(snapshot);
    }
    if out.is_empty() {
        return Err(Error::EmptySnapshot(out.label().into()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn key(s: &str) -> WordKey {
        WordKey::plain(s).unwrap()
    }

    #[test]
    fn slice_sums_years() {
        let mut t = TimeIndexedCounts::new(1900, 1910).unwrap();
        t.add(key("x"), 1900, 3).unwrap();
        t.add(key("x"), 1901, 4).unwrap();
        let s = slice_years(&t, 1900, 1901).unwrap();
        assert_eq!(s.get(&key("x")), 7);
        assert_eq!(s.total(), 7);
        assert_eq!(s.label(), "1900-1901");
    }

    #[test]
    fn single_year_slice_matches_year() {
        let mut t = TimeIndexedCounts::new(1900, 1910).unwrap();
        t.add(key("x"), 1900, 3).unwrap();
        t.add(key("y"), 1900, 2).unwrap();
        t.add(key("x"), 1901, 4).unwrap();
        let s = slice_years(&t, 1900, 1900).unwrap();
        let year = t.year(1900).unwrap();
        assert_eq!(s.iter().collect::<Vec<_>>(), year.iter().collect::<Vec<_>>());
    }

    #[test]
    fn slice_errors() {
        let mut t = TimeIndexedCounts::new(1900, 1910).unwrap();
        t.add(key("x"), 1900, 3).unwrap();
        assert!(matches!(slice_years(&t, 1905, 1906), Err(Error::EmptySnapshot(_))));
        assert!(matches!(slice_years(&t, 1899, 1901), Err(Error::YearRange { .. })));
        assert!(matches!(slice_years(&t, 1902, 1901), Err(Error::YearRange { .. })));
        assert!(t.add(key("x"), 1911, 1).is_err());
    }

    #[test]
    fn totals_track_counts() {
        let mut t = TimeIndexedCounts::new(1900, 1901).unwrap();
        t.add(key("x"), 1900, 3).unwrap();
        t.add(key("y"), 1900, 5).unwrap();
        t.add(key("x"), 1900, 1).unwrap();
        assert_eq!(t.year_total(1900), 9);
        assert_eq!(t.series(&key("x"), 1900, 1901), [4, 0]);
        assert_eq!(t.records().count(), 2);
    }
}
