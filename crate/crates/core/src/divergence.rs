//! Similarity and divergence between two aligned snapshots.
//!
//! For word `i` and snapshot `c` the expected count is `e = p_u(i) * N_c`
//! where `p_u` is the relative frequency in the union. A word's partial
//! contribution sums `(o - e)^2 / e` over both snapshots; chi-square is the
//! sum of all partials and Cramér's V is `sqrt(chi2 / N_u)`.
//!
//! KL and Jensen-Shannon divergences use base-2 logarithms, so JSD lies in
//! `[0, 1]` bits.

use alloc::vec::Vec;
use core::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::corpus::{UnionTable, WordKey};
use crate::error::{Error, Result};

/// Which snapshot a word is relatively more frequent in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// More frequent in the first snapshot (became less frequent).
    First,
    /// More frequent in the second snapshot (became more frequent).
    Second,
    Equal,
}

impl Direction {
    /// `'+'` when the word gained in the second snapshot, `'-'` when it lost.
    pub fn sign(self) -> char {
        match self {
            Direction::First => '-',
            Direction::Second => '+',
            Direction::Equal => '=',
        }
    }

    pub fn flipped(self) -> Direction {
        match self {
            Direction::First => Direction::Second,
            Direction::Second => Direction::First,
            Direction::Equal => Direction::Equal,
        }
    }

    /// Compares `o1 / n1` with `o2 / n2` exactly.
    pub fn of_counts(o1: u64, n1: u64, o2: u64, n2: u64) -> Direction {
        let lhs = u128::from(o1) * u128::from(n2);
        let rhs = u128::from(o2) * u128::from(n1);
        match lhs.cmp(&rhs) {
            Ordering::Greater => Direction::First,
            Ordering::Less => Direction::Second,
            Ordering::Equal => Direction::Equal,
        }
    }
}

/// One word's share of the chi-square total.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContributionRecord {
    pub word: WordKey,
    pub partial: f64,
    pub direction: Direction,
    pub observed: [u64; 2],
    pub expected: [f64; 2],
}

impl ContributionRecord {
    /// Same record seen from the other side of the comparison.
    pub fn swapped(&self) -> ContributionRecord {
        ContributionRecord {
            word: self.word.clone(),
            partial: self.partial,
            direction: self.direction.flipped(),
            observed: [self.observed[1], self.observed[0]],
            expected: [self.expected[1], self.expected[0]],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DivergenceResult {
    pub chi2: f64,
    pub v: f64,
    pub jsd: f64,
    /// In vocabulary order of the input table.
    pub contributions: Vec<ContributionRecord>,
}

impl DivergenceResult {
    /// Contributions sorted by partial descending, ties by word key.
    pub fn ranked(&self) -> Vec<ContributionRecord> {
        let mut out = self.contributions.clone();
        sort_by_partial(&mut out);
        out
    }
}

pub(crate) fn sort_by_partial(records: &mut [ContributionRecord]) {
    records.sort_by(|a, b| b.partial.total_cmp(&a.partial).then_with(|| a.word.cmp(&b.word)));
}

fn check_totals(u: &UnionTable) -> Result<()> {
    let (first, second) = u.labels();
    if u.total_first() == 0 {
        return Err(Error::EmptySnapshot(first.into()));
    }
    if u.total_second() == 0 {
        return Err(Error::EmptySnapshot(second.into()));
    }
    Ok(())
}

/// Expected counts `[e_1, e_2]` for every row, in vocabulary order.
pub fn expected_freq(u: &UnionTable) -> Result<Vec<[f64; 2]>> {
    check_totals(u)?;
    let n1 = u.total_first() as f64;
    let n2 = u.total_second() as f64;
    let nu = u.union_total() as f64;
    Ok(u.rows()
        .map(|(_, a, b)| {
            let row = (a + b) as f64;
            [row * n1 / nu, row * n2 / nu]
        })
        .collect())
}

fn cell(observed: u64, expected: f64) -> f64 {
    let d = observed as f64 - expected;
    d * d / expected
}

/// Chi-square, Cramér's V and JSD with per-word contributions.
pub fn chi2_and_v(u: &UnionTable) -> Result<DivergenceResult> {
    let expected = expected_freq(u)?;
    let (n1, n2) = (u.total_first(), u.total_second());
    let mut chi2 = 0.0;
    let contributions: Vec<ContributionRecord> = u
        .rows()
        .zip(expected)
        .map(|((word, o1, o2), e)| {
            let partial = cell(o1, e[0]) + cell(o2, e[1]);
            chi2 += partial;
            ContributionRecord {
                word: word.clone(),
                partial,
                direction: Direction::of_counts(o1, n1, o2, n2),
                observed: [o1, o2],
                expected: e,
            }
        })
        .collect();
    let v = libm::sqrt(chi2 / u.union_total() as f64).min(1.0);
    Ok(DivergenceResult {
        chi2,
        v,
        jsd: jsd(u)?,
        contributions,
    })
}

/// Relative-frequency vectors of the two columns.
pub fn relative_frequencies(u: &UnionTable) -> Result<(Vec<f64>, Vec<f64>)> {
    check_totals(u)?;
    let n1 = u.total_first() as f64;
    let n2 = u.total_second() as f64;
    Ok((
        u.first_counts().iter().map(|&c| c as f64 / n1).collect(),
        u.second_counts().iter().map(|&c| c as f64 / n2).collect(),
    ))
}

const DISTRIBUTION_TOLERANCE: f64 = 1e-9;

/// Kullback-Leibler divergence in bits. Terms with `p = 0` contribute zero;
/// `p > 0` against `q = 0` yields `f64::INFINITY`.
pub fn kl(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::LengthMismatch {
            left: p.len(),
            right: q.len(),
        });
    }
    for v in [p, q] {
        let sum: f64 = v.iter().sum();
        if (sum - 1.0).abs() > DISTRIBUTION_TOLERANCE || v.iter().any(|&x| x < 0.0) {
            return Err(Error::NotADistribution(sum));
        }
    }
    let mut total = 0.0;
    for (&pi, &qi) in p.iter().zip(q) {
        if pi == 0.0 {
            continue;
        }
        if qi == 0.0 {
            return Ok(f64::INFINITY);
        }
        total += pi * libm::log2(pi / qi);
    }
    Ok(total)
}

/// KL(P || M) where M is the midpoint of P and Q; finite by construction.
fn kl_to_midpoint(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .filter(|(&pi, _)| pi > 0.0)
        .map(|(&pi, &qi)| pi * libm::log2(pi / (0.5 * (pi + qi))))
        .sum()
}

/// Jensen-Shannon divergence in bits between the two columns.
pub fn jsd(u: &UnionTable) -> Result<f64> {
    let (p, q) = relative_frequencies(u)?;
    let value = 0.5 * (kl_to_midpoint(&p, &q) + kl_to_midpoint(&q, &p));
    Ok(value.clamp(0.0, 1.0))
}
