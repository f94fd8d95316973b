//! Divergence over time: rate-of-change curves, all-pairs matrices, top
//! changers, lag differencing and correlation of change series.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::corpus::{align, FrequencySnapshot, WordKey};
use crate::divergence::{chi2_and_v, sort_by_partial, ContributionRecord};
use crate::error::{Error, Result};
use crate::pos::PosFilter;
use crate::sampling::rng_from_seed;

/// Default period-to-period span in years.
pub const DEFAULT_LAG: u32 = 5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatePoint {
    pub year: i32,
    /// `None` marks a gap: year `t` or `t - lag` has no snapshot.
    pub v: Option<f64>,
    pub jsd: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateCurve {
    pub lag: u32,
    pub points: Vec<RatePoint>,
}

impl RateCurve {
    /// Points that carry a value.
    pub fn values(&self) -> impl Iterator<Item = (i32, f64)> + '_ {
        self.points.iter().filter_map(|p| p.v.map(|v| (p.year, v)))
    }
}

/// V (and JSD) between each year `t` and `t - lag`.
///
/// Anchors run from the first year plus `lag` to the last year; anchors
/// whose comparison partner is missing become gap points.
pub fn rate_curve(snapshots: &BTreeMap<i32, FrequencySnapshot>, lag: u32) -> Result<RateCurve> {
    if lag == 0 {
        return Err(Error::InvalidParameter("lag must be at least 1".into()));
    }
    let needed = lag as usize + 1;
    if snapshots.len() < needed {
        return Err(Error::InsufficientSpan {
            available: snapshots.len(),
            lag,
            needed,
        });
    }
    let first = *snapshots.keys().next().unwrap();
    let last = *snapshots.keys().next_back().unwrap();
    let lag_years = lag as i32;
    let mut points = Vec::new();
    for year in (first + lag_years)..=last {
        let point = match (snapshots.get(&(year - lag_years)), snapshots.get(&year)) {
            (Some(earlier), Some(later)) => {
                let r = chi2_and_v(&align(earlier, later)?)?;
                RatePoint {
                    year,
                    v: Some(r.v),
                    jsd: Some(r.jsd),
                }
            }
            _ => RatePoint {
                year,
                v: None,
                jsd: None,
            },
        };
        points.push(point);
    }
    Ok(RateCurve { lag, points })
}

/// A labelled square matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SquareMatrix {
    pub labels: Vec<String>,
    pub values: Vec<Vec<f64>>,
}

impl SquareMatrix {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// V between every pair of buckets; symmetric with a zero diagonal.
pub fn pair_matrix(buckets: &[FrequencySnapshot]) -> Result<SquareMatrix> {
    if buckets.len() < 2 {
        return Err(Error::InvalidParameter("pair matrix needs at least 2 buckets".into()));
    }
    let n = buckets.len();
    let mut values = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let v = chi2_and_v(&align(&buckets[i], &buckets[j])?)?.v;
            values[i][j] = v;
            values[j][i] = v;
        }
    }
    Ok(SquareMatrix {
        labels: buckets.iter().map(|b| b.label().to_string()).collect(),
        values,
    })
}

/// The `k` word types with the largest partial contribution between `a`
/// and `b`, after `filter`.
///
/// Contributions are computed over the full vocabulary; the filter only
/// decides which records are ranked.
pub fn top_changers(
    a: &FrequencySnapshot,
    b: &FrequencySnapshot,
    k: usize,
    filter: &PosFilter,
) -> Result<Vec<ContributionRecord>> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    let result = chi2_and_v(&align(a, b)?)?;
    let mut records: Vec<ContributionRecord> = result
        .contributions
        .into_iter()
        .filter(|c| filter.admits(&c.word))
        .collect();
    sort_by_partial(&mut records);
    records.truncate(k);
    Ok(records)
}

/// `out[t] = values[t + lag] - values[t]`.
pub fn diff(values: &[f64], lag: u32) -> Result<Vec<f64>> {
    let lag = lag as usize;
    if lag == 0 {
        return Err(Error::InvalidParameter("lag must be at least 1".into()));
    }
    if values.len() < lag + 1 {
        return Err(Error::SeriesTooShort {
            needed: lag + 1,
            got: values.len(),
        });
    }
    Ok(values.windows(lag + 1).map(|w| w[lag] - w[0]).collect())
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrelationMethod {
    Pearson,
    #[default]
    Cosine,
}

/// Minimum length of a correlated vector.
pub const MIN_CORRELATION_LEN: usize = 3;

/// Pearson or cosine correlation; `Ok(None)` when undefined because one side
/// has zero variance (Pearson) or zero norm (cosine).
pub fn correlate(x: &[f64], y: &[f64], method: CorrelationMethod) -> Result<Option<f64>> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if x.len() < MIN_CORRELATION_LEN {
        return Err(Error::SeriesTooShort {
            needed: MIN_CORRELATION_LEN,
            got: x.len(),
        });
    }
    let (mx, my) = match method {
        CorrelationMethod::Pearson => (mean(x), mean(y)),
        CorrelationMethod::Cosine => (0.0, 0.0),
    };
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (&a, &b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Ok(None);
    }
    Ok(Some((sxy / (libm::sqrt(sxx) * libm::sqrt(syy))).clamp(-1.0, 1.0)))
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// One word's per-year trajectory and its lag differences.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChangeSeries {
    pub word: WordKey,
    pub years: Vec<i32>,
    pub values: Vec<f64>,
    /// True when values are raw counts rather than fixed-size sample counts.
    pub raw: bool,
    pub lag: u32,
    pub diffs: Vec<f64>,
}

impl ChangeSeries {
    pub fn new(word: WordKey, years: Vec<i32>, values: Vec<f64>, raw: bool, lag: u32) -> Result<Self> {
        if years.len() != values.len() {
            return Err(Error::LengthMismatch {
                left: years.len(),
                right: values.len(),
            });
        }
        let diffs = diff(&values, lag)?;
        Ok(ChangeSeries {
            word,
            years,
            values,
            raw,
            lag,
            diffs,
        })
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Pairwise correlations of difference series plus the derived
/// dissimilarity `1 - correlation`. Undefined cells are `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix {
    pub words: Vec<WordKey>,
    pub method: CorrelationMethod,
    pub correlation: Vec<Vec<Option<f64>>>,
    pub dissimilarity: Vec<Vec<Option<f64>>>,
}

impl CorrelationMatrix {
    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// Rows whose correlations are defined, and the dense dissimilarity
    /// matrix over them. Series with undefined correlation are left out.
    pub fn clustering_input(&self) -> (Vec<usize>, Vec<Vec<f64>>) {
        let kept: Vec<usize> = (0..self.len())
            .filter(|&i| self.dissimilarity[i][i].is_some())
            .collect();
        let dense = kept
            .iter()
            .map(|&i| kept.iter().map(|&j| self.dissimilarity[i][j].unwrap_or(0.0)).collect())
            .collect();
        (kept, dense)
    }

    /// Words left out of clustering.
    pub fn undefined_words(&self) -> Vec<WordKey> {
        (0..self.len())
            .filter(|&i| self.dissimilarity[i][i].is_none())
            .map(|i| self.words[i].clone())
            .collect()
    }
}

/// Correlates the difference series of every pair.
pub fn correlation_matrix(series: &[ChangeSeries], method: CorrelationMethod) -> Result<CorrelationMatrix> {
    if series.len() < 2 {
        return Err(Error::InvalidParameter(
            "correlation matrix needs at least 2 series".into(),
        ));
    }
    if let Some(s) = series.iter().find(|s| s.years != series[0].years) {
        return Err(Error::InvalidParameter(format!(
            "series for `{}` is not aligned with `{}`",
            s.word, series[0].word
        )));
    }
    let n = series.len();
    let mut correlation = vec![vec![None; n]; n];
    for i in 0..n {
        // a series correlates with itself unless it is degenerate
        correlation[i][i] = correlate(&series[i].diffs, &series[i].diffs, method)?.map(|_| 1.0);
        for j in (i + 1)..n {
            let c = correlate(&series[i].diffs, &series[j].diffs, method)?;
            correlation[i][j] = c;
            correlation[j][i] = c;
        }
    }
    let dissimilarity = correlation
        .iter()
        .map(|row| row.iter().map(|c| c.map(|c| (1.0 - c).clamp(0.0, 2.0))).collect())
        .collect();
    Ok(CorrelationMatrix {
        words: series.iter().map(|s| s.word.clone()).collect(),
        method,
        correlation,
        dissimilarity,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpuriousConfig {
    pub trials: usize,
    pub length: usize,
    pub lag: u32,
    pub seed: u64,
}

impl SpuriousConfig {
    pub fn new(trials: usize, length: usize, seed: u64) -> Self {
        SpuriousConfig {
            trials,
            length,
            lag: DEFAULT_LAG,
            seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationSummary {
    pub median_abs: f64,
    pub mean_abs: f64,
    /// Share of trials with |rho| above 0.5.
    pub share_above_half: f64,
    pub defined: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpuriousSummary {
    pub config: SpuriousConfig,
    pub levels: CorrelationSummary,
    pub diffs: CorrelationSummary,
}

/// Pearson correlation of independent Gaussian random walks, on levels and
/// on lag differences.
pub fn spurious_demo(config: SpuriousConfig) -> Result<SpuriousSummary> {
    if config.length < 20 {
        return Err(Error::InvalidParameter("random walks need length >= 20".into()));
    }
    if config.trials == 0 {
        return Err(Error::InvalidParameter("at least one trial is required".into()));
    }
    let mut rng = rng_from_seed(config.seed);
    let walk = |rng: &mut rand_chacha::ChaCha8Rng| {
        let mut level = 0.0;
        (0..config.length)
            .map(|_| {
                level += rng.sample::<f64, _>(StandardNormal);
                level
            })
            .collect::<Vec<f64>>()
    };
    let mut levels = Vec::with_capacity(config.trials);
    let mut diffs = Vec::with_capacity(config.trials);
    for _ in 0..config.trials {
        let x = walk(&mut rng);
        let y = walk(&mut rng);
        if let Some(r) = correlate(&x, &y, CorrelationMethod::Pearson)? {
            levels.push(r.abs());
        }
        let (dx, dy) = (diff(&x, config.lag)?, diff(&y, config.lag)?);
        if let Some(r) = correlate(&dx, &dy, CorrelationMethod::Pearson)? {
            diffs.push(r.abs());
        }
    }
    Ok(SpuriousSummary {
        config,
        levels: summarize(levels),
        diffs: summarize(diffs),
    })
}

fn summarize(mut values: Vec<f64>) -> CorrelationSummary {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    let median = match n {
        0 => f64::NAN,
        _ if n % 2 == 1 => values[n / 2],
        _ => 0.5 * (values[n / 2 - 1] + values[n / 2]),
    };
    CorrelationSummary {
        median_abs: median,
        mean_abs: values.iter().sum::<f64>() / n.max(1) as f64,
        share_above_half: values.iter().filter(|&&v| v > 0.5).count() as f64 / n.max(1) as f64,
        defined: n,
    }
}
