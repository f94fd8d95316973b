//! The two-span analysis pipeline behind both the CLI and the HTTP service.
//!
//! Per-year snapshots are downsampled once per seed ([`sample_years`]); an
//! [`AnalysisRequest`] then aggregates two year spans, ranks the top
//! changers, builds their lag-differenced series, correlates and clusters
//! them, and lays out a word cloud. Everything lands in one
//! [`AnalysisBundle`].

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::clustering::{wpgma, Dendrogram};
use crate::corpus::{align, WordKey};
use crate::diachrony::{correlation_matrix, ChangeSeries, CorrelationMatrix, CorrelationMethod, DEFAULT_LAG};
use crate::divergence::{chi2_and_v, sort_by_partial, ContributionRecord};
use crate::error::{Error, Result};
use crate::pos::PosFilter;
use crate::render::{word_cloud, CloudConfig, CloudLayout};
use crate::sampling::{derive_seed, downsample_or_pass, SampleSpec};
use crate::timeline::{slice_years, TimeIndexedCounts};

pub const BUNDLE_FORMAT: &str = "lexshift-analysis/1";
pub const DEFAULT_TOP_K: usize = 50;

/// An inclusive year range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Span {
    pub from: i32,
    pub to: i32,
}

impl Span {
    pub fn new(from: i32, to: i32) -> Self {
        Span { from, to }
    }

    pub fn overlaps(&self, other: &Span) -> bool {
        self.from <= other.to && other.from <= self.to
    }
}

impl core::fmt::Display for Span {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "{}:{}", self.from, self.to)
    }
}

impl core::str::FromStr for Span {
    type Err = Error;

    /// Parses `FROM:TO` or a single year.
    fn from_str(s: &str) -> Result<Self> {
        let parse = |t: &str| {
            t.trim()
                .parse::<i32>()
                .map_err(|_| Error::InvalidParameter(format!("bad year `{t}` in span `{s}`")))
        };
        match s.split_once(':') {
            Some((a, b)) => Ok(Span::new(parse(a)?, parse(b)?)),
            None => {
                let y = parse(s)?;
                Ok(Span::new(y, y))
            }
        }
    }
}

fn default_top_k() -> usize {
    DEFAULT_TOP_K
}

fn default_lag() -> u32 {
    DEFAULT_LAG
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AnalysisRequest {
    pub corpus: String,
    pub span_a: Span,
    pub span_b: Span,
    #[serde(default)]
    pub pos_filter: PosFilter,
    #[serde(default = "default_top_k")]
    pub top_k: usize,
    #[serde(default = "default_lag")]
    pub lag: u32,
    #[serde(default)]
    pub method: CorrelationMethod,
    #[serde(default)]
    pub seed: u64,
}

impl AnalysisRequest {
    pub fn new(corpus: impl Into<String>, span_a: Span, span_b: Span) -> Self {
        AnalysisRequest {
            corpus: corpus.into(),
            span_a,
            span_b,
            pos_filter: PosFilter::All,
            top_k: DEFAULT_TOP_K,
            lag: DEFAULT_LAG,
            method: CorrelationMethod::Cosine,
            seed: 0,
        }
    }

    /// Checks the request against a corpus covering `from..=to`.
    pub fn validate(&self, from: i32, to: i32) -> Result<()> {
        for span in [self.span_a, self.span_b] {
            if span.from > span.to || span.from < from || span.to > to {
                return Err(Error::YearRange {
                    from: span.from,
                    to: span.to,
                    covered_from: from,
                    covered_to: to,
                });
            }
        }
        if self.span_a.overlaps(&self.span_b) {
            return Err(Error::InvalidParameter(format!(
                "spans {} and {} overlap",
                self.span_a, self.span_b
            )));
        }
        if self.top_k == 0 {
            return Err(Error::InvalidParameter("top_k must be at least 1".into()));
        }
        if self.lag == 0 {
            return Err(Error::InvalidParameter("lag must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct YearSample {
    pub year: i32,
    pub raw_total: u64,
    pub sample_total: u64,
    /// False when the year was too small to sample and is used raw.
    pub sampled: bool,
}

/// Per-year snapshots downsampled with one [`SampleSpec`].
#[derive(Debug, Clone, PartialEq)]
pub struct SampledCorpus {
    pub spec: SampleSpec,
    pub counts: TimeIndexedCounts,
    pub years: Vec<YearSample>,
}

/// Downsamples every year independently with a per-year sub-seed. Years
/// at or below `target + margin` tokens pass through unsampled.
pub fn sample_years(raw: &TimeIndexedCounts, spec: SampleSpec) -> Result<SampledCorpus> {
    let mut years = Vec::new();
    let counts = raw.try_map_years(|year, snapshot| {
        let year_spec = SampleSpec {
            seed: derive_seed(spec.seed, year as u32 as u64),
            ..spec
        };
        let (sample, sampled) = downsample_or_pass(snapshot, &year_spec)?;
        years.push(YearSample {
            year,
            raw_total: snapshot.total(),
            sample_total: sample.total(),
            sampled,
        });
        Ok(sample)
    })?;
    Ok(SampledCorpus { spec, counts, years })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Measures {
    pub chi2: f64,
    pub v: f64,
    pub jsd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: u64,
    pub sample_target: u64,
    pub sample_margin: u64,
    pub span_a_tokens: u64,
    pub span_b_tokens: u64,
    /// True when any year in the series window was used unsampled.
    pub raw_counts: bool,
    pub years: Vec<YearSample>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisBundle {
    pub format: String,
    pub request: AnalysisRequest,
    pub provenance: Provenance,
    pub measures: Measures,
    /// Top changers, partial descending.
    pub changers: Vec<ContributionRecord>,
    pub series: Vec<ChangeSeries>,
    pub correlation: Option<CorrelationMatrix>,
    pub dendrogram: Option<Dendrogram>,
    /// Changers left out of clustering because their correlation is undefined.
    pub excluded: Vec<WordKey>,
    pub cloud: CloudLayout,
    pub notes: Vec<String>,
}

/// Dendrogram leaf label: direction sign followed by the word.
pub fn signed_label(record: &ContributionRecord) -> String {
    format!("{}{}", record.direction.sign(), record.word)
}

/// Runs the full two-span analysis on an already sampled corpus.
pub fn analyze(corpus: &SampledCorpus, request: &AnalysisRequest, cloud: &CloudConfig) -> Result<AnalysisBundle> {
    let counts = &corpus.counts;
    request.validate(counts.year_from(), counts.year_to())?;
    let a = slice_years(counts, request.span_a.from, request.span_a.to)?;
    let b = slice_years(counts, request.span_b.from, request.span_b.to)?;
    let result = chi2_and_v(&align(&a, &b)?)?;
    let measures = Measures {
        chi2: result.chi2,
        v: result.v,
        jsd: result.jsd,
    };

    let mut ranked: Vec<ContributionRecord> = result
        .contributions
        .into_iter()
        .filter(|c| request.pos_filter.admits(&c.word))
        .collect();
    sort_by_partial(&mut ranked);
    let changers: Vec<ContributionRecord> = ranked.iter().take(request.top_k).cloned().collect();

    let mut notes = Vec::new();
    let first = request.span_a.from.min(request.span_b.from);
    let last = request.span_a.to.max(request.span_b.to);
    let window: Vec<i32> = (first..=last).collect();
    let raw_counts = corpus
        .years
        .iter()
        .any(|y| !y.sampled && (first..=last).contains(&y.year));

    let mut series = Vec::with_capacity(changers.len());
    let long_enough = window.len() >= request.lag as usize + crate::diachrony::MIN_CORRELATION_LEN;
    if long_enough {
        for c in &changers {
            let values = counts
                .series(&c.word, first, last)
                .into_iter()
                .map(|v| v as f64)
                .collect();
            series.push(ChangeSeries::new(
                c.word.clone(),
                window.clone(),
                values,
                raw_counts,
                request.lag,
            )?);
        }
    } else {
        notes.push(format!(
            "series window {first}-{last} is too short for lag {} correlations",
            request.lag
        ));
    }

    let (correlation, dendrogram, excluded) = if series.len() >= 2 {
        let matrix = correlation_matrix(&series, request.method)?;
        let (kept, dense) = matrix.clustering_input();
        let excluded = matrix.undefined_words();
        let dendrogram = if kept.len() >= 2 {
            let labels = kept.iter().map(|&i| signed_label(&changers[i])).collect();
            Some(wpgma(&dense, labels)?)
        } else {
            notes.push("fewer than two changers have defined correlations; no dendrogram".into());
            None
        };
        (Some(matrix), dendrogram, excluded)
    } else {
        (None, None, Vec::new())
    };

    let cloud = if ranked.is_empty() {
        CloudLayout {
            width: cloud.width,
            height: cloud.height,
            words: Vec::new(),
            notes: Vec::new(),
        }
    } else {
        word_cloud(&ranked, cloud)?
    };

    Ok(AnalysisBundle {
        format: BUNDLE_FORMAT.into(),
        request: request.clone(),
        provenance: Provenance {
            seed: corpus.spec.seed,
            sample_target: corpus.spec.target,
            sample_margin: corpus.spec.margin,
            span_a_tokens: a.total(),
            span_b_tokens: b.total(),
            raw_counts,
            years: corpus.years.clone(),
        },
        measures,
        changers,
        series,
        correlation,
        dendrogram,
        excluded,
        cloud,
        notes,
    })
}
