//! Corpus registry: parsing configured sources once, caching per-year
//! samples by seed, and answering analysis requests against the result.
//!
//! On disk an index is a directory:
//!
//! ```text
//! index.json              manifest (CorpusIndex)
//! <id>/counts.tsv         cleaned per-year counts
//! <id>/sample-<seed>.tsv  per-year samples for one seed
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use lexshift_core::analysis::{analyze, sample_years, AnalysisBundle, AnalysisRequest, SampledCorpus, YearSample};
use lexshift_core::render::CloudConfig;
use lexshift_core::sampling::{SampleSpec, DEFAULT_MARGIN, DEFAULT_TARGET};
use lexshift_core::timeline::TimeIndexedCounts;
use serde::{Deserialize, Serialize};

use crate::ingest::{
    parse_gbc_unigrams, parse_snapshot_list, read_yearly, with_input, write_yearly, FileDigest, IngestError,
    ParseOptions, ParseStats, SourceFormat,
};

pub const INDEX_FORMAT: &str = "lexshift-index/1";
const MANIFEST: &str = "index.json";

#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error("unknown corpus `{0}`")]
    UnknownCorpus(String),
    #[error(transparent)]
    Analysis(#[from] lexshift_core::Error),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error("{0}")]
    Config(String),
    #[error("{0}: {1}")]
    Io(PathBuf, #[source] std::io::Error),
    #[error("{0}: {1}")]
    Json(PathBuf, #[source] serde_json::Error),
}

impl AppError {
    /// Whether the error stems from the request rather than the data or
    /// the host.
    pub fn is_client_error(&self) -> bool {
        match self {
            AppError::Analysis(e) => !matches!(
                e,
                lexshift_core::Error::InvalidMatrix(_) | lexshift_core::Error::NotADistribution(_)
            ),
            AppError::UnknownCorpus(_) => true,
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, AppError>;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> AppError + '_ {
    move |e| AppError::Io(path.to_path_buf(), e)
}

/// The optional TOML configuration file.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default)]
    pub sample: SampleConfig,
    #[serde(default, rename = "corpus")]
    pub corpora: Vec<CorpusConfig>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleConfig {
    #[serde(default = "default_target")]
    pub target: u64,
    #[serde(default = "default_margin")]
    pub margin: u64,
    /// Seeds whose samples are precomputed at indexing time.
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
}

fn default_target() -> u64 {
    DEFAULT_TARGET
}

fn default_margin() -> u64 {
    DEFAULT_MARGIN
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

impl Default for SampleConfig {
    fn default() -> Self {
        SampleConfig {
            target: DEFAULT_TARGET,
            margin: DEFAULT_MARGIN,
            seeds: default_seeds(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusConfig {
    pub id: String,
    pub format: SourceFormat,
    #[serde(default)]
    pub description: String,
    /// Inclusive year range; required for GBC sources.
    pub years: Option<[i32; 2]>,
    pub files: Vec<SourceFile>,
    #[serde(default)]
    pub permissive: bool,
}

/// A GBC file, or a frequency list standing for one year (or decade).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SourceFile {
    Path(PathBuf),
    Dated { year: i32, path: PathBuf },
}

impl SourceFile {
    pub fn path(&self) -> &Path {
        match self {
            SourceFile::Path(p) | SourceFile::Dated { path: p, .. } => p,
        }
    }

    pub fn year(&self) -> Option<i32> {
        match self {
            SourceFile::Path(_) => None,
            SourceFile::Dated { year, .. } => Some(*year),
        }
    }
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Config> {
        let config: Config = toml::from_str(text).map_err(|e| AppError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Config> {
        Config::from_toml(&fs::read_to_string(path).map_err(io_err(path))?)
    }

    fn validate(&self) -> Result<()> {
        let mut seen = std::collections::BTreeSet::new();
        for c in &self.corpora {
            if c.id.is_empty()
                || !c
                    .id
                    .chars()
                    .all(|ch| ch.is_ascii_alphanumeric() || ch == '-' || ch == '_')
            {
                return Err(AppError::Config(format!(
                    "corpus id `{}` must be non-empty ASCII alphanumerics, `-` or `_`",
                    c.id
                )));
            }
            if !seen.insert(&c.id) {
                return Err(AppError::Config(format!("corpus id `{}` is registered twice", c.id)));
            }
            if c.files.is_empty() {
                return Err(AppError::Config(format!("corpus `{}` lists no files", c.id)));
            }
            match c.format {
                SourceFormat::Gbc if c.years.is_none() => {
                    return Err(AppError::Config(format!("GBC corpus `{}` needs `years`", c.id)));
                }
                SourceFormat::Snapshot | SourceFormat::Bnc if c.files.iter().any(|f| f.year().is_none()) => {
                    return Err(AppError::Config(format!(
                        "every file of list corpus `{}` needs a `year`",
                        c.id
                    )));
                }
                _ => {}
            }
        }
        if self.sample.target == 0 {
            return Err(AppError::Config("sample target must be at least 1".into()));
        }
        Ok(())
    }

    pub fn sample_spec(&self, seed: u64) -> SampleSpec {
        SampleSpec {
            target: self.sample.target,
            margin: self.sample.margin,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexedFile {
    pub source: SourceFile,
    pub digest: FileDigest,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusRecord {
    pub id: String,
    pub format: SourceFormat,
    pub description: String,
    pub year_from: i32,
    pub year_to: i32,
    /// Cleaned token count over all years.
    pub tokens: u64,
    pub files: Vec<IndexedFile>,
    pub stats: ParseStats,
    /// Seeds with a precomputed sample.
    pub seeds: Vec<u64>,
}

/// The manifest stored as `index.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusIndex {
    pub format: String,
    pub sample_target: u64,
    pub sample_margin: u64,
    pub corpora: Vec<CorpusRecord>,
}

/// A parsed corpus and its precomputed samples.
#[derive(Debug, Clone)]
pub struct BuiltCorpus {
    pub record: CorpusRecord,
    pub raw: TimeIndexedCounts,
    pub samples: BTreeMap<u64, SampledCorpus>,
}

fn resolve(root: &Path, path: &Path) -> PathBuf {
    if path.is_absolute() {
        path.to_path_buf()
    } else {
        root.join(path)
    }
}

/// Parses one source file into per-year counts.
fn parse_source(
    config: &CorpusConfig,
    file: &SourceFile,
    root: &Path,
) -> Result<(TimeIndexedCounts, ParseStats, IndexedFile)> {
    let path = resolve(root, file.path());
    let options = ParseOptions {
        permissive: config.permissive,
    };
    let ((counts, stats), digest) = match (config.format, file.year()) {
        (SourceFormat::Gbc, _) => {
            let [from, to] = config.years.expect("validated");
            with_input(&path, |r, name| parse_gbc_unigrams(r, name, from, to, options))?
        }
        (format, Some(year)) => with_input(&path, |r, name| {
            let (snapshot, stats) = parse_snapshot_list(r, name, format, options)?;
            let mut counts = TimeIndexedCounts::new(year, year)?;
            counts.insert_year(year, snapshot)?;
            Ok((counts, stats))
        })?,
        (_, None) => unreachable!("validated"),
    };
    log::info!(
        "{}: {} lines, {} kept, {} dropped, {} out of range, {} malformed",
        path.display(),
        stats.lines,
        stats.filter.kept,
        stats.filter.dropped(),
        stats.out_of_range,
        stats.malformed
    );
    let indexed = IndexedFile {
        source: match file {
            SourceFile::Path(_) => SourceFile::Path(path),
            SourceFile::Dated { year, .. } => SourceFile::Dated { year: *year, path },
        },
        digest,
    };
    Ok((counts, stats, indexed))
}

/// Parses every configured corpus (files in parallel) and samples each one
/// for the configured seeds.
pub fn build(config: &Config, root: &Path) -> Result<Vec<BuiltCorpus>> {
    let mut built = Vec::with_capacity(config.corpora.len());
    for corpus in &config.corpora {
        let parsed: Vec<Result<(TimeIndexedCounts, ParseStats, IndexedFile)>> = std::thread::scope(|scope| {
            let handles: Vec<_> = corpus
                .files
                .iter()
                .map(|file| scope.spawn(move || parse_source(corpus, file, root)))
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("parser thread panicked"))
                .collect()
        });
        let (from, to) = match corpus.years {
            Some([from, to]) => (from, to),
            None => {
                let years = corpus.files.iter().filter_map(SourceFile::year);
                (years.clone().min().expect("validated"), years.max().expect("validated"))
            }
        };
        let mut raw = TimeIndexedCounts::new(from, to)?;
        let mut stats = ParseStats::default();
        let mut files = Vec::new();
        for result in parsed {
            let (counts, file_stats, indexed) = result?;
            raw.merge(&counts);
            stats.merge(&file_stats);
            files.push(indexed);
        }
        let mut samples = BTreeMap::new();
        for &seed in &config.sample.seeds {
            samples.insert(seed, sample_years(&raw, config.sample_spec(seed))?);
        }
        built.push(BuiltCorpus {
            record: CorpusRecord {
                id: corpus.id.clone(),
                format: corpus.format,
                description: corpus.description.clone(),
                year_from: from,
                year_to: to,
                tokens: raw.total(),
                files,
                stats,
                seeds: config.sample.seeds.clone(),
            },
            raw,
            samples,
        });
    }
    Ok(built)
}

/// Writes `bytes` to `path` through a temporary file and a rename, so
/// readers never observe a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes).map_err(io_err(&tmp))?;
    fs::rename(&tmp, path).map_err(io_err(path))
}

fn yearly_bytes(counts: &TimeIndexedCounts) -> Vec<u8> {
    let mut out = BufWriter::new(Vec::new());
    write_yearly(&mut out, counts).expect("writing to memory");
    out.into_inner().expect("writing to memory")
}

/// Writes the manifest, counts and sample cache under `dir`.
pub fn write_index(dir: &Path, config: &Config, built: &[BuiltCorpus]) -> Result<CorpusIndex> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    for corpus in built {
        let sub = dir.join(&corpus.record.id);
        fs::create_dir_all(&sub).map_err(io_err(&sub))?;
        write_atomic(&sub.join("counts.tsv"), &yearly_bytes(&corpus.raw))?;
        for (seed, sample) in &corpus.samples {
            write_atomic(&sub.join(format!("sample-{seed}.tsv")), &yearly_bytes(&sample.counts))?;
        }
    }
    let index = CorpusIndex {
        format: INDEX_FORMAT.into(),
        sample_target: config.sample.target,
        sample_margin: config.sample.margin,
        corpora: built.iter().map(|c| c.record.clone()).collect(),
    };
    let mut json = serde_json::to_vec_pretty(&index).map_err(|e| AppError::Json(dir.join(MANIFEST), e))?;
    json.push(b'\n');
    write_atomic(&dir.join(MANIFEST), &json)?;
    Ok(index)
}

/// One corpus held in memory, with samples for further seeds drawn on
/// first use.
#[derive(Debug)]
pub struct LoadedCorpus {
    pub record: CorpusRecord,
    raw: TimeIndexedCounts,
    samples: Mutex<BTreeMap<u64, Arc<SampledCorpus>>>,
}

impl LoadedCorpus {
    pub fn raw(&self) -> &TimeIndexedCounts {
        &self.raw
    }

    /// The per-year sample for `spec.seed`, drawing it if not cached.
    pub fn sampled(&self, spec: SampleSpec) -> Result<Arc<SampledCorpus>> {
        if let Some(s) = self.samples.lock().expect("sample cache poisoned").get(&spec.seed) {
            return Ok(Arc::clone(s));
        }
        // drawn outside the lock; a racing duplicate is identical
        let fresh = Arc::new(sample_years(&self.raw, spec)?);
        let mut cache = self.samples.lock().expect("sample cache poisoned");
        Ok(Arc::clone(cache.entry(spec.seed).or_insert(fresh)))
    }
}

/// A read-only index ready to answer requests.
#[derive(Debug)]
pub struct LoadedIndex {
    pub sample_target: u64,
    pub sample_margin: u64,
    corpora: BTreeMap<String, LoadedCorpus>,
    pub cloud: CloudConfig,
}

/// Rebuilds per-year sample metadata for counts read back from disk.
fn year_samples(raw: &TimeIndexedCounts, sample: &TimeIndexedCounts, spec: &SampleSpec) -> Vec<YearSample> {
    raw.years()
        .map(|(year, snapshot)| YearSample {
            year,
            raw_total: snapshot.total(),
            sample_total: sample.year_total(year),
            sampled: snapshot.total() > spec.required(),
        })
        .collect()
}

fn read_counts(path: &Path, from: i32, to: i32) -> Result<TimeIndexedCounts> {
    let file = fs::File::open(path).map_err(io_err(path))?;
    Ok(read_yearly(
        &mut BufReader::new(file),
        &path.display().to_string(),
        from,
        to,
    )?)
}

impl LoadedIndex {
    pub fn from_built(config: &Config, built: Vec<BuiltCorpus>) -> LoadedIndex {
        let corpora = built
            .into_iter()
            .map(|c| {
                let samples = c.samples.into_iter().map(|(seed, s)| (seed, Arc::new(s))).collect();
                (
                    c.record.id.clone(),
                    LoadedCorpus {
                        record: c.record,
                        raw: c.raw,
                        samples: Mutex::new(samples),
                    },
                )
            })
            .collect();
        LoadedIndex {
            sample_target: config.sample.target,
            sample_margin: config.sample.margin,
            corpora,
            cloud: CloudConfig::default(),
        }
    }

    /// Reads an index directory written by [`write_index`].
    pub fn load(dir: &Path) -> Result<LoadedIndex> {
        let manifest = dir.join(MANIFEST);
        let text = fs::read(&manifest).map_err(io_err(&manifest))?;
        let index: CorpusIndex = serde_json::from_slice(&text).map_err(|e| AppError::Json(manifest.clone(), e))?;
        if index.format != INDEX_FORMAT {
            return Err(AppError::Config(format!(
                "{}: unsupported index format `{}`",
                manifest.display(),
                index.format
            )));
        }
        let mut corpora = BTreeMap::new();
        for record in index.corpora {
            let sub = dir.join(&record.id);
            let raw = read_counts(&sub.join("counts.tsv"), record.year_from, record.year_to)?;
            let mut samples = BTreeMap::new();
            for &seed in &record.seeds {
                let spec = SampleSpec {
                    target: index.sample_target,
                    margin: index.sample_margin,
                    seed,
                };
                let counts = read_counts(
                    &sub.join(format!("sample-{seed}.tsv")),
                    record.year_from,
                    record.year_to,
                )?;
                let years = year_samples(&raw, &counts, &spec);
                samples.insert(seed, Arc::new(SampledCorpus { spec, counts, years }));
            }
            corpora.insert(
                record.id.clone(),
                LoadedCorpus {
                    record,
                    raw,
                    samples: Mutex::new(samples),
                },
            );
        }
        Ok(LoadedIndex {
            sample_target: index.sample_target,
            sample_margin: index.sample_margin,
            corpora,
            cloud: CloudConfig::default(),
        })
    }

    pub fn corpora(&self) -> impl Iterator<Item = &CorpusRecord> + '_ {
        self.corpora.values().map(|c| &c.record)
    }

    pub fn get(&self, id: &str) -> Result<&LoadedCorpus> {
        self.corpora
            .get(id)
            .ok_or_else(|| AppError::UnknownCorpus(id.to_string()))
    }

    pub fn spec(&self, seed: u64) -> SampleSpec {
        SampleSpec {
            target: self.sample_target,
            margin: self.sample_margin,
            seed,
        }
    }

    /// The shared analysis path of the CLI and the service.
    pub fn analyze(&self, request: &AnalysisRequest) -> Result<AnalysisBundle> {
        let corpus = self.get(&request.corpus)?;
        let sampled = corpus.sampled(self.spec(request.seed))?;
        Ok(analyze(&sampled, request, &self.cloud)?)
    }
}

/// Serialises a bundle the same way everywhere: pretty JSON and a final
/// newline.
pub fn bundle_to_json(bundle: &AnalysisBundle) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(bundle).expect("bundles always serialise");
    out.push(b'\n');
    out
}

/// Writes per-year counts as `year<TAB>word[_POS]<TAB>count`.
pub fn write_counts(path: &Path, counts: &TimeIndexedCounts) -> Result<()> {
    let file = fs::File::create(path).map_err(io_err(path))?;
    let mut out = BufWriter::new(file);
    write_yearly(&mut out, counts).map_err(io_err(path))?;
    out.flush().map_err(io_err(path))
}
