//! Streaming parsers for frequency lists and Google Books unigram dumps.
//!
//! Three layouts are read:
//!
//! * canonical snapshots, `word[_POS]<TAB>count`;
//! * BNC-style lists, `frequency word pos [...]` separated by whitespace;
//! * GBC unigram rows, `ngram<TAB>year<TAB>match_count<TAB>volume_count`.
//!
//! Every row passes through [`clean_token`] and is accounted for in a
//! [`TokenFilterReport`]. Gzip input is detected from its magic bytes.

use std::fmt;
use std::fs::File;
use std::io::{self, BufRead, BufReader, Read, Write};
use std::path::Path;

use flate2::read::MultiGzDecoder;
use lexshift_core::corpus::{FrequencySnapshot, WordKey};
use lexshift_core::filter::{clean_token, TokenDecision, TokenFilterReport};
use lexshift_core::timeline::TimeIndexedCounts;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

const GZIP_MAGIC: [u8; 2] = [0x1f, 0x8b];

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("{source_name}:{line}: {message}")]
    Malformed {
        source_name: String,
        line: u64,
        message: String,
    },
    #[error("{0}: no tokens left after cleaning")]
    Empty(String),
    #[error("{0}: {1}")]
    Io(String, #[source] io::Error),
    #[error(transparent)]
    Core(#[from] lexshift_core::Error),
}

pub type Result<T> = std::result::Result<T, IngestError>;

/// Which row layout a file uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SourceFormat {
    /// `word[_POS]<TAB>count`
    Snapshot,
    /// `frequency word pos`, whitespace separated
    Bnc,
    /// `ngram<TAB>year<TAB>match_count<TAB>volume_count`
    Gbc,
}

impl fmt::Display for SourceFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SourceFormat::Snapshot => "snapshot",
            SourceFormat::Bnc => "bnc",
            SourceFormat::Gbc => "gbc",
        })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ParseOptions {
    /// Skip and count malformed rows instead of failing.
    pub permissive: bool,
}

/// What happened to every input line.
///
/// `lines = filter.total() + out_of_range + malformed + skipped`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseStats {
    pub lines: u64,
    pub filter: TokenFilterReport,
    pub out_of_range: u64,
    pub malformed: u64,
    /// Blank lines and list headers.
    pub skipped: u64,
}

impl ParseStats {
    pub fn merge(&mut self, other: &ParseStats) {
        self.lines += other.lines;
        self.filter.merge(&other.filter);
        self.out_of_range += other.out_of_range;
        self.malformed += other.malformed;
        self.skipped += other.skipped;
    }

    fn keep(&mut self, key: &WordKey) -> bool {
        let decision = clean_token(key);
        self.filter.record(decision);
        decision == TokenDecision::Keep
    }
}

/// Size and SHA-256 of a file as it was read.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub bytes: u64,
    pub sha256: String,
}

struct Digesting<R> {
    inner: R,
    hasher: Sha256,
    bytes: u64,
}

impl<R: Read> Read for Digesting<R> {
    fn read(&mut self, buf: &mut [u8]) -> io::Result<usize> {
        let n = self.inner.read(buf)?;
        self.hasher.update(&buf[..n]);
        self.bytes += n as u64;
        Ok(n)
    }
}

/// Opens `path`, transparently decompressing gzip, and hands a buffered
/// reader to `parse`. The digest covers the bytes on disk and is only
/// meaningful when `parse` consumes the whole stream.
pub fn with_input<T>(path: &Path, parse: impl FnOnce(&mut dyn BufRead, &str) -> Result<T>) -> Result<(T, FileDigest)> {
    let name = path.display().to_string();
    let file = File::open(path).map_err(|e| IngestError::Io(name.clone(), e))?;
    let mut source = Digesting {
        inner: file,
        hasher: Sha256::new(),
        bytes: 0,
    };
    let value = {
        let mut reader = BufReader::with_capacity(1 << 16, &mut source);
        let gzip = reader
            .fill_buf()
            .map_err(|e| IngestError::Io(name.clone(), e))?
            .starts_with(&GZIP_MAGIC);
        if gzip {
            let mut decoded = BufReader::with_capacity(1 << 16, MultiGzDecoder::new(reader));
            let value = parse(&mut decoded, &name)?;
            io::copy(&mut decoded, &mut io::sink()).map_err(|e| IngestError::Io(name.clone(), e))?;
            value
        } else {
            let value = parse(&mut reader, &name)?;
            io::copy(&mut reader, &mut io::sink()).map_err(|e| IngestError::Io(name.clone(), e))?;
            value
        }
    };
    let digest = FileDigest {
        bytes: source.bytes,
        sha256: hex::encode(source.hasher.finalize()),
    };
    Ok((value, digest))
}

/// Reads LF-terminated lines, tolerating a trailing CR, and yields them with
/// 1-based line numbers.
fn for_each_line(reader: &mut dyn BufRead, name: &str, mut f: impl FnMut(u64, &str) -> Result<()>) -> Result<()> {
    let mut buf = Vec::new();
    let mut line_no = 0u64;
    loop {
        buf.clear();
        let n = reader
            .read_until(b'\n', &mut buf)
            .map_err(|e| IngestError::Io(name.to_string(), e))?;
        if n == 0 {
            return Ok(());
        }
        line_no += 1;
        while matches!(buf.last(), Some(b'\n' | b'\r')) {
            buf.pop();
        }
        let line = std::str::from_utf8(&buf).map_err(|_| IngestError::Malformed {
            source_name: name.to_string(),
            line: line_no,
            message: "invalid UTF-8".into(),
        })?;
        f(line_no, line)?;
    }
}

struct RowError(String);

fn number<T: std::str::FromStr>(field: &str, what: &str) -> std::result::Result<T, RowError> {
    field
        .parse()
        .map_err(|_| RowError(format!("{what} `{field}` is not a number")))
}

/// Applies the malformed-row policy to one row's outcome.
fn settle(
    outcome: std::result::Result<(), RowError>,
    stats: &mut ParseStats,
    options: ParseOptions,
    name: &str,
    line: u64,
) -> Result<()> {
    match outcome {
        Ok(()) => Ok(()),
        Err(_) if options.permissive => {
            stats.malformed += 1;
            Ok(())
        }
        Err(RowError(message)) => Err(IngestError::Malformed {
            source_name: name.to_string(),
            line,
            message,
        }),
    }
}

/// Parses a frequency list in the canonical or BNC layout into one
/// snapshot. Duplicate keys are summed.
pub fn parse_snapshot_list(
    reader: &mut dyn BufRead,
    name: &str,
    format: SourceFormat,
    options: ParseOptions,
) -> Result<(FrequencySnapshot, ParseStats)> {
    let mut snapshot = FrequencySnapshot::new(name);
    let mut stats = ParseStats::default();
    for_each_line(reader, name, |line_no, line| {
        stats.lines += 1;
        if line.trim().is_empty() {
            stats.skipped += 1;
            return Ok(());
        }
        let row = match format {
            SourceFormat::Snapshot => canonical_row(line),
            SourceFormat::Bnc => bnc_row(line),
            SourceFormat::Gbc => Err(RowError("GBC rows carry a year; use the GBC parser".into())),
        };
        let outcome = row.map(|parsed| match parsed {
            Some((key, count)) => {
                if stats.keep(&key) {
                    snapshot.add(key, count);
                }
            }
            None => stats.skipped += 1,
        });
        settle(outcome, &mut stats, options, name, line_no)
    })?;
    if snapshot.total() == 0 {
        return Err(IngestError::Empty(name.to_string()));
    }
    Ok((snapshot, stats))
}

fn canonical_row(line: &str) -> std::result::Result<Option<(WordKey, u64)>, RowError> {
    let mut fields = line.split('\t');
    let (Some(word), Some(count), None) = (fields.next(), fields.next(), fields.next()) else {
        return Err(RowError("expected `word<TAB>count`".into()));
    };
    let key = WordKey::parse_field(word).map_err(|e| RowError(e.to_string()))?;
    Ok(Some((key, number(count.trim(), "count")?)))
}

/// `None` for the `!!`-prefixed corpus total rows at the top of the lists.
fn bnc_row(line: &str) -> std::result::Result<Option<(WordKey, u64)>, RowError> {
    let mut fields = line.split_whitespace();
    let (Some(count), Some(word), Some(pos)) = (fields.next(), fields.next(), fields.next()) else {
        return Err(RowError("expected `frequency word pos`".into()));
    };
    if word.starts_with("!!") {
        return Ok(None);
    }
    let count = number(count, "frequency")?;
    let key = WordKey::new(word, pos).map_err(|e| RowError(e.to_string()))?;
    Ok(Some((key, count)))
}

/// Parses GBC unigram rows in a single pass, keeping years in
/// `year_from..=year_to`.
pub fn parse_gbc_unigrams(
    reader: &mut dyn BufRead,
    name: &str,
    year_from: i32,
    year_to: i32,
    options: ParseOptions,
) -> Result<(TimeIndexedCounts, ParseStats)> {
    let mut counts = TimeIndexedCounts::new(year_from, year_to)?;
    let mut stats = ParseStats::default();
    for_each_line(reader, name, |line_no, line| {
        stats.lines += 1;
        if line.is_empty() {
            stats.skipped += 1;
            return Ok(());
        }
        let outcome = gbc_row(line).and_then(|(key, year, count)| {
            if !counts.covers(year) {
                stats.out_of_range += 1;
            } else if stats.keep(&key) {
                counts.add(key, year, count).map_err(|e| RowError(e.to_string()))?;
            }
            Ok(())
        });
        settle(outcome, &mut stats, options, name, line_no)
    })?;
    if counts.total() == 0 {
        return Err(IngestError::Empty(name.to_string()));
    }
    Ok((counts, stats))
}

fn gbc_row(line: &str) -> std::result::Result<(WordKey, i32, u64), RowError> {
    let fields: Vec<&str> = line.split('\t').collect();
    let [ngram, year, matches, volumes] = fields[..] else {
        return Err(RowError(format!(
            "expected 4 tab-separated fields, found {}",
            fields.len()
        )));
    };
    let year = number(year, "year")?;
    let matches = number(matches, "match count")?;
    number::<u64>(volumes, "volume count")?;
    let key = WordKey::parse_field(ngram).map_err(|e| RowError(e.to_string()))?;
    Ok((key, year, matches))
}

/// Writes a snapshot in the canonical layout, keys in sorted order.
pub fn write_snapshot(out: &mut dyn Write, snapshot: &FrequencySnapshot) -> io::Result<()> {
    for (key, count) in snapshot.iter() {
        writeln!(out, "{key}\t{count}")?;
    }
    Ok(())
}

/// Writes per-year counts as `year<TAB>word[_POS]<TAB>count`.
pub fn write_yearly(out: &mut dyn Write, counts: &TimeIndexedCounts) -> io::Result<()> {
    for (key, year, count) in counts.records() {
        writeln!(out, "{year}\t{key}\t{count}")?;
    }
    Ok(())
}

/// Reads what [`write_yearly`] wrote. No cleaning is applied.
pub fn read_yearly(reader: &mut dyn BufRead, name: &str, year_from: i32, year_to: i32) -> Result<TimeIndexedCounts> {
    let mut counts = TimeIndexedCounts::new(year_from, year_to)?;
    for_each_line(reader, name, |line_no, line| {
        let malformed = |message: String| IngestError::Malformed {
            source_name: name.to_string(),
            line: line_no,
            message,
        };
        let fields: Vec<&str> = line.split('\t').collect();
        let [year, word, count] = fields[..] else {
            return Err(malformed("expected `year<TAB>word<TAB>count`".into()));
        };
        let year = number(year, "year").map_err(|RowError(m)| malformed(m))?;
        let count = number(count, "count").map_err(|RowError(m)| malformed(m))?;
        let key = WordKey::parse_field(word)?;
        counts.add(key, year, count).map_err(|e| malformed(e.to_string()))
    })?;
    Ok(counts)
}
