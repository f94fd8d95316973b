use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::{self, Write};
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use lexshift::index::{
    build, bundle_to_json, write_counts, write_index, Config, CorpusConfig, LoadedIndex, SourceFile,
};
use lexshift::ingest::{parse_snapshot_list, with_input, write_snapshot, ParseOptions, SourceFormat};
use lexshift::service;
use lexshift_core::analysis::{AnalysisBundle, AnalysisRequest, Span, DEFAULT_TOP_K};
use lexshift_core::clustering::wpgma;
use lexshift_core::corpus::{align, FrequencySnapshot};
use lexshift_core::diachrony::{
    rate_curve, spurious_demo, top_changers, CorrelationMethod, RateCurve, SpuriousConfig, DEFAULT_LAG,
};
use lexshift_core::divergence::{chi2_and_v, ContributionRecord};
use lexshift_core::pos::PosFilter;
use lexshift_core::render::{
    cloud_svg, dendrogram_svg, rate_plot, small_multiples, small_multiples_svg, RatePlotConfig, SmallMultiplesConfig,
};
use lexshift_core::sampling::{binomial_downsample, downsample_or_pass, SampleSpec, DEFAULT_MARGIN, DEFAULT_TARGET};

/// Corpus comparison and lexical change analysis over frequency snapshots.
///
/// Frequency lists are read as `word[_POS]<TAB>count` (snapshot) or
/// `frequency word pos` (bnc); Google Books unigram dumps as
/// `ngram<TAB>year<TAB>match_count<TAB>volume_count` (gbc, optionally
/// gzipped).
#[derive(Parser, Debug)]
#[command(version, propagate_version = true)]
struct Cli {
    /// More log output (repeat for debug)
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse sources, draw per-year samples, and write an index directory
    IngestIndex(IngestArgs),
    /// Downsample a frequency list (or every year of an indexed corpus)
    Sample(SampleArgs),
    /// Chi-square, Cramér's V and JSD between two lists or two year spans
    Compare(CompareArgs),
    /// Rate of change: V and JSD between each year and the one `lag` years earlier
    Rate(RateArgs),
    /// Words with the largest chi-square contribution between two lists or spans
    Changers(ChangersArgs),
    /// Correlate the lag-differenced series of the top changers
    Correlate(CorrelateArgs),
    /// WPGMA dendrogram over the top changers or a dissimilarity matrix
    Cluster(ClusterArgs),
    /// Render the figures of an analysis bundle as SVG
    Render(RenderArgs),
    /// Serve the read-only analysis API and the explorer assets
    Serve(ServeArgs),
}

#[derive(Args, Debug)]
struct IngestArgs {
    /// TOML configuration listing corpora and sample settings
    #[arg(long, conflicts_with_all = ["id", "format", "years"])]
    config: Option<PathBuf>,

    /// Directory that relative source paths are resolved against
    /// [default: the config file's directory, else the working directory]
    #[arg(long, env = "LEXSHIFT_DATA")]
    data_root: Option<PathBuf>,

    /// Output index directory
    #[arg(short, long)]
    out: PathBuf,

    /// Corpus id when indexing files given on the command line
    #[arg(long, required_unless_present = "config")]
    id: Option<String>,

    #[arg(long, value_enum, required_unless_present = "config")]
    format: Option<SourceFormat>,

    /// Year range FROM:TO kept from GBC files
    #[arg(long)]
    years: Option<Span>,

    /// Seeds to precompute samples for (repeatable)
    #[arg(long = "seed", default_values_t = [0u64])]
    seeds: Vec<u64>,

    #[arg(long, default_value_t = DEFAULT_TARGET)]
    target: u64,

    #[arg(long, default_value_t = DEFAULT_MARGIN)]
    margin: u64,

    /// Skip and count malformed rows instead of failing
    #[arg(long)]
    permissive: bool,

    /// GBC files, or YEAR=PATH for frequency lists
    files: Vec<String>,
}

#[derive(Args, Debug)]
struct SampleArgs {
    /// Frequency list to downsample
    #[arg(required_unless_present = "index")]
    input: Option<PathBuf>,

    #[arg(long, value_enum, default_value_t = SourceFormat::Snapshot)]
    format: SourceFormat,

    #[command(flatten)]
    index: IndexSource,

    #[arg(long, default_value_t = DEFAULT_TARGET)]
    target: u64,

    #[arg(long, default_value_t = DEFAULT_MARGIN)]
    margin: u64,

    /// Pass lists at or below target + margin through unchanged
    #[arg(long)]
    allow_small: bool,

    /// Output file: a snapshot list, or `year<TAB>word<TAB>count` rows for an index
    #[arg(short, long)]
    out: PathBuf,
}

/// An indexed corpus to read from.
#[derive(Args, Debug)]
struct IndexSource {
    /// Index directory written by ingest-index
    #[arg(long)]
    index: Option<PathBuf>,

    /// Corpus id within the index
    #[arg(long, requires = "index")]
    corpus: Option<String>,

    /// Sampling seed
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl IndexSource {
    fn open(&self) -> anyhow::Result<Option<(LoadedIndex, String)>> {
        let Some(dir) = &self.index else {
            return Ok(None);
        };
        let Some(corpus) = &self.corpus else {
            bail!("--index needs --corpus");
        };
        let index = LoadedIndex::load(dir).with_context(|| format!("loading index {}", dir.display()))?;
        index.get(corpus)?;
        Ok(Some((index, corpus.clone())))
    }
}

/// Analysis parameters shared by the span-based commands.
#[derive(Args, Debug)]
struct AnalysisArgs {
    #[command(flatten)]
    source: IndexSource,

    /// First span, FROM:TO or a single year
    #[arg(long, visible_alias = "from")]
    span_a: Option<Span>,

    /// Second span, FROM:TO or a single year
    #[arg(long, visible_alias = "to")]
    span_b: Option<Span>,

    /// all, content, function, or a comma-separated tag list
    #[arg(long, default_value = "all", value_parser = parse_pos_filter)]
    pos: PosFilter,

    /// Number of top changers
    #[arg(long, default_value_t = DEFAULT_TOP_K)]
    top: usize,

    /// Differencing lag in years
    #[arg(long, default_value_t = DEFAULT_LAG)]
    lag: u32,

    #[arg(long, value_enum, default_value_t = MethodArg::Cosine)]
    method: MethodArg,
}

impl AnalysisArgs {
    /// Runs the shared analysis when an index is given.
    fn bundle(&self) -> anyhow::Result<Option<AnalysisBundle>> {
        let Some((index, corpus)) = self.source.open()? else {
            return Ok(None);
        };
        let (Some(a), Some(b)) = (self.span_a, self.span_b) else {
            bail!("an indexed comparison needs --span-a and --span-b");
        };
        let request = AnalysisRequest {
            corpus,
            span_a: a,
            span_b: b,
            pos_filter: self.pos.clone(),
            top_k: self.top,
            lag: self.lag,
            method: self.method.into(),
            seed: self.source.seed,
        };
        Ok(Some(index.analyze(&request)?))
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum MethodArg {
    Pearson,
    Cosine,
}

impl From<MethodArg> for CorrelationMethod {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Pearson => CorrelationMethod::Pearson,
            MethodArg::Cosine => CorrelationMethod::Cosine,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Measure {
    Chi2,
    V,
    Jsd,
    All,
}

fn parse_pos_filter(s: &str) -> Result<PosFilter, String> {
    Ok(match s {
        "all" => PosFilter::All,
        "content" => PosFilter::Content,
        "function" => PosFilter::Function,
        tags => PosFilter::Allow(tags.split(',').map(|t| t.trim().to_string()).collect::<BTreeSet<_>>()),
    })
}

#[derive(Args, Debug)]
struct CompareArgs {
    /// Two frequency lists (omit when using --index)
    #[arg(num_args = 2, value_names = ["A", "B"])]
    files: Vec<PathBuf>,

    #[arg(long, value_enum, default_value_t = SourceFormat::Snapshot)]
    format: SourceFormat,

    #[arg(long, value_enum, default_value_t = Measure::All)]
    measure: Measure,

    #[command(flatten)]
    analysis: AnalysisArgs,

    /// Write the full result (analysis bundle for --index) as JSON
    #[arg(long, visible_alias = "out")]
    bundle: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct RateArgs {
    /// YEAR=PATH frequency lists (omit when using --index)
    snapshots: Vec<String>,

    #[arg(long, value_enum, default_value_t = SourceFormat::Snapshot)]
    format: SourceFormat,

    #[command(flatten)]
    source: IndexSource,

    #[arg(long, default_value_t = DEFAULT_LAG)]
    lag: u32,

    /// Year marked with a vertical rule in the plot
    #[arg(long)]
    split_year: Option<i32>,

    /// Write the curve as JSON
    #[arg(short, long)]
    out: Option<PathBuf>,

    /// Write the curve as SVG
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ChangersArgs {
    /// Two frequency lists (omit when using --index)
    #[arg(num_args = 2, value_names = ["A", "B"])]
    files: Vec<PathBuf>,

    #[arg(long, value_enum, default_value_t = SourceFormat::Snapshot)]
    format: SourceFormat,

    #[command(flatten)]
    analysis: AnalysisArgs,

    /// Write the records as JSON
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CorrelateArgs {
    #[command(flatten)]
    analysis: AnalysisArgs,

    /// Run the random-walk demonstration instead of a corpus analysis
    #[arg(long, conflicts_with = "index")]
    demo: bool,

    /// Random-walk pairs for --demo
    #[arg(long, default_value_t = 500)]
    trials: usize,

    /// Random-walk length for --demo
    #[arg(long, default_value_t = 100)]
    length: usize,

    /// Write the matrix (or demo summary) as JSON
    #[arg(short, long)]
    out: Option<PathBuf>,

    /// Write the small-multiples chart of the series as SVG
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ClusterArgs {
    #[command(flatten)]
    analysis: AnalysisArgs,

    /// JSON dissimilarity matrix `{"labels": [...], "values": [[...]]}`
    #[arg(long, conflicts_with = "index")]
    matrix: Option<PathBuf>,

    /// Write the dendrogram as JSON
    #[arg(short, long)]
    out: Option<PathBuf>,

    /// Write the dendrogram as SVG
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct RenderArgs {
    /// Analysis bundle written by `compare --bundle` or the service
    #[arg(long)]
    bundle: PathBuf,

    /// Directory receiving cloud.svg, series.svg and dendrogram.svg
    #[arg(short, long)]
    out_dir: PathBuf,
}

#[derive(Args, Debug)]
struct ServeArgs {
    /// Index directory written by ingest-index
    #[arg(long, conflicts_with = "config", required_unless_present = "config")]
    index: Option<PathBuf>,

    /// Build the index from this configuration at startup instead
    #[arg(long)]
    config: Option<PathBuf>,

    /// Directory that relative source paths in --config are resolved against
    #[arg(long, env = "LEXSHIFT_DATA")]
    data_root: Option<PathBuf>,

    #[arg(long, env = "LEXSHIFT_PORT", default_value_t = 8080)]
    port: u16,

    #[arg(long, default_value = "127.0.0.1")]
    bind: IpAddr,

    /// Built explorer assets served under `/`
    #[arg(long)]
    assets: Option<PathBuf>,
}

fn main() -> anyhow::Result<()> {
    // exit quietly when the reader of a pipe goes away (`lexshift rate | head`)
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).init();

    match cli.command {
        Command::IngestIndex(args) => ingest_index(args),
        Command::Sample(args) => sample(args),
        Command::Compare(args) => compare(args),
        Command::Rate(args) => rate(args),
        Command::Changers(args) => changers(args),
        Command::Correlate(args) => correlate(args),
        Command::Cluster(args) => cluster(args),
        Command::Render(args) => render(args),
        Command::Serve(args) => serve(args),
    }
}

/// Shortest fixed-point rendering up to six decimals.
fn short(v: f64) -> String {
    let s = format!("{v:.6}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    write_file(path, &bytes)
}

fn read_list(path: &Path, format: SourceFormat, options: ParseOptions) -> anyhow::Result<FrequencySnapshot> {
    if format == SourceFormat::Gbc {
        bail!(
            "{}: GBC files hold yearly rows; index them with ingest-index",
            path.display()
        );
    }
    let ((mut snapshot, stats), _) = with_input(path, |r, name| parse_snapshot_list(r, name, format, options))?;
    snapshot.set_label(path.display().to_string());
    log::info!(
        "{}: {} kept, {} dropped, {} malformed",
        path.display(),
        stats.filter.kept,
        stats.filter.dropped(),
        stats.malformed
    );
    Ok(snapshot)
}

fn dated(arg: &str) -> anyhow::Result<(i32, PathBuf)> {
    let Some((year, path)) = arg.split_once('=') else {
        bail!("expected YEAR=PATH, got `{arg}`");
    };
    let year = year.parse().with_context(|| format!("bad year in `{arg}`"))?;
    Ok((year, PathBuf::from(path)))
}

fn ingest_index(args: IngestArgs) -> anyhow::Result<()> {
    let (config, base) = match &args.config {
        Some(path) => {
            let config = Config::load(path)?;
            let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
            (config, base)
        }
        None => {
            let format = args.format.expect("required by clap");
            let files = args
                .files
                .iter()
                .map(|f| match format {
                    SourceFormat::Gbc => Ok(SourceFile::Path(PathBuf::from(f))),
                    _ => dated(f).map(|(year, path)| SourceFile::Dated { year, path }),
                })
                .collect::<anyhow::Result<Vec<_>>>()?;
            let toml = Config {
                sample: lexshift::index::SampleConfig {
                    target: args.target,
                    margin: args.margin,
                    seeds: args.seeds.clone(),
                },
                corpora: vec![CorpusConfig {
                    id: args.id.clone().expect("required by clap"),
                    format,
                    description: String::new(),
                    years: args.years.map(|s| [s.from, s.to]),
                    files,
                    permissive: args.permissive,
                }],
            };
            // round-trip through the config checks
            (Config::from_toml(&toml_text(&toml))?, PathBuf::new())
        }
    };
    let root = args.data_root.unwrap_or(base);
    let built = build(&config, &root)?;
    let index = write_index(&args.out, &config, &built)?;
    for c in &index.corpora {
        println!(
            "{}\t{}\t{}-{}\t{} tokens\t{} files\tseeds {:?}",
            c.id,
            c.format,
            c.year_from,
            c.year_to,
            c.tokens,
            c.files.len(),
            c.seeds
        );
    }
    Ok(())
}

/// Renders a command-line config as TOML so it goes through the same
/// validation as a config file.
fn toml_text(config: &Config) -> String {
    let mut out = format!(
        "[sample]\ntarget = {}\nmargin = {}\nseeds = {:?}\n",
        config.sample.target, config.sample.margin, config.sample.seeds
    );
    for c in &config.corpora {
        let quote = |s: &str| toml::Value::String(s.to_string()).to_string();
        out.push_str(&format!(
            "\n[[corpus]]\nid = {}\nformat = \"{}\"\npermissive = {}\n",
            quote(&c.id),
            c.format,
            c.permissive
        ));
        if let Some([from, to]) = c.years {
            out.push_str(&format!("years = [{from}, {to}]\n"));
        }
        out.push_str("files = [\n");
        for f in &c.files {
            let path = quote(&f.path().to_string_lossy());
            match f.year() {
                Some(year) => out.push_str(&format!("  {{ year = {year}, path = {path} }},\n")),
                None => out.push_str(&format!("  {path},\n")),
            }
        }
        out.push_str("]\n");
    }
    out
}

fn sample(args: SampleArgs) -> anyhow::Result<()> {
    if let Some((index, corpus)) = args.index.open()? {
        let spec = SampleSpec::new(index.sample_target, index.sample_margin, args.index.seed)?;
        let sampled = index.get(&corpus)?.sampled(spec)?;
        write_counts(&args.out, &sampled.counts)?;
        for y in &sampled.years {
            println!(
                "{}\t{}\t{}\t{}",
                y.year,
                y.raw_total,
                y.sample_total,
                if y.sampled { "sampled" } else { "raw" }
            );
        }
        return Ok(());
    }
    let input = args.input.as_deref().expect("required by clap");
    let snapshot = read_list(input, args.format, ParseOptions::default())?;
    let spec = SampleSpec::new(args.target, args.margin, args.index.seed)?;
    let (sample, sampled) = if args.allow_small {
        downsample_or_pass(&snapshot, &spec)?
    } else {
        (binomial_downsample(&snapshot, &spec)?, true)
    };
    let mut out =
        io::BufWriter::new(fs::File::create(&args.out).with_context(|| format!("creating {}", args.out.display()))?);
    write_snapshot(&mut out, &sample)?;
    out.flush()?;
    println!(
        "{} -> {} tokens ({})",
        snapshot.total(),
        sample.total(),
        if sampled { "sampled" } else { "passed through" }
    );
    Ok(())
}

fn print_measure(measure: Measure, chi2: f64, v: f64, jsd: f64) {
    if matches!(measure, Measure::Chi2 | Measure::All) {
        println!("chi2 = {}", short(chi2));
    }
    if matches!(measure, Measure::V | Measure::All) {
        println!("V = {}", short(v));
    }
    if matches!(measure, Measure::Jsd | Measure::All) {
        println!("JSD = {}", short(jsd));
    }
}

fn compare(args: CompareArgs) -> anyhow::Result<()> {
    if let Some(bundle) = args.analysis.bundle()? {
        let m = bundle.measures;
        print_measure(args.measure, m.chi2, m.v, m.jsd);
        if let Some(path) = &args.bundle {
            write_file(path, &bundle_to_json(&bundle))?;
        }
        return Ok(());
    }
    let [a, b] = two_files(&args.files)?;
    let a = read_list(a, args.format, ParseOptions::default())?;
    let b = read_list(b, args.format, ParseOptions::default())?;
    let result = chi2_and_v(&align(&a, &b)?)?;
    print_measure(args.measure, result.chi2, result.v, result.jsd);
    if let Some(path) = &args.bundle {
        write_json(path, &result)?;
    }
    Ok(())
}

fn two_files(files: &[PathBuf]) -> anyhow::Result<[&Path; 2]> {
    match files {
        [a, b] => Ok([a, b]),
        _ => bail!("give two frequency lists, or --index with --corpus"),
    }
}

fn print_curve(curve: &RateCurve) {
    println!("year\tV\tJSD");
    for p in &curve.points {
        let cell = |v: Option<f64>| v.map(short).unwrap_or_else(|| "-".into());
        println!("{}\t{}\t{}", p.year, cell(p.v), cell(p.jsd));
    }
}

fn rate(args: RateArgs) -> anyhow::Result<()> {
    let snapshots: BTreeMap<i32, FrequencySnapshot> = match args.source.open()? {
        Some((index, corpus)) => {
            let sampled = index.get(&corpus)?.sampled(index.spec(args.source.seed))?;
            sampled.counts.years().map(|(y, s)| (y, s.clone())).collect()
        }
        None => {
            let mut map = BTreeMap::new();
            for arg in &args.snapshots {
                let (year, path) = dated(arg)?;
                let snapshot = read_list(&path, args.format, ParseOptions::default())?;
                if map.insert(year, snapshot).is_some() {
                    bail!("year {year} given twice");
                }
            }
            map
        }
    };
    let curve = rate_curve(&snapshots, args.lag)?;
    print_curve(&curve);
    if let Some(path) = &args.out {
        write_json(path, &curve)?;
    }
    if let Some(path) = &args.svg {
        let config = RatePlotConfig {
            split_year: args.split_year,
            ..RatePlotConfig::default()
        };
        write_file(path, rate_plot(&curve, &config)?.as_bytes())?;
    }
    Ok(())
}

fn print_changers(records: &[ContributionRecord]) {
    println!("rank\tword\tpartial\tcount_a\tcount_b");
    for (i, r) in records.iter().enumerate() {
        println!(
            "{}\t{}{}\t{}\t{}\t{}",
            i + 1,
            r.direction.sign(),
            r.word,
            short(r.partial),
            r.observed[0],
            r.observed[1]
        );
    }
}

fn changers(args: ChangersArgs) -> anyhow::Result<()> {
    let records = match args.analysis.bundle()? {
        Some(bundle) => bundle.changers,
        None => {
            let [a, b] = two_files(&args.files)?;
            let a = read_list(a, args.format, ParseOptions::default())?;
            let b = read_list(b, args.format, ParseOptions::default())?;
            top_changers(&a, &b, args.analysis.top, &args.analysis.pos)?
        }
    };
    print_changers(&records);
    if let Some(path) = &args.out {
        write_json(path, &records)?;
    }
    Ok(())
}

fn correlate(args: CorrelateArgs) -> anyhow::Result<()> {
    if args.demo {
        let summary = spurious_demo(SpuriousConfig::new(args.trials, args.length, args.analysis.source.seed))?;
        println!("series\tmedian |rho|\tmean |rho|\tshare |rho| > 0.5");
        for (name, s) in [("levels", summary.levels), ("diffs", summary.diffs)] {
            println!(
                "{name}\t{}\t{}\t{}",
                short(s.median_abs),
                short(s.mean_abs),
                short(s.share_above_half)
            );
        }
        if let Some(path) = &args.out {
            write_json(path, &summary)?;
        }
        return Ok(());
    }
    let Some(bundle) = args.analysis.bundle()? else {
        bail!("correlate needs --index and --corpus, or --demo");
    };
    let Some(matrix) = &bundle.correlation else {
        bail!("no correlations: {}", bundle.notes.join("; "));
    };
    let labels: Vec<String> = matrix.words.iter().map(ToString::to_string).collect();
    println!("\t{}", labels.join("\t"));
    for (label, row) in labels.iter().zip(&matrix.correlation) {
        let cells: Vec<String> = row.iter().map(|c| c.map(short).unwrap_or_else(|| "-".into())).collect();
        println!("{label}\t{}", cells.join("\t"));
    }
    if let Some(path) = &args.out {
        write_json(path, matrix)?;
    }
    if let Some(path) = &args.svg {
        let config = SmallMultiplesConfig::default();
        let layout = small_multiples(&bundle.series, &config)?;
        write_file(path, small_multiples_svg(&layout, &config).as_bytes())?;
    }
    Ok(())
}

#[derive(serde::Deserialize)]
struct MatrixFile {
    labels: Vec<String>,
    values: Vec<Vec<f64>>,
}

fn cluster(args: ClusterArgs) -> anyhow::Result<()> {
    let tree = match &args.matrix {
        Some(path) => {
            let text = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
            let m: MatrixFile = serde_json::from_slice(&text).with_context(|| format!("parsing {}", path.display()))?;
            wpgma(&m.values, m.labels)?
        }
        None => {
            let Some(bundle) = args.analysis.bundle()? else {
                bail!("cluster needs --index and --corpus, or --matrix");
            };
            if !bundle.excluded.is_empty() {
                let words: Vec<String> = bundle.excluded.iter().map(ToString::to_string).collect();
                eprintln!("left out (undefined correlation): {}", words.join(", "));
            }
            match bundle.dendrogram {
                Some(tree) => tree,
                None => bail!("no dendrogram: {}", bundle.notes.join("; ")),
            }
        }
    };
    let n = tree.len();
    let name = |id: usize| {
        if id < n {
            tree.leaves[id].clone()
        } else {
            format!("#{}", id - n + 1)
        }
    };
    println!("step\tleft\tright\theight\tsize");
    for (i, m) in tree.merges.iter().enumerate() {
        println!(
            "#{}\t{}\t{}\t{}\t{}",
            i + 1,
            name(m.left),
            name(m.right),
            short(m.height),
            m.size
        );
    }
    if let Some(path) = &args.out {
        write_json(path, &tree)?;
    }
    if let Some(path) = &args.svg {
        write_file(path, dendrogram_svg(&tree).as_bytes())?;
    }
    Ok(())
}

fn render(args: RenderArgs) -> anyhow::Result<()> {
    let text = fs::read(&args.bundle).with_context(|| format!("reading {}", args.bundle.display()))?;
    let bundle: AnalysisBundle =
        serde_json::from_slice(&text).with_context(|| format!("parsing {}", args.bundle.display()))?;
    fs::create_dir_all(&args.out_dir).with_context(|| format!("creating {}", args.out_dir.display()))?;
    let cloud = args.out_dir.join("cloud.svg");
    write_file(&cloud, cloud_svg(&bundle.cloud).as_bytes())?;
    println!("{}", cloud.display());
    if !bundle.series.is_empty() {
        let config = SmallMultiplesConfig::default();
        let layout = small_multiples(&bundle.series, &config)?;
        let path = args.out_dir.join("series.svg");
        write_file(&path, small_multiples_svg(&layout, &config).as_bytes())?;
        println!("{}", path.display());
    }
    if let Some(tree) = &bundle.dendrogram {
        let path = args.out_dir.join("dendrogram.svg");
        write_file(&path, dendrogram_svg(tree).as_bytes())?;
        println!("{}", path.display());
    }
    Ok(())
}

fn serve(args: ServeArgs) -> anyhow::Result<()> {
    let addr = SocketAddr::new(args.bind, args.port);
    let runtime = tokio::runtime::Runtime::new()?;
    let assets = args.assets.clone();
    if let Some(dir) = &assets {
        if !dir.is_dir() {
            bail!("assets directory {} does not exist", dir.display());
        }
    }
    let load = move || match (&args.index, &args.config) {
        (Some(dir), _) => LoadedIndex::load(dir),
        (None, Some(path)) => {
            let config = Config::load(path)?;
            let root = args
                .data_root
                .clone()
                .unwrap_or_else(|| path.parent().map(Path::to_path_buf).unwrap_or_default());
            let built = build(&config, &root)?;
            Ok(LoadedIndex::from_built(&config, built))
        }
        (None, None) => unreachable!("required by clap"),
    };
    runtime.block_on(service::serve(addr, assets, load, async {
        let _ = tokio::signal::ctrl_c().await;
    }))?;
    Ok(())
}
