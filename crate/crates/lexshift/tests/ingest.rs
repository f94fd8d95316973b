use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use flate2::write::GzEncoder;
use flate2::Compression;
use lexshift::index::{build, write_index, Config, LoadedIndex};
use lexshift::ingest::{parse_gbc_unigrams, with_input, ParseOptions, ParseStats};
use lexshift_core::corpus::WordKey;
use lexshift_core::timeline::{slice_years, TimeIndexedCounts};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures/toy")
        .join(name)
}

fn parse(text: &str) -> (TimeIndexedCounts, ParseStats) {
    parse_gbc_unigrams(&mut text.as_bytes(), "mem", 1900, 1919, ParseOptions::default()).unwrap()
}

#[test]
fn chunked_parse_equals_whole_parse() {
    let text = fs::read_to_string(fixture("toy-gbc.tsv")).unwrap();
    let (whole, whole_stats) = parse(&text);
    let lines: Vec<&str> = text.lines().collect();
    for chunks in [2, 3, 7, 50] {
        let size = lines.len().div_ceil(chunks);
        let mut merged = TimeIndexedCounts::new(1900, 1919).unwrap();
        let mut stats = ParseStats::default();
        for chunk in lines.chunks(size) {
            let (part, part_stats) = parse(&(chunk.join("\n") + "\n"));
            merged.merge(&part);
            stats.merge(&part_stats);
        }
        assert_eq!(merged, whole, "{chunks} chunks");
        assert_eq!(stats, whole_stats);
    }
}

#[test]
fn accounting_identity_holds() {
    let text = fs::read_to_string(fixture("toy-gbc.tsv")).unwrap();
    let (_, stats) = parse(&text);
    assert_eq!(stats.lines, text.lines().count() as u64);
    assert_eq!(
        stats.lines,
        stats.filter.total() + stats.out_of_range + stats.malformed + stats.skipped
    );
    assert_eq!(stats.out_of_range, 2);
    assert!(stats.filter.dropped() > 0);
}

#[test]
fn slices_match_a_row_by_row_recount() {
    let text = fs::read_to_string(fixture("toy-gbc.tsv")).unwrap();
    let (counts, _) = parse(&text);
    for (from, to) in [(1900, 1904), (1915, 1919), (1910, 1910)] {
        let slice = slice_years(&counts, from, to).unwrap();
        let mut expected = std::collections::BTreeMap::<String, u64>::new();
        for line in text.lines() {
            let f: Vec<&str> = line.split('\t').collect();
            let year: i32 = f[1].parse().unwrap();
            let key = WordKey::parse_field(f[0]).unwrap();
            if (from..=to).contains(&year) && lexshift_core::filter::clean_token(&key).is_keep() {
                *expected.entry(key.to_string()).or_default() += f[2].parse::<u64>().unwrap();
            }
        }
        expected.retain(|_, v| *v > 0);
        let got: std::collections::BTreeMap<String, u64> = slice.iter().map(|(k, c)| (k.to_string(), c)).collect();
        assert_eq!(got, expected, "{from}-{to}");
    }
    let a = slice_years(&counts, 1900, 1904).unwrap();
    let b = slice_years(&counts, 1915, 1919).unwrap();
    assert_eq!(
        a.total() + b.total(),
        (1900..=1904)
            .chain(1915..=1919)
            .map(|y| counts.year_total(y))
            .sum::<u64>()
    );
}

#[test]
fn gzip_input_is_detected() {
    let dir = tempfile::tempdir().unwrap();
    let plain = fixture("toy-gbc.tsv");
    let gz = dir.path().join("toy.tsv.gz");
    let bytes = fs::read(&plain).unwrap();
    // two members, as split dumps are sometimes concatenated
    let half = bytes.iter().position(|&b| b == b'\n').unwrap() + 1;
    let mut file = fs::File::create(&gz).unwrap();
    for part in [&bytes[..half], &bytes[half..]] {
        let mut enc = GzEncoder::new(Vec::new(), Compression::default());
        enc.write_all(part).unwrap();
        file.write_all(&enc.finish().unwrap()).unwrap();
    }
    drop(file);
    let read = |p: &Path| {
        with_input(p, |r, name| {
            parse_gbc_unigrams(r, name, 1900, 1919, ParseOptions::default())
        })
        .unwrap()
    };
    let ((a, _), da) = read(&plain);
    let ((b, _), db) = read(&gz);
    assert_eq!(a, b);
    assert_eq!(da.bytes, bytes.len() as u64);
    assert_ne!(da.sha256, db.sha256);
}

#[test]
fn index_round_trips_through_disk() {
    let config = Config::load(&fixture("lexshift.toml")).unwrap();
    let built = build(&config, &fixture("")).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let manifest = write_index(dir.path(), &config, &built).unwrap();
    assert_eq!(manifest.corpora.len(), 1);
    assert_eq!(manifest.corpora[0].files[0].digest.sha256.len(), 64);

    let in_memory = LoadedIndex::from_built(&config, built.clone());
    let on_disk = LoadedIndex::load(dir.path()).unwrap();
    for seed in [0, 1, 5] {
        let a = in_memory.get("toy").unwrap().sampled(in_memory.spec(seed)).unwrap();
        let b = on_disk.get("toy").unwrap().sampled(on_disk.spec(seed)).unwrap();
        assert_eq!(a.counts, b.counts, "seed {seed}");
        assert_eq!(a.years, b.years, "seed {seed}");
        assert!(a.years.iter().all(|y| y.sampled && y.sample_total == 2000));
    }
    assert_eq!(on_disk.get("toy").unwrap().raw(), &built[0].raw);
}

#[test]
fn split_files_index_like_one_file() {
    let text = fs::read_to_string(fixture("toy-gbc.tsv")).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let lines: Vec<&str> = text.lines().collect();
    let (first, second) = lines.split_at(lines.len() / 3);
    fs::write(dir.path().join("part1.tsv"), first.join("\n") + "\n").unwrap();
    fs::write(dir.path().join("part2.tsv"), second.join("\n") + "\n").unwrap();
    let split = Config::from_toml(
        "[sample]\ntarget = 2000\nmargin = 100\n[[corpus]]\nid = \"toy\"\nformat = \"gbc\"\nyears = [1900, 1919]\nfiles = [\"part1.tsv\", \"part2.tsv\"]\n",
    )
    .unwrap();
    let whole = Config::load(&fixture("lexshift.toml")).unwrap();
    let a = build(&split, dir.path()).unwrap();
    let b = build(&whole, &fixture("")).unwrap();
    assert_eq!(a[0].raw, b[0].raw);
    assert_eq!(a[0].samples[&0].counts, b[0].samples[&0].counts);
    assert_eq!(a[0].record.stats, b[0].record.stats);
}

#[test]
fn config_errors_are_reported() {
    assert!(Config::from_toml("[[corpus]]\nid = \"x\"\nformat = \"gbc\"\nfiles = [\"a\"]\n").is_err());
    assert!(Config::from_toml("[[corpus]]\nid = \"x\"\nformat = \"snapshot\"\nfiles = [\"a\"]\n").is_err());
    assert!(
        Config::from_toml("[[corpus]]\nid = \"bad id\"\nformat = \"gbc\"\nyears = [1, 2]\nfiles = [\"a\"]\n").is_err()
    );
    assert!(Config::from_toml("colour = 1\n").is_err());
    let two = "[[corpus]]\nid = \"x\"\nformat = \"gbc\"\nyears = [1, 2]\nfiles = [\"a\"]\n";
    assert!(Config::from_toml(&format!("{two}{two}")).is_err());
}

#[test]
fn list_corpora_take_one_year_per_file() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("1900s.tsv"), "Haus_NOUN\t10\nder_DET\t30\n").unwrap();
    fs::write(dir.path().join("1910s.txt"), "12 Haus NOUN\n25 der DET\n3 1914 NUM\n").unwrap();
    let config = Config::from_toml(
        r#"
[sample]
seeds = []
[[corpus]]
id = "decades"
format = "snapshot"
files = [{ year = 1900, path = "1900s.tsv" }]
[[corpus]]
id = "bnc-like"
format = "bnc"
files = [{ year = 1910, path = "1910s.txt" }]
"#,
    )
    .unwrap();
    let built = build(&config, dir.path()).unwrap();
    assert_eq!(built[0].raw.year_total(1900), 40);
    assert_eq!(built[1].raw.year_total(1910), 37);
    assert_eq!(built[1].record.stats.filter.dropped_tag, 1);
}
