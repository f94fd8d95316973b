//! Statistical checks on the downsampler and the split generator.

use lexshift_core::corpus::{FrequencySnapshot, WordKey};
use lexshift_core::sampling::{binomial_downsample, generate_experiment, split_pair, SampleSpec, SplitSpec};

fn corpus() -> (FrequencySnapshot, WordKey) {
    // 2,010,000 tokens: one word with 200,000 and 1,000 filler types.
    let target = WordKey::plain("target").unwrap();
    let mut s = FrequencySnapshot::new("base");
    s.add(target.clone(), 200_000);
    for i in 0..1000 {
        s.add(WordKey::plain(format!("f{i:04}")).unwrap(), 1810);
    }
    assert_eq!(s.total(), 2_010_000);
    (s, target)
}

fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[test]
fn downsampled_counts_are_unbiased() {
    let (base, target) = corpus();
    let mut draws = Vec::new();
    let mut filler = Vec::new();
    let filler_key = WordKey::plain("f0007").unwrap();
    for seed in 0..500 {
        let spec = SampleSpec::new(1_000_000, 10_000, seed).unwrap();
        let s = binomial_downsample(&base, &spec).unwrap();
        assert_eq!(s.total(), 1_000_000);
        draws.push(s.get(&target) as f64);
        filler.push(s.get(&filler_key) as f64);
    }
    let expected = 200_000.0 * 1_000_000.0 / 2_010_000.0;
    let (mean, se) = mean_and_se(&draws);
    assert!(
        (mean - expected).abs() < 3.0 * se,
        "mean {mean}, expected {expected}, se {se}"
    );

    let expected = 1810.0 * 1_000_000.0 / 2_010_000.0;
    let (mean, se) = mean_and_se(&filler);
    assert!(
        (mean - expected).abs() < 3.0 * se,
        "mean {mean}, expected {expected}, se {se}"
    );
}

#[test]
fn downsampled_spread_is_close_to_binomial() {
    let (base, target) = corpus();
    let draws: Vec<f64> = (0..200)
        .map(|seed| {
            let spec = SampleSpec::new(1_000_000, 10_000, 10_000 + seed).unwrap();
            binomial_downsample(&base, &spec).unwrap().get(&target) as f64
        })
        .collect();
    let (_, se) = mean_and_se(&draws);
    let sd = se * (draws.len() as f64).sqrt();
    let q: f64 = 1_000_000.0 / 2_010_000.0;
    let binomial_sd = (200_000.0 * q * (1.0 - q)).sqrt();
    // fixing the total removes a little variance, never adds much
    assert!(
        sd < 1.25 * binomial_sd && sd > 0.6 * binomial_sd,
        "sd {sd} vs {binomial_sd}"
    );
}

#[test]
fn split_proportions_stay_in_range() {
    let mut union = FrequencySnapshot::new("u");
    for i in 0..300 {
        union.add(WordKey::plain(format!("w{i}")).unwrap(), 20_000);
    }
    let r = 0.2;
    let (a, b) = split_pair(&union, &SplitSpec::new(r, 3).unwrap()).unwrap();
    let mut lo: f64 = 1.0;
    let mut hi: f64 = 0.0;
    for (key, count) in union.iter() {
        assert_eq!(a.get(key) + b.get(key), count);
        let share = a.get(key) as f64 / count as f64;
        lo = lo.min(share);
        hi = hi.max(share);
    }
    // binomial noise on 20,000 draws is well under 0.02
    assert!(lo > 0.5 - r - 0.02 && hi < 0.5 + r + 0.02, "{lo}..{hi}");
    assert!(lo < 0.5 - r + 0.05 && hi > 0.5 + r - 0.05, "{lo}..{hi}");
}

#[test]
fn experiment_is_reproducible() {
    let mut union = FrequencySnapshot::new("u");
    for i in 0..50 {
        union.add(WordKey::plain(format!("w{i}")).unwrap(), 100 + i);
    }
    let a = generate_experiment(&union, 10, 0.0, 0.4, 77).unwrap();
    let b = generate_experiment(&union, 10, 0.0, 0.4, 77).unwrap();
    let c = generate_experiment(&union, 10, 0.0, 0.4, 78).unwrap();
    assert_eq!(a.len(), 10);
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(x.r, y.r);
        assert_eq!(x.first, y.first);
        assert_eq!(x.second, y.second);
    }
    assert!(a.iter().zip(&c).any(|(x, y)| x.first != y.first));
}
