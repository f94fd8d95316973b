//! Binomial downsampling to a fixed token budget and the synthetic split
//! experiment used to validate the divergence measures.
//!
//! All randomness flows from a caller-supplied 64-bit seed through
//! [`ChaCha8Rng`]; sub-streams are derived with a SplitMix64 finaliser so
//! runs are reproducible within this implementation.

use alloc::format;
use alloc::vec::Vec;

use rand::distr::{Distribution, Uniform};
use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Binomial;
use serde::{Deserialize, Serialize};

use crate::corpus::FrequencySnapshot;
use crate::error::{Error, Result};

pub const DEFAULT_TARGET: u64 = 1_000_000;
pub const DEFAULT_MARGIN: u64 = 10_000;
/// Fresh binomial rounds tried before an undershoot becomes an error.
pub const MAX_UNDERSHOOT_RETRIES: u32 = 10;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives an independent sub-seed for stream `stream` of `seed`.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    splitmix64(seed ^ splitmix64(stream.wrapping_add(0x5eed)))
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SampleSpec {
    pub target: u64,
    pub margin: u64,
    pub seed: u64,
}

impl Default for SampleSpec {
    fn default() -> Self {
        SampleSpec {
            target: DEFAULT_TARGET,
            margin: DEFAULT_MARGIN,
            seed: 0,
        }
    }
}

impl SampleSpec {
    pub fn new(target: u64, margin: u64, seed: u64) -> Result<Self> {
        if target == 0 {
            return Err(Error::InvalidParameter("sample target must be at least 1".into()));
        }
        Ok(SampleSpec { target, margin, seed })
    }

    /// Smallest corpus size that can be downsampled.
    pub fn required(&self) -> u64 {
        self.target + self.margin
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    r: f64,
    pub seed: u64,
}

impl SplitSpec {
    pub fn new(r: f64, seed: u64) -> Result<Self> {
        if !(0.0..0.5).contains(&r) {
            return Err(Error::InvalidParameter(format!("split spread r = {r} not in [0, 0.5)")));
        }
        Ok(SplitSpec { r, seed })
    }

    pub fn r(&self) -> f64 {
        self.r
    }
}

/// Draws a sample of exactly `spec.target` tokens from `snapshot`.
///
/// Each word is first drawn binomially with `p = (target + margin) / N`.
/// The overshoot is then removed by drawing `target` tokens without
/// replacement from the drawn multiset. An undershoot triggers a fresh
/// binomial round.
pub fn binomial_downsample(snapshot: &FrequencySnapshot, spec: &SampleSpec) -> Result<FrequencySnapshot> {
    if spec.target == 0 {
        return Err(Error::InvalidParameter("sample target must be at least 1".into()));
    }
    let total = snapshot.total();
    if total <= spec.required() {
        return Err(Error::CorpusTooSmall {
            total,
            required: spec.required(),
        });
    }
    let p = spec.required() as f64 / total as f64;
    for attempt in 0..MAX_UNDERSHOOT_RETRIES {
        let mut rng = rng_from_seed(derive_seed(spec.seed, u64::from(attempt)));
        let mut drawn = Vec::with_capacity(snapshot.len());
        let mut drawn_total = 0u64;
        for (_, count) in snapshot.iter() {
            let k = Binomial::new(count, p)
                .map_err(|e| Error::InvalidParameter(format!("binomial: {e}")))?
                .sample(&mut rng);
            drawn_total += k;
            drawn.push(k);
        }
        if drawn_total < spec.target {
            continue;
        }
        let kept = urn_reduce(&drawn, drawn_total, spec.target, &mut rng)?;
        return Ok(FrequencySnapshot::from_counts(
            snapshot.label(),
            snapshot.keys().cloned().zip(kept),
        ));
    }
    Err(Error::Undershoot {
        target: spec.target,
        attempts: MAX_UNDERSHOOT_RETRIES,
    })
}

/// Downsamples when the snapshot is large enough, otherwise returns it
/// unchanged. The flag reports whether sampling happened.
pub fn downsample_or_pass(snapshot: &FrequencySnapshot, spec: &SampleSpec) -> Result<(FrequencySnapshot, bool)> {
    if snapshot.total() <= spec.required() {
        Ok((snapshot.clone(), false))
    } else {
        binomial_downsample(snapshot, spec).map(|s| (s, true))
    }
}

/// Draws `keep` items without replacement from a multiset with the given
/// per-type multiplicities, by discarding `drawn_total - keep` uniformly
/// chosen token positions. The per-type result is multivariate
/// hypergeometric.
fn urn_reduce(drawn: &[u64], drawn_total: u64, keep: u64, rng: &mut ChaCha8Rng) -> Result<Vec<u64>> {
    let mut out = drawn.to_vec();
    let overshoot = drawn_total - keep;
    if overshoot == 0 {
        return Ok(out);
    }
    let length = usize::try_from(drawn_total)
        .map_err(|_| Error::InvalidParameter(format!("sample of {drawn_total} tokens exceeds the address space")))?;
    let mut positions: Vec<usize> = index::sample(rng, length, overshoot as usize).into_vec();
    positions.sort_unstable();
    let mut word = 0;
    let mut upper = drawn[0];
    for p in positions {
        while p as u64 >= upper {
            word += 1;
            upper += drawn[word];
        }
        out[word] -= 1;
    }
    Ok(out)
}

/// Splits every word's count binomially between two corpora with a
/// per-word success probability drawn from `[0.5 - r, 0.5 + r]`.
pub fn split_pair(union: &FrequencySnapshot, spec: &SplitSpec) -> Result<(FrequencySnapshot, FrequencySnapshot)> {
    let mut rng = rng_from_seed(spec.seed);
    let spread = Uniform::new_inclusive(0.5 - spec.r, 0.5 + spec.r)
        .map_err(|e| Error::InvalidParameter(format!("uniform: {e}")))?;
    let mut first = FrequencySnapshot::new(format!("{}/c1", union.label()));
    let mut second = FrequencySnapshot::new(format!("{}/c2", union.label()));
    for (key, count) in union.iter() {
        let p = spread.sample(&mut rng);
        let f = Binomial::new(count, p)
            .map_err(|e| Error::InvalidParameter(format!("binomial: {e}")))?
            .sample(&mut rng);
        first.add(key.clone(), f);
        second.add(key.clone(), count - f);
    }
    Ok((first, second))
}

/// One generated corpus pair and the spread that produced it.
#[derive(Debug, Clone)]
pub struct ExperimentPair {
    pub r: f64,
    pub first: FrequencySnapshot,
    pub second: FrequencySnapshot,
}

/// Evenly spaced spread values over `[r_low, r_high]`, endpoints included.
pub fn spread_grid(n: usize, r_low: f64, r_high: f64) -> Vec<f64> {
    let step = (r_high - r_low) / (n - 1) as f64;
    (0..n)
        .map(|i| if i + 1 == n { r_high } else { r_low + step * i as f64 })
        .collect()
}

/// Generates `n_pairs` split pairs from `base` with spreads evenly spaced
/// over `[r_low, r_high]` and one derived sub-seed per pair.
pub fn generate_experiment(
    base: &FrequencySnapshot,
    n_pairs: usize,
    r_low: f64,
    r_high: f64,
    seed: u64,
) -> Result<Vec<ExperimentPair>> {
    if n_pairs < 2 {
        return Err(Error::InvalidParameter("experiment needs at least 2 pairs".into()));
    }
    if r_low.partial_cmp(&r_high) != Some(core::cmp::Ordering::Less) {
        return Err(Error::InvalidParameter(format!(
            "r_low {r_low} must be below r_high {r_high}"
        )));
    }
    spread_grid(n_pairs, r_low, r_high)
        .into_iter()
        .enumerate()
        .map(|(i, r)| {
            let spec = SplitSpec::new(r, derive_seed(seed, i as u64))?;
            let (first, second) = split_pair(base, &spec)?;
            Ok(ExperimentPair { r, first, second })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::WordKey;

    fn zipfish(total_words: usize, scale: u64) -> FrequencySnapshot {
        FrequencySnapshot::from_counts(
            "base",
            (1..=total_words).map(|i| (WordKey::plain(format!("w{i}")).unwrap(), scale / i as u64 + 1)),
        )
    }

    #[test]
    fn downsample_hits_target_exactly() {
        let s = zipfish(5000, 400_000);
        let spec = SampleSpec::new(100_000, 1_000, 7).unwrap();
        let out = binomial_downsample(&s, &spec).unwrap();
        assert_eq!(out.total(), 100_000);
        assert!(out.iter().all(|(k, c)| c <= s.get(k)));
    }

    #[test]
    fn downsample_rejects_small_corpus() {
        let s = zipfish(10, 10);
        let spec = SampleSpec::new(100, 10, 0).unwrap();
        assert!(matches!(
            binomial_downsample(&s, &spec),
            Err(Error::CorpusTooSmall { .. })
        ));
        let (same, sampled) = downsample_or_pass(&s, &spec).unwrap();
        assert!(!sampled);
        assert_eq!(same, s);
    }

    #[test]
    fn downsample_is_deterministic() {
        let s = zipfish(2000, 50_000);
        let spec = SampleSpec::new(20_000, 500, 99).unwrap();
        assert_eq!(
            binomial_downsample(&s, &spec).unwrap(),
            binomial_downsample(&s, &spec).unwrap()
        );
        let other = SampleSpec { seed: 100, ..spec };
        assert_ne!(
            binomial_downsample(&s, &spec).unwrap(),
            binomial_downsample(&s, &other).unwrap()
        );
    }

    #[test]
    fn urn_keeps_requested_amount() {
        let mut rng = rng_from_seed(3);
        let drawn = [10, 0, 5, 7, 1];
        let kept = urn_reduce(&drawn, 23, 20, &mut rng).unwrap();
        assert_eq!(kept.iter().sum::<u64>(), 20);
        assert!(kept.iter().zip(&drawn).all(|(k, d)| k <= d));
    }

    #[test]
    fn split_conserves_counts() {
        let u = zipfish(500, 10_000);
        for r in [0.0, 0.1, 0.45] {
            let (a, b) = split_pair(&u, &SplitSpec::new(r, 11).unwrap()).unwrap();
            for (k, c) in u.iter() {
                assert_eq!(a.get(k) + b.get(k), c);
            }
        }
    }

    #[test]
    fn split_without_spread_halves() {
        let u = zipfish(2000, 200_000);
        let (a, b) = split_pair(&u, &SplitSpec::new(0.0, 5).unwrap()).unwrap();
        let half = u.total() as f64 / 2.0;
        // binomial sd of the total is sqrt(N)/2
        let tol = 5.0 * libm::sqrt(u.total() as f64) / 2.0;
        assert!((a.total() as f64 - half).abs() < tol);
        assert!((b.total() as f64 - half).abs() < tol);
    }

    #[test]
    fn split_spec_bounds() {
        assert!(SplitSpec::new(0.5, 0).is_err());
        assert!(SplitSpec::new(-0.1, 0).is_err());
        assert!(SplitSpec::new(0.4, 0).is_ok());
    }

    #[test]
    fn experiment_endpoints_and_determinism() {
        let u = zipfish(100, 1000);
        let pairs = generate_experiment(&u, 2, 0.004, 0.4, 1).unwrap();
        assert_eq!(pairs.iter().map(|p| p.r).collect::<Vec<_>>(), [0.004, 0.4]);
        let again = generate_experiment(&u, 2, 0.004, 0.4, 1).unwrap();
        for (x, y) in pairs.iter().zip(&again) {
            assert_eq!(x.first, y.first);
            assert_eq!(x.second, y.second);
        }
        assert!(generate_experiment(&u, 1, 0.0, 0.4, 1).is_err());
        assert!(generate_experiment(&u, 3, 0.4, 0.4, 1).is_err());
        assert_eq!(generate_experiment(&u, 1000, 0.004, 0.4, 1).unwrap().len(), 1000);
    }
}
