//! WPGMA checked against a naive linkage that rescans the whole matrix on
//! every step.

#![allow(clippy::needless_range_loop)]

use lexshift_core::clustering::{cut, wpgma, Merge};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Textbook WPGMA: find the closest active pair by a full scan, merge into
/// the lower row, average the two rows.
fn naive_wpgma(d: &[Vec<f64>]) -> Vec<Merge> {
    let n = d.len();
    let mut dist = d.to_vec();
    let mut active = vec![true; n];
    let mut ids: Vec<usize> = (0..n).collect();
    let mut sizes = vec![1; n];
    let mut merges = Vec::new();
    for step in 0..n - 1 {
        let mut best: Option<(usize, usize)> = None;
        for i in 0..n {
            for j in (i + 1)..n {
                if !active[i] || !active[j] {
                    continue;
                }
                if best.is_none_or(|(bi, bj)| dist[i][j] < dist[bi][bj]) {
                    best = Some((i, j));
                }
            }
        }
        let (i, j) = best.unwrap();
        merges.push(Merge {
            left: ids[i],
            right: ids[j],
            height: dist[i][j],
            size: sizes[i] + sizes[j],
        });
        for k in 0..n {
            if active[k] && k != i && k != j {
                let v = (dist[i][k] + dist[j][k]) / 2.0;
                dist[i][k] = v;
                dist[k][i] = v;
            }
        }
        active[j] = false;
        ids[i] = n + step;
        sizes[i] += sizes[j];
    }
    merges
}

fn random_matrix(rng: &mut ChaCha8Rng, n: usize, coarse: bool) -> Vec<Vec<f64>> {
    let mut d = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            // coarse values force ties
            let v = if coarse {
                f64::from(rng.random_range(1..4u32)) / 2.0
            } else {
                rng.random_range(0.0..2.0)
            };
            d[i][j] = v;
            d[j][i] = v;
        }
    }
    d
}

fn labels(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("w{i}")).collect()
}

#[test]
fn matches_naive_linkage_on_random_matrices() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for trial in 0..100 {
        let n = 2 + trial % 5;
        let d = random_matrix(&mut rng, n, false);
        let tree = wpgma(&d, labels(n)).unwrap();
        assert_eq!(tree.merges, naive_wpgma(&d), "matrix {trial}: {d:?}");
        assert!(tree.inversions.is_empty());
    }
}

#[test]
fn matches_naive_linkage_with_ties() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for trial in 0..100 {
        let n = 2 + trial % 5;
        let d = random_matrix(&mut rng, n, true);
        assert_eq!(
            wpgma(&d, labels(n)).unwrap().merges,
            naive_wpgma(&d),
            "matrix {trial}: {d:?}"
        );
    }
}

#[test]
fn larger_matrices_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for n in [10, 25, 60] {
        let d = random_matrix(&mut rng, n, false);
        assert_eq!(wpgma(&d, labels(n)).unwrap().merges, naive_wpgma(&d));
    }
}

#[test]
fn hand_example() {
    let d = vec![vec![0.0, 0.2, 0.9], vec![0.2, 0.0, 0.7], vec![0.9, 0.7, 0.0]];
    let tree = wpgma(&d, labels(3)).unwrap();
    let heights: Vec<f64> = tree.merges.iter().map(|m| m.height).collect();
    assert_eq!(heights[0], 0.2);
    assert!((heights[1] - 0.8).abs() < 1e-15);
    assert_eq!(tree.merges, naive_wpgma(&d));
}

#[test]
fn heights_are_monotone_and_children_used_once() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for n in 2..12 {
        let d = random_matrix(&mut rng, n, false);
        let tree = wpgma(&d, labels(n)).unwrap();
        assert_eq!(tree.merges.len(), n - 1);
        assert!(tree.merges.windows(2).all(|w| w[0].height <= w[1].height));
        let mut used = vec![0; 2 * n - 1];
        for m in &tree.merges {
            used[m.left] += 1;
            used[m.right] += 1;
        }
        assert!(used[..2 * n - 2].iter().all(|&u| u == 1));
        assert_eq!(used[2 * n - 2], 0);
        assert_eq!(tree.merges.last().unwrap().size, n);
    }
}

#[test]
fn permuting_labels_keeps_heights() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..30 {
        let n = 6;
        let d = random_matrix(&mut rng, n, false);
        let perm = [3, 0, 5, 1, 4, 2];
        let permuted: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| d[perm[i]][perm[j]]).collect()).collect();
        let a = wpgma(&d, labels(n)).unwrap();
        let b = wpgma(&permuted, labels(n)).unwrap();
        let ha: Vec<f64> = a.merges.iter().map(|m| m.height).collect();
        let hb: Vec<f64> = b.merges.iter().map(|m| m.height).collect();
        for (x, y) in ha.iter().zip(&hb) {
            assert!((x - y).abs() < 1e-12);
        }
        // the same leaf sets are joined once relabelled
        let groups_a: Vec<Vec<usize>> = cut(&a, 3).unwrap();
        let mut groups_b: Vec<Vec<usize>> = cut(&b, 3)
            .unwrap()
            .into_iter()
            .map(|g| {
                let mut g: Vec<usize> = g.into_iter().map(|i| perm[i]).collect();
                g.sort();
                g
            })
            .collect();
        groups_b.sort();
        let mut groups_a = groups_a;
        groups_a.sort();
        assert_eq!(groups_a, groups_b);
    }
}
