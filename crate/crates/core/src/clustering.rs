//! Weighted-average (WPGMA) agglomerative clustering.
//!
//! At each step the closest pair of active clusters is merged at a height
//! equal to their dissimilarity. The merged cluster's distance to any other
//! cluster `C` is `(d(A, C) + d(B, C)) / 2`, independent of cluster sizes.
//!
//! Clusters live in the rows of the input matrix. A merge of rows `i < j`
//! keeps the result in row `i` and retires row `j`; among equally close
//! pairs the smallest `(i, j)` wins. Leaves have ids `0..n`, the `k`-th
//! merge creates id `n + k`.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Merge {
    pub left: usize,
    pub right: usize,
    pub height: f64,
    /// Number of leaves under the new cluster.
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dendrogram {
    pub leaves: Vec<String>,
    pub merges: Vec<Merge>,
    /// Merge positions whose height is below the previous merge. Always
    /// empty for exact WPGMA; kept as a diagnostic.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub inversions: Vec<usize>,
}

impl Dendrogram {
    pub fn len(&self) -> usize {
        self.leaves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.leaves.is_empty()
    }

    pub fn root(&self) -> usize {
        self.leaves.len() + self.merges.len() - 1
    }

    /// Children of a cluster id, `None` for leaves.
    pub fn children(&self, id: usize) -> Option<(usize, usize)> {
        let n = self.leaves.len();
        (id >= n).then(|| {
            let m = &self.merges[id - n];
            (m.left, m.right)
        })
    }

    pub fn height(&self, id: usize) -> f64 {
        let n = self.leaves.len();
        if id < n {
            0.0
        } else {
            self.merges[id - n].height
        }
    }

    /// Leaf indices in left-to-right order of the tree.
    pub fn leaf_order(&self) -> Vec<usize> {
        let mut order = Vec::with_capacity(self.leaves.len());
        let mut stack = vec![self.root()];
        while let Some(id) = stack.pop() {
            match self.children(id) {
                Some((left, right)) => {
                    stack.push(right);
                    stack.push(left);
                }
                None => order.push(id),
            }
        }
        order
    }
}

/// Checks that `d` is square, symmetric, finite, non-negative, with a zero
/// diagonal and at least two rows.
pub fn validate(d: &[Vec<f64>]) -> Result<()> {
    let n = d.len();
    if n < 2 {
        return Err(Error::InvalidMatrix(format!("need at least 2 rows, got {n}")));
    }
    for (i, row) in d.iter().enumerate() {
        if row.len() != n {
            return Err(Error::InvalidMatrix(format!(
                "row {i} has {} columns, expected {n}",
                row.len()
            )));
        }
        if row[i] != 0.0 {
            return Err(Error::InvalidMatrix(format!("diagonal entry {i} is {}", row[i])));
        }
        for (j, &x) in row.iter().enumerate() {
            if !x.is_finite() || x < 0.0 {
                return Err(Error::InvalidMatrix(format!(
                    "entry ({i}, {j}) = {x} is not a finite non-negative value"
                )));
            }
            if x != d[j][i] {
                return Err(Error::InvalidMatrix(format!(
                    "entry ({i}, {j}) differs from ({j}, {i})"
                )));
            }
        }
    }
    Ok(())
}

/// Nearest active partner `k > row` of `row`, first index on ties.
fn nearest(dist: &[Vec<f64>], active: &[bool], row: usize) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for k in (row + 1)..dist.len() {
        if active[k] && best.is_none_or(|(_, b)| dist[row][k] < b) {
            best = Some((k, dist[row][k]));
        }
    }
    best
}

/// Clusters `d` with WPGMA linkage. `labels` names the leaves.
pub fn wpgma(d: &[Vec<f64>], labels: Vec<String>) -> Result<Dendrogram> {
    validate(d)?;
    let n = d.len();
    if labels.len() != n {
        return Err(Error::LengthMismatch {
            left: labels.len(),
            right: n,
        });
    }
    let mut dist: Vec<Vec<f64>> = d.to_vec();
    let mut active = vec![true; n];
    let mut ids: Vec<usize> = (0..n).collect();
    let mut sizes = vec![1usize; n];
    let mut nn: Vec<Option<(usize, f64)>> = (0..n).map(|r| nearest(&dist, &active, r)).collect();
    let mut merges = Vec::with_capacity(n - 1);
    let mut inversions = Vec::new();

    for step in 0..n - 1 {
        let mut pick: Option<(usize, usize, f64)> = None;
        for r in (0..n).filter(|&r| active[r]) {
            if let Some((k, h)) = nn[r] {
                if pick.is_none_or(|(_, _, best)| h < best) {
                    pick = Some((r, k, h));
                }
            }
        }
        let (i, j, height) = pick.expect("at least two active clusters remain");

        if merges.last().is_some_and(|m: &Merge| height < m.height) {
            inversions.push(step);
        }
        merges.push(Merge {
            left: ids[i],
            right: ids[j],
            height,
            size: sizes[i] + sizes[j],
        });
        active[j] = false;
        ids[i] = n + step;
        sizes[i] += sizes[j];

        for k in (0..n).filter(|&k| active[k] && k != i) {
            let updated = (dist[i][k] + dist[j][k]) / 2.0;
            dist[i][k] = updated;
            dist[k][i] = updated;
        }

        nn[j] = None;
        nn[i] = nearest(&dist, &active, i);
        for r in (0..n).filter(|&r| active[r] && r != i) {
            match nn[r] {
                Some((k, _)) if k == i || k == j => nn[r] = nearest(&dist, &active, r),
                Some((k, h)) if r < i => {
                    let to_i = dist[r][i];
                    if to_i < h || (to_i == h && i < k) {
                        nn[r] = Some((i, to_i));
                    }
                }
                _ => {}
            }
        }
    }

    Ok(Dendrogram {
        leaves: labels,
        merges,
        inversions,
    })
}

/// Removes the `k - 1` highest merges and returns the leaf groups, each
/// sorted, ordered by their smallest leaf.
pub fn cut(tree: &Dendrogram, k: usize) -> Result<Vec<Vec<usize>>> {
    let n = tree.len();
    if k == 0 || k > n {
        return Err(Error::InvalidParameter(format!("cluster count {k} not in 1..={n}")));
    }
    let mut parent: Vec<usize> = (0..n + tree.merges.len()).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for (step, m) in tree.merges.iter().take(n - k).enumerate() {
        let id = n + step;
        let (a, b) = (find(&mut parent, m.left), find(&mut parent, m.right));
        parent[a] = id;
        parent[b] = id;
    }
    let mut groups: Vec<(usize, Vec<usize>)> = Vec::new();
    for leaf in 0..n {
        let root = find(&mut parent, leaf);
        match groups.iter_mut().find(|(r, _)| *r == root) {
            Some((_, members)) => members.push(leaf),
            None => groups.push((root, vec![leaf])),
        }
    }
    Ok(groups.into_iter().map(|(_, g)| g).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    fn labels(n: usize) -> Vec<String> {
        (0..n).map(|i| i.to_string()).collect()
    }

    fn hand_example() -> Vec<Vec<f64>> {
        vec![vec![0.0, 0.2, 0.9], vec![0.2, 0.0, 0.7], vec![0.9, 0.7, 0.0]]
    }

    #[test]
    fn two_leaves() {
        let t = wpgma(&[vec![0.0, 0.3], vec![0.3, 0.0]], labels(2)).unwrap();
        assert_eq!(
            t.merges,
            [Merge {
                left: 0,
                right: 1,
                height: 0.3,
                size: 2
            }]
        );
    }

    #[test]
    fn three_leaf_hand_example() {
        let t = wpgma(&hand_example(), labels(3)).unwrap();
        assert_eq!(
            t.merges[0],
            Merge {
                left: 0,
                right: 1,
                height: 0.2,
                size: 2
            }
        );
        assert_eq!(
            t.merges[1],
            Merge {
                left: 3,
                right: 2,
                height: 0.8,
                size: 3
            }
        );
        assert_eq!(t.leaf_order(), [0, 1, 2]);
        assert!(t.inversions.is_empty());
    }

    #[test]
    fn equal_distances_follow_index_order() {
        let n = 4;
        let d: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| if i == j { 0.0 } else { 1.0 }).collect())
            .collect();
        let t = wpgma(&d, labels(n)).unwrap();
        let pairs: Vec<(usize, usize)> = t.merges.iter().map(|m| (m.left, m.right)).collect();
        assert_eq!(pairs, [(0, 1), (4, 2), (5, 3)]);
    }

    #[test]
    fn rejects_bad_matrices() {
        assert!(wpgma(&[vec![0.0, 0.3], vec![0.4, 0.0]], labels(2)).is_err());
        assert!(wpgma(&[vec![0.0, -0.3], vec![-0.3, 0.0]], labels(2)).is_err());
        assert!(wpgma(&[vec![0.0]], labels(1)).is_err());
        assert!(wpgma(&[vec![0.1, 0.3], vec![0.3, 0.0]], labels(2)).is_err());
        assert!(wpgma(&hand_example(), labels(2)).is_err());
    }

    #[test]
    fn cut_levels() {
        let t = wpgma(&hand_example(), labels(3)).unwrap();
        assert_eq!(cut(&t, 1).unwrap(), [vec![0, 1, 2]]);
        assert_eq!(cut(&t, 2).unwrap(), [vec![0, 1], vec![2]]);
        assert_eq!(cut(&t, 3).unwrap(), [vec![0], vec![1], vec![2]]);
        assert!(cut(&t, 0).is_err());
        assert!(cut(&t, 4).is_err());
    }
}
