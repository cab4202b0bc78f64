//! Regression trees fitted to λ targets.
//!
//! Leaves are expanded best-first by squared-error reduction. Candidate
//! thresholds are midpoints between consecutive distinct feature values,
//! thinned to at most [`MAX_THRESHOLDS`] per feature by count quantiles and
//! computed once per training set.

use rayon::prelude::*;

use crate::data::Dataset;

pub const MAX_THRESHOLDS: usize = 256;

/// Added to the Newton denominator so zero-weight leaves stay finite.
pub const LEAF_EPSILON: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub enum TreeNode {
    /// `feature ≤ threshold` goes left.
    Split {
        feature: usize,
        threshold: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
    Leaf {
        value: f64,
    },
}

impl TreeNode {
    pub fn leaf(value: f64) -> Self {
        TreeNode::Leaf { value }
    }

    /// Missing features read as 0.0.
    pub fn evaluate(&self, features: &[f64]) -> f64 {
        let mut node = self;
        loop {
            match node {
                TreeNode::Leaf { value } => return *value,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    let x = features.get(*feature).copied().unwrap_or(0.0);
                    node = if x <= *threshold { left } else { right };
                }
            }
        }
    }

    pub fn num_leaves(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 1,
            TreeNode::Split { left, right, .. } => left.num_leaves() + right.num_leaves(),
        }
    }

    pub fn num_nodes(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 1,
            TreeNode::Split { left, right, .. } => 1 + left.num_nodes() + right.num_nodes(),
        }
    }

    /// Largest feature index referenced, if any split exists.
    pub fn max_feature(&self) -> Option<usize> {
        match self {
            TreeNode::Leaf { .. } => None,
            TreeNode::Split {
                feature,
                left,
                right,
                ..
            } => [Some(*feature), left.max_feature(), right.max_feature()]
                .into_iter()
                .flatten()
                .max(),
        }
    }
}

/// Row-major dense feature matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    values: Vec<f64>,
    num_rows: usize,
    num_features: usize,
}

impl FeatureMatrix {
    pub fn from_rows(rows: &[Vec<f64>], num_features: usize) -> Self {
        let mut values = Vec::with_capacity(rows.len() * num_features);
        for row in rows {
            values.extend((0..num_features).map(|f| row.get(f).copied().unwrap_or(0.0)));
        }
        FeatureMatrix {
            values,
            num_rows: rows.len(),
            num_features,
        }
    }

    /// Documents in dataset order.
    pub fn from_dataset(dataset: &Dataset) -> Self {
        let nf = dataset.num_features;
        let mut values = Vec::with_capacity(dataset.num_documents() * nf);
        for doc in dataset.documents() {
            values.extend((0..nf).map(|f| doc.feature(f)));
        }
        FeatureMatrix {
            values,
            num_rows: dataset.num_documents(),
            num_features: nf,
        }
    }

    pub fn num_rows(&self) -> usize {
        self.num_rows
    }

    pub fn num_features(&self) -> usize {
        self.num_features
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.values[r * self.num_features..(r + 1) * self.num_features]
    }

    pub fn get(&self, r: usize, f: usize) -> f64 {
        self.values[r * self.num_features + f]
    }
}

/// Midpoint strictly below `hi`, so `lo` routes left and `hi` right.
fn midpoint(lo: f64, hi: f64) -> f64 {
    let mid = lo + (hi - lo) / 2.0;
    if mid >= hi || !mid.is_finite() {
        lo
    } else {
        mid
    }
}

fn feature_thresholds(mut column: Vec<f64>, cap: usize) -> Vec<f64> {
    column.sort_by(|a, b| a.total_cmp(b));
    let n = column.len();
    let mut distinct = column.clone();
    distinct.dedup();
    if distinct.len() <= 1 {
        return Vec::new();
    }
    if distinct.len() - 1 <= cap {
        return distinct.windows(2).map(|w| midpoint(w[0], w[1])).collect();
    }
    let mut out = Vec::with_capacity(cap);
    for q in 1..=cap {
        let v = column[q * n / (cap + 1)];
        let next = distinct.partition_point(|&d| d <= v);
        if next < distinct.len() {
            let t = midpoint(v, distinct[next]);
            if out.last().is_none_or(|&last| t > last) {
                out.push(t);
            }
        }
    }
    out
}

/// Candidate thresholds per feature and each row's bin index: row `r` goes
/// left of threshold `k` of feature `f` iff `bin(f, r) <= k`.
#[derive(Debug, Clone)]
pub struct SplitCandidates {
    thresholds: Vec<Vec<f64>>,
    bins: Vec<u16>,
    num_rows: usize,
}

impl SplitCandidates {
    pub fn new(matrix: &FeatureMatrix) -> Self {
        Self::with_cap(matrix, MAX_THRESHOLDS)
    }

    pub fn with_cap(matrix: &FeatureMatrix, cap: usize) -> Self {
        let cap = cap.clamp(1, u16::MAX as usize - 1);
        let rows = matrix.num_rows();
        let per_feature: Vec<(Vec<f64>, Vec<u16>)> = (0..matrix.num_features())
            .into_par_iter()
            .map(|f| {
                let column: Vec<f64> = (0..rows).map(|r| matrix.get(r, f)).collect();
                let thresholds = feature_thresholds(column.clone(), cap);
                let bins = column
                    .iter()
                    .map(|&x| thresholds.partition_point(|&t| t < x) as u16)
                    .collect();
                (thresholds, bins)
            })
            .collect();
        let mut thresholds = Vec::with_capacity(per_feature.len());
        let mut bins = Vec::with_capacity(rows * per_feature.len());
        for (t, b) in per_feature {
            thresholds.push(t);
            bins.extend(b);
        }
        SplitCandidates {
            thresholds,
            bins,
            num_rows: rows,
        }
    }

    pub fn thresholds(&self, feature: usize) -> &[f64] {
        &self.thresholds[feature]
    }

    fn bin(&self, feature: usize, row: usize) -> usize {
        self.bins[feature * self.num_rows + row] as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TreeParams {
    pub max_leaves: usize,
    pub min_docs_per_leaf: usize,
}

#[derive(Debug, Clone, Copy)]
struct Split {
    feature: usize,
    threshold_index: usize,
    gain: f64,
}

struct Leaf {
    rows: Vec<usize>,
    best: Option<Split>,
}

enum Slot {
    Leaf(usize),
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

fn best_split(
    rows: &[usize],
    targets: &[f64],
    candidates: &SplitCandidates,
    min_docs: usize,
) -> Option<Split> {
    let n = rows.len();
    if n < 2 * min_docs.max(1) {
        return None;
    }
    let total: f64 = rows.iter().map(|&r| targets[r]).sum();
    let sum_sq: f64 = rows.iter().map(|&r| targets[r] * targets[r]).sum();
    let parent = total * total / n as f64;

    let per_feature: Vec<Option<Split>> = (0..candidates.thresholds.len())
        .into_par_iter()
        .map(|f| {
            let nt = candidates.thresholds(f).len();
            if nt == 0 {
                return None;
            }
            let mut sums = vec![0.0; nt + 1];
            let mut counts = vec![0usize; nt + 1];
            for &r in rows {
                let b = candidates.bin(f, r);
                sums[b] += targets[r];
                counts[b] += 1;
            }
            let mut best: Option<Split> = None;
            let (mut sl, mut nl) = (0.0, 0usize);
            for k in 0..nt {
                sl += sums[k];
                nl += counts[k];
                let nr = n - nl;
                if nl < min_docs.max(1) || nr < min_docs.max(1) {
                    continue;
                }
                let sr = total - sl;
                let gain = sl * sl / nl as f64 + sr * sr / nr as f64 - parent;
                if best.is_none_or(|b| gain > b.gain) {
                    best = Some(Split {
                        feature: f,
                        threshold_index: k,
                        gain,
                    });
                }
            }
            best
        })
        .collect();

    let mut best: Option<Split> = None;
    for s in per_feature.into_iter().flatten() {
        if best.is_none_or(|b| s.gain > b.gain) {
            best = Some(s);
        }
    }
    // Rounding noise on constant targets must not produce splits.
    best.filter(|s| s.gain > 0.0 && s.gain > 1e-12 * sum_sq)
}

/// Fits one tree to `targets` (λ) with Newton leaf values Σλ / (Σw + ε).
/// `rows` selects the training rows of the matrix.
pub fn fit_tree(
    candidates: &SplitCandidates,
    rows: &[usize],
    targets: &[f64],
    weights: &[f64],
    params: &TreeParams,
) -> TreeNode {
    let max_leaves = params.max_leaves.max(1);
    let mut leaves = vec![Leaf {
        rows: rows.to_vec(),
        best: best_split(rows, targets, candidates, params.min_docs_per_leaf),
    }];
    let mut slots = vec![Slot::Leaf(0)];
    // slot index of each open leaf
    let mut leaf_slot = vec![0usize];
    let mut open = 1;

    while open < max_leaves {
        let mut pick: Option<(usize, f64)> = None;
        for (id, leaf) in leaves.iter().enumerate() {
            if let Some(s) = leaf.best {
                if pick.is_none_or(|(_, g)| s.gain > g) {
                    pick = Some((id, s.gain));
                }
            }
        }
        let Some((id, _)) = pick else { break };
        let split = leaves[id].best.take().unwrap();
        let rows = std::mem::take(&mut leaves[id].rows);
        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = rows
            .into_iter()
            .partition(|&r| candidates.bin(split.feature, r) <= split.threshold_index);

        let left_id = leaves.len();
        let right_id = left_id + 1;
        for part in [left_rows, right_rows] {
            let best = best_split(&part, targets, candidates, params.min_docs_per_leaf);
            leaves.push(Leaf { rows: part, best });
        }
        let left_slot = slots.len();
        slots.push(Slot::Leaf(left_id));
        slots.push(Slot::Leaf(right_id));
        leaf_slot.push(left_slot);
        leaf_slot.push(left_slot + 1);
        slots[leaf_slot[id]] = Slot::Split {
            feature: split.feature,
            threshold: candidates.thresholds(split.feature)[split.threshold_index],
            left: left_slot,
            right: left_slot + 1,
        };
        open += 1;
    }

    fn build(
        slot: usize,
        slots: &[Slot],
        leaves: &[Leaf],
        targets: &[f64],
        weights: &[f64],
    ) -> TreeNode {
        match &slots[slot] {
            Slot::Leaf(id) => {
                let rows = &leaves[*id].rows;
                let num: f64 = rows.iter().map(|&r| targets[r]).sum();
                let den: f64 = rows.iter().map(|&r| weights[r]).sum();
                TreeNode::leaf(num / (den + LEAF_EPSILON))
            }
            Slot::Split {
                feature,
                threshold,
                left,
                right,
            } => TreeNode::Split {
                feature: *feature,
                threshold: *threshold,
                left: Box::new(build(*left, slots, leaves, targets, weights)),
                right: Box::new(build(*right, slots, leaves, targets, weights)),
            },
        }
    }
    build(0, &slots, &leaves, targets, weights)
}
