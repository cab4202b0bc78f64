//! λ-gradients for AUC, multi-class AUC and NDCG.
//!
//! For each pair of documents with different labels the λ contribution is
//! `|ΔM · ρ|`, where ΔM is the exact metric change from swapping the two rank
//! positions and ρ is the RankNet logistic factor. One document of the pair
//! receives `+λ` and the other `−λ`; see [`PairOrientation`]. For AUC and
//! NDCG both orientations push the higher-labelled document up. For MAUC
//! they differ: prevalence weighting can make a lower label the one whose
//! promotion raises the metric.
//!
//! ΔAUC for a swap of ranks `i < j` is `(ℓ_j − ℓ_i)(j − i) / (m·n)`: only
//! the two endpoints' labels and the class counts matter, so every delta here
//! is constant time.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Geometric};

use crate::data::{ClassProportions, MAX_LABEL};
use crate::error::{Error, Result};
use crate::metrics::{discount, gain, ideal_dcg_at_k};
use crate::rank::rank;

/// Metric driving the swap deltas.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MetricKind {
    Auc,
    Mauc,
    Ndcg(usize),
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MetricKind::Auc => f.write_str("auc"),
            MetricKind::Mauc => f.write_str("mauc"),
            MetricKind::Ndcg(k) => write!(f, "ndcg@{k}"),
        }
    }
}

impl FromStr for MetricKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "auc" => Ok(MetricKind::Auc),
            "mauc" => Ok(MetricKind::Mauc),
            other => {
                let k = other
                    .strip_prefix("ndcg@")
                    .and_then(|k| k.parse::<usize>().ok())
                    .filter(|&k| k > 0)
                    .ok_or_else(|| Error::InvalidArgument(format!("unknown metric {s:?}")))?;
                Ok(MetricKind::Ndcg(k))
            }
        }
    }
}

fn check_pair(i: usize, j: usize, len: usize) -> Result<()> {
    if i == 0 || j == 0 || i > len || j > len || i == j {
        return Err(Error::RankOutOfRange { i, j, len });
    }
    Ok(())
}

#[inline]
fn auc_swap(pos_i: bool, pos_j: bool, i: usize, j: usize, m: usize, n: usize) -> f64 {
    let dl = pos_j as i64 - pos_i as i64;
    let span = j as i64 - i as i64;
    (dl * span) as f64 / (m as f64 * n as f64)
}

/// Exact AUC change from swapping 1-based ranks `i` and `j` of a ranked
/// binary list with `m` positives and `n` negatives.
pub fn delta_auc(ranked: &[bool], i: usize, j: usize, m: usize, n: usize) -> Result<f64> {
    check_pair(i, j, ranked.len())?;
    if m == 0 || n == 0 {
        return Err(Error::UndefinedMetric(format!(
            "AUC needs both classes (m = {m}, n = {n})"
        )));
    }
    Ok(auc_swap(ranked[i - 1], ranked[j - 1], i, j, m, n))
}

/// Per-query class counts plus dataset-level prevalence, indexed by label.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassStats {
    counts: Vec<usize>,
    prevalence: Vec<f64>,
    len: usize,
}

impl ClassStats {
    pub fn new(labels: &[u32], p: &ClassProportions) -> Self {
        let width = (MAX_LABEL + 1) as usize;
        let mut counts = vec![0; width];
        for &l in labels {
            counts[l as usize] += 1;
        }
        let mut prevalence = vec![0.0; width];
        for (c, pc) in p.iter() {
            if let Some(slot) = prevalence.get_mut(c as usize) {
                *slot = pc;
            }
        }
        ClassStats {
            counts,
            prevalence,
            len: labels.len(),
        }
    }

    /// True when some class with non-zero prevalence has both members and
    /// non-members in the query.
    pub fn is_defined(&self) -> bool {
        (0..self.counts.len()).any(|c| self.class_defined(c))
    }

    fn class_defined(&self, c: usize) -> bool {
        self.prevalence[c] > 0.0 && self.counts[c] > 0 && self.counts[c] < self.len
    }

    fn term(&self, class: u32, li: u32, lj: u32, i: usize, j: usize) -> f64 {
        let c = class as usize;
        if !self.class_defined(c) {
            return 0.0;
        }
        let m = self.counts[c];
        self.prevalence[c] * auc_swap(li == class, lj == class, i, j, m, self.len - m)
    }
}

/// Prevalence-weighted sum of the class-reference AUC deltas. Only the two
/// endpoint classes can change, so this is constant time.
pub fn delta_mauc(ranked: &[u32], i: usize, j: usize, stats: &ClassStats) -> Result<f64> {
    check_pair(i, j, ranked.len())?;
    Ok(mauc_delta_unchecked(ranked, i, j, stats))
}

#[inline]
fn mauc_delta_unchecked(ranked: &[u32], i: usize, j: usize, stats: &ClassStats) -> f64 {
    let (li, lj) = (ranked[i - 1], ranked[j - 1]);
    if li == lj {
        return 0.0;
    }
    stats.term(li, li, lj, i, j) + stats.term(lj, li, lj, i, j)
}

/// Exact NDCG@k change from swapping ranks `i` and `j`.
pub fn delta_ndcg(ranked: &[u32], i: usize, j: usize, k: usize, ideal_dcg: f64) -> Result<f64> {
    check_pair(i, j, ranked.len())?;
    if ideal_dcg <= 0.0 {
        return Err(Error::UndefinedMetric("NDCG with zero ideal DCG".into()));
    }
    Ok(ndcg_delta_unchecked(ranked, i, j, k, ideal_dcg))
}

#[inline]
fn ndcg_delta_unchecked(ranked: &[u32], i: usize, j: usize, k: usize, ideal: f64) -> f64 {
    let (li, lj) = (ranked[i - 1], ranked[j - 1]);
    if li == lj {
        return 0.0;
    }
    (gain(li) - gain(lj)) * (discount(j, k) - discount(i, k)) / ideal
}

/// RankNet factor `1 / (1 + e^(s_i − s_j))` for a pair where `i` should be
/// ranked above `j`. Near 1 when the pair is badly mis-ordered, near 0 when
/// it is ordered with a wide margin.
#[inline]
pub fn ranknet_rho(s_i: f64, s_j: f64) -> f64 {
    1.0 / (1.0 + (s_i - s_j).exp())
}

/// A metric together with the dataset-level prevalence used by MAUC.
#[derive(Debug, Clone, PartialEq)]
pub struct SwapDeltaMetric {
    pub kind: MetricKind,
    pub proportions: ClassProportions,
}

impl SwapDeltaMetric {
    pub fn new(kind: MetricKind, proportions: ClassProportions) -> Self {
        SwapDeltaMetric { kind, proportions }
    }

    /// Per-query state; `None` when the metric is undefined on the query.
    pub fn prepare(&self, labels: &[u32]) -> Option<PreparedDelta> {
        match self.kind {
            MetricKind::Auc => {
                let m = labels.iter().filter(|&&l| l > 0).count();
                let n = labels.len() - m;
                (m > 0 && n > 0).then_some(PreparedDelta::Auc { m, n })
            }
            MetricKind::Mauc => {
                let stats = ClassStats::new(labels, &self.proportions);
                stats.is_defined().then_some(PreparedDelta::Mauc(stats))
            }
            MetricKind::Ndcg(k) => {
                let ideal = ideal_dcg_at_k(labels, k);
                (ideal > 0.0).then_some(PreparedDelta::Ndcg { k, ideal })
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PreparedDelta {
    Auc { m: usize, n: usize },
    Mauc(ClassStats),
    Ndcg { k: usize, ideal: f64 },
}

impl PreparedDelta {
    /// ΔM for swapping 1-based ranks `i < j` of `ranked`. Bounds are the
    /// caller's responsibility.
    #[inline]
    pub fn delta(&self, ranked: &[u32], i: usize, j: usize) -> f64 {
        match self {
            PreparedDelta::Auc { m, n } => {
                auc_swap(ranked[i - 1] > 0, ranked[j - 1] > 0, i, j, *m, *n)
            }
            PreparedDelta::Mauc(stats) => mauc_delta_unchecked(ranked, i, j, stats),
            PreparedDelta::Ndcg { k, ideal } => ndcg_delta_unchecked(ranked, i, j, *k, *ideal),
        }
    }
}

/// Per-document λ and second-order weight accumulators for one query.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LambdaBuffer {
    pub lambda: Vec<f64>,
    pub weight: Vec<f64>,
}

impl LambdaBuffer {
    pub fn zeros(len: usize) -> Self {
        LambdaBuffer {
            lambda: vec![0.0; len],
            weight: vec![0.0; len],
        }
    }

    pub fn is_zero(&self) -> bool {
        self.lambda.iter().chain(&self.weight).all(|&v| v == 0.0)
    }
}

/// Which document of a conflicting pair receives `+λ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PairOrientation {
    /// The document whose promotion increases the metric: the one at the
    /// lower rank when the swap delta is positive, otherwise the upper one.
    #[default]
    Metric,
    /// Always the higher-labelled document.
    Label,
}

impl fmt::Display for PairOrientation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PairOrientation::Metric => "metric",
            PairOrientation::Label => "label",
        })
    }
}

impl FromStr for PairOrientation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "metric" => Ok(PairOrientation::Metric),
            "label" => Ok(PairOrientation::Label),
            _ => Err(Error::InvalidArgument(format!(
                "unknown pair orientation {s:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LambdaOptions {
    /// Queries with more conflicting pairs than this are subsampled.
    pub pair_budget: u64,
    pub seed: u64,
    pub orientation: PairOrientation,
}

impl Default for LambdaOptions {
    fn default() -> Self {
        LambdaOptions {
            pair_budget: 10_000_000,
            seed: 42,
            orientation: PairOrientation::Metric,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LambdaOutcome {
    pub buffer: LambdaBuffer,
    /// False when the metric is undefined on the query; the buffer is zero.
    pub defined: bool,
    /// Pairs with differing labels in the query.
    pub conflicting_pairs: u64,
    /// Pairs actually evaluated (below `conflicting_pairs` when subsampled).
    pub pairs_visited: u64,
}

/// Ranks grouped by label. Only pairs across groups have differing labels.
fn label_groups(ranked: &[u32]) -> Vec<Vec<usize>> {
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut slot = [usize::MAX; (MAX_LABEL + 1) as usize];
    for (r, &l) in ranked.iter().enumerate() {
        let s = &mut slot[l as usize];
        if *s == usize::MAX {
            *s = groups.len();
            groups.push(Vec::new());
        }
        groups[*s].push(r + 1);
    }
    groups
}

/// Accumulates λ and w for one query. `stream` decorrelates the subsampling
/// generator across queries and iterations.
pub fn accumulate_lambdas(
    labels: &[u32],
    scores: &[f64],
    metric: &SwapDeltaMetric,
    options: &LambdaOptions,
    stream: u64,
) -> Result<LambdaOutcome> {
    if labels.len() != scores.len() {
        return Err(Error::LengthMismatch {
            left: scores.len(),
            right: labels.len(),
        });
    }
    let mut buffer = LambdaBuffer::zeros(labels.len());
    let undefined = |buffer| LambdaOutcome {
        buffer,
        defined: false,
        conflicting_pairs: 0,
        pairs_visited: 0,
    };
    if labels.is_empty() {
        return Ok(undefined(buffer));
    }
    let Some(prepared) = metric.prepare(labels) else {
        return Ok(undefined(buffer));
    };

    let ranking = rank(scores)?;
    let ranked = ranking.permute(labels);
    let groups = label_groups(&ranked);

    let mut blocks = Vec::new();
    let mut total = 0u64;
    for a in 0..groups.len() {
        for b in a + 1..groups.len() {
            let size = (groups[a].len() * groups[b].len()) as u64;
            blocks.push((a, b, total));
            total += size;
        }
    }

    let mut visit = |ri: usize, rj: usize, scale: f64| {
        let (i, j) = if ri < rj { (ri, rj) } else { (rj, ri) };
        let signed = prepared.delta(&ranked, i, j);
        if signed == 0.0 {
            return;
        }
        let delta = signed.abs();
        let (di, dj) = (ranking.order[i - 1], ranking.order[j - 1]);
        let promote_lower = match options.orientation {
            PairOrientation::Metric => signed > 0.0,
            PairOrientation::Label => labels[dj] > labels[di],
        };
        let (up, down) = if promote_lower { (dj, di) } else { (di, dj) };
        let rho = ranknet_rho(scores[up], scores[down]);
        let lam = scale * delta * rho;
        let w = scale * delta * rho * (1.0 - rho);
        buffer.lambda[up] += lam;
        buffer.lambda[down] -= lam;
        buffer.weight[up] += w;
        buffer.weight[down] += w;
    };

    let visited = if total <= options.pair_budget {
        for &(a, b, _) in &blocks {
            for &ri in &groups[a] {
                for &rj in &groups[b] {
                    visit(ri, rj, 1.0);
                }
            }
        }
        total
    } else {
        // Bernoulli(q) thinning via geometric gaps; each kept pair is scaled
        // by 1/q so the expected λ matches the full sum.
        let q = options.pair_budget as f64 / total as f64;
        let mut rng =
            ChaCha8Rng::seed_from_u64(options.seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let gap = Geometric::new(q).map_err(|e| Error::InvalidArgument(e.to_string()))?;
        let mut next = gap.sample(&mut rng);
        let mut visited = 0u64;
        let mut block = 0usize;
        while next < total {
            while block + 1 < blocks.len() && blocks[block + 1].2 <= next {
                block += 1;
            }
            let (a, b, start) = blocks[block];
            let offset = (next - start) as usize;
            let width = groups[b].len();
            visit(
                groups[a][offset / width],
                groups[b][offset % width],
                1.0 / q,
            );
            visited += 1;
            next = next.saturating_add(1 + gap.sample(&mut rng));
        }
        visited
    };

    Ok(LambdaOutcome {
        buffer,
        defined: true,
        conflicting_pairs: total,
        pairs_visited: visited,
    })
}
