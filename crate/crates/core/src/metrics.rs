//! Ranking evaluation metrics.
//!
//! Everything here is evaluated per query and then averaged over the queries
//! where the metric is defined. A query on which a metric is undefined (for
//! example AUC with no negatives) is reported as skipped and left out of the
//! mean rather than counted as zero.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::io::Write;

use crate::data::{ClassProportions, Dataset};
use crate::error::{Error, Result};
use crate::rank::ranked_labels;

/// One-vs-rest contingency table for a ranking cutoff.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ContingencyTable {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    pub tn: u64,
}

impl ContingencyTable {
    /// Table for `class` when the top `cutoff` documents are predicted positive.
    pub fn at_cutoff(ranked_labels: &[u32], cutoff: usize, class: u32) -> Self {
        let cutoff = cutoff.min(ranked_labels.len());
        let (head, tail) = ranked_labels.split_at(cutoff);
        let tp = head.iter().filter(|&&l| l == class).count() as u64;
        let fn_ = tail.iter().filter(|&&l| l == class).count() as u64;
        ContingencyTable {
            tp,
            fp: head.len() as u64 - tp,
            fn_,
            tn: tail.len() as u64 - fn_,
        }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }

    pub fn predicted_positive(&self) -> u64 {
        self.tp + self.fp
    }

    pub fn precision(&self) -> Option<f64> {
        let pp = self.predicted_positive();
        (pp > 0).then(|| self.tp as f64 / pp as f64)
    }
}

/// Number of (positive above negative) pairs in a ranked binary list.
pub fn correct_pairs(ranked: &[bool]) -> u64 {
    let mut positives_seen = 0u64;
    let mut correct = 0u64;
    for &is_pos in ranked {
        if is_pos {
            positives_seen += 1;
        } else {
            correct += positives_seen;
        }
    }
    correct
}

fn check_lengths(scores: usize, labels: usize) -> Result<()> {
    if scores != labels {
        return Err(Error::LengthMismatch {
            left: scores,
            right: labels,
        });
    }
    Ok(())
}

/// Mann-Whitney AUC. Cross-class pairs with equal scores earn half credit.
/// `None` when either class is empty.
pub fn auc_binary(scores: &[f64], labels: &[bool]) -> Result<Option<f64>> {
    check_lengths(scores.len(), labels.len())?;
    if let Some(pos) = scores.iter().position(|s| s.is_nan()) {
        return Err(Error::NanScore(pos));
    }
    let m = labels.iter().filter(|&&l| l).count() as u64;
    let n = labels.len() as u64 - m;
    if m == 0 || n == 0 {
        return Ok(None);
    }

    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).unwrap());

    // Walk groups of tied scores from the bottom up.
    let mut negatives_below = 0u64;
    let mut correct = 0u64;
    let mut tied = 0u64;
    let mut start = 0;
    while start < idx.len() {
        let score = scores[idx[start]];
        let mut end = start;
        let (mut pos, mut neg) = (0u64, 0u64);
        while end < idx.len() && scores[idx[end]] == score {
            if labels[idx[end]] {
                pos += 1;
            } else {
                neg += 1;
            }
            end += 1;
        }
        correct += pos * negatives_below;
        tied += pos * neg;
        negatives_below += neg;
        start = end;
    }
    Ok(Some((correct as f64 + 0.5 * tied as f64) / (m * n) as f64))
}

/// AUC with `class` as the positive label and every other label negative.
pub fn class_reference_auc(scores: &[f64], labels: &[u32], class: u32) -> Result<Option<f64>> {
    let binary: Vec<bool> = labels.iter().map(|&l| l == class).collect();
    auc_binary(scores, &binary)
}

/// Prevalence-weighted class-reference AUC of one query. Only classes that
/// are defined in the query contribute and the weights are renormalised over
/// them. `None` when no class is defined.
pub fn mauc_query(scores: &[f64], labels: &[u32], p: &ClassProportions) -> Result<Option<f64>> {
    check_lengths(scores.len(), labels.len())?;
    let mut weighted = 0.0;
    let mut weight = 0.0;
    for (class, pc) in p.iter() {
        if pc <= 0.0 {
            continue;
        }
        if let Some(auc) = class_reference_auc(scores, labels, class)? {
            weighted += pc * auc;
            weight += pc;
        }
    }
    Ok((weight > 0.0).then(|| weighted / weight))
}

/// Precision over the top-k, pooled over the positive classes.
pub fn precision_micro_at_k_query(ranked: &[u32], k: usize, positives: &BTreeSet<u32>) -> f64 {
    let (tp, pp) = positives
        .iter()
        .map(|&c| ContingencyTable::at_cutoff(ranked, k, c))
        .fold((0u64, 0u64), |(tp, pp), t| {
            (tp + t.tp, pp + t.predicted_positive())
        });
    if pp == 0 {
        0.0
    } else {
        tp as f64 / pp as f64
    }
}

/// Unweighted mean over positive classes of per-class precision at k.
pub fn precision_macro_at_k_query(ranked: &[u32], k: usize, positives: &BTreeSet<u32>) -> f64 {
    if positives.is_empty() {
        return 0.0;
    }
    let sum: f64 = positives
        .iter()
        .map(|&c| {
            ContingencyTable::at_cutoff(ranked, k, c)
                .precision()
                .unwrap_or(0.0)
        })
        .sum();
    sum / positives.len() as f64
}

/// Average precision of a ranked relevance list (relevant = label > 0).
pub fn average_precision(ranked: &[u32]) -> Option<f64> {
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (r, &l) in ranked.iter().enumerate() {
        if l > 0 {
            hits += 1;
            sum += hits as f64 / (r + 1) as f64;
        }
    }
    (hits > 0).then(|| sum / hits as f64)
}

#[inline]
pub fn gain(label: u32) -> f64 {
    2f64.powi(label as i32) - 1.0
}

/// Discount of a 1-based rank under cutoff `k`; zero past the cutoff.
#[inline]
pub fn discount(rank: usize, k: usize) -> f64 {
    if rank == 0 || rank > k {
        0.0
    } else {
        1.0 / ((1 + rank) as f64).log2()
    }
}

pub fn dcg_at_k(ranked: &[u32], k: usize) -> f64 {
    ranked
        .iter()
        .take(k)
        .enumerate()
        .map(|(r, &l)| gain(l) * discount(r + 1, k))
        .sum()
}

pub fn ideal_dcg_at_k(labels: &[u32], k: usize) -> f64 {
    let mut sorted = labels.to_vec();
    sorted.sort_unstable_by(|a, b| b.cmp(a));
    dcg_at_k(&sorted, k)
}

pub fn ndcg_at_k_query(ranked: &[u32], k: usize) -> Option<f64> {
    let ideal = ideal_dcg_at_k(ranked, k);
    (ideal > 0.0).then(|| dcg_at_k(ranked, k) / ideal)
}

/// Scores and labels of one query, aligned by document.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredQuery {
    pub query_id: String,
    pub scores: Vec<f64>,
    pub labels: Vec<u32>,
}

impl ScoredQuery {
    pub fn ranked_labels(&self) -> Result<Vec<u32>> {
        ranked_labels(&self.scores, &self.labels)
    }
}

/// Splits a flat score vector (dataset document order) into queries.
pub fn scored_queries(dataset: &Dataset, scores: &[f64]) -> Result<Vec<ScoredQuery>> {
    check_lengths(scores.len(), dataset.num_documents())?;
    let mut offset = 0;
    Ok(dataset
        .queries
        .iter()
        .map(|q| {
            let sq = ScoredQuery {
                query_id: q.query_id.clone(),
                scores: scores[offset..offset + q.len()].to_vec(),
                labels: q.labels(),
            };
            offset += q.len();
            sq
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub name: String,
    /// `None` marks a skipped query.
    pub per_query: Vec<(String, Option<f64>)>,
    /// Mean over non-skipped queries; `None` when every query was skipped.
    pub aggregate: Option<f64>,
}

impl MetricReport {
    pub fn new(name: impl Into<String>, per_query: Vec<(String, Option<f64>)>) -> Self {
        let defined: Vec<f64> = per_query.iter().filter_map(|(_, v)| *v).collect();
        let aggregate =
            (!defined.is_empty()).then(|| defined.iter().sum::<f64>() / defined.len() as f64);
        MetricReport {
            name: name.into(),
            per_query,
            aggregate,
        }
    }

    pub fn skipped(&self) -> usize {
        self.per_query.iter().filter(|(_, v)| v.is_none()).count()
    }
}

fn per_query<F>(queries: &[ScoredQuery], mut f: F) -> Result<Vec<(String, Option<f64>)>>
where
    F: FnMut(&ScoredQuery) -> Result<Option<f64>>,
{
    queries
        .iter()
        .map(|q| Ok((q.query_id.clone(), f(q)?)))
        .collect()
}

/// Binary AUC per query, relevant = label > 0.
pub fn auc(queries: &[ScoredQuery]) -> Result<MetricReport> {
    let values = per_query(queries, |q| {
        let binary: Vec<bool> = q.labels.iter().map(|&l| l > 0).collect();
        auc_binary(&q.scores, &binary)
    })?;
    Ok(MetricReport::new("auc", values))
}

pub fn class_auc(queries: &[ScoredQuery], class: u32) -> Result<MetricReport> {
    let values = per_query(queries, |q| {
        class_reference_auc(&q.scores, &q.labels, class)
    })?;
    Ok(MetricReport::new(format!("auc(c={class})"), values))
}

pub fn mauc(queries: &[ScoredQuery], p: &ClassProportions) -> Result<MetricReport> {
    let values = per_query(queries, |q| mauc_query(&q.scores, &q.labels, p))?;
    Ok(MetricReport::new("mauc", values))
}

fn check_cutoff(k: usize, positives: &BTreeSet<u32>) -> Result<()> {
    if k == 0 {
        return Err(Error::InvalidArgument("cutoff k must be at least 1".into()));
    }
    if positives.is_empty() {
        return Err(Error::InvalidArgument("no positive classes given".into()));
    }
    Ok(())
}

pub fn precision_micro_at_k(
    queries: &[ScoredQuery],
    k: usize,
    positives: &BTreeSet<u32>,
) -> Result<MetricReport> {
    check_cutoff(k, positives)?;
    let values = per_query(queries, |q| {
        Ok(Some(precision_micro_at_k_query(
            &q.ranked_labels()?,
            k,
            positives,
        )))
    })?;
    Ok(MetricReport::new(format!("micro@{k}"), values))
}

/// Per-query macro values; their mean equals the mean over classes of the
/// per-class precision averaged over queries.
pub fn precision_macro_at_k(
    queries: &[ScoredQuery],
    k: usize,
    positives: &BTreeSet<u32>,
) -> Result<MetricReport> {
    check_cutoff(k, positives)?;
    let values = per_query(queries, |q| {
        Ok(Some(precision_macro_at_k_query(
            &q.ranked_labels()?,
            k,
            positives,
        )))
    })?;
    Ok(MetricReport::new(format!("macro@{k}"), values))
}

pub fn mean_average_precision(queries: &[ScoredQuery]) -> Result<MetricReport> {
    let values = per_query(queries, |q| Ok(average_precision(&q.ranked_labels()?)))?;
    Ok(MetricReport::new("map", values))
}

pub fn ndcg_at_k(queries: &[ScoredQuery], k: usize) -> Result<MetricReport> {
    if k == 0 {
        return Err(Error::InvalidArgument("cutoff k must be at least 1".into()));
    }
    let values = per_query(queries, |q| Ok(ndcg_at_k_query(&q.ranked_labels()?, k)))?;
    Ok(MetricReport::new(format!("ndcg@{k}"), values))
}

fn fmt_value(v: Option<f64>) -> String {
    match v {
        Some(v) => format!("{v:?}"),
        None => "skipped".to_string(),
    }
}

/// `metric<TAB>query_id<TAB>value` per query, then an `aggregate` row.
pub fn write_tsv<W: Write>(reports: &[MetricReport], mut out: W) -> Result<()> {
    for report in reports {
        for (qid, v) in &report.per_query {
            writeln!(out, "{}\t{}\t{}", report.name, qid, fmt_value(*v))?;
        }
        writeln!(
            out,
            "{}\taggregate\t{}",
            report.name,
            fmt_value(report.aggregate)
        )?;
    }
    Ok(())
}

/// Aligned summary table: one line per metric with its aggregate.
pub fn render_table(reports: &[MetricReport]) -> String {
    let width = reports
        .iter()
        .map(|r| r.name.len())
        .max()
        .unwrap_or(6)
        .max(6);
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<width$}  {:>10}  {:>7}  {:>7}",
        "metric", "value", "queries", "skipped"
    );
    for r in reports {
        let value = r
            .aggregate
            .map(|v| format!("{v:.6}"))
            .unwrap_or_else(|| "n/a".to_string());
        let _ = writeln!(
            s,
            "{:<width$}  {:>10}  {:>7}  {:>7}",
            r.name,
            value,
            r.per_query.len(),
            r.skipped()
        );
    }
    s
}
