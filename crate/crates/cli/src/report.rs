//! Evaluation metric selection and fold tables.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::str::FromStr;

use anyhow::Result;
use aucrank::metrics::{self, MetricReport, ScoredQuery};
use aucrank::Dataset;

use crate::usage;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalMetric {
    Auc,
    Mauc,
    /// One class-reference AUC per observed class.
    ClassAuc,
    Map,
    Micro(Option<usize>),
    Macro(Option<usize>),
    Ndcg(Option<usize>),
}

impl FromStr for EvalMetric {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        let (name, k) = match s.split_once('@') {
            Some((name, k)) => {
                let k: usize = k
                    .parse()
                    .ok()
                    .filter(|&k| k > 0)
                    .ok_or_else(|| usage(format!("bad cutoff in {s:?}")))?;
                (name, Some(k))
            }
            None => (s.as_str(), None),
        };
        let metric = match (name, k) {
            ("auc", None) => EvalMetric::Auc,
            ("mauc", None) => EvalMetric::Mauc,
            ("class-auc", None) => EvalMetric::ClassAuc,
            ("map", None) => EvalMetric::Map,
            ("micro", k) => EvalMetric::Micro(k),
            ("macro", k) => EvalMetric::Macro(k),
            ("ndcg", k) => EvalMetric::Ndcg(k),
            _ => return Err(usage(format!("unknown evaluation metric {s:?}"))),
        };
        Ok(metric)
    }
}

pub fn parse_metrics(names: &[String]) -> Result<Vec<EvalMetric>> {
    names
        .iter()
        .filter(|n| !n.trim().is_empty())
        .map(|n| n.parse())
        .collect()
}

/// Reports for `queries`, in the order requested. MAUC weights and the
/// class list come from `dataset`; relevant classes are labels ≥ 1.
pub fn compute(
    queries: &[ScoredQuery],
    dataset: &Dataset,
    requested: &[EvalMetric],
    cutoffs: &[usize],
) -> Result<Vec<MetricReport>> {
    let proportions = dataset.class_proportions();
    let classes: Vec<u32> = proportions.classes().collect();
    let positives: BTreeSet<u32> = classes.iter().copied().filter(|&c| c > 0).collect();
    let ks = |k: Option<usize>| k.map_or_else(|| cutoffs.to_vec(), |k| vec![k]);

    let mut out = Vec::new();
    for metric in requested {
        match *metric {
            EvalMetric::Auc => out.push(metrics::auc(queries)?),
            EvalMetric::Mauc => out.push(metrics::mauc(queries, &proportions)?),
            EvalMetric::ClassAuc => {
                for &c in &classes {
                    out.push(metrics::class_auc(queries, c)?);
                }
            }
            EvalMetric::Map => out.push(metrics::mean_average_precision(queries)?),
            EvalMetric::Micro(k) => {
                for k in ks(k) {
                    out.push(metrics::precision_micro_at_k(queries, k, &positives)?);
                }
            }
            EvalMetric::Macro(k) => {
                for k in ks(k) {
                    out.push(metrics::precision_macro_at_k(queries, k, &positives)?);
                }
            }
            EvalMetric::Ndcg(k) => {
                for k in ks(k) {
                    out.push(metrics::ndcg_at_k(queries, k)?);
                }
            }
        }
    }
    Ok(out)
}

/// Aggregates per fold, one column per metric, plus a mean row.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldTable {
    pub columns: Vec<String>,
    pub rows: Vec<(String, Vec<Option<f64>>)>,
}

impl FoldTable {
    pub fn new(folds: &[(String, Vec<MetricReport>)]) -> Self {
        let mut columns: Vec<String> = Vec::new();
        for (_, reports) in folds {
            for r in reports {
                if !columns.contains(&r.name) {
                    columns.push(r.name.clone());
                }
            }
        }
        let mut rows: Vec<(String, Vec<Option<f64>>)> = folds
            .iter()
            .map(|(name, reports)| {
                let values = columns
                    .iter()
                    .map(|c| {
                        reports
                            .iter()
                            .find(|r| &r.name == c)
                            .and_then(|r| r.aggregate)
                    })
                    .collect();
                (name.clone(), values)
            })
            .collect();
        let mean = (0..columns.len())
            .map(|i| {
                let defined: Vec<f64> = rows.iter().filter_map(|(_, v)| v[i]).collect();
                (!defined.is_empty()).then(|| defined.iter().sum::<f64>() / defined.len() as f64)
            })
            .collect();
        rows.push(("mean".to_string(), mean));
        FoldTable { columns, rows }
    }

    pub fn to_tsv(&self) -> String {
        let mut s = String::from("fold");
        for c in &self.columns {
            s.push('\t');
            s.push_str(c);
        }
        s.push('\n');
        for (name, values) in &self.rows {
            s.push_str(name);
            for v in values {
                s.push('\t');
                match v {
                    Some(v) => s.push_str(&format!("{v:?}")),
                    None => s.push_str("skipped"),
                }
            }
            s.push('\n');
        }
        s
    }

    pub fn render(&self) -> String {
        let first = self
            .rows
            .iter()
            .map(|(n, _)| n.len())
            .max()
            .unwrap_or(4)
            .max(4);
        let widths: Vec<usize> = self.columns.iter().map(|c| c.len().max(8)).collect();
        let mut s = format!("{:<first$}", "fold");
        for (c, w) in self.columns.iter().zip(&widths) {
            let _ = write!(s, "  {c:>w$}");
        }
        s.push('\n');
        for (name, values) in &self.rows {
            let _ = write!(s, "{name:<first$}");
            for (v, w) in values.iter().zip(&widths) {
                let cell = v.map(|v| format!("{v:.4}")).unwrap_or_else(|| "n/a".into());
                let _ = write!(s, "  {cell:>w$}");
            }
            s.push('\n');
        }
        s
    }
}
