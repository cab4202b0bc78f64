//! Brute-force swap deltas.
//!
//! Recomputes a metric from scratch on the ranked label list before and after
//! physically swapping two positions. Quadratic and deliberately naive: this
//! is the reference the constant-time deltas in [`crate::lambda`] are checked
//! against, so it shares no code with them.

use crate::data::ClassProportions;
use crate::error::{Error, Result};

pub const DEFAULT_BOUND: usize = 64;

/// Metric recomputed on strict rank positions (no tie credit).
#[derive(Debug, Clone, PartialEq)]
pub enum OracleMetric {
    /// Binary AUC, positive = label > 0.
    Auc,
    /// Σ_c p(c)·AUC(c) over classes present with both members and non-members.
    Mauc(ClassProportions),
    Ndcg(usize),
}

/// Counts (a, b) with a ranked above b and `is_pos(a) && !is_pos(b)`.
/// When `interval` is given only pairs with both ranks inside it count.
fn count_correct<F: Fn(u32) -> bool>(
    ranked: &[u32],
    is_pos: F,
    interval: Option<(usize, usize)>,
) -> i64 {
    let inside = |r: usize| interval.is_none_or(|(lo, hi)| r >= lo && r <= hi);
    let mut count = 0;
    for a in 0..ranked.len() {
        for b in a + 1..ranked.len() {
            if inside(a + 1) && inside(b + 1) && is_pos(ranked[a]) && !is_pos(ranked[b]) {
                count += 1;
            }
        }
    }
    count
}

fn class_auc(ranked: &[u32], class: u32) -> Option<f64> {
    let m = ranked.iter().filter(|&&l| l == class).count();
    let n = ranked.len() - m;
    if m == 0 || n == 0 {
        return None;
    }
    let cp = count_correct(ranked, |l| l == class, None);
    Some(cp as f64 / (m * n) as f64)
}

pub fn metric_value(ranked: &[u32], metric: &OracleMetric) -> Option<f64> {
    match metric {
        OracleMetric::Auc => {
            let m = ranked.iter().filter(|&&l| l > 0).count();
            let n = ranked.len() - m;
            if m == 0 || n == 0 {
                return None;
            }
            let cp = count_correct(ranked, |l| l > 0, None);
            Some(cp as f64 / (m * n) as f64)
        }
        OracleMetric::Mauc(p) => {
            let mut total = 0.0;
            let mut any = false;
            for (c, pc) in p.iter() {
                if pc <= 0.0 {
                    continue;
                }
                if let Some(a) = class_auc(ranked, c) {
                    total += pc * a;
                    any = true;
                }
            }
            any.then_some(total)
        }
        OracleMetric::Ndcg(k) => {
            let dcg = |labels: &[u32]| -> f64 {
                let mut s = 0.0;
                for (r, &l) in labels.iter().enumerate().take(*k) {
                    s += (2f64.powi(l as i32) - 1.0) / ((r + 2) as f64).log2();
                }
                s
            };
            let mut ideal = ranked.to_vec();
            ideal.sort_unstable_by(|a, b| b.cmp(a));
            let idcg = dcg(&ideal);
            (idcg > 0.0).then(|| dcg(ranked) / idcg)
        }
    }
}

fn check(ranked: &[u32], i: usize, j: usize, bound: usize) -> Result<()> {
    if ranked.len() > bound {
        return Err(Error::OracleBound {
            len: ranked.len(),
            bound,
        });
    }
    if i == 0 || j == 0 || i > ranked.len() || j > ranked.len() {
        return Err(Error::RankOutOfRange {
            i,
            j,
            len: ranked.len(),
        });
    }
    Ok(())
}

/// Metric after swapping 1-based ranks `i` and `j`, minus the metric before.
pub fn brute_force_delta(ranked: &[u32], i: usize, j: usize, metric: &OracleMetric) -> Result<f64> {
    brute_force_delta_bounded(ranked, i, j, metric, DEFAULT_BOUND)
}

pub fn brute_force_delta_bounded(
    ranked: &[u32],
    i: usize,
    j: usize,
    metric: &OracleMetric,
    bound: usize,
) -> Result<f64> {
    check(ranked, i, j, bound)?;
    let before = metric_value(ranked, metric)
        .ok_or_else(|| Error::UndefinedMetric("oracle metric undefined on this list".into()))?;
    let mut swapped = ranked.to_vec();
    swapped.swap(i - 1, j - 1);
    // Class counts are unchanged by a swap, so `after` is defined too.
    let after = metric_value(&swapped, metric).expect("swap preserves class counts");
    Ok(after - before)
}

/// Change in the binary correct-pair count caused by swapping ranks `i` and
/// `j`. With `interval_only`, pairs with an endpoint outside `[i, j]` are
/// ignored.
pub fn correct_pair_change(
    ranked: &[bool],
    i: usize,
    j: usize,
    interval_only: bool,
) -> Result<i64> {
    let as_u32: Vec<u32> = ranked.iter().map(|&b| b as u32).collect();
    check(&as_u32, i, j, usize::MAX)?;
    let (lo, hi) = if i < j { (i, j) } else { (j, i) };
    let interval = interval_only.then_some((lo, hi));
    let before = count_correct(&as_u32, |l| l > 0, interval);
    let mut swapped = as_u32;
    swapped.swap(i - 1, j - 1);
    let after = count_correct(&swapped, |l| l > 0, interval);
    Ok(after - before)
}
