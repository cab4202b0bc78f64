use crate::error::{Error, Result};

/// Documents of one query sorted by descending score. Equal scores keep
/// ascending document order, so the ranking is fully deterministic.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankedList {
    /// `order[r]` is the document at 0-based rank `r`.
    pub order: Vec<usize>,
    /// `positions[d]` is the 1-based rank of document `d`.
    pub positions: Vec<usize>,
}

impl RankedList {
    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// Per-document values rearranged into rank order.
    pub fn permute<T: Copy>(&self, values: &[T]) -> Vec<T> {
        self.order.iter().map(|&d| values[d]).collect()
    }
}

pub fn rank(scores: &[f64]) -> Result<RankedList> {
    if scores.is_empty() {
        return Err(Error::EmptyScores);
    }
    if let Some(pos) = scores.iter().position(|s| s.is_nan()) {
        return Err(Error::NanScore(pos));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    // Stable sort keeps ascending ordinal among ties.
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap());
    let mut positions = vec![0; scores.len()];
    for (r, &d) in order.iter().enumerate() {
        positions[d] = r + 1;
    }
    Ok(RankedList { order, positions })
}

/// Labels in rank order.
pub fn ranked_labels(scores: &[f64], labels: &[u32]) -> Result<Vec<u32>> {
    if scores.len() != labels.len() {
        return Err(Error::LengthMismatch {
            left: scores.len(),
            right: labels.len(),
        });
    }
    Ok(rank(scores)?.permute(labels))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn descending_order() {
        let r = rank(&[0.2, 0.9, 0.5]).unwrap();
        assert_eq!(r.order, vec![1, 2, 0]);
        assert_eq!(r.positions, vec![3, 1, 2]);
    }

    #[test]
    fn ties_by_ordinal() {
        assert_eq!(rank(&[0.5, 0.5]).unwrap().order, vec![0, 1]);
        assert_eq!(rank(&[0.0, 1.0, 0.0, 1.0]).unwrap().order, vec![1, 3, 0, 2]);
    }

    #[test]
    fn nan_and_empty_rejected() {
        assert!(matches!(rank(&[0.1, f64::NAN]), Err(Error::NanScore(1))));
        assert!(matches!(rank(&[]), Err(Error::EmptyScores)));
    }

    proptest! {
        #[test]
        fn order_and_positions_are_inverse(scores in prop::collection::vec(-5i32..5, 1..40)) {
            let scores: Vec<f64> = scores.into_iter().map(f64::from).collect();
            let r = rank(&scores).unwrap();
            for (idx, &d) in r.order.iter().enumerate() {
                prop_assert_eq!(r.positions[d], idx + 1);
            }
            for w in r.order.windows(2) {
                prop_assert!(scores[w[0]] >= scores[w[1]]);
                if scores[w[0]] == scores[w[1]] {
                    prop_assert!(w[0] < w[1]);
                }
            }
        }
    }
}
