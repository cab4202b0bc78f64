//! Gradient-boosted ranking trees trained with λ-gradients for AUC,
//! prevalence-weighted multi-class AUC and NDCG.
//!
//! The pieces, bottom up:
//!
//! * [`data`] reads LETOR-style ranking files into queries.
//! * [`metrics`] evaluates rankings (AUC, class-reference AUC, MAUC, MAP,
//!   micro/macro precision@k, NDCG@k).
//! * [`lambda`] turns a query's scores into λ-gradients using constant-time
//!   swap deltas; [`oracle`] recomputes the same deltas by brute force.
//! * [`tree`] and [`boost`] fit the tree ensemble, and [`model_io`] persists it.
//! * [`synth`] generates seeded synthetic data.

pub mod boost;
pub mod data;
pub mod error;
pub mod lambda;
pub mod metrics;
pub mod model_io;
pub mod oracle;
pub mod rank;
pub mod synth;
pub mod tree;

pub use boost::{predict, predict_dataset, train, Ensemble, HistoryRow, TrainConfig, TrainOutcome};
pub use data::{load_dataset, load_fold, parse_line, ClassProportions, Dataset, Document, Query};
pub use error::{Error, Result};
pub use lambda::{accumulate_lambdas, LambdaBuffer, MetricKind, SwapDeltaMetric};
pub use metrics::{MetricReport, ScoredQuery};
pub use rank::{rank, RankedList};
