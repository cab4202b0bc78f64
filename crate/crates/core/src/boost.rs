//! Boosting loop: score, rank, accumulate λ, fit a tree, add it with
//! shrinkage. The ensemble returned is truncated at the iteration with the
//! best validation metric.

use log::{info, warn};
use rayon::prelude::*;

use crate::data::{ClassProportions, Dataset, Document};
use crate::error::{Error, Result};
use crate::lambda::{
    accumulate_lambdas, LambdaOptions, MetricKind, PairOrientation, SwapDeltaMetric,
};
use crate::metrics::{self, scored_queries};
use crate::tree::{fit_tree, FeatureMatrix, SplitCandidates, TreeNode, TreeParams};

/// Learning rates searched by the grid command.
pub const LEARNING_RATE_GRID: [f64; 4] = [0.1, 0.25, 0.5, 0.9];

pub const MAUC_BINARY_WARNING: &str =
    "MAUC λ vanishes on balanced binary data; consider --metric auc for two-class data";

#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    pub trees: Vec<TreeNode>,
    pub shrinkage: f64,
    pub num_features: usize,
    pub metric: MetricKind,
}

impl Ensemble {
    pub fn new(shrinkage: f64, num_features: usize, metric: MetricKind) -> Self {
        Ensemble {
            trees: Vec::new(),
            shrinkage,
            num_features,
            metric,
        }
    }

    /// Σ_t shrinkage · tree_t(x), summed in tree order.
    pub fn score(&self, features: &[f64]) -> f64 {
        let mut s = 0.0;
        for tree in &self.trees {
            s += self.shrinkage * tree.evaluate(features);
        }
        s
    }

    pub fn truncate(&mut self, num_trees: usize) {
        self.trees.truncate(num_trees);
    }
}

pub fn predict<'a, I>(ensemble: &Ensemble, documents: I) -> Vec<f64>
where
    I: IntoIterator<Item = &'a Document>,
{
    documents
        .into_iter()
        .map(|d| ensemble.score(&d.features))
        .collect()
}

/// Scores for every document of `dataset`, in dataset order.
pub fn predict_dataset(ensemble: &Ensemble, dataset: &Dataset) -> Vec<f64> {
    predict(ensemble, dataset.documents())
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub metric: MetricKind,
    pub learning_rate: f64,
    pub num_trees: usize,
    pub max_leaves: usize,
    pub min_docs_per_leaf: usize,
    /// Rounds without validation improvement before stopping.
    pub patience: usize,
    pub seed: u64,
    pub pair_budget: u64,
    pub orientation: PairOrientation,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            metric: MetricKind::Auc,
            learning_rate: 0.1,
            num_trees: 100,
            max_leaves: 7,
            min_docs_per_leaf: 10,
            patience: 50,
            seed: 42,
            pair_budget: 10_000_000,
            orientation: PairOrientation::Metric,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "learning rate must be in (0, 1], got {}",
                self.learning_rate
            )));
        }
        if self.num_trees == 0 {
            return Err(Error::InvalidConfig("num_trees must be at least 1".into()));
        }
        if self.max_leaves < 2 {
            return Err(Error::InvalidConfig("max_leaves must be at least 2".into()));
        }
        if self.pair_budget == 0 {
            return Err(Error::InvalidConfig("pair budget must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistoryRow {
    /// 0 is the empty model.
    pub iteration: usize,
    pub train_metric: Option<f64>,
    pub valid_metric: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub ensemble: Ensemble,
    pub history: Vec<HistoryRow>,
    /// Number of trees kept.
    pub best_iteration: usize,
    pub warnings: Vec<String>,
}

/// Aggregate of `metric` over the queries of a scored dataset.
pub fn evaluate_metric(
    metric: MetricKind,
    dataset: &Dataset,
    scores: &[f64],
    proportions: &ClassProportions,
) -> Result<Option<f64>> {
    let queries = scored_queries(dataset, scores)?;
    let report = match metric {
        MetricKind::Auc => metrics::auc(&queries)?,
        MetricKind::Mauc => metrics::mauc(&queries, proportions)?,
        MetricKind::Ndcg(k) => metrics::ndcg_at_k(&queries, k)?,
    };
    Ok(report.aggregate)
}

/// CSV with columns `iteration,train_metric[,valid_metric]`; the validation
/// column is present only when `with_valid` is set. Absent values are left
/// empty.
pub fn write_history_csv<W: std::io::Write>(
    history: &[HistoryRow],
    with_valid: bool,
    mut out: W,
) -> Result<()> {
    let cell = |v: Option<f64>| v.map(|v| format!("{v:?}")).unwrap_or_default();
    if with_valid {
        writeln!(out, "iteration,train_metric,valid_metric")?;
    } else {
        writeln!(out, "iteration,train_metric")?;
    }
    for row in history {
        write!(out, "{},{}", row.iteration, cell(row.train_metric))?;
        if with_valid {
            write!(out, ",{}", cell(row.valid_metric))?;
        }
        writeln!(out)?;
    }
    Ok(())
}

struct Split<'a> {
    dataset: &'a Dataset,
    matrix: FeatureMatrix,
    scores: Vec<f64>,
}

impl<'a> Split<'a> {
    fn new(dataset: &'a Dataset, width: usize) -> Self {
        let rows: Vec<Vec<f64>> = dataset.documents().map(|d| d.features.clone()).collect();
        Split {
            dataset,
            matrix: FeatureMatrix::from_rows(&rows, width),
            scores: vec![0.0; dataset.num_documents()],
        }
    }

    fn add_tree(&mut self, tree: &TreeNode, shrinkage: f64) {
        let matrix = &self.matrix;
        self.scores
            .par_iter_mut()
            .enumerate()
            .for_each(|(r, s)| *s += shrinkage * tree.evaluate(matrix.row(r)));
    }
}

/// Query start offsets in flat document order.
fn query_offsets(dataset: &Dataset) -> Vec<usize> {
    let mut offsets = Vec::with_capacity(dataset.queries.len());
    let mut at = 0;
    for q in &dataset.queries {
        offsets.push(at);
        at += q.len();
    }
    offsets
}

pub fn train(
    train: &Dataset,
    valid: Option<&Dataset>,
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    config.validate()?;
    if train.num_documents() == 0 {
        return Err(Error::EmptyDataset);
    }
    let proportions = train.class_proportions();
    let swap_metric = SwapDeltaMetric::new(config.metric, proportions.clone());

    let labels: Vec<Vec<u32>> = train.queries.iter().map(|q| q.labels()).collect();
    if !labels.iter().any(|l| swap_metric.prepare(l).is_some()) {
        return Err(Error::UndefinedMetric(format!(
            "{} is undefined on every training query",
            config.metric
        )));
    }

    let mut warnings = Vec::new();
    if config.metric == MetricKind::Mauc && train.num_classes() == 2 {
        warn!("{MAUC_BINARY_WARNING}");
        warnings.push(MAUC_BINARY_WARNING.to_string());
    }

    let width = train.num_features.max(valid.map_or(0, |v| v.num_features));
    let mut train_split = Split::new(train, width);
    let mut valid_split = valid.map(|v| Split::new(v, width));
    let candidates = SplitCandidates::new(&train_split.matrix);
    let all_rows: Vec<usize> = (0..train_split.matrix.num_rows()).collect();
    let offsets = query_offsets(train);
    let tree_params = TreeParams {
        max_leaves: config.max_leaves,
        min_docs_per_leaf: config.min_docs_per_leaf,
    };
    let lambda_opts = LambdaOptions {
        pair_budget: config.pair_budget,
        seed: config.seed,
        orientation: config.orientation,
    };

    let eval =
        |split: &Split| evaluate_metric(config.metric, split.dataset, &split.scores, &proportions);

    let mut ensemble = Ensemble::new(config.learning_rate, width, config.metric);
    let mut history = vec![HistoryRow {
        iteration: 0,
        train_metric: eval(&train_split)?,
        valid_metric: valid_split.as_ref().map(eval).transpose()?.flatten(),
    }];
    let mut best = (0usize, history[0].valid_metric);
    let mut since_best = 0usize;

    let num_queries = train.queries.len() as u64;
    for iteration in 1..=config.num_trees {
        let n = train_split.scores.len();
        let per_query: Vec<_> = train
            .queries
            .par_iter()
            .enumerate()
            .map(|(qi, q)| {
                let start = offsets[qi];
                let scores = &train_split.scores[start..start + q.len()];
                let stream = (iteration as u64 - 1) * num_queries + qi as u64;
                accumulate_lambdas(&labels[qi], scores, &swap_metric, &lambda_opts, stream)
            })
            .collect::<Result<_>>()?;
        let mut lambda = vec![0.0; n];
        let mut weight = vec![0.0; n];
        for (qi, outcome) in per_query.into_iter().enumerate() {
            let start = offsets[qi];
            let len = outcome.buffer.lambda.len();
            lambda[start..start + len].copy_from_slice(&outcome.buffer.lambda);
            weight[start..start + len].copy_from_slice(&outcome.buffer.weight);
        }

        let tree = fit_tree(&candidates, &all_rows, &lambda, &weight, &tree_params);
        train_split.add_tree(&tree, config.learning_rate);
        if let Some(v) = valid_split.as_mut() {
            v.add_tree(&tree, config.learning_rate);
        }
        ensemble.trees.push(tree);

        let row = HistoryRow {
            iteration,
            train_metric: eval(&train_split)?,
            valid_metric: valid_split.as_ref().map(eval).transpose()?.flatten(),
        };
        history.push(row);

        if valid_split.is_some() {
            let improved = match (row.valid_metric, best.1) {
                (Some(v), Some(b)) => v > b,
                (Some(_), None) => true,
                _ => false,
            };
            if improved {
                best = (iteration, row.valid_metric);
                since_best = 0;
            } else {
                since_best += 1;
                if since_best >= config.patience.max(1) {
                    info!("early stop at iteration {iteration}, best {}", best.0);
                    break;
                }
            }
        }
    }

    let best_iteration = if valid_split.is_some() {
        best.0
    } else {
        ensemble.trees.len()
    };
    ensemble.truncate(best_iteration);
    Ok(TrainOutcome {
        ensemble,
        history,
        best_iteration,
        warnings,
    })
}
