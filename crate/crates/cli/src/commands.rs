use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use aucrank::boost::write_history_csv;
use aucrank::data::{fold_dir, load_dataset_file, load_fold};
use aucrank::metrics::{render_table, scored_queries, write_tsv};
use aucrank::synth::{generate, graded_skew, SynthConfig};
use aucrank::{model_io, predict_dataset, train, Dataset, Ensemble, Error, TrainOutcome};
use log::info;

use crate::args::{Command, DataArgs, EvaluateArgs, GridArgs, PredictArgs, SynthArgs, TrainArgs};
use crate::fsutil::{fold_path, list_folds, read_scores, write_atomic, write_scores};
use crate::report::{compute, parse_metrics, FoldTable};
use crate::usage;

pub fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Train(a) => cmd_train(&a),
        Command::Predict(a) => cmd_predict(&a),
        Command::Evaluate(a) => cmd_evaluate(&a),
        Command::Grid(a) => cmd_grid(&a),
        Command::Synth(a) => cmd_synth(&a),
    }
}

fn load_split(path: &Path, split: &'static str) -> Result<Dataset> {
    if !path.is_file() {
        return Err(Error::MissingSplit {
            split,
            path: path.to_path_buf(),
        }
        .into());
    }
    load_dataset_file(path).with_context(|| format!("loading {}", path.display()))
}

fn load_training(data: &DataArgs) -> Result<(Dataset, Option<Dataset>)> {
    if let Some(root) = &data.folds {
        let fold = load_fold(root, data.fold)?;
        return Ok((fold.train, Some(fold.valid)));
    }
    let Some(path) = &data.data else {
        return Err(usage("one of --data or --folds is required"));
    };
    let train = load_split(path, "train")?;
    let valid = data
        .valid
        .as_deref()
        .map(|p| load_split(p, "validation"))
        .transpose()?;
    Ok((train, valid))
}

fn load_model(path: &Path) -> Result<Ensemble> {
    let file = File::open(path)
        .map_err(|e| usage(format!("cannot open model {}: {e}", path.display())))?;
    model_io::load(BufReader::new(file))
        .with_context(|| format!("reading model {}", path.display()))
}

fn save_model(path: &Path, ensemble: &Ensemble) -> Result<()> {
    write_atomic(path, |out| Ok(model_io::save(ensemble, out)?))
}

fn save_history(path: &Path, outcome: &TrainOutcome, with_valid: bool) -> Result<()> {
    write_atomic(path, |out| {
        Ok(write_history_csv(&outcome.history, with_valid, out)?)
    })
}

fn default_history_path(model: &Path) -> PathBuf {
    let mut name = model.as_os_str().to_owned();
    name.push(".history.csv");
    PathBuf::from(name)
}

fn describe(v: Option<f64>) -> String {
    v.map(|v| format!("{v:.6}")).unwrap_or_else(|| "n/a".into())
}

fn cmd_train(args: &TrainArgs) -> Result<()> {
    let config = args.boost.config(args.learning_rate);
    config.validate()?;
    let (train_set, valid_set) = load_training(&args.data)?;
    let outcome = train(&train_set, valid_set.as_ref(), &config)?;
    save_model(&args.model, &outcome.ensemble)?;
    let history = args
        .out
        .clone()
        .unwrap_or_else(|| default_history_path(&args.model));
    save_history(&history, &outcome, valid_set.is_some())?;
    let kept = &outcome.history[outcome.best_iteration];
    println!(
        "kept {} trees; train {} {}; valid {} {}",
        outcome.best_iteration,
        config.metric,
        describe(kept.train_metric),
        config.metric,
        describe(kept.valid_metric)
    );
    Ok(())
}

fn cmd_predict(args: &PredictArgs) -> Result<()> {
    let ensemble = load_model(&args.model)?;
    let dataset = load_split(&args.data, "data")?;
    let scores = predict_dataset(&ensemble, &dataset);
    write_scores(&args.out, &scores)?;
    info!("wrote {} scores to {}", scores.len(), args.out.display());
    Ok(())
}

/// Scores for `dataset` from a model or a predictions file.
fn scores_for(
    dataset: &Dataset,
    model: Option<&Path>,
    predictions: Option<&Path>,
) -> Result<Vec<f64>> {
    let scores = match (model, predictions) {
        (Some(m), _) => predict_dataset(&load_model(m)?, dataset),
        (None, Some(p)) => read_scores(p)?,
        (None, None) => return Err(usage("one of --model or --predictions is required")),
    };
    if scores.len() != dataset.num_documents() {
        return Err(Error::LengthMismatch {
            left: scores.len(),
            right: dataset.num_documents(),
        })
        .context("predictions and data disagree on document count");
    }
    Ok(scores)
}

fn cmd_evaluate(args: &EvaluateArgs) -> Result<()> {
    let requested = parse_metrics(&args.eval_metrics)?;
    if requested.is_empty() {
        return Err(usage("no evaluation metrics requested"));
    }
    if args.k.contains(&0) {
        return Err(usage("cutoffs must be positive"));
    }

    if let Some(root) = &args.folds {
        let folds = match args.fold {
            Some(k) => vec![k],
            None => list_folds(root)?,
        };
        let mut per_fold = Vec::new();
        for k in folds {
            let dataset = load_split(&fold_dir(root, k).join("test.txt"), "test")?;
            let model = args.model.as_deref().map(|p| fold_path(p, k));
            let predictions = args.predictions.as_deref().map(|p| fold_path(p, k));
            let scores = scores_for(&dataset, model.as_deref(), predictions.as_deref())?;
            let queries = scored_queries(&dataset, &scores)?;
            per_fold.push((
                format!("Fold{k}"),
                compute(&queries, &dataset, &requested, &args.k)?,
            ));
        }
        let table = FoldTable::new(&per_fold);
        print!("{}", table.render());
        if let Some(out) = &args.out {
            write_atomic(out, |w| Ok(w.write_all(table.to_tsv().as_bytes())?))?;
        }
        return Ok(());
    }

    let Some(path) = &args.data else {
        return Err(usage("one of --data or --folds is required"));
    };
    let dataset = load_split(path, "data")?;
    let scores = scores_for(&dataset, args.model.as_deref(), args.predictions.as_deref())?;
    let queries = scored_queries(&dataset, &scores)?;
    let reports = compute(&queries, &dataset, &requested, &args.k)?;
    print!("{}", render_table(&reports));
    if let Some(out) = &args.out {
        write_atomic(out, |w| Ok(write_tsv(&reports, w)?))?;
    }
    Ok(())
}

/// One grid entry: the rate, the kept iteration and its validation metric.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridRow {
    pub learning_rate: f64,
    pub best_iteration: usize,
    pub valid_metric: Option<f64>,
}

/// Index of the row with the highest validation metric; ties go to the
/// lowest learning rate. Rows without a metric lose to any row with one.
pub fn select_rate(rows: &[GridRow]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, row) in rows.iter().enumerate() {
        let better = match best.map(|b| &rows[b]) {
            None => true,
            Some(b) => match (row.valid_metric, b.valid_metric) {
                (Some(v), Some(w)) => v > w || (v == w && row.learning_rate < b.learning_rate),
                (Some(_), None) => true,
                (None, Some(_)) => false,
                (None, None) => row.learning_rate < b.learning_rate,
            },
        };
        if better {
            best = Some(i);
        }
    }
    best
}

pub fn history_file_name(rate: f64) -> String {
    format!("history-lr{rate:?}.csv")
}

pub fn grid_summary(rows: &[GridRow], selected: usize) -> String {
    let mut s = String::from("learning_rate\tbest_iteration\tvalid_metric\tselected\n");
    for (i, row) in rows.iter().enumerate() {
        let value = row
            .valid_metric
            .map(|v| format!("{v:?}"))
            .unwrap_or_else(|| "skipped".into());
        let mark = if i == selected { "yes" } else { "no" };
        s.push_str(&format!(
            "{:?}\t{}\t{value}\t{mark}\n",
            row.learning_rate, row.best_iteration
        ));
    }
    s
}

fn cmd_grid(args: &GridArgs) -> Result<()> {
    if args.grid.is_empty() {
        return Err(usage("empty learning-rate grid"));
    }
    for &rate in &args.grid {
        args.boost.config(rate).validate()?;
    }
    let (train_set, valid_set) = load_training(&args.data)?;
    let Some(valid_set) = valid_set else {
        return Err(usage(
            "grid search needs validation data (--valid or --folds)",
        ));
    };

    let mut rows = Vec::new();
    let mut winner: Option<(GridRow, Ensemble)> = None;
    for &rate in &args.grid {
        let config = args.boost.config(rate);
        let outcome = train(&train_set, Some(&valid_set), &config)?;
        save_history(&args.out.join(history_file_name(rate)), &outcome, true)?;
        let row = GridRow {
            learning_rate: rate,
            best_iteration: outcome.best_iteration,
            valid_metric: outcome.history[outcome.best_iteration].valid_metric,
        };
        info!(
            "rate {rate}: valid {} at {}",
            describe(row.valid_metric),
            row.best_iteration
        );
        let keep = match &winner {
            None => true,
            Some((w, _)) => select_rate(&[*w, row]) == Some(1),
        };
        if keep {
            winner = Some((row, outcome.ensemble));
        }
        rows.push(row);
    }

    let selected = select_rate(&rows).expect("grid is non-empty");
    let (row, ensemble) = winner.expect("grid is non-empty");
    debug_assert_eq!(row, rows[selected]);
    let summary = grid_summary(&rows, selected);
    write_atomic(&args.out.join("grid.tsv"), |w| {
        Ok(w.write_all(summary.as_bytes())?)
    })?;
    save_model(&args.model, &ensemble)?;
    print!("{summary}");
    println!(
        "selected learning rate {:?} ({} {})",
        row.learning_rate,
        args.boost.metric,
        describe(row.valid_metric)
    );
    Ok(())
}

fn synth_config(args: &SynthArgs, seed: u64) -> SynthConfig {
    let (classes, skew) = match args.graded_skew {
        Some(q) => (5, graded_skew(q)),
        None => (args.classes, args.skew.clone()),
    };
    SynthConfig {
        queries: args.queries,
        docs_per_query: args.docs_per_query,
        classes,
        skew,
        noise: args.noise,
        num_features: args.features,
        informative: args.informative,
        seed,
    }
}

fn write_dataset(path: &Path, dataset: &Dataset) -> Result<()> {
    write_atomic(path, |w| Ok(dataset.write_letor(w)?))
}

fn cmd_synth(args: &SynthArgs) -> Result<()> {
    if let Some(q) = args.graded_skew {
        if !(0.0..1.0).contains(&q) {
            return Err(usage(format!("graded skew must be in [0, 1), got {q}")));
        }
    }
    if let Some(out) = &args.out {
        write_dataset(out, &generate(&synth_config(args, args.seed))?)?;
        return Ok(());
    }
    let root = args.folds.as_ref().expect("clap requires --out or --folds");
    if args.num_folds == 0 {
        return Err(usage("--num-folds must be at least 1"));
    }
    for k in 1..=args.num_folds {
        let dir = fold_dir(root, k);
        for (i, name) in ["train.txt", "vali.txt", "test.txt"].iter().enumerate() {
            let seed = args.seed + 3 * (k as u64 - 1) + i as u64;
            write_dataset(&dir.join(name), &generate(&synth_config(args, seed))?)?;
        }
    }
    Ok(())
}
