//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails.

use std::fs;
use std::hint::black_box;
use std::path::Path;
use std::time::{Duration, Instant};

use aucrank::boost::evaluate_metric;
use aucrank::lambda::{delta_auc, delta_mauc, ClassStats, LambdaOptions};
use aucrank::metrics::auc_binary;
use aucrank::oracle::{brute_force_delta, correct_pair_change, OracleMetric};
use aucrank::synth::{generate, graded_skew, SynthConfig};
use aucrank::{
    accumulate_lambdas, load_dataset, model_io, predict_dataset, train, ClassProportions, Dataset,
    MetricKind, SwapDeltaMetric, TrainConfig,
};
use aucrank_cli::commands::{select_rate, GridRow};
use aucrank_cli::main_with_args;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check<'a> = Box<dyn Fn() -> Outcome + 'a>;

struct Outcome {
    passed: bool,
    detail: String,
}

impl Outcome {
    fn new(passed: bool, detail: impl Into<String>) -> Self {
        Outcome {
            passed,
            detail: detail.into(),
        }
    }
}

fn counts(list: &[bool]) -> (usize, usize) {
    let m = list.iter().filter(|&&b| b).count();
    (m, list.len() - m)
}

fn swap_delta_exhaustive() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    let mut pairs = 0usize;
    for len in 2..=8usize {
        for mask in 0..1u32 << len {
            let list: Vec<bool> = (0..len).map(|b| mask >> b & 1 == 1).collect();
            let (m, n) = counts(&list);
            if m == 0 || n == 0 {
                continue;
            }
            let ranked: Vec<u32> = list.iter().map(|&b| b as u32).collect();
            for i in 1..=len {
                for j in i + 1..=len {
                    let fast = delta_auc(&list, i, j, m, n).unwrap();
                    let slow = brute_force_delta(&ranked, i, j, &OracleMetric::Auc).unwrap();
                    worst = worst.max((fast - slow).abs());
                    pairs += 1;
                }
            }
        }
    }
    let elapsed = start.elapsed();
    Outcome::new(
        worst <= 1e-12 && elapsed < Duration::from_secs(10),
        format!("{pairs} pairs, max |diff| {worst:e}, {elapsed:.2?}"),
    )
}

fn interval_locality() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut pairs, mut mismatches) = (0usize, 0usize);
    for _ in 0..1000 {
        let len = rng.random_range(2..=12);
        let list: Vec<bool> = (0..len).map(|_| rng.random()).collect();
        for i in 1..=len {
            for j in i + 1..=len {
                let full = correct_pair_change(&list, i, j, false).unwrap();
                let local = correct_pair_change(&list, i, j, true).unwrap();
                pairs += 1;
                mismatches += (full != local) as usize;
            }
        }
    }
    Outcome::new(
        mismatches == 0,
        format!("{pairs} pairs, {mismatches} mismatches"),
    )
}

fn mauc_linearity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut worst_sum, mut worst_oracle) = (0.0f64, 0.0f64);
    let mut pairs = 0usize;
    for _ in 0..1000 {
        let classes = rng.random_range(3..=5u32);
        let len = rng.random_range(2..=12);
        let ranked: Vec<u32> = (0..len).map(|_| rng.random_range(0..classes)).collect();
        let p = ClassProportions::from_labels(&ranked);
        let stats = ClassStats::new(&ranked, &p);
        if !stats.is_defined() {
            continue;
        }
        let oracle = OracleMetric::Mauc(p.clone());
        for i in 1..=len {
            for j in i + 1..=len {
                let fast = delta_mauc(&ranked, i, j, &stats).unwrap();
                let mut sum = 0.0;
                for (c, pc) in p.iter() {
                    let binary: Vec<bool> = ranked.iter().map(|&l| l == c).collect();
                    let (m, n) = counts(&binary);
                    if m > 0 && n > 0 {
                        sum += pc * delta_auc(&binary, i, j, m, n).unwrap();
                    }
                }
                let slow = brute_force_delta(&ranked, i, j, &oracle).unwrap();
                worst_sum = worst_sum.max((fast - sum).abs());
                worst_oracle = worst_oracle.max((fast - slow).abs());
                pairs += 1;
            }
        }
    }
    Outcome::new(
        worst_sum <= 1e-10 && worst_oracle <= 1e-10,
        format!("{pairs} pairs, max |diff| vs class sum {worst_sum:e}, vs oracle {worst_oracle:e}"),
    )
}

fn wmw(scores: &[f64], labels: &[bool]) -> Option<f64> {
    let (mut credit, mut pairs) = (0.0, 0usize);
    for (a, &pa) in labels.iter().enumerate() {
        for (b, &pb) in labels.iter().enumerate() {
            if pa && !pb {
                pairs += 1;
                credit += if scores[a] > scores[b] {
                    1.0
                } else if scores[a] == scores[b] {
                    0.5
                } else {
                    0.0
                };
            }
        }
    }
    (pairs > 0).then(|| credit / pairs as f64)
}

fn auc_correctness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut worst, mut undefined_mismatch, mut worst_flip) = (0.0f64, 0usize, 0.0f64);
    for _ in 0..1000 {
        let len = rng.random_range(1..=50);
        let levels = rng.random_range(1..=30);
        let scores: Vec<f64> = (0..len)
            .map(|_| rng.random_range(0..levels) as f64)
            .collect();
        let labels: Vec<bool> = (0..len).map(|_| rng.random()).collect();
        match (auc_binary(&scores, &labels).unwrap(), wmw(&scores, &labels)) {
            (Some(a), Some(b)) => worst = worst.max((a - b).abs()),
            (None, None) => {}
            _ => undefined_mismatch += 1,
        }

        let distinct: Vec<f64> = (0..len)
            .map(|d| d as f64 * 1.5 - rng.random::<f64>())
            .collect();
        let flipped: Vec<bool> = labels.iter().map(|l| !l).collect();
        if let (Some(a), Some(b)) = (
            auc_binary(&distinct, &labels).unwrap(),
            auc_binary(&distinct, &flipped).unwrap(),
        ) {
            worst_flip = worst_flip.max((a + b - 1.0).abs());
        }
    }
    Outcome::new(
        worst <= 1e-12 && undefined_mismatch == 0 && worst_flip <= 1e-12,
        format!("max |diff| {worst:e}, definedness mismatches {undefined_mismatch}, flip error {worst_flip:e}"),
    )
}

fn lambda_contract() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let p = ClassProportions::from_labels(&[0, 0, 0, 0, 1, 1, 1, 2, 2, 3]);
    let metrics = [
        SwapDeltaMetric::new(MetricKind::Auc, p.clone()),
        SwapDeltaMetric::new(MetricKind::Mauc, p.clone()),
        SwapDeltaMetric::new(MetricKind::Ndcg(10), p),
    ];
    let opts = LambdaOptions::default();
    let (mut worst_sum, mut negative_weights, mut nonzero_uniform) = (0.0f64, 0usize, 0usize);
    for q in 0..500u64 {
        let len = rng.random_range(1..=60);
        let labels: Vec<u32> = (0..len).map(|_| rng.random_range(0..4)).collect();
        let scores: Vec<f64> = (0..len).map(|_| rng.random_range(-2.0..2.0)).collect();
        let uniform = vec![labels[0]; len];
        for metric in &metrics {
            let out = accumulate_lambdas(&labels, &scores, metric, &opts, q).unwrap();
            worst_sum = worst_sum.max(out.buffer.lambda.iter().sum::<f64>().abs());
            negative_weights += out.buffer.weight.iter().filter(|&&w| w < 0.0).count();
            let flat = accumulate_lambdas(&uniform, &scores, metric, &opts, q).unwrap();
            nonzero_uniform += (!flat.buffer.is_zero()) as usize;
        }
    }
    Outcome::new(
        worst_sum <= 1e-9 && negative_weights == 0 && nonzero_uniform == 0,
        format!(
            "max |Σλ| {worst_sum:e}, negative weights {negative_weights}, non-zero uniform buffers {nonzero_uniform}"
        ),
    )
}

fn median_call_time(list: &[bool], i: usize, j: usize, m: usize, n: usize) -> Duration {
    // 10^4 calls in 100 batches; the median batch is divided by its size.
    let mut batches: Vec<Duration> = (0..100)
        .map(|_| {
            let start = Instant::now();
            for _ in 0..100 {
                black_box(delta_auc(black_box(list), black_box(i), black_box(j), m, n).unwrap());
            }
            start.elapsed() / 100
        })
        .collect();
    batches.sort_unstable();
    batches[50]
}

fn constant_time_delta() -> Outcome {
    let n = 100_000;
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut list: Vec<bool> = (0..n).map(|_| rng.random()).collect();
    list[0] = true;
    list[n - 1] = false;
    let (m, neg) = counts(&list);
    // Warm up both paths before measuring.
    median_call_time(&list, 1, 2, m, neg);
    median_call_time(&list, 1, n, m, neg);
    let near = median_call_time(&list, 1, 2, m, neg);
    let far = median_call_time(&list, 1, n, m, neg);
    let ratio = far.as_secs_f64().max(near.as_secs_f64())
        / far.as_secs_f64().min(near.as_secs_f64()).max(1e-12);
    Outcome::new(
        ratio <= 3.0,
        format!("median j-i=1 {near:?}, j-i=n-1 {far:?}, ratio {ratio:.2}"),
    )
}

fn metric_on(metric: MetricKind, ds: &Dataset, scores: &[f64], p: &ClassProportions) -> f64 {
    evaluate_metric(metric, ds, scores, p).unwrap().unwrap()
}

fn skewed(seed: u64) -> Dataset {
    generate(&SynthConfig {
        queries: 20,
        docs_per_query: 50,
        classes: 5,
        skew: graded_skew(0.7),
        noise: 0.3,
        seed,
        ..SynthConfig::default()
    })
    .unwrap()
}

fn mauc_config() -> TrainConfig {
    TrainConfig {
        metric: MetricKind::Mauc,
        learning_rate: 0.25,
        ..TrainConfig::default()
    }
}

fn end_to_end() -> Outcome {
    let binary = |seed| {
        generate(&SynthConfig {
            seed,
            ..SynthConfig::default()
        })
        .unwrap()
    };
    let (tr, te) = (binary(101), binary(102));
    let start = Instant::now();
    let config = TrainConfig {
        num_trees: 50,
        learning_rate: 0.25,
        ..TrainConfig::default()
    };
    let model = train(&tr, None, &config).unwrap().ensemble;
    let p = tr.class_proportions();
    let train_auc = metric_on(MetricKind::Auc, &tr, &predict_dataset(&model, &tr), &p);
    let test_auc = metric_on(MetricKind::Auc, &te, &predict_dataset(&model, &te), &p);
    let binary_time = start.elapsed();

    let (tr, va, te) = (skewed(1), skewed(2), skewed(3));
    let start = Instant::now();
    let model = train(&tr, Some(&va), &mauc_config()).unwrap().ensemble;
    let p = tr.class_proportions();
    let before = metric_on(MetricKind::Mauc, &te, &vec![0.0; te.num_documents()], &p);
    let after = metric_on(MetricKind::Mauc, &te, &predict_dataset(&model, &te), &p);
    let skewed_time = start.elapsed();

    let passed = train_auc >= 0.99
        && test_auc >= 0.95
        && binary_time < Duration::from_secs(30)
        && after - before >= 0.15
        && skewed_time < Duration::from_secs(120);
    Outcome::new(
        passed,
        format!(
            "binary train AUC {train_auc:.4}, held-out {test_auc:.4} in {binary_time:.2?}; \
             skewed test MAUC {before:.4} -> {after:.4} (+{:.4}) in {skewed_time:.2?}",
            after - before
        ),
    )
}

fn prevalence_direction() -> Outcome {
    let mut wins = 0;
    let mut details = Vec::new();
    for base in [1u64, 11, 21] {
        let (tr, va, te) = (skewed(base), skewed(base + 1), skewed(base + 2));
        let config = TrainConfig {
            seed: base,
            ..mauc_config()
        };
        let model = train(&tr, Some(&va), &config).unwrap().ensemble;
        let p = tr.class_proportions();
        let common = p.iter().max_by(|a, b| a.1.total_cmp(&b.1)).unwrap().0;
        let rare = p.iter().min_by(|a, b| a.1.total_cmp(&b.1)).unwrap().0;
        let scores = predict_dataset(&model, &te);
        let zeros = vec![0.0; scores.len()];
        let class_auc = |scores: &[f64], class: u32| {
            let q = aucrank::metrics::scored_queries(&te, scores).unwrap();
            aucrank::metrics::class_auc(&q, class)
                .unwrap()
                .aggregate
                .unwrap()
        };
        let gain_common = class_auc(&scores, common) - class_auc(&zeros, common);
        let gain_rare = class_auc(&scores, rare) - class_auc(&zeros, rare);
        wins += (gain_common >= gain_rare) as usize;
        details.push(format!(
            "seed {base}: c{common} {gain_common:+.3} vs c{rare} {gain_rare:+.3}"
        ));
    }
    Outcome::new(wins >= 2, format!("{wins}/3 seeds; {}", details.join(", ")))
}

fn cli(args: &[&str]) -> i32 {
    let mut full = vec!["aucrank"];
    full.extend_from_slice(args);
    main_with_args(full)
}

fn determinism_and_persistence(dir: &Path) -> Outcome {
    let folds = dir.join("det");
    let folds_s = folds.to_str().unwrap();
    let synth = [
        "synth",
        "--folds",
        folds_s,
        "--queries",
        "8",
        "--docs-per-query",
        "30",
        "--classes",
        "3",
        "--noise",
        "0.4",
        "--seed",
        "9",
    ];
    let mut ok = cli(&synth) == 0;
    let first = fs::read(folds.join("Fold1/train.txt")).unwrap_or_default();
    ok &= cli(&synth) == 0;
    let same_data = first == fs::read(folds.join("Fold1/train.txt")).unwrap_or_default();

    let model_a = dir.join("a.model");
    let model_b = dir.join("b.model");
    for model in [&model_a, &model_b] {
        ok &= cli(&[
            "train",
            "--folds",
            folds_s,
            "--metric",
            "mauc",
            "--trees",
            "30",
            "--pair-budget",
            "100",
            "--model",
            model.to_str().unwrap(),
        ]) == 0;
    }
    let bytes_a = fs::read(&model_a).unwrap_or_default();
    let same_model = !bytes_a.is_empty() && bytes_a == fs::read(&model_b).unwrap_or_default();

    let text = String::from_utf8(bytes_a).unwrap_or_default();
    let (round_trip, same_scores) = match model_io::load(text.as_bytes()) {
        Ok(model) => {
            let resaved = model_io::to_string(&model);
            let test =
                load_dataset(fs::read(folds.join("Fold1/test.txt")).unwrap().as_slice()).unwrap();
            let reloaded = model_io::load(resaved.as_bytes()).unwrap();
            let a: Vec<u64> = predict_dataset(&model, &test)
                .iter()
                .map(|s| s.to_bits())
                .collect();
            let b: Vec<u64> = predict_dataset(&reloaded, &test)
                .iter()
                .map(|s| s.to_bits())
                .collect();
            (resaved == text, a == b)
        }
        Err(_) => (false, false),
    };
    Outcome::new(
        ok && same_data && same_model && round_trip && same_scores,
        format!(
            "commands ok {ok}, identical data {same_data}, identical models {same_model}, \
             save/load bit-exact {round_trip}, predictions identical {same_scores}"
        ),
    )
}

fn grid_protocol(dir: &Path) -> Outcome {
    let folds = dir.join("grid");
    let out = dir.join("grid-out");
    let model = dir.join("grid.model");
    let mut ok = cli(&[
        "synth",
        "--folds",
        folds.to_str().unwrap(),
        "--queries",
        "6",
        "--docs-per-query",
        "30",
        "--noise",
        "0.8",
        "--seed",
        "5",
    ]) == 0;
    ok &= cli(&[
        "grid",
        "--folds",
        folds.to_str().unwrap(),
        "--trees",
        "30",
        "--min-docs",
        "5",
        "--model",
        model.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]) == 0;
    let table = fs::read_to_string(out.join("grid.tsv")).unwrap_or_default();
    let mut rows = Vec::new();
    let mut marked = Vec::new();
    for line in table.lines().skip(1) {
        let cells: Vec<&str> = line.split('\t').collect();
        if cells.len() != 4 {
            ok = false;
            continue;
        }
        rows.push(GridRow {
            learning_rate: cells[0].parse().unwrap_or(f64::NAN),
            best_iteration: cells[1].parse().unwrap_or(0),
            valid_metric: cells[2].parse().ok(),
        });
        marked.push(cells[3] == "yes");
    }
    let rates: Vec<f64> = rows.iter().map(|r| r.learning_rate).collect();
    let selected = select_rate(&rows);
    let marked_index = marked.iter().position(|&m| m);
    let histories = rates
        .iter()
        .all(|r| out.join(format!("history-lr{r:?}.csv")).is_file());

    // Independent argmax with the lowest-rate tie-break.
    let mut expected: Option<usize> = None;
    for (i, r) in rows.iter().enumerate() {
        let v = r.valid_metric.unwrap_or(f64::NEG_INFINITY);
        expected = match expected {
            Some(e) => {
                let w = rows[e].valid_metric.unwrap_or(f64::NEG_INFINITY);
                if v > w || (v == w && r.learning_rate < rows[e].learning_rate) {
                    Some(i)
                } else {
                    Some(e)
                }
            }
            None => Some(i),
        };
    }
    let winner_dominates = marked_index.is_some_and(|w| {
        rows.iter().all(|r| {
            rows[w].valid_metric.unwrap_or(f64::NEG_INFINITY)
                >= r.valid_metric.unwrap_or(f64::NEG_INFINITY)
        })
    });

    // The persisted model must score the validation split at the reported value.
    let persisted_matches = match (marked_index, fs::read_to_string(&model)) {
        (Some(w), Ok(text)) => {
            let ensemble = model_io::load(text.as_bytes()).unwrap();
            let fold = aucrank::load_fold(&folds, 1).unwrap();
            let v = metric_on(
                MetricKind::Auc,
                &fold.valid,
                &predict_dataset(&ensemble, &fold.valid),
                &fold.train.class_proportions(),
            );
            ensemble.shrinkage == rows[w].learning_rate
                && ensemble.trees.len() == rows[w].best_iteration
                && Some(v) == rows[w].valid_metric
        }
        _ => false,
    };

    let passed = ok
        && rates == [0.1, 0.25, 0.5, 0.9]
        && histories
        && marked.iter().filter(|&&m| m).count() == 1
        && marked_index == expected
        && selected == expected
        && winner_dominates
        && persisted_matches;
    Outcome::new(
        passed,
        format!(
            "rates {rates:?}, valid {:?}, selected {:?}, expected {:?}, histories {histories}, \
             persisted model matches {persisted_matches}",
            rows.iter().map(|r| r.valid_metric).collect::<Vec<_>>(),
            marked_index.map(|i| rates[i]),
            expected.map(|i| rates[i]),
        ),
    )
}

fn main() {
    let dir = tempfile::tempdir().expect("temp dir");
    let criteria: Vec<(&str, Check)> = vec![
        (
            "exhaustive swap-delta oracle equivalence",
            Box::new(swap_delta_exhaustive),
        ),
        (
            "swap locality to the [i, j] interval",
            Box::new(interval_locality),
        ),
        ("multi-class delta linearity", Box::new(mauc_linearity)),
        ("AUC against pair enumeration", Box::new(auc_correctness)),
        ("lambda buffer contract", Box::new(lambda_contract)),
        ("constant-time AUC delta", Box::new(constant_time_delta)),
        ("end-to-end optimisation", Box::new(end_to_end)),
        (
            "prevalence emphasis direction",
            Box::new(prevalence_direction),
        ),
        (
            "determinism and persistence",
            Box::new(|| determinism_and_persistence(dir.path())),
        ),
        ("grid protocol", Box::new(|| grid_protocol(dir.path()))),
    ];
    let mut failed = 0;
    for (n, (name, check)) in criteria.iter().enumerate() {
        let outcome = check();
        let verdict = if outcome.passed { "PASS" } else { "FAIL" };
        println!(
            "criterion {:>2} {verdict}: {name}: {}",
            n + 1,
            outcome.detail
        );
        failed += (!outcome.passed) as usize;
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
    println!("all {} criteria passed", criteria.len());
}
