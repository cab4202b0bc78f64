//! LETOR / SVMLight ranking files.
//!
//! One document per line: `<label> qid:<id> <index>:<value> ... [# comment]`,
//! with 1-based feature indices. Documents are grouped by qid in order of
//! first appearance and stored densely (absent features are 0.0).

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Largest relevance grade accepted by the parser.
pub const MAX_LABEL: u32 = 31;

#[derive(Debug, Clone, PartialEq)]
pub struct Document {
    pub features: Vec<f64>,
    pub label: u32,
    pub query_id: String,
    /// Position within the query, in file order.
    pub ordinal: usize,
}

impl Document {
    /// Feature value at `index`, 0.0 when the document is narrower.
    #[inline]
    pub fn feature(&self, index: usize) -> f64 {
        self.features.get(index).copied().unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Query {
    pub query_id: String,
    pub documents: Vec<Document>,
}

impl Query {
    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn labels(&self) -> Vec<u32> {
        self.documents.iter().map(|d| d.label).collect()
    }
}

/// One parsed input line.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedLine {
    pub label: u32,
    pub query_id: String,
    /// 0-based feature indices.
    pub features: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub queries: Vec<Query>,
    pub num_features: usize,
    pub class_counts: BTreeMap<u32, usize>,
}

/// Parses a single document line. `line_no` is only used for error reporting.
pub fn parse_line(text: &str, line_no: usize) -> Result<ParsedLine> {
    let err = |message: String| Error::Parse {
        line: line_no,
        message,
    };

    let body = match text.find('#') {
        Some(pos) => &text[..pos],
        None => text,
    };
    let mut tokens = body.split_whitespace();

    let label_tok = tokens.next().ok_or_else(|| err("empty line".into()))?;
    let label: u32 = label_tok
        .parse()
        .map_err(|_| err(format!("malformed label {label_tok:?}")))?;
    if label > MAX_LABEL {
        return Err(err(format!("label {label} exceeds maximum {MAX_LABEL}")));
    }

    let qid_tok = tokens
        .next()
        .ok_or_else(|| err("missing qid token".into()))?;
    let query_id = qid_tok
        .strip_prefix("qid:")
        .filter(|id| !id.is_empty())
        .ok_or_else(|| err(format!("missing qid token, found {qid_tok:?}")))?
        .to_string();

    let mut features = Vec::new();
    for tok in tokens {
        let (idx, val) = tok
            .split_once(':')
            .ok_or_else(|| err(format!("malformed feature {tok:?}")))?;
        let idx: usize = idx
            .parse()
            .map_err(|_| err(format!("malformed feature index {idx:?}")))?;
        if idx == 0 {
            return Err(err("feature indices are 1-based".into()));
        }
        let val: f64 = val
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| err(format!("non-numeric feature value {val:?}")))?;
        features.push((idx - 1, val));
    }

    Ok(ParsedLine {
        label,
        query_id,
        features,
    })
}

/// Reads a whole ranking file. Blank and comment-only lines are skipped.
pub fn load_dataset<R: BufRead>(reader: R) -> Result<Dataset> {
    let mut parsed = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        parsed.push(parse_line(trimmed, i + 1)?);
    }
    Dataset::from_parsed(parsed)
}

pub fn load_dataset_file(path: &Path) -> Result<Dataset> {
    let file = File::open(path)?;
    load_dataset(BufReader::new(file))
}

/// Train, validation and test splits of one fold.
#[derive(Debug, Clone)]
pub struct Fold {
    pub train: Dataset,
    pub valid: Dataset,
    pub test: Dataset,
}

pub fn fold_dir(root: &Path, fold: usize) -> std::path::PathBuf {
    root.join(format!("Fold{fold}"))
}

/// Loads `<root>/Fold<k>/{train,vali,test}.txt`. All three splits end up
/// with the widest feature count among them.
pub fn load_fold(root: &Path, fold: usize) -> Result<Fold> {
    let dir = fold_dir(root, fold);
    let load = |name: &str, split: &'static str| -> Result<Dataset> {
        let path = dir.join(name);
        if !path.is_file() {
            return Err(Error::MissingSplit { split, path });
        }
        load_dataset_file(&path)
    };
    let mut train = load("train.txt", "train")?;
    let mut valid = load("vali.txt", "validation")?;
    let mut test = load("test.txt", "test")?;

    let width = train
        .num_features
        .max(valid.num_features)
        .max(test.num_features);
    train.widen(width);
    valid.widen(width);
    test.widen(width);
    Ok(Fold { train, valid, test })
}

impl Dataset {
    pub fn from_parsed(lines: Vec<ParsedLine>) -> Result<Self> {
        if lines.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let num_features = lines
            .iter()
            .flat_map(|l| l.features.iter().map(|&(idx, _)| idx + 1))
            .max()
            .unwrap_or(0);

        let mut slot_of: HashMap<String, usize> = HashMap::new();
        let mut queries: Vec<Query> = Vec::new();
        let mut class_counts = BTreeMap::new();
        for line in lines {
            let slot = *slot_of.entry(line.query_id.clone()).or_insert_with(|| {
                queries.push(Query {
                    query_id: line.query_id.clone(),
                    documents: Vec::new(),
                });
                queries.len() - 1
            });
            let mut features = vec![0.0; num_features];
            for (idx, val) in line.features {
                features[idx] = val;
            }
            *class_counts.entry(line.label).or_insert(0) += 1;
            let query = &mut queries[slot];
            query.documents.push(Document {
                features,
                label: line.label,
                query_id: line.query_id,
                ordinal: query.documents.len(),
            });
        }

        Ok(Dataset {
            queries,
            num_features,
            class_counts,
        })
    }

    /// Pads every document to `width` features. Never narrows.
    pub fn widen(&mut self, width: usize) {
        if width <= self.num_features {
            return;
        }
        for doc in self.queries.iter_mut().flat_map(|q| q.documents.iter_mut()) {
            doc.features.resize(width, 0.0);
        }
        self.num_features = width;
    }

    pub fn num_documents(&self) -> usize {
        self.queries.iter().map(Query::len).sum()
    }

    pub fn num_classes(&self) -> usize {
        self.class_counts.len()
    }

    pub fn documents(&self) -> impl Iterator<Item = &Document> {
        self.queries.iter().flat_map(|q| q.documents.iter())
    }

    /// Class prevalence p(c) over all documents.
    pub fn class_proportions(&self) -> ClassProportions {
        ClassProportions::from_counts(&self.class_counts)
    }

    /// Writes the dataset back in the line format, every feature explicit.
    pub fn write_letor<W: Write>(&self, mut out: W) -> Result<()> {
        for doc in self.documents() {
            write!(out, "{} qid:{}", doc.label, doc.query_id)?;
            for (i, v) in doc.features.iter().enumerate() {
                write!(out, " {}:{:?}", i + 1, v)?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// Dataset-level class prevalence, keyed by label value.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ClassProportions(BTreeMap<u32, f64>);

impl ClassProportions {
    pub fn from_counts(counts: &BTreeMap<u32, usize>) -> Self {
        let total: usize = counts.values().sum();
        if total == 0 {
            return Self::default();
        }
        Self(
            counts
                .iter()
                .map(|(&c, &n)| (c, n as f64 / total as f64))
                .collect(),
        )
    }

    pub fn from_labels(labels: &[u32]) -> Self {
        let mut counts = BTreeMap::new();
        for &l in labels {
            *counts.entry(l).or_insert(0) += 1;
        }
        Self::from_counts(&counts)
    }

    pub fn new(map: BTreeMap<u32, f64>) -> Self {
        Self(map)
    }

    /// p(c); zero for labels never seen.
    pub fn get(&self, class: u32) -> f64 {
        self.0.get(&class).copied().unwrap_or(0.0)
    }

    pub fn classes(&self) -> impl Iterator<Item = u32> + '_ {
        self.0.keys().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, f64)> + '_ {
        self.0.iter().map(|(&c, &p)| (c, p))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}
