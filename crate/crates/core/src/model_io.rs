//! Plain-text model files.
//!
//! ```text
//! lmart-auc/1
//! metric mauc
//! shrinkage 0.25
//! num_features 12
//! num_trees 2
//! tree 0 3
//! split 4 0.5
//! leaf -2.0000000079999998
//! leaf 2.0000000079999998
//! tree 1 1
//! leaf 0.0
//! ```
//!
//! Each tree block declares its node count and lists nodes in preorder.
//! Reals use the shortest decimal that parses back to the same bits.

use std::io::{BufRead, Write};

use crate::boost::Ensemble;
use crate::error::{Error, Result};
use crate::lambda::MetricKind;
use crate::tree::TreeNode;

pub const FORMAT_VERSION: &str = "lmart-auc/1";

fn write_node<W: Write>(node: &TreeNode, out: &mut W) -> std::io::Result<()> {
    match node {
        TreeNode::Leaf { value } => writeln!(out, "leaf {value:?}"),
        TreeNode::Split {
            feature,
            threshold,
            left,
            right,
        } => {
            writeln!(out, "split {feature} {threshold:?}")?;
            write_node(left, out)?;
            write_node(right, out)
        }
    }
}

pub fn save<W: Write>(ensemble: &Ensemble, mut out: W) -> Result<()> {
    writeln!(out, "{FORMAT_VERSION}")?;
    writeln!(out, "metric {}", ensemble.metric)?;
    writeln!(out, "shrinkage {:?}", ensemble.shrinkage)?;
    writeln!(out, "num_features {}", ensemble.num_features)?;
    writeln!(out, "num_trees {}", ensemble.trees.len())?;
    for (i, tree) in ensemble.trees.iter().enumerate() {
        writeln!(out, "tree {i} {}", tree.num_nodes())?;
        write_node(tree, &mut out)?;
    }
    out.flush()?;
    Ok(())
}

pub fn to_string(ensemble: &Ensemble) -> String {
    let mut buf = Vec::new();
    save(ensemble, &mut buf).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("model text is ASCII")
}

struct Lines<R> {
    inner: std::io::Lines<R>,
}

impl<R: BufRead> Lines<R> {
    fn next(&mut self) -> Result<Option<String>> {
        for line in self.inner.by_ref() {
            let line = line?;
            if !line.trim().is_empty() {
                return Ok(Some(line));
            }
        }
        Ok(None)
    }
}

fn header_field<R: BufRead>(lines: &mut Lines<R>, key: &str) -> Result<String> {
    let line = lines
        .next()?
        .ok_or_else(|| Error::ModelFormat(format!("missing header field {key}")))?;
    let mut parts = line.split_whitespace();
    match (parts.next(), parts.next(), parts.next()) {
        (Some(k), Some(v), None) if k == key => Ok(v.to_string()),
        _ => Err(Error::ModelFormat(format!(
            "expected `{key} <value>`, found {line:?}"
        ))),
    }
}

fn parse_num<T: std::str::FromStr>(s: &str, what: &str) -> Result<T> {
    s.parse()
        .map_err(|_| Error::ModelFormat(format!("bad {what} {s:?}")))
}

fn parse_tree<R: BufRead>(lines: &mut Lines<R>, index: usize, declared: usize) -> Result<TreeNode> {
    let fail = |message: String| Error::TreeFormat {
        tree: index,
        message,
    };
    let mut consumed = 0usize;

    fn node<R: BufRead>(
        lines: &mut Lines<R>,
        consumed: &mut usize,
        declared: usize,
        fail: &dyn Fn(String) -> Error,
    ) -> Result<TreeNode> {
        if *consumed >= declared {
            return Err(fail(format!(
                "declared {declared} nodes but the tree needs more"
            )));
        }
        let line = lines
            .next()?
            .ok_or_else(|| fail(format!("truncated after {consumed} of {declared} nodes")))?;
        *consumed += 1;
        let parts: Vec<&str> = line.split_whitespace().collect();
        match parts.as_slice() {
            ["leaf", v] => Ok(TreeNode::leaf(
                v.parse()
                    .map_err(|_| fail(format!("bad leaf value {v:?}")))?,
            )),
            ["split", f, t] => {
                let feature = f.parse().map_err(|_| fail(format!("bad feature {f:?}")))?;
                let threshold = t
                    .parse()
                    .map_err(|_| fail(format!("bad threshold {t:?}")))?;
                let left = node(lines, consumed, declared, fail)?;
                let right = node(lines, consumed, declared, fail)?;
                Ok(TreeNode::Split {
                    feature,
                    threshold,
                    left: Box::new(left),
                    right: Box::new(right),
                })
            }
            _ => Err(fail(format!("unrecognised node line {line:?}"))),
        }
    }

    let tree = node(lines, &mut consumed, declared, &fail)?;
    if consumed != declared {
        return Err(fail(format!(
            "declared {declared} nodes but the tree has {consumed}"
        )));
    }
    Ok(tree)
}

pub fn load<R: BufRead>(source: R) -> Result<Ensemble> {
    let mut lines = Lines {
        inner: source.lines(),
    };
    let version = lines
        .next()?
        .ok_or_else(|| Error::ModelFormat("empty model file".into()))?;
    let version = version.trim();
    if version != FORMAT_VERSION {
        return Err(Error::VersionMismatch {
            found: version.to_string(),
            expected: FORMAT_VERSION.to_string(),
        });
    }
    let metric: MetricKind = header_field(&mut lines, "metric")?
        .parse()
        .map_err(|e: Error| Error::ModelFormat(e.to_string()))?;
    let shrinkage: f64 = parse_num(&header_field(&mut lines, "shrinkage")?, "shrinkage")?;
    let num_features: usize =
        parse_num(&header_field(&mut lines, "num_features")?, "num_features")?;
    let num_trees: usize = parse_num(&header_field(&mut lines, "num_trees")?, "num_trees")?;

    let mut trees = Vec::with_capacity(num_trees);
    for i in 0..num_trees {
        let line = lines.next()?.ok_or_else(|| Error::TreeFormat {
            tree: i,
            message: format!("missing tree block ({num_trees} declared)"),
        })?;
        let parts: Vec<&str> = line.split_whitespace().collect();
        let declared = match parts.as_slice() {
            ["tree", idx, count] if idx.parse::<usize>().ok() == Some(i) => {
                count.parse::<usize>().map_err(|_| Error::TreeFormat {
                    tree: i,
                    message: format!("bad node count {count:?}"),
                })?
            }
            _ => {
                return Err(Error::TreeFormat {
                    tree: i,
                    message: format!("expected `tree {i} <nodes>`, found {line:?}"),
                })
            }
        };
        let tree = parse_tree(&mut lines, i, declared)?;
        if let Some(f) = tree.max_feature() {
            if f >= num_features {
                return Err(Error::TreeFormat {
                    tree: i,
                    message: format!("feature {f} out of range for {num_features} features"),
                });
            }
        }
        trees.push(tree);
    }
    if let Some(extra) = lines.next()? {
        return Err(Error::ModelFormat(format!("trailing content {extra:?}")));
    }

    Ok(Ensemble {
        trees,
        shrinkage,
        num_features,
        metric,
    })
}
