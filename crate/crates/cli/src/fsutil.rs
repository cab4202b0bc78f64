//! Atomic file output and small file formats.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use tempfile::NamedTempFile;

use crate::usage;

/// Writes through a temporary file in the target directory, then renames it
/// into place, so readers never see a partial file.
pub fn write_atomic<F>(path: &Path, fill: F) -> Result<()>
where
    F: FnOnce(&mut dyn Write) -> Result<()>,
{
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let tmp = NamedTempFile::new_in(&dir)
        .with_context(|| format!("creating temp file in {}", dir.display()))?;
    {
        let mut out = BufWriter::new(tmp.as_file());
        fill(&mut out)?;
        out.flush()?;
    }
    tmp.as_file().sync_all()?;
    tmp.persist(path)
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

pub fn write_scores(path: &Path, scores: &[f64]) -> Result<()> {
    write_atomic(path, |out| {
        for s in scores {
            writeln!(out, "{s:?}")?;
        }
        Ok(())
    })
}

/// One score per non-empty line.
pub fn read_scores(path: &Path) -> Result<Vec<f64>> {
    let file =
        fs::File::open(path).map_err(|e| usage(format!("cannot open {}: {e}", path.display())))?;
    let mut scores = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        let text = line.trim();
        if text.is_empty() {
            continue;
        }
        let v: f64 = text
            .parse()
            .map_err(|_| usage(format!("{}:{}: bad score {text:?}", path.display(), n + 1)))?;
        scores.push(v);
    }
    Ok(scores)
}

/// Replaces `{fold}` in a path template.
pub fn fold_path(template: &Path, fold: usize) -> PathBuf {
    PathBuf::from(
        template
            .to_string_lossy()
            .replace("{fold}", &fold.to_string()),
    )
}

/// Fold numbers under `root`, from directories named `Fold<k>`.
pub fn list_folds(root: &Path) -> Result<Vec<usize>> {
    let entries =
        fs::read_dir(root).map_err(|e| usage(format!("cannot read {}: {e}", root.display())))?;
    let mut folds = Vec::new();
    for entry in entries {
        let entry = entry?;
        if !entry.file_type()?.is_dir() {
            continue;
        }
        if let Some(k) = entry
            .file_name()
            .to_str()
            .and_then(|n| n.strip_prefix("Fold"))
            .and_then(|k| k.parse().ok())
        {
            folds.push(k);
        }
    }
    folds.sort_unstable();
    if folds.is_empty() {
        return Err(usage(format!(
            "no Fold<k> directories under {}",
            root.display()
        )));
    }
    Ok(folds)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atomic_write_replaces_whole_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nested/out.txt");
        write_atomic(&path, |w| Ok(writeln!(w, "first")?)).unwrap();
        write_atomic(&path, |w| Ok(writeln!(w, "second")?)).unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "second\n");
        assert_eq!(fs::read_dir(path.parent().unwrap()).unwrap().count(), 1);
    }

    #[test]
    fn failed_write_leaves_old_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.txt");
        fs::write(&path, "old").unwrap();
        let err = write_atomic(&path, |w| {
            writeln!(w, "partial")?;
            anyhow::bail!("boom")
        });
        assert!(err.is_err());
        assert_eq!(fs::read_to_string(&path).unwrap(), "old");
    }

    #[test]
    fn scores_round_trip_bit_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.txt");
        let scores = [0.1 + 0.2, -1e-300, 3.0, f64::MIN_POSITIVE];
        write_scores(&path, &scores).unwrap();
        let back = read_scores(&path).unwrap();
        assert_eq!(
            back.iter().map(|s| s.to_bits()).collect::<Vec<_>>(),
            scores.iter().map(|s| s.to_bits()).collect::<Vec<_>>()
        );
    }

    #[test]
    fn fold_placeholder() {
        assert_eq!(
            fold_path(Path::new("m/{fold}/model.txt"), 3),
            PathBuf::from("m/3/model.txt")
        );
        assert_eq!(fold_path(Path::new("plain"), 3), PathBuf::from("plain"));
    }
}
