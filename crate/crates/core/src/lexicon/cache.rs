use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use chrono::NaiveDate;

use super::PotModel;
use crate::error::{Error, Result};
use crate::util;

/// Cache file for one week, `<dir>/<anchor>.tsv`.
pub fn model_path(dir: &Path, anchor: NaiveDate) -> PathBuf {
    dir.join(format!("{anchor}.tsv"))
}

/// Writes `# anchor`, `# alpha` and `# window` comment lines, then
/// `word<TAB>score` rows in word order with 18 fixed decimals.
pub fn write_pot_model(path: &Path, model: &PotModel) -> Result<()> {
    let mut out = util::create(path)?;
    let window: Vec<String> = model.window.iter().map(ToString::to_string).collect();
    let mut write = || -> std::io::Result<()> {
        writeln!(out, "# anchor {}", model.anchor)?;
        writeln!(out, "# alpha {}", model.alpha)?;
        writeln!(out, "# window {}", window.join(" "))?;
        writeln!(out, "word\tscore")?;
        for (word, score) in &model.scores {
            writeln!(out, "{word}\t{score:.18}")?;
        }
        out.flush()
    };
    write().map_err(|e| Error::io(format!("cannot write {}", path.display()), e))
}

pub fn read_pot_model(path: &Path) -> Result<PotModel> {
    let bad = |line: usize, msg: &str| Error::data(format!("{} line {line}: {msg}", path.display()));
    let date = |line: usize, s: &str| NaiveDate::parse_from_str(s, "%Y-%m-%d").map_err(|_| bad(line, "bad date"));
    let mut anchor = None;
    let mut alpha = None;
    let mut window = None;
    let mut scores = BTreeMap::new();
    for (i, line) in util::open(path)?.lines().enumerate() {
        let line = line.map_err(|e| Error::io(format!("cannot read {}", path.display()), e))?;
        let n = i + 1;
        if let Some(meta) = line.strip_prefix("# ") {
            let (key, value) = meta.split_once(' ').unwrap_or((meta, ""));
            match key {
                "anchor" => anchor = Some(date(n, value)?),
                "alpha" => alpha = Some(value.parse::<f64>().map_err(|_| bad(n, "bad alpha"))?),
                "window" => {
                    window = Some(value.split_whitespace().map(|s| date(n, s)).collect::<Result<Vec<_>>>()?)
                }
                _ => return Err(bad(n, "unknown header")),
            }
            continue;
        }
        if line == "word\tscore" {
            continue;
        }
        let (word, score) = line.split_once('\t').ok_or_else(|| bad(n, "expected word<TAB>score"))?;
        let score: f64 = score.parse().map_err(|_| bad(n, "bad score"))?;
        if !score.is_finite() {
            return Err(bad(n, "non-finite score"));
        }
        scores.insert(word.to_string(), score);
    }
    match (anchor, alpha, window) {
        (Some(anchor), Some(alpha), Some(window)) => Ok(PotModel { anchor, window, alpha, scores }),
        _ => Err(Error::data(format!("{}: missing header lines", path.display()))),
    }
}

pub fn write_pot_cache(dir: &Path, models: &[PotModel]) -> Result<Vec<PathBuf>> {
    models
        .iter()
        .map(|m| {
            let path = model_path(dir, m.anchor);
            write_pot_model(&path, m)?;
            Ok(path)
        })
        .collect()
}

/// Reads the cached models for `anchors`; a missing file is a missing artifact.
pub fn read_pot_cache(dir: &Path, anchors: &[NaiveDate]) -> Result<Vec<PotModel>> {
    anchors
        .iter()
        .map(|&a| {
            let path = model_path(dir, a);
            if !path.exists() {
                return Err(Error::MissingArtifact { stage: "pot", path });
            }
            read_pot_model(&path)
        })
        .collect()
}

pub fn write_trajectory_csv(path: &Path, word: &str, series: &[(NaiveDate, f64)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(util::create(path)?);
    w.write_record(["anchor", "word", "score"])?;
    for (anchor, score) in series {
        w.write_record([anchor.to_string(), word.to_string(), format!("{score:.18}")])?;
    }
    w.flush().map_err(|e| Error::io(format!("cannot write {}", path.display()), e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model() -> PotModel {
        let d = |s| NaiveDate::parse_from_str(s, "%Y-%m-%d").unwrap();
        PotModel {
            anchor: d("2020-03-09"),
            window: vec![d("2020-03-02"), d("2020-03-09")],
            alpha: 0.5,
            scores: [("coronavirus".to_string(), -0.012345678901234567), ("gain".to_string(), 0.25)].into(),
        }
    }

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let m = model();
        let paths = write_pot_cache(dir.path(), &[m.clone()]).unwrap();
        assert!(paths[0].ends_with("2020-03-09.tsv"));
        let back = read_pot_cache(dir.path(), &[m.anchor]).unwrap().remove(0);
        assert_eq!(back.window, m.window);
        assert_eq!(back.alpha, m.alpha);
        for (w, s) in &m.scores {
            assert!((back.score(w) - s).abs() < 1e-17);
        }
        let text = std::fs::read_to_string(&paths[0]).unwrap();
        assert!(text.contains("coronavirus\t-0.01234567890123"));
        assert!(text.ends_with("gain\t0.250000000000000000\n"));
    }

    #[test]
    fn missing_week_is_missing_artifact() {
        let dir = tempfile::tempdir().unwrap();
        let err = read_pot_cache(dir.path(), &[model().anchor]).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("2020-03-09"));
    }

    #[test]
    fn trajectory_csv() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let m = model();
        write_trajectory_csv(&path, "gain", &[(m.anchor, 0.5)]).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text, "anchor,word,score\n2020-03-09,gain,0.500000000000000000\n");
    }
}
