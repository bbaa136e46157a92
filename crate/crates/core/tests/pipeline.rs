use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use potrend::config::PipelineConfig;
use potrend::pipeline::{write_synthetic, Pipeline, TrajectoryRequest};
use potrend::synth::SynthConfig;

fn setup(dir: &Path) -> PipelineConfig {
    let s = write_synthetic(&SynthConfig { weeks: 60, articles_per_week: 30, ..Default::default() }, dir).unwrap();
    PipelineConfig::load(Some(&s.config_path), &[]).unwrap()
}

fn snapshot(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    fn walk(base: &Path, dir: &Path, out: &mut BTreeMap<PathBuf, Vec<u8>>) {
        for entry in std::fs::read_dir(dir).unwrap().flatten() {
            let path = entry.path();
            if path.is_dir() {
                walk(base, &path, out);
            } else if path.file_name().is_some_and(|n| n != ".lock") {
                out.insert(path.strip_prefix(base).unwrap().to_path_buf(), std::fs::read(&path).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(dir, dir, &mut out);
    out
}

fn date(s: &str) -> NaiveDate {
    NaiveDate::parse_from_str(s, "%Y-%m-%d").unwrap()
}

#[test]
fn rerunning_stages_rewrites_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let config = setup(dir.path());
    let p = Pipeline::open(config, false).unwrap();
    p.run_all().unwrap();
    let before = snapshot(p.workdir());
    p.label().unwrap();
    p.pot(None).unwrap();
    p.score().unwrap();
    p.evaluate().unwrap();
    assert_eq!(snapshot(p.workdir()), before);
}

#[test]
fn changed_config_is_refused_unless_forced() {
    let dir = tempfile::tempdir().unwrap();
    let config = setup(dir.path());
    Pipeline::open(config.clone(), false).unwrap().run_all().unwrap();

    let mut changed = config.clone();
    changed.pot.alpha = 0.25;
    let err = Pipeline::open(changed.clone(), false).unwrap().train_extractor().unwrap_err();
    assert_eq!(err.exit_code(), 1, "{err}");
    assert!(err.to_string().contains("--force"), "{err}");
    Pipeline::open(changed, true).unwrap().train_extractor().unwrap();

    // Stages that do not read the changed section are unaffected.
    let mut other = config;
    other.summarizer.c = other.summarizer.c * 2.0;
    Pipeline::open(other, false).unwrap().score().unwrap();
}

#[test]
fn tampered_artifact_is_detected() {
    let dir = tempfile::tempdir().unwrap();
    let config = setup(dir.path());
    let p = Pipeline::open(config, false).unwrap();
    p.ingest().unwrap();
    p.label().unwrap();
    let weeks = p.path("weeks.csv");
    let mut text = std::fs::read_to_string(&weeks).unwrap();
    text.push_str("\n");
    std::fs::write(&weeks, text).unwrap();
    let err = p.pot(None).unwrap_err();
    assert_eq!(err.exit_code(), 2, "{err}");
    assert!(err.to_string().contains("weeks.csv"), "{err}");
}

#[test]
fn missing_upstream_artifact_names_its_stage() {
    let dir = tempfile::tempdir().unwrap();
    let config = setup(dir.path());
    let p = Pipeline::open(config, false).unwrap();
    p.ingest().unwrap();
    p.label().unwrap();
    std::fs::remove_file(p.path("weeks.csv")).unwrap();
    let err = p.pot(None).unwrap_err();
    assert_eq!(err.exit_code(), 2);
    assert!(err.to_string().contains("label"), "{err}");
}

#[test]
fn export_only_adds_plot_files() {
    let dir = tempfile::tempdir().unwrap();
    let config = setup(dir.path());
    let p = Pipeline::open(config, false).unwrap();
    p.run_all().unwrap();
    let before = snapshot(p.workdir());
    let vocab = std::fs::read_to_string(p.path("pot_vocab.txt")).unwrap();
    let word = vocab.lines().nth(3).unwrap().to_string();
    p.export_plot_data(&[word.clone()]).unwrap();
    let after = snapshot(p.workdir());
    for (path, bytes) in &before {
        if !path.starts_with("plots") && !path.starts_with("manifests") {
            assert_eq!(after.get(path), Some(bytes), "{}", path.display());
        }
    }
    let overlay = String::from_utf8(after[Path::new("plots/weekly_overlay.csv")].clone()).unwrap();
    let rows = std::fs::read_to_string(p.path("weekly_sentiment.csv")).unwrap().lines().count();
    assert_eq!(overlay.lines().count(), rows);
    assert!(after.contains_key(&PathBuf::from(format!("plots/pot_{word}.csv"))));

    let err = p.export_plot_data(&["notaword".into()]).unwrap_err();
    assert_eq!(err.exit_code(), 2);
    assert!(err.to_string().contains("pot --word"), "{err}");
}

#[test]
fn trajectories_cover_vocabulary_and_other_words() {
    let dir = tempfile::tempdir().unwrap();
    let config = setup(dir.path());
    let p = Pipeline::open(config, false).unwrap();
    p.ingest().unwrap();
    p.label().unwrap();
    p.pot(None).unwrap();
    let vocab = std::fs::read_to_string(p.path("pot_vocab.txt")).unwrap();
    let inside = vocab.lines().next().unwrap().to_string();
    let (from, to) = (date("2015-03-01"), date("2015-06-30"));
    let read = |word: &str| -> Vec<(String, f64)> {
        csv::Reader::from_path(p.path(&format!("trajectory_{word}.csv")))
            .unwrap()
            .records()
            .map(|r| {
                let r = r.unwrap();
                (r[0].to_string(), r[2].parse().unwrap())
            })
            .collect()
    };

    p.pot(Some(&TrajectoryRequest { word: inside.clone(), from, to })).unwrap();
    let series = read(&inside);
    assert!(series.len() >= 16 && series.len() <= 18, "{}", series.len());
    assert!(series.iter().all(|(a, _)| date(a) >= from && date(a) <= to));
    assert!(series.iter().any(|(_, s)| *s != 0.0));

    // A word outside the vocabulary is scored on demand.
    p.pot(Some(&TrajectoryRequest { word: "Quarter".into(), from, to })).unwrap();
    let filler = read("quarter");
    assert_eq!(filler.len(), series.len());
    p.pot(Some(&TrajectoryRequest { word: "neverseen".into(), from, to })).unwrap();
    assert!(read("neverseen").iter().all(|(_, s)| *s == 0.0));

    let err = p.pot(Some(&TrajectoryRequest { word: inside, from: date("2030-01-01"), to: date("2030-02-01") }));
    assert_eq!(err.unwrap_err().exit_code(), 2);
}
