#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::OnceLock;
use strokeseg::eval::{builtin_shapes, generate_template_stroke, NoiseParams};
use strokeseg::stroke::StrokeRecord;

pub const BIN: &str = env!("CARGO_BIN_EXE_strokeseg");

pub fn strokeseg(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

pub fn stdout_of(out: &Output) -> String {
    assert!(out.status.success(), "exit {:?}: {}", out.status.code(), String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

pub struct Fixture {
    _dir: tempfile::TempDir,
    pub root: PathBuf,
    pub dataset: PathBuf,
    pub models: PathBuf,
    pub config: PathBuf,
}

/// A synthetic dataset and baseline models trained on it, shared by every
/// test of one binary.
pub fn fixture() -> &'static Fixture {
    static F: OnceLock<Fixture> = OnceLock::new();
    F.get_or_init(|| {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path().to_path_buf();
        let dataset = root.join("dataset");
        let models = root.join("models");
        let p = |x: &Path| x.to_str().unwrap().to_string();
        stdout_of(&strokeseg(&["synth", "--out", &p(&dataset), "--count", "160", "--seed", "7"]));
        stdout_of(&strokeseg(&["train", "--dataset", &p(&dataset), "--out", &p(&models), "--seed", "7"]));
        Fixture {
            config: models.join("detector.json"),
            _dir: dir,
            root,
            dataset,
            models,
        }
    })
}

pub fn shape_named(name: &str) -> strokeseg::eval::ShapeSpec {
    builtin_shapes().into_iter().find(|s| s.name == name).unwrap()
}

/// An unlabeled raw stroke drawn from a named built-in shape.
pub fn raw_record(shape: &str, seed: u64) -> StrokeRecord {
    let stk = generate_template_stroke(&shape_named(shape), &NoiseParams::default(), seed, 200).unwrap();
    StrokeRecord {
        points: stk.points().to_vec(),
        labels: vec![],
        source_id: None,
    }
}

pub fn write_record(dir: &Path, name: &str, rec: &StrokeRecord) -> PathBuf {
    let path = dir.join(name);
    let text = if name.ends_with(".json") { rec.to_json() } else { rec.to_stk() };
    std::fs::write(&path, text).unwrap();
    path
}
