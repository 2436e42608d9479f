#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use edm_core::store::{Observation, Table};
use edm_workbench::workbench::IngestRequest;
use edm_workbench::Workbench;
use serde_json::{json, Value};

pub struct Run {
    pub code: i32,
    pub out: String,
    pub err: String,
}

impl Run {
    pub fn json(&self) -> Value {
        serde_json::from_str(&self.out).unwrap_or_else(|e| panic!("bad json ({e}): {}\n{}", self.out, self.err))
    }
}

/// Runs the command line against `store`.
pub fn edm(store: &Path, args: &[&str]) -> Run {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = ["edm", "--store", store.to_str().unwrap()].into_iter().chain(args.iter().copied());
    let code = edm_workbench::cli::run(argv, &mut out, &mut err);
    Run { code, out: String::from_utf8(out).unwrap(), err: String::from_utf8(err).unwrap() }
}

/// A fresh, initialized store in a temporary directory.
pub fn fresh_store() -> (tempfile::TempDir, PathBuf, Workbench) {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("lab");
    Workbench::initialize(&path).unwrap();
    let wb = Workbench::open(&path, 0.05).unwrap();
    (dir, path, wb)
}

pub fn declare_input(wb: &Workbench, code: &str, low: f64, high: f64) {
    wb.entity_put(Table::Inputs, json!({"code": code, "name": code, "min_level": low, "max_level": high}))
        .unwrap();
}

pub fn declare_output(wb: &Workbench, code: &str, sense: &str) {
    wb.entity_put(Table::Outputs, json!({"code": code, "name": code, "sense": sense})).unwrap();
}

pub fn observation(exp: &str, run: u32, rep: u32, factors: &[(&str, f64)], outputs: &[(&str, f64)]) -> Observation {
    let map = |kv: &[(&str, f64)]| kv.iter().map(|(k, v)| (k.to_string(), *v)).collect::<BTreeMap<_, _>>();
    Observation {
        experiment_id: exp.into(),
        run_index: run,
        replicate_index: rep,
        factor_values: map(factors),
        output_values: map(outputs),
        excluded: false,
        exclusion_reason: String::new(),
    }
}

/// `wear = (x1 - 2)^2 + (x2 + 1)^2` on a 7x7 grid over [-3, 3]^2, experiment Q.
pub fn seed_quadratic(wb: &Workbench) {
    declare_input(wb, "x1", -3.0, 3.0);
    declare_input(wb, "x2", -3.0, 3.0);
    declare_output(wb, "wear", "minimize");
    let mut obs = Vec::new();
    let mut run = 0;
    for i in 0..7 {
        for j in 0..7 {
            run += 1;
            let (x1, x2) = (-3.0 + i as f64, -3.0 + j as f64);
            let y = (x1 - 2.0).powi(2) + (x2 + 1.0).powi(2);
            obs.push(observation("Q", run, 1, &[("x1", x1), ("x2", x2)], &[("wear", y)]));
        }
    }
    wb.ingest(IngestRequest { observations: obs }).unwrap();
}

/// Five runs of two replicates; run 5 sits far above the rest. Experiment H.
pub fn seed_outlier(wb: &Workbench) {
    declare_input(wb, "I", 2.0, 10.0);
    declare_output(wb, "wear", "minimize");
    let mut obs = Vec::new();
    for run in 1..=5u32 {
        let (a, b) = if run == 5 { (30.0, 70.0) } else { (9.0, 11.0) };
        obs.push(observation("H", run, 1, &[("I", run as f64)], &[("wear", a)]));
        obs.push(observation("H", run, 2, &[("I", run as f64)], &[("wear", b)]));
    }
    wb.ingest(IngestRequest { observations: obs }).unwrap();
}

/// Concatenated contents of every file in the store, for before/after diffs.
pub fn snapshot(store: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(store)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_file())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect()
}
