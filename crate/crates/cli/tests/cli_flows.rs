mod common;

use common::{edm, fresh_store, seed_outlier, seed_quadratic, snapshot};

#[test]
fn init_creates_empty_store() {
    let dir = tempfile::tempdir().unwrap();
    let lab = dir.path().join("lab");
    let r = edm(&lab, &["init", "--yes"]);
    assert_eq!(r.code, 0, "{}", r.err);
    assert!(lab.join("meta").exists());
    let r = edm(&lab, &["--format", "json", "report", "OUTCOME"]);
    assert_eq!(r.code, 0);
    assert_eq!(r.json()["rows"].as_array().unwrap().len(), 0);
    // a second init without --yes refuses to erase
    let r = edm(&lab, &["init"]);
    assert_eq!(r.code, 64);
}

#[test]
fn entity_add_list_delete() {
    let (_d, lab, _wb) = fresh_store();
    let r = edm(
        &lab,
        &["entity", "add", "MACHINE", "--json", r#"{"id":"M1","name":"Elox","max_current":50,"hourly_rate":"40.50"}"#],
    );
    assert_eq!(r.code, 0, "{}", r.err);
    let r = edm(&lab, &["entity", "list", "machine"]);
    assert!(r.out.contains("M1") && r.out.contains("40.50"), "{}", r.out);
    let r = edm(&lab, &["--format", "json", "entity", "get", "MACHINE", "M1"]);
    assert_eq!(r.json()["hourly_rate"], "40.50");
    let r = edm(&lab, &["entity", "del", "MACHINE", "M1"]);
    assert_eq!(r.code, 0);
    let r = edm(&lab, &["entity", "del", "MACHINE", "M1"]);
    assert_eq!(r.code, 2);
    let r = edm(&lab, &["entity", "add", "MACHINE", "--json", r#"{"id":"M2","max_current":-1,"hourly_rate":"1"}"#]);
    assert_eq!(r.code, 1);
    assert!(r.err.contains("max_current"));
}

#[test]
fn ingest_csv_and_report() {
    let (d, lab, wb) = fresh_store();
    common::declare_input(&wb, "I", 2.0, 10.0);
    common::declare_output(&wb, "wear", "minimize");
    let csv = d.path().join("runs.csv");
    std::fs::write(&csv, "run_index,replicate_index,I,wear\n1,1,2,0.5\n1,2,2,0.7\n2,1,10,1.5\n2,2,10,1.1\n").unwrap();
    let r = edm(&lab, &["ingest", "--file", csv.to_str().unwrap(), "--experiment", "E1"]);
    assert_eq!(r.code, 0, "{}", r.err);
    assert!(r.out.contains("ingested 4"));
    let r = edm(&lab, &["report", "OUTCOME", "--experiment", "E1"]);
    assert!(r.out.starts_with("OUTCOME (4 rows)"), "{}", r.out);
    assert!(r.out.contains("excluded"));

    let bad = d.path().join("bad.csv");
    std::fs::write(&bad, "run_index,H,wear\n1,2,0.5\n").unwrap();
    let r = edm(&lab, &["ingest", "--file", bad.to_str().unwrap(), "--experiment", "E1"]);
    assert_eq!(r.code, 1);
}

#[test]
fn anova1_on_identical_groups() {
    let (_d, lab, wb) = fresh_store();
    common::declare_input(&wb, "I", 2.0, 10.0);
    common::declare_output(&wb, "wear", "minimize");
    let mut obs = Vec::new();
    for (run, level) in [(1, 2.0), (2, 6.0), (3, 10.0)] {
        for (rep, y) in [(1, 1.0), (2, 2.0), (3, 3.0)] {
            obs.push(common::observation("E1", run, rep, &[("I", level)], &[("wear", y)]));
        }
    }
    wb.ingest(edm_workbench::workbench::IngestRequest { observations: obs }).unwrap();
    let r = edm(&lab, &["analyze", "anova1", "--experiment", "E1", "--output", "wear", "--factor", "I"]);
    assert_eq!(r.code, 0, "{}", r.err);
    assert!(r.out.contains("factor_A"), "{}", r.out);
    let r = edm(&lab, &["--format", "json", "analyze", "anova1", "--experiment", "E1", "--output", "wear", "--factor", "I"]);
    let rows = r.json()["table"]["rows"].clone();
    assert_eq!(rows[0]["f_statistic"], 0.0);
    assert_eq!(rows[0]["p_value"], 1.0);
}

#[test]
fn optimize_after_fitting_quadratic() {
    let (_d, lab, wb) = fresh_store();
    seed_quadratic(&wb);
    let r = edm(&lab, &["model", "multi", "--experiment", "Q", "--output", "wear", "--factor", "x1", "--factor", "x2"]);
    assert_eq!(r.code, 0, "{}", r.err);
    let r = edm(&lab, &["--format", "json", "optimize", "--experiment", "Q", "--output", "wear", "--minimize"]);
    assert_eq!(r.code, 0, "{}", r.err);
    let s = &r.json()["report"]["settings"];
    assert!((s["x1"].as_f64().unwrap() - 2.0).abs() < 1e-4);
    assert!((s["x2"].as_f64().unwrap() + 1.0).abs() < 1e-4);
    let r = edm(&lab, &["optimize", "--experiment", "Q", "--output", "wear"]);
    assert!(r.out.contains("x1"), "{}", r.out);
    let r = edm(&lab, &["report", "optimizations"]);
    assert!(r.out.starts_with("OPTIMIZATIONS (2 rows)"), "{}", r.out);
}

#[test]
fn optimize_without_model_is_numerical() {
    let (_d, lab, wb) = fresh_store();
    seed_quadratic(&wb);
    let r = edm(&lab, &["--format", "json", "optimize", "--experiment", "Q", "--output", "wear"]);
    assert_eq!(r.code, 3);
    let e: serde_json::Value = serde_json::from_str(r.err.trim()).unwrap();
    assert_eq!(e["error"]["code"], "no_model");
}

#[test]
fn outlier_loop_from_the_command_line() {
    let (_d, lab, wb) = fresh_store();
    seed_outlier(&wb);
    let before = snapshot(&lab);
    let r = edm(&lab, &["--format", "json", "analyze", "homogeneity", "--experiment", "H", "--output", "wear"]);
    assert_eq!(r.code, 0, "{}", r.err);
    let v = r.json();
    assert_eq!(v["report"]["homogeneous"], false);
    let runs: Vec<u64> = v["suggestions"]
        .as_array()
        .unwrap()
        .iter()
        .map(|s| s["run_reference"]["run_index"].as_u64().unwrap())
        .collect();
    assert_eq!(runs, vec![5, 5]);
    assert_eq!(snapshot(&lab), before);

    let r = edm(&lab, &["exclude", "--experiment", "H", "--run", "5", "--reason", "Grubbs"]);
    assert_eq!(r.code, 0, "{}", r.err);
    let r = edm(&lab, &["analyze", "homogeneity", "--experiment", "H", "--output", "wear"]);
    assert!(r.out.contains(": homogeneous"), "{}", r.out);
    assert!(r.out.contains("2 excluded"), "{}", r.out);
}

#[test]
fn models_report_is_ranked() {
    let (_d, lab, wb) = fresh_store();
    seed_quadratic(&wb);
    for family in ["rs_linear", "rs_quadratic"] {
        let r = edm(
            &lab,
            &["model", "multi", "--experiment", "Q", "--output", "wear", "--factor", "x1", "--factor", "x2", "--family", family],
        );
        assert_eq!(r.code, 0, "{}", r.err);
    }
    let r = edm(&lab, &["--format", "json", "report", "models"]);
    let rows = r.json()["rows"].as_array().unwrap().clone();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0]["model"]["family"], "rs_quadratic");
    assert_eq!(rows[1]["model"]["family"], "rs_linear");
}

#[test]
fn simulate_mono_ranks_families() {
    let (_d, lab, wb) = fresh_store();
    common::declare_input(&wb, "I", 1.0, 8.0);
    common::declare_output(&wb, "rate", "maximize");
    let obs = [1.0, 2.0, 4.0, 8.0, 3.0]
        .iter()
        .enumerate()
        .map(|(i, x)| common::observation("P", i as u32 + 1, 1, &[("I", *x)], &[("rate", 2.0 * x.powf(1.5))]))
        .collect();
    wb.ingest(edm_workbench::workbench::IngestRequest { observations: obs }).unwrap();
    let r = edm(&lab, &["--format", "json", "simulate", "mono", "--experiment", "P", "--output", "rate", "--factor", "I"]);
    assert_eq!(r.code, 0, "{}", r.err);
    assert_eq!(r.json()["ranking"]["entries"][0]["model"]["family"], "power");
    // simulate keeps nothing
    let r = edm(&lab, &["--format", "json", "report", "models"]);
    assert!(r.json()["rows"].as_array().unwrap().is_empty());
    let r = edm(&lab, &["model", "mono", "--experiment", "P", "--output", "rate", "--factor", "I"]);
    assert!(r.out.contains("P:rate:power:I"), "{}", r.out);
}

#[test]
fn cost_and_compare() {
    let (_d, lab, wb) = fresh_store();
    let r = edm(
        &lab,
        &["--format", "json", "cost", "--time", "90", "--machine-rate", "40", "--energy-rate", "0.2", "--power-draw", "5", "--wear", "2", "--electrode-wear-cost", "3"],
    );
    assert_eq!(r.code, 0, "{}", r.err);
    assert_eq!(r.json()["breakdown"]["total"], "67.5000");
    let r = edm(&lab, &["cost", "--time=-1"]);
    assert_eq!(r.code, 1);

    wb.entity_put(
        edm_core::store::Table::Classic,
        serde_json::json!({"id":"C1","material":"steel","operation":"drilling","method_name":"twist drill","processing_time":60.0,"cost_per_piece":"12.00"}),
    )
    .unwrap();
    let r = edm(&lab, &["compare", "--material", "steel", "--operation", "drilling", "--time", "30"]);
    assert_eq!(r.code, 0, "{}", r.err);
    assert!(r.out.contains("unconventional method is faster"), "{}", r.out);
    let r = edm(&lab, &["compare", "--material", "titanium", "--operation", "slotting", "--time", "30"]);
    assert_eq!(r.code, 2);
}

#[test]
fn plan_prints_program_matrix() {
    let (_d, lab, wb) = fresh_store();
    common::declare_input(&wb, "I", 2.0, 10.0);
    let r = edm(&lab, &["--format", "json", "plan", "--factor", "I", "--factor", "ti=50:150", "--replicates", "2", "--center-points", "1"]);
    assert_eq!(r.code, 0, "{}", r.err);
    let rows = r.json()["rows"].as_array().unwrap().clone();
    assert_eq!(rows.len(), 10);
    assert_eq!(rows[0]["natural_levels"], serde_json::json!([2.0, 50.0]));
    assert_eq!(rows[9]["natural_levels"], serde_json::json!([6.0, 100.0]));
    let r = edm(&lab, &["plan", "--factor", "H"]);
    assert_eq!(r.code, 2);
}
