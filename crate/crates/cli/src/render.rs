//! Human-readable rendering of workbench responses.

use std::fmt::Write as _;

use edm_core::doe::ProgramMatrix;
use edm_core::econ::Comparison;
use edm_core::store::{DeleteReport, InitReport, Table};
use serde_json::Value;

use crate::workbench::{
    AnovaAnalysis, CostResponse, ExcludeResponse, FitResponse, HomogeneityAnalysis, IngestResponse,
    OptimizeResponse, Report, SimulateResponse, SuggestionScope, WhatIfResponse,
};

/// Plain-text form of a response.
pub trait Render {
    fn to_text(&self) -> String;
}

/// Report columns per table, as dotted paths into the row JSON.
pub fn columns(kind: Table) -> &'static [&'static str] {
    match kind {
        Table::Po | Table::To => &["id", "name", "material", "shape_notes"],
        Table::PoProperties | Table::ToProperties => &["owner_kind", "owner_id", "property_name", "value", "unit"],
        Table::Outcome => &[
            "experiment_id",
            "run_index",
            "replicate_index",
            "factor_values",
            "output_values",
            "excluded",
            "exclusion_reason",
        ],
        Table::Inputs => &["code", "name", "unit", "min_level", "max_level"],
        Table::Outputs => &["code", "name", "unit", "sense"],
        Table::We => &["id", "name", "medium_class", "description"],
        Table::Machine => &["id", "name", "generator_type", "max_current", "hourly_rate"],
        Table::Classic => &["id", "material", "operation", "method_name", "processing_time", "cost_per_piece"],
        Table::Models => &["id", "model.family", "model.adj_r2", "model.rmse", "model.n_points", "formula"],
        Table::Optimizations => &["id", "experiment_id", "report.settings", "report.scalarized_value", "report.active_bounds"],
    }
}

fn lookup<'a>(row: &'a Value, path: &str) -> Option<&'a Value> {
    path.split('.').try_fold(row, |v, part| v.get(part))
}

/// One table cell; maps read as `k=v, ...`.
fn cell(v: Option<&Value>) -> String {
    match v {
        None | Some(Value::Null) => String::new(),
        Some(Value::String(s)) => s.clone(),
        Some(Value::Bool(true)) => "yes".into(),
        Some(Value::Bool(false)) => "no".into(),
        Some(Value::Number(n)) => n.to_string(),
        Some(Value::Array(items)) => items.iter().map(|i| cell(Some(i))).collect::<Vec<_>>().join(", "),
        Some(Value::Object(map)) => map
            .iter()
            .map(|(k, v)| format!("{k}={}", cell(Some(v))))
            .collect::<Vec<_>>()
            .join(", "),
    }
}

/// Left-aligned fixed-width table; columns are as wide as their widest cell.
pub fn table(headers: &[String], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = headers.iter().map(|h| h.chars().count()).collect();
    for row in rows {
        for (w, c) in widths.iter_mut().zip(row) {
            *w = (*w).max(c.chars().count());
        }
    }
    let line = |cells: &[String]| {
        let mut s = cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect::<Vec<_>>()
            .join("  ");
        s.truncate(s.trim_end().len());
        s.push('\n');
        s
    };
    let mut out = line(headers);
    out.push_str(&line(&widths.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>()));
    for row in rows {
        out.push_str(&line(row));
    }
    out
}

fn rows_table(columns: &[String], rows: &[Value]) -> String {
    let cells: Vec<Vec<String>> = rows
        .iter()
        .map(|r| columns.iter().map(|c| cell(lookup(r, c))).collect())
        .collect();
    table(columns, &cells)
}

fn num(x: f64) -> String {
    format!("{x:.6}")
}

impl Render for Report {
    fn to_text(&self) -> String {
        let mut out = format!("{} ({} rows)\n", self.kind, self.rows.len());
        out.push_str(&rows_table(&self.columns, &self.rows));
        out
    }
}

impl Render for Value {
    fn to_text(&self) -> String {
        match self {
            Value::Object(map) => {
                let width = map.keys().map(|k| k.len()).max().unwrap_or(0);
                map.iter().fold(String::new(), |mut out, (k, v)| {
                    let _ = writeln!(out, "{k:<width$}  {}", cell(Some(v)));
                    out
                })
            }
            other => format!("{}\n", cell(Some(other))),
        }
    }
}

/// Entity listings render with the table's report columns.
pub struct Listing<'a> {
    pub table: Table,
    pub rows: &'a [Value],
}

impl Render for Listing<'_> {
    fn to_text(&self) -> String {
        let columns: Vec<String> = columns(self.table).iter().map(|c| c.to_string()).collect();
        rows_table(&columns, self.rows)
    }
}

impl Render for InitReport {
    fn to_text(&self) -> String {
        format!("initialized empty store at {} (schema version {})\n", self.store, self.schema_version)
    }
}

impl Render for DeleteReport {
    fn to_text(&self) -> String {
        let mut out = format!("deleted {}:{}\n", self.table, self.key);
        for c in &self.cascaded {
            let _ = writeln!(out, "  also deleted {c}");
        }
        out
    }
}

impl Render for ProgramMatrix {
    fn to_text(&self) -> String {
        ProgramMatrix::to_text(self)
    }
}

impl Render for IngestResponse {
    fn to_text(&self) -> String {
        format!("ingested {} observations ({})\n", self.ingested, self.experiments.join(", "))
    }
}

impl Render for ExcludeResponse {
    fn to_text(&self) -> String {
        self.updated.iter().fold(String::new(), |mut out, o| {
            let state = if o.excluded { format!("excluded ({})", o.exclusion_reason) } else { "included".into() };
            let _ = writeln!(out, "{}:{}:{} {state}", o.experiment_id, o.run_index, o.replicate_index);
            out
        })
    }
}

impl Render for HomogeneityAnalysis {
    fn to_text(&self) -> String {
        let r = &self.report;
        let mut out = format!(
            "{} / {}: {} runs of {} replicates ({} excluded observations ignored)\n",
            self.experiment_id, self.output_code, r.group_count, r.group_size, self.excluded_observations
        );
        let headers = ["run", "replicates", "mean", "variance"].map(String::from);
        let rows: Vec<Vec<String>> = self
            .runs
            .iter()
            .zip(&r.per_group_variances)
            .map(|(g, v)| {
                let reps = g.values.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
                vec![g.run_index.to_string(), reps, num(g.mean), num(*v)]
            })
            .collect();
        out.push_str(&table(&headers, &rows));
        let _ = writeln!(
            out,
            "Cochran C = {:.4}, critical = {:.4} at alpha = {}: {}",
            r.cochran_c,
            r.cochran_critical,
            r.alpha,
            if r.homogeneous { "homogeneous" } else { "not homogeneous" }
        );
        if self.suggestions.is_empty() {
            if !r.homogeneous {
                let _ = writeln!(out, "no single outlier found");
            }
            return out;
        }
        let _ = writeln!(out, "suggested for elimination (nothing has been excluded):");
        let headers = ["observation", "value", "test", "G", "critical"].map(String::from);
        let rows: Vec<Vec<String>> = self
            .suggestions
            .iter()
            .map(|s| {
                let r = &s.run_reference;
                let test = match s.scope {
                    SuggestionScope::Replicate => "within run",
                    SuggestionScope::Run => "run mean",
                };
                vec![
                    format!("{}:{}:{}", r.experiment_id, r.run_index, r.replicate_index),
                    s.value.to_string(),
                    test.into(),
                    format!("{:.4}", s.statistic),
                    format!("{:.4}", s.critical_value),
                ]
            })
            .collect();
        out.push_str(&table(&headers, &rows));
        out
    }
}

impl Render for AnovaAnalysis {
    fn to_text(&self) -> String {
        let mut out = format!("{} / {}, {} observations\n", self.experiment_id, self.output_code, self.observations);
        for f in &self.factors {
            let levels = f.levels.iter().map(|l| l.to_string()).collect::<Vec<_>>().join(", ");
            let _ = writeln!(out, "factor {}: levels {levels}", f.factor_code);
        }
        out.push_str(&self.table.to_text());
        out
    }
}

impl Render for FitResponse {
    fn to_text(&self) -> String {
        let m = &self.stored.model;
        let mut out = format!("stored model {}\n{}\n", self.stored.id, self.stored.formula);
        let adj = m.adj_r2.map(|a| format!("{a:.6}")).unwrap_or_else(|| "n/a".into());
        let _ = writeln!(out, "r2 = {:.6}, adj r2 = {adj}, rmse = {:.6}, {} points", m.r2, m.rmse, m.n_points);
        out
    }
}

impl Render for SimulateResponse {
    fn to_text(&self) -> String {
        let mut out = format!(
            "{} / {} against {}, ranked by {:?}\n",
            self.experiment_id,
            self.output_code,
            self.factor_codes.join(", "),
            self.ranking.criterion
        )
        .to_lowercase();
        let headers = ["rank", "family", "r2", "adj r2", "rmse", "formula"].map(String::from);
        let rows: Vec<Vec<String>> = self
            .ranking
            .entries
            .iter()
            .enumerate()
            .map(|(i, e)| {
                vec![
                    (i + 1).to_string(),
                    e.model.family.name().into(),
                    num(e.model.r2),
                    e.model.adj_r2.map(num).unwrap_or_default(),
                    num(e.model.rmse),
                    e.formula.clone(),
                ]
            })
            .collect();
        out.push_str(&table(&headers, &rows));
        for s in &self.ranking.skipped {
            let _ = writeln!(out, "skipped {}: {}", s.family, s.reason);
        }
        out
    }
}

impl Render for OptimizeResponse {
    fn to_text(&self) -> String {
        format!("optimization {} using {}\n{}", self.id, self.model_ids.join(", "), self.report.to_text())
    }
}

impl Render for WhatIfResponse {
    fn to_text(&self) -> String {
        let settings = self.settings.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(", ");
        let mut out = format!("at {settings}\n");
        let headers = ["output", "model", "predicted", "note"].map(String::from);
        let rows: Vec<Vec<String>> = self
            .predictions
            .iter()
            .map(|p| {
                vec![
                    p.output_code.clone(),
                    p.family.name().into(),
                    num(p.value),
                    if p.extrapolated { "extrapolated".into() } else { String::new() },
                ]
            })
            .collect();
        out.push_str(&table(&headers, &rows));
        out
    }
}

impl Render for Comparison {
    fn to_text(&self) -> String {
        Comparison::to_text(self)
    }
}

impl Render for CostResponse {
    fn to_text(&self) -> String {
        let mut out = String::new();
        if let Some(id) = &self.machine_id {
            let _ = writeln!(out, "machine {id} at {}/h", self.rates.machine_rate);
        }
        out.push_str(&self.breakdown.to_text());
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn empty_report_has_headers() {
        let r = Report {
            kind: Table::Machine,
            columns: columns(Table::Machine).iter().map(|c| c.to_string()).collect(),
            rows: vec![],
        };
        let text = r.to_text();
        assert!(text.starts_with("MACHINE (0 rows)\n"));
        assert!(text.contains("id  name  generator_type  max_current  hourly_rate"));
        assert_eq!(text.lines().count(), 3);
    }

    #[test]
    fn cells_flatten_maps_and_paths() {
        let row = json!({"a": {"b": 2.5}, "m": {"I": 2, "H": 0.5}, "f": false});
        assert_eq!(cell(lookup(&row, "a.b")), "2.5");
        assert_eq!(cell(lookup(&row, "m")), "H=0.5, I=2");
        assert_eq!(cell(lookup(&row, "f")), "no");
        assert_eq!(cell(lookup(&row, "missing.x")), "");
    }

    #[test]
    fn table_is_fixed_width() {
        let t = table(
            &["a".into(), "bbb".into()],
            &[vec!["long value".into(), "x".into()], vec!["y".into(), "z".into()]],
        );
        let lines: Vec<&str> = t.lines().collect();
        assert_eq!(lines[0], "a           bbb");
        assert_eq!(lines[1], "----------  ---");
        assert_eq!(lines[2], "long value  x");
        assert_eq!(lines[3], "y           z");
    }
}
