//! Request and response types shared by the command line and the HTTP
//! service, and the operations that turn one into the other.
//!
//! Both front ends build the same request, call the same [`Workbench`]
//! method and serialize the same response, so their JSON output agrees.

use std::collections::{BTreeMap, BTreeSet};

use edm_core::doe::{build_full_factorial, DesignSpec, FactorRange, Levels, ProgramMatrix};
use edm_core::econ::{self, Comparison, CostBreakdown, CostRates, TimeSource};
use edm_core::model::{
    fit_mono, fit_response_surface, simulate_and_select, simulate_and_select_multi, Criterion, FittedModel,
    Interval, ModelFamily, ModelRanking,
};
use edm_core::optimize::{self, Objective, OptimizationProblem, OptimumReport, Sense, WhatIfPrediction};
use edm_core::stats::{
    anova_one_way, anova_two_way, grubbs_scan, homogeneity_check, AnovaTable, HomogeneityReport, Verdict,
};
use edm_core::store::{
    parse_key, DeleteReport, FieldFilter, InitReport, Observation, Record, RunRef, Store, StoredModel, Table,
};
use edm_core::{Error, Result};
use serde::{Deserialize, Serialize};
use serde_json::Value;

/// Operations over one store, with the session's default significance level.
#[derive(Debug, Clone)]
pub struct Workbench {
    store: Store,
    alpha: f64,
}

// ---------------------------------------------------------------- requests

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanFactor {
    pub code: String,
    /// Taken from the INPUTS row when omitted.
    #[serde(default)]
    pub low: Option<f64>,
    #[serde(default)]
    pub high: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanRequest {
    pub factors: Vec<PlanFactor>,
    #[serde(default = "one")]
    pub replicates: u32,
    #[serde(default)]
    pub center_points: u32,
    #[serde(default)]
    pub levels: Levels,
    #[serde(default)]
    pub axial: bool,
    #[serde(default)]
    pub shuffle_seed: Option<u64>,
}

fn one() -> u32 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IngestRequest {
    pub observations: Vec<Observation>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisRequest {
    pub experiment_id: String,
    pub output_code: String,
    #[serde(default)]
    pub factor_codes: Vec<String>,
    #[serde(default)]
    pub alpha: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExcludeRequest {
    pub runs: Vec<RunRef>,
    #[serde(default = "yes")]
    pub excluded: bool,
    #[serde(default)]
    pub reason: String,
}

fn yes() -> bool {
    true
}

/// Whether a fit uses one factor or a response surface over several.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Arity {
    Mono,
    Multi,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitRequest {
    pub experiment_id: String,
    pub output_code: String,
    pub factor_codes: Vec<String>,
    pub arity: Arity,
    /// For `fit`: the family to fit (mono default: best by criterion; multi
    /// default: rs_quadratic). For `simulate`: ignored.
    #[serde(default)]
    pub family: Option<ModelFamily>,
    /// Candidate families for `simulate`; defaults to every family of the arity.
    #[serde(default)]
    pub families: Vec<ModelFamily>,
    #[serde(default)]
    pub criterion: Criterion,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectiveRequest {
    pub output_code: String,
    /// Defaults to the sense declared in OUTPUTS.
    #[serde(default)]
    pub sense: Option<Sense>,
    #[serde(default = "unit_weight")]
    pub weight: f64,
    /// Stored model to use; defaults to the best stored model for the output.
    #[serde(default)]
    pub model_id: Option<String>,
}

fn unit_weight() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizeRequest {
    pub experiment_id: String,
    pub objectives: Vec<ObjectiveRequest>,
    #[serde(default)]
    pub bounds: BTreeMap<String, Interval>,
    #[serde(default)]
    pub fixed_factors: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WhatIfRequest {
    pub experiment_id: String,
    /// Outputs to predict; empty means every output with a stored model.
    #[serde(default)]
    pub output_codes: Vec<String>,
    pub settings: BTreeMap<String, f64>,
}

/// Exactly one of `time`, `run_index` or `settings` names the time source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareRequest {
    pub material: String,
    pub operation: String,
    /// Minutes, typed in directly.
    #[serde(default)]
    pub time: Option<f64>,
    #[serde(default)]
    pub experiment_id: Option<String>,
    #[serde(default)]
    pub output_code: Option<String>,
    /// Mean of the run's included replicates.
    #[serde(default)]
    pub run_index: Option<u32>,
    /// Prediction of the best stored model at these settings.
    #[serde(default)]
    pub settings: Option<BTreeMap<String, f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostRequest {
    /// Minutes.
    pub time: f64,
    /// cm³.
    #[serde(default)]
    pub electrode_wear_volume: f64,
    #[serde(default)]
    pub rates: CostRates,
    /// Takes the machine rate from this MACHINE row.
    #[serde(default)]
    pub machine_id: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReportRequest {
    pub kind: Table,
    pub filters: Vec<FieldFilter>,
}

// --------------------------------------------------------------- responses

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestResponse {
    pub ingested: usize,
    pub experiments: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunGroup {
    pub run_index: u32,
    pub replicate_indices: Vec<u32>,
    pub values: Vec<f64>,
    pub mean: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SuggestionScope {
    /// A single replicate stands out within its run.
    Replicate,
    /// The run's mean stands out among all runs; every replicate is listed.
    Run,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutlierSuggestion {
    pub run_reference: RunRef,
    pub scope: SuggestionScope,
    pub value: f64,
    pub statistic: f64,
    pub critical_value: f64,
    pub alpha: f64,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomogeneityAnalysis {
    pub experiment_id: String,
    pub output_code: String,
    pub runs: Vec<RunGroup>,
    pub excluded_observations: usize,
    pub report: HomogeneityReport,
    pub suggestions: Vec<OutlierSuggestion>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorLevels {
    pub factor_code: String,
    pub levels: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnovaAnalysis {
    pub experiment_id: String,
    pub output_code: String,
    pub factors: Vec<FactorLevels>,
    pub observations: usize,
    pub table: AnovaTable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExcludeResponse {
    pub updated: Vec<Observation>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResponse {
    pub stored: StoredModel,
    /// Present when the family was chosen by ranking candidates.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ranking: Option<ModelRanking>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateResponse {
    pub experiment_id: String,
    pub output_code: String,
    pub factor_codes: Vec<String>,
    pub ranking: ModelRanking,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizeResponse {
    pub id: String,
    pub experiment_id: String,
    pub model_ids: Vec<String>,
    pub report: OptimumReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WhatIfResponse {
    pub experiment_id: String,
    pub model_ids: Vec<String>,
    pub settings: BTreeMap<String, f64>,
    pub predictions: Vec<WhatIfPrediction>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostResponse {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub machine_id: Option<String>,
    pub rates: CostRates,
    pub breakdown: CostBreakdown,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub kind: Table,
    pub columns: Vec<String>,
    pub rows: Vec<Value>,
}

// -------------------------------------------------------------- operations

impl Workbench {
    pub fn new(store: Store, alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        Ok(Workbench { store, alpha })
    }

    pub fn open(dir: impl AsRef<std::path::Path>, alpha: f64) -> Result<Self> {
        Workbench::new(Store::open(dir)?, alpha)
    }

    pub fn store(&self) -> &Store {
        &self.store
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn initialize(dir: impl AsRef<std::path::Path>) -> Result<InitReport> {
        Ok(Store::initialize(dir)?.1)
    }

    // ---- entities

    pub fn entity_list(&self, table: Table, filters: &[FieldFilter]) -> Result<Vec<Value>> {
        self.store.list_json(table, filters)
    }

    pub fn entity_get(&self, table: Table, key: &str) -> Result<Value> {
        self.store.get_json(table, key)
    }

    pub fn entity_put(&self, table: Table, record: Value) -> Result<Value> {
        self.store.upsert_json(table, record)
    }

    /// Upsert through a keyed address; the record's own key must match `key`.
    pub fn entity_put_checked(&self, table: Table, key: &str, record: Value) -> Result<Value> {
        let expected = parse_key(table, key)?;
        let actual = Store::key_of_json(table, &record)?;
        if actual != expected {
            return Err(Error::validation("key", format!("record key {actual} does not match address {expected}")));
        }
        self.store.upsert_json(table, record)
    }

    pub fn entity_delete(&self, table: Table, key: &str) -> Result<DeleteReport> {
        self.store.delete(table, key)
    }

    // ---- planning and data

    pub fn plan(&self, req: &PlanRequest) -> Result<ProgramMatrix> {
        let factors = req
            .factors
            .iter()
            .map(|f| {
                let (low, high) = match (f.low, f.high) {
                    (Some(l), Some(h)) => (l, h),
                    (None, None) => {
                        let def = self.store.input_factor(&f.code)?;
                        (def.min_level, def.max_level)
                    }
                    _ => {
                        return Err(Error::validation(
                            "factors",
                            format!("factor {} needs both low and high, or neither", f.code),
                        ))
                    }
                };
                Ok(FactorRange { code: f.code.clone(), low, high })
            })
            .collect::<Result<Vec<_>>>()?;
        build_full_factorial(&DesignSpec {
            factors,
            replicates: req.replicates,
            center_points: req.center_points,
            levels: req.levels,
            axial: req.axial,
            shuffle_seed: req.shuffle_seed,
        })
    }

    pub fn ingest(&self, req: IngestRequest) -> Result<IngestResponse> {
        if req.observations.is_empty() {
            return Err(Error::validation("observations", "nothing to ingest"));
        }
        let experiments: BTreeSet<String> = req.observations.iter().map(|o| o.experiment_id.clone()).collect();
        let ingested = self.store.upsert_observations(req.observations)?;
        Ok(IngestResponse { ingested, experiments: experiments.into_iter().collect() })
    }

    pub fn exclude(&self, req: &ExcludeRequest) -> Result<ExcludeResponse> {
        if req.runs.is_empty() {
            return Err(Error::validation("runs", "no observations named"));
        }
        let reason = if req.excluded && req.reason.trim().is_empty() {
            "excluded by operator"
        } else {
            req.reason.trim()
        };
        let updated = req
            .runs
            .iter()
            .map(|r| self.store.set_exclusion(r, req.excluded, reason))
            .collect::<Result<Vec<_>>>()?;
        Ok(ExcludeResponse { updated })
    }

    // ---- statistics

    fn request_alpha(&self, alpha: Option<f64>) -> Result<f64> {
        let a = alpha.unwrap_or(self.alpha);
        check_alpha(a)?;
        Ok(a)
    }

    /// Included observations of an experiment, after checking the codes.
    fn dataset(&self, experiment_id: &str, output_code: &str, factor_codes: &[String]) -> Result<(Vec<Observation>, usize)> {
        self.store.output_param(output_code)?;
        for code in factor_codes {
            self.store.input_factor(code)?;
        }
        let all = self.store.observations(experiment_id)?;
        if all.is_empty() {
            return Err(Error::NotFound(format!("OUTCOME rows for experiment {experiment_id}")));
        }
        let total = all.len();
        let included: Vec<Observation> = all.into_iter().filter(|o| !o.excluded).collect();
        for o in &included {
            if !o.output_values.contains_key(output_code) {
                return Err(Error::validation(
                    format!("output_values.{output_code}"),
                    format!("observation {} has no {output_code} value", o.key()),
                ));
            }
            if let Some(c) = factor_codes.iter().find(|c| !o.factor_values.contains_key(*c)) {
                return Err(Error::validation(
                    format!("factor_values.{c}"),
                    format!("observation {} has no {c} value", o.key()),
                ));
            }
        }
        let excluded = total - included.len();
        Ok((included, excluded))
    }

    pub fn homogeneity(&self, req: &AnalysisRequest) -> Result<HomogeneityAnalysis> {
        let alpha = self.request_alpha(req.alpha)?;
        let (data, excluded) = self.dataset(&req.experiment_id, &req.output_code, &[])?;
        let mut by_run: BTreeMap<u32, Vec<&Observation>> = BTreeMap::new();
        for o in &data {
            by_run.entry(o.run_index).or_default().push(o);
        }
        let runs: Vec<RunGroup> = by_run
            .iter()
            .map(|(run, obs)| {
                let values: Vec<f64> = obs.iter().map(|o| o.output_values[&req.output_code]).collect();
                RunGroup {
                    run_index: *run,
                    replicate_indices: obs.iter().map(|o| o.replicate_index).collect(),
                    mean: values.iter().sum::<f64>() / values.len() as f64,
                    values,
                }
            })
            .collect();
        let groups: Vec<&[f64]> = runs.iter().map(|g| g.values.as_slice()).collect();
        let report = homogeneity_check(&groups, alpha)?;
        let mut suggestions = Vec::new();
        if !report.homogeneous {
            let reference = |run: u32, rep: u32| RunRef {
                experiment_id: req.experiment_id.clone(),
                run_index: run,
                replicate_index: rep,
            };
            for g in runs.iter().filter(|g| g.values.len() >= 3) {
                let scan = grubbs_scan(&g.values, alpha)?;
                if scan.verdict == Verdict::SuggestEliminate {
                    suggestions.push(OutlierSuggestion {
                        run_reference: reference(g.run_index, g.replicate_indices[scan.index]),
                        scope: SuggestionScope::Replicate,
                        value: scan.value,
                        statistic: scan.statistic,
                        critical_value: scan.critical_value,
                        alpha,
                        verdict: scan.verdict,
                    });
                }
            }
            if runs.len() >= 3 {
                let means: Vec<f64> = runs.iter().map(|g| g.mean).collect();
                let scan = grubbs_scan(&means, alpha)?;
                if scan.verdict == Verdict::SuggestEliminate {
                    let g = &runs[scan.index];
                    for (rep, value) in g.replicate_indices.iter().zip(&g.values) {
                        suggestions.push(OutlierSuggestion {
                            run_reference: reference(g.run_index, *rep),
                            scope: SuggestionScope::Run,
                            value: *value,
                            statistic: scan.statistic,
                            critical_value: scan.critical_value,
                            alpha,
                            verdict: scan.verdict,
                        });
                    }
                }
            }
        }
        Ok(HomogeneityAnalysis {
            experiment_id: req.experiment_id.clone(),
            output_code: req.output_code.clone(),
            runs,
            excluded_observations: excluded,
            report,
            suggestions,
        })
    }

    pub fn anova1(&self, req: &AnalysisRequest) -> Result<AnovaAnalysis> {
        let alpha = self.request_alpha(req.alpha)?;
        let [factor] = req.factor_codes.as_slice() else {
            return Err(Error::validation("factor_codes", "one-factor analysis needs exactly one factor"));
        };
        let (data, _) = self.dataset(&req.experiment_id, &req.output_code, &req.factor_codes)?;
        let levels = distinct_levels(&data, factor);
        let groups: Vec<Vec<f64>> = levels
            .iter()
            .map(|l| {
                data.iter()
                    .filter(|o| o.factor_values[factor] == *l)
                    .map(|o| o.output_values[&req.output_code])
                    .collect()
            })
            .collect();
        let table = anova_one_way(&groups, alpha)?;
        Ok(AnovaAnalysis {
            experiment_id: req.experiment_id.clone(),
            output_code: req.output_code.clone(),
            factors: vec![FactorLevels { factor_code: factor.clone(), levels }],
            observations: data.len(),
            table,
        })
    }

    pub fn anova2(&self, req: &AnalysisRequest) -> Result<AnovaAnalysis> {
        let alpha = self.request_alpha(req.alpha)?;
        let [fa, fb] = req.factor_codes.as_slice() else {
            return Err(Error::validation("factor_codes", "two-factor analysis needs exactly two factors"));
        };
        if fa == fb {
            return Err(Error::validation("factor_codes", "the two factors must differ"));
        }
        let (data, _) = self.dataset(&req.experiment_id, &req.output_code, &req.factor_codes)?;
        let la = distinct_levels(&data, fa);
        let lb = distinct_levels(&data, fb);
        let cells: Vec<Vec<Vec<f64>>> = la
            .iter()
            .map(|a| {
                lb.iter()
                    .map(|b| {
                        data.iter()
                            .filter(|o| o.factor_values[fa] == *a && o.factor_values[fb] == *b)
                            .map(|o| o.output_values[&req.output_code])
                            .collect()
                    })
                    .collect()
            })
            .collect();
        let table = anova_two_way(&cells, alpha)?;
        Ok(AnovaAnalysis {
            experiment_id: req.experiment_id.clone(),
            output_code: req.output_code.clone(),
            factors: vec![
                FactorLevels { factor_code: fa.clone(), levels: la },
                FactorLevels { factor_code: fb.clone(), levels: lb },
            ],
            observations: data.len(),
            table,
        })
    }

    // ---- modeling

    fn points(&self, req: &FitRequest) -> Result<Vec<(Vec<f64>, f64)>> {
        match (req.arity, req.factor_codes.len()) {
            (_, 0) => return Err(Error::validation("factor_codes", "at least one factor is required")),
            (Arity::Mono, n) if n != 1 => {
                return Err(Error::validation("factor_codes", "mono-variable models take exactly one factor"))
            }
            _ => {}
        }
        let unique: BTreeSet<&String> = req.factor_codes.iter().collect();
        if unique.len() != req.factor_codes.len() {
            return Err(Error::validation("factor_codes", "a factor is listed twice"));
        }
        let (data, _) = self.dataset(&req.experiment_id, &req.output_code, &req.factor_codes)?;
        Ok(data
            .iter()
            .map(|o| {
                let x = req.factor_codes.iter().map(|c| o.factor_values[c]).collect();
                (x, o.output_values[&req.output_code])
            })
            .collect())
    }

    fn label(&self, model: FittedModel, req: &FitRequest) -> Result<FittedModel> {
        let codes: Vec<&str> = req.factor_codes.iter().map(String::as_str).collect();
        model.labeled(&codes, &req.output_code)
    }

    fn candidate_families(req: &FitRequest) -> Result<Vec<ModelFamily>> {
        if req.families.is_empty() {
            return Ok(match req.arity {
                Arity::Mono => ModelFamily::MONO.to_vec(),
                Arity::Multi => ModelFamily::MULTI.to_vec(),
            });
        }
        let want_mono = req.arity == Arity::Mono;
        if let Some(f) = req.families.iter().find(|f| f.is_mono() != want_mono) {
            return Err(Error::validation("families", format!("{f} does not fit {:?} data", req.arity).to_lowercase()));
        }
        Ok(req.families.clone())
    }

    fn rank(&self, req: &FitRequest, points: &[(Vec<f64>, f64)], families: &[ModelFamily]) -> Result<ModelRanking> {
        let mut ranking = match req.arity {
            Arity::Mono => {
                let mono: Vec<(f64, f64)> = points.iter().map(|(x, y)| (x[0], *y)).collect();
                simulate_and_select(&mono, families, req.criterion)?
            }
            Arity::Multi => simulate_and_select_multi(points, families, req.criterion, None)?,
        };
        for e in &mut ranking.entries {
            e.model = self.label(e.model.clone(), req)?;
            e.formula = e.model.formula();
        }
        Ok(ranking)
    }

    /// Fits one model and keeps it in the store.
    pub fn fit(&self, req: &FitRequest) -> Result<FitResponse> {
        let points = self.points(req)?;
        let (model, ranking) = match (req.arity, req.family) {
            (Arity::Mono, None) => {
                let ranking = self.rank(req, &points, &Self::candidate_families(req)?)?;
                let best = ranking.best().cloned().ok_or_else(|| Error::NoModel("no family fits".into()))?;
                (best, Some(ranking))
            }
            (arity, family) => {
                let family = family.unwrap_or(ModelFamily::RsQuadratic);
                if family.is_mono() != (arity == Arity::Mono) {
                    return Err(Error::validation("family", format!("{family} does not fit {arity:?} data").to_lowercase()));
                }
                let model = match arity {
                    Arity::Mono => {
                        let mono: Vec<(f64, f64)> = points.iter().map(|(x, y)| (x[0], *y)).collect();
                        fit_mono(family, &mono)?
                    }
                    Arity::Multi => fit_response_surface(&points, family, None)?,
                };
                (self.label(model, req)?, None)
            }
        };
        let stored = self.store.save_model(StoredModel::new(&req.experiment_id, model))?;
        Ok(FitResponse { stored, ranking })
    }

    /// Fits every candidate family and ranks them; nothing is stored.
    pub fn simulate(&self, req: &FitRequest) -> Result<SimulateResponse> {
        let points = self.points(req)?;
        let ranking = self.rank(req, &points, &Self::candidate_families(req)?)?;
        Ok(SimulateResponse {
            experiment_id: req.experiment_id.clone(),
            output_code: req.output_code.clone(),
            factor_codes: req.factor_codes.clone(),
            ranking,
        })
    }

    /// Stored model by id, or the best stored model for an output.
    fn stored_model(&self, experiment_id: &str, output_code: &str, model_id: Option<&str>) -> Result<StoredModel> {
        let models = self.store.models()?;
        if let Some(id) = model_id {
            let m = models
                .into_iter()
                .find(|m| m.id == id)
                .ok_or_else(|| Error::NotFound(format!("MODELS:{id}")))?;
            if m.experiment_id != experiment_id || m.output_code != output_code {
                return Err(Error::validation(
                    "model_id",
                    format!("model {id} belongs to {}/{}", m.experiment_id, m.output_code),
                ));
            }
            return Ok(m);
        }
        let mut candidates: Vec<StoredModel> = models
            .into_iter()
            .filter(|m| m.experiment_id == experiment_id && m.output_code == output_code)
            .collect();
        candidates.sort_by(|a, b| model_order(a, b));
        candidates.into_iter().next().ok_or_else(|| {
            Error::NoModel(format!(
                "no fitted model for {output_code} in experiment {experiment_id}; fit one first"
            ))
        })
    }

    pub fn optimize(&self, req: &OptimizeRequest) -> Result<OptimizeResponse> {
        if req.objectives.is_empty() {
            return Err(Error::validation("objectives", "at least one objective is required"));
        }
        let mut model_ids = Vec::new();
        let mut objectives = Vec::new();
        for o in &req.objectives {
            let stored = self.stored_model(&req.experiment_id, &o.output_code, o.model_id.as_deref())?;
            let sense = match o.sense {
                Some(s) => s,
                None => self.store.output_param(&o.output_code)?.sense,
            };
            model_ids.push(stored.id.clone());
            objectives.push(Objective { model: stored.model, sense, weight: o.weight });
        }
        let report = optimize::optimize(&OptimizationProblem {
            objectives,
            bounds: req.bounds.clone(),
            fixed_factors: req.fixed_factors.clone(),
        })?;
        let saved = self.store.save_optimization(&req.experiment_id, report)?;
        Ok(OptimizeResponse {
            id: saved.id,
            experiment_id: req.experiment_id.clone(),
            model_ids,
            report: saved.report,
        })
    }

    pub fn what_if(&self, req: &WhatIfRequest) -> Result<WhatIfResponse> {
        let outputs: Vec<String> = if req.output_codes.is_empty() {
            let set: BTreeSet<String> = self
                .store
                .models()?
                .into_iter()
                .filter(|m| m.experiment_id == req.experiment_id)
                .map(|m| m.output_code)
                .collect();
            if set.is_empty() {
                return Err(Error::NoModel(format!(
                    "no fitted model in experiment {}; fit one first",
                    req.experiment_id
                )));
            }
            set.into_iter().collect()
        } else {
            req.output_codes.clone()
        };
        let stored = outputs
            .iter()
            .map(|o| self.stored_model(&req.experiment_id, o, None))
            .collect::<Result<Vec<_>>>()?;
        let models: Vec<FittedModel> = stored.iter().map(|s| s.model.clone()).collect();
        let predictions = optimize::what_if(&models, &req.settings)?;
        Ok(WhatIfResponse {
            experiment_id: req.experiment_id.clone(),
            model_ids: stored.into_iter().map(|s| s.id).collect(),
            settings: req.settings.clone(),
            predictions,
        })
    }

    // ---- economics

    pub fn compare(&self, req: &CompareRequest) -> Result<Comparison> {
        let sources = [req.time.is_some(), req.run_index.is_some(), req.settings.is_some()];
        if sources.iter().filter(|s| **s).count() != 1 {
            return Err(Error::validation("time", "give exactly one of time, run_index or settings"));
        }
        let need = |v: &Option<String>, field: &str| {
            v.clone().ok_or_else(|| Error::validation(field, format!("{field} is required for this time source")))
        };
        let (time, source) = if let Some(t) = req.time {
            (t, TimeSource::Given)
        } else if let Some(run) = req.run_index {
            let exp = need(&req.experiment_id, "experiment_id")?;
            let out = need(&req.output_code, "output_code")?;
            let values: Vec<f64> = self
                .store
                .observations(&exp)?
                .into_iter()
                .filter(|o| o.run_index == run && !o.excluded)
                .filter_map(|o| o.output_values.get(&out).copied())
                .collect();
            if values.is_empty() {
                return Err(Error::NotFound(format!("included {out} values for {exp} run {run}")));
            }
            (values.iter().sum::<f64>() / values.len() as f64, TimeSource::Measured)
        } else {
            let exp = need(&req.experiment_id, "experiment_id")?;
            let out = need(&req.output_code, "output_code")?;
            let model = self.stored_model(&exp, &out, None)?;
            let settings = req.settings.clone().unwrap_or_default();
            (model.model.predict_named(&settings)?.value, TimeSource::Predicted)
        };
        econ::comparative_determination(time, source, &req.material, &req.operation, &self.store.benchmarks()?)
    }

    pub fn cost(&self, req: &CostRequest) -> Result<CostResponse> {
        let mut rates = req.rates.clone();
        if let Some(id) = &req.machine_id {
            let machine = self
                .store
                .machines()?
                .into_iter()
                .find(|m| &m.id == id)
                .ok_or_else(|| Error::NotFound(format!("MACHINE:{id}")))?;
            rates.machine_rate = machine.hourly_rate;
        }
        let time = econ::decimal_from_f64("time", req.time)?;
        let wear = econ::decimal_from_f64("electrode_wear_volume", req.electrode_wear_volume)?;
        let breakdown = econ::processing_cost(time, &rates, wear)?;
        Ok(CostResponse { machine_id: req.machine_id.clone(), rates, breakdown })
    }

    // ---- listings

    pub fn report(&self, req: &ReportRequest) -> Result<Report> {
        let mut rows = self.store.list_json(req.kind, &req.filters)?;
        if req.kind == Table::Models {
            let mut typed: Vec<StoredModel> = rows
                .into_iter()
                .map(serde_json::from_value)
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Numerical(e.to_string()))?;
            typed.sort_by(model_order);
            rows = typed
                .iter()
                .map(|m| serde_json::to_value(m).map_err(|e| Error::Numerical(e.to_string())))
                .collect::<Result<_>>()?;
        }
        Ok(Report {
            kind: req.kind,
            columns: crate::render::columns(req.kind).iter().map(|c| c.to_string()).collect(),
            rows,
        })
    }
}

/// Best first: higher adjusted r², then lower rmse, then id.
fn model_order(a: &StoredModel, b: &StoredModel) -> std::cmp::Ordering {
    let adj = |m: &StoredModel| m.model.adj_r2.unwrap_or(f64::NEG_INFINITY);
    adj(b)
        .total_cmp(&adj(a))
        .then_with(|| a.model.rmse.total_cmp(&b.model.rmse))
        .then_with(|| a.id.cmp(&b.id))
}

fn distinct_levels(data: &[Observation], factor: &str) -> Vec<f64> {
    let mut levels: Vec<f64> = data.iter().map(|o| o.factor_values[factor]).collect();
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    levels
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::validation("alpha", format!("must lie strictly between 0 and 1, got {alpha}")))
    }
}
