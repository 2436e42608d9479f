//! Command-line front end.
//!
//! Each subcommand builds the same request the HTTP service accepts and
//! prints the response as a text table or, with `--format json`, as the
//! JSON payload the service would return.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::{Read as _, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use edm_core::doe::Levels;
use edm_core::econ::CostRates;
use edm_core::model::{Criterion, Interval, ModelFamily};
use edm_core::optimize::Sense;
use edm_core::stats::DEFAULT_ALPHA;
use edm_core::store::{FieldFilter, Observation, RunRef, Store, Table};
use edm_core::{Error, ErrorKind, Result};
use rust_decimal::Decimal;
use serde::Serialize;
use serde_json::Value;

use crate::render::{Listing, Render};
use crate::service;
use crate::workbench::{
    AnalysisRequest, Arity, CompareRequest, CostRequest, ExcludeRequest, FitRequest, IngestRequest,
    ObjectiveRequest, OptimizeRequest, PlanFactor, PlanRequest, ReportRequest, WhatIfRequest, Workbench,
};

/// Exit status for a usage error, following the BSD sysexits convention.
pub const EXIT_USAGE: i32 = 64;
/// Exit status for an unreadable or unwritable store.
pub const EXIT_IO: i32 = 74;

pub fn exit_code(e: &Error) -> i32 {
    match e.kind() {
        ErrorKind::Validation => 1,
        ErrorKind::NotFound => 2,
        ErrorKind::Numerical => 3,
        ErrorKind::Usage => EXIT_USAGE,
        ErrorKind::Io => EXIT_IO,
    }
}

#[derive(Debug, Parser)]
#[command(name = "edm", version, about = "Workbench for planning, analysing and optimizing EDM experiments")]
pub struct Cli {
    /// Store directory.
    #[arg(long, global = true, env = "EDM_STORE", default_value = "edm-store")]
    pub store: PathBuf,
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Default significance level for statistical tests.
    #[arg(long, global = true, default_value_t = DEFAULT_ALPHA)]
    pub alpha: f64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Create an empty store, erasing any existing data.
    Init {
        /// Confirm erasing an existing store.
        #[arg(long)]
        yes: bool,
    },
    /// Add, delete, show or list table rows.
    #[command(subcommand)]
    Entity(EntityCommand),
    /// Print the program matrix of a full factorial experiment.
    Plan(PlanArgs),
    /// Load observations from a CSV or JSON-lines file.
    Ingest(IngestArgs),
    /// Statistical analysis of one output.
    #[command(subcommand)]
    Analyze(AnalyzeCommand),
    /// Exclude observations from analyses, or include them again.
    Exclude(ExcludeArgs),
    /// Fit a model and keep it in the store.
    #[command(subcommand)]
    Model(ModelCommand),
    /// Fit every candidate family and rank them.
    #[command(subcommand)]
    Simulate(ModelCommand),
    /// Search the factor box for the best settings.
    Optimize(OptimizeArgs),
    /// Predict outputs at given settings from stored models.
    Whatif(WhatIfArgs),
    /// Compare a processing time with conventional machining.
    Compare(CompareArgs),
    /// Cost of one processing job.
    Cost(CostArgs),
    /// List a table, the stored models or the stored optimizations.
    Report(ReportArgs),
    /// Run the HTTP service.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        listen: SocketAddr,
    },
}

#[derive(Debug, Subcommand)]
pub enum EntityCommand {
    /// Insert or replace rows.
    Add {
        table: Table,
        /// One record as JSON.
        #[arg(long, conflicts_with = "file", required_unless_present = "file")]
        json: Option<String>,
        /// JSON-lines file (or JSON array); `-` reads stdin.
        #[arg(long)]
        file: Option<PathBuf>,
    },
    /// Delete a row by key (`a:b:c` for composite keys).
    Del { table: Table, key: String },
    /// Show one row.
    Get { table: Table, key: String },
    /// List rows, optionally filtered.
    List {
        table: Table,
        /// Keep rows whose field equals the value; dotted paths reach nested fields.
        #[arg(long = "where", value_name = "FIELD=VALUE")]
        filters: Vec<FieldFilter>,
    },
}

#[derive(Debug, Args)]
pub struct PlanArgs {
    /// Factor code, with an explicit range as CODE=LOW:HIGH; otherwise the INPUTS range is used.
    #[arg(long = "factor", required = true)]
    factors: Vec<String>,
    #[arg(long, default_value_t = 1)]
    replicates: u32,
    #[arg(long, default_value_t = 0)]
    center_points: u32,
    /// Levels per factor (2 or 3).
    #[arg(long, default_value_t = 2)]
    levels: u8,
    /// Add face-centered axial runs, so square terms can be fitted.
    #[arg(long)]
    axial: bool,
    /// Shuffle run order with this seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// `.csv` files have columns experiment_id, run_index, replicate_index and
    /// one column per factor or output code; anything else is read as JSON lines.
    #[arg(long)]
    file: PathBuf,
    /// Experiment for CSV rows without an experiment_id column.
    #[arg(long)]
    experiment: Option<String>,
}

#[derive(Debug, Args)]
pub struct AnalysisArgs {
    #[arg(long)]
    experiment: String,
    #[arg(long)]
    output: String,
    #[arg(long = "factor")]
    factors: Vec<String>,
}

#[derive(Debug, Subcommand)]
pub enum AnalyzeCommand {
    /// Cochran variance homogeneity over runs, with outlier suggestions.
    Homogeneity(AnalysisArgs),
    /// One-factor analysis of variance.
    Anova1(AnalysisArgs),
    /// Two-factor analysis of variance.
    Anova2(AnalysisArgs),
}

#[derive(Debug, Args)]
pub struct ExcludeArgs {
    #[arg(long)]
    experiment: String,
    #[arg(long)]
    run: u32,
    /// Replicate to exclude; all replicates of the run when omitted.
    #[arg(long)]
    replicate: Vec<u32>,
    #[arg(long, default_value = "")]
    reason: String,
    /// Include the observations again instead.
    #[arg(long)]
    include: bool,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    #[arg(long)]
    experiment: String,
    #[arg(long)]
    output: String,
    #[arg(long = "factor", required = true)]
    factors: Vec<String>,
    /// Family to fit; `model mono` picks the best family when omitted.
    #[arg(long)]
    family: Option<ModelFamily>,
    /// Candidate families for `simulate`.
    #[arg(long, value_delimiter = ',')]
    families: Vec<ModelFamily>,
    #[arg(long, default_value = "adj_r2")]
    criterion: Criterion,
}

#[derive(Debug, Subcommand)]
pub enum ModelCommand {
    /// One factor against one output.
    Mono(ModelArgs),
    /// Response surface over several factors.
    Multi(ModelArgs),
}

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    #[arg(long)]
    experiment: String,
    /// Output to optimize; its sense comes from --minimize/--maximize or OUTPUTS.
    #[arg(long = "output")]
    outputs: Vec<String>,
    #[arg(long, conflicts_with = "maximize")]
    minimize: bool,
    #[arg(long)]
    maximize: bool,
    /// Weighted objective as CODE:minimize|maximize[:WEIGHT].
    #[arg(long = "objective")]
    objectives: Vec<String>,
    /// Use this stored model (single objective only).
    #[arg(long)]
    model: Option<String>,
    /// Search range as CODE=LOW:HIGH.
    #[arg(long = "bound")]
    bounds: Vec<String>,
    /// Hold a factor at CODE=VALUE.
    #[arg(long = "fix")]
    fixed: Vec<String>,
}

#[derive(Debug, Args)]
pub struct WhatIfArgs {
    #[arg(long)]
    experiment: String,
    #[arg(long = "output")]
    outputs: Vec<String>,
    /// Factor setting as CODE=VALUE.
    #[arg(long = "set", required = true)]
    settings: Vec<String>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[arg(long)]
    material: String,
    #[arg(long)]
    operation: String,
    /// Processing time in minutes.
    #[arg(long)]
    time: Option<f64>,
    #[arg(long)]
    experiment: Option<String>,
    #[arg(long)]
    output: Option<String>,
    /// Use the measured mean of this run.
    #[arg(long)]
    run: Option<u32>,
    /// Use the model prediction at CODE=VALUE settings.
    #[arg(long = "set")]
    settings: Vec<String>,
}

#[derive(Debug, Args)]
pub struct CostArgs {
    /// Processing time in minutes.
    #[arg(long)]
    time: f64,
    /// Electrode wear volume in cm3.
    #[arg(long, default_value_t = 0.0)]
    wear: f64,
    /// Take the machine rate from this MACHINE row.
    #[arg(long)]
    machine: Option<String>,
    #[arg(long, default_value = "0")]
    machine_rate: Decimal,
    #[arg(long, default_value = "0")]
    labor_rate: Decimal,
    #[arg(long, default_value = "0")]
    electrode_wear_cost: Decimal,
    #[arg(long, default_value = "0")]
    dielectric_cost: Decimal,
    #[arg(long, default_value = "0")]
    energy_rate: Decimal,
    #[arg(long, default_value = "0")]
    power_draw: Decimal,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// A table name, `models` or `optimizations`.
    kind: Table,
    /// Shorthand for --where experiment_id=ID.
    #[arg(long)]
    experiment: Option<String>,
    #[arg(long = "where", value_name = "FIELD=VALUE")]
    filters: Vec<FieldFilter>,
}

/// Parses arguments, runs the command and returns the exit status.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { write!(err, "{text}") } else { write!(out, "{text}") };
            return code;
        }
    };
    let format = cli.format;
    match execute(cli) {
        Ok(Output { text, json }) => {
            let _ = match format {
                Format::Text => write!(out, "{text}"),
                Format::Json => writeln!(out, "{}", serde_json::to_string_pretty(&json).unwrap_or_default()),
            };
            0
        }
        Err(e) => {
            let _ = match format {
                Format::Text => writeln!(err, "error: {e}"),
                Format::Json => writeln!(err, "{}", service::error_body(&e)),
            };
            exit_code(&e)
        }
    }
}

struct Output {
    text: String,
    json: Value,
}

fn output<T: Serialize + Render>(v: T) -> Result<Output> {
    Ok(Output {
        text: v.to_text(),
        json: serde_json::to_value(&v).map_err(|e| Error::Numerical(e.to_string()))?,
    })
}

fn execute(cli: Cli) -> Result<Output> {
    let store_dir = cli.store.clone();
    let alpha = cli.alpha;
    let wb = || Workbench::open(&store_dir, alpha);
    match cli.command {
        Command::Init { yes } => {
            if store_dir.join("meta").exists() && !yes {
                return Err(Error::Usage(format!(
                    "{} already holds a store; pass --yes to erase it",
                    store_dir.display()
                )));
            }
            output(Workbench::initialize(&store_dir)?)
        }
        Command::Entity(cmd) => entity(&wb()?, cmd),
        Command::Plan(a) => output(wb()?.plan(&plan_request(a)?)?),
        Command::Ingest(a) => {
            let wb = wb()?;
            let observations = read_observations(wb.store(), &a.file, a.experiment.as_deref())?;
            output(wb.ingest(IngestRequest { observations })?)
        }
        Command::Analyze(cmd) => {
            let wb = wb()?;
            match cmd {
                AnalyzeCommand::Homogeneity(a) => output(wb.homogeneity(&analysis_request(a))?),
                AnalyzeCommand::Anova1(a) => output(wb.anova1(&analysis_request(a))?),
                AnalyzeCommand::Anova2(a) => output(wb.anova2(&analysis_request(a))?),
            }
        }
        Command::Exclude(a) => {
            let wb = wb()?;
            let replicates = if a.replicate.is_empty() {
                let reps: Vec<u32> = wb
                    .store()
                    .observations(&a.experiment)?
                    .into_iter()
                    .filter(|o| o.run_index == a.run)
                    .map(|o| o.replicate_index)
                    .collect();
                if reps.is_empty() {
                    return Err(Error::NotFound(format!("OUTCOME:{}:{}", a.experiment, a.run)));
                }
                reps
            } else {
                a.replicate.clone()
            };
            let runs = replicates
                .into_iter()
                .map(|r| RunRef { experiment_id: a.experiment.clone(), run_index: a.run, replicate_index: r })
                .collect();
            output(wb.exclude(&ExcludeRequest { runs, excluded: !a.include, reason: a.reason })?)
        }
        Command::Model(cmd) => output(wb()?.fit(&fit_request(cmd))?),
        Command::Simulate(cmd) => output(wb()?.simulate(&fit_request(cmd))?),
        Command::Optimize(a) => output(wb()?.optimize(&optimize_request(a)?)?),
        Command::Whatif(a) => output(wb()?.what_if(&WhatIfRequest {
            experiment_id: a.experiment,
            output_codes: a.outputs,
            settings: assignments(&a.settings, "set")?,
        })?),
        Command::Compare(a) => {
            let settings = if a.settings.is_empty() { None } else { Some(assignments(&a.settings, "set")?) };
            output(wb()?.compare(&CompareRequest {
                material: a.material,
                operation: a.operation,
                time: a.time,
                experiment_id: a.experiment,
                output_code: a.output,
                run_index: a.run,
                settings,
            })?)
        }
        Command::Cost(a) => output(wb()?.cost(&CostRequest {
            time: a.time,
            electrode_wear_volume: a.wear,
            rates: CostRates {
                machine_rate: a.machine_rate,
                labor_rate: a.labor_rate,
                electrode_wear_cost: a.electrode_wear_cost,
                dielectric_cost: a.dielectric_cost,
                energy_rate: a.energy_rate,
                power_draw: a.power_draw,
            },
            machine_id: a.machine,
        })?),
        Command::Report(a) => {
            let mut filters = a.filters;
            if let Some(e) = a.experiment {
                filters.insert(0, FieldFilter { field: "experiment_id".into(), value: e });
            }
            output(wb()?.report(&ReportRequest { kind: a.kind, filters })?)
        }
        Command::Serve { listen } => {
            let wb = wb()?;
            let runtime = tokio::runtime::Runtime::new().map_err(|e| Error::io(&store_dir, e))?;
            runtime.block_on(service::serve(wb, listen)).map_err(|e| Error::io(&store_dir, e))?;
            Ok(Output { text: String::new(), json: Value::Null })
        }
    }
}

fn entity(wb: &Workbench, cmd: EntityCommand) -> Result<Output> {
    match cmd {
        EntityCommand::Add { table, json: Some(text), .. } => {
            let record: Value = serde_json::from_str(&text).map_err(|e| Error::validation("json", e.to_string()))?;
            output(wb.entity_put(table, record)?)
        }
        EntityCommand::Add { table, file, .. } => {
            let path = file.ok_or_else(|| Error::Usage("give --json or --file".into()))?;
            let records = read_json_records(&path)?;
            let stored = records
                .into_iter()
                .map(|r| wb.entity_put(table, r))
                .collect::<Result<Vec<_>>>()?;
            Ok(Output { text: Listing { table, rows: &stored }.to_text(), json: Value::Array(stored) })
        }
        EntityCommand::Del { table, key } => output(wb.entity_delete(table, &key)?),
        EntityCommand::Get { table, key } => output(wb.entity_get(table, &key)?),
        EntityCommand::List { table, filters } => {
            let rows = wb.entity_list(table, &filters)?;
            Ok(Output { text: Listing { table, rows: &rows }.to_text(), json: Value::Array(rows) })
        }
    }
}

fn analysis_request(a: AnalysisArgs) -> AnalysisRequest {
    AnalysisRequest { experiment_id: a.experiment, output_code: a.output, factor_codes: a.factors, alpha: None }
}

fn fit_request(cmd: ModelCommand) -> FitRequest {
    let (arity, a) = match cmd {
        ModelCommand::Mono(a) => (Arity::Mono, a),
        ModelCommand::Multi(a) => (Arity::Multi, a),
    };
    FitRequest {
        experiment_id: a.experiment,
        output_code: a.output,
        factor_codes: a.factors,
        arity,
        family: a.family,
        families: a.families,
        criterion: a.criterion,
    }
}

fn plan_request(a: PlanArgs) -> Result<PlanRequest> {
    let levels = match a.levels {
        2 => Levels::Two,
        3 => Levels::Three,
        n => return Err(Error::validation("levels", format!("{n} levels are not supported; use 2 or 3"))),
    };
    let factors = a
        .factors
        .iter()
        .map(|f| match f.split_once('=') {
            None => Ok(PlanFactor { code: f.trim().to_string(), low: None, high: None }),
            Some((code, range)) => {
                let i = range_value(range, "factor")?;
                Ok(PlanFactor { code: code.trim().to_string(), low: Some(i.low), high: Some(i.high) })
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PlanRequest {
        factors,
        replicates: a.replicates,
        center_points: a.center_points,
        levels,
        axial: a.axial,
        shuffle_seed: a.seed,
    })
}

fn optimize_request(a: OptimizeArgs) -> Result<OptimizeRequest> {
    let flag_sense = match (a.minimize, a.maximize) {
        (true, _) => Some(Sense::Minimize),
        (_, true) => Some(Sense::Maximize),
        _ => None,
    };
    let mut objectives: Vec<ObjectiveRequest> = a
        .outputs
        .iter()
        .map(|o| ObjectiveRequest { output_code: o.clone(), sense: flag_sense, weight: 1.0, model_id: None })
        .collect();
    for spec in &a.objectives {
        let parts: Vec<&str> = spec.split(':').collect();
        let (code, sense, weight) = match parts.as_slice() {
            [c, s] => (c, s, "1"),
            [c, s, w] => (c, s, *w),
            _ => return Err(Error::Usage(format!("objective {spec:?} must look like CODE:minimize[:WEIGHT]"))),
        };
        let sense = match *sense {
            "minimize" | "min" => Sense::Minimize,
            "maximize" | "max" => Sense::Maximize,
            other => return Err(Error::validation("objective", format!("unknown sense {other:?}"))),
        };
        let weight = weight
            .parse::<f64>()
            .map_err(|_| Error::validation("weight", format!("not a number: {weight:?}")))?;
        objectives.push(ObjectiveRequest { output_code: code.to_string(), sense: Some(sense), weight, model_id: None });
    }
    if let Some(id) = a.model {
        match objectives.as_mut_slice() {
            [only] => only.model_id = Some(id),
            _ => return Err(Error::Usage("--model needs exactly one objective".into())),
        }
    }
    let bounds = a
        .bounds
        .iter()
        .map(|b| {
            let (code, range) = b
                .split_once('=')
                .ok_or_else(|| Error::Usage(format!("bound {b:?} must look like CODE=LOW:HIGH")))?;
            Ok((code.trim().to_string(), range_value(range, "bound")?))
        })
        .collect::<Result<BTreeMap<_, _>>>()?;
    Ok(OptimizeRequest {
        experiment_id: a.experiment,
        objectives,
        bounds,
        fixed_factors: assignments(&a.fixed, "fix")?,
    })
}

fn range_value(text: &str, field: &str) -> Result<Interval> {
    let (l, h) = text
        .split_once(':')
        .ok_or_else(|| Error::Usage(format!("{field} range {text:?} must look like LOW:HIGH")))?;
    let parse = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|_| Error::validation(field, format!("not a number: {s:?}")))
    };
    Ok(Interval { low: parse(l)?, high: parse(h)? })
}

fn assignments(items: &[String], field: &str) -> Result<BTreeMap<String, f64>> {
    items
        .iter()
        .map(|s| {
            let (code, value) = s
                .split_once('=')
                .ok_or_else(|| Error::Usage(format!("--{field} {s:?} must look like CODE=VALUE")))?;
            let v = value
                .trim()
                .parse::<f64>()
                .map_err(|_| Error::validation(field, format!("not a number: {value:?}")))?;
            Ok((code.trim().to_string(), v))
        })
        .collect()
}

fn read_text(path: &Path) -> Result<String> {
    if path == Path::new("-") {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s).map_err(|e| Error::io(path, e))?;
        return Ok(s);
    }
    std::fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::NotFound(format!("file {}", path.display())),
        _ => Error::io(path, e),
    })
}

/// JSON lines, or a single JSON array.
fn read_json_records(path: &Path) -> Result<Vec<Value>> {
    let text = read_text(path)?;
    if text.trim_start().starts_with('[') {
        return serde_json::from_str(&text).map_err(|e| Error::validation("file", e.to_string()));
    }
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| Error::validation("file", format!("line {}: {e}", i + 1)))
        })
        .collect()
}

fn read_observations(store: &Store, path: &Path, experiment: Option<&str>) -> Result<Vec<Observation>> {
    let is_csv = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    if !is_csv {
        return read_json_records(path)?
            .into_iter()
            .map(|v| serde_json::from_value(v).map_err(|e| Error::validation("observations", e.to_string())))
            .collect();
    }
    let text = read_text(path)?;
    let inputs: Vec<String> = store.input_factors()?.into_iter().map(|f| f.code).collect();
    let outputs: Vec<String> = store.output_params()?.into_iter().map(|f| f.code).collect();
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| Error::validation("file", e.to_string()))?.clone();
    for h in headers.iter() {
        let known = matches!(h, "experiment_id" | "run_index" | "replicate_index" | "excluded" | "exclusion_reason");
        if !known && !inputs.iter().any(|c| c == h) && !outputs.iter().any(|c| c == h) {
            return Err(Error::Referential(format!(
                "column {h:?} is neither a declared input factor nor an output parameter"
            )));
        }
    }
    let mut observations = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 2;
        let record = record.map_err(|e| Error::validation("file", format!("line {line}: {e}")))?;
        let mut obs = Observation {
            experiment_id: experiment.unwrap_or_default().to_string(),
            run_index: 0,
            replicate_index: 1,
            factor_values: BTreeMap::new(),
            output_values: BTreeMap::new(),
            excluded: false,
            exclusion_reason: String::new(),
        };
        for (h, v) in headers.iter().zip(record.iter()) {
            if v.is_empty() {
                continue;
            }
            let bad = |what: &str| Error::validation(h, format!("line {line}: {v:?} is not {what}"));
            match h {
                "experiment_id" => obs.experiment_id = v.to_string(),
                "run_index" => obs.run_index = v.parse().map_err(|_| bad("an integer"))?,
                "replicate_index" => obs.replicate_index = v.parse().map_err(|_| bad("an integer"))?,
                "excluded" => obs.excluded = v.parse().map_err(|_| bad("true or false"))?,
                "exclusion_reason" => obs.exclusion_reason = v.to_string(),
                code => {
                    let x: f64 = v.parse().map_err(|_| bad("a number"))?;
                    if inputs.iter().any(|c| c == code) {
                        obs.factor_values.insert(code.to_string(), x);
                    } else {
                        obs.output_values.insert(code.to_string(), x);
                    }
                }
            }
        }
        observations.push(obs);
    }
    Ok(observations)
}
