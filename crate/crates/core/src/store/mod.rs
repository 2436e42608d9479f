//! File-backed experiment store.
//!
//! A store is a directory holding one JSON-lines file per table
//! (`<store>/<TABLE>.jsonl`, one record per line, sorted by primary key) and a
//! `<store>/meta` file with `schema_version=1`. Files are rewritten whole
//! through a temporary file and a rename, so readers always see a complete
//! table. Mutations are serialized through one writer lock per store handle.

mod records;

pub use records::{
    ClassicBenchmark, InputFactorDef, Key, KeyPart, MachineRecord, MediumClass, ObjectProperty,
    Observation, OutputParamDef, OwnerKind, ProcessedObject, Record, RunRef, StoredModel,
    StoredOptimization, TransferObject, WorkingEnvironment,
};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::{Arc, RwLock};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;
const META_FILE: &str = "meta";

/// The ten tables plus the two result collections.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Table {
    #[serde(rename = "PO")]
    Po,
    #[serde(rename = "POPROPERTIES")]
    PoProperties,
    #[serde(rename = "TO")]
    To,
    #[serde(rename = "TOPROPERTIES")]
    ToProperties,
    #[serde(rename = "OUTCOME")]
    Outcome,
    #[serde(rename = "INPUTS")]
    Inputs,
    #[serde(rename = "OUTPUTS")]
    Outputs,
    #[serde(rename = "WE")]
    We,
    #[serde(rename = "MACHINE")]
    Machine,
    #[serde(rename = "CLASSIC")]
    Classic,
    #[serde(rename = "MODELS")]
    Models,
    #[serde(rename = "OPTIMIZATIONS")]
    Optimizations,
}

impl Table {
    /// The ten data tables, in menu order.
    pub const DATA: [Table; 10] = [
        Table::Po,
        Table::PoProperties,
        Table::To,
        Table::ToProperties,
        Table::Outcome,
        Table::Inputs,
        Table::Outputs,
        Table::We,
        Table::Machine,
        Table::Classic,
    ];

    pub const ALL: [Table; 12] = [
        Table::Po,
        Table::PoProperties,
        Table::To,
        Table::ToProperties,
        Table::Outcome,
        Table::Inputs,
        Table::Outputs,
        Table::We,
        Table::Machine,
        Table::Classic,
        Table::Models,
        Table::Optimizations,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Table::Po => "PO",
            Table::PoProperties => "POPROPERTIES",
            Table::To => "TO",
            Table::ToProperties => "TOPROPERTIES",
            Table::Outcome => "OUTCOME",
            Table::Inputs => "INPUTS",
            Table::Outputs => "OUTPUTS",
            Table::We => "WE",
            Table::Machine => "MACHINE",
            Table::Classic => "CLASSIC",
            Table::Models => "MODELS",
            Table::Optimizations => "OPTIMIZATIONS",
        }
    }

    fn file_name(self) -> String {
        format!("{}.jsonl", self.name())
    }

    /// Number of `:`-separated parts in this table's key.
    fn key_arity(self) -> usize {
        match self {
            Table::PoProperties | Table::ToProperties => 2,
            Table::Outcome => 3,
            _ => 1,
        }
    }
}

impl fmt::Display for Table {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Table {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let upper = s.trim().to_ascii_uppercase();
        Table::ALL
            .iter()
            .find(|t| t.name() == upper)
            .copied()
            .ok_or_else(|| {
                let names: Vec<&str> = Table::ALL.iter().map(|t| t.name()).collect();
                Error::Usage(format!("unknown table {s:?}; expected one of {}", names.join(", ")))
            })
    }
}

/// Equality filter on a (possibly dotted) record field.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldFilter {
    pub field: String,
    pub value: String,
}

impl FromStr for FieldFilter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.split_once('=') {
            Some((f, v)) if !f.trim().is_empty() => Ok(FieldFilter {
                field: f.trim().to_string(),
                value: v.trim().to_string(),
            }),
            _ => Err(Error::Usage(format!("filter {s:?} must look like field=value"))),
        }
    }
}

impl FieldFilter {
    pub fn matches(&self, record: &Value) -> bool {
        let mut cur = record;
        for part in self.field.split('.') {
            match cur.get(part) {
                Some(v) => cur = v,
                None => return false,
            }
        }
        match cur {
            Value::String(s) => s == &self.value,
            Value::Number(n) => {
                n.to_string() == self.value
                    || match (n.as_f64(), self.value.parse::<f64>()) {
                        (Some(a), Ok(b)) => a == b,
                        _ => false,
                    }
            }
            Value::Bool(b) => b.to_string() == self.value,
            Value::Null => self.value.is_empty(),
            other => other.to_string() == self.value,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitReport {
    pub store: String,
    pub schema_version: u32,
    pub counts: BTreeMap<Table, usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeleteReport {
    pub table: Table,
    pub key: String,
    /// Dependent rows removed along with the record, as `TABLE:key`.
    pub cascaded: Vec<String>,
}

/// Handle to a store directory. Cloning shares the writer lock.
#[derive(Debug, Clone)]
pub struct Store {
    dir: PathBuf,
    lock: Arc<RwLock<()>>,
}

impl Store {
    /// Opens an initialized store; fails if the directory has no `meta` file.
    pub fn open(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref().to_path_buf();
        let meta = dir.join(META_FILE);
        let text = match fs::read_to_string(&meta) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                return Err(Error::NotFound(format!(
                    "no initialized store at {} (run init first)",
                    dir.display()
                )))
            }
            Err(e) => return Err(Error::io(&meta, e)),
        };
        let version = text
            .lines()
            .find_map(|l| l.trim().strip_prefix("schema_version="))
            .and_then(|v| v.trim().parse::<u32>().ok());
        match version {
            Some(SCHEMA_VERSION) => Ok(Store { dir, lock: Arc::new(RwLock::new(())) }),
            Some(v) => Err(Error::validation(
                "schema_version",
                format!("store has version {v}, this build reads version {SCHEMA_VERSION}"),
            )),
            None => Err(Error::Corrupt {
                path: meta.display().to_string(),
                line: 1,
                message: "missing schema_version".into(),
            }),
        }
    }

    /// Erases every table and rewrites the version header, creating the directory if needed.
    pub fn initialize(dir: impl AsRef<Path>) -> Result<(Self, InitReport)> {
        let dir = dir.as_ref().to_path_buf();
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        let store = Store { dir, lock: Arc::new(RwLock::new(())) };
        let report = store.initialize_in_place()?;
        Ok((store, report))
    }

    /// Erases every table of an open store.
    pub fn initialize_in_place(&self) -> Result<InitReport> {
        let _w = self.lock.write().unwrap_or_else(|e| e.into_inner());
        for t in Table::ALL {
            self.write_lines(t, &[])?;
        }
        let meta = self.dir.join(META_FILE);
        atomic_write(&meta, format!("schema_version={SCHEMA_VERSION}\n").as_bytes())?;
        Ok(InitReport {
            store: self.dir.display().to_string(),
            schema_version: SCHEMA_VERSION,
            counts: Table::ALL.iter().map(|t| (*t, 0)).collect(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path(&self, table: Table) -> PathBuf {
        self.dir.join(table.file_name())
    }

    // ---- raw file access (callers hold the lock) ----

    fn read_rows<R: Record>(&self, table: Table) -> Result<Vec<R>> {
        let path = self.path(table);
        let text = match fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(e) => return Err(Error::io(&path, e)),
        };
        text.lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| {
                serde_json::from_str(l).map_err(|e| Error::Corrupt {
                    path: path.display().to_string(),
                    line: i + 1,
                    message: e.to_string(),
                })
            })
            .collect()
    }

    fn write_rows<R: Record>(&self, table: Table, rows: &mut [R]) -> Result<()> {
        rows.sort_by_key(|a| a.key());
        let lines = rows
            .iter()
            .map(|r| serde_json::to_string(r).map_err(|e| Error::Numerical(e.to_string())))
            .collect::<Result<Vec<_>>>()?;
        self.write_lines(table, &lines)
    }

    fn write_lines(&self, table: Table, lines: &[String]) -> Result<()> {
        let mut buf = String::new();
        for l in lines {
            buf.push_str(l);
            buf.push('\n');
        }
        atomic_write(&self.path(table), buf.as_bytes())
    }

    fn read_lock(&self) -> std::sync::RwLockReadGuard<'_, ()> {
        self.lock.read().unwrap_or_else(|e| e.into_inner())
    }

    fn write_lock(&self) -> std::sync::RwLockWriteGuard<'_, ()> {
        self.lock.write().unwrap_or_else(|e| e.into_inner())
    }

    // ---- typed reads ----

    /// All rows of `table`, in key order. `R` must be the table's row type.
    pub fn list<R: Record>(&self, table: Table) -> Result<Vec<R>> {
        let _r = self.read_lock();
        let mut rows: Vec<R> = self.read_rows(table)?;
        rows.sort_by_key(|a| a.key());
        Ok(rows)
    }

    pub fn observations(&self, experiment_id: &str) -> Result<Vec<Observation>> {
        Ok(self
            .list::<Observation>(Table::Outcome)?
            .into_iter()
            .filter(|o| o.experiment_id == experiment_id)
            .collect())
    }

    pub fn input_factors(&self) -> Result<Vec<InputFactorDef>> {
        self.list(Table::Inputs)
    }

    pub fn output_params(&self) -> Result<Vec<OutputParamDef>> {
        self.list(Table::Outputs)
    }

    pub fn benchmarks(&self) -> Result<Vec<ClassicBenchmark>> {
        self.list(Table::Classic)
    }

    pub fn machines(&self) -> Result<Vec<MachineRecord>> {
        self.list(Table::Machine)
    }

    pub fn models(&self) -> Result<Vec<StoredModel>> {
        self.list(Table::Models)
    }

    pub fn input_factor(&self, code: &str) -> Result<InputFactorDef> {
        self.input_factors()?
            .into_iter()
            .find(|f| f.code == code)
            .ok_or_else(|| Error::NotFound(format!("INPUTS:{code}")))
    }

    pub fn output_param(&self, code: &str) -> Result<OutputParamDef> {
        self.output_params()?
            .into_iter()
            .find(|f| f.code == code)
            .ok_or_else(|| Error::NotFound(format!("OUTPUTS:{code}")))
    }

    pub fn counts(&self) -> Result<BTreeMap<Table, usize>> {
        Table::ALL
            .iter()
            .map(|t| Ok((*t, self.list_json(*t, &[])?.len())))
            .collect()
    }

    // ---- dynamic (JSON) access used by the front ends ----

    /// Rows of `table` matching every filter, in key order.
    pub fn list_json(&self, table: Table, filters: &[FieldFilter]) -> Result<Vec<Value>> {
        let rows = dispatch_list(self, table)?;
        Ok(rows
            .into_iter()
            .filter(|v| filters.iter().all(|f| f.matches(v)))
            .collect())
    }

    pub fn get_json(&self, table: Table, key: &str) -> Result<Value> {
        let key = parse_key(table, key)?;
        let rows = dispatch_list_keyed(self, table)?;
        rows.into_iter()
            .find(|(k, _)| *k == key)
            .map(|(_, v)| v)
            .ok_or_else(|| Error::NotFound(format!("{table}:{key}")))
    }

    /// Primary key of a record given as JSON, after decoding it as a `table` row.
    pub fn key_of_json(table: Table, record: &Value) -> Result<Key> {
        fn key<R: Record>(v: &Value) -> Result<Key> {
            Ok(decode_record::<R>(v.clone())?.key())
        }
        match table {
            Table::Po => key::<ProcessedObject>(record),
            Table::PoProperties | Table::ToProperties => key::<ObjectProperty>(record),
            Table::To => key::<TransferObject>(record),
            Table::Outcome => key::<Observation>(record),
            Table::Inputs => key::<InputFactorDef>(record),
            Table::Outputs => key::<OutputParamDef>(record),
            Table::We => key::<WorkingEnvironment>(record),
            Table::Machine => key::<MachineRecord>(record),
            Table::Classic => key::<ClassicBenchmark>(record),
            Table::Models => key::<StoredModel>(record),
            Table::Optimizations => key::<StoredOptimization>(record),
        }
    }

    /// Validates and stores a record given as JSON, replacing any record with the same key.
    pub fn upsert_json(&self, table: Table, record: Value) -> Result<Value> {
        match table {
            Table::Po => self.upsert_value::<ProcessedObject>(table, record),
            Table::PoProperties | Table::ToProperties => self.upsert_value::<ObjectProperty>(table, record),
            Table::To => self.upsert_value::<TransferObject>(table, record),
            Table::Outcome => self.upsert_value::<Observation>(table, record),
            Table::Inputs => self.upsert_value::<InputFactorDef>(table, record),
            Table::Outputs => self.upsert_value::<OutputParamDef>(table, record),
            Table::We => self.upsert_value::<WorkingEnvironment>(table, record),
            Table::Machine => self.upsert_value::<MachineRecord>(table, record),
            Table::Classic => self.upsert_value::<ClassicBenchmark>(table, record),
            Table::Models | Table::Optimizations => Err(Error::Usage(format!(
                "{table} is written by the analyses, not edited directly"
            ))),
        }
    }

    fn upsert_value<R: Record>(&self, table: Table, record: Value) -> Result<Value> {
        let rec: R = decode_record(record)?;
        let stored = self.upsert(table, rec)?;
        serde_json::to_value(stored).map_err(|e| Error::Numerical(e.to_string()))
    }

    /// Stores a typed record in `table` after invariant and reference checks.
    pub fn upsert<R: Record>(&self, table: Table, record: R) -> Result<R> {
        record.validate()?;
        let _w = self.write_lock();
        self.check_references(table, &serde_json::to_value(&record).map_err(|e| Error::Numerical(e.to_string()))?)?;
        let mut rows: Vec<R> = self.read_rows(table)?;
        let key = record.key();
        rows.retain(|r| r.key() != key);
        rows.push(record.clone());
        self.write_rows(table, &mut rows)?;
        Ok(record)
    }

    /// Stores many observations in one write; nothing is written if any fails.
    pub fn upsert_observations(&self, batch: Vec<Observation>) -> Result<usize> {
        for o in &batch {
            o.validate()?;
        }
        let mut seen = BTreeSet::new();
        for o in &batch {
            if !seen.insert(o.key()) {
                return Err(Error::validation("run_index", format!("observation {} appears twice in the batch", o.key())));
            }
        }
        let _w = self.write_lock();
        let (inputs, outputs) = self.catalog_codes()?;
        for o in &batch {
            check_observation_codes(o, &inputs, &outputs)?;
        }
        let mut rows: Vec<Observation> = self.read_rows(Table::Outcome)?;
        rows.retain(|r| !seen.contains(&r.key()));
        let n = batch.len();
        rows.extend(batch);
        self.write_rows(Table::Outcome, &mut rows)?;
        Ok(n)
    }

    fn catalog_codes(&self) -> Result<(BTreeSet<String>, BTreeSet<String>)> {
        let inputs = self.read_rows::<InputFactorDef>(Table::Inputs)?.into_iter().map(|f| f.code).collect();
        let outputs = self.read_rows::<OutputParamDef>(Table::Outputs)?.into_iter().map(|f| f.code).collect();
        Ok((inputs, outputs))
    }

    fn check_references(&self, table: Table, record: &Value) -> Result<()> {
        match table {
            Table::PoProperties | Table::ToProperties => {
                let prop: ObjectProperty = serde_json::from_value(record.clone()).map_err(|e| Error::validation("record", e.to_string()))?;
                let (expected, owners) = match table {
                    Table::PoProperties => (OwnerKind::Po, Table::Po),
                    _ => (OwnerKind::To, Table::To),
                };
                if prop.owner_kind != expected {
                    return Err(Error::validation(
                        "owner_kind",
                        format!("{table} rows must have owner_kind {}", owners.name()),
                    ));
                }
                let exists = match owners {
                    Table::Po => self.read_rows::<ProcessedObject>(owners)?.iter().any(|o| o.id == prop.owner_id),
                    _ => self.read_rows::<TransferObject>(owners)?.iter().any(|o| o.id == prop.owner_id),
                };
                if !exists {
                    return Err(Error::Referential(format!(
                        "{table} row references missing {} object {:?}",
                        owners.name(),
                        prop.owner_id
                    )));
                }
                Ok(())
            }
            Table::Outcome => {
                let obs: Observation = serde_json::from_value(record.clone()).map_err(|e| Error::validation("record", e.to_string()))?;
                let (inputs, outputs) = self.catalog_codes()?;
                check_observation_codes(&obs, &inputs, &outputs)
            }
            _ => Ok(()),
        }
    }

    /// Deletes one record; PO/TO deletions cascade to their properties, and
    /// catalog entries still used by observations are refused.
    pub fn delete(&self, table: Table, key: &str) -> Result<DeleteReport> {
        let parsed = parse_key(table, key)?;
        let _w = self.write_lock();
        let mut cascaded = Vec::new();
        match table {
            Table::Po | Table::To => {
                let props = if table == Table::Po { Table::PoProperties } else { Table::ToProperties };
                if table == Table::Po {
                    self.remove_row::<ProcessedObject>(table, &parsed)?;
                } else {
                    self.remove_row::<TransferObject>(table, &parsed)?;
                }
                let id = key.trim();
                let mut rows: Vec<ObjectProperty> = self.read_rows(props)?;
                let before = rows.len();
                rows.retain(|p| {
                    if p.owner_id == id {
                        cascaded.push(format!("{props}:{}", p.key()));
                        false
                    } else {
                        true
                    }
                });
                if rows.len() != before {
                    self.write_rows(props, &mut rows)?;
                }
            }
            Table::Inputs | Table::Outputs => {
                let code = key.trim();
                let observations: Vec<Observation> = self.read_rows(Table::Outcome)?;
                let users: Vec<String> = observations
                    .iter()
                    .filter(|o| match table {
                        Table::Inputs => o.factor_values.contains_key(code),
                        _ => o.output_values.contains_key(code),
                    })
                    .map(|o| o.key().to_string())
                    .collect();
                if !users.is_empty() {
                    return Err(Error::Referential(format!(
                        "{table}:{code} is used by {} observation(s), e.g. {}",
                        users.len(),
                        users[0]
                    )));
                }
                if table == Table::Inputs {
                    self.remove_row::<InputFactorDef>(table, &parsed)?;
                } else {
                    self.remove_row::<OutputParamDef>(table, &parsed)?;
                }
            }
            Table::PoProperties | Table::ToProperties => self.remove_row::<ObjectProperty>(table, &parsed)?,
            Table::Outcome => self.remove_row::<Observation>(table, &parsed)?,
            Table::We => self.remove_row::<WorkingEnvironment>(table, &parsed)?,
            Table::Machine => self.remove_row::<MachineRecord>(table, &parsed)?,
            Table::Classic => self.remove_row::<ClassicBenchmark>(table, &parsed)?,
            Table::Models => self.remove_row::<StoredModel>(table, &parsed)?,
            Table::Optimizations => self.remove_row::<StoredOptimization>(table, &parsed)?,
        }
        Ok(DeleteReport { table, key: parsed.to_string(), cascaded })
    }

    fn remove_row<R: Record>(&self, table: Table, key: &Key) -> Result<()> {
        let mut rows: Vec<R> = self.read_rows(table)?;
        let before = rows.len();
        rows.retain(|r| r.key() != *key);
        if rows.len() == before {
            return Err(Error::NotFound(format!("{table}:{key}")));
        }
        self.write_rows(table, &mut rows)
    }

    /// Flags or unflags one observation. Re-including clears the reason.
    pub fn set_exclusion(&self, run: &RunRef, excluded: bool, reason: &str) -> Result<Observation> {
        let _w = self.write_lock();
        let mut rows: Vec<Observation> = self.read_rows(Table::Outcome)?;
        let obs = rows
            .iter_mut()
            .find(|o| o.experiment_id == run.experiment_id && o.run_index == run.run_index && o.replicate_index == run.replicate_index)
            .ok_or_else(|| {
                Error::NotFound(format!("OUTCOME:{}:{}:{}", run.experiment_id, run.run_index, run.replicate_index))
            })?;
        obs.excluded = excluded;
        obs.exclusion_reason = if excluded { reason.to_string() } else { String::new() };
        let updated = obs.clone();
        self.write_rows(Table::Outcome, &mut rows)?;
        Ok(updated)
    }

    pub fn save_model(&self, model: StoredModel) -> Result<StoredModel> {
        self.upsert(Table::Models, model)
    }

    pub fn save_optimization(&self, experiment_id: &str, report: crate::optimize::OptimumReport) -> Result<StoredOptimization> {
        let _w = self.write_lock();
        let mut rows: Vec<StoredOptimization> = self.read_rows(Table::Optimizations)?;
        let next = rows
            .iter()
            .filter_map(|r| r.id.rsplit('#').next().and_then(|n| n.parse::<u32>().ok()))
            .max()
            .unwrap_or(0)
            + 1;
        let rec = StoredOptimization {
            id: format!("{experiment_id}#{next:04}"),
            experiment_id: experiment_id.to_string(),
            report,
        };
        rec.validate()?;
        rows.push(rec.clone());
        self.write_rows(Table::Optimizations, &mut rows)?;
        Ok(rec)
    }
}

fn check_observation_codes(o: &Observation, inputs: &BTreeSet<String>, outputs: &BTreeSet<String>) -> Result<()> {
    if let Some(code) = o.factor_values.keys().find(|c| !inputs.contains(*c)) {
        return Err(Error::Referential(format!(
            "observation {} uses undeclared input factor {code:?}",
            o.key()
        )));
    }
    if let Some(code) = o.output_values.keys().find(|c| !outputs.contains(*c)) {
        return Err(Error::Referential(format!(
            "observation {} uses undeclared output parameter {code:?}",
            o.key()
        )));
    }
    Ok(())
}

fn decode_record<R: Record>(record: Value) -> Result<R> {
    serde_json::from_value(record).map_err(|e| {
        let msg = e.to_string();
        // serde names the offending field between backticks
        let field = msg
            .split('`')
            .nth(1)
            .filter(|f| !f.is_empty())
            .unwrap_or("record")
            .to_string();
        Error::Validation { field, message: msg }
    })
}

/// Parses `a:b:c` text into a key of the table's shape.
pub fn parse_key(table: Table, text: &str) -> Result<Key> {
    let text = text.trim();
    let arity = table.key_arity();
    let parts: Vec<&str> = if arity == 1 {
        vec![text]
    } else {
        text.splitn(arity, ':').collect()
    };
    if parts.len() != arity || parts.iter().any(|p| p.is_empty()) {
        return Err(Error::validation("key", format!("{table} keys have {arity} ':'-separated parts, got {text:?}")));
    }
    let key = match table {
        Table::Outcome => {
            let run = parts[1].parse::<u32>().map_err(|_| Error::validation("run_index", format!("not an integer: {:?}", parts[1])))?;
            let rep = parts[2].parse::<u32>().map_err(|_| Error::validation("replicate_index", format!("not an integer: {:?}", parts[2])))?;
            Key(vec![KeyPart::Text(parts[0].into()), KeyPart::Int(run), KeyPart::Int(rep)])
        }
        _ => Key(parts.iter().map(|p| KeyPart::Text(p.to_string())).collect()),
    };
    Ok(key)
}

fn to_values<R: Record>(rows: Vec<R>) -> Result<Vec<(Key, Value)>> {
    rows.into_iter()
        .map(|r| Ok((r.key(), serde_json::to_value(&r).map_err(|e| Error::Numerical(e.to_string()))?)))
        .collect()
}

fn dispatch_list_keyed(store: &Store, table: Table) -> Result<Vec<(Key, Value)>> {
    match table {
        Table::Po => to_values(store.list::<ProcessedObject>(table)?),
        Table::PoProperties | Table::ToProperties => to_values(store.list::<ObjectProperty>(table)?),
        Table::To => to_values(store.list::<TransferObject>(table)?),
        Table::Outcome => to_values(store.list::<Observation>(table)?),
        Table::Inputs => to_values(store.list::<InputFactorDef>(table)?),
        Table::Outputs => to_values(store.list::<OutputParamDef>(table)?),
        Table::We => to_values(store.list::<WorkingEnvironment>(table)?),
        Table::Machine => to_values(store.list::<MachineRecord>(table)?),
        Table::Classic => to_values(store.list::<ClassicBenchmark>(table)?),
        Table::Models => to_values(store.list::<StoredModel>(table)?),
        Table::Optimizations => to_values(store.list::<StoredOptimization>(table)?),
    }
}

fn dispatch_list(store: &Store, table: Table) -> Result<Vec<Value>> {
    Ok(dispatch_list_keyed(store, table)?.into_iter().map(|(_, v)| v).collect())
}

fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    let mut f = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    f.write_all(bytes).map_err(|e| Error::io(&tmp, e))?;
    f.sync_all().map_err(|e| Error::io(&tmp, e))?;
    drop(f);
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn fresh() -> (tempfile::TempDir, Store) {
        let dir = tempfile::tempdir().unwrap();
        let (store, _) = Store::initialize(dir.path().join("lab")).unwrap();
        (dir, store)
    }

    fn seed_catalog(store: &Store) {
        store.upsert_json(Table::Inputs, json!({"code":"I","name":"current","unit":"A","min_level":2,"max_level":10})).unwrap();
        store.upsert_json(Table::Outputs, json!({"code":"wear","name":"volume wear","unit":"mm3","sense":"minimize"})).unwrap();
    }

    fn obs(run: u32, rep: u32, i: f64, wear: f64) -> Value {
        json!({"experiment_id":"E1","run_index":run,"replicate_index":rep,
               "factor_values":{"I":i},"output_values":{"wear":wear}})
    }

    #[test]
    fn layout_and_meta() {
        let (_d, store) = fresh();
        assert_eq!(fs::read_to_string(store.dir().join("meta")).unwrap(), "schema_version=1\n");
        for t in Table::DATA {
            assert!(store.dir().join(format!("{}.jsonl", t.name())).exists());
        }
        assert!(Store::open(store.dir()).is_ok());
        assert!(matches!(Store::open(store.dir().join("nope")), Err(Error::NotFound(_))));
        fs::write(store.dir().join("meta"), "schema_version=2\n").unwrap();
        assert!(Store::open(store.dir()).is_err());
    }

    #[test]
    fn initialize_wipes_and_is_idempotent() {
        let (_d, store) = fresh();
        seed_catalog(&store);
        for r in 1..=3 {
            store.upsert_json(Table::Outcome, obs(r, 1, 2.0, 1.0)).unwrap();
        }
        assert_eq!(store.list_json(Table::Outcome, &[]).unwrap().len(), 3);
        store.initialize_in_place().unwrap();
        let once: Vec<_> = Table::ALL.iter().map(|t| fs::read(store.path(*t)).unwrap()).collect();
        assert!(store.counts().unwrap().values().all(|c| *c == 0));
        store.initialize_in_place().unwrap();
        let twice: Vec<_> = Table::ALL.iter().map(|t| fs::read(store.path(*t)).unwrap()).collect();
        assert_eq!(once, twice);
        assert!(store.list_json(Table::Outcome, &[]).unwrap().is_empty());
    }

    #[test]
    fn upsert_replaces_by_key() {
        let (_d, store) = fresh();
        store.upsert_json(Table::Inputs, json!({"code":"I","name":"a","min_level":2,"max_level":10})).unwrap();
        store.upsert_json(Table::Inputs, json!({"code":"I","name":"b","min_level":2,"max_level":10})).unwrap();
        let rows = store.list_json(Table::Inputs, &[]).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0]["name"], "b");
    }

    #[test]
    fn dangling_property_is_refused() {
        let (_d, store) = fresh();
        let err = store
            .upsert_json(Table::PoProperties, json!({"owner_kind":"PO","owner_id":"P9","property_name":"hardness","value":58.0,"unit":"HRC"}))
            .unwrap_err();
        assert!(matches!(err, Error::Referential(_)));
        store.upsert_json(Table::Po, json!({"id":"P9","name":"die","material":"steel"})).unwrap();
        let err = store
            .upsert_json(Table::PoProperties, json!({"owner_kind":"TO","owner_id":"P9","property_name":"hardness","value":58.0}))
            .unwrap_err();
        assert!(matches!(err, Error::Validation { ref field, .. } if field == "owner_kind"));
        store
            .upsert_json(Table::PoProperties, json!({"owner_kind":"PO","owner_id":"P9","property_name":"hardness","value":58.0}))
            .unwrap();
    }

    #[test]
    fn delete_cascades_to_properties() {
        let (_d, store) = fresh();
        store.upsert_json(Table::To, json!({"id":"T1","name":"electrode","material":"copper"})).unwrap();
        for p in ["density", "resistivity"] {
            store.upsert_json(Table::ToProperties, json!({"owner_kind":"TO","owner_id":"T1","property_name":p,"value":1.0})).unwrap();
        }
        let report = store.delete(Table::To, "T1").unwrap();
        assert_eq!(report.cascaded.len(), 2);
        assert!(store.list_json(Table::ToProperties, &[]).unwrap().is_empty());
        assert!(matches!(store.delete(Table::To, "T1"), Err(Error::NotFound(_))));
        store.upsert_json(Table::To, json!({"id":"T1","name":"again"})).unwrap();
        assert!(store.list_json(Table::ToProperties, &[]).unwrap().is_empty());
    }

    #[test]
    fn catalog_in_use_cannot_be_deleted() {
        let (_d, store) = fresh();
        seed_catalog(&store);
        store.upsert_json(Table::Outcome, obs(1, 1, 2.0, 1.0)).unwrap();
        assert!(matches!(store.delete(Table::Inputs, "I"), Err(Error::Referential(_))));
        assert!(matches!(store.delete(Table::Outputs, "wear"), Err(Error::Referential(_))));
        store.delete(Table::Outcome, "E1:1:1").unwrap();
        store.delete(Table::Inputs, "I").unwrap();
    }

    #[test]
    fn undeclared_codes_are_refused() {
        let (_d, store) = fresh();
        seed_catalog(&store);
        let bad = json!({"experiment_id":"E1","run_index":1,"replicate_index":1,"factor_values":{"H":1.0},"output_values":{}});
        assert!(matches!(store.upsert_json(Table::Outcome, bad), Err(Error::Referential(_))));
    }

    #[test]
    fn listing_order_and_filters() {
        let (_d, store) = fresh();
        seed_catalog(&store);
        store.upsert_json(Table::Outcome, obs(10, 1, 2.0, 1.0)).unwrap();
        store.upsert_json(Table::Outcome, obs(2, 2, 2.0, 1.0)).unwrap();
        store.upsert_json(Table::Outcome, obs(2, 1, 10.0, 3.0)).unwrap();
        let mut other = obs(1, 1, 2.0, 1.0);
        other["experiment_id"] = json!("E2");
        store.upsert_json(Table::Outcome, other).unwrap();

        let e1 = store.list_json(Table::Outcome, &["experiment_id=E1".parse().unwrap()]).unwrap();
        let keys: Vec<(u64, u64)> = e1
            .iter()
            .map(|v| (v["run_index"].as_u64().unwrap(), v["replicate_index"].as_u64().unwrap()))
            .collect();
        assert_eq!(keys, vec![(2, 1), (2, 2), (10, 1)]);
        let by_factor = store.list_json(Table::Outcome, &["factor_values.I=10".parse().unwrap()]).unwrap();
        assert_eq!(by_factor.len(), 1);
        assert!(store.list_json(Table::Machine, &[]).unwrap().is_empty());
        assert!("NOPE".parse::<Table>().is_err());
    }

    #[test]
    fn exclusion_flag_round_trip() {
        let (_d, store) = fresh();
        seed_catalog(&store);
        store.upsert_json(Table::Outcome, obs(3, 2, 2.0, 1.0)).unwrap();
        let run = RunRef { experiment_id: "E1".into(), run_index: 3, replicate_index: 2 };
        let o = store.set_exclusion(&run, true, "Grubbs α=0.05").unwrap();
        assert!(o.excluded);
        assert_eq!(o.exclusion_reason, "Grubbs α=0.05");
        assert_eq!(store.get_json(Table::Outcome, "E1:3:2").unwrap()["exclusion_reason"], "Grubbs α=0.05");
        let o = store.set_exclusion(&run, false, "ignored").unwrap();
        assert!(!o.excluded);
        assert!(o.exclusion_reason.is_empty());
        let missing = RunRef { run_index: 99, ..run };
        assert!(matches!(store.set_exclusion(&missing, true, "x"), Err(Error::NotFound(_))));
    }

    #[test]
    fn validation_names_the_field() {
        let (_d, store) = fresh();
        match store.upsert_json(Table::Machine, json!({"id":"M1","max_current":-1,"hourly_rate":"10"})) {
            Err(Error::Validation { field, .. }) => assert_eq!(field, "max_current"),
            other => panic!("{other:?}"),
        }
        match store.upsert_json(Table::Machine, json!({"id":"M1","hourly_rate":"10"})) {
            Err(Error::Validation { field, .. }) => assert_eq!(field, "max_current"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn batch_ingest_is_all_or_nothing() {
        let (_d, store) = fresh();
        seed_catalog(&store);
        let good: Observation = serde_json::from_value(obs(1, 1, 2.0, 1.0)).unwrap();
        let mut bad = good.clone();
        bad.run_index = 2;
        bad.factor_values.insert("H".into(), 1.0);
        assert!(store.upsert_observations(vec![good.clone(), bad]).is_err());
        assert!(store.list_json(Table::Outcome, &[]).unwrap().is_empty());
        assert_eq!(store.upsert_observations(vec![good]).unwrap(), 1);
    }

    #[test]
    fn concurrent_readers_and_writer() {
        let (_d, store) = fresh();
        seed_catalog(&store);
        std::thread::scope(|s| {
            let w = store.clone();
            s.spawn(move || {
                for r in 1..=20 {
                    w.upsert_json(Table::Outcome, obs(r, 1, 2.0, r as f64)).unwrap();
                }
            });
            for _ in 0..4 {
                let r = store.clone();
                s.spawn(move || {
                    for _ in 0..20 {
                        let rows = r.list_json(Table::Outcome, &[]).unwrap();
                        assert!(rows.len() <= 20);
                    }
                });
            }
        });
        assert_eq!(store.list_json(Table::Outcome, &[]).unwrap().len(), 20);
    }
}
