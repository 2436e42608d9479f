//! Row types of the ten tables, their keys and field-level invariants.

use std::collections::BTreeMap;
use std::fmt;

use rust_decimal::Decimal;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::FittedModel;
use crate::optimize::{OptimumReport, Sense};

/// One component of a primary key. Integers order numerically.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum KeyPart {
    Text(String),
    Int(u32),
}

/// Primary key; rendered and parsed as its parts joined by `:`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Key(pub Vec<KeyPart>);

impl fmt::Display for Key {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, part) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(":")?;
            }
            match part {
                KeyPart::Text(s) => f.write_str(s)?,
                KeyPart::Int(n) => write!(f, "{n}")?,
            }
        }
        Ok(())
    }
}

fn text(s: &str) -> KeyPart {
    KeyPart::Text(s.to_string())
}

/// A row type stored in one of the tables.
pub trait Record: Serialize + DeserializeOwned + Clone + Send + Sync + 'static {
    fn key(&self) -> Key;
    /// Field-level invariants (no cross-table checks).
    fn validate(&self) -> Result<()>;
}

pub(crate) fn check_id(field: &str, id: &str) -> Result<()> {
    if id.trim().is_empty() {
        return Err(Error::validation(field, "must be non-empty"));
    }
    if id != id.trim() {
        return Err(Error::validation(field, "must not start or end with whitespace"));
    }
    if id.contains(':') || id.contains('/') {
        return Err(Error::validation(field, "must not contain ':' or '/'"));
    }
    Ok(())
}

fn check_finite(field: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::validation(field, "must be a finite number"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProcessedObject {
    pub id: String,
    pub name: String,
    #[serde(default)]
    pub material: String,
    #[serde(default)]
    pub shape_notes: String,
}

impl Record for ProcessedObject {
    fn key(&self) -> Key {
        Key(vec![text(&self.id)])
    }

    fn validate(&self) -> Result<()> {
        check_id("id", &self.id)?;
        if self.name.trim().is_empty() {
            return Err(Error::validation("name", "must be non-empty"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransferObject {
    pub id: String,
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub material: String,
    #[serde(default)]
    pub shape_notes: String,
}

impl Record for TransferObject {
    fn key(&self) -> Key {
        Key(vec![text(&self.id)])
    }

    fn validate(&self) -> Result<()> {
        check_id("id", &self.id)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum OwnerKind {
    #[serde(rename = "PO")]
    Po,
    #[serde(rename = "TO")]
    To,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectProperty {
    pub owner_kind: OwnerKind,
    pub owner_id: String,
    pub property_name: String,
    pub value: f64,
    #[serde(default)]
    pub unit: String,
}

impl Record for ObjectProperty {
    fn key(&self) -> Key {
        Key(vec![text(&self.owner_id), text(&self.property_name)])
    }

    fn validate(&self) -> Result<()> {
        check_id("owner_id", &self.owner_id)?;
        if self.property_name.trim().is_empty() {
            return Err(Error::validation("property_name", "must be non-empty"));
        }
        check_finite("value", self.value)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MachineRecord {
    pub id: String,
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub generator_type: String,
    /// Amperes.
    pub max_current: f64,
    /// Currency per hour.
    pub hourly_rate: Decimal,
}

impl Record for MachineRecord {
    fn key(&self) -> Key {
        Key(vec![text(&self.id)])
    }

    fn validate(&self) -> Result<()> {
        check_id("id", &self.id)?;
        if !(self.max_current > 0.0 && self.max_current.is_finite()) {
            return Err(Error::validation("max_current", "must be positive"));
        }
        if self.hourly_rate.is_sign_negative() && !self.hourly_rate.is_zero() {
            return Err(Error::validation("hourly_rate", "must not be negative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MediumClass {
    DielectricLiquid,
    Electrolyte,
    Gas,
    Vacuum,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkingEnvironment {
    pub id: String,
    #[serde(default)]
    pub name: String,
    pub medium_class: MediumClass,
    #[serde(default)]
    pub description: String,
}

impl Record for WorkingEnvironment {
    fn key(&self) -> Key {
        Key(vec![text(&self.id)])
    }

    fn validate(&self) -> Result<()> {
        check_id("id", &self.id)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputFactorDef {
    pub code: String,
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub unit: String,
    pub min_level: f64,
    pub max_level: f64,
}

impl Record for InputFactorDef {
    fn key(&self) -> Key {
        Key(vec![text(&self.code)])
    }

    fn validate(&self) -> Result<()> {
        check_id("code", &self.code)?;
        check_finite("min_level", self.min_level)?;
        check_finite("max_level", self.max_level)?;
        if self.min_level >= self.max_level {
            return Err(Error::validation(
                "min_level",
                format!("must be below max_level ({} >= {})", self.min_level, self.max_level),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputParamDef {
    pub code: String,
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub unit: String,
    pub sense: Sense,
}

impl Record for OutputParamDef {
    fn key(&self) -> Key {
        Key(vec![text(&self.code)])
    }

    fn validate(&self) -> Result<()> {
        check_id("code", &self.code)
    }
}

/// One measured run (the OUTCOME table).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Observation {
    pub experiment_id: String,
    pub run_index: u32,
    pub replicate_index: u32,
    pub factor_values: BTreeMap<String, f64>,
    pub output_values: BTreeMap<String, f64>,
    #[serde(default)]
    pub excluded: bool,
    #[serde(default)]
    pub exclusion_reason: String,
}

impl Observation {
    pub fn run_ref(&self) -> RunRef {
        RunRef {
            experiment_id: self.experiment_id.clone(),
            run_index: self.run_index,
            replicate_index: self.replicate_index,
        }
    }
}

impl Record for Observation {
    fn key(&self) -> Key {
        Key(vec![
            text(&self.experiment_id),
            KeyPart::Int(self.run_index),
            KeyPart::Int(self.replicate_index),
        ])
    }

    fn validate(&self) -> Result<()> {
        check_id("experiment_id", &self.experiment_id)?;
        if self.run_index == 0 {
            return Err(Error::validation("run_index", "must be at least 1"));
        }
        if self.replicate_index == 0 {
            return Err(Error::validation("replicate_index", "must be at least 1"));
        }
        for (code, v) in &self.factor_values {
            check_finite(&format!("factor_values.{code}"), *v)?;
        }
        for (code, v) in &self.output_values {
            check_finite(&format!("output_values.{code}"), *v)?;
        }
        Ok(())
    }
}

/// Reference to one observation.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RunRef {
    pub experiment_id: String,
    pub run_index: u32,
    pub replicate_index: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassicBenchmark {
    pub id: String,
    pub material: String,
    pub operation: String,
    pub method_name: String,
    /// Minutes.
    pub processing_time: f64,
    pub cost_per_piece: Decimal,
}

impl Record for ClassicBenchmark {
    fn key(&self) -> Key {
        Key(vec![text(&self.id)])
    }

    fn validate(&self) -> Result<()> {
        check_id("id", &self.id)?;
        if !(self.processing_time > 0.0 && self.processing_time.is_finite()) {
            return Err(Error::validation("processing_time", "must be positive"));
        }
        if self.cost_per_piece.is_sign_negative() && !self.cost_per_piece.is_zero() {
            return Err(Error::validation("cost_per_piece", "must not be negative"));
        }
        Ok(())
    }
}

/// A fitted model kept for the models report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StoredModel {
    pub id: String,
    pub experiment_id: String,
    pub output_code: String,
    pub formula: String,
    pub model: FittedModel,
}

impl StoredModel {
    pub fn new(experiment_id: &str, model: FittedModel) -> Self {
        let id = format!(
            "{}:{}:{}:{}",
            experiment_id,
            model.output_code,
            model.family.name(),
            model.factor_codes.join(",")
        );
        StoredModel {
            id,
            experiment_id: experiment_id.to_string(),
            output_code: model.output_code.clone(),
            formula: model.formula(),
            model,
        }
    }
}

impl Record for StoredModel {
    fn key(&self) -> Key {
        Key(vec![text(&self.id)])
    }

    fn validate(&self) -> Result<()> {
        check_id("experiment_id", &self.experiment_id)
    }
}

/// An optimization result kept for the optimizations report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StoredOptimization {
    pub id: String,
    pub experiment_id: String,
    pub report: OptimumReport,
}

impl Record for StoredOptimization {
    fn key(&self) -> Key {
        Key(vec![text(&self.id)])
    }

    fn validate(&self) -> Result<()> {
        check_id("experiment_id", &self.experiment_id)
    }
}
