//! Time comparison against conventional machining and per-job cost calculus.
//!
//! Money is carried as [`Decimal`] and serialized as a decimal string. Each
//! cost component is computed exactly, then rounded half-up to four places;
//! the total is the sum of the rounded components, so the breakdown always
//! adds up to the total.

use std::fmt::Write as _;
use std::str::FromStr;

use rust_decimal::{Decimal, RoundingStrategy};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::store::ClassicBenchmark;

/// Fractional digits kept for money.
pub const MONEY_SCALE: u32 = 4;

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostRates {
    /// Per hour.
    #[serde(default)]
    pub machine_rate: Decimal,
    /// Per hour.
    #[serde(default)]
    pub labor_rate: Decimal,
    /// Per cm³ of electrode wear.
    #[serde(default)]
    pub electrode_wear_cost: Decimal,
    /// Per hour.
    #[serde(default)]
    pub dielectric_cost: Decimal,
    /// Per kWh.
    #[serde(default)]
    pub energy_rate: Decimal,
    /// kW.
    #[serde(default)]
    pub power_draw: Decimal,
}

impl CostRates {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("machine_rate", self.machine_rate),
            ("labor_rate", self.labor_rate),
            ("electrode_wear_cost", self.electrode_wear_cost),
            ("dielectric_cost", self.dielectric_cost),
            ("energy_rate", self.energy_rate),
            ("power_draw", self.power_draw),
        ];
        match fields.iter().find(|(_, v)| *v < Decimal::ZERO) {
            Some((name, _)) => Err(Error::validation(*name, "must not be negative")),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub time_minutes: Decimal,
    pub hours: Decimal,
    pub electrode_wear_volume: Decimal,
    pub machine: Decimal,
    pub labor: Decimal,
    pub electrode: Decimal,
    pub dielectric: Decimal,
    pub energy: Decimal,
    pub total: Decimal,
}

impl CostBreakdown {
    pub fn to_text(&self) -> String {
        let rows = [
            ("machine", self.machine),
            ("labor", self.labor),
            ("electrode", self.electrode),
            ("dielectric", self.dielectric),
            ("energy", self.energy),
        ];
        let mut out = String::new();
        let _ = writeln!(
            out,
            "processing time {} min ({} h), electrode wear {} cm3",
            self.time_minutes.normalize(),
            self.hours.round_dp(MONEY_SCALE).normalize(),
            self.electrode_wear_volume.normalize()
        );
        let _ = writeln!(out, "{:<12} {:>14}", "component", "cost");
        for (name, value) in rows {
            let _ = writeln!(out, "{name:<12} {value:>14}");
        }
        let _ = writeln!(out, "{:<12} {:>14}", "total", self.total);
        out
    }
}

fn money(x: Decimal) -> Decimal {
    let mut r = x.round_dp_with_strategy(MONEY_SCALE, RoundingStrategy::MidpointAwayFromZero);
    r.rescale(MONEY_SCALE);
    r
}

/// Converts a measured quantity to a decimal using its shortest round-trip text.
pub fn decimal_from_f64(field: &str, x: f64) -> Result<Decimal> {
    if !x.is_finite() {
        return Err(Error::validation(field, "must be a finite number"));
    }
    Decimal::from_str(&x.to_string())
        .map_err(|e| Error::validation(field, format!("{x} is out of the decimal range: {e}")))
}

/// Cost of one job of `time_minutes` that wore `electrode_wear_volume` cm³ of electrode.
pub fn processing_cost(time_minutes: Decimal, rates: &CostRates, electrode_wear_volume: Decimal) -> Result<CostBreakdown> {
    if time_minutes <= Decimal::ZERO {
        return Err(Error::validation("time", "processing time must be positive"));
    }
    if electrode_wear_volume < Decimal::ZERO {
        return Err(Error::validation("electrode_wear_volume", "must not be negative"));
    }
    rates.validate()?;
    let overflow = |field: &str| Error::validation(field, "value too large for cost arithmetic");
    let hours = time_minutes / Decimal::from(60);
    let per_hour = |field: &str, rate: Decimal| rate.checked_mul(hours).map(money).ok_or_else(|| overflow(field));
    let machine = per_hour("machine_rate", rates.machine_rate)?;
    let labor = per_hour("labor_rate", rates.labor_rate)?;
    let dielectric = per_hour("dielectric_cost", rates.dielectric_cost)?;
    let energy = rates
        .energy_rate
        .checked_mul(rates.power_draw)
        .and_then(|r| r.checked_mul(hours))
        .map(money)
        .ok_or_else(|| overflow("energy_rate"))?;
    let electrode = rates
        .electrode_wear_cost
        .checked_mul(electrode_wear_volume)
        .map(money)
        .ok_or_else(|| overflow("electrode_wear_cost"))?;
    let total = [machine, labor, electrode, dielectric, energy]
        .into_iter()
        .try_fold(Decimal::ZERO, |acc, c| acc.checked_add(c))
        .ok_or_else(|| overflow("total"))?;
    Ok(CostBreakdown {
        time_minutes,
        hours,
        electrode_wear_volume,
        machine,
        labor,
        electrode,
        dielectric,
        energy,
        total,
    })
}

/// Where the unconventional processing time came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeSource {
    /// Taken from a stored observation.
    Measured,
    /// Predicted by a fitted model at given settings.
    Predicted,
    /// Typed in by the operator.
    #[default]
    Given,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    UnconventionalFaster,
    ClassicFaster,
    Equal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub material: String,
    pub operation: String,
    pub unconventional_time: f64,
    pub time_source: TimeSource,
    pub classic_time: f64,
    pub classic_method: String,
    pub classic_benchmark_id: String,
    pub classic_cost_per_piece: Decimal,
    pub ratio: f64,
    pub verdict: Verdict,
}

impl Comparison {
    pub fn to_text(&self) -> String {
        let verdict = match self.verdict {
            Verdict::UnconventionalFaster => "unconventional method is faster",
            Verdict::ClassicFaster => "conventional method is faster",
            Verdict::Equal => "both methods take the same time",
        };
        let source = match self.time_source {
            TimeSource::Measured => "measured",
            TimeSource::Predicted => "predicted",
            TimeSource::Given => "given",
        };
        let mut out = String::new();
        let _ = writeln!(out, "{} / {}", self.material, self.operation);
        let _ = writeln!(out, "{:<16} {:>12} min  ({source})", "unconventional", fmt_minutes(self.unconventional_time));
        let _ = writeln!(
            out,
            "{:<16} {:>12} min  ({}, benchmark {})",
            "conventional",
            fmt_minutes(self.classic_time),
            self.classic_method,
            self.classic_benchmark_id
        );
        let _ = writeln!(out, "{:<16} {:>12.4}", "ratio", self.ratio);
        let _ = writeln!(out, "{verdict}");
        out
    }
}

fn fmt_minutes(x: f64) -> String {
    format!("{x:.3}")
}

/// Compares a processing time with the fastest matching conventional benchmark.
///
/// Material and operation match case-insensitively after trimming.
pub fn comparative_determination(
    experiment_time: f64,
    time_source: TimeSource,
    material: &str,
    operation: &str,
    benchmarks: &[ClassicBenchmark],
) -> Result<Comparison> {
    if !(experiment_time > 0.0 && experiment_time.is_finite()) {
        return Err(Error::validation("experiment_time", "must be a positive number of minutes"));
    }
    let same = |a: &str, b: &str| a.trim().eq_ignore_ascii_case(b.trim());
    let best = benchmarks
        .iter()
        .filter(|b| same(&b.material, material) && same(&b.operation, operation))
        .min_by(|a, b| a.processing_time.total_cmp(&b.processing_time).then_with(|| a.id.cmp(&b.id)))
        .ok_or_else(|| Error::NotFound(format!("CLASSIC benchmark for ({material}, {operation})")))?;
    let ratio = experiment_time / best.processing_time;
    let verdict = match experiment_time.total_cmp(&best.processing_time) {
        std::cmp::Ordering::Less => Verdict::UnconventionalFaster,
        std::cmp::Ordering::Greater => Verdict::ClassicFaster,
        std::cmp::Ordering::Equal => Verdict::Equal,
    };
    Ok(Comparison {
        material: material.trim().to_string(),
        operation: operation.trim().to_string(),
        unconventional_time: experiment_time,
        time_source,
        classic_time: best.processing_time,
        classic_method: best.method_name.clone(),
        classic_benchmark_id: best.id.clone(),
        classic_cost_per_piece: best.cost_per_piece,
        ratio,
        verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn d(s: &str) -> Decimal {
        Decimal::from_str(s).unwrap()
    }

    fn bench(id: &str, material: &str, operation: &str, time: f64) -> ClassicBenchmark {
        ClassicBenchmark {
            id: id.into(),
            material: material.into(),
            operation: operation.into(),
            method_name: format!("milling-{id}"),
            processing_time: time,
            cost_per_piece: d("12.50"),
        }
    }

    #[test]
    fn zero_rates_cost_nothing() {
        let c = processing_cost(d("60"), &CostRates::default(), Decimal::ZERO).unwrap();
        assert_eq!(c.total, Decimal::ZERO);
    }

    #[test]
    fn machine_and_labor_for_two_hours() {
        let rates = CostRates { machine_rate: d("30"), labor_rate: d("20"), ..Default::default() };
        let c = processing_cost(d("120"), &rates, Decimal::ZERO).unwrap();
        assert_eq!(c.total, d("100"));
        assert_eq!(c.total.to_string(), "100.0000");
    }

    #[test]
    fn mixed_components_by_hand() {
        let rates = CostRates {
            machine_rate: d("40"),
            energy_rate: d("0.2"),
            power_draw: d("5"),
            electrode_wear_cost: d("3"),
            ..Default::default()
        };
        let c = processing_cost(d("90"), &rates, d("2")).unwrap();
        // 1.5 h · 40, 1.5 h · 5 kW · 0.2, 2 cm³ · 3
        assert_eq!(c.machine, d("60"));
        assert_eq!(c.energy, d("1.5"));
        assert_eq!(c.electrode, d("6"));
        assert_eq!(c.total, d("67.5"));
        assert_eq!(c.machine + c.labor + c.electrode + c.dielectric + c.energy, c.total);
    }

    #[test]
    fn rounding_is_half_up_per_component() {
        // 6 min = 0.1 h; 0.0005/h gives the exact midpoint 0.00005
        let rates = CostRates { machine_rate: d("0.0005"), labor_rate: d("0.0004"), ..Default::default() };
        let c = processing_cost(d("6"), &rates, Decimal::ZERO).unwrap();
        assert_eq!(c.machine, d("0.0001"));
        assert_eq!(c.labor, d("0.0000"));
        assert_eq!(c.total, d("0.0001"));
    }

    #[test]
    fn bad_inputs_name_the_field() {
        let r = CostRates::default();
        assert!(matches!(processing_cost(d("0"), &r, Decimal::ZERO), Err(Error::Validation { field, .. }) if field == "time"));
        assert!(matches!(processing_cost(d("-5"), &r, Decimal::ZERO), Err(Error::Validation { field, .. }) if field == "time"));
        assert!(matches!(processing_cost(d("5"), &r, d("-1")), Err(Error::Validation { field, .. }) if field == "electrode_wear_volume"));
        let neg = CostRates { labor_rate: d("-1"), ..Default::default() };
        assert!(matches!(processing_cost(d("5"), &neg, Decimal::ZERO), Err(Error::Validation { field, .. }) if field == "labor_rate"));
    }

    #[test]
    fn rates_serialize_as_strings() {
        let rates = CostRates { machine_rate: d("40.50"), ..Default::default() };
        let v = serde_json::to_value(&rates).unwrap();
        assert_eq!(v["machine_rate"], "40.50");
        let back: CostRates = serde_json::from_value(v).unwrap();
        assert_eq!(back, rates);
    }

    #[test]
    fn decimal_conversion_is_shortest() {
        assert_eq!(decimal_from_f64("t", 0.1).unwrap(), d("0.1"));
        assert_eq!(decimal_from_f64("t", 90.0).unwrap(), d("90"));
        assert!(decimal_from_f64("t", f64::NAN).is_err());
        assert!(decimal_from_f64("t", 1e40).is_err());
    }

    #[test]
    fn comparison_examples() {
        let table = vec![bench("C1", "steel", "drilling", 60.0), bench("C2", "steel", "drilling", 80.0)];
        let c = comparative_determination(30.0, TimeSource::Measured, "steel", "drilling", &table).unwrap();
        assert_eq!(c.ratio, 0.5);
        assert_eq!(c.verdict, Verdict::UnconventionalFaster);
        assert_eq!(c.classic_benchmark_id, "C1");
        let c = comparative_determination(60.0, TimeSource::Given, "Steel ", "DRILLING", &table).unwrap();
        assert_eq!(c.ratio, 1.0);
        assert_eq!(c.verdict, Verdict::Equal);
        let c = comparative_determination(70.0, TimeSource::Predicted, "steel", "drilling", &table).unwrap();
        assert_eq!(c.verdict, Verdict::ClassicFaster);
        match comparative_determination(30.0, TimeSource::Given, "titanium", "slotting", &table) {
            Err(Error::NotFound(m)) => assert!(m.contains("titanium") && m.contains("slotting")),
            other => panic!("{other:?}"),
        }
        assert!(comparative_determination(0.0, TimeSource::Given, "steel", "drilling", &table).is_err());
    }

    fn rates_strategy() -> impl Strategy<Value = CostRates> {
        let r = || (0u32..100_000).prop_map(|c| Decimal::new(c as i64, 2));
        (r(), r(), r(), r(), r(), r()).prop_map(|(a, b, c, d, e, f)| CostRates {
            machine_rate: a,
            labor_rate: b,
            electrode_wear_cost: c,
            dielectric_cost: d,
            energy_rate: e,
            power_draw: f,
        })
    }

    proptest! {
        #[test]
        fn breakdown_sums_to_total(rates in rates_strategy(), minutes in 1u32..100_000, wear in 0u32..10_000) {
            let c = processing_cost(Decimal::from(minutes), &rates, Decimal::new(wear as i64, 2)).unwrap();
            prop_assert_eq!(c.machine + c.labor + c.electrode + c.dielectric + c.energy, c.total);
            prop_assert_eq!(c.total.scale(), MONEY_SCALE);
        }

        #[test]
        fn time_terms_are_linear(rates in rates_strategy(), hours in 1u32..1000, wear in 0u32..10_000) {
            // whole hours keep every time-dependent component exact before rounding
            let w = Decimal::new(wear as i64, 2);
            let one = processing_cost(Decimal::from(60 * hours), &rates, w).unwrap();
            let two = processing_cost(Decimal::from(120 * hours), &rates, w).unwrap();
            let time_part = |c: &CostBreakdown| c.total - c.electrode;
            prop_assert_eq!(two.electrode, one.electrode);
            prop_assert_eq!(time_part(&two), time_part(&one) * Decimal::from(2));
        }

        #[test]
        fn verdict_agrees_with_ratio(t in 0.01f64..1000.0, classic in 0.01f64..1000.0) {
            let table = vec![bench("C", "m", "o", classic)];
            let c = comparative_determination(t, TimeSource::Given, "m", "o", &table).unwrap();
            prop_assert_eq!(c.ratio < 1.0, c.verdict == Verdict::UnconventionalFaster);
            prop_assert_eq!(c.ratio > 1.0, c.verdict == Verdict::ClassicFaster);
        }
    }
}
