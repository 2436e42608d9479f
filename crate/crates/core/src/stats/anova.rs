//! One- and two-factor dispersion analysis.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::dist::f_sf;
use super::{check_alpha, mean};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    FactorA,
    FactorB,
    Interaction,
    Error,
    Total,
}

impl Source {
    pub fn label(self) -> &'static str {
        match self {
            Source::FactorA => "factor_A",
            Source::FactorB => "factor_B",
            Source::Interaction => "interaction",
            Source::Error => "error",
            Source::Total => "total",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnovaRow {
    pub source: Source,
    pub sum_squares: f64,
    pub df: u64,
    pub mean_square: f64,
    /// `None` for the error and total rows. Infinite when the error term vanishes.
    #[serde(with = "opt_extended_f64")]
    pub f_statistic: Option<f64>,
    pub p_value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnovaTable {
    pub rows: Vec<AnovaRow>,
    pub alpha: f64,
    pub significant: BTreeMap<Source, bool>,
}

impl AnovaTable {
    pub fn row(&self, source: Source) -> Option<&AnovaRow> {
        self.rows.iter().find(|r| r.source == source)
    }

    /// Fixed-width text rendering.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<12} {:>14} {:>5} {:>14} {:>12} {:>10}",
            "source", "SS", "df", "MS", "F", "p"
        );
        for r in &self.rows {
            let f = match r.f_statistic {
                Some(f) if f.is_infinite() => "inf".to_string(),
                Some(f) => format!("{f:.4}"),
                None => String::new(),
            };
            let p = r.p_value.map(|p| format!("{p:.4}")).unwrap_or_default();
            let mark = match self.significant.get(&r.source) {
                Some(true) => " *",
                _ => "",
            };
            let _ = writeln!(
                out,
                "{:<12} {:>14.6} {:>5} {:>14.6} {:>12} {:>10}{}",
                r.source.label(),
                r.sum_squares,
                r.df,
                r.mean_square,
                f,
                p,
                mark
            );
        }
        let _ = writeln!(out, "(* significant at alpha = {})", self.alpha);
        out
    }
}

/// Sums of squares at or below this fraction of the raw data energy count as zero.
const ZERO_SS_REL: f64 = 1e-24;

struct EffectTest {
    f: f64,
    p: f64,
}

fn effect_test(ss_effect: f64, df_effect: u64, ss_error: f64, df_error: u64, scale: f64) -> Result<EffectTest> {
    let zero = |ss: f64| ss <= ZERO_SS_REL * scale;
    if zero(ss_effect) || df_effect == 0 {
        return Ok(EffectTest { f: 0.0, p: 1.0 });
    }
    if zero(ss_error) {
        return Ok(EffectTest { f: f64::INFINITY, p: 0.0 });
    }
    let f = (ss_effect / df_effect as f64) / (ss_error / df_error as f64);
    let p = f_sf(f, df_effect as f64, df_error as f64)?;
    Ok(EffectTest { f, p })
}

fn effect_row(source: Source, ss: f64, df: u64, test: &EffectTest) -> AnovaRow {
    AnovaRow {
        source,
        sum_squares: ss,
        df,
        mean_square: if df > 0 { ss / df as f64 } else { 0.0 },
        f_statistic: Some(test.f),
        p_value: Some(test.p),
    }
}

fn plain_row(source: Source, ss: f64, df: u64) -> AnovaRow {
    AnovaRow {
        source,
        sum_squares: ss,
        df,
        mean_square: if df > 0 { ss / df as f64 } else { 0.0 },
        f_statistic: None,
        p_value: None,
    }
}

pub fn anova_one_way<G: AsRef<[f64]>>(groups: &[G], alpha: f64) -> Result<AnovaTable> {
    check_alpha(alpha)?;
    let k = groups.len();
    if k < 2 {
        return Err(Error::InsufficientData(format!("need at least 2 groups, got {k}")));
    }
    if let Some(i) = groups.iter().position(|g| g.as_ref().is_empty()) {
        return Err(Error::InsufficientData(format!("group {} is empty", i + 1)));
    }
    let n: usize = groups.iter().map(|g| g.as_ref().len()).sum();
    if n <= k {
        return Err(Error::InsufficientData(format!(
            "need more observations ({n}) than groups ({k})"
        )));
    }
    let all: Vec<f64> = groups.iter().flat_map(|g| g.as_ref().iter().copied()).collect();
    check_finite(&all)?;
    let grand = mean(&all);
    let scale: f64 = all.iter().map(|x| x * x).sum();

    let mut ss_between = 0.0;
    let mut ss_within = 0.0;
    for g in groups {
        let g = g.as_ref();
        let m = mean(g);
        ss_between += g.len() as f64 * (m - grand).powi(2);
        ss_within += g.iter().map(|x| (x - m).powi(2)).sum::<f64>();
    }
    let ss_total: f64 = all.iter().map(|x| (x - grand).powi(2)).sum();
    let df_between = (k - 1) as u64;
    let df_within = (n - k) as u64;

    let test = effect_test(ss_between, df_between, ss_within, df_within, scale)?;
    let mut significant = BTreeMap::new();
    significant.insert(Source::FactorA, test.p < alpha);
    Ok(AnovaTable {
        rows: vec![
            effect_row(Source::FactorA, ss_between, df_between, &test),
            plain_row(Source::Error, ss_within, df_within),
            plain_row(Source::Total, ss_total, (n - 1) as u64),
        ],
        alpha,
        significant,
    })
}

/// Balanced two-factor analysis with replication.
///
/// `cells[i][j]` holds the replicates at level `i` of factor A and level `j`
/// of factor B; every cell must hold the same number `m >= 2` of values.
pub fn anova_two_way<C: AsRef<[f64]>>(cells: &[Vec<C>], alpha: f64) -> Result<AnovaTable> {
    check_alpha(alpha)?;
    let a = cells.len();
    if a < 2 {
        return Err(Error::UnsupportedDesign(format!("factor A needs at least 2 levels, got {a}")));
    }
    let b = cells[0].len();
    if b < 2 {
        return Err(Error::UnsupportedDesign(format!("factor B needs at least 2 levels, got {b}")));
    }
    if let Some(i) = cells.iter().position(|row| row.len() != b) {
        return Err(Error::UnsupportedDesign(format!(
            "incomplete layout: level {} of factor A has {} cells, expected {b}",
            i + 1,
            cells[i].len()
        )));
    }
    let m = cells[0][0].as_ref().len();
    for (i, row) in cells.iter().enumerate() {
        for (j, cell) in row.iter().enumerate() {
            if cell.as_ref().len() != m {
                return Err(Error::UnsupportedDesign(format!(
                    "unbalanced layout: cell ({}, {}) has {} replicates, expected {m}",
                    i + 1,
                    j + 1,
                    cell.as_ref().len()
                )));
            }
        }
    }
    if m < 2 {
        return Err(Error::UnsupportedDesign("each cell needs at least 2 replicates".into()));
    }

    let all: Vec<f64> = cells
        .iter()
        .flat_map(|row| row.iter().flat_map(|c| c.as_ref().iter().copied()))
        .collect();
    check_finite(&all)?;
    let grand = mean(&all);
    let scale: f64 = all.iter().map(|x| x * x).sum();
    let cell_means: Vec<Vec<f64>> = cells
        .iter()
        .map(|row| row.iter().map(|c| mean(c.as_ref())).collect())
        .collect();
    let a_means: Vec<f64> = cell_means.iter().map(|row| mean(row)).collect();
    let b_means: Vec<f64> = (0..b)
        .map(|j| cell_means.iter().map(|row| row[j]).sum::<f64>() / a as f64)
        .collect();

    let (af, bf, mf) = (a as f64, b as f64, m as f64);
    let ss_a = bf * mf * a_means.iter().map(|x| (x - grand).powi(2)).sum::<f64>();
    let ss_b = af * mf * b_means.iter().map(|x| (x - grand).powi(2)).sum::<f64>();
    let mut ss_ab = 0.0;
    let mut ss_err = 0.0;
    for i in 0..a {
        for j in 0..b {
            let cm = cell_means[i][j];
            ss_ab += (cm - a_means[i] - b_means[j] + grand).powi(2);
            ss_err += cells[i][j].as_ref().iter().map(|x| (x - cm).powi(2)).sum::<f64>();
        }
    }
    ss_ab *= mf;
    let ss_total: f64 = all.iter().map(|x| (x - grand).powi(2)).sum();

    let df_a = (a - 1) as u64;
    let df_b = (b - 1) as u64;
    let df_ab = df_a * df_b;
    let df_err = (a * b * (m - 1)) as u64;

    let ta = effect_test(ss_a, df_a, ss_err, df_err, scale)?;
    let tb = effect_test(ss_b, df_b, ss_err, df_err, scale)?;
    let tab = effect_test(ss_ab, df_ab, ss_err, df_err, scale)?;
    let mut significant = BTreeMap::new();
    significant.insert(Source::FactorA, ta.p < alpha);
    significant.insert(Source::FactorB, tb.p < alpha);
    significant.insert(Source::Interaction, tab.p < alpha);
    Ok(AnovaTable {
        rows: vec![
            effect_row(Source::FactorA, ss_a, df_a, &ta),
            effect_row(Source::FactorB, ss_b, df_b, &tb),
            effect_row(Source::Interaction, ss_ab, df_ab, &tab),
            plain_row(Source::Error, ss_err, df_err),
            plain_row(Source::Total, ss_total, (a * b * m - 1) as u64),
        ],
        alpha,
        significant,
    })
}

fn check_finite(values: &[f64]) -> Result<()> {
    match values.iter().position(|x| !x.is_finite()) {
        Some(i) => Err(Error::validation("data", format!("value #{} is not finite", i + 1))),
        None => Ok(()),
    }
}

/// JSON has no infinity; an infinite F statistic travels as the string `"inf"`.
mod opt_extended_f64 {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            None => s.serialize_none(),
            Some(x) if x.is_infinite() => {
                s.serialize_some(if *x > 0.0 { "inf" } else { "-inf" })
            }
            Some(x) => s.serialize_some(x),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
        match Option::<Repr>::deserialize(d)? {
            None => Ok(None),
            Some(Repr::Num(x)) => Ok(Some(x)),
            Some(Repr::Text(t)) => match t.as_str() {
                "inf" => Ok(Some(f64::INFINITY)),
                "-inf" => Ok(Some(f64::NEG_INFINITY)),
                other => Err(serde::de::Error::custom(format!("expected number, got {other:?}"))),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::dist::f_cdf;

    fn ss(t: &AnovaTable, s: Source) -> f64 {
        t.row(s).unwrap().sum_squares
    }

    #[test]
    fn identical_means_give_zero_f() {
        let t = anova_one_way(&[vec![1.0, 3.0], vec![2.0, 2.0], vec![0.0, 4.0]], 0.05).unwrap();
        assert_eq!(ss(&t, Source::FactorA), 0.0);
        assert_eq!(t.rows[0].f_statistic, Some(0.0));
        assert_eq!(t.rows[0].p_value, Some(1.0));
    }

    #[test]
    fn hand_computed_one_way() {
        let t = anova_one_way(&[[1.0, 2.0, 3.0], [2.0, 3.0, 4.0], [3.0, 4.0, 5.0]], 0.05).unwrap();
        assert!((ss(&t, Source::FactorA) - 6.0).abs() < 1e-12);
        assert!((ss(&t, Source::Error) - 6.0).abs() < 1e-12);
        assert_eq!(t.rows[0].df, 2);
        assert_eq!(t.rows[1].df, 6);
        assert!((t.rows[0].f_statistic.unwrap() - 3.0).abs() < 1e-12);
        let p = 1.0 - f_cdf(3.0, 2.0, 6.0).unwrap();
        assert!((t.rows[0].p_value.unwrap() - p).abs() < 1e-12);
        assert!((p - 0.125).abs() < 1e-12);
        assert_eq!(t.significant[&Source::FactorA], false);
    }

    #[test]
    fn zero_within_spread_gives_infinite_f() {
        let t = anova_one_way(&[[0.0, 0.0], [10.0, 10.0]], 0.05).unwrap();
        assert_eq!(ss(&t, Source::Error), 0.0);
        assert_eq!(ss(&t, Source::FactorA), 100.0);
        assert_eq!(t.rows[0].f_statistic, Some(f64::INFINITY));
        assert_eq!(t.rows[0].p_value, Some(0.0));
        assert!(t.significant[&Source::FactorA]);
    }

    #[test]
    fn all_identical_data() {
        let t = anova_one_way(&[[7.0, 7.0], [7.0, 7.0]], 0.05).unwrap();
        assert_eq!(t.rows[0].f_statistic, Some(0.0));
        assert_eq!(t.rows[0].p_value, Some(1.0));
    }

    #[test]
    fn one_way_input_errors() {
        assert!(anova_one_way(&[vec![1.0, 2.0]], 0.05).is_err());
        assert!(anova_one_way(&[vec![1.0], vec![2.0]], 0.05).is_err());
        assert!(anova_one_way(&[vec![1.0, 2.0], vec![]], 0.05).is_err());
    }

    #[test]
    fn two_way_constant_cells() {
        let cells = vec![vec![vec![4.0; 3]; 3]; 2];
        let t = anova_two_way(&cells, 0.05).unwrap();
        for r in &t.rows {
            assert_eq!(r.sum_squares, 0.0);
            if let Some(f) = r.f_statistic {
                assert_eq!(f, 0.0);
            }
        }
    }

    #[test]
    fn two_way_single_effect() {
        let cells = vec![
            vec![vec![0.0, 0.0], vec![0.0, 0.0]],
            vec![vec![10.0, 10.0], vec![10.0, 10.0]],
        ];
        let t = anova_two_way(&cells, 0.05).unwrap();
        assert_eq!(ss(&t, Source::FactorB), 0.0);
        assert_eq!(ss(&t, Source::Interaction), 0.0);
        assert_eq!(t.rows[0].f_statistic, Some(f64::INFINITY));
    }

    #[test]
    fn two_way_planted_additive_effects() {
        // y = A + B with A = +-1, B = +-2, no noise
        let mut cells = Vec::new();
        for a in [-1.0, 1.0] {
            let mut row = Vec::new();
            for b in [-2.0, 2.0] {
                row.push(vec![a + b, a + b]);
            }
            cells.push(row);
        }
        let t = anova_two_way(&cells, 0.05).unwrap();
        assert!((ss(&t, Source::FactorA) - 8.0).abs() < 1e-12);
        assert!((ss(&t, Source::FactorB) - 32.0).abs() < 1e-12);
        assert!(ss(&t, Source::Interaction).abs() < 1e-12);
        assert!(ss(&t, Source::Error).abs() < 1e-12);
        assert_eq!(t.rows[2].df, 1);
        assert_eq!(t.rows[3].df, 4);
    }

    #[test]
    fn two_way_rejects_unbalanced() {
        let cells = vec![
            vec![vec![1.0, 2.0], vec![1.0, 2.0]],
            vec![vec![1.0, 2.0], vec![1.0, 2.0, 3.0]],
        ];
        assert!(matches!(anova_two_way(&cells, 0.05), Err(Error::UnsupportedDesign(_))));
        let ragged = vec![vec![vec![1.0, 2.0], vec![1.0, 2.0]], vec![vec![1.0, 2.0]]];
        assert!(matches!(anova_two_way(&ragged, 0.05), Err(Error::UnsupportedDesign(_))));
    }

    #[test]
    fn infinite_f_round_trips_through_json() {
        let t = anova_one_way(&[[0.0, 0.0], [10.0, 10.0]], 0.05).unwrap();
        let json = serde_json::to_string(&t).unwrap();
        assert!(json.contains("\"f_statistic\":\"inf\""));
        let back: AnovaTable = serde_json::from_str(&json).unwrap();
        assert_eq!(back, t);
    }
}
