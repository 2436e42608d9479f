//! Fit-many-then-select over a class of candidate families.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::fit::{fit_mono, fit_response_surface, FittedModel, Interval, ModelFamily};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    #[default]
    AdjR2,
    Rmse,
}

impl std::str::FromStr for Criterion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "adj_r2" => Ok(Criterion::AdjR2),
            "rmse" => Ok(Criterion::Rmse),
            other => Err(Error::validation("criterion", format!("unknown criterion {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedModel {
    pub model: FittedModel,
    pub criterion_value: Option<f64>,
    pub formula: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedFamily {
    pub family: ModelFamily,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelRanking {
    pub criterion: Criterion,
    pub entries: Vec<RankedModel>,
    pub skipped: Vec<SkippedFamily>,
}

impl ModelRanking {
    pub fn best(&self) -> Option<&FittedModel> {
        self.entries.first().map(|e| &e.model)
    }
}

/// Criterion values closer than this (relative to the response scale for
/// RMSE) rank as ties and fall through to the coefficient-count rule.
const TIE_RESOLUTION: f64 = 1e-9;

/// Ranks fitted models best-first; ties go to fewer coefficients, then family order.
pub fn rank_models(models: Vec<FittedModel>, criterion: Criterion, response_scale: f64) -> Vec<RankedModel> {
    let scale = if response_scale > 0.0 { response_scale } else { 1.0 };
    let key = |m: &FittedModel| -> f64 {
        match criterion {
            // higher is better; absent sorts last
            Criterion::AdjR2 => m.adj_r2.map_or(f64::INFINITY, |v| -(v / TIE_RESOLUTION).round()),
            Criterion::Rmse => (m.rmse / (TIE_RESOLUTION * scale)).round(),
        }
    };
    let mut entries: Vec<(f64, FittedModel)> = models.into_iter().map(|m| (key(&m), m)).collect();
    entries.sort_by(|(ka, a), (kb, b)| {
        ka.total_cmp(kb)
            .then_with(|| a.coefficients.len().cmp(&b.coefficients.len()))
            .then_with(|| a.family.cmp(&b.family))
            .then_with(|| a.factor_codes.cmp(&b.factor_codes))
            .then(Ordering::Equal)
    });
    entries
        .into_iter()
        .map(|(_, model)| RankedModel {
            criterion_value: match criterion {
                Criterion::AdjR2 => model.adj_r2,
                Criterion::Rmse => Some(model.rmse),
            },
            formula: model.formula(),
            model,
        })
        .collect()
}

fn response_scale(ys: impl Iterator<Item = f64>) -> f64 {
    let (n, s) = ys.fold((0usize, 0.0), |(n, s), y| (n + 1, s + y * y));
    if n == 0 {
        0.0
    } else {
        (s / n as f64).sqrt()
    }
}

fn finish(fitted: Vec<FittedModel>, skipped: Vec<SkippedFamily>, criterion: Criterion, scale: f64) -> Result<ModelRanking> {
    if fitted.is_empty() {
        let reasons: Vec<String> = skipped.iter().map(|s| format!("{}: {}", s.family, s.reason)).collect();
        return Err(Error::NoModel(if reasons.is_empty() {
            "no candidate families given".into()
        } else {
            reasons.join("; ")
        }));
    }
    Ok(ModelRanking {
        criterion,
        entries: rank_models(fitted, criterion, scale),
        skipped,
    })
}

/// Fits every applicable mono family and ranks the results.
pub fn simulate_and_select(points: &[(f64, f64)], families: &[ModelFamily], criterion: Criterion) -> Result<ModelRanking> {
    let mut fitted = Vec::new();
    let mut skipped = Vec::new();
    let mut seen = Vec::new();
    for &family in families {
        if seen.contains(&family) {
            continue;
        }
        seen.push(family);
        match fit_mono(family, points) {
            Ok(m) => fitted.push(m),
            Err(e) => skipped.push(SkippedFamily { family, reason: e.to_string() }),
        }
    }
    finish(fitted, skipped, criterion, response_scale(points.iter().map(|p| p.1)))
}

/// Multi-variable counterpart over response-surface families.
pub fn simulate_and_select_multi(
    points: &[(Vec<f64>, f64)],
    families: &[ModelFamily],
    criterion: Criterion,
    domain: Option<&[Interval]>,
) -> Result<ModelRanking> {
    let mut fitted = Vec::new();
    let mut skipped = Vec::new();
    let mut seen = Vec::new();
    for &family in families {
        if seen.contains(&family) {
            continue;
        }
        seen.push(family);
        match fit_response_surface(points, family, domain) {
            Ok(m) => fitted.push(m),
            Err(e) => skipped.push(SkippedFamily { family, reason: e.to_string() }),
        }
    }
    finish(fitted, skipped, criterion, response_scale(points.iter().map(|p| p.1)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn data(f: impl Fn(f64) -> f64, xs: &[f64]) -> Vec<(f64, f64)> {
        xs.iter().map(|&x| (x, f(x))).collect()
    }

    #[test]
    fn power_data_selects_power() {
        let pts = data(|x| 2.0 * x.powf(1.5), &[1.0, 2.0, 4.0, 8.0]);
        let r = simulate_and_select(&pts, &ModelFamily::MONO, Criterion::AdjR2).unwrap();
        assert_eq!(r.entries[0].model.family, ModelFamily::Power);
        assert!((r.entries[0].criterion_value.unwrap() - 1.0).abs() < 1e-12);
        assert!(r.entries[1].criterion_value.unwrap() < 1.0 - 1e-6);
    }

    #[test]
    fn line_data_prefers_fewest_coefficients() {
        let pts = data(|x| 3.0 - 0.5 * x, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0]);
        let r = simulate_and_select(&pts, &ModelFamily::MONO, Criterion::AdjR2).unwrap();
        let order: Vec<_> = r.entries.iter().take(4).map(|e| e.model.family).collect();
        assert_eq!(order, vec![ModelFamily::Poly1, ModelFamily::Poly2, ModelFamily::Poly3, ModelFamily::Poly4]);
        let r = simulate_and_select(&pts, &ModelFamily::MONO, Criterion::Rmse).unwrap();
        assert_eq!(r.entries[0].model.family, ModelFamily::Poly1);
    }

    #[test]
    fn zero_x_skips_power_and_log() {
        let pts = data(|x| 1.0 + x, &[0.0, 1.0, 2.0, 3.0, 4.0, 5.0]);
        let r = simulate_and_select(&pts, &ModelFamily::MONO, Criterion::AdjR2).unwrap();
        let skipped: Vec<_> = r.skipped.iter().map(|s| s.family).collect();
        assert!(skipped.contains(&ModelFamily::Power));
        assert!(skipped.contains(&ModelFamily::Logarithmic));
        assert!(r.skipped.iter().all(|s| s.reason.contains("domain")));
    }

    #[test]
    fn nothing_applicable() {
        let pts = [(0.0, -1.0), (1.0, -2.0), (2.0, -3.0)];
        let err = simulate_and_select(&pts, &[ModelFamily::Power, ModelFamily::Exponential], Criterion::AdjR2).unwrap_err();
        assert!(matches!(err, Error::NoModel(_)));
    }
}
