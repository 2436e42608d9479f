//! Optimal processing conditions over the factor box.
//!
//! The search is deterministic: a full grid over the free factors, then
//! coordinate descent with step halving from the best grid point. For a
//! single quadratic response surface the analytic stationary point (clipped
//! to the box) is also evaluated and kept when it scores better.
//!
//! Several objectives are combined by min-max normalizing each one over the
//! grid and summing them with normalized weights; minimized objectives enter
//! with `+1`, maximized ones with `-1`, so lower scalarized values are better.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{FittedModel, Interval, ModelFamily};

/// Most free factors the search accepts.
pub const MAX_FREE_FACTORS: usize = 6;
/// Relative step at which coordinate descent stops.
pub const MIN_RELATIVE_STEP: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sense {
    Minimize,
    Maximize,
}

impl Sense {
    fn sign(self) -> f64 {
        match self {
            Sense::Minimize => 1.0,
            Sense::Maximize => -1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Objective {
    pub model: FittedModel,
    pub sense: Sense,
    pub weight: f64,
}

impl Objective {
    pub fn minimize(model: FittedModel) -> Self {
        Objective { model, sense: Sense::Minimize, weight: 1.0 }
    }

    pub fn maximize(model: FittedModel) -> Self {
        Objective { model, sense: Sense::Maximize, weight: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct OptimizationProblem {
    pub objectives: Vec<Objective>,
    /// Per-factor search box; factors left out use the intersection of the
    /// fitted domains of the models that depend on them.
    #[serde(default)]
    pub bounds: BTreeMap<String, Interval>,
    #[serde(default)]
    pub fixed_factors: BTreeMap<String, f64>,
}

/// Min-max normalization of one objective, taken over the search grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub min: f64,
    pub max: f64,
}

impl Normalization {
    pub fn identity() -> Self {
        Normalization { min: 0.0, max: 1.0 }
    }

    fn apply(&self, v: f64) -> f64 {
        let range = self.max - self.min;
        if range > 0.0 {
            (v - self.min) / range
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scalarized {
    pub value: f64,
    pub extrapolated: bool,
}

fn weight_total(objectives: &[Objective]) -> Result<f64> {
    if objectives.is_empty() {
        return Err(Error::validation("objectives", "at least one objective is required"));
    }
    if let Some(o) = objectives.iter().find(|o| !(o.weight >= 0.0 && o.weight.is_finite())) {
        return Err(Error::validation("weight", format!("weights must be finite and non-negative, got {}", o.weight)));
    }
    let total: f64 = objectives.iter().map(|o| o.weight).sum();
    if total <= 0.0 {
        return Err(Error::validation("weight", "weights must not all be zero"));
    }
    Ok(total)
}

/// Weighted, normalized, sense-signed sum of the objectives at `settings`.
pub fn scalarize(
    objectives: &[Objective],
    normalizations: &[Normalization],
    settings: &BTreeMap<String, f64>,
) -> Result<Scalarized> {
    let total = weight_total(objectives)?;
    if normalizations.len() != objectives.len() {
        return Err(Error::validation(
            "normalizations",
            format!("{} given for {} objectives", normalizations.len(), objectives.len()),
        ));
    }
    let mut value = 0.0;
    let mut extrapolated = false;
    for (o, n) in objectives.iter().zip(normalizations) {
        let p = o.model.predict_named(settings)?;
        extrapolated |= p.extrapolated;
        value += o.weight / total * o.sense.sign() * n.apply(p.value);
    }
    Ok(Scalarized { value, extrapolated })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveValue {
    pub output_code: String,
    pub family: ModelFamily,
    pub sense: Sense,
    pub weight: f64,
    pub value: f64,
    pub extrapolated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub settings: BTreeMap<String, f64>,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimumReport {
    pub settings: BTreeMap<String, f64>,
    pub objective_values: Vec<ObjectiveValue>,
    pub scalarized_value: f64,
    pub normalizations: Vec<Normalization>,
    pub grid_points_per_factor: usize,
    pub evaluations: usize,
    pub iterations: usize,
    pub trace: Vec<TracePoint>,
    pub active_bounds: Vec<String>,
    pub free_factors: Vec<String>,
    pub fixed_factors: BTreeMap<String, f64>,
    pub bounds: BTreeMap<String, Interval>,
    pub stationary_point_used: bool,
}

impl OptimumReport {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:<10} {:>14} {:>14} {:>14}  note", "factor", "value", "low", "high");
        for (code, v) in &self.settings {
            let (low, high, note) = match self.bounds.get(code) {
                Some(b) => {
                    let note = if self.active_bounds.contains(code) { "at bound" } else { "" };
                    (format!("{:.6}", b.low), format!("{:.6}", b.high), note)
                }
                None => (String::new(), String::new(), "fixed"),
            };
            let _ = writeln!(out, "{code:<10} {v:>14.6} {low:>14} {high:>14}  {note}");
        }
        let _ = writeln!(out);
        let _ = writeln!(out, "{:<10} {:<13} {:<9} {:>7} {:>14}", "output", "model", "sense", "weight", "predicted");
        for o in &self.objective_values {
            let sense = match o.sense {
                Sense::Minimize => "minimize",
                Sense::Maximize => "maximize",
            };
            let flag = if o.extrapolated { "  (extrapolated)" } else { "" };
            let _ = writeln!(
                out,
                "{:<10} {:<13} {:<9} {:>7.3} {:>14.6}{flag}",
                o.output_code,
                o.family.name(),
                sense,
                o.weight,
                o.value
            );
        }
        let _ = writeln!(out);
        let _ = writeln!(out, "scalarized value: {:.9}", self.scalarized_value);
        let _ = writeln!(
            out,
            "search: {} grid points per factor, {} evaluations, {} sweeps, {} improvements",
            self.grid_points_per_factor,
            self.evaluations,
            self.iterations,
            self.trace.len()
        );
        let active = if self.active_bounds.is_empty() { "none".to_string() } else { self.active_bounds.join(", ") };
        let _ = writeln!(out, "active bounds: {active}");
        out
    }
}

#[derive(Debug, Clone, Copy)]
enum Slot {
    Free(usize),
    Fixed(f64),
}

/// Problem compiled to index form for fast repeated evaluation.
struct Compiled<'a> {
    objectives: &'a [Objective],
    weights: Vec<f64>,
    free: Vec<String>,
    bounds: Vec<Interval>,
    slots: Vec<Vec<Slot>>,
}

impl Compiled<'_> {
    fn raw(&self, x: &[f64]) -> Vec<f64> {
        self.objectives
            .iter()
            .zip(&self.slots)
            .map(|(o, slots)| o.model.eval(&self.model_input(slots, x)))
            .collect()
    }

    fn model_input(&self, slots: &[Slot], x: &[f64]) -> Vec<f64> {
        slots
            .iter()
            .map(|s| match *s {
                Slot::Free(i) => x[i],
                Slot::Fixed(v) => v,
            })
            .collect()
    }

    fn scalar(&self, x: &[f64], norms: &[Normalization]) -> f64 {
        self.raw(x)
            .iter()
            .zip(norms)
            .zip(self.objectives.iter().zip(&self.weights))
            .map(|((v, n), (o, w))| w * o.sense.sign() * n.apply(*v))
            .sum()
    }

    fn settings(&self, x: &[f64], fixed: &BTreeMap<String, f64>) -> BTreeMap<String, f64> {
        let mut s = fixed.clone();
        for (code, v) in self.free.iter().zip(x) {
            s.insert(code.clone(), *v);
        }
        s
    }
}

fn compile<'a>(problem: &'a OptimizationProblem) -> Result<Compiled<'a>> {
    let total = weight_total(&problem.objectives)?;
    let mut free = Vec::new();
    let mut seen = BTreeSet::new();
    for o in &problem.objectives {
        for code in &o.model.factor_codes {
            if !problem.fixed_factors.contains_key(code) && seen.insert(code.clone()) {
                free.push(code.clone());
            }
        }
    }
    let used: BTreeSet<&String> = problem.objectives.iter().flat_map(|o| o.model.factor_codes.iter()).collect();
    for code in problem.bounds.keys().chain(problem.fixed_factors.keys()) {
        if !used.contains(code) {
            return Err(Error::validation(code.clone(), "no objective model uses this factor"));
        }
    }
    for (code, v) in &problem.fixed_factors {
        if !v.is_finite() {
            return Err(Error::validation(code.clone(), "fixed value must be finite"));
        }
        if problem.bounds.contains_key(code) {
            return Err(Error::validation(code.clone(), "a factor cannot be both fixed and bounded"));
        }
    }
    if free.len() > MAX_FREE_FACTORS {
        return Err(Error::Capacity(format!(
            "{} free factors exceed the limit of {MAX_FREE_FACTORS}; fix some factors",
            free.len()
        )));
    }

    let mut bounds = Vec::with_capacity(free.len());
    for code in &free {
        let mut domain = Interval { low: f64::NEG_INFINITY, high: f64::INFINITY };
        for o in &problem.objectives {
            if let Some(j) = o.model.factor_codes.iter().position(|c| c == code) {
                let d = o.model.domain[j];
                domain.low = domain.low.max(d.low);
                domain.high = domain.high.min(d.high);
            }
        }
        if domain.low > domain.high {
            return Err(Error::validation(code.clone(), "the objective models' fitted domains do not overlap"));
        }
        let b = match problem.bounds.get(code) {
            Some(b) => {
                if !(b.low.is_finite() && b.high.is_finite()) {
                    return Err(Error::validation(code.clone(), "bounds must be finite"));
                }
                if b.low < domain.low - 1e-12 * domain.low.abs().max(1.0)
                    || b.high > domain.high + 1e-12 * domain.high.abs().max(1.0)
                {
                    return Err(Error::validation(
                        code.clone(),
                        format!(
                            "bounds [{}, {}] leave the fitted domain [{}, {}]",
                            b.low, b.high, domain.low, domain.high
                        ),
                    ));
                }
                *b
            }
            None => domain,
        };
        if !(b.low < b.high) {
            return Err(Error::validation(code.clone(), format!("degenerate bounds [{}, {}]", b.low, b.high)));
        }
        bounds.push(b);
    }

    let slots = problem
        .objectives
        .iter()
        .map(|o| {
            o.model
                .factor_codes
                .iter()
                .map(|c| match problem.fixed_factors.get(c) {
                    Some(v) => Slot::Fixed(*v),
                    None => Slot::Free(free.iter().position(|f| f == c).expect("free factor listed")),
                })
                .collect()
        })
        .collect();

    Ok(Compiled {
        objectives: &problem.objectives,
        weights: problem.objectives.iter().map(|o| o.weight / total).collect(),
        free,
        bounds,
        slots,
    })
}

/// Searches the factor box for the best scalarized value.
pub fn optimize(problem: &OptimizationProblem) -> Result<OptimumReport> {
    let c = compile(problem)?;
    let k = c.free.len();
    let per_factor: usize = if k <= 4 { 11 } else { 7 };
    let levels: Vec<Vec<f64>> = c
        .bounds
        .iter()
        .map(|b| {
            (0..per_factor)
                .map(|i| {
                    if i + 1 == per_factor {
                        b.high
                    } else {
                        b.low + (b.high - b.low) * i as f64 / (per_factor - 1) as f64
                    }
                })
                .collect()
        })
        .collect();

    // stage 1: grid, first factor varying slowest so the first minimum found
    // is the lexicographically smallest
    let total_points = per_factor.pow(k as u32);
    let mut grid = Vec::with_capacity(total_points);
    let mut raw_values = Vec::with_capacity(total_points);
    let mut x = vec![0.0; k];
    for idx in 0..total_points {
        let mut rest = idx;
        for j in (0..k).rev() {
            x[j] = levels[j][rest % per_factor];
            rest /= per_factor;
        }
        raw_values.push(c.raw(&x));
        grid.push(x.clone());
    }
    let mut norms = vec![Normalization { min: f64::INFINITY, max: f64::NEG_INFINITY }; c.objectives.len()];
    for row in &raw_values {
        for (n, v) in norms.iter_mut().zip(row) {
            n.min = n.min.min(*v);
            n.max = n.max.max(*v);
        }
    }
    if norms.iter().any(|n| !(n.min.is_finite() && n.max.is_finite())) {
        return Err(Error::Numerical("an objective model is not finite over the search box".into()));
    }
    let scalar_of = |row: &[f64]| -> f64 {
        row.iter()
            .zip(&norms)
            .zip(c.objectives.iter().zip(&c.weights))
            .map(|((v, n), (o, w))| w * o.sense.sign() * n.apply(*v))
            .sum()
    };
    let mut best_idx = 0;
    let mut best_val = f64::INFINITY;
    for (i, row) in raw_values.iter().enumerate() {
        let v = scalar_of(row);
        if v < best_val {
            best_val = v;
            best_idx = i;
        }
    }
    let mut evaluations = total_points;
    let mut best_x = grid[best_idx].clone();
    let mut trace = vec![TracePoint { settings: c.settings(&best_x, &problem.fixed_factors), value: best_val }];

    // stage 2: coordinate descent with step halving
    let mut steps: Vec<f64> = c.bounds.iter().map(|b| (b.high - b.low) / (per_factor - 1) as f64).collect();
    let min_steps: Vec<f64> = c.bounds.iter().map(|b| MIN_RELATIVE_STEP * (b.high - b.low)).collect();
    let mut iterations = 0;
    if k > 0 {
        loop {
            iterations += 1;
            let mut improved = false;
            for j in 0..k {
                for dir in [1.0, -1.0] {
                    let b = c.bounds[j];
                    let candidate = (best_x[j] + dir * steps[j]).clamp(b.low, b.high);
                    if candidate == best_x[j] {
                        continue;
                    }
                    let mut trial = best_x.clone();
                    trial[j] = candidate;
                    let v = c.scalar(&trial, &norms);
                    evaluations += 1;
                    if v < best_val {
                        best_val = v;
                        best_x = trial;
                        trace.push(TracePoint { settings: c.settings(&best_x, &problem.fixed_factors), value: v });
                        improved = true;
                        break;
                    }
                }
            }
            if !improved {
                if steps.iter().zip(&min_steps).all(|(s, m)| s <= m) {
                    break;
                }
                for s in steps.iter_mut() {
                    *s *= 0.5;
                }
            }
            if iterations >= 1_000_000 {
                return Err(Error::Numerical("coordinate descent did not settle".into()));
            }
        }
    }

    // analytic check for a single quadratic surface
    let mut stationary_point_used = false;
    if c.objectives.len() == 1 && c.objectives[0].model.family == ModelFamily::RsQuadratic && k > 0 {
        if let Some(sp) = clipped_stationary_point(&c) {
            let v = c.scalar(&sp, &norms);
            evaluations += 1;
            if v < best_val {
                best_val = v;
                best_x = sp;
                stationary_point_used = true;
                trace.push(TracePoint { settings: c.settings(&best_x, &problem.fixed_factors), value: v });
            }
        }
    }

    let settings = c.settings(&best_x, &problem.fixed_factors);
    let objective_values = c
        .objectives
        .iter()
        .zip(&c.slots)
        .map(|(o, slots)| {
            let input = c.model_input(slots, &best_x);
            ObjectiveValue {
                output_code: o.model.output_code.clone(),
                family: o.model.family,
                sense: o.sense,
                weight: o.weight,
                value: o.model.eval(&input),
                extrapolated: !o.model.in_domain(&input),
            }
        })
        .collect();
    let active_bounds = c
        .free
        .iter()
        .zip(&best_x)
        .zip(&c.bounds)
        .filter(|((_, v), b)| {
            let tol = 1e-9 * (b.high - b.low);
            (**v - b.low).abs() <= tol || (b.high - **v).abs() <= tol
        })
        .map(|((code, _), _)| code.clone())
        .collect();

    Ok(OptimumReport {
        settings,
        objective_values,
        scalarized_value: best_val,
        normalizations: norms,
        grid_points_per_factor: per_factor,
        evaluations,
        iterations,
        trace,
        active_bounds,
        free_factors: c.free.clone(),
        fixed_factors: problem.fixed_factors.clone(),
        bounds: c.free.iter().cloned().zip(c.bounds.iter().copied()).collect(),
        stationary_point_used,
    })
}

/// Stationary point of the single quadratic objective over the free factors,
/// clipped to the box. `None` when the reduced Hessian is singular.
fn clipped_stationary_point(c: &Compiled<'_>) -> Option<Vec<f64>> {
    let model = &c.objectives[0].model;
    let slots = &c.slots[0];
    let n = model.arity();
    let b = &model.coded_coefficients;
    let lin = &b[1..=n];
    // symmetric Hessian in coded units
    let mut h = vec![vec![0.0; n]; n];
    let mut idx = 1 + n;
    for i in 0..n {
        for j in (i + 1)..n {
            h[i][j] = b[idx];
            h[j][i] = b[idx];
            idx += 1;
        }
    }
    for (i, row) in h.iter_mut().enumerate() {
        row[i] = 2.0 * b[idx + i];
    }
    let coded_fixed: Vec<Option<f64>> = slots
        .iter()
        .zip(&model.centering)
        .map(|(s, k)| match s {
            Slot::Fixed(v) => Some(k.encode(*v)),
            Slot::Free(_) => None,
        })
        .collect();
    let free_idx: Vec<usize> = (0..n).filter(|&i| coded_fixed[i].is_none()).collect();
    let m = free_idx.len();
    // H_ff u_f = -(g_f + H_fx u_x)
    let mut a = vec![vec![0.0; m + 1]; m];
    for (r, &i) in free_idx.iter().enumerate() {
        for (col, &j) in free_idx.iter().enumerate() {
            a[r][col] = h[i][j];
        }
        let mut rhs = -lin[i];
        for (j, u) in coded_fixed.iter().enumerate() {
            if let Some(u) = u {
                rhs -= h[i][j] * u;
            }
        }
        a[r][m] = rhs;
    }
    let u = solve_dense(a)?;

    let mut x = vec![0.0; c.free.len()];
    for (r, &i) in free_idx.iter().enumerate() {
        if let Slot::Free(pos) = slots[i] {
            let b = c.bounds[pos];
            x[pos] = model.centering[i].decode(u[r]).clamp(b.low, b.high);
        }
    }
    Some(x)
}

/// Gaussian elimination with partial pivoting on an augmented matrix.
fn solve_dense(mut a: Vec<Vec<f64>>) -> Option<Vec<f64>> {
    let m = a.len();
    let scale = a.iter().flat_map(|r| r[..m].iter()).fold(0.0f64, |s, v| s.max(v.abs()));
    if scale == 0.0 {
        return None;
    }
    for col in 0..m {
        let piv = (col..m).max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))?;
        if a[piv][col].abs() <= 1e-12 * scale {
            return None;
        }
        a.swap(col, piv);
        for r in 0..m {
            if r != col {
                let f = a[r][col] / a[col][col];
                if f != 0.0 {
                    for k in col..=m {
                        a[r][k] -= f * a[col][k];
                    }
                }
            }
        }
    }
    Some((0..m).map(|i| a[i][m] / a[i][i]).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WhatIfPrediction {
    pub output_code: String,
    pub family: ModelFamily,
    pub factor_codes: Vec<String>,
    pub value: f64,
    pub extrapolated: bool,
}

/// Evaluates each model at `settings`, in model order.
pub fn what_if(models: &[FittedModel], settings: &BTreeMap<String, f64>) -> Result<Vec<WhatIfPrediction>> {
    models
        .iter()
        .map(|m| {
            let p = m.predict_named(settings)?;
            Ok(WhatIfPrediction {
                output_code: m.output_code.clone(),
                family: m.family,
                factor_codes: m.factor_codes.clone(),
                value: p.value,
                extrapolated: p.extrapolated,
            })
        })
        .collect()
}
