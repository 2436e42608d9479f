//! Mono-variable function families and multi-variable response surfaces.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::lsq::{solve_least_squares, DesignMatrix};
use crate::doe::Coding;
use crate::error::{Error, Result};

/// Function families, in tie-break order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelFamily {
    Poly1,
    Poly2,
    Poly3,
    Poly4,
    /// `y = a x^b`
    Power,
    /// `y = a e^(b x)`
    Exponential,
    /// `y = a + b ln x`
    Logarithmic,
    /// `y = a + b / x`
    Hyperbolic,
    RsLinear,
    RsQuadratic,
}

impl ModelFamily {
    pub const MONO: [ModelFamily; 8] = [
        ModelFamily::Poly1,
        ModelFamily::Poly2,
        ModelFamily::Poly3,
        ModelFamily::Poly4,
        ModelFamily::Power,
        ModelFamily::Exponential,
        ModelFamily::Logarithmic,
        ModelFamily::Hyperbolic,
    ];

    pub const MULTI: [ModelFamily; 2] = [ModelFamily::RsLinear, ModelFamily::RsQuadratic];

    pub fn name(self) -> &'static str {
        match self {
            ModelFamily::Poly1 => "poly1",
            ModelFamily::Poly2 => "poly2",
            ModelFamily::Poly3 => "poly3",
            ModelFamily::Poly4 => "poly4",
            ModelFamily::Power => "power",
            ModelFamily::Exponential => "exponential",
            ModelFamily::Logarithmic => "logarithmic",
            ModelFamily::Hyperbolic => "hyperbolic",
            ModelFamily::RsLinear => "rs_linear",
            ModelFamily::RsQuadratic => "rs_quadratic",
        }
    }

    pub fn is_mono(self) -> bool {
        !matches!(self, ModelFamily::RsLinear | ModelFamily::RsQuadratic)
    }

    fn poly_degree(self) -> Option<usize> {
        match self {
            ModelFamily::Poly1 => Some(1),
            ModelFamily::Poly2 => Some(2),
            ModelFamily::Poly3 => Some(3),
            ModelFamily::Poly4 => Some(4),
            _ => None,
        }
    }

    /// Number of coefficients for `arity` factors.
    pub fn coefficient_count(self, arity: usize) -> usize {
        match self {
            ModelFamily::RsLinear => arity + 1,
            ModelFamily::RsQuadratic => 1 + arity + arity * arity.saturating_sub(1) / 2 + arity,
            other => other.poly_degree().map_or(2, |d| d + 1),
        }
    }
}

impl fmt::Display for ModelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for ModelFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelFamily::MONO
            .iter()
            .chain(ModelFamily::MULTI.iter())
            .find(|f| f.name() == s)
            .copied()
            .ok_or_else(|| Error::validation("family", format!("unknown model family {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub low: f64,
    pub high: f64,
}

impl Interval {
    pub fn contains(&self, x: f64) -> bool {
        x >= self.low && x <= self.high
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Goodness {
    pub r2: f64,
    /// Absent when there are no residual degrees of freedom.
    pub adj_r2: Option<f64>,
    pub rmse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedModel {
    pub family: ModelFamily,
    /// Natural-unit coefficients. Mono families: polynomial powers ascending,
    /// or `(a, b)` for the transformed families. Response surfaces: constant,
    /// linear terms, cross terms `x_i x_j` (`i < j`), then squares.
    pub coefficients: Vec<f64>,
    /// Response-surface coefficients on the coded (`-1..+1`) scale.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub coded_coefficients: Vec<f64>,
    /// Per-factor centering applied before a response-surface fit.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub centering: Vec<Coding>,
    pub terms: Vec<String>,
    pub factor_codes: Vec<String>,
    pub output_code: String,
    pub domain: Vec<Interval>,
    pub r2: f64,
    pub adj_r2: Option<f64>,
    pub rmse: f64,
    pub n_points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub value: f64,
    pub extrapolated: bool,
}

impl FittedModel {
    pub fn arity(&self) -> usize {
        self.factor_codes.len()
    }

    /// Renames factors and output, e.g. from `x1, x2 -> y` to store codes.
    pub fn labeled(mut self, factor_codes: &[&str], output_code: &str) -> Result<Self> {
        if factor_codes.len() != self.arity() {
            return Err(Error::validation(
                "factor_codes",
                format!("model has {} factors, got {} codes", self.arity(), factor_codes.len()),
            ));
        }
        self.factor_codes = factor_codes.iter().map(|s| s.to_string()).collect();
        self.output_code = output_code.to_string();
        self.terms = term_names(self.family, &self.factor_codes);
        Ok(self)
    }

    pub fn in_domain(&self, x: &[f64]) -> bool {
        x.iter().zip(&self.domain).all(|(v, d)| d.contains(*v))
    }

    /// Evaluates the model; points outside the fitted box are flagged, not refused.
    pub fn predict(&self, x: &[f64]) -> Result<Prediction> {
        if x.len() != self.arity() {
            return Err(Error::validation(
                "x",
                format!("model over {} factors evaluated at {} values", self.arity(), x.len()),
            ));
        }
        Ok(Prediction {
            value: self.eval(x),
            extrapolated: !self.in_domain(x),
        })
    }

    /// Evaluates at named settings; every model factor must be present.
    pub fn predict_named(&self, settings: &BTreeMap<String, f64>) -> Result<Prediction> {
        let x = self
            .factor_codes
            .iter()
            .map(|c| {
                settings
                    .get(c)
                    .copied()
                    .ok_or_else(|| Error::validation(c.clone(), "no setting given for this factor"))
            })
            .collect::<Result<Vec<_>>>()?;
        self.predict(&x)
    }

    pub(crate) fn eval(&self, x: &[f64]) -> f64 {
        let c = &self.coefficients;
        match self.family {
            ModelFamily::Poly1 | ModelFamily::Poly2 | ModelFamily::Poly3 | ModelFamily::Poly4 => {
                c.iter().rev().fold(0.0, |acc, &k| acc * x[0] + k)
            }
            ModelFamily::Power => c[0] * x[0].powf(c[1]),
            ModelFamily::Exponential => c[0] * (c[1] * x[0]).exp(),
            ModelFamily::Logarithmic => c[0] + c[1] * x[0].ln(),
            ModelFamily::Hyperbolic => c[0] + c[1] / x[0],
            ModelFamily::RsLinear | ModelFamily::RsQuadratic => {
                let coded: Vec<f64> = x
                    .iter()
                    .zip(&self.centering)
                    .map(|(v, k)| k.encode(*v))
                    .collect();
                rs_basis(self.family, &coded)
                    .iter()
                    .zip(&self.coded_coefficients)
                    .map(|(b, k)| b * k)
                    .sum()
            }
        }
    }

    /// Human-readable formula, e.g. `y = 2.000·x^1.500`.
    pub fn formula(&self) -> String {
        let y = if self.output_code.is_empty() { "y" } else { &self.output_code };
        let c = &self.coefficients;
        let x = self.factor_codes.first().map_or("x", String::as_str);
        match self.family {
            ModelFamily::Power => format!("{y} = {}·{x}^{}", num(c[0]), num(c[1])),
            ModelFamily::Exponential => format!("{y} = {}·exp({}·{x})", num(c[0]), num(c[1])),
            ModelFamily::Logarithmic => format!("{y} = {}{}", num(c[0]), signed_term(c[1], &format!("ln({x})"))),
            ModelFamily::Hyperbolic => format!("{y} = {}{}", num(c[0]), signed_term(c[1], &format!("1/{x}"))),
            _ => {
                let mut s = format!("{y} = {}", num(c[0]));
                for (k, term) in c.iter().zip(&self.terms).skip(1) {
                    s.push_str(&signed_term(*k, term));
                }
                s
            }
        }
    }
}

fn num(v: f64) -> String {
    if v != 0.0 && (v.abs() < 1e-3 || v.abs() >= 1e6) {
        format!("{v:.3e}")
    } else {
        format!("{v:.3}")
    }
}

fn signed_term(k: f64, term: &str) -> String {
    if k < 0.0 {
        format!(" − {}·{term}", num(-k))
    } else {
        format!(" + {}·{term}", num(k))
    }
}

fn term_names(family: ModelFamily, codes: &[String]) -> Vec<String> {
    let x = codes.first().cloned().unwrap_or_else(|| "x".into());
    match family {
        ModelFamily::Poly1 | ModelFamily::Poly2 | ModelFamily::Poly3 | ModelFamily::Poly4 => {
            let d = family.poly_degree().unwrap_or(1);
            (0..=d)
                .map(|p| match p {
                    0 => "1".to_string(),
                    1 => x.clone(),
                    _ => format!("{x}^{p}"),
                })
                .collect()
        }
        ModelFamily::Power | ModelFamily::Exponential | ModelFamily::Logarithmic | ModelFamily::Hyperbolic => {
            vec!["a".into(), "b".into()]
        }
        ModelFamily::RsLinear | ModelFamily::RsQuadratic => {
            let mut names = vec!["1".to_string()];
            names.extend(codes.iter().cloned());
            if family == ModelFamily::RsQuadratic {
                for i in 0..codes.len() {
                    for j in (i + 1)..codes.len() {
                        names.push(format!("{}*{}", codes[i], codes[j]));
                    }
                }
                names.extend(codes.iter().map(|c| format!("{c}^2")));
            }
            names
        }
    }
}

fn rs_basis(family: ModelFamily, u: &[f64]) -> Vec<f64> {
    let n = u.len();
    let mut row = Vec::with_capacity(family.coefficient_count(n));
    row.push(1.0);
    row.extend_from_slice(u);
    if family == ModelFamily::RsQuadratic {
        for i in 0..n {
            for j in (i + 1)..n {
                row.push(u[i] * u[j]);
            }
        }
        row.extend(u.iter().map(|v| v * v));
    }
    row
}

fn domain_error(family: ModelFamily, what: &str, bad: &[usize], points: &[(f64, f64)]) -> Error {
    let listed: Vec<String> = bad
        .iter()
        .take(5)
        .map(|&i| format!("#{} ({}, {})", i + 1, points[i].0, points[i].1))
        .collect();
    let more = if bad.len() > 5 { format!(" and {} more", bad.len() - 5) } else { String::new() };
    Error::Domain {
        family: family.name().to_string(),
        message: format!("{what} at points {}{more}", listed.join(", ")),
    }
}

/// Checks the family's domain rules; returns the reason when they fail.
pub fn check_mono_domain(family: ModelFamily, points: &[(f64, f64)]) -> Result<()> {
    if !family.is_mono() {
        return Err(Error::validation("family", format!("{family} is not a mono-variable family")));
    }
    let bad: Vec<usize> = (0..points.len())
        .filter(|&i| !(points[i].0.is_finite() && points[i].1.is_finite()))
        .collect();
    if !bad.is_empty() {
        return Err(domain_error(family, "non-finite values", &bad, points));
    }
    if matches!(family, ModelFamily::Power | ModelFamily::Logarithmic) {
        let bad: Vec<usize> = (0..points.len()).filter(|&i| points[i].0 <= 0.0).collect();
        if !bad.is_empty() {
            return Err(domain_error(family, "x must be positive", &bad, points));
        }
    }
    if family == ModelFamily::Hyperbolic {
        let bad: Vec<usize> = (0..points.len()).filter(|&i| points[i].0 == 0.0).collect();
        if !bad.is_empty() {
            return Err(domain_error(family, "x must be non-zero", &bad, points));
        }
    }
    if matches!(family, ModelFamily::Power | ModelFamily::Exponential) {
        let bad: Vec<usize> = (0..points.len()).filter(|&i| points[i].1 <= 0.0).collect();
        if !bad.is_empty() {
            return Err(domain_error(family, "y must be positive", &bad, points));
        }
    }
    Ok(())
}

/// Fits one mono-variable family to `(x, y)` points.
pub fn fit_mono(family: ModelFamily, points: &[(f64, f64)]) -> Result<FittedModel> {
    check_mono_domain(family, points)?;
    let p = family.coefficient_count(1);
    if points.len() < p + 1 {
        return Err(Error::InsufficientData(format!(
            "{family} needs at least {} points, got {}",
            p + 1,
            points.len()
        )));
    }

    let names = term_names(family, &["x".to_string()]);
    let (rows, target): (Vec<Vec<f64>>, Vec<f64>) = points
        .iter()
        .map(|&(x, y)| match family {
            ModelFamily::Power => (vec![1.0, x.ln()], y.ln()),
            ModelFamily::Exponential => (vec![1.0, x], y.ln()),
            ModelFamily::Logarithmic => (vec![1.0, x.ln()], y),
            ModelFamily::Hyperbolic => (vec![1.0, 1.0 / x], y),
            _ => ((0..p).map(|k| x.powi(k as i32)).collect(), y),
        })
        .unzip();
    let design = DesignMatrix::from_rows_named(&rows, names.clone())?;
    let mut coefficients = solve_least_squares(&design, &target).map_err(|e| with_advice(e, family))?;
    if matches!(family, ModelFamily::Power | ModelFamily::Exponential) {
        coefficients[0] = coefficients[0].exp();
    }

    let (lo, hi) = points
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &(x, _)| (lo.min(x), hi.max(x)));
    let mut model = FittedModel {
        family,
        coefficients,
        coded_coefficients: Vec::new(),
        centering: Vec::new(),
        terms: names,
        factor_codes: vec!["x".into()],
        output_code: "y".into(),
        domain: vec![Interval { low: lo, high: hi }],
        r2: 0.0,
        adj_r2: None,
        rmse: 0.0,
        n_points: points.len(),
    };
    let multi: Vec<(Vec<f64>, f64)> = points.iter().map(|&(x, y)| (vec![x], y)).collect();
    model.set_goodness(&multi)?;
    Ok(model)
}

/// Fits a response surface over `points`, coding each factor by `domain`
/// (defaults to the data range of each factor).
pub fn fit_response_surface(
    points: &[(Vec<f64>, f64)],
    family: ModelFamily,
    domain: Option<&[Interval]>,
) -> Result<FittedModel> {
    if family.is_mono() {
        return Err(Error::validation("family", format!("{family} is not a response-surface family")));
    }
    let n = points.first().map_or(0, |p| p.0.len());
    if n == 0 {
        return Err(Error::InsufficientData("no points to fit".into()));
    }
    if let Some(i) = points.iter().position(|p| p.0.len() != n) {
        return Err(Error::validation("x", format!("point {} has {} factors, expected {n}", i + 1, points[i].0.len())));
    }
    if points.iter().any(|(x, y)| !y.is_finite() || x.iter().any(|v| !v.is_finite())) {
        return Err(Error::validation("points", "contain non-finite values"));
    }
    let p = family.coefficient_count(n);
    if points.len() < p {
        return Err(Error::InsufficientData(format!(
            "{family} over {n} factors needs at least {p} points, got {}",
            points.len()
        )));
    }

    let domain: Vec<Interval> = match domain {
        Some(d) if d.len() == n => d.to_vec(),
        Some(d) => {
            return Err(Error::validation("domain", format!("has {} intervals for {n} factors", d.len())))
        }
        None => (0..n)
            .map(|j| {
                let (low, high) = points
                    .iter()
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p.0[j]), hi.max(p.0[j])));
                Interval { low, high }
            })
            .collect(),
    };
    let centering = domain
        .iter()
        .enumerate()
        .map(|(j, d)| {
            Coding::from_range(d.low, d.high)
                .map_err(|_| Error::validation(format!("x{}", j + 1), "factor does not vary over the fit domain"))
        })
        .collect::<Result<Vec<_>>>()?;

    let codes: Vec<String> = (1..=n).map(|j| format!("x{j}")).collect();
    let names = term_names(family, &codes);
    let rows: Vec<Vec<f64>> = points
        .iter()
        .map(|(x, _)| {
            let u: Vec<f64> = x.iter().zip(&centering).map(|(v, k)| k.encode(*v)).collect();
            rs_basis(family, &u)
        })
        .collect();
    let y: Vec<f64> = points.iter().map(|p| p.1).collect();
    let design = DesignMatrix::from_rows_named(&rows, names.clone())?;
    let coded = solve_least_squares(&design, &y).map_err(|e| with_advice(e, family))?;

    let mut model = FittedModel {
        family,
        coefficients: to_natural(family, &coded, &centering),
        coded_coefficients: coded,
        centering,
        terms: names,
        factor_codes: codes,
        output_code: "y".into(),
        domain,
        r2: 0.0,
        adj_r2: None,
        rmse: 0.0,
        n_points: points.len(),
    };
    model.set_goodness(points)?;
    Ok(model)
}

fn with_advice(e: Error, family: ModelFamily) -> Error {
    match e {
        Error::RankDeficient { column, .. } => {
            let advice = if family == ModelFamily::RsQuadratic && column.ends_with("^2") {
                "square terms are not separately identifiable; a two-level design needs center points \
                 to detect curvature and a third level per factor to estimate each square term"
                    .to_string()
            } else {
                "the design columns are linearly dependent; add distinct factor settings".to_string()
            };
            Error::RankDeficient { column, advice }
        }
        other => other,
    }
}

/// Expands coded response-surface coefficients into natural units.
fn to_natural(family: ModelFamily, coded: &[f64], k: &[Coding]) -> Vec<f64> {
    let n = k.len();
    let c: Vec<f64> = k.iter().map(|k| k.center).collect();
    let h: Vec<f64> = k.iter().map(|k| k.half_range).collect();
    let lin = &coded[1..=n];
    let mut constant = coded[0];
    let mut linear: Vec<f64> = (0..n).map(|i| lin[i] / h[i]).collect();
    for i in 0..n {
        constant -= lin[i] * c[i] / h[i];
    }
    let mut out_cross = Vec::new();
    let mut out_sq = Vec::new();
    if family == ModelFamily::RsQuadratic {
        let mut idx = 1 + n;
        for i in 0..n {
            for j in (i + 1)..n {
                let b = coded[idx];
                idx += 1;
                let s = b / (h[i] * h[j]);
                constant += s * c[i] * c[j];
                linear[i] -= s * c[j];
                linear[j] -= s * c[i];
                out_cross.push(s);
            }
        }
        for i in 0..n {
            let s = coded[idx] / (h[i] * h[i]);
            idx += 1;
            constant += s * c[i] * c[i];
            linear[i] -= 2.0 * s * c[i];
            out_sq.push(s);
        }
    }
    let mut out = vec![constant];
    out.extend(linear);
    out.extend(out_cross);
    out.extend(out_sq);
    out
}

impl FittedModel {
    fn set_goodness(&mut self, points: &[(Vec<f64>, f64)]) -> Result<()> {
        let g = goodness(self, points)?;
        self.r2 = g.r2;
        self.adj_r2 = g.adj_r2;
        self.rmse = g.rmse;
        Ok(())
    }
}

/// Goodness of fit on the original response scale.
pub fn goodness(model: &FittedModel, points: &[(Vec<f64>, f64)]) -> Result<Goodness> {
    if points.len() < 2 {
        return Err(Error::InsufficientData("goodness of fit needs at least 2 points".into()));
    }
    let n = points.len() as f64;
    let y_mean = points.iter().map(|p| p.1).sum::<f64>() / n;
    let mut ss_res = 0.0;
    let mut ss_tot = 0.0;
    let mut energy = 0.0;
    for (x, y) in points {
        let pred = model.predict(x)?.value;
        ss_res += (y - pred).powi(2);
        ss_tot += (y - y_mean).powi(2);
        energy += y * y;
    }
    let r2 = if ss_tot > 1e-28 * energy.max(f64::MIN_POSITIVE) {
        1.0 - ss_res / ss_tot
    } else if ss_res <= 1e-24 * energy.max(1.0) {
        1.0
    } else {
        0.0
    };
    let p = model.coefficients.len();
    let adj_r2 = (points.len() > p).then(|| 1.0 - (1.0 - r2) * (n - 1.0) / (n - p as f64));
    Ok(Goodness {
        r2,
        adj_r2,
        rmse: (ss_res / n).sqrt(),
    })
}
