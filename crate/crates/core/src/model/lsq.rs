//! Dense least squares by Householder QR.

use crate::error::{Error, Result};

/// Relative pivot threshold below which a column is declared dependent.
pub const RANK_TOLERANCE: f64 = 1e-10;

/// Column-major design matrix with named columns.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    rows: usize,
    names: Vec<String>,
    data: Vec<f64>,
}

impl DesignMatrix {
    /// Builds from rows; column names default to `c1, c2, ...`.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let names = (1..=cols).map(|j| format!("c{j}")).collect();
        Self::from_rows_named(rows, names)
    }

    pub fn from_rows_named(rows: &[Vec<f64>], names: Vec<String>) -> Result<Self> {
        let p = names.len();
        if let Some(i) = rows.iter().position(|r| r.len() != p) {
            return Err(Error::validation(
                "design",
                format!("row {} has {} entries, expected {p}", i + 1, rows[i].len()),
            ));
        }
        let mut data = vec![0.0; rows.len() * p];
        for (i, row) in rows.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                data[j * rows.len() + i] = v;
            }
        }
        Ok(DesignMatrix {
            rows: rows.len(),
            names,
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    /// `X b`.
    pub fn apply(&self, coefficients: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.rows];
        for (j, &b) in coefficients.iter().enumerate() {
            for (o, x) in out.iter_mut().zip(self.column(j)) {
                *o += b * x;
            }
        }
        out
    }
}

/// Minimizes `||X b - y||` through an orthogonal factorization of `X`.
///
/// Fails with [`Error::RankDeficient`] naming the first column whose remaining
/// norm after the previous reflections drops below [`RANK_TOLERANCE`] times its
/// original norm.
pub fn solve_least_squares(design: &DesignMatrix, response: &[f64]) -> Result<Vec<f64>> {
    let n = design.rows;
    let p = design.cols();
    if response.len() != n {
        return Err(Error::validation(
            "response",
            format!("has {} entries but the design has {n} rows", response.len()),
        ));
    }
    if p == 0 {
        return Err(Error::validation("design", "has no columns"));
    }
    if n < p {
        return Err(Error::InsufficientData(format!(
            "{n} observations cannot determine {p} coefficients"
        )));
    }
    if design.data.iter().chain(response).any(|v| !v.is_finite()) {
        return Err(Error::validation("design", "contains non-finite values"));
    }

    let mut a = design.data.clone();
    let mut y = response.to_vec();
    let original_norms: Vec<f64> = (0..p).map(|j| norm(design.column(j))).collect();
    let mut diag = vec![0.0; p];

    for j in 0..p {
        let col = &mut a[j * n..(j + 1) * n];
        let sigma = norm(&col[j..]);
        if original_norms[j] == 0.0 || sigma <= RANK_TOLERANCE * original_norms[j] {
            return Err(Error::RankDeficient {
                column: design.names[j].clone(),
                advice: String::new(),
            });
        }
        let alpha = if col[j] > 0.0 { -sigma } else { sigma };
        // v = x - alpha e1 stored in place over col[j..]
        col[j] -= alpha;
        let vtv: f64 = col[j..].iter().map(|v| v * v).sum();
        diag[j] = alpha;
        let v: Vec<f64> = col[j..].to_vec();

        for k in (j + 1)..p {
            let target = &mut a[k * n..(k + 1) * n];
            reflect(&v, vtv, &mut target[j..]);
        }
        reflect(&v, vtv, &mut y[j..]);
    }

    // back substitution on R b = Q^T y
    let mut b = vec![0.0; p];
    for j in (0..p).rev() {
        let mut s = y[j];
        for k in (j + 1)..p {
            s -= a[k * n + j] * b[k];
        }
        b[j] = s / diag[j];
    }
    Ok(b)
}

fn reflect(v: &[f64], vtv: f64, x: &mut [f64]) {
    let dot: f64 = v.iter().zip(x.iter()).map(|(a, b)| a * b).sum();
    let scale = 2.0 * dot / vtv;
    for (xi, vi) in x.iter_mut().zip(v) {
        *xi -= scale * vi;
    }
}

pub(crate) fn norm(xs: &[f64]) -> f64 {
    // scaled to avoid overflow on large columns
    let max = xs.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if max == 0.0 {
        return 0.0;
    }
    max * xs.iter().map(|x| (x / max).powi(2)).sum::<f64>().sqrt()
}
