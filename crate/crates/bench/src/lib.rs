//! Shared inputs for the engine benchmarks.

use edm_core::model::fit::{fit_response_surface, FittedModel, ModelFamily};

/// `k` groups of `n` values with a level shift per group.
pub fn groups(k: usize, n: usize) -> Vec<Vec<f64>> {
    (0..k)
        .map(|g| (0..n).map(|i| g as f64 + ((i * 7 + g * 3) % 11) as f64 / 10.0).collect())
        .collect()
}

/// Points of `(x1 - 2)^2 + (x2 + 1)^2` on a `side x side` grid over `[-3, 3]^2`.
pub fn bowl_points(side: usize) -> Vec<(Vec<f64>, f64)> {
    let step = 6.0 / (side - 1) as f64;
    (0..side)
        .flat_map(|i| (0..side).map(move |j| (-3.0 + i as f64 * step, -3.0 + j as f64 * step)))
        .map(|(a, b)| (vec![a, b], (a - 2.0).powi(2) + (b + 1.0).powi(2)))
        .collect()
}

pub fn bowl_model() -> FittedModel {
    fit_response_surface(&bowl_points(7), ModelFamily::RsQuadratic, None).expect("bowl fits")
}
