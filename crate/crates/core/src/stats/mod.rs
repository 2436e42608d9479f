//! Statistical validation of experimental data.

pub mod anova;
pub mod dist;
pub mod homogeneity;

pub use anova::{anova_one_way, anova_two_way, AnovaRow, AnovaTable, Source};
pub use dist::{f_cdf, f_pdf, f_quantile, f_sf, ln_gamma, reg_incomplete_beta, t_upper_quantile};
pub use homogeneity::{
    cochran_critical, grubbs_critical, grubbs_scan, homogeneity_check, GrubbsScan,
    HomogeneityReport, Verdict,
};

use crate::error::{Error, Result};

/// Default significance level.
pub const DEFAULT_ALPHA: f64 = 0.05;

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::validation("alpha", format!("must lie in (0, 1), got {alpha}")))
    }
}

pub(crate) fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample variance with the `n - 1` denominator.
pub(crate) fn sample_variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64
}
