//! Replicate homogeneity (Cochran's C) and single-outlier suggestion (Grubbs).

use serde::{Deserialize, Serialize};

use super::dist::{f_quantile, t_upper_quantile};
use super::{check_alpha, mean, sample_variance};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    SuggestEliminate,
    Keep,
}

/// Outcome of a Grubbs scan over one sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrubbsScan {
    /// Zero-based position of the most extreme value (smallest index on ties).
    pub index: usize,
    pub value: f64,
    pub statistic: f64,
    pub critical_value: f64,
    pub alpha: f64,
    pub verdict: Verdict,
}

/// Grubbs critical value for a sample of size `n`.
pub fn grubbs_critical(n: usize, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if n < 3 {
        return Err(Error::InsufficientData(format!(
            "Grubbs test needs at least 3 values, got {n}"
        )));
    }
    let nf = n as f64;
    let t = t_upper_quantile(alpha / (2.0 * nf), nf - 2.0)?;
    let t2 = t * t;
    Ok((nf - 1.0) / nf.sqrt() * (t2 / (nf - 2.0 + t2)).sqrt())
}

/// Two-sided Grubbs test for a single outlier.
pub fn grubbs_scan(sample: &[f64], alpha: f64) -> Result<GrubbsScan> {
    let critical_value = grubbs_critical(sample.len(), alpha)?;
    let m = mean(sample);
    let sd = sample_variance(sample).sqrt();

    let mut index = 0;
    let mut best = -1.0;
    for (i, &x) in sample.iter().enumerate() {
        let dev = (x - m).abs();
        if dev > best {
            best = dev;
            index = i;
        }
    }
    let statistic = if sd > 0.0 { best / sd } else { 0.0 };
    let verdict = if statistic > critical_value {
        Verdict::SuggestEliminate
    } else {
        Verdict::Keep
    };
    Ok(GrubbsScan {
        index,
        value: sample[index],
        statistic,
        critical_value,
        alpha,
        verdict,
    })
}

/// Cochran homogeneity verdict over equally sized replicate groups.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomogeneityReport {
    pub group_count: usize,
    pub group_size: usize,
    pub cochran_c: f64,
    pub cochran_critical: f64,
    pub alpha: f64,
    pub homogeneous: bool,
    pub per_group_variances: Vec<f64>,
    /// Zero-based index of the group with the largest variance.
    pub max_variance_group: usize,
}

/// Cochran critical value for `k` groups of `m` replicates.
///
/// `C_crit = 1 / (1 + (k - 1) / F)` with `F` the upper `alpha / k` point of
/// `F(m - 1, (k - 1)(m - 1))`.
pub fn cochran_critical(k: usize, m: usize, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if k < 2 || m < 2 {
        return Err(Error::InsufficientData(format!(
            "Cochran test needs at least 2 groups of 2 values, got {k} groups of {m}"
        )));
    }
    let kf = k as f64;
    let nu = (m - 1) as f64;
    let f = f_quantile(1.0 - alpha / kf, nu, (kf - 1.0) * nu)?;
    Ok(1.0 / (1.0 + (kf - 1.0) / f))
}

pub fn homogeneity_check<G: AsRef<[f64]>>(groups: &[G], alpha: f64) -> Result<HomogeneityReport> {
    check_alpha(alpha)?;
    if groups.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "homogeneity check needs at least 2 groups, got {}",
            groups.len()
        )));
    }
    let m = groups[0].as_ref().len();
    if let Some((i, g)) = groups.iter().enumerate().find(|(_, g)| g.as_ref().len() != m) {
        return Err(Error::UnsupportedDesign(format!(
            "replicate groups must be equal in size: group 1 has {m} values, group {} has {}",
            i + 1,
            g.as_ref().len()
        )));
    }
    if m < 2 {
        return Err(Error::InsufficientData(
            "each replicate group needs at least 2 values".into(),
        ));
    }
    let k = groups.len();
    let variances: Vec<f64> = groups.iter().map(|g| sample_variance(g.as_ref())).collect();
    let total: f64 = variances.iter().sum();
    let mut max_variance_group = 0;
    for (i, v) in variances.iter().enumerate() {
        if *v > variances[max_variance_group] {
            max_variance_group = i;
        }
    }
    let cochran_c = if total > 0.0 {
        variances[max_variance_group] / total
    } else {
        1.0 / k as f64
    };
    let cochran_critical = cochran_critical(k, m, alpha)?;
    Ok(HomogeneityReport {
        group_count: k,
        group_size: m,
        cochran_c,
        cochran_critical,
        alpha,
        homogeneous: total == 0.0 || cochran_c <= cochran_critical,
        per_group_variances: variances,
        max_variance_group,
    })
}
