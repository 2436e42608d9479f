//! Full-factorial program matrices.
//!
//! A design point is written in coded units (`-1`, `0`, `+1`) and in natural
//! units obtained from the per-factor `(low, high)` range. Rows come out in
//! standard (Yates) order with the first factor alternating fastest, and the
//! replicates of one design point are kept together.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest supported number of factors.
pub const MAX_FACTORS: usize = 8;

/// Maps a natural value onto the coded scale where `low -> -1` and `high -> +1`.
pub fn code_level(natural: f64, low: f64, high: f64) -> Result<f64> {
    check_range(low, high)?;
    let center = (low + high) / 2.0;
    let half = (high - low) / 2.0;
    Ok((natural - center) / half)
}

/// Inverse of [`code_level`].
pub fn decode_level(coded: f64, low: f64, high: f64) -> Result<f64> {
    check_range(low, high)?;
    let center = (low + high) / 2.0;
    let half = (high - low) / 2.0;
    Ok(center + coded * half)
}

fn check_range(low: f64, high: f64) -> Result<()> {
    if !(low.is_finite() && high.is_finite()) {
        return Err(Error::validation("low/high", "levels must be finite"));
    }
    if low >= high {
        return Err(Error::validation(
            "low/high",
            format!("low level {low} must be below high level {high}"),
        ));
    }
    Ok(())
}

/// Center/half-range pair used to move between natural and coded units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coding {
    pub center: f64,
    pub half_range: f64,
}

impl Coding {
    pub fn from_range(low: f64, high: f64) -> Result<Self> {
        check_range(low, high)?;
        Ok(Coding {
            center: (low + high) / 2.0,
            half_range: (high - low) / 2.0,
        })
    }

    pub fn encode(&self, natural: f64) -> f64 {
        (natural - self.center) / self.half_range
    }

    pub fn decode(&self, coded: f64) -> f64 {
        self.center + coded * self.half_range
    }

    pub fn low(&self) -> f64 {
        self.center - self.half_range
    }

    pub fn high(&self) -> f64 {
        self.center + self.half_range
    }
}

/// One factor of a design with its natural range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorRange {
    pub code: String,
    pub low: f64,
    pub high: f64,
}

/// Number of levels per factor in the factorial part of the design.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Levels {
    /// `2^k` corners at coded `±1`.
    #[default]
    Two,
    /// `3^k` grid at coded `-1, 0, +1`; identifies separate square terms.
    Three,
}

impl Levels {
    fn coded(self) -> &'static [f64] {
        match self {
            Levels::Two => &[-1.0, 1.0],
            Levels::Three => &[-1.0, 0.0, 1.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignSpec {
    pub factors: Vec<FactorRange>,
    pub replicates: u32,
    #[serde(default)]
    pub center_points: u32,
    #[serde(default)]
    pub levels: Levels,
    /// Adds face-centered axial runs (one factor at `±1`, the rest at `0`)
    /// after the factorial runs, so a two-level design identifies square terms.
    #[serde(default)]
    pub axial: bool,
    /// Seed for an optional shuffle of run order; `None` keeps Yates order.
    #[serde(default)]
    pub shuffle_seed: Option<u64>,
}

impl DesignSpec {
    pub fn two_level(factors: Vec<FactorRange>, replicates: u32, center_points: u32) -> Self {
        DesignSpec {
            factors,
            replicates,
            center_points,
            levels: Levels::Two,
            axial: false,
            shuffle_seed: None,
        }
    }

    fn validate(&self) -> Result<Vec<Coding>> {
        if self.factors.is_empty() || self.factors.len() > MAX_FACTORS {
            return Err(Error::Capacity(format!(
                "a design needs between 1 and {MAX_FACTORS} factors, got {}",
                self.factors.len()
            )));
        }
        if self.replicates == 0 {
            return Err(Error::validation("replicates", "must be at least 1"));
        }
        let mut seen = std::collections::BTreeSet::new();
        self.factors
            .iter()
            .map(|f| {
                if f.code.trim().is_empty() {
                    return Err(Error::validation("code", "factor code must be non-empty"));
                }
                if !seen.insert(f.code.as_str()) {
                    return Err(Error::validation(
                        "code",
                        format!("factor {} listed twice", f.code),
                    ));
                }
                Coding::from_range(f.low, f.high).map_err(|_| {
                    Error::validation(
                        format!("factors.{}", f.code),
                        format!("low {} must be below high {}", f.low, f.high),
                    )
                })
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignRow {
    pub run_index: u32,
    pub replicate_index: u32,
    pub coded_levels: Vec<f64>,
    pub natural_levels: Vec<f64>,
    pub center: bool,
    #[serde(default)]
    pub axial: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProgramMatrix {
    pub factor_codes: Vec<String>,
    pub rows: Vec<DesignRow>,
}

/// Builds the program matrix for `spec`.
pub fn build_full_factorial(spec: &DesignSpec) -> Result<ProgramMatrix> {
    let codings = spec.validate()?;
    let k = codings.len();
    let levels = spec.levels.coded();
    let points = levels.len().pow(k as u32);

    let mut rows = Vec::with_capacity((points + spec.center_points as usize) * spec.replicates as usize);
    let mut run_index = 0u32;
    for p in 0..points {
        run_index += 1;
        // mixed-radix digits, first factor least significant
        let mut rest = p;
        let coded: Vec<f64> = (0..k)
            .map(|_| {
                let digit = rest % levels.len();
                rest /= levels.len();
                levels[digit]
            })
            .collect();
        push_replicates(&mut rows, run_index, &coded, &codings, spec.replicates, RunKind::Factorial);
    }
    if spec.axial {
        for j in 0..k {
            for level in [-1.0, 1.0] {
                run_index += 1;
                let mut coded = vec![0.0; k];
                coded[j] = level;
                push_replicates(&mut rows, run_index, &coded, &codings, spec.replicates, RunKind::Axial);
            }
        }
    }
    for _ in 0..spec.center_points {
        run_index += 1;
        push_replicates(&mut rows, run_index, &vec![0.0; k], &codings, spec.replicates, RunKind::Center);
    }

    if let Some(seed) = spec.shuffle_seed {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rows.shuffle(&mut rng);
    }

    Ok(ProgramMatrix {
        factor_codes: spec.factors.iter().map(|f| f.code.clone()).collect(),
        rows,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum RunKind {
    Factorial,
    Axial,
    Center,
}

fn push_replicates(
    rows: &mut Vec<DesignRow>,
    run_index: u32,
    coded: &[f64],
    codings: &[Coding],
    replicates: u32,
    kind: RunKind,
) {
    let natural: Vec<f64> = coded
        .iter()
        .zip(codings)
        .map(|(&c, coding)| coding.decode(c))
        .collect();
    for r in 1..=replicates {
        rows.push(DesignRow {
            run_index,
            replicate_index: r,
            coded_levels: coded.to_vec(),
            natural_levels: natural.clone(),
            center: kind == RunKind::Center,
            axial: kind == RunKind::Axial,
        });
    }
}

impl ProgramMatrix {
    /// Column `j` in coded units, optionally restricted to non-center rows.
    pub fn coded_column(&self, j: usize, include_center: bool) -> Vec<f64> {
        self.rows
            .iter()
            .filter(|r| include_center || !r.center)
            .map(|r| r.coded_levels[j])
            .collect()
    }

    /// Plain-text table, one row per run.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = write!(out, "{:>5} {:>5}", "run", "rep");
        for code in &self.factor_codes {
            let _ = write!(out, " {:>6}", format!("[{code}]"));
        }
        for code in &self.factor_codes {
            let _ = write!(out, " {:>12}", code);
        }
        out.push('\n');
        for row in &self.rows {
            let _ = write!(out, "{:>5} {:>5}", row.run_index, row.replicate_index);
            for c in &row.coded_levels {
                let _ = write!(out, " {:>6}", format_coded(*c));
            }
            for n in &row.natural_levels {
                let _ = write!(out, " {:>12}", format_natural(*n));
            }
            out.push('\n');
        }
        out
    }
}

fn format_coded(c: f64) -> String {
    if c == 0.0 {
        "0".to_string()
    } else if c.fract() == 0.0 {
        format!("{:+}", c as i64)
    } else {
        format!("{c:+.3}")
    }
}

fn format_natural(v: f64) -> String {
    let s = format!("{v:.6}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s.is_empty() || s == "-0" {
        "0".to_string()
    } else {
        s.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factors(k: usize) -> Vec<FactorRange> {
        (0..k)
            .map(|i| FactorRange {
                code: format!("x{}", i + 1),
                low: i as f64,
                high: 2.0 * i as f64 + 3.0,
            })
            .collect()
    }

    #[test]
    fn two_factor_yates_order() {
        let m = build_full_factorial(&DesignSpec::two_level(factors(2), 1, 0)).unwrap();
        let coded: Vec<_> = m.rows.iter().map(|r| r.coded_levels.clone()).collect();
        assert_eq!(
            coded,
            vec![
                vec![-1.0, -1.0],
                vec![1.0, -1.0],
                vec![-1.0, 1.0],
                vec![1.0, 1.0]
            ]
        );
        assert_eq!(m.rows.iter().map(|r| r.run_index).collect::<Vec<_>>(), vec![1, 2, 3, 4]);
    }

    #[test]
    fn single_factor_endpoints() {
        let spec = DesignSpec::two_level(
            vec![FactorRange { code: "I".into(), low: 2.0, high: 10.0 }],
            1,
            0,
        );
        let m = build_full_factorial(&spec).unwrap();
        let natural: Vec<f64> = m.rows.iter().map(|r| r.natural_levels[0]).collect();
        assert_eq!(natural, vec![2.0, 10.0]);
    }

    #[test]
    fn replicated_design_with_center_point() {
        let m = build_full_factorial(&DesignSpec::two_level(factors(3), 2, 1)).unwrap();
        assert_eq!(m.rows.len(), 18);
        assert_eq!(m.rows.iter().filter(|r| !r.center).count(), 16);
        // direct enumeration oracle for the dot products
        for a in 0..3 {
            for b in (a + 1)..3 {
                let dot: f64 = m
                    .rows
                    .iter()
                    .filter(|r| !r.center)
                    .map(|r| r.coded_levels[a] * r.coded_levels[b])
                    .sum();
                assert_eq!(dot, 0.0);
            }
        }
        // replicates blocked together
        assert_eq!((m.rows[0].run_index, m.rows[0].replicate_index), (1, 1));
        assert_eq!((m.rows[1].run_index, m.rows[1].replicate_index), (1, 2));
        assert_eq!((m.rows[17].run_index, m.rows[17].replicate_index), (9, 2));
        assert!(m.rows[17].center);
    }

    #[test]
    fn coding_examples() {
        assert_eq!(code_level(6.0, 2.0, 10.0).unwrap(), 0.0);
        assert_eq!(code_level(10.0, 2.0, 10.0).unwrap(), 1.0);
        assert_eq!(code_level(4.0, 2.0, 10.0).unwrap(), -0.5);
        assert_eq!(decode_level(0.0, 2.0, 10.0).unwrap(), 6.0);
        assert_eq!(decode_level(-1.0, 2.0, 10.0).unwrap(), 2.0);
        assert_eq!(decode_level(0.25, 0.0, 8.0).unwrap(), 5.0);
    }

    #[test]
    fn degenerate_range_is_rejected() {
        assert!(matches!(code_level(1.0, 3.0, 3.0), Err(Error::Validation { .. })));
        assert!(matches!(decode_level(1.0, 4.0, 3.0), Err(Error::Validation { .. })));
    }

    #[test]
    fn capacity_limits() {
        assert!(matches!(
            build_full_factorial(&DesignSpec::two_level(vec![], 1, 0)),
            Err(Error::Capacity(_))
        ));
        assert!(matches!(
            build_full_factorial(&DesignSpec::two_level(factors(9), 1, 0)),
            Err(Error::Capacity(_))
        ));
        assert_eq!(
            build_full_factorial(&DesignSpec::two_level(factors(8), 1, 0)).unwrap().rows.len(),
            256
        );
    }

    #[test]
    fn three_level_grid() {
        let spec = DesignSpec {
            levels: Levels::Three,
            ..DesignSpec::two_level(factors(2), 1, 2)
        };
        let m = build_full_factorial(&spec).unwrap();
        assert_eq!(m.rows.len(), 9 + 2);
        assert_eq!(m.rows[1].coded_levels, vec![0.0, -1.0]);
        assert_eq!(m.rows[3].coded_levels, vec![-1.0, 0.0]);
    }

    #[test]
    fn axial_runs_follow_the_corners() {
        let spec = DesignSpec { axial: true, ..DesignSpec::two_level(factors(3), 2, 1) };
        let m = build_full_factorial(&spec).unwrap();
        assert_eq!(m.rows.len(), (8 + 6 + 1) * 2);
        let axial: Vec<&DesignRow> = m.rows.iter().filter(|r| r.axial).collect();
        assert_eq!(axial.len(), 12);
        assert_eq!(axial[0].run_index, 9);
        assert_eq!(axial[0].coded_levels, vec![-1.0, 0.0, 0.0]);
        assert_eq!(axial[2].coded_levels, vec![1.0, 0.0, 0.0]);
        assert_eq!(axial[11].coded_levels, vec![0.0, 0.0, 1.0]);
        assert!(m.rows.last().unwrap().center);
        for a in 0..3 {
            let ca = m.coded_column(a, true);
            assert_eq!(ca.iter().sum::<f64>(), 0.0);
            for b in a + 1..3 {
                let cb = m.coded_column(b, true);
                assert_eq!(ca.iter().zip(&cb).map(|(x, y)| x * y).sum::<f64>(), 0.0);
            }
        }
    }

    #[test]
    fn shuffle_is_seeded_permutation() {
        let mut spec = DesignSpec::two_level(factors(3), 2, 0);
        let plain = build_full_factorial(&spec).unwrap();
        spec.shuffle_seed = Some(7);
        let a = build_full_factorial(&spec).unwrap();
        let b = build_full_factorial(&spec).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.rows, plain.rows);
        let mut sorted = a.rows.clone();
        sorted.sort_by_key(|r| (r.run_index, r.replicate_index));
        assert_eq!(sorted, plain.rows);
    }

    #[test]
    fn text_export_has_one_line_per_row() {
        let m = build_full_factorial(&DesignSpec::two_level(factors(2), 2, 1)).unwrap();
        let text = m.to_text();
        assert_eq!(text.lines().count(), 1 + m.rows.len());
        assert!(text.lines().nth(1).unwrap().contains("-1"));
    }
}
