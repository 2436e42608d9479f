//! Regularized incomplete beta and the F distribution built on it.

use crate::error::{Error, Result};

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Natural log of the gamma function for `x > 0` (Lanczos, g = 7).
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // reflection
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// `ln B(a, b)`.
pub fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

const CF_MAX_ITER: usize = 10_000;
const CF_EPS: f64 = 1e-15;
const TINY: f64 = 1e-300;

/// Regularized incomplete beta `I_x(a, b)`.
pub fn reg_incomplete_beta(a: f64, b: f64, x: f64) -> Result<f64> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::validation("a", format!("must be positive, got {a}")));
    }
    if !(b > 0.0 && b.is_finite()) {
        return Err(Error::validation("b", format!("must be positive, got {b}")));
    }
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::validation("x", format!("must lie in [0, 1], got {x}")));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x == 1.0 {
        return Ok(1.0);
    }
    let ln_front = a * x.ln() + b * (1.0 - x).ln() - ln_beta(a, b);
    // The continued fraction converges fast below the mean; use symmetry above it.
    if x < (a + 1.0) / (a + b + 2.0) {
        Ok(ln_front.exp() * beta_cf(a, b, x)? / a)
    } else {
        Ok(1.0 - ln_front.exp() * beta_cf(b, a, 1.0 - x)? / b)
    }
}

/// Modified Lentz evaluation of the incomplete-beta continued fraction.
fn beta_cf(a: f64, b: f64, x: f64) -> Result<f64> {
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=CF_MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;

        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;

        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < CF_EPS {
            return Ok(h);
        }
    }
    Err(Error::Numerical(format!(
        "incomplete beta continued fraction did not converge for a={a}, b={b}, x={x}"
    )))
}

fn check_df(d1: f64, d2: f64) -> Result<()> {
    if !(d1 > 0.0 && d1.is_finite()) {
        return Err(Error::validation("d1", format!("degrees of freedom must be positive, got {d1}")));
    }
    if !(d2 > 0.0 && d2.is_finite()) {
        return Err(Error::validation("d2", format!("degrees of freedom must be positive, got {d2}")));
    }
    Ok(())
}

/// `P(F(d1, d2) <= f)`.
pub fn f_cdf(f: f64, d1: f64, d2: f64) -> Result<f64> {
    check_df(d1, d2)?;
    if f.is_nan() || f < 0.0 {
        return Err(Error::validation("f", format!("must be non-negative, got {f}")));
    }
    if f == f64::INFINITY {
        return Ok(1.0);
    }
    reg_incomplete_beta(d1 / 2.0, d2 / 2.0, d1 * f / (d1 * f + d2))
}

/// Upper tail `P(F(d1, d2) > f)`, evaluated directly to keep small p-values accurate.
pub fn f_sf(f: f64, d1: f64, d2: f64) -> Result<f64> {
    check_df(d1, d2)?;
    if f.is_nan() || f < 0.0 {
        return Err(Error::validation("f", format!("must be non-negative, got {f}")));
    }
    if f == f64::INFINITY {
        return Ok(0.0);
    }
    reg_incomplete_beta(d2 / 2.0, d1 / 2.0, d2 / (d1 * f + d2))
}

/// Density of `F(d1, d2)` at `f`.
pub fn f_pdf(f: f64, d1: f64, d2: f64) -> f64 {
    if f < 0.0 {
        return 0.0;
    }
    if f == 0.0 {
        return match d1.partial_cmp(&2.0) {
            Some(std::cmp::Ordering::Less) => f64::INFINITY,
            Some(std::cmp::Ordering::Equal) => 1.0,
            _ => 0.0,
        };
    }
    let ln = 0.5 * d1 * d1.ln() + 0.5 * d2 * d2.ln() + (0.5 * d1 - 1.0) * f.ln()
        - 0.5 * (d1 + d2) * (d1 * f + d2).ln()
        - ln_beta(d1 / 2.0, d2 / 2.0);
    ln.exp()
}

const QUANTILE_MAX_ITER: usize = 400;

/// Value `f` with `f_cdf(f, d1, d2) = p`, by safeguarded Newton on a bracket.
pub fn f_quantile(p: f64, d1: f64, d2: f64) -> Result<f64> {
    check_df(d1, d2)?;
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::validation("p", format!("must lie in (0, 1), got {p}")));
    }
    let mut lo = 0.0;
    let mut hi = 1.0;
    let mut grow = 0;
    while f_cdf(hi, d1, d2)? < p {
        lo = hi;
        hi *= 2.0;
        grow += 1;
        if grow > 1100 {
            return Err(Error::Numerical(format!(
                "could not bracket the F quantile p={p}, d1={d1}, d2={d2}"
            )));
        }
    }

    let mut x = 0.5 * (lo + hi);
    for _ in 0..QUANTILE_MAX_ITER {
        let cdf = f_cdf(x, d1, d2)?;
        let err = cdf - p;
        if err.abs() <= 1e-14 {
            return Ok(x);
        }
        if err < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        if hi - lo <= 1e-15 * hi.max(1e-300) {
            return Ok(0.5 * (lo + hi));
        }
        let density = f_pdf(x, d1, d2);
        let newton = x - err / density;
        x = if density.is_finite() && density > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
    }
    Err(Error::Numerical(format!(
        "F quantile did not converge for p={p}, d1={d1}, d2={d2}"
    )))
}

/// Two-sided Student t critical value with upper-tail probability `upper`,
/// obtained from the F quantile via `t(v)^2 = F(1, v)`.
pub fn t_upper_quantile(upper: f64, df: f64) -> Result<f64> {
    if !(upper > 0.0 && upper < 0.5) {
        return Err(Error::validation("upper", format!("must lie in (0, 0.5), got {upper}")));
    }
    Ok(f_quantile(1.0 - 2.0 * upper, 1.0, df)?.sqrt())
}
