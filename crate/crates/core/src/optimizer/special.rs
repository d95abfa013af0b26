//! Exponential integral E₁.

use crate::error::{Error, Result};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const EPS: f64 = 1e-16;
const MAX_TERMS: usize = 500;

/// `E₁(x) = ∫_x^∞ e^{-t}/t dt` for `x > 0`.
pub fn exp_integral_e1(x: f64) -> Result<f64> {
    if !(x > 0.0) || x.is_nan() {
        return Err(Error::Domain {
            function: "exp_integral_e1",
            value: x,
        });
    }
    if x < 1.0 {
        Ok(e1_series(x))
    } else {
        Ok(scaled_e1_continued_fraction(x) * (-x).exp())
    }
}

/// `e^x E₁(x)`, finite for every `x > 0` and `→ 0` as `x → ∞`. Used where
/// `e^{a} E₁(b)` with `a ≤ b` would overflow if formed directly.
pub fn scaled_exp_integral_e1(x: f64) -> Result<f64> {
    if !(x > 0.0) || x.is_nan() {
        return Err(Error::Domain {
            function: "scaled_exp_integral_e1",
            value: x,
        });
    }
    if x.is_infinite() {
        return Ok(0.0);
    }
    if x < 1.0 {
        Ok(e1_series(x) * x.exp())
    } else {
        Ok(scaled_e1_continued_fraction(x))
    }
}

/// `-γ - ln x + Σ_{n≥1} (-1)^{n+1} xⁿ / (n·n!)`.
fn e1_series(x: f64) -> f64 {
    let mut sum = 0.0;
    let mut term = 1.0;
    for n in 1..MAX_TERMS {
        let nf = n as f64;
        term *= -x / nf;
        let contrib = -term / nf;
        sum += contrib;
        if contrib.abs() < EPS * sum.abs().max(EPS) {
            break;
        }
    }
    -EULER_GAMMA - x.ln() + sum
}

/// Modified Lentz evaluation of `e^x E₁(x) = 1/(x+1- 1²/(x+3- 2²/(x+5- …)))`.
fn scaled_e1_continued_fraction(x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_TERMS {
        let an = -((i * i) as f64);
        b += 2.0;
        d = 1.0 / (an * d + b);
        c = b + an / c;
        let del = c * d;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}
