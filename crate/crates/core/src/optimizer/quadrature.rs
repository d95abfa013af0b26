//! Adaptive Gauss–Kronrod (7/15) quadrature on finite intervals, and
//! exponentially weighted integrals over `[a, ∞)`.

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_0,
];
// Gauss weights for the nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadTolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_intervals: usize,
}

impl Default for QuadTolerance {
    fn default() -> Self {
        QuadTolerance {
            abs: 1e-10,
            rel: 1e-12,
            max_intervals: 2_000,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    lo: f64,
    hi: f64,
    value: f64,
    error: f64,
}

fn kronrod<F: FnMut(f64) -> f64>(f: &mut F, lo: f64, hi: f64) -> Segment {
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let fc = f(center);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kron += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    Segment {
        lo,
        hi,
        value: kron * half,
        error: ((kron - gauss) * half).abs(),
    }
}

/// `∫_lo^hi f`, bisecting the worst interval until the summed error
/// estimate is within `max(abs, rel·|I|)`.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, tol: QuadTolerance) -> Result<f64> {
    if lo == hi {
        return Ok(0.0);
    }
    if hi < lo {
        return integrate(f, hi, lo, tol).map(|v| -v);
    }
    let mut segments = vec![kronrod(&mut f, lo, hi)];
    loop {
        let total: f64 = segments.iter().map(|s| s.value).sum();
        let error: f64 = segments.iter().map(|s| s.error).sum();
        if !total.is_finite() {
            return Err(Error::Quadrature {
                lo,
                hi,
                estimate: total,
                error,
                intervals: segments.len(),
            });
        }
        if error <= tol.abs.max(tol.rel * total.abs()) {
            return Ok(total);
        }
        if segments.len() >= tol.max_intervals {
            return Err(Error::Quadrature {
                lo,
                hi,
                estimate: total,
                error,
                intervals: segments.len(),
            });
        }
        let (worst, _) = segments
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.error.total_cmp(&b.1.error))
            .expect("nonempty");
        let seg = segments.swap_remove(worst);
        let mid = 0.5 * (seg.lo + seg.hi);
        if mid <= seg.lo || mid >= seg.hi {
            // Interval cannot be split further in f64.
            return Err(Error::Quadrature {
                lo,
                hi,
                estimate: total,
                error,
                intervals: segments.len() + 1,
            });
        }
        segments.push(kronrod(&mut f, seg.lo, mid));
        segments.push(kronrod(&mut f, mid, seg.hi));
    }
}

/// `(1/s) ∫_a^∞ f(x) e^{-x/s} dx` via `u = e^{-(x-a)/s}`, which maps the
/// tail onto `e^{-a/s} ∫_0^1 f(a - s ln u) du`.
pub fn integrate_exp_tail<F: FnMut(f64) -> f64>(mut f: F, a: f64, scale: f64, tol: QuadTolerance) -> Result<f64> {
    let weight = (-a / scale).exp();
    if weight == 0.0 {
        return Ok(0.0);
    }
    // The integral is rescaled by `weight`, so tighten the absolute target.
    let inner_tol = QuadTolerance {
        abs: tol.abs / weight,
        ..tol
    };
    let inner = integrate(|u| f(a - scale * u.ln()), 0.0, 1.0, inner_tol)?;
    Ok(weight * inner)
}
