//! Quadrature and summation helpers shared by the analytic code.

use crate::error::{Error, Result};

// 15-point Kronrod nodes/weights with embedded 7-point Gauss weights.
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
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Tolerances for [`integrate`]. The estimate is accepted when the
/// Kronrod/Gauss error bound is below `max(abs, rel * |I|)`.
#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_depth: u32,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance {
            abs: 1e-9,
            rel: 1e-8,
            max_depth: 40,
        }
    }
}

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kron += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

/// Adaptive Gauss-Kronrod (G7/K15) integration of `f` over a finite `[a, b]`.
///
/// Intervals are bisected recursively, left half first, so the result is
/// bit-reproducible for a given integrand.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: Tolerance) -> Result<f64> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Parameter("integration limits must be finite".into()));
    }
    if a == b {
        return Ok(0.0);
    }
    let (whole, err) = gk15(&f, a, b);
    let target = tol.abs.max(tol.rel * whole.abs());
    let v = recurse(&f, a, b, whole, err, target, tol.rel, tol.max_depth);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Internal(format!(
            "non-finite integral on [{a}, {b}]"
        )))
    }
}

#[allow(clippy::too_many_arguments)]
fn recurse<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    est: f64,
    err: f64,
    target: f64,
    rel: f64,
    depth: u32,
) -> f64 {
    if err <= target.max(rel * est.abs()) || depth == 0 {
        return est;
    }
    let m = 0.5 * (a + b);
    let (l, le) = gk15(f, a, m);
    let (r, re) = gk15(f, m, b);
    let half = 0.5 * target;
    recurse(f, a, m, l, le, half, rel, depth - 1) + recurse(f, m, b, r, re, half, rel, depth - 1)
}

/// Fixed-order pairwise summation; the association order depends only on
/// the slice length, so results are identical however the slice was filled.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const LEAF: usize = 32;
    if xs.len() <= LEAF {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// `ln Σ exp(x_i)`, stable for very negative inputs. Returns `-inf` for an
/// empty slice or when every term is `-inf`.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    let scaled: Vec<f64> = xs.iter().map(|x| (x - m).exp()).collect();
    m + pairwise_sum(&scaled).ln()
}

/// Format with nine significant digits, the canonical decimal form for every
/// text output of the crate.
pub fn fmt9(x: f64) -> String {
    if x == 0.0 {
        // no negative zero in outputs
        "0.00000000e0".to_string()
    } else if x.is_finite() {
        format!("{x:.8e}")
    } else {
        format!("{x}")
    }
}
