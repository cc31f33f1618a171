//! Brute-force adaptive integrator for `f_k`, kept independent of the
//! incomplete-gamma paths in [`crate::gamma`] so it can serve as their oracle.

use crate::error::{domain, Error, Result};

const MAX_DEPTH: u32 = 60;

// Gauss–Kronrod 7/15 nodes on [0, 1] (symmetric half) with weights.
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
    0.209_482_141_084_728_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureResult {
    pub value: f64,
    pub error_estimate: f64,
    pub evaluations: u64,
}

/// `r^k e^{-r} / k!` written as `exp(k ln(r/k) + k - r + c)` with
/// `c = k ln k - k - ln k! = Σ_j ln(k/j) - k`, summed with compensation.
/// Centering at the mode keeps the exponent free of large cancellations.
struct Integrand {
    k: f64,
    offset: f64,
}

impl Integrand {
    fn new(k: u64) -> Self {
        let kf = k as f64;
        let (mut sum, mut carry) = (0.0f64, 0.0f64);
        for j in 1..=k {
            let term = (kf / j as f64).ln();
            let t = sum + term;
            carry += if sum.abs() >= term.abs() {
                (sum - t) + term
            } else {
                (term - t) + sum
            };
            sum = t;
        }
        Self {
            k: kf,
            offset: (sum - kf) + carry,
        }
    }

    fn eval(&self, r: f64) -> f64 {
        if self.k == 0.0 {
            return (-r).exp();
        }
        if r == 0.0 {
            return 0.0;
        }
        (self.k * (r / self.k).ln() + (self.k - r) + self.offset).exp()
    }
}

fn kronrod_panel(f: &Integrand, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f.eval(center);
    let mut gauss = WG[3] * fc;
    let mut kronrod = WGK[7] * fc;
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f.eval(center - dx) + f.eval(center + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

/// Adaptive G7/K15 integration of `f_k` over `[a, b]`.
///
/// Panels are pre-split at the mode `r = k`. A panel is accepted once the
/// Gauss/Kronrod discrepancy is below `tol` times its share of `[a, b]`.
pub fn integrate_fk(k: u64, a: f64, b: f64, tol: f64) -> Result<QuadratureResult> {
    if !(a.is_finite() && b.is_finite()) || a < 0.0 || b < a {
        return Err(domain(format!(
            "oracle needs 0 <= a <= b < inf, got [{a}, {b}]"
        )));
    }
    if tol.is_nan() || tol <= 0.0 {
        return Err(domain(format!("tolerance must be positive, got {tol}")));
    }
    let mut result = QuadratureResult {
        value: 0.0,
        error_estimate: 0.0,
        evaluations: 0,
    };
    if a == b {
        return Ok(result);
    }
    let f = Integrand::new(k);
    let total = b - a;
    let mode = k as f64;
    let mut stack: Vec<(f64, f64, u32)> = Vec::new();
    if mode > a && mode < b {
        stack.push((mode, b, 0));
        stack.push((a, mode, 0));
    } else {
        stack.push((a, b, 0));
    }
    while let Some((lo, hi, depth)) = stack.pop() {
        let (value, err) = kronrod_panel(&f, lo, hi);
        result.evaluations += 15;
        // Below ~100 ulps of the panel value the estimate is roundoff.
        if err <= tol * (hi - lo) / total || err <= 100.0 * f64::EPSILON * value.abs() {
            result.value += value;
            result.error_estimate += err;
            continue;
        }
        if depth >= MAX_DEPTH {
            return Err(Error::Convergence(format!(
                "oracle exceeded depth {MAX_DEPTH} on [{lo}, {hi}] for k = {k}"
            )));
        }
        let mid = 0.5 * (lo + hi);
        stack.push((mid, hi, depth + 1));
        stack.push((lo, mid, depth + 1));
    }
    Ok(result)
}
