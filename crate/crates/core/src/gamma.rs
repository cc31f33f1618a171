//! Evaluation of the Gamma(k+1, 1) densities `f_k(r) = r^k e^{-r} / k!`
//! and of their masses over intervals.
//!
//! For integer `k` the mass of `f_k` above `x` is the regularized upper
//! incomplete gamma function `Q(k+1, x)`. Everything here is computed in
//! log-space through the Stirling error and the deviance `k ln(k/r) + r - k`,
//! so indices up to [`MAX_INDEX`] and radii far into the tails neither
//! overflow nor lose relative accuracy in the prefactor.

use std::sync::OnceLock;

use crate::error::{domain, Error, Result};

/// Largest eigenvalue index the kernels accept.
pub const MAX_INDEX: u64 = 10_000_000;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// A difference of incomplete gamma values keeping less than this fraction
/// of its operands is recomputed by direct quadrature, so at most one digit
/// is lost to cancellation.
const CANCELLATION_RATIO: f64 = 0.1;

const GL_ORDER: usize = 64;
const MAX_PANELS: usize = 4096;

pub(crate) fn check_index(k: u64) -> Result<()> {
    if k > MAX_INDEX {
        return Err(Error::Capacity(format!(
            "index k = {k} exceeds the supported maximum {MAX_INDEX}"
        )));
    }
    Ok(())
}

fn check_radius(name: &str, r: f64) -> Result<()> {
    if !r.is_finite() || r < 0.0 {
        return Err(domain(format!(
            "{name} = {r} must be finite and nonnegative"
        )));
    }
    Ok(())
}

/// `ln k! - [(k + 1/2) ln k - k + ln sqrt(2 pi)]`, the error of Stirling's
/// formula. Requires `k >= 1`.
pub(crate) fn stirling_error(k: u64) -> f64 {
    const S0: f64 = 1.0 / 12.0;
    const S1: f64 = 1.0 / 360.0;
    const S2: f64 = 1.0 / 1260.0;
    const S3: f64 = 1.0 / 1680.0;
    const S4: f64 = 1.0 / 1188.0;
    // Direct evaluation cancels badly for small k.
    #[allow(clippy::excessive_precision)]
    const TABLE: [f64; 15] = [
        0.08106146679532725822,
        0.041340695955409294094,
        0.027677925684998339149,
        0.020790672103765093112,
        0.016644691189821192163,
        0.013876128823070747999,
        0.011896709945891770095,
        0.010411265261972096497,
        0.0092554621827127329177,
        0.0083305634333628712565,
        0.007573675487951840795,
        0.0069428401072095298657,
        0.0064089941880042070684,
        0.0059513701127588477356,
        0.005554733551962801371,
    ];

    debug_assert!(k >= 1);
    let n = k as f64;
    if k <= 15 {
        return TABLE[k as usize - 1];
    }
    let nn = n * n;
    if k > 5000 {
        (S0 - S1 / nn) / n
    } else if k > 500 {
        (S0 - (S1 - S2 / nn) / nn) / n
    } else if k > 80 {
        (S0 - (S1 - (S2 - S3 / nn) / nn) / nn) / n
    } else {
        (S0 - (S1 - (S2 - (S3 - S4 / nn) / nn) / nn) / nn) / n
    }
}

/// Deviance `x ln(x / m) + m - x`, accurate when `x` is close to `m`.
pub(crate) fn deviance(x: f64, m: f64) -> f64 {
    if (x - m).abs() < 0.1 * (x + m) {
        let v = (x - m) / (x + m);
        let v2 = v * v;
        let mut s = (x - m) * v;
        let mut ej = 2.0 * x * v;
        let mut j = 1.0;
        loop {
            ej *= v2;
            let next = s + ej / (2.0 * j + 1.0);
            if next == s {
                return next;
            }
            s = next;
            j += 1.0;
        }
    }
    x * (x / m).ln() + m - x
}

/// Log-density of `f_k`, with the `k`-dependent constants hoisted so that
/// repeated evaluation at many radii only pays for the deviance.
#[derive(Debug, Clone, Copy)]
pub(crate) struct LogDensity {
    k: u64,
    offset: f64,
}

impl LogDensity {
    pub(crate) fn new(k: u64) -> Self {
        let offset = if k == 0 {
            0.0
        } else {
            -stirling_error(k) - 0.5 * (LN_2PI + (k as f64).ln())
        };
        Self { k, offset }
    }

    pub(crate) fn ln_at(&self, r: f64) -> f64 {
        match (self.k, r == 0.0) {
            (0, _) => -r,
            (_, true) => f64::NEG_INFINITY,
            (k, false) => self.offset - deviance(k as f64, r),
        }
    }

    pub(crate) fn at(&self, r: f64) -> f64 {
        self.ln_at(r).exp()
    }
}

pub(crate) fn ln_fk_unchecked(k: u64, r: f64) -> f64 {
    LogDensity::new(k).ln_at(r)
}

pub(crate) fn fk_unchecked(k: u64, r: f64) -> f64 {
    ln_fk_unchecked(k, r).exp()
}

/// `f_k(r) = r^k e^{-r} / k!`.
///
/// Values whose logarithm is below about -745 underflow to zero.
pub fn fk(k: u64, r: f64) -> Result<f64> {
    check_index(k)?;
    check_radius("r", r)?;
    Ok(fk_unchecked(k, r))
}

/// Natural logarithm of [`fk`]; `-inf` at `r = 0` for `k >= 1`.
pub fn ln_fk(k: u64, r: f64) -> Result<f64> {
    check_index(k)?;
    check_radius("r", r)?;
    Ok(ln_fk_unchecked(k, r))
}

/// `P(k+1, x)` by its power series; meant for `x < k + 1`.
fn lower_series(k: u64, x: f64) -> f64 {
    let prefactor = fk_unchecked(k + 1, x);
    if prefactor == 0.0 {
        return 0.0;
    }
    let mut denom = k as f64 + 1.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    let max_terms = 1000 + (20.0 * denom.sqrt()) as usize;
    for _ in 0..max_terms {
        denom += 1.0;
        term *= x / denom;
        sum += term;
        if term <= sum * f64::EPSILON * 0.5 {
            break;
        }
    }
    prefactor * sum
}

/// `Q(k+1, x)` by the Legendre continued fraction (modified Lentz);
/// meant for `x >= k + 1`.
fn upper_continued_fraction(k: u64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let ln_prefactor = ln_fk_unchecked(k, x) + x.ln();
    if ln_prefactor < -745.2 {
        return 0.0;
    }
    let a = k as f64 + 1.0;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    // For integer a the fraction terminates after a steps.
    let max_iter = (k + 2).min(1000 + (20.0 * a.sqrt()) as u64);
    for i in 1..=max_iter {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() <= f64::EPSILON {
            break;
        }
    }
    ln_prefactor.exp() * h
}

/// `(P(k+1, x), Q(k+1, x))`, each accurate in the relative sense on the
/// side where it is the smaller of the two.
pub(crate) fn gamma_pq(k: u64, x: f64) -> (f64, f64) {
    if x == 0.0 {
        return (0.0, 1.0);
    }
    if x == f64::INFINITY {
        return (1.0, 0.0);
    }
    if k == 0 {
        let q = (-x).exp();
        return (-(-x).exp_m1(), q);
    }
    if x < k as f64 + 1.0 {
        let p = lower_series(k, x);
        (p, 1.0 - p)
    } else {
        let q = upper_continued_fraction(k, x);
        (1.0 - q, q)
    }
}

/// Mass of `f_k` above `a`, i.e. `Q(k+1, a)`.
pub fn fk_tail(k: u64, a: f64) -> Result<f64> {
    check_index(k)?;
    check_radius("a", a)?;
    Ok(gamma_pq(k, a).1)
}

/// Mass of `f_k` on `[0, b]`, i.e. `P(k+1, b)`.
pub fn fk_head(k: u64, b: f64) -> Result<f64> {
    check_index(k)?;
    if b.is_nan() || b < 0.0 {
        return Err(domain(format!("b = {b} must be nonnegative")));
    }
    Ok(gamma_pq(k, b).0)
}

/// `∫_a^b f_k(r) dr` for `0 <= a <= b`, where `b` may be `+inf`.
pub fn fk_integral(k: u64, a: f64, b: f64) -> Result<f64> {
    check_index(k)?;
    check_radius("a", a)?;
    if b.is_nan() || b < a {
        return Err(domain(format!(
            "interval [{a}, {b}] is reversed or invalid"
        )));
    }
    Ok(fk_integral_unchecked(k, a, b))
}

pub(crate) fn fk_integral_unchecked(k: u64, a: f64, b: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    if b == f64::INFINITY {
        return gamma_pq(k, a).1;
    }
    if k == 0 {
        return (-a).exp() * -(a - b).exp_m1();
    }
    let split = k as f64 + 1.0;
    let (diff, scale) = if a >= split {
        let qa = gamma_pq(k, a).1;
        let qb = gamma_pq(k, b).1;
        (qa - qb, qa)
    } else if b < split {
        let pa = gamma_pq(k, a).0;
        let pb = gamma_pq(k, b).0;
        (pb - pa, pb)
    } else {
        let pa = gamma_pq(k, a).0;
        let qb = gamma_pq(k, b).1;
        (1.0 - pa - qb, 1.0)
    };
    if scale > 0.0 && diff < CANCELLATION_RATIO * scale {
        return gauss_legendre_fk(k, a, b);
    }
    diff.clamp(0.0, 1.0)
}

fn gl_rule() -> &'static [(f64, f64)] {
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre_rule(GL_ORDER))
}

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
pub(crate) fn gauss_legendre_rule(n: usize) -> Vec<(f64, f64)> {
    let mut rule = Vec::with_capacity(n);
    let nf = n as f64;
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for j in 2..=n {
                let jf = j as f64;
                let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
                p0 = p1;
                p1 = p2;
            }
            dp = nf * (x * p1 - p0) / (x * x - 1.0);
            let step = p1 / dp;
            x -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        rule.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    rule
}

/// Composite 64-point Gauss–Legendre quadrature of `f_k` on `[a, b]`, with
/// panels narrow enough that `ln f_k` changes by a bounded amount on each.
pub(crate) fn gauss_legendre_fk(k: u64, a: f64, b: f64) -> f64 {
    let density = LogDensity::new(k);
    let width = b - a;
    let kf = k as f64;
    let slope = if a > 0.0 {
        (kf / a - 1.0).abs().max((kf / b - 1.0).abs())
    } else {
        kf / b.max(f64::MIN_POSITIVE) + 1.0
    };
    let panels = (width * slope / 2.0 + 4.0 * width / (kf + 1.0).sqrt())
        .ceil()
        .clamp(1.0, MAX_PANELS as f64) as usize;
    let h = width / panels as f64;
    let rule = gl_rule();
    let mut total = 0.0;
    for p in 0..panels {
        let lo = a + h * p as f64;
        let mid = lo + 0.5 * h;
        let panel: f64 = rule
            .iter()
            .map(|&(x, w)| w * density.at(mid + 0.5 * h * x))
            .sum();
        total += 0.5 * h * panel;
    }
    total
}
