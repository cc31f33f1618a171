//! Eigenvalues `λ_k(E) = ∫_{π·E} f_k` of the localization operator for a
//! radial set `E`, full spectra with a certified truncation, operator norms,
//! and the infinite equidistant comb.
//!
//! The factor π between the profile domain and the integration domain is
//! applied inside this module only; every public function takes profile
//! sets.

use std::f64::consts::{E, PI};

use serde::ser::{Serialize, SerializeStruct, Serializer};

use crate::error::{domain, Error, Result};
use crate::gamma::{self, check_index, fk_integral_unchecked, gamma_pq, LogDensity, MAX_INDEX};
use crate::io::{fmt17, sig17_vec, write_csv, Sig17};
use crate::quadrature;
use crate::sets::IntervalUnion;

/// Threshold on `P(K+1, π·sup E)` defining the automatic truncation index.
pub const AUTO_TAIL: f64 = 1e-14;

/// `e / (e - 1) = Σ_n e^{-n}`.
pub const COMB_CONSTANT: f64 = E / (E - 1.0);

/// Pmf values below this are dropped from the sweep windows.
const WINDOW_CUTOFF: f64 = 1e-28;

/// Indices on each side of the sweep maximum that are re-evaluated directly.
const REFINE_RADIUS: usize = 2;

/// Steps between re-anchoring the pmf recurrences on a direct evaluation.
const REANCHOR: usize = 256;

/// How individual eigenvalues are obtained when building a spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Method {
    /// One pass over all indices using pmf recurrences per endpoint.
    #[default]
    Sweep,
    /// Independent incomplete-gamma evaluation per index.
    Direct,
    /// Adaptive quadrature per interval and index (slow; debugging only).
    Oracle,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub lambdas: Vec<f64>,
    /// Certified upper bound on every `λ_k` with `k > K`.
    pub tail_bound: f64,
    /// `|π·E|`.
    pub set_measure_scaled: f64,
}

impl Spectrum {
    /// Largest computed index `K`.
    pub fn kmax(&self) -> usize {
        self.lambdas.len().saturating_sub(1)
    }

    /// First index attaining the maximum, with its value.
    pub fn argmax(&self) -> (usize, f64) {
        self.lambdas
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (k, v)| {
                if v > best.1 {
                    (k, v)
                } else {
                    best
                }
            })
    }

    pub fn to_csv(&self) -> String {
        write_csv(
            &["k", "lambda"],
            self.lambdas
                .iter()
                .enumerate()
                .map(|(k, &v)| vec![k.to_string(), fmt17(v)]),
        )
    }
}

impl Serialize for Spectrum {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut s = serializer.serialize_struct("Spectrum", 3)?;
        s.serialize_field("lambdas", &sig17_vec(&self.lambdas))?;
        s.serialize_field("tail_bound", &Sig17(self.tail_bound))?;
        s.serialize_field("K", &self.kmax())?;
        s.end()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormEstimate {
    pub value: f64,
    pub argmax_k: usize,
    pub tail_bound: f64,
    pub k_searched: usize,
}

impl Serialize for NormEstimate {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut s = serializer.serialize_struct("NormEstimate", 4)?;
        s.serialize_field("value", &Sig17(self.value))?;
        s.serialize_field("argmax_k", &self.argmax_k)?;
        s.serialize_field("tail_bound", &Sig17(self.tail_bound))?;
        s.serialize_field("k_searched", &self.k_searched)?;
        s.end()
    }
}

impl NormEstimate {
    pub fn to_csv(&self) -> String {
        write_csv(
            &["value", "argmax_k", "tail_bound", "k_searched"],
            [vec![
                fmt17(self.value),
                self.argmax_k.to_string(),
                fmt17(self.tail_bound),
                self.k_searched.to_string(),
            ]],
        )
    }
}

fn scaled(e: &IntervalUnion) -> Vec<(f64, f64)> {
    e.intervals()
        .iter()
        .map(|&(a, b)| (PI * a, PI * b))
        .collect()
}

/// `λ_k(E) = Σ_i ∫_{π a_i}^{π b_i} f_k`.
pub fn eigenvalue(e: &IntervalUnion, k: u64) -> Result<f64> {
    check_index(k)?;
    Ok(lambda_direct(&scaled(e), k))
}

/// `λ_k` from the adaptive quadrature oracle instead of incomplete gamma.
pub fn eigenvalue_oracle(e: &IntervalUnion, k: u64) -> Result<f64> {
    lambda_oracle(&scaled(e), k)
}

fn lambda_direct(pairs: &[(f64, f64)], k: u64) -> f64 {
    pairs
        .iter()
        .map(|&(a, b)| fk_integral_unchecked(k, a, b))
        .sum()
}

fn lambda_oracle(pairs: &[(f64, f64)], k: u64) -> Result<f64> {
    let mut total = 0.0;
    for &(a, b) in pairs {
        total += quadrature::integrate_fk(k, a, b, 1e-13)?.value;
    }
    Ok(total)
}

/// Smallest `K` with `P(K+1, b) < AUTO_TAIL`.
fn auto_kmax(b: f64) -> Result<u64> {
    let head = |k: u64| gamma_pq(k, b).0;
    if head(0) < AUTO_TAIL {
        return Ok(0);
    }
    // Exponential search for an upper bracket, then bisection.
    let mut hi = (b.ceil() as u64).max(1);
    let mut step = ((b.sqrt() as u64) * 4).max(8);
    while head(hi) >= AUTO_TAIL {
        if hi > MAX_INDEX {
            return Err(Error::Capacity(format!(
                "automatic truncation for sup π·E = {b} needs more than {MAX_INDEX} eigenvalues"
            )));
        }
        hi += step;
        step *= 2;
    }
    let mut lo = 0;
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if head(mid) < AUTO_TAIL {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    if hi > MAX_INDEX {
        return Err(Error::Capacity(format!(
            "automatic truncation index {hi} exceeds {MAX_INDEX}"
        )));
    }
    Ok(hi)
}

/// `λ_0..=λ_K`, with `K` chosen automatically when `kmax` is `None`.
pub fn spectrum(e: &IntervalUnion, kmax: Option<u64>) -> Result<Spectrum> {
    spectrum_with(e, kmax, Method::Sweep)
}

pub fn spectrum_with(e: &IntervalUnion, kmax: Option<u64>, method: Method) -> Result<Spectrum> {
    spectrum_of_pairs(&scaled(e), kmax, method)
}

/// Spectrum of the set whose π-scaling is given as sorted disjoint pairs.
fn spectrum_of_pairs(pairs: &[(f64, f64)], kmax: Option<u64>, method: Method) -> Result<Spectrum> {
    let sup = pairs.last().map_or(0.0, |p| p.1);
    let kmax = match kmax {
        Some(k) => {
            check_index(k)?;
            k
        }
        None => auto_kmax(sup)?,
    };
    let lambdas = match method {
        Method::Sweep => sweep_lambdas(pairs, kmax as usize),
        Method::Direct => (0..=kmax).map(|k| lambda_direct(pairs, k)).collect(),
        Method::Oracle => (0..=kmax)
            .map(|k| lambda_oracle(pairs, k))
            .collect::<Result<_>>()?,
    };
    let tail_bound = if pairs.is_empty() {
        0.0
    } else {
        gamma_pq(kmax + 1, sup).0
    };
    Ok(Spectrum {
        lambdas: lambdas
            .into_iter()
            .map(|v: f64| v.clamp(0.0, 1.0))
            .collect(),
        tail_bound,
        set_measure_scaled: pairs.iter().map(|&(a, b)| b - a).sum(),
    })
}

/// `sup_k λ_k(E)` over the automatically truncated spectrum.
pub fn operator_norm(e: &IntervalUnion) -> Result<NormEstimate> {
    operator_norm_with(e, Method::Sweep)
}

pub fn operator_norm_with(e: &IntervalUnion, method: Method) -> Result<NormEstimate> {
    norm_of_pairs(&scaled(e), method)
}

/// Operator norm for a set given directly as `π·E`.
///
/// Avoids the round trip through the profile domain, which costs about one
/// ulp of the endpoints in the interval widths; that matters for short
/// intervals far from the origin.
pub fn operator_norm_scaled(pi_e: &IntervalUnion) -> Result<NormEstimate> {
    norm_of_pairs(pi_e.intervals(), Method::Sweep)
}

fn norm_of_pairs(pairs: &[(f64, f64)], method: Method) -> Result<NormEstimate> {
    let mut spec = spectrum_of_pairs(pairs, None, method)?;
    if method == Method::Sweep && !pairs.is_empty() {
        // The recurrences lose a few digits when λ_k is far below the pmf
        // values; re-evaluate the neighbourhood of the maximum directly.
        let (top, _) = spec.argmax();
        let hi = (top + REFINE_RADIUS).min(spec.kmax());
        for k in top.saturating_sub(REFINE_RADIUS)..=hi {
            spec.lambdas[k] = lambda_direct(pairs, k as u64).clamp(0.0, 1.0);
        }
    }
    norm_from_spectrum(&spec, pairs.is_empty())
}

fn norm_from_spectrum(spec: &Spectrum, empty: bool) -> Result<NormEstimate> {
    let (argmax_k, value) = spec.argmax();
    let estimate = NormEstimate {
        value,
        argmax_k,
        tail_bound: spec.tail_bound,
        k_searched: spec.kmax(),
    };
    if empty {
        return Ok(NormEstimate {
            value: 0.0,
            ..estimate
        });
    }
    if spec.tail_bound >= value {
        return Err(Error::Inconclusive {
            value,
            tail_bound: spec.tail_bound,
        });
    }
    Ok(estimate)
}

/// `(Σ_{k<=K} λ_k, |π·E|)`.
pub fn trace_check(e: &IntervalUnion, kmax: Option<u64>) -> Result<(f64, f64)> {
    let spec = spectrum(e, kmax)?;
    Ok((neumaier_sum(&spec.lambdas), spec.set_measure_scaled))
}

pub(crate) fn neumaier_sum(values: &[f64]) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for &v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// `f_j(x)` for every `j` where it exceeds [`WINDOW_CUTOFF`], as
/// `(first_index, values)`.
fn pmf_window(x: f64) -> (usize, Vec<f64>) {
    if x == 0.0 {
        return (0, vec![1.0]);
    }
    let mode = x.floor() as usize;
    let direct = |j: usize| LogDensity::new(j as u64).at(x);

    let mut below = Vec::new();
    let mut value = direct(mode);
    let mut j = mode;
    while j > 0 {
        value *= j as f64 / x;
        j -= 1;
        if (mode - j).is_multiple_of(REANCHOR) {
            value = direct(j);
        }
        if value < WINDOW_CUTOFF {
            break;
        }
        below.push(value);
    }
    let start = mode - below.len();
    below.reverse();

    let mut values = below;
    value = direct(mode);
    values.push(value);
    let mut j = mode;
    loop {
        j += 1;
        value *= x / j as f64;
        if (j - mode).is_multiple_of(REANCHOR) {
            value = direct(j);
        }
        if value < WINDOW_CUTOFF {
            break;
        }
        values.push(value);
    }
    (start, values)
}

/// All of `λ_0..=λ_K` for π-scaled intervals in one pass.
///
/// Per interval `[a, b]`, `∫_a^b f_k = Σ_{j<=k} (f_j(a) - f_j(b))
/// = Σ_{j>k} (f_j(b) - f_j(a))`. The prefix form is used for `k < a`
/// (both masses are small upper tails) and the suffix form otherwise, so
/// neither side subtracts two numbers close to one.
pub(crate) fn sweep_lambdas(intervals: &[(f64, f64)], kmax: usize) -> Vec<f64> {
    let mut lambdas = vec![0.0; kmax + 1];
    let mut diff: Vec<f64> = Vec::new();
    for &(a, b) in intervals {
        let (start_a, fa) = pmf_window(a);
        let (start_b, fb) = pmf_window(b);
        let lo = start_a.min(start_b);
        let hi = (start_a + fa.len()).max(start_b + fb.len()); // exclusive
        let split = (a.floor() as usize).clamp(lo, hi);
        if lo > kmax {
            continue;
        }
        diff.clear();
        diff.resize(hi - lo, 0.0);
        for (i, v) in fa.iter().enumerate() {
            diff[start_a + i - lo] += v;
        }
        for (i, v) in fb.iter().enumerate() {
            diff[start_b + i - lo] -= v;
        }

        let mut acc = 0.0;
        for k in lo..split.min(kmax + 1) {
            acc += diff[k - lo];
            lambdas[k] += acc;
        }
        let mut acc = 0.0;
        for k in (split..hi).rev() {
            if k <= kmax {
                lambdas[k] += acc;
            }
            acc -= diff[k - lo];
        }
    }
    lambdas
}

/// The equidistant set `E(s) = ∪_{n>=0} [n, n+s] / π`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CombSpec {
    s: f64,
}

impl CombSpec {
    pub fn new(s: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&s) {
            return Err(domain(format!("comb duty s = {s} must lie in [0, 1]")));
        }
        Ok(Self { s })
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    /// `λ_0(s) = (1 - e^{-s}) C`, the lower bound of the norm.
    pub fn lower_bound(&self) -> f64 {
        -(-self.s).exp_m1() * COMB_CONSTANT
    }

    /// `min(C s, 1)`.
    pub fn upper_bound(&self) -> f64 {
        (COMB_CONSTANT * self.s).min(1.0)
    }
}

fn check_tol(tol: f64) -> Result<()> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(domain(format!("tolerance {tol} must be positive")));
    }
    Ok(())
}

/// `λ_k(s) = Σ_n ∫_n^{n+s} f_k`, truncated at the first `N` whose tail mass
/// `Q(k+1, N)` is at most `tol`.
pub fn comb_eigenvalue(comb: &CombSpec, k: u64, tol: f64) -> Result<f64> {
    check_index(k)?;
    check_tol(tol)?;
    let s = comb.s;
    if s == 0.0 {
        return Ok(0.0);
    }
    let mut n_last = k.max(1);
    let mut step = ((k as f64).sqrt() as u64).max(4);
    while gamma_pq(k, n_last as f64).1 > tol {
        n_last += step;
        step *= 2;
    }
    let terms: Vec<f64> = (0..=n_last)
        .map(|n| fk_integral_unchecked(k, n as f64, n as f64 + s))
        .collect();
    Ok(neumaier_sum(&terms).min(1.0))
}

/// Uniform bound on `|λ_j(s) - s|` for all `j >= k >= 1`.
///
/// The 1-periodization of `f_k` has Fourier coefficients
/// `(1 + 2πim)^{-(k+1)}`, so `|λ_k(s) - s| <= (2/π) Σ_m (2πm)^{-(k+1)} / m
/// <= (2 ζ(3) / π) (2π)^{-(k+1)}`.
pub fn comb_deviation_bound(k: u64) -> f64 {
    const ZETA3: f64 = 1.202_056_903_159_594_3;
    assert!(k >= 1, "deviation bound needs k >= 1");
    2.0 * ZETA3 / PI * (2.0 * PI).powf(-(k as f64 + 1.0))
}

/// Largest comb eigenvalue, searched over increasing `k` until a bound valid
/// for every remaining index drops to the running maximum (within `tol`).
/// `argmax_k` is the first index within `tol` of the maximum.
///
/// Two bounds are used, both non-increasing in `k`: `s (1 + 2 f_k(k))` for
/// `k >= 2`, and `s + comb_deviation_bound(k)`.
pub fn comb_norm(comb: &CombSpec, tol: f64) -> Result<NormEstimate> {
    check_tol(tol)?;
    let s = comb.s;
    if s == 0.0 {
        return Ok(NormEstimate {
            value: 0.0,
            argmax_k: 0,
            tail_bound: 0.0,
            k_searched: 0,
        });
    }
    let mut lambdas = Vec::new();
    let mut max = f64::NEG_INFINITY;
    let mut k = 0u64;
    loop {
        let lambda = comb_eigenvalue(comb, k, tol)?;
        max = max.max(lambda);
        lambdas.push(lambda);
        let next = k + 1;
        let mut bound = s + comb_deviation_bound(next);
        if next >= 2 {
            bound = bound.min(s * (1.0 + 2.0 * gamma::fk_unchecked(next, next as f64)));
        }
        if bound <= max + tol {
            // Values are only resolved to `tol`; report the first index
            // within it of the maximum.
            let argmax_k = lambdas.iter().position(|&v| v >= max - tol).unwrap_or(0);
            return Ok(NormEstimate {
                value: max,
                argmax_k,
                tail_bound: bound,
                k_searched: k as usize,
            });
        }
        if next > MAX_INDEX {
            return Err(Error::Capacity(format!(
                "comb search for s = {s} passed k = {MAX_INDEX}"
            )));
        }
        k = next;
    }
}
