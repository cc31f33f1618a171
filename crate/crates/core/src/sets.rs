//! Radial sets in the profile domain: finite unions of closed intervals,
//! mid-third Cantor iterates and their normalized cumulative measure.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{domain, Error, Result};
use crate::io::Sig17;

/// Largest Cantor iterate that [`cantor_expand`] will materialize.
pub const MAX_EXPANDED_ITERATE: u32 = 24;

/// Disjoint, sorted, closed intervals with nonempty interiors.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct IntervalUnion {
    intervals: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// Keep `[0, c]`.
    Left,
    /// Keep `[c, inf)`.
    Right,
}

impl IntervalUnion {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Validates each pair and returns the canonical (sorted, merged) union.
    pub fn new(pairs: &[(f64, f64)]) -> Result<Self> {
        if let Some(&(a, b)) = pairs
            .iter()
            .find(|(a, b)| !(a.is_finite() && b.is_finite()) || *a < 0.0 || a >= b)
        {
            return Err(Error::Validation(format!(
                "interval ({a}, {b}) must satisfy 0 <= a < b < inf"
            )));
        }
        let mut sorted = pairs.to_vec();
        sorted.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.total_cmp(&y.1)));
        Ok(Self::canonical(sorted))
    }

    /// Merges overlapping/touching pieces and drops empty ones. Input must be
    /// sorted by left endpoint.
    fn canonical(sorted: Vec<(f64, f64)>) -> Self {
        let mut out: Vec<(f64, f64)> = Vec::with_capacity(sorted.len());
        for (a, b) in sorted {
            if b <= a {
                continue;
            }
            match out.last_mut() {
                Some(last) if a <= last.1 => last.1 = last.1.max(b),
                _ => out.push((a, b)),
            }
        }
        Self { intervals: out }
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn measure(&self) -> f64 {
        self.intervals.iter().map(|(a, b)| b - a).sum()
    }

    /// Right endpoint of the last interval, 0 for the empty union.
    pub fn sup(&self) -> f64 {
        self.intervals.last().map_or(0.0, |&(_, b)| b)
    }

    pub fn scale(&self, c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(domain(format!(
                "scale factor {c} must be positive and finite"
            )));
        }
        Ok(Self::canonical(
            self.intervals
                .iter()
                .map(|&(a, b)| (a * c, b * c))
                .collect(),
        ))
    }

    pub fn shift(&self, c: f64) -> Result<Self> {
        if !(c >= 0.0 && c.is_finite()) {
            return Err(domain(format!("shift {c} must be finite and nonnegative")));
        }
        Ok(Self::canonical(
            self.intervals
                .iter()
                .map(|&(a, b)| (a + c, b + c))
                .collect(),
        ))
    }

    /// Intersection with `[0, c]` or `[c, inf)`; zero-length pieces vanish.
    pub fn intersect_halfline(&self, c: f64, side: Side) -> Self {
        let pieces = self.intervals.iter().filter_map(|&(a, b)| {
            let (lo, hi) = match side {
                Side::Left => (a, b.min(c)),
                Side::Right => (a.max(c), b),
            };
            (lo < hi).then_some((lo, hi))
        });
        Self {
            intervals: pieces.collect(),
        }
    }

    /// `{2c - r : r in self}`; requires the union to lie in `[0, c]`.
    pub fn reflect_about(&self, c: f64) -> Result<Self> {
        if self.sup() > c {
            return Err(Error::Precondition(format!(
                "reflection about {c} needs the set inside [0, {c}], but it reaches {}",
                self.sup()
            )));
        }
        let reflected = self
            .intervals
            .iter()
            .rev()
            .map(|&(a, b)| (2.0 * c - b, 2.0 * c - a));
        Ok(Self::canonical(reflected.collect()))
    }

    pub(crate) fn is_canonical(&self) -> bool {
        self.intervals.iter().all(|&(a, b)| a >= 0.0 && a < b)
            && self.intervals.windows(2).all(|w| w[0].1 < w[1].0)
    }
}

/// Convenience wrapper over [`IntervalUnion::new`].
pub fn make_union(pairs: &[(f64, f64)]) -> Result<IntervalUnion> {
    IntervalUnion::new(pairs)
}

impl Serialize for IntervalUnion {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Repr {
            intervals: Vec<[Sig17; 2]>,
        }
        Repr {
            intervals: self
                .intervals
                .iter()
                .map(|&(a, b)| [Sig17(a), Sig17(b)])
                .collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for IntervalUnion {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Repr {
            intervals: Vec<(f64, f64)>,
        }
        let repr = Repr::deserialize(deserializer)?;
        IntervalUnion::new(&repr.intervals).map_err(serde::de::Error::custom)
    }
}

/// The `n`-th mid-third Cantor iterate of `[0, L]`, kept symbolic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CantorSpec {
    #[serde(rename = "L")]
    pub base_length: f64,
    #[serde(rename = "n")]
    pub iterate: u32,
}

impl CantorSpec {
    pub fn new(base_length: f64, iterate: u32) -> Result<Self> {
        if !(base_length > 0.0 && base_length.is_finite()) {
            return Err(domain(format!(
                "base length {base_length} must be positive and finite"
            )));
        }
        Ok(Self {
            base_length,
            iterate,
        })
    }

    /// `L (2/3)^n`.
    pub fn measure(&self) -> f64 {
        self.base_length * (2.0f64 / 3.0).powi(self.iterate as i32)
    }

    pub fn expand(&self) -> Result<IntervalUnion> {
        cantor_expand(self)
    }
}

/// Materializes the `2^n` intervals of `C_n(L)` in increasing order.
///
/// Endpoints are `L * m / 3^n` with exact integer numerators `m`.
pub fn cantor_expand(spec: &CantorSpec) -> Result<IntervalUnion> {
    let n = spec.iterate;
    if n > MAX_EXPANDED_ITERATE {
        return Err(Error::Capacity(format!(
            "iterate {n} would need 2^{n} intervals (limit {MAX_EXPANDED_ITERATE}); \
             use cantor_function or the closed forms instead"
        )));
    }
    let denom = 3u64.pow(n) as f64;
    let count = 1usize << n;
    let mut intervals = Vec::with_capacity(count);
    for index in 0..count {
        // Binary digits of the index select ternary digits 0 or 2.
        let mut numerator = 0u64;
        for bit in (0..n).rev() {
            numerator = 3 * numerator + 2 * ((index >> bit) & 1) as u64;
        }
        let lo = spec.base_length * (numerator as f64 / denom);
        let hi = spec.base_length * ((numerator + 1) as f64 / denom);
        intervals.push((lo, hi));
    }
    // Adjacent pieces are separated by gaps of width >= L/3^n, so no merging.
    Ok(IntervalUnion { intervals })
}

/// Unevaluated sum `hi + lo` used to track the ternary digits of `x / L`
/// without drift.
#[derive(Clone, Copy)]
struct TwoSum {
    hi: f64,
    lo: f64,
}

impl TwoSum {
    fn quotient(x: f64, l: f64) -> Self {
        let hi = x / l;
        let lo = (-hi).mul_add(l, x) / l;
        Self::renormalize(hi, lo)
    }

    fn renormalize(a: f64, b: f64) -> Self {
        let hi = a + b;
        let lo = b - (hi - a);
        Self { hi, lo }
    }

    fn triple_minus(self, digit: f64) -> Self {
        let p = 3.0 * self.hi;
        let err = 3.0f64.mul_add(self.hi, -p);
        let hi = p - digit;
        Self::renormalize(hi, err + 3.0 * self.lo)
    }

    fn cmp_value(self, c: f64) -> std::cmp::Ordering {
        self.hi.total_cmp(&c).then(self.lo.total_cmp(&0.0))
    }

    fn value(self) -> f64 {
        self.hi + self.lo
    }
}

/// `|C_n(L) ∩ [0, x]| / |C_n(L)|`, by the self-similar digit recursion.
pub fn cantor_function(l: f64, n: u32, x: f64) -> Result<f64> {
    use std::cmp::Ordering::*;
    if !(l > 0.0 && l.is_finite()) {
        return Err(domain(format!(
            "base length {l} must be positive and finite"
        )));
    }
    if x.is_nan() {
        return Err(domain("x is NaN"));
    }
    if x <= 0.0 {
        return Ok(0.0);
    }
    if x >= l {
        return Ok(1.0);
    }
    let mut t = TwoSum::quotient(x, l);
    let mut acc = 0.0;
    let mut weight = 1.0;
    for _ in 0..n {
        let tripled = t.triple_minus(0.0);
        weight *= 0.5;
        if tripled.cmp_value(1.0) != Greater {
            t = tripled;
        } else if tripled.cmp_value(2.0) == Less {
            return Ok(acc + weight);
        } else {
            acc += weight;
            t = t.triple_minus(2.0);
        }
    }
    Ok((acc + weight * t.value()).clamp(0.0, 1.0))
}
