//! Analysis of localization on spherically symmetric Cantor iterates.
//!
//! `x` denotes `πR²` throughout, so the integration-domain set is
//! `C_n(x)` and the profile set is `C_n(x / π)`.

use std::f64::consts::{LN_2, PI};

use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::gamma::{check_index, fk_integral_unchecked, fk_unchecked};
use crate::io::sig17_vec;
use crate::sets::{CantorSpec, IntervalUnion, Side};

/// Exponent `ln 2 / ln 3` of the Cantor set's dimension.
pub const CANTOR_DIMENSION: f64 = 0.630_929_753_571_457_4;

/// Iterates up to this depth are expanded for direct integration.
pub const MAX_ANALYSIS_ITERATE: u32 = 16;

/// Denominators of relative areas below this are rejected.
const DEGENERATE_MASS: f64 = 1e-300;

/// Profile-domain set `C_n(x/π)` whose π-scaling is `C_n(x)`.
pub fn cantor_profile(x: f64, n: u32) -> Result<IntervalUnion> {
    CantorSpec::new(x / PI, n)?.expand()
}

/// `∫_U f_k` over a set already in the integration domain.
pub fn integrate_over(u: &IntervalUnion, k: u64) -> Result<f64> {
    check_index(k)?;
    Ok(u.intervals()
        .iter()
        .map(|&(a, b)| fk_integral_unchecked(k, a, b))
        .sum())
}

fn check_area_args(s: f64, three_l: f64) -> Result<()> {
    if !(s >= 0.0 && s.is_finite()) {
        return Err(domain(format!(
            "start point s = {s} must be finite and nonnegative"
        )));
    }
    if !(three_l > 0.0 && three_l.is_finite()) {
        return Err(domain(format!(
            "length 3L = {three_l} must be positive and finite"
        )));
    }
    Ok(())
}

/// Fraction of `∫_s^{s+3L} f_k` left after removing the open middle third.
pub fn relative_area(k: u64, s: f64, three_l: f64) -> Result<f64> {
    check_index(k)?;
    check_area_args(s, three_l)?;
    let l = three_l / 3.0;
    let whole = fk_integral_unchecked(k, s, s + three_l);
    if whole < DEGENERATE_MASS {
        return Err(Error::Degenerate(format!(
            "∫ f_{k} over [{s}, {}] = {whole:e} is too small for a relative area",
            s + three_l
        )));
    }
    let kept =
        fk_integral_unchecked(k, s, s + l) + fk_integral_unchecked(k, s + 2.0 * l, s + three_l);
    Ok(kept / whole)
}

/// The same relative area through the closed-form finite sums of the
/// incomplete gamma function. Cancels badly once `s` is large.
pub fn relative_area_identity(k: u64, s: f64, three_l: f64) -> Result<f64> {
    check_index(k)?;
    check_area_args(s, three_l)?;
    let l = three_l / 3.0;
    let points = [s, s + l, s + 2.0 * l, s + three_l];
    let weights = [1.0, -(-l).exp(), (-2.0 * l).exp(), -(-three_l).exp()];
    let mut terms = [1.0f64; 4];
    let mut numerator = weights.iter().sum::<f64>();
    let mut denominator = weights[0] + weights[3];
    for n in 1..=k {
        for (t, p) in terms.iter_mut().zip(points) {
            *t *= p / n as f64;
        }
        numerator += weights.iter().zip(terms).map(|(w, t)| w * t).sum::<f64>();
        denominator += weights[0] * terms[0] + weights[3] * terms[3];
    }
    if denominator.abs() < DEGENERATE_MASS {
        return Err(Error::Degenerate(format!(
            "identity denominator vanishes at s = {s}"
        )));
    }
    Ok(numerator / denominator)
}

/// `𝒜_0(3L) = (1 + e^{-2L})(1 - e^{-L}) / (1 - e^{-3L})`, independent of the
/// start point.
pub fn relative_area_zero(three_l: f64) -> Result<f64> {
    check_area_args(0.0, three_l)?;
    let l = three_l / 3.0;
    Ok((1.0 + (-2.0 * l).exp()) * (-l).exp_m1() / (-three_l).exp_m1())
}

fn check_x(x: f64) -> Result<()> {
    if !(x >= 0.0 && x.is_finite()) {
        return Err(domain(format!(
            "x = πR² = {x} must be finite and nonnegative"
        )));
    }
    Ok(())
}

/// `λ_0(𝒞_n) = (1 - e^{-x/3^n}) Π_{j=1}^n (1 + e^{-2x/3^j})`.
pub fn lambda0_closed(x: f64, n: u32) -> Result<f64> {
    check_x(x)?;
    let mut value = -(-x / 3f64.powi(n as i32)).exp_m1();
    let mut scale = 1.0;
    for _ in 1..=n {
        scale *= 3.0;
        value *= 1.0 + (-2.0 * x / scale).exp();
    }
    Ok(value)
}

/// `λ_0(𝒞_{j+1}) = 𝒜_0(x / 3^j) λ_0(𝒞_j)` iterated from `1 - e^{-x}`.
pub fn lambda0_recursive(x: f64, n: u32) -> Result<f64> {
    check_x(x)?;
    let mut value = -(-x).exp_m1();
    if x == 0.0 {
        return Ok(0.0);
    }
    let mut length = x;
    for _ in 0..n {
        value *= relative_area_zero(length)?;
        length /= 3.0;
    }
    Ok(value)
}

/// `(2x + 1)^{ln2/ln3} / (2^n (1 - e^{-x/3^n})) · norm`, for
/// `0 < x <= 3^n / 2`.
pub fn thm4_ratio(x: f64, n: u32, norm: f64) -> Result<f64> {
    let top = 3f64.powi(n as i32) / 2.0;
    if !(x > 0.0 && x <= top) {
        return Err(domain(format!("x = {x} must lie in (0, 3^{n}/2 = {top}]")));
    }
    if !(norm > 0.0 && norm.is_finite()) {
        return Err(domain(format!("norm {norm} must be positive")));
    }
    let scale = -(-x / 3f64.powi(n as i32)).exp_m1();
    Ok((2.0 * x + 1.0).powf(CANTOR_DIMENSION) / (2f64.powi(n as i32) * scale) * norm)
}

/// Partial sum of a series with a heuristic estimate of the neglected tail.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeriesSum {
    pub value: f64,
    pub tail_estimate: f64,
    pub terms: u32,
}

/// `Σ_{j=1}^J [ln(1 + y^{1/3^j}) - y^{1/3^j} ln 2]` for `y ∈ [0, 1]`.
///
/// Terms shrink roughly by 1/3 per step; the tail is extrapolated
/// geometrically from the last two.
pub fn claim_i(y: f64, terms: u32) -> Result<SeriesSum> {
    if !(0.0..=1.0).contains(&y) {
        return Err(domain(format!("y = {y} must lie in [0, 1]")));
    }
    if y == 0.0 || y == 1.0 {
        return Ok(SeriesSum {
            value: 0.0,
            tail_estimate: 0.0,
            terms,
        });
    }
    let ln_y = y.ln();
    let mut value = 0.0;
    let (mut prev, mut last) = (0.0f64, 0.0f64);
    let mut scale = 1.0;
    for _ in 0..terms {
        scale *= 3.0;
        // t = y^{1/3^j} = 1 - u; ln(1 + t) - t ln 2 = ln(1 - u/2) + u ln 2.
        let u = -(ln_y / scale).exp_m1();
        let term = (-0.5 * u).ln_1p() + u * LN_2;
        value += term;
        prev = last;
        last = term;
    }
    let tail_estimate = if prev != 0.0 && (last / prev).abs() < 1.0 {
        let ratio = (last / prev).abs();
        last.abs() * ratio / (1.0 - ratio)
    } else {
        last.abs()
    };
    Ok(SeriesSum {
        value,
        tail_estimate,
        terms,
    })
}

/// `Σ_{j=1}^n e^{-x/3^j} - (n - ln(x + 1)/ln 3)` for `x ∈ [0, 3^n]`.
pub fn claim_ii(x: f64, n: u32) -> Result<f64> {
    let top = 3f64.powi(n as i32);
    if !(x >= 0.0 && x <= top) {
        return Err(domain(format!("x = {x} must lie in [0, 3^{n} = {top}]")));
    }
    let mut sum = 0.0;
    let mut scale = 1.0;
    for _ in 0..n {
        scale *= 3.0;
        sum += (-x / scale).exp();
    }
    Ok(sum - (n as f64 - x.ln_1p() / 3f64.ln()))
}

/// `𝒜_0(3L) - 𝒜_k(s, 3L)`, nonnegative whenever `s >= k`.
pub fn lemma1_gap(k: u64, s: f64, three_l: f64) -> Result<f64> {
    Ok(relative_area_zero(three_l)? - relative_area(k, s, three_l)?)
}

/// `Ψ_k(r, s, L, y) = f_k(r+s+y) f_k(s+L) - f_k(r+s+L-y) f_k(s+2y)`.
pub fn psi_k(k: u64, r: f64, s: f64, l: f64, y: f64) -> f64 {
    fk_unchecked(k, r + s + y) * fk_unchecked(k, s + l)
        - fk_unchecked(k, r + s + l - y) * fk_unchecked(k, s + 2.0 * y)
}

/// `Φ_k(r, s, L) = Ψ_k(r, s, L, 0) + Ψ_k(r, s, L, L)`.
pub fn phi_k(k: u64, r: f64, s: f64, l: f64) -> f64 {
    psi_k(k, r, s, l, 0.0) + psi_k(k, r, s, l, l)
}

/// Numerator of `∂𝒜_k/∂s`:
/// `(f_k(s+L) - f_k(s+2L)) ∫_s^{s+3L} f_k - (f_k(s) - f_k(s+3L)) ∫_{s+L}^{s+2L} f_k`.
///
/// Equals `∫_0^L Φ_k(r, s, L) - Φ_k(r, s+L, L) dr`.
pub fn nk_sign(k: u64, s: f64, l: f64) -> Result<f64> {
    check_index(k)?;
    if k == 0 {
        return Err(domain("N_k is defined for k >= 1"));
    }
    if !(s >= 0.0 && s.is_finite()) || !(l > 0.0 && l.is_finite()) {
        return Err(domain(format!(
            "need s >= 0 and L > 0, got s = {s}, L = {l}"
        )));
    }
    let f = |r: f64| fk_unchecked(k, r);
    let whole = fk_integral_unchecked(k, s, s + 3.0 * l);
    let middle = fk_integral_unchecked(k, s + l, s + 2.0 * l);
    Ok((f(s + l) - f(s + 2.0 * l)) * whole - (f(s) - f(s + 3.0 * l)) * middle)
}

/// Both sides of the comparison between `C_n(L)` split at `k` and the
/// shifted iterate `C_n(L) + k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Lemma2Check {
    /// `∫_{C_n(L) ∩ [k, ∞)} f_k`.
    pub lhs_a: f64,
    /// `∫_{C_n(L) ∩ [0, k]} f_k`.
    pub lhs_b: f64,
    /// `∫_{C_n(L) + k} f_k`.
    pub rhs: f64,
}

impl Lemma2Check {
    pub fn holds(&self, slack: f64) -> bool {
        self.lhs_a <= self.rhs + slack && self.lhs_b <= self.rhs + slack
    }
}

pub fn lemma2_check(spec: &CantorSpec, k: u64) -> Result<Lemma2Check> {
    if spec.iterate > MAX_ANALYSIS_ITERATE {
        return Err(Error::Capacity(format!(
            "lemma check expands at most {MAX_ANALYSIS_ITERATE} iterates, got {}",
            spec.iterate
        )));
    }
    let set = spec.expand()?;
    let kf = k as f64;
    Ok(Lemma2Check {
        lhs_a: integrate_over(&set.intersect_halfline(kf, Side::Right), k)?,
        lhs_b: integrate_over(&set.intersect_halfline(kf, Side::Left), k)?,
        rhs: integrate_over(&set.shift(kf)?, k)?,
    })
}

/// `∫_{C_n(x)+s+k} f_k`, dominated by `λ_0(𝒞_n)`.
pub fn shifted_iterate_mass(x: f64, n: u32, s: f64, k: u64) -> Result<f64> {
    let set = CantorSpec::new(x, n)?.expand()?;
    integrate_over(&set.shift(s + k as f64)?, k)
}

/// Normalized ratios over a grid of `x` for one iterate, with envelope.
#[derive(Debug, Clone, PartialEq)]
pub struct RatioStats {
    pub n: u32,
    pub grid: Vec<f64>,
    pub ratios: Vec<f64>,
    pub min: f64,
    pub max: f64,
}

impl RatioStats {
    /// `norms[i]` must belong to `(grid[i], n)`.
    pub fn new(n: u32, grid: Vec<f64>, norms: &[f64]) -> Result<Self> {
        if grid.len() != norms.len() || grid.is_empty() {
            return Err(Error::Validation(format!(
                "need one norm per grid point ({} vs {})",
                grid.len(),
                norms.len()
            )));
        }
        let ratios = grid
            .iter()
            .zip(norms)
            .map(|(&x, &norm)| thm4_ratio(x, n, norm))
            .collect::<Result<Vec<_>>>()?;
        let min = ratios.iter().copied().fold(f64::INFINITY, f64::min);
        let max = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Ok(Self {
            n,
            grid,
            ratios,
            min,
            max,
        })
    }
}

impl Serialize for RatioStats {
    fn serialize<S: serde::Serializer>(
        &self,
        serializer: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut s = serializer.serialize_struct("RatioStats", 5)?;
        s.serialize_field("n", &self.n)?;
        s.serialize_field("grid", &sig17_vec(&self.grid))?;
        s.serialize_field("ratios", &sig17_vec(&self.ratios))?;
        s.serialize_field("min", &crate::io::Sig17(self.min))?;
        s.serialize_field("max", &crate::io::Sig17(self.max))?;
        s.end()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn relative_area_examples() {
        let three_l = 3.0 * LN_2;
        assert_abs_diff_eq!(
            relative_area(0, 0.0, three_l).unwrap(),
            5.0 / 7.0,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            relative_area(0, 11.0, three_l).unwrap(),
            5.0 / 7.0,
            epsilon = 1e-14
        );
        assert_abs_diff_eq!(
            relative_area_zero(three_l).unwrap(),
            5.0 / 7.0,
            epsilon = 1e-15
        );
        let a = relative_area(0, 0.0, 1.0).unwrap();
        let b = relative_area(0, 17.3, 1.0).unwrap();
        assert_abs_diff_eq!(a, b, epsilon = 1e-13);
        assert_abs_diff_eq!(
            relative_area(4, 6.0, 2.0).unwrap(),
            0.671_391_987_163_692_42,
            epsilon = 1e-13
        );
    }

    #[test]
    fn identity_agrees_with_integrals() {
        for &(k, s, t) in &[
            (0u64, 0.0, 1.0),
            (3, 2.0, 4.0),
            (4, 6.0, 2.0),
            (12, 15.0, 0.7),
            (30, 35.0, 9.0),
        ] {
            let a = relative_area(k, s, t).unwrap();
            let b = relative_area_identity(k, s, t).unwrap();
            assert!((a - b).abs() < 1e-10, "k={k} s={s}: {a} vs {b}");
        }
    }

    #[test]
    fn relative_area_errors() {
        assert!(matches!(
            relative_area(0, 2000.0, 1.0),
            Err(Error::Degenerate(_))
        ));
        assert!(relative_area(1, -1.0, 1.0).is_err());
        assert!(relative_area(1, 1.0, 0.0).is_err());
    }

    #[test]
    fn lambda0_examples() {
        for x in [0.0, 0.3, 2.0, 10.0] {
            assert_abs_diff_eq!(
                lambda0_closed(x, 0).unwrap(),
                1.0 - (-x).exp(),
                epsilon = 1e-16
            );
            assert_abs_diff_eq!(
                lambda0_recursive(x, 0).unwrap(),
                1.0 - (-x).exp(),
                epsilon = 1e-16
            );
        }
        let x = 3.0 * LN_2;
        assert_abs_diff_eq!(lambda0_closed(x, 1).unwrap(), 0.625, epsilon = 1e-15);
        assert_abs_diff_eq!(lambda0_recursive(x, 1).unwrap(), 0.625, epsilon = 1e-15);
        assert_abs_diff_eq!(
            lambda0_closed(2.0, 6).unwrap(),
            0.081_709_340_495_120_139,
            epsilon = 1e-16
        );
        let closed = lambda0_closed(5.0, 10).unwrap();
        assert_abs_diff_eq!(closed, 0.023_041_251_479_128_806, epsilon = 1e-16);
        assert_abs_diff_eq!(lambda0_recursive(5.0, 10).unwrap(), closed, epsilon = 1e-12);
    }

    #[test]
    fn lambda0_matches_direct_integration() {
        let direct =
            integrate_over(&CantorSpec::new(2.0, 6).unwrap().expand().unwrap(), 0).unwrap();
        assert_abs_diff_eq!(direct, lambda0_closed(2.0, 6).unwrap(), epsilon = 1e-14);
    }

    #[test]
    fn thm4_ratio_examples() {
        for x in [0.1, 0.25, 0.5] {
            let r = thm4_ratio(x, 0, 1.0 - (-x).exp()).unwrap();
            assert_abs_diff_eq!(r, (2.0 * x + 1.0).powf(CANTOR_DIMENSION), epsilon = 1e-14);
        }
        let r = thm4_ratio(1.0, 4, lambda0_closed(1.0, 4).unwrap()).unwrap();
        assert_abs_diff_eq!(r, 1.297_965_916_947_562_7, epsilon = 1e-13);
        assert!(thm4_ratio(0.0, 2, 0.1).is_err());
        assert!(thm4_ratio(5.0, 2, 0.1).is_err());
        assert_abs_diff_eq!(3f64.powf(CANTOR_DIMENSION), 2.0, epsilon = 1e-15);
    }

    #[test]
    fn claim_examples() {
        assert_eq!(claim_i(1.0, 60).unwrap().value, 0.0);
        assert_eq!(claim_i(0.0, 60).unwrap().value, 0.0);
        let half = claim_i(0.5, 60).unwrap();
        assert_abs_diff_eq!(half.value, 0.055_017_828_297_644_978, epsilon = 1e-15);
        assert!(half.tail_estimate < 1e-25);
        assert!(claim_i(1.5, 60).is_err());

        assert_eq!(claim_ii(0.0, 7).unwrap(), 0.0);
        assert_abs_diff_eq!(
            claim_ii(1.0, 5).unwrap(),
            0.189_564_271_099_622_38,
            epsilon = 1e-14
        );
        assert_abs_diff_eq!(
            claim_ii(3f64.powi(5), 5).unwrap(),
            0.421_528_073_373_780_77,
            epsilon = 1e-13
        );
        assert_abs_diff_eq!(
            claim_ii(3f64.powi(40), 40).unwrap(),
            0.417_789_919_345_272_47,
            epsilon = 1e-12
        );
        assert!(claim_ii(244.0, 5).is_err());
    }

    #[test]
    fn lemma1_examples() {
        assert_abs_diff_eq!(lemma1_gap(0, 4.2, 1.3).unwrap(), 0.0, epsilon = 1e-14);
        assert!(lemma1_gap(3, 3.0, 1.7).unwrap() >= 0.0);
        assert!(lemma1_gap(2, 0.0, 0.01).unwrap() < 0.0);
    }

    #[test]
    fn nk_examples() {
        assert_abs_diff_eq!(
            nk_sign(1, 1.0, 0.5).unwrap(),
            4.016_571_563_698_481_7e-3,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            nk_sign(5, 5.0, 2.0).unwrap(),
            1.043_226_342_762_334e-2,
            epsilon = 1e-15
        );
        let n = nk_sign(3, 9.0, 1.0).unwrap();
        assert!((n / 1.438_759_506_393_160_3e-6 - 1.0).abs() < 1e-9);
        assert!(nk_sign(0, 1.0, 1.0).is_err());
    }

    #[test]
    fn lemma2_examples() {
        let spec = CantorSpec::new(2.5, 3).unwrap();
        let zero = lemma2_check(&spec, 0).unwrap();
        assert_eq!(zero.lhs_b, 0.0);
        assert_abs_diff_eq!(zero.lhs_a, zero.rhs, epsilon = 1e-15);

        let c = lemma2_check(&CantorSpec::new(5.0, 3).unwrap(), 2).unwrap();
        assert!(c.holds(0.0));

        let c = lemma2_check(&CantorSpec::new(1.0, 0).unwrap(), 3).unwrap();
        assert_eq!(c.lhs_a, 0.0);
        assert_abs_diff_eq!(c.lhs_b, 0.018_988_156_876_153_809, epsilon = 1e-15);
        assert_abs_diff_eq!(c.rhs, 0.213_761_768_415_522_33, epsilon = 1e-15);
        assert!(lemma2_check(&CantorSpec::new(1.0, 17).unwrap(), 1).is_err());
    }

    #[test]
    fn ratio_stats_envelope() {
        let grid = vec![0.5, 1.0, 4.0];
        let norms: Vec<f64> = grid
            .iter()
            .map(|&x| lambda0_closed(x, 2).unwrap())
            .collect();
        let stats = RatioStats::new(2, grid, &norms).unwrap();
        assert!(stats.min <= stats.max && stats.min > 0.0);
        assert!(RatioStats::new(2, vec![1.0], &[]).is_err());
        let json = serde_json::to_value(&stats).unwrap();
        assert_eq!(json["ratios"].as_array().unwrap().len(), 3);
    }
}
