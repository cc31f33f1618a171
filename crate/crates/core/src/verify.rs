//! Seeded property suites over the proved inequalities and the internal
//! consistency of the numerics. Each suite counts the checks it performs and
//! collects every violation as a readable line.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::cantor::{self, cantor_profile};
use crate::error::{Error, Result};
use crate::gamma::{fk, fk_head, fk_integral, fk_tail};
use crate::quadrature::integrate_fk;
use crate::sets::{cantor_expand, cantor_function, CantorSpec, IntervalUnion, Side};
use crate::spectrum::{
    self, comb_eigenvalue, comb_norm, eigenvalue, operator_norm, trace_check, CombSpec,
};

/// Samples for the oracle comparison, shared with the acceptance tests.
pub const ORACLE_CASES: usize = 500;
pub const ORACLE_TOLERANCE: f64 = 1e-10;
/// Violations kept per property; the count is always exact.
const MAX_REPORTED: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Gamma,
    Sets,
    Spectrum,
    Cantor,
}

impl Suite {
    pub const ALL: [Suite; 4] = [Suite::Gamma, Suite::Sets, Suite::Spectrum, Suite::Cantor];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Gamma => "gamma",
            Suite::Sets => "sets",
            Suite::Spectrum => "spectrum",
            Suite::Cantor => "cantor",
        }
    }

    pub fn run(self) -> Result<SuiteReport> {
        let mut v = Verifier::new(self.name());
        match self {
            Suite::Gamma => gamma_suite(&mut v)?,
            Suite::Sets => sets_suite(&mut v)?,
            Suite::Spectrum => spectrum_suite(&mut v)?,
            Suite::Cantor => cantor_suite(&mut v)?,
        }
        Ok(v.finish())
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|suite| suite.name() == s)
            .ok_or_else(|| Error::Validation(format!("unknown suite `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertyCount {
    pub property: &'static str,
    pub checks: usize,
    pub violations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: &'static str,
    pub checks: usize,
    pub properties: Vec<PropertyCount>,
    pub violations: Vec<String>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.properties.iter().all(|p| p.violations == 0)
    }

    pub fn violation_count(&self) -> usize {
        self.properties.iter().map(|p| p.violations).sum()
    }
}

struct Verifier {
    suite: &'static str,
    properties: Vec<PropertyCount>,
    violations: Vec<String>,
}

impl Verifier {
    fn new(suite: &'static str) -> Self {
        Self {
            suite,
            properties: Vec::new(),
            violations: Vec::new(),
        }
    }

    fn property(&mut self, name: &'static str) {
        self.properties.push(PropertyCount {
            property: name,
            checks: 0,
            violations: 0,
        });
    }

    /// Records one check of the current property; `detail` is only built on
    /// failure.
    fn check(&mut self, ok: bool, detail: impl FnOnce() -> String) {
        let current = self
            .properties
            .last_mut()
            .expect("property() before check()");
        current.checks += 1;
        if !ok {
            current.violations += 1;
            if current.violations <= MAX_REPORTED {
                self.violations
                    .push(format!("{}: {}", current.property, detail()));
            }
        }
    }

    fn finish(self) -> SuiteReport {
        SuiteReport {
            suite: self.suite,
            checks: self.properties.iter().map(|p| p.checks).sum(),
            properties: self.properties,
            violations: self.violations,
        }
    }
}

fn rng(stream: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(0x6461_7562_6c6f_6300 ^ stream)
}

/// Random union of 1..=`max_pieces` intervals inside `[0, extent]`.
fn random_union(rng: &mut ChaCha8Rng, max_pieces: usize, extent: f64) -> Result<IntervalUnion> {
    let pieces = rng.gen_range(1..=max_pieces);
    let pairs: Vec<(f64, f64)> = (0..pieces)
        .map(|_| {
            let a = rng.gen_range(0.0..extent);
            let b = (a + rng.gen_range(1e-3..extent / 4.0)).min(extent);
            (a, b)
        })
        .collect();
    IntervalUnion::new(&pairs)
}

// ---------------------------------------------------------------- gamma

/// One oracle comparison case `(k, a, b)`.
pub fn oracle_cases(count: usize, seed: u64) -> Vec<(u64, f64, f64)> {
    let mut rng = rng(seed);
    (0..count)
        .map(|_| {
            let k = rng.gen_range(0..=300);
            let x = rng.gen_range(0.0..=1000.0);
            let y = rng.gen_range(0.0..=1000.0);
            (k, f64::min(x, y), f64::max(x, y))
        })
        .collect()
}

/// `|fk_integral - oracle|` for one case.
pub fn oracle_difference(k: u64, a: f64, b: f64) -> Result<f64> {
    let oracle = integrate_fk(k, a, b, 1e-13)?;
    Ok((fk_integral(k, a, b)? - oracle.value).abs())
}

fn gamma_suite(v: &mut Verifier) -> Result<()> {
    v.property("reflection f_k(k-r) <= f_k(k+r)");
    let mut r = rng(1);
    for k in 1..=200u64 {
        let kf = k as f64;
        for _ in 0..200 {
            let d = r.gen_range(0.0..=kf);
            let (left, right) = (fk(k, kf - d)?, fk(k, kf + d)?);
            v.check(left <= right + 1e-15, || {
                format!("k={k} r={d}: {left:e} > {right:e}")
            });
        }
    }

    v.property("partition of fk_integral");
    let mut r = rng(2);
    for _ in 0..500 {
        let k = r.gen_range(0..=2000u64);
        let mut p = [
            r.gen_range(0.0..=1e4),
            r.gen_range(0.0..=1e4),
            r.gen_range(0.0..=1e4),
        ];
        p.sort_by(f64::total_cmp);
        let [a, b, c] = p;
        let sum = fk_integral(k, a, b)? + fk_integral(k, b, c)?;
        let whole = fk_integral(k, a, c)?;
        v.check((sum - whole).abs() <= 1e-12, || {
            format!("k={k} a={a} b={b} c={c}: {sum:e} vs {whole:e}")
        });
    }

    v.property("head + tail = 1");
    let mut r = rng(3);
    for _ in 0..500 {
        let k = r.gen_range(0..=10_000u64);
        let b = r.gen_range(0.0..=2.0 * k as f64 + 100.0);
        let total = fk_head(k, b)? + fk_tail(k, b)?;
        v.check((total - 1.0).abs() <= 1e-13, || {
            format!("k={k} b={b}: {total:e}")
        });
    }

    v.property("normalization sum_k f_k(r) = 1");
    for r0 in [0.5f64, 5.0, 50.0, 500.0] {
        let kmax = (r0 + 60.0 * (r0 + 1.0).sqrt()).ceil() as u64;
        let terms = (0..=kmax).map(|k| fk(k, r0)).collect::<Result<Vec<_>>>()?;
        let total = spectrum::neumaier_sum(&terms);
        v.check((total - 1.0).abs() <= 1e-10, || {
            format!("r={r0} K={kmax}: {total:e}")
        });
    }

    v.property("oracle equivalence");
    for (k, a, b) in oracle_cases(ORACLE_CASES, 4) {
        let diff = oracle_difference(k, a, b)?;
        v.check(diff <= ORACLE_TOLERANCE, || {
            format!("k={k} [{a}, {b}]: |diff| = {diff:e}")
        });
    }
    Ok(())
}

// ---------------------------------------------------------------- sets

fn sets_suite(v: &mut Verifier) -> Result<()> {
    let lengths = [1.0, PI, 7.3];

    v.property("cantor function subadditivity");
    let mut r = rng(10);
    for l in lengths {
        for n in 0..=12 {
            for _ in 0..500 {
                let a = r.gen_range(-l..=2.0 * l);
                let b = r.gen_range(-l..=2.0 * l);
                let sum = cantor_function(l, n, a + b)?;
                let parts = cantor_function(l, n, a)? + cantor_function(l, n, b)?;
                v.check(sum <= parts + 1e-12, || {
                    format!("L={l} n={n} a={a} b={b}: {sum} > {parts}")
                });
            }
        }
    }

    v.property("cantor function vs expanded measure");
    let mut r = rng(11);
    for l in lengths {
        for n in 0..=12 {
            let expanded = cantor_expand(&CantorSpec::new(l, n)?)?;
            let mass = l * (2.0f64 / 3.0).powi(n as i32);
            for _ in 0..40 {
                let x = r.gen_range(0.0..=l);
                let lhs = cantor_function(l, n, x)? * mass;
                let rhs = expanded.intersect_halfline(x, Side::Left).measure();
                v.check((lhs - rhs).abs() <= 1e-10, || {
                    format!("L={l} n={n} x={x}: {lhs} vs {rhs}")
                });
            }
        }
    }

    v.property("nesting measure(n+1) = 2/3 measure(n)");
    for l in lengths {
        let mut prev = cantor_expand(&CantorSpec::new(l, 0)?)?.measure();
        for n in 1..=16 {
            let cur = cantor_expand(&CantorSpec::new(l, n)?)?.measure();
            let expected = prev * 2.0 / 3.0;
            let ulps = 2f64.powi(n as i32) * f64::EPSILON * l;
            v.check((cur - expected).abs() <= ulps, || {
                format!("L={l} n={n}: {cur} vs {expected}")
            });
            prev = cur;
        }
    }

    v.property("set algebra stays canonical");
    let mut r = rng(12);
    for _ in 0..300 {
        let u = random_union(&mut r, 6, 20.0)?;
        let c = r.gen_range(0.0..=25.0);
        let outputs = [
            u.scale(r.gen_range(0.01..=10.0))?,
            u.shift(c)?,
            u.intersect_halfline(c, Side::Left),
            u.intersect_halfline(c, Side::Right),
            u.reflect_about(u.sup().max(c))?,
        ];
        for out in outputs {
            v.check(out.is_canonical(), || format!("{:?}", out.intervals()));
        }
    }
    Ok(())
}

// ---------------------------------------------------------------- spectrum

fn spectrum_suite(v: &mut Verifier) -> Result<()> {
    v.property("dominance lambda_k <= 1 - exp(-|pi E|)");
    let mut r = rng(20);
    for _ in 0..300 {
        let e = random_union(&mut r, 5, 50.0)?;
        let bound = -(-PI * e.measure()).exp_m1();
        let spec = spectrum::spectrum(&e, Some(100))?;
        for (k, &lambda) in spec.lambdas.iter().enumerate() {
            v.check(lambda <= bound + 1e-11, || {
                format!("k={k} {:?}: {lambda} > {bound}", e.intervals())
            });
        }
    }

    v.property("ring eigenvalues rise to m then fall");
    for m in 1..=50u32 {
        for step in 0..4 {
            let x = m as f64 + step as f64 / 4.0;
            let ring = IntervalUnion::new(&[(x / PI, (x + 1.0) / PI)])?;
            let lambdas = spectrum::spectrum(&ring, None)?.lambdas;
            let m = m as usize;
            for k in 0..lambdas.len() - 1 {
                let (a, b) = (lambdas[k], lambdas[k + 1]);
                if k < m {
                    v.check(b >= a - 1e-15, || format!("piR2={x} k={k}: {b} < {a}"));
                } else if k > m {
                    v.check(b <= a + 1e-15, || format!("piR2={x} k={k}: {b} > {a}"));
                }
            }
        }
    }

    v.property("translation lowers lambda_0");
    let mut r = rng(21);
    for _ in 0..100 {
        let e = random_union(&mut r, 4, 10.0)?;
        let c = r.gen_range(0.0..=5.0);
        let (moved, fixed) = (eigenvalue(&e.shift(c)?, 0)?, eigenvalue(&e, 0)?);
        v.check(moved <= fixed + 1e-15, || {
            format!("c={c} {:?}: {moved} > {fixed}", e.intervals())
        });
    }

    v.property("norm dominates recomputed eigenvalues");
    let mut r = rng(22);
    for _ in 0..50 {
        let e = random_union(&mut r, 4, 30.0)?;
        let norm = operator_norm(&e)?;
        for _ in 0..5 {
            let k = r.gen_range(0..=(norm.k_searched as u64 + 20));
            let lambda = spectrum::eigenvalue_oracle(&e, k)?;
            v.check(norm.value >= lambda - 1e-12, || {
                format!("k={k}: {lambda} > {}", norm.value)
            });
        }
    }

    v.property("comb bounds");
    for j in 1..=100 {
        let s = j as f64 / 100.0;
        let comb = CombSpec::new(s)?;
        let norm = comb_norm(&comb, 1e-12)?;
        let (lower, upper) = (comb.lower_bound(), comb.upper_bound());
        v.check(
            lower - 1e-9 <= norm.value && norm.value <= upper + 1e-9,
            || format!("s={s}: {} outside [{lower}, {upper}]", norm.value),
        );
        let lambda0 = comb_eigenvalue(&comb, 0, 1e-12)?;
        v.check((lambda0 - lower).abs() <= 1e-12, || {
            format!("s={s}: lambda_0 {lambda0} vs {lower}")
        });
    }

    v.property("trace converges to |pi E|");
    let mut sets = vec![
        (IntervalUnion::new(&[(0.0, 1.0 / PI)])?, Some(200)),
        (CantorSpec::new(5.0, 3)?.expand()?, None),
    ];
    let mut r = rng(23);
    for _ in 0..20 {
        sets.push((random_union(&mut r, 5, 40.0)?, None));
    }
    for (e, kmax) in sets {
        let (partial, measure) = trace_check(&e, kmax)?;
        v.check(
            partial <= measure + 1e-12 && (partial - measure).abs() <= 1e-9,
            || format!("{:?}: {partial} vs {measure}", e.intervals()),
        );
    }
    Ok(())
}

// ---------------------------------------------------------------- cantor

fn cantor_suite(v: &mut Verifier) -> Result<()> {
    v.property("lambda_0 closed = recursive = direct");
    for n in 0..=14u32 {
        for x in [0.1, 1.0, 3.0, 3f64.powi(n as i32) / 2.0] {
            let closed = cantor::lambda0_closed(x, n)?;
            let recursive = cantor::lambda0_recursive(x, n)?;
            let direct = eigenvalue(&cantor_profile(x, n)?, 0)?;
            v.check(
                (closed - recursive).abs() <= 1e-10 && (closed - direct).abs() <= 1e-10,
                || format!("n={n} x={x}: {closed} {recursive} {direct}"),
            );
        }
    }

    v.property("lemma 1 gap >= 0");
    let mut r = rng(30);
    for _ in 0..1000 {
        let k = r.gen_range(0..=50u64);
        let s = r.gen_range(k as f64..=k as f64 + 100.0);
        let three_l = r.gen_range(1e-6..=20.0);
        let gap = cantor::lemma1_gap(k, s, three_l)?;
        v.check(gap >= -1e-11, || {
            format!("k={k} s={s} 3L={three_l}: {gap:e}")
        });
    }

    v.property("N_k >= 0");
    let mut r = rng(31);
    for _ in 0..500 {
        let k = r.gen_range(1..=50u64);
        let s = r.gen_range(k as f64..=k as f64 + 100.0);
        let l = r.gen_range(1e-3..=20.0 / 3.0);
        let nk = cantor::nk_sign(k, s, l)?;
        let f = |x: f64| fk(k, x);
        let scale = (f(s + l)? + f(s + 2.0 * l)?) * fk_integral(k, s, s + 3.0 * l)?
            + (f(s)? + f(s + 3.0 * l)?) * fk_integral(k, s + l, s + 2.0 * l)?;
        v.check(nk >= -1e-12 * scale, || {
            format!("k={k} s={s} L={l}: {nk:e} (scale {scale:e})")
        });
    }

    v.property("lemma 2 (A) and (B)");
    let mut r = rng(32);
    for _ in 0..300 {
        let l = r.gen_range(0.01..=60.0);
        let n = r.gen_range(0..=10u32);
        let k = r.gen_range(0..=40u64);
        let check = cantor::lemma2_check(&CantorSpec::new(l, n)?, k)?;
        v.check(check.holds(1e-11), || {
            format!("L={l} n={n} k={k}: {check:?}")
        });
    }

    v.property("theorem 3 norm <= 2 lambda_0");
    for n in 0..=10u32 {
        for x in crate::experiments::cantor_grid(n, 8)? {
            let norm = operator_norm(&cantor_profile(x, n)?)?;
            let lambda0 = cantor::lambda0_closed(x, n)?;
            v.check(norm.value <= 2.0 * lambda0 + 1e-10, || {
                format!("n={n} x={x}: {} > 2 * {lambda0}", norm.value)
            });
        }
    }

    v.property("claim (i) bounded");
    let mut sup = 0.0f64;
    for i in 0..=1000 {
        let y = i as f64 / 1000.0;
        let sum = cantor::claim_i(y, 60)?;
        sup = sup.max(sum.value.abs());
        v.check(
            sum.value.is_finite() && sum.tail_estimate.is_finite(),
            || format!("y={y}: {sum:?}"),
        );
    }
    v.check(sup < 1.0, || format!("sup |partial sum| = {sup}"));

    v.property("claim (ii) bounded");
    let mut sup = 0.0f64;
    for n in 0..=40u32 {
        let top = 3f64.powi(n as i32);
        let mut grid = vec![0.0];
        grid.extend(crate::experiments::Grid::log(1e-3f64.min(top), top, 60).points()?);
        for x in grid {
            let value = cantor::claim_ii(x, n)?;
            sup = sup.max(value.abs());
            v.check(value.is_finite(), || format!("n={n} x={x}: {value}"));
        }
    }
    v.check(sup < 10.0, || format!("sup |claim (ii)| = {sup}"));

    v.property("shifted iterate mass <= lambda_0");
    let mut r = rng(33);
    for _ in 0..200 {
        let n = r.gen_range(0..=10u32);
        let x = r.gen_range(1e-3..=50.0);
        let s = r.gen_range(0.0..=50.0);
        let k = r.gen_range(0..=40u64);
        let mass = cantor::shifted_iterate_mass(x, n, s, k)?;
        let lambda0 = cantor::lambda0_closed(x, n)?;
        v.check(mass <= lambda0 + 1e-10, || {
            format!("x={x} n={n} s={s} k={k}: {mass} > {lambda0}")
        });
    }
    Ok(())
}

/// Runs the suites in order.
pub fn run(suites: &[Suite]) -> Result<Vec<SuiteReport>> {
    suites.iter().map(|s| s.run()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names_round_trip() {
        for suite in Suite::ALL {
            assert_eq!(suite.name().parse::<Suite>().unwrap(), suite);
        }
        assert!("all".parse::<Suite>().is_err());
    }

    #[test]
    fn oracle_cases_are_seeded() {
        assert_eq!(oracle_cases(5, 4), oracle_cases(5, 4));
        for (k, a, b) in oracle_cases(100, 4) {
            assert!(k <= 300 && 0.0 <= a && a <= b && b <= 1000.0);
        }
    }

    #[test]
    fn verifier_counts_and_caps() {
        let mut v = Verifier::new("t");
        v.property("p");
        for i in 0..30 {
            v.check(i % 2 == 0, || format!("{i}"));
        }
        let report = v.finish();
        assert_eq!(report.checks, 30);
        assert_eq!(report.violation_count(), 15);
        assert_eq!(report.violations.len(), 15);
        assert!(!report.passed());
    }
}
