//! Reproducible sweeps over the three families of sets: thin rings, the
//! equidistant comb and Cantor iterates. Each produces a report that
//! serializes to JSON and to a fixed-header CSV.

use rayon::prelude::*;
use serde::Serialize;

use crate::cantor::{self, cantor_profile};
use crate::error::{domain, Result};
use crate::gamma;
use crate::io::{fmt17, opt17, write_csv, Sig17};
use crate::sets::make_union;
use crate::spectrum::{self, operator_norm, CombSpec, COMB_CONSTANT};

/// Grid generated from `(min, max, count)`, never from an RNG.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub min: f64,
    pub max: f64,
    pub count: usize,
    pub spacing: Spacing,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Spacing {
    Linear,
    Log,
}

impl Grid {
    pub fn linear(min: f64, max: f64, count: usize) -> Self {
        Self {
            min,
            max,
            count,
            spacing: Spacing::Linear,
        }
    }

    pub fn log(min: f64, max: f64, count: usize) -> Self {
        Self {
            min,
            max,
            count,
            spacing: Spacing::Log,
        }
    }

    pub fn points(&self) -> Result<Vec<f64>> {
        let ok =
            self.min.is_finite() && self.max.is_finite() && self.min <= self.max && self.count > 0;
        if !ok || (self.spacing == Spacing::Log && self.min <= 0.0) {
            return Err(domain(format!("invalid grid {self:?}")));
        }
        if self.count == 1 {
            return Ok(vec![self.min]);
        }
        let last = (self.count - 1) as f64;
        let points = (0..self.count).map(|i| {
            let t = i as f64 / last;
            match self.spacing {
                Spacing::Linear => self.min + t * (self.max - self.min),
                Spacing::Log => {
                    let (lo, hi) = (self.min.log10(), self.max.log10());
                    10f64.powf(lo + t * (hi - lo))
                }
            }
        });
        let mut points: Vec<f64> = points.collect();
        // Pin the endpoints exactly.
        points[0] = self.min;
        *points.last_mut().expect("count > 1") = self.max;
        Ok(points)
    }
}

// ---------------------------------------------------------------- ring

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RingRow {
    pub pi_r2: f64,
    pub norm: f64,
    pub argmax_k: usize,
    /// `f_{n+1}(n)` with `n = floor(πR²)`.
    pub stirling_lower: f64,
    /// `f_n(n)`.
    pub stirling_upper: f64,
    /// `π √2 R · norm - 1`.
    pub asym_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RingReport {
    pub rows: Vec<RingRow>,
    /// Grid values below 1, which were not evaluated.
    pub skipped: Vec<f64>,
}

pub const RING_HEADER: [&str; 6] = [
    "piR2",
    "norm",
    "argmax_k",
    "stirling_lower",
    "stirling_upper",
    "asym_residual",
];

/// Norm of the unit-area ring `[R², R² + 1/π]` at each `πR² >= 1`.
pub fn run_ring(grid: &[f64]) -> Result<RingReport> {
    let (kept, skipped): (Vec<f64>, Vec<f64>) = grid.iter().partition(|&&x| x >= 1.0);
    let rows = kept
        .par_iter()
        .map(|&x| ring_row(x))
        .collect::<Result<Vec<_>>>()?;
    let mut rows = rows;
    rows.sort_by(|a, b| a.pi_r2.total_cmp(&b.pi_r2));
    Ok(RingReport { rows, skipped })
}

fn ring_row(x: f64) -> Result<RingRow> {
    // Built directly as π·E = [πR², πR² + 1] so the unit width is exact.
    let norm = spectrum::operator_norm_scaled(&make_union(&[(x, x + 1.0)])?)?;
    let n = x.floor() as u64;
    let nf = n as f64;
    Ok(RingRow {
        pi_r2: x,
        norm: norm.value,
        argmax_k: norm.argmax_k,
        stirling_lower: gamma::fk(n + 1, nf)?,
        stirling_upper: gamma::fk(n, nf)?,
        asym_residual: (2.0 * std::f64::consts::PI * x).sqrt() * norm.value - 1.0,
    })
}

impl RingReport {
    pub fn to_csv(&self) -> String {
        write_csv(
            &RING_HEADER,
            self.rows.iter().map(|r| {
                vec![
                    fmt17(r.pi_r2),
                    fmt17(r.norm),
                    r.argmax_k.to_string(),
                    fmt17(r.stirling_lower),
                    fmt17(r.stirling_upper),
                    fmt17(r.asym_residual),
                ]
            }),
        )
    }
}

impl Serialize for RingReport {
    fn serialize<S: serde::Serializer>(
        &self,
        serializer: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Row {
            #[serde(rename = "piR2")]
            pi_r2: Sig17,
            norm: Sig17,
            argmax_k: usize,
            stirling_lower: Sig17,
            stirling_upper: Sig17,
            asym_residual: Sig17,
        }
        #[derive(Serialize)]
        struct Repr {
            rows: Vec<Row>,
            skipped: Vec<Sig17>,
        }
        Repr {
            rows: self
                .rows
                .iter()
                .map(|r| Row {
                    pi_r2: Sig17(r.pi_r2),
                    norm: Sig17(r.norm),
                    argmax_k: r.argmax_k,
                    stirling_lower: Sig17(r.stirling_lower),
                    stirling_upper: Sig17(r.stirling_upper),
                    asym_residual: Sig17(r.asym_residual),
                })
                .collect(),
            skipped: self.skipped.iter().copied().map(Sig17).collect(),
        }
        .serialize(serializer)
    }
}

// ---------------------------------------------------------------- comb

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CombRow {
    pub s: f64,
    pub lambda0: f64,
    pub norm: f64,
    pub lower: f64,
    pub upper: f64,
    pub argmax_k: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CombReport {
    pub rows: Vec<CombRow>,
    /// `sup { s : argmax_k = 0 }` located by bisection, capped at 1.
    pub s0_estimate: f64,
    /// `1 + 4 e^{-2} < C`.
    pub constant_check: bool,
}

pub const COMB_HEADER: [&str; 6] = ["s", "lambda0", "norm", "lower", "upper", "argmax_k"];

/// Resolution of the `s_0` bisection.
pub const S0_RESOLUTION: f64 = 1e-6;

pub fn run_comb(s_grid: &[f64], tol: f64) -> Result<CombReport> {
    let mut rows = s_grid
        .par_iter()
        .map(|&s| comb_row(s, tol))
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by(|a, b| a.s.total_cmp(&b.s));
    let s0_estimate = locate_s0(&rows, tol)?;
    Ok(CombReport {
        rows,
        s0_estimate,
        constant_check: 1.0 + 4.0 * (-2.0f64).exp() < COMB_CONSTANT,
    })
}

fn comb_row(s: f64, tol: f64) -> Result<CombRow> {
    let comb = CombSpec::new(s)?;
    let norm = spectrum::comb_norm(&comb, tol)?;
    Ok(CombRow {
        s,
        lambda0: spectrum::comb_eigenvalue(&comb, 0, tol)?,
        norm: norm.value,
        lower: comb.lower_bound(),
        upper: comb.upper_bound(),
        argmax_k: norm.argmax_k,
    })
}

fn argmax_is_zero(s: f64, tol: f64) -> Result<bool> {
    Ok(spectrum::comb_norm(&CombSpec::new(s)?, tol)?.argmax_k == 0)
}

/// Bisects between the last grid point with `argmax_k = 0` (counting from
/// small `s`) and the first one after it without; returns 1 when no such
/// change occurs up to `s = 1`.
fn locate_s0(rows: &[CombRow], tol: f64) -> Result<f64> {
    let positive: Vec<&CombRow> = rows.iter().filter(|r| r.s > 0.0).collect();
    let mut lo = match positive.first() {
        Some(r) if r.argmax_k == 0 => r.s,
        _ => S0_RESOLUTION,
    };
    if !argmax_is_zero(lo, tol)? {
        return Ok(0.0);
    }
    let mut hi = positive
        .iter()
        .find(|r| r.s > lo && r.argmax_k != 0)
        .map(|r| r.s);
    if let Some(first_bad) = hi {
        lo = positive
            .iter()
            .filter(|r| r.s < first_bad && r.argmax_k == 0)
            .map(|r| r.s)
            .fold(lo, f64::max);
    } else if !argmax_is_zero(1.0, tol)? {
        hi = Some(1.0);
    }
    let Some(mut hi) = hi else {
        return Ok(1.0);
    };
    while hi - lo > S0_RESOLUTION {
        let mid = 0.5 * (lo + hi);
        if argmax_is_zero(mid, tol)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

impl CombReport {
    pub fn to_csv(&self) -> String {
        write_csv(
            &COMB_HEADER,
            self.rows.iter().map(|r| {
                vec![
                    fmt17(r.s),
                    fmt17(r.lambda0),
                    fmt17(r.norm),
                    fmt17(r.lower),
                    fmt17(r.upper),
                    r.argmax_k.to_string(),
                ]
            }),
        )
    }
}

impl Serialize for CombReport {
    fn serialize<S: serde::Serializer>(
        &self,
        serializer: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Row {
            s: Sig17,
            lambda0: Sig17,
            norm: Sig17,
            lower: Sig17,
            upper: Sig17,
            argmax_k: usize,
        }
        #[derive(Serialize)]
        struct Repr {
            rows: Vec<Row>,
            s0_estimate: Sig17,
            constant_check: bool,
        }
        Repr {
            rows: self
                .rows
                .iter()
                .map(|r| Row {
                    s: Sig17(r.s),
                    lambda0: Sig17(r.lambda0),
                    norm: Sig17(r.norm),
                    lower: Sig17(r.lower),
                    upper: Sig17(r.upper),
                    argmax_k: r.argmax_k,
                })
                .collect(),
            s0_estimate: Sig17(self.s0_estimate),
            constant_check: self.constant_check,
        }
        .serialize(serializer)
    }
}

// ---------------------------------------------------------------- cantor

/// Smallest `x = πR²` in the per-iterate log grids.
pub const CANTOR_GRID_MIN: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CantorRow {
    pub n: u32,
    pub pi_r2: f64,
    pub lambda0: f64,
    pub norm: f64,
    /// Normalized norm; `None` outside `(0, 3^n/2]`.
    pub ratio_thm4: Option<f64>,
    /// `norm · (3/2)^{n/2}` on rows with `πR² = c·3^{n/2}`.
    pub fup_product: Option<f64>,
    pub argmax_k: usize,
    pub tail_bound: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Envelope {
    pub c1_emp: f64,
    pub c2_emp: f64,
}

impl Envelope {
    fn of(values: impl Iterator<Item = f64>) -> Option<Self> {
        let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
            (lo.min(v), hi.max(v))
        });
        (lo <= hi).then_some(Self {
            c1_emp: lo,
            c2_emp: hi,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CantorReport {
    pub rows: Vec<CantorRow>,
    /// Min/max of `ratio_thm4` over the sweep rows.
    pub envelope: Envelope,
    /// The same envelope with `λ_0` in place of the norm.
    pub lambda0_envelope: Envelope,
}

pub const CANTOR_HEADER: [&str; 6] = ["n", "piR2", "lambda0", "norm", "ratio_thm4", "fup_product"];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CantorSweep {
    pub n_max: u32,
    pub x_per_n: usize,
    /// Proportionality constant `c` of the rows `πR² = c·3^{n/2}`; no such
    /// rows when `None`.
    pub fup_constant: Option<f64>,
}

/// Per-iterate log grid of `x` in `[CANTOR_GRID_MIN, 3^n/2]`.
pub fn cantor_grid(n: u32, count: usize) -> Result<Vec<f64>> {
    let top = 3f64.powi(n as i32) / 2.0;
    Grid::log(CANTOR_GRID_MIN.min(top), top, count).points()
}

pub fn cantor_row(n: u32, x: f64) -> Result<CantorRow> {
    let set = cantor_profile(x, n)?;
    let norm = operator_norm(&set)?;
    let ratio = (x > 0.0 && x <= 3f64.powi(n as i32) / 2.0)
        .then(|| cantor::thm4_ratio(x, n, norm.value))
        .transpose()?;
    Ok(CantorRow {
        n,
        pi_r2: x,
        lambda0: cantor::lambda0_closed(x, n)?,
        norm: norm.value,
        ratio_thm4: ratio,
        fup_product: None,
        argmax_k: norm.argmax_k,
        tail_bound: norm.tail_bound,
    })
}

pub fn run_cantor(sweep: &CantorSweep) -> Result<CantorReport> {
    if sweep.n_max > cantor::MAX_ANALYSIS_ITERATE {
        return Err(crate::Error::Capacity(format!(
            "cantor sweeps expand at most {} iterates",
            cantor::MAX_ANALYSIS_ITERATE
        )));
    }
    let mut jobs: Vec<(u32, f64, bool)> = Vec::new();
    for n in 0..=sweep.n_max {
        jobs.extend(
            cantor_grid(n, sweep.x_per_n)?
                .into_iter()
                .map(|x| (n, x, false)),
        );
        if let Some(c) = sweep.fup_constant {
            jobs.push((n, c * 3f64.powf(n as f64 / 2.0), true));
        }
    }
    let rows = jobs
        .par_iter()
        .map(|&(n, x, fup)| {
            let mut row = cantor_row(n, x)?;
            if fup {
                row.fup_product = Some(row.norm * 1.5f64.powf(n as f64 / 2.0));
            }
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut rows = rows;
    rows.sort_by(|a, b| {
        (a.n, a.pi_r2, a.fup_product.is_some())
            .partial_cmp(&(b.n, b.pi_r2, b.fup_product.is_some()))
            .expect("finite")
    });
    let sweep_rows = || rows.iter().filter(|r| r.fup_product.is_none());
    let envelope = Envelope::of(sweep_rows().filter_map(|r| r.ratio_thm4))
        .ok_or_else(|| domain("empty cantor sweep"))?;
    let lambda0_envelope =
        Envelope::of(sweep_rows().filter_map(|r| cantor::thm4_ratio(r.pi_r2, r.n, r.lambda0).ok()))
            .ok_or_else(|| domain("empty cantor sweep"))?;
    Ok(CantorReport {
        rows,
        envelope,
        lambda0_envelope,
    })
}

impl CantorReport {
    pub fn to_csv(&self) -> String {
        write_csv(
            &CANTOR_HEADER,
            self.rows.iter().map(|r| {
                vec![
                    r.n.to_string(),
                    fmt17(r.pi_r2),
                    fmt17(r.lambda0),
                    fmt17(r.norm),
                    opt17(r.ratio_thm4),
                    opt17(r.fup_product),
                ]
            }),
        )
    }

    /// Envelope of the sweep rows with `n <= n_max`.
    pub fn envelope_up_to(&self, n_max: u32) -> Option<Envelope> {
        Envelope::of(
            self.rows
                .iter()
                .filter(|r| r.n <= n_max && r.fup_product.is_none())
                .filter_map(|r| r.ratio_thm4),
        )
    }
}

impl Serialize for CantorReport {
    fn serialize<S: serde::Serializer>(
        &self,
        serializer: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Row {
            n: u32,
            #[serde(rename = "piR2")]
            pi_r2: Sig17,
            lambda0: Sig17,
            norm: Sig17,
            ratio_thm4: Option<Sig17>,
            fup_product: Option<Sig17>,
        }
        #[derive(Serialize)]
        struct Env {
            c1_emp: Sig17,
            c2_emp: Sig17,
        }
        #[derive(Serialize)]
        struct Repr {
            rows: Vec<Row>,
            envelope: Env,
            lambda0_envelope: Env,
        }
        let env = |e: &Envelope| Env {
            c1_emp: Sig17(e.c1_emp),
            c2_emp: Sig17(e.c2_emp),
        };
        Repr {
            rows: self
                .rows
                .iter()
                .map(|r| Row {
                    n: r.n,
                    pi_r2: Sig17(r.pi_r2),
                    lambda0: Sig17(r.lambda0),
                    norm: Sig17(r.norm),
                    ratio_thm4: r.ratio_thm4.map(Sig17),
                    fup_product: r.fup_product.map(Sig17),
                })
                .collect(),
            envelope: env(&self.envelope),
            lambda0_envelope: env(&self.lambda0_envelope),
        }
        .serialize(serializer)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids() {
        assert_eq!(
            Grid::linear(0.0, 1.0, 3).points().unwrap(),
            vec![0.0, 0.5, 1.0]
        );
        let g = Grid::log(1e2, 1e6, 5).points().unwrap();
        assert_eq!(g[0], 1e2);
        assert_eq!(g[4], 1e6);
        assert!((g[2] / 1e4 - 1.0).abs() < 1e-14);
        assert!(Grid::log(0.0, 1.0, 3).points().is_err());
        assert!(Grid::linear(1.0, 0.0, 3).points().is_err());
    }

    #[test]
    fn ring_small_grid() {
        let report = run_ring(&[0.5, 4.0, 100.0]).unwrap();
        assert_eq!(report.skipped, vec![0.5]);
        assert_eq!(report.rows[0].argmax_k, 4);
        let r = report.rows[1];
        assert!(r.stirling_lower <= r.norm && r.norm <= r.stirling_upper);
        assert!(report
            .to_csv()
            .starts_with("piR2,norm,argmax_k,stirling_lower,stirling_upper,asym_residual\n"));
    }

    #[test]
    fn comb_small_grid() {
        let report = run_comb(&[0.05, 0.5, 1.0], 1e-12).unwrap();
        let small = report.rows[0];
        assert_eq!(small.argmax_k, 0);
        assert!((small.norm - (1.0 - (-0.05f64).exp()) * 1.581_976_706_869_326_4).abs() < 1e-12);
        let mid = report.rows[1];
        assert!(mid.norm >= 0.6224 && mid.norm <= 0.7910);
        assert!((report.rows[2].norm - 1.0).abs() < 1e-12);
        assert!(report.s0_estimate > 0.0);
        assert!(report.constant_check);
    }

    #[test]
    fn cantor_base_row() {
        let row = cantor_row(0, 0.5).unwrap();
        assert!((row.norm - (1.0 - (-0.5f64).exp())).abs() < 1e-15);
        assert!((row.ratio_thm4.unwrap() - 2f64.powf(cantor::CANTOR_DIMENSION)).abs() < 1e-14);
        let fup = cantor_row(0, 1.0).unwrap();
        assert_eq!(fup.argmax_k, 0);
        assert!(fup.ratio_thm4.is_none());
    }

    #[test]
    fn cantor_small_sweep() {
        let sweep = CantorSweep {
            n_max: 4,
            x_per_n: 8,
            fup_constant: Some(1.0),
        };
        let report = run_cantor(&sweep).unwrap();
        assert_eq!(report.rows.len(), 5 * 9);
        for r in &report.rows {
            assert!(r.norm <= 2.0 * r.lambda0 + 1e-10);
        }
        let fup: Vec<_> = report
            .rows
            .iter()
            .filter(|r| r.fup_product.is_some())
            .collect();
        assert_eq!(fup.len(), 5);
        assert!(report.envelope.c1_emp > 0.0 && report.envelope.c2_emp.is_finite());
        let csv = report.to_csv();
        assert_eq!(csv.lines().count(), 1 + 45);
    }
}
