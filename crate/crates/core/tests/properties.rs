use std::f64::consts::PI;

use daubloc::spectrum::{self, Method};
use daubloc::{cantor_function, fk_head, fk_integral, fk_tail, CantorSpec, IntervalUnion, Side};
use proptest::prelude::*;

fn pairs() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((0.0f64..30.0, 1e-3f64..5.0), 1..6)
        .prop_map(|v| v.into_iter().map(|(a, w)| (a, a + w)).collect())
}

fn canonical(u: &IntervalUnion) -> bool {
    let iv = u.intervals();
    iv.iter().all(|&(a, b)| a >= 0.0 && a < b) && iv.windows(2).all(|w| w[0].1 < w[1].0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn union_is_canonical_and_subadditive(p in pairs()) {
        let u = IntervalUnion::new(&p).unwrap();
        prop_assert!(canonical(&u));
        let total: f64 = p.iter().map(|&(a, b)| b - a).sum();
        prop_assert!(u.measure() <= total * (1.0 + 1e-15));
    }

    #[test]
    fn shift_and_scale_transport_measure(p in pairs(), c in 0.0f64..50.0, t in 0.01f64..20.0) {
        let u = IntervalUnion::new(&p).unwrap();
        let shifted = u.shift(c).unwrap();
        let scaled = u.scale(t).unwrap();
        prop_assert!(canonical(&shifted) && canonical(&scaled));
        prop_assert!((shifted.measure() - u.measure()).abs() <= 1e-12 * (1.0 + c));
        prop_assert!((scaled.measure() - t * u.measure()).abs() <= 1e-12 * t * u.measure());
    }

    #[test]
    fn halflines_split_the_measure(p in pairs(), c in 0.0f64..40.0) {
        let u = IntervalUnion::new(&p).unwrap();
        let left = u.intersect_halfline(c, Side::Left);
        let right = u.intersect_halfline(c, Side::Right);
        prop_assert!((left.measure() + right.measure() - u.measure()).abs() <= 1e-12);
    }

    #[test]
    fn reflection_preserves_measure(p in pairs()) {
        let u = IntervalUnion::new(&p).unwrap();
        let r = u.reflect_about(u.sup()).unwrap();
        prop_assert!(canonical(&r));
        prop_assert!((r.measure() - u.measure()).abs() <= 1e-12);
    }

    #[test]
    fn integral_is_a_probability(k in 0u64..500, a in 0.0f64..800.0, w in 0.0f64..400.0) {
        let v = fk_integral(k, a, a + w).unwrap();
        prop_assert!((0.0..=1.0).contains(&v));
        let complement = fk_head(k, a).unwrap() + fk_tail(k, a).unwrap();
        prop_assert!((complement - 1.0).abs() <= 1e-13);
    }

    #[test]
    fn cantor_function_is_monotone(n in 0u32..14, x in -1.0f64..8.0, dx in 0.0f64..3.0) {
        let (l, y) = (7.3, x + dx);
        prop_assert!(cantor_function(l, n, x).unwrap() <= cantor_function(l, n, y).unwrap());
    }

    #[test]
    fn sweep_matches_direct(p in pairs()) {
        let e = IntervalUnion::new(&p).unwrap();
        let sweep = spectrum::spectrum_with(&e, None, Method::Sweep).unwrap();
        let direct = spectrum::spectrum_with(&e, None, Method::Direct).unwrap();
        for (s, d) in sweep.lambdas.iter().zip(&direct.lambdas) {
            prop_assert!((s - d).abs() <= 1e-12);
        }
    }

    #[test]
    fn eigenvalues_dominated_by_disk(p in pairs(), k in 0u64..120) {
        let e = IntervalUnion::new(&p).unwrap();
        let bound = -(-PI * e.measure()).exp_m1();
        prop_assert!(spectrum::eigenvalue(&e, k).unwrap() <= bound + 1e-12);
    }

    #[test]
    fn cantor_norm_below_twice_lambda0(n in 0u32..8, x in 1e-3f64..1.0) {
        let top = 3f64.powi(n as i32) / 2.0;
        let x = x * top;
        let set = CantorSpec::new(x / PI, n).unwrap().expand().unwrap();
        let norm = spectrum::operator_norm(&set).unwrap();
        let lambda0 = daubloc::cantor::lambda0_closed(x, n).unwrap();
        prop_assert!(norm.value <= 2.0 * lambda0 + 1e-10);
    }
}
