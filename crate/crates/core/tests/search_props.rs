use num_traits::Signed;
use proptest::prelude::*;

use thickset::constructions::{random_thick_family, GapPlacement, RandomThickSpec};
use thickset::family::StageFamily;
use thickset::functions::{self, FunctionSpec};
use thickset::gaplemma::DEFAULT_BUDGET;
use thickset::rational::{self, int, pow2, rat, Rational};
use thickset::search::{self, MonotoneMap, SearchConfig, SearchReport};
use thickset::stage::{self, ClosedInterval};
use thickset::Error;

fn random_family(tau: Rational, depth: usize, seed: u64) -> StageFamily {
    StageFamily::from_stages(random_thick_family(&RandomThickSpec::new(tau, depth, seed)).unwrap()).unwrap()
}

/// Family-independent witness checks plus replay.
fn assert_witness(rep: &SearchReport, fam: &StageFamily) {
    let w = &rep.witness;
    assert!(w.t.lo().is_positive());
    for c in w.verify(&rep.f) {
        assert!(c.holds, "{}: {}", c.name, c.detail);
    }
    assert!(w.replay(fam).unwrap());
    // x + f(t) is within the enclosure widths of x + f(t_lo) .. x + f(t_hi)
    let lo = functions::eval(&rep.f, w.t.lo());
    let hi = functions::eval(&rep.f, w.t.hi());
    let image = ClosedInterval::spanning(lo, hi);
    assert!(image.intersects(&w.ft), "f(t) in {image}, ft = {}", w.ft);
}

fn mvt_instance() -> impl Strategy<Value = (Rational, Rational, Rational, Rational, Rational, Rational)> {
    // tau, a, c, b, and g'(0), g'(c) both inside (1/tau, 1 + 1/tau)
    (1i64..40, 1i64..20, 0i64..20, 0i64..20, 1i64..16, 1i64..16).prop_map(|(tn, an, cx, bx, s0, s1)| {
        let tau = int(1) + rat(tn, 10);
        let a = rat(an, 7);
        let c = &tau * &a + rat(cx, 5);
        let b = &a + rational::max(&c, &(&tau * &a)) + rat(bx, 3);
        let m0 = tau.recip() + rat(s0, 16);
        let m1 = tau.recip() + rat(s1, 16);
        (tau, a, b, c, m0, m1)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn mvt_lower_bound_holds((tau, a, b, c, m0, m1) in mvt_instance()) {
        // g(t) = m0 t + q t^2 has g' running linearly from m0 to m1 on [0, c]
        let q = (&m1 - &m0) / (int(2) * &c);
        let g = FunctionSpec::new(vec![m0.clone(), q]).unwrap();
        let gc = functions::eval(&g, &c);
        let rep = search::verify_mvt_bounds(&a, &b, &c, &tau, &MonotoneMap::Forward(g)).unwrap();
        prop_assert!(rep.preconditions.iter().all(|p| p.holds));
        prop_assert!(rep.derivative_hypothesis.holds);
        prop_assert!(a < gc && rep.lower.holds && rep.positive.holds);
        prop_assert_eq!(rep.upper.holds, gc < b);
        // the upper bound is only guaranteed once (1 + 1/tau) c <= b
        if (int(1) + tau.recip()) * &c <= b {
            prop_assert!(rep.holds);
        }
    }

    #[test]
    fn mvt_bounds_hold_for_inverses((tau, a, b, c, m0, m1) in mvt_instance()) {
        // f' in (tau/(tau+1), tau) on the bracket makes (f^-1)' lie in the window
        let one = int(1);
        let flo = &tau / (&tau + &one);
        let fspan = &tau - &flo;
        let (d0, d1) = (&flo + &fspan * (&m0 - tau.recip()), &flo + &fspan * (&m1 - tau.recip()));
        let reach = &c * int(4);
        let f = FunctionSpec::new(vec![d0.clone(), (&d1 - &d0) / (int(2) * &reach)]).unwrap();
        let bracket = ClosedInterval::new(int(0), reach).unwrap();
        // f increasing: a < f^-1(c) < b iff f(a) < c < f(b)
        let expect_upper = c < functions::eval(&f, &b);
        prop_assert!(functions::eval(&f, &a) < c);
        let g = MonotoneMap::Inverse { f, bracket, precision: pow2(-50) };
        let rep = search::verify_mvt_bounds(&a, &b, &c, &tau, &g).unwrap();
        prop_assert!(rep.lower.holds && rep.derivative_hypothesis.holds);
        // the enclosure may straddle b only within the inverse precision
        if expect_upper && &b - &rep.g_c.hi > pow2(-50) {
            prop_assert!(rep.upper.holds);
        }
        if !expect_upper {
            prop_assert!(!rep.upper.holds);
        }
    }
}

#[test]
fn mvt_upper_bound_fails_for_long_bridges() {
    // every stated hypothesis holds: b - a = c >= tau a, g' = 7/5 in (2/3, 5/3),
    // yet g(c) = 14 > b = 11
    let tau = rat(3, 2);
    let (a, b, c) = (int(1), int(11), int(10));
    let r = search::verify_mvt_bounds(&a, &b, &c, &tau, &MonotoneMap::Forward(FunctionSpec::linear(rat(7, 5)))).unwrap();
    assert!(r.preconditions.iter().all(|p| p.holds));
    assert!(r.derivative_hypothesis.holds && r.lower.holds);
    assert!(!r.upper.holds && !r.holds);
}

#[test]
fn mvt_violations_are_flagged() {
    let tau = rat(3, 2);
    let (a, c) = (int(1), rat(3, 2));
    let b = &a + &c;
    let slow = MonotoneMap::Forward(FunctionSpec::linear(tau.recip() / int(2)));
    let r = search::verify_mvt_bounds(&a, &b, &c, &tau, &slow).unwrap();
    assert!(!r.holds && !r.lower.holds && !r.derivative_hypothesis.holds);
    let fast = MonotoneMap::Forward(FunctionSpec::linear(int(1) + int(2) / &tau));
    let r = search::verify_mvt_bounds(&a, &b, &c, &tau, &fast).unwrap();
    assert!(!r.holds && !r.upper.holds && r.lower.holds);
    // precondition tau a <= c broken
    let r = search::verify_mvt_bounds(&int(2), &int(10), &int(2), &tau, &MonotoneMap::Forward(FunctionSpec::identity()))
        .unwrap();
    assert!(!r.holds && r.preconditions.iter().any(|p| !p.holds));
}

#[test]
fn extraction_below_shrinking_deltas() {
    let fams = [
        StageFamily::middle_alpha(&rat(1, 3)).unwrap(),
        StageFamily::middle_alpha(&rat(1, 5)).unwrap(),
        random_family(rat(3, 2), 14, 5),
    ];
    for fam in &fams {
        let hull = fam.hull().unwrap().length();
        for k in 1..=5 {
            let delta = &hull / int(3i64.pow(k));
            let ext = search::subset_extract(fam, &delta, 24).unwrap();
            let s = ext.family.stage(ext.check_depth).unwrap();
            assert!(s.hull().length() < delta, "k = {k}: hull {} >= {delta}", s.hull());
            assert!(ext.bridge.length() < delta);
            let base = fam.stage_thickness(ext.check_depth).unwrap().unwrap();
            if let Some(t) = &ext.thickness {
                assert!(t >= &base, "k = {k}: {t} < {base}");
            }
        }
    }
}

#[test]
fn extraction_matches_thirds_example() {
    let fam = StageFamily::middle_alpha(&rat(1, 3)).unwrap();
    let ext = search::subset_extract(&fam, &rat(1, 10), 12).unwrap();
    assert!(ext.bridge.length() <= rat(1, 27));
    assert_eq!(ext.thickness, Some(int(1)));
}

#[test]
fn three_ap_midpoint_is_a_gap_endpoint() {
    let fams = [
        StageFamily::middle_alpha(&rat(1, 3)).unwrap(),
        StageFamily::middle_alpha(&rat(1, 5)).unwrap(),
        random_family(int(1), 10, 11),
        random_family(int(2), 10, 12),
        random_family(rat(3, 2), 10, 13),
    ];
    for fam in &fams {
        let rep = search::find_3ap(fam, 12, DEFAULT_BUDGET).unwrap();
        assert_witness(&rep, fam);
        let w = &rep.witness;
        let (lo, hi) = (rep.frame.gap.lo.as_ref().unwrap(), rep.frame.gap.hi.as_ref().unwrap());
        assert!(&w.x == lo || &w.x == hi);
        assert!(stage::gaps(&fam.stage(w.depth).unwrap()).iter().any(|g| g.lo.as_ref() == Some(&w.x) || g.hi.as_ref() == Some(&w.x)));
    }
}

#[test]
fn single_interval_has_no_three_ap() {
    let fam = StageFamily::single(thickset::CantorStage::unit(ClosedInterval::new(int(0), int(1)).unwrap()));
    assert!(matches!(search::find_3ap(&fam, 4, DEFAULT_BUDGET), Err(Error::Hypothesis(_))));
}

#[test]
fn linear_witnesses_split_in_ratio() {
    let fam = StageFamily::middle_alpha(&rat(1, 5)).unwrap();
    let cfg = SearchConfig { max_depth: 16, ..SearchConfig::default() };
    for m in [rat(3, 4), int(1), rat(5, 4), rat(7, 5)] {
        let f = FunctionSpec::linear(m.clone());
        let rep = search::find_config(&fam, &f, &cfg).unwrap();
        assert_witness(&rep, &fam);
        let w = &rep.witness;
        let one = int(1);
        for t in [w.t.lo(), w.t.hi()] {
            let left = &w.x - t;
            let right = &w.x + &m * t;
            assert_eq!(&m / (&m + &one) * left + (&one / (&m + &one)) * right, w.x);
        }
        // ft encloses m t for some t in the t enclosure
        assert!(w.t.affine(&m, &int(0)).intersects(&w.ft));
    }
}

#[test]
fn window_boundaries_are_strict() {
    // tau = 2: window (2/3, 3/2)
    let fam = StageFamily::middle_alpha(&rat(1, 5)).unwrap();
    let cfg = SearchConfig { max_depth: 14, ..SearchConfig::default() };
    for m in [rat(2, 3), rat(3, 2), rat(1, 2), int(2), int(-1)] {
        let err = search::find_config(&fam, &FunctionSpec::linear(m.clone()), &cfg).unwrap_err();
        assert!(matches!(err, Error::Hypothesis(_)), "slope {m}: {err}");
    }
    for m in [rat(2, 3) + rat(1, 100), rat(3, 2) - rat(1, 100)] {
        let rep = search::find_config(&fam, &FunctionSpec::linear(m.clone()), &cfg).unwrap();
        assert_witness(&rep, &fam);
    }
}

#[test]
fn square_is_rejected_everywhere() {
    let sq = FunctionSpec::parse("0,1").unwrap();
    let fams = [
        StageFamily::middle_alpha(&rat(1, 5)).unwrap(),
        StageFamily::middle_alpha(&rat(1, 7)).unwrap(),
        random_family(rat(3, 2), 8, 1),
    ];
    for fam in &fams {
        let err = search::find_config(fam, &sq, &SearchConfig::default()).unwrap_err();
        assert!(matches!(err, Error::Hypothesis(_)), "{err}");
    }
}

#[test]
fn nonlinear_searches_on_random_sets() {
    let cfg = SearchConfig { max_depth: 12, ..SearchConfig::default() };
    let spec = |seed| RandomThickSpec { target_tau: int(2), depth: 12, seed, gap_placement: GapPlacement::Uniform };
    let mut reflected = Vec::new();
    for seed in [3, 4] {
        let fam = StageFamily::from_stages(random_thick_family(&spec(seed)).unwrap()).unwrap();
        for f in ["1,1/10", "4/5,-1/3"] {
            let f = FunctionSpec::parse(f).unwrap();
            let rep = search::find_config(&fam, &f, &cfg).unwrap();
            assert_witness(&rep, &fam);
            assert!(rep.image_checks.iter().all(|c| c.holds));
            reflected.push(rep.reflected);
        }
    }
    eprintln!("reflected: {reflected:?}");
}
