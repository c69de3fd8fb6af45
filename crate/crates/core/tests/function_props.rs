use num_traits::{Signed, Zero};
use proptest::prelude::*;

use thickset::functions::{self, FunctionSpec};
use thickset::rational::{int, rat, Rational};
use thickset::stage::ClosedInterval;

fn coefficient() -> impl Strategy<Value = Rational> {
    (-12i64..12, 1i64..8).prop_map(|(n, d)| rat(n, d))
}

fn polys() -> impl Strategy<Value = FunctionSpec> {
    prop::collection::vec(coefficient(), 1..5)
        .prop_filter_map("zero polynomial", |c| FunctionSpec::new(c).ok())
}

fn iv(a: Rational, b: Rational) -> ClosedInterval {
    ClosedInterval::new(a, b).unwrap()
}

/// Bound on |f'''| over |t| <= r straight from the coefficients.
fn third_derivative_bound(f: &FunctionSpec, r: &Rational) -> Rational {
    let mut total = Rational::zero();
    for (i, c) in f.coefficients().iter().enumerate() {
        let k = i as i64 + 1; // c multiplies t^k
        if k >= 3 {
            let mut term = c.abs() * int(k * (k - 1) * (k - 2));
            for _ in 0..k - 3 {
                term *= r;
            }
            total += term;
        }
    }
    total
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn derivative_matches_central_differences(f in polys(), xn in -40i64..40, hk in 4u32..20) {
        let x = rat(xn, 16);
        let h = Rational::new(1.into(), (1i64 << hk).into());
        let fd = (functions::eval(&f, &(&x + &h)) - functions::eval(&f, &(&x - &h))) / (int(2) * &h);
        let exact = functions::derivative(&f).eval(&x);
        // central difference error is at most h^2/6 max |f'''| near x
        let bound = &h * &h / int(6) * third_derivative_bound(&f, &(x.abs() + &h));
        prop_assert!((fd - &exact).abs() <= bound);
    }
}

proptest! {
    #[test]
    fn inverse_round_trip(
        c1 in 1i64..6,
        c2 in -4i64..=4,
        c3 in -4i64..=4,
        t0n in 0i64..=64,
        pk in 8i32..40,
    ) {
        // |c2|, |c3| <= 1/8 keeps f' >= c1 - 5/8 > 0 on [0, 1]
        let f = FunctionSpec::new(vec![int(c1), rat(c2, 32), rat(c3, 32)]).unwrap();
        let t0 = rat(t0n, 64);
        let y = functions::eval(&f, &t0);
        let precision = thickset::rational::pow2(-pk);
        let enc = functions::monotone_inverse(&f, &y, &iv(int(0), int(1)), &precision).unwrap();
        prop_assert!(enc.contains(&t0));
        prop_assert!(enc.width() <= precision);
        prop_assert!(functions::eval(&f, &enc.lo) <= y && y <= functions::eval(&f, &enc.hi));
    }

    #[test]
    fn window_contains_one(n in 1i64..500, d in 1i64..50) {
        let tau = int(1) + rat(n, d);
        let w = functions::derivative_window(&tau).unwrap();
        prop_assert!(w.contains(&int(1)));
        // the four candidate bounds, compared by hand
        let one = int(1);
        let lower = [&tau / (&tau + &one), tau.recip()].into_iter().max().unwrap();
        let upper = [tau.clone(), &one + tau.recip()].into_iter().min().unwrap();
        prop_assert_eq!((w.lower, w.upper), (lower, upper));
    }

    #[test]
    fn ratio_bound_shrinks_with_window(
        f in polys(),
        cn in -8i64..8,
        widths in prop::collection::vec(1i64..64, 2..6),
    ) {
        let center = rat(cn, 8);
        let mut ws = widths;
        ws.sort_unstable_by(|a, b| b.cmp(a));
        let mut last: Option<Rational> = None;
        for w in ws {
            let r = rat(w, 64);
            let window = iv(&center - &r, &center + &r);
            match functions::derivative_ratio_bound(&f, &window) {
                Ok(b) => {
                    prop_assert!(!b.is_negative());
                    if let Some(prev) = &last {
                        prop_assert!(&b <= prev, "{} > {} on {}", b, prev, window);
                    }
                    last = Some(b);
                }
                // f' vanishing on a wider window may stop doing so on a narrower one
                Err(_) => prop_assert!(last.is_none()),
            }
        }
    }
}

#[test]
fn window_examples() {
    let w = functions::derivative_window(&int(2)).unwrap();
    assert_eq!((w.lower, w.upper), (rat(2, 3), rat(3, 2)));
    let w = functions::derivative_window(&rat(3, 2)).unwrap();
    assert_eq!((&w.lower, &w.upper), (&rat(2, 3), &rat(3, 2)));
    assert!(!w.contains(&rat(2, 3)) && !w.contains(&rat(3, 2)));
    assert!(functions::derivative_window(&int(1)).is_err());
}

#[test]
fn square_is_flat_at_zero() {
    let sq = FunctionSpec::parse("0,1").unwrap();
    let eps = rat(1, 1000);
    let t = &eps * rat(4, 3);
    assert_eq!(functions::eval(&sq, &t), &t * &t);
    assert_eq!(functions::derivative(&sq).eval(&Rational::zero()), Rational::zero());
    assert!(functions::derivative_ratio_bound(&sq, &iv(-eps.clone(), eps)).is_err());
}

#[test]
fn quadratic_examples() {
    let f = FunctionSpec::parse("1,1/10").unwrap();
    assert_eq!(functions::eval(&f, &rat(1, 2)), rat(21, 40));
    let enc = functions::monotone_inverse(&f, &rat(21, 40), &iv(int(0), int(1)), &rat(1, 1 << 30)).unwrap();
    assert!(enc.contains(&rat(1, 2)));
    let b = functions::derivative_ratio_bound(&f, &iv(int(0), rat(1, 10))).unwrap();
    assert!(b <= rat(1, 50));
    let g = FunctionSpec::parse("1,1").unwrap();
    assert!(functions::monotone_inverse(&g, &int(2), &iv(int(0), int(2)), &rat(1, 1 << 20)).unwrap().contains(&int(1)));
}
