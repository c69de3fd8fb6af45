//! Dense univariate polynomials over the rationals, with Sturm-sequence root
//! counting and rigorous range enclosures.

use std::fmt;

use num_traits::{Signed, Zero};

use crate::rational::{self, Rational};
use crate::stage::ClosedInterval;

/// `coeffs[k]` is the coefficient of `x^k`. Trailing zeros are trimmed, so
/// the zero polynomial has no coefficients.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Polynomial {
    coeffs: Vec<Rational>,
}

impl Polynomial {
    pub fn new(mut coeffs: Vec<Rational>) -> Self {
        while coeffs.last().is_some_and(Zero::is_zero) {
            coeffs.pop();
        }
        Polynomial { coeffs }
    }

    pub fn zero() -> Self {
        Polynomial { coeffs: Vec::new() }
    }

    pub fn coeffs(&self) -> &[Rational] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree; the zero polynomial reports `None`.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn eval(&self, x: &Rational) -> Rational {
        let mut acc = Rational::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * x + c;
        }
        acc
    }

    pub fn derivative(&self) -> Polynomial {
        Polynomial::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| c * rational::int(k as i64))
                .collect(),
        )
    }

    fn lead(&self) -> &Rational {
        self.coeffs.last().expect("nonzero polynomial")
    }

    /// Remainder of Euclidean division by a nonzero `divisor`.
    pub fn rem(&self, divisor: &Polynomial) -> Polynomial {
        assert!(!divisor.is_zero(), "division by the zero polynomial");
        let mut r = self.coeffs.clone();
        let dd = divisor.coeffs.len() - 1;
        let lead = divisor.lead();
        while r.len() > dd && !r.is_empty() {
            let shift = r.len() - 1 - dd;
            let factor = r.last().unwrap() / lead;
            for (k, c) in divisor.coeffs.iter().enumerate() {
                r[shift + k] -= &factor * c;
            }
            r.pop();
            while r.last().is_some_and(Zero::is_zero) {
                r.pop();
            }
        }
        Polynomial::new(r)
    }

    fn neg(&self) -> Polynomial {
        Polynomial { coeffs: self.coeffs.iter().map(|c| -c).collect() }
    }

    /// Enclosure of `{p(x) : x in iv}` by interval Horner evaluation. The
    /// result is inclusion-monotone in `iv`.
    pub fn range_enclosure(&self, iv: &ClosedInterval) -> ClosedInterval {
        let mut lo = Rational::zero();
        let mut hi = Rational::zero();
        for c in self.coeffs.iter().rev() {
            let products = [&lo * iv.lo(), &lo * iv.hi(), &hi * iv.lo(), &hi * iv.hi()];
            let pmin = products.iter().min().unwrap().clone();
            let pmax = products.iter().max().unwrap().clone();
            lo = pmin + c;
            hi = pmax + c;
        }
        ClosedInterval::new(lo, hi).expect("interval Horner keeps lo <= hi")
    }

    /// Upper bound on the absolute value of every real root (Cauchy).
    pub fn root_bound(&self) -> Rational {
        match self.degree() {
            None | Some(0) => Rational::zero(),
            Some(_) => {
                let lead = self.lead().abs();
                let m = self.coeffs[..self.coeffs.len() - 1]
                    .iter()
                    .map(|c| c.abs() / &lead)
                    .max()
                    .unwrap_or_else(Rational::zero);
                m + rational::one()
            }
        }
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (k, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            match k {
                0 => write!(f, "{c}")?,
                1 => write!(f, "({c})t")?,
                _ => write!(f, "({c})t^{k}")?,
            }
        }
        Ok(())
    }
}

/// Sturm chain `p, p', -rem(p, p'), ...`.
#[derive(Clone, Debug)]
pub struct SturmChain {
    chain: Vec<Polynomial>,
}

impl SturmChain {
    pub fn new(p: &Polynomial) -> Self {
        let mut chain = Vec::new();
        if p.is_zero() {
            return SturmChain { chain };
        }
        chain.push(p.clone());
        let d = p.derivative();
        if d.is_zero() {
            return SturmChain { chain };
        }
        chain.push(d);
        loop {
            let n = chain.len();
            let r = chain[n - 2].rem(&chain[n - 1]).neg();
            if r.is_zero() {
                break;
            }
            chain.push(r);
        }
        SturmChain { chain }
    }

    fn variations(&self, x: &Rational) -> usize {
        let mut count = 0;
        let mut last = 0i8;
        for p in &self.chain {
            let v = p.eval(x);
            let s = if v.is_positive() { 1 } else if v.is_negative() { -1 } else { 0 };
            if s != 0 {
                if last != 0 && s != last {
                    count += 1;
                }
                last = s;
            }
        }
        count
    }

    /// Number of distinct roots in the half-open interval `(a, b]`.
    pub fn count_half_open(&self, a: &Rational, b: &Rational) -> usize {
        self.variations(a).saturating_sub(self.variations(b))
    }

    /// Number of distinct roots in the open interval `(a, b)`.
    pub fn count_open(&self, a: &Rational, b: &Rational) -> usize {
        let at_b = self.chain.first().is_some_and(|p| p.eval(b).is_zero());
        self.count_half_open(a, b) - usize::from(at_b)
    }
}

/// Isolating intervals for the distinct real roots of `p` in `[a, b]`, each
/// of width at most `width`. Exact rational roots come back as points.
pub fn isolate_roots(p: &Polynomial, a: &Rational, b: &Rational, width: &Rational) -> Vec<ClosedInterval> {
    let mut out = Vec::new();
    if p.is_zero() || p.degree() == Some(0) || a > b {
        return out;
    }
    let sturm = SturmChain::new(p);
    if p.eval(a).is_zero() {
        out.push(ClosedInterval::point(a.clone()));
    }
    if a < b {
        isolate_open(p, &sturm, a, b, width, &mut out);
        if p.eval(b).is_zero() {
            out.push(ClosedInterval::point(b.clone()));
        }
    }
    out
}

fn isolate_open(p: &Polynomial, sturm: &SturmChain, a: &Rational, b: &Rational, width: &Rational, out: &mut Vec<ClosedInterval>) {
    let n = sturm.count_open(a, b);
    if n == 0 {
        return;
    }
    if n == 1 && &(b - a) <= width {
        out.push(ClosedInterval::new(a.clone(), b.clone()).unwrap());
        return;
    }
    let mid = (a + b) / rational::int(2);
    isolate_open(p, sturm, a, &mid, width, out);
    if p.eval(&mid).is_zero() {
        out.push(ClosedInterval::point(mid.clone()));
    }
    isolate_open(p, sturm, &mid, b, width, out);
}

/// True iff `p` has a root in the closed interval.
pub fn has_root_in(p: &Polynomial, iv: &ClosedInterval) -> bool {
    if p.is_zero() {
        return true;
    }
    if p.eval(iv.lo()).is_zero() || p.eval(iv.hi()).is_zero() {
        return true;
    }
    if iv.is_point() {
        return false;
    }
    SturmChain::new(p).count_open(iv.lo(), iv.hi()) > 0
}

/// Rigorous bounds `[lo, hi]` on `p` over `iv`: exact values at the
/// endpoints, interval enclosures around the critical points. Critical points
/// are isolated over a window-independent range, so the bounds only tighten
/// when `iv` shrinks.
pub fn range_bounds(p: &Polynomial, iv: &ClosedInterval) -> ClosedInterval {
    let mut lo = p.eval(iv.lo());
    let mut hi = lo.clone();
    let at_hi = p.eval(iv.hi());
    if at_hi < lo {
        lo = at_hi.clone();
    }
    if at_hi > hi {
        hi = at_hi;
    }
    let dp = p.derivative();
    if dp.degree().is_some_and(|d| d >= 1) {
        let bound = dp.root_bound();
        let width = rational::pow2(-48);
        for crit in isolate_roots(&dp, &-bound.clone(), &bound, &width) {
            if let Some(piece) = crit.intersect(iv) {
                let e = p.range_enclosure(&piece);
                if e.lo() < &lo {
                    lo = e.lo().clone();
                }
                if e.hi() > &hi {
                    hi = e.hi().clone();
                }
            }
        }
    }
    ClosedInterval::new(lo, hi).unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, rat};

    fn poly(c: &[i64]) -> Polynomial {
        Polynomial::new(c.iter().map(|&v| int(v)).collect())
    }

    #[test]
    fn eval_and_derivative() {
        let p = poly(&[1, -3, 0, 2]);
        assert_eq!(p.eval(&int(2)), int(11));
        assert_eq!(p.derivative(), poly(&[-3, 0, 6]));
        assert_eq!(poly(&[5]).derivative(), Polynomial::zero());
    }

    #[test]
    fn remainder() {
        // x^3 - 1 = (x - 1)(x^2 + x + 1)
        let r = poly(&[-1, 0, 0, 1]).rem(&poly(&[-1, 1]));
        assert!(r.is_zero());
        assert_eq!(poly(&[1, 0, 1]).rem(&poly(&[0, 1])), poly(&[1]));
    }

    #[test]
    fn sturm_counts_roots() {
        // (x - 1)(x - 2)(x + 3)
        let p = poly(&[6, -7, 0, 1]);
        let s = SturmChain::new(&p);
        assert_eq!(s.count_open(&int(-10), &int(10)), 3);
        assert_eq!(s.count_open(&rat(1, 2), &rat(5, 2)), 2);
        assert_eq!(s.count_open(&rat(3, 2), &int(10)), 1);
        // repeated root counts once
        let sq = poly(&[1, -2, 1]);
        assert_eq!(SturmChain::new(&sq).count_open(&int(0), &int(2)), 1);
    }

    #[test]
    fn isolates_irrational_and_rational_roots() {
        let p = poly(&[-2, 0, 1]);
        let roots = isolate_roots(&p, &int(-2), &int(2), &rat(1, 1000));
        assert_eq!(roots.len(), 2);
        for r in &roots {
            assert!(r.length() <= rat(1, 1000));
            assert!(p.eval(r.lo()) * p.eval(r.hi()) < int(0));
        }
        let q = poly(&[0, -1, 1]);
        let roots = isolate_roots(&q, &int(0), &int(1), &rat(1, 8));
        assert_eq!(roots, vec![ClosedInterval::point(int(0)), ClosedInterval::point(int(1))]);
    }

    #[test]
    fn range_bounds_cover_interior_extremum() {
        // 1 - (x - 1/3)^2 peaks at x = 1/3 with value 1
        let p = Polynomial::new(vec![rat(8, 9), rat(2, 3), int(-1)]);
        let b = range_bounds(&p, &ClosedInterval::new(int(0), int(1)).unwrap());
        assert!(b.hi() >= &int(1));
        assert!(b.hi() - int(1) < rat(1, 1_000_000));
        assert_eq!(b.lo(), &rat(5, 9));
    }
}
