//! The configuration function `f`: rational polynomials with `f(0) = 0`,
//! their derivatives, the admissible window for `f'(0)`, certified monotone
//! inverses, and derivative-ratio bounds.

use std::fmt;

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::{self, Polynomial};
use crate::rational::{self, Rational};
use crate::stage::ClosedInterval;

pub const MAX_DEGREE: usize = 8;

/// Default enclosure width for inverse values.
pub fn default_precision() -> Rational {
    rational::pow2(-64)
}

/// `f(t) = c1 t + c2 t^2 + ... + cd t^d` with rational coefficients.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FunctionSpec {
    poly: Polynomial,
}

impl FunctionSpec {
    /// Builds `f` from `[c1, ..., cd]`; there is no constant term to give.
    pub fn new(coefficients: Vec<Rational>) -> Result<Self> {
        if coefficients.len() > MAX_DEGREE {
            return Err(Error::Domain(format!(
                "degree {} exceeds the supported maximum {MAX_DEGREE}",
                coefficients.len()
            )));
        }
        let mut coeffs = Vec::with_capacity(coefficients.len() + 1);
        coeffs.push(Rational::zero());
        coeffs.extend(coefficients);
        Ok(FunctionSpec { poly: Polynomial::new(coeffs) })
    }

    pub fn identity() -> Self {
        FunctionSpec { poly: Polynomial::new(vec![rational::zero(), rational::one()]) }
    }

    pub fn linear(slope: Rational) -> Self {
        FunctionSpec { poly: Polynomial::new(vec![rational::zero(), slope]) }
    }

    /// Parses `"c1,c2,...,cd"`.
    pub fn parse(text: &str) -> Result<Self> {
        let coefficients = text
            .split(',')
            .map(rational::parse)
            .collect::<Result<Vec<_>>>()?;
        Self::new(coefficients)
    }

    /// `[c1, ..., cd]`.
    pub fn coefficients(&self) -> Vec<Rational> {
        self.poly.coeffs().iter().skip(1).cloned().collect()
    }

    pub fn polynomial(&self) -> &Polynomial {
        &self.poly
    }

    /// `f'(0) = c1`.
    pub fn slope_at_zero(&self) -> Rational {
        self.poly.coeffs().get(1).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::identity()
    }
}

impl fmt::Display for FunctionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let text: Vec<String> = self.coefficients().iter().map(rational::format).collect();
        write!(f, "{}", text.join(","))
    }
}

impl Serialize for FunctionSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for FunctionSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        FunctionSpec::parse(&s).map_err(serde::de::Error::custom)
    }
}

pub fn eval(f: &FunctionSpec, t: &Rational) -> Rational {
    f.poly.eval(t)
}

/// Formal derivative; unlike `f` it may have a constant term.
pub fn derivative(f: &FunctionSpec) -> Polynomial {
    f.poly.derivative()
}

/// Open window `(lower, upper)` that `f'(0)` must lie in.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DerivativeWindow {
    #[serde(with = "rational::serde_str")]
    pub lower: Rational,
    #[serde(with = "rational::serde_str")]
    pub upper: Rational,
}

impl DerivativeWindow {
    /// Strict membership.
    pub fn contains(&self, slope: &Rational) -> bool {
        &self.lower < slope && slope < &self.upper
    }
}

impl fmt::Display for DerivativeWindow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.lower, self.upper)
    }
}

/// `(max(tau/(tau+1), 1/tau), min(tau, 1 + 1/tau))`.
pub fn derivative_window(tau: &Rational) -> Result<DerivativeWindow> {
    if tau <= &rational::one() {
        return Err(Error::Domain(format!("derivative window needs tau > 1, got {tau}")));
    }
    let one = rational::one();
    let inv = tau.recip();
    let lower = rational::max(&(tau / (tau + &one)), &inv);
    let upper = rational::min(tau, &(&one + &inv));
    Ok(DerivativeWindow { lower, upper })
}

/// Rational enclosure `[lo, hi]` of a real value.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CertifiedValue {
    #[serde(with = "rational::serde_str")]
    pub lo: Rational,
    #[serde(with = "rational::serde_str")]
    pub hi: Rational,
}

impl CertifiedValue {
    pub fn exact(v: Rational) -> Self {
        CertifiedValue { lo: v.clone(), hi: v }
    }

    pub fn width(&self) -> Rational {
        &self.hi - &self.lo
    }

    pub fn contains(&self, v: &Rational) -> bool {
        &self.lo <= v && v <= &self.hi
    }

    pub fn as_interval(&self) -> ClosedInterval {
        ClosedInterval::spanning(self.lo.clone(), self.hi.clone())
    }
}

impl From<ClosedInterval> for CertifiedValue {
    fn from(iv: ClosedInterval) -> Self {
        CertifiedValue { lo: iv.lo().clone(), hi: iv.hi().clone() }
    }
}

/// Whether `f'` has no zero on the closed bracket; `Some(true)` for
/// increasing, `Some(false)` for decreasing, `None` if it vanishes.
pub fn monotone_direction(f: &FunctionSpec, bracket: &ClosedInterval) -> Option<bool> {
    let d = derivative(f);
    if poly::has_root_in(&d, bracket) {
        return None;
    }
    Some(d.eval(bracket.lo()).is_positive())
}

/// Encloses the unique `t` in `bracket` with `f(t) = y` by bisection, to
/// width at most `precision`.
pub fn monotone_inverse(
    f: &FunctionSpec,
    y: &Rational,
    bracket: &ClosedInterval,
    precision: &Rational,
) -> Result<CertifiedValue> {
    let increasing = monotone_direction(f, bracket).ok_or_else(|| {
        Error::Domain(format!("f' vanishes on {bracket}; f is not monotone there"))
    })?;
    inverse_unchecked(f, y, bracket, precision, increasing)
}

/// Bisection core of [`monotone_inverse`]; the caller vouches that `f` is
/// strictly monotone on `bracket` in the given direction.
pub(crate) fn inverse_unchecked(
    f: &FunctionSpec,
    y: &Rational,
    bracket: &ClosedInterval,
    precision: &Rational,
    increasing: bool,
) -> Result<CertifiedValue> {
    if !precision.is_positive() {
        return Err(Error::Domain("inverse precision must be positive".into()));
    }
    let (mut lo, mut hi) = (bracket.lo().clone(), bracket.hi().clone());
    let (flo, fhi) = (eval(f, &lo), eval(f, &hi));
    let (ymin, ymax) = if increasing { (&flo, &fhi) } else { (&fhi, &flo) };
    if y < ymin || y > ymax {
        return Err(Error::Range(format!("{y} lies outside f({bracket}) = [{ymin}, {ymax}]")));
    }
    if &flo == y {
        return Ok(CertifiedValue::exact(lo));
    }
    if &fhi == y {
        return Ok(CertifiedValue::exact(hi));
    }
    let two = rational::int(2);
    while &(&hi - &lo) > precision {
        let mid = (&lo + &hi) / &two;
        let fm = eval(f, &mid);
        if &fm == y {
            return Ok(CertifiedValue::exact(mid));
        }
        if (&fm < y) == increasing {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(CertifiedValue { lo, hi })
}

/// Rigorous bounds on `f'` over `window`.
pub fn derivative_range(f: &FunctionSpec, window: &ClosedInterval) -> ClosedInterval {
    poly::range_bounds(&derivative(f), window)
}

/// Upper bound on `max |f'(x) / f'(y) - 1|` over `x, y` in `window`.
pub fn derivative_ratio_bound(f: &FunctionSpec, window: &ClosedInterval) -> Result<Rational> {
    let d = derivative(f);
    if poly::has_root_in(&d, window) {
        return Err(Error::Domain(format!("f' vanishes on {window}")));
    }
    let range = poly::range_bounds(&d, window);
    let (small, large) = if range.lo().is_positive() {
        (range.lo().clone(), range.hi().clone())
    } else if range.hi().is_negative() {
        (-range.hi(), -range.lo())
    } else {
        return Err(Error::Precision(format!(
            "derivative enclosure {range} straddles zero on {window}"
        )));
    };
    Ok(large / small - rational::one())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, rat};

    fn iv(a: Rational, b: Rational) -> ClosedInterval {
        ClosedInterval::new(a, b).unwrap()
    }

    fn quad() -> FunctionSpec {
        FunctionSpec::parse("1,1/10").unwrap()
    }

    #[test]
    fn evaluation() {
        assert_eq!(eval(&FunctionSpec::identity(), &rat(1, 3)), rat(1, 3));
        assert_eq!(eval(&quad(), &rat(1, 2)), rat(21, 40));
    }

    #[test]
    fn derivatives() {
        assert_eq!(derivative(&FunctionSpec::identity()), Polynomial::new(vec![int(1)]));
        let sq = FunctionSpec::parse("0,1").unwrap();
        assert_eq!(derivative(&sq), Polynomial::new(vec![int(0), int(2)]));
        assert_eq!(derivative(&sq).eval(&int(0)), int(0));
        assert_eq!(derivative(&quad()), Polynomial::new(vec![int(1), rat(1, 5)]));
        assert_eq!(derivative(&quad()).eval(&int(0)), quad().slope_at_zero());
    }

    #[test]
    fn windows() {
        let w = derivative_window(&int(2)).unwrap();
        assert_eq!((w.lower.clone(), w.upper.clone()), (rat(2, 3), rat(3, 2)));
        let w = derivative_window(&rat(3, 2)).unwrap();
        assert_eq!((w.lower, w.upper), (rat(2, 3), rat(3, 2)));
        assert!(derivative_window(&int(1)).is_err());
        assert!(derivative_window(&rat(1, 2)).is_err());
    }

    #[test]
    fn inverse_examples() {
        let p = rational::pow2(-20);
        let v = monotone_inverse(&FunctionSpec::identity(), &rat(1, 4), &iv(int(0), int(1)), &p).unwrap();
        assert!(v.contains(&rat(1, 4)) && v.width() <= p);
        let f = FunctionSpec::parse("1,1").unwrap();
        let v = monotone_inverse(&f, &int(2), &iv(int(0), int(2)), &p).unwrap();
        assert!(v.contains(&int(1)));
        let v = monotone_inverse(&quad(), &rat(21, 40), &iv(int(0), int(1)), &p).unwrap();
        assert!(v.contains(&rat(1, 2)));
    }

    #[test]
    fn inverse_errors() {
        let p = rational::pow2(-20);
        let sq = FunctionSpec::parse("0,1").unwrap();
        assert!(matches!(
            monotone_inverse(&sq, &rat(1, 4), &iv(int(-1), int(1)), &p),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            monotone_inverse(&FunctionSpec::identity(), &int(5), &iv(int(0), int(1)), &p),
            Err(Error::Range(_))
        ));
    }

    #[test]
    fn decreasing_inverse() {
        let f = FunctionSpec::linear(int(-2));
        let v = monotone_inverse(&f, &int(-1), &iv(int(-3), int(3)), &rational::pow2(-30)).unwrap();
        assert!(v.contains(&rat(1, 2)));
    }

    #[test]
    fn ratio_bounds() {
        let w = iv(int(-3), int(5));
        assert_eq!(derivative_ratio_bound(&FunctionSpec::identity(), &w).unwrap(), int(0));
        let b = derivative_ratio_bound(&quad(), &iv(int(0), rat(1, 10))).unwrap();
        assert_eq!(b, rat(1, 50));
        let sq = FunctionSpec::parse("0,1").unwrap();
        assert!(derivative_ratio_bound(&sq, &iv(int(-1), int(1))).is_err());
    }

    #[test]
    fn parser_limits() {
        assert!(FunctionSpec::parse("1,2,3,4,5,6,7,8").is_ok());
        assert!(FunctionSpec::parse("1,2,3,4,5,6,7,8,9").is_err());
        assert!(FunctionSpec::parse("1,x").is_err());
        assert_eq!(quad().to_string(), "1,1/10");
    }
}
