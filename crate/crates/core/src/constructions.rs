//! Stage generators: middle-α sets, seeded random thick sets, and the
//! five-interval set that avoids `{x - t, x, x + t^2}` at the endpoints of its
//! largest gap.

use std::sync::Arc;

use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{self, int, Rational};
use crate::stage::{self, CantorStage, ClosedInterval};

fn unit_interval() -> ClosedInterval {
    ClosedInterval::new(rational::zero(), rational::one()).unwrap()
}

/// Children of `iv` after removing the central open proportion `alpha`.
pub(crate) fn middle_alpha_children(iv: &ClosedInterval, beta: &Rational) -> [ClosedInterval; 2] {
    let keep = iv.length() * beta;
    [
        ClosedInterval::new(iv.lo().clone(), iv.lo() + &keep).unwrap(),
        ClosedInterval::new(iv.hi() - &keep, iv.hi().clone()).unwrap(),
    ]
}

fn check_alpha(alpha: &Rational) -> Result<Rational> {
    if !alpha.is_positive() || alpha >= &rational::one() {
        return Err(Error::Domain(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    Ok((rational::one() - alpha) / int(2))
}

/// Stages `0..=depth` of the middle-α set on `[0, 1]`, each linked to its
/// parent.
pub fn middle_alpha_family(alpha: &Rational, depth: usize) -> Result<Vec<CantorStage>> {
    let beta = check_alpha(alpha)?;
    let mut out = vec![CantorStage::unit(unit_interval())];
    for d in 1..=depth {
        let parent = Arc::new(out[d - 1].clone());
        let intervals = parent
            .intervals()
            .iter()
            .flat_map(|iv| middle_alpha_children(iv, &beta))
            .collect();
        out.push(CantorStage::new(intervals, d)?.with_parent(parent)?);
    }
    Ok(out)
}

/// Middle-α stage at `depth`. Its thickness is `(1 - alpha) / (2 alpha)` at
/// every depth >= 1.
pub fn middle_alpha(alpha: &Rational, depth: usize) -> Result<CantorStage> {
    Ok(middle_alpha_family(alpha, depth)?.pop().unwrap())
}

/// Thickness of every middle-α stage of depth >= 1.
pub fn middle_alpha_thickness(alpha: &Rational) -> Result<Rational> {
    let beta = check_alpha(alpha)?;
    Ok(beta / alpha)
}

/// How [`random_thick`] places each new gap.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GapPlacement {
    /// Gap of proportion `1 / (2 tau + 1)` cut in the middle; every local
    /// thickness equals the target exactly.
    Centered,
    /// Gap proportion drawn from `[1/2, 1] / (2 tau + 1)`, then offset
    /// uniformly over positions leaving both sides at least `tau` times the
    /// gap.
    #[default]
    Uniform,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RandomThickSpec {
    #[serde(with = "rational::serde_str")]
    pub target_tau: Rational,
    pub depth: usize,
    pub seed: u64,
    #[serde(default)]
    pub gap_placement: GapPlacement,
}

impl RandomThickSpec {
    pub fn new(target_tau: Rational, depth: usize, seed: u64) -> Self {
        RandomThickSpec { target_tau, depth, seed, gap_placement: GapPlacement::Uniform }
    }
}

const SIZE_STEPS: i64 = 16;
const OFFSET_STEPS: i64 = 64;

/// Stages `0..=depth` of a seeded random set on `[0, 1]`. Each gap is cut so
/// both pieces are at least `target_tau` times as long as the gap, which keeps
/// every bridge ratio at or above the target.
pub fn random_thick_family(spec: &RandomThickSpec) -> Result<Vec<CantorStage>> {
    if !spec.target_tau.is_positive() {
        return Err(Error::Domain(format!("target thickness must be positive, got {}", spec.target_tau)));
    }
    let tau = &spec.target_tau;
    let max_fraction = (int(2) * tau + int(1)).recip();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut out = vec![CantorStage::unit(unit_interval())];
    for d in 1..=spec.depth {
        let parent = Arc::new(out[d - 1].clone());
        let mut intervals = Vec::with_capacity(parent.len() * 2);
        for iv in parent.intervals() {
            let len = iv.length();
            let (gap, left) = match spec.gap_placement {
                GapPlacement::Centered => {
                    let gap = &len * &max_fraction;
                    let left = (&len - &gap) / int(2);
                    (gap, left)
                }
                GapPlacement::Uniform => {
                    let k = rng.gen_range(SIZE_STEPS / 2..=SIZE_STEPS);
                    let gap = &len * &max_fraction * rational::rat(k, SIZE_STEPS);
                    let min_side = tau * &gap;
                    let slack = &len - &gap - &min_side * int(2);
                    let j = rng.gen_range(0..=OFFSET_STEPS);
                    let left = &min_side + slack * rational::rat(j, OFFSET_STEPS);
                    (gap, left)
                }
            };
            let cut_lo = iv.lo() + &left;
            let cut_hi = &cut_lo + &gap;
            intervals.push(ClosedInterval::new(iv.lo().clone(), cut_lo)?);
            intervals.push(ClosedInterval::new(cut_hi, iv.hi().clone())?);
        }
        out.push(CantorStage::new(intervals, d)?.with_parent(parent)?);
    }
    Ok(out)
}

pub fn random_thick(spec: &RandomThickSpec) -> Result<CantorStage> {
    Ok(random_thick_family(spec)?.pop().unwrap())
}

/// Parameters of the five-interval avoiding set.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CounterexampleParams {
    #[serde(with = "rational::serde_str")]
    pub tau: Rational,
    #[serde(with = "rational::serde_str")]
    pub eps: Rational,
    #[serde(with = "rational::serde_str")]
    pub c: Rational,
    #[serde(with = "rational::serde_str")]
    pub alpha: Rational,
    #[serde(with = "rational::serde_str")]
    pub beta: Rational,
}

impl CounterexampleParams {
    /// `alpha = 1/(2 tau + 1)`, `beta = tau/(2 tau + 1)`. `tau = 1` is
    /// accepted here so the limiting length table can be evaluated; the
    /// calibration search itself needs `tau > 1`.
    pub fn new(tau: Rational, eps: Rational, c: Rational) -> Result<Self> {
        if tau < rational::one() {
            return Err(Error::Domain(format!("tau must be at least 1, got {tau}")));
        }
        if !eps.is_positive() {
            return Err(Error::Domain(format!("eps must be positive, got {eps}")));
        }
        if !c.is_positive() || c >= rational::one() {
            return Err(Error::Domain(format!("c must lie in (0, 1), got {c}")));
        }
        let denom = int(2) * &tau + int(1);
        let alpha = denom.recip();
        let beta = &tau / &denom;
        Ok(CounterexampleParams { tau, eps, c, alpha, beta })
    }
}

/// The five intervals and four gaps, left to right. Endpoints are kept as
/// computed, so a parameter choice that reverses an interval stays visible.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CounterexampleParts {
    pub bounds: [(Rational, Rational); 5],
    pub params: CounterexampleParams,
}

impl CounterexampleParts {
    /// `I_i` (1-based), as the closed hull of its computed endpoints.
    pub fn interval(&self, i: usize) -> ClosedInterval {
        let (lo, hi) = &self.bounds[i - 1];
        ClosedInterval::spanning(lo.clone(), hi.clone())
    }

    /// Closure of `G_i`, which lies between `I_i` and `I_{i+1}`.
    pub fn gap(&self, i: usize) -> ClosedInterval {
        ClosedInterval::spanning(self.bounds[i - 1].1.clone(), self.bounds[i].0.clone())
    }

    /// Names each ordering `lo < hi` the construction requires and whether it
    /// holds.
    pub fn ordering_checks(&self) -> Vec<(String, bool)> {
        let mut out = Vec::new();
        for (k, (lo, hi)) in self.bounds.iter().enumerate() {
            out.push((format!("I{} nonempty: lo < hi", k + 1), lo < hi));
        }
        for k in 0..4 {
            out.push((
                format!("I{} left of I{}: I{}.hi < I{}.lo", k + 1, k + 2, k + 1, k + 2),
                self.bounds[k].1 < self.bounds[k + 1].0,
            ));
        }
        out
    }

    pub fn is_ordered(&self) -> bool {
        self.ordering_checks().iter().all(|(_, ok)| *ok)
    }

    pub fn stage(&self) -> Result<CantorStage> {
        if let Some((name, _)) = self.ordering_checks().into_iter().find(|(_, ok)| !ok) {
            return Err(Error::Construction(format!("ordering violated: {name}")));
        }
        CantorStage::new((1..=5).map(|i| self.interval(i)).collect(), 0)
    }

    pub fn sidecar(&self) -> CounterexampleSidecar {
        CounterexampleSidecar {
            i1: self.interval(1),
            i2: self.interval(2),
            i3: self.interval(3),
            i4: self.interval(4),
            i5: self.interval(5),
            g1: self.gap(1),
            g2: self.gap(2),
            g3: self.gap(3),
            g4: self.gap(4),
            alpha: self.params.alpha.clone(),
            beta: self.params.beta.clone(),
            tau: self.params.tau.clone(),
            eps: self.params.eps.clone(),
            c: self.params.c.clone(),
        }
    }
}

/// Named parts written next to the stage JSON for verifiers and renderers.
/// Gaps are written as their closures `[lo, hi]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CounterexampleSidecar {
    #[serde(rename = "I1")]
    pub i1: ClosedInterval,
    #[serde(rename = "I2")]
    pub i2: ClosedInterval,
    #[serde(rename = "I3")]
    pub i3: ClosedInterval,
    #[serde(rename = "I4")]
    pub i4: ClosedInterval,
    #[serde(rename = "I5")]
    pub i5: ClosedInterval,
    #[serde(rename = "G1")]
    pub g1: ClosedInterval,
    #[serde(rename = "G2")]
    pub g2: ClosedInterval,
    #[serde(rename = "G3")]
    pub g3: ClosedInterval,
    #[serde(rename = "G4")]
    pub g4: ClosedInterval,
    #[serde(with = "rational::serde_str")]
    pub alpha: Rational,
    #[serde(with = "rational::serde_str")]
    pub beta: Rational,
    #[serde(with = "rational::serde_str")]
    pub tau: Rational,
    #[serde(with = "rational::serde_str")]
    pub eps: Rational,
    #[serde(with = "rational::serde_str")]
    pub c: Rational,
}

impl CounterexampleSidecar {
    pub fn labels(&self) -> Vec<(&'static str, &ClosedInterval)> {
        vec![
            ("I1", &self.i1),
            ("G1", &self.g1),
            ("I2", &self.i2),
            ("G2", &self.g2),
            ("I3", &self.i3),
            ("G3", &self.g3),
            ("I4", &self.i4),
            ("G4", &self.g4),
            ("I5", &self.i5),
        ]
    }
}

/// Endpoints of `I_1..I_5` from the parameters, without ordering checks.
pub fn counterexample_parts(params: &CounterexampleParams) -> CounterexampleParts {
    let CounterexampleParams { tau, eps, c, alpha, beta } = params;
    let one = rational::one();
    let eps2 = eps * eps;
    let inner = &one + beta * tau; // 1 + βτ
    let outer = &inner + alpha * tau; // 1 + βτ + ατ
    let wide = &one + tau; // 1 + τ
    let bounds = [
        (-(&wide * eps), -(&outer * eps)),
        (-(&inner * eps), -eps.clone()),
        (rational::zero(), c * &eps2),
        (&inner * &inner / c * &eps2, &outer * &outer * c * &eps2),
        (&wide * &wide / c * &eps2, tau * eps),
    ];
    CounterexampleParts { bounds, params: params.clone() }
}

/// The five-interval set. Fails when the parameters leave the regime where
/// the intervals are nonempty and ordered, naming the first violation.
pub fn counterexample_set(params: &CounterexampleParams) -> Result<CantorStage> {
    counterexample_parts(params).stage()
}

/// Searches `c` in `(0, 1)` so that the set has thickness in
/// `[tau - tol, tau]`.
///
/// Both bridges of `G_1` have ratio exactly `tau` for every `c`, so the
/// thickness never exceeds `tau`; the `c`-dependent ratios around `G_3` and
/// `G_4` grow with `c`. The search first finds a feasible `c = 1 - 2^-k` and
/// then bisects down towards the feasibility threshold.
pub fn counterexample_calibrate(tau: &Rational, eps: &Rational, tol: &Rational) -> Result<CounterexampleParams> {
    if tau <= &rational::one() {
        return Err(Error::Domain(format!("calibration needs tau > 1, got {tau}")));
    }
    if !tol.is_positive() {
        return Err(Error::Domain("tolerance must be positive".into()));
    }
    let target = tau - tol;
    let mut best: Option<Rational> = None;
    let feasible = |c: &Rational| -> Result<Option<Rational>> {
        let params = CounterexampleParams::new(tau.clone(), eps.clone(), c.clone())?;
        match counterexample_set(&params) {
            Ok(stage) => Ok(Some(stage::thickness(&stage)?.value)),
            Err(Error::Construction(_)) => Ok(None),
            Err(e) => Err(e),
        }
    };
    let mut hi = None;
    for k in 1..=48 {
        let c = rational::one() - rational::pow2(-k);
        if let Some(t) = feasible(&c)? {
            if t >= target {
                hi = Some(c);
                break;
            }
            if best.as_ref().is_none_or(|b| &t > b) {
                best = Some(t);
            }
        }
    }
    let Some(mut hi) = hi else {
        let reached = best.map_or("no valid construction".to_string(), |b| format!("best thickness {b}"));
        return Err(Error::Calibration(format!(
            "no c in (0, 1) reaches thickness within {tol} of {tau} ({reached})"
        )));
    };
    let mut lo = Rational::zero();
    let resolution = rational::pow2(-40);
    while &hi - &lo > resolution {
        let mid = (&lo + &hi) / int(2);
        match feasible(&mid)? {
            Some(t) if t >= target => hi = mid,
            _ => lo = mid,
        }
    }
    CounterexampleParams::new(tau.clone(), eps.clone(), hi)
}
