//! Constructive searches for `{x - t, x, x + f(t)}` inside thick sets, the
//! mean-value bound check they rely on, and the verifier for the
//! five-interval avoiding set.

use num_traits::{Signed, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constructions::{self, CounterexampleParams, CounterexampleParts};
use crate::error::{Error, Result};
use crate::family::{Node, StageFamily};
use crate::functions::{self, CertifiedValue, FunctionSpec};
use crate::gaplemma::{self, PersistentWitness};
use crate::rational::{self, int, Rational};
use crate::stage::{self, CantorStage, ClosedInterval, Gap, GapBridgeReport, Side};

/// Node count up to which stages are materialized for thickness and frame
/// computations.
pub const REFERENCE_NODES: usize = 512;

/// A named pass/fail line in a report.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub holds: bool,
    pub detail: String,
}

impl Check {
    fn new(name: impl Into<String>, holds: bool, detail: impl Into<String>) -> Self {
        Check { name: name.into(), holds, detail: detail.into() }
    }
}

/// Largest bounded gap with both bridges.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GapFrame {
    pub gap: Gap,
    pub left_bridge: ClosedInterval,
    pub right_bridge: ClosedInterval,
    /// True when the left bridge is at least as long as the right one.
    pub left_ge_right: bool,
}

impl GapFrame {
    fn gap_lo(&self) -> &Rational {
        self.gap.lo.as_ref().unwrap()
    }

    fn gap_hi(&self) -> &Rational {
        self.gap.hi.as_ref().unwrap()
    }

    /// `(x, a, b, c)`: after moving `x` to 0 (and reflecting when the right
    /// bridge is longer) the gap is `(-a, 0)`, the long bridge `[-b, -a]`
    /// and the short one `[0, c]`.
    pub fn coordinates(&self) -> (Rational, Rational, Rational, Rational) {
        let a = self.gap_hi() - self.gap_lo();
        if self.left_ge_right {
            let x = self.gap_hi().clone();
            let b = &x - self.left_bridge.lo();
            let c = self.right_bridge.hi() - &x;
            (x, a, b, c)
        } else {
            let x = self.gap_lo().clone();
            let b = self.right_bridge.hi() - &x;
            let c = &x - self.left_bridge.lo();
            (x, a, b, c)
        }
    }
}

/// Largest gap (leftmost on ties) and its two bridges.
pub fn largest_gap_frame(stage: &CantorStage) -> Result<GapFrame> {
    let gap = stage::largest_gap(stage)
        .ok_or_else(|| Error::Domain("thickness undefined for a single interval".into()))?;
    let left = stage::bridge_at(stage, gap.lo.as_ref().unwrap(), Side::Left)?.bridge;
    let right = stage::bridge_at(stage, gap.hi.as_ref().unwrap(), Side::Right)?.bridge;
    let left_ge_right = left.length() >= right.length();
    Ok(GapFrame { gap, left_bridge: left, right_bridge: right, left_ge_right })
}

/// Thickness of the deepest stage within [`REFERENCE_NODES`] nodes and at
/// most `max_depth`, with that depth.
pub fn reference_thickness(family: &StageFamily, max_depth: usize) -> Result<(Rational, usize)> {
    let depth = family.reference_depth(max_depth, REFERENCE_NODES);
    let s = family.stage(depth)?;
    let t = stage::thickness(&s).map_err(|_| {
        Error::Hypothesis(format!("the stage at depth {depth} has no gap, so its thickness is undefined"))
    })?;
    Ok((t.value, depth))
}

/// A restriction of a family to one bridge of small diameter.
#[derive(Clone, Debug)]
pub struct Extraction {
    pub family: StageFamily,
    pub bridge: ClosedInterval,
    /// First depth at which the bridge's gap appeared.
    pub found_depth: usize,
    /// Depth at which the bridge and the thickness comparison were computed.
    pub check_depth: usize,
    /// Thickness of the restricted stage at `check_depth`, `None` if gapless.
    pub thickness: Option<Rational>,
}

/// Small-diameter thick subset. With `u` the right end of a gap `G0`, scans
/// depths for the first gap `G` whose left end `w` has `u < w < v < u + min(|G0|, delta)`
/// for some point `v` of the set, and restricts to the left bridge of `G`.
/// The result has hull width below `delta` and is checked to be at least as
/// thick as the input at the comparison depth.
pub fn subset_extract(family: &StageFamily, delta: &Rational, max_depth: usize) -> Result<Extraction> {
    if !delta.is_positive() {
        return Err(Error::Domain(format!("delta must be positive, got {delta}")));
    }
    let mut g0 = None;
    for d in 0..=max_depth {
        let s = match family.stage(d) {
            Ok(s) => s,
            Err(Error::Budget(_)) => break,
            Err(e) => return Err(e),
        };
        if let Some(g) = stage::largest_gap(&s) {
            g0 = Some(g);
            break;
        }
        if family.finite_depth().is_some_and(|f| d >= f) {
            break;
        }
    }
    let g0 = g0.ok_or_else(|| Error::InsufficientDepth {
        message: "no stage up to the depth limit has a gap".into(),
        required: max_depth + 1,
    })?;
    let u = g0.hi.clone().unwrap();
    let reach = rational::min(&g0.length().unwrap(), delta);
    let window = ClosedInterval::new(u.clone(), &u + &reach)?;
    let windowed = family.restrict(&window)?;

    let mut found = None;
    for d in 0..=max_depth {
        let nodes = match windowed.nodes_at(d, REFERENCE_NODES) {
            Ok(n) => n,
            Err(Error::Budget(_)) => break,
            Err(e) => return Err(e),
        };
        if nodes.len() >= 2 {
            let s = windowed.stage(d)?;
            let ivs = s.intervals();
            if ivs.len() >= 2 && ivs[0].lo() == &u && ivs[1].lo() < window.hi() {
                found = Some((d, ivs[0].hi().clone()));
                break;
            }
        }
        if windowed.finite_depth().is_some_and(|f| d >= f) {
            break;
        }
    }
    let Some((found_depth, w)) = found else {
        return Err(Error::InsufficientDepth {
            message: format!("no gap of the set appears inside [{u}, {}] by depth {max_depth}", window.hi()),
            required: max_depth + 1,
        });
    };

    let check_depth = windowed.reference_depth(max_depth, REFERENCE_NODES).max(found_depth);
    let check_stage = windowed.stage(check_depth)?;
    let bridge = stage::bridge_at(&check_stage, &w, Side::Left)
        .map_err(|_| {
            Error::Hypothesis(format!("{w} stops being an interval endpoint by depth {check_depth}"))
        })?
        .bridge;
    let restricted = family.restrict(&bridge)?;
    let inner = stage::thickness_or_infinite(&restricted.stage(check_depth)?);
    let outer = match family.stage(check_depth) {
        Ok(s) => stage::thickness_or_infinite(&s),
        Err(Error::Budget(_)) => Some(reference_thickness(family, max_depth)?.0),
        Err(e) => return Err(e),
    };
    if let (Some(i), Some(o)) = (&inner, &outer) {
        if i < o {
            return Err(Error::Internal(format!(
                "restriction to the bridge {bridge} has thickness {i} < {o} at depth {check_depth}"
            )));
        }
    }
    Ok(Extraction { family: restricted, bridge, found_depth, check_depth, thickness: inner })
}

/// A map `g` with `g(0) = 0` used in the mean-value bound check.
#[derive(Clone, Debug)]
pub enum MonotoneMap {
    Forward(FunctionSpec),
    Inverse { f: FunctionSpec, bracket: ClosedInterval, precision: Rational },
}

impl MonotoneMap {
    /// Certified enclosure of `g(x)`.
    pub fn eval(&self, x: &Rational) -> Result<CertifiedValue> {
        match self {
            MonotoneMap::Forward(f) => Ok(CertifiedValue::exact(functions::eval(f, x))),
            MonotoneMap::Inverse { f, bracket, precision } => functions::monotone_inverse(f, x, bracket, precision),
        }
    }

    /// Bounds on `g'` over `[0, x]`, or `None` when they cannot be given.
    pub fn derivative_bounds(&self, x: &Rational) -> Result<Option<ClosedInterval>> {
        match self {
            MonotoneMap::Forward(f) => {
                let span = ClosedInterval::spanning(Rational::zero(), x.clone());
                Ok(Some(functions::derivative_range(f, &span)))
            }
            MonotoneMap::Inverse { .. } => {
                let gx = self.eval(x)?;
                let MonotoneMap::Inverse { f, .. } = self else { unreachable!() };
                let far = if x.is_negative() { gx.lo } else { gx.hi };
                let span = ClosedInterval::spanning(Rational::zero(), far);
                let r = functions::derivative_range(f, &span);
                // 1/x reverses order on either side of 0
                if r.lo().is_positive() || r.hi().is_negative() {
                    Ok(Some(ClosedInterval::new(r.hi().recip(), r.lo().recip())?))
                } else {
                    Ok(None)
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MvtReport {
    #[serde(with = "rational::serde_str")]
    pub a: Rational,
    #[serde(with = "rational::serde_str")]
    pub b: Rational,
    #[serde(with = "rational::serde_str")]
    pub c: Rational,
    #[serde(with = "rational::serde_str")]
    pub tau: Rational,
    pub preconditions: Vec<Check>,
    /// `1/tau < g' < 1 + 1/tau` on `[0, c]`, as far as the bounds show.
    pub derivative_hypothesis: Check,
    pub g_c: CertifiedValue,
    pub positive: Check,
    pub lower: Check,
    pub upper: Check,
    /// Preconditions hold and `0 < a < g(c) < b` is certified.
    pub holds: bool,
}

/// Checks `0 < a < g(c) < b` with a certified enclosure of `g(c)` and reports
/// each precondition (`b - a >= c`, `tau a <= c`, `tau a <= b - a`) and
/// inequality separately. Violations are reported, never raised.
pub fn verify_mvt_bounds(a: &Rational, b: &Rational, c: &Rational, tau: &Rational, g: &MonotoneMap) -> Result<MvtReport> {
    let ta = tau * a;
    let preconditions = vec![
        Check::new("a, b, c > 0", a.is_positive() && b.is_positive() && c.is_positive(), format!("a = {a}, b = {b}, c = {c}")),
        Check::new("b - a >= c", b - a >= *c, format!("b - a = {}, c = {c}", b - a)),
        Check::new("tau a <= c", ta <= *c, format!("tau a = {ta}, c = {c}")),
        Check::new("tau a <= b - a", ta <= b - a, format!("tau a = {ta}, b - a = {}", b - a)),
    ];
    let g_c = g.eval(c)?;
    let lo_bound = tau.recip();
    let hi_bound = rational::one() + tau.recip();
    let derivative_hypothesis = match g.derivative_bounds(c)? {
        Some(r) => Check::new(
            "1/tau < g' < 1 + 1/tau on [0, c]",
            r.lo() > &lo_bound && r.hi() < &hi_bound,
            format!("g' in {r}, window ({lo_bound}, {hi_bound})"),
        ),
        None => Check::new("1/tau < g' < 1 + 1/tau on [0, c]", false, "g' bounds straddle zero"),
    };
    let positive = Check::new("0 < a", a.is_positive(), format!("a = {a}"));
    let lower = Check::new("a < g(c)", &g_c.lo > a, format!("g(c) in [{}, {}], a = {a}", g_c.lo, g_c.hi));
    let upper = Check::new("g(c) < b", &g_c.hi < b, format!("g(c) in [{}, {}], b = {b}", g_c.lo, g_c.hi));
    let holds = preconditions.iter().all(|c| c.holds) && positive.holds && lower.holds && upper.holds;
    Ok(MvtReport {
        a: a.clone(),
        b: b.clone(),
        c: c.clone(),
        tau: tau.clone(),
        preconditions,
        derivative_hypothesis,
        g_c,
        positive,
        lower,
        upper,
        holds,
    })
}

/// Found configuration `{x - t, x, x + f(t)}` with its certificates. Chains
/// list, for each of `x - t`, `x`, `x + f(t)`, the stage intervals holding it
/// at depths `0..=depth`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfigWitness {
    #[serde(with = "rational::serde_str")]
    pub x: Rational,
    pub t: ClosedInterval,
    pub ft: ClosedInterval,
    pub depth: usize,
    pub chains: [Vec<ClosedInterval>; 3],
}

impl ConfigWitness {
    pub fn t_value(&self) -> CertifiedValue {
        self.t.clone().into()
    }

    pub fn fx_value(&self) -> CertifiedValue {
        self.ft.clone().into()
    }

    /// Self-consistency checks that need no family: positivity, nesting,
    /// and that the three points sit in the deepest chain intervals.
    pub fn verify(&self, f: &FunctionSpec) -> Vec<Check> {
        let mut out = Vec::new();
        out.push(Check::new("t > 0", self.t.lo().is_positive(), format!("t in {}", self.t)));
        for (k, chain) in self.chains.iter().enumerate() {
            let nested = chain.len() == self.depth + 1 && chain.windows(2).all(|w| w[0].contains_interval(&w[1]));
            out.push(Check::new(format!("chain {} nested to depth {}", k + 1, self.depth), nested, format!("{} levels", chain.len())));
        }
        let last = |k: usize| self.chains[k].last();
        let left = self.t.affine(&int(-1), &self.x);
        out.push(Check::new(
            "x - t in its deepest interval",
            last(0).is_some_and(|iv| iv.contains_interval(&left)),
            format!("x - t in {left}"),
        ));
        out.push(Check::new(
            "x in every interval of its chain",
            !self.chains[1].is_empty() && self.chains[1].iter().all(|iv| iv.contains(&self.x)),
            format!("x = {}", self.x),
        ));
        let right = self.ft.affine(&int(1), &self.x);
        out.push(Check::new(
            "x + f(t) in its deepest interval",
            last(2).is_some_and(|iv| iv.contains_interval(&right)),
            format!("x + f(t) in {right}"),
        ));
        let image = ClosedInterval::spanning(functions::eval(f, self.t.lo()), functions::eval(f, self.t.hi()));
        out.push(Check::new(
            "f(t) enclosure meets ft",
            image.intersects(&self.ft),
            format!("f(t) in {image}, ft = {}", self.ft),
        ));
        out
    }

    /// Replays every chain interval against the family's stages.
    pub fn replay(&self, family: &StageFamily) -> Result<bool> {
        for chain in &self.chains {
            for (d, iv) in chain.iter().enumerate() {
                if !family.has_display(d, iv)? {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageCheck {
    pub depth: usize,
    #[serde(with = "rational::serde_opt")]
    pub thickness: Option<Rational>,
    #[serde(with = "rational::serde_str")]
    pub bound: Rational,
    pub holds: bool,
}

/// Everything a search decided on its way to the witness.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchReport {
    pub witness: ConfigWitness,
    pub f: FunctionSpec,
    #[serde(with = "rational::serde_str")]
    pub tau: Rational,
    #[serde(with = "rational::serde_opt")]
    pub rho: Option<Rational>,
    #[serde(with = "rational::serde_opt")]
    pub epsilon: Option<Rational>,
    #[serde(with = "rational::serde_opt")]
    pub delta: Option<Rational>,
    pub extracted_bridge: Option<ClosedInterval>,
    pub frame: GapFrame,
    pub reflected: bool,
    pub mvt: Option<MvtReport>,
    pub image_checks: Vec<ImageCheck>,
    pub verification: Vec<Check>,
}

#[derive(Clone, Debug)]
pub struct SearchConfig {
    pub rho: Option<Rational>,
    pub epsilon: Option<Rational>,
    /// Starting diameter for the shrink loop.
    pub delta: Option<Rational>,
    pub max_depth: usize,
    pub inverse_precision: Rational,
    /// When false, `f'(0)` may lie outside the derivative window and the
    /// window-derived bounds are not required (experimental).
    pub enforce_window: bool,
    pub budget: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            rho: None,
            epsilon: None,
            delta: None,
            max_depth: 34,
            inverse_precision: functions::default_precision(),
            enforce_window: true,
            budget: gaplemma::DEFAULT_BUDGET,
        }
    }
}

/// Outcome of testing conditions (3.1)-(3.2) for `f` and its inverse on
/// `(-delta, delta)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeltaCheck {
    #[serde(with = "rational::serde_str")]
    pub delta: Rational,
    /// Half-width of the bracket on which `f` is inverted.
    #[serde(with = "rational::serde_str")]
    pub radius: Rational,
    pub checks: Vec<Check>,
    pub holds: bool,
}

/// Checks, for `g = f` and `g = f^{-1}` and all `|x| < delta`:
/// `|g'(x) - g'(0)| < eps / (2 tau)` and (when `window`) `1/tau < g'(x) < 1 + 1/tau`.
/// Inverse bounds come from reciprocals of `f'` on `[-R, R]`, which covers
/// `f^{-1}(-delta, delta)` once `min f' * R >= delta`.
pub fn delta_conditions(f: &FunctionSpec, tau: &Rational, eps: &Rational, delta: &Rational, window: bool) -> DeltaCheck {
    let slope = f.slope_at_zero();
    let radius = if window || slope.is_zero() {
        tau * delta
    } else {
        delta * rational::max(tau, &(int(2) / slope.abs()))
    };
    let tol = eps / (int(2) * tau);
    let lo = tau.recip();
    let hi = rational::one() + tau.recip();
    let mut checks = Vec::new();

    let near = ClosedInterval::new(-delta.clone(), delta.clone()).unwrap();
    let df = functions::derivative_range(f, &near);
    let dev = rational::max(&(df.hi() - &slope), &(&slope - df.lo()));
    checks.push(Check::new("f: |f'(x) - f'(0)| < eps/(2 tau)", dev < tol, format!("f' in {df}, tolerance {tol}")));
    if window {
        checks.push(Check::new("f: 1/tau < f' < 1 + 1/tau", df.lo() > &lo && df.hi() < &hi, format!("f' in {df}")));
    }

    let wide = ClosedInterval::new(-radius.clone(), radius.clone()).unwrap();
    let dr = functions::derivative_range(f, &wide);
    let monotone = dr.lo().is_positive() || dr.hi().is_negative();
    checks.push(Check::new("f monotone on [-R, R]", monotone, format!("f' in {dr} on R = {radius}")));
    if monotone {
        let (small, large) = if dr.lo().is_positive() {
            (dr.lo().clone(), dr.hi().clone())
        } else {
            (-dr.hi(), -dr.lo())
        };
        checks.push(Check::new(
            "f([-R, R]) covers (-delta, delta)",
            &small * &radius >= *delta,
            format!("min |f'| * R = {}", &small * &radius),
        ));
        let ginv = [large.recip(), small.recip()];
        let g0 = slope.abs().recip();
        let gdev = rational::max(&(&ginv[1] - &g0), &(&g0 - &ginv[0]));
        checks.push(Check::new(
            "f^-1: |g'(x) - g'(0)| < eps/(2 tau)",
            gdev < tol,
            format!("|g'| in [{}, {}], tolerance {tol}", ginv[0], ginv[1]),
        ));
        if window {
            checks.push(Check::new(
                "f^-1: 1/tau < g' < 1 + 1/tau",
                slope.is_positive() && ginv[0] > lo && ginv[1] < hi,
                format!("g' in [{}, {}]", ginv[0], ginv[1]),
            ));
        }
    }
    let holds = checks.iter().all(|c| c.holds);
    DeltaCheck { delta: delta.clone(), radius, checks, holds }
}

const MAX_HALVINGS: usize = 64;
const MAX_IMAGE_RETRIES: usize = 6;

struct Views {
    first: StageFamily,
    second: StageFamily,
    reflected: bool,
}

fn views(k: &StageFamily, frame: &GapFrame, g: Option<(&FunctionSpec, &ClosedInterval, &Rational)>) -> Result<Views> {
    let (x, _, _, _) = frame.coordinates();
    let one = rational::one();
    if frame.left_ge_right {
        let first = k.restrict(&frame.left_bridge)?.affine(&-one.clone(), &x)?;
        let mut second = k.restrict(&frame.right_bridge)?.affine(&one, &-x.clone())?;
        if let Some((f, bracket, precision)) = g {
            second = second.inverse(f, bracket, precision)?;
        }
        Ok(Views { first, second, reflected: false })
    } else {
        let first = k.restrict(&frame.right_bridge)?.affine(&one, &-x.clone())?;
        let mut second = k.restrict(&frame.left_bridge)?.affine(&-one.clone(), &x)?;
        if let Some((f, _, _)) = g {
            second = second.forward(f)?;
        }
        Ok(Views { first, second, reflected: true })
    }
}

fn chain_displays(input: &StageFamily, nodes: &[Node]) -> Result<Vec<ClosedInterval>> {
    nodes
        .iter()
        .map(|n| input.display(n)?.ok_or_else(|| Error::Internal(format!("node {n} left the input family"))))
        .collect()
}

/// Turns a persistence certificate between the two views into a witness in
/// input coordinates.
fn assemble(
    input: &StageFamily,
    frame: &GapFrame,
    views: &Views,
    cert: &PersistentWitness,
    f: &FunctionSpec,
    bracket: Option<&ClosedInterval>,
    precision: &Rational,
) -> Result<ConfigWitness> {
    let (x, _, _, _) = frame.coordinates();
    let depth = cert.deepest().depth;
    let first_nodes: Vec<Node> = cert.levels.iter().map(|l| l.first_node.clone().unwrap()).collect();
    let second_nodes: Vec<Node> = cert.levels.iter().map(|l| l.second_node.clone().unwrap()).collect();
    let first_chain = chain_displays(input, &first_nodes)?;
    let second_chain = chain_displays(input, &second_nodes)?;
    let x_chain = input.chain_for_point(&x, depth)?.ok_or_else(|| {
        Error::Hypothesis(format!("the gap endpoint {x} is not kept by the family down to depth {depth}"))
    })?;
    let x_chain = chain_displays(input, &x_chain)?;
    let common = cert.deepest().common.clone();
    let too_wide = || Error::Precision(format!("enclosures at depth {depth} do not overlap after rounding"));
    let image = |iv: &ClosedInterval| -> Result<ClosedInterval> {
        Ok(ClosedInterval::spanning(functions::eval(f, iv.lo()), functions::eval(f, iv.hi())))
    };
    let (t, ft, chains) = if !views.reflected {
        // common holds t; the second chain holds x + f(t)
        let window = second_chain.last().unwrap().affine(&rational::one(), &-x.clone());
        let ft = image(&common)?.intersect(&window).ok_or_else(too_wide)?;
        (common, ft, [first_chain, x_chain, second_chain])
    } else {
        // common holds f(t); the second chain holds x - t
        let window = second_chain.last().unwrap().affine(&int(-1), &x);
        let t = match bracket {
            Some(br) => {
                let increasing = functions::monotone_direction(f, br)
                    .ok_or_else(|| Error::Domain(format!("f is not monotone on {br}")))?;
                let lo = functions::inverse_unchecked(f, common.lo(), br, precision, increasing)?;
                let hi = functions::inverse_unchecked(f, common.hi(), br, precision, increasing)?;
                if increasing {
                    ClosedInterval::new(lo.lo, hi.hi)?
                } else {
                    ClosedInterval::new(hi.lo, lo.hi)?
                }
            }
            None => common.clone(),
        };
        let t = t.intersect(&window).ok_or_else(too_wide)?;
        (t, common, [second_chain, x_chain, first_chain])
    };
    Ok(ConfigWitness { x, t, ft, depth, chains })
}

fn frame_stage(k: &StageFamily, max_depth: usize) -> Result<(CantorStage, usize)> {
    let depth = k.reference_depth(max_depth, REFERENCE_NODES);
    Ok((k.stage(depth)?, depth))
}

/// Three-term progression `{x - t, x, x + t}` with `x` an endpoint of the
/// largest gap. The long bridge is reflected onto the short one and the two
/// are intersected by nested chains down to `max_depth`.
pub fn find_3ap(family: &StageFamily, max_depth: usize, budget: usize) -> Result<SearchReport> {
    let (stage, _) = frame_stage(family, max_depth)?;
    let tau = stage::thickness(&stage)
        .map_err(|_| Error::Hypothesis("thickness undefined for a single interval; need thickness >= 1".into()))?
        .value;
    if tau < rational::one() {
        return Err(Error::Hypothesis(format!("thickness {tau} < 1")));
    }
    let frame = largest_gap_frame(&stage)?;
    let (_, a, b, c) = frame.coordinates();
    if !(a <= c && c <= b) {
        return Err(Error::Internal(format!("expected a <= c <= b, got a = {a}, c = {c}, b = {b}")));
    }
    let v = views(family, &frame, None)?;
    let cert = persistent(&v, max_depth, budget, None)?;
    let f = FunctionSpec::identity();
    let witness = assemble(family, &frame, &v, &cert, &f, None, &rational::one())?;
    let verification = witness.verify(&f);
    if let Some(bad) = verification.iter().find(|c| !c.holds) {
        return Err(Error::Internal(format!("witness check failed: {} ({})", bad.name, bad.detail)));
    }
    Ok(SearchReport {
        witness,
        f,
        tau,
        rho: None,
        epsilon: None,
        delta: None,
        extracted_bridge: None,
        reflected: v.reflected,
        frame,
        mvt: None,
        image_checks: Vec::new(),
        verification,
    })
}

/// Nested-chain search between the two views. `unguaranteed` names the
/// reason the gap lemma is not known to apply; without one an empty
/// intersection is an internal contradiction.
fn persistent(v: &Views, depth: usize, budget: usize, unguaranteed: Option<&str>) -> Result<PersistentWitness> {
    gaplemma::persistent_intersect(&v.first, &v.second, depth, budget).map_err(|e| match (e, unguaranteed) {
        (Error::EmptyIntersection(fail), Some(why)) => Error::Hypothesis(format!(
            "no common point of the two bridge images past depth {} ({why})",
            fail.depth
        )),
        (Error::EmptyIntersection(fail), None) => Error::Internal(format!(
            "the gap lemma failed: bridge images stop meeting at depth {}",
            fail.depth
        )),
        (other, _) => other,
    })
}

/// Configuration `{x - t, x, x + f(t)}` with `t > 0`.
///
/// Pipeline: shrink `delta` until the derivative conditions hold for `f` and
/// its inverse, extract a thick subset of diameter below `delta`, frame its
/// largest gap (reflecting and swapping `f` with its inverse when the right
/// bridge is longer), check `0 < a < g(c) < b`, check that the image stage
/// under `g` is thicker than `rho tau`, and intersect the reflected long
/// bridge with the image of the short one.
pub fn find_config(family: &StageFamily, f: &FunctionSpec, cfg: &SearchConfig) -> Result<SearchReport> {
    let relaxed = !cfg.enforce_window;
    let (tau, _) = reference_thickness(family, cfg.max_depth)?;
    if tau <= rational::one() {
        return Err(Error::Hypothesis(format!("thickness {tau} must exceed 1")));
    }
    let slope = f.slope_at_zero();
    let window = functions::derivative_window(&tau)?;
    if slope.is_zero() {
        return Err(Error::Hypothesis(format!(
            "f'(0) = 0 lies outside the derivative window {window}; need max(tau/(tau+1), 1/tau) < f'(0) < min(tau, 1+1/tau)"
        )));
    }
    if !relaxed && !window.contains(&slope) {
        return Err(Error::Hypothesis(format!(
            "f'(0) = {slope} lies outside the derivative window {window}; need max(tau/(tau+1), 1/tau) < f'(0) < min(tau, 1+1/tau)"
        )));
    }
    let rho = cfg.rho.clone().unwrap_or_else(|| (rational::one() + tau.recip()) / int(2));
    if !rho.is_positive() || rho >= rational::one() || &rho * &tau < rational::one() {
        return Err(Error::Domain(format!("rho = {rho} must lie in (0, 1) with rho * tau >= 1")));
    }
    let epsilon = cfg.epsilon.clone().unwrap_or_else(|| (rational::one() - &rho) / int(2));
    if !epsilon.is_positive() {
        return Err(Error::Domain(format!("epsilon must be positive, got {epsilon}")));
    }
    let hull = family.hull()?;
    let mut delta = cfg.delta.clone().unwrap_or_else(|| hull.length() / int(16));
    if !delta.is_positive() {
        return Err(Error::Domain(format!("delta must be positive, got {delta}")));
    }

    let mut last_image_failure = None;
    for _ in 0..MAX_IMAGE_RETRIES {
        let mut check = delta_conditions(f, &tau, &epsilon, &delta, !relaxed);
        let mut halvings = 0;
        while !check.holds {
            halvings += 1;
            if halvings > MAX_HALVINGS {
                let bad = check.checks.iter().find(|c| !c.holds).unwrap();
                return Err(Error::Hypothesis(format!(
                    "no delta down to {} satisfies {} ({})",
                    check.delta, bad.name, bad.detail
                )));
            }
            delta /= int(2);
            check = delta_conditions(f, &tau, &epsilon, &delta, !relaxed);
        }
        let radius = check.radius.clone();
        let bracket = ClosedInterval::new(-radius.clone(), radius)?;

        let ext = subset_extract(family, &delta, cfg.max_depth)?;
        let (kstage, kdepth) = frame_stage(&ext.family, cfg.max_depth)?;
        let frame = largest_gap_frame(&kstage).map_err(|_| Error::InsufficientDepth {
            message: format!("the extracted subset has no gap by depth {kdepth}"),
            required: kdepth + 1,
        })?;
        let (_, a, b, c) = frame.coordinates();

        let g = if frame.left_ge_right {
            MonotoneMap::Inverse { f: f.clone(), bracket: bracket.clone(), precision: cfg.inverse_precision.clone() }
        } else {
            MonotoneMap::Forward(f.clone())
        };
        // The bound can fail with every hypothesis met (long bridges with
        // c > tau a), so a failure only drops the guarantee; the chain search
        // below still certifies any intersection it finds.
        let mvt = verify_mvt_bounds(&a, &b, &c, &tau, &g)?;
        let unguaranteed = if relaxed {
            Some("search outside the derivative window".to_string())
        } else if !mvt.holds {
            let bad = mvt
                .preconditions
                .iter()
                .chain([&mvt.positive, &mvt.lower, &mvt.upper])
                .find(|c| !c.holds)
                .unwrap();
            Some(format!("mean-value bound failed: {} ({})", bad.name, bad.detail))
        } else {
            None
        };

        let v = views(&ext.family, &frame, Some((f, &bracket, &cfg.inverse_precision)))?;
        let bound = &rho * &tau;
        let image_checks = image_thickness(&v.second, kdepth, &bound)?;
        if let Some(bad) = image_checks.iter().find(|c| !c.holds) {
            last_image_failure = Some(format!(
                "image thickness {} <= rho tau = {bound} at depth {}",
                bad.thickness.as_ref().map_or("undefined".into(), ToString::to_string),
                bad.depth
            ));
            delta /= int(2);
            continue;
        }

        let cert = persistent(&v, cfg.max_depth, cfg.budget, unguaranteed.as_deref())?;
        let deepest = cert.deepest();
        if cfg.inverse_precision >= deepest.first.length() && !deepest.first.is_point() {
            return Err(Error::Precision(format!(
                "inverse precision {} is not below the node width {} at depth {}",
                cfg.inverse_precision,
                deepest.first.length(),
                deepest.depth
            )));
        }
        let witness = assemble(family, &frame, &v, &cert, f, Some(&bracket), &cfg.inverse_precision)?;
        let verification = witness.verify(f);
        if let Some(bad) = verification.iter().find(|c| !c.holds) {
            return Err(Error::Precision(format!("witness check failed: {} ({})", bad.name, bad.detail)));
        }
        return Ok(SearchReport {
            witness,
            f: f.clone(),
            tau,
            rho: Some(rho),
            epsilon: Some(epsilon),
            delta: Some(delta),
            extracted_bridge: Some(ext.bridge),
            reflected: v.reflected,
            frame,
            mvt: Some(mvt),
            image_checks,
            verification,
        });
    }
    Err(Error::Precision(format!(
        "image thickness stayed too low after {MAX_IMAGE_RETRIES} delta halvings: {}",
        last_image_failure.unwrap_or_default()
    )))
}

/// Exact thickness of the certified image stage at the deepest (up to four)
/// depths that fit the node limit and have a gap.
fn image_thickness(image: &StageFamily, max_depth: usize, bound: &Rational) -> Result<Vec<ImageCheck>> {
    let top = image.reference_depth(max_depth, REFERENCE_NODES);
    let mut out = Vec::new();
    for depth in (0..=top).rev() {
        let s = image.stage(depth)?;
        let Some(t) = stage::thickness_or_infinite(&s) else { break };
        let holds = &t > bound;
        out.push(ImageCheck { depth, thickness: Some(t), bound: bound.clone(), holds });
        if out.len() == 4 {
            break;
        }
    }
    out.reverse();
    Ok(out)
}

/// Checks of the five-interval set, grouped as in its avoidance argument.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CounterexampleReport {
    pub params: CounterexampleParams,
    pub ordering: Vec<Check>,
    /// `x = 0`: squared reflections of `I1`, `I2` land in `G4`, `G3`.
    pub at_zero: Vec<Check>,
    /// `x = -eps`: every admissible `t` has `t^2 < eps`.
    pub at_minus_eps: Vec<Check>,
    pub largest_gap: Check,
    pub thickness: Option<Check>,
    pub ratio_table: Vec<GapBridgeReport>,
    pub passed: bool,
}

impl CounterexampleReport {
    pub fn failures(&self) -> Vec<&Check> {
        self.ordering
            .iter()
            .chain(&self.at_zero)
            .chain(&self.at_minus_eps)
            .chain([&self.largest_gap])
            .chain(&self.thickness)
            .filter(|c| !c.holds)
            .collect()
    }
}

pub fn verify_counterexample(params: &CounterexampleParams, tol: &Rational) -> CounterexampleReport {
    verify_counterexample_parts(&constructions::counterexample_parts(params), tol)
}

/// Endpoint-exact verification of given parts, so tampered parts can be
/// checked as well.
pub fn verify_counterexample_parts(parts: &CounterexampleParts, tol: &Rational) -> CounterexampleReport {
    let params = parts.params.clone();
    let eps = &params.eps;
    let ordering: Vec<Check> = parts
        .ordering_checks()
        .into_iter()
        .map(|(name, ok)| Check::new(name, ok, String::new()))
        .collect();
    let (i1, i2) = (parts.interval(1), parts.interval(2));
    let (g3, g4) = (parts.gap(3), parts.gap(4));
    let sq = |iv: &ClosedInterval| {
        // t in -iv with iv < 0, so t^2 runs from hi^2 to lo^2
        (iv.hi() * iv.hi(), iv.lo() * iv.lo())
    };
    let (a1, b1) = sq(&i1);
    let (a2, b2) = sq(&i2);
    let at_zero = vec![
        Check::new("I1 < 0 and I2 < 0", i1.hi().is_negative() && i2.hi().is_negative(), format!("I1 = {i1}, I2 = {i2}")),
        Check::new("G4.lo < min (-I1)^2", g4.lo() < &a1, format!("{} < {a1}", g4.lo())),
        Check::new("max (-I1)^2 < G4.hi", &b1 < g4.hi(), format!("{b1} < {}", g4.hi())),
        Check::new("G3.lo < min (-I2)^2", g3.lo() < &a2, format!("{} < {a2}", g3.lo())),
        Check::new("max (-I2)^2 < G3.hi", &b2 < g3.hi(), format!("{b2} < {}", g3.hi())),
    ];
    let right = parts.interval(5).hi().clone();
    let left = -eps.clone() - parts.interval(1).lo();
    let reach = rational::max(&right, &left);
    let at_minus_eps = vec![Check::new(
        "max t^2 < eps",
        &reach * &reach < *eps,
        format!("t <= {reach}, t^2 <= {}, eps = {eps}", &reach * &reach),
    )];
    let (largest_gap, thickness, ratio_table) = match parts.stage() {
        Ok(s) => {
            let g = stage::largest_gap(&s).unwrap();
            let want = parts.gap(2);
            let is_g2 = g.lo.as_ref() == Some(want.lo()) && g.hi.as_ref() == Some(want.hi());
            let lg = Check::new("G2 is the largest gap", is_g2, format!("largest gap ({}, {})", g.lo.unwrap(), g.hi.unwrap()));
            let t = stage::thickness(&s).unwrap().value;
            let diff = (&t - &params.tau).abs();
            let th = Check::new(
                "thickness within tol of tau",
                &diff <= tol,
                format!("thickness {t} (~{:.9}), tau {}, tol {tol}", rational::to_f64(&t), params.tau),
            );
            (lg, Some(th), stage::all_bridges(&s))
        }
        Err(e) => (Check::new("G2 is the largest gap", false, e.to_string()), None, Vec::new()),
    };
    let passed = ordering.iter().all(|c| c.holds)
        && at_zero.iter().all(|c| c.holds)
        && at_minus_eps.iter().all(|c| c.holds)
        && largest_gap.holds
        && thickness.as_ref().is_some_and(|c| c.holds);
    CounterexampleReport { params, ordering, at_zero, at_minus_eps, largest_gap, thickness, ratio_table, passed }
}

/// One point of the experimental slope sweep.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepRow {
    #[serde(with = "rational::serde_str")]
    pub slope: Rational,
    pub in_window: bool,
    pub found: bool,
    pub error: Option<String>,
}

/// Runs [`find_config`] with the window check disabled for
/// `f(t) = slope t + tail(t)` at each slope. Experimental: outside the
/// window nothing guarantees success.
pub fn sweep(family: &StageFamily, slopes: &[Rational], tail: &[Rational], cfg: &SearchConfig) -> Result<Vec<SweepRow>> {
    let (tau, _) = reference_thickness(family, cfg.max_depth)?;
    let window = functions::derivative_window(&tau)?;
    let relaxed = SearchConfig { enforce_window: false, ..cfg.clone() };
    slopes
        .par_iter()
        .map(|slope| {
            let mut coeffs = vec![slope.clone()];
            coeffs.extend(tail.iter().cloned());
            let f = FunctionSpec::new(coeffs)?;
            let outcome = find_config(family, &f, &relaxed);
            Ok(SweepRow {
                slope: slope.clone(),
                in_window: window.contains(slope),
                found: outcome.is_ok(),
                error: outcome.err().map(|e| e.to_string()),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructions::middle_alpha;
    use crate::rational::rat;

    fn iv(a: Rational, b: Rational) -> ClosedInterval {
        ClosedInterval::new(a, b).unwrap()
    }

    #[test]
    fn frame_examples() {
        let fr = largest_gap_frame(&middle_alpha(&rat(1, 3), 2).unwrap()).unwrap();
        assert_eq!((fr.gap.lo.clone().unwrap(), fr.gap.hi.clone().unwrap()), (rat(1, 3), rat(2, 3)));
        assert_eq!(fr.left_bridge.length(), rat(1, 3));
        assert!(fr.left_ge_right);
        let two = CantorStage::new(vec![iv(int(0), int(1)), iv(int(3), int(4))], 0).unwrap();
        let fr = largest_gap_frame(&two).unwrap();
        assert_eq!((fr.left_bridge, fr.right_bridge), (iv(int(0), int(1)), iv(int(3), int(4))));
        assert!(largest_gap_frame(&CantorStage::unit(iv(int(0), int(1)))).is_err());
    }

    #[test]
    fn mvt_examples() {
        let id = MonotoneMap::Forward(FunctionSpec::identity());
        let r = verify_mvt_bounds(&int(1), &int(3), &rat(3, 2), &rat(3, 2), &id).unwrap();
        assert!(r.holds);
        let tau = rat(3, 2);
        let slow = MonotoneMap::Forward(FunctionSpec::linear(tau.recip() / int(2)));
        let r = verify_mvt_bounds(&int(1), &int(3), &rat(3, 2), &tau, &slow).unwrap();
        assert!(!r.holds && !r.lower.holds && r.upper.holds);
        assert!(!r.derivative_hypothesis.holds);
    }

    #[test]
    fn three_ap_on_middle_thirds() {
        let fam = StageFamily::middle_alpha(&rat(1, 3)).unwrap();
        let rep = find_3ap(&fam, 12, gaplemma::DEFAULT_BUDGET).unwrap();
        assert_eq!(rep.witness.x, rat(2, 3));
        assert_eq!(rep.witness.t, ClosedInterval::point(rat(1, 3)));
        assert!(rep.witness.replay(&fam).unwrap());
    }

    #[test]
    fn extraction_shrinks_hull() {
        let fam = StageFamily::middle_alpha(&rat(1, 3)).unwrap();
        let ext = subset_extract(&fam, &rat(1, 10), 20).unwrap();
        assert!(ext.bridge.length() < rat(1, 10));
        assert_eq!(ext.family.stage_thickness(ext.check_depth).unwrap(), Some(int(1)));
    }

    #[test]
    fn square_is_rejected() {
        let fam = StageFamily::middle_alpha(&rat(1, 5)).unwrap();
        let err = find_config(&fam, &FunctionSpec::parse("0,1").unwrap(), &SearchConfig::default()).unwrap_err();
        assert!(matches!(err, Error::Hypothesis(_)), "{err}");
    }

    #[test]
    fn counterexample_report_passes() {
        let tol = rat(1, 1_000_000);
        let p = constructions::counterexample_calibrate(&rat(101, 100), &rat(1, 1000), &tol).unwrap();
        let rep = verify_counterexample(&p, &tol);
        assert!(rep.passed, "{:?}", rep.failures());
    }
}
