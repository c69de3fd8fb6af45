//! Refinement families: lazily generated sequences of nested stages, viewed
//! through a window and a chain of coordinate maps.
//!
//! A family never materializes a stage unless asked. Searches walk the tree
//! of nodes (one node per interval per depth) and only expand the branches
//! they need, which keeps depth 30+ searches on self-similar sets cheap.

use std::fmt;
use std::sync::Arc;

use num_traits::{Signed, Zero};

use crate::constructions::middle_alpha_children;
use crate::error::{Error, Result};
use crate::functions::{self, FunctionSpec};
use crate::rational::{self, int, Rational};
use crate::stage::{self, CantorStage, ClosedInterval};

/// Stage count above which [`StageFamily::stage`] refuses to materialize.
pub const STAGE_NODE_LIMIT: usize = 1 << 16;

#[derive(Clone, Debug)]
pub enum Source {
    /// Middle-α set on `[0, 1]`, generated on demand to any depth.
    MiddleAlpha { alpha: Rational, beta: Rational },
    /// Explicit nested stages. Past the last stage every interval is its own
    /// only child.
    Stages(Vec<Arc<CantorStage>>),
}

impl Source {
    fn roots(&self) -> Vec<ClosedInterval> {
        match self {
            Source::MiddleAlpha { .. } => {
                vec![ClosedInterval::new(rational::zero(), rational::one()).unwrap()]
            }
            Source::Stages(stages) => stages[0].intervals().to_vec(),
        }
    }

    fn children(&self, depth: usize, iv: &ClosedInterval) -> Vec<ClosedInterval> {
        match self {
            Source::MiddleAlpha { beta, .. } => middle_alpha_children(iv, beta).to_vec(),
            Source::Stages(stages) => match stages.get(depth + 1) {
                None => vec![iv.clone()],
                Some(next) => {
                    let ivs = next.intervals();
                    let start = ivs.partition_point(|c| c.lo() < iv.lo());
                    ivs[start..].iter().take_while(|c| c.hi() <= iv.hi()).cloned().collect()
                }
            },
        }
    }
}

/// One coordinate change applied to node intervals on display.
#[derive(Clone, Debug)]
pub enum MapStep {
    Affine { scale: Rational, shift: Rational },
    /// Exact image under a polynomial that is monotone on the family's hull.
    Forward(FunctionSpec),
    /// Image under the inverse of `f` restricted to `bracket`, rounded
    /// outward to the bisection precision.
    Inverse { f: FunctionSpec, bracket: ClosedInterval, precision: Rational, increasing: bool },
}

impl MapStep {
    fn apply(&self, iv: &ClosedInterval) -> Result<ClosedInterval> {
        Ok(match self {
            MapStep::Affine { scale, shift } => iv.affine(scale, shift),
            MapStep::Forward(f) => {
                ClosedInterval::spanning(functions::eval(f, iv.lo()), functions::eval(f, iv.hi()))
            }
            MapStep::Inverse { f, bracket, precision, increasing } => {
                let at_lo = functions::inverse_unchecked(f, iv.lo(), bracket, precision, *increasing)?;
                let at_hi = functions::inverse_unchecked(f, iv.hi(), bracket, precision, *increasing)?;
                if *increasing {
                    ClosedInterval::new(at_lo.lo, at_hi.hi)?
                } else {
                    ClosedInterval::new(at_hi.lo, at_lo.hi)?
                }
            }
        })
    }

    fn is_exact(&self) -> bool {
        !matches!(self, MapStep::Inverse { .. })
    }
}

/// An interval of the source construction at a given depth, in source
/// coordinates and before clipping to the window.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Node {
    pub depth: usize,
    pub interval: ClosedInterval,
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "depth {} {}", self.depth, self.interval)
    }
}

#[derive(Clone, Debug)]
pub struct StageFamily {
    source: Arc<Source>,
    window: Option<ClosedInterval>,
    maps: Vec<MapStep>,
}

impl StageFamily {
    pub fn middle_alpha(alpha: &Rational) -> Result<Self> {
        if !alpha.is_positive() || alpha >= &rational::one() {
            return Err(Error::Domain(format!("alpha must lie in (0, 1), got {alpha}")));
        }
        let beta = (rational::one() - alpha) / int(2);
        Ok(Self::from_source(Source::MiddleAlpha { alpha: alpha.clone(), beta }))
    }

    /// Family from explicit stages; stage `k` is used as depth `k` and must
    /// refine stage `k - 1`.
    pub fn from_stages(stages: Vec<CantorStage>) -> Result<Self> {
        if stages.is_empty() {
            return Err(Error::Domain("a family needs at least one stage".into()));
        }
        let mut linked: Vec<Arc<CantorStage>> = Vec::with_capacity(stages.len());
        for (k, s) in stages.into_iter().enumerate() {
            let s = s.relabel(k);
            let s = match linked.last() {
                Some(prev) => s.with_parent(prev.clone())?,
                None => s,
            };
            linked.push(Arc::new(s));
        }
        Ok(Self::from_source(Source::Stages(linked)))
    }

    /// A single stage that never refines.
    pub fn single(stage: CantorStage) -> Self {
        Self::from_source(Source::Stages(vec![Arc::new(stage.relabel(0))]))
    }

    fn from_source(source: Source) -> Self {
        StageFamily { source: Arc::new(source), window: None, maps: Vec::new() }
    }

    pub fn source(&self) -> &Source {
        &self.source
    }

    pub fn window(&self) -> Option<&ClosedInterval> {
        self.window.as_ref()
    }

    pub fn maps(&self) -> &[MapStep] {
        &self.maps
    }

    /// Depth of the last explicit stage, `None` for generated sources.
    pub fn finite_depth(&self) -> Option<usize> {
        match &*self.source {
            Source::MiddleAlpha { .. } => None,
            Source::Stages(s) => Some(s.len() - 1),
        }
    }

    fn keeps(&self, iv: &ClosedInterval) -> bool {
        self.window.as_ref().is_none_or(|w| w.intersects(iv))
    }

    pub fn roots(&self) -> Vec<Node> {
        self.source
            .roots()
            .into_iter()
            .filter(|iv| self.keeps(iv))
            .map(|interval| Node { depth: 0, interval })
            .collect()
    }

    pub fn children(&self, node: &Node) -> Vec<Node> {
        self.source
            .children(node.depth, &node.interval)
            .into_iter()
            .filter(|iv| self.keeps(iv))
            .map(|interval| Node { depth: node.depth + 1, interval })
            .collect()
    }

    /// Node interval clipped to the window, in source coordinates.
    pub fn clip(&self, node: &Node) -> Option<ClosedInterval> {
        match &self.window {
            Some(w) => node.interval.intersect(w),
            None => Some(node.interval.clone()),
        }
    }

    /// The node as it appears in this family's coordinates.
    pub fn display(&self, node: &Node) -> Result<Option<ClosedInterval>> {
        let Some(mut iv) = self.clip(node) else { return Ok(None) };
        for m in &self.maps {
            iv = m.apply(&iv)?;
        }
        Ok(Some(iv))
    }

    /// Like [`StageFamily::display`], but when the maps round outward the
    /// result is also cut down to the parent's display, which holds the same
    /// true image.
    pub fn display_within(&self, node: &Node, parent: Option<&ClosedInterval>) -> Result<Option<ClosedInterval>> {
        let Some(iv) = self.display(node)? else { return Ok(None) };
        match parent {
            Some(p) if !self.is_exact() => Ok(iv.intersect(p)),
            _ => Ok(Some(iv)),
        }
    }

    /// True when every display is the exact image of the clipped node.
    pub fn is_exact(&self) -> bool {
        self.maps.iter().all(MapStep::is_exact)
    }

    fn affine_only(&self) -> bool {
        self.maps.iter().all(|m| matches!(m, MapStep::Affine { .. }))
    }

    /// Source point for a display point; affine maps only.
    fn to_source(&self, p: &Rational) -> Result<Rational> {
        let mut x = p.clone();
        for m in self.maps.iter().rev() {
            match m {
                MapStep::Affine { scale, shift } => x = (x - shift) / scale,
                _ => return Err(Error::Domain("cannot pull back through a nonlinear map".into())),
            }
        }
        Ok(x)
    }

    pub fn nodes_at(&self, depth: usize, limit: usize) -> Result<Vec<Node>> {
        let mut level = self.roots();
        for _ in 0..depth {
            let mut next = Vec::with_capacity(level.len() * 2);
            for n in &level {
                next.extend(self.children(n));
                if next.len() > limit {
                    return Err(Error::Budget(limit));
                }
            }
            level = next;
        }
        Ok(level)
    }

    /// Materialized stage at `depth` in display coordinates. Overlapping
    /// displays (possible after outward rounding) are merged.
    pub fn stage(&self, depth: usize) -> Result<CantorStage> {
        let mut ivs = Vec::new();
        for n in self.nodes_at(depth, STAGE_NODE_LIMIT)? {
            if let Some(iv) = self.display(&n)? {
                ivs.push(iv);
            }
        }
        if ivs.is_empty() {
            return Err(Error::Domain(format!("family is empty at depth {depth}")));
        }
        ivs.sort_by(|a, b| a.lo().cmp(b.lo()));
        let mut merged: Vec<ClosedInterval> = Vec::with_capacity(ivs.len());
        for iv in ivs {
            match merged.last_mut() {
                Some(last) if iv.lo() <= last.hi() => {
                    if iv.hi() > last.hi() {
                        *last = ClosedInterval::new(last.lo().clone(), iv.hi().clone())?;
                    }
                }
                _ => merged.push(iv),
            }
        }
        CantorStage::new_degenerate(merged, depth)
    }

    /// Deepest depth `<= max_depth` whose node count stays within `limit`.
    pub fn reference_depth(&self, max_depth: usize, limit: usize) -> usize {
        let mut level = self.roots();
        let mut depth = 0;
        while depth < max_depth {
            let next: Vec<Node> = level.iter().flat_map(|n| self.children(n)).collect();
            if next.len() > limit {
                break;
            }
            level = next;
            depth += 1;
            if self.finite_depth().is_some_and(|d| depth >= d) {
                break;
            }
        }
        depth
    }

    /// Convex hull of the display at depth 0.
    pub fn hull(&self) -> Result<ClosedInterval> {
        let mut out: Option<ClosedInterval> = None;
        for n in self.roots() {
            if let Some(iv) = self.display(&n)? {
                out = Some(match out {
                    None => iv,
                    Some(h) => ClosedInterval::spanning(
                        rational::min(h.lo(), iv.lo()),
                        rational::max(h.hi(), iv.hi()),
                    ),
                });
            }
        }
        out.ok_or_else(|| Error::Domain("family is empty".into()))
    }

    /// Restriction to a window given in display coordinates. Only possible
    /// while every map is affine.
    pub fn restrict(&self, window: &ClosedInterval) -> Result<Self> {
        if !self.affine_only() {
            return Err(Error::Domain("restrict must come before nonlinear maps".into()));
        }
        let src = ClosedInterval::spanning(self.to_source(window.lo())?, self.to_source(window.hi())?);
        let combined = match &self.window {
            Some(w) => w.intersect(&src),
            None => Some(src),
        }
        .ok_or_else(|| Error::Domain(format!("window {window} does not meet the family")))?;
        let out = StageFamily { window: Some(combined), ..self.clone() };
        if out.roots().is_empty() {
            return Err(Error::Domain(format!("window {window} does not meet the family")));
        }
        Ok(out)
    }

    pub fn affine(&self, scale: &Rational, shift: &Rational) -> Result<Self> {
        if scale.is_zero() {
            return Err(Error::Domain("affine scale must be nonzero".into()));
        }
        let mut out = self.clone();
        out.maps.push(MapStep::Affine { scale: scale.clone(), shift: shift.clone() });
        Ok(out)
    }

    /// Image under `f`, which must be monotone on the current hull.
    pub fn forward(&self, f: &FunctionSpec) -> Result<Self> {
        let hull = self.hull()?;
        if functions::monotone_direction(f, &hull).is_none() {
            return Err(Error::Domain(format!("f is not monotone on the family hull {hull}")));
        }
        let mut out = self.clone();
        out.maps.push(MapStep::Forward(f.clone()));
        Ok(out)
    }

    /// Image under the inverse of `f` on `bracket`; the current hull must
    /// lie in `f(bracket)`.
    pub fn inverse(&self, f: &FunctionSpec, bracket: &ClosedInterval, precision: &Rational) -> Result<Self> {
        let increasing = functions::monotone_direction(f, bracket)
            .ok_or_else(|| Error::Domain(format!("f is not monotone on {bracket}")))?;
        let image = ClosedInterval::spanning(functions::eval(f, bracket.lo()), functions::eval(f, bracket.hi()));
        let hull = self.hull()?;
        if !image.contains_interval(&hull) {
            return Err(Error::Range(format!("family hull {hull} is not inside f({bracket}) = {image}")));
        }
        let mut out = self.clone();
        out.maps.push(MapStep::Inverse {
            f: f.clone(),
            bracket: bracket.clone(),
            precision: precision.clone(),
            increasing,
        });
        Ok(out)
    }

    /// Thickness of the materialized stage at `depth`; `None` when the stage
    /// has no gap.
    pub fn stage_thickness(&self, depth: usize) -> Result<Option<Rational>> {
        Ok(stage::thickness_or_infinite(&self.stage(depth)?))
    }

    /// Chain of nodes containing the display point `p` at depths
    /// `0..=depth`, or `None` once `p` falls in a gap.
    pub fn chain_for_point(&self, p: &Rational, depth: usize) -> Result<Option<Vec<Node>>> {
        let src = self.to_source(p)?;
        let find = |nodes: Vec<Node>| {
            nodes.into_iter().find(|n| self.clip(n).is_some_and(|c| c.contains(&src)))
        };
        let Some(mut node) = find(self.roots()) else { return Ok(None) };
        let mut chain = vec![node.clone()];
        for _ in 0..depth {
            match find(self.children(&node)) {
                Some(child) => node = child,
                None => return Ok(None),
            }
            chain.push(node.clone());
        }
        Ok(Some(chain))
    }

    /// Whether `target` is the display of some node at `depth`.
    pub fn has_display(&self, depth: usize, target: &ClosedInterval) -> Result<bool> {
        let mut candidates = self.roots();
        for d in 0..=depth {
            let mut hit = None;
            for n in candidates {
                if let Some(iv) = self.display(&n)? {
                    if iv.contains_interval(target) {
                        hit = Some(n);
                        break;
                    }
                }
            }
            let Some(n) = hit else { return Ok(false) };
            if d == depth {
                return Ok(self.display(&n)?.as_ref() == Some(target));
            }
            candidates = self.children(&n);
        }
        unreachable!()
    }
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
    fn lazy_matches_materialized() {
        let fam = StageFamily::middle_alpha(&rat(1, 3)).unwrap();
        for d in 0..6 {
            assert_eq!(fam.stage(d).unwrap(), middle_alpha(&rat(1, 3), d).unwrap());
        }
        let explicit = StageFamily::from_stages(
            (0..4).map(|d| middle_alpha(&rat(1, 3), d).unwrap()).collect(),
        )
        .unwrap();
        assert_eq!(explicit.stage(3).unwrap(), fam.stage(3).unwrap());
        // stationary past the last stage
        assert_eq!(explicit.stage(5).unwrap().intervals(), fam.stage(3).unwrap().intervals());
    }

    #[test]
    fn restrict_then_reflect() {
        let fam = StageFamily::middle_alpha(&rat(1, 3)).unwrap();
        let r = fam.restrict(&iv(rat(2, 9), rat(7, 9))).unwrap();
        let s = r.stage(2).unwrap();
        assert_eq!(stage::thickness(&s).unwrap().value, rat(1, 3));
        let refl = r.affine(&int(-1), &int(1)).unwrap();
        assert_eq!(refl.stage(2).unwrap(), s);
        // restricting a reflected view uses display coordinates
        let left = fam.affine(&int(-1), &int(0)).unwrap().restrict(&iv(int(-1), rat(-2, 3))).unwrap();
        assert_eq!(left.stage(1).unwrap().intervals(), &[iv(int(-1), rat(-2, 3))]);
    }

    #[test]
    fn inverse_view_contains_true_image() {
        let f = FunctionSpec::parse("1,1/10").unwrap();
        let fam = StageFamily::middle_alpha(&rat(1, 5)).unwrap();
        let bracket = iv(int(0), int(1));
        let view = fam.inverse(&f, &bracket, &rational::pow2(-30)).unwrap();
        for n in fam.nodes_at(3, 100).unwrap() {
            let shown = view.display(&n).unwrap().unwrap();
            let back = shown.lo().clone();
            assert!(functions::eval(&f, &back) <= *n.interval.lo());
            assert!(functions::eval(&f, shown.hi()) >= *n.interval.hi());
        }
        assert!(fam.inverse(&FunctionSpec::parse("0,1").unwrap(), &iv(int(-1), int(1)), &rat(1, 8)).is_err());
    }

    #[test]
    fn point_chains_and_replay() {
        let fam = StageFamily::middle_alpha(&rat(1, 3)).unwrap();
        let chain = fam.chain_for_point(&rat(2, 3), 5).unwrap().unwrap();
        assert_eq!(chain.len(), 6);
        assert_eq!(chain[5].interval, iv(rat(2, 3), rat(2, 3) + rational::pow2(0) / int(243)));
        assert!(fam.chain_for_point(&rat(1, 2), 3).unwrap().is_none());
        for n in &chain {
            assert!(fam.has_display(n.depth, &n.interval).unwrap());
        }
        assert!(!fam.has_display(2, &iv(int(0), rat(1, 3))).unwrap());
    }

    #[test]
    fn reference_depth_respects_limit() {
        let fam = StageFamily::middle_alpha(&rat(1, 3)).unwrap();
        assert_eq!(fam.reference_depth(20, 64), 6);
        assert_eq!(fam.reference_depth(3, 64), 3);
    }
}
