//! Finite unions of closed rational intervals, their gaps and bridges, and
//! Newhouse thickness.
//!
//! A [`CantorStage`] stands in for a Cantor set at a finite construction
//! depth. Thickness is computed for the finite union itself: the gaps are the
//! ones present at this depth. For the generators in this crate the stage
//! thickness does not change with depth, so it equals the thickness of the
//! limit set.

use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use num_traits::{Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::rational::{self, Rational};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ClosedInterval {
    lo: Rational,
    hi: Rational,
}

impl ClosedInterval {
    pub fn new(lo: Rational, hi: Rational) -> Result<Self> {
        if lo > hi {
            return Err(Error::Domain(format!("interval [{lo}, {hi}] has lo > hi")));
        }
        Ok(ClosedInterval { lo, hi })
    }

    pub fn point(p: Rational) -> Self {
        ClosedInterval { lo: p.clone(), hi: p }
    }

    /// Interval spanned by two values in either order.
    pub fn spanning(a: Rational, b: Rational) -> Self {
        if a <= b {
            ClosedInterval { lo: a, hi: b }
        } else {
            ClosedInterval { lo: b, hi: a }
        }
    }

    pub fn lo(&self) -> &Rational {
        &self.lo
    }

    pub fn hi(&self) -> &Rational {
        &self.hi
    }

    pub fn length(&self) -> Rational {
        &self.hi - &self.lo
    }

    pub fn midpoint(&self) -> Rational {
        (&self.lo + &self.hi) / rational::int(2)
    }

    pub fn is_point(&self) -> bool {
        self.lo == self.hi
    }

    pub fn contains(&self, p: &Rational) -> bool {
        &self.lo <= p && p <= &self.hi
    }

    pub fn contains_interval(&self, other: &ClosedInterval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    pub fn intersect(&self, other: &ClosedInterval) -> Option<ClosedInterval> {
        let lo = rational::max(&self.lo, &other.lo);
        let hi = rational::min(&self.hi, &other.hi);
        (lo <= hi).then_some(ClosedInterval { lo, hi })
    }

    pub fn intersects(&self, other: &ClosedInterval) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }

    /// Image under `x -> scale * x + shift`.
    pub fn affine(&self, scale: &Rational, shift: &Rational) -> ClosedInterval {
        ClosedInterval::spanning(scale * &self.lo + shift, scale * &self.hi + shift)
    }
}

impl fmt::Display for ClosedInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

impl Serialize for ClosedInterval {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        [rational::format(&self.lo), rational::format(&self.hi)].serialize(s)
    }
}

impl<'de> Deserialize<'de> for ClosedInterval {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let [lo, hi] = <[String; 2]>::deserialize(d)?;
        let lo = rational::parse(&lo).map_err(serde::de::Error::custom)?;
        let hi = rational::parse(&hi).map_err(serde::de::Error::custom)?;
        ClosedInterval::new(lo, hi).map_err(serde::de::Error::custom)
    }
}

/// Which endpoint of a gap a bridge is attached to. `Left` is the gap's left
/// endpoint, whose bridge extends leftwards; `Right` mirrors it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GapKind {
    Bounded,
    LeftUnbounded,
    RightUnbounded,
}

/// A connected component of the complement of a stage. Unbounded gaps have
/// `None` on their infinite side.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Gap {
    pub kind: GapKind,
    #[serde(with = "rational::serde_opt")]
    pub lo: Option<Rational>,
    #[serde(with = "rational::serde_opt")]
    pub hi: Option<Rational>,
}

impl Gap {
    pub fn bounded(lo: Rational, hi: Rational) -> Gap {
        Gap { kind: GapKind::Bounded, lo: Some(lo), hi: Some(hi) }
    }

    pub fn is_bounded(&self) -> bool {
        self.kind == GapKind::Bounded
    }

    /// Length of a bounded gap; `None` for unbounded ones.
    pub fn length(&self) -> Option<Rational> {
        match (&self.lo, &self.hi) {
            (Some(lo), Some(hi)) => Some(hi - lo),
            _ => None,
        }
    }

    /// Whether the open gap contains the closed interval.
    pub fn contains_interval(&self, iv: &ClosedInterval) -> bool {
        let above = self.lo.as_ref().is_none_or(|lo| lo < iv.lo());
        let below = self.hi.as_ref().is_none_or(|hi| iv.hi() < hi);
        above && below
    }
}

impl fmt::Display for Gap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let lo = self.lo.as_ref().map_or("-inf".to_string(), |r| r.to_string());
        let hi = self.hi.as_ref().map_or("+inf".to_string(), |r| r.to_string());
        write!(f, "({lo}, {hi})")
    }
}

/// Finite union of pairwise disjoint closed intervals in increasing order.
#[derive(Clone, Debug)]
pub struct CantorStage {
    intervals: Vec<ClosedInterval>,
    depth: usize,
    degenerate: bool,
    parent: Option<Arc<CantorStage>>,
}

impl PartialEq for CantorStage {
    fn eq(&self, other: &Self) -> bool {
        self.depth == other.depth && self.intervals == other.intervals
    }
}

impl Eq for CantorStage {}

impl CantorStage {
    /// Strict constructor: nonempty, strictly increasing, no point intervals.
    pub fn new(intervals: Vec<ClosedInterval>, depth: usize) -> Result<Self> {
        Self::build(intervals, depth, false)
    }

    /// Like [`CantorStage::new`] but admits zero-length intervals.
    pub fn new_degenerate(intervals: Vec<ClosedInterval>, depth: usize) -> Result<Self> {
        Self::build(intervals, depth, true)
    }

    fn build(intervals: Vec<ClosedInterval>, depth: usize, allow_points: bool) -> Result<Self> {
        if intervals.is_empty() {
            return Err(Error::Domain("a stage needs at least one interval".into()));
        }
        for pair in intervals.windows(2) {
            if pair[0].hi() >= pair[1].lo() {
                return Err(Error::Domain(format!(
                    "intervals {} and {} are not strictly increasing and disjoint",
                    pair[0], pair[1]
                )));
            }
        }
        let has_points = intervals.iter().any(ClosedInterval::is_point);
        if has_points && !allow_points {
            return Err(Error::Domain("zero-length interval in a non-degenerate stage".into()));
        }
        Ok(CantorStage { intervals, depth, degenerate: has_points, parent: None })
    }

    /// Single interval at depth 0.
    pub fn unit(iv: ClosedInterval) -> Self {
        let degenerate = iv.is_point();
        CantorStage { intervals: vec![iv], depth: 0, degenerate, parent: None }
    }

    /// Attaches the coarser stage this one refines.
    pub fn with_parent(mut self, parent: Arc<CantorStage>) -> Result<Self> {
        if !self.is_refinement_of(&parent) {
            return Err(Error::Domain(format!(
                "stage at depth {} is not contained in its parent at depth {}",
                self.depth, parent.depth
            )));
        }
        self.parent = Some(parent);
        Ok(self)
    }

    pub fn intervals(&self) -> &[ClosedInterval] {
        &self.intervals
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }

    pub fn parent(&self) -> Option<&Arc<CantorStage>> {
        self.parent.as_ref()
    }

    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn min(&self) -> &Rational {
        self.intervals[0].lo()
    }

    pub fn max(&self) -> &Rational {
        self.intervals[self.intervals.len() - 1].hi()
    }

    /// Convex hull.
    pub fn hull(&self) -> ClosedInterval {
        ClosedInterval { lo: self.min().clone(), hi: self.max().clone() }
    }

    /// Index of the interval containing `p`.
    pub fn locate(&self, p: &Rational) -> Option<usize> {
        let idx = self.intervals.partition_point(|iv| iv.hi() < p);
        (idx < self.intervals.len() && self.intervals[idx].contains(p)).then_some(idx)
    }

    pub fn contains_point(&self, p: &Rational) -> bool {
        self.locate(p).is_some()
    }

    /// Index of the interval containing all of `iv`.
    pub fn locate_interval(&self, iv: &ClosedInterval) -> Option<usize> {
        self.locate(iv.lo()).filter(|&i| self.intervals[i].contains_interval(iv))
    }

    /// Every interval of `self` lies inside some interval of `coarser`.
    pub fn is_refinement_of(&self, coarser: &CantorStage) -> bool {
        self.intervals.iter().all(|iv| coarser.locate_interval(iv).is_some())
    }

    /// Lengths of the bounded gaps, left to right.
    pub fn gap_lengths(&self) -> Vec<Rational> {
        self.intervals.windows(2).map(|w| w[1].lo() - w[0].hi()).collect()
    }

    /// Same intervals, new depth label.
    pub fn relabel(mut self, depth: usize) -> Self {
        self.depth = depth;
        self
    }
}

impl fmt::Display for CantorStage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, iv) in self.intervals.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{iv}")?;
        }
        write!(f, "}}")
    }
}

#[derive(Serialize, Deserialize)]
struct StageJson {
    depth: usize,
    intervals: Vec<ClosedInterval>,
}

impl Serialize for CantorStage {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        StageJson { depth: self.depth, intervals: self.intervals.clone() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for CantorStage {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = StageJson::deserialize(d)?;
        CantorStage::new_degenerate(raw.intervals, raw.depth).map_err(serde::de::Error::custom)
    }
}

/// Per-endpoint record: the gap, its bridge on `side`, and `|bridge| / |gap|`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GapBridgeReport {
    #[serde(with = "rational::serde_str")]
    pub endpoint: Rational,
    pub side: Side,
    pub gap: Gap,
    pub bridge: ClosedInterval,
    #[serde(with = "rational::serde_str")]
    pub local_thickness: Rational,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Thickness {
    #[serde(with = "rational::serde_str")]
    pub value: Rational,
    pub argmin: GapBridgeReport,
}

/// All gaps: the left-unbounded one, the bounded ones in increasing order,
/// then the right-unbounded one.
pub fn gaps(stage: &CantorStage) -> Vec<Gap> {
    let mut out = Vec::with_capacity(stage.len() + 1);
    out.push(Gap { kind: GapKind::LeftUnbounded, lo: None, hi: Some(stage.min().clone()) });
    out.extend(bounded_gaps(stage));
    out.push(Gap { kind: GapKind::RightUnbounded, lo: Some(stage.max().clone()), hi: None });
    out
}

pub fn bounded_gaps(stage: &CantorStage) -> impl Iterator<Item = Gap> + '_ {
    stage.intervals.windows(2).map(|w| Gap::bounded(w[0].hi().clone(), w[1].lo().clone()))
}

/// Bridge at a gap endpoint by direct scan: starting at `endpoint` and moving
/// away from the gap, keep absorbing gaps no longer than it; stop at the first
/// longer gap or at the end of the stage.
pub fn bridge_at(stage: &CantorStage, endpoint: &Rational, side: Side) -> Result<GapBridgeReport> {
    let ivs = &stage.intervals;
    let not_endpoint =
        || Error::Domain(format!("{endpoint} is not a {side:?} endpoint of a bounded gap"));
    // gap i lies between ivs[i] and ivs[i + 1]
    let gap_index = match side {
        Side::Left => {
            let i = ivs.partition_point(|iv| iv.hi() < endpoint);
            (i + 1 < ivs.len() && ivs[i].hi() == endpoint).then_some(i)
        }
        Side::Right => {
            let i = ivs.partition_point(|iv| iv.lo() < endpoint);
            (i >= 1 && i < ivs.len() && ivs[i].lo() == endpoint).then(|| i - 1)
        }
    }
    .ok_or_else(not_endpoint)?;

    let lengths = stage.gap_lengths();
    let own = &lengths[gap_index];
    let bridge = match side {
        Side::Right => {
            let mut last = gap_index + 1;
            while last + 1 < ivs.len() && &lengths[last] <= own {
                last += 1;
            }
            ClosedInterval { lo: endpoint.clone(), hi: ivs[last].hi().clone() }
        }
        Side::Left => {
            let mut first = gap_index;
            while first > 0 && &lengths[first - 1] <= own {
                first -= 1;
            }
            ClosedInterval { lo: ivs[first].lo().clone(), hi: endpoint.clone() }
        }
    };
    let gap = Gap::bounded(ivs[gap_index].hi().clone(), ivs[gap_index + 1].lo().clone());
    let local_thickness = bridge.length() / own;
    Ok(GapBridgeReport { endpoint: endpoint.clone(), side, gap, bridge, local_thickness })
}

/// Bridge reports for every gap endpoint, ordered by endpoint and then by
/// side (left first). Linear time via a next-longer-gap stack.
pub fn all_bridges(stage: &CantorStage) -> Vec<GapBridgeReport> {
    let ivs = &stage.intervals;
    let lengths = stage.gap_lengths();
    let m = lengths.len();
    if m == 0 {
        return Vec::new();
    }
    // right_stop[i]: index of the first gap j > i with |g_j| > |g_i|, else m
    let mut right_stop = vec![m; m];
    let mut stack: Vec<usize> = Vec::new();
    for j in 0..m {
        while let Some(&i) = stack.last() {
            if lengths[j] > lengths[i] {
                right_stop[i] = j;
                stack.pop();
            } else {
                break;
            }
        }
        stack.push(j);
    }
    // left_stop[i]: index of the last gap j < i with |g_j| > |g_i|, if any
    let mut left_stop: Vec<Option<usize>> = vec![None; m];
    stack.clear();
    for j in (0..m).rev() {
        while let Some(&i) = stack.last() {
            if lengths[j] > lengths[i] {
                left_stop[i] = Some(j);
                stack.pop();
            } else {
                break;
            }
        }
        stack.push(j);
    }

    let mut reports = Vec::with_capacity(2 * m);
    for i in 0..m {
        let gap = Gap::bounded(ivs[i].hi().clone(), ivs[i + 1].lo().clone());
        // the bridge ends at the interval just before the stopping gap
        let left_lo = match left_stop[i] {
            Some(j) => ivs[j + 1].lo().clone(),
            None => ivs[0].lo().clone(),
        };
        let left = ClosedInterval { lo: left_lo, hi: ivs[i].hi().clone() };
        let right = ClosedInterval { lo: ivs[i + 1].lo().clone(), hi: ivs[right_stop[i]].hi().clone() };
        reports.push(GapBridgeReport {
            endpoint: ivs[i].hi().clone(),
            side: Side::Left,
            gap: gap.clone(),
            local_thickness: left.length() / &lengths[i],
            bridge: left,
        });
        reports.push(GapBridgeReport {
            endpoint: ivs[i + 1].lo().clone(),
            side: Side::Right,
            gap,
            local_thickness: right.length() / &lengths[i],
            bridge: right,
        });
    }
    reports.sort_by(|a, b| a.endpoint.cmp(&b.endpoint).then(a.side.cmp(&b.side)));
    reports
}

/// Exact minimum of `|B| / |G|` over all gap endpoints. Ties go to the
/// leftmost endpoint, left side first.
pub fn thickness(stage: &CantorStage) -> Result<Thickness> {
    let mut best: Option<GapBridgeReport> = None;
    for report in all_bridges(stage) {
        let better = match &best {
            None => true,
            Some(b) => report.local_thickness.cmp(&b.local_thickness) == Ordering::Less,
        };
        if better {
            best = Some(report);
        }
    }
    let argmin = best.ok_or_else(|| {
        Error::Domain("thickness undefined for a single interval".into())
    })?;
    Ok(Thickness { value: argmin.local_thickness.clone(), argmin })
}

/// Thickness, treating a gapless stage as infinitely thick (`None`).
pub fn thickness_or_infinite(stage: &CantorStage) -> Option<Rational> {
    thickness(stage).ok().map(|t| t.value)
}

/// Clips every interval to `window`, dropping empty clips.
pub fn restrict(stage: &CantorStage, window: &ClosedInterval) -> Result<CantorStage> {
    let clipped: Vec<ClosedInterval> =
        stage.intervals.iter().filter_map(|iv| iv.intersect(window)).collect();
    if clipped.is_empty() {
        return Err(Error::Domain(format!("window {window} does not meet the stage")));
    }
    CantorStage::new_degenerate(clipped, stage.depth)
}

/// Exact image under `x -> scale * x + shift`.
pub fn affine_image(stage: &CantorStage, scale: &Rational, shift: &Rational) -> Result<CantorStage> {
    if scale.is_zero() {
        return Err(Error::Domain("affine scale must be nonzero".into()));
    }
    let mut out: Vec<ClosedInterval> =
        stage.intervals.iter().map(|iv| iv.affine(scale, shift)).collect();
    if scale.is_negative() {
        out.reverse();
    }
    CantorStage::new_degenerate(out, stage.depth)
}

/// Largest bounded gap, leftmost on ties.
pub fn largest_gap(stage: &CantorStage) -> Option<Gap> {
    let mut best: Option<(usize, Rational)> = None;
    for (i, len) in stage.gap_lengths().into_iter().enumerate() {
        if best.as_ref().is_none_or(|(_, b)| &len > b) {
            best = Some((i, len));
        }
    }
    best.map(|(i, _)| {
        Gap::bounded(stage.intervals[i].hi().clone(), stage.intervals[i + 1].lo().clone())
    })
}

/// Unbounded or bounded gap of `stage` containing all of `iv`, if any.
pub fn gap_containing(stage: &CantorStage, iv: &ClosedInterval) -> Option<Gap> {
    if iv.hi() < stage.min() {
        return Some(Gap { kind: GapKind::LeftUnbounded, lo: None, hi: Some(stage.min().clone()) });
    }
    if iv.lo() > stage.max() {
        return Some(Gap { kind: GapKind::RightUnbounded, lo: Some(stage.max().clone()), hi: None });
    }
    let ivs = &stage.intervals;
    let i = ivs.partition_point(|s| s.hi() < iv.lo());
    // ivs[i - 1].hi < iv.lo; the gap after ivs[i - 1] holds iv iff iv ends before ivs[i]
    if i >= 1 && i < ivs.len() && iv.hi() < ivs[i].lo() {
        return Some(Gap::bounded(ivs[i - 1].hi().clone(), ivs[i].lo().clone()));
    }
    None
}

/// Parses a stage from JSON text; errors carry the byte offset.
pub fn stage_from_json(text: &str) -> Result<CantorStage> {
    serde_json::from_str(text).map_err(|e| json_error(text, &e))
}

/// Parses a JSON array of stages.
pub fn stages_from_json(text: &str) -> Result<Vec<CantorStage>> {
    serde_json::from_str(text).map_err(|e| json_error(text, &e))
}

pub fn stage_to_json(stage: &CantorStage) -> String {
    serde_json::to_string(stage).expect("stage serialization is infallible")
}

pub(crate) fn json_error(text: &str, e: &serde_json::Error) -> Error {
    let offset = byte_offset(text, e.line(), e.column());
    Error::Parse(format!("{e} (byte offset {offset})"))
}

fn byte_offset(text: &str, line: usize, column: usize) -> usize {
    if line == 0 {
        return 0;
    }
    let mut offset = 0;
    for (i, l) in text.split_inclusive('\n').enumerate() {
        if i + 1 == line {
            return offset + column.saturating_sub(1).min(l.len());
        }
        offset += l.len();
    }
    text.len()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, rat};

    fn iv(a: (i64, i64), b: (i64, i64)) -> ClosedInterval {
        ClosedInterval::new(rat(a.0, a.1), rat(b.0, b.1)).unwrap()
    }

    fn thirds2() -> CantorStage {
        CantorStage::new(
            vec![iv((0, 1), (1, 9)), iv((2, 9), (1, 3)), iv((2, 3), (7, 9)), iv((8, 9), (1, 1))],
            2,
        )
        .unwrap()
    }

    #[test]
    fn single_interval_has_only_unbounded_gaps() {
        let s = CantorStage::unit(iv((0, 1), (1, 1)));
        let g = gaps(&s);
        assert_eq!(g.len(), 2);
        assert_eq!(g[0].kind, GapKind::LeftUnbounded);
        assert_eq!(g[1].kind, GapKind::RightUnbounded);
        assert!(thickness(&s).is_err());
    }

    #[test]
    fn first_thirds_stage_gap() {
        let s = CantorStage::new(vec![iv((0, 1), (1, 3)), iv((2, 3), (1, 1))], 1).unwrap();
        let bounded: Vec<Gap> = bounded_gaps(&s).collect();
        assert_eq!(bounded, vec![Gap::bounded(rat(1, 3), rat(2, 3))]);
    }

    #[test]
    fn bridge_scan_on_second_thirds_stage() {
        let r = bridge_at(&thirds2(), &rat(2, 3), Side::Right).unwrap();
        assert_eq!(r.bridge, iv((2, 3), (1, 1)));
        assert_eq!(r.local_thickness, int(1));
    }

    #[test]
    fn two_interval_left_bridge() {
        let s = CantorStage::new(vec![iv((0, 1), (1, 1)), iv((2, 1), (3, 1))], 1).unwrap();
        let r = bridge_at(&s, &int(1), Side::Left).unwrap();
        assert_eq!(r.bridge, iv((0, 1), (1, 1)));
        assert_eq!(r.local_thickness, int(1));
    }

    #[test]
    fn bridge_rejects_non_endpoints() {
        let s = thirds2();
        assert!(bridge_at(&s, &rat(1, 2), Side::Left).is_err());
        // 2/3 is a right endpoint, not a left one
        assert!(bridge_at(&s, &rat(2, 3), Side::Left).is_err());
        // 0 is the stage minimum, not a gap endpoint
        assert!(bridge_at(&s, &int(0), Side::Right).is_err());
        assert!(bridge_at(&s, &int(1), Side::Left).is_err());
    }

    #[test]
    fn thickness_of_thirds_and_restriction() {
        assert_eq!(thickness(&thirds2()).unwrap().value, int(1));
        let r = restrict(&thirds2(), &iv((2, 9), (7, 9))).unwrap();
        assert_eq!(r.intervals(), &[iv((2, 9), (1, 3)), iv((2, 3), (7, 9))]);
        assert_eq!(thickness(&r).unwrap().value, rat(1, 3));
    }

    #[test]
    fn thickness_tie_break_is_leftmost_left_side() {
        let t = thickness(&thirds2()).unwrap();
        assert_eq!(t.argmin.endpoint, rat(1, 9));
        assert_eq!(t.argmin.side, Side::Left);
    }

    #[test]
    fn restrict_identity_and_left_half() {
        let s = thirds2();
        assert_eq!(restrict(&s, &iv((-1, 1), (2, 1))).unwrap(), s);
        let left = restrict(&s, &iv((0, 1), (1, 3))).unwrap();
        assert_eq!(left.intervals(), &[iv((0, 1), (1, 9)), iv((2, 9), (1, 3))]);
        assert!(restrict(&s, &iv((2, 1), (3, 1))).is_err());
    }

    #[test]
    fn affine_reflection_and_translation() {
        let s = CantorStage::new(vec![iv((0, 1), (1, 3)), iv((2, 3), (1, 1))], 1).unwrap();
        let r = affine_image(&s, &int(-1), &int(0)).unwrap();
        assert_eq!(r.intervals(), &[iv((-1, 1), (-2, 3)), iv((-1, 3), (0, 1))]);
        let t = affine_image(&s, &int(1), &rat(-2, 3)).unwrap();
        assert_eq!(bounded_gaps(&t).next().unwrap(), Gap::bounded(rat(-1, 3), int(0)));
        assert!(affine_image(&s, &int(0), &int(1)).is_err());
    }

    #[test]
    fn constructor_rejects_bad_stages() {
        assert!(CantorStage::new(vec![], 0).is_err());
        assert!(CantorStage::new(vec![iv((0, 1), (1, 1)), iv((1, 1), (2, 1))], 0).is_err());
        assert!(CantorStage::new(vec![iv((0, 1), (0, 1))], 0).is_err());
        assert!(CantorStage::new_degenerate(vec![iv((0, 1), (0, 1))], 0).is_ok());
        assert!(ClosedInterval::new(int(1), int(0)).is_err());
    }

    #[test]
    fn json_round_trip_and_offsets() {
        let s = thirds2();
        let text = stage_to_json(&s);
        assert_eq!(text, r#"{"depth":2,"intervals":[["0","1/9"],["2/9","1/3"],["2/3","7/9"],["8/9","1"]]}"#);
        assert_eq!(stage_from_json(&text).unwrap(), s);
        let bad = "{\"depth\": 1,\n \"intervals\": [[\"0\", \"x\"]]}";
        let err = stage_from_json(bad).unwrap_err().to_string();
        assert!(err.contains("byte offset"), "{err}");
    }

    #[test]
    fn gap_containment_includes_unbounded() {
        let s = thirds2();
        let far = iv((10, 1), (11, 1));
        assert_eq!(gap_containing(&s, &far).unwrap().kind, GapKind::RightUnbounded);
        let inside = iv((2, 5), (3, 5));
        assert_eq!(gap_containing(&s, &inside).unwrap(), Gap::bounded(rat(1, 3), rat(2, 3)));
        assert!(gap_containing(&s, &iv((0, 1), (1, 2))).is_none());
    }
}
