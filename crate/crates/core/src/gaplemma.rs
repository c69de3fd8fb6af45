//! Gap-lemma machinery: hypothesis checks, exact stage intersection, and
//! nested-chain certificates that an intersection survives refinement.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::{Node, StageFamily};
use crate::rational::{self, Rational};
use crate::stage::{self, CantorStage, ClosedInterval, Gap};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GapLemmaVerdict {
    #[serde(with = "rational::serde_opt")]
    pub tau1: Option<Rational>,
    #[serde(with = "rational::serde_opt")]
    pub tau2: Option<Rational>,
    pub product_ok: bool,
    pub k1_in_gap_of_k2: Option<Gap>,
    pub k2_in_gap_of_k1: Option<Gap>,
    pub applies: bool,
    pub reasons: Vec<String>,
}

/// Checks `tau(K1) tau(K2) >= 1` exactly and that neither hull sits inside
/// a single gap (bounded or not) of the other stage. A stage without a gap
/// has no thickness and fails the product check.
pub fn check_hypotheses(k1: &CantorStage, k2: &CantorStage) -> GapLemmaVerdict {
    let mut reasons = Vec::new();
    let tau1 = stage::thickness_or_infinite(k1);
    let tau2 = stage::thickness_or_infinite(k2);
    let product_ok = match (&tau1, &tau2) {
        (Some(a), Some(b)) => {
            let ok = a * b >= rational::one();
            if !ok {
                reasons.push(format!("thickness product {a} * {b} = {} < 1", a * b));
            }
            ok
        }
        _ => {
            for (name, t) in [("K1", &tau1), ("K2", &tau2)] {
                if t.is_none() {
                    reasons.push(format!("{name} has no bounded gap, so its thickness is undefined"));
                }
            }
            false
        }
    };
    let k1_in_gap_of_k2 = stage::gap_containing(k2, &k1.hull());
    let k2_in_gap_of_k1 = stage::gap_containing(k1, &k2.hull());
    if let Some(g) = &k1_in_gap_of_k2 {
        reasons.push(format!("K1 lies in the {:?} gap {} of K2", g.kind, gap_text(g)));
    }
    if let Some(g) = &k2_in_gap_of_k1 {
        reasons.push(format!("K2 lies in the {:?} gap {} of K1", g.kind, gap_text(g)));
    }
    let applies = product_ok && k1_in_gap_of_k2.is_none() && k2_in_gap_of_k1.is_none();
    GapLemmaVerdict { tau1, tau2, product_ok, k1_in_gap_of_k2, k2_in_gap_of_k1, applies, reasons }
}

fn gap_text(g: &Gap) -> String {
    let end = |v: &Option<Rational>, inf: &str| v.as_ref().map_or(inf.to_string(), ToString::to_string);
    format!("({}, {})", end(&g.lo, "-inf"), end(&g.hi, "+inf"))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntersectionWitness {
    pub common: CantorStage,
    #[serde(with = "rational::serde_str")]
    pub sample_point: Rational,
}

/// Exact intersection of two stages by merge scan, `None` when empty.
pub fn intersect(k1: &CantorStage, k2: &CantorStage) -> Option<IntersectionWitness> {
    let (a, b) = (k1.intervals(), k2.intervals());
    let (mut i, mut j) = (0, 0);
    let mut common = Vec::new();
    while i < a.len() && j < b.len() {
        if let Some(c) = a[i].intersect(&b[j]) {
            common.push(c);
        }
        if a[i].hi() < b[j].hi() {
            i += 1;
        } else {
            j += 1;
        }
    }
    if common.is_empty() {
        return None;
    }
    let sample_point = common[0].midpoint();
    let common = CantorStage::new_degenerate(common, k1.depth().max(k2.depth()))
        .expect("pieces of two increasing disjoint lists are increasing and disjoint");
    Some(IntersectionWitness { common, sample_point })
}

/// One depth of a nested-chain certificate.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainLevel {
    pub depth: usize,
    /// Display of the chosen node of the first family.
    pub first: ClosedInterval,
    pub second: ClosedInterval,
    /// `first ∩ second`.
    pub common: ClosedInterval,
    #[serde(skip)]
    pub first_node: Option<Node>,
    #[serde(skip)]
    pub second_node: Option<Node>,
}

/// Nested common intervals at depths `0..=depth`. By compactness the two
/// limit sets meet inside the last `common` interval.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PersistentWitness {
    pub levels: Vec<ChainLevel>,
    #[serde(with = "rational::serde_str")]
    pub sample_point: Rational,
}

impl PersistentWitness {
    pub fn deepest(&self) -> &ChainLevel {
        self.levels.last().expect("a witness has at least one level")
    }

    /// Each level's intervals sit inside the previous level's, and every
    /// `common` is the intersection of its pair.
    pub fn is_nested(&self) -> bool {
        self.levels.windows(2).all(|w| {
            w[0].first.contains_interval(&w[1].first)
                && w[0].second.contains_interval(&w[1].second)
                && w[0].common.contains_interval(&w[1].common)
        }) && self.levels.iter().all(|l| l.first.intersect(&l.second).as_ref() == Some(&l.common))
    }
}

/// Report carried by a failed persistence search.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PersistenceFailure {
    /// First depth at which no chain could be continued.
    pub depth: usize,
    /// Hypothesis check on the two stages at that depth, when they were
    /// small enough to materialize.
    pub verdict: Option<GapLemmaVerdict>,
    /// Deepest common interval reached before the chain broke.
    pub deepest_common: Option<ClosedInterval>,
}

struct Search<'a> {
    f1: &'a StageFamily,
    f2: &'a StageFamily,
    target: usize,
    budget: usize,
    visits: usize,
    deepest: Option<ChainLevel>,
    path: Vec<ChainLevel>,
}

impl Search<'_> {
    fn visit(&mut self, level: ChainLevel) -> Result<bool> {
        self.visits += 1;
        if self.visits > self.budget {
            return Err(Error::Budget(self.budget));
        }
        if self.deepest.as_ref().is_none_or(|d| level.depth > d.depth) {
            self.deepest = Some(level.clone());
        }
        let depth = level.depth;
        self.path.push(level);
        if depth == self.target {
            return Ok(true);
        }
        let level = self.path.last().unwrap().clone();
        let n1 = level.first_node.as_ref().unwrap();
        let n2 = level.second_node.as_ref().unwrap();
        let kids1 = displayed(self.f1, self.f1.children(n1), Some(&level.first))?;
        let kids2 = displayed(self.f2, self.f2.children(n2), Some(&level.second))?;
        for next in candidate_pairs(depth + 1, &kids1, &kids2) {
            if self.visit(next)? {
                return Ok(true);
            }
        }
        self.path.pop();
        Ok(false)
    }
}

fn displayed(
    fam: &StageFamily,
    nodes: Vec<Node>,
    parent: Option<&ClosedInterval>,
) -> Result<Vec<(Node, ClosedInterval)>> {
    let mut out = Vec::with_capacity(nodes.len());
    for n in nodes {
        if let Some(iv) = fam.display_within(&n, parent)? {
            out.push((n, iv));
        }
    }
    Ok(out)
}

/// Intersecting pairs, widest overlap first, then leftmost.
fn candidate_pairs(depth: usize, a: &[(Node, ClosedInterval)], b: &[(Node, ClosedInterval)]) -> Vec<ChainLevel> {
    let mut out = Vec::new();
    for (n1, d1) in a {
        for (n2, d2) in b {
            if let Some(common) = d1.intersect(d2) {
                out.push(ChainLevel {
                    depth,
                    first: d1.clone(),
                    second: d2.clone(),
                    common,
                    first_node: Some(n1.clone()),
                    second_node: Some(n2.clone()),
                });
            }
        }
    }
    out.sort_by(|x, y| {
        y.common.length().cmp(&x.common.length()).then_with(|| x.common.lo().cmp(y.common.lo()))
    });
    out
}

/// Default cap on node-pair visits for [`persistent_intersect`].
pub const DEFAULT_BUDGET: usize = 1_000_000;

/// Depth-first search for nested intersecting node pairs down to `depth`.
/// Fails with [`Error::EmptyIntersection`] when every branch dies out, and
/// with [`Error::Budget`] after `budget` pair visits.
pub fn persistent_intersect(
    f1: &StageFamily,
    f2: &StageFamily,
    depth: usize,
    budget: usize,
) -> Result<PersistentWitness> {
    let mut search = Search { f1, f2, target: depth, budget, visits: 0, deepest: None, path: Vec::new() };
    let roots1 = displayed(f1, f1.roots(), None)?;
    let roots2 = displayed(f2, f2.roots(), None)?;
    for start in candidate_pairs(0, &roots1, &roots2) {
        if search.visit(start)? {
            let levels = search.path;
            let sample_point = levels.last().unwrap().common.midpoint();
            return Ok(PersistentWitness { levels, sample_point });
        }
    }
    let fail_depth = search.deepest.as_ref().map_or(0, |d| d.depth + 1);
    let verdict = match (f1.stage(fail_depth), f2.stage(fail_depth)) {
        (Ok(s1), Ok(s2)) => Some(check_hypotheses(&s1, &s2)),
        _ => None,
    };
    Err(Error::EmptyIntersection(Box::new(PersistenceFailure {
        depth: fail_depth,
        verdict,
        deepest_common: search.deepest.map(|d| d.common),
    })))
}
