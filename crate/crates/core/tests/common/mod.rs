use proptest::prelude::*;

use thickset::constructions::{random_thick_family, RandomThickSpec};
use thickset::family::StageFamily;
use thickset::gaplemma;
use thickset::rational::{rat, Rational};
use thickset::stage::{CantorStage, ClosedInterval};

/// Stage from alternating interval and gap lengths (in units of 1/den).
#[allow(dead_code)]
pub fn build(start: i64, den: i64, pieces: &[(i64, i64)]) -> CantorStage {
    let mut x = rat(start, den);
    let mut out = Vec::new();
    for (k, &(len, gap)) in pieces.iter().enumerate() {
        if k > 0 {
            x += rat(gap, den);
        }
        let hi = &x + rat(len, den);
        out.push(ClosedInterval::new(x.clone(), hi.clone()).unwrap());
        x = hi;
    }
    CantorStage::new(out, 0).unwrap()
}

#[allow(dead_code)]
pub fn stages(min_pieces: usize) -> impl Strategy<Value = CantorStage> {
    (-20i64..20, 1i64..12, prop::collection::vec((1i64..30, 1i64..30), min_pieces..14))
        .prop_map(|(s, d, p)| build(s, d, &p))
}


/// Seeded pair of random thick families, the second moved by a random affine
/// map so the hulls overlap. Returns `None` unless the gap-lemma hypotheses
/// hold at every depth `1..=depth`.
#[allow(dead_code)]
pub fn thick_pair(seed: u64, depth: usize) -> Option<(StageFamily, StageFamily)> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let taus = [rat(1, 2), rat(2, 3), rat(1, 1), rat(3, 2), rat(2, 1), rat(3, 1)];
    let t1 = taus[rng.gen_range(0..taus.len())].clone();
    let t2 = loop {
        let t = taus[rng.gen_range(0..taus.len())].clone();
        if &t * &t1 >= rat(1, 1) {
            break t;
        }
    };
    let fam = |tau: Rational, seed: u64| {
        let stages = random_thick_family(&RandomThickSpec::new(tau, depth, seed)).unwrap();
        StageFamily::from_stages(stages).unwrap()
    };
    let f1 = fam(t1, rng.gen());
    let sign = if rng.gen_bool(0.5) { 1 } else { -1 };
    let scale = rat(sign * rng.gen_range(2..=8), 4);
    // put the image's center at a random point of [0, 1]
    let center = rat(rng.gen_range(0..=32), 32);
    let shift = center - &scale / rat(2, 1);
    let f2 = fam(t2, rng.gen()).affine(&scale, &shift).unwrap();
    let ok = (1..=depth).all(|d| {
        gaplemma::check_hypotheses(&f1.stage(d).unwrap(), &f2.stage(d).unwrap()).applies
    });
    ok.then_some((f1, f2))
}
