//! Small model families for exhaustive audits.
//!
//! The micro family holds every model on at most two binary measurements
//! `x`, `y` whose probabilities lie on the grid of fractions with
//! denominator at most 4. Models related by flipping outcomes or swapping
//! the two measurements are interconvertible by one-step relabelings, so
//! the family is reduced to one representative per class.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::fixtures;
use crate::model::{mix, EmpiricalModel, PartitionedModel};
use crate::rational::{self, ratio, Rational};
use crate::scenario::{self, Assignment, Measurement, PartitionedScenario, Scenario};

/// Fractions in `[0, 1]` with denominator at most 4.
pub fn grid() -> Vec<Rational> {
    let set: BTreeSet<Rational> = (1..=4).flat_map(|d| (0..=d).map(move |k| ratio(k, d))).collect();
    set.into_iter().collect()
}

/// Distributions on four cells with every weight on the grid and a common
/// denominator at most 4.
fn four_cell() -> Vec<[Rational; 4]> {
    let mut out = BTreeSet::new();
    for d in 1..=4i64 {
        for a in 0..=d {
            for b in 0..=d - a {
                for c in 0..=d - a - b {
                    out.insert([ratio(a, d), ratio(b, d), ratio(c, d), ratio(d - a - b - c, d)]);
                }
            }
        }
    }
    out.into_iter().collect()
}

fn single(id: &str) -> Scenario {
    Scenario::new(vec![Measurement::binary(id)], vec![]).expect("one measurement")
}

/// `p` is the probability of outcome 0.
fn bit_model(s: &Scenario, id: &str, p: &Rational) -> EmpiricalModel {
    let q = rational::one() - p;
    fixtures::from_global(
        s,
        &[(Assignment::from_pairs([(id, "0")]), p.clone()), (Assignment::from_pairs([(id, "1")]), q)],
    )
    .expect("grid bit")
}

/// Joint distribution of `(a, b)` in cell order 00, 01, 10, 11.
fn pair_model(s: &Scenario, a: &str, b: &str, w: &[Rational; 4]) -> EmpiricalModel {
    let cells = [("0", "0"), ("0", "1"), ("1", "0"), ("1", "1")];
    let weights: Vec<(Assignment, Rational)> =
        cells.iter().zip(w).map(|((x, y), p)| (Assignment::from_pairs([(a, *x), (b, *y)]), p.clone())).collect();
    fixtures::from_global(s, &weights).expect("grid pair")
}

fn label(w: &[Rational]) -> String {
    w.iter().map(rational::format).collect::<Vec<_>>().join(",")
}

/// Images of a four-cell distribution under outcome flips and, when
/// `swap`, exchange of the two measurements.
fn pair_orbit(w: &[Rational; 4], swap: bool) -> Vec<[Rational; 4]> {
    let [a, b, c, d] = w.clone();
    let mut out = Vec::new();
    for base in [[a.clone(), b.clone(), c.clone(), d.clone()], [a, c, b, d]].into_iter().take(if swap { 2 } else { 1 })
    {
        let [p, q, r, s] = base;
        out.push([p.clone(), q.clone(), r.clone(), s.clone()]);
        out.push([r.clone(), s.clone(), p.clone(), q.clone()]);
        out.push([q.clone(), p.clone(), s.clone(), r.clone()]);
        out.push([s, r, q, p]);
    }
    out
}

fn half_or_less(p: &Rational) -> Rational {
    let q = rational::one() - p;
    rational::min(p, &q).clone()
}

/// One representative per class of the micro family, with labels.
pub fn micro_models() -> Vec<(String, EmpiricalModel)> {
    let mut out = vec![("trivial".to_string(), EmpiricalModel::trivial())];
    let x = single("x");
    let classes: BTreeSet<Rational> = grid().iter().map(half_or_less).collect();
    for p in &classes {
        out.push((format!("x[{}]", rational::format(p)), bit_model(&x, "x", p)));
    }
    let apart = Scenario::new(vec![Measurement::binary("x"), Measurement::binary("y")], vec![]).expect("two");
    let list: Vec<&Rational> = classes.iter().collect();
    for (i, p) in list.iter().enumerate() {
        for q in &list[i..] {
            let mx = bit_model(&single("x"), "x", p);
            let my = bit_model(&single("y"), "y", q);
            let tables = mx.tables().iter().chain(my.tables()).cloned().collect();
            let m = EmpiricalModel::new(apart.clone(), tables).expect("independent contexts");
            out.push((format!("x|y[{},{}]", rational::format(p), rational::format(q)), m));
        }
    }
    let joint =
        Scenario::new(vec![Measurement::binary("x"), Measurement::binary("y")], vec![vec!["x", "y"]]).expect("two");
    let mut reps = BTreeSet::new();
    for w in four_cell() {
        let rep = pair_orbit(&w, true).into_iter().min().expect("nonempty orbit");
        reps.insert(rep);
    }
    for w in reps {
        out.push((format!("xy[{}]", label(&w)), pair_model(&joint, "x", "y", &w)));
    }
    out
}

/// Number of models in the unreduced micro family.
pub fn micro_family_size() -> usize {
    let g = grid().len();
    1 + g + g * g + four_cell().len()
}

/// Two-site models with at most one binary measurement per site, one
/// representative per outcome-flip class.
pub fn micro_partitioned() -> Vec<(String, PartitionedModel)> {
    let x = single("x");
    let classes: BTreeSet<Rational> = grid().iter().map(half_or_less).collect();
    let mut out = vec![("trivial".to_string(), PartitionedModel::trivial(2))];
    for p in &classes {
        let m = bit_model(&x, "x", p);
        out.push((
            format!("x/-[{}]", rational::format(p)),
            PartitionedModel::from_sites(&[m.clone(), EmpiricalModel::trivial()]),
        ));
        out.push((
            format!("-/x[{}]", rational::format(p)),
            PartitionedModel::from_sites(&[EmpiricalModel::trivial(), m]),
        ));
    }
    let scenario = PartitionedScenario::new(vec![x.clone(), x]);
    let flat = scenario.flat();
    let mut reps = BTreeSet::new();
    for w in four_cell() {
        reps.insert(pair_orbit(&w, false).into_iter().min().expect("nonempty orbit"));
    }
    for w in reps {
        let m = pair_model(&flat, "site1.x", "site2.x", &w);
        out.push((format!("x/x[{}]", label(&w)), PartitionedModel::new(scenario.clone(), m).expect("flat model")));
    }
    out
}

/// A seeded family of models on at most three binary measurements: every
/// deterministic model of each scenario, grid mixtures of the triangle with
/// deterministic and uniform noise, and random classical mixtures.
/// Duplicates are dropped, keeping the first label.
pub fn small_models(seed: u64, random: usize) -> Vec<(String, EmpiricalModel)> {
    let ab = |ids: &[&str], ctx: Vec<Vec<&str>>| {
        Scenario::new(ids.iter().map(|i| Measurement::binary(*i)).collect(), ctx).expect("small scenario")
    };
    let scenarios: Vec<(&str, Scenario)> = vec![
        ("one", ab(&["a"], vec![])),
        ("pair", ab(&["a", "b"], vec![vec!["a", "b"]])),
        ("apart", ab(&["a", "b"], vec![])),
        ("chain", ab(&["a", "b", "c"], vec![vec!["a", "b"], vec!["b", "c"]])),
        ("triangle", scenario::triangle()),
        ("joint", ab(&["a", "b", "c"], vec![vec!["a", "b", "c"]])),
    ];
    let mut out = vec![("trivial".to_string(), EmpiricalModel::trivial())];
    for (name, s) in &scenarios {
        for g in s.enumerate_assignments(s.ids()).expect("own ids") {
            let bits: String = g.iter().map(|(_, o)| o.as_str()).collect();
            out.push((format!("{name}/det[{bits}]"), fixtures::deterministic(s, &g).expect("global")));
        }
    }
    let tri = fixtures::triangle();
    let uni = fixtures::uniform(&scenario::triangle());
    let globals = scenario::triangle().enumerate_assignments(scenario::triangle().ids()).expect("own ids");
    for mu in grid() {
        out.push((format!("triangle/noise[{}]", rational::format(&mu)), mix(&mu, &tri, &uni).expect("grid")));
        for g in &globals {
            let det = fixtures::deterministic(&scenario::triangle(), g).expect("global");
            let bits: String = g.iter().map(|(_, o)| o.as_str()).collect();
            out.push((format!("triangle/mix[{},{bits}]", rational::format(&mu)), mix(&mu, &tri, &det).expect("grid")));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for k in 0..random {
        let (name, s) = &scenarios[k % scenarios.len()];
        let all = s.enumerate_assignments(s.ids()).expect("own ids");
        let raw: Vec<i64> = all.iter().map(|_| rng.gen_range(0..4)).collect();
        let total: i64 = raw.iter().sum::<i64>().max(1);
        let mut weights: Vec<(Assignment, Rational)> =
            all.iter().cloned().zip(raw.iter().map(|w| ratio(*w, total))).collect();
        if raw.iter().all(|w| *w == 0) {
            weights[0].1 = rational::one();
        }
        out.push((format!("{name}/random[{k}]"), fixtures::from_global(s, &weights).expect("classical")));
    }
    let mut seen = Vec::new();
    out.retain(|(_, m)| {
        if seen.contains(m) {
            return false;
        }
        seen.push(m.clone());
        true
    });
    out
}
