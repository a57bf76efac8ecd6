//! Seeded generators shared by the integration tests.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use ctxlab::fixtures;
use ctxlab::model::EmpiricalModel;
use ctxlab::procedure::DeterministicProcedure;
use ctxlab::protocol::{protocols_compatible, AdaptiveProcedure, MeasurementProtocol};
use ctxlab::rational::ratio;
use ctxlab::scenario::{Assignment, Measurement, Scenario};
use ctxlab::simulation::family::small_models;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub use rand::SeedableRng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Up to `max` measurements `m0, m1, …` with two or three outcomes and a
/// few random contexts of size at most three.
pub fn scenario(rng: &mut ChaCha8Rng, max: usize) -> Scenario {
    let n = rng.gen_range(1..=max);
    let ids: Vec<String> = (0..n).map(|i| format!("m{i}")).collect();
    let ms = ids
        .iter()
        .map(|id| {
            if rng.gen_bool(0.8) {
                Measurement::binary(id.as_str())
            } else {
                Measurement::new(id.as_str(), &["0", "1", "2"])
            }
        })
        .collect();
    let mut contexts: Vec<Vec<&str>> = Vec::new();
    for _ in 0..rng.gen_range(1..=3) {
        let size = rng.gen_range(1..=n.min(3));
        let mut pick: Vec<&str> = ids.iter().map(String::as_str).collect();
        pick.shuffle(rng);
        pick.truncate(size);
        contexts.push(pick);
    }
    Scenario::new(ms, contexts).expect("random scenario")
}

/// A classical model: a random distribution over a few global assignments.
pub fn classical(rng: &mut ChaCha8Rng, s: &Scenario) -> EmpiricalModel {
    let globals = s.enumerate_assignments(s.ids()).expect("own ids");
    let k = rng.gen_range(1..=globals.len().min(4));
    let picks: Vec<&Assignment> = globals.choose_multiple(rng, k).collect();
    let raw: Vec<i64> = picks.iter().map(|_| rng.gen_range(1..=4)).collect();
    let total: i64 = raw.iter().sum();
    let weights: Vec<(Assignment, _)> = picks.iter().zip(&raw).map(|(g, w)| ((*g).clone(), ratio(*w, total))).collect();
    fixtures::from_global(s, &weights).expect("classical model")
}

/// Fixtures and the contextual members of the small family, plus a fresh
/// classical model on a random scenario.
pub fn model(rng: &mut ChaCha8Rng) -> EmpiricalModel {
    match rng.gen_range(0..6) {
        0 => fixtures::triangle(),
        1 => fixtures::pr().model,
        2 => fixtures::noisy_pr(&ratio(rng.gen_range(0..=4), 4)).expect("grid noise").model,
        3 => {
            let family = small_models(7, 0);
            family.choose(rng).expect("nonempty").1.clone()
        }
        _ => {
            let s = scenario(rng, 4);
            classical(rng, &s)
        }
    }
}

/// A random protocol of depth at most `depth` whose runs stay inside
/// contexts of `s`.
pub fn protocol(rng: &mut ChaCha8Rng, s: &Scenario, depth: usize) -> MeasurementProtocol {
    MeasurementProtocol::from_tree(s, |r| {
        if r.len() >= depth || (!r.is_empty() && rng.gen_bool(0.3)) {
            return None;
        }
        let ctx = r.context();
        let options: Vec<&String> =
            s.ids().filter(|x| !ctx.contains(*x) && s.is_context(ctx.iter().chain(std::iter::once(*x)))).collect();
        options.choose(rng).map(|x| x.to_string())
    })
    .expect("generated protocol is valid")
}

/// `k` protocols drawn until they are compatible.
pub fn compatible_set(rng: &mut ChaCha8Rng, s: &Scenario, k: usize, depth: usize) -> Vec<MeasurementProtocol> {
    loop {
        let qs: Vec<MeasurementProtocol> = (0..k).map(|_| protocol(rng, s, depth)).collect();
        if protocols_compatible(s, &qs.iter().collect::<Vec<_>>()) {
            return qs;
        }
    }
}

/// Target ids `t0, …` with binary outcomes whose contexts are the subsets
/// accepted by `joint`.
fn target(k: usize, joint: impl Fn(&[usize]) -> bool) -> Scenario {
    let ids: Vec<String> = (0..k).map(|i| format!("t{i}")).collect();
    let mut contexts = Vec::new();
    for mask in 1u32..(1 << k) {
        let members: Vec<usize> = (0..k).filter(|i| mask & (1 << i) != 0).collect();
        if joint(&members) {
            contexts.push(members.iter().map(|i| ids[*i].as_str()).collect::<Vec<_>>());
        }
    }
    Scenario::new(ids.iter().map(|i| Measurement::binary(i.as_str())).collect(), contexts).expect("target scenario")
}

pub fn deterministic_procedure(rng: &mut ChaCha8Rng, s: &Scenario) -> DeterministicProcedure {
    let ids: Vec<&String> = s.ids().collect();
    let k = if ids.is_empty() { 0 } else { rng.gen_range(1..=3) };
    let images: Vec<String> = (0..k).map(|_| ids.choose(rng).expect("nonempty").to_string()).collect();
    let t = target(k, |members| s.is_context(members.iter().map(|i| &images[*i])));
    let mut pi = BTreeMap::new();
    let mut alpha = BTreeMap::new();
    for (i, img) in images.iter().enumerate() {
        let u = format!("t{i}");
        let map: BTreeMap<String, String> = s
            .outcomes(img)
            .expect("own id")
            .iter()
            .map(|o| (o.clone(), if rng.gen_bool(0.5) { "0" } else { "1" }.to_string()))
            .collect();
        pi.insert(u.clone(), img.clone());
        alpha.insert(u, map);
    }
    DeterministicProcedure { source: s.clone(), target: t, pi, alpha }
}

/// `k ≤ 3` random protocols with random outcome maps; target contexts are
/// the compatible subsets.
pub fn adaptive_procedure(rng: &mut ChaCha8Rng, s: &Scenario, depth: usize) -> AdaptiveProcedure {
    let k = rng.gen_range(1..=3);
    let qs: Vec<MeasurementProtocol> = (0..k).map(|_| protocol(rng, s, depth)).collect();
    let t = target(k, |members| protocols_compatible(s, &members.iter().map(|i| &qs[*i]).collect::<Vec<_>>()));
    let mut protocols = BTreeMap::new();
    let mut alpha = BTreeMap::new();
    for (i, q) in qs.into_iter().enumerate() {
        let u = format!("t{i}");
        let map =
            q.maximal_runs().into_iter().map(|r| (r, if rng.gen_bool(0.5) { "0" } else { "1" }.to_string())).collect();
        protocols.insert(u.clone(), q);
        alpha.insert(u, map);
    }
    AdaptiveProcedure { source: s.clone(), target: t, protocols, alpha }
}

/// Every global assignment of `s` whose restriction to each maximal
/// context has positive probability. Some weight can be put on such an
/// assignment iff the noncontextual fraction is positive.
pub fn supported_globals(e: &EmpiricalModel) -> Vec<Assignment> {
    let s = e.scenario();
    s.enumerate_assignments(s.ids())
        .expect("own ids")
        .into_iter()
        .filter(|g| e.tables().iter().all(|t| t.weight(&g.restrict(&t.context)) > ctxlab::rational::zero()))
        .collect()
}

pub fn ids(v: &[&str]) -> BTreeSet<String> {
    v.iter().map(|s| s.to_string()).collect()
}
