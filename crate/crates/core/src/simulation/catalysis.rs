//! Catalytic simulations `d ⊗ g ⇝ d ⊗ f` with `g = e ⊗ c`: replication over
//! many copies of `g`, and elimination of the catalyst `d`.
//!
//! Elimination picks a copy `j` of `g` in an `n`-fold replication and treats
//! everything else (`d` and the other copies) as a side model `D`. For every
//! target measurement `u` the protocol `π(u)` is restricted by each global
//! assignment `t` of copy `j`, the restrictions are merged into a single
//! protocol `P_u` over `D`, and `d̂` is the model of `MP(D)` on the `P_u`.
//! The simulation `e ⇝ f` then reads the outcome of `P_u` from the free
//! model `d̂ ⊗ c` and finishes `π(u)` on copy `j` alone. Every property the
//! construction relies on is checked rather than assumed.

use std::collections::{BTreeMap, BTreeSet};

use super::{check_simulation, AdaptiveSimulation};
use crate::contextuality::{is_noncontextual, GlobalDistribution, Noncontextuality};
use crate::error::{Error, Result};
use crate::model::{tensor_models, tensor_tagged_models, validate_model, EmpiricalModel};
use crate::protocol::{
    flatten_adaptive, implicitly_contains, incompatibility_witness, merge_protocols, mp_model_table,
    protocols_compatible, restrict_protocol, AdaptiveProcedure, Joint, MeasurementProtocol, MpContext, Run,
    TaggedProduct,
};
use crate::scenario::{tensor_tagged, Measurement, Scenario};

/// `phi : MP(S ⊗ (T ⊗ V)) → S ⊗ U` with source ids `L.s`, `R.L.t`, `R.R.v`
/// and target ids `L.s`, `R.u`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Catalytic {
    pub d: EmpiricalModel,
    pub e: EmpiricalModel,
    pub c: EmpiricalModel,
    pub f: EmpiricalModel,
    pub phi: AdaptiveProcedure,
}

fn extraction(step: &str, detail: impl Into<String>) -> Error {
    Error::Extraction { step: step.into(), detail: detail.into() }
}

impl Catalytic {
    pub fn new(
        d: EmpiricalModel,
        e: EmpiricalModel,
        c: EmpiricalModel,
        f: EmpiricalModel,
        phi: AdaptiveProcedure,
    ) -> Result<Self> {
        for m in [&d, &e, &c, &f] {
            validate_model(m).into_result(Error::InvalidModel)?;
        }
        let source = d.scenario().tensor(&e.scenario().tensor(c.scenario()));
        if phi.source != source {
            return Err(Error::ScenarioMismatch("procedure source is not S ⊗ (T ⊗ V)".into()));
        }
        if phi.target != d.scenario().tensor(f.scenario()) {
            return Err(Error::ScenarioMismatch("procedure target is not S ⊗ U".into()));
        }
        phi.validate().into_result(Error::InvalidProcedure)?;
        let cat = Catalytic { d, e, c, f, phi };
        if !cat.verify()? {
            return Err(Error::InvalidProcedure("procedure does not turn d ⊗ g into d ⊗ f".into()));
        }
        Ok(cat)
    }

    /// Reads a simulation `d ⊗ e ⇝ d ⊗ f` with free model `c` as a catalytic
    /// procedure on `d ⊗ (e ⊗ c)`.
    pub fn from_simulation(
        sim: &AdaptiveSimulation,
        d: &EmpiricalModel,
        e: &EmpiricalModel,
        f: &EmpiricalModel,
    ) -> Result<Self> {
        if sim.source != tensor_models(d, e) {
            return Err(Error::ScenarioMismatch("simulation source is not d ⊗ e".into()));
        }
        let mut phi = sim.procedure.map_source_ids(|id| {
            if let Some(s) = id.strip_prefix("L.L.") {
                format!("L.{s}")
            } else if let Some(t) = id.strip_prefix("L.R.") {
                format!("R.L.{t}")
            } else {
                format!("R.R.{}", id.strip_prefix("R.").expect("free ids are R-tagged"))
            }
        });
        phi.source = d.scenario().tensor(&e.scenario().tensor(sim.free.scenario()));
        Catalytic::new(d.clone(), e.clone(), sim.free.clone(), f.clone(), phi)
    }

    /// `g = e ⊗ c`.
    pub fn g(&self) -> EmpiricalModel {
        tensor_models(&self.e, &self.c)
    }

    pub fn verify(&self) -> Result<bool> {
        let g = self.g();
        let joint = TaggedProduct::new(&[("L", &self.d), ("R", &g)]);
        Ok(self.phi.pushforward(&joint)? == tensor_models(&self.d, &self.f))
    }
}

/// `MP(S ⊗ R^{⊗n}) → S ⊗ U^{⊗n}` with ids `L.s`, `R.copy<i>.r` and
/// `L.s`, `R.copy<i>.u`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Replicated {
    pub copies: usize,
    pub procedure: AdaptiveProcedure,
}

fn copy_tag(i: usize) -> String {
    format!("R.copy{i}")
}

impl Replicated {
    pub fn verify(&self, cat: &Catalytic) -> Result<bool> {
        let g = cat.g();
        let tags: Vec<String> = (1..=self.copies).map(copy_tag).collect();
        let mut src: Vec<(&str, &EmpiricalModel)> = vec![("L", &cat.d)];
        let mut tgt: Vec<(&str, &EmpiricalModel)> = vec![("L", &cat.d)];
        for t in &tags {
            src.push((t, &g));
            tgt.push((t, &cat.f));
        }
        let joint = TaggedProduct::new(&src);
        Ok(self.procedure.pushforward(&joint)? == tensor_tagged_models(&tgt))
    }

    /// For each copy, whether its target protocols query only `L.` ids and
    /// that copy's own source ids.
    pub fn copy_locality(&self) -> Vec<bool> {
        (1..=self.copies)
            .map(|i| {
                let own = format!("{}.", copy_tag(i));
                self.procedure
                    .protocols
                    .iter()
                    .filter(|(u, _)| u.starts_with(&own))
                    .all(|(_, q)| q.ids().iter().all(|x| x.starts_with("L.") || x.starts_with(&own)))
            })
            .collect()
    }

    /// Canonical text of copy `j`'s target protocols with copy `j` renamed
    /// to a fixed tag, used to spot repeated per-copy procedures.
    fn induced_canonical(&self, j: usize) -> String {
        let own = format!("{}.", copy_tag(j));
        let rename = |x: &str| match x.strip_prefix(&own) {
            Some(rest) => format!("R.copy*.{rest}"),
            None => x.to_string(),
        };
        let mut out = String::new();
        for (u, q) in self.procedure.protocols.iter().filter(|(u, _)| u.starts_with(&own)) {
            out.push_str(&rename(u));
            out.push('{');
            for r in &q.runs {
                out.push_str(&r.map_ids(rename).label());
                if let Some(o) = self.procedure.alpha[u].get(r) {
                    out.push_str("=>");
                    out.push_str(o);
                }
                out.push(';');
            }
            out.push('}');
        }
        out
    }
}

/// Runs `phi` on copy 1, then copy 2, and so on, each stage feeding the `S`
/// part produced by the previous one.
pub fn replicate_catalytic(cat: &Catalytic, n: usize) -> Result<Replicated> {
    if n == 0 {
        return Err(Error::OutOfRange("at least one copy is needed".into()));
    }
    if !cat.verify()? {
        return Err(Error::InvalidProcedure("procedure does not turn d ⊗ g into d ⊗ f".into()));
    }
    let s = cat.d.scenario();
    let r = cat.g().scenario().clone();
    let u = cat.f.scenario();
    // after k stages: S, finished copies F.copy1..k of U, pending copies of R
    let stage = |k: usize| -> Scenario {
        let fin: Vec<String> = (1..=k).map(|i| format!("F.copy{i}")).collect();
        let pend: Vec<String> = (k + 1..=n).map(copy_tag).collect();
        let mut parts: Vec<(&str, &Scenario)> = vec![("L", s)];
        parts.extend(fin.iter().map(|t| (t.as_str(), u)));
        parts.extend(pend.iter().map(|t| (t.as_str(), &r)));
        tensor_tagged(&parts)
    };
    let mut acc: Option<AdaptiveProcedure> = None;
    for k in 1..=n {
        let (from, to) = (stage(k - 1), stage(k));
        let tag = copy_tag(k);
        let ren = |x: &str| match x.strip_prefix("R.") {
            Some(rest) => format!("{tag}.{rest}"),
            None => x.to_string(),
        };
        let fin = format!("F.copy{k}.");
        let mut protocols = BTreeMap::new();
        let mut alpha = BTreeMap::new();
        for id in to.ids() {
            let key = if id.starts_with("L.") {
                Some(id.clone())
            } else {
                id.strip_prefix(&fin).map(|rest| format!("R.{rest}"))
            };
            match key {
                Some(k) => {
                    protocols.insert(id.clone(), cat.phi.protocols[&k].map_ids(ren));
                    let map = cat.phi.alpha[&k].iter().map(|(run, o)| (run.map_ids(ren), o.clone())).collect();
                    alpha.insert(id.clone(), map);
                }
                None => {
                    let q = MeasurementProtocol::single(&from, id)?;
                    let map = q.maximal_runs().into_iter().map(|run| {
                        let o = run.0[0].1.clone();
                        (run, o)
                    });
                    alpha.insert(id.clone(), map.collect());
                    protocols.insert(id.clone(), q);
                }
            }
        }
        let psi = AdaptiveProcedure { source: from, target: to, protocols, alpha };
        acc = Some(match acc {
            None => {
                psi.validate().into_result(Error::InvalidProcedure)?;
                psi
            }
            Some(prev) => flatten_adaptive(&psi, &prev)?,
        });
    }
    let procedure = acc.expect("n ≥ 1").map_target_ids(|x| match x.strip_prefix("F.") {
        Some(rest) => format!("R.{rest}"),
        None => x.to_string(),
    });
    Ok(Replicated { copies: n, procedure })
}

/// Evidence produced alongside an extracted simulation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExtractionCertificate {
    /// Number of copies in the replication used.
    pub copies: usize,
    /// The copy of `g` that was kept.
    pub copy: usize,
    /// First pair of copy counts whose newest copy used the same procedure.
    pub repeat: Option<(usize, usize)>,
    /// `P_u` over the side model, per target measurement.
    pub merged: BTreeMap<String, MeasurementProtocol>,
    pub d_hat: EmpiricalModel,
    /// Global distribution explaining `d_hat`.
    pub witness: GlobalDistribution,
    /// Copy choices tried before this one, with the step that failed.
    pub attempts: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Extraction {
    /// `e ⇝ f` with free model `d̂ ⊗ c`.
    pub simulation: AdaptiveSimulation,
    pub certificate: ExtractionCertificate,
}

/// Tries `n = 1, 2, …, max_copies` copies and, for each, every copy
/// (newest first) until one yields a verified `e ⇝ f`.
pub fn extract_catalyst_free(cat: &Catalytic, max_copies: usize) -> Result<Extraction> {
    let mut attempts = Vec::new();
    let mut seen: BTreeMap<String, usize> = BTreeMap::new();
    let mut repeat = None;
    let mut last = extraction("replicate", "no copies tried");
    for n in 1..=max_copies {
        let rep = replicate_catalytic(cat, n)?;
        if !rep.verify(cat)? {
            return Err(extraction("replicate", format!("{n}-fold replication does not produce d ⊗ f^{n}")));
        }
        let form = rep.induced_canonical(n);
        match seen.get(&form) {
            Some(&m) if repeat.is_none() => repeat = Some((m, n)),
            Some(_) => {}
            None => {
                seen.insert(form, n);
            }
        }
        let order = std::iter::once(n).chain(1..n);
        for j in order {
            match extract_copy(cat, &rep, j) {
                Ok((simulation, merged, d_hat, witness)) => {
                    let certificate =
                        ExtractionCertificate { copies: n, copy: j, repeat, merged, d_hat, witness, attempts };
                    return Ok(Extraction { simulation, certificate });
                }
                Err(err) => {
                    attempts.push(format!("n={n} copy={j}: {err}"));
                    last = err;
                }
            }
        }
    }
    Err(last)
}

type Extracted = (AdaptiveSimulation, BTreeMap<String, MeasurementProtocol>, EmpiricalModel, GlobalDistribution);

fn extract_copy(cat: &Catalytic, rep: &Replicated, j: usize) -> Result<Extracted> {
    let g = cat.g();
    let own = format!("{}.", copy_tag(j));
    let tags: Vec<String> = (1..=rep.copies).filter(|&k| k != j).map(copy_tag).collect();
    let mut parts: Vec<(&str, &EmpiricalModel)> = vec![("L", &cat.d)];
    parts.extend(tags.iter().map(|t| (t.as_str(), &g)));
    let side = TaggedProduct::new(&parts);
    let side_scen = side.scenario();
    let copy_ids: Vec<String> = g.scenario().ids().map(|x| format!("{own}{x}")).collect();
    let globals: Vec<_> = g
        .scenario()
        .enumerate_assignments(g.scenario().ids())?
        .into_iter()
        .map(|t| t.map_ids(|x| format!("{own}{x}")))
        .collect();

    let us: Vec<String> = cat.f.scenario().ids().cloned().collect();
    let mut merged = BTreeMap::new();
    for u in &us {
        let pi = &rep.procedure.protocols[&format!("{own}{u}")];
        let mut restricted = Vec::with_capacity(globals.len());
        for t in &globals {
            let q = restrict_protocol(pi, t);
            if let Some(x) = q.ids().into_iter().find(|x| !side_scen.contains(x)) {
                return Err(extraction("restrict", format!("π({u})({t}) still queries `{x}`")));
            }
            q.validate(side_scen).into_result(|m| extraction("restrict", m))?;
            restricted.push(q);
        }
        let refs: Vec<&MeasurementProtocol> = restricted.iter().collect();
        if let Some(w) = incompatibility_witness(side_scen, &refs) {
            let runs: Vec<String> = w.iter().map(Run::to_string).collect();
            return Err(extraction("merge", format!("restrictions of π({u}) are incompatible: {}", runs.join(", "))));
        }
        let p = merge_protocols(side_scen, &restricted)?;
        p.validate(side_scen).into_result(|m| extraction("merge", m))?;
        if let Some(k) = restricted.iter().position(|q| !implicitly_contains(&p, q)) {
            return Err(extraction("merge", format!("P_{u} does not contain restriction {k}")));
        }
        merged.insert(u.clone(), p);
    }

    // d̂: one measurement per P_u; contexts are the maximal compatible sets
    let name = |u: &str| format!("P.{u}");
    if us.len() > 20 {
        return Err(extraction("contexts", "too many target measurements"));
    }
    let mut compatible: Vec<u32> = Vec::new();
    for mask in (0u32..1 << us.len()).rev() {
        if compatible.iter().any(|m| m & mask == mask) {
            continue;
        }
        let qs: Vec<&MeasurementProtocol> =
            us.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, u)| &merged[u]).collect();
        if protocols_compatible(side_scen, &qs) {
            compatible.push(mask);
        }
    }
    let contexts: Vec<Vec<String>> = compatible
        .iter()
        .map(|m| us.iter().enumerate().filter(|(i, _)| m >> i & 1 == 1).map(|(_, u)| name(u)).collect())
        .collect();
    for sigma in cat.f.scenario().maximal_contexts() {
        let want: BTreeSet<String> = sigma.iter().map(|u| name(u)).collect();
        if !contexts.iter().any(|c| want.iter().all(|x| c.contains(x))) {
            return Err(extraction("contexts", format!("P protocols for {sigma:?} are not jointly compatible")));
        }
    }
    let measurements: Vec<Measurement> = us
        .iter()
        .map(|u| Measurement { id: name(u), outcomes: merged[u].maximal_runs().iter().map(Run::label).collect() })
        .collect();
    let ctx_refs: Vec<Vec<&str>> = contexts.iter().map(|c| c.iter().map(String::as_str).collect()).collect();
    let w = Scenario::new(measurements, ctx_refs).map_err(|e| extraction("contexts", e.to_string()))?;
    let mut tables = Vec::new();
    for sigma in w.maximal_contexts() {
        let ctx = MpContext::new(sigma.iter().map(|p| {
            let u = p.strip_prefix("P.").expect("P-tagged");
            (p.clone(), merged[u].clone())
        }));
        tables.push(mp_model_table(&side, &ctx)?);
    }
    let d_hat = EmpiricalModel::new(w, tables).map_err(|e| extraction("d_hat", e.to_string()))?;
    let witness = match is_noncontextual(&d_hat)? {
        Noncontextuality::Noncontextual(b) => b,
        Noncontextuality::Contextual => return Err(extraction("noncontextuality", "d̂ is contextual")),
    };

    // e ⇝ f with free model d̂ ⊗ c; source ids L.t, R.L.P.u, R.R.v
    let free = tensor_models(&d_hat, &cat.c);
    let back = |x: &str| -> String {
        let rest = x.strip_prefix(&own).expect("copy id");
        match rest.strip_prefix("L.") {
            Some(t) => format!("L.{t}"),
            None => format!("R.{rest}"),
        }
    };
    let mut protocols = BTreeMap::new();
    let mut alpha = BTreeMap::new();
    for u in &us {
        let key = format!("{own}{u}");
        let pi = &rep.procedure.protocols[&key];
        let pi_alpha = &rep.procedure.alpha[&key];
        let head_id = format!("R.L.{}", name(u));
        let mut runs = BTreeSet::from([Run::empty()]);
        let mut map = BTreeMap::new();
        for m in merged[u].maximal_runs() {
            let s_m = m.assignment();
            let rest = restrict_protocol(pi, &s_m);
            if let Some(x) = rest.ids().into_iter().find(|x| !copy_ids.contains(x)) {
                return Err(extraction("assemble", format!("π({u}) after {m} still queries `{x}`")));
            }
            let head = Run::empty().extended(&head_id, &m.label());
            for y in &rest.runs {
                let mut full = head.clone();
                full.0.extend(y.map_ids(back).0);
                if rest.next(y).is_none() {
                    // replay π(u) with side outcomes from m and copy outcomes from y
                    let mut r = Run::empty();
                    while let Some(z) = pi.next(&r) {
                        let o = if z.starts_with(&own) { y.outcome_of(z) } else { s_m.get(z) };
                        let o = o.ok_or_else(|| extraction("assemble", format!("no outcome for `{z}` on {y}")))?;
                        r = r.extended(z, o);
                    }
                    let value = pi_alpha
                        .get(&r)
                        .ok_or_else(|| extraction("assemble", format!("{r} is not a maximal run of π({u})")))?;
                    map.insert(full.clone(), value.clone());
                }
                runs.insert(full);
            }
        }
        protocols.insert(u.clone(), MeasurementProtocol { runs });
        alpha.insert(u.clone(), map);
    }
    let procedure = AdaptiveProcedure {
        source: cat.e.scenario().tensor(free.scenario()),
        target: cat.f.scenario().clone(),
        protocols,
        alpha,
    };
    let sim =
        AdaptiveSimulation::new(cat.e.clone(), free, procedure).map_err(|e| extraction("assemble", e.to_string()))?;
    if !check_simulation(&sim, &cat.f)? {
        return Err(extraction("verify", "extracted simulation does not produce f"));
    }
    Ok((sim, merged, d_hat, witness))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::rational::ratio;
    use crate::scenario::{triangle, Assignment};

    fn one(id: &str) -> Scenario {
        Scenario::new(vec![Measurement::binary(id)], vec![]).unwrap()
    }

    fn bit(id: &str, p0: crate::rational::Rational) -> EmpiricalModel {
        let p1 = crate::rational::one() - &p0;
        fixtures::from_global(
            &one(id),
            &[(Assignment::from_pairs([(id, "0")]), p0), (Assignment::from_pairs([(id, "1")]), p1)],
        )
        .unwrap()
    }

    /// Identity on `L.` and a copy-through of `R.L.t` into `R.u`, flipping
    /// the outcome when `L.s = 1`.
    fn relabel_catalyst(d: &EmpiricalModel, e: &EmpiricalModel) -> Catalytic {
        let c = EmpiricalModel::trivial();
        let f = if d.prob(&Assignment::from_pairs([("s", "1")])).unwrap() == crate::rational::one() {
            bit("u", crate::rational::one() - e.prob(&Assignment::from_pairs([("t", "0")])).unwrap())
        } else {
            e.map_ids(|_| "u".to_string())
        };
        let src = d.scenario().tensor(&e.scenario().tensor(c.scenario()));
        let tgt = d.scenario().tensor(f.scenario());
        let q = MeasurementProtocol::sequence(&src, &["L.s", "R.L.t"]).unwrap();
        let flip = q
            .maximal_runs()
            .into_iter()
            .map(|r| {
                let v = if r.0[0].1 == r.0[1].1 { "0" } else { "1" };
                (r, v.to_string())
            })
            .collect();
        let keep = MeasurementProtocol::single(&src, "L.s").unwrap();
        let keep_alpha = keep.maximal_runs().into_iter().map(|r| {
            let o = r.0[0].1.clone();
            (r, o)
        });
        let phi = AdaptiveProcedure {
            source: src,
            target: tgt,
            protocols: [("L.s".to_string(), keep.clone()), ("R.u".to_string(), q)].into(),
            alpha: [("L.s".to_string(), keep_alpha.collect()), ("R.u".to_string(), flip)].into(),
        };
        Catalytic::new(d.clone(), e.clone(), c, f, phi).unwrap()
    }

    #[test]
    fn deterministic_catalyst_relabeling() {
        let d = fixtures::deterministic(&one("s"), &Assignment::from_pairs([("s", "1")])).unwrap();
        let e = bit("t", ratio(1, 4));
        let cat = relabel_catalyst(&d, &e);
        assert_eq!(cat.f, bit("u", ratio(3, 4)));
        let out = extract_catalyst_free(&cat, 3).unwrap();
        assert!(check_simulation(&out.simulation, &cat.f).unwrap());
        assert!(is_noncontextual(&out.certificate.d_hat).unwrap().is_noncontextual());
        assert_eq!((out.certificate.copies, out.certificate.copy), (1, 1));
    }

    #[test]
    fn replication_verifies_and_reports_locality() {
        let d = fixtures::deterministic(&one("s"), &Assignment::from_pairs([("s", "1")])).unwrap();
        let e = bit("t", ratio(1, 3));
        let cat = relabel_catalyst(&d, &e);
        let one_copy = replicate_catalytic(&cat, 1).unwrap();
        assert!(one_copy.verify(&cat).unwrap());
        for n in 2..=3 {
            let rep = replicate_catalytic(&cat, n).unwrap();
            assert!(rep.verify(&cat).unwrap());
            assert_eq!(rep.copy_locality(), vec![true; n]);
        }
        let rep = replicate_catalytic(&cat, 2).unwrap();
        assert_eq!(rep.induced_canonical(1), rep.induced_canonical(2));
        assert!(replicate_catalytic(&cat, 0).is_err());
    }

    #[test]
    fn trivial_catalyst_is_stripped() {
        let d = EmpiricalModel::trivial();
        let e = fixtures::triangle();
        let c = EmpiricalModel::trivial();
        let tgt = d.scenario().tensor(e.scenario());
        let mut phi = AdaptiveProcedure::identity(&tgt).map_source_ids(|x| format!("R.L.{}", &x[2..]));
        phi.source = d.scenario().tensor(&e.scenario().tensor(c.scenario()));
        let cat = Catalytic::new(d, e.clone(), c, e.clone(), phi).unwrap();
        let out = extract_catalyst_free(&cat, 1).unwrap();
        assert!(check_simulation(&out.simulation, &e).unwrap());
        assert!(out.certificate.merged.values().all(|p| *p == MeasurementProtocol::trivial()));
    }

    #[test]
    fn triangle_catalyst_reading_one_context() {
        // f = anticorrelated pair read from context {a, b} of d; d is regenerated from e
        let d = fixtures::triangle();
        let e = fixtures::triangle();
        let pair =
            Scenario::new(vec![Measurement::binary("p"), Measurement::binary("q")], vec![vec!["p", "q"]]).unwrap();
        let f = d.restrict_to(&["a".to_string(), "b".to_string()].into()).unwrap().map_ids(|x| {
            if x == "a" {
                "p".to_string()
            } else {
                "q".to_string()
            }
        });
        assert_eq!(f.scenario(), &pair);
        let c = EmpiricalModel::trivial();
        let src = d.scenario().tensor(&e.scenario().tensor(c.scenario()));
        let tgt = d.scenario().tensor(f.scenario());
        let mut phi = AdaptiveProcedure::identity(&tgt);
        let reads = [("R.p", "L.a"), ("R.q", "L.b"), ("L.a", "R.L.a"), ("L.b", "R.L.b"), ("L.c", "R.L.c")];
        for (u, x) in reads {
            let q = MeasurementProtocol::single(&src, x).unwrap();
            let alpha = q.maximal_runs().into_iter().map(|r| {
                let o = r.0[0].1.clone();
                (r, o)
            });
            phi.protocols.insert(u.into(), q);
            phi.alpha.insert(u.into(), alpha.collect());
        }
        phi.source = src;
        let cat = Catalytic::new(d, e, c, f.clone(), phi).unwrap();
        let out = extract_catalyst_free(&cat, 3).unwrap();
        assert!(check_simulation(&out.simulation, &f).unwrap());
        assert!(is_noncontextual(&out.certificate.d_hat).unwrap().is_noncontextual());
    }

    #[test]
    fn from_simulation_retags() {
        let d = fixtures::deterministic(&triangle(), &Assignment::from_pairs([("a", "0"), ("b", "1"), ("c", "0")]))
            .unwrap();
        let e = bit("t", ratio(1, 2));
        let de = tensor_models(&d, &e);
        let out = crate::simulation::search_simulation(
            &de,
            &de,
            &crate::simulation::Bounds::with_depth(1),
            &crate::simulation::FreeClass::Noncontextual,
        )
        .unwrap();
        let sim = out.found().unwrap();
        let cat = Catalytic::from_simulation(sim, &d, &e, &e.map_ids(|x| x.to_string())).unwrap();
        let ext = extract_catalyst_free(&cat, 2).unwrap();
        assert!(check_simulation(&ext.simulation, &e).unwrap());
    }
}
