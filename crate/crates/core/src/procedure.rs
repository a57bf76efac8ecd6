//! Deterministic procedures `⟨π, α⟩ : S → T` and pushforward of models.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::model::{validate_model, ContextDistribution, EmpiricalModel};
use crate::scenario::{is_simplicial, site_tag, Assignment, PartitionedScenario, Scenario, ValidationReport};

/// `pi` sends each target measurement to a source measurement; `alpha[x]`
/// translates outcomes of `pi[x]` into outcomes of `x`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DeterministicProcedure {
    pub source: Scenario,
    pub target: Scenario,
    pub pi: BTreeMap<String, String>,
    pub alpha: BTreeMap<String, BTreeMap<String, String>>,
}

impl DeterministicProcedure {
    pub fn identity(s: &Scenario) -> Self {
        Self::renaming(s, |id| id.to_string())
    }

    /// Target is `s` with ids renamed by `f`; outcome maps are identities.
    pub fn renaming(s: &Scenario, f: impl Fn(&str) -> String) -> Self {
        let target = s.map_ids(&f);
        let mut pi = BTreeMap::new();
        let mut alpha = BTreeMap::new();
        for (id, outs) in s.measurements() {
            let t = f(id);
            pi.insert(t.clone(), id.clone());
            alpha.insert(t, outs.iter().map(|o| (o.clone(), o.clone())).collect());
        }
        DeterministicProcedure { source: s.clone(), target, pi, alpha }
    }

    pub fn validate(&self) -> ValidationReport {
        validate_procedure(self)
    }

    /// Image of each maximal target context under the coordinatewise outcome map.
    pub fn pushforward(&self, e: &EmpiricalModel) -> Result<EmpiricalModel> {
        if e.scenario() != &self.source {
            return Err(Error::ScenarioMismatch("model is not on the procedure's source".into()));
        }
        validate_procedure(self).into_result(Error::InvalidProcedure)?;
        let mut tables = Vec::with_capacity(self.target.maximal_contexts().len());
        for sigma in self.target.maximal_contexts() {
            let image: BTreeSet<String> = sigma.iter().map(|x| self.pi[x].clone()).collect();
            let src = e.marginal(&image)?;
            let weights = src.support().map(|(s, w)| {
                let t = Assignment::from_pairs(sigma.iter().map(|x| {
                    let o = s.get(&self.pi[x]).expect("image covers pi(x)");
                    (x.clone(), self.alpha[x][o].clone())
                }));
                (t, w.clone())
            });
            tables.push(ContextDistribution::new(sigma.clone(), weights.collect::<Vec<_>>()));
        }
        EmpiricalModel::assemble(self.target.clone(), tables)
    }

    /// Exact check of `⟨π,α⟩_*(d) = e`.
    pub fn simulates(&self, d: &EmpiricalModel, e: &EmpiricalModel) -> Result<bool> {
        check_det_simulation(self, d, e)
    }
}

pub fn validate_procedure(p: &DeterministicProcedure) -> ValidationReport {
    let mut report = ValidationReport::default();
    for x in p.target.ids() {
        let Some(src) = p.pi.get(x) else {
            report.push(format!("pi undefined at `{x}`"));
            continue;
        };
        let Ok(src_outs) = p.source.outcomes(src) else {
            report.push(format!("pi(`{x}`) = `{src}` is not a source measurement"));
            continue;
        };
        let tgt_outs = p.target.outcomes(x).expect("target id");
        let Some(map) = p.alpha.get(x) else {
            report.push(format!("alpha missing for `{x}`"));
            continue;
        };
        for o in src_outs {
            match map.get(o) {
                None => report.push(format!("alpha[`{x}`] undefined at outcome `{o}`")),
                Some(v) if !tgt_outs.contains(v) => {
                    report.push(format!("alpha[`{x}`]({o}) = `{v}` is not an outcome of `{x}`"))
                }
                _ => {}
            }
        }
        for o in map.keys() {
            if !src_outs.contains(o) {
                report.push(format!("alpha[`{x}`] mentions unknown source outcome `{o}`"));
            }
        }
    }
    for k in p.pi.keys() {
        if !p.target.contains(k) {
            report.push(format!("pi mentions unknown target measurement `{k}`"));
        }
    }
    if report.is_valid() {
        match is_simplicial(&p.pi, &p.source, &p.target) {
            Ok(true) => {}
            Ok(false) => report.push("pi is not simplicial"),
            Err(e) => report.push(e.to_string()),
        }
    }
    report
}

/// `q ∘ p`: first `p : S → T`, then `q : T → U`.
pub fn compose_procedures(p: &DeterministicProcedure, q: &DeterministicProcedure) -> Result<DeterministicProcedure> {
    if p.target != q.source {
        return Err(Error::ScenarioMismatch("target of the first procedure is not the source of the second".into()));
    }
    validate_procedure(p).into_result(Error::InvalidProcedure)?;
    validate_procedure(q).into_result(Error::InvalidProcedure)?;
    let mut pi = BTreeMap::new();
    let mut alpha = BTreeMap::new();
    for x in q.target.ids() {
        let mid = &q.pi[x];
        let src = &p.pi[mid];
        pi.insert(x.clone(), src.clone());
        let map = p.alpha[mid].iter().map(|(o, m)| (o.clone(), q.alpha[x][m].clone())).collect();
        alpha.insert(x.clone(), map);
    }
    Ok(DeterministicProcedure { source: p.source.clone(), target: q.target.clone(), pi, alpha })
}

pub fn check_det_simulation(p: &DeterministicProcedure, d: &EmpiricalModel, e: &EmpiricalModel) -> Result<bool> {
    if e.scenario() != &p.target {
        return Err(Error::ScenarioMismatch("target model is not on the procedure's target".into()));
    }
    validate_model(e).into_result(Error::InvalidModel)?;
    Ok(&p.pushforward(d)? == e)
}

/// Mutually inverse retaggings between `(⊗S_i) ⊗ (⊗T_i)` (ids
/// `L.site<i>.x`, `R.site<i>.y`) and `⊗(S_i ⊗ T_i)` (ids `site<i>.L.x`,
/// `site<i>.R.y`). The first procedure goes from the former to the latter.
pub fn canonical_partition_iso(
    s: &PartitionedScenario,
    t: &PartitionedScenario,
) -> Result<(DeterministicProcedure, DeterministicProcedure)> {
    if s.sites() != t.sites() {
        return Err(Error::ScenarioMismatch(format!("site counts differ: {} vs {}", s.sites(), t.sites())));
    }
    let bracketed = s.flat().tensor(&t.flat());
    let forward = DeterministicProcedure::renaming(&bracketed, sitewise_from_bracketed);
    let back = DeterministicProcedure::renaming(&forward.target, bracketed_from_sitewise);
    debug_assert_eq!(back.target, bracketed);
    Ok((forward, back))
}

/// `L.site3.x` → `site3.L.x`.
pub fn sitewise_from_bracketed(id: &str) -> String {
    let (side, rest) = id.split_once('.').expect("tagged id");
    let (site, inner) = rest.split_once('.').expect("site-tagged id");
    format!("{site}.{side}.{inner}")
}

/// `site3.L.x` → `L.site3.x`.
pub fn bracketed_from_sitewise(id: &str) -> String {
    let (site, rest) = id.split_once('.').expect("site-tagged id");
    let (side, inner) = rest.split_once('.').expect("tagged id");
    format!("{side}.{site}.{inner}")
}

/// Whether `id` is tagged with site `i`.
pub fn on_site(id: &str, i: usize) -> bool {
    id.split_once('.').is_some_and(|(tag, _)| tag == site_tag(i))
}
