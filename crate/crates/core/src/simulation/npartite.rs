//! n-partite simulations: wirings of `d ⊠ c` in which every site only
//! touches its own measurements and its own share of `c`.

use std::cell::Cell;

use super::search::{branch_on_index, hull_search, HullOutcome};
use super::{check_simulation, AdaptiveSimulation, Bounds};
use crate::error::{Error, Result};
use crate::model::{ContextDistribution, EmpiricalModel, PartitionedModel};
use crate::procedure::bracketed_from_sitewise;
use crate::protocol::AdaptiveProcedure;
use crate::rational::Rational;
use crate::scenario::{site_tag, Assignment, Measurement, PartitionedScenario, Scenario};

/// `procedure : MP(flat(d ⊠ free)) → flat(e)`. Source ids are
/// `site<i>.L.x` for the model and `site<i>.R.v` for the free share.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NPartiteSimulation {
    pub free: PartitionedModel,
    pub procedure: AdaptiveProcedure,
}

impl NPartiteSimulation {
    /// Every protocol for a site-`i` target queries only site-`i` ids.
    pub fn check_locality(&self) -> Result<()> {
        for (u, q) in &self.procedure.protocols {
            let site = PartitionedScenario::site_of(u)
                .ok_or_else(|| Error::SiteLocality(format!("target `{u}` carries no site tag")))?;
            if let Some(x) = q.ids().into_iter().find(|x| PartitionedScenario::site_of(x) != Some(site)) {
                return Err(Error::SiteLocality(format!("protocol for `{u}` queries `{x}`")));
            }
        }
        Ok(())
    }

    /// The same wiring read as a simulation `MP(flat(d) ⊗ flat(free))`.
    pub fn to_tensor_form(&self, d: &PartitionedModel) -> AdaptiveSimulation {
        AdaptiveSimulation {
            source: d.model.clone(),
            free: self.free.model.clone(),
            procedure: self.procedure.map_source_ids(bracketed_from_sitewise),
        }
    }
}

/// Moves the leading `site<i>` component behind the `L`/`R` tags that
/// follow it: `site1.L.R.t` → `L.R.site1.t`. Base ids named `L` or `R`
/// are not supported.
pub fn bracketed(id: &str) -> String {
    let parts: Vec<&str> = id.split('.').collect();
    if parts.len() < 2 || PartitionedScenario::site_of(id).is_none() {
        return id.to_string();
    }
    let tags = parts[1..parts.len() - 1].iter().take_while(|p| **p == "L" || **p == "R").count();
    let mut out: Vec<&str> = parts[1..=tags].to_vec();
    out.push(parts[0]);
    out.extend(&parts[tags + 1..]);
    out.join(".")
}

/// Moves the first `site<i>` component to the front: `R.L.P.site2.u` →
/// `site2.R.L.P.u`.
pub fn sitewise(id: &str) -> String {
    let mut parts: Vec<&str> = id.split('.').collect();
    let is_site =
        |p: &str| p.strip_prefix("site").is_some_and(|n| !n.is_empty() && n.bytes().all(|b| b.is_ascii_digit()));
    match parts.iter().position(|p| is_site(p)) {
        Some(k) => {
            let site = parts.remove(k);
            parts.insert(0, site);
            parts.join(".")
        }
        None => id.to_string(),
    }
}

pub fn check_npartite_simulation(sim: &NPartiteSimulation, d: &PartitionedModel, e: &PartitionedModel) -> Result<bool> {
    let n = d.scenario.sites();
    if e.scenario.sites() != n || sim.free.scenario.sites() != n {
        return Err(Error::ScenarioMismatch("site counts differ".into()));
    }
    if sim.procedure.source != d.scenario.boxtimes(&sim.free.scenario)?.flat() {
        return Err(Error::ScenarioMismatch("procedure source is not flat(d ⊠ free)".into()));
    }
    if &sim.procedure.target != e.model.scenario() {
        return Err(Error::ScenarioMismatch("procedure target is not the target model's scenario".into()));
    }
    sim.check_locality()?;
    check_simulation(&sim.to_tensor_form(d), &e.model)
}

#[allow(clippy::large_enum_variant)]
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum NPartiteOutcome {
    Found { sim: NPartiteSimulation, candidates: u64 },
    NotFound { candidates: u64, complete: bool },
}

impl NPartiteOutcome {
    pub fn found(&self) -> Option<&NPartiteSimulation> {
        match self {
            NPartiteOutcome::Found { sim, .. } => Some(sim),
            NPartiteOutcome::NotFound { .. } => None,
        }
    }
}

/// Site-local wirings mixed by shared randomness: every site holds a copy of
/// the same random index.
pub fn search_npartite_simulation(
    d: &PartitionedModel,
    e: &PartitionedModel,
    bounds: &Bounds,
) -> Result<NPartiteOutcome> {
    let n = d.scenario.sites();
    if e.scenario.sites() != n {
        return Err(Error::ScenarioMismatch("site counts differ".into()));
    }
    let visited = Cell::new(0);
    let same_site = |u: &str, x: &str| {
        let s = PartitionedScenario::site_of(u);
        s.is_some() && s == PartitionedScenario::site_of(x)
    };
    match hull_search(&d.model, &e.model, bounds, &same_site, &visited)? {
        HullOutcome::NotFound { complete } => Ok(NPartiteOutcome::NotFound { candidates: visited.get(), complete }),
        HullOutcome::Found(parts) => {
            let free = shared_index(n, &parts.iter().map(|(_, w)| w.clone()).collect::<Vec<_>>());
            let source = d.scenario.boxtimes(&free.scenario)?.flat();
            let site_of = |id: &str| PartitionedScenario::site_of(id).expect("site-tagged id");
            let procedure = branch_on_index(
                source,
                e.model.scenario(),
                &parts,
                |u| format!("{}.R.lambda", site_tag(site_of(u))),
                |x| {
                    let (site, rest) = x.split_once('.').expect("site-tagged id");
                    format!("{site}.L.{rest}")
                },
            );
            let sim = NPartiteSimulation { free, procedure };
            if !check_npartite_simulation(&sim, d, e)? {
                return Err(Error::InvalidProcedure("assembled n-partite simulation failed verification".into()));
            }
            Ok(NPartiteOutcome::Found { sim, candidates: visited.get() })
        }
    }
}

/// `n` perfectly correlated copies of an index with the given weights.
fn shared_index(n: usize, weights: &[Rational]) -> PartitionedModel {
    let labels: Vec<String> = (0..weights.len()).map(|j| j.to_string()).collect();
    let refs: Vec<&str> = labels.iter().map(String::as_str).collect();
    let site = Scenario::new(vec![Measurement::new("lambda", &refs)], vec![]).expect("one measurement");
    let scenario = PartitionedScenario::new(vec![site; n]);
    let flat = scenario.flat();
    let ids: Vec<String> = (1..=n).map(|i| format!("{}.lambda", site_tag(i))).collect();
    let table = ContextDistribution::new(
        ids.iter().cloned().collect(),
        weights
            .iter()
            .zip(&labels)
            .map(|(w, l)| (Assignment::from_pairs(ids.iter().map(|id| (id.clone(), l.clone()))), w.clone())),
    );
    let model = EmpiricalModel::new(flat, vec![table]).expect("weights sum to one");
    PartitionedModel::new(scenario, model).expect("flat scenario")
}
