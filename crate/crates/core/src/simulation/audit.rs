//! The no-catalysis audit: for each triple `(d, e, f)`, search for
//! `d ⊗ e ⇝ d ⊗ f` (or `d ⊠ e ⇝ d ⊠ f`) and, whenever one is found, extract
//! and verify `e ⇝ f`.

use serde::Serialize;

use super::catalysis::{extract_catalyst_free, Catalytic, Extraction};
use super::npartite::{bracketed, check_npartite_simulation, search_npartite_simulation, sitewise};
use super::{
    search_simulation, AdaptiveSimulation, Bounds, FreeClass, NPartiteOutcome, NPartiteSimulation, SearchOutcome,
};
use crate::contextuality::is_noncontextual;
use crate::error::{Error, Result};
use crate::model::{boxtimes, tensor_models, EmpiricalModel, PartitionedModel};
use crate::scenario::{PartitionedScenario, Scenario};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AuditTriple<M> {
    pub label: String,
    pub d: M,
    pub e: M,
    pub f: M,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum TripleOutcome {
    /// No conversion within bounds; `complete` when the bounds cover all.
    NotFound {
        complete: bool,
    },
    /// A conversion was found and `e ⇝ f` extracted and verified.
    Extracted {
        copies: usize,
        copy: usize,
        d_hat_measurements: usize,
    },
    CapExceeded {
        visited: u64,
    },
    /// Extraction or verification failed; `replay` is the catalytic
    /// procedure in canonical form.
    Violation {
        step: String,
        detail: String,
        replay: String,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AuditEntry {
    pub label: String,
    pub candidates: u64,
    #[serde(flatten)]
    pub outcome: TripleOutcome,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct AuditReport {
    pub semantics: String,
    pub entries: Vec<AuditEntry>,
}

impl AuditReport {
    pub fn violations(&self) -> usize {
        self.count(|o| matches!(o, TripleOutcome::Violation { .. }))
    }

    pub fn extracted(&self) -> usize {
        self.count(|o| matches!(o, TripleOutcome::Extracted { .. }))
    }

    pub fn cap_exceeded(&self) -> usize {
        self.count(|o| matches!(o, TripleOutcome::CapExceeded { .. }))
    }

    pub fn not_found(&self) -> usize {
        self.count(|o| matches!(o, TripleOutcome::NotFound { .. }))
    }

    fn count(&self, pred: impl Fn(&TripleOutcome) -> bool) -> usize {
        self.entries.iter().filter(|e| pred(&e.outcome)).count()
    }

    pub fn summary(&self) -> String {
        format!(
            "{} triples ({}): {} extracted, {} not found, {} cap exceeded, {} violations",
            self.entries.len(),
            self.semantics,
            self.extracted(),
            self.not_found(),
            self.cap_exceeded(),
            self.violations()
        )
    }
}

/// How many copies extraction may replicate before giving up.
const MAX_COPIES: usize = 4;

fn violation(err: Error, replay: String) -> TripleOutcome {
    match err {
        Error::Extraction { step, detail } => TripleOutcome::Violation { step, detail, replay },
        other => TripleOutcome::Violation { step: "internal".into(), detail: other.to_string(), replay },
    }
}

fn extracted(x: &Extraction) -> TripleOutcome {
    TripleOutcome::Extracted {
        copies: x.certificate.copies,
        copy: x.certificate.copy,
        d_hat_measurements: x.certificate.d_hat.scenario().len(),
    }
}

/// Tensor semantics with the given free class. With an explicit class the
/// extracted simulation consumes `d̂ ⊗ c` with `c` from the class and `d̂`
/// verified noncontextual.
pub fn audit_no_catalysis(triples: &[AuditTriple<EmpiricalModel>], bounds: &Bounds, class: &FreeClass) -> AuditReport {
    let semantics = match class {
        FreeClass::Noncontextual => "tensor".to_string(),
        FreeClass::Explicit(ms) => format!("tensor, explicit class of {}", ms.len()),
    };
    let entries = triples
        .iter()
        .map(|t| {
            let (candidates, outcome) = audit_tensor(t, bounds, class);
            AuditEntry { label: t.label.clone(), candidates, outcome }
        })
        .collect();
    AuditReport { semantics, entries }
}

fn audit_tensor(t: &AuditTriple<EmpiricalModel>, bounds: &Bounds, class: &FreeClass) -> (u64, TripleOutcome) {
    let source = tensor_models(&t.d, &t.e);
    let target = tensor_models(&t.d, &t.f);
    let sim = match search_simulation(&source, &target, bounds, class) {
        Ok(SearchOutcome::Found { sim, candidates }) => (sim, candidates),
        Ok(SearchOutcome::NotFound { candidates, complete }) => {
            return (candidates, TripleOutcome::NotFound { complete })
        }
        Err(Error::CapExceeded { visited, .. }) => return (visited, TripleOutcome::CapExceeded { visited }),
        Err(err) => return (0, violation(err, String::new())),
    };
    let (sim, candidates) = sim;
    let replay = sim.procedure.canonical();
    let outcome = Catalytic::from_simulation(&sim, &t.d, &t.e, &t.f)
        .and_then(|cat| extract_catalyst_free(&cat, MAX_COPIES))
        .and_then(|x| {
            if let FreeClass::Explicit(ms) = class {
                if !ms.contains(&sim.free) {
                    return Err(Error::Extraction {
                        step: "class".into(),
                        detail: "free model outside the class".into(),
                    });
                }
            }
            Ok(extracted(&x))
        });
    match outcome {
        Ok(o) => (candidates, o),
        Err(err) => (candidates, violation(err, replay)),
    }
}

/// Sitewise semantics: conversions `d ⊠ e ⇝ d ⊠ f` by site-local wirings
/// with shared randomness, and site-local extracted simulations.
pub fn audit_no_catalysis_npartite(triples: &[AuditTriple<PartitionedModel>], bounds: &Bounds) -> AuditReport {
    let entries = triples
        .iter()
        .map(|t| {
            let (candidates, outcome) = audit_sitewise(t, bounds);
            AuditEntry { label: t.label.clone(), candidates, outcome }
        })
        .collect();
    AuditReport { semantics: "sitewise".into(), entries }
}

fn audit_sitewise(t: &AuditTriple<PartitionedModel>, bounds: &Bounds) -> (u64, TripleOutcome) {
    let pair = boxtimes(&t.d, &t.e).and_then(|s| Ok((s, boxtimes(&t.d, &t.f)?)));
    let (source, target) = match pair {
        Ok(p) => p,
        Err(err) => return (0, violation(err, String::new())),
    };
    let (sim, candidates) = match search_npartite_simulation(&source, &target, bounds) {
        Ok(NPartiteOutcome::Found { sim, candidates }) => (sim, candidates),
        Ok(NPartiteOutcome::NotFound { candidates, complete }) => {
            return (candidates, TripleOutcome::NotFound { complete })
        }
        Err(Error::CapExceeded { visited, .. }) => return (visited, TripleOutcome::CapExceeded { visited }),
        Err(err) => return (0, violation(err, String::new())),
    };
    let replay = sim.procedure.canonical();
    match extract_sitewise(t, &sim) {
        Ok(x) => (candidates, extracted(&x)),
        Err(err) => (candidates, violation(err, replay)),
    }
}

/// Reads the n-partite conversion in tensor form, extracts, and reads the
/// result back as a site-local simulation of `f` from `e`.
fn extract_sitewise(t: &AuditTriple<PartitionedModel>, sim: &NPartiteSimulation) -> Result<Extraction> {
    let tensor = AdaptiveSimulation {
        source: tensor_models(&t.d.model, &t.e.model),
        free: sim.free.model.clone(),
        procedure: sim.procedure.map_source_ids(bracketed).map_target_ids(bracketed),
    };
    let cat = Catalytic::from_simulation(&tensor, &t.d.model, &t.e.model, &t.f.model)?;
    let x = extract_catalyst_free(&cat, MAX_COPIES)?;
    let free_flat = x.simulation.free.map_ids(sitewise);
    let n = t.e.scenario.sites();
    let parts: Vec<Scenario> = (1..=n)
        .map(|i| {
            let prefix = format!("site{i}.");
            let keep = free_flat.scenario().ids().filter(|id| id.starts_with(&prefix)).cloned().collect();
            free_flat.scenario().restrict(&keep).map_ids(|id| id[prefix.len()..].to_string())
        })
        .collect();
    let scenario = PartitionedScenario::new(parts);
    if &scenario.flat() != free_flat.scenario() {
        return Err(Error::Extraction {
            step: "sites".into(),
            detail: "free model of the extracted simulation does not split into sites".into(),
        });
    }
    let free = PartitionedModel::new(scenario, free_flat)?;
    let mut procedure = x.simulation.procedure.map_source_ids(sitewise);
    procedure.source = t.e.scenario.boxtimes(&free.scenario)?.flat();
    let local = NPartiteSimulation { free, procedure };
    let ok = check_npartite_simulation(&local, &t.e, &t.f).map_err(|err| match err {
        Error::SiteLocality(d) => Error::Extraction { step: "locality".into(), detail: d },
        other => other,
    })?;
    if !ok {
        return Err(Error::Extraction {
            step: "verify".into(),
            detail: "site-local reading does not produce f".into(),
        });
    }
    if !is_noncontextual(&local.free.model)?.is_noncontextual() {
        return Err(Error::Extraction {
            step: "noncontextuality".into(),
            detail: "shared free model is nonlocal".into(),
        });
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::simulation::family::{micro_models, micro_partitioned};

    #[test]
    fn equal_pairs_pass() {
        let ms = micro_models();
        let triples: Vec<_> = ms
            .iter()
            .take(6)
            .map(|(l, m)| AuditTriple {
                label: format!("{l}|{l}"),
                d: m.clone(),
                e: ms[3].1.clone(),
                f: ms[3].1.clone(),
            })
            .collect();
        let report = audit_no_catalysis(&triples, &Bounds::with_depth(1), &FreeClass::Noncontextual);
        assert_eq!(report.violations(), 0);
        assert_eq!(report.extracted(), triples.len());
    }

    #[test]
    fn sitewise_sample() {
        let ms = micro_partitioned();
        let triples: Vec<_> = [(0, 3, 5), (4, 1, 9), (9, 9, 2)]
            .iter()
            .map(|&(a, b, c)| AuditTriple {
                label: format!("{a},{b},{c}"),
                d: ms[a].1.clone(),
                e: ms[b].1.clone(),
                f: ms[c].1.clone(),
            })
            .collect();
        let report = audit_no_catalysis_npartite(&triples, &Bounds::with_depth(1));
        assert_eq!(report.violations(), 0, "{:?}", report.entries);
    }

    #[test]
    fn report_serializes() {
        let r = AuditReport {
            semantics: "tensor".into(),
            entries: vec![AuditEntry {
                label: "x".into(),
                candidates: 3,
                outcome: TripleOutcome::NotFound { complete: true },
            }],
        };
        let v = serde_json::to_value(&r).unwrap();
        assert_eq!(v["entries"][0]["outcome"], "not_found");
        assert!(r.summary().contains("1 not found"));
    }

    #[test]
    fn contextual_triple_not_found() {
        let t = AuditTriple {
            label: "trivial,trivial,triangle".into(),
            d: EmpiricalModel::trivial(),
            e: EmpiricalModel::trivial(),
            f: fixtures::triangle(),
        };
        let report = audit_no_catalysis(&[t], &Bounds::with_depth(1), &FreeClass::Noncontextual);
        assert_eq!(report.entries[0].outcome, TripleOutcome::NotFound { complete: true });
    }
}
