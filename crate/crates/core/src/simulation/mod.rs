//! Simulations `d ⇝ e`: a deterministic procedure `MP(d ⊗ c) → e` with a
//! free model `c`. Checking, bounded search, n-partite wirings, catalyst
//! replication and elimination, and the no-catalysis audit.

mod audit;
mod catalysis;
pub mod family;
mod npartite;
mod search;

use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};

use crate::contextuality::{is_noncontextual, ncf};
use crate::error::{Error, Result};
use crate::model::{validate_model, EmpiricalModel};
use crate::protocol::{AdaptiveProcedure, TaggedProduct};
use crate::scenario::{Scenario, ValidationReport};

pub use audit::{audit_no_catalysis, audit_no_catalysis_npartite, AuditEntry, AuditReport, AuditTriple, TripleOutcome};
pub use catalysis::{
    extract_catalyst_free, replicate_catalytic, Catalytic, Extraction, ExtractionCertificate, Replicated,
};
pub use npartite::{
    bracketed, check_npartite_simulation, search_npartite_simulation, sitewise, NPartiteOutcome, NPartiteSimulation,
};
pub use search::{search_simulation, Bounds, FreeClass, SearchOutcome, DEFAULT_CAP};

/// `procedure : MP(S ⊗ V) → T` applied to `source ⊗ free`, with source ids
/// tagged `L.` and free ids tagged `R.`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AdaptiveSimulation {
    pub source: EmpiricalModel,
    pub free: EmpiricalModel,
    pub procedure: AdaptiveProcedure,
}

impl AdaptiveSimulation {
    pub fn new(source: EmpiricalModel, free: EmpiricalModel, procedure: AdaptiveProcedure) -> Result<Self> {
        let sim = AdaptiveSimulation { source, free, procedure };
        sim.validate().into_result(Error::InvalidProcedure)?;
        Ok(sim)
    }

    pub fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::default();
        let expected = self.source.scenario().tensor(self.free.scenario());
        if self.procedure.source != expected {
            report.push("procedure source is not source ⊗ free");
            return report;
        }
        report.violations.extend(self.procedure.validate().violations);
        report
    }

    pub fn target(&self) -> &Scenario {
        &self.procedure.target
    }

    /// `source ⊗ free`, evaluated lazily.
    pub fn joint(&self) -> TaggedProduct<'_> {
        TaggedProduct::new(&[("L", &self.source), ("R", &self.free)])
    }

    /// The simulated model.
    pub fn output(&self) -> Result<EmpiricalModel> {
        self.validate().into_result(Error::InvalidProcedure)?;
        self.procedure.pushforward(&self.joint())
    }
}

/// Exact comparison of the pushed tables with `e` on every maximal context.
pub fn check_simulation(sim: &AdaptiveSimulation, e: &EmpiricalModel) -> Result<bool> {
    if e.scenario() != sim.target() {
        return Err(Error::ScenarioMismatch("target model is not on the simulation's target".into()));
    }
    validate_model(e).into_result(Error::InvalidModel)?;
    sim.validate().into_result(Error::InvalidProcedure)?;
    let joint = sim.joint();
    for (sigma, table) in e.scenario().maximal_contexts().iter().zip(e.tables()) {
        if &sim.procedure.push_context(&joint, sigma)? != table {
            return Ok(false);
        }
    }
    if MONO_AUDIT.load(Ordering::Relaxed) {
        audit_monotonicity(sim, e)?;
    }
    Ok(true)
}

static MONO_AUDIT: AtomicBool = AtomicBool::new(false);
static MONO_CHECKED: AtomicU64 = AtomicU64::new(0);
static MONO_VIOLATIONS: AtomicU64 = AtomicU64::new(0);
static MONO_SKIPPED: AtomicU64 = AtomicU64::new(0);

/// When on, every successful [`check_simulation`] with a noncontextual free
/// model also compares `NCF(source)` with `NCF(target)`.
pub fn set_monotonicity_audit(on: bool) {
    MONO_AUDIT.store(on, Ordering::Relaxed);
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct MonotonicityStats {
    pub checked: u64,
    pub violations: u64,
    /// Verified simulations whose free model was contextual.
    pub skipped: u64,
}

pub fn monotonicity_stats() -> MonotonicityStats {
    MonotonicityStats {
        checked: MONO_CHECKED.load(Ordering::Relaxed),
        violations: MONO_VIOLATIONS.load(Ordering::Relaxed),
        skipped: MONO_SKIPPED.load(Ordering::Relaxed),
    }
}

fn audit_monotonicity(sim: &AdaptiveSimulation, e: &EmpiricalModel) -> Result<()> {
    if !is_noncontextual(&sim.free)?.is_noncontextual() {
        MONO_SKIPPED.fetch_add(1, Ordering::Relaxed);
        return Ok(());
    }
    MONO_CHECKED.fetch_add(1, Ordering::Relaxed);
    if ncf(&sim.source)?.value > ncf(e)?.value {
        MONO_VIOLATIONS.fetch_add(1, Ordering::Relaxed);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::model::tensor_models;
    use crate::protocol::MeasurementProtocol;
    use crate::scenario::{triangle, Assignment};

    /// One-step protocols reading `L.<u>`.
    pub(crate) fn identity_wiring(d: &EmpiricalModel, free: &EmpiricalModel) -> AdaptiveProcedure {
        let id = AdaptiveProcedure::identity(d.scenario());
        let mut p = id.map_source_ids(|x| format!("L.{x}"));
        p.source = d.scenario().tensor(free.scenario());
        p
    }

    #[test]
    fn identity_wiring_reproduces_source() {
        let t = fixtures::triangle();
        let c = EmpiricalModel::trivial();
        let sim = AdaptiveSimulation::new(t.clone(), c.clone(), identity_wiring(&t, &c)).unwrap();
        assert!(check_simulation(&sim, &t).unwrap());
        let u = fixtures::uniform(&triangle());
        assert!(!check_simulation(&sim, &u).unwrap());
    }

    #[test]
    fn deterministic_model_from_free_part() {
        let s = triangle();
        let g = Assignment::from_pairs([("a", "0"), ("b", "0"), ("c", "1")]);
        let det = fixtures::deterministic(&s, &g).unwrap();
        let d = EmpiricalModel::trivial();
        let mut p = AdaptiveProcedure::identity(&s).map_source_ids(|x| format!("R.{x}"));
        p.source = d.scenario().tensor(&s);
        let sim = AdaptiveSimulation::new(d, det.clone(), p).unwrap();
        assert!(check_simulation(&sim, &det).unwrap());
    }

    #[test]
    fn wrong_source_scenario_rejected() {
        let t = fixtures::triangle();
        let c = EmpiricalModel::trivial();
        let p = AdaptiveProcedure::identity(t.scenario());
        assert!(AdaptiveSimulation::new(t.clone(), c, p).is_err());
        let sim = AdaptiveSimulation {
            source: t.clone(),
            free: EmpiricalModel::trivial(),
            procedure: identity_wiring(&t, &EmpiricalModel::trivial()),
        };
        let other = tensor_models(&t, &t);
        assert!(matches!(check_simulation(&sim, &other), Err(Error::ScenarioMismatch(_))));
    }

    #[test]
    fn adaptive_readout_of_free_bit() {
        // measure a; on 0 output the free bit, on 1 output its flip
        let t = fixtures::triangle();
        let bit = fixtures::uniform(&Scenario::new(vec![crate::scenario::Measurement::binary("r")], vec![]).unwrap());
        let src = t.scenario().tensor(bit.scenario());
        let q = MeasurementProtocol::sequence(&src, &["L.a", "R.r"]).unwrap();
        let target = Scenario::new(vec![crate::scenario::Measurement::binary("z")], vec![]).unwrap();
        let alpha = q
            .maximal_runs()
            .into_iter()
            .map(|r| {
                let v = if r.0[0].1 == r.0[1].1 { "0" } else { "1" };
                (r, v.to_string())
            })
            .collect();
        let p = AdaptiveProcedure {
            source: src,
            target: target.clone(),
            protocols: [("z".to_string(), q)].into(),
            alpha: [("z".to_string(), alpha)].into(),
        };
        let sim = AdaptiveSimulation::new(t, bit, p).unwrap();
        assert_eq!(sim.output().unwrap(), fixtures::uniform(&target));
    }
}
