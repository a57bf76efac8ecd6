//! Runs, measurement protocols, the `MP(e)` tables, merging, restriction and
//! adaptive procedures `MP(S) → U`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::Bound::{Excluded, Unbounded};

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ContextDistribution, EmpiricalModel};
use crate::procedure::DeterministicProcedure;
use crate::rational::Rational;
use crate::scenario::{Assignment, Context, Scenario, ValidationReport};

/// A sequence of distinct measurements with their observed outcomes. The
/// empty run is written `Λ`.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Run(pub Vec<(String, String)>);

impl Run {
    pub fn empty() -> Self {
        Run(Vec::new())
    }

    pub fn from_steps<I, K, V>(steps: I) -> Self
    where
        I: IntoIterator<Item = (K, V)>,
        K: Into<String>,
        V: Into<String>,
    {
        Run(steps.into_iter().map(|(k, v)| (k.into(), v.into())).collect())
    }

    pub fn steps(&self) -> &[(String, String)] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn context(&self) -> Context {
        self.0.iter().map(|(x, _)| x.clone()).collect()
    }

    pub fn assignment(&self) -> Assignment {
        Assignment::from_pairs(self.0.iter().cloned())
    }

    pub fn outcome_of(&self, id: &str) -> Option<&String> {
        self.0.iter().find(|(x, _)| x == id).map(|(_, o)| o)
    }

    pub fn extended(&self, id: &str, outcome: &str) -> Run {
        let mut r = self.clone();
        r.0.push((id.to_string(), outcome.to_string()));
        r
    }

    pub fn is_prefix_of(&self, other: &Run) -> bool {
        other.0.starts_with(&self.0)
    }

    pub fn prefixes(&self) -> impl Iterator<Item = Run> + '_ {
        (0..=self.0.len()).map(|k| Run(self.0[..k].to_vec()))
    }

    pub fn map_ids(&self, f: impl Fn(&str) -> String) -> Run {
        Run(self.0.iter().map(|(x, o)| (f(x), o.clone())).collect())
    }

    /// Outcome label used when the run is an outcome of a protocol.
    pub fn label(&self) -> String {
        if self.0.is_empty() {
            return "Λ".to_string();
        }
        self.0.iter().map(|(x, o)| format!("{x}:{o}")).collect::<Vec<_>>().join("|")
    }

    pub fn validate(&self, s: &Scenario) -> ValidationReport {
        let mut report = ValidationReport::default();
        let mut seen = BTreeSet::new();
        for (x, o) in &self.0 {
            if !seen.insert(x) {
                report.push(format!("run {self} repeats `{x}`"));
            }
            match s.outcomes(x) {
                Err(_) => report.push(format!("run {self} uses unknown measurement `{x}`")),
                Ok(outs) if !outs.contains(o) => report.push(format!("run {self} has illegal outcome `{o}` for `{x}`")),
                _ => {}
            }
        }
        if report.is_valid() && !s.is_context(seen) {
            report.push(format!("measurements of run {self} do not form a context"));
        }
        report
    }
}

impl fmt::Display for Run {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "Λ");
        }
        let parts: Vec<String> = self.0.iter().map(|(x, o)| format!("{x}{o}")).collect();
        write!(f, "({})", parts.join(" "))
    }
}

pub fn runs_consistent(x: &Run, y: &Run) -> bool {
    x.0.iter().all(|(z, o)| y.outcome_of(z).is_none_or(|p| p == o))
}

/// `x ∗ y`: `x` followed by the steps of `y` not already measured in `x`;
/// `Λ` when the runs disagree.
pub fn merge_runs(x: &Run, y: &Run) -> Run {
    let mut out = x.clone();
    for (z, o) in &y.0 {
        match x.outcome_of(z) {
            Some(p) if p == o => {}
            Some(_) => return Run::empty(),
            None => out.0.push((z.clone(), o.clone())),
        }
    }
    out
}

/// `x ∖ t`: drops the steps whose measurement is in the domain of `t`.
pub fn run_minus(x: &Run, t: &Assignment) -> Run {
    Run(x.0.iter().filter(|(z, _)| t.get(z).is_none()).cloned().collect())
}

/// A finite set of runs, kept sorted, which is the canonical form.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct MeasurementProtocol {
    pub runs: BTreeSet<Run>,
}

impl MeasurementProtocol {
    /// `{Λ}`: measure nothing.
    pub fn trivial() -> Self {
        MeasurementProtocol { runs: [Run::empty()].into() }
    }

    pub fn from_runs(runs: impl IntoIterator<Item = Run>) -> Self {
        MeasurementProtocol { runs: runs.into_iter().collect() }
    }

    /// Grows the protocol tree: `next(run)` names the measurement to perform
    /// after `run`, or `None` to stop.
    pub fn from_tree(s: &Scenario, mut next: impl FnMut(&Run) -> Option<String>) -> Result<Self> {
        let mut runs = BTreeSet::new();
        let mut stack = vec![Run::empty()];
        while let Some(r) = stack.pop() {
            if let Some(x) = next(&r) {
                for o in s.outcomes(&x)? {
                    stack.push(r.extended(&x, o));
                }
            }
            runs.insert(r);
        }
        let p = MeasurementProtocol { runs };
        p.validate(s).into_result(Error::InvalidProtocol)?;
        Ok(p)
    }

    /// Measures `id` and stops.
    pub fn single(s: &Scenario, id: &str) -> Result<Self> {
        Self::from_tree(s, |r| r.is_empty().then(|| id.to_string()))
    }

    /// Measures `ids` in order regardless of outcomes.
    pub fn sequence(s: &Scenario, ids: &[&str]) -> Result<Self> {
        Self::from_tree(s, |r| ids.get(r.len()).map(|x| x.to_string()))
    }

    pub fn validate(&self, s: &Scenario) -> ValidationReport {
        validate_protocol(s, &self.runs)
    }

    /// The measurement performed after `r`, if `r` is not maximal.
    pub fn next(&self, r: &Run) -> Option<&str> {
        let after = self.runs.range((Excluded(r), Unbounded)).next()?;
        (after.len() > r.len() && r.is_prefix_of(after)).then(|| after.0[r.len()].0.as_str())
    }

    pub fn maximal_runs(&self) -> Vec<Run> {
        self.runs.iter().filter(|r| self.next(r).is_none()).cloned().collect()
    }

    pub fn ids(&self) -> BTreeSet<String> {
        self.runs.iter().flat_map(|r| r.0.iter().map(|(x, _)| x.clone())).collect()
    }

    pub fn depth(&self) -> usize {
        self.runs.iter().map(Run::len).max().unwrap_or(0)
    }

    pub fn map_ids(&self, f: impl Fn(&str) -> String) -> Self {
        MeasurementProtocol { runs: self.runs.iter().map(|r| r.map_ids(&f)).collect() }
    }
}

pub fn maximal_runs(q: &MeasurementProtocol) -> Vec<Run> {
    q.maximal_runs()
}

/// Checks every run, then nonemptiness with `Λ`, prefix closure, outcome
/// completeness and determinacy.
pub fn validate_protocol(s: &Scenario, runs: &BTreeSet<Run>) -> ValidationReport {
    let mut report = ValidationReport::default();
    if !runs.contains(&Run::empty()) {
        report.push("protocol does not contain Λ");
    }
    for r in runs {
        for v in r.validate(s).violations {
            report.push(v);
        }
        let Some(((x, _), parent)) = r.0.split_last().map(|(last, init)| (last, Run(init.to_vec()))) else {
            continue;
        };
        if !runs.contains(&parent) {
            report.push(format!("prefix {parent} of {r} is missing"));
        }
        if let Ok(outs) = s.outcomes(x) {
            for o in outs {
                let sibling = parent.extended(x, o);
                if !runs.contains(&sibling) {
                    report.push(format!("{r} is present but {sibling} is not"));
                }
            }
        }
        let rival = runs
            .range(&parent..)
            .skip(1)
            .take_while(|y| parent.is_prefix_of(y))
            .find(|y| y.len() > parent.len() && y.0[parent.len()].0 != *x);
        if let Some(y) = rival {
            report.push(format!("{r} and {y} measure different things after {parent}"));
        }
    }
    report
}

/// Whether any pairwise-consistent choice of runs, one per protocol, has
/// jointly a context. Checking maximal runs suffices since consistent
/// prefixes always extend to consistent maximal runs.
pub fn protocols_compatible(s: &Scenario, qs: &[&MeasurementProtocol]) -> bool {
    incompatibility_witness(s, qs).is_none()
}

/// A pairwise-consistent choice of maximal runs whose joint measurements are
/// not a context.
pub fn incompatibility_witness(s: &Scenario, qs: &[&MeasurementProtocol]) -> Option<Vec<Run>> {
    let maxima: Vec<Vec<Run>> = qs.iter().map(|q| q.maximal_runs()).collect();
    let mut chosen: Vec<Run> = Vec::new();
    let mut found = None;
    fn search(s: &Scenario, maxima: &[Vec<Run>], chosen: &mut Vec<Run>, ctx: &Context, found: &mut Option<Vec<Run>>) {
        if found.is_some() || chosen.len() == maxima.len() {
            return;
        }
        for r in &maxima[chosen.len()] {
            if !chosen.iter().all(|c| runs_consistent(c, r)) {
                continue;
            }
            let mut next: Context = ctx.clone();
            next.extend(r.context());
            chosen.push(r.clone());
            if !s.is_context(&next) {
                *found = Some(chosen.clone());
                return;
            }
            search(s, maxima, chosen, &next, found);
            chosen.pop();
            if found.is_some() {
                return;
            }
        }
    }
    search(s, &maxima, &mut chosen, &Context::new(), &mut found);
    found
}

/// Anything that assigns probabilities to joint outcomes of contexts.
pub trait Joint {
    fn scenario(&self) -> &Scenario;
    /// `e_{dom(a)}(a)`; the domain must be a context.
    fn prob(&self, a: &Assignment) -> Result<Rational>;
}

impl Joint for EmpiricalModel {
    fn scenario(&self) -> &Scenario {
        EmpiricalModel::scenario(self)
    }

    fn prob(&self, a: &Assignment) -> Result<Rational> {
        EmpiricalModel::prob(self, a)
    }
}

/// The tensor of tagged models, evaluated lazily. Tags must be prefix-free.
pub struct TaggedProduct<'a> {
    scenario: Scenario,
    parts: Vec<(String, &'a EmpiricalModel)>,
}

impl<'a> TaggedProduct<'a> {
    pub fn new(parts: &[(&str, &'a EmpiricalModel)]) -> Self {
        let scen: Vec<(&str, &Scenario)> = parts.iter().map(|(t, m)| (*t, m.scenario())).collect();
        TaggedProduct {
            scenario: crate::scenario::tensor_tagged(&scen),
            parts: parts.iter().map(|(t, m)| (format!("{t}."), *m)).collect(),
        }
    }
}

impl Joint for TaggedProduct<'_> {
    fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    fn prob(&self, a: &Assignment) -> Result<Rational> {
        let mut split: Vec<Assignment> = vec![Assignment::new(); self.parts.len()];
        for (id, o) in a.iter() {
            let k = self
                .parts
                .iter()
                .position(|(tag, _)| id.starts_with(tag.as_str()))
                .ok_or_else(|| Error::UnknownMeasurement(id.clone()))?;
            split[k].insert(id[self.parts[k].0.len()..].to_string(), o.clone());
        }
        let mut p = crate::rational::one();
        for ((_, m), sub) in self.parts.iter().zip(&split) {
            if !sub.is_empty() {
                p *= m.prob(sub)?;
                if p.is_zero() {
                    break;
                }
            }
        }
        Ok(p)
    }
}

/// All pairwise-consistent tuples of maximal runs, one per protocol, with
/// their `MP(e)` weight. Tuples of weight zero are omitted.
pub fn mp_joint<J: Joint + ?Sized>(e: &J, qs: &[&MeasurementProtocol]) -> Result<Vec<(Vec<Run>, Rational)>> {
    if let Some(w) = incompatibility_witness(e.scenario(), qs) {
        let runs: Vec<String> = w.iter().map(Run::to_string).collect();
        return Err(Error::IncompatibleProtocols(format!("runs {} do not form a context", runs.join(", "))));
    }
    let maxima: Vec<Vec<Run>> = qs.iter().map(|q| q.maximal_runs()).collect();
    let mut out = Vec::new();
    fn go<J: Joint + ?Sized>(
        e: &J,
        maxima: &[Vec<Run>],
        chosen: &mut Vec<Run>,
        joint: &Assignment,
        out: &mut Vec<(Vec<Run>, Rational)>,
    ) -> Result<()> {
        let Some(options) = maxima.get(chosen.len()) else {
            let w = e.prob(joint)?;
            if !w.is_zero() {
                out.push((chosen.clone(), w));
            }
            return Ok(());
        };
        for r in options {
            let a = r.assignment();
            if !a.consistent_with(joint) {
                continue;
            }
            let next = joint.union(&a);
            if e.prob(&next)?.is_zero() {
                continue;
            }
            chosen.push(r.clone());
            go(e, maxima, chosen, &next, out)?;
            chosen.pop();
        }
        Ok(())
    }
    go(e, &maxima, &mut Vec::new(), &Assignment::new(), &mut out)?;
    Ok(out)
}

/// A jointly measured, named set of protocols.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct MpContext {
    pub protocols: BTreeMap<String, MeasurementProtocol>,
}

impl MpContext {
    pub fn new(protocols: impl IntoIterator<Item = (String, MeasurementProtocol)>) -> Self {
        MpContext { protocols: protocols.into_iter().collect() }
    }

    fn refs(&self) -> Vec<&MeasurementProtocol> {
        self.protocols.values().collect()
    }
}

/// `MP(e)_σ(s)`: `e` of the joint runs if pairwise consistent, else 0.
pub fn mp_model_value<J: Joint + ?Sized>(e: &J, sigma: &MpContext, choice: &BTreeMap<String, Run>) -> Result<Rational> {
    if !protocols_compatible(e.scenario(), &sigma.refs()) {
        return Err(Error::IncompatibleProtocols("context is not compatible".into()));
    }
    let mut joint = Assignment::new();
    for (name, q) in &sigma.protocols {
        let r =
            choice.get(name).ok_or_else(|| Error::InvalidProtocol(format!("no run chosen for protocol `{name}`")))?;
        if !q.runs.contains(r) || q.next(r).is_some() {
            return Err(Error::InvalidProtocol(format!("{r} is not a maximal run of `{name}`")));
        }
        let a = r.assignment();
        if !a.consistent_with(&joint) {
            return Ok(Rational::zero());
        }
        joint = joint.union(&a);
    }
    if let Some(extra) = choice.keys().find(|k| !sigma.protocols.contains_key(*k)) {
        return Err(Error::InvalidProtocol(format!("`{extra}` is not a protocol of the context")));
    }
    e.prob(&joint)
}

/// The `MP(e)` table of a context: protocol names as measurements, run
/// labels as outcomes.
pub fn mp_model_table<J: Joint + ?Sized>(e: &J, sigma: &MpContext) -> Result<ContextDistribution> {
    let names: Vec<&String> = sigma.protocols.keys().collect();
    let joint = mp_joint(e, &sigma.refs())?;
    Ok(ContextDistribution::new(
        names.iter().map(|n| n.to_string()).collect(),
        joint.into_iter().map(|(runs, w)| {
            (Assignment::from_pairs(names.iter().zip(&runs).map(|(n, r)| (n.to_string(), r.label()))), w)
        }),
    ))
}

/// The scenario of an `MpContext`: one measurement per protocol with its
/// maximal runs as outcomes, all jointly measurable.
pub fn mp_scenario(sigma: &MpContext) -> Scenario {
    let ms = sigma
        .protocols
        .iter()
        .map(|(n, q)| crate::scenario::Measurement {
            id: n.clone(),
            outcomes: q.maximal_runs().iter().map(Run::label).collect(),
        })
        .collect();
    let ids: Vec<&str> = sigma.protocols.keys().map(String::as_str).collect();
    Scenario::new(ms, vec![ids]).expect("protocol labels are distinct")
}

/// `P ⪰ Q`: every maximal run of `P` extends the assignment of some maximal run of `Q`.
pub fn implicitly_contains(p: &MeasurementProtocol, q: &MeasurementProtocol) -> bool {
    let qmax: Vec<Assignment> = q.maximal_runs().iter().map(Run::assignment).collect();
    p.maximal_runs().iter().all(|x| {
        let sx = x.assignment();
        qmax.iter().any(|sy| sy.is_restriction_of(&sx))
    })
}

/// Prefix closure of `{x_1 ∗ ⋯ ∗ x_n}` over maximal runs, merging in index order.
pub fn merge_protocols(s: &Scenario, qs: &[MeasurementProtocol]) -> Result<MeasurementProtocol> {
    let refs: Vec<&MeasurementProtocol> = qs.iter().collect();
    if let Some(w) = incompatibility_witness(s, &refs) {
        let runs: Vec<String> = w.iter().map(Run::to_string).collect();
        return Err(Error::IncompatibleProtocols(format!("runs {} do not form a context", runs.join(", "))));
    }
    let maxima: Vec<Vec<Run>> = qs.iter().map(|q| q.maximal_runs()).collect();
    let mut runs = BTreeSet::from([Run::empty()]);
    // Inconsistent tuples merge to Λ, so only consistent ones are expanded.
    fn go(maxima: &[Vec<Run>], k: usize, acc: &Run, runs: &mut BTreeSet<Run>) {
        let Some(options) = maxima.get(k) else {
            runs.extend(acc.prefixes());
            return;
        };
        for r in options {
            if runs_consistent(acc, r) {
                go(maxima, k + 1, &merge_runs(acc, r), runs);
            }
        }
    }
    go(&maxima, 0, &Run::empty(), &mut runs);
    Ok(MeasurementProtocol { runs })
}

/// `P(t) = {x ∖ t : x ∈ P consistent with t}`.
pub fn restrict_protocol(p: &MeasurementProtocol, t: &Assignment) -> MeasurementProtocol {
    let runs = p.runs.iter().filter(|x| x.assignment().consistent_with(t)).map(|x| run_minus(x, t)).collect();
    MeasurementProtocol { runs }
}

/// A deterministic procedure `MP(S) → U`: a protocol over `S` per target
/// measurement, and an outcome for each of its maximal runs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AdaptiveProcedure {
    pub source: Scenario,
    pub target: Scenario,
    pub protocols: BTreeMap<String, MeasurementProtocol>,
    pub alpha: BTreeMap<String, BTreeMap<Run, String>>,
}

impl AdaptiveProcedure {
    /// One-step protocols reading `p.pi[u]` and translating through `p.alpha[u]`.
    pub fn from_deterministic(p: &DeterministicProcedure) -> Result<Self> {
        let mut protocols = BTreeMap::new();
        let mut alpha = BTreeMap::new();
        for u in p.target.ids() {
            let src = p.pi.get(u).ok_or_else(|| Error::InvalidProcedure(format!("pi undefined at `{u}`")))?;
            let q = MeasurementProtocol::single(&p.source, src)?;
            let map = q
                .maximal_runs()
                .into_iter()
                .map(|r| {
                    let o = &r.0[0].1;
                    let v = p
                        .alpha
                        .get(u)
                        .and_then(|m| m.get(o))
                        .cloned()
                        .ok_or_else(|| Error::InvalidProcedure(format!("alpha[`{u}`] undefined at `{o}`")))?;
                    Ok((r, v))
                })
                .collect::<Result<_>>()?;
            protocols.insert(u.clone(), q);
            alpha.insert(u.clone(), map);
        }
        Ok(AdaptiveProcedure { source: p.source.clone(), target: p.target.clone(), protocols, alpha })
    }

    pub fn identity(s: &Scenario) -> Self {
        Self::from_deterministic(&DeterministicProcedure::identity(s)).expect("identity is valid")
    }

    pub fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::default();
        for u in self.target.ids() {
            let (Some(q), Some(map)) = (self.protocols.get(u), self.alpha.get(u)) else {
                report.push(format!("no protocol or outcome map for `{u}`"));
                continue;
            };
            let inner = q.validate(&self.source);
            if !inner.is_valid() {
                for v in inner.violations {
                    report.push(format!("protocol for `{u}`: {v}"));
                }
                continue;
            }
            let outs = self.target.outcomes(u).expect("target id");
            let maxima = q.maximal_runs();
            for r in &maxima {
                match map.get(r) {
                    None => report.push(format!("outcome map of `{u}` undefined at {r}")),
                    Some(o) if !outs.contains(o) => report.push(format!("`{o}` is not an outcome of `{u}`")),
                    _ => {}
                }
            }
            if map.len() != maxima.len() {
                report.push(format!("outcome map of `{u}` has entries for non-maximal runs"));
            }
        }
        if let Some(extra) = self.protocols.keys().find(|k| !self.target.contains(k)) {
            report.push(format!("protocol given for unknown target measurement `{extra}`"));
        }
        if report.is_valid() {
            for sigma in self.target.maximal_contexts() {
                let qs: Vec<&MeasurementProtocol> = sigma.iter().map(|u| &self.protocols[u]).collect();
                if let Some(w) = incompatibility_witness(&self.source, &qs) {
                    let runs: Vec<String> = w.iter().map(Run::to_string).collect();
                    report.push(format!("protocols for {sigma:?} are incompatible: {}", runs.join(", ")));
                }
            }
        }
        report
    }

    /// For each maximal target context, the `MP(e)` table of its protocols
    /// pushed through the outcome maps.
    pub fn pushforward<J: Joint + ?Sized>(&self, e: &J) -> Result<EmpiricalModel> {
        if e.scenario() != &self.source {
            return Err(Error::ScenarioMismatch("model is not on the procedure's source".into()));
        }
        self.validate().into_result(Error::InvalidProcedure)?;
        let mut tables = Vec::new();
        for sigma in self.target.maximal_contexts() {
            tables.push(self.push_context(e, sigma)?);
        }
        EmpiricalModel::assemble(self.target.clone(), tables)
    }

    /// The pushed table of one target context; `self` must be valid.
    pub fn push_context<J: Joint + ?Sized>(&self, e: &J, sigma: &Context) -> Result<ContextDistribution> {
        let us: Vec<&String> = sigma.iter().collect();
        let qs: Vec<&MeasurementProtocol> = us.iter().map(|u| &self.protocols[*u]).collect();
        let joint = mp_joint(e, &qs)?;
        Ok(ContextDistribution::new(
            sigma.clone(),
            joint.into_iter().map(|(runs, w)| {
                let a = Assignment::from_pairs(
                    us.iter().zip(&runs).map(|(u, r)| (u.to_string(), self.alpha[*u][r].clone())),
                );
                (a, w)
            }),
        ))
    }

    /// Renames source measurement ids inside every protocol.
    pub fn map_source_ids(&self, f: impl Fn(&str) -> String) -> Self {
        AdaptiveProcedure {
            source: self.source.map_ids(&f),
            target: self.target.clone(),
            protocols: self.protocols.iter().map(|(u, q)| (u.clone(), q.map_ids(&f))).collect(),
            alpha: self
                .alpha
                .iter()
                .map(|(u, m)| (u.clone(), m.iter().map(|(r, o)| (r.map_ids(&f), o.clone())).collect()))
                .collect(),
        }
    }

    /// Renames target measurement ids.
    pub fn map_target_ids(&self, f: impl Fn(&str) -> String) -> Self {
        AdaptiveProcedure {
            source: self.source.clone(),
            target: self.target.map_ids(&f),
            protocols: self.protocols.iter().map(|(u, q)| (f(u), q.clone())).collect(),
            alpha: self.alpha.iter().map(|(u, m)| (f(u), m.clone())).collect(),
        }
    }

    /// Canonical text form used to compare procedures.
    pub fn canonical(&self) -> String {
        let mut out = String::new();
        for (u, q) in &self.protocols {
            out.push_str(u);
            out.push('{');
            for r in &q.runs {
                out.push_str(&r.label());
                if let Some(o) = self.alpha[u].get(r) {
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

/// `outer ∘ inner`: each measurement queried by an outer protocol is
/// replaced by its inner protocol, reusing source outcomes already seen.
pub fn flatten_adaptive(outer: &AdaptiveProcedure, inner: &AdaptiveProcedure) -> Result<AdaptiveProcedure> {
    if outer.source != inner.target {
        return Err(Error::ScenarioMismatch("outer source is not the inner target".into()));
    }
    inner.validate().into_result(Error::InvalidProcedure)?;
    outer.validate().into_result(Error::InvalidProcedure)?;
    let mut protocols = BTreeMap::new();
    let mut alpha = BTreeMap::new();
    for (u, q) in &outer.protocols {
        let mut runs = BTreeSet::new();
        let mut map = BTreeMap::new();
        expand(inner, q, &outer.alpha[u], Run::empty(), Run::empty(), &mut runs, &mut map)?;
        protocols.insert(u.clone(), MeasurementProtocol { runs });
        alpha.insert(u.clone(), map);
    }
    let flat = AdaptiveProcedure { source: inner.source.clone(), target: outer.target.clone(), protocols, alpha };
    flat.validate().into_result(Error::InvalidProcedure)?;
    Ok(flat)
}

/// Continues the outer protocol `q` from the outer run `t_run`, given the
/// source run `s_run` performed so far.
fn expand(
    inner: &AdaptiveProcedure,
    q: &MeasurementProtocol,
    out_map: &BTreeMap<Run, String>,
    t_run: Run,
    s_run: Run,
    runs: &mut BTreeSet<Run>,
    map: &mut BTreeMap<Run, String>,
) -> Result<()> {
    runs.insert(s_run.clone());
    let Some(y) = q.next(&t_run) else {
        map.insert(s_run, out_map[&t_run].clone());
        return Ok(());
    };
    // Run the inner protocol for `y`, branching only on new source measurements.
    let py = &inner.protocols[y];
    let mut frontier = vec![(Run::empty(), s_run)];
    while let Some((p_run, s)) = frontier.pop() {
        match py.next(&p_run) {
            None => {
                let o = &inner.alpha[y][&p_run];
                expand(inner, q, out_map, t_run.extended(y, o), s, runs, map)?;
            }
            Some(z) => {
                if let Some(o) = s.outcome_of(z) {
                    frontier.push((p_run.extended(z, o), s));
                } else {
                    for o in inner.source.outcomes(z)? {
                        let next = s.extended(z, o);
                        runs.insert(next.clone());
                        frontier.push((p_run.extended(z, o), next));
                    }
                }
            }
        }
    }
    Ok(())
}
