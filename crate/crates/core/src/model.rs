//! Empirical models: one exact distribution per maximal context, consistent
//! on overlaps.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::procedure::canonical_partition_iso;
use crate::rational::{self, Rational};
use crate::scenario::{Assignment, Context, PartitionedScenario, Scenario, ValidationReport};

/// A distribution over joint outcomes of one context. Zero weights are not stored.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContextDistribution {
    pub context: Context,
    weights: BTreeMap<Assignment, Rational>,
}

impl ContextDistribution {
    /// Builds a distribution, dropping zero entries. Normalization is checked
    /// by [`ContextDistribution::check`], not here.
    pub fn new(context: Context, weights: impl IntoIterator<Item = (Assignment, Rational)>) -> Self {
        let mut map: BTreeMap<Assignment, Rational> = BTreeMap::new();
        for (a, w) in weights {
            *map.entry(a).or_insert_with(Rational::zero) += w;
        }
        map.retain(|_, w| !w.is_zero());
        ContextDistribution { context, weights: map }
    }

    pub fn point(context: Context, a: Assignment) -> Self {
        Self::new(context, [(a, rational::one())])
    }

    pub fn weight(&self, a: &Assignment) -> Rational {
        self.weights.get(a).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn support(&self) -> impl Iterator<Item = (&Assignment, &Rational)> {
        self.weights.iter()
    }

    pub fn total(&self) -> Rational {
        self.weights.values().fold(Rational::zero(), |acc, w| acc + w)
    }

    /// Domain, legality, nonnegativity and normalization.
    pub fn check(&self, scenario: &Scenario) -> ValidationReport {
        let mut report = ValidationReport::default();
        for (a, w) in &self.weights {
            if a.domain() != self.context {
                report.push(format!("assignment {a} does not cover context {:?}", self.context));
            }
            if let Err(e) = scenario.check_assignment(a) {
                report.push(format!("{e}"));
            }
            if w.is_negative() {
                report.push(format!("negative weight {} at {a}", rational::format(w)));
            }
        }
        let total = self.total();
        if !total.is_one() {
            report.push(format!("weights on {:?} sum to {}", self.context, rational::format(&total)));
        }
        report
    }

    /// Exact marginal on `z`.
    pub fn marginalize(&self, z: &BTreeSet<String>) -> Result<ContextDistribution> {
        if !z.is_subset(&self.context) {
            return Err(Error::NotSubset(format!("{z:?} is not contained in {:?}", self.context)));
        }
        Ok(ContextDistribution::new(z.clone(), self.weights.iter().map(|(a, w)| (a.restrict(z), w.clone()))))
    }

    /// Weight of all entries extending `partial`.
    pub fn weight_of_extensions(&self, partial: &Assignment) -> Rational {
        self.weights.iter().filter(|(a, _)| partial.is_restriction_of(a)).fold(Rational::zero(), |acc, (_, w)| acc + w)
    }

    pub fn map_ids(&self, f: impl Fn(&str) -> String + Copy) -> ContextDistribution {
        ContextDistribution {
            context: self.context.iter().map(|id| f(id)).collect(),
            weights: self.weights.iter().map(|(a, w)| (a.map_ids(f), w.clone())).collect(),
        }
    }

    /// Product distribution on the disjoint union of contexts.
    pub fn product(&self, other: &ContextDistribution) -> ContextDistribution {
        let context = self.context.union(&other.context).cloned().collect();
        let mut weights = Vec::with_capacity(self.weights.len() * other.weights.len());
        for (a, w) in &self.weights {
            for (b, v) in &other.weights {
                weights.push((a.union(b), w * v));
            }
        }
        ContextDistribution::new(context, weights)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EmpiricalModel {
    scenario: Scenario,
    tables: Vec<ContextDistribution>,
}

impl EmpiricalModel {
    /// Builds and validates a model. Tables may come in any order; one per
    /// maximal context is required.
    pub fn new(scenario: Scenario, tables: Vec<ContextDistribution>) -> Result<Self> {
        let model = Self::assemble(scenario, tables)?;
        validate_model(&model).into_result(Error::InvalidModel)?;
        Ok(model)
    }

    /// Aligns tables with the scenario's maximal contexts without checking
    /// consistency.
    pub fn assemble(scenario: Scenario, tables: Vec<ContextDistribution>) -> Result<Self> {
        let mut by_ctx: BTreeMap<Context, ContextDistribution> = BTreeMap::new();
        for t in tables {
            if by_ctx.insert(t.context.clone(), t).is_some() {
                return Err(Error::InvalidModel("two tables for one context".into()));
            }
        }
        let mut aligned = Vec::with_capacity(scenario.maximal_contexts().len());
        for sigma in scenario.maximal_contexts() {
            match by_ctx.remove(sigma) {
                Some(t) => aligned.push(t),
                None => return Err(Error::InvalidModel(format!("no table for maximal context {sigma:?}"))),
            }
        }
        if let Some(extra) = by_ctx.keys().next() {
            return Err(Error::InvalidModel(format!("table for non-maximal context {extra:?}")));
        }
        Ok(EmpiricalModel { scenario, tables: aligned })
    }

    /// The trivial model on the empty scenario.
    pub fn trivial() -> Self {
        EmpiricalModel {
            scenario: Scenario::empty(),
            tables: vec![ContextDistribution::point(Context::new(), Assignment::new())],
        }
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn tables(&self) -> &[ContextDistribution] {
        &self.tables
    }

    pub fn table(&self, sigma: &Context) -> Option<&ContextDistribution> {
        self.scenario.maximal_contexts().iter().position(|m| m == sigma).map(|i| &self.tables[i])
    }

    /// The distribution `e_ctx` for any context.
    pub fn marginal(&self, ctx: &BTreeSet<String>) -> Result<ContextDistribution> {
        let i = self
            .scenario
            .maximal_contexts()
            .iter()
            .position(|m| ctx.is_subset(m))
            .ok_or_else(|| Error::NotSubset(format!("{ctx:?} is not a context")))?;
        self.tables[i].marginalize(ctx)
    }

    /// `e_{dom(a)}(a)`; the domain must be a context.
    pub fn prob(&self, a: &Assignment) -> Result<Rational> {
        let dom = a.domain();
        let i = self
            .scenario
            .maximal_contexts()
            .iter()
            .position(|m| dom.is_subset(m))
            .ok_or_else(|| Error::NotSubset(format!("{dom:?} is not a context")))?;
        Ok(self.tables[i].weight_of_extensions(a))
    }

    pub fn map_ids(&self, f: impl Fn(&str) -> String + Copy) -> EmpiricalModel {
        let scenario = self.scenario.map_ids(f);
        let tables = self.tables.iter().map(|t| t.map_ids(f)).collect();
        EmpiricalModel::assemble(scenario, tables).expect("renaming preserves alignment")
    }

    /// Restriction to the induced sub-scenario on `keep`.
    pub fn restrict_to(&self, keep: &BTreeSet<String>) -> Result<EmpiricalModel> {
        let scenario = self.scenario.restrict(keep);
        let tables = scenario.maximal_contexts().iter().map(|c| self.marginal(c)).collect::<Result<Vec<_>>>()?;
        EmpiricalModel::assemble(scenario, tables)
    }

    /// All table entries, in maximal-context order then assignment order.
    pub fn entry_vector(&self) -> Vec<Rational> {
        let mut out = Vec::new();
        for t in &self.tables {
            for a in self.scenario.enumerate_assignments(&t.context).expect("own context") {
                out.push(t.weight(&a));
            }
        }
        out
    }

    /// Whether each table of `self` has support inside the matching table of `other`.
    pub fn support_within(&self, other: &EmpiricalModel) -> bool {
        self.tables.iter().zip(&other.tables).all(|(t, o)| t.support().all(|(a, _)| !o.weight(a).is_zero()))
    }
}

/// Normalization and pairwise overlap agreement, checked exactly.
pub fn validate_model(e: &EmpiricalModel) -> ValidationReport {
    let mut report = ValidationReport::default();
    let maximal = e.scenario.maximal_contexts();
    if e.tables.len() != maximal.len() {
        report.push(format!("{} tables for {} maximal contexts", e.tables.len(), maximal.len()));
        return report;
    }
    for (sigma, t) in maximal.iter().zip(&e.tables) {
        if &t.context != sigma {
            report.push(format!("table context {:?} misaligned with {sigma:?}", t.context));
        }
        report.violations.extend(t.check(&e.scenario).violations);
    }
    if !report.is_valid() {
        return report;
    }
    for i in 0..maximal.len() {
        for j in (i + 1)..maximal.len() {
            let tau: BTreeSet<String> = maximal[i].intersection(&maximal[j]).cloned().collect();
            let (Ok(a), Ok(b)) = (e.tables[i].marginalize(&tau), e.tables[j].marginalize(&tau)) else {
                continue;
            };
            if a != b {
                report
                    .push(format!("marginals of {:?} and {:?} disagree on overlap {:?}", maximal[i], maximal[j], tau));
            }
        }
    }
    report
}

/// Independent parallel composite on `S ⊗ T`.
pub fn tensor_models(d: &EmpiricalModel, e: &EmpiricalModel) -> EmpiricalModel {
    let scenario = d.scenario.tensor(&e.scenario);
    let left = |id: &str| format!("L.{id}");
    let right = |id: &str| format!("R.{id}");
    let mut tables = Vec::new();
    for s in &d.tables {
        let s = s.map_ids(left);
        for t in &e.tables {
            tables.push(s.product(&t.map_ids(right)));
        }
    }
    EmpiricalModel::assemble(scenario, tables).expect("product contexts are maximal")
}

/// Tensor of models with custom tags.
pub fn tensor_tagged_models(parts: &[(&str, &EmpiricalModel)]) -> EmpiricalModel {
    let scen: Vec<(&str, &Scenario)> = parts.iter().map(|(t, m)| (*t, &m.scenario)).collect();
    let scenario = crate::scenario::tensor_tagged(&scen);
    let mut tables = vec![ContextDistribution::point(Context::new(), Assignment::new())];
    for (tag, m) in parts {
        let mut next = Vec::new();
        for acc in &tables {
            for t in &m.tables {
                next.push(acc.product(&t.map_ids(|id| format!("{tag}.{id}"))));
            }
        }
        tables = next;
    }
    EmpiricalModel::assemble(scenario, tables).expect("product contexts are maximal")
}

/// Pointwise convex combination `mu·d + (1−mu)·e` on a shared scenario.
pub fn mix(mu: &Rational, d: &EmpiricalModel, e: &EmpiricalModel) -> Result<EmpiricalModel> {
    if d.scenario != e.scenario {
        return Err(Error::ScenarioMismatch("mixture of models on different scenarios".into()));
    }
    if !rational::is_probability(mu) {
        return Err(Error::OutOfRange(format!("mixing weight {}", rational::format(mu))));
    }
    let nu = rational::one() - mu;
    let tables = d
        .tables
        .iter()
        .zip(&e.tables)
        .map(|(a, b)| {
            ContextDistribution::new(
                a.context.clone(),
                a.support().map(|(s, w)| (s.clone(), w * mu)).chain(b.support().map(|(s, w)| (s.clone(), w * &nu))),
            )
        })
        .collect();
    EmpiricalModel::assemble(d.scenario.clone(), tables)
}

/// An n-partite model: a model on the flat scenario of its parts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartitionedModel {
    pub scenario: PartitionedScenario,
    pub model: EmpiricalModel,
}

impl PartitionedModel {
    pub fn new(scenario: PartitionedScenario, model: EmpiricalModel) -> Result<Self> {
        if scenario.flat() != *model.scenario() {
            return Err(Error::ScenarioMismatch("model is not on the flattened partitioned scenario".into()));
        }
        validate_model(&model).into_result(Error::InvalidModel)?;
        Ok(PartitionedModel { scenario, model })
    }

    /// The trivial n-partite model: every site empty.
    pub fn trivial(sites: usize) -> Self {
        let scenario = PartitionedScenario::new(vec![Scenario::empty(); sites]);
        let model = EmpiricalModel::assemble(
            scenario.flat(),
            vec![ContextDistribution::point(Context::new(), Assignment::new())],
        )
        .expect("empty");
        PartitionedModel { scenario, model }
    }

    /// Sites of `self` assigned independently from single-site models.
    pub fn from_sites(models: &[EmpiricalModel]) -> Self {
        let tags: Vec<String> = (1..=models.len()).map(crate::scenario::site_tag).collect();
        let parts: Vec<(&str, &EmpiricalModel)> = tags.iter().map(String::as_str).zip(models).collect();
        PartitionedModel {
            scenario: PartitionedScenario::new(models.iter().map(|m| m.scenario().clone()).collect()),
            model: tensor_tagged_models(&parts),
        }
    }
}

/// Sitewise composite `d ⊠ e`: the tensor pushed along the canonical
/// rebracketing isomorphism.
pub fn boxtimes(d: &PartitionedModel, e: &PartitionedModel) -> Result<PartitionedModel> {
    let (forward, _) = canonical_partition_iso(&d.scenario, &e.scenario)?;
    let product = tensor_models(&d.model, &e.model);
    let model = forward.pushforward(&product)?;
    Ok(PartitionedModel { scenario: d.scenario.boxtimes(&e.scenario)?, model })
}
