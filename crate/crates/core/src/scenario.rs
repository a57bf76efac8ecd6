//! Measurement scenarios and their compatibility complexes.
//!
//! A [`Scenario`] stores its measurements sorted by id and the family of
//! maximal contexts. Any subset of a maximal context is a context, so the
//! complex is downward closed by construction.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Context = BTreeSet<String>;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Measurement {
    pub id: String,
    pub outcomes: Vec<String>,
}

impl Measurement {
    pub fn new(id: impl Into<String>, outcomes: &[&str]) -> Self {
        Measurement { id: id.into(), outcomes: outcomes.iter().map(|o| o.to_string()).collect() }
    }

    pub fn binary(id: impl Into<String>) -> Self {
        Self::new(id, &["0", "1"])
    }
}

/// Raw scenario data as written in files, before normalization.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub measurements: Vec<Measurement>,
    pub maximal_contexts: Vec<Vec<String>>,
}

/// Outcome of a report-style validator: empty means valid.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<String>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn push(&mut self, v: impl Into<String>) {
        self.violations.push(v.into());
    }

    pub(crate) fn into_result(self, wrap: fn(String) -> Error) -> Result<()> {
        if self.is_valid() {
            Ok(())
        } else {
            Err(wrap(self.violations.join("; ")))
        }
    }
}

/// Checks raw scenario data. Singleton contexts are derived, so a measurement
/// absent from every declared context is not a violation.
pub fn validate_scenario(spec: &ScenarioSpec) -> ValidationReport {
    let mut report = ValidationReport::default();
    let mut seen = BTreeSet::new();
    for m in &spec.measurements {
        if !seen.insert(m.id.as_str()) {
            report.push(format!("duplicate measurement id `{}`", m.id));
        }
        if m.outcomes.is_empty() {
            report.push(format!("measurement `{}` has no outcomes", m.id));
        }
        let mut labels = BTreeSet::new();
        for o in &m.outcomes {
            if !labels.insert(o) {
                report.push(format!("measurement `{}` repeats outcome `{}`", m.id, o));
            }
        }
    }
    for (i, ctx) in spec.maximal_contexts.iter().enumerate() {
        let mut in_ctx = BTreeSet::new();
        for id in ctx {
            if !seen.contains(id.as_str()) {
                report.push(format!("context #{i} references unknown measurement `{id}`"));
            }
            if !in_ctx.insert(id) {
                report.push(format!("context #{i} repeats measurement `{id}`"));
            }
        }
    }
    report
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Scenario {
    measurements: BTreeMap<String, Vec<String>>,
    maximal: Vec<Context>,
}

impl fmt::Debug for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Scenario").field("measurements", &self.measurements).field("maximal", &self.maximal).finish()
    }
}

impl Scenario {
    /// The scenario with no measurements; its only context is the empty set.
    pub fn empty() -> Self {
        Scenario { measurements: BTreeMap::new(), maximal: vec![Context::new()] }
    }

    pub fn from_spec(spec: &ScenarioSpec) -> Result<Self> {
        validate_scenario(spec).into_result(Error::InvalidScenario)?;
        let measurements = spec.measurements.iter().map(|m| (m.id.clone(), m.outcomes.clone())).collect();
        let contexts = spec.maximal_contexts.iter().map(|c| c.iter().cloned().collect::<Context>()).collect();
        Ok(Self::normalized(measurements, contexts))
    }

    pub fn new(measurements: Vec<Measurement>, contexts: Vec<Vec<&str>>) -> Result<Self> {
        Self::from_spec(&ScenarioSpec {
            measurements,
            maximal_contexts: contexts.into_iter().map(|c| c.into_iter().map(String::from).collect()).collect(),
        })
    }

    /// Keeps only maximal faces and adds singletons for uncovered measurements.
    pub(crate) fn normalized(measurements: BTreeMap<String, Vec<String>>, contexts: Vec<Context>) -> Self {
        let mut faces: BTreeSet<Context> = contexts.into_iter().collect();
        for id in measurements.keys() {
            if !faces.iter().any(|c| c.contains(id)) {
                faces.insert(std::iter::once(id.clone()).collect());
            }
        }
        let all: Vec<Context> = faces.into_iter().collect();
        let mut maximal: Vec<Context> =
            all.iter().filter(|c| !all.iter().any(|d| d != *c && c.is_subset(d))).cloned().collect();
        if maximal.is_empty() {
            maximal.push(Context::new());
        }
        maximal.sort();
        Scenario { measurements, maximal }
    }

    pub fn to_spec(&self) -> ScenarioSpec {
        ScenarioSpec {
            measurements: self
                .measurements
                .iter()
                .map(|(id, o)| Measurement { id: id.clone(), outcomes: o.clone() })
                .collect(),
            maximal_contexts: self
                .maximal
                .iter()
                .filter(|c| !c.is_empty())
                .map(|c| c.iter().cloned().collect())
                .collect(),
        }
    }

    /// Re-checks the stored invariants.
    pub fn validate(&self) -> ValidationReport {
        let mut report = validate_scenario(&self.to_spec());
        for id in self.measurements.keys() {
            if !self.is_context(std::iter::once(id)) {
                report.push(format!("singleton `{id}` is not a context"));
            }
        }
        report
    }

    pub fn ids(&self) -> impl Iterator<Item = &String> {
        self.measurements.keys()
    }

    pub fn id_set(&self) -> BTreeSet<String> {
        self.measurements.keys().cloned().collect()
    }

    pub fn measurements(&self) -> impl Iterator<Item = (&String, &Vec<String>)> {
        self.measurements.iter()
    }

    pub fn len(&self) -> usize {
        self.measurements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.measurements.is_empty()
    }

    pub fn contains(&self, id: &str) -> bool {
        self.measurements.contains_key(id)
    }

    pub fn outcomes(&self, id: &str) -> Result<&[String]> {
        self.measurements.get(id).map(|o| o.as_slice()).ok_or_else(|| Error::UnknownMeasurement(id.to_string()))
    }

    pub fn outcome_index(&self, id: &str, outcome: &str) -> Result<usize> {
        self.outcomes(id)?
            .iter()
            .position(|o| o == outcome)
            .ok_or_else(|| Error::UnknownOutcome { measurement: id.into(), outcome: outcome.into() })
    }

    pub fn maximal_contexts(&self) -> &[Context] {
        &self.maximal
    }

    pub fn is_context<'a, I>(&self, ids: I) -> bool
    where
        I: IntoIterator<Item = &'a String> + Clone,
    {
        self.maximal.iter().any(|m| ids.clone().into_iter().all(|id| m.contains(id)))
    }

    /// A maximal context containing `ids`, if any.
    pub fn covering_context<'a, I>(&self, ids: I) -> Option<&Context>
    where
        I: IntoIterator<Item = &'a String> + Clone,
    {
        self.maximal.iter().find(|m| ids.clone().into_iter().all(|id| m.contains(id)))
    }

    /// All joint outcomes of `ids`, ordered lexicographically: ids ascending,
    /// the first id varying slowest, outcomes in declared order.
    pub fn enumerate_assignments<'a, I>(&self, ids: I) -> Result<Vec<Assignment>>
    where
        I: IntoIterator<Item = &'a String>,
    {
        let ids: BTreeSet<&String> = ids.into_iter().collect();
        let mut out = vec![Assignment::new()];
        for id in ids {
            let outcomes = self.outcomes(id)?;
            let mut next = Vec::with_capacity(out.len() * outcomes.len());
            for partial in &out {
                for o in outcomes {
                    let mut a = partial.clone();
                    a.insert(id.clone(), o.clone());
                    next.push(a);
                }
            }
            out = next;
        }
        Ok(out)
    }

    pub fn check_assignment(&self, a: &Assignment) -> Result<()> {
        for (id, o) in a.iter() {
            self.outcome_index(id, o)?;
        }
        Ok(())
    }

    /// Parallel composite with `L.` / `R.` tags.
    pub fn tensor(&self, other: &Scenario) -> Scenario {
        tensor_tagged(&[("L", self), ("R", other)])
    }

    /// Renames every measurement id.
    pub fn map_ids(&self, f: impl Fn(&str) -> String) -> Scenario {
        let measurements = self.measurements.iter().map(|(id, o)| (f(id), o.clone())).collect();
        let contexts = self.maximal.iter().map(|c| c.iter().map(|id| f(id)).collect()).collect();
        Scenario::normalized(measurements, contexts)
    }

    /// The induced sub-scenario on `keep`.
    pub fn restrict(&self, keep: &BTreeSet<String>) -> Scenario {
        let measurements = self
            .measurements
            .iter()
            .filter(|(id, _)| keep.contains(*id))
            .map(|(id, o)| (id.clone(), o.clone()))
            .collect();
        let contexts = self.maximal.iter().map(|c| c.intersection(keep).cloned().collect()).collect();
        Scenario::normalized(measurements, contexts)
    }

    /// Product of outcome-set sizes over `ids`.
    pub fn assignment_count<'a, I>(&self, ids: I) -> Result<usize>
    where
        I: IntoIterator<Item = &'a String>,
    {
        ids.into_iter().try_fold(1usize, |acc, id| Ok(acc * self.outcomes(id)?.len()))
    }
}

/// Tags each part's ids with `<tag>.` and takes the parallel composite.
pub fn tensor_tagged(parts: &[(&str, &Scenario)]) -> Scenario {
    let mut measurements = BTreeMap::new();
    let mut contexts = vec![Context::new()];
    for (tag, s) in parts {
        for (id, o) in &s.measurements {
            measurements.insert(format!("{tag}.{id}"), o.clone());
        }
        let mut next = Vec::with_capacity(contexts.len() * s.maximal.len());
        for c in &contexts {
            for m in &s.maximal {
                let mut u = c.clone();
                u.extend(m.iter().map(|id| format!("{tag}.{id}")));
                next.push(u);
            }
        }
        contexts = next;
    }
    Scenario::normalized(measurements, contexts)
}

/// Tag used for site `i` (1-based) of an n-partite scenario.
pub fn site_tag(i: usize) -> String {
    format!("site{i}")
}

/// Splits `tag.rest` at the first dot.
pub fn split_tag(id: &str) -> Option<(&str, &str)> {
    id.split_once('.')
}

/// Whether `pi` (target id → source id) sends every maximal context of
/// `target` onto a context of `source`.
pub fn is_simplicial(pi: &BTreeMap<String, String>, source: &Scenario, target: &Scenario) -> Result<bool> {
    for id in target.ids() {
        let img = pi.get(id).ok_or_else(|| Error::UnknownMeasurement(format!("pi undefined at `{id}`")))?;
        if !source.contains(img) {
            return Err(Error::UnknownMeasurement(img.clone()));
        }
    }
    Ok(target.maximal_contexts().iter().all(|sigma| {
        let image: BTreeSet<String> = sigma.iter().map(|x| pi[x].clone()).collect();
        source.is_context(&image)
    }))
}

/// An n-tuple of scenarios, one per site.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartitionedScenario {
    pub parts: Vec<Scenario>,
}

impl PartitionedScenario {
    pub fn new(parts: Vec<Scenario>) -> Self {
        PartitionedScenario { parts }
    }

    pub fn sites(&self) -> usize {
        self.parts.len()
    }

    /// The shared scenario with ids tagged `site<i>.`.
    pub fn flat(&self) -> Scenario {
        let tags: Vec<String> = (1..=self.parts.len()).map(site_tag).collect();
        let parts: Vec<(&str, &Scenario)> = tags.iter().map(String::as_str).zip(self.parts.iter()).collect();
        tensor_tagged(&parts)
    }

    /// Sitewise parallel composite.
    pub fn boxtimes(&self, other: &PartitionedScenario) -> Result<PartitionedScenario> {
        if self.sites() != other.sites() {
            return Err(Error::ScenarioMismatch(format!("site counts differ: {} vs {}", self.sites(), other.sites())));
        }
        Ok(PartitionedScenario { parts: self.parts.iter().zip(&other.parts).map(|(s, t)| s.tensor(t)).collect() })
    }

    /// Site index (1-based) of a flat id, if it carries a site tag.
    pub fn site_of(id: &str) -> Option<usize> {
        let (tag, _) = split_tag(id)?;
        tag.strip_prefix("site")?.parse().ok()
    }
}

/// A joint outcome on a set of measurements.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Assignment(BTreeMap<String, String>);

impl Assignment {
    pub fn new() -> Self {
        Assignment(BTreeMap::new())
    }

    pub fn from_pairs<I, K, V>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (K, V)>,
        K: Into<String>,
        V: Into<String>,
    {
        Assignment(pairs.into_iter().map(|(k, v)| (k.into(), v.into())).collect())
    }

    pub fn insert(&mut self, id: String, outcome: String) -> Option<String> {
        self.0.insert(id, outcome)
    }

    pub fn get(&self, id: &str) -> Option<&String> {
        self.0.get(id)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &String)> {
        self.0.iter()
    }

    pub fn domain(&self) -> BTreeSet<String> {
        self.0.keys().cloned().collect()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn restrict(&self, ids: &BTreeSet<String>) -> Assignment {
        Assignment(self.0.iter().filter(|(k, _)| ids.contains(*k)).map(|(k, v)| (k.clone(), v.clone())).collect())
    }

    /// Agreement on common measurements.
    pub fn consistent_with(&self, other: &Assignment) -> bool {
        let (small, large) = if self.len() <= other.len() { (self, other) } else { (other, self) };
        small.0.iter().all(|(k, v)| large.0.get(k).is_none_or(|w| w == v))
    }

    /// Whether `self` is a restriction of `other`.
    pub fn is_restriction_of(&self, other: &Assignment) -> bool {
        self.0.iter().all(|(k, v)| other.0.get(k) == Some(v))
    }

    pub fn union(&self, other: &Assignment) -> Assignment {
        let mut out = self.clone();
        out.0.extend(other.0.iter().map(|(k, v)| (k.clone(), v.clone())));
        out
    }

    pub fn map_ids(&self, f: impl Fn(&str) -> String) -> Assignment {
        Assignment(self.0.iter().map(|(k, v)| (f(k), v.clone())).collect())
    }

    pub fn as_map(&self) -> &BTreeMap<String, String> {
        &self.0
    }
}

impl fmt::Display for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|(k, v)| format!("{k}={v}")).collect();
        write!(f, "{{{}}}", parts.join(","))
    }
}

/// Specker's triangle: three binary measurements, pairwise compatible only.
pub fn triangle() -> Scenario {
    Scenario::new(
        vec![Measurement::binary("a"), Measurement::binary("b"), Measurement::binary("c")],
        vec![vec!["a", "b"], vec!["b", "c"], vec!["a", "c"]],
    )
    .expect("static scenario")
}

/// A Bell scenario: `parties` sites, each with `inputs` measurements with
/// `outputs` outcomes, one measurement per site per context.
pub fn bell(parties: usize, inputs: usize, outputs: usize) -> PartitionedScenario {
    let labels: Vec<String> = (0..outputs).map(|o| o.to_string()).collect();
    let site = Scenario::normalized((0..inputs).map(|x| (format!("x{x}"), labels.clone())).collect(), Vec::new());
    PartitionedScenario::new(vec![site; parties])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(v: &[&str]) -> BTreeSet<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn triangle_is_valid_with_three_pairs() {
        let t = triangle();
        assert!(t.validate().is_valid());
        assert_eq!(t.maximal_contexts().len(), 3);
        assert!(t.is_context(&ids(&["a", "b"])));
        assert!(!t.is_context(&ids(&["a", "b", "c"])));
    }

    #[test]
    fn empty_scenario_valid() {
        let e = Scenario::empty();
        assert!(e.validate().is_valid());
        assert!(e.is_context(&BTreeSet::new()));
        assert_eq!(Scenario::from_spec(&ScenarioSpec::default()).unwrap(), e);
    }

    #[test]
    fn singletons_derived_from_faces() {
        let s = Scenario::new(vec![Measurement::binary("a"), Measurement::binary("b")], vec![vec!["a", "b"]]).unwrap();
        assert!(s.validate().is_valid());
        assert!(s.is_context(&ids(&["a"])));
        let lone = Scenario::new(vec![Measurement::binary("a"), Measurement::binary("z")], vec![vec!["a"]]).unwrap();
        assert!(lone.is_context(&ids(&["z"])));
    }

    #[test]
    fn violations_listed() {
        let spec = ScenarioSpec {
            measurements: vec![
                Measurement::binary("a"),
                Measurement::binary("a"),
                Measurement { id: "e".into(), outcomes: vec![] },
            ],
            maximal_contexts: vec![vec!["a".into(), "q".into()]],
        };
        let r = validate_scenario(&spec);
        assert_eq!(r.violations.len(), 3, "{:?}", r);
        assert!(Scenario::from_spec(&spec).is_err());
    }

    #[test]
    fn tensor_counts() {
        let one = Scenario::new(vec![Measurement::binary("x")], vec![]).unwrap();
        let two = one.tensor(&one);
        assert_eq!(two.len(), 2);
        assert_eq!(two.maximal_contexts(), &[ids(&["L.x", "R.x"])]);

        let tt = triangle().tensor(&triangle());
        assert_eq!(tt.len(), 6);
        assert_eq!(tt.maximal_contexts().len(), 9);
        assert!(tt.maximal_contexts().iter().all(|c| c.len() == 4));

        let unit = triangle().tensor(&Scenario::empty());
        assert_eq!(unit, triangle().map_ids(|id| format!("L.{id}")));
    }

    #[test]
    fn simplicial_maps() {
        let t = triangle();
        let one = Scenario::new(vec![Measurement::binary("z")], vec![]).unwrap();
        let constant: BTreeMap<String, String> = t.ids().map(|x| (x.clone(), "z".into())).collect();
        assert!(is_simplicial(&constant, &one, &t).unwrap());
        let identity: BTreeMap<String, String> = t.ids().map(|x| (x.clone(), x.clone())).collect();
        assert!(is_simplicial(&identity, &t, &t).unwrap());
        let rot: BTreeMap<String, String> =
            [("a", "b"), ("b", "c"), ("c", "a")].iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
        assert!(is_simplicial(&rot, &t, &t).unwrap());
        let clique = Scenario::new(
            vec![Measurement::binary("a"), Measurement::binary("b"), Measurement::binary("c")],
            vec![vec!["a", "b", "c"]],
        )
        .unwrap();
        assert!(!is_simplicial(&identity, &t, &clique).unwrap());
        let bad: BTreeMap<String, String> = t.ids().map(|x| (x.clone(), "nope".into())).collect();
        assert!(is_simplicial(&bad, &t, &t).is_err());
    }

    #[test]
    fn assignment_enumeration() {
        let t = triangle();
        let none = t.enumerate_assignments(&BTreeSet::new()).unwrap();
        assert_eq!(none, vec![Assignment::new()]);
        assert_eq!(t.enumerate_assignments(&ids(&["a"])).unwrap().len(), 2);
        let all = t.enumerate_assignments(&ids(&["a", "b", "c"])).unwrap();
        assert_eq!(all.len(), 8);
        assert_eq!(all[1], Assignment::from_pairs([("a", "0"), ("b", "0"), ("c", "1")]));
        assert!(t.enumerate_assignments(&ids(&["q"])).is_err());
    }

    #[test]
    fn bell_flat_contexts() {
        let chsh = bell(2, 2, 2).flat();
        assert_eq!(chsh.len(), 4);
        assert_eq!(chsh.maximal_contexts().len(), 4);
        assert_eq!(PartitionedScenario::site_of("site2.x0"), Some(2));
    }
}
