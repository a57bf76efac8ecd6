//! JSON interchange and the workspace registry.
//!
//! Rationals are `"num/den"` strings and objects are written with sorted
//! keys, so saving a loaded entry reproduces canonical input byte for byte.
//! Input that parses but is not canonical (a weight `"2/4"`, an unsorted
//! list) is accepted and reported in [`Workspace::warnings`].

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use serde_json::{json, Map, Value};

use crate::contextuality::GlobalDistribution;
use crate::error::{Error, Result};
use crate::model::{ContextDistribution, EmpiricalModel, PartitionedModel};
use crate::procedure::{validate_procedure, DeterministicProcedure};
use crate::protocol::{validate_protocol, AdaptiveProcedure, MeasurementProtocol, Run};
use crate::rational::{self, Rational};
use crate::scenario::{Assignment, Measurement, PartitionedScenario, Scenario, ScenarioSpec};
use crate::simulation::{AdaptiveSimulation, NPartiteSimulation};

/// A value written inline, or by the name of another workspace entry.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Slot<T> {
    pub name: Option<String>,
    pub value: T,
}

impl<T> Slot<T> {
    pub fn inline(value: T) -> Self {
        Slot { name: None, value }
    }
}

/// A model together with how its scenario was written: one scenario, or
/// one scenario per site with ids tagged `site<i>.`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModelEntry {
    pub model: EmpiricalModel,
    pub sites: Option<Vec<Slot<Scenario>>>,
    pub scenario: Option<String>,
}

impl ModelEntry {
    pub fn flat(model: EmpiricalModel) -> Self {
        ModelEntry { model, sites: None, scenario: None }
    }

    pub fn partitioned(m: &PartitionedModel) -> Self {
        ModelEntry {
            model: m.model.clone(),
            sites: Some(m.scenario.parts.iter().cloned().map(Slot::inline).collect()),
            scenario: None,
        }
    }

    /// The n-partite reading, for models written with `sites`.
    pub fn partitioned_model(&self) -> Option<PartitionedModel> {
        let sites = self.sites.as_ref()?;
        let scenario = PartitionedScenario::new(sites.iter().map(|s| s.value.clone()).collect());
        Some(PartitionedModel { scenario, model: self.model.clone() })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProcedureEntry {
    pub procedure: DeterministicProcedure,
    pub source: Option<String>,
    pub target: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProtocolEntry {
    pub protocol: MeasurementProtocol,
    pub scenario: Option<Slot<Scenario>>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AdaptiveEntry {
    pub procedure: AdaptiveProcedure,
    pub source: Option<String>,
    pub target: Option<String>,
}

/// A simulation bundle. The procedure's source scenario is implied by the
/// source and free models: `source ⊗ free`, or `flat(source ⊠ free)` when
/// both are written with sites.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SimulationEntry {
    pub source: Slot<ModelEntry>,
    pub free: Slot<ModelEntry>,
    pub procedure: AdaptiveProcedure,
    pub target: Option<String>,
}

impl SimulationEntry {
    pub fn from_simulation(sim: &AdaptiveSimulation) -> Self {
        SimulationEntry {
            source: Slot::inline(ModelEntry::flat(sim.source.clone())),
            free: Slot::inline(ModelEntry::flat(sim.free.clone())),
            procedure: sim.procedure.clone(),
            target: None,
        }
    }

    pub fn from_npartite(sim: &NPartiteSimulation, source: &PartitionedModel) -> Self {
        SimulationEntry {
            source: Slot::inline(ModelEntry::partitioned(source)),
            free: Slot::inline(ModelEntry::partitioned(&sim.free)),
            procedure: sim.procedure.clone(),
            target: None,
        }
    }

    /// `Some` when both models are written with sites.
    pub fn npartite(&self) -> Option<(PartitionedModel, NPartiteSimulation)> {
        let source = self.source.value.partitioned_model()?;
        let free = self.free.value.partitioned_model()?;
        Some((source, NPartiteSimulation { free, procedure: self.procedure.clone() }))
    }

    /// The bundle as a plain simulation; n-partite bundles are rebracketed.
    pub fn tensor_form(&self) -> AdaptiveSimulation {
        match self.npartite() {
            Some((source, sim)) => sim.to_tensor_form(&source),
            None => AdaptiveSimulation {
                source: self.source.value.model.clone(),
                free: self.free.value.model.clone(),
                procedure: self.procedure.clone(),
            },
        }
    }
}

fn implied_source(source: &ModelEntry, free: &ModelEntry) -> Result<Scenario> {
    match (source.partitioned_model(), free.partitioned_model()) {
        (Some(s), Some(f)) => Ok(s.scenario.boxtimes(&f.scenario)?.flat()),
        (None, None) => Ok(source.model.scenario().tensor(free.model.scenario())),
        _ => Err(Error::ScenarioMismatch("source and free model must both be flat or both partitioned".into())),
    }
}

#[allow(clippy::large_enum_variant)]
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Entry {
    Scenario(Scenario),
    Model(ModelEntry),
    Procedure(ProcedureEntry),
    Protocol(ProtocolEntry),
    Adaptive(AdaptiveEntry),
    Simulation(SimulationEntry),
}

/// Workspace-file section names, in load order.
const SECTIONS: [&str; 6] = ["scenarios", "models", "procedures", "protocols", "adaptive_procedures", "simulations"];

impl Entry {
    pub fn kind(&self) -> &'static str {
        match self {
            Entry::Scenario(_) => "scenario",
            Entry::Model(_) => "model",
            Entry::Procedure(_) => "procedure",
            Entry::Protocol(_) => "protocol",
            Entry::Adaptive(_) => "adaptive_procedure",
            Entry::Simulation(_) => "simulation",
        }
    }

    fn section(&self) -> &'static str {
        match self {
            Entry::Scenario(_) => SECTIONS[0],
            Entry::Model(_) => SECTIONS[1],
            Entry::Procedure(_) => SECTIONS[2],
            Entry::Protocol(_) => SECTIONS[3],
            Entry::Adaptive(_) => SECTIONS[4],
            Entry::Simulation(_) => SECTIONS[5],
        }
    }

    pub fn to_value(&self) -> Value {
        match self {
            Entry::Scenario(s) => scenario_value(s),
            Entry::Model(m) => model_entry_value(m),
            Entry::Procedure(p) => procedure_entry_value(p),
            Entry::Protocol(p) => protocol_entry_value(p),
            Entry::Adaptive(a) => adaptive_entry_value(a),
            Entry::Simulation(s) => simulation_entry_value(s),
        }
    }
}

/// Named entries with unique names; every by-name reference inside an
/// entry resolves to an earlier entry of the right kind.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Workspace {
    entries: BTreeMap<String, Entry>,
    pub warnings: Vec<String>,
}

impl Workspace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, name: &str) -> Option<&Entry> {
        self.entries.get(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &String> {
        self.entries.keys()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&String, &Entry)> {
        self.entries.iter()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn insert(&mut self, name: &str, entry: Entry) -> Result<()> {
        if self.entries.contains_key(name) {
            return Err(Error::Schema { at: name.to_string(), detail: "name already in use".into() });
        }
        self.check_refs(name, &entry)?;
        self.entries.insert(name.to_string(), entry);
        Ok(())
    }

    fn check_refs(&self, name: &str, entry: &Entry) -> Result<()> {
        let mut refs: Vec<(String, Entry)> = Vec::new();
        let scenario = |n: &Option<String>, s: &Scenario, refs: &mut Vec<(String, Entry)>| {
            if let Some(n) = n {
                refs.push((n.clone(), Entry::Scenario(s.clone())));
            }
        };
        match entry {
            Entry::Scenario(_) => {}
            Entry::Model(m) => model_refs(m, &mut refs),
            Entry::Procedure(p) => {
                scenario(&p.source, &p.procedure.source, &mut refs);
                scenario(&p.target, &p.procedure.target, &mut refs);
            }
            Entry::Protocol(p) => {
                if let Some(s) = &p.scenario {
                    scenario(&s.name, &s.value, &mut refs);
                }
            }
            Entry::Adaptive(a) => {
                scenario(&a.source, &a.procedure.source, &mut refs);
                scenario(&a.target, &a.procedure.target, &mut refs);
            }
            Entry::Simulation(s) => {
                for slot in [&s.source, &s.free] {
                    match &slot.name {
                        Some(n) => refs.push((n.clone(), Entry::Model(slot.value.clone()))),
                        None => model_refs(&slot.value, &mut refs),
                    }
                }
                scenario(&s.target, &s.procedure.target, &mut refs);
            }
        }
        for (n, expected) in refs {
            match self.entries.get(&n) {
                Some(e) if *e == expected => {}
                Some(e) if e.kind() == expected.kind() => {
                    return Err(Error::Schema {
                        at: name.into(),
                        detail: format!("`{n}` differs from the referenced entry"),
                    })
                }
                Some(e) => {
                    return Err(Error::Schema {
                        at: name.into(),
                        detail: format!("`{n}` is a {}, expected a {}", e.kind(), expected.kind()),
                    })
                }
                None => return Err(Error::Schema { at: name.into(), detail: format!("unresolved reference `{n}`") }),
            }
        }
        Ok(())
    }

    /// Loads a file or every `*.json` file of a directory, in name order.
    /// A single-entry file is named after its stem; a workspace file
    /// contributes every entry under its own name. Returns the new names.
    pub fn load(&mut self, path: &Path) -> Result<Vec<String>> {
        if path.is_dir() {
            let mut files: Vec<_> = fs::read_dir(path)
                .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?
                .filter_map(|d| d.ok().map(|d| d.path()))
                .filter(|p| p.extension().is_some_and(|x| x == "json"))
                .collect();
            files.sort();
            let mut names = Vec::new();
            for f in files {
                names.extend(self.load(&f)?);
            }
            return Ok(names);
        }
        let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("entry").to_string();
        self.load_str(&stem, &path.display().to_string(), &text)
    }

    /// Parses `text` as one entry named `name` or as a workspace file.
    /// `origin` prefixes diagnostics.
    pub fn load_str(&mut self, name: &str, origin: &str, text: &str) -> Result<Vec<String>> {
        let value: Value = serde_json::from_str(text)
            .map_err(|e| Error::Parse(format!("{origin}:{}:{}: {e}", e.line(), e.column())))?;
        let mut staged = self.clone();
        let mut reader = Reader { origin: origin.to_string(), warnings: Vec::new() };
        let obj = value.as_object().ok_or_else(|| reader.schema("$", "expected an object"))?;
        let is_workspace = !obj.is_empty() && obj.keys().all(|k| SECTIONS.contains(&k.as_str()));
        let names = if is_workspace {
            let mut names = Vec::new();
            for section in SECTIONS {
                let Some(items) = obj.get(section) else { continue };
                let at = format!("$.{section}");
                let items =
                    items.as_object().ok_or_else(|| reader.schema(&at, "expected an object of named entries"))?;
                for (n, v) in items {
                    let at = format!("{at}.{n}");
                    let entry = reader.entry(&staged, v, &at, Some(section))?;
                    staged.insert(n, entry).map_err(|e| reader.relocate(e, &at))?;
                    names.push(n.clone());
                }
            }
            names
        } else {
            let entry = reader.entry(&staged, &value, "$", None)?;
            staged.insert(name, entry).map_err(|e| reader.relocate(e, "$"))?;
            vec![name.to_string()]
        };
        let written = if !is_workspace {
            staged.entries[&names[0]].to_value()
        } else {
            staged.workspace_value(names.iter().map(String::as_str))
        };
        if written != value {
            reader.warnings.push(format!("{origin}: input is not in canonical form"));
        }
        staged.warnings.extend(reader.warnings);
        *self = staged;
        Ok(names)
    }

    /// Canonical text of one entry.
    pub fn entry_text(&self, name: &str) -> Result<String> {
        let e = self.get(name).ok_or_else(|| Error::Schema { at: name.into(), detail: "no such entry".into() })?;
        Ok(canonical_text(&e.to_value()))
    }

    pub fn save(&self, name: &str, path: &Path) -> Result<()> {
        let text = self.entry_text(name)?;
        fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
    }

    fn workspace_value<'a>(&self, names: impl Iterator<Item = &'a str>) -> Value {
        let mut out = Map::new();
        for n in names {
            let e = &self.entries[n];
            let section = out.entry(e.section()).or_insert_with(|| Value::Object(Map::new()));
            section.as_object_mut().expect("section object").insert(n.to_string(), e.to_value());
        }
        Value::Object(out)
    }

    /// Canonical text of the whole workspace as one workspace file.
    pub fn workspace_text(&self) -> String {
        canonical_text(&self.workspace_value(self.entries.keys().map(String::as_str)))
    }

    pub fn model(&self, name: &str) -> Result<&ModelEntry> {
        match self.get(name) {
            Some(Entry::Model(m)) => Ok(m),
            other => Err(wrong_kind(name, "model", other)),
        }
    }
}

fn model_refs(m: &ModelEntry, refs: &mut Vec<(String, Entry)>) {
    if let Some(n) = &m.scenario {
        refs.push((n.clone(), Entry::Scenario(m.model.scenario().clone())));
    }
    for s in m.sites.iter().flatten() {
        if let Some(n) = &s.name {
            refs.push((n.clone(), Entry::Scenario(s.value.clone())));
        }
    }
}

fn wrong_kind(name: &str, kind: &str, found: Option<&Entry>) -> Error {
    let detail = match found {
        Some(e) => format!("is a {}, expected a {kind}", e.kind()),
        None => "no such entry".into(),
    };
    Error::Schema { at: name.into(), detail }
}

/// Pretty JSON with sorted keys and a trailing newline.
pub fn canonical_text(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json values serialize");
    s.push('\n');
    s
}

type OutcomeMaps = BTreeMap<String, BTreeMap<Run, String>>;

// ---- writing ----

pub fn scenario_value(s: &Scenario) -> Value {
    let spec = s.to_spec();
    json!({
        "measurements": spec.measurements.iter().map(|m| json!({"id": m.id, "outcomes": m.outcomes})).collect::<Vec<_>>(),
        "maximal_contexts": spec.maximal_contexts,
    })
}

fn slot_value<T>(slot: &Slot<T>, inline: impl Fn(&T) -> Value) -> Value {
    match &slot.name {
        Some(n) => Value::String(n.clone()),
        None => inline(&slot.value),
    }
}

fn assignment_value(a: &Assignment) -> Value {
    Value::Object(a.iter().map(|(k, v)| (k.clone(), Value::String(v.clone()))).collect())
}

fn weights_value<'a>(ws: impl Iterator<Item = (&'a Assignment, &'a Rational)>) -> Value {
    ws.map(|(a, p)| json!({"assign": assignment_value(a), "p": rational::format(p)})).collect()
}

pub fn table_value(t: &ContextDistribution) -> Value {
    json!({"context": t.context, "weights": weights_value(t.support())})
}

pub fn global_value(g: &GlobalDistribution) -> Value {
    json!({"weights": weights_value(g.weights.iter())})
}

pub fn model_value(m: &EmpiricalModel) -> Value {
    model_entry_value(&ModelEntry::flat(m.clone()))
}

pub fn partitioned_value(m: &PartitionedModel) -> Value {
    model_entry_value(&ModelEntry::partitioned(m))
}

fn model_entry_value(m: &ModelEntry) -> Value {
    let tables: Vec<Value> = m.model.tables().iter().map(table_value).collect();
    match &m.sites {
        Some(sites) => json!({
            "sites": sites.iter().map(|s| slot_value(s, scenario_value)).collect::<Vec<_>>(),
            "tables": tables,
        }),
        None => {
            let scenario = match &m.scenario {
                Some(n) => Value::String(n.clone()),
                None => scenario_value(m.model.scenario()),
            };
            json!({"scenario": scenario, "tables": tables})
        }
    }
}

fn named_or(name: &Option<String>, s: &Scenario) -> Value {
    match name {
        Some(n) => Value::String(n.clone()),
        None => scenario_value(s),
    }
}

pub fn procedure_value(p: &DeterministicProcedure) -> Value {
    procedure_entry_value(&ProcedureEntry { procedure: p.clone(), source: None, target: None })
}

fn procedure_entry_value(p: &ProcedureEntry) -> Value {
    json!({
        "source": named_or(&p.source, &p.procedure.source),
        "target": named_or(&p.target, &p.procedure.target),
        "pi": p.procedure.pi,
        "alpha": p.procedure.alpha,
    })
}

fn run_value(r: &Run) -> Value {
    r.steps().iter().map(|(x, o)| json!([x, o])).collect()
}

pub fn protocol_value(p: &MeasurementProtocol) -> Value {
    json!({"runs": p.runs.iter().map(run_value).collect::<Vec<_>>()})
}

fn protocol_entry_value(p: &ProtocolEntry) -> Value {
    let mut v = protocol_value(&p.protocol);
    if let Some(s) = &p.scenario {
        v["scenario"] = slot_value(s, scenario_value);
    }
    v
}

fn protocols_and_alpha(p: &AdaptiveProcedure) -> (Value, Value) {
    let protocols: Map<String, Value> = p.protocols.iter().map(|(u, q)| (u.clone(), protocol_value(q))).collect();
    let alpha: Map<String, Value> = p
        .alpha
        .iter()
        .map(|(u, m)| {
            let rows: Vec<Value> = m.iter().map(|(r, o)| json!({"run": run_value(r), "outcome": o})).collect();
            (u.clone(), Value::Array(rows))
        })
        .collect();
    (Value::Object(protocols), Value::Object(alpha))
}

pub fn adaptive_value(p: &AdaptiveProcedure) -> Value {
    adaptive_entry_value(&AdaptiveEntry { procedure: p.clone(), source: None, target: None })
}

fn adaptive_entry_value(a: &AdaptiveEntry) -> Value {
    let (protocols, alpha) = protocols_and_alpha(&a.procedure);
    json!({
        "source": named_or(&a.source, &a.procedure.source),
        "target": named_or(&a.target, &a.procedure.target),
        "protocols": protocols,
        "alpha": alpha,
    })
}

pub fn simulation_value(sim: &AdaptiveSimulation) -> Value {
    simulation_entry_value(&SimulationEntry::from_simulation(sim))
}

pub fn npartite_value(sim: &NPartiteSimulation, source: &PartitionedModel) -> Value {
    simulation_entry_value(&SimulationEntry::from_npartite(sim, source))
}

fn simulation_entry_value(s: &SimulationEntry) -> Value {
    let (protocols, alpha) = protocols_and_alpha(&s.procedure);
    json!({
        "source": slot_value(&s.source, model_entry_value),
        "free": slot_value(&s.free, model_entry_value),
        "procedure": {
            "target": named_or(&s.target, &s.procedure.target),
            "protocols": protocols,
            "alpha": alpha,
        },
    })
}

// ---- reading ----

struct Reader {
    origin: String,
    warnings: Vec<String>,
}

impl Reader {
    fn schema(&self, at: &str, detail: impl Into<String>) -> Error {
        Error::Schema { at: format!("{}:{at}", self.origin), detail: detail.into() }
    }

    fn relocate(&self, err: Error, at: &str) -> Error {
        match err {
            Error::Schema { detail, .. } => self.schema(at, detail),
            other => other,
        }
    }

    /// Checks that every key is allowed and every required key present.
    fn keys(&self, obj: &Map<String, Value>, at: &str, allowed: &[&str], required: &[&str]) -> Result<()> {
        if let Some(k) = obj.keys().find(|k| !allowed.contains(&k.as_str())) {
            return Err(self.schema(at, format!("unexpected field `{k}` (allowed: {})", allowed.join(", "))));
        }
        if let Some(k) = required.iter().find(|k| !obj.contains_key(**k)) {
            return Err(self.schema(at, format!("missing field `{k}`")));
        }
        Ok(())
    }

    fn object<'v>(
        &self,
        v: &'v Value,
        at: &str,
        allowed: &[&str],
        required: &[&str],
    ) -> Result<&'v Map<String, Value>> {
        let obj = v.as_object().ok_or_else(|| self.schema(at, "expected an object"))?;
        self.keys(obj, at, allowed, required)?;
        Ok(obj)
    }

    fn array<'v>(&self, v: &'v Value, at: &str) -> Result<&'v Vec<Value>> {
        v.as_array().ok_or_else(|| self.schema(at, "expected an array"))
    }

    fn string<'v>(&self, v: &'v Value, at: &str) -> Result<&'v str> {
        v.as_str().ok_or_else(|| self.schema(at, "expected a string"))
    }

    fn strings(&self, v: &Value, at: &str) -> Result<Vec<String>> {
        self.array(v, at)?
            .iter()
            .enumerate()
            .map(|(i, x)| self.string(x, &format!("{at}[{i}]")).map(String::from))
            .collect()
    }

    fn string_map(&self, v: &Value, at: &str) -> Result<BTreeMap<String, String>> {
        let obj = v.as_object().ok_or_else(|| self.schema(at, "expected an object of strings"))?;
        obj.iter().map(|(k, x)| Ok((k.clone(), self.string(x, &format!("{at}.{k}"))?.to_string()))).collect()
    }

    fn rational(&mut self, v: &Value, at: &str) -> Result<Rational> {
        let text = self.string(v, at)?;
        let parsed = rational::parse(text).map_err(|e| self.schema(at, e.to_string()))?;
        if !parsed.canonical {
            self.warnings.push(format!(
                "{}:{at}: non-canonical rational \"{text}\" read as \"{}\"",
                self.origin,
                rational::format(&parsed.value)
            ));
        }
        Ok(parsed.value)
    }

    fn entry(&mut self, ws: &Workspace, v: &Value, at: &str, section: Option<&str>) -> Result<Entry> {
        let obj = v.as_object().ok_or_else(|| self.schema(at, "expected an object"))?;
        let has = |k: &str| obj.contains_key(k);
        let kind = match section {
            Some(s) => s,
            None if has("measurements") => SECTIONS[0],
            None if has("tables") => SECTIONS[1],
            None if has("pi") => SECTIONS[2],
            None if has("runs") => SECTIONS[3],
            None if has("protocols") => SECTIONS[4],
            None if has("procedure") => SECTIONS[5],
            None => return Err(self.schema(at, "cannot tell the entry kind from its fields")),
        };
        Ok(match kind {
            "scenarios" => Entry::Scenario(self.scenario(v, at)?),
            "models" => Entry::Model(self.model(ws, v, at)?),
            "procedures" => Entry::Procedure(self.procedure(ws, v, at)?),
            "protocols" => Entry::Protocol(self.protocol(ws, v, at)?),
            "adaptive_procedures" => Entry::Adaptive(self.adaptive(ws, v, at)?),
            _ => Entry::Simulation(self.simulation(ws, v, at)?),
        })
    }

    fn scenario(&mut self, v: &Value, at: &str) -> Result<Scenario> {
        let obj = self.object(v, at, &["measurements", "maximal_contexts"], &["measurements", "maximal_contexts"])?;
        let ms_at = format!("{at}.measurements");
        let mut measurements = Vec::new();
        for (i, m) in self.array(&obj["measurements"], &ms_at)?.iter().enumerate() {
            let m_at = format!("{ms_at}[{i}]");
            let mo = self.object(m, &m_at, &["id", "outcomes"], &["id", "outcomes"])?;
            let id = self.string(&mo["id"], &format!("{m_at}.id"))?.to_string();
            let outcomes = self.strings(&mo["outcomes"], &format!("{m_at}.outcomes"))?;
            measurements.push(Measurement { id, outcomes });
        }
        let ctx_at = format!("{at}.maximal_contexts");
        let maximal_contexts = self
            .array(&obj["maximal_contexts"], &ctx_at)?
            .iter()
            .enumerate()
            .map(|(i, c)| self.strings(c, &format!("{ctx_at}[{i}]")))
            .collect::<Result<_>>()?;
        Scenario::from_spec(&ScenarioSpec { measurements, maximal_contexts })
    }

    fn scenario_slot(&mut self, ws: &Workspace, v: &Value, at: &str) -> Result<Slot<Scenario>> {
        match v {
            Value::String(n) => match ws.get(n) {
                Some(Entry::Scenario(s)) => Ok(Slot { name: Some(n.clone()), value: s.clone() }),
                other => Err(self.relocate(wrong_kind(n, "scenario", other), at)),
            },
            _ => Ok(Slot::inline(self.scenario(v, at)?)),
        }
    }

    fn weights(&mut self, v: &Value, at: &str) -> Result<Vec<(Assignment, Rational)>> {
        let mut out: Vec<(Assignment, Rational)> = Vec::new();
        for (i, w) in self.array(v, at)?.iter().enumerate() {
            let w_at = format!("{at}[{i}]");
            let wo = self.object(w, &w_at, &["assign", "p"], &["assign", "p"])?;
            let a = Assignment::from_pairs(self.string_map(&wo["assign"], &format!("{w_at}.assign"))?);
            let p = self.rational(&wo["p"], &format!("{w_at}.p"))?;
            if out.iter().any(|(b, _)| *b == a) {
                return Err(self.schema(&w_at, format!("assignment {a} listed twice")));
            }
            out.push((a, p));
        }
        Ok(out)
    }

    fn model(&mut self, ws: &Workspace, v: &Value, at: &str) -> Result<ModelEntry> {
        let obj = self.object(v, at, &["scenario", "sites", "tables"], &["tables"])?;
        let (scenario, name, sites) = match (obj.get("scenario"), obj.get("sites")) {
            (Some(s), None) => {
                let slot = self.scenario_slot(ws, s, &format!("{at}.scenario"))?;
                (slot.value, slot.name, None)
            }
            (None, Some(s)) => {
                let s_at = format!("{at}.sites");
                let slots = self
                    .array(s, &s_at)?
                    .iter()
                    .enumerate()
                    .map(|(i, x)| self.scenario_slot(ws, x, &format!("{s_at}[{i}]")))
                    .collect::<Result<Vec<_>>>()?;
                let flat = PartitionedScenario::new(slots.iter().map(|s| s.value.clone()).collect()).flat();
                (flat, None, Some(slots))
            }
            _ => return Err(self.schema(at, "exactly one of `scenario` and `sites` is required")),
        };
        let t_at = format!("{at}.tables");
        let mut tables = Vec::new();
        for (i, t) in self.array(&obj["tables"], &t_at)?.iter().enumerate() {
            let at = format!("{t_at}[{i}]");
            let to = self.object(t, &at, &["context", "weights"], &["context", "weights"])?;
            let context: BTreeSet<String> =
                self.strings(&to["context"], &format!("{at}.context"))?.into_iter().collect();
            let weights = self.weights(&to["weights"], &format!("{at}.weights"))?;
            if weights.iter().any(|(_, p)| *p == rational::zero()) {
                self.warnings.push(format!("{}:{at}: zero weights are dropped", self.origin));
            }
            tables.push(ContextDistribution::new(context, weights));
        }
        let model = EmpiricalModel::new(scenario, tables)?;
        Ok(ModelEntry { model, sites, scenario: name })
    }

    fn model_slot(&mut self, ws: &Workspace, v: &Value, at: &str) -> Result<Slot<ModelEntry>> {
        match v {
            Value::String(n) => match ws.get(n) {
                Some(Entry::Model(m)) => Ok(Slot { name: Some(n.clone()), value: m.clone() }),
                other => Err(self.relocate(wrong_kind(n, "model", other), at)),
            },
            _ => Ok(Slot::inline(self.model(ws, v, at)?)),
        }
    }

    fn procedure(&mut self, ws: &Workspace, v: &Value, at: &str) -> Result<ProcedureEntry> {
        let keys = ["source", "target", "pi", "alpha"];
        let obj = self.object(v, at, &keys, &keys)?;
        let source = self.scenario_slot(ws, &obj["source"], &format!("{at}.source"))?;
        let target = self.scenario_slot(ws, &obj["target"], &format!("{at}.target"))?;
        let pi = self.string_map(&obj["pi"], &format!("{at}.pi"))?;
        let a_at = format!("{at}.alpha");
        let alpha_obj = obj["alpha"].as_object().ok_or_else(|| self.schema(&a_at, "expected an object"))?;
        let alpha = alpha_obj
            .iter()
            .map(|(k, m)| Ok((k.clone(), self.string_map(m, &format!("{a_at}.{k}"))?)))
            .collect::<Result<_>>()?;
        let procedure = DeterministicProcedure { source: source.value, target: target.value, pi, alpha };
        validate_procedure(&procedure).into_result(Error::InvalidProcedure)?;
        Ok(ProcedureEntry { procedure, source: source.name, target: target.name })
    }

    fn run(&self, v: &Value, at: &str) -> Result<Run> {
        let steps = self
            .array(v, at)?
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let s_at = format!("{at}[{i}]");
                match self.strings(s, &s_at)?.as_slice() {
                    [x, o] => Ok((x.clone(), o.clone())),
                    _ => Err(self.schema(&s_at, "a step is a [measurement, outcome] pair")),
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Run(steps))
    }

    fn runs(&mut self, v: &Value, at: &str, scenario: Option<&Scenario>) -> Result<MeasurementProtocol> {
        let list = self
            .array(v, at)?
            .iter()
            .enumerate()
            .map(|(i, r)| self.run(r, &format!("{at}[{i}]")))
            .collect::<Result<Vec<_>>>()?;
        let runs: BTreeSet<Run> = list.iter().cloned().collect();
        if runs.len() != list.len() {
            self.warnings.push(format!("{}:{at}: duplicate runs", self.origin));
        }
        match scenario {
            Some(s) => validate_protocol(s, &runs).into_result(Error::InvalidProtocol)?,
            None => {
                if !runs.contains(&Run::empty()) {
                    return Err(Error::InvalidProtocol("protocol does not contain Λ".into()));
                }
                for r in &runs {
                    if let Some(p) = r.prefixes().find(|p| !runs.contains(p)) {
                        return Err(Error::InvalidProtocol(format!("prefix {p} of {r} is missing")));
                    }
                }
            }
        }
        Ok(MeasurementProtocol { runs })
    }

    fn protocol(&mut self, ws: &Workspace, v: &Value, at: &str) -> Result<ProtocolEntry> {
        let obj = self.object(v, at, &["runs", "scenario"], &["runs"])?;
        let scenario = match obj.get("scenario") {
            Some(s) => Some(self.scenario_slot(ws, s, &format!("{at}.scenario"))?),
            None => None,
        };
        let protocol = self.runs(&obj["runs"], &format!("{at}.runs"), scenario.as_ref().map(|s| &s.value))?;
        Ok(ProtocolEntry { protocol, scenario })
    }

    fn protocols_and_alpha(
        &mut self,
        obj: &Map<String, Value>,
        at: &str,
        source: &Scenario,
    ) -> Result<(BTreeMap<String, MeasurementProtocol>, OutcomeMaps)> {
        let p_at = format!("{at}.protocols");
        let p_obj = obj["protocols"].as_object().ok_or_else(|| self.schema(&p_at, "expected an object"))?;
        let mut protocols = BTreeMap::new();
        for (u, q) in p_obj {
            let q_at = format!("{p_at}.{u}");
            let qo = self.object(q, &q_at, &["runs"], &["runs"])?;
            protocols.insert(u.clone(), self.runs(&qo["runs"], &format!("{q_at}.runs"), Some(source))?);
        }
        let a_at = format!("{at}.alpha");
        let a_obj = obj["alpha"].as_object().ok_or_else(|| self.schema(&a_at, "expected an object"))?;
        let mut alpha = BTreeMap::new();
        for (u, rows) in a_obj {
            let u_at = format!("{a_at}.{u}");
            let mut map = BTreeMap::new();
            for (i, row) in self.array(rows, &u_at)?.iter().enumerate() {
                let r_at = format!("{u_at}[{i}]");
                let ro = self.object(row, &r_at, &["run", "outcome"], &["run", "outcome"])?;
                let run = self.run(&ro["run"], &format!("{r_at}.run"))?;
                let o = self.string(&ro["outcome"], &format!("{r_at}.outcome"))?.to_string();
                if map.insert(run, o).is_some() {
                    return Err(self.schema(&r_at, "run listed twice"));
                }
            }
            alpha.insert(u.clone(), map);
        }
        Ok((protocols, alpha))
    }

    fn adaptive(&mut self, ws: &Workspace, v: &Value, at: &str) -> Result<AdaptiveEntry> {
        let keys = ["source", "target", "protocols", "alpha"];
        let obj = self.object(v, at, &keys, &keys)?;
        let source = self.scenario_slot(ws, &obj["source"], &format!("{at}.source"))?;
        let target = self.scenario_slot(ws, &obj["target"], &format!("{at}.target"))?;
        let (protocols, alpha) = self.protocols_and_alpha(obj, at, &source.value)?;
        let procedure = AdaptiveProcedure { source: source.value, target: target.value, protocols, alpha };
        procedure.validate().into_result(Error::InvalidProcedure)?;
        Ok(AdaptiveEntry { procedure, source: source.name, target: target.name })
    }

    fn simulation(&mut self, ws: &Workspace, v: &Value, at: &str) -> Result<SimulationEntry> {
        let keys = ["source", "free", "procedure"];
        let obj = self.object(v, at, &keys, &keys)?;
        let source = self.model_slot(ws, &obj["source"], &format!("{at}.source"))?;
        let free = self.model_slot(ws, &obj["free"], &format!("{at}.free"))?;
        let p_at = format!("{at}.procedure");
        let keys = ["target", "protocols", "alpha"];
        let po = self.object(&obj["procedure"], &p_at, &keys, &keys)?;
        let target = self.scenario_slot(ws, &po["target"], &format!("{p_at}.target"))?;
        let src = implied_source(&source.value, &free.value)?;
        let (protocols, alpha) = self.protocols_and_alpha(po, &p_at, &src)?;
        let procedure = AdaptiveProcedure { source: src, target: target.value, protocols, alpha };
        procedure.validate().into_result(Error::InvalidProcedure)?;
        Ok(SimulationEntry { source, free, procedure, target: target.name })
    }
}
