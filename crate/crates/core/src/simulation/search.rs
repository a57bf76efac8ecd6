//! Bounded search for simulations in a fixed canonical order.
//!
//! Candidates for each target measurement are pairs (protocol, outcome
//! map) over the source scenario, ordered by protocol size, then run-set
//! order, then outcome map. Maps that are constant below some internal node
//! are skipped: stopping at that node gives the same wiring with a smaller
//! protocol. A depth-first pass over target ids prunes partial wirings on
//! every maximal target context they already cover.
//!
//! With the noncontextual free class the free model can be taken to be a
//! shared random index `λ` choosing one deterministic wiring, so a
//! simulation exists within bounds iff `e` lies in the convex hull of the
//! pushforwards of the enumerated wirings. That is decided by an exact LP.

use std::cell::Cell;
use std::collections::{BTreeMap, BTreeSet};
use std::rc::Rc;

use num_traits::{Signed, Zero};

use super::{check_simulation, AdaptiveSimulation};
use crate::error::{Error, Result};
use crate::lp::{solve_lp_exact, LinearProgram, LpOutcome, Relation};
use crate::model::{validate_model, ContextDistribution, EmpiricalModel};
use crate::protocol::{mp_joint, AdaptiveProcedure, Joint, MeasurementProtocol, Run, TaggedProduct};
use crate::rational::{self, Rational};
use crate::scenario::{Assignment, Context, Measurement, Scenario};

pub const DEFAULT_CAP: u64 = 10_000_000;
const CAP_ENV: &str = "CTXLAB_MAX_CANDIDATES";

/// Which free models a simulation may consume.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FreeClass {
    Noncontextual,
    /// A finite list tried in order; must contain the trivial model.
    Explicit(Vec<EmpiricalModel>),
}

impl FreeClass {
    pub fn validate(&self) -> Result<()> {
        if let FreeClass::Explicit(models) = self {
            if !models.contains(&EmpiricalModel::trivial()) {
                return Err(Error::OutOfRange("explicit free class must contain the trivial model".into()));
            }
            for m in models {
                validate_model(m).into_result(Error::InvalidModel)?;
            }
        }
        Ok(())
    }
}

/// `depth` bounds run length, `branching` the number of maximal runs per
/// protocol, `free` the number of outcomes of the shared random index.
/// `cap` overrides the candidate cap taken from `CTXLAB_MAX_CANDIDATES`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Bounds {
    pub depth: usize,
    pub branching: usize,
    pub free: usize,
    pub cap: Option<u64>,
}

impl Default for Bounds {
    fn default() -> Self {
        Bounds { depth: 2, branching: usize::MAX, free: usize::MAX, cap: None }
    }
}

impl Bounds {
    pub fn with_depth(depth: usize) -> Self {
        Bounds { depth, ..Bounds::default() }
    }

    /// Parses `depth=D,free=F,branching=B,cap=N`; omitted keys keep defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut b = Bounds::default();
        for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (k, v) =
                item.split_once('=').ok_or_else(|| Error::Parse(format!("bound `{item}` is not key=value")))?;
            let n: u64 = v
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bound `{k}` needs a nonnegative integer, got `{v}`")))?;
            match k.trim() {
                "depth" => b.depth = n as usize,
                "free" => b.free = n as usize,
                "branching" => b.branching = n as usize,
                "cap" => b.cap = Some(n),
                other => return Err(Error::Parse(format!("unknown bound `{other}`"))),
            }
        }
        Ok(b)
    }

    pub fn cap_value(&self) -> Result<u64> {
        if let Some(c) = self.cap {
            return Ok(c);
        }
        match std::env::var(CAP_ENV) {
            Ok(v) => v.trim().parse().map_err(|_| Error::Parse(format!("{CAP_ENV}=`{v}` is not an integer"))),
            Err(_) => Ok(DEFAULT_CAP),
        }
    }

    /// Whether depth and branching admit every protocol on `s`.
    pub(crate) fn covers(&self, s: &Scenario) -> bool {
        let longest = s.maximal_contexts().iter().map(|c| c.len()).max().unwrap_or(0);
        let widest =
            s.maximal_contexts().iter().map(|c| s.assignment_count(c).unwrap_or(usize::MAX)).max().unwrap_or(1);
        self.depth >= longest && self.branching >= widest
    }
}

#[allow(clippy::large_enum_variant)]
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SearchOutcome {
    Found {
        sim: AdaptiveSimulation,
        candidates: u64,
    },
    /// `complete` is set when the bounds cover every simulation, so the
    /// negative answer is a proof of nonexistence.
    NotFound {
        candidates: u64,
        complete: bool,
    },
}

impl SearchOutcome {
    pub fn found(&self) -> Option<&AdaptiveSimulation> {
        match self {
            SearchOutcome::Found { sim, .. } => Some(sim),
            SearchOutcome::NotFound { .. } => None,
        }
    }

    pub fn candidates(&self) -> u64 {
        match self {
            SearchOutcome::Found { candidates, .. } | SearchOutcome::NotFound { candidates, .. } => *candidates,
        }
    }
}

/// Searches for a simulation of `e` from `d` with free models from `class`.
pub fn search_simulation(
    d: &EmpiricalModel,
    e: &EmpiricalModel,
    bounds: &Bounds,
    class: &FreeClass,
) -> Result<SearchOutcome> {
    validate_model(d).into_result(Error::InvalidModel)?;
    validate_model(e).into_result(Error::InvalidModel)?;
    class.validate()?;
    let visited = Cell::new(0);
    let anywhere = |_: &str, _: &str| true;
    match class {
        FreeClass::Noncontextual => match hull_search(d, e, bounds, &anywhere, &visited)? {
            HullOutcome::Found(parts) => {
                let (free, procedure) = shared_index_wiring(d.scenario(), e.scenario(), &parts);
                let sim = AdaptiveSimulation::new(d.clone(), free, procedure)?;
                if !check_simulation(&sim, e)? {
                    return Err(Error::InvalidProcedure("assembled hull simulation failed verification".into()));
                }
                Ok(SearchOutcome::Found { sim, candidates: visited.get() })
            }
            HullOutcome::NotFound { complete } => Ok(SearchOutcome::NotFound { candidates: visited.get(), complete }),
        },
        FreeClass::Explicit(models) => {
            for c in models {
                let joint = TaggedProduct::new(&[("L", d), ("R", c)]);
                if let Some(p) = exact_search(&joint, e, bounds, &anywhere, &visited)? {
                    let sim = AdaptiveSimulation::new(d.clone(), c.clone(), p)?;
                    if !check_simulation(&sim, e)? {
                        return Err(Error::InvalidProcedure("exact wiring failed verification".into()));
                    }
                    return Ok(SearchOutcome::Found { sim, candidates: visited.get() });
                }
            }
            let complete = models.iter().all(|c| bounds.covers(&d.scenario().tensor(c.scenario())));
            Ok(SearchOutcome::NotFound { candidates: visited.get(), complete })
        }
    }
}

/// Free model `λ` with outcome `j` of weight `w_j`, and the
/// procedure that reads `R.lambda` and then runs wiring `j` on `L.` ids.
pub(crate) fn shared_index_wiring(
    source: &Scenario,
    target: &Scenario,
    parts: &[(AdaptiveProcedure, Rational)],
) -> (EmpiricalModel, AdaptiveProcedure) {
    let labels: Vec<String> = (0..parts.len()).map(|j| j.to_string()).collect();
    let label_refs: Vec<&str> = labels.iter().map(String::as_str).collect();
    let lambda = Scenario::new(vec![Measurement::new("lambda", &label_refs)], vec![]).expect("one measurement");
    let table = ContextDistribution::new(
        ["lambda".to_string()].into(),
        parts.iter().zip(&labels).map(|((_, w), l)| (Assignment::from_pairs([("lambda", l.as_str())]), w.clone())),
    );
    let free = EmpiricalModel::new(lambda.clone(), vec![table]).expect("weights sum to one");
    let procedure =
        branch_on_index(source.tensor(&lambda), target, parts, |_| "R.lambda".to_string(), |x| format!("L.{x}"));
    (free, procedure)
}

/// For each target id `u`: measure `index_id(u)`, then follow wiring `j`
/// (source ids renamed by `rename`) on outcome `j`.
pub(crate) fn branch_on_index(
    source: Scenario,
    target: &Scenario,
    parts: &[(AdaptiveProcedure, Rational)],
    index_id: impl Fn(&str) -> String,
    rename: impl Fn(&str) -> String,
) -> AdaptiveProcedure {
    let mut protocols = BTreeMap::new();
    let mut alpha = BTreeMap::new();
    for u in target.ids() {
        let lam = index_id(u);
        let mut runs = BTreeSet::from([Run::empty()]);
        let mut map = BTreeMap::new();
        for (j, (w, _)) in parts.iter().enumerate() {
            let head = Run::empty().extended(&lam, &j.to_string());
            let join = |r: &Run| {
                let mut x = head.clone();
                x.0.extend(r.map_ids(&rename).0);
                x
            };
            runs.extend(w.protocols[u].runs.iter().map(join));
            map.extend(w.alpha[u].iter().map(|(r, o)| (join(r), o.clone())));
        }
        protocols.insert(u.clone(), MeasurementProtocol { runs });
        alpha.insert(u.clone(), map);
    }
    AdaptiveProcedure { source, target: target.clone(), protocols, alpha }
}

#[derive(Clone, Debug)]
pub(crate) struct Candidate {
    pub protocol: MeasurementProtocol,
    pub alpha: BTreeMap<Run, String>,
}

/// All protocols on `s` within the bounds, querying only `allowed` ids, in
/// canonical order.
pub(crate) fn candidate_protocols(
    s: &Scenario,
    depth: usize,
    branching: usize,
    allowed: &dyn Fn(&str) -> bool,
) -> Vec<MeasurementProtocol> {
    let mut out: Vec<MeasurementProtocol> = subtrees(s, &Run::empty(), depth, allowed)
        .into_iter()
        .map(|runs| MeasurementProtocol { runs })
        .filter(|q| q.maximal_runs().len() <= branching)
        .collect();
    out.sort_by(|a, b| a.runs.len().cmp(&b.runs.len()).then_with(|| a.runs.cmp(&b.runs)));
    out
}

/// Every protocol tree rooted at `run`, as sets of runs extending it.
fn subtrees(s: &Scenario, run: &Run, left: usize, allowed: &dyn Fn(&str) -> bool) -> Vec<BTreeSet<Run>> {
    let mut out = vec![BTreeSet::from([run.clone()])];
    if left == 0 {
        return out;
    }
    let ctx = run.context();
    for x in s.ids() {
        if ctx.contains(x) || !allowed(x) {
            continue;
        }
        let mut grown = ctx.clone();
        grown.insert(x.clone());
        if !s.is_context(&grown) {
            continue;
        }
        let mut combos = vec![BTreeSet::from([run.clone()])];
        for o in s.outcomes(x).expect("own id") {
            let below = subtrees(s, &run.extended(x, o), left - 1, allowed);
            let mut next = Vec::with_capacity(combos.len() * below.len());
            for c in &combos {
                for b in &below {
                    let mut u = c.clone();
                    u.extend(b.iter().cloned());
                    next.push(u);
                }
            }
            combos = next;
        }
        out.extend(combos);
    }
    out
}

/// Outcome maps on the maximal runs of `q` that are not constant below any
/// internal node; the trivial protocol gets every constant.
pub(crate) fn reduced_alphas(q: &MeasurementProtocol, outs: &[String], cap: u64) -> Result<Vec<BTreeMap<Run, String>>> {
    let maxima = q.maximal_runs();
    let ranges: Vec<(usize, usize)> = q
        .runs
        .iter()
        .filter(|r| q.next(r).is_some())
        .map(|r| {
            let lo = maxima.iter().position(|m| r.is_prefix_of(m)).expect("internal run has a maximal extension");
            let hi = maxima[lo..].iter().take_while(|m| r.is_prefix_of(m)).count() + lo;
            (lo, hi)
        })
        .collect();
    let total = (outs.len() as u64).checked_pow(maxima.len() as u32).unwrap_or(u64::MAX);
    if total > cap {
        return Err(Error::CapExceeded { cap, visited: total });
    }
    let mut out = Vec::new();
    let mut digits = vec![0usize; maxima.len()];
    loop {
        let reduced = ranges.iter().all(|&(lo, hi)| digits[lo..hi].iter().any(|d| *d != digits[lo]));
        if reduced {
            out.push(maxima.iter().cloned().zip(digits.iter().map(|&d| outs[d].clone())).collect());
        }
        // odometer, last run fastest
        let mut k = maxima.len();
        loop {
            if k == 0 {
                return Ok(out);
            }
            k -= 1;
            digits[k] += 1;
            if digits[k] < outs.len() {
                break;
            }
            digits[k] = 0;
        }
    }
}

type CandidateCache = BTreeMap<(usize, Vec<String>, Vec<String>), Rc<Vec<Candidate>>>;

/// A target-context check that becomes decidable once its last member is
/// assigned.
struct Check {
    members: Vec<usize>,
    ids: Vec<String>,
    marginal: ContextDistribution,
}

pub(crate) struct Engine<'a> {
    source: &'a dyn Joint,
    target: &'a EmpiricalModel,
    order: Vec<String>,
    cands: Vec<Rc<Vec<Candidate>>>,
    /// Indices into `cands[k]` that pass the checks on `order[k]` alone.
    live: Vec<Vec<usize>>,
    checks: Vec<Vec<Check>>,
    exact: bool,
    visited: &'a Cell<u64>,
    cap: u64,
}

impl<'a> Engine<'a> {
    #[allow(clippy::too_many_arguments)]
    fn new(
        source: &'a dyn Joint,
        target: &'a EmpiricalModel,
        order: Vec<String>,
        depth: usize,
        bounds: &Bounds,
        allowed: &dyn Fn(&str, &str) -> bool,
        exact: bool,
        visited: &'a Cell<u64>,
        cache: &mut CandidateCache,
    ) -> Result<Self> {
        let cap = bounds.cap_value()?;
        let t = target.scenario();
        let mut cands = Vec::with_capacity(order.len());
        for u in &order {
            let outs = t.outcomes(u)?.to_vec();
            let ids: Vec<String> = source.scenario().ids().filter(|x| allowed(u, x)).cloned().collect();
            let key = (depth, outs.clone(), ids.clone());
            if let Some(c) = cache.get(&key) {
                cands.push(c.clone());
                continue;
            }
            let keep: BTreeSet<&String> = ids.iter().collect();
            let mut list = Vec::new();
            for q in candidate_protocols(source.scenario(), depth, bounds.branching, &|x| keep.contains(&x.to_string()))
            {
                for alpha in reduced_alphas(&q, &outs, cap)? {
                    list.push(Candidate { protocol: q.clone(), alpha });
                }
                if list.len() as u64 > cap {
                    return Err(Error::CapExceeded { cap, visited: list.len() as u64 });
                }
            }
            let rc = Rc::new(list);
            cache.insert(key, rc.clone());
            cands.push(rc);
        }
        let position: BTreeMap<&String, usize> = order.iter().enumerate().map(|(i, u)| (u, i)).collect();
        let mut checks: Vec<Vec<Check>> = (0..order.len()).map(|_| Vec::new()).collect();
        let mut seen: BTreeSet<Context> = BTreeSet::new();
        for sigma in t.maximal_contexts().iter().filter(|sigma| sigma.iter().all(|u| position.contains_key(u))) {
            let mut members: Vec<usize> = sigma.iter().map(|u| position[u]).collect();
            members.sort_unstable();
            // every prefix of σ in id order is a partial wiring worth checking
            for k in 1..=members.len() {
                let part: Context = members[..k].iter().map(|&i| order[i].clone()).collect();
                if !seen.insert(part.clone()) {
                    continue;
                }
                let last = members[k - 1];
                checks[last].push(Check {
                    members: members[..k].to_vec(),
                    ids: members[..k].iter().map(|&i| order[i].clone()).collect(),
                    marginal: target.marginal(&part)?,
                });
            }
        }
        // every id on its own, so each candidate list is filtered up front
        for (k, u) in order.iter().enumerate() {
            let part: Context = std::iter::once(u.clone()).collect();
            if seen.insert(part.clone()) {
                checks[k].push(Check { members: vec![k], ids: vec![u.clone()], marginal: target.marginal(&part)? });
            }
        }
        let mut engine = Engine { source, target, order, cands, live: Vec::new(), checks, exact, visited, cap };
        // single-member checks do not depend on the other choices
        let singles: Vec<Vec<Check>> =
            engine.checks.iter_mut().map(|cs| cs.extract_if(.., |c| c.members.len() == 1).collect()).collect();
        for (k, own) in singles.iter().enumerate() {
            let mut choice = vec![0; k + 1];
            let mut live = Vec::new();
            for i in 0..engine.cands[k].len() {
                choice[k] = i;
                if engine.passes(own, &choice)? {
                    live.push(i);
                }
            }
            engine.live.push(live);
        }
        Ok(engine)
    }

    fn passes(&self, checks: &[Check], choice: &[usize]) -> Result<bool> {
        for chk in checks {
            let cs: Vec<&Candidate> = chk.members.iter().map(|&i| &self.cands[i][choice[i]]).collect();
            let qs: Vec<&MeasurementProtocol> = cs.iter().map(|c| &c.protocol).collect();
            let joint = match mp_joint(self.source, &qs) {
                Ok(j) => j,
                Err(Error::IncompatibleProtocols(_)) => return Ok(false),
                Err(e) => return Err(e),
            };
            let pushed = ContextDistribution::new(
                chk.ids.iter().cloned().collect(),
                joint.into_iter().map(|(runs, w)| {
                    let a = Assignment::from_pairs(
                        chk.ids.iter().zip(cs.iter().zip(&runs)).map(|(u, (c, r))| (u.clone(), c.alpha[r].clone())),
                    );
                    (a, w)
                }),
            );
            let ok = if self.exact {
                pushed == chk.marginal
            } else {
                pushed.support().all(|(a, _)| chk.marginal.weight(a).is_positive())
            };
            if !ok {
                return Ok(false);
            }
        }
        Ok(true)
    }

    fn procedure(&self, choice: &[usize]) -> AdaptiveProcedure {
        let mut protocols = BTreeMap::new();
        let mut alpha = BTreeMap::new();
        for (i, u) in self.order.iter().enumerate() {
            let c = &self.cands[i][choice[i]];
            protocols.insert(u.clone(), c.protocol.clone());
            alpha.insert(u.clone(), c.alpha.clone());
        }
        AdaptiveProcedure {
            source: self.source.scenario().clone(),
            target: self.target.scenario().clone(),
            protocols,
            alpha,
        }
    }

    /// Visits every wiring passing all checks; `sink` returns true to stop.
    fn dfs(&self, choice: &mut Vec<usize>, sink: &mut dyn FnMut(&[usize]) -> Result<bool>) -> Result<bool> {
        let k = choice.len();
        if k == self.order.len() {
            return sink(choice);
        }
        for &i in &self.live[k] {
            let v = self.visited.get() + 1;
            self.visited.set(v);
            if v > self.cap {
                return Err(Error::CapExceeded { cap: self.cap, visited: v });
            }
            choice.push(i);
            if self.passes(&self.checks[k], choice)? && self.dfs(choice, sink)? {
                choice.pop();
                return Ok(true);
            }
            choice.pop();
        }
        Ok(false)
    }
}

/// Entries of the pushforward in `entry_vector` order.
fn pushed_vector(p: &AdaptiveProcedure, source: &dyn Joint, target: &Scenario) -> Result<Vec<Rational>> {
    let mut out = Vec::new();
    for sigma in target.maximal_contexts() {
        let t = p.push_context(source, sigma)?;
        for a in target.enumerate_assignments(sigma)? {
            out.push(t.weight(&a));
        }
    }
    Ok(out)
}

pub(crate) enum HullOutcome {
    Found(Vec<(AdaptiveProcedure, Rational)>),
    NotFound { complete: bool },
}

/// Deepens the protocol bound level by level, collecting distinct
/// pushforwards and testing hull membership at doubling checkpoints.
pub(crate) fn hull_search(
    source: &dyn Joint,
    e: &EmpiricalModel,
    bounds: &Bounds,
    allowed: &dyn Fn(&str, &str) -> bool,
    visited: &Cell<u64>,
) -> Result<HullOutcome> {
    let target = e.entry_vector();
    let mut points: Vec<(AdaptiveProcedure, Vec<Rational>)> = Vec::new();
    let mut seen: BTreeSet<Vec<Rational>> = BTreeSet::new();
    let mut covered = vec![false; target.len()];
    let mut free_limited = false;
    let mut checkpoint = 1usize;
    let mut cache = CandidateCache::new();
    for level in 0..=bounds.depth {
        let all = e.scenario().ids().cloned().collect();
        let engine = Engine::new(source, e, all, level, bounds, allowed, false, visited, &mut cache)?;
        let mut found: Option<Vec<(usize, Rational)>> = None;
        let mut sink = |choice: &[usize]| -> Result<bool> {
            let p = engine.procedure(choice);
            let v = pushed_vector(&p, source, e.scenario())?;
            if v == target {
                found = Some(vec![(points.len(), rational::one())]);
                points.push((p, v));
                return Ok(true);
            }
            if !seen.insert(v.clone()) {
                return Ok(false);
            }
            for (c, x) in covered.iter_mut().zip(&v) {
                *c |= x.is_positive();
            }
            points.push((p, v));
            if points.len() >= checkpoint {
                checkpoint *= 2;
                if let Some(w) = hull_weights(&points, &target, &covered, bounds.free, &mut free_limited)? {
                    found = Some(w);
                    return Ok(true);
                }
            }
            Ok(false)
        };
        engine.dfs(&mut Vec::new(), &mut sink)?;
        if found.is_none() {
            found = hull_weights(&points, &target, &covered, bounds.free, &mut free_limited)?;
        }
        if let Some(w) = found {
            return Ok(HullOutcome::Found(w.into_iter().map(|(i, x)| (points[i].0.clone(), x)).collect()));
        }
    }
    Ok(HullOutcome::NotFound { complete: !free_limited && bounds.covers(source.scenario()) })
}

/// Convex weights expressing `target` over `points`, if some vertex
/// solution uses at most `free` points.
fn hull_weights(
    points: &[(AdaptiveProcedure, Vec<Rational>)],
    target: &[Rational],
    covered: &[bool],
    free: usize,
    free_limited: &mut bool,
) -> Result<Option<Vec<(usize, Rational)>>> {
    if points.is_empty() || target.iter().zip(covered).any(|(t, c)| t.is_positive() && !c) {
        return Ok(None);
    }
    let m = points.len();
    let mut lp = LinearProgram::new(m);
    for (i, t) in target.iter().enumerate() {
        lp.add(points.iter().map(|(_, v)| v[i].clone()).collect(), Relation::Eq, t.clone());
    }
    lp.add(vec![rational::one(); m], Relation::Eq, rational::one());
    match solve_lp_exact(&lp)? {
        LpOutcome::Optimal { x, .. } => {
            let support: Vec<(usize, Rational)> = x.into_iter().enumerate().filter(|(_, w)| !w.is_zero()).collect();
            if support.len() > free {
                *free_limited = true;
                return Ok(None);
            }
            Ok(Some(support))
        }
        _ => Ok(None),
    }
}

/// Target ids grouped by shared maximal contexts, in id order.
fn components(t: &Scenario) -> Vec<Vec<String>> {
    let ids: Vec<&String> = t.ids().collect();
    let mut root: Vec<usize> = (0..ids.len()).collect();
    fn find(root: &mut [usize], mut i: usize) -> usize {
        while root[i] != i {
            root[i] = root[root[i]];
            i = root[i];
        }
        i
    }
    let index: BTreeMap<&String, usize> = ids.iter().enumerate().map(|(i, u)| (*u, i)).collect();
    for sigma in t.maximal_contexts() {
        let members: Vec<usize> = sigma.iter().map(|u| index[u]).collect();
        for w in members.windows(2) {
            let (a, b) = (find(&mut root, w[0]), find(&mut root, w[1]));
            root[a.max(b)] = a.min(b);
        }
    }
    let mut groups: BTreeMap<usize, Vec<String>> = BTreeMap::new();
    for (i, u) in ids.iter().enumerate() {
        let r = find(&mut root, i);
        groups.entry(r).or_default().push((*u).clone());
    }
    groups.into_values().collect()
}

/// First wiring whose pushforward equals `e` exactly. Target ids that share
/// no maximal context are constrained independently, so each connected
/// group is searched on its own, shallowest level first, in canonical order.
pub(crate) fn exact_search(
    source: &dyn Joint,
    e: &EmpiricalModel,
    bounds: &Bounds,
    allowed: &dyn Fn(&str, &str) -> bool,
    visited: &Cell<u64>,
) -> Result<Option<AdaptiveProcedure>> {
    let mut cache = CandidateCache::new();
    let mut wiring = AdaptiveProcedure {
        source: source.scenario().clone(),
        target: e.scenario().clone(),
        protocols: BTreeMap::new(),
        alpha: BTreeMap::new(),
    };
    for group in components(e.scenario()) {
        let mut found = None;
        for level in 0..=bounds.depth {
            let engine = Engine::new(source, e, group.clone(), level, bounds, allowed, true, visited, &mut cache)?;
            engine.dfs(&mut Vec::new(), &mut |choice| {
                found = Some(engine.procedure(choice));
                Ok(true)
            })?;
            if found.is_some() {
                break;
            }
        }
        let part = match found {
            Some(p) => p,
            None => return Ok(None),
        };
        wiring.protocols.extend(part.protocols);
        wiring.alpha.extend(part.alpha);
    }
    Ok(Some(wiring))
}
