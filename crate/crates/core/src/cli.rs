//! The `ctxlab` command line. Exit codes: 0 success or a positive
//! decision, 1 a negative decision, 2 a usage error, 3 an invariant
//! violation in the input.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::contextuality::{is_noncontextual, ncf, Noncontextuality};
use crate::error::{Error, Result};
use crate::fixtures;
use crate::io::{self, Entry, ModelEntry, SimulationEntry, Workspace};
use crate::model::{boxtimes, tensor_models, EmpiricalModel};
use crate::protocol::{merge_protocols, mp_model_table, restrict_protocol, MeasurementProtocol, MpContext};
use crate::rational::{self, Rational};
use crate::scenario::{Assignment, Scenario};
use crate::simulation::family::{micro_models, micro_partitioned, small_models};
use crate::simulation::{
    audit_no_catalysis, audit_no_catalysis_npartite, check_npartite_simulation, check_simulation,
    extract_catalyst_free, search_npartite_simulation, search_simulation, AuditReport, AuditTriple, Bounds, Catalytic,
    FreeClass, NPartiteOutcome, SearchOutcome,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_NEGATIVE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INVALID: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "ctxlab", version, about = "Exact contextuality toolkit")]
struct Cli {
    /// Print a machine-readable JSON report.
    #[arg(long, global = true)]
    json: bool,
    /// Seed for randomized corpus generation.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Search bounds, e.g. `depth=2,free=4,branching=2,cap=100000`.
    #[arg(long, global = true)]
    bounds: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Load files and check every entry.
    Validate {
        paths: Vec<PathBuf>,
    },
    /// `a ⊗ b` with ids tagged `L.` and `R.`.
    Tensor {
        a: String,
        b: String,
    },
    /// Sitewise `a ⊠ b` of two partitioned models.
    Boxtimes {
        a: String,
        b: String,
    },
    /// Marginal of a model on a context, given as comma-separated ids.
    Marginal {
        model: String,
        #[arg(long)]
        context: String,
    },
    /// Decide contextuality with an exact LP; exits 1 when noncontextual.
    IsContextual {
        model: String,
        /// Make "noncontextual" the positive answer.
        #[arg(long)]
        expect_noncontextual: bool,
    },
    /// Noncontextual fraction as an exact rational.
    Ncf {
        model: String,
    },
    /// Push a model along a deterministic or adaptive procedure.
    Pushforward {
        procedure: String,
        model: String,
    },
    /// Joint table of protocols measured on a model; protocols are named
    /// after their entries.
    MpTable {
        model: String,
        protocols: Vec<String>,
    },
    /// Merge compatible protocols into one that contains each of them.
    MergeProtocols {
        protocols: Vec<String>,
        /// Scenario or model whose scenario the protocols live on.
        #[arg(long)]
        scenario: Option<String>,
    },
    /// What remains of a protocol once some outcomes are known.
    RestrictProtocol {
        protocol: String,
        /// Observed outcomes, e.g. `a=0,b=1`.
        #[arg(long)]
        assign: String,
    },
    /// Verify a simulation against a target model exactly.
    CheckSimulation {
        simulation: String,
        target: String,
    },
    /// Bounded search for a simulation of `target` from `source`; exits 1 when none is found.
    SearchSimulation {
        source: String,
        target: String,
        /// Explicit free class: models tried in order after the trivial one.
        #[arg(long = "free-model")]
        free_models: Vec<String>,
        /// Search partitioned models as plain models.
        #[arg(long)]
        tensor: bool,
    },
    /// Eliminate `d` from a conversion `d ⊗ e ⇝ d ⊗ f`.
    ExtractCatalystFree {
        d: String,
        e: String,
        f: String,
        /// A simulation of `d ⊗ e ⇝ d ⊗ f`; searched for when absent.
        #[arg(long)]
        simulation: Option<String>,
        #[arg(long, default_value_t = 4)]
        max_copies: usize,
    },
    /// Search every triple of a family for catalysis and extract catalyst-free simulations.
    AuditCatalysis {
        #[arg(long, value_enum)]
        family: Family,
        /// Number of sampled triples for the `small` family.
        #[arg(long, default_value_t = 200)]
        samples: usize,
        /// Audit only the first N triples.
        #[arg(long)]
        limit: Option<usize>,
    },
    /// Print a fixture, or write all of them to a directory.
    Fixtures {
        name: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Weight of uniform noise for `noisy_pr`.
        #[arg(long, default_value = "1/2")]
        lambda: String,
        /// Scenario for `uniform` and `deterministic`.
        #[arg(long)]
        scenario: Option<String>,
        /// Global assignment for `deterministic`, e.g. `a=0,b=1,c=0`.
        #[arg(long)]
        assign: Option<String>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Family {
    /// All triples of micro models, tensor semantics.
    Micro,
    /// All triples of two-site micro models, sitewise semantics.
    MicroSitewise,
    /// Micro triples with the trivial model and a fair coin as the only free models.
    MicroExplicit,
    /// Seeded sample of triples from the small family.
    Small,
}

/// What a command printed and how it exits.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CommandOutput {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

struct Report {
    code: i32,
    text: String,
    json: Value,
}

impl Report {
    fn data(value: Value) -> Self {
        Report { code: EXIT_OK, text: io::canonical_text(&value), json: value }
    }

    fn decision(ok: bool, text: &str, json: Value) -> Self {
        Report { code: if ok { EXIT_OK } else { EXIT_NEGATIVE }, text: format!("{text}\n"), json }
    }
}

/// Runs one command line; `argv[0]` is the program name.
pub fn run_command<I, T>(argv: I) -> CommandOutput
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            return if e.use_stderr() {
                CommandOutput { code, stdout: String::new(), stderr: text }
            } else {
                CommandOutput { code, stdout: text, stderr: String::new() }
            };
        }
    };
    let mut warnings = Vec::new();
    let name = command_name(&cli.command);
    let result = execute(&cli, &mut warnings);
    let mut stderr: String = warnings.iter().map(|w| format!("warning: {w}\n")).collect();
    match result {
        Ok(report) => {
            let stdout = if cli.json {
                io::canonical_text(&json!({"command": name, "result": report.json, "warnings": warnings}))
            } else {
                report.text
            };
            CommandOutput { code: report.code, stdout, stderr }
        }
        Err(err) => {
            let code = exit_code(&err);
            let stdout = if cli.json {
                io::canonical_text(&json!({"command": name, "error": err.to_string(), "warnings": warnings}))
            } else {
                String::new()
            };
            stderr.push_str(&format!("error: {err}\n"));
            CommandOutput { code, stdout, stderr }
        }
    }
}

fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Io(_) | Error::Parse(_) | Error::UnknownFixture(_) | Error::OutOfRange(_) => EXIT_USAGE,
        _ => EXIT_INVALID,
    }
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Validate { .. } => "validate",
        Command::Tensor { .. } => "tensor",
        Command::Boxtimes { .. } => "boxtimes",
        Command::Marginal { .. } => "marginal",
        Command::IsContextual { .. } => "is-contextual",
        Command::Ncf { .. } => "ncf",
        Command::Pushforward { .. } => "pushforward",
        Command::MpTable { .. } => "mp-table",
        Command::MergeProtocols { .. } => "merge-protocols",
        Command::RestrictProtocol { .. } => "restrict-protocol",
        Command::CheckSimulation { .. } => "check-simulation",
        Command::SearchSimulation { .. } => "search-simulation",
        Command::ExtractCatalystFree { .. } => "extract-catalyst-free",
        Command::AuditCatalysis { .. } => "audit-catalysis",
        Command::Fixtures { .. } => "fixtures",
    }
}

/// Loads `path` or `path#name` and returns the named entry.
fn load_entry(arg: &str, warnings: &mut Vec<String>) -> Result<Entry> {
    let (path, name) = match arg.rsplit_once('#') {
        Some((p, n)) => (p, Some(n)),
        None => (arg, None),
    };
    let mut ws = Workspace::new();
    let names = ws.load(Path::new(path))?;
    warnings.append(&mut ws.warnings);
    let pick = match name {
        Some(n) => n.to_string(),
        None if names.len() == 1 => names[0].clone(),
        None => return Err(Error::Parse(format!("{path} holds {} entries; name one with `{path}#name`", names.len()))),
    };
    ws.get(&pick).cloned().ok_or_else(|| Error::Parse(format!("no entry `{pick}` in {path}")))
}

fn load_model(arg: &str, warnings: &mut Vec<String>) -> Result<ModelEntry> {
    match load_entry(arg, warnings)? {
        Entry::Model(m) => Ok(m),
        other => Err(Error::Parse(format!("{arg} is a {}, expected a model", other.kind()))),
    }
}

fn load_protocol(arg: &str, warnings: &mut Vec<String>) -> Result<(MeasurementProtocol, Option<Scenario>)> {
    match load_entry(arg, warnings)? {
        Entry::Protocol(p) => Ok((p.protocol, p.scenario.map(|s| s.value))),
        other => Err(Error::Parse(format!("{arg} is a {}, expected a protocol", other.kind()))),
    }
}

fn protocol_name(arg: &str) -> String {
    match arg.rsplit_once('#') {
        Some((_, n)) => n.to_string(),
        None => Path::new(arg).file_stem().and_then(|s| s.to_str()).unwrap_or(arg).to_string(),
    }
}

fn parse_ids(text: &str) -> BTreeSet<String> {
    text.split(',').map(str::trim).filter(|s| !s.is_empty()).map(String::from).collect()
}

fn parse_assignment(text: &str) -> Result<Assignment> {
    let mut a = Assignment::new();
    for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (k, v) =
            item.split_once('=').ok_or_else(|| Error::Parse(format!("`{item}` is not measurement=outcome")))?;
        a.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(a)
}

fn bounds(cli: &Cli) -> Result<Bounds> {
    match &cli.bounds {
        Some(b) => Bounds::parse(b),
        None => Ok(Bounds::default()),
    }
}

fn execute(cli: &Cli, warnings: &mut Vec<String>) -> Result<Report> {
    match &cli.command {
        Command::Validate { paths } => validate(paths, warnings),
        Command::Tensor { a, b } => {
            let (a, b) = (load_model(a, warnings)?, load_model(b, warnings)?);
            Ok(Report::data(io::model_value(&tensor_models(&a.model, &b.model))))
        }
        Command::Boxtimes { a, b } => {
            let need = |m: ModelEntry, arg: &str| {
                m.partitioned_model().ok_or_else(|| Error::Parse(format!("{arg} is not a partitioned model")))
            };
            let pa = need(load_model(a, warnings)?, a)?;
            let pb = need(load_model(b, warnings)?, b)?;
            Ok(Report::data(io::partitioned_value(&boxtimes(&pa, &pb)?)))
        }
        Command::Marginal { model, context } => {
            let m = load_model(model, warnings)?;
            Ok(Report::data(io::table_value(&m.model.marginal(&parse_ids(context))?)))
        }
        Command::IsContextual { model, expect_noncontextual } => {
            let m = load_model(model, warnings)?.model;
            is_contextual(&m, *expect_noncontextual)
        }
        Command::Ncf { model } => {
            let m = load_model(model, warnings)?.model;
            let r = ncf(&m)?;
            let json = json!({
                "ncf": rational::format(&r.value),
                "nc_part": io::global_value(&r.nc_part),
                "rest": r.rest.as_ref().map(io::model_value),
            });
            Ok(Report { code: EXIT_OK, text: format!("{}\n", rational::format(&r.value)), json })
        }
        Command::Pushforward { procedure, model } => {
            let m = load_model(model, warnings)?.model;
            let out = match load_entry(procedure, warnings)? {
                Entry::Procedure(p) => p.procedure.pushforward(&m)?,
                Entry::Adaptive(a) => a.procedure.pushforward(&m)?,
                other => return Err(Error::Parse(format!("{procedure} is a {}, expected a procedure", other.kind()))),
            };
            Ok(Report::data(io::model_value(&out)))
        }
        Command::MpTable { model, protocols } => {
            let m = load_model(model, warnings)?.model;
            let sigma = MpContext::new(
                protocols
                    .iter()
                    .map(|p| Ok((protocol_name(p), load_protocol(p, warnings)?.0)))
                    .collect::<Result<Vec<_>>>()?,
            );
            Ok(Report::data(io::table_value(&mp_model_table(&m, &sigma)?)))
        }
        Command::MergeProtocols { protocols, scenario } => {
            let loaded = protocols.iter().map(|p| load_protocol(p, warnings)).collect::<Result<Vec<_>>>()?;
            let s = match scenario {
                Some(arg) => match load_entry(arg, warnings)? {
                    Entry::Scenario(s) => s,
                    Entry::Model(m) => m.model.scenario().clone(),
                    other => return Err(Error::Parse(format!("{arg} is a {}, expected a scenario", other.kind()))),
                },
                None => loaded
                    .iter()
                    .find_map(|(_, s)| s.clone())
                    .ok_or_else(|| Error::Parse("no scenario given and no protocol names one".into()))?,
            };
            let qs: Vec<MeasurementProtocol> = loaded.into_iter().map(|(q, _)| q).collect();
            Ok(Report::data(io::protocol_value(&merge_protocols(&s, &qs)?)))
        }
        Command::RestrictProtocol { protocol, assign } => {
            let (q, _) = load_protocol(protocol, warnings)?;
            Ok(Report::data(io::protocol_value(&restrict_protocol(&q, &parse_assignment(assign)?))))
        }
        Command::CheckSimulation { simulation, target } => {
            let sim = match load_entry(simulation, warnings)? {
                Entry::Simulation(s) => s,
                other => {
                    return Err(Error::Parse(format!("{simulation} is a {}, expected a simulation", other.kind())))
                }
            };
            let t = load_model(target, warnings)?;
            let ok = match (sim.npartite(), t.partitioned_model()) {
                (Some((source, s)), Some(tp)) => check_npartite_simulation(&s, &source, &tp)?,
                _ => check_simulation(&sim.tensor_form(), &t.model)?,
            };
            Ok(Report::decision(ok, if ok { "true" } else { "false" }, json!({"simulates": ok})))
        }
        Command::SearchSimulation { source, target, free_models, tensor } => {
            let s = load_model(source, warnings)?;
            let t = load_model(target, warnings)?;
            let class = if free_models.is_empty() {
                FreeClass::Noncontextual
            } else {
                let mut ms = vec![EmpiricalModel::trivial()];
                for f in free_models {
                    ms.push(load_model(f, warnings)?.model);
                }
                FreeClass::Explicit(ms)
            };
            search(&s, &t, &bounds(cli)?, &class, *tensor)
        }
        Command::ExtractCatalystFree { d, e, f, simulation, max_copies } => {
            let (d, e, f) =
                (load_model(d, warnings)?.model, load_model(e, warnings)?.model, load_model(f, warnings)?.model);
            let sim = match simulation {
                Some(arg) => match load_entry(arg, warnings)? {
                    Entry::Simulation(s) => s.tensor_form(),
                    other => return Err(Error::Parse(format!("{arg} is a {}, expected a simulation", other.kind()))),
                },
                None => {
                    let (de, df) = (tensor_models(&d, &e), tensor_models(&d, &f));
                    match search_simulation(&de, &df, &bounds(cli)?, &FreeClass::Noncontextual)? {
                        SearchOutcome::Found { sim, .. } => sim,
                        SearchOutcome::NotFound { complete, .. } => {
                            let text = if complete {
                                "no conversion d ⊗ e ⇝ d ⊗ f exists"
                            } else {
                                "no conversion within bounds"
                            };
                            return Ok(Report::decision(false, text, json!({"found": false, "complete": complete})));
                        }
                    }
                }
            };
            let cat = Catalytic::from_simulation(&sim, &d, &e, &f)?;
            let x = extract_catalyst_free(&cat, *max_copies)?;
            let c = &x.certificate;
            let json = json!({
                "simulation": io::simulation_value(&x.simulation),
                "certificate": {
                    "copies": c.copies,
                    "copy": c.copy,
                    "repeat": c.repeat.map(|(a, b)| json!([a, b])),
                    "merged": c.merged.iter().map(|(u, q)| (u.clone(), io::protocol_value(q))).collect::<serde_json::Map<_, _>>(),
                    "d_hat": io::model_value(&c.d_hat),
                    "witness": io::global_value(&c.witness),
                    "attempts": c.attempts,
                },
            });
            Ok(Report { code: EXIT_OK, text: io::canonical_text(&json), json })
        }
        Command::AuditCatalysis { family, samples, limit } => audit(*family, *samples, *limit, cli.seed, &bounds(cli)?),
        Command::Fixtures { name, out, lambda, scenario, assign } => {
            let lambda = rational::parse(lambda)?.value;
            fixtures_command(name.as_deref(), out.as_deref(), &lambda, scenario.as_deref(), assign.as_deref(), warnings)
        }
    }
}

fn validate(paths: &[PathBuf], warnings: &mut Vec<String>) -> Result<Report> {
    if paths.is_empty() {
        return Err(Error::Parse("validate needs at least one path".into()));
    }
    let mut ws = Workspace::new();
    for p in paths {
        ws.load(p)?;
    }
    warnings.append(&mut ws.warnings);
    let entries: Vec<Value> = ws.entries().map(|(n, e)| json!({"name": n, "kind": e.kind()})).collect();
    let text: String = ws.entries().map(|(n, e)| format!("valid {} {n}\n", e.kind())).collect();
    Ok(Report { code: EXIT_OK, text, json: json!({"valid": true, "entries": entries}) })
}

fn is_contextual(m: &EmpiricalModel, expect_noncontextual: bool) -> Result<Report> {
    let (contextual, certificate) = match is_noncontextual(m)? {
        Noncontextuality::Noncontextual(g) => {
            debug_assert!(g.explains(m));
            (false, json!({"witness": io::global_value(&g)}))
        }
        Noncontextuality::Contextual => {
            let r = ncf(m)?;
            (true, json!({"ncf": rational::format(&r.value), "nc_part": io::global_value(&r.nc_part)}))
        }
    };
    let word = if contextual { "contextual" } else { "noncontextual" };
    let positive = contextual != expect_noncontextual;
    Ok(Report::decision(positive, word, json!({"contextual": contextual, "certificate": certificate})))
}

fn search(s: &ModelEntry, t: &ModelEntry, bounds: &Bounds, class: &FreeClass, tensor: bool) -> Result<Report> {
    let sitewise = match (s.partitioned_model(), t.partitioned_model()) {
        (Some(sp), Some(tp)) if !tensor && matches!(class, FreeClass::Noncontextual) => Some((sp, tp)),
        _ => None,
    };
    let found = match sitewise {
        Some((sp, tp)) => match search_npartite_simulation(&sp, &tp, bounds) {
            Ok(NPartiteOutcome::Found { sim, candidates }) => {
                Ok((SimulationEntry::from_npartite(&sim, &sp), candidates))
            }
            Ok(NPartiteOutcome::NotFound { candidates, complete }) => Err((candidates, complete)),
            Err(err) => return cap_or(err),
        },
        None => match search_simulation(&s.model, &t.model, bounds, class) {
            Ok(SearchOutcome::Found { sim, candidates }) => Ok((SimulationEntry::from_simulation(&sim), candidates)),
            Ok(SearchOutcome::NotFound { candidates, complete }) => Err((candidates, complete)),
            Err(err) => return cap_or(err),
        },
    };
    Ok(match found {
        Ok((entry, candidates)) => {
            let bundle = Entry::Simulation(entry).to_value();
            let json = json!({"found": true, "candidates": candidates, "simulation": bundle});
            Report { code: EXIT_OK, text: io::canonical_text(&bundle), json }
        }
        Err((candidates, complete)) => {
            let text = if complete { "not found (bounds are exhaustive)" } else { "not found within bounds" };
            Report::decision(false, text, json!({"found": false, "candidates": candidates, "complete": complete}))
        }
    })
}

fn cap_or(err: Error) -> Result<Report> {
    match err {
        Error::CapExceeded { cap, visited } => Ok(Report::decision(
            false,
            &format!("candidate cap {cap} exhausted after {visited} candidates"),
            json!({"found": false, "cap_exceeded": true, "candidates": visited}),
        )),
        other => Err(other),
    }
}

fn cube<M: Clone>(models: &[(String, M)]) -> Vec<AuditTriple<M>> {
    let mut out = Vec::with_capacity(models.len().pow(3));
    for (ld, d) in models {
        for (le, e) in models {
            for (lf, f) in models {
                out.push(AuditTriple {
                    label: format!("{ld} | {le} | {lf}"),
                    d: d.clone(),
                    e: e.clone(),
                    f: f.clone(),
                });
            }
        }
    }
    out
}

fn truncate<T>(mut v: Vec<T>, limit: Option<usize>) -> Vec<T> {
    if let Some(n) = limit {
        v.truncate(n);
    }
    v
}

/// The trivial model and a fair coin.
pub fn explicit_micro_class() -> Vec<EmpiricalModel> {
    let s = Scenario::new(vec![crate::scenario::Measurement::binary("x")], vec![]).expect("one measurement");
    vec![EmpiricalModel::trivial(), fixtures::uniform(&s)]
}

fn audit(family: Family, samples: usize, limit: Option<usize>, seed: u64, bounds: &Bounds) -> Result<Report> {
    let report: AuditReport = match family {
        Family::Micro => audit_no_catalysis(&truncate(cube(&micro_models()), limit), bounds, &FreeClass::Noncontextual),
        Family::MicroExplicit => {
            let triples = truncate(cube(&micro_models()), limit);
            audit_no_catalysis(&triples, bounds, &FreeClass::Explicit(explicit_micro_class()))
        }
        Family::MicroSitewise => audit_no_catalysis_npartite(&truncate(cube(&micro_partitioned()), limit), bounds),
        Family::Small => {
            let models = small_models(seed, 150);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let triples: Vec<_> = (0..samples)
                .map(|_| {
                    let pick = |rng: &mut ChaCha8Rng| models.choose(rng).expect("nonempty family").clone();
                    let ((ld, d), (le, e), (lf, f)) = (pick(&mut rng), pick(&mut rng), pick(&mut rng));
                    AuditTriple { label: format!("{ld} | {le} | {lf}"), d, e, f }
                })
                .collect();
            audit_no_catalysis(&truncate(triples, limit), bounds, &FreeClass::Noncontextual)
        }
    };
    let json = serde_json::to_value(&report).expect("report serializes");
    let mut text = format!("{}\n", report.summary());
    for e in &report.entries {
        if let crate::simulation::TripleOutcome::Violation { step, detail, replay } = &e.outcome {
            text.push_str(&format!("violation {}: {step}: {detail}\n  replay: {replay}\n", e.label));
        }
    }
    let code = if report.violations() == 0 { EXIT_OK } else { EXIT_NEGATIVE };
    Ok(Report { code, text, json })
}

fn fixture_value(
    name: &str,
    lambda: &Rational,
    scenario: Option<&Scenario>,
    global: Option<&Assignment>,
) -> Result<Value> {
    Ok(match fixtures::fixture(name, Some(lambda), scenario, global)? {
        fixtures::Fixture::Model(m) => io::model_value(&m),
        fixtures::Fixture::Partitioned(p) => io::partitioned_value(&p),
    })
}

fn fixtures_command(
    name: Option<&str>,
    out: Option<&Path>,
    lambda: &Rational,
    scenario: Option<&str>,
    assign: Option<&str>,
    warnings: &mut Vec<String>,
) -> Result<Report> {
    let scenario = match scenario {
        Some(arg) => match load_entry(arg, warnings)? {
            Entry::Scenario(s) => Some(s),
            Entry::Model(m) => Some(m.model.scenario().clone()),
            other => return Err(Error::Parse(format!("{arg} is a {}, expected a scenario", other.kind()))),
        },
        None => None,
    };
    let global = assign.map(parse_assignment).transpose()?;
    match (name, out) {
        (Some(n), None) => Ok(Report::data(fixture_value(n, lambda, scenario.as_ref(), global.as_ref())?)),
        (None, Some(dir)) => {
            fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
            let mut written = Vec::new();
            for n in ["triangle", "pr", "noisy_pr", "trivial"] {
                let path = dir.join(format!("{n}.json"));
                let text = io::canonical_text(&fixture_value(n, lambda, None, None)?);
                fs::write(&path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
                written.push(path.display().to_string());
            }
            let text: String = written.iter().map(|p| format!("wrote {p}\n")).collect();
            Ok(Report { code: EXIT_OK, text, json: json!({"written": written}) })
        }
        (Some(n), Some(dir)) => {
            fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
            let path = dir.join(format!("{n}.json"));
            let text = io::canonical_text(&fixture_value(n, lambda, scenario.as_ref(), global.as_ref())?);
            fs::write(&path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
            Ok(Report {
                code: EXIT_OK,
                text: format!("wrote {}\n", path.display()),
                json: json!({"written": [path.display().to_string()]}),
            })
        }
        (None, None) => {
            let text: String = fixtures::NAMES.iter().map(|n| format!("{n}\n")).collect();
            Ok(Report { code: EXIT_OK, text, json: json!({"fixtures": fixtures::NAMES}) })
        }
    }
}
