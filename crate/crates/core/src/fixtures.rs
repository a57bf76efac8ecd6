//! Named example models.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::model::{mix, ContextDistribution, EmpiricalModel, PartitionedModel};
use crate::rational::{self, ratio, Rational};
use crate::scenario::{self, Assignment, Scenario};

/// Pairwise anticorrelated uniform bits on the triangle scenario.
pub fn triangle() -> EmpiricalModel {
    let s = scenario::triangle();
    let tables = s
        .maximal_contexts()
        .iter()
        .map(|ctx| {
            let ids: Vec<&String> = ctx.iter().collect();
            ContextDistribution::new(
                ctx.clone(),
                [("0", "1"), ("1", "0")]
                    .iter()
                    .map(|(x, y)| (Assignment::from_pairs([(ids[0].clone(), *x), (ids[1].clone(), *y)]), ratio(1, 2))),
            )
        })
        .collect();
    EmpiricalModel::new(s, tables).expect("triangle fixture")
}

/// The PR box on the 2-site, 2-input, 2-output Bell scenario:
/// `p(ab|xy) = 1/2` when `a ⊕ b = x ∧ y`.
pub fn pr() -> PartitionedModel {
    let bell = scenario::bell(2, 2, 2);
    let flat = bell.flat();
    let tables = flat
        .maximal_contexts()
        .iter()
        .map(|ctx| {
            let ids: Vec<&String> = ctx.iter().collect();
            let input = |id: &str| -> u8 {
                if id.ends_with("x1") {
                    1
                } else {
                    0
                }
            };
            let (x, y) = (input(ids[0]), input(ids[1]));
            let weights = flat.enumerate_assignments(ctx.iter()).expect("own ids").into_iter().filter_map(|a| {
                let bit = |id: &String| -> u8 {
                    if a.get(id).map(String::as_str) == Some("1") {
                        1
                    } else {
                        0
                    }
                };
                (bit(ids[0]) ^ bit(ids[1]) == x & y).then_some((a, ratio(1, 2)))
            });
            ContextDistribution::new(ctx.clone(), weights.collect::<Vec<_>>())
        })
        .collect();
    let model = EmpiricalModel::new(flat, tables).expect("pr fixture");
    PartitionedModel::new(bell, model).expect("pr fixture")
}

/// `(1 − lambda)·pr + lambda·uniform`.
pub fn noisy_pr(lambda: &Rational) -> Result<PartitionedModel> {
    if !rational::is_probability(lambda) {
        return Err(Error::OutOfRange(format!("lambda = {} not in [0,1]", rational::format(lambda))));
    }
    let p = pr();
    let u = uniform(p.model.scenario());
    let model = mix(&(rational::one() - lambda), &p.model, &u)?;
    PartitionedModel::new(p.scenario, model)
}

/// Independent uniform outcomes on every context.
pub fn uniform(s: &Scenario) -> EmpiricalModel {
    let tables = s
        .maximal_contexts()
        .iter()
        .map(|ctx| {
            let all = s.enumerate_assignments(ctx.iter()).expect("own ids");
            let w = ratio(1, all.len() as i64);
            ContextDistribution::new(ctx.clone(), all.into_iter().map(|a| (a, w.clone())))
        })
        .collect();
    EmpiricalModel::new(s.clone(), tables).expect("uniform is consistent")
}

/// The model that always yields the global assignment `g`.
pub fn deterministic(s: &Scenario, g: &Assignment) -> Result<EmpiricalModel> {
    s.check_assignment(g)?;
    if g.domain() != s.id_set() {
        return Err(Error::InvalidModel("deterministic fixture needs a global assignment".into()));
    }
    let tables =
        s.maximal_contexts().iter().map(|ctx| ContextDistribution::point(ctx.clone(), g.restrict(ctx))).collect();
    EmpiricalModel::new(s.clone(), tables)
}

/// Pushes a distribution over global assignments down to every context.
pub fn from_global(s: &Scenario, weights: &[(Assignment, Rational)]) -> Result<EmpiricalModel> {
    let ids: BTreeSet<String> = s.id_set();
    for (g, _) in weights {
        if g.domain() != ids {
            return Err(Error::InvalidModel(format!("{g} is not a global assignment")));
        }
    }
    let tables = s
        .maximal_contexts()
        .iter()
        .map(|ctx| ContextDistribution::new(ctx.clone(), weights.iter().map(|(g, w)| (g.restrict(ctx), w.clone()))))
        .collect();
    EmpiricalModel::new(s.clone(), tables)
}

pub fn trivial() -> EmpiricalModel {
    EmpiricalModel::trivial()
}

/// A fixture resolved by name.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Fixture {
    Model(EmpiricalModel),
    Partitioned(PartitionedModel),
}

impl Fixture {
    pub fn model(&self) -> &EmpiricalModel {
        match self {
            Fixture::Model(m) => m,
            Fixture::Partitioned(p) => &p.model,
        }
    }
}

pub const NAMES: &[&str] = &["triangle", "pr", "noisy_pr", "uniform", "deterministic", "trivial"];

/// Looks up a fixture. `noisy_pr` takes `lambda`; `uniform` and
/// `deterministic` take a scenario (and a global assignment).
pub fn fixture(
    name: &str,
    lambda: Option<&Rational>,
    scenario: Option<&Scenario>,
    global: Option<&Assignment>,
) -> Result<Fixture> {
    let need_scenario = || scenario.ok_or_else(|| Error::OutOfRange(format!("fixture `{name}` needs a scenario")));
    Ok(match name {
        "triangle" => Fixture::Model(triangle()),
        "pr" => Fixture::Partitioned(pr()),
        "noisy_pr" => {
            let l = lambda.ok_or_else(|| Error::OutOfRange("noisy_pr needs lambda".into()))?;
            Fixture::Partitioned(noisy_pr(l)?)
        }
        "uniform" => Fixture::Model(uniform(need_scenario()?)),
        "deterministic" => {
            let g = global.ok_or_else(|| Error::OutOfRange("deterministic needs a global assignment".into()))?;
            Fixture::Model(deterministic(need_scenario()?, g)?)
        }
        "trivial" => Fixture::Model(trivial()),
        other => return Err(Error::UnknownFixture(other.to_string())),
    })
}
