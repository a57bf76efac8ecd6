//! Noncontextuality decision and the noncontextual fraction.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::lp::{solve_lp_exact, LinearProgram, LpOutcome, Relation};
use crate::model::{validate_model, ContextDistribution, EmpiricalModel};
use crate::rational::{self, Rational};
use crate::scenario::{Assignment, Scenario};

/// A (sub)distribution over global assignments. Zero weights are not stored.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GlobalDistribution {
    pub weights: BTreeMap<Assignment, Rational>,
}

impl GlobalDistribution {
    pub fn point(g: Assignment) -> Self {
        GlobalDistribution { weights: [(g, rational::one())].into() }
    }

    pub fn total(&self) -> Rational {
        self.weights.values().fold(Rational::zero(), |acc, w| acc + w)
    }

    /// `b|_ctx`, unnormalized.
    pub fn marginal(&self, ctx: &BTreeSet<String>) -> ContextDistribution {
        ContextDistribution::new(ctx.clone(), self.weights.iter().map(|(g, w)| (g.restrict(ctx), w.clone())))
    }

    pub fn scaled(&self, f: &Rational) -> GlobalDistribution {
        let weights = self.weights.iter().map(|(g, w)| (g.clone(), w * f)).filter(|(_, w)| !w.is_zero()).collect();
        GlobalDistribution { weights }
    }

    /// The model on `s` whose tables are the marginals of this distribution.
    pub fn to_model(&self, s: &Scenario) -> Result<EmpiricalModel> {
        let tables = s.maximal_contexts().iter().map(|c| self.marginal(c)).collect();
        EmpiricalModel::new(s.clone(), tables)
    }

    /// Exact check of `d|_σ = e_σ` on every maximal context.
    pub fn explains(&self, e: &EmpiricalModel) -> bool {
        self.well_formed(e.scenario()) && e.tables().iter().all(|t| &self.marginal(&t.context) == t)
    }

    /// Exact check of `b|_σ ≤ e_σ` entrywise on every maximal context.
    pub fn dominated_by(&self, e: &EmpiricalModel) -> bool {
        self.well_formed(e.scenario())
            && e.tables().iter().all(|t| self.marginal(&t.context).support().all(|(a, w)| *w <= t.weight(a)))
    }

    fn well_formed(&self, s: &Scenario) -> bool {
        let ids = s.id_set();
        self.weights.iter().all(|(g, w)| w.is_positive() && g.domain() == ids && s.check_assignment(g).is_ok())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Noncontextuality {
    Noncontextual(GlobalDistribution),
    Contextual,
}

impl Noncontextuality {
    pub fn is_noncontextual(&self) -> bool {
        matches!(self, Noncontextuality::Noncontextual(_))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NcfResult {
    pub value: Rational,
    /// The subdistribution `b`; its mass is `value`.
    pub nc_part: GlobalDistribution,
    /// `(e − b-marginals)/(1 − value)`, absent when `value = 1`.
    pub rest: Option<EmpiricalModel>,
}

impl NcfResult {
    /// `b/value` as a noncontextual model, absent when `value = 0`.
    pub fn nc_model(&self, s: &Scenario) -> Result<Option<EmpiricalModel>> {
        if self.value.is_zero() {
            return Ok(None);
        }
        self.nc_part.scaled(&(rational::one() / &self.value)).to_model(s).map(Some)
    }
}

/// One LP variable per global assignment, in `enumerate_assignments` order;
/// one row per maximal context and joint outcome.
fn global_lp(e: &EmpiricalModel, relation: Relation) -> Result<(LinearProgram, Vec<Assignment>)> {
    let s = e.scenario();
    let globals = s.enumerate_assignments(s.ids())?;
    let mut lp = LinearProgram::new(globals.len());
    lp.objective = vec![rational::one(); globals.len()];
    for t in e.tables() {
        for a in s.enumerate_assignments(&t.context)? {
            let coeffs = globals
                .iter()
                .map(|g| if a.is_restriction_of(g) { rational::one() } else { Rational::zero() })
                .collect();
            lp.add(coeffs, relation, t.weight(&a));
        }
    }
    Ok((lp, globals))
}

fn distribution(globals: Vec<Assignment>, x: Vec<Rational>) -> GlobalDistribution {
    GlobalDistribution { weights: globals.into_iter().zip(x).filter(|(_, w)| !w.is_zero()).collect() }
}

pub fn is_noncontextual(e: &EmpiricalModel) -> Result<Noncontextuality> {
    validate_model(e).into_result(Error::InvalidModel)?;
    let (lp, globals) = global_lp(e, Relation::Eq)?;
    match solve_lp_exact(&lp)? {
        LpOutcome::Optimal { x, .. } => {
            let witness = distribution(globals, x);
            debug_assert!(witness.explains(e));
            Ok(Noncontextuality::Noncontextual(witness))
        }
        LpOutcome::Infeasible => Ok(Noncontextuality::Contextual),
        LpOutcome::Unbounded => unreachable!("mass is bounded by each table"),
    }
}

pub fn ncf(e: &EmpiricalModel) -> Result<NcfResult> {
    validate_model(e).into_result(Error::InvalidModel)?;
    let (lp, globals) = global_lp(e, Relation::Le)?;
    let (value, x) = match solve_lp_exact(&lp)? {
        LpOutcome::Optimal { value, x } => (value, x),
        _ => unreachable!("b = 0 is feasible and the mass is bounded"),
    };
    let nc_part = distribution(globals, x);
    let rest = if value.is_one() {
        None
    } else {
        let scale = rational::one() / (rational::one() - &value);
        let tables = e
            .tables()
            .iter()
            .map(|t| {
                let b = nc_part.marginal(&t.context);
                let all = e.scenario().enumerate_assignments(&t.context).expect("own context");
                ContextDistribution::new(
                    t.context.clone(),
                    all.into_iter().map(|a| {
                        let w = (t.weight(&a) - b.weight(&a)) * &scale;
                        (a, w)
                    }),
                )
            })
            .collect();
        Some(EmpiricalModel::new(e.scenario().clone(), tables)?)
    };
    Ok(NcfResult { value, nc_part, rest })
}
