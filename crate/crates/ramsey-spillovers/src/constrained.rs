//! The ε-constraint formulation: maximize one criterion with the other
//! bounded below, via an escalating quadratic penalty around the ascent
//! machinery.
//!
//! The penalized objective `J_primary - mu * max(0, eps - J_secondary)^2` has
//! the same directional derivative as a scalarization whose weights follow
//! the current constraint violation, so each inner iteration reuses the
//! direction PDE with an effective Theta and line-searches the penalized
//! value directly.

use serde::{Deserialize, Serialize};

use crate::ascent::{
    initial_iterate, run_ascent, scalarized_objective, AscentConfig, AscentError, IterationRecord,
    ParetoFrontier, Termination,
};
use crate::model::{validate_spec, CriterionPair, Field, Grids, ModelSpec};
use crate::pde::{consumption_from_capital, evaluate_criteria, simulate_capital, SchemeConfig};
use crate::FieldRole;

/// Effective scalarization weight used when the constrained criterion has no
/// active penalty and the other criterion is maximized alone.
const THETA_CAP: f64 = 1e6;

/// Which criterion is maximized; the other gets the `>= epsilon` constraint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    /// Maximize discounted utility, constrain terminal capital.
    UtilityPrimary,
    /// Maximize terminal capital, constrain discounted utility.
    SustainabilityPrimary,
}

impl Orientation {
    pub fn as_str(&self) -> &'static str {
        match self {
            Orientation::UtilityPrimary => "utility_primary",
            Orientation::SustainabilityPrimary => "sustainability_primary",
        }
    }

    fn primary(&self, c: &CriterionPair) -> f64 {
        match self {
            Orientation::UtilityPrimary => c.j1,
            Orientation::SustainabilityPrimary => c.j2,
        }
    }

    fn secondary(&self, c: &CriterionPair) -> f64 {
        match self {
            Orientation::UtilityPrimary => c.j2,
            Orientation::SustainabilityPrimary => c.j1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpsConstraintConfig {
    pub orientation: Orientation,
    /// Right-hand side of the `secondary >= epsilon` constraint.
    pub epsilon_level: f64,
    /// Initial penalty weight; escalated by `growth` each outer round.
    pub mu0: f64,
    pub growth: f64,
    pub max_rounds: usize,
    /// Constraint slack above `-feasibility_tol` counts as feasible.
    pub feasibility_tol: f64,
    pub inner: AscentConfig,
}

impl EpsConstraintConfig {
    pub fn new(orientation: Orientation, epsilon_level: f64) -> Self {
        EpsConstraintConfig {
            orientation,
            epsilon_level,
            mu0: 10.0,
            growth: 10.0,
            max_rounds: 6,
            feasibility_tol: 1e-2,
            inner: AscentConfig::default(),
        }
    }
}

/// One outer penalty round.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PenaltyRound {
    pub round: usize,
    pub mu: f64,
    pub criteria: CriterionPair,
    pub slack: f64,
    pub penalized_objective: f64,
    pub iterations: usize,
    pub termination: Termination,
}

/// Output of [`solve_model_II`].
#[derive(Debug, Clone)]
pub struct EpsConstraintResult {
    pub capital: Field,
    pub consumption: Field,
    pub criteria: CriterionPair,
    /// `J_secondary - epsilon`; feasible iff above `-feasibility_tol`.
    pub slack: f64,
    pub feasible: bool,
    pub rounds: Vec<PenaltyRound>,
    /// Iteration log of the final round.
    pub log: Vec<IterationRecord>,
}

fn penalized_value(c: CriterionPair, orientation: Orientation, eps: f64, mu: f64) -> f64 {
    let violation = (eps - orientation.secondary(&c)).max(0.0);
    orientation.primary(&c) - mu * violation * violation
}

/// Effective scalarization weight of the penalized objective at the current
/// criteria: the gradient of the penalty contributes `2 mu max(0, eps - J_s)`
/// on the constrained criterion.
fn effective_theta(c: CriterionPair, orientation: Orientation, eps: f64, mu: f64) -> f64 {
    let violation = (eps - orientation.secondary(&c)).max(0.0);
    match orientation {
        Orientation::UtilityPrimary => (2.0 * mu * violation).min(THETA_CAP),
        Orientation::SustainabilityPrimary => {
            let w1 = 2.0 * mu * violation;
            if w1 > 1.0 / THETA_CAP {
                (1.0 / w1).min(THETA_CAP)
            } else {
                THETA_CAP
            }
        }
    }
}

/// Model II: escalate the quadratic penalty until the constraint holds to
/// tolerance or the rounds are exhausted; inner maximization is the ascent
/// loop on the penalized objective, warm-started across rounds.
#[allow(non_snake_case)]
pub fn solve_model_II(
    spec: &ModelSpec,
    grids: &Grids,
    scheme: &SchemeConfig,
    config: &EpsConstraintConfig,
) -> Result<EpsConstraintResult, AscentError> {
    let spec = validate_spec(spec.clone())?;
    let orientation = config.orientation;
    let eps = config.epsilon_level;

    // Zero consumption maximizes terminal capital, so it bounds J2 from
    // above; a level beyond it is infeasible outright.
    if orientation == Orientation::UtilityPrimary {
        let zero = Field::constant(FieldRole::Consumption, grids, 0.0);
        let (k_max, _) = simulate_capital(&zero, &spec, grids, scheme)?;
        let bound = evaluate_criteria(&k_max, &zero, &spec, grids);
        if eps > bound.j2 {
            let (consumption, _) = consumption_from_capital(&k_max, &spec, grids, scheme);
            let criteria = evaluate_criteria(&k_max, &consumption, &spec, grids);
            return Ok(EpsConstraintResult {
                capital: k_max,
                consumption,
                criteria,
                slack: criteria.j2 - eps,
                feasible: false,
                rounds: Vec::new(),
                log: Vec::new(),
            });
        }
    }

    let mut capital =
        initial_iterate(&spec, grids, scheme, config.inner.initial_consumption_share)?;
    let mut rounds = Vec::new();
    let mut last_log = Vec::new();
    let mut mu = config.mu0;
    let mut feasible = false;
    for round in 0..config.max_rounds.max(1) {
        let value_of = |c: CriterionPair| penalized_value(c, orientation, eps, mu);
        let theta_of = |c: CriterionPair| effective_theta(c, orientation, eps, mu);
        let (k_next, log, termination) = run_ascent(
            capital,
            &spec,
            grids,
            scheme,
            &config.inner,
            value_of,
            theta_of,
        )?;
        capital = k_next;
        let eval = scalarized_objective(&capital, 0.0, &spec, grids, scheme);
        let slack = orientation.secondary(&eval.criteria) - eps;
        rounds.push(PenaltyRound {
            round,
            mu,
            criteria: eval.criteria,
            slack,
            penalized_objective: penalized_value(eval.criteria, orientation, eps, mu),
            iterations: log.len() - 1,
            termination,
        });
        last_log = log;
        if slack >= -config.feasibility_tol {
            feasible = true;
            break;
        }
        mu *= config.growth;
    }

    let (consumption, _) = consumption_from_capital(&capital, &spec, grids, scheme);
    let criteria = evaluate_criteria(&capital, &consumption, &spec, grids);
    let slack = orientation.secondary(&criteria) - eps;
    Ok(EpsConstraintResult {
        capital,
        consumption,
        criteria,
        slack,
        feasible,
        rounds,
        log: last_log,
    })
}

/// How an ε-constraint solution relates to a traced frontier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrontierConsistency {
    pub nearest_theta: f64,
    pub nearest: CriterionPair,
    /// `nearest - solution`, per criterion.
    pub gap_j1: f64,
    pub gap_j2: f64,
    /// Some frontier point improves both criteria by more than the
    /// tolerance: a solver-quality failure.
    pub dominated_beyond_tol: bool,
}

/// Checks that the solution is not dominated by any frontier point beyond
/// `rel_tol` of each criterion's range, and reports the closest point.
pub fn consistency_with_frontier(
    criteria: &CriterionPair,
    frontier: &ParetoFrontier,
    rel_tol: f64,
) -> Option<FrontierConsistency> {
    let points: Vec<(f64, CriterionPair)> = frontier
        .points
        .iter()
        .filter_map(|p| p.criteria.map(|c| (p.theta, c)))
        .collect();
    if points.is_empty() {
        return None;
    }
    let min_max = |f: fn(&CriterionPair) -> f64| {
        points
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (_, c)| {
                (lo.min(f(c)), hi.max(f(c)))
            })
    };
    let (lo1, hi1) = min_max(|c| c.j1);
    let (lo2, hi2) = min_max(|c| c.j2);
    let range1 = (hi1 - lo1).max(1e-12);
    let range2 = (hi2 - lo2).max(1e-12);

    let dominated_beyond_tol = points.iter().any(|(_, c)| {
        c.j1 >= criteria.j1 + rel_tol * range1 && c.j2 >= criteria.j2 + rel_tol * range2
    });
    let (nearest_theta, nearest) = points
        .iter()
        .min_by(|(_, a), (_, b)| {
            let da =
                ((a.j1 - criteria.j1) / range1).powi(2) + ((a.j2 - criteria.j2) / range2).powi(2);
            let db =
                ((b.j1 - criteria.j1) / range1).powi(2) + ((b.j2 - criteria.j2) / range2).powi(2);
            da.total_cmp(&db)
        })
        .copied()
        .unwrap();
    Some(FrontierConsistency {
        nearest_theta,
        nearest,
        gap_j1: nearest.j1 - criteria.j1,
        gap_j2: nearest.j2 - criteria.j2,
        dominated_beyond_tol,
    })
}
