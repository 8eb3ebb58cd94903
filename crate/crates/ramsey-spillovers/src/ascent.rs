//! Gradient ascent on the substituted scalarized objective.
//!
//! Consumption is eliminated through the dynamic constraint, so the iterate is
//! the capital field alone. Each iteration solves the direction PDE
//!
//! ```text
//! -h_t + div(d grad h) + A h^alpha - delta_K h = [U'(C_n)]^{-1} (-Theta h_t + 1) e^{rho t},
//! h(., 0) = 0,
//! ```
//!
//! then takes the step length that maximizes the objective along `h`, capped
//! so that recovered consumption and capital stay nonnegative. The `-Theta
//! h_t` source term is linear in `h` and is folded into the implicit time
//! solve; only the `h^alpha` term (for `alpha < 1`) needs fixed-point sweeps,
//! so a single sweep suffices at `alpha = 1`. A direction solved this way has
//! directional derivative `T * |Omega|` at the current iterate, independent
//! of `Theta`, which is what makes the plain update monotone for small steps.

use thiserror::Error;

use crate::model::{
    integrate_space, validate_spec, CriterionPair, Field, FieldRole, Grids, ModelError, ModelSpec,
};
use crate::pde::{
    consumption_from_capital, discounted_quadrature, evaluate_criteria, simulate_capital,
    PdeError, RecoveryDiagnostics, SchemeConfig, SpatialOperator, Stepper,
};

/// Absolute ceiling for the line-search bracket.
const DELTA_ABS_MAX: f64 = 1e6;
/// Floor used when linearizing `h^alpha` around values near zero.
const LINEARIZATION_FLOOR: f64 = 1e-6;
/// Floor on `|1 - Theta S|` in the direction solve; where the coefficient
/// crosses zero the continuous equation degenerates and the unfloored
/// discrete solve produces unusably large local values.
const TIME_COEFF_FLOOR: f64 = 0.05;
/// Stay this fraction inside the consumption-feasibility cap so iterates
/// approach the boundary geometrically instead of locking onto it.
const CAP_BACKOFF: f64 = 0.9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AscentError {
    #[error("Phi must lie strictly inside (0, 1) (got {0})")]
    PhiOutOfRange(f64),
    #[error("Theta must be nonnegative (got {0})")]
    ThetaNegative(f64),
    #[error("theta grid must be nonempty and sorted ascending")]
    BadThetaGrid,
    #[error("direction fixed-point sweeps did not converge (last residual {residual:.3e})")]
    DirectionDiverged { residual: f64 },
    #[error(transparent)]
    Pde(#[from] PdeError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Knobs of the ascent loop.
#[derive(Debug, Clone, PartialEq)]
pub struct AscentConfig {
    /// Trade-off weight `Theta >= 0` on terminal capital.
    pub theta: f64,
    /// Stop once `|J_{n+1} - J_n|` drops below this; `None` resolves to
    /// `1e-4 * |J_0|` at run time.
    pub stop_tol: Option<f64>,
    pub max_iterations: usize,
    /// Hard ceiling of the line-search bracket `[0, delta_max]`. The bracket
    /// actually searched is additionally capped by feasibility and by
    /// `step_fraction` (see below), so the update stays in the small-step
    /// regime where ascent along the direction PDE is provably monotone.
    pub delta_max: f64,
    /// Per-iteration trust cap: the bracket is sized so the recovered
    /// consumption moves by at most this fraction of its current scale.
    pub step_fraction: f64,
    /// Relative step-length tolerance of the golden-section refinement.
    pub line_search_tol: f64,
    /// Fixed-point tolerance for the direction solve at `alpha < 1`.
    pub direction_tol: f64,
    pub max_direction_sweeps: usize,
    /// The default starting iterate consumes this share of initial
    /// production, uniformly in time.
    pub initial_consumption_share: f64,
}

impl Default for AscentConfig {
    fn default() -> Self {
        AscentConfig {
            theta: 0.0,
            stop_tol: None,
            max_iterations: 50,
            delta_max: 1e3,
            step_fraction: 0.15,
            line_search_tol: 1e-4,
            direction_tol: 1e-9,
            max_direction_sweeps: 30,
            initial_consumption_share: 0.9,
        }
    }
}

impl AscentConfig {
    pub fn with_theta(theta: f64) -> Self {
        AscentConfig {
            theta,
            ..AscentConfig::default()
        }
    }
}

/// Maps the convex-combination weight `Phi` in (0, 1) to the terminal-capital
/// weight `Theta = Phi / (1 - Phi)` of the normalized objective.
pub fn phi_to_theta(phi: f64) -> Result<f64, AscentError> {
    if !(phi > 0.0 && phi < 1.0) {
        return Err(AscentError::PhiOutOfRange(phi));
    }
    Ok(phi / (1.0 - phi))
}

/// A scalarized objective value together with where it came from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveEval {
    pub value: f64,
    pub criteria: CriterionPair,
    pub recovery: RecoveryDiagnostics,
}

/// `J_Theta(K) = J1(recovered C) + Theta * J2(K)`. Feasibility clips met
/// while recovering consumption are reported alongside the value.
pub fn scalarized_objective(
    capital: &Field,
    theta: f64,
    spec: &ModelSpec,
    grids: &Grids,
    scheme: &SchemeConfig,
) -> ObjectiveEval {
    let (consumption, recovery) = consumption_from_capital(capital, spec, grids, scheme);
    let criteria = evaluate_criteria(capital, &consumption, spec, grids);
    ObjectiveEval {
        value: criteria.j1 + theta * criteria.j2,
        criteria,
        recovery,
    }
}

/// First variation of the recovered consumption along `h`, row `j` holding
/// the interval `t_j -> t_{j+1}` (last row replicated). Exact at `alpha = 1`.
fn consumption_increment(
    capital: &Field,
    direction: &Field,
    spec: &ModelSpec,
    grids: &Grids,
    scheme: &SchemeConfig,
) -> Vec<f64> {
    let op = SpatialOperator::new(&spec.diffusivity, grids);
    let (nx, nt, dt) = (grids.nx, grids.nt, grids.dt);
    let (a, alpha, delta) = (spec.productivity, spec.alpha, spec.delta_k);
    let mut out = vec![0.0; (nt + 1) * nx];
    let mut lbuf = vec![0.0; nx];
    for j in 0..nt {
        let lv = match scheme.stepper {
            Stepper::ExplicitEuler => j,
            Stepper::ImplicitEuler => j + 1,
        };
        let hl = direction.row(lv);
        op.apply(hl, &mut lbuf);
        for i in 0..nx {
            let dhdt = (direction.at(j + 1, i) - direction.at(j, i)) / dt;
            let react = if alpha == 1.0 {
                a * hl[i]
            } else {
                alpha * a * capital.at(lv, i).powf(alpha - 1.0) * hl[i]
            };
            out[j * nx + i] = -dhdt + lbuf[i] + react - delta * hl[i];
        }
    }
    let (head, tail) = out.split_at_mut(nt * nx);
    tail.copy_from_slice(&head[(nt - 1) * nx..]);
    out
}

/// Directional derivative of the substituted objective along a feasible
/// perturbation `h` with `h(., 0) = 0`:
/// `∫∫ U'(C) (-h_t + div(d grad h) + alpha A K^{alpha-1} h - delta_K h) e^{-rho t} + Theta ∫ h(x,T)`,
/// evaluated with the module's own stencils and quadrature so it is the exact
/// derivative of the discrete objective away from feasibility clips.
pub fn directional_derivative(
    capital: &Field,
    direction: &Field,
    theta: f64,
    spec: &ModelSpec,
    grids: &Grids,
    scheme: &SchemeConfig,
) -> f64 {
    let (consumption, _) = consumption_from_capital(capital, spec, grids, scheme);
    let psi = consumption_increment(capital, direction, spec, grids, scheme);
    let nx = grids.nx;
    let bulk = discounted_quadrature(grids, spec.rho, |j, i| {
        spec.utility.marginal(consumption.at(j, i)) * psi[j * nx + i]
    });
    bulk + theta * integrate_space(direction.terminal_row(), grids)
}

/// Solves the direction PDE forward from `h(., 0) = 0`.
///
/// The `-Theta h_t` part of the source is kept implicit, entering the time
/// coefficient as `1 - Theta * S` with `S = e^{rho t}/U'(C_n)`; for weights
/// large enough that `Theta * S` crosses 1 the continuous equation loses
/// parabolicity and the implicit solve acts as a stabilized surrogate, which
/// the monotone line search is free to reject. At `alpha = 1` the equation is
/// linear and one sweep is exact; otherwise `h^alpha` (odd-extended to
/// negative arguments) is linearized around the previous sweep.
pub fn ascent_direction(
    capital: &Field,
    theta: f64,
    spec: &ModelSpec,
    grids: &Grids,
    scheme: &SchemeConfig,
    config: &AscentConfig,
) -> Result<Field, AscentError> {
    if theta < 0.0 {
        return Err(AscentError::ThetaNegative(theta));
    }
    let (consumption, _) = consumption_from_capital(capital, spec, grids, scheme);
    let op = SpatialOperator::new(&spec.diffusivity, grids);
    let (nx, nt, dt) = (grids.nx, grids.nt, grids.dt);
    let (a, alpha, delta) = (spec.productivity, spec.alpha, spec.delta_k);

    // S at the interval-start time level, matching the quadrature pairing
    // that makes U'(C) * psi * e^{-rho t} collapse to (-Theta h_t + 1).
    let source = |j: usize, i: usize| -> f64 {
        (spec.rho * grids.t[j]).exp() / spec.utility.marginal(consumption.at(j, i))
    };

    let odd_pow = |h: f64| -> f64 { h.signum() * h.abs().powf(alpha) };
    let odd_pow_slope =
        |h: f64| -> f64 { alpha * h.abs().max(LINEARIZATION_FLOOR).powf(alpha - 1.0) };

    let mut values = vec![0.0; (nt + 1) * nx];
    let mut residual = f64::INFINITY;
    let max_sweeps = if alpha == 1.0 {
        1
    } else {
        config.max_direction_sweeps
    };
    for _sweep in 0..max_sweeps {
        let previous = values.clone();
        let mut extra = vec![0.0; nx];
        let mut rhs = vec![0.0; nx];
        let mut weights = vec![1.0; nx];
        for j in 0..nt {
            for i in 0..nx {
                let s = source(j, i);
                let raw = 1.0 - theta * s;
                // Where the time coefficient turns negative the equation is
                // anti-diffusive; keep the well-posed reaction part and
                // decouple that node from diffusion. Near zero, floor the
                // coefficient so local step scales stay bounded.
                let c0 = if raw >= 0.0 {
                    raw.max(TIME_COEFF_FLOOR) / dt
                } else {
                    raw.min(-TIME_COEFF_FLOOR) / dt
                };
                weights[i] = if raw >= 0.0 { 1.0 } else { 0.0 };
                let (lin_const, lin_slope) = if alpha == 1.0 {
                    (0.0, a)
                } else {
                    let href = previous[(j + 1) * nx + i];
                    let slope = odd_pow_slope(href);
                    (a * (odd_pow(href) - slope * href), a * slope)
                };
                extra[i] = c0 + delta - lin_slope;
                rhs[i] = c0 * values[j * nx + i] + lin_const - s;
            }
            op.solve_shifted_weighted(&extra, Some(&weights), &mut rhs)
                .ok_or(PdeError::ZeroPivot { step: j })?;
            values[(j + 1) * nx..(j + 2) * nx].copy_from_slice(&rhs);
        }
        if alpha == 1.0 {
            residual = 0.0;
            break;
        }
        residual = values
            .iter()
            .zip(&previous)
            .fold(0.0_f64, |m, (v, p)| m.max((v - p).abs()));
        let scale = 1.0 + values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if residual <= config.direction_tol * scale {
            residual = 0.0;
            break;
        }
    }
    if alpha < 1.0 && residual > 0.0 {
        return Err(AscentError::DirectionDiverged { residual });
    }
    Ok(Field::new_unchecked(FieldRole::Direction, nx, nt, values))
}

/// Golden-section search for the maximum of a unimodal function on `[lo, hi]`.
/// Exposed so synthetic profiles can drive it directly in tests.
pub fn golden_section_max<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, xtol: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let (mut a, mut b) = (lo, hi);
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while b - a > xtol {
        if f1 >= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2);
        }
    }
    let mid = 0.5 * (a + b);
    let fm = f(mid);
    if fm >= f1 && fm >= f2 {
        (mid, fm)
    } else if f1 >= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Audit-grid pass followed by golden-section refinement around the best grid
/// point. The returned value is never below any audited grid value.
fn maximize_on_bracket<F: Fn(f64) -> f64>(f: &F, hi: f64, xtol: f64) -> (f64, f64) {
    const GRID: usize = 11;
    let mut best = (0.0, f(0.0));
    for k in 1..GRID {
        let x = hi * k as f64 / (GRID - 1) as f64;
        let v = f(x);
        if v > best.1 {
            best = (x, v);
        }
    }
    let step = hi / (GRID - 1) as f64;
    let lo = (best.0 - step).max(0.0);
    let up = (best.0 + step).min(hi);
    let refined = golden_section_max(f, lo, up, xtol);
    if refined.1 > best.1 {
        refined
    } else {
        best
    }
}

/// Outcome of a one-dimensional step-length search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineSearchOutcome {
    pub delta: f64,
    pub objective: f64,
    pub criteria: CriterionPair,
    /// Upper end of the bracket that was searched.
    pub bracket: f64,
    /// No positive step improved the objective.
    pub stalled: bool,
}

/// Zeroes the direction where it pushes into the active capital bound
/// (`K = 0` with `h < 0`). Returns `None` when nothing had to change.
fn project_off_capital_bound(capital: &Field, direction: &Field) -> Option<Field> {
    let mut changed = false;
    let mut projected = direction.clone();
    let nt = direction.nt();
    let nx = direction.nx();
    for j in 1..=nt {
        for i in 0..nx {
            if capital.at(j, i) <= 1e-12 && projected.at(j, i) < 0.0 {
                projected.set(j, i, 0.0);
                changed = true;
            }
        }
    }
    changed.then_some(projected)
}

/// Builds `K + delta h` as a capital field, clamping away negative roundoff.
fn capital_after_step(capital: &Field, delta: f64, direction: &Field) -> Field {
    let mut stepped = capital.linear_combination(1.0, direction, delta, FieldRole::Capital);
    let nt = stepped.nt();
    for j in 0..=nt {
        for v in stepped.row_mut(j) {
            if *v < 0.0 {
                *v = 0.0;
            }
        }
    }
    stepped
}

/// Generic engine: maximizes `value_of(criteria(K + delta h))` over the
/// feasibility-capped bracket. Shared by the scalarized and penalized solvers.
pub(crate) fn line_search_with<F: Fn(CriterionPair) -> f64>(
    capital: &Field,
    direction: &Field,
    spec: &ModelSpec,
    grids: &Grids,
    scheme: &SchemeConfig,
    config: &AscentConfig,
    value_of: &F,
) -> LineSearchOutcome {
    let (cons0, _) = consumption_from_capital(capital, spec, grids, scheme);
    let psi = consumption_increment(capital, direction, spec, grids, scheme);
    let nx = grids.nx;

    // Largest delta keeping the recovered consumption nonnegative. Capital
    // nonnegativity is handled by the clamp projection in the update itself,
    // which keeps single boundary nodes from freezing the whole step.
    let mut cap = f64::INFINITY;
    for j in 0..grids.nt {
        for i in 0..nx {
            let p = psi[j * nx + i];
            if p < -1e-300 {
                cap = cap.min(cons0.at(j, i).max(0.0) / -p);
            }
        }
    }

    let evaluate = |delta: f64| -> (f64, CriterionPair) {
        let stepped = capital_after_step(capital, delta, direction);
        let (c, _) = consumption_from_capital(&stepped, spec, grids, scheme);
        let crit = evaluate_criteria(&stepped, &c, spec, grids);
        (value_of(crit), crit)
    };
    let (base_value, base_criteria) = evaluate(0.0);
    if cap <= 0.0 {
        return LineSearchOutcome {
            delta: 0.0,
            objective: base_value,
            criteria: base_criteria,
            bracket: 0.0,
            stalled: true,
        };
    }

    // Trust cap: bound the consumption move per iteration so one line search
    // cannot leap to the feasibility boundary in a single step.
    let cons_scale = 1.0 + cons0.values().iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let psi_scale = psi.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let trust = if psi_scale > 0.0 {
        config.step_fraction * cons_scale / psi_scale
    } else {
        f64::INFINITY
    };

    let bracket = config
        .delta_max
        .min(CAP_BACKOFF * cap)
        .min(trust)
        .min(DELTA_ABS_MAX);
    let f = |d: f64| evaluate(d).0;
    let (delta, value) = maximize_on_bracket(&f, bracket, config.line_search_tol * bracket);

    if value <= base_value || delta == 0.0 {
        return LineSearchOutcome {
            delta: 0.0,
            objective: base_value,
            criteria: base_criteria,
            bracket,
            stalled: true,
        };
    }
    let (objective, criteria) = evaluate(delta);
    LineSearchOutcome {
        delta,
        objective,
        criteria,
        bracket,
        stalled: false,
    }
}

/// Step-length search for the scalarized objective along `h`.
pub fn line_search(
    capital: &Field,
    direction: &Field,
    theta: f64,
    spec: &ModelSpec,
    grids: &Grids,
    scheme: &SchemeConfig,
    config: &AscentConfig,
) -> LineSearchOutcome {
    let value_of = move |c: CriterionPair| c.j1 + theta * c.j2;
    line_search_with(capital, direction, spec, grids, scheme, config, &value_of)
}

/// Why the ascent loop stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// `|J_{n+1} - J_n|` fell below the stopping tolerance.
    Converged,
    /// No feasible step improved the objective.
    Stalled,
    MaxIterations,
}

impl Termination {
    pub fn as_str(&self) -> &'static str {
        match self {
            Termination::Converged => "converged",
            Termination::Stalled => "stalled",
            Termination::MaxIterations => "max_iterations",
        }
    }
}

/// One accepted iterate of the ascent loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub iter: usize,
    pub objective: f64,
    pub delta: f64,
    pub criteria: CriterionPair,
}

/// Output of [`solve_model_I`].
#[derive(Debug, Clone)]
pub struct AscentResult {
    pub capital: Field,
    pub consumption: Field,
    pub criteria: CriterionPair,
    /// Scalarized objective at the final iterate.
    pub objective: f64,
    /// `log[0]` is the starting iterate; entries are nondecreasing in `J`.
    pub log: Vec<IterationRecord>,
    pub termination: Termination,
}

/// The default starting iterate: simulate the PDE under the spatially
/// heterogeneous, time-constant plan `C(x, t) = share * A * K0(x)^alpha`.
pub fn initial_iterate(
    spec: &ModelSpec,
    grids: &Grids,
    scheme: &SchemeConfig,
    share: f64,
) -> Result<Field, PdeError> {
    let nx = grids.nx;
    let mut values = vec![0.0; (grids.nt + 1) * nx];
    for i in 0..nx {
        let k0 = spec.initial_capital.eval(grids.x[i]).max(0.0);
        let c = share * spec.productivity * k0.powf(spec.alpha);
        for j in 0..=grids.nt {
            values[j * nx + i] = c;
        }
    }
    let consumption = Field::new_unchecked(FieldRole::Consumption, nx, grids.nt, values);
    let (capital, _) = simulate_capital(&consumption, spec, grids, scheme)?;
    Ok(capital)
}

/// Core ascent loop shared by the scalarized and penalty solvers. The
/// direction weight may depend on the current criteria, which is how the
/// penalized objective plugs in its effective Theta.
pub(crate) fn run_ascent<V, W>(
    mut capital: Field,
    spec: &ModelSpec,
    grids: &Grids,
    scheme: &SchemeConfig,
    config: &AscentConfig,
    value_of: V,
    direction_theta: W,
) -> Result<(Field, Vec<IterationRecord>, Termination), AscentError>
where
    V: Fn(CriterionPair) -> f64,
    W: Fn(CriterionPair) -> f64,
{
    let eval = |k: &Field| -> (f64, CriterionPair) {
        let (c, _) = consumption_from_capital(k, spec, grids, scheme);
        let crit = evaluate_criteria(k, &c, spec, grids);
        (value_of(crit), crit)
    };
    let (mut value, mut criteria) = eval(&capital);
    let stop_tol = config.stop_tol.unwrap_or(1e-4 * value.abs().max(1e-12));
    let mut log = vec![IterationRecord {
        iter: 0,
        objective: value,
        delta: 0.0,
        criteria,
    }];
    let mut termination = Termination::MaxIterations;
    for n in 1..=config.max_iterations {
        let theta_n = direction_theta(criteria).max(0.0);
        let direction = ascent_direction(&capital, theta_n, spec, grids, scheme, config)?;
        let mut outcome =
            line_search_with(&capital, &direction, spec, grids, scheme, config, &value_of);
        if outcome.stalled {
            // The raw direction promises consumption gains that exhausted
            // capital cannot deliver. Retry once with the direction projected
            // off the active capital bound before declaring a stall.
            if let Some(projected) = project_off_capital_bound(&capital, &direction) {
                outcome = line_search_with(
                    &capital, &projected, spec, grids, scheme, config, &value_of,
                );
                if !outcome.stalled {
                    capital = capital_after_step(&capital, outcome.delta, &projected);
                    let gain = outcome.objective - value;
                    value = outcome.objective;
                    criteria = outcome.criteria;
                    log.push(IterationRecord {
                        iter: n,
                        objective: value,
                        delta: outcome.delta,
                        criteria,
                    });
                    if gain.abs() < stop_tol {
                        termination = Termination::Converged;
                        break;
                    }
                    continue;
                }
            }
            termination = Termination::Stalled;
            break;
        }
        capital = capital_after_step(&capital, outcome.delta, &direction);
        let gain = outcome.objective - value;
        value = outcome.objective;
        criteria = outcome.criteria;
        log.push(IterationRecord {
            iter: n,
            objective: value,
            delta: outcome.delta,
            criteria,
        });
        if gain.abs() < stop_tol {
            termination = Termination::Converged;
            break;
        }
    }
    Ok((capital, log, termination))
}

/// Model I: maximize `J1 + Theta J2` by iterating direction solve, line
/// search and update until the objective gain drops below the stop rule.
#[allow(non_snake_case)]
pub fn solve_model_I(
    spec: &ModelSpec,
    grids: &Grids,
    scheme: &SchemeConfig,
    config: &AscentConfig,
) -> Result<AscentResult, AscentError> {
    let spec = validate_spec(spec.clone())?;
    if config.theta < 0.0 {
        return Err(AscentError::ThetaNegative(config.theta));
    }
    let theta = config.theta;
    let start = initial_iterate(&spec, grids, scheme, config.initial_consumption_share)?;
    let (capital, log, termination) = run_ascent(
        start,
        &spec,
        grids,
        scheme,
        config,
        |c| c.j1 + theta * c.j2,
        |_| theta,
    )?;
    let (consumption, _) = consumption_from_capital(&capital, &spec, grids, scheme);
    let criteria = evaluate_criteria(&capital, &consumption, &spec, grids);
    Ok(AscentResult {
        capital,
        consumption,
        criteria,
        objective: criteria.j1 + theta * criteria.j2,
        log,
        termination,
    })
}

/// One traced point of the frontier sweep.
#[derive(Debug, Clone)]
pub struct FrontierPoint {
    pub theta: f64,
    pub criteria: Option<CriterionPair>,
    pub iterations: usize,
    pub termination: Option<Termination>,
    /// Pareto-dominated by another returned point (flagged, not dropped).
    pub dominated: bool,
    pub error: Option<String>,
}

/// Criterion pairs achieved along a Theta sweep, in ascending Theta order.
#[derive(Debug, Clone)]
pub struct ParetoFrontier {
    pub points: Vec<FrontierPoint>,
}

impl ParetoFrontier {
    pub fn undominated(&self) -> impl Iterator<Item = &FrontierPoint> {
        self.points
            .iter()
            .filter(|p| !p.dominated && p.criteria.is_some())
    }
}

/// How many cross-seeding rounds a frontier sweep may run.
const FRONTIER_SEED_ROUNDS: usize = 8;

/// Solves the scalarized problem for every weight in `theta_grid` (ascending)
/// and flags dominated outcomes. Per-weight failures are recorded on the
/// point rather than aborting the sweep.
///
/// Because the ascent is a first-order method with feasibility caps, runs
/// started from the common default iterate can end at inconsistently
/// converged points. After the first pass, any weight whose objective would
/// score higher at another weight's solution restarts its ascent from that
/// solution, until no such improvement remains. At that fixed point every
/// returned point scores at least as high as every other under its own
/// weight, which forces `J2` nondecreasing and `J1` nonincreasing in `Theta`
/// and makes the piecewise-linear frontier concave.
pub fn trace_pareto_frontier(
    spec: &ModelSpec,
    grids: &Grids,
    scheme: &SchemeConfig,
    theta_grid: &[f64],
    base: &AscentConfig,
) -> Result<ParetoFrontier, AscentError> {
    if theta_grid.is_empty() || theta_grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(AscentError::BadThetaGrid);
    }
    let spec = validate_spec(spec.clone())?;

    struct Solved {
        theta: f64,
        capital: Field,
        criteria: CriterionPair,
        iterations: usize,
        termination: Termination,
    }
    let mut solved: Vec<Result<Solved, String>> = Vec::with_capacity(theta_grid.len());
    let start = initial_iterate(&spec, grids, scheme, base.initial_consumption_share);
    for &theta in theta_grid {
        let config = AscentConfig {
            theta,
            ..base.clone()
        };
        let run = start.as_ref().map_err(|e| e.to_string()).and_then(|k0| {
            run_ascent(
                k0.clone(),
                &spec,
                grids,
                scheme,
                &config,
                |c| c.j1 + theta * c.j2,
                |_| theta,
            )
            .map_err(|e| e.to_string())
        });
        solved.push(match run {
            Ok((capital, log, termination)) => {
                let eval = scalarized_objective(&capital, theta, &spec, grids, scheme);
                Ok(Solved {
                    theta,
                    capital,
                    criteria: eval.criteria,
                    iterations: log.len() - 1,
                    termination,
                })
            }
            Err(e) => Err(e),
        });
    }

    // Cross-seeding rounds.
    for _ in 0..FRONTIER_SEED_ROUNDS {
        let snapshot: Vec<Option<(f64, CriterionPair)>> = solved
            .iter()
            .map(|s| s.as_ref().ok().map(|p| (p.theta, p.criteria)))
            .collect();
        let mut improved = false;
        for k in 0..solved.len() {
            let Ok(point) = &solved[k] else { continue };
            let theta = point.theta;
            let score = |c: &CriterionPair| c.j1 + theta * c.j2;
            let own = score(&point.criteria);
            let tol = 1e-10 * own.abs().max(1.0);
            let better = snapshot
                .iter()
                .enumerate()
                .filter_map(|(m, s)| s.as_ref().map(|(_, c)| (m, score(c))))
                .filter(|&(m, v)| m != k && v > own + tol)
                .max_by(|a, b| a.1.total_cmp(&b.1));
            let Some((m, _)) = better else { continue };
            let Ok(seed) = &solved[m] else { continue };
            let config = AscentConfig {
                theta,
                ..base.clone()
            };
            if let Ok((capital, log, termination)) = run_ascent(
                seed.capital.clone(),
                &spec,
                grids,
                scheme,
                &config,
                |c| c.j1 + theta * c.j2,
                |_| theta,
            ) {
                let eval = scalarized_objective(&capital, theta, &spec, grids, scheme);
                let extra_iters = log.len() - 1;
                if let Ok(point) = &mut solved[k] {
                    point.capital = capital;
                    point.criteria = eval.criteria;
                    point.iterations += extra_iters;
                    point.termination = termination;
                }
                improved = true;
            }
        }
        if !improved {
            break;
        }
    }

    let mut points: Vec<FrontierPoint> = solved
        .into_iter()
        .zip(theta_grid)
        .map(|(s, &theta)| match s {
            Ok(p) => FrontierPoint {
                theta,
                criteria: Some(p.criteria),
                iterations: p.iterations,
                termination: Some(p.termination),
                dominated: false,
                error: None,
            },
            Err(e) => FrontierPoint {
                theta,
                criteria: None,
                iterations: 0,
                termination: None,
                dominated: false,
                error: Some(e),
            },
        })
        .collect();

    let pairs: Vec<(usize, CriterionPair)> = points
        .iter()
        .enumerate()
        .filter_map(|(i, p)| p.criteria.map(|c| (i, c)))
        .collect();
    for &(i, ci) in &pairs {
        let dominated = pairs.iter().any(|&(k, ck)| k != i && ck.dominates(&ci));
        points[i].dominated = dominated;
    }
    Ok(ParetoFrontier { points })
}
