//! Finite-difference machinery for the capital diffusion PDE.
//!
//! Space uses the conservative second-order stencil with half-node
//! diffusivities; the zero-flux (Neumann) boundary is imposed by mirror ghost
//! values, which keeps the trapezoid-weighted sum of the diffusion operator
//! exactly zero. Time stepping is first-order Euler, implicit by default.
//!
//! The consumption recovery in [`consumption_from_capital`] applies the exact
//! discrete stencils of the stepper, so simulating a recovered consumption
//! reproduces the capital field bit-for-bit up to the nonnegativity clamp.

use thiserror::Error;

use crate::model::{
    integrate_space, CriterionPair, DiffusionProfile, Field, FieldRole, Grids, ModelError,
    ModelSpec,
};

/// Hard cap on |K| before a run is declared unstable.
const OVERFLOW_GUARD: f64 = 1e12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PdeError {
    #[error("explicit stepper violates the stability bound dt <= dx^2/(2 max d): dt={dt:.6e}, bound={bound:.6e}")]
    StabilityViolated { dt: f64, bound: f64 },
    #[error("solution exceeded the overflow guard at time step {step} (|value|={magnitude:.3e}); the CFL bound dt <= dx^2/(2 max d) = {bound:.6e} is the relevant limit for the explicit stepper")]
    Unstable {
        step: usize,
        magnitude: f64,
        bound: f64,
    },
    #[error("implicit reaction iteration stalled at time step {step} (residual {residual:.3e})")]
    InnerIterationStall { step: usize, residual: f64 },
    #[error("singular linearization: capital is {value:.3e} at node (t index {j}, x index {i}) with alpha < 1")]
    SingularLinearization { j: usize, i: usize, value: f64 },
    #[error("tridiagonal solve hit a zero pivot at time step {step}")]
    ZeroPivot { step: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Time stepper selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stepper {
    ExplicitEuler,
    ImplicitEuler,
}

/// How a PDE solve is advanced in time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeConfig {
    pub stepper: Stepper,
    /// Convergence tolerance of the inner reaction iteration (alpha < 1).
    pub inner_tol: f64,
    pub max_inner_iterations: usize,
}

impl Default for SchemeConfig {
    fn default() -> Self {
        SchemeConfig {
            stepper: Stepper::ImplicitEuler,
            inner_tol: 1e-11,
            max_inner_iterations: 60,
        }
    }
}

/// Clamp events observed while integrating capital forward.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SimDiagnostics {
    /// Nodes where a negative intermediate capital value was clamped to 0.
    pub clamp_count: usize,
    /// Largest magnitude clamped away.
    pub max_clamp: f64,
}

/// Clip events observed while recovering consumption from capital.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RecoveryDiagnostics {
    /// Nodes where the recovered consumption was negative and clipped to 0.
    pub clip_count: usize,
    /// Largest clipped magnitude; this measures feasibility violation of the
    /// constraint `-dK/dt + div(d grad K) + A K^alpha - delta_K K >= 0`.
    pub max_clip: f64,
}

/// Conservative one-dimensional diffusion operator `div(d(x) grad .)`.
pub(crate) struct SpatialOperator {
    /// Half-node diffusivities `d_{i+1/2}`, length `nx - 1`.
    half: Vec<f64>,
    inv_dx2: f64,
    nx: usize,
}

impl SpatialOperator {
    pub(crate) fn new(diffusivity: &DiffusionProfile, grids: &Grids) -> SpatialOperator {
        let half = (0..grids.nx - 1)
            .map(|i| diffusivity.eval(0.5 * (grids.x[i] + grids.x[i + 1])))
            .collect();
        SpatialOperator {
            half,
            inv_dx2: 1.0 / (grids.dx * grids.dx),
            nx: grids.nx,
        }
    }

    /// `out = L row`. Boundary rows carry the factor 2 of the half-width
    /// boundary cells (mirror ghost), which makes the trapezoid-weighted sum
    /// of `out` vanish identically.
    pub(crate) fn apply(&self, row: &[f64], out: &mut [f64]) {
        let n = self.nx;
        let h = &self.half;
        out[0] = 2.0 * h[0] * (row[1] - row[0]) * self.inv_dx2;
        for i in 1..n - 1 {
            out[i] =
                (h[i] * (row[i + 1] - row[i]) - h[i - 1] * (row[i] - row[i - 1])) * self.inv_dx2;
        }
        out[n - 1] = 2.0 * h[n - 2] * (row[n - 2] - row[n - 1]) * self.inv_dx2;
    }

    /// Solves `(diag(extra) - L) u = rhs` in place by the Thomas algorithm.
    /// `rhs` holds the solution on return. Fails only on a vanishing pivot.
    pub(crate) fn solve_shifted(&self, extra: &[f64], rhs: &mut [f64]) -> Option<()> {
        self.solve_shifted_weighted(extra, None, rhs)
    }

    /// As [`Self::solve_shifted`], but row `i` of `L` is scaled by
    /// `weights[i]`; a zero weight decouples that node from diffusion.
    pub(crate) fn solve_shifted_weighted(
        &self,
        extra: &[f64],
        weights: Option<&[f64]>,
        rhs: &mut [f64],
    ) -> Option<()> {
        let n = self.nx;
        let h = &self.half;
        let c = self.inv_dx2;
        let w = |i: usize| -> f64 { weights.map_or(1.0, |w| w[i]) };
        // Row i of (diag(extra) - W L): sub, diag, sup.
        let sub = |i: usize| -> f64 {
            w(i) * if i == n - 1 {
                -2.0 * h[n - 2] * c
            } else {
                -h[i - 1] * c
            }
        };
        let sup = |i: usize| -> f64 {
            w(i) * if i == 0 { -2.0 * h[0] * c } else { -h[i] * c }
        };
        let diag = |i: usize| -> f64 {
            let l_ii = if i == 0 {
                -2.0 * h[0] * c
            } else if i == n - 1 {
                -2.0 * h[n - 2] * c
            } else {
                -(h[i - 1] + h[i]) * c
            };
            extra[i] - w(i) * l_ii
        };

        let mut scratch = vec![0.0; n];
        let mut piv = diag(0);
        if piv.abs() < 1e-300 {
            return None;
        }
        scratch[0] = sup(0) / piv;
        rhs[0] /= piv;
        for i in 1..n {
            piv = diag(i) - sub(i) * scratch[i - 1];
            if piv.abs() < 1e-300 {
                return None;
            }
            if i < n - 1 {
                scratch[i] = sup(i) / piv;
            }
            rhs[i] = (rhs[i] - sub(i) * rhs[i - 1]) / piv;
        }
        for i in (0..n - 1).rev() {
            rhs[i] -= scratch[i] * rhs[i + 1];
        }
        Some(())
    }
}

/// Applies the conservative diffusion stencil to one spatial row.
pub fn diffusion_apply(row: &[f64], diffusivity: &DiffusionProfile, grids: &Grids) -> Vec<f64> {
    assert_eq!(row.len(), grids.nx);
    let op = SpatialOperator::new(diffusivity, grids);
    let mut out = vec![0.0; grids.nx];
    op.apply(row, &mut out);
    out
}

fn pow_alpha(k: f64, alpha: f64) -> f64 {
    if alpha == 1.0 {
        k
    } else {
        k.max(0.0).powf(alpha)
    }
}

/// Integrates the capital PDE forward from `K(., 0) = K0` under the given
/// consumption plan. Consumption row `j` acts on the step `t_j -> t_{j+1}`.
/// Negative intermediate values are clamped to zero and reported.
pub fn simulate_capital(
    consumption: &Field,
    spec: &ModelSpec,
    grids: &Grids,
    scheme: &SchemeConfig,
) -> Result<(Field, SimDiagnostics), PdeError> {
    if !consumption.matches(grids) {
        return Err(ModelError::DimensionMismatch {
            got: consumption.values().len(),
            expected: (grids.nt + 1) * grids.nx,
        }
        .into());
    }
    let bound = grids.explicit_stability_bound(&spec.diffusivity);
    if scheme.stepper == Stepper::ExplicitEuler && grids.dt > bound {
        return Err(PdeError::StabilityViolated { dt: grids.dt, bound });
    }

    let op = SpatialOperator::new(&spec.diffusivity, grids);
    let (nx, nt, dt) = (grids.nx, grids.nt, grids.dt);
    let (a, alpha, delta) = (spec.productivity, spec.alpha, spec.delta_k);
    let mut diag = SimDiagnostics::default();

    let mut values = vec![0.0; (nt + 1) * nx];
    for i in 0..nx {
        let k0 = spec.initial_capital.eval(grids.x[i]);
        if k0 < 0.0 {
            diag.clamp_count += 1;
            diag.max_clamp = diag.max_clamp.max(-k0);
        }
        values[i] = k0.max(0.0);
    }

    let mut lbuf = vec![0.0; nx];
    let mut next = vec![0.0; nx];
    for j in 0..nt {
        let (done, rest) = values.split_at_mut((j + 1) * nx);
        let cur = &done[j * nx..];
        let cons = consumption.row(j);
        match scheme.stepper {
            Stepper::ExplicitEuler => {
                op.apply(cur, &mut lbuf);
                for i in 0..nx {
                    next[i] = cur[i]
                        + dt * (lbuf[i] + a * pow_alpha(cur[i], alpha)
                            - delta * cur[i]
                            - cons[i]);
                }
            }
            Stepper::ImplicitEuler => {
                if alpha == 1.0 {
                    let extra = vec![1.0 / dt - (a - delta); nx];
                    for i in 0..nx {
                        next[i] = cur[i] / dt - cons[i];
                    }
                    op.solve_shifted(&extra, &mut next)
                        .ok_or(PdeError::ZeroPivot { step: j })?;
                } else {
                    // Picard iteration lagging the nonlinear production term.
                    let extra = vec![1.0 / dt + delta; nx];
                    let mut guess: Vec<f64> = cur.to_vec();
                    let mut converged = false;
                    let mut residual = f64::INFINITY;
                    for _ in 0..scheme.max_inner_iterations {
                        for i in 0..nx {
                            next[i] = cur[i] / dt + a * pow_alpha(guess[i], alpha) - cons[i];
                        }
                        op.solve_shifted(&extra, &mut next)
                            .ok_or(PdeError::ZeroPivot { step: j })?;
                        residual = guess
                            .iter()
                            .zip(&next)
                            .fold(0.0_f64, |m, (g, n)| m.max((g - n).abs()));
                        guess.copy_from_slice(&next);
                        let scale = 1.0 + next.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
                        if residual <= scheme.inner_tol * scale {
                            converged = true;
                            break;
                        }
                    }
                    if !converged {
                        return Err(PdeError::InnerIterationStall { step: j, residual });
                    }
                }
            }
        }
        let mut magnitude = 0.0_f64;
        for i in 0..nx {
            let v = next[i];
            magnitude = magnitude.max(v.abs());
            if v < 0.0 {
                diag.clamp_count += 1;
                diag.max_clamp = diag.max_clamp.max(-v);
                next[i] = 0.0;
            }
        }
        if magnitude > OVERFLOW_GUARD {
            return Err(PdeError::Unstable {
                step: j,
                magnitude,
                bound,
            });
        }
        rest[..nx].copy_from_slice(&next);
    }

    Ok((
        Field::new_unchecked(FieldRole::Capital, nx, nt, values),
        diag,
    ))
}

/// Recovers the consumption plan implied by a capital trajectory through the
/// dynamic constraint, using the same difference stencils as the stepper.
/// Row `j` holds the interval value for `t_j -> t_{j+1}`; the final row
/// replicates the last interval. Negative values are clipped and reported.
pub fn consumption_from_capital(
    capital: &Field,
    spec: &ModelSpec,
    grids: &Grids,
    scheme: &SchemeConfig,
) -> (Field, RecoveryDiagnostics) {
    assert!(capital.matches(grids));
    let op = SpatialOperator::new(&spec.diffusivity, grids);
    let (nx, nt, dt) = (grids.nx, grids.nt, grids.dt);
    let (a, alpha, delta) = (spec.productivity, spec.alpha, spec.delta_k);
    let mut diag = RecoveryDiagnostics::default();

    let mut values = vec![0.0; (nt + 1) * nx];
    let mut lbuf = vec![0.0; nx];
    for j in 0..nt {
        // Spatial terms at the level the stepper treats implicitly.
        let lv = match scheme.stepper {
            Stepper::ExplicitEuler => j,
            Stepper::ImplicitEuler => j + 1,
        };
        let kl = capital.row(lv);
        op.apply(kl, &mut lbuf);
        for i in 0..nx {
            let dkdt = (capital.at(j + 1, i) - capital.at(j, i)) / dt;
            let c = -dkdt + lbuf[i] + a * pow_alpha(kl[i], alpha) - delta * kl[i];
            if c < 0.0 {
                diag.clip_count += 1;
                diag.max_clip = diag.max_clip.max(-c);
                values[j * nx + i] = 0.0;
            } else {
                values[j * nx + i] = c;
            }
        }
    }
    let (head, tail) = values.split_at_mut(nt * nx);
    tail.copy_from_slice(&head[(nt - 1) * nx..]);

    (
        Field::new_unchecked(FieldRole::Consumption, nx, nt, values),
        diag,
    )
}

/// Shared weighted quadrature: `sum_j w_j e^{-rho t_j} integrate_space(f(j))`.
pub(crate) fn discounted_quadrature<F: FnMut(usize, usize) -> f64>(
    grids: &Grids,
    rho: f64,
    mut node_value: F,
) -> f64 {
    let mut total = 0.0;
    let mut row = vec![0.0; grids.nx];
    for j in 0..=grids.nt {
        for (i, r) in row.iter_mut().enumerate() {
            *r = node_value(j, i);
        }
        let w = if j == 0 || j == grids.nt { 0.5 } else { 1.0 };
        total += w * integrate_space(&row, grids) * (-rho * grids.t[j]).exp();
    }
    total * grids.dt
}

/// Evaluates both criteria: `j1` integrates `U(C) e^{-rho t}` over space-time,
/// `j2` integrates terminal capital over space.
pub fn evaluate_criteria(
    capital: &Field,
    consumption: &Field,
    spec: &ModelSpec,
    grids: &Grids,
) -> CriterionPair {
    assert!(capital.matches(grids) && consumption.matches(grids));
    let j1 = discounted_quadrature(grids, spec.rho, |j, i| {
        spec.utility.value(consumption.at(j, i))
    });
    let j2 = integrate_space(capital.terminal_row(), grids);
    CriterionPair { j1, j2 }
}

/// Solves the backward adjoint PDE
/// `lambda_t = rho lambda - div(d grad lambda) - alpha A K^{alpha-1} lambda - delta_K lambda`
/// from the terminal condition `lambda(., T) = theta` under zero-flux
/// boundaries, with the same stencils as the forward solver.
pub fn solve_adjoint(
    capital: &Field,
    theta: f64,
    spec: &ModelSpec,
    grids: &Grids,
    scheme: &SchemeConfig,
) -> Result<Field, PdeError> {
    assert!(capital.matches(grids));
    let (nx, nt, dt) = (grids.nx, grids.nt, grids.dt);
    let (a, alpha, delta, rho) = (spec.productivity, spec.alpha, spec.delta_k, spec.rho);
    if alpha < 1.0 {
        for j in 0..=nt {
            for i in 0..nx {
                let k = capital.at(j, i);
                if k <= 0.0 {
                    return Err(PdeError::SingularLinearization { j, i, value: k });
                }
            }
        }
    }
    let op = SpatialOperator::new(&spec.diffusivity, grids);
    let mut values = vec![0.0; (nt + 1) * nx];
    values[nt * nx..].fill(theta);

    let reaction = |k: f64| -> f64 { alpha * a * k.powf(alpha - 1.0) + delta - rho };

    let mut lbuf = vec![0.0; nx];
    let mut cur = vec![0.0; nx];
    for j in (0..nt).rev() {
        let know = capital.row(j);
        match scheme.stepper {
            // "Explicit" when marching backward: spatial terms at level j+1.
            Stepper::ExplicitEuler => {
                let prev = &values[(j + 1) * nx..(j + 2) * nx];
                op.apply(prev, &mut lbuf);
                let kup = capital.row(j + 1);
                for i in 0..nx {
                    cur[i] = prev[i] + dt * (lbuf[i] + reaction(kup[i]) * prev[i]);
                }
            }
            Stepper::ImplicitEuler => {
                let prev = &values[(j + 1) * nx..(j + 2) * nx];
                let mut extra = vec![0.0; nx];
                for i in 0..nx {
                    extra[i] = 1.0 / dt - reaction(know[i]);
                    cur[i] = prev[i] / dt;
                }
                op.solve_shifted(&extra, &mut cur)
                    .ok_or(PdeError::ZeroPivot { step: j })?;
            }
        }
        values[j * nx..(j + 1) * nx].copy_from_slice(&cur);
    }
    Ok(Field::new_unchecked(FieldRole::Adjoint, nx, nt, values))
}

/// Sup-norm residuals of the optimality system for a candidate triple.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HamiltonianResiduals {
    /// State equation defect under the scheme's stencils.
    pub state: f64,
    /// Adjoint equation defect.
    pub adjoint: f64,
    /// Stationarity defect `|U'(C) - lambda|`.
    pub stationarity: f64,
    /// Zero-flux defect `|d * dK/dn|` and `|d * dlambda/dn|` at the ends.
    pub boundary_flux: f64,
    /// Terminal defect `|lambda(., T) - theta|`.
    pub terminal: f64,
}

/// Evaluates the residuals of the Hamiltonian system at the given fields.
/// Capital must be strictly positive where `alpha < 1`.
pub fn hamiltonian_residuals(
    capital: &Field,
    consumption: &Field,
    adjoint: &Field,
    theta: f64,
    spec: &ModelSpec,
    grids: &Grids,
    scheme: &SchemeConfig,
) -> HamiltonianResiduals {
    let op = SpatialOperator::new(&spec.diffusivity, grids);
    let (nx, nt, dt, dx) = (grids.nx, grids.nt, grids.dt, grids.dx);
    let (a, alpha, delta, rho) = (spec.productivity, spec.alpha, spec.delta_k, spec.rho);

    let mut state = 0.0_f64;
    let mut adj = 0.0_f64;
    let mut stat = 0.0_f64;
    let mut lbuf = vec![0.0; nx];
    for j in 0..nt {
        let lv = match scheme.stepper {
            Stepper::ExplicitEuler => j,
            Stepper::ImplicitEuler => j + 1,
        };
        let kl = capital.row(lv);
        op.apply(kl, &mut lbuf);
        for i in 0..nx {
            let dkdt = (capital.at(j + 1, i) - capital.at(j, i)) / dt;
            let rhs = lbuf[i] + a * pow_alpha(kl[i], alpha)
                - delta * kl[i]
                - consumption.at(j, i);
            state = state.max((dkdt - rhs).abs());
        }

        let lam = adjoint.row(j);
        op.apply(lam, &mut lbuf);
        let know = capital.row(j);
        for i in 0..nx {
            let dldt = (adjoint.at(j + 1, i) - adjoint.at(j, i)) / dt;
            let rhs = rho * lam[i]
                - lbuf[i]
                - alpha * a * know[i].powf(alpha - 1.0) * lam[i]
                - delta * lam[i];
            adj = adj.max((dldt - rhs).abs());
        }

        for i in 0..nx {
            stat = stat.max((spec.utility.marginal(consumption.at(j, i)) - adjoint.at(j, i)).abs());
        }
    }

    // One-sided second-order flux at both ends for both fields.
    let mut flux = 0.0_f64;
    let d_lo = spec.diffusivity.eval(grids.x[0]);
    let d_hi = spec.diffusivity.eval(grids.x[nx - 1]);
    for j in 0..=nt {
        for field in [capital, adjoint] {
            let r = field.row(j);
            let left = (-3.0 * r[0] + 4.0 * r[1] - r[2]) / (2.0 * dx);
            let right = (3.0 * r[nx - 1] - 4.0 * r[nx - 2] + r[nx - 3]) / (2.0 * dx);
            flux = flux.max((d_lo * left).abs()).max((d_hi * right).abs());
        }
    }

    let terminal = adjoint
        .terminal_row()
        .iter()
        .fold(0.0_f64, |m, v| m.max((v - theta).abs()));

    HamiltonianResiduals {
        state,
        adjoint: adj,
        stationarity: stat,
        boundary_flux: flux,
        terminal,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{InitialCapital, Omega, UtilitySpec};

    fn baseline() -> ModelSpec {
        ModelSpec {
            productivity: 1.0,
            alpha: 1.0,
            delta_k: 0.01,
            rho: 0.03,
            horizon: 1.0,
            omega: Omega { x_lo: 0.0, x_hi: 1.0 },
            diffusivity: DiffusionProfile::Quadratic { a: 1.0, b: 0.5 },
            initial_capital: InitialCapital::Affine {
                intercept: 1.0,
                slope: 1.0,
            },
            utility: UtilitySpec::PowerShifted { gamma: 2.0 / 3.0 },
        }
    }

    fn grids(nx: usize, nt: usize) -> Grids {
        Grids::new(&Omega { x_lo: 0.0, x_hi: 1.0 }, 1.0, nx, nt).unwrap()
    }

    #[test]
    fn diffusion_of_constant_row_vanishes() {
        let g = grids(31, 4);
        let d = DiffusionProfile::Quadratic { a: 1.0, b: 0.5 };
        let out = diffusion_apply(&vec![3.7; 31], &d, &g);
        assert!(out.iter().all(|v| v.abs() < 1e-13));
    }

    #[test]
    fn diffusion_of_parabola_is_two_in_the_interior() {
        let g = grids(101, 4);
        let d = DiffusionProfile::Constant { d0: 1.0 };
        let row: Vec<f64> = g.x.iter().map(|x| x * x).collect();
        let out = diffusion_apply(&row, &d, &g);
        for v in &out[1..100] {
            assert!((v - 2.0).abs() < 1e-3, "interior value {v}");
        }
    }

    #[test]
    fn diffusion_conserves_trapezoid_mass() {
        let g = grids(37, 4);
        let d = DiffusionProfile::Quadratic { a: 1.3, b: 0.9 };
        // A deliberately rough row.
        let row: Vec<f64> = g
            .x
            .iter()
            .enumerate()
            .map(|(i, x)| (13.0 * x).sin() + if i % 3 == 0 { 0.7 } else { -0.2 })
            .collect();
        let out = diffusion_apply(&row, &d, &g);
        assert!(integrate_space(&out, &g).abs() < 1e-12);
    }

    #[test]
    fn zero_net_reaction_keeps_capital_constant() {
        // A = delta_K, alpha = 1, C = 0, constant K0: nothing moves.
        let spec = ModelSpec {
            productivity: 0.4,
            delta_k: 0.4,
            initial_capital: InitialCapital::Constant { value: 2.0 },
            ..baseline()
        };
        for (stepper, nt) in [(Stepper::ImplicitEuler, 50), (Stepper::ExplicitEuler, 1000)] {
            let g = grids(21, nt); // explicit needs dt below dx^2/(2 max d)
            let zero = Field::constant(FieldRole::Consumption, &g, 0.0);
            let scheme = SchemeConfig {
                stepper,
                ..SchemeConfig::default()
            };
            let (k, diag) = simulate_capital(&zero, &spec, &g, &scheme).unwrap();
            assert_eq!(diag.clamp_count, 0);
            for v in k.values() {
                assert!((v - 2.0).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn scalar_growth_matches_the_ode() {
        // d = 0 kills diffusion; K' = g K with g = A - delta_K.
        let spec = ModelSpec {
            productivity: 0.8,
            delta_k: 0.3,
            diffusivity: DiffusionProfile::Constant { d0: 0.0 },
            initial_capital: InitialCapital::Constant { value: 1.5 },
            ..baseline()
        };
        let g = grids(11, 400);
        let zero = Field::constant(FieldRole::Consumption, &g, 0.0);
        let scheme = SchemeConfig::default();
        let (k, _) = simulate_capital(&zero, &spec, &g, &scheme).unwrap();
        let expect = 1.5 * (0.5_f64).exp();
        for v in k.terminal_row() {
            assert!((v - expect).abs() < 3e-3, "got {v}, expected {expect}");
        }
    }

    #[test]
    fn pure_diffusion_conserves_mass() {
        let spec = ModelSpec {
            productivity: 0.0,
            delta_k: 0.0,
            ..baseline()
        };
        let g = grids(101, 200);
        let zero = Field::constant(FieldRole::Consumption, &g, 0.0);
        let (k, diag) = simulate_capital(&zero, &spec, &g, &SchemeConfig::default()).unwrap();
        assert_eq!(diag.clamp_count, 0);
        for j in 0..=g.nt {
            let mass = integrate_space(k.row(j), &g);
            assert!((mass - 1.5).abs() < 1e-8, "mass at level {j}: {mass}");
        }
    }

    #[test]
    fn explicit_stepper_rejects_unstable_dt() {
        let spec = baseline();
        let g = grids(101, 200); // dt = 5e-3 far above dx^2/(2 d_max) = 5e-5
        let zero = Field::constant(FieldRole::Consumption, &g, 0.0);
        let scheme = SchemeConfig {
            stepper: Stepper::ExplicitEuler,
            ..SchemeConfig::default()
        };
        match simulate_capital(&zero, &spec, &g, &scheme) {
            Err(PdeError::StabilityViolated { dt, bound }) => {
                assert!(dt > bound);
            }
            other => panic!("expected stability error, got {other:?}"),
        }
    }

    #[test]
    fn recovery_round_trips_a_given_consumption() {
        let spec = baseline();
        let g = grids(41, 80);
        let mut cons = Field::constant(FieldRole::Consumption, &g, 0.0);
        for j in 0..=g.nt {
            let t = g.t[j];
            for i in 0..g.nx {
                let x = g.x[i];
                cons.set(j, i, 0.5 + 0.3 * (2.0 * x).sin() + 0.2 * t);
            }
        }
        for stepper in [Stepper::ImplicitEuler] {
            let scheme = SchemeConfig {
                stepper,
                ..SchemeConfig::default()
            };
            let (k, sim_diag) = simulate_capital(&cons, &spec, &g, &scheme).unwrap();
            assert_eq!(sim_diag.clamp_count, 0);
            let (rec, diag) = consumption_from_capital(&k, &spec, &g, &scheme);
            assert_eq!(diag.clip_count, 0);
            // Interval rows reproduce the input at the interval start up to
            // the scheme truncation (the recovered value is an interval
            // aggregate, the input is a nodal sample).
            let scale = 1.0 + cons.sup_norm();
            let tol = 5.0 * (g.dt + g.dx * g.dx) * scale;
            let mut worst = 0.0_f64;
            for j in 0..g.nt {
                for i in 0..g.nx {
                    worst = worst.max((rec.at(j, i) - cons.at(j, i)).abs());
                }
            }
            assert!(worst <= tol, "round-trip error {worst} > {tol}");
        }
    }

    #[test]
    fn recovery_is_the_exact_discrete_inverse() {
        // simulate(recover(K)) reproduces K bit-for-bit (no clamps active).
        let spec = baseline();
        let g = grids(31, 60);
        let cons = Field::constant(FieldRole::Consumption, &g, 0.8);
        let scheme = SchemeConfig::default();
        let (k, _) = simulate_capital(&cons, &spec, &g, &scheme).unwrap();
        let (rec, diag) = consumption_from_capital(&k, &spec, &g, &scheme);
        assert_eq!(diag.clip_count, 0);
        let (k2, _) = simulate_capital(&rec, &spec, &g, &scheme).unwrap();
        let mut worst = 0.0_f64;
        for (a, b) in k.values().iter().zip(k2.values()) {
            worst = worst.max((a - b).abs());
        }
        assert!(worst < 1e-11, "discrete inverse defect {worst}");
    }

    #[test]
    fn constant_capital_recovers_net_production() {
        let spec = ModelSpec {
            productivity: 0.7,
            delta_k: 0.2,
            ..baseline()
        };
        let g = grids(21, 40);
        let k = Field::constant(FieldRole::Capital, &g, 3.0);
        let (c, diag) = consumption_from_capital(&k, &spec, &g, &SchemeConfig::default());
        assert_eq!(diag.clip_count, 0);
        for v in c.values() {
            assert!((v - 0.5 * 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn frozen_capital_recovers_clipped_diffusion() {
        // K(x,t) = K0(x) frozen, A = delta_K = 0, d = 1: C = clip(L K0).
        let spec = ModelSpec {
            productivity: 0.0,
            delta_k: 0.0,
            diffusivity: DiffusionProfile::Constant { d0: 1.0 },
            ..baseline()
        };
        let g = grids(101, 10);
        let profile: Vec<f64> = g.x.iter().map(|x| 2.0 + 0.1 * (std::f64::consts::PI * x).cos()).collect();
        let mut vals = Vec::new();
        for _ in 0..=g.nt {
            vals.extend_from_slice(&profile);
        }
        let k = Field::from_values(FieldRole::Capital, &g, vals).unwrap();
        let (c, diag) = consumption_from_capital(&k, &spec, &g, &SchemeConfig::default());
        assert!(diag.clip_count > 0, "negative lobe should clip");
        let lk = diffusion_apply(&profile, &spec.diffusivity, &g);
        for i in 0..g.nx {
            assert!((c.at(0, i) - lk[i].max(0.0)).abs() < 1e-12);
        }
        // And the discrete Laplacian matches the analytic one to O(dx^2).
        for i in 1..g.nx - 1 {
            let analytic =
                -0.1 * std::f64::consts::PI.powi(2) * (std::f64::consts::PI * g.x[i]).cos();
            assert!((lk[i] - analytic).abs() < 2e-3);
        }
    }

    #[test]
    fn criteria_examples() {
        let spec = baseline();
        let g = grids(41, 100);
        // C = 0, K(x,T) = 1 + x.
        let zero_c = Field::constant(FieldRole::Consumption, &g, 0.0);
        let mut k = Field::constant(FieldRole::Capital, &g, 1.0);
        for i in 0..g.nx {
            k.set(g.nt, i, 1.0 + g.x[i]);
        }
        let crit = evaluate_criteria(&k, &zero_c, &spec, &g);
        assert_eq!(crit.j1, 0.0);
        assert!((crit.j2 - 1.5).abs() < 1e-13);

        // Linear utility, C = 1, rho = 1: j1 = 1 - e^{-1}.
        let spec_lin = ModelSpec {
            utility: UtilitySpec::Linear,
            rho: 1.0,
            ..baseline()
        };
        let g_fine = grids(41, 200);
        let one_c = Field::constant(FieldRole::Consumption, &g_fine, 1.0);
        let k1 = Field::constant(FieldRole::Capital, &g_fine, 1.0);
        let crit = evaluate_criteria(&k1, &one_c, &spec_lin, &g_fine);
        assert!((crit.j1 - (1.0 - (-1.0_f64).exp())).abs() < 1e-4);

        // Shifted power at C = 0.728: closed form vs quadrature.
        // (1.728)^{2/3} = 1.44 exactly.
        let c_val = 0.728;
        let g2 = grids(41, 400);
        let cc = Field::constant(FieldRole::Consumption, &g2, c_val);
        let kk = Field::constant(FieldRole::Capital, &g2, 1.0);
        let crit = evaluate_criteria(&kk, &cc, &spec, &g2);
        let closed = (1.44 - 1.0) * (1.0 - (-0.03_f64).exp()) / 0.03;
        assert!(
            (crit.j1 - closed).abs() < 1e-6,
            "quadrature {} vs closed form {closed}",
            crit.j1
        );
    }

    #[test]
    fn adjoint_is_spatially_constant_at_alpha_one() {
        let spec = baseline();
        let g = grids(31, 400);
        let k = Field::constant(FieldRole::Capital, &g, 2.0);
        let theta = 0.1;
        let lam = solve_adjoint(&k, theta, &spec, &g, &SchemeConfig::default()).unwrap();
        // lambda(t) = theta * exp((rho - A - delta_K)(t - T))
        let rate = spec.rho - spec.productivity - spec.delta_k;
        let mut worst = 0.0_f64;
        for j in 0..=g.nt {
            let expect = theta * (rate * (g.t[j] - 1.0)).exp();
            for i in 0..g.nx {
                worst = worst.max((lam.at(j, i) - expect).abs());
            }
        }
        assert!(worst < 2e-3, "adjoint defect {worst}");
    }

    #[test]
    fn zero_terminal_weight_gives_zero_adjoint() {
        let spec = baseline();
        let g = grids(21, 50);
        let k = Field::constant(FieldRole::Capital, &g, 1.0);
        let lam = solve_adjoint(&k, 0.0, &spec, &g, &SchemeConfig::default()).unwrap();
        assert!(lam.values().iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn adjoint_self_converges_under_refinement() {
        // Grid-refinement self-oracle on the baseline capital trajectory.
        let spec = baseline();
        let scheme = SchemeConfig::default();
        let theta = 0.1;
        let run = |nx: usize, nt: usize| -> Vec<f64> {
            let g = grids(nx, nt);
            let cons = Field::constant(FieldRole::Consumption, &g, 0.9);
            let (k, _) = simulate_capital(&cons, &spec, &g, &scheme).unwrap();
            let lam = solve_adjoint(&k, theta, &spec, &g, &scheme).unwrap();
            lam.row(0).to_vec()
        };
        let coarse = run(51, 100);
        let fine = run(201, 800);
        // Compare lambda(x, 0) on the shared nodes (every 4th fine node).
        let mut worst = 0.0_f64;
        for (i, v) in coarse.iter().enumerate() {
            let rel = (v - fine[4 * i]).abs() / fine[4 * i].abs();
            worst = worst.max(rel);
        }
        assert!(worst < 0.02, "refinement drift {worst}");
    }

    #[test]
    fn singular_linearization_is_reported() {
        let spec = ModelSpec {
            alpha: 0.5,
            ..baseline()
        };
        let g = grids(11, 4);
        let mut k = Field::constant(FieldRole::Capital, &g, 1.0);
        k.set(2, 3, 0.0);
        match solve_adjoint(&k, 0.1, &spec, &g, &SchemeConfig::default()) {
            Err(PdeError::SingularLinearization { j: 2, i: 3, .. }) => {}
            other => panic!("expected singular linearization, got {other:?}"),
        }
    }

    #[test]
    fn stationarity_residual_vanishes_by_construction() {
        let spec = baseline();
        let g = grids(21, 30);
        let k = Field::constant(FieldRole::Capital, &g, 2.0);
        let lam = solve_adjoint(&k, 0.1, &spec, &g, &SchemeConfig::default()).unwrap();
        // C := (U')^{-1}(lambda) node by node.
        let mut cvals = Vec::with_capacity((g.nt + 1) * g.nx);
        for j in 0..=g.nt {
            for i in 0..g.nx {
                cvals.push(spec.utility.marginal_inverse(lam.at(j, i)).unwrap());
            }
        }
        let c = Field::from_values(FieldRole::Consumption, &g, cvals).unwrap();
        let res = hamiltonian_residuals(&k, &c, &lam, 0.1, &spec, &g, &SchemeConfig::default());
        assert!(res.stationarity < 1e-12, "stationarity {}", res.stationarity);
        assert!((res.terminal) < 1e-15);
    }

    #[test]
    fn random_fields_give_positive_finite_residuals() {
        let spec = baseline();
        let g = grids(11, 8);
        let bump = |j: usize, i: usize| 1.0 + 0.3 * ((3 * j + 5 * i) % 7) as f64 / 7.0;
        let mut kv = Vec::new();
        let mut cv = Vec::new();
        let mut lv = Vec::new();
        for j in 0..=g.nt {
            for i in 0..g.nx {
                kv.push(bump(j, i));
                cv.push(0.5 * bump(j + 1, i));
                lv.push(0.2 * bump(j, i + 2));
            }
        }
        let k = Field::from_values(FieldRole::Capital, &g, kv).unwrap();
        let c = Field::from_values(FieldRole::Consumption, &g, cv).unwrap();
        let lam = Field::from_values(FieldRole::Adjoint, &g, lv).unwrap();
        let res = hamiltonian_residuals(&k, &c, &lam, 0.1, &spec, &g, &SchemeConfig::default());
        for r in [res.state, res.adjoint, res.stationarity, res.boundary_flux, res.terminal] {
            assert!(r.is_finite() && r > 0.0, "residual {r}");
        }
    }

    #[test]
    fn comparison_larger_consumption_never_raises_capital() {
        let spec = baseline();
        let g = grids(21, 40);
        let scheme = SchemeConfig::default();
        // Deterministic pseudo-random pairs with c_hi >= c_lo pointwise.
        for seed in 0u64..4 {
            let mut lo = Field::constant(FieldRole::Consumption, &g, 0.0);
            let mut hi = Field::constant(FieldRole::Consumption, &g, 0.0);
            let mut s = seed.wrapping_mul(6364136223846793005).wrapping_add(1);
            for j in 0..=g.nt {
                for i in 0..g.nx {
                    s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                    let u = ((s >> 33) as f64) / (1u64 << 31) as f64; // in [0, 2)
                    let base = 0.4 * u;
                    s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                    let v = ((s >> 33) as f64) / (1u64 << 31) as f64;
                    lo.set(j, i, base);
                    hi.set(j, i, base + 0.3 * v);
                }
            }
            let (k_lo, _) = simulate_capital(&lo, &spec, &g, &scheme).unwrap();
            let (k_hi, _) = simulate_capital(&hi, &spec, &g, &scheme).unwrap();
            for (a, b) in k_hi.values().iter().zip(k_lo.values()) {
                assert!(*a <= b + 1e-12, "monotonicity violated: {a} > {b}");
            }
        }
    }
}
