//! Problem data: parameters, grids, space-time fields and quadrature.
//!
//! Everything downstream consumes one validated [`ModelSpec`] plus a [`Grids`]
//! discretization. Fields are dense space-time lattices with a role tag that
//! decides which sign invariants apply.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Number of sample points used when checking sign conditions on profiles.
const PROFILE_PROBE_POINTS: usize = 2049;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("rho must be positive (got {0})")]
    NonPositiveRho(f64),
    #[error("T must be positive (got {0})")]
    NonPositiveHorizon(f64),
    #[error("omega must satisfy x_hi > x_lo (got [{x_lo}, {x_hi}])")]
    EmptyDomain { x_lo: f64, x_hi: f64 },
    #[error("alpha must lie in (0, 1] (got {0})")]
    AlphaOutOfRange(f64),
    #[error("A must be positive (got {0})")]
    NonPositiveProductivity(f64),
    #[error("delta_K must be nonnegative (got {0})")]
    NegativeDepreciation(f64),
    #[error("utility gamma must lie in (0, 1) (got {0})")]
    GammaOutOfRange(f64),
    #[error("diffusivity negative at x={x} (d={value})")]
    NegativeDiffusivity { x: f64, value: f64 },
    #[error("initial capital negative at x={x} (K0={value})")]
    NegativeInitialCapital { x: f64, value: f64 },
    #[error("tabulated profile needs at least two samples with strictly increasing x")]
    BadTable,
    #[error("grid needs nx >= 3 and nt >= 2 (got nx={nx}, nt={nt})")]
    GridTooCoarse { nx: usize, nt: usize },
    #[error("field has {got} values but the grid expects {expected} ((nt+1) * nx)")]
    DimensionMismatch { got: usize, expected: usize },
    #[error("non-finite value at node (t index {j}, x index {i})")]
    NonFinite { j: usize, i: usize },
    #[error("{role} field negative at node (t index {j}, x index {i}): {value}")]
    NegativeField {
        role: &'static str,
        j: usize,
        i: usize,
        value: f64,
    },
}

/// Spatial interval `[x_lo, x_hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Omega {
    pub x_lo: f64,
    pub x_hi: f64,
}

impl Omega {
    pub fn measure(&self) -> f64 {
        self.x_hi - self.x_lo
    }
}

/// Diffusion coefficient profile `d(x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DiffusionProfile {
    Constant { d0: f64 },
    /// `d(x) = a - b x^2`
    Quadratic { a: f64, b: f64 },
}

impl DiffusionProfile {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            DiffusionProfile::Constant { d0 } => *d0,
            DiffusionProfile::Quadratic { a, b } => a - b * x * x,
        }
    }
}

/// Initial capital endowment `K0(x)`: a small closed set of parametric forms
/// plus tabulated values, so specs stay reproducible as config files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialCapital {
    Constant { value: f64 },
    /// `K0(x) = intercept + slope * x`
    Affine { intercept: f64, slope: f64 },
    /// Piecewise-linear interpolation of `(xs, values)`, clamped at the ends.
    Tabulated { xs: Vec<f64>, values: Vec<f64> },
}

impl InitialCapital {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            InitialCapital::Constant { value } => *value,
            InitialCapital::Affine { intercept, slope } => intercept + slope * x,
            InitialCapital::Tabulated { xs, values } => {
                if x <= xs[0] {
                    return values[0];
                }
                if x >= xs[xs.len() - 1] {
                    return values[values.len() - 1];
                }
                let k = xs.partition_point(|&xk| xk <= x) - 1;
                let w = (x - xs[k]) / (xs[k + 1] - xs[k]);
                values[k] + w * (values[k + 1] - values[k])
            }
        }
    }

    fn check_table(&self) -> Result<(), ModelError> {
        if let InitialCapital::Tabulated { xs, values } = self {
            if xs.len() < 2 || xs.len() != values.len() {
                return Err(ModelError::BadTable);
            }
            if xs.windows(2).any(|w| w[1] <= w[0]) {
                return Err(ModelError::BadTable);
            }
        }
        Ok(())
    }
}

/// Instantaneous utility of consumption. Both families satisfy `U(0) = 0`,
/// `U' > 0`; the shifted power is strictly concave.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum UtilitySpec {
    /// `U(C) = (1 + C)^gamma - 1`, `gamma` in (0, 1).
    PowerShifted { gamma: f64 },
    /// `U(C) = C`
    Linear,
}

impl UtilitySpec {
    pub fn value(&self, c: f64) -> f64 {
        match self {
            UtilitySpec::PowerShifted { gamma } => (1.0 + c).powf(*gamma) - 1.0,
            UtilitySpec::Linear => c,
        }
    }

    /// Marginal utility `U'(C)`.
    pub fn marginal(&self, c: f64) -> f64 {
        match self {
            UtilitySpec::PowerShifted { gamma } => gamma * (1.0 + c).powf(gamma - 1.0),
            UtilitySpec::Linear => 1.0,
        }
    }

    /// Inverse of the marginal utility, `(U')^{-1}(m)`. `None` for the linear
    /// family, whose marginal is constant.
    pub fn marginal_inverse(&self, m: f64) -> Option<f64> {
        match self {
            UtilitySpec::PowerShifted { gamma } => {
                Some((gamma / m).powf(1.0 / (1.0 - gamma)) - 1.0)
            }
            UtilitySpec::Linear => None,
        }
    }
}

/// All problem data for the spatial model.
///
/// Serializes to/from JSON with the canonical field names `A`, `alpha`,
/// `delta_K`, `rho`, `T`, `omega`, `diffusivity`, `initial_capital`,
/// `utility`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    /// Productivity `A` in `Y = A K^alpha`.
    #[serde(rename = "A")]
    pub productivity: f64,
    /// Production exponent, in (0, 1].
    pub alpha: f64,
    /// Depreciation rate.
    #[serde(rename = "delta_K")]
    pub delta_k: f64,
    /// Discount rate.
    pub rho: f64,
    /// Planning horizon.
    #[serde(rename = "T")]
    pub horizon: f64,
    pub omega: Omega,
    pub diffusivity: DiffusionProfile,
    pub initial_capital: InitialCapital,
    pub utility: UtilitySpec,
}

impl ModelSpec {
    /// Net reaction coefficient `A - delta_K`, the growth rate at `alpha = 1`.
    pub fn net_growth(&self) -> f64 {
        self.productivity - self.delta_k
    }
}

/// Checks every [`ModelSpec`] invariant and returns the spec unchanged.
///
/// Sign conditions on `d(x)` and `K0(x)` are checked on a fine uniform probe
/// of the domain (plus the table nodes for tabulated `K0`). Validation is a
/// pure check, so validating twice returns the identical value.
pub fn validate_spec(spec: ModelSpec) -> Result<ModelSpec, ModelError> {
    if !(spec.rho > 0.0) {
        return Err(ModelError::NonPositiveRho(spec.rho));
    }
    if !(spec.horizon > 0.0) {
        return Err(ModelError::NonPositiveHorizon(spec.horizon));
    }
    if !(spec.omega.x_hi > spec.omega.x_lo) {
        return Err(ModelError::EmptyDomain {
            x_lo: spec.omega.x_lo,
            x_hi: spec.omega.x_hi,
        });
    }
    if !(spec.alpha > 0.0 && spec.alpha <= 1.0) {
        return Err(ModelError::AlphaOutOfRange(spec.alpha));
    }
    if !(spec.productivity > 0.0) {
        return Err(ModelError::NonPositiveProductivity(spec.productivity));
    }
    if !(spec.delta_k >= 0.0) {
        return Err(ModelError::NegativeDepreciation(spec.delta_k));
    }
    if let UtilitySpec::PowerShifted { gamma } = spec.utility {
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(ModelError::GammaOutOfRange(gamma));
        }
    }
    spec.initial_capital.check_table()?;
    for k in 0..PROFILE_PROBE_POINTS {
        let s = k as f64 / (PROFILE_PROBE_POINTS - 1) as f64;
        let x = spec.omega.x_lo + s * (spec.omega.x_hi - spec.omega.x_lo);
        let d = spec.diffusivity.eval(x);
        if !(d >= 0.0) {
            return Err(ModelError::NegativeDiffusivity { x, value: d });
        }
        let k0 = spec.initial_capital.eval(x);
        if !(k0 >= 0.0) {
            return Err(ModelError::NegativeInitialCapital { x, value: k0 });
        }
    }
    if let InitialCapital::Tabulated { xs, values } = &spec.initial_capital {
        for (x, v) in xs.iter().zip(values) {
            if !(*v >= 0.0) {
                return Err(ModelError::NegativeInitialCapital { x: *x, value: *v });
            }
        }
    }
    Ok(spec)
}

/// Uniform discretization of `Omega x (0, T)`: `nx` space nodes (including
/// both endpoints) and `nt` time steps, i.e. `nt + 1` time levels.
#[derive(Debug, Clone, PartialEq)]
pub struct Grids {
    pub nx: usize,
    pub nt: usize,
    pub dx: f64,
    pub dt: f64,
    pub x: Vec<f64>,
    pub t: Vec<f64>,
}

impl Grids {
    pub fn new(omega: &Omega, horizon: f64, nx: usize, nt: usize) -> Result<Grids, ModelError> {
        if nx < 3 || nt < 2 {
            return Err(ModelError::GridTooCoarse { nx, nt });
        }
        if !(omega.x_hi > omega.x_lo) {
            return Err(ModelError::EmptyDomain {
                x_lo: omega.x_lo,
                x_hi: omega.x_hi,
            });
        }
        if !(horizon > 0.0) {
            return Err(ModelError::NonPositiveHorizon(horizon));
        }
        let dx = (omega.x_hi - omega.x_lo) / (nx - 1) as f64;
        let dt = horizon / nt as f64;
        let mut x: Vec<f64> = (0..nx).map(|i| omega.x_lo + i as f64 * dx).collect();
        x[nx - 1] = omega.x_hi;
        let mut t: Vec<f64> = (0..=nt).map(|j| j as f64 * dt).collect();
        t[nt] = horizon;
        Ok(Grids {
            nx,
            nt,
            dx,
            dt,
            x,
            t,
        })
    }

    /// Largest stable `dt` for the explicit stepper, `dx^2 / (2 max d)`.
    /// The maximum of `d` is taken over nodes and half-nodes.
    pub fn explicit_stability_bound(&self, diffusivity: &DiffusionProfile) -> f64 {
        let mut dmax = 0.0_f64;
        for i in 0..self.nx {
            dmax = dmax.max(diffusivity.eval(self.x[i]));
            if i + 1 < self.nx {
                dmax = dmax.max(diffusivity.eval(0.5 * (self.x[i] + self.x[i + 1])));
            }
        }
        if dmax <= 0.0 {
            f64::INFINITY
        } else {
            self.dx * self.dx / (2.0 * dmax)
        }
    }

    fn len(&self) -> usize {
        (self.nt + 1) * self.nx
    }
}

/// What a field stores; capital and consumption must be nonnegative.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldRole {
    Capital,
    Consumption,
    Adjoint,
    Direction,
}

impl FieldRole {
    fn name(self) -> &'static str {
        match self {
            FieldRole::Capital => "capital",
            FieldRole::Consumption => "consumption",
            FieldRole::Adjoint => "adjoint",
            FieldRole::Direction => "direction",
        }
    }

    fn requires_nonnegative(self) -> bool {
        matches!(self, FieldRole::Capital | FieldRole::Consumption)
    }
}

/// Dense space-time lattice of values, row `j` holding time level `t_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    role: FieldRole,
    nx: usize,
    nt: usize,
    values: Vec<f64>,
}

impl Field {
    /// Builds a field, enforcing dimensions, finiteness, and the sign
    /// invariant of the role.
    pub fn from_values(role: FieldRole, grids: &Grids, values: Vec<f64>) -> Result<Field, ModelError> {
        if values.len() != grids.len() {
            return Err(ModelError::DimensionMismatch {
                got: values.len(),
                expected: grids.len(),
            });
        }
        for (k, &v) in values.iter().enumerate() {
            let (j, i) = (k / grids.nx, k % grids.nx);
            if !v.is_finite() {
                return Err(ModelError::NonFinite { j, i });
            }
            if role.requires_nonnegative() && v < 0.0 {
                return Err(ModelError::NegativeField {
                    role: role.name(),
                    j,
                    i,
                    value: v,
                });
            }
        }
        Ok(Field {
            role,
            nx: grids.nx,
            nt: grids.nt,
            values,
        })
    }

    /// Field with the same value at every node.
    pub fn constant(role: FieldRole, grids: &Grids, value: f64) -> Field {
        Field::from_values(role, grids, vec![value; grids.len()])
            .expect("constant field must satisfy the role invariant")
    }

    /// Internal constructor for solver output that is valid by construction.
    pub(crate) fn new_unchecked(role: FieldRole, nx: usize, nt: usize, values: Vec<f64>) -> Field {
        debug_assert_eq!(values.len(), (nt + 1) * nx);
        Field {
            role,
            nx,
            nt,
            values,
        }
    }

    pub fn role(&self) -> FieldRole {
        self.role
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn nt(&self) -> usize {
        self.nt
    }

    pub fn matches(&self, grids: &Grids) -> bool {
        self.nx == grids.nx && self.nt == grids.nt
    }

    pub fn row(&self, j: usize) -> &[f64] {
        &self.values[j * self.nx..(j + 1) * self.nx]
    }

    pub fn row_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.values[j * self.nx..(j + 1) * self.nx]
    }

    pub fn at(&self, j: usize, i: usize) -> f64 {
        self.values[j * self.nx + i]
    }

    pub fn set(&mut self, j: usize, i: usize, v: f64) {
        self.values[j * self.nx + i] = v;
    }

    /// Values at the terminal time `T`.
    pub fn terminal_row(&self) -> &[f64] {
        self.row(self.nt)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// `a * self + b * other`, with the result's role supplied by the caller.
    pub fn linear_combination(&self, a: f64, other: &Field, b: f64, role: FieldRole) -> Field {
        assert_eq!(self.values.len(), other.values.len());
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(u, v)| a * u + b * v)
            .collect();
        Field::new_unchecked(role, self.nx, self.nt, values)
    }
}

/// The two criterion values of a candidate solution: `j1` is the discounted
/// utility integral, `j2` the terminal aggregate capital.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriterionPair {
    pub j1: f64,
    pub j2: f64,
}

impl CriterionPair {
    /// Pareto dominance for maximization: at least as good in both criteria
    /// and strictly better in one.
    pub fn dominates(&self, other: &CriterionPair) -> bool {
        self.j1 >= other.j1
            && self.j2 >= other.j2
            && (self.j1 > other.j1 || self.j2 > other.j2)
    }
}

/// Composite trapezoid rule over the spatial grid; exact for affine rows.
pub fn integrate_space(row: &[f64], grids: &Grids) -> f64 {
    debug_assert_eq!(row.len(), grids.nx);
    let inner: f64 = row[1..grids.nx - 1].iter().sum();
    grids.dx * (0.5 * (row[0] + row[grids.nx - 1]) + inner)
}

/// Trapezoid-in-space, trapezoid-in-time approximation of
/// `∫_0^T ∫_Ω field(x,t) e^{-rho t} dx dt`.
pub fn integrate_spacetime_discounted(field: &Field, rho: f64, grids: &Grids) -> f64 {
    debug_assert!(field.matches(grids));
    let mut total = 0.0;
    for j in 0..=grids.nt {
        let w = if j == 0 || j == grids.nt { 0.5 } else { 1.0 };
        total += w * integrate_space(field.row(j), grids) * (-rho * grids.t[j]).exp();
    }
    total * grids.dt
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn baseline_spec() -> ModelSpec {
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

    #[test]
    fn baseline_spec_is_valid() {
        let spec = baseline_spec();
        assert_eq!(validate_spec(spec.clone()), Ok(spec));
    }

    #[test]
    fn validate_is_idempotent() {
        let spec = validate_spec(baseline_spec()).unwrap();
        let again = validate_spec(spec.clone()).unwrap();
        assert_eq!(spec, again);
        // Bit-identical through serialization as well.
        assert_eq!(
            serde_json::to_string(&spec).unwrap(),
            serde_json::to_string(&again).unwrap()
        );
    }

    #[test]
    fn zero_rho_is_rejected() {
        let spec = ModelSpec {
            rho: 0.0,
            ..baseline_spec()
        };
        let err = validate_spec(spec).unwrap_err();
        assert_eq!(err, ModelError::NonPositiveRho(0.0));
        assert!(err.to_string().contains("rho must be positive"));
    }

    #[test]
    fn negative_diffusivity_is_located() {
        let spec = ModelSpec {
            diffusivity: DiffusionProfile::Quadratic { a: 1.0, b: 2.0 },
            ..baseline_spec()
        };
        match validate_spec(spec).unwrap_err() {
            ModelError::NegativeDiffusivity { x, value } => {
                // 1 - 2 x^2 first goes negative past x ~ 0.7071.
                assert!(x > 0.7 && x <= 1.0, "x = {x}");
                assert!(value < 0.0);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn alpha_and_gamma_ranges_are_enforced() {
        assert!(matches!(
            validate_spec(ModelSpec {
                alpha: 1.5,
                ..baseline_spec()
            }),
            Err(ModelError::AlphaOutOfRange(_))
        ));
        assert!(matches!(
            validate_spec(ModelSpec {
                utility: UtilitySpec::PowerShifted { gamma: 1.0 },
                ..baseline_spec()
            }),
            Err(ModelError::GammaOutOfRange(_))
        ));
    }

    #[test]
    fn utility_families_satisfy_their_invariants() {
        let power = UtilitySpec::PowerShifted { gamma: 2.0 / 3.0 };
        let linear = UtilitySpec::Linear;
        assert_eq!(power.value(0.0), 0.0);
        assert_eq!(linear.value(0.0), 0.0);
        for c in [0.0, 0.5, 1.0, 5.0] {
            assert!(power.marginal(c) > 0.0);
            assert!(linear.marginal(c) > 0.0);
        }
        // Strict concavity of the shifted power: marginal decreases.
        assert!(power.marginal(1.0) < power.marginal(0.0));
        // (U')^{-1} inverts U' where defined.
        let m = power.marginal(0.728);
        let c = power.marginal_inverse(m).unwrap();
        assert!((c - 0.728).abs() < 1e-12);
        assert!(linear.marginal_inverse(1.0).is_none());
    }

    #[test]
    fn tabulated_initial_capital_interpolates() {
        let tab = InitialCapital::Tabulated {
            xs: vec![0.0, 0.5, 1.0],
            values: vec![1.0, 2.0, 1.0],
        };
        assert_eq!(tab.eval(0.25), 1.5);
        assert_eq!(tab.eval(-1.0), 1.0);
        assert_eq!(tab.eval(2.0), 1.0);
        let bad = InitialCapital::Tabulated {
            xs: vec![0.0, 0.0],
            values: vec![1.0, 1.0],
        };
        assert!(matches!(
            validate_spec(ModelSpec {
                initial_capital: bad,
                ..baseline_spec()
            }),
            Err(ModelError::BadTable)
        ));
    }

    #[test]
    fn grids_hit_the_endpoints() {
        let omega = Omega { x_lo: 0.0, x_hi: 1.0 };
        let g = Grids::new(&omega, 1.0, 101, 200).unwrap();
        assert_eq!(g.x[0], 0.0);
        assert_eq!(g.x[100], 1.0);
        assert_eq!(g.t[0], 0.0);
        assert_eq!(g.t[200], 1.0);
        assert!(g.dx > 0.0 && g.dt > 0.0);
        assert!(matches!(
            Grids::new(&omega, 1.0, 2, 200),
            Err(ModelError::GridTooCoarse { .. })
        ));
    }

    #[test]
    fn integrate_space_examples() {
        let omega = Omega { x_lo: 0.0, x_hi: 1.0 };
        for nx in [3, 11, 101] {
            let g = Grids::new(&omega, 1.0, nx, 2).unwrap();
            let ones = vec![1.0; nx];
            assert!((integrate_space(&ones, &g) - 1.0).abs() < 1e-14);
            let affine: Vec<f64> = g.x.iter().map(|x| 1.0 + x).collect();
            assert!((integrate_space(&affine, &g) - 1.5).abs() < 1e-13);
        }
        let g = Grids::new(&omega, 1.0, 101, 2).unwrap();
        let quad: Vec<f64> = g.x.iter().map(|x| x * x).collect();
        assert!((integrate_space(&quad, &g) - 1.0 / 3.0).abs() < 1e-4);
    }

    #[test]
    fn discounted_spacetime_examples() {
        let omega = Omega { x_lo: 0.0, x_hi: 1.0 };
        let g = Grids::new(&omega, 1.0, 11, 200).unwrap();
        let one = Field::constant(FieldRole::Direction, &g, 1.0);
        let got = integrate_spacetime_discounted(&one, 1.0, &g);
        assert!((got - (1.0 - (-1.0_f64).exp())).abs() < 1e-4);

        let zero = Field::constant(FieldRole::Direction, &g, 0.0);
        assert_eq!(integrate_spacetime_discounted(&zero, 1.0, &g), 0.0);

        let c = 2.5;
        let field = Field::constant(FieldRole::Direction, &g, c);
        let expect = c * (1.0 - (-0.04_f64).exp()) / 0.04;
        assert!((integrate_spacetime_discounted(&field, 0.04, &g) - expect).abs() < 1e-4);
    }

    #[test]
    fn quadrature_refinement_is_second_order() {
        let omega = Omega { x_lo: 0.0, x_hi: 1.0 };
        // Space: error on a quadratic integrand shrinks 4x per dx halving.
        let exact = 1.0 / 3.0;
        let err = |nx: usize| {
            let g = Grids::new(&omega, 1.0, nx, 2).unwrap();
            let quad: Vec<f64> = g.x.iter().map(|x| x * x).collect();
            (integrate_space(&quad, &g) - exact).abs()
        };
        let r1 = err(11) / err(21);
        let r2 = err(21) / err(41);
        assert!((3.5..4.5).contains(&r1), "ratio {r1}");
        assert!((3.5..4.5).contains(&r2), "ratio {r2}");

        // Space-time: quadratic in x times smooth discounting in t (T = 1).
        let rho = 0.7_f64;
        let exact_st = exact * (1.0 - (-rho).exp()) / rho;
        let err_st = |n: usize| {
            let g = Grids::new(&omega, 1.0, n + 1, n).unwrap();
            let mut vals = Vec::with_capacity((n + 1) * (n + 1));
            for _j in 0..=n {
                vals.extend(g.x.iter().map(|x| x * x));
            }
            let f = Field::from_values(FieldRole::Direction, &g, vals).unwrap();
            (integrate_spacetime_discounted(&f, rho, &g) - exact_st).abs()
        };
        let s1 = err_st(20) / err_st(40);
        let s2 = err_st(40) / err_st(80);
        assert!((3.5..4.5).contains(&s1), "ratio {s1}");
        assert!((3.5..4.5).contains(&s2), "ratio {s2}");
    }

    #[test]
    fn field_invariants_are_enforced() {
        let omega = Omega { x_lo: 0.0, x_hi: 1.0 };
        let g = Grids::new(&omega, 1.0, 3, 2).unwrap();
        let mut vals = vec![1.0; 9];
        vals[4] = -0.5;
        assert!(matches!(
            Field::from_values(FieldRole::Capital, &g, vals.clone()),
            Err(ModelError::NegativeField { .. })
        ));
        // Direction fields may be negative.
        assert!(Field::from_values(FieldRole::Direction, &g, vals.clone()).is_ok());
        vals[4] = f64::NAN;
        assert!(matches!(
            Field::from_values(FieldRole::Direction, &g, vals),
            Err(ModelError::NonFinite { j: 1, i: 1 })
        ));
        assert!(matches!(
            Field::from_values(FieldRole::Capital, &g, vec![1.0; 8]),
            Err(ModelError::DimensionMismatch { got: 8, expected: 9 })
        ));
    }

    #[test]
    fn spec_serializes_with_canonical_field_names() {
        let spec = baseline_spec();
        let json = serde_json::to_value(&spec).unwrap();
        for key in [
            "A",
            "alpha",
            "delta_K",
            "rho",
            "T",
            "omega",
            "diffusivity",
            "initial_capital",
            "utility",
        ] {
            assert!(json.get(key).is_some(), "missing key {key}");
        }
        let back: ModelSpec = serde_json::from_value(json).unwrap();
        assert_eq!(back, spec);
    }
}
