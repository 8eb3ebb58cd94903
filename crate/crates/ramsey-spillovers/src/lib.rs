//! Bi-criteria spatial capital accumulation.
//!
//! A social planner chooses consumption `C(x,t)` over a 1-D spatial economy to
//! balance two welfare criteria: the discounted utility stream
//! `J1 = ∫∫ U(C) e^{-ρt} dx dt` and the terminal aggregate capital
//! `J2 = ∫ K(x,T) dx`, subject to capital accumulation with spatial spillovers
//!
//! ```text
//! ∂K/∂t = ∇(d(x) ∇K) + A K^α − δ_K K − C,    zero-flux boundaries, K(x,0) = K0(x).
//! ```
//!
//! Three single-criterion reductions are implemented and cross-checked:
//!
//! * [`ascent`] — linear scalarization `J1 + Θ J2` solved by gradient ascent on
//!   the substituted objective, plus a Pareto-frontier tracer over Θ;
//! * [`constrained`] — the ε-constraint formulation (either criterion bounded
//!   below) via quadratic penalties around the same ascent machinery;
//! * [`gp`] — weighted goal programming on the aggregated (space-integrated)
//!   dynamics, reduced to a dense LP and solved by two-phase simplex;
//! * [`aggregate`] — the aggregated linear-utility model, solved in closed form
//!   (bang-bang) and certified against a dynamic-programming oracle;
//! * [`oracle`] — brute-force control enumeration and Pareto dominance checks
//!   used to certify the solvers on coarse instances.

pub mod aggregate;
pub mod ascent;
pub mod constrained;
pub mod gp;
pub mod io;
pub mod model;
pub mod oracle;
pub mod pde;

pub use model::{
    integrate_space, integrate_spacetime_discounted, validate_spec, CriterionPair,
    DiffusionProfile, Field, FieldRole, Grids, InitialCapital, ModelError, ModelSpec, Omega,
    UtilitySpec,
};
pub use pde::{SchemeConfig, Stepper};
