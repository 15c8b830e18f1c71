//! Exact-line-search (optimum) gradient descent on convex quadratics and
//! degree-4 polynomial objectives, together with the probability-simplex
//! dynamics that explain and predict its rate of convergence.
//!
//! The crate is organized around:
//! - [`quadratic`]: the GD map on diagonal quadratics, shrink factors,
//!   worst-case quantities, and the repeated-eigenvalue reduction;
//! - [`akaike`]: the simplex representation of the dynamics, fixed-point
//!   stability, the attracting interval, and the rate lower bound;
//! - [`roc`]: per-seed rate estimation, 2-D closed forms and quadrature,
//!   Monte Carlo averages and the limit-angle distribution;
//! - [`quartic`]: exact minimization of quartic line restrictions and the
//!   generic exact-line-search driver;
//! - [`objectives`]: phase retrieval, matrix completion and Rosenbrock.

pub mod akaike;
pub mod error;
pub mod objectives;
pub mod quadratic;
pub mod quartic;
pub mod roc;

pub use akaike::{
    akaike_lower_bound, akaike_lower_bound_with, attracting_interval, jacobian_at_fixed_point,
    limit_probability, roc_from_s, s_from_theta, sigma, sigma_inv, t_map, theta, theta_from_s,
    variance, AttractingInterval, DeltaConvention, LimitResult, StabilityReport,
};
pub use error::{Error, Result};
pub use quadratic::{
    a_norm, constant_step_gd, els_gd_run, els_step_size, gd_step, reduce_multiplicities,
    shrink_factor, worst_seed, Spectrum, Trajectory,
};
pub use quartic::{
    els_gd_generic, line_restriction, minimize_quartic_nonneg, GenericTrajectory,
    LineSearchResult, Objective, QuadraticObjective, QuarticPoly,
};
pub use roc::{
    average_roc_monte_carlo, average_roc_monte_carlo_moment, average_roc_quadrature_2d,
    average_sq_roc_closed_form_2d,
    estimate_roc, estimate_roc_with, limit_angle_histogram, sample_rng, sample_standard_normal,
    sample_unit_sphere,
    AngleHistogram, AverageRocResult, Moment, RocEstimate, RocMethod,
};

/// Library version embedded into every emitted result record.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
