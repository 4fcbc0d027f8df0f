//! Joint antenna selection and transmit covariance optimization for an
//! integrated sensing and communication (ISAC) transmitter.
//!
//! A transmit array with more antennas than RF chains serves a MIMO
//! communication user and probes radar targets with the same signal. The
//! crate optimizes which antennas to activate and the transmit covariance
//! matrix against a scalarized objective: weighted beampattern MSE plus a
//! cross-correlation penalty minus `mu` times the achievable rate.
//!
//! - [`scenario`]: configuration files and the validated [`Scenario`].
//! - [`model`]: array geometry, steering vectors, selections, channels.
//! - [`metrics`]: beampattern, rate, objective terms and gradients.
//! - [`solver`]: the convex inner solve for a fixed selection (projected
//!   gradient on the PSD trace ball) and a water-filling oracle.
//! - [`dp`]: dynamic-programming selection over a predecessor table.
//! - [`search`]: exhaustive search and the fixed-array baseline.
//! - [`report`]: shared sweep record types.

pub mod dp;
pub mod error;
pub mod metrics;
pub mod model;
pub mod report;
pub mod scenario;
pub mod search;
pub mod solver;

pub use dp::{backtrack, dp_select, dp_select_with_table, DpTable, SelectionResult};
pub use error::{Error, Result};
pub use metrics::{
    achievable_rate, alpha_star, beampattern_over_grid, beampattern_power, objective_gradient,
    scalarized_objective, sensing_objective, ObjectiveBreakdown,
};
pub use model::{
    rayleigh_matrix, ArrayGeometry, ChannelMatrix, CovarianceMatrix, DesiredBeampattern,
    SelectionVector,
};
pub use report::{Method, TradeoffPoint};
pub use scenario::{Scenario, ScenarioSpec};
pub use search::{
    binomial, exhaustive_search, fixed_ula_baseline, ula_scenario, DEFAULT_ES_BUDGET,
};
pub use solver::{
    project_feasible, project_trace_shell, solve_inner, water_filling_rate, InnerSolution,
    SolverConfig,
};
