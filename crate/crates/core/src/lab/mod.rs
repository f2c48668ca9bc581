//! Benchmark problems, closed-form references, error metrics and
//! convergence experiments.

mod experiment;
mod nets;
mod problem;
mod stats;

pub use experiment::{
    convergence_experiment, eval_points, reference_lp_norm, write_csv, ConvergenceRow, ExperimentOptions,
    CSV_HEADER,
};
pub use nets::{nonlinearity_net, quadratic_net, QUADRATIC_CELLS, QUADRATIC_RADIUS};
pub use problem::{
    engine_setup, estimate, pde_residual, reference_gate, reference_solution, time_rescale, Datum, Direction, EngineFns,
    Nonlinearity, PdeProblem,
};
pub use stats::{brownian_moment, brownian_moment_check, lp_error, ErrorEstimate, MomentReport};
