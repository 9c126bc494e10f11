//! Event-driven straggler simulation.
//!
//! A round samples one completion time per server, replays arrivals in
//! time order and decodes as soon as the arrived set suffices. The
//! gradient-descent drivers run one round per iteration.

mod adversarial;
mod descent;
mod model;
mod round;
mod sketching;

pub use adversarial::adversarial_straggler_search;
pub use descent::{
    centralized_gradient_descent, gradient_descent, least_squares_gradient, least_squares_loss,
    least_squares_solution, max_stable_step, partial_gradients, GdConfig, GdHistory,
};
pub use model::{DelayLaw, ServerModel, StragglerPolicy};
pub use round::{completion_times, run_round, Arrival, GradientJob, RoundJob, RoundTrace};
pub use sketching::{iterative_sketching_gc, sketch_and_solve_baseline, ReplicationPlan, SketchedGradientJob};
