//! Reference processes, theoretical error bounds and cost curves.

pub mod bound;
pub mod curve;
pub mod markov;

pub use bound::{theoretical_error_bound, BoundInputs, BoundStatus, BoundValue, Mixing};
pub use curve::{curve_point, dbar_estimate, k_step_cost_curve};
pub use markov::MarkovModel;
