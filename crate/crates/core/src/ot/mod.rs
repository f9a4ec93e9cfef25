//! Exact and entropic optimal transport between block measures.

pub mod cycle;
pub mod entropic;
pub mod exact;
mod network_simplex;
pub mod plan;

pub use cycle::{check_cyclical_monotonicity, CycleReport, CycleViolation};
pub use entropic::{
    c_eta_transform, semidual_value, solve_entropic_ot, solve_entropic_value, EntropicPlan,
    EntropicValue, SinkhornConfig, SinkhornStatus,
};
pub use exact::{ot_cost, solve_ot, OtConfig};
pub use plan::{PlanEntry, TransportPlan};
