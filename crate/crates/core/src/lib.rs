//! Estimation of optimal joining costs between stationary processes from
//! single sample paths, by optimally coupling empirical block laws and
//! stitching the couplings into stationary joinings.
//!
//! The numerical core is generic over [`Real`] (`f32` or `f64`); the aliases
//! at the crate root fix it to `f64`.

pub mod alphabet;
pub mod cost;
pub mod error;
pub mod estimate;
pub mod joining;
pub mod measure;
pub mod ot;
pub mod process;
pub mod rng;
pub mod scalar;
pub mod schedule;
pub mod sequence;

pub use alphabet::Alphabet;
pub use cost::{BlockCost, CostSpec, FnCost};
pub use error::{Error, Result};
pub use estimate::{estimate_oj, EstimateResult, EstimatorConfig, KChoice, Solver};
pub use measure::{empirical_block_measure, l1_distance, Block, BlockMeasure};
pub use scalar::Real;
pub use schedule::{k_schedule, Schedule, ScheduleRule};
pub use sequence::{ingest, read_sequence, SymbolSequence};

pub type Measure = BlockMeasure<f64>;
pub type Cost = CostSpec<f64>;
pub type Plan = ot::TransportPlan<f64>;
pub type EntropicPlan = ot::EntropicPlan<f64>;
pub type Model = process::MarkovModel<f64>;
pub type Joining = joining::BlockJoining<f64>;
pub type Estimate = EstimateResult<f64>;
