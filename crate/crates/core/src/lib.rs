//! Capacity planning, overbooking bounds and admission control for
//! serverless functions whose invocations are shaped by token buckets.

pub mod admission;
pub mod bounds;
pub mod cli;
pub mod curves;
pub mod error;
pub mod estimator;
pub mod quadrature;
pub mod service_time;
pub mod simulator;

pub use admission::{Decision, TenantRegistry};
pub use bounds::{BoundResult, Method, ResourcePool, TierSpec};
pub use curves::{BurstinessCurve, Piece, TokenBucketState};
pub use error::{Error, Result};
pub use service_time::ServiceTimeModel;
pub use simulator::{OccupancyStats, Scenario};
