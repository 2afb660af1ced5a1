//! Stochastic sizing of neighborhood PV and battery investments.
//!
//! Expected annual costs for three investment models — per-household,
//! pooled, and a user/manager shared-storage game — are approximated by
//! Monte Carlo sample averages of convex piecewise-linear day costs, then
//! minimized by projected subgradients. A sample-size rule says how many
//! scenarios make the sampled optimum trustworthy.

pub mod cost;
mod error;
pub mod game;
pub mod model;
mod numeric;
pub mod saa;
mod scenario;
pub mod solver;

pub use error::{Error, Result};
pub use model::{Bounds, ChargeProfile, CostBreakdown, Decision, Mode, Subgradient, Tariff};
pub use numeric::pairwise_sum;
pub use scenario::{SampleSource, ScenarioSet};
