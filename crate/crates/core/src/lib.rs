//! Simulation lab for safe online learning to re-rank.
//!
//! A stochastic click bandit ([`click_models`]) shows `K` of `L` items per
//! round and returns position-based or cascade clicks. Rankers
//! ([`rankers`]) start from a production ranking and improve it from clicks;
//! the safe ones only reorder pairs whose order is statistically settled and
//! explore unranked items through a hidden extra slot. [`evaluation`] scores
//! every displayed ranking by expected regret and an inversion-based safety
//! constraint, and [`harness`] runs seeded repetitions and writes CSV tables
//! and SVG charts.

pub mod click_models;
pub mod error;
pub mod evaluation;
pub mod harness;
pub mod pairwise_stats;
pub mod rankers;

pub use click_models::{
    BanditInstance, ClickModel, ClickVector, ItemId, ModelKind, Ranking, Scenario,
};
pub use error::{Error, Result};
pub use rankers::{build_ranker, Ranker, RankerId, RankerSetup};
