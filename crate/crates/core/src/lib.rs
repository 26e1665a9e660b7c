//! Adaptive tree-partition bandits over products of coordinate trees.
//!
//! The arm space is a product of trees, one per axis: the dyadic tree of
//! `[0, 1]` or an explicit finite taxonomy. [`engine::Engine`] keeps a
//! partition of that space into boxes, plays inside the box with the largest
//! optimistic index, and splits a box along one axis once its data shows the
//! reward varies along that axis by more than the box's confidence radius
//! allows.

pub mod baselines;
pub mod boxes;
pub mod engine;
pub mod env;
pub mod error;
pub mod harness;
pub mod stats;
pub mod tree;

pub use boxes::{ArmBox, CellLayout, SubBoxKey};
pub use engine::{run, Engine, RunRecord, TrajectoryRow};
pub use env::{Environment, NoiseModel, RewardFunction};
pub use error::{Error, Result};
pub use stats::EngineConstants;
pub use tree::{ArmPoint, Coord, CoordinateTree, NodeId};
