//! Procedurally generated object-centric reinforcement learning tasks.
//!
//! Scenes are flat 2D arrangements of colored shapes in the unit square,
//! rendered to 64x64 RGB frames. The crate covers the whole pipeline: scene
//! sampling under distribution shifts, the episodic environments, oracle
//! planners, evaluation harness and wire protocol, dataset generation and
//! segmentation metrics.

pub mod dataset;
pub mod env;
pub mod geometry;
pub mod harness;
pub mod metrics;
pub mod oracle;
pub mod params;
pub mod render;
pub mod rng;
pub mod sampler;
mod shape_table;
pub mod validate;

pub use env::{Action, EnvState, GtState};
pub use geometry::{ColorName, Entity, Point, SceneSpec, ShapeKind, Size};
pub use params::{ShiftSpec, TaskKind, TaskParams};
