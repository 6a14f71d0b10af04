//! Tidiness-score guided Monte Carlo tree search for tabletop rearrangement.
//!
//! The crate covers the whole offline pipeline: synthesizing tidying
//! trajectories from spatial-relation templates, training a tidiness
//! discriminator and an implicit-Q-learning tidying policy, and planning
//! pick-and-place sequences with a search tree guided by both models.

pub mod category;
pub mod dataset;
pub mod discriminator;
pub mod eval;
pub mod error;
pub mod geom;
pub mod mcts;
pub mod nn;
pub mod policy;
pub mod seed;
pub mod session;
pub mod templates;
pub mod world;

pub use category::Category;
pub use error::{Error, Result};
pub use world::{apply_action, check_overlap, in_bounds, ActionSpec, EnvironmentTag, ObjectInstance, Pose, Scene, Workspace};
