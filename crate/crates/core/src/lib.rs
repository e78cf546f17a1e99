//! Spatio-temporal multi-task assignment for a team of lane-crossing robots.
//!
//! A score becomes a list of timed tasks (cross a lane midpoint at an exact
//! time). The planner solves one assignment over first-task and
//! subsequent-task costs, adds one robot per infeasible choice, and solves
//! once more. Trajectories are then checked for collisions and played back
//! to produce note events and a MIDI file.

pub mod arena;
pub mod collision;
pub mod assignment;
pub mod cost;
pub mod dream;
pub mod error;
pub mod geometry;
pub mod model;
pub mod pathfind;
pub mod sim;
pub mod workspace;

pub use error::{Error, Result};
