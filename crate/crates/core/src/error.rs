use thiserror::Error;

use crate::geometry::Point;
use crate::pathfind::KeyPoint;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid arena config: {0}")]
    InvalidArena(String),

    #[error("point {0} is blocked or outside the arena")]
    BlockedPoint(Point),

    #[error("unknown note `{0}`")]
    UnknownNote(String),

    #[error("no path from {from} to {to}")]
    NoPath { from: Point, to: Point },

    #[error("key point {0:?} is not registered in the distance cache")]
    UnregisteredKey(KeyPoint),

    #[error("score is empty")]
    EmptyScore,

    #[error("score row {row}: unknown note `{note}`")]
    UnknownScoreNote { row: usize, note: String },

    #[error("invalid score: {0}")]
    InvalidScore(String),

    #[error("invalid robot team: {0}")]
    InvalidRobots(String),

    #[error("cannot assign an empty task list")]
    NoTasks,

    #[error("task {task_id} is infeasible: no robot or predecessor can take it")]
    InfeasibleTask { task_id: usize },

    #[error("assignment column {column} has no admissible row")]
    InfeasibleColumn { column: usize },

    #[error("brute-force oracle handles at most {max} columns, got {got}")]
    OracleTooLarge { max: usize, got: usize },

    #[error("robot {robot_id} reaches the waiting point of task {task_id} {late_s:.6} s late")]
    InfeasibleTrajectory { robot_id: usize, task_id: usize, late_s: f64 },

    #[error("note `{0}` has no MIDI pitch")]
    UnmappedNote(String),

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
