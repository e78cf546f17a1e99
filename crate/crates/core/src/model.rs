//! Robots, spatio-temporal tasks and score ingestion.

use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::arena::Arena;
use crate::error::{Error, Result};
use crate::geometry::Point;

/// The 24-note birthday tune used in the piano experiments, `note,time_s`.
pub const HAPPY_BIRTHDAY_CSV: &str = include_str!("../data/happy_birthday.csv");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Robot {
    pub id: usize,
    pub start: Point,
    pub v_max: f64,
    /// Added by the planner rather than supplied by the caller.
    pub spawned: bool,
}

impl Robot {
    pub fn new(id: usize, start: Point, v_max: f64) -> Self {
        Self { id, start, v_max, spawned: false }
    }
}

/// Be at `position` at exactly `time`. Piano tasks also carry their note and lane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Task {
    /// 1-based, in time order.
    pub id: usize,
    pub note: Option<String>,
    pub lane: Option<usize>,
    pub position: Point,
    pub time: f64,
}

impl Task {
    pub fn at(id: usize, position: Point, time: f64) -> Self {
        Self { id, note: None, lane: None, position, time }
    }

    pub fn lane_index(&self) -> Result<usize> {
        self.lane.ok_or_else(|| Error::Invariant(format!("task {} has no lane", self.id)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreEntry {
    pub note: String,
    pub time_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Score {
    pub entries: Vec<ScoreEntry>,
    pub time_scale: f64,
}

impl Score {
    pub fn new(entries: Vec<ScoreEntry>, time_scale: f64) -> Result<Self> {
        let score = Self { entries, time_scale };
        score.validate()?;
        Ok(score)
    }

    /// Reads a `note,time_s` CSV.
    pub fn from_csv<R: Read>(reader: R, time_scale: f64) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != ["note", "time_s"] {
            return Err(Error::InvalidScore(format!("expected header `note,time_s`, got `{}`", headers.iter().collect::<Vec<_>>().join(","))));
        }
        let mut entries = Vec::new();
        for row in rdr.deserialize() {
            entries.push(row?);
        }
        Self::new(entries, time_scale)
    }

    pub fn happy_birthday() -> Self {
        Self::from_csv(HAPPY_BIRTHDAY_CSV.as_bytes(), 1.0).expect("bundled score parses")
    }

    pub fn validate(&self) -> Result<()> {
        if self.entries.is_empty() {
            return Err(Error::EmptyScore);
        }
        if !(self.time_scale.is_finite() && self.time_scale > 0.0) {
            return Err(Error::InvalidScore(format!("time scale must be positive, got {}", self.time_scale)));
        }
        for (i, e) in self.entries.iter().enumerate() {
            let t = e.time_s * self.time_scale;
            if !(t.is_finite() && t > 0.0) {
                return Err(Error::InvalidScore(format!(
                    "row {}: scaled time {t} must be strictly positive",
                    i + 1
                )));
            }
        }
        Ok(())
    }
}

/// One task per score entry, sorted by scaled time (stable for chords), ids 1..=M.
pub fn score_to_tasks(score: &Score, arena: &Arena) -> Result<Vec<Task>> {
    score.validate()?;
    let mut staged = Vec::with_capacity(score.entries.len());
    for (i, entry) in score.entries.iter().enumerate() {
        let lane = arena
            .lane_for_note(&entry.note)
            .map_err(|_| Error::UnknownScoreNote { row: i + 1, note: entry.note.clone() })?;
        staged.push((entry.time_s * score.time_scale, entry.note.clone(), lane.index, lane.midpoint));
    }
    staged.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(staged
        .into_iter()
        .enumerate()
        .map(|(i, (time, note, lane, position))| Task {
            id: i + 1,
            note: Some(note),
            lane: Some(lane),
            position,
            time,
        })
        .collect())
}

#[derive(Debug, Deserialize)]
struct RobotRow {
    id: usize,
    x_m: f64,
    y_m: f64,
    vmax_mps: f64,
}

/// Reads an `id,x_m,y_m,vmax_mps` CSV.
pub fn robots_from_csv<R: Read>(reader: R) -> Result<Vec<Robot>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut robots = Vec::new();
    for row in rdr.deserialize() {
        let r: RobotRow = row?;
        robots.push(Robot::new(r.id, Point::new(r.x_m, r.y_m), r.vmax_mps));
    }
    validate_team(&robots)?;
    Ok(robots)
}

/// Non-empty, unique ids, one common positive speed.
pub fn validate_team(robots: &[Robot]) -> Result<()> {
    let first = robots.first().ok_or_else(|| Error::InvalidRobots("no robots".into()))?;
    let mut ids = std::collections::HashSet::new();
    for r in robots {
        if !(r.v_max.is_finite() && r.v_max > 0.0) {
            return Err(Error::InvalidRobots(format!("robot {} has v_max {}", r.id, r.v_max)));
        }
        if r.v_max != first.v_max {
            return Err(Error::InvalidRobots(format!(
                "team must be homogeneous: robot {} has v_max {} but robot {} has {}",
                r.id, r.v_max, first.id, first.v_max
            )));
        }
        if !ids.insert(r.id) {
            return Err(Error::InvalidRobots(format!("duplicate robot id {}", r.id)));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn happy_birthday_tasks() {
        let arena = Arena::default_piano();
        let tasks = score_to_tasks(&Score::happy_birthday(), &arena).unwrap();
        assert_eq!(tasks.len(), 24);
        assert_eq!((tasks[0].note.as_deref(), tasks[0].time), (Some("G3"), 105.0));
        assert_eq!((tasks[23].note.as_deref(), tasks[23].time), (Some("D4"), 300.0));
        assert_eq!(tasks[23].id, 24);
        for t in &tasks {
            let lane = arena.lane_for_note(t.note.as_deref().unwrap()).unwrap();
            assert_eq!(t.position, lane.midpoint);
            assert_eq!(t.lane, Some(lane.index));
        }
    }

    #[test]
    fn empty_score_rejected() {
        assert!(matches!(Score::new(vec![], 1.0), Err(Error::EmptyScore)));
        assert!(matches!(Score::from_csv("note,time_s\n".as_bytes(), 1.0), Err(Error::EmptyScore)));
    }

    #[test]
    fn unsorted_entries_are_sorted_stably() {
        let arena = Arena::default_piano();
        let csv = "note,time_s\nC4,10\nG3,5\nE4,5\nA3,1\n";
        let tasks = score_to_tasks(&Score::from_csv(csv.as_bytes(), 1.0).unwrap(), &arena).unwrap();
        let got: Vec<(usize, &str, f64)> =
            tasks.iter().map(|t| (t.id, t.note.as_deref().unwrap(), t.time)).collect();
        assert_eq!(got, vec![(1, "A3", 1.0), (2, "G3", 5.0), (3, "E4", 5.0), (4, "C4", 10.0)]);
    }

    #[test]
    fn time_scale_applied_at_ingestion() {
        let arena = Arena::default_piano();
        let score = Score::from_csv("note,time_s\nG3,10.5\n".as_bytes(), 10.0).unwrap();
        assert_eq!(score_to_tasks(&score, &arena).unwrap()[0].time, 105.0);
    }

    #[test]
    fn unknown_note_names_row() {
        let arena = Arena::default_piano();
        let score = Score::from_csv("note,time_s\nG3,1\nF#2,2\n".as_bytes(), 1.0).unwrap();
        match score_to_tasks(&score, &arena) {
            Err(Error::UnknownScoreNote { row, note }) => assert_eq!((row, note.as_str()), (2, "F#2")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn nonpositive_times_rejected() {
        assert!(Score::from_csv("note,time_s\nG3,0\n".as_bytes(), 1.0).is_err());
        assert!(Score::from_csv("note,time_s\nG3,-1\n".as_bytes(), 1.0).is_err());
        assert!(Score::from_csv("pitch,t\nG3,1\n".as_bytes(), 1.0).is_err());
    }

    #[test]
    fn ingestion_is_bit_stable() {
        let arena = Arena::default_piano();
        let a = score_to_tasks(&Score::happy_birthday(), &arena).unwrap();
        let b = score_to_tasks(&Score::happy_birthday(), &arena).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn robots_csv() {
        let robots = robots_from_csv("id,x_m,y_m,vmax_mps\n1,0.35,1.8,0.5\n2,1.0,1.8,0.5\n".as_bytes()).unwrap();
        assert_eq!(robots.len(), 2);
        assert!(!robots[0].spawned);
        assert!(robots_from_csv("id,x_m,y_m,vmax_mps\n1,0,0,0.5\n2,0,0,0.4\n".as_bytes()).is_err());
        assert!(robots_from_csv("id,x_m,y_m,vmax_mps\n1,0,0,0.5\n1,1,0,0.5\n".as_bytes()).is_err());
        assert!(robots_from_csv("id,x_m,y_m,vmax_mps\n1,0,0,0\n".as_bytes()).is_err());
    }
}
