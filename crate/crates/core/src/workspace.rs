//! Travel distances between robots and tasks in a particular environment.

use crate::arena::{Arena, Side};
use crate::error::{Error, Result};
use crate::geometry::{Point, Rect};
use crate::model::{Robot, Task};
use crate::pathfind::{DistanceCache, KeyPoint};

/// The distances the cost model charges, and where added robots appear.
pub trait Workspace {
    /// Distance a robot covers from its start to complete `task`.
    fn first_distance(&self, robot: &Robot, task: &Task) -> Result<f64>;

    /// Distance a robot covers after finishing `from` to complete `to`.
    fn subsequent_distance(&self, from: &Task, to: &Task) -> Result<f64>;

    /// Start position for robot `robot_id`, added because of `task`;
    /// `ordinal` counts robots already added for the same spot.
    fn spawn_point(&self, task: &Task, ordinal: usize, robot_id: usize) -> Result<Point>;

    /// Makes a robot's start known to any distance cache.
    fn register_robot(&mut self, robot: &Robot) -> Result<()>;
}

/// Obstacle-free convex rectangle with straight-line travel.
#[derive(Debug, Clone, PartialEq)]
pub struct OpenWorkspace {
    pub bounds: Rect,
}

impl OpenWorkspace {
    pub fn new(bounds: Rect) -> Self {
        Self { bounds }
    }
}

impl Workspace for OpenWorkspace {
    fn first_distance(&self, robot: &Robot, task: &Task) -> Result<f64> {
        Ok(robot.start.distance(task.position))
    }

    fn subsequent_distance(&self, from: &Task, to: &Task) -> Result<f64> {
        Ok(from.position.distance(to.position))
    }

    fn spawn_point(&self, task: &Task, _ordinal: usize, _robot_id: usize) -> Result<Point> {
        Ok(task.position)
    }

    fn register_robot(&mut self, robot: &Robot) -> Result<()> {
        if !self.bounds.contains(robot.start) {
            return Err(Error::InvalidRobots(format!("robot {} starts outside the workspace", robot.id)));
        }
        Ok(())
    }
}

/// The lane arena. A task is completed by crossing its lane from one waiting
/// point to the other, so distances are the ones a robot actually drives:
/// grid path to the entry on its current side, then half a through-trip to the
/// midpoint; between tasks the remaining half-trip, the grid path along the
/// exit side from one lane to the next, and the next half-trip.
#[derive(Debug, Clone)]
pub struct PianoWorkspace {
    pub arena: Arena,
    pub cache: DistanceCache,
    starts: Vec<(usize, Side)>,
}

fn entry_key(side: Side, lane: usize) -> KeyPoint {
    match side {
        Side::Top => KeyPoint::TopEntry(lane),
        Side::Bottom => KeyPoint::BottomEntry(lane),
    }
}

impl PianoWorkspace {
    pub fn new(arena: Arena, robots: &[Robot]) -> Result<Self> {
        let cache = DistanceCache::for_arena(&arena, &[])?;
        let mut ws = Self { arena, cache, starts: Vec::new() };
        for r in robots {
            ws.register_robot(r)?;
        }
        Ok(ws)
    }

    /// Side of the lane band a registered robot starts on.
    pub fn start_side(&self, robot_id: usize) -> Result<Side> {
        self.starts
            .iter()
            .find(|(id, _)| *id == robot_id)
            .map(|&(_, s)| s)
            .ok_or(Error::UnregisteredKey(KeyPoint::Start(robot_id)))
    }

    /// Exit-side distance between two lanes' waiting points. The arena is
    /// mirror-symmetric, but the larger of the two sides is charged so the
    /// cost never undercuts either parity of crossing.
    fn lane_hop(&self, from: usize, to: usize) -> Result<f64> {
        let top = self.cache.distance(KeyPoint::TopEntry(from), KeyPoint::TopEntry(to))?;
        let bottom = self.cache.distance(KeyPoint::BottomEntry(from), KeyPoint::BottomEntry(to))?;
        Ok(top.max(bottom))
    }
}

impl Workspace for PianoWorkspace {
    fn first_distance(&self, robot: &Robot, task: &Task) -> Result<f64> {
        let side = self.start_side(robot.id)?;
        let lane = task.lane_index()?;
        let approach = self.cache.distance(KeyPoint::Start(robot.id), entry_key(side, lane))?;
        Ok(approach + self.arena.config.half_trip())
    }

    fn subsequent_distance(&self, from: &Task, to: &Task) -> Result<f64> {
        let (a, b) = (from.lane_index()?, to.lane_index()?);
        let through = self.arena.config.through_trip();
        if a == b {
            Ok(through)
        } else {
            Ok(through + self.lane_hop(a, b)?)
        }
    }

    /// The lane's top waiting point; a second robot for the same lane takes
    /// the bottom one and later ones start at their own top holding spot.
    fn spawn_point(&self, task: &Task, ordinal: usize, robot_id: usize) -> Result<Point> {
        let lane = &self.arena.lanes[task.lane_index()?];
        match ordinal {
            0 => Ok(lane.top_entry),
            1 => Ok(lane.bottom_entry),
            _ => self
                .arena
                .holding_spot(lane.top_entry, Side::Top, robot_id)
                .ok_or_else(|| Error::Invariant(format!("no free spawn spot above lane {}", lane.index))),
        }
    }

    fn register_robot(&mut self, robot: &Robot) -> Result<()> {
        let side = self.arena.region_of(robot.start)?.side().ok_or_else(|| {
            Error::InvalidRobots(format!("robot {} starts inside the lane band at {}", robot.id, robot.start))
        })?;
        self.cache.register(&self.arena, KeyPoint::Start(robot.id), robot.start)?;
        if !self.starts.iter().any(|(id, _)| *id == robot.id) {
            self.starts.push((robot.id, side));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{score_to_tasks, Score, ScoreEntry};

    fn tasks(arena: &Arena, notes: &[(&str, f64)]) -> Vec<Task> {
        let entries = notes.iter().map(|(n, t)| ScoreEntry { note: n.to_string(), time_s: *t }).collect();
        score_to_tasks(&Score::new(entries, 1.0).unwrap(), arena).unwrap()
    }

    #[test]
    fn first_cost_from_top_waiting_point() {
        let arena = Arena::default_piano();
        let start = arena.lanes[2].top_entry;
        let robot = Robot::new(1, start, 0.5);
        let t = tasks(&arena, &[("B3", 10.0)]);
        let ws = PianoWorkspace::new(arena, std::slice::from_ref(&robot)).unwrap();
        let d = ws.first_distance(&robot, &t[0]).unwrap();
        assert!((d - 0.4).abs() < 1e-12, "{d}");
    }

    #[test]
    fn same_lane_repeat_is_through_trip() {
        let arena = Arena::default_piano();
        let t = tasks(&arena, &[("C4", 1.0), ("C4", 5.0)]);
        let ws = PianoWorkspace::new(arena, &[]).unwrap();
        assert!((ws.subsequent_distance(&t[0], &t[1]).unwrap() - 0.8).abs() < 1e-12);
    }

    #[test]
    fn lane_hop_adds_waiting_point_distance() {
        let arena = Arena::default_piano();
        let pitch = arena.config.lane_width + arena.config.wall_thickness;
        let t = tasks(&arena, &[("C4", 1.0), ("D4", 5.0), ("G4", 9.0)]);
        let ws = PianoWorkspace::new(arena, &[]).unwrap();
        let adjacent = ws.subsequent_distance(&t[0], &t[1]).unwrap();
        assert!((adjacent - (0.8 + pitch)).abs() < 1e-9, "{adjacent}");
        let far = ws.subsequent_distance(&t[1], &t[2]).unwrap();
        assert!((far - (0.8 + 2.0 * pitch)).abs() < 1e-9, "{far}");
        assert_eq!(far, ws.subsequent_distance(&t[2], &t[1]).unwrap());
    }

    #[test]
    fn band_start_rejected() {
        let arena = Arena::default_piano();
        let mid = arena.lanes[0].midpoint;
        let err = PianoWorkspace::new(arena, &[Robot::new(1, mid, 0.5)]).unwrap_err();
        assert!(matches!(err, Error::InvalidRobots(_)));
    }

    #[test]
    fn bottom_start_uses_bottom_entry() {
        let arena = Arena::default_piano();
        let start = arena.lanes[0].bottom_entry;
        let robot = Robot::new(4, start, 0.5);
        let t = tasks(&arena, &[("G3", 3.0)]);
        let ws = PianoWorkspace::new(arena, std::slice::from_ref(&robot)).unwrap();
        assert_eq!(ws.start_side(4).unwrap(), Side::Bottom);
        assert!((ws.first_distance(&robot, &t[0]).unwrap() - 0.4).abs() < 1e-12);
    }

    #[test]
    fn open_workspace_is_euclidean() {
        let ws = OpenWorkspace::new(Rect::new(Point::new(0.0, 0.0), Point::new(10.0, 10.0)));
        let r = Robot::new(1, Point::new(0.0, 0.0), 1.0);
        let a = Task::at(1, Point::new(3.0, 4.0), 5.0);
        let b = Task::at(2, Point::new(3.0, 0.0), 9.0);
        assert_eq!(ws.first_distance(&r, &a).unwrap(), 5.0);
        assert_eq!(ws.subsequent_distance(&a, &b).unwrap(), 4.0);
        assert_eq!(ws.spawn_point(&b, 0, 9).unwrap(), b.position);
    }
}
