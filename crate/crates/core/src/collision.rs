//! Continuous-time conflict detection between timed trajectories.

use serde::Serialize;

use crate::arena::{Arena, Region};
use crate::dream::TimedTrajectory;
use crate::geometry::Point;

/// Default robot radius for footprint checks, meters.
pub const DEFAULT_ROBOT_RADIUS_M: f64 = 0.105;

/// Point-robot clearance used for the collision-freedom checks.
pub const POINT_CLEARANCE_M: f64 = 1e-6;

const TIME_EPS: f64 = 1e-9;

/// Constant-velocity motion (or a wait) over a closed time interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimedSegment {
    pub start: Point,
    pub end: Point,
    pub t0: f64,
    pub t1: f64,
    pub speed: f64,
}

impl TimedSegment {
    pub fn new(start: Point, end: Point, t0: f64, t1: f64) -> Self {
        let d = start.distance(end);
        let speed = if d == 0.0 {
            0.0
        } else if t1 > t0 {
            d / (t1 - t0)
        } else {
            f64::INFINITY
        };
        Self { start, end, t0, t1, speed }
    }

    pub fn wait(at: Point, t0: f64, t1: f64) -> Self {
        Self::new(at, at, t0, t1)
    }

    pub fn is_stationary(&self) -> bool {
        self.start == self.end
    }

    pub fn position_at(&self, t: f64) -> Point {
        if self.is_stationary() || self.t1 <= self.t0 {
            return self.start;
        }
        self.start.lerp(self.end, ((t - self.t0) / (self.t1 - self.t0)).clamp(0.0, 1.0))
    }

    fn velocity(&self) -> Point {
        if self.is_stationary() || self.t1 <= self.t0 {
            Point::new(0.0, 0.0)
        } else {
            (self.end - self.start) * (1.0 / (self.t1 - self.t0))
        }
    }

    /// Pieces split where the path crosses any of the given heights.
    fn split_at_heights(&self, heights: &[f64]) -> Vec<TimedSegment> {
        let (y0, y1) = (self.start.y, self.end.y);
        let mut cuts: Vec<f64> = heights
            .iter()
            .filter(|&&h| (y0 < h && h < y1) || (y1 < h && h < y0))
            .map(|&h| (h - y0) / (y1 - y0))
            .collect();
        cuts.sort_by(f64::total_cmp);
        let mut pieces = Vec::with_capacity(cuts.len() + 1);
        let (mut p, mut t) = (self.start, self.t0);
        for s in cuts {
            let q = self.start.lerp(self.end, s);
            let u = self.t0 + (self.t1 - self.t0) * s;
            pieces.push(TimedSegment::new(p, q, t, u));
            (p, t) = (q, u);
        }
        pieces.push(TimedSegment::new(p, self.end, t, self.t1));
        pieces
    }
}

/// Closest approach of two segments over their common time interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Approach {
    pub distance: f64,
    pub time: f64,
    /// Midpoint of the two positions at `time`.
    pub point: Point,
}

/// Exact minimum distance over the overlap of the two time intervals, or
/// `None` when the intervals do not overlap.
pub fn cpa(a: &TimedSegment, b: &TimedSegment) -> Option<Approach> {
    let lo = a.t0.max(b.t0);
    let hi = a.t1.min(b.t1);
    if lo > hi {
        return None;
    }
    let pa = a.position_at(lo);
    let pb = b.position_at(lo);
    let r0 = pb - pa;
    let w = b.velocity() - a.velocity();
    let ww = w.dot(w);
    let s = if ww > 0.0 { (-(r0.dot(w)) / ww).clamp(0.0, hi - lo) } else { 0.0 };
    let time = lo + s;
    let (qa, qb) = if s == 0.0 { (pa, pb) } else { (a.position_at(time), b.position_at(time)) };
    Some(Approach { distance: qa.distance(qb), time, point: (qa + qb) * 0.5 })
}

/// Exact contact between a mover and a stationary robot lying on the mover's
/// line of travel: an optimal plan can produce this when no strictly cheaper
/// swap exists, so it is listed apart from conflicts.
fn is_collinear_contact(a: &TimedSegment, b: &TimedSegment, approach: &Approach) -> bool {
    if approach.distance != 0.0 {
        return false;
    }
    let on_line = |mover: &TimedSegment, q: Point| (mover.end - mover.start).cross(q - mover.start) == 0.0;
    match (a.is_stationary(), b.is_stationary()) {
        (true, false) => on_line(b, a.start),
        (false, true) => on_line(a, b.start),
        _ => false,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Conflict {
    pub robot_a: usize,
    pub robot_b: usize,
    pub point: Point,
    pub time: f64,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConflictReport {
    pub clearance: f64,
    pub conflicts: Vec<Conflict>,
    /// Exact-zero contacts with collinear geometry, listed apart from conflicts.
    pub degenerate: Vec<Conflict>,
}

impl ConflictReport {
    pub fn is_clear(&self) -> bool {
        self.conflicts.is_empty()
    }
}

/// Latest time any trajectory still has a scheduled waypoint.
pub fn horizon(trajectories: &[TimedTrajectory]) -> f64 {
    trajectories.iter().map(TimedTrajectory::end_time).fold(0.0, f64::max)
}

/// Waits and moves of one trajectory, held at its final point until `until`.
pub fn segments(traj: &TimedTrajectory, until: f64) -> Vec<TimedSegment> {
    let w = &traj.waypoints;
    let mut out = Vec::with_capacity(2 * w.len());
    for (i, wp) in w.iter().enumerate() {
        if wp.depart > wp.arrive || (i == 0 && w.len() == 1) {
            out.push(TimedSegment::wait(wp.position, wp.arrive, wp.depart));
        }
        if let Some(next) = w.get(i + 1) {
            out.push(TimedSegment::new(wp.position, next.position, wp.depart, next.arrive));
        }
    }
    let end = traj.end_time();
    if until > end {
        out.push(TimedSegment::wait(traj.final_position(), end, until));
    }
    out
}

fn pairwise(
    groups: &[(usize, Vec<TimedSegment>)],
    clearance: f64,
    conflicts: &mut Vec<Conflict>,
    mut degenerate: Option<&mut Vec<Conflict>>,
) {
    for (i, (ra, sa)) in groups.iter().enumerate() {
        for (rb, sb) in &groups[i + 1..] {
            if ra == rb {
                continue;
            }
            for a in sa {
                for b in sb {
                    let Some(ap) = cpa(a, b) else { continue };
                    if ap.distance >= clearance {
                        continue;
                    }
                    let c = Conflict { robot_a: *ra, robot_b: *rb, point: ap.point, time: ap.time, distance: ap.distance };
                    match degenerate.as_deref_mut() {
                        Some(list) if is_collinear_contact(a, b, &ap) => list.push(c),
                        _ => conflicts.push(c),
                    }
                }
            }
        }
    }
}

/// Checks every segment pair across distinct robots. Robots hold their last
/// position until the latest trajectory ends.
pub fn verify_plan(trajectories: &[TimedTrajectory], clearance: f64) -> ConflictReport {
    let until = horizon(trajectories);
    let groups: Vec<(usize, Vec<TimedSegment>)> =
        trajectories.iter().map(|t| (t.robot_id, segments(t, until))).collect();
    let mut conflicts = Vec::new();
    let mut degenerate = Vec::new();
    pairwise(&groups, clearance, &mut conflicts, Some(&mut degenerate));
    ConflictReport { clearance, conflicts, degenerate }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RegionViolation {
    /// In the lane band outside any of the robot's own crossing windows.
    OutsideWindow { robot: usize, t0: f64, t1: f64, point: Point },
    /// Two robots in one lane's band strip at overlapping times.
    SharedLane { lane: usize, robot_a: usize, robot_b: usize, t0: f64, t1: f64 },
    /// Closer than the clearance inside the region above or below the band.
    Clearance { region: Region, conflict: Conflict },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionReport {
    pub clearance: f64,
    pub violations: Vec<RegionViolation>,
}

impl RegionReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Band occupancy and open-region clearance checks for a lane arena.
pub fn verify_regions(trajectories: &[TimedTrajectory], arena: &Arena, clearance: f64) -> RegionReport {
    let until = horizon(trajectories);
    let band = arena.omega3_band;
    let half_lane = arena.config.lane_length / 2.0;
    let mut violations = Vec::new();
    let mut above = Vec::new();
    let mut below = Vec::new();
    // (lane, robot, t0, t1)
    let mut lane_use: Vec<(usize, usize, f64, f64)> = Vec::new();

    for traj in trajectories {
        let windows: Vec<(usize, f64, f64)> = traj
            .note_crossings
            .iter()
            .filter_map(|c| {
                let w = half_lane / traj.v_max;
                c.lane.map(|l| (l, c.time - w, c.time + w))
            })
            .collect();
        let mut mine_above = Vec::new();
        let mut mine_below = Vec::new();
        for seg in segments(traj, until) {
            for piece in seg.split_at_heights(&[band.lo, band.hi]) {
                let mid = piece.start.lerp(piece.end, 0.5);
                match arena.region_of_y(mid.y) {
                    Region::Omega1 => mine_above.push(piece),
                    Region::Omega2 => mine_below.push(piece),
                    Region::Omega3 => {
                        let inside = windows.iter().find(|&&(l, w0, w1)| {
                            piece.t0 >= w0 - TIME_EPS
                                && piece.t1 <= w1 + TIME_EPS
                                && arena.lanes[l].contains_x(piece.start.x)
                                && arena.lanes[l].contains_x(piece.end.x)
                        });
                        match inside {
                            Some(&(l, _, _)) => lane_use.push((l, traj.robot_id, piece.t0, piece.t1)),
                            None => violations.push(RegionViolation::OutsideWindow {
                                robot: traj.robot_id,
                                t0: piece.t0,
                                t1: piece.t1,
                                point: mid,
                            }),
                        }
                    }
                }
            }
        }
        above.push((traj.robot_id, mine_above));
        below.push((traj.robot_id, mine_below));
    }

    for (i, &(la, ra, a0, a1)) in lane_use.iter().enumerate() {
        for &(lb, rb, b0, b1) in &lane_use[i + 1..] {
            if la == lb && ra != rb && a0.max(b0) < a1.min(b1) {
                violations.push(RegionViolation::SharedLane {
                    lane: la,
                    robot_a: ra,
                    robot_b: rb,
                    t0: a0.max(b0),
                    t1: a1.min(b1),
                });
            }
        }
    }

    for (region, groups) in [(Region::Omega1, &above), (Region::Omega2, &below)] {
        let mut found = Vec::new();
        pairwise(groups, clearance, &mut found, None);
        violations.extend(found.into_iter().map(|conflict| RegionViolation::Clearance { region, conflict }));
    }
    RegionReport { clearance, violations }
}
