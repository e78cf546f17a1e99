//! Two-step planning: solve once with κ-penalized entries, add one robot per
//! κ choice, solve once more. Also sequence extraction and timed trajectories.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::arena::Arena;
use crate::assignment::{solve, AssignmentSolution};
use crate::cost::{assemble_with, build_cost_model, check_tasks, Augmentation, RowKey};
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::model::{validate_team, Robot, Task};
use crate::pathfind::shortest_path;
use crate::workspace::Workspace;

/// Slack for comparing arrival times against deadlines.
const TIME_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Plan {
    /// Original robots followed by spawned ones.
    pub team: Vec<Robot>,
    /// Task ids per team member, in execution order.
    pub sequences: Vec<Vec<usize>>,
    pub q_spawned: usize,
    pub solver_calls: usize,
    /// Tasks whose first-solve choice was κ, in column order.
    pub kappa_tasks: Vec<usize>,
    #[serde(rename = "total_cost_m")]
    pub total_cost: f64,
}

impl Plan {
    pub fn team_size(&self) -> usize {
        self.team.len()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Chains first-task roots through successor links into one sequence per robot.
pub fn extract_sequences(
    solution: &AssignmentSolution,
    row_map: &[RowKey],
    n_robots: usize,
) -> Result<Vec<Vec<usize>>> {
    let n_tasks = solution.column_to_row.len();
    let mut first = vec![None; n_robots];
    let mut next: HashMap<usize, usize> = HashMap::new();
    for (col, &row) in solution.column_to_row.iter().enumerate() {
        let task = col + 1;
        match row_map.get(row) {
            Some(&RowKey::Robot(i)) if i < n_robots => first[i] = Some(task),
            Some(&RowKey::Task(k)) => {
                next.insert(k, task);
            }
            _ => return Err(Error::Invariant(format!("row {row} is not in the row map"))),
        }
    }
    let mut seen = vec![false; n_tasks + 1];
    let mut sequences = Vec::with_capacity(n_robots);
    for root in first {
        let mut seq = Vec::new();
        let mut cur = root;
        while let Some(t) = cur {
            if seen[t] {
                return Err(Error::Invariant(format!("task {t} reached twice while chaining successors")));
            }
            seen[t] = true;
            seq.push(t);
            cur = next.get(&t).copied();
        }
        sequences.push(seq);
    }
    if let Some(t) = (1..=n_tasks).find(|&t| !seen[t]) {
        return Err(Error::Invariant(format!("task {t} lies on a successor cycle")));
    }
    Ok(sequences)
}

fn solve_once<W: Workspace + ?Sized>(
    team: &[Robot],
    tasks: &[Task],
    ws: &W,
    augmentation: Augmentation,
) -> Result<(AssignmentSolution, Vec<RowKey>, Vec<usize>)> {
    let model = build_cost_model(team, tasks, ws)?;
    let matrix = assemble_with(&model, team.len(), tasks.len(), augmentation)?;
    let solution = solve(&matrix)?;
    let kappa: Vec<usize> = solution.kappa_columns(&matrix).map(|c| matrix.task_id(c)).collect();
    Ok((solution, matrix.row_map, kappa))
}

/// Minimum team and optimal assignment with at most two solver calls.
pub fn solve_stmta<W: Workspace + ?Sized>(robots: &[Robot], tasks: &[Task], ws: &mut W) -> Result<Plan> {
    solve_stmta_with(robots, tasks, ws, Augmentation::default())
}

/// `solve_stmta` with an explicit matrix layout.
pub fn solve_stmta_with<W: Workspace + ?Sized>(
    robots: &[Robot],
    tasks: &[Task],
    ws: &mut W,
    augmentation: Augmentation,
) -> Result<Plan> {
    validate_team(robots)?;
    check_tasks(tasks)?;
    for r in robots {
        ws.register_robot(r)?;
    }
    let mut team = robots.to_vec();
    let (mut solution, mut row_map, kappa_tasks) = solve_once(&team, tasks, ws, augmentation)?;
    let mut solver_calls = 1;
    let q = kappa_tasks.len();

    if q > 0 {
        let v_max = robots[0].v_max;
        let mut next_id = team.iter().map(|r| r.id).max().unwrap_or(0) + 1;
        let mut placed: Vec<usize> = Vec::new();
        for &task_id in &kappa_tasks {
            let task = &tasks[task_id - 1];
            let ordinal = placed.iter().filter(|&&t| ws_same_spot(&tasks[t - 1], task)).count();
            placed.push(task_id);
            let robot = Robot { id: next_id, start: ws.spawn_point(task, ordinal, next_id)?, v_max, spawned: true };
            next_id += 1;
            ws.register_robot(&robot)?;
            team.push(robot);
        }
        (solution, row_map, _) = solve_once(&team, tasks, ws, augmentation)?;
        solver_calls += 1;
        if solution.kappa_count > 0 {
            return Err(Error::Invariant(format!(
                "{} κ choices remain after adding {q} robots",
                solution.kappa_count
            )));
        }
    }

    let sequences = extract_sequences(&solution, &row_map, team.len())?;
    Ok(Plan { team, sequences, q_spawned: q, solver_calls, kappa_tasks, total_cost: solution.total_cost })
}

/// Two κ tasks share a spawn spot when they sit on the same lane or point.
fn ws_same_spot(a: &Task, b: &Task) -> bool {
    match (a.lane, b.lane) {
        (Some(x), Some(y)) => x == y,
        _ => a.position == b.position,
    }
}

/// How a robot spends slack time before a task.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MotionProfile {
    /// Leave immediately at full speed, then wait at the destination.
    Eager,
    /// Leave immediately at the constant speed that arrives just in time.
    Uniform,
    /// Drive at full speed and spend spare time at a robot-specific holding
    /// spot just off the waiting point; park there after the last task.
    /// Falls back to `Uniform` on legs without slack for the detour.
    #[default]
    Dwell,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Waypoint {
    pub position: Point,
    pub arrive: f64,
    pub depart: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoteCrossing {
    pub task_id: usize,
    pub lane: Option<usize>,
    pub time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimedTrajectory {
    pub robot_id: usize,
    pub v_max: f64,
    pub waypoints: Vec<Waypoint>,
    pub note_crossings: Vec<NoteCrossing>,
}

impl TimedTrajectory {
    fn stationary(robot: &Robot) -> Self {
        Self {
            robot_id: robot.id,
            v_max: robot.v_max,
            waypoints: vec![Waypoint { position: robot.start, arrive: 0.0, depart: 0.0 }],
            note_crossings: Vec::new(),
        }
    }

    pub fn end_time(&self) -> f64 {
        self.waypoints.last().map_or(0.0, |w| w.depart)
    }

    pub fn final_position(&self) -> Point {
        self.waypoints.last().map_or(Point::new(0.0, 0.0), |w| w.position)
    }

    /// Fastest segment speed.
    pub fn max_speed(&self) -> f64 {
        self.waypoints
            .windows(2)
            .filter_map(|w| {
                let dt = w[1].arrive - w[0].depart;
                let d = w[0].position.distance(w[1].position);
                (d > 0.0).then(|| if dt > 0.0 { d / dt } else { f64::INFINITY })
            })
            .fold(0.0, f64::max)
    }

    /// Position at time `t`; holds at the start before 0 and at the end after the last waypoint.
    pub fn position_at(&self, t: f64) -> Point {
        let w = &self.waypoints;
        if t <= w[0].depart {
            return w[0].position;
        }
        for pair in w.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            if t <= b.arrive {
                let span = b.arrive - a.depart;
                let s = if span > 0.0 { ((t - a.depart) / span).clamp(0.0, 1.0) } else { 1.0 };
                return a.position.lerp(b.position, s);
            }
            if t <= b.depart {
                return b.position;
            }
        }
        self.final_position()
    }

    /// Appends a move along `points` from the current position, leaving at
    /// `leave` and arriving at `arrive` with speed constant along the polyline.
    fn travel(&mut self, points: &[Point], leave: f64, arrive: f64) {
        self.hold_until(leave);
        let last = *self.waypoints.last().expect("trajectory has a start waypoint");
        let mut legs: Vec<Point> = Vec::with_capacity(points.len());
        for &p in points {
            if p != legs.last().copied().unwrap_or(last.position) {
                legs.push(p);
            }
        }
        let total = polyline_length(last.position, &legs);
        let mut covered = 0.0;
        let mut prev = last.position;
        let n = legs.len();
        for (i, p) in legs.into_iter().enumerate() {
            covered += prev.distance(p);
            prev = p;
            let t = if i + 1 == n { arrive } else { last.depart + (arrive - last.depart) * covered / total };
            self.waypoints.push(Waypoint { position: p, arrive: t, depart: t });
        }
    }

    /// Holds the current position until `t`.
    fn hold_until(&mut self, t: f64) {
        let last = self.waypoints.last_mut().expect("trajectory has a start waypoint");
        last.depart = last.depart.max(t);
    }
}

fn polyline_length(from: Point, points: &[Point]) -> f64 {
    let mut prev = from;
    let mut len = 0.0;
    for &p in points {
        len += prev.distance(p);
        prev = p;
    }
    len
}

/// Leg timing under a profile: (leave, arrive) for a move of `length` meters
/// available from `free_at` that must end by `deadline`.
fn leg_times(
    profile: MotionProfile,
    length: f64,
    v_max: f64,
    free_at: f64,
    deadline: f64,
    robot: &Robot,
    task: &Task,
) -> Result<(f64, f64)> {
    let fastest = free_at + length / v_max;
    if fastest > deadline + TIME_EPS {
        return Err(Error::InfeasibleTrajectory { robot_id: robot.id, task_id: task.id, late_s: fastest - deadline });
    }
    if length == 0.0 {
        return Ok((free_at, free_at));
    }
    Ok(match profile {
        MotionProfile::Eager => (free_at, fastest.min(deadline)),
        MotionProfile::Uniform | MotionProfile::Dwell => (free_at, deadline.max(free_at)),
    })
}

fn task_of(tasks: &[Task], id: usize) -> Result<&Task> {
    tasks.get(id.wrapping_sub(1)).filter(|t| t.id == id).ok_or_else(|| Error::Invariant(format!("unknown task id {id}")))
}

/// Lane-crossing trajectory: approach the entry on the current side, wait
/// until `t_j − τ`, cross at full speed through the midpoint at `t_j`, and
/// exit on the far side.
pub fn generate_trajectory(
    robot: &Robot,
    sequence: &[usize],
    arena: &Arena,
    tasks: &[Task],
    profile: MotionProfile,
) -> Result<TimedTrajectory> {
    let mut traj = TimedTrajectory::stationary(robot);
    if sequence.is_empty() {
        return Ok(traj);
    }
    let mut side = arena.region_of(robot.start)?.side().ok_or_else(|| {
        Error::InvalidRobots(format!("robot {} starts inside the lane band", robot.id))
    })?;
    let v = robot.v_max;
    let tau = arena.config.half_trip() / v;
    let mut pos = robot.start;
    let mut free_at = 0.0;
    for &id in sequence {
        let task = task_of(tasks, id)?;
        let lane = &arena.lanes[task.lane_index()?];
        let entry = lane.entry(side);
        let exit = lane.entry(side.opposite());
        let path = shortest_path(arena, pos, entry)?;
        let enter_at = task.time - tau;
        let length = polyline_length(pos, &path.points);
        let (leave, arrive) = leg_times(profile, length, v, free_at, enter_at, robot, task)?;
        let slack = enter_at - free_at - length / v;
        let hold = match profile {
            MotionProfile::Dwell => arena.holding_spot(entry, side, robot.id)
                .filter(|h| 2.0 * h.distance(entry) / v <= slack),
            _ => None,
        };
        match hold {
            Some(h) => {
                let reach = free_at + length / v;
                traj.travel(&path.points, free_at, reach);
                let step = h.distance(entry) / v;
                traj.travel(&[h], reach, reach + step);
                traj.travel(&[entry], enter_at - step, enter_at);
            }
            None => traj.travel(&path.points, leave, arrive),
        }
        traj.hold_until(enter_at);
        traj.travel(&[lane.midpoint], enter_at, task.time);
        traj.travel(&[exit], task.time, task.time + tau);
        traj.note_crossings.push(NoteCrossing { task_id: id, lane: Some(lane.index), time: task.time });
        pos = exit;
        free_at = task.time + tau;
        side = side.opposite();
    }
    if profile == MotionProfile::Dwell {
        if let Some(h) = arena.holding_spot(pos, side, robot.id) {
            traj.travel(&[h], free_at, free_at + h.distance(pos) / v);
        }
    }
    Ok(traj)
}

/// Straight-line trajectory through task positions in an open workspace,
/// reaching each position exactly at its task time.
pub fn generate_direct_trajectory(
    robot: &Robot,
    sequence: &[usize],
    tasks: &[Task],
    profile: MotionProfile,
) -> Result<TimedTrajectory> {
    let mut traj = TimedTrajectory::stationary(robot);
    let mut pos = robot.start;
    let mut free_at = 0.0;
    for &id in sequence {
        let task = task_of(tasks, id)?;
        let length = pos.distance(task.position);
        let (leave, arrive) = leg_times(profile, length, robot.v_max, free_at, task.time, robot, task)?;
        traj.travel(&[task.position], leave, arrive);
        traj.hold_until(task.time);
        traj.note_crossings.push(NoteCrossing { task_id: id, lane: task.lane, time: task.time });
        pos = task.position;
        free_at = task.time;
    }
    Ok(traj)
}

/// `robot_id,x_m,y_m,arrive_s,depart_s`, one row per waypoint.
pub fn write_trajectories_csv<W: std::io::Write>(trajectories: &[TimedTrajectory], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["robot_id", "x_m", "y_m", "arrive_s", "depart_s"])?;
    for t in trajectories {
        for p in &t.waypoints {
            w.write_record([
                t.robot_id.to_string(),
                p.position.x.to_string(),
                p.position.y.to_string(),
                p.arrive.to_string(),
                p.depart.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Trajectories for every team member of a lane-arena plan.
pub fn plan_trajectories(plan: &Plan, arena: &Arena, tasks: &[Task], profile: MotionProfile) -> Result<Vec<TimedTrajectory>> {
    plan.team
        .iter()
        .zip(&plan.sequences)
        .map(|(r, seq)| generate_trajectory(r, seq, arena, tasks, profile))
        .collect()
}

/// Trajectories for every team member of an open-workspace plan.
pub fn plan_direct_trajectories(plan: &Plan, tasks: &[Task], profile: MotionProfile) -> Result<Vec<TimedTrajectory>> {
    plan.team
        .iter()
        .zip(&plan.sequences)
        .map(|(r, seq)| generate_direct_trajectory(r, seq, tasks, profile))
        .collect()
}
