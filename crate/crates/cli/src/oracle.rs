//! Independent checks on the planner's team size and cost.
//!
//! The matching oracle counts the fewest robots able to cover every task
//! from the feasibility pattern alone (minimum path cover on the task DAG).
//! The brute-force oracle enumerates every way to chain tasks onto the given
//! robots plus freshly added ones and keeps the best by (added robots, cost).

use dream_core::cost::{CostKind, CostModel};
use dream_core::model::{Robot, Task};
use serde::Serialize;

use crate::generate::OpenInstance;

pub const ORACLE_MAX_ROBOTS: usize = 3;
pub const ORACLE_MAX_TASKS: usize = 6;

/// Fewest robots for which every task has a feasible predecessor (an
/// original robot's start or an earlier task), via Kuhn's augmenting paths.
pub fn min_team_matching(model: &CostModel) -> usize {
    let n = model.c_first.len();
    let m = model.c_first.first().map_or(0, Vec::len);
    // Left side: robots then predecessor tasks. Right side: tasks.
    let mut adj: Vec<Vec<usize>> = Vec::with_capacity(n + m);
    for row in model.c_first.iter().chain(&model.c_subsequent) {
        adj.push((0..m).filter(|&j| row[j].kind() == CostKind::Feasible).collect());
    }
    let mut owner: Vec<Option<usize>> = vec![None; m];
    let mut matched = 0;
    for left in 0..adj.len() {
        let mut seen = vec![false; m];
        if augment(left, &adj, &mut owner, &mut seen) {
            matched += 1;
        }
    }
    n + m - matched
}

fn augment(left: usize, adj: &[Vec<usize>], owner: &mut [Option<usize>], seen: &mut [bool]) -> bool {
    for &j in &adj[left] {
        if seen[j] {
            continue;
        }
        seen[j] = true;
        if owner[j].is_none_or(|other| augment(other, adj, owner, seen)) {
            owner[j] = Some(left);
            return true;
        }
    }
    false
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Optimum {
    pub team_size: usize,
    pub total_cost: f64,
}

#[derive(Debug, thiserror::Error)]
#[error("brute force handles at most {max_robots} robots and {max_tasks} tasks, got {robots} and {tasks}")]
pub struct TooLarge {
    pub robots: usize,
    pub tasks: usize,
    pub max_robots: usize,
    pub max_tasks: usize,
}

struct Search<'a> {
    tasks: &'a [Task],
    v: f64,
    /// (position, free time) of each original robot once used.
    robots: Vec<Option<(dream_core::geometry::Point, f64)>>,
    starts: &'a [Robot],
    fresh: Vec<(dream_core::geometry::Point, f64)>,
    best: Option<(usize, f64)>,
}

impl Search<'_> {
    fn better(&self, fresh: usize, cost: f64) -> bool {
        match self.best {
            None => true,
            Some((bf, bc)) => fresh < bf || (fresh == bf && cost < bc),
        }
    }

    fn dfs(&mut self, next: usize, cost: f64) {
        if !self.better(self.fresh.len(), cost) {
            return;
        }
        let Some(task) = self.tasks.get(next) else {
            self.best = Some((self.fresh.len(), cost));
            return;
        };
        let (p, t) = (task.position, task.time);
        for r in 0..self.robots.len() {
            let prev = self.robots[r];
            let d = match prev {
                None => {
                    let d = self.starts[r].start.distance(p);
                    if d / self.v > t {
                        continue;
                    }
                    d
                }
                Some((q, s)) => {
                    let d = q.distance(p);
                    if t <= s || t - s < d / self.v {
                        continue;
                    }
                    d
                }
            };
            self.robots[r] = Some((p, t));
            self.dfs(next + 1, cost + d);
            self.robots[r] = prev;
        }
        for f in 0..self.fresh.len() {
            let (q, s) = self.fresh[f];
            let d = q.distance(p);
            if t <= s || t - s < d / self.v {
                continue;
            }
            self.fresh[f] = (p, t);
            self.dfs(next + 1, cost + d);
            self.fresh[f] = (q, s);
        }
        self.fresh.push((p, t));
        self.dfs(next + 1, cost);
        self.fresh.pop();
    }
}

/// Straight-line travel at the team's common speed. An added robot starts on
/// its first task, so its first leg is free. Tasks must be in time order.
pub fn brute_force_optimum(robots: &[Robot], tasks: &[Task]) -> Result<Optimum, TooLarge> {
    if robots.len() > ORACLE_MAX_ROBOTS || tasks.len() > ORACLE_MAX_TASKS {
        return Err(TooLarge {
            robots: robots.len(),
            tasks: tasks.len(),
            max_robots: ORACLE_MAX_ROBOTS,
            max_tasks: ORACLE_MAX_TASKS,
        });
    }
    let mut search = Search {
        tasks,
        v: robots.first().map_or(1.0, |r| r.v_max),
        robots: vec![None; robots.len()],
        starts: robots,
        fresh: Vec::new(),
        best: None,
    };
    search.dfs(0, 0.0);
    let (fresh, cost) = search.best.expect("adding robots always covers every task");
    Ok(Optimum { team_size: robots.len() + fresh, total_cost: cost })
}

#[derive(Debug, Clone, Serialize)]
pub struct Comparison {
    pub seed: u64,
    pub robots: usize,
    pub tasks: usize,
    pub oracle: Optimum,
    pub dream: Optimum,
    pub solver_calls: usize,
    pub team_matches: bool,
    pub cost_matches: bool,
}

/// Relative tolerance for cost equality.
pub const COST_RTOL: f64 = 1e-9;

pub fn costs_match(a: f64, b: f64) -> bool {
    (a - b).abs() <= COST_RTOL * a.abs().max(b.abs()).max(1.0)
}

pub fn compare_open(seed: u64, inst: &OpenInstance) -> Result<Comparison, crate::CliError> {
    let oracle = brute_force_optimum(&inst.robots, &inst.tasks).map_err(|e| crate::CliError::Input(e.to_string()))?;
    let mut ws = dream_core::workspace::OpenWorkspace::new(inst.bounds);
    let plan = dream_core::dream::solve_stmta(&inst.robots, &inst.tasks, &mut ws)?;
    let dream = Optimum { team_size: plan.team_size(), total_cost: plan.total_cost };
    Ok(Comparison {
        seed,
        robots: inst.robots.len(),
        tasks: inst.tasks.len(),
        oracle,
        dream,
        solver_calls: plan.solver_calls,
        team_matches: oracle.team_size == dream.team_size,
        cost_matches: costs_match(oracle.total_cost, dream.total_cost),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use dream_core::cost::build_cost_model;
    use dream_core::geometry::{Point, Rect};
    use dream_core::workspace::OpenWorkspace;

    fn open() -> OpenWorkspace {
        OpenWorkspace::new(Rect::new(Point::new(0.0, 0.0), Point::new(10.0, 10.0)))
    }

    #[test]
    fn simultaneous_distant_tasks_need_two() {
        let robots = vec![Robot::new(1, Point::new(5.0, 5.0), 0.5)];
        let tasks = vec![Task::at(1, Point::new(0.0, 0.0), 20.0), Task::at(2, Point::new(10.0, 10.0), 20.0)];
        assert_eq!(brute_force_optimum(&robots, &tasks).unwrap().team_size, 2);
        let model = build_cost_model(&robots, &tasks, &open()).unwrap();
        assert_eq!(min_team_matching(&model), 2);
    }

    #[test]
    fn one_robot_chains_reachable_tasks() {
        let robots = vec![Robot::new(1, Point::new(0.0, 0.0), 1.0)];
        let tasks = vec![Task::at(1, Point::new(3.0, 4.0), 5.0), Task::at(2, Point::new(3.0, 0.0), 9.0)];
        let best = brute_force_optimum(&robots, &tasks).unwrap();
        assert_eq!(best, Optimum { team_size: 1, total_cost: 9.0 });
        let model = build_cost_model(&robots, &tasks, &open()).unwrap();
        assert_eq!(min_team_matching(&model), 1);
    }

    #[test]
    fn fresh_robot_starts_for_free() {
        let robots = vec![Robot::new(1, Point::new(0.0, 0.0), 1.0)];
        let tasks = vec![Task::at(1, Point::new(9.0, 0.0), 1.0)];
        assert_eq!(brute_force_optimum(&robots, &tasks).unwrap(), Optimum { team_size: 2, total_cost: 0.0 });
    }

    #[test]
    fn rejects_large_instances() {
        let robots = vec![Robot::new(1, Point::new(0.0, 0.0), 1.0)];
        let tasks: Vec<Task> = (1..=7).map(|i| Task::at(i, Point::new(0.0, 0.0), i as f64)).collect();
        assert!(brute_force_optimum(&robots, &tasks).is_err());
    }

    #[test]
    fn tolerance_is_relative() {
        assert!(costs_match(1e6, 1e6 + 1e-4));
        assert!(!costs_match(1.0, 1.0 + 1e-6));
    }
}
