//! First-task and subsequent-task costs and the augmented assignment matrix.

use std::io::Write;

use serde::Serialize;

use crate::assignment::CostMatrix;
use crate::error::{Error, Result};
use crate::model::{Robot, Task};
use crate::workspace::Workspace;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CostKind {
    Feasible,
    /// Reachable in principle but not in time.
    Kappa,
    /// Violates time order; never assignable.
    Forbidden,
}

/// One cell of a cost table. Kappa cells keep the travel distance for audit;
/// their charged value is the model-wide κ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum CostEntry {
    Feasible { distance: f64 },
    Kappa { distance: f64 },
    Forbidden,
}

impl CostEntry {
    pub fn kind(self) -> CostKind {
        match self {
            CostEntry::Feasible { .. } => CostKind::Feasible,
            CostEntry::Kappa { .. } => CostKind::Kappa,
            CostEntry::Forbidden => CostKind::Forbidden,
        }
    }

    pub fn distance(self) -> Option<f64> {
        match self {
            CostEntry::Feasible { distance } | CostEntry::Kappa { distance } => Some(distance),
            CostEntry::Forbidden => None,
        }
    }
}

/// A robot covering `d` meters can reach `task` from time zero.
pub fn first_task_cost(robot: &Robot, task: &Task, d: f64) -> CostEntry {
    if d / robot.v_max <= task.time {
        CostEntry::Feasible { distance: d }
    } else {
        CostEntry::Kappa { distance: d }
    }
}

/// Whether `task_j` may be chained after `task_k` at any cost: strictly later,
/// or simultaneous and later in task order. Simultaneous pairs can never be
/// done by one robot, but admitting them at κ lets a chord ask for another
/// robot instead of making the matrix unsolvable.
pub fn may_follow(task_k: &Task, task_j: &Task) -> bool {
    task_j.time > task_k.time || (task_j.time == task_k.time && task_j.id > task_k.id)
}

/// Doing `task_j` after `task_k` with `d` meters in between.
pub fn subsequent_task_cost(task_k: &Task, task_j: &Task, d: f64, v_max: f64) -> CostEntry {
    let dt = task_j.time - task_k.time;
    if !may_follow(task_k, task_j) {
        CostEntry::Forbidden
    } else if dt == 0.0 || dt < d / v_max {
        CostEntry::Kappa { distance: d }
    } else {
        CostEntry::Feasible { distance: d }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CostModel {
    /// `robots × tasks`.
    pub c_first: Vec<Vec<CostEntry>>,
    /// `(tasks − 1) × tasks`; row k is predecessor task k + 1.
    pub c_subsequent: Vec<Vec<CostEntry>>,
    pub kappa: f64,
}

impl CostModel {
    /// Value the solver sees for a non-forbidden entry.
    pub fn charge(&self, entry: CostEntry) -> Option<f64> {
        match entry {
            CostEntry::Feasible { distance } => Some(distance),
            CostEntry::Kappa { .. } => Some(self.kappa),
            CostEntry::Forbidden => None,
        }
    }

    /// Writes one table as CSV, `value,kind` per cell.
    pub fn write_csv<W: Write>(&self, table: &[Vec<CostEntry>], out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
        let cols = table.first().map_or(0, Vec::len);
        let mut header = Vec::with_capacity(2 * cols + 1);
        header.push("row".to_string());
        for j in 1..=cols {
            header.push(format!("task{j}_value"));
            header.push(format!("task{j}_kind"));
        }
        w.write_record(&header)?;
        for (i, row) in table.iter().enumerate() {
            let mut rec = vec![(i + 1).to_string()];
            for &e in row {
                rec.push(self.charge(e).map_or_else(|| "inf".to_string(), |v| format!("{v}")));
                rec.push(format!("{:?}", e.kind()).to_lowercase());
            }
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Tasks must carry ids `1..=M` in non-decreasing time order.
pub fn check_tasks(tasks: &[Task]) -> Result<()> {
    if tasks.is_empty() {
        return Err(Error::NoTasks);
    }
    for (i, t) in tasks.iter().enumerate() {
        if t.id != i + 1 {
            return Err(Error::Invariant(format!("task at index {i} has id {}, expected {}", t.id, i + 1)));
        }
        if !(t.time.is_finite() && t.time >= 0.0) {
            return Err(Error::Invariant(format!("task {} has time {}", t.id, t.time)));
        }
        if i > 0 && tasks[i - 1].time > t.time {
            return Err(Error::Invariant(format!("task {} is earlier than task {}", t.id, i)));
        }
    }
    Ok(())
}

pub fn build_cost_model<W: Workspace + ?Sized>(robots: &[Robot], tasks: &[Task], ws: &W) -> Result<CostModel> {
    check_tasks(tasks)?;
    let mut c_first = Vec::with_capacity(robots.len());
    for r in robots {
        let row = tasks
            .iter()
            .map(|t| Ok(first_task_cost(r, t, ws.first_distance(r, t)?)))
            .collect::<Result<Vec<_>>>()?;
        c_first.push(row);
    }
    let v_max = robots.first().map_or(1.0, |r| r.v_max);
    let mut c_subsequent = Vec::with_capacity(tasks.len().saturating_sub(1));
    for k in &tasks[..tasks.len() - 1] {
        let row = tasks
            .iter()
            .map(|j| {
                if !may_follow(k, j) {
                    Ok(CostEntry::Forbidden)
                } else {
                    Ok(subsequent_task_cost(k, j, ws.subsequent_distance(k, j)?, v_max))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        c_subsequent.push(row);
    }
    let max_distance = c_first
        .iter()
        .chain(&c_subsequent)
        .flatten()
        .filter_map(|e| e.distance())
        .fold(0.0, f64::max);
    Ok(CostModel { c_first, c_subsequent, kappa: 1e6 * (1.0 + max_distance) })
}

/// What an augmented-matrix row stands for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RowKey {
    /// First-task row of the robot at this team index.
    Robot(usize),
    /// Successor row of this task id.
    Task(usize),
    /// κ-only row: a robot yet to be added starts its chain at this task id.
    NewRobot(usize),
}

/// Which rows the augmented matrix carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Augmentation {
    /// Robot rows and predecessor rows only. A κ choice still occupies a real
    /// row, which can push a second task onto κ and overcount added robots.
    Literal,
    /// Also one κ-only row per task, so a κ choice never displaces a feasible
    /// one and the κ count is the fewest robots that must be added.
    #[default]
    NewRobotRows,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedMatrix {
    pub costs: CostMatrix,
    pub row_map: Vec<RowKey>,
    kinds: Vec<CostKind>,
    pub n_robots: usize,
    pub n_tasks: usize,
}

impl AugmentedMatrix {
    pub fn kind(&self, row: usize, col: usize) -> CostKind {
        self.kinds[row * self.n_tasks + col]
    }

    /// Task id of a column.
    pub fn task_id(&self, col: usize) -> usize {
        col + 1
    }
}

/// Robot rows first, then predecessor rows for every task but the last.
pub fn assemble(model: &CostModel, n_robots: usize, n_tasks: usize) -> Result<AugmentedMatrix> {
    assemble_with(model, n_robots, n_tasks, Augmentation::Literal)
}

/// `assemble`, followed by one κ-only row per task under `NewRobotRows`.
pub fn assemble_with(
    model: &CostModel,
    n_robots: usize,
    n_tasks: usize,
    augmentation: Augmentation,
) -> Result<AugmentedMatrix> {
    if n_tasks == 0 {
        return Err(Error::NoTasks);
    }
    if model.c_first.len() != n_robots || model.c_subsequent.len() != n_tasks - 1 {
        return Err(Error::Invariant("cost model shape does not match team and task counts".into()));
    }
    let extra = match augmentation {
        Augmentation::Literal => 0,
        Augmentation::NewRobotRows => n_tasks,
    };
    let rows = n_robots + n_tasks - 1 + extra;
    let mut costs = CostMatrix::new(rows, n_tasks);
    let mut kinds = Vec::with_capacity(rows * n_tasks);
    let mut row_map = Vec::with_capacity(rows);
    let tables = model.c_first.iter().chain(&model.c_subsequent);
    for (r, row) in tables.enumerate() {
        if row.len() != n_tasks {
            return Err(Error::Invariant(format!("cost row {r} has {} columns", row.len())));
        }
        row_map.push(if r < n_robots { RowKey::Robot(r) } else { RowKey::Task(r - n_robots + 1) });
        for (c, &e) in row.iter().enumerate() {
            match model.charge(e) {
                Some(v) => costs.set(r, c, v),
                None => costs.forbid(r, c),
            }
            kinds.push(e.kind());
        }
    }
    for j in 0..extra {
        let r = n_robots + n_tasks - 1 + j;
        row_map.push(RowKey::NewRobot(j + 1));
        for c in 0..n_tasks {
            if c == j {
                costs.set(r, c, model.kappa);
                kinds.push(CostKind::Kappa);
            } else {
                costs.forbid(r, c);
                kinds.push(CostKind::Forbidden);
            }
        }
    }
    Ok(AugmentedMatrix { costs, row_map, kinds, n_robots, n_tasks })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arena::Arena;
    use crate::geometry::{Point, Rect};
    use crate::model::{score_to_tasks, Score};
    use crate::workspace::{OpenWorkspace, PianoWorkspace};

    fn task(id: usize, t: f64) -> Task {
        Task::at(id, Point::new(0.0, 0.0), t)
    }

    #[test]
    fn first_task_guard() {
        let r = Robot::new(1, Point::new(0.0, 0.0), 0.5);
        assert_eq!(first_task_cost(&r, &task(1, 5.0), 0.0), CostEntry::Feasible { distance: 0.0 });
        assert_eq!(first_task_cost(&r, &task(1, 3.0), 2.0).kind(), CostKind::Kappa);
        assert_eq!(first_task_cost(&r, &task(1, 3.0), 1.5), CostEntry::Feasible { distance: 1.5 });
    }

    #[test]
    fn subsequent_task_guard() {
        let k = task(1, 2.0);
        assert_eq!(subsequent_task_cost(&k, &k, 0.0, 0.5), CostEntry::Forbidden);
        assert_eq!(subsequent_task_cost(&task(3, 2.0), &task(2, 2.0), 0.0, 0.5), CostEntry::Forbidden);
        assert_eq!(subsequent_task_cost(&k, &task(2, 2.0), 0.0, 0.5).kind(), CostKind::Kappa);
        assert_eq!(subsequent_task_cost(&k, &task(2, 1.0), 0.0, 0.5), CostEntry::Forbidden);
        assert_eq!(subsequent_task_cost(&k, &task(2, 7.0), 0.8, 0.5), CostEntry::Feasible { distance: 0.8 });
        assert_eq!(subsequent_task_cost(&k, &task(2, 3.0), 0.8, 0.5).kind(), CostKind::Kappa);
        assert_eq!(subsequent_task_cost(&k, &task(2, 3.6), 0.8, 0.5).kind(), CostKind::Feasible);
    }

    #[test]
    fn assemble_shapes() {
        let ws = OpenWorkspace::new(Rect::new(Point::new(0.0, 0.0), Point::new(5.0, 5.0)));
        let robots = vec![Robot::new(1, Point::new(0.0, 0.0), 1.0)];
        let tasks = vec![Task::at(1, Point::new(1.0, 0.0), 2.0), Task::at(2, Point::new(2.0, 0.0), 4.0)];
        let m = build_cost_model(&robots, &tasks, &ws).unwrap();
        let a = assemble(&m, 1, 2).unwrap();
        assert_eq!((a.costs.rows(), a.costs.cols()), (2, 2));
        assert_eq!(a.row_map, vec![RowKey::Robot(0), RowKey::Task(1)]);
        assert_eq!(a.kind(1, 0), CostKind::Forbidden);
        assert_eq!(a.costs.get(1, 1), Some(1.0));
        assert!(matches!(assemble(&m, 1, 0), Err(Error::NoTasks)));
    }

    #[test]
    fn new_robot_rows_are_kappa_diagonal() {
        let ws = OpenWorkspace::new(Rect::new(Point::new(0.0, 0.0), Point::new(5.0, 5.0)));
        let robots = vec![Robot::new(1, Point::new(0.0, 0.0), 1.0)];
        let tasks = vec![Task::at(1, Point::new(1.0, 0.0), 2.0), Task::at(2, Point::new(2.0, 0.0), 4.0)];
        let m = build_cost_model(&robots, &tasks, &ws).unwrap();
        let a = assemble_with(&m, 1, 2, Augmentation::NewRobotRows).unwrap();
        assert_eq!((a.costs.rows(), a.costs.cols()), (4, 2));
        assert_eq!(a.row_map[2..], [RowKey::NewRobot(1), RowKey::NewRobot(2)]);
        assert_eq!(a.kind(2, 0), CostKind::Kappa);
        assert_eq!(a.kind(2, 1), CostKind::Forbidden);
        assert_eq!(a.costs.get(3, 1), Some(m.kappa));
    }

    #[test]
    fn birthday_matrix_shape() {
        let arena = Arena::default_piano();
        let tasks = score_to_tasks(&Score::happy_birthday(), &arena).unwrap();
        let robots: Vec<Robot> =
            (1..=4).map(|i| Robot::new(i, arena.lanes[i].top_entry, 0.5)).collect();
        let ws = PianoWorkspace::new(arena, &robots).unwrap();
        let m = build_cost_model(&robots, &tasks, &ws).unwrap();
        let a = assemble(&m, 4, 24).unwrap();
        assert_eq!((a.costs.rows(), a.costs.cols()), (27, 24));
        assert_eq!(a.costs.rows() - a.costs.cols(), 3);
    }

    #[test]
    fn model_invariants_on_birthday_tune() {
        let arena = Arena::default_piano();
        let tasks = score_to_tasks(&Score::happy_birthday(), &arena).unwrap();
        let robots = vec![Robot::new(1, Point::new(0.35, 1.8), 0.5)];
        let ws = PianoWorkspace::new(arena, &robots).unwrap();
        let m = build_cost_model(&robots, &tasks, &ws).unwrap();
        let max_feasible = m.c_first.iter().chain(&m.c_subsequent).flatten().filter_map(|e| match e {
            CostEntry::Feasible { distance } => Some(*distance),
            _ => None,
        });
        let max_feasible = max_feasible.fold(0.0, f64::max);
        assert!(m.kappa > tasks.len() as f64 * max_feasible);
        assert!(m.c_first.iter().flatten().all(|e| e.kind() != CostKind::Forbidden));
        for (k, row) in m.c_subsequent.iter().enumerate() {
            for (j, e) in row.iter().enumerate() {
                let forbidden = tasks[j].time < tasks[k].time || (tasks[j].time == tasks[k].time && j <= k);
                assert_eq!(e.kind() == CostKind::Forbidden, forbidden, "({k},{j})");
            }
        }
        let same_note = m.c_subsequent[0][1];
        assert_eq!(tasks[0].lane, tasks[1].lane);
        assert!((same_note.distance().unwrap() - 0.8).abs() < 1e-12);
    }

    #[test]
    fn unsorted_tasks_rejected() {
        let ws = OpenWorkspace::new(Rect::new(Point::new(0.0, 0.0), Point::new(5.0, 5.0)));
        let robots = vec![Robot::new(1, Point::new(0.0, 0.0), 1.0)];
        let tasks = vec![task(1, 4.0), task(2, 2.0)];
        assert!(matches!(build_cost_model(&robots, &tasks, &ws), Err(Error::Invariant(_))));
    }

    #[test]
    fn csv_dump_has_tags() {
        let ws = OpenWorkspace::new(Rect::new(Point::new(0.0, 0.0), Point::new(5.0, 5.0)));
        let robots = vec![Robot::new(1, Point::new(0.0, 0.0), 1.0)];
        let tasks = vec![Task::at(1, Point::new(0.0, 0.0), 0.5), Task::at(2, Point::new(3.0, 0.0), 1.0)];
        let m = build_cost_model(&robots, &tasks, &ws).unwrap();
        let mut buf = Vec::new();
        m.write_csv(&m.c_subsequent, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "row,task1_value,task1_kind,task2_value,task2_kind\n1,inf,forbidden,4000000,kappa\n");
        let mut buf = Vec::new();
        m.write_csv(&m.c_first, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().nth(1), Some("1,0,feasible,4000000,kappa"));
    }
}
