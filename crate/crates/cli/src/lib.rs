//! Command implementations behind the `dream` binary: input loading, the
//! solve/simulate pipeline with its artifact layout, seeded generators,
//! oracles and benchmarks.

pub mod bench;
pub mod generate;
pub mod oracle;

use std::fs;
use std::path::{Path, PathBuf};

use dream_core::arena::{Arena, ArenaConfig};
use dream_core::collision::{verify_plan, verify_regions, ConflictReport, RegionReport};
use dream_core::cost::build_cost_model;
use dream_core::dream::{plan_trajectories, solve_stmta, write_trajectories_csv, MotionProfile, Plan, TimedTrajectory};
use dream_core::geometry::Point;
use dream_core::model::{robots_from_csv, score_to_tasks, Robot, Score, Task};
use dream_core::pathfind::shortest_path;
use dream_core::sim::{self, SimReport};
use dream_core::workspace::PianoWorkspace;
use serde::Serialize;

/// Team size the piano experiment reports for the bundled tune with one robot.
pub const REFERENCE_TEAM_SIZE: usize = 4;
pub const REFERENCE_Q: usize = 3;

pub const DEFAULT_START: Point = Point::new(0.35, 1.8);
pub const DEFAULT_SPEED_MPS: f64 = 0.5;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Failed(String),
    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

impl CliError {
    /// 1 conflicts or missed notes, 2 bad input, 3 internal invariant.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Failed(_) => 1,
            CliError::Input(_) => 2,
            CliError::Invariant(_) => 3,
        }
    }
}

impl From<dream_core::Error> for CliError {
    fn from(e: dream_core::Error) -> Self {
        use dream_core::Error as E;
        match e {
            E::Invariant(_) | E::InfeasibleTrajectory { .. } | E::UnregisteredKey(_) => CliError::Invariant(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Input(format!("{}: {e}", path.display()))
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    /// Arena JSON; the default 7-lane arena when absent.
    pub arena: Option<PathBuf>,
    /// `note,time_s` CSV; the bundled birthday tune when absent.
    pub score: Option<PathBuf>,
    /// `id,x_m,y_m,vmax_mps` CSV; one robot above the first lane when absent.
    pub robots: Option<PathBuf>,
    pub time_scale: f64,
    pub dt: f64,
    pub clearance: f64,
    pub out: PathBuf,
    pub seed: u64,
    pub profile: MotionProfile,
}

impl RunConfig {
    pub fn new(out: impl Into<PathBuf>) -> Self {
        Self {
            arena: None,
            score: None,
            robots: None,
            time_scale: 1.0,
            dt: 0.01,
            clearance: dream_core::collision::POINT_CLEARANCE_M,
            out: out.into(),
            seed: 0,
            profile: MotionProfile::default(),
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        for (name, v) in [("time scale", self.time_scale), ("dt", self.dt), ("clearance", self.clearance)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(CliError::Input(format!("{name} must be positive, got {v}")));
            }
        }
        for path in [&self.arena, &self.score, &self.robots].into_iter().flatten() {
            if !path.is_file() {
                return Err(CliError::Input(format!("{} does not exist", path.display())));
            }
        }
        Ok(())
    }
}

/// Everything the pipeline reads, after validation.
pub struct Inputs {
    pub arena: Arena,
    pub robots: Vec<Robot>,
    pub tasks: Vec<Task>,
    pub bundled_score: bool,
}

pub fn load_inputs(cfg: &RunConfig) -> Result<Inputs, CliError> {
    cfg.validate()?;
    let arena = match &cfg.arena {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| io_err(p, e))?;
            Arena::build(ArenaConfig::from_json(&text)?)?
        }
        None => Arena::default_piano(),
    };
    let score = match &cfg.score {
        Some(p) => Score::from_csv(fs::File::open(p).map_err(|e| io_err(p, e))?, cfg.time_scale)?,
        None => Score::from_csv(dream_core::model::HAPPY_BIRTHDAY_CSV.as_bytes(), cfg.time_scale)?,
    };
    let robots = match &cfg.robots {
        Some(p) => robots_from_csv(fs::File::open(p).map_err(|e| io_err(p, e))?)?,
        None => vec![Robot::new(1, DEFAULT_START, DEFAULT_SPEED_MPS)],
    };
    let tasks = score_to_tasks(&score, &arena)?;
    Ok(Inputs { arena, robots, tasks, bundled_score: cfg.score.is_none() && cfg.time_scale == 1.0 })
}

pub struct Solved {
    pub inputs: Inputs,
    pub plan: Plan,
    pub trajectories: Vec<TimedTrajectory>,
    /// Fewest robots by the matching oracle, for the original team.
    pub oracle_team_size: usize,
}

pub fn solve(cfg: &RunConfig) -> Result<Solved, CliError> {
    let inputs = load_inputs(cfg)?;
    let mut ws = PianoWorkspace::new(inputs.arena.clone(), &inputs.robots)?;
    let plan = solve_stmta(&inputs.robots, &inputs.tasks, &mut ws)?;
    let model = build_cost_model(&inputs.robots, &inputs.tasks, &ws)?;
    let oracle_team_size = oracle::min_team_matching(&model);
    let trajectories = plan_trajectories(&plan, &inputs.arena, &inputs.tasks, cfg.profile)?;
    Ok(Solved { inputs, plan, trajectories, oracle_team_size })
}

fn create_out(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))
}

fn write(path: PathBuf, bytes: impl AsRef<[u8]>) -> Result<(), CliError> {
    fs::write(&path, bytes).map_err(|e| io_err(&path, e))
}

fn file(path: PathBuf) -> Result<fs::File, CliError> {
    fs::File::create(&path).map_err(|e| io_err(&path, e))
}

/// Writes `plan.json` and `trajectories.csv`.
pub fn cmd_solve(cfg: &RunConfig) -> Result<Solved, CliError> {
    let solved = solve(cfg)?;
    create_out(&cfg.out)?;
    write(cfg.out.join("plan.json"), solved.plan.to_json()? + "\n")?;
    write_trajectories_csv(&solved.trajectories, file(cfg.out.join("trajectories.csv"))?)?;
    Ok(solved)
}

/// Writes both cost tables as CSV.
pub fn dump_costs(cfg: &RunConfig) -> Result<(), CliError> {
    let inputs = load_inputs(cfg)?;
    let ws = PianoWorkspace::new(inputs.arena.clone(), &inputs.robots)?;
    let model = build_cost_model(&inputs.robots, &inputs.tasks, &ws)?;
    create_out(&cfg.out)?;
    model.write_csv(&model.c_first, file(cfg.out.join("costs_first.csv"))?)?;
    model.write_csv(&model.c_subsequent, file(cfg.out.join("costs_subsequent.csv"))?)?;
    Ok(())
}

/// Writes the grid path between two points as `x_m,y_m` rows.
pub fn dump_path(cfg: &RunConfig, from: Point, to: Point) -> Result<PathBuf, CliError> {
    let inputs = load_inputs(cfg)?;
    let path = shortest_path(&inputs.arena, from, to)?;
    create_out(&cfg.out)?;
    let mut text = String::from("x_m,y_m\n");
    for p in std::iter::once(from).chain(path.points.iter().copied()) {
        text.push_str(&format!("{},{}\n", p.x, p.y));
    }
    let target = cfg.out.join("path.csv");
    write(target.clone(), text)?;
    Ok(target)
}

/// Writes the occupancy grid as a binary PGM.
pub fn dump_grid(cfg: &RunConfig) -> Result<PathBuf, CliError> {
    let inputs = load_inputs(cfg)?;
    create_out(&cfg.out)?;
    let target = cfg.out.join("grid.pgm");
    write(target.clone(), inputs.arena.grid.to_pgm())?;
    Ok(target)
}

#[derive(Debug, Clone, Serialize)]
pub struct ReferenceCheck {
    pub reference_team_size: usize,
    pub reference_q: usize,
    pub observed_team_size: usize,
    pub observed_q: usize,
    pub oracle_team_size: usize,
    pub matches_reference: bool,
    pub matches_oracle: bool,
    pub note: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub team_size: usize,
    pub q_spawned: usize,
    pub solver_calls: usize,
    pub total_cost_m: f64,
    pub total_distance_m: f64,
    pub oracle_team_size: usize,
    pub tasks: usize,
    pub events: usize,
    pub missed_notes: Vec<usize>,
    pub extra_events: usize,
    pub max_timing_error_s: f64,
    pub max_speed_mps: f64,
    pub clearance_m: f64,
    pub conflicts: usize,
    pub degenerate_contacts: usize,
    pub region_violations: usize,
    pub success: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference: Option<ReferenceCheck>,
}

pub struct Simulated {
    pub solved: Solved,
    pub conflicts: ConflictReport,
    pub regions: RegionReport,
    pub report: SimReport,
    pub summary: Summary,
}

fn path_length(t: &TimedTrajectory) -> f64 {
    t.waypoints.windows(2).map(|w| w[0].position.distance(w[1].position)).sum()
}

fn reference_check(plan: &Plan, arena: &Arena, oracle_team_size: usize) -> ReferenceCheck {
    let matches_reference = plan.team_size() == REFERENCE_TEAM_SIZE && plan.q_spawned == REFERENCE_Q;
    let note = if matches_reference {
        "team size matches the reference experiment".to_string()
    } else {
        format!(
            "the reference experiment adds {REFERENCE_Q} robots (team {REFERENCE_TEAM_SIZE}); this reconstructed \
             arena needs {} added (team {}). Its lanes are {:.1} m apart at {:.1} m/s, so one robot covers more of \
             the tune than in the reference world, whose dimensions and navigation stack are not reproduced. \
             The matching oracle gives team {oracle_team_size}.",
            plan.q_spawned,
            plan.team_size(),
            arena.config.lane_width + arena.config.wall_thickness,
            plan.team[0].v_max,
        )
    };
    ReferenceCheck {
        reference_team_size: REFERENCE_TEAM_SIZE,
        reference_q: REFERENCE_Q,
        observed_team_size: plan.team_size(),
        observed_q: plan.q_spawned,
        oracle_team_size,
        matches_reference,
        matches_oracle: plan.team_size() == oracle_team_size,
        note,
    }
}

/// Solve, verify, simulate, and write every artifact. Returns `Failed` after
/// writing when conflicts or missed notes occur.
pub fn cmd_simulate(cfg: &RunConfig) -> Result<Simulated, CliError> {
    let solved = cmd_solve(cfg)?;
    let conflicts = verify_plan(&solved.trajectories, cfg.clearance);
    let regions = verify_regions(&solved.trajectories, &solved.inputs.arena, cfg.clearance);
    let report = sim::run(&solved.trajectories, &solved.inputs.arena, &solved.inputs.tasks, cfg.dt)?;

    sim::write_events_csv(&report.events, file(cfg.out.join("events.csv"))?)?;
    sim::emit_timeline(&report, &cfg.out.join("timeline.csv"), &cfg.out.join("timeline.svg"))?;
    sim::emit_midi(&report.events, &cfg.out.join("tune.mid"))?;

    let plan = &solved.plan;
    let summary = Summary {
        team_size: plan.team_size(),
        q_spawned: plan.q_spawned,
        solver_calls: plan.solver_calls,
        total_cost_m: plan.total_cost,
        total_distance_m: solved.trajectories.iter().map(path_length).sum(),
        oracle_team_size: solved.oracle_team_size,
        tasks: solved.inputs.tasks.len(),
        events: report.events.len(),
        missed_notes: report.missed.clone(),
        extra_events: report.extra_events,
        max_timing_error_s: report.max_timing_error(),
        max_speed_mps: report.max_speed,
        clearance_m: cfg.clearance,
        conflicts: conflicts.conflicts.len(),
        degenerate_contacts: conflicts.degenerate.len(),
        region_violations: regions.violations.len(),
        success: report.success() && conflicts.is_clear() && regions.passed(),
        reference: (solved.inputs.bundled_score && solved.inputs.robots.len() == 1).then(|| reference_check(plan, &solved.inputs.arena, solved.oracle_team_size)),
    };
    let json = serde_json::to_string_pretty(&summary).map_err(|e| CliError::Invariant(e.to_string()))?;
    write(cfg.out.join("summary.json"), json + "\n")?;
    Ok(Simulated { solved, conflicts, regions, report, summary })
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleReport {
    pub seed: u64,
    pub instances: usize,
    pub team_matches: usize,
    pub cost_matches: usize,
    pub max_solver_calls: usize,
    pub mismatches: Vec<oracle::Comparison>,
}

impl OracleReport {
    pub fn all_match(&self) -> bool {
        self.mismatches.is_empty()
    }
}

/// Compares the planner with brute force on `count` random open instances.
/// Instance `i` is generated from seed `seed + i`.
pub fn cmd_oracle(seed: u64, count: usize, max_robots: usize, max_tasks: usize) -> Result<OracleReport, CliError> {
    if max_robots > oracle::ORACLE_MAX_ROBOTS || max_tasks > oracle::ORACLE_MAX_TASKS || max_robots == 0 || max_tasks == 0 {
        return Err(CliError::Input(format!(
            "oracle instances need 1..={} robots and 1..={} tasks",
            oracle::ORACLE_MAX_ROBOTS,
            oracle::ORACLE_MAX_TASKS
        )));
    }
    let mut report =
        OracleReport { seed, instances: count, team_matches: 0, cost_matches: 0, max_solver_calls: 0, mismatches: Vec::new() };
    for i in 0..count as u64 {
        let s = seed.wrapping_add(i);
        let inst = generate::open_instance(&mut generate::rng(s), max_robots, max_tasks);
        let cmp = oracle::compare_open(s, &inst)?;
        report.team_matches += usize::from(cmp.team_matches);
        report.cost_matches += usize::from(cmp.cost_matches);
        report.max_solver_calls = report.max_solver_calls.max(cmp.solver_calls);
        if !(cmp.team_matches && cmp.cost_matches) {
            report.mismatches.push(cmp);
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Failed(String::new()).exit_code(), 1);
        assert_eq!(CliError::Input(String::new()).exit_code(), 2);
        assert_eq!(CliError::Invariant(String::new()).exit_code(), 3);
        let e: CliError = dream_core::Error::Invariant("x".into()).into();
        assert_eq!(e.exit_code(), 3);
        let e: CliError = dream_core::Error::UnknownScoreNote { row: 2, note: "H9".into() }.into();
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn non_positive_settings_are_rejected() {
        let mut cfg = RunConfig::new("unused");
        cfg.dt = 0.0;
        assert_eq!(cfg.validate().unwrap_err().exit_code(), 2);
        let mut cfg = RunConfig::new("unused");
        cfg.score = Some("/nonexistent/score.csv".into());
        assert_eq!(cfg.validate().unwrap_err().exit_code(), 2);
    }

    #[test]
    fn oracle_rejects_large_requests() {
        assert_eq!(cmd_oracle(0, 1, 4, 6).unwrap_err().exit_code(), 2);
        assert_eq!(cmd_oracle(0, 1, 3, 7).unwrap_err().exit_code(), 2);
    }
}
