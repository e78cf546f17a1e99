use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dream_cli::{bench, cmd_oracle, cmd_simulate, cmd_solve, dump_costs, dump_grid, dump_path, CliError, RunConfig};
use dream_core::dream::MotionProfile;
use dream_core::geometry::Point;

#[derive(Parser)]
#[command(name = "dream", version, about = "Minimum-team planning for piano-playing robots")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Plan the team and write plan.json and trajectories.csv.
    Solve {
        #[command(flatten)]
        run: RunArgs,
        /// Also write costs_first.csv and costs_subsequent.csv.
        #[arg(long)]
        dump_costs: bool,
        /// Also write the grid path between two points as path.csv.
        #[arg(long, value_name = "X1,Y1,X2,Y2", value_parser = parse_segment)]
        dump_path: Option<(Point, Point)>,
        /// Also write the occupancy grid as grid.pgm.
        #[arg(long)]
        dump_grid: bool,
    },
    /// Plan, verify, play back and write every artifact.
    Simulate {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Compare the planner with brute force on random open-area instances.
    Oracle {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 200)]
        count: usize,
        #[arg(long, default_value_t = 3)]
        max_robots: usize,
        #[arg(long, default_value_t = 6)]
        max_tasks: usize,
    },
    /// Time the assignment solver and count solver calls on random tunes.
    Bench {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_delimiter = ',', default_values_t = vec![8, 16, 32, 64, 128])]
        sizes: Vec<usize>,
        #[arg(long, default_value_t = 5)]
        reps: usize,
        #[arg(long, default_value_t = 20)]
        scores: usize,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Arena JSON (default: 7 lanes, G3 to G4).
    #[arg(long)]
    arena: Option<PathBuf>,
    /// Score CSV `note,time_s` (default: bundled birthday tune).
    #[arg(long)]
    score: Option<PathBuf>,
    /// Robots CSV `id,x_m,y_m,vmax_mps` (default: one robot at (0.35, 1.8), 0.5 m/s).
    #[arg(long)]
    robots: Option<PathBuf>,
    #[arg(long, default_value_t = 1.0)]
    time_scale: f64,
    #[arg(long, default_value_t = 0.01)]
    dt: f64,
    /// Conflict distance for the verifier, in meters.
    #[arg(long, default_value_t = dream_core::collision::POINT_CLEARANCE_M)]
    clearance: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "dwell")]
    profile: Profile,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum Profile {
    Eager,
    Uniform,
    Dwell,
}

impl RunArgs {
    fn config(self) -> RunConfig {
        RunConfig {
            arena: self.arena,
            score: self.score,
            robots: self.robots,
            time_scale: self.time_scale,
            dt: self.dt,
            clearance: self.clearance,
            out: self.out,
            seed: self.seed,
            profile: match self.profile {
                Profile::Eager => MotionProfile::Eager,
                Profile::Uniform => MotionProfile::Uniform,
                Profile::Dwell => MotionProfile::Dwell,
            },
        }
    }
}

fn parse_segment(s: &str) -> Result<(Point, Point), String> {
    let v: Vec<f64> = s.split(',').map(|p| p.trim().parse::<f64>().map_err(|e| e.to_string())).collect::<Result<_, _>>()?;
    match v[..] {
        [x1, y1, x2, y2] => Ok((Point::new(x1, y1), Point::new(x2, y2))),
        _ => Err(format!("expected four comma-separated numbers, got `{s}`")),
    }
}

fn to_json<T: serde::Serialize>(value: &T) -> Result<String, CliError> {
    serde_json::to_string_pretty(value).map_err(|e| CliError::Invariant(e.to_string()))
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Solve { run, dump_costs: costs, dump_path: path, dump_grid: grid } => {
            let cfg = run.config();
            let solved = cmd_solve(&cfg)?;
            let plan = &solved.plan;
            println!(
                "team size {}, q = {}, solver_calls = {}, total cost {:.3} m",
                plan.team_size(),
                plan.q_spawned,
                plan.solver_calls,
                plan.total_cost
            );
            if costs {
                dump_costs(&cfg)?;
            }
            if let Some((a, b)) = path {
                dump_path(&cfg, a, b)?;
            }
            if grid {
                dump_grid(&cfg)?;
            }
            println!("wrote {}", cfg.out.display());
        }
        Command::Simulate { run } => {
            let cfg = run.config();
            let sim = cmd_simulate(&cfg)?;
            let s = &sim.summary;
            println!(
                "team size {}, q = {}, solver_calls = {}, events {}/{}, max timing error {:.4} s, conflicts {}, region violations {}",
                s.team_size, s.q_spawned, s.solver_calls, s.events, s.tasks, s.max_timing_error_s, s.conflicts, s.region_violations
            );
            if let Some(r) = &s.reference {
                if !r.matches_reference {
                    println!("note: {}", r.note);
                }
            }
            println!("wrote {}", cfg.out.display());
            if !s.success {
                return Err(CliError::Failed(format!(
                    "{} conflicts, {} region violations, {} missed notes, {} extra events",
                    s.conflicts,
                    s.region_violations,
                    s.missed_notes.len(),
                    s.extra_events
                )));
            }
        }
        Command::Oracle { seed, count, max_robots, max_tasks } => {
            let report = cmd_oracle(seed, count, max_robots, max_tasks)?;
            println!("{}", to_json(&report)?);
            if !report.all_match() {
                return Err(CliError::Invariant(format!("{} instances disagree with brute force", report.mismatches.len())));
            }
        }
        Command::Bench { seed, sizes, reps, scores } => {
            println!("{}", to_json(&bench::run(seed, &sizes, reps, scores)?)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
