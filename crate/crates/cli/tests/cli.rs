use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn dream(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dream")).args(args).output().unwrap()
}

fn out_arg(dir: &Path) -> String {
    dir.to_str().unwrap().to_string()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn solve_prints_team_summary() {
    let dir = tempfile::tempdir().unwrap();
    let o = dream(&["solve", "--out", &out_arg(dir.path())]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("team size 2, q = 1, solver_calls = 2"), "{}", stdout(&o));
    assert!(dir.path().join("plan.json").is_file());
    assert!(dir.path().join("trajectories.csv").is_file());
}

#[test]
fn single_reachable_note_needs_no_extra_robot() {
    let dir = tempfile::tempdir().unwrap();
    let score = dir.path().join("score.csv");
    fs::write(&score, "note,time_s\nG3,5\n").unwrap();
    let o = dream(&["solve", "--score", score.to_str().unwrap(), "--out", &out_arg(dir.path())]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("team size 1, q = 0, solver_calls = 1"), "{}", stdout(&o));
}

#[test]
fn unknown_note_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let score = dir.path().join("score.csv");
    fs::write(&score, "note,time_s\nG3,5\nF#3,9\n").unwrap();
    let o = dream(&["solve", "--score", score.to_str().unwrap(), "--out", &out_arg(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("row 2") && err.contains("F#3"), "{err}");
}

#[test]
fn start_inside_lane_band_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let robots = dir.path().join("robots.csv");
    fs::write(&robots, "id,x_m,y_m,vmax_mps\n1,0.35,1.0,0.5\n").unwrap();
    let o = dream(&["solve", "--robots", robots.to_str().unwrap(), "--out", &out_arg(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn simulate_writes_the_fixed_layout() {
    let dir = tempfile::tempdir().unwrap();
    let o = dream(&["simulate", "--out", &out_arg(dir.path())]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["plan.json", "trajectories.csv", "events.csv", "timeline.csv", "timeline.svg", "tune.mid", "summary.json"] {
        assert!(dir.path().join(f).is_file(), "{f}");
    }
    let events = fs::read_to_string(dir.path().join("events.csv")).unwrap();
    assert_eq!(events.lines().next(), Some("note,lane,robot_id,time_s"));
    assert_eq!(events.lines().count(), 25);
    let timeline = fs::read_to_string(dir.path().join("timeline.csv")).unwrap();
    assert_eq!(timeline.lines().next(), Some("robot_id,state,start_s,end_s"));
}

#[test]
fn absurd_clearance_reports_conflicts() {
    let dir = tempfile::tempdir().unwrap();
    let o = dream(&["simulate", "--clearance", "10", "--out", &out_arg(dir.path())]);
    assert_eq!(o.status.code(), Some(1));
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert!(summary["conflicts"].as_u64().unwrap() > 0);
    assert_eq!(summary["success"], false);
}

#[test]
fn reruns_are_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    dream(&["simulate", "--seed", "4", "--out", &out_arg(a.path())]);
    dream(&["simulate", "--seed", "4", "--out", &out_arg(b.path())]);
    for f in ["plan.json", "tune.mid", "summary.json", "timeline.svg"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn negative_dt_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = dream(&["simulate", "--dt", "-1", "--out", &out_arg(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn dumps_costs_path_and_grid() {
    let dir = tempfile::tempdir().unwrap();
    let o = dream(&["solve", "--dump-costs", "--dump-grid", "--dump-path", "0.35,1.8,3.95,0.2", "--out", &out_arg(dir.path())]);
    assert_eq!(o.status.code(), Some(0));
    let first = fs::read_to_string(dir.path().join("costs_first.csv")).unwrap();
    assert!(first.starts_with("row,task1_value,task1_kind"));
    let path = fs::read_to_string(dir.path().join("path.csv")).unwrap();
    assert_eq!(path.lines().next(), Some("x_m,y_m"));
    assert_eq!(path.lines().last(), Some("3.95,0.2"));
    let pgm = fs::read(dir.path().join("grid.pgm")).unwrap();
    assert!(pgm.starts_with(b"P5"));
}

#[test]
fn oracle_subcommand_agrees() {
    let o = dream(&["oracle", "--count", "25", "--seed", "11"]);
    assert_eq!(o.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(report["team_matches"], 25);
    assert_eq!(report["cost_matches"], 25);
    assert_eq!(dream(&["oracle", "--max-tasks", "7"]).status.code(), Some(2));
}

#[test]
fn bench_reports_json() {
    let o = dream(&["bench", "--sizes", "4,8", "--reps", "2", "--scores", "3"]);
    assert_eq!(o.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(report["solver"].as_array().unwrap().len(), 2);
    assert!(report["max_solver_calls"].as_u64().unwrap() <= 2);
}
