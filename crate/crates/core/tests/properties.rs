use dream_core::arena::Arena;
use dream_core::collision::{verify_plan, verify_regions, POINT_CLEARANCE_M};
use dream_core::dream::{plan_direct_trajectories, plan_trajectories, solve_stmta, MotionProfile};
use dream_core::geometry::{Point, Rect};
use dream_core::model::{score_to_tasks, Robot, Score, ScoreEntry, Task};
use dream_core::sim;
use dream_core::workspace::{OpenWorkspace, PianoWorkspace};
use proptest::prelude::*;

/// Lane picks and gaps; repeats of a note closer than 1.7 s are dropped.
fn tune() -> impl Strategy<Value = Score> {
    (proptest::collection::vec((0usize..7, 1.0..8.0f64), 4..20), 3.0..6.0f64).prop_map(|(picks, start)| {
        let arena = Arena::default_piano();
        let mut t = start;
        let mut last = [f64::NEG_INFINITY; 7];
        let mut entries = Vec::new();
        for (lane, gap) in picks {
            if t - last[lane] > 1.7 {
                last[lane] = t;
                entries.push(ScoreEntry { note: arena.config.note_order[lane].clone(), time_s: t });
            }
            t += gap;
        }
        Score::new(entries, 1.0).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn playback_hits_every_note(score in tune(), dt in 0.005..0.05f64) {
        let arena = Arena::default_piano();
        let tasks = score_to_tasks(&score, &arena).unwrap();
        let robots = vec![Robot::new(1, Point::new(0.35, 1.8), 0.5)];
        let mut ws = PianoWorkspace::new(arena.clone(), &robots).unwrap();
        let plan = solve_stmta(&robots, &tasks, &mut ws).unwrap();
        prop_assert!(plan.solver_calls <= 2);
        let trajs = plan_trajectories(&plan, &arena, &tasks, MotionProfile::default()).unwrap();
        for t in &trajs {
            for c in &t.note_crossings {
                prop_assert_eq!(c.time, tasks[c.task_id - 1].time);
            }
        }
        prop_assert!(verify_regions(&trajs, &arena, POINT_CLEARANCE_M).passed());

        let coarse = sim::run(&trajs, &arena, &tasks, dt).unwrap();
        let fine = sim::run(&trajs, &arena, &tasks, dt / 2.0).unwrap();
        prop_assert!(coarse.success());
        prop_assert!(coarse.max_timing_error() <= dt + 1e-9);
        prop_assert!(coarse.max_speed <= 0.5 + 1e-9);
        prop_assert_eq!(coarse.events.len(), fine.events.len());
        for (a, b) in coarse.events.iter().zip(&fine.events) {
            prop_assert!((a.time - b.time).abs() <= dt);
        }
    }

    #[test]
    fn open_plans_never_conflict(
        starts in proptest::collection::vec((0.0..10.0f64, 0.0..10.0f64), 1..5),
        jobs in proptest::collection::vec((0.0..10.0f64, 0.0..10.0f64, 0.5..12.0f64), 1..9),
    ) {
        let robots: Vec<Robot> =
            starts.iter().enumerate().map(|(i, &(x, y))| Robot::new(i + 1, Point::new(x, y), 1.0)).collect();
        let mut jobs = jobs;
        jobs.sort_by(|a, b| a.2.total_cmp(&b.2));
        let tasks: Vec<Task> =
            jobs.iter().enumerate().map(|(i, &(x, y, t))| Task::at(i + 1, Point::new(x, y), t)).collect();
        let mut ws = OpenWorkspace::new(Rect::new(Point::new(0.0, 0.0), Point::new(10.0, 10.0)));
        let plan = solve_stmta(&robots, &tasks, &mut ws).unwrap();
        prop_assert!(plan.solver_calls <= 2);
        let trajs = plan_direct_trajectories(&plan, &tasks, MotionProfile::default()).unwrap();
        let report = verify_plan(&trajs, POINT_CLEARANCE_M);
        prop_assert!(report.is_clear(), "{:?}", report.conflicts);
    }
}
