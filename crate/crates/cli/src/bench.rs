//! Timing of the assignment solver on dense random matrices, and solver-call
//! counts of the full planner on random tunes.

use std::time::Instant;

use dream_core::arena::Arena;
use dream_core::assignment::solve_matrix;
use dream_core::dream::solve_stmta;
use dream_core::model::{score_to_tasks, Robot};
use dream_core::workspace::PianoWorkspace;
use serde::Serialize;

use crate::generate::{dense_matrix, piano_score, rng};
use crate::{CliError, DEFAULT_SPEED_MPS, DEFAULT_START};

#[derive(Debug, Clone, Serialize)]
pub struct SizeTiming {
    pub n: usize,
    pub reps: usize,
    pub mean_ms: f64,
    pub max_ms: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchReport {
    pub seed: u64,
    pub solver: Vec<SizeTiming>,
    pub scores: usize,
    pub max_solver_calls: usize,
    pub max_q: usize,
    pub mean_plan_ms: f64,
}

pub fn run(seed: u64, sizes: &[usize], reps: usize, scores: usize) -> Result<BenchReport, CliError> {
    let mut r = rng(seed);
    let mut solver = Vec::with_capacity(sizes.len());
    for &n in sizes {
        let mut times = Vec::with_capacity(reps);
        for _ in 0..reps {
            let m = dense_matrix(&mut r, n);
            let start = Instant::now();
            solve_matrix(&m)?;
            times.push(start.elapsed().as_secs_f64() * 1e3);
        }
        let mean_ms = times.iter().sum::<f64>() / reps.max(1) as f64;
        solver.push(SizeTiming { n, reps, mean_ms, max_ms: times.iter().copied().fold(0.0, f64::max) });
    }

    let arena = Arena::default_piano();
    let robots = vec![Robot::new(1, DEFAULT_START, DEFAULT_SPEED_MPS)];
    let (mut max_solver_calls, mut max_q, mut total_ms) = (0, 0, 0.0);
    for i in 0..scores as u64 {
        let score = piano_score(&mut rng(seed.wrapping_add(i)), &arena);
        let tasks = score_to_tasks(&score, &arena)?;
        let start = Instant::now();
        let mut ws = PianoWorkspace::new(arena.clone(), &robots)?;
        let plan = solve_stmta(&robots, &tasks, &mut ws)?;
        total_ms += start.elapsed().as_secs_f64() * 1e3;
        max_solver_calls = max_solver_calls.max(plan.solver_calls);
        max_q = max_q.max(plan.q_spawned);
    }
    Ok(BenchReport {
        seed,
        solver,
        scores,
        max_solver_calls,
        max_q,
        mean_plan_ms: total_ms / scores.max(1) as f64,
    })
}
