//! Seeded instance generators. Every generator draws from a ChaCha8 stream
//! seeded with a single `u64`, so an instance is fully named by its seed.

use std::collections::HashMap;

use dream_core::arena::Arena;
use dream_core::assignment::CostMatrix;
use dream_core::geometry::{Point, Rect};
use dream_core::model::{Robot, Score, ScoreEntry, Task};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Side of the square used for open-workspace instances.
pub const OPEN_SIDE_M: f64 = 10.0;
pub const OPEN_SPEED_MPS: f64 = 1.0;
/// Task times are drawn from `[0.5, OPEN_HORIZON_S]`.
pub const OPEN_HORIZON_S: f64 = 12.0;

#[derive(Debug, Clone)]
pub struct OpenInstance {
    pub bounds: Rect,
    pub robots: Vec<Robot>,
    pub tasks: Vec<Task>,
}

fn open_point(rng: &mut ChaCha8Rng) -> Point {
    Point::new(rng.gen_range(0.0..OPEN_SIDE_M), rng.gen_range(0.0..OPEN_SIDE_M))
}

/// 1..=max_robots robots and 1..=max_tasks tasks, uniform in the square,
/// with uniform task times. Task ids follow time order.
pub fn open_instance(rng: &mut ChaCha8Rng, max_robots: usize, max_tasks: usize) -> OpenInstance {
    let n = rng.gen_range(1..=max_robots);
    let m = rng.gen_range(1..=max_tasks);
    let robots = (1..=n).map(|id| Robot::new(id, open_point(rng), OPEN_SPEED_MPS)).collect();
    let mut staged: Vec<(f64, Point)> = (0..m).map(|_| (rng.gen_range(0.5..OPEN_HORIZON_S), open_point(rng))).collect();
    staged.sort_by(|a, b| a.0.total_cmp(&b.0));
    let tasks = staged.into_iter().enumerate().map(|(i, (t, p))| Task::at(i + 1, p, t)).collect();
    OpenInstance {
        bounds: Rect::new(Point::new(0.0, 0.0), Point::new(OPEN_SIDE_M, OPEN_SIDE_M)),
        robots,
        tasks,
    }
}

/// Same-note repeats closer than this are pushed later.
pub const SCORE_SAME_NOTE_GAP_S: f64 = 1.7;

/// A tune of 8..30 notes drawn uniformly from the arena's notes. The first note
/// sounds in [3, 6) s, later gaps are uniform in [1, 8) s, and a repeated note
/// is kept more than `SCORE_SAME_NOTE_GAP_S` after its previous occurrence
/// (one lane through-trip plus margin, so a repeat never forces a U-turn inside
/// a lane window).
pub fn piano_score(rng: &mut ChaCha8Rng, arena: &Arena) -> Score {
    let notes = &arena.config.note_order;
    let m = rng.gen_range(8..30);
    let mut t = rng.gen_range(3.0..6.0);
    let mut last: HashMap<&str, f64> = HashMap::new();
    let mut entries = Vec::with_capacity(m);
    while entries.len() < m {
        let note = notes.choose(rng).expect("arena has notes").as_str();
        if last.get(note).is_some_and(|&prev| t - prev <= SCORE_SAME_NOTE_GAP_S) {
            t += 0.5;
            continue;
        }
        last.insert(note, t);
        entries.push(ScoreEntry { note: note.to_string(), time_s: t });
        t += rng.gen_range(1.0..8.0);
    }
    Score::new(entries, 1.0).expect("generated times are positive")
}

/// Integer-valued matrix with `cols` in 1..=max_dim, `rows` in cols..=max_dim
/// and each entry forbidden with probability `p_forbidden`.
pub fn cost_matrix(rng: &mut ChaCha8Rng, max_dim: usize, p_forbidden: f64) -> CostMatrix {
    let cols = rng.gen_range(1..=max_dim);
    let rows = rng.gen_range(cols..=max_dim);
    let mut m = CostMatrix::new(rows, cols);
    for r in 0..rows {
        for c in 0..cols {
            if rng.gen_bool(p_forbidden) {
                m.forbid(r, c);
            } else {
                m.set(r, c, f64::from(rng.gen_range(0u32..100)));
            }
        }
    }
    m
}

/// Dense `n × n` matrix of uniform reals in [0, 1).
pub fn dense_matrix(rng: &mut ChaCha8Rng, n: usize) -> CostMatrix {
    let mut m = CostMatrix::new(n, n);
    for r in 0..n {
        for c in 0..n {
            m.set(r, c, rng.gen());
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeds_are_reproducible() {
        let a = open_instance(&mut rng(9), 3, 6);
        let b = open_instance(&mut rng(9), 3, 6);
        assert_eq!(a.robots, b.robots);
        assert_eq!(a.tasks, b.tasks);
    }

    #[test]
    fn open_tasks_are_time_ordered() {
        for seed in 0..50 {
            let inst = open_instance(&mut rng(seed), 3, 6);
            assert!(inst.tasks.windows(2).all(|w| w[0].time <= w[1].time));
            assert!(inst.tasks.iter().enumerate().all(|(i, t)| t.id == i + 1));
            assert!(inst.robots.iter().all(|r| inst.bounds.contains(r.start)));
        }
    }

    #[test]
    fn scores_respect_same_note_gap() {
        let arena = Arena::default_piano();
        for seed in 0..50 {
            let score = piano_score(&mut rng(seed), &arena);
            assert!((8..30).contains(&score.entries.len()));
            for (i, a) in score.entries.iter().enumerate() {
                for b in &score.entries[i + 1..] {
                    if a.note == b.note {
                        assert!(b.time_s - a.time_s > SCORE_SAME_NOTE_GAP_S);
                    }
                }
            }
        }
    }

    #[test]
    fn matrices_are_wide_enough() {
        for seed in 0..50 {
            let m = cost_matrix(&mut rng(seed), 8, 0.2);
            assert!(m.rows() >= m.cols() && m.rows() <= 8);
        }
    }
}
