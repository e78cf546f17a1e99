//! Grid A* on the arena occupancy grid and a cache of key-point distances.
//!
//! Paths are 8-connected with octile step costs. A diagonal step needs both
//! orthogonal neighbours free, so paths never squeeze past a wall corner.
//! Costs are tracked as (straight, diagonal) step counts so that equal paths
//! always produce bit-identical lengths regardless of expansion order.

use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, HashMap};
use std::f64::consts::SQRT_2;

use serde::{Deserialize, Serialize};

use crate::arena::{Arena, Cell, OccupancyGrid};
use crate::error::{Error, Result};
use crate::geometry::Point;

/// Octile path cost in grid steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct StepCost {
    pub straight: u32,
    pub diagonal: u32,
}

impl StepCost {
    pub fn value(self) -> f64 {
        self.straight as f64 + self.diagonal as f64 * SQRT_2
    }

    fn plus(self, other: StepCost) -> StepCost {
        StepCost { straight: self.straight + other.straight, diagonal: self.diagonal + other.diagonal }
    }

    /// Exact cost between two cells on an obstacle-free grid.
    pub fn octile(a: Cell, b: Cell) -> StepCost {
        let dr = a.row.abs_diff(b.row) as u32;
        let dc = a.col.abs_diff(b.col) as u32;
        StepCost { straight: dr.max(dc) - dr.min(dc), diagonal: dr.min(dc) }
    }
}

const STRAIGHT: StepCost = StepCost { straight: 1, diagonal: 0 };
const DIAGONAL: StepCost = StepCost { straight: 0, diagonal: 1 };

/// Neighbour offsets (drow, dcol) in fixed expansion order.
const NEIGHBOURS: [(isize, isize); 8] =
    [(-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)];

/// Free 8-connected moves out of `cell`, honouring the corner-cutting rule.
pub fn grid_moves(grid: &OccupancyGrid, cell: Cell) -> impl Iterator<Item = (Cell, StepCost)> + '_ {
    NEIGHBOURS.iter().filter_map(move |&(dr, dc)| {
        let (r, c) = (cell.row as isize, cell.col as isize);
        let next = grid.in_grid(r + dr, c + dc)?;
        if !grid.is_free(next) {
            return None;
        }
        if dr != 0 && dc != 0 {
            let a = grid.in_grid(r + dr, c)?;
            let b = grid.in_grid(r, c + dc)?;
            if !(grid.is_free(a) && grid.is_free(b)) {
                return None;
            }
            Some((next, DIAGONAL))
        } else {
            Some((next, STRAIGHT))
        }
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridPath {
    pub cells: Vec<Cell>,
    /// Cell centers, with the exact query endpoints prepended and appended.
    pub points: Vec<Point>,
    pub length: f64,
    pub steps: StepCost,
}

#[derive(Debug, Clone, Copy)]
struct QueueKey {
    f: f64,
    h: f64,
    cell: Cell,
}

impl PartialEq for QueueKey {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for QueueKey {}

impl PartialOrd for QueueKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for QueueKey {
    fn cmp(&self, other: &Self) -> Ordering {
        self.f
            .total_cmp(&other.f)
            .then(self.h.total_cmp(&other.h))
            .then(self.cell.row.cmp(&other.cell.row))
            .then(self.cell.col.cmp(&other.cell.col))
    }
}

/// Shortest free path between two points on an arbitrary occupancy grid.
pub fn shortest_path_on_grid(grid: &OccupancyGrid, a: Point, b: Point) -> Result<GridPath> {
    let start = grid.cell_of(a).filter(|&c| grid.is_free(c)).ok_or(Error::BlockedPoint(a))?;
    let goal = grid.cell_of(b).filter(|&c| grid.is_free(c)).ok_or(Error::BlockedPoint(b))?;

    let idx = |c: Cell| c.row * grid.cols() + c.col;
    let n = grid.rows() * grid.cols();
    let mut best: Vec<Option<StepCost>> = vec![None; n];
    let mut parent: Vec<Option<Cell>> = vec![None; n];
    let mut closed = vec![false; n];
    let mut open = BinaryHeap::new();

    best[idx(start)] = Some(StepCost::default());
    let h0 = StepCost::octile(start, goal).value();
    open.push(Reverse(QueueKey { f: h0, h: h0, cell: start }));

    while let Some(Reverse(QueueKey { cell, .. })) = open.pop() {
        if closed[idx(cell)] {
            continue;
        }
        closed[idx(cell)] = true;
        if cell == goal {
            break;
        }
        let g = best[idx(cell)].expect("queued cells have a cost");
        for (next, step) in grid_moves(grid, cell) {
            if closed[idx(next)] {
                continue;
            }
            let g_next = g.plus(step);
            if best[idx(next)].is_some_and(|old| old.value() <= g_next.value()) {
                continue;
            }
            best[idx(next)] = Some(g_next);
            parent[idx(next)] = Some(cell);
            let h = StepCost::octile(next, goal);
            open.push(Reverse(QueueKey { f: g_next.plus(h).value(), h: h.value(), cell: next }));
        }
    }

    let steps = best[idx(goal)].ok_or(Error::NoPath { from: a, to: b })?;
    let mut cells = vec![goal];
    while let Some(p) = parent[idx(*cells.last().unwrap())] {
        cells.push(p);
    }
    cells.reverse();
    Ok(assemble_path(grid, a, b, cells, steps))
}

fn assemble_path(grid: &OccupancyGrid, a: Point, b: Point, cells: Vec<Cell>, steps: StepCost) -> GridPath {
    const SAME: f64 = 1e-12;
    if a == b {
        return GridPath { cells, points: vec![a], length: 0.0, steps };
    }
    let first = grid.center(cells[0]);
    let last = grid.center(*cells.last().unwrap());
    let length = if cells.len() == 1 {
        a.distance(b)
    } else {
        a.distance(first) + grid.resolution() * steps.value() + last.distance(b)
    };
    let mut points = vec![a];
    if cells.len() > 1 {
        for c in &cells {
            let p = grid.center(*c);
            if p.distance(*points.last().unwrap()) > SAME {
                points.push(p);
            }
        }
    }
    if b.distance(*points.last().unwrap()) > SAME {
        points.push(b);
    } else {
        *points.last_mut().unwrap() = b;
    }
    GridPath { cells, points, length, steps }
}

pub fn shortest_path(arena: &Arena, a: Point, b: Point) -> Result<GridPath> {
    if !arena.is_free(a) {
        return Err(Error::BlockedPoint(a));
    }
    if !arena.is_free(b) {
        return Err(Error::BlockedPoint(b));
    }
    shortest_path_on_grid(&arena.grid, a, b)
}

/// Named locations whose pairwise distances feed the cost model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum KeyPoint {
    Start(usize),
    Midpoint(usize),
    TopEntry(usize),
    BottomEntry(usize),
}

#[derive(Debug, Clone)]
pub struct DistanceCache {
    keys: Vec<(KeyPoint, Point)>,
    index: HashMap<KeyPoint, usize>,
    /// Row-major, grown one key at a time.
    table: Vec<Vec<f64>>,
}

impl DistanceCache {
    pub fn new() -> Self {
        Self { keys: Vec::new(), index: HashMap::new(), table: Vec::new() }
    }

    /// Registers every lane midpoint and waiting point plus the given robot starts.
    pub fn for_arena(arena: &Arena, starts: &[(usize, Point)]) -> Result<Self> {
        let mut cache = Self::new();
        for lane in &arena.lanes {
            cache.register(arena, KeyPoint::Midpoint(lane.index), lane.midpoint)?;
            cache.register(arena, KeyPoint::TopEntry(lane.index), lane.top_entry)?;
            cache.register(arena, KeyPoint::BottomEntry(lane.index), lane.bottom_entry)?;
        }
        for &(id, p) in starts {
            cache.register(arena, KeyPoint::Start(id), p)?;
        }
        Ok(cache)
    }

    /// Adds a key and computes its distance to every key already present.
    /// Re-registering a key at the same point is a no-op.
    pub fn register(&mut self, arena: &Arena, key: KeyPoint, p: Point) -> Result<()> {
        if let Some(&i) = self.index.get(&key) {
            if self.keys[i].1 == p {
                return Ok(());
            }
            return Err(Error::Invariant(format!("key {key:?} re-registered at a different point")));
        }
        let mut row = Vec::with_capacity(self.keys.len() + 1);
        for &(_, q) in &self.keys {
            row.push(shortest_path(arena, p, q)?.length);
        }
        row.push(0.0);
        for (i, r) in self.table.iter_mut().enumerate() {
            r.push(row[i]);
        }
        self.index.insert(key, self.keys.len());
        self.keys.push((key, p));
        self.table.push(row);
        Ok(())
    }

    pub fn point(&self, key: KeyPoint) -> Result<Point> {
        self.index.get(&key).map(|&i| self.keys[i].1).ok_or(Error::UnregisteredKey(key))
    }

    pub fn distance(&self, a: KeyPoint, b: KeyPoint) -> Result<f64> {
        let i = *self.index.get(&a).ok_or(Error::UnregisteredKey(a))?;
        let j = *self.index.get(&b).ok_or(Error::UnregisteredKey(b))?;
        Ok(self.table[i][j])
    }

    pub fn keys(&self) -> impl Iterator<Item = KeyPoint> + '_ {
        self.keys.iter().map(|(k, _)| *k)
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }
}

impl Default for DistanceCache {
    fn default() -> Self {
        Self::new()
    }
}
