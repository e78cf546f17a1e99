//! Piano arena geometry: vertical lanes separated by walls, waiting points
//! above and below every lane, and a rasterized occupancy grid.
//!
//! World frame: x grows to the right, y grows upward. The lane band occupies
//! `[band.lo, band.hi]`; the open region above it is Ω1, below it Ω2.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Band, Point, Rect};

/// Free space kept above and below the lane band.
pub const OPEN_CLEARANCE_M: f64 = 0.8;

const GEOM_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArenaConfig {
    pub lane_count: usize,
    #[serde(rename = "lane_width_m")]
    pub lane_width: f64,
    #[serde(rename = "lane_length_m")]
    pub lane_length: f64,
    #[serde(rename = "wall_thickness_m")]
    pub wall_thickness: f64,
    #[serde(rename = "waiting_offset_m")]
    pub waiting_offset: f64,
    #[serde(rename = "grid_resolution_m")]
    pub grid_resolution: f64,
    pub note_order: Vec<String>,
}

impl Default for ArenaConfig {
    fn default() -> Self {
        Self {
            lane_count: 7,
            lane_width: 0.5,
            lane_length: 0.4,
            wall_thickness: 0.1,
            waiting_offset: 0.2,
            grid_resolution: 0.05,
            note_order: ["G3", "A3", "B3", "C4", "D4", "E4", "G4"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
        }
    }
}

impl ArenaConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArena(msg));
        if self.lane_count == 0 {
            return bad("lane_count must be at least 1".into());
        }
        for (name, v) in [
            ("lane_width_m", self.lane_width),
            ("lane_length_m", self.lane_length),
            ("wall_thickness_m", self.wall_thickness),
            ("waiting_offset_m", self.waiting_offset),
            ("grid_resolution_m", self.grid_resolution),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return bad(format!("{name} must be positive and finite, got {v}"));
            }
        }
        if self.grid_resolution > self.lane_width.min(self.wall_thickness) {
            return bad(format!(
                "grid_resolution_m {} exceeds min(lane width, wall thickness)",
                self.grid_resolution
            ));
        }
        if self.waiting_offset + self.grid_resolution >= OPEN_CLEARANCE_M {
            return bad(format!(
                "waiting_offset_m {} leaves waiting points outside the {} m clearance",
                self.waiting_offset, OPEN_CLEARANCE_M
            ));
        }
        if self.note_order.len() != self.lane_count {
            return bad(format!(
                "note_order has {} entries for {} lanes",
                self.note_order.len(),
                self.lane_count
            ));
        }
        let mut seen = HashSet::new();
        for note in &self.note_order {
            if !seen.insert(note.as_str()) {
                return bad(format!("note `{note}` appears twice in note_order"));
            }
        }
        Ok(())
    }

    /// Waiting point to waiting point distance through one lane.
    pub fn through_trip(&self) -> f64 {
        self.lane_length + 2.0 * self.waiting_offset
    }

    /// Waiting point to lane midpoint distance.
    pub fn half_trip(&self) -> f64 {
        self.waiting_offset + self.lane_length / 2.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lane {
    pub index: usize,
    pub note: String,
    /// Sound-trigger patch at the lane center.
    pub midpoint: Point,
    pub top_entry: Point,
    pub bottom_entry: Point,
    /// Free x-extent between the bounding walls.
    pub x_min: f64,
    pub x_max: f64,
}

impl Lane {
    pub fn entry(&self, side: Side) -> Point {
        match side {
            Side::Top => self.top_entry,
            Side::Bottom => self.bottom_entry,
        }
    }

    pub fn contains_x(&self, x: f64) -> bool {
        x >= self.x_min && x <= self.x_max
    }
}

/// Which open region a robot is on, relative to the lane band.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Top,
    Bottom,
}

impl Side {
    pub fn opposite(self) -> Side {
        match self {
            Side::Top => Side::Bottom,
            Side::Bottom => Side::Top,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Region {
    /// Above the lanes.
    Omega1,
    /// Below the lanes.
    Omega2,
    /// The lane band.
    Omega3,
}

impl Region {
    pub fn side(self) -> Option<Side> {
        match self {
            Region::Omega1 => Some(Side::Top),
            Region::Omega2 => Some(Side::Bottom),
            Region::Omega3 => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cell {
    pub row: usize,
    pub col: usize,
}

/// Occupancy grid whose cell centers sit on the lattice `origin + (col, row) * resolution`.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyGrid {
    origin: Point,
    resolution: f64,
    rows: usize,
    cols: usize,
    blocked: Vec<bool>,
}

impl OccupancyGrid {
    /// Grid covering `bounds` with every cell free.
    pub fn open(bounds: Rect, resolution: f64) -> Self {
        let cols = (bounds.width() / resolution).round() as usize + 1;
        let rows = (bounds.height() / resolution).round() as usize + 1;
        let mut grid = Self {
            origin: bounds.min,
            resolution,
            rows,
            cols,
            blocked: vec![false; rows * cols],
        };
        for row in 0..rows {
            for col in 0..cols {
                let c = grid.center(Cell { row, col });
                if !bounds.contains_eps(c, GEOM_EPS) {
                    grid.set_blocked(Cell { row, col }, true);
                }
            }
        }
        grid
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn center(&self, cell: Cell) -> Point {
        Point::new(
            self.origin.x + cell.col as f64 * self.resolution,
            self.origin.y + cell.row as f64 * self.resolution,
        )
    }

    /// Square footprint of a cell.
    pub fn cell_rect(&self, cell: Cell) -> Rect {
        let c = self.center(cell);
        let h = self.resolution / 2.0;
        Rect::new(Point::new(c.x - h, c.y - h), Point::new(c.x + h, c.y + h))
    }

    pub fn cell_of(&self, p: Point) -> Option<Cell> {
        let col = ((p.x - self.origin.x) / self.resolution).round();
        let row = ((p.y - self.origin.y) / self.resolution).round();
        if !(col >= 0.0 && row >= 0.0) {
            return None;
        }
        let (row, col) = (row as usize, col as usize);
        (row < self.rows && col < self.cols).then_some(Cell { row, col })
    }

    fn index(&self, cell: Cell) -> usize {
        cell.row * self.cols + cell.col
    }

    pub fn in_grid(&self, row: isize, col: isize) -> Option<Cell> {
        (row >= 0 && col >= 0 && (row as usize) < self.rows && (col as usize) < self.cols)
            .then_some(Cell { row: row as usize, col: col as usize })
    }

    pub fn is_free(&self, cell: Cell) -> bool {
        cell.row < self.rows && cell.col < self.cols && !self.blocked[self.index(cell)]
    }

    pub fn is_point_free(&self, p: Point) -> bool {
        self.cell_of(p).is_some_and(|c| self.is_free(c))
    }

    pub fn set_blocked(&mut self, cell: Cell, blocked: bool) {
        let i = self.index(cell);
        self.blocked[i] = blocked;
    }

    /// Blocks every cell whose footprint overlaps `rect` with positive area.
    pub fn block_rect(&mut self, rect: &Rect) {
        for row in 0..self.rows {
            for col in 0..self.cols {
                let cell = Cell { row, col };
                if self.cell_rect(cell).overlaps(rect, GEOM_EPS) {
                    self.set_blocked(cell, true);
                }
            }
        }
    }

    pub fn free_cells(&self) -> impl Iterator<Item = Cell> + '_ {
        (0..self.rows)
            .flat_map(move |row| (0..self.cols).map(move |col| Cell { row, col }))
            .filter(|&c| self.is_free(c))
    }

    /// Binary PGM (P5), 255 = free, 0 = blocked, first image row = largest y.
    pub fn to_pgm(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.cols, self.rows).into_bytes();
        for row in (0..self.rows).rev() {
            for col in 0..self.cols {
                out.push(if self.is_free(Cell { row, col }) { 255 } else { 0 });
            }
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct Arena {
    pub config: ArenaConfig,
    pub lanes: Vec<Lane>,
    pub walls: Vec<Rect>,
    pub grid: OccupancyGrid,
    pub bounds: Rect,
    pub omega1_band: Band,
    pub omega2_band: Band,
    pub omega3_band: Band,
}

impl Arena {
    pub fn build(config: ArenaConfig) -> Result<Self> {
        config.validate()?;
        let w = config.lane_width;
        let t = config.wall_thickness;
        let n = config.lane_count;
        let width = n as f64 * w + (n + 1) as f64 * t;
        let height = config.lane_length + 2.0 * OPEN_CLEARANCE_M;
        let bounds = Rect::new(Point::new(0.0, 0.0), Point::new(width, height));
        let band = Band { lo: OPEN_CLEARANCE_M, hi: OPEN_CLEARANCE_M + config.lane_length };
        let mid_y = (band.lo + band.hi) / 2.0;

        let walls: Vec<Rect> = (0..=n)
            .map(|i| {
                let x0 = i as f64 * (w + t);
                Rect::new(Point::new(x0, band.lo), Point::new(x0 + t, band.hi))
            })
            .collect();
        let lanes: Vec<Lane> = config
            .note_order
            .iter()
            .enumerate()
            .map(|(i, note)| {
                let x_min = t + i as f64 * (w + t);
                let xc = x_min + w / 2.0;
                Lane {
                    index: i,
                    note: note.clone(),
                    midpoint: Point::new(xc, mid_y),
                    top_entry: Point::new(xc, band.hi + config.waiting_offset),
                    bottom_entry: Point::new(xc, band.lo - config.waiting_offset),
                    x_min,
                    x_max: x_min + w,
                }
            })
            .collect();

        let mut grid = OccupancyGrid::open(bounds, config.grid_resolution);
        for wall in &walls {
            grid.block_rect(wall);
        }

        let arena = Self {
            config,
            lanes,
            walls,
            grid,
            bounds,
            omega1_band: Band { lo: band.hi, hi: height },
            omega2_band: Band { lo: 0.0, hi: band.lo },
            omega3_band: band,
        };
        for lane in &arena.lanes {
            for p in [lane.midpoint, lane.top_entry, lane.bottom_entry] {
                if !arena.grid.is_point_free(p) {
                    return Err(Error::InvalidArena(format!(
                        "lane {} key point {p} falls in a blocked cell",
                        lane.index
                    )));
                }
            }
        }
        Ok(arena)
    }

    pub fn default_piano() -> Self {
        Self::build(ArenaConfig::default()).expect("default arena config is valid")
    }

    pub fn is_free(&self, p: Point) -> bool {
        self.bounds.contains(p) && self.grid.is_point_free(p)
    }

    pub fn region_of(&self, p: Point) -> Result<Region> {
        if !self.is_free(p) {
            return Err(Error::BlockedPoint(p));
        }
        Ok(self.region_of_y(p.y))
    }

    /// Region by height alone, for points already known to be free.
    pub fn region_of_y(&self, y: f64) -> Region {
        if y > self.omega3_band.hi {
            Region::Omega1
        } else if y < self.omega3_band.lo {
            Region::Omega2
        } else {
            Region::Omega3
        }
    }

    /// Robot-specific spot just off a waiting point, away from the lane band.
    /// The lateral offset follows a golden-ratio sequence over robot ids, so
    /// distinct robots hold on distinct rays out of the waiting point and no
    /// ray is vertical or diagonal on the grid. `None` if not free open space.
    pub fn holding_spot(&self, waiting_point: Point, side: Side, robot_id: usize) -> Option<Point> {
        let cfg = &self.config;
        let phase = (robot_id as f64 * 0.618_033_988_749_894_9).fract();
        let lateral = (phase - 0.5) * 0.9 * cfg.lane_width;
        let depth = match side {
            Side::Top => cfg.waiting_offset / 2.0,
            Side::Bottom => -cfg.waiting_offset / 2.0,
        };
        let q = waiting_point + Point::new(lateral, depth);
        (self.is_free(q) && self.region_of_y(q.y).side() == Some(side)).then_some(q)
    }

    pub fn lane_for_note(&self, note: &str) -> Result<&Lane> {
        self.lanes
            .iter()
            .find(|l| l.note == note)
            .ok_or_else(|| Error::UnknownNote(note.to_string()))
    }

    /// Lane whose free x-extent contains `x`.
    pub fn lane_at_x(&self, x: f64) -> Option<&Lane> {
        self.lanes.iter().find(|l| l.contains_x(x))
    }

    pub fn omega1_rect(&self) -> Rect {
        Rect::new(
            Point::new(self.bounds.min.x, self.omega1_band.lo),
            Point::new(self.bounds.max.x, self.omega1_band.hi),
        )
    }

    pub fn omega2_rect(&self) -> Rect {
        Rect::new(
            Point::new(self.bounds.min.x, self.omega2_band.lo),
            Point::new(self.bounds.max.x, self.omega2_band.hi),
        )
    }
}
