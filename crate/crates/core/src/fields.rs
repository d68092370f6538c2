//! Static distance fields (one per target, one for obstacles) and the dynamic
//! proxemic field rebuilt from agent positions every step.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use thiserror::Error;

use crate::grid::{step_allowed, step_cost, Cell, Grid, CELL_SIZE, NEIGHBORS_8};
use crate::scenario::CellKind;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FieldError {
    #[error("target cell set is empty")]
    EmptyTarget,
    #[error("target cell {0:?} is not walkable")]
    BlockedTarget(Cell),
}

/// Walking distance to a target, in meters. Unreachable and obstacle cells
/// hold `f64::INFINITY`.
#[derive(Debug, Clone, PartialEq)]
pub struct FloorField {
    values: Grid<f64>,
}

impl FloorField {
    pub fn get(&self, cell: Cell) -> f64 {
        self.values.get(cell).copied().unwrap_or(f64::INFINITY)
    }

    pub fn values(&self) -> &Grid<f64> {
        &self.values
    }
}

/// Distance from every cell to the nearest obstacle, in meters. Cells outside
/// the grid count as obstacles.
#[derive(Debug, Clone, PartialEq)]
pub struct ObstacleField {
    values: Grid<f64>,
}

impl ObstacleField {
    pub fn get(&self, cell: Cell) -> f64 {
        self.values.get(cell).copied().unwrap_or(0.0)
    }

    pub fn values(&self) -> &Grid<f64> {
        &self.values
    }
}

#[derive(Copy, Clone, PartialEq)]
struct Frontier {
    dist: f64,
    index: usize,
}

impl Eq for Frontier {}

impl Ord for Frontier {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on distance
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.index.cmp(&self.index))
    }
}

impl PartialOrd for Frontier {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Multi-source Dijkstra over walkable cells with 8-neighborhood metric costs
/// and no corner cutting.
fn propagate(grid: &Grid<CellKind>, seeds: impl IntoIterator<Item = (Cell, f64)>) -> Grid<f64> {
    let mut dist = Grid::new(grid.width(), grid.height(), f64::INFINITY);
    let mut heap = BinaryHeap::new();
    for (cell, d) in seeds {
        if d < dist[cell] {
            dist[cell] = d;
            heap.push(Frontier {
                dist: d,
                index: grid.index(cell),
            });
        }
    }
    let walkable = |c: Cell| grid.get(c).is_some_and(|k| k.is_walkable());
    while let Some(Frontier { dist: d, index }) = heap.pop() {
        let cell = grid.cell_at(index);
        if d > dist[cell] {
            continue;
        }
        for (n, dx, dy) in grid.neighbors8(cell) {
            if !step_allowed(walkable, cell, dx, dy) {
                continue;
            }
            let nd = d + step_cost(dx, dy);
            if nd < dist[n] {
                dist[n] = nd;
                heap.push(Frontier {
                    dist: nd,
                    index: grid.index(n),
                });
            }
        }
    }
    dist
}

/// Shortest walking distance from every cell to the target set.
pub fn compute_path_field(
    grid: &Grid<CellKind>,
    target: &[Cell],
) -> Result<FloorField, FieldError> {
    if target.is_empty() {
        return Err(FieldError::EmptyTarget);
    }
    if let Some(&c) = target
        .iter()
        .find(|&&c| !grid.get(c).is_some_and(|k| k.is_walkable()))
    {
        return Err(FieldError::BlockedTarget(c));
    }
    Ok(FloorField {
        values: propagate(grid, target.iter().map(|&c| (c, 0.0))),
    })
}

/// Distance to the nearest obstacle cell or grid border.
pub fn compute_obstacle_field(grid: &Grid<CellKind>) -> ObstacleField {
    let (w, h) = (grid.width(), grid.height());
    let mut seeds = Vec::new();
    for cell in grid.cells() {
        if !grid[cell].is_walkable() {
            continue;
        }
        // Distance to the nearest obstacle among the cell's own neighbors,
        // with the border ring counting as obstacle.
        let mut best = f64::INFINITY;
        for &(dx, dy) in &NEIGHBORS_8 {
            let nx = cell.x as isize + dx;
            let ny = cell.y as isize + dy;
            let outside = nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize;
            if outside || !grid[Cell::new(nx as usize, ny as usize)].is_walkable() {
                best = best.min(step_cost(dx, dy));
            }
        }
        if best.is_finite() {
            seeds.push((cell, best));
        }
    }
    let mut values = propagate(grid, seeds);
    for cell in grid.cells() {
        if !grid[cell].is_walkable() {
            values[cell] = 0.0;
        }
    }
    ObstacleField { values }
}

/// Support radius of the proxemic kernel, meters.
pub const PROXEMIC_RADIUS: f64 = 1.2;

/// Linear kernel: 1 at the agent, 0 at `PROXEMIC_RADIUS` and beyond.
pub fn proxemic_kernel(distance_m: f64) -> f64 {
    (1.0 - distance_m / PROXEMIC_RADIUS).max(0.0)
}

/// Sum of per-agent proxemic kernels.
#[derive(Debug, Clone, PartialEq)]
pub struct ProxemicField {
    values: Grid<f64>,
    offsets: Vec<(isize, isize, f64)>,
}

impl ProxemicField {
    pub fn new(width: usize, height: usize) -> Self {
        let reach = (PROXEMIC_RADIUS / CELL_SIZE).ceil() as isize;
        let mut offsets = Vec::new();
        for dy in -reach..=reach {
            for dx in -reach..=reach {
                let d = (dx as f64).hypot(dy as f64) * CELL_SIZE;
                let v = proxemic_kernel(d);
                if d <= PROXEMIC_RADIUS && v > 0.0 {
                    offsets.push((dx, dy, v));
                }
            }
        }
        Self {
            values: Grid::new(width, height, 0.0),
            offsets,
        }
    }

    /// Clears the field and adds one kernel per position.
    pub fn rebuild(&mut self, positions: impl IntoIterator<Item = Cell>) {
        self.values.fill(0.0);
        for p in positions {
            for &(dx, dy, v) in &self.offsets {
                if let Some(c) = p.offset(dx, dy) {
                    if let Some(slot) = self.values.get_mut(c) {
                        *slot += v;
                    }
                }
            }
        }
    }

    pub fn get(&self, cell: Cell) -> f64 {
        self.values.get(cell).copied().unwrap_or(0.0)
    }

    pub fn values(&self) -> &Grid<f64> {
        &self.values
    }
}

/// Free-standing rebuild: a fresh field for the given positions.
pub fn rebuild_proxemic_field(
    width: usize,
    height: usize,
    positions: impl IntoIterator<Item = Cell>,
) -> ProxemicField {
    let mut field = ProxemicField::new(width, height);
    field.rebuild(positions);
    field
}
