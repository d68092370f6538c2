//! Rectangular cell grid shared by the scenario, field and engine layers.

use serde::{Deserialize, Serialize};

/// Side of a square cell, in meters.
pub const CELL_SIZE: f64 = 0.4;

/// Metric cost of an orthogonal step.
pub const ORTHOGONAL_COST: f64 = CELL_SIZE;

/// Metric cost of a diagonal step.
pub const DIAGONAL_COST: f64 = CELL_SIZE * std::f64::consts::SQRT_2;

/// Offsets of the 8-neighborhood, orthogonal moves first.
pub const NEIGHBORS_8: [(isize, isize); 8] = [
    (1, 0),
    (-1, 0),
    (0, 1),
    (0, -1),
    (1, 1),
    (1, -1),
    (-1, 1),
    (-1, -1),
];

/// Offsets of the 4-neighborhood.
pub const NEIGHBORS_4: [(isize, isize); 4] = [(1, 0), (-1, 0), (0, 1), (0, -1)];

/// A cell position; `x` is the column and `y` the row (growing downwards).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cell {
    pub x: usize,
    pub y: usize,
}

impl Cell {
    pub const fn new(x: usize, y: usize) -> Self {
        Self { x, y }
    }

    /// Offsets the cell, returning `None` when the result leaves the first quadrant.
    pub fn offset(self, dx: isize, dy: isize) -> Option<Cell> {
        Some(Cell {
            x: self.x.checked_add_signed(dx)?,
            y: self.y.checked_add_signed(dy)?,
        })
    }

    /// Euclidean distance between cell centers, in cell units.
    pub fn distance_cells(self, other: Cell) -> f64 {
        let dx = self.x as f64 - other.x as f64;
        let dy = self.y as f64 - other.y as f64;
        dx.hypot(dy)
    }

    /// Euclidean distance between cell centers, in meters.
    pub fn distance_meters(self, other: Cell) -> f64 {
        self.distance_cells(other) * CELL_SIZE
    }

    /// Metric position of the cell center, in meters.
    pub fn center(self) -> (f64, f64) {
        (
            (self.x as f64 + 0.5) * CELL_SIZE,
            (self.y as f64 + 0.5) * CELL_SIZE,
        )
    }
}

/// Dense row-major storage over a `width × height` rectangle.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid<T> {
    width: usize,
    height: usize,
    data: Vec<T>,
}

impl<T: Clone> Grid<T> {
    pub fn new(width: usize, height: usize, fill: T) -> Self {
        Self {
            width,
            height,
            data: vec![fill; width * height],
        }
    }

    /// Fills every cell with `value`, keeping dimensions.
    pub fn fill(&mut self, value: T) {
        self.data.iter_mut().for_each(|v| *v = value.clone());
    }

    /// Builds a grid of the same shape by mapping every value.
    pub fn map<U, F: FnMut(&T) -> U>(&self, f: F) -> Grid<U> {
        Grid {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(f).collect(),
        }
    }
}

impl<T> Grid<T> {
    /// Wraps row-major data. Panics if the length does not match the shape.
    pub fn from_vec(width: usize, height: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), width * height, "grid data does not match shape");
        Self {
            width,
            height,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn contains(&self, cell: Cell) -> bool {
        cell.x < self.width && cell.y < self.height
    }

    pub fn index(&self, cell: Cell) -> usize {
        debug_assert!(self.contains(cell));
        cell.y * self.width + cell.x
    }

    pub fn cell_at(&self, index: usize) -> Cell {
        Cell::new(index % self.width, index / self.width)
    }

    pub fn get(&self, cell: Cell) -> Option<&T> {
        self.contains(cell)
            .then(|| &self.data[cell.y * self.width + cell.x])
    }

    pub fn get_mut(&mut self, cell: Cell) -> Option<&mut T> {
        if self.contains(cell) {
            let i = cell.y * self.width + cell.x;
            Some(&mut self.data[i])
        } else {
            None
        }
    }

    pub fn values(&self) -> &[T] {
        &self.data
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    /// All cells in row-major order.
    pub fn cells(&self) -> impl Iterator<Item = Cell> + '_ {
        (0..self.height).flat_map(move |y| (0..self.width).map(move |x| Cell::new(x, y)))
    }

    /// Neighbor cells inside the grid, paired with their offsets.
    pub fn neighbors8(&self, cell: Cell) -> impl Iterator<Item = (Cell, isize, isize)> + '_ {
        NEIGHBORS_8.iter().filter_map(move |&(dx, dy)| {
            let n = cell.offset(dx, dy)?;
            self.contains(n).then_some((n, dx, dy))
        })
    }

    pub fn neighbors4(&self, cell: Cell) -> impl Iterator<Item = Cell> + '_ {
        NEIGHBORS_4.iter().filter_map(move |&(dx, dy)| {
            let n = cell.offset(dx, dy)?;
            self.contains(n).then_some(n)
        })
    }

    /// Row slices, top to bottom.
    pub fn rows(&self) -> impl Iterator<Item = &[T]> {
        self.data.chunks(self.width.max(1))
    }
}

impl<T> std::ops::Index<Cell> for Grid<T> {
    type Output = T;

    fn index(&self, cell: Cell) -> &T {
        assert!(self.contains(cell), "cell {cell:?} outside grid");
        &self.data[cell.y * self.width + cell.x]
    }
}

impl<T> std::ops::IndexMut<Cell> for Grid<T> {
    fn index_mut(&mut self, cell: Cell) -> &mut T {
        assert!(self.contains(cell), "cell {cell:?} outside grid");
        let w = self.width;
        &mut self.data[cell.y * w + cell.x]
    }
}

/// Whether a step between two neighboring cells is allowed given a walkability
/// predicate: both ends must be walkable, and a diagonal step is refused when
/// both flanking orthogonal cells are blocked.
pub fn step_allowed<F>(walkable: F, from: Cell, dx: isize, dy: isize) -> bool
where
    F: Fn(Cell) -> bool,
{
    let Some(to) = from.offset(dx, dy) else {
        return false;
    };
    if !walkable(to) {
        return false;
    }
    if dx != 0 && dy != 0 {
        let side_a = from.offset(dx, 0).is_some_and(&walkable);
        let side_b = from.offset(0, dy).is_some_and(&walkable);
        if !side_a && !side_b {
            return false;
        }
    }
    true
}

/// Metric cost of a step with the given offset.
pub fn step_cost(dx: isize, dy: isize) -> f64 {
    if dx != 0 && dy != 0 {
        DIAGONAL_COST
    } else {
        ORTHOGONAL_COST
    }
}
