//! Independent oracles and fixtures shared by the integration tests.
#![allow(dead_code)]

use rand::Rng;
use wayfinder::grid::{Cell, Grid};
use wayfinder::scenario::CellKind;

const ORTH: f64 = 0.4;
const DIAG: f64 = ORTH * std::f64::consts::SQRT_2;

/// Random rectangular grid with roughly `obstacle_share` blocked cells.
pub fn random_grid<R: Rng>(rng: &mut R, w: usize, h: usize, obstacle_share: f64) -> Grid<CellKind> {
    let data = (0..w * h)
        .map(|_| {
            if rng.gen::<f64>() < obstacle_share {
                CellKind::Obstacle
            } else {
                CellKind::Walkable
            }
        })
        .collect();
    Grid::from_vec(w, h, data)
}

fn open(grid: &Grid<CellKind>, x: isize, y: isize) -> bool {
    x >= 0
        && y >= 0
        && (x as usize) < grid.width()
        && (y as usize) < grid.height()
        && grid[Cell::new(x as usize, y as usize)] == CellKind::Walkable
}

/// Explicit walking graph: node = row-major index, edges with metric cost.
pub fn adjacency(grid: &Grid<CellKind>) -> Vec<Vec<(usize, f64)>> {
    let (w, h) = (grid.width() as isize, grid.height() as isize);
    let mut adj = vec![Vec::new(); (w * h) as usize];
    for y in 0..h {
        for x in 0..w {
            if !open(grid, x, y) {
                continue;
            }
            for dy in -1..=1isize {
                for dx in -1..=1isize {
                    if (dx, dy) == (0, 0) || !open(grid, x + dx, y + dy) {
                        continue;
                    }
                    let diagonal = dx != 0 && dy != 0;
                    if diagonal && !open(grid, x + dx, y) && !open(grid, x, y + dy) {
                        continue;
                    }
                    let cost = if diagonal { DIAG } else { ORTH };
                    adj[(y * w + x) as usize].push((((y + dy) * w + x + dx) as usize, cost));
                }
            }
        }
    }
    adj
}

/// Quadratic Dijkstra by linear scan for the closest unsettled node.
pub fn dijkstra_scan(adj: &[Vec<(usize, f64)>], sources: &[(usize, f64)]) -> Vec<f64> {
    let n = adj.len();
    let mut dist = vec![f64::INFINITY; n];
    let mut done = vec![false; n];
    for &(s, d) in sources {
        dist[s] = dist[s].min(d);
    }
    loop {
        let mut u = None;
        for v in 0..n {
            if !done[v] && dist[v].is_finite() && u.is_none_or(|u: usize| dist[v] < dist[u]) {
                u = Some(v);
            }
        }
        let Some(u) = u else { break };
        done[u] = true;
        for &(v, c) in &adj[u] {
            if dist[u] + c < dist[v] {
                dist[v] = dist[u] + c;
            }
        }
    }
    dist
}

/// Shortest walking distance to any of `targets`, per cell (row-major).
pub fn path_field_oracle(grid: &Grid<CellKind>, targets: &[Cell]) -> Vec<f64> {
    let w = grid.width();
    let sources: Vec<(usize, f64)> = targets.iter().map(|c| (c.y * w + c.x, 0.0)).collect();
    dijkstra_scan(&adjacency(grid), &sources)
}

/// Distance to the nearest blocked cell, the grid being surrounded by a ring
/// of blocked cells. Computed on the padded grid with one extra sink node
/// joined to every blocked cell.
pub fn obstacle_field_oracle(grid: &Grid<CellKind>) -> Vec<f64> {
    let (w, h) = (grid.width(), grid.height());
    let (pw, ph) = (w + 2, h + 2);
    let padded = Grid::from_vec(
        pw,
        ph,
        (0..pw * ph)
            .map(|i| {
                let (x, y) = (i % pw, i / pw);
                if x == 0 || y == 0 || x == pw - 1 || y == ph - 1 {
                    CellKind::Obstacle
                } else {
                    grid[Cell::new(x - 1, y - 1)]
                }
            })
            .collect(),
    );
    let mut adj = adjacency(&padded);
    let sink = adj.len();
    adj.push(Vec::new());
    // walkable → neighboring blocked cell, any of the eight directions
    let mut blocked_links = Vec::new();
    for y in 0..ph as isize {
        for x in 0..pw as isize {
            if !open(&padded, x, y) {
                continue;
            }
            for dy in -1..=1isize {
                for dx in -1..=1isize {
                    let (nx, ny) = (x + dx, y + dy);
                    if (dx, dy) == (0, 0)
                        || nx < 0
                        || ny < 0
                        || nx >= pw as isize
                        || ny >= ph as isize
                    {
                        continue;
                    }
                    if !open(&padded, nx, ny) {
                        let cost = if dx != 0 && dy != 0 { DIAG } else { ORTH };
                        blocked_links.push(((y * pw as isize + x) as usize, cost));
                    }
                }
            }
        }
    }
    // reversed: sink → walkable cell at the link cost
    for (v, c) in blocked_links {
        adj[sink].push((v, c));
    }
    let dist = dijkstra_scan(&adj, &[(sink, 0.0)]);
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let padded_index = (y + 1) * pw + x + 1;
            out.push(if grid[Cell::new(x, y)] == CellKind::Walkable {
                dist[padded_index]
            } else {
                0.0
            });
        }
    }
    out
}

/// Compares two fields cell by cell; infinities must match exactly.
pub fn fields_agree(actual: &[f64], expected: &[f64], tol: f64) -> Result<(), String> {
    if actual.len() != expected.len() {
        return Err(format!("length {} vs {}", actual.len(), expected.len()));
    }
    for (i, (a, e)) in actual.iter().zip(expected).enumerate() {
        let ok = if e.is_infinite() {
            a == e
        } else {
            (a - e).abs() <= tol
        };
        if !ok {
            return Err(format!("cell {i}: got {a}, expected {e}"));
        }
    }
    Ok(())
}

/// Walkable cells of a grid in row-major order.
pub fn walkable_cells(grid: &Grid<CellKind>) -> Vec<Cell> {
    grid.cells()
        .filter(|&c| grid[c] == CellKind::Walkable)
        .collect()
}

use std::collections::BTreeSet;
use wayfinder::fields::FloorField;
use wayfinder::route_choice::AgentView;
use wayfinder::scenario::Target;

/// Ids of the agents ahead of `me` towards `target`, by direct set
/// comprehension over the population.
pub fn ahead_set(
    target: Target,
    field: &FloorField,
    me: &AgentView,
    agents: &[AgentView],
) -> BTreeSet<usize> {
    agents
        .iter()
        .filter(|a| a.id != me.id && a.dest == Some(target) && field.get(a.pos) < field.get(me.pos))
        .map(|a| a.id)
        .collect()
}

/// Random population on distinct walkable cells of `grid` heading to one of
/// `targets` (or nowhere).
pub fn random_population<R: Rng>(
    rng: &mut R,
    grid: &Grid<CellKind>,
    targets: &[Target],
    n: usize,
) -> Vec<AgentView> {
    use rand::seq::SliceRandom;
    let free = walkable_cells(grid);
    free.choose_multiple(rng, n.min(free.len()))
        .enumerate()
        .map(|(id, &pos)| {
            let k = rng.gen_range(0..=targets.len());
            AgentView {
                id,
                pos,
                dest: targets.get(k).copied(),
            }
        })
        .collect()
}
