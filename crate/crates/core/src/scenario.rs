//! Scenario documents: an annotated occupancy grid plus simulation parameters.
//!
//! A document is a block of `key = value` header lines, a blank line, and a
//! character raster:
//!
//! | char        | meaning                              |
//! |-------------|--------------------------------------|
//! | `#`         | obstacle                             |
//! | `.`         | walkable floor                       |
//! | `S`         | start area (walkable)                |
//! | `1`..=`9`   | opening group (walkable)             |
//! | other ASCII letters | final destination group (walkable) |
//!
//! Header lines starting with `;` are comments. Regions are derived by a
//! 4-connected flood fill over walkable cells that are not opening cells.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{Cell, Grid, CELL_SIZE};

/// Identifier of an opening group (`'1'..='9'`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct OpeningId(pub char);

/// Identifier of a final destination group (an ASCII letter other than `S`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DestinationId(pub char);

/// Identifier of a derived region, numbered in row-major discovery order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RegionId(pub u32);

impl fmt::Display for OpeningId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for DestinationId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for RegionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "R{}", self.0)
    }
}

/// Anything an agent can walk towards: an opening or a final destination.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Target {
    Opening(OpeningId),
    Destination(DestinationId),
}

impl Target {
    /// Opening digits and destination letters never collide, so a single
    /// character identifies a target.
    pub fn from_char(c: char) -> Option<Target> {
        match Marker::from_char(c)? {
            Marker::Opening(id) => Some(Target::Opening(id)),
            Marker::Destination(id) => Some(Target::Destination(id)),
            _ => None,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Target::Opening(id) => id.0,
            Target::Destination(id) => id.0,
        }
    }

    pub fn opening(self) -> Option<OpeningId> {
        match self {
            Target::Opening(id) => Some(id),
            Target::Destination(_) => None,
        }
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_char())
    }
}

/// Raw raster annotation of a cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Marker {
    Obstacle,
    Floor,
    Start,
    Opening(OpeningId),
    Destination(DestinationId),
}

impl Marker {
    pub fn from_char(c: char) -> Option<Marker> {
        match c {
            '#' => Some(Marker::Obstacle),
            '.' => Some(Marker::Floor),
            'S' => Some(Marker::Start),
            '1'..='9' => Some(Marker::Opening(OpeningId(c))),
            c if c.is_ascii_alphabetic() => Some(Marker::Destination(DestinationId(c))),
            _ => None,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Marker::Obstacle => '#',
            Marker::Floor => '.',
            Marker::Start => 'S',
            Marker::Opening(id) => id.0,
            Marker::Destination(id) => id.0,
        }
    }

    pub fn is_walkable(self) -> bool {
        !matches!(self, Marker::Obstacle)
    }
}

/// Occupancy of a cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CellKind {
    Obstacle,
    Walkable,
}

impl CellKind {
    pub fn is_walkable(self) -> bool {
        self == CellKind::Walkable
    }
}

/// What part of the environment a cell belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Zone {
    Obstacle,
    Region(RegionId),
    Opening(OpeningId),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Opening {
    pub id: OpeningId,
    pub cells: Vec<Cell>,
    /// Passage width: cells across the passage times the cell side.
    pub width_meters: f64,
    /// The two regions the opening connects, in ascending order.
    pub regions: [RegionId; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    pub id: RegionId,
    pub cells: Vec<Cell>,
    pub openings: Vec<OpeningId>,
    pub destinations: Vec<DestinationId>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Destination {
    pub id: DestinationId,
    pub cells: Vec<Cell>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StartArea {
    pub cells: Vec<Cell>,
    pub spawn_count: usize,
}

/// Operational movement constants. These belong to the stand-in walking model,
/// not to the route choice model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MovementParams {
    /// Attraction towards lower path-field values, per meter.
    pub k_s: f64,
    /// Repulsion from the proxemic field.
    pub k_p: f64,
    /// Repulsion from walls closer than `d_0`.
    pub k_o: f64,
    /// Wall clearance in meters.
    pub d_0: f64,
}

impl Default for MovementParams {
    fn default() -> Self {
        Self {
            k_s: 10.0,
            k_p: 4.0,
            k_o: 5.0,
            d_0: 0.4,
        }
    }
}

/// Route choice and timing parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub kappa_tt: f64,
    pub kappa_q: f64,
    pub kappa_f: f64,
    /// Perception threshold on path-field distance, meters.
    pub gamma: f64,
    /// Choice diffusion radius, meters.
    pub rho_c: f64,
    /// Steps a choice diffusion persists.
    pub tau_c: u32,
    /// Steps an agent keeps diffusing after a plan change.
    pub tau_a: u32,
    /// m/s
    pub desired_speed: f64,
    /// seconds per step
    pub step_duration: f64,
    pub seed: u64,
    pub agent_count: usize,
    pub max_steps: u64,
    pub movement: MovementParams,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            kappa_tt: 100.0,
            kappa_q: 25.0,
            kappa_f: 5.0,
            gamma: 10.0,
            rho_c: 1.2,
            tau_c: 3,
            tau_a: 3,
            desired_speed: 1.33,
            step_duration: 0.3,
            seed: 0,
            agent_count: 46,
            max_steps: 10_000,
            movement: MovementParams::default(),
        }
    }
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        let reals = [
            ("kappa_tt", self.kappa_tt),
            ("kappa_q", self.kappa_q),
            ("kappa_f", self.kappa_f),
            ("gamma", self.gamma),
            ("rho_c", self.rho_c),
            ("desired_speed", self.desired_speed),
            ("step_duration", self.step_duration),
            ("k_s", self.movement.k_s),
            ("k_p", self.movement.k_p),
            ("k_o", self.movement.k_o),
            ("d_0", self.movement.d_0),
        ];
        for (key, v) in reals {
            if !v.is_finite() || v < 0.0 {
                return Err(ScenarioError::InvalidConfig(format!(
                    "{key} must be finite and non-negative, got {v}"
                )));
            }
        }
        if self.step_duration <= 0.0 {
            return Err(ScenarioError::InvalidConfig(
                "step_duration must be positive".into(),
            ));
        }
        if self.desired_speed <= 0.0 {
            return Err(ScenarioError::InvalidConfig(
                "desired_speed must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Sets a parameter by its document header key.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        fn real(v: &str) -> Result<f64, String> {
            v.parse::<f64>()
                .map_err(|e| format!("expected a number: {e}"))
        }
        fn int<T: std::str::FromStr>(v: &str) -> Result<T, String>
        where
            T::Err: fmt::Display,
        {
            v.parse::<T>()
                .map_err(|e| format!("expected an integer: {e}"))
        }
        match key {
            "kappa_tt" => self.kappa_tt = real(value)?,
            "kappa_q" => self.kappa_q = real(value)?,
            "kappa_f" => self.kappa_f = real(value)?,
            "gamma" => self.gamma = real(value)?,
            "rho_c" => self.rho_c = real(value)?,
            "tau_c" => self.tau_c = int(value)?,
            "tau_a" => self.tau_a = int(value)?,
            "desired_speed" => self.desired_speed = real(value)?,
            "step_duration" => self.step_duration = real(value)?,
            "agents" => self.agent_count = int(value)?,
            "max_steps" => self.max_steps = int(value)?,
            "k_s" => self.movement.k_s = real(value)?,
            "k_p" => self.movement.k_p = real(value)?,
            "k_o" => self.movement.k_o = real(value)?,
            "d_0" => self.movement.d_0 = real(value)?,
            _ => return Err(format!("unknown key `{key}`")),
        }
        Ok(())
    }

    fn header_lines(&self) -> Vec<String> {
        vec![
            format!("kappa_tt = {}", self.kappa_tt),
            format!("kappa_q = {}", self.kappa_q),
            format!("kappa_f = {}", self.kappa_f),
            format!("gamma = {}", self.gamma),
            format!("rho_c = {}", self.rho_c),
            format!("tau_c = {}", self.tau_c),
            format!("tau_a = {}", self.tau_a),
            format!("desired_speed = {}", self.desired_speed),
            format!("step_duration = {}", self.step_duration),
            format!("agents = {}", self.agent_count),
            format!("max_steps = {}", self.max_steps),
            format!("k_s = {}", self.movement.k_s),
            format!("k_p = {}", self.movement.k_p),
            format!("k_o = {}", self.movement.k_o),
            format!("d_0 = {}", self.movement.d_0),
        ]
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScenarioError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("line {line}: invalid header entry: {message}")]
    Header { line: usize, message: String },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("empty raster")]
    EmptyRaster,
    #[error("opening {0} is not contiguous")]
    NonContiguousOpening(OpeningId),
    #[error("opening {id} adjacent to ≠2 regions ({count} found)")]
    OpeningRegions { id: OpeningId, count: usize },
    #[error("region {0} has neither an opening nor a final destination")]
    DeadEndRegion(RegionId),
    #[error("{agents} agents requested but only {cells} start cells")]
    NotEnoughStartCells { agents: usize, cells: usize },
    #[error("unknown opening {0}")]
    UnknownOpening(OpeningId),
}

/// A validated simulation environment. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    markers: Grid<Marker>,
    grid: Grid<CellKind>,
    zones: Grid<Zone>,
    openings: Vec<Opening>,
    regions: Vec<Region>,
    destinations: Vec<Destination>,
    start_areas: Vec<StartArea>,
    pub config: SimulationConfig,
}

/// Parses and validates a scenario document.
pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let lines: Vec<&str> = text
        .split('\n')
        .map(|l| l.strip_suffix('\r').unwrap_or(l))
        .collect();

    let mut config = SimulationConfig::default();
    let mut cursor = 0;
    let has_header = lines
        .first()
        .is_some_and(|l| l.contains('=') || l.trim_start().starts_with(';'));
    if has_header {
        while cursor < lines.len() && !lines[cursor].trim().is_empty() {
            let line = lines[cursor];
            let lineno = cursor + 1;
            cursor += 1;
            if line.trim_start().starts_with(';') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(ScenarioError::Syntax {
                    line: lineno,
                    column: 1,
                    message: "expected `key = value`".into(),
                });
            };
            config
                .set(key.trim(), value.trim())
                .map_err(|message| ScenarioError::Header {
                    line: lineno,
                    message,
                })?;
        }
    }
    while cursor < lines.len() && lines[cursor].trim().is_empty() {
        cursor += 1;
    }
    let mut end = lines.len();
    while end > cursor && lines[end - 1].trim().is_empty() {
        end -= 1;
    }
    if cursor >= end {
        return Err(ScenarioError::EmptyRaster);
    }

    let width = lines[cursor].chars().count();
    let height = end - cursor;
    let mut markers = Vec::with_capacity(width * height);
    for (row, line) in lines[cursor..end].iter().enumerate() {
        let lineno = cursor + row + 1;
        let mut count = 0;
        for (col, ch) in line.chars().enumerate() {
            if col >= width {
                return Err(ScenarioError::Syntax {
                    line: lineno,
                    column: col + 1,
                    message: format!("row longer than the first raster row ({width} cells)"),
                });
            }
            let marker = Marker::from_char(ch).ok_or_else(|| ScenarioError::Syntax {
                line: lineno,
                column: col + 1,
                message: format!("unexpected character {ch:?}"),
            })?;
            markers.push(marker);
            count += 1;
        }
        if count < width {
            return Err(ScenarioError::Syntax {
                line: lineno,
                column: count + 1,
                message: format!("row shorter than the first raster row ({width} cells)"),
            });
        }
    }
    Scenario::from_markers(Grid::from_vec(width, height, markers), config)
}

impl Scenario {
    /// Validates an annotated grid and derives regions.
    pub fn from_markers(
        markers: Grid<Marker>,
        config: SimulationConfig,
    ) -> Result<Scenario, ScenarioError> {
        config.validate()?;
        if markers.is_empty() {
            return Err(ScenarioError::EmptyRaster);
        }
        let grid = markers.map(|m| {
            if m.is_walkable() {
                CellKind::Walkable
            } else {
                CellKind::Obstacle
            }
        });

        let mut opening_cells: BTreeMap<OpeningId, Vec<Cell>> = BTreeMap::new();
        let mut destination_cells: BTreeMap<DestinationId, Vec<Cell>> = BTreeMap::new();
        for cell in markers.cells() {
            match markers[cell] {
                Marker::Opening(id) => opening_cells.entry(id).or_default().push(cell),
                Marker::Destination(id) => destination_cells.entry(id).or_default().push(cell),
                _ => {}
            }
        }
        for (&id, cells) in &opening_cells {
            if !is_contiguous(&markers, cells) {
                return Err(ScenarioError::NonContiguousOpening(id));
            }
        }

        // Regions: 4-connected components of walkable, non-opening cells.
        let mut zones = markers.map(|m| match m {
            Marker::Obstacle => Zone::Obstacle,
            Marker::Opening(id) => Zone::Opening(*id),
            _ => Zone::Obstacle,
        });
        let mut region_cells: Vec<Vec<Cell>> = Vec::new();
        let mut assigned = Grid::new(markers.width(), markers.height(), false);
        for seed in markers.cells() {
            let m = markers[seed];
            if !m.is_walkable() || matches!(m, Marker::Opening(_)) || assigned[seed] {
                continue;
            }
            let id = RegionId(region_cells.len() as u32);
            let mut cells = Vec::new();
            let mut queue = VecDeque::from([seed]);
            assigned[seed] = true;
            while let Some(c) = queue.pop_front() {
                zones[c] = Zone::Region(id);
                cells.push(c);
                for n in markers.neighbors4(c) {
                    let nm = markers[n];
                    if nm.is_walkable() && !matches!(nm, Marker::Opening(_)) && !assigned[n] {
                        assigned[n] = true;
                        queue.push_back(n);
                    }
                }
            }
            cells.sort_by_key(|c| (c.y, c.x));
            region_cells.push(cells);
        }

        let mut openings = Vec::with_capacity(opening_cells.len());
        for (id, cells) in opening_cells {
            let mut adjacent = BTreeSet::new();
            for &c in &cells {
                for (n, _, _) in markers.neighbors8(c) {
                    if let Zone::Region(r) = zones[n] {
                        adjacent.insert(r);
                    }
                }
            }
            if adjacent.len() != 2 {
                return Err(ScenarioError::OpeningRegions {
                    id,
                    count: adjacent.len(),
                });
            }
            let mut it = adjacent.into_iter();
            let regions = [it.next().unwrap(), it.next().unwrap()];
            let width_meters = cells_across(&cells) as f64 * CELL_SIZE;
            openings.push(Opening {
                id,
                cells,
                width_meters,
                regions,
            });
        }

        let destinations: Vec<Destination> = destination_cells
            .into_iter()
            .map(|(id, cells)| Destination { id, cells })
            .collect();

        let mut regions: Vec<Region> = region_cells
            .into_iter()
            .enumerate()
            .map(|(i, cells)| Region {
                id: RegionId(i as u32),
                cells,
                openings: Vec::new(),
                destinations: Vec::new(),
            })
            .collect();
        for o in &openings {
            for r in o.regions {
                regions[r.0 as usize].openings.push(o.id);
            }
        }
        for d in &destinations {
            let mut owners: Vec<RegionId> = d
                .cells
                .iter()
                .filter_map(|&c| match zones[c] {
                    Zone::Region(r) => Some(r),
                    _ => None,
                })
                .collect();
            owners.sort();
            owners.dedup();
            for r in owners {
                regions[r.0 as usize].destinations.push(d.id);
            }
        }
        if regions.len() > 1 {
            if let Some(r) = regions
                .iter()
                .find(|r| r.openings.is_empty() && r.destinations.is_empty())
            {
                return Err(ScenarioError::DeadEndRegion(r.id));
            }
        }

        let start_areas = start_areas(&markers, config.agent_count);
        let start_cells: usize = start_areas.iter().map(|a| a.cells.len()).sum();
        if config.agent_count > start_cells {
            return Err(ScenarioError::NotEnoughStartCells {
                agents: config.agent_count,
                cells: start_cells,
            });
        }

        Ok(Scenario {
            markers,
            grid,
            zones,
            openings,
            regions,
            destinations,
            start_areas,
            config,
        })
    }

    /// Turns the named openings into obstacles and re-derives regions.
    pub fn close_openings(&self, ids: &[OpeningId]) -> Result<Scenario, ScenarioError> {
        for id in ids {
            if self.opening(*id).is_none() {
                return Err(ScenarioError::UnknownOpening(*id));
            }
        }
        let mut markers = self.markers.clone();
        for v in markers.values_mut() {
            if let Marker::Opening(id) = v {
                if ids.contains(id) {
                    *v = Marker::Obstacle;
                }
            }
        }
        Scenario::from_markers(markers, self.config)
    }

    /// Same environment with a different configuration.
    pub fn with_config(&self, config: SimulationConfig) -> Result<Scenario, ScenarioError> {
        Scenario::from_markers(self.markers.clone(), config)
    }

    /// Serializes back into the document format.
    pub fn to_document(&self) -> String {
        let mut out = self.config.header_lines().join("\n");
        out.push_str("\n\n");
        for row in self.markers.rows() {
            out.extend(row.iter().map(|m| m.as_char()));
            out.push('\n');
        }
        out
    }

    pub fn width(&self) -> usize {
        self.grid.width()
    }

    pub fn height(&self) -> usize {
        self.grid.height()
    }

    pub fn grid(&self) -> &Grid<CellKind> {
        &self.grid
    }

    pub fn markers(&self) -> &Grid<Marker> {
        &self.markers
    }

    pub fn zones(&self) -> &Grid<Zone> {
        &self.zones
    }

    pub fn zone(&self, cell: Cell) -> Zone {
        self.zones.get(cell).copied().unwrap_or(Zone::Obstacle)
    }

    pub fn is_walkable(&self, cell: Cell) -> bool {
        self.grid.get(cell).is_some_and(|k| k.is_walkable())
    }

    pub fn walkable_count(&self) -> usize {
        self.grid
            .values()
            .iter()
            .filter(|k| k.is_walkable())
            .count()
    }

    pub fn openings(&self) -> &[Opening] {
        &self.openings
    }

    pub fn opening(&self, id: OpeningId) -> Option<&Opening> {
        self.openings.iter().find(|o| o.id == id)
    }

    pub fn regions(&self) -> &[Region] {
        &self.regions
    }

    pub fn region(&self, id: RegionId) -> Option<&Region> {
        self.regions.get(id.0 as usize)
    }

    pub fn destinations(&self) -> &[Destination] {
        &self.destinations
    }

    pub fn destination(&self, id: DestinationId) -> Option<&Destination> {
        self.destinations.iter().find(|d| d.id == id)
    }

    pub fn start_areas(&self) -> &[StartArea] {
        &self.start_areas
    }

    /// Every opening and destination, openings first.
    pub fn targets(&self) -> Vec<Target> {
        self.openings
            .iter()
            .map(|o| Target::Opening(o.id))
            .chain(self.destinations.iter().map(|d| Target::Destination(d.id)))
            .collect()
    }

    pub fn target_cells(&self, target: Target) -> Option<&[Cell]> {
        match target {
            Target::Opening(id) => self.opening(id).map(|o| o.cells.as_slice()),
            Target::Destination(id) => self.destination(id).map(|d| d.cells.as_slice()),
        }
    }

    /// Passage width of a target in meters.
    pub fn target_width(&self, target: Target) -> Option<f64> {
        match target {
            Target::Opening(id) => self.opening(id).map(|o| o.width_meters),
            Target::Destination(id) => self
                .destination(id)
                .map(|d| cells_across(&d.cells) as f64 * CELL_SIZE),
        }
    }

    /// The cell of a target closest to its arithmetic center.
    pub fn target_centroid(&self, target: Target) -> Option<Cell> {
        self.target_cells(target).map(centroid_cell)
    }

    /// Region containing the destination cells.
    pub fn destination_region(&self, id: DestinationId) -> Option<RegionId> {
        self.regions
            .iter()
            .find(|r| r.destinations.contains(&id))
            .map(|r| r.id)
    }

    /// Region of a walkable non-opening cell.
    pub fn region_at(&self, cell: Cell) -> Option<RegionId> {
        match self.zone(cell) {
            Zone::Region(r) => Some(r),
            _ => None,
        }
    }

    /// Targets an agent in `region` can head for directly.
    pub fn region_targets(&self, region: RegionId) -> Vec<Target> {
        self.region(region)
            .map(|r| {
                r.openings
                    .iter()
                    .map(|&o| Target::Opening(o))
                    .chain(r.destinations.iter().map(|&d| Target::Destination(d)))
                    .collect()
            })
            .unwrap_or_default()
    }
}

/// Cell of the set nearest to the arithmetic mean of its centers; ties go to
/// the first cell in row-major order.
pub fn centroid_cell(cells: &[Cell]) -> Cell {
    assert!(!cells.is_empty(), "centroid of an empty cell set");
    let n = cells.len() as f64;
    let mx = cells.iter().map(|c| c.x as f64).sum::<f64>() / n;
    let my = cells.iter().map(|c| c.y as f64).sum::<f64>() / n;
    let mut sorted: Vec<Cell> = cells.to_vec();
    sorted.sort_by_key(|c| (c.y, c.x));
    let mut best = sorted[0];
    let mut best_d = f64::INFINITY;
    for c in sorted {
        let d = (c.x as f64 - mx).powi(2) + (c.y as f64 - my).powi(2);
        if d < best_d - 1e-12 {
            best = c;
            best_d = d;
        }
    }
    best
}

/// Extent of a cell set along its longer bounding-box side.
fn cells_across(cells: &[Cell]) -> usize {
    let (min_x, max_x) = cells
        .iter()
        .fold((usize::MAX, 0), |(lo, hi), c| (lo.min(c.x), hi.max(c.x)));
    let (min_y, max_y) = cells
        .iter()
        .fold((usize::MAX, 0), |(lo, hi), c| (lo.min(c.y), hi.max(c.y)));
    (max_x - min_x + 1).max(max_y - min_y + 1)
}

fn is_contiguous(markers: &Grid<Marker>, cells: &[Cell]) -> bool {
    let set: BTreeSet<Cell> = cells.iter().copied().collect();
    let mut seen = BTreeSet::from([cells[0]]);
    let mut stack = vec![cells[0]];
    while let Some(c) = stack.pop() {
        for (n, _, _) in markers.neighbors8(c) {
            if set.contains(&n) && seen.insert(n) {
                stack.push(n);
            }
        }
    }
    seen.len() == set.len()
}

/// Groups start cells into 4-connected areas and splits `agents` across them
/// in proportion to their size (largest remainder).
fn start_areas(markers: &Grid<Marker>, agents: usize) -> Vec<StartArea> {
    let mut seen = Grid::new(markers.width(), markers.height(), false);
    let mut areas: Vec<Vec<Cell>> = Vec::new();
    for seed in markers.cells() {
        if markers[seed] != Marker::Start || seen[seed] {
            continue;
        }
        let mut cells = Vec::new();
        let mut queue = VecDeque::from([seed]);
        seen[seed] = true;
        while let Some(c) = queue.pop_front() {
            cells.push(c);
            for n in markers.neighbors4(c) {
                if markers[n] == Marker::Start && !seen[n] {
                    seen[n] = true;
                    queue.push_back(n);
                }
            }
        }
        cells.sort_by_key(|c| (c.y, c.x));
        areas.push(cells);
    }
    let total: usize = areas.iter().map(Vec::len).sum();
    if total == 0 {
        return Vec::new();
    }
    let mut counts: Vec<usize> = areas.iter().map(|a| agents * a.len() / total).collect();
    let mut remainders: Vec<(usize, usize)> = areas
        .iter()
        .enumerate()
        .map(|(i, a)| ((agents * a.len()) % total, i))
        .collect();
    remainders.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    let missing = agents - counts.iter().sum::<usize>();
    for &(_, i) in remainders.iter().take(missing) {
        counts[i] += 1;
    }
    areas
        .into_iter()
        .zip(counts)
        .map(|(cells, spawn_count)| StartArea { cells, spawn_count })
        .collect()
}
