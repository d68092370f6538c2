//! The bundled two-room gate experiment: geometry, procedures and the
//! observed gate counts.

use std::fmt;

use serde::Serialize;

use crate::grid::{Cell, CELL_SIZE};
use crate::scenario::{parse_scenario, DestinationId, OpeningId, Scenario, ScenarioError, Target};

pub const EXPERIMENT_SCENARIO: &str = include_str!("../scenarios/experiment.scn");

pub const GATE_A: OpeningId = OpeningId('1');
pub const GATE_B: OpeningId = OpeningId('2');
pub const GATE_C: OpeningId = OpeningId('3');
pub const GATES: [OpeningId; 3] = [GATE_A, GATE_B, GATE_C];
pub const EXIT: DestinationId = DestinationId('E');

/// Column of the wall holding the 2.4 m entrance passage.
pub const ENTRANCE_COLUMN: usize = 10;

/// Participants in every run.
pub const PARTICIPANTS: u32 = 46;

pub fn experiment_scenario() -> Scenario {
    parse_scenario(EXPERIMENT_SCENARIO).expect("bundled scenario is valid")
}

/// Gate-opening configurations of the experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Procedure {
    /// Only path a.
    OnlyA = 1,
    /// Paths a and b.
    AB = 2,
    /// Paths a and c.
    AC = 3,
    /// All gates open.
    All = 4,
}

impl Procedure {
    pub const ALL: [Procedure; 4] = [
        Procedure::OnlyA,
        Procedure::AB,
        Procedure::AC,
        Procedure::All,
    ];

    pub fn number(self) -> u8 {
        self as u8
    }

    pub fn from_number(n: u8) -> Option<Procedure> {
        Procedure::ALL.into_iter().find(|p| p.number() == n)
    }

    pub fn closed_gates(self) -> &'static [OpeningId] {
        match self {
            Procedure::OnlyA => &[GATE_B, GATE_C],
            Procedure::AB => &[GATE_C],
            Procedure::AC => &[GATE_B],
            Procedure::All => &[],
        }
    }

    pub fn scenario(self, base: &Scenario) -> Result<Scenario, ScenarioError> {
        base.close_openings(self.closed_gates())
    }
}

impl fmt::Display for Procedure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.number())
    }
}

/// Passages through gates a, b and c.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GateTriple(pub [f64; 3]);

impl GateTriple {
    pub fn a(&self) -> f64 {
        self.0[0]
    }
    pub fn b(&self) -> f64 {
        self.0[1]
    }
    pub fn c(&self) -> f64 {
        self.0[2]
    }
}

/// Observed counts: four iterations per procedure plus their averages.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReferenceData {
    pub procedure: Procedure,
    pub iterations: [[u32; 3]; 4],
    pub average: GateTriple,
}

/// Observed gate counts for procedures 2, 3 and 4.
pub fn reference_data() -> [ReferenceData; 3] {
    [
        ReferenceData {
            procedure: Procedure::AB,
            iterations: [[22, 24, 0], [23, 23, 0], [25, 21, 0], [23, 23, 0]],
            average: GateTriple([23.25, 22.75, 0.0]),
        },
        ReferenceData {
            procedure: Procedure::AC,
            iterations: [[27, 0, 19], [28, 0, 18], [30, 0, 16], [27, 0, 19]],
            average: GateTriple([28.0, 0.0, 18.0]),
        },
        ReferenceData {
            procedure: Procedure::All,
            iterations: [[18, 16, 12], [22, 19, 5], [21, 18, 7], [22, 19, 5]],
            average: GateTriple([20.75, 18.0, 7.25]),
        },
    ]
}

/// Expected average counts; procedure 1 admits only gate a.
pub fn reference_means(procedure: Procedure) -> GateTriple {
    match procedure {
        Procedure::OnlyA => GateTriple([PARTICIPANTS as f64, 0.0, 0.0]),
        p => reference_data()
            .into_iter()
            .find(|r| r.procedure == p)
            .map(|r| r.average)
            .expect("reference rows cover procedures 2-4"),
    }
}

/// Walkable cells of the entrance passage.
pub fn entrance_cells(scenario: &Scenario) -> Vec<Cell> {
    (0..scenario.height())
        .map(|y| Cell::new(ENTRANCE_COLUMN, y))
        .filter(|&c| scenario.is_walkable(c))
        .collect()
}

/// Arithmetic center of a cell set, meters.
pub fn center_point(cells: &[Cell]) -> (f64, f64) {
    let n = cells.len() as f64;
    let (sx, sy) = cells.iter().fold((0.0, 0.0), |(sx, sy), c| {
        let (x, y) = c.center();
        (sx + x, sy + y)
    });
    (sx / n, sy / n)
}

/// Entrance → gate → exit length measured between the central points of the
/// crossed passages, meters.
pub fn centroid_path_length(scenario: &Scenario, gate: OpeningId) -> Option<f64> {
    let entrance = center_point(&entrance_cells(scenario));
    let gate = center_point(scenario.target_cells(Target::Opening(gate))?);
    let exit = center_point(scenario.target_cells(Target::Destination(EXIT))?);
    let d = |a: (f64, f64), b: (f64, f64)| (a.0 - b.0).hypot(a.1 - b.1);
    Some(d(entrance, gate) + d(gate, exit))
}

/// Metric extent of the hall: wall-to-wall distance between the entrance
/// and exit columns, and the height of the grid.
pub fn hall_extent(scenario: &Scenario) -> (f64, f64) {
    let exit_col = scenario
        .target_cells(Target::Destination(EXIT))
        .and_then(|c| c.first())
        .map_or(ENTRANCE_COLUMN, |c| c.x);
    (
        (exit_col - ENTRANCE_COLUMN) as f64 * CELL_SIZE,
        scenario.height() as f64 * CELL_SIZE,
    )
}
