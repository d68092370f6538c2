//! Discrete-grid pedestrian route choice simulator.
//!
//! Agents walk on a grid of 0.4 m cells using floor fields and, whenever
//! several routes lead to their destination, pick one with a softmax over a
//! utility that rewards short travel times, penalizes queues in front of the
//! next opening and rewards following neighbours who just switched route.

pub mod cognitive_map;
pub mod engine;
pub mod experiment;
pub mod fields;
pub mod grid;
pub mod harness;
pub mod route_choice;
pub mod scenario;

pub use cognitive_map::{build_cognitive_map, build_paths_tree, CognitiveMap, Path, PathsTree};
pub use engine::{run, run_with_trace, Agent, Knowledge, RunResult, SimulationState, Trace};
pub use experiment::{experiment_scenario, Procedure};
pub use grid::{Cell, Grid, CELL_SIZE};
pub use harness::{run_batch, score, sweep, BatchReport, Calibration, HarnessError};
pub use route_choice::{ChoiceField, UtilityWeights};
pub use scenario::{
    parse_scenario, DestinationId, OpeningId, RegionId, Scenario, ScenarioError, SimulationConfig,
    Target,
};
