//! Monte-Carlo batches, comparison against observed gate counts and grid
//! sweeps over calibrations.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::engine::{run, Knowledge, RunResult};
use crate::experiment::{reference_means, GateTriple, Procedure, GATES};
use crate::fields::FieldError;
use crate::route_choice::UtilityWeights;
use crate::scenario::{Scenario, ScenarioError, SimulationConfig};

pub const DEFAULT_RUNS: usize = 50;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("a batch needs at least one run")]
    NoRuns,
    #[error("empty sweep grid")]
    EmptyGrid,
    #[error("unknown calibration `{0}`")]
    UnknownCalibration(String),
}

/// A named set of utility weights.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Calibration {
    pub label: String,
    pub weights: UtilityWeights,
}

pub const C1: UtilityWeights = UtilityWeights::new(10.0, 7.0, 5.0);
pub const C2: UtilityWeights = UtilityWeights::new(10.0, 2.5, 0.5);
pub const C3: UtilityWeights = UtilityWeights::new(100.0, 25.0, 5.0);

impl Calibration {
    pub fn presets() -> [Calibration; 3] {
        [
            Calibration::new("C1", C1),
            Calibration::new("C2", C2),
            Calibration::new("C3", C3),
        ]
    }

    pub fn new(label: impl Into<String>, weights: UtilityWeights) -> Self {
        Self {
            label: label.into(),
            weights,
        }
    }

    pub fn preset(name: &str) -> Result<Calibration, HarnessError> {
        Calibration::presets()
            .into_iter()
            .find(|c| c.label.eq_ignore_ascii_case(name))
            .ok_or_else(|| HarnessError::UnknownCalibration(name.to_string()))
    }

    pub fn apply(&self, config: &SimulationConfig) -> SimulationConfig {
        SimulationConfig {
            kappa_tt: self.weights.kappa_tt,
            kappa_q: self.weights.kappa_q,
            kappa_f: self.weights.kappa_f,
            ..*config
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GateStats {
    pub mean: f64,
    /// Sample standard deviation (0 for a single run).
    pub std: f64,
    pub min: u32,
    pub max: u32,
}

impl GateStats {
    fn from_counts(counts: &mut [u32]) -> Self {
        counts.sort_unstable();
        let n = counts.len() as f64;
        let mean = counts.iter().map(|&c| c as f64).sum::<f64>() / n;
        let var = if counts.len() > 1 {
            counts
                .iter()
                .map(|&c| (c as f64 - mean).powi(2))
                .sum::<f64>()
                / (n - 1.0)
        } else {
            0.0
        };
        Self {
            mean,
            std: var.sqrt(),
            min: counts[0],
            max: counts[counts.len() - 1],
        }
    }

    pub fn variance(&self) -> f64 {
        self.std * self.std
    }
}

/// Aggregated gate usage of one procedure under one calibration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BatchReport {
    pub label: String,
    pub procedure: Procedure,
    pub runs: usize,
    pub incomplete: usize,
    /// Gates a, b, c.
    pub gates: [GateStats; 3],
    pub mean_travel_time: f64,
    /// L1 distance of the mean counts to the observed averages.
    pub score: f64,
}

impl BatchReport {
    pub fn means(&self) -> GateTriple {
        GateTriple([self.gates[0].mean, self.gates[1].mean, self.gates[2].mean])
    }

    pub fn total_variance(&self) -> f64 {
        self.gates.iter().map(GateStats::variance).sum()
    }
}

/// L1 distance between simulated and observed mean counts.
pub fn score(simulated: &GateTriple, reference: &GateTriple) -> f64 {
    simulated
        .0
        .iter()
        .zip(reference.0.iter())
        .map(|(s, r)| (s - r).abs())
        .sum()
}

/// Aggregates run results; independent of their order.
pub fn aggregate(label: &str, procedure: Procedure, results: &[RunResult]) -> BatchReport {
    let mut gates = [GateStats {
        mean: 0.0,
        std: 0.0,
        min: 0,
        max: 0,
    }; 3];
    for (g, id) in GATES.iter().enumerate() {
        let mut counts: Vec<u32> = results.iter().map(|r| r.count(*id)).collect();
        gates[g] = GateStats::from_counts(&mut counts);
    }
    let mut times: Vec<f64> = results.iter().map(RunResult::mean_travel_time).collect();
    times.sort_by(f64::total_cmp);
    let mean_travel_time = times.iter().sum::<f64>() / times.len().max(1) as f64;
    let means = GateTriple([gates[0].mean, gates[1].mean, gates[2].mean]);
    BatchReport {
        label: label.to_string(),
        procedure,
        runs: results.len(),
        incomplete: results.iter().filter(|r| !r.complete).count(),
        gates,
        mean_travel_time,
        score: score(&means, &reference_means(procedure)),
    }
}

/// Runs seeds `base_seed .. base_seed + n_runs` in parallel.
pub fn run_seeds(
    scenario: &Scenario,
    knowledge: &Knowledge,
    n_runs: usize,
    base_seed: u64,
) -> Vec<RunResult> {
    (0..n_runs as u64)
        .into_par_iter()
        .map(|k| run(scenario, knowledge, base_seed.wrapping_add(k)))
        .collect()
}

/// Runs one procedure of the experiment `n_runs` times under `config`.
pub fn run_batch(
    base: &Scenario,
    procedure: Procedure,
    config: &SimulationConfig,
    n_runs: usize,
    base_seed: u64,
    label: &str,
) -> Result<BatchReport, HarnessError> {
    if n_runs == 0 {
        return Err(HarnessError::NoRuns);
    }
    let scenario = procedure.scenario(&base.with_config(*config)?)?;
    let knowledge = Knowledge::build(&scenario)?;
    let results = run_seeds(&scenario, &knowledge, n_runs, base_seed);
    Ok(aggregate(label, procedure, &results))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepEntry {
    pub label: String,
    pub config: SimulationConfig,
    pub reports: Vec<BatchReport>,
    pub total_score: f64,
}

/// Procedures with a choice to make.
pub const SWEEP_PROCEDURES: [Procedure; 3] = [Procedure::AB, Procedure::AC, Procedure::All];

/// Evaluates every configuration on procedures 2-4 and ranks them by total
/// score, best first.
pub fn sweep(
    base: &Scenario,
    grid: &[(String, SimulationConfig)],
    n_runs: usize,
    base_seed: u64,
) -> Result<Vec<SweepEntry>, HarnessError> {
    if grid.is_empty() {
        return Err(HarnessError::EmptyGrid);
    }
    let cells: Vec<(usize, Procedure)> = (0..grid.len())
        .flat_map(|i| SWEEP_PROCEDURES.into_iter().map(move |p| (i, p)))
        .collect();
    let reports: Vec<((usize, Procedure), BatchReport)> = cells
        .into_par_iter()
        .map(|(i, p)| {
            let (label, config) = &grid[i];
            run_batch(base, p, config, n_runs, base_seed, label).map(|r| ((i, p), r))
        })
        .collect::<Result<_, _>>()?;

    let mut entries: Vec<SweepEntry> = grid
        .iter()
        .enumerate()
        .map(|(i, (label, config))| {
            let mut mine: Vec<&((usize, Procedure), BatchReport)> =
                reports.iter().filter(|((j, _), _)| *j == i).collect();
            mine.sort_by_key(|((_, p), _)| *p);
            let reports: Vec<BatchReport> = mine.into_iter().map(|(_, r)| r.clone()).collect();
            let total_score = reports.iter().map(|r| r.score).sum();
            SweepEntry {
                label: label.clone(),
                config: *config,
                reports,
                total_score,
            }
        })
        .collect();
    entries.sort_by(|a, b| {
        a.total_score
            .total_cmp(&b.total_score)
            .then_with(|| a.label.cmp(&b.label))
    });
    Ok(entries)
}
