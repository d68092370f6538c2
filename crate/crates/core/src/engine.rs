//! Agent life-cycle and the stand-in operational movement model.
//!
//! One step:
//! 1. decay the choice field,
//! 2. rebuild the proxemic field,
//! 3. in a shuffled order every active agent localizes itself, evaluates its
//!    candidate paths and possibly changes plan (diffusing its new choice),
//! 4. in the same order every agent moves at most one cell,
//! 5. opening crossings are counted and arrivals retired.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::cognitive_map::{
    build_cognitive_map, build_paths_tree, compute_target_fields, CognitiveMap, Path, PathsTree,
    TargetFields,
};
use crate::fields::{
    compute_obstacle_field, proxemic_kernel, FieldError, ObstacleField, ProxemicField,
};
use crate::grid::{step_allowed, Cell, Grid};
use crate::route_choice::{
    choose_path, evaluate_paths, ChoiceField, Pedestrian, Perception, UtilityWeights,
};
use crate::scenario::{DestinationId, Marker, OpeningId, RegionId, Scenario, Target, Zone};

/// Precomputed, immutable environment knowledge shared by all agents and runs.
#[derive(Debug, Clone)]
pub struct Knowledge {
    pub fields: TargetFields,
    pub obstacle: ObstacleField,
    pub map: CognitiveMap,
    pub trees: BTreeMap<DestinationId, PathsTree>,
}

impl Knowledge {
    pub fn build(scenario: &Scenario) -> Result<Self, FieldError> {
        let fields = compute_target_fields(scenario)?;
        let obstacle = compute_obstacle_field(scenario.grid());
        let map = build_cognitive_map(scenario);
        let trees = scenario
            .destinations()
            .iter()
            .map(|d| {
                let tree =
                    build_paths_tree(scenario, &map, d.id, &fields, scenario.config.desired_speed);
                (d.id, tree)
            })
            .collect();
        Ok(Self {
            fields,
            obstacle,
            map,
            trees,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Agent {
    pub id: usize,
    pub pos: Cell,
    pub desired_speed: f64,
    pub region: RegionId,
    pub final_destination: DestinationId,
    pub path: Option<Path>,
    /// Index in `path.targets` of the current intermediate target.
    pub path_index: usize,
    pub spreading_remaining: u32,
    pub finished: bool,
    pub finish_step: Option<u64>,
    pub crossed: Vec<OpeningId>,
}

impl Agent {
    /// First unvisited element of the current path.
    pub fn current_dest(&self) -> Option<Target> {
        self.path
            .as_ref()
            .and_then(|p| p.targets.get(self.path_index).copied())
    }

    pub fn is_active(&self) -> bool {
        !self.finished
    }
}

impl Pedestrian for Agent {
    fn id(&self) -> usize {
        self.id
    }

    fn position(&self) -> Cell {
        self.pos
    }

    fn destination(&self) -> Option<Target> {
        if self.finished {
            None
        } else {
            self.current_dest()
        }
    }
}

/// Region an agent at `pos` is in. On opening cells this is the side of the
/// opening from which `dest` can be reached directly, falling back to the side
/// opposite `previous`.
pub fn localize(
    scenario: &Scenario,
    pos: Cell,
    dest: Option<Target>,
    previous: Option<RegionId>,
) -> Option<RegionId> {
    match scenario.zone(pos) {
        Zone::Region(r) => Some(r),
        Zone::Obstacle => None,
        Zone::Opening(id) => {
            let regions = scenario.opening(id)?.regions;
            if let Some(d) = dest.filter(|&d| d != Target::Opening(id)) {
                let toward: Vec<RegionId> = regions
                    .iter()
                    .copied()
                    .filter(|&r| scenario.region_targets(r).contains(&d))
                    .collect();
                if toward.len() == 1 {
                    return Some(toward[0]);
                }
            }
            match previous {
                Some(p) if p == regions[0] => Some(regions[1]),
                Some(p) if p == regions[1] => Some(regions[0]),
                _ => Some(regions[0]),
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PositionRecord {
    pub step: u64,
    pub agent: usize,
    pub x: usize,
    pub y: usize,
    pub dest: Option<char>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChoiceRecord {
    pub step: u64,
    pub agent: usize,
    pub path: String,
    pub eval_tt: f64,
    pub eval_q: f64,
    pub eval_f: f64,
    pub probability: f64,
    pub chosen: bool,
}

/// Full per-step record of a run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trace {
    pub positions: Vec<PositionRecord>,
    pub choices: Vec<ChoiceRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunResult {
    pub seed: u64,
    pub steps: u64,
    pub complete: bool,
    pub spawned: usize,
    pub finished: usize,
    pub gate_counts: BTreeMap<OpeningId, u32>,
    /// Seconds from spawn to arrival, per finished agent in id order.
    pub travel_times: Vec<f64>,
}

impl RunResult {
    pub fn count(&self, id: OpeningId) -> u32 {
        self.gate_counts.get(&id).copied().unwrap_or(0)
    }

    pub fn mean_travel_time(&self) -> f64 {
        if self.travel_times.is_empty() {
            return 0.0;
        }
        self.travel_times.iter().sum::<f64>() / self.travel_times.len() as f64
    }
}

pub struct SimulationState {
    pub step: u64,
    pub agents: Vec<Agent>,
    pub choice_field: ChoiceField,
    pub proxemic: ProxemicField,
    pub gate_counters: BTreeMap<OpeningId, u32>,
    occupancy: Grid<Option<usize>>,
    rng: ChaCha8Rng,
    trace: Option<Trace>,
}

impl SimulationState {
    /// Spawns the configured agents on random free start cells.
    pub fn new(scenario: &Scenario, knowledge: &Knowledge, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut positions = Vec::new();
        for area in scenario.start_areas() {
            positions.extend(
                area.cells
                    .choose_multiple(&mut rng, area.spawn_count)
                    .copied(),
            );
        }
        Self::build(scenario, knowledge, rng, &positions)
    }

    /// Places one agent on each given cell instead of spawning in the start
    /// areas. Cells must be distinct and walkable.
    pub fn with_positions(
        scenario: &Scenario,
        knowledge: &Knowledge,
        seed: u64,
        positions: &[Cell],
    ) -> Self {
        let rng = ChaCha8Rng::seed_from_u64(seed);
        Self::build(scenario, knowledge, rng, positions)
    }

    fn build(
        scenario: &Scenario,
        knowledge: &Knowledge,
        rng: ChaCha8Rng,
        positions: &[Cell],
    ) -> Self {
        let (w, h) = (scenario.width(), scenario.height());
        let mut occupancy = Grid::new(w, h, None);
        let mut agents = Vec::with_capacity(positions.len());
        for &pos in positions {
            assert!(scenario.is_walkable(pos), "agent placed on {pos:?}");
            assert!(occupancy[pos].is_none(), "two agents placed on {pos:?}");
            let id = agents.len();
            occupancy[pos] = Some(id);
            agents.push(Agent {
                id,
                pos,
                desired_speed: scenario.config.desired_speed,
                region: scenario.region_at(pos).unwrap_or(RegionId(0)),
                final_destination: nearest_destination(scenario, knowledge, pos),
                path: None,
                path_index: 0,
                spreading_remaining: 0,
                finished: false,
                finish_step: None,
                crossed: Vec::new(),
            });
        }
        let gate_counters = scenario.openings().iter().map(|o| (o.id, 0)).collect();
        Self {
            step: 0,
            agents,
            choice_field: ChoiceField::new(w, h),
            proxemic: ProxemicField::new(w, h),
            gate_counters,
            occupancy,
            rng,
            trace: None,
        }
    }

    /// Starts recording positions and route evaluations.
    pub fn enable_trace(&mut self) {
        self.trace = Some(Trace::default());
    }

    pub fn take_trace(&mut self) -> Option<Trace> {
        self.trace.take()
    }

    pub fn active_count(&self) -> usize {
        self.agents.iter().filter(|a| a.is_active()).count()
    }

    pub fn finished_count(&self) -> usize {
        self.agents.len() - self.active_count()
    }

    pub fn occupant(&self, cell: Cell) -> Option<usize> {
        self.occupancy.get(cell).copied().flatten()
    }

    /// Advances the simulation by one tick.
    pub fn step(&mut self, scenario: &Scenario, knowledge: &Knowledge) {
        self.step += 1;
        self.choice_field.decay();
        self.proxemic
            .rebuild(self.agents.iter().filter(|a| a.is_active()).map(|a| a.pos));
        let mut order: Vec<usize> = self
            .agents
            .iter()
            .filter(|a| a.is_active())
            .map(|a| a.id)
            .collect();
        order.shuffle(&mut self.rng);
        for &i in &order {
            self.decide(i, scenario, knowledge);
        }
        for &i in &order {
            self.move_operational(i, scenario, knowledge);
        }
        if let Some(trace) = self.trace.as_mut() {
            for a in self.agents.iter().filter(|a| a.is_active()) {
                trace.positions.push(PositionRecord {
                    step: self.step,
                    agent: a.id,
                    x: a.pos.x,
                    y: a.pos.y,
                    dest: a.current_dest().map(Target::as_char),
                });
            }
        }
    }

    /// Perception, localization, path evaluation and choice for one agent.
    fn decide(&mut self, i: usize, scenario: &Scenario, knowledge: &Knowledge) {
        let config = &scenario.config;
        let agent = &self.agents[i];
        let Some(region) = localize(
            scenario,
            agent.pos,
            agent.current_dest(),
            Some(agent.region),
        ) else {
            return;
        };
        self.agents[i].region = region;
        let Some(tree) = knowledge.trees.get(&self.agents[i].final_destination) else {
            return;
        };
        let candidates = tree.paths(region);
        if candidates.is_empty() {
            return;
        }
        let current = self.agents[i].current_dest();

        let chosen: Path = if candidates.len() == 1 {
            if current == Some(candidates[0].first()) {
                self.spread(i, scenario);
                return;
            }
            candidates[0].clone()
        } else {
            let perception = Perception {
                scenario,
                fields: &knowledge.fields,
                agents: &self.agents,
                choice_field: &self.choice_field,
                gamma: config.gamma,
                speed: self.agents[i].desired_speed,
            };
            let me = &self.agents[i];
            let mut evals = evaluate_paths(&perception, me, &candidates, &mut self.rng);
            if evals.is_empty() {
                return;
            }
            let pick = choose_path(&mut evals, &UtilityWeights::from(config), &mut self.rng);
            if let Some(trace) = self.trace.as_mut() {
                for (k, e) in evals.iter().enumerate() {
                    trace.choices.push(ChoiceRecord {
                        step: self.step,
                        agent: i,
                        path: e.path.targets.iter().map(|t| t.as_char()).collect(),
                        eval_tt: e.eval_tt,
                        eval_q: e.eval_q,
                        eval_f: e.eval_f,
                        probability: e.probability,
                        chosen: k == pick,
                    });
                }
            }
            evals[pick].path.clone()
        };

        let new_first = chosen.first();
        let changed_plan =
            current.is_some_and(|c| c != new_first && candidates.iter().any(|p| p.first() == c));
        if current != Some(new_first) {
            let agent = &mut self.agents[i];
            agent.path = Some(chosen);
            agent.path_index = 0;
        }
        if changed_plan {
            self.agents[i].spreading_remaining = config.tau_a;
        }
        self.spread(i, scenario);
    }

    /// Diffuses the agent's current choice while its spreading window lasts.
    fn spread(&mut self, i: usize, scenario: &Scenario) {
        let agent = &mut self.agents[i];
        if agent.spreading_remaining == 0 {
            return;
        }
        agent.spreading_remaining -= 1;
        if let Some(target) = agent.current_dest() {
            self.choice_field.diffuse(
                agent.pos,
                target,
                scenario.config.rho_c,
                scenario.config.tau_c,
                Some(scenario.grid()),
            );
        }
    }

    /// Moves the agent to a free neighbor (or keeps it in place), sampled with
    /// probability proportional to
    /// `exp(k_s·ΔPF − k_p·proxemic − k_o·max(0, d_0 − obstacle))`.
    fn move_operational(&mut self, i: usize, scenario: &Scenario, knowledge: &Knowledge) {
        let agent = &self.agents[i];
        if agent.finished {
            return;
        }
        let Some(dest) = agent.current_dest() else {
            return;
        };
        let Some(field) = knowledge.fields.get(&dest) else {
            return;
        };
        let m = scenario.config.movement;
        let here = agent.pos;
        let here_zone = scenario.zone(here);
        let own_region = Zone::Region(agent.region);
        let dest_zone = dest.opening().map(Zone::Opening);
        let pf_here = field.get(here);

        let utility = |cell: Cell, own_share: f64| {
            let pf = field.get(cell);
            let prox = (self.proxemic.get(cell) - own_share).max(0.0);
            let wall = (m.d_0 - knowledge.obstacle.get(cell)).max(0.0);
            m.k_s * (pf_here - pf) - m.k_p * prox - m.k_o * wall
        };

        let mut options: Vec<(Cell, f64)> = vec![(here, utility(here, 1.0))];
        let walkable = |c: Cell| scenario.is_walkable(c);
        for (n, dx, dy) in scenario.grid().neighbors8(here) {
            if !step_allowed(walkable, here, dx, dy) || self.occupancy[n].is_some() {
                continue;
            }
            let zone = scenario.zone(n);
            if zone != own_region && zone != here_zone && Some(zone) != dest_zone {
                continue;
            }
            if !field.get(n).is_finite() {
                continue;
            }
            let share = proxemic_kernel(here.distance_meters(n));
            options.push((n, utility(n, share)));
        }

        let max = options
            .iter()
            .map(|o| o.1)
            .fold(f64::NEG_INFINITY, f64::max);
        let weights: Vec<f64> = options.iter().map(|o| (o.1 - max).exp()).collect();
        let total: f64 = weights.iter().sum();
        let mut u = self.rng.gen::<f64>() * total;
        let mut target = options.last().map(|o| o.0).unwrap_or(here);
        for (o, w) in options.iter().zip(&weights) {
            if u < *w {
                target = o.0;
                break;
            }
            u -= w;
        }
        if target == here {
            return;
        }

        self.occupancy[here] = None;
        self.occupancy[target] = Some(i);
        let step = self.step;
        let agent = &mut self.agents[i];
        agent.pos = target;

        match dest {
            Target::Opening(id) if scenario.zone(target) == Zone::Opening(id) => {
                if !agent.crossed.contains(&id) {
                    agent.crossed.push(id);
                    *self.gate_counters.entry(id).or_insert(0) += 1;
                }
                agent.path_index += 1;
                let previous = agent.region;
                if let Some(r) = localize(scenario, target, agent.current_dest(), Some(previous)) {
                    agent.region = r;
                }
            }
            Target::Destination(id) if scenario.markers()[target] == Marker::Destination(id) => {
                agent.finished = true;
                agent.finish_step = Some(step);
                self.occupancy[target] = None;
            }
            _ => {}
        }
    }

    pub fn result(&self, scenario: &Scenario, seed: u64) -> RunResult {
        let dt = scenario.config.step_duration;
        RunResult {
            seed,
            steps: self.step,
            complete: self.agents.iter().all(|a| a.finished),
            spawned: self.agents.len(),
            finished: self.finished_count(),
            gate_counts: self.gate_counters.clone(),
            travel_times: self
                .agents
                .iter()
                .filter_map(|a| a.finish_step.map(|s| s as f64 * dt))
                .collect(),
        }
    }
}

fn nearest_destination(scenario: &Scenario, knowledge: &Knowledge, pos: Cell) -> DestinationId {
    scenario
        .destinations()
        .iter()
        .map(|d| {
            let dist = knowledge
                .fields
                .get(&Target::Destination(d.id))
                .map_or(f64::INFINITY, |f| f.get(pos));
            (d.id, dist)
        })
        .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
        .map(|(id, _)| id)
        .unwrap_or(DestinationId('E'))
}

/// Runs until every agent has arrived or the step cap is reached.
pub fn run(scenario: &Scenario, knowledge: &Knowledge, seed: u64) -> RunResult {
    let mut state = SimulationState::new(scenario, knowledge, seed);
    drive(&mut state, scenario, knowledge);
    state.result(scenario, seed)
}

/// Like [`run`], recording the full trace.
pub fn run_with_trace(scenario: &Scenario, knowledge: &Knowledge, seed: u64) -> (RunResult, Trace) {
    let mut state = SimulationState::new(scenario, knowledge, seed);
    state.enable_trace();
    drive(&mut state, scenario, knowledge);
    let result = state.result(scenario, seed);
    (result, state.take_trace().unwrap_or_default())
}

fn drive(state: &mut SimulationState, scenario: &Scenario, knowledge: &Knowledge) {
    while state.active_count() > 0 && state.step < scenario.config.max_steps {
        state.step(scenario, knowledge);
    }
}
