//! Path utility and probabilistic route choice.
//!
//! The utility of a candidate path combines three normalized evaluations:
//! expected travel time (attractive), perceived queueing at its first opening
//! (repulsive) and the influence of nearby agents that just switched to it
//! (attractive). Choice probabilities are a softmax over the weighted sum
//!
//! ```text
//! U(P) = κ_tt·Eval_tt(P) − κ_q·Eval_q(P) + κ_f·Eval_f(P)
//! ```

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::cognitive_map::{Path, TargetFields};
use crate::fields::FloorField;
use crate::grid::{Cell, Grid, CELL_SIZE};
use crate::scenario::{CellKind, Scenario, SimulationConfig, Target};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UtilityWeights {
    pub kappa_tt: f64,
    pub kappa_q: f64,
    pub kappa_f: f64,
}

impl UtilityWeights {
    pub const fn new(kappa_tt: f64, kappa_q: f64, kappa_f: f64) -> Self {
        Self {
            kappa_tt,
            kappa_q,
            kappa_f,
        }
    }

    pub fn scaled(self, factor: f64) -> Self {
        Self::new(
            self.kappa_tt * factor,
            self.kappa_q * factor,
            self.kappa_f * factor,
        )
    }
}

impl From<&SimulationConfig> for UtilityWeights {
    fn from(c: &SimulationConfig) -> Self {
        Self::new(c.kappa_tt, c.kappa_q, c.kappa_f)
    }
}

/// What the evaluators need to know about any pedestrian.
pub trait Pedestrian {
    fn id(&self) -> usize;
    fn position(&self) -> Cell;
    /// Current intermediate target; `None` for inactive agents.
    fn destination(&self) -> Option<Target>;
}

/// Minimal pedestrian snapshot, handy for tests and external callers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentView {
    pub id: usize,
    pub pos: Cell,
    pub dest: Option<Target>,
}

impl Pedestrian for AgentView {
    fn id(&self) -> usize {
        self.id
    }
    fn position(&self) -> Cell {
        self.pos
    }
    fn destination(&self) -> Option<Target> {
        self.dest
    }
}

/// Expected time to the final destination along `path` from `pos`: the
/// path's free-flow time plus the walk to its first target. `None` when the
/// first target is unreachable from `pos`.
pub fn travel_time(path: &Path, pos: Cell, fields: &TargetFields, speed: f64) -> Option<f64> {
    let pf = fields.get(&path.first())?.get(pos);
    pf.is_finite().then(|| path.free_flow_time + pf / speed)
}

/// Ratio of the fastest candidate time to each candidate's time.
pub fn eval_tt(times: &[f64]) -> Vec<f64> {
    let best = times.iter().copied().fold(f64::INFINITY, f64::min);
    times
        .iter()
        .map(|&t| if t > 0.0 { best / t } else { 1.0 })
        .collect()
}

/// Number of other agents heading to `target` that are strictly closer to it.
pub fn forward_count<A: Pedestrian>(
    target: Target,
    field: &FloorField,
    me: &A,
    agents: &[A],
) -> usize {
    let mine = field.get(me.position());
    agents
        .iter()
        .filter(|a| a.id() != me.id())
        .filter(|a| a.destination() == Some(target))
        .filter(|a| field.get(a.position()) < mine)
        .count()
}

/// [`forward_count`], but only once the agent is within `gamma` meters of the
/// target along its path field.
pub fn perceive_forward<A: Pedestrian>(
    target: Target,
    field: &FloorField,
    me: &A,
    gamma: f64,
    agents: &[A],
) -> usize {
    if field.get(me.position()) < gamma {
        forward_count(target, field, me, agents)
    } else {
        0
    }
}

/// Congestion evaluation: perceived forward agents per meter of width at each
/// candidate's first target, divided by the largest such value.
pub fn eval_q<A: Pedestrian>(
    candidates: &[&Path],
    me: &A,
    gamma: f64,
    agents: &[A],
    fields: &TargetFields,
    scenario: &Scenario,
) -> Vec<f64> {
    let raw: Vec<f64> = candidates
        .iter()
        .map(|p| {
            let first = p.first();
            let (Some(field), Some(width)) = (fields.get(&first), scenario.target_width(first))
            else {
                return 0.0;
            };
            perceive_forward(first, field, me, gamma, agents) as f64 / width
        })
        .collect();
    normalize_by_max(&raw)
}

/// Divides by the maximum; an all-zero input stays all zero.
pub fn normalize_by_max(raw: &[f64]) -> Vec<f64> {
    let max = raw.iter().copied().fold(0.0, f64::max);
    if max > 0.0 {
        raw.iter().map(|v| v / max).collect()
    } else {
        vec![0.0; raw.len()]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChoiceEntry {
    pub target: Target,
    pub weight: f64,
    pub remaining: u32,
}

/// Grid of transient (target, weight) influences left by agents that changed
/// their plan.
#[derive(Debug, Clone, PartialEq)]
pub struct ChoiceField {
    cells: Grid<Vec<ChoiceEntry>>,
    live: usize,
}

impl ChoiceField {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            cells: Grid::new(width, height, Vec::new()),
            live: 0,
        }
    }

    /// Spreads `1/Dist` (cell units, 1 on the origin) to every cell within
    /// `rho_c` meters of `origin`. Obstacle cells are skipped when a grid is
    /// given. Weights for the same target and lifetime accumulate.
    pub fn diffuse(
        &mut self,
        origin: Cell,
        target: Target,
        rho_c: f64,
        tau_c: u32,
        walkable: Option<&Grid<CellKind>>,
    ) {
        if tau_c == 0 {
            return;
        }
        let radius = rho_c / CELL_SIZE;
        let reach = (radius + 1e-9).floor() as isize;
        for dy in -reach..=reach {
            for dx in -reach..=reach {
                let dist = (dx as f64).hypot(dy as f64);
                if dist > radius + 1e-9 {
                    continue;
                }
                let Some(cell) = origin.offset(dx, dy) else {
                    continue;
                };
                if !self.cells.contains(cell) {
                    continue;
                }
                if walkable.is_some_and(|g| !g[cell].is_walkable()) {
                    continue;
                }
                let value = if dist == 0.0 { 1.0 } else { 1.0 / dist };
                let slot = &mut self.cells[cell];
                match slot
                    .iter_mut()
                    .find(|e| e.target == target && e.remaining == tau_c)
                {
                    Some(e) => e.weight += value,
                    None => {
                        slot.push(ChoiceEntry {
                            target,
                            weight: value,
                            remaining: tau_c,
                        });
                        self.live += 1;
                    }
                }
            }
        }
    }

    /// Counts down every entry, discarding those that expire. Weights are
    /// not attenuated.
    pub fn decay(&mut self) {
        if self.live == 0 {
            return;
        }
        let mut live = 0;
        for slot in self.cells.values_mut() {
            if slot.is_empty() {
                continue;
            }
            slot.retain_mut(|e| {
                e.remaining -= 1;
                e.remaining > 0
            });
            live += slot.len();
        }
        self.live = live;
    }

    /// Summed weight per target at a cell.
    pub fn weights_at(&self, cell: Cell) -> BTreeMap<Target, f64> {
        let mut out = BTreeMap::new();
        if let Some(slot) = self.cells.get(cell) {
            for e in slot {
                *out.entry(e.target).or_insert(0.0) += e.weight;
            }
        }
        out
    }

    pub fn entries(&self, cell: Cell) -> &[ChoiceEntry] {
        self.cells.get(cell).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Number of stored entries across all cells.
    pub fn entry_count(&self) -> usize {
        self.live
    }

    pub fn is_empty(&self) -> bool {
        self.live == 0
    }
}

/// Free function form of [`ChoiceField::diffuse`].
pub fn diffuse_choice(
    field: &mut ChoiceField,
    origin: Cell,
    target: Target,
    rho_c: f64,
    tau_c: u32,
) {
    field.diffuse(origin, target, rho_c, tau_c, None);
}

/// Free function form of [`ChoiceField::decay`].
pub fn decay_choice_field(field: &mut ChoiceField) {
    field.decay();
}

/// Following evaluation: at most one candidate gets 1, picked among the
/// candidates with positive influence at `pos` with probability proportional
/// to that influence.
pub fn eval_f<R: Rng + ?Sized>(
    candidates: &[&Path],
    pos: Cell,
    field: &ChoiceField,
    rng: &mut R,
) -> Vec<f64> {
    let mut out = vec![0.0; candidates.len()];
    if field.is_empty() {
        return out;
    }
    let weights = field.weights_at(pos);
    let influence: Vec<f64> = candidates
        .iter()
        .map(|p| weights.get(&p.first()).copied().unwrap_or(0.0).max(0.0))
        .collect();
    let total: f64 = influence.iter().sum();
    if total <= 0.0 {
        return out;
    }
    let pick = sample_index(&influence, total, rng);
    out[pick] = 1.0;
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathEvaluation<'a> {
    pub path: &'a Path,
    pub eval_tt: f64,
    pub eval_q: f64,
    pub eval_f: f64,
    pub probability: f64,
}

impl<'a> PathEvaluation<'a> {
    pub fn new(path: &'a Path, eval_tt: f64, eval_q: f64, eval_f: f64) -> Self {
        Self {
            path,
            eval_tt,
            eval_q,
            eval_f,
            probability: 0.0,
        }
    }

    pub fn utility(&self, w: &UtilityWeights) -> f64 {
        w.kappa_tt * self.eval_tt - w.kappa_q * self.eval_q + w.kappa_f * self.eval_f
    }
}

/// Softmax of the weighted utilities.
pub fn choice_probabilities(evals: &[PathEvaluation<'_>], weights: &UtilityWeights) -> Vec<f64> {
    let utilities: Vec<f64> = evals.iter().map(|e| e.utility(weights)).collect();
    let max = utilities.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exp: Vec<f64> = utilities.iter().map(|u| (u - max).exp()).collect();
    let total: f64 = exp.iter().sum();
    exp.into_iter().map(|e| e / total).collect()
}

/// Samples a path index from the softmax and records the probabilities in
/// `evals`.
pub fn choose_path<R: Rng + ?Sized>(
    evals: &mut [PathEvaluation<'_>],
    weights: &UtilityWeights,
    rng: &mut R,
) -> usize {
    assert!(
        !evals.is_empty(),
        "choose_path needs at least one candidate"
    );
    let probs = choice_probabilities(evals, weights);
    for (e, p) in evals.iter_mut().zip(&probs) {
        e.probability = *p;
    }
    sample_index(&probs, 1.0, rng)
}

fn sample_index<R: Rng + ?Sized>(weights: &[f64], total: f64, rng: &mut R) -> usize {
    let mut u = rng.gen::<f64>() * total;
    for (i, w) in weights.iter().enumerate() {
        if u < *w {
            return i;
        }
        u -= w;
    }
    // rounding fell off the end: last positive weight
    weights.iter().rposition(|w| *w > 0.0).unwrap_or(0)
}

/// Everything needed to evaluate candidates for one agent.
pub struct Perception<'a, A> {
    pub scenario: &'a Scenario,
    pub fields: &'a TargetFields,
    pub agents: &'a [A],
    pub choice_field: &'a ChoiceField,
    pub gamma: f64,
    pub speed: f64,
}

/// Runs the three evaluators over the reachable candidates. Candidates whose
/// first target is cut off from the agent are dropped.
pub fn evaluate_paths<'p, A: Pedestrian, R: Rng + ?Sized>(
    perception: &Perception<'_, A>,
    me: &A,
    candidates: &[&'p Path],
    rng: &mut R,
) -> Vec<PathEvaluation<'p>> {
    let pos = me.position();
    let mut reachable = Vec::with_capacity(candidates.len());
    let mut times = Vec::with_capacity(candidates.len());
    for &p in candidates {
        if let Some(t) = travel_time(p, pos, perception.fields, perception.speed) {
            reachable.push(p);
            times.push(t);
        }
    }
    if reachable.is_empty() {
        return Vec::new();
    }
    let tt = eval_tt(&times);
    let q = eval_q(
        &reachable,
        me,
        perception.gamma,
        perception.agents,
        perception.fields,
        perception.scenario,
    );
    let f = eval_f(&reachable, pos, perception.choice_field, rng);
    reachable
        .into_iter()
        .enumerate()
        .map(|(i, p)| PathEvaluation::new(p, tt[i], q[i], f[i]))
        .collect()
}
