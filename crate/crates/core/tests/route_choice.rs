mod common;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wayfinder::cognitive_map::Path;
use wayfinder::experiment::{experiment_scenario, GATE_A, GATE_B, GATE_C};
use wayfinder::fields::compute_path_field;
use wayfinder::grid::{Cell, Grid};
use wayfinder::route_choice::*;
use wayfinder::scenario::{CellKind, OpeningId, Target};
use wayfinder::Knowledge;

use common::*;

fn path_to(id: char, free_flow_time: f64) -> Path {
    Path {
        targets: vec![
            Target::Opening(OpeningId(id)),
            Target::Destination(wayfinder::DestinationId('E')),
        ],
        length: free_flow_time * 1.33,
        free_flow_time,
    }
}

#[test]
fn forward_counts_match_set_comprehension() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let targets = [
        Target::Opening(OpeningId('a')),
        Target::Opening(OpeningId('b')),
    ];
    for case in 0..100 {
        let grid = random_grid(&mut rng, 16, 16, 0.15);
        let free = walkable_cells(&grid);
        let goal = free[rng.gen_range(0..free.len())];
        let field = compute_path_field(&grid, &[goal]).unwrap();
        let agents = random_population(&mut rng, &grid, &targets, 30);
        let gamma = rng.gen_range(0.0..8.0);
        for me in &agents {
            for &t in &targets {
                let want = ahead_set(t, &field, me, &agents).len();
                assert_eq!(forward_count(t, &field, me, &agents), want, "case {case}");
                let perceived = if field.get(me.pos) < gamma { want } else { 0 };
                assert_eq!(perceive_forward(t, &field, me, gamma, &agents), perceived);
            }
        }
    }
}

#[test]
fn eval_f_picks_proportionally_to_diffused_weight() {
    let mut cf = ChoiceField::new(5, 5);
    let me = Cell::new(2, 2);
    // three diffusions for b reaching `me` at weight 1, one for c
    for _ in 0..3 {
        cf.diffuse(me, Target::Opening(OpeningId('b')), 1.2, 3, None);
    }
    cf.diffuse(me, Target::Opening(OpeningId('c')), 1.2, 3, None);
    let (pb, pc) = (path_to('b', 10.0), path_to('c', 11.0));
    let candidates = [&pb, &pc];
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let trials = 10_000;
    let mut b = 0;
    for _ in 0..trials {
        let f = eval_f(&candidates, me, &cf, &mut rng);
        assert_eq!(f.iter().sum::<f64>(), 1.0);
        if f[0] == 1.0 {
            b += 1;
        }
    }
    let share = b as f64 / trials as f64;
    assert!((share - 0.75).abs() < 0.03, "share {share}");
}

#[test]
fn eval_f_is_zero_without_influence() {
    let cf = ChoiceField::new(5, 5);
    let (pb, pc) = (path_to('b', 10.0), path_to('c', 11.0));
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    assert_eq!(
        eval_f(&[&pb, &pc], Cell::new(1, 1), &cf, &mut rng),
        vec![0.0, 0.0]
    );
}

#[test]
fn choice_field_summed_weights_from_two_diffusers() {
    let mut cf = ChoiceField::new(9, 9);
    let t = Target::Opening(OpeningId('b'));
    cf.diffuse(Cell::new(3, 4), t, 1.2, 3, None);
    cf.diffuse(Cell::new(6, 4), t, 1.2, 3, None);
    // (4,4) is at distance 1 and 2 from the diffusers
    assert!((cf.weights_at(Cell::new(4, 4))[&t] - 1.5).abs() < 1e-12);
}

#[test]
fn diffusion_skips_obstacles() {
    let mut grid = Grid::new(5, 5, CellKind::Walkable);
    grid[Cell::new(3, 2)] = CellKind::Obstacle;
    let mut cf = ChoiceField::new(5, 5);
    cf.diffuse(
        Cell::new(2, 2),
        Target::Opening(OpeningId('b')),
        1.2,
        3,
        Some(&grid),
    );
    assert!(cf.entries(Cell::new(3, 2)).is_empty());
    assert!(!cf.entries(Cell::new(1, 2)).is_empty());
}

#[test]
fn eval_q_on_the_experiment_hall() {
    let s = experiment_scenario();
    let k = Knowledge::build(&s).unwrap();
    let tree = &k.trees[&wayfinder::experiment::EXIT];
    let start = s.region_at(Cell::new(12, 14)).unwrap();
    let candidates = tree.paths(start);
    assert_eq!(candidates.len(), 3);
    let me = AgentView {
        id: 0,
        pos: Cell::new(15, 9),
        dest: None,
    };
    let gate = |id: OpeningId| Some(Target::Opening(id));
    // two ahead of me towards gate a, one towards b
    let agents = vec![
        me,
        AgentView {
            id: 1,
            pos: Cell::new(23, 13),
            dest: gate(GATE_A),
        },
        AgentView {
            id: 2,
            pos: Cell::new(24, 12),
            dest: gate(GATE_A),
        },
        AgentView {
            id: 3,
            pos: Cell::new(24, 9),
            dest: gate(GATE_B),
        },
        AgentView {
            id: 4,
            pos: Cell::new(11, 1),
            dest: gate(GATE_C),
        },
    ];
    let q = eval_q(&candidates, &me, 10.0, &agents, &k.fields, &s);
    assert_eq!(q, vec![1.0, 0.5, 0.0]);
    assert_eq!(
        eval_q(&candidates, &me, 0.0, &agents, &k.fields, &s),
        vec![0.0; 3]
    );
    let first: Vec<Target> = candidates.iter().map(|p| p.first()).collect();
    assert_eq!(first, [GATE_A, GATE_B, GATE_C].map(Target::Opening));
}

fn evaluation_triples() -> impl Strategy<Value = Vec<(f64, f64, f64)>> {
    prop::collection::vec(
        (
            0.01f64..=1.0,
            0.0f64..=1.0,
            prop::bool::ANY.prop_map(|b| b as u8 as f64),
        ),
        1..6,
    )
}

fn weights() -> impl Strategy<Value = UtilityWeights> {
    (0.0f64..20.0, 0.0f64..10.0, 0.0f64..5.0).prop_map(|(a, b, c)| UtilityWeights::new(a, b, c))
}

proptest! {
    #[test]
    fn probabilities_sum_to_one(triples in evaluation_triples(), w in weights()) {
        let paths: Vec<Path> = (0..triples.len()).map(|i| path_to((b'a' + i as u8) as char, 1.0)).collect();
        let evals: Vec<PathEvaluation> = paths.iter().zip(&triples)
            .map(|(p, &(tt, q, f))| PathEvaluation::new(p, tt, q, f)).collect();
        let probs = choice_probabilities(&evals, &w);
        prop_assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        prop_assert!(probs.iter().all(|p| (0.0..=1.0).contains(p)));
    }

    #[test]
    fn scaling_weights_sharpens_the_choice(triples in evaluation_triples(), w in weights(), lambda in 1.0f64..10.0) {
        let paths: Vec<Path> = (0..triples.len()).map(|i| path_to((b'a' + i as u8) as char, 1.0)).collect();
        let evals: Vec<PathEvaluation> = paths.iter().zip(&triples)
            .map(|(p, &(tt, q, f))| PathEvaluation::new(p, tt, q, f)).collect();
        let base = choice_probabilities(&evals, &w);
        let sharp = choice_probabilities(&evals, &w.scaled(lambda));
        let max = |v: &[f64]| v.iter().copied().fold(0.0, f64::max);
        prop_assert!(max(&sharp) >= max(&base) - 1e-12);
        let utilities: Vec<f64> = evals.iter().map(|e| e.utility(&w)).collect();
        let top = utilities.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        for (i, u) in utilities.iter().enumerate() {
            if *u == top {
                prop_assert!((sharp[i] - max(&sharp)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn eval_tt_is_one_for_the_fastest(times in prop::collection::vec(0.1f64..100.0, 1..8)) {
        let e = eval_tt(&times);
        let best = times.iter().copied().fold(f64::INFINITY, f64::min);
        for (t, v) in times.iter().zip(&e) {
            prop_assert!(*v > 0.0 && *v <= 1.0);
            if *t == best {
                prop_assert_eq!(*v, 1.0);
            }
        }
    }

    #[test]
    fn another_agent_ahead_never_lowers_congestion(seed in 0u64..5_000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let grid = Grid::new(14, 14, CellKind::Walkable);
        let t = Target::Opening(OpeningId('a'));
        let field = compute_path_field(&grid, &[Cell::new(13, 7)]).unwrap();
        let mut agents = random_population(&mut rng, &grid, &[t], 20);
        let me = agents[0];
        let before = perceive_forward(t, &field, &me, 100.0, &agents);
        let free: Vec<Cell> = walkable_cells(&grid)
            .into_iter()
            .filter(|c| agents.iter().all(|a| a.pos != *c))
            .collect();
        let pos = free[rng.gen_range(0..free.len())];
        agents.push(AgentView { id: agents.len(), pos, dest: Some(t) });
        let after = perceive_forward(t, &field, &me, 100.0, &agents);
        prop_assert!(after >= before);
        prop_assert_eq!(after - before, usize::from(field.get(pos) < field.get(me.pos)));
    }

    #[test]
    fn max_normalization_stays_in_unit_interval(raw in prop::collection::vec(0.0f64..50.0, 1..8)) {
        let n = normalize_by_max(&raw);
        prop_assert!(n.iter().all(|v| (0.0..=1.0).contains(v)));
        if raw.iter().any(|v| *v > 0.0) {
            prop_assert!(n.contains(&1.0));
        }
    }
}

#[test]
fn choose_path_frequencies_follow_the_softmax() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let paths: Vec<Path> = ['a', 'b', 'c'].iter().map(|&c| path_to(c, 1.0)).collect();
    let mut evals = vec![
        PathEvaluation::new(&paths[0], 1.0, 0.8, 0.0),
        PathEvaluation::new(&paths[1], 0.95, 0.2, 1.0),
        PathEvaluation::new(&paths[2], 0.8, 0.0, 0.0),
    ];
    let w = UtilityWeights::new(10.0, 2.5, 0.5);
    let probs = choice_probabilities(&evals, &w);
    let mut counts = [0usize; 3];
    for _ in 0..20_000 {
        counts[choose_path(&mut evals, &w, &mut rng)] += 1;
    }
    for i in 0..3 {
        assert!((counts[i] as f64 / 20_000.0 - probs[i]).abs() < 0.02);
        assert_eq!(evals[i].probability, probs[i]);
    }
}
