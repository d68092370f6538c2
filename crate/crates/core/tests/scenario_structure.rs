use std::collections::BTreeSet;

use proptest::prelude::*;
use wayfinder::cognitive_map::{build_cognitive_map, build_paths_tree, compute_target_fields};
use wayfinder::grid::Cell;
use wayfinder::scenario::*;

/// A hall split by vertical walls, each with one or more gates, exit on the
/// right. `walls` holds (column, gate rows) with gate rows as (start, len).
fn walled_hall(width: usize, height: usize, walls: &[(usize, Vec<(usize, usize)>)]) -> String {
    let mut rows = vec![vec!['.'; width]; height];
    let mut next = b'1';
    for (x, gates) in walls {
        for row in rows.iter_mut() {
            row[*x] = '#';
        }
        for &(y0, len) in gates {
            for row in rows.iter_mut().skip(y0).take(len) {
                row[*x] = next as char;
            }
            next += 1;
        }
    }
    for row in rows.iter_mut() {
        row[width - 1] = 'E';
    }
    rows[0][0] = 'S';
    let raster: String = rows
        .into_iter()
        .map(|r| r.into_iter().collect::<String>() + "\n")
        .collect();
    format!("agents = 1\n\n{raster}")
}

fn hall_strategy() -> impl Strategy<Value = String> {
    // two or three walls at fixed columns, 1-3 gates each with disjoint rows
    (
        2usize..=3,
        prop::collection::vec(prop::collection::btree_set(0usize..4, 1..=3), 3),
    )
        .prop_map(|(n, gate_slots)| {
            let walls: Vec<(usize, Vec<(usize, usize)>)> = (0..n)
                .map(|w| {
                    let x = 3 + 4 * w;
                    let gates = gate_slots[w].iter().map(|&slot| (slot * 3, 2)).collect();
                    (x, gates)
                })
                .collect();
            walled_hall(3 + 4 * n + 2, 12, &walls)
        })
}

proptest! {
    #[test]
    fn region_derivation_is_deterministic_and_partitions_the_floor(doc in hall_strategy()) {
        let a = parse_scenario(&doc).unwrap();
        let b = parse_scenario(&doc).unwrap();
        prop_assert_eq!(&a, &b);
        let walls = doc.lines().nth(2).unwrap().matches(|c: char| c == '#' || c.is_ascii_digit()).count();
        prop_assert_eq!(a.regions().len(), walls + 1);
        let mut seen = BTreeSet::new();
        for r in a.regions() {
            for &c in &r.cells {
                prop_assert!(seen.insert(c));
                prop_assert_eq!(a.zone(c), Zone::Region(r.id));
            }
        }
        for c in a.grid().cells() {
            let on_floor = a.is_walkable(c) && !matches!(a.zone(c), Zone::Opening(_));
            prop_assert_eq!(on_floor, seen.contains(&c));
        }
        for o in a.openings() {
            prop_assert_eq!(o.regions[0].0 + 1, o.regions[1].0);
        }
    }

    #[test]
    fn closing_a_gate_removes_exactly_the_paths_through_it(doc in hall_strategy(), pick in 0usize..16) {
        let s = parse_scenario(&doc).unwrap();
        let dest = s.destinations()[0].id;
        let start = s.region_at(Cell::new(0, 0)).unwrap();
        let first_wall: Vec<OpeningId> = s.openings().iter()
            .filter(|o| o.regions.contains(&start)).map(|o| o.id).collect();
        prop_assume!(first_wall.len() > 1);
        let closed = first_wall[pick % first_wall.len()];
        let tree_of = |s: &Scenario| {
            let fields = compute_target_fields(s).unwrap();
            let map = build_cognitive_map(s);
            build_paths_tree(s, &map, dest, &fields, s.config.desired_speed)
        };
        let before: BTreeSet<Target> = tree_of(&s).paths(start).iter().map(|p| p.first()).collect();
        let after_s = s.close_openings(&[closed]).unwrap();
        let after: BTreeSet<Target> = tree_of(&after_s).paths(start).iter().map(|p| p.first()).collect();
        let mut expected = before.clone();
        expected.remove(&Target::Opening(closed));
        prop_assert_eq!(after, expected);
    }
}

#[test]
fn paths_tree_times_are_positive_and_finite_off_the_destination_region() {
    let s = parse_scenario(&walled_hall(
        13,
        12,
        &[(3, vec![(0, 2), (6, 2)]), (7, vec![(3, 3)])],
    ))
    .unwrap();
    let fields = compute_target_fields(&s).unwrap();
    let map = build_cognitive_map(&s);
    let tree = build_paths_tree(&s, &map, s.destinations()[0].id, &fields, 1.33);
    let dest_region = s.destination_region(s.destinations()[0].id).unwrap();
    for ((region, _), entry) in tree.entries() {
        if *region == dest_region {
            continue;
        }
        assert!(entry.best.free_flow_time > 0.0 && entry.best.free_flow_time.is_finite());
        assert!(entry
            .best
            .targets
            .last()
            .is_some_and(|t| matches!(t, Target::Destination(_))));
    }
}
