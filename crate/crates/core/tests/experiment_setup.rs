use wayfinder::cognitive_map::compute_target_fields;
use wayfinder::engine::{localize, Knowledge};
use wayfinder::experiment::*;
use wayfinder::route_choice::travel_time;
use wayfinder::scenario::{Target, Zone};

const MEASURED: [(f64, wayfinder::OpeningId); 3] =
    [(12.08, GATE_A), (12.85, GATE_B), (14.76, GATE_C)];

#[test]
fn hall_has_two_rooms_and_three_gates() {
    let s = experiment_scenario();
    assert_eq!(s.regions().len(), 2);
    assert_eq!(s.openings().len(), 3);
    for o in s.openings() {
        assert!((o.width_meters - 1.2).abs() < 1e-12, "{}", o.id);
    }
    let entrance = entrance_cells(&s);
    assert!((entrance.len() as f64 * 0.4 - 2.4).abs() < 1e-12);
    assert_eq!(s.destinations().len(), 1);
    assert_eq!(s.target_cells(Target::Destination(EXIT)).unwrap().len(), 6);
    assert_eq!(s.config.agent_count, PARTICIPANTS as usize);
    let (length, height) = hall_extent(&s);
    assert!((length - 12.0).abs() < 1e-9 && (height - 7.2).abs() < 1e-9);
}

#[test]
fn entrance_and_exit_are_aligned() {
    let s = experiment_scenario();
    let rows = |cells: &[wayfinder::Cell]| cells.iter().map(|c| c.y).collect::<Vec<_>>();
    assert_eq!(
        rows(&entrance_cells(&s)),
        rows(s.target_cells(Target::Destination(EXIT)).unwrap())
    );
}

#[test]
fn centroid_path_lengths_match_measured_routes() {
    let s = experiment_scenario();
    for (want, gate) in MEASURED {
        let got = centroid_path_length(&s, gate).unwrap();
        assert!((got - want).abs() <= 0.15, "{gate}: {got} vs {want}");
    }
}

#[test]
fn tree_travel_times_follow_route_lengths() {
    let s = experiment_scenario();
    let k = Knowledge::build(&s).unwrap();
    let tree = &k.trees[&EXIT];
    let entrance = entrance_cells(&s);
    let from = entrance[entrance.len() / 2];
    let hall = s.region_at(from).unwrap();
    let paths = tree.paths(hall);
    assert_eq!(paths.len(), 3);
    let mut times = Vec::new();
    for ((want, gate), p) in MEASURED.iter().zip(&paths) {
        assert_eq!(p.first(), Target::Opening(*gate));
        let t = travel_time(p, from, &k.fields, 1.33).unwrap();
        let expected = want / 1.33;
        assert!(
            (t - expected).abs() / expected < 0.05,
            "{gate}: {t} vs {expected}"
        );
        times.push(t);
    }
    assert!(times[0] < times[1] && times[1] < times[2]);
}

#[test]
fn procedures_leave_the_expected_gates_open() {
    let base = experiment_scenario();
    for p in Procedure::ALL {
        let s = p.scenario(&base).unwrap();
        let open: Vec<_> = s.openings().iter().map(|o| o.id).collect();
        let expected: Vec<_> = GATES
            .iter()
            .copied()
            .filter(|g| !p.closed_gates().contains(g))
            .collect();
        assert_eq!(open, expected, "procedure {p}");
        let k = Knowledge::build(&s).unwrap();
        let hall = s.region_at(entrance_cells(&s)[0]).unwrap();
        assert_eq!(k.trees[&EXIT].paths(hall).len(), expected.len());
        assert_eq!(k.map.edges().len(), expected.len());
    }
}

#[test]
fn every_walkable_cell_localizes_to_exactly_one_region() {
    let s = experiment_scenario();
    let exit_region = s.destination_region(EXIT).unwrap();
    let exit = Some(Target::Destination(EXIT));
    for c in s.grid().cells() {
        let got = localize(&s, c, exit, None);
        match s.zone(c) {
            Zone::Obstacle => assert_eq!(got, None),
            Zone::Region(r) => {
                assert_eq!(got, Some(r));
                for g in GATES {
                    assert_eq!(localize(&s, c, Some(Target::Opening(g)), None), Some(r));
                }
            }
            Zone::Opening(_) => {
                assert_eq!(got, Some(exit_region), "{c:?}");
                // a second call is stable
                assert_eq!(localize(&s, c, exit, got), got);
            }
        }
    }
}

#[test]
fn every_floor_cell_reaches_every_open_gate() {
    let s = experiment_scenario();
    let fields = compute_target_fields(&s).unwrap();
    for c in s.grid().cells().filter(|&c| s.is_walkable(c)) {
        for f in fields.values() {
            assert!(f.get(c).is_finite());
        }
    }
}
