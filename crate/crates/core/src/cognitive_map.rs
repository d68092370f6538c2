//! Region graph of the environment and per-destination trees of plausible
//! routes with their free-flow travel times.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::fields::{compute_path_field, FieldError, FloorField};
use crate::scenario::{DestinationId, OpeningId, RegionId, Scenario, Target};

/// A path whose free-flow time exceeds this factor times the best path sharing
/// its first opening is not considered plausible.
pub const DOMINANCE_FACTOR: f64 = 3.0;

/// Path fields of every opening and destination of a scenario.
pub type TargetFields = BTreeMap<Target, FloorField>;

/// Computes the path field of every target.
pub fn compute_target_fields(scenario: &Scenario) -> Result<TargetFields, FieldError> {
    scenario
        .targets()
        .into_iter()
        .map(|t| {
            let cells = scenario.target_cells(t).unwrap_or(&[]);
            compute_path_field(scenario.grid(), cells).map(|f| (t, f))
        })
        .collect()
}

/// Undirected labelled graph: regions as nodes, openings as edges.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CognitiveMap {
    nodes: Vec<RegionId>,
    edges: Vec<(OpeningId, RegionId, RegionId)>,
}

impl CognitiveMap {
    pub fn nodes(&self) -> &[RegionId] {
        &self.nodes
    }

    pub fn edges(&self) -> &[(OpeningId, RegionId, RegionId)] {
        &self.edges
    }

    /// Openings leaving `region`, paired with the region on the other side.
    pub fn neighbors(&self, region: RegionId) -> impl Iterator<Item = (OpeningId, RegionId)> + '_ {
        self.edges.iter().filter_map(move |&(o, a, b)| {
            if a == region {
                Some((o, b))
            } else if b == region {
                Some((o, a))
            } else {
                None
            }
        })
    }

    /// The region reached by crossing `opening` from `from`.
    pub fn across(&self, opening: OpeningId, from: RegionId) -> Option<RegionId> {
        self.neighbors(from)
            .find(|&(o, _)| o == opening)
            .map(|(_, r)| r)
    }
}

pub fn build_cognitive_map(scenario: &Scenario) -> CognitiveMap {
    CognitiveMap {
        nodes: scenario.regions().iter().map(|r| r.id).collect(),
        edges: scenario
            .openings()
            .iter()
            .map(|o| (o.id, o.regions[0], o.regions[1]))
            .collect(),
    }
}

/// An ordered sequence of targets ending at a final destination.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Path {
    pub targets: Vec<Target>,
    /// Walking distance from the first target to the destination, meters.
    pub length: f64,
    /// `length` at the desired speed, seconds.
    pub free_flow_time: f64,
}

impl Path {
    pub fn first(&self) -> Target {
        self.targets[0]
    }

    pub fn contains_opening(&self, id: OpeningId) -> bool {
        self.targets.contains(&Target::Opening(id))
    }
}

/// Best path for one (region, first target) pair, plus plausible alternates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathEntry {
    pub best: Path,
    pub alternates: Vec<Path>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathsTree {
    destination: DestinationId,
    entries: BTreeMap<(RegionId, Target), PathEntry>,
}

impl PathsTree {
    pub fn destination(&self) -> DestinationId {
        self.destination
    }

    pub fn entries(&self) -> &BTreeMap<(RegionId, Target), PathEntry> {
        &self.entries
    }

    /// All (path, free-flow time) couples available from `region`: the best
    /// path per first target, ordered by first target.
    pub fn paths(&self, region: RegionId) -> Vec<&Path> {
        self.entries
            .range((region, Target::Opening(OpeningId('\0')))..)
            .take_while(|((r, _), _)| *r == region)
            .map(|(_, e)| &e.best)
            .collect()
    }
}

/// Free function form of [`PathsTree::paths`].
pub fn paths(tree: &PathsTree, region: RegionId) -> Vec<&Path> {
    tree.paths(region)
}

/// Enumerates simple region paths from every region to `destination`.
///
/// Segment lengths are read from the downstream target's path field at the
/// centroid cell of the upstream opening. Regions that cannot reach the
/// destination get no entries.
pub fn build_paths_tree(
    scenario: &Scenario,
    map: &CognitiveMap,
    destination: DestinationId,
    fields: &TargetFields,
    desired_speed: f64,
) -> PathsTree {
    let mut entries = BTreeMap::new();
    let Some(dest_region) = scenario.destination_region(destination) else {
        return PathsTree {
            destination,
            entries,
        };
    };
    let end = Target::Destination(destination);

    for &region in map.nodes() {
        let mut found: Vec<Vec<Target>> = Vec::new();
        let mut visited = vec![region];
        let mut prefix = Vec::new();
        enumerate(
            map,
            region,
            dest_region,
            end,
            &mut visited,
            &mut prefix,
            &mut found,
        );

        let mut by_first: BTreeMap<Target, Vec<Path>> = BTreeMap::new();
        for targets in found {
            let Some(length) = path_length(scenario, fields, &targets) else {
                continue;
            };
            by_first.entry(targets[0]).or_default().push(Path {
                targets,
                length,
                free_flow_time: length / desired_speed,
            });
        }
        for (first, mut group) in by_first {
            group.sort_by(|a, b| {
                a.free_flow_time
                    .total_cmp(&b.free_flow_time)
                    .then_with(|| a.targets.cmp(&b.targets))
            });
            let best = group.remove(0);
            let limit = best.free_flow_time * DOMINANCE_FACTOR;
            group.retain(|p| p.free_flow_time <= limit);
            entries.insert(
                (region, first),
                PathEntry {
                    best,
                    alternates: group,
                },
            );
        }
    }
    PathsTree {
        destination,
        entries,
    }
}

fn enumerate(
    map: &CognitiveMap,
    region: RegionId,
    dest_region: RegionId,
    end: Target,
    visited: &mut Vec<RegionId>,
    prefix: &mut Vec<Target>,
    found: &mut Vec<Vec<Target>>,
) {
    if region == dest_region {
        let mut p = prefix.clone();
        p.push(end);
        found.push(p);
        return;
    }
    let next: Vec<(OpeningId, RegionId)> = map.neighbors(region).collect();
    for (opening, other) in next {
        if visited.contains(&other) {
            continue;
        }
        visited.push(other);
        prefix.push(Target::Opening(opening));
        enumerate(map, other, dest_region, end, visited, prefix, found);
        prefix.pop();
        visited.pop();
    }
}

/// Sum of centroid-to-next-target field distances; `None` if any leg is cut off.
fn path_length(scenario: &Scenario, fields: &TargetFields, targets: &[Target]) -> Option<f64> {
    let mut total = 0.0;
    for pair in targets.windows(2) {
        let from = scenario.target_centroid(pair[0])?;
        let d = fields.get(&pair[1])?.get(from);
        if !d.is_finite() {
            return None;
        }
        total += d;
    }
    Some(total)
}
