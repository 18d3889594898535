//! Real monodromy structure at a base point.
//!
//! Generators are real paths between marked points of regions (crossing a
//! boundary site) and real loops inside one region (around holes, punctures,
//! or supplied by the user). Each generator induces a partial injection
//! between the label sets at its two marked points, keeping only the labels
//! whose paths stay nonsingular. A breadth-first search over (region, partial
//! injection from base labels) states yields every loop action at the base
//! point, and from those the maps `G_1..G_R`.

mod partial;
mod structure;

use std::collections::{BTreeMap, HashMap, VecDeque};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::polysys::{PolySystem, RPoint};
use crate::regionmap::RegionMap;
use crate::solver::{solve_labeled_tol, SolutionSet, SolverError, LABEL_MATCH_RADIUS, REAL_TOL};
use crate::tracker::{match_endpoint, track_all, ParamPath, TrackOptions, TrackStatus};

pub use partial::{PartialError, PartialPermutation};
pub use structure::{combinations, GEntry, ListingGroup, RealMonodromyStructure};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RmsError {
    #[error("region {region}: {got} real solutions at its marked point, the scan found {expected}")]
    RegionCountMismatch { region: usize, expected: u32, got: usize },
    #[error("base labels are at a different point than the region map base")]
    BaseMismatch,
    #[error("generator {generator}: endpoint of label {label} is close to two labels")]
    AmbiguousMatch { generator: usize, label: usize },
    #[error("loop {0} is not a valid path: {1}")]
    BadLoop(usize, String),
    #[error("closure search exceeded {0} states")]
    StateExplosion(usize),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RmsOptions {
    pub track: TrackOptions,
    /// Seed for solving at marked points.
    pub seed: u64,
    pub max_states: usize,
    pub match_radius: f64,
    /// Realness threshold when solving at marked points.
    pub real_tol: f64,
    /// Extra real loops at the base point, as waypoint lists.
    pub user_loops: Vec<Vec<Vec<f64>>>,
}

impl Default for RmsOptions {
    fn default() -> Self {
        RmsOptions {
            track: TrackOptions::default(),
            seed: 0,
            max_states: 10_000_000,
            match_radius: LABEL_MATCH_RADIUS,
            real_tol: REAL_TOL,
            user_loops: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GeneratorSource {
    Crossing { site: usize },
    Hole { region: usize, index: usize },
    User { index: usize },
}

/// Partial identification of labels at one marked point with labels at
/// another, induced by a real path between them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Correspondence {
    pub id: usize,
    pub from_region: usize,
    pub to_region: usize,
    pub map: PartialPermutation,
    pub source: GeneratorSource,
    /// Other sources that induced the same map.
    pub duplicates: Vec<GeneratorSource>,
    /// Real waypoints from the marked point of `from_region` to that of `to_region`.
    pub witness: Vec<Vec<f64>>,
    /// Labels (1-based) lost on the way, with the reason.
    pub dropped: Vec<(usize, TrackStatus)>,
}

/// A generator used forwards or backwards.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Step {
    pub generator: usize,
    pub inverted: bool,
}

/// A loop action at the base point with the generator word realizing it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosureElement {
    pub map: PartialPermutation,
    pub word: Vec<Step>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RmsResult {
    pub r: usize,
    pub base_region: usize,
    /// Labels at each region's marked point (`None` for regions without real solutions).
    pub region_labels: Vec<Option<Vec<RPoint>>>,
    pub generators: Vec<Correspondence>,
    /// Distinct loop actions at the base point reached by the search
    /// (restrictions are implied and not listed).
    pub elements: Vec<ClosureElement>,
    pub structure: RealMonodromyStructure,
    pub transitive: Vec<bool>,
    pub real_group: Vec<crate::cmono::Permutation>,
    pub assembly_mode_changes: Vec<(usize, usize)>,
    pub partition: Vec<Vec<usize>>,
    pub states_explored: usize,
}

fn dedup_consecutive(points: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(points.len());
    for p in points {
        if out.last() != Some(p) {
            out.push(p.clone());
        }
    }
    out
}

/// Tracks every label at the start of `path` in real arithmetic and matches the
/// successful endpoints against `to_labels`.
fn induced_map(
    sys: &PolySystem,
    path: &[Vec<f64>],
    from_labels: &[RPoint],
    to_labels: &[RPoint],
    opts: &RmsOptions,
    generator: usize,
) -> Result<(PartialPermutation, Vec<(usize, TrackStatus)>), RmsError> {
    let pts = dedup_consecutive(path);
    if pts.len() < 2 {
        return Ok((PartialPermutation::identity(from_labels.len()), Vec::new()));
    }
    let pp = ParamPath::real_polyline(&pts).map_err(|e| RmsError::BadLoop(generator, e.to_string()))?;
    let starts: Vec<_> = from_labels.iter().map(|l| l.to_complex()).collect();
    let targets: Vec<_> = to_labels.iter().map(|l| l.to_complex()).collect();
    let mut map = vec![None; from_labels.len()];
    let mut dropped = Vec::new();
    for (i, out) in track_all(sys, &pp, &starts, &opts.track).into_iter().enumerate() {
        let out = match out {
            Ok(o) => o,
            Err(_) => {
                dropped.push((i + 1, TrackStatus::StepFailure));
                continue;
            }
        };
        match (out.status, &out.endpoint) {
            (TrackStatus::Success, Some(x)) => match match_endpoint(x, &targets, opts.match_radius) {
                Ok(Some(j)) => map[i] = Some(j),
                Ok(None) => dropped.push((i + 1, TrackStatus::StepFailure)),
                Err(_) => return Err(RmsError::AmbiguousMatch { generator, label: i + 1 }),
            },
            (status, _) => dropped.push((i + 1, status)),
        }
    }
    // Two labels landing on one target means a path jumped; keep neither.
    let mut seen: HashMap<usize, usize> = HashMap::new();
    for i in 0..map.len() {
        if let Some(j) = map[i] {
            if let Some(&k) = seen.get(&j) {
                map[i] = None;
                map[k] = None;
                dropped.push((i + 1, TrackStatus::StepFailure));
                dropped.push((k + 1, TrackStatus::StepFailure));
            } else {
                seen.insert(j, i);
            }
        }
    }
    dropped.sort_unstable_by_key(|d| d.0);
    dropped.dedup_by_key(|d| d.0);
    let map = PartialPermutation::new(map, to_labels.len()).expect("made injective above");
    Ok((map, dropped))
}

/// Labels at every region's marked point; the base region uses `base`.
/// Each count is checked against the scan.
pub fn region_labels(
    sys: &PolySystem,
    map: &RegionMap,
    base: &SolutionSet,
    opts: &RmsOptions,
) -> Result<Vec<Option<Vec<RPoint>>>, RmsError> {
    map.regions
        .par_iter()
        .map(|region| {
            if region.id == map.base_region {
                if base.r() != region.count as usize {
                    return Err(RmsError::RegionCountMismatch { region: region.id, expected: region.count, got: base.r() });
                }
                return Ok(Some(base.labels.clone()));
            }
            let set = solve_labeled_tol(sys, &RPoint(region.marked_point.clone()).to_complex(), opts.seed, opts.real_tol, None, None)?;
            if set.r() != region.count as usize {
                return Err(RmsError::RegionCountMismatch { region: region.id, expected: region.count, got: set.r() });
            }
            Ok((region.count > 0).then_some(set.labels))
        })
        .collect()
}

/// Tracks all crossing, hole and user generators and merges those inducing
/// the same map between the same regions.
pub fn generators(
    sys: &PolySystem,
    map: &RegionMap,
    labels: &[Option<Vec<RPoint>>],
    opts: &RmsOptions,
) -> Result<Vec<Correspondence>, RmsError> {
    let mut raw: Vec<(usize, usize, GeneratorSource, Vec<Vec<f64>>)> = Vec::new();
    for site in &map.sites {
        raw.push((site.a, site.b, GeneratorSource::Crossing { site: site.id }, site.full_path()));
    }
    for region in &map.regions {
        for (index, h) in region.holes.iter().enumerate() {
            raw.push((region.id, region.id, GeneratorSource::Hole { region: region.id, index }, h.path.clone()));
        }
    }
    let b = map.base_region;
    for (index, lp) in opts.user_loops.iter().enumerate() {
        let mut path = lp.clone();
        if path.first() != Some(&map.base_point) {
            path.insert(0, map.base_point.clone());
        }
        if path.last() != Some(&map.base_point) {
            path.push(map.base_point.clone());
        }
        if path.iter().any(|p| p.len() != map.base_point.len()) {
            return Err(RmsError::BadLoop(index, "waypoint dimension differs from the parameter count".into()));
        }
        raw.push((b, b, GeneratorSource::User { index }, path));
    }
    raw.retain(|(a, b, _, _)| labels[*a].is_some() && labels[*b].is_some());

    let tracked: Vec<Result<TrackedPath, RmsError>> = raw
        .par_iter()
        .enumerate()
        .map(|(k, (a, b, _, path))| induced_map(sys, path, labels[*a].as_ref().unwrap(), labels[*b].as_ref().unwrap(), opts, k))
        .collect();

    let mut out: Vec<Correspondence> = Vec::new();
    let mut index: BTreeMap<(usize, usize, PartialPermutation), usize> = BTreeMap::new();
    for ((a, b, source, path), res) in raw.into_iter().zip(tracked) {
        let (pmap, dropped) = res?;
        let key = (a, b, pmap.clone());
        if let Some(&k) = index.get(&key) {
            out[k].duplicates.push(source);
            continue;
        }
        index.insert(key, out.len());
        out.push(Correspondence {
            id: out.len(),
            from_region: a,
            to_region: b,
            map: pmap,
            source,
            duplicates: Vec::new(),
            witness: dedup_consecutive(&path),
            dropped,
        });
    }
    Ok(out)
}

/// Breadth-first search over (region, injection of base labels) states.
/// Returns every distinct nonempty action at the base region with a word of
/// generators realizing it, plus the number of states visited.
pub fn groupoid_closure(
    gens: &[Correspondence],
    base_region: usize,
    r: usize,
    max_states: usize,
) -> Result<(Vec<ClosureElement>, usize), RmsError> {
    let mut by_region: HashMap<usize, Vec<Step>> = HashMap::new();
    for g in gens {
        by_region.entry(g.from_region).or_default().push(Step { generator: g.id, inverted: false });
        by_region.entry(g.to_region).or_default().push(Step { generator: g.id, inverted: true });
    }
    let inverses: Vec<PartialPermutation> = gens.iter().map(|g| g.map.inverse()).collect();

    type State = (usize, PartialPermutation);
    let start: State = (base_region, PartialPermutation::identity(r));
    let mut states: Vec<State> = vec![start.clone()];
    let mut parent: Vec<Option<(usize, Step)>> = vec![None];
    let mut index: HashMap<State, usize> = HashMap::from([(start, 0)]);
    let mut queue = VecDeque::from([0usize]);
    while let Some(s) = queue.pop_front() {
        let (region, inj) = states[s].clone();
        for &step in by_region.get(&region).map(Vec::as_slice).unwrap_or(&[]) {
            let g = &gens[step.generator];
            let (m, next_region) = if step.inverted { (&inverses[g.id], g.from_region) } else { (&g.map, g.to_region) };
            let next = inj.then(m).expect("label counts agree along generators");
            if next.is_empty() {
                continue;
            }
            let st = (next_region, next);
            if index.contains_key(&st) {
                continue;
            }
            if states.len() >= max_states {
                return Err(RmsError::StateExplosion(max_states));
            }
            index.insert(st.clone(), states.len());
            states.push(st);
            parent.push(Some((s, step)));
            queue.push_back(states.len() - 1);
        }
    }
    let mut elements = Vec::new();
    for (k, (region, inj)) in states.iter().enumerate() {
        if *region != base_region {
            continue;
        }
        let mut word = Vec::new();
        let mut cur = k;
        while let Some((p, step)) = parent[cur] {
            word.push(step);
            cur = p;
        }
        word.reverse();
        elements.push(ClosureElement { map: inj.clone(), word });
    }
    elements.sort_by(|a, b| a.map.cmp(&b.map));
    Ok((elements, states.len()))
}

/// Real waypoints of a generator word, starting and ending at the base point.
pub fn word_path(gens: &[Correspondence], word: &[Step]) -> Vec<Vec<f64>> {
    let mut pts: Vec<Vec<f64>> = Vec::new();
    for s in word {
        let w = &gens[s.generator].witness;
        let seg: Vec<Vec<f64>> = if s.inverted { w.iter().rev().cloned().collect() } else { w.clone() };
        pts.extend(seg);
    }
    dedup_consecutive(&pts)
}

/// Re-tracks the base labels along the word's concatenated path and returns
/// the induced action, for checking a closure element independently.
pub fn replay_word(
    sys: &PolySystem,
    gens: &[Correspondence],
    word: &[Step],
    base_labels: &[RPoint],
    opts: &RmsOptions,
) -> Result<PartialPermutation, RmsError> {
    let path = word_path(gens, word);
    Ok(induced_map(sys, &path, base_labels, base_labels, opts, usize::MAX)?.0)
}

type TrackedPath = (PartialPermutation, Vec<(usize, TrackStatus)>);

/// Full pipeline on an existing region map.
pub fn real_monodromy(sys: &PolySystem, map: &RegionMap, base: &SolutionSet, opts: &RmsOptions) -> Result<RmsResult, RmsError> {
    let bp: Vec<f64> = base.param.iter().map(|z| z.re).collect();
    if base.param.max_imag() != 0.0 || bp != map.base_point {
        return Err(RmsError::BaseMismatch);
    }
    let labels = region_labels(sys, map, base, opts)?;
    let gens = generators(sys, map, &labels, opts)?;
    let r = base.r();
    let (elements, states_explored) = groupoid_closure(&gens, map.base_region, r, opts.max_states)?;
    let maps: Vec<PartialPermutation> = elements.iter().map(|e| e.map.clone()).collect();
    let structure = RealMonodromyStructure::build(&maps, r);
    Ok(RmsResult {
        r,
        base_region: map.base_region,
        region_labels: labels,
        transitive: (1..=r).map(|k| structure.is_k_transitive(k)).collect(),
        real_group: structure.real_monodromy_group(),
        assembly_mode_changes: structure.assembly_mode_changes(),
        partition: structure.partition(),
        structure,
        generators: gens,
        elements,
        states_explored,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corr(id: usize, from: usize, to: usize, map: PartialPermutation) -> Correspondence {
        Correspondence {
            id,
            from_region: from,
            to_region: to,
            map,
            source: GeneratorSource::User { index: id },
            duplicates: Vec::new(),
            witness: Vec::new(),
            dropped: Vec::new(),
        }
    }

    #[test]
    fn no_generators_gives_identity_only() {
        let (els, n) = groupoid_closure(&[], 0, 3, 100).unwrap();
        assert_eq!(n, 1);
        assert_eq!(els.len(), 1);
        assert_eq!(els[0].map, PartialPermutation::identity(3));
    }

    #[test]
    fn two_crossings_compose_to_a_partial_swap() {
        // Region 0 has 4 labels, region 1 has 2. Crossing one way keeps 1,2;
        // a second crossing identifies them the other way round.
        let c0 = corr(0, 0, 1, PartialPermutation::new(vec![Some(0), Some(1), None, None], 2).unwrap());
        let c1 = corr(1, 0, 1, PartialPermutation::new(vec![Some(1), Some(0), None, None], 2).unwrap());
        let (els, _) = groupoid_closure(&[c0, c1], 0, 4, 1000).unwrap();
        let maps: Vec<_> = els.iter().map(|e| e.map.clone()).collect();
        let swap = PartialPermutation::new(vec![Some(1), Some(0), None, None], 4).unwrap();
        assert!(maps.contains(&swap));
        assert!(maps.iter().all(|m| m.get(2).is_none_or(|j| j == 2) && m.get(3).is_none_or(|j| j == 3)));
        let el = els.iter().find(|e| e.map == swap).unwrap();
        assert_eq!(el.word.len(), 2);
        assert_ne!(el.word[0].inverted, el.word[1].inverted);
    }

    #[test]
    fn state_limit_is_enforced() {
        let g = corr(0, 0, 0, PartialPermutation::from_images(&[1, 2, 3, 0]).unwrap());
        assert_eq!(groupoid_closure(&[g], 0, 4, 2), Err(RmsError::StateExplosion(2)));
    }
}
