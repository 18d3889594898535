//! Flood fill, distances, routing, crossing sites and hole loops on a scanned grid.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap, HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use super::{CrossingSite, Grid, HoleKind, HoleLoop, Region, RegionError, RegionMap, SkippedHole};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapOptions {
    /// Boundary edges between consecutive crossing sites along a run.
    pub spacing: usize,
    /// Route nodes between kept waypoints, at most.
    pub route_stride: usize,
    /// Interior local minima of the smallest singular value below this are punctures.
    pub puncture_sv: f64,
    /// Largest singular cluster still treated as a puncture rather than a hole.
    pub max_puncture_cluster: usize,
    /// Singular nodes a crossing may step over.
    pub max_bridge: usize,
    /// Known singular points; the nearest node is removed from its region.
    pub declared_punctures: Vec<Vec<f64>>,
}

impl Default for MapOptions {
    fn default() -> Self {
        MapOptions {
            spacing: 5,
            route_stride: 10,
            puncture_sv: 1e-3,
            max_puncture_cluster: 4,
            max_bridge: 2,
            declared_punctures: Vec::new(),
        }
    }
}

/// Weight of the distance-to-boundary penalty in route costs.
const CLEARANCE_WEIGHT: f64 = 10.0;

/// Smallest ratio of the least to the largest neighbouring singular value for
/// a local minimum to count as an isolated point.
const ISOLATION_RATIO: f64 = 0.4;

struct Topo<'a> {
    g: &'a Grid,
    two_d: bool,
    region_of: Vec<Option<usize>>,
    /// Member nodes removed from routing (detected or declared punctures).
    blocked: Vec<bool>,
    dist: Vec<u32>,
}

impl<'a> Topo<'a> {
    fn neighbors4(&self, idx: usize) -> impl Iterator<Item = usize> + '_ {
        let (i, j) = self.g.ij(idx);
        let (n0, n1) = (self.g.n0() as isize, self.g.n1() as isize);
        [(-1isize, 0isize), (1, 0), (0, -1), (0, 1)].into_iter().filter_map(move |(di, dj)| {
            let (a, b) = (i as isize + di, j as isize + dj);
            (a >= 0 && a < n0 && b >= 0 && b < n1).then(|| self.g.idx(a as usize, b as usize))
        })
    }

    fn neighbors8(&self, idx: usize) -> impl Iterator<Item = usize> + '_ {
        let (i, j) = self.g.ij(idx);
        let (n0, n1) = (self.g.n0() as isize, self.g.n1() as isize);
        (-1isize..=1).flat_map(move |dj| (-1isize..=1).map(move |di| (di, dj))).filter_map(move |(di, dj)| {
            let (a, b) = (i as isize + di, j as isize + dj);
            ((di, dj) != (0, 0) && a >= 0 && a < n0 && b >= 0 && b < n1).then(|| self.g.idx(a as usize, b as usize))
        })
    }

    fn on_window_edge(&self, idx: usize) -> bool {
        let (i, j) = self.g.ij(idx);
        i == 0 || i + 1 == self.g.n0() || (self.two_d && (j == 0 || j + 1 == self.g.n1()))
    }

    fn routable(&self, idx: usize, region: usize) -> bool {
        self.region_of[idx] == Some(region) && !self.blocked[idx]
    }

    /// 8-neighbour moves inside `region`; a diagonal move also needs both
    /// orthogonal corners, so no move cuts the corner of a foreign node.
    fn moves(&self, idx: usize, region: usize) -> Vec<(usize, f64)> {
        let (i, j) = self.g.ij(idx);
        let mut out = Vec::with_capacity(8);
        for v in self.neighbors8(idx) {
            if !self.routable(v, region) {
                continue;
            }
            let (a, b) = self.g.ij(v);
            if a != i && b != j {
                if !self.routable(self.g.idx(a, j), region) || !self.routable(self.g.idx(i, b), region) {
                    continue;
                }
                out.push((v, std::f64::consts::SQRT_2));
            } else {
                out.push((v, 1.0));
            }
        }
        out
    }

    fn step_cost(&self, v: usize, len: f64) -> f64 {
        len * (1.0 + CLEARANCE_WEIGHT / self.dist[v].max(1) as f64)
    }

    /// Shortest-path tree from `src` inside `region`.
    fn dijkstra(&self, src: usize, region: usize) -> Vec<Option<usize>> {
        let n = self.g.len();
        let mut best = vec![f64::INFINITY; n];
        let mut parent = vec![None; n];
        let mut heap = BinaryHeap::new();
        best[src] = 0.0;
        parent[src] = Some(src);
        heap.push(Reverse((0u64, src)));
        while let Some(Reverse((cbits, u))) = heap.pop() {
            let c = f64::from_bits(cbits);
            if c > best[u] {
                continue;
            }
            for (v, len) in self.moves(u, region) {
                let nc = c + self.step_cost(v, len);
                if nc < best[v] {
                    best[v] = nc;
                    parent[v] = Some(u);
                    heap.push(Reverse((nc.to_bits(), v)));
                }
            }
        }
        parent
    }

    /// True if the straight segment between two nodes stays within routable
    /// cells of `region` (every sample's surrounding nodes are routable).
    fn line_of_sight(&self, u: usize, v: usize, region: usize) -> bool {
        let (ui, uj) = self.g.ij(u);
        let (vi, vj) = self.g.ij(v);
        let (di, dj) = (vi as f64 - ui as f64, vj as f64 - uj as f64);
        let samples = (di.abs().max(dj.abs()) * 4.0).ceil() as usize + 1;
        for s in 0..=samples {
            let t = s as f64 / samples as f64;
            let (fi, fj) = (ui as f64 + t * di, uj as f64 + t * dj);
            for a in [fi.floor(), fi.ceil()] {
                for b in [fj.floor(), fj.ceil()] {
                    if !self.routable(self.g.idx(a as usize, b as usize), region) {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// Keeps every `stride`-th node, or fewer where line of sight requires.
    /// Every skipped node must be visible from the kept one before it, so the
    /// shortcut cannot jump across an excluded node.
    fn simplify(&self, nodes: &[usize], region: usize, stride: usize) -> Vec<usize> {
        let mut out = vec![nodes[0]];
        let mut a = 0;
        let last = nodes.len() - 1;
        while a < last {
            let far = (a + stride.max(1)).min(last);
            let mut b = a + 1;
            while b < far && self.line_of_sight(nodes[a], nodes[b + 1], region) {
                b += 1;
            }
            out.push(nodes[b]);
            a = b;
        }
        out
    }
}

fn path_from_tree(parent: &[Option<usize>], src: usize, dst: usize) -> Option<Vec<usize>> {
    let mut out = vec![dst];
    let mut cur = dst;
    while cur != src {
        cur = parent[cur]?;
        out.push(cur);
    }
    out.reverse();
    Some(out)
}

fn flood_fill(g: &Grid, two_d: bool) -> (Vec<Option<usize>>, Vec<(u32, usize)>) {
    let n = g.len();
    let mut region_of = vec![None; n];
    let mut regions = Vec::new();
    let topo = Topo { g, two_d, region_of: vec![None; n], blocked: vec![false; n], dist: vec![0; n] };
    for start in 0..n {
        let Some(c) = g.counts[start] else { continue };
        if region_of[start].is_some() {
            continue;
        }
        let id = regions.len();
        let mut size = 0;
        region_of[start] = Some(id);
        let mut queue = VecDeque::from([start]);
        while let Some(u) = queue.pop_front() {
            size += 1;
            for v in topo.neighbors4(u) {
                if region_of[v].is_none() && g.counts[v] == Some(c) {
                    region_of[v] = Some(id);
                    queue.push_back(v);
                }
            }
        }
        regions.push((c, size));
    }
    merge_diagonal_slivers(g, two_d, region_of, regions)
}

/// Joins same-count components that touch only diagonally across two nodes of
/// one other component, as a sliver thinner than a cell does. Diagonal
/// contacts across two different components (a crossing) stay separate.
fn merge_diagonal_slivers(
    g: &Grid,
    two_d: bool,
    region_of: Vec<Option<usize>>,
    regions: Vec<(u32, usize)>,
) -> (Vec<Option<usize>>, Vec<(u32, usize)>) {
    if !two_d {
        return (region_of, regions);
    }
    let mut parent: Vec<usize> = (0..regions.len()).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for j in 0..g.n1() - 1 {
        for i in 0..g.n0() - 1 {
            let [a, b, c, d] = [g.idx(i, j), g.idx(i + 1, j), g.idx(i, j + 1), g.idx(i + 1, j + 1)].map(|u| region_of[u]);
            for (u, w, x, y) in [(a, d, b, c), (b, c, a, d)] {
                let (Some(u), Some(w), Some(x), Some(y)) = (u, w, x, y) else { continue };
                if u != w && regions[u].0 == regions[w].0 && x == y {
                    let (ru, rw) = (find(&mut parent, u), find(&mut parent, w));
                    parent[ru.max(rw)] = ru.min(rw);
                }
            }
        }
    }
    let mut new_id = vec![usize::MAX; regions.len()];
    let mut merged: Vec<(u32, usize)> = Vec::new();
    for r in 0..regions.len() {
        let root = find(&mut parent, r);
        if new_id[root] == usize::MAX {
            new_id[root] = merged.len();
            merged.push((regions[r].0, 0));
        }
        new_id[r] = new_id[root];
        merged[new_id[r]].1 += regions[r].1;
    }
    (region_of.into_iter().map(|r| r.map(|r| new_id[r])).collect(), merged)
}

/// BFS distance to the region boundary (1 on boundary nodes); blocked nodes
/// and window edges count as boundary.
fn boundary_distance(t: &Topo) -> Vec<u32> {
    let n = t.g.len();
    let mut dist = vec![0u32; n];
    let mut queue = VecDeque::new();
    for u in 0..n {
        let Some(r) = t.region_of[u] else { continue };
        if t.blocked[u] {
            continue;
        }
        let boundary = t.on_window_edge(u) || t.neighbors4(u).any(|v| !t.routable(v, r));
        if boundary {
            dist[u] = 1;
            queue.push_back(u);
        }
    }
    while let Some(u) = queue.pop_front() {
        let r = t.region_of[u].expect("member");
        for v in t.neighbors4(u).collect::<Vec<_>>() {
            if dist[v] == 0 && t.routable(v, r) {
                dist[v] = dist[u] + 1;
                queue.push_back(v);
            }
        }
    }
    dist
}

struct RawHole {
    region: usize,
    nodes: Vec<usize>,
    kind: HoleKind,
}

/// Bounded 8-connected components of the complement of each region.
fn find_holes(t: &Topo, nregions: usize, opts: &MapOptions) -> Vec<RawHole> {
    let g = t.g;
    let mut out = Vec::new();
    if !t.two_d {
        return out;
    }
    let mut bbox = vec![(usize::MAX, usize::MAX, 0usize, 0usize); nregions];
    for u in 0..g.len() {
        if let Some(r) = t.region_of[u] {
            let (i, j) = g.ij(u);
            let b = &mut bbox[r];
            *b = (b.0.min(i), b.1.min(j), b.2.max(i), b.3.max(j));
        }
    }
    for (r, &(i0, j0, i1, j1)) in bbox.iter().enumerate() {
        if i0 == usize::MAX {
            continue;
        }
        let inside = |u: usize| {
            let (i, j) = g.ij(u);
            i >= i0 && i <= i1 && j >= j0 && j <= j1
        };
        let mut seen: HashMap<usize, ()> = HashMap::new();
        for j in j0..=j1 {
            for i in i0..=i1 {
                let s = g.idx(i, j);
                if t.routable(s, r) || seen.contains_key(&s) {
                    continue;
                }
                let mut comp = Vec::new();
                let mut bounded = true;
                seen.insert(s, ());
                let mut queue = VecDeque::from([s]);
                while let Some(u) = queue.pop_front() {
                    comp.push(u);
                    let (ui, uj) = g.ij(u);
                    if t.on_window_edge(u) || ui == i0 || ui == i1 || uj == j0 || uj == j1 {
                        bounded = false;
                    }
                    for v in t.neighbors8(u) {
                        if inside(v) && !t.routable(v, r) && !seen.contains_key(&v) {
                            seen.insert(v, ());
                            queue.push_back(v);
                        }
                    }
                }
                if bounded {
                    comp.sort_unstable();
                    let pointlike = comp.len() <= opts.max_puncture_cluster && comp.iter().all(|&u| g.counts[u].is_none() || t.blocked[u]);
                    out.push(RawHole { region: r, nodes: comp, kind: if pointlike { HoleKind::Puncture } else { HoleKind::Hole } });
                }
            }
        }
    }
    out
}

/// Closed route from `anchor` winding once around the hole node `h`, found by
/// Dijkstra on (node, winding) with winding counted by crossings of the ray
/// from `h` in the `+i` direction at height `j_h + 1/2`.
fn hole_cycle(t: &Topo, region: usize, anchor: usize, h: usize) -> Option<Vec<usize>> {
    let g = t.g;
    let (hi, hj) = g.ij(h);
    let n = g.len();
    let state = |u: usize, k: i32| u * 3 + (k + 1) as usize;
    let mut best = vec![f64::INFINITY; 3 * n];
    let mut parent = vec![usize::MAX; 3 * n];
    let mut heap = BinaryHeap::new();
    let s0 = state(anchor, 0);
    best[s0] = 0.0;
    heap.push(Reverse((0u64, s0)));
    let goal = state(anchor, 1);
    while let Some(Reverse((cbits, s))) = heap.pop() {
        let c = f64::from_bits(cbits);
        if c > best[s] {
            continue;
        }
        if s == goal {
            break;
        }
        let (u, k) = (s / 3, (s % 3) as i32 - 1);
        let (ui, uj) = g.ij(u);
        for (v, len) in t.moves(u, region) {
            let (vi, vj) = g.ij(v);
            let mut k2 = k;
            if uj.min(vj) == hj && uj.max(vj) == hj + 1 && ui + vi > 2 * hi {
                k2 += if vj > uj { 1 } else { -1 };
            }
            if !(-1..=1).contains(&k2) {
                continue;
            }
            let s2 = state(v, k2);
            let nc = c + t.step_cost(v, len);
            if nc < best[s2] {
                best[s2] = nc;
                parent[s2] = s;
                heap.push(Reverse((nc.to_bits(), s2)));
            }
        }
    }
    if !best[goal].is_finite() {
        return None;
    }
    let mut out = vec![anchor];
    let mut s = goal;
    while s != s0 {
        s = parent[s];
        out.push(s / 3);
    }
    out.reverse();
    Some(out)
}

struct Edge {
    u: usize,
    v: usize,
    bridged: usize,
}

fn edge_neighborhood_regions(t: &Topo, e: &Edge, dir: (usize, usize)) -> BTreeSet<usize> {
    let g = t.g;
    let mut set = BTreeSet::new();
    let (ui, uj) = g.ij(e.u);
    let mut nodes = vec![e.u, e.v];
    for k in 1..=e.bridged {
        nodes.push(g.idx(ui + k * dir.0, uj + k * dir.1));
    }
    for &w in &nodes {
        if let Some(r) = t.region_of[w] {
            set.insert(r);
        }
        for x in t.neighbors8(w) {
            if let Some(r) = t.region_of[x] {
                set.insert(r);
            }
        }
    }
    set
}

fn boundary_edges(t: &Topo, counts: &[u32], opts: &MapOptions) -> (Vec<Edge>, BTreeSet<(usize, usize)>) {
    let g = t.g;
    let mut edges = Vec::new();
    let mut adjacency = BTreeSet::new();
    let dirs: &[(usize, usize)] = if t.two_d { &[(1, 0), (0, 1)] } else { &[(1, 0)] };
    for u in 0..g.len() {
        let Some(a) = t.region_of[u] else { continue };
        let (i, j) = g.ij(u);
        for &dir in dirs {
            let mut k = 1;
            let mut found = None;
            while k <= opts.max_bridge + 1 {
                let (a2, b2) = (i + k * dir.0, j + k * dir.1);
                if a2 >= g.n0() || b2 >= g.n1() {
                    break;
                }
                let v = g.idx(a2, b2);
                match t.region_of[v] {
                    Some(b) if b != a => {
                        found = Some((v, b, k - 1));
                        break;
                    }
                    Some(_) => break,
                    None => k += 1,
                }
            }
            let Some((v, b, bridged)) = found else { continue };
            adjacency.insert((a.min(b), a.max(b)));
            if counts[a] == 0 || counts[b] == 0 || t.blocked[u] || t.blocked[v] {
                continue;
            }
            let e = Edge { u, v, bridged };
            if edge_neighborhood_regions(t, &e, dir).len() >= 3 {
                continue;
            }
            edges.push(e);
        }
    }
    (edges, adjacency)
}

/// Groups edges of one region pair into runs of touching edges and picks every
/// `spacing`-th edge along each run (at least one per run).
fn pick_sites(t: &Topo, edges: &[Edge], spacing: usize) -> Vec<usize> {
    let g = t.g;
    let key = |e: &Edge| {
        let (a, b) = (t.region_of[e.u].unwrap(), t.region_of[e.v].unwrap());
        (a.min(b), a.max(b))
    };
    let mid = |e: &Edge| {
        let (ui, uj) = g.ij(e.u);
        let (vi, vj) = g.ij(e.v);
        ((ui + vi) as i64, (uj + vj) as i64)
    };
    let mut by_pair: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
    for (k, e) in edges.iter().enumerate() {
        by_pair.entry(key(e)).or_default().push(k);
    }
    let mut picked = Vec::new();
    for ids in by_pair.values() {
        let mut at: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
        for &k in ids {
            at.entry(mid(&edges[k])).or_default().push(k);
        }
        let near = |k: usize| -> Vec<usize> {
            let (x, y) = mid(&edges[k]);
            let mut out = Vec::new();
            for dy in -2..=2 {
                for dx in -2..=2 {
                    if let Some(v) = at.get(&(x + dx, y + dy)) {
                        out.extend(v.iter().copied().filter(|&o| o != k));
                    }
                }
            }
            out.sort_unstable();
            out
        };
        let mut seen: BTreeSet<usize> = BTreeSet::new();
        for &s in ids {
            if seen.contains(&s) {
                continue;
            }
            // Collect the run, then order it by BFS from an end (fewest neighbours).
            let mut run = Vec::new();
            let mut queue = VecDeque::from([s]);
            seen.insert(s);
            while let Some(k) = queue.pop_front() {
                run.push(k);
                for o in near(k) {
                    if seen.insert(o) {
                        queue.push_back(o);
                    }
                }
            }
            run.sort_unstable();
            let start = *run.iter().min_by_key(|&&k| (near(k).len(), k)).expect("nonempty run");
            let mut order = Vec::with_capacity(run.len());
            let mut visited = BTreeSet::from([start]);
            let mut queue = VecDeque::from([start]);
            while let Some(k) = queue.pop_front() {
                order.push(k);
                for o in near(k) {
                    if visited.insert(o) {
                        queue.push_back(o);
                    }
                }
            }
            let sp = spacing.max(1);
            let mut chosen: Vec<usize> = order.iter().copied().skip(sp / 2).step_by(sp).collect();
            if chosen.is_empty() {
                chosen.push(order[order.len() / 2]);
            }
            picked.extend(chosen);
        }
    }
    picked.sort_unstable();
    picked
}

/// Builds regions, marked points, routes, crossing sites and hole loops from
/// a scanned grid. The region containing the node nearest `base_point` is the
/// base region, and its marked point is `base_point` itself.
pub fn build_region_map(grid: &Grid, base_point: &[f64], opts: &MapOptions) -> Result<RegionMap, RegionError> {
    let g = grid;
    let two_d = g.window.dim() == 2;
    let n = g.len();
    let (region_of, raw) = flood_fill(g, two_d);
    let base_node = g.nearest_node(base_point);
    let base_region = region_of[base_node].ok_or(RegionError::BaseSingular)?;
    let counts: Vec<u32> = raw.iter().map(|r| r.0).collect();

    let mut t = Topo { g, two_d, region_of, blocked: vec![false; n], dist: vec![0; n] };

    // Point-like singularities inside regions: declared points and strict
    // interior local minima of the smallest singular value.
    if two_d {
        for p in &opts.declared_punctures {
            if p.len() == 2 && g.window.contains(p) {
                let u = g.nearest_node(p);
                if t.region_of[u].is_some() && !t.on_window_edge(u) && u != base_node {
                    t.blocked[u] = true;
                }
            }
        }
        for u in 0..n {
            let (Some(r), Some(s)) = (t.region_of[u], g.min_sv[u]) else { continue };
            if s >= opts.puncture_sv || t.on_window_edge(u) || u == base_node {
                continue;
            }
            let strict_min = t.neighbors8(u).all(|v| t.region_of[v] == Some(r) && g.min_sv[v].is_some_and(|m| m > s));
            // A singular curve through the cell leaves some neighbours much
            // closer to it than others; an isolated point does not.
            let ring: Vec<f64> = t.neighbors8(u).filter_map(|v| g.min_sv[v]).collect();
            let lo = ring.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = ring.iter().copied().fold(0.0, f64::max);
            if strict_min && lo >= ISOLATION_RATIO * hi {
                t.blocked[u] = true;
            }
        }
    }
    t.dist = boundary_distance(&t);

    let mut regions: Vec<Region> = raw
        .iter()
        .enumerate()
        .map(|(id, &(count, cells))| Region {
            id,
            count,
            cells,
            marked_node: usize::MAX,
            marked_point: Vec::new(),
            intermediate_points: Vec::new(),
            holes: Vec::new(),
            punctures: Vec::new(),
            touches_window: false,
        })
        .collect();
    for u in 0..n {
        let Some(r) = t.region_of[u] else { continue };
        if t.on_window_edge(u) {
            regions[r].touches_window = true;
        }
        if t.blocked[u] {
            continue;
        }
        let m = regions[r].marked_node;
        if m == usize::MAX || t.dist[u] > t.dist[m] {
            regions[r].marked_node = u;
        }
    }
    regions[base_region].marked_node = base_node;
    for r in regions.iter_mut() {
        r.marked_point = g.point(r.marked_node);
    }
    regions[base_region].marked_point = base_point.to_vec();

    let trees: Vec<Vec<Option<usize>>> = regions.iter().map(|r| t.dijkstra(r.marked_node, r.id)).collect();
    let mut waypoints: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); regions.len()];

    // Polyline in parameter space for a node path that starts at the marked node.
    let to_points = |region: &Region, nodes: &[usize]| -> Vec<Vec<f64>> {
        let mut pts: Vec<Vec<f64>> = nodes.iter().map(|&u| g.point(u)).collect();
        if pts[0] != region.marked_point {
            pts.insert(0, region.marked_point.clone());
        }
        pts
    };

    // Holes and punctures.
    let mut skipped = Vec::new();
    for h in find_holes(&t, regions.len(), opts) {
        let r = h.region;
        if regions[r].count == 0 {
            continue;
        }
        let center = {
            let pts: Vec<Vec<f64>> = h.nodes.iter().map(|&u| g.point(u)).collect();
            let k = pts.len() as f64;
            (0..pts[0].len()).map(|c| pts.iter().map(|p| p[c]).sum::<f64>() / k).collect::<Vec<f64>>()
        };
        match hole_cycle(&t, r, regions[r].marked_node, h.nodes[0]) {
            Some(cycle) => {
                let simple = t.simplify(&cycle, r, opts.route_stride);
                waypoints[r].extend(simple[1..simple.len() - 1].iter().copied());
                let mut path = to_points(&regions[r], &simple);
                if path.last() != Some(&regions[r].marked_point) {
                    path.push(regions[r].marked_point.clone());
                }
                if h.kind == HoleKind::Puncture {
                    regions[r].punctures.push(center.clone());
                }
                regions[r].holes.push(HoleLoop { kind: h.kind, center, nodes: h.nodes.len(), path });
            }
            None => skipped.push(SkippedHole { region: r, center, reason: "no encircling route inside the region".into() }),
        }
    }

    // Crossing sites.
    let (edges, adjacency) = boundary_edges(&t, &counts, opts);
    let mut sites = Vec::new();
    for k in pick_sites(&t, &edges, opts.spacing) {
        let e = &edges[k];
        let (ra, rb) = (t.region_of[e.u].unwrap(), t.region_of[e.v].unwrap());
        let (node_a, node_b, a, b) = if ra < rb { (e.u, e.v, ra, rb) } else { (e.v, e.u, rb, ra) };
        let (Some(pa), Some(pb)) =
            (path_from_tree(&trees[a], regions[a].marked_node, node_a), path_from_tree(&trees[b], regions[b].marked_node, node_b))
        else {
            continue;
        };
        let sa = t.simplify(&pa, a, opts.route_stride);
        let sb = t.simplify(&pb, b, opts.route_stride);
        waypoints[a].extend(sa.get(1..sa.len().saturating_sub(1)).unwrap_or(&[]).iter().copied());
        waypoints[b].extend(sb.get(1..sb.len().saturating_sub(1)).unwrap_or(&[]).iter().copied());
        let route_a = to_points(&regions[a], &sa);
        let mut route_b = to_points(&regions[b], &sb);
        route_b.reverse();
        sites.push(CrossingSite {
            id: sites.len(),
            a,
            b,
            node_a,
            node_b,
            approach_a: g.point(node_a),
            approach_b: g.point(node_b),
            bridged: e.bridged,
            route_a,
            route_b,
        });
    }

    for (r, w) in regions.iter_mut().zip(&waypoints) {
        r.intermediate_points = w.iter().filter(|&&u| u != r.marked_node).map(|&u| g.point(u)).collect();
    }

    Ok(RegionMap {
        grid: g.clone(),
        region_of: t.region_of,
        regions,
        sites,
        adjacency: adjacency.into_iter().collect(),
        base_region,
        base_point: base_point.to_vec(),
        skipped_holes: skipped,
    })
}
