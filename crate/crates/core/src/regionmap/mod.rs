//! Decomposition of a rectangular window of real parameters into connected
//! regions with a constant number of real solutions.
//!
//! Every grid node gets its real-solution count by transporting all complex
//! solutions from the base point with a complex detour and classifying the
//! endpoints. Regions are 4-connected components of equal count, joined across
//! diagonal contacts where a sliver thinner than a cell would otherwise split
//! them. On top of the
//! regions this module computes marked points, in-region routes, boundary
//! crossing sites, and loops around holes and punctures; those are the
//! geometric inputs of the real monodromy structure.

mod svg;
mod topology;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::polysys::{CPoint, PolySystem};
use crate::solver::{SolutionSet, BORDERLINE, REAL_TOL};
use crate::tracker::{residual_and_min_sv, track_all, ParamPath, TrackOptions};

pub use svg::render_svg;
pub use topology::{build_region_map, MapOptions};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RegionError {
    #[error("region maps need one or two parameters, the system has {0}")]
    UnsupportedDimension(usize),
    #[error("base parameter must be real")]
    BaseNotReal,
    #[error("base parameter lies outside the window")]
    BaseOutsideWindow,
    #[error("bad window or resolution: {0}")]
    BadWindow(String),
    #[error("base parameter sits on a singular grid node")]
    BaseSingular,
}

/// Axis-aligned box `[lo_k, hi_k]` in parameter space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Window {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self, RegionError> {
        if lo.len() != hi.len() || lo.is_empty() || lo.len() > 2 {
            return Err(RegionError::BadWindow("need one or two matching bounds".into()));
        }
        if lo.iter().zip(&hi).any(|(a, b)| !(a < b)) {
            return Err(RegionError::BadWindow("every lower bound must be below its upper bound".into()));
        }
        Ok(Window { lo, hi })
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.len() == self.dim() && p.iter().zip(self.lo.iter().zip(&self.hi)).all(|(v, (a, b))| *a <= *v && *v <= *b)
    }
}

/// Real-solution counts on a regular grid. Node `(i, j)` is stored at
/// `i + n0 * j`; for one parameter `n1 == 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub window: Window,
    pub resolution: Vec<usize>,
    /// `None` marks a singular node.
    pub counts: Vec<Option<u32>>,
    /// Smallest singular value of `J_x` over the real solutions at each node
    /// (`None` when there are no real solutions or the node is singular).
    pub min_sv: Vec<Option<f64>>,
    pub seed: u64,
}

impl Grid {
    pub fn n0(&self) -> usize {
        self.resolution[0]
    }

    pub fn n1(&self) -> usize {
        self.resolution.get(1).copied().unwrap_or(1)
    }

    pub fn len(&self) -> usize {
        self.n0() * self.n1()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn idx(&self, i: usize, j: usize) -> usize {
        i + self.n0() * j
    }

    pub fn ij(&self, idx: usize) -> (usize, usize) {
        (idx % self.n0(), idx / self.n0())
    }

    /// Parameter point at fractional grid coordinates.
    pub fn point_at(&self, fi: f64, fj: f64) -> Vec<f64> {
        let w = &self.window;
        let mut p = vec![w.lo[0] + (w.hi[0] - w.lo[0]) * fi / (self.n0() - 1) as f64];
        if w.dim() == 2 {
            p.push(w.lo[1] + (w.hi[1] - w.lo[1]) * fj / (self.n1() - 1) as f64);
        }
        p
    }

    pub fn point(&self, idx: usize) -> Vec<f64> {
        let (i, j) = self.ij(idx);
        self.point_at(i as f64, j as f64)
    }

    /// Fractional grid coordinates of a parameter point.
    pub fn grid_coords(&self, p: &[f64]) -> (f64, f64) {
        let w = &self.window;
        let fi = (p[0] - w.lo[0]) / (w.hi[0] - w.lo[0]) * (self.n0() - 1) as f64;
        let fj = if w.dim() == 2 { (p[1] - w.lo[1]) / (w.hi[1] - w.lo[1]) * (self.n1() - 1) as f64 } else { 0.0 };
        (fi, fj)
    }

    pub fn nearest_node(&self, p: &[f64]) -> usize {
        let (fi, fj) = self.grid_coords(p);
        let i = (fi.round().max(0.0) as usize).min(self.n0() - 1);
        let j = (fj.round().max(0.0) as usize).min(self.n1() - 1);
        self.idx(i, j)
    }

    /// Multiset of non-singular counts, as `(count, nodes)` pairs.
    pub fn histogram(&self) -> Vec<(u32, usize)> {
        let mut h = std::collections::BTreeMap::new();
        for c in self.counts.iter().flatten() {
            *h.entry(*c).or_insert(0) += 1;
        }
        h.into_iter().collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanOptions {
    pub seed: u64,
    /// Largest imaginary part of a solution counted as real.
    pub real_tol: f64,
    /// Smallest singular value below which a path counts as singular.
    pub singular_tol: f64,
}

impl Default for ScanOptions {
    fn default() -> Self {
        ScanOptions { seed: 0, real_tol: REAL_TOL, singular_tol: TrackOptions::default().singular_svd_tol }
    }
}

/// Largest step (fraction of a segment) for successive scan attempts at a node.
const SCAN_ATTEMPTS: [f64; 3] = [0.5, 0.05, 0.01];

/// Count and conditioning at one node, or `None` if it must be marked singular.
fn scan_node(sys: &PolySystem, base: &SolutionSet, q: &[f64], seed: u64, max_step: f64, scan: &ScanOptions) -> Option<(u32, Option<f64>)> {
    let target = CPoint::from_real(q);
    let base_real: Vec<f64> = base.param.iter().map(|z| z.re).collect();
    let opts = TrackOptions { detour_seed: seed, max_step, singular_svd_tol: scan.singular_tol, ..TrackOptions::complex() };
    let ends: Vec<CPoint> = if base_real.as_slice() == q {
        base.all_complex.clone()
    } else {
        let path = ParamPath::new(vec![base.param.clone(), target.clone()], vec![true]).ok()?;
        let mut ends = Vec::with_capacity(base.d());
        for out in track_all(sys, &path, &base.all_complex, &opts) {
            ends.push(out.ok()?.endpoint?);
        }
        ends
    };
    for a in 0..ends.len() {
        for b in a + 1..ends.len() {
            if ends[a].dist(&ends[b]) < 1e-6 {
                return None;
            }
        }
    }
    let mut count = 0u32;
    let mut min_sv: Option<f64> = None;
    for x in &ends {
        let imag = x.max_imag();
        if (BORDERLINE.0..=BORDERLINE.1).contains(&imag) {
            return None;
        }
        if imag < scan.real_tol {
            count += 1;
            let xr: Vec<f64> = x.iter().map(|z| z.re).collect();
            let (_, sv) = residual_and_min_sv(sys, &xr, q);
            min_sv = Some(min_sv.map_or(sv, |m: f64| m.min(sv)));
        }
    }
    Some((count, min_sv))
}

/// Scans the real-solution count over a grid on `window`.
///
/// Each node is tried with fresh detour seeds and shrinking step caps before
/// being marked singular.
pub fn grid_scan(
    sys: &PolySystem,
    base: &SolutionSet,
    window: &Window,
    resolution: &[usize],
    scan: &ScanOptions,
) -> Result<Grid, RegionError> {
    let seed = scan.seed;
    let dim = sys.num_params();
    if dim == 0 || dim > 2 {
        return Err(RegionError::UnsupportedDimension(dim));
    }
    if window.dim() != dim || resolution.len() != dim || resolution.iter().any(|&n| n < 2) {
        return Err(RegionError::BadWindow(format!("need {dim} axes with at least 2 nodes each")));
    }
    if base.param.max_imag() != 0.0 {
        return Err(RegionError::BaseNotReal);
    }
    let b: Vec<f64> = base.param.iter().map(|z| z.re).collect();
    if !window.contains(&b) {
        return Err(RegionError::BaseOutsideWindow);
    }
    let mut grid = Grid { window: window.clone(), resolution: resolution.to_vec(), counts: Vec::new(), min_sv: Vec::new(), seed };
    let nodes: Vec<(Option<u32>, Option<f64>)> = (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            let q = grid.point(idx);
            let s0 = seed ^ (idx as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
            SCAN_ATTEMPTS
                .iter()
                .enumerate()
                .find_map(|(k, &max_step)| scan_node(sys, base, &q, s0.wrapping_add(k as u64), max_step, scan))
                .map_or((None, None), |(c, sv)| (Some(c), sv))
        })
        .collect();
    grid.counts = nodes.iter().map(|n| n.0).collect();
    grid.min_sv = nodes.iter().map(|n| n.1).collect();
    Ok(grid)
}

/// Whether a loop encircles a bounded complement component or a point-like
/// singularity inside the region.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HoleKind {
    Hole,
    Puncture,
}

/// Closed polyline starting and ending at the region's marked point and
/// winding once around `center`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HoleLoop {
    pub kind: HoleKind,
    pub center: Vec<f64>,
    /// Grid nodes making up the hole (one node for a declared or detected puncture).
    pub nodes: usize,
    pub path: Vec<Vec<f64>>,
}

/// Hole or puncture for which no loop could be built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedHole {
    pub region: usize,
    pub center: Vec<f64>,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub id: usize,
    pub count: u32,
    pub cells: usize,
    pub marked_node: usize,
    pub marked_point: Vec<f64>,
    /// Waypoints used by this region's routes, other than their ends.
    pub intermediate_points: Vec<Vec<f64>>,
    pub holes: Vec<HoleLoop>,
    /// Interior points where the Jacobian nearly drops rank.
    pub punctures: Vec<Vec<f64>>,
    pub touches_window: bool,
}

/// A place to cross from region `a` to region `b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossingSite {
    pub id: usize,
    pub a: usize,
    pub b: usize,
    /// Grid nodes on either side (`node_a` in `a`, `node_b` in `b`).
    pub node_a: usize,
    pub node_b: usize,
    pub approach_a: Vec<f64>,
    pub approach_b: Vec<f64>,
    /// Singular nodes stepped over between the two approach points.
    pub bridged: usize,
    /// Marked point of `a` to `approach_a`.
    pub route_a: Vec<Vec<f64>>,
    /// `approach_b` to the marked point of `b`.
    pub route_b: Vec<Vec<f64>>,
}

impl CrossingSite {
    /// Full real path: marked point of `a`, across, marked point of `b`.
    pub fn full_path(&self) -> Vec<Vec<f64>> {
        let mut p = self.route_a.clone();
        p.extend(self.route_b.iter().cloned());
        p
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionMap {
    pub grid: Grid,
    /// Region id of every node (`None` for singular nodes).
    pub region_of: Vec<Option<usize>>,
    pub regions: Vec<Region>,
    pub sites: Vec<CrossingSite>,
    /// Unordered adjacent region pairs `(a, b)` with `a < b`.
    pub adjacency: Vec<(usize, usize)>,
    pub base_region: usize,
    pub base_point: Vec<f64>,
    pub skipped_holes: Vec<SkippedHole>,
}

impl RegionMap {
    /// Census: `(count, number of regions)`.
    pub fn census(&self) -> Vec<(u32, usize)> {
        let mut h = std::collections::BTreeMap::new();
        for r in &self.regions {
            *h.entry(r.count).or_insert(0) += 1;
        }
        h.into_iter().collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polysys::{builtin, BuiltinName};
    use crate::solver::solve_labeled;

    #[test]
    fn univariate_scan() {
        let sys = builtin(BuiltinName::Univariate);
        let base = solve_labeled(&sys, &CPoint::from_real(&[2.0]), 0, None, None).unwrap();
        let w = Window::new(vec![-3.0], vec![3.0]).unwrap();
        let g = grid_scan(&sys, &base, &w, &[61], &ScanOptions { seed: 1, ..Default::default() }).unwrap();
        for idx in 0..g.len() {
            let p = g.point(idx)[0];
            let want = if p.abs() > 1.0 + 1e-9 {
                2
            } else if p.abs() < 1.0 - 1e-9 {
                0
            } else {
                continue;
            };
            assert_eq!(g.counts[idx], Some(want), "p = {p}");
        }
    }

    #[test]
    fn window_validation() {
        assert!(Window::new(vec![0.0], vec![0.0]).is_err());
        assert!(Window::new(vec![0.0, 1.0], vec![1.0]).is_err());
        let sys = builtin(BuiltinName::Ex21);
        let base = solve_labeled(&sys, &CPoint::from_real(&[1.0, 0.0]), 0, None, None).unwrap();
        let w = Window::new(vec![-0.5, -0.5], vec![0.5, 0.5]).unwrap();
        assert_eq!(grid_scan(&sys, &base, &w, &[5, 5], &ScanOptions::default()), Err(RegionError::BaseOutsideWindow));
    }

    #[test]
    fn grid_geometry() {
        let g = Grid {
            window: Window::new(vec![-1.0, 0.0], vec![1.0, 4.0]).unwrap(),
            resolution: vec![5, 3],
            counts: vec![Some(0); 15],
            min_sv: vec![None; 15],
            seed: 0,
        };
        assert_eq!(g.point(g.idx(4, 2)), vec![1.0, 4.0]);
        assert_eq!(g.nearest_node(&[0.1, 1.9]), g.idx(2, 1));
        assert_eq!(g.ij(7), (2, 1));
    }
}
