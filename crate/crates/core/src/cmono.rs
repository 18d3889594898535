//! Complex monodromy: permutations of the solutions at a base point induced by
//! loops in complex parameter space, and the group they generate.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::polysys::{CPoint, PolySystem};
use crate::solver::SolutionSet;
use crate::tracker::{match_endpoint, track_all, ParamPath, TrackOptions};

/// Number of waypoints on the circle part of [`circle_loop`].
pub const CIRCLE_WAYPOINTS: usize = 32;
/// Endpoint matching radius.
pub const MATCH_RADIUS: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CmonoError {
    #[error("radius must be positive, got {0}")]
    BadRadius(f64),
    #[error("base point lies inside the circle")]
    BaseInsideCircle,
    #[error("images do not form a bijection on 1..{0}")]
    NotABijection(usize),
    #[error("loop does not start and end at the base point")]
    NotALoop,
    #[error("loop passes too close to the discriminant: {0}")]
    LoopThroughDiscriminant(String),
}

/// A bijection of `{0..D-1}`; displayed and serialized 1-based.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Permutation {
    images: Vec<usize>,
}

impl TryFrom<Vec<usize>> for Permutation {
    type Error = CmonoError;
    fn try_from(one_based: Vec<usize>) -> Result<Self, CmonoError> {
        let d = one_based.len();
        if one_based.contains(&0) {
            return Err(CmonoError::NotABijection(d));
        }
        Permutation::new(one_based.into_iter().map(|v| v - 1).collect())
    }
}

impl From<Permutation> for Vec<usize> {
    fn from(p: Permutation) -> Self {
        p.images.into_iter().map(|v| v + 1).collect()
    }
}

impl Permutation {
    /// From 0-based images.
    pub fn new(images: Vec<usize>) -> Result<Self, CmonoError> {
        let d = images.len();
        let mut seen = vec![false; d];
        for &v in &images {
            if v >= d || seen[v] {
                return Err(CmonoError::NotABijection(d));
            }
            seen[v] = true;
        }
        Ok(Permutation { images })
    }

    pub fn identity(d: usize) -> Self {
        Permutation { images: (0..d).collect() }
    }

    /// From 1-based disjoint cycles, e.g. `&[&[1, 3], &[2, 4]]`.
    pub fn from_cycles(d: usize, cycles: &[&[usize]]) -> Result<Self, CmonoError> {
        let mut images: Vec<usize> = (0..d).collect();
        for c in cycles {
            for (k, &a) in c.iter().enumerate() {
                let b = c[(k + 1) % c.len()];
                if a == 0 || b == 0 || a > d || b > d {
                    return Err(CmonoError::NotABijection(d));
                }
                images[a - 1] = b - 1;
            }
        }
        Permutation::new(images)
    }

    pub fn degree(&self) -> usize {
        self.images.len()
    }

    /// 0-based image of 0-based `i`.
    pub fn apply(&self, i: usize) -> usize {
        self.images[i]
    }

    pub fn images(&self) -> &[usize] {
        &self.images
    }

    pub fn is_identity(&self) -> bool {
        self.images.iter().enumerate().all(|(i, &v)| i == v)
    }

    /// `self` followed by `other`: `i -> other(self(i))`.
    pub fn then(&self, other: &Permutation) -> Permutation {
        Permutation { images: self.images.iter().map(|&v| other.images[v]).collect() }
    }

    pub fn inverse(&self) -> Permutation {
        let mut inv = vec![0; self.images.len()];
        for (i, &v) in self.images.iter().enumerate() {
            inv[v] = i;
        }
        Permutation { images: inv }
    }

    /// Nontrivial cycles, 1-based, each starting at its smallest element.
    pub fn cycles(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.images.len()];
        let mut out = Vec::new();
        for start in 0..self.images.len() {
            if seen[start] || self.images[start] == start {
                continue;
            }
            let mut c = Vec::new();
            let mut i = start;
            while !seen[i] {
                seen[i] = true;
                c.push(i + 1);
                i = self.images[i];
            }
            out.push(c);
        }
        out
    }
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cycles = self.cycles();
        if cycles.is_empty() {
            return f.write_str("(1)");
        }
        for c in cycles {
            let items: Vec<String> = c.iter().map(|v| v.to_string()).collect();
            write!(f, "({})", items.join(" "))?;
        }
        Ok(())
    }
}

/// Closure of a set of generators under composition.
pub fn closure(degree: usize, generators: &[Permutation]) -> BTreeSet<Permutation> {
    let id = Permutation::identity(degree);
    let mut elements = BTreeSet::from([id.clone()]);
    let mut queue = VecDeque::from([id]);
    while let Some(g) = queue.pop_front() {
        for h in generators {
            let gh = g.then(h);
            if elements.insert(gh.clone()) {
                queue.push_back(gh);
            }
        }
    }
    elements
}

/// Complex affine line `t -> origin + t * direction` in parameter space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineLine {
    pub origin: CPoint,
    pub direction: CPoint,
}

impl AffineLine {
    pub fn at(&self, t: Complex64) -> CPoint {
        CPoint(self.origin.iter().zip(self.direction.iter()).map(|(o, d)| o + d * t).collect())
    }
}

/// Loop in the line parameter `t`: from `base_t` straight to the circle of
/// `radius` around `center`, once counterclockwise around it, and back.
pub fn circle_loop(center: Complex64, base_t: Complex64, radius: f64, line: &AffineLine) -> Result<ParamPath, CmonoError> {
    if !(radius > 0.0) {
        return Err(CmonoError::BadRadius(radius));
    }
    let off = base_t - center;
    if off.norm() <= radius {
        return Err(CmonoError::BaseInsideCircle);
    }
    let theta0 = off.arg();
    let mut ts = vec![base_t];
    for k in 0..=CIRCLE_WAYPOINTS {
        let a = theta0 + 2.0 * std::f64::consts::PI * k as f64 / CIRCLE_WAYPOINTS as f64;
        ts.push(center + Complex64::from_polar(radius, a));
    }
    ts.push(base_t);
    // The circle closes on its entry point exactly.
    let n = ts.len();
    ts[n - 2] = ts[1];
    let pts: Vec<CPoint> = ts.into_iter().map(|t| line.at(t)).collect();
    Ok(ParamPath::through(pts).expect("distinct consecutive waypoints"))
}

/// Random triangle `base -> z1 -> z2 -> base` with `z1`, `z2` uniform in the
/// complex ball of radius `scale` around `base`.
pub fn random_loop(base: &CPoint, seed: u64, scale: f64) -> ParamPath {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut corner = || -> CPoint {
        let dim = base.len();
        // Uniform in the unit ball of C^dim = R^(2 dim) by rejection.
        let v: Vec<f64> = loop {
            let v: Vec<f64> = (0..2 * dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
            if v.iter().map(|x| x * x).sum::<f64>() <= 1.0 {
                break v;
            }
        };
        CPoint(base.iter().enumerate().map(|(k, b)| b + Complex64::new(v[2 * k], v[2 * k + 1]) * scale).collect())
    };
    let (z1, z2) = (corner(), corner());
    ParamPath { waypoints: vec![base.clone(), z1, z2, base.clone()], detour_flags: vec![false; 3] }
}

fn track_permutation(sys: &PolySystem, base: &SolutionSet, path: &ParamPath, opts: &TrackOptions) -> Result<Permutation, String> {
    let mut images = Vec::with_capacity(base.d());
    for (i, out) in track_all(sys, path, &base.all_complex, opts).into_iter().enumerate() {
        let out = out.map_err(|e| format!("path {}: {e}", i + 1))?;
        let Some(end) = out.endpoint else {
            return Err(format!("path {} ended {:?}", i + 1, out.status));
        };
        match match_endpoint(&end, &base.all_complex, MATCH_RADIUS) {
            Ok(Some(j)) => images.push(j),
            Ok(None) => return Err(format!("path {} ended away from every base solution", i + 1)),
            Err(e) => return Err(e.to_string()),
        }
    }
    Permutation::new(images).map_err(|e| e.to_string())
}

/// Permutation of `base.all_complex` induced by `path`, tracked in complex
/// arithmetic. A failure is retried once with every segment detoured.
pub fn loop_permutation(sys: &PolySystem, base: &SolutionSet, path: &ParamPath, opts: &TrackOptions) -> Result<Permutation, CmonoError> {
    if path.start().dist(&base.param) > 1e-12 || path.end().dist(&base.param) > 1e-12 {
        return Err(CmonoError::NotALoop);
    }
    if path.waypoints.windows(2).all(|w| w[0] == w[1]) {
        return Ok(Permutation::identity(base.d()));
    }
    let opts = TrackOptions { real_mode: false, ..*opts };
    match track_permutation(sys, base, path, &opts) {
        Ok(p) => Ok(p),
        Err(_) => {
            let detoured = ParamPath { waypoints: path.waypoints.clone(), detour_flags: vec![true; path.num_segments()] };
            let opts = TrackOptions { detour_seed: opts.detour_seed.wrapping_add(1), ..opts };
            track_permutation(sys, base, &detoured, &opts).map_err(CmonoError::LoopThroughDiscriminant)
        }
    }
}

/// Where a generator came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoopRecord {
    pub seed: u64,
    pub waypoints: Vec<CPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonodromyGroup {
    pub degree: usize,
    pub generators: Vec<(Permutation, LoopRecord)>,
    pub elements: Vec<Permutation>,
    pub order: usize,
    pub loops_tried: usize,
    pub loops_failed: usize,
}

impl MonodromyGroup {
    pub fn contains(&self, p: &Permutation) -> bool {
        self.elements.binary_search(p).is_ok()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupOptions {
    pub max_loops: usize,
    pub stall: usize,
    pub seed: u64,
    /// Radius of the ball random loop corners are drawn from; `None` means
    /// `4 max(1, |base|)`.
    pub loop_scale: Option<f64>,
}

impl Default for GroupOptions {
    fn default() -> Self {
        GroupOptions { max_loops: 200, stall: 20, seed: 0, loop_scale: None }
    }
}

/// Loops computed concurrently before their results are folded in order.
const BATCH: usize = 8;

/// Random-loop estimate of the monodromy group at `base`.
///
/// Loops are folded into the closure in seed order; the search stops after
/// `stall` consecutive loops add nothing, or after `max_loops` loops. Loops
/// that fail are skipped and do not count toward the stall.
pub fn monodromy_group(sys: &PolySystem, base: &SolutionSet, opts: &GroupOptions, track: &TrackOptions) -> MonodromyGroup {
    let d = base.d();
    let scale = opts.loop_scale.unwrap_or_else(|| 4.0 * base.param.norm().max(1.0));
    let mut gens: Vec<(Permutation, LoopRecord)> = Vec::new();
    let mut elements = closure(d, &[]);
    let (mut tried, mut failed, mut stall) = (0usize, 0usize, 0usize);
    let mut next = 0usize;
    'outer: while tried < opts.max_loops && stall < opts.stall && elements.len() < factorial(d) {
        let batch: Vec<usize> = (next..(next + BATCH).min(opts.max_loops)).collect();
        next += batch.len();
        let results: Vec<(u64, ParamPath, Result<Permutation, CmonoError>)> = batch
            .par_iter()
            .map(|&k| {
                let seed = opts.seed.wrapping_mul(1_000_003).wrapping_add(k as u64);
                let path = random_loop(&base.param, seed, scale);
                let topts = TrackOptions { detour_seed: seed, ..*track };
                let perm = loop_permutation(sys, base, &path, &topts);
                (seed, path, perm)
            })
            .collect();
        for (seed, path, perm) in results {
            tried += 1;
            match perm {
                Ok(p) if !elements.contains(&p) => {
                    gens.push((p, LoopRecord { seed, waypoints: path.waypoints }));
                    let ps: Vec<Permutation> = gens.iter().map(|(p, _)| p.clone()).collect();
                    elements = closure(d, &ps);
                    stall = 0;
                }
                Ok(_) => stall += 1,
                Err(_) => failed += 1,
            }
            if tried >= opts.max_loops || stall >= opts.stall || elements.len() == factorial(d) {
                break 'outer;
            }
        }
    }
    let elements: Vec<Permutation> = elements.into_iter().collect();
    MonodromyGroup { degree: d, generators: gens, order: elements.len(), elements, loops_tried: tried, loops_failed: failed }
}

fn factorial(d: usize) -> usize {
    (1..=d).fold(1usize, |acc, k| acc.saturating_mul(k))
}
