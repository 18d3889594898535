//! All isolated nonsingular solutions at one parameter point.
//!
//! [`solve_at`] runs a total-degree homotopy
//! `H(x; s) = gamma (1 - s) (x_i^{d_i} - g_i) + s F_i(x; p)` from `s = 0` to
//! `s = 1` with random unit complex `gamma` and `g_i`. Real solutions are then
//! separated by [`classify_real`] and numbered by [`assign_labels`].

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::polysys::{CPoint, PolySystem, Polynomial, RPoint};
use crate::tracker::{
    is_real, refine, residual_and_min_sv, track, track_all, ParamPath, TrackError, TrackOptions, TrackOutcome, TrackStatus,
};

/// Distinct endpoints closer than this are treated as one.
pub const DEDUPE_RADIUS: f64 = 1e-8;
/// Default realness tolerance.
pub const REAL_TOL: f64 = 1e-6;
/// Imaginary parts in this band are too ambiguous to classify.
pub const BORDERLINE: (f64, f64) = (1e-8, 1e-4);
/// Radius for matching label overrides.
pub const LABEL_MATCH_RADIUS: f64 = 1e-6;
const RETRIES: u64 = 3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error("parameter point looks non-generic: path results unstable after {attempts} attempts")]
    NonGenericParameter { attempts: u64 },
    #[error("solution {index} has imaginary part {imag:e}, too close to the real/nonreal threshold")]
    BorderlineReal { index: usize, imag: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("equation {0} has degree zero in the variables")]
    ZeroDegree(usize),
    #[error("label override has {got} points but there are {expected} real solutions")]
    LabelCount { expected: usize, got: usize },
    #[error("label override point {0} matches no solution")]
    LabelUnmatched(usize),
    #[error("label override points {0} and {1} match the same solution")]
    LabelNotBijective(usize, usize),
    #[error("parameter point is not generic: {found} nonsingular solutions, {generic} at a nearby generic point")]
    DegreeDrop { found: usize, generic: usize },
    #[error(transparent)]
    Track(#[from] TrackError),
}

/// Solutions at one parameter point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionSet {
    pub param: CPoint,
    /// The `D` nonsingular solutions; position `k` is complex label `k + 1`.
    pub all_complex: Vec<CPoint>,
    /// `real_indices[k]` is the position in `all_complex` of real label `k + 1`.
    pub real_indices: Vec<usize>,
    /// Real label `k + 1` is `labels[k]`.
    pub labels: Vec<RPoint>,
    pub seed: u64,
}

impl SolutionSet {
    pub fn d(&self) -> usize {
        self.all_complex.len()
    }

    pub fn r(&self) -> usize {
        self.real_indices.len()
    }

    /// Real label (1-based) of the solution at `all_complex[index]`, if real.
    pub fn real_label_of(&self, index: usize) -> Option<usize> {
        self.real_indices.iter().position(|&i| i == index).map(|k| k + 1)
    }
}

fn round_key(v: f64) -> i64 {
    (v / DEDUPE_RADIUS).round() as i64
}

fn complex_key(x: &CPoint) -> Vec<(i64, i64)> {
    x.iter().map(|z| (round_key(z.re), round_key(z.im))).collect()
}

fn real_key(x: &RPoint) -> Vec<i64> {
    x.iter().map(|&v| round_key(v)).collect()
}

/// Homotopy from the start system to `F(x; p)`, as a system in `x` with the
/// single parameter `s`.
fn homotopy(sys: &PolySystem, p: &CPoint, gamma: Complex64, g: &[Complex64]) -> Result<PolySystem, SolverError> {
    let n = sys.num_vars();
    let target = sys.specialize(p);
    let map: Vec<usize> = (0..n).collect();
    let s = Polynomial::indeterminate(n + 1, n);
    let one_minus_s = &Polynomial::real(n + 1, 1.0) - &s;
    let mut eqs = Vec::with_capacity(n);
    for (i, f) in target.iter().enumerate() {
        let d = sys.equation_degree(i);
        if d == 0 {
            return Err(SolverError::ZeroDegree(i));
        }
        let start = &Polynomial::indeterminate(n + 1, i).pow(d) - &Polynomial::constant(n + 1, g[i]);
        let lhs = &one_minus_s * &start.scale(gamma);
        eqs.push(&lhs + &(&s * &f.embed(n + 1, &map)));
    }
    let vars = sys.var_names().to_vec();
    Ok(PolySystem::new(vars, vec!["s".to_string()], eqs).expect("homotopy is square"))
}

fn start_points(degrees: &[u32], g: &[Complex64]) -> Vec<CPoint> {
    let mut out = vec![Vec::new()];
    for (i, &d) in degrees.iter().enumerate() {
        let root = g[i].powf(1.0 / d as f64);
        let mut next = Vec::with_capacity(out.len() * d as usize);
        for prefix in &out {
            for k in 0..d {
                let w = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / d as f64);
                let mut v: Vec<Complex64> = prefix.clone();
                v.push(root * w);
                next.push(v);
            }
        }
        out = next;
    }
    out.into_iter().map(CPoint).collect()
}

fn unit_complex(rng: &mut ChaCha8Rng) -> Complex64 {
    Complex64::from_polar(1.0, rng.gen_range(0.0..2.0 * std::f64::consts::PI))
}

/// Distinct finite nonsingular endpoints of one homotopy run, and whether the
/// run was clean (every other path diverged, no duplicates).
fn one_attempt(sys: &PolySystem, p: &CPoint, seed: u64) -> Result<(Vec<CPoint>, bool), SolverError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = sys.num_vars();
    let gamma = unit_complex(&mut rng);
    let g: Vec<Complex64> = (0..n).map(|_| unit_complex(&mut rng)).collect();
    let h = homotopy(sys, p, gamma, &g)?;
    let degrees: Vec<u32> = (0..n).map(|i| sys.equation_degree(i)).collect();
    let starts = start_points(&degrees, &g);
    let path = ParamPath::through(vec![CPoint::from_real(&[0.0]), CPoint::from_real(&[1.0])]).expect("two points");
    let opts = TrackOptions::complex();
    let mut clean = true;
    let mut found: Vec<CPoint> = Vec::new();
    for out in track_all(&h, &path, &starts, &opts) {
        let out = out?;
        match out.status {
            TrackStatus::Success => {
                let mut x = out.endpoint.expect("success has endpoint");
                if !refine(sys, &mut x.0, p, &opts) {
                    clean = false;
                    continue;
                }
                if found.iter().any(|y| y.dist(&x) < DEDUPE_RADIUS) {
                    clean = false;
                } else {
                    found.push(x);
                }
            }
            TrackStatus::Diverged => {}
            _ => clean = false,
        }
    }
    found.sort_by_key(complex_key);
    Ok((found, clean))
}

fn same_set(a: &[CPoint], b: &[CPoint]) -> bool {
    a.len() == b.len() && a.iter().all(|x| b.iter().any(|y| y.dist(x) < LABEL_MATCH_RADIUS))
}

/// All isolated nonsingular complex solutions at `p`, sorted lexicographically.
///
/// A run in which some path ends neither at a finite nonsingular point nor at
/// infinity is repeated with fresh random constants; it is then accepted once
/// two runs agree.
pub fn solve_at(sys: &PolySystem, p: &CPoint, seed: u64) -> Result<SolutionSet, SolverError> {
    if p.len() != sys.num_params() {
        return Err(SolverError::Dimension { expected: sys.num_params(), got: p.len() });
    }
    let mut previous: Vec<Vec<CPoint>> = Vec::new();
    for attempt in 0..=RETRIES {
        let (found, clean) = one_attempt(sys, p, seed.wrapping_add(attempt))?;
        let agrees = previous.iter().any(|prev| same_set(prev, &found));
        if clean || agrees {
            return Ok(SolutionSet { param: p.clone(), all_complex: found, real_indices: Vec::new(), labels: Vec::new(), seed });
        }
        previous.push(found);
    }
    Err(SolverError::NonGenericParameter { attempts: RETRIES + 1 })
}

/// Compares `set` with a fresh solve at a random complex point near
/// `set.param`; fewer solutions than there means `set.param` is not generic.
pub fn check_generic(sys: &PolySystem, set: &SolutionSet, seed: u64) -> Result<(), SolverError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x6E6E_7269_6361_6C00);
    let scale = set.param.norm().max(1.0) * 0.1;
    let q = CPoint(set.param.iter().map(|z| z + unit_complex(&mut rng) * scale).collect());
    let generic = solve_at(sys, &q, seed)?.d();
    if set.d() < generic {
        return Err(SolverError::DegreeDrop { found: set.d(), generic });
    }
    Ok(())
}

/// Marks the real solutions.
///
/// Every solution is Newton-polished once more; those with imaginary parts
/// below `tol` get their imaginary parts zeroed and are re-polished in real
/// arithmetic. Real labels are assigned in lexicographic order.
pub fn classify_real(sys: &PolySystem, set: &SolutionSet, tol: f64) -> Result<SolutionSet, SolverError> {
    let opts = TrackOptions::default();
    let p = &set.param;
    let param_real = p.max_imag() == 0.0 && sys.is_real();
    let mut out = set.clone();
    out.real_indices.clear();
    out.labels.clear();
    for (k, x) in out.all_complex.iter_mut().enumerate() {
        refine(sys, &mut x.0, p, &opts);
        if !param_real {
            continue;
        }
        let imag = x.max_imag();
        if imag >= BORDERLINE.0 && imag <= BORDERLINE.1 {
            return Err(SolverError::BorderlineReal { index: k, imag });
        }
        if is_real(x, tol) {
            let mut r: Vec<f64> = x.iter().map(|z| z.re).collect();
            let pr: Vec<f64> = p.iter().map(|z| z.re).collect();
            refine(sys, &mut r, &pr, &opts);
            *x = CPoint::from_real(&r);
            out.real_indices.push(k);
        }
    }
    out.real_indices.sort_by_key(|&k| real_key(&out.all_complex[k].real_part()));
    out.labels = out.real_indices.iter().map(|&k| out.all_complex[k].real_part()).collect();
    Ok(out)
}

/// Renumbers the real solutions.
///
/// Without an override the order is lexicographic in the coordinates rounded
/// to `1e-8`. An override lists the real solutions in the desired order; each
/// entry must match exactly one real solution within `1e-6`.
pub fn assign_labels(set: &SolutionSet, override_labels: Option<&[RPoint]>) -> Result<SolutionSet, SolverError> {
    let mut out = set.clone();
    match override_labels {
        None => {
            out.real_indices.sort_by_key(|&k| real_key(&out.all_complex[k].real_part()));
        }
        Some(list) => {
            if list.len() != set.r() {
                return Err(SolverError::LabelCount { expected: set.r(), got: list.len() });
            }
            let mut order = Vec::with_capacity(list.len());
            for (j, target) in list.iter().enumerate() {
                let hits: Vec<usize> = set
                    .real_indices
                    .iter()
                    .copied()
                    .filter(|&k| set.all_complex[k].real_part().dist(target) < LABEL_MATCH_RADIUS)
                    .collect();
                let Some(&k) = hits.first() else { return Err(SolverError::LabelUnmatched(j)) };
                if let Some(i) = order.iter().position(|&o| o == k) {
                    return Err(SolverError::LabelNotBijective(i, j));
                }
                order.push(k);
            }
            out.real_indices = order;
        }
    }
    out.labels = out.real_indices.iter().map(|&k| out.all_complex[k].real_part()).collect();
    Ok(out)
}

/// Reorders `all_complex`.
///
/// Without an override the real solutions come first in label order, then
/// the nonreal ones lexicographically. An override lists all `D` solutions.
pub fn order_complex(set: &SolutionSet, override_order: Option<&[CPoint]>) -> Result<SolutionSet, SolverError> {
    let perm: Vec<usize> = match override_order {
        None => {
            let mut rest: Vec<usize> = (0..set.d()).filter(|k| !set.real_indices.contains(k)).collect();
            rest.sort_by_key(|&k| complex_key(&set.all_complex[k]));
            set.real_indices.iter().copied().chain(rest).collect()
        }
        Some(list) => {
            if list.len() != set.d() {
                return Err(SolverError::LabelCount { expected: set.d(), got: list.len() });
            }
            let mut order: Vec<usize> = Vec::with_capacity(list.len());
            for (j, target) in list.iter().enumerate() {
                let Some(k) = (0..set.d()).find(|&k| set.all_complex[k].dist(target) < LABEL_MATCH_RADIUS) else {
                    return Err(SolverError::LabelUnmatched(j));
                };
                if let Some(i) = order.iter().position(|&o| o == k) {
                    return Err(SolverError::LabelNotBijective(i, j));
                }
                order.push(k);
            }
            order
        }
    };
    let mut out = set.clone();
    out.all_complex = perm.iter().map(|&k| set.all_complex[k].clone()).collect();
    out.real_indices = set.real_indices.iter().map(|&k| perm.iter().position(|&q| q == k).expect("permutation")).collect();
    Ok(out)
}

/// Full pipeline: solve, classify, label, order.
pub fn solve_labeled(
    sys: &PolySystem,
    p: &CPoint,
    seed: u64,
    real_labels: Option<&[RPoint]>,
    complex_order: Option<&[CPoint]>,
) -> Result<SolutionSet, SolverError> {
    solve_labeled_tol(sys, p, seed, REAL_TOL, real_labels, complex_order)
}

/// [`solve_labeled`] with an explicit realness threshold.
pub fn solve_labeled_tol(
    sys: &PolySystem,
    p: &CPoint,
    seed: u64,
    real_tol: f64,
    real_labels: Option<&[RPoint]>,
    complex_order: Option<&[CPoint]>,
) -> Result<SolutionSet, SolverError> {
    let set = solve_at(sys, p, seed)?;
    let set = classify_real(sys, &set, real_tol)?;
    let set = assign_labels(&set, real_labels)?;
    order_complex(&set, complex_order)
}

/// Parameter homotopy: carries every solution in `set` to `to` along a
/// straight segment with a random complex detour.
pub fn transport(sys: &PolySystem, set: &SolutionSet, to: &CPoint, seed: u64) -> Result<Vec<TrackOutcome>, SolverError> {
    let path = ParamPath::new(vec![set.param.clone(), to.clone()], vec![true])
        .map_err(|_| SolverError::Dimension { expected: sys.num_params(), got: to.len() })?;
    let opts = TrackOptions { detour_seed: seed, ..TrackOptions::complex() };
    track_all(sys, &path, &set.all_complex, &opts).into_iter().map(|r| r.map_err(SolverError::from)).collect()
}

/// Tracks one point with default complex options; used by callers that need a
/// single path without building a batch.
pub fn track_one(sys: &PolySystem, path: &ParamPath, x: &CPoint) -> Result<TrackOutcome, SolverError> {
    Ok(track(sys, path, x, &TrackOptions::complex())?)
}

/// Residual and conditioning check used by tests and reports.
pub fn is_nonsingular_solution(sys: &PolySystem, x: &CPoint, p: &CPoint) -> bool {
    let (r, sv) = residual_and_min_sv(sys, &x.0, &p.0);
    r < 1e-10 && sv > 1e-8
}
