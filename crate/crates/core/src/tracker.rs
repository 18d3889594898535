//! Predictor-corrector continuation of one solution along a piecewise-linear
//! parameter path.
//!
//! Each segment `a -> b` is parameterized as `p(s) = a + s (b - a)`, `s` in
//! `[0, 1]`. The predictor integrates `J_x dx/ds = -J_p (b - a)` with one
//! classical Runge-Kutta step; the corrector runs Newton at the new `s`. A
//! step is rejected if Newton does not contract or if its first correction is
//! large compared with the predicted displacement, which guards against
//! jumping to a neighbouring path.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{lu_solve_in_place, norm2, singular_values, Scalar};
use crate::polysys::{CPoint, PolySystem};

/// Piecewise-linear path through parameter space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamPath {
    pub waypoints: Vec<CPoint>,
    /// One flag per segment; a set flag routes that segment through a random
    /// complex midpoint.
    pub detour_flags: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PathError {
    #[error("a path needs at least two waypoints")]
    TooShort,
    #[error("waypoints {0} and {1} coincide")]
    Repeated(usize, usize),
    #[error("expected {expected} detour flags, got {got}")]
    FlagCount { expected: usize, got: usize },
    #[error("waypoint {index} has {got} coordinates, expected {expected}")]
    Dimension { index: usize, expected: usize, got: usize },
}

impl ParamPath {
    pub fn new(waypoints: Vec<CPoint>, detour_flags: Vec<bool>) -> Result<Self, PathError> {
        if waypoints.len() < 2 {
            return Err(PathError::TooShort);
        }
        if detour_flags.len() != waypoints.len() - 1 {
            return Err(PathError::FlagCount { expected: waypoints.len() - 1, got: detour_flags.len() });
        }
        let dim = waypoints[0].len();
        for (k, w) in waypoints.iter().enumerate() {
            if w.len() != dim {
                return Err(PathError::Dimension { index: k, expected: dim, got: w.len() });
            }
        }
        for k in 1..waypoints.len() {
            if waypoints[k] == waypoints[k - 1] {
                return Err(PathError::Repeated(k - 1, k));
            }
        }
        Ok(ParamPath { waypoints, detour_flags })
    }

    /// Path through the given points with no detours.
    pub fn through(waypoints: Vec<CPoint>) -> Result<Self, PathError> {
        let n = waypoints.len().saturating_sub(1);
        Self::new(waypoints, vec![false; n])
    }

    /// Straight segment between two real points.
    pub fn real_segment(a: &[f64], b: &[f64]) -> Result<Self, PathError> {
        Self::through(vec![CPoint::from_real(a), CPoint::from_real(b)])
    }

    /// Polyline through real points.
    pub fn real_polyline(points: &[Vec<f64>]) -> Result<Self, PathError> {
        Self::through(points.iter().map(|p| CPoint::from_real(p)).collect())
    }

    pub fn num_segments(&self) -> usize {
        self.waypoints.len() - 1
    }

    pub fn start(&self) -> &CPoint {
        &self.waypoints[0]
    }

    pub fn end(&self) -> &CPoint {
        self.waypoints.last().expect("nonempty path")
    }

    pub fn is_real(&self) -> bool {
        !self.detour_flags.iter().any(|&f| f) && self.waypoints.iter().all(|w| w.max_imag() == 0.0)
    }

    /// Same waypoints traversed backwards.
    pub fn reversed(&self) -> Self {
        let mut waypoints = self.waypoints.clone();
        waypoints.reverse();
        let mut detour_flags = self.detour_flags.clone();
        detour_flags.reverse();
        ParamPath { waypoints, detour_flags }
    }

    /// Concatenation; `other` must start where `self` ends.
    pub fn then(&self, other: &ParamPath) -> Self {
        debug_assert_eq!(self.end(), other.start());
        let mut waypoints = self.waypoints.clone();
        waypoints.extend(other.waypoints[1..].iter().cloned());
        let mut detour_flags = self.detour_flags.clone();
        detour_flags.extend(other.detour_flags.iter().copied());
        ParamPath { waypoints, detour_flags }
    }

    /// Replaces every flagged segment `a -> b` by `a -> m -> b` where `m` is the
    /// midpoint moved by a random complex offset of size comparable to `|b - a|`.
    pub fn expand_detours(&self, seed: u64) -> ParamPath {
        if !self.detour_flags.iter().any(|&f| f) {
            return self.clone();
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut waypoints = vec![self.waypoints[0].clone()];
        for (k, &flag) in self.detour_flags.iter().enumerate() {
            let (a, b) = (&self.waypoints[k], &self.waypoints[k + 1]);
            if flag {
                let len = a.dist(b);
                let mid = a
                    .iter()
                    .zip(b.iter())
                    .map(|(x, y)| {
                        let off = Complex64::new(rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5));
                        (x + y) * 0.5 + off * len
                    })
                    .collect();
                waypoints.push(CPoint(mid));
            }
            waypoints.push(b.clone());
        }
        let n = waypoints.len() - 1;
        ParamPath { waypoints, detour_flags: vec![false; n] }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackOptions {
    pub newton_tol: f64,
    pub max_newton_iters: usize,
    /// Initial step as a fraction of one segment.
    pub initial_step: f64,
    pub min_step: f64,
    /// Upper bound on the step, as a fraction of one segment.
    pub max_step: f64,
    pub step_expand: f64,
    /// Consecutive accepted steps before the step grows.
    pub expand_after: usize,
    pub step_shrink: f64,
    pub divergence_norm: f64,
    /// At a step collapse, `|x|` above this counts as divergence.
    pub collapse_norm: f64,
    /// At a step collapse, `sigma_min(J_x) / |[J_x | J_p]|_F` below this counts as singular.
    pub collapse_sv_ratio: f64,
    pub singular_svd_tol: f64,
    pub real_mode: bool,
    /// Seed for detour midpoints.
    pub detour_seed: u64,
}

impl Default for TrackOptions {
    fn default() -> Self {
        TrackOptions {
            newton_tol: 1e-10,
            max_newton_iters: 10,
            initial_step: 1e-2,
            min_step: 1e-10,
            max_step: 0.5,
            step_expand: 2.0,
            expand_after: 4,
            step_shrink: 0.5,
            divergence_norm: 1e8,
            collapse_norm: 1e4,
            collapse_sv_ratio: 1e-3,
            singular_svd_tol: 1e-8,
            real_mode: true,
            detour_seed: 0,
        }
    }
}

impl TrackOptions {
    pub fn complex() -> Self {
        TrackOptions { real_mode: false, ..Default::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TrackStatus {
    Success,
    Diverged,
    Singular,
    StepFailure,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackOutcome {
    pub status: TrackStatus,
    pub endpoint: Option<CPoint>,
    /// Fraction of the (detour-expanded) path reached before failure.
    pub t_fail: Option<f64>,
    pub min_sv_seen: f64,
    pub steps: usize,
    /// Whether the run used real arithmetic throughout.
    pub real_arithmetic: bool,
    /// Seed used to expand detours, if any segment requested one.
    pub detour_seed: Option<u64>,
}

impl TrackOutcome {
    pub fn is_success(&self) -> bool {
        self.status == TrackStatus::Success
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TrackError {
    #[error("start point has residual {residual:e}, not an approximate solution")]
    NotASolution { residual: f64 },
    #[error("start point is singular (smallest singular value {min_sv:e})")]
    SingularStart { min_sv: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
}

/// Residual accepted for a start point before it is polished by Newton.
const START_RESIDUAL: f64 = 1e-5;

struct Work<'a, T: Scalar> {
    sys: &'a PolySystem,
    n: usize,
    jac: Vec<T>,
    rhs: Vec<T>,
}

impl<'a, T: Scalar> Work<'a, T> {
    fn new(sys: &'a PolySystem) -> Self {
        let n = sys.num_vars();
        Work { sys, n, jac: vec![T::zero(); n * n], rhs: vec![T::zero(); n] }
    }

    /// `dx/ds` at `(x, p)` for direction `dp`.
    fn velocity(&mut self, x: &[T], p: &[T], dp: &[T]) -> Option<Vec<T>> {
        self.sys.jac_x_into(x, p, &mut self.jac);
        self.sys.jac_p_times(x, p, dp, &mut self.rhs);
        for v in self.rhs.iter_mut() {
            *v = -*v;
        }
        lu_solve_in_place(&mut self.jac, self.n, &mut self.rhs).ok()?;
        let out = self.rhs.clone();
        out.iter().all(|v| v.is_finite()).then_some(out)
    }

    /// Newton update `dx` with `J_x dx = F`; returns `None` on a singular Jacobian.
    fn newton_delta(&mut self, x: &[T], p: &[T]) -> Option<Vec<T>> {
        self.sys.eval_into(x, p, &mut self.rhs);
        self.sys.jac_x_into(x, p, &mut self.jac);
        lu_solve_in_place(&mut self.jac, self.n, &mut self.rhs).ok()?;
        let out = self.rhs.clone();
        out.iter().all(|v| v.is_finite()).then_some(out)
    }

    fn residual(&mut self, x: &[T], p: &[T]) -> f64 {
        self.sys.eval_into(x, p, &mut self.rhs);
        norm2(&self.rhs)
    }

    fn singular_values(&mut self, x: &[T], p: &[T]) -> Vec<f64> {
        self.sys.jac_x_into(x, p, &mut self.jac);
        singular_values(&self.jac, self.n, self.n)
    }

    /// Frobenius norm of the full Jacobian `[J_x | J_p]`.
    fn full_jacobian_norm(&mut self, x: &[T], p: &[T]) -> f64 {
        self.sys.jac_x_into(x, p, &mut self.jac);
        let mut jp = vec![T::zero(); self.n * p.len()];
        self.sys.jac_p_into(x, p, &mut jp);
        (self.jac.iter().chain(&jp).map(|v| v.norm_sqr()).sum::<f64>()).sqrt()
    }

    /// Plain Newton to convergence; `None` if it fails to converge.
    fn polish(&mut self, x: &mut [T], p: &[T], opts: &TrackOptions) -> Option<()> {
        for _ in 0..opts.max_newton_iters.max(1) {
            let d = self.newton_delta(x, p)?;
            for (xi, di) in x.iter_mut().zip(&d) {
                *xi -= *di;
            }
            if norm2(&d) <= opts.newton_tol * norm2(x).max(1.0) {
                return Some(());
            }
        }
        None
    }

    /// Corrector for a predicted point; `disp` is the size of the predicted move.
    fn correct(&mut self, x: &mut [T], p: &[T], disp: f64, opts: &TrackOptions) -> bool {
        let scale = norm2(x).max(1.0);
        let mut prev = f64::INFINITY;
        for it in 0..opts.max_newton_iters {
            let Some(d) = self.newton_delta(x, p) else { return false };
            let dn = norm2(&d);
            if it == 0 && dn > 0.25 * disp + 1e-8 * scale {
                return false;
            }
            if it > 0 && dn > 0.5 * prev && dn > opts.newton_tol * scale {
                return false;
            }
            for (xi, di) in x.iter_mut().zip(&d) {
                *xi -= *di;
            }
            if dn <= opts.newton_tol * scale {
                return true;
            }
            prev = dn;
        }
        false
    }
}

fn lerp<T: Scalar>(a: &[T], dp: &[T], s: f64) -> Vec<T> {
    a.iter().zip(dp).map(|(&ai, &di)| ai + di.scale(s)).collect()
}

fn axpy<T: Scalar>(x: &[T], h: f64, v: &[T]) -> Vec<T> {
    x.iter().zip(v).map(|(&xi, &vi)| xi + vi.scale(h)).collect()
}

struct Run {
    status: TrackStatus,
    x: Vec<Complex64>,
    t_fail: Option<f64>,
    min_sv: f64,
    steps: usize,
}

fn run<T: Scalar>(sys: &PolySystem, waypoints: &[Vec<T>], start: Vec<T>, opts: &TrackOptions) -> Result<Run, TrackError> {
    let mut w = Work::<T>::new(sys);
    let mut x = start;
    let p0 = &waypoints[0];
    let r0 = w.residual(&x, p0);
    if !(r0 < START_RESIDUAL) {
        return Err(TrackError::NotASolution { residual: r0 });
    }
    let sv0 = w.singular_values(&x, p0);
    let min0 = *sv0.last().unwrap_or(&0.0);
    if min0 <= opts.singular_svd_tol {
        return Err(TrackError::SingularStart { min_sv: min0 });
    }
    if w.polish(&mut x, p0, opts).is_none() || !(w.residual(&x, p0) < opts.newton_tol) {
        return Err(TrackError::NotASolution { residual: w.residual(&x, p0) });
    }

    let mut min_sv = min0;
    let nseg = waypoints.len() - 1;
    let mut h = opts.initial_step.min(opts.max_step);
    let mut streak = 0usize;
    let mut steps = 0usize;
    let to_c = |v: &[T]| v.iter().map(|z| z.to_c64()).collect::<Vec<_>>();

    for seg in 0..nseg {
        let a = &waypoints[seg];
        let dp: Vec<T> = waypoints[seg + 1].iter().zip(a).map(|(&b, &a)| b - a).collect();
        let mut s = 0.0f64;
        while s < 1.0 {
            let step = if s + h >= 1.0 - 1e-14 { 1.0 - s } else { h };
            let s1 = s + step;
            let p_mid = lerp(a, &dp, s + 0.5 * step);
            let p_end = if s1 >= 1.0 { waypoints[seg + 1].clone() } else { lerp(a, &dp, s1) };
            let p_now = lerp(a, &dp, s);

            let predicted = (|| {
                let k1 = w.velocity(&x, &p_now, &dp)?;
                let k2 = w.velocity(&axpy(&x, 0.5 * step, &k1), &p_mid, &dp)?;
                let k3 = w.velocity(&axpy(&x, 0.5 * step, &k2), &p_mid, &dp)?;
                let k4 = w.velocity(&axpy(&x, step, &k3), &p_end, &dp)?;
                Some((0..x.len()).map(|i| x[i] + (k1[i] + (k2[i] + k3[i]).scale(2.0) + k4[i]).scale(step / 6.0)).collect::<Vec<T>>())
            })();

            let accepted = predicted.and_then(|mut y| {
                let disp = norm2(&y.iter().zip(&x).map(|(&a, &b)| a - b).collect::<Vec<T>>());
                w.correct(&mut y, &p_end, disp, opts).then_some(y)
            });

            match accepted {
                Some(y) => {
                    x = y;
                    s = s1;
                    steps += 1;
                    if norm2(&x) > opts.divergence_norm {
                        return Ok(Run {
                            status: TrackStatus::Diverged,
                            x: to_c(&x),
                            t_fail: Some((seg as f64 + s) / nseg as f64),
                            min_sv,
                            steps,
                        });
                    }
                    streak += 1;
                    if streak >= opts.expand_after {
                        h = (h * opts.step_expand).min(opts.max_step);
                        streak = 0;
                    }
                }
                None => {
                    streak = 0;
                    h *= opts.step_shrink;
                    if h < opts.min_step {
                        let t_fail = Some((seg as f64 + s) / nseg as f64);
                        let status = if norm2(&x) > opts.collapse_norm {
                            TrackStatus::Diverged
                        } else {
                            let sv = w.singular_values(&x, &p_now);
                            let lo = *sv.last().unwrap_or(&0.0);
                            min_sv = min_sv.min(lo);
                            let scale = w.full_jacobian_norm(&x, &p_now);
                            if lo <= opts.collapse_sv_ratio * scale || lo <= opts.singular_svd_tol {
                                TrackStatus::Singular
                            } else {
                                TrackStatus::StepFailure
                            }
                        };
                        return Ok(Run { status, x: to_c(&x), t_fail, min_sv, steps });
                    }
                }
            }
        }
    }

    let p_end = waypoints.last().expect("nonempty");
    let polished = w.polish(&mut x, p_end, opts).is_some();
    let sv = w.singular_values(&x, p_end);
    let lo = *sv.last().unwrap_or(&0.0);
    min_sv = min_sv.min(lo);
    let residual = w.residual(&x, p_end);
    let status = if lo <= opts.singular_svd_tol {
        TrackStatus::Singular
    } else if !polished || !(residual < opts.newton_tol) {
        TrackStatus::StepFailure
    } else {
        TrackStatus::Success
    };
    let t_fail = (status != TrackStatus::Success).then_some(1.0);
    Ok(Run { status, x: to_c(&x), t_fail, min_sv, steps })
}

/// Continues `start` along `path`.
///
/// Real arithmetic is used when `opts.real_mode` is set, the system, path and
/// start are all real; the endpoint then has exactly zero imaginary parts.
pub fn track(sys: &PolySystem, path: &ParamPath, start: &CPoint, opts: &TrackOptions) -> Result<TrackOutcome, TrackError> {
    if start.len() != sys.num_vars() {
        return Err(TrackError::Dimension { expected: sys.num_vars(), got: start.len() });
    }
    if path.start().len() != sys.num_params() {
        return Err(TrackError::Dimension { expected: sys.num_params(), got: path.start().len() });
    }
    let has_detour = path.detour_flags.iter().any(|&f| f);
    let expanded = path.expand_detours(opts.detour_seed);
    let real = opts.real_mode && sys.is_real() && expanded.is_real() && start.max_imag() == 0.0;
    let r = if real {
        let wps: Vec<Vec<f64>> = expanded.waypoints.iter().map(|w| w.iter().map(|z| z.re).collect()).collect();
        run(sys, &wps, start.iter().map(|z| z.re).collect(), opts)?
    } else {
        let wps: Vec<Vec<Complex64>> = expanded.waypoints.iter().map(|w| w.0.clone()).collect();
        run(sys, &wps, start.0.clone(), opts)?
    };
    let success = r.status == TrackStatus::Success;
    Ok(TrackOutcome {
        status: r.status,
        endpoint: success.then_some(CPoint(r.x)),
        t_fail: r.t_fail,
        min_sv_seen: r.min_sv,
        steps: r.steps,
        real_arithmetic: real,
        detour_seed: has_detour.then_some(opts.detour_seed),
    })
}

/// Tracks every start along the same path, in parallel, preserving order.
pub fn track_all(sys: &PolySystem, path: &ParamPath, starts: &[CPoint], opts: &TrackOptions) -> Vec<Result<TrackOutcome, TrackError>> {
    starts.par_iter().map(|s| track(sys, path, s, opts)).collect()
}

/// Newton-polishes `x` in place at the fixed parameter `p`; `false` if Newton
/// fails to converge within `opts.max_newton_iters`.
pub fn refine<T: Scalar>(sys: &PolySystem, x: &mut [T], p: &[T], opts: &TrackOptions) -> bool {
    Work::<T>::new(sys).polish(x, p, opts).is_some()
}

/// `|F(x; p)|` and the smallest singular value of `J_x` at `(x, p)`.
pub fn residual_and_min_sv<T: Scalar>(sys: &PolySystem, x: &[T], p: &[T]) -> (f64, f64) {
    let mut w = Work::<T>::new(sys);
    let r = w.residual(x, p);
    let sv = w.singular_values(x, p);
    (r, *sv.last().unwrap_or(&0.0))
}

/// True when every imaginary part is below `tol` in modulus.
pub fn is_real(x: &CPoint, tol: f64) -> bool {
    x.max_imag() < tol
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("candidates {0} and {1} both lie within the match radius")]
pub struct AmbiguousMatch(pub usize, pub usize);

/// Index of the unique candidate within `radius` of `x`.
pub fn match_endpoint(x: &CPoint, candidates: &[CPoint], radius: f64) -> Result<Option<usize>, AmbiguousMatch> {
    let mut found = None;
    for (k, c) in candidates.iter().enumerate() {
        if c.dist(x) < radius {
            if let Some(j) = found {
                return Err(AmbiguousMatch(j, k));
            }
            found = Some(k);
        }
    }
    Ok(found)
}
