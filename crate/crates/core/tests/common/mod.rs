//! Checks shared by the property suite and the acceptance runner. Each check
//! returns `Err(reason)` on a violation; `Ok(false)` means the sample was not
//! usable (for example a path that left the window of validity) and should be
//! redrawn.
#![allow(dead_code, clippy::needless_range_loop)]

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use realmono::cli::default_window;
use realmono::cmono::{loop_permutation, monodromy_group, random_loop, GroupOptions, MonodromyGroup, Permutation};
use realmono::polysys::{builtin, BuiltinName, CPoint, PolySystem, RPoint};
use realmono::regionmap::{build_region_map, grid_scan, MapOptions, RegionMap, ScanOptions, Window};
use realmono::rms::{real_monodromy, replay_word, PartialPermutation, RealMonodromyStructure, RmsOptions, RmsResult};
use realmono::solver::{classify_real, solve_at, solve_labeled, transport, SolutionSet, REAL_TOL};
use realmono::tracker::{match_endpoint, track, ParamPath, TrackOptions, TrackStatus};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn sys(name: BuiltinName) -> PolySystem {
    builtin(name)
}

pub fn random_real_param(name: BuiltinName, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let w = default_window(name);
    w.lo.iter().zip(&w.hi).map(|(l, h)| rng.gen_range(*l..*h)).collect()
}

fn random_complex(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> CPoint {
    CPoint((0..n).map(|_| Complex64::new(rng.gen_range(-scale..scale), rng.gen_range(-scale..scale))).collect())
}

/// Labelled solutions at the builtin base point, using the builtin labels.
pub fn base_solutions(name: BuiltinName) -> SolutionSet {
    let p = RPoint(name.base_point()).to_complex();
    solve_labeled(&sys(name), &p, 0, name.real_labels().as_deref(), name.complex_order().as_deref()).expect("base solve")
}

// ---- polynomial systems ----

/// `F(conj x, conj p) = conj F(x, p)` entrywise, relative to `max(1, |F|)`.
pub fn check_conjugate_eval(name: BuiltinName, rng: &mut ChaCha8Rng) -> Result<(), String> {
    let s = sys(name);
    let x = random_complex(rng, s.num_vars(), 2.0);
    let scale = default_window(name).hi.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let p = random_complex(rng, s.num_params(), scale);
    let a = s.evaluate(&x.conj(), &p.conj()).map_err(|e| e.to_string())?;
    let b = s.evaluate(&x, &p).map_err(|e| e.to_string())?.conj();
    for (u, v) in a.iter().zip(b.iter()) {
        if (u - v).norm() > 1e-12 * v.norm().max(1.0) {
            return Err(format!("{name}: {u} vs {v}"));
        }
    }
    Ok(())
}

/// `J_x` against central differences with step 1e-6; relative Frobenius error.
pub fn check_jacobian(name: BuiltinName, rng: &mut ChaCha8Rng) -> Result<f64, String> {
    let s = sys(name);
    let n = s.num_vars();
    let x = random_complex(rng, n, 2.0);
    let p = RPoint(random_real_param(name, rng)).to_complex();
    let j = s.jacobian_x(&x, &p).map_err(|e| e.to_string())?;
    let h = 1e-6;
    let (mut err, mut norm) = (0.0f64, 0.0f64);
    for c in 0..n {
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp.0[c] += h;
        xm.0[c] -= h;
        let fp = s.evaluate(&xp, &p).map_err(|e| e.to_string())?;
        let fm = s.evaluate(&xm, &p).map_err(|e| e.to_string())?;
        for r in 0..n {
            let fd = (fp[r] - fm[r]) / (2.0 * h);
            err += (fd - j[r][c]).norm_sqr();
            norm += j[r][c].norm_sqr();
        }
    }
    let rel = err.sqrt() / norm.sqrt().max(1.0);
    if rel > 1e-5 {
        return Err(format!("{name}: relative jacobian error {rel:e}"));
    }
    Ok(rel)
}

// ---- solver ----

/// `D - R` is even at a random real parameter.
pub fn check_parity(name: BuiltinName, rng: &mut ChaCha8Rng) -> Result<bool, String> {
    let s = sys(name);
    let p = RPoint(random_real_param(name, rng)).to_complex();
    let seed = rng.gen();
    let Ok(set) = solve_at(&s, &p, seed).and_then(|set| classify_real(&s, &set, REAL_TOL)) else {
        return Ok(false);
    };
    if (set.d() - set.r()) % 2 != 0 {
        return Err(format!("{name} at {:?}: D = {}, R = {}", p.real_part().0, set.d(), set.r()));
    }
    Ok(true)
}

/// `D` at a random complex parameter equals `expected`.
pub fn check_degree(name: BuiltinName, expected: usize, rng: &mut ChaCha8Rng) -> Result<(), String> {
    let s = sys(name);
    let scale = default_window(name).hi.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let p = random_complex(rng, s.num_params(), scale);
    let set = solve_at(&s, &p, rng.gen()).map_err(|e| format!("{name}: {e}"))?;
    if set.d() != expected {
        return Err(format!("{name}: D = {} at a random complex point, expected {expected}", set.d()));
    }
    Ok(())
}

/// Transporting all solutions to a second generic point agrees with a fresh solve there.
pub fn check_resolve(name: BuiltinName, rng: &mut ChaCha8Rng) -> Result<bool, String> {
    let s = sys(name);
    let scale = default_window(name).hi.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let (p, q) = (random_complex(rng, s.num_params(), scale), random_complex(rng, s.num_params(), scale));
    let Ok(a) = solve_at(&s, &p, rng.gen()) else { return Ok(false) };
    let Ok(b) = solve_at(&s, &q, rng.gen()) else { return Ok(false) };
    let moved = transport(&s, &a, &q, rng.gen()).map_err(|e| e.to_string())?;
    if moved.iter().any(|o| o.status != TrackStatus::Success) {
        return Ok(false);
    }
    let mut hit = vec![false; b.d()];
    for o in &moved {
        let x = o.endpoint.as_ref().expect("success has an endpoint");
        match match_endpoint(x, &b.all_complex, 1e-6) {
            Ok(Some(j)) if !hit[j] => hit[j] = true,
            _ => return Err(format!("{name}: transported endpoint {:?} matches no fresh solution", x.0)),
        }
    }
    if moved.len() != b.d() {
        return Err(format!("{name}: transported {} solutions, fresh solve has {}", moved.len(), b.d()));
    }
    Ok(true)
}

// ---- tracker ----

/// Forward then backward along a short random real segment returns within 1e-8.
pub fn check_round_trip(name: BuiltinName, rng: &mut ChaCha8Rng) -> Result<bool, String> {
    let s = sys(name);
    let w = default_window(name);
    let p0 = random_real_param(name, rng);
    let Ok(set) = solve_at(&s, &RPoint(p0.clone()).to_complex(), rng.gen()) else { return Ok(false) };
    let x0 = set.all_complex[rng.gen_range(0..set.d())].clone();
    let len = 0.05 * w.lo.iter().zip(&w.hi).map(|(l, h)| (h - l).powi(2)).sum::<f64>().sqrt();
    let dir: Vec<f64> = (0..p0.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let dn = dir.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-12);
    let p1: Vec<f64> = p0.iter().zip(&dir).map(|(a, d)| a + len * d / dn).collect();
    let path = ParamPath::real_segment(&p0, &p1).map_err(|e| e.to_string())?;
    let opts = TrackOptions::default();
    let fwd = track(&s, &path, &x0, &opts).map_err(|e| e.to_string())?;
    let Some(x1) = fwd.endpoint else { return Ok(false) };
    let back = track(&s, &path.reversed(), &x1, &opts).map_err(|e| e.to_string())?;
    let Some(x2) = back.endpoint else {
        return Err(format!("{name}: forward succeeded but backward ended {:?}", back.status));
    };
    let d = x2.dist(&x0);
    if d > 1e-8 {
        return Err(format!("{name}: round trip drifted by {d:e}"));
    }
    if fwd.real_arithmetic && x1.max_imag() != 0.0 {
        return Err(format!("{name}: real-mode endpoint has a nonzero imaginary part"));
    }
    Ok(true)
}

/// A conjugate pair tracked in complex mode along a real segment stays conjugate.
pub fn check_conjugate_tracking(name: BuiltinName, rng: &mut ChaCha8Rng) -> Result<bool, String> {
    let s = sys(name);
    let p0 = random_real_param(name, rng);
    let Ok(set) = solve_at(&s, &RPoint(p0.clone()).to_complex(), rng.gen()) else { return Ok(false) };
    let Some(x) = set.all_complex.iter().find(|x| x.max_imag() > 1e-3) else { return Ok(false) };
    let p1 = random_real_param(name, rng);
    let path = ParamPath::real_segment(&p0, &p1).map_err(|e| e.to_string())?;
    let opts = TrackOptions::complex();
    let a = track(&s, &path, x, &opts).map_err(|e| e.to_string())?;
    let b = track(&s, &path, &x.conj(), &opts).map_err(|e| e.to_string())?;
    if a.status != b.status {
        return Err(format!("{name}: conjugate starts ended {:?} and {:?}", a.status, b.status));
    }
    if let (Some(ea), Some(eb)) = (&a.endpoint, &b.endpoint) {
        let d = ea.conj().dist(eb);
        if d > 1e-8 {
            return Err(format!("{name}: conjugate endpoints differ by {d:e}"));
        }
    }
    Ok(true)
}

/// A random complex loop permutes the base solutions bijectively.
pub fn check_loop_bijection(name: BuiltinName, base: &SolutionSet, rng: &mut ChaCha8Rng) -> Result<bool, String> {
    let s = sys(name);
    let path = random_loop(&base.param, rng.gen(), 4.0 * base.param.norm().max(1.0));
    match loop_permutation(&s, base, &path, &TrackOptions::complex()) {
        Ok(p) if p.degree() == base.d() => Ok(true),
        Ok(p) => Err(format!("{name}: loop permutation of degree {} on {} solutions", p.degree(), base.d())),
        Err(_) => Ok(false),
    }
}

// ---- complex monodromy ----

pub fn check_group_closure(g: &MonodromyGroup) -> Result<(), String> {
    if !g.contains(&Permutation::identity(g.degree)) {
        return Err("identity missing".into());
    }
    if g.elements.len() != g.order {
        return Err(format!("order {} but {} elements", g.order, g.elements.len()));
    }
    for a in &g.elements {
        if !g.contains(&a.inverse()) {
            return Err(format!("inverse of {a} missing"));
        }
        for b in &g.elements {
            if !g.contains(&a.then(b)) {
                return Err(format!("{a} then {b} missing"));
            }
        }
    }
    for (p, _) in &g.generators {
        if !g.contains(p) {
            return Err(format!("generator {p} missing"));
        }
    }
    Ok(())
}

/// Re-tracking each stored generator loop with another detour seed gives the same permutation.
pub fn check_generators_retrack(name: BuiltinName, base: &SolutionSet, g: &MonodromyGroup) -> Result<(), String> {
    let s = sys(name);
    let opts = TrackOptions { detour_seed: 0xD00D, ..TrackOptions::complex() };
    for (p, rec) in &g.generators {
        let path = ParamPath::through(rec.waypoints.clone()).map_err(|e| e.to_string())?;
        let q = loop_permutation(&s, base, &path, &opts).map_err(|e| format!("{name}: generator {p}: {e}"))?;
        if &q != p {
            return Err(format!("{name}: generator {p} re-tracked as {q}"));
        }
    }
    Ok(())
}

/// Group order at a random complex base point.
pub fn group_order_at_random_base(name: BuiltinName, rng: &mut ChaCha8Rng) -> Result<usize, String> {
    let s = sys(name);
    let base = solve_at(&s, &random_complex(rng, s.num_params(), 1.0), rng.gen()).map_err(|e| e.to_string())?;
    let g = monodromy_group(&s, &base, &GroupOptions { seed: rng.gen(), ..GroupOptions::default() }, &TrackOptions::complex());
    Ok(g.order)
}

// ---- partial permutations ----

pub fn random_partial(n: usize, rng: &mut ChaCha8Rng) -> PartialPermutation {
    let mut imgs: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        imgs.swap(i, rng.gen_range(0..=i));
    }
    let map = imgs.into_iter().map(|j| rng.gen_bool(0.7).then_some(j)).collect();
    PartialPermutation::new(map, n).expect("injective by construction")
}

/// Composition, inverse and restriction laws for partial permutations.
pub fn check_partial_laws(a: &PartialPermutation, b: &PartialPermutation, c: &PartialPermutation) -> Result<(), String> {
    let n = a.source();
    let id = PartialPermutation::identity(n);
    let ab_c = a.then(b).and_then(|ab| ab.then(c)).map_err(|e| e.to_string())?;
    let a_bc = b.then(c).and_then(|bc| a.then(&bc)).map_err(|e| e.to_string())?;
    if ab_c != a_bc {
        return Err(format!("composition not associative for {a}, {b}, {c}"));
    }
    if a.then(&id).map_err(|e| e.to_string())? != *a || id.then(a).map_err(|e| e.to_string())? != *a {
        return Err(format!("identity is not neutral for {a}"));
    }
    if a.inverse().inverse() != *a {
        return Err(format!("inverse is not an involution for {a}"));
    }
    let aa = a.then(&a.inverse()).map_err(|e| e.to_string())?;
    if aa.domain() != a.domain() || !aa.is_identity_on_domain() {
        return Err(format!("a then a^-1 is not the identity on the domain of {a}"));
    }
    let ab_inv = a.then(b).map_err(|e| e.to_string())?.inverse();
    if ab_inv != b.inverse().then(&a.inverse()).map_err(|e| e.to_string())? {
        return Err(format!("(ab)^-1 != b^-1 a^-1 for {a}, {b}"));
    }
    for r in a.restrictions() {
        if !r.domain().iter().all(|&i| r.get(i) == a.get(i)) {
            return Err(format!("restriction {r} disagrees with {a}"));
        }
    }
    Ok(())
}

/// The closure elements of an rms run, with their restrictions, are closed
/// under composition and inverse and contain the identity.
pub fn check_element_closure(res: &RmsResult) -> Result<(), String> {
    let maps: Vec<&PartialPermutation> = res.elements.iter().map(|e| &e.map).collect();
    let covered = |p: &PartialPermutation| maps.iter().any(|m| p.domain().iter().all(|&i| m.get(i) == p.get(i)));
    if !covered(&PartialPermutation::identity(res.r)) {
        return Err("identity missing from the closure".into());
    }
    for a in &maps {
        if !covered(&a.inverse()) {
            return Err(format!("inverse of {a} not covered"));
        }
        for b in &maps {
            let ab = a.then(b).map_err(|e| e.to_string())?;
            if !covered(&ab) {
                return Err(format!("{a} then {b} not covered"));
            }
        }
    }
    Ok(())
}

// ---- real monodromy structure ----

/// Downward consistency, `Q in G_k(Q)`, group closure and the transitivity chain.
pub fn check_structure(s: &RealMonodromyStructure) -> Result<(), String> {
    if !s.is_downward_consistent() {
        return Err("structure is not downward consistent".into());
    }
    for row in &s.g {
        for e in row {
            if !e.images.contains(&e.q) {
                return Err(format!("{:?} is missing from its own image set", e.q));
            }
        }
    }
    for k in 2..=s.r {
        if s.is_k_transitive(k) && !s.is_k_transitive(k - 1) {
            return Err(format!("{k}-transitive but not {}-transitive", k - 1));
        }
    }
    let group = s.real_monodromy_group();
    for a in &group {
        if !group.contains(&a.inverse()) || group.iter().any(|b| !group.contains(&a.then(b))) {
            return Err(format!("real monodromy group not closed at {a}"));
        }
    }
    if s.r > 0 && !group.contains(&Permutation::identity(s.r)) {
        return Err("real monodromy group lacks the identity".into());
    }
    Ok(())
}

/// Replays the witness words of up to `n` random closure elements.
pub fn check_witness_replay(name: BuiltinName, base: &SolutionSet, res: &RmsResult, n: usize, rng: &mut ChaCha8Rng) -> Result<(), String> {
    let s = sys(name);
    let opts = RmsOptions::default();
    for _ in 0..n.min(res.elements.len()) {
        let e = &res.elements[rng.gen_range(0..res.elements.len())];
        let got = replay_word(&s, &res.generators, &e.word, &base.labels, &opts).map_err(|err| err.to_string())?;
        if got != e.map {
            return Err(format!("{name}: word of length {} replays to {got}, stored {}", e.word.len(), e.map));
        }
    }
    Ok(())
}

// ---- region maps ----

pub fn region_map(name: BuiltinName, base: &SolutionSet, window: &Window, res: &[usize], opts: &MapOptions) -> RegionMap {
    let grid = grid_scan(&sys(name), base, window, res, &ScanOptions::default()).expect("grid scan");
    let bp: Vec<f64> = base.param.iter().map(|z| z.re).collect();
    build_region_map(&grid, &bp, opts).expect("region map")
}

/// Node counts have the parity of `D`.
pub fn check_region_parity(map: &RegionMap, d: usize) -> Result<(), String> {
    match map.grid.counts.iter().flatten().find(|&&c| !(d - c as usize).is_multiple_of(2)) {
        Some(c) => Err(format!("node count {c} has the wrong parity for D = {d}")),
        None => Ok(()),
    }
}

fn polyline_in_region(map: &RegionMap, region: usize, pts: &[Vec<f64>]) -> Result<(), String> {
    let g = &map.grid;
    for w in pts.windows(2) {
        let (a, b) = (g.grid_coords(&w[0]), g.grid_coords(&w[1]));
        let steps = (((b.0 - a.0).abs().max((b.1 - a.1).abs())) / 0.25).ceil().max(1.0) as usize;
        for k in 0..=steps {
            let t = k as f64 / steps as f64;
            let p = g.point_at(a.0 + t * (b.0 - a.0), a.1 + t * (b.1 - a.1));
            let node = g.nearest_node(&p);
            if map.region_of[node] != Some(region) {
                return Err(format!("polyline of region {region} passes node {node} in {:?}", map.region_of[node]));
            }
        }
    }
    Ok(())
}

/// Every stored route and hole loop stays inside its region.
pub fn check_routes(map: &RegionMap) -> Result<(), String> {
    for s in &map.sites {
        polyline_in_region(map, s.a, &s.route_a).map_err(|e| format!("site {}: {e}", s.id))?;
        polyline_in_region(map, s.b, &s.route_b).map_err(|e| format!("site {}: {e}", s.id))?;
    }
    for r in &map.regions {
        for h in &r.holes {
            polyline_in_region(map, r.id, &h.path)?;
            if h.path.first() != Some(&r.marked_point) || h.path.last() != Some(&r.marked_point) {
                return Err(format!("hole loop of region {} does not start and end at the marked point", r.id));
            }
        }
    }
    Ok(())
}

/// A fresh solve at each marked point reproduces the region's count.
pub fn check_marked_counts(name: BuiltinName, map: &RegionMap) -> Result<(), String> {
    let s = sys(name);
    for r in &map.regions {
        let p = RPoint(r.marked_point.clone()).to_complex();
        let set = solve_at(&s, &p, 7).and_then(|set| classify_real(&s, &set, REAL_TOL)).map_err(|e| format!("region {}: {e}", r.id))?;
        if set.r() != r.count as usize {
            return Err(format!("region {} has count {} but {} real solutions at its marked point", r.id, r.count, set.r()));
        }
    }
    Ok(())
}

pub fn rms(name: BuiltinName, map: &RegionMap, base: &SolutionSet) -> Result<RmsResult, String> {
    real_monodromy(&sys(name), map, base, &RmsOptions::default()).map_err(|e| e.to_string())
}

/// `(count, regions)` census as a sorted list.
pub fn census(map: &RegionMap) -> Vec<(u32, usize)> {
    map.census()
}

pub fn real_status_of_loop(name: BuiltinName, base: &SolutionSet, waypoints: &[Vec<f64>]) -> Vec<(TrackStatus, Option<usize>)> {
    let s = sys(name);
    let path = ParamPath::real_polyline(waypoints).expect("valid loop");
    let targets: Vec<CPoint> = base.labels.iter().map(|x| x.to_complex()).collect();
    base.labels
        .iter()
        .map(|x| {
            let out = track(&s, &path, &x.to_complex(), &TrackOptions::default()).expect("start is a solution");
            let to = out.endpoint.as_ref().and_then(|e| match_endpoint(e, &targets, 1e-6).ok().flatten());
            (out.status, to)
        })
        .collect()
}

/// Draws samples until `check` finds a usable one (at most 50 tries).
pub fn usable<F>(rng: &mut ChaCha8Rng, mut check: F) -> Result<(), String>
where
    F: FnMut(&mut ChaCha8Rng) -> Result<bool, String>,
{
    for _ in 0..50 {
        if check(rng)? {
            return Ok(());
        }
    }
    Err("no usable sample in 50 draws".into())
}
