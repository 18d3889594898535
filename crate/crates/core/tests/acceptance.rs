//! Acceptance criteria 1-8. Runs without the libtest harness and prints one
//! PASS/FAIL line per criterion; exits nonzero if any criterion fails.

mod common;

use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::Instant;

use num_complex::Complex64;
use realmono::cli::{self, default_window};
use realmono::cmono::{circle_loop, loop_permutation, monodromy_group, AffineLine, GroupOptions, MonodromyGroup, Permutation};
use realmono::polysys::{BuiltinName, CPoint, RPoint};
use realmono::regionmap::{build_region_map, MapOptions, RegionMap};
use realmono::rms::{ListingGroup, RealMonodromyStructure, RmsResult};
use realmono::solver::{solve_labeled, SolutionSet};
use realmono::tracker::{TrackOptions, TrackStatus};

use common::*;

type Check = Result<String, String>;

/// Results kept for the cross-cutting property criterion.
#[derive(Default)]
struct Computed {
    groups: Vec<(BuiltinName, MonodromyGroup)>,
    structures: Vec<(BuiltinName, SolutionSet, RmsResult)>,
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn perm(cycles: &[&[usize]], d: usize) -> Permutation {
    Permutation::from_cycles(d, cycles).expect("valid cycles")
}

fn group(name: BuiltinName, base: &SolutionSet) -> MonodromyGroup {
    monodromy_group(&sys(name), base, &GroupOptions::default(), &TrackOptions::complex())
}

fn circle_points(sign: f64, n: usize) -> Vec<Vec<f64>> {
    (0..=n).map(|k| 2.0 * PI * k as f64 / n as f64).map(|t| vec![sign * t.cos(), t.sin()]).collect()
}

type Listing = Vec<BTreeSet<(Vec<Vec<usize>>, Vec<Vec<usize>>)>>;

fn canonical(g: ListingGroup) -> (Vec<Vec<usize>>, Vec<Vec<usize>>) {
    let (mut qs, mut images) = (g.qs, g.images);
    qs.sort();
    images.sort();
    (qs, images)
}

/// Listing groups for `G_1..G_R` in a canonical order.
fn listing(s: &RealMonodromyStructure) -> Listing {
    (1..=s.r).map(|k| s.listing(k).into_iter().map(canonical).collect()).collect()
}

fn lg(qs: &[&[usize]], images: &[&[usize]]) -> ListingGroup {
    let mut qs: Vec<Vec<usize>> = qs.iter().map(|q| q.to_vec()).collect();
    let mut images: Vec<Vec<usize>> = images.iter().map(|q| q.to_vec()).collect();
    qs.sort();
    images.sort();
    ListingGroup { qs, images }
}

/// Group whose image set equals its list of tuples.
fn orbit(qs: &[&[usize]]) -> ListingGroup {
    lg(qs, qs)
}

fn expected(r: usize, rows: Vec<Vec<ListingGroup>>) -> Listing {
    let mut out: Listing = rows.into_iter().map(|v| v.into_iter().map(canonical).collect()).collect();
    out.resize(r, BTreeSet::new());
    out
}

fn show_listing(l: &Listing) -> String {
    l.iter().enumerate().map(|(k, gs)| format!("G_{}: {:?}", k + 1, gs)).collect::<Vec<_>>().join("; ")
}

fn labelled_at(name: BuiltinName, p: &[f64]) -> SolutionSet {
    solve_labeled(&sys(name), &RPoint(p.to_vec()).to_complex(), 0, None, None).expect("solve")
}

fn census_str(map: &RegionMap) -> String {
    map.census().iter().map(|(c, n)| format!("{c}:{n}")).collect::<Vec<_>>().join(" ")
}

fn criterion1(out: &mut Computed) -> Check {
    let name = BuiltinName::Ex21;
    let base = base_solutions(name);
    let g = group(name, &base);
    let k4: BTreeSet<Permutation> =
        [Permutation::identity(4), perm(&[&[1, 2], &[3, 4]], 4), perm(&[&[1, 3], &[2, 4]], 4), perm(&[&[1, 4], &[2, 3]], 4)].into();
    let got: BTreeSet<Permutation> = g.elements.iter().cloned().collect();
    ensure(got == k4, || format!("group {:?}", g.elements.iter().map(|p| p.to_string()).collect::<Vec<_>>()))?;
    let line = AffineLine { origin: CPoint::from_real(&[1.0, 0.0]), direction: CPoint::from_real(&[-1.0, 2.0]) };
    let mut found = Vec::new();
    for (t, want) in [(Complex64::new(0.2, 0.4), perm(&[&[1, 3], &[2, 4]], 4)), (Complex64::new(0.2, -0.4), perm(&[&[1, 4], &[2, 3]], 4))] {
        let path = circle_loop(t, Complex64::new(0.0, 0.0), 0.2, &line).map_err(|e| e.to_string())?;
        let p = loop_permutation(&sys(name), &base, &path, &TrackOptions::complex()).map_err(|e| e.to_string())?;
        ensure(p == want, || format!("loop around {t} gave {p}, expected {want}"))?;
        found.push(p.to_string());
    }
    out.groups.push((name, g));
    Ok(format!("order 4 = K4; circle loops {} and {}", found[0], found[1]))
}

fn criterion2(out: &mut Computed) -> Check {
    let name = BuiltinName::Ex21;
    let base = base_solutions(name);
    let res = real_status_of_loop(name, &base, &circle_points(1.0, 64));
    ensure(res == vec![(TrackStatus::Success, Some(1)), (TrackStatus::Success, Some(0))], || format!("unit circle outcomes {res:?}"))?;
    let want = vec![vec![1, 2], vec![2, 1]];
    let w = default_window(name);
    let declared = MapOptions { declared_punctures: vec![vec![0.0, 0.0]], ..MapOptions::default() };
    let mut notes = Vec::new();
    for (res, opts, how) in [(80, declared, "declared puncture, res 80"), (81, MapOptions::default(), "odd res 81")] {
        let map = region_map(name, &base, &w, &[res, res], &opts);
        let r = rms(name, &map, &base)?;
        let e = r.structure.entry(&[1, 2]).ok_or("no G_2 entry")?;
        ensure(e.images == want, || format!("{how}: G_2({{1,2}}) = {:?}", e.images))?;
        notes.push(how);
        out.structures.push((name, base.clone(), r));
    }
    Ok(format!("circle swaps 1<->2; G_2({{1,2}}) = {{(1,2),(2,1)}} with {}", notes.join(" and ")))
}

fn criterion3(out: &mut Computed) -> Check {
    let name = BuiltinName::Univariate;
    let w = default_window(name);
    let mut notes = Vec::new();
    for b in [-2.0, 2.0] {
        let base = labelled_at(name, &[b]);
        let map = region_map(name, &base, &w, &[201], &MapOptions::default());
        let mut by_x: Vec<(f64, u32)> = map.regions.iter().map(|r| (r.marked_point[0], r.count)).collect();
        by_x.sort_by(|a, b| a.0.total_cmp(&b.0));
        let counts: Vec<u32> = by_x.iter().map(|x| x.1).collect();
        ensure(counts == vec![2, 0, 2], || format!("census left to right {counts:?}"))?;
        let r = rms(name, &map, &base)?;
        ensure(r.real_group.len() == 1, || format!("real group at {b} has order {}", r.real_group.len()))?;
        notes.push(format!("trivial at p={b}"));
        out.structures.push((name, base, r));
    }
    Ok(format!("census {{2,0,2}}; real monodromy group {}", notes.join(", ")))
}

fn criterion4(out: &mut Computed) -> Check {
    let name = BuiltinName::Modified34;
    let base = base_solutions(name);
    let res = real_status_of_loop(name, &base, &circle_points(-1.0, 64));
    let statuses: Vec<TrackStatus> = res.iter().map(|x| x.0).collect();
    use TrackStatus::*;
    ensure(statuses == vec![Success, Success, Diverged, Diverged], || format!("loop outcomes {statuses:?}"))?;
    ensure(res[0].1 == Some(1) && res[1].1 == Some(0), || format!("survivors went to {:?}, {:?}", res[0].1, res[1].1))?;
    let map = region_map(name, &base, &default_window(name), &[101, 101], &MapOptions::default());
    let r = rms(name, &map, &base)?;
    let want = expected(4, vec![vec![orbit(&[&[1], &[2]])], vec![lg(&[&[1, 2]], &[&[1, 2], &[2, 1]])]]);
    let got = listing(&r.structure);
    ensure(got == want, || format!("listing {}", show_listing(&got)))?;
    out.structures.push((name, base, r));
    Ok("outcomes (S,S,D,D) with 1<->2; listing matches (G_3, G_4 trivial)".into())
}

fn criterion5(out: &mut Computed) -> Check {
    let name = BuiltinName::Kuramoto3;
    let base = base_solutions(name);
    let w = default_window(name);
    let nonzero = |m: &RegionMap| m.census().into_iter().filter(|c| c.0 > 0).collect::<Vec<_>>();
    let map = region_map(name, &base, &w, &[201, 201], &MapOptions::default());
    ensure(nonzero(&map) == vec![(2, 1), (4, 6), (6, 1)], || format!("census at 201: {}", census_str(&map)))?;
    let fine = region_map(name, &base, &w, &[401, 401], &MapOptions::default());
    ensure(map.census() == fine.census(), || format!("census 201: {}; 401: {}", census_str(&map), census_str(&fine)))?;

    let r = rms(name, &map, &base)?;
    let want = expected(6, vec![vec![orbit(&[&[2], &[3], &[4]])], vec![orbit(&[&[1, 2], &[1, 3], &[1, 4]])]]);
    let got = listing(&r.structure);
    ensure(got == want, || format!("listing {}", show_listing(&got)))?;

    let mut checked = 0;
    for region in map.regions.iter().filter(|x| x.count > 0) {
        let at = labelled_at(name, &region.marked_point);
        let m = build_region_map(&map.grid, &region.marked_point, &MapOptions::default()).map_err(|e| e.to_string())?;
        let rr = rms(name, &m, &at)?;
        ensure(rr.real_group.len() == 1, || {
            format!("region {} (count {}): real group order {}", region.id, region.count, rr.real_group.len())
        })?;
        checked += 1;
    }
    let g = group(name, &base);
    ensure(g.order == 720, || format!("complex group order {}", g.order))?;
    out.groups.push((name, g));
    out.structures.push((name, base, r));
    Ok(format!("census {} at 201 and 401; listing matches; {checked} real groups trivial; order 720", census_str(&map)))
}

fn rpr3_expected() -> Listing {
    expected(
        6,
        vec![
            vec![orbit(&[&[1], &[2], &[3]]), orbit(&[&[4], &[5], &[6]])],
            vec![
                orbit(&[&[1, 4], &[1, 5], &[1, 6], &[2, 5], &[2, 6], &[3, 4], &[3, 5]]),
                orbit(&[&[1, 3], &[2, 3]]),
                orbit(&[&[4, 6], &[5, 6]]),
            ],
            vec![
                orbit(&[&[1, 4, 6], &[1, 5, 6], &[2, 5, 6]]),
                orbit(&[&[1, 3, 6], &[2, 3, 6]]),
                orbit(&[&[3, 4, 6], &[3, 5, 6]]),
                // Forced by restricting the G_4 entry below; absent from the printed list.
                orbit(&[&[1, 3, 4], &[1, 3, 5], &[2, 3, 5]]),
            ],
            vec![orbit(&[&[1, 3, 4, 6], &[1, 3, 5, 6], &[2, 3, 5, 6]])],
        ],
    )
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n);
            out.push(q);
        }
    }
    out
}

fn criterion6(out: &mut Computed) -> Check {
    let name = BuiltinName::Rpr3;
    let base = base_solutions(name);
    ensure(base.r() == 6, || format!("{} real solutions at the base", base.r()))?;
    let g = group(name, &base);
    ensure(g.order == 720, || format!("complex group order {}", g.order))?;
    let map = region_map(name, &base, &default_window(name), &[201, 201], &MapOptions::default());
    let r = rms(name, &map, &base)?;
    let s = &r.structure;

    let mut blocks: Vec<usize> = s.partition_of_g1().iter().map(|b| b.len()).collect();
    blocks.sort();
    ensure(blocks == vec![3, 3], || format!("G_1 orbit sizes {blocks:?}"))?;
    let mut sizes: Vec<usize> = unordered_orbits(s, 2).iter().map(|o| o.len()).filter(|&n| n > 1).collect();
    sizes.sort();
    let fixed = 15 - sizes.iter().sum::<usize>();
    ensure(sizes == vec![2, 2, 7] && fixed == 4, || format!("G_2 orbit sizes {sizes:?}, {fixed} fixed pairs"))?;
    ensure(s.listing(5).is_empty() && s.listing(6).is_empty(), || "G_5 or G_6 nontrivial".into())?;

    let want = rpr3_expected();
    let matches: Vec<Vec<usize>> = permutations(6).into_iter().filter(|sigma| listing(&s.relabel(sigma)) == want).collect();
    ensure(!matches.is_empty(), || format!("no relabeling matches; computed {}", show_listing(&listing(s))))?;
    let census = census_str(&map);
    out.groups.push((name, g));
    out.structures.push((name, base, r));
    Ok(format!(
        "R=6, order 720, census {census}; {} relabelings match (e.g. {:?}); G_1 blocks 3+3; G_2 orbits 7,2,2 + 4 fixed",
        matches.len(),
        matches[0]
    ))
}

/// Classes of `k`-subsets reachable from one another, ignoring the order of images.
fn unordered_orbits(s: &RealMonodromyStructure, k: usize) -> Vec<BTreeSet<Vec<usize>>> {
    let mut out: Vec<BTreeSet<Vec<usize>>> = Vec::new();
    for e in &s.g[k - 1] {
        if out.iter().any(|o| o.contains(&e.q)) {
            continue;
        }
        let orbit: BTreeSet<Vec<usize>> = e
            .images
            .iter()
            .map(|t| {
                let mut t = t.clone();
                t.sort();
                t
            })
            .collect();
        out.push(orbit);
    }
    out
}

trait G1Orbits {
    fn partition_of_g1(&self) -> Vec<Vec<usize>>;
}

impl G1Orbits for RealMonodromyStructure {
    /// Orbits of `G_1`, singletons included.
    fn partition_of_g1(&self) -> Vec<Vec<usize>> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for e in &self.g[0] {
            if seen.insert(e.q[0]) {
                let orbit: Vec<usize> = e.images.iter().map(|t| t[0]).collect();
                seen.extend(orbit.iter().copied());
                out.push(orbit);
            }
        }
        out
    }
}

fn criterion7(out: &Computed) -> Check {
    let mut rng = rng(2024);
    let mut tally = Vec::new();
    for name in BuiltinName::ALL {
        for _ in 0..100 {
            check_conjugate_eval(name, &mut rng)?;
        }
        for _ in 0..20 {
            check_jacobian(name, &mut rng)?;
        }
        for _ in 0..50 {
            usable(&mut rng, |r| check_parity(name, r))?;
        }
    }
    tally.push("conjugation, jacobian, parity on all builtins".to_string());
    for k in 0..50 {
        let name = BuiltinName::ALL[k % BuiltinName::ALL.len()];
        usable(&mut rng, |r| check_round_trip(name, r))?;
    }
    tally.push("50 round trips".into());
    for _ in 0..100 {
        let n = 6;
        let (a, b, c) = (random_partial(n, &mut rng), random_partial(n, &mut rng), random_partial(n, &mut rng));
        check_partial_laws(&a, &b, &c)?;
    }
    for (name, g) in &out.groups {
        check_group_closure(g).map_err(|e| format!("{name}: {e}"))?;
    }
    tally.push(format!("{} group closures", out.groups.len()));
    for (name, base, r) in &out.structures {
        check_structure(&r.structure).map_err(|e| format!("{name}: {e}"))?;
        check_element_closure(r).map_err(|e| format!("{name}: {e}"))?;
        check_witness_replay(*name, base, r, 10, &mut rng)?;
    }
    tally.push(format!("{} structures consistent", out.structures.len()));
    Ok(tally.join("; "))
}

fn artifacts_without_timing(dir: &Path) -> Vec<(String, String)> {
    let mut files: Vec<(String, String)> = std::fs::read_dir(dir)
        .expect("output dir")
        .map(|e| {
            let p = e.expect("entry").path();
            let text = std::fs::read_to_string(&p).expect("artifact");
            let kept: Vec<&str> = text.lines().filter(|l| !l.trim_start().starts_with("\"wall_time_s\"")).collect();
            (p.file_name().unwrap().to_string_lossy().into_owned(), kept.join("\n"))
        })
        .collect();
    files.sort();
    files
}

fn criterion8() -> Check {
    let runs: [&[&str]; 3] = [
        &["report", "--system", "ex21", "--res", "41", "--seed", "5"],
        &["report", "--system", "modified34", "--res", "61", "--seed", "9"],
        &["cgroup", "--system", "kuramoto3", "--seed", "3"],
    ];
    let mut compared = 0;
    for args in runs {
        let dirs = [tempfile::tempdir().map_err(|e| e.to_string())?, tempfile::tempdir().map_err(|e| e.to_string())?];
        for d in &dirs {
            let mut argv = vec!["realmono".to_string()];
            argv.extend(args.iter().map(|s| s.to_string()));
            argv.extend(["--out".to_string(), d.path().display().to_string()]);
            let code = cli::run(argv);
            ensure(code == 0, || format!("{args:?} exited {code}"))?;
        }
        let (a, b) = (artifacts_without_timing(dirs[0].path()), artifacts_without_timing(dirs[1].path()));
        ensure(!a.is_empty() && a == b, || format!("{args:?}: artifacts differ"))?;
        compared += a.len();
    }
    Ok(format!("{compared} artifacts byte-identical across reruns (timing lines excluded)"))
}

fn main() {
    let mut computed = Computed::default();
    let mut failures = 0;
    let mut report = |n: usize, title: &str, f: &mut dyn FnMut(&mut Computed) -> Check, computed: &mut Computed| {
        let t = Instant::now();
        let r = catch_unwind(AssertUnwindSafe(|| f(computed))).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into()))
        });
        let secs = t.elapsed().as_secs_f64();
        match r {
            Ok(msg) => println!("criterion {n} PASS [{secs:.1}s] {title}: {msg}"),
            Err(msg) => {
                failures += 1;
                println!("criterion {n} FAIL [{secs:.1}s] {title}: {msg}");
            }
        }
    };
    report(1, "ex21 complex monodromy", &mut criterion1, &mut computed);
    report(2, "ex21 real loop and structure", &mut criterion2, &mut computed);
    report(3, "univariate census and trivial groups", &mut criterion3, &mut computed);
    report(4, "modified34 listing and loop outcomes", &mut criterion4, &mut computed);
    report(5, "kuramoto3 census, listing and groups", &mut criterion5, &mut computed);
    report(6, "rpr3 structure up to relabeling", &mut criterion6, &mut computed);
    report(7, "property suites", &mut |c| criterion7(c), &mut computed);
    report(8, "determinism", &mut |_| criterion8(), &mut computed);
    if failures > 0 {
        println!("{failures} criteria failed");
        std::process::exit(1);
    }
    println!("all 8 criteria passed");
}
