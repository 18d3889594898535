//! Command-line front end: argument parsing, pipelines, and JSON/SVG artifacts.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::cmono::{monodromy_group, GroupOptions, MonodromyGroup, Permutation};
use crate::polysys::{builtin, parse_system, BuiltinName, CPoint, PolyError, PolySystem, RPoint};
use crate::regionmap::{build_region_map, grid_scan, render_svg, MapOptions, RegionError, RegionMap, ScanOptions, Window};
use crate::rms::{real_monodromy, RmsError, RmsOptions, RmsResult};
use crate::solver::{check_generic, solve_labeled_tol, SolutionSet, SolverError, LABEL_MATCH_RADIUS, REAL_TOL};
use crate::tracker::{residual_and_min_sv, TrackOptions};

pub const SCHEMA: u32 = 1;
pub const EXIT_OK: i32 = 0;
pub const EXIT_NUMERICAL: i32 = 2;
pub const EXIT_INPUT: i32 = 3;
const MIN_RESOLUTION: usize = 21;
const DEFAULT_RESOLUTION: usize = 201;
const COMPLETENESS: &str = "lower bound: every entry has a witness loop; absent entries were not found at this resolution";

#[derive(Debug)]
pub enum CliError {
    Input(String),
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => EXIT_INPUT,
            CliError::Numerical(_) => EXIT_NUMERICAL,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Input(m) => write!(f, "invalid input: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl From<PolyError> for CliError {
    fn from(e: PolyError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<SolverError> for CliError {
    fn from(e: SolverError) -> Self {
        match e {
            SolverError::NonGenericParameter { .. }
            | SolverError::DegreeDrop { .. }
            | SolverError::BorderlineReal { .. }
            | SolverError::Track(_) => CliError::Numerical(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<RegionError> for CliError {
    fn from(e: RegionError) -> Self {
        match e {
            RegionError::BaseSingular => CliError::Numerical(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<RmsError> for CliError {
    fn from(e: RmsError) -> Self {
        match e {
            RmsError::BaseMismatch | RmsError::BadLoop(..) => CliError::Input(e.to_string()),
            RmsError::Solver(s) => s.into(),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "realmono", version, about = "Complex and real monodromy of parameterized polynomial systems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve at the base parameter and label the real solutions.
    Solve(CommonArgs),
    /// Estimate the complex monodromy group from random loops.
    Cgroup {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        group: GroupArgs,
    },
    /// Map regions of constant real-solution count over a window.
    Regions {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        region: RegionArgs,
    },
    /// Compute the real monodromy structure at the base parameter.
    Rstruct {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        region: RegionArgs,
        #[command(flatten)]
        rstruct: RstructArgs,
    },
    /// Run solve, cgroup, regions and rstruct and write every artifact.
    Report {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        group: GroupArgs,
        #[command(flatten)]
        region: RegionArgs,
        #[command(flatten)]
        rstruct: RstructArgs,
    },
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Builtin system name (ex21, univariate, modified34, kuramoto3, rpr3) or path to a system file.
    #[arg(long)]
    pub system: String,
    /// Base parameter values, comma separated (defaults to the builtin base point).
    #[arg(long, allow_hyphen_values = true)]
    pub base: Option<String>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Largest imaginary part counted as real.
    #[arg(long, default_value_t = REAL_TOL)]
    pub tol_real: f64,
    /// Singular-value threshold for singular endpoints.
    #[arg(long, default_value_t = 1e-8)]
    pub tol_sing: f64,
    /// Radius for matching endpoints to labels.
    #[arg(long, default_value_t = LABEL_MATCH_RADIUS)]
    pub tol_match: f64,
    /// Output directory.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// JSON file with the ordered list of real solutions to use as labels.
    #[arg(long)]
    pub labels: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct GroupArgs {
    /// Radius of the ball random loop corners are drawn from.
    #[arg(long)]
    pub loop_scale: Option<f64>,
    #[arg(long, default_value_t = 200)]
    pub max_loops: usize,
    /// Stop after this many consecutive loops add nothing.
    #[arg(long, default_value_t = 20)]
    pub stall: usize,
}

#[derive(Debug, Clone, Args)]
pub struct RegionArgs {
    /// Window as lo1,lo2,hi1,hi2 (or lo,hi for one parameter).
    #[arg(long, allow_hyphen_values = true)]
    pub window: Option<String>,
    /// Nodes per axis, one value or one per axis.
    #[arg(long)]
    pub res: Option<String>,
    /// Known singular parameter point to route around (repeatable).
    #[arg(long, allow_hyphen_values = true)]
    pub puncture: Vec<String>,
    /// Boundary edges between crossing sites.
    #[arg(long, default_value_t = 5)]
    pub spacing: usize,
}

#[derive(Debug, Clone, Args)]
pub struct RstructArgs {
    /// Reuse a regions.json artifact instead of scanning again.
    #[arg(long)]
    pub regions: Option<PathBuf>,
    /// JSON file with extra real loops at the base point (list of waypoint lists).
    #[arg(long)]
    pub loops: Option<PathBuf>,
}

/// Everything that determines a run's results; echoed into each artifact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub system: String,
    pub base: Vec<f64>,
    pub seed: u64,
    pub tol_real: f64,
    pub tol_sing: f64,
    pub tol_match: f64,
    pub labels: Option<Vec<Vec<f64>>>,
    pub window: Option<Window>,
    pub resolution: Option<Vec<usize>>,
    pub punctures: Vec<Vec<f64>>,
    pub spacing: Option<usize>,
    pub loop_scale: Option<f64>,
    pub max_loops: Option<usize>,
    pub stall: Option<usize>,
    pub loops: Option<Vec<Vec<Vec<f64>>>>,
    pub regions_file: Option<String>,
}

#[derive(Serialize)]
struct Artifact<'a, T: Serialize> {
    schema: u32,
    command: &'a str,
    version: &'a str,
    seed: u64,
    config: &'a RunConfig,
    result: T,
    wall_time_s: f64,
}

fn parse_list(s: &str, what: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| CliError::Input(format!("{what}: cannot parse '{t}' as a number"))))
        .collect::<Result<Vec<_>, _>>()
        .and_then(|v| if v.iter().all(|x| x.is_finite()) { Ok(v) } else { Err(CliError::Input(format!("{what}: values must be finite"))) })
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path, what: &str) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{what} {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{what} {}: {e}", path.display())))
}

/// System and builtin identity (if any) for a `--system` value.
pub fn load_system(spec: &str) -> Result<(PolySystem, Option<BuiltinName>), CliError> {
    if let Ok(name) = spec.parse::<BuiltinName>() {
        return Ok((builtin(name), Some(name)));
    }
    let path = Path::new(spec);
    if !path.exists() {
        return Err(CliError::Input(format!("'{spec}' is neither a builtin system nor a readable file")));
    }
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{spec}: {e}")))?;
    Ok((parse_system(&text)?, None))
}

/// Window used by `regions` when `--window` is not given.
pub fn default_window(name: BuiltinName) -> Window {
    let w = |lo: &[f64], hi: &[f64]| Window::new(lo.to_vec(), hi.to_vec()).expect("valid builtin window");
    match name {
        BuiltinName::Ex21 | BuiltinName::Modified34 => w(&[-2.0, -2.0], &[2.0, 2.0]),
        BuiltinName::Univariate => w(&[-3.0], &[3.0]),
        BuiltinName::Kuramoto3 => w(&[-0.7, -0.7], &[0.7, 0.7]),
        BuiltinName::Rpr3 => w(&[0.0, 0.0], &[1100.0, 1000.0]),
    }
}

/// Resolved inputs shared by all pipelines.
pub struct Session {
    pub sys: PolySystem,
    pub builtin: Option<BuiltinName>,
    pub config: RunConfig,
    pub out: PathBuf,
}

impl Session {
    pub fn new(common: &CommonArgs) -> Result<Self, CliError> {
        let (sys, name) = load_system(&common.system)?;
        let base = match (&common.base, name) {
            (Some(b), _) => parse_list(b, "--base")?,
            (None, Some(n)) => n.base_point(),
            (None, None) => return Err(CliError::Input("--base is required for systems read from a file".into())),
        };
        if base.len() != sys.num_params() {
            return Err(CliError::Input(format!("--base has {} values, the system has {} parameters", base.len(), sys.num_params())));
        }
        for (flag, v) in [("--tol-real", common.tol_real), ("--tol-sing", common.tol_sing), ("--tol-match", common.tol_match)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(CliError::Input(format!("{flag} must be positive")));
            }
        }
        let labels: Option<Vec<Vec<f64>>> = match &common.labels {
            Some(p) => Some(read_json(p, "label file")?),
            None => None,
        };
        let config = RunConfig {
            system: common.system.clone(),
            base,
            seed: common.seed,
            tol_real: common.tol_real,
            tol_sing: common.tol_sing,
            tol_match: common.tol_match,
            labels,
            window: None,
            resolution: None,
            punctures: Vec::new(),
            spacing: None,
            loop_scale: None,
            max_loops: None,
            stall: None,
            loops: None,
            regions_file: None,
        };
        Ok(Session { sys, builtin: name, config, out: common.out.clone() })
    }

    fn at_builtin_base(&self) -> Option<BuiltinName> {
        self.builtin.filter(|n| n.base_point() == self.config.base)
    }

    fn track_options(&self) -> TrackOptions {
        TrackOptions { singular_svd_tol: self.config.tol_sing, ..TrackOptions::default() }
    }

    /// Solutions at the base with labels from the label file, or the builtin
    /// labels when the base is the builtin's own base point.
    pub fn solve_base(&self) -> Result<SolutionSet, CliError> {
        let p = RPoint(self.config.base.clone()).to_complex();
        let user: Option<Vec<RPoint>> = self.config.labels.as_ref().map(|v| v.iter().map(|x| RPoint(x.clone())).collect());
        let builtin_labels = self.at_builtin_base().and_then(|n| n.real_labels());
        let labels = user.or(builtin_labels);
        let order: Option<Vec<CPoint>> = self.at_builtin_base().and_then(|n| n.complex_order());
        let set = solve_labeled_tol(&self.sys, &p, self.config.seed, self.config.tol_real, labels.as_deref(), order.as_deref())?;
        check_generic(&self.sys, &set, self.config.seed)?;
        Ok(set)
    }

    pub fn apply_region_args(&mut self, a: &RegionArgs) -> Result<(), CliError> {
        let dim = self.sys.num_params();
        let window = match (&a.window, self.builtin) {
            (Some(w), _) => {
                let v = parse_list(w, "--window")?;
                if v.len() != 2 * dim {
                    return Err(CliError::Input(format!("--window needs {} values", 2 * dim)));
                }
                Window::new(v[..dim].to_vec(), v[dim..].to_vec())?
            }
            (None, Some(n)) => default_window(n),
            (None, None) => return Err(CliError::Input("--window is required for systems read from a file".into())),
        };
        let res: Vec<usize> = match &a.res {
            Some(r) => {
                let v: Vec<usize> = r
                    .split(',')
                    .map(|t| t.trim().parse::<usize>().map_err(|_| CliError::Input(format!("--res: cannot parse '{t}'"))))
                    .collect::<Result<_, _>>()?;
                match v.len() {
                    1 => vec![v[0]; dim],
                    n if n == dim => v,
                    _ => return Err(CliError::Input(format!("--res needs 1 or {dim} values"))),
                }
            }
            None => vec![DEFAULT_RESOLUTION; dim],
        };
        if res.iter().any(|&n| n < MIN_RESOLUTION) {
            return Err(CliError::Input(format!("--res must be at least {MIN_RESOLUTION} per axis")));
        }
        if !window.contains(&self.config.base) {
            return Err(RegionError::BaseOutsideWindow.into());
        }
        let mut punctures = Vec::new();
        for p in &a.puncture {
            let v = parse_list(p, "--puncture")?;
            if v.len() != dim {
                return Err(CliError::Input(format!("--puncture needs {dim} values")));
            }
            punctures.push(v);
        }
        if a.spacing == 0 {
            return Err(CliError::Input("--spacing must be positive".into()));
        }
        self.config.window = Some(window);
        self.config.resolution = Some(res);
        self.config.punctures = punctures;
        self.config.spacing = Some(a.spacing);
        Ok(())
    }

    pub fn apply_group_args(&mut self, a: &GroupArgs) -> Result<(), CliError> {
        if a.loop_scale.is_some_and(|s| !(s.is_finite() && s > 0.0)) {
            return Err(CliError::Input("--loop-scale must be positive".into()));
        }
        if a.max_loops == 0 || a.stall == 0 {
            return Err(CliError::Input("--max-loops and --stall must be positive".into()));
        }
        self.config.loop_scale = a.loop_scale;
        self.config.max_loops = Some(a.max_loops);
        self.config.stall = Some(a.stall);
        Ok(())
    }

    pub fn apply_rstruct_args(&mut self, a: &RstructArgs) -> Result<(), CliError> {
        if let Some(p) = &a.loops {
            let loops: Vec<Vec<Vec<f64>>> = read_json(p, "loop file")?;
            let dim = self.sys.num_params();
            if loops.iter().flatten().any(|w| w.len() != dim) {
                return Err(CliError::Input(format!("loop file: every waypoint needs {dim} values")));
            }
            self.config.loops = Some(loops);
        }
        self.config.regions_file = a.regions.as_ref().map(|p| p.display().to_string());
        Ok(())
    }

    fn write_artifact<T: Serialize>(&self, file: &str, command: &str, result: T, started: Instant) -> Result<PathBuf, CliError> {
        let art = Artifact {
            schema: SCHEMA,
            command,
            version: env!("CARGO_PKG_VERSION"),
            seed: self.config.seed,
            config: &self.config,
            result,
            wall_time_s: started.elapsed().as_secs_f64(),
        };
        let text = serde_json::to_string_pretty(&art).map_err(|e| CliError::Numerical(e.to_string()))?;
        self.write_text(file, &(text + "\n"))
    }

    fn write_text(&self, file: &str, text: &str) -> Result<PathBuf, CliError> {
        std::fs::create_dir_all(&self.out).map_err(|e| CliError::Input(format!("{}: {e}", self.out.display())))?;
        let path = self.out.join(file);
        std::fs::write(&path, text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        Ok(path)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolutionRecord {
    /// Complex label (1-based).
    pub index: usize,
    pub value: CPoint,
    pub real_label: Option<usize>,
    pub residual: f64,
    pub min_singular_value: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveResult {
    pub system: PolySystem,
    pub param: Vec<f64>,
    pub d: usize,
    pub r: usize,
    pub solutions: Vec<SolutionRecord>,
    pub real_labels: Vec<RPoint>,
}

pub fn solve_result(sys: &PolySystem, set: &SolutionSet) -> SolveResult {
    let solutions = set
        .all_complex
        .iter()
        .enumerate()
        .map(|(k, x)| {
            let (residual, min_sv) = residual_and_min_sv(sys, x, &set.param);
            SolutionRecord { index: k + 1, value: x.clone(), real_label: set.real_label_of(k), residual, min_singular_value: min_sv }
        })
        .collect();
    SolveResult {
        system: sys.clone(),
        param: set.param.iter().map(|z| z.re).collect(),
        d: set.d(),
        r: set.r(),
        solutions,
        real_labels: set.labels.clone(),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GeneratorRecord {
    pub cycles: String,
    pub permutation: Permutation,
    pub loop_seed: u64,
    pub loop_waypoints: Vec<CPoint>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CgroupResult {
    pub degree: usize,
    pub order: usize,
    pub generators: Vec<GeneratorRecord>,
    /// Listed when the order is at most 1000.
    pub elements: Option<Vec<String>>,
    pub loops_tried: usize,
    pub loops_failed: usize,
}

pub fn cgroup_result(g: &MonodromyGroup) -> CgroupResult {
    CgroupResult {
        degree: g.degree,
        order: g.order,
        generators: g
            .generators
            .iter()
            .map(|(p, rec)| GeneratorRecord {
                cycles: p.to_string(),
                permutation: p.clone(),
                loop_seed: rec.seed,
                loop_waypoints: rec.waypoints.clone(),
            })
            .collect(),
        elements: (g.order <= 1000).then(|| g.elements.iter().map(|p| p.to_string()).collect()),
        loops_tried: g.loops_tried,
        loops_failed: g.loops_failed,
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegionsResult {
    /// `(count, regions)` pairs.
    pub census: Vec<(u32, usize)>,
    /// `(count, nodes)` pairs; singular nodes are not counted.
    pub histogram: Vec<(u32, usize)>,
    pub singular_nodes: usize,
    pub map: RegionMap,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RstructResult {
    /// Listed entries all have witnesses; a missing entry was not found at this resolution, which does not rule it out.
    pub completeness: String,
    pub report: String,
    pub rms: RmsResult,
}

pub fn cmd_solve(s: &Session) -> Result<SolutionSet, CliError> {
    let t = Instant::now();
    let set = s.solve_base()?;
    let path = s.write_artifact("solutions.json", "solve", solve_result(&s.sys, &set), t)?;
    println!("{} solutions, {} real -> {}", set.d(), set.r(), path.display());
    Ok(set)
}

pub fn cmd_cgroup(s: &Session, base: &SolutionSet) -> Result<MonodromyGroup, CliError> {
    let t = Instant::now();
    let opts = GroupOptions {
        max_loops: s.config.max_loops.unwrap_or(200),
        stall: s.config.stall.unwrap_or(20),
        seed: s.config.seed,
        loop_scale: s.config.loop_scale,
    };
    let track = TrackOptions { real_mode: false, ..s.track_options() };
    let g = monodromy_group(&s.sys, base, &opts, &track);
    let path = s.write_artifact("cgroup.json", "cgroup", cgroup_result(&g), t)?;
    println!("monodromy group order {} (degree {}) -> {}", g.order, g.degree, path.display());
    Ok(g)
}

fn map_options(s: &Session) -> MapOptions {
    MapOptions { spacing: s.config.spacing.unwrap_or(5), declared_punctures: s.config.punctures.clone(), ..MapOptions::default() }
}

pub fn compute_regions(s: &Session, base: &SolutionSet) -> Result<RegionMap, CliError> {
    let window = s.config.window.as_ref().expect("region args applied");
    let res = s.config.resolution.as_ref().expect("region args applied");
    let scan = ScanOptions { seed: s.config.seed, real_tol: s.config.tol_real, singular_tol: s.config.tol_sing };
    let grid = grid_scan(&s.sys, base, window, res, &scan)?;
    Ok(build_region_map(&grid, &s.config.base, &map_options(s))?)
}

pub fn cmd_regions(s: &Session, base: &SolutionSet) -> Result<RegionMap, CliError> {
    let t = Instant::now();
    let map = compute_regions(s, base)?;
    let result = RegionsResult {
        census: map.census(),
        histogram: map.grid.histogram(),
        singular_nodes: map.grid.counts.iter().filter(|c| c.is_none()).count(),
        map,
    };
    let path = s.write_artifact("regions.json", "regions", &result, t)?;
    s.write_text("regions.svg", &render_svg(&result.map))?;
    println!("count  regions");
    for (c, n) in &result.census {
        println!("{c:>5}  {n}");
    }
    println!("{} crossing sites, {} singular nodes -> {}", result.map.sites.len(), result.singular_nodes, path.display());
    Ok(result.map)
}

fn load_regions(path: &Path) -> Result<RegionMap, CliError> {
    let v: Value = read_json(path, "regions file")?;
    let map =
        v.get("result").and_then(|r| r.get("map")).cloned().ok_or_else(|| CliError::Input(format!("{}: no result.map", path.display())))?;
    serde_json::from_value(map).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

pub fn cmd_rstruct(s: &Session, base: &SolutionSet, map: Option<RegionMap>) -> Result<RmsResult, CliError> {
    let t = Instant::now();
    let map = match (map, &s.config.regions_file) {
        (Some(m), _) => m,
        (None, Some(f)) => load_regions(Path::new(f))?,
        (None, None) => compute_regions(s, base)?,
    };
    let opts = RmsOptions {
        track: s.track_options(),
        seed: s.config.seed,
        match_radius: s.config.tol_match,
        real_tol: s.config.tol_real,
        user_loops: s.config.loops.clone().unwrap_or_default(),
        ..RmsOptions::default()
    };
    let rms = real_monodromy(&s.sys, &map, base, &opts)?;
    let report = rms.structure.report();
    let result = RstructResult { completeness: COMPLETENESS.into(), report: report.clone(), rms };
    let path = s.write_artifact("rstruct.json", "rstruct", &result, t)?;
    let transitive: Vec<String> = result.rms.transitive.iter().enumerate().map(|(k, t)| format!("{}:{}", k + 1, t)).collect();
    let pairs: Vec<String> = result.rms.assembly_mode_changes.iter().map(|(a, b)| format!("{{{a},{b}}}")).collect();
    let text = format!(
        "{report}k-transitive: {}\nassembly mode changes: {}\nreal monodromy group order: {}\n",
        transitive.join(" "),
        if pairs.is_empty() { "none".to_string() } else { pairs.join(" ") },
        result.rms.real_group.len()
    );
    s.write_text("rstruct.txt", &text)?;
    print!("{text}");
    println!("-> {}", path.display());
    Ok(result.rms)
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Solve(common) => {
            let s = Session::new(&common)?;
            cmd_solve(&s)?;
        }
        Command::Cgroup { common, group } => {
            let mut s = Session::new(&common)?;
            s.apply_group_args(&group)?;
            let base = s.solve_base()?;
            cmd_cgroup(&s, &base)?;
        }
        Command::Regions { common, region } => {
            let mut s = Session::new(&common)?;
            s.apply_region_args(&region)?;
            let base = s.solve_base()?;
            cmd_regions(&s, &base)?;
        }
        Command::Rstruct { common, region, rstruct } => {
            let mut s = Session::new(&common)?;
            s.apply_region_args(&region)?;
            s.apply_rstruct_args(&rstruct)?;
            let base = s.solve_base()?;
            cmd_rstruct(&s, &base, None)?;
        }
        Command::Report { common, group, region, rstruct } => {
            let mut s = Session::new(&common)?;
            s.apply_group_args(&group)?;
            s.apply_region_args(&region)?;
            s.apply_rstruct_args(&rstruct)?;
            let base = cmd_solve(&s)?;
            cmd_cgroup(&s, &base)?;
            let map = match &s.config.regions_file {
                Some(f) => load_regions(Path::new(f))?,
                None => cmd_regions(&s, &base)?,
            };
            cmd_rstruct(&s, &base, Some(map))?;
        }
    }
    Ok(())
}

/// Parses `args` (including the program name) and runs; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
