//! The `curve3dvg` command line: `fit`, `render`, `metrics`, `schedule` and `viz`.
//!
//! Every parsed invocation writes one `manifest.json` describing the run.
//! Exit codes: 0 success, 1 usage or validation error, 2 runtime error.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::camera::{default_ring, Camera, CameraSamplerConfig};
use crate::error::{Error, Result};
use crate::geometry::{PathKind, Scene3DVG};
use crate::guidance::{
    schedule_trace, GuidanceSource, IngestedGuidance, OracleGuidance, OracleScene, ScheduleConfig,
};
use crate::optimize::{
    adjacent_view_consistency, chamfer_distance, distance_by_name, fit, init_scene, load_net,
    render_scene_view, save_checkpoint, FitConfig, FitSettings, InitStrategy, LossConfig,
    OpacityMode, NET_FILE, SCENE_FILE,
};
use crate::project::project_scene_clipped;
use crate::raster::{export_svg, render_view, write_png, Canvas, Image};
use crate::visibility::{
    curve_importance_filter, path_visible, scene_votes, DepthSource, ImportanceNet, OpacityState,
    VisibilityConfig,
};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const THREADS_ENV: &str = "CURVE3DVG_THREADS";

/// Streams of the run seed used by the CLI, apart from the guidance streams.
const INIT_STREAM: u64 = 3;

/// Samples per curve for the Chamfer distance in `metrics`.
const CHAMFER_SAMPLES: usize = 32;

#[derive(Parser, Debug)]
#[command(name = "curve3dvg", version, about = "Fit, render and inspect 3D vector graphics scenes")]
struct Cli {
    /// Where to write the run manifest (default: <out>/manifest.json, else ./manifest.json).
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fit a scene to oracle renders or to ingested guidance.
    Fit(FitArgs),
    /// Render a scene from a camera ring or explicit cameras to SVG/PNG.
    Render(RenderArgs),
    /// Adjacent-view consistency (and optional Chamfer distance) of a scene.
    Metrics(MetricsArgs),
    /// Inspect the timestep / guidance-scale schedule.
    Schedule(ScheduleArgs),
    /// Per-view importance heat maps and visibility vote overlays.
    Viz(VizArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum KindArg {
    Sketch,
    Iconography,
}

impl From<KindArg> for PathKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Sketch => PathKind::Sketch,
            KindArg::Iconography => PathKind::Iconography,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum InitArg {
    FarthestPoint,
    Random,
}

impl From<InitArg> for InitStrategy {
    fn from(i: InitArg) -> Self {
        match i {
            InitArg::FarthestPoint => InitStrategy::FarthestPoint,
            InitArg::Random => InitStrategy::Random,
        }
    }
}

#[derive(Args, Debug)]
struct FitArgs {
    /// Analytic oracle preset: sphere, box or sphere-box.
    #[arg(long, required_unless_present = "guidance", conflicts_with = "guidance")]
    oracle: Option<String>,
    /// Directory of pre-rendered guidance steps.
    #[arg(long)]
    guidance: Option<PathBuf>,
    #[arg(long)]
    paths: Option<usize>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
    /// JSON run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    kind: Option<KindArg>,
    #[arg(long, value_enum)]
    init: Option<InitArg>,
    /// Square guidance resolution for oracle runs.
    #[arg(long)]
    resolution: Option<u32>,
    /// Cameras per step.
    #[arg(long)]
    batch: Option<usize>,
}

#[derive(Args, Debug)]
struct ViewArgs {
    /// `ring:K` for K cameras on the default evaluation ring.
    #[arg(long, conflicts_with = "cameras")]
    views: Option<String>,
    /// JSON file with one camera or an array of cameras.
    #[arg(long)]
    cameras: Option<PathBuf>,
    /// Square output resolution; overrides the camera file's resolution.
    #[arg(long)]
    resolution: Option<u32>,
}

#[derive(Args, Debug)]
struct RenderArgs {
    #[arg(long)]
    scene: PathBuf,
    /// Importance network; without it every path is drawn opaque.
    #[arg(long)]
    net: Option<PathBuf>,
    #[command(flatten)]
    views: ViewArgs,
    #[arg(long)]
    svg: bool,
    #[arg(long)]
    png: bool,
    #[arg(long)]
    out: PathBuf,
    /// Draw every path opaque, ignoring visibility.
    #[arg(long)]
    show_invisible: bool,
    /// Oracle preset providing depth for visibility votes.
    #[arg(long)]
    oracle: Option<String>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct MetricsArgs {
    #[arg(long)]
    scene: PathBuf,
    #[arg(long)]
    net: Option<PathBuf>,
    #[command(flatten)]
    views: ViewArgs,
    #[arg(long)]
    oracle: Option<String>,
    /// Registered image distance.
    #[arg(long, default_value = "pyramid-l2")]
    distance: String,
    /// Reference scene for the Chamfer distance.
    #[arg(long)]
    reference: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ScheduleArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the full `step,t,cfg_scale` trace as CSV.
    #[arg(long)]
    dump: bool,
    /// Directory for schedule.csv; stdout if absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct VizArgs {
    #[arg(long)]
    scene: PathBuf,
    #[arg(long)]
    net: PathBuf,
    #[command(flatten)]
    views: ViewArgs,
    #[arg(long)]
    oracle: Option<String>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
}

/// Configuration file layout; every section is optional.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub schedule: ScheduleConfig,
    pub fit: FitConfig,
    pub visibility: VisibilityConfig,
    pub loss: LossConfig,
    pub cameras: CameraSamplerConfig,
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            Some(p) => Ok(serde_json::from_str(&read_text(p)?)?),
            None => Ok(Self::default()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.schedule.validate()?;
        self.fit.validate()?;
        self.visibility.validate()?;
        self.loss.validate()?;
        self.cameras.validate()
    }
}

/// Record of one CLI run, enough to reproduce its outputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub argv: Vec<String>,
    pub config: serde_json::Value,
    pub seed: Option<u64>,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub engine_version: String,
    pub wall_clock_seconds: f64,
    pub exit_code: i32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Default)]
struct RunRecord {
    config: serde_json::Value,
    seed: Option<u64>,
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
}

impl RunRecord {
    fn snapshot(&mut self, cfg: &RunConfig) {
        self.config = serde_json::to_value(cfg).unwrap_or(serde_json::Value::Null);
    }

    fn input(&mut self, p: &Path) {
        self.inputs.push(p.to_path_buf());
    }

    fn output(&mut self, p: PathBuf) -> PathBuf {
        self.outputs.push(p.clone());
        p
    }
}

/// Runs one command line (including the program name) and returns its exit code.
pub fn run_command<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let start = Instant::now();
    let mut record = RunRecord::default();
    let result = configure_threads().and_then(|_| dispatch(&cli.command, &mut record));
    let code = match &result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_validation() {
                1
            } else {
                2
            }
        }
    };
    let manifest = RunManifest {
        command: command_name(&cli.command).into(),
        argv: argv.iter().map(|a| a.to_string_lossy().into_owned()).collect(),
        config: record.config,
        seed: record.seed,
        inputs: record.inputs,
        outputs: record.outputs,
        engine_version: env!("CARGO_PKG_VERSION").into(),
        wall_clock_seconds: start.elapsed().as_secs_f64(),
        exit_code: code,
        error: result.as_ref().err().map(ToString::to_string),
    };
    let path = cli
        .manifest
        .clone()
        .or_else(|| out_dir(&cli.command).map(|d| d.join(MANIFEST_FILE)))
        .unwrap_or_else(|| PathBuf::from(MANIFEST_FILE));
    match write_manifest(&path, &manifest) {
        Ok(()) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if code == 0 {
                2
            } else {
                code
            }
        }
    }
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Fit(_) => "fit",
        Command::Render(_) => "render",
        Command::Metrics(_) => "metrics",
        Command::Schedule(_) => "schedule",
        Command::Viz(_) => "viz",
    }
}

fn out_dir(c: &Command) -> Option<&Path> {
    match c {
        Command::Fit(a) => Some(&a.out),
        Command::Render(a) => Some(&a.out),
        Command::Metrics(a) => a.out.as_deref(),
        Command::Schedule(a) => a.out.as_deref(),
        Command::Viz(a) => Some(&a.out),
    }
}

fn write_manifest(path: &Path, m: &RunManifest) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let text = serde_json::to_string_pretty(m)?;
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

/// Caps rayon's worker count from the environment. The global pool can only
/// be built once per process; later calls keep the existing pool.
fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n >= 1)
        .ok_or_else(|| Error::Config(format!("{THREADS_ENV}={raw:?} is not a positive integer")))?;
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

fn dispatch(c: &Command, rec: &mut RunRecord) -> Result<()> {
    match c {
        Command::Fit(a) => cmd_fit(a, rec),
        Command::Render(a) => cmd_render(a, rec),
        Command::Metrics(a) => cmd_metrics(a, rec),
        Command::Schedule(a) => cmd_schedule(a, rec),
        Command::Viz(a) => cmd_viz(a, rec),
    }
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn load_config(path: Option<&PathBuf>, rec: &mut RunRecord) -> Result<RunConfig> {
    if let Some(p) = path {
        rec.input(p);
    }
    RunConfig::load(path.map(PathBuf::as_path))
}

fn load_scene(path: &Path, rec: &mut RunRecord) -> Result<Scene3DVG> {
    rec.input(path);
    Scene3DVG::from_json(&read_text(path)?)
}

/// Network from `path`, or a constant "important" network when absent.
fn load_net_or_constant(path: Option<&PathBuf>, vis: &VisibilityConfig, rec: &mut RunRecord) -> Result<ImportanceNet> {
    match path {
        Some(p) => {
            rec.input(p);
            load_net(p)
        }
        None => Ok(ImportanceNet::constant(vis.bands, vis.hidden, 0.999)),
    }
}

fn parse_ring(spec: &str) -> Result<usize> {
    spec.strip_prefix("ring:")
        .and_then(|k| k.parse().ok())
        .filter(|&k: &usize| k >= 1)
        .ok_or_else(|| Error::Argument(format!("--views expects ring:K with K >= 1, got {spec:?}")))
}

fn load_cameras(path: &Path) -> Result<Vec<Camera>> {
    let value: serde_json::Value = serde_json::from_str(&read_text(path)?)?;
    let cams: Vec<Camera> = if value.is_array() {
        serde_json::from_value(value)?
    } else {
        vec![serde_json::from_value(value)?]
    };
    if cams.is_empty() {
        return Err(Error::Argument(format!("{} holds no cameras", path.display())));
    }
    Ok(cams)
}

fn resolve_views(v: &ViewArgs, default_k: usize, default_res: u32, rec: &mut RunRecord) -> Result<Vec<Camera>> {
    if v.resolution == Some(0) {
        return Err(Error::Argument("--resolution must be positive".into()));
    }
    match &v.cameras {
        Some(path) => {
            rec.input(path);
            let cams = load_cameras(path)?;
            match v.resolution {
                Some(r) => cams.iter().map(|c| c.with_resolution(r, r)).collect(),
                None => Ok(cams),
            }
        }
        None => {
            let k = v.views.as_deref().map(parse_ring).transpose()?.unwrap_or(default_k);
            let r = v.resolution.unwrap_or(default_res);
            default_ring(k, r, r)
        }
    }
}

fn oracle_arg(name: Option<&String>) -> Result<Option<OracleScene>> {
    name.map(|n| OracleScene::preset(n)).transpose()
}

/// Initial scene and importance network of a fit run, drawn from the run seed.
pub fn initial_state(cfg: &RunConfig, oracle: Option<&OracleScene>) -> Result<(Scene3DVG, ImportanceNet)> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.fit.seed);
    rng.set_stream(INIT_STREAM);
    let scene = init_scene(cfg.fit.kind, cfg.fit.n_paths, cfg.fit.init, oracle, &mut rng)?;
    let net = ImportanceNet::new(&mut rng, cfg.visibility.bands, cfg.visibility.hidden);
    Ok((scene, net))
}

fn cmd_fit(a: &FitArgs, rec: &mut RunRecord) -> Result<()> {
    let mut cfg = load_config(a.config.as_ref(), rec)?;
    let oracle = oracle_arg(a.oracle.as_ref())?;
    let mut ingested = match &a.guidance {
        Some(dir) => {
            rec.input(dir);
            Some(IngestedGuidance::load(dir)?)
        }
        None => None,
    };

    if let Some(s) = a.seed {
        cfg.fit.seed = s;
    }
    if let Some(n) = a.paths {
        cfg.fit.n_paths = n;
    }
    if let Some(k) = a.kind {
        cfg.fit.kind = k.into();
    }
    if let Some(b) = a.batch {
        cfg.fit.batch_cameras = b;
    }
    if let Some(r) = a.resolution {
        cfg.cameras.width = r;
        cfg.cameras.height = r;
    }
    match a.init {
        Some(i) => cfg.fit.init = i.into(),
        // farthest-point sampling needs oracle geometry
        None if oracle.is_none() => cfg.fit.init = InitStrategy::Random,
        None => {}
    }
    let steps = match (&ingested, a.steps) {
        (_, Some(s)) => s,
        (Some(g), None) => g.n_steps(),
        (None, None) => cfg.fit.total_steps,
    };
    if let Some(g) = &ingested {
        if steps > g.n_steps() {
            return Err(Error::Config(format!(
                "{steps} steps requested but the guidance holds {}",
                g.n_steps()
            )));
        }
    }
    cfg.fit.total_steps = steps;
    cfg.schedule.total_steps = steps;
    rec.seed = Some(cfg.fit.seed);
    rec.snapshot(&cfg);
    cfg.validate()?;
    if cfg.fit.init == InitStrategy::FarthestPoint && oracle.is_none() {
        return Err(Error::Config("--init farthest-point needs --oracle".into()));
    }

    let (scene, net) = initial_state(&cfg, oracle.as_ref())?;

    let mut oracle_source;
    let source: &mut dyn GuidanceSource = match (&mut ingested, oracle) {
        (Some(g), _) => g,
        (None, Some(o)) => {
            oracle_source = OracleGuidance::new(o, cfg.schedule.clone(), cfg.cameras.clone(), cfg.fit.seed)?;
            &mut oracle_source
        }
        (None, None) => unreachable!("clap requires --oracle or --guidance"),
    };

    create_dir(&a.out)?;
    let log_path = rec.output(a.out.join("log.jsonl"));
    let mut log = BufWriter::new(File::create(&log_path).map_err(|e| Error::io(&log_path, e))?);
    let every = cfg.fit.checkpoint_every;
    let mut checkpoints = Vec::new();
    let settings = FitSettings {
        fit: cfg.fit.clone(),
        visibility: cfg.visibility.clone(),
        loss: cfg.loss.clone(),
    };
    let mut hook = |r: &crate::optimize::StepLog, s: &Scene3DVG, n: &ImportanceNet| -> Result<()> {
        let line = serde_json::to_string(r)?;
        writeln!(log, "{line}").map_err(|e| Error::io(&log_path, e))?;
        if every > 0 && (r.step + 1) % every == 0 {
            let dir = a.out.join("checkpoints").join(format!("step_{:05}", r.step + 1));
            save_checkpoint(&dir, s, n)?;
            checkpoints.push(dir);
        }
        Ok(())
    };
    let result = fit(scene, net, source, &settings, Some(&mut hook))?;
    log.flush().map_err(|e| Error::io(&log_path, e))?;
    rec.outputs.extend(checkpoints);
    save_checkpoint(&a.out, &result.scene, &result.net)?;
    rec.output(a.out.join(SCENE_FILE));
    rec.output(a.out.join(NET_FILE));
    if let Some(last) = result.log.last() {
        println!("fit: {} steps, final loss {:.6}", result.log.len(), last.loss_total);
    }
    Ok(())
}

fn cmd_render(a: &RenderArgs, rec: &mut RunRecord) -> Result<()> {
    let cfg = load_config(a.config.as_ref(), rec)?;
    rec.snapshot(&cfg);
    cfg.visibility.validate()?;
    let scene = load_scene(&a.scene, rec)?;
    let net = load_net_or_constant(a.net.as_ref(), &cfg.visibility, rec)?;
    let cams = resolve_views(&a.views, 15, 512, rec)?;
    let oracle = oracle_arg(a.oracle.as_ref())?;
    let mode = if a.show_invisible || a.net.is_none() && oracle.is_none() {
        OpacityMode::AllHigh
    } else {
        OpacityMode::VisibilityAware
    };
    let (svg, png) = if a.svg || a.png { (a.svg, a.png) } else { (true, true) };
    create_dir(&a.out)?;
    for (i, cam) in cams.iter().enumerate() {
        let depth = oracle.as_ref().map(|o| o as &dyn DepthSource);
        let view = render_scene_view(&scene, &net, cam, mode, &cfg.visibility, depth)?;
        if svg {
            let canvas = Canvas::new(cam.width() as usize, cam.height() as usize)?;
            let visible: Vec<bool> = view
                .source
                .iter()
                .map(|&p| view.states[p] != OpacityState::FixedLow)
                .collect();
            let path = rec.output(a.out.join(format!("view_{i:02}.svg")));
            write_text(&path, &export_svg(&view.scene2d, &canvas, &visible))?;
        }
        if png {
            let path = rec.output(a.out.join(format!("view_{i:02}.png")));
            write_png(&path, &view.image)?;
        }
    }
    println!("render: {} views", cams.len());
    Ok(())
}

#[derive(Serialize)]
struct MetricsReport {
    distance: String,
    views: usize,
    consistency_all_high: f64,
    consistency_visibility_aware: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    chamfer: Option<f64>,
}

fn cmd_metrics(a: &MetricsArgs, rec: &mut RunRecord) -> Result<()> {
    let cfg = load_config(a.config.as_ref(), rec)?;
    rec.snapshot(&cfg);
    cfg.visibility.validate()?;
    let scene = load_scene(&a.scene, rec)?;
    let net = load_net_or_constant(a.net.as_ref(), &cfg.visibility, rec)?;
    let cams = resolve_views(&a.views, 15, 256, rec)?;
    let oracle = oracle_arg(a.oracle.as_ref())?;
    let distance = distance_by_name(&a.distance)?
        .ok_or_else(|| Error::Argument("--distance must name a distance, not \"off\"".into()))?;
    let depth = oracle.as_ref().map(|o| o as &(dyn DepthSource + Sync));
    let consistency = |mode| adjacent_view_consistency(&scene, &net, &cams, &*distance, mode, &cfg.visibility, depth);
    let chamfer = match &a.reference {
        Some(p) => Some(chamfer_distance(&scene, &load_scene(p, rec)?, CHAMFER_SAMPLES)?),
        None => None,
    };
    let report = MetricsReport {
        distance: a.distance.clone(),
        views: cams.len(),
        consistency_all_high: consistency(OpacityMode::AllHigh)?,
        consistency_visibility_aware: consistency(OpacityMode::VisibilityAware)?,
        chamfer,
    };
    let text = serde_json::to_string_pretty(&report)?;
    println!("{text}");
    if let Some(out) = &a.out {
        create_dir(out)?;
        let path = rec.output(out.join("metrics.json"));
        write_text(&path, &(text + "\n"))?;
    }
    Ok(())
}

/// CSV `step,t,cfg_scale` with shortest round-trip float formatting.
pub fn schedule_csv(cfg: &ScheduleConfig, seed: u64) -> Result<String> {
    let mut s = String::from("step,t,cfg_scale\n");
    for (step, t, scale) in schedule_trace(cfg, seed)? {
        s.push_str(&format!("{step},{t},{scale}\n"));
    }
    Ok(s)
}

fn cmd_schedule(a: &ScheduleArgs, rec: &mut RunRecord) -> Result<()> {
    let mut cfg = load_config(a.config.as_ref(), rec)?;
    if let Some(s) = a.steps {
        cfg.schedule.total_steps = s;
    }
    rec.seed = Some(a.seed);
    rec.snapshot(&cfg);
    cfg.schedule.validate()?;
    if !a.dump {
        let s = &cfg.schedule;
        let (lo0, hi0) = s.t_window(0);
        let (lo1, hi1) = s.t_window(s.total_steps.saturating_sub(1));
        println!(
            "steps {}, N {}, window [{lo0}, {hi0}] -> [{lo1}, {hi1}], cfg_scale {} -> {}",
            s.total_steps, s.max_timestep, s.lambda1, s.lambda0
        );
        return Ok(());
    }
    let csv = schedule_csv(&cfg.schedule, a.seed)?;
    match &a.out {
        Some(out) => {
            create_dir(out)?;
            let path = rec.output(out.join("schedule.csv"));
            write_text(&path, &csv)
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(csv.as_bytes())
                .map_err(|e| Error::io("<stdout>", e))
        }
    }
}

/// Blue (0) through green to red (1).
fn heat(v: f64) -> [f64; 4] {
    let v = v.clamp(0.0, 1.0);
    [v, 1.0 - (2.0 * v - 1.0).abs(), 1.0 - v, 1.0]
}

#[derive(Serialize)]
struct VizReport {
    camera: Camera,
    path_importance: Vec<f64>,
    curve_importance: Vec<Vec<f64>>,
    non_important: Vec<[usize; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    path_visible: Option<Vec<bool>>,
}

fn cmd_viz(a: &VizArgs, rec: &mut RunRecord) -> Result<()> {
    let cfg = load_config(a.config.as_ref(), rec)?;
    rec.snapshot(&cfg);
    cfg.visibility.validate()?;
    let vis = &cfg.visibility;
    let scene = load_scene(&a.scene, rec)?;
    let net = load_net_or_constant(Some(&a.net), vis, rec)?;
    let cams = resolve_views(&a.views, 15, 256, rec)?;
    let oracle = oracle_arg(a.oracle.as_ref())?;
    create_dir(&a.out)?;
    for (i, cam) in cams.iter().enumerate() {
        let report = curve_importance_filter(&net, &scene, cam, vis)?;
        let importance = report.path_importance();
        let (mut s2d, source) = project_scene_clipped(cam, &scene, &vec![1.0; scene.n_paths()])?;
        let canvas = Canvas::new(cam.width() as usize, cam.height() as usize)?;
        for (e, &p) in s2d.elements.iter_mut().zip(&source) {
            e.color = heat(importance[p]);
        }
        let path = rec.output(a.out.join(format!("importance_{i:02}.png")));
        write_png(&path, &render_view(&s2d, &canvas).image)?;

        let visible = match &oracle {
            Some(o) => {
                let (front, back) = o.depth_pair(cam)?;
                let votes = scene_votes(&scene, cam, &*front, &*back, vis)?;
                let flags: Vec<bool> = votes.iter().map(|v| path_visible(v, vis)).collect();
                for (e, &p) in s2d.elements.iter_mut().zip(&source) {
                    e.color = if flags[p] { [0.1, 0.7, 0.2, 1.0] } else { [0.85, 0.1, 0.1, 1.0] };
                }
                let mut img = render_view(&s2d, &canvas).image;
                overlay_edges(&mut img, &o.render_edges(cam));
                let path = rec.output(a.out.join(format!("votes_{i:02}.png")));
                write_png(&path, &img)?;
                Some(flags)
            }
            None => None,
        };
        let doc = VizReport {
            camera: cam.clone(),
            path_importance: importance,
            curve_importance: report.curve_importance.clone(),
            non_important: report.non_important.iter().map(|c| [c.path, c.curve]).collect(),
            path_visible: visible,
        };
        let path = rec.output(a.out.join(format!("importance_{i:02}.json")));
        write_text(&path, &(serde_json::to_string_pretty(&doc)? + "\n"))?;
    }
    println!("viz: {} views", cams.len());
    Ok(())
}

/// Darkens `img` where the oracle line drawing has ink, at half strength.
fn overlay_edges(img: &mut Image, edges: &Image) {
    for y in 0..img.height {
        for x in 0..img.width {
            let ink = 1.0 - edges.pixel(x, y)[0];
            for v in &mut img.pixel_mut(x, y)[..3] {
                *v *= 1.0 - 0.5 * ink;
            }
        }
    }
}
