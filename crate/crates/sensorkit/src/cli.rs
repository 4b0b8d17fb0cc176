//! The `sensorkit` command line.
//!
//! Exit codes: 0 success, 1 usage, 2 format or IO, 3 numeric or geometry.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use sensorkit_core::cameras::make_raymap;
use sensorkit_core::losses::{
    bce_grad, bce_validity, chamfer, grad_check, kl_divergence, kl_grad, l1_grad, l1_loss, lpips_distance,
    lpips_grad, psnr, ssim, ChamferVariant, FeatureLayer, FeatureStack, LatentGaussianStats,
};
use sensorkit_core::rangeview::{project_points, unproject_spin, LidarCalibration, SpinImage};
use sensorkit_core::rng::SplitRng;
use sensorkit_core::rollout::{
    drift_curve, rollout, FrameState, IdentityPredictor, NoisePredictor, Predictor, RolloutMode,
};
use sensorkit_core::sensor_synth::{builtin_profiles, sample_rig, CategoryName, IntrinsicNoise};
use sensorkit_core::splat::{render, GaussianScene, RenderOptions};
use sensorkit_core::{ImagePlane, PointCloud, RigidPose, Vec3};

use crate::config::{read_config, rig_spec, Config, ConfigFile};
use crate::error::{ExitCode, ToolError, ToolResult};
use crate::formats::{grid, ply, ppm, spin};
use crate::fsio;
use crate::pairgen::{self, PairgenRequest, View};

/// Relative error above which `gradcheck` fails.
pub const GRADCHECK_TOLERANCE: f64 = 1e-4;

#[derive(Debug, Parser)]
#[command(name = "sensorkit", version, about = "Dashcam-to-multi-sensor toolkit: spin images, rendering, rigs, metrics")]
pub struct Cli {
    /// Seed for every random draw; required by sampling subcommands.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// JSON configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Progress messages on stderr.
    #[arg(long, short, global = true)]
    pub verbose: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Convert between PLY point clouds and SPIN range images.
    Convert(ConvertArgs),
    /// Render one configured camera of the configured scene.
    Render(RenderArgs),
    /// Sample dashcam rigs for a vehicle category.
    SampleRig(SampleRigArgs),
    /// Write the raymap of a configured camera relative to another.
    Raymap(RaymapArgs),
    /// Compare two files with Chamfer distance, PSNR or SSIM.
    Metrics(MetricsArgs),
    /// Check analytic loss gradients against central differences.
    Gradcheck(GradcheckArgs),
    /// Roll out a reference predictor over recorded frames and report drift.
    Rollout(RolloutArgs),
    /// Render paired multi-view samples for sampled dashcam rigs.
    Pairgen(PairgenArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Direction {
    CloudToSpin,
    SpinToCloud,
}

#[derive(Debug, Args)]
pub struct ConvertArgs {
    pub direction: Direction,
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    /// Beam count of the default calibration (ignored with a configured lidar).
    #[arg(long, default_value_t = 64)]
    pub rows: usize,
    /// Column count of the default calibration (ignored with a configured lidar).
    #[arg(long, default_value_t = 1024)]
    pub columns: usize,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    /// Index into `cameras[]`.
    #[arg(long, default_value_t = 0)]
    pub camera: usize,
    #[arg(long, default_value_t = 0)]
    pub t: usize,
    /// Color output (PPM).
    #[arg(long)]
    pub output: PathBuf,
    /// Optional depth output (DEPT).
    #[arg(long)]
    pub depth: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SampleRigArgs {
    #[arg(long, default_value = "sedan")]
    pub category: String,
    #[arg(long, default_value_t = 1)]
    pub count: usize,
    /// JSON file with a `rigs` list, readable as `--config` or `pairgen --rigs`.
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct RaymapArgs {
    #[arg(long, default_value_t = 0)]
    pub camera: usize,
    /// Camera whose frame the rays are expressed in.
    #[arg(long, default_value_t = 0)]
    pub reference: usize,
    #[arg(long, default_value_t = 1)]
    pub downsample: usize,
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Metric {
    Chamfer,
    Psnr,
    Ssim,
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    pub metric: Metric,
    /// PLY or SPIN for chamfer, PPM for psnr/ssim.
    #[arg(long)]
    pub a: PathBuf,
    #[arg(long)]
    pub b: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LossName {
    L1,
    Bce,
    Kl,
    Lpips,
}

#[derive(Debug, Args)]
pub struct GradcheckArgs {
    #[arg(long)]
    pub loss: LossName,
    /// Parameter count of the random instance.
    #[arg(long, default_value_t = 16)]
    pub dims: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PredictorName {
    Identity,
    Noise,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeName {
    Inference,
    Dagger,
}

#[derive(Debug, Args)]
pub struct RolloutArgs {
    /// Directory with `t{t}_dashcam.ppm`, `t{t}_cam{k}.ppm` and `t{t}_lidar.spin`.
    #[arg(long)]
    pub frames: PathBuf,
    #[arg(long, default_value = "identity")]
    pub predictor: PredictorName,
    /// Defaults to the configured horizon.
    #[arg(long)]
    pub horizon: Option<usize>,
    #[arg(long, default_value = "inference")]
    pub mode: ModeName,
    /// Noise standard deviation at the first step (noise predictor).
    #[arg(long, default_value_t = 0.02)]
    pub sigma: f64,
    /// Drift table output (CSV).
    #[arg(long)]
    pub report: PathBuf,
}

#[derive(Debug, Args)]
pub struct PairgenArgs {
    #[arg(long)]
    pub out: PathBuf,
    /// Timesteps to render, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "0")]
    pub times: Vec<usize>,
    /// Rig file written by `sample-rig`; otherwise rigs are sampled.
    #[arg(long)]
    pub rigs: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub n_rigs: usize,
    #[arg(long, default_value = "sedan")]
    pub category: String,
    #[arg(long, default_value_t = 256)]
    pub width: usize,
    #[arg(long, default_value_t = 256)]
    pub height: usize,
    #[arg(long, default_value_t = 8)]
    pub raymap_downsample: usize,
}

/// Parses `args`, runs the subcommand and returns the exit status. Output
/// goes to `out`, diagnostics to `err`.
pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(err, "{text}");
                ExitCode::Usage
            } else {
                let _ = write!(out, "{text}");
                ExitCode::Success
            };
        }
    };
    match execute(&cli, out, err) {
        Ok(()) => ExitCode::Success,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

struct Ctx<'a> {
    cli: &'a Cli,
    err: &'a mut dyn Write,
}

impl Ctx<'_> {
    fn log(&mut self, msg: impl AsRef<str>) {
        if self.cli.verbose {
            let _ = writeln!(self.err, "{}", msg.as_ref());
        }
    }

    fn config(&self) -> ToolResult<Config> {
        match &self.cli.config {
            Some(p) => read_config(p),
            None => Ok(Config { file: ConfigFile::default(), path: PathBuf::from("<defaults>") }),
        }
    }

    fn require_config(&self, what: &str) -> ToolResult<Config> {
        if self.cli.config.is_none() {
            return Err(ToolError::Usage(format!("{what} needs --config")));
        }
        self.config()
    }

    fn seed(&self, subcommand: &str) -> ToolResult<u64> {
        self.cli.seed.ok_or_else(|| ToolError::Usage(format!("{subcommand} draws random samples and needs --seed")))
    }
}

fn execute(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> ToolResult<()> {
    let mut ctx = Ctx { cli, err };
    match &cli.command {
        Command::Convert(a) => convert(&mut ctx, a, out),
        Command::Render(a) => render_cmd(&mut ctx, a, out),
        Command::SampleRig(a) => sample_rig_cmd(&mut ctx, a, out),
        Command::Raymap(a) => raymap_cmd(&mut ctx, a, out),
        Command::Metrics(a) => metrics(&mut ctx, a, out),
        Command::Gradcheck(a) => gradcheck(&mut ctx, a, out),
        Command::Rollout(a) => rollout_cmd(&mut ctx, a, out),
        Command::Pairgen(a) => pairgen_cmd(&mut ctx, a, out),
    }
}

fn say(out: &mut dyn Write, msg: impl std::fmt::Display) -> ToolResult<()> {
    writeln!(out, "{msg}").map_err(|e| ToolError::io(Path::new("<stdout>"), e))
}

/// 64-beam style sensor: +2° down to −24.8°, full sweep.
pub fn default_lidar(rows: usize, columns: usize, max_range: f64) -> ToolResult<LidarCalibration> {
    let calib = LidarCalibration::uniform(RigidPose::IDENTITY, rows, 2f64.to_radians(), (-24.8f64).to_radians(), columns)?;
    Ok(LidarCalibration::new(
        *calib.sensor_to_vehicle(),
        calib.beam_elevations().to_vec(),
        calib.azimuth_start(),
        calib.azimuth_end(),
        columns,
        max_range,
    )?)
}

/// Configured calibration (with the file's max range) or the default table
/// sized to the spin image.
fn lidar_for_spin(config: &Config, spin: &SpinImage, max_range: f64) -> ToolResult<LidarCalibration> {
    match config.lidar()? {
        Some(c) => Ok(LidarCalibration::new(
            *c.sensor_to_vehicle(),
            c.beam_elevations().to_vec(),
            c.azimuth_start(),
            c.azimuth_end(),
            c.n_columns(),
            max_range,
        )?),
        None => default_lidar(spin.height(), spin.width(), max_range),
    }
}

fn read_spin(path: &Path) -> ToolResult<(SpinImage, f64)> {
    spin::decode(&fsio::read_bytes(path)?).map_err(|e| e.at(path))
}

fn read_ply(path: &Path) -> ToolResult<PointCloud> {
    ply::decode(&fsio::read_bytes(path)?).map_err(|e| e.at(path))
}

fn read_ppm(path: &Path) -> ToolResult<ImagePlane> {
    ppm::decode(&fsio::read_bytes(path)?).map_err(|e| e.at(path))
}

fn convert(ctx: &mut Ctx, a: &ConvertArgs, out: &mut dyn Write) -> ToolResult<()> {
    let config = ctx.config()?;
    match a.direction {
        Direction::CloudToSpin => {
            let cloud = read_ply(&a.input)?;
            let calib = match config.lidar()? {
                Some(c) => c,
                None => default_lidar(a.rows, a.columns, sensorkit_core::rangeview::DEFAULT_MAX_RANGE)?,
            };
            ctx.log(format!("projecting {} points onto {}×{}", cloud.len(), calib.n_rows(), calib.n_columns()));
            let image = project_points(&cloud, &calib);
            let bytes = spin::encode(&image, calib.max_range()).map_err(|e| e.at(&a.output))?;
            fsio::write_atomic(&a.output, &bytes)?;
            say(out, format!("{} valid cells of {}", image.valid_count(), image.height() * image.width()))
        }
        Direction::SpinToCloud => {
            let (image, max_range) = read_spin(&a.input)?;
            let calib = lidar_for_spin(&config, &image, max_range)?;
            let cloud = unproject_spin(&image, &calib)?;
            fsio::write_atomic(&a.output, ply::encode(&cloud).as_bytes())?;
            say(out, format!("{} points", cloud.len()))
        }
    }
}

fn scene_parts(config: &Config) -> ToolResult<(GaussianScene, Vec<RigidPose>, Vec3)> {
    Ok(config.scene()?.unwrap_or_else(|| (GaussianScene::empty(), vec![RigidPose::IDENTITY], Vec3::ZERO)))
}

fn render_cmd(ctx: &mut Ctx, a: &RenderArgs, out: &mut dyn Write) -> ToolResult<()> {
    let config = ctx.require_config("render")?;
    let cameras = config.cameras()?;
    let (intr, mount) = cameras
        .get(a.camera)
        .cloned()
        .ok_or_else(|| ToolError::Usage(format!("--camera {} but the config lists {} cameras", a.camera, cameras.len())))?;
    let (scene, ego, background) = scene_parts(&config)?;
    let ego_t = *ego.get(a.t).ok_or(sensorkit_core::Error::TimeDomain { t: a.t, len: ego.len() })?;
    ctx.log(format!("rendering {}×{} over {} splats", intr.width(), intr.height(), scene.splat_count()));
    let image = render(&scene, &intr, &ego_t.compose(&mount), a.t, &RenderOptions { background })?;
    let mut files = vec![(a.output.clone(), ppm::encode(&image.color).map_err(|e| e.at(&a.output))?)];
    if let Some(d) = &a.depth {
        files.push((d.clone(), grid::encode_depth(&image.depth).map_err(|e| e.at(d))?));
    }
    fsio::write_all_atomic(&files)?;
    say(out, format!("{}×{} pixels", intr.width(), intr.height()))
}

fn parse_category(name: &str) -> ToolResult<CategoryName> {
    CategoryName::parse(name).ok_or_else(|| ToolError::Usage(format!("unknown category `{name}`, expected sedan, suv or truck")))
}

fn sampled_rigs(
    config: &Config,
    category: &str,
    count: usize,
    seed: u64,
) -> ToolResult<Vec<sensorkit_core::sensor_synth::DashcamRigSample>> {
    let category = config.category(parse_category(category)?)?;
    let mut profiles = config.profiles()?;
    if profiles.is_empty() {
        profiles = builtin_profiles();
    }
    let mut rng = SplitRng::new(seed);
    (0..count)
        .map(|_| sample_rig(&mut rng, &category, &profiles, IntrinsicNoise::default()).map_err(ToolError::from))
        .collect()
}

fn sample_rig_cmd(ctx: &mut Ctx, a: &SampleRigArgs, out: &mut dyn Write) -> ToolResult<()> {
    let seed = ctx.seed("sample-rig")?;
    let config = ctx.config()?;
    let rigs = sampled_rigs(&config, &a.category, a.count, seed)?;
    let file = ConfigFile { rigs: rigs.iter().map(rig_spec).collect(), ..Default::default() };
    crate::config::write_config(&file, &a.output)?;
    say(out, format!("{} rigs", rigs.len()))
}

fn raymap_cmd(ctx: &mut Ctx, a: &RaymapArgs, out: &mut dyn Write) -> ToolResult<()> {
    let config = ctx.require_config("raymap")?;
    let cameras = config.cameras()?;
    let pick = |i: usize, flag: &str| {
        cameras
            .get(i)
            .cloned()
            .ok_or_else(|| ToolError::Usage(format!("--{flag} {i} but the config lists {} cameras", cameras.len())))
    };
    let (intr, pose) = pick(a.camera, "camera")?;
    let (_, reference) = pick(a.reference, "reference")?;
    let map = make_raymap(&intr, &pose, &reference, a.downsample)?;
    fsio::write_atomic(&a.output, &grid::encode_raymap(&map).map_err(|e| e.at(&a.output))?)?;
    say(out, format!("{}×{} rays", map.height(), map.width()))
}

/// PLY as-is; SPIN unprojected through the configured or default calibration.
fn read_cloud(config: &Config, path: &Path) -> ToolResult<PointCloud> {
    let bytes = fsio::read_bytes(path)?;
    if bytes.starts_with(&spin::MAGIC) {
        let (image, max_range) = spin::decode(&bytes).map_err(|e| e.at(path))?;
        Ok(unproject_spin(&image, &lidar_for_spin(config, &image, max_range)?)?)
    } else {
        ply::decode(&bytes).map_err(|e| e.at(path))
    }
}

fn fmt_value(v: f64) -> String {
    if v.is_infinite() { "inf".into() } else { format!("{v}") }
}

fn metrics(ctx: &mut Ctx, a: &MetricsArgs, out: &mut dyn Write) -> ToolResult<()> {
    let value = match a.metric {
        Metric::Chamfer => {
            let config = ctx.config()?;
            chamfer(&read_cloud(&config, &a.a)?, &read_cloud(&config, &a.b)?, ChamferVariant::Mean)?
        }
        Metric::Psnr => psnr(&read_ppm(&a.a)?, &read_ppm(&a.b)?)?,
        Metric::Ssim => ssim(&read_ppm(&a.a)?, &read_ppm(&a.b)?)?,
    };
    say(out, fmt_value(value))
}

/// Max relative error of one random instance of `loss`.
pub fn gradcheck_instance(loss: LossName, dims: usize, rng: &mut SplitRng) -> ToolResult<f64> {
    let n = dims.max(1);
    let err = match loss {
        LossName::L1 => {
            let target: Vec<f64> = (0..n).map(|_| rng.unit()).collect();
            // stay 0.01 away from the kink
            let point: Vec<f64> =
                target.iter().map(|t| t + if rng.bernoulli(0.5) { 1.0 } else { -1.0 } * rng.uniform(0.01, 0.5)).collect();
            grad_check(|p| l1_loss(p, &target, None).unwrap_or(f64::NAN), |p| l1_grad(p, &target, None).unwrap_or_default(), &point)?
        }
        LossName::Bce => {
            let target: Vec<f64> = (0..n).map(|_| rng.bernoulli(0.5) as u8 as f64).collect();
            let point: Vec<f64> = (0..n).map(|_| rng.uniform(0.05, 0.95)).collect();
            grad_check(|p| bce_validity(p, &target).unwrap_or(f64::NAN), |p| bce_grad(p, &target).unwrap_or_default(), &point)?
        }
        LossName::Kl => {
            let half = n.div_ceil(2);
            let mut point: Vec<f64> = (0..half).map(|_| rng.uniform(-2.0, 2.0)).collect();
            point.extend((0..half).map(|_| rng.uniform(0.2, 3.0)));
            let stats = |p: &[f64]| LatentGaussianStats::new(p[..half].to_vec(), p[half..].to_vec());
            grad_check(
                |p| stats(p).map_or(f64::NAN, |s| kl_divergence(&s)),
                |p| {
                    stats(p).map_or_else(
                        |_| Vec::new(),
                        |s| {
                            let (mut dm, ds) = kl_grad(&s);
                            dm.extend(ds);
                            dm
                        },
                    )
                },
                &point,
            )?
        }
        LossName::Lpips => {
            let c = 4;
            let cells = n.div_ceil(c);
            let weights: Vec<f64> = (0..c).map(|_| rng.uniform(0.2, 2.0)).collect();
            let stack = |acts: Vec<f64>| -> ToolResult<FeatureStack> {
                Ok(FeatureStack { layers: vec![FeatureLayer::new(1, cells, c, acts, weights.clone())?] })
            };
            let b = stack((0..cells * c).map(|_| rng.uniform(-1.0, 1.0)).collect())?;
            let point: Vec<f64> = (0..cells * c).map(|_| rng.uniform(-1.0, 1.0)).collect();
            grad_check(
                |p| stack(p.to_vec()).ok().and_then(|s| lpips_distance(&s, &b).ok()).unwrap_or(f64::NAN),
                |p| stack(p.to_vec()).ok().and_then(|s| lpips_grad(&s, &b).ok()).unwrap_or_default(),
                &point,
            )?
        }
    };
    Ok(err)
}

fn gradcheck(ctx: &mut Ctx, a: &GradcheckArgs, out: &mut dyn Write) -> ToolResult<()> {
    let seed = ctx.seed("gradcheck")?;
    let err = gradcheck_instance(a.loss, a.dims, &mut SplitRng::new(seed))?;
    say(out, format!("max_relative_error {err:e}"))?;
    if err >= GRADCHECK_TOLERANCE {
        return Err(sensorkit_core::Error::Numeric(format!(
            "gradient check failed: {err:e} ≥ {GRADCHECK_TOLERANCE:e}"
        ))
        .into());
    }
    Ok(())
}

/// Loaded rollout directory.
pub struct RecordedFrames {
    pub dashcam: Vec<ImagePlane>,
    pub frames: Vec<FrameState>,
    pub max_range: f64,
}

pub fn frame_paths(dir: &Path, t: usize, view: usize) -> (PathBuf, PathBuf, PathBuf) {
    (dir.join(format!("t{t}_dashcam.ppm")), dir.join(format!("t{t}_cam{view}.ppm")), dir.join(format!("t{t}_lidar.spin")))
}

pub fn read_frames(dir: &Path) -> ToolResult<RecordedFrames> {
    let mut dashcam = Vec::new();
    let mut frames = Vec::new();
    let mut max_range = None;
    let mut n_views = None;
    for t in 0.. {
        let (dash, _, lidar) = frame_paths(dir, t, 0);
        if !dash.exists() {
            break;
        }
        dashcam.push(read_ppm(&dash)?);
        let mut views = Vec::new();
        loop {
            let (_, view, _) = frame_paths(dir, t, views.len());
            if !view.exists() || n_views == Some(views.len()) {
                break;
            }
            views.push(read_ppm(&view)?);
        }
        if *n_views.get_or_insert(views.len()) != views.len() || views.is_empty() {
            return Err(ToolError::Usage(format!("{}: frame {t} has {} camera views", dir.display(), views.len())));
        }
        let (spin, range) = read_spin(&lidar)?;
        max_range.get_or_insert(range);
        frames.push(FrameState { views, spin, t });
    }
    if frames.is_empty() {
        return Err(ToolError::io(&frame_paths(dir, 0, 0).0, std::io::Error::from(std::io::ErrorKind::NotFound)));
    }
    Ok(RecordedFrames { dashcam, frames, max_range: max_range.unwrap() })
}

pub fn write_drift_csv(records: &[sensorkit_core::rollout::DriftRecord]) -> String {
    let mut s = String::from("step,view,psnr_db,chamfer_m\n");
    for r in records {
        s.push_str(&format!("{},{},{},{}\n", r.step, r.view, fmt_value(r.psnr_db), fmt_value(r.chamfer_m)));
    }
    s
}

fn rollout_cmd(ctx: &mut Ctx, a: &RolloutArgs, out: &mut dyn Write) -> ToolResult<()> {
    let seed = ctx.seed("rollout")?;
    let config = ctx.config()?;
    let recorded = read_frames(&a.frames)?;
    let mut cfg = config.dagger()?;
    cfg.seed = seed;
    if let Some(h) = a.horizon {
        cfg.horizon = h;
    }
    if cfg.horizon > recorded.frames.len() {
        return Err(ToolError::Usage(format!("--horizon {} exceeds the {} recorded frames", cfg.horizon, recorded.frames.len())));
    }
    let mut predictor: Box<dyn Predictor> = match a.predictor {
        PredictorName::Identity => Box::new(IdentityPredictor { initial: recorded.frames[0].clone() }),
        PredictorName::Noise => Box::new(NoisePredictor::new(recorded.frames.clone(), a.sigma, seed)),
    };
    let (mode, gt) = match a.mode {
        ModeName::Inference => (RolloutMode::Inference, None),
        ModeName::Dagger => (RolloutMode::DaggerTrainingContext, Some(recorded.frames.as_slice())),
    };
    ctx.log(format!("rolling out {} steps", cfg.horizon));
    let result = rollout(predictor.as_mut(), &recorded.dashcam, gt, &cfg, mode)?;
    let calib = lidar_for_spin(&config, &recorded.frames[0].spin, recorded.max_range)?;
    let drift = drift_curve(&result.frames, &recorded.frames[..cfg.horizon], &calib)?;
    fsio::write_atomic(&a.report, write_drift_csv(&drift).as_bytes())?;
    say(out, format!("{} steps, {} records", result.frames.len(), drift.len()))
}

fn pairgen_cmd(ctx: &mut Ctx, a: &PairgenArgs, out: &mut dyn Write) -> ToolResult<()> {
    let config = ctx.config()?;
    let rigs = match &a.rigs {
        Some(path) => read_config(path)?.rigs()?,
        None => sampled_rigs(&config, &a.category, a.n_rigs, ctx.seed("pairgen")?)?,
    };
    if rigs.is_empty() {
        return Err(ToolError::Usage("no rigs to render".into()));
    }
    let configured = config.cameras()?;
    let canonical = if configured.is_empty() {
        pairgen::canonical_ring(a.width, a.height)?
    } else {
        configured
            .into_iter()
            .enumerate()
            .map(|(i, (intrinsics, mount))| View {
                name: config.file.cameras[i].name.clone().unwrap_or_else(|| format!("cam{i}")),
                intrinsics,
                mount,
            })
            .collect()
    };
    let (scene, ego, background) = scene_parts(&config)?;
    let req = PairgenRequest {
        ego: if ego.len() < scene.n_timesteps() { vec![ego[0]; scene.n_timesteps()] } else { ego },
        scene,
        background,
        canonical,
        rigs,
        times: a.times.clone(),
        width: a.width,
        height: a.height,
        raymap_downsample: a.raymap_downsample,
        seed: ctx.cli.seed,
    };
    ctx.log(format!("rendering {} rigs × {} timesteps", req.rigs.len(), req.times.len()));
    let output = pairgen::generate(&req)?;
    let manifest = output.write(&a.out)?;
    say(out, format!("{} files, manifest {}", output.files.len(), manifest.display()))
}
