//! Autoregressive rollout harness with DAgger-style context mixing.
//!
//! A rollout runs `horizon` steps. At step `t` the predictor sees the
//! dashcam frame `x_t` and, unless it is step 0 or the condition was dropped,
//! the previous frame. In inference mode the previous frame is always the
//! predictor's own output; in training-context mode it is the ground truth
//! with probability `p_ground_truth`.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::fusion::apply_spatial_mask;
use crate::losses::{chamfer, psnr, ChamferVariant};
use crate::math;
use crate::rangeview::{unproject_spin, LidarCalibration, SpinImage};
use crate::rng::SplitRng;
use crate::types::{ImagePlane, Rect};
use crate::{Error, Result};

/// Multi-view images and LiDAR spin at one timestep.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameState {
    pub views: Vec<ImagePlane>,
    pub spin: SpinImage,
    pub t: usize,
}

/// Shape every frame of a rollout must share.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameShape {
    pub n_views: usize,
    pub view: (usize, usize, usize),
    pub spin: (usize, usize),
}

impl FrameShape {
    pub fn of(frame: &FrameState) -> Result<Self> {
        let first = frame.views.first().ok_or_else(|| Error::invalid("frame has no views"))?;
        let shape = Self { n_views: frame.views.len(), view: first.shape(), spin: (frame.spin.height(), frame.spin.width()) };
        shape.check(frame)?;
        Ok(shape)
    }

    /// Contract error naming the first field that disagrees.
    pub fn check(&self, frame: &FrameState) -> Result<()> {
        let contract = |field: &str, detail: String| Error::Contract { field: field.into(), detail };
        if frame.views.len() != self.n_views {
            return Err(contract("views", format!("{} views, expected {}", frame.views.len(), self.n_views)));
        }
        for (i, v) in frame.views.iter().enumerate() {
            if v.shape() != self.view {
                return Err(contract(&format!("views[{i}]"), format!("shape {:?}, expected {:?}", v.shape(), self.view)));
            }
        }
        let spin = (frame.spin.height(), frame.spin.width());
        if spin != self.spin {
            return Err(contract("spin", format!("shape {spin:?}, expected {:?}", self.spin)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ContextSource {
    GroundTruth,
    SelfGenerated,
}

impl ContextSource {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::GroundTruth => "ground_truth",
            Self::SelfGenerated => "self_generated",
        }
    }
}

/// Everything the predictor sees at one step. `previous` is `None` exactly
/// when `t == 0` or `condition_dropped` is set.
#[derive(Debug, Clone, PartialEq)]
pub struct RolloutContext {
    pub t: usize,
    pub previous: Option<FrameState>,
    pub source: ContextSource,
    pub dashcam_frame: ImagePlane,
    pub condition_dropped: bool,
    pub mask: Option<Rect>,
}

impl RolloutContext {
    /// Context for step 0 or any step without a temporal condition.
    pub fn initial(dashcam_frame: ImagePlane) -> Self {
        Self { t: 0, previous: None, source: ContextSource::SelfGenerated, dashcam_frame, condition_dropped: false, mask: None }
    }

    pub fn validate(&self) -> Result<()> {
        let expect_none = self.t == 0 || self.condition_dropped;
        if expect_none != self.previous.is_none() {
            return Err(Error::invalid(format!(
                "context at t={} has previous={} with condition_dropped={}",
                self.t,
                self.previous.is_some(),
                self.condition_dropped
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DaggerConfig {
    pub p_ground_truth: f64,
    pub p_condition_drop: f64,
    pub p_spatial_mask: f64,
    pub horizon: usize,
    pub seed: u64,
    /// Masked area as a fraction of the dashcam frame, sampled uniformly.
    pub mask_area: (f64, f64),
}

impl Default for DaggerConfig {
    fn default() -> Self {
        Self { p_ground_truth: 0.2, p_condition_drop: 0.5, p_spatial_mask: 0.2, horizon: 6, seed: 0, mask_area: (0.1, 0.3) }
    }
}

impl DaggerConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, p) in [
            ("p_ground_truth", self.p_ground_truth),
            ("p_condition_drop", self.p_condition_drop),
            ("p_spatial_mask", self.p_spatial_mask),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Config(format!("{name}: probability {p} outside [0, 1]")));
            }
        }
        if self.horizon == 0 {
            return Err(Error::Config("horizon: must be at least 1".into()));
        }
        let (lo, hi) = self.mask_area;
        if !(lo > 0.0 && lo <= hi && hi <= 1.0) {
            return Err(Error::Config(format!("mask_area: need 0 < min ≤ max ≤ 1, got ({lo}, {hi})")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RolloutMode {
    Inference,
    DaggerTrainingContext,
}

pub trait Predictor {
    fn predict(&mut self, ctx: &RolloutContext) -> FrameState;
}

impl<F: FnMut(&RolloutContext) -> FrameState> Predictor for F {
    fn predict(&mut self, ctx: &RolloutContext) -> FrameState {
        self(ctx)
    }
}

/// Copies the previous frame; falls back to `initial` when there is none.
#[derive(Debug, Clone)]
pub struct IdentityPredictor {
    pub initial: FrameState,
}

impl Predictor for IdentityPredictor {
    fn predict(&mut self, ctx: &RolloutContext) -> FrameState {
        ctx.previous.clone().unwrap_or_else(|| self.initial.clone())
    }
}

/// Always returns the same frame.
#[derive(Debug, Clone)]
pub struct ConstantPredictor {
    pub frame: FrameState,
}

impl Predictor for ConstantPredictor {
    fn predict(&mut self, _ctx: &RolloutContext) -> FrameState {
        self.frame.clone()
    }
}

/// Returns `reference[t]` plus Gaussian noise of standard deviation
/// `sigma·(t+1)` on every image sample and on the range of valid returns.
/// Values are clamped to `[0, 1]`.
#[derive(Debug, Clone)]
pub struct NoisePredictor {
    pub reference: Vec<FrameState>,
    pub sigma: f64,
    rng: SplitRng,
}

impl NoisePredictor {
    pub fn new(reference: Vec<FrameState>, sigma: f64, seed: u64) -> Self {
        Self { reference, sigma, rng: SplitRng::with_stream(seed, 0x6e6f697365) }
    }
}

impl Predictor for NoisePredictor {
    fn predict(&mut self, ctx: &RolloutContext) -> FrameState {
        let base = &self.reference[ctx.t.min(self.reference.len() - 1)];
        let amp = self.sigma * (ctx.t as f64 + 1.0);
        let rng = &mut self.rng;
        let views = base
            .views
            .iter()
            .map(|v| {
                let mut out = v.clone();
                for x in out.data_mut() {
                    *x = (*x + amp * rng.normal()).clamp(0.0, 1.0);
                }
                out
            })
            .collect();
        let mut spin = base.spin.clone();
        for r in 0..spin.height() {
            for c in 0..spin.width() {
                if spin.is_valid(r, c) {
                    let [range, intensity, elongation, _] = spin.cell(r, c);
                    let noisy = (range as f64 + amp * rng.normal()) as f32;
                    spin.set_return(r, c, noisy, intensity, elongation);
                }
            }
        }
        FrameState { views, spin, t: ctx.t }
    }
}

/// Runs the predictor once and checks its output against `shape`. The
/// returned frame carries `ctx.t`.
pub fn step(predictor: &mut dyn Predictor, ctx: &RolloutContext, shape: Option<&FrameShape>) -> Result<FrameState> {
    ctx.validate()?;
    let mut out = predictor.predict(ctx);
    match shape {
        Some(s) => s.check(&out)?,
        None => {
            FrameShape::of(&out).map_err(|e| Error::Contract { field: "views".into(), detail: format!("{e}") })?;
        }
    }
    out.t = ctx.t;
    Ok(out)
}

/// How each step's context was built.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepRecord {
    pub t: usize,
    pub source: ContextSource,
    pub condition_dropped: bool,
    pub mask: Option<Rect>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rollout {
    pub frames: Vec<FrameState>,
    pub steps: Vec<StepRecord>,
}

/// Rectangle covering a uniform fraction of the frame with a random aspect ratio.
fn sample_mask(rng: &mut SplitRng, width: usize, height: usize, area: (f64, f64)) -> Rect {
    let frac = rng.uniform(area.0, area.1);
    let aspect = math::exp(rng.uniform(math::ln(0.5), math::ln(2.0)));
    let target = frac * (width * height) as f64;
    let w = (math::round(math::sqrt(target * aspect)) as usize).clamp(1, width);
    let h = (math::round(target / w as f64) as usize).clamp(1, height);
    let x = rng.index(width - w + 1);
    let y = rng.index(height - h + 1);
    Rect::new(x, y, w, h)
}

pub fn rollout(
    predictor: &mut dyn Predictor,
    dashcam_frames: &[ImagePlane],
    gt_frames: Option<&[FrameState]>,
    cfg: &DaggerConfig,
    mode: RolloutMode,
) -> Result<Rollout> {
    cfg.validate()?;
    if dashcam_frames.len() < cfg.horizon {
        return Err(Error::invalid(format!(
            "horizon {} exceeds the {} dashcam frames",
            cfg.horizon,
            dashcam_frames.len()
        )));
    }
    let gt = match (mode, gt_frames) {
        (RolloutMode::Inference, Some(_)) => {
            return Err(Error::invalid("inference rollouts take no ground-truth frames"));
        }
        (RolloutMode::Inference, None) => None,
        (RolloutMode::DaggerTrainingContext, None) => {
            return Err(Error::invalid("training-context rollouts need ground-truth frames"));
        }
        (RolloutMode::DaggerTrainingContext, Some(g)) => {
            if g.len() != dashcam_frames.len() {
                return Err(Error::invalid(format!(
                    "{} ground-truth frames for {} dashcam frames",
                    g.len(),
                    dashcam_frames.len()
                )));
            }
            Some(g)
        }
    };
    let mut shape = match gt {
        Some(g) => Some(FrameShape::of(&g[0])?),
        None => None,
    };

    let mut rng = SplitRng::new(cfg.seed);
    let mut frames: Vec<FrameState> = Vec::with_capacity(cfg.horizon);
    let mut steps = Vec::with_capacity(cfg.horizon);
    for t in 0..cfg.horizon {
        let dashcam = &dashcam_frames[t];
        let (source, dropped, mask) = match gt {
            None => (ContextSource::SelfGenerated, false, None),
            Some(_) => {
                let use_gt = rng.bernoulli(cfg.p_ground_truth);
                let dropped = rng.bernoulli(cfg.p_condition_drop);
                let mask = rng
                    .bernoulli(cfg.p_spatial_mask)
                    .then(|| sample_mask(&mut rng, dashcam.width(), dashcam.height(), cfg.mask_area));
                let source = if use_gt { ContextSource::GroundTruth } else { ContextSource::SelfGenerated };
                (source, dropped, mask)
            }
        };
        let previous = if t == 0 || dropped {
            None
        } else {
            match (source, gt) {
                (ContextSource::GroundTruth, Some(g)) => Some(g[t - 1].clone()),
                _ => Some(frames[t - 1].clone()),
            }
        };
        let dashcam_frame = match mask {
            Some(r) => apply_spatial_mask(dashcam, &[r])?,
            None => dashcam.clone(),
        };
        let ctx = RolloutContext { t, previous, source, dashcam_frame, condition_dropped: dropped, mask };
        let out = step(predictor, &ctx, shape.as_ref())?;
        if shape.is_none() {
            shape = Some(FrameShape::of(&out)?);
        }
        frames.push(out);
        steps.push(StepRecord { t, source, condition_dropped: dropped, mask });
    }
    Ok(Rollout { frames, steps })
}

/// One row of the drift table. Chamfer is per step and repeated for each view.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftRecord {
    pub step: usize,
    pub view: usize,
    pub psnr_db: f64,
    pub chamfer_m: f64,
}

pub fn drift_curve(generated: &[FrameState], gt: &[FrameState], calib: &LidarCalibration) -> Result<Vec<DriftRecord>> {
    if generated.len() != gt.len() {
        return Err(Error::shape(format!("{} generated frames vs {} ground-truth frames", generated.len(), gt.len())));
    }
    let mut out = Vec::new();
    for (step, (g, r)) in generated.iter().zip(gt).enumerate() {
        FrameShape::of(r)?.check(g).map_err(|e| Error::shape(format!("step {step}: {e}")))?;
        let pg = unproject_spin(&g.spin, calib)?;
        let pr = unproject_spin(&r.spin, calib)?;
        let chamfer_m = match (pg.is_empty(), pr.is_empty()) {
            (true, true) => 0.0,
            _ => chamfer(&pg, &pr, ChamferVariant::Mean)?,
        };
        for (view, (vg, vr)) in g.views.iter().zip(&r.views).enumerate() {
            out.push(DriftRecord { step, view, psnr_db: psnr(vg, vr)?, chamfer_m });
        }
    }
    Ok(out)
}
