//! Paired training samples: for every (rig, timestep) the eight canonical
//! views plus the dashcam view, each with a raymap expressed in the dashcam
//! frame, and a JSON manifest listing the outputs.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use sensorkit_core::cameras::{make_raymap, CameraIntrinsics};
use sensorkit_core::sensor_synth::DashcamRigSample;
use sensorkit_core::splat::{instantiate, render_prepared, GaussianScene, PreparedSplats, RenderOptions};
use sensorkit_core::{RigidPose, Vec3};

use crate::config::{camera_spec, CameraSpec};
use crate::error::{ToolError, ToolResult};
use crate::formats::{grid, ppm};
use crate::fsio;

pub const CANONICAL_VIEWS: usize = 8;
pub const MANIFEST_NAME: &str = "manifest.json";

/// Roof height of the canonical ring, meters.
const RING_HEIGHT: f64 = 1.8;
/// Horizontal field of view of each canonical camera, degrees.
const RING_HFOV_DEG: f64 = 60.0;

#[derive(Debug, Clone, PartialEq)]
pub struct View {
    pub name: String,
    pub intrinsics: CameraIntrinsics,
    /// Camera-to-vehicle.
    pub mount: RigidPose,
}

/// Eight pinhole cameras on a ring, 45° apart, starting forward.
pub fn canonical_ring(width: usize, height: usize) -> ToolResult<Vec<View>> {
    let f = width as f64 / 2.0 / (RING_HFOV_DEG.to_radians() / 2.0).tan();
    let intr = CameraIntrinsics::pinhole(f, f, width as f64 / 2.0, height as f64 / 2.0, width, height)?;
    Ok((0..CANONICAL_VIEWS)
        .map(|k| View {
            name: format!("cam{k}"),
            intrinsics: intr,
            mount: RigidPose::camera_mount(Vec3::new(0.0, 0.0, RING_HEIGHT), k as f64 * std::f64::consts::FRAC_PI_4),
        })
        .collect())
}

/// Rescales focal lengths and principal point to a new image size.
pub fn resize_intrinsics(intr: &CameraIntrinsics, width: usize, height: usize) -> ToolResult<CameraIntrinsics> {
    let sx = width as f64 / intr.width() as f64;
    let sy = height as f64 / intr.height() as f64;
    let resized = CameraIntrinsics::new(
        intr.model(),
        intr.fx() * sx,
        intr.fy() * sy,
        intr.cx() * sx,
        intr.cy() * sy,
        *intr.distortion(),
        width,
        height,
    )?;
    Ok(resized)
}

#[derive(Debug, Clone)]
pub struct PairgenRequest {
    pub scene: GaussianScene,
    /// Vehicle-to-world pose per timestep.
    pub ego: Vec<RigidPose>,
    pub background: Vec3,
    pub canonical: Vec<View>,
    pub rigs: Vec<DashcamRigSample>,
    pub times: Vec<usize>,
    /// Dashcam images are resized to this size.
    pub width: usize,
    pub height: usize,
    pub raymap_downsample: usize,
    pub seed: Option<u64>,
}

#[derive(Debug, Serialize)]
struct ManifestView {
    name: String,
    image: String,
    raymap: String,
    camera: CameraSpec,
}

#[derive(Debug, Serialize)]
struct ManifestSample {
    rig: usize,
    t: usize,
    category: String,
    base_profile_id: String,
    views: Vec<ManifestView>,
}

#[derive(Debug, Serialize)]
struct Manifest {
    seed: Option<u64>,
    reference_view: &'static str,
    raymap_downsample: usize,
    samples: Vec<ManifestSample>,
}

/// Encoded outputs, named relative to the output directory.
#[derive(Debug, Clone, PartialEq)]
pub struct PairgenOutput {
    pub files: Vec<(String, Vec<u8>)>,
    pub manifest: Vec<u8>,
}

impl PairgenOutput {
    /// Writes every file, then the manifest.
    pub fn write(&self, out_dir: &Path) -> ToolResult<PathBuf> {
        std::fs::create_dir_all(out_dir).map_err(|e| ToolError::io(out_dir, e))?;
        let files: Vec<(PathBuf, Vec<u8>)> = self.files.iter().map(|(n, b)| (out_dir.join(n), b.clone())).collect();
        fsio::write_all_atomic(&files)?;
        let manifest = out_dir.join(MANIFEST_NAME);
        fsio::write_atomic(&manifest, &self.manifest)?;
        Ok(manifest)
    }
}

struct Job<'a> {
    rig: usize,
    t: usize,
    view: View,
    splats: &'a PreparedSplats,
    world: RigidPose,
    reference: RigidPose,
}

/// Renders every (rig, time, view) in parallel; output order and bytes are
/// independent of scheduling.
pub fn generate(req: &PairgenRequest) -> ToolResult<PairgenOutput> {
    let views_per_sample = req.canonical.len() + 1;
    let prepared: Vec<PreparedSplats> =
        req.times.iter().map(|&t| instantiate(&req.scene, t).map(PreparedSplats::new)).collect::<Result<_, _>>()?;

    let mut jobs = Vec::with_capacity(req.rigs.len() * req.times.len() * views_per_sample);
    for (r, rig) in req.rigs.iter().enumerate() {
        let dashcam = View {
            name: "dashcam".into(),
            intrinsics: resize_intrinsics(&rig.intrinsics, req.width, req.height)?,
            mount: rig.extrinsics,
        };
        for (ti, &t) in req.times.iter().enumerate() {
            let ego = req.ego.get(t).copied().ok_or_else(|| {
                ToolError::Usage(format!("timestep {t} has no ego pose ({} available)", req.ego.len()))
            })?;
            let reference = ego.compose(&dashcam.mount);
            for view in req.canonical.iter().chain(std::iter::once(&dashcam)) {
                jobs.push(Job {
                    rig: r,
                    t,
                    view: view.clone(),
                    splats: &prepared[ti],
                    world: ego.compose(&view.mount),
                    reference,
                });
            }
        }
    }

    let opts = RenderOptions { background: req.background };
    let rendered: Vec<(Vec<u8>, Vec<u8>)> = jobs
        .par_iter()
        .map(|job| -> ToolResult<(Vec<u8>, Vec<u8>)> {
            let out = render_prepared(job.splats, &job.view.intrinsics, &job.world, &opts)?;
            let ray = make_raymap(&job.view.intrinsics, &job.world, &job.reference, req.raymap_downsample)?;
            let image = ppm::encode(&out.color).expect("render output has three channels");
            let raymap = grid::encode_raymap(&ray).expect("raymap dimensions fit the header");
            Ok((image, raymap))
        })
        .collect::<ToolResult<_>>()?;

    let mut files = Vec::with_capacity(rendered.len() * 2);
    let mut samples: Vec<ManifestSample> = Vec::new();
    for (job, (image, raymap)) in jobs.iter().zip(rendered) {
        let stem = format!("r{}_t{}_{}", job.rig, job.t, job.view.name);
        let (image_name, raymap_name) = (format!("{stem}.ppm"), format!("{stem}.raym"));
        files.push((image_name.clone(), image));
        files.push((raymap_name.clone(), raymap));
        if samples.last().is_none_or(|s| s.rig != job.rig || s.t != job.t) {
            let rig = &req.rigs[job.rig];
            samples.push(ManifestSample {
                rig: job.rig,
                t: job.t,
                category: rig.category.as_str().into(),
                base_profile_id: rig.base_profile_id.clone(),
                views: Vec::with_capacity(views_per_sample),
            });
        }
        samples.last_mut().unwrap().views.push(ManifestView {
            name: job.view.name.clone(),
            image: image_name,
            raymap: raymap_name,
            camera: camera_spec(None, &job.view.intrinsics, &job.view.mount),
        });
    }
    let manifest = Manifest { seed: req.seed, reference_view: "dashcam", raymap_downsample: req.raymap_downsample, samples };
    let mut bytes = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
    bytes.push(b'\n');
    Ok(PairgenOutput { files, manifest: bytes })
}
