//! JSON configuration: cameras, LiDAR calibration, scene, vehicle
//! categories, dashcam profiles, sampled rigs, loss weights and rollout
//! settings. Every top-level key is optional. Unknown keys are rejected and
//! every error names the full key path, e.g. `cameras[0].fx`.
//!
//! Angles are radians except the `*_deg` fields; distances are meters;
//! quaternions are `[w, x, y, z]`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use sensorkit_core::cameras::{CameraIntrinsics, Distortion, LensModel};
use sensorkit_core::losses::LossWeights;
use sensorkit_core::rangeview::LidarCalibration;
use sensorkit_core::rollout::DaggerConfig;
use sensorkit_core::sensor_synth::{
    CategoryName, DashcamProfile, DashcamRigSample, MountPerturbation, Range, VehicleCategory,
};
use sensorkit_core::splat::{DynamicObject, Gaussian3D, GaussianScene};
use sensorkit_core::{Error as CoreError, Quat, RigidPose, Vec3};

use crate::error::{ToolError, ToolResult};
use crate::fsio;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub cameras: Vec<CameraSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lidar: Option<LidarSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scene: Option<SceneSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub categories: Vec<CategorySpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub profiles: Vec<ProfileSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub rigs: Vec<RigSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub loss_weights: Option<LossWeightsSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dagger: Option<DaggerSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoseSpec {
    #[serde(default = "identity_quat")]
    pub quat: [f64; 4],
    #[serde(default)]
    pub trans: [f64; 3],
}

fn identity_quat() -> [f64; 4] {
    [1.0, 0.0, 0.0, 0.0]
}

impl Default for PoseSpec {
    fn default() -> Self {
        Self { quat: identity_quat(), trans: [0.0; 3] }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelSpec {
    Pinhole,
    Fisheye,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub model: ModelSpec,
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    #[serde(default)]
    pub k1: f64,
    #[serde(default)]
    pub k2: f64,
    #[serde(default)]
    pub k3: f64,
    #[serde(default)]
    pub p1: f64,
    #[serde(default)]
    pub p2: f64,
    pub width: usize,
    pub height: usize,
    /// Camera-to-vehicle (or camera-to-world for standalone renders).
    #[serde(default)]
    pub pose: PoseSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LidarSpec {
    pub elevations: Vec<f64>,
    pub azimuth_start: f64,
    pub azimuth_end: f64,
    pub n_columns: usize,
    pub max_range: f64,
    #[serde(default)]
    pub pose: PoseSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplatSpec {
    pub mean: [f64; 3],
    pub scale: [f64; 3],
    #[serde(default = "identity_quat")]
    pub rotation: [f64; 4],
    pub opacity: f64,
    pub color: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectSpec {
    pub id: u32,
    pub splats: Vec<SplatSpec>,
    /// Object-to-world pose per timestep.
    pub trajectory: Vec<PoseSpec>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneSpec {
    #[serde(default, rename = "static")]
    pub static_splats: Vec<SplatSpec>,
    #[serde(default)]
    pub objects: Vec<ObjectSpec>,
    /// Defaults to the shortest object trajectory, or 1.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_timesteps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub background: Option<[f64; 3]>,
    /// Vehicle-to-world pose per timestep; identity when empty.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub ego: Vec<PoseSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CategorySpec {
    pub name: String,
    pub height: [f64; 2],
    pub forward: [f64; 2],
    pub lateral: [f64; 2],
    pub pitch_half_deg: f64,
    pub yaw_half_deg: f64,
    pub roll_half_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileSpec {
    pub id: String,
    pub camera: CameraSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbationSpec {
    pub pitch_deg: f64,
    pub yaw_deg: f64,
    pub roll_deg: f64,
}

/// A sampled dashcam rig; `camera.pose` is camera-to-vehicle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RigSpec {
    pub category: String,
    pub base_profile_id: String,
    pub perturbation: PerturbationSpec,
    pub camera: CameraSpec,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LossWeightsSpec {
    #[serde(default = "one")]
    pub range: f64,
    #[serde(default = "one")]
    pub elongation: f64,
    #[serde(default = "one")]
    pub intensity: f64,
    #[serde(default = "one")]
    pub bce: f64,
    #[serde(default = "one")]
    pub normals: f64,
    #[serde(default = "one")]
    pub lpips_elongation: f64,
    #[serde(default = "one")]
    pub lpips_intensity: f64,
    #[serde(default = "one")]
    pub lpips_validity: f64,
    #[serde(default = "one")]
    pub kl: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DaggerSpec {
    pub p_ground_truth: f64,
    pub p_condition_drop: f64,
    pub p_spatial_mask: f64,
    pub horizon: usize,
    pub seed: u64,
    pub mask_area_min: f64,
    pub mask_area_max: f64,
}

impl Default for DaggerSpec {
    fn default() -> Self {
        let d = DaggerConfig::default();
        Self {
            p_ground_truth: d.p_ground_truth,
            p_condition_drop: d.p_condition_drop,
            p_spatial_mask: d.p_spatial_mask,
            horizon: d.horizon,
            seed: d.seed,
            mask_area_min: d.mask_area.0,
            mask_area_max: d.mask_area.1,
        }
    }
}

/// Parsed file plus its origin, for error messages.
#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub file: ConfigFile,
    pub path: PathBuf,
}

pub fn read_config(path: &Path) -> ToolResult<Config> {
    parse_config(&fsio::read_text(path)?, path)
}

pub fn parse_config(text: &str, path: &Path) -> ToolResult<Config> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let file: ConfigFile = serde_path_to_error::deserialize(de).map_err(|e| {
        let key = e.path().to_string();
        ToolError::Config {
            path: path.to_path_buf(),
            key: if key == "." { "(root)".into() } else { key },
            detail: e.into_inner().to_string(),
        }
    })?;
    let config = Config { file, path: path.to_path_buf() };
    config.validate()?;
    Ok(config)
}

pub fn write_config(file: &ConfigFile, path: &Path) -> ToolResult<()> {
    let mut text = serde_json::to_string_pretty(file).expect("config serializes");
    text.push('\n');
    fsio::write_atomic(path, text.as_bytes())
}

impl Config {
    fn err(&self, key: impl Into<String>, detail: impl Into<String>) -> ToolError {
        ToolError::Config { path: self.path.clone(), key: key.into(), detail: detail.into() }
    }

    /// Attaches `prefix` to a core validation error. Messages of the form
    /// `field: detail` extend the key path with the field.
    fn keyed(&self, prefix: &str, e: CoreError) -> ToolError {
        let msg = match &e {
            CoreError::InvalidInput(m) | CoreError::Config(m) => m.clone(),
            other => other.to_string(),
        };
        match msg.split_once(": ") {
            Some((field, detail)) if field.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') => {
                self.err(format!("{prefix}.{field}"), detail)
            }
            _ => self.err(prefix, msg),
        }
    }

    /// Converts every section once so errors surface at load time.
    pub fn validate(&self) -> ToolResult<()> {
        self.cameras()?;
        self.lidar()?;
        self.scene()?;
        self.categories()?;
        self.profiles()?;
        self.rigs()?;
        self.loss_weights()?;
        self.dagger()?;
        Ok(())
    }

    fn pose(&self, key: &str, p: &PoseSpec) -> ToolResult<RigidPose> {
        let [w, x, y, z] = p.quat;
        let q = Quat::new(w, x, y, z).ok_or_else(|| self.err(format!("{key}.quat"), "quaternion must be non-zero and finite"))?;
        let t = Vec3::from_array(p.trans);
        if !t.is_finite() {
            return Err(self.err(format!("{key}.trans"), "translation must be finite"));
        }
        Ok(RigidPose::new(q, t))
    }

    pub fn camera(&self, key: &str, c: &CameraSpec) -> ToolResult<(CameraIntrinsics, RigidPose)> {
        let model = match c.model {
            ModelSpec::Pinhole => LensModel::PinholeBrown,
            ModelSpec::Fisheye => LensModel::FisheyeEquidistant,
        };
        let distortion = Distortion { k1: c.k1, k2: c.k2, k3: c.k3, p1: c.p1, p2: c.p2 };
        let intr = CameraIntrinsics::new(model, c.fx, c.fy, c.cx, c.cy, distortion, c.width, c.height)
            .map_err(|e| self.keyed(key, e))?;
        Ok((intr, self.pose(&format!("{key}.pose"), &c.pose)?))
    }

    pub fn cameras(&self) -> ToolResult<Vec<(CameraIntrinsics, RigidPose)>> {
        self.file.cameras.iter().enumerate().map(|(i, c)| self.camera(&format!("cameras[{i}]"), c)).collect()
    }

    pub fn lidar(&self) -> ToolResult<Option<LidarCalibration>> {
        let Some(l) = &self.file.lidar else { return Ok(None) };
        let pose = self.pose("lidar.pose", &l.pose)?;
        LidarCalibration::new(pose, l.elevations.clone(), l.azimuth_start, l.azimuth_end, l.n_columns, l.max_range)
            .map(Some)
            .map_err(|e| {
                let detail = match &e {
                    CoreError::InvalidInput(m) => m.clone(),
                    other => other.to_string(),
                };
                let field = if detail.contains("elevation") {
                    "elevations"
                } else if detail.contains("azimuth") {
                    "azimuth_end"
                } else if detail.contains("n_columns") {
                    "n_columns"
                } else if detail.contains("max_range") {
                    "max_range"
                } else {
                    "pose"
                };
                self.err(format!("lidar.{field}"), detail)
            })
    }

    fn splat(&self, key: &str, s: &SplatSpec) -> ToolResult<Gaussian3D> {
        let [w, x, y, z] = s.rotation;
        let q = Quat::new(w, x, y, z).ok_or_else(|| self.err(format!("{key}.rotation"), "quaternion must be non-zero and finite"))?;
        Gaussian3D::new(Vec3::from_array(s.mean), Vec3::from_array(s.scale), q, s.opacity, Vec3::from_array(s.color))
            .map_err(|e| {
                let msg = e.to_string();
                let field = ["mean", "scales", "opacity", "color"].into_iter().find(|f| msg.contains(f));
                let field = field.map(|f| if f == "scales" { "scale" } else { f });
                self.err(field.map_or(key.to_string(), |f| format!("{key}.{f}")), msg)
            })
    }

    /// Scene, per-timestep ego poses and background color.
    pub fn scene(&self) -> ToolResult<Option<(GaussianScene, Vec<RigidPose>, Vec3)>> {
        let Some(s) = &self.file.scene else { return Ok(None) };
        let static_splats = s
            .static_splats
            .iter()
            .enumerate()
            .map(|(i, sp)| self.splat(&format!("scene.static[{i}]"), sp))
            .collect::<ToolResult<Vec<_>>>()?;
        let mut objects = Vec::with_capacity(s.objects.len());
        for (i, o) in s.objects.iter().enumerate() {
            let key = format!("scene.objects[{i}]");
            let canonical = o
                .splats
                .iter()
                .enumerate()
                .map(|(j, sp)| self.splat(&format!("{key}.splats[{j}]"), sp))
                .collect::<ToolResult<Vec<_>>>()?;
            let trajectory = o
                .trajectory
                .iter()
                .enumerate()
                .map(|(j, p)| self.pose(&format!("{key}.trajectory[{j}]"), p))
                .collect::<ToolResult<Vec<_>>>()?;
            if trajectory.is_empty() {
                return Err(self.err(format!("{key}.trajectory"), "needs at least one pose"));
            }
            objects.push(DynamicObject { id: o.id, canonical, trajectory });
        }
        let n = s.n_timesteps.unwrap_or_else(|| {
            objects
                .iter()
                .map(|o| o.trajectory.len())
                .min()
                .or((!s.ego.is_empty()).then_some(s.ego.len()))
                .unwrap_or(1)
        });
        let scene = GaussianScene::new(static_splats, objects, n).map_err(|e| self.err("scene.n_timesteps", e.to_string()))?;
        let ego = if s.ego.is_empty() {
            vec![RigidPose::IDENTITY; n]
        } else {
            if s.ego.len() < n {
                return Err(self.err("scene.ego", format!("{} poses for {n} timesteps", s.ego.len())));
            }
            s.ego.iter().enumerate().map(|(i, p)| self.pose(&format!("scene.ego[{i}]"), p)).collect::<ToolResult<_>>()?
        };
        let bg = Vec3::from_array(s.background.unwrap_or([0.0; 3]));
        if !(0..3).all(|i| (0.0..=1.0).contains(&bg[i])) {
            return Err(self.err("scene.background", "color components must lie in [0, 1]"));
        }
        Ok(Some((scene, ego, bg)))
    }

    fn category_name(&self, key: &str, name: &str) -> ToolResult<CategoryName> {
        CategoryName::parse(name).ok_or_else(|| self.err(key, format!("unknown category `{name}`, expected sedan, suv or truck")))
    }

    pub fn categories(&self) -> ToolResult<Vec<VehicleCategory>> {
        let mut out = Vec::with_capacity(self.file.categories.len());
        for (i, c) in self.file.categories.iter().enumerate() {
            let key = format!("categories[{i}]");
            let name = self.category_name(&format!("{key}.name"), &c.name)?;
            let range = |field: &str, r: [f64; 2]| -> ToolResult<Range> {
                if !(r[0].is_finite() && r[1].is_finite() && r[0] <= r[1]) {
                    return Err(self.err(format!("{key}.{field}"), "need finite [min, max] with min ≤ max"));
                }
                Ok(Range { min: r[0], max: r[1] })
            };
            let cat = VehicleCategory {
                name,
                height: range("height", c.height)?,
                forward: range("forward", c.forward)?,
                lateral: range("lateral", c.lateral)?,
                pitch_half_deg: c.pitch_half_deg,
                yaw_half_deg: c.yaw_half_deg,
                roll_half_deg: c.roll_half_deg,
            };
            cat.validate().map_err(|e| self.keyed(&key, e))?;
            out.push(cat);
        }
        Ok(out)
    }

    /// Configured category by name, falling back to the built-in table.
    pub fn category(&self, name: CategoryName) -> ToolResult<VehicleCategory> {
        Ok(self.categories()?.into_iter().find(|c| c.name == name).unwrap_or_else(|| VehicleCategory::builtin(name)))
    }

    pub fn profiles(&self) -> ToolResult<Vec<DashcamProfile>> {
        self.file
            .profiles
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let (intrinsics, _) = self.camera(&format!("profiles[{i}].camera"), &p.camera)?;
                Ok(DashcamProfile { id: p.id.clone(), intrinsics })
            })
            .collect()
    }

    pub fn rigs(&self) -> ToolResult<Vec<DashcamRigSample>> {
        self.file
            .rigs
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let key = format!("rigs[{i}]");
                let category = self.category_name(&format!("{key}.category"), &r.category)?;
                let (intrinsics, extrinsics) = self.camera(&format!("{key}.camera"), &r.camera)?;
                let p = r.perturbation;
                Ok(DashcamRigSample {
                    intrinsics,
                    extrinsics,
                    perturbation: MountPerturbation { pitch_deg: p.pitch_deg, yaw_deg: p.yaw_deg, roll_deg: p.roll_deg },
                    category,
                    base_profile_id: r.base_profile_id.clone(),
                })
            })
            .collect()
    }

    pub fn loss_weights(&self) -> ToolResult<LossWeights> {
        let Some(w) = self.file.loss_weights else { return Ok(LossWeights::default()) };
        let weights = LossWeights::from_array([
            w.range,
            w.elongation,
            w.intensity,
            w.bce,
            w.normals,
            w.lpips_elongation,
            w.lpips_intensity,
            w.lpips_validity,
            w.kl,
        ]);
        weights.validate().map_err(|e| self.keyed("loss_weights", e))?;
        Ok(weights)
    }

    pub fn dagger(&self) -> ToolResult<DaggerConfig> {
        let d = self.file.dagger.unwrap_or_default();
        let cfg = DaggerConfig {
            p_ground_truth: d.p_ground_truth,
            p_condition_drop: d.p_condition_drop,
            p_spatial_mask: d.p_spatial_mask,
            horizon: d.horizon,
            seed: d.seed,
            mask_area: (d.mask_area_min, d.mask_area_max),
        };
        cfg.validate().map_err(|e| {
            let e = self.keyed("dagger", e);
            match e {
                ToolError::Config { path, key, detail } if key == "dagger.mask_area" => {
                    ToolError::Config { path, key: "dagger.mask_area_min".into(), detail }
                }
                other => other,
            }
        })?;
        Ok(cfg)
    }
}

fn pose_spec(p: &RigidPose) -> PoseSpec {
    PoseSpec { quat: p.rotation.wxyz(), trans: p.translation.to_array() }
}

pub fn camera_spec(name: Option<String>, intr: &CameraIntrinsics, pose: &RigidPose) -> CameraSpec {
    let d = intr.distortion();
    CameraSpec {
        name,
        model: match intr.model() {
            LensModel::PinholeBrown => ModelSpec::Pinhole,
            LensModel::FisheyeEquidistant => ModelSpec::Fisheye,
        },
        fx: intr.fx(),
        fy: intr.fy(),
        cx: intr.cx(),
        cy: intr.cy(),
        k1: d.k1,
        k2: d.k2,
        k3: d.k3,
        p1: d.p1,
        p2: d.p2,
        width: intr.width(),
        height: intr.height(),
        pose: pose_spec(pose),
    }
}

pub fn category_spec(c: &VehicleCategory) -> CategorySpec {
    CategorySpec {
        name: c.name.as_str().into(),
        height: [c.height.min, c.height.max],
        forward: [c.forward.min, c.forward.max],
        lateral: [c.lateral.min, c.lateral.max],
        pitch_half_deg: c.pitch_half_deg,
        yaw_half_deg: c.yaw_half_deg,
        roll_half_deg: c.roll_half_deg,
    }
}

pub fn rig_spec(r: &DashcamRigSample) -> RigSpec {
    let p = r.perturbation;
    RigSpec {
        category: r.category.as_str().into(),
        base_profile_id: r.base_profile_id.clone(),
        perturbation: PerturbationSpec { pitch_deg: p.pitch_deg, yaw_deg: p.yaw_deg, roll_deg: p.roll_deg },
        camera: camera_spec(None, &r.intrinsics, &r.extrinsics),
    }
}
