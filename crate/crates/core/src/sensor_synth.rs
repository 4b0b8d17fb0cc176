//! Dashcam rig synthesis: category-conditioned extrinsics, perturbed
//! calibrated intrinsics, and photometric normalization.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::cameras::CameraIntrinsics;
use crate::math;
use crate::rng::SplitRng;
use crate::types::{ImagePlane, Quat, RigidPose, Vec3};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CategoryName {
    Sedan,
    Suv,
    Truck,
}

impl CategoryName {
    pub fn as_str(&self) -> &'static str {
        match self {
            CategoryName::Sedan => "sedan",
            CategoryName::Suv => "suv",
            CategoryName::Truck => "truck",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "sedan" => Some(CategoryName::Sedan),
            "suv" => Some(CategoryName::Suv),
            "truck" => Some(CategoryName::Truck),
            _ => None,
        }
    }
}

/// Closed interval `[min, max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Range {
    pub min: f64,
    pub max: f64,
}

impl Range {
    pub const fn new(min: f64, max: f64) -> Self {
        Self { min, max }
    }

    pub fn symmetric(half: f64) -> Self {
        Self::new(-half, half)
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.min && v <= self.max
    }

    pub fn center(&self) -> f64 {
        0.5 * (self.min + self.max)
    }

    fn sample(&self, rng: &mut SplitRng) -> f64 {
        rng.uniform(self.min, self.max)
    }
}

/// Mounting distribution for one vehicle type. Translations are in meters in
/// the vehicle frame (forward = +x, lateral = +y, height = +z); angles are
/// half-widths in degrees.
#[derive(Debug, Clone, PartialEq)]
pub struct VehicleCategory {
    pub name: CategoryName,
    pub height: Range,
    pub forward: Range,
    pub lateral: Range,
    pub pitch_half_deg: f64,
    pub yaw_half_deg: f64,
    pub roll_half_deg: f64,
}

impl VehicleCategory {
    pub fn sedan() -> Self {
        Self {
            name: CategoryName::Sedan,
            height: Range::new(1.1, 1.3),
            forward: Range::new(2.0, 2.5),
            lateral: Range::symmetric(0.5),
            pitch_half_deg: 10.0,
            yaw_half_deg: 5.0,
            roll_half_deg: 3.0,
        }
    }

    /// Toolkit default, not a measured distribution.
    pub fn suv() -> Self {
        Self {
            name: CategoryName::Suv,
            height: Range::new(1.4, 1.7),
            forward: Range::new(1.8, 2.3),
            ..Self::sedan()
        }
    }

    /// Toolkit default, not a measured distribution.
    pub fn truck() -> Self {
        Self {
            name: CategoryName::Truck,
            height: Range::new(1.9, 2.4),
            forward: Range::new(1.2, 1.8),
            ..Self::sedan()
        }
    }

    pub fn builtin(name: CategoryName) -> Self {
        match name {
            CategoryName::Sedan => Self::sedan(),
            CategoryName::Suv => Self::suv(),
            CategoryName::Truck => Self::truck(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (field, r) in [("height_range", self.height), ("forward_range", self.forward), ("lateral_range", self.lateral)] {
            if !(r.min.is_finite() && r.max.is_finite() && r.min <= r.max) {
                return Err(Error::Config(format!("{field}: empty or non-finite range [{}, {}]", r.min, r.max)));
            }
        }
        for (field, h) in [("pitch_half_deg", self.pitch_half_deg), ("yaw_half_deg", self.yaw_half_deg), ("roll_half_deg", self.roll_half_deg)] {
            if !(h >= 0.0 && h.is_finite()) {
                return Err(Error::Config(format!("{field}: must be a non-negative finite angle")));
            }
        }
        Ok(())
    }
}

/// Relative noise widths applied to a calibrated base profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntrinsicNoise {
    /// Focal lengths are scaled by `U[1 - focal, 1 + focal]`.
    pub focal: f64,
    /// Principal point shifts by `U[-principal, principal]` times the image size.
    pub principal: f64,
}

impl Default for IntrinsicNoise {
    fn default() -> Self {
        Self { focal: 0.05, principal: 0.01 }
    }
}

impl IntrinsicNoise {
    pub const NONE: IntrinsicNoise = IntrinsicNoise { focal: 0.0, principal: 0.0 };
}

/// A calibrated real-world lens the sampler draws from.
#[derive(Debug, Clone, PartialEq)]
pub struct DashcamProfile {
    pub id: String,
    pub intrinsics: CameraIntrinsics,
}

/// Installation angles in degrees, applied as yaw ∘ pitch ∘ roll about the
/// vehicle axes z, y, x.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MountPerturbation {
    pub pitch_deg: f64,
    pub yaw_deg: f64,
    pub roll_deg: f64,
}

impl MountPerturbation {
    pub fn rotation(&self) -> Quat {
        let rad = math::PI / 180.0;
        let yaw = Quat::from_axis_angle(Vec3::Z, self.yaw_deg * rad);
        let pitch = Quat::from_axis_angle(Vec3::Y, self.pitch_deg * rad);
        let roll = Quat::from_axis_angle(Vec3::X, self.roll_deg * rad);
        yaw.mul(&pitch).mul(&roll)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DashcamRigSample {
    pub intrinsics: CameraIntrinsics,
    /// Camera-to-vehicle pose.
    pub extrinsics: RigidPose,
    pub perturbation: MountPerturbation,
    pub category: CategoryName,
    pub base_profile_id: String,
}

impl DashcamRigSample {
    /// Checks the sample against the category it claims to come from.
    pub fn conforms_to(&self, category: &VehicleCategory) -> bool {
        let t = self.extrinsics.translation;
        let p = &self.perturbation;
        self.category == category.name
            && category.forward.contains(t.x)
            && category.lateral.contains(t.y)
            && category.height.contains(t.z)
            && p.pitch_deg.abs() <= category.pitch_half_deg
            && p.yaw_deg.abs() <= category.yaw_half_deg
            && p.roll_deg.abs() <= category.roll_half_deg
            && self.intrinsics.validate().is_ok()
    }
}

/// Draws one rig. Sampling order is fixed: translation x, y, z; angles
/// pitch, yaw, roll; profile index; then the intrinsic factors.
pub fn sample_rig(
    rng: &mut SplitRng,
    category: &VehicleCategory,
    profiles: &[DashcamProfile],
    noise: IntrinsicNoise,
) -> Result<DashcamRigSample> {
    if profiles.is_empty() {
        return Err(Error::Config(String::from("dashcam profile list is empty")));
    }
    category.validate()?;

    let forward = category.forward.sample(rng);
    let lateral = category.lateral.sample(rng);
    let height = category.height.sample(rng);
    let perturbation = MountPerturbation {
        pitch_deg: Range::symmetric(category.pitch_half_deg).sample(rng),
        yaw_deg: Range::symmetric(category.yaw_half_deg).sample(rng),
        roll_deg: Range::symmetric(category.roll_half_deg).sample(rng),
    };
    let profile = &profiles[rng.index(profiles.len())];
    let intrinsics = perturb_intrinsics(&profile.intrinsics, rng, noise)?;

    let mount = RigidPose::camera_mount(Vec3::new(forward, lateral, height), 0.0);
    let extrinsics = RigidPose::new(perturbation.rotation().mul(&mount.rotation), mount.translation);
    Ok(DashcamRigSample {
        intrinsics,
        extrinsics,
        perturbation,
        category: category.name,
        base_profile_id: profile.id.clone(),
    })
}

/// Scales fx, fy by independent uniform factors and jitters the principal
/// point; distortion is untouched. Draw order: fx, fy, cx, cy.
pub fn perturb_intrinsics(base: &CameraIntrinsics, rng: &mut SplitRng, noise: IntrinsicNoise) -> Result<CameraIntrinsics> {
    let fx = base.fx() * rng.uniform(1.0 - noise.focal, 1.0 + noise.focal);
    let fy = base.fy() * rng.uniform(1.0 - noise.focal, 1.0 + noise.focal);
    let (w, h) = (base.width() as f64, base.height() as f64);
    let cx = base.cx() + rng.uniform(-noise.principal, noise.principal) * w;
    let cy = base.cy() + rng.uniform(-noise.principal, noise.principal) * h;
    // keep the principal point strictly inside the image
    let inside = |c: f64, extent: f64| c.clamp(0.0, extent - extent * f64::EPSILON);
    base.with_geometry(fx, fy, inside(cx, w), inside(cy, h))
}

/// Exposure gain followed by gamma correction, `v ↦ clamp01((gain·v)^(1/γ))`.
pub fn photometric_normalize(img: &ImagePlane, exposure_gain: f64, gamma: f64) -> Result<ImagePlane> {
    if !(exposure_gain > 0.0 && exposure_gain.is_finite()) {
        return Err(Error::invalid(format!("exposure gain {exposure_gain} must be positive")));
    }
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::invalid(format!("gamma {gamma} must be positive")));
    }
    let inv_gamma = 1.0 / gamma;
    Ok(img.map(|v| math::pow((exposure_gain * v).max(0.0), inv_gamma).clamp(0.0, 1.0)))
}

/// Default calibrated lens set used when no profile file is supplied.
pub fn builtin_profiles() -> Vec<DashcamProfile> {
    use crate::cameras::{Distortion, LensModel};
    let wide = CameraIntrinsics::new(
        LensModel::PinholeBrown,
        760.0,
        760.0,
        640.0,
        360.0,
        Distortion { k1: -0.28, k2: 0.07, k3: 0.0, p1: 2e-4, p2: -1e-4 },
        1280,
        720,
    )
    .expect("builtin profile is valid");
    let fisheye = CameraIntrinsics::new(
        LensModel::FisheyeEquidistant,
        520.0,
        520.0,
        640.0,
        360.0,
        Distortion::radial(0.03, -0.01, 0.0),
        1280,
        720,
    )
    .expect("builtin profile is valid");
    alloc::vec![
        DashcamProfile { id: String::from("wide_pinhole_720p"), intrinsics: wide },
        DashcamProfile { id: String::from("fisheye_720p"), intrinsics: fisheye },
    ]
}
