//! Lens models and raymaps.
//!
//! Camera frame: +z along the optical axis, +x right, +y down. Poses passed
//! to this module are camera-to-world (or camera-to-vehicle).

use alloc::format;
use alloc::vec::Vec;

use crate::math;
use crate::types::{ImagePlane, RigidPose, Vec3};
use crate::{Error, Result};

/// Damping applied to each fixed-point update when inverting distortion.
pub const UNDISTORT_DAMPING: f64 = 0.7;
pub const UNDISTORT_MAX_ITERATIONS: usize = 50;
pub const UNDISTORT_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LensModel {
    /// Pinhole with Brown-Conrady radial (k1..k3) and tangential (p1, p2) distortion.
    PinholeBrown,
    /// Equidistant fisheye, `r = f·θ·(1 + k1θ² + k2θ⁴ + k3θ⁶)`.
    FisheyeEquidistant,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Distortion {
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    pub p1: f64,
    pub p2: f64,
}

impl Distortion {
    pub const NONE: Distortion = Distortion { k1: 0.0, k2: 0.0, k3: 0.0, p1: 0.0, p2: 0.0 };

    pub fn radial(k1: f64, k2: f64, k3: f64) -> Self {
        Distortion { k1, k2, k3, p1: 0.0, p2: 0.0 }
    }

    fn radial_factor(&self, r2: f64) -> f64 {
        1.0 + r2 * (self.k1 + r2 * (self.k2 + r2 * self.k3))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraIntrinsics {
    model: LensModel,
    fx: f64,
    fy: f64,
    cx: f64,
    cy: f64,
    distortion: Distortion,
    width: usize,
    height: usize,
}

impl CameraIntrinsics {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        model: LensModel,
        fx: f64,
        fy: f64,
        cx: f64,
        cy: f64,
        distortion: Distortion,
        width: usize,
        height: usize,
    ) -> Result<Self> {
        let intr = Self { model, fx, fy, cx, cy, distortion, width, height };
        intr.validate()?;
        Ok(intr)
    }

    pub fn pinhole(fx: f64, fy: f64, cx: f64, cy: f64, width: usize, height: usize) -> Result<Self> {
        Self::new(LensModel::PinholeBrown, fx, fy, cx, cy, Distortion::NONE, width, height)
    }

    pub fn fisheye(fx: f64, fy: f64, cx: f64, cy: f64, width: usize, height: usize) -> Result<Self> {
        Self::new(LensModel::FisheyeEquidistant, fx, fy, cx, cy, Distortion::NONE, width, height)
    }

    pub fn with_distortion(self, distortion: Distortion) -> Result<Self> {
        Self::new(self.model, self.fx, self.fy, self.cx, self.cy, distortion, self.width, self.height)
    }

    /// Checks every field invariant; the error names the offending field.
    pub fn validate(&self) -> Result<()> {
        let field = |name: &str, msg: &str| Err(Error::invalid(format!("{name}: {msg}")));
        if self.width == 0 {
            return field("width", "must be positive");
        }
        if self.height == 0 {
            return field("height", "must be positive");
        }
        if !(self.fx > 0.0 && self.fx.is_finite()) {
            return field("fx", "must be positive and finite");
        }
        if !(self.fy > 0.0 && self.fy.is_finite()) {
            return field("fy", "must be positive and finite");
        }
        if !(self.cx >= 0.0 && self.cx < self.width as f64) {
            return field("cx", "must lie in [0, width)");
        }
        if !(self.cy >= 0.0 && self.cy < self.height as f64) {
            return field("cy", "must lie in [0, height)");
        }
        let d = &self.distortion;
        for (name, v) in [("k1", d.k1), ("k2", d.k2), ("k3", d.k3), ("p1", d.p1), ("p2", d.p2)] {
            if !v.is_finite() {
                return field(name, "must be finite");
            }
        }
        if self.model == LensModel::FisheyeEquidistant && (d.p1 != 0.0 || d.p2 != 0.0) {
            return field("p1", "tangential distortion must be zero for fisheye lenses");
        }
        Ok(())
    }

    pub fn model(&self) -> LensModel {
        self.model
    }

    pub fn fx(&self) -> f64 {
        self.fx
    }

    pub fn fy(&self) -> f64 {
        self.fy
    }

    pub fn cx(&self) -> f64 {
        self.cx
    }

    pub fn cy(&self) -> f64 {
        self.cy
    }

    pub fn distortion(&self) -> &Distortion {
        &self.distortion
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Same lens with new focal lengths and principal point, keeping distortion.
    pub fn with_geometry(&self, fx: f64, fy: f64, cx: f64, cy: f64) -> Result<Self> {
        Self::new(self.model, fx, fy, cx, cy, self.distortion, self.width, self.height)
    }

    /// Maps a camera-frame point to pixel coordinates.
    pub fn project(&self, p: Vec3) -> Result<(f64, f64)> {
        let (xd, yd) = match self.model {
            LensModel::PinholeBrown => {
                if !(p.z > 0.0) {
                    return Err(Error::ProjectionDomain(format!("point {p:?} is behind the pinhole camera")));
                }
                self.distort_pinhole(p.x / p.z, p.y / p.z)
            }
            LensModel::FisheyeEquidistant => {
                let r = math::sqrt(p.x * p.x + p.y * p.y);
                if r == 0.0 && !(p.z > 0.0) {
                    return Err(Error::ProjectionDomain(format!("point {p:?} has no fisheye projection")));
                }
                if r == 0.0 {
                    (0.0, 0.0)
                } else {
                    let theta = math::atan2(r, p.z);
                    let rd = self.fisheye_radius(theta);
                    (rd * p.x / r, rd * p.y / r)
                }
            }
        };
        Ok((self.fx * xd + self.cx, self.fy * yd + self.cy))
    }

    fn distort_pinhole(&self, x: f64, y: f64) -> (f64, f64) {
        let d = &self.distortion;
        let r2 = x * x + y * y;
        let radial = d.radial_factor(r2);
        let xd = x * radial + 2.0 * d.p1 * x * y + d.p2 * (r2 + 2.0 * x * x);
        let yd = y * radial + d.p1 * (r2 + 2.0 * y * y) + 2.0 * d.p2 * x * y;
        (xd, yd)
    }

    fn fisheye_radius(&self, theta: f64) -> f64 {
        theta * self.distortion.radial_factor(theta * theta)
    }

    /// Unit ray through pixel `(u, v)`, inverting distortion by damped
    /// fixed-point iteration.
    pub fn unproject(&self, u: f64, v: f64) -> Result<Vec3> {
        if !(u >= 0.0 && u <= self.width as f64 && v >= 0.0 && v <= self.height as f64) {
            return Err(Error::ProjectionDomain(format!(
                "pixel ({u}, {v}) outside {}×{} image",
                self.width, self.height
            )));
        }
        let xd = (u - self.cx) / self.fx;
        let yd = (v - self.cy) / self.fy;
        match self.model {
            LensModel::PinholeBrown => {
                let (x, y) = self.undistort_pinhole(xd, yd)?;
                Ok(Vec3::new(x, y, 1.0).normalize())
            }
            LensModel::FisheyeEquidistant => {
                let rd = math::sqrt(xd * xd + yd * yd);
                if rd == 0.0 {
                    return Ok(Vec3::Z);
                }
                let theta = self.undistort_fisheye(rd)?;
                if !(theta < math::PI) {
                    return Err(Error::ProjectionDomain(format!("pixel ({u}, {v}) maps past the fisheye horizon")));
                }
                let s = math::sin(theta);
                Ok(Vec3::new(s * xd / rd, s * yd / rd, math::cos(theta)))
            }
        }
    }

    fn undistort_pinhole(&self, xd: f64, yd: f64) -> Result<(f64, f64)> {
        let d = self.distortion;
        let (mut x, mut y) = (xd, yd);
        let mut residual = f64::INFINITY;
        for _ in 0..=UNDISTORT_MAX_ITERATIONS {
            let (px, py) = self.distort_pinhole(x, y);
            residual = math::sqrt((px - xd) * (px - xd) + (py - yd) * (py - yd));
            if residual < UNDISTORT_TOLERANCE {
                return Ok((x, y));
            }
            let r2 = x * x + y * y;
            let radial = d.radial_factor(r2);
            if !(radial > 0.0) || !residual.is_finite() {
                break;
            }
            let tx = 2.0 * d.p1 * x * y + d.p2 * (r2 + 2.0 * x * x);
            let ty = d.p1 * (r2 + 2.0 * y * y) + 2.0 * d.p2 * x * y;
            let gx = (xd - tx) / radial;
            let gy = (yd - ty) / radial;
            x += UNDISTORT_DAMPING * (gx - x);
            y += UNDISTORT_DAMPING * (gy - y);
        }
        Err(Error::NonConvergence { iterations: UNDISTORT_MAX_ITERATIONS, residual })
    }

    fn undistort_fisheye(&self, rd: f64) -> Result<f64> {
        let mut theta = rd;
        let mut residual = f64::INFINITY;
        for _ in 0..=UNDISTORT_MAX_ITERATIONS {
            residual = (self.fisheye_radius(theta) - rd).abs();
            if residual < UNDISTORT_TOLERANCE {
                return Ok(theta);
            }
            let factor = self.distortion.radial_factor(theta * theta);
            if !(factor > 0.0) || !residual.is_finite() {
                break;
            }
            theta += UNDISTORT_DAMPING * (rd / factor - theta);
        }
        Err(Error::NonConvergence { iterations: UNDISTORT_MAX_ITERATIONS, residual })
    }
}

/// Per-pixel ray origins and unit directions in a reference camera frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Raymap {
    height: usize,
    width: usize,
    origins: Vec<Vec3>,
    directions: Vec<Vec3>,
}

impl Raymap {
    pub const CHANNELS: usize = 6;

    pub fn new(height: usize, width: usize, origins: Vec<Vec3>, directions: Vec<Vec3>) -> Result<Self> {
        let n = height * width;
        if origins.len() != n || directions.len() != n {
            return Err(Error::shape(format!("raymap needs {n} origins and directions")));
        }
        if let Some(i) = directions.iter().position(|d| (d.norm() - 1.0).abs() > 1e-6) {
            return Err(Error::invalid(format!("raymap direction {i} is not unit length")));
        }
        Ok(Self { height, width, origins, directions })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn origin(&self, row: usize, col: usize) -> Vec3 {
        self.origins[row * self.width + col]
    }

    pub fn direction(&self, row: usize, col: usize) -> Vec3 {
        self.directions[row * self.width + col]
    }

    pub fn origins(&self) -> &[Vec3] {
        &self.origins
    }

    pub fn directions(&self) -> &[Vec3] {
        &self.directions
    }

    /// `H × W × 6` image: origin xyz followed by direction xyz.
    pub fn to_image(&self) -> ImagePlane {
        let data = self
            .origins
            .iter()
            .zip(&self.directions)
            .flat_map(|(o, d)| [o.x, o.y, o.z, d.x, d.y, d.z])
            .collect();
        ImagePlane::new(self.height, self.width, Self::CHANNELS, data).expect("raymap values are finite")
    }

    pub fn from_image(img: &ImagePlane) -> Result<Self> {
        if img.channels() != Self::CHANNELS {
            return Err(Error::shape(format!("raymap image has {} channels, expected 6", img.channels())));
        }
        let (origins, directions) = img
            .data()
            .chunks_exact(Self::CHANNELS)
            .map(|c| (Vec3::new(c[0], c[1], c[2]), Vec3::new(c[3], c[4], c[5])))
            .unzip();
        Self::new(img.height(), img.width(), origins, directions)
    }
}

/// Raymap of a camera at `target_pose` expressed in the frame of the camera at
/// `reference_pose`, sampled at the centers of `downsample × downsample` pixel blocks.
pub fn make_raymap(
    intrinsics: &CameraIntrinsics,
    target_pose: &RigidPose,
    reference_pose: &RigidPose,
    downsample: usize,
) -> Result<Raymap> {
    let (w, h) = (intrinsics.width(), intrinsics.height());
    if downsample == 0 || w % downsample != 0 || h % downsample != 0 {
        return Err(Error::invalid(format!("downsample {downsample} must divide {w}×{h}")));
    }
    let relative = target_pose.relative_to(reference_pose);
    let (rows, cols) = (h / downsample, w / downsample);
    let step = downsample as f64;
    let mut directions = Vec::with_capacity(rows * cols);
    for i in 0..rows {
        for j in 0..cols {
            let ray = intrinsics.unproject((j as f64 + 0.5) * step, (i as f64 + 0.5) * step)?;
            directions.push(relative.rotate(ray).normalize());
        }
    }
    let origins = alloc::vec![relative.translation; rows * cols];
    Raymap::new(rows, cols, origins, directions)
}
