//! Ray-traced rendering of Gaussian scenes made of static splats and rigidly
//! moving canonical objects.
//!
//! Each Gaussian is evaluated once per ray at the point of peak density along
//! the ray. Responses are sorted front to back and alpha-composited.

use alloc::format;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::cameras::CameraIntrinsics;
use crate::math;
use crate::types::{ImagePlane, Mat3, Quat, RigidPose, Vec3};
use crate::{Error, Result};

/// Responses below this alpha are ignored.
pub const ALPHA_CUTOFF: f64 = 1e-4;
/// Compositing stops once transmittance falls below this.
pub const MIN_TRANSMITTANCE: f64 = 1e-3;
/// Pixels whose accumulated alpha stays below this are background.
pub const BACKGROUND_ALPHA: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gaussian3D {
    mean: Vec3,
    scale: Vec3,
    orientation: Quat,
    opacity: f64,
    color: Vec3,
    // R·diag(1/s²)·Rᵀ
    precision: Mat3,
}

impl Gaussian3D {
    pub fn new(mean: Vec3, scale: Vec3, orientation: Quat, opacity: f64, color: Vec3) -> Result<Self> {
        if !mean.is_finite() {
            return Err(Error::invalid("gaussian mean must be finite"));
        }
        if !(scale.x > 0.0 && scale.y > 0.0 && scale.z > 0.0 && scale.is_finite()) {
            return Err(Error::invalid(format!("gaussian scales {scale:?} must be positive")));
        }
        if !(opacity > 0.0 && opacity <= 1.0) {
            return Err(Error::invalid(format!("gaussian opacity {opacity} outside (0, 1]")));
        }
        if !(0..3).all(|i| (0.0..=1.0).contains(&color[i])) {
            return Err(Error::invalid(format!("gaussian color {color:?} outside [0, 1]")));
        }
        let r = orientation.to_matrix();
        let inv_var = Vec3::new(1.0 / (scale.x * scale.x), 1.0 / (scale.y * scale.y), 1.0 / (scale.z * scale.z));
        let precision = r.mul_mat(&Mat3::from_diagonal(inv_var)).mul_mat(&r.transpose());
        if !(precision.determinant() > 0.0 && precision.determinant().is_finite()) {
            return Err(Error::Numeric(format!("covariance for scales {scale:?} is singular")));
        }
        Ok(Self { mean, scale, orientation, opacity, color, precision })
    }

    pub fn isotropic(mean: Vec3, sigma: f64, opacity: f64, color: Vec3) -> Result<Self> {
        Self::new(mean, Vec3::new(sigma, sigma, sigma), Quat::IDENTITY, opacity, color)
    }

    pub fn mean(&self) -> Vec3 {
        self.mean
    }

    pub fn scale(&self) -> Vec3 {
        self.scale
    }

    pub fn orientation(&self) -> Quat {
        self.orientation
    }

    pub fn opacity(&self) -> f64 {
        self.opacity
    }

    pub fn color(&self) -> Vec3 {
        self.color
    }

    /// Covariance `R·diag(s²)·Rᵀ`.
    pub fn covariance(&self) -> Mat3 {
        let r = self.orientation.to_matrix();
        let s = self.scale;
        r.mul_mat(&Mat3::from_diagonal(Vec3::new(s.x * s.x, s.y * s.y, s.z * s.z))).mul_mat(&r.transpose())
    }

    /// The splat moved by `pose`: mean transformed, orientation composed.
    pub fn transformed(&self, pose: &RigidPose) -> Gaussian3D {
        let orientation = pose.rotation.mul(&self.orientation);
        let r = pose.rotation.to_matrix();
        Gaussian3D {
            mean: pose.transform_point(self.mean),
            orientation,
            precision: r.mul_mat(&self.precision).mul_mat(&r.transpose()),
            ..*self
        }
    }

    /// Radius beyond which the splat's response is below [`ALPHA_CUTOFF`].
    pub fn cutoff_radius(&self) -> f64 {
        let s = self.scale.x.max(self.scale.y).max(self.scale.z);
        let ratio = self.opacity / ALPHA_CUTOFF;
        if ratio <= 1.0 {
            0.0
        } else {
            s * math::sqrt(2.0 * math::ln(ratio))
        }
    }
}

/// Peak-density distance along the ray and the alpha there.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayResponse {
    pub t_peak: f64,
    pub alpha: f64,
}

/// Evaluates `g` along `origin + t·direction` at the Mahalanobis-closest point.
/// Gaussians peaking behind the origin contribute nothing.
pub fn ray_gaussian_response(origin: Vec3, direction: Vec3, g: &Gaussian3D) -> RayResponse {
    let p = &g.precision;
    let to_mean = g.mean - origin;
    let pd = p.mul_vec(direction);
    let denom = direction.dot(pd);
    let t_peak = pd.dot(to_mean) / denom;
    if !(t_peak > 0.0) {
        return RayResponse { t_peak, alpha: 0.0 };
    }
    let offset = origin + direction * t_peak - g.mean;
    let m2 = offset.dot(p.mul_vec(offset)).max(0.0);
    RayResponse { t_peak, alpha: g.opacity * math::exp(-0.5 * m2) }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DynamicObject {
    pub id: u32,
    /// Splats in the object's canonical frame.
    pub canonical: Vec<Gaussian3D>,
    /// Object-to-world pose at each timestep.
    pub trajectory: Vec<RigidPose>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianScene {
    static_splats: Vec<Gaussian3D>,
    objects: Vec<DynamicObject>,
    n_timesteps: usize,
}

impl GaussianScene {
    /// Every object trajectory must cover `0..n_timesteps`.
    pub fn new(static_splats: Vec<Gaussian3D>, objects: Vec<DynamicObject>, n_timesteps: usize) -> Result<Self> {
        if n_timesteps == 0 {
            return Err(Error::invalid("scene must span at least one timestep"));
        }
        for obj in &objects {
            if obj.trajectory.len() < n_timesteps {
                return Err(Error::invalid(format!(
                    "object {} trajectory has {} poses, scene spans {n_timesteps} steps",
                    obj.id,
                    obj.trajectory.len()
                )));
            }
        }
        Ok(Self { static_splats, objects, n_timesteps })
    }

    pub fn static_only(static_splats: Vec<Gaussian3D>) -> Self {
        Self { static_splats, objects: Vec::new(), n_timesteps: 1 }
    }

    pub fn empty() -> Self {
        Self::static_only(Vec::new())
    }

    pub fn static_splats(&self) -> &[Gaussian3D] {
        &self.static_splats
    }

    pub fn objects(&self) -> &[DynamicObject] {
        &self.objects
    }

    pub fn n_timesteps(&self) -> usize {
        self.n_timesteps
    }

    pub fn splat_count(&self) -> usize {
        self.static_splats.len() + self.objects.iter().map(|o| o.canonical.len()).sum::<usize>()
    }
}

/// All splats posed at timestep `t`: static splats first, then each object's
/// canonical splats transformed by its pose at `t`.
pub fn instantiate(scene: &GaussianScene, t: usize) -> Result<Vec<Gaussian3D>> {
    if t >= scene.n_timesteps {
        return Err(Error::TimeDomain { t, len: scene.n_timesteps });
    }
    let mut out = scene.static_splats.clone();
    for obj in &scene.objects {
        let pose = &obj.trajectory[t];
        out.extend(obj.canonical.iter().map(|g| g.transformed(pose)));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RenderOptions {
    pub background: Vec3,
}

impl Default for RenderOptions {
    fn default() -> Self {
        Self { background: Vec3::ZERO }
    }
}

/// Composited result for one ray.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RaySample {
    pub color: Vec3,
    /// Weighted mean peak distance, 0 for background rays.
    pub depth: f64,
    /// `1 - final transmittance`.
    pub alpha: f64,
}

#[derive(Debug, Clone, Copy)]
struct Hit {
    t: f64,
    alpha: f64,
    color: Vec3,
}

impl Hit {
    // total order on everything that affects compositing, so the result is
    // independent of the input order
    fn cmp(&self, o: &Hit) -> Ordering {
        self.t
            .total_cmp(&o.t)
            .then(self.alpha.total_cmp(&o.alpha))
            .then(self.color.x.total_cmp(&o.color.x))
            .then(self.color.y.total_cmp(&o.color.y))
            .then(self.color.z.total_cmp(&o.color.z))
    }
}

/// Splats prepared for repeated ray queries.
#[derive(Debug, Clone)]
pub struct PreparedSplats {
    splats: Vec<Gaussian3D>,
    radii: Vec<f64>,
}

impl PreparedSplats {
    pub fn new(splats: Vec<Gaussian3D>) -> Self {
        let radii = splats.iter().map(Gaussian3D::cutoff_radius).collect();
        Self { splats, radii }
    }

    pub fn len(&self) -> usize {
        self.splats.len()
    }

    pub fn is_empty(&self) -> bool {
        self.splats.is_empty()
    }

    /// Front-to-back composite along one ray.
    pub fn trace(&self, origin: Vec3, direction: Vec3, opts: &RenderOptions, scratch: &mut Vec<(f64, f64, Vec3)>) -> RaySample {
        scratch.clear();
        for (g, &radius) in self.splats.iter().zip(&self.radii) {
            // the Mahalanobis minimum along the line is at least the Euclidean
            // line distance over the largest scale, so this skip is exact
            let to_mean = g.mean - origin;
            let along = to_mean.dot(direction);
            let perp2 = to_mean.norm_squared() - along * along;
            if perp2 > radius * radius {
                continue;
            }
            let resp = ray_gaussian_response(origin, direction, g);
            if resp.alpha > ALPHA_CUTOFF {
                scratch.push((resp.t_peak, resp.alpha, g.color));
            }
        }
        composite(scratch, opts)
    }
}

fn composite(hits: &mut [(f64, f64, Vec3)], opts: &RenderOptions) -> RaySample {
    hits.sort_unstable_by(|a, b| {
        Hit { t: a.0, alpha: a.1, color: a.2 }.cmp(&Hit { t: b.0, alpha: b.1, color: b.2 })
    });
    let mut transmittance = 1.0;
    let mut color = Vec3::ZERO;
    let mut depth_sum = 0.0;
    let mut weight_sum = 0.0;
    for &(t, alpha, c) in hits.iter() {
        let w = alpha * transmittance;
        color += c * w;
        depth_sum += w * t;
        weight_sum += w;
        transmittance *= 1.0 - alpha;
        if transmittance < MIN_TRANSMITTANCE {
            break;
        }
    }
    let alpha = 1.0 - transmittance;
    if alpha < BACKGROUND_ALPHA {
        return RaySample { color: opts.background, depth: 0.0, alpha };
    }
    let color = color + opts.background * transmittance;
    let clamp = |v: f64| v.clamp(0.0, 1.0);
    RaySample {
        color: Vec3::new(clamp(color.x), clamp(color.y), clamp(color.z)),
        depth: depth_sum / weight_sum,
        alpha,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RenderOutput {
    /// `H × W × 3` RGB in `[0, 1]`.
    pub color: ImagePlane,
    /// `H × W × 1` distance along the ray in meters, 0 marks background.
    pub depth: ImagePlane,
}

/// Renders a block of rows `rows.start..rows.end`; this is the unit of work
/// for parallel callers.
pub fn render_rows(
    splats: &PreparedSplats,
    intrinsics: &CameraIntrinsics,
    cam_pose: &RigidPose,
    opts: &RenderOptions,
    rows: core::ops::Range<usize>,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let w = intrinsics.width();
    let mut color = Vec::with_capacity(rows.len() * w * 3);
    let mut depth = Vec::with_capacity(rows.len() * w);
    let mut scratch = Vec::new();
    let origin = cam_pose.translation;
    for r in rows {
        for c in 0..w {
            let ray = intrinsics.unproject(c as f64 + 0.5, r as f64 + 0.5)?;
            let dir = cam_pose.rotate(ray).normalize();
            let s = splats.trace(origin, dir, opts, &mut scratch);
            color.extend_from_slice(&s.color.to_array());
            depth.push(s.depth);
        }
    }
    Ok((color, depth))
}

/// Renders the scene at timestep `t` through a camera with camera-to-world pose `cam_pose`.
pub fn render(
    scene: &GaussianScene,
    intrinsics: &CameraIntrinsics,
    cam_pose: &RigidPose,
    t: usize,
    opts: &RenderOptions,
) -> Result<RenderOutput> {
    let splats = PreparedSplats::new(instantiate(scene, t)?);
    render_prepared(&splats, intrinsics, cam_pose, opts)
}

pub fn render_prepared(
    splats: &PreparedSplats,
    intrinsics: &CameraIntrinsics,
    cam_pose: &RigidPose,
    opts: &RenderOptions,
) -> Result<RenderOutput> {
    let (h, w) = (intrinsics.height(), intrinsics.width());
    let (color, depth) = render_rows(splats, intrinsics, cam_pose, opts, 0..h)?;
    Ok(RenderOutput { color: ImagePlane::new(h, w, 3, color)?, depth: ImagePlane::new(h, w, 1, depth)? })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn red() -> Vec3 {
        Vec3::new(1.0, 0.0, 0.0)
    }

    fn blue() -> Vec3 {
        Vec3::new(0.0, 0.0, 1.0)
    }

    #[test]
    fn response_through_mean_is_opacity() {
        let g = Gaussian3D::isotropic(Vec3::new(0.0, 0.0, 7.0), 0.4, 1.0, red()).unwrap();
        let r = ray_gaussian_response(Vec3::ZERO, Vec3::Z, &g);
        assert!((r.alpha - 1.0).abs() < 1e-15);
        assert!((r.t_peak - 7.0).abs() < 1e-12);
    }

    #[test]
    fn response_with_perpendicular_offset() {
        let (d, s) = (0.3, 0.5);
        let g = Gaussian3D::isotropic(Vec3::new(d, 0.0, 4.0), s, 1.0, red()).unwrap();
        let r = ray_gaussian_response(Vec3::ZERO, Vec3::Z, &g);
        assert!((r.alpha - math::exp(-d * d / (2.0 * s * s))).abs() < 1e-12);
    }

    #[test]
    fn gaussian_behind_origin_is_invisible() {
        let g = Gaussian3D::isotropic(Vec3::new(0.0, 0.0, -3.0), 0.5, 1.0, red()).unwrap();
        assert_eq!(ray_gaussian_response(Vec3::ZERO, Vec3::Z, &g).alpha, 0.0);
    }

    #[test]
    fn anisotropic_peak_matches_line_minimum() {
        let q = Quat::new(0.9, 0.2, -0.3, 0.1).unwrap();
        let g = Gaussian3D::new(Vec3::new(0.5, -0.2, 6.0), Vec3::new(0.3, 1.2, 0.5), q, 0.8, red()).unwrap();
        let dir = Vec3::new(0.05, 0.02, 1.0).normalize();
        let r = ray_gaussian_response(Vec3::ZERO, dir, &g);
        // brute-force scan of the density along the ray
        let density = |t: f64| {
            let x = dir * t - g.mean();
            g.opacity() * math::exp(-0.5 * x.dot(g.precision.mul_vec(x)))
        };
        let (mut best_t, mut best) = (0.0, 0.0);
        let mut t = 0.0;
        while t < 12.0 {
            if density(t) > best {
                best = density(t);
                best_t = t;
            }
            t += 1e-4;
        }
        assert!((r.t_peak - best_t).abs() < 2e-4);
        assert!((r.alpha - best).abs() < 1e-6);
    }

    #[test]
    fn covariance_times_precision_is_identity() {
        let q = Quat::new(0.4, -0.6, 0.2, 0.5).unwrap();
        let g = Gaussian3D::new(Vec3::ZERO, Vec3::new(0.2, 0.7, 1.5), q, 1.0, red()).unwrap();
        let prod = g.covariance().mul_mat(&g.precision);
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((prod.0[i][j] - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn invalid_gaussians_rejected() {
        assert!(Gaussian3D::isotropic(Vec3::ZERO, 0.0, 1.0, red()).is_err());
        assert!(Gaussian3D::isotropic(Vec3::ZERO, 1.0, 0.0, red()).is_err());
        assert!(Gaussian3D::isotropic(Vec3::ZERO, 1.0, 1.5, red()).is_err());
        assert!(Gaussian3D::isotropic(Vec3::ZERO, 1.0, 1.0, Vec3::new(2.0, 0.0, 0.0)).is_err());
    }

    #[test]
    fn instantiate_poses_objects() {
        let g = Gaussian3D::isotropic(Vec3::new(1.0, 2.0, 3.0), 0.5, 1.0, red()).unwrap();
        let scene = GaussianScene::static_only(vec![g]);
        assert_eq!(instantiate(&scene, 0).unwrap(), vec![g]);

        let obj = DynamicObject {
            id: 1,
            canonical: vec![g],
            trajectory: vec![RigidPose::IDENTITY, RigidPose::from_translation(Vec3::new(5.0, 0.0, 0.0))],
        };
        let scene = GaussianScene::new(vec![], vec![obj], 2).unwrap();
        assert_eq!(instantiate(&scene, 0).unwrap()[0].mean(), g.mean());
        assert_eq!(instantiate(&scene, 1).unwrap()[0].mean(), Vec3::new(6.0, 2.0, 3.0));
        assert!(matches!(instantiate(&scene, 2), Err(Error::TimeDomain { t: 2, len: 2 })));
    }

    #[test]
    fn short_trajectory_rejected() {
        let obj = DynamicObject { id: 3, canonical: vec![], trajectory: vec![RigidPose::IDENTITY] };
        assert!(GaussianScene::new(vec![], vec![obj], 2).is_err());
    }

    #[test]
    fn rotated_object_composes_orientation() {
        let g = Gaussian3D::new(Vec3::X, Vec3::new(1.0, 0.1, 0.1), Quat::IDENTITY, 1.0, red()).unwrap();
        let pose = RigidPose::from_rotation(Quat::from_yaw(core::f64::consts::FRAC_PI_2));
        let moved = g.transformed(&pose);
        assert!(moved.mean().max_abs_diff(Vec3::Y) < 1e-12);
        // long axis now along y
        let cov = moved.covariance();
        assert!((cov.0[1][1] - 1.0).abs() < 1e-12 && (cov.0[0][0] - 0.01).abs() < 1e-12);
        let fresh = Gaussian3D::new(moved.mean(), moved.scale(), moved.orientation(), 1.0, red()).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert!((fresh.precision.0[i][j] - moved.precision.0[i][j]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn empty_scene_is_background() {
        let cam = CameraIntrinsics::pinhole(10.0, 10.0, 4.0, 4.0, 8, 8).unwrap();
        let opts = RenderOptions { background: Vec3::new(0.2, 0.3, 0.4) };
        let out = render(&GaussianScene::empty(), &cam, &RigidPose::IDENTITY, 0, &opts).unwrap();
        for px in out.color.data().chunks_exact(3) {
            assert_eq!(px, &[0.2, 0.3, 0.4]);
        }
        assert!(out.depth.data().iter().all(|&d| d == 0.0));
    }

    #[test]
    fn two_layer_composite() {
        let near = Gaussian3D::isotropic(Vec3::new(0.0, 0.0, 5.0), 0.2, 0.6, red()).unwrap();
        let far = Gaussian3D::isotropic(Vec3::new(0.0, 0.0, 10.0), 0.2, 1.0, blue()).unwrap();
        let s = PreparedSplats::new(vec![far, near]).trace(Vec3::ZERO, Vec3::Z, &RenderOptions::default(), &mut Vec::new());
        assert!((s.color.x - 0.6).abs() < 1e-3);
        assert!((s.color.z - 0.4).abs() < 1e-3);
        assert!((s.depth - (0.6 * 5.0 + 0.4 * 10.0)).abs() < 1e-9);
    }
}
