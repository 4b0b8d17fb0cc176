//! LiDAR range-view ("spin image") codec.
//!
//! Rows index beams by elevation (row 0 is the highest beam for the
//! canonical descending table), columns index azimuth measured CCW from the
//! sensor's +x axis. Each cell stores normalized range, intensity,
//! elongation and a validity flag.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::math;
use crate::types::{ImagePlane, LidarPoint, PointCloud, RigidPose, Vec3};
use crate::{Error, Result};

pub const SPIN_CHANNELS: usize = 4;
pub const DEFAULT_MAX_RANGE: f64 = 150.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(usize)]
pub enum SpinChannel {
    Range = 0,
    Intensity = 1,
    Elongation = 2,
    Validity = 3,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LidarCalibration {
    sensor_to_vehicle: RigidPose,
    beam_elevations: Vec<f64>,
    descending: bool,
    azimuth_start: f64,
    azimuth_end: f64,
    n_columns: usize,
    max_range: f64,
}

impl LidarCalibration {
    pub fn new(
        sensor_to_vehicle: RigidPose,
        beam_elevations: Vec<f64>,
        azimuth_start: f64,
        azimuth_end: f64,
        n_columns: usize,
        max_range: f64,
    ) -> Result<Self> {
        if beam_elevations.is_empty() {
            return Err(Error::invalid("beam elevation table is empty"));
        }
        if beam_elevations.iter().any(|e| !e.is_finite()) {
            return Err(Error::invalid("beam elevations must be finite"));
        }
        let descending = beam_elevations.len() < 2 || beam_elevations[0] > beam_elevations[1];
        let monotonic = beam_elevations
            .windows(2)
            .all(|w| if descending { w[0] > w[1] } else { w[0] < w[1] });
        if !monotonic {
            return Err(Error::invalid("beam elevations must be strictly monotonic"));
        }
        let span = azimuth_end - azimuth_start;
        if !(span > 0.0 && span <= math::TAU + 1e-12) {
            return Err(Error::invalid(format!("azimuth span {span} outside (0, 2π]")));
        }
        if n_columns == 0 {
            return Err(Error::invalid("n_columns must be positive"));
        }
        if !(max_range > 0.0 && max_range.is_finite()) {
            return Err(Error::invalid(format!("max_range {max_range} must be positive")));
        }
        if !sensor_to_vehicle.is_finite() {
            return Err(Error::invalid("sensor pose is not finite"));
        }
        Ok(Self {
            sensor_to_vehicle,
            beam_elevations,
            descending,
            azimuth_start,
            azimuth_end,
            n_columns,
            max_range,
        })
    }

    /// Full 360° sensor with `rows` beams evenly spaced from `top` down to `bottom` (radians).
    pub fn uniform(sensor_to_vehicle: RigidPose, rows: usize, top: f64, bottom: f64, n_columns: usize) -> Result<Self> {
        let elevations = if rows == 1 {
            vec![top]
        } else {
            (0..rows).map(|r| top + (bottom - top) * r as f64 / (rows - 1) as f64).collect()
        };
        Self::new(sensor_to_vehicle, elevations, -math::PI, math::PI, n_columns, DEFAULT_MAX_RANGE)
    }

    pub fn sensor_to_vehicle(&self) -> &RigidPose {
        &self.sensor_to_vehicle
    }

    pub fn beam_elevations(&self) -> &[f64] {
        &self.beam_elevations
    }

    pub fn azimuth_start(&self) -> f64 {
        self.azimuth_start
    }

    pub fn azimuth_end(&self) -> f64 {
        self.azimuth_end
    }

    pub fn n_rows(&self) -> usize {
        self.beam_elevations.len()
    }

    pub fn n_columns(&self) -> usize {
        self.n_columns
    }

    pub fn max_range(&self) -> f64 {
        self.max_range
    }

    pub fn azimuth_span(&self) -> f64 {
        self.azimuth_end - self.azimuth_start
    }

    pub fn azimuth_step(&self) -> f64 {
        self.azimuth_span() / self.n_columns as f64
    }

    pub fn is_full_sweep(&self) -> bool {
        (self.azimuth_span() - math::TAU).abs() < 1e-9
    }

    /// Azimuth of the center of column `col`.
    pub fn column_azimuth(&self, col: usize) -> f64 {
        self.azimuth_start + (col as f64 + 0.5) * self.azimuth_step()
    }

    /// Column containing azimuth `a`, or `None` outside a partial sweep.
    pub fn column_of(&self, azimuth: f64) -> Option<usize> {
        let offset = math::rem_euclid(azimuth - self.azimuth_start, math::TAU);
        if !self.is_full_sweep() && offset >= self.azimuth_span() {
            return None;
        }
        let col = math::floor(offset / self.azimuth_step()) as usize;
        Some(col.min(self.n_columns - 1))
    }

    /// Nearest beam row for `elevation`, or `None` when it lies more than half
    /// the local beam spacing beyond either end of the table.
    pub fn row_of(&self, elevation: f64) -> Option<usize> {
        let b = &self.beam_elevations;
        let n = b.len();
        if n == 1 {
            return Some(0);
        }
        // work in a frame where the table is descending
        let key = |x: f64| if self.descending { x } else { -x };
        let e = key(elevation);
        let top_gap = key(b[0]) - key(b[1]);
        let bottom_gap = key(b[n - 2]) - key(b[n - 1]);
        if e > key(b[0]) + 0.5 * top_gap || e < key(b[n - 1]) - 0.5 * bottom_gap {
            return None;
        }
        let i = b.partition_point(|&x| key(x) > e);
        Some(match i {
            0 => 0,
            i if i >= n => n - 1,
            i => {
                let above = key(b[i - 1]) - e;
                let below = e - key(b[i]);
                if above <= below { i - 1 } else { i }
            }
        })
    }

    /// Same calibration with the beam table reversed.
    pub fn with_reversed_beams(&self) -> Self {
        let mut out = self.clone();
        out.beam_elevations.reverse();
        out.descending = !self.descending || self.beam_elevations.len() < 2;
        out
    }

    fn check_spin(&self, spin: &SpinImage) -> Result<()> {
        if spin.height() != self.n_rows() || spin.width() != self.n_columns {
            return Err(Error::shape(format!(
                "spin image is {}×{} but calibration expects {}×{}",
                spin.height(),
                spin.width(),
                self.n_rows(),
                self.n_columns
            )));
        }
        Ok(())
    }
}

/// `H × W × 4` normalized range view with channels `(range, intensity, elongation, validity)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinImage {
    height: usize,
    width: usize,
    data: Vec<f32>,
}

impl SpinImage {
    pub fn empty(height: usize, width: usize) -> Self {
        Self { height, width, data: vec![0.0; height * width * SPIN_CHANNELS] }
    }

    /// Validates channel ranges, binary validity and zero-filled invalid cells.
    pub fn new(height: usize, width: usize, data: Vec<f32>) -> Result<Self> {
        if data.len() != height * width * SPIN_CHANNELS {
            return Err(Error::shape(format!(
                "spin payload has {} values, expected {height}×{width}×{SPIN_CHANNELS}",
                data.len()
            )));
        }
        for (cell, v) in data.chunks_exact(SPIN_CHANNELS).enumerate() {
            if v.iter().any(|x| !(0.0..=1.0).contains(x)) {
                return Err(Error::invalid(format!("spin cell {cell} has values outside [0,1]")));
            }
            match v[3] {
                1.0 => {}
                0.0 if v[..3].iter().all(|&x| x == 0.0) => {}
                0.0 => return Err(Error::invalid(format!("invalid spin cell {cell} carries non-zero data"))),
                other => return Err(Error::invalid(format!("spin cell {cell} validity {other} is not binary"))),
            }
        }
        Ok(Self { height, width, data })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    #[inline]
    fn offset(&self, row: usize, col: usize) -> usize {
        (row * self.width + col) * SPIN_CHANNELS
    }

    pub fn cell(&self, row: usize, col: usize) -> [f32; 4] {
        let i = self.offset(row, col);
        [self.data[i], self.data[i + 1], self.data[i + 2], self.data[i + 3]]
    }

    pub fn get(&self, row: usize, col: usize, channel: SpinChannel) -> f32 {
        self.data[self.offset(row, col) + channel as usize]
    }

    pub fn is_valid(&self, row: usize, col: usize) -> bool {
        self.get(row, col, SpinChannel::Validity) == 1.0
    }

    /// Marks the cell valid with the given normalized values (clamped to `[0, 1]`).
    pub fn set_return(&mut self, row: usize, col: usize, range: f32, intensity: f32, elongation: f32) {
        let i = self.offset(row, col);
        self.data[i] = range.clamp(0.0, 1.0);
        self.data[i + 1] = intensity.clamp(0.0, 1.0);
        self.data[i + 2] = elongation.clamp(0.0, 1.0);
        self.data[i + 3] = 1.0;
    }

    pub fn clear(&mut self, row: usize, col: usize) {
        let i = self.offset(row, col);
        self.data[i..i + SPIN_CHANNELS].fill(0.0);
    }

    pub fn valid_count(&self) -> usize {
        self.data.chunks_exact(SPIN_CHANNELS).filter(|c| c[3] == 1.0).count()
    }

    /// One channel as an `H × W × 1` image.
    pub fn channel(&self, channel: SpinChannel) -> ImagePlane {
        let data = self.data.chunks_exact(SPIN_CHANNELS).map(|c| c[channel as usize] as f64).collect();
        ImagePlane::new(self.height, self.width, 1, data).expect("spin values are finite")
    }

    /// Rows in reverse order, matching [`LidarCalibration::with_reversed_beams`].
    pub fn flipped_rows(&self) -> Self {
        let row_len = self.width * SPIN_CHANNELS;
        let data = self.data.chunks_exact(row_len).rev().flatten().copied().collect();
        Self { height: self.height, width: self.width, data }
    }
}

/// Per-cell unit surface normals in the vehicle frame.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalMap {
    height: usize,
    width: usize,
    normals: Vec<Option<Vec3>>,
}

impl NormalMap {
    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn get(&self, row: usize, col: usize) -> Option<Vec3> {
        self.normals[row * self.width + col]
    }

    pub fn valid_count(&self) -> usize {
        self.normals.iter().filter(|n| n.is_some()).count()
    }

    pub fn iter(&self) -> impl Iterator<Item = Option<Vec3>> + '_ {
        self.normals.iter().copied()
    }

    /// `H × W × 3` image of the normals; invalid cells are zero vectors.
    pub fn to_image(&self) -> ImagePlane {
        let data = self
            .normals
            .iter()
            .flat_map(|n| n.unwrap_or(Vec3::ZERO).to_array())
            .collect();
        ImagePlane::new(self.height, self.width, 3, data).expect("normals are finite")
    }
}

/// Clamps `range_m` to the sensor's maximum range and scales it to `[0, 1]`.
pub fn normalize_range(range_m: f64, calib: &LidarCalibration) -> Result<f64> {
    if range_m.is_nan() || range_m < 0.0 {
        return Err(Error::invalid(format!("range {range_m} must be non-negative")));
    }
    Ok(range_m.min(calib.max_range) / calib.max_range)
}

fn ray_direction(azimuth: f64, elevation: f64) -> Vec3 {
    let ce = math::cos(elevation);
    Vec3::new(ce * math::cos(azimuth), ce * math::sin(azimuth), math::sin(elevation))
}

/// Sensor-frame point of every cell, `None` for invalid cells.
fn sensor_points(spin: &SpinImage, calib: &LidarCalibration) -> Vec<Option<Vec3>> {
    let mut out = Vec::with_capacity(spin.height * spin.width);
    for row in 0..spin.height {
        let elevation = calib.beam_elevations[row];
        for col in 0..spin.width {
            out.push(spin.is_valid(row, col).then(|| {
                let range_m = spin.get(row, col, SpinChannel::Range) as f64 * calib.max_range;
                ray_direction(calib.column_azimuth(col), elevation) * range_m
            }));
        }
    }
    out
}

/// Converts every valid cell to a vehicle-frame point.
pub fn unproject_spin(spin: &SpinImage, calib: &LidarCalibration) -> Result<PointCloud> {
    calib.check_spin(spin)?;
    let pose = &calib.sensor_to_vehicle;
    let points = sensor_points(spin, calib)
        .into_iter()
        .enumerate()
        .filter_map(|(i, p)| {
            let p = p?;
            let cell = &spin.data[i * SPIN_CHANNELS..];
            Some(LidarPoint::new(pose.transform_point(p), cell[1] as f64, cell[2] as f64))
        })
        .collect();
    PointCloud::new(points)
}

/// Bins points into the range view; the nearest return wins each cell.
pub fn project_points(cloud: &PointCloud, calib: &LidarCalibration) -> SpinImage {
    let (h, w) = (calib.n_rows(), calib.n_columns);
    let mut spin = SpinImage::empty(h, w);
    let mut nearest = vec![f64::INFINITY; h * w];
    let to_sensor = calib.sensor_to_vehicle.inverse();
    for p in cloud.points() {
        let s = to_sensor.transform_point(p.position);
        let range_m = s.norm();
        if !(range_m > 1e-9) {
            continue;
        }
        let azimuth = math::atan2(s.y, s.x);
        let elevation = math::atan2(s.z, math::sqrt(s.x * s.x + s.y * s.y));
        let (Some(row), Some(col)) = (calib.row_of(elevation), calib.column_of(azimuth)) else {
            continue;
        };
        let idx = row * w + col;
        if range_m < nearest[idx] {
            nearest[idx] = range_m;
            let r = (range_m.min(calib.max_range) / calib.max_range) as f32;
            spin.set_return(row, col, r, p.intensity as f32, p.elongation as f32);
        }
    }
    spin
}

/// Finite-difference normals from the unprojected point grid, oriented
/// towards the sensor. Cells without four valid axis neighbours are invalid.
pub fn compute_normals(spin: &SpinImage, calib: &LidarCalibration) -> Result<NormalMap> {
    calib.check_spin(spin)?;
    let (h, w) = (spin.height, spin.width);
    let pts = sensor_points(spin, calib);
    let wrap = calib.is_full_sweep();
    let at = |r: usize, c: usize| pts[r * w + c];
    let rot = calib.sensor_to_vehicle.rotation;

    let mut normals = vec![None; h * w];
    for r in 1..h.saturating_sub(1) {
        for c in 0..w {
            let Some(center) = at(r, c) else { continue };
            let (left, right) = if wrap {
                ((c + w - 1) % w, (c + 1) % w)
            } else if c == 0 || c + 1 == w {
                continue;
            } else {
                (c - 1, c + 1)
            };
            if left == right || left == c {
                continue;
            }
            let (Some(pl), Some(pr), Some(pu), Some(pd)) = (at(r, left), at(r, right), at(r - 1, c), at(r + 1, c))
            else {
                continue;
            };
            let dx = pr - pl;
            let dy = pd - pu;
            let cross = dx.cross(dy);
            if cross.norm() < 1e-12 {
                continue;
            }
            let mut n = cross.normalize();
            if n.dot(center) > 0.0 {
                n = -n;
            }
            normals[r * w + c] = Some(rot.rotate(n));
        }
    }
    Ok(NormalMap { height: h, width: w, normals })
}
