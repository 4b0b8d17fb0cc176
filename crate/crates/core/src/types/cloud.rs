use alloc::format;
use alloc::vec::Vec;

use super::geometry::Vec3;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LidarPoint {
    pub position: Vec3,
    pub intensity: f64,
    pub elongation: f64,
}

impl LidarPoint {
    pub fn new(position: Vec3, intensity: f64, elongation: f64) -> Self {
        Self { position, intensity, elongation }
    }
}

/// Points in the vehicle frame with per-return intensity and elongation in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PointCloud {
    points: Vec<LidarPoint>,
}

impl PointCloud {
    pub fn new(points: Vec<LidarPoint>) -> Result<Self> {
        for (i, p) in points.iter().enumerate() {
            if !p.position.is_finite() {
                return Err(Error::invalid(format!("point {i} has non-finite coordinates")));
            }
            if !(0.0..=1.0).contains(&p.intensity) {
                return Err(Error::invalid(format!("point {i} intensity {} outside [0,1]", p.intensity)));
            }
            if !(0.0..=1.0).contains(&p.elongation) {
                return Err(Error::invalid(format!("point {i} elongation {} outside [0,1]", p.elongation)));
            }
        }
        Ok(Self { points })
    }

    /// Geometry-only cloud with zero intensity and elongation.
    pub fn from_positions(positions: impl IntoIterator<Item = Vec3>) -> Result<Self> {
        Self::new(positions.into_iter().map(|p| LidarPoint::new(p, 0.0, 0.0)).collect())
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn points(&self) -> &[LidarPoint] {
        &self.points
    }

    pub fn positions(&self) -> impl Iterator<Item = Vec3> + '_ {
        self.points.iter().map(|p| p.position)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn into_points(self) -> Vec<LidarPoint> {
        self.points
    }
}
