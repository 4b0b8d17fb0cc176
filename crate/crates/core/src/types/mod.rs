//! Geometric and tensor value types shared across the toolkit.
//!
//! Frames: the vehicle frame is right-handed with +x forward, +y left and
//! +z up. Camera frames use +z along the optical axis, +x right, +y down.

mod cloud;
mod geometry;
mod image;
mod pose;

pub use cloud::{LidarPoint, PointCloud};
pub use geometry::{Mat3, Quat, Vec3};
pub use image::{ImagePlane, Rect};
pub use pose::RigidPose;
