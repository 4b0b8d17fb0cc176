//! Sensor-geometry and numerical kernels for converting monocular dashcam
//! footage into multi-sensor driving logs.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, configuration
//! and the command-line tool live in the `sensorkit` crate.
//!
//! Modules follow the pipeline:
//!
//! - [`types`]: poses, point clouds and image planes shared by everything else.
//! - [`rangeview`]: LiDAR spin-image codec and finite-difference normals.
//! - [`cameras`]: pinhole/fisheye lens models and raymaps.
//! - [`sensor_synth`]: dashcam rig sampling and photometric normalization.
//! - [`splat`]: ray-traced rendering of static + rigid dynamic Gaussians.
//! - [`fusion`]: token layout, attention and conditioning-stack assembly.
//! - [`losses`]: LiDAR VAE loss terms, image/point metrics, gradient checks.
//! - [`rollout`]: autoregressive rollout with DAgger context mixing.

#![no_std]
// `!(x > 0.0)` also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod cameras;
pub mod error;
pub mod fusion;
pub mod losses;
pub(crate) mod math;
pub mod rangeview;
pub mod rng;
pub mod rollout;
pub mod sensor_synth;
pub mod splat;
pub mod types;

pub use error::{Error, Result};
pub use types::{ImagePlane, LidarPoint, PointCloud, Quat, RigidPose, Vec3};
