use alloc::vec::Vec;

use crate::{Error, Result};

/// Central-difference step.
pub const GRAD_CHECK_STEP: f64 = 1e-5;

/// Largest per-coordinate relative error between central differences of
/// `loss` and `grad(point)`.
pub fn grad_check(
    mut loss: impl FnMut(&[f64]) -> f64,
    grad: impl FnOnce(&[f64]) -> Vec<f64>,
    point: &[f64],
) -> Result<f64> {
    let analytic = grad(point);
    if analytic.len() != point.len() {
        return Err(Error::shape(alloc::format!(
            "gradient has {} entries for {} parameters",
            analytic.len(),
            point.len()
        )));
    }
    let mut probe = point.to_vec();
    let mut worst = 0.0f64;
    for i in 0..point.len() {
        let x = point[i];
        probe[i] = x + GRAD_CHECK_STEP;
        let up = loss(&probe);
        probe[i] = x - GRAD_CHECK_STEP;
        let down = loss(&probe);
        probe[i] = x;
        if !up.is_finite() || !down.is_finite() {
            return Err(Error::Numeric(alloc::format!("loss is not finite near coordinate {i}")));
        }
        let fd = (up - down) / (2.0 * GRAD_CHECK_STEP);
        let an = analytic[i];
        let rel = (fd - an).abs() / (fd.abs() + an.abs()).max(1e-8);
        worst = worst.max(rel);
    }
    Ok(worst)
}
