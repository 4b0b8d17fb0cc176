//! LiDAR VAE objective, evaluation metrics and gradient verification.
//!
//! Grids are passed as flat row-major slices; shapes are checked by length.
//! Every differentiable loss has a matching `*_grad` with the analytic
//! gradient with respect to its first (predicted) argument.

mod chamfer;
mod gradcheck;
mod image_metrics;
mod lpips;
mod vae;

pub use chamfer::{chamfer, chamfer_points, ChamferVariant};
pub use gradcheck::{grad_check, GRAD_CHECK_STEP};
pub use image_metrics::{mse, psnr, ssim, SsimParams};
pub use lpips::{
    lpips_distance, lpips_grad, FeatureExtractor, FeatureLayer, FeatureStack, IdentityExtractor,
};
pub use vae::{total_vae_loss, LidarPrediction, LossTerms, LossWeights};

use alloc::format;
use alloc::vec::Vec;

use crate::math;
use crate::{Error, Result};

/// Probabilities are clamped to `[BCE_EPS, 1 - BCE_EPS]` before taking logs.
pub const BCE_EPS: f64 = 1e-7;

fn check_len(a: &[f64], b: &[f64], what: &str) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::shape(format!("{what}: lengths {} and {} differ", a.len(), b.len())));
    }
    Ok(())
}

fn weight_total(pred: &[f64], weight: Option<&[f64]>) -> Result<f64> {
    match weight {
        None => {
            if pred.is_empty() {
                return Err(Error::Degenerate("L1 over an empty grid".into()));
            }
            Ok(pred.len() as f64)
        }
        Some(w) => {
            check_len(pred, w, "L1 weights")?;
            if w.iter().any(|&x| !(x >= 0.0 && x.is_finite())) {
                return Err(Error::invalid("L1 weights must be non-negative and finite"));
            }
            let total: f64 = w.iter().sum();
            if total == 0.0 {
                return Err(Error::Degenerate("all L1 weights are zero".into()));
            }
            Ok(total)
        }
    }
}

/// Mean absolute error, or its weighted mean when `weight` is given
/// (cells with zero weight are excluded).
pub fn l1_loss(pred: &[f64], target: &[f64], weight: Option<&[f64]>) -> Result<f64> {
    check_len(pred, target, "L1")?;
    let total = weight_total(pred, weight)?;
    let sum: f64 = match weight {
        None => pred.iter().zip(target).map(|(p, t)| (p - t).abs()).sum(),
        Some(w) => pred.iter().zip(target).zip(w).map(|((p, t), w)| w * (p - t).abs()).sum(),
    };
    Ok(sum / total)
}

/// Subgradient of [`l1_loss`]; zero at ties.
pub fn l1_grad(pred: &[f64], target: &[f64], weight: Option<&[f64]>) -> Result<Vec<f64>> {
    check_len(pred, target, "L1")?;
    let total = weight_total(pred, weight)?;
    Ok(pred
        .iter()
        .zip(target)
        .enumerate()
        .map(|(i, (p, t))| {
            let w = weight.map_or(1.0, |w| w[i]);
            let s = if p > t { 1.0 } else if p < t { -1.0 } else { 0.0 };
            w * s / total
        })
        .collect())
}

fn check_bce(pred: &[f64], target: &[f64]) -> Result<()> {
    check_len(pred, target, "BCE")?;
    if pred.is_empty() {
        return Err(Error::Degenerate("BCE over an empty grid".into()));
    }
    if let Some(i) = target.iter().position(|&t| t != 0.0 && t != 1.0) {
        return Err(Error::invalid(format!("BCE target at {i} is {} (must be 0 or 1)", target[i])));
    }
    if let Some(i) = pred.iter().position(|p| !(0.0..=1.0).contains(p)) {
        return Err(Error::invalid(format!("BCE prediction at {i} is {} (must be a probability)", pred[i])));
    }
    Ok(())
}

/// Mean binary cross-entropy of predicted validity probabilities.
pub fn bce_validity(pred_prob: &[f64], target: &[f64]) -> Result<f64> {
    check_bce(pred_prob, target)?;
    let sum: f64 = pred_prob
        .iter()
        .zip(target)
        .map(|(&p, &t)| {
            let p = p.clamp(BCE_EPS, 1.0 - BCE_EPS);
            -(t * math::ln(p) + (1.0 - t) * math::ln(1.0 - p))
        })
        .sum();
    Ok(sum / pred_prob.len() as f64)
}

pub fn bce_grad(pred_prob: &[f64], target: &[f64]) -> Result<Vec<f64>> {
    check_bce(pred_prob, target)?;
    let n = pred_prob.len() as f64;
    Ok(pred_prob
        .iter()
        .zip(target)
        .map(|(&p, &t)| {
            if !(BCE_EPS..=1.0 - BCE_EPS).contains(&p) {
                0.0
            } else {
                (-t / p + (1.0 - t) / (1.0 - p)) / n
            }
        })
        .collect())
}

/// Diagonal Gaussian posterior `N(μ, diag(σ²))`.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentGaussianStats {
    mu: Vec<f64>,
    sigma_sq: Vec<f64>,
}

impl LatentGaussianStats {
    pub fn new(mu: Vec<f64>, sigma_sq: Vec<f64>) -> Result<Self> {
        if mu.len() != sigma_sq.len() {
            return Err(Error::shape(format!("μ has {} dims, σ² has {}", mu.len(), sigma_sq.len())));
        }
        if mu.iter().any(|m| !m.is_finite()) {
            return Err(Error::invalid("latent means must be finite"));
        }
        if let Some(i) = sigma_sq.iter().position(|&s| !(s > 0.0 && s.is_finite())) {
            return Err(Error::invalid(format!("σ²[{i}] = {} must be positive and finite", sigma_sq[i])));
        }
        Ok(Self { mu, sigma_sq })
    }

    /// The standard normal prior in `dims` dimensions.
    pub fn prior(dims: usize) -> Self {
        Self { mu: alloc::vec![0.0; dims], sigma_sq: alloc::vec![1.0; dims] }
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn sigma_sq(&self) -> &[f64] {
        &self.sigma_sq
    }

    pub fn dims(&self) -> usize {
        self.mu.len()
    }
}

/// `½ Σ (μ² + σ² − ln σ² − 1)`, the KL divergence to the standard normal.
pub fn kl_divergence(stats: &LatentGaussianStats) -> f64 {
    0.5 * stats
        .mu
        .iter()
        .zip(&stats.sigma_sq)
        .map(|(&m, &s)| m * m + s - math::ln(s) - 1.0)
        .sum::<f64>()
}

/// Gradients `(∂/∂μ, ∂/∂σ²)` of [`kl_divergence`].
pub fn kl_grad(stats: &LatentGaussianStats) -> (Vec<f64>, Vec<f64>) {
    let dmu = stats.mu.clone();
    let dsig = stats.sigma_sq.iter().map(|&s| 0.5 * (1.0 - 1.0 / s)).collect();
    (dmu, dsig)
}
