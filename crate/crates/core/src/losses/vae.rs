//! Total LiDAR VAE objective: weighted L1, BCE, LPIPS and KL terms.

use alloc::format;
use alloc::vec::Vec;

use super::lpips::{lpips_distance, FeatureExtractor};
use super::{bce_validity, kl_divergence, l1_loss, LatentGaussianStats};
use crate::rangeview::{compute_normals, LidarCalibration, SpinChannel, SpinImage};
use crate::types::ImagePlane;
use crate::{Error, Result};

/// Decoder output: normalized range/intensity/elongation and validity probability per cell.
#[derive(Debug, Clone, PartialEq)]
pub struct LidarPrediction {
    pub height: usize,
    pub width: usize,
    pub range: Vec<f64>,
    pub intensity: Vec<f64>,
    pub elongation: Vec<f64>,
    pub validity_prob: Vec<f64>,
}

impl LidarPrediction {
    /// Prediction that reproduces `spin` exactly (validity probabilities 0/1).
    pub fn from_spin(spin: &SpinImage) -> Self {
        let ch = |c| spin.channel(c).into_data();
        Self {
            height: spin.height(),
            width: spin.width(),
            range: ch(SpinChannel::Range),
            intensity: ch(SpinChannel::Intensity),
            elongation: ch(SpinChannel::Elongation),
            validity_prob: ch(SpinChannel::Validity),
        }
    }

    /// Hard spin image: cells with probability ≥ 0.5 become valid returns.
    pub fn to_spin(&self) -> SpinImage {
        let mut spin = SpinImage::empty(self.height, self.width);
        for r in 0..self.height {
            for c in 0..self.width {
                let i = r * self.width + c;
                if self.validity_prob[i] >= 0.5 {
                    spin.set_return(r, c, self.range[i] as f32, self.intensity[i] as f32, self.elongation[i] as f32);
                }
            }
        }
        spin
    }

    fn check(&self) -> Result<()> {
        let n = self.height * self.width;
        for (name, v) in [
            ("range", &self.range),
            ("intensity", &self.intensity),
            ("elongation", &self.elongation),
            ("validity_prob", &self.validity_prob),
        ] {
            if v.len() != n {
                return Err(Error::shape(format!("prediction {name} has {} cells, expected {n}", v.len())));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::invalid(format!("prediction {name} has non-finite values")));
            }
        }
        Ok(())
    }

    fn grid(&self, values: &[f64]) -> ImagePlane {
        ImagePlane::new(self.height, self.width, 1, values.to_vec()).expect("checked prediction")
    }
}

/// Non-negative weight per loss term, all 1.0 by default.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights {
    pub range: f64,
    pub elongation: f64,
    pub intensity: f64,
    pub bce: f64,
    pub normals: f64,
    pub lpips_elongation: f64,
    pub lpips_intensity: f64,
    pub lpips_validity: f64,
    pub kl: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self::from_array([1.0; 9])
    }
}

impl LossWeights {
    pub const NAMES: [&'static str; 9] = [
        "range",
        "elongation",
        "intensity",
        "bce",
        "normals",
        "lpips_elongation",
        "lpips_intensity",
        "lpips_validity",
        "kl",
    ];

    pub fn from_array(w: [f64; 9]) -> Self {
        Self {
            range: w[0],
            elongation: w[1],
            intensity: w[2],
            bce: w[3],
            normals: w[4],
            lpips_elongation: w[5],
            lpips_intensity: w[6],
            lpips_validity: w[7],
            kl: w[8],
        }
    }

    pub fn to_array(&self) -> [f64; 9] {
        [
            self.range,
            self.elongation,
            self.intensity,
            self.bce,
            self.normals,
            self.lpips_elongation,
            self.lpips_intensity,
            self.lpips_validity,
            self.kl,
        ]
    }

    pub fn validate(&self) -> Result<()> {
        for (name, w) in Self::NAMES.iter().zip(self.to_array()) {
            if !(w >= 0.0 && w.is_finite()) {
                return Err(Error::Config(format!("{name}: loss weight must be non-negative and finite")));
            }
        }
        Ok(())
    }
}

/// Unweighted value of every term, in [`LossWeights::NAMES`] order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossTerms {
    pub range_l1: f64,
    pub elongation_l1: f64,
    pub intensity_l1: f64,
    pub validity_bce: f64,
    pub normals_lpips: f64,
    pub elongation_lpips: f64,
    pub intensity_lpips: f64,
    pub validity_lpips: f64,
    pub kl: f64,
}

impl LossTerms {
    pub fn to_array(&self) -> [f64; 9] {
        [
            self.range_l1,
            self.elongation_l1,
            self.intensity_l1,
            self.validity_bce,
            self.normals_lpips,
            self.elongation_lpips,
            self.intensity_lpips,
            self.validity_lpips,
            self.kl,
        ]
    }

    /// Weighted sum of the terms.
    pub fn weighted_total(&self, weights: &LossWeights) -> f64 {
        self.to_array().iter().zip(weights.to_array()).map(|(t, w)| t * w).sum()
    }
}

/// Evaluates the full objective. L1 terms are averaged over cells that are
/// valid in the target; the normals term compares finite-difference normals
/// of the (thresholded) prediction and of the target.
pub fn total_vae_loss(
    prediction: &LidarPrediction,
    target: &SpinImage,
    stats: &LatentGaussianStats,
    weights: &LossWeights,
    calib: &LidarCalibration,
    extractor: &dyn FeatureExtractor,
) -> Result<(f64, LossTerms)> {
    prediction.check()?;
    weights.validate()?;
    if prediction.height != target.height() || prediction.width != target.width() {
        return Err(Error::shape(format!(
            "prediction {}×{} vs target {}×{}",
            prediction.height,
            prediction.width,
            target.height(),
            target.width()
        )));
    }
    let t_range = target.channel(SpinChannel::Range);
    let t_int = target.channel(SpinChannel::Intensity);
    let t_elong = target.channel(SpinChannel::Elongation);
    let t_valid = target.channel(SpinChannel::Validity);
    let mask = t_valid.data();
    // a target with no returns contributes no L1 signal
    let masked_l1 = |pred: &[f64], tgt: &ImagePlane| -> Result<f64> {
        if mask.iter().all(|&m| m == 0.0) {
            return Ok(0.0);
        }
        l1_loss(pred, tgt.data(), Some(mask))
    };

    let lpips = |pred: &ImagePlane, tgt: &ImagePlane| -> Result<f64> {
        lpips_distance(&extractor.extract(tgt)?, &extractor.extract(pred)?)
    };

    let pred_normals = compute_normals(&prediction.to_spin(), calib)?.to_image();
    let target_normals = compute_normals(target, calib)?.to_image();

    let terms = LossTerms {
        range_l1: masked_l1(&prediction.range, &t_range)?,
        elongation_l1: masked_l1(&prediction.elongation, &t_elong)?,
        intensity_l1: masked_l1(&prediction.intensity, &t_int)?,
        validity_bce: bce_validity(&prediction.validity_prob, t_valid.data())?,
        normals_lpips: lpips(&pred_normals, &target_normals)?,
        elongation_lpips: lpips(&prediction.grid(&prediction.elongation), &t_elong)?,
        intensity_lpips: lpips(&prediction.grid(&prediction.intensity), &t_int)?,
        validity_lpips: lpips(&prediction.grid(&prediction.validity_prob), &t_valid)?,
        kl: kl_divergence(stats),
    };
    Ok((terms.weighted_total(weights), terms))
}
