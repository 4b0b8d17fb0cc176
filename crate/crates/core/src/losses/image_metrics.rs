use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::math;
use crate::types::ImagePlane;
use crate::{Error, Result};

/// Mean squared error over all samples.
pub fn mse(a: &ImagePlane, b: &ImagePlane) -> Result<f64> {
    a.check_same_shape(b)?;
    if a.data().is_empty() {
        return Err(Error::Degenerate("MSE of an empty image".into()));
    }
    let sum: f64 = a.data().iter().zip(b.data()).map(|(x, y)| (x - y) * (x - y)).sum();
    Ok(sum / a.data().len() as f64)
}

/// PSNR in dB for unit dynamic range; `f64::INFINITY` when the images match.
pub fn psnr(a: &ImagePlane, b: &ImagePlane) -> Result<f64> {
    let e = mse(a, b)?;
    if e == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * math::log10(1.0 / e))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SsimParams {
    pub window: usize,
    pub sigma: f64,
    pub k1: f64,
    pub k2: f64,
    pub dynamic_range: f64,
}

impl Default for SsimParams {
    fn default() -> Self {
        Self { window: 11, sigma: 1.5, k1: 0.01, k2: 0.03, dynamic_range: 1.0 }
    }
}

impl SsimParams {
    /// Normalized 1-D Gaussian taps.
    pub fn kernel(&self) -> Vec<f64> {
        let half = (self.window as f64 - 1.0) / 2.0;
        let mut k: Vec<f64> = (0..self.window)
            .map(|i| {
                let d = i as f64 - half;
                math::exp(-d * d / (2.0 * self.sigma * self.sigma))
            })
            .collect();
        let s: f64 = k.iter().sum();
        k.iter_mut().for_each(|v| *v /= s);
        k
    }
}

/// Separable valid-mode filter of one channel. Output is `(h-k+1)×(w-k+1)`.
fn filter_valid(src: &[f64], h: usize, w: usize, k: &[f64]) -> Vec<f64> {
    let n = k.len();
    let (oh, ow) = (h + 1 - n, w + 1 - n);
    let mut rows = vec![0.0; h * ow];
    for r in 0..h {
        for c in 0..ow {
            rows[r * ow + c] = k.iter().enumerate().map(|(i, kv)| kv * src[r * w + c + i]).sum();
        }
    }
    let mut out = vec![0.0; oh * ow];
    for r in 0..oh {
        for c in 0..ow {
            out[r * ow + c] = k.iter().enumerate().map(|(i, kv)| kv * rows[(r + i) * ow + c]).sum();
        }
    }
    out
}

/// Mean SSIM over valid windows and channels with default parameters.
pub fn ssim(a: &ImagePlane, b: &ImagePlane) -> Result<f64> {
    ssim_with(a, b, &SsimParams::default())
}

pub fn ssim_with(a: &ImagePlane, b: &ImagePlane, params: &SsimParams) -> Result<f64> {
    a.check_same_shape(b)?;
    let (h, w, ch) = a.shape();
    if params.window == 0 || h < params.window || w < params.window || ch == 0 {
        return Err(Error::shape(format!(
            "SSIM needs at least {0}×{0} pixels, got {h}×{w}",
            params.window
        )));
    }
    let c1 = (params.k1 * params.dynamic_range) * (params.k1 * params.dynamic_range);
    let c2 = (params.k2 * params.dynamic_range) * (params.k2 * params.dynamic_range);
    let k = params.kernel();
    let plane = |img: &ImagePlane, c: usize, f: &dyn Fn(f64, f64) -> f64, other: &ImagePlane| -> Vec<f64> {
        (0..h * w).map(|i| f(img.data()[i * ch + c], other.data()[i * ch + c])).collect()
    };

    let mut total = 0.0;
    let mut count = 0usize;
    for c in 0..ch {
        let mu_a = filter_valid(&plane(a, c, &|x, _| x, b), h, w, &k);
        let mu_b = filter_valid(&plane(b, c, &|x, _| x, a), h, w, &k);
        let aa = filter_valid(&plane(a, c, &|x, _| x * x, b), h, w, &k);
        let bb = filter_valid(&plane(b, c, &|x, _| x * x, a), h, w, &k);
        let ab = filter_valid(&plane(a, c, &|x, y| x * y, b), h, w, &k);
        for i in 0..mu_a.len() {
            let (ma, mb) = (mu_a[i], mu_b[i]);
            let var_a = aa[i] - ma * ma;
            let var_b = bb[i] - mb * mb;
            let cov = ab[i] - ma * mb;
            let num = (2.0 * ma * mb + c1) * (2.0 * cov + c2);
            let den = (ma * ma + mb * mb + c1) * (var_a + var_b + c2);
            total += num / den;
            count += 1;
        }
    }
    Ok(total / count as f64)
}
