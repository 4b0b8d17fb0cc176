//! LPIPS-style distance over pluggable feature stacks.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::math;
use crate::types::ImagePlane;
use crate::{Error, Result};

/// One feature level: `height × width × channels` activations plus a
/// non-negative per-channel weight.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureLayer {
    height: usize,
    width: usize,
    channels: usize,
    activations: Vec<f64>,
    weights: Vec<f64>,
}

impl FeatureLayer {
    pub fn new(height: usize, width: usize, channels: usize, activations: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if activations.len() != height * width * channels {
            return Err(Error::shape(format!(
                "feature layer {height}×{width}×{channels} got {} activations",
                activations.len()
            )));
        }
        if weights.len() != channels {
            return Err(Error::shape(format!("{} channel weights for {channels} channels", weights.len())));
        }
        if weights.iter().any(|w| !(*w >= 0.0 && w.is_finite())) {
            return Err(Error::invalid("channel weights must be non-negative"));
        }
        if height * width == 0 {
            return Err(Error::Degenerate("feature layer has no spatial cells".into()));
        }
        Ok(Self { height, width, channels, activations, weights })
    }

    pub fn activations(&self) -> &[f64] {
        &self.activations
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.height, self.width, self.channels)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FeatureStack {
    pub layers: Vec<FeatureLayer>,
}

impl FeatureStack {
    /// All activations concatenated in layer order.
    pub fn flat_activations(&self) -> Vec<f64> {
        self.layers.iter().flat_map(|l| l.activations.iter().copied()).collect()
    }

    /// Same structure with activations replaced from a flat vector.
    pub fn with_flat_activations(&self, flat: &[f64]) -> Result<FeatureStack> {
        let total: usize = self.layers.iter().map(|l| l.activations.len()).sum();
        if flat.len() != total {
            return Err(Error::shape(format!("{} activations for a stack of {total}", flat.len())));
        }
        let mut offset = 0;
        let layers = self
            .layers
            .iter()
            .map(|l| {
                let n = l.activations.len();
                let layer = FeatureLayer { activations: flat[offset..offset + n].to_vec(), ..l.clone() };
                offset += n;
                layer
            })
            .collect();
        Ok(FeatureStack { layers })
    }
}

/// Produces the feature stack LPIPS compares.
pub trait FeatureExtractor {
    fn extract(&self, grid: &ImagePlane) -> Result<FeatureStack>;
}

/// One layer holding the raw channels with unit weights.
#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityExtractor;

impl FeatureExtractor for IdentityExtractor {
    fn extract(&self, grid: &ImagePlane) -> Result<FeatureStack> {
        let layer = FeatureLayer::new(
            grid.height(),
            grid.width(),
            grid.channels(),
            grid.data().to_vec(),
            vec![1.0; grid.channels()],
        )?;
        Ok(FeatureStack { layers: vec![layer] })
    }
}

fn check_stacks(a: &FeatureStack, b: &FeatureStack) -> Result<()> {
    if a.layers.len() != b.layers.len() {
        return Err(Error::shape(format!("{} vs {} feature layers", a.layers.len(), b.layers.len())));
    }
    for (i, (la, lb)) in a.layers.iter().zip(&b.layers).enumerate() {
        if la.shape() != lb.shape() {
            return Err(Error::shape(format!("layer {i} shapes {:?} and {:?} differ", la.shape(), lb.shape())));
        }
    }
    Ok(())
}

fn unit(v: &[f64], out: &mut [f64]) -> f64 {
    let n = math::sqrt(v.iter().map(|x| x * x).sum());
    if n > 0.0 {
        for (o, x) in out.iter_mut().zip(v) {
            *o = x / n;
        }
    } else {
        out.fill(0.0);
    }
    n
}

/// `Σ_layers mean_{h,w} ‖w ⊙ (ŷ_a − ŷ_b)‖²` with channel-unit-normalized
/// activations. Channel weights come from `a`.
pub fn lpips_distance(a: &FeatureStack, b: &FeatureStack) -> Result<f64> {
    check_stacks(a, b)?;
    let mut total = 0.0;
    for (la, lb) in a.layers.iter().zip(&b.layers) {
        let c = la.channels;
        let (mut na, mut nb) = (vec![0.0; c], vec![0.0; c]);
        let mut layer_sum = 0.0;
        for (va, vb) in la.activations.chunks_exact(c.max(1)).zip(lb.activations.chunks_exact(c.max(1))) {
            unit(va, &mut na);
            unit(vb, &mut nb);
            layer_sum += (0..c).map(|k| {
                let d = la.weights[k] * (na[k] - nb[k]);
                d * d
            }).sum::<f64>();
        }
        total += layer_sum / (la.height * la.width) as f64;
    }
    Ok(total)
}

/// Gradient of [`lpips_distance`] with respect to `a`'s raw activations,
/// flattened in layer order. Zero feature vectors get a zero gradient.
pub fn lpips_grad(a: &FeatureStack, b: &FeatureStack) -> Result<Vec<f64>> {
    check_stacks(a, b)?;
    let mut grad = Vec::with_capacity(a.flat_activations().len());
    for (la, lb) in a.layers.iter().zip(&b.layers) {
        let c = la.channels;
        let cells = (la.height * la.width) as f64;
        let (mut na, mut nb, mut g) = (vec![0.0; c], vec![0.0; c], vec![0.0; c]);
        for (va, vb) in la.activations.chunks_exact(c.max(1)).zip(lb.activations.chunks_exact(c.max(1))) {
            let norm = unit(va, &mut na);
            unit(vb, &mut nb);
            if norm == 0.0 {
                grad.extend(core::iter::repeat_n(0.0, c));
                continue;
            }
            // ∂/∂n = 2w²(n − m); ∂n/∂y = (I − nnᵀ)/‖y‖
            for k in 0..c {
                g[k] = 2.0 * la.weights[k] * la.weights[k] * (na[k] - nb[k]) / cells;
            }
            let proj: f64 = (0..c).map(|k| na[k] * g[k]).sum();
            grad.extend((0..c).map(|k| (g[k] - na[k] * proj) / norm));
        }
    }
    Ok(grad)
}
