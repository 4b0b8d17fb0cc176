//! Reference forward kernels for multi-view/LiDAR fusion: unified token
//! sequences, single-head self-attention, and the two ways of attaching
//! the dashcam condition to the target views.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::cameras::{make_raymap, CameraIntrinsics, Raymap};
use crate::math;
use crate::types::{ImagePlane, Rect, RigidPose};
use crate::{Error, Result};

/// Dense row-major tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        let n: usize = shape.iter().product();
        if n != data.len() {
            return Err(Error::shape(format!("tensor shape {shape:?} needs {n} values, got {}", data.len())));
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let n = shape.iter().product();
        Self { shape, data: vec![0.0; n] }
    }

    pub fn from_fn(shape: Vec<usize>, mut f: impl FnMut(usize) -> f64) -> Self {
        let n: usize = shape.iter().product();
        Self { data: (0..n).map(&mut f).collect(), shape }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    fn expect_rank(&self, rank: usize, what: &str) -> Result<()> {
        if self.shape.len() != rank {
            return Err(Error::shape(format!("{what} must have rank {rank}, got shape {:?}", self.shape)));
        }
        Ok(())
    }
}

/// Row-major `rows × cols` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::shape(format!("matrix {rows}×{cols} needs {} values, got {}", rows * cols, data.len())));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn matmul(&self, o: &Matrix) -> Result<Matrix> {
        if self.cols != o.rows {
            return Err(Error::shape(format!("cannot multiply {}×{} by {}×{}", self.rows, self.cols, o.rows, o.cols)));
        }
        let mut out = Matrix::zeros(self.rows, o.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == 0.0 {
                    continue;
                }
                let src = &o.data[k * o.cols..(k + 1) * o.cols];
                let dst = &mut out.data[i * o.cols..(i + 1) * o.cols];
                for (d, &b) in dst.iter_mut().zip(src) {
                    *d += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |r, c| self.get(c, r))
    }
}

/// Where each modality lives in the unified token sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TokenLayout {
    pub n_views: usize,
    pub camera_grid: (usize, usize),
    pub lidar_grid: (usize, usize),
    pub dim: usize,
}

impl TokenLayout {
    pub fn camera_tokens(&self) -> usize {
        self.n_views * self.camera_grid.0 * self.camera_grid.1
    }

    pub fn lidar_tokens(&self) -> usize {
        self.lidar_grid.0 * self.lidar_grid.1
    }

    pub fn total_tokens(&self) -> usize {
        self.camera_tokens() + self.lidar_tokens()
    }
}

/// Flattens camera features `[N, h_C, w_C, d]` (view-major, then row-major)
/// followed by LiDAR features `[h_L, w_L, d]` into one `(K_C + K_L) × d` sequence.
pub fn flatten_unified(cam_feats: &Tensor, lidar_feats: &Tensor) -> Result<(Matrix, TokenLayout)> {
    cam_feats.expect_rank(4, "camera features")?;
    lidar_feats.expect_rank(3, "lidar features")?;
    let (cs, ls) = (cam_feats.shape(), lidar_feats.shape());
    if cs[3] != ls[2] {
        return Err(Error::shape(format!("camera feature dim {} != lidar feature dim {}", cs[3], ls[2])));
    }
    let layout = TokenLayout { n_views: cs[0], camera_grid: (cs[1], cs[2]), lidar_grid: (ls[0], ls[1]), dim: cs[3] };
    let mut data = Vec::with_capacity(cam_feats.data.len() + lidar_feats.data.len());
    data.extend_from_slice(&cam_feats.data);
    data.extend_from_slice(&lidar_feats.data);
    Ok((Matrix::new(layout.total_tokens(), layout.dim, data)?, layout))
}

/// Inverse of [`flatten_unified`].
pub fn unflatten_unified(tokens: &Matrix, layout: &TokenLayout) -> Result<(Tensor, Tensor)> {
    if tokens.rows != layout.total_tokens() || tokens.cols != layout.dim {
        return Err(Error::shape(format!(
            "token matrix {}×{} does not match layout ({}×{})",
            tokens.rows,
            tokens.cols,
            layout.total_tokens(),
            layout.dim
        )));
    }
    let split = layout.camera_tokens() * layout.dim;
    let cam = Tensor::new(
        vec![layout.n_views, layout.camera_grid.0, layout.camera_grid.1, layout.dim],
        tokens.data[..split].to_vec(),
    )?;
    let lidar = Tensor::new(vec![layout.lidar_grid.0, layout.lidar_grid.1, layout.dim], tokens.data[split..].to_vec())?;
    Ok((cam, lidar))
}

/// Row-wise softmax of `(T·Wq)(T·Wk)ᵀ / √d` with max subtraction.
pub fn attention_weights(tokens: &Matrix, wq: &Matrix, wk: &Matrix) -> Result<Matrix> {
    let d = tokens.cols;
    for (name, w) in [("Wq", wq), ("Wk", wk)] {
        if w.rows != d || w.cols != d {
            return Err(Error::shape(format!("{name} must be {d}×{d}, got {}×{}", w.rows, w.cols)));
        }
    }
    let q = tokens.matmul(wq)?;
    let k = tokens.matmul(wk)?;
    let mut logits = q.matmul(&k.transpose())?;
    let scale = 1.0 / math::sqrt(d as f64);
    let k_len = logits.cols;
    for row in logits.data.chunks_exact_mut(k_len) {
        let max = row.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v * scale));
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = math::exp(*v * scale - max);
            sum += *v;
        }
        for v in row.iter_mut() {
            *v /= sum;
        }
    }
    Ok(logits)
}

/// Single-head self-attention `softmax(QKᵀ/√d)·V` over the token rows.
pub fn self_attention(tokens: &Matrix, wq: &Matrix, wk: &Matrix, wv: &Matrix) -> Result<Matrix> {
    let d = tokens.cols;
    if wv.rows != d || wv.cols != d {
        return Err(Error::shape(format!("Wv must be {d}×{d}, got {}×{}", wv.rows, wv.cols)));
    }
    let a = attention_weights(tokens, wq, wk)?;
    a.matmul(&tokens.matmul(wv)?)
}

/// Number of mask channels appended to each view.
pub const MASK_CHANNELS: usize = 1;

/// `(N+1) × h × w × (c + 6 + 1)` stack: N target views then the conditional
/// view, each carrying `[latent | raymap | mask]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionedStack {
    n_targets: usize,
    height: usize,
    width: usize,
    latent_channels: usize,
    tensor: Tensor,
}

impl ConditionedStack {
    pub fn n_views(&self) -> usize {
        self.n_targets + 1
    }

    pub fn n_targets(&self) -> usize {
        self.n_targets
    }

    /// Index of the conditional view.
    pub fn condition_index(&self) -> usize {
        self.n_targets
    }

    pub fn channels(&self) -> usize {
        self.latent_channels + Raymap::CHANNELS + MASK_CHANNELS
    }

    pub fn tensor(&self) -> &Tensor {
        &self.tensor
    }

    pub fn value(&self, view: usize, row: usize, col: usize, ch: usize) -> f64 {
        let c = self.channels();
        self.tensor.data[((view * self.height + row) * self.width + col) * c + ch]
    }

    /// Sum of the mask channel over one view.
    pub fn mask_sum(&self, view: usize) -> f64 {
        let mask = self.channels() - 1;
        (0..self.height)
            .flat_map(|r| (0..self.width).map(move |c| (r, c)))
            .map(|(r, c)| self.value(view, r, c, mask))
            .sum()
    }

    /// Per-view loss weights: 1 for targets, 0 for the conditional view.
    pub fn loss_weights(&self) -> Vec<f64> {
        let mut w = vec![1.0; self.n_views()];
        w[self.n_targets] = 0.0;
        w
    }

    /// Splits the stack back into `(targets, condition, raymaps)`.
    pub fn disassemble(&self) -> Result<(Tensor, Tensor, Vec<Raymap>)> {
        let (h, w, c) = (self.height, self.width, self.latent_channels);
        let total = self.channels();
        let mut targets = Vec::with_capacity(self.n_targets * h * w * c);
        let mut cond = Vec::with_capacity(h * w * c);
        let mut raymaps = Vec::with_capacity(self.n_views());
        for (view, block) in self.tensor.data.chunks_exact(h * w * total).enumerate() {
            let mut origins = Vec::with_capacity(h * w);
            let mut dirs = Vec::with_capacity(h * w);
            for cell in block.chunks_exact(total) {
                let dst = if view < self.n_targets { &mut targets } else { &mut cond };
                dst.extend_from_slice(&cell[..c]);
                let r = &cell[c..c + Raymap::CHANNELS];
                origins.push(crate::Vec3::new(r[0], r[1], r[2]));
                dirs.push(crate::Vec3::new(r[3], r[4], r[5]));
            }
            raymaps.push(Raymap::new(h, w, origins, dirs)?);
        }
        Ok((
            Tensor::new(vec![self.n_targets, h, w, c], targets)?,
            Tensor::new(vec![h, w, c], cond)?,
            raymaps,
        ))
    }
}

/// Raymaps for every camera at latent resolution `h × w`, expressed in the
/// frame of the first camera. Rays are regenerated at block centers.
pub fn conditioning_raymaps(cameras: &[(CameraIntrinsics, RigidPose)], h: usize, w: usize) -> Result<Vec<Raymap>> {
    let Some((_, reference)) = cameras.first() else {
        return Ok(Vec::new());
    };
    cameras
        .iter()
        .map(|(intr, pose)| {
            if h == 0 || w == 0 || intr.width() % w != 0 || intr.height() % h != 0 || intr.width() / w != intr.height() / h {
                return Err(Error::shape(format!(
                    "camera {}×{} cannot be sampled on a {h}×{w} latent grid",
                    intr.width(),
                    intr.height()
                )));
            }
            make_raymap(intr, pose, reference, intr.width() / w)
        })
        .collect()
}

/// View concatenation: target latents `[N, h, w, c]`, the conditional latent
/// `[h, w, c]` as view N, and N+1 raymaps (index N for the conditional view).
pub fn assemble_vc(target_latents: &Tensor, cond_latent: &Tensor, raymaps: &[Raymap]) -> Result<ConditionedStack> {
    target_latents.expect_rank(4, "target latents")?;
    cond_latent.expect_rank(3, "conditional latent")?;
    let ts = target_latents.shape();
    let (n, h, w, c) = (ts[0], ts[1], ts[2], ts[3]);
    if cond_latent.shape() != [h, w, c] {
        return Err(Error::shape(format!("conditional latent {:?} != [{h}, {w}, {c}]", cond_latent.shape())));
    }
    if raymaps.len() != n + 1 {
        return Err(Error::shape(format!("expected {} raymaps, got {}", n + 1, raymaps.len())));
    }
    if let Some(i) = raymaps.iter().position(|r| r.height() != h || r.width() != w) {
        return Err(Error::shape(format!(
            "raymap {i} is {}×{}, latent grid is {h}×{w}",
            raymaps[i].height(),
            raymaps[i].width()
        )));
    }
    let total = c + Raymap::CHANNELS + MASK_CHANNELS;
    let mut data = Vec::with_capacity((n + 1) * h * w * total);
    for (view, raymap) in raymaps.iter().enumerate() {
        let (latent, mask) = if view < n {
            (&target_latents.data[view * h * w * c..(view + 1) * h * w * c], 0.0)
        } else {
            (&cond_latent.data[..], 1.0)
        };
        for (i, (o, d)) in raymap.origins().iter().zip(raymap.directions()).enumerate() {
            data.extend_from_slice(&latent[i * c..(i + 1) * c]);
            data.extend_from_slice(&[o.x, o.y, o.z, d.x, d.y, d.z, mask]);
        }
    }
    Ok(ConditionedStack {
        n_targets: n,
        height: h,
        width: w,
        latent_channels: c,
        tensor: Tensor::new(vec![n + 1, h, w, total], data)?,
    })
}

/// Channel concatenation: `[N, h, w, 2c]` where each view carries its own
/// latent followed by a copy of the conditional latent.
pub fn assemble_cc(target_latents: &Tensor, cond_latent: &Tensor) -> Result<Tensor> {
    target_latents.expect_rank(4, "target latents")?;
    cond_latent.expect_rank(3, "conditional latent")?;
    let ts = target_latents.shape();
    let (n, h, w, c) = (ts[0], ts[1], ts[2], ts[3]);
    if cond_latent.shape() != [h, w, c] {
        return Err(Error::shape(format!("conditional latent {:?} != [{h}, {w}, {c}]", cond_latent.shape())));
    }
    let mut data = Vec::with_capacity(n * h * w * 2 * c);
    if c > 0 {
        for view in target_latents.data.chunks_exact(h * w * c) {
            for (t, k) in view.chunks_exact(c).zip(cond_latent.data.chunks_exact(c)) {
                data.extend_from_slice(t);
                data.extend_from_slice(k);
            }
        }
    }
    Tensor::new(vec![n, h, w, 2 * c], data)
}

/// Zeroes every pixel covered by any rectangle.
pub fn apply_spatial_mask(cond: &ImagePlane, rects: &[Rect]) -> Result<ImagePlane> {
    let (h, w) = (cond.height(), cond.width());
    if let Some(r) = rects.iter().find(|r| !r.fits(w, h)) {
        return Err(Error::invalid(format!("mask rectangle {r:?} exceeds {w}×{h} image")));
    }
    let mut out = cond.clone();
    let ch = cond.channels();
    for r in rects {
        for row in r.y..r.y + r.height {
            let start = out.index(row, r.x, 0);
            out.data_mut()[start..start + r.width * ch].fill(0.0);
        }
    }
    Ok(out)
}
