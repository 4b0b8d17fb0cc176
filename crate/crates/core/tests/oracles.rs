//! Independent reference computations checked against the kernels.

#![allow(clippy::needless_range_loop)]

use sensorkit_core::fusion::{self_attention, Matrix};
use sensorkit_core::losses::{
    bce_grad, bce_validity, chamfer_points, grad_check, l1_grad, l1_loss, lpips_distance, lpips_grad, ssim,
    total_vae_loss, ChamferVariant, FeatureLayer, FeatureStack, IdentityExtractor, LatentGaussianStats,
    LidarPrediction, LossWeights,
};
use sensorkit_core::rangeview::{compute_normals, LidarCalibration, SpinImage};
use sensorkit_core::rng::SplitRng;
use sensorkit_core::{ImagePlane, RigidPose, Vec3};

fn dense_calib(rows: usize, cols: usize) -> LidarCalibration {
    LidarCalibration::uniform(RigidPose::IDENTITY, rows, -0.15, -0.6, cols).unwrap()
}

#[test]
fn ground_plane_normals_point_up() {
    let calib = dense_calib(24, 360);
    let mut spin = SpinImage::empty(24, 360);
    for (r, &e) in calib.beam_elevations().iter().enumerate() {
        let range = 2.0 / (-e).sin();
        for c in 0..360 {
            spin.set_return(r, c, (range / calib.max_range()) as f32, 0.5, 0.0);
        }
    }
    let normals = compute_normals(&spin, &calib).unwrap();
    assert_eq!(normals.valid_count(), 22 * 360);
    for n in normals.iter().flatten() {
        assert!(n.max_abs_diff(Vec3::Z) < 1e-3, "{n:?}");
    }
}

#[test]
fn sphere_normals_face_the_sensor() {
    let calib = dense_calib(16, 180);
    let mut spin = SpinImage::empty(16, 180);
    for r in 0..16 {
        for c in 0..180 {
            spin.set_return(r, c, 0.2, 0.5, 0.0);
        }
    }
    let normals = compute_normals(&spin, &calib).unwrap();
    for r in 1..15 {
        for c in 0..180 {
            let (e, a) = (calib.beam_elevations()[r], calib.column_azimuth(c));
            let ray = Vec3::new(e.cos() * a.cos(), e.cos() * a.sin(), e.sin());
            let n = normals.get(r, c).unwrap();
            assert!(n.max_abs_diff(-ray) < 1e-3, "({r},{c}) {n:?} vs {ray:?}");
        }
    }
}

fn brute_chamfer(a: &[Vec3], b: &[Vec3]) -> f64 {
    let directed = |p: &[Vec3], q: &[Vec3]| {
        p.iter().map(|x| q.iter().map(|y| x.distance(*y)).fold(f64::INFINITY, f64::min)).sum::<f64>() / p.len() as f64
    };
    0.5 * (directed(a, b) + directed(b, a))
}

#[test]
fn chamfer_matches_brute_force() {
    let mut rng = SplitRng::new(11);
    for trial in 0..20 {
        // mix of a dense cluster and a few far outliers
        let mut cloud = |n: usize| -> Vec<Vec3> {
            (0..n)
                .map(|i| {
                    let s = if i % 50 == 0 { 80.0 } else { 3.0 };
                    Vec3::new(rng.uniform(-s, s), rng.uniform(-s, s), rng.uniform(-s / 4.0, s / 4.0))
                })
                .collect()
        };
        let (a, b) = (cloud(300 + trial), cloud(200));
        let fast = chamfer_points(&a, &b, ChamferVariant::Mean).unwrap();
        assert!((fast - brute_chamfer(&a, &b)).abs() < 1e-9);
    }
}

#[test]
fn attention_matches_dense_oracle() {
    let mut rng = SplitRng::new(5);
    let (k, d) = (3, 2);
    let mut rand = |r, c| Matrix::from_fn(r, c, |_, _| rng.uniform(-1.0, 1.0));
    let (t, wq, wk, wv) = (rand(k, d), rand(d, d), rand(d, d), rand(d, d));
    // direct triple loop, no max subtraction
    let proj = |w: &Matrix| -> Vec<Vec<f64>> {
        (0..k).map(|i| (0..d).map(|j| (0..d).map(|m| t.get(i, m) * w.get(m, j)).sum()).collect()).collect()
    };
    let (q, kk, v) = (proj(&wq), proj(&wk), proj(&wv));
    let got = self_attention(&t, &wq, &wk, &wv).unwrap();
    for i in 0..k {
        let logits: Vec<f64> =
            (0..k).map(|j| (0..d).map(|m| q[i][m] * kk[j][m]).sum::<f64>() / (d as f64).sqrt()).collect();
        let z: f64 = logits.iter().map(|l| l.exp()).sum();
        for c in 0..d {
            let want: f64 = (0..k).map(|j| logits[j].exp() / z * v[j][c]).sum();
            assert!((got.get(i, c) - want).abs() < 1e-9);
        }
    }
}

/// Windowed SSIM evaluated pixel by pixel with explicit 2-D weights.
fn direct_ssim(a: &ImagePlane, b: &ImagePlane) -> f64 {
    let g: Vec<f64> = (0..11).map(|i| (-((i as f64 - 5.0).powi(2)) / 4.5).exp()).collect();
    let gs: f64 = g.iter().sum();
    let (c1, c2) = (1e-4, 9e-4);
    let (h, w) = (a.height(), a.width());
    let mut total = 0.0;
    let mut n = 0;
    for r in 0..=h - 11 {
        for c in 0..=w - 11 {
            let (mut ma, mut mb, mut saa, mut sbb, mut sab) = (0.0, 0.0, 0.0, 0.0, 0.0);
            for i in 0..11 {
                for j in 0..11 {
                    let wt = g[i] * g[j] / (gs * gs);
                    let (x, y) = (a.get(r + i, c + j, 0), b.get(r + i, c + j, 0));
                    ma += wt * x;
                    mb += wt * y;
                    saa += wt * x * x;
                    sbb += wt * y * y;
                    sab += wt * x * y;
                }
            }
            let (va, vb, cov) = (saa - ma * ma, sbb - mb * mb, sab - ma * mb);
            total += (2.0 * ma * mb + c1) * (2.0 * cov + c2) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
            n += 1;
        }
    }
    total / n as f64
}

#[test]
fn ssim_matches_direct_window_sum() {
    let a = ImagePlane::filled(16, 20, 1, 0.3);
    let b = ImagePlane::filled(16, 20, 1, 0.4);
    assert!((ssim(&a, &b).unwrap() - direct_ssim(&a, &b)).abs() < 1e-9);
    let mut rng = SplitRng::new(2);
    let a = ImagePlane::from_fn(18, 15, 1, |_, _, _| rng.unit());
    let b = a.map(|v| (v + 0.1).min(1.0));
    assert!((ssim(&a, &b).unwrap() - direct_ssim(&a, &b)).abs() < 1e-9);
}

#[test]
fn loss_gradients_pass_finite_differences() {
    let mut rng = SplitRng::new(9);
    for _ in 0..20 {
        let target: Vec<f64> = (0..12).map(|_| rng.unit()).collect();
        // keep predictions at least 0.01 away from ties
        let pred: Vec<f64> = target.iter().map(|t| t + rng.uniform(0.01, 0.5) * if rng.bernoulli(0.5) { 1.0 } else { -1.0 }).collect();
        let e = grad_check(|p| l1_loss(p, &target, None).unwrap(), |p| l1_grad(p, &target, None).unwrap(), &pred).unwrap();
        assert!(e < 1e-4, "l1 {e}");

        let bits: Vec<f64> = (0..12).map(|_| rng.bernoulli(0.5) as u8 as f64).collect();
        let prob: Vec<f64> = (0..12).map(|_| rng.uniform(0.05, 0.95)).collect();
        let e = grad_check(|p| bce_validity(p, &bits).unwrap(), |p| bce_grad(p, &bits).unwrap(), &prob).unwrap();
        assert!(e < 1e-4, "bce {e}");

        let stack = |acts: Vec<f64>| FeatureStack {
            layers: vec![FeatureLayer::new(2, 3, 4, acts, vec![1.0, 0.5, 2.0, 0.8]).unwrap()],
        };
        let ya: Vec<f64> = (0..24).map(|_| rng.uniform(-1.0, 1.0)).collect();
        let b = stack((0..24).map(|_| rng.uniform(-1.0, 1.0)).collect());
        let e = grad_check(
            |p| lpips_distance(&stack(p.to_vec()), &b).unwrap(),
            |p| lpips_grad(&stack(p.to_vec()), &b).unwrap(),
            &ya,
        )
        .unwrap();
        assert!(e < 1e-4, "lpips {e}");
    }
}

fn vae_fixture() -> (LidarCalibration, SpinImage) {
    let calib = dense_calib(8, 32);
    let mut spin = SpinImage::empty(8, 32);
    for r in 0..8 {
        for c in 0..32 {
            if (r + c) % 7 != 0 {
                let x = ((r * 31 + c * 17) % 97) as f32 / 97.0;
                spin.set_return(r, c, 0.05 + 0.2 * x, x, 1.0 - x);
            }
        }
    }
    (calib, spin)
}

#[test]
fn perfect_reconstruction_has_near_zero_loss() {
    let (calib, spin) = vae_fixture();
    let pred = LidarPrediction::from_spin(&spin);
    let (total, _) =
        total_vae_loss(&pred, &spin, &LatentGaussianStats::prior(8), &LossWeights::default(), &calib, &IdentityExtractor)
            .unwrap();
    assert!(total < 1e-5, "{total}");
}

#[test]
fn zeroing_a_weight_removes_exactly_that_term() {
    let (calib, spin) = vae_fixture();
    let mut pred = LidarPrediction::from_spin(&spin);
    let mut rng = SplitRng::new(4);
    for v in pred.range.iter_mut().chain(&mut pred.intensity).chain(&mut pred.elongation) {
        *v = (*v + rng.uniform(-0.1, 0.1)).clamp(0.0, 1.0);
    }
    for p in &mut pred.validity_prob {
        *p = (*p * 0.8 + 0.1).clamp(0.0, 1.0);
    }
    let stats = LatentGaussianStats::new(vec![0.3, -0.2], vec![1.5, 0.7]).unwrap();
    let weights = LossWeights::from_array([0.5, 1.5, 2.0, 0.7, 1.1, 0.3, 0.9, 1.3, 0.01]);
    let (total, terms) = total_vae_loss(&pred, &spin, &stats, &weights, &calib, &IdentityExtractor).unwrap();
    let dot: f64 = terms.to_array().iter().zip(weights.to_array()).map(|(t, w)| t * w).sum();
    assert!((total - dot).abs() < 1e-12);
    for i in 0..9 {
        let mut w = weights.to_array();
        let removed = w[i] * terms.to_array()[i];
        w[i] = 0.0;
        let (t_i, _) =
            total_vae_loss(&pred, &spin, &stats, &LossWeights::from_array(w), &calib, &IdentityExtractor).unwrap();
        assert!((total - t_i - removed).abs() < 1e-12, "term {i}");
    }
}

#[test]
fn kl_direct_substitution() {
    let e = std::f64::consts::E;
    let kl = sensorkit_core::losses::kl_divergence(&LatentGaussianStats::new(vec![0.0], vec![e]).unwrap());
    assert!((kl - 0.5 * (e - 1.0 - 1.0)).abs() < 1e-12);
    assert!((kl - 0.3591).abs() < 1e-4);
}

#[test]
fn pitch_draws_cover_the_range() {
    use sensorkit_core::sensor_synth::{builtin_profiles, sample_rig, IntrinsicNoise, VehicleCategory};
    let mut rng = SplitRng::new(17);
    let sedan = VehicleCategory::sedan();
    let profiles = builtin_profiles();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for _ in 0..10_000 {
        let p = sample_rig(&mut rng, &sedan, &profiles, IntrinsicNoise::default()).unwrap().perturbation.pitch_deg;
        lo = lo.min(p);
        hi = hi.max(p);
    }
    assert!(lo >= -10.0 && hi <= 10.0 && hi - lo > 19.0);
}
