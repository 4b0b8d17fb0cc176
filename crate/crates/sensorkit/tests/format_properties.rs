use proptest::prelude::*;

use sensorkit::formats::{grid, ply, ppm, spin};
use sensorkit_core::cameras::Raymap;
use sensorkit_core::rangeview::SpinImage;
use sensorkit_core::{ImagePlane, LidarPoint, PointCloud, Vec3};

fn spin_image() -> impl Strategy<Value = SpinImage> {
    (1usize..8, 1usize..16).prop_flat_map(|(h, w)| {
        prop::collection::vec(prop::option::of((0.0..=1.0f32, 0.0..=1.0f32, 0.0..=1.0f32)), h * w).prop_map(move |cells| {
            let mut s = SpinImage::empty(h, w);
            for (i, c) in cells.into_iter().enumerate() {
                if let Some((r, a, e)) = c {
                    s.set_return(i / w, i % w, r, a, e);
                }
            }
            s
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn spin_roundtrip_is_bit_exact(s in spin_image(), mm in 1u32..400_000) {
        let bytes = spin::encode(&s, mm as f64 / 1000.0).unwrap();
        prop_assert_eq!(bytes.len(), spin::file_len(s.height(), s.width()));
        let (back, range) = spin::decode(&bytes).unwrap();
        prop_assert_eq!(range, mm as f64 / 1000.0);
        prop_assert_eq!(spin::encode(&back, range).unwrap(), bytes);
    }

    #[test]
    fn spin_truncation_is_always_rejected(s in spin_image(), cut in 1usize..64) {
        let bytes = spin::encode(&s, 100.0).unwrap();
        let keep = bytes.len().saturating_sub(cut);
        prop_assert!(spin::decode(&bytes[..keep]).is_err());
    }

    #[test]
    fn ply_roundtrip_is_exact(
        pts in prop::collection::vec((-1e4..1e4f64, -1e4..1e4f64, -1e3..1e3f64, 0.0..=1.0f64, 0.0..=1.0f64), 0..40),
    ) {
        let cloud = PointCloud::new(pts.iter().map(|&(x, y, z, i, e)| LidarPoint::new(Vec3::new(x, y, z), i, e)).collect()).unwrap();
        let back = ply::decode(ply::encode(&cloud).as_bytes()).unwrap();
        prop_assert_eq!(back, cloud);
    }

    #[test]
    fn ppm_roundtrip_within_quantization(h in 1usize..12, w in 1usize..12, seed in prop::collection::vec(0.0..=1.0f64, 432)) {
        let img = ImagePlane::from_fn(h, w, 3, |r, c, k| seed[(r * 12 + c) * 3 + k]);
        let back = ppm::decode(&ppm::encode(&img).unwrap()).unwrap();
        for (a, b) in img.data().iter().zip(back.data()) {
            prop_assert!((a - b).abs() <= 0.5 / 255.0 + 1e-12);
        }
    }

    #[test]
    fn raymap_roundtrip_within_f32(
        h in 1usize..6,
        w in 1usize..6,
        o in prop::collection::vec((-50.0..50.0f64, -50.0..50.0f64, -50.0..50.0f64), 36),
        d in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64, 0.1..1.0f64), 36),
    ) {
        let n = h * w;
        let origins: Vec<Vec3> = o[..n].iter().map(|&(x, y, z)| Vec3::new(x, y, z)).collect();
        let dirs: Vec<Vec3> = d[..n].iter().map(|&(x, y, z)| Vec3::new(x, y, z).normalize()).collect();
        let map = Raymap::new(h, w, origins, dirs).unwrap();
        let back = grid::decode_raymap(&grid::encode_raymap(&map).unwrap()).unwrap();
        for (a, b) in map.origins().iter().zip(back.origins()) {
            prop_assert!(a.max_abs_diff(*b) <= 50.0 * f32::EPSILON as f64);
        }
        for (a, b) in map.directions().iter().zip(back.directions()) {
            prop_assert!(a.max_abs_diff(*b) <= 4.0 * f32::EPSILON as f64);
        }
    }
}
