//! `RAYM` raymaps (origin xyz, direction xyz per cell) and `DEPT` depth maps
//! (one distance per pixel, meters). Header `extra` is reserved and zero.

use sensorkit_core::cameras::Raymap;
use sensorkit_core::{ImagePlane, Vec3};

use super::binary::{push_f32s, read_f32s, Header, HEADER_LEN};
use crate::error::DecodeError;

pub const RAYMAP_MAGIC: [u8; 4] = *b"RAYM";
pub const DEPTH_MAGIC: [u8; 4] = *b"DEPT";

fn check_reserved(header: &Header) -> Result<(), DecodeError> {
    if header.extra != 0 {
        return Err(DecodeError::new(16u64, format!("reserved word is {}, expected 0", header.extra)));
    }
    Ok(())
}

/// Values are stored as `f32`; directions are renormalized on read.
pub fn encode_raymap(map: &Raymap) -> Result<Vec<u8>, DecodeError> {
    let header = Header::new(RAYMAP_MAGIC, map.height(), map.width(), 0)?;
    let mut out = header.encode(map.height() * map.width() * 24);
    for (o, d) in map.origins().iter().zip(map.directions()) {
        push_f32s(&mut out, [o.x, o.y, o.z, d.x, d.y, d.z].map(|v| v as f32));
    }
    Ok(out)
}

pub fn decode_raymap(bytes: &[u8]) -> Result<Raymap, DecodeError> {
    let (header, payload) = Header::decode(bytes, RAYMAP_MAGIC, Raymap::CHANNELS)?;
    check_reserved(&header)?;
    let values: Vec<f64> = read_f32s(payload).map(f64::from).collect();
    let mut origins = Vec::with_capacity(values.len() / 6);
    let mut directions = Vec::with_capacity(values.len() / 6);
    for (i, v) in values.chunks_exact(6).enumerate() {
        let at = HEADER_LEN + i * 24;
        if v.iter().any(|x| !x.is_finite()) {
            return Err(DecodeError::new(at, "non-finite raymap value"));
        }
        let d = Vec3::new(v[3], v[4], v[5])
            .try_normalize(1e-6)
            .ok_or_else(|| DecodeError::new(at + 12, "zero-length ray direction"))?;
        origins.push(Vec3::new(v[0], v[1], v[2]));
        directions.push(d);
    }
    Raymap::new(header.height as usize, header.width as usize, origins, directions)
        .map_err(|e| DecodeError::new(HEADER_LEN, e.to_string()))
}

/// Single-channel depth image in meters.
pub fn encode_depth(depth: &ImagePlane) -> Result<Vec<u8>, DecodeError> {
    if depth.channels() != 1 {
        return Err(DecodeError::new(0u64, format!("depth image has {} channels, expected 1", depth.channels())));
    }
    let header = Header::new(DEPTH_MAGIC, depth.height(), depth.width(), 0)?;
    let mut out = header.encode(depth.data().len() * 4);
    push_f32s(&mut out, depth.data().iter().map(|&v| v as f32));
    Ok(out)
}

pub fn decode_depth(bytes: &[u8]) -> Result<ImagePlane, DecodeError> {
    let (header, payload) = Header::decode(bytes, DEPTH_MAGIC, 1)?;
    check_reserved(&header)?;
    let values: Vec<f64> = read_f32s(payload).map(f64::from).collect();
    if let Some(i) = values.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(DecodeError::new(HEADER_LEN + 4 * i, format!("depth {} is not a finite distance", values[i])));
    }
    ImagePlane::new(header.height as usize, header.width as usize, 1, values)
        .map_err(|e| DecodeError::new(HEADER_LEN, e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn raymap_roundtrip_within_f32() {
        let dirs = vec![Vec3::Z, Vec3::new(0.6, 0.0, 0.8), Vec3::new(0.0, -1.0, 0.0), Vec3::X];
        let map = Raymap::new(2, 2, vec![Vec3::new(1.0, -2.0, 0.5); 4], dirs).unwrap();
        let bytes = encode_raymap(&map).unwrap();
        assert_eq!(bytes.len(), HEADER_LEN + 4 * 24);
        let back = decode_raymap(&bytes).unwrap();
        for (a, b) in map.directions().iter().zip(back.directions()) {
            assert!(a.max_abs_diff(*b) < 1e-7);
        }
        assert_eq!(back.origins(), map.origins());
    }

    #[test]
    fn depth_roundtrip_and_magic() {
        let d = ImagePlane::from_fn(3, 4, 1, |r, c, _| (r * 4 + c) as f64 * 0.5);
        let bytes = encode_depth(&d).unwrap();
        assert_eq!(decode_depth(&bytes).unwrap(), d);
        assert_eq!(decode_raymap(&bytes).unwrap_err().offset, 0);
    }
}
