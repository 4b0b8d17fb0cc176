//! `SPIN` files: header `extra` holds the maximum range in millimeters,
//! payload is `H·W` cells of (range, intensity, elongation, validity) `f32`.

use sensorkit_core::rangeview::{SpinImage, SPIN_CHANNELS};

use super::binary::{push_f32s, read_f32s, Header, HEADER_LEN};
use crate::error::DecodeError;

pub const MAGIC: [u8; 4] = *b"SPIN";

pub fn file_len(height: usize, width: usize) -> usize {
    HEADER_LEN + height * width * SPIN_CHANNELS * 4
}

/// Rounds `max_range` to whole millimeters.
pub fn encode(spin: &SpinImage, max_range_m: f64) -> Result<Vec<u8>, DecodeError> {
    let mm = (max_range_m * 1000.0).round();
    if !(mm >= 1.0 && mm <= u32::MAX as f64) {
        return Err(DecodeError::new(16u64, format!("max range {max_range_m} m is not representable in millimeters")));
    }
    let header = Header::new(MAGIC, spin.height(), spin.width(), mm as u32)?;
    let mut out = header.encode(spin.data().len() * 4);
    push_f32s(&mut out, spin.data().iter().copied());
    Ok(out)
}

/// Returns the spin image and its maximum range in meters.
pub fn decode(bytes: &[u8]) -> Result<(SpinImage, f64), DecodeError> {
    let (header, payload) = Header::decode(bytes, MAGIC, SPIN_CHANNELS)?;
    if header.extra == 0 {
        return Err(DecodeError::new(16u64, "max range must be positive"));
    }
    let data: Vec<f32> = read_f32s(payload).collect();
    for (cell, v) in data.chunks_exact(SPIN_CHANNELS).enumerate() {
        let base = HEADER_LEN + cell * SPIN_CHANNELS * 4;
        if let Some(ch) = v.iter().position(|x| !(0.0..=1.0).contains(x)) {
            return Err(DecodeError::new(base + ch * 4, format!("value {} outside [0, 1]", v[ch])));
        }
        if v[3] != 0.0 && v[3] != 1.0 {
            return Err(DecodeError::new(base + 12, format!("validity {} is not 0 or 1", v[3])));
        }
        if v[3] == 0.0 {
            if let Some(ch) = v[..3].iter().position(|&x| x != 0.0) {
                return Err(DecodeError::new(base + ch * 4, "invalid cell carries non-zero data"));
            }
        }
    }
    let spin = SpinImage::new(header.height as usize, header.width as usize, data)
        .map_err(|e| DecodeError::new(HEADER_LEN, e.to_string()))?;
    Ok((spin, header.extra as f64 / 1000.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn size_formula() {
        assert_eq!(file_len(64, 2650), 2_713_620);
        let bytes = encode(&SpinImage::empty(64, 2650), 150.0).unwrap();
        assert_eq!(bytes.len(), 2_713_620);
    }

    #[test]
    fn roundtrip_is_bit_exact() {
        let mut spin = SpinImage::empty(3, 5);
        spin.set_return(1, 4, 0.123_456_79, 1.0, 0.0);
        spin.set_return(2, 0, f32::MIN_POSITIVE, 0.5, 0.25);
        let (back, range) = decode(&encode(&spin, 120.5).unwrap()).unwrap();
        assert_eq!(range, 120.5);
        let bits = |s: &SpinImage| s.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&back), bits(&spin));
    }

    #[test]
    fn header_errors_carry_offsets() {
        let good = encode(&SpinImage::empty(2, 2), 150.0).unwrap();
        let mut bad = good.clone();
        bad[0] = b'X';
        assert_eq!(decode(&bad).unwrap_err().offset, 0);
        let mut bad = good.clone();
        bad[4] = 2;
        assert_eq!(decode(&bad).unwrap_err().offset, 4);
        assert_eq!(decode(&good[..30]).unwrap_err().offset, 30);
        assert_eq!(decode(&good[..7]).unwrap_err().offset, 7);
        let mut long = good.clone();
        long.push(0);
        assert_eq!(decode(&long).unwrap_err().offset, good.len() as u64);
    }

    #[test]
    fn payload_errors_carry_offsets() {
        let mut bytes = encode(&SpinImage::empty(1, 2), 150.0).unwrap();
        // second cell, validity channel
        bytes[HEADER_LEN + 16 + 12..HEADER_LEN + 32].copy_from_slice(&0.5f32.to_le_bytes());
        assert_eq!(decode(&bytes).unwrap_err().offset, (HEADER_LEN + 28) as u64);
    }
}
