//! Binary PPM (`P6`, maxval 255) for RGB image planes in `[0, 1]`.

use sensorkit_core::ImagePlane;

use crate::error::DecodeError;

pub fn encode(img: &ImagePlane) -> Result<Vec<u8>, DecodeError> {
    if img.channels() != 3 {
        return Err(DecodeError::new(0u64, format!("PPM needs 3 channels, image has {}", img.channels())));
    }
    let mut out = format!("P6\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend(img.data().iter().map(|&v| (v.clamp(0.0, 1.0) * 255.0).round() as u8));
    Ok(out)
}

/// Reads one whitespace-delimited header token, skipping `#` comments.
fn token<'a>(bytes: &'a [u8], pos: &mut usize) -> Result<(usize, &'a [u8]), DecodeError> {
    loop {
        match bytes.get(*pos) {
            Some(b'#') => {
                while bytes.get(*pos).is_some_and(|&b| b != b'\n') {
                    *pos += 1;
                }
            }
            Some(b) if b.is_ascii_whitespace() => *pos += 1,
            Some(_) => break,
            None => return Err(DecodeError::new(bytes.len(), "truncated PPM header")),
        }
    }
    let start = *pos;
    while bytes.get(*pos).is_some_and(|b| !b.is_ascii_whitespace()) {
        *pos += 1;
    }
    Ok((start, &bytes[start..*pos]))
}

fn number(bytes: &[u8], pos: &mut usize, what: &str) -> Result<usize, DecodeError> {
    let (at, tok) = token(bytes, pos)?;
    std::str::from_utf8(tok)
        .ok()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| DecodeError::new(at, format!("bad PPM {what}")))
}

pub fn decode(bytes: &[u8]) -> Result<ImagePlane, DecodeError> {
    let mut pos = 0;
    let (_, magic) = token(bytes, &mut pos)?;
    if magic != b"P6" {
        return Err(DecodeError::new(0u64, "not a binary PPM (P6) file"));
    }
    let width = number(bytes, &mut pos, "width")?;
    let height = number(bytes, &mut pos, "height")?;
    let maxval_at = pos;
    let maxval = number(bytes, &mut pos, "maxval")?;
    if maxval == 0 || maxval > 255 {
        return Err(DecodeError::new(maxval_at, format!("maxval {maxval} unsupported, need 1..=255")));
    }
    // exactly one whitespace byte separates the header from the raster
    if !bytes.get(pos).is_some_and(|b| b.is_ascii_whitespace()) {
        return Err(DecodeError::new(pos, "missing whitespace after maxval"));
    }
    pos += 1;
    let expected = width * height * 3;
    let raster = &bytes[pos..];
    if raster.len() < expected {
        return Err(DecodeError::new(bytes.len(), format!("truncated raster: expected {} bytes in total", pos + expected)));
    }
    if raster.len() > expected {
        return Err(DecodeError::new(pos + expected, "trailing bytes after raster"));
    }
    let scale = maxval as f64;
    let data = raster.iter().map(|&b| (b as f64 / scale).min(1.0)).collect();
    ImagePlane::new(height, width, 3, data).map_err(|e| DecodeError::new(pos, e.to_string()))
}
