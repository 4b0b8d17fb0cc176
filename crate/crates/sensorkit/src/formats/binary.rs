use crate::error::DecodeError;

pub const HEADER_LEN: usize = 20;
pub const VERSION: u32 = 1;

/// Fixed header shared by SPIN, RAYM and DEPT files.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Header {
    pub magic: [u8; 4],
    pub version: u32,
    pub height: u32,
    pub width: u32,
    /// `max_range_mm` for SPIN, reserved (zero) otherwise.
    pub extra: u32,
}

impl Header {
    pub fn new(magic: [u8; 4], height: usize, width: usize, extra: u32) -> Result<Self, DecodeError> {
        let dim = |v: usize, name: &str| {
            u32::try_from(v).map_err(|_| DecodeError::new(0u64, format!("{name} {v} does not fit in u32")))
        };
        Ok(Self { magic, version: VERSION, height: dim(height, "height")?, width: dim(width, "width")?, extra })
    }

    pub fn encode(&self, payload_len: usize) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + payload_len);
        out.extend_from_slice(&self.magic);
        for v in [self.version, self.height, self.width, self.extra] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    /// Parses and checks the header, and that the file holds exactly
    /// `height·width·floats_per_cell` trailing `f32` values.
    pub fn decode(bytes: &[u8], magic: [u8; 4], floats_per_cell: usize) -> Result<(Self, &[u8]), DecodeError> {
        if bytes.len() < HEADER_LEN {
            return Err(DecodeError::new(bytes.len(), format!("truncated header: {} of {HEADER_LEN} bytes", bytes.len())));
        }
        if bytes[..4] != magic {
            return Err(DecodeError::new(0u64, format!(
                "bad magic {:?}, expected {:?}",
                String::from_utf8_lossy(&bytes[..4]),
                String::from_utf8_lossy(&magic)
            )));
        }
        let word = |i: usize| u32::from_le_bytes(bytes[4 + 4 * i..8 + 4 * i].try_into().unwrap());
        let header = Self { magic, version: word(0), height: word(1), width: word(2), extra: word(3) };
        if header.version != VERSION {
            return Err(DecodeError::new(4u64, format!("unsupported version {}", header.version)));
        }
        let expected = (header.height as u64) * (header.width as u64) * (floats_per_cell as u64) * 4;
        let actual = (bytes.len() - HEADER_LEN) as u64;
        if actual < expected {
            return Err(DecodeError::new(
                bytes.len(),
                format!("truncated payload: expected {} bytes in total", HEADER_LEN as u64 + expected),
            ));
        }
        if actual > expected {
            return Err(DecodeError::new(
                HEADER_LEN as u64 + expected,
                format!("{} trailing bytes after payload", actual - expected),
            ));
        }
        Ok((header, &bytes[HEADER_LEN..]))
    }
}

pub fn push_f32s(out: &mut Vec<u8>, values: impl IntoIterator<Item = f32>) {
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

pub fn read_f32s(payload: &[u8]) -> impl Iterator<Item = f32> + '_ {
    payload.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap()))
}
