//! On-disk formats. Binary formats are little-endian with a fixed 20-byte
//! header: 4-byte magic, then four `u32` fields (version, height,
//! width, format-specific word).

mod binary;
pub mod grid;
pub mod ply;
pub mod ppm;
pub mod spin;

pub use binary::{Header, HEADER_LEN};
