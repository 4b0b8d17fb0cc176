//! ASCII PLY point clouds with `x y z intensity elongation` vertex properties.
//!
//! Values are written with the shortest representation that parses back to
//! the same `f64`. The reader accepts `float`/`double` properties in any
//! order, ignores unknown ones, and defaults missing intensity/elongation
//! to zero.

use std::fmt::Write;

use sensorkit_core::{LidarPoint, PointCloud, Vec3};

use crate::error::DecodeError;

pub fn encode(cloud: &PointCloud) -> String {
    let mut out = String::with_capacity(200 + cloud.len() * 64);
    out.push_str("ply\nformat ascii 1.0\n");
    let _ = writeln!(out, "element vertex {}", cloud.len());
    for name in ["x", "y", "z", "intensity", "elongation"] {
        let _ = writeln!(out, "property float {name}");
    }
    out.push_str("end_header\n");
    for p in cloud.points() {
        let q = p.position;
        let _ = writeln!(out, "{:?} {:?} {:?} {:?} {:?}", q.x, q.y, q.z, p.intensity, p.elongation);
    }
    out
}

struct Lines<'a> {
    text: &'a str,
    pos: usize,
}

impl<'a> Lines<'a> {
    /// Next line and the byte offset where it starts.
    fn next(&mut self) -> Option<(usize, &'a str)> {
        if self.pos >= self.text.len() {
            return None;
        }
        let start = self.pos;
        let rest = &self.text[start..];
        let (line, advance) = match rest.find('\n') {
            Some(i) => (&rest[..i], i + 1),
            None => (rest, rest.len()),
        };
        self.pos += advance;
        Some((start, line.strip_suffix('\r').unwrap_or(line)))
    }
}

pub fn decode(bytes: &[u8]) -> Result<PointCloud, DecodeError> {
    let text = std::str::from_utf8(bytes).map_err(|e| DecodeError::new(e.valid_up_to(), "PLY file is not UTF-8 text"))?;
    let mut lines = Lines { text, pos: 0 };
    let mut expect = |what: &str| lines.next().ok_or_else(|| DecodeError::new(text.len(), format!("missing {what}")));

    let (at, magic) = expect("magic line")?;
    if magic.trim() != "ply" {
        return Err(DecodeError::new(at, "missing `ply` magic line"));
    }
    let mut count: Option<usize> = None;
    let mut props: Vec<String> = Vec::new();
    let mut format_seen = false;
    loop {
        let (at, line) = expect("end_header")?;
        let words: Vec<&str> = line.split_whitespace().collect();
        match words.as_slice() {
            ["end_header"] => break,
            ["comment", ..] | ["obj_info", ..] | [] => {}
            ["format", "ascii", "1.0"] => format_seen = true,
            ["format", other, ..] => return Err(DecodeError::new(at, format!("unsupported PLY format `{other}`"))),
            ["element", "vertex", n] => {
                if count.is_some() {
                    return Err(DecodeError::new(at, "duplicate vertex element"));
                }
                count = Some(n.parse().map_err(|_| DecodeError::new(at, format!("bad vertex count `{n}`")))?);
            }
            ["element", name, _] => return Err(DecodeError::new(at, format!("unsupported element `{name}`"))),
            ["property", ty, name] if count.is_some() => {
                if !matches!(*ty, "float" | "double" | "float32" | "float64") {
                    return Err(DecodeError::new(at, format!("property `{name}` has unsupported type `{ty}`")));
                }
                props.push((*name).to_string());
            }
            _ => return Err(DecodeError::new(at, format!("malformed header line `{line}`"))),
        }
    }
    if !format_seen {
        return Err(DecodeError::new(0u64, "missing `format ascii 1.0` line"));
    }
    let count = count.ok_or_else(|| DecodeError::new(0u64, "missing `element vertex` line"))?;
    let col = |name: &str| props.iter().position(|p| p == name);
    let (Some(ix), Some(iy), Some(iz)) = (col("x"), col("y"), col("z")) else {
        return Err(DecodeError::new(0u64, "vertex element needs x, y and z properties"));
    };
    let (ii, ie) = (col("intensity"), col("elongation"));

    let mut points = Vec::with_capacity(count);
    let mut values = Vec::with_capacity(props.len());
    for k in 0..count {
        let (at, line) = lines
            .next()
            .ok_or_else(|| DecodeError::new(text.len(), format!("expected {count} vertices, found {k}")))?;
        values.clear();
        for w in line.split_whitespace() {
            values.push(w.parse::<f64>().map_err(|_| DecodeError::new(at, format!("bad number `{w}`")))?);
        }
        if values.len() != props.len() {
            return Err(DecodeError::new(at, format!("vertex has {} values, expected {}", values.len(), props.len())));
        }
        let p = LidarPoint::new(
            Vec3::new(values[ix], values[iy], values[iz]),
            ii.map_or(0.0, |i| values[i]),
            ie.map_or(0.0, |i| values[i]),
        );
        if !p.position.is_finite() || !(0.0..=1.0).contains(&p.intensity) || !(0.0..=1.0).contains(&p.elongation) {
            return Err(DecodeError::new(at, "vertex values are non-finite or outside [0, 1]"));
        }
        points.push(p);
    }
    while let Some((at, line)) = lines.next() {
        if !line.trim().is_empty() {
            return Err(DecodeError::new(at, "trailing data after the last vertex"));
        }
    }
    PointCloud::new(points).map_err(|e| DecodeError::new(0u64, e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_cloud() {
        let text = encode(&PointCloud::empty());
        assert!(text.contains("element vertex 0\n"));
        assert!(decode(text.as_bytes()).unwrap().is_empty());
    }

    #[test]
    fn single_point() {
        let cloud = PointCloud::new(vec![LidarPoint::new(Vec3::new(1.0, 2.0, 3.0), 0.5, 0.1)]).unwrap();
        assert_eq!(decode(encode(&cloud).as_bytes()).unwrap(), cloud);
    }

    #[test]
    fn count_mismatch_and_trailing_data() {
        let cloud = PointCloud::new(vec![LidarPoint::new(Vec3::X, 0.0, 0.0)]).unwrap();
        let text = encode(&cloud);
        let short = text.replace("element vertex 1", "element vertex 2");
        assert!(decode(short.as_bytes()).unwrap_err().detail.contains("expected 2"));
        let long = format!("{text}1 1 1 0 0\n");
        assert_eq!(decode(long.as_bytes()).unwrap_err().offset, text.len() as u64);
    }

    #[test]
    fn binary_format_rejected() {
        let text = "ply\nformat binary_little_endian 1.0\nend_header\n";
        assert_eq!(decode(text.as_bytes()).unwrap_err().offset, 4);
    }
}
