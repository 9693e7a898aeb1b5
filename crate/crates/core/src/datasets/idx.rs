//! Reader for the big-endian IDX format used by MNIST-style datasets.

use std::io::Read;
use std::path::Path;

use super::PatternBatch;
use crate::error::{Result, SqhnError};
use crate::pattern::InputShape;

fn be_u32(b: &[u8], i: usize) -> usize {
    u32::from_be_bytes(b[4 * i..4 * i + 4].try_into().expect("4 bytes")) as usize
}

/// Parse an unsigned-byte image file (magic `0x00000803`) into
/// `(n, height, width, pixels)`.
pub fn parse_images(bytes: &[u8]) -> Result<(usize, usize, usize, &[u8])> {
    if bytes.len() < 16 || be_u32(bytes, 0) != 0x0803 {
        return Err(SqhnError::Format("not an IDX image file".into()));
    }
    let (n, h, w) = (be_u32(bytes, 1), be_u32(bytes, 2), be_u32(bytes, 3));
    let body = &bytes[16..];
    if body.len() != n * h * w {
        return Err(SqhnError::Format(format!(
            "IDX body has {} bytes, header needs {}",
            body.len(),
            n * h * w
        )));
    }
    Ok((n, h, w, body))
}

/// Parse an unsigned-byte label file (magic `0x00000801`).
pub fn parse_labels(bytes: &[u8]) -> Result<Vec<u32>> {
    if bytes.len() < 8 || be_u32(bytes, 0) != 0x0801 {
        return Err(SqhnError::Format("not an IDX label file".into()));
    }
    let n = be_u32(bytes, 1);
    let body = &bytes[8..];
    if body.len() != n {
        return Err(SqhnError::Format(format!(
            "IDX label body has {} bytes, header needs {n}",
            body.len()
        )));
    }
    Ok(body.iter().map(|&b| b as u32).collect())
}

fn read_all(path: &Path) -> Result<Vec<u8>> {
    let mut v = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut v)?;
    Ok(v)
}

/// Convert IDX images (and optional labels) to a batch scaled into `[0, 1]`,
/// keeping at most `limit` images.
pub fn convert_idx(
    images: &Path,
    labels: Option<&Path>,
    limit: Option<usize>,
) -> Result<PatternBatch> {
    let bytes = read_all(images)?;
    let (n, h, w, body) = parse_images(&bytes)?;
    let keep = limit.map_or(n, |l| l.min(n));
    let data = body[..keep * h * w]
        .iter()
        .map(|&b| b as f32 / 255.0)
        .collect();
    let labels = match labels {
        Some(p) => {
            let l = parse_labels(&read_all(p)?)?;
            if l.len() != n {
                return Err(SqhnError::ShapeMismatch {
                    expected: n,
                    got: l.len(),
                });
            }
            Some(l[..keep].to_vec())
        }
        None => None,
    };
    PatternBatch::new(InputShape::new(1, h, w), data, labels)
}
