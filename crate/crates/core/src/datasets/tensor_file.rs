//! `SQD1` tensor files.
//!
//! Header: magic `SQD1`, then version, N, C, H, W as u32 LE. Payload:
//! N*C*H*W f32 LE values, optionally followed by N u32 LE labels. Labels are
//! detected from the trailing length.

use std::io::{Read, Write};
use std::path::Path;

use super::PatternBatch;
use crate::error::{Result, SqhnError};
use crate::pattern::InputShape;

const MAGIC: &[u8; 4] = b"SQD1";
pub const TENSOR_FILE_VERSION: u32 = 1;

pub fn write_tensor_file<W: Write>(batch: &PatternBatch, mut out: W) -> Result<()> {
    let s = batch.shape();
    out.write_all(MAGIC)?;
    for v in [
        TENSOR_FILE_VERSION as usize,
        batch.len(),
        s.channels,
        s.height,
        s.width,
    ] {
        let v =
            u32::try_from(v).map_err(|_| SqhnError::Format(format!("{v} does not fit in u32")))?;
        out.write_all(&v.to_le_bytes())?;
    }
    let mut buf = Vec::with_capacity(batch.data().len() * 4);
    for v in batch.data() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    if let Some(labels) = batch.labels() {
        for l in labels {
            buf.extend_from_slice(&l.to_le_bytes());
        }
    }
    out.write_all(&buf)?;
    out.flush()?;
    Ok(())
}

pub fn read_tensor_file<R: Read>(mut input: R) -> Result<PatternBatch> {
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    if bytes.len() < 24 || &bytes[..4] != MAGIC {
        return Err(SqhnError::Format(
            "not a tensor file (bad magic or short header)".into(),
        ));
    }
    let word = |i: usize| {
        u32::from_le_bytes(bytes[4 + 4 * i..8 + 4 * i].try_into().expect("4 bytes")) as usize
    };
    let version = word(0);
    if version != TENSOR_FILE_VERSION as usize {
        return Err(SqhnError::Format(format!(
            "unsupported tensor file version {version}"
        )));
    }
    let (n, c, h, w) = (word(1), word(2), word(3), word(4));
    let shape = InputShape::new(c, h, w);
    if shape.is_empty() {
        return Err(SqhnError::Format("image shape has a zero dimension".into()));
    }
    let body = &bytes[24..];
    let values_len = n
        .checked_mul(shape.len())
        .and_then(|v| v.checked_mul(4))
        .ok_or_else(|| SqhnError::Format("header sizes overflow".into()))?;
    if body.len() < values_len {
        return Err(SqhnError::Format(format!(
            "payload has {} bytes, header needs {values_len}",
            body.len()
        )));
    }
    let data = body[..values_len]
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes(b.try_into().expect("4 bytes")))
        .collect();
    let tail = &body[values_len..];
    let labels = if tail.is_empty() {
        None
    } else if tail.len() == 4 * n {
        Some(
            tail.chunks_exact(4)
                .map(|b| u32::from_le_bytes(b.try_into().expect("4 bytes")))
                .collect(),
        )
    } else {
        return Err(SqhnError::Format(format!(
            "{} trailing bytes match neither no labels nor {n} labels",
            tail.len()
        )));
    };
    PatternBatch::new(shape, data, labels)
}

pub fn save_tensor_file(batch: &PatternBatch, path: impl AsRef<Path>) -> Result<()> {
    write_tensor_file(batch, std::io::BufWriter::new(std::fs::File::create(path)?))
}

pub fn load_tensor_file(path: impl AsRef<Path>) -> Result<PatternBatch> {
    read_tensor_file(std::io::BufReader::new(std::fs::File::open(path)?))
}
