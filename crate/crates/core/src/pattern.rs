//! Image tensors and missing-pixel masks.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SqhnError};

/// Channels x height x width of an input image.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct InputShape {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
}

impl InputShape {
    pub const fn new(channels: usize, height: usize, width: usize) -> Self {
        Self {
            channels,
            height,
            width,
        }
    }

    /// Number of scalar values in one image.
    pub const fn len(&self) -> usize {
        self.channels * self.height * self.width
    }

    pub const fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Flat index of `(channel, row, col)` in channel-major layout.
    #[inline]
    pub const fn index(&self, channel: usize, row: usize, col: usize) -> usize {
        (channel * self.height + row) * self.width + col
    }
}

/// A single image with values in `[0, 1]`, stored channel-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Pattern {
    shape: InputShape,
    values: Vec<f64>,
}

impl Pattern {
    pub fn new(shape: InputShape, values: Vec<f64>) -> Result<Self> {
        if values.len() != shape.len() {
            return Err(SqhnError::ShapeMismatch {
                expected: shape.len(),
                got: values.len(),
            });
        }
        Ok(Self { shape, values })
    }

    pub fn filled(shape: InputShape, value: f64) -> Self {
        Self {
            shape,
            values: vec![value; shape.len()],
        }
    }

    pub fn shape(&self) -> InputShape {
        self.shape
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Clamp every value into `[0, 1]`.
    pub fn clamp_unit(&mut self) {
        for v in &mut self.values {
            *v = v.clamp(0.0, 1.0);
        }
    }
}

/// Per-value flag marking inputs that are absent (hetero-association).
///
/// Missing values are ignored by the bottom-layer similarity and are the only
/// values scored by the hetero-association recall error.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct MissingMask(Vec<bool>);

impl MissingMask {
    /// A mask with nothing missing.
    pub fn none(len: usize) -> Self {
        Self(vec![false; len])
    }

    pub fn all(len: usize) -> Self {
        Self(vec![true; len])
    }

    pub fn from_flags(flags: Vec<bool>) -> Self {
        Self(flags)
    }

    pub fn flags(&self) -> &[bool] {
        &self.0
    }

    pub fn flags_mut(&mut self) -> &mut [bool] {
        &mut self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_missing(&self, i: usize) -> bool {
        self.0[i]
    }

    pub fn missing_count(&self) -> usize {
        self.0.iter().filter(|&&m| m).count()
    }

    pub fn any_missing(&self) -> bool {
        self.0.iter().any(|&m| m)
    }
}
