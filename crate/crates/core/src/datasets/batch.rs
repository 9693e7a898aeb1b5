use crate::error::{Result, SqhnError};
use crate::pattern::{InputShape, Pattern};

/// A set of same-shaped images, stored as `f32` so that file round trips are
/// bit-exact, with optional class labels. An empty batch never carries labels,
/// since the tensor file cannot tell empty labels from absent ones.
#[derive(Debug, Clone, PartialEq)]
pub struct PatternBatch {
    shape: InputShape,
    data: Vec<f32>,
    labels: Option<Vec<u32>>,
}

impl PatternBatch {
    pub fn new(shape: InputShape, data: Vec<f32>, labels: Option<Vec<u32>>) -> Result<Self> {
        let d = shape.len();
        if d == 0 || !data.len().is_multiple_of(d) {
            return Err(SqhnError::Format(format!(
                "{} values do not divide into images of {d}",
                data.len()
            )));
        }
        if let Some(v) = data.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(SqhnError::Format(format!("value {v} outside [0, 1]")));
        }
        if let Some(l) = &labels {
            if l.len() != data.len() / d {
                return Err(SqhnError::ShapeMismatch {
                    expected: data.len() / d,
                    got: l.len(),
                });
            }
        }
        Ok(Self {
            shape,
            labels: labels.filter(|l| !l.is_empty()),
            data,
        })
    }

    pub fn empty(shape: InputShape) -> Self {
        Self {
            shape,
            data: Vec::new(),
            labels: None,
        }
    }

    /// Build from patterns; values are rounded to `f32`.
    pub fn from_patterns(
        shape: InputShape,
        patterns: &[Pattern],
        labels: Option<Vec<u32>>,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(patterns.len() * shape.len());
        for p in patterns {
            if p.shape() != shape {
                return Err(SqhnError::ShapeMismatch {
                    expected: shape.len(),
                    got: p.len(),
                });
            }
            data.extend(p.values().iter().map(|&v| v as f32));
        }
        Self::new(shape, data, labels)
    }

    pub fn shape(&self) -> InputShape {
        self.shape
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.shape.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn labels(&self) -> Option<&[u32]> {
        self.labels.as_deref()
    }

    pub fn label(&self, i: usize) -> Option<u32> {
        self.labels.as_ref().map(|l| l[i])
    }

    pub fn set_labels(&mut self, labels: Option<Vec<u32>>) -> Result<()> {
        if let Some(l) = &labels {
            if l.len() != self.len() {
                return Err(SqhnError::ShapeMismatch {
                    expected: self.len(),
                    got: l.len(),
                });
            }
        }
        self.labels = labels.filter(|l| !l.is_empty());
        Ok(())
    }

    pub fn raw(&self, i: usize) -> &[f32] {
        let d = self.shape.len();
        &self.data[i * d..(i + 1) * d]
    }

    pub fn pattern(&self, i: usize) -> Pattern {
        Pattern::new(self.shape, self.raw(i).iter().map(|&v| v as f64).collect())
            .expect("shape matches")
    }

    pub fn patterns(&self) -> Vec<Pattern> {
        (0..self.len()).map(|i| self.pattern(i)).collect()
    }

    /// First `n` images (or all, if fewer).
    pub fn take(&self, n: usize) -> Self {
        let n = n.min(self.len());
        Self {
            shape: self.shape,
            data: self.data[..n * self.shape.len()].to_vec(),
            labels: self.labels.as_ref().map(|l| l[..n].to_vec()),
        }
    }
}
