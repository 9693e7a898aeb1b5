//! Synthetic image generators and domain-shift transforms.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::PatternBatch;
use crate::error::{Result, SqhnError};
use crate::pattern::InputShape;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SynthKind {
    /// Independent pixels, uniform in `[0, 1]` or fair coin flips.
    Random {
        #[serde(default)]
        binary: bool,
    },
    /// `classes` random prototypes; each image is `(1 - spread) * proto + spread * u`
    /// with `u` uniform noise. Labels cycle through the classes.
    Clustered { classes: usize, spread: f64 },
}

impl Default for SynthKind {
    fn default() -> Self {
        SynthKind::Random { binary: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub n: usize,
    pub shape: InputShape,
    pub kind: SynthKind,
    pub seed: u64,
}

pub fn generate(spec: &SynthSpec) -> Result<PatternBatch> {
    let d = spec.shape.len();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut data = Vec::with_capacity(spec.n * d);
    let labels = match spec.kind {
        SynthKind::Random { binary } => {
            for _ in 0..spec.n * d {
                data.push(if binary {
                    if rng.random::<bool>() {
                        1.0
                    } else {
                        0.0
                    }
                } else {
                    rng.random::<f32>()
                });
            }
            None
        }
        SynthKind::Clustered { classes, spread } => {
            if classes == 0 || !(0.0..=1.0).contains(&spread) {
                return Err(SqhnError::InvalidParameter(format!(
                    "clustered data needs classes > 0 and spread in [0, 1], got {classes} and {spread}"
                )));
            }
            let protos: Vec<Vec<f64>> = (0..classes)
                .map(|_| (0..d).map(|_| rng.random()).collect())
                .collect();
            let mut labels = Vec::with_capacity(spec.n);
            for i in 0..spec.n {
                let c = i % classes;
                for &p in &protos[c] {
                    let x = (1.0 - spread) * p + spread * rng.random::<f64>();
                    data.push((x as f32).clamp(0.0, 1.0));
                }
                labels.push(c as u32);
            }
            Some(labels)
        }
    };
    PatternBatch::new(spec.shape, data, labels)
}

/// Pixel-wise domain shift.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DomainTransform {
    #[default]
    Identity,
    /// `x * 0.5`
    Dark,
    /// `(1 - x) * 0.5 + 0.5`
    BrightInverted,
    /// `1 - x`
    Inverted,
}

impl DomainTransform {
    pub fn map(self, x: f32) -> f32 {
        match self {
            DomainTransform::Identity => x,
            DomainTransform::Dark => x * 0.5,
            DomainTransform::BrightInverted => (-x + 1.0) * 0.5 + 0.5,
            DomainTransform::Inverted => 1.0 - x,
        }
    }

    pub fn apply(self, batch: &PatternBatch) -> PatternBatch {
        let data = batch.data().iter().map(|&x| self.map(x)).collect();
        PatternBatch::new(batch.shape(), data, batch.labels().map(<[u32]>::to_vec))
            .expect("transforms stay in range")
    }
}

/// Split `batch` into `transforms.len()` contiguous blocks of near-equal
/// size and apply one transform to each.
pub fn split_domains(batch: &PatternBatch, transforms: &[DomainTransform]) -> Vec<PatternBatch> {
    let k = transforms.len();
    let n = batch.len();
    let d = batch.shape().len();
    (0..k)
        .map(|i| {
            let (lo, hi) = (i * n / k, (i + 1) * n / k);
            let data = batch.data()[lo * d..hi * d]
                .iter()
                .map(|&x| transforms[i].map(x))
                .collect();
            let labels = batch.labels().map(|l| l[lo..hi].to_vec());
            PatternBatch::new(batch.shape(), data, labels).expect("transforms stay in range")
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_and_deterministic() {
        let spec = SynthSpec {
            n: 0,
            shape: InputShape::new(1, 4, 4),
            kind: SynthKind::Random { binary: false },
            seed: 1,
        };
        assert!(generate(&spec).unwrap().is_empty());
        let spec = SynthSpec { n: 5, ..spec };
        assert_eq!(generate(&spec).unwrap(), generate(&spec).unwrap());
    }

    #[test]
    fn clustered_labels_cycle() {
        let spec = SynthSpec {
            n: 7,
            shape: InputShape::new(1, 2, 2),
            kind: SynthKind::Clustered {
                classes: 3,
                spread: 0.2,
            },
            seed: 4,
        };
        let b = generate(&spec).unwrap();
        assert_eq!(b.labels().unwrap(), &[0, 1, 2, 0, 1, 2, 0]);
    }

    #[test]
    fn domain_split_covers_batch() {
        let b = PatternBatch::new(InputShape::new(1, 1, 1), vec![1.0; 7], None).unwrap();
        let parts = split_domains(
            &b,
            &[
                DomainTransform::Identity,
                DomainTransform::Dark,
                DomainTransform::Inverted,
            ],
        );
        assert_eq!(
            parts.iter().map(PatternBatch::len).collect::<Vec<_>>(),
            vec![2, 2, 3]
        );
        assert_eq!(parts[1].data(), &[0.5, 0.5]);
        assert_eq!(parts[2].data(), &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn transforms() {
        assert_eq!(DomainTransform::Dark.map(1.0), 0.5);
        assert_eq!(DomainTransform::BrightInverted.map(0.0), 1.0);
        assert_eq!(DomainTransform::BrightInverted.map(1.0), 0.5);
        assert_eq!(DomainTransform::Inverted.map(0.25), 0.75);
    }
}
