//! Single-layer modern Hopfield network with batch storage, used as a
//! comparison baseline. Recall is one softmax-weighted readout.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SqhnError};
use crate::pattern::{InputShape, MissingMask, Pattern};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Similarity {
    Dot,
    #[default]
    Manhattan,
    Cosine,
}

/// How missing query dimensions enter the similarity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MissingPolicy {
    /// Score only the observed dimensions.
    #[default]
    Exclude,
    /// Treat missing dimensions as zeros and score everything.
    ZeroFill,
}

pub const DEFAULT_BETA: f64 = 1e4;

#[derive(Debug, Clone, PartialEq)]
pub struct Mhn {
    shape: InputShape,
    memories: Vec<Vec<f64>>,
    pub beta: f64,
    pub similarity: Similarity,
    pub missing_policy: MissingPolicy,
}

impl Mhn {
    pub fn new(shape: InputShape, similarity: Similarity) -> Self {
        Self {
            shape,
            memories: Vec::new(),
            beta: DEFAULT_BETA,
            similarity,
            missing_policy: MissingPolicy::Exclude,
        }
    }

    pub fn with_beta(mut self, beta: f64) -> Self {
        self.beta = beta;
        self
    }

    pub fn with_missing_policy(mut self, policy: MissingPolicy) -> Self {
        self.missing_policy = policy;
        self
    }

    pub fn len(&self) -> usize {
        self.memories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.memories.is_empty()
    }

    pub fn store(&mut self, pattern: &Pattern) -> Result<()> {
        if pattern.len() != self.shape.len() {
            return Err(SqhnError::ShapeMismatch {
                expected: self.shape.len(),
                got: pattern.len(),
            });
        }
        self.memories.push(pattern.values().to_vec());
        Ok(())
    }

    /// Store every pattern as a column.
    pub fn store_batch<'a>(
        &mut self,
        patterns: impl IntoIterator<Item = &'a Pattern>,
    ) -> Result<()> {
        for p in patterns {
            self.store(p)?;
        }
        Ok(())
    }

    /// Raw similarity of the query to every stored column.
    pub fn scores(&self, query: &Pattern, missing: Option<&MissingMask>) -> Result<Vec<f64>> {
        let d = self.shape.len();
        if query.len() != d {
            return Err(SqhnError::ShapeMismatch {
                expected: d,
                got: query.len(),
            });
        }
        if let Some(m) = missing {
            if m.len() != d {
                return Err(SqhnError::ShapeMismatch {
                    expected: d,
                    got: m.len(),
                });
            }
        }
        let q: Vec<f64> = match (missing, self.missing_policy) {
            (Some(m), MissingPolicy::ZeroFill) => query
                .values()
                .iter()
                .enumerate()
                .map(|(i, &v)| if m.is_missing(i) { 0.0 } else { v })
                .collect(),
            _ => query.values().to_vec(),
        };
        let keep: Vec<usize> = match (missing, self.missing_policy) {
            (Some(m), MissingPolicy::Exclude) => (0..d).filter(|&i| !m.is_missing(i)).collect(),
            _ => (0..d).collect(),
        };
        Ok(self
            .memories
            .iter()
            .map(|mem| self.score(mem, &q, &keep))
            .collect())
    }

    fn score(&self, mem: &[f64], q: &[f64], keep: &[usize]) -> f64 {
        match self.similarity {
            Similarity::Dot => keep.iter().map(|&i| mem[i] * q[i]).sum(),
            Similarity::Manhattan => -keep.iter().map(|&i| (mem[i] - q[i]).abs()).sum::<f64>(),
            Similarity::Cosine => {
                let (mut dot, mut nm, mut nq) = (0.0, 0.0, 0.0);
                for &i in keep {
                    dot += mem[i] * q[i];
                    nm += mem[i] * mem[i];
                    nq += q[i] * q[i];
                }
                let denom = (nm * nq).sqrt();
                if denom < 1e-12 {
                    0.0
                } else {
                    dot / denom
                }
            }
        }
    }

    /// `M softmax(beta * scores)`.
    pub fn recall(&self, query: &Pattern, missing: Option<&MissingMask>) -> Result<Pattern> {
        if self.memories.is_empty() {
            return Err(SqhnError::InvalidParameter("no stored patterns".into()));
        }
        let weights = softmax(&self.scores(query, missing)?, self.beta);
        let mut out = vec![0.0; self.shape.len()];
        for (mem, w) in self.memories.iter().zip(weights) {
            for (o, m) in out.iter_mut().zip(mem) {
                *o += w * m;
            }
        }
        Pattern::new(self.shape, out)
    }
}

/// Numerically stable softmax of `beta * scores`.
pub fn softmax(scores: &[f64], beta: f64) -> Vec<f64> {
    let scaled: Vec<f64> = scores.iter().map(|s| beta * s).collect();
    let max = scaled.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scaled.iter().map(|s| (s - max).exp()).collect();
    let z: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / z).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn shape() -> InputShape {
        InputShape::new(1, 1, 4)
    }

    fn net(sim: Similarity) -> Mhn {
        let mut m = Mhn::new(shape(), sim);
        m.store(&Pattern::new(shape(), vec![1.0, 0.0, 1.0, 0.0]).unwrap())
            .unwrap();
        m.store(&Pattern::new(shape(), vec![0.0, 1.0, 0.0, 1.0]).unwrap())
            .unwrap();
        m
    }

    #[test]
    fn softmax_is_stable_and_normalised() {
        let w = softmax(&[1000.0, 999.0, -5.0], 1e4);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!((w[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_beta_returns_column_mean() {
        let m = net(Similarity::Manhattan).with_beta(0.0);
        let out = m.recall(&Pattern::filled(shape(), 0.3), None).unwrap();
        assert!(out.values().iter().all(|&v| (v - 0.5).abs() < 1e-12));
    }

    #[test]
    fn stored_query_returns_itself() {
        for sim in [Similarity::Dot, Similarity::Manhattan, Similarity::Cosine] {
            let m = net(sim);
            let q = Pattern::new(shape(), vec![0.0, 1.0, 0.0, 1.0]).unwrap();
            let out = m.recall(&q, None).unwrap();
            for (a, b) in out.values().iter().zip(q.values()) {
                assert!((a - b).abs() < 1e-6, "{sim:?}");
            }
        }
    }

    #[test]
    fn excluded_dims_do_not_score() {
        let m = net(Similarity::Manhattan);
        let q = Pattern::new(shape(), vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let mask = MissingMask::from_flags(vec![false, false, true, true]);
        let s = m.scores(&q, Some(&mask)).unwrap();
        assert_eq!(s, vec![0.0, -2.0]);
    }

    #[test]
    fn empty_network_errors() {
        let m = Mhn::new(shape(), Similarity::Dot);
        assert!(m.recall(&Pattern::filled(shape(), 0.0), None).is_err());
    }
}
