//! Recall and continual-learning measures, plus a Monte-Carlo model of
//! worst-case overwriting past capacity.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SqhnError};
use crate::pattern::{MissingMask, Pattern};

pub const DEFAULT_RECALL_GAMMA: f64 = 0.01;

/// Mean squared error over all pixels, or only the missing ones when a
/// mask is supplied. A mask with nothing missing gives 0.
pub fn recall_mse(
    original: &Pattern,
    recalled: &Pattern,
    missing: Option<&MissingMask>,
) -> Result<f64> {
    if original.len() != recalled.len() {
        return Err(SqhnError::ShapeMismatch {
            expected: original.len(),
            got: recalled.len(),
        });
    }
    let pairs = original.values().iter().zip(recalled.values());
    let (sum, n) = match missing {
        Some(m) => {
            if m.len() != original.len() {
                return Err(SqhnError::ShapeMismatch {
                    expected: original.len(),
                    got: m.len(),
                });
            }
            pairs
                .zip(m.flags())
                .filter(|(_, &f)| f)
                .fold((0.0, 0usize), |(s, n), ((a, b), _)| {
                    (s + (a - b) * (a - b), n + 1)
                })
        }
        None => pairs.fold((0.0, 0usize), |(s, n), (a, b)| {
            (s + (a - b) * (a - b), n + 1)
        }),
    };
    Ok(if n == 0 { 0.0 } else { sum / n as f64 })
}

/// Fraction of errors strictly below `gamma`. Empty input gives 0.
pub fn recall_accuracy(mses: &[f64], gamma: f64) -> f64 {
    if mses.is_empty() {
        return 0.0;
    }
    mses.iter().filter(|&&m| m < gamma).count() as f64 / mses.len() as f64
}

/// Arithmetic mean; empty input gives 0.
pub fn cumulative(series: &[f64]) -> f64 {
    if series.is_empty() {
        return 0.0;
    }
    series.iter().sum::<f64>() / series.len() as f64
}

/// Absolute gap between a measure under two data orderings.
pub fn order_sensitivity(a: f64, b: f64) -> f64 {
    (a - b).abs()
}

/// Per-evaluation-point measures of one run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricSeries {
    pub gamma_recall: f64,
    pub iterations: Vec<u64>,
    pub recall_mse: Vec<f64>,
    pub recall_accuracy: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub recognition_accuracy: Vec<f64>,
}

impl MetricSeries {
    pub fn new(gamma_recall: f64) -> Self {
        Self {
            gamma_recall,
            ..Default::default()
        }
    }

    /// Record one evaluation point from the per-pattern errors measured there.
    pub fn push(&mut self, iteration: u64, mses: &[f64]) {
        self.iterations.push(iteration);
        self.recall_mse.push(cumulative(mses));
        self.recall_accuracy
            .push(recall_accuracy(mses, self.gamma_recall));
    }

    pub fn len(&self) -> usize {
        self.iterations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.iterations.is_empty()
    }

    pub fn cumulative_mse(&self) -> f64 {
        cumulative(&self.recall_mse)
    }

    pub fn cumulative_accuracy(&self) -> f64 {
        cumulative(&self.recall_accuracy)
    }

    /// Running means of the recall MSE up to each point.
    pub fn running_mse(&self) -> Vec<f64> {
        running_mean(&self.recall_mse)
    }

    pub fn running_accuracy(&self) -> Vec<f64> {
        running_mean(&self.recall_accuracy)
    }
}

pub fn running_mean(series: &[f64]) -> Vec<f64> {
    let mut sum = 0.0;
    series
        .iter()
        .enumerate()
        .map(|(i, v)| {
            sum += v;
            sum / (i + 1) as f64
        })
        .collect()
}

/// Monte-Carlo forgetting curve for a memory of `j` columns that starts full
/// (one datum per column) and then receives `t_max` further data, each
/// written into a uniformly random column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForgettingCurve {
    pub capacity: usize,
    pub trials: usize,
    /// Mean count of columns still holding only their original datum, t = 0..=t_max.
    pub mean: Vec<f64>,
    pub std_err: Vec<f64>,
    /// `J e^{-t/J}`.
    pub theory: Vec<f64>,
    /// `J (1 - 1/J)^t`, the exact expectation of the discrete process.
    pub exact: Vec<f64>,
    /// `J e^{-t/J} / (J + t)`: implied fraction of all seen data still recallable.
    pub accuracy_theory: Vec<f64>,
    pub max_abs_dev: f64,
}

impl ForgettingCurve {
    /// Largest `|mean - theory| / std_err` over `t`; points with zero
    /// standard error count as infinite unless the gap is also zero.
    pub fn max_z(&self) -> f64 {
        self.mean
            .iter()
            .zip(&self.theory)
            .zip(&self.std_err)
            .map(|((m, th), se)| {
                let gap = (m - th).abs();
                if *se > 0.0 {
                    gap / se
                } else if gap == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            })
            .fold(0.0, f64::max)
    }
}

pub fn forgetting_theory(j: usize, t: u64) -> f64 {
    j as f64 * (-(t as f64) / j as f64).exp()
}

pub fn accuracy_theory(j: usize, t: u64) -> f64 {
    forgetting_theory(j, t) / (j as f64 + t as f64)
}

pub fn forgetting_oracle<R: Rng + ?Sized>(
    j: usize,
    t_max: usize,
    trials: usize,
    rng: &mut R,
) -> Result<ForgettingCurve> {
    if j == 0 || trials == 0 {
        return Err(SqhnError::InvalidParameter(
            "capacity and trial count must be positive".into(),
        ));
    }
    let mut sum = vec![0.0; t_max + 1];
    let mut sum_sq = vec![0.0; t_max + 1];
    let mut intact = vec![true; j];
    for _ in 0..trials {
        intact.iter_mut().for_each(|x| *x = true);
        let mut count = j;
        for t in 0..=t_max {
            if t > 0 {
                let c = rng.random_range(0..j);
                if intact[c] {
                    intact[c] = false;
                    count -= 1;
                }
            }
            sum[t] += count as f64;
            sum_sq[t] += (count * count) as f64;
        }
    }
    let n = trials as f64;
    let mean: Vec<f64> = sum.iter().map(|s| s / n).collect();
    let std_err = mean
        .iter()
        .zip(&sum_sq)
        .map(|(m, sq)| {
            if trials < 2 {
                return 0.0;
            }
            let var = ((sq - n * m * m) / (n - 1.0)).max(0.0);
            (var / n).sqrt()
        })
        .collect();
    let theory: Vec<f64> = (0..=t_max as u64)
        .map(|t| forgetting_theory(j, t))
        .collect();
    let exact = (0..=t_max as i32)
        .map(|t| j as f64 * (1.0 - 1.0 / j as f64).powi(t))
        .collect();
    let accuracy_theory = (0..=t_max as u64).map(|t| accuracy_theory(j, t)).collect();
    let max_abs_dev = mean
        .iter()
        .zip(&theory)
        .map(|(m, th)| (m - th).abs())
        .fold(0.0, f64::max);
    Ok(ForgettingCurve {
        capacity: j,
        trials,
        mean,
        std_err,
        theory,
        exact,
        accuracy_theory,
        max_abs_dev,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pattern::InputShape;
    use rand::SeedableRng;

    fn p(v: &[f64]) -> Pattern {
        Pattern::new(InputShape::new(1, 1, v.len()), v.to_vec()).unwrap()
    }

    #[test]
    fn mse_examples() {
        assert_eq!(
            recall_mse(&p(&[0.1, 0.2]), &p(&[0.1, 0.2]), None).unwrap(),
            0.0
        );
        assert_eq!(recall_mse(&p(&[0.0; 3]), &p(&[1.0; 3]), None).unwrap(), 1.0);
        let e = recall_mse(&p(&[0.0; 4]), &p(&[0.2, 0.2, 0.0, 0.0]), None).unwrap();
        assert!((e - 0.02).abs() < 1e-15);
    }

    #[test]
    fn mse_only_over_missing() {
        let m = MissingMask::from_flags(vec![true, false]);
        assert_eq!(
            recall_mse(&p(&[0.0, 0.0]), &p(&[0.5, 1.0]), Some(&m)).unwrap(),
            0.25
        );
        let none = MissingMask::none(2);
        assert_eq!(
            recall_mse(&p(&[0.0, 0.0]), &p(&[0.5, 1.0]), Some(&none)).unwrap(),
            0.0
        );
    }

    #[test]
    fn accuracy_examples() {
        assert_eq!(recall_accuracy(&[0.0, 0.001], 0.01), 1.0);
        assert_eq!(recall_accuracy(&[0.5, 0.02], 0.01), 0.0);
        assert_eq!(recall_accuracy(&[0.005, 0.02], 0.01), 0.5);
        assert_eq!(recall_accuracy(&[], 0.01), 0.0);
    }

    #[test]
    fn cumulative_and_sensitivity() {
        assert_eq!(cumulative(&[0.3; 5]), 0.3);
        assert_eq!(cumulative(&[0.0, 1.0]), 0.5);
        assert!((order_sensitivity(0.3, 0.1) - 0.2).abs() < 1e-15);
        assert_eq!(running_mean(&[1.0, 3.0, 5.0]), vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn oracle_starts_full() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
        let c = forgetting_oracle(10, 20, 50, &mut rng).unwrap();
        assert_eq!(c.mean[0], 10.0);
        assert_eq!(c.std_err[0], 0.0);
        assert_eq!(c.mean[1], 9.0);
        assert!(c.mean.windows(2).all(|w| w[1] <= w[0]));
    }
}
