//! Seeded corruption and sampling protocols.
//!
//! Masking protocols mark pixels missing (the model is told which ones);
//! noise and occlusion only change values.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SqhnError};
use crate::pattern::{MissingMask, Pattern};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OcclusionFill {
    #[default]
    Black,
    /// One uniform random value per channel.
    Color,
    /// Unit-variance Gaussian noise, clamped.
    Noise,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Corruption {
    #[default]
    None,
    WhiteNoise {
        variance: f64,
    },
    /// Marks `ceil(frac * H * W)` random pixel positions (all channels) missing.
    PixelDropout {
        frac: f64,
    },
    /// Marks the rightmost `ceil(frac * W)` columns missing.
    RightMask {
        frac: f64,
    },
    /// Rectangle of random size and position. With `frac`, the rectangle
    /// covers about that fraction of the image instead.
    Occlusion {
        #[serde(default)]
        fill: OcclusionFill,
        #[serde(default)]
        frac: Option<f64>,
    },
    BinarySample,
    GaussianSample {
        variance: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Corrupted {
    pub pattern: Pattern,
    /// Present only for masking protocols.
    pub missing: Option<MissingMask>,
}

fn check_frac(frac: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&frac) {
        return Err(SqhnError::InvalidParameter(format!(
            "fraction must lie in [0, 1], got {frac}"
        )));
    }
    Ok(())
}

fn check_var(var: f64) -> Result<()> {
    if !(var >= 0.0 && var.is_finite()) {
        return Err(SqhnError::InvalidParameter(format!(
            "variance must be non-negative, got {var}"
        )));
    }
    Ok(())
}

impl Corruption {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Corruption::WhiteNoise { variance } | Corruption::GaussianSample { variance } => {
                check_var(variance)
            }
            Corruption::PixelDropout { frac } | Corruption::RightMask { frac } => check_frac(frac),
            Corruption::Occlusion { frac: Some(f), .. } => check_frac(f),
            _ => Ok(()),
        }
    }

    pub fn is_masking(&self) -> bool {
        matches!(
            self,
            Corruption::PixelDropout { .. } | Corruption::RightMask { .. }
        )
    }

    pub fn apply<R: Rng + ?Sized>(&self, pattern: &Pattern, rng: &mut R) -> Result<Corrupted> {
        self.validate()?;
        let shape = pattern.shape();
        let (c, h, w) = (shape.channels, shape.height, shape.width);
        let mut out = pattern.clone();
        let mut missing = None;
        match *self {
            Corruption::None => {}
            Corruption::WhiteNoise { variance } | Corruption::GaussianSample { variance } => {
                if variance > 0.0 {
                    let normal = Normal::new(0.0, variance.sqrt()).expect("valid sd");
                    for v in out.values_mut() {
                        *v += normal.sample(rng);
                    }
                    out.clamp_unit();
                }
            }
            Corruption::PixelDropout { frac } => {
                let hw = h * w;
                let k = ((frac * hw as f64) - 1e-9).ceil().max(0.0) as usize;
                let chosen = rand::seq::index::sample(rng, hw, k.min(hw));
                let mut flags = vec![false; shape.len()];
                for pos in chosen {
                    for ch in 0..c {
                        flags[ch * hw + pos] = true;
                    }
                }
                missing = Some(mask_out(&mut out, flags));
            }
            Corruption::RightMask { frac } => {
                let k = ((frac * w as f64) - 1e-9).ceil().max(0.0) as usize;
                let mut flags = vec![false; shape.len()];
                for ch in 0..c {
                    for r in 0..h {
                        for col in w - k.min(w)..w {
                            flags[shape.index(ch, r, col)] = true;
                        }
                    }
                }
                missing = Some(mask_out(&mut out, flags));
            }
            Corruption::Occlusion { fill, frac } => {
                let (rh, rw) = match frac {
                    Some(f) => {
                        let s = f.sqrt();
                        (
                            ((s * h as f64).round() as usize).min(h),
                            ((s * w as f64).round() as usize).min(w),
                        )
                    }
                    None => (rng.random_range(1..=h), rng.random_range(1..=w)),
                };
                let top = rng.random_range(0..=h - rh);
                let left = rng.random_range(0..=w - rw);
                let colors: Vec<f64> = (0..c).map(|_| rng.random::<f64>()).collect();
                let normal = Normal::new(0.0, 1.0).expect("valid sd");
                let values = out.values_mut();
                for ch in 0..c {
                    for r in top..top + rh {
                        for col in left..left + rw {
                            values[shape.index(ch, r, col)] = match fill {
                                OcclusionFill::Black => 0.0,
                                OcclusionFill::Color => colors[ch],
                                OcclusionFill::Noise => {
                                    let z: f64 = normal.sample(rng);
                                    z.clamp(0.0, 1.0)
                                }
                            };
                        }
                    }
                }
            }
            Corruption::BinarySample => {
                for v in out.values_mut() {
                    *v = if rng.random::<f64>() < *v { 1.0 } else { 0.0 };
                }
            }
        }
        Ok(Corrupted {
            pattern: out,
            missing,
        })
    }
}

fn mask_out(pattern: &mut Pattern, flags: Vec<bool>) -> MissingMask {
    for (v, &m) in pattern.values_mut().iter_mut().zip(&flags) {
        if m {
            *v = 0.0;
        }
    }
    MissingMask::from_flags(flags)
}

/// Independent RNG stream for one item, so the same item receives the same
/// corruption regardless of where it appears in a stream.
pub fn item_rng(seed: u64, item: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(item);
    rng
}
