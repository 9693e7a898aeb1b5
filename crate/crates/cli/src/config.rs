//! Experiment configuration, read from TOML.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sqhn_core::datasets::{DomainTransform, StreamOrder, SynthKind};
use sqhn_core::{
    Architecture, Corruption, GrowthMode, LearnConfig, LrMode, MissingPolicy, Similarity,
};

use crate::error::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    AssocAuto,
    AssocHetero,
    OnlineContinual,
    NoisyEncoding,
    EpisodicRecognition,
    TheoryVerify,
    Ablate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DataConfig {
    /// Generated images shaped like the model input.
    Synth {
        n: usize,
        #[serde(default)]
        synth: SynthKind,
        /// Added to the experiment seed.
        #[serde(default)]
        seed_offset: u64,
    },
    /// A single `SQD1` tensor file.
    File {
        path: PathBuf,
        #[serde(default)]
        limit: Option<usize>,
    },
    /// CSV manifest of tensor files; each domain becomes one block.
    Manifest { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalConfig {
    /// Recall counts as correct when its MSE is below this.
    #[serde(default = "default_gamma_recall")]
    pub gamma_recall: f64,
    /// Evaluate every this many training iterations; 0 evaluates once at the end.
    #[serde(default)]
    pub every: usize,
    /// Corruption applied to test queries.
    #[serde(default)]
    pub corruption: Corruption,
    /// Feedback mixing weight for recall; defaults to the model's.
    #[serde(default)]
    pub lambda: Option<f64>,
    /// Record mean energy of bottom-up and of bottom-up plus top-down assignments.
    #[serde(default)]
    pub energy: bool,
}

fn default_gamma_recall() -> f64 {
    sqhn_core::metrics::DEFAULT_RECALL_GAMMA
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            gamma_recall: default_gamma_recall(),
            every: 0,
            corruption: Corruption::None,
            lambda: None,
            energy: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaselineConfig {
    #[serde(default)]
    pub similarity: Similarity,
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default)]
    pub missing_policy: MissingPolicy,
}

fn default_beta() -> f64 {
    sqhn_core::mhn::DEFAULT_BETA
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StreamConfig {
    /// Presentation order. Associative tasks default to data order.
    #[serde(default)]
    pub order: Option<StreamOrder>,
    /// Extra orders run on the same data for order-sensitivity comparison.
    #[serde(default)]
    pub compare: Vec<StreamOrder>,
    /// Split single-source data into contiguous blocks, one per transform.
    #[serde(default)]
    pub domains: Vec<DomainTransform>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoisyConfig {
    /// Number of corrupted samples per item; one fresh run per entry.
    pub samples: Vec<usize>,
    /// Sampling protocol for the training presentations.
    pub sampling: Corruption,
}

impl Default for NoisyConfig {
    fn default() -> Self {
        Self {
            samples: vec![1, 5, 20],
            sampling: Corruption::BinarySample,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecognitionConfig {
    /// Training-set sizes; one fresh run each. The next equally many items
    /// of the data serve as in-distribution novel probes.
    pub train_sizes: Vec<usize>,
    /// Optional out-of-distribution novel probes, again one per training item.
    #[serde(default)]
    pub out_of_distribution: Option<DataConfig>,
    /// Optional pretraining data; afterwards only edges into the root learn.
    #[serde(default)]
    pub pretrain: Option<DataConfig>,
}

impl Default for RecognitionConfig {
    fn default() -> Self {
        Self {
            train_sizes: vec![64],
            out_of_distribution: None,
            pretrain: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TheoryConfig {
    pub capacity: usize,
    /// Steps past a full memory; defaults to three times the capacity.
    #[serde(default)]
    pub t_max: Option<usize>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    /// Also train the model on its data stream and compare accuracy past
    /// capacity with the predicted curve.
    #[serde(default = "yes")]
    pub end_to_end: bool,
}

fn default_trials() -> usize {
    1000
}

fn yes() -> bool {
    true
}

impl Default for TheoryConfig {
    fn default() -> Self {
        Self {
            capacity: 100,
            t_max: None,
            trials: default_trials(),
            end_to_end: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Ablation {
    Full,
    /// Constant growth threshold.
    NoDir,
    /// Constant learning rate.
    NoLrDecay,
    /// No growth; random initial weights.
    NoGrw,
    /// Grow only; never average into an existing column.
    NoAvg,
}

impl Ablation {
    pub fn label(self) -> &'static str {
        match self {
            Ablation::Full => "full",
            Ablation::NoDir => "-dir",
            Ablation::NoLrDecay => "-lr-decay",
            Ablation::NoGrw => "-grw",
            Ablation::NoAvg => "-avg",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AblateConfig {
    pub variants: Vec<Ablation>,
    pub constant_threshold: f64,
    pub constant_rate: f64,
}

impl Default for AblateConfig {
    fn default() -> Self {
        Self {
            variants: vec![
                Ablation::Full,
                Ablation::NoDir,
                Ablation::NoLrDecay,
                Ablation::NoGrw,
                Ablation::NoAvg,
            ],
            constant_threshold: 0.8,
            constant_rate: 0.5,
        }
    }
}

impl AblateConfig {
    pub fn apply(&self, base: &LearnConfig, variant: Ablation) -> LearnConfig {
        let mut cfg = *base;
        match variant {
            Ablation::Full => {}
            Ablation::NoDir => {
                cfg.growth = GrowthMode::Constant {
                    threshold: self.constant_threshold,
                }
            }
            Ablation::NoLrDecay => {
                cfg.lr = LrMode::Constant {
                    rate: self.constant_rate,
                }
            }
            Ablation::NoGrw => cfg.growth = GrowthMode::Disabled,
            Ablation::NoAvg => cfg.averaging = false,
        }
        cfg
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: Option<String>,
    pub task: Task,
    #[serde(default)]
    pub seed: u64,
    pub model: Architecture,
    #[serde(default)]
    pub learn: LearnConfig,
    pub data: DataConfig,
    #[serde(default)]
    pub eval: EvalConfig,
    #[serde(default)]
    pub stream: StreamConfig,
    /// Modern Hopfield baseline evaluated on the same queries.
    #[serde(default)]
    pub baseline: Option<BaselineConfig>,
    #[serde(default)]
    pub noisy: Option<NoisyConfig>,
    #[serde(default)]
    pub recognition: Option<RecognitionConfig>,
    #[serde(default)]
    pub theory: Option<TheoryConfig>,
    #[serde(default)]
    pub ablate: Option<AblateConfig>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Read a config; relative data paths resolve against its directory.
    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        let mut cfg = Self::from_toml(&text)?;
        if let Some(base) = path.parent() {
            cfg.resolve_paths(base);
        }
        Ok(cfg)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let mut sources = vec![&mut self.data];
        if let Some(r) = self.recognition.as_mut() {
            sources.extend(r.out_of_distribution.as_mut());
            sources.extend(r.pretrain.as_mut());
        }
        for d in sources {
            if let DataConfig::File { path, .. } | DataConfig::Manifest { path } = d {
                if path.is_relative() {
                    *path = base.join(&*path);
                }
            }
        }
    }

    /// Reject combinations that cannot run.
    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |msg: String| Err(HarnessError::Config(msg));
        self.model.validate()?;
        self.learn.validate()?;
        self.eval.corruption.validate()?;
        if let Some(l) = self.eval.lambda {
            if !(0.0..=1.0).contains(&l) {
                return bad(format!("eval.lambda must lie in [0, 1], got {l}"));
            }
        }
        if self.learn.fixed_latent && self.task != Task::NoisyEncoding {
            return bad("learn.fixed_latent only applies to the noisy-encoding task".into());
        }
        if matches!(self.learn.growth, GrowthMode::Disabled) && self.task != Task::Ablate {
            return bad("growth mode 'disabled' is only available through the ablate task".into());
        }
        match self.task {
            Task::AssocHetero if !self.eval.corruption.is_masking() => bad(
                "assoc-hetero needs a masking eval.corruption (pixel-dropout or right-mask)".into(),
            ),
            Task::AssocAuto if self.eval.corruption.is_masking() => {
                bad("assoc-auto needs a value corruption; use assoc-hetero for masks".into())
            }
            Task::NoisyEncoding => {
                let n = self.noisy.clone().unwrap_or_default();
                n.sampling.validate()?;
                if n.samples.is_empty() || n.samples.contains(&0) {
                    return bad("noisy.samples must list positive sample counts".into());
                }
                if n.sampling.is_masking() {
                    return bad("noisy.sampling must be a value corruption".into());
                }
                Ok(())
            }
            Task::EpisodicRecognition => {
                let r = self.recognition.clone().unwrap_or_default();
                if r.train_sizes.is_empty() || r.train_sizes.contains(&0) {
                    return bad("recognition.train_sizes must list positive sizes".into());
                }
                Ok(())
            }
            Task::TheoryVerify => {
                let t = self.theory.clone().unwrap_or_default();
                if t.capacity == 0 || t.trials == 0 {
                    return bad("theory.capacity and theory.trials must be positive".into());
                }
                Ok(())
            }
            Task::Ablate => {
                let a = self.ablate.clone().unwrap_or_default();
                if a.variants.is_empty() {
                    return bad("ablate.variants is empty".into());
                }
                a.apply(&self.learn, Ablation::NoDir).validate()?;
                a.apply(&self.learn, Ablation::NoLrDecay).validate()?;
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Section values with defaults filled in, so reports echo everything used.
    pub fn resolved(&self) -> Self {
        let mut c = self.clone();
        match c.task {
            Task::NoisyEncoding => {
                c.noisy.get_or_insert_with(Default::default);
            }
            Task::EpisodicRecognition => {
                c.recognition.get_or_insert_with(Default::default);
            }
            Task::TheoryVerify => {
                let t = c.theory.get_or_insert_with(Default::default);
                t.t_max.get_or_insert(3 * t.capacity);
            }
            Task::Ablate => {
                c.ablate.get_or_insert_with(Default::default);
            }
            _ => {}
        }
        if c.eval.lambda.is_none() {
            c.eval.lambda = Some(c.model.lambda_fb);
        }
        c
    }
}
