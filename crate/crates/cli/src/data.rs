//! Resolve a [`DataConfig`] into pattern batches.

use sqhn_core::datasets::{
    self, load_manifest, load_tensor_file, split_domains, PatternBatch, SynthSpec,
};
use sqhn_core::InputShape;

use crate::config::{DataConfig, ExperimentConfig};
use crate::error::{HarnessError, Result};

/// Load one source as a list of blocks (one per manifest domain, otherwise one).
pub fn load_source(src: &DataConfig, shape: InputShape, seed: u64) -> Result<Vec<PatternBatch>> {
    let blocks = match src {
        DataConfig::Synth {
            n,
            synth,
            seed_offset,
        } => {
            vec![datasets::generate(&SynthSpec {
                n: *n,
                shape,
                kind: *synth,
                seed: seed.wrapping_add(*seed_offset),
            })?]
        }
        DataConfig::File { path, limit } => {
            let b = load_tensor_file(path).map_err(|e| with_path(e, path))?;
            vec![match limit {
                Some(l) => b.take(*l),
                None => b,
            }]
        }
        DataConfig::Manifest { path } => load_manifest(path)
            .map_err(|e| with_path(e, path))?
            .into_iter()
            .map(|(_, b)| b)
            .collect(),
    };
    for b in &blocks {
        if b.shape() != shape {
            return Err(HarnessError::Config(format!(
                "data images are {}x{}x{} but the model input is {}x{}x{}",
                b.shape().channels,
                b.shape().height,
                b.shape().width,
                shape.channels,
                shape.height,
                shape.width
            )));
        }
    }
    Ok(blocks)
}

fn with_path(e: sqhn_core::SqhnError, path: &std::path::Path) -> HarnessError {
    match e {
        sqhn_core::SqhnError::Io(io) => HarnessError::Io {
            path: path.to_path_buf(),
            source: io,
        },
        other => HarnessError::Core(other),
    }
}

/// Main data of an experiment, split into domain blocks when requested.
pub fn load_blocks(cfg: &ExperimentConfig) -> Result<Vec<PatternBatch>> {
    let blocks = load_source(&cfg.data, cfg.model.input, cfg.seed)?;
    if cfg.stream.domains.is_empty() {
        return Ok(blocks);
    }
    if blocks.len() != 1 {
        return Err(HarnessError::Config(
            "stream.domains needs a single data source, not a multi-domain manifest".into(),
        ));
    }
    Ok(split_domains(&blocks[0], &cfg.stream.domains))
}

/// All patterns of all blocks, in block order.
pub fn flatten(blocks: &[PatternBatch]) -> Vec<sqhn_core::Pattern> {
    blocks.iter().flat_map(|b| b.patterns()).collect()
}
