//! Split an image into the bottom layer's patches and put it back together.

use crate::arch::Architecture;
use crate::error::{Result, SqhnError};
use crate::pattern::Pattern;

/// One patch per bottom node, in node order, each channel-major within the
/// node's receptive field.
pub fn tile(pattern: &Pattern, arch: &Architecture) -> Result<Vec<Vec<f64>>> {
    let topo = arch.topology()?;
    if pattern.shape() != arch.input {
        return Err(SqhnError::ShapeMismatch {
            expected: arch.input.len(),
            got: pattern.len(),
        });
    }
    let v = pattern.values();
    Ok(topo
        .bottom_nodes()
        .map(|n| topo.nodes[n].patch.iter().map(|&i| v[i]).collect())
        .collect())
}

pub fn untile(patches: &[Vec<f64>], arch: &Architecture) -> Result<Pattern> {
    let topo = arch.topology()?;
    let bottom = topo.bottom_nodes();
    if patches.len() != bottom.len() {
        return Err(SqhnError::ShapeMismatch {
            expected: bottom.len(),
            got: patches.len(),
        });
    }
    let mut out = Pattern::filled(arch.input, 0.0);
    let values = out.values_mut();
    for (node, patch) in bottom.zip(patches) {
        let idx = &topo.nodes[node].patch;
        if patch.len() != idx.len() {
            return Err(SqhnError::ShapeMismatch {
                expected: idx.len(),
                got: patch.len(),
            });
        }
        for (&i, &x) in idx.iter().zip(patch) {
            values[i] = x;
        }
    }
    Ok(out)
}
