//! Single bottom-up / top-down sweep inference and pattern recall.
//!
//! Bottom-layer neurons score their patch with a shifted cosine similarity
//! against their memory column. Hidden neurons sum their column entries at
//! each child's winning neuron, weighted by that child's winning activity,
//! and normalise by `N * ||h_c^max||`. The top-down pass mixes each node's
//! bottom-up activity with its parent's prediction before taking the argmax.

use crate::error::{Result, SqhnError};
use crate::pattern::{MissingMask, Pattern};
use crate::state::ModelState;

/// Norm below which a shifted vector is treated as carrying no evidence.
pub const DEGENERATE_NORM: f64 = 1e-12;

/// Per-node activations and one-hot assignments produced by a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeActivations {
    /// Activation vectors, padded with zeros to node capacity.
    pub h: Vec<Vec<f64>>,
    /// Index of the winning neuron of every node.
    pub h_star: Vec<usize>,
    /// Value of the winning entry of every node's activation vector.
    pub max_val: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub acts: NodeActivations,
    pub used_fb: bool,
}

/// Index and value of the maximum of `values[..len]`; ties go to the lowest
/// index. Returns `(0, 0.0)` for an empty range.
#[inline]
pub fn argmax(values: &[f64]) -> (usize, f64) {
    let mut best = 0;
    let mut best_val = f64::NEG_INFINITY;
    for (i, &v) in values.iter().enumerate() {
        if v > best_val {
            best = i;
            best_val = v;
        }
    }
    if values.is_empty() {
        (0, 0.0)
    } else {
        (best, best_val)
    }
}

/// Shifted cosine similarity between a memory column and a patch, mapped to
/// `[0, 1]`. Missing entries are excluded from the inner product and both
/// norms. A degenerate norm yields the uninformative value 0.5.
pub fn shifted_cosine(memory: &[f64], patch: &[f64], missing: Option<&[bool]>) -> f64 {
    let mut dot = 0.0;
    let mut nm = 0.0;
    let mut nx = 0.0;
    match missing {
        Some(mask) => {
            for ((&m, &x), &skip) in memory.iter().zip(patch).zip(mask) {
                if !skip {
                    let (a, b) = (m - 0.5, x - 0.5);
                    dot += a * b;
                    nm += a * a;
                    nx += b * b;
                }
            }
        }
        None => {
            for (&m, &x) in memory.iter().zip(patch) {
                let (a, b) = (m - 0.5, x - 0.5);
                dot += a * b;
                nm += a * a;
                nx += b * b;
            }
        }
    }
    let denom = nm.sqrt() * nx.sqrt();
    if nm.sqrt() < DEGENERATE_NORM || nx.sqrt() < DEGENERATE_NORM {
        return 0.5;
    }
    (0.5 * dot / denom + 0.5).clamp(0.0, 1.0)
}

/// Bottom-layer activations for one patch.
///
/// `columns` is the node's column-major matrix (`patch.len()` rows); entries
/// at or beyond `grown` are left at zero. The output has one entry per column.
pub fn ff_bottom(
    patch: &[f64],
    missing: Option<&[bool]>,
    columns: &[f64],
    grown: usize,
) -> Vec<f64> {
    let d = patch.len();
    let capacity = columns.len().checked_div(d).unwrap_or(0);
    let mut h = vec![0.0; capacity];
    for (j, out) in h.iter_mut().enumerate().take(grown) {
        *out = shifted_cosine(&columns[j * d..(j + 1) * d], patch, missing);
    }
    h
}

/// Hidden activations from each child's `(winner, value)` pair.
pub(crate) fn hidden_from_winners(
    winners: &[(usize, f64)],
    columns: &[f64],
    block: usize,
    grown: usize,
) -> Vec<f64> {
    let column_len = block * winners.len();
    let capacity = columns.len().checked_div(column_len).unwrap_or(0);
    let mut h = vec![0.0; capacity];
    let norm = winners.iter().map(|&(_, v)| v * v).sum::<f64>().sqrt();
    let z = winners.len() as f64 * norm;
    if z <= 0.0 {
        return h;
    }
    for (j, out) in h.iter_mut().enumerate().take(grown) {
        let col = &columns[j * column_len..(j + 1) * column_len];
        let s: f64 = winners
            .iter()
            .enumerate()
            .map(|(slot, &(w, v))| col[slot * block + w] * v)
            .sum();
        *out = s / z;
    }
    h
}

/// Hidden-layer activations given every child's full activation vector.
///
/// Each child contributes only its maximum entry. All child vectors must have
/// the same length (the child capacity); `columns` is the stacked matrix.
pub fn ff_hidden(child_acts: &[&[f64]], columns: &[f64], grown: usize) -> Vec<f64> {
    let block = child_acts.first().map_or(0, |c| c.len());
    let winners: Vec<(usize, f64)> = child_acts.iter().map(|c| argmax(c)).collect();
    hidden_from_winners(&winners, columns, block, grown)
}

pub(crate) fn check_input(
    state: &ModelState,
    pattern: &Pattern,
    missing: Option<&MissingMask>,
) -> Result<()> {
    let expected = state.arch().input.len();
    if pattern.len() != expected {
        return Err(SqhnError::ShapeMismatch {
            expected,
            got: pattern.len(),
        });
    }
    if let Some(m) = missing {
        if m.len() != expected {
            return Err(SqhnError::ShapeMismatch {
                expected,
                got: m.len(),
            });
        }
    }
    Ok(())
}

/// Gather a bottom node's patch (and its missing flags) from the input.
pub(crate) fn gather_patch(
    state: &ModelState,
    node: usize,
    pattern: &Pattern,
    missing: Option<&MissingMask>,
) -> (Vec<f64>, Option<Vec<bool>>) {
    let idx = &state.topology().nodes[node].patch;
    let values = pattern.values();
    let patch = idx.iter().map(|&i| values[i]).collect();
    let mask = missing.map(|m| idx.iter().map(|&i| m.is_missing(i)).collect());
    (patch, mask)
}

/// Bottom-up pass over the whole tree using the current weights.
///
/// Fails if any node has no grown neurons.
pub fn ff_sweep(
    state: &ModelState,
    pattern: &Pattern,
    missing: Option<&MissingMask>,
) -> Result<SweepResult> {
    check_input(state, pattern, missing)?;
    state.require_trained()?;
    let topo = state.topology();
    let n = topo.node_count();
    let mut h: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut h_star = Vec::with_capacity(n);
    let mut max_val = Vec::with_capacity(n);
    for node in 0..n {
        let grown = state.grown(node);
        let acts = if topo.nodes[node].layer == 0 {
            let (patch, mask) = gather_patch(state, node, pattern, missing);
            ff_bottom(&patch, mask.as_deref(), state.weights(node), grown)
        } else {
            let winners: Vec<(usize, f64)> = topo.nodes[node]
                .children
                .iter()
                .map(|&c| (h_star[c], max_val[c]))
                .collect();
            hidden_from_winners(
                &winners,
                state.weights(node),
                topo.child_block_len(node),
                grown,
            )
        };
        let (w, v) = argmax(&acts[..grown]);
        h.push(acts);
        h_star.push(w);
        max_val.push(v);
    }
    Ok(SweepResult {
        acts: NodeActivations { h, h_star, max_val },
        used_fb: false,
    })
}

/// Top-down pass: the root takes its bottom-up argmax, every other hidden node
/// takes `argmax(lambda * h + (1 - lambda) * parent prediction)`.
pub fn fb_sweep(state: &ModelState, sweep: &SweepResult, lambda: f64) -> NodeActivations {
    let topo = state.topology();
    let ff = &sweep.acts;
    let n = topo.node_count();
    let mut acts = ff.clone();
    // Parents always have larger ids than their children.
    for node in (0..n.saturating_sub(1)).rev() {
        let parent = topo.nodes[node].parent.expect("non-root node has a parent");
        let slot = topo.nodes[node].slot;
        let pred = state.edge_column(parent, slot, acts.h_star[parent]);
        let grown = state.grown(node);
        let mut mixed = vec![0.0; ff.h[node].len()];
        for j in 0..grown {
            mixed[j] = lambda * ff.h[node][j] + (1.0 - lambda) * pred[j];
        }
        let (w, v) = argmax(&mixed[..grown]);
        acts.h[node] = mixed;
        acts.h_star[node] = w;
        acts.max_val[node] = v;
    }
    acts
}

/// Bottom-up-only assignment (no feedback, no growth), as used for learning
/// and recognition.
pub fn encode_ml(
    state: &ModelState,
    pattern: &Pattern,
    missing: Option<&MissingMask>,
) -> Result<NodeActivations> {
    Ok(ff_sweep(state, pattern, missing)?.acts)
}

/// Rebuild an image from the bottom-layer assignments.
pub fn reconstruct(state: &ModelState, h_star: &[usize]) -> Pattern {
    let topo = state.topology();
    let mut out = Pattern::filled(topo.input, 0.0);
    let values = out.values_mut();
    for node in topo.bottom_nodes() {
        let col = state.column(node, h_star[node]);
        for (&i, &v) in topo.nodes[node].patch.iter().zip(col) {
            values[i] = v;
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecallOptions {
    pub lambda: f64,
    /// Copy observed (non-missing) input values into the output.
    pub passthrough_observed: bool,
}

impl Default for RecallOptions {
    fn default() -> Self {
        Self {
            lambda: 0.5,
            passthrough_observed: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Recall {
    pub output: Pattern,
    pub acts: NodeActivations,
}

/// Full recall: bottom-up sweep, top-down sweep, then patch reconstruction.
pub fn recall_with(
    state: &ModelState,
    pattern: &Pattern,
    missing: Option<&MissingMask>,
    opts: &RecallOptions,
) -> Result<Recall> {
    let sweep = ff_sweep(state, pattern, missing)?;
    let acts = fb_sweep(state, &sweep, opts.lambda);
    let mut output = reconstruct(state, &acts.h_star);
    if opts.passthrough_observed {
        if let Some(mask) = missing {
            let input = pattern.values();
            for (i, v) in output.values_mut().iter_mut().enumerate() {
                if !mask.is_missing(i) {
                    *v = input[i];
                }
            }
        }
    }
    Ok(Recall { output, acts })
}

pub fn recall(
    state: &ModelState,
    pattern: &Pattern,
    missing: Option<&MissingMask>,
    lambda: f64,
) -> Result<Pattern> {
    Ok(recall_with(
        state,
        pattern,
        missing,
        &RecallOptions {
            lambda,
            passthrough_observed: false,
        },
    )?
    .output)
}
