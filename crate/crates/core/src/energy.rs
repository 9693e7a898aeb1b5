//! Energy of a full assignment: the mean conditional probability of every
//! non-root node given its parent's value.

use crate::error::{Result, SqhnError};
use crate::inference::{check_input, gather_patch, shifted_cosine};
use crate::pattern::{MissingMask, Pattern};
use crate::state::ModelState;

/// Mean over all visible patches and non-root hidden nodes of
/// `p(h*_l | h*_pa)`.
///
/// Visible terms are the shifted cosine likelihood of the clamped patch under
/// the parent's selected column; hidden terms are the parent's column entry
/// at the child's value. The root has no parent and contributes no term.
pub fn energy(
    state: &ModelState,
    h_star: &[usize],
    pattern: &Pattern,
    missing: Option<&MissingMask>,
) -> Result<f64> {
    check_input(state, pattern, missing)?;
    let topo = state.topology();
    if h_star.len() != topo.node_count() {
        return Err(SqhnError::ShapeMismatch {
            expected: topo.node_count(),
            got: h_star.len(),
        });
    }
    for (node, &index) in h_star.iter().enumerate() {
        let grown = state.grown(node);
        if index >= grown {
            return Err(SqhnError::Unassigned { node, index, grown });
        }
    }
    let mut total = 0.0;
    for node in topo.bottom_nodes() {
        let (patch, mask) = gather_patch(state, node, pattern, missing);
        total += shifted_cosine(state.column(node, h_star[node]), &patch, mask.as_deref());
    }
    for node in 0..topo.root() {
        let parent = topo.nodes[node].parent.expect("non-root");
        let pred = state.edge_column(parent, topo.nodes[node].slot, h_star[parent]);
        total += pred[h_star[node]];
    }
    Ok(total / topo.energy_terms() as f64)
}
