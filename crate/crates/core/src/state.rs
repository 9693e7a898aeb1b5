//! Mutable learned state of a tree: weight columns, win counts, the root's
//! running activity averages, grown-neuron counts and the iteration counter.

use rand::Rng;

use crate::arch::{Architecture, Topology};
use crate::error::{Result, SqhnError};

/// Learned parameters and bookkeeping for one [`Architecture`].
///
/// Weights are stored per node as a column-major matrix with one column per
/// neuron. A hidden node's column is the concatenation of one block per child
/// (its prediction over that child's neurons); a bottom node's column is a
/// predicted pixel patch.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelState {
    arch: Architecture,
    topo: Topology,
    pub(crate) weights: Vec<Vec<f64>>,
    pub(crate) counts: Vec<Vec<u64>>,
    pub(crate) mu: Vec<f64>,
    pub(crate) grown: Vec<usize>,
    pub(crate) t: u64,
}

impl ModelState {
    /// Zero-initialised state: no neurons grown, all weights zero.
    pub fn build(arch: Architecture) -> Result<Self> {
        let topo = arch.topology()?;
        let n = topo.node_count();
        let weights = (0..n)
            .map(|id| vec![0.0; topo.column_len(id) * topo.capacity(id)])
            .collect();
        let counts = (0..n).map(|id| vec![0; topo.capacity(id)]).collect();
        let mu = vec![0.0; topo.capacity(topo.root())];
        Ok(Self {
            arch,
            topo,
            weights,
            counts,
            mu,
            grown: vec![0; n],
            t: 0,
        })
    }

    /// State with every neuron pre-allocated and randomly initialised, used
    /// by the no-growth ablation. Bottom columns are uniform in `[0, 1]`;
    /// hidden blocks are random distributions over the child's neurons.
    pub fn build_random<R: Rng + ?Sized>(arch: Architecture, rng: &mut R) -> Result<Self> {
        let mut state = Self::build(arch)?;
        for id in 0..state.topo.node_count() {
            let block = state.topo.child_block_len(id);
            let bottom = state.topo.nodes[id].layer == 0;
            for v in state.weights[id].chunks_mut(block) {
                for x in v.iter_mut() {
                    *x = rng.random::<f64>();
                }
                if !bottom {
                    let s: f64 = v.iter().sum();
                    v.iter_mut().for_each(|x| *x /= s);
                }
            }
            state.grown[id] = state.topo.capacity(id);
        }
        Ok(state)
    }

    pub(crate) fn from_parts(
        arch: Architecture,
        weights: Vec<Vec<f64>>,
        counts: Vec<Vec<u64>>,
        mu: Vec<f64>,
        grown: Vec<usize>,
        t: u64,
    ) -> Result<Self> {
        let topo = arch.topology()?;
        let n = topo.node_count();
        if weights.len() != n || counts.len() != n || grown.len() != n {
            return Err(SqhnError::Format(
                "per-node array count does not match architecture".into(),
            ));
        }
        for id in 0..n {
            let cap = topo.capacity(id);
            if weights[id].len() != topo.column_len(id) * cap
                || counts[id].len() != cap
                || grown[id] > cap
            {
                return Err(SqhnError::Format(format!(
                    "node {id} arrays do not match architecture"
                )));
            }
        }
        if mu.len() != topo.capacity(topo.root()) {
            return Err(SqhnError::Format(
                "root average table has the wrong length".into(),
            ));
        }
        Ok(Self {
            arch,
            topo,
            weights,
            counts,
            mu,
            grown,
            t,
        })
    }

    pub fn arch(&self) -> &Architecture {
        &self.arch
    }

    pub fn topology(&self) -> &Topology {
        &self.topo
    }

    pub fn node_count(&self) -> usize {
        self.topo.node_count()
    }

    pub fn root(&self) -> usize {
        self.topo.root()
    }

    /// Global training iteration counter.
    pub fn iteration(&self) -> u64 {
        self.t
    }

    pub fn grown(&self, node: usize) -> usize {
        self.grown[node]
    }

    pub fn grown_all(&self) -> &[usize] {
        &self.grown
    }

    pub fn counts(&self, node: usize) -> &[u64] {
        &self.counts[node]
    }

    /// Running average of winning root activities, per root neuron.
    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn mu_mut(&mut self) -> &mut [f64] {
        &mut self.mu
    }

    /// Full column-major weight matrix of `node`.
    pub fn weights(&self, node: usize) -> &[f64] {
        &self.weights[node]
    }

    pub fn column(&self, node: usize, neuron: usize) -> &[f64] {
        let len = self.topo.column_len(node);
        &self.weights[node][neuron * len..(neuron + 1) * len]
    }

    pub(crate) fn column_mut(&mut self, node: usize, neuron: usize) -> &mut [f64] {
        let len = self.topo.column_len(node);
        &mut self.weights[node][neuron * len..(neuron + 1) * len]
    }

    /// Prediction of `node`'s neuron `neuron` over the values of its child
    /// in `slot`: the edge matrix column.
    pub fn edge_column(&self, node: usize, slot: usize, neuron: usize) -> &[f64] {
        let block = self.topo.child_block_len(node);
        &self.column(node, neuron)[slot * block..(slot + 1) * block]
    }

    /// True once every node has at least one neuron.
    pub fn is_trained(&self) -> bool {
        self.grown.iter().all(|&g| g > 0)
    }

    pub(crate) fn require_trained(&self) -> Result<()> {
        match self.grown.iter().position(|&g| g == 0) {
            Some(node) => Err(SqhnError::Untrained { node }),
            None => Ok(()),
        }
    }

    /// Forget everything stored at the root and restart the iteration
    /// clock, keeping the lower layers. Used to reuse a pretrained feature
    /// hierarchy with an empty memory node.
    pub fn reset_root(&mut self) {
        let root = self.root();
        self.weights[root].iter_mut().for_each(|w| *w = 0.0);
        self.counts[root].iter_mut().for_each(|c| *c = 0);
        self.mu.iter_mut().for_each(|m| *m = 0.0);
        self.grown[root] = 0;
        self.t = 0;
    }

    /// Mean number of grown neurons per node, by layer.
    pub fn mean_grown_per_layer(&self) -> Vec<f64> {
        self.topo
            .layers
            .iter()
            .map(|l| l.nodes().map(|n| self.grown[n] as f64).sum::<f64>() / l.node_count() as f64)
            .collect()
    }
}
