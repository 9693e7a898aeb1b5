//! Static description of the tree: receptive-field tiling, node capacities and
//! the growth / feedback hyperparameters.
//!
//! Layer 0 is the bottom hidden layer; each of its nodes owns one
//! non-overlapping image patch (all channels). Every higher layer tiles the
//! node grid of the layer below with its own kernel. The last layer must
//! reduce to a single node, the root ("memory node").

use serde::{Deserialize, Serialize};

use crate::error::{Result, SqhnError};
use crate::pattern::InputShape;

/// One hidden layer of the tree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerSpec {
    /// Kernel height, in pixels for layer 0 and in child nodes above it.
    pub kernel_h: usize,
    /// Kernel width, in pixels for layer 0 and in child nodes above it.
    pub kernel_w: usize,
    /// Maximum number of neurons per node (J).
    pub capacity: usize,
    /// Per-layer override of the growth likelihood scale.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_grow: Option<f64>,
}

impl LayerSpec {
    pub fn new(kernel_h: usize, kernel_w: usize, capacity: usize) -> Self {
        Self {
            kernel_h,
            kernel_w,
            capacity,
            gamma_grow: None,
        }
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma_grow = Some(gamma);
        self
    }
}

fn default_alpha() -> f64 {
    1.0e9
}

fn default_gamma() -> f64 {
    1.0
}

fn default_lambda() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Architecture {
    pub input: InputShape,
    pub layers: Vec<LayerSpec>,
    /// Growth prior strength; larger values keep growing new neurons for longer.
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// Growth likelihood scale in `(0, 1]`.
    #[serde(default = "default_gamma")]
    pub gamma_grow: f64,
    /// Weight of the bottom-up signal when mixing with top-down predictions.
    #[serde(default = "default_lambda")]
    pub lambda_fb: f64,
}

impl Architecture {
    pub fn new(input: InputShape, layers: Vec<LayerSpec>) -> Self {
        Self {
            input,
            layers,
            alpha: default_alpha(),
            gamma_grow: default_gamma(),
            lambda_fb: default_lambda(),
        }
    }

    /// A single hidden node whose receptive field is the whole image.
    pub fn single_layer(input: InputShape, capacity: usize) -> Self {
        Self::new(
            input,
            vec![LayerSpec::new(input.height, input.width, capacity)],
        )
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma_grow = gamma;
        self
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda_fb = lambda;
        self
    }

    /// Growth likelihood scale for `layer`, honouring per-layer overrides.
    pub fn gamma_for(&self, layer: usize) -> f64 {
        self.layers[layer].gamma_grow.unwrap_or(self.gamma_grow)
    }

    pub fn validate(&self) -> Result<()> {
        self.topology().map(|_| ())
    }

    /// Derive node indexing and connectivity, validating the tiling.
    pub fn topology(&self) -> Result<Topology> {
        Topology::build(self)
    }
}

/// Derived per-layer geometry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayerInfo {
    pub grid_h: usize,
    pub grid_w: usize,
    /// Id of the first node of this layer.
    pub first_node: usize,
    pub capacity: usize,
    /// Number of children per node (pixels count as one visible child).
    pub fan_in: usize,
    /// Length of one weight column of a node in this layer.
    pub column_len: usize,
}

impl LayerInfo {
    pub fn node_count(&self) -> usize {
        self.grid_h * self.grid_w
    }

    pub fn nodes(&self) -> std::ops::Range<usize> {
        self.first_node..self.first_node + self.node_count()
    }
}

/// Derived per-node connectivity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeInfo {
    pub layer: usize,
    pub parent: Option<usize>,
    /// Child node ids in kernel row-major order; empty for bottom-layer nodes.
    pub children: Vec<usize>,
    /// Position of this node within its parent's children.
    pub slot: usize,
    /// For bottom-layer nodes, flat input indices of the patch in patch order
    /// (channel, row, column).
    pub patch: Vec<usize>,
}

/// Node ids run layer by layer from the bottom, row-major within a layer; the
/// root is the last node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Topology {
    pub input: InputShape,
    pub layers: Vec<LayerInfo>,
    pub nodes: Vec<NodeInfo>,
}

impl Topology {
    fn build(arch: &Architecture) -> Result<Self> {
        let input = arch.input;
        if input.is_empty() {
            return Err(SqhnError::InvalidArchitecture(
                "input shape has zero size".into(),
            ));
        }
        if arch.layers.is_empty() {
            return Err(SqhnError::InvalidArchitecture(
                "at least one hidden layer is required".into(),
            ));
        }
        if arch.alpha.is_nan() || arch.alpha <= 0.0 {
            return Err(SqhnError::InvalidArchitecture(format!(
                "alpha must be > 0, got {}",
                arch.alpha
            )));
        }
        if !(0.0..=1.0).contains(&arch.lambda_fb) {
            return Err(SqhnError::InvalidArchitecture(format!(
                "lambda_fb must lie in [0, 1], got {}",
                arch.lambda_fb
            )));
        }
        for l in 0..arch.layers.len() {
            let g = arch.gamma_for(l);
            if !(g > 0.0 && g <= 1.0) {
                return Err(SqhnError::InvalidArchitecture(format!(
                    "gamma_grow for layer {l} must lie in (0, 1], got {g}"
                )));
            }
        }

        let mut layers = Vec::with_capacity(arch.layers.len());
        let (mut below_h, mut below_w) = (input.height, input.width);
        let mut first_node = 0;
        for (l, spec) in arch.layers.iter().enumerate() {
            if spec.kernel_h == 0 || spec.kernel_w == 0 {
                return Err(SqhnError::InvalidArchitecture(format!(
                    "layer {l} has an empty kernel"
                )));
            }
            if spec.capacity == 0 {
                return Err(SqhnError::InvalidArchitecture(format!(
                    "layer {l} has zero capacity"
                )));
            }
            if below_h % spec.kernel_h != 0 || below_w % spec.kernel_w != 0 {
                return Err(SqhnError::InvalidArchitecture(format!(
                    "layer {l} kernel {}x{} does not tile a {below_h}x{below_w} grid",
                    spec.kernel_h, spec.kernel_w
                )));
            }
            let fan_in = spec.kernel_h * spec.kernel_w;
            let column_len = if l == 0 {
                input.channels * fan_in
            } else {
                fan_in * arch.layers[l - 1].capacity
            };
            let info = LayerInfo {
                grid_h: below_h / spec.kernel_h,
                grid_w: below_w / spec.kernel_w,
                first_node,
                capacity: spec.capacity,
                fan_in,
                column_len,
            };
            first_node += info.node_count();
            below_h = info.grid_h;
            below_w = info.grid_w;
            layers.push(info);
        }
        let top = layers.last().expect("non-empty");
        if top.node_count() != 1 {
            return Err(SqhnError::InvalidArchitecture(format!(
                "top layer has a {}x{} node grid; it must reduce to a single root",
                top.grid_h, top.grid_w
            )));
        }

        let total = first_node;
        let mut nodes: Vec<NodeInfo> = (0..total)
            .map(|_| NodeInfo {
                layer: 0,
                parent: None,
                children: Vec::new(),
                slot: 0,
                patch: Vec::new(),
            })
            .collect();
        for (l, info) in layers.iter().enumerate() {
            let spec = &arch.layers[l];
            for gy in 0..info.grid_h {
                for gx in 0..info.grid_w {
                    let id = info.first_node + gy * info.grid_w + gx;
                    nodes[id].layer = l;
                    if l == 0 {
                        let mut patch = Vec::with_capacity(info.column_len);
                        for c in 0..input.channels {
                            for ky in 0..spec.kernel_h {
                                for kx in 0..spec.kernel_w {
                                    patch.push(input.index(
                                        c,
                                        gy * spec.kernel_h + ky,
                                        gx * spec.kernel_w + kx,
                                    ));
                                }
                            }
                        }
                        nodes[id].patch = patch;
                    } else {
                        let below = &layers[l - 1];
                        let mut children = Vec::with_capacity(info.fan_in);
                        for ky in 0..spec.kernel_h {
                            for kx in 0..spec.kernel_w {
                                let cy = gy * spec.kernel_h + ky;
                                let cx = gx * spec.kernel_w + kx;
                                children.push(below.first_node + cy * below.grid_w + cx);
                            }
                        }
                        for (slot, &child) in children.iter().enumerate() {
                            nodes[child].parent = Some(id);
                            nodes[child].slot = slot;
                        }
                        nodes[id].children = children;
                    }
                }
            }
        }
        Ok(Self {
            input,
            layers,
            nodes,
        })
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn root(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn bottom_nodes(&self) -> std::ops::Range<usize> {
        self.layers[0].nodes()
    }

    pub fn layer_of(&self, node: usize) -> &LayerInfo {
        &self.layers[self.nodes[node].layer]
    }

    pub fn capacity(&self, node: usize) -> usize {
        self.layer_of(node).capacity
    }

    pub fn column_len(&self, node: usize) -> usize {
        self.layer_of(node).column_len
    }

    /// Length of one child's block within a column of `node`.
    pub fn child_block_len(&self, node: usize) -> usize {
        let layer = self.nodes[node].layer;
        if layer == 0 {
            self.layers[0].column_len
        } else {
            self.layers[layer - 1].capacity
        }
    }

    /// Number of conditional terms in the energy: every visible patch plus
    /// every hidden node except the root.
    pub fn energy_terms(&self) -> usize {
        self.layers[0].node_count() + self.node_count() - 1
    }
}
