//! Online learning: bottom-up max-likelihood assignment with neuron growth,
//! followed by a local running-mean update of one column per edge.

use serde::{Deserialize, Serialize};

use crate::energy::energy;
use crate::error::{Result, SqhnError};
use crate::inference::{argmax, check_input, ff_bottom, gather_patch, hidden_from_winners};
use crate::pattern::Pattern;
use crate::recognition::update_mu;
use crate::state::ModelState;

/// Growth threshold `gamma * alpha / (t + 1 + alpha)`.
pub fn growth_threshold(t: u64, alpha: f64, gamma: f64) -> f64 {
    gamma * alpha / (t as f64 + 1.0 + alpha)
}

/// Shorter form `alpha / (t + alpha)` without the likelihood scale.
pub fn growth_threshold_short(t: u64, alpha: f64) -> f64 {
    alpha / (t as f64 + alpha)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ThresholdForm {
    /// `gamma * alpha / (t + 1 + alpha)`
    #[default]
    Scaled,
    /// `alpha / (t + alpha)`
    Short,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum GrowthMode {
    /// Decaying threshold driven by the global iteration count.
    #[default]
    DirichletDecay,
    /// Fixed threshold (ablation).
    Constant { threshold: f64 },
    /// Never grow; the state must be pre-allocated (ablation).
    Disabled,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum LrMode {
    /// Step `1 / (c + 1)` where `c` counts earlier wins: an exact running mean.
    #[default]
    CountDecay,
    /// Fixed step for every update, including a new column's first write (ablation).
    Constant { rate: f64 },
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LearnConfig {
    #[serde(default)]
    pub growth: GrowthMode,
    #[serde(default)]
    pub threshold_form: ThresholdForm,
    #[serde(default)]
    pub lr: LrMode,
    /// When false, existing columns are never updated (grow-only ablation).
    #[serde(default = "yes")]
    pub averaging: bool,
    /// Reuse the first sample's assignments for later samples of the same item.
    #[serde(default)]
    pub fixed_latent: bool,
    /// Freeze every edge except those into the root; lower layers stop growing.
    #[serde(default)]
    pub update_root_only: bool,
}

impl Default for LearnConfig {
    fn default() -> Self {
        Self {
            growth: GrowthMode::default(),
            threshold_form: ThresholdForm::default(),
            lr: LrMode::default(),
            averaging: true,
            fixed_latent: false,
            update_root_only: false,
        }
    }
}

impl LearnConfig {
    pub fn validate(&self) -> Result<()> {
        if let GrowthMode::Constant { threshold } = self.growth {
            if !(0.0..=1.0).contains(&threshold) {
                return Err(SqhnError::InvalidParameter(format!(
                    "constant growth threshold must lie in [0, 1], got {threshold}"
                )));
            }
        }
        if let LrMode::Constant { rate } = self.lr {
            if !(rate > 0.0 && rate <= 1.0) {
                return Err(SqhnError::InvalidParameter(format!(
                    "constant rate must lie in (0, 1], got {rate}"
                )));
            }
        }
        Ok(())
    }

    /// Growth threshold for a node in `layer` at iteration `t`.
    pub fn threshold(&self, state: &ModelState, layer: usize, t: u64) -> f64 {
        let arch = state.arch();
        match self.growth {
            GrowthMode::DirichletDecay => match self.threshold_form {
                ThresholdForm::Scaled => growth_threshold(t, arch.alpha, arch.gamma_for(layer)),
                ThresholdForm::Short => growth_threshold_short(t, arch.alpha),
            },
            GrowthMode::Constant { threshold } => threshold,
            GrowthMode::Disabled => 0.0,
        }
    }

    fn step_size(&self, count: u64) -> f64 {
        match self.lr {
            LrMode::CountDecay => 1.0 / (count as f64 + 1.0),
            LrMode::Constant { rate } => rate,
        }
    }
}

/// What one training iteration did.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepSummary {
    /// Iteration index (value of the global counter before the step).
    pub t: u64,
    pub assignments: Vec<usize>,
    /// Nodes that grew a neuron this step.
    pub grew: Vec<bool>,
    /// Nodes whose best activation was below threshold but had no capacity left.
    pub saturated: Vec<bool>,
    /// Energy of the chosen assignment before the weight update.
    pub pre_energy: f64,
    /// Activity recorded for the root winner's running average.
    pub root_value: f64,
    /// Assignments were reused from an earlier sample of the same item.
    pub reused_latent: bool,
}

impl StepSummary {
    pub fn grew_count(&self) -> usize {
        self.grew.iter().filter(|&&g| g).count()
    }
}

struct Plan {
    h_star: Vec<usize>,
    grew: Vec<bool>,
    saturated: Vec<bool>,
    root_value: f64,
}

fn check_unit_range(pattern: &Pattern) -> Result<()> {
    if let Some(v) = pattern.values().iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(SqhnError::InvalidParameter(format!(
            "pattern value {v} outside [0, 1]"
        )));
    }
    Ok(())
}

/// Bottom-up assignment with growth. When `forced` is given, its assignments
/// are used verbatim and nothing grows.
fn plan(
    state: &ModelState,
    pattern: &Pattern,
    cfg: &LearnConfig,
    forced: Option<&[usize]>,
) -> Result<Plan> {
    let topo = state.topology();
    let n = topo.node_count();
    let root = topo.root();
    let t = state.iteration();
    let mut h_star = vec![0; n];
    let mut upward = vec![0.0; n];
    let mut grew = vec![false; n];
    let mut saturated = vec![false; n];
    let mut root_value = 0.0;
    for node in 0..n {
        let info = &topo.nodes[node];
        let grown = state.grown(node);
        let acts = if info.layer == 0 {
            let (patch, _) = gather_patch(state, node, pattern, None);
            ff_bottom(&patch, None, state.weights(node), grown)
        } else {
            let winners: Vec<(usize, f64)> = info
                .children
                .iter()
                .map(|&c| (h_star[c], upward[c]))
                .collect();
            hidden_from_winners(
                &winners,
                state.weights(node),
                topo.child_block_len(node),
                grown,
            )
        };

        let (winner, value, recorded) = if let Some(forced) = forced {
            let w = forced[node];
            if w >= grown {
                return Err(SqhnError::Unassigned {
                    node,
                    index: w,
                    grown,
                });
            }
            (w, acts[w], acts[w])
        } else {
            let (w, v) = argmax(&acts[..grown]);
            let threshold = cfg.threshold(state, info.layer, t);
            let may_grow = !matches!(cfg.growth, GrowthMode::Disabled)
                && !(cfg.update_root_only && node != root);
            let below = grown == 0 || v < threshold;
            if may_grow && below && grown < topo.capacity(node) {
                // A fresh neuron represents its input exactly once updated.
                grew[node] = true;
                (grown, 1.0, threshold)
            } else if grown == 0 {
                return Err(SqhnError::GrowthDisabled { node });
            } else {
                saturated[node] = may_grow && below;
                (w, v, v)
            }
        };
        h_star[node] = winner;
        upward[node] = value;
        if node == root {
            root_value = recorded;
        }
    }
    Ok(Plan {
        h_star,
        grew,
        saturated,
        root_value,
    })
}

fn apply(
    state: &mut ModelState,
    pattern: &Pattern,
    cfg: &LearnConfig,
    plan: Plan,
    reused: bool,
) -> Result<StepSummary> {
    let n = state.node_count();
    let root = state.root();
    for node in 0..n {
        if plan.grew[node] {
            state.grown[node] += 1;
        }
    }
    let pre_energy = energy(state, &plan.h_star, pattern, None)?;

    for node in 0..n {
        let j = plan.h_star[node];
        let frozen = cfg.update_root_only && node != root;
        let skip_average = !cfg.averaging && !plan.grew[node];
        if !frozen && !skip_average {
            let step = cfg.step_size(state.counts[node][j]);
            let topo = state.topology();
            if topo.nodes[node].layer == 0 {
                let (patch, _) = gather_patch(state, node, pattern, None);
                for (m, x) in state.column_mut(node, j).iter_mut().zip(patch) {
                    *m += step * (x - *m);
                }
            } else {
                let block = topo.child_block_len(node);
                let targets: Vec<usize> = topo.nodes[node]
                    .children
                    .iter()
                    .map(|&c| plan.h_star[c])
                    .collect();
                let col = state.column_mut(node, j);
                for (slot, target) in targets.into_iter().enumerate() {
                    for (k, m) in col[slot * block..(slot + 1) * block].iter_mut().enumerate() {
                        let x = if k == target { 1.0 } else { 0.0 };
                        *m += step * (x - *m);
                    }
                }
            }
        }
        state.counts[node][j] += 1;
    }
    let j = plan.h_star[root];
    let c = state.counts[root][j];
    state.mu[j] = update_mu(state.mu[j], c, plan.root_value);

    let t = state.t;
    state.t += 1;
    Ok(StepSummary {
        t,
        assignments: plan.h_star,
        grew: plan.grew,
        saturated: plan.saturated,
        pre_energy,
        root_value: plan.root_value,
        reused_latent: reused,
    })
}

/// One online training iteration on a single pattern.
pub fn train_step(
    state: &mut ModelState,
    pattern: &Pattern,
    cfg: &LearnConfig,
) -> Result<StepSummary> {
    check_input(state, pattern, None)?;
    check_unit_range(pattern)?;
    let plan = plan(state, pattern, cfg, None)?;
    apply(state, pattern, cfg, plan, false)
}

/// Train on an ordered stream, one pattern per iteration, calling `hook`
/// after every step.
pub fn train_stream<'a, I, F>(
    state: &mut ModelState,
    stream: I,
    cfg: &LearnConfig,
    mut hook: F,
) -> Result<Vec<StepSummary>>
where
    I: IntoIterator<Item = &'a Pattern>,
    F: FnMut(&ModelState, &StepSummary),
{
    cfg.validate()?;
    let mut log = Vec::new();
    for pattern in stream {
        let summary = train_step(state, pattern, cfg)?;
        hook(state, &summary);
        log.push(summary);
    }
    Ok(log)
}

/// Stateful trainer that supports latching the latent code across noisy
/// samples of the same item.
#[derive(Debug, Clone)]
pub struct Trainer {
    cfg: LearnConfig,
    latch: Option<(u64, Vec<usize>)>,
}

impl Trainer {
    pub fn new(cfg: LearnConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self { cfg, latch: None })
    }

    pub fn config(&self) -> &LearnConfig {
        &self.cfg
    }

    /// Train on one sample. With `fixed_latent`, the first sample of `item`
    /// runs normal inference and later samples of the same item reuse its
    /// assignments.
    pub fn step(
        &mut self,
        state: &mut ModelState,
        pattern: &Pattern,
        item: Option<u64>,
    ) -> Result<StepSummary> {
        check_input(state, pattern, None)?;
        check_unit_range(pattern)?;
        let pinned = match (&self.latch, item) {
            (Some((id, h)), Some(item)) if self.cfg.fixed_latent && *id == item => Some(h.clone()),
            _ => None,
        };
        let reused = pinned.is_some();
        let plan = plan(state, pattern, &self.cfg, pinned.as_deref())?;
        let summary = apply(state, pattern, &self.cfg, plan, reused)?;
        if self.cfg.fixed_latent && !reused {
            self.latch = item.map(|id| (id, summary.assignments.clone()));
        }
        Ok(summary)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arch::{Architecture, LayerSpec};
    use crate::pattern::InputShape;

    fn l1(capacity: usize) -> ModelState {
        ModelState::build(Architecture::single_layer(
            InputShape::new(1, 2, 2),
            capacity,
        ))
        .unwrap()
    }

    fn pat(v: [f64; 4]) -> Pattern {
        Pattern::new(InputShape::new(1, 2, 2), v.to_vec()).unwrap()
    }

    #[test]
    fn threshold_values() {
        assert!((growth_threshold(0, 10.0, 1.0) - 10.0 / 11.0).abs() < 1e-15);
        assert!(growth_threshold(u64::MAX / 2, 10.0, 1.0) < 1e-15);
        let big = growth_threshold(5, 1e9, 0.8);
        assert!((big - 0.8).abs() < 1e-8);
        assert!((growth_threshold_short(0, 10.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn first_pattern_grows_and_copies() {
        let mut s = l1(4);
        let p = pat([0.9, 0.1, 0.6, 0.2]);
        let sum = train_step(&mut s, &p, &LearnConfig::default()).unwrap();
        assert_eq!(sum.assignments, vec![0]);
        assert_eq!(sum.grew, vec![true]);
        assert_eq!(s.grown(0), 1);
        assert_eq!(s.column(0, 0), p.values());
        assert_eq!(s.counts(0)[0], 1);
        assert_eq!(s.iteration(), 1);
    }

    #[test]
    fn two_patches_on_one_neuron_average() {
        let mut s = l1(1);
        let a = pat([0.9, 0.1, 0.6, 0.2]);
        let b = pat([0.3, 0.5, 0.0, 1.0]);
        let cfg = LearnConfig::default();
        train_step(&mut s, &a, &cfg).unwrap();
        let sum = train_step(&mut s, &b, &cfg).unwrap();
        assert_eq!(sum.saturated, vec![true]);
        for ((m, x), y) in s.column(0, 0).iter().zip(a.values()).zip(b.values()) {
            assert!((m - (x + y) / 2.0).abs() < 1e-15);
        }
    }

    #[test]
    fn disabled_growth_on_empty_state_errors() {
        let mut s = l1(2);
        let cfg = LearnConfig {
            growth: GrowthMode::Disabled,
            ..Default::default()
        };
        assert!(matches!(
            train_step(&mut s, &pat([0.0; 4]), &cfg),
            Err(SqhnError::GrowthDisabled { node: 0 })
        ));
    }

    #[test]
    fn rejects_out_of_range_pattern() {
        let mut s = l1(2);
        assert!(train_step(&mut s, &pat([1.5, 0.0, 0.0, 0.0]), &LearnConfig::default()).is_err());
    }

    #[test]
    fn constant_rate_applies_to_first_write() {
        let mut s = l1(1);
        let cfg = LearnConfig {
            lr: LrMode::Constant { rate: 0.25 },
            ..Default::default()
        };
        let a = pat([1.0, 0.0, 1.0, 0.0]);
        let b = pat([0.0, 0.0, 0.0, 0.0]);
        train_step(&mut s, &a, &cfg).unwrap();
        train_step(&mut s, &b, &cfg).unwrap();
        assert_eq!(s.column(0, 0), &[0.1875, 0.0, 0.1875, 0.0]);
    }

    #[test]
    fn grow_only_ablation_never_changes_existing_columns() {
        let mut s = l1(1);
        let cfg = LearnConfig {
            averaging: false,
            ..Default::default()
        };
        let a = pat([1.0, 0.0, 1.0, 0.0]);
        train_step(&mut s, &a, &cfg).unwrap();
        train_step(&mut s, &pat([0.2, 0.4, 0.6, 0.8]), &cfg).unwrap();
        assert_eq!(s.column(0, 0), a.values());
        assert_eq!(s.counts(0)[0], 2);
    }

    #[test]
    fn latch_reuses_first_assignment() {
        let mut s = l1(4);
        let cfg = LearnConfig {
            fixed_latent: true,
            ..Default::default()
        };
        let mut tr = Trainer::new(cfg).unwrap();
        let a = pat([1.0, 0.0, 1.0, 0.0]);
        let b = pat([0.0, 1.0, 0.0, 1.0]);
        let first = tr.step(&mut s, &a, Some(7)).unwrap();
        let second = tr.step(&mut s, &b, Some(7)).unwrap();
        assert!(!first.reused_latent);
        assert!(second.reused_latent);
        assert_eq!(second.assignments, first.assignments);
        assert_eq!(s.grown(0), 1);
        // different item grows
        let third = tr.step(&mut s, &b, Some(8)).unwrap();
        assert!(!third.reused_latent);
        assert_eq!(s.grown(0), 2);
    }

    #[test]
    fn hidden_columns_are_one_hot_means() {
        let arch = Architecture::new(
            InputShape::new(1, 2, 2),
            vec![LayerSpec::new(1, 1, 2), LayerSpec::new(2, 2, 1)],
        );
        let mut s = ModelState::build(arch).unwrap();
        let cfg = LearnConfig::default();
        train_step(&mut s, &pat([1.0, 0.0, 1.0, 0.0]), &cfg).unwrap();
        train_step(&mut s, &pat([0.0, 1.0, 1.0, 0.0]), &cfg).unwrap();
        let root = s.root();
        assert_eq!(s.grown(root), 1);
        for slot in 0..4 {
            let block = s.edge_column(root, slot, 0);
            assert!((block.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(block.iter().all(|&p| (0.0..=1.0).contains(&p)));
        }
    }
}
