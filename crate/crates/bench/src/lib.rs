//! Shared fixtures for the benchmarks.

use sqhn_core::datasets::{generate, SynthKind, SynthSpec};
use sqhn_core::{
    train_step, Architecture, InputShape, LayerSpec, LearnConfig, ModelState, Pattern,
};

pub const SHAPE: InputShape = InputShape {
    channels: 3,
    height: 16,
    width: 16,
};

pub fn patterns(n: usize, seed: u64) -> Vec<Pattern> {
    generate(&SynthSpec {
        n,
        shape: SHAPE,
        kind: SynthKind::Random { binary: false },
        seed,
    })
    .expect("valid synthetic spec")
    .patterns()
}

/// One layer, full receptive field.
pub fn l1(capacity: usize) -> Architecture {
    Architecture::single_layer(SHAPE, capacity)
}

/// Three layers of 4x4, 2x2 and 2x2 kernels.
pub fn l3(capacity: usize) -> Architecture {
    Architecture::new(
        SHAPE,
        vec![
            LayerSpec::new(4, 4, capacity),
            LayerSpec::new(2, 2, capacity),
            LayerSpec::new(2, 2, capacity),
        ],
    )
}

pub fn trained(arch: Architecture, data: &[Pattern]) -> ModelState {
    let mut state = ModelState::build(arch).expect("valid architecture");
    let cfg = LearnConfig::default();
    for p in data {
        train_step(&mut state, p, &cfg).expect("valid pattern");
    }
    state
}
