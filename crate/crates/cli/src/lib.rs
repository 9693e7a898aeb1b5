//! Experiment harness for `sqhn-core`: TOML configs in, JSON/CSV reports out.

pub mod config;
pub mod data;
pub mod error;
pub mod eval;
pub mod report;
pub mod sweep;
pub mod tasks;

pub use config::{ExperimentConfig, Task};
pub use error::{HarnessError, Result};
pub use report::{ExperimentReport, RunReport};
pub use tasks::run;

/// Desk-scale config templates shipped with the binary.
pub const TEMPLATES: &[(&str, &str)] = &[
    ("assoc-auto", include_str!("../configs/assoc_auto.toml")),
    ("assoc-hetero", include_str!("../configs/assoc_hetero.toml")),
    (
        "continual-oci",
        include_str!("../configs/continual_oci.toml"),
    ),
    (
        "continual-odi",
        include_str!("../configs/continual_odi.toml"),
    ),
    (
        "noisy-encoding",
        include_str!("../configs/noisy_encoding.toml"),
    ),
    ("recognition", include_str!("../configs/recognition.toml")),
    (
        "recognition-arch",
        include_str!("../configs/recognition_arch.toml"),
    ),
    (
        "corruption-arch",
        include_str!("../configs/corruption_arch.toml"),
    ),
    ("forgetting", include_str!("../configs/forgetting.toml")),
    ("ablation", include_str!("../configs/ablation.toml")),
];

pub fn template(name: &str) -> Option<&'static str> {
    TEMPLATES.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}
