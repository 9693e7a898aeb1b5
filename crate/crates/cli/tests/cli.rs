use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use sqhn_harness::{ExperimentConfig, ExperimentReport, TEMPLATES};

fn sqhn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sqhn"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> Vec<u8> {
    let out = sqhn(args);
    assert!(
        out.status.success(),
        "sqhn {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out.stdout
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

const SMALL_CONTINUAL: &str = r#"
task = "online-continual"
seed = 3
[model]
input = { channels = 1, height = 4, width = 4 }
layers = [{ kernel_h = 2, kernel_w = 2, capacity = 8 }, { kernel_h = 2, kernel_w = 2, capacity = 16 }]
[data]
source = "synth"
n = 24
synth = { kind = "clustered", classes = 3, spread = 0.4 }
[stream]
order = "oci"
compare = ["iid"]
[eval]
every = 5
corruption = { kind = "white-noise", variance = 0.1 }
"#;

#[test]
fn missing_config_is_a_usage_error() {
    let out = sqhn(&["bench"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--config"));
}

#[test]
fn unreadable_or_invalid_config_fails() {
    let dir = tempfile::tempdir().unwrap();
    assert!(!sqhn(&[
        "bench",
        "--config",
        dir.path().join("absent.toml").to_str().unwrap()
    ])
    .status
    .success());

    let bad = write(
        dir.path(),
        "bad.toml",
        "task = \"assoc-auto\"\n[model]\ninput = { channels = 1, height = 4, width = 4 }\n\
         layers = [{ kernel_h = 4, kernel_w = 4, capacity = 4 }]\n[data]\nsource = \"synth\"\nn = 4\n\
         [learn]\nfixed_latent = true\n",
    );
    let out = sqhn(&["bench", "--config", bad.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("noisy-encoding"));
}

#[test]
fn same_seed_gives_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", SMALL_CONTINUAL);
    let args = [
        "bench",
        "--config",
        cfg.to_str().unwrap(),
        "--seed",
        "11",
        "--no-timing",
    ];
    let a = ok(&args);
    assert_eq!(a, ok(&args));
    let other = ok(&[
        "bench",
        "--config",
        cfg.to_str().unwrap(),
        "--seed",
        "12",
        "--no-timing",
    ]);
    assert_ne!(a, other);
}

#[test]
fn csv_has_one_row_per_eval_point() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", SMALL_CONTINUAL);
    let text = String::from_utf8(ok(&[
        "bench",
        "--config",
        cfg.to_str().unwrap(),
        "--format",
        "csv",
    ]))
    .unwrap();
    let mut lines = text.lines();
    assert!(lines
        .next()
        .unwrap()
        .starts_with("run,iteration,recall_mse"));
    let rows: Vec<&str> = lines.collect();
    // 24 items, every 5 steps plus the final step: 5 points per order.
    assert_eq!(rows.len(), 10);
    assert_eq!(rows.iter().filter(|r| r.starts_with("oci,")).count(), 5);
    assert!(rows[4].starts_with("oci,24,"));
}

#[test]
fn json_report_echoes_resolved_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", SMALL_CONTINUAL);
    let out = dir.path().join("r.json");
    ok(&[
        "bench",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    let report: ExperimentReport =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(report.config.seed, 3);
    assert_eq!(report.config.eval.gamma_recall, 0.01);
    assert_eq!(report.runs.len(), 2);
    assert_eq!(report.runs[0].growth_per_layer.len(), 2);
    assert!(report.runs.iter().all(|r| r.wall_clock_ms.is_some()));
    let s = report.summary["s_mse_oci_vs_iid"];
    assert!(
        (s - (report.runs[0].cumulative_mse - report.runs[1].cumulative_mse).abs()).abs() < 1e-15
    );
}

#[test]
fn every_template_parses_and_is_listed() {
    let listed = String::from_utf8(ok(&["template"])).unwrap();
    for (name, text) in TEMPLATES {
        let cfg = ExperimentConfig::from_toml(text).unwrap_or_else(|e| panic!("{name}: {e}"));
        cfg.validate().unwrap_or_else(|e| panic!("{name}: {e}"));
        assert!(listed.lines().any(|l| l == *name));
        assert_eq!(String::from_utf8(ok(&["template", name])).unwrap(), *text);
    }
    assert!(!sqhn(&["template", "nope"]).status.success());
}

#[test]
fn assoc_auto_at_capacity_is_perfect() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "a.toml",
        "task = \"assoc-auto\"\n[model]\ninput = { channels = 1, height = 8, width = 8 }\n\
         layers = [{ kernel_h = 8, kernel_w = 8, capacity = 64 }]\n[data]\nsource = \"synth\"\nn = 64\n",
    );
    let report: ExperimentReport =
        serde_json::from_slice(&ok(&["bench", "--config", cfg.to_str().unwrap()])).unwrap();
    assert_eq!(report.summary["sqhn_final_accuracy"], 1.0);
    assert_eq!(report.summary["sqhn_final_mse"], 0.0);
}

#[test]
fn theory_verify_embeds_curves() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "t.toml",
        "task = \"theory-verify\"\n[model]\ninput = { channels = 1, height = 4, width = 4 }\n\
         layers = [{ kernel_h = 4, kernel_w = 4, capacity = 10 }]\n[data]\nsource = \"synth\"\nn = 40\n\
         [theory]\ncapacity = 10\ntrials = 50\n",
    );
    let report: ExperimentReport =
        serde_json::from_slice(&ok(&["theory-verify", "--config", cfg.to_str().unwrap()])).unwrap();
    let curve = report.forgetting.unwrap();
    assert_eq!(curve.mean.len(), 31);
    assert_eq!(curve.theory.len(), 31);
    assert_eq!(curve.mean[0], 10.0);
    // One end-to-end evaluation per step from J to J + 3J.
    assert_eq!(report.runs[0].series.len(), 31);

    // A theory config is rejected by the ablate subcommand.
    assert!(!sqhn(&["ablate", "--config", cfg.to_str().unwrap()])
        .status
        .success());
}

#[test]
fn ablation_without_growth_cannot_store() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "ab.toml",
        "task = \"ablate\"\n[model]\ninput = { channels = 1, height = 8, width = 8 }\n\
         layers = [{ kernel_h = 8, kernel_w = 8, capacity = 32 }]\n[data]\nsource = \"synth\"\nn = 64\n\
         synth = { kind = \"clustered\", classes = 8, spread = 0.5 }\n\
         [ablate]\nvariants = [\"full\", \"no-grw\"]\n",
    );
    let report: ExperimentReport =
        serde_json::from_slice(&ok(&["ablate", "--config", cfg.to_str().unwrap()])).unwrap();
    let s = &report.summary;
    assert!(s["cumulative_accuracy_-grw"] < 0.05);
    assert!(s["cumulative_accuracy_full"] > s["cumulative_accuracy_-grw"]);
    assert!(s["cumulative_mse_full"] < s["cumulative_mse_-grw"]);
}

#[test]
fn sweep_runs_each_grid_point() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", SMALL_CONTINUAL);
    let out = ok(&[
        "sweep",
        "--config",
        cfg.to_str().unwrap(),
        "--set",
        "model.layers.1.capacity=4,16",
        "--set",
        "eval.every=6",
    ]);
    let points: serde_json::Value = serde_json::from_slice(&out).unwrap();
    let points = points.as_array().unwrap();
    assert_eq!(points.len(), 2);
    assert_eq!(points[0]["overrides"]["model.layers.1.capacity"], "4");
    assert!(points[0]["summary"]["cumulative_mse_oci"].as_f64().unwrap() > 0.0);
}

#[test]
fn data_train_recall_judge_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let p = |n: &str| dir.path().join(n).to_str().unwrap().to_string();
    ok(&[
        "gen-data",
        "--kind",
        "random",
        "--n",
        "16",
        "--shape",
        "1,4,4",
        "--seed",
        "5",
        "--out",
        &p("train.sqd"),
    ]);
    ok(&[
        "gen-data",
        "--kind",
        "random",
        "--n",
        "16",
        "--shape",
        "1,4,4",
        "--seed",
        "6",
        "--out",
        &p("new.sqd"),
    ]);
    let cfg = write(
        dir.path(),
        "m.toml",
        "task = \"assoc-auto\"\n[model]\ninput = { channels = 1, height = 4, width = 4 }\n\
         layers = [{ kernel_h = 4, kernel_w = 4, capacity = 16 }]\n[data]\nsource = \"file\"\npath = \"train.sqd\"\n",
    );
    ok(&[
        "train",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        &p("model.ckpt"),
    ]);

    let rows: Vec<serde_json::Value> = serde_json::from_slice(&ok(&[
        "recall",
        "--checkpoint",
        &p("model.ckpt"),
        "--data",
        &p("train.sqd"),
    ]))
    .unwrap();
    assert_eq!(rows.len(), 16);
    assert!(rows.iter().all(|r| r["mse"].as_f64().unwrap() < 1e-12));

    let masked = ok(&[
        "recall",
        "--checkpoint",
        &p("model.ckpt"),
        "--data",
        &p("train.sqd"),
        "--corruption",
        "right-mask:0.5",
        "--format",
        "csv",
        "--out",
        &p("out.sqd"),
    ]);
    assert_eq!(String::from_utf8(masked).unwrap().lines().count(), 17);
    let recalled = sqhn_core::datasets::load_tensor_file(Path::new(&p("out.sqd"))).unwrap();
    let original = sqhn_core::datasets::load_tensor_file(Path::new(&p("train.sqd"))).unwrap();
    assert_eq!(recalled, original);

    let old: Vec<serde_json::Value> = serde_json::from_slice(&ok(&[
        "judge",
        "--checkpoint",
        &p("model.ckpt"),
        "--data",
        &p("train.sqd"),
    ]))
    .unwrap();
    let new: Vec<serde_json::Value> = serde_json::from_slice(&ok(&[
        "judge",
        "--checkpoint",
        &p("model.ckpt"),
        "--data",
        &p("new.sqd"),
    ]))
    .unwrap();
    assert!(old.iter().all(|r| r["old"] == true));
    assert!(new.iter().all(|r| r["old"] == false));

    assert!(!sqhn(&[
        "recall",
        "--checkpoint",
        &p("model.ckpt"),
        "--data",
        &p("train.sqd"),
        "--corruption",
        "fog"
    ])
    .status
    .success());
}
