//! Acceptance criteria at desk scale. Every check prints one line,
//! `PASS <id> ...` or `FAIL <id> ...`, then asserts. Run with
//! `cargo test -p sqhn-cli --test acceptance -- --nocapture` to see them.

use std::path::Path;
use std::time::Instant;

use sqhn_core::datasets::{generate, tile, untile, SynthKind, SynthSpec};
use sqhn_core::{
    ff_sweep, item_rng, read_checkpoint, recall, recall_accuracy, recall_mse, train_step,
    write_checkpoint, Architecture, Corruption, InputShape, LayerSpec, LearnConfig, ModelState,
    Pattern, Trainer,
};
use sqhn_harness::{run, ExperimentConfig, ExperimentReport};

const CAPACITY_MSE: f64 = 1e-10;
const CAPACITY_SECONDS: f64 = 5.0;
const HETERO_MSE: f64 = 1e-6;
const GAMMA: f64 = 0.01;
const HIGH_NOISE_ACCURACY: f64 = 0.95;
const ORDER_EXACT: f64 = 1e-6;
const ORDER_RATIO: f64 = 0.1;
const FORGET_Z: f64 = 3.0;
const FORGET_ACCURACY_DEV: f64 = 0.1;
const NOISY_MSE_50: f64 = 0.005;
const COLUMN_MEAN_TOL: f64 = 1e-9;
const SEED: u64 = 1;

// Written straight to the process stdout so the line survives output capture.
fn verdict(id: &str, pass: bool, detail: String) -> bool {
    let line = format!("{} {id} {detail}\n", if pass { "PASS" } else { "FAIL" });
    let _ = std::io::Write::write_all(&mut std::io::stdout().lock(), line.as_bytes());
    pass
}

fn configs_dir() -> &'static Path {
    Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/configs"))
}

fn template(name: &str) -> ExperimentConfig {
    ExperimentConfig::load(&configs_dir().join(name)).unwrap()
}

fn run_toml(text: &str) -> ExperimentReport {
    run(&ExperimentConfig::from_toml(text).unwrap()).unwrap()
}

fn summary(report: &ExperimentReport, key: &str) -> f64 {
    *report
        .summary
        .get(key)
        .unwrap_or_else(|| panic!("summary lacks {key}: {:?}", report.summary.keys()))
}

/// Uniform random 3x8x8 patterns: near-orthogonal once mean-shifted. The
/// binary variant puts every pixel as far from 0.5 as it can go, which is
/// the well-separated set used under heavy noise.
fn random_set(n: usize, binary: bool) -> Vec<Pattern> {
    let shape = InputShape::new(3, 8, 8);
    let batch = generate(&SynthSpec {
        n,
        shape,
        kind: SynthKind::Random { binary },
        seed: SEED,
    })
    .unwrap();
    batch.patterns()
}

fn trained_l1(patterns: &[Pattern], capacity: usize) -> ModelState {
    let arch = Architecture::single_layer(patterns[0].shape(), capacity);
    let mut state = ModelState::build(arch).unwrap();
    let cfg = LearnConfig::default();
    for p in patterns {
        train_step(&mut state, p, &cfg).unwrap();
    }
    state
}

fn probe_mses(state: &ModelState, patterns: &[Pattern], corruption: &Corruption) -> Vec<f64> {
    let lambda = state.arch().lambda_fb;
    patterns
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let q = corruption.apply(p, &mut item_rng(SEED, i as u64)).unwrap();
            let out = recall(state, &q.pattern, q.missing.as_ref(), lambda).unwrap();
            recall_mse(p, &out, q.missing.as_ref()).unwrap()
        })
        .collect()
}

#[test]
fn c01_capacity() {
    let start = Instant::now();
    let patterns = random_set(64, false);
    let state = trained_l1(&patterns, 64);
    let mses = probe_mses(&state, &patterns, &Corruption::None);
    let secs = start.elapsed().as_secs_f64();
    let acc = recall_accuracy(&mses, GAMMA);
    let worst = mses.iter().copied().fold(0.0, f64::max);
    let pass = acc == 1.0 && worst < CAPACITY_MSE && secs < CAPACITY_SECONDS;
    assert!(verdict(
        "c1-capacity",
        pass,
        format!("accuracy={acc} max_mse={worst:.3e} (<{CAPACITY_MSE:e}) runtime={secs:.3}s (<{CAPACITY_SECONDS}s)")
    ));
}

#[test]
fn c02_hetero_association() {
    let patterns = random_set(64, false);
    let state = trained_l1(&patterns, 64);
    let mses = probe_mses(&state, &patterns, &Corruption::RightMask { frac: 0.75 });
    let worst = mses.iter().copied().fold(0.0, f64::max);
    assert!(verdict(
        "c2-hetero-mask-0.75",
        worst < HETERO_MSE,
        format!(
            "max masked-pixel mse={worst:.3e} over {} patterns (<{HETERO_MSE:e})",
            mses.len()
        )
    ));
}

#[test]
fn c03_auto_association_noise() {
    let patterns = random_set(64, true);
    let state = trained_l1(&patterns, 64);
    let moderate = recall_accuracy(
        &probe_mses(&state, &patterns, &Corruption::WhiteNoise { variance: 0.2 }),
        GAMMA,
    );
    let high = recall_accuracy(
        &probe_mses(&state, &patterns, &Corruption::WhiteNoise { variance: 0.8 }),
        GAMMA,
    );
    let a = verdict(
        "c3-white-noise-0.2",
        moderate == 1.0,
        format!("accuracy={moderate} (==1.0, gamma={GAMMA})"),
    );
    let b = verdict(
        "c3-white-noise-0.8",
        high >= HIGH_NOISE_ACCURACY,
        format!("accuracy={high} (>={HIGH_NOISE_ACCURACY}, gamma={GAMMA})"),
    );
    assert!(a && b);
}

#[test]
fn c04_order_insensitivity() {
    // J >= N: every pattern owns a neuron under either order.
    let unique = run_toml(
        r#"
        task = "online-continual"
        seed = 1
        [model]
        input = { channels = 1, height = 8, width = 8 }
        layers = [{ kernel_h = 8, kernel_w = 8, capacity = 128 }]
        [data]
        source = "synth"
        n = 128
        synth = { kind = "clustered", classes = 4, spread = 0.3 }
        [stream]
        order = "oci"
        compare = ["iid"]
        [eval]
        every = 8
        "#,
    );
    let s_unique = summary(&unique, "s_mse_oci_vs_iid");
    let a = verdict(
        "c4-order-j-ge-n",
        s_unique < ORDER_EXACT,
        format!("S_MSE={s_unique:.3e} (<{ORDER_EXACT:e})"),
    );

    // J < N: the continual-oci template, 400 patterns into 200 neurons.
    let report = run(&template("continual_oci.toml")).unwrap();
    let s = summary(&report, "s_mse_oci_vs_iid");
    let c = summary(&report, "cumulative_mse_iid");
    let b = verdict(
        "c4-order-j-lt-n",
        s <= ORDER_RATIO * c,
        format!(
            "S_MSE={s:.3e} C_MSE(iid)={c:.3e} ratio={:.3} (<={ORDER_RATIO})",
            s / c
        ),
    );
    assert!(a && b);
}

fn forgetting_report() -> ExperimentReport {
    run(&template("forgetting.toml")).unwrap()
}

#[test]
fn c05a_forgetting_oracle_vs_exponential() {
    let report = forgetting_report();
    let curve = report
        .forgetting
        .as_ref()
        .expect("theory-verify embeds the oracle curve");
    assert_eq!(
        (curve.capacity, curve.trials, curve.mean.len()),
        (100, 1000, 301)
    );
    let z = curve.max_z();
    let worst_t = (0..curve.mean.len())
        .max_by(|&a, &b| {
            let za = zscore(curve.mean[a], curve.theory[a], curve.std_err[a]);
            let zb = zscore(curve.mean[b], curve.theory[b], curve.std_err[b]);
            za.total_cmp(&zb)
        })
        .unwrap();
    assert!(verdict(
        "c5a-oracle-within-3se-of-J*exp(-t/J)",
        z <= FORGET_Z,
        format!(
            "max_z={z} at t={worst_t} (mean={}, theory={:.4}, se={:.4}; <= {FORGET_Z})",
            curve.mean[worst_t], curve.theory[worst_t], curve.std_err[worst_t]
        )
    ));
}

fn zscore(mean: f64, target: f64, se: f64) -> f64 {
    let gap = (mean - target).abs();
    if se > 0.0 {
        gap / se
    } else if gap == 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

#[test]
fn c05a_forgetting_oracle_vs_exact_expectation() {
    let report = forgetting_report();
    let curve = report.forgetting.as_ref().unwrap();
    let z = (0..curve.mean.len())
        .map(|t| zscore(curve.mean[t], curve.exact[t], curve.std_err[t]))
        .fold(0.0, f64::max);
    assert!(verdict(
        "c5a-oracle-within-3se-of-J*(1-1/J)^t",
        z <= FORGET_Z,
        format!("max_z={z:.3} (<= {FORGET_Z})")
    ));
}

#[test]
fn c05b_forgetting_end_to_end() {
    let report = forgetting_report();
    let dev = summary(&report, "end_to_end_max_abs_dev");
    let at_cap = summary(&report, "capacity_accuracy");
    assert!(verdict(
        "c5b-end-to-end-accuracy",
        dev <= FORGET_ACCURACY_DEV && at_cap == 1.0,
        format!("accuracy at capacity={at_cap} max |acc - theory| over t<=3J = {dev:.4} (<= {FORGET_ACCURACY_DEV})")
    ));
}

#[test]
fn c06_noisy_encoding() {
    let report = run(&template("noisy_encoding.toml")).unwrap();
    let m1 = summary(&report, "mse_samples_1");
    let m50 = summary(&report, "mse_samples_50");
    let a = verdict(
        "c6-noisy-mse",
        m50 < m1 && m50 < NOISY_MSE_50,
        format!("mse(1)={m1:.4} mse(50)={m50:.5} (strictly lower, <{NOISY_MSE_50})"),
    );

    // Columns against per-item sample means, computed independently.
    let shape = InputShape::new(1, 8, 8);
    let items = generate(&SynthSpec {
        n: 64,
        shape,
        kind: SynthKind::Random { binary: false },
        seed: SEED,
    })
    .unwrap()
    .patterns();
    let mut state = ModelState::build(Architecture::single_layer(shape, 64)).unwrap();
    let mut trainer = Trainer::new(LearnConfig {
        fixed_latent: true,
        ..LearnConfig::default()
    })
    .unwrap();
    let mut worst: f64 = 0.0;
    for (id, p) in items.iter().enumerate() {
        let mut sum = vec![0.0; p.len()];
        let mut rng = item_rng(SEED, id as u64);
        let mut neuron = None;
        for _ in 0..50 {
            let sample = Corruption::BinarySample.apply(p, &mut rng).unwrap().pattern;
            sum.iter_mut()
                .zip(sample.values())
                .for_each(|(s, v)| *s += v);
            let step = trainer.step(&mut state, &sample, Some(id as u64)).unwrap();
            assert_eq!(
                *neuron.get_or_insert(step.assignments[0]),
                step.assignments[0]
            );
        }
        let col = state.column(0, neuron.unwrap());
        worst = sum
            .iter()
            .zip(col)
            .map(|(s, c)| (s / 50.0 - c).abs())
            .fold(worst, f64::max);
    }
    let b = verdict(
        "c6-columns-are-sample-means",
        worst < COLUMN_MEAN_TOL,
        format!("max |column - sample mean|={worst:.3e} (<{COLUMN_MEAN_TOL:e})"),
    );
    assert!(a && b);
}

#[test]
fn c07_episodic_recognition() {
    let report = run_toml(
        r#"
        task = "episodic-recognition"
        seed = 1
        [model]
        input = { channels = 1, height = 8, width = 8 }
        layers = [{ kernel_h = 8, kernel_w = 8, capacity = 128 }]
        [data]
        source = "synth"
        n = 512
        synth = { kind = "random" }
        [recognition]
        train_sizes = [128, 256]
        "#,
    );
    let at = summary(&report, "recognition_accuracy_128");
    let past = summary(&report, "recognition_accuracy_256");
    let guess = summary(&report, "best_guess_256");
    let a = verdict(
        "c7-recognition-at-capacity",
        at == 1.0,
        format!("accuracy(128)={at} (==1.0)"),
    );
    let b = verdict(
        "c7-recognition-past-capacity",
        past > guess,
        format!("accuracy(256)={past:.4} best_guess={guess} (strictly above)"),
    );
    assert!(a && b);
}

#[test]
fn c08_feedback_energy() {
    let cfg = template("corruption_arch.toml");
    let n = match cfg.data {
        sqhn_harness::config::DataConfig::Synth { n, .. } => n,
        _ => unreachable!("synthetic template"),
    };
    assert!(n >= 100 && cfg.model.layers.len() > 1);
    let report = run(&cfg).unwrap();
    let ff = summary(&report, "energy_ff");
    let fb = summary(&report, "energy_ff_fb");
    assert!(verdict(
        "c8-fb-sweep-energy",
        fb >= ff,
        format!("{n} patterns, 25% occlusion: mean E(FF+FB)={fb:.5} >= mean E(FF)={ff:.5}")
    ));
}

#[test]
fn c09_invariants() {
    let shape = InputShape::new(1, 8, 8);
    let arch = Architecture::new(
        shape,
        vec![
            LayerSpec::new(2, 2, 6),
            LayerSpec::new(2, 2, 6),
            LayerSpec::new(2, 2, 12),
        ],
    );
    let data = generate(&SynthSpec {
        n: 40,
        shape,
        kind: SynthKind::Clustered {
            classes: 4,
            spread: 0.4,
        },
        seed: SEED,
    })
    .unwrap()
    .patterns();
    let mut state = ModelState::build(arch.clone()).unwrap();
    let cfg = LearnConfig::default();
    let (mut isolation, mut conservation, mut stochastic, mut one_hot) = (true, true, true, true);
    for p in &data {
        let before = state.clone();
        let step = train_step(&mut state, p, &cfg).unwrap();
        for node in 0..state.node_count() {
            let cap = state.topology().capacity(node);
            let changed: Vec<usize> = (0..cap)
                .filter(|&j| state.column(node, j) != before.column(node, j))
                .collect();
            isolation &= changed.iter().all(|&j| j == step.assignments[node]);
            conservation &= state.counts(node).iter().sum::<u64>() == state.iteration();
            let block = state.topology().child_block_len(node);
            if state.topology().nodes[node].layer > 0 {
                for j in 0..state.grown(node) {
                    for b in state.column(node, j).chunks(block) {
                        stochastic &= (b.iter().sum::<f64>() - 1.0).abs() < 1e-9
                            && b.iter().all(|&x| x >= 0.0);
                    }
                }
            }
        }
        let sweep = ff_sweep(&state, p, None).unwrap();
        one_hot &= (0..state.node_count()).all(|n| {
            let h = &sweep.acts.h[n];
            let w = sweep.acts.h_star[n];
            w < state.grown(n)
                && h[w] == sweep.acts.max_val[n]
                && h[..state.grown(n)].iter().all(|&x| x <= h[w])
        });
    }
    let tiled = data
        .iter()
        .all(|p| untile(&tile(p, &arch).unwrap(), &arch).unwrap() == *p);
    let mut buf = Vec::new();
    write_checkpoint(&state, &mut buf).unwrap();
    let round = read_checkpoint(buf.as_slice()).unwrap() == state;

    let cfg = template("ablation.toml");
    let mut a = run(&cfg).unwrap();
    let mut b = run(&cfg).unwrap();
    a.strip_timing();
    b.strip_timing();
    let deterministic = a.to_json().unwrap() == b.to_json().unwrap();

    let checks = [
        ("one-hot", one_hot),
        ("column-stochasticity", stochastic),
        ("parameter-isolation", isolation),
        ("count-conservation", conservation),
        ("tile-untile", tiled),
        ("checkpoint-round-trip", round),
        ("seed-determinism", deterministic),
    ];
    let mut all = true;
    for (name, ok) in checks {
        all &= verdict(&format!("c9-{name}"), ok, String::new());
    }
    assert!(all);
}

#[test]
fn c10_ablations() {
    let report = run(&template("ablation.toml")).unwrap();
    let full = summary(&report, "cumulative_mse_full");
    let mut all = true;
    for label in ["-grw", "-lr-decay"] {
        let v = summary(&report, &format!("cumulative_mse_{label}"));
        all &= verdict(
            &format!("c10-ablation{label}"),
            v > full,
            format!("C_MSE={v:.5} > full C_MSE={full:.5}"),
        );
    }
    assert!(all);
}
