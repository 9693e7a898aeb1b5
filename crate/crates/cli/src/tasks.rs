//! Task runners. Every run is a pure function of the config, its data files
//! and the seed; only the wall-clock fields vary between repeats.

use std::collections::BTreeMap;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sqhn_core::datasets::{make_stream, PatternBatch, StreamOrder};
use sqhn_core::metrics::{accuracy_theory, order_sensitivity, recall_accuracy};
use sqhn_core::{
    forgetting_oracle, judge, train_step, LearnConfig, MetricSeries, Mhn, ModelState, Pattern,
    Similarity, Trainer,
};

use crate::config::{Ablation, ExperimentConfig, Task};
use crate::data::{flatten, load_blocks, load_source};
use crate::error::{HarnessError, Result};
use crate::eval::{mean_energies, mhn_mses, probe, sample_rng, sqhn_mses};
use crate::report::{ExperimentReport, RunReport};

const STREAM_SALT: u64 = 0x0005_74ea;
const INIT_SALT: u64 = 0x0000_1a17;
const ORACLE_SALT: u64 = 0x000f_0a67;

fn elapsed_ms(start: Instant) -> Option<u64> {
    Some(start.elapsed().as_millis() as u64)
}

fn order_name(o: StreamOrder) -> &'static str {
    match o {
        StreamOrder::Iid => "iid",
        StreamOrder::Oci => "oci",
        StreamOrder::Odi => "odi",
    }
}

fn similarity_name(s: Similarity) -> &'static str {
    match s {
        Similarity::Dot => "dot",
        Similarity::Manhattan => "manhattan",
        Similarity::Cosine => "cosine",
    }
}

/// Execute the task a config declares.
pub fn run(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let cfg = cfg.resolved();
    let start = Instant::now();
    let mut report = ExperimentReport {
        name: cfg.name.clone(),
        task: cfg.task,
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        config: cfg.clone(),
        runs: Vec::new(),
        summary: BTreeMap::new(),
        forgetting: None,
        wall_clock_ms: None,
    };
    match cfg.task {
        Task::AssocAuto | Task::AssocHetero => associative(&cfg, &mut report)?,
        Task::OnlineContinual => continual(&cfg, &mut report)?,
        Task::NoisyEncoding => noisy(&cfg, &mut report)?,
        Task::EpisodicRecognition => recognition(&cfg, &mut report)?,
        Task::TheoryVerify => theory(&cfg, &mut report)?,
        Task::Ablate => ablate(&cfg, &mut report)?,
    }
    report.wall_clock_ms = elapsed_ms(start);
    Ok(report)
}

fn lambda(cfg: &ExperimentConfig) -> f64 {
    cfg.eval.lambda.unwrap_or(cfg.model.lambda_fb)
}

/// Presentation order as indices into the flattened blocks; data order when
/// `order` is `None`.
pub fn stream_ids(
    cfg: &ExperimentConfig,
    blocks: &[PatternBatch],
    order: Option<StreamOrder>,
) -> Vec<usize> {
    match order {
        Some(o) => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ STREAM_SALT);
            make_stream(blocks, o, &mut rng)
                .into_iter()
                .map(|i| i.item as usize)
                .collect()
        }
        None => (0..blocks.iter().map(PatternBatch::len).sum()).collect(),
    }
}

/// Train on `ids` in order, re-testing everything seen so far at each
/// evaluation point (and always after the last step).
fn train_and_track(
    cfg: &ExperimentConfig,
    learn: &LearnConfig,
    mut state: ModelState,
    patterns: &[Pattern],
    ids: &[usize],
    label: &str,
) -> Result<(RunReport, ModelState)> {
    let start = Instant::now();
    let every = cfg.eval.every;
    let mut series = MetricSeries::new(cfg.eval.gamma_recall);
    let mut seen: Vec<(u64, &Pattern)> = Vec::with_capacity(ids.len());
    for (k, &id) in ids.iter().enumerate() {
        train_step(&mut state, &patterns[id], learn)?;
        seen.push((id as u64, &patterns[id]));
        let t = k + 1;
        if (every > 0 && t % every == 0) || t == ids.len() {
            let mses = sqhn_mses(&state, &seen, &cfg.eval.corruption, lambda(cfg), cfg.seed)?;
            series.push(t as u64, &mses);
        }
    }
    let mut run = RunReport::new(label, series);
    run.growth_per_layer = state.mean_grown_per_layer();
    run.wall_clock_ms = elapsed_ms(start);
    Ok((run, state))
}

fn associative(cfg: &ExperimentConfig, report: &mut ExperimentReport) -> Result<()> {
    let blocks = load_blocks(cfg)?;
    let patterns = flatten(&blocks);
    let ids = stream_ids(cfg, &blocks, cfg.stream.order);
    let state = ModelState::build(cfg.model.clone())?;
    let (mut run, state) = train_and_track(cfg, &cfg.learn, state, &patterns, &ids, "sqhn")?;
    let all: Vec<(u64, &Pattern)> = patterns
        .iter()
        .enumerate()
        .map(|(i, p)| (i as u64, p))
        .collect();
    if cfg.eval.energy && !all.is_empty() {
        let (ff, fb) = mean_energies(&state, &all, &cfg.eval.corruption, lambda(cfg), cfg.seed)?;
        run.extra.insert("energy_ff".into(), ff);
        run.extra.insert("energy_ff_fb".into(), fb);
        report.summary.insert("energy_ff".into(), ff);
        report.summary.insert("energy_ff_fb".into(), fb);
    }
    if let Some(s) = run.series.recall_mse.last() {
        report.summary.insert("sqhn_final_mse".into(), *s);
        report.summary.insert(
            "sqhn_final_accuracy".into(),
            *run.series.recall_accuracy.last().expect("same length"),
        );
    }
    report.runs.push(run);

    if let Some(b) = &cfg.baseline {
        let start = Instant::now();
        let mut net = Mhn::new(cfg.model.input, b.similarity)
            .with_beta(b.beta)
            .with_missing_policy(b.missing_policy);
        net.store_batch(&patterns)?;
        let mut series = MetricSeries::new(cfg.eval.gamma_recall);
        if !all.is_empty() {
            series.push(
                all.len() as u64,
                &mhn_mses(&net, &all, &cfg.eval.corruption, cfg.seed)?,
            );
        }
        let label = format!("mhn-{}", similarity_name(b.similarity));
        if let Some(s) = series.recall_mse.last() {
            report.summary.insert(format!("{label}_final_mse"), *s);
            report.summary.insert(
                format!("{label}_final_accuracy"),
                *series.recall_accuracy.last().expect("same length"),
            );
        }
        let mut run = RunReport::new(label, series);
        run.wall_clock_ms = elapsed_ms(start);
        report.runs.push(run);
    }
    Ok(())
}

fn continual(cfg: &ExperimentConfig, report: &mut ExperimentReport) -> Result<()> {
    let blocks = load_blocks(cfg)?;
    let patterns = flatten(&blocks);
    let mut orders = vec![cfg.stream.order.unwrap_or_default()];
    orders.extend(cfg.stream.compare.iter().copied());
    for &order in &orders {
        let ids = stream_ids(cfg, &blocks, Some(order));
        let state = ModelState::build(cfg.model.clone())?;
        let (run, _) = train_and_track(cfg, &cfg.learn, state, &patterns, &ids, order_name(order))?;
        report.summary.insert(
            format!("cumulative_mse_{}", order_name(order)),
            run.cumulative_mse,
        );
        report.summary.insert(
            format!("cumulative_accuracy_{}", order_name(order)),
            run.cumulative_accuracy,
        );
        report.runs.push(run);
    }
    let base = &report.runs[0];
    let mut extra = BTreeMap::new();
    for other in &report.runs[1..] {
        let key = format!("{}_vs_{}", base.label, other.label);
        extra.insert(
            format!("s_mse_{key}"),
            order_sensitivity(base.cumulative_mse, other.cumulative_mse),
        );
        extra.insert(
            format!("s_accuracy_{key}"),
            order_sensitivity(base.cumulative_accuracy, other.cumulative_accuracy),
        );
    }
    report.summary.extend(extra);
    Ok(())
}

fn noisy(cfg: &ExperimentConfig, report: &mut ExperimentReport) -> Result<()> {
    let n_cfg = cfg.noisy.clone().unwrap_or_default();
    let patterns = flatten(&load_blocks(cfg)?);
    let all: Vec<(u64, &Pattern)> = patterns
        .iter()
        .enumerate()
        .map(|(i, p)| (i as u64, p))
        .collect();
    for &k in &n_cfg.samples {
        let start = Instant::now();
        let mut state = ModelState::build(cfg.model.clone())?;
        let mut trainer = Trainer::new(cfg.learn)?;
        for &(id, p) in &all {
            for s in 0..k {
                let sample = n_cfg
                    .sampling
                    .apply(p, &mut sample_rng(cfg.seed, id, s as u64))?;
                trainer.step(&mut state, &sample.pattern, Some(id))?;
            }
        }
        let mut series = MetricSeries::new(cfg.eval.gamma_recall);
        if !all.is_empty() {
            series.push(
                state.iteration(),
                &sqhn_mses(&state, &all, &cfg.eval.corruption, lambda(cfg), cfg.seed)?,
            );
        }
        let label = format!("samples={k}");
        if let Some(m) = series.recall_mse.last() {
            report.summary.insert(format!("mse_samples_{k}"), *m);
        }
        let mut run = RunReport::new(label, series);
        run.growth_per_layer = state.mean_grown_per_layer();
        run.extra.insert("samples".into(), k as f64);
        run.wall_clock_ms = elapsed_ms(start);
        report.runs.push(run);
    }
    Ok(())
}

fn recognition(cfg: &ExperimentConfig, report: &mut ExperimentReport) -> Result<()> {
    let r_cfg = cfg.recognition.clone().unwrap_or_default();
    let patterns = flatten(&load_blocks(cfg)?);
    let ood = match &r_cfg.out_of_distribution {
        Some(src) => flatten(&load_source(src, cfg.model.input, cfg.seed)?),
        None => Vec::new(),
    };
    let pretrain = match &r_cfg.pretrain {
        Some(src) => flatten(&load_source(src, cfg.model.input, cfg.seed)?),
        None => Vec::new(),
    };
    for &n in &r_cfg.train_sizes {
        if 2 * n > patterns.len() {
            return Err(HarnessError::Config(format!(
                "recognition with {n} training items needs {} data items, found {}",
                2 * n,
                patterns.len()
            )));
        }
        if r_cfg.out_of_distribution.is_some() && ood.len() < n {
            return Err(HarnessError::Config(format!(
                "out-of-distribution data has {} items, need {n}",
                ood.len()
            )));
        }
        let start = Instant::now();
        let mut state = ModelState::build(cfg.model.clone())?;
        let mut learn = cfg.learn;
        if !pretrain.is_empty() {
            for p in &pretrain {
                train_step(&mut state, p, &learn)?;
            }
            state.reset_root();
            learn.update_root_only = true;
        }
        for p in &patterns[..n] {
            train_step(&mut state, p, &learn)?;
        }
        let novel: Vec<&Pattern> = patterns[n..2 * n]
            .iter()
            .chain(if ood.is_empty() { &[][..] } else { &ood[..n] })
            .collect();
        let hits = patterns[..n]
            .iter()
            .map(|p| judge(&state, p).map(|j| j.old))
            .collect::<sqhn_core::Result<Vec<_>>>()?;
        let rejections = novel
            .iter()
            .map(|p| judge(&state, p).map(|j| !j.old))
            .collect::<sqhn_core::Result<Vec<_>>>()?;
        let correct = hits.iter().chain(&rejections).filter(|&&c| c).count();
        let total = hits.len() + rejections.len();
        let accuracy = correct as f64 / total as f64;
        let best_guess = n.max(total - n) as f64 / total as f64;

        let seen: Vec<(u64, &Pattern)> = patterns[..n]
            .iter()
            .enumerate()
            .map(|(i, p)| (i as u64, p))
            .collect();
        let mut series = MetricSeries::new(cfg.eval.gamma_recall);
        series.push(
            n as u64,
            &sqhn_mses(&state, &seen, &cfg.eval.corruption, lambda(cfg), cfg.seed)?,
        );
        series.recognition_accuracy.push(accuracy);
        let mut run = RunReport::new(format!("train={n}"), series);
        run.growth_per_layer = state.mean_grown_per_layer();
        let rate = |v: &[bool]| v.iter().filter(|&&c| c).count() as f64 / v.len().max(1) as f64;
        run.extra.insert("hit_rate".into(), rate(&hits));
        run.extra
            .insert("correct_rejection_rate".into(), rate(&rejections));
        run.extra.insert("best_guess".into(), best_guess);
        run.wall_clock_ms = elapsed_ms(start);
        report
            .summary
            .insert(format!("recognition_accuracy_{n}"), accuracy);
        report.summary.insert(format!("best_guess_{n}"), best_guess);
        report.runs.push(run);
    }
    Ok(())
}

fn theory(cfg: &ExperimentConfig, report: &mut ExperimentReport) -> Result<()> {
    let t_cfg = cfg.theory.clone().unwrap_or_default();
    let j = t_cfg.capacity;
    let t_max = t_cfg.t_max.unwrap_or(3 * j);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ ORACLE_SALT);
    let curve = forgetting_oracle(j, t_max, t_cfg.trials, &mut rng)?;
    // Points with zero spread (t = 0, 1) would give infinite z for any gap;
    // count them separately so the summary stays finite.
    let mut max_z: f64 = 0.0;
    let mut zero_se_mismatches = 0usize;
    for ((m, th), se) in curve.mean.iter().zip(&curve.theory).zip(&curve.std_err) {
        if *se > 0.0 {
            max_z = max_z.max((m - th).abs() / se);
        } else if m != th {
            zero_se_mismatches += 1;
        }
    }
    report.summary.insert("oracle_max_z".into(), max_z);
    report.summary.insert(
        "oracle_zero_se_mismatches".into(),
        zero_se_mismatches as f64,
    );
    report
        .summary
        .insert("oracle_max_abs_dev".into(), curve.max_abs_dev);
    let exact_dev = curve
        .mean
        .iter()
        .zip(&curve.exact)
        .map(|(m, e)| (m - e).abs())
        .fold(0.0, f64::max);
    report
        .summary
        .insert("oracle_max_abs_dev_exact".into(), exact_dev);
    report.forgetting = Some(curve);

    if t_cfg.end_to_end {
        let start = Instant::now();
        let root_cap = cfg.model.layers.last().map_or(0, |l| l.capacity);
        if root_cap != j {
            return Err(HarnessError::Config(format!(
                "theory.capacity {j} differs from the root capacity {root_cap}"
            )));
        }
        let patterns = flatten(&load_blocks(cfg)?);
        if patterns.len() < j + t_max {
            return Err(HarnessError::Config(format!(
                "end-to-end check needs {} data items",
                j + t_max
            )));
        }
        let mut state = ModelState::build(cfg.model.clone())?;
        let mut series = MetricSeries::new(cfg.eval.gamma_recall);
        let mut seen: Vec<(u64, &Pattern)> = Vec::new();
        let mut max_dev: f64 = 0.0;
        for (s, p) in patterns[..j + t_max].iter().enumerate() {
            train_step(&mut state, p, &cfg.learn)?;
            seen.push((s as u64, p));
            let steps = s + 1;
            if steps < j {
                continue;
            }
            let mses = sqhn_mses(&state, &seen, &cfg.eval.corruption, lambda(cfg), cfg.seed)?;
            series.push(steps as u64, &mses);
            let acc = recall_accuracy(&mses, cfg.eval.gamma_recall);
            max_dev = max_dev.max((acc - accuracy_theory(j, (steps - j) as u64)).abs());
            if steps == j {
                report.summary.insert("capacity_accuracy".into(), acc);
            }
        }
        report
            .summary
            .insert("end_to_end_max_abs_dev".into(), max_dev);
        let mut run = RunReport::new("sqhn", series);
        run.growth_per_layer = state.mean_grown_per_layer();
        run.extra.insert("max_abs_dev_from_theory".into(), max_dev);
        run.wall_clock_ms = elapsed_ms(start);
        report.runs.push(run);
    }
    Ok(())
}

fn ablate(cfg: &ExperimentConfig, report: &mut ExperimentReport) -> Result<()> {
    let a_cfg = cfg.ablate.clone().unwrap_or_default();
    let blocks = load_blocks(cfg)?;
    let patterns = flatten(&blocks);
    let ids = stream_ids(cfg, &blocks, Some(cfg.stream.order.unwrap_or_default()));
    for &variant in &a_cfg.variants {
        let learn = a_cfg.apply(&cfg.learn, variant);
        let state = if variant == Ablation::NoGrw {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ INIT_SALT);
            ModelState::build_random(cfg.model.clone(), &mut rng)?
        } else {
            ModelState::build(cfg.model.clone())?
        };
        let (run, _) = train_and_track(cfg, &learn, state, &patterns, &ids, variant.label())?;
        report.summary.insert(
            format!("cumulative_mse_{}", variant.label()),
            run.cumulative_mse,
        );
        report.summary.insert(
            format!("cumulative_accuracy_{}", variant.label()),
            run.cumulative_accuracy,
        );
        report.runs.push(run);
    }
    Ok(())
}

/// Recall one probe through a trained state, for command-line use.
pub fn recall_probe(
    state: &ModelState,
    original: &Pattern,
    corruption: &sqhn_core::Corruption,
    seed: u64,
    item: u64,
) -> Result<(Pattern, f64)> {
    let q = probe(original, corruption, seed, item)?;
    let out = sqhn_core::recall(
        state,
        &q.pattern,
        q.missing.as_ref(),
        state.arch().lambda_fb,
    )?;
    let mse = sqhn_core::recall_mse(original, &out, q.missing.as_ref())?;
    Ok((out, mse))
}
