use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use sqhn_core::datasets::{self, idx, DomainTransform, SynthKind, SynthSpec};
use sqhn_core::{
    judge, load_checkpoint, save_checkpoint, train_step, Corruption, InputShape, ModelState,
    PatternBatch,
};
use sqhn_harness::sweep::{parse_axis, sweep};
use sqhn_harness::tasks::{recall_probe, stream_ids};
use sqhn_harness::{run, template, ExperimentConfig, Task, TEMPLATES};

#[derive(Parser)]
#[command(
    name = "sqhn",
    version,
    about = "Train, probe and benchmark sparse quantized Hopfield networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic tensor file.
    GenData(GenDataArgs),
    /// Convert IDX (MNIST-style) files into a tensor file.
    Convert(ConvertArgs),
    /// Train on a config's data and save a checkpoint.
    Train(TrainArgs),
    /// Recall every image of a tensor file through a checkpoint.
    Recall(RecallArgs),
    /// Old/new judgement for every image of a tensor file.
    Judge(JudgeArgs),
    /// Run the experiment a config describes.
    Bench(RunArgs),
    /// Run a theory-verify config.
    TheoryVerify(RunArgs),
    /// Run an ablate config.
    Ablate(RunArgs),
    /// Run a config once per combination of overridden values.
    Sweep(SweepArgs),
    /// Print a bundled config template, or list them.
    Template { name: Option<String> },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Random,
    Binary,
    Clustered,
}

#[derive(Args)]
struct GenDataArgs {
    #[arg(long, value_enum, default_value = "random")]
    kind: Kind,
    #[arg(long)]
    n: usize,
    /// Image shape as C,H,W.
    #[arg(long, default_value = "1,8,8", value_parser = parse_shape)]
    shape: InputShape,
    #[arg(long, default_value_t = 4)]
    classes: usize,
    #[arg(long, default_value_t = 0.5)]
    spread: f64,
    #[arg(long, value_enum, default_value = "identity")]
    domain: Domain,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Domain {
    Identity,
    Dark,
    BrightInverted,
    Inverted,
}

#[derive(Args)]
struct ConvertArgs {
    #[arg(long)]
    images: PathBuf,
    #[arg(long)]
    labels: Option<PathBuf>,
    #[arg(long)]
    limit: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Checkpoint path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RecallArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    data: PathBuf,
    /// Query corruption as KIND[:VALUE], e.g. white-noise:0.2, right-mask:0.75,
    /// pixel-dropout:0.5, occlusion:0.25, binary-sample.
    #[arg(long, default_value = "none", value_parser = parse_corruption)]
    corruption: Corruption,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write recalled images to this tensor file.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Args)]
struct JudgeArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config's seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    /// Omit wall-clock fields so repeated runs are byte-identical.
    #[arg(long)]
    no_timing: bool,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    config: PathBuf,
    /// Axis as dotted.path=v1,v2,... (repeatable).
    #[arg(long = "set", required = true)]
    axes: Vec<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_shape(s: &str) -> std::result::Result<InputShape, String> {
    let parts: Vec<usize> = s
        .split(',')
        .map(|p| p.trim().parse().map_err(|_| format!("bad shape '{s}'")))
        .collect::<std::result::Result<_, _>>()?;
    match parts[..] {
        [c, h, w] if c * h * w > 0 => Ok(InputShape::new(c, h, w)),
        _ => Err(format!(
            "shape must be three positive integers C,H,W, got '{s}'"
        )),
    }
}

fn parse_corruption(s: &str) -> std::result::Result<Corruption, String> {
    let (kind, value) = match s.split_once(':') {
        Some((k, v)) => (
            k,
            Some(
                v.parse::<f64>()
                    .map_err(|_| format!("bad value in '{s}'"))?,
            ),
        ),
        None => (s, None),
    };
    let need = |v: Option<f64>| v.ok_or_else(|| format!("'{kind}' needs a value, e.g. {kind}:0.5"));
    let c = match kind {
        "none" => Corruption::None,
        "white-noise" => Corruption::WhiteNoise {
            variance: need(value)?,
        },
        "pixel-dropout" => Corruption::PixelDropout { frac: need(value)? },
        "right-mask" => Corruption::RightMask { frac: need(value)? },
        "occlusion" => Corruption::Occlusion {
            fill: Default::default(),
            frac: value,
        },
        "binary-sample" => Corruption::BinarySample,
        other => return Err(format!("unknown corruption '{other}'")),
    };
    c.validate().map_err(|e| e.to_string())?;
    Ok(c)
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn load_config(path: &Path, seed: Option<u64>) -> Result<ExperimentConfig> {
    let mut cfg =
        ExperimentConfig::load(path).with_context(|| format!("loading {}", path.display()))?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn run_experiment(args: &RunArgs, expect: Option<Task>) -> Result<()> {
    let cfg = load_config(&args.config, args.seed)?;
    if let Some(t) = expect {
        if cfg.task != t {
            bail!(
                "config task is {:?}, this subcommand runs {:?}",
                cfg.task,
                t
            );
        }
    }
    let mut report = run(&cfg)?;
    if args.no_timing {
        report.strip_timing();
    }
    let text = match args.format {
        Format::Json => report.to_json()?,
        Format::Csv => report.to_csv()?,
    };
    emit(args.out.as_deref(), &text)
}

fn render<T: Serialize>(rows: &[T], format: Format) -> Result<String> {
    Ok(match format {
        Format::Json => serde_json::to_string_pretty(rows)? + "\n",
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            for r in rows {
                w.serialize(r)?;
            }
            String::from_utf8(w.into_inner()?)?
        }
    })
}

#[derive(Serialize)]
struct RecallRow {
    item: usize,
    mse: f64,
}

#[derive(Serialize)]
struct JudgeRow {
    item: usize,
    label: Option<u32>,
    old: bool,
    score: f64,
    neuron: usize,
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::GenData(a) => {
            let kind = match a.kind {
                Kind::Random => SynthKind::Random { binary: false },
                Kind::Binary => SynthKind::Random { binary: true },
                Kind::Clustered => SynthKind::Clustered {
                    classes: a.classes,
                    spread: a.spread,
                },
            };
            let batch = datasets::generate(&SynthSpec {
                n: a.n,
                shape: a.shape,
                kind,
                seed: a.seed,
            })?;
            let transform = match a.domain {
                Domain::Identity => DomainTransform::Identity,
                Domain::Dark => DomainTransform::Dark,
                Domain::BrightInverted => DomainTransform::BrightInverted,
                Domain::Inverted => DomainTransform::Inverted,
            };
            datasets::save_tensor_file(&transform.apply(&batch), &a.out)?;
        }
        Command::Convert(a) => {
            let batch = idx::convert_idx(&a.images, a.labels.as_deref(), a.limit)?;
            datasets::save_tensor_file(&batch, &a.out)?;
            eprintln!("converted {} images", batch.len());
        }
        Command::Train(a) => {
            let cfg = load_config(&a.config, a.seed)?;
            let blocks = sqhn_harness::data::load_blocks(&cfg)?;
            let patterns = sqhn_harness::data::flatten(&blocks);
            let mut state = ModelState::build(cfg.model.clone())?;
            let ids = stream_ids(&cfg, &blocks, cfg.stream.order);
            for id in ids {
                train_step(&mut state, &patterns[id], &cfg.learn)?;
            }
            save_checkpoint(&state, &a.out)?;
            eprintln!(
                "trained on {} patterns; grown per layer {:?}",
                patterns.len(),
                state.mean_grown_per_layer()
            );
        }
        Command::Recall(a) => {
            let state = load_checkpoint(&a.checkpoint)?;
            let batch = datasets::load_tensor_file(&a.data)?;
            let mut rows = Vec::with_capacity(batch.len());
            let mut outputs = Vec::with_capacity(batch.len());
            for i in 0..batch.len() {
                let (out, mse) =
                    recall_probe(&state, &batch.pattern(i), &a.corruption, a.seed, i as u64)?;
                rows.push(RecallRow { item: i, mse });
                outputs.push(out);
            }
            if let Some(path) = &a.out {
                let labels = batch.labels().map(<[u32]>::to_vec);
                datasets::save_tensor_file(
                    &PatternBatch::from_patterns(batch.shape(), &outputs, labels)?,
                    path,
                )?;
            }
            emit(None, &render(&rows, a.format)?)?;
        }
        Command::Judge(a) => {
            let state = load_checkpoint(&a.checkpoint)?;
            let batch = datasets::load_tensor_file(&a.data)?;
            let rows = (0..batch.len())
                .map(|i| {
                    let j = judge(&state, &batch.pattern(i))?;
                    Ok(JudgeRow {
                        item: i,
                        label: batch.label(i),
                        old: j.old,
                        score: j.score,
                        neuron: j.neuron,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            emit(a.out.as_deref(), &render(&rows, a.format)?)?;
        }
        Command::Bench(a) => run_experiment(&a, None)?,
        Command::TheoryVerify(a) => run_experiment(&a, Some(Task::TheoryVerify))?,
        Command::Ablate(a) => run_experiment(&a, Some(Task::Ablate))?,
        Command::Sweep(a) => {
            let cfg = load_config(&a.config, a.seed)?;
            let axes = a
                .axes
                .iter()
                .map(|s| parse_axis(s))
                .collect::<sqhn_harness::Result<Vec<_>>>()?;
            let points = sweep(&cfg, &axes)?;
            emit(
                a.out.as_deref(),
                &(serde_json::to_string_pretty(&points)? + "\n"),
            )?;
        }
        Command::Template { name } => match name {
            Some(n) => match template(&n) {
                Some(t) => emit(None, t)?,
                None => bail!("no template named '{n}'"),
            },
            None => {
                for (n, _) in TEMPLATES {
                    println!("{n}");
                }
            }
        },
    }
    Ok(())
}
