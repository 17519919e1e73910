use std::path::PathBuf;

use labelspan::codec::TaggedExample;
use labelspan::harness::{distill_to_training, fit_tagger, ToyCheckpoint, ToyTaggerConfig, TrainConfig};
use labelspan::synth::{subsample, DistillRecord};
use labelspan::tasks::{to_training_examples, TaskConfig, TaskItem};
use labelspan::ToyTaggerF64;
use serde::Serialize;

use super::{load_file_config, load_schema};
use crate::failure::{data, from_lib, usage, CmdResult};
use crate::files::{read_jsonl, read_to_string, to_jsonl, write_atomic, write_json};
use crate::manifest::RunManifest;

#[derive(clap::Args)]
pub struct Args {
    /// Output directory: manifest.json, checkpoint.json, train_log.jsonl, summary.json.
    #[arg(long)]
    run_dir: PathBuf,
    /// Distillation records to pre-train on.
    #[arg(long, conflicts_with_all = ["schema", "items"], required_unless_present = "items")]
    records: Option<PathBuf>,
    /// Task configuration for --items.
    #[arg(long, requires = "items")]
    schema: Option<PathBuf>,
    /// Gold task items to fine-tune on.
    #[arg(long, requires = "schema")]
    items: Option<PathBuf>,
    /// Start from this checkpoint instead of zero weights.
    #[arg(long)]
    init: Option<PathBuf>,
    /// Train on a uniform sample of this many records or items.
    #[arg(long)]
    subsample: Option<usize>,
    /// All-O examples per record with labels from other records [default: 1].
    #[arg(long)]
    negatives: Option<usize>,
    /// TOML or JSON config file (`[train]`, `[data]`, `[tagger]` sections).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Peak learning rate [default: 2e-5].
    #[arg(long)]
    lr: Option<f64>,
    /// Floor of the cosine schedule [default: 0].
    #[arg(long)]
    min_lr: Option<f64>,
    /// Batch size [default: 64]
    #[arg(long)]
    batch_size: Option<usize>,
    /// Epochs [default: 1]
    #[arg(long)]
    epochs: Option<usize>,
    /// Decoupled AdamW weight decay [default: 0.01].
    #[arg(long)]
    weight_decay: Option<f64>,
    /// Shuffling, subsampling and negative-label seed [default: 0].
    #[arg(long)]
    seed: Option<u64>,
    /// log2 of the feature bucket count (new taggers only).
    #[arg(long)]
    hash_bits: Option<u32>,
    /// Context window (new taggers only).
    #[arg(long)]
    window: Option<usize>,
}

#[derive(Serialize)]
struct Effective {
    train: TrainConfig,
    tagger: ToyTaggerConfig,
    subsample: Option<usize>,
    negatives: usize,
    init: Option<PathBuf>,
    task: Option<TaskConfig>,
}

#[derive(Serialize)]
struct Summary {
    records_used: usize,
    examples: usize,
    batches: usize,
    epochs: usize,
    first_loss: Option<f64>,
    last_loss: Option<f64>,
}

pub fn run(a: Args) -> CmdResult {
    let file = load_file_config(a.config.as_deref())?;
    let mut train = file.train.unwrap_or_default();
    if let Some(v) = a.lr {
        train.learning_rate = v;
    }
    if let Some(v) = a.min_lr {
        train.min_learning_rate = v;
    }
    if let Some(v) = a.batch_size {
        train.batch_size = v;
    }
    if let Some(v) = a.epochs {
        train.epochs = v;
    }
    if let Some(v) = a.weight_decay {
        train.adamw.weight_decay = v;
    }
    if let Some(v) = a.seed {
        train.seed = v;
    }
    train.validate().map_err(from_lib)?;

    let init = match &a.init {
        Some(p) => {
            if a.hash_bits.is_some() || a.window.is_some() {
                return Err(usage("--hash-bits and --window cannot change an --init checkpoint"));
            }
            let ckpt: ToyCheckpoint =
                serde_json::from_str(&read_to_string(p)?).map_err(|e| data(format!("{}: {e}", p.display())))?;
            Some(ToyTaggerF64::from_checkpoint(&ckpt).map_err(from_lib)?)
        }
        None => None,
    };
    let mut tagger_cfg = file.tagger.unwrap_or_default();
    if let Some(v) = a.hash_bits {
        tagger_cfg.hash_bits = v;
    }
    if let Some(v) = a.window {
        tagger_cfg.window = v;
    }
    if !(1..=24).contains(&tagger_cfg.hash_bits) {
        return Err(usage(format!("hash_bits must be in 1..=24, got {}", tagger_cfg.hash_bits)));
    }
    let tagger_cfg = init.as_ref().map(|t| t.config()).unwrap_or(tagger_cfg);

    let manifest_path = a.run_dir.join("manifest.json");
    if manifest_path.exists() {
        return Err(usage(format!("{} already holds a run", a.run_dir.display())));
    }

    let negatives = a.negatives.or(file.data.negatives).unwrap_or(1);
    let subsample_n = a.subsample.or(file.data.subsample);
    let seed = train.seed;

    // Read inputs before writing anything.
    enum Source {
        Records(Vec<DistillRecord>),
        Task(labelspan::tasks::TaskSchema, Vec<TaskItem>),
    }
    let (source, task_config) = match (&a.records, &a.schema, &a.items) {
        (Some(p), None, None) => (Source::Records(read_jsonl(p)?), None),
        (None, Some(s), Some(i)) => {
            let (config, schema) = load_schema(s)?;
            (Source::Task(schema, read_jsonl(i)?), Some(config))
        }
        _ => return Err(usage("pass either --records or --schema with --items")),
    };

    let eff = Effective {
        train: train.clone(),
        tagger: tagger_cfg,
        subsample: subsample_n,
        negatives,
        init: a.init.clone(),
        task: task_config,
    };
    let mut manifest = RunManifest::new("train", &eff, a.config.as_deref(), Some(seed))?;
    for p in [&a.records, &a.schema, &a.items, &a.init].into_iter().flatten() {
        manifest = manifest.input(p)?;
    }
    manifest.write(&manifest_path)?;

    let (examples, used): (Vec<TaggedExample>, usize) = match source {
        Source::Records(records) => {
            let records = match subsample_n {
                Some(k) => subsample(&records, k, seed).map_err(from_lib)?,
                None => records,
            };
            (distill_to_training(&records, negatives, seed), records.len())
        }
        Source::Task(schema, items) => {
            let items = match subsample_n {
                Some(k) => subsample(&items, k, seed).map_err(from_lib)?,
                None => items,
            };
            let set = to_training_examples(&schema, &items).map_err(from_lib)?;
            for s in &set.skipped {
                eprintln!("warning: {} `{}` skipped: {}", s.item_id, s.label, s.reason);
            }
            (set.examples, items.len())
        }
    };

    let tagger = init.unwrap_or_else(|| ToyTaggerF64::new(tagger_cfg));
    let (tagger, log) = fit_tagger(tagger, &examples, &train).map_err(from_lib)?;
    write_json(&a.run_dir.join("checkpoint.json"), &tagger.to_checkpoint())?;
    write_atomic(&a.run_dir.join("train_log.jsonl"), &to_jsonl(&log.batches)?)?;
    let summary = Summary {
        records_used: used,
        examples: examples.len(),
        batches: log.batch_count(),
        epochs: log.epochs(),
        first_loss: log.first_loss(),
        last_loss: log.last_loss(),
    };
    write_json(&a.run_dir.join("summary.json"), &summary)?;
    eprintln!(
        "trained on {} sentences ({} examples, {} batches); loss {:.4} -> {:.4}; run in {}",
        summary.records_used,
        summary.examples,
        summary.batches,
        summary.first_loss.unwrap_or(f64::NAN),
        summary.last_loss.unwrap_or(f64::NAN),
        a.run_dir.display()
    );
    Ok(())
}
