use std::path::PathBuf;

use labelspan::codec::TaggedExample;
use labelspan::harness::{convert_causal, convert_seq2seq, distill_to_training};
use labelspan::synth::DistillRecord;
use labelspan::tasks::{to_training_examples, TaskItem};
use serde::Serialize;

use super::load_schema;
use crate::failure::{from_lib, usage, CmdResult};
use crate::files::{read_jsonl, sibling, to_jsonl, write_atomic};
use crate::manifest::RunManifest;

#[derive(Clone, Copy, clap::ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    /// `{"label","tokens","tags"}` prefix+BIO examples.
    Bio,
    /// `{"input","target"}` pairs.
    Seq2seq,
    /// `{"text","loss_range"}` samples.
    Causal,
}

#[derive(clap::Args)]
pub struct Args {
    /// JSONL of distillation records.
    #[arg(long, conflicts_with_all = ["schema", "items"], required_unless_present = "items")]
    records: Option<PathBuf>,
    /// Task configuration (TOML or JSON) for --items.
    #[arg(long, requires = "items")]
    schema: Option<PathBuf>,
    /// JSONL of gold task items.
    #[arg(long, requires = "schema")]
    items: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Bio)]
    format: Format,
    /// All-O examples with unrelated labels added per record.
    #[arg(long, default_value_t = 0)]
    negatives: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Serialize)]
struct Effective {
    format: Format,
    negatives: usize,
    seed: u64,
    schema: Option<serde_json::Value>,
}

pub fn run(a: Args) -> CmdResult {
    let (examples, manifest): (Vec<TaggedExample>, RunManifest) = match (&a.records, &a.schema, &a.items) {
        (Some(records_path), None, None) => {
            let records: Vec<DistillRecord> = read_jsonl(records_path)?;
            let eff = Effective { format: a.format, negatives: a.negatives, seed: a.seed, schema: None };
            let manifest = RunManifest::new("encode", eff, None, Some(a.seed))?.input(records_path)?;
            (distill_to_training(&records, a.negatives, a.seed), manifest)
        }
        (None, Some(schema_path), Some(items_path)) => {
            let (config, schema) = load_schema(schema_path)?;
            let items: Vec<TaskItem> = read_jsonl(items_path)?;
            let set = to_training_examples(&schema, &items).map_err(from_lib)?;
            for s in &set.skipped {
                eprintln!("warning: {} `{}` skipped: {}", s.item_id, s.label, s.reason);
            }
            let eff =
                Effective { format: a.format, negatives: 0, seed: a.seed, schema: serde_json::to_value(config).ok() };
            let manifest =
                RunManifest::new("encode", eff, None, Some(a.seed))?.input(schema_path)?.input(items_path)?;
            (set.examples, manifest)
        }
        _ => return Err(usage("pass either --records or --schema with --items")),
    };
    manifest.write(&sibling(&a.out, "manifest.json"))?;
    let bytes = match a.format {
        Format::Bio => to_jsonl(&examples)?,
        Format::Seq2seq => to_jsonl(&examples.iter().map(convert_seq2seq).collect::<Vec<_>>())?,
        Format::Causal => to_jsonl(&examples.iter().map(convert_causal).collect::<Vec<_>>())?,
    };
    write_atomic(&a.out, &bytes)?;
    eprintln!("{} examples -> {}", examples.len(), a.out.display());
    Ok(())
}
