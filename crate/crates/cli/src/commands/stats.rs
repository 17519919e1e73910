use std::path::PathBuf;

use labelspan::synth::{label_stats, DistillRecord};
use serde::Serialize;

use crate::failure::{data, CmdResult};
use crate::files::{read_jsonl, sibling, write_atomic};
use crate::manifest::RunManifest;

#[derive(Clone, Copy, clap::ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Text,
    Json,
}

#[derive(clap::Args)]
pub struct Args {
    /// JSONL of distillation records.
    #[arg(long)]
    dataset: PathBuf,
    /// Labels listed per bucket.
    #[arg(long, default_value_t = 10)]
    top_k: usize,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Also write the report (and a manifest) here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Serialize)]
struct Effective {
    top_k: usize,
    format: Format,
}

pub fn run(a: Args) -> CmdResult {
    let records: Vec<DistillRecord> = read_jsonl(&a.dataset)?;
    for (i, r) in records.iter().enumerate() {
        r.validate().map_err(|e| data(format!("{}: record {}: {e}", a.dataset.display(), i + 1)))?;
    }
    let stats = label_stats(&records, a.top_k);
    let report = match a.format {
        Format::Text => format!("{} records, {} labels\n{}", records.len(), stats.total(), stats.render()),
        Format::Json => serde_json::to_string_pretty(&stats).map_err(data)? + "\n",
    };
    print!("{report}");
    if let Some(out) = &a.out {
        RunManifest::new("stats", Effective { top_k: a.top_k, format: a.format }, None, None)?
            .input(&a.dataset)?
            .write(&sibling(out, "manifest.json"))?;
        write_atomic(out, report.as_bytes())?;
    }
    Ok(())
}
