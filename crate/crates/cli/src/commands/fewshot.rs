use std::path::PathBuf;

use labelspan::tasks::{fewshot_sample, FewShotRule, FewShotSpec, TaskItem, TaskKind};
use serde::Serialize;

use crate::failure::{from_lib, CmdResult};
use crate::files::{read_jsonl, sibling, to_jsonl, write_atomic};
use crate::manifest::RunManifest;

#[derive(clap::Args)]
pub struct Args {
    /// ner, re, ee, srl, absa or aste. Picks the standard sampling rule
    /// unless one of --k, --fraction, --count is given.
    #[arg(long)]
    task: TaskKind,
    /// JSONL of gold task items.
    #[arg(long)]
    data: PathBuf,
    /// Output JSONL subset, in dataset order.
    #[arg(long)]
    out: PathBuf,
    /// Sentences per label.
    #[arg(long, group = "rule")]
    k: Option<usize>,
    /// Fraction of the dataset, rounded up.
    #[arg(long, group = "rule")]
    fraction: Option<f64>,
    /// Fixed number of sentences.
    #[arg(long, group = "rule")]
    count: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Serialize)]
struct Effective {
    spec: FewShotSpec,
}

pub fn run(a: Args) -> CmdResult {
    let items: Vec<TaskItem> = read_jsonl(&a.data)?;
    let spec = match (a.k, a.fraction, a.count) {
        (Some(k), _, _) => FewShotSpec::new(a.task, FewShotRule::PerLabel { k }, a.seed),
        (_, Some(p), _) => FewShotSpec::new(a.task, FewShotRule::Fraction { p }, a.seed),
        (_, _, Some(m)) => FewShotSpec::new(a.task, FewShotRule::Absolute { m }, a.seed),
        _ => Ok(FewShotSpec::standard(a.task, a.seed)),
    }
    .map_err(from_lib)?;
    RunManifest::new("fewshot", Effective { spec }, None, Some(a.seed))?
        .input(&a.data)?
        .write(&sibling(&a.out, "manifest.json"))?;
    let sample = fewshot_sample(&items, &spec).map_err(from_lib)?;
    for w in &sample.warnings {
        eprintln!("warning: {w}");
    }
    write_atomic(&a.out, &to_jsonl(&sample.items(&items))?)?;
    eprintln!("{} of {} sentences -> {}", sample.indices.len(), items.len(), a.out.display());
    Ok(())
}
