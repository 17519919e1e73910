use std::path::PathBuf;

use labelspan::eval::{predict_dataset, score_dataset, EvalMode, EvalReport};
use labelspan::harness::{LookupTagger, Tagger, ToyCheckpoint};
use labelspan::tasks::{to_training_examples, TaskConfig, TaskItem, TaskTuple};
use labelspan::ToyTaggerF64;
use serde::Serialize;

use super::load_schema;
use crate::failure::{data, from_lib, usage, CmdResult};
use crate::files::{read_jsonl, read_to_string, sibling, to_jsonl, write_atomic};
use crate::manifest::RunManifest;

#[derive(Clone, Copy, clap::ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Json,
    Table,
    Csv,
}

#[derive(clap::Args)]
pub struct Args {
    /// Task configuration (TOML or JSON).
    #[arg(long)]
    schema: PathBuf,
    /// JSONL of gold task items.
    #[arg(long)]
    data: PathBuf,
    /// Tagger checkpoint from `labelspan train`.
    #[arg(long, required_unless_present = "oracle", conflicts_with = "oracle")]
    checkpoint: Option<PathBuf>,
    /// Score a tagger that answers every gold query correctly (sanity check).
    #[arg(long)]
    oracle: bool,
    /// full, re-entity, re-relation, ee-trigger-unlabeled or ee-argument-unlabeled.
    #[arg(long, default_value = "full")]
    mode: EvalMode,
    /// Report file.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Also write predicted tuples, one JSON array per sentence.
    #[arg(long)]
    predictions: Option<PathBuf>,
    /// Run name in the first CSV column [default: report file stem].
    #[arg(long)]
    run_name: Option<String>,
}

#[derive(Serialize)]
struct Effective {
    task: TaskConfig,
    mode: EvalMode,
    format: Format,
    tagger: String,
}

pub fn run(a: Args) -> CmdResult {
    let (task, schema) = load_schema(&a.schema)?;
    if !a.mode.supports(schema.task) {
        return Err(usage(format!("mode `{}` does not apply to task `{}`", a.mode, schema.task)));
    }
    let items: Vec<TaskItem> = read_jsonl(&a.data)?;
    let tagger: Box<dyn Tagger<f64> + Sync> = match &a.checkpoint {
        Some(p) => {
            let ckpt: ToyCheckpoint =
                serde_json::from_str(&read_to_string(p)?).map_err(|e| data(format!("{}: {e}", p.display())))?;
            Box::new(ToyTaggerF64::from_checkpoint(&ckpt).map_err(from_lib)?)
        }
        None => Box::new(LookupTagger::new(&to_training_examples(&schema, &items).map_err(from_lib)?.examples)),
    };

    let tagger_name = match &a.checkpoint {
        Some(p) => p.display().to_string(),
        None => "oracle".into(),
    };
    let mut manifest =
        RunManifest::new("eval", Effective { task, mode: a.mode, format: a.format, tagger: tagger_name }, None, None)?
            .input(&a.schema)?
            .input(&a.data)?;
    if let Some(p) = &a.checkpoint {
        manifest = manifest.input(p)?;
    }
    manifest.write(&sibling(&a.out, "manifest.json"))?;

    let preds: Vec<Vec<TaskTuple>> = predict_dataset::<f64, _>(&schema, tagger.as_ref(), &items).map_err(from_lib)?;
    let report: EvalReport<f64> = score_dataset(&items, &preds, a.mode).map_err(from_lib)?;
    let run_name = a
        .run_name
        .clone()
        .unwrap_or_else(|| a.out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default());
    let body = match a.format {
        Format::Json => serde_json::to_string_pretty(&report).map_err(data)? + "\n",
        Format::Table => report.render_table(),
        Format::Csv => report.to_csv(&run_name, true),
    };
    if let Some(p) = &a.predictions {
        write_atomic(p, &to_jsonl(&preds)?)?;
    }
    write_atomic(&a.out, body.as_bytes())?;
    print!("{}", report.render_table());
    Ok(())
}
