//! Writes a generated corpus, a mock-LLM lexicon and held-out NER splits
//! into a directory, for trying the `labelspan` CLI offline.
//!
//! cargo run -p labelspan --example toy_world -- <dir> [seed]

use std::fs;
use std::io::Write;
use std::path::PathBuf;

use labelspan::synthetic::{ToyWorld, NER_TYPES};
use labelspan::tasks::{TaskConfig, TaskItem};

fn write_items(path: PathBuf, items: &[TaskItem]) -> std::io::Result<()> {
    let mut f = fs::File::create(path)?;
    for it in items {
        writeln!(f, "{}", serde_json::to_string(it)?)?;
    }
    Ok(())
}

fn main() -> std::io::Result<()> {
    let mut args = std::env::args().skip(1);
    let dir = PathBuf::from(args.next().unwrap_or_else(|| "toy".into()));
    let seed: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(0);
    fs::create_dir_all(&dir)?;

    let world = ToyWorld::new(seed, 60);
    fs::write(dir.join("corpus.txt"), world.corpus(1500, seed).join("\n") + "\n")?;
    let lexicon: String = world.lexicon.iter().map(|e| format!("{}\t{}\n", e.llm_label, e.text)).collect();
    fs::write(dir.join("lexicon.tsv"), lexicon)?;
    write_items(dir.join("ner_train.jsonl"), &world.ner_dataset(300, seed + 100, "train-"))?;
    write_items(dir.join("ner_test.jsonl"), &world.ner_dataset(200, seed + 200, "test-"))?;
    let schema = TaskConfig::Ner { entity_types: NER_TYPES.iter().map(|s| s.to_string()).collect() };
    fs::write(dir.join("ner_schema.json"), serde_json::to_string_pretty(&schema)? + "\n")?;
    println!("wrote toy world {seed} to {}", dir.display());
    Ok(())
}
