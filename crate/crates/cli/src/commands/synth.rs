use std::path::{Path, PathBuf};
use std::time::Duration;

use labelspan::synth::{synthesize, LlmClient, RetryPolicy, RuleBasedLlm, SynthConfig, PROMPT_VERSION};
use serde::Serialize;

use super::load_file_config;
use crate::failure::{data, from_lib, upstream, usage, CmdResult};
use crate::files::{read_to_string, sibling, to_jsonl, write_atomic, write_json};
use crate::manifest::RunManifest;
use crate::openai::ChatClient;

#[derive(clap::Args)]
pub struct Args {
    /// Raw text, one paragraph per line.
    #[arg(long)]
    corpus: PathBuf,
    /// Output JSONL of distillation records.
    #[arg(long)]
    out: PathBuf,
    /// Number of sentences to annotate [default: 100].
    #[arg(long)]
    n: Option<usize>,
    /// Concurrent LLM requests [default: 4].
    #[arg(long)]
    parallelism: Option<usize>,
    /// Retries per request on transient failures [default: 3].
    #[arg(long)]
    max_retries: Option<u32>,
    /// Chat model name [default: gpt-3.5-turbo].
    #[arg(long)]
    model: Option<String>,
    /// Sampling temperature [default: 0].
    #[arg(long)]
    temperature: Option<f64>,
    /// Base URL of an OpenAI-compatible API [default: https://api.openai.com/v1].
    #[arg(long)]
    api_base: Option<String>,
    /// Environment variable holding the API key [default: OPENAI_API_KEY].
    #[arg(long)]
    api_key_env: Option<String>,
    /// Request timeout in seconds [default: 60].
    #[arg(long)]
    timeout_secs: Option<u64>,
    /// Corpus name used in sentence ids [default: corpus file stem].
    #[arg(long)]
    corpus_name: Option<String>,
    /// Use the offline rule-based annotator instead of an LLM.
    #[arg(long)]
    mock: bool,
    /// Tab-separated `label<TAB>phrase` lexicon for --mock. Without it the
    /// mock tags capitalized runs as Name and numerals as Number.
    #[arg(long, requires = "mock")]
    mock_lexicon: Option<PathBuf>,
    /// TOML or JSON config file (`[synth]` section).
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Serialize)]
struct Effective {
    n: usize,
    parallelism: usize,
    max_retries: u32,
    model: String,
    temperature: f64,
    api_base: String,
    api_key_env: String,
    timeout_secs: u64,
    corpus_name: String,
    mock: bool,
    mock_lexicon: Option<PathBuf>,
    prompt_version: &'static str,
}

fn resolve(a: &Args) -> CmdResult<Effective> {
    let file = load_file_config(a.config.as_deref())?.synth;
    let stem = a.corpus.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "corpus".into());
    let eff = Effective {
        n: a.n.or(file.n).unwrap_or(100),
        parallelism: a.parallelism.or(file.parallelism).unwrap_or(4),
        max_retries: a.max_retries.or(file.max_retries).unwrap_or(3),
        model: a.model.clone().or(file.model).unwrap_or_else(|| "gpt-3.5-turbo".into()),
        temperature: a.temperature.or(file.temperature).unwrap_or(0.0),
        api_base: a.api_base.clone().or(file.api_base).unwrap_or_else(|| "https://api.openai.com/v1".into()),
        api_key_env: a.api_key_env.clone().or(file.api_key_env).unwrap_or_else(|| "OPENAI_API_KEY".into()),
        timeout_secs: a.timeout_secs.or(file.timeout_secs).unwrap_or(60),
        corpus_name: a.corpus_name.clone().unwrap_or(stem),
        mock: a.mock,
        mock_lexicon: a.mock_lexicon.clone(),
        prompt_version: PROMPT_VERSION,
    };
    if eff.n == 0 || eff.parallelism == 0 {
        return Err(usage("--n and --parallelism must be positive"));
    }
    Ok(eff)
}

fn read_lexicon(path: &Path) -> CmdResult<RuleBasedLlm> {
    let text = read_to_string(path)?;
    let mut entries = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (label, phrase) = line
            .split_once('\t')
            .ok_or_else(|| data(format!("{}: line {}: expected `label<TAB>phrase`", path.display(), i + 1)))?;
        entries.push((label.trim().to_string(), phrase.trim().to_string()));
    }
    Ok(RuleBasedLlm::new(entries))
}

pub fn run(a: Args) -> CmdResult {
    let eff = resolve(&a)?;
    let client: Box<dyn LlmClient> = if eff.mock {
        match &eff.mock_lexicon {
            Some(p) => Box::new(read_lexicon(p)?),
            None => Box::new(RuleBasedLlm::heuristic()),
        }
    } else {
        let key = std::env::var(&eff.api_key_env)
            .ok()
            .filter(|k| !k.trim().is_empty())
            .ok_or_else(|| usage(format!("no API key in ${}; set it or pass --mock", eff.api_key_env)))?;
        Box::new(ChatClient::new(
            &eff.api_base,
            key,
            eff.model.clone(),
            eff.temperature,
            Duration::from_secs(eff.timeout_secs),
        ))
    };
    let text = read_to_string(&a.corpus)?;

    let mut manifest = RunManifest::new("synth", &eff, a.config.as_deref(), None)?.input(&a.corpus)?;
    if let Some(p) = &eff.mock_lexicon {
        manifest = manifest.input(p)?;
    }
    manifest.write(&sibling(&a.out, "manifest.json"))?;

    let config = SynthConfig {
        n: eff.n,
        parallelism: eff.parallelism,
        retry: RetryPolicy { max_retries: eff.max_retries, ..RetryPolicy::default() },
        corpus: eff.corpus_name.clone(),
    };
    let paragraphs = text.lines().filter(|l| !l.trim().is_empty());
    let output = synthesize(paragraphs, client.as_ref(), &config).map_err(from_lib)?;
    let diag = &output.diagnostics;
    if diag.sentences > 0 && diag.failed_requests == diag.sentences {
        return Err(upstream(format!("all {} LLM requests failed", diag.sentences)));
    }
    write_atomic(&a.out, &to_jsonl(&output.records)?)?;
    write_json(&sibling(&a.out, "diagnostics.json"), diag)?;
    eprintln!(
        "{} records ({} pairs kept, {} unaligned, drop rate {:.3}, {} failed requests) -> {}",
        output.records.len(),
        diag.pairs_kept,
        diag.pairs_unaligned,
        diag.drop_rate(),
        diag.failed_requests,
        a.out.display()
    );
    if diag.corpus_exhausted {
        eprintln!("warning: corpus exhausted after {} of {} sentences", diag.sentences, eff.n);
    }
    Ok(())
}
