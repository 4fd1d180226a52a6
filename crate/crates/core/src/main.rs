//! Command-line entry point wiring the pipeline:
//! extract -> split -> select -> prompts -> run -> score -> compare -> report.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};

use sumbench::config::RunConfig;
use sumbench::corpus::{corpus_stats, select_eval_set, split_corpus, MethodRecord};
use sumbench::error::{Error, Result};
use sumbench::gateway::{
    build_prompt, run_sweep, AsapContext, CompletionProvider, FieldMapping, GenerationRecord,
    HttpProvider, MockProvider, ReplayProvider, RequestSettings, RunLog, RunStatus, SweepPlan,
};
use sumbench::jsonl::{read_jsonl, write_jsonl};
use sumbench::metrics::{HashEmbedder, ScoreProviders};
use sumbench::metrics::{Embedder, ExternalScorer, HttpEmbedder};
use sumbench::pipeline::{
    build_report, file_hash, mine_corpus, records_by_id, score_generations, tree_hash,
    write_manifest,
};
use sumbench::prompt::PromptStrategy;
use sumbench::report::ReportFormat;
use sumbench::retrieval::{build_index, Bm25Index};

#[derive(Parser)]
#[command(
    name = "sumbench",
    version,
    about = "Benchmark LLM-generated Java method summaries against developer-written Javadoc"
)]
struct Cli {
    /// TOML config file; command-line flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Scan a Java source tree and write a method corpus (JSONL).
    Extract(ExtractArgs),
    /// Split a corpus into train and eval partitions.
    Split(SplitArgs),
    /// Filter and sample the evaluation subset (LOC filter, random sample).
    Select(SelectArgs),
    /// Render prompts for audit without calling any endpoint.
    Prompts(PromptsArgs),
    /// Generate summaries for a corpus with the configured provider.
    Run(RunArgs),
    /// Score a run file against ground-truth summaries.
    Score(ScoreArgs),
    /// One-sided significance tests: candidate prompt vs baseline.
    Compare(CompareArgs),
    /// Render aggregate/winner/masking reports from a scores file.
    Report(ReportArgs),
    /// Corpus statistics (LOC, classes, methods, methods with Javadoc).
    Stats(StatsArgs),
}

#[derive(Args)]
struct ExtractArgs {
    /// Source tree root.
    #[arg(long)]
    src: PathBuf,
    /// Output corpus path (JSONL, one method per line).
    #[arg(long)]
    out: PathBuf,
    /// Keep only methods with a leading Javadoc whose summary is non-empty.
    #[arg(long)]
    require_javadoc: bool,
    /// Include globs (default **/*.java).
    #[arg(long)]
    include: Vec<String>,
    /// Exclude globs.
    #[arg(long)]
    exclude: Vec<String>,
}

#[derive(Args)]
struct SplitArgs {
    #[arg(long)]
    corpus: PathBuf,
    /// Train fraction in (0,1).
    #[arg(long)]
    ratio: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    train_out: PathBuf,
    #[arg(long)]
    eval_out: PathBuf,
}

#[derive(Args)]
struct SelectArgs {
    /// Eval partition to filter and sample.
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    min_loc: Option<usize>,
    #[arg(long)]
    sample: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PromptsArgs {
    #[arg(long)]
    corpus: PathBuf,
    /// Train corpus for exemplar retrieval (required for asap).
    #[arg(long)]
    train: Option<PathBuf>,
    /// "all" or comma-separated strategy names.
    #[arg(long, default_value = "all")]
    strategy: String,
    /// on, off, or both.
    #[arg(long, default_value = "off")]
    masked: String,
    #[arg(long)]
    exemplars: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    train: Option<PathBuf>,
    #[arg(long, default_value = "all")]
    strategy: String,
    /// on, off, or both.
    #[arg(long)]
    masked: Option<String>,
    /// mock, http, or replay.
    #[arg(long)]
    provider: Option<String>,
    /// Chat/completion endpoint URL (http provider).
    #[arg(long)]
    endpoint: Option<String>,
    #[arg(long)]
    model: Option<String>,
    /// Environment variable holding the bearer token.
    #[arg(long)]
    auth_env: Option<String>,
    /// Request style: chat or completion.
    #[arg(long)]
    style: Option<String>,
    /// Dot path to the completion text in the response.
    #[arg(long)]
    response_path: Option<String>,
    #[arg(long)]
    concurrency: Option<usize>,
    #[arg(long)]
    max_tokens: Option<u32>,
    #[arg(long)]
    temperature: Option<f64>,
    #[arg(long)]
    timeout_ms: Option<u64>,
    #[arg(long)]
    retries: Option<u32>,
    #[arg(long)]
    exemplars: Option<usize>,
    /// Replay fixture (replay provider).
    #[arg(long)]
    replay_file: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ScoreArgs {
    /// Run file produced by `run`.
    #[arg(long)]
    run: PathBuf,
    /// Corpus holding the ground-truth summaries.
    #[arg(long)]
    corpus: PathBuf,
    /// none, stub, or an embedding endpoint URL.
    #[arg(long, default_value = "none")]
    embedder: String,
    #[arg(long, default_value = "minilm")]
    embedder_model: String,
    #[arg(long, default_value = "data.0.embedding")]
    embedder_path: String,
    #[arg(long)]
    embedder_auth_env: Option<String>,
    /// External scorer endpoint URL (BERTScore / BLEU-RT adapter).
    #[arg(long)]
    scorer: Option<String>,
    #[arg(long)]
    scorer_auth_env: Option<String>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CompareArgs {
    #[arg(long)]
    scores: PathBuf,
    #[arg(long, default_value = "asap")]
    baseline: String,
    #[arg(long, default_value = "wordrestrict")]
    candidate: String,
    /// Optional JSON output path.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long)]
    scores: PathBuf,
    /// Comma-separated subset of md,csv,json.
    #[arg(long, default_value = "md,csv,json")]
    format: String,
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long)]
    baseline: Option<String>,
    #[arg(long)]
    candidate: Option<String>,
}

#[derive(Args)]
struct StatsArgs {
    #[arg(long)]
    corpus: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config = match cli.config.as_deref().map(RunConfig::load).transpose() {
        Ok(config) => config.unwrap_or_default(),
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match dispatch(cli.command, &config) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn dispatch(command: Command, config: &RunConfig) -> Result<()> {
    match command {
        Command::Extract(args) => cmd_extract(args, config),
        Command::Split(args) => cmd_split(args, config),
        Command::Select(args) => cmd_select(args, config),
        Command::Prompts(args) => cmd_prompts(args, config),
        Command::Run(args) => cmd_run(args, config),
        Command::Score(args) => cmd_score(args),
        Command::Compare(args) => cmd_compare(args),
        Command::Report(args) => cmd_report(args),
        Command::Stats(args) => cmd_stats(args),
    }
}

fn load_corpus(path: &Path) -> Result<Vec<MethodRecord>> {
    if !path.exists() {
        return Err(Error::Config(format!(
            "corpus file {} does not exist",
            path.display()
        )));
    }
    read_jsonl(path)
}

fn parse_strategies(spec: &str) -> Result<Vec<PromptStrategy>> {
    if spec == "all" {
        return Ok(PromptStrategy::ALL.to_vec());
    }
    spec.split(',')
        .map(|name| {
            PromptStrategy::parse(name.trim())
                .ok_or_else(|| Error::Config(format!("unknown strategy {name:?}")))
        })
        .collect()
}

fn parse_masked(spec: &str) -> Result<Vec<bool>> {
    match spec {
        "off" => Ok(vec![false]),
        "on" => Ok(vec![true]),
        "both" => Ok(vec![false, true]),
        other => Err(Error::Config(format!(
            "masked must be on, off, or both; got {other:?}"
        ))),
    }
}

fn cmd_extract(args: ExtractArgs, config: &RunConfig) -> Result<()> {
    let include = if args.include.is_empty() {
        config.source.include.clone()
    } else {
        args.include.clone()
    };
    let exclude = if args.exclude.is_empty() {
        config.source.exclude.clone()
    } else {
        args.exclude.clone()
    };
    let outcome = mine_corpus(&args.src, &include, &exclude, args.require_javadoc)?;
    write_jsonl(&args.out, &outcome.records)?;
    write_manifest(
        &args.out,
        "extract",
        &format!(
            "src={} require_javadoc={} include={include:?} exclude={exclude:?}",
            args.src.display(),
            args.require_javadoc
        ),
        &[("src_tree", tree_hash(&args.src)?), ("corpus", file_hash(&args.out)?)],
    )?;
    eprintln!(
        "extracted {} methods from {} files ({} unreadable, {} unparsed) -> {}",
        outcome.records.len(),
        outcome.files_total,
        outcome.files_unreadable,
        outcome.files_skipped,
        args.out.display()
    );
    Ok(())
}

fn cmd_split(args: SplitArgs, config: &RunConfig) -> Result<()> {
    let records = load_corpus(&args.corpus)?;
    let ratio = args.ratio.unwrap_or(config.split.ratio);
    let seed = args.seed.unwrap_or(config.split.seed);
    let partition = split_corpus(records, ratio, seed)?;
    write_jsonl(&args.train_out, &partition.train)?;
    write_jsonl(&args.eval_out, &partition.eval)?;
    let config_repr = format!("ratio={ratio} seed={seed}");
    write_manifest(
        &args.train_out,
        "split",
        &config_repr,
        &[
            ("corpus", file_hash(&args.corpus)?),
            ("train", file_hash(&args.train_out)?),
            ("eval", file_hash(&args.eval_out)?),
        ],
    )?;
    eprintln!(
        "split {} train / {} eval (ratio {ratio}, seed {seed})",
        partition.train.len(),
        partition.eval.len()
    );
    Ok(())
}

fn cmd_select(args: SelectArgs, config: &RunConfig) -> Result<()> {
    let records = load_corpus(&args.corpus)?;
    let min_loc = args.min_loc.unwrap_or(config.select.min_loc);
    let sample = args.sample.unwrap_or(config.select.sample_size);
    let seed = args.seed.unwrap_or(config.select.seed);
    let selected = select_eval_set(records, min_loc, sample, seed)?;
    write_jsonl(&args.out, &selected)?;
    write_manifest(
        &args.out,
        "select",
        &format!("min_loc={min_loc} sample={sample} seed={seed}"),
        &[
            ("corpus", file_hash(&args.corpus)?),
            ("selected", file_hash(&args.out)?),
        ],
    )?;
    eprintln!("selected {} methods -> {}", selected.len(), args.out.display());
    Ok(())
}

/// Retrieval context pieces for strategies that include asap.
struct AsapParts {
    index: Bm25Index,
    train_by_id: BTreeMap<String, MethodRecord>,
}

fn asap_parts(
    strategies: &[PromptStrategy],
    train: Option<&PathBuf>,
) -> Result<Option<AsapParts>> {
    if !strategies.contains(&PromptStrategy::Asap) {
        return Ok(None);
    }
    let train_path = train.ok_or_else(|| {
        Error::Config("--train is required when the asap strategy is selected".into())
    })?;
    let train_records = load_corpus(train_path)?;
    Ok(Some(AsapParts {
        index: build_index(&train_records)?,
        train_by_id: records_by_id(&train_records),
    }))
}

fn cmd_prompts(args: PromptsArgs, config: &RunConfig) -> Result<()> {
    let records = load_corpus(&args.corpus)?;
    let strategies = parse_strategies(&args.strategy)?;
    let masked_modes = parse_masked(&args.masked)?;
    let exemplars = args.exemplars.unwrap_or(config.run.exemplars);
    let parts = asap_parts(&strategies, args.train.as_ref())?;
    let log = RunLog::default();

    let mut prompts = Vec::new();
    for method in &records {
        for &strategy in &strategies {
            for &masked in &masked_modes {
                let context = parts.as_ref().map(|p| AsapContext {
                    index: &p.index,
                    train_by_id: &p.train_by_id,
                    exemplar_count: exemplars,
                });
                prompts.push(build_prompt(method, strategy, masked, context.as_ref(), &log));
            }
        }
    }
    write_jsonl(&args.out, &prompts)?;
    write_manifest(
        &args.out,
        "prompts",
        &format!("strategy={} masked={} exemplars={exemplars}", args.strategy, args.masked),
        &[
            ("corpus", file_hash(&args.corpus)?),
            ("prompts", file_hash(&args.out)?),
        ],
    )?;
    eprintln!("rendered {} prompts -> {}", prompts.len(), args.out.display());
    Ok(())
}

fn cmd_run(args: RunArgs, config: &RunConfig) -> Result<()> {
    let records = load_corpus(&args.corpus)?;
    let strategies = parse_strategies(&args.strategy)?;
    let masked_modes = parse_masked(args.masked.as_deref().unwrap_or(&config.run.masked))?;
    let exemplars = args.exemplars.unwrap_or(config.run.exemplars);
    let provider_kind = args
        .provider
        .clone()
        .unwrap_or_else(|| config.run.provider.clone());

    let settings = RequestSettings {
        model_name: args.model.clone().unwrap_or_else(|| config.run.model.clone()),
        temperature: args.temperature.unwrap_or(config.run.temperature),
        max_tokens: args.max_tokens.unwrap_or(config.run.max_tokens),
        stop_sequences: Vec::new(),
        timeout: Duration::from_millis(args.timeout_ms.unwrap_or(config.run.timeout_ms)),
        retries: args.retries.unwrap_or(config.run.retries),
    };

    let provider: Box<dyn CompletionProvider> = match provider_kind.as_str() {
        "mock" => Box::new(MockProvider),
        "replay" => {
            let path = args.replay_file.as_ref().ok_or_else(|| {
                Error::Config("--replay-file is required with the replay provider".into())
            })?;
            Box::new(ReplayProvider::load(path)?)
        }
        "http" => {
            let url = args
                .endpoint
                .clone()
                .or_else(|| {
                    (!config.endpoint.url.is_empty()).then(|| config.endpoint.url.clone())
                })
                .ok_or_else(|| {
                    Error::Config("--endpoint is required with the http provider".into())
                })?;
            let auth_env = args
                .auth_env
                .clone()
                .unwrap_or_else(|| config.endpoint.auth_env.clone());
            let auth_token = if auth_env.is_empty() {
                None
            } else {
                HttpProvider::auth_from_env(&auth_env)
            };
            let mut mapping = FieldMapping::default();
            if let Some(style) = args.style.clone().or_else(|| {
                (!config.endpoint.style.is_empty()).then(|| config.endpoint.style.clone())
            }) {
                mapping.style = style;
            }
            if let Some(path) = args.response_path.clone().or_else(|| {
                (!config.endpoint.response_path.is_empty())
                    .then(|| config.endpoint.response_path.clone())
            }) {
                mapping.response_path = path;
            }
            let mut provider = HttpProvider::new(url, auth_token);
            provider.mapping = mapping;
            Box::new(provider)
        }
        other => {
            return Err(Error::Config(format!(
                "provider must be mock, http, or replay; got {other:?}"
            )))
        }
    };

    let parts = asap_parts(&strategies, args.train.as_ref())?;
    let context = parts.as_ref().map(|p| AsapContext {
        index: &p.index,
        train_by_id: &p.train_by_id,
        exemplar_count: exemplars,
    });
    let log = RunLog::default();
    let generations = run_sweep(
        &records,
        &SweepPlan {
            strategies: &strategies,
            masked_modes: &masked_modes,
            concurrency: args.concurrency.unwrap_or(config.run.concurrency),
        },
        provider.as_ref(),
        &settings,
        context.as_ref(),
        &log,
    )?;

    write_jsonl(&args.out, &generations)?;
    write_manifest(
        &args.out,
        "run",
        &format!(
            "strategy={} masked={masked_modes:?} provider={provider_kind} model={} exemplars={exemplars}",
            args.strategy, settings.model_name
        ),
        &[
            ("corpus", file_hash(&args.corpus)?),
            ("run", file_hash(&args.out)?),
        ],
    )?;
    let ok = generations
        .iter()
        .filter(|g| g.status == RunStatus::Ok)
        .count();
    eprintln!(
        "ran {} generations ({ok} ok, {} failed; {} facts fallbacks, {} zero-exemplar prompts) -> {}",
        generations.len(),
        generations.len() - ok,
        log.facts_fallbacks.load(std::sync::atomic::Ordering::Relaxed),
        log.zero_exemplar_prompts.load(std::sync::atomic::Ordering::Relaxed),
        args.out.display()
    );
    Ok(())
}

fn cmd_score(args: ScoreArgs) -> Result<()> {
    let generations: Vec<GenerationRecord> = read_jsonl(&args.run)?;
    let corpus = load_corpus(&args.corpus)?;
    let truth_by_id = records_by_id(&corpus);

    let embedder: Option<Box<dyn Embedder>> = match args.embedder.as_str() {
        "none" => None,
        "stub" => Some(Box::new(HashEmbedder::default())),
        url => Some(Box::new(HttpEmbedder {
            url: url.to_string(),
            model: args.embedder_model.clone(),
            auth_token: args
                .embedder_auth_env
                .as_deref()
                .and_then(HttpProvider::auth_from_env),
            response_path: args.embedder_path.clone(),
            timeout: Duration::from_secs(60),
        })),
    };
    let scorer = args.scorer.as_ref().map(|url| ExternalScorer {
        url: url.clone(),
        auth_token: args
            .scorer_auth_env
            .as_deref()
            .and_then(HttpProvider::auth_from_env),
        timeout: Duration::from_secs(60),
    });
    let providers = ScoreProviders {
        embedder: embedder.as_deref(),
        scorer: scorer.as_ref(),
    };

    let (rows, warnings, unknown) = score_generations(&generations, &truth_by_id, &providers);
    write_jsonl(&args.out, &rows)?;
    write_manifest(
        &args.out,
        "score",
        &format!("embedder={} scorer={:?}", args.embedder, args.scorer),
        &[
            ("run", file_hash(&args.run)?),
            ("corpus", file_hash(&args.corpus)?),
            ("scores", file_hash(&args.out)?),
        ],
    )?;
    eprintln!(
        "scored {} records ({} skipped failed, {} unknown methods, {} scorer failures) -> {}",
        rows.len(),
        warnings.skipped_failed,
        unknown,
        warnings.scorer_failures,
        args.out.display()
    );
    Ok(())
}

fn cmd_compare(args: CompareArgs) -> Result<()> {
    let rows: Vec<sumbench::metrics::ScoreRow> = read_jsonl(&args.scores)?;
    let comparisons = sumbench::stats::compare_prompts(&rows, &args.baseline, &args.candidate)?;
    println!("metric        t-stat    t-p       KS D+    KS-p");
    for c in &comparisons {
        println!(
            "{:<12} {:>8.4} {:>9.6} {:>8.4} {:>9.6}",
            c.metric_name, c.t.statistic, c.t.p_value, c.ks.statistic, c.ks.p_value
        );
    }
    if let Some(out) = &args.out {
        let mut json = serde_json::to_string_pretty(&comparisons)?;
        json.push('\n');
        std::fs::write(out, json).map_err(|e| Error::io(out, e))?;
        write_manifest(
            out,
            "compare",
            &format!("baseline={} candidate={}", args.baseline, args.candidate),
            &[("scores", file_hash(&args.scores)?)],
        )?;
    }
    Ok(())
}

fn cmd_report(args: ReportArgs) -> Result<()> {
    let rows: Vec<sumbench::metrics::ScoreRow> = read_jsonl(&args.scores)?;
    let formats: Vec<ReportFormat> = args
        .format
        .split(',')
        .map(|f| {
            ReportFormat::parse(f.trim())
                .ok_or_else(|| Error::Config(format!("unknown report format {f:?}")))
        })
        .collect::<Result<_>>()?;
    let report = build_report(&rows, args.baseline.as_deref(), args.candidate.as_deref());
    let written = report.render_report(&formats, &args.out_dir)?;
    write_manifest(
        &args.out_dir.join("report"),
        "report",
        &format!(
            "format={} baseline={:?} candidate={:?}",
            args.format, args.baseline, args.candidate
        ),
        &[("scores", file_hash(&args.scores)?)],
    )?;
    for path in written {
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}

fn cmd_stats(args: StatsArgs) -> Result<()> {
    let records = load_corpus(&args.corpus)?;
    let stats = corpus_stats(&records);
    let mut json = serde_json::to_string_pretty(&stats)?;
    json.push('\n');
    print!("{json}");
    Ok(())
}
