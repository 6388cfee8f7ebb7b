use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use chartthinker::chart::{parse_chart_spec, render_linearized_table, render_token_stream, ChartSpec, NoiseConfig};
use chartthinker::cot::{Pipeline, PipelineError, StagePlan, SummaryResult};
use chartthinker::dataset::{self, CorpusManifest, DEFAULT_RATIOS};
use chartthinker::embedding::{normalize, ChartEmbedder, HashingEmbedder, DEFAULT_DIM};
use chartthinker::evaluation::{self, MetricReport};
use chartthinker::generation::{GenerationParams, Generator, TemplateGenerator};
use chartthinker::http::{HttpConfig, HttpGenerator, DEFAULT_MAX_IN_FLIGHT, DEFAULT_TIMEOUT_SECS};
use chartthinker::parsing::{fuse_extractions, to_prompt_block, ParsedChart};
use chartthinker::retrieval::{build_library, ContextLibrary, Stage};
use chartthinker::rng::SplitMix64;

const EXIT_USAGE: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_GENERATION: u8 = 3;

#[derive(Parser)]
#[command(
    name = "chartthinker",
    version,
    about = "Chart summarization with staged retrieval-augmented prompting"
)]
struct Cli {
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Print machine-readable JSON on stdout.
    #[arg(long, global = true)]
    json: bool,
    /// Write the command's result document here.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate extraction on a chart spec and print the fused parse.
    Parse {
        spec: PathBuf,
        #[command(flatten)]
        noise: NoiseArgs,
    },
    /// Embed library entries (JSON lines) into a retrieval library.
    BuildLibrary {
        entries: PathBuf,
        #[arg(long, default_value_t = DEFAULT_DIM)]
        dim: usize,
    },
    /// Rank one stage of a library against a chart.
    Retrieve {
        #[arg(long)]
        library: PathBuf,
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        stage: Stage,
        #[arg(long, default_value_t = 3)]
        k: usize,
    },
    /// Summarize one chart or every chart of a manifest.
    Summarize(SummarizeArgs),
    /// Score an evaluation manifest, per system.
    Evaluate { manifest: PathBuf },
    /// Corpus tools.
    Dataset {
        #[command(subcommand)]
        command: DatasetCommand,
    },
}

#[derive(Args)]
struct NoiseArgs {
    #[arg(long, default_value_t = 0.0)]
    noise_prob: f64,
    #[arg(long, default_value_t = 0.0)]
    noise_scale: f64,
    #[arg(long, default_value_t = 0.0)]
    drop_prob: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum GeneratorChoice {
    Mock,
    Http,
}

#[derive(Args)]
struct SummarizeArgs {
    #[arg(long, conflicts_with = "manifest", required_unless_present = "manifest")]
    spec: Option<PathBuf>,
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[arg(long)]
    library: PathBuf,
    #[arg(long, default_value_t = 3)]
    top_k: usize,
    /// Comma-separated stage order.
    #[arg(long, value_delimiter = ',', default_values_t = Stage::ALL)]
    stages: Vec<Stage>,
    /// Run stages that have no library examples without context.
    #[arg(long)]
    skippable: bool,
    #[arg(long, value_enum, default_value = "mock")]
    generator: GeneratorChoice,
    #[arg(long)]
    endpoint: Option<String>,
    #[arg(long, default_value = "default")]
    model: String,
    #[arg(long, default_value_t = DEFAULT_TIMEOUT_SECS)]
    gen_timeout_secs: u64,
    #[arg(long, default_value_t = DEFAULT_MAX_IN_FLIGHT as u64, value_parser = clap::value_parser!(u64).range(1..))]
    concurrency: u64,
    #[arg(long, default_value_t = 512)]
    max_tokens: u32,
    #[arg(long, default_value_t = 0.0)]
    temperature: f64,
}

#[derive(Subcommand)]
enum DatasetCommand {
    /// Write a synthetic corpus (charts/, manifest.jsonl, library_entries.jsonl) into --out.
    Gen {
        #[arg(long, default_value_t = 100)]
        count: usize,
    },
    /// Assign train/val/test splits.
    Split {
        manifest: PathBuf,
        #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_RATIOS)]
        ratios: Vec<f64>,
    },
    /// Check summaries and chart paths.
    Validate {
        manifest: PathBuf,
        /// Directory chart paths are relative to; defaults to the manifest's.
        #[arg(long)]
        base: Option<PathBuf>,
    },
}

struct Failure {
    code: u8,
    error: anyhow::Error,
}

type Outcome<T> = Result<T, Failure>;

trait Classify<T> {
    fn input(self) -> Outcome<T>;
    fn generation(self) -> Outcome<T>;
}

impl<T, E: Into<anyhow::Error>> Classify<T> for Result<T, E> {
    fn input(self) -> Outcome<T> {
        self.map_err(|e| Failure {
            code: EXIT_INPUT,
            error: e.into(),
        })
    }
    fn generation(self) -> Outcome<T> {
        self.map_err(|e| Failure {
            code: EXIT_GENERATION,
            error: e.into(),
        })
    }
}

struct Output<'a> {
    json: bool,
    out: Option<&'a Path>,
}

impl Output<'_> {
    /// `document` goes to --out and, with --json, to stdout; otherwise
    /// stdout gets `human`.
    fn emit(&self, document: &str, human: impl FnOnce() -> String) -> Outcome<()> {
        if let Some(path) = self.out {
            std::fs::write(path, document)
                .with_context(|| format!("writing {}", path.display()))
                .input()?;
        }
        let mut stdout = std::io::stdout().lock();
        let text = if self.json { document.to_string() } else { human() };
        if !text.is_empty() {
            let _ = writeln!(stdout, "{}", text.trim_end());
        }
        Ok(())
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("serializable output")
}

fn read_spec(path: &Path) -> Outcome<ChartSpec> {
    let bytes = std::fs::read(path)
        .with_context(|| format!("reading {}", path.display()))
        .input()?;
    parse_chart_spec(&bytes)
        .with_context(|| format!("parsing {}", path.display()))
        .input()
}

fn parse_spec(spec: &ChartSpec, noise: &NoiseConfig, seed: u64) -> ParsedChart {
    let tokens = render_token_stream(spec, noise, seed);
    let table = render_linearized_table(spec, noise, seed);
    fuse_extractions(&tokens, &table).with_chart_type(spec.chart_type)
}

fn open(path: &Path) -> Outcome<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .with_context(|| format!("opening {}", path.display()))
        .input()
}

fn read_library(path: &Path) -> Outcome<ContextLibrary> {
    ContextLibrary::read_jsonl(open(path)?)
        .with_context(|| format!("loading library {}", path.display()))
        .input()
}

fn cmd_parse(spec: &Path, noise: &NoiseArgs, seed: u64, out: &Output) -> Outcome<()> {
    let noise = NoiseConfig::new(noise.noise_prob, noise.noise_scale, noise.drop_prob).input()?;
    let spec = read_spec(spec)?;
    let parsed = parse_spec(&spec, &noise, seed);
    out.emit(&parsed.to_json(), || to_prompt_block(&parsed))
}

fn cmd_build_library(entries: &Path, dim: usize, out: &Output) -> Outcome<()> {
    let entries = dataset::read_library_entries(open(entries)?).input()?;
    let embedder = HashingEmbedder::new(dim).input()?;
    let lib = build_library(&entries, &embedder).input()?;
    let mut buf = Vec::new();
    lib.write_jsonl(&mut buf).input()?;
    let doc = String::from_utf8(buf).expect("utf-8");
    out.emit(&doc, || {
        let per_stage: Vec<String> = Stage::ALL
            .iter()
            .map(|s| format!("{s}={}", lib.stage_len(*s)))
            .collect();
        format!(
            "library: {} examples, dim {} ({})",
            lib.len(),
            lib.dim(),
            per_stage.join(", ")
        )
    })
}

#[derive(Serialize)]
struct RankedRow {
    rank: usize,
    id: String,
    similarity: f64,
    weight: f64,
    text: String,
}

fn cmd_retrieve(library: &Path, spec: &Path, stage: Stage, k: usize, seed: u64, out: &Output) -> Outcome<()> {
    let lib = read_library(library)?;
    let spec = read_spec(spec)?;
    let parsed = parse_spec(&spec, &NoiseConfig::NONE, seed);
    let embedder = HashingEmbedder::new(lib.dim()).input()?;
    let query = normalize(&embedder.embed_chart(&parsed, Some(spec.chart_type))).input()?;
    let ranked = lib.retrieve_top_k(stage, &query, k).input()?;
    let rows: Vec<RankedRow> = ranked
        .into_iter()
        .map(|r| RankedRow {
            rank: r.rank,
            id: r.example.id,
            similarity: r.similarity,
            weight: r.weight,
            text: r.example.example_text,
        })
        .collect();
    out.emit(&to_json(&rows), || {
        rows.iter()
            .map(|r| format!("{:>3}  {:.4}  {}  {}", r.rank, r.similarity, r.id, r.text))
            .collect::<Vec<_>>()
            .join("\n")
    })
}

fn build_generator(args: &SummarizeArgs) -> Outcome<Box<dyn Generator>> {
    match args.generator {
        GeneratorChoice::Mock => Ok(Box::new(TemplateGenerator::new())),
        GeneratorChoice::Http => {
            let endpoint = args.endpoint.clone().ok_or_else(|| Failure {
                code: EXIT_USAGE,
                error: anyhow!("--generator http requires --endpoint"),
            })?;
            let mut cfg = HttpConfig::new(endpoint, args.model.clone());
            cfg.timeout = Duration::from_secs(args.gen_timeout_secs);
            cfg.max_in_flight = args.concurrency as usize;
            Ok(Box::new(HttpGenerator::new(cfg).generation()?))
        }
    }
}

fn pipeline_failure(e: PipelineError) -> Failure {
    let code = match e {
        PipelineError::GenerationFailed { .. } | PipelineError::EmptyOutput(_) => EXIT_GENERATION,
        _ => EXIT_INPUT,
    };
    Failure { code, error: e.into() }
}

fn cmd_summarize(args: &SummarizeArgs, seed: u64, out: &Output) -> Outcome<()> {
    let lib = read_library(&args.library)?;
    let params = GenerationParams {
        max_tokens: args.max_tokens,
        temperature: args.temperature,
        seed,
    };
    params.validate().input()?;
    let plan = StagePlan::for_stages(&args.stages)
        .input()?
        .with_k(args.top_k)
        .with_params(params)
        .skippable(args.skippable);
    let generator = build_generator(args)?;
    let embedder = HashingEmbedder::new(lib.dim()).input()?;
    let pipeline = Pipeline {
        library: &lib,
        embedder: &embedder,
        plan: &plan,
        generator: generator.as_ref(),
    };

    if let Some(spec) = &args.spec {
        let spec = read_spec(spec)?;
        let result = pipeline
            .run(&parse_spec(&spec, &NoiseConfig::NONE, seed), seed)
            .map_err(pipeline_failure)?;
        return out.emit(&result.to_json(), || result.summary.clone());
    }

    let manifest_path = args.manifest.as_ref().expect("clap requires spec or manifest");
    let manifest = CorpusManifest::read_jsonl(open(manifest_path)?).input()?;
    let base = manifest_path.parent().unwrap_or(Path::new("."));
    let mut items = Vec::with_capacity(manifest.entries.len());
    for (i, e) in manifest.entries.iter().enumerate() {
        let spec = read_spec(&dataset::resolve_path(base, &e.chart_path))?;
        let item_seed = SplitMix64::derive_seed(seed, i as u64);
        items.push((parse_spec(&spec, &NoiseConfig::NONE, item_seed), item_seed));
    }
    let results: Vec<SummaryResult> = pipeline
        .run_batch(&items, args.concurrency as usize)
        .into_iter()
        .collect::<Result<_, _>>()
        .map_err(pipeline_failure)?;
    out.emit(&to_json(&results), || {
        manifest
            .entries
            .iter()
            .zip(&results)
            .map(|(e, r)| format!("{}: {}", e.chart_path, r.summary))
            .collect::<Vec<_>>()
            .join("\n")
    })
}

#[derive(Serialize)]
struct SystemReport {
    system: String,
    report: MetricReport,
}

fn cmd_evaluate(manifest: &Path, out: &Output) -> Outcome<()> {
    let items = evaluation::read_eval_manifest(open(manifest)?).input()?;
    if items.is_empty() {
        return Err(anyhow!("{} has no items", manifest.display())).input();
    }
    let mut groups: Vec<(String, Vec<evaluation::EvalItem>)> = Vec::new();
    for item in items {
        let name = item.system.clone().unwrap_or_else(|| "default".to_string());
        match groups.iter_mut().find(|(n, _)| *n == name) {
            Some((_, v)) => v.push(item),
            None => groups.push((name, vec![item])),
        }
    }
    let mut reports = Vec::with_capacity(groups.len());
    for (name, items) in &groups {
        reports.push((name.clone(), evaluation::evaluate(items).input()?));
    }
    if reports.len() >= 2 {
        if let Err(e) = evaluation::attach_s_norm(&mut reports) {
            eprintln!("warning: no normalized score: {e}");
        }
    }
    let rows: Vec<SystemReport> = reports
        .into_iter()
        .map(|(system, report)| SystemReport { system, report })
        .collect();
    out.emit(&to_json(&rows), || {
        let mut lines = vec![format!(
            "{:<16} {:>8} {:>8} {:>8} {:>9} {:>7}",
            "system", "BLEU", "CIDEr", "CS%", "PPL", "S_norm"
        )];
        for r in &rows {
            let m = &r.report;
            let s = m.s_norm.map_or("-".to_string(), |v| format!("{v:.3}"));
            lines.push(format!(
                "{:<16} {:>8.2} {:>8.3} {:>8.2} {:>9.3} {:>7}",
                r.system, m.bleu, m.cider, m.cs_percent, m.ppl, s
            ));
        }
        lines.join("\n")
    })
}

fn cmd_dataset(command: &DatasetCommand, seed: u64, out: &Output) -> Outcome<()> {
    match command {
        DatasetCommand::Gen { count } => {
            let dir = out.out.ok_or_else(|| Failure {
                code: EXIT_USAGE,
                error: anyhow!("dataset gen writes a directory; pass --out DIR"),
            })?;
            if *count == 0 {
                return Err(anyhow!("--count must be at least 1")).input();
            }
            let (specs, manifest) = dataset::generate_synthetic_corpus(*count, seed);
            dataset::write_corpus(dir, &specs, &manifest).input()?;
            let entries = dataset::library_entries(&specs);
            let f = File::create(dir.join("library_entries.jsonl")).input()?;
            dataset::write_library_entries(&entries, std::io::BufWriter::new(f)).input()?;
            let doc = serde_json::json!({
                "dir": dir,
                "charts": specs.len(),
                "library_entries": entries.len(),
                "seed": seed,
            });
            // the directory is the output; only report on stdout
            Output {
                json: out.json,
                out: None,
            }
            .emit(&to_json(&doc), || {
                format!(
                    "wrote {} charts and {} library entries to {}",
                    specs.len(),
                    entries.len(),
                    dir.display()
                )
            })
        }
        DatasetCommand::Split { manifest, ratios } => {
            let ratios: [f64; 3] = ratios
                .as_slice()
                .try_into()
                .map_err(|_| anyhow!("--ratios takes three values"))
                .input()?;
            let m = CorpusManifest::read_jsonl(open(manifest)?).input()?;
            let split = dataset::split_dataset(&m, &ratios, seed).input()?;
            let [train, val, test] = split.split_sizes();
            out.emit(&split.to_jsonl(), || format!("train {train}, val {val}, test {test}"))
        }
        DatasetCommand::Validate { manifest, base } => {
            let m = CorpusManifest::read_jsonl(open(manifest)?).input()?;
            let base = base
                .clone()
                .unwrap_or_else(|| manifest.parent().unwrap_or(Path::new(".")).to_path_buf());
            let report = dataset::validate_manifest(&m, &base);
            out.emit(&to_json(&report), || {
                let mut lines: Vec<String> = report
                    .failures()
                    .map(|f| format!("entry {} ({}): {}", f.index, f.chart_path, f.reasons.join("; ")))
                    .collect();
                lines.push(format!(
                    "{}: {} of {} entries valid",
                    if report.passed() { "pass" } else { "fail" },
                    report.entries.iter().filter(|e| e.passed()).count(),
                    report.entries.len()
                ));
                lines.join("\n")
            })?;
            if !report.passed() {
                return Err(Failure {
                    code: EXIT_INPUT,
                    error: anyhow!("manifest failed validation"),
                });
            }
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Outcome<()> {
    let out = Output {
        json: cli.json,
        out: cli.out.as_deref(),
    };
    match &cli.command {
        Command::Parse { spec, noise } => cmd_parse(spec, noise, cli.seed, &out),
        Command::BuildLibrary { entries, dim } => cmd_build_library(entries, *dim, &out),
        Command::Retrieve {
            library,
            spec,
            stage,
            k,
        } => cmd_retrieve(library, spec, *stage, *k, cli.seed, &out),
        Command::Summarize(args) => cmd_summarize(args, cli.seed, &out),
        Command::Evaluate { manifest } => cmd_evaluate(manifest, &out),
        Command::Dataset { command } => cmd_dataset(command, cli.seed, &out),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure { code, error }) => {
            eprintln!("error: {error:#}");
            ExitCode::from(code)
        }
    }
}
