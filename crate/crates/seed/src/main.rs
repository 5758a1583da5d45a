//! Command-line driver: parse textual IR, export semantic graphs, train the
//! clone detector, evaluate it, and score file pairs.
//!
//! Results go to stdout, diagnostics to stderr. Exit codes: 0 success,
//! 1 user error (bad input, bad flags), 2 internal error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use seed::checkpoint::{Checkpoint, CheckpointError};
use seed::config::{ConfigError, RunSettings};
use seed::corpus::{make_splits, scan_corpus, CorpusError, ScanReport};
use seed::graph::{build_graph, export, graph_stats, ExportFormat, GraphStats, Variant};
use seed::ir::{parse_module, IrFunction, ParseError, ParseOptions, ParsedModule};
use seed::model::{forward_pair, EncodedGraph, ModelError};
use seed::pipeline::{build_graphs, evaluate_split, run_training, PipelineError};
use seed::train::{history_to_jsonl, TrainError};
use seed::vocab::Vocabulary;

#[derive(Parser)]
#[command(
    name = "seed",
    version,
    about = "Semantic-graph clone detection over textual LLVM IR"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Dot,
}

#[derive(Subcommand)]
enum Cmd {
    /// Parse an IR file and print its functions in canonical form.
    Parse {
        file: PathBuf,
        /// Fail on instructions outside the supported subset instead of
        /// skipping them.
        #[arg(long)]
        strict: bool,
    },
    /// Export the semantic graph of one file's entry function.
    Graph {
        file: PathBuf,
        /// Graph flavor: seed, seed+type, or seed+identifier.
        #[arg(long, default_value = "seed")]
        variant: Variant,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        #[arg(long)]
        strict: bool,
    },
    /// Train on a corpus directory (one subdirectory of .ll files per
    /// problem) and write a checkpoint.
    Train {
        corpus: PathBuf,
        /// key=value settings file; flags below override it.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Checkpoint path; the vocabulary and history are written beside it.
        #[arg(long, default_value = "model.ckpt")]
        out: PathBuf,
        #[arg(long)]
        variant: Option<Variant>,
        /// Seed for initialization, shuffling, splits, and pair sampling.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        strict: bool,
    },
    /// Score sampled pairs from one split with a trained checkpoint.
    Eval {
        corpus: PathBuf,
        checkpoint: PathBuf,
        /// Split to draw pairs from: train, val, or test.
        #[arg(default_value = "test")]
        split: String,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        strict: bool,
    },
    /// Compare two IR files and report similarity plus a verdict.
    Detect {
        file_a: PathBuf,
        file_b: PathBuf,
        checkpoint: PathBuf,
        #[arg(long)]
        strict: bool,
    },
    /// Aggregate graph statistics over a corpus, per variant.
    Stats {
        corpus: PathBuf,
        /// Restrict to one variant (default: all three).
        #[arg(long)]
        variant: Option<Variant>,
        #[arg(long)]
        strict: bool,
    },
}

/// Failures split by who must act: the user (exit 1) or us (exit 2).
enum AppError {
    User(String),
    Internal(String),
}

impl AppError {
    fn code(&self) -> u8 {
        match self {
            AppError::User(_) => 1,
            AppError::Internal(_) => 2,
        }
    }

    fn message(&self) -> &str {
        match self {
            AppError::User(m) | AppError::Internal(m) => m,
        }
    }
}

impl From<ParseError> for AppError {
    fn from(e: ParseError) -> Self {
        AppError::User(e.to_string())
    }
}

impl From<CorpusError> for AppError {
    fn from(e: CorpusError) -> Self {
        AppError::User(e.to_string())
    }
}

impl From<ConfigError> for AppError {
    fn from(e: ConfigError) -> Self {
        AppError::User(e.to_string())
    }
}

impl From<CheckpointError> for AppError {
    fn from(e: CheckpointError) -> Self {
        AppError::User(e.to_string())
    }
}

impl From<ModelError> for AppError {
    fn from(e: ModelError) -> Self {
        AppError::Internal(e.to_string())
    }
}

impl From<TrainError> for AppError {
    fn from(e: TrainError) -> Self {
        match e {
            TrainError::Model(m) => AppError::Internal(m.to_string()),
            other => AppError::User(other.to_string()),
        }
    }
}

impl From<PipelineError> for AppError {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::Corpus(c) => c.into(),
            PipelineError::Train(t) => t.into(),
            PipelineError::Model(m) => m.into(),
            other => AppError::Internal(other.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Usage problems are user errors (exit 1); --help and --version
            // print to stdout and succeed.
            let code = u8::from(e.use_stderr());
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}

fn run(cli: Cli) -> Result<(), AppError> {
    match cli.cmd {
        Cmd::Parse { file, strict } => cmd_parse(&file, strict),
        Cmd::Graph { file, variant, format, strict } => cmd_graph(&file, variant, format, strict),
        Cmd::Train { corpus, config, out, variant, seed, strict } => {
            cmd_train(&corpus, config.as_deref(), &out, variant, seed, strict)
        }
        Cmd::Eval { corpus, checkpoint, split, config, seed, strict } => {
            cmd_eval(&corpus, &checkpoint, &split, config.as_deref(), seed, strict)
        }
        Cmd::Detect { file_a, file_b, checkpoint, strict } => {
            cmd_detect(&file_a, &file_b, &checkpoint, strict)
        }
        Cmd::Stats { corpus, variant, strict } => cmd_stats(&corpus, variant, strict),
    }
}

// --- shared helpers ---------------------------------------------------------

fn read_module(path: &Path, strict: bool) -> Result<ParsedModule, AppError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| AppError::User(format!("{}: {e}", path.display())))?;
    let module = parse_module(&text, ParseOptions { strict })?;
    for s in &module.skipped {
        eprintln!("note: {}:{}: skipped unsupported `{}`", path.display(), s.line, s.opcode);
    }
    Ok(module)
}

/// The function a single-file command operates on: `main` if present,
/// otherwise the first one.
fn entry_function<'m>(module: &'m ParsedModule, path: &Path) -> Result<&'m IrFunction, AppError> {
    module
        .functions
        .iter()
        .find(|f| f.name == "main")
        .or_else(|| module.functions.first())
        .ok_or_else(|| AppError::User(format!("{}: no functions defined", path.display())))
}

fn scan(corpus: &Path, strict: bool) -> Result<ScanReport, AppError> {
    let report = scan_corpus(corpus, strict)?;
    for skip in &report.skipped {
        eprintln!("note: {}: skipped ({})", skip.path.display(), skip.reason);
    }
    eprintln!(
        "corpus: {} problems, {} snippets",
        report.index.problem_count(),
        report.index.snippet_count()
    );
    Ok(report)
}

fn load_settings(
    config: Option<&Path>,
    variant: Option<Variant>,
    seed: Option<u64>,
) -> Result<RunSettings, AppError> {
    let mut settings = match config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| AppError::User(format!("{}: {e}", path.display())))?;
            RunSettings::parse(&text)?
        }
        None => RunSettings::default(),
    };
    if let Some(v) = variant {
        settings.variant = v;
    }
    if let Some(s) = seed {
        settings.train.seed = s;
    }
    Ok(settings)
}

fn to_pretty_json<T: serde::Serialize>(value: &T) -> Result<String, AppError> {
    serde_json::to_string_pretty(value).map_err(|e| AppError::Internal(e.to_string()))
}

// --- subcommands --------------------------------------------------------------

fn cmd_parse(file: &Path, strict: bool) -> Result<(), AppError> {
    let module = read_module(file, strict)?;
    let listing: Vec<String> =
        module.functions.iter().map(seed::ir::format_function).collect();
    print!("{}", listing.join("\n"));
    Ok(())
}

fn cmd_graph(file: &Path, variant: Variant, format: Format, strict: bool) -> Result<(), AppError> {
    let module = read_module(file, strict)?;
    let func = entry_function(&module, file)?;
    let graph = build_graph(func, variant);
    let format = match format {
        Format::Json => ExportFormat::Json,
        Format::Dot => ExportFormat::Dot,
    };
    println!("{}", export(&graph, format));
    Ok(())
}

fn cmd_train(
    corpus: &Path,
    config: Option<&Path>,
    out: &Path,
    variant: Option<Variant>,
    seed: Option<u64>,
    strict: bool,
) -> Result<(), AppError> {
    let settings = load_settings(config, variant, seed)?;
    let report = scan(corpus, strict)?;

    let (dataset, outcome, summary) = run_training(&report.index, &settings)?;

    let history_name = match out.file_name().and_then(|n| n.to_str()) {
        Some(name) => format!("{name}.history.jsonl"),
        None => return Err(AppError::User(format!("{}: not a file path", out.display()))),
    };
    let history_path = out.with_file_name(history_name);
    std::fs::write(&history_path, history_to_jsonl(&outcome.history))
        .map_err(|e| AppError::User(format!("{}: {e}", history_path.display())))?;

    let ckpt = Checkpoint {
        variant: settings.variant,
        theta: Some(outcome.theta),
        params: outcome.params,
        vocab: dataset.vocab,
    };
    ckpt.save(out)?;
    eprintln!("wrote {} and {}", out.display(), history_path.display());

    println!("{}", to_pretty_json(&summary)?);
    Ok(())
}

fn cmd_eval(
    corpus: &Path,
    checkpoint: &Path,
    split_name: &str,
    config: Option<&Path>,
    seed: Option<u64>,
    strict: bool,
) -> Result<(), AppError> {
    let settings = load_settings(config, None, seed)?;
    let ckpt = Checkpoint::load(checkpoint)?;
    let theta = ckpt.theta.ok_or_else(|| {
        AppError::User(format!("{}: checkpoint has no threshold; train first", checkpoint.display()))
    })?;
    let report = scan(corpus, strict)?;
    let split = make_splits(&report.index, &settings.split.to_policy(settings.train.seed))?;
    let eval = evaluate_split(
        &report.index,
        ckpt.variant,
        &ckpt.vocab,
        &ckpt.params,
        theta,
        &split,
        split_name,
        settings.pairs_eval,
        settings.train.seed,
    )?;
    println!("{}", to_pretty_json(&eval)?);
    Ok(())
}

fn cmd_detect(
    file_a: &Path,
    file_b: &Path,
    checkpoint: &Path,
    strict: bool,
) -> Result<(), AppError> {
    let ckpt = Checkpoint::load(checkpoint)?;
    let theta = ckpt.theta.ok_or_else(|| {
        AppError::User(format!("{}: checkpoint has no threshold; train first", checkpoint.display()))
    })?;

    let module_a = read_module(file_a, strict)?;
    let module_b = read_module(file_b, strict)?;
    let graph_a = build_graph(entry_function(&module_a, file_a)?, ckpt.variant);
    let graph_b = build_graph(entry_function(&module_b, file_b)?, ckpt.variant);
    let enc_a = EncodedGraph::new(&graph_a, &ckpt.vocab);
    let enc_b = EncodedGraph::new(&graph_b, &ckpt.vocab);

    // Evaluate in a canonical order so swapping the arguments yields
    // byte-identical output.
    let (x, y) = if (&enc_a.tokens, &enc_a.edges) <= (&enc_b.tokens, &enc_b.edges) {
        (&enc_a, &enc_b)
    } else {
        (&enc_b, &enc_a)
    };
    let similarity = forward_pair(x, y, &ckpt.params)?.similarity;
    let verdict = if similarity >= theta { "clone" } else { "nonclone" };
    println!("{}", serde_json::json!({ "similarity": similarity, "verdict": verdict }));
    Ok(())
}

fn cmd_stats(corpus: &Path, variant: Option<Variant>, strict: bool) -> Result<(), AppError> {
    let report = scan(corpus, strict)?;
    let variants: Vec<Variant> = match variant {
        Some(v) => vec![v],
        None => Variant::ALL.to_vec(),
    };

    println!(
        "{:<16} {:>8} {:>7} {:>10} {:>8} {:>10} {:>10} {:>6}",
        "variant", "snippets", "nodes", "operation", "operand", "data-edge", "ctrl-edge", "vocab"
    );
    for v in variants {
        let (_, graphs) = build_graphs(&report.index, v);
        let mut agg = GraphStats::default();
        for g in &graphs {
            let s = graph_stats(g);
            agg.nodes += s.nodes;
            agg.operation_nodes += s.operation_nodes;
            agg.operand_nodes += s.operand_nodes;
            agg.data_edges += s.data_edges;
            agg.control_edges += s.control_edges;
        }
        let vocab = Vocabulary::from_graphs(graphs.iter());
        println!(
            "{:<16} {:>8} {:>7} {:>10} {:>8} {:>10} {:>10} {:>6}",
            v.as_str(),
            graphs.len(),
            agg.nodes,
            agg.operation_nodes,
            agg.operand_nodes,
            agg.data_edges,
            agg.control_edges,
            vocab.len()
        );
    }
    Ok(())
}
