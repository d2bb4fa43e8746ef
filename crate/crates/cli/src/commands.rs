//! Subcommand implementations. Each returns the process exit code:
//! 0 success, 1 I/O, load or parse failure, 2 bad arguments, 3 unknown context.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use memorec_core::{
    parse_model_file, run_evaluation, CorpusIndex, EngineError, EvalConfig, EvalError,
    RecommendParams,
};

use crate::cli::{Command, EvaluateArgs, IngestArgs, RecommendArgs, ServeArgs};
use crate::service::{self, Defaults};
use crate::{index_path, ranked_csv, Engines, RecommendError, INDEX_ENV};

pub const EXIT_FAILURE: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_UNKNOWN_CONTEXT: u8 = 3;

/// A failed command: what to print and which code to exit with.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Failure {
            code,
            message: message.into(),
        }
    }
}

type CmdResult = Result<(), Failure>;

pub fn run(command: Command) -> ExitCode {
    let result = match command {
        Command::Ingest(a) => ingest(a),
        Command::Recommend(a) => recommend(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Serve(a) => serve(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn write_file(path: &Path, contents: &[u8]) -> CmdResult {
    fs::write(path, contents)
        .map_err(|e| Failure::new(EXIT_FAILURE, format!("cannot write {}: {e}", path.display())))
}

fn load_index(flag: Option<PathBuf>) -> Result<CorpusIndex, Failure> {
    let path = index_path(flag).ok_or_else(|| {
        Failure::new(EXIT_USAGE, format!("no index given (use --index or {INDEX_ENV})"))
    })?;
    CorpusIndex::load(&path)
        .map_err(|e| Failure::new(EXIT_FAILURE, format!("cannot load index {}: {e}", path.display())))
}

fn ingest(args: IngestArgs) -> CmdResult {
    let index = CorpusIndex::ingest_directory(&args.input, &args.schemes)
        .map_err(|e| Failure::new(EXIT_FAILURE, e.to_string()))?;
    index
        .save(&args.out)
        .map_err(|e| Failure::new(EXIT_FAILURE, e.to_string()))?;
    let report = args.report.unwrap_or_else(|| {
        let mut name = args.out.clone().into_os_string();
        name.push(".report.csv");
        PathBuf::from(name)
    });
    write_file(&report, index.report_csv().as_bytes())?;
    let c = index.counts();
    eprintln!(
        "accepted={} duplicate={} unparsable={} -> {}",
        c.accepted,
        c.duplicate,
        c.unparsable,
        args.out.display()
    );
    Ok(())
}

fn recommend(args: RecommendArgs) -> CmdResult {
    let index = load_index(args.index)?;
    let bytes = fs::read(&args.model).map_err(|e| {
        Failure::new(EXIT_FAILURE, format!("cannot read {}: {e}", args.model.display()))
    })?;
    let uri = args.model.to_string_lossy();
    let model = parse_model_file(&bytes, &uri)
        .map_err(|e| Failure::new(EXIT_FAILURE, format!("{uri}: {e}")))?;

    let params = RecommendParams::new(args.neighbours.k, args.neighbours.k_contexts(), args.n);
    let list = Engines::new(&index)
        .recommend(model, args.scheme, args.context_kind, &args.context, params)
        .map_err(|e| match e {
            RecommendError::Engine(EngineError::UnknownContext(_)) => {
                Failure::new(EXIT_UNKNOWN_CONTEXT, e.to_string())
            }
            RecommendError::Engine(EngineError::ContextKindMismatch { .. }) => {
                Failure::new(EXIT_USAGE, e.to_string())
            }
            _ => Failure::new(EXIT_FAILURE, e.to_string()),
        })?;
    if list.empty_neighborhood {
        eprintln!("note: no similar metamodel in the corpus");
    }
    let mut stdout = std::io::stdout().lock();
    stdout
        .write_all(ranked_csv(&list).as_bytes())
        .map_err(|e| Failure::new(EXIT_FAILURE, e.to_string()))
}

fn evaluate(args: EvaluateArgs) -> CmdResult {
    let index = load_index(args.index)?;
    let config = EvalConfig {
        folds: args.folds,
        scheme: args.scheme,
        k: args.neighbours.k,
        k_contexts: args.neighbours.k_contexts(),
        cutoffs: args.cutoffs,
        seed: args.seed,
        record_timing: !args.no_timing,
    };
    let report = run_evaluation(&index, &config).map_err(|e| match e {
        EvalError::InvalidConfig(_) => Failure::new(EXIT_USAGE, e.to_string()),
        _ => Failure::new(EXIT_FAILURE, e.to_string()),
    })?;
    let csv = report.to_csv();
    match &args.csv {
        Some(path) => write_file(path, csv.as_bytes())?,
        None => print!("{csv}"),
    }
    if let Some(path) = &args.json {
        write_file(path, report.to_json().as_bytes())?;
    }
    Ok(())
}

fn serve(args: ServeArgs) -> CmdResult {
    let index = load_index(args.index)?;
    let defaults = Defaults {
        scheme: args.default_scheme,
        k: args.default_k,
        k_contexts: args.default_k_contexts.unwrap_or(args.default_k),
        n: args.default_n,
    };
    let runtime = tokio::runtime::Runtime::new()
        .map_err(|e| Failure::new(EXIT_FAILURE, e.to_string()))?;
    runtime
        .block_on(service::serve(index, defaults, args.listen))
        .map_err(|e| Failure::new(EXIT_FAILURE, format!("{e:#}")))
}
