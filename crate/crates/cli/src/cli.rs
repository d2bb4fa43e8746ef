use std::net::SocketAddr;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use memorec_core::{ContextKind, EncodingScheme};

#[derive(Debug, Parser)]
#[command(name = "memorec", version)]
#[command(about = "Recommend classes and structural features for partial metamodels")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse a directory of metamodels and write an index.
    Ingest(IngestArgs),
    /// Rank items for one context of a partial metamodel.
    Recommend(RecommendArgs),
    /// Run k-fold evaluation over an index.
    Evaluate(EvaluateArgs),
    /// Serve the HTTP API over an index.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Directory scanned recursively for .ecore and .json files.
    #[arg(long = "in", value_name = "DIR")]
    pub input: PathBuf,
    /// Index file to write.
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
    /// Schemes to index.
    #[arg(long, value_delimiter = ',', default_value = "SEs,IEs,SEc,IEc")]
    pub schemes: Vec<EncodingScheme>,
    /// Ingestion report; defaults to `<out>.report.csv`.
    #[arg(long, value_name = "FILE")]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RecommendArgs {
    /// Index file (MEMOREC_INDEX takes precedence).
    #[arg(long, value_name = "FILE")]
    pub index: Option<PathBuf>,
    /// Partial metamodel, .json or .ecore.
    #[arg(long, value_name = "FILE")]
    pub model: PathBuf,
    #[arg(long, value_name = "KIND")]
    pub context_kind: ContextKind,
    #[arg(long, value_name = "NAME")]
    pub context: String,
    #[arg(long, default_value_t = crate::DEFAULT_SCHEME)]
    pub scheme: EncodingScheme,
    #[command(flatten)]
    pub neighbours: Neighbours,
    /// Length of the ranked list.
    #[arg(long, default_value_t = crate::DEFAULT_N)]
    pub n: usize,
}

#[derive(Debug, Args)]
pub struct Neighbours {
    /// Neighbour metamodels.
    #[arg(long, default_value_t = crate::DEFAULT_K, value_parser = positive)]
    pub k: usize,
    /// Neighbour contexts; defaults to k.
    #[arg(long, value_parser = positive)]
    pub k_contexts: Option<usize>,
}

impl Neighbours {
    pub fn k_contexts(&self) -> usize {
        self.k_contexts.unwrap_or(self.k)
    }
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long, value_name = "FILE")]
    pub index: Option<PathBuf>,
    #[arg(long, default_value_t = EncodingScheme::SEs)]
    pub scheme: EncodingScheme,
    #[command(flatten)]
    pub neighbours: Neighbours,
    #[arg(long, value_delimiter = ',', default_value = "1,5,10,15,20")]
    pub cutoffs: Vec<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 10)]
    pub folds: usize,
    /// CSV report; printed to stdout when omitted.
    #[arg(long, value_name = "FILE")]
    pub csv: Option<PathBuf>,
    /// JSON report.
    #[arg(long, value_name = "FILE")]
    pub json: Option<PathBuf>,
    /// Leave query times at 0 so reports are byte-identical across runs.
    #[arg(long)]
    pub no_timing: bool,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, value_name = "FILE")]
    pub index: Option<PathBuf>,
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub listen: SocketAddr,
    #[arg(long, default_value_t = crate::DEFAULT_SCHEME)]
    pub default_scheme: EncodingScheme,
    #[arg(long, default_value_t = crate::DEFAULT_K, value_parser = positive)]
    pub default_k: usize,
    #[arg(long, value_parser = positive)]
    pub default_k_contexts: Option<usize>,
    #[arg(long, default_value_t = crate::DEFAULT_N)]
    pub default_n: usize,
}

fn positive(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(0) => Err("must be at least 1".into()),
        Ok(v) => Ok(v),
        Err(e) => Err(e.to_string()),
    }
}
