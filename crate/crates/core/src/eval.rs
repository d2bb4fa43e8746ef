//! Offline k-fold evaluation.
//!
//! Each testing metamodel yields at most one query: a random context with at
//! least two items is chosen, its first item is kept as the query and the
//! rest becomes ground truth. The engine is trained on the other folds only.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::corpus::CorpusIndex;
use crate::encoder::{encode, EncodeError, EncodedMetamodel, EncodingScheme};
use crate::engine::{EngineError, RankedList, RecommendParams, Recommender};
use crate::model::Metamodel;
use crate::simgraph::GraphError;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("corpus of {size} metamodels is too small for {folds} folds")]
    CorpusTooSmall { size: usize, folds: usize },
    #[error("no query cases to evaluate")]
    EmptyCaseSet,
    #[error("invalid evaluation config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Encode(#[from] EncodeError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub folds: usize,
    pub scheme: EncodingScheme,
    pub k: usize,
    pub k_contexts: usize,
    /// Cut-off values, strictly increasing.
    pub cutoffs: Vec<usize>,
    pub seed: u64,
    /// Measure wall-clock time per query. When off, `meanQueryMs` is 0 and
    /// reports are byte-for-byte reproducible.
    pub record_timing: bool,
}

impl EvalConfig {
    pub fn new(scheme: EncodingScheme, k: usize, seed: u64) -> Self {
        EvalConfig {
            folds: 10,
            scheme,
            k,
            k_contexts: k,
            cutoffs: vec![1, 5, 10, 15, 20],
            seed,
            record_timing: true,
        }
    }

    pub fn validate(&self) -> Result<(), EvalError> {
        if self.folds < 2 {
            return Err(EvalError::InvalidConfig("folds must be at least 2".into()));
        }
        if self.k == 0 || self.k_contexts == 0 {
            return Err(EvalError::InvalidConfig("k and kContexts must be positive".into()));
        }
        if self.cutoffs.is_empty() || self.cutoffs[0] == 0 {
            return Err(EvalError::InvalidConfig("cutoffs must be non-empty and positive".into()));
        }
        if self.cutoffs.windows(2).any(|w| w[0] >= w[1]) {
            return Err(EvalError::InvalidConfig("cutoffs must be strictly increasing".into()));
        }
        Ok(())
    }
}

/// Seed for one named random stream, independent of iteration order.
fn derive_seed(seed: u64, tag: &str, key: &str) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    hasher.update(tag.as_bytes());
    hasher.update([0]);
    hasher.update(key.as_bytes());
    let digest = hasher.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fold {
    pub index: usize,
    pub training: Vec<String>,
    pub testing: Vec<String>,
}

/// Seeded shuffle, then contiguous chunks whose sizes differ by at most one.
/// Both id lists of each fold come back sorted.
pub fn split_folds<S: AsRef<str>>(ids: &[S], folds: usize, seed: u64) -> Result<Vec<Fold>, EvalError> {
    if folds == 0 || ids.len() < folds {
        return Err(EvalError::CorpusTooSmall {
            size: ids.len(),
            folds,
        });
    }
    let mut shuffled: Vec<String> = ids.iter().map(|s| s.as_ref().to_string()).collect();
    shuffled.sort();
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "folds", ""));
    shuffled.shuffle(&mut rng);

    let base = shuffled.len() / folds;
    let extra = shuffled.len() % folds;
    let mut parts = Vec::with_capacity(folds);
    let mut start = 0;
    for i in 0..folds {
        let size = base + usize::from(i < extra);
        parts.push(&shuffled[start..start + size]);
        start += size;
    }

    Ok((0..folds)
        .map(|i| {
            let mut testing = parts[i].to_vec();
            testing.sort();
            let mut training: Vec<String> = parts
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .flat_map(|(_, p)| p.iter().cloned())
                .collect();
            training.sort();
            Fold {
                index: i + 1,
                training,
                testing,
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryCase {
    pub metamodel_id: String,
    pub context: String,
    pub query_items: Vec<String>,
    pub ground_truth: BTreeSet<String>,
}

impl QueryCase {
    /// The active metamodel as the modeler would see it: the full encoding
    /// with every ground-truth item removed from the active context.
    pub fn partial_encoding(&self, full: &EncodedMetamodel) -> EncodedMetamodel {
        EncodedMetamodel {
            metamodel_id: full.metamodel_id.clone(),
            scheme: full.scheme,
            pairs: full
                .pairs
                .iter()
                .filter(|p| !(p.context == self.context && self.ground_truth.contains(&p.item)))
                .cloned()
                .collect(),
        }
    }
}

/// `None` when no context has at least two items.
pub fn query_case_from_encoded(encoded: &EncodedMetamodel, seed: u64) -> Option<QueryCase> {
    let eligible: Vec<(&str, Vec<&str>)> = encoded
        .contexts()
        .into_iter()
        .map(|c| (c, encoded.items_of(c)))
        .filter(|(_, items)| items.len() >= 2)
        .collect();
    if eligible.is_empty() {
        return None;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "case", &encoded.metamodel_id));
    let (context, items) = &eligible[rng.gen_range(0..eligible.len())];
    Some(QueryCase {
        metamodel_id: encoded.metamodel_id.clone(),
        context: context.to_string(),
        query_items: vec![items[0].to_string()],
        ground_truth: items[1..].iter().map(|s| s.to_string()).collect(),
    })
}

pub fn make_query_case(
    m: &Metamodel,
    scheme: EncodingScheme,
    seed: u64,
) -> Result<Option<QueryCase>, EncodeError> {
    Ok(query_case_from_encoded(&encode(m, scheme)?, seed))
}

/// A query case together with what the engine answered.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseResult {
    pub case: QueryCase,
    pub recommended: Vec<String>,
    pub elapsed_ms: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CaseMetrics {
    pub true_positives: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// `|GT ∩ REC_N|`.
pub fn true_positives<S: AsRef<str>>(recommended: &[S], ground_truth: &BTreeSet<String>, n: usize) -> usize {
    recommended
        .iter()
        .take(n)
        .filter(|r| ground_truth.contains(r.as_ref()))
        .count()
}

/// Precision over `n`, recall over `|GT|`, F1 as their harmonic mean (0 when
/// both are 0).
pub fn precision_recall_f1(true_positives: usize, n: usize, ground_truth_len: usize) -> CaseMetrics {
    let tp = true_positives as f64;
    let precision = if n == 0 { 0.0 } else { tp / n as f64 };
    let recall = if ground_truth_len == 0 {
        0.0
    } else {
        tp / ground_truth_len as f64
    };
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    CaseMetrics {
        true_positives,
        precision,
        recall,
        f1,
    }
}

impl CaseResult {
    pub fn metrics(&self, n: usize) -> CaseMetrics {
        let tp = true_positives(&self.recommended, &self.case.ground_truth, n);
        precision_recall_f1(tp, n, self.case.ground_truth.len())
    }
}

/// Share of cases with at least one ground-truth hit in the top `n`.
pub fn success_rate_at_n(results: &[CaseResult], n: usize) -> Result<f64, EvalError> {
    if results.is_empty() {
        return Err(EvalError::EmptyCaseSet);
    }
    let hits = results
        .iter()
        .filter(|r| true_positives(&r.recommended, &r.case.ground_truth, n) > 0)
        .count();
    Ok(hits as f64 / results.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MetricsRow {
    pub n: usize,
    pub success_rate: f64,
    pub mean_precision: f64,
    pub mean_recall: f64,
    pub mean_f1: f64,
    pub mean_query_millis: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FoldReport {
    pub fold: usize,
    pub training_size: usize,
    pub testing_size: usize,
    pub cases: usize,
    pub skipped: usize,
    pub rows: Vec<MetricsRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MetricsReport {
    pub host: String,
    pub config: EvalConfig,
    pub folds: Vec<FoldReport>,
    /// Means over folds that produced at least one case.
    pub aggregate: Vec<MetricsRow>,
}

fn host_description() -> String {
    let cpus = std::thread::available_parallelism().map_or(1, |n| n.get());
    format!("{}-{} ({cpus} cpus)", std::env::consts::ARCH, std::env::consts::OS)
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, count) = values.fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    if count == 0 {
        0.0
    } else {
        sum / count as f64
    }
}

impl MetricsReport {
    pub const CSV_HEADER: &'static str = "fold,scheme,k,kContexts,N,SR,precision,recall,f1,meanQueryMs";

    fn write_row(&self, out: &mut String, fold: &str, row: &MetricsRow) {
        let c = &self.config;
        let _ = writeln!(
            out,
            "{fold},{},{},{},{},{:.6},{:.6},{:.6},{:.6},{:.3}",
            c.scheme,
            c.k,
            c.k_contexts,
            row.n,
            row.success_rate,
            row.mean_precision,
            row.mean_recall,
            row.mean_f1,
            row.mean_query_millis
        );
    }

    /// Per-fold rows, then the aggregate section with `fold = mean`.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# host: {}", self.host);
        let _ = writeln!(out, "{}", Self::CSV_HEADER);
        for fold in &self.folds {
            for row in &fold.rows {
                self.write_row(&mut out, &fold.fold.to_string(), row);
            }
        }
        out.push_str("\n# aggregate\n");
        let _ = writeln!(out, "{}", Self::CSV_HEADER);
        for row in &self.aggregate {
            self.write_row(&mut out, "mean", row);
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports always serialize")
    }

    pub fn aggregate_for(&self, n: usize) -> Option<&MetricsRow> {
        self.aggregate.iter().find(|r| r.n == n)
    }
}

fn encodings_for(index: &CorpusIndex, scheme: EncodingScheme) -> Result<Vec<EncodedMetamodel>, EvalError> {
    match index.schemes.get(&scheme) {
        Some(s) => Ok(s.encoded.clone()),
        None => Ok(index
            .metamodels
            .values()
            .map(|m| encode(m, scheme))
            .collect::<Result<_, _>>()?),
    }
}

/// Engine trained on the fold's training metamodels only.
pub fn fold_engine(
    encodings: &[EncodedMetamodel],
    fold: &Fold,
    scheme: EncodingScheme,
) -> Result<Recommender, EvalError> {
    let training: BTreeSet<&str> = fold.training.iter().map(String::as_str).collect();
    let subset: Vec<EncodedMetamodel> = encodings
        .iter()
        .filter(|e| training.contains(e.metamodel_id.as_str()))
        .cloned()
        .collect();
    Ok(Recommender::new(scheme, &subset)?)
}

/// Runs one fold and returns each case with its ranked items.
pub fn evaluate_fold(
    encodings: &[EncodedMetamodel],
    fold: &Fold,
    config: &EvalConfig,
) -> Result<(Vec<CaseResult>, usize), EvalError> {
    let engine = fold_engine(encodings, fold, config.scheme)?;
    let max_n = *config.cutoffs.last().expect("validated config has cutoffs");
    let params = RecommendParams::new(config.k, config.k_contexts, max_n);
    let testing: BTreeSet<&str> = fold.testing.iter().map(String::as_str).collect();

    let mut results = Vec::new();
    let mut skipped = 0;
    for full in encodings.iter().filter(|e| testing.contains(e.metamodel_id.as_str())) {
        let Some(case) = query_case_from_encoded(full, config.seed) else {
            skipped += 1;
            continue;
        };
        let partial = case.partial_encoding(full);
        let started = Instant::now();
        let list: RankedList = engine.recommend_encoded(&partial, &case.context, params)?;
        let elapsed_ms = if config.record_timing {
            started.elapsed().as_secs_f64() * 1000.0
        } else {
            0.0
        };
        results.push(CaseResult {
            case,
            recommended: list.entries.into_iter().map(|e| e.item).collect(),
            elapsed_ms,
        });
    }
    Ok((results, skipped))
}

fn fold_rows(results: &[CaseResult], cutoffs: &[usize]) -> Vec<MetricsRow> {
    cutoffs
        .iter()
        .map(|&n| {
            if results.is_empty() {
                return MetricsRow {
                    n,
                    success_rate: 0.0,
                    mean_precision: 0.0,
                    mean_recall: 0.0,
                    mean_f1: 0.0,
                    mean_query_millis: 0.0,
                };
            }
            let metrics: Vec<CaseMetrics> = results.iter().map(|r| r.metrics(n)).collect();
            MetricsRow {
                n,
                success_rate: success_rate_at_n(results, n).expect("non-empty"),
                mean_precision: mean(metrics.iter().map(|m| m.precision)),
                mean_recall: mean(metrics.iter().map(|m| m.recall)),
                mean_f1: mean(metrics.iter().map(|m| m.f1)),
                mean_query_millis: mean(results.iter().map(|r| r.elapsed_ms)),
            }
        })
        .collect()
}

pub fn run_evaluation(index: &CorpusIndex, config: &EvalConfig) -> Result<MetricsReport, EvalError> {
    config.validate()?;
    let encodings = encodings_for(index, config.scheme)?;
    let ids: Vec<&str> = encodings.iter().map(|e| e.metamodel_id.as_str()).collect();
    let folds = split_folds(&ids, config.folds, config.seed)?;

    let mut reports = Vec::with_capacity(folds.len());
    for fold in &folds {
        let (results, skipped) = evaluate_fold(&encodings, fold, config)?;
        reports.push(FoldReport {
            fold: fold.index,
            training_size: fold.training.len(),
            testing_size: fold.testing.len(),
            cases: results.len(),
            skipped,
            rows: fold_rows(&results, &config.cutoffs),
        });
    }

    let aggregate = config
        .cutoffs
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            let rows: Vec<&MetricsRow> = reports
                .iter()
                .filter(|f| f.cases > 0)
                .map(|f| &f.rows[i])
                .collect();
            MetricsRow {
                n,
                success_rate: mean(rows.iter().map(|r| r.success_rate)),
                mean_precision: mean(rows.iter().map(|r| r.mean_precision)),
                mean_recall: mean(rows.iter().map(|r| r.mean_recall)),
                mean_f1: mean(rows.iter().map(|r| r.mean_f1)),
                mean_query_millis: mean(rows.iter().map(|r| r.mean_query_millis)),
            }
        })
        .collect();

    Ok(MetricsReport {
        host: host_description(),
        config: config.clone(),
        folds: reports,
        aggregate,
    })
}
