//! Command-line entry points and the HTTP service over a prebuilt index.
//!
//! Both front ends go through [`Engines::recommend`], so for equal inputs the
//! CLI and the HTTP API produce the same ranked list.

pub mod cli;
pub mod commands;
pub mod service;

use std::collections::BTreeMap;
use std::path::PathBuf;

use memorec_core::{
    resolve_context, ContextKind, CorpusIndex, EncodingScheme, EngineError, Metamodel,
    RankedList, RecommendParams, RecommendationQuery, Recommender,
};
use thiserror::Error;

/// Environment variable that takes precedence over `--index`.
pub const INDEX_ENV: &str = "MEMOREC_INDEX";

pub const DEFAULT_K: usize = 5;
pub const DEFAULT_N: usize = 10;
pub const DEFAULT_SCHEME: EncodingScheme = EncodingScheme::IEs;

/// `MEMOREC_INDEX` if set and non-empty, otherwise the flag.
pub fn index_path(flag: Option<PathBuf>) -> Option<PathBuf> {
    match std::env::var_os(INDEX_ENV) {
        Some(v) if !v.is_empty() => Some(PathBuf::from(v)),
        _ => flag,
    }
}

#[derive(Debug, Error)]
pub enum RecommendError {
    #[error("scheme {0} is not in the index")]
    SchemeNotIndexed(EncodingScheme),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

/// One recommender per indexed scheme, built once per process.
pub struct Engines {
    by_scheme: BTreeMap<EncodingScheme, Recommender>,
}

impl Engines {
    pub fn new(index: &CorpusIndex) -> Self {
        let by_scheme = index
            .scheme_list()
            .into_iter()
            .filter_map(|s| index.recommender(s).map(|r| (s, r)))
            .collect();
        Engines { by_scheme }
    }

    pub fn schemes(&self) -> impl Iterator<Item = EncodingScheme> + '_ {
        self.by_scheme.keys().copied()
    }

    pub fn recommend(
        &self,
        model: Metamodel,
        scheme: EncodingScheme,
        kind: ContextKind,
        name: &str,
        params: RecommendParams,
    ) -> Result<RankedList, RecommendError> {
        let engine = self
            .by_scheme
            .get(&scheme)
            .ok_or(RecommendError::SchemeNotIndexed(scheme))?;
        let context = resolve_context(&model, scheme, kind, name)?;
        let query = RecommendationQuery {
            active: model,
            scheme,
            context,
            params,
        };
        Ok(engine.recommend(&query)?)
    }
}

/// `rank,item,score` lines, no header. Scores use the shortest exact form.
pub fn ranked_csv(list: &RankedList) -> String {
    let mut out = String::new();
    for (i, e) in list.entries.iter().enumerate() {
        out.push_str(&format!("{},{},{}\n", i + 1, csv_field(&e.item), e.score));
    }
    out
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
