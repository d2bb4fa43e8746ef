//! Corpus ingestion, deduplication and the persisted index.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs;
use std::io::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;
use walkdir::WalkDir;

use crate::encoder::{encode, EncodeError, EncodedMetamodel, EncodingScheme};
use crate::engine::Recommender;
use crate::model::Metamodel;
use crate::simgraph::{GraphError, SimilarityGraph};

/// Leading bytes of every index file.
pub const INDEX_MAGIC: &[u8] = b"MEMOREC-IDX";
pub const INDEX_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("I/O failure on {path}: {source}")]
    IoFailure {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("index format version {found} is not supported (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },
    #[error("corrupt index: {0}")]
    CorruptIndex(String),
    #[error(transparent)]
    Encode(#[from] EncodeError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CorpusError + '_ {
    move |source| CorpusError::IoFailure {
        path: path.display().to_string(),
        source,
    }
}

/// SHA-256 of `bytes`, lowercase hex.
pub fn content_hash(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceStatus {
    Accepted,
    Duplicate,
    Unparsable,
}

impl SourceStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SourceStatus::Accepted => "accepted",
            SourceStatus::Duplicate => "duplicate",
            SourceStatus::Unparsable => "unparsable",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceEntry {
    pub source_uri: String,
    pub status: SourceStatus,
    /// Content hash; for duplicates, the id of the retained copy.
    pub id: Option<String>,
}

/// Encodings and graph of the corpus under one scheme.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemeIndex {
    pub encoded: Vec<EncodedMetamodel>,
    pub graph: SimilarityGraph,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CorpusIndex {
    pub metamodels: BTreeMap<String, Metamodel>,
    pub schemes: BTreeMap<EncodingScheme, SchemeIndex>,
    pub source_log: Vec<SourceEntry>,
}

#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct IngestCounts {
    pub accepted: usize,
    pub duplicate: usize,
    pub unparsable: usize,
}

/// On-disk body. Encodings and graphs are derived, so they are rebuilt on
/// load instead of stored.
#[derive(Serialize, Deserialize)]
struct IndexDoc {
    schemes: Vec<EncodingScheme>,
    metamodels: Vec<Metamodel>,
    source_log: Vec<SourceEntry>,
}

fn is_candidate(path: &Path) -> bool {
    matches!(
        path.extension().and_then(|e| e.to_str()),
        Some("ecore") | Some("json")
    )
}

impl CorpusIndex {
    /// Builds an index over metamodels that are already in memory.
    /// Metamodels are keyed by id; repeated ids keep the first.
    pub fn from_metamodels<I>(metamodels: I, schemes: &[EncodingScheme]) -> Result<Self, CorpusError>
    where
        I: IntoIterator<Item = Metamodel>,
    {
        let mut index = CorpusIndex::default();
        for m in metamodels {
            index.source_log.push(SourceEntry {
                source_uri: m.source_uri.clone(),
                status: if index.metamodels.contains_key(&m.id) {
                    SourceStatus::Duplicate
                } else {
                    SourceStatus::Accepted
                },
                id: Some(m.id.clone()),
            });
            index.metamodels.entry(m.id.clone()).or_insert(m);
        }
        index.rebuild(schemes)?;
        Ok(index)
    }

    /// Scans `root` recursively for `.ecore` and `.json` files. Unparsable
    /// files and byte-identical copies are logged and skipped; of identical
    /// files the lexicographically first path is kept.
    pub fn ingest_directory(root: &Path, schemes: &[EncodingScheme]) -> Result<Self, CorpusError> {
        let meta = fs::metadata(root).map_err(io_err(root))?;
        if !meta.is_dir() {
            return Err(CorpusError::IoFailure {
                path: root.display().to_string(),
                source: std::io::Error::new(std::io::ErrorKind::NotADirectory, "not a directory"),
            });
        }

        let mut files: Vec<(String, std::path::PathBuf)> = Vec::new();
        for entry in WalkDir::new(root).follow_links(true) {
            let entry = entry.map_err(|e| CorpusError::IoFailure {
                path: root.display().to_string(),
                source: e.into(),
            })?;
            if entry.file_type().is_file() && is_candidate(entry.path()) {
                let rel = entry
                    .path()
                    .strip_prefix(root)
                    .unwrap_or(entry.path())
                    .components()
                    .map(|c| c.as_os_str().to_string_lossy())
                    .collect::<Vec<_>>()
                    .join("/");
                files.push((rel, entry.into_path()));
            }
        }
        files.sort();

        let mut index = CorpusIndex::default();
        let mut seen = HashSet::new();
        for (uri, path) in files {
            let bytes = fs::read(&path).map_err(io_err(&path))?;
            let entry = match crate::parse_model_file(&bytes, &uri) {
                Err(err) => {
                    tracing::info!(source = uri.as_str(), %err, "skipping unparsable file");
                    SourceEntry {
                        source_uri: uri,
                        status: SourceStatus::Unparsable,
                        id: None,
                    }
                }
                Ok(m) if seen.contains(&m.id) => SourceEntry {
                    source_uri: uri,
                    status: SourceStatus::Duplicate,
                    id: Some(m.id),
                },
                Ok(m) => {
                    seen.insert(m.id.clone());
                    let id = m.id.clone();
                    index.metamodels.insert(id.clone(), m);
                    SourceEntry {
                        source_uri: uri,
                        status: SourceStatus::Accepted,
                        id: Some(id),
                    }
                }
            };
            index.source_log.push(entry);
        }
        index.rebuild(schemes)?;
        Ok(index)
    }

    /// Recomputes encodings and graphs for `schemes`.
    fn rebuild(&mut self, schemes: &[EncodingScheme]) -> Result<(), CorpusError> {
        self.schemes.clear();
        let wanted: BTreeSet<EncodingScheme> = schemes.iter().copied().collect();
        for scheme in wanted {
            let encoded = self
                .metamodels
                .values()
                .map(|m| encode(m, scheme))
                .collect::<Result<Vec<_>, _>>()?;
            let graph = SimilarityGraph::build(&encoded)?;
            self.schemes.insert(scheme, SchemeIndex { encoded, graph });
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.metamodels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.metamodels.is_empty()
    }

    pub fn scheme_list(&self) -> Vec<EncodingScheme> {
        self.schemes.keys().copied().collect()
    }

    pub fn counts(&self) -> IngestCounts {
        let mut c = IngestCounts::default();
        for e in &self.source_log {
            match e.status {
                SourceStatus::Accepted => c.accepted += 1,
                SourceStatus::Duplicate => c.duplicate += 1,
                SourceStatus::Unparsable => c.unparsable += 1,
            }
        }
        c
    }

    /// Engine over the whole corpus for one indexed scheme.
    pub fn recommender(&self, scheme: EncodingScheme) -> Option<Recommender> {
        self.schemes
            .get(&scheme)
            .map(|s| Recommender::from_parts(scheme, s.graph.clone(), &s.encoded))
    }

    /// `sourceUri,status,id` rows with a header line.
    pub fn report_csv(&self) -> String {
        let mut out = String::from("sourceUri,status,id\n");
        for e in &self.source_log {
            out.push_str(&csv_field(&e.source_uri));
            out.push(',');
            out.push_str(e.status.as_str());
            out.push(',');
            out.push_str(e.id.as_deref().unwrap_or(""));
            out.push('\n');
        }
        out
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let doc = IndexDoc {
            schemes: self.scheme_list(),
            metamodels: self.metamodels.values().cloned().collect(),
            source_log: self.source_log.clone(),
        };
        let mut out = Vec::new();
        out.extend_from_slice(INDEX_MAGIC);
        out.push(b'\n');
        out.extend_from_slice(format!("{INDEX_FORMAT_VERSION}\n").as_bytes());
        serde_json::to_writer(&mut out, &doc).expect("index documents always serialize");
        out.push(b'\n');
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, CorpusError> {
        let rest = bytes
            .strip_prefix(INDEX_MAGIC)
            .and_then(|r| r.strip_prefix(b"\n"))
            .ok_or_else(|| CorpusError::CorruptIndex("missing MEMOREC-IDX header".into()))?;
        let newline = rest
            .iter()
            .position(|b| *b == b'\n')
            .ok_or_else(bad_version)?;
        let version: u32 = std::str::from_utf8(&rest[..newline])
            .ok()
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(bad_version)?;
        if version != INDEX_FORMAT_VERSION {
            return Err(CorpusError::VersionMismatch {
                found: version,
                expected: INDEX_FORMAT_VERSION,
            });
        }
        let doc: IndexDoc = serde_json::from_slice(&rest[newline + 1..])
            .map_err(|e| CorpusError::CorruptIndex(e.to_string()))?;

        let mut index = CorpusIndex {
            metamodels: BTreeMap::new(),
            schemes: BTreeMap::new(),
            source_log: doc.source_log,
        };
        for m in doc.metamodels {
            if index.metamodels.insert(m.id.clone(), m).is_some() {
                return Err(CorpusError::CorruptIndex("repeated metamodel id".into()));
            }
        }
        index.rebuild(&doc.schemes)?;
        Ok(index)
    }

    pub fn save(&self, path: &Path) -> Result<(), CorpusError> {
        let mut file = fs::File::create(path).map_err(io_err(path))?;
        file.write_all(&self.to_bytes()).map_err(io_err(path))?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, CorpusError> {
        let bytes = fs::read(path).map_err(io_err(path))?;
        Self::from_bytes(&bytes)
    }
}

fn bad_version() -> CorpusError {
    CorpusError::CorruptIndex("missing or invalid format version".into())
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn ingest_directory(root: &Path, schemes: &[EncodingScheme]) -> Result<CorpusIndex, CorpusError> {
    CorpusIndex::ingest_directory(root, schemes)
}

pub fn save_index(index: &CorpusIndex, path: &Path) -> Result<(), CorpusError> {
    index.save(path)
}

pub fn load_index(path: &Path) -> Result<CorpusIndex, CorpusError> {
    CorpusIndex::load(path)
}
