//! Metamodel–item graph and the similarity functions built on it.
//!
//! Each metamodel node has a weighted edge to every item it contains; the
//! weight is the item's multiplicity in the metamodel's encoding. Feature
//! vectors are TF-IDF weights over those edges (base-10 logarithm), metamodel
//! similarity is the cosine of feature vectors, and context similarity is the
//! Jaccard index of item sets.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::encoder::{EncodedMetamodel, EncodingScheme};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("corpus mixes encoding schemes {0} and {1}")]
    MixedSchemes(EncodingScheme, EncodingScheme),
    #[error("duplicate metamodel id `{0}`")]
    DuplicateMetamodelId(String),
    #[error("unknown metamodel `{0}`")]
    UnknownMetamodel(String),
}

/// Sparse TF-IDF weights keyed by item name.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub weights: BTreeMap<String, f64>,
}

impl FeatureVector {
    pub fn from_pairs<I, S>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (S, f64)>,
        S: Into<String>,
    {
        FeatureVector {
            weights: pairs.into_iter().map(|(k, v)| (k.into(), v)).collect(),
        }
    }

    pub fn norm(&self) -> f64 {
        self.weights.values().map(|w| w * w).sum::<f64>().sqrt()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SimilarityGraph {
    pub scheme: Option<EncodingScheme>,
    /// Metamodel ids in corpus order.
    pub metamodel_ids: Vec<String>,
    /// Outgoing edges per metamodel: item → multiplicity.
    pub edges: BTreeMap<String, BTreeMap<String, u32>>,
    /// Item → number of metamodels adjacent to it.
    pub doc_freq: BTreeMap<String, u32>,
}

fn item_counts(encoded: &EncodedMetamodel) -> BTreeMap<String, u32> {
    let mut counts = BTreeMap::new();
    for pair in &encoded.pairs {
        *counts.entry(pair.item.clone()).or_insert(0) += 1;
    }
    counts
}

impl SimilarityGraph {
    pub fn build<'a, I>(corpus: I) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = &'a EncodedMetamodel>,
    {
        let mut graph = SimilarityGraph::default();
        for encoded in corpus {
            match graph.scheme {
                None => graph.scheme = Some(encoded.scheme),
                Some(s) if s != encoded.scheme => {
                    return Err(GraphError::MixedSchemes(s, encoded.scheme))
                }
                Some(_) => {}
            }
            if graph.edges.contains_key(&encoded.metamodel_id) {
                return Err(GraphError::DuplicateMetamodelId(encoded.metamodel_id.clone()));
            }
            let counts = item_counts(encoded);
            for item in counts.keys() {
                *graph.doc_freq.entry(item.clone()).or_insert(0) += 1;
            }
            graph.metamodel_ids.push(encoded.metamodel_id.clone());
            graph.edges.insert(encoded.metamodel_id.clone(), counts);
        }
        Ok(graph)
    }

    pub fn len(&self) -> usize {
        self.metamodel_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.metamodel_ids.is_empty()
    }

    pub fn contains(&self, id: &str) -> bool {
        self.edges.contains_key(id)
    }

    /// Item universe, sorted.
    pub fn item_names(&self) -> impl Iterator<Item = &str> {
        self.doc_freq.keys().map(String::as_str)
    }

    pub fn edge_weight(&self, id: &str, item: &str) -> u32 {
        self.edges
            .get(id)
            .and_then(|e| e.get(item))
            .copied()
            .unwrap_or(0)
    }

    pub fn tfidf_vector(&self, id: &str) -> Result<FeatureVector, GraphError> {
        self.view().tfidf_vector(id)
    }

    /// The `k` most similar metamodels to `active_id` with positive cosine,
    /// best first, ties broken by id.
    pub fn top_similar_metamodels(
        &self,
        active_id: &str,
        k: usize,
    ) -> Result<Vec<(String, f64)>, GraphError> {
        self.view().top_similar_metamodels(active_id, k)
    }

    pub fn view(&self) -> GraphView<'_> {
        GraphView {
            base: self,
            extra: None,
        }
    }

    /// The graph as seen with one additional (query) metamodel added, without
    /// copying the corpus. If the id is already in the corpus the graph is
    /// used as is.
    pub fn with_query<'a>(&'a self, query: &'a EncodedMetamodel) -> GraphView<'a> {
        if self.contains(&query.metamodel_id) {
            return self.view();
        }
        GraphView {
            base: self,
            extra: Some((query.metamodel_id.as_str(), item_counts(query))),
        }
    }

    /// Tab-separated `id  item  weight` lines.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for id in &self.metamodel_ids {
            for (item, w) in &self.edges[id] {
                let _ = writeln!(out, "{id}\t{item}\t{w}");
            }
        }
        out
    }
}

/// Read view over a graph, optionally extended by one query metamodel.
#[derive(Debug, Clone)]
pub struct GraphView<'a> {
    base: &'a SimilarityGraph,
    extra: Option<(&'a str, BTreeMap<String, u32>)>,
}

impl<'a> GraphView<'a> {
    pub fn corpus_size(&self) -> usize {
        self.base.len() + usize::from(self.extra.is_some())
    }

    fn edges_of(&self, id: &str) -> Option<&BTreeMap<String, u32>> {
        match &self.extra {
            Some((extra_id, counts)) if *extra_id == id => Some(counts),
            _ => self.base.edges.get(id),
        }
    }

    pub fn doc_freq(&self, item: &str) -> u32 {
        let base = self.base.doc_freq.get(item).copied().unwrap_or(0);
        match &self.extra {
            Some((_, counts)) if counts.contains_key(item) => base + 1,
            _ => base,
        }
    }

    pub fn tfidf_vector(&self, id: &str) -> Result<FeatureVector, GraphError> {
        let edges = self
            .edges_of(id)
            .ok_or_else(|| GraphError::UnknownMetamodel(id.to_string()))?;
        let corpus = self.corpus_size() as f64;
        let weights = edges
            .iter()
            .map(|(item, &w)| {
                let df = f64::from(self.doc_freq(item));
                (item.clone(), f64::from(w) * (corpus / df).log10())
            })
            .collect();
        Ok(FeatureVector { weights })
    }

    pub fn top_similar_metamodels(
        &self,
        active_id: &str,
        k: usize,
    ) -> Result<Vec<(String, f64)>, GraphError> {
        let active = self.tfidf_vector(active_id)?;
        let mut scored = Vec::new();
        for id in &self.base.metamodel_ids {
            if id == active_id {
                continue;
            }
            let sim = cosine(&active, &self.tfidf_vector(id)?);
            if sim > 0.0 {
                scored.push((id.clone(), sim));
            }
        }
        scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        scored.truncate(k);
        Ok(scored)
    }
}

/// Cosine of two sparse vectors; missing entries count as zero. Zero-norm
/// input yields 0.
pub fn cosine(a: &FeatureVector, b: &FeatureVector) -> f64 {
    let (small, large) = if a.weights.len() <= b.weights.len() {
        (a, b)
    } else {
        (b, a)
    };
    let dot: f64 = small
        .weights
        .iter()
        .filter_map(|(k, x)| large.weights.get(k).map(|y| x * y))
        .sum();
    let denom = a.norm() * b.norm();
    if denom == 0.0 {
        return 0.0;
    }
    (dot / denom).clamp(-1.0, 1.0)
}

/// Jaccard index; two empty sets give 0.
pub fn jaccard<S: AsRef<str> + Ord>(a: &BTreeSet<S>, b: &BTreeSet<S>) -> f64 {
    let a: HashSet<&str> = a.iter().map(AsRef::as_ref).collect();
    let b: HashSet<&str> = b.iter().map(AsRef::as_ref).collect();
    let union = a.union(&b).count();
    if union == 0 {
        return 0.0;
    }
    a.intersection(&b).count() as f64 / union as f64
}
