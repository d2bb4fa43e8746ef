//! Context-aware collaborative filtering.
//!
//! For an active metamodel `m` and active context `c`:
//!
//! 1. `topsim(m)`: the `k` corpus metamodels with the highest positive
//!    cosine similarity to `m`.
//! 2. `topsim(c)`: the `k_contexts` contexts of those metamodels whose item
//!    sets have the highest positive Jaccard similarity to `c`.
//! 3. Every item of a `topsim(c)` context not already in `c` is scored
//!
//!    ```text
//!    r(c,f) = mean(c) + Σ_d (R(d,f) − mean(d))·sim2(c,d) / Σ_d sim2(c,d)
//!    R(d,f) = Σ_n r(d,f,n)·sim1(m,n) / Σ_n sim1(m,n)
//!    ```
//!
//!    where `r(d,f,n)` is 1 when metamodel `n` has a context named `d`
//!    containing `f`, and means are taken over the query's aligned item
//!    universe (active items plus candidates).
//!
//! The context × item × metamodel tensor is never materialised; each
//! metamodel keeps its own binary [`RatingView`] and the neighbourhood aligns
//! them per query.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::encoder::{
    context_items, encode, has_context, ContextKind, EncodeError, EncodedMetamodel,
    EncodingScheme, ROOT_CONTEXT,
};
use crate::model::Metamodel;
use crate::simgraph::{jaccard, GraphError, SimilarityGraph};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EngineError {
    #[error("unknown context `{0}`")]
    UnknownContext(String),
    #[error("{kind} context `{name}` cannot be used with scheme {scheme}")]
    ContextKindMismatch {
        kind: ContextKind,
        name: String,
        scheme: EncodingScheme,
    },
    #[error("engine is built for scheme {engine} but the query uses {query}")]
    SchemeMismatch {
        engine: EncodingScheme,
        query: EncodingScheme,
    },
    #[error(transparent)]
    Encode(EncodeError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

impl From<EncodeError> for EngineError {
    fn from(e: EncodeError) -> Self {
        match e {
            EncodeError::UnknownContext(name) => EngineError::UnknownContext(name),
            other => EngineError::Encode(other),
        }
    }
}

/// Binary context × item matrix of one metamodel under one scheme.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RatingView {
    pub metamodel_id: String,
    pub contexts: Vec<String>,
    pub items: Vec<String>,
    cells: BTreeMap<String, BTreeSet<String>>,
}

impl RatingView {
    pub fn from_encoded(encoded: &EncodedMetamodel) -> Self {
        let mut cells: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        let mut items = Vec::new();
        let mut seen_items = BTreeSet::new();
        for pair in &encoded.pairs {
            cells
                .entry(pair.context.clone())
                .or_default()
                .insert(pair.item.clone());
            if seen_items.insert(pair.item.as_str()) {
                items.push(pair.item.clone());
            }
        }
        RatingView {
            metamodel_id: encoded.metamodel_id.clone(),
            contexts: encoded.contexts().into_iter().map(str::to_string).collect(),
            items,
            cells,
        }
    }

    /// 1 if the context contains the item, 0 otherwise (including unknown
    /// contexts).
    pub fn rating(&self, context: &str, item: &str) -> u8 {
        u8::from(self.cells.get(context).is_some_and(|s| s.contains(item)))
    }

    pub fn context_items(&self, context: &str) -> Option<&BTreeSet<String>> {
        self.cells.get(context)
    }

    pub fn iter_contexts(&self) -> impl Iterator<Item = (&str, &BTreeSet<String>)> {
        self.cells.iter().map(|(c, s)| (c.as_str(), s))
    }
}

/// A context inside a specific corpus metamodel.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ContextRef {
    pub metamodel_id: String,
    pub context: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecommendParams {
    /// Number of neighbour metamodels.
    pub k: usize,
    /// Number of neighbour contexts.
    pub k_contexts: usize,
    /// Cut-off of the ranked list.
    pub n: usize,
}

impl RecommendParams {
    pub fn new(k: usize, k_contexts: usize, n: usize) -> Self {
        RecommendParams { k, k_contexts, n }
    }
}

#[derive(Debug, Clone)]
pub struct RecommendationQuery {
    pub active: Metamodel,
    pub scheme: EncodingScheme,
    /// Context name at scheme level: a class for `SEs`/`IEs`, a package for
    /// `SEc`, [`ROOT_CONTEXT`] for `IEc`.
    pub context: String,
    pub params: RecommendParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedItem {
    pub item: String,
    pub score: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RankedList {
    pub entries: Vec<RankedItem>,
    /// Set when no corpus metamodel had positive similarity to the query.
    #[serde(skip)]
    pub empty_neighborhood: bool,
}

impl RankedList {
    pub fn items(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.item.as_str())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Sorts by score descending, then item name, and cuts to `n`.
    fn ranked(mut entries: Vec<RankedItem>, n: usize) -> Vec<RankedItem> {
        entries.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.item.cmp(&b.item)));
        entries.truncate(n);
        entries
    }
}

/// Maps a user-facing context selection onto the scheme's context name.
///
/// Under `IEc` every package collapses into [`ROOT_CONTEXT`], so any existing
/// package name (or the artificial name itself) selects it.
pub fn resolve_context(
    m: &Metamodel,
    scheme: EncodingScheme,
    kind: ContextKind,
    name: &str,
) -> Result<String, EngineError> {
    if scheme.context_kind() != kind {
        return Err(EngineError::ContextKindMismatch {
            kind,
            name: name.to_string(),
            scheme,
        });
    }
    if scheme == EncodingScheme::IEc {
        let exists = name == ROOT_CONTEXT || m.all_packages().iter().any(|p| p.name == name);
        return if exists {
            Ok(ROOT_CONTEXT.to_string())
        } else {
            Err(EngineError::UnknownContext(name.to_string()))
        };
    }
    if has_context(m, scheme, name) {
        Ok(name.to_string())
    } else {
        Err(EngineError::UnknownContext(name.to_string()))
    }
}

/// Similarity-weighted average of the neighbours' binary ratings of
/// `(context, item)`. A neighbour without that context rates 0.
pub fn combined_rating(context: &str, item: &str, neighbors: &[(&RatingView, f64)]) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for (view, sim) in neighbors {
        num += f64::from(view.rating(context, item)) * sim;
        den += sim;
    }
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// The `k_contexts` candidates most similar to the active item set, keeping
/// only positive similarity. Ties are broken by (metamodel id, context name).
pub fn top_similar_contexts<'a, I>(
    active_items: &BTreeSet<String>,
    candidates: I,
    k_contexts: usize,
) -> Vec<(ContextRef, f64)>
where
    I: IntoIterator<Item = (ContextRef, &'a BTreeSet<String>)>,
{
    let mut scored: Vec<(ContextRef, f64)> = candidates
        .into_iter()
        .filter_map(|(r, items)| {
            let sim = jaccard(active_items, items);
            (sim > 0.0).then_some((r, sim))
        })
        .collect();
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    scored.truncate(k_contexts);
    scored
}

/// Everything needed to score items for one query.
#[derive(Debug, Clone)]
pub struct Neighborhood<'a> {
    pub active_items: BTreeSet<String>,
    /// `topsim(m)` with cosine scores.
    pub neighbors: Vec<(&'a RatingView, f64)>,
    /// `topsim(c)` with Jaccard scores.
    pub contexts: Vec<(ContextRef, f64)>,
    /// Items proposed by `topsim(c)` that the active context lacks, sorted.
    pub candidates: Vec<String>,
    universe_len: usize,
    views: &'a BTreeMap<String, RatingView>,
}

impl<'a> Neighborhood<'a> {
    fn mean_over_universe(&self, count: usize) -> f64 {
        if self.universe_len == 0 {
            0.0
        } else {
            count as f64 / self.universe_len as f64
        }
    }

    /// Mean rating of the active context over the aligned item universe.
    pub fn active_mean(&self) -> f64 {
        self.mean_over_universe(self.active_items.len())
    }

    /// Mean rating of a neighbour context over the aligned item universe.
    pub fn context_mean(&self, d: &ContextRef) -> f64 {
        let count = self
            .views
            .get(&d.metamodel_id)
            .and_then(|v| v.context_items(&d.context))
            .map_or(0, BTreeSet::len);
        self.mean_over_universe(count)
    }

    pub fn combined_rating(&self, context: &str, item: &str) -> f64 {
        combined_rating(context, item, &self.neighbors)
    }

    pub fn predict_rating(&self, item: &str) -> f64 {
        let base = self.active_mean();
        let mut num = 0.0;
        let mut den = 0.0;
        for (d, sim) in &self.contexts {
            num += (self.combined_rating(&d.context, item) - self.context_mean(d)) * sim;
            den += sim;
        }
        if self.contexts.is_empty() || den == 0.0 {
            base
        } else {
            base + num / den
        }
    }
}

/// Immutable recommendation state for one scheme: the similarity graph plus
/// one rating view per corpus metamodel.
#[derive(Debug, Clone)]
pub struct Recommender {
    scheme: EncodingScheme,
    graph: SimilarityGraph,
    views: BTreeMap<String, RatingView>,
}

impl Recommender {
    pub fn new(scheme: EncodingScheme, corpus: &[EncodedMetamodel]) -> Result<Self, GraphError> {
        let graph = SimilarityGraph::build(corpus)?;
        if let Some(found) = graph.scheme.filter(|s| *s != scheme) {
            return Err(GraphError::MixedSchemes(scheme, found));
        }
        let views = corpus
            .iter()
            .map(|e| (e.metamodel_id.clone(), RatingView::from_encoded(e)))
            .collect();
        Ok(Recommender {
            scheme,
            graph,
            views,
        })
    }

    pub fn from_parts(
        scheme: EncodingScheme,
        graph: SimilarityGraph,
        corpus: &[EncodedMetamodel],
    ) -> Self {
        let views = corpus
            .iter()
            .map(|e| (e.metamodel_id.clone(), RatingView::from_encoded(e)))
            .collect();
        Recommender {
            scheme,
            graph,
            views,
        }
    }

    pub fn scheme(&self) -> EncodingScheme {
        self.scheme
    }

    pub fn graph(&self) -> &SimilarityGraph {
        &self.graph
    }

    pub fn view(&self, id: &str) -> Option<&RatingView> {
        self.views.get(id)
    }

    /// Builds the neighbourhood of `context` in an already encoded active
    /// metamodel. The active metamodel joins the graph for the duration of
    /// the query unless its id is already part of the corpus.
    pub fn neighborhood(
        &self,
        active: &EncodedMetamodel,
        context: &str,
        k: usize,
        k_contexts: usize,
    ) -> Result<Neighborhood<'_>, EngineError> {
        if active.scheme != self.scheme {
            return Err(EngineError::SchemeMismatch {
                engine: self.scheme,
                query: active.scheme,
            });
        }
        let active_items: BTreeSet<String> =
            active.items_of(context).into_iter().map(str::to_string).collect();

        let view = self.graph.with_query(active);
        let neighbors: Vec<(&RatingView, f64)> = view
            .top_similar_metamodels(&active.metamodel_id, k)?
            .into_iter()
            .filter_map(|(id, sim)| self.views.get(&id).map(|v| (v, sim)))
            .collect();

        let candidates = neighbors.iter().flat_map(|(v, _)| {
            v.iter_contexts().map(|(c, items)| {
                (
                    ContextRef {
                        metamodel_id: v.metamodel_id.clone(),
                        context: c.to_string(),
                    },
                    items,
                )
            })
        });
        let contexts = top_similar_contexts(&active_items, candidates, k_contexts);

        let mut universe = active_items.clone();
        let mut candidate_items = BTreeSet::new();
        for (d, _) in &contexts {
            if let Some(items) = self.views[&d.metamodel_id].context_items(&d.context) {
                for item in items {
                    if !active_items.contains(item) {
                        candidate_items.insert(item.clone());
                    }
                    universe.insert(item.clone());
                }
            }
        }

        Ok(Neighborhood {
            active_items,
            neighbors,
            contexts,
            candidates: candidate_items.into_iter().collect(),
            universe_len: universe.len(),
            views: &self.views,
        })
    }

    /// Ranks items for `context` of an already encoded active metamodel.
    /// The context is not validated here; an unknown context simply has no
    /// items and therefore no similar contexts.
    pub fn recommend_encoded(
        &self,
        active: &EncodedMetamodel,
        context: &str,
        params: RecommendParams,
    ) -> Result<RankedList, EngineError> {
        let hood = self.neighborhood(active, context, params.k, params.k_contexts)?;
        let entries = hood
            .candidates
            .iter()
            .map(|item| RankedItem {
                item: item.clone(),
                score: hood.predict_rating(item),
            })
            .collect();
        Ok(RankedList {
            entries: RankedList::ranked(entries, params.n),
            empty_neighborhood: hood.neighbors.is_empty(),
        })
    }

    pub fn recommend(&self, query: &RecommendationQuery) -> Result<RankedList, EngineError> {
        if query.scheme != self.scheme {
            return Err(EngineError::SchemeMismatch {
                engine: self.scheme,
                query: query.scheme,
            });
        }
        // Validates the context before any scoring.
        context_items(&query.active, query.scheme, &query.context)?;
        let encoded = encode(&query.active, query.scheme)?;
        self.recommend_encoded(&encoded, &query.context, query.params)
    }
}
