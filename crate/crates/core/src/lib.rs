//! Recommendation of classes and structural features for partially
//! specified metamodels.
//!
//! The pipeline is: parse ([`xmi`], [`json`]) → [`encoder`] into
//! `context#item` pairs → [`simgraph`] similarities → collaborative
//! filtering in [`engine`]. [`corpus`] handles ingestion and persistence,
//! [`eval`] runs k-fold offline evaluation.

pub mod corpus;
pub mod encoder;
pub mod engine;
pub mod eval;
pub mod json;
pub mod model;
pub mod simgraph;
pub mod synthetic;
pub mod xmi;

pub use corpus::{content_hash, CorpusError, CorpusIndex, SourceStatus};
pub use encoder::{
    context_items, encode, inherited_features, ContextKind, EncodedMetamodel, EncodingScheme,
    ItemPair, ROOT_CONTEXT,
};
pub use engine::{
    resolve_context, EngineError, RankedItem, RankedList, RatingView, RecommendParams,
    RecommendationQuery, Recommender,
};
pub use eval::{run_evaluation, EvalConfig, EvalError, MetricsReport};
pub use json::{parse_json_model, to_json_bytes};
pub use model::{FeatureKind, MetaClass, MetaPackage, Metamodel, ModelError, StructuralFeature};
pub use simgraph::{cosine, jaccard, FeatureVector, SimilarityGraph};
pub use xmi::parse_ecore_xmi;

/// Parses a model file, choosing the format by extension (`.json` or XMI).
pub fn parse_model_file(bytes: &[u8], source_uri: &str) -> Result<Metamodel, ModelError> {
    if source_uri.ends_with(".json") {
        parse_json_model(bytes, source_uri)
    } else {
        parse_ecore_xmi(bytes, source_uri)
    }
}
