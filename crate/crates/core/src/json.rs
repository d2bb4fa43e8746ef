//! JSON interchange format for metamodels.
//!
//! ```json
//! {"source": "web.json",
//!  "packages": [{"name": "Web",
//!                "classes": [{"name": "Page", "abstract": false, "supertypes": [],
//!                             "features": [{"name": "title", "kind": "attribute", "type": "EString"}]}],
//!                "subpackages": []}]}
//! ```

use serde::{Deserialize, Serialize};

use crate::corpus::content_hash;
use crate::model::{
    resolve_and_validate, FeatureKind, MetaClass, MetaPackage, Metamodel, ModelError,
    StructuralFeature,
};

#[derive(Debug, Serialize, Deserialize)]
struct ModelDoc {
    #[serde(default)]
    source: String,
    packages: Vec<PackageDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
struct PackageDoc {
    name: String,
    #[serde(default)]
    classes: Vec<ClassDoc>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    subpackages: Vec<PackageDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ClassDoc {
    name: String,
    #[serde(default, rename = "abstract", skip_serializing_if = "is_false")]
    is_abstract: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    supertypes: Vec<String>,
    #[serde(default)]
    features: Vec<FeatureDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
struct FeatureDoc {
    name: String,
    kind: FeatureKind,
    #[serde(default, rename = "type", skip_serializing_if = "Option::is_none")]
    type_name: Option<String>,
}

fn is_false(b: &bool) -> bool {
    !*b
}

impl From<PackageDoc> for MetaPackage {
    fn from(doc: PackageDoc) -> Self {
        MetaPackage {
            name: doc.name,
            classes: doc
                .classes
                .into_iter()
                .map(|c| MetaClass {
                    name: c.name,
                    features: c
                        .features
                        .into_iter()
                        .map(|f| StructuralFeature {
                            name: f.name,
                            kind: f.kind,
                            type_name: f.type_name,
                        })
                        .collect(),
                    super_types: c.supertypes,
                    is_abstract: c.is_abstract,
                })
                .collect(),
            sub_packages: doc.subpackages.into_iter().map(Into::into).collect(),
        }
    }
}

impl From<&MetaPackage> for PackageDoc {
    fn from(pkg: &MetaPackage) -> Self {
        PackageDoc {
            name: pkg.name.clone(),
            classes: pkg
                .classes
                .iter()
                .map(|c| ClassDoc {
                    name: c.name.clone(),
                    is_abstract: c.is_abstract,
                    supertypes: c.super_types.clone(),
                    features: c
                        .features
                        .iter()
                        .map(|f| FeatureDoc {
                            name: f.name.clone(),
                            kind: f.kind,
                            type_name: f.type_name.clone(),
                        })
                        .collect(),
                })
                .collect(),
            subpackages: pkg.sub_packages.iter().map(Into::into).collect(),
        }
    }
}

/// Parses a JSON model document. The `source` field inside the document is
/// informational; `source_uri` is what ends up on the metamodel.
pub fn parse_json_model(bytes: &[u8], source_uri: &str) -> Result<Metamodel, ModelError> {
    let doc: ModelDoc = serde_json::from_slice(bytes).map_err(|e| {
        if e.is_data() {
            ModelError::SchemaViolation(e.to_string())
        } else {
            ModelError::MalformedJson(e.to_string())
        }
    })?;
    let mut m = Metamodel {
        id: content_hash(bytes),
        source_uri: source_uri.to_string(),
        packages: doc.packages.into_iter().map(Into::into).collect(),
    };
    resolve_and_validate(&mut m)?;
    Ok(m)
}

/// Renders a metamodel in the JSON model format (pretty-printed).
pub fn to_json_bytes(m: &Metamodel) -> Vec<u8> {
    let doc = ModelDoc {
        source: m.source_uri.clone(),
        packages: m.packages.iter().map(Into::into).collect(),
    };
    let mut out = serde_json::to_vec_pretty(&doc).expect("model documents always serialize");
    out.push(b'\n');
    out
}
