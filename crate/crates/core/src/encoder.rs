//! Encoding of metamodels into `context#item` pairs.
//!
//! | scheme | context          | item                                   |
//! |--------|------------------|----------------------------------------|
//! | `SEs`  | class            | directly owned structural feature      |
//! | `IEs`  | class            | owned or inherited structural feature  |
//! | `SEc`  | package          | class directly contained in package    |
//! | `IEc`  | [`ROOT_CONTEXT`] | every class of the metamodel           |

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{MetaClass, Metamodel};

/// Artificial package that holds every class under `IEc`.
pub const ROOT_CONTEXT: &str = "__root";

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EncodeError {
    #[error("cyclic inheritance involving class `{0}`")]
    CyclicInheritance(String),
    #[error("unknown context `{0}`")]
    UnknownContext(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EncodingScheme {
    SEs,
    IEs,
    SEc,
    IEc,
}

/// What kind of element acts as context under a scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ContextKind {
    Class,
    Package,
}

impl EncodingScheme {
    pub const ALL: [EncodingScheme; 4] = [
        EncodingScheme::SEs,
        EncodingScheme::IEs,
        EncodingScheme::SEc,
        EncodingScheme::IEc,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EncodingScheme::SEs => "SEs",
            EncodingScheme::IEs => "IEs",
            EncodingScheme::SEc => "SEc",
            EncodingScheme::IEc => "IEc",
        }
    }

    pub fn context_kind(self) -> ContextKind {
        match self {
            EncodingScheme::SEs | EncodingScheme::IEs => ContextKind::Class,
            EncodingScheme::SEc | EncodingScheme::IEc => ContextKind::Package,
        }
    }
}

impl fmt::Display for EncodingScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("unknown encoding scheme `{0}` (expected SEs, IEs, SEc or IEc)")]
pub struct ParseSchemeError(pub String);

impl FromStr for EncodingScheme {
    type Err = ParseSchemeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        EncodingScheme::ALL
            .into_iter()
            .find(|scheme| scheme.as_str() == s)
            .ok_or_else(|| ParseSchemeError(s.to_string()))
    }
}

impl fmt::Display for ContextKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ContextKind::Class => "class",
            ContextKind::Package => "package",
        })
    }
}

impl FromStr for ContextKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "class" => Ok(ContextKind::Class),
            "package" => Ok(ContextKind::Package),
            other => Err(format!("unknown context kind `{other}` (expected class or package)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ItemPair {
    pub context: String,
    pub item: String,
}

impl ItemPair {
    pub fn new(context: impl Into<String>, item: impl Into<String>) -> Self {
        ItemPair {
            context: context.into(),
            item: item.into(),
        }
    }
}

impl fmt::Display for ItemPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}#{}", self.context, self.item)
    }
}

/// Multiset of pairs for one metamodel under one scheme. Pair order follows
/// declaration order in the source metamodel.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncodedMetamodel {
    pub metamodel_id: String,
    pub scheme: EncodingScheme,
    pub pairs: Vec<ItemPair>,
}

impl EncodedMetamodel {
    /// Items of one context in first-occurrence order, without duplicates.
    pub fn items_of(&self, context: &str) -> Vec<&str> {
        let mut seen = HashSet::new();
        self.pairs
            .iter()
            .filter(|p| p.context == context)
            .map(|p| p.item.as_str())
            .filter(|item| seen.insert(*item))
            .collect()
    }

    /// Distinct contexts in first-occurrence order.
    pub fn contexts(&self) -> Vec<&str> {
        let mut seen = HashSet::new();
        self.pairs
            .iter()
            .map(|p| p.context.as_str())
            .filter(|c| seen.insert(*c))
            .collect()
    }

    /// One `context#item` per line, sorted, UTF-8.
    pub fn dump(&self) -> String {
        let mut lines: Vec<String> = self.pairs.iter().map(ToString::to_string).collect();
        lines.sort();
        let mut out = lines.join("\n");
        if !out.is_empty() {
            out.push('\n');
        }
        out
    }
}

/// Feature names inherited by `class` through its strict transitive
/// supertypes, supertype-first and without duplicates. The class's own
/// features are not consulted.
pub fn inherited_features(
    class: &MetaClass,
    index: &HashMap<&str, &MetaClass>,
) -> Result<Vec<String>, EncodeError> {
    fn collect<'a>(
        class: &'a MetaClass,
        index: &HashMap<&str, &'a MetaClass>,
        path: &mut Vec<&'a str>,
        seen: &mut HashSet<&'a str>,
        out: &mut Vec<String>,
    ) -> Result<(), EncodeError> {
        for sup_name in &class.super_types {
            let Some(sup) = index.get(sup_name.as_str()) else {
                continue;
            };
            if path.contains(&sup.name.as_str()) {
                return Err(EncodeError::CyclicInheritance(sup.name.clone()));
            }
            path.push(sup.name.as_str());
            collect(sup, index, path, seen, out)?;
            path.pop();
            for f in &sup.features {
                if seen.insert(f.name.as_str()) {
                    out.push(f.name.clone());
                }
            }
        }
        Ok(())
    }

    let mut out = Vec::new();
    let mut seen = HashSet::new();
    let mut path = vec![class.name.as_str()];
    collect(class, index, &mut path, &mut seen, &mut out)?;
    Ok(out)
}

pub fn encode(m: &Metamodel, scheme: EncodingScheme) -> Result<EncodedMetamodel, EncodeError> {
    let classes = m.all_classes();
    let mut pairs = Vec::new();
    match scheme {
        EncodingScheme::SEs => {
            for (_, class) in &classes {
                for f in &class.features {
                    pairs.push(ItemPair::new(&class.name, &f.name));
                }
            }
        }
        EncodingScheme::IEs => {
            let index = m.class_index();
            for (_, class) in &classes {
                for inherited in inherited_features(class, &index)? {
                    pairs.push(ItemPair::new(&class.name, inherited));
                }
                for f in &class.features {
                    pairs.push(ItemPair::new(&class.name, &f.name));
                }
            }
        }
        EncodingScheme::SEc => {
            for (pkg, class) in &classes {
                pairs.push(ItemPair::new(*pkg, &class.name));
            }
        }
        EncodingScheme::IEc => {
            for (_, class) in &classes {
                pairs.push(ItemPair::new(ROOT_CONTEXT, &class.name));
            }
        }
    }
    Ok(EncodedMetamodel {
        metamodel_id: m.id.clone(),
        scheme,
        pairs,
    })
}

/// Whether `context` names a context of `m` under `scheme`, even one with
/// no items (a class without features, an empty package).
pub fn has_context(m: &Metamodel, scheme: EncodingScheme, context: &str) -> bool {
    match scheme {
        EncodingScheme::SEs | EncodingScheme::IEs => {
            m.all_classes().iter().any(|(_, c)| c.name == context)
        }
        EncodingScheme::SEc => m.all_packages().iter().any(|p| p.name == context),
        EncodingScheme::IEc => context == ROOT_CONTEXT,
    }
}

/// Items paired with `context`, declaration order, duplicates removed.
pub fn context_items(
    m: &Metamodel,
    scheme: EncodingScheme,
    context: &str,
) -> Result<Vec<String>, EncodeError> {
    if !has_context(m, scheme, context) {
        return Err(EncodeError::UnknownContext(context.to_string()));
    }
    let encoded = encode(m, scheme)?;
    Ok(encoded
        .items_of(context)
        .into_iter()
        .map(str::to_string)
        .collect())
}
