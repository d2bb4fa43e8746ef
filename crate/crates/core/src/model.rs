//! Metamodel domain types.
//!
//! A [`Metamodel`] is an ordered tree of packages, classes and structural
//! features. Declaration order is preserved everywhere since the evaluation
//! protocol relies on "first class" / "first feature" semantics.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("malformed XML: {0}")]
    MalformedXml(String),
    #[error("unsupported root element `{0}`, expected an EPackage")]
    UnsupportedRoot(String),
    #[error("cyclic inheritance involving class `{0}`")]
    CyclicInheritance(String),
    #[error("malformed JSON: {0}")]
    MalformedJson(String),
    #[error("schema violation: {0}")]
    SchemaViolation(String),
    #[error("duplicate class `{class}` in package `{package}`")]
    DuplicateClass { package: String, class: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    Attribute,
    Reference,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructuralFeature {
    pub name: String,
    pub kind: FeatureKind,
    /// Declared type, kept as metadata only.
    pub type_name: Option<String>,
}

impl StructuralFeature {
    pub fn attribute(name: impl Into<String>) -> Self {
        StructuralFeature {
            name: name.into(),
            kind: FeatureKind::Attribute,
            type_name: None,
        }
    }

    pub fn reference(name: impl Into<String>) -> Self {
        StructuralFeature {
            name: name.into(),
            kind: FeatureKind::Reference,
            type_name: None,
        }
    }

    pub fn with_type(mut self, type_name: impl Into<String>) -> Self {
        self.type_name = Some(type_name.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetaClass {
    pub name: String,
    pub features: Vec<StructuralFeature>,
    /// Names of direct supertypes, resolvable within the owning metamodel.
    pub super_types: Vec<String>,
    pub is_abstract: bool,
}

impl MetaClass {
    pub fn new(name: impl Into<String>) -> Self {
        MetaClass {
            name: name.into(),
            features: Vec::new(),
            super_types: Vec::new(),
            is_abstract: false,
        }
    }

    pub fn with_feature(mut self, feature: StructuralFeature) -> Self {
        self.features.push(feature);
        self
    }

    pub fn with_super(mut self, name: impl Into<String>) -> Self {
        self.super_types.push(name.into());
        self
    }

    pub fn feature_names(&self) -> impl Iterator<Item = &str> {
        self.features.iter().map(|f| f.name.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetaPackage {
    pub name: String,
    pub classes: Vec<MetaClass>,
    pub sub_packages: Vec<MetaPackage>,
}

impl MetaPackage {
    pub fn new(name: impl Into<String>) -> Self {
        MetaPackage {
            name: name.into(),
            classes: Vec::new(),
            sub_packages: Vec::new(),
        }
    }

    pub fn with_class(mut self, class: MetaClass) -> Self {
        self.classes.push(class);
        self
    }

    pub fn with_sub_package(mut self, package: MetaPackage) -> Self {
        self.sub_packages.push(package);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Metamodel {
    /// SHA-256 of the source bytes, lowercase hex.
    pub id: String,
    pub source_uri: String,
    pub packages: Vec<MetaPackage>,
}

impl Metamodel {
    /// Builds a metamodel from an in-memory tree. The id is the content hash
    /// of the tree's JSON rendering, so the result is identical to parsing
    /// that rendering back.
    pub fn from_packages(
        source_uri: impl Into<String>,
        packages: Vec<MetaPackage>,
    ) -> Result<Self, ModelError> {
        let mut m = Metamodel {
            id: String::new(),
            source_uri: source_uri.into(),
            packages,
        };
        let bytes = crate::json::to_json_bytes(&m);
        m.id = crate::corpus::content_hash(&bytes);
        resolve_and_validate(&mut m)?;
        Ok(m)
    }

    /// Structural equality: same package tree, ignoring id and source.
    pub fn same_structure(&self, other: &Metamodel) -> bool {
        self.packages == other.packages
    }

    /// Every class paired with the simple name of its directly containing
    /// package, depth-first in declaration order.
    pub fn all_classes(&self) -> Vec<(&str, &MetaClass)> {
        fn walk<'a>(pkg: &'a MetaPackage, out: &mut Vec<(&'a str, &'a MetaClass)>) {
            for class in &pkg.classes {
                out.push((pkg.name.as_str(), class));
            }
            for sub in &pkg.sub_packages {
                walk(sub, out);
            }
        }
        let mut out = Vec::new();
        for pkg in &self.packages {
            walk(pkg, &mut out);
        }
        out
    }

    /// All packages, depth-first in declaration order.
    pub fn all_packages(&self) -> Vec<&MetaPackage> {
        fn walk<'a>(pkg: &'a MetaPackage, out: &mut Vec<&'a MetaPackage>) {
            out.push(pkg);
            for sub in &pkg.sub_packages {
                walk(sub, out);
            }
        }
        let mut out = Vec::new();
        for pkg in &self.packages {
            walk(pkg, &mut out);
        }
        out
    }

    /// Name → class lookup. When the same class name occurs in several
    /// packages the first one in traversal order wins.
    pub fn class_index(&self) -> HashMap<&str, &MetaClass> {
        let mut index = HashMap::new();
        for (_, class) in self.all_classes() {
            index.entry(class.name.as_str()).or_insert(class);
        }
        index
    }
}

/// Free-function form of [`Metamodel::all_classes`].
pub fn all_classes(m: &Metamodel) -> Vec<(&str, &MetaClass)> {
    m.all_classes()
}

/// Shared post-parse step: drops supertype references that do not resolve
/// inside the metamodel, then checks names and acyclicity.
pub(crate) fn resolve_and_validate(m: &mut Metamodel) -> Result<(), ModelError> {
    let known: std::collections::HashSet<String> = m
        .all_classes()
        .into_iter()
        .map(|(_, c)| c.name.clone())
        .collect();

    fn fix(pkg: &mut MetaPackage, known: &std::collections::HashSet<String>, uri: &str) {
        for class in &mut pkg.classes {
            class.super_types.retain(|s| {
                let ok = known.contains(s);
                if !ok {
                    tracing::warn!(
                        source = uri,
                        class = class.name.as_str(),
                        supertype = s.as_str(),
                        "dropping unresolved supertype"
                    );
                }
                ok
            });
        }
        for sub in &mut pkg.sub_packages {
            fix(sub, known, uri);
        }
    }
    let uri = m.source_uri.clone();
    for pkg in &mut m.packages {
        fix(pkg, &known, &uri);
    }

    for pkg in m.all_packages() {
        if pkg.name.is_empty() {
            return Err(ModelError::SchemaViolation("package with empty name".into()));
        }
        let mut seen = std::collections::HashSet::new();
        for class in &pkg.classes {
            if class.name.is_empty() {
                return Err(ModelError::SchemaViolation(format!(
                    "class with empty name in package `{}`",
                    pkg.name
                )));
            }
            if !seen.insert(class.name.as_str()) {
                return Err(ModelError::DuplicateClass {
                    package: pkg.name.clone(),
                    class: class.name.clone(),
                });
            }
            if class.features.iter().any(|f| f.name.is_empty()) {
                return Err(ModelError::SchemaViolation(format!(
                    "feature with empty name in class `{}`",
                    class.name
                )));
            }
        }
    }

    check_acyclic(m)
}

/// Fails with [`ModelError::CyclicInheritance`] if any supertype chain loops.
pub fn check_acyclic(m: &Metamodel) -> Result<(), ModelError> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        Visiting,
        Done,
    }
    let index = m.class_index();
    let mut marks: BTreeMap<&str, Mark> = BTreeMap::new();

    fn visit<'a>(
        name: &'a str,
        index: &HashMap<&'a str, &'a MetaClass>,
        marks: &mut BTreeMap<&'a str, Mark>,
    ) -> Result<(), ModelError> {
        match marks.get(name) {
            Some(Mark::Done) => return Ok(()),
            Some(Mark::Visiting) => return Err(ModelError::CyclicInheritance(name.to_string())),
            None => {}
        }
        marks.insert(name, Mark::Visiting);
        if let Some(class) = index.get(name) {
            for sup in &class.super_types {
                visit(sup.as_str(), index, marks)?;
            }
        }
        marks.insert(name, Mark::Done);
        Ok(())
    }

    for (_, class) in m.all_classes() {
        visit(class.name.as_str(), &index, &mut marks)?;
    }

    // A class shadowed by an earlier one of the same name is not in the
    // index; its chain loops if its own name is reachable from it.
    for (_, class) in m.all_classes() {
        if std::ptr::eq(index[class.name.as_str()], class) {
            continue;
        }
        let mut stack: Vec<&str> = class.super_types.iter().map(String::as_str).collect();
        let mut seen = std::collections::HashSet::new();
        while let Some(name) = stack.pop() {
            if name == class.name {
                return Err(ModelError::CyclicInheritance(name.to_string()));
            }
            if seen.insert(name) {
                if let Some(sup) = index.get(name) {
                    stack.extend(sup.super_types.iter().map(String::as_str));
                }
            }
        }
    }
    Ok(())
}
