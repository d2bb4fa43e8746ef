//! Reader for the Ecore XMI subset.
//!
//! Only packages, classes and structural features are read. Everything else
//! (data types, enums, annotations, operations, generics) is skipped.

use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;

use crate::corpus::content_hash;
use crate::model::{
    resolve_and_validate, FeatureKind, MetaClass, MetaPackage, Metamodel, ModelError,
    StructuralFeature,
};

/// Minimal element tree; text content is irrelevant for Ecore files.
#[derive(Debug, Default)]
struct Element {
    name: String,
    attrs: Vec<(String, String)>,
    children: Vec<Element>,
}

impl Element {
    fn attr(&self, key: &str) -> Option<&str> {
        self.attrs
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    fn local_name(&self) -> &str {
        local(&self.name)
    }

    /// `xsi:type` (or `xmi:type`) with its namespace prefix stripped.
    fn xsi_type(&self) -> Option<&str> {
        self.attrs
            .iter()
            .find(|(k, _)| local(k) == "type" && k.contains(':'))
            .map(|(_, v)| local(v))
    }
}

fn local(qname: &str) -> &str {
    qname.rsplit(':').next().unwrap_or(qname)
}

fn start_element(e: &BytesStart<'_>) -> Result<Element, ModelError> {
    let name = String::from_utf8_lossy(e.name().as_ref()).into_owned();
    let mut attrs = Vec::new();
    for attr in e.attributes() {
        let attr = attr.map_err(|err| ModelError::MalformedXml(err.to_string()))?;
        let key = String::from_utf8_lossy(attr.key.as_ref()).into_owned();
        let value = attr
            .unescape_value()
            .map_err(|err| ModelError::MalformedXml(err.to_string()))?
            .into_owned();
        attrs.push((key, value));
    }
    Ok(Element {
        name,
        attrs,
        children: Vec::new(),
    })
}

fn read_tree(bytes: &[u8]) -> Result<Element, ModelError> {
    let mut reader = Reader::from_reader(bytes);
    reader.config_mut().check_end_names = true;
    let mut buf = Vec::new();
    let mut stack: Vec<Element> = Vec::new();
    let mut root: Option<Element> = None;

    loop {
        let event = reader
            .read_event_into(&mut buf)
            .map_err(|e| ModelError::MalformedXml(format!("at byte {}: {e}", reader.buffer_position())))?;
        match event {
            Event::Start(e) => {
                if root.is_some() {
                    return Err(ModelError::MalformedXml("content after root element".into()));
                }
                stack.push(start_element(&e)?);
            }
            Event::Empty(e) => {
                if root.is_some() {
                    return Err(ModelError::MalformedXml("content after root element".into()));
                }
                let el = start_element(&e)?;
                match stack.last_mut() {
                    Some(parent) => parent.children.push(el),
                    None => root = Some(el),
                }
            }
            Event::End(_) => {
                let el = stack
                    .pop()
                    .ok_or_else(|| ModelError::MalformedXml("unbalanced end tag".into()))?;
                match stack.last_mut() {
                    Some(parent) => parent.children.push(el),
                    None => root = Some(el),
                }
            }
            Event::Text(t) => {
                if stack.is_empty() && !t.iter().all(u8::is_ascii_whitespace) {
                    return Err(ModelError::MalformedXml("text outside of root element".into()));
                }
            }
            Event::Eof => break,
            _ => {}
        }
        buf.clear();
    }

    if !stack.is_empty() {
        return Err(ModelError::MalformedXml("unexpected end of document".into()));
    }
    root.ok_or_else(|| ModelError::MalformedXml("document has no root element".into()))
}

/// Final segment of a fragment path such as `#//Page` or `#//web/Page`.
/// Also handles `platform:/...ecore#//X` and `ecore:EClass other.ecore#//X`.
fn fragment_name(reference: &str) -> Option<&str> {
    let reference = reference.rsplit(' ').next().unwrap_or(reference);
    let fragment = reference.rsplit('#').next().unwrap_or(reference);
    let name = fragment.rsplit('/').next().unwrap_or(fragment);
    (!name.is_empty()).then_some(name)
}

fn required_name(el: &Element, what: &str) -> Result<String, ModelError> {
    match el.attr("name") {
        Some(n) if !n.is_empty() => Ok(n.to_string()),
        _ => Err(ModelError::SchemaViolation(format!("{what} without a name"))),
    }
}

fn read_feature(el: &Element) -> Result<Option<StructuralFeature>, ModelError> {
    let kind = match el.xsi_type() {
        Some("EAttribute") => FeatureKind::Attribute,
        Some("EReference") => FeatureKind::Reference,
        _ => return Ok(None),
    };
    let type_name = el.attr("eType").map(str::to_string).or_else(|| {
        el.children
            .iter()
            .find(|c| c.local_name() == "eType")
            .and_then(|c| c.attr("href"))
            .map(str::to_string)
    });
    Ok(Some(StructuralFeature {
        name: required_name(el, "structural feature")?,
        kind,
        type_name,
    }))
}

fn read_class(el: &Element) -> Result<MetaClass, ModelError> {
    let mut class = MetaClass::new(required_name(el, "class")?);
    class.is_abstract = el.attr("abstract") == Some("true");
    if let Some(supers) = el.attr("eSuperTypes") {
        class
            .super_types
            .extend(supers.split_whitespace().filter_map(fragment_name).map(str::to_string));
    }
    for child in &el.children {
        match child.local_name() {
            "eStructuralFeatures" => {
                if let Some(f) = read_feature(child)? {
                    class.features.push(f);
                }
            }
            "eSuperTypes" => {
                if let Some(name) = child.attr("href").and_then(fragment_name) {
                    class.super_types.push(name.to_string());
                }
            }
            _ => {}
        }
    }
    Ok(class)
}

fn read_package(el: &Element) -> Result<MetaPackage, ModelError> {
    let mut pkg = MetaPackage::new(required_name(el, "package")?);
    for child in &el.children {
        match child.local_name() {
            "eClassifiers" if child.xsi_type() == Some("EClass") => {
                pkg.classes.push(read_class(child)?);
            }
            "eSubpackages" => pkg.sub_packages.push(read_package(child)?),
            _ => {}
        }
    }
    Ok(pkg)
}

/// Parses an `.ecore` document whose root element is an `EPackage`.
pub fn parse_ecore_xmi(bytes: &[u8], source_uri: &str) -> Result<Metamodel, ModelError> {
    let root = read_tree(bytes)?;
    if root.local_name() != "EPackage" {
        return Err(ModelError::UnsupportedRoot(root.name));
    }
    let mut m = Metamodel {
        id: content_hash(bytes),
        source_uri: source_uri.to_string(),
        packages: vec![read_package(&root)?],
    };
    resolve_and_validate(&mut m)?;
    Ok(m)
}
