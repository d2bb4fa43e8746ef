mod common;

use common::*;
use memorec_core::{
    content_hash, parse_ecore_xmi, parse_json_model, to_json_bytes, FeatureKind, MetaClass,
    MetaPackage, Metamodel, ModelError, StructuralFeature,
};
use proptest::prelude::*;

#[test]
fn web_metamodel_from_xmi() {
    let m = load_fixture("web.ecore");
    let names: Vec<(&str, &str)> = m
        .all_classes()
        .iter()
        .map(|(p, c)| (*p, c.name.as_str()))
        .collect();
    assert_eq!(
        names,
        [
            ("Web", "Page"),
            ("Web", "Static"),
            ("Web", "Dynamic"),
            ("Data", "Entity"),
            ("Data", "Field"),
        ]
    );
    let index = m.class_index();
    assert_eq!(index["Static"].super_types, ["Page"]);
    assert_eq!(index["Dynamic"].super_types, ["Page"]);
    let entity = &index["Dynamic"].features[1];
    assert_eq!(entity.name, "entity");
    assert_eq!(entity.kind, FeatureKind::Reference);
}

#[test]
fn xmi_and_json_describe_the_same_structure() {
    let xmi = load_fixture("web.ecore");
    let json = load_fixture("web.json");
    assert!(xmi.same_structure(&json));
    // Identity is the byte hash of each file, not of the structure.
    assert_ne!(xmi.id, json.id);
    let bytes = std::fs::read(fixture_path("web.ecore")).unwrap();
    assert_eq!(xmi.id, content_hash(&bytes));
}

#[test]
fn serialised_json_reparses_to_same_structure() {
    let m = web();
    let bytes = to_json_bytes(&m);
    let again = parse_json_model(&bytes, "again.json").unwrap();
    assert!(m.same_structure(&again));
    assert_eq!(again.id, content_hash(&bytes));
}

#[test]
fn parsing_is_stable() {
    let bytes = std::fs::read(fixture_path("web.ecore")).unwrap();
    let a = parse_ecore_xmi(&bytes, "a").unwrap();
    let b = parse_ecore_xmi(&bytes, "a").unwrap();
    assert_eq!(a, b);
}

#[test]
fn malformed_inputs_are_reported() {
    assert!(matches!(
        parse_ecore_xmi(b"<ecore:EPackage name='x'><eClassifiers>", "x.ecore"),
        Err(ModelError::MalformedXml(_))
    ));
    assert!(matches!(
        parse_json_model(b"{\"packages\": [", "x.json"),
        Err(ModelError::MalformedJson(_))
    ));
    assert!(matches!(
        parse_json_model(br#"{"packages": [{"classes": []}]}"#, "x.json"),
        Err(ModelError::SchemaViolation(_))
    ));
}

fn arb_feature() -> impl Strategy<Value = StructuralFeature> {
    ("[a-z]{1,6}", any::<bool>(), proptest::option::of("[A-Z][a-z]{0,5}")).prop_map(
        |(name, attr, ty)| {
            let f = if attr {
                StructuralFeature::attribute(name)
            } else {
                StructuralFeature::reference(name)
            };
            match ty {
                Some(t) => f.with_type(t),
                None => f,
            }
        },
    )
}

fn arb_metamodel() -> impl Strategy<Value = Metamodel> {
    let class = ("[A-Z][a-z]{0,5}", prop::collection::vec(arb_feature(), 0..5), any::<bool>());
    let package = ("[a-z]{1,6}", prop::collection::vec(class, 0..5));
    prop::collection::vec(package, 1..4).prop_filter_map("valid metamodel", |pkgs| {
        let packages = pkgs
            .into_iter()
            .map(|(name, classes)| {
                let mut p = MetaPackage::new(name);
                for (cname, features, is_abstract) in classes {
                    if p.classes.iter().any(|c| c.name == cname) {
                        continue;
                    }
                    let mut c = MetaClass::new(cname);
                    c.features = features;
                    c.is_abstract = is_abstract;
                    p.classes.push(c);
                }
                p
            })
            .collect();
        Metamodel::from_packages("gen.json", packages).ok()
    })
}

proptest! {
    #[test]
    fn json_round_trip_preserves_structure(m in arb_metamodel()) {
        let bytes = to_json_bytes(&m);
        let back = parse_json_model(&bytes, "gen.json").unwrap();
        prop_assert!(m.same_structure(&back));
        prop_assert_eq!(to_json_bytes(&back), bytes);
    }
}
