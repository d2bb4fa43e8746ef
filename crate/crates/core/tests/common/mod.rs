//! Shared test helpers: fixture loading, a random metamodel generator and a
//! brute-force recommender that evaluates the scoring formulas directly from
//! raw pairs, without any of the engine's data structures.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use memorec_core::{
    encode, EncodedMetamodel, EncodingScheme, MetaClass, MetaPackage, Metamodel,
    StructuralFeature,
};
use rand::seq::SliceRandom;
use rand::Rng;

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests")
        .join("fixtures")
        .join(name)
}

pub fn load_fixture(name: &str) -> Metamodel {
    let path = fixture_path(name);
    let bytes = std::fs::read(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    memorec_core::parse_model_file(&bytes, name).unwrap()
}

pub fn web() -> Metamodel {
    load_fixture("web.json")
}

// ---------------------------------------------------------------------------
// Random metamodels
// ---------------------------------------------------------------------------

const CLASS_NAMES: &[&str] = &["A", "B", "C", "D", "E", "F"];
const FEATURE_NAMES: &[&str] = &[
    "f0", "f1", "f2", "f3", "f4", "f5", "f6", "f7", "f8", "f9", "f10", "f11",
];
const PACKAGE_NAMES: &[&str] = &["P", "Q", "R"];

/// Small random metamodel over a tiny vocabulary so that overlaps are
/// frequent. Supertypes only point at earlier classes, so inheritance is
/// acyclic by construction. Feature names may repeat inside a class.
pub fn random_metamodel<R: Rng>(rng: &mut R, uri: &str) -> Metamodel {
    let mut classes_seen: Vec<String> = Vec::new();
    let mut packages = Vec::new();
    let pkg_count = rng.gen_range(1..=2);
    for pkg_name in PACKAGE_NAMES.choose_multiple(rng, pkg_count) {
        let mut pkg = MetaPackage::new(*pkg_name);
        let class_count = rng.gen_range(0..=4);
        for class_name in CLASS_NAMES.choose_multiple(rng, class_count) {
            let mut class = MetaClass::new(*class_name);
            for _ in 0..rng.gen_range(0..=4) {
                let name = *FEATURE_NAMES.choose(rng).unwrap();
                class.features.push(if rng.gen_bool(0.5) {
                    StructuralFeature::attribute(name)
                } else {
                    StructuralFeature::reference(name)
                });
            }
            if !classes_seen.is_empty() && rng.gen_bool(0.35) {
                let sup = classes_seen.choose(rng).unwrap().clone();
                if sup != class.name {
                    class.super_types.push(sup);
                }
            }
            classes_seen.push(class.name.clone());
            pkg.classes.push(class);
        }
        if rng.gen_bool(0.2) {
            let mut sub = MetaPackage::new("Sub");
            let mut class = MetaClass::new("S");
            class
                .features
                .push(StructuralFeature::attribute(*FEATURE_NAMES.choose(rng).unwrap()));
            sub.classes.push(class);
            pkg.sub_packages.push(sub);
        }
        packages.push(pkg);
    }
    match Metamodel::from_packages(uri, packages.clone()) {
        Ok(m) => m,
        // Same class name in two packages can close a loop through
        // name resolution; drop inheritance in that rare case.
        Err(_) => {
            for p in &mut packages {
                for c in &mut p.classes {
                    c.super_types.clear();
                }
            }
            Metamodel::from_packages(uri, packages).unwrap()
        }
    }
}

// ---------------------------------------------------------------------------
// Brute-force recommender
// ---------------------------------------------------------------------------

pub struct Raw {
    pub id: String,
    pub pairs: Vec<(String, String)>,
}

impl Raw {
    pub fn from_encoded(e: &EncodedMetamodel) -> Self {
        Raw {
            id: e.metamodel_id.clone(),
            pairs: e
                .pairs
                .iter()
                .map(|p| (p.context.clone(), p.item.clone()))
                .collect(),
        }
    }

    fn count(&self, item: &str) -> usize {
        self.pairs.iter().filter(|(_, i)| i == item).count()
    }

    fn has_item(&self, item: &str) -> bool {
        self.pairs.iter().any(|(_, i)| i == item)
    }

    fn context_set(&self, context: &str) -> BTreeSet<String> {
        self.pairs
            .iter()
            .filter(|(c, _)| c == context)
            .map(|(_, i)| i.clone())
            .collect()
    }

    fn context_names(&self) -> BTreeSet<String> {
        self.pairs.iter().map(|(c, _)| c.clone()).collect()
    }

    fn items(&self) -> BTreeSet<String> {
        self.pairs.iter().map(|(_, i)| i.clone()).collect()
    }
}

/// TF-IDF straight from counts over `all`.
pub fn oracle_tfidf(all: &[&Raw], target: &Raw) -> BTreeMap<String, f64> {
    let total = all.len() as f64;
    target
        .items()
        .into_iter()
        .map(|item| {
            let f = target.count(&item) as f64;
            let a = all.iter().filter(|m| m.has_item(&item)).count() as f64;
            let w = f * (total / a).log10();
            (item, w)
        })
        .collect()
}

pub fn oracle_cosine(x: &BTreeMap<String, f64>, y: &BTreeMap<String, f64>) -> f64 {
    let keys: BTreeSet<&String> = x.keys().chain(y.keys()).collect();
    let mut dot = 0.0;
    for k in &keys {
        if let (Some(a), Some(b)) = (x.get(*k), y.get(*k)) {
            dot += a * b;
        }
    }
    let nx: f64 = x.values().map(|v| v * v).sum::<f64>().sqrt();
    let ny: f64 = y.values().map(|v| v * v).sum::<f64>().sqrt();
    if nx * ny == 0.0 {
        0.0
    } else {
        (dot / (nx * ny)).clamp(-1.0, 1.0)
    }
}

pub struct OracleResult {
    pub neighbors: Vec<(String, f64)>,
    pub contexts: Vec<(String, String, f64)>,
    /// Every candidate with its score, unsorted.
    pub scores: BTreeMap<String, f64>,
}

pub fn oracle_recommend(
    corpus: &[Raw],
    active: &Raw,
    context: &str,
    k: usize,
    k_contexts: usize,
) -> OracleResult {
    let mut all: Vec<&Raw> = corpus.iter().collect();
    if !corpus.iter().any(|m| m.id == active.id) {
        all.push(active);
    }
    let active_vec = oracle_tfidf(&all, active);

    let mut sims: Vec<(String, f64)> = corpus
        .iter()
        .filter(|m| m.id != active.id)
        .map(|m| (m.id.clone(), oracle_cosine(&active_vec, &oracle_tfidf(&all, m))))
        .filter(|(_, s)| *s > 0.0)
        .collect();
    sims.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    sims.truncate(k);

    let mine = active.context_set(context);
    let mut ctx_sims: Vec<(String, String, f64)> = Vec::new();
    for (id, _) in &sims {
        let m = corpus.iter().find(|m| &m.id == id).unwrap();
        for d in m.context_names() {
            let theirs = m.context_set(&d);
            let inter = mine.intersection(&theirs).count() as f64;
            let union = mine.union(&theirs).count() as f64;
            let s = if union == 0.0 { 0.0 } else { inter / union };
            if s > 0.0 {
                ctx_sims.push((id.clone(), d, s));
            }
        }
    }
    ctx_sims.sort_by(|a, b| {
        b.2.partial_cmp(&a.2)
            .unwrap()
            .then(a.0.cmp(&b.0))
            .then(a.1.cmp(&b.1))
    });
    ctx_sims.truncate(k_contexts);

    let mut universe = mine.clone();
    for (id, d, _) in &ctx_sims {
        let m = corpus.iter().find(|m| &m.id == id).unwrap();
        universe.extend(m.context_set(d));
    }
    let candidates: Vec<String> = universe.difference(&mine).cloned().collect();
    let u = universe.len() as f64;
    let mean_c = if u == 0.0 { 0.0 } else { mine.len() as f64 / u };

    let mut scores = BTreeMap::new();
    for f in candidates {
        let mut num = 0.0;
        let mut den = 0.0;
        for (id, d, s2) in &ctx_sims {
            // Combined rating across all neighbour metamodels, by context name.
            let mut rn = 0.0;
            let mut rd = 0.0;
            for (nid, s1) in &sims {
                let n = corpus.iter().find(|m| &m.id == nid).unwrap();
                let r = if n.context_set(d).contains(&f) { 1.0 } else { 0.0 };
                rn += r * s1;
                rd += s1;
            }
            let combined = rn / rd;
            let own = corpus.iter().find(|m| &m.id == id).unwrap();
            let mean_d = own.context_set(d).len() as f64 / u;
            num += (combined - mean_d) * s2;
            den += s2;
        }
        let score = if den == 0.0 { mean_c } else { mean_c + num / den };
        scores.insert(f, score);
    }

    OracleResult {
        neighbors: sims,
        contexts: ctx_sims,
        scores,
    }
}

pub fn encode_all(models: &[Metamodel], scheme: EncodingScheme) -> Vec<EncodedMetamodel> {
    models.iter().map(|m| encode(m, scheme).unwrap()).collect()
}

/// All scheme-level contexts of a metamodel, including empty ones.
pub fn all_contexts(m: &Metamodel, scheme: EncodingScheme) -> Vec<String> {
    let mut out: Vec<String> = match scheme {
        EncodingScheme::SEs | EncodingScheme::IEs => {
            m.all_classes().iter().map(|(_, c)| c.name.clone()).collect()
        }
        EncodingScheme::SEc => m.all_packages().iter().map(|p| p.name.clone()).collect(),
        EncodingScheme::IEc => vec![memorec_core::ROOT_CONTEXT.to_string()],
    };
    out.sort();
    out.dedup();
    out
}

/// Compares the engine against the oracle for every context of `active`.
/// Returns the number of (context, candidate) scores compared.
pub fn check_against_oracle(
    corpus: &[Metamodel],
    active: &Metamodel,
    scheme: EncodingScheme,
    k: usize,
    k_contexts: usize,
) -> Result<usize, String> {
    let encoded = encode_all(corpus, scheme);
    let engine = memorec_core::Recommender::new(scheme, &encoded).map_err(|e| e.to_string())?;
    let raws: Vec<Raw> = encoded.iter().map(Raw::from_encoded).collect();
    let active_enc = encode(active, scheme).unwrap();
    let active_raw = Raw::from_encoded(&active_enc);
    let params = memorec_core::RecommendParams::new(k, k_contexts, usize::MAX);

    let mut compared = 0;
    for context in all_contexts(active, scheme) {
        let got = engine
            .recommend_encoded(&active_enc, &context, params)
            .map_err(|e| e.to_string())?;
        let want = oracle_recommend(&raws, &active_raw, &context, k, k_contexts);
        if got.len() != want.scores.len() {
            return Err(format!(
                "{scheme} k={k} kc={k_contexts} context {context}: engine has {} items, oracle {}",
                got.len(),
                want.scores.len()
            ));
        }
        for pair in got.entries.windows(2) {
            if pair[0].score < pair[1].score {
                return Err(format!("{scheme} context {context}: list not sorted"));
            }
        }
        for entry in &got.entries {
            let Some(expected) = want.scores.get(&entry.item) else {
                return Err(format!("{scheme} context {context}: unexpected item {}", entry.item));
            };
            if (entry.score - expected).abs() > 1e-9 {
                return Err(format!(
                    "{scheme} k={k} kc={k_contexts} context {context} item {}: engine {} oracle {}",
                    entry.item, entry.score, expected
                ));
            }
            compared += 1;
        }
    }
    Ok(compared)
}

// ---------------------------------------------------------------------------
// Rating matrices of the Web metamodel
// ---------------------------------------------------------------------------

/// Package × class matrix under SEc.
pub const PACKAGE_CLASS_ROWS: [&str; 2] = ["Web", "Data"];
pub const PACKAGE_CLASS_COLS: [&str; 5] = ["Page", "Static", "Dynamic", "Entity", "Field"];
pub const PACKAGE_CLASS: [[u8; 5]; 2] = [[1, 1, 1, 0, 0], [0, 0, 0, 1, 1]];

/// Class × feature matrix under IEs.
pub const CLASS_FEATURE_ROWS: [&str; 5] = ["Page", "Static", "Dynamic", "Entity", "Field"];
pub const CLASS_FEATURE_COLS: [&str; 9] = [
    "title", "meta", "content", "picture", "list", "entity", "name", "fields", "isPK",
];
pub const CLASS_FEATURE: [[u8; 9]; 5] = [
    [1, 1, 0, 0, 0, 0, 0, 0, 0],
    [1, 1, 1, 1, 0, 0, 0, 0, 0],
    [1, 1, 0, 0, 1, 1, 0, 0, 0],
    [0, 0, 0, 0, 0, 0, 1, 1, 0],
    [0, 0, 0, 0, 0, 0, 1, 0, 1],
];

/// Cells of the binary rating matrix of `m`, in the given row/column order.
pub fn rating_matrix(
    m: &Metamodel,
    scheme: EncodingScheme,
    rows: &[&str],
    cols: &[&str],
) -> Vec<Vec<u8>> {
    let view = memorec_core::RatingView::from_encoded(&encode(m, scheme).unwrap());
    rows.iter()
        .map(|r| cols.iter().map(|c| view.rating(r, c)).collect())
        .collect()
}

/// Number of mismatching cells against an expected matrix.
pub fn matrix_mismatches<const C: usize>(got: &[Vec<u8>], want: &[[u8; C]]) -> usize {
    got.iter()
        .zip(want)
        .map(|(g, w)| g.iter().zip(w).filter(|(a, b)| a != b).count())
        .sum::<usize>()
        + got.len().abs_diff(want.len()) * C
}

/// Whether the matrix axes cover every context and item of the encoding.
pub fn matrix_is_complete(m: &Metamodel, scheme: EncodingScheme, rows: &[&str], cols: &[&str]) -> bool {
    let view = memorec_core::RatingView::from_encoded(&encode(m, scheme).unwrap());
    view.contexts.iter().all(|c| rows.contains(&c.as_str()))
        && view.items.iter().all(|i| cols.contains(&i.as_str()))
}

// ---------------------------------------------------------------------------
// Worked similarity example: given TF-IDF vectors and their cosine matrix
// ---------------------------------------------------------------------------

pub const PHI_ITEMS: [&str; 12] = [
    "links", "css", "media", "title", "content", "picture", "name", "fields", "entities", "list",
    "index", "type",
];
pub const PHI_WEB: [f64; 12] = [
    0.0, 0.0, 0.528, 0.528, 0.0, 0.0, 0.0, -0.301, -0.301, -0.301, 0.0, 0.0,
];
pub const PHI_M1: [f64; 12] = [0.0, 0.0, 0.0, 0.528, 0.528, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0];
pub const PHI_M2: [f64; 12] = [
    0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.204, 0.528, 0.0, 0.528, 0.602, 0.602,
];
/// Expected cosine matrix over (Web, M1, M2).
pub const SIM_MATRIX: [[f64; 3]; 3] = [[1.0, 0.41, -0.21], [0.41, 1.0, 0.0], [-0.21, 0.0, 1.0]];

pub fn phi_vector(weights: &[f64; 12]) -> memorec_core::FeatureVector {
    memorec_core::FeatureVector {
        weights: PHI_ITEMS
            .iter()
            .zip(weights)
            .filter(|(_, w)| **w != 0.0)
            .map(|(i, w)| (i.to_string(), *w))
            .collect(),
    }
}

/// Largest absolute deviation from [`SIM_MATRIX`].
pub fn phi_matrix_deviation() -> f64 {
    let vs = [phi_vector(&PHI_WEB), phi_vector(&PHI_M1), phi_vector(&PHI_M2)];
    let mut worst: f64 = 0.0;
    for (i, a) in vs.iter().enumerate() {
        for (j, b) in vs.iter().enumerate() {
            worst = worst.max((memorec_core::cosine(a, b) - SIM_MATRIX[i][j]).abs());
        }
    }
    worst
}
