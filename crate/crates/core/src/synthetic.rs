//! Seeded synthetic corpora for benchmarks and tests.
//!
//! A *clustered* corpus groups metamodels around per-cluster templates: every
//! member reuses the template's class names, and a fixed share of each
//! class's features comes from the template class while the rest is drawn
//! from the whole vocabulary. A *uniform* corpus has the same shape and the
//! same vocabulary but draws class names and features uniformly.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{MetaClass, MetaPackage, Metamodel, StructuralFeature};

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    pub clusters: usize,
    pub per_cluster: usize,
    pub classes_per_metamodel: usize,
    pub features_per_class: usize,
    /// Template features available per template class.
    pub template_features_per_class: usize,
    /// Extra vocabulary shared by no template.
    pub noise_vocabulary: usize,
    /// Share of each class's features taken from its template class.
    pub shared_fraction: f64,
    pub clustered: bool,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            clusters: 5,
            per_cluster: 20,
            classes_per_metamodel: 5,
            features_per_class: 6,
            template_features_per_class: 8,
            noise_vocabulary: 100,
            shared_fraction: 0.7,
            clustered: true,
            seed: 0,
        }
    }
}

struct Vocabulary {
    /// `[cluster][class] -> class name`
    class_names: Vec<Vec<String>>,
    /// `[cluster][class] -> template feature names`
    template_features: Vec<Vec<Vec<String>>>,
    package_names: Vec<String>,
    all_features: Vec<String>,
    all_classes: Vec<String>,
}

impl Vocabulary {
    fn new(cfg: &SyntheticConfig) -> Self {
        let mut class_names = Vec::new();
        let mut template_features = Vec::new();
        let mut all_features = Vec::new();
        for c in 0..cfg.clusters {
            let names: Vec<String> = (0..cfg.classes_per_metamodel)
                .map(|j| format!("K{c}Class{j}"))
                .collect();
            let feats: Vec<Vec<String>> = (0..cfg.classes_per_metamodel)
                .map(|j| {
                    (0..cfg.template_features_per_class)
                        .map(|f| format!("k{c}c{j}f{f}"))
                        .collect()
                })
                .collect();
            all_features.extend(feats.iter().flatten().cloned());
            class_names.push(names);
            template_features.push(feats);
        }
        all_features.extend((0..cfg.noise_vocabulary).map(|i| format!("noise{i}")));
        let all_classes = class_names.iter().flatten().cloned().collect();
        Vocabulary {
            class_names,
            template_features,
            package_names: (0..cfg.clusters).map(|c| format!("domain{c}")).collect(),
            all_features,
            all_classes,
        }
    }
}

fn pick_distinct(
    rng: &mut ChaCha8Rng,
    pool: &[String],
    count: usize,
    taken: &mut Vec<String>,
) {
    let mut candidates: Vec<&String> = pool.iter().filter(|f| !taken.contains(f)).collect();
    candidates.shuffle(rng);
    taken.extend(candidates.into_iter().take(count).cloned());
}

/// Generates `clusters × per_cluster` metamodels. Output order and content
/// depend only on the config.
pub fn generate_corpus(cfg: &SyntheticConfig) -> Vec<Metamodel> {
    let vocab = Vocabulary::new(cfg);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let shared = ((cfg.features_per_class as f64) * cfg.shared_fraction).round() as usize;
    let kind = if cfg.clustered { "clustered" } else { "uniform" };
    let mut out = Vec::with_capacity(cfg.clusters * cfg.per_cluster);

    for cluster in 0..cfg.clusters {
        for member in 0..cfg.per_cluster {
            let mut package = if cfg.clustered {
                MetaPackage::new(&vocab.package_names[cluster])
            } else {
                MetaPackage::new(vocab.package_names.choose(&mut rng).expect("non-empty"))
            };
            let class_names: Vec<String> = if cfg.clustered {
                vocab.class_names[cluster].clone()
            } else {
                vocab
                    .all_classes
                    .choose_multiple(&mut rng, cfg.classes_per_metamodel)
                    .cloned()
                    .collect()
            };
            for (j, name) in class_names.into_iter().enumerate() {
                let mut features = Vec::new();
                if cfg.clustered {
                    pick_distinct(&mut rng, &vocab.template_features[cluster][j], shared, &mut features);
                }
                let remaining = cfg.features_per_class - features.len();
                pick_distinct(&mut rng, &vocab.all_features, remaining, &mut features);
                features.shuffle(&mut rng);
                let mut class = MetaClass::new(name);
                for f in features {
                    class.features.push(if rng.gen_bool(0.5) {
                        StructuralFeature::attribute(f)
                    } else {
                        StructuralFeature::reference(f)
                    });
                }
                package.classes.push(class);
            }
            let uri = format!("synthetic/{kind}/{}/{cluster}-{member}.json", cfg.seed);
            out.push(
                Metamodel::from_packages(uri, vec![package])
                    .expect("generated metamodels are valid"),
            );
        }
    }
    out
}
