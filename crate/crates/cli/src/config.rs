use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Deserialize;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Inputs {
    pub posts: PathBuf,
    pub institutions: PathBuf,
    pub labels: PathBuf,
    pub lexicon: PathBuf,
    pub embeddings: PathBuf,
    pub language_model: PathBuf,
    pub abbreviations: PathBuf,
    pub words: PathBuf,
    pub verbs: PathBuf,
}

impl Inputs {
    fn all_mut(&mut self) -> [(&'static str, &mut PathBuf); 9] {
        [
            ("posts", &mut self.posts),
            ("institutions", &mut self.institutions),
            ("labels", &mut self.labels),
            ("lexicon", &mut self.lexicon),
            ("embeddings", &mut self.embeddings),
            ("language_model", &mut self.language_model),
            ("abbreviations", &mut self.abbreviations),
            ("words", &mut self.words),
            ("verbs", &mut self.verbs),
        ]
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TopicsSettings {
    pub k_candidates: Vec<usize>,
    pub min_df: usize,
    pub iters: usize,
    pub restarts: usize,
    /// Top words per topic used for coherence.
    pub coherence_top_n: usize,
    /// Keywords listed per topic in the report.
    pub keywords: usize,
}

impl Default for TopicsSettings {
    fn default() -> Self {
        TopicsSettings {
            k_candidates: (2..=20).collect(),
            min_df: 2,
            iters: 200,
            restarts: 5,
            coherence_top_n: 10,
            keywords: 13,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PropagationSettings {
    pub k: usize,
    pub min_similarity: f64,
}

impl Default for PropagationSettings {
    fn default() -> Self {
        PropagationSettings { k: 10, min_similarity: 0.0 }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DedupSettings {
    pub collapse_cross_user: bool,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
    pub inputs: Inputs,
    #[serde(default)]
    pub topics: TopicsSettings,
    #[serde(default)]
    pub propagation: PropagationSettings,
    #[serde(default)]
    pub dedup: DedupSettings,
}

/// A config with paths resolved against the config file's directory and
/// command-line overrides applied.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub seed: u64,
    pub out: PathBuf,
    pub inputs: Inputs,
    pub topics: TopicsSettings,
    pub propagation: PropagationSettings,
    pub dedup: DedupSettings,
}

pub fn load(path: &Path, seed: Option<u64>, out: Option<PathBuf>) -> Result<Resolved> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    let mut cfg: RunConfig = toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
    let base = path.parent().unwrap_or(Path::new("."));

    for (name, p) in cfg.inputs.all_mut() {
        if p.is_relative() {
            *p = base.join(&*p);
        }
        if !p.is_file() {
            bail!("input {name}: {} does not exist", p.display());
        }
    }
    let Some(seed) = seed.or(cfg.seed) else {
        bail!("no seed given: set `seed` in the config or pass --seed");
    };
    let out = match out {
        Some(o) => o,
        None => base.join(cfg.output_dir.unwrap_or_else(|| PathBuf::from("out"))),
    };
    let t = &cfg.topics;
    if t.k_candidates.is_empty() || t.k_candidates.iter().any(|&k| k < 2) {
        bail!("topics.k_candidates must be a nonempty list of counts >= 2");
    }
    if t.min_df == 0 || t.iters == 0 || t.restarts == 0 || t.keywords == 0 {
        bail!("topics.min_df, iters, restarts and keywords must be positive");
    }
    if t.coherence_top_n < 2 {
        bail!("topics.coherence_top_n must be at least 2");
    }
    let p = &cfg.propagation;
    if p.k == 0 || !(0.0..=1.0).contains(&p.min_similarity) {
        bail!("propagation needs k >= 1 and min_similarity in [0, 1]");
    }
    Ok(Resolved {
        seed,
        out,
        inputs: cfg.inputs,
        topics: cfg.topics,
        propagation: cfg.propagation,
        dedup: cfg.dedup,
    })
}
