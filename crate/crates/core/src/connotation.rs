//! Connotation-frame scoring of event triples.
//!
//! Annotated verbs keep their frame. Other verbs borrow a similarity-weighted
//! average of the frames of their nearest annotated neighbours in embedding
//! space; verbs with no usable neighbour are reported as unscorable.

use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, Write};

use thiserror::Error;

use crate::corpus::{HarassmentLabel, HarassmentType, Participant};
use crate::events::EventTriple;

#[derive(Debug, Error)]
pub enum ConnotationError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },
    #[error("lexicon is empty")]
    EmptyLexicon,
    #[error("embedding file is empty")]
    EmptyEmbeddings,
    #[error("score {value} for {dimension} is outside [-1, 1]")]
    OutOfRange { dimension: &'static str, value: f64 },
    #[error("no embedding for {0:?}")]
    NoEmbedding(String),
    #[error("{0:?} is not annotated and has no annotated neighbour")]
    Unscorable(String),
    #[error("neighbour count must be at least 1")]
    InvalidNeighbourCount,
    #[error("min_similarity must lie in [0, 1], got {0}")]
    InvalidMinSimilarity(f64),
    #[error("triple has an empty verb lemma")]
    EmptyVerb,
}

/// Five connotation scores, each in `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConnotationFrame {
    pub sentiment_verb: f64,
    pub sentiment_affected: f64,
    pub persp_affected_to_agent: f64,
    pub persp_reader_to_affected: f64,
    pub persp_affected_to_affected: f64,
}

impl ConnotationFrame {
    pub const DIMENSIONS: [&'static str; 5] = [
        "sentiment_verb",
        "sentiment_affected",
        "persp_affected_to_agent",
        "persp_reader_to_affected",
        "persp_affected_to_affected",
    ];

    pub fn new(values: [f64; 5]) -> Result<Self, ConnotationError> {
        for (value, dimension) in values.iter().zip(Self::DIMENSIONS) {
            if !(-1.0..=1.0).contains(value) {
                return Err(ConnotationError::OutOfRange { dimension, value: *value });
            }
        }
        Ok(Self::from_array_unchecked(values))
    }

    fn from_array_unchecked(v: [f64; 5]) -> Self {
        ConnotationFrame {
            sentiment_verb: v[0],
            sentiment_affected: v[1],
            persp_affected_to_agent: v[2],
            persp_reader_to_affected: v[3],
            persp_affected_to_affected: v[4],
        }
    }

    pub fn to_array(self) -> [f64; 5] {
        [
            self.sentiment_verb,
            self.sentiment_affected,
            self.persp_affected_to_agent,
            self.persp_reader_to_affected,
            self.persp_affected_to_affected,
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConnotationLexicon {
    frames: BTreeMap<String, ConnotationFrame>,
}

impl ConnotationLexicon {
    pub fn new(frames: BTreeMap<String, ConnotationFrame>) -> Result<Self, ConnotationError> {
        if frames.is_empty() {
            return Err(ConnotationError::EmptyLexicon);
        }
        Ok(ConnotationLexicon { frames })
    }

    pub fn get(&self, lemma: &str) -> Option<&ConnotationFrame> {
        self.frames.get(lemma)
    }

    pub fn contains(&self, lemma: &str) -> bool {
        self.frames.contains_key(lemma)
    }

    /// Lemmas in lexicographic order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, &ConnotationFrame)> {
        self.frames.iter().map(|(l, f)| (l.as_str(), f))
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }
}

/// Reads `lemma` followed by five scores per line. Fields may be separated by
/// tabs or spaces; blank lines are skipped.
pub fn load_lexicon<R: BufRead>(source: R) -> Result<ConnotationLexicon, ConnotationError> {
    let mut frames = BTreeMap::new();
    for (i, line) in source.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        let bad = |message: String| ConnotationError::Line { line: lineno, message };
        if fields.len() != 6 {
            return Err(bad(format!("expected lemma and 5 scores, found {} fields", fields.len())));
        }
        let mut values = [0.0; 5];
        for (slot, field) in values.iter_mut().zip(&fields[1..]) {
            *slot = field.parse().map_err(|_| bad(format!("not a number: {field:?}")))?;
        }
        let frame = ConnotationFrame::new(values).map_err(|e| bad(e.to_string()))?;
        let lemma = fields[0].to_lowercase();
        if frames.insert(lemma.clone(), frame).is_some() {
            return Err(bad(format!("duplicate lemma {lemma:?}")));
        }
    }
    ConnotationLexicon::new(frames)
}

/// Word vectors of a single dimension, none of them zero.
#[derive(Debug, Clone)]
pub struct EmbeddingStore {
    dimension: usize,
    index: HashMap<String, usize>,
    vectors: Vec<Vec<f64>>,
    sq_norms: Vec<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl EmbeddingStore {
    pub fn new(entries: Vec<(String, Vec<f64>)>) -> Result<Self, ConnotationError> {
        let dimension = entries.first().ok_or(ConnotationError::EmptyEmbeddings)?.1.len();
        let mut store = EmbeddingStore {
            dimension,
            index: HashMap::new(),
            vectors: Vec::new(),
            sq_norms: Vec::new(),
        };
        for (i, (word, vector)) in entries.into_iter().enumerate() {
            store
                .insert(word, vector)
                .map_err(|message| ConnotationError::Line { line: i + 1, message })?;
        }
        Ok(store)
    }

    fn insert(&mut self, word: String, vector: Vec<f64>) -> Result<(), String> {
        if vector.len() != self.dimension {
            return Err(format!("expected {} components, found {}", self.dimension, vector.len()));
        }
        if vector.iter().any(|x| !x.is_finite()) {
            return Err(format!("non-finite component for {word:?}"));
        }
        let sq = dot(&vector, &vector);
        if sq == 0.0 {
            return Err(format!("zero vector for {word:?}"));
        }
        if self.index.contains_key(&word) {
            return Err(format!("duplicate word {word:?}"));
        }
        self.index.insert(word, self.vectors.len());
        self.vectors.push(vector);
        self.sq_norms.push(sq);
        Ok(())
    }

    /// Reads `word v1 ... vD` lines; the first line fixes `D`.
    pub fn load<R: BufRead>(source: R) -> Result<Self, ConnotationError> {
        let mut store: Option<EmbeddingStore> = None;
        for (i, line) in source.lines().enumerate() {
            let line = line?;
            let bad = |message: String| ConnotationError::Line { line: i + 1, message };
            let mut fields = line.split_whitespace();
            let Some(word) = fields.next() else { continue };
            let vector: Vec<f64> = fields
                .map(|f| f.parse().map_err(|_| bad(format!("not a number: {f:?}"))))
                .collect::<Result<_, _>>()?;
            if vector.is_empty() {
                return Err(bad(format!("no components for {word:?}")));
            }
            let s = store.get_or_insert_with(|| EmbeddingStore {
                dimension: vector.len(),
                index: HashMap::new(),
                vectors: Vec::new(),
                sq_norms: Vec::new(),
            });
            s.insert(word.to_string(), vector).map_err(bad)?;
        }
        store.ok_or(ConnotationError::EmptyEmbeddings)
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn get(&self, word: &str) -> Option<&[f64]> {
        self.index.get(word).map(|&i| self.vectors[i].as_slice())
    }

    /// Cosine similarity. A word compared with itself gives exactly 1.
    pub fn cosine(&self, a: &str, b: &str) -> Option<f64> {
        let (&i, &j) = (self.index.get(a)?, self.index.get(b)?);
        Some(self.cosine_at(i, j))
    }

    fn cosine_at(&self, i: usize, j: usize) -> f64 {
        dot(&self.vectors[i], &self.vectors[j]) / (self.sq_norms[i] * self.sq_norms[j]).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropagationConfig {
    /// Neighbourhood size.
    pub k: usize,
    pub min_similarity: f64,
}

impl Default for PropagationConfig {
    fn default() -> Self {
        PropagationConfig { k: 10, min_similarity: 0.0 }
    }
}

impl PropagationConfig {
    pub fn validate(&self) -> Result<(), ConnotationError> {
        if self.k == 0 {
            return Err(ConnotationError::InvalidNeighbourCount);
        }
        if !(0.0..=1.0).contains(&self.min_similarity) {
            return Err(ConnotationError::InvalidMinSimilarity(self.min_similarity));
        }
        Ok(())
    }
}

/// The `k` most similar annotated lemmas that also have embeddings, keeping
/// only similarities of at least `min_similarity`. Sorted by similarity
/// descending, then lemma.
pub fn nearest_annotated(
    word: &str,
    emb: &EmbeddingStore,
    lex: &ConnotationLexicon,
    cfg: &PropagationConfig,
) -> Result<Vec<(String, f64)>, ConnotationError> {
    cfg.validate()?;
    let &w = emb
        .index
        .get(word)
        .ok_or_else(|| ConnotationError::NoEmbedding(word.to_string()))?;
    let mut hits: Vec<(&str, f64)> = lex
        .iter()
        .filter_map(|(lemma, _)| emb.index.get(lemma).map(|&e| (lemma, emb.cosine_at(w, e))))
        .filter(|&(_, sim)| sim >= cfg.min_similarity)
        .collect();
    hits.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    hits.truncate(cfg.k);
    Ok(hits.into_iter().map(|(l, s)| (l.to_string(), s)).collect())
}

/// Annotated lemmas keep their frame. Otherwise each dimension is
/// `(1/n) * sum(max(0, cos(w, e)) * S(e))` over the `n` neighbours, clamped
/// to `[-1, 1]`.
pub fn propagate(
    word: &str,
    lex: &ConnotationLexicon,
    emb: &EmbeddingStore,
    cfg: &PropagationConfig,
) -> Result<ConnotationFrame, ConnotationError> {
    if let Some(frame) = lex.get(word) {
        return Ok(*frame);
    }
    let neighbours = match nearest_annotated(word, emb, lex, cfg) {
        Ok(n) => n,
        Err(ConnotationError::NoEmbedding(_)) => Vec::new(),
        Err(e) => return Err(e),
    };
    if neighbours.is_empty() {
        return Err(ConnotationError::Unscorable(word.to_string()));
    }
    let weighted: Vec<(f64, [f64; 5])> = neighbours
        .iter()
        .map(|(lemma, sim)| (sim.max(0.0), lex.get(lemma).expect("neighbour is annotated").to_array()))
        .collect();
    Ok(weighted_mean(&weighted))
}

/// `(1/n) * sum(w_i * S_i)` per dimension, clamped.
fn weighted_mean(weighted: &[(f64, [f64; 5])]) -> ConnotationFrame {
    let n = weighted.len() as f64;
    let mut out = [0.0; 5];
    for (d, slot) in out.iter_mut().enumerate() {
        let sum: f64 = weighted.iter().map(|(w, s)| w * s[d]).sum();
        *slot = (sum / n).clamp(-1.0, 1.0);
    }
    ConnotationFrame::from_array_unchecked(out)
}

/// Scores a triple by its verb. Passive triples need no special handling
/// because extraction already put the roles in place.
pub fn score_event(
    triple: &EventTriple,
    lex: &ConnotationLexicon,
    emb: &EmbeddingStore,
    cfg: &PropagationConfig,
) -> Result<(EventTriple, ConnotationFrame), ConnotationError> {
    if triple.verb_lemma.is_empty() {
        return Err(ConnotationError::EmptyVerb);
    }
    let frame = propagate(&triple.verb_lemma, lex, emb, cfg)?;
    Ok((triple.clone(), frame))
}

/// One row of the per-label sentiment table.
#[derive(Debug, Clone, PartialEq)]
pub struct SentimentRow {
    pub harassment_type: HarassmentType,
    pub participant: Participant,
    pub event_sentiment: f64,
    pub affected_sentiment: f64,
    pub percentage: f64,
    pub posts: usize,
}

pub const SENTIMENT_HEADER: &str = "harassment_type,participant,event_sentiment,affected_sentiment,percentage";

/// Groups scored posts by label.
///
/// A post with several scored triples contributes the mean of their frames,
/// so every post weighs the same. Percentages are shares of the labeled posts
/// that have at least one score. Empty groups are left out.
pub fn aggregate(scored: &[(String, ConnotationFrame)], labels: &[HarassmentLabel]) -> Vec<SentimentRow> {
    let mut per_post: HashMap<&str, (usize, [f64; 2])> = HashMap::new();
    for (post, frame) in scored {
        let e = per_post.entry(post.as_str()).or_insert((0, [0.0; 2]));
        e.0 += 1;
        e.1[0] += frame.sentiment_verb;
        e.1[1] += frame.sentiment_affected;
    }
    let mut groups: BTreeMap<(HarassmentType, Participant), Vec<[f64; 2]>> = BTreeMap::new();
    for label in labels {
        if let Some((n, sums)) = per_post.get(label.post_id.as_str()) {
            let n = *n as f64;
            groups
                .entry((label.harassment_type, label.participant))
                .or_default()
                .push([sums[0] / n, sums[1] / n]);
        }
    }
    let total: usize = groups.values().map(Vec::len).sum();
    groups
        .into_iter()
        .map(|((harassment_type, participant), posts)| {
            let n = posts.len() as f64;
            SentimentRow {
                harassment_type,
                participant,
                event_sentiment: posts.iter().map(|p| p[0]).sum::<f64>() / n,
                affected_sentiment: posts.iter().map(|p| p[1]).sum::<f64>() / n,
                percentage: 100.0 * n / total as f64,
                posts: posts.len(),
            }
        })
        .collect()
}

pub fn write_sentiment_table<W: Write>(rows: &[SentimentRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{SENTIMENT_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{:.4},{:.4},{:.2}",
            r.harassment_type.label(),
            r.participant.label(),
            r.event_sentiment,
            r.affected_sentiment,
            r.percentage
        )?;
    }
    Ok(())
}
