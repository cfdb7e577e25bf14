//! TF-IDF weighting, LDA topic models and coherence-based model selection.

mod coherence;
mod lda;
mod model_io;
mod planted;

pub use coherence::{coherence, select_k, top_words, DocTermSets, COHERENCE_EPSILON};
pub use lda::{fit_lda, fit_lda_with, LdaConfig, TopicModel};
pub use model_io::{read_model, write_model};
pub use planted::{planted_corpus, PlantedCorpus, PLANTED_THEMES};

use std::collections::{BTreeMap, HashMap, HashSet};

use thiserror::Error;

use crate::textprep::Token;

#[derive(Debug, Error)]
pub enum TopicsError {
    #[error("vocabulary is empty after filtering")]
    EmptyVocabulary,
    #[error("min_df must be at least 1")]
    InvalidMinDf,
    #[error("need at least 2 topics, got {0}")]
    TooFewTopics(usize),
    #[error("{k} topics requested but vocabulary has only {vocab} terms")]
    TooManyTopics { k: usize, vocab: usize },
    #[error("no document has any weight left")]
    NoDocuments,
    #[error("term {0:?} from the model occurs in no document")]
    InconsistentVocabulary(String),
    #[error("top_n must be at least 2")]
    InvalidTopN,
    #[error("no candidate topic counts given")]
    NoCandidates,
    #[error("topic {topic} out of range for a {k}-topic model")]
    TopicOutOfRange { topic: usize, k: usize },
    #[error("model file: {0}")]
    Format(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Retained terms in lexicographic order with their document frequencies.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    terms: Vec<String>,
    doc_freq: Vec<usize>,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn doc_freq(&self) -> &[usize] {
        &self.doc_freq
    }

    pub fn index_of(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }
}

/// Collects word and hashtag tokens that appear in at least `min_df`
/// documents and are not stopwords.
pub fn build_vocab(
    docs: &[Vec<Token>],
    min_df: usize,
    stopwords: &HashSet<String>,
) -> Result<Vocabulary, TopicsError> {
    if min_df == 0 {
        return Err(TopicsError::InvalidMinDf);
    }
    let mut df: BTreeMap<&str, usize> = BTreeMap::new();
    for doc in docs {
        let seen: HashSet<&str> = doc
            .iter()
            .filter(|t| t.is_wordlike() && !stopwords.contains(&t.surface))
            .map(|t| t.surface.as_str())
            .collect();
        for term in seen {
            *df.entry(term).or_default() += 1;
        }
    }
    let (terms, doc_freq): (Vec<String>, Vec<usize>) = df
        .into_iter()
        .filter(|&(_, n)| n >= min_df)
        .map(|(t, n)| (t.to_string(), n))
        .unzip();
    if terms.is_empty() {
        return Err(TopicsError::EmptyVocabulary);
    }
    let index = terms.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
    Ok(Vocabulary {
        terms,
        doc_freq,
        index,
    })
}

/// Sparse nonnegative document-term weights; each row is sorted by term index
/// and holds only positive entries.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedMatrix {
    pub rows: Vec<Vec<(usize, f64)>>,
    /// Column labels, the vocabulary terms.
    pub terms: Vec<String>,
}

impl WeightedMatrix {
    pub fn n_docs(&self) -> usize {
        self.rows.len()
    }

    pub fn n_terms(&self) -> usize {
        self.terms.len()
    }
}

/// Raw term counts per document, restricted to the vocabulary.
pub fn term_counts(docs: &[Vec<Token>], vocab: &Vocabulary) -> Vec<BTreeMap<usize, usize>> {
    docs.iter()
        .map(|doc| {
            let mut counts = BTreeMap::new();
            for t in doc.iter().filter(|t| t.is_wordlike()) {
                if let Some(i) = vocab.index_of(&t.surface) {
                    *counts.entry(i).or_default() += 1;
                }
            }
            counts
        })
        .collect()
}

/// `tf(d, t) * ln(N / df(t))` with `N` the number of documents. Terms present
/// in every document get weight zero and are left out of the row.
pub fn tfidf(docs: &[Vec<Token>], vocab: &Vocabulary) -> WeightedMatrix {
    let n = docs.len() as f64;
    let idf: Vec<f64> = vocab.doc_freq.iter().map(|&df| (n / df as f64).ln()).collect();
    let rows = term_counts(docs, vocab)
        .into_iter()
        .map(|counts| {
            counts
                .into_iter()
                .map(|(i, tf)| (i, tf as f64 * idf[i]))
                .filter(|&(_, w)| w > 0.0)
                .collect()
        })
        .collect();
    WeightedMatrix {
        rows,
        terms: vocab.terms.clone(),
    }
}

/// Plain counts as a weighted matrix, for fitting without TF-IDF.
pub fn count_matrix(docs: &[Vec<Token>], vocab: &Vocabulary) -> WeightedMatrix {
    let rows = term_counts(docs, vocab)
        .into_iter()
        .map(|c| c.into_iter().map(|(i, n)| (i, n as f64)).collect())
        .collect();
    WeightedMatrix {
        rows,
        terms: vocab.terms.clone(),
    }
}
