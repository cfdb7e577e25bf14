use std::collections::{BTreeSet, HashMap};

use super::lda::{fit_lda_with, LdaConfig, TopicModel};
use super::{TopicsError, WeightedMatrix};
use crate::textprep::Token;

/// Smoothing added to co-document counts.
pub const COHERENCE_EPSILON: f64 = 1e-12;

/// For every vocabulary term, the sorted list of documents containing it.
#[derive(Debug, Clone)]
pub struct DocTermSets {
    postings: Vec<Vec<usize>>,
}

impl DocTermSets {
    /// Indexes word-like tokens of `docs` against `terms`; other tokens and
    /// out-of-vocabulary words are ignored.
    pub fn new(docs: &[Vec<Token>], terms: &[String]) -> Self {
        let index: HashMap<&str, usize> = terms.iter().enumerate().map(|(i, t)| (t.as_str(), i)).collect();
        let mut postings = vec![Vec::new(); terms.len()];
        for (d, doc) in docs.iter().enumerate() {
            let present: BTreeSet<usize> = doc
                .iter()
                .filter(|t| t.is_wordlike())
                .filter_map(|t| index.get(t.surface.as_str()).copied())
                .collect();
            for w in present {
                postings[w].push(d);
            }
        }
        DocTermSets { postings }
    }

    pub fn doc_count(&self, w: usize) -> usize {
        self.postings[w].len()
    }

    pub fn codoc_count(&self, a: usize, b: usize) -> usize {
        let (x, y) = (&self.postings[a], &self.postings[b]);
        let (mut i, mut j, mut n) = (0, 0, 0);
        while i < x.len() && j < y.len() {
            match x[i].cmp(&y[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    n += 1;
                    i += 1;
                    j += 1;
                }
            }
        }
        n
    }
}

/// Term indices ranked by topic mass, ties broken by term.
fn ranked_terms(model: &TopicModel, topic: usize) -> Vec<usize> {
    let row = &model.topic_word[topic];
    let mut idx: Vec<usize> = (0..row.len()).collect();
    idx.sort_by(|&a, &b| {
        row[b]
            .partial_cmp(&row[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| model.terms[a].cmp(&model.terms[b]))
    });
    idx
}

/// The `n` heaviest terms of a topic, heaviest first.
pub fn top_words(model: &TopicModel, topic: usize, n: usize) -> Result<Vec<(String, f64)>, TopicsError> {
    if topic >= model.k {
        return Err(TopicsError::TopicOutOfRange { topic, k: model.k });
    }
    Ok(ranked_terms(model, topic)
        .into_iter()
        .take(n)
        .map(|i| (model.terms[i].clone(), model.topic_word[topic][i]))
        .collect())
}

/// Mean UMass coherence over topics.
///
/// For each topic's top words `w_1..w_n` (by rank), sums
/// `ln((D(w_i, w_j) + eps) / D(w_j))` over all pairs with `j < i`.
pub fn coherence(model: &TopicModel, docs: &DocTermSets, top_n: usize) -> Result<f64, TopicsError> {
    if top_n < 2 {
        return Err(TopicsError::InvalidTopN);
    }
    let mut total = 0.0;
    for topic in 0..model.k {
        let top: Vec<usize> = ranked_terms(model, topic).into_iter().take(top_n).collect();
        let mut score = 0.0;
        for i in 1..top.len() {
            for j in 0..i {
                let dj = docs.doc_count(top[j]);
                if dj == 0 {
                    return Err(TopicsError::InconsistentVocabulary(model.terms[top[j]].clone()));
                }
                let co = docs.codoc_count(top[i], top[j]) as f64;
                score += ((co + COHERENCE_EPSILON) / dj as f64).ln();
            }
        }
        total += score;
    }
    Ok(total / model.k as f64)
}

/// Fits one model per candidate topic count and keeps the most coherent,
/// preferring the smaller count on exact ties. Candidates are fitted on
/// separate threads; the result does not depend on their order.
pub fn select_k(
    matrix: &WeightedMatrix,
    docs: &DocTermSets,
    k_candidates: &[usize],
    seed: u64,
    cfg: &LdaConfig,
    top_n: usize,
) -> Result<TopicModel, TopicsError> {
    let candidates: BTreeSet<usize> = k_candidates.iter().copied().collect();
    if candidates.is_empty() {
        return Err(TopicsError::NoCandidates);
    }
    let results: Vec<Result<TopicModel, TopicsError>> = std::thread::scope(|s| {
        let handles: Vec<_> = candidates
            .iter()
            .map(|&k| {
                s.spawn(move || {
                    let mut model = fit_lda_with(matrix, k, seed, cfg)?;
                    model.coherence = Some(coherence(&model, docs, top_n)?);
                    Ok(model)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("fit thread panicked")).collect()
    });

    let models = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    Ok(most_coherent(models).expect("at least one candidate"))
}

/// Highest coherence wins; equal scores go to the smaller K.
fn most_coherent(mut models: Vec<TopicModel>) -> Option<TopicModel> {
    models.sort_by_key(|m| m.k);
    let mut best: Option<TopicModel> = None;
    for model in models {
        let score = model.coherence.unwrap_or(f64::NEG_INFINITY);
        if best
            .as_ref()
            .map_or(true, |b| score > b.coherence.unwrap_or(f64::NEG_INFINITY))
        {
            best = Some(model);
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::textprep::TokenKind;

    fn doc(words: &str) -> Vec<Token> {
        words.split_whitespace().map(|w| Token::new(w, TokenKind::Word)).collect()
    }

    fn model(terms: &[&str], topic_word: Vec<Vec<f64>>) -> TopicModel {
        TopicModel {
            k: topic_word.len(),
            terms: terms.iter().map(|s| s.to_string()).collect(),
            topic_word,
            doc_topic: vec![],
            coherence: None,
            seed: 0,
            skipped: vec![],
            objective_trace: vec![],
        }
    }

    #[test]
    fn always_cooccurring_pair_scores_near_zero() {
        let terms = ["a", "b"];
        let docs = vec![doc("a b"), doc("b a")];
        let sets = DocTermSets::new(&docs, &terms.map(String::from));
        let m = model(&terms, vec![vec![0.6, 0.4], vec![0.6, 0.4]]);
        let c = coherence(&m, &sets, 2).unwrap();
        // ln((2 + eps) / 2)
        assert!((c - (1.0f64 + 0.5e-12).ln()).abs() < 1e-15);
        assert!(c.abs() < 1e-11);
    }

    #[test]
    fn never_cooccurring_pair_is_strongly_negative() {
        let terms = ["a", "b"];
        let docs = vec![doc("a"), doc("b")];
        let sets = DocTermSets::new(&docs, &terms.map(String::from));
        let m = model(&terms, vec![vec![0.6, 0.4], vec![0.6, 0.4]]);
        let c = coherence(&m, &sets, 2).unwrap();
        assert!((c - (1e-12f64 / 1.0).ln()).abs() < 1e-9);
    }

    #[test]
    fn word_order_inside_documents_is_irrelevant() {
        let terms = ["a", "b", "c"];
        let t = terms.map(String::from);
        let m = model(&terms, vec![vec![0.5, 0.3, 0.2], vec![0.2, 0.3, 0.5]]);
        let x = DocTermSets::new(&[doc("a b c a"), doc("c b"), doc("a c")], &t);
        let y = DocTermSets::new(&[doc("c a a b"), doc("b c"), doc("c a")], &t);
        assert_eq!(coherence(&m, &x, 3).unwrap(), coherence(&m, &y, 3).unwrap());
    }

    #[test]
    fn missing_top_word_is_fatal() {
        let terms = ["a", "b"];
        let sets = DocTermSets::new(&[doc("b")], &terms.map(String::from));
        let m = model(&terms, vec![vec![0.9, 0.1], vec![0.9, 0.1]]);
        assert!(matches!(coherence(&m, &sets, 2), Err(TopicsError::InconsistentVocabulary(_))));
        assert!(matches!(coherence(&m, &sets, 1), Err(TopicsError::InvalidTopN)));
    }

    #[test]
    fn top_words_rank_and_clamp() {
        let m = model(&["b", "a", "c"], vec![vec![0.4, 0.4, 0.2], vec![0.0, 1.0, 0.0]]);
        let top = top_words(&m, 0, 10).unwrap();
        assert_eq!(top.len(), 3);
        assert_eq!(top[0].0, "a");
        assert_eq!(top[1].0, "b");
        assert_eq!(top_words(&m, 1, 1).unwrap(), vec![("a".to_string(), 1.0)]);
        assert!(top_words(&m, 2, 1).is_err());
    }

    #[test]
    fn coherence_ties_prefer_smaller_k() {
        let mut four = model(&["a", "b", "c", "d"], vec![vec![0.25; 4]; 4]);
        four.coherence = Some(-1.5);
        let mut two = model(&["a", "b", "c", "d"], vec![vec![0.25; 4]; 2]);
        two.coherence = Some(-1.5);
        assert_eq!(most_coherent(vec![four.clone(), two.clone()]).unwrap().k, 2);
        four.coherence = Some(-1.0);
        assert_eq!(most_coherent(vec![two, four]).unwrap().k, 4);
    }

    #[test]
    fn singleton_candidate_and_empty_list() {
        let terms: Vec<String> = ["a", "b", "c", "d"].map(String::from).to_vec();
        let docs = vec![doc("a b"), doc("c d"), doc("a b"), doc("c d")];
        let m = WeightedMatrix {
            rows: vec![vec![(0, 1.0), (1, 1.0)], vec![(2, 1.0), (3, 1.0)], vec![(0, 1.0), (1, 1.0)], vec![(2, 1.0), (3, 1.0)]],
            terms: terms.clone(),
        };
        let sets = DocTermSets::new(&docs, &terms);
        let cfg = LdaConfig::default();
        assert_eq!(select_k(&m, &sets, &[3], 1, &cfg, 2).unwrap().k, 3);
        assert!(matches!(select_k(&m, &sets, &[], 1, &cfg, 2), Err(TopicsError::NoCandidates)));
    }
}
