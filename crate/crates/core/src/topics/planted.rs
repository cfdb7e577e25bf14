//! Synthetic corpus with known topics, for recovery checks.

use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::textprep::{Token, TokenKind};

/// Three disjoint ten-word themes.
pub const PLANTED_THEMES: [[&str; 10]; 3] = [
    ["campus", "report", "office", "policy", "title", "dean", "complaint", "investigation", "hearing", "student"],
    ["story", "share", "brave", "support", "voice", "believe", "survivor", "strength", "speak", "solidarity"],
    ["party", "drink", "night", "dorm", "friend", "walk", "home", "scared", "alone", "door"],
];

#[derive(Debug, Clone)]
pub struct PlantedCorpus {
    pub docs: Vec<Vec<Token>>,
    /// Theme index each document was drawn from.
    pub theme_of: Vec<usize>,
}

/// Probability of the `rank`-th word of a theme (Zipf, exponent 1).
pub fn planted_word_prob(rank: usize) -> f64 {
    let norm: f64 = (1..=10).map(|r| 1.0 / r as f64).sum();
    1.0 / (rank + 1) as f64 / norm
}

/// `docs_per_theme` documents per theme, each `doc_len` tokens drawn from
/// its single theme with Zipf-distributed word probabilities.
pub fn planted_corpus(docs_per_theme: usize, doc_len: usize, seed: u64) -> PlantedCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let words = WeightedIndex::new((0..10).map(planted_word_prob)).expect("positive weights");
    let mut docs = Vec::new();
    let mut theme_of = Vec::new();
    for _ in 0..docs_per_theme {
        for (t, theme) in PLANTED_THEMES.iter().enumerate() {
            let doc = (0..doc_len)
                .map(|_| Token::new(theme[words.sample(&mut rng)], TokenKind::Word))
                .collect();
            docs.push(doc);
            theme_of.push(t);
        }
    }
    PlantedCorpus { docs, theme_of }
}
