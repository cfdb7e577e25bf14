use std::cmp::Ordering;
use std::collections::HashMap;
use std::io::BufRead;

use super::TextprepError;

/// Weight applied when a word is scored without bigram support.
pub const BACKOFF: f64 = 0.4;

/// Unigram and bigram counts used to score word sequences.
#[derive(Debug, Clone, Default)]
pub struct LanguageModel {
    unigrams: HashMap<String, u64>,
    /// prev -> next -> count
    bigrams: HashMap<String, HashMap<String, u64>>,
    total: u64,
}

impl LanguageModel {
    pub fn new<U, B>(unigrams: U, bigrams: B) -> Result<Self, TextprepError>
    where
        U: IntoIterator<Item = (String, u64)>,
        B: IntoIterator<Item = ((String, String), u64)>,
    {
        let mut lm = LanguageModel::default();
        for (w, c) in unigrams {
            if c == 0 {
                return Err(TextprepError::Model(format!("zero count for unigram {w:?}")));
            }
            *lm.unigrams.entry(w).or_default() += c;
            lm.total += c;
        }
        for ((a, b), c) in bigrams {
            if c == 0 {
                return Err(TextprepError::Model(format!("zero count for bigram {a:?} {b:?}")));
            }
            for w in [&a, &b] {
                if !lm.unigrams.contains_key(w) {
                    return Err(TextprepError::Model(format!(
                        "bigram word {w:?} missing from unigrams"
                    )));
                }
            }
            *lm.bigrams.entry(a).or_default().entry(b).or_default() += c;
        }
        if lm.total == 0 {
            return Err(TextprepError::Model("language model has no unigrams".into()));
        }
        Ok(lm)
    }

    /// Parses the tab-delimited format: a `UNIGRAM` section of `word\tcount`
    /// lines followed by a `BIGRAM` section of `word1\tword2\tcount` lines.
    pub fn read<R: BufRead>(source: R) -> Result<Self, TextprepError> {
        #[derive(PartialEq)]
        enum Section {
            None,
            Uni,
            Bi,
        }
        let mut section = Section::None;
        let mut unigrams = Vec::new();
        let mut bigrams = Vec::new();
        for (i, line) in source.lines().enumerate() {
            let line = line?;
            let lineno = i + 1;
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() {
                continue;
            }
            match line.trim() {
                "UNIGRAM" => {
                    section = Section::Uni;
                    continue;
                }
                "BIGRAM" => {
                    section = Section::Bi;
                    continue;
                }
                _ => {}
            }
            let fields: Vec<&str> = line.split('\t').collect();
            let bad = || TextprepError::Line {
                line: lineno,
                message: format!("malformed language model line {line:?}"),
            };
            let count = |s: &str| s.trim().parse::<u64>().map_err(|_| bad());
            match (&section, fields.as_slice()) {
                (Section::Uni, [w, c]) => unigrams.push((w.to_string(), count(c)?)),
                (Section::Bi, [a, b, c]) => {
                    bigrams.push(((a.to_string(), b.to_string()), count(c)?))
                }
                _ => return Err(bad()),
            }
        }
        Self::new(unigrams, bigrams)
    }

    pub fn total_unigrams(&self) -> u64 {
        self.total
    }

    pub fn vocabulary_size(&self) -> usize {
        self.unigrams.len()
    }

    pub fn unigram(&self, w: &str) -> Option<u64> {
        self.unigrams.get(w).copied()
    }

    pub fn bigram(&self, a: &str, b: &str) -> Option<u64> {
        self.bigrams.get(a)?.get(b).copied()
    }

    /// Add-one smoothed unigram probability.
    pub fn laplace_prob(&self, w: &str) -> f64 {
        let c = self.unigram(w).unwrap_or(0) as f64;
        (c + 1.0) / (self.total as f64 + self.unigrams.len() as f64)
    }

    /// Log score of `word` following `prev`.
    ///
    /// Known bigrams use the relative frequency `count(prev, word) / count(prev)`;
    /// otherwise known words back off to `0.4 * laplace(word)` and unknown
    /// chunks pay `ln(10^-len / total)`.
    pub fn score(&self, word: &str, prev: Option<&str>) -> f64 {
        if !self.unigrams.contains_key(word) {
            let eps = 1.0 / self.total as f64;
            return (eps * 10f64.powi(-(word.chars().count() as i32))).ln();
        }
        if let Some(prev) = prev {
            if let (Some(bi), Some(uni)) = (self.bigram(prev, word), self.unigram(prev)) {
                return (bi as f64 / uni as f64).ln();
            }
        }
        (BACKOFF * self.laplace_prob(word)).ln()
    }

    /// Total score of a segmentation, accumulated left to right.
    pub fn sequence_score<S: AsRef<str>>(&self, words: &[S]) -> f64 {
        let mut total = 0.0;
        let mut prev: Option<&str> = None;
        for w in words {
            total += self.score(w.as_ref(), prev);
            prev = Some(w.as_ref());
        }
        total
    }
}

#[derive(Clone)]
struct Best {
    score: f64,
    /// Word boundary positions, kept for tie-breaks and the final answer.
    words: Vec<usize>,
}

/// Splits an unspaced lowercase string into its highest-scoring word sequence.
///
/// The search runs over states `(start, end)` naming the last word, so bigram
/// context is exact. Equal scores go to the lexicographically smaller word
/// list.
pub fn segment(body: &str, lm: &LanguageModel) -> Vec<String> {
    if body.is_empty() {
        return Vec::new();
    }
    // Char boundaries, so multi-byte letters are never split.
    let bounds: Vec<usize> = body
        .char_indices()
        .map(|(i, _)| i)
        .chain(std::iter::once(body.len()))
        .collect();
    let n = bounds.len() - 1;
    let piece = |a: usize, b: usize| &body[bounds[a]..bounds[b]];

    // best[end][start]: best segmentation of body[..end] whose last word is
    // body[start..end].
    let mut best: Vec<Vec<Option<Best>>> = vec![vec![None; n + 1]; n + 1];
    for end in 1..=n {
        for start in 0..end {
            let word = piece(start, end);
            let candidate = if start == 0 {
                Some(Best {
                    score: lm.score(word, None),
                    words: vec![0, end],
                })
            } else {
                let mut chosen: Option<Best> = None;
                for prev_start in 0..start {
                    let Some(prev) = &best[start][prev_start] else {
                        continue;
                    };
                    let score = prev.score + lm.score(word, Some(piece(prev_start, start)));
                    let better = match &chosen {
                        None => true,
                        Some(c) => match score.partial_cmp(&c.score) {
                            Some(Ordering::Greater) => true,
                            Some(Ordering::Equal) => {
                                compare_splits(body, &bounds, &prev.words, &c.words[..c.words.len() - 1])
                                    == Ordering::Less
                            }
                            _ => false,
                        },
                    };
                    if better {
                        let mut words = prev.words.clone();
                        words.push(end);
                        chosen = Some(Best {
                            score,
                            words,
                        });
                    }
                }
                chosen
            };
            best[end][start] = candidate;
        }
    }

    let mut winner: Option<&Best> = None;
    for start in 0..n {
        let Some(cand) = &best[n][start] else { continue };
        winner = match winner {
            None => Some(cand),
            Some(w) => match cand.score.partial_cmp(&w.score) {
                Some(Ordering::Greater) => Some(cand),
                Some(Ordering::Equal)
                    if compare_splits(body, &bounds, &cand.words, &w.words) == Ordering::Less =>
                {
                    Some(cand)
                }
                _ => Some(w),
            },
        };
    }
    let winner = winner.expect("nonempty body has at least one segmentation");
    winner
        .words
        .windows(2)
        .map(|w| piece(w[0], w[1]).to_string())
        .collect()
}

/// Lexicographic comparison of two segmentations given as boundary lists.
fn compare_splits(body: &str, bounds: &[usize], a: &[usize], b: &[usize]) -> Ordering {
    let words = |s: &[usize]| -> Vec<&str> {
        s.windows(2).map(|w| &body[bounds[w[0]]..bounds[w[1]]]).collect()
    };
    words(a).cmp(&words(b))
}
