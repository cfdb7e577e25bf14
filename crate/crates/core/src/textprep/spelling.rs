use std::collections::{HashMap, HashSet};
use std::io::BufRead;

use super::{TextprepError, Token, TokenKind};

/// Abbreviations, censored forms and the list of known-good words.
#[derive(Debug, Clone, Default)]
pub struct CorrectionDictionary {
    abbreviations: HashMap<String, Vec<String>>,
    censored: HashSet<String>,
    valid_words: HashSet<String>,
}

impl CorrectionDictionary {
    /// Builds a dictionary, checking that every expansion word is valid and
    /// is not itself an abbreviation.
    pub fn new<A, W, C>(abbreviations: A, valid_words: W, censored: C) -> Result<Self, TextprepError>
    where
        A: IntoIterator<Item = (String, String)>,
        W: IntoIterator<Item = String>,
        C: IntoIterator<Item = String>,
    {
        let valid_words: HashSet<String> = valid_words.into_iter().map(|w| w.to_lowercase()).collect();
        let abbreviations: HashMap<String, Vec<String>> = abbreviations
            .into_iter()
            .map(|(k, v)| {
                (
                    k.to_lowercase(),
                    v.split_whitespace().map(str::to_lowercase).collect(),
                )
            })
            .collect();
        for (abbr, expansion) in &abbreviations {
            if expansion.is_empty() {
                return Err(TextprepError::Model(format!("empty expansion for {abbr:?}")));
            }
            for w in expansion {
                if !valid_words.contains(w) {
                    return Err(TextprepError::Model(format!(
                        "expansion of {abbr:?} uses unknown word {w:?}"
                    )));
                }
                if abbreviations.contains_key(w) {
                    return Err(TextprepError::Model(format!(
                        "expansion of {abbr:?} uses abbreviation {w:?}"
                    )));
                }
            }
        }
        Ok(CorrectionDictionary {
            abbreviations,
            censored: censored.into_iter().map(|w| w.to_lowercase()).collect(),
            valid_words,
        })
    }

    /// Reads the two dictionary files: `abbreviation\texpansion` lines, and a
    /// one-per-line word list in which entries containing `*` are censored
    /// forms rather than valid words.
    pub fn read<A: BufRead, W: BufRead>(abbreviations: A, words: W) -> Result<Self, TextprepError> {
        let mut abbr = Vec::new();
        for (i, line) in abbreviations.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            match line.split_once('\t') {
                Some((k, v)) if !k.trim().is_empty() => abbr.push((k.trim().to_string(), v.trim().to_string())),
                _ => {
                    return Err(TextprepError::Line {
                        line: i + 1,
                        message: format!("expected abbreviation<TAB>expansion, got {line:?}"),
                    })
                }
            }
        }
        let mut valid = Vec::new();
        let mut censored = Vec::new();
        for line in words.lines() {
            let line = line?;
            let w = line.trim();
            if w.is_empty() {
                continue;
            }
            if w.contains('*') {
                censored.push(w.to_string());
            } else {
                valid.push(w.to_string());
            }
        }
        Self::new(abbr, valid, censored)
    }

    pub fn is_valid(&self, w: &str) -> bool {
        self.valid_words.contains(w)
    }

    pub fn is_censored(&self, w: &str) -> bool {
        self.censored.contains(w)
    }

    pub fn expansion(&self, w: &str) -> Option<&[String]> {
        self.abbreviations.get(w).map(Vec::as_slice)
    }
}

/// Letter runs of length three or more, as (start char index, run length).
fn elongated_runs(chars: &[char]) -> Vec<(usize, usize)> {
    let mut runs = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let mut j = i + 1;
        while j < chars.len() && chars[j] == chars[i] {
            j += 1;
        }
        if j - i >= 3 && chars[i].is_alphabetic() {
            runs.push((i, j - i));
        }
        i = j;
    }
    runs
}

/// Squeezing more than this many runs at once is not attempted.
const MAX_RUNS: usize = 12;

/// Candidate spellings with elongated runs cut to 2 or 1 letters, ordered so
/// that keeping doubles is tried first.
fn squeeze_candidates(word: &str) -> Vec<String> {
    let chars: Vec<char> = word.chars().collect();
    let runs = elongated_runs(&chars);
    if runs.is_empty() || runs.len() > MAX_RUNS {
        return Vec::new();
    }
    let m = runs.len();
    (0u32..(1 << m))
        .map(|mask| {
            let mut out = String::with_capacity(word.len());
            let mut pos = 0;
            for (r, &(start, len)) in runs.iter().enumerate() {
                out.extend(&chars[pos..start]);
                // Bit set (reading from the first run) means squeeze to one.
                let keep = if mask & (1 << (m - 1 - r)) != 0 { 1 } else { 2 };
                out.extend(std::iter::repeat(chars[start]).take(keep));
                pos = start + len;
            }
            out.extend(&chars[pos..]);
            out
        })
        .collect()
}

fn expand(expansion: &[String]) -> Vec<Token> {
    expansion.iter().map(|w| Token::new(w, TokenKind::Word)).collect()
}

/// Applies abbreviation expansion and elongation squeezing to a word token.
/// Tokens that are not words, and words nothing applies to, pass through.
pub fn correct_spelling(token: &Token, dict: &CorrectionDictionary) -> Vec<Token> {
    if token.kind != TokenKind::Word {
        return vec![token.clone()];
    }
    let w = token.surface.to_lowercase();
    if let Some(exp) = dict.expansion(&w) {
        return expand(exp);
    }
    if dict.is_censored(&w) {
        return vec![Token::new(&w, TokenKind::Censored)];
    }
    if dict.is_valid(&w) {
        return vec![Token::new(&w, TokenKind::Word)];
    }
    for cand in squeeze_candidates(&w) {
        if dict.is_valid(&cand) {
            return vec![Token::new(&cand, TokenKind::Word)];
        }
        if let Some(exp) = dict.expansion(&cand) {
            return expand(exp);
        }
    }
    vec![Token::new(&w, TokenKind::Word)]
}
