//! Normalization of noisy short-form text into token sequences.

mod segment;
mod spelling;
mod tokenize;

pub use segment::{segment, LanguageModel, BACKOFF};
pub use spelling::{correct_spelling, CorrectionDictionary};
pub use tokenize::{is_emoji, tokenize, EMOTICONS};

use thiserror::Error;

pub const URL_TAG: &str = "<url>";
pub const EMAIL_TAG: &str = "<email>";
pub const USER_TAG: &str = "<user>";

#[derive(Debug, Error)]
pub enum TextprepError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },
    #[error("{0}")]
    Model(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TokenKind {
    Word,
    Emoticon,
    Censored,
    Tag,
    HashtagSegmented,
    Punct,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Token {
    pub surface: String,
    pub kind: TokenKind,
}

impl Token {
    pub fn new(surface: &str, kind: TokenKind) -> Self {
        debug_assert!(!surface.is_empty());
        Token {
            surface: surface.to_string(),
            kind,
        }
    }

    pub fn is_wordlike(&self) -> bool {
        matches!(self.kind, TokenKind::Word | TokenKind::HashtagSegmented)
    }
}

/// Splits a hashtag body into words. Underscores are explicit separators;
/// each alphanumeric piece goes through the segmenter.
fn split_hashtag(body: &str, lm: &LanguageModel) -> Vec<String> {
    body.split('_')
        .filter(|p| !p.is_empty())
        .flat_map(|p| segment(&p.to_lowercase(), lm))
        .collect()
}

/// Full normalization: tokenize, correct each word, and split hashtags into
/// corrected `HashtagSegmented` tokens.
pub fn preprocess(text: &str, dict: &CorrectionDictionary, lm: &LanguageModel) -> Vec<Token> {
    let mut out = Vec::new();
    for tok in tokenize(text) {
        match tok.kind {
            TokenKind::Word if tok.surface.starts_with('#') => {
                let body = &tok.surface[1..];
                for piece in split_hashtag(body, lm) {
                    for t in correct_spelling(&Token::new(&piece, TokenKind::Word), dict) {
                        let kind = match t.kind {
                            TokenKind::Word => TokenKind::HashtagSegmented,
                            other => other,
                        };
                        out.push(Token::new(&t.surface, kind));
                    }
                }
            }
            TokenKind::Word => out.extend(correct_spelling(&tok, dict)),
            _ => out.push(tok),
        }
    }
    out
}

/// Joins token surfaces with single spaces.
pub fn render(tokens: &[Token]) -> String {
    tokens
        .iter()
        .map(|t| t.surface.as_str())
        .collect::<Vec<_>>()
        .join(" ")
}
