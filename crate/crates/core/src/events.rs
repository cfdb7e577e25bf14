//! Rule-based extraction of action / agent / affected event triples.
//!
//! The default [`RuleExtractor`] looks for inventory verbs and picks the
//! nearest noun-like tokens around them. Any other source of triples can
//! stand in through the [`EventExtractor`] trait or the TSV import path.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::io::{BufRead, Write};

use thiserror::Error;

use crate::stopwords::default_stopwords;
use crate::textprep::{Token, TokenKind};

#[derive(Debug, Error)]
pub enum EventsError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },
    #[error("inflection {surface:?} maps to unknown lemma {lemma:?}")]
    UnknownLemma { surface: String, lemma: String },
}

/// Verb lemmas and known inflected forms.
#[derive(Debug, Clone, Default)]
pub struct VerbInventory {
    lemmas: BTreeSet<String>,
    inflections: HashMap<String, String>,
}

impl VerbInventory {
    pub fn new<L, I>(lemmas: L, inflections: I) -> Result<Self, EventsError>
    where
        L: IntoIterator<Item = String>,
        I: IntoIterator<Item = (String, String)>,
    {
        let lemmas: BTreeSet<String> = lemmas.into_iter().map(|l| l.to_lowercase()).collect();
        let mut map = HashMap::new();
        for (surface, lemma) in inflections {
            let (surface, lemma) = (surface.to_lowercase(), lemma.to_lowercase());
            if !lemmas.contains(&lemma) {
                return Err(EventsError::UnknownLemma { surface, lemma });
            }
            map.insert(surface, lemma);
        }
        Ok(VerbInventory {
            lemmas,
            inflections: map,
        })
    }

    /// Reads `lemma\tinflection1,inflection2,...` lines; the inflection
    /// column may be absent.
    pub fn read<R: BufRead>(source: R) -> Result<Self, EventsError> {
        let mut lemmas = Vec::new();
        let mut inflections = Vec::new();
        for (i, line) in source.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let (lemma, rest) = line.split_once('\t').unwrap_or((line, ""));
            let lemma = lemma.trim();
            if lemma.is_empty() || lemma.contains(char::is_whitespace) {
                return Err(EventsError::Line {
                    line: i + 1,
                    message: format!("bad lemma {lemma:?}"),
                });
            }
            for form in rest.split(',').map(str::trim).filter(|f| !f.is_empty()) {
                inflections.push((form.to_string(), lemma.to_string()));
            }
            lemmas.push(lemma.to_string());
        }
        Self::new(lemmas, inflections)
    }

    pub fn contains(&self, lemma: &str) -> bool {
        self.lemmas.contains(lemma)
    }

    pub fn lemmas(&self) -> impl Iterator<Item = &str> {
        self.lemmas.iter().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.lemmas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lemmas.is_empty()
    }
}

fn undouble(stem: &str) -> Option<&str> {
    let b = stem.as_bytes();
    let n = b.len();
    (n >= 2 && b[n - 1] == b[n - 2] && !b"aeiou".contains(&b[n - 1])).then(|| &stem[..n - 1])
}

/// Maps a surface form to an inventory lemma: explicit inflections first,
/// then the form itself, then `-ied/-ies`, `-ing`, `-ed`, `-es` and `-s`
/// stripping with consonant undoubling and `e` restoration.
pub fn lemmatize(surface: &str, inv: &VerbInventory) -> Option<String> {
    let w = surface.to_lowercase();
    if let Some(l) = inv.inflections.get(&w) {
        return Some(l.clone());
    }
    if inv.contains(&w) {
        return Some(w);
    }
    let mut cands: Vec<String> = Vec::new();
    if let Some(s) = w.strip_suffix("ied").or_else(|| w.strip_suffix("ies")) {
        cands.push(format!("{s}y"));
    }
    if let Some(s) = w.strip_suffix("ing").filter(|s| s.len() >= 2) {
        cands.push(s.to_string());
        cands.push(format!("{s}e"));
        cands.extend(undouble(s).map(String::from));
    }
    if let Some(s) = w.strip_suffix("ed").filter(|s| s.len() >= 2) {
        cands.push(s.to_string());
        cands.push(format!("{s}e"));
        cands.extend(undouble(s).map(String::from));
    }
    if let Some(s) = w.strip_suffix("es").filter(|s| s.len() >= 2) {
        cands.push(s.to_string());
    }
    if let Some(s) = w.strip_suffix('s').filter(|s| s.len() >= 2 && !s.ends_with('s')) {
        cands.push(s.to_string());
    }
    cands.into_iter().find(|c| inv.contains(c))
}

/// An argument of an event: its text and, when known, the token range it
/// covers in the source sentence.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ArgSpan {
    pub text: String,
    pub start: Option<usize>,
    pub end: Option<usize>,
}

impl ArgSpan {
    fn token(tokens: &[Token], i: usize) -> Self {
        ArgSpan {
            text: tokens[i].surface.clone(),
            start: Some(i),
            end: Some(i + 1),
        }
    }

    pub fn text_only(text: &str) -> Self {
        ArgSpan {
            text: text.to_string(),
            start: None,
            end: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct EventTriple {
    pub verb_lemma: String,
    pub verb_index: Option<usize>,
    pub agent: Option<ArgSpan>,
    pub affected: Option<ArgSpan>,
    pub passive: bool,
    pub source_post: String,
}

impl fmt::Display for EventTriple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let arg = |a: &Option<ArgSpan>| a.as_ref().map_or("-".to_string(), |s| s.text.clone());
        write!(
            f,
            "({}, agent={}, affected={}{})",
            self.verb_lemma,
            arg(&self.agent),
            arg(&self.affected),
            if self.passive { ", passive" } else { "" }
        )
    }
}

/// Anything that turns a post's tokens into event triples.
pub trait EventExtractor {
    fn extract(&self, post_id: &str, tokens: &[Token]) -> Vec<EventTriple>;
}

pub const PRONOUNS: &[&str] = &["i", "me", "he", "she", "they", "him", "her", "them", "we", "us", "you"];
pub const PASSIVE_AUXILIARIES: &[&str] = &["was", "were", "been", "being", "got"];

#[derive(Debug, Clone)]
pub struct ExtractorConfig {
    /// Tokens searched on each side of the verb for arguments.
    pub window: usize,
    /// Tokens before the verb searched for a passive auxiliary.
    pub aux_window: usize,
    pub stopwords: HashSet<String>,
}

impl Default for ExtractorConfig {
    fn default() -> Self {
        ExtractorConfig {
            window: 5,
            aux_window: 3,
            stopwords: default_stopwords(),
        }
    }
}

pub struct RuleExtractor<'a> {
    pub inventory: &'a VerbInventory,
    pub config: ExtractorConfig,
}

impl<'a> RuleExtractor<'a> {
    pub fn new(inventory: &'a VerbInventory) -> Self {
        RuleExtractor {
            inventory,
            config: ExtractorConfig::default(),
        }
    }

    fn is_candidate(&self, t: &Token) -> bool {
        if !t.is_wordlike() {
            return false;
        }
        let s = t.surface.as_str();
        if PRONOUNS.contains(&s) {
            return true;
        }
        !self.config.stopwords.contains(s)
            && !PASSIVE_AUXILIARIES.contains(&s)
            && s.chars().any(char::is_alphabetic)
            && lemmatize(s, self.inventory).is_none()
    }

    fn nearest(&self, tokens: &[Token], range: impl Iterator<Item = usize>) -> Option<usize> {
        range.into_iter().find(|&i| self.is_candidate(&tokens[i]))
    }

    fn sentence_triples(&self, tokens: &[Token], lo: usize, hi: usize, post_id: &str, out: &mut Vec<EventTriple>) {
        let w = self.config.window;
        for v in lo..hi {
            if !tokens[v].is_wordlike() {
                continue;
            }
            let Some(lemma) = lemmatize(&tokens[v].surface, self.inventory) else {
                continue;
            };
            let before = (v.saturating_sub(w).max(lo)..v).rev();
            let after = v + 1..(v + 1 + w).min(hi);
            let aux_lo = v.saturating_sub(self.config.aux_window).max(lo);
            let passive = !tokens[v].surface.ends_with("ing")
                && tokens[aux_lo..v]
                    .iter()
                    .any(|t| PASSIVE_AUXILIARIES.contains(&t.surface.as_str()));

            let (agent, affected) = if passive {
                let affected = self.nearest(tokens, before);
                let agent = after
                    .clone()
                    .find(|&i| tokens[i].surface == "by")
                    .and_then(|by| self.nearest(tokens, by + 1..(by + 1 + w).min(hi)));
                (agent, affected)
            } else {
                (self.nearest(tokens, before), self.nearest(tokens, after))
            };
            out.push(EventTriple {
                verb_lemma: lemma,
                verb_index: Some(v),
                agent: agent.map(|i| ArgSpan::token(tokens, i)),
                affected: affected.map(|i| ArgSpan::token(tokens, i)),
                passive,
                source_post: post_id.to_string(),
            });
        }
    }
}

impl EventExtractor for RuleExtractor<'_> {
    fn extract(&self, post_id: &str, tokens: &[Token]) -> Vec<EventTriple> {
        let mut out = Vec::new();
        for (lo, hi) in sentence_bounds(tokens) {
            self.sentence_triples(tokens, lo, hi, post_id, &mut out);
        }
        out
    }
}

fn is_sentence_end(t: &Token) -> bool {
    t.kind == TokenKind::Punct && t.surface.chars().all(|c| matches!(c, '.' | '!' | '?'))
}

/// Half-open token ranges of sentences, split after sentence-final
/// punctuation.
pub fn sentence_bounds(tokens: &[Token]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut start = 0;
    for (i, t) in tokens.iter().enumerate() {
        if is_sentence_end(t) {
            if i > start {
                out.push((start, i));
            }
            start = i + 1;
        }
    }
    if start < tokens.len() {
        out.push((start, tokens.len()));
    }
    out
}

/// Extracts triples with the default rules.
pub fn extract_triples(tokens: &[Token], inv: &VerbInventory, post_id: &str) -> Vec<EventTriple> {
    RuleExtractor::new(inv).extract(post_id, tokens)
}

const TRIPLE_HEADER: &str = "post_id\tverb_lemma\tagent\taffected\tpassive";

/// Writes triples as TSV with header `post_id verb_lemma agent affected
/// passive`; missing arguments are written as `-`.
pub fn write_triples<W: Write>(triples: &[EventTriple], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{TRIPLE_HEADER}")?;
    for t in triples {
        let arg = |a: &Option<ArgSpan>| a.as_ref().map_or("-", |s| s.text.as_str()).to_string();
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}",
            t.source_post,
            t.verb_lemma,
            arg(&t.agent),
            arg(&t.affected),
            t.passive
        )?;
    }
    Ok(())
}

/// Reads triples produced by [`write_triples`] or by an external parser.
pub fn read_triples<R: BufRead>(source: R) -> Result<Vec<EventTriple>, EventsError> {
    let mut out = Vec::new();
    for (i, line) in source.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() || (i == 0 && line.trim_end() == TRIPLE_HEADER) {
            continue;
        }
        let bad = |message: String| EventsError::Line { line: i + 1, message };
        let f: Vec<&str> = line.split('\t').collect();
        let [post, verb, agent, affected, passive] = f.as_slice() else {
            return Err(bad(format!("expected 5 fields, found {}", f.len())));
        };
        if verb.is_empty() {
            return Err(bad("empty verb lemma".into()));
        }
        let arg = |s: &str| (s != "-" && !s.is_empty()).then(|| ArgSpan::text_only(s));
        out.push(EventTriple {
            verb_lemma: verb.to_string(),
            verb_index: None,
            agent: arg(agent),
            affected: arg(affected),
            passive: passive
                .parse()
                .map_err(|_| bad(format!("passive must be true or false, got {passive:?}")))?,
            source_post: post.to_string(),
        });
    }
    Ok(out)
}

/// A hand-labeled triple: lemma plus argument texts.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GoldTriple {
    pub verb_lemma: String,
    pub agent: Option<String>,
    pub affected: Option<String>,
}

impl From<&EventTriple> for GoldTriple {
    fn from(t: &EventTriple) -> Self {
        GoldTriple {
            verb_lemma: t.verb_lemma.clone(),
            agent: t.agent.as_ref().map(|a| a.text.clone()),
            affected: t.affected.as_ref().map(|a| a.text.clone()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ExtractionScore {
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
}

impl ExtractionScore {
    pub fn add(&mut self, predicted: &[GoldTriple], gold: &[GoldTriple]) {
        let mut remaining: Vec<&GoldTriple> = gold.iter().collect();
        for p in predicted {
            if let Some(pos) = remaining.iter().position(|g| *g == p) {
                remaining.swap_remove(pos);
                self.true_positives += 1;
            } else {
                self.false_positives += 1;
            }
        }
        self.false_negatives += remaining.len();
    }

    pub fn precision(&self) -> f64 {
        let d = self.true_positives + self.false_positives;
        if d == 0 {
            0.0
        } else {
            self.true_positives as f64 / d as f64
        }
    }

    pub fn recall(&self) -> f64 {
        let d = self.true_positives + self.false_negatives;
        if d == 0 {
            0.0
        } else {
            self.true_positives as f64 / d as f64
        }
    }

    pub fn f1(&self) -> f64 {
        let (p, r) = (self.precision(), self.recall());
        if p + r == 0.0 {
            0.0
        } else {
            2.0 * p * r / (p + r)
        }
    }
}

/// Reads a gold file: `sentence\ttriples`, where triples are
/// `lemma|agent|affected` joined by `;` and `-` marks a missing argument.
pub fn read_gold<R: BufRead>(source: R) -> Result<Vec<(String, Vec<GoldTriple>)>, EventsError> {
    let mut out = Vec::new();
    for (i, line) in source.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let (sentence, triples) = line.split_once('\t').unwrap_or((&line, ""));
        let mut gold = Vec::new();
        for t in triples.split(';').map(str::trim).filter(|t| !t.is_empty()) {
            let parts: Vec<&str> = t.split('|').collect();
            let [verb, agent, affected] = parts.as_slice() else {
                return Err(EventsError::Line {
                    line: i + 1,
                    message: format!("bad gold triple {t:?}"),
                });
            };
            let arg = |s: &str| (s != "-").then(|| s.to_string());
            gold.push(GoldTriple {
                verb_lemma: verb.to_string(),
                agent: arg(agent),
                affected: arg(affected),
            });
        }
        out.push((sentence.to_string(), gold));
    }
    Ok(out)
}
