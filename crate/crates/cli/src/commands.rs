use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use narrative_core::connotation::{
    aggregate, load_lexicon, score_event, write_sentiment_table, ConnotationError, EmbeddingStore,
    PropagationConfig,
};
use narrative_core::corpus::{
    attach_labels, dedup, ingest_institutions, ingest_labels, ingest_posts, Corpus, DedupConfig,
};
use narrative_core::events::{extract_triples, write_triples, EventTriple, VerbInventory};
use narrative_core::stats::{build_design, normalize_rate, ols_fit, write_regression_report};
use narrative_core::stopwords::default_stopwords;
use narrative_core::textprep::{preprocess, CorrectionDictionary, LanguageModel, Token};
use narrative_core::topics::{build_vocab, select_k, tfidf, top_words, write_model, DocTermSets, LdaConfig};

use crate::config::Resolved;

pub const CORPUS: &str = "corpus.jsonl";
pub const INGEST_SUMMARY: &str = "ingest_summary.tsv";
pub const TOPICS: &str = "topics.csv";
pub const TOPIC_MODEL: &str = "topic_model.txt";
pub const EVENTS: &str = "events.tsv";
pub const SENTIMENT: &str = "sentiment.csv";
pub const COVERAGE: &str = "sentiment_coverage.tsv";
pub const REGRESSION: &str = "regression.csv";
pub const REPORT: &str = "report.md";

fn open(path: &Path) -> Result<BufReader<File>> {
    let f = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    Ok(BufReader::new(f))
}

fn artifact(cfg: &Resolved, name: &str, producer: &str) -> Result<PathBuf> {
    let path = cfg.out.join(name);
    if !path.is_file() {
        bail!("{} is missing; run `{producer}` first", path.display());
    }
    Ok(path)
}

fn write_artifact(cfg: &Resolved, name: &str, body: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> Result<()> {
    fs::create_dir_all(&cfg.out).with_context(|| format!("creating {}", cfg.out.display()))?;
    let path = cfg.out.join(name);
    let mut w = BufWriter::new(File::create(&path).with_context(|| format!("creating {}", path.display()))?);
    body(&mut w).and_then(|_| w.flush()).with_context(|| format!("writing {}", path.display()))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn load_corpus(cfg: &Resolved) -> Result<Corpus> {
    let path = artifact(cfg, CORPUS, "ingest")?;
    let ingested = ingest_posts(open(&path)?).with_context(|| format!("reading {}", path.display()))?;
    if let Some(w) = ingested.warnings.first() {
        bail!("{} line {}: {}", path.display(), w.line, w.message);
    }
    Ok(ingested.corpus)
}

fn preprocessed(cfg: &Resolved, corpus: &Corpus) -> Result<Vec<Vec<Token>>> {
    let i = &cfg.inputs;
    let lm = LanguageModel::read(open(&i.language_model)?)
        .with_context(|| format!("reading {}", i.language_model.display()))?;
    let dict = CorrectionDictionary::read(open(&i.abbreviations)?, open(&i.words)?)
        .with_context(|| format!("reading {} / {}", i.abbreviations.display(), i.words.display()))?;
    Ok(corpus.posts().iter().map(|p| preprocess(&p.text, &dict, &lm)).collect())
}

fn triples(cfg: &Resolved, corpus: &Corpus) -> Result<Vec<EventTriple>> {
    let inv = VerbInventory::read(open(&cfg.inputs.verbs)?)
        .with_context(|| format!("reading {}", cfg.inputs.verbs.display()))?;
    let docs = preprocessed(cfg, corpus)?;
    Ok(corpus
        .posts()
        .iter()
        .zip(&docs)
        .flat_map(|(p, toks)| extract_triples(toks, &inv, &p.post_id))
        .collect())
}

pub fn ingest(cfg: &Resolved) -> Result<()> {
    let path = &cfg.inputs.posts;
    let ingested = ingest_posts(open(path)?).with_context(|| format!("reading {}", path.display()))?;
    let read = ingested.corpus.len();
    let corpus = dedup(
        &ingested.corpus,
        DedupConfig {
            collapse_cross_user: cfg.dedup.collapse_cross_user,
        },
    );
    write_artifact(cfg, CORPUS, |w| corpus.write_jsonl(w))?;

    let mut summary = String::new();
    writeln!(summary, "posts_read\t{read}")?;
    writeln!(summary, "malformed_lines\t{}", ingested.warnings.len())?;
    writeln!(summary, "duplicates_removed\t{}", read - corpus.len())?;
    writeln!(summary, "unique_posts\t{}", corpus.len())?;
    writeln!(summary, "unique_users\t{}", corpus.unique_users())?;
    for w in &ingested.warnings {
        writeln!(summary, "warning\tline {}: {}", w.line, w.message)?;
    }
    write_artifact(cfg, INGEST_SUMMARY, |w| w.write_all(summary.as_bytes()))?;
    println!(
        "{} unique posts from {} users ({} duplicates, {} malformed lines)",
        corpus.len(),
        corpus.unique_users(),
        read - corpus.len(),
        ingested.warnings.len()
    );
    Ok(())
}

pub fn topics(cfg: &Resolved) -> Result<()> {
    let corpus = load_corpus(cfg)?;
    let docs = preprocessed(cfg, &corpus)?;
    let t = &cfg.topics;
    let vocab = build_vocab(&docs, t.min_df, &default_stopwords())?;
    let matrix = tfidf(&docs, &vocab);
    let sets = DocTermSets::new(&docs, vocab.terms());
    let lda = LdaConfig {
        max_iters: t.iters,
        restarts: t.restarts,
        ..LdaConfig::default()
    };
    let model = select_k(&matrix, &sets, &t.k_candidates, cfg.seed, &lda, t.coherence_top_n)?;
    let coherence = model.coherence.expect("selection scores every model");

    let mut table = String::from("topic,keywords\n");
    for k in 0..model.k {
        let words: Vec<String> = top_words(&model, k, t.keywords)?.into_iter().map(|(w, _)| w).collect();
        writeln!(table, "{},{}", k + 1, words.join(" "))?;
    }
    writeln!(table, "# k={} coherence={coherence:.6} seed={}", model.k, cfg.seed)?;
    write_artifact(cfg, TOPICS, |w| w.write_all(table.as_bytes()))?;
    write_artifact(cfg, TOPIC_MODEL, |w| write_model(&model, w))?;
    println!("selected {} topics (coherence {coherence:.4})", model.k);
    Ok(())
}

pub fn events(cfg: &Resolved) -> Result<()> {
    let corpus = load_corpus(cfg)?;
    let triples = triples(cfg, &corpus)?;
    write_artifact(cfg, EVENTS, |w| write_triples(&triples, w))?;
    println!("{} triples from {} posts", triples.len(), corpus.len());
    Ok(())
}

pub fn sentiment(cfg: &Resolved) -> Result<()> {
    let corpus = load_corpus(cfg)?;
    let i = &cfg.inputs;
    let labels = ingest_labels(open(&i.labels)?).with_context(|| format!("reading {}", i.labels.display()))?;
    let view = attach_labels(&corpus, &labels)?;
    if view.entries.is_empty() {
        bail!("no label in {} matches a post in the corpus", i.labels.display());
    }
    let lex = load_lexicon(open(&i.lexicon)?).with_context(|| format!("reading {}", i.lexicon.display()))?;
    let emb = EmbeddingStore::load(open(&i.embeddings)?).with_context(|| format!("reading {}", i.embeddings.display()))?;
    let prop = PropagationConfig {
        k: cfg.propagation.k,
        min_similarity: cfg.propagation.min_similarity,
    };

    let triples = triples(cfg, &corpus)?;
    write_artifact(cfg, EVENTS, |w| write_triples(&triples, w))?;
    let mut scored = Vec::new();
    let mut unscorable: BTreeMap<&str, usize> = BTreeMap::new();
    for t in &triples {
        match score_event(t, &lex, &emb, &prop) {
            Ok((t, frame)) => scored.push((t.source_post, frame)),
            Err(ConnotationError::Unscorable(_)) => *unscorable.entry(&t.verb_lemma).or_default() += 1,
            Err(e) => return Err(e.into()),
        }
    }
    let labeled: Vec<_> = view.entries.iter().map(|(_, l)| l.clone()).collect();
    let rows = aggregate(&scored, &labeled);
    write_artifact(cfg, SENTIMENT, |w| write_sentiment_table(&rows, w))?;

    let covered: usize = rows.iter().map(|r| r.posts).sum();
    let mut cov = String::new();
    writeln!(cov, "labeled_posts\t{}", labeled.len())?;
    writeln!(cov, "labeled_posts_scored\t{covered}")?;
    writeln!(cov, "coverage\t{:.4}", covered as f64 / labeled.len() as f64)?;
    writeln!(cov, "unresolved_labels\t{}", view.unresolved.len())?;
    writeln!(cov, "triples\t{}", triples.len())?;
    writeln!(cov, "triples_scored\t{}", scored.len())?;
    for (verb, n) in &unscorable {
        writeln!(cov, "unscorable\t{verb}\t{n}")?;
    }
    write_artifact(cfg, COVERAGE, |w| w.write_all(cov.as_bytes()))?;
    println!("{} groups; {covered} of {} labeled posts scored", rows.len(), labeled.len());
    Ok(())
}

pub fn regress(cfg: &Resolved) -> Result<()> {
    let corpus = load_corpus(cfg)?;
    let path = &cfg.inputs.institutions;
    let institutions = ingest_institutions(open(path)?).with_context(|| format!("reading {}", path.display()))?;
    let users = corpus.users_per_institution();
    let rates: BTreeMap<String, f64> = institutions
        .iter()
        .map(|inst| {
            let n = users.get(&inst.institution_id).copied().unwrap_or(0) as u64;
            let rate = normalize_rate(n, inst.enrollment).expect("ingestion rejects zero enrollment");
            (inst.institution_id.clone(), rate)
        })
        .collect();
    let unmatched = users.keys().filter(|id| !rates.contains_key(*id)).count();
    if unmatched > 0 {
        println!("{unmatched} posting institutions are missing from {}", path.display());
    }
    let design = build_design(&institutions, &rates)?;
    let fit = ols_fit(&design)?;
    write_artifact(cfg, REGRESSION, |w| write_regression_report(&fit, w))?;
    println!("fitted {} institutions, R^2 {:.4}", fit.n, fit.r_squared);
    Ok(())
}

fn markdown_table(rows: &[Vec<String>]) -> String {
    let mut out = String::new();
    for (i, row) in rows.iter().enumerate() {
        out.push_str(&format!("| {} |\n", row.join(" | ")));
        if i == 0 {
            out.push_str(&format!("|{}\n", "---|".repeat(row.len())));
        }
    }
    out
}

/// Splits delimited lines into cells, keeping `#` lines apart.
fn split_table(text: &str, sep: char) -> (Vec<Vec<String>>, Vec<String>) {
    let (notes, rows): (Vec<&str>, Vec<&str>) = text.lines().partition(|l| l.starts_with('#'));
    (
        rows.iter().map(|l| l.split(sep).map(String::from).collect()).collect(),
        notes.iter().map(|l| l.trim_start_matches('#').trim().to_string()).collect(),
    )
}

pub fn report(cfg: &Resolved) -> Result<()> {
    let read = |name: &str, producer: &str| -> Result<String> {
        let path = artifact(cfg, name, producer)?;
        fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))
    };
    let mut md = String::from("# Study report\n\n");
    for (title, name, producer, sep) in [
        ("Corpus", INGEST_SUMMARY, "ingest", '\t'),
        ("Topics", TOPICS, "topics", ','),
        ("Sentiment by label", SENTIMENT, "sentiment", ','),
        ("Sentiment coverage", COVERAGE, "sentiment", '\t'),
        ("Regression", REGRESSION, "regress", ','),
    ] {
        let (mut rows, notes) = split_table(&read(name, producer)?, sep);
        if sep == '\t' {
            rows.insert(0, vec!["item".into(), "value".into()]);
            let width = rows.iter().map(Vec::len).max().unwrap_or(2);
            for r in &mut rows {
                r.resize(width, String::new());
            }
        }
        md.push_str(&format!("## {title}\n\n{}", markdown_table(&rows)));
        for n in notes {
            md.push_str(&format!("\n{n}\n"));
        }
        md.push('\n');
    }
    write_artifact(cfg, REPORT, |w| w.write_all(md.as_bytes()))
}
