//! Regenerates the synthetic study fixture under `fixtures/`.
//!
//!     cargo run -p narrative-cli --example make_fixtures
//!
//! Output is a pure function of the seed below.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use narrative_core::topics::planted_corpus;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

const SEED: u64 = 2017;
const DIM: usize = 16;

/// Inventory verbs with a lexicon frame, by class.
const HARMFUL: &[&str] = &[
    "abuse", "assault", "attack", "blame", "expel", "fire", "follow", "force", "grab", "grope", "harass", "hit",
    "hurt", "ignore", "insult", "kiss", "mock", "push", "rape", "scare", "send", "shame", "silence", "stare",
    "text", "threaten", "touch",
];
const SUPPORTIVE: &[&str] = &["believe", "help", "hug", "leave", "protect", "report", "support", "tell", "warn"];
/// Inventory verbs left out of the lexicon; all but the last get embeddings.
const UNANNOTATED: &[&str] = &["stalk", "catcall", "corner", "whistle"];

const LEXICON_SIZE: usize = 950;
const EMBEDDED_FILLERS: usize = 880;
const EMBEDDING_SIZE: usize = 1000;

/// (past form, harassment type)
const NARRATIVE_VERBS: &[(&str, &str)] = &[
    ("grabbed", "physical"),
    ("groped", "physical"),
    ("touched", "physical"),
    ("pushed", "physical"),
    ("cornered", "physical"),
    ("assaulted", "physical"),
    ("harassed", "verbal"),
    ("insulted", "verbal"),
    ("mocked", "verbal"),
    ("threatened", "verbal"),
    ("catcalled", "verbal"),
    ("whistled at", "verbal"),
    ("stared at", "visual"),
    ("stalked", "visual"),
    ("followed", "visual"),
];

/// (agent phrase, participant)
const AGENTS: &[(&str, &str)] = &[
    ("my professor", "faculty"),
    ("my coach", "faculty"),
    ("my advisor", "faculty"),
    ("a classmate", "peer"),
    ("my roommate", "peer"),
    ("a stranger", "3rd-party"),
    ("some guy", "3rd-party"),
];

const HASHTAGS: &[&str] = &["#MeToo", "#WhyIDidntReport", "#TimesUp", "#BelieveSurvivors"];

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn vector(rng: &mut ChaCha8Rng, center: &[f64], spread: f64) -> Vec<f64> {
    let noise = Normal::new(0.0, spread).unwrap();
    center.iter().map(|c| c + noise.sample(rng)).collect()
}

fn frame(rng: &mut ChaCha8Rng, base: [f64; 5], spread: f64) -> [f64; 5] {
    base.map(|b| (b + rng.gen_range(-spread..spread)).clamp(-1.0, 1.0))
}

fn fmt_row(values: &[f64], digits: usize, sep: &str) -> String {
    values.iter().map(|v| format!("{v:.digits$}")).collect::<Vec<_>>().join(sep)
}

fn lexicon_and_embeddings(rng: &mut ChaCha8Rng) -> (String, String) {
    let unit = Normal::new(0.0, 1.0).unwrap();
    let centers: Vec<Vec<f64>> = (0..3).map(|_| (0..DIM).map(|_| unit.sample(rng)).collect()).collect();
    let bases = [[-0.8, -0.7, -0.9, -0.6, 0.5], [0.6, 0.5, 0.4, 0.5, 0.3], [0.0, 0.1, 0.0, 0.1, 0.1]];

    let mut lex = String::new();
    let mut emb = String::new();
    let add_emb = |emb: &mut String, word: &str, v: &[f64]| {
        writeln!(emb, "{word} {}", fmt_row(v, 6, " ")).unwrap();
    };

    for (class, verbs) in [HARMFUL, SUPPORTIVE].iter().enumerate() {
        for verb in *verbs {
            let f = frame(rng, bases[class], 0.15);
            writeln!(lex, "{verb}\t{}", fmt_row(&f, 3, "\t")).unwrap();
            let v = vector(rng, &centers[class], 0.4);
            add_emb(&mut emb, verb, &v);
        }
    }
    let real = HARMFUL.len() + SUPPORTIVE.len();
    for i in 0..LEXICON_SIZE - real {
        let class = i % 3;
        let word = format!("lexverb{i:04}");
        let f = frame(rng, bases[class], 0.3);
        writeln!(lex, "{word}\t{}", fmt_row(&f, 3, "\t")).unwrap();
        if i < EMBEDDED_FILLERS {
            let v = vector(rng, &centers[class], 0.8);
            add_emb(&mut emb, &word, &v);
        }
    }
    for verb in &UNANNOTATED[..UNANNOTATED.len() - 1] {
        let v = vector(rng, &centers[0], 0.4);
        add_emb(&mut emb, verb, &v);
    }
    let mut i = 0;
    while emb.lines().count() < EMBEDDING_SIZE {
        let v = vector(rng, &centers[2], 1.2);
        add_emb(&mut emb, &format!("noun{i:04}"), &v);
        i += 1;
    }
    (lex, emb)
}

struct Institution {
    id: String,
    enrollment: u64,
    cases: u64,
}

fn institutions(rng: &mut ChaCha8Rng) -> (String, Vec<Institution>) {
    let regions = ["Northeast", "South", "West", "Midwest"];
    let mut csv = String::from("institution_id,enrollment,mf_ratio,sector,region,reported_cases\n");
    let mut out = Vec::new();
    for i in 0..40 {
        let id = format!("inst{:02}", i + 1);
        let enrollment = rng.gen_range(800..6000u64);
        let cases = rng.gen_range(0..40u64);
        let mf: f64 = rng.gen_range(0.7..1.3);
        let sector = if rng.gen_bool(0.4) { "private" } else { "public" };
        writeln!(csv, "{id},{enrollment},{mf:.3},{sector},{},{cases}", regions[i % 4]).unwrap();
        out.push(Institution { id, enrollment, cases });
    }
    (csv, out)
}

fn post_line(id: &str, user: &str, inst: &str, ts: i64, text: &str) -> String {
    serde_json::json!({
        "post_id": id,
        "user_id": user,
        "institution_id": inst,
        "timestamp": ts,
        "text": text,
    })
    .to_string()
}

fn decorate(rng: &mut ChaCha8Rng, body: String) -> String {
    let mut parts = Vec::new();
    if rng.gen_bool(0.5) {
        parts.push(HASHTAGS.choose(rng).unwrap().to_string());
    }
    if rng.gen_bool(0.1) {
        parts.push("@friend".into());
    }
    if rng.gen_bool(0.1) {
        parts.push("tbh".into());
    }
    if rng.gen_bool(0.1) {
        parts.push("sooo".into());
    }
    parts.push(body);
    if rng.gen_bool(0.1) {
        parts.push("https://example.org/story".into());
    }
    if rng.gen_bool(0.1) {
        parts.push(":(".into());
    }
    parts.join(" ")
}

fn posts_and_labels(rng: &mut ChaCha8Rng, insts: &[Institution]) -> (String, String) {
    let docs = planted_corpus(150, 12, SEED);
    let mut doc_iter = docs.docs.iter().map(|d| d.iter().map(|t| t.surface.as_str()).collect::<Vec<_>>().join(" "));
    let noise = Normal::new(0.0, 1.0).unwrap();

    let mut lines = Vec::new();
    let mut labels = String::from("post_id,harassment_type,participant\n");
    let mut n = 0;
    let mut ts = 1_507_000_000i64;
    for inst in insts {
        let expected = 0.001 * inst.enrollment as f64 + 0.2 * inst.cases as f64 + noise.sample(rng);
        let users = expected.round().max(1.0) as usize;
        for u in 0..users {
            let user = format!("{}-u{u}", inst.id);
            let posts = if rng.gen_bool(0.2) { 2 } else { 1 };
            for _ in 0..posts {
                let Some(theme_text) = doc_iter.next() else { break };
                n += 1;
                ts += rng.gen_range(60..600);
                let id = format!("t{n:04}");
                let mut body = format!("{theme_text}.");
                if rng.gen_bool(0.45) {
                    let &(verb, kind) = NARRATIVE_VERBS.choose(rng).unwrap();
                    let &(agent, participant) = AGENTS.choose(rng).unwrap();
                    if rng.gen_bool(0.5) {
                        write!(body, " {agent} {verb} me.").unwrap();
                    } else {
                        let by = agent.trim_start_matches("my ").trim_start_matches("a ").trim_start_matches("some ");
                        write!(body, " i was {verb} by my {by}.").unwrap();
                    }
                    if rng.gen_bool(0.85) {
                        writeln!(labels, "{id},{kind},{participant}").unwrap();
                    }
                }
                let text = decorate(rng, body);
                lines.push(post_line(&id, &user, &inst.id, ts, &text));
            }
        }
    }
    // exact re-deliveries, reposts under a new id, and two broken lines
    let originals = lines.clone();
    for _ in 0..12 {
        let pos = rng.gen_range(0..lines.len());
        let line = originals.choose(rng).unwrap().clone();
        lines.insert(pos, line);
    }
    for k in 0..8 {
        let src: serde_json::Value = serde_json::from_str(originals.choose(rng).unwrap()).unwrap();
        let line = post_line(
            &format!("rt{k:03}"),
            src["user_id"].as_str().unwrap(),
            src["institution_id"].as_str().unwrap(),
            src["timestamp"].as_i64().unwrap() + 30,
            &src["text"].as_str().unwrap().to_uppercase(),
        );
        lines.push(line);
    }
    lines.push(post_line("broken1", "x", "inst01", ts, "   "));
    lines.push("{not json".into());
    (lines.join("\n") + "\n", labels)
}

fn language_model() -> (String, BTreeSet<String>) {
    let unigrams: &[(&str, u64)] = &[
        ("me", 500),
        ("too", 400),
        ("i", 600),
        ("why", 80),
        ("didnt", 40),
        ("report", 60),
        ("times", 50),
        ("up", 70),
        ("believe", 40),
        ("survivors", 25),
        ("campus", 30),
        ("story", 30),
        ("party", 20),
        ("so", 200),
        ("scared", 20),
    ];
    let bigrams: &[(&str, &str, u64)] = &[
        ("me", "too", 300),
        ("times", "up", 30),
        ("why", "i", 20),
        ("i", "didnt", 15),
        ("didnt", "report", 10),
        ("believe", "survivors", 10),
    ];
    let mut s = String::from("UNIGRAM\n");
    for (w, c) in unigrams {
        writeln!(s, "{w}\t{c}").unwrap();
    }
    s.push_str("BIGRAM\n");
    for (a, b, c) in bigrams {
        writeln!(s, "{a}\t{b}\t{c}").unwrap();
    }
    (s, unigrams.iter().map(|(w, _)| w.to_string()).collect())
}

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let dir = root();
    let write = |name: &str, body: &str| fs::write(dir.join(name), body).unwrap();

    let (lex, emb) = lexicon_and_embeddings(&mut rng);
    write("lexicon.tsv", &lex);
    write("embeddings.txt", &emb);

    let (csv, insts) = institutions(&mut rng);
    write("institutions.csv", &csv);
    let (posts, labels) = posts_and_labels(&mut rng, &insts);
    write("posts.jsonl", &posts);
    write("labels.csv", &labels);

    let (lm, mut words) = language_model();
    write("lm.tsv", &lm);
    write("abbreviations.tsv", "u\tyou\ntbh\tto be honest\nomg\toh my god\nidk\ti do not know\nppl\tpeople\n");
    for theme in narrative_core::topics::PLANTED_THEMES {
        words.extend(theme.iter().map(|w| w.to_string()));
    }
    for w in [
        "you", "to", "be", "honest", "oh", "my", "god", "do", "not", "know", "people", "was", "by", "a", "some",
        "guy", "professor", "coach", "advisor", "classmate", "roommate", "stranger", "at", "friend", "it", "f**k",
    ] {
        words.insert(w.to_string());
    }
    write("words.txt", &(words.into_iter().collect::<Vec<_>>().join("\n") + "\n"));
}
