use std::collections::{BTreeMap, HashSet};

use narrative_core::connotation::{propagate, ConnotationFrame, ConnotationLexicon, EmbeddingStore, PropagationConfig};
use narrative_core::corpus::{dedup, Corpus, DedupConfig, Post};
use narrative_core::stats::{ols_fit, t_pvalue, DesignMatrix};
use narrative_core::textprep::{preprocess, render, segment, tokenize, CorrectionDictionary, LanguageModel, Token, TokenKind};
use narrative_core::topics::{build_vocab, tfidf};
use proptest::prelude::*;

fn lm() -> LanguageModel {
    let uni = [("me", 50u64), ("too", 40), ("story", 12), ("campus", 8), ("really", 6), ("sad", 5), ("a", 30)];
    let bi = [(("me", "too"), 30u64), (("really", "sad"), 4)];
    LanguageModel::new(
        uni.iter().map(|(w, c)| (w.to_string(), *c)),
        bi.iter().map(|((a, b), c)| ((a.to_string(), b.to_string()), *c)),
    )
    .unwrap()
}

fn dict() -> CorrectionDictionary {
    CorrectionDictionary::new(
        [("u", "you"), ("idk", "i do not know")].map(|(a, b)| (a.to_string(), b.to_string())),
        ["you", "i", "do", "not", "know", "really", "sad", "me", "too", "story", "campus", "good"].map(String::from),
        ["f**k"].map(String::from),
    )
    .unwrap()
}

fn brute(body: &str, lm: &LanguageModel) -> Vec<String> {
    let chars: Vec<char> = body.chars().collect();
    let n = chars.len();
    let mut best: Option<(f64, Vec<String>)> = None;
    for mask in 0u32..(1 << (n - 1)) {
        let mut words = Vec::new();
        let mut cur = String::new();
        for (i, ch) in chars.iter().enumerate() {
            cur.push(*ch);
            if i + 1 == n || mask & (1 << i) != 0 {
                words.push(std::mem::take(&mut cur));
            }
        }
        let s = lm.sequence_score(&words);
        best = match best {
            Some((bs, bw)) if bs > s || (bs == s && bw <= words) => Some((bs, bw)),
            _ => Some((s, words)),
        };
    }
    best.unwrap().1
}

fn alnum_lower(s: &str) -> String {
    s.chars().filter(|c| c.is_alphanumeric()).flat_map(char::to_lowercase).collect()
}

fn piece() -> impl Strategy<Value = String> {
    prop_oneof![
        Just("reallyyyy".to_string()),
        Just("#MeToo".to_string()),
        Just("#really_sadddd".to_string()),
        Just("u".to_string()),
        Just("IDK".to_string()),
        Just("f**k".to_string()),
        Just(":)".to_string()),
        Just("http://x.co/a".to_string()),
        Just("@someone".to_string()),
        Just("!!!".to_string()),
        Just("$5".to_string()),
        "[a-zA-Z]{1,8}",
    ]
}

fn corpus_strategy() -> impl Strategy<Value = Vec<Post>> {
    prop::collection::vec((0u8..6, 0u8..4, 0i64..5, 0u8..4), 0..30).prop_map(|rows| {
        rows.into_iter()
            .map(|(id, user, ts, text)| Post {
                post_id: format!("p{id}"),
                user_id: format!("u{user}"),
                institution_id: "inst".into(),
                timestamp: ts,
                text: ["Me too", "me  TOO", "it happened", "#MeToo"][text as usize].to_string(),
            })
            .collect()
    })
}

proptest! {
    #[test]
    fn segmentation_concatenates_and_is_optimal(body in "[a-z]{1,10}") {
        let lm = lm();
        let words = segment(&body, &lm);
        prop_assert_eq!(words.concat(), body.clone());
        prop_assert_eq!(words, brute(&body, &lm));
    }

    #[test]
    fn tokens_are_nonempty_and_keep_alnum(text in "[a-zA-Z0-9 ,!?'\\-]{0,40}") {
        let toks = tokenize(&text);
        prop_assert!(toks.iter().all(|t| !t.surface.is_empty()));
        let joined: String = toks.iter().map(|t| t.surface.as_str()).collect();
        prop_assert_eq!(alnum_lower(&joined), alnum_lower(&text));
    }

    #[test]
    fn preprocessing_is_idempotent(pieces in prop::collection::vec(piece(), 0..8)) {
        let (d, lm) = (dict(), lm());
        let once = render(&preprocess(&pieces.join(" "), &d, &lm));
        let twice = render(&preprocess(&once, &d, &lm));
        prop_assert_eq!(once, twice);
    }

    #[test]
    fn dedup_is_idempotent_and_conservative(posts in corpus_strategy(), cross in any::<bool>()) {
        let cfg = DedupConfig { collapse_cross_user: cross };
        let corpus = Corpus::new(posts);
        let once = dedup(&corpus, cfg);
        let again = dedup(&once, cfg);
        prop_assert_eq!(again.posts(), once.posts());
        prop_assert!(once.len() <= corpus.len());
        let ids: HashSet<&str> = once.posts().iter().map(|p| p.post_id.as_str()).collect();
        prop_assert_eq!(ids.len(), once.len());
        // every distinct id survives in some form
        let input_ids: HashSet<&str> = corpus.posts().iter().map(|p| p.post_id.as_str()).collect();
        prop_assert!(ids.is_subset(&input_ids));
    }

    #[test]
    fn tfidf_scales_with_repetition(docs in prop::collection::vec(prop::collection::vec("[a-d]", 1..6), 2..6), reps in 1usize..4) {
        let toks: Vec<Vec<Token>> = docs
            .iter()
            .map(|d| d.iter().map(|w| Token::new(w, TokenKind::Word)).collect())
            .collect();
        let vocab = build_vocab(&toks, 1, &HashSet::new()).unwrap();
        let base = tfidf(&toks, &vocab);
        let mut repeated = toks.clone();
        repeated[0] = toks[0].iter().cycle().take(toks[0].len() * reps).cloned().collect();
        let scaled = tfidf(&repeated, &vocab);
        prop_assert_eq!(base.rows[0].len(), scaled.rows[0].len());
        for (a, b) in base.rows[0].iter().zip(&scaled.rows[0]) {
            prop_assert_eq!(a.0, b.0);
            prop_assert!((a.1 * reps as f64 - b.1).abs() < 1e-12);
        }
        prop_assert_eq!(&base.rows[1..], &scaled.rows[1..]);
    }

    #[test]
    fn ols_is_scale_equivariant(
        xs in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0, -1.0f64..1.0), 12..30),
        c in prop_oneof![-100.0f64..-0.01, 0.01f64..100.0],
    ) {
        let names = vec!["a".to_string(), "b".to_string(), "constant".to_string()];
        let rows: Vec<Vec<f64>> = xs.iter().map(|&(a, b, _)| vec![a, b, 1.0]).collect();
        let y: Vec<f64> = xs.iter().map(|&(a, b, e)| 1.5 * a - 0.5 * b + 2.0 + e).collect();
        let base = DesignMatrix::new(names.clone(), rows.clone(), y.clone()).unwrap();
        let Ok(fit) = ols_fit(&base) else { return Ok(()) };
        // t is only meaningful with residual variance
        prop_assume!(fit.rss > 1e-6);
        let scaled_rows: Vec<Vec<f64>> = rows.iter().map(|r| vec![r[0] * c, r[1], 1.0]).collect();
        let scaled = ols_fit(&DesignMatrix::new(names, scaled_rows, y).unwrap()).unwrap();
        let (b0, s0) = (&fit.coefficients[0], &scaled.coefficients[0]);
        prop_assert!((s0.coefficient * c - b0.coefficient).abs() <= 1e-8 * (1.0 + b0.coefficient.abs()));
        // a negative scale flips the sign of t
        prop_assert!((s0.t_stat * c.signum() - b0.t_stat).abs() <= 1e-8 * (1.0 + b0.t_stat.abs()));
        prop_assert!((s0.p_value - b0.p_value).abs() <= 1e-8);
        for (f, g) in fit.fitted.iter().zip(&scaled.fitted) {
            prop_assert!((f - g).abs() <= 1e-8 * (1.0 + f.abs()));
        }
    }

    #[test]
    fn pvalue_is_symmetric_and_monotone(t in 0.0f64..20.0, dt in 0.0f64..5.0, dof in 1u64..200) {
        let p = t_pvalue(t, dof);
        prop_assert!((0.0..=1.0).contains(&p));
        prop_assert_eq!(p, t_pvalue(-t, dof));
        prop_assert!(t_pvalue(t + dt, dof) <= p + 1e-15);
    }

    #[test]
    fn propagation_is_bounded_and_monotone(
        frames in prop::collection::vec(prop::array::uniform5(-1.0f64..1.0), 1..8),
        vecs in prop::collection::vec(prop::array::uniform3(-1.0f64..1.0), 9),
        delta in 0.0f64..0.5,
    ) {
        prop_assume!(vecs.iter().all(|v| v.iter().map(|x| x * x).sum::<f64>() > 1e-6));
        let names: Vec<String> = (0..frames.len()).map(|i| format!("v{i}")).collect();
        let mut entries: Vec<(String, Vec<f64>)> = names.iter().cloned().zip(vecs.iter().map(|v| v.to_vec())).collect();
        entries.push(("query".into(), vecs[8].to_vec()));
        let emb = EmbeddingStore::new(entries).unwrap();
        let cfg = PropagationConfig { k: 5, min_similarity: 0.0 };

        let lex = |shift: f64| {
            let map: BTreeMap<String, ConnotationFrame> = names
                .iter()
                .zip(&frames)
                .map(|(n, f)| {
                    let mut f = *f;
                    f[0] = (f[0] + shift).min(1.0);
                    (n.clone(), ConnotationFrame::new(f).unwrap())
                })
                .collect();
            ConnotationLexicon::new(map).unwrap()
        };
        let (lo, hi) = (lex(0.0), lex(delta));
        let Ok(a) = propagate("query", &lo, &emb, &cfg) else { return Ok(()) };
        let b = propagate("query", &hi, &emb, &cfg).unwrap();
        let bound = frames.iter().flat_map(|f| f.iter()).fold(0.0f64, |m, x| m.max(x.abs()));
        for x in a.to_array() {
            prop_assert!(x.abs() <= bound + 1e-12);
        }
        prop_assert!(b.sentiment_verb >= a.sentiment_verb - 1e-15);
        for (name, f) in lo.iter() {
            prop_assert_eq!(propagate(name, &lo, &emb, &cfg).unwrap(), *f);
        }
    }
}
