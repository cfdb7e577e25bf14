//! Flat text serialization of a fitted model.
//!
//! ```text
//! <K> <vocab size> <docs> <seed> <coherence|nan>
//! <term> <term> ...
//! K topic-word rows, then one doc-topic row per document
//! ```
//! Numbers are written in shortest round-trip decimal form, so reading a
//! file back gives bit-identical values.

use std::io::{BufRead, Write};

use super::{TopicModel, TopicsError};

fn join(row: &[f64]) -> String {
    row.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

pub fn write_model<W: Write>(model: &TopicModel, mut out: W) -> std::io::Result<()> {
    let coherence = model.coherence.map_or("nan".to_string(), |c| c.to_string());
    writeln!(
        out,
        "{} {} {} {} {}",
        model.k,
        model.terms.len(),
        model.doc_topic.len(),
        model.seed,
        coherence
    )?;
    writeln!(out, "{}", model.terms.join(" "))?;
    for row in model.topic_word.iter().chain(&model.doc_topic) {
        writeln!(out, "{}", join(row))?;
    }
    Ok(())
}

fn parse_row(line: &str, width: usize, lineno: usize) -> Result<Vec<f64>, TopicsError> {
    let row: Vec<f64> = line
        .split_whitespace()
        .map(|x| x.parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| TopicsError::Format(format!("line {lineno}: {e}")))?;
    if row.len() != width {
        return Err(TopicsError::Format(format!(
            "line {lineno}: expected {width} values, found {}",
            row.len()
        )));
    }
    Ok(row)
}

pub fn read_model<R: BufRead>(source: R) -> Result<TopicModel, TopicsError> {
    let lines: Vec<String> = source.lines().collect::<Result<_, _>>()?;
    let header: Vec<&str> = lines
        .first()
        .ok_or_else(|| TopicsError::Format("empty file".into()))?
        .split_whitespace()
        .collect();
    let bad_header = || TopicsError::Format("malformed header".into());
    let [k, v, d, seed, coherence] = header.as_slice() else {
        return Err(bad_header());
    };
    let k: usize = k.parse().map_err(|_| bad_header())?;
    let v: usize = v.parse().map_err(|_| bad_header())?;
    let d: usize = d.parse().map_err(|_| bad_header())?;
    let seed: u64 = seed.parse().map_err(|_| bad_header())?;
    let coherence: f64 = coherence.parse().map_err(|_| bad_header())?;

    if lines.len() != 2 + k + d {
        return Err(TopicsError::Format(format!(
            "expected {} lines, found {}",
            2 + k + d,
            lines.len()
        )));
    }
    let terms: Vec<String> = lines[1].split_whitespace().map(String::from).collect();
    if terms.len() != v {
        return Err(TopicsError::Format(format!("expected {v} terms, found {}", terms.len())));
    }
    let topic_word = (0..k)
        .map(|i| parse_row(&lines[2 + i], v, 3 + i))
        .collect::<Result<_, _>>()?;
    let doc_topic = (0..d)
        .map(|i| parse_row(&lines[2 + k + i], k, 3 + k + i))
        .collect::<Result<_, _>>()?;
    Ok(TopicModel {
        k,
        terms,
        topic_word,
        doc_topic,
        coherence: (!coherence.is_nan()).then_some(coherence),
        seed,
        skipped: Vec::new(),
        objective_trace: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips_exactly() {
        let model = TopicModel {
            k: 2,
            terms: vec!["a".into(), "b".into(), "c".into()],
            topic_word: vec![vec![0.1, 0.2, 0.7], vec![1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0]],
            doc_topic: vec![vec![0.25, 0.75], vec![1e-300, 1.0]],
            coherence: Some(-3.25),
            seed: 42,
            skipped: vec![],
            objective_trace: vec![],
        };
        let mut buf = Vec::new();
        write_model(&model, &mut buf).unwrap();
        let back = read_model(buf.as_slice()).unwrap();
        assert_eq!(back, model);
    }

    #[test]
    fn rejects_short_rows() {
        let text = "2 2 0 1 nan\na b\n0.5 0.5\n1\n";
        assert!(matches!(read_model(text.as_bytes()), Err(TopicsError::Format(_))));
    }
}
