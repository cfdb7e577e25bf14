use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use statrs::function::gamma::{digamma, ln_gamma};

use super::{TopicsError, WeightedMatrix};

#[derive(Debug, Clone, PartialEq)]
pub struct LdaConfig {
    /// Symmetric document-topic prior; `None` means `1 / K`.
    pub alpha: Option<f64>,
    /// Symmetric topic-word prior.
    pub eta: f64,
    pub max_iters: usize,
    /// Stop once the relative change of the objective drops below this.
    pub tol: f64,
    pub e_step_max_iters: usize,
    /// Mean absolute change of a document's gamma that ends its E-step.
    pub e_step_tol: f64,
    /// Independent initialisations; the run with the highest final objective
    /// is kept.
    pub restarts: usize,
}

impl Default for LdaConfig {
    fn default() -> Self {
        LdaConfig {
            alpha: None,
            eta: 0.01,
            max_iters: 200,
            tol: 1e-6,
            e_step_max_iters: 100,
            e_step_tol: 1e-6,
            restarts: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TopicModel {
    pub k: usize,
    pub terms: Vec<String>,
    /// K rows over the vocabulary, each summing to one.
    pub topic_word: Vec<Vec<f64>>,
    /// One row per input document, each summing to one. Skipped documents
    /// get the uniform distribution.
    pub doc_topic: Vec<Vec<f64>>,
    pub coherence: Option<f64>,
    pub seed: u64,
    /// Documents with no weight that were left out of inference.
    pub skipped: Vec<usize>,
    /// Variational objective after initialisation and after every iteration
    /// of the kept run.
    pub objective_trace: Vec<f64>,
}

fn dirichlet_expectation(params: &[f64]) -> Vec<f64> {
    let total = digamma(params.iter().sum());
    params.iter().map(|&p| digamma(p) - total).collect()
}

fn log_sum_exp(xs: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = xs.clone().fold(f64::NEG_INFINITY, f64::max);
    max + xs.map(|x| (x - max).exp()).sum::<f64>().ln()
}

struct Fit<'a> {
    docs: Vec<(usize, &'a [(usize, f64)])>,
    k: usize,
    v: usize,
    alpha: f64,
    eta: f64,
    lambda: Vec<Vec<f64>>,
    elog_beta: Vec<Vec<f64>>,
    gamma: Vec<Vec<f64>>,
}

impl Fit<'_> {
    fn refresh_beta(&mut self) {
        self.elog_beta = self.lambda.iter().map(|row| dirichlet_expectation(row)).collect();
    }

    /// Alternates phi and gamma updates per document, warm-starting from the
    /// current gamma. Returns the sufficient statistics for the topic update.
    fn e_step(&mut self, cfg: &LdaConfig) -> Vec<Vec<f64>> {
        let (k, v) = (self.k, self.v);
        let mut sstats = vec![vec![0.0; v]; k];
        let mut phi = vec![0.0; k];
        for (slot, (_, row)) in self.docs.iter().enumerate() {
            let gamma = &mut self.gamma[slot];
            let mut new_gamma = vec![0.0; k];
            for pass in 0..cfg.e_step_max_iters {
                let elog_theta = dirichlet_expectation(gamma);
                new_gamma.iter_mut().for_each(|g| *g = self.alpha);
                let last = pass + 1 == cfg.e_step_max_iters;
                // Phi is recomputed from the gamma it will replace; when this
                // is the final pass the same phi feeds the topic update.
                let mut contrib: Vec<(usize, usize, f64)> = Vec::new();
                for &(w, n) in row.iter() {
                    for t in 0..k {
                        phi[t] = elog_theta[t] + self.elog_beta[t][w];
                    }
                    let norm = log_sum_exp(phi.iter().copied());
                    for t in 0..k {
                        let p = (phi[t] - norm).exp();
                        new_gamma[t] += n * p;
                        contrib.push((t, w, n * p));
                    }
                }
                let change = gamma
                    .iter()
                    .zip(&new_gamma)
                    .map(|(a, b)| (a - b).abs())
                    .sum::<f64>()
                    / k as f64;
                gamma.copy_from_slice(&new_gamma);
                if change < cfg.e_step_tol || last {
                    for (t, w, x) in contrib {
                        sstats[t][w] += x;
                    }
                    break;
                }
            }
        }
        sstats
    }

    /// Evidence lower bound with phi at its optimum given gamma and lambda.
    fn objective(&self) -> f64 {
        let (k, v) = (self.k as f64, self.v as f64);
        let mut total = 0.0;
        for (slot, (_, row)) in self.docs.iter().enumerate() {
            let gamma = &self.gamma[slot];
            let elog_theta = dirichlet_expectation(gamma);
            let mut doc = 0.0;
            for &(w, n) in row.iter() {
                let terms = (0..self.k).map(|t| elog_theta[t] + self.elog_beta[t][w]);
                doc += n * log_sum_exp(terms);
            }
            for t in 0..self.k {
                doc += (self.alpha - gamma[t]) * elog_theta[t] + ln_gamma(gamma[t]);
            }
            doc -= ln_gamma(gamma.iter().sum());
            doc += ln_gamma(k * self.alpha) - k * ln_gamma(self.alpha);
            total += doc;
        }
        for t in 0..self.k {
            let lambda = &self.lambda[t];
            let mut topic = 0.0;
            for w in 0..self.v {
                topic += (self.eta - lambda[w]) * self.elog_beta[t][w] + ln_gamma(lambda[w]);
            }
            topic -= ln_gamma(lambda.iter().sum());
            topic += ln_gamma(v * self.eta) - v * ln_gamma(self.eta);
            total += topic;
        }
        total
    }
}

fn normalized(row: &[f64]) -> Vec<f64> {
    let s: f64 = row.iter().sum();
    row.iter().map(|x| x / s).collect()
}

/// One initialisation followed by coordinate ascent until the relative
/// objective change falls under the tolerance.
fn run<'a>(
    docs: &[(usize, &'a [(usize, f64)])],
    k: usize,
    v: usize,
    alpha: f64,
    cfg: &LdaConfig,
    rng: &mut ChaCha8Rng,
) -> (Fit<'a>, Vec<f64>) {
    let init = Gamma::new(100.0, 0.01).expect("valid gamma parameters");
    let lambda: Vec<Vec<f64>> = (0..k)
        .map(|_| (0..v).map(|_| init.sample(rng)).collect())
        .collect();
    let gamma = docs
        .iter()
        .map(|(_, row)| {
            let mass: f64 = row.iter().map(|&(_, n)| n).sum();
            vec![alpha + mass / k as f64; k]
        })
        .collect();

    let mut fit = Fit {
        docs: docs.to_vec(),
        k,
        v,
        alpha,
        eta: cfg.eta,
        lambda,
        elog_beta: Vec::new(),
        gamma,
    };
    fit.refresh_beta();

    let mut trace = vec![fit.objective()];
    for _ in 0..cfg.max_iters {
        let sstats = fit.e_step(cfg);
        for (row, stats) in fit.lambda.iter_mut().zip(&sstats) {
            for (l, s) in row.iter_mut().zip(stats) {
                *l = fit.eta + s;
            }
        }
        fit.refresh_beta();
        let obj = fit.objective();
        let prev = *trace.last().unwrap();
        trace.push(obj);
        if ((obj - prev) / prev.abs().max(f64::MIN_POSITIVE)).abs() < cfg.tol {
            break;
        }
    }
    (fit, trace)
}

/// Fits LDA by batch variational Bayes with default priors.
pub fn fit_lda(matrix: &WeightedMatrix, k: usize, seed: u64, iters: usize) -> Result<TopicModel, TopicsError> {
    let cfg = LdaConfig {
        max_iters: iters,
        ..LdaConfig::default()
    };
    fit_lda_with(matrix, k, seed, &cfg)
}

/// Batch variational Bayes over fractional document weights.
///
/// Every update is a coordinate ascent step on the evidence lower bound, so
/// the recorded objective never decreases. Several seeded initialisations are
/// tried and the best bound wins; the result is a pure function of the
/// arguments.
pub fn fit_lda_with(
    matrix: &WeightedMatrix,
    k: usize,
    seed: u64,
    cfg: &LdaConfig,
) -> Result<TopicModel, TopicsError> {
    let v = matrix.n_terms();
    if k < 2 {
        return Err(TopicsError::TooFewTopics(k));
    }
    if k > v {
        return Err(TopicsError::TooManyTopics { k, vocab: v });
    }
    let (docs, skipped): (Vec<_>, Vec<_>) = matrix
        .rows
        .iter()
        .enumerate()
        .partition(|(_, row)| row.iter().any(|&(_, w)| w > 0.0));
    if docs.is_empty() {
        return Err(TopicsError::NoDocuments);
    }
    let docs: Vec<(usize, &[(usize, f64)])> = docs.into_iter().map(|(i, r)| (i, r.as_slice())).collect();
    let skipped: Vec<usize> = skipped.into_iter().map(|(i, _)| i).collect();

    let alpha = cfg.alpha.unwrap_or(1.0 / k as f64);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(Fit, Vec<f64>)> = None;
    for _ in 0..cfg.restarts.max(1) {
        let (fit, trace) = run(&docs, k, v, alpha, cfg, &mut rng);
        let better = best
            .as_ref()
            .map_or(true, |(_, t)| trace.last().unwrap() > t.last().unwrap());
        if better {
            best = Some((fit, trace));
        }
    }
    let (fit, trace) = best.unwrap();

    let mut doc_topic = vec![vec![1.0 / k as f64; k]; matrix.rows.len()];
    for (slot, (d, _)) in fit.docs.iter().enumerate() {
        doc_topic[*d] = normalized(&fit.gamma[slot]);
    }
    Ok(TopicModel {
        k,
        terms: matrix.terms.clone(),
        topic_word: fit.lambda.iter().map(|r| normalized(r)).collect(),
        doc_topic,
        coherence: None,
        seed,
        skipped,
        objective_trace: trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matrix(rows: Vec<Vec<(usize, f64)>>, terms: &[&str]) -> WeightedMatrix {
        WeightedMatrix {
            rows,
            terms: terms.iter().map(|s| s.to_string()).collect(),
        }
    }

    #[test]
    fn rows_are_distributions() {
        let m = matrix(
            vec![vec![(0, 2.0), (1, 1.0)], vec![(2, 3.0)], vec![], vec![(1, 0.5), (2, 0.5)]],
            &["a", "b", "c"],
        );
        let model = fit_lda(&m, 2, 7, 50).unwrap();
        for row in model.topic_word.iter().chain(&model.doc_topic) {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            assert!(row.iter().all(|&x| x >= 0.0));
        }
        assert_eq!(model.skipped, vec![2]);
        assert_eq!(model.doc_topic[2], vec![0.5, 0.5]);
    }

    #[test]
    fn single_word_corpus_concentrates_mass() {
        // "b" is in the vocabulary but carries no weight anywhere.
        let rows = (0..20).map(|_| vec![(0, 5.0)]).collect();
        let m = matrix(rows, &["a", "b"]);
        let model = fit_lda(&m, 2, 1, 100).unwrap();
        for row in &model.topic_word {
            assert!(row[0] > 0.99, "{row:?}");
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let m = matrix(vec![vec![(0, 1.0), (1, 2.0)], vec![(1, 1.0), (2, 1.5)]], &["a", "b", "c"]);
        let a = fit_lda(&m, 2, 3, 30).unwrap();
        let b = fit_lda(&m, 2, 3, 30).unwrap();
        assert_eq!(a.topic_word, b.topic_word);
        assert_eq!(a.objective_trace, b.objective_trace);
        // Another seed starts elsewhere even if it reaches the same optimum.
        let c = fit_lda(&m, 2, 4, 30).unwrap();
        assert_ne!(a.objective_trace[0], c.objective_trace[0]);
    }

    #[test]
    fn topic_count_checks() {
        let m = matrix(vec![vec![(0, 1.0)]], &["a", "b"]);
        assert!(matches!(fit_lda(&m, 1, 0, 5), Err(TopicsError::TooFewTopics(1))));
        assert!(matches!(fit_lda(&m, 3, 0, 5), Err(TopicsError::TooManyTopics { k: 3, vocab: 2 })));
        let empty = matrix(vec![vec![]], &["a", "b"]);
        assert!(matches!(fit_lda(&empty, 2, 0, 5), Err(TopicsError::NoDocuments)));
    }

    #[test]
    fn objective_never_decreases() {
        let rows = (0..30)
            .map(|d| {
                let base = (d % 3) * 3;
                vec![(base, 1.0 + d as f64 * 0.1), (base + 1, 2.0), (base + 2, 0.7)]
            })
            .collect();
        let m = matrix(rows, &["a", "b", "c", "d", "e", "f", "g", "h", "i"]);
        let model = fit_lda(&m, 3, 11, 200).unwrap();
        for w in model.objective_trace.windows(2) {
            assert!(w[1] >= w[0] - 1e-8, "{} -> {}", w[0], w[1]);
        }
    }
}
