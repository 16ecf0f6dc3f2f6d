//! Latent Dirichlet allocation by collapsed Gibbs sampling.
//!
//! Documents enter as nonzero-reduced BoW vectors expanded into tokens in
//! ascending word order. A sweep visits documents in corpus order and
//! tokens in that expanded order, resampling each token's topic from
//!
//! ```text
//! p(z = k | rest) ∝ (n_kw + β) / (n_k + Nw·β) · (n_dk + α)
//! ```
//!
//! by inverse CDF over the topics in index order. All-zero documents are
//! kept in the model (uniform θ) but carry no tokens.

use std::fmt::Write as _;
use std::path::Path;

use rand::Rng as _;
use thiserror::Error;

use crate::corpus::{nonzero_reduce, Corpus};
use crate::rng::{self, inverse_cdf};

pub const DEFAULT_ALPHA: f64 = 1.0;
pub const DEFAULT_BETA: f64 = 0.01;
pub const DEFAULT_ITERATIONS: usize = 1000;

/// Enumeration limits for `exact_posterior` (3^12 = 531441 configurations).
pub const MAX_EXACT_TOKENS: usize = 12;
pub const MAX_EXACT_TOPICS: usize = 3;

#[derive(Debug, Error)]
pub enum LdaError {
    #[error("invalid input: {0}")]
    Input(String),
    #[error("invalid config: {0}")]
    Config(String),
    #[error("instance too large to enumerate: {0}")]
    TooLarge(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct LdaConfig {
    pub num_topics: usize,
    pub alpha: f64,
    pub beta: f64,
    pub iterations: usize,
    pub seed: u64,
}

impl LdaConfig {
    pub fn new(num_topics: usize) -> Self {
        Self {
            num_topics,
            alpha: DEFAULT_ALPHA,
            beta: DEFAULT_BETA,
            iterations: DEFAULT_ITERATIONS,
            seed: 0,
        }
    }

    /// One topic per class.
    pub fn for_corpus(corpus: &Corpus) -> Self {
        Self::new(corpus.num_classes)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_iterations(mut self, iterations: usize) -> Self {
        self.iterations = iterations;
        self
    }

    pub fn with_priors(mut self, alpha: f64, beta: f64) -> Self {
        self.alpha = alpha;
        self.beta = beta;
        self
    }

    pub fn validate(&self) -> Result<(), LdaError> {
        if self.num_topics == 0 {
            return Err(LdaError::Config("topic count must be at least 1".into()));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite() && self.beta > 0.0 && self.beta.is_finite())
        {
            return Err(LdaError::Config("alpha and beta must be positive".into()));
        }
        if self.iterations == 0 {
            return Err(LdaError::Config("iterations must be at least 1".into()));
        }
        Ok(())
    }
}

fn expand_tokens(corpus: &Corpus) -> Vec<Vec<usize>> {
    corpus
        .vectors
        .iter()
        .map(|v| {
            let r = nonzero_reduce(v);
            r.indices
                .iter()
                .zip(&r.values)
                .flat_map(|(&w, &c)| std::iter::repeat_n(w, c as usize))
                .collect()
        })
        .collect()
}

/// A fitted topic model. Counts come from the last sweep; `phi` and `theta`
/// are their smoothed estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct TopicModel {
    pub config: LdaConfig,
    pub num_words: usize,
    /// Word id of every token, per document.
    pub tokens: Vec<Vec<usize>>,
    /// Topic of every token, aligned with `tokens`.
    pub assignments: Vec<Vec<usize>>,
    pub topic_word_counts: Vec<Vec<u64>>,
    pub doc_topic_counts: Vec<Vec<u64>>,
    pub phi: Vec<Vec<f64>>,
    pub theta: Vec<Vec<f64>>,
}

impl TopicModel {
    /// Builds counts and estimates from token/assignment pairs.
    pub fn from_assignments(
        config: LdaConfig,
        num_words: usize,
        tokens: Vec<Vec<usize>>,
        assignments: Vec<Vec<usize>>,
    ) -> Result<Self, LdaError> {
        let nt = config.num_topics;
        let mut topic_word_counts = vec![vec![0u64; num_words]; nt];
        let mut doc_topic_counts = vec![vec![0u64; nt]; tokens.len()];
        if tokens.len() != assignments.len() {
            return Err(LdaError::Input(
                "token and assignment document counts differ".into(),
            ));
        }
        for (d, (ws, zs)) in tokens.iter().zip(&assignments).enumerate() {
            if ws.len() != zs.len() {
                return Err(LdaError::Input(format!(
                    "document {d}: token/assignment lengths differ"
                )));
            }
            for (&w, &k) in ws.iter().zip(zs) {
                if w >= num_words || k >= nt {
                    return Err(LdaError::Input(format!(
                        "document {d}: word {w} or topic {k} out of range"
                    )));
                }
                topic_word_counts[k][w] += 1;
                doc_topic_counts[d][k] += 1;
            }
        }
        let beta_sum = num_words as f64 * config.beta;
        let phi = topic_word_counts
            .iter()
            .map(|row| {
                let n: u64 = row.iter().sum();
                row.iter()
                    .map(|&c| (c as f64 + config.beta) / (n as f64 + beta_sum))
                    .collect()
            })
            .collect();
        let alpha_sum = nt as f64 * config.alpha;
        let theta = doc_topic_counts
            .iter()
            .map(|row| {
                let n: u64 = row.iter().sum();
                row.iter()
                    .map(|&c| (c as f64 + config.alpha) / (n as f64 + alpha_sum))
                    .collect()
            })
            .collect();
        Ok(Self {
            config,
            num_words,
            tokens,
            assignments,
            topic_word_counts,
            doc_topic_counts,
            phi,
            theta,
        })
    }

    pub fn num_topics(&self) -> usize {
        self.config.num_topics
    }

    pub fn num_docs(&self) -> usize {
        self.tokens.len()
    }

    /// Text form: a config line, the topic-word count matrix, then one line
    /// of `word:topic` pairs per document. `phi`/`theta` are re-derived on load.
    pub fn to_text(&self) -> String {
        let c = &self.config;
        let mut s = format!(
            "ldamodel topics={} words={} alpha={} beta={} iterations={} seed={}\n",
            c.num_topics, self.num_words, c.alpha, c.beta, c.iterations, c.seed
        );
        s.push_str("topic_word_counts\n");
        for row in &self.topic_word_counts {
            let line: Vec<String> = row.iter().map(u64::to_string).collect();
            let _ = writeln!(s, "{}", line.join(" "));
        }
        let _ = writeln!(s, "assignments {}", self.tokens.len());
        for (d, (ws, zs)) in self.tokens.iter().zip(&self.assignments).enumerate() {
            let _ = write!(s, "doc {d}:");
            for (w, k) in ws.iter().zip(zs) {
                let _ = write!(s, " {w}:{k}");
            }
            s.push('\n');
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self, LdaError> {
        let perr = |line: usize, msg: String| LdaError::Parse { line, msg };
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        let (ln, header) = lines.next().ok_or_else(|| perr(1, "empty model".into()))?;
        let mut fields = header.split_whitespace();
        if fields.next() != Some("ldamodel") {
            return Err(perr(ln, "missing `ldamodel` header".into()));
        }
        let mut cfg = LdaConfig::new(0);
        let mut num_words = 0;
        for f in fields {
            let (k, v) = f
                .split_once('=')
                .ok_or_else(|| perr(ln, format!("bad config field `{f}`")))?;
            let bad = || perr(ln, format!("bad value for {k}: `{v}`"));
            match k {
                "topics" => cfg.num_topics = v.parse().map_err(|_| bad())?,
                "words" => num_words = v.parse().map_err(|_| bad())?,
                "alpha" => cfg.alpha = v.parse().map_err(|_| bad())?,
                "beta" => cfg.beta = v.parse().map_err(|_| bad())?,
                "iterations" => cfg.iterations = v.parse().map_err(|_| bad())?,
                "seed" => cfg.seed = v.parse().map_err(|_| bad())?,
                _ => return Err(perr(ln, format!("unknown config field `{k}`"))),
            }
        }
        cfg.validate()?;
        match lines.next() {
            Some((_, "topic_word_counts")) => {}
            other => {
                return Err(perr(
                    other.map_or(ln + 1, |o| o.0),
                    "expected `topic_word_counts`".into(),
                ))
            }
        }
        let mut stored = Vec::with_capacity(cfg.num_topics);
        for _ in 0..cfg.num_topics {
            let (ln, l) = lines
                .next()
                .ok_or_else(|| perr(ln, "truncated topic_word_counts".into()))?;
            let row = l
                .split_whitespace()
                .map(|t| {
                    t.parse::<u64>()
                        .map_err(|_| perr(ln, format!("bad count `{t}`")))
                })
                .collect::<Result<Vec<_>, _>>()?;
            if row.len() != num_words {
                return Err(perr(ln, format!("expected {num_words} counts")));
            }
            stored.push(row);
        }
        let (ln, l) = lines
            .next()
            .ok_or_else(|| perr(ln, "missing assignments section".into()))?;
        let ndocs: usize = l
            .strip_prefix("assignments ")
            .and_then(|n| n.trim().parse().ok())
            .ok_or_else(|| perr(ln, "expected `assignments <N>`".into()))?;
        let mut tokens = Vec::with_capacity(ndocs);
        let mut assignments = Vec::with_capacity(ndocs);
        for d in 0..ndocs {
            let (ln, l) = lines
                .next()
                .ok_or_else(|| perr(ln, "truncated assignments".into()))?;
            let body = l
                .strip_prefix(&format!("doc {d}:"))
                .ok_or_else(|| perr(ln, format!("expected `doc {d}:`")))?;
            let (mut ws, mut zs) = (Vec::new(), Vec::new());
            for pair in body.split_whitespace() {
                let parsed = pair
                    .split_once(':')
                    .and_then(|(w, k)| Some((w.parse().ok()?, k.parse().ok()?)));
                let (w, k): (usize, usize) =
                    parsed.ok_or_else(|| perr(ln, format!("bad pair `{pair}`")))?;
                ws.push(w);
                zs.push(k);
            }
            tokens.push(ws);
            assignments.push(zs);
        }
        let model = Self::from_assignments(cfg, num_words, tokens, assignments)?;
        if model.topic_word_counts != stored {
            return Err(LdaError::Input(
                "topic_word_counts disagree with assignments".into(),
            ));
        }
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), LdaError> {
        let path = path.as_ref();
        std::fs::write(path, self.to_text()).map_err(|source| LdaError::Io {
            path: path.display().to_string(),
            source,
        })
    }
}

/// Sweep-at-a-time collapsed Gibbs state. `fit_gibbs` drives it for
/// `cfg.iterations` sweeps; oracles and diagnostics drive it directly.
pub struct GibbsSampler {
    cfg: LdaConfig,
    num_words: usize,
    tokens: Vec<Vec<usize>>,
    z: Vec<Vec<usize>>,
    topic_word: Vec<u32>,
    topic_total: Vec<u32>,
    doc_topic: Vec<u32>,
    weights: Vec<f64>,
    rng: rng::Rng,
    sweeps: usize,
}

impl GibbsSampler {
    /// Random initial assignment, one uniform topic per token in sweep order.
    pub fn new(corpus: &Corpus, cfg: &LdaConfig) -> Result<Self, LdaError> {
        cfg.validate()?;
        if corpus.num_words == 0 {
            return Err(LdaError::Input("empty vocabulary".into()));
        }
        let tokens = expand_tokens(corpus);
        if tokens.iter().all(Vec::is_empty) {
            return Err(LdaError::Input(
                "corpus has no tokens after dropping all-zero documents".into(),
            ));
        }
        let nt = cfg.num_topics;
        let nw = corpus.num_words;
        let mut rng = rng::seeded(cfg.seed);
        let mut topic_word = vec![0u32; nt * nw];
        let mut topic_total = vec![0u32; nt];
        let mut doc_topic = vec![0u32; tokens.len() * nt];
        let z: Vec<Vec<usize>> = tokens
            .iter()
            .enumerate()
            .map(|(d, ws)| {
                ws.iter()
                    .map(|&w| {
                        let k = rng.random_range(0..nt);
                        topic_word[k * nw + w] += 1;
                        topic_total[k] += 1;
                        doc_topic[d * nt + k] += 1;
                        k
                    })
                    .collect()
            })
            .collect();
        Ok(Self {
            cfg: cfg.clone(),
            num_words: nw,
            tokens,
            z,
            topic_word,
            topic_total,
            doc_topic,
            weights: vec![0.0; nt],
            rng,
            sweeps: 0,
        })
    }

    pub fn sweep(&mut self) {
        let nt = self.cfg.num_topics;
        let nw = self.num_words;
        let (alpha, beta) = (self.cfg.alpha, self.cfg.beta);
        let beta_sum = nw as f64 * beta;
        for d in 0..self.tokens.len() {
            for i in 0..self.tokens[d].len() {
                let w = self.tokens[d][i];
                let old = self.z[d][i];
                self.topic_word[old * nw + w] -= 1;
                self.topic_total[old] -= 1;
                self.doc_topic[d * nt + old] -= 1;
                for k in 0..nt {
                    self.weights[k] = (f64::from(self.topic_word[k * nw + w]) + beta)
                        / (f64::from(self.topic_total[k]) + beta_sum)
                        * (f64::from(self.doc_topic[d * nt + k]) + alpha);
                }
                let new = inverse_cdf(&self.weights, self.rng.random());
                self.z[d][i] = new;
                self.topic_word[new * nw + w] += 1;
                self.topic_total[new] += 1;
                self.doc_topic[d * nt + new] += 1;
            }
        }
        self.sweeps += 1;
    }

    pub fn sweeps(&self) -> usize {
        self.sweeps
    }

    pub fn assignments(&self) -> &[Vec<usize>] {
        &self.z
    }

    /// The incrementally maintained tables `(topic_word[k*Nw + w],
    /// topic_total[k], doc_topic[d*Nt + k])`.
    pub fn count_tables(&self) -> (&[u32], &[u32], &[u32]) {
        (&self.topic_word, &self.topic_total, &self.doc_topic)
    }

    /// Expanded token word ids per document.
    pub fn tokens(&self) -> &[Vec<usize>] {
        &self.tokens
    }

    /// Mixed-radix code of the current assignment (first token most
    /// significant), matching `ExactPosterior` indexing.
    pub fn configuration_index(&self) -> usize {
        self.z
            .iter()
            .flatten()
            .fold(0, |acc, &k| acc * self.cfg.num_topics + k)
    }

    pub fn snapshot(&self) -> TopicModel {
        TopicModel::from_assignments(
            self.cfg.clone(),
            self.num_words,
            self.tokens.clone(),
            self.z.clone(),
        )
        .expect("sampler state is internally consistent")
    }

    pub fn into_model(self) -> TopicModel {
        TopicModel::from_assignments(self.cfg, self.num_words, self.tokens, self.z)
            .expect("sampler state is internally consistent")
    }
}

pub fn fit_gibbs(corpus: &Corpus, cfg: &LdaConfig) -> Result<TopicModel, LdaError> {
    let mut sampler = GibbsSampler::new(corpus, cfg)?;
    for _ in 0..cfg.iterations {
        sampler.sweep();
    }
    Ok(sampler.into_model())
}

/// Exact posterior over every topic assignment of a tiny corpus.
#[derive(Debug, Clone)]
pub struct ExactPosterior {
    pub num_topics: usize,
    pub num_tokens: usize,
    /// Indexed by mixed-radix configuration code; sums to 1.
    pub probabilities: Vec<f64>,
}

impl ExactPosterior {
    pub fn decode(&self, mut code: usize) -> Vec<usize> {
        let mut z = vec![0; self.num_tokens];
        for slot in z.iter_mut().rev() {
            *slot = code % self.num_topics;
            code /= self.num_topics;
        }
        z
    }

    /// Total-variation distance to an empirical histogram over configuration codes.
    pub fn total_variation(&self, counts: &[u64]) -> f64 {
        let n: u64 = counts.iter().sum();
        0.5 * self
            .probabilities
            .iter()
            .zip(counts)
            .map(|(&p, &c)| (p - c as f64 / n as f64).abs())
            .sum::<f64>()
    }
}

/// Log of the rising factorial a (a+1) ... (a+n-1), i.e. ln Γ(a+n) - ln Γ(a).
fn ln_rising(a: f64, n: u64) -> f64 {
    (0..n).map(|i| (a + i as f64).ln()).sum()
}

/// Enumerates all Nt^T assignments of the corpus tokens (same token order
/// as the sampler) weighted by the collapsed joint p(z, w | α, β).
pub fn exact_posterior(corpus: &Corpus, cfg: &LdaConfig) -> Result<ExactPosterior, LdaError> {
    cfg.validate()?;
    let docs = expand_tokens(corpus);
    let num_tokens: usize = docs.iter().map(Vec::len).sum();
    let nt = cfg.num_topics;
    if num_tokens == 0 {
        return Err(LdaError::Input("corpus has no tokens".into()));
    }
    if num_tokens > MAX_EXACT_TOKENS || nt > MAX_EXACT_TOPICS {
        return Err(LdaError::TooLarge(format!(
            "{num_tokens} tokens and {nt} topics exceed the limit of {MAX_EXACT_TOKENS} tokens and {MAX_EXACT_TOPICS} topics"
        )));
    }
    // compact word ids so the per-configuration tables stay tiny
    let mut vocab: Vec<usize> = docs.iter().flatten().copied().collect();
    vocab.sort_unstable();
    vocab.dedup();
    let flat: Vec<(usize, usize)> = docs
        .iter()
        .enumerate()
        .flat_map(|(d, ws)| {
            let vocab = &vocab;
            ws.iter()
                .map(move |w| (d, vocab.binary_search(w).expect("word in vocab")))
        })
        .collect();
    let (alpha, beta) = (cfg.alpha, cfg.beta);
    let beta_sum = corpus.num_words as f64 * beta;
    let doc_norm: f64 = docs
        .iter()
        .map(|ws| ln_rising(nt as f64 * alpha, ws.len() as u64))
        .sum();

    let total = nt.pow(num_tokens as u32);
    let mut log_joint = Vec::with_capacity(total);
    let mut topic_word = vec![0u32; nt * vocab.len()];
    let mut topic_total = vec![0u32; nt];
    let mut doc_topic = vec![0u32; docs.len() * nt];
    let mut z = vec![0usize; num_tokens];
    for code in 0..total {
        let mut c = code;
        for slot in z.iter_mut().rev() {
            *slot = c % nt;
            c /= nt;
        }
        topic_word.fill(0);
        topic_total.fill(0);
        doc_topic.fill(0);
        // chain-rule form of the Dirichlet-multinomial marginals
        let mut lp = -doc_norm;
        for (&(d, w), &k) in flat.iter().zip(&z) {
            lp += (f64::from(doc_topic[d * nt + k]) + alpha).ln()
                + (f64::from(topic_word[k * vocab.len() + w]) + beta).ln()
                - (f64::from(topic_total[k]) + beta_sum).ln();
            doc_topic[d * nt + k] += 1;
            topic_word[k * vocab.len() + w] += 1;
            topic_total[k] += 1;
        }
        log_joint.push(lp);
    }
    let max = log_joint.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut probabilities: Vec<f64> = log_joint.iter().map(|l| (l - max).exp()).collect();
    let norm: f64 = probabilities.iter().sum();
    probabilities.iter_mut().for_each(|p| *p /= norm);
    Ok(ExactPosterior {
        num_topics: nt,
        num_tokens,
        probabilities,
    })
}

/// Σ_d Σ_tokens ln Σ_k θ_dk φ_kw.
pub fn log_likelihood(model: &TopicModel, corpus: &Corpus) -> Result<f64, LdaError> {
    if corpus.num_words != model.num_words {
        return Err(LdaError::Input(format!(
            "corpus has {} words, model has {}",
            corpus.num_words, model.num_words
        )));
    }
    if corpus.len() != model.num_docs() {
        return Err(LdaError::Input(format!(
            "corpus has {} documents, model has {}",
            corpus.len(),
            model.num_docs()
        )));
    }
    let mut ll = 0.0;
    for (v, theta) in corpus.vectors.iter().zip(&model.theta) {
        for (w, &c) in v.counts.iter().enumerate().filter(|(_, &c)| c > 0) {
            let p: f64 = theta
                .iter()
                .zip(&model.phi)
                .map(|(t, phi)| t * phi[w])
                .sum();
            ll += f64::from(c) * p.ln();
        }
    }
    Ok(ll)
}

/// Greedy one-to-one matching of estimated to reference topic rows by L1
/// distance, smallest distance first. Returns `(estimated, reference, l1)`.
pub fn match_topics(estimated: &[Vec<f64>], reference: &[Vec<f64>]) -> Vec<(usize, usize, f64)> {
    let mut pairs: Vec<(f64, usize, usize)> = estimated
        .iter()
        .enumerate()
        .flat_map(|(i, e)| {
            reference.iter().enumerate().map(move |(j, r)| {
                let l1 = e.iter().zip(r).map(|(a, b)| (a - b).abs()).sum();
                (l1, i, j)
            })
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut used_e = vec![false; estimated.len()];
    let mut used_r = vec![false; reference.len()];
    let mut out = Vec::new();
    for (l1, i, j) in pairs {
        if !used_e[i] && !used_r[j] {
            used_e[i] = true;
            used_r[j] = true;
            out.push((i, j, l1));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{synth_corpus, ActionDescriptorVector, SynthSpec};

    fn corpus_of(docs: &[&[u32]], num_words: usize) -> Corpus {
        let vectors = docs
            .iter()
            .enumerate()
            .map(|(i, c)| ActionDescriptorVector {
                video_id: format!("d{i}"),
                view_id: 0,
                label: 0,
                counts: c.to_vec(),
            })
            .collect();
        Corpus::new(vectors, num_words, 1, 1).unwrap()
    }

    #[test]
    fn defaults() {
        let cfg = LdaConfig::new(4);
        assert_eq!(cfg.alpha, 1.0);
        assert_eq!(cfg.beta, 0.01);
        assert_eq!(cfg.iterations, 1000);
        assert!(cfg.validate().is_ok());
        assert!(LdaConfig::new(0).validate().is_err());
        assert!(LdaConfig::new(2).with_priors(0.0, 1.0).validate().is_err());
        assert!(LdaConfig::new(2).with_iterations(0).validate().is_err());
    }

    #[test]
    fn estimates_are_normalized_and_counts_conserved() {
        let (c, _) = synth_corpus(&SynthSpec {
            num_docs: 40,
            tokens_per_doc: 20,
            ..SynthSpec::default()
        })
        .unwrap();
        let m = fit_gibbs(&c, &LdaConfig::new(4).with_iterations(20).with_seed(3)).unwrap();
        for row in m.phi.iter().chain(&m.theta) {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
        let totals = c.word_totals();
        for w in 0..c.num_words {
            assert_eq!(
                m.topic_word_counts.iter().map(|r| r[w]).sum::<u64>(),
                totals[w]
            );
        }
        for (d, v) in c.vectors.iter().enumerate() {
            assert_eq!(m.doc_topic_counts[d].iter().sum::<u64>(), v.total_tokens());
        }
    }

    #[test]
    fn degenerate_documents_are_kept_but_empty() {
        let c = corpus_of(&[&[0, 0, 0], &[1, 2, 0]], 3);
        let m = fit_gibbs(&c, &LdaConfig::new(2).with_iterations(5)).unwrap();
        assert_eq!(m.num_docs(), 2);
        assert!(m.tokens[0].is_empty());
        assert_eq!(m.theta[0], vec![0.5, 0.5]);
        let all_zero = corpus_of(&[&[0, 0]], 2);
        assert!(fit_gibbs(&all_zero, &LdaConfig::new(2)).is_err());
    }

    #[test]
    fn fit_is_deterministic() {
        let (c, _) = synth_corpus(&SynthSpec {
            num_docs: 30,
            ..SynthSpec::default()
        })
        .unwrap();
        let cfg = LdaConfig::new(4).with_iterations(30).with_seed(8);
        let a = fit_gibbs(&c, &cfg).unwrap();
        let b = fit_gibbs(&c, &cfg).unwrap();
        assert_eq!(a, b);
        let other = fit_gibbs(&c, &cfg.clone().with_seed(9)).unwrap();
        assert_ne!(a.assignments, other.assignments);
    }

    #[test]
    fn model_text_round_trip() {
        let c = corpus_of(&[&[2, 0, 1], &[0, 0, 0], &[0, 3, 1]], 3);
        let m = fit_gibbs(&c, &LdaConfig::new(2).with_iterations(7).with_seed(1)).unwrap();
        let back = TopicModel::parse(&m.to_text()).unwrap();
        assert_eq!(back, m);
        let tampered = m
            .to_text()
            .replacen("topic_word_counts\n", "topic_word_counts\n9", 1);
        assert!(TopicModel::parse(&tampered).is_err());
    }

    #[test]
    fn exact_single_token_is_symmetric() {
        let c = corpus_of(&[&[1, 0]], 2);
        let post = exact_posterior(&c, &LdaConfig::new(2)).unwrap();
        assert_eq!(post.probabilities.len(), 2);
        assert!((post.probabilities[0] - 0.5).abs() < 1e-15);
        assert!((post.probabilities[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn exact_two_tokens_same_word_prefers_sharing() {
        // Hand enumeration, α=1, β=0.01, Nw=1, Nt=2, chain rule per token
        // (n_dk+α)(n_kw+β)/(n_k+β):
        //   z=00, 11: (1·β/β)·(2·(1+β)/(1+β)) = 2
        //   z=01, 10: (1·β/β)·(1·β/β)         = 1
        // so P(shared) = 4/6.
        let c = corpus_of(&[&[2]], 1);
        let post = exact_posterior(&c, &LdaConfig::new(2)).unwrap();
        let shared = post.probabilities[0] + post.probabilities[3];
        assert!((shared - 2.0 / 3.0).abs() < 1e-12, "{shared}");
        assert!(shared > 0.5);
    }

    #[test]
    fn exact_normalizes_and_refuses_large() {
        let c = corpus_of(&[&[2, 1, 0], &[0, 1, 3]], 3);
        let post = exact_posterior(&c, &LdaConfig::new(3)).unwrap();
        assert_eq!(post.probabilities.len(), 3usize.pow(7));
        assert!((post.probabilities.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let big = corpus_of(&[&[7, 6]], 2);
        assert!(matches!(
            exact_posterior(&big, &LdaConfig::new(2)),
            Err(LdaError::TooLarge(_))
        ));
        let topics = corpus_of(&[&[1, 1]], 2);
        assert!(matches!(
            exact_posterior(&topics, &LdaConfig::new(4)),
            Err(LdaError::TooLarge(_))
        ));
    }

    #[test]
    fn decode_inverts_configuration_index() {
        let c = corpus_of(&[&[1, 2], &[1, 0]], 2);
        let post = exact_posterior(&c, &LdaConfig::new(3)).unwrap();
        let mut s = GibbsSampler::new(&c, &LdaConfig::new(3).with_seed(4)).unwrap();
        for _ in 0..10 {
            s.sweep();
            let flat: Vec<usize> = s.assignments().iter().flatten().copied().collect();
            assert_eq!(post.decode(s.configuration_index()), flat);
        }
    }

    #[test]
    fn log_likelihood_closed_forms() {
        let one_word = corpus_of(&[&[5], &[3]], 1);
        let m = fit_gibbs(&one_word, &LdaConfig::new(1).with_iterations(3)).unwrap();
        assert!(log_likelihood(&m, &one_word).unwrap().abs() < 1e-12);

        let c = corpus_of(&[&[1, 2, 0, 4], &[0, 0, 3, 1]], 4);
        let mut m = fit_gibbs(&c, &LdaConfig::new(2).with_iterations(3)).unwrap();
        m.phi = vec![vec![0.25; 4]; 2];
        m.theta = vec![vec![0.5; 2]; 2];
        let ll = log_likelihood(&m, &c).unwrap();
        assert!((ll - 11.0 * (0.25f64).ln()).abs() < 1e-12);

        let wrong = corpus_of(&[&[1, 2, 0]], 3);
        assert!(log_likelihood(&m, &wrong).is_err());
    }

    #[test]
    fn greedy_matching_resolves_label_switching() {
        let est = vec![vec![0.0, 1.0], vec![0.9, 0.1]];
        let truth = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let m = match_topics(&est, &truth);
        assert_eq!(m.len(), 2);
        assert_eq!((m[0].0, m[0].1), (0, 1));
        assert_eq!((m[1].0, m[1].1), (1, 0));
        assert!((m[1].2 - 0.2).abs() < 1e-12);
    }
}
