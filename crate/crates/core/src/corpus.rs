//! BoW corpora: the per-video count vectors, the line-oriented dataset
//! format, nonzero reduction, and a planted-topic synthetic generator.
//!
//! Dataset format (UTF-8):
//!
//! ```text
//! bowcorpus <num_words> <num_classes> <num_views>
//! # comment
//! <video_id>\t<view_id>\t<label>\t<word>:<count> <word>:<count> ...
//! ```
//!
//! Word ids within a record are strictly ascending. Blank lines and lines
//! starting with `#` are skipped.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::Rng as _;
use rand_distr::{Distribution, Gamma};
use thiserror::Error;

use crate::rng::{self, inverse_cdf};

/// Fewest vocabulary words a planted topic may own.
pub const MIN_TOPIC_SUPPORT: usize = 2;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("invalid corpus: {0}")]
    Invalid(String),
    #[error("invalid synthetic spec: {0}")]
    Config(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

fn parse_err(line: usize, msg: impl Into<String>) -> CorpusError {
    CorpusError::Parse {
        line,
        msg: msg.into(),
    }
}

/// One video's BoW histogram in one camera view.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionDescriptorVector {
    pub video_id: String,
    pub view_id: usize,
    pub label: usize,
    pub counts: Vec<u32>,
}

impl ActionDescriptorVector {
    pub fn total_tokens(&self) -> u64 {
        self.counts.iter().map(|&c| u64::from(c)).sum()
    }
}

/// The nonzero positions of a count vector, ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReducedVector {
    pub indices: Vec<usize>,
    pub values: Vec<u32>,
    pub source_length: usize,
}

impl ReducedVector {
    /// Number of retained words (the reduced descriptor size).
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// An all-zero source vector reduces to nothing; LDA skips such documents.
    pub fn is_degenerate(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn scatter(&self) -> Vec<u32> {
        let mut out = vec![0; self.source_length];
        for (&i, &v) in self.indices.iter().zip(&self.values) {
            out[i] = v;
        }
        out
    }
}

pub fn nonzero_reduce(v: &ActionDescriptorVector) -> ReducedVector {
    let (indices, values) = v
        .counts
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(i, &c)| (i, c))
        .unzip();
    ReducedVector {
        indices,
        values,
        source_length: v.counts.len(),
    }
}

/// A video as seen across all views: the corpus row index for each view.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Video {
    pub video_id: String,
    pub label: usize,
    pub rows: Vec<Option<usize>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub vectors: Vec<ActionDescriptorVector>,
    pub num_words: usize,
    pub num_classes: usize,
    pub num_views: usize,
}

impl Corpus {
    pub fn new(
        vectors: Vec<ActionDescriptorVector>,
        num_words: usize,
        num_classes: usize,
        num_views: usize,
    ) -> Result<Self, CorpusError> {
        if num_words == 0 || num_classes == 0 || num_views == 0 {
            return Err(CorpusError::Invalid(
                "num_words, num_classes and num_views must be positive".into(),
            ));
        }
        for v in &vectors {
            if v.counts.len() != num_words {
                return Err(CorpusError::Invalid(format!(
                    "video {} has {} counts, expected {num_words}",
                    v.video_id,
                    v.counts.len()
                )));
            }
            if v.label >= num_classes {
                return Err(CorpusError::Invalid(format!(
                    "video {} label {} >= {num_classes}",
                    v.video_id, v.label
                )));
            }
            if v.view_id >= num_views {
                return Err(CorpusError::Invalid(format!(
                    "video {} view {} >= {num_views}",
                    v.video_id, v.view_id
                )));
            }
        }
        Ok(Self {
            vectors,
            num_words,
            num_classes,
            num_views,
        })
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn total_tokens(&self) -> u64 {
        self.vectors.iter().map(|v| v.total_tokens()).sum()
    }

    /// Per-word token totals over the whole corpus.
    pub fn word_totals(&self) -> Vec<u64> {
        let mut totals = vec![0u64; self.num_words];
        for v in &self.vectors {
            for (t, &c) in totals.iter_mut().zip(&v.counts) {
                *t += u64::from(c);
            }
        }
        totals
    }

    /// The rows belonging to one view, in corpus order.
    pub fn view_rows(&self, view: usize) -> Vec<usize> {
        (0..self.vectors.len())
            .filter(|&i| self.vectors[i].view_id == view)
            .collect()
    }

    /// Groups rows by `video_id` in order of first appearance. A video whose
    /// views disagree on the label, or that repeats a view, is an error.
    /// Missing views are left as `None`; callers decide whether that is fatal.
    pub fn videos(&self) -> Result<Vec<Video>, CorpusError> {
        let mut out: Vec<Video> = Vec::new();
        let mut index: HashMap<&str, usize> = HashMap::new();
        for (row, v) in self.vectors.iter().enumerate() {
            let slot = *index.entry(v.video_id.as_str()).or_insert_with(|| {
                out.push(Video {
                    video_id: v.video_id.clone(),
                    label: v.label,
                    rows: vec![None; self.num_views],
                });
                out.len() - 1
            });
            let video = &mut out[slot];
            if video.label != v.label {
                return Err(CorpusError::Invalid(format!(
                    "video {} has labels {} and {} across views",
                    v.video_id, video.label, v.label
                )));
            }
            if video.rows[v.view_id].replace(row).is_some() {
                return Err(CorpusError::Invalid(format!(
                    "video {} repeats view {}",
                    v.video_id, v.view_id
                )));
            }
        }
        Ok(out)
    }

    /// Sub-corpus with the given rows, in the given order.
    pub fn subset(&self, rows: &[usize]) -> Corpus {
        Corpus {
            vectors: rows.iter().map(|&r| self.vectors[r].clone()).collect(),
            num_words: self.num_words,
            num_classes: self.num_classes,
            num_views: self.num_views,
        }
    }

    pub fn parse(text: &str) -> Result<Self, CorpusError> {
        let mut header: Option<(usize, usize, usize)> = None;
        let mut vectors = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.trim_end_matches('\r');
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let Some((nw, nc, nv)) = header else {
                header = Some(parse_header(line, line_no)?);
                continue;
            };
            vectors.push(parse_record(line, line_no, nw, nc, nv)?);
        }
        let (nw, nc, nv) = header.ok_or_else(|| parse_err(1, "missing `bowcorpus` header"))?;
        Corpus::new(vectors, nw, nc, nv)
    }

    pub fn to_text(&self) -> String {
        let mut s = format!(
            "bowcorpus {} {} {}\n",
            self.num_words, self.num_classes, self.num_views
        );
        for v in &self.vectors {
            let _ = write!(s, "{}\t{}\t{}\t", v.video_id, v.view_id, v.label);
            let reduced = nonzero_reduce(v);
            for (k, (&w, &c)) in reduced.indices.iter().zip(&reduced.values).enumerate() {
                if k > 0 {
                    s.push(' ');
                }
                let _ = write!(s, "{w}:{c}");
            }
            s.push('\n');
        }
        s
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), CorpusError> {
        write_file(path.as_ref(), &self.to_text())
    }
}

pub(crate) fn write_file(path: &Path, contents: &str) -> Result<(), CorpusError> {
    fs::write(path, contents).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn parse_header(line: &str, line_no: usize) -> Result<(usize, usize, usize), CorpusError> {
    let parts: Vec<&str> = line.split_whitespace().collect();
    if parts.len() != 4 || parts[0] != "bowcorpus" {
        return Err(parse_err(
            line_no,
            "missing header `bowcorpus <Nw> <num_classes> <num_views>`",
        ));
    }
    let num = |s: &str, what: &str| {
        s.parse::<usize>()
            .map_err(|_| parse_err(line_no, format!("bad {what} `{s}` in header")))
    };
    Ok((
        num(parts[1], "Nw")?,
        num(parts[2], "num_classes")?,
        num(parts[3], "num_views")?,
    ))
}

fn parse_record(
    line: &str,
    line_no: usize,
    num_words: usize,
    num_classes: usize,
    num_views: usize,
) -> Result<ActionDescriptorVector, CorpusError> {
    let mut fields = line.splitn(4, '\t');
    let video_id = fields.next().unwrap_or_default().to_string();
    let (Some(view), Some(label)) = (fields.next(), fields.next()) else {
        return Err(parse_err(
            line_no,
            "expected `<video_id>\\t<view_id>\\t<label>\\t<counts>`",
        ));
    };
    if video_id.is_empty() {
        return Err(parse_err(line_no, "empty video id"));
    }
    let view_id: usize = view
        .trim()
        .parse()
        .map_err(|_| parse_err(line_no, format!("bad view id `{view}`")))?;
    let label: usize = label
        .trim()
        .parse()
        .map_err(|_| parse_err(line_no, format!("bad label `{label}`")))?;
    if view_id >= num_views {
        return Err(parse_err(
            line_no,
            format!("view id {view_id} >= {num_views}"),
        ));
    }
    if label >= num_classes {
        return Err(parse_err(
            line_no,
            format!("label {label} >= {num_classes}"),
        ));
    }
    let mut counts = vec![0u32; num_words];
    let mut prev: Option<usize> = None;
    for tok in fields.next().unwrap_or_default().split_whitespace() {
        let (w, c) = tok
            .split_once(':')
            .ok_or_else(|| parse_err(line_no, format!("bad entry `{tok}`, expected word:count")))?;
        let word: usize = w
            .parse()
            .map_err(|_| parse_err(line_no, format!("bad word id `{w}`")))?;
        if c.trim_start().starts_with('-') {
            return Err(parse_err(
                line_no,
                format!("negative count for word {word}"),
            ));
        }
        let count: u32 = c
            .parse()
            .map_err(|_| parse_err(line_no, format!("bad count `{c}`")))?;
        if word >= num_words {
            return Err(parse_err(
                line_no,
                format!("word id {word} >= Nw={num_words}"),
            ));
        }
        match prev {
            Some(p) if p == word => {
                return Err(parse_err(line_no, format!("duplicate word id {word}")))
            }
            Some(p) if p > word => {
                return Err(parse_err(
                    line_no,
                    format!("word ids not ascending at {word}"),
                ))
            }
            _ => {}
        }
        prev = Some(word);
        counts[word] = count;
    }
    Ok(ActionDescriptorVector {
        video_id,
        view_id,
        label,
        counts,
    })
}

pub fn load_corpus(path: impl AsRef<Path>) -> Result<Corpus, CorpusError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Corpus::parse(&text)
}

/// Parameters of the planted-topic generator.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub num_topics: usize,
    pub num_words: usize,
    pub num_docs: usize,
    pub tokens_per_doc: usize,
    /// Share of the vocabulary (a suffix) reserved for noise words.
    pub noise_fraction: f64,
    /// Per-token probability of emitting a uniform noise word instead.
    pub noise_rate: f64,
    pub alpha: f64,
    pub beta: f64,
    /// Camera views per video; each view gets its own planted topic-word table.
    pub num_views: usize,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            num_topics: 4,
            num_words: 200,
            num_docs: 400,
            tokens_per_doc: 50,
            noise_fraction: 0.0,
            noise_rate: 0.0,
            alpha: 0.5,
            beta: 1.0,
            num_views: 1,
            seed: 0,
        }
    }
}

impl SynthSpec {
    pub fn noise_word_count(&self) -> usize {
        (self.noise_fraction * self.num_words as f64).floor() as usize
    }

    /// Vocabulary range owned by planted topic `k`.
    pub fn topic_support(&self, k: usize) -> std::ops::Range<usize> {
        let m = self.num_words - self.noise_word_count();
        (k * m / self.num_topics)..((k + 1) * m / self.num_topics)
    }

    pub fn validate(&self) -> Result<(), CorpusError> {
        let fail = |m: &str| Err(CorpusError::Config(m.to_string()));
        if self.num_topics == 0 {
            return fail("topic count must be at least 1");
        }
        if self.tokens_per_doc == 0 {
            return fail("tokens per document must be at least 1");
        }
        if self.num_docs == 0 || self.num_words == 0 || self.num_views == 0 {
            return fail("document, vocabulary and view counts must be positive");
        }
        if !(0.0..1.0).contains(&self.noise_fraction) {
            return fail("noise fraction must lie in [0, 1)");
        }
        if !(0.0..1.0).contains(&self.noise_rate) {
            return fail("noise rate must lie in [0, 1)");
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite() && self.beta > 0.0 && self.beta.is_finite())
        {
            return fail("alpha and beta must be positive and finite");
        }
        let primitive = self.num_words - self.noise_word_count();
        if primitive < self.num_topics * MIN_TOPIC_SUPPORT {
            return Err(CorpusError::Config(format!(
                "{primitive} non-noise words cannot give {} topics {MIN_TOPIC_SUPPORT} words each",
                self.num_topics
            )));
        }
        if self.noise_rate > 0.0 && self.noise_word_count() == 0 {
            return fail("noise rate > 0 needs a nonzero noise fraction");
        }
        Ok(())
    }
}

/// What the generator planted, for checking recovery and noise removal.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    /// `phi[view][topic][word]`; zero outside the topic's support.
    pub phi: Vec<Vec<Vec<f64>>>,
    /// Per-video topic mixture, shared across views.
    pub theta: Vec<Vec<f64>>,
    /// Designated noise words (a vocabulary suffix), ascending.
    pub noise_words: Vec<usize>,
    /// `topic_word_counts[view][topic][word]`: tokens actually emitted by
    /// each planted topic (noise replacements excluded).
    pub topic_word_counts: Vec<Vec<Vec<u64>>>,
}

impl GroundTruth {
    pub fn to_text(&self) -> String {
        let views = self.phi.len();
        let topics = self.phi.first().map_or(0, Vec::len);
        let words = self.phi.first().and_then(|v| v.first()).map_or(0, Vec::len);
        let mut s = format!("groundtruth {views} {topics} {words}\n");
        s.push_str("noise:");
        for w in &self.noise_words {
            let _ = write!(s, " {w}");
        }
        s.push('\n');
        for (v, view) in self.phi.iter().enumerate() {
            for (k, row) in view.iter().enumerate() {
                let _ = write!(s, "phi {v} {k}:");
                for p in row {
                    let _ = write!(s, " {p}");
                }
                s.push('\n');
            }
        }
        for (v, view) in self.topic_word_counts.iter().enumerate() {
            for (k, row) in view.iter().enumerate() {
                let _ = write!(s, "counts {v} {k}:");
                for c in row {
                    let _ = write!(s, " {c}");
                }
                s.push('\n');
            }
        }
        for (d, row) in self.theta.iter().enumerate() {
            let _ = write!(s, "theta {d}:");
            for p in row {
                let _ = write!(s, " {p}");
            }
            s.push('\n');
        }
        s
    }
}

fn sample_dirichlet(rng: &mut rng::Rng, concentration: f64, dim: usize) -> Vec<f64> {
    let gamma = Gamma::new(concentration, 1.0).expect("validated concentration");
    let mut draws: Vec<f64> = (0..dim).map(|_| gamma.sample(rng)).collect();
    let sum: f64 = draws.iter().sum();
    if sum > 0.0 {
        draws.iter_mut().for_each(|x| *x /= sum);
    } else {
        // every gamma draw underflowed: put all mass on one coordinate
        let pick = rng.random_range(0..dim);
        draws
            .iter_mut()
            .enumerate()
            .for_each(|(i, x)| *x = f64::from(u8::from(i == pick)));
    }
    draws
}

fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate() {
        if x > xs[best] {
            best = i;
        }
    }
    best
}

/// Draws a corpus from the LDA generative process over disjoint planted
/// topic supports, then corrupts tokens with uniform noise words.
///
/// Draw order from the ChaCha8 stream: per view, per topic, the topic-word
/// Dirichlet over its support; then per video the topic mixture, and per
/// view and token: the noise coin, then either a uniform noise word or a
/// topic and a word by inverse CDF.
pub fn synth_corpus(spec: &SynthSpec) -> Result<(Corpus, GroundTruth), CorpusError> {
    spec.validate()?;
    let mut rng = rng::seeded(spec.seed);
    let nw = spec.num_words;
    let nt = spec.num_topics;
    let noise_count = spec.noise_word_count();
    let noise_start = nw - noise_count;

    let phi: Vec<Vec<Vec<f64>>> = (0..spec.num_views)
        .map(|_| {
            (0..nt)
                .map(|k| {
                    let support = spec.topic_support(k);
                    let weights = sample_dirichlet(&mut rng, spec.beta, support.len());
                    let mut row = vec![0.0; nw];
                    row[support].copy_from_slice(&weights);
                    row
                })
                .collect()
        })
        .collect();

    let mut true_counts = vec![vec![vec![0u64; nw]; nt]; spec.num_views];
    let mut theta = Vec::with_capacity(spec.num_docs);
    let mut vectors = Vec::with_capacity(spec.num_docs * spec.num_views);
    let width = spec.num_docs.to_string().len();
    for d in 0..spec.num_docs {
        let mix = sample_dirichlet(&mut rng, spec.alpha, nt);
        let label = argmax(&mix);
        for view in 0..spec.num_views {
            let mut counts = vec![0u32; nw];
            for _ in 0..spec.tokens_per_doc {
                let is_noise = rng.random::<f64>() < spec.noise_rate;
                let word = if is_noise {
                    noise_start + rng.random_range(0..noise_count)
                } else {
                    let topic = inverse_cdf(&mix, rng.random());
                    let word = inverse_cdf(&phi[view][topic], rng.random());
                    true_counts[view][topic][word] += 1;
                    word
                };
                counts[word] += 1;
            }
            vectors.push(ActionDescriptorVector {
                video_id: format!("vid{d:0width$}"),
                view_id: view,
                label,
                counts,
            });
        }
        theta.push(mix);
    }
    let corpus = Corpus::new(vectors, nw, nt, spec.num_views)?;
    let truth = GroundTruth {
        phi,
        theta,
        noise_words: (noise_start..nw).collect(),
        topic_word_counts: true_counts,
    };
    Ok((corpus, truth))
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO: &str = "bowcorpus 10 2 1\n# comment\na\t0\t0\t3:2 7:1\nb\t0\t1\t0:5\n";

    #[test]
    fn parses_two_records() {
        let c = Corpus::parse(TWO).unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c.vectors[0].counts, vec![0, 0, 0, 2, 0, 0, 0, 1, 0, 0]);
        assert_eq!(c.vectors[1].label, 1);
    }

    #[test]
    fn round_trips_text() {
        let c = Corpus::parse(TWO).unwrap();
        let again = Corpus::parse(&c.to_text()).unwrap();
        assert_eq!(c, again);
        assert_eq!(again.to_text(), c.to_text());
    }

    #[test]
    fn word_out_of_range_names_line() {
        let err = Corpus::parse("bowcorpus 10 1 1\na\t0\t0\t12:1\n").unwrap_err();
        match err {
            CorpusError::Parse { line, msg } => {
                assert_eq!(line, 2);
                assert!(msg.contains("12"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_records() {
        for (body, needle) in [
            ("a\t0\t0\t1:-1", "negative"),
            ("a\t0\t0\t1:1 1:2", "duplicate"),
            ("a\t0\t0\t3:1 1:2", "ascending"),
            ("a\t0\t5\t1:1", "label"),
            ("a\t2\t0\t1:1", "view"),
            ("a\t0", "expected"),
        ] {
            let text = format!("bowcorpus 10 2 1\n{body}\n");
            let err = Corpus::parse(&text).unwrap_err().to_string();
            assert!(err.contains("line 2"), "{err}");
            assert!(err.contains(needle), "{err} lacks {needle}");
        }
        assert!(matches!(
            Corpus::parse("a\t0\t0\t1:1\n"),
            Err(CorpusError::Parse { line: 1, .. })
        ));
        assert!(Corpus::parse("# only a comment\n").is_err());
    }

    #[test]
    fn empty_body_is_a_zero_vector() {
        let c = Corpus::parse("bowcorpus 4 1 1\na\t0\t0\t\n").unwrap();
        assert_eq!(c.vectors[0].counts, vec![0; 4]);
        assert!(nonzero_reduce(&c.vectors[0]).is_degenerate());
    }

    #[test]
    fn nonzero_reduce_examples() {
        let v = ActionDescriptorVector {
            video_id: "x".into(),
            view_id: 0,
            label: 0,
            counts: vec![0, 2, 0, 5],
        };
        let r = nonzero_reduce(&v);
        assert_eq!(r.indices, vec![1, 3]);
        assert_eq!(r.values, vec![2, 5]);
        assert!(!r.is_degenerate());
        assert_eq!(r.scatter(), v.counts);

        let v = ActionDescriptorVector {
            counts: vec![0, 1, 0, 4, 0, 9],
            ..v
        };
        assert_eq!(nonzero_reduce(&v).len(), 3);
    }

    #[test]
    fn videos_groups_views() {
        let text = "bowcorpus 3 2 2\na\t0\t1\t0:1\nb\t0\t0\t1:1\na\t1\t1\t2:1\n";
        let c = Corpus::parse(text).unwrap();
        let vids = c.videos().unwrap();
        assert_eq!(vids.len(), 2);
        assert_eq!(vids[0].rows, vec![Some(0), Some(2)]);
        assert_eq!(vids[1].rows, vec![Some(1), None]);

        let bad = Corpus::parse("bowcorpus 3 2 2\na\t0\t1\t0:1\na\t1\t0\t2:1\n").unwrap();
        assert!(bad.videos().is_err());
    }

    #[test]
    fn synth_is_deterministic() {
        let spec = SynthSpec {
            noise_fraction: 0.2,
            noise_rate: 0.1,
            seed: 11,
            num_docs: 30,
            ..SynthSpec::default()
        };
        let (a, ta) = synth_corpus(&spec).unwrap();
        let (b, tb) = synth_corpus(&spec).unwrap();
        assert_eq!(a.to_text(), b.to_text());
        assert_eq!(ta.to_text(), tb.to_text());
    }

    #[test]
    fn synth_conserves_tokens() {
        let spec = SynthSpec {
            num_docs: 37,
            tokens_per_doc: 13,
            num_views: 2,
            noise_fraction: 0.3,
            noise_rate: 0.2,
            ..SynthSpec::default()
        };
        let (c, truth) = synth_corpus(&spec).unwrap();
        assert_eq!(c.total_tokens(), 37 * 13 * 2);
        assert_eq!(c.len(), 74);
        assert_eq!(truth.noise_words.len(), 60);
        assert_eq!(truth.noise_words[0], 140);
        // planted tokens never land on noise words
        for view in &truth.topic_word_counts {
            for row in view {
                assert!(truth.noise_words.iter().all(|&w| row[w] == 0));
            }
        }
        assert_eq!(c.videos().unwrap().len(), 37);
    }

    #[test]
    fn synth_without_noise_never_emits_noise_words() {
        let spec = SynthSpec {
            noise_fraction: 0.25,
            noise_rate: 0.0,
            ..SynthSpec::default()
        };
        let (c, truth) = synth_corpus(&spec).unwrap();
        for v in &c.vectors {
            assert!(truth.noise_words.iter().all(|&w| v.counts[w] == 0));
        }
    }

    #[test]
    fn synth_single_topic_matches_planted_frequencies() {
        // 1000 docs x 100 tokens = 1e5 tokens; the L1 error of an empirical
        // distribution over 20 words at this size is around 0.01.
        let spec = SynthSpec {
            num_topics: 1,
            num_words: 20,
            num_docs: 1000,
            tokens_per_doc: 100,
            seed: 5,
            ..SynthSpec::default()
        };
        let (c, truth) = synth_corpus(&spec).unwrap();
        let totals = c.word_totals();
        let n = c.total_tokens() as f64;
        let l1: f64 = totals
            .iter()
            .zip(&truth.phi[0][0])
            .map(|(&t, &p)| (t as f64 / n - p).abs())
            .sum();
        assert!(l1 < 0.05, "L1 {l1}");
    }

    #[test]
    fn synth_rejects_bad_specs() {
        let too_small = SynthSpec {
            num_topics: 4,
            num_words: 10,
            noise_fraction: 0.5,
            ..SynthSpec::default()
        };
        assert!(matches!(
            synth_corpus(&too_small),
            Err(CorpusError::Config(_))
        ));
        let zero = SynthSpec {
            tokens_per_doc: 0,
            ..SynthSpec::default()
        };
        assert!(synth_corpus(&zero).is_err());
        let no_noise_words = SynthSpec {
            noise_rate: 0.1,
            ..SynthSpec::default()
        };
        assert!(synth_corpus(&no_noise_words).is_err());
    }
}
