//! Dominant codeword selection.
//!
//! Each topic's codeword frequencies are the final-sweep token counts
//! assigned to (topic, word). A codeword is dominant in a topic when its
//! frequency reaches `ceil(fraction * N)`, N being the number of training
//! videos. The dominant BoW vector of a video is its count vector restricted
//! to the union of every topic's dominant codewords; multiview videos
//! concatenate per-view dominant vectors in view order.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use thiserror::Error;

use crate::corpus::{ActionDescriptorVector, Corpus};
use crate::lda::{fit_gibbs, LdaConfig, LdaError, TopicModel};

pub const DEFAULT_THRESHOLD_FRACTION: f64 = 0.01;

#[derive(Debug, Error)]
pub enum DcsError {
    #[error("invalid input: {0}")]
    Input(String),
    #[error("degenerate selection: threshold {threshold} exceeds every topic frequency (max {max_frequency})")]
    Degenerate { threshold: u64, max_frequency: u64 },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Lda(#[from] LdaError),
}

/// Token counts per (topic, word) from the last Gibbs sweep.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TopicCodewords {
    pub frequency: Vec<Vec<u64>>,
}

impl TopicCodewords {
    pub fn num_topics(&self) -> usize {
        self.frequency.len()
    }

    pub fn num_words(&self) -> usize {
        self.frequency.first().map_or(0, Vec::len)
    }
}

pub fn topic_codewords(model: &TopicModel) -> TopicCodewords {
    TopicCodewords {
        frequency: model.topic_word_counts.clone(),
    }
}

/// `ceil(fraction * n)`, at least 1. Products within 1e-9 (relative) of an
/// integer count as that integer, so 0.01 * 300 gives 3 rather than 4.
pub fn compute_threshold(n: usize, fraction: f64) -> u64 {
    assert!(
        fraction > 0.0 && fraction < 1.0,
        "threshold fraction must lie in (0, 1), got {fraction}"
    );
    let x = fraction * n as f64;
    let nearest = x.round();
    let t = if (x - nearest).abs() <= 1e-9 * nearest.max(1.0) {
        nearest
    } else {
        x.ceil()
    };
    (t as u64).max(1)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DominantSet {
    /// Ascending dominant word ids of each topic.
    pub per_topic: Vec<Vec<usize>>,
    /// Ascending union of `per_topic`.
    pub union: Vec<usize>,
    pub threshold: u64,
}

impl DominantSet {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (n, words) in self.per_topic.iter().enumerate() {
            let _ = write!(s, "topic {n}:");
            for w in words {
                let _ = write!(s, " {w}");
            }
            s.push('\n');
        }
        s.push_str("union:");
        for w in &self.union {
            let _ = write!(s, " {w}");
        }
        let _ = writeln!(s, "\nthreshold: {}", self.threshold);
        s
    }

    pub fn parse(text: &str) -> Result<Self, DcsError> {
        let perr = |line: usize, msg: String| DcsError::Parse { line, msg };
        let ids = |line: usize, body: &str| {
            body.split_whitespace()
                .map(|t| {
                    t.parse::<usize>()
                        .map_err(|_| perr(line, format!("bad word id `{t}`")))
                })
                .collect::<Result<Vec<_>, _>>()
        };
        let mut per_topic = Vec::new();
        let mut union = None;
        let mut threshold = None;
        for (i, line) in text.lines().enumerate() {
            let ln = i + 1;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(rest) = line.strip_prefix("topic ") {
                let (n, body) = rest
                    .split_once(':')
                    .ok_or_else(|| perr(ln, "expected `topic <n>: ...`".into()))?;
                if n.trim().parse::<usize>().ok() != Some(per_topic.len()) {
                    return Err(perr(ln, format!("expected topic {}", per_topic.len())));
                }
                per_topic.push(ids(ln, body)?);
            } else if let Some(body) = line.strip_prefix("union:") {
                union = Some(ids(ln, body)?);
            } else if let Some(body) = line.strip_prefix("threshold:") {
                threshold = Some(
                    body.trim()
                        .parse::<u64>()
                        .map_err(|_| perr(ln, format!("bad threshold `{}`", body.trim())))?,
                );
            } else {
                return Err(perr(ln, format!("unrecognized line `{line}`")));
            }
        }
        let last = text.lines().count();
        let ds = Self {
            per_topic,
            union: union.ok_or_else(|| perr(last, "missing `union:` line".into()))?,
            threshold: threshold.ok_or_else(|| perr(last, "missing `threshold:` line".into()))?,
        };
        let expected: BTreeSet<usize> = ds.per_topic.iter().flatten().copied().collect();
        if !ds.union.iter().copied().eq(expected) {
            return Err(DcsError::Input(
                "union does not match per-topic sets".into(),
            ));
        }
        Ok(ds)
    }
}

pub fn select_dominant(tc: &TopicCodewords, threshold: u64) -> Result<DominantSet, DcsError> {
    if threshold == 0 {
        return Err(DcsError::Input("threshold must be at least 1".into()));
    }
    let per_topic: Vec<Vec<usize>> = tc
        .frequency
        .iter()
        .map(|row| {
            row.iter()
                .enumerate()
                .filter(|(_, &f)| f >= threshold)
                .map(|(w, _)| w)
                .collect()
        })
        .collect();
    let union: Vec<usize> = per_topic
        .iter()
        .flatten()
        .copied()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if union.is_empty() {
        let max_frequency = tc.frequency.iter().flatten().copied().max().unwrap_or(0);
        return Err(DcsError::Degenerate {
            threshold,
            max_frequency,
        });
    }
    Ok(DominantSet {
        per_topic,
        union,
        threshold,
    })
}

/// Ascending union of the per-topic dominant sets.
pub fn union_dominant(ds: &DominantSet) -> Result<Vec<usize>, DcsError> {
    let union: BTreeSet<usize> = ds.per_topic.iter().flatten().copied().collect();
    if union.is_empty() {
        return Err(DcsError::Degenerate {
            threshold: ds.threshold,
            max_frequency: 0,
        });
    }
    Ok(union.into_iter().collect())
}

/// Counts of `v` at the words of `index_set`, unnormalized.
pub fn project(v: &ActionDescriptorVector, index_set: &[usize]) -> Result<Vec<f64>, DcsError> {
    if index_set.is_empty() {
        return Err(DcsError::Input("empty index set".into()));
    }
    index_set
        .iter()
        .map(|&w| {
            v.counts.get(w).map(|&c| f64::from(c)).ok_or_else(|| {
                DcsError::Input(format!(
                    "word id {w} out of range for {} words",
                    v.counts.len()
                ))
            })
        })
        .collect()
}

/// Joins one video's per-view vectors. `per_view` must hold views
/// `0..num_views` exactly once, in ascending order.
pub fn multiview_concat(
    video_id: &str,
    per_view: &[(usize, Vec<f64>)],
    num_views: usize,
) -> Result<Vec<f64>, DcsError> {
    for view in 0..num_views {
        match per_view.get(view) {
            Some((v, _)) if *v == view => {}
            _ => {
                return Err(DcsError::Input(format!(
                    "video {video_id} is missing view {view}"
                )))
            }
        }
    }
    if per_view.len() != num_views {
        return Err(DcsError::Input(format!(
            "video {video_id} has {} views, expected {num_views}",
            per_view.len()
        )));
    }
    Ok(per_view
        .iter()
        .flat_map(|(_, v)| v.iter().copied())
        .collect())
}

/// LDA plus dominant selection on one view's training vectors.
#[derive(Debug, Clone)]
pub struct ViewSelection {
    pub model: TopicModel,
    pub dominant: DominantSet,
}

pub fn fit_view_selection(
    train: &Corpus,
    cfg: &LdaConfig,
    fraction: f64,
) -> Result<ViewSelection, DcsError> {
    let model = fit_gibbs(train, cfg)?;
    let threshold = compute_threshold(train.len(), fraction);
    let dominant = select_dominant(&topic_codewords(&model), threshold)?;
    Ok(ViewSelection { model, dominant })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lda::LdaConfig;
    use proptest::prelude::*;

    fn tc(rows: &[&[u64]]) -> TopicCodewords {
        TopicCodewords {
            frequency: rows.iter().map(|r| r.to_vec()).collect(),
        }
    }

    #[test]
    fn threshold_examples() {
        assert_eq!(compute_threshold(5000, 0.01), 50);
        assert_eq!(compute_threshold(1, 0.01), 1);
        assert_eq!(compute_threshold(250, 0.01), 3);
        assert_eq!(compute_threshold(300, 0.01), 3);
        assert_eq!(compute_threshold(301, 0.01), 4);
        assert_eq!(compute_threshold(0, 0.01), 1);
        for n in 1..2000 {
            let t = compute_threshold(n, 0.01);
            assert_eq!(t, (n as u64).div_ceil(100).max(1), "n={n}");
        }
    }

    #[test]
    fn worked_example_topic_one() {
        // vw1:60, vw3:10, vw5:55 with threshold 50
        let t = tc(&[&[0, 60, 0, 10, 0, 55, 0, 0]]);
        let ds = select_dominant(&t, 50).unwrap();
        assert_eq!(ds.per_topic[0], vec![1, 5]);
    }

    #[test]
    fn threshold_one_keeps_support() {
        let t = tc(&[&[0, 2, 1, 0], &[3, 0, 0, 1]]);
        let ds = select_dominant(&t, 1).unwrap();
        assert_eq!(ds.per_topic, vec![vec![1, 2], vec![0, 3]]);
        assert_eq!(ds.union, vec![0, 1, 2, 3]);
    }

    #[test]
    fn threshold_above_max_is_degenerate() {
        let t = tc(&[&[0, 2, 1], &[3, 0, 0]]);
        assert!(matches!(
            select_dominant(&t, 4),
            Err(DcsError::Degenerate {
                threshold: 4,
                max_frequency: 3
            })
        ));
        assert!(select_dominant(&t, 0).is_err());
    }

    #[test]
    fn union_examples() {
        let mk = |sets: Vec<Vec<usize>>| DominantSet {
            per_topic: sets,
            union: vec![],
            threshold: 1,
        };
        assert_eq!(
            union_dominant(&mk(vec![vec![1, 5], vec![1, 2, 7], vec![7]])).unwrap(),
            vec![1, 2, 5, 7]
        );
        assert_eq!(
            union_dominant(&mk(vec![vec![0], vec![1], vec![2]])).unwrap(),
            vec![0, 1, 2]
        );
        assert_eq!(
            union_dominant(&mk(vec![vec![3, 4], vec![3, 4]])).unwrap(),
            vec![3, 4]
        );
        assert!(union_dominant(&mk(vec![vec![], vec![]])).is_err());
    }

    #[test]
    fn project_examples() {
        let v = ActionDescriptorVector {
            video_id: "v".into(),
            view_id: 0,
            label: 0,
            counts: vec![5, 0, 2, 7],
        };
        assert_eq!(project(&v, &[0, 3]).unwrap(), vec![5.0, 7.0]);
        assert_eq!(
            project(&v, &[0, 1, 2, 3]).unwrap(),
            vec![5.0, 0.0, 2.0, 7.0]
        );
        assert!(project(&v, &[]).is_err());
        assert!(project(&v, &[4]).is_err());
    }

    #[test]
    fn multiview_examples() {
        let dims = [6371, 8157, 4936, 9447];
        let views: Vec<(usize, Vec<f64>)> = dims
            .iter()
            .enumerate()
            .map(|(i, &d)| (i, vec![1.0; d]))
            .collect();
        assert_eq!(multiview_concat("v", &views, 4).unwrap().len(), 28911);

        let single = vec![(0, vec![1.0, 2.0])];
        assert_eq!(multiview_concat("v", &single, 1).unwrap(), vec![1.0, 2.0]);

        let gap = vec![(0, vec![1.0]), (2, vec![2.0])];
        let err = multiview_concat("clip7", &gap, 3).unwrap_err().to_string();
        assert!(err.contains("clip7") && err.contains("view 1"), "{err}");
        assert!(multiview_concat("v", &single, 2).is_err());
    }

    #[test]
    fn dominant_set_text_round_trip() {
        let ds = select_dominant(&tc(&[&[0, 60, 0, 10, 0, 55], &[9, 70, 0, 0, 0, 0]]), 50).unwrap();
        let text = ds.to_text();
        assert_eq!(
            text,
            "topic 0: 1 5\ntopic 1: 1\nunion: 1 5\nthreshold: 50\n"
        );
        assert_eq!(DominantSet::parse(&text).unwrap(), ds);
        assert!(DominantSet::parse("topic 0: 1\nunion: 2\nthreshold: 1\n").is_err());
    }

    #[test]
    fn topic_codewords_mirror_model_counts() {
        use crate::corpus::{synth_corpus, SynthSpec};
        let (c, _) = synth_corpus(&SynthSpec {
            num_docs: 20,
            ..SynthSpec::default()
        })
        .unwrap();
        let cfg = LdaConfig::new(4).with_iterations(10).with_seed(2);
        let m = fit_gibbs(&c, &cfg).unwrap();
        let t = topic_codewords(&m);
        let totals = c.word_totals();
        for w in 0..c.num_words {
            assert_eq!(t.frequency.iter().map(|r| r[w]).sum::<u64>(), totals[w]);
        }
        assert_eq!(t, topic_codewords(&fit_gibbs(&c, &cfg).unwrap()));
    }

    proptest! {
        #[test]
        fn raising_threshold_never_grows_selection(
            rows in proptest::collection::vec(proptest::collection::vec(0u64..40, 12), 1..5),
        ) {
            let t = TopicCodewords { frequency: rows };
            let mut prev: Option<DominantSet> = None;
            for th in 1..45 {
                let Ok(ds) = select_dominant(&t, th) else { break };
                if let Some(p) = &prev {
                    prop_assert!(ds.union.iter().all(|w| p.union.contains(w)));
                    for (a, b) in ds.per_topic.iter().zip(&p.per_topic) {
                        prop_assert!(a.iter().all(|w| b.contains(w)));
                    }
                }
                for (n, words) in ds.per_topic.iter().enumerate() {
                    prop_assert!(words.iter().all(|&w| t.frequency[n][w] >= th));
                }
                prop_assert!(ds.union.windows(2).all(|w| w[0] < w[1]));
                prev = Some(ds);
            }
        }
    }
}
