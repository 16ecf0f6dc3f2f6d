//! Visual-word codebooks: k-means++ seeding with Lloyd refinement, nearest
//! centroid assignment and BoW counting.

use std::fmt::Write as _;
use std::path::Path;

use rand::Rng as _;
use rayon::prelude::*;
use thiserror::Error;

use crate::rng::{self, inverse_cdf};

/// Codebook size used for every descriptor type in the reference pipeline.
pub const DEFAULT_WORDS: usize = 4000;
pub const MAX_LLOYD_ITERATIONS: usize = 100;

#[derive(Debug, Error)]
pub enum QuantizeError {
    #[error("invalid input: {0}")]
    Input(String),
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
pub struct Codebook {
    centroids: Vec<Vec<f64>>,
    feature_dim: usize,
}

impl Codebook {
    pub fn new(centroids: Vec<Vec<f64>>) -> Result<Self, QuantizeError> {
        let feature_dim = centroids
            .first()
            .map(Vec::len)
            .ok_or_else(|| QuantizeError::Input("codebook needs at least one centroid".into()))?;
        if centroids.iter().any(|c| c.len() != feature_dim) {
            return Err(QuantizeError::Input("centroids differ in dimension".into()));
        }
        Ok(Self {
            centroids,
            feature_dim,
        })
    }

    pub fn k(&self) -> usize {
        self.centroids.len()
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    pub fn centroids(&self) -> &[Vec<f64>] {
        &self.centroids
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("codebook {} {}\n", self.k(), self.feature_dim);
        for c in &self.centroids {
            let row: Vec<String> = c.iter().map(f64::to_string).collect();
            let _ = writeln!(s, "{}", row.join(" "));
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self, QuantizeError> {
        let perr = |line: usize, msg: String| QuantizeError::Parse { line, msg };
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'));
        let (hline, header) = lines
            .next()
            .ok_or_else(|| perr(1, "missing `codebook <k> <dim>` header".into()))?;
        let parts: Vec<&str> = header.split_whitespace().collect();
        let (k, dim) = match parts.as_slice() {
            ["codebook", k, d] => (
                k.parse::<usize>()
                    .map_err(|_| perr(hline + 1, format!("bad k `{k}`")))?,
                d.parse::<usize>()
                    .map_err(|_| perr(hline + 1, format!("bad dim `{d}`")))?,
            ),
            _ => {
                return Err(perr(
                    hline + 1,
                    "missing `codebook <k> <dim>` header".into(),
                ))
            }
        };
        let mut centroids = Vec::with_capacity(k);
        for (i, line) in lines {
            let row = line
                .split_whitespace()
                .map(|t| {
                    t.parse::<f64>()
                        .map_err(|_| perr(i + 1, format!("bad number `{t}`")))
                })
                .collect::<Result<Vec<_>, _>>()?;
            if row.len() != dim {
                return Err(perr(
                    i + 1,
                    format!("expected {dim} values, found {}", row.len()),
                ));
            }
            centroids.push(row);
        }
        if centroids.len() != k {
            return Err(perr(
                text.lines().count(),
                format!("expected {k} centroids, found {}", centroids.len()),
            ));
        }
        Self::new(centroids)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, QuantizeError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| QuantizeError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(point: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, c) in centroids.iter().enumerate() {
        let d = sq_dist(point, c);
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

/// Index of the nearest centroid; ties go to the lowest index.
pub fn assign(point: &[f64], cb: &Codebook) -> Result<usize, QuantizeError> {
    if point.len() != cb.feature_dim {
        return Err(QuantizeError::Input(format!(
            "point has dimension {}, codebook expects {}",
            point.len(),
            cb.feature_dim
        )));
    }
    Ok(nearest(point, &cb.centroids).0)
}

pub fn bow(assignments: &[usize], num_words: usize) -> Result<Vec<u32>, QuantizeError> {
    let mut counts = vec![0u32; num_words];
    for &w in assignments {
        *counts.get_mut(w).ok_or_else(|| {
            QuantizeError::Input(format!("word id {w} out of range for {num_words} words"))
        })? += 1;
    }
    Ok(counts)
}

#[derive(Debug, Clone)]
pub struct KMeansFit {
    pub codebook: Codebook,
    /// Sum of squared distances to assigned centroids after each update step.
    pub distortions: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

fn plus_plus_seeds(points: &[Vec<f64>], k: usize, rng: &mut rng::Rng) -> Vec<Vec<f64>> {
    let mut centroids = vec![points[rng.random_range(0..points.len())].clone()];
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &centroids[0])).collect();
    while centroids.len() < k {
        let u: f64 = rng.random();
        let pick = if d2.iter().sum::<f64>() > 0.0 {
            inverse_cdf(&d2, u)
        } else {
            rng.random_range(0..points.len())
        };
        let c = points[pick].clone();
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min(sq_dist(p, &c));
        }
        centroids.push(c);
    }
    centroids
}

pub fn fit_codebook(points: &[Vec<f64>], k: usize, seed: u64) -> Result<Codebook, QuantizeError> {
    fit_codebook_report(points, k, seed).map(|f| f.codebook)
}

/// k-means++ seeding, then Lloyd iterations until the assignment stops
/// changing or `MAX_LLOYD_ITERATIONS` is reached. Empty clusters move to the
/// point farthest from its own centroid.
pub fn fit_codebook_report(
    points: &[Vec<f64>],
    k: usize,
    seed: u64,
) -> Result<KMeansFit, QuantizeError> {
    if k == 0 {
        return Err(QuantizeError::Input("k must be at least 1".into()));
    }
    if points.len() < k {
        return Err(QuantizeError::Input(format!(
            "{} points cannot seed {k} codewords",
            points.len()
        )));
    }
    let dim = points[0].len();
    if points.iter().any(|p| p.len() != dim) {
        return Err(QuantizeError::Input("points differ in dimension".into()));
    }
    let mut rng = rng::seeded(seed);
    let mut centroids = plus_plus_seeds(points, k, &mut rng);
    let mut prev: Option<Vec<usize>> = None;
    let mut distortions = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    while iterations < MAX_LLOYD_ITERATIONS {
        let labels: Vec<usize> = points
            .par_iter()
            .map(|p| nearest(p, &centroids).0)
            .collect();
        if prev.as_ref() == Some(&labels) {
            converged = true;
            break;
        }
        iterations += 1;

        let mut sums = vec![vec![0.0; dim]; k];
        let mut sizes = vec![0usize; k];
        for (p, &l) in points.iter().zip(&labels) {
            sizes[l] += 1;
            for (s, x) in sums[l].iter_mut().zip(p) {
                *s += x;
            }
        }
        for ((c, s), &n) in centroids.iter_mut().zip(sums).zip(&sizes) {
            if n > 0 {
                *c = s.into_iter().map(|v| v / n as f64).collect();
            }
        }
        let mut dists: Vec<f64> = points
            .iter()
            .zip(&labels)
            .map(|(p, &l)| sq_dist(p, &centroids[l]))
            .collect();
        for empty in (0..k).filter(|&c| sizes[c] == 0) {
            let mut far = 0;
            for (i, &d) in dists.iter().enumerate() {
                if d > dists[far] {
                    far = i;
                }
            }
            centroids[empty] = points[far].clone();
            // the reseeded point no longer counts as far for the next empty cluster
            dists[far] = f64::NEG_INFINITY;
        }
        distortions.push(
            points
                .iter()
                .zip(&labels)
                .map(|(p, &l)| sq_dist(p, &centroids[l]))
                .sum(),
        );
        prev = Some(labels);
    }
    Ok(KMeansFit {
        codebook: Codebook::new(centroids)?,
        distortions,
        iterations,
        converged,
    })
}
