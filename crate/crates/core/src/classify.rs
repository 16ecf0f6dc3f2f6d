//! Classification and evaluation: one-vs-rest linear SVMs trained by dual
//! coordinate descent, a PCA baseline on a cyclic Jacobi eigensolver,
//! cross-validation splitters and the fold-level evaluation harness.

use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use thiserror::Error;

use crate::corpus::{Corpus, CorpusError};
use crate::dcs::{fit_view_selection, project, DcsError, DominantSet, DEFAULT_THRESHOLD_FRACTION};
use crate::lda::{LdaConfig, DEFAULT_ALPHA, DEFAULT_BETA, DEFAULT_ITERATIONS};
use crate::rng::{self, derive_seed};

pub const DEFAULT_COST: f64 = 10.0;
pub const DEFAULT_EPOCHS: usize = 200;
pub const JACOBI_TOLERANCE: f64 = 1e-10;
const JACOBI_MAX_SWEEPS: usize = 100;

#[derive(Debug, Error)]
pub enum ClassifyError {
    #[error("invalid input: {0}")]
    Input(String),
    #[error("every fold hit a degenerate selection: {0}")]
    AllDegenerate(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Dcs(#[from] DcsError),
}

fn input(msg: impl Into<String>) -> ClassifyError {
    ClassifyError::Input(msg.into())
}

/// Feature map applied to every vector before it reaches the SVM.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureTransform {
    /// L1-normalize, then element-wise square root. Needs non-negative input.
    Hellinger,
    Identity,
}

impl FeatureTransform {
    pub fn apply(self, v: &[f64]) -> Result<Vec<f64>, ClassifyError> {
        match self {
            Self::Identity => Ok(v.to_vec()),
            Self::Hellinger => hellinger(v),
        }
    }
}

pub fn hellinger(v: &[f64]) -> Result<Vec<f64>, ClassifyError> {
    if v.iter().any(|&x| x < 0.0 || !x.is_finite()) {
        return Err(input("Hellinger map needs finite non-negative entries"));
    }
    let l1: f64 = v.iter().sum();
    if l1 == 0.0 {
        return Ok(vec![0.0; v.len()]);
    }
    Ok(v.iter().map(|x| (x / l1).sqrt()).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvmParams {
    pub cost: f64,
    pub epochs: usize,
    pub transform: FeatureTransform,
}

impl Default for SvmParams {
    fn default() -> Self {
        Self {
            cost: DEFAULT_COST,
            epochs: DEFAULT_EPOCHS,
            transform: FeatureTransform::Hellinger,
        }
    }
}

/// One hinge-loss machine per class; the bias is the weight of a constant
/// feature 1 appended to every input (so it is regularized too).
#[derive(Debug, Clone, PartialEq)]
pub struct SvmModel {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<f64>,
    pub transform: FeatureTransform,
}

impl SvmModel {
    pub fn num_classes(&self) -> usize {
        self.weights.len()
    }

    pub fn dimension(&self) -> usize {
        self.weights.first().map_or(0, Vec::len)
    }

    pub fn decision_values(&self, v: &[f64]) -> Result<Vec<f64>, ClassifyError> {
        if v.len() != self.dimension() {
            return Err(input(format!(
                "vector has dimension {}, model expects {}",
                v.len(),
                self.dimension()
            )));
        }
        let x = self.transform.apply(v)?;
        Ok(self
            .weights
            .iter()
            .zip(&self.biases)
            .map(|(w, b)| w.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>() + b)
            .collect())
    }
}

struct SparseRow {
    idx: Vec<usize>,
    val: Vec<f64>,
    /// ||x||^2 + 1 for the bias feature
    q_diag: f64,
}

/// Dual coordinate descent for one L2-regularized hinge-loss machine:
/// fixed epoch count, indices visited in order 0..l every epoch.
fn train_binary(
    rows: &[SparseRow],
    y: &[f64],
    dim: usize,
    cost: f64,
    epochs: usize,
) -> (Vec<f64>, f64) {
    let mut w = vec![0.0; dim];
    let mut b = 0.0;
    let mut alpha = vec![0.0; rows.len()];
    for _ in 0..epochs {
        for (i, row) in rows.iter().enumerate() {
            let margin: f64 = row
                .idx
                .iter()
                .zip(&row.val)
                .map(|(&j, &x)| w[j] * x)
                .sum::<f64>()
                + b;
            let g = y[i] * margin - 1.0;
            let pg = if alpha[i] == 0.0 {
                g.min(0.0)
            } else if alpha[i] == cost {
                g.max(0.0)
            } else {
                g
            };
            if pg.abs() > 1e-12 {
                let old = alpha[i];
                alpha[i] = (old - g / row.q_diag).clamp(0.0, cost);
                let step = (alpha[i] - old) * y[i];
                for (&j, &x) in row.idx.iter().zip(&row.val) {
                    w[j] += step * x;
                }
                b += step;
            }
        }
    }
    (w, b)
}

/// One-vs-rest linear SVM over classes `0..=max(label)`.
pub fn train_svm(
    vectors: &[Vec<f64>],
    labels: &[usize],
    params: &SvmParams,
) -> Result<SvmModel, ClassifyError> {
    if vectors.len() != labels.len() {
        return Err(input("vector and label counts differ"));
    }
    let Some(dim) = vectors.first().map(Vec::len) else {
        return Err(input("no training vectors"));
    };
    if vectors.iter().any(|v| v.len() != dim) {
        return Err(input("training vectors differ in dimension"));
    }
    let mut present: Vec<usize> = labels.to_vec();
    present.sort_unstable();
    present.dedup();
    if present.len() < 2 {
        return Err(input("training data needs at least two classes"));
    }
    if params.cost.is_nan() || params.cost <= 0.0 || params.epochs == 0 {
        return Err(input("cost and epochs must be positive"));
    }
    let num_classes = present[present.len() - 1] + 1;
    let rows = vectors
        .iter()
        .map(|v| {
            let x = params.transform.apply(v)?;
            let (idx, val): (Vec<usize>, Vec<f64>) = x
                .iter()
                .enumerate()
                .filter(|(_, &v)| v != 0.0)
                .map(|(i, &v)| (i, v))
                .unzip();
            let q_diag = val.iter().map(|v| v * v).sum::<f64>() + 1.0;
            Ok(SparseRow { idx, val, q_diag })
        })
        .collect::<Result<Vec<_>, ClassifyError>>()?;
    let (weights, biases) = (0..num_classes)
        .into_par_iter()
        .map(|c| {
            let y: Vec<f64> = labels
                .iter()
                .map(|&l| if l == c { 1.0 } else { -1.0 })
                .collect();
            train_binary(&rows, &y, dim, params.cost, params.epochs)
        })
        .collect::<Vec<_>>()
        .into_iter()
        .unzip();
    Ok(SvmModel {
        weights,
        biases,
        transform: params.transform,
    })
}

/// Class with the largest decision value; ties go to the lowest class id.
pub fn predict(model: &SvmModel, v: &[f64]) -> Result<usize, ClassifyError> {
    let scores = model.decision_values(v)?;
    let mut best = 0;
    for (c, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = c;
        }
    }
    Ok(best)
}

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Returns eigenvalues and eigenvectors (as rows) in descending eigenvalue
/// order; each eigenvector's largest-magnitude entry is positive.
#[allow(clippy::needless_range_loop)]
pub fn symmetric_eigen(matrix: &[Vec<f64>]) -> Result<(Vec<f64>, Vec<Vec<f64>>), ClassifyError> {
    let n = matrix.len();
    if matrix.iter().any(|r| r.len() != n) {
        return Err(input("matrix is not square"));
    }
    let mut a: Vec<Vec<f64>> = matrix.to_vec();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| f64::from(u8::from(i == j))).collect())
        .collect();
    let frob: f64 = a.iter().flatten().map(|x| x * x).sum::<f64>().sqrt();
    for _ in 0..JACOBI_MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|p| ((p + 1)..n).map(move |q| (p, q)))
            .map(|(p, q)| 2.0 * a[p][q] * a[p][q])
            .sum::<f64>()
            .sqrt();
        if off <= JACOBI_TOLERANCE * frob || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p][q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let (vkp, vkq) = (row[p], row[q]);
                    row[p] = c * vkp - s * vkq;
                    row[q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[j][j].total_cmp(&a[i][i]).then(i.cmp(&j)));
    let values = order.iter().map(|&i| a[i][i]).collect();
    let vectors = order
        .iter()
        .map(|&i| {
            let mut col: Vec<f64> = v.iter().map(|row| row[i]).collect();
            fix_sign(&mut col);
            col
        })
        .collect();
    Ok((values, vectors))
}

fn fix_sign(v: &mut [f64]) {
    let mut big = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[big].abs() {
            big = i;
        }
    }
    if v[big] < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

fn normalize(v: &mut [f64]) {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
}

/// A fitted PCA: centering mean and the leading principal axes.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaProjection {
    pub mean: Vec<f64>,
    /// `dims` orthonormal rows of length D, by descending eigenvalue.
    pub basis: Vec<Vec<f64>>,
    /// Covariance eigenvalues matching `basis`.
    pub eigenvalues: Vec<f64>,
    /// Trace of the covariance matrix.
    pub total_variance: f64,
}

impl PcaProjection {
    pub fn project(&self, v: &[f64]) -> Vec<f64> {
        self.basis
            .iter()
            .map(|b| {
                b.iter()
                    .zip(v)
                    .zip(&self.mean)
                    .map(|((b, x), m)| b * (x - m))
                    .sum()
            })
            .collect()
    }

    pub fn reconstruct(&self, coords: &[f64]) -> Vec<f64> {
        let mut out = self.mean.clone();
        for (b, c) in self.basis.iter().zip(coords) {
            for (o, x) in out.iter_mut().zip(b) {
                *o += c * x;
            }
        }
        out
    }

    pub fn explained_ratio(&self) -> f64 {
        if self.total_variance == 0.0 {
            return 1.0;
        }
        self.eigenvalues.iter().sum::<f64>() / self.total_variance
    }
}

/// Which matrix the eigensolver sees. The Gram route decomposes the N x N
/// matrix of centered inner products and maps its eigenvectors back, which
/// gives the same principal axes when N is much smaller than D.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PcaRoute {
    Covariance,
    Gram,
}

pub fn pca_reduce(
    vectors: &[Vec<f64>],
    dims: usize,
) -> Result<(Vec<Vec<f64>>, PcaProjection), ClassifyError> {
    let n = vectors.len();
    let d = vectors.first().map_or(0, Vec::len);
    let route = if d <= n || dims >= n {
        PcaRoute::Covariance
    } else {
        PcaRoute::Gram
    };
    pca_reduce_with(vectors, dims, route)
}

#[allow(clippy::needless_range_loop)]
pub fn pca_reduce_with(
    vectors: &[Vec<f64>],
    dims: usize,
    route: PcaRoute,
) -> Result<(Vec<Vec<f64>>, PcaProjection), ClassifyError> {
    let n = vectors.len();
    if n < 2 {
        return Err(input("PCA needs at least two vectors"));
    }
    let d = vectors[0].len();
    if vectors.iter().any(|v| v.len() != d) {
        return Err(input("vectors differ in dimension"));
    }
    if dims == 0 || dims > d {
        return Err(input(format!("cannot keep {dims} of {d} dimensions")));
    }
    if route == PcaRoute::Gram && dims >= n {
        return Err(input("Gram route yields at most N-1 components"));
    }
    let mut mean = vec![0.0; d];
    for v in vectors {
        for (m, x) in mean.iter_mut().zip(v) {
            *m += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let centered: Vec<Vec<f64>> = vectors
        .iter()
        .map(|v| v.iter().zip(&mean).map(|(x, m)| x - m).collect())
        .collect();
    let denom = (n - 1) as f64;

    let (eigenvalues, basis) = match route {
        PcaRoute::Covariance => {
            let mut cov = vec![vec![0.0; d]; d];
            for row in &centered {
                for i in 0..d {
                    if row[i] == 0.0 {
                        continue;
                    }
                    for j in i..d {
                        cov[i][j] += row[i] * row[j];
                    }
                }
            }
            for i in 0..d {
                for j in i..d {
                    cov[i][j] /= denom;
                    cov[j][i] = cov[i][j];
                }
            }
            let (vals, vecs) = symmetric_eigen(&cov)?;
            (vals[..dims].to_vec(), vecs[..dims].to_vec())
        }
        PcaRoute::Gram => {
            let gram: Vec<Vec<f64>> = centered
                .iter()
                .map(|a| {
                    centered
                        .iter()
                        .map(|b| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() / denom)
                        .collect()
                })
                .collect();
            let (vals, vecs) = symmetric_eigen(&gram)?;
            let basis = vecs[..dims]
                .iter()
                .map(|u| {
                    let mut axis = vec![0.0; d];
                    for (row, &ui) in centered.iter().zip(u) {
                        for (a, x) in axis.iter_mut().zip(row) {
                            *a += ui * x;
                        }
                    }
                    normalize(&mut axis);
                    fix_sign(&mut axis);
                    axis
                })
                .collect();
            (vals[..dims].to_vec(), basis)
        }
    };
    let total_variance = centered.iter().flatten().map(|x| x * x).sum::<f64>() / denom;
    let pca = PcaProjection {
        mean,
        basis,
        eigenvalues,
        total_variance,
    };
    let projected = vectors.iter().map(|v| pca.project(v)).collect();
    Ok((projected, pca))
}

/// Seeded permutation of `0..n` cut into `k` folds whose sizes differ by at
/// most one (the first `n % k` folds get the extra index). Each fold is sorted.
pub fn kfold_split(n: usize, k: usize, seed: u64) -> Result<Vec<Vec<usize>>, ClassifyError> {
    if k == 0 || k > n {
        return Err(input(format!("cannot cut {n} items into {k} folds")));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng::seeded(seed));
    let (base, extra) = (n / k, n % k);
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for f in 0..k {
        let len = base + usize::from(f < extra);
        let mut fold = perm[start..start + len].to_vec();
        fold.sort_unstable();
        folds.push(fold);
        start += len;
    }
    Ok(folds)
}

/// One fold per distinct group, in ascending group order.
pub fn leave_one_group_out<G: Ord + Clone>(
    groups: &[G],
) -> Result<Vec<(G, Vec<usize>)>, ClassifyError> {
    let mut map: std::collections::BTreeMap<G, Vec<usize>> = Default::default();
    for (i, g) in groups.iter().enumerate() {
        map.entry(g.clone()).or_default().push(i);
    }
    if map.len() < 2 {
        return Err(input("leave-one-group-out needs at least two groups"));
    }
    Ok(map.into_iter().collect())
}

/// Person/group key of a video id: the text before the first `:`, or the
/// whole id when there is none.
pub fn group_of(video_id: &str) -> &str {
    video_id.split_once(':').map_or(video_id, |(g, _)| g)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Arm {
    Raw,
    Pca(usize),
    Dcs,
}

impl fmt::Display for Arm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Arm::Raw => write!(f, "raw"),
            Arm::Pca(d) => write!(f, "pca:{d}"),
            Arm::Dcs => write!(f, "dcs"),
        }
    }
}

impl FromStr for Arm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "raw" => Ok(Arm::Raw),
            "dcs" => Ok(Arm::Dcs),
            _ => match s.strip_prefix("pca:").map(str::parse::<usize>) {
                Some(Ok(d)) if d > 0 => Ok(Arm::Pca(d)),
                _ => Err(format!(
                    "unknown arm `{s}` (expected raw, pca:<dims> or dcs)"
                )),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FoldSpec {
    KFold(usize),
    LeaveOneGroupOut,
}

impl fmt::Display for FoldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FoldSpec::KFold(k) => write!(f, "kfold:{k}"),
            FoldSpec::LeaveOneGroupOut => write!(f, "logo"),
        }
    }
}

impl FromStr for FoldSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "logo" {
            return Ok(FoldSpec::LeaveOneGroupOut);
        }
        match s.strip_prefix("kfold:").map(str::parse::<usize>) {
            Some(Ok(k)) if k >= 2 => Ok(FoldSpec::KFold(k)),
            _ => Err(format!(
                "unknown folds `{s}` (expected kfold:<k>=2..> or logo)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOptions {
    pub arm: Arm,
    pub folds: FoldSpec,
    /// Defaults to the corpus class count.
    pub num_topics: Option<usize>,
    pub alpha: f64,
    pub beta: f64,
    pub iterations: usize,
    pub threshold_fraction: f64,
    pub cost: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        Self {
            arm: Arm::Dcs,
            folds: FoldSpec::KFold(5),
            num_topics: None,
            alpha: DEFAULT_ALPHA,
            beta: DEFAULT_BETA,
            iterations: DEFAULT_ITERATIONS,
            threshold_fraction: DEFAULT_THRESHOLD_FRACTION,
            cost: DEFAULT_COST,
            epochs: DEFAULT_EPOCHS,
            seed: 0,
        }
    }
}

impl PipelineOptions {
    pub fn topics_for(&self, corpus: &Corpus) -> usize {
        self.num_topics.unwrap_or(corpus.num_classes)
    }

    fn svm_params(&self) -> SvmParams {
        SvmParams {
            cost: self.cost,
            epochs: self.epochs,
            transform: match self.arm {
                Arm::Pca(_) => FeatureTransform::Identity,
                _ => FeatureTransform::Hellinger,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FoldResult {
    pub fold: usize,
    pub train_size: usize,
    pub test_size: usize,
    /// `None` when the fold hit a degenerate selection.
    pub accuracy: Option<f64>,
    pub retained_dims: Option<usize>,
    pub degenerate: Option<String>,
    pub confusion: Vec<Vec<u64>>,
    /// Per-view dominant sets (dcs arm only).
    pub dominant: Vec<DominantSet>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub arm: Arm,
    pub num_topics: usize,
    /// Pooled over non-degenerate folds: trace / total of `confusion`.
    pub accuracy: f64,
    pub mean_fold_accuracy: f64,
    /// `confusion[actual][predicted]`.
    pub confusion: Vec<Vec<u64>>,
    /// Mean over non-degenerate folds, rounded.
    pub retained_dims: usize,
    pub total_dims: usize,
    pub folds: Vec<FoldResult>,
}

impl EvalReport {
    pub fn fold_accuracies(&self) -> Vec<f64> {
        self.folds.iter().filter_map(|f| f.accuracy).collect()
    }

    /// `pipeline,fold,accuracy,retained_dims,total_dims` rows followed by a
    /// confusion block (`confusion,<pipeline>,<actual>,<counts...>`).
    pub fn to_csv(&self) -> String {
        let mut s = String::from("pipeline,fold,accuracy,retained_dims,total_dims\n");
        for f in &self.folds {
            match (f.accuracy, f.retained_dims) {
                (Some(a), Some(r)) => {
                    let _ = writeln!(s, "{},{},{a},{r},{}", self.arm, f.fold, self.total_dims);
                }
                _ => {
                    let _ = writeln!(s, "{},{},NA,NA,{}", self.arm, f.fold, self.total_dims);
                }
            }
        }
        let _ = writeln!(
            s,
            "{},mean,{},{},{}",
            self.arm, self.mean_fold_accuracy, self.retained_dims, self.total_dims
        );
        let _ = writeln!(
            s,
            "# confusion pipeline={} rows=actual cols=predicted",
            self.arm
        );
        for (actual, row) in self.confusion.iter().enumerate() {
            let cells: Vec<String> = row.iter().map(u64::to_string).collect();
            let _ = writeln!(s, "confusion,{},{actual},{}", self.arm, cells.join(","));
        }
        s
    }
}

struct Unit {
    label: usize,
    rows: Vec<usize>,
}

fn units(corpus: &Corpus) -> Result<(Vec<Unit>, Vec<String>), ClassifyError> {
    let videos = corpus.videos()?;
    let mut out = Vec::with_capacity(videos.len());
    let mut ids = Vec::with_capacity(videos.len());
    for v in videos {
        let rows = v
            .rows
            .iter()
            .enumerate()
            .map(|(view, r)| {
                r.ok_or_else(|| input(format!("video {} is missing view {view}", v.video_id)))
            })
            .collect::<Result<Vec<_>, _>>()?;
        out.push(Unit {
            label: v.label,
            rows,
        });
        ids.push(v.video_id);
    }
    Ok((out, ids))
}

/// Test-index folds over the corpus videos.
pub fn make_folds(
    corpus: &Corpus,
    spec: FoldSpec,
    seed: u64,
) -> Result<Vec<Vec<usize>>, ClassifyError> {
    let videos = corpus.videos()?;
    match spec {
        FoldSpec::KFold(k) => kfold_split(videos.len(), k, seed),
        FoldSpec::LeaveOneGroupOut => {
            let groups: Vec<&str> = videos.iter().map(|v| group_of(&v.video_id)).collect();
            Ok(leave_one_group_out(&groups)?
                .into_iter()
                .map(|(_, f)| f)
                .collect())
        }
    }
}

fn raw_features(corpus: &Corpus, unit: &Unit) -> Vec<f64> {
    unit.rows
        .iter()
        .flat_map(|&r| corpus.vectors[r].counts.iter().map(|&c| f64::from(c)))
        .collect()
}

struct Features {
    train: Vec<Vec<f64>>,
    test: Vec<Vec<f64>>,
    retained: usize,
    dominant: Vec<DominantSet>,
}

fn fold_features(
    corpus: &Corpus,
    units: &[Unit],
    train: &[usize],
    test: &[usize],
    fold: usize,
    opts: &PipelineOptions,
) -> Result<Features, ClassifyError> {
    match opts.arm {
        Arm::Raw => Ok(Features {
            train: train
                .iter()
                .map(|&u| raw_features(corpus, &units[u]))
                .collect(),
            test: test
                .iter()
                .map(|&u| raw_features(corpus, &units[u]))
                .collect(),
            retained: corpus.num_words * corpus.num_views,
            dominant: Vec::new(),
        }),
        Arm::Pca(dims) => {
            let map = |u: &usize| hellinger(&raw_features(corpus, &units[*u]));
            let tr = train.iter().map(map).collect::<Result<Vec<_>, _>>()?;
            let te = test.iter().map(map).collect::<Result<Vec<_>, _>>()?;
            let (train_proj, pca) = pca_reduce(&tr, dims)?;
            Ok(Features {
                train: train_proj,
                test: te.iter().map(|v| pca.project(v)).collect(),
                retained: dims,
                dominant: Vec::new(),
            })
        }
        Arm::Dcs => {
            let nt = opts.topics_for(corpus);
            let mut train_feats = vec![Vec::new(); train.len()];
            let mut test_feats = vec![Vec::new(); test.len()];
            let mut dominant = Vec::with_capacity(corpus.num_views);
            for view in 0..corpus.num_views {
                let rows: Vec<usize> = train.iter().map(|&u| units[u].rows[view]).collect();
                let cfg = LdaConfig::new(nt)
                    .with_priors(opts.alpha, opts.beta)
                    .with_iterations(opts.iterations)
                    .with_seed(derive_seed(opts.seed, &[fold as u64, view as u64]));
                let sel = fit_view_selection(&corpus.subset(&rows), &cfg, opts.threshold_fraction)?;
                let index = &sel.dominant.union;
                for (dst, &u) in train_feats.iter_mut().zip(train) {
                    dst.extend(project(&corpus.vectors[units[u].rows[view]], index)?);
                }
                for (dst, &u) in test_feats.iter_mut().zip(test) {
                    dst.extend(project(&corpus.vectors[units[u].rows[view]], index)?);
                }
                dominant.push(sel.dominant);
            }
            Ok(Features {
                retained: train_feats.first().map_or(0, Vec::len),
                train: train_feats,
                test: test_feats,
                dominant,
            })
        }
    }
}

fn run_fold(
    corpus: &Corpus,
    units: &[Unit],
    test: &[usize],
    fold: usize,
    opts: &PipelineOptions,
) -> Result<FoldResult, ClassifyError> {
    let c = corpus.num_classes;
    let in_test: std::collections::HashSet<usize> = test.iter().copied().collect();
    let train: Vec<usize> = (0..units.len()).filter(|u| !in_test.contains(u)).collect();
    let mut result = FoldResult {
        fold,
        train_size: train.len(),
        test_size: test.len(),
        accuracy: None,
        retained_dims: None,
        degenerate: None,
        confusion: vec![vec![0; c]; c],
        dominant: Vec::new(),
    };
    let feats = match fold_features(corpus, units, &train, test, fold, opts) {
        Ok(f) => f,
        Err(ClassifyError::Dcs(e @ DcsError::Degenerate { .. })) => {
            log::warn!("fold {fold}: {e}; excluded from the mean");
            result.degenerate = Some(e.to_string());
            return Ok(result);
        }
        Err(e) => return Err(e),
    };
    let labels: Vec<usize> = train.iter().map(|&u| units[u].label).collect();
    let model = train_svm(&feats.train, &labels, &opts.svm_params())?;
    let mut correct = 0;
    for (x, &u) in feats.test.iter().zip(test) {
        let p = predict(&model, x)?;
        let actual = units[u].label;
        // a class absent from training still has a (never-winning) slot
        result.confusion[actual][p.min(c - 1)] += 1;
        correct += usize::from(p == actual);
    }
    result.accuracy = Some(if test.is_empty() {
        0.0
    } else {
        correct as f64 / test.len() as f64
    });
    result.retained_dims = Some(feats.retained);
    result.dominant = feats.dominant;
    Ok(result)
}

/// Cross-validates the configured arm. All fitting (LDA, selection, PCA,
/// SVM) sees training videos only. Folds run in parallel; results match a
/// sequential run exactly because every fold derives its own seed.
pub fn evaluate(corpus: &Corpus, opts: &PipelineOptions) -> Result<EvalReport, ClassifyError> {
    let folds = make_folds(corpus, opts.folds, opts.seed)?;
    evaluate_folds(corpus, opts, &folds)
}

pub fn evaluate_folds(
    corpus: &Corpus,
    opts: &PipelineOptions,
    folds: &[Vec<usize>],
) -> Result<EvalReport, ClassifyError> {
    if !(opts.threshold_fraction > 0.0 && opts.threshold_fraction < 1.0) {
        return Err(input("threshold fraction must lie in (0, 1)"));
    }
    let (units, _) = units(corpus)?;
    let results = folds
        .par_iter()
        .enumerate()
        .map(|(i, test)| run_fold(corpus, &units, test, i, opts))
        .collect::<Result<Vec<_>, _>>()?;
    summarize(corpus, opts, results)
}

fn summarize(
    corpus: &Corpus,
    opts: &PipelineOptions,
    folds: Vec<FoldResult>,
) -> Result<EvalReport, ClassifyError> {
    let valid: Vec<&FoldResult> = folds.iter().filter(|f| f.accuracy.is_some()).collect();
    if valid.is_empty() {
        let why = folds
            .iter()
            .filter_map(|f| f.degenerate.clone())
            .next()
            .unwrap_or_default();
        return Err(ClassifyError::AllDegenerate(why));
    }
    let c = corpus.num_classes;
    let mut confusion = vec![vec![0u64; c]; c];
    for f in &valid {
        for (row, frow) in confusion.iter_mut().zip(&f.confusion) {
            for (x, y) in row.iter_mut().zip(frow) {
                *x += y;
            }
        }
    }
    let total: u64 = confusion.iter().flatten().sum();
    let trace: u64 = (0..c).map(|i| confusion[i][i]).sum();
    let n = valid.len() as f64;
    Ok(EvalReport {
        arm: opts.arm,
        num_topics: opts.topics_for(corpus),
        accuracy: if total == 0 {
            0.0
        } else {
            trace as f64 / total as f64
        },
        mean_fold_accuracy: valid.iter().filter_map(|f| f.accuracy).sum::<f64>() / n,
        confusion,
        retained_dims: (valid.iter().filter_map(|f| f.retained_dims).sum::<usize>() as f64 / n)
            .round() as usize,
        total_dims: corpus.num_words * corpus.num_views,
        folds,
    })
}

/// Result of running raw BoW and full-index-set projection side by side.
#[derive(Debug, Clone, PartialEq)]
pub struct IdentityCheck {
    pub raw_accuracy: f64,
    pub projected_accuracy: f64,
    /// Features, models and predictions all matched bit for bit.
    pub identical: bool,
}

/// Projects every video onto the full vocabulary and checks the SVM sees
/// exactly what the raw arm sees.
pub fn identity_projection_check(
    corpus: &Corpus,
    opts: &PipelineOptions,
) -> Result<IdentityCheck, ClassifyError> {
    let folds = make_folds(corpus, opts.folds, opts.seed)?;
    let raw = evaluate_folds(
        corpus,
        &PipelineOptions {
            arm: Arm::Raw,
            ..opts.clone()
        },
        &folds,
    )?;
    let (units, _) = units(corpus)?;
    let all: Vec<usize> = (0..corpus.num_words).collect();
    let mut identical = true;
    let mut correct = 0usize;
    let mut total = 0usize;
    let params = SvmParams {
        cost: opts.cost,
        epochs: opts.epochs,
        transform: FeatureTransform::Hellinger,
    };
    for (f, test) in folds.iter().enumerate() {
        let in_test: std::collections::HashSet<usize> = test.iter().copied().collect();
        let train: Vec<usize> = (0..units.len()).filter(|u| !in_test.contains(u)).collect();
        let feats = |u: &usize| -> Result<Vec<f64>, ClassifyError> {
            let mut v = Vec::new();
            for &r in &units[*u].rows {
                v.extend(project(&corpus.vectors[r], &all)?);
            }
            Ok(v)
        };
        let tr = train.iter().map(feats).collect::<Result<Vec<_>, _>>()?;
        let labels: Vec<usize> = train.iter().map(|&u| units[u].label).collect();
        let raw_tr: Vec<Vec<f64>> = train
            .iter()
            .map(|&u| raw_features(corpus, &units[u]))
            .collect();
        identical &= tr == raw_tr;
        let model = train_svm(&tr, &labels, &params)?;
        let raw_model = train_svm(&raw_tr, &labels, &params)?;
        identical &= model == raw_model;
        let mut fold_conf = vec![vec![0u64; corpus.num_classes]; corpus.num_classes];
        for &u in test {
            let p = predict(&model, &feats(&u)?)?;
            fold_conf[units[u].label][p.min(corpus.num_classes - 1)] += 1;
            correct += usize::from(p == units[u].label);
            total += 1;
        }
        identical &= fold_conf == raw.folds[f].confusion;
    }
    let projected_accuracy = correct as f64 / total.max(1) as f64;
    identical &= projected_accuracy.to_bits() == raw.accuracy.to_bits();
    Ok(IdentityCheck {
        raw_accuracy: raw.accuracy,
        projected_accuracy,
        identical,
    })
}
