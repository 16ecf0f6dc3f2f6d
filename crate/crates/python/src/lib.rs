//! Python bindings: `import pydcs`.

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;

use dcs_core::classify::{self, FeatureTransform, PipelineOptions, SvmParams};
use dcs_core::corpus::{self, CorpusError, SynthSpec};
use dcs_core::dcs::{self as sel, DcsError};
use dcs_core::descriptors::{self, DescriptorLayout, GradientField};
use dcs_core::lda::{self, LdaConfig, LdaError};
use dcs_core::quantize::{self, QuantizeError};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn corpus_err(e: CorpusError) -> PyErr {
    match e {
        CorpusError::Io { .. } => PyIOError::new_err(e.to_string()),
        _ => value_err(e),
    }
}

fn lda_err(e: LdaError) -> PyErr {
    match e {
        LdaError::Io { .. } => PyIOError::new_err(e.to_string()),
        _ => value_err(e),
    }
}

fn dcs_err(e: DcsError) -> PyErr {
    match e {
        DcsError::Lda(inner) => lda_err(inner),
        _ => value_err(e),
    }
}

fn quantize_err(e: QuantizeError) -> PyErr {
    match e {
        QuantizeError::Io { .. } => PyIOError::new_err(e.to_string()),
        _ => value_err(e),
    }
}

fn check_fraction(fraction: f64) -> PyResult<()> {
    if fraction > 0.0 && fraction < 1.0 {
        Ok(())
    } else {
        Err(PyValueError::new_err("fraction must lie in (0, 1)"))
    }
}

/// A BoW corpus: one count vector per (video, view).
#[pyclass(name = "Corpus", module = "pydcs", frozen)]
pub struct PyCorpus {
    inner: corpus::Corpus,
}

#[pymethods]
impl PyCorpus {
    /// Build from `(video_id, view_id, label, counts)` tuples.
    #[new]
    #[pyo3(signature = (vectors, num_words, num_classes, num_views = 1))]
    fn new(
        vectors: Vec<(String, usize, usize, Vec<u32>)>,
        num_words: usize,
        num_classes: usize,
        num_views: usize,
    ) -> PyResult<Self> {
        let vectors = vectors
            .into_iter()
            .map(
                |(video_id, view_id, label, counts)| corpus::ActionDescriptorVector {
                    video_id,
                    view_id,
                    label,
                    counts,
                },
            )
            .collect();
        corpus::Corpus::new(vectors, num_words, num_classes, num_views)
            .map(|inner| Self { inner })
            .map_err(corpus_err)
    }

    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        corpus::Corpus::parse(text)
            .map(|inner| Self { inner })
            .map_err(corpus_err)
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        corpus::load_corpus(path)
            .map(|inner| Self { inner })
            .map_err(corpus_err)
    }

    fn save(&self, path: &str) -> PyResult<()> {
        self.inner.save(path).map_err(corpus_err)
    }

    fn to_text(&self) -> String {
        self.inner.to_text()
    }

    #[getter]
    fn num_words(&self) -> usize {
        self.inner.num_words
    }

    #[getter]
    fn num_classes(&self) -> usize {
        self.inner.num_classes
    }

    #[getter]
    fn num_views(&self) -> usize {
        self.inner.num_views
    }

    fn total_tokens(&self) -> u64 {
        self.inner.total_tokens()
    }

    fn vectors(&self) -> Vec<(String, usize, usize, Vec<u32>)> {
        self.inner
            .vectors
            .iter()
            .map(|v| (v.video_id.clone(), v.view_id, v.label, v.counts.clone()))
            .collect()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "Corpus(vectors={}, words={}, classes={}, views={})",
            self.inner.len(),
            self.inner.num_words,
            self.inner.num_classes,
            self.inner.num_views
        )
    }
}

/// Planted parameters behind a synthetic corpus.
#[pyclass(name = "GroundTruth", module = "pydcs", frozen, get_all)]
pub struct PyGroundTruth {
    /// `phi[view][topic][word]`
    phi: Vec<Vec<Vec<f64>>>,
    theta: Vec<Vec<f64>>,
    noise_words: Vec<usize>,
    topic_word_counts: Vec<Vec<Vec<u64>>>,
}

#[pyfunction]
#[pyo3(signature = (
    num_topics = 4, num_words = 200, num_docs = 400, tokens_per_doc = 50,
    noise_fraction = 0.0, noise_rate = 0.0, alpha = 0.5, beta = 1.0, num_views = 1, seed = 0
))]
#[allow(clippy::too_many_arguments)]
fn synth_corpus(
    num_topics: usize,
    num_words: usize,
    num_docs: usize,
    tokens_per_doc: usize,
    noise_fraction: f64,
    noise_rate: f64,
    alpha: f64,
    beta: f64,
    num_views: usize,
    seed: u64,
) -> PyResult<(PyCorpus, PyGroundTruth)> {
    let spec = SynthSpec {
        num_topics,
        num_words,
        num_docs,
        tokens_per_doc,
        noise_fraction,
        noise_rate,
        alpha,
        beta,
        num_views,
        seed,
    };
    let (c, t) = corpus::synth_corpus(&spec).map_err(corpus_err)?;
    Ok((
        PyCorpus { inner: c },
        PyGroundTruth {
            phi: t.phi,
            theta: t.theta,
            noise_words: t.noise_words,
            topic_word_counts: t.topic_word_counts,
        },
    ))
}

#[pyclass(name = "TopicModel", module = "pydcs", frozen)]
pub struct PyTopicModel {
    inner: lda::TopicModel,
}

#[pymethods]
impl PyTopicModel {
    #[getter]
    fn num_topics(&self) -> usize {
        self.inner.num_topics()
    }

    #[getter]
    fn phi(&self) -> Vec<Vec<f64>> {
        self.inner.phi.clone()
    }

    #[getter]
    fn theta(&self) -> Vec<Vec<f64>> {
        self.inner.theta.clone()
    }

    #[getter]
    fn topic_word_counts(&self) -> Vec<Vec<u64>> {
        self.inner.topic_word_counts.clone()
    }

    fn log_likelihood(&self, corpus: &PyCorpus) -> PyResult<f64> {
        lda::log_likelihood(&self.inner, &corpus.inner).map_err(lda_err)
    }

    /// Dominant codewords at `ceil(fraction * N)` for a training set of N vectors.
    #[pyo3(signature = (num_vectors, fraction = sel::DEFAULT_THRESHOLD_FRACTION))]
    fn dominant(&self, num_vectors: usize, fraction: f64) -> PyResult<PyDominantSet> {
        check_fraction(fraction)?;
        let t = sel::compute_threshold(num_vectors, fraction);
        sel::select_dominant(&sel::topic_codewords(&self.inner), t)
            .map(|inner| PyDominantSet { inner })
            .map_err(dcs_err)
    }

    fn to_text(&self) -> String {
        self.inner.to_text()
    }

    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        lda::TopicModel::parse(text)
            .map(|inner| Self { inner })
            .map_err(lda_err)
    }
}

/// Collapsed Gibbs LDA. `num_topics` defaults to the class count.
#[pyfunction]
#[pyo3(signature = (corpus, num_topics = None, alpha = lda::DEFAULT_ALPHA, beta = lda::DEFAULT_BETA, iterations = lda::DEFAULT_ITERATIONS, seed = 0))]
fn fit_lda(
    py: Python<'_>,
    corpus: &PyCorpus,
    num_topics: Option<usize>,
    alpha: f64,
    beta: f64,
    iterations: usize,
    seed: u64,
) -> PyResult<PyTopicModel> {
    let cfg = LdaConfig::new(num_topics.unwrap_or(corpus.inner.num_classes))
        .with_priors(alpha, beta)
        .with_iterations(iterations)
        .with_seed(seed);
    let c = &corpus.inner;
    py.detach(|| lda::fit_gibbs(c, &cfg))
        .map(|inner| PyTopicModel { inner })
        .map_err(lda_err)
}

/// Probability of every topic assignment of a tiny corpus, by configuration code.
#[pyfunction]
#[pyo3(signature = (corpus, num_topics, alpha = lda::DEFAULT_ALPHA, beta = lda::DEFAULT_BETA))]
fn exact_posterior(
    corpus: &PyCorpus,
    num_topics: usize,
    alpha: f64,
    beta: f64,
) -> PyResult<Vec<f64>> {
    let cfg = LdaConfig::new(num_topics).with_priors(alpha, beta);
    lda::exact_posterior(&corpus.inner, &cfg)
        .map(|p| p.probabilities)
        .map_err(lda_err)
}

#[pyclass(name = "DominantSet", module = "pydcs", frozen)]
pub struct PyDominantSet {
    inner: sel::DominantSet,
}

#[pymethods]
impl PyDominantSet {
    #[getter]
    fn per_topic(&self) -> Vec<Vec<usize>> {
        self.inner.per_topic.clone()
    }

    #[getter]
    fn union(&self) -> Vec<usize> {
        self.inner.union.clone()
    }

    #[getter]
    fn threshold(&self) -> u64 {
        self.inner.threshold
    }

    fn to_text(&self) -> String {
        self.inner.to_text()
    }

    fn __repr__(&self) -> String {
        format!(
            "DominantSet(union={:?}, threshold={})",
            self.inner.union, self.inner.threshold
        )
    }
}

#[pyfunction]
#[pyo3(signature = (n, fraction = sel::DEFAULT_THRESHOLD_FRACTION))]
fn compute_threshold(n: usize, fraction: f64) -> PyResult<u64> {
    check_fraction(fraction)?;
    Ok(sel::compute_threshold(n, fraction))
}

/// Threshold a `frequency[topic][word]` table.
#[pyfunction]
fn select_dominant(frequency: Vec<Vec<u64>>, threshold: u64) -> PyResult<PyDominantSet> {
    let tc = sel::TopicCodewords { frequency };
    sel::select_dominant(&tc, threshold)
        .map(|inner| PyDominantSet { inner })
        .map_err(dcs_err)
}

#[pyfunction]
fn project(counts: Vec<u32>, index_set: Vec<usize>) -> PyResult<Vec<f64>> {
    let v = corpus::ActionDescriptorVector {
        video_id: String::new(),
        view_id: 0,
        label: 0,
        counts,
    };
    sel::project(&v, &index_set).map_err(dcs_err)
}

#[pyclass(name = "EvalReport", module = "pydcs", frozen)]
pub struct PyEvalReport {
    inner: classify::EvalReport,
}

#[pymethods]
impl PyEvalReport {
    #[getter]
    fn arm(&self) -> String {
        self.inner.arm.to_string()
    }

    #[getter]
    fn num_topics(&self) -> usize {
        self.inner.num_topics
    }

    #[getter]
    fn accuracy(&self) -> f64 {
        self.inner.accuracy
    }

    #[getter]
    fn mean_fold_accuracy(&self) -> f64 {
        self.inner.mean_fold_accuracy
    }

    #[getter]
    fn fold_accuracies(&self) -> Vec<Option<f64>> {
        self.inner.folds.iter().map(|f| f.accuracy).collect()
    }

    #[getter]
    fn confusion(&self) -> Vec<Vec<u64>> {
        self.inner.confusion.clone()
    }

    #[getter]
    fn retained_dims(&self) -> usize {
        self.inner.retained_dims
    }

    #[getter]
    fn total_dims(&self) -> usize {
        self.inner.total_dims
    }

    fn to_csv(&self) -> String {
        self.inner.to_csv()
    }

    fn __repr__(&self) -> String {
        format!(
            "EvalReport(arm={}, accuracy={:.4}, retained_dims={}, total_dims={})",
            self.inner.arm, self.inner.accuracy, self.inner.retained_dims, self.inner.total_dims
        )
    }
}

/// Cross-validate one arm: `"raw"`, `"pca:<dims>"` or `"dcs"`; folds `"kfold:<k>"` or `"logo"`.
#[pyfunction]
#[pyo3(signature = (
    corpus, arm = "dcs", folds = "kfold:5", num_topics = None, alpha = lda::DEFAULT_ALPHA,
    beta = lda::DEFAULT_BETA, iterations = lda::DEFAULT_ITERATIONS,
    threshold = sel::DEFAULT_THRESHOLD_FRACTION, cost = classify::DEFAULT_COST,
    epochs = classify::DEFAULT_EPOCHS, seed = 0
))]
#[allow(clippy::too_many_arguments)]
fn evaluate(
    py: Python<'_>,
    corpus: &PyCorpus,
    arm: &str,
    folds: &str,
    num_topics: Option<usize>,
    alpha: f64,
    beta: f64,
    iterations: usize,
    threshold: f64,
    cost: f64,
    epochs: usize,
    seed: u64,
) -> PyResult<PyEvalReport> {
    let opts = PipelineOptions {
        arm: arm.parse().map_err(PyValueError::new_err)?,
        folds: folds.parse().map_err(PyValueError::new_err)?,
        num_topics,
        alpha,
        beta,
        iterations,
        threshold_fraction: threshold,
        cost,
        epochs,
        seed,
    };
    let c = &corpus.inner;
    py.detach(|| classify::evaluate(c, &opts))
        .map(|inner| PyEvalReport { inner })
        .map_err(value_err)
}

#[pyclass(name = "SvmModel", module = "pydcs", frozen)]
pub struct PySvmModel {
    inner: classify::SvmModel,
}

#[pymethods]
impl PySvmModel {
    #[getter]
    fn num_classes(&self) -> usize {
        self.inner.num_classes()
    }

    #[getter]
    fn weights(&self) -> Vec<Vec<f64>> {
        self.inner.weights.clone()
    }

    #[getter]
    fn biases(&self) -> Vec<f64> {
        self.inner.biases.clone()
    }

    fn decision_values(&self, v: Vec<f64>) -> PyResult<Vec<f64>> {
        self.inner.decision_values(&v).map_err(value_err)
    }

    fn predict(&self, v: Vec<f64>) -> PyResult<usize> {
        classify::predict(&self.inner, &v).map_err(value_err)
    }
}

/// One-vs-rest linear SVM; `transform` is `"hellinger"` or `"identity"`.
#[pyfunction]
#[pyo3(signature = (vectors, labels, cost = classify::DEFAULT_COST, epochs = classify::DEFAULT_EPOCHS, transform = "hellinger"))]
fn train_svm(
    vectors: Vec<Vec<f64>>,
    labels: Vec<usize>,
    cost: f64,
    epochs: usize,
    transform: &str,
) -> PyResult<PySvmModel> {
    let transform = match transform {
        "hellinger" => FeatureTransform::Hellinger,
        "identity" => FeatureTransform::Identity,
        other => {
            return Err(PyValueError::new_err(format!(
                "unknown transform `{other}`"
            )))
        }
    };
    let params = SvmParams {
        cost,
        epochs,
        transform,
    };
    classify::train_svm(&vectors, &labels, &params)
        .map(|inner| PySvmModel { inner })
        .map_err(value_err)
}

type PcaOutput = (Vec<Vec<f64>>, Vec<Vec<f64>>, Vec<f64>);

/// Returns `(projected, basis, eigenvalues)`.
#[pyfunction]
fn pca_reduce(vectors: Vec<Vec<f64>>, dims: usize) -> PyResult<PcaOutput> {
    let (projected, pca) = classify::pca_reduce(&vectors, dims).map_err(value_err)?;
    Ok((projected, pca.basis, pca.eigenvalues))
}

#[pyfunction]
#[pyo3(signature = (n, k, seed = 0))]
fn kfold_split(n: usize, k: usize, seed: u64) -> PyResult<Vec<Vec<usize>>> {
    classify::kfold_split(n, k, seed).map_err(value_err)
}

fn field(
    width: usize,
    height: usize,
    magnitude: Vec<f64>,
    orientation: Vec<f64>,
) -> PyResult<GradientField> {
    GradientField::new(width, height, magnitude, orientation).map_err(value_err)
}

/// Co-occurrence matrices (row-major `bins * bins`) per offset.
#[pyfunction]
#[pyo3(signature = (width, height, magnitude, orientation, offsets, bins = 8))]
fn ecohog(
    width: usize,
    height: usize,
    magnitude: Vec<f64>,
    orientation: Vec<f64>,
    offsets: Vec<(i64, i64)>,
    bins: usize,
) -> PyResult<Vec<Vec<f64>>> {
    let f = field(width, height, magnitude, orientation)?;
    descriptors::ecohog(&f, &offsets, bins)
        .map(|h| h.matrices)
        .map_err(value_err)
}

/// HOG descriptor of a patch given one `(width, height, magnitude, orientation)`
/// field per temporal cell; `layout` is `"hog"`, `"hof"` or `"mbh"`.
#[pyfunction]
#[pyo3(signature = (fields, layout = "hog"))]
fn hog_patch(fields: Vec<(usize, usize, Vec<f64>, Vec<f64>)>, layout: &str) -> PyResult<Vec<f64>> {
    let layout = match layout {
        "hog" => DescriptorLayout::HOG,
        "hof" => DescriptorLayout::HOF,
        "mbh" => DescriptorLayout::MBH,
        other => return Err(PyValueError::new_err(format!("unknown layout `{other}`"))),
    };
    let fields = fields
        .into_iter()
        .map(|(w, h, m, o)| field(w, h, m, o))
        .collect::<PyResult<Vec<_>>>()?;
    descriptors::hog_patch(&fields, layout).map_err(value_err)
}

#[pyclass(name = "Codebook", module = "pydcs", frozen)]
pub struct PyCodebook {
    inner: quantize::Codebook,
}

#[pymethods]
impl PyCodebook {
    #[getter]
    fn k(&self) -> usize {
        self.inner.k()
    }

    #[getter]
    fn centroids(&self) -> Vec<Vec<f64>> {
        self.inner.centroids().to_vec()
    }

    fn assign(&self, point: Vec<f64>) -> PyResult<usize> {
        quantize::assign(&point, &self.inner).map_err(quantize_err)
    }

    /// BoW histogram of a set of local descriptors.
    fn bow(&self, points: Vec<Vec<f64>>) -> PyResult<Vec<u32>> {
        let ids = points
            .iter()
            .map(|p| quantize::assign(p, &self.inner))
            .collect::<Result<Vec<_>, _>>()
            .map_err(quantize_err)?;
        quantize::bow(&ids, self.inner.k()).map_err(quantize_err)
    }
}

#[pyfunction]
#[pyo3(signature = (points, k, seed = 0))]
fn fit_codebook(
    py: Python<'_>,
    points: Vec<Vec<f64>>,
    k: usize,
    seed: u64,
) -> PyResult<PyCodebook> {
    py.detach(|| quantize::fit_codebook(&points, k, seed))
        .map(|inner| PyCodebook { inner })
        .map_err(quantize_err)
}

pub fn register(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyCorpus>()?;
    m.add_class::<PyGroundTruth>()?;
    m.add_class::<PyTopicModel>()?;
    m.add_class::<PyDominantSet>()?;
    m.add_class::<PyEvalReport>()?;
    m.add_class::<PySvmModel>()?;
    m.add_class::<PyCodebook>()?;
    m.add_function(wrap_pyfunction!(synth_corpus, m)?)?;
    m.add_function(wrap_pyfunction!(fit_lda, m)?)?;
    m.add_function(wrap_pyfunction!(exact_posterior, m)?)?;
    m.add_function(wrap_pyfunction!(compute_threshold, m)?)?;
    m.add_function(wrap_pyfunction!(select_dominant, m)?)?;
    m.add_function(wrap_pyfunction!(project, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(train_svm, m)?)?;
    m.add_function(wrap_pyfunction!(pca_reduce, m)?)?;
    m.add_function(wrap_pyfunction!(kfold_split, m)?)?;
    m.add_function(wrap_pyfunction!(ecohog, m)?)?;
    m.add_function(wrap_pyfunction!(hog_patch, m)?)?;
    m.add_function(wrap_pyfunction!(fit_codebook, m)?)?;
    Ok(())
}

#[pymodule]
fn pydcs(m: &Bound<'_, PyModule>) -> PyResult<()> {
    register(m)
}
