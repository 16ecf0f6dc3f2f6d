use pyo3::prelude::*;
use pyo3::types::PyDict;

fn with_module(code: &str) {
    Python::initialize();
    Python::attach(|py| {
        let m = PyModule::new(py, "pydcs").unwrap();
        pydcs::register(&m).unwrap();
        let globals = PyDict::new(py);
        globals.set_item("pydcs", m).unwrap();
        let code = std::ffi::CString::new(code).unwrap();
        if let Err(e) = py.run(&code, Some(&globals), None) {
            e.print(py);
            panic!("python snippet failed");
        }
    });
}

#[test]
fn threshold_and_worked_example() {
    with_module(
        r#"
assert pydcs.compute_threshold(5000) == 50
freq = [[0] * 8 for _ in range(3)]
for k, w, f in [(0, 1, 9), (0, 3, 2), (0, 5, 7), (1, 1, 6), (1, 2, 8), (1, 7, 5), (2, 3, 4), (2, 6, 3), (2, 7, 10)]:
    freq[k][w] = f
ds = pydcs.select_dominant(freq, 5)
assert ds.union == [1, 2, 5, 7], ds.union
try:
    pydcs.compute_threshold(10, 1.5)
    raise AssertionError("expected ValueError")
except ValueError:
    pass
"#,
    );
}

#[test]
fn corpus_lda_and_evaluate() {
    with_module(
        r#"
corpus, truth = pydcs.synth_corpus(num_topics=3, num_words=60, num_docs=60, tokens_per_doc=30, noise_fraction=0.2, noise_rate=0.1, seed=1)
assert len(corpus) == 60 and corpus.num_words == 60
assert len(truth.noise_words) == 12
again = pydcs.Corpus.parse(corpus.to_text())
assert again.vectors() == corpus.vectors()
model = pydcs.fit_lda(corpus, iterations=50, seed=2)
assert model.num_topics == 3
assert all(abs(sum(row) - 1.0) < 1e-9 for row in model.phi)
ds = model.dominant(len(corpus))
assert ds.threshold == 1
report = pydcs.evaluate(corpus, arm="raw", folds="kfold:3", seed=4)
assert report.total_dims == 60 and report.retained_dims == 60
assert sum(map(sum, report.confusion)) == 60
assert report.to_csv().startswith("pipeline,fold,accuracy")
try:
    pydcs.evaluate(corpus, arm="nope")
    raise AssertionError("expected ValueError")
except ValueError:
    pass
"#,
    );
}

#[test]
fn svm_pca_and_descriptors() {
    with_module(
        r#"
m = pydcs.train_svm([[0.0, 1.0], [1.0, 0.0]], [0, 1])
assert m.predict([0.0, 1.0]) == 0 and m.predict([1.0, 0.0]) == 1
proj, basis, vals = pydcs.pca_reduce([[0.0, 0.0], [1.0, 2.0], [2.0, 4.1]], 1)
assert len(proj) == 3 and len(basis[0]) == 2 and vals[0] > 0
mats = pydcs.ecohog(2, 1, [1.0, 3.0], [0.0, 0.0], [(1, 0)], bins=4)
assert mats[0][0] == 4.0
fields = [(4, 4, [1.0] * 16, [0.5] * 16)] * 3
assert len(pydcs.hog_patch(fields)) == 96
cb = pydcs.fit_codebook([[0.0], [0.1], [10.0], [10.1]], 2, seed=1)
assert cb.k == 2 and sorted(cb.bow([[0.0], [10.0], [10.2]])) == [1, 2]
assert pydcs.project([5, 0, 7], [0, 2]) == [5.0, 7.0]
assert len(pydcs.kfold_split(10, 5, seed=3)) == 5
"#,
    );
}
