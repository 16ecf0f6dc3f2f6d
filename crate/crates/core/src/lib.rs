//! Dominant codeword selection for bag-of-visual-words action descriptors.
//!
//! The pipeline runs BoW corpora through collapsed-Gibbs LDA, keeps the
//! high-frequency codewords of every topic, projects each video onto the
//! union of those codewords and classifies the result with a one-vs-rest
//! linear SVM. Each stage has a brute-force or enumeration oracle next to
//! it so the whole chain can be checked on synthetic corpora.

pub mod classify;
pub mod cli;
pub mod corpus;
pub mod dcs;
pub mod descriptors;
pub mod lda;
pub mod quantize;
pub mod rng;

pub use classify::{
    evaluate, kfold_split, leave_one_group_out, pca_reduce, predict, train_svm, Arm, ClassifyError,
    EvalReport, FeatureTransform, FoldSpec, PcaProjection, PipelineOptions, SvmModel, SvmParams,
};
pub use corpus::{
    load_corpus, nonzero_reduce, synth_corpus, ActionDescriptorVector, Corpus, CorpusError,
    GroundTruth, ReducedVector, SynthSpec,
};
pub use dcs::{
    compute_threshold, multiview_concat, project, select_dominant, topic_codewords, union_dominant,
    DcsError, DominantSet, TopicCodewords,
};
pub use descriptors::{
    ecohog, flatten_ecohog, hog_patch, quantize_orientation, CooccurrenceHistogram,
    DescriptorError, DescriptorLayout, GradientField,
};
pub use lda::{
    exact_posterior, fit_gibbs, log_likelihood, ExactPosterior, GibbsSampler, LdaConfig, LdaError,
    TopicModel,
};
pub use quantize::{assign, bow, fit_codebook, Codebook, QuantizeError};
