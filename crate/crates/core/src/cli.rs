//! The `dcs` command line: synthetic corpora, descriptor vectorization,
//! cross-validated pipeline runs and oracle checks.
//!
//! Exit codes: 0 success, 1 runtime or degenerate failure, 2 usage or
//! configuration error.

use std::f64::consts::TAU;
use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use rand::Rng as _;

use crate::classify::{self, Arm, ClassifyError, FoldSpec, PipelineOptions};
use crate::corpus::{self, ActionDescriptorVector, Corpus, CorpusError, SynthSpec};
use crate::dcs::{DcsError, DEFAULT_THRESHOLD_FRACTION};
use crate::descriptors::{ecohog, DescriptorError, GradientField};
use crate::lda::{
    self, GibbsSampler, LdaConfig, LdaError, DEFAULT_ALPHA, DEFAULT_BETA, DEFAULT_ITERATIONS,
};
use crate::quantize::{self, Codebook, QuantizeError, DEFAULT_WORDS};
use crate::rng;

pub const FORMAT_VERSION: u32 = 1;

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Runtime(_) => EXIT_RUNTIME,
        }
    }
}

impl From<CorpusError> for CliError {
    fn from(e: CorpusError) -> Self {
        match e {
            CorpusError::Io { .. } => CliError::Runtime(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<LdaError> for CliError {
    fn from(e: LdaError) -> Self {
        match e {
            LdaError::Io { .. } => CliError::Runtime(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<DcsError> for CliError {
    fn from(e: DcsError) -> Self {
        match e {
            DcsError::Lda(inner) => inner.into(),
            DcsError::Degenerate { .. } => CliError::Runtime(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<ClassifyError> for CliError {
    fn from(e: ClassifyError) -> Self {
        match e {
            ClassifyError::AllDegenerate(_) => CliError::Runtime(e.to_string()),
            ClassifyError::Corpus(inner) => inner.into(),
            ClassifyError::Dcs(inner) => inner.into(),
            ClassifyError::Input(_) => CliError::Usage(e.to_string()),
        }
    }
}

impl From<QuantizeError> for CliError {
    fn from(e: QuantizeError) -> Self {
        match e {
            QuantizeError::Io { .. } => CliError::Runtime(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<DescriptorError> for CliError {
    fn from(e: DescriptorError) -> Self {
        CliError::Usage(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "dcs",
    version,
    about = "Dominant codeword selection for BoW action recognition"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a planted-topic corpus and its ground-truth sidecar.
    Synth(SynthArgs),
    /// Quantize local descriptors into a BoW corpus.
    Vectorize(VectorizeArgs),
    /// Cross-validate one pipeline arm and write the CSV report.
    Run(RunArgs),
    /// Run an oracle comparison; exits 0 iff it passes.
    Oracle(OracleArgs),
}

#[derive(Debug, clap::Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 4)]
    pub topics: usize,
    #[arg(long, default_value_t = 200)]
    pub vocab: usize,
    #[arg(long, default_value_t = 400)]
    pub docs: usize,
    #[arg(long, default_value_t = 50)]
    pub tokens: usize,
    #[arg(long, default_value_t = 0.0)]
    pub noise_fraction: f64,
    #[arg(long, default_value_t = 0.0)]
    pub noise_rate: f64,
    /// Dirichlet concentration of the per-video topic mixtures.
    #[arg(long, default_value_t = 0.5)]
    pub alpha: f64,
    /// Dirichlet concentration of the planted topic-word tables.
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,
    #[arg(long, default_value_t = 1)]
    pub views: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Corpus output path.
    #[arg(long)]
    pub out: PathBuf,
    /// Ground-truth path; defaults to `<out>.truth`.
    #[arg(long)]
    pub truth: Option<PathBuf>,
}

impl SynthArgs {
    pub fn spec(&self) -> SynthSpec {
        SynthSpec {
            num_topics: self.topics,
            num_words: self.vocab,
            num_docs: self.docs,
            tokens_per_doc: self.tokens,
            noise_fraction: self.noise_fraction,
            noise_rate: self.noise_rate,
            alpha: self.alpha,
            beta: self.beta,
            num_views: self.views,
            seed: self.seed,
        }
    }
}

#[derive(Debug, clap::Args)]
pub struct VectorizeArgs {
    /// Descriptor files: header `descriptors <dim>`, then one
    /// `<video_id>\t<view_id>\t<label>\t<v1> <v2> ...` line per local descriptor.
    #[arg(long, required = true, num_args = 1..)]
    pub descriptors: Vec<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_WORDS)]
    pub words: usize,
    /// Use this codebook instead of fitting one.
    #[arg(long)]
    pub codebook: Option<PathBuf>,
    #[arg(long)]
    pub save_codebook: Option<PathBuf>,
    /// Class count; defaults to the largest label plus one.
    #[arg(long)]
    pub classes: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, clap::Args)]
pub struct RunArgs {
    #[arg(long, conflicts_with = "synth", required_unless_present = "synth")]
    pub corpus: Option<PathBuf>,
    /// Inline synthetic corpus, e.g. `topics=4,vocab=200,docs=400,noise_rate=0.1`.
    #[arg(long)]
    pub synth: Option<String>,
    /// Topic count; defaults to the corpus class count.
    #[arg(long)]
    pub topics: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_ALPHA)]
    pub alpha: f64,
    #[arg(long, default_value_t = DEFAULT_BETA)]
    pub beta: f64,
    #[arg(long, default_value_t = DEFAULT_ITERATIONS)]
    pub iterations: usize,
    /// Dominance threshold as a fraction of the training-video count.
    #[arg(long, default_value_t = DEFAULT_THRESHOLD_FRACTION)]
    pub threshold: f64,
    /// raw | pca:<dims> | dcs
    #[arg(long, default_value = "dcs", value_parser = parse_arm)]
    pub arm: Arm,
    /// kfold:<k> | logo
    #[arg(long, default_value = "kfold:5", value_parser = parse_folds)]
    pub folds: FoldSpec,
    #[arg(long, default_value_t = classify::DEFAULT_COST)]
    pub cost: f64,
    #[arg(long, default_value_t = classify::DEFAULT_EPOCHS)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// CSV report path; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Dominant-set dump path (dcs arm); defaults to `<out>.dominant` when `--out` is set.
    #[arg(long)]
    pub dominant_out: Option<PathBuf>,
}

fn parse_arm(s: &str) -> Result<Arm, String> {
    s.parse()
}

fn parse_folds(s: &str) -> Result<FoldSpec, String> {
    s.parse()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OracleCheck {
    GibbsTv,
    EcohogBf,
    IdentityProj,
}

#[derive(Debug, clap::Args)]
pub struct OracleArgs {
    #[arg(value_enum)]
    pub check: OracleCheck,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// gibbs-tv: post-burn-in samples.
    #[arg(long, default_value_t = 20_000)]
    pub samples: usize,
    /// gibbs-tv: sweeps discarded before sampling.
    #[arg(long, default_value_t = 1_000)]
    pub burn_in: usize,
    /// ecohog-bf: random fields to compare.
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
}

/// Parses `key=value,...` into a `SynthSpec`, starting from the defaults.
pub fn parse_synth_spec(s: &str) -> Result<SynthSpec, CliError> {
    let mut spec = SynthSpec::default();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (key, value) = part
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("synth entry `{part}` is not key=value")))?;
        let bad = || CliError::Usage(format!("bad value for synth key `{key}`: `{value}`"));
        match key.trim() {
            "topics" => spec.num_topics = value.parse().map_err(|_| bad())?,
            "vocab" => spec.num_words = value.parse().map_err(|_| bad())?,
            "docs" => spec.num_docs = value.parse().map_err(|_| bad())?,
            "tokens" => spec.tokens_per_doc = value.parse().map_err(|_| bad())?,
            "views" => spec.num_views = value.parse().map_err(|_| bad())?,
            "seed" => spec.seed = value.parse().map_err(|_| bad())?,
            "noise_fraction" => spec.noise_fraction = value.parse().map_err(|_| bad())?,
            "noise_rate" => spec.noise_rate = value.parse().map_err(|_| bad())?,
            "alpha" => spec.alpha = value.parse().map_err(|_| bad())?,
            "beta" => spec.beta = value.parse().map_err(|_| bad())?,
            other => return Err(CliError::Usage(format!("unknown synth key `{other}`"))),
        }
    }
    spec.validate()?;
    Ok(spec)
}

fn synth_spec_string(spec: &SynthSpec) -> String {
    format!(
        "topics={},vocab={},docs={},tokens={},noise_fraction={},noise_rate={},alpha={},beta={},views={},seed={}",
        spec.num_topics,
        spec.num_words,
        spec.num_docs,
        spec.tokens_per_doc,
        spec.noise_fraction,
        spec.noise_rate,
        spec.alpha,
        spec.beta,
        spec.num_views,
        spec.seed
    )
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text)
        .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

pub fn cmd_synth(args: &SynthArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let spec = args.spec();
    let (corpus, truth) = corpus::synth_corpus(&spec)?;
    let truth_path = args
        .truth
        .clone()
        .unwrap_or_else(|| with_suffix(&args.out, ".truth"));
    write_text(&args.out, &corpus.to_text())?;
    write_text(&truth_path, &truth.to_text())?;
    let _ = writeln!(
        out,
        "wrote {} vectors to {} and ground truth to {}",
        corpus.len(),
        args.out.display(),
        truth_path.display()
    );
    Ok(())
}

/// One local descriptor with the video row it belongs to.
struct DescriptorRow {
    video_id: String,
    view_id: usize,
    label: usize,
    values: Vec<f64>,
}

fn parse_descriptor_file(path: &Path) -> Result<Vec<DescriptorRow>, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Runtime(format!("cannot read {}: {e}", path.display())))?;
    let fail =
        |line: usize, msg: &str| CliError::Usage(format!("{}:{line}: {msg}", path.display()));
    let mut dim = None;
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let n = i + 1;
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            continue;
        }
        let Some(d) = dim else {
            let parts: Vec<&str> = line.split_whitespace().collect();
            match parts.as_slice() {
                ["descriptors", d] => {
                    dim = Some(d.parse::<usize>().map_err(|_| fail(n, "bad dimension"))?)
                }
                _ => return Err(fail(n, "missing header `descriptors <dim>`")),
            }
            continue;
        };
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 4 {
            return Err(fail(n, "expected 4 tab-separated fields"));
        }
        let values = fields[3]
            .split_whitespace()
            .map(|v| v.parse::<f64>().ok().filter(|x| x.is_finite()))
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| fail(n, "descriptor values must be finite numbers"))?;
        if values.len() != d {
            return Err(fail(
                n,
                &format!("expected {d} values, found {}", values.len()),
            ));
        }
        rows.push(DescriptorRow {
            video_id: fields[0].to_string(),
            view_id: fields[1].parse().map_err(|_| fail(n, "bad view id"))?,
            label: fields[2].parse().map_err(|_| fail(n, "bad label"))?,
            values,
        });
    }
    Ok(rows)
}

pub fn cmd_vectorize(args: &VectorizeArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let mut rows = Vec::new();
    for p in &args.descriptors {
        rows.extend(parse_descriptor_file(p)?);
    }
    if rows.is_empty() {
        return Err(CliError::Usage("no descriptors in the input files".into()));
    }
    let points: Vec<Vec<f64>> = rows.iter().map(|r| r.values.clone()).collect();
    let codebook = match &args.codebook {
        Some(p) => Codebook::load(p)?,
        None => quantize::fit_codebook(&points, args.words, args.seed)?,
    };
    if let Some(p) = &args.save_codebook {
        write_text(p, &codebook.to_text())?;
    }
    // group descriptors by (video, view) in first-appearance order
    let mut keys: Vec<(String, usize, usize)> = Vec::new();
    let mut words: Vec<Vec<usize>> = Vec::new();
    for r in &rows {
        let w = quantize::assign(&r.values, &codebook)?;
        match keys
            .iter()
            .position(|k| k.0 == r.video_id && k.1 == r.view_id)
        {
            Some(i) if keys[i].2 != r.label => {
                return Err(CliError::Usage(format!(
                    "video {} view {} has conflicting labels",
                    r.video_id, r.view_id
                )))
            }
            Some(i) => words[i].push(w),
            None => {
                keys.push((r.video_id.clone(), r.view_id, r.label));
                words.push(vec![w]);
            }
        }
    }
    let vectors = keys
        .into_iter()
        .zip(&words)
        .map(|((video_id, view_id, label), ws)| {
            Ok(ActionDescriptorVector {
                video_id,
                view_id,
                label,
                counts: quantize::bow(ws, codebook.k())?,
            })
        })
        .collect::<Result<Vec<_>, QuantizeError>>()?;
    let classes = args
        .classes
        .unwrap_or_else(|| vectors.iter().map(|v| v.label + 1).max().unwrap_or(1));
    let views = vectors.iter().map(|v| v.view_id + 1).max().unwrap_or(1);
    let corpus = Corpus::new(vectors, codebook.k(), classes, views)?;
    write_text(&args.out, &corpus.to_text())?;
    let _ = writeln!(
        out,
        "quantized {} descriptors into {} vectors over {} words",
        rows.len(),
        corpus.len(),
        codebook.k()
    );
    Ok(())
}

fn run_header(args: &RunArgs, source: &str, opts: &PipelineOptions, corpus: &Corpus) -> String {
    let mut h = String::new();
    let _ = writeln!(
        h,
        "# dcs {} format {FORMAT_VERSION}",
        env!("CARGO_PKG_VERSION")
    );
    let _ = writeln!(
        h,
        "# corpus: {source} vectors={} words={} classes={} views={}",
        corpus.len(),
        corpus.num_words,
        corpus.num_classes,
        corpus.num_views
    );
    let topics_note = if args.topics.is_some() {
        "flag"
    } else {
        "class count"
    };
    let _ = writeln!(h, "# topics={} ({topics_note})", opts.topics_for(corpus));
    let _ = writeln!(
        h,
        "# arm={} folds={} alpha={} beta={} iterations={} threshold={} cost={} epochs={} seed={}",
        opts.arm,
        opts.folds,
        opts.alpha,
        opts.beta,
        opts.iterations,
        opts.threshold_fraction,
        opts.cost,
        opts.epochs,
        opts.seed
    );
    let _ = writeln!(
        h,
        "# rerun: dcs run {source} --topics {} --alpha {} --beta {} --iterations {} --threshold {} --arm {} --folds {} --cost {} --epochs {} --seed {}",
        opts.topics_for(corpus),
        opts.alpha,
        opts.beta,
        opts.iterations,
        opts.threshold_fraction,
        opts.arm,
        opts.folds,
        opts.cost,
        opts.epochs,
        opts.seed
    );
    h
}

pub fn cmd_run(args: &RunArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let (corpus, source) = match (&args.corpus, &args.synth) {
        (Some(p), None) => (corpus::load_corpus(p)?, format!("--corpus {}", p.display())),
        (None, Some(s)) => {
            let spec = parse_synth_spec(s)?;
            let source = format!("--synth {}", synth_spec_string(&spec));
            (corpus::synth_corpus(&spec)?.0, source)
        }
        _ => {
            return Err(CliError::Usage(
                "give exactly one of --corpus or --synth".into(),
            ))
        }
    };
    if args.topics == Some(0) {
        return Err(CliError::Usage("--topics must be at least 1".into()));
    }
    let opts = PipelineOptions {
        arm: args.arm,
        folds: args.folds,
        num_topics: args.topics,
        alpha: args.alpha,
        beta: args.beta,
        iterations: args.iterations,
        threshold_fraction: args.threshold,
        cost: args.cost,
        epochs: args.epochs,
        seed: args.seed,
    };
    LdaConfig::new(opts.topics_for(&corpus))
        .with_priors(opts.alpha, opts.beta)
        .with_iterations(opts.iterations)
        .validate()?;
    let report = classify::evaluate(&corpus, &opts)?;
    for f in report.folds.iter().filter(|f| f.degenerate.is_some()) {
        eprintln!(
            "warning: fold {} excluded: {}",
            f.fold,
            f.degenerate.as_deref().unwrap_or("")
        );
    }
    let csv = format!(
        "{}{}",
        run_header(args, &source, &opts, &corpus),
        report.to_csv()
    );
    match &args.out {
        Some(p) => write_text(p, &csv)?,
        None => {
            let _ = out.write_all(csv.as_bytes());
        }
    }
    if args.arm == Arm::Dcs {
        let dump_path = args
            .dominant_out
            .clone()
            .or_else(|| args.out.as_ref().map(|p| with_suffix(p, ".dominant")));
        if let Some(p) = dump_path {
            let mut dump = String::new();
            for f in &report.folds {
                for (view, ds) in f.dominant.iter().enumerate() {
                    let _ = writeln!(dump, "# fold {} view {view}", f.fold);
                    dump.push_str(&ds.to_text());
                }
            }
            write_text(&p, &dump)?;
        }
    }
    Ok(())
}

/// Measured statistic of an oracle comparison against its pass threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleOutcome {
    pub name: &'static str,
    pub statistic: f64,
    pub threshold: f64,
    pub passed: bool,
}

impl OracleOutcome {
    pub fn line(&self) -> String {
        format!(
            "{}: statistic={} threshold={} {}",
            self.name,
            self.statistic,
            self.threshold,
            if self.passed { "PASS" } else { "FAIL" }
        )
    }
}

pub const GIBBS_TV_THRESHOLD: f64 = 0.05;

/// Two documents over three words, six tokens, two topics.
pub fn gibbs_tv_instance() -> (Corpus, LdaConfig) {
    let doc = |id: &str, counts: Vec<u32>| ActionDescriptorVector {
        video_id: id.to_string(),
        view_id: 0,
        label: 0,
        counts,
    };
    let corpus = Corpus::new(
        vec![doc("d0", vec![2, 1, 0]), doc("d1", vec![0, 1, 2])],
        3,
        1,
        1,
    )
    .expect("fixed instance is valid");
    let cfg = LdaConfig::new(2).with_priors(1.0, 1.0);
    (corpus, cfg)
}

/// Total variation between `samples` Gibbs configurations (one per sweep
/// after `burn_in` sweeps) and the enumerated posterior.
pub fn gibbs_tv(seed: u64, burn_in: usize, samples: usize) -> Result<f64, LdaError> {
    let (corpus, cfg) = gibbs_tv_instance();
    let cfg = cfg.with_seed(seed);
    let exact = lda::exact_posterior(&corpus, &cfg)?;
    let mut sampler = GibbsSampler::new(&corpus, &cfg)?;
    for _ in 0..burn_in {
        sampler.sweep();
    }
    let mut counts = vec![0u64; exact.probabilities.len()];
    for _ in 0..samples {
        sampler.sweep();
        counts[sampler.configuration_index()] += 1;
    }
    Ok(exact.total_variation(&counts))
}

fn random_field(rng: &mut rng::Rng, w: usize, h: usize) -> GradientField {
    let mag = (0..w * h).map(|_| rng.random::<f64>()).collect();
    let ori = (0..w * h).map(|_| rng.random_range(0.0..TAU)).collect();
    GradientField::new(w, h, mag, ori).expect("sizes match")
}

/// Literal quadruple loop over bins and pixels.
fn ecohog_brute_force(field: &GradientField, offsets: &[(i64, i64)], bins: usize) -> Vec<Vec<f64>> {
    let (w, h) = (field.width() as i64, field.height() as i64);
    let bin = |x: i64, y: i64| {
        crate::descriptors::quantize_orientation(field.orientation_at(x as usize, y as usize), bins)
            .expect("bins > 0")
    };
    let mag = |x: i64, y: i64| field.magnitude_at(x as usize, y as usize);
    offsets
        .iter()
        .map(|&(dx, dy)| {
            let mut c = vec![0.0; bins * bins];
            for i in 0..bins {
                for j in 0..bins {
                    for q in 0..h {
                        for p in 0..w {
                            let (p2, q2) = (p + dx, q + dy);
                            if p2 < 0 || p2 >= w || q2 < 0 || q2 >= h {
                                continue;
                            }
                            if bin(p, q) == i && bin(p2, q2) == j {
                                c[i * bins + j] += mag(p, q) + mag(p2, q2);
                            }
                        }
                    }
                }
            }
            c
        })
        .collect()
}

/// Count of random 8x8 fields whose co-occurrence histograms differ from
/// the brute-force evaluation in any entry.
pub fn ecohog_mismatches(seed: u64, trials: usize) -> Result<usize, DescriptorError> {
    let offsets = [(1, 0), (0, 1)];
    let mut rng = rng::seeded(seed);
    let mut bad = 0;
    for _ in 0..trials {
        let field = random_field(&mut rng, 8, 8);
        let fast = ecohog(&field, &offsets, 8)?;
        if fast.matrices != ecohog_brute_force(&field, &offsets, 8) {
            bad += 1;
        }
    }
    Ok(bad)
}

pub fn identity_check_spec(seed: u64) -> SynthSpec {
    SynthSpec {
        num_topics: 3,
        num_words: 60,
        num_docs: 60,
        tokens_per_doc: 40,
        noise_fraction: 0.2,
        noise_rate: 0.1,
        seed,
        ..SynthSpec::default()
    }
}

pub fn cmd_oracle(args: &OracleArgs) -> Result<OracleOutcome, CliError> {
    Ok(match args.check {
        OracleCheck::GibbsTv => {
            let tv = gibbs_tv(args.seed, args.burn_in, args.samples)?;
            OracleOutcome {
                name: "gibbs-tv",
                statistic: tv,
                threshold: GIBBS_TV_THRESHOLD,
                passed: tv < GIBBS_TV_THRESHOLD,
            }
        }
        OracleCheck::EcohogBf => {
            let bad = ecohog_mismatches(args.seed, args.trials)?;
            OracleOutcome {
                name: "ecohog-bf",
                statistic: bad as f64,
                threshold: 0.0,
                passed: bad == 0,
            }
        }
        OracleCheck::IdentityProj => {
            let (corpus, _) = corpus::synth_corpus(&identity_check_spec(args.seed))?;
            let opts = PipelineOptions {
                arm: Arm::Raw,
                folds: FoldSpec::KFold(3),
                seed: args.seed,
                ..PipelineOptions::default()
            };
            let check = classify::identity_projection_check(&corpus, &opts)?;
            let gap = (check.raw_accuracy - check.projected_accuracy).abs();
            OracleOutcome {
                name: "identity-proj",
                statistic: gap,
                threshold: 0.0,
                passed: check.identical && gap == 0.0,
            }
        }
    })
}

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let rendered = e.render().to_string();
            let _ = if code == EXIT_OK {
                out.write_all(rendered.as_bytes())
            } else {
                err.write_all(rendered.as_bytes())
            };
            return code;
        }
    };
    let result = match &cli.command {
        Command::Synth(a) => cmd_synth(a, out),
        Command::Vectorize(a) => cmd_vectorize(a, out),
        Command::Run(a) => cmd_run(a, out),
        Command::Oracle(a) => cmd_oracle(a).and_then(|o| {
            let _ = writeln!(out, "{}", o.line());
            if o.passed {
                Ok(())
            } else {
                Err(CliError::Runtime(format!("oracle {} failed", o.name)))
            }
        }),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let msg = e.to_string();
            if !msg.is_empty() {
                let _ = writeln!(err, "error: {msg}");
            }
            e.exit_code()
        }
    }
}
