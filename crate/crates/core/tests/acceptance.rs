//! Acceptance gate: one test per criterion, each printing a single
//! `criterion N: PASS|FAIL ...` line. Run with `--nocapture` to see them.

use std::collections::HashSet;
use std::f64::consts::TAU;
use std::time::{Duration, Instant};

use dcs_core::classify::{evaluate, identity_projection_check, Arm, FoldSpec, PipelineOptions};
use dcs_core::cli;
use dcs_core::corpus::{synth_corpus, ActionDescriptorVector, Corpus, SynthSpec};
use dcs_core::dcs::{
    compute_threshold, fit_view_selection, select_dominant, topic_codewords, union_dominant,
    TopicCodewords,
};
use dcs_core::descriptors::{ecohog, hog_patch, DescriptorLayout, GradientField};
use dcs_core::lda::{exact_posterior, fit_gibbs, match_topics, GibbsSampler, LdaConfig};
use dcs_core::rng;
use rand::Rng as _;

const GIBBS_TV_MAX: f64 = 0.05;
const GIBBS_SAMPLES: usize = 20_000;
const GIBBS_BURN_IN: usize = 1_000;
const GIBBS_TIME_LIMIT: Duration = Duration::from_secs(30);

const RECOVERY_L1_MAX: f64 = 0.15;
const RECOVERY_SEEDS: u64 = 5;
const RECOVERY_TIME_LIMIT: Duration = Duration::from_secs(120);

const NOISE_EXCLUDED_MIN: f64 = 0.90;
const PLANTED_RETAINED_MIN: f64 = 0.90;
const NOISY_SEEDS: u64 = 10;

const RATIO_MIN: f64 = 0.30;
const RATIO_MAX: f64 = 0.80;

const ECOHOG_FIELDS: usize = 100;

fn report(n: u32, pass: bool, detail: String) {
    println!(
        "criterion {n}: {} ({detail})",
        if pass { "PASS" } else { "FAIL" }
    );
}

/// Noisy corpus shared by the noise-elimination and comparative runs.
fn noisy_spec(seed: u64) -> SynthSpec {
    SynthSpec {
        num_topics: 4,
        num_words: 1600,
        num_docs: 400,
        tokens_per_doc: 20,
        noise_fraction: 0.5,
        noise_rate: 0.1,
        alpha: 0.2,
        beta: 5.0,
        num_views: 1,
        seed,
    }
}

#[test]
fn criterion_1_gibbs_matches_exact_posterior() {
    let start = Instant::now();
    let (corpus, cfg) = cli::gibbs_tv_instance();
    assert_eq!(corpus.num_words, 3);
    assert_eq!(cfg.num_topics, 2);
    let tokens: u64 = corpus.total_tokens();
    assert!(tokens <= 6);
    let exact = exact_posterior(&corpus, &cfg).unwrap();
    let mut sampler = GibbsSampler::new(&corpus, &cfg).unwrap();
    for _ in 0..GIBBS_BURN_IN {
        sampler.sweep();
    }
    let mut counts = vec![0u64; exact.probabilities.len()];
    for _ in 0..GIBBS_SAMPLES {
        sampler.sweep();
        counts[sampler.configuration_index()] += 1;
    }
    let tv = exact.total_variation(&counts);
    let elapsed = start.elapsed();
    let pass = tv < GIBBS_TV_MAX && elapsed < GIBBS_TIME_LIMIT;
    report(
        1,
        pass,
        format!(
            "TV {tv:.4} < {GIBBS_TV_MAX}, {tokens} tokens, {:.2}s",
            elapsed.as_secs_f64()
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_2_topic_recovery() {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for seed in 0..RECOVERY_SEEDS {
        let spec = SynthSpec {
            num_topics: 4,
            num_words: 50,
            num_docs: 200,
            tokens_per_doc: 50,
            noise_fraction: 0.0,
            noise_rate: 0.0,
            seed,
            ..SynthSpec::default()
        };
        let (corpus, truth) = synth_corpus(&spec).unwrap();
        let model = fit_gibbs(
            &corpus,
            &LdaConfig::new(4).with_iterations(1000).with_seed(seed),
        )
        .unwrap();
        let matched = match_topics(&model.phi, &truth.phi[0]);
        assert_eq!(matched.len(), 4);
        for (_, _, l1) in matched {
            worst = worst.max(l1);
        }
    }
    let elapsed = start.elapsed();
    let pass = worst < RECOVERY_L1_MAX && elapsed < RECOVERY_TIME_LIMIT;
    report(
        2,
        pass,
        format!(
            "worst matched L1 {worst:.4} < {RECOVERY_L1_MAX} over {RECOVERY_SEEDS} seeds, {:.1}s",
            elapsed.as_secs_f64()
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_3_noise_elimination() {
    let mut worst_excluded: f64 = 1.0;
    let mut worst_retained: f64 = 1.0;
    for seed in 0..NOISY_SEEDS {
        let spec = noisy_spec(seed);
        let (corpus, truth) = synth_corpus(&spec).unwrap();
        let cfg = LdaConfig::new(spec.num_topics).with_seed(seed);
        let sel = fit_view_selection(&corpus, &cfg, 0.01).unwrap();
        let threshold = sel.dominant.threshold;
        assert_eq!(threshold, compute_threshold(corpus.len(), 0.01));
        let union: HashSet<usize> = sel.dominant.union.iter().copied().collect();

        assert!(!truth.noise_words.is_empty());
        let excluded = truth
            .noise_words
            .iter()
            .filter(|w| !union.contains(w))
            .count();
        let excluded = excluded as f64 / truth.noise_words.len() as f64;

        let strong: HashSet<usize> = truth.topic_word_counts[0]
            .iter()
            .flat_map(|row| {
                row.iter()
                    .enumerate()
                    .filter(|(_, &c)| c > threshold)
                    .map(|(w, _)| w)
            })
            .collect();
        assert!(!strong.is_empty());
        let retained =
            strong.iter().filter(|w| union.contains(w)).count() as f64 / strong.len() as f64;

        worst_excluded = worst_excluded.min(excluded);
        worst_retained = worst_retained.min(retained);
    }
    let pass = worst_excluded >= NOISE_EXCLUDED_MIN && worst_retained >= PLANTED_RETAINED_MIN;
    report(
        3,
        pass,
        format!(
            "worst seed: {:.1}% noise words excluded, {:.1}% strong planted words retained, over {NOISY_SEEDS} seeds",
            100.0 * worst_excluded,
            100.0 * worst_retained
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_4_comparative_accuracy() {
    let mut raw_sum = 0.0;
    let mut dcs_sum = 0.0;
    let mut ratio_lo: f64 = 1.0;
    let mut ratio_hi: f64 = 0.0;
    for seed in 0..NOISY_SEEDS {
        let (corpus, _) = synth_corpus(&noisy_spec(seed)).unwrap();
        let base = PipelineOptions {
            folds: FoldSpec::KFold(5),
            seed,
            ..PipelineOptions::default()
        };
        let raw = evaluate(
            &corpus,
            &PipelineOptions {
                arm: Arm::Raw,
                ..base.clone()
            },
        )
        .unwrap();
        let dcs = evaluate(
            &corpus,
            &PipelineOptions {
                arm: Arm::Dcs,
                ..base
            },
        )
        .unwrap();
        for (r, d) in raw.folds.iter().zip(&dcs.folds) {
            assert_eq!((r.train_size, r.test_size), (d.train_size, d.test_size));
            assert!(d.degenerate.is_none());
            let ratio = d.retained_dims.unwrap() as f64 / dcs.total_dims as f64;
            ratio_lo = ratio_lo.min(ratio);
            ratio_hi = ratio_hi.max(ratio);
        }
        raw_sum += raw.accuracy;
        dcs_sum += dcs.accuracy;
    }
    let (raw_mean, dcs_mean) = (raw_sum / NOISY_SEEDS as f64, dcs_sum / NOISY_SEEDS as f64);
    let accuracy_ok = dcs_mean >= raw_mean;
    let ratio_ok = ratio_lo >= RATIO_MIN && ratio_hi <= RATIO_MAX;
    report(
        4,
        accuracy_ok && ratio_ok,
        format!(
            "dcs mean {dcs_mean:.4} {} raw mean {raw_mean:.4}; retained/total in [{ratio_lo:.3}, {ratio_hi:.3}] {} [{RATIO_MIN}, {RATIO_MAX}]",
            if accuracy_ok { ">=" } else { "<" },
            if ratio_ok { "within" } else { "outside" }
        ),
    );
    assert!(ratio_ok, "dimensionality ratio out of range");
    assert!(accuracy_ok, "dcs mean accuracy below raw");
}

#[test]
fn criterion_5_worked_example() {
    // vw ids index the columns; vw3 and vw6 sit below the threshold of 5
    let mut freq = vec![vec![0u64; 8]; 3];
    for (k, w, f) in [
        (0, 1, 9),
        (0, 3, 2),
        (0, 5, 7),
        (1, 1, 6),
        (1, 2, 8),
        (1, 7, 5),
        (2, 3, 4),
        (2, 6, 3),
        (2, 7, 10),
    ] {
        freq[k][w] = f;
    }
    let tc = TopicCodewords { frequency: freq };
    let ds = select_dominant(&tc, 5).unwrap();
    let union = union_dominant(&ds).unwrap();
    let want_topics = vec![vec![1, 5], vec![1, 2, 7], vec![7]];
    let pass = union == vec![1, 2, 5, 7] && ds.union == union && ds.per_topic == want_topics;
    report(
        5,
        pass,
        format!("union {union:?}, per-topic {:?}", ds.per_topic),
    );
    assert!(pass);
}

#[test]
fn criterion_6_threshold_arithmetic() {
    let t = compute_threshold(5000, 0.01);
    report(6, t == 50, format!("compute_threshold(5000, 0.01) = {t}"));
    assert_eq!(t, 50);
}

fn brute_cooccurrence(field: &GradientField, dx: i64, dy: i64, bins: usize) -> Vec<f64> {
    let (w, h) = (field.width() as i64, field.height() as i64);
    let bin = |x: i64, y: i64| {
        let a = field.orientation_at(x as usize, y as usize);
        ((a / TAU * bins as f64).floor() as usize).min(bins - 1)
    };
    let mut c = vec![0.0; bins * bins];
    for i in 0..bins {
        for j in 0..bins {
            for q in 0..h {
                for p in 0..w {
                    let (p2, q2) = (p + dx, q + dy);
                    let inside = (0..w).contains(&p2) && (0..h).contains(&q2);
                    if inside && bin(p, q) == i && bin(p2, q2) == j {
                        c[i * bins + j] += field.magnitude_at(p as usize, q as usize)
                            + field.magnitude_at(p2 as usize, q2 as usize);
                    }
                }
            }
        }
    }
    c
}

#[test]
fn criterion_7_ecohog_oracle_and_hog_layout() {
    let mut r = rng::seeded(2024);
    let offsets = [(1i64, 0i64), (0, 1)];
    let mut mismatches = 0;
    for _ in 0..ECOHOG_FIELDS {
        let mag: Vec<f64> = (0..64).map(|_| r.random::<f64>() * 5.0).collect();
        let ori: Vec<f64> = (0..64).map(|_| r.random_range(0.0..TAU)).collect();
        let field = GradientField::new(8, 8, mag, ori).unwrap();
        let fast = ecohog(&field, &offsets, 8).unwrap();
        for (o, &(dx, dy)) in offsets.iter().enumerate() {
            if fast.matrices[o] != brute_cooccurrence(&field, dx, dy, 8) {
                mismatches += 1;
            }
        }
    }
    let fields: Vec<GradientField> = (0..3)
        .map(|_| {
            let mag = (0..16).map(|_| r.random::<f64>()).collect();
            let ori = (0..16).map(|_| r.random_range(0.0..TAU)).collect();
            GradientField::new(4, 4, mag, ori).unwrap()
        })
        .collect();
    let hog = hog_patch(&fields, DescriptorLayout::HOG).unwrap();
    let pass = mismatches == 0 && hog.len() == 96;
    report(
        7,
        pass,
        format!(
            "{mismatches} mismatching matrices over {ECOHOG_FIELDS} fields, HOG patch has {} dims",
            hog.len()
        ),
    );
    assert!(pass);
}

fn small_spec(seed: u64) -> SynthSpec {
    SynthSpec {
        num_topics: 3,
        num_words: 90,
        num_docs: 90,
        tokens_per_doc: 30,
        noise_fraction: 0.3,
        noise_rate: 0.1,
        seed,
        ..SynthSpec::default()
    }
}

fn conservation_holds(sampler: &GibbsSampler, corpus: &Corpus, nt: usize) -> bool {
    let (topic_word, topic_total, doc_topic) = sampler.count_tables();
    let nw = corpus.num_words;
    let mut tw = vec![0u32; nt * nw];
    let mut tt = vec![0u32; nt];
    let mut dt = vec![0u32; sampler.tokens().len() * nt];
    for (d, (ws, zs)) in sampler
        .tokens()
        .iter()
        .zip(sampler.assignments())
        .enumerate()
    {
        for (&w, &k) in ws.iter().zip(zs) {
            tw[k * nw + w] += 1;
            tt[k] += 1;
            dt[d * nt + k] += 1;
        }
    }
    let totals = corpus.word_totals();
    let per_word_ok = (0..nw).all(|w| {
        (0..nt)
            .map(|k| u64::from(topic_word[k * nw + w]))
            .sum::<u64>()
            == totals[w]
    });
    tw == topic_word
        && tt == topic_total
        && dt == doc_topic
        && per_word_ok
        && topic_total.iter().map(|&x| u64::from(x)).sum::<u64>() == corpus.total_tokens()
}

fn run_cli(args: &[&str]) -> (i32, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = cli::run(args.iter().copied(), &mut out, &mut err);
    (code, String::from_utf8(out).unwrap())
}

#[test]
fn criterion_8_identity_and_degeneracy_suite() {
    // identity projection
    let (corpus, _) = synth_corpus(&small_spec(3)).unwrap();
    let opts = PipelineOptions {
        folds: FoldSpec::KFold(3),
        seed: 3,
        ..PipelineOptions::default()
    };
    let id = identity_projection_check(&corpus, &opts).unwrap();
    let identity_ok = id.identical && id.raw_accuracy.to_bits() == id.projected_accuracy.to_bits();

    // threshold sweep
    let model = fit_gibbs(
        &corpus,
        &LdaConfig::new(3).with_iterations(200).with_seed(3),
    )
    .unwrap();
    let tc = topic_codewords(&model);
    let max_f = tc.frequency.iter().flatten().copied().max().unwrap();
    let mut prev: Option<Vec<usize>> = None;
    let mut monotone = true;
    for t in 1..=max_f {
        let u = select_dominant(&tc, t).unwrap().union;
        if let Some(p) = &prev {
            let p: HashSet<usize> = p.iter().copied().collect();
            monotone &= u.iter().all(|w| p.contains(w));
        }
        prev = Some(u);
    }
    monotone &= select_dominant(&tc, max_f + 1).is_err();

    // conservation after every sweep
    let cfg = LdaConfig::new(3).with_seed(11);
    let mut sampler = GibbsSampler::new(&corpus, &cfg).unwrap();
    let mut conserved = conservation_holds(&sampler, &corpus, 3);
    for _ in 0..200 {
        sampler.sweep();
        conserved &= conservation_holds(&sampler, &corpus, 3);
    }

    // byte-for-byte determinism through the command line
    let dir = tempfile::tempdir().unwrap();
    let path = |name: &str| dir.path().join(name).to_str().unwrap().to_string();
    let mut deterministic = true;
    for name in ["a.txt", "b.txt"] {
        let (code, _) = run_cli(&[
            "dcs",
            "synth",
            "--topics",
            "3",
            "--vocab",
            "90",
            "--docs",
            "60",
            "--noise-fraction",
            "0.3",
            "--noise-rate",
            "0.1",
            "--seed",
            "7",
            "--out",
            &path(name),
        ]);
        deterministic &= code == 0;
    }
    let read = |name: &str| std::fs::read(path(name)).unwrap();
    deterministic &= read("a.txt") == read("b.txt") && read("a.txt.truth") == read("b.txt.truth");
    for name in ["r1.csv", "r2.csv"] {
        let (code, _) = run_cli(&[
            "dcs",
            "run",
            "--corpus",
            &path("a.txt"),
            "--arm",
            "dcs",
            "--folds",
            "kfold:3",
            "--iterations",
            "100",
            "--seed",
            "5",
            "--out",
            &path(name),
        ]);
        deterministic &= code == 0;
    }
    deterministic &=
        read("r1.csv") == read("r2.csv") && read("r1.csv.dominant") == read("r2.csv.dominant");
    let m1 = fit_gibbs(&corpus, &LdaConfig::new(3).with_iterations(50).with_seed(9)).unwrap();
    let m2 = fit_gibbs(&corpus, &LdaConfig::new(3).with_iterations(50).with_seed(9)).unwrap();
    deterministic &= m1.to_text() == m2.to_text();

    let pass = identity_ok && monotone && conserved && deterministic;
    report(
        8,
        pass,
        format!(
            "identity {identity_ok} (acc {:.4}), monotone sweep {monotone} over 1..={max_f}, conservation {conserved}, determinism {deterministic}",
            id.raw_accuracy
        ),
    );
    assert!(pass);
}

#[test]
fn scaling_counts_keeps_predictions() {
    // multiplying every count by the same integer leaves the Hellinger inputs unchanged
    let (corpus, _) = synth_corpus(&small_spec(8)).unwrap();
    let scaled = Corpus::new(
        corpus
            .vectors
            .iter()
            .map(|v| ActionDescriptorVector {
                counts: v.counts.iter().map(|c| c * 3).collect(),
                ..v.clone()
            })
            .collect(),
        corpus.num_words,
        corpus.num_classes,
        corpus.num_views,
    )
    .unwrap();
    let opts = PipelineOptions {
        arm: Arm::Raw,
        folds: FoldSpec::KFold(3),
        ..PipelineOptions::default()
    };
    let a = evaluate(&corpus, &opts).unwrap();
    let b = evaluate(&scaled, &opts).unwrap();
    assert_eq!(a.confusion, b.confusion);
}
