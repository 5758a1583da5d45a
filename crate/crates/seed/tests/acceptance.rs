//! End-to-end acceptance checks, run as a plain binary (`harness = false`)
//! so every criterion prints exactly one `[PASS]`/`[FAIL]` line, in order,
//! with its runtime. The process exits nonzero if any check fails or runs
//! over its time budget.
//!
//! Covered: graph construction against hand-derived oracle fixtures,
//! representation-size ordering across graph variants, gradient correctness
//! against finite differences, forward-pass invariants, threshold selection
//! against brute force, end-to-end learning on the bundled corpus,
//! run-to-run determinism, and split hygiene.

use std::collections::BTreeSet;
use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use seed::config::RunSettings;
use seed::corpus::{make_splits, scan_corpus, CorpusError, SplitPolicy};
use seed::graph::{build_graph, graph_stats, EdgeType, SemanticGraph, Variant};
use seed::ir::{parse_module, ParseOptions};
use seed::model::{backward_pair, forward_pair, forward_with_tape, EncodedGraph, ModelParams};
use seed::pipeline::{build_graphs, run_training, Dataset};
use seed::train::{evaluate_scores, history_to_jsonl, pair_loss, select_threshold, Label,
                  ScoredPair};
use seed::vocab::Vocabulary;

static LAST_PANIC: Mutex<Option<String>> = Mutex::new(None);

/// Name, runtime budget in seconds, and the check itself; a check panics on
/// failure and returns a one-line summary on success.
type Check = (&'static str, u64, fn() -> String);

fn main() {
    // Capture panic sites instead of letting the default hook spray stderr;
    // the failure line carries the message.
    panic::set_hook(Box::new(|info| {
        *LAST_PANIC.lock().unwrap() = Some(info.to_string().replace('\n', " "));
    }));

    let checks: &[Check] = &[
        ("graph builder matches hand-derived oracles", 1, check_graph_oracles),
        ("variant size ordering (operand nodes, data edges, vocab)", 5, check_size_ordering),
        ("analytic gradients match central finite differences", 60, check_gradients),
        ("forward invariants (self, swap, permutation, attention)", 60, check_forward_invariants),
        ("threshold selection matches brute-force scan", 5, check_threshold_oracle),
        ("default-config training clears F1 gates on bundled corpus", 300, check_learning_smoke),
        ("same-seed runs produce byte-identical outputs", 600, check_determinism),
        ("overlapping splits abort the pipeline", 5, check_split_hygiene),
    ];

    let mut failures = 0;
    for &(name, budget_secs, run) in checks {
        let budget = Duration::from_secs(budget_secs);
        let start = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(run));
        let elapsed = start.elapsed();
        match outcome {
            Ok(detail) if elapsed <= budget => {
                println!("[PASS] {name} — {detail} ({elapsed:.2?})");
            }
            Ok(detail) => {
                failures += 1;
                println!(
                    "[FAIL] {name} — over {budget_secs}s budget: took {elapsed:.2?} ({detail})"
                );
            }
            Err(payload) => {
                failures += 1;
                let msg = LAST_PANIC
                    .lock()
                    .unwrap()
                    .take()
                    .or_else(|| payload.downcast_ref::<String>().cloned())
                    .or_else(|| payload.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_else(|| "panic with non-string payload".to_string());
                println!("[FAIL] {name} — {msg} ({elapsed:.2?})");
            }
        }
    }

    if failures > 0 {
        eprintln!("{failures} of {} acceptance checks failed", checks.len());
        std::process::exit(1);
    }
}

fn testdata(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("testdata").join(rel)
}

/// Each `<fixture>.<variant>.json` under testdata/fixtures is a hand-derived
/// graph for the sibling `<fixture>.ll`; the builder must reproduce it
/// exactly: same node multiset, same edge set over the oracle's node ids.
fn check_graph_oracles() -> String {
    let dir = testdata("fixtures");
    let mut oracle_paths: Vec<PathBuf> = fs::read_dir(&dir)
        .expect("fixtures directory")
        .map(|e| e.expect("directory entry").path())
        .filter(|p| p.extension().is_some_and(|e| e == "json"))
        .collect();
    oracle_paths.sort();
    assert!(oracle_paths.len() >= 10, "need >= 10 oracles, found {}", oracle_paths.len());

    let mut fixtures = BTreeSet::new();
    for path in &oracle_paths {
        let name = path.file_name().unwrap().to_str().unwrap();
        let stem = name.split('.').next().unwrap().to_string();
        let oracle: SemanticGraph =
            serde_json::from_str(&fs::read_to_string(path).expect("read oracle"))
                .unwrap_or_else(|e| panic!("{name}: bad oracle json: {e}"));
        let variant: Variant = oracle.variant.parse().expect("oracle variant");

        let source = fs::read_to_string(dir.join(format!("{stem}.ll")))
            .unwrap_or_else(|e| panic!("{stem}.ll: {e}"));
        let module = parse_module(&source, ParseOptions { strict: true })
            .unwrap_or_else(|e| panic!("{stem}.ll: {e}"));
        let func = module
            .functions
            .iter()
            .find(|f| f.name == oracle.function)
            .unwrap_or_else(|| panic!("{stem}.ll has no function `{}`", oracle.function));
        let built = build_graph(func, variant);

        assert_eq!(built.nodes.len(), oracle.nodes.len(), "{name}: node count");
        for (i, (got, want)) in built.nodes.iter().zip(&oracle.nodes).enumerate() {
            assert_eq!(got.id, i, "{name}: builder node id out of order");
            assert_eq!(want.id, i, "{name}: oracle node id out of order");
            assert_eq!(
                (got.kind, got.token.as_str()),
                (want.kind, want.token.as_str()),
                "{name}: node {i} differs"
            );
        }
        let mut got_multiset: Vec<_> =
            built.nodes.iter().map(|n| (n.kind.as_str(), n.token.as_str())).collect();
        let mut want_multiset: Vec<_> =
            oracle.nodes.iter().map(|n| (n.kind.as_str(), n.token.as_str())).collect();
        got_multiset.sort();
        want_multiset.sort();
        assert_eq!(got_multiset, want_multiset, "{name}: node multiset differs");

        let got_edges: BTreeSet<(usize, usize, bool)> =
            built.edges.iter().map(|e| (e.src, e.dst, e.etype == EdgeType::Data)).collect();
        let want_edges: BTreeSet<(usize, usize, bool)> =
            oracle.edges.iter().map(|e| (e.src, e.dst, e.etype == EdgeType::Data)).collect();
        assert_eq!(got_edges.len(), built.edges.len(), "{name}: builder emitted duplicate edges");
        assert_eq!(want_edges.len(), oracle.edges.len(), "{name}: oracle lists duplicate edges");
        if let Some(missing) = want_edges.difference(&got_edges).next() {
            panic!("{name}: missing edge {missing:?}");
        }
        if let Some(extra) = got_edges.difference(&want_edges).next() {
            panic!("{name}: unexpected edge {extra:?}");
        }
        fixtures.insert(stem);
    }
    format!("{} oracles across {} fixtures", oracle_paths.len(), fixtures.len())
}

/// On the bundled corpus the plain variant must be strictly smaller than the
/// type-annotated one in operand nodes and data-flow edges, and vocabulary
/// must not shrink as value nodes get added.
fn check_size_ordering() -> String {
    let report = scan_corpus(&testdata("corpus"), true).expect("scan bundled corpus");
    let mut operands = Vec::new();
    let mut data_edges = Vec::new();
    let mut vocab_sizes = Vec::new();
    for variant in [Variant::Seed, Variant::SeedType, Variant::SeedIdentifier] {
        let (_, graphs) = build_graphs(&report.index, variant);
        let (mut ops, mut edges) = (0usize, 0usize);
        for g in &graphs {
            let stats = graph_stats(g);
            ops += stats.operand_nodes;
            edges += stats.data_edges;
        }
        operands.push(ops);
        data_edges.push(edges);
        vocab_sizes.push(Vocabulary::from_graphs(graphs.iter()).len());
    }
    assert!(
        operands[0] < operands[1],
        "operand nodes: seed {} !< seed+type {}",
        operands[0],
        operands[1]
    );
    assert!(
        data_edges[0] < data_edges[1],
        "data edges: seed {} !< seed+type {}",
        data_edges[0],
        data_edges[1]
    );
    assert!(
        vocab_sizes[0] <= vocab_sizes[1] && vocab_sizes[1] <= vocab_sizes[2],
        "vocab sizes not ordered: {vocab_sizes:?}"
    );
    format!(
        "operand nodes {}<{}, data edges {}<{}, vocab {:?}",
        operands[0], operands[1], data_edges[0], data_edges[1], vocab_sizes
    )
}

fn random_graph(rng: &mut ChaCha8Rng, vocab_size: usize, n_nodes: usize) -> EncodedGraph {
    let tokens = (0..n_nodes).map(|_| rng.gen_range(0..vocab_size)).collect();
    let n_edges = rng.gen_range(1..=2 * n_nodes);
    let edges = (0..n_edges)
        .map(|_| (rng.gen_range(0..n_nodes), rng.gen_range(0..n_nodes), rng.gen_range(0..2usize)))
        .collect();
    EncodedGraph { tokens, edges }
}

/// Central finite differences over every parameter coordinate must agree
/// with the analytic gradient to a relative error below 1e-3.
fn check_gradients() -> String {
    let cases = 20;
    let step = 1e-4;
    let mut worst = 0.0f64;
    for case in 0..cases {
        let mut rng = ChaCha8Rng::seed_from_u64(case);
        let params = ModelParams::init_uniform(6, 4, 3, 2, case ^ 0x5eed, 0.5);
        let n_a = rng.gen_range(3..=8);
        let n_b = rng.gen_range(3..=8);
        let a = random_graph(&mut rng, params.vocab_size(), n_a);
        let b = random_graph(&mut rng, params.vocab_size(), n_b);

        // Pick a label/margin pair that keeps the hinge active and the probe
        // away from the kink.
        let s = forward_pair(&a, &b, &params).expect("forward").similarity;
        let (label, margin) = if s < 0.4 {
            (Label::Clone, 0.5)
        } else if s <= 0.6 {
            (Label::Clone, 0.9)
        } else {
            (Label::NonClone, 0.5)
        };

        let analytic = backward_pair(&a, &b, label, margin, &params).expect("backward")
            .grads
            .flatten();
        let base = params.flatten();
        let mut work = params.clone();
        let mut flat = base.clone();
        for i in 0..flat.len() {
            flat[i] = base[i] + step;
            work.assign_flat(&flat);
            let up = pair_loss(forward_pair(&a, &b, &work).unwrap().similarity, label, margin);
            flat[i] = base[i] - step;
            work.assign_flat(&flat);
            let down = pair_loss(forward_pair(&a, &b, &work).unwrap().similarity, label, margin);
            flat[i] = base[i];
            let fd = (up - down) / (2.0 * step);
            let scale = fd.abs().max(analytic[i].abs());
            if scale < 1e-6 {
                continue;
            }
            let rel = (fd - analytic[i]).abs() / scale;
            assert!(rel < 1e-3, "case {case}, coordinate {i}: relative error {rel:.3e}");
            worst = worst.max(rel);
        }
    }
    format!("{cases} cases, worst relative error {worst:.2e}")
}

/// Self-similarity, argument-swap symmetry, node-permutation invariance, and
/// attention-row normalization, each over >= 50 random graph pairs.
fn check_forward_invariants() -> String {
    let cases = 50;
    let params = ModelParams::init_uniform(12, 6, 4, 3, 99, 0.5);
    let mut rng = ChaCha8Rng::seed_from_u64(4242);
    for case in 0..cases {
        let n_a = rng.gen_range(3..=10);
        let n_b = rng.gen_range(3..=10);
        let a = random_graph(&mut rng, params.vocab_size(), n_a);
        let b = random_graph(&mut rng, params.vocab_size(), n_b);

        let self_sim = forward_pair(&a, &a, &params).unwrap().similarity;
        assert!((self_sim - 1.0).abs() <= 1e-6, "case {case}: self similarity {self_sim}");

        let ab = forward_pair(&a, &b, &params).unwrap().similarity;
        let ba = forward_pair(&b, &a, &params).unwrap().similarity;
        assert!((ab - ba).abs() <= 1e-6, "case {case}: swap asymmetry {ab} vs {ba}");

        // new node j = old node order[j]; remap tokens and edge endpoints.
        let mut order: Vec<usize> = (0..n_a).collect();
        order.shuffle(&mut rng);
        let mut inverse = vec![0usize; n_a];
        for (new, &old) in order.iter().enumerate() {
            inverse[old] = new;
        }
        let permuted = EncodedGraph {
            tokens: order.iter().map(|&old| a.tokens[old]).collect(),
            edges: a.edges.iter().map(|&(s, d, t)| (inverse[s], inverse[d], t)).collect(),
        };
        let permuted_sim = forward_pair(&permuted, &b, &params).unwrap().similarity;
        assert!(
            (permuted_sim - ab).abs() <= 1e-6,
            "case {case}: permutation changed similarity {ab} -> {permuted_sim}"
        );

        let tape = forward_with_tape(&a, &b, &params).unwrap();
        for round in 0..tape.rounds() {
            let (a_over_b, b_over_a) = tape.attention(round);
            for row in a_over_b.rows().into_iter().chain(b_over_a.rows()) {
                let sum = row.sum();
                assert!(
                    (sum - 1.0).abs() <= 1e-9,
                    "case {case}, round {round}: attention row sums to {sum}"
                );
            }
        }
    }
    format!("{cases} graph pairs, all four invariants hold")
}

/// The selected threshold's F1 must equal the best F1 over every achievable
/// classification: thresholds below all scores, above all scores, at each
/// score, and at each midpoint.
fn check_threshold_oracle() -> String {
    let sets = 120;
    let mut rng = ChaCha8Rng::seed_from_u64(0x7155);
    let mut max_gap = 0.0f64;
    for case in 0..sets {
        let n = rng.gen_range(1..=40);
        let quantize = case % 3 == 0; // force score ties in a third of the sets
        let scored: Vec<ScoredPair> = (0..n)
            .map(|_| {
                let mut score: f64 = rng.gen_range(-1.0..=1.0);
                if quantize {
                    score = (score * 5.0).round() / 5.0;
                }
                let label = if rng.gen_bool(0.5) { Label::Clone } else { Label::NonClone };
                ScoredPair { score, label }
            })
            .collect();

        let theta = select_threshold(&scored);
        let chosen = evaluate_scores(&scored, theta).f1;

        let mut sorted: Vec<f64> = scored.iter().map(|p| p.score).collect();
        sorted.sort_by(f64::total_cmp);
        sorted.dedup();
        let mut candidates = vec![-2.0, 2.0];
        candidates.extend_from_slice(&sorted);
        candidates.extend(sorted.windows(2).map(|w| 0.5 * (w[0] + w[1])));
        let best = candidates
            .iter()
            .map(|&t| evaluate_scores(&scored, t).f1)
            .fold(f64::NEG_INFINITY, f64::max);

        let gap = (chosen - best).abs();
        assert!(gap < 1e-12, "case {case}: selected F1 {chosen} vs brute-force best {best}");
        max_gap = max_gap.max(gap);
    }
    format!("{sets} scored sets, max F1 gap {max_gap:.1e}")
}

fn bundled_settings() -> (seed::corpus::CorpusIndex, RunSettings) {
    let report = scan_corpus(&testdata("corpus"), true).expect("scan bundled corpus");
    let conf = fs::read_to_string(testdata("synth.conf")).expect("read synth.conf");
    let settings = RunSettings::parse(&conf).expect("parse synth.conf");
    (report.index, settings)
}

/// Default hyperparameters on the bundled corpus must clear the F1 gates:
/// validation >= 0.9, held-out-problem test >= 0.7.
fn check_learning_smoke() -> String {
    let (index, settings) = bundled_settings();
    let (_, _, summary) = run_training(&index, &settings).expect("training run");
    assert!(summary.best_val_f1 >= 0.9, "validation F1 {} below 0.9", summary.best_val_f1);
    assert!(summary.test.f1 >= 0.7, "test F1 {} below 0.7", summary.test.f1);
    format!(
        "variant {}, val F1 {:.3} (epoch {}), test F1 {:.3}",
        summary.variant, summary.best_val_f1, summary.best_epoch, summary.test.f1
    )
}

/// Two full runs from the same seed must agree byte for byte: training
/// history, threshold, and evaluation reports.
fn check_determinism() -> String {
    let (index, settings) = bundled_settings();
    let (_, first_out, first_sum) = run_training(&index, &settings).expect("first run");
    let (_, second_out, second_sum) = run_training(&index, &settings).expect("second run");

    let first_history = history_to_jsonl(&first_out.history);
    let second_history = history_to_jsonl(&second_out.history);
    assert_eq!(first_history, second_history, "history files differ");
    assert_eq!(first_out.theta.to_bits(), second_out.theta.to_bits(), "thresholds differ");

    let first_report = serde_json::to_string(&first_sum.test).unwrap();
    let second_report = serde_json::to_string(&second_sum.test).unwrap();
    assert_eq!(first_report, second_report, "eval reports differ");

    let first_full = serde_json::to_string(&first_sum).unwrap();
    let second_full = serde_json::to_string(&second_sum).unwrap();
    assert_eq!(first_full, second_full, "run summaries differ");
    format!("history ({} bytes) and reports identical across runs", first_history.len())
}

/// A problem id in two splits must abort both split construction and the
/// dataset build.
fn check_split_hygiene() -> String {
    let report = scan_corpus(&testdata("corpus"), true).expect("scan bundled corpus");
    let overlapping = SplitPolicy::Explicit {
        train: vec!["1".into(), "2".into()],
        val: vec!["2".into(), "3".into()],
        test: vec!["4".into()],
    };
    let err = make_splits(&report.index, &overlapping).expect_err("overlap must be rejected");
    assert!(
        matches!(&err, CorpusError::OverlappingSplit { problem } if problem == "2"),
        "unexpected error: {err}"
    );

    let settings = RunSettings {
        split: seed::config::SplitDirective::Explicit {
            train: vec!["1".into(), "2".into()],
            val: vec!["2".into(), "3".into()],
            test: vec!["4".into()],
        },
        ..RunSettings::default()
    };
    let build_err = Dataset::build(&report.index, &settings).expect_err("build must abort");
    assert!(
        matches!(
            &build_err,
            seed::pipeline::PipelineError::Corpus(CorpusError::OverlappingSplit { problem })
                if problem == "2"
        ),
        "unexpected error: {build_err}"
    );
    "make_splits and Dataset::build both reject problem `2` in two splits".to_string()
}
