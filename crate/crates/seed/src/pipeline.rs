//! End-to-end orchestration: corpus index → semantic graphs → vocabulary →
//! encoded pair datasets → trained model → evaluation report.
//!
//! The vocabulary is built from the training problems only, so evaluation
//! snippets exercise the unknown-token path exactly as unseen code would.

use serde::Serialize;
use thiserror::Error;

use crate::config::RunSettings;
use crate::corpus::{make_splits, sample_pairs, CorpusError, CorpusIndex, SnippetKey, SplitSpec};
use crate::graph::{build_graph, SemanticGraph, Variant};
use crate::model::{EncodedGraph, ModelError};
use crate::train::{
    evaluate_scores, score_pairs, train, EvalReport, TrainError, TrainOutcome, TrainPair,
};
use crate::vocab::Vocabulary;

/// Seed offsets so the three splits draw distinct pair samples from one
/// run seed.
const TRAIN_SALT: u64 = 0;
const VAL_SALT: u64 = 1;
const TEST_SALT: u64 = 2;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("snippet {0} is not in the corpus")]
    UnknownSnippet(SnippetKey),
}

/// Every snippet of the corpus as an indexed, encoded graph, plus the pair
/// datasets for the three splits.
#[derive(Debug, Clone)]
pub struct Dataset {
    /// Sorted snippet keys; all index-based fields refer to this order.
    pub keys: Vec<SnippetKey>,
    pub graphs: Vec<SemanticGraph>,
    pub encoded: Vec<EncodedGraph>,
    pub vocab: Vocabulary,
    pub split: SplitSpec,
    pub train_pairs: Vec<TrainPair>,
    pub val_pairs: Vec<TrainPair>,
    pub test_pairs: Vec<TrainPair>,
}

/// Build the semantic graph of every snippet, in the index's sorted order.
pub fn build_graphs(index: &CorpusIndex, variant: Variant) -> (Vec<SnippetKey>, Vec<SemanticGraph>) {
    let mut keys = Vec::with_capacity(index.snippet_count());
    let mut graphs = Vec::with_capacity(index.snippet_count());
    for (problem, snippet) in index.iter() {
        keys.push(SnippetKey::new(problem, &snippet.id));
        graphs.push(build_graph(&snippet.function, variant));
    }
    (keys, graphs)
}

fn index_of(keys: &[SnippetKey], key: &SnippetKey) -> Result<usize, PipelineError> {
    keys.binary_search(key).map_err(|_| PipelineError::UnknownSnippet(key.clone()))
}

/// Sample labeled pairs from `problems` and resolve them to graph indices.
pub fn sample_index_pairs(
    index: &CorpusIndex,
    keys: &[SnippetKey],
    problems: &[String],
    n_pairs: usize,
    seed: u64,
) -> Result<Vec<TrainPair>, PipelineError> {
    let pairs = sample_pairs(index, problems, n_pairs, seed)?;
    pairs
        .into_iter()
        .map(|p| {
            Ok(TrainPair { a: index_of(keys, &p.a)?, b: index_of(keys, &p.b)?, label: p.label })
        })
        .collect()
}

impl Dataset {
    /// Split the corpus, build graphs, fit the vocabulary on the training
    /// problems, and sample the three pair datasets.
    pub fn build(index: &CorpusIndex, settings: &RunSettings) -> Result<Dataset, PipelineError> {
        let seed = settings.train.seed;
        let split = make_splits(index, &settings.split.to_policy(seed))?;
        let (keys, graphs) = build_graphs(index, settings.variant);

        let train_set: Vec<&SemanticGraph> = keys
            .iter()
            .zip(&graphs)
            .filter(|(k, _)| split.train.contains(&k.problem))
            .map(|(_, g)| g)
            .collect();
        let vocab = Vocabulary::from_graphs(train_set);
        let encoded: Vec<EncodedGraph> =
            graphs.iter().map(|g| EncodedGraph::new(g, &vocab)).collect();

        let train_pairs = sample_index_pairs(
            index,
            &keys,
            &split.train,
            settings.pairs_train,
            seed.wrapping_add(TRAIN_SALT),
        )?;
        let val_pairs = sample_index_pairs(
            index,
            &keys,
            &split.val,
            settings.pairs_eval,
            seed.wrapping_add(VAL_SALT),
        )?;
        let test_pairs = sample_index_pairs(
            index,
            &keys,
            &split.test,
            settings.pairs_eval,
            seed.wrapping_add(TEST_SALT),
        )?;

        Ok(Dataset { keys, graphs, encoded, vocab, split, train_pairs, val_pairs, test_pairs })
    }
}

/// Flat summary of a full train/evaluate run, ready to serialize.
#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub variant: String,
    pub problems: usize,
    pub snippets: usize,
    pub vocab_size: usize,
    pub train_pairs: usize,
    pub val_pairs: usize,
    pub test_pairs: usize,
    pub best_epoch: usize,
    pub best_val_f1: f64,
    pub theta: f64,
    pub test: EvalReport,
}

/// Train on the dataset and score the held-out test pairs.
pub fn run_training(
    index: &CorpusIndex,
    settings: &RunSettings,
) -> Result<(Dataset, TrainOutcome, RunSummary), PipelineError> {
    let dataset = Dataset::build(index, settings)?;
    let outcome = train(
        &dataset.encoded,
        &dataset.train_pairs,
        &dataset.val_pairs,
        dataset.vocab.len(),
        &settings.train,
    )?;
    let scored = score_pairs(&dataset.encoded, &dataset.test_pairs, &outcome.params)?;
    let test = evaluate_scores(&scored, outcome.theta);
    let summary = RunSummary {
        variant: settings.variant.as_str().to_string(),
        problems: index.problem_count(),
        snippets: index.snippet_count(),
        vocab_size: dataset.vocab.len(),
        train_pairs: dataset.train_pairs.len(),
        val_pairs: dataset.val_pairs.len(),
        test_pairs: dataset.test_pairs.len(),
        best_epoch: outcome.best_epoch,
        best_val_f1: outcome.best_val_f1,
        theta: outcome.theta,
        test,
    };
    Ok((dataset, outcome, summary))
}

/// Score pairs from one named split with an already-trained model whose
/// vocabulary travels with it.
#[allow(clippy::too_many_arguments)]
pub fn evaluate_split(
    index: &CorpusIndex,
    variant: Variant,
    vocab: &Vocabulary,
    params: &crate::model::ModelParams,
    theta: f64,
    split: &SplitSpec,
    part: &str,
    n_pairs: usize,
    seed: u64,
) -> Result<EvalReport, PipelineError> {
    let problems = split
        .part(part)
        .ok_or_else(|| CorpusError::BadSplit(format!("unknown split `{part}`")))?;
    let (keys, graphs) = build_graphs(index, variant);
    let encoded: Vec<EncodedGraph> = graphs.iter().map(|g| EncodedGraph::new(g, vocab)).collect();
    let salt = match part {
        "train" => TRAIN_SALT,
        "val" => VAL_SALT,
        _ => TEST_SALT,
    };
    let pairs =
        sample_index_pairs(index, &keys, problems, n_pairs, seed.wrapping_add(salt))?;
    let scored = score_pairs(&encoded, &pairs, params)?;
    Ok(evaluate_scores(&scored, theta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::SplitDirective;
    use crate::corpus::scan_corpus;
    use crate::synth::{write_corpus, SynthSpec};
    use crate::train::TrainConfig;

    fn small_settings() -> RunSettings {
        RunSettings {
            train: TrainConfig {
                epochs: 2,
                iterations: 2,
                embed_dim: 8,
                edge_dim: 8,
                ..TrainConfig::default()
            },
            variant: Variant::Seed,
            split: SplitDirective::Explicit {
                train: vec!["1".into(), "2".into(), "3".into(), "4".into()],
                val: vec!["5".into(), "6".into()],
                test: vec!["7".into(), "8".into()],
            },
            pairs_train: 24,
            pairs_eval: 12,
        }
    }

    fn synth_index(dir: &std::path::Path) -> CorpusIndex {
        write_corpus(dir, SynthSpec::default()).unwrap();
        scan_corpus(dir, true).unwrap().index
    }

    #[test]
    fn dataset_respects_split_and_counts() {
        let dir = tempfile::tempdir().unwrap();
        let index = synth_index(dir.path());
        let ds = Dataset::build(&index, &small_settings()).unwrap();

        assert_eq!(ds.keys.len(), 64);
        assert_eq!(ds.graphs.len(), 64);
        assert_eq!(ds.train_pairs.len(), 24);
        assert_eq!(ds.val_pairs.len(), 12);
        assert_eq!(ds.test_pairs.len(), 12);
        assert_eq!(ds.split.train, vec!["1", "2", "3", "4"]);

        // Pairs stay within their split's problems.
        for p in &ds.val_pairs {
            for idx in [p.a, p.b] {
                assert!(["5", "6"].contains(&ds.keys[idx].problem.as_str()));
            }
        }
        for p in &ds.test_pairs {
            for idx in [p.a, p.b] {
                assert!(["7", "8"].contains(&ds.keys[idx].problem.as_str()));
            }
        }
    }

    #[test]
    fn vocabulary_comes_from_training_problems_only() {
        let dir = tempfile::tempdir().unwrap();
        let index = synth_index(dir.path());
        let ds = Dataset::build(&index, &small_settings()).unwrap();

        let all_vocab = Vocabulary::from_graphs(ds.graphs.iter());
        let train_graphs: Vec<&SemanticGraph> = ds
            .keys
            .iter()
            .zip(&ds.graphs)
            .filter(|(k, _)| ds.split.train.contains(&k.problem))
            .map(|(_, g)| g)
            .collect();
        assert_eq!(ds.vocab, Vocabulary::from_graphs(train_graphs));
        // The held-out problems contribute at least one unseen token
        // (synthetic templates 5-8 use opcodes the first four never emit).
        assert!(all_vocab.len() > ds.vocab.len());
    }

    #[test]
    fn dataset_build_is_deterministic() {
        let dir = tempfile::tempdir().unwrap();
        let index = synth_index(dir.path());
        let a = Dataset::build(&index, &small_settings()).unwrap();
        let b = Dataset::build(&index, &small_settings()).unwrap();
        assert_eq!(a.keys, b.keys);
        assert_eq!(a.train_pairs, b.train_pairs);
        assert_eq!(a.val_pairs, b.val_pairs);
        assert_eq!(a.test_pairs, b.test_pairs);
    }

    #[test]
    fn short_training_run_completes() {
        let dir = tempfile::tempdir().unwrap();
        let index = synth_index(dir.path());
        let settings = small_settings();
        let (ds, outcome, summary) = run_training(&index, &settings).unwrap();
        assert_eq!(outcome.history.len(), 2);
        assert_eq!(summary.snippets, 64);
        assert_eq!(summary.vocab_size, ds.vocab.len());
        assert!(summary.theta >= -1.0 && summary.theta <= 1.0);
        assert_eq!(summary.test.tp + summary.test.fp + summary.test.tn + summary.test.fn_, 12);
    }

    #[test]
    fn evaluate_split_matches_run_summary() {
        let dir = tempfile::tempdir().unwrap();
        let index = synth_index(dir.path());
        let settings = small_settings();
        let (ds, outcome, summary) = run_training(&index, &settings).unwrap();
        let report = evaluate_split(
            &index,
            settings.variant,
            &ds.vocab,
            &outcome.params,
            outcome.theta,
            &ds.split,
            "test",
            settings.pairs_eval,
            settings.train.seed,
        )
        .unwrap();
        assert_eq!(report, summary.test);
    }
}
