//! On-disk corpus handling: scanning `root/<problem-id>/<snippet-id>.ll`
//! trees, sampling labeled pairs at a 1:1 clone/non-clone ratio, and
//! building problem-disjoint train/val/test splits.
//!
//! Everything here is deterministic: directory entries are sorted, pair
//! pools are enumerated in sorted order, and all sampling is driven by a
//! caller-supplied seed.

use std::collections::BTreeMap;
use std::fmt;
use std::io;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::ir::{parse_module, IrFunction, ParseOptions};
use crate::train::Label;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    /// Strict-mode scan failure: the file cannot join the corpus.
    #[error("{path}: {reason}")]
    BadSnippet { path: PathBuf, reason: String },
    #[error("corpus contains no parseable snippets")]
    EmptyCorpus,
    /// One of the label classes has no candidate pairs at all.
    #[error("cannot sample pairs: no {class} pairs available")]
    InsufficientPairs { class: &'static str },
    #[error("problem `{problem}` appears in more than one split")]
    OverlappingSplit { problem: String },
    #[error("split references unknown problem `{problem}`")]
    UnknownProblem { problem: String },
    #[error("invalid split: {0}")]
    BadSplit(String),
    #[error("pair list line {line}: {reason}")]
    PairList { line: usize, reason: String },
}

/// One parsed corpus entry.
#[derive(Debug, Clone)]
pub struct Snippet {
    pub id: String,
    pub path: PathBuf,
    pub function: IrFunction,
}

/// Sorted problem → snippets mapping.
#[derive(Debug, Clone, Default)]
pub struct CorpusIndex {
    problems: BTreeMap<String, Vec<Snippet>>,
}

impl CorpusIndex {
    pub fn problem_ids(&self) -> impl Iterator<Item = &str> {
        self.problems.keys().map(String::as_str)
    }

    pub fn problem_count(&self) -> usize {
        self.problems.len()
    }

    pub fn snippet_count(&self) -> usize {
        self.problems.values().map(Vec::len).sum()
    }

    pub fn snippets(&self, problem: &str) -> &[Snippet] {
        self.problems.get(problem).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn contains_problem(&self, problem: &str) -> bool {
        self.problems.contains_key(problem)
    }

    /// All (problem, snippet) entries in sorted order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, &Snippet)> {
        self.problems.iter().flat_map(|(p, snips)| snips.iter().map(move |s| (p.as_str(), s)))
    }

    pub fn get(&self, key: &SnippetKey) -> Option<&Snippet> {
        self.snippets(&key.problem).iter().find(|s| s.id == key.snippet)
    }
}

/// A file the scanner could not ingest (lenient mode only).
#[derive(Debug, Clone)]
pub struct SkipEntry {
    pub path: PathBuf,
    pub reason: String,
}

/// Scan outcome: the index plus whatever was skipped.
#[derive(Debug, Clone)]
pub struct ScanReport {
    pub index: CorpusIndex,
    pub skipped: Vec<SkipEntry>,
}

fn sorted_entries(dir: &Path) -> Result<Vec<PathBuf>, CorpusError> {
    let entries = std::fs::read_dir(dir)
        .map_err(|source| CorpusError::Io { path: dir.to_path_buf(), source })?;
    let mut paths = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|source| CorpusError::Io { path: dir.to_path_buf(), source })?;
        paths.push(entry.path());
    }
    paths.sort();
    Ok(paths)
}

/// Pick the function a snippet file stands for: `main` if present, else the
/// first definition.
fn representative(module: crate::ir::ParsedModule) -> Option<IrFunction> {
    let mut functions = module.functions;
    if let Some(pos) = functions.iter().position(|f| f.name == "main") {
        return Some(functions.swap_remove(pos));
    }
    functions.into_iter().next()
}

/// Walk `root/<problem-id>/<snippet-id>.ll` and parse every snippet.
///
/// Under `strict`, any unparseable file aborts the scan; otherwise it lands
/// in the skip report. Ids must be usable in the whitespace-separated pair
/// list format, so ids containing whitespace or `/` are rejected.
pub fn scan_corpus(root: &Path, strict: bool) -> Result<ScanReport, CorpusError> {
    let mut index = CorpusIndex::default();
    let mut skipped = Vec::new();
    let opts = ParseOptions { strict };

    let mut skip = |path: &Path, reason: String| -> Result<(), CorpusError> {
        if strict {
            Err(CorpusError::BadSnippet { path: path.to_path_buf(), reason })
        } else {
            skipped.push(SkipEntry { path: path.to_path_buf(), reason });
            Ok(())
        }
    };

    for problem_dir in sorted_entries(root)? {
        if !problem_dir.is_dir() {
            continue;
        }
        let Some(problem_id) = problem_dir.file_name().and_then(|n| n.to_str()) else {
            skip(&problem_dir, "problem directory name is not valid UTF-8".into())?;
            continue;
        };
        if !valid_id(problem_id) {
            skip(&problem_dir, format!("unusable problem id `{problem_id}`"))?;
            continue;
        }
        let problem_id = problem_id.to_string();

        for file in sorted_entries(&problem_dir)? {
            if file.extension().and_then(|e| e.to_str()) != Some("ll") || !file.is_file() {
                continue;
            }
            let Some(snippet_id) = file.file_stem().and_then(|n| n.to_str()) else {
                skip(&file, "snippet file name is not valid UTF-8".into())?;
                continue;
            };
            if !valid_id(snippet_id) {
                skip(&file, format!("unusable snippet id `{snippet_id}`"))?;
                continue;
            }
            let source = std::fs::read_to_string(&file)
                .map_err(|source| CorpusError::Io { path: file.clone(), source })?;
            let function = match parse_module(&source, opts) {
                Ok(module) => match representative(module) {
                    Some(f) => f,
                    None => {
                        skip(&file, "no function definitions".into())?;
                        continue;
                    }
                },
                Err(e) => {
                    skip(&file, e.to_string())?;
                    continue;
                }
            };
            index
                .problems
                .entry(problem_id.clone())
                .or_default()
                .push(Snippet { id: snippet_id.to_string(), path: file, function });
        }
    }

    if index.snippet_count() == 0 {
        return Err(CorpusError::EmptyCorpus);
    }
    Ok(ScanReport { index, skipped })
}

fn valid_id(id: &str) -> bool {
    !id.is_empty() && !id.contains(char::is_whitespace) && !id.contains('/')
}

/// `problem/snippet` reference, ordered for canonical unordered pairs.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SnippetKey {
    pub problem: String,
    pub snippet: String,
}

impl fmt::Display for SnippetKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.problem, self.snippet)
    }
}

impl SnippetKey {
    pub fn new(problem: impl Into<String>, snippet: impl Into<String>) -> SnippetKey {
        SnippetKey { problem: problem.into(), snippet: snippet.into() }
    }

    /// Parse `problem/snippet`.
    pub fn parse(text: &str) -> Option<SnippetKey> {
        let (problem, snippet) = text.split_once('/')?;
        if problem.is_empty() || snippet.is_empty() || snippet.contains('/') {
            return None;
        }
        Some(SnippetKey::new(problem, snippet))
    }
}

/// An unordered labeled pair, canonicalized so `a <= b`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CodePair {
    pub a: SnippetKey,
    pub b: SnippetKey,
    pub label: Label,
}

impl CodePair {
    pub fn new(a: SnippetKey, b: SnippetKey, label: Label) -> CodePair {
        if a <= b {
            CodePair { a, b, label }
        } else {
            CodePair { a: b, b: a, label }
        }
    }
}

fn pick<T: Clone>(pool: &[T], amount: usize, rng: &mut ChaCha8Rng) -> Vec<T> {
    if pool.len() <= amount {
        return pool.to_vec();
    }
    let mut indices = rand::seq::index::sample(rng, pool.len(), amount).into_vec();
    indices.sort_unstable();
    indices.into_iter().map(|i| pool[i].clone()).collect()
}

/// Sample up to `n_pairs` labeled pairs from the given problems at a
/// 1:1 (±1 when `n_pairs` is odd) clone/non-clone ratio.
///
/// Clone pairs are distinct snippets of one problem; non-clone pairs cross
/// problems, drawn uniformly over snippet pairs. If a class pool is smaller
/// than its share, the whole pool is taken (so fewer than `n_pairs` pairs
/// come back); an empty class pool is an error.
pub fn sample_pairs(
    index: &CorpusIndex,
    problems: &[String],
    n_pairs: usize,
    seed: u64,
) -> Result<Vec<CodePair>, CorpusError> {
    let mut ids: Vec<&String> = problems.iter().collect();
    ids.sort();
    ids.dedup();
    for id in &ids {
        if !index.contains_problem(id) {
            return Err(CorpusError::UnknownProblem { problem: (*id).clone() });
        }
    }

    let mut clone_pool = Vec::new();
    for &problem in &ids {
        let snippets = index.snippets(problem);
        for i in 0..snippets.len() {
            for j in i + 1..snippets.len() {
                clone_pool.push(CodePair::new(
                    SnippetKey::new(problem.clone(), snippets[i].id.clone()),
                    SnippetKey::new(problem.clone(), snippets[j].id.clone()),
                    Label::Clone,
                ));
            }
        }
    }
    let mut nonclone_pool = Vec::new();
    for i in 0..ids.len() {
        for j in i + 1..ids.len() {
            for s in index.snippets(ids[i]) {
                for t in index.snippets(ids[j]) {
                    nonclone_pool.push(CodePair::new(
                        SnippetKey::new(ids[i].clone(), s.id.clone()),
                        SnippetKey::new(ids[j].clone(), t.id.clone()),
                        Label::NonClone,
                    ));
                }
            }
        }
    }
    if clone_pool.is_empty() {
        return Err(CorpusError::InsufficientPairs { class: "clone" });
    }
    if nonclone_pool.is_empty() {
        return Err(CorpusError::InsufficientPairs { class: "non-clone" });
    }

    let clone_target = n_pairs / 2 + n_pairs % 2;
    let nonclone_target = n_pairs / 2;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pairs = pick(&clone_pool, clone_target, &mut rng);
    pairs.extend(pick(&nonclone_pool, nonclone_target, &mut rng));
    Ok(pairs)
}

/// Problem-disjoint split of the corpus.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitSpec {
    pub train: Vec<String>,
    pub val: Vec<String>,
    pub test: Vec<String>,
}

impl SplitSpec {
    pub fn part(&self, name: &str) -> Option<&[String]> {
        match name {
            "train" => Some(&self.train),
            "val" => Some(&self.val),
            "test" => Some(&self.test),
            _ => None,
        }
    }
}

/// How to derive a split: explicit problem-id lists, or a seeded ratio.
#[derive(Debug, Clone, PartialEq)]
pub enum SplitPolicy {
    Explicit { train: Vec<String>, val: Vec<String>, test: Vec<String> },
    Ratio { train: f64, val: f64, test: f64, seed: u64 },
}

/// Validate and materialize a split. Explicit lists must name existing
/// problems and be pairwise disjoint; ratio splits shuffle problems with the
/// seed and carve them into three non-empty sets.
pub fn make_splits(index: &CorpusIndex, policy: &SplitPolicy) -> Result<SplitSpec, CorpusError> {
    match policy {
        SplitPolicy::Explicit { train, val, test } => {
            let mut seen = std::collections::BTreeSet::new();
            for part in [train, val, test] {
                for id in part {
                    if !index.contains_problem(id) {
                        return Err(CorpusError::UnknownProblem { problem: id.clone() });
                    }
                    if !seen.insert(id.clone()) {
                        return Err(CorpusError::OverlappingSplit { problem: id.clone() });
                    }
                }
            }
            let mut spec = SplitSpec { train: train.clone(), val: val.clone(), test: test.clone() };
            spec.train.sort();
            spec.val.sort();
            spec.test.sort();
            Ok(spec)
        }
        SplitPolicy::Ratio { train, val, test, seed } => {
            for (name, r) in [("train", train), ("val", val), ("test", test)] {
                if !(r.is_finite() && *r > 0.0) {
                    return Err(CorpusError::BadSplit(format!(
                        "{name} ratio must be positive, got {r}"
                    )));
                }
            }
            let total = train + val + test;
            let n = index.problem_count();
            if n < 3 {
                return Err(CorpusError::BadSplit(format!(
                    "need at least 3 problems to split, corpus has {n}"
                )));
            }
            let mut ids: Vec<String> = index.problem_ids().map(String::from).collect();
            use rand::seq::SliceRandom;
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            ids.shuffle(&mut rng);

            let mut n_train = ((n as f64) * train / total).round() as usize;
            let mut n_val = ((n as f64) * val / total).round() as usize;
            n_train = n_train.clamp(1, n - 2);
            n_val = n_val.clamp(1, n - n_train - 1);
            let mut spec = SplitSpec {
                train: ids[..n_train].to_vec(),
                val: ids[n_train..n_train + n_val].to_vec(),
                test: ids[n_train + n_val..].to_vec(),
            };
            spec.train.sort();
            spec.val.sort();
            spec.test.sort();
            Ok(spec)
        }
    }
}

/// Serialize pairs as `problemA/snippetA problemB/snippetB label` lines.
pub fn write_pair_list(pairs: &[CodePair]) -> String {
    let mut out = String::new();
    for p in pairs {
        out.push_str(&format!("{} {} {}\n", p.a, p.b, p.label.bit()));
    }
    out
}

/// Parse a persisted pair list; the inverse of [`write_pair_list`].
pub fn parse_pair_list(text: &str) -> Result<Vec<CodePair>, CorpusError> {
    let mut pairs = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(CorpusError::PairList {
                line,
                reason: format!("expected 3 fields, found {}", fields.len()),
            });
        }
        let a = SnippetKey::parse(fields[0]).ok_or_else(|| CorpusError::PairList {
            line,
            reason: format!("bad snippet reference `{}`", fields[0]),
        })?;
        let b = SnippetKey::parse(fields[1]).ok_or_else(|| CorpusError::PairList {
            line,
            reason: format!("bad snippet reference `{}`", fields[1]),
        })?;
        let label = match fields[2] {
            "1" => Label::Clone,
            "0" => Label::NonClone,
            other => {
                return Err(CorpusError::PairList {
                    line,
                    reason: format!("label must be 0 or 1, found `{other}`"),
                })
            }
        };
        if a == b {
            return Err(CorpusError::PairList {
                line,
                reason: "a pair must reference two distinct snippets".into(),
            });
        }
        pairs.push(CodePair::new(a, b, label));
    }
    Ok(pairs)
}
