//! Plain-text `key=value` run configuration.
//!
//! Lines are `key = value`, `#` starts a comment, blank lines are ignored.
//! Unknown and duplicate keys are rejected so typos fail loudly instead of
//! silently training with defaults.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::corpus::SplitPolicy;
use crate::graph::Variant;
use crate::train::TrainConfig;

#[derive(Debug, Error, PartialEq, Eq)]
#[error("config line {line}: {message}")]
pub struct ConfigError {
    pub line: usize,
    pub message: String,
}

fn err(line: usize, message: impl Into<String>) -> ConfigError {
    ConfigError { line, message: message.into() }
}

/// Split request as written in the config; the run seed is injected when it
/// becomes a [`SplitPolicy`].
#[derive(Debug, Clone, PartialEq)]
pub enum SplitDirective {
    Ratio { train: f64, val: f64, test: f64 },
    Explicit { train: Vec<String>, val: Vec<String>, test: Vec<String> },
}

impl SplitDirective {
    /// Bind the run seed, producing the policy the corpus layer consumes.
    pub fn to_policy(&self, seed: u64) -> SplitPolicy {
        match self {
            SplitDirective::Ratio { train, val, test } => {
                SplitPolicy::Ratio { train: *train, val: *val, test: *test, seed }
            }
            SplitDirective::Explicit { train, val, test } => SplitPolicy::Explicit {
                train: train.clone(),
                val: val.clone(),
                test: test.clone(),
            },
        }
    }
}

/// Everything a training or evaluation run needs beyond the corpus path.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSettings {
    pub train: TrainConfig,
    pub variant: Variant,
    pub split: SplitDirective,
    pub pairs_train: usize,
    pub pairs_eval: usize,
}

impl Default for RunSettings {
    fn default() -> Self {
        RunSettings {
            train: TrainConfig::default(),
            variant: Variant::Seed,
            split: SplitDirective::Ratio { train: 0.6, val: 0.2, test: 0.2 },
            pairs_train: 128,
            pairs_eval: 64,
        }
    }
}

impl RunSettings {
    pub fn parse(text: &str) -> Result<RunSettings, ConfigError> {
        let mut settings = RunSettings::default();
        let mut seen = BTreeSet::new();
        let mut ratio: Option<(usize, (f64, f64, f64))> = None;
        let mut train_ids: Option<Vec<String>> = None;
        let mut val_ids: Option<Vec<String>> = None;
        let mut test_ids: Option<Vec<String>> = None;
        let mut explicit_line = 0;

        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let stripped = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            };
            let stripped = stripped.trim();
            if stripped.is_empty() {
                continue;
            }
            let Some((key, value)) = stripped.split_once('=') else {
                return Err(err(line, format!("expected `key = value`, found `{stripped}`")));
            };
            let key = key.trim();
            let value = value.trim();
            if key.is_empty() {
                return Err(err(line, "missing key before `=`"));
            }
            if value.is_empty() {
                return Err(err(line, format!("key `{key}` has no value")));
            }
            if !seen.insert(key.to_string()) {
                return Err(err(line, format!("duplicate key `{key}`")));
            }

            match key {
                "epochs" => settings.train.epochs = positive_int(key, value, line)?,
                "batch_size" => settings.train.batch_size = positive_int(key, value, line)?,
                "patience" => settings.train.patience = positive_int(key, value, line)?,
                "iterations" => settings.train.iterations = positive_int(key, value, line)?,
                "embed_dim" => settings.train.embed_dim = positive_int(key, value, line)?,
                "edge_dim" => settings.train.edge_dim = positive_int(key, value, line)?,
                "pairs_train" => settings.pairs_train = positive_int(key, value, line)?,
                "pairs_eval" => settings.pairs_eval = positive_int(key, value, line)?,
                "seed" => {
                    settings.train.seed = value
                        .parse()
                        .map_err(|_| err(line, format!("`{key}` must be an integer")))?;
                }
                "learning_rate" => {
                    let lr: f64 = float(key, value, line)?;
                    if lr < 0.0 {
                        return Err(err(line, "`learning_rate` must be non-negative"));
                    }
                    settings.train.learning_rate = lr;
                }
                "margin" => {
                    let m: f64 = float(key, value, line)?;
                    if !(m > 0.0 && m < 2.0) {
                        return Err(err(line, "`margin` must lie in (0, 2)"));
                    }
                    settings.train.margin = m;
                }
                "variant" => {
                    settings.variant = value.parse().map_err(|e| err(line, e))?;
                }
                "split_ratio" => {
                    let parts: Vec<f64> = value
                        .split(',')
                        .map(|p| float(key, p.trim(), line))
                        .collect::<Result<_, _>>()?;
                    if parts.len() != 3 {
                        return Err(err(
                            line,
                            "`split_ratio` expects three comma-separated shares",
                        ));
                    }
                    if parts.iter().any(|r| *r <= 0.0) {
                        return Err(err(line, "`split_ratio` shares must be positive"));
                    }
                    ratio = Some((line, (parts[0], parts[1], parts[2])));
                }
                "train_problems" => {
                    train_ids = Some(expand_ids(value, line)?);
                    explicit_line = line;
                }
                "val_problems" => {
                    val_ids = Some(expand_ids(value, line)?);
                    explicit_line = line;
                }
                "test_problems" => {
                    test_ids = Some(expand_ids(value, line)?);
                    explicit_line = line;
                }
                other => return Err(err(line, format!("unknown key `{other}`"))),
            }
        }

        let any_explicit = train_ids.is_some() || val_ids.is_some() || test_ids.is_some();
        if let Some((line, _)) = ratio {
            if any_explicit {
                return Err(err(
                    line,
                    "`split_ratio` conflicts with explicit `*_problems` lists",
                ));
            }
        }
        if any_explicit {
            match (train_ids, val_ids, test_ids) {
                (Some(train), Some(val), Some(test)) => {
                    settings.split = SplitDirective::Explicit { train, val, test };
                }
                _ => {
                    return Err(err(
                        explicit_line,
                        "explicit splits need all of train_problems, val_problems, \
                         and test_problems",
                    ))
                }
            }
        } else if let Some((_, (train, val, test))) = ratio {
            settings.split = SplitDirective::Ratio { train, val, test };
        }

        Ok(settings)
    }
}

fn positive_int(key: &str, value: &str, line: usize) -> Result<usize, ConfigError> {
    let n: usize =
        value.parse().map_err(|_| err(line, format!("`{key}` must be a positive integer")))?;
    if n == 0 {
        return Err(err(line, format!("`{key}` must be positive")));
    }
    Ok(n)
}

fn float(key: &str, value: &str, line: usize) -> Result<f64, ConfigError> {
    let v: f64 = value.parse().map_err(|_| err(line, format!("`{key}` must be a number")))?;
    if !v.is_finite() {
        return Err(err(line, format!("`{key}` must be finite")));
    }
    Ok(v)
}

/// Maximum ids a single `a-b` range may expand to; keeps hostile configs from
/// allocating unbounded memory.
const MAX_RANGE: u64 = 10_000;

/// Expand `1-4,7,weird-id` into problem-id strings. A segment is a numeric
/// range when both sides of a single `-` parse as integers; anything else is
/// taken literally.
fn expand_ids(value: &str, line: usize) -> Result<Vec<String>, ConfigError> {
    let mut ids = Vec::new();
    for segment in value.split(',') {
        let segment = segment.trim();
        if segment.is_empty() {
            return Err(err(line, "empty problem-id segment"));
        }
        if let Some((lo, hi)) = segment.split_once('-') {
            if let (Ok(lo), Ok(hi)) = (lo.trim().parse::<u64>(), hi.trim().parse::<u64>()) {
                if lo > hi {
                    return Err(err(line, format!("range `{segment}` runs backwards")));
                }
                if hi - lo >= MAX_RANGE {
                    return Err(err(line, format!("range `{segment}` is too large")));
                }
                ids.extend((lo..=hi).map(|n| n.to_string()));
                continue;
            }
        }
        ids.push(segment.to_string());
    }
    Ok(ids)
}
