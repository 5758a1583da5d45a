//! Token vocabulary: maps node tokens to dense indices for the embedding
//! table. Index 0 is always the unknown-token slot, so graphs from outside
//! the training corpus always encode.

use thiserror::Error;

use crate::graph::SemanticGraph;

pub const UNK: &str = "<unk>";

#[derive(Debug, Error)]
pub enum VocabError {
    #[error("vocabulary file is empty")]
    Empty,
    #[error("line {0}: empty token")]
    EmptyToken(usize),
    #[error("vocabulary must start with `{UNK}`, found `{0}`")]
    MissingUnknown(String),
    #[error("line {line}: token `{token}` breaks sorted order")]
    Unsorted { line: usize, token: String },
    #[error("line {line}: duplicate token `{token}`")]
    Duplicate { line: usize, token: String },
}

/// Frozen token → index mapping. Indices are dense: `<unk>` is 0 and the
/// remaining tokens are sorted, so identical corpora yield identical tables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
}

impl Vocabulary {
    /// Build from the distinct node tokens of a set of graphs.
    pub fn from_graphs<'a>(graphs: impl IntoIterator<Item = &'a SemanticGraph>) -> Vocabulary {
        Self::from_tokens(
            graphs.into_iter().flat_map(|g| g.nodes.iter().map(|n| n.token.as_str())),
        )
    }

    pub fn from_tokens<'a>(tokens: impl IntoIterator<Item = &'a str>) -> Vocabulary {
        let mut sorted: Vec<String> =
            tokens.into_iter().filter(|t| !t.is_empty() && *t != UNK).map(String::from).collect();
        sorted.sort_unstable();
        sorted.dedup();
        let mut tokens = Vec::with_capacity(sorted.len() + 1);
        tokens.push(UNK.to_string());
        tokens.extend(sorted);
        Vocabulary { tokens }
    }

    /// Number of entries including the unknown slot.
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        false // the unknown slot is always present
    }

    /// Index of a token; unseen tokens map to the unknown slot.
    pub fn index_of(&self, token: &str) -> usize {
        // Slot 0 is <unk>; the rest is sorted.
        self.tokens[1..].binary_search_by(|t| t.as_str().cmp(token)).map(|i| i + 1).unwrap_or(0)
    }

    pub fn token(&self, index: usize) -> Option<&str> {
        self.tokens.get(index).map(String::as_str)
    }

    /// Token indices of a graph's nodes, in node-id order.
    pub fn encode_tokens(&self, g: &SemanticGraph) -> Vec<usize> {
        g.nodes.iter().map(|n| self.index_of(&n.token)).collect()
    }

    /// Persistence format: one token per line in index order.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for t in &self.tokens {
            out.push_str(t);
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Vocabulary, VocabError> {
        let mut tokens = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.is_empty() {
                return Err(VocabError::EmptyToken(i + 1));
            }
            tokens.push(line.to_string());
        }
        match tokens.first() {
            None => return Err(VocabError::Empty),
            Some(first) if first != UNK => {
                return Err(VocabError::MissingUnknown(first.clone()));
            }
            _ => {}
        }
        if let Some(i) = tokens[1..].iter().position(|t| t == UNK) {
            return Err(VocabError::Duplicate { line: i + 2, token: UNK.to_string() });
        }
        for i in 2..tokens.len() {
            use std::cmp::Ordering;
            match tokens[i - 1].cmp(&tokens[i]) {
                Ordering::Less => {}
                Ordering::Equal => {
                    return Err(VocabError::Duplicate { line: i + 1, token: tokens[i].clone() })
                }
                Ordering::Greater => {
                    return Err(VocabError::Unsorted { line: i + 1, token: tokens[i].clone() })
                }
            }
        }
        Ok(Vocabulary { tokens })
    }
}
