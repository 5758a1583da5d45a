//! The graph match network.
//!
//! Node states are updated for a fixed number of rounds; each round every
//! node receives messages along its graph's edges and a cross-graph
//! attention signal from the paired graph, then a GRU cell folds both into
//! the next state. A gated sum pools node states into one vector per graph,
//! and cosine similarity of the two graph vectors is the clone score.
//!
//! Everything is f64 and hand-differentiated; `backward` mirrors `forward`
//! step by step, and the test suite checks every gradient against central
//! finite differences.

mod backward;
mod forward;

pub use backward::{backward_pair, loss_gradients};
pub use forward::{cosine, cross_attention, forward_pair, forward_with_tape, gru_cell,
                  message_pass, readout, PairScore, Tape};

use ndarray::Array2;
use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::graph::{EdgeType, SemanticGraph};
use crate::vocab::Vocabulary;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("cannot score an empty graph")]
    EmptyGraph,
}

/// A graph reduced to what the network consumes: vocabulary indices and
/// typed directed edges. Encoding is cheap and done once per graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedGraph {
    /// Vocabulary index of each node's token, in node-id order.
    pub tokens: Vec<usize>,
    /// (src, dst, edge-type row): data flow = 0, control flow = 1.
    pub edges: Vec<(usize, usize, usize)>,
}

impl EncodedGraph {
    pub fn new(g: &SemanticGraph, vocab: &Vocabulary) -> EncodedGraph {
        EncodedGraph {
            tokens: vocab.encode_tokens(g),
            edges: g
                .edges
                .iter()
                .map(|e| {
                    let et = match e.etype {
                        EdgeType::Data => 0,
                        EdgeType::Control => 1,
                    };
                    (e.src, e.dst, et)
                })
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// All trainable tensors plus the shape hyper-parameters. Biases are kept as
/// 1×n rows so every tensor is a 2-d array and serialization stays uniform.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    /// Node state width.
    pub d: usize,
    /// Message / edge-vector width.
    pub d_e: usize,
    /// Propagation rounds per forward pass.
    pub t_steps: usize,

    /// vocab × d initial node states.
    pub embedding: Array2<f64>,
    /// 2 × d_e learned edge vectors (row 0 data flow, row 1 control flow).
    pub edge_vecs: Array2<f64>,
    /// d_e × 2d message map for edge direction src→dst.
    pub w_msg: Array2<f64>,
    /// d_e × 2d message map for the reversed direction.
    pub w_rev: Array2<f64>,

    // GRU cell: state d, input d_e + d (message ‖ attention signal).
    pub wz: Array2<f64>,
    pub uz: Array2<f64>,
    pub bz: Array2<f64>,
    pub wr: Array2<f64>,
    pub ur: Array2<f64>,
    pub br: Array2<f64>,
    pub wh: Array2<f64>,
    pub uh: Array2<f64>,
    pub bh: Array2<f64>,

    // Readout: gated sum of node states, then affine–tanh–affine.
    pub w_gate: Array2<f64>,
    pub b_gate: Array2<f64>,
    pub w_tr: Array2<f64>,
    pub b_tr: Array2<f64>,
    pub w_out1: Array2<f64>,
    pub b_out1: Array2<f64>,
    pub w_out2: Array2<f64>,
    pub b_out2: Array2<f64>,
}

impl ModelParams {
    /// Fresh parameters with entries uniform in [−half_range, half_range].
    pub fn init_uniform(
        vocab_size: usize,
        d: usize,
        d_e: usize,
        t_steps: usize,
        seed: u64,
        half_range: f64,
    ) -> ModelParams {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dist = Uniform::new_inclusive(-half_range, half_range);
        let mut mat = |r: usize, c: usize| {
            Array2::from_shape_fn((r, c), |_| dist.sample(&mut rng))
        };
        let k = d_e + d;
        ModelParams {
            d,
            d_e,
            t_steps,
            embedding: mat(vocab_size, d),
            edge_vecs: mat(2, d_e),
            w_msg: mat(d_e, 2 * d),
            w_rev: mat(d_e, 2 * d),
            wz: mat(d, k),
            uz: mat(d, d),
            bz: mat(1, d),
            wr: mat(d, k),
            ur: mat(d, d),
            br: mat(1, d),
            wh: mat(d, k),
            uh: mat(d, d),
            bh: mat(1, d),
            w_gate: mat(d, d),
            b_gate: mat(1, d),
            w_tr: mat(d, d),
            b_tr: mat(1, d),
            w_out1: mat(d, d),
            b_out1: mat(1, d),
            w_out2: mat(d, d),
            b_out2: mat(1, d),
        }
    }

    /// Standard initialization used by training.
    pub fn init(vocab_size: usize, d: usize, d_e: usize, t_steps: usize, seed: u64) -> ModelParams {
        Self::init_uniform(vocab_size, d, d_e, t_steps, seed, 0.1)
    }

    /// All-zero tensors with the shapes implied by the hyper-parameters.
    pub fn zeros(vocab_size: usize, d: usize, d_e: usize, t_steps: usize) -> ModelParams {
        let mat = |r: usize, c: usize| Array2::zeros((r, c));
        let k = d_e + d;
        ModelParams {
            d,
            d_e,
            t_steps,
            embedding: mat(vocab_size, d),
            edge_vecs: mat(2, d_e),
            w_msg: mat(d_e, 2 * d),
            w_rev: mat(d_e, 2 * d),
            wz: mat(d, k),
            uz: mat(d, d),
            bz: mat(1, d),
            wr: mat(d, k),
            ur: mat(d, d),
            br: mat(1, d),
            wh: mat(d, k),
            uh: mat(d, d),
            bh: mat(1, d),
            w_gate: mat(d, d),
            b_gate: mat(1, d),
            w_tr: mat(d, d),
            b_tr: mat(1, d),
            w_out1: mat(d, d),
            b_out1: mat(1, d),
            w_out2: mat(d, d),
            b_out2: mat(1, d),
        }
    }

    pub fn vocab_size(&self) -> usize {
        self.embedding.nrows()
    }

    /// All tensors in a fixed order, for serialization and flattening.
    pub fn tensors(&self) -> Vec<(&'static str, &Array2<f64>)> {
        vec![
            ("embedding", &self.embedding),
            ("edge_vecs", &self.edge_vecs),
            ("w_msg", &self.w_msg),
            ("w_rev", &self.w_rev),
            ("wz", &self.wz),
            ("uz", &self.uz),
            ("bz", &self.bz),
            ("wr", &self.wr),
            ("ur", &self.ur),
            ("br", &self.br),
            ("wh", &self.wh),
            ("uh", &self.uh),
            ("bh", &self.bh),
            ("w_gate", &self.w_gate),
            ("b_gate", &self.b_gate),
            ("w_tr", &self.w_tr),
            ("b_tr", &self.b_tr),
            ("w_out1", &self.w_out1),
            ("b_out1", &self.b_out1),
            ("w_out2", &self.w_out2),
            ("b_out2", &self.b_out2),
        ]
    }

    pub fn tensors_mut(&mut self) -> Vec<(&'static str, &mut Array2<f64>)> {
        vec![
            ("embedding", &mut self.embedding),
            ("edge_vecs", &mut self.edge_vecs),
            ("w_msg", &mut self.w_msg),
            ("w_rev", &mut self.w_rev),
            ("wz", &mut self.wz),
            ("uz", &mut self.uz),
            ("bz", &mut self.bz),
            ("wr", &mut self.wr),
            ("ur", &mut self.ur),
            ("br", &mut self.br),
            ("wh", &mut self.wh),
            ("uh", &mut self.uh),
            ("bh", &mut self.bh),
            ("w_gate", &mut self.w_gate),
            ("b_gate", &mut self.b_gate),
            ("w_tr", &mut self.w_tr),
            ("b_tr", &mut self.b_tr),
            ("w_out1", &mut self.w_out1),
            ("b_out1", &mut self.b_out1),
            ("w_out2", &mut self.w_out2),
            ("b_out2", &mut self.b_out2),
        ]
    }

    pub fn zeros_like(&self) -> ModelParams {
        let mut z = self.clone();
        for (_, t) in z.tensors_mut() {
            t.fill(0.0);
        }
        z
    }

    pub fn param_count(&self) -> usize {
        self.tensors().iter().map(|(_, t)| t.len()).sum()
    }

    /// All parameters as one flat vector (fixed tensor order, row-major).
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for (_, t) in self.tensors() {
            out.extend(t.iter());
        }
        out
    }

    /// Inverse of [`flatten`]; panics on length mismatch (test helper).
    pub fn assign_flat(&mut self, flat: &[f64]) {
        assert_eq!(flat.len(), self.param_count(), "flat parameter length mismatch");
        let mut offset = 0;
        for (_, t) in self.tensors_mut() {
            let n = t.len();
            for (slot, &v) in t.iter_mut().zip(&flat[offset..offset + n]) {
                *slot = v;
            }
            offset += n;
        }
    }

    /// self += alpha · other (tensor-wise), the SGD update primitive.
    pub fn axpy(&mut self, alpha: f64, other: &ModelParams) {
        let theirs = other.tensors();
        for ((_, mine), (_, t)) in self.tensors_mut().into_iter().zip(theirs) {
            mine.scaled_add(alpha, t);
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for (_, t) in self.tensors_mut() {
            t.mapv_inplace(|v| v * factor);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::train::{pair_loss, Label};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_graph(rng: &mut ChaCha8Rng, vocab_size: usize, n_nodes: usize) -> EncodedGraph {
        let tokens = (0..n_nodes).map(|_| rng.gen_range(0..vocab_size)).collect();
        let n_edges = rng.gen_range(1..=2 * n_nodes);
        let edges = (0..n_edges)
            .map(|_| {
                (rng.gen_range(0..n_nodes), rng.gen_range(0..n_nodes), rng.gen_range(0..2usize))
            })
            .collect();
        EncodedGraph { tokens, edges }
    }

    fn small_params(seed: u64) -> ModelParams {
        ModelParams::init_uniform(6, 4, 3, 2, seed, 0.5)
    }

    #[test]
    fn self_similarity_is_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let params = small_params(1);
        for _ in 0..10 {
            let g = random_graph(&mut rng, params.vocab_size(), 5);
            let s = forward_pair(&g, &g, &params).unwrap().similarity;
            assert!((s - 1.0).abs() < 1e-6, "self similarity {s}");
        }
    }

    #[test]
    fn swapping_arguments_is_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let params = small_params(2);
        for _ in 0..10 {
            let a = random_graph(&mut rng, params.vocab_size(), 4);
            let b = random_graph(&mut rng, params.vocab_size(), 6);
            let ab = forward_pair(&a, &b, &params).unwrap().similarity;
            let ba = forward_pair(&b, &a, &params).unwrap().similarity;
            assert!((ab - ba).abs() < 1e-6);
        }
    }

    #[test]
    fn node_permutation_preserves_similarity() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let params = small_params(3);
        let a = random_graph(&mut rng, params.vocab_size(), 6);
        let b = random_graph(&mut rng, params.vocab_size(), 5);
        // Reverse is a permutation; remap tokens and edge endpoints.
        let n = b.tokens.len();
        let perm: Vec<usize> = (0..n).rev().collect();
        let mut tokens = vec![0; n];
        for (old, &new) in perm.iter().enumerate() {
            tokens[new] = b.tokens[old];
        }
        let edges = b.edges.iter().map(|&(s, t, e)| (perm[s], perm[t], e)).collect();
        let permuted = EncodedGraph { tokens, edges };
        let before = forward_pair(&a, &b, &params).unwrap().similarity;
        let after = forward_pair(&a, &permuted, &params).unwrap().similarity;
        assert!((before - after).abs() < 1e-6);
    }

    #[test]
    fn attention_rows_sum_to_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let params = small_params(4);
        let a = random_graph(&mut rng, params.vocab_size(), 5);
        let b = random_graph(&mut rng, params.vocab_size(), 7);
        let ha = forward::embed(&a, &params);
        let hb = forward::embed(&b, &params);
        let att = forward::cross_attention_full(&ha, &hb);
        for row in att.alpha_a.rows() {
            assert!((row.sum() - 1.0).abs() < 1e-9);
        }
        for row in att.alpha_b.rows() {
            assert!((row.sum() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn empty_graph_is_rejected() {
        let params = small_params(5);
        let empty = EncodedGraph { tokens: vec![], edges: vec![] };
        let other = EncodedGraph { tokens: vec![0], edges: vec![] };
        assert!(matches!(forward_pair(&empty, &other, &params), Err(ModelError::EmptyGraph)));
    }

    #[test]
    fn zero_edge_vector_silences_edges() {
        // With a zeroed edge vector, every message is annihilated, so edges
        // might as well not exist.
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut params = small_params(6);
        params.edge_vecs.fill(0.0);
        let a = random_graph(&mut rng, params.vocab_size(), 5);
        let b = random_graph(&mut rng, params.vocab_size(), 5);
        let edgeless = |g: &EncodedGraph| EncodedGraph { tokens: g.tokens.clone(), edges: vec![] };
        let with_edges = forward_pair(&a, &b, &params).unwrap().similarity;
        let without = forward_pair(&edgeless(&a), &edgeless(&b), &params).unwrap().similarity;
        assert!((with_edges - without).abs() < 1e-12);
    }

    #[test]
    fn learned_embedding_rows_feed_initial_state() {
        let params = small_params(12);
        let g = EncodedGraph { tokens: vec![3, 0, 5], edges: vec![] };
        let h0 = forward::embed(&g, &params);
        for (i, &tok) in g.tokens.iter().enumerate() {
            assert_eq!(h0.row(i), params.embedding.row(tok));
        }
    }

    #[test]
    fn flatten_assign_roundtrip() {
        let params = small_params(13);
        let flat = params.flatten();
        assert_eq!(flat.len(), params.param_count());
        let mut other = params.zeros_like();
        other.assign_flat(&flat);
        assert_eq!(other.flatten(), flat);
    }

    /// Central finite differences around one labeled pair; the backward pass
    /// must match to < 1e-3 relative error on every coordinate that moves.
    fn assert_gradients_match(seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params = small_params(seed ^ 0x5eed);
        let n_a = rng.gen_range(3..=8);
        let n_b = rng.gen_range(3..=8);
        let a = random_graph(&mut rng, params.vocab_size(), n_a);
        let b = random_graph(&mut rng, params.vocab_size(), n_b);

        // Pick a label/margin pair that keeps the hinge active and the
        // finite-difference probe away from the kink.
        let s = forward_pair(&a, &b, &params).unwrap().similarity;
        let (label, margin) = if s < 0.4 {
            (Label::Clone, 0.5)
        } else if s <= 0.6 {
            (Label::Clone, 0.9)
        } else {
            (Label::NonClone, 0.5)
        };

        let analytic = backward_pair(&a, &b, label, margin, &params).unwrap().grads.flatten();
        let base = params.flatten();
        let mut work = params.clone();
        let mut flat = base.clone();
        let step = 1e-4;
        let mut worst = 0.0f64;
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
            worst = worst.max((fd - analytic[i]).abs() / scale);
        }
        assert!(worst < 1e-3, "seed {seed}: worst relative gradient error {worst}");
    }

    #[test]
    fn gradients_match_finite_differences() {
        for seed in 0..3 {
            assert_gradients_match(seed);
        }
    }

    #[test]
    fn flat_hinge_region_yields_zero_gradients() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let params = small_params(14);
        let a = random_graph(&mut rng, params.vocab_size(), 4);
        // A graph is a perfect clone of itself: s = 1, margin satisfied.
        let out = backward_pair(&a, &a, Label::Clone, 0.5, &params).unwrap();
        assert_eq!(out.loss, 0.0);
        assert!(out.grads.flatten().iter().all(|&g| g == 0.0));
    }
}
