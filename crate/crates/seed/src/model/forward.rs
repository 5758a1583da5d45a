//! Forward pass: joint propagation over a graph pair, readout, cosine score.

use ndarray::{s, Array1, Array2, Axis};

use super::{EncodedGraph, ModelError, ModelParams};

/// Norms below this guard count as zero vectors: their cosine similarity is
/// defined as 0 and contributes no gradient.
pub(crate) const NORM_EPS: f64 = 1e-12;

/// Result of scoring one pair.
#[derive(Debug, Clone)]
pub struct PairScore {
    pub h_g1: Array1<f64>,
    pub h_g2: Array1<f64>,
    /// cosine(h_g1, h_g2) ∈ [−1, 1].
    pub similarity: f64,
}

/// Everything the backward pass needs, recorded per propagation round.
#[derive(Debug, Clone)]
pub(crate) struct StepTape {
    pub sim: Array2<f64>,
    pub alpha_a: Array2<f64>,
    pub alpha_b: Array2<f64>,
    pub x_a: Array2<f64>,
    pub x_b: Array2<f64>,
    pub z_a: Array2<f64>,
    pub r_a: Array2<f64>,
    pub c_a: Array2<f64>,
    pub z_b: Array2<f64>,
    pub r_b: Array2<f64>,
    pub c_b: Array2<f64>,
}

#[derive(Debug, Clone)]
pub(crate) struct ReadoutTape {
    pub gate: Array2<f64>,
    pub proj: Array2<f64>,
    pub pooled: Array1<f64>,
    pub u: Array1<f64>,
    pub h_g: Array1<f64>,
}

#[derive(Debug, Clone)]
pub struct Tape {
    /// Node states per round, length t_steps + 1.
    pub(crate) h_a: Vec<Array2<f64>>,
    pub(crate) h_b: Vec<Array2<f64>>,
    pub(crate) steps: Vec<StepTape>,
    pub(crate) read_a: ReadoutTape,
    pub(crate) read_b: ReadoutTape,
    pub(crate) similarity: f64,
}

impl Tape {
    pub fn score(&self) -> PairScore {
        PairScore {
            h_g1: self.read_a.h_g.clone(),
            h_g2: self.read_b.h_g.clone(),
            similarity: self.similarity,
        }
    }

    /// Number of propagation rounds recorded.
    pub fn rounds(&self) -> usize {
        self.steps.len()
    }

    /// Cross-graph attention weights from round `t`: `(a_over_b, b_over_a)`,
    /// shaped `(n_a, n_b)` and `(n_b, n_a)`. Every row is a softmax.
    pub fn attention(&self, t: usize) -> (&Array2<f64>, &Array2<f64>) {
        (&self.steps[t].alpha_a, &self.steps[t].alpha_b)
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Initial node states: embedding rows selected by token index.
pub(crate) fn embed(g: &EncodedGraph, params: &ModelParams) -> Array2<f64> {
    let mut h = Array2::zeros((g.len(), params.d));
    for (i, &tok) in g.tokens.iter().enumerate() {
        h.row_mut(i).assign(&params.embedding.row(tok));
    }
    h
}

/// Per-node message sums. Every directed edge (s→t) contributes
/// e_type ⊙ (W_msg·[h_s ‖ h_t]) to node t and e_type ⊙ (W_rev·[h_t ‖ h_s])
/// to node s, so information flows both ways. A node with no edges keeps the
/// zero vector, and a zero edge vector annihilates its edge's messages.
pub fn message_pass(h: &Array2<f64>, g: &EncodedGraph, params: &ModelParams) -> Array2<f64> {
    let d = params.d;
    let mut m = Array2::zeros((h.nrows(), params.d_e));
    if g.edges.is_empty() {
        return m;
    }
    let (u_fwd, u_rev) = edge_inputs(h, g, d);
    let msg_fwd = u_fwd.dot(&params.w_msg.t());
    let msg_rev = u_rev.dot(&params.w_rev.t());
    for (i, &(src, dst, et)) in g.edges.iter().enumerate() {
        let ev = params.edge_vecs.row(et);
        let fwd = &msg_fwd.row(i) * &ev;
        let mut row = m.row_mut(dst);
        row += &fwd;
        let rev = &msg_rev.row(i) * &ev;
        let mut row = m.row_mut(src);
        row += &rev;
    }
    m
}

/// Concatenated endpoint states per edge: row i of the first matrix is
/// [h_src ‖ h_dst], of the second [h_dst ‖ h_src].
pub(crate) fn edge_inputs(
    h: &Array2<f64>,
    g: &EncodedGraph,
    d: usize,
) -> (Array2<f64>, Array2<f64>) {
    let e = g.edges.len();
    let mut u_fwd = Array2::zeros((e, 2 * d));
    let mut u_rev = Array2::zeros((e, 2 * d));
    for (i, &(src, dst, _)) in g.edges.iter().enumerate() {
        u_fwd.slice_mut(s![i, ..d]).assign(&h.row(src));
        u_fwd.slice_mut(s![i, d..]).assign(&h.row(dst));
        u_rev.slice_mut(s![i, ..d]).assign(&h.row(dst));
        u_rev.slice_mut(s![i, d..]).assign(&h.row(src));
    }
    (u_fwd, u_rev)
}

/// Rows normalized to unit length; rows with tiny norms become zero rows.
pub(crate) fn normalized_rows(h: &Array2<f64>) -> (Array2<f64>, Array1<f64>) {
    let norms: Array1<f64> = h.rows().into_iter().map(|r| r.dot(&r).sqrt()).collect();
    let mut unit = h.clone();
    for (mut row, &n) in unit.rows_mut().into_iter().zip(&norms) {
        if n >= NORM_EPS {
            row.mapv_inplace(|v| v / n);
        } else {
            row.fill(0.0);
        }
    }
    (unit, norms)
}

/// Row-wise softmax with max subtraction.
fn softmax_rows(scores: &Array2<f64>) -> Array2<f64> {
    let mut out = scores.clone();
    for mut row in out.rows_mut() {
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        row.mapv_inplace(|v| (v - max).exp());
        let sum = row.sum();
        row.mapv_inplace(|v| v / sum);
    }
    out
}

pub(crate) struct CrossAttention {
    pub sim: Array2<f64>,
    pub alpha_a: Array2<f64>,
    pub alpha_b: Array2<f64>,
    pub mu_a: Array2<f64>,
    pub mu_b: Array2<f64>,
}

/// Cross-graph attention: each node attends over the *other* graph's nodes
/// with softmaxed cosine scores, and receives the attention-weighted
/// difference μ_i = h_i − Σ_k α_k h_k.
pub(crate) fn cross_attention_full(h_a: &Array2<f64>, h_b: &Array2<f64>) -> CrossAttention {
    let (unit_a, _) = normalized_rows(h_a);
    let (unit_b, _) = normalized_rows(h_b);
    let sim = unit_a.dot(&unit_b.t());
    let alpha_a = softmax_rows(&sim);
    let alpha_b = softmax_rows(&sim.t().to_owned());
    let mu_a = h_a - &alpha_a.dot(h_b);
    let mu_b = h_b - &alpha_b.dot(h_a);
    CrossAttention { sim, alpha_a, alpha_b, mu_a, mu_b }
}

/// Public wrapper returning only the attention signals (μ_A, μ_B).
pub fn cross_attention(h_a: &Array2<f64>, h_b: &Array2<f64>) -> (Array2<f64>, Array2<f64>) {
    let att = cross_attention_full(h_a, h_b);
    (att.mu_a, att.mu_b)
}

/// One GRU step over all nodes: state h, input x = [m ‖ μ].
/// Returns (z, r, candidate, h_next).
pub fn gru_cell(
    h: &Array2<f64>,
    x: &Array2<f64>,
    params: &ModelParams,
) -> (Array2<f64>, Array2<f64>, Array2<f64>, Array2<f64>) {
    let z = (x.dot(&params.wz.t()) + h.dot(&params.uz.t()) + &params.bz).mapv(sigmoid);
    let r = (x.dot(&params.wr.t()) + h.dot(&params.ur.t()) + &params.br).mapv(sigmoid);
    let c = (x.dot(&params.wh.t()) + (&r * h).dot(&params.uh.t()) + &params.bh).mapv(f64::tanh);
    let h_next = (1.0 - &z) * h + &z * &c;
    (z, r, c, h_next)
}

/// Gated readout: h_G = MLP_G( Σ_i σ(gate(h_i)) ⊙ proj(h_i) ).
pub(crate) fn readout_full(h: &Array2<f64>, params: &ModelParams) -> ReadoutTape {
    let gate = (h.dot(&params.w_gate.t()) + &params.b_gate).mapv(sigmoid);
    let proj = h.dot(&params.w_tr.t()) + &params.b_tr;
    let pooled = (&gate * &proj).sum_axis(Axis(0));
    let a = pooled.dot(&params.w_out1.t()) + params.b_out1.row(0);
    let u = a.mapv(f64::tanh);
    let h_g = u.dot(&params.w_out2.t()) + params.b_out2.row(0);
    ReadoutTape { gate, proj, pooled, u, h_g }
}

/// Public readout returning just the graph vector.
pub fn readout(h: &Array2<f64>, params: &ModelParams) -> Array1<f64> {
    readout_full(h, params).h_g
}

/// Cosine similarity with a zero-vector guard.
pub fn cosine(a: &Array1<f64>, b: &Array1<f64>) -> f64 {
    let na = a.dot(a).sqrt();
    let nb = b.dot(b).sqrt();
    if na < NORM_EPS || nb < NORM_EPS {
        return 0.0;
    }
    a.dot(b) / (na * nb)
}

/// Full forward pass with every intermediate recorded for backprop.
pub fn forward_with_tape(
    g_a: &EncodedGraph,
    g_b: &EncodedGraph,
    params: &ModelParams,
) -> Result<Tape, ModelError> {
    if g_a.is_empty() || g_b.is_empty() {
        return Err(ModelError::EmptyGraph);
    }
    let mut h_a = vec![embed(g_a, params)];
    let mut h_b = vec![embed(g_b, params)];
    let mut steps = Vec::with_capacity(params.t_steps);
    for t in 0..params.t_steps {
        let (ha, hb) = (&h_a[t], &h_b[t]);
        let m_a = message_pass(ha, g_a, params);
        let m_b = message_pass(hb, g_b, params);
        let att = cross_attention_full(ha, hb);
        let x_a = concat_cols(&m_a, &att.mu_a);
        let x_b = concat_cols(&m_b, &att.mu_b);
        let (z_a, r_a, c_a, ha_next) = gru_cell(ha, &x_a, params);
        let (z_b, r_b, c_b, hb_next) = gru_cell(hb, &x_b, params);
        steps.push(StepTape {
            sim: att.sim,
            alpha_a: att.alpha_a,
            alpha_b: att.alpha_b,
            x_a,
            x_b,
            z_a,
            r_a,
            c_a,
            z_b,
            r_b,
            c_b,
        });
        h_a.push(ha_next);
        h_b.push(hb_next);
    }
    let read_a = readout_full(h_a.last().expect("h has t_steps+1 entries"), params);
    let read_b = readout_full(h_b.last().expect("h has t_steps+1 entries"), params);
    let similarity = cosine(&read_a.h_g, &read_b.h_g);
    Ok(Tape { h_a, h_b, steps, read_a, read_b, similarity })
}

/// Score one pair of graphs.
pub fn forward_pair(
    g_a: &EncodedGraph,
    g_b: &EncodedGraph,
    params: &ModelParams,
) -> Result<PairScore, ModelError> {
    Ok(forward_with_tape(g_a, g_b, params)?.score())
}

pub(crate) fn concat_cols(left: &Array2<f64>, right: &Array2<f64>) -> Array2<f64> {
    let (n, dl) = (left.nrows(), left.ncols());
    let dr = right.ncols();
    let mut out = Array2::zeros((n, dl + dr));
    out.slice_mut(s![.., ..dl]).assign(left);
    out.slice_mut(s![.., dl..]).assign(right);
    out
}
