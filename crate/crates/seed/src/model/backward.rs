//! Reverse-mode gradients, hand-derived to mirror `forward` step by step.
//!
//! Conventions: `dh` always means ∂loss/∂h with the same shape as `h`;
//! every function accumulates parameter gradients into a `ModelParams`-shaped
//! gradient holder. The test suite validates each path against central
//! finite differences.

use ndarray::{s, Array1, Array2, Axis};

use super::forward::{
    edge_inputs, forward_with_tape, normalized_rows, ReadoutTape, StepTape, Tape, NORM_EPS,
};
use super::{EncodedGraph, ModelError, ModelParams};
use crate::train::{pair_loss, pair_loss_grad, Label};

/// Loss, score, and full parameter gradients for one labeled pair.
#[derive(Debug, Clone)]
pub struct PairBackward {
    pub loss: f64,
    pub similarity: f64,
    pub grads: ModelParams,
}

/// Forward + backward through the margin loss for one labeled pair.
pub fn backward_pair(
    g_a: &EncodedGraph,
    g_b: &EncodedGraph,
    label: Label,
    margin: f64,
    params: &ModelParams,
) -> Result<PairBackward, ModelError> {
    let tape = forward_with_tape(g_a, g_b, params)?;
    let similarity = tape.similarity;
    let loss = pair_loss(similarity, label, margin);
    let d_sim = pair_loss_grad(similarity, label, margin);
    let grads = loss_gradients(g_a, g_b, &tape, params, d_sim);
    Ok(PairBackward { loss, similarity, grads })
}

/// Gradients of `d_sim · similarity` with respect to every parameter.
/// `d_sim` is the upstream derivative of the loss at the similarity output;
/// zero short-circuits to all-zero gradients (flat hinge region).
pub fn loss_gradients(
    g_a: &EncodedGraph,
    g_b: &EncodedGraph,
    tape: &Tape,
    params: &ModelParams,
    d_sim: f64,
) -> ModelParams {
    let mut g = params.zeros_like();
    if d_sim == 0.0 {
        return g;
    }

    // Cosine head: s = <a,b> / (|a||b|), zero-guarded.
    let a = &tape.read_a.h_g;
    let b = &tape.read_b.h_g;
    let na = a.dot(a).sqrt();
    let nb = b.dot(b).sqrt();
    let (d_hga, d_hgb) = if na < NORM_EPS || nb < NORM_EPS {
        (Array1::zeros(a.len()), Array1::zeros(b.len()))
    } else {
        let sim = tape.similarity;
        let d_a = (b / (na * nb) - &(a * (sim / (na * na)))) * d_sim;
        let d_b = (a / (na * nb) - &(b * (sim / (nb * nb)))) * d_sim;
        (d_a, d_b)
    };

    let h_a_last = tape.h_a.last().expect("tape has t+1 states");
    let h_b_last = tape.h_b.last().expect("tape has t+1 states");
    let mut dh_a = readout_backward(h_a_last, &tape.read_a, &d_hga, params, &mut g);
    let mut dh_b = readout_backward(h_b_last, &tape.read_b, &d_hgb, params, &mut g);

    for t in (0..params.t_steps).rev() {
        let st = &tape.steps[t];
        let h_a = &tape.h_a[t];
        let h_b = &tape.h_b[t];

        let (dx_a, mut dha_t) =
            gru_backward(h_a, &st.x_a, &st.z_a, &st.r_a, &st.c_a, &dh_a, params, &mut g);
        let (dx_b, mut dhb_t) =
            gru_backward(h_b, &st.x_b, &st.z_b, &st.r_b, &st.c_b, &dh_b, params, &mut g);

        let dm_a = dx_a.slice(s![.., ..params.d_e]).to_owned();
        let dmu_a = dx_a.slice(s![.., params.d_e..]).to_owned();
        let dm_b = dx_b.slice(s![.., ..params.d_e]).to_owned();
        let dmu_b = dx_b.slice(s![.., params.d_e..]).to_owned();

        attention_backward(h_a, h_b, st, &dmu_a, &dmu_b, &mut dha_t, &mut dhb_t);
        message_backward(h_a, g_a, &dm_a, params, &mut g, &mut dha_t);
        message_backward(h_b, g_b, &dm_b, params, &mut g, &mut dhb_t);

        dh_a = dha_t;
        dh_b = dhb_t;
    }

    // h^(0) rows came straight from the embedding table.
    for (i, &tok) in g_a.tokens.iter().enumerate() {
        let mut row = g.embedding.row_mut(tok);
        row += &dh_a.row(i);
    }
    for (i, &tok) in g_b.tokens.iter().enumerate() {
        let mut row = g.embedding.row_mut(tok);
        row += &dh_b.row(i);
    }
    g
}

fn outer(a: &Array1<f64>, b: &Array1<f64>) -> Array2<f64> {
    Array2::from_shape_fn((a.len(), b.len()), |(i, j)| a[i] * b[j])
}

/// Backward through h_G = W2·tanh(W1·(Σ σ(gate)⊙proj) + b1) + b2.
/// Returns ∂loss/∂h for the node states feeding the readout.
fn readout_backward(
    h: &Array2<f64>,
    tape: &ReadoutTape,
    d_hg: &Array1<f64>,
    p: &ModelParams,
    g: &mut ModelParams,
) -> Array2<f64> {
    g.w_out2 += &outer(d_hg, &tape.u);
    {
        let mut row = g.b_out2.row_mut(0);
        row += d_hg;
    }
    let du = d_hg.dot(&p.w_out2);
    let da = &du * &(1.0 - &tape.u * &tape.u);
    g.w_out1 += &outer(&da, &tape.pooled);
    {
        let mut row = g.b_out1.row_mut(0);
        row += &da;
    }
    let d_pooled = da.dot(&p.w_out1);

    // pooled = Σ_i gate_i ⊙ proj_i : the pooled gradient broadcasts to rows.
    let d_gate = &tape.proj * &d_pooled;
    let d_proj = &tape.gate * &d_pooled;
    let dq = &d_gate * &tape.gate * &(1.0 - &tape.gate);
    g.w_gate += &dq.t().dot(h);
    {
        let mut row = g.b_gate.row_mut(0);
        row += &dq.sum_axis(Axis(0));
    }
    g.w_tr += &d_proj.t().dot(h);
    {
        let mut row = g.b_tr.row_mut(0);
        row += &d_proj.sum_axis(Axis(0));
    }
    dq.dot(&p.w_gate) + d_proj.dot(&p.w_tr)
}

/// Backward through one GRU step. Returns (∂loss/∂x, ∂loss/∂h_prev).
#[allow(clippy::too_many_arguments)]
fn gru_backward(
    h: &Array2<f64>,
    x: &Array2<f64>,
    z: &Array2<f64>,
    r: &Array2<f64>,
    c: &Array2<f64>,
    dh_next: &Array2<f64>,
    p: &ModelParams,
    g: &mut ModelParams,
) -> (Array2<f64>, Array2<f64>) {
    // h' = (1−z)⊙h + z⊙c
    let dz = dh_next * &(c - h);
    let dc = dh_next * z;
    let mut dh = dh_next * &(1.0 - z);

    // c = tanh(x·Whᵀ + (r⊙h)·Uhᵀ + bh)
    let dc_pre = &dc * &(1.0 - c * c);
    g.wh += &dc_pre.t().dot(x);
    {
        let mut row = g.bh.row_mut(0);
        row += &dc_pre.sum_axis(Axis(0));
    }
    g.uh += &dc_pre.t().dot(&(r * h));
    let mut dx = dc_pre.dot(&p.wh);
    let drh = dc_pre.dot(&p.uh);
    let dr = &drh * h;
    dh += &(&drh * r);

    // z = σ(x·Wzᵀ + h·Uzᵀ + bz), r likewise
    let dz_pre = &dz * z * &(1.0 - z);
    let dr_pre = &dr * r * &(1.0 - r);
    g.wz += &dz_pre.t().dot(x);
    g.uz += &dz_pre.t().dot(h);
    {
        let mut row = g.bz.row_mut(0);
        row += &dz_pre.sum_axis(Axis(0));
    }
    dx += &dz_pre.dot(&p.wz);
    dh += &dz_pre.dot(&p.uz);
    g.wr += &dr_pre.t().dot(x);
    g.ur += &dr_pre.t().dot(h);
    {
        let mut row = g.br.row_mut(0);
        row += &dr_pre.sum_axis(Axis(0));
    }
    dx += &dr_pre.dot(&p.wr);
    dh += &dr_pre.dot(&p.ur);
    (dx, dh)
}

/// Backward through μ_A = h_A − α_A·h_B (and symmetrically for B), the row
/// softmaxes, and the pairwise cosine scores.
fn attention_backward(
    h_a: &Array2<f64>,
    h_b: &Array2<f64>,
    st: &StepTape,
    dmu_a: &Array2<f64>,
    dmu_b: &Array2<f64>,
    dh_a: &mut Array2<f64>,
    dh_b: &mut Array2<f64>,
) {
    let (n_a, n_b) = (h_a.nrows(), h_b.nrows());

    *dh_a += dmu_a;
    let mut dalpha_a = dmu_a.dot(&h_b.t());
    dalpha_a *= -1.0;
    dh_b.scaled_add(-1.0, &st.alpha_a.t().dot(dmu_a));

    *dh_b += dmu_b;
    let mut dalpha_b = dmu_b.dot(&h_a.t());
    dalpha_b *= -1.0;
    dh_a.scaled_add(-1.0, &st.alpha_b.t().dot(dmu_b));

    // Softmax rows: dσ = α ⊙ (dα − <dα, α>). α_A softmaxes sim rows, α_B
    // softmaxes sim columns; both accumulate into one dsim.
    let mut dsim = Array2::zeros((n_a, n_b));
    for i in 0..n_a {
        let alpha = st.alpha_a.row(i);
        let dal = dalpha_a.row(i);
        let inner = dal.dot(&alpha);
        for k in 0..n_b {
            dsim[[i, k]] += alpha[k] * (dal[k] - inner);
        }
    }
    for k in 0..n_b {
        let alpha = st.alpha_b.row(k);
        let dal = dalpha_b.row(k);
        let inner = dal.dot(&alpha);
        for i in 0..n_a {
            dsim[[i, k]] += alpha[i] * (dal[i] - inner);
        }
    }

    // Pairwise cosine: sim_ik = <â_i, b̂_k>, so
    // ∂sim/∂a_i = (b̂_k − sim_ik·â_i)/‖a_i‖, zero-guarded rows excluded.
    let (unit_a, norms_a) = normalized_rows(h_a);
    let (unit_b, norms_b) = normalized_rows(h_b);
    let p_a = dsim.dot(&unit_b);
    let w_a = (&dsim * &st.sim).sum_axis(Axis(1));
    for i in 0..n_a {
        if norms_a[i] >= NORM_EPS {
            let adj = (&p_a.row(i) - &(&unit_a.row(i) * w_a[i])) / norms_a[i];
            let mut row = dh_a.row_mut(i);
            row += &adj;
        }
    }
    let p_b = dsim.t().dot(&unit_a);
    let w_b = (&dsim * &st.sim).sum_axis(Axis(0));
    for k in 0..n_b {
        if norms_b[k] >= NORM_EPS {
            let adj = (&p_b.row(k) - &(&unit_b.row(k) * w_b[k])) / norms_b[k];
            let mut row = dh_b.row_mut(k);
            row += &adj;
        }
    }
}

/// Backward through the per-edge messages of one graph.
fn message_backward(
    h: &Array2<f64>,
    g_enc: &EncodedGraph,
    dm: &Array2<f64>,
    p: &ModelParams,
    g: &mut ModelParams,
    dh: &mut Array2<f64>,
) {
    if g_enc.edges.is_empty() {
        return;
    }
    let d = p.d;
    let (u_fwd, u_rev) = edge_inputs(h, g_enc, d);
    let msg_fwd = u_fwd.dot(&p.w_msg.t());
    let msg_rev = u_rev.dot(&p.w_rev.t());

    let e_count = g_enc.edges.len();
    let mut df = Array2::zeros((e_count, p.d_e));
    let mut dr = Array2::zeros((e_count, p.d_e));
    for (i, &(src, dst, et)) in g_enc.edges.iter().enumerate() {
        let ev = p.edge_vecs.row(et);
        let dm_dst = dm.row(dst);
        let dm_src = dm.row(src);
        {
            let mut erow = g.edge_vecs.row_mut(et);
            erow += &(&dm_dst * &msg_fwd.row(i));
            erow += &(&dm_src * &msg_rev.row(i));
        }
        df.row_mut(i).assign(&(&dm_dst * &ev));
        dr.row_mut(i).assign(&(&dm_src * &ev));
    }
    g.w_msg += &df.t().dot(&u_fwd);
    g.w_rev += &dr.t().dot(&u_rev);

    let du_f = df.dot(&p.w_msg);
    let du_r = dr.dot(&p.w_rev);
    for (i, &(src, dst, _)) in g_enc.edges.iter().enumerate() {
        {
            let mut row = dh.row_mut(src);
            row += &du_f.slice(s![i, ..d]);
            row += &du_r.slice(s![i, d..]);
        }
        {
            let mut row = dh.row_mut(dst);
            row += &du_f.slice(s![i, d..]);
            row += &du_r.slice(s![i, ..d]);
        }
    }
}
