//! LSTM cell, bidirectional composition, and backpropagation through time.

use rand::Rng;

use super::linalg::{add_assign, sigmoid, Matrix};

/// Gate order used throughout: input, forget, candidate, output.
pub const GATE_I: usize = 0;
pub const GATE_F: usize = 1;
pub const GATE_C: usize = 2;
pub const GATE_O: usize = 3;

/// Per-gate weight tensors: W (d_h x d_in), U (d_h x d_h), b (d_h).
#[derive(Debug, Clone, PartialEq)]
pub struct LstmParams {
    pub w: [Matrix; 4],
    pub u: [Matrix; 4],
    pub b: [Vec<f64>; 4],
}

impl LstmParams {
    pub fn zeros(d_in: usize, d_h: usize) -> LstmParams {
        LstmParams {
            w: std::array::from_fn(|_| Matrix::zeros(d_h, d_in)),
            u: std::array::from_fn(|_| Matrix::zeros(d_h, d_h)),
            b: std::array::from_fn(|_| vec![0.0; d_h]),
        }
    }

    /// Glorot-style uniform init; forget-gate bias starts at 1.
    pub fn init<R: Rng>(d_in: usize, d_h: usize, rng: &mut R) -> LstmParams {
        let mut p = LstmParams::zeros(d_in, d_h);
        let bound = (6.0 / (d_in + d_h) as f64).sqrt();
        for g in 0..4 {
            for v in p.w[g].as_mut_slice() {
                *v = rng.gen_range(-bound..=bound);
            }
            for v in p.u[g].as_mut_slice() {
                *v = rng.gen_range(-bound..=bound);
            }
        }
        p.b[GATE_F].iter_mut().for_each(|v| *v = 1.0);
        p
    }

    pub fn d_in(&self) -> usize {
        self.w[0].cols()
    }

    pub fn d_h(&self) -> usize {
        self.w[0].rows()
    }
}

/// Hidden and cell state after a step.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmState {
    pub h: Vec<f64>,
    pub c: Vec<f64>,
}

impl LstmState {
    pub fn zeros(d_h: usize) -> LstmState {
        LstmState {
            h: vec![0.0; d_h],
            c: vec![0.0; d_h],
        }
    }
}

struct StepCache {
    i: Vec<f64>,
    f: Vec<f64>,
    o: Vec<f64>,
    ct: Vec<f64>, // candidate cell
    c: Vec<f64>,
    h: Vec<f64>,
}

/// Activations recorded during a forward pass, consumed by BPTT.
pub struct LstmCache {
    steps: Vec<StepCache>,
}

impl LstmCache {
    pub fn hidden(&self, t: usize) -> &[f64] {
        &self.steps[t].h
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

fn gate_preact(p: &LstmParams, g: usize, x: &[f64], h_prev: &[f64]) -> Vec<f64> {
    let mut a = p.w[g].matvec(x);
    let uh = p.u[g].matvec(h_prev);
    for k in 0..a.len() {
        a[k] += uh[k] + p.b[g][k];
    }
    a
}

/// One LSTM cell step:
/// i = sigma(W_i x + U_i h + b_i), f likewise, c~ = tanh(...),
/// c = f (.) c_prev + i (.) c~, o = sigma(...), h = o (.) tanh(c).
pub fn lstm_step(p: &LstmParams, x: &[f64], prev: &LstmState) -> LstmState {
    let (state, _) = lstm_step_cached(p, x, prev);
    state
}

fn lstm_step_cached(p: &LstmParams, x: &[f64], prev: &LstmState) -> (LstmState, StepCache) {
    assert_eq!(x.len(), p.d_in(), "lstm input width mismatch");
    assert_eq!(prev.h.len(), p.d_h(), "lstm state width mismatch");
    let d_h = p.d_h();
    let i: Vec<f64> = gate_preact(p, GATE_I, x, &prev.h).iter().map(|&a| sigmoid(a)).collect();
    let f: Vec<f64> = gate_preact(p, GATE_F, x, &prev.h).iter().map(|&a| sigmoid(a)).collect();
    let ct: Vec<f64> = gate_preact(p, GATE_C, x, &prev.h).iter().map(|&a| a.tanh()).collect();
    let o: Vec<f64> = gate_preact(p, GATE_O, x, &prev.h).iter().map(|&a| sigmoid(a)).collect();
    let mut c = vec![0.0; d_h];
    let mut h = vec![0.0; d_h];
    for k in 0..d_h {
        c[k] = f[k] * prev.c[k] + i[k] * ct[k];
        h[k] = o[k] * c[k].tanh();
    }
    let state = LstmState { h: h.clone(), c: c.clone() };
    (state, StepCache { i, f, o, ct, c, h })
}

/// Runs a unidirectional LSTM over a sequence from zero initial state,
/// recording activations for the backward pass.
pub fn lstm_forward_cached(p: &LstmParams, inputs: &[Vec<f64>]) -> LstmCache {
    let mut state = LstmState::zeros(p.d_h());
    let mut steps = Vec::with_capacity(inputs.len());
    for x in inputs {
        let (next, cache) = lstm_step_cached(p, x, &state);
        state = next;
        steps.push(cache);
    }
    LstmCache { steps }
}

/// Gradient accumulators mirroring [`LstmParams`].
#[derive(Debug, Clone)]
pub struct LstmGrads {
    pub w: [Matrix; 4],
    pub u: [Matrix; 4],
    pub b: [Vec<f64>; 4],
}

impl LstmGrads {
    pub fn zeros_like(p: &LstmParams) -> LstmGrads {
        LstmGrads {
            w: std::array::from_fn(|g| Matrix::zeros(p.w[g].rows(), p.w[g].cols())),
            u: std::array::from_fn(|g| Matrix::zeros(p.u[g].rows(), p.u[g].cols())),
            b: std::array::from_fn(|g| vec![0.0; p.b[g].len()]),
        }
    }
}

/// BPTT for one direction. `d_hidden[t]` is the loss gradient wrt the hidden
/// state at step t. Returns gradients wrt the inputs; parameter gradients
/// accumulate into `grads`.
pub fn lstm_backward(
    p: &LstmParams,
    inputs: &[Vec<f64>],
    cache: &LstmCache,
    d_hidden: &[Vec<f64>],
    grads: &mut LstmGrads,
) -> Vec<Vec<f64>> {
    let n = inputs.len();
    assert_eq!(cache.steps.len(), n);
    assert_eq!(d_hidden.len(), n);
    let d_h = p.d_h();
    let d_in = p.d_in();
    let mut dx = vec![vec![0.0; d_in]; n];
    let mut dh_next = vec![0.0; d_h];
    let mut dc_next = vec![0.0; d_h];

    for t in (0..n).rev() {
        let s = &cache.steps[t];
        let (h_prev, c_prev): (&[f64], &[f64]) = if t == 0 {
            (&[], &[])
        } else {
            (&cache.steps[t - 1].h, &cache.steps[t - 1].c)
        };
        let zero = vec![0.0; d_h];
        let h_prev = if t == 0 { &zero[..] } else { h_prev };
        let c_prev = if t == 0 { &zero[..] } else { c_prev };

        let mut dh = d_hidden[t].clone();
        add_assign(&mut dh, &dh_next);

        let mut da = [vec![0.0; d_h], vec![0.0; d_h], vec![0.0; d_h], vec![0.0; d_h]];
        let mut dc_prev = vec![0.0; d_h];
        for k in 0..d_h {
            let tanh_c = s.c[k].tanh();
            let d_o = dh[k] * tanh_c;
            let dc = dh[k] * s.o[k] * (1.0 - tanh_c * tanh_c) + dc_next[k];
            let d_i = dc * s.ct[k];
            let d_f = dc * c_prev[k];
            let d_ct = dc * s.i[k];
            dc_prev[k] = dc * s.f[k];
            // pre-activation gradients
            da[GATE_I][k] = d_i * s.i[k] * (1.0 - s.i[k]);
            da[GATE_F][k] = d_f * s.f[k] * (1.0 - s.f[k]);
            da[GATE_C][k] = d_ct * (1.0 - s.ct[k] * s.ct[k]);
            da[GATE_O][k] = d_o * s.o[k] * (1.0 - s.o[k]);
        }

        let mut dh_prev = vec![0.0; d_h];
        for g in 0..4 {
            grads.w[g].add_outer(&da[g], &inputs[t]);
            grads.u[g].add_outer(&da[g], h_prev);
            add_assign(&mut grads.b[g], &da[g]);
            p.w[g].matvec_transpose_into(&da[g], &mut dx[t]);
            p.u[g].matvec_transpose_into(&da[g], &mut dh_prev);
        }
        dh_next = dh_prev;
        dc_next = dc_prev;
    }
    dx
}

/// Independent forward and backward direction parameters sharing d_in and d_h.
#[derive(Debug, Clone, PartialEq)]
pub struct BiLstmParams {
    pub fwd: LstmParams,
    pub bwd: LstmParams,
}

impl BiLstmParams {
    pub fn zeros(d_in: usize, d_h: usize) -> BiLstmParams {
        BiLstmParams {
            fwd: LstmParams::zeros(d_in, d_h),
            bwd: LstmParams::zeros(d_in, d_h),
        }
    }

    pub fn init<R: Rng>(d_in: usize, d_h: usize, rng: &mut R) -> BiLstmParams {
        BiLstmParams {
            fwd: LstmParams::init(d_in, d_h, rng),
            bwd: LstmParams::init(d_in, d_h, rng),
        }
    }

    pub fn d_in(&self) -> usize {
        self.fwd.d_in()
    }

    pub fn d_h(&self) -> usize {
        self.fwd.d_h()
    }

    /// Output width of the concatenated representation.
    pub fn out_width(&self) -> usize {
        2 * self.d_h()
    }
}

pub struct BiLstmCache {
    pub fwd: LstmCache,
    pub bwd: LstmCache, // over reversed inputs
}

/// Bidirectional pass: position t yields concat(forward state at t, backward
/// state at t). Both directions start from zero states.
pub fn bilstm_forward(p: &BiLstmParams, inputs: &[Vec<f64>]) -> Vec<Vec<f64>> {
    bilstm_forward_cached(p, inputs).0
}

pub fn bilstm_forward_cached(p: &BiLstmParams, inputs: &[Vec<f64>]) -> (Vec<Vec<f64>>, BiLstmCache) {
    let n = inputs.len();
    let fwd = lstm_forward_cached(&p.fwd, inputs);
    let reversed: Vec<Vec<f64>> = inputs.iter().rev().cloned().collect();
    let bwd = lstm_forward_cached(&p.bwd, &reversed);
    let mut out = Vec::with_capacity(n);
    for t in 0..n {
        let mut h = fwd.hidden(t).to_vec();
        h.extend_from_slice(bwd.hidden(n - 1 - t));
        out.push(h);
    }
    (out, BiLstmCache { fwd, bwd })
}

#[derive(Debug, Clone)]
pub struct BiLstmGrads {
    pub fwd: LstmGrads,
    pub bwd: LstmGrads,
}

impl BiLstmGrads {
    pub fn zeros_like(p: &BiLstmParams) -> BiLstmGrads {
        BiLstmGrads {
            fwd: LstmGrads::zeros_like(&p.fwd),
            bwd: LstmGrads::zeros_like(&p.bwd),
        }
    }
}

/// Backward pass through both directions; returns input gradients.
pub fn bilstm_backward(
    p: &BiLstmParams,
    inputs: &[Vec<f64>],
    cache: &BiLstmCache,
    d_outputs: &[Vec<f64>],
    grads: &mut BiLstmGrads,
) -> Vec<Vec<f64>> {
    let n = inputs.len();
    let d_h = p.d_h();
    let mut d_fwd = Vec::with_capacity(n);
    let mut d_bwd_rev = vec![vec![0.0; d_h]; n];
    for t in 0..n {
        assert_eq!(d_outputs[t].len(), 2 * d_h, "output grad width mismatch");
        d_fwd.push(d_outputs[t][..d_h].to_vec());
        d_bwd_rev[n - 1 - t] = d_outputs[t][d_h..].to_vec();
    }
    let dx_fwd = lstm_backward(&p.fwd, inputs, &cache.fwd, &d_fwd, &mut grads.fwd);
    let reversed: Vec<Vec<f64>> = inputs.iter().rev().cloned().collect();
    let dx_bwd_rev = lstm_backward(&p.bwd, &reversed, &cache.bwd, &d_bwd_rev, &mut grads.bwd);
    let mut dx = dx_fwd;
    for t in 0..n {
        add_assign(&mut dx[t], &dx_bwd_rev[n - 1 - t]);
    }
    dx
}
