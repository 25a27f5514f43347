use super::{sigmoid, Matrix};
use crate::scalar::Scalar;

/// Hidden and cell vectors of one LSTM layer.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmState<S> {
    pub h: Vec<S>,
    pub c: Vec<S>,
}

impl<S: Scalar> LstmState<S> {
    pub fn zeros(hidden: usize) -> Self {
        LstmState {
            h: vec![S::zero(); hidden],
            c: vec![S::zero(); hidden],
        }
    }
}

/// Single LSTM layer. Gate rows are laid out as `[input, forget, cell, output]`
/// and the weight acts on the concatenation `[x; h_prev]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Lstm<S> {
    pub weight: Matrix<S>,
    pub bias: Matrix<S>,
    input_dim: usize,
    hidden_dim: usize,
}

/// Values saved by a forward step for the backward pass.
#[derive(Debug, Clone)]
pub struct LstmCache<S> {
    joint_input: Vec<S>,
    c_prev: Vec<S>,
    gates: Vec<S>,
    tanh_c: Vec<S>,
}

impl<S: Scalar> Lstm<S> {
    pub fn new(input_dim: usize, hidden_dim: usize) -> Self {
        Lstm {
            weight: Matrix::zeros(4 * hidden_dim, input_dim + hidden_dim),
            bias: Matrix::zeros(4 * hidden_dim, 1),
            input_dim,
            hidden_dim,
        }
    }

    pub fn hidden_dim(&self) -> usize {
        self.hidden_dim
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn step(&self, x: &[S], prev: &LstmState<S>) -> (LstmState<S>, LstmCache<S>) {
        let hd = self.hidden_dim;
        let mut joint_input = Vec::with_capacity(self.input_dim + hd);
        joint_input.extend_from_slice(x);
        joint_input.extend_from_slice(&prev.h);

        let mut z = self.weight.matvec(&joint_input);
        for (zi, &b) in z.iter_mut().zip(self.bias.as_slice()) {
            *zi += b;
        }
        let mut gates = z;
        for (k, g) in gates.iter_mut().enumerate() {
            *g = if (2 * hd..3 * hd).contains(&k) {
                g.tanh()
            } else {
                sigmoid(*g)
            };
        }

        let mut c = vec![S::zero(); hd];
        let mut h = vec![S::zero(); hd];
        let mut tanh_c = vec![S::zero(); hd];
        for j in 0..hd {
            let (i, f, g, o) = (
                gates[j],
                gates[hd + j],
                gates[2 * hd + j],
                gates[3 * hd + j],
            );
            c[j] = f * prev.c[j] + i * g;
            tanh_c[j] = c[j].tanh();
            h[j] = o * tanh_c[j];
        }
        let cache = LstmCache {
            joint_input,
            c_prev: prev.c.clone(),
            gates,
            tanh_c,
        };
        (LstmState { h, c }, cache)
    }

    /// Backward through one step.
    ///
    /// `dh` and `dc` are the total gradients reaching this step's outputs.
    /// Parameter gradients are accumulated into `grad`; returns
    /// `(dx, dh_prev, dc_prev)`.
    pub fn step_backward(
        &self,
        cache: &LstmCache<S>,
        dh: &[S],
        dc: &[S],
        grad: &mut Lstm<S>,
    ) -> (Vec<S>, Vec<S>, Vec<S>) {
        let hd = self.hidden_dim;
        let one = S::one();
        let mut dz = vec![S::zero(); 4 * hd];
        let mut dc_prev = vec![S::zero(); hd];
        for j in 0..hd {
            let (i, f, g, o) = (
                cache.gates[j],
                cache.gates[hd + j],
                cache.gates[2 * hd + j],
                cache.gates[3 * hd + j],
            );
            let tc = cache.tanh_c[j];
            let d_o = dh[j] * tc;
            let dc_total = dc[j] + dh[j] * o * (one - tc * tc);
            let d_i = dc_total * g;
            let d_g = dc_total * i;
            let d_f = dc_total * cache.c_prev[j];
            dc_prev[j] = dc_total * f;
            dz[j] = d_i * i * (one - i);
            dz[hd + j] = d_f * f * (one - f);
            dz[2 * hd + j] = d_g * (one - g * g);
            dz[3 * hd + j] = d_o * o * (one - o);
        }
        grad.weight.outer_acc(&dz, &cache.joint_input);
        grad.bias.add_vec(&dz);
        let mut d_joint = vec![S::zero(); self.input_dim + hd];
        self.weight.matvec_t_acc(&dz, &mut d_joint);
        let dh_prev = d_joint.split_off(self.input_dim);
        (d_joint, dh_prev, dc_prev)
    }
}

/// Stack of LSTM layers, each feeding its hidden state to the next.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmStack<S> {
    pub layers: Vec<Lstm<S>>,
}

/// Per-layer, per-step caches of a stack run over a sequence.
#[derive(Debug, Clone)]
pub struct LstmStackCache<S> {
    steps: Vec<Vec<LstmCache<S>>>,
}

impl<S> LstmStackCache<S> {
    pub fn len(&self) -> usize {
        self.steps.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl<S: Scalar> LstmStack<S> {
    pub fn new(input_dim: usize, hidden_dim: usize, depth: usize) -> Self {
        let layers = (0..depth)
            .map(|l| Lstm::new(if l == 0 { input_dim } else { hidden_dim }, hidden_dim))
            .collect();
        LstmStack { layers }
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn hidden_dim(&self) -> usize {
        self.layers[0].hidden_dim()
    }

    pub fn zero_states(&self) -> Vec<LstmState<S>> {
        vec![LstmState::zeros(self.hidden_dim()); self.depth()]
    }

    /// Advances every layer by one token; returns the new states (top layer last).
    pub fn step(&self, x: &[S], states: &[LstmState<S>]) -> Vec<LstmState<S>> {
        let mut input = x.to_vec();
        let mut next = Vec::with_capacity(self.depth());
        for (layer, prev) in self.layers.iter().zip(states) {
            let (s, _) = layer.step(&input, prev);
            input = s.h.clone();
            next.push(s);
        }
        next
    }

    /// Runs the stack over a sequence. Returns the top-layer hidden vector per
    /// step, the final state of every layer, and the caches for backward.
    pub fn forward(
        &self,
        inputs: &[Vec<S>],
        init: &[LstmState<S>],
    ) -> (Vec<Vec<S>>, Vec<LstmState<S>>, LstmStackCache<S>) {
        let mut layer_inputs: Vec<Vec<S>> = inputs.to_vec();
        let mut finals = Vec::with_capacity(self.depth());
        let mut steps = Vec::with_capacity(self.depth());
        for (layer, start) in self.layers.iter().zip(init) {
            let mut state = start.clone();
            let mut caches = Vec::with_capacity(layer_inputs.len());
            let mut outputs = Vec::with_capacity(layer_inputs.len());
            for x in &layer_inputs {
                let (next, cache) = layer.step(x, &state);
                outputs.push(next.h.clone());
                caches.push(cache);
                state = next;
            }
            finals.push(state);
            steps.push(caches);
            layer_inputs = outputs;
        }
        (layer_inputs, finals, LstmStackCache { steps })
    }

    /// Backpropagates `d_top[t]` (gradient on the top-layer output at step t)
    /// plus optional gradients on each layer's final `(h, c)`.
    ///
    /// Returns the gradient per input step and per-layer gradients on the
    /// initial states.
    pub fn backward(
        &self,
        cache: &LstmStackCache<S>,
        d_top: &[Vec<S>],
        d_final: Option<&[LstmState<S>]>,
        grad: &mut LstmStack<S>,
    ) -> (Vec<Vec<S>>, Vec<LstmState<S>>) {
        let n = cache.len();
        let hd = self.hidden_dim();
        let mut d_outputs: Vec<Vec<S>> = d_top.to_vec();
        let mut d_init = vec![LstmState::zeros(hd); self.depth()];
        for l in (0..self.depth()).rev() {
            let layer = &self.layers[l];
            let (mut dh_next, mut dc_next) = match d_final {
                Some(f) => (f[l].h.clone(), f[l].c.clone()),
                None => (vec![S::zero(); hd], vec![S::zero(); hd]),
            };
            let mut d_inputs = vec![Vec::new(); n];
            for t in (0..n).rev() {
                let mut dh = d_outputs[t].clone();
                for (a, &b) in dh.iter_mut().zip(&dh_next) {
                    *a += b;
                }
                let (dx, dh_prev, dc_prev) =
                    layer.step_backward(&cache.steps[l][t], &dh, &dc_next, &mut grad.layers[l]);
                d_inputs[t] = dx;
                dh_next = dh_prev;
                dc_next = dc_prev;
            }
            d_init[l] = LstmState {
                h: dh_next,
                c: dc_next,
            };
            d_outputs = d_inputs;
        }
        (d_outputs, d_init)
    }

    pub fn push_tensors<'a>(&'a self, prefix: &str, out: &mut Vec<(String, &'a Matrix<S>)>) {
        for (l, layer) in self.layers.iter().enumerate() {
            out.push((format!("{prefix}.{l}.weight"), &layer.weight));
            out.push((format!("{prefix}.{l}.bias"), &layer.bias));
        }
    }

    pub fn push_tensors_mut<'a>(&'a mut self, out: &mut Vec<&'a mut Matrix<S>>) {
        for layer in &mut self.layers {
            out.push(&mut layer.weight);
            out.push(&mut layer.bias);
        }
    }
}
