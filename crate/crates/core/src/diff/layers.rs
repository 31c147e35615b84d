use serde::{Deserialize, Serialize};

use super::tape::{StoreSlot, Tape, Var};
use super::{Matrix, ParamId, ParamStore};
use crate::error::{NavError, Result};
use crate::scalar::Scalar;

/// Lower bound of the Gaussian head's log standard deviation.
pub const LOG_STD_MIN: f64 = -5.0;
/// Upper bound of the Gaussian head's log standard deviation.
pub const LOG_STD_MAX: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Identity,
    Relu,
    Tanh,
    Sigmoid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub size: usize,
    pub activation: Activation,
}

impl LayerSpec {
    pub fn new(size: usize, activation: Activation) -> Self {
        Self { size, activation }
    }
}

/// Architecture: optional LSTM front, dense stack, optional Gaussian head.
///
/// With a Gaussian head of `k` channels the last dense layer must have `2k`
/// outputs, read as `k` means followed by `k` unbounded log-std values.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub input_dim: usize,
    #[serde(default)]
    pub recurrent: Option<usize>,
    pub layers: Vec<LayerSpec>,
    #[serde(default)]
    pub gaussian_head: Option<usize>,
}

impl NetworkSpec {
    /// Dense stack with `hidden` activation on hidden layers and a linear output.
    pub fn mlp(input_dim: usize, hidden: &[usize], output_dim: usize, activation: Activation) -> Self {
        let mut layers: Vec<LayerSpec> = hidden.iter().map(|h| LayerSpec::new(*h, activation)).collect();
        layers.push(LayerSpec::new(output_dim, Activation::Identity));
        Self { input_dim, recurrent: None, layers, gaussian_head: None }
    }

    pub fn with_recurrent(mut self, hidden: usize) -> Self {
        self.recurrent = Some(hidden);
        self
    }

    /// Reinterprets the final layer as a Gaussian head over `output/2` channels.
    pub fn with_gaussian_head(mut self) -> Self {
        self.gaussian_head = self.layers.last().map(|l| l.size / 2);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 {
            return Err(NavError::Config("input_dim: must be positive".into()));
        }
        if self.recurrent == Some(0) {
            return Err(NavError::Config("recurrent: hidden size must be positive".into()));
        }
        if self.layers.iter().any(|l| l.size == 0) {
            return Err(NavError::Config("layers: sizes must be positive".into()));
        }
        if let Some(k) = self.gaussian_head {
            let last = self.layers.last().map_or(0, |l| l.size);
            if k == 0 || last != 2 * k {
                return Err(NavError::Config(format!(
                    "gaussian_head: {k} channels need a final layer of {}, found {last}",
                    2 * k
                )));
            }
        }
        Ok(())
    }

    /// Width fed into the dense stack.
    pub fn dense_input_dim(&self) -> usize {
        self.recurrent.unwrap_or(self.input_dim)
    }

    /// Width of the dense stack's output (before any head split).
    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(self.dense_input_dim(), |l| l.size)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct DenseIds {
    w: ParamId,
    b: ParamId,
    activation: Activation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct LstmIds {
    wx: ParamId,
    wh: ParamId,
    b: ParamId,
    hidden: usize,
}

/// LSTM hidden and cell state, one row per batch element.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmState<T> {
    pub h: Matrix<T>,
    pub c: Matrix<T>,
}

impl<T: Scalar> LstmState<T> {
    pub fn zeros(batch: usize, hidden: usize) -> Self {
        Self { h: Matrix::zeros(batch, hidden), c: Matrix::zeros(batch, hidden) }
    }
}

/// Recurrent state recorded on a tape.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TapeLstmState {
    pub h: Var,
    pub c: Var,
}

/// Mean and standard deviation produced by a Gaussian head.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TapeGaussian {
    pub mu: Var,
    pub log_std: Var,
}

/// Parameters plus architecture.
#[derive(Debug, Clone, PartialEq)]
pub struct Network<T> {
    spec: NetworkSpec,
    store: ParamStore<T>,
    lstm: Option<LstmIds>,
    dense: Vec<DenseIds>,
}

impl<T: Scalar> Network<T> {
    pub fn new(spec: NetworkSpec, seed: u64) -> Result<Self> {
        spec.validate()?;
        let mut store = ParamStore::new(seed);
        let lstm = spec.recurrent.map(|h| {
            let ids = LstmIds {
                wx: store.add_fan_in("lstm/wx", spec.input_dim, 4 * h, h),
                wh: store.add_fan_in("lstm/wh", h, 4 * h, h),
                b: store.add_fan_in("lstm/b", 1, 4 * h, h),
                hidden: h,
            };
            // Forget-gate bias starts at one.
            let b = store.get_mut(ids.b);
            for j in h..2 * h {
                b.set(0, j, T::one());
            }
            ids
        });
        let mut fan_in = spec.dense_input_dim();
        let mut dense = Vec::with_capacity(spec.layers.len());
        for (i, l) in spec.layers.iter().enumerate() {
            dense.push(DenseIds {
                w: store.add_fan_in(&format!("dense{i}/w"), fan_in, l.size, fan_in),
                b: store.add_fan_in(&format!("dense{i}/b"), 1, l.size, fan_in),
                activation: l.activation,
            });
            fan_in = l.size;
        }
        Ok(Self { spec, store, lstm, dense })
    }

    pub fn spec(&self) -> &NetworkSpec {
        &self.spec
    }

    pub fn store(&self) -> &ParamStore<T> {
        &self.store
    }

    pub fn store_mut(&mut self) -> &mut ParamStore<T> {
        &mut self.store
    }

    pub fn seed(&self) -> u64 {
        self.store.seed()
    }

    pub fn recurrent_hidden(&self) -> Option<usize> {
        self.lstm.map(|l| l.hidden)
    }

    /// Copies parameter values from a network of identical architecture.
    pub fn copy_from(&mut self, other: &Self) -> Result<()> {
        if self.spec != other.spec {
            return Err(NavError::Shape("copy between different architectures".into()));
        }
        self.store.unflatten(&other.store.flatten())
    }

    /// `self ← (1−τ)·self + τ·other`.
    pub fn soft_update(&mut self, other: &Self, tau: T) -> Result<()> {
        if self.spec != other.spec {
            return Err(NavError::Shape("soft update between different architectures".into()));
        }
        for id in other.store.ids() {
            let src = other.store.get(id).clone();
            let dst = self.store.get_mut(id);
            for (d, s) in dst.data_mut().iter_mut().zip(src.data()) {
                *d = (T::one() - tau) * *d + tau * *s;
            }
        }
        Ok(())
    }

    /// One LSTM step on the tape. Gate order: input, forget, cell, output.
    pub fn lstm_step_tape(&self, tape: &mut Tape<'_, T>, slot: StoreSlot, x: Var, state: TapeLstmState) -> Result<TapeLstmState> {
        let ids = self.lstm.ok_or_else(|| NavError::Usage("network has no recurrent front".into()))?;
        if tape.shape(x).1 != self.spec.input_dim {
            return Err(NavError::Shape(format!("input width {} != {}", tape.shape(x).1, self.spec.input_dim)));
        }
        let h = ids.hidden;
        let (wx, wh, b) = (tape.param(slot, ids.wx), tape.param(slot, ids.wh), tape.param(slot, ids.b));
        let zx = tape.affine(x, wx, b)?;
        let zh = tape.matmul(state.h, wh)?;
        let z = tape.add(zx, zh)?;
        let zi = tape.slice_cols(z, 0, h)?;
        let zf = tape.slice_cols(z, h, h)?;
        let zg = tape.slice_cols(z, 2 * h, h)?;
        let zo = tape.slice_cols(z, 3 * h, h)?;
        let i = tape.sigmoid(zi);
        let f = tape.sigmoid(zf);
        let g = tape.tanh(zg);
        let o = tape.sigmoid(zo);
        let fc = tape.mul(f, state.c)?;
        let ig = tape.mul(i, g)?;
        let c = tape.add(fc, ig)?;
        let tc = tape.tanh(c);
        let hn = tape.mul(o, tc)?;
        Ok(TapeLstmState { h: hn, c })
    }

    /// Initial zero state recorded as constants.
    pub fn lstm_zero_state_tape(&self, tape: &mut Tape<'_, T>, batch: usize) -> Result<TapeLstmState> {
        let h = self.recurrent_hidden().ok_or_else(|| NavError::Usage("network has no recurrent front".into()))?;
        Ok(TapeLstmState { h: tape.constant(batch, h, T::zero()), c: tape.constant(batch, h, T::zero()) })
    }

    /// Dense stack on the tape; input width must be `dense_input_dim`.
    pub fn dense_tape(&self, tape: &mut Tape<'_, T>, slot: StoreSlot, x: Var) -> Result<Var> {
        if tape.shape(x).1 != self.spec.dense_input_dim() {
            return Err(NavError::Shape(format!(
                "dense input width {} != {}",
                tape.shape(x).1,
                self.spec.dense_input_dim()
            )));
        }
        let mut cur = x;
        for d in &self.dense {
            let (w, b) = (tape.param(slot, d.w), tape.param(slot, d.b));
            let z = tape.affine(cur, w, b)?;
            cur = match d.activation {
                Activation::Identity => z,
                Activation::Relu => tape.relu(z),
                Activation::Tanh => tape.tanh(z),
                Activation::Sigmoid => tape.sigmoid(z),
            };
        }
        Ok(cur)
    }

    /// Splits a Gaussian-head output into μ and a bounded log σ.
    pub fn gaussian_tape(&self, tape: &mut Tape<'_, T>, out: Var) -> Result<TapeGaussian> {
        let k = self.spec.gaussian_head.ok_or_else(|| NavError::Usage("network has no Gaussian head".into()))?;
        let mu = tape.slice_cols(out, 0, k)?;
        let raw = tape.slice_cols(out, k, k)?;
        let t = tape.tanh(raw);
        let half = T::lit(0.5 * (LOG_STD_MAX - LOG_STD_MIN));
        let scaled = tape.scale(t, half);
        let log_std = tape.add_scalar(scaled, T::lit(LOG_STD_MIN) + half);
        Ok(TapeGaussian { mu, log_std })
    }

    /// Runs one batch through the dense stack (no recurrent front).
    pub fn eval_dense(&self, x: &Matrix<T>) -> Result<Matrix<T>> {
        let mut tape = Tape::new();
        let slot = tape.bind_frozen(&self.store);
        let xv = tape.input(x.clone());
        let y = self.dense_tape(&mut tape, slot, xv)?;
        Ok(tape.value(y).clone())
    }

    /// Gaussian head outputs (μ, log σ) for a batch through the dense stack.
    pub fn eval_gaussian(&self, x: &Matrix<T>) -> Result<(Matrix<T>, Matrix<T>)> {
        let mut tape = Tape::new();
        let slot = tape.bind_frozen(&self.store);
        let xv = tape.input(x.clone());
        let out = self.dense_tape(&mut tape, slot, xv)?;
        let g = self.gaussian_tape(&mut tape, out)?;
        Ok((tape.value(g.mu).clone(), tape.value(g.log_std).clone()))
    }

    /// One recurrent step outside any tape.
    pub fn eval_lstm_step(&self, x: &Matrix<T>, state: &LstmState<T>) -> Result<LstmState<T>> {
        let mut tape = Tape::new();
        let slot = tape.bind_frozen(&self.store);
        let xv = tape.input(x.clone());
        let s = TapeLstmState { h: tape.input(state.h.clone()), c: tape.input(state.c.clone()) };
        let n = self.lstm_step_tape(&mut tape, slot, xv, s)?;
        Ok(LstmState { h: tape.value(n.h).clone(), c: tape.value(n.c).clone() })
    }

    /// Feeds a sequence (one row per step) through the whole network.
    ///
    /// Returns one output row per step and the final recurrent state; an empty
    /// sequence returns an empty output and the initial state unchanged.
    pub fn forward(&self, inputs: &Matrix<T>, initial: Option<LstmState<T>>) -> Result<(Matrix<T>, Option<LstmState<T>>)> {
        if inputs.cols() != self.spec.input_dim {
            return Err(NavError::Shape(format!("input width {} != {}", inputs.cols(), self.spec.input_dim)));
        }
        let out_dim = self.spec.output_dim();
        match self.lstm {
            None => Ok((self.eval_dense(inputs)?, None)),
            Some(ids) => {
                let mut state = initial.unwrap_or_else(|| LstmState::zeros(1, ids.hidden));
                if state.h.shape() != (1, ids.hidden) || state.c.shape() != (1, ids.hidden) {
                    return Err(NavError::Shape("recurrent state width".into()));
                }
                let mut data = Vec::with_capacity(inputs.rows() * out_dim);
                for r in 0..inputs.rows() {
                    let x = Matrix::row_vector(inputs.row(r).to_vec());
                    state = self.eval_lstm_step(&x, &state)?;
                    data.extend_from_slice(self.eval_dense(&state.h)?.data());
                }
                Ok((Matrix::from_vec(inputs.rows(), out_dim, data)?, Some(state)))
            }
        }
    }
}
