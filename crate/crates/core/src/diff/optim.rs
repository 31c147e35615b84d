use serde::{Deserialize, Serialize};

use super::{Gradients, Matrix, ParamStore};
use crate::error::{NavError, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    Sgd,
    Adam,
}

/// Sign convention: ascent adds the gradient, descent subtracts it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Ascent,
    Descent,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

/// Stateful first-order optimizer bound to one parameter store layout.
#[derive(Debug, Clone, PartialEq)]
pub struct Optimizer<T> {
    kind: OptimizerKind,
    direction: Direction,
    lr: T,
    adam: AdamConfig,
    m: Vec<Matrix<T>>,
    v: Vec<Matrix<T>>,
    t: u64,
}

fn check_shapes<T: Scalar>(store: &ParamStore<T>, grads: &Gradients<T>) -> Result<()> {
    if store.len() != grads.len() {
        return Err(NavError::Shape(format!("{} gradients for {} parameters", grads.len(), store.len())));
    }
    for id in store.ids() {
        if store.get(id).shape() != grads.get(id).shape() {
            return Err(NavError::Shape(format!("gradient shape mismatch for {}", store.name(id))));
        }
    }
    Ok(())
}

impl<T: Scalar> Optimizer<T> {
    pub fn new(kind: OptimizerKind, direction: Direction, lr: T, store: &ParamStore<T>) -> Self {
        let zeros = || store.params().iter().map(|p| Matrix::zeros(p.value.rows(), p.value.cols())).collect();
        let (m, v) = match kind {
            OptimizerKind::Sgd => (Vec::new(), Vec::new()),
            OptimizerKind::Adam => (zeros(), zeros()),
        };
        Self { kind, direction, lr, adam: AdamConfig::default(), m, v, t: 0 }
    }

    pub fn sgd(direction: Direction, lr: T, store: &ParamStore<T>) -> Self {
        Self::new(OptimizerKind::Sgd, direction, lr, store)
    }

    pub fn adam(direction: Direction, lr: T, store: &ParamStore<T>) -> Self {
        Self::new(OptimizerKind::Adam, direction, lr, store)
    }

    pub fn with_adam_config(mut self, cfg: AdamConfig) -> Self {
        self.adam = cfg;
        self
    }

    pub fn kind(&self) -> OptimizerKind {
        self.kind
    }

    pub fn lr(&self) -> T {
        self.lr
    }

    pub fn set_lr(&mut self, lr: T) {
        self.lr = lr;
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    /// Applies one update; a zero learning rate leaves parameters bitwise unchanged.
    pub fn step(&mut self, store: &mut ParamStore<T>, grads: &Gradients<T>) -> Result<()> {
        check_shapes(store, grads)?;
        self.t += 1;
        let sign = match self.direction {
            Direction::Ascent => T::one(),
            Direction::Descent => -T::one(),
        };
        match self.kind {
            OptimizerKind::Sgd => {
                if self.lr == T::zero() {
                    return Ok(());
                }
                let step = sign * self.lr;
                for id in store.ids() {
                    let g = grads.get(id);
                    for (p, gv) in store.get_mut(id).data_mut().iter_mut().zip(g.data()) {
                        *p += step * *gv;
                    }
                }
            }
            OptimizerKind::Adam => {
                let (b1, b2) = (T::lit(self.adam.beta1), T::lit(self.adam.beta2));
                let eps = T::lit(self.adam.eps);
                let bc1 = T::one() - b1.powi(self.t.min(i32::MAX as u64) as i32);
                let bc2 = T::one() - b2.powi(self.t.min(i32::MAX as u64) as i32);
                let step = sign * self.lr / bc1;
                for id in store.ids() {
                    let g = grads.get(id).data();
                    let (m, v) = (self.m[id.0].data_mut(), self.v[id.0].data_mut());
                    for j in 0..g.len() {
                        m[j] = b1 * m[j] + (T::one() - b1) * g[j];
                        v[j] = b2 * v[j] + (T::one() - b2) * g[j] * g[j];
                    }
                    if self.lr == T::zero() {
                        continue;
                    }
                    for (j, p) in store.get_mut(id).data_mut().iter_mut().enumerate() {
                        *p += step * m[j] / ((v[j] / bc2).sqrt() + eps);
                    }
                }
            }
        }
        Ok(())
    }
}

/// One stateless update; `kind` Adam here takes a single bias-corrected step.
pub fn optimizer_step<T: Scalar>(
    store: &mut ParamStore<T>,
    grads: &Gradients<T>,
    lr: T,
    kind: OptimizerKind,
    direction: Direction,
) -> Result<()> {
    Optimizer::new(kind, direction, lr, store).step(store, grads)
}
