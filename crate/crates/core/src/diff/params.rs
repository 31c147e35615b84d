use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::Matrix;
use crate::error::{NavError, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ParamId(pub usize);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Param<T> {
    pub name: String,
    pub value: Matrix<T>,
}

/// Named parameter arrays with seeded initialization. Shapes never change after creation.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamStore<T> {
    params: Vec<Param<T>>,
    seed: u64,
    rng: ChaCha8Rng,
}

impl<T: Scalar> ParamStore<T> {
    pub fn new(seed: u64) -> Self {
        Self { params: Vec::new(), seed, rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    fn push(&mut self, name: &str, value: Matrix<T>) -> ParamId {
        assert!(self.find(name).is_none(), "duplicate parameter {name}");
        self.params.push(Param { name: name.to_string(), value });
        ParamId(self.params.len() - 1)
    }

    /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) initialization.
    pub fn add_fan_in(&mut self, name: &str, rows: usize, cols: usize, fan_in: usize) -> ParamId {
        let bound = 1.0 / (fan_in.max(1) as f64).sqrt();
        let data = (0..rows * cols).map(|_| T::lit(self.rng.random_range(-bound..bound))).collect();
        self.push(name, Matrix::from_vec(rows, cols, data).expect("sized"))
    }

    pub fn add_constant(&mut self, name: &str, rows: usize, cols: usize, v: T) -> ParamId {
        self.push(name, Matrix::filled(rows, cols, v))
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.params.len()).map(ParamId)
    }

    pub fn find(&self, name: &str) -> Option<ParamId> {
        self.params.iter().position(|p| p.name == name).map(ParamId)
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.params[id.0].name
    }

    pub fn get(&self, id: ParamId) -> &Matrix<T> {
        &self.params[id.0].value
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Matrix<T> {
        &mut self.params[id.0].value
    }

    pub fn params(&self) -> &[Param<T>] {
        &self.params
    }

    /// Total scalar count.
    pub fn size(&self) -> usize {
        self.params.iter().map(|p| p.value.len()).sum()
    }

    pub fn all_finite(&self) -> bool {
        self.params.iter().all(|p| p.value.all_finite())
    }

    /// Replaces a parameter's values, keeping its shape.
    pub fn assign(&mut self, id: ParamId, value: Matrix<T>) -> Result<()> {
        let p = &mut self.params[id.0];
        if p.value.shape() != value.shape() {
            return Err(NavError::Shape(format!(
                "{}: expected {:?}, got {:?}",
                p.name,
                p.value.shape(),
                value.shape()
            )));
        }
        p.value = value;
        Ok(())
    }

    /// Flattened values in parameter order.
    pub fn flatten(&self) -> Vec<T> {
        self.params.iter().flat_map(|p| p.value.data().iter().copied()).collect()
    }

    pub fn unflatten(&mut self, flat: &[T]) -> Result<()> {
        if flat.len() != self.size() {
            return Err(NavError::Shape(format!("{} values for {} parameters", flat.len(), self.size())));
        }
        let mut off = 0;
        for p in &mut self.params {
            let n = p.value.len();
            p.value.data_mut().copy_from_slice(&flat[off..off + n]);
            off += n;
        }
        Ok(())
    }
}

/// Gradients aligned with a [`ParamStore`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients<T> {
    grads: Vec<Matrix<T>>,
}

impl<T: Scalar> Gradients<T> {
    pub fn zeros_like(store: &ParamStore<T>) -> Self {
        Self { grads: store.params().iter().map(|p| Matrix::zeros(p.value.rows(), p.value.cols())).collect() }
    }

    pub fn get(&self, id: ParamId) -> &Matrix<T> {
        &self.grads[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Matrix<T> {
        &mut self.grads[id.0]
    }

    pub fn len(&self) -> usize {
        self.grads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grads.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (ParamId, &Matrix<T>)> {
        self.grads.iter().enumerate().map(|(i, g)| (ParamId(i), g))
    }

    pub fn flatten(&self) -> Vec<T> {
        self.grads.iter().flat_map(|g| g.data().iter().copied()).collect()
    }

    pub fn all_finite(&self) -> bool {
        self.grads.iter().all(|g| g.all_finite())
    }

    pub fn scale(&mut self, s: T) {
        for g in &mut self.grads {
            for v in g.data_mut() {
                *v *= s;
            }
        }
    }

    pub fn add_assign(&mut self, o: &Self) {
        for (a, b) in self.grads.iter_mut().zip(&o.grads) {
            a.add_assign(b);
        }
    }

    /// Global L2 norm.
    pub fn norm(&self) -> T {
        self.grads
            .iter()
            .flat_map(|g| g.data().iter())
            .fold(T::zero(), |a, v| a + *v * *v)
            .sqrt()
    }

    /// Rescales so the global norm is at most `max`.
    pub fn clip_norm(&mut self, max: T) {
        let n = self.norm();
        if n > max && n > T::zero() {
            self.scale(max / n);
        }
    }
}
