use std::collections::HashMap;

use super::matrix::{matmul_grad_a, matmul_grad_b, matmul_into};
use super::{Gradients, Matrix, ParamId, ParamStore};
use crate::error::{NavError, Result};
use crate::scalar::Scalar;

/// Handle to a node recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

/// Handle to a parameter store bound to a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StoreSlot(usize);

#[derive(Debug, Clone)]
enum Op<T> {
    Input,
    Param(StoreSlot, ParamId),
    MatMul(Var, Var),
    Affine(Var, Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Min(Var, Var),
    Scale(Var, T),
    AddScalar(Var),
    Tanh(Var),
    Sigmoid(Var),
    Relu(Var),
    Exp(Var),
    Log(Var),
    Softplus(Var),
    Square(Var),
    ConcatCols(Vec<Var>),
    ConcatRows(Vec<Var>),
    SliceCols(Var, usize),
    SliceRows(Var, usize),
    Reshape(Var),
    SumAll(Var),
    Mean(Var),
    SumCols(Var),
    LogSumExpRows(Var),
    SelectPerRow(Var, Vec<usize>),
}

#[derive(Debug, Clone)]
struct Node<T> {
    op: Op<T>,
    value: Option<Matrix<T>>,
    needs_grad: bool,
}

/// Records one forward computation for reverse-mode differentiation.
///
/// Parameter nodes read their values straight from the bound stores; each
/// parameter gets at most one node however often it is used.
#[derive(Debug)]
pub struct Tape<'s, T> {
    stores: Vec<(&'s ParamStore<T>, bool)>,
    nodes: Vec<Node<T>>,
    param_nodes: HashMap<(usize, ParamId), Var>,
}

/// Adjoints of every node after a backward pass.
#[derive(Debug, Clone)]
pub struct Adjoints<T> {
    adj: Vec<Option<Matrix<T>>>,
    params: Vec<(StoreSlot, ParamId, Var)>,
}

/// Broadcast pattern of the right operand of a binary op.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Bcast {
    Same,
    Scalar,
    Row,
    Col,
}

fn bcast_kind(a: (usize, usize), b: (usize, usize)) -> Option<Bcast> {
    if a == b {
        Some(Bcast::Same)
    } else if b == (1, 1) {
        Some(Bcast::Scalar)
    } else if b.0 == 1 && b.1 == a.1 {
        Some(Bcast::Row)
    } else if b.1 == 1 && b.0 == a.0 {
        Some(Bcast::Col)
    } else {
        None
    }
}

#[inline]
fn bidx(kind: Bcast, i: usize, cols: usize) -> usize {
    match kind {
        Bcast::Same => i,
        Bcast::Scalar => 0,
        Bcast::Row => i % cols,
        Bcast::Col => i / cols,
    }
}

#[inline]
fn softplus<T: Scalar>(x: T) -> T {
    // max(x, 0) + log1p(exp(-|x|))
    x.max(T::zero()) + (-x.abs()).exp().ln_1p()
}

#[inline]
fn sigmoid<T: Scalar>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

pub(crate) fn softplus_scalar<T: Scalar>(x: T) -> T {
    softplus(x)
}

impl<'s, T: Scalar> Default for Tape<'s, T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<'s, T: Scalar> Tape<'s, T> {
    pub fn new() -> Self {
        Self { stores: Vec::new(), nodes: Vec::new(), param_nodes: HashMap::new() }
    }

    /// Binds a store whose parameters receive gradients.
    pub fn bind(&mut self, store: &'s ParamStore<T>) -> StoreSlot {
        self.stores.push((store, true));
        StoreSlot(self.stores.len() - 1)
    }

    /// Binds a store whose parameters are treated as constants.
    pub fn bind_frozen(&mut self, store: &'s ParamStore<T>) -> StoreSlot {
        self.stores.push((store, false));
        StoreSlot(self.stores.len() - 1)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Matrix<T> {
        let node = &self.nodes[v.0];
        match (&node.op, &node.value) {
            (Op::Param(slot, id), _) => self.stores[slot.0].0.get(*id),
            (_, Some(m)) => m,
            _ => unreachable!("non-parameter node without value"),
        }
    }

    pub fn shape(&self, v: Var) -> (usize, usize) {
        self.value(v).shape()
    }

    /// Value of a 1×1 node.
    pub fn scalar(&self, v: Var) -> T {
        self.value(v).data()[0]
    }

    pub fn needs_grad(&self, v: Var) -> bool {
        self.nodes[v.0].needs_grad
    }

    fn push(&mut self, op: Op<T>, value: Matrix<T>, needs_grad: bool) -> Var {
        self.nodes.push(Node { op, value: Some(value), needs_grad });
        Var(self.nodes.len() - 1)
    }

    fn ng(&self, vars: &[Var]) -> bool {
        vars.iter().any(|v| self.nodes[v.0].needs_grad)
    }

    /// Records a constant.
    pub fn input(&mut self, m: Matrix<T>) -> Var {
        self.push(Op::Input, m, false)
    }

    pub fn constant(&mut self, rows: usize, cols: usize, v: T) -> Var {
        self.input(Matrix::filled(rows, cols, v))
    }

    pub fn param(&mut self, slot: StoreSlot, id: ParamId) -> Var {
        if let Some(v) = self.param_nodes.get(&(slot.0, id)) {
            return *v;
        }
        let needs_grad = self.stores[slot.0].1;
        self.nodes.push(Node { op: Op::Param(slot, id), value: None, needs_grad });
        let v = Var(self.nodes.len() - 1);
        self.param_nodes.insert((slot.0, id), v);
        v
    }

    /// Copy of `v` with the gradient path cut.
    pub fn detach(&mut self, v: Var) -> Var {
        let m = self.value(v).clone();
        self.input(m)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let ((r, k), (k2, n)) = (self.shape(a), self.shape(b));
        if k != k2 {
            return Err(NavError::Shape(format!("matmul {r}x{k} by {k2}x{n}")));
        }
        let mut out = Matrix::zeros(r, n);
        matmul_into(self.value(a).data(), self.value(b).data(), out.data_mut(), r, k, n);
        let ng = self.ng(&[a, b]);
        Ok(self.push(Op::MatMul(a, b), out, ng))
    }

    /// x·w + b with b broadcast over rows.
    pub fn affine(&mut self, x: Var, w: Var, b: Var) -> Result<Var> {
        let ((r, k), (k2, n), bs) = (self.shape(x), self.shape(w), self.shape(b));
        if k != k2 || bs != (1, n) {
            return Err(NavError::Shape(format!("affine {r}x{k} by {k2}x{n} plus {}x{}", bs.0, bs.1)));
        }
        let mut out = Matrix::zeros(r, n);
        matmul_into(self.value(x).data(), self.value(w).data(), out.data_mut(), r, k, n);
        let bias = self.value(b).data();
        for row in out.data_mut().chunks_mut(n) {
            for (o, bv) in row.iter_mut().zip(bias) {
                *o += *bv;
            }
        }
        let ng = self.ng(&[x, w, b]);
        Ok(self.push(Op::Affine(x, w, b), out, ng))
    }

    fn binary(&mut self, a: Var, b: Var, name: &str, f: impl Fn(T, T) -> T) -> Result<(Matrix<T>, bool)> {
        let (sa, sb) = (self.shape(a), self.shape(b));
        let kind = bcast_kind(sa, sb)
            .ok_or_else(|| NavError::Shape(format!("{name} {}x{} with {}x{}", sa.0, sa.1, sb.0, sb.1)))?;
        let (av, bv) = (self.value(a).data(), self.value(b).data());
        let data = av.iter().enumerate().map(|(i, x)| f(*x, bv[bidx(kind, i, sa.1)])).collect();
        Ok((Matrix::from_vec(sa.0, sa.1, data)?, self.ng(&[a, b])))
    }

    /// Elementwise a + b; b may be 1×1, 1×n or r×1 and is broadcast.
    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let (m, ng) = self.binary(a, b, "add", |x, y| x + y)?;
        Ok(self.push(Op::Add(a, b), m, ng))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        let (m, ng) = self.binary(a, b, "sub", |x, y| x - y)?;
        Ok(self.push(Op::Sub(a, b), m, ng))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (m, ng) = self.binary(a, b, "mul", |x, y| x * y)?;
        Ok(self.push(Op::Mul(a, b), m, ng))
    }

    /// Elementwise minimum of equally shaped operands; ties route the gradient to `a`.
    pub fn min(&mut self, a: Var, b: Var) -> Result<Var> {
        if self.shape(a) != self.shape(b) {
            return Err(NavError::Shape("min operands differ in shape".into()));
        }
        let (m, ng) = self.binary(a, b, "min", |x, y| if y < x { y } else { x })?;
        Ok(self.push(Op::Min(a, b), m, ng))
    }

    fn unary(&mut self, a: Var, op: Op<T>, f: impl Fn(T) -> T) -> Var {
        let m = self.value(a).map(f);
        let ng = self.ng(&[a]);
        self.push(op, m, ng)
    }

    pub fn scale(&mut self, a: Var, s: T) -> Var {
        self.unary(a, Op::Scale(a, s), |x| x * s)
    }

    pub fn neg(&mut self, a: Var) -> Var {
        self.scale(a, -T::one())
    }

    pub fn add_scalar(&mut self, a: Var, s: T) -> Var {
        self.unary(a, Op::AddScalar(a), |x| x + s)
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        self.unary(a, Op::Tanh(a), |x| x.tanh())
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        self.unary(a, Op::Sigmoid(a), sigmoid)
    }

    pub fn relu(&mut self, a: Var) -> Var {
        self.unary(a, Op::Relu(a), |x| x.max(T::zero()))
    }

    pub fn exp(&mut self, a: Var) -> Var {
        self.unary(a, Op::Exp(a), |x| x.exp())
    }

    pub fn log(&mut self, a: Var) -> Var {
        self.unary(a, Op::Log(a), |x| x.ln())
    }

    /// log(1 + exp(x)), evaluated stably.
    pub fn softplus(&mut self, a: Var) -> Var {
        self.unary(a, Op::Softplus(a), softplus)
    }

    pub fn square(&mut self, a: Var) -> Var {
        self.unary(a, Op::Square(a), |x| x * x)
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Result<Var> {
        let rows = parts.first().map(|v| self.shape(*v).0).ok_or_else(|| NavError::Shape("empty concat".into()))?;
        if parts.iter().any(|v| self.shape(*v).0 != rows) {
            return Err(NavError::Shape("concat_cols row mismatch".into()));
        }
        let cols: usize = parts.iter().map(|v| self.shape(*v).1).sum();
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for v in parts {
                data.extend_from_slice(self.value(*v).row(r));
            }
        }
        let ng = self.ng(parts);
        Ok(self.push(Op::ConcatCols(parts.to_vec()), Matrix::from_vec(rows, cols, data)?, ng))
    }

    pub fn concat_rows(&mut self, parts: &[Var]) -> Result<Var> {
        let mats: Vec<&Matrix<T>> = parts.iter().map(|v| self.value(*v)).collect();
        if mats.is_empty() {
            return Err(NavError::Shape("empty concat".into()));
        }
        let m = Matrix::vstack(&mats)?;
        let ng = self.ng(parts);
        Ok(self.push(Op::ConcatRows(parts.to_vec()), m, ng))
    }

    pub fn slice_cols(&mut self, a: Var, start: usize, len: usize) -> Result<Var> {
        let (r, c) = self.shape(a);
        if start + len > c {
            return Err(NavError::Shape(format!("columns {start}..{} of {c}", start + len)));
        }
        let src = self.value(a);
        let mut data = Vec::with_capacity(r * len);
        for i in 0..r {
            data.extend_from_slice(&src.row(i)[start..start + len]);
        }
        let ng = self.ng(&[a]);
        Ok(self.push(Op::SliceCols(a, start), Matrix::from_vec(r, len, data)?, ng))
    }

    pub fn slice_rows(&mut self, a: Var, start: usize, len: usize) -> Result<Var> {
        let (r, c) = self.shape(a);
        if start + len > r {
            return Err(NavError::Shape(format!("rows {start}..{} of {r}", start + len)));
        }
        let data = self.value(a).data()[start * c..(start + len) * c].to_vec();
        let ng = self.ng(&[a]);
        Ok(self.push(Op::SliceRows(a, start), Matrix::from_vec(len, c, data)?, ng))
    }

    /// Same row-major data viewed with a new shape.
    pub fn reshape(&mut self, a: Var, rows: usize, cols: usize) -> Result<Var> {
        let m = Matrix::from_vec(rows, cols, self.value(a).data().to_vec())?;
        let ng = self.ng(&[a]);
        Ok(self.push(Op::Reshape(a), m, ng))
    }

    pub fn sum_all(&mut self, a: Var) -> Var {
        let s = self.value(a).sum();
        let ng = self.ng(&[a]);
        self.push(Op::SumAll(a), Matrix::scalar(s), ng)
    }

    pub fn mean(&mut self, a: Var) -> Var {
        let m = self.value(a);
        let s = m.sum() / T::lit(m.len().max(1) as f64);
        let ng = self.ng(&[a]);
        self.push(Op::Mean(a), Matrix::scalar(s), ng)
    }

    /// Row sums as an r×1 column.
    pub fn sum_cols(&mut self, a: Var) -> Var {
        let m = self.value(a);
        let data = (0..m.rows()).map(|r| m.row(r).iter().fold(T::zero(), |s, v| s + *v)).collect();
        let out = Matrix::from_vec(m.rows(), 1, data).expect("sized");
        let ng = self.ng(&[a]);
        self.push(Op::SumCols(a), out, ng)
    }

    /// Row-wise log-sum-exp as an r×1 column.
    pub fn logsumexp_rows(&mut self, a: Var) -> Var {
        let m = self.value(a);
        let data = (0..m.rows())
            .map(|r| {
                let row = m.row(r);
                let mx = row.iter().fold(T::neg_infinity(), |a, b| a.max(*b));
                mx + row.iter().fold(T::zero(), |s, v| s + (*v - mx).exp()).ln()
            })
            .collect();
        let out = Matrix::from_vec(m.rows(), 1, data).expect("sized");
        let ng = self.ng(&[a]);
        self.push(Op::LogSumExpRows(a), out, ng)
    }

    /// Picks column `idx[r]` from each row r, giving an r×1 column.
    pub fn select_per_row(&mut self, a: Var, idx: &[usize]) -> Result<Var> {
        let (r, c) = self.shape(a);
        if idx.len() != r || idx.iter().any(|i| *i >= c) {
            return Err(NavError::Shape(format!("{} indices into {r}x{c}", idx.len())));
        }
        let m = self.value(a);
        let data = idx.iter().enumerate().map(|(i, j)| m.get(i, *j)).collect();
        let out = Matrix::from_vec(r, 1, data)?;
        let ng = self.ng(&[a]);
        Ok(self.push(Op::SelectPerRow(a, idx.to_vec()), out, ng))
    }

    /// Reverse pass from a 1×1 loss.
    pub fn backward(&self, loss: Var) -> Result<Adjoints<T>> {
        if self.shape(loss) != (1, 1) {
            let (r, c) = self.shape(loss);
            return Err(NavError::Usage(format!("backward needs a scalar loss, got {r}x{c}")));
        }
        let n = loss.0 + 1;
        let mut adj: Vec<Option<Matrix<T>>> = vec![None; n];
        adj[loss.0] = Some(Matrix::scalar(T::one()));
        for i in (0..n).rev() {
            if !self.nodes[i].needs_grad {
                continue;
            }
            let Some(g) = adj[i].take() else { continue };
            self.propagate(i, &g, &mut adj);
            adj[i] = Some(g);
        }
        let params = self
            .param_nodes
            .iter()
            .filter(|(_, v)| v.0 < n)
            .map(|((s, id), v)| (StoreSlot(*s), *id, *v))
            .collect();
        Ok(Adjoints { adj, params })
    }

    fn acc<'a>(&self, adj: &'a mut [Option<Matrix<T>>], v: Var) -> Option<&'a mut Matrix<T>> {
        if !self.nodes[v.0].needs_grad {
            return None;
        }
        let (r, c) = self.shape(v);
        Some(adj[v.0].get_or_insert_with(|| Matrix::zeros(r, c)))
    }

    fn acc_map(&self, adj: &mut [Option<Matrix<T>>], v: Var, g: &Matrix<T>, f: impl Fn(usize, T) -> T) {
        if let Some(d) = self.acc(adj, v) {
            for (i, (o, gv)) in d.data_mut().iter_mut().zip(g.data()).enumerate() {
                *o += f(i, *gv);
            }
        }
    }

    fn acc_bcast(&self, adj: &mut [Option<Matrix<T>>], b: Var, a_shape: (usize, usize), g: &Matrix<T>, f: impl Fn(usize, T) -> T) {
        let kind = bcast_kind(a_shape, self.shape(b)).expect("validated");
        if let Some(d) = self.acc(adj, b) {
            let dd = d.data_mut();
            for (i, gv) in g.data().iter().enumerate() {
                dd[bidx(kind, i, a_shape.1)] += f(i, *gv);
            }
        }
    }

    fn propagate(&self, i: usize, g: &Matrix<T>, adj: &mut [Option<Matrix<T>>]) {
        let out = self.nodes[i].value.as_ref();
        match &self.nodes[i].op {
            Op::Input | Op::Param(..) => {}
            Op::MatMul(a, b) | Op::Affine(a, b, _) => {
                let ((r, k), (_, n)) = (self.shape(*a), self.shape(*b));
                if self.nodes[a.0].needs_grad {
                    let bv = self.value(*b).data();
                    let d = self.acc(adj, *a).expect("needs grad");
                    matmul_grad_a(g.data(), bv, d.data_mut(), r, k, n);
                }
                if self.nodes[b.0].needs_grad {
                    let av = self.value(*a).data();
                    let d = self.acc(adj, *b).expect("needs grad");
                    matmul_grad_b(av, g.data(), d.data_mut(), r, k, n);
                }
                if let Op::Affine(_, _, bias) = &self.nodes[i].op {
                    if let Some(d) = self.acc(adj, *bias) {
                        let dd = d.data_mut();
                        for row in g.data().chunks(n) {
                            for (o, gv) in dd.iter_mut().zip(row) {
                                *o += *gv;
                            }
                        }
                    }
                }
            }
            Op::Add(a, b) => {
                let sa = self.shape(*a);
                self.acc_map(adj, *a, g, |_, gv| gv);
                self.acc_bcast(adj, *b, sa, g, |_, gv| gv);
            }
            Op::Sub(a, b) => {
                let sa = self.shape(*a);
                self.acc_map(adj, *a, g, |_, gv| gv);
                self.acc_bcast(adj, *b, sa, g, |_, gv| -gv);
            }
            Op::Mul(a, b) => {
                let sa = self.shape(*a);
                let kind = bcast_kind(sa, self.shape(*b)).expect("validated");
                let (av, bv) = (self.value(*a).data(), self.value(*b).data());
                self.acc_map(adj, *a, g, |j, gv| gv * bv[bidx(kind, j, sa.1)]);
                self.acc_bcast(adj, *b, sa, g, |j, gv| gv * av[j]);
            }
            Op::Min(a, b) => {
                let (av, bv) = (self.value(*a).data(), self.value(*b).data());
                self.acc_map(adj, *a, g, |j, gv| if bv[j] < av[j] { T::zero() } else { gv });
                self.acc_map(adj, *b, g, |j, gv| if bv[j] < av[j] { gv } else { T::zero() });
            }
            Op::Scale(a, s) => {
                let s = *s;
                self.acc_map(adj, *a, g, |_, gv| gv * s);
            }
            Op::AddScalar(a) => self.acc_map(adj, *a, g, |_, gv| gv),
            Op::Tanh(a) => {
                let y = out.expect("value").data();
                self.acc_map(adj, *a, g, |j, gv| gv * (T::one() - y[j] * y[j]));
            }
            Op::Sigmoid(a) => {
                let y = out.expect("value").data();
                self.acc_map(adj, *a, g, |j, gv| gv * y[j] * (T::one() - y[j]));
            }
            Op::Relu(a) => {
                let x = self.value(*a).data();
                self.acc_map(adj, *a, g, |j, gv| if x[j] > T::zero() { gv } else { T::zero() });
            }
            Op::Exp(a) => {
                let y = out.expect("value").data();
                self.acc_map(adj, *a, g, |j, gv| gv * y[j]);
            }
            Op::Log(a) => {
                let x = self.value(*a).data();
                self.acc_map(adj, *a, g, |j, gv| gv / x[j]);
            }
            Op::Softplus(a) => {
                let x = self.value(*a).data();
                self.acc_map(adj, *a, g, |j, gv| gv * sigmoid(x[j]));
            }
            Op::Square(a) => {
                let x = self.value(*a).data();
                let two = T::lit(2.0);
                self.acc_map(adj, *a, g, |j, gv| gv * two * x[j]);
            }
            Op::ConcatCols(parts) => {
                let total = g.cols();
                let mut off = 0;
                for v in parts {
                    let (r, c) = self.shape(*v);
                    if let Some(d) = self.acc(adj, *v) {
                        for row in 0..r {
                            let src = &g.data()[row * total + off..row * total + off + c];
                            for (o, s) in d.row_mut(row).iter_mut().zip(src) {
                                *o += *s;
                            }
                        }
                    }
                    off += c;
                }
            }
            Op::ConcatRows(parts) => {
                let mut off = 0;
                for v in parts {
                    let len = self.value(*v).len();
                    if let Some(d) = self.acc(adj, *v) {
                        for (o, s) in d.data_mut().iter_mut().zip(&g.data()[off..off + len]) {
                            *o += *s;
                        }
                    }
                    off += len;
                }
            }
            Op::SliceCols(a, start) => {
                let start = *start;
                let len = g.cols();
                if let Some(d) = self.acc(adj, *a) {
                    for row in 0..g.rows() {
                        for (o, s) in d.row_mut(row)[start..start + len].iter_mut().zip(g.row(row)) {
                            *o += *s;
                        }
                    }
                }
            }
            Op::SliceRows(a, start) => {
                let c = g.cols();
                let start = *start;
                if let Some(d) = self.acc(adj, *a) {
                    for (o, s) in d.data_mut()[start * c..].iter_mut().zip(g.data()) {
                        *o += *s;
                    }
                }
            }
            Op::Reshape(a) => self.acc_map(adj, *a, g, |_, gv| gv),
            Op::SumAll(a) => {
                let gv = g.data()[0];
                self.acc_map_const(adj, *a, gv);
            }
            Op::Mean(a) => {
                let gv = g.data()[0] / T::lit(self.value(*a).len().max(1) as f64);
                self.acc_map_const(adj, *a, gv);
            }
            Op::SumCols(a) => {
                let c = self.shape(*a).1;
                if let Some(d) = self.acc(adj, *a) {
                    for (j, o) in d.data_mut().iter_mut().enumerate() {
                        *o += g.data()[j / c];
                    }
                }
            }
            Op::LogSumExpRows(a) => {
                let x = self.value(*a);
                let y = out.expect("value").data();
                let c = x.cols();
                let xd = x.data();
                if let Some(d) = self.acc(adj, *a) {
                    for (j, o) in d.data_mut().iter_mut().enumerate() {
                        let r = j / c;
                        *o += g.data()[r] * (xd[j] - y[r]).exp();
                    }
                }
            }
            Op::SelectPerRow(a, idx) => {
                if let Some(d) = self.acc(adj, *a) {
                    for (r, j) in idx.iter().enumerate() {
                        let cur = d.get(r, *j);
                        d.set(r, *j, cur + g.data()[r]);
                    }
                }
            }
        }
    }

    fn acc_map_const(&self, adj: &mut [Option<Matrix<T>>], v: Var, gv: T) {
        if let Some(d) = self.acc(adj, v) {
            for o in d.data_mut() {
                *o += gv;
            }
        }
    }
}

impl<T: Scalar> Adjoints<T> {
    /// Adjoint of a node, or `None` if no gradient reached it.
    pub fn wrt(&self, v: Var) -> Option<&Matrix<T>> {
        self.adj.get(v.0).and_then(|a| a.as_ref())
    }

    /// Gradients for the parameters of one bound store; unused parameters get zeros.
    pub fn gradients(&self, slot: StoreSlot, store: &ParamStore<T>) -> Gradients<T> {
        let mut out = Gradients::zeros_like(store);
        for (s, id, v) in &self.params {
            if *s == slot {
                if let Some(a) = self.wrt(*v) {
                    out.get_mut(*id).add_assign(a);
                }
            }
        }
        out
    }
}
