//! Reverse-mode differentiation over a linear tape.
//!
//! A [`Tape`] borrows a [`ParamStore`] for one forward pass. Every op appends
//! a node holding its value; [`Tape::backward`] walks the nodes in reverse and
//! returns the parameter gradients as a [`Gradients`] value, which the caller
//! folds into the store with [`ParamStore::accumulate`]. Gradients add up
//! across calls until [`ParamStore::zero_grads`].

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::{self, NORM_EPS};
use crate::tensor::{ParamId, ParamStore};

/// Handle to a node on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

#[derive(Debug, Clone)]
enum Op {
    Input,
    Param(ParamId),
    MatVec(Var, Var),
    Add(Var, Var),
    Mul(Var, Var),
    OneMinus(Var),
    Scale(Var, f64),
    Sigmoid(Var),
    Tanh(Var),
    Concat(Vec<Var>),
    SumVecs(Vec<Var>),
    Row(Var, usize),
    L2Normalize(Var),
    SumAll(Var),
    CrossEntropy(Var, usize),
}

#[derive(Debug, Clone)]
struct Node {
    op: Op,
    shape: Vec<usize>,
    /// Empty for parameter nodes, whose values live in the store.
    value: Vec<f64>,
}

pub struct Tape<'p> {
    params: &'p ParamStore,
    nodes: Vec<Node>,
    param_nodes: Vec<Option<Var>>,
}

/// Parameter gradients produced by one backward pass. Row lookups into a
/// parameter matrix are kept sparse.
#[derive(Debug, Clone, Default)]
pub struct Gradients {
    per_param: Vec<Option<Vec<f64>>>,
    rows: Vec<(ParamId, usize, Vec<f64>)>,
}

impl Gradients {
    /// Dense gradient of a parameter with `numel` entries (zeros if untouched).
    pub fn dense(&self, id: ParamId, numel: usize) -> Vec<f64> {
        let mut out = match self.per_param.get(id.0).and_then(|g| g.as_deref()) {
            Some(g) => g.to_vec(),
            None => vec![0.0; numel],
        };
        for (pid, row, g) in &self.rows {
            if *pid == id {
                let cols = g.len();
                out[row * cols..(row + 1) * cols]
                    .iter_mut()
                    .zip(g)
                    .for_each(|(o, d)| *o += d);
            }
        }
        out
    }

    pub fn touches(&self, id: ParamId) -> bool {
        self.per_param.get(id.0).is_some_and(Option::is_some) || self.rows.iter().any(|(p, _, _)| *p == id)
    }
}

impl ParamStore {
    /// Adds `grads` into each trainable parameter's gradient buffer.
    pub fn accumulate(&mut self, grads: &Gradients) -> Result<()> {
        for (id, param) in self.iter_mut() {
            if !param.trainable {
                continue;
            }
            if let Some(Some(g)) = grads.per_param.get(id.0) {
                param.tensor.accumulate_grad(g)?;
            }
        }
        for (id, row, g) in &grads.rows {
            if self.param(*id).trainable {
                self.get_mut(*id).accumulate_grad_row(*row, g)?;
            }
        }
        Ok(())
    }
}

fn check_finite(op: &'static str, v: &[f64]) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(op))
    }
}

impl<'p> Tape<'p> {
    pub fn new(params: &'p ParamStore) -> Self {
        Self {
            params,
            nodes: Vec::new(),
            param_nodes: vec![None; params.len()],
        }
    }

    pub fn params(&self) -> &'p ParamStore {
        self.params
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, op: Op, shape: Vec<usize>, value: Vec<f64>) -> Var {
        self.nodes.push(Node { op, shape, value });
        Var(self.nodes.len() - 1)
    }

    pub fn value(&self, v: Var) -> &[f64] {
        let node = &self.nodes[v.0];
        match node.op {
            Op::Param(id) => self.params.get(id).data(),
            _ => &node.value,
        }
    }

    pub fn shape(&self, v: Var) -> &[usize] {
        &self.nodes[v.0].shape
    }

    /// Value of a one-element node.
    pub fn scalar(&self, v: Var) -> Result<f64> {
        let val = self.value(v);
        if val.len() != 1 {
            return Err(Error::shape("scalar", &[1], self.shape(v)));
        }
        Ok(val[0])
    }

    fn vec_len(&self, op: &'static str, v: Var) -> Result<usize> {
        match self.shape(v) {
            [n] => Ok(*n),
            other => Err(Error::shape(op, &[0], other)),
        }
    }

    /// Constant (non-differentiated) vector input.
    pub fn input(&mut self, data: Vec<f64>) -> Result<Var> {
        if data.is_empty() {
            return Err(Error::Empty("tape input"));
        }
        check_finite("input", &data)?;
        let n = data.len();
        Ok(self.push(Op::Input, vec![n], data))
    }

    pub fn zeros(&mut self, n: usize) -> Result<Var> {
        self.input(vec![0.0; n])
    }

    /// Leaf for a stored parameter; repeated calls return the same node.
    pub fn param(&mut self, id: ParamId) -> Var {
        if let Some(v) = self.param_nodes[id.0] {
            return v;
        }
        let shape = self.params.get(id).shape().to_vec();
        let v = self.push(Op::Param(id), shape, Vec::new());
        self.param_nodes[id.0] = Some(v);
        v
    }

    /// `W · x` for a `[m, n]` matrix and an `[n]` vector.
    pub fn matvec(&mut self, w: Var, x: Var) -> Result<Var> {
        let (m, n) = match self.shape(w) {
            [m, n] => (*m, *n),
            other => return Err(Error::shape("matvec", &[0, 0], other)),
        };
        let xn = self.vec_len("matvec", x)?;
        if xn != n {
            return Err(Error::shape("matvec", &[n], &[xn]));
        }
        let wd = self.value(w);
        let xd = self.value(x);
        let out: Vec<f64> = wd.chunks_exact(n).map(|row| math::dot(row, xd)).collect();
        check_finite("matvec", &out)?;
        Ok(self.push(Op::MatVec(w, x), vec![m], out))
    }

    fn binary(&mut self, name: &'static str, a: Var, b: Var, f: fn(f64, f64) -> f64, op: Op) -> Result<Var> {
        if self.shape(a) != self.shape(b) {
            return Err(Error::shape(name, self.shape(a), self.shape(b)));
        }
        let out: Vec<f64> = self
            .value(a)
            .iter()
            .zip(self.value(b))
            .map(|(&x, &y)| f(x, y))
            .collect();
        check_finite(name, &out)?;
        let shape = self.shape(a).to_vec();
        Ok(self.push(op, shape, out))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary("add", a, b, |x, y| x + y, Op::Add(a, b))
    }

    /// Elementwise product.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary("mul", a, b, |x, y| x * y, Op::Mul(a, b))
    }

    fn unary(&mut self, name: &'static str, a: Var, f: impl Fn(f64) -> f64, op: Op) -> Result<Var> {
        let out: Vec<f64> = self.value(a).iter().map(|&x| f(x)).collect();
        check_finite(name, &out)?;
        let shape = self.shape(a).to_vec();
        Ok(self.push(op, shape, out))
    }

    /// `1 − a`
    pub fn one_minus(&mut self, a: Var) -> Result<Var> {
        self.unary("one_minus", a, |x| 1.0 - x, Op::OneMinus(a))
    }

    pub fn scale(&mut self, a: Var, factor: f64) -> Result<Var> {
        self.unary("scale", a, |x| x * factor, Op::Scale(a, factor))
    }

    pub fn sigmoid(&mut self, a: Var) -> Result<Var> {
        self.unary("sigmoid", a, math::sigmoid, Op::Sigmoid(a))
    }

    pub fn tanh(&mut self, a: Var) -> Result<Var> {
        self.unary("tanh", a, math::tanh, Op::Tanh(a))
    }

    /// `W · x + b`
    pub fn linear(&mut self, w: Var, x: Var, b: Var) -> Result<Var> {
        let wx = self.matvec(w, x)?;
        self.add(wx, b)
    }

    pub fn concat(&mut self, parts: &[Var]) -> Result<Var> {
        if parts.is_empty() {
            return Err(Error::Empty("concat"));
        }
        let mut out = Vec::new();
        for &p in parts {
            self.vec_len("concat", p)?;
            out.extend_from_slice(self.value(p));
        }
        let n = out.len();
        Ok(self.push(Op::Concat(parts.to_vec()), vec![n], out))
    }

    /// Sum of equally shaped vectors.
    pub fn sum_vecs(&mut self, parts: &[Var]) -> Result<Var> {
        let first = *parts.first().ok_or(Error::Empty("sum_vecs"))?;
        let shape = self.shape(first).to_vec();
        let mut out = vec![0.0; self.value(first).len()];
        for &p in parts {
            if self.shape(p) != shape.as_slice() {
                return Err(Error::shape("sum_vecs", &shape, self.shape(p)));
            }
            out.iter_mut().zip(self.value(p)).for_each(|(o, v)| *o += v);
        }
        check_finite("sum_vecs", &out)?;
        Ok(self.push(Op::SumVecs(parts.to_vec()), shape, out))
    }

    /// Row `index` of a matrix, as a vector.
    pub fn row(&mut self, m: Var, index: usize) -> Result<Var> {
        let (rows, cols) = match self.shape(m) {
            [r, c] => (*r, *c),
            other => return Err(Error::shape("row", &[0, 0], other)),
        };
        if index >= rows {
            return Err(Error::IndexOutOfRange { index, len: rows });
        }
        let out = self.value(m)[index * cols..(index + 1) * cols].to_vec();
        Ok(self.push(Op::Row(m, index), vec![cols], out))
    }

    /// Differentiable L2 normalization; zero vectors map to zero.
    pub fn l2_normalize(&mut self, a: Var) -> Result<Var> {
        self.vec_len("l2_normalize", a)?;
        let out = math::l2_normalize(self.value(a));
        let shape = self.shape(a).to_vec();
        Ok(self.push(Op::L2Normalize(a), shape, out))
    }

    pub fn sum_all(&mut self, a: Var) -> Result<Var> {
        let s: f64 = self.value(a).iter().sum();
        check_finite("sum_all", &[s])?;
        Ok(self.push(Op::SumAll(a), vec![1], vec![s]))
    }

    /// `−log softmax(logits)[target]` as a scalar node.
    pub fn cross_entropy(&mut self, logits: Var, target: usize) -> Result<Var> {
        let n = self.vec_len("cross_entropy", logits)?;
        if target >= n {
            return Err(Error::IndexOutOfRange { index: target, len: n });
        }
        let z = self.value(logits);
        let loss = math::log_sum_exp(z) - z[target];
        check_finite("cross_entropy", &[loss])?;
        Ok(self.push(Op::CrossEntropy(logits, target), vec![1], vec![loss.max(0.0)]))
    }

    /// False for constants and frozen parameters, whose gradients are never read.
    fn wants_grad(&self, v: Var) -> bool {
        match self.nodes[v.0].op {
            Op::Input => false,
            Op::Param(id) => self.params.param(id).trainable,
            _ => true,
        }
    }

    /// Reverse sweep from a scalar `loss`.
    pub fn backward(&self, loss: Var) -> Result<Gradients> {
        if self.shape(loss) != [1] {
            return Err(Error::shape("backward", &[1], self.shape(loss)));
        }
        let mut grads: Vec<Option<Vec<f64>>> = vec![None; loss.0 + 1];
        grads[loss.0] = Some(vec![1.0]);
        let mut out = Gradients {
            per_param: vec![None; self.params.len()],
            rows: Vec::new(),
        };

        for i in (0..=loss.0).rev() {
            let Some(dy) = grads[i].take() else { continue };
            let node = &self.nodes[i];
            match &node.op {
                Op::Input => {}
                Op::Param(id) => out.per_param[id.0] = Some(dy),
                Op::MatVec(w, x) => {
                    let wd = self.value(*w);
                    let xd = self.value(*x);
                    let n = xd.len();
                    if self.wants_grad(*w) {
                        let mut dw = vec![0.0; wd.len()];
                        for (drow, &g) in dw.chunks_exact_mut(n).zip(&dy) {
                            drow.iter_mut().zip(xd).for_each(|(d, xj)| *d = g * xj);
                        }
                        accumulate(&mut grads, *w, dw);
                    }
                    if self.wants_grad(*x) {
                        let mut dx = vec![0.0; n];
                        for (row, &g) in wd.chunks_exact(n).zip(&dy) {
                            dx.iter_mut().zip(row).for_each(|(d, wj)| *d += g * wj);
                        }
                        accumulate(&mut grads, *x, dx);
                    }
                }
                Op::Add(a, b) => {
                    accumulate(&mut grads, *a, dy.clone());
                    accumulate(&mut grads, *b, dy);
                }
                Op::Mul(a, b) => {
                    let av = self.value(*a);
                    let bv = self.value(*b);
                    let da = dy.iter().zip(bv).map(|(g, y)| g * y).collect();
                    let db = dy.iter().zip(av).map(|(g, x)| g * x).collect();
                    accumulate(&mut grads, *a, da);
                    accumulate(&mut grads, *b, db);
                }
                Op::OneMinus(a) => accumulate(&mut grads, *a, dy.iter().map(|g| -g).collect()),
                Op::Scale(a, s) => accumulate(&mut grads, *a, dy.iter().map(|g| g * s).collect()),
                Op::Sigmoid(a) => {
                    let d = dy.iter().zip(&node.value).map(|(g, y)| g * y * (1.0 - y)).collect();
                    accumulate(&mut grads, *a, d);
                }
                Op::Tanh(a) => {
                    let d = dy.iter().zip(&node.value).map(|(g, y)| g * (1.0 - y * y)).collect();
                    accumulate(&mut grads, *a, d);
                }
                Op::Concat(parts) => {
                    let mut offset = 0;
                    for p in parts {
                        let n = self.value(*p).len();
                        accumulate(&mut grads, *p, dy[offset..offset + n].to_vec());
                        offset += n;
                    }
                }
                Op::SumVecs(parts) => {
                    for p in parts {
                        accumulate(&mut grads, *p, dy.clone());
                    }
                }
                Op::Row(m, index) => {
                    if let Op::Param(id) = self.nodes[m.0].op {
                        if self.params.param(id).trainable {
                            out.rows.push((id, *index, dy));
                        }
                        continue;
                    }
                    let mut dm = vec![0.0; self.value(*m).len()];
                    let cols = dy.len();
                    dm[index * cols..(index + 1) * cols].copy_from_slice(&dy);
                    accumulate(&mut grads, *m, dm);
                }
                Op::L2Normalize(a) => {
                    let x = self.value(*a);
                    let norm = math::l2_norm(x);
                    if norm >= NORM_EPS {
                        let y = &node.value;
                        let proj = math::dot(y, &dy);
                        let d = dy.iter().zip(y).map(|(g, yi)| (g - yi * proj) / norm).collect();
                        accumulate(&mut grads, *a, d);
                    }
                }
                Op::SumAll(a) => {
                    let n = self.value(*a).len();
                    accumulate(&mut grads, *a, vec![dy[0]; n]);
                }
                Op::CrossEntropy(logits, target) => {
                    let mut d = math::softmax(self.value(*logits));
                    d[*target] -= 1.0;
                    d.iter_mut().for_each(|v| *v *= dy[0]);
                    accumulate(&mut grads, *logits, d);
                }
            }
        }
        for g in out.per_param.iter().flatten().chain(out.rows.iter().map(|(_, _, g)| g)) {
            check_finite("backward", g)?;
        }
        Ok(out)
    }
}

fn accumulate(grads: &mut [Option<Vec<f64>>], v: Var, delta: Vec<f64>) {
    match &mut grads[v.0] {
        Some(g) => g.iter_mut().zip(delta).for_each(|(g, d)| *g += d),
        slot @ None => *slot = Some(delta),
    }
}

/// Runs backward on `loss` and folds the result into the store in one call.
pub fn backward_into(store: &mut ParamStore, build: impl FnOnce(&mut Tape<'_>) -> Result<Var>) -> Result<f64> {
    let (value, grads) = {
        let mut tape = Tape::new(store);
        let loss = build(&mut tape)?;
        (tape.scalar(loss)?, tape.backward(loss)?)
    };
    store.accumulate(&grads)?;
    Ok(value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::Tensor;
    use approx::assert_abs_diff_eq;

    fn scalar_store(w: f64) -> (ParamStore, ParamId) {
        let mut store = ParamStore::new();
        let id = store.add("w", Tensor::vector(vec![w]).unwrap());
        (store, id)
    }

    #[test]
    fn square_has_derivative_two_w() {
        let (mut store, id) = scalar_store(3.0);
        let loss = backward_into(&mut store, |t| {
            let w = t.param(id);
            let sq = t.mul(w, w)?;
            t.sum_all(sq)
        })
        .unwrap();
        assert_eq!(loss, 9.0);
        assert_eq!(store.get(id).grad().unwrap(), &[6.0]);
    }

    #[test]
    fn sigmoid_derivative_at_zero() {
        let (mut store, id) = scalar_store(0.0);
        backward_into(&mut store, |t| {
            let w = t.param(id);
            let s = t.sigmoid(w)?;
            t.sum_all(s)
        })
        .unwrap();
        assert_abs_diff_eq!(store.get(id).grad().unwrap()[0], 0.25, epsilon = 1e-15);
    }

    #[test]
    fn repeated_backward_accumulates_until_zeroed() {
        let (mut store, id) = scalar_store(3.0);
        for _ in 0..2 {
            backward_into(&mut store, |t| {
                let w = t.param(id);
                let sq = t.mul(w, w)?;
                t.sum_all(sq)
            })
            .unwrap();
        }
        assert_eq!(store.get(id).grad().unwrap(), &[12.0]);
        store.zero_grads();
        assert!(store.get(id).grad().is_none());
    }

    #[test]
    fn backward_rejects_non_scalar() {
        let (store, id) = scalar_store(1.0);
        let mut t = Tape::new(&store);
        let w = t.param(id);
        let two = t.concat(&[w, w]).unwrap();
        assert!(matches!(t.backward(two), Err(Error::Shape { .. })));
    }

    #[test]
    fn cross_entropy_values() {
        let store = ParamStore::new();
        let mut t = Tape::new(&store);
        let z = t.input(vec![0.0; 4]).unwrap();
        let l = t.cross_entropy(z, 2).unwrap();
        assert_abs_diff_eq!(t.scalar(l).unwrap(), libm::log(4.0), epsilon = 1e-12);

        let z = t.input(vec![1.0, 3.0, 2.0]).unwrap();
        let l = t.cross_entropy(z, 1).unwrap();
        assert_abs_diff_eq!(t.scalar(l).unwrap(), 0.40761, epsilon = 1e-4);

        let z = t.input(vec![-500.0, 500.0]).unwrap();
        let l = t.cross_entropy(z, 1).unwrap();
        assert_eq!(t.scalar(l).unwrap(), 0.0);

        assert!(matches!(t.cross_entropy(z, 2), Err(Error::IndexOutOfRange { .. })));
    }

    #[test]
    fn matvec_shape_errors() {
        let mut store = ParamStore::new();
        let w = store.add("w", Tensor::matrix(2, 3, vec![0.0; 6]).unwrap());
        let mut t = Tape::new(&store);
        let wv = t.param(w);
        let x = t.input(vec![1.0, 2.0]).unwrap();
        assert!(matches!(t.matvec(wv, x), Err(Error::Shape { .. })));
    }
}
