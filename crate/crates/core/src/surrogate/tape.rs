//! Minimal reverse-mode differentiation over dense matrices.
//!
//! Nodes are appended in evaluation order, so the reverse of insertion order
//! is a valid reverse topological order. Linear solves are differentiated by
//! the adjoint rule: for `X = A⁻¹B` with `A` fixed, `B̄ = A⁻ᵀ X̄`.

use std::fmt::Debug;
use std::sync::Arc;

use crate::abd::AbdFactorization;
use crate::error::{dim_mismatch, invalid, Error, Result};
use crate::linalg::{gemm, DenseLu, Matrix};

/// A factored square system usable as a differentiable solve.
pub trait LinearSolver: Send + Sync + Debug {
    fn dim(&self) -> usize;
    fn solve_in_place(&self, x: &mut [f64]) -> Result<()>;
    fn solve_transpose_in_place(&self, x: &mut [f64]) -> Result<()>;
}

impl LinearSolver for AbdFactorization {
    fn dim(&self) -> usize {
        AbdFactorization::dim(self)
    }

    fn solve_in_place(&self, x: &mut [f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(dim_mismatch(format!("rhs length {} vs {}", x.len(), self.dim())));
        }
        AbdFactorization::solve_in_place(self, x);
        Ok(())
    }

    fn solve_transpose_in_place(&self, x: &mut [f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(dim_mismatch(format!("rhs length {} vs {}", x.len(), self.dim())));
        }
        AbdFactorization::solve_transpose_in_place(self, x);
        Ok(())
    }
}

impl LinearSolver for DenseLu {
    fn dim(&self) -> usize {
        DenseLu::dim(self)
    }

    fn solve_in_place(&self, x: &mut [f64]) -> Result<()> {
        let y = self.solve(x)?;
        x.copy_from_slice(&y);
        Ok(())
    }

    fn solve_transpose_in_place(&self, x: &mut [f64]) -> Result<()> {
        let y = self.solve_transpose(x)?;
        x.copy_from_slice(&y);
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug)]
enum Op {
    Leaf,
    Constant,
    MatMul(Var, Var),
    MatMulConstLeft(Arc<Matrix>, Var),
    MatMulConstRight(Var, Arc<Matrix>),
    Add(Var, Var),
    Sub(Var, Var),
    AddRowBias(Var, Var),
    Relu(Var, Vec<bool>),
    Scale(Var, f64),
    GatherRows(Var, Arc<Vec<usize>>),
    ScatterAddRows(Var, Arc<Vec<usize>>),
    Select(Var, Arc<Vec<usize>>),
    ConcatCols(Vec<Var>),
    ConcatRows(Vec<Var>),
    Transpose(Var),
    Reshape(Var),
    SquaredError(Var, Arc<Matrix>),
    Solve(Arc<dyn LinearSolver>, Var),
}

#[derive(Debug)]
struct Node {
    value: Matrix,
    op: Op,
    needs_grad: bool,
}

#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
    consumed: bool,
    replay: Option<(Vec<Vec<bool>>, usize)>,
}

/// Gradients of one backward pass, indexed by [`Var`].
#[derive(Debug)]
pub struct Gradients {
    grads: Vec<Option<Matrix>>,
}

impl Gradients {
    /// `None` when the root does not depend on `v`.
    pub fn get(&self, v: Var) -> Option<&Matrix> {
        self.grads.get(v.0).and_then(|g| g.as_ref())
    }

    /// The gradient, or zeros of the given shape.
    pub fn get_or_zeros(&self, v: Var, rows: usize, cols: usize) -> Matrix {
        self.get(v).cloned().unwrap_or_else(|| Matrix::zeros(rows, cols))
    }
}

fn matmul_into(a: &Matrix, ta: bool, b: &Matrix, tb: bool) -> Matrix {
    let m = if ta { a.cols() } else { a.rows() };
    let n = if tb { b.rows() } else { b.cols() };
    let mut out = Matrix::zeros(m, n);
    gemm(a, ta, b, tb, &mut out, 0.0);
    out
}

fn solve_columns(s: &dyn LinearSolver, b: &Matrix, transpose: bool) -> Result<Matrix> {
    if b.rows() != s.dim() {
        return Err(dim_mismatch(format!("solve of {} rows with a {} system", b.rows(), s.dim())));
    }
    let mut t = b.transpose();
    for j in 0..t.rows() {
        let row = t.row_mut(j);
        if transpose {
            s.solve_transpose_in_place(row)?;
        } else {
            s.solve_in_place(row)?;
        }
    }
    Ok(t.transpose())
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    /// A tape whose rectifiers use the given activation masks, in recording
    /// order, instead of the signs of their inputs. Evaluating with the masks
    /// of a nearby point gives the smooth piece of the network containing it.
    pub fn with_relu_masks(masks: Vec<Vec<bool>>) -> Self {
        Self { replay: Some((masks, 0)), ..Self::default() }
    }

    /// Activation masks of every rectifier, in recording order.
    pub fn relu_masks(&self) -> Vec<Vec<bool>> {
        self.nodes
            .iter()
            .filter_map(|n| match &n.op {
                Op::Relu(_, m) => Some(m.clone()),
                _ => None,
            })
            .collect()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Matrix {
        &self.nodes[v.0].value
    }

    /// Scalar value of a `1 x 1` node.
    pub fn scalar(&self, v: Var) -> f64 {
        self.nodes[v.0].value.get(0, 0)
    }

    fn push(&mut self, value: Matrix, op: Op, needs_grad: bool) -> Var {
        self.nodes.push(Node { value, op, needs_grad });
        Var(self.nodes.len() - 1)
    }

    fn ng(&self, v: Var) -> bool {
        self.nodes[v.0].needs_grad
    }

    fn shape(&self, v: Var) -> (usize, usize) {
        self.nodes[v.0].value.shape()
    }

    /// A differentiable input.
    pub fn leaf(&mut self, value: Matrix) -> Var {
        self.push(value, Op::Leaf, true)
    }

    /// An input that never receives a gradient.
    pub fn constant(&mut self, value: Matrix) -> Var {
        self.push(value, Op::Constant, false)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (va, vb) = (self.value(a), self.value(b));
        if va.cols() != vb.rows() {
            return Err(dim_mismatch(format!("matmul {:?} x {:?}", va.shape(), vb.shape())));
        }
        let out = matmul_into(va, false, vb, false);
        let ng = self.ng(a) || self.ng(b);
        Ok(self.push(out, Op::MatMul(a, b), ng))
    }

    /// `c · b` with a constant left factor.
    pub fn matmul_const_left(&mut self, c: Arc<Matrix>, b: Var) -> Result<Var> {
        let vb = self.value(b);
        if c.cols() != vb.rows() {
            return Err(dim_mismatch(format!("matmul {:?} x {:?}", c.shape(), vb.shape())));
        }
        let out = matmul_into(&c, false, vb, false);
        let ng = self.ng(b);
        Ok(self.push(out, Op::MatMulConstLeft(c, b), ng))
    }

    /// `a · c` with a constant right factor.
    pub fn matmul_const_right(&mut self, a: Var, c: Arc<Matrix>) -> Result<Var> {
        let va = self.value(a);
        if va.cols() != c.rows() {
            return Err(dim_mismatch(format!("matmul {:?} x {:?}", va.shape(), c.shape())));
        }
        let out = matmul_into(va, false, &c, false);
        let ng = self.ng(a);
        Ok(self.push(out, Op::MatMulConstRight(a, c), ng))
    }

    fn zip(&mut self, a: Var, b: Var, f: impl Fn(f64, f64) -> f64) -> Result<Matrix> {
        if self.shape(a) != self.shape(b) {
            return Err(dim_mismatch(format!("elementwise {:?} vs {:?}", self.shape(a), self.shape(b))));
        }
        let (va, vb) = (self.value(a), self.value(b));
        let data = va.data().iter().zip(vb.data()).map(|(x, y)| f(*x, *y)).collect();
        Matrix::from_vec(va.rows(), va.cols(), data)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let out = self.zip(a, b, |x, y| x + y)?;
        let ng = self.ng(a) || self.ng(b);
        Ok(self.push(out, Op::Add(a, b), ng))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        let out = self.zip(a, b, |x, y| x - y)?;
        let ng = self.ng(a) || self.ng(b);
        Ok(self.push(out, Op::Sub(a, b), ng))
    }

    /// Adds the `1 x cols` row `bias` to every row of `a`.
    pub fn add_row_bias(&mut self, a: Var, bias: Var) -> Result<Var> {
        let (va, vb) = (self.value(a), self.value(bias));
        if vb.rows() != 1 || vb.cols() != va.cols() {
            return Err(dim_mismatch(format!("bias {:?} for {:?}", vb.shape(), va.shape())));
        }
        let mut out = va.clone();
        for i in 0..out.rows() {
            for (o, b) in out.row_mut(i).iter_mut().zip(vb.data()) {
                *o += b;
            }
        }
        let ng = self.ng(a) || self.ng(bias);
        Ok(self.push(out, Op::AddRowBias(a, bias), ng))
    }

    pub fn relu(&mut self, a: Var) -> Result<Var> {
        let len = self.value(a).data().len();
        let mask: Vec<bool> = match &mut self.replay {
            None => self.nodes[a.0].value.data().iter().map(|x| *x > 0.0).collect(),
            Some((masks, next)) => {
                let m = masks.get(*next).cloned().ok_or_else(|| invalid("ran out of replayed masks"))?;
                *next += 1;
                if m.len() != len {
                    return Err(dim_mismatch("replayed mask does not match the activation shape"));
                }
                m
            }
        };
        let va = self.value(a);
        let data = va.data().iter().zip(&mask).map(|(x, on)| if *on { *x } else { 0.0 }).collect();
        let out = Matrix::from_vec(va.rows(), va.cols(), data)?;
        let ng = self.ng(a);
        Ok(self.push(out, Op::Relu(a, mask), ng))
    }

    pub fn scale(&mut self, a: Var, s: f64) -> Var {
        let mut out = self.value(a).clone();
        out.scale(s);
        let ng = self.ng(a);
        self.push(out, Op::Scale(a, s), ng)
    }

    /// Row `r` of the output is row `idx[r]` of `a`.
    pub fn gather_rows(&mut self, a: Var, idx: Arc<Vec<usize>>) -> Result<Var> {
        let va = self.value(a);
        if idx.iter().any(|&i| i >= va.rows()) {
            return Err(invalid("gather index out of range"));
        }
        let mut out = Matrix::zeros(idx.len(), va.cols());
        for (r, &i) in idx.iter().enumerate() {
            out.row_mut(r).copy_from_slice(va.row(i));
        }
        let ng = self.ng(a);
        Ok(self.push(out, Op::GatherRows(a, idx), ng))
    }

    /// Row `idx[r]` of the `rows`-row output accumulates row `r` of `a`, in order of `r`.
    pub fn scatter_add_rows(&mut self, a: Var, idx: Arc<Vec<usize>>, rows: usize) -> Result<Var> {
        let va = self.value(a);
        if idx.len() != va.rows() || idx.iter().any(|&i| i >= rows) {
            return Err(invalid("scatter index out of range"));
        }
        let mut out = Matrix::zeros(rows, va.cols());
        for (r, &i) in idx.iter().enumerate() {
            for (o, v) in out.row_mut(i).iter_mut().zip(va.row(r)) {
                *o += v;
            }
        }
        let ng = self.ng(a);
        Ok(self.push(out, Op::ScatterAddRows(a, idx), ng))
    }

    /// Flat gather: output element `k` (row-major) is flat element `idx[k]` of `a`.
    pub fn select(&mut self, a: Var, idx: Arc<Vec<usize>>, rows: usize, cols: usize) -> Result<Var> {
        let va = self.value(a);
        if idx.len() != rows * cols || idx.iter().any(|&i| i >= va.data().len()) {
            return Err(invalid("select indices do not match the output shape or source"));
        }
        let data = idx.iter().map(|&i| va.data()[i]).collect();
        let out = Matrix::from_vec(rows, cols, data)?;
        let ng = self.ng(a);
        Ok(self.push(out, Op::Select(a, idx), ng))
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Result<Var> {
        let rows = parts.first().map(|&p| self.shape(p).0).ok_or_else(|| invalid("empty concat"))?;
        if parts.iter().any(|&p| self.shape(p).0 != rows) {
            return Err(dim_mismatch("concat_cols needs equal row counts"));
        }
        let cols: usize = parts.iter().map(|&p| self.shape(p).1).sum();
        let mut out = Matrix::zeros(rows, cols);
        for i in 0..rows {
            let mut off = 0;
            for &p in parts {
                let src = self.nodes[p.0].value.row(i);
                out.row_mut(i)[off..off + src.len()].copy_from_slice(src);
                off += src.len();
            }
        }
        let ng = parts.iter().any(|&p| self.ng(p));
        Ok(self.push(out, Op::ConcatCols(parts.to_vec()), ng))
    }

    pub fn concat_rows(&mut self, parts: &[Var]) -> Result<Var> {
        let cols = parts.first().map(|&p| self.shape(p).1).ok_or_else(|| invalid("empty concat"))?;
        if parts.iter().any(|&p| self.shape(p).1 != cols) {
            return Err(dim_mismatch("concat_rows needs equal column counts"));
        }
        let mut data = Vec::new();
        for &p in parts {
            data.extend_from_slice(self.value(p).data());
        }
        let out = Matrix::from_vec(data.len() / cols.max(1), cols, data)?;
        let ng = parts.iter().any(|&p| self.ng(p));
        Ok(self.push(out, Op::ConcatRows(parts.to_vec()), ng))
    }

    pub fn transpose(&mut self, a: Var) -> Var {
        let out = self.value(a).transpose();
        let ng = self.ng(a);
        self.push(out, Op::Transpose(a), ng)
    }

    /// Same row-major data, new shape.
    pub fn reshape(&mut self, a: Var, rows: usize, cols: usize) -> Result<Var> {
        let out = Matrix::from_vec(rows, cols, self.value(a).data().to_vec())?;
        let ng = self.ng(a);
        Ok(self.push(out, Op::Reshape(a), ng))
    }

    /// `Σ (a − target)²` as a `1 x 1` node.
    pub fn squared_error(&mut self, a: Var, target: Arc<Matrix>) -> Result<Var> {
        let va = self.value(a);
        if va.shape() != target.shape() {
            return Err(dim_mismatch(format!("prediction {:?} vs target {:?}", va.shape(), target.shape())));
        }
        let s: f64 = va.data().iter().zip(target.data()).map(|(p, t)| (p - t) * (p - t)).sum();
        let ng = self.ng(a);
        Ok(self.push(Matrix::from_vec(1, 1, vec![s])?, Op::SquaredError(a, target), ng))
    }

    /// `A⁻¹ B`, column by column.
    pub fn solve(&mut self, system: Arc<dyn LinearSolver>, b: Var) -> Result<Var> {
        let out = solve_columns(system.as_ref(), self.value(b), false)?;
        let ng = self.ng(b);
        Ok(self.push(out, Op::Solve(system, b), ng))
    }

    /// Reverse sweep from the `1 x 1` node `root`. A tape supports one sweep.
    pub fn backward(&mut self, root: Var) -> Result<Gradients> {
        if self.consumed {
            return Err(Error::TapeConsumed);
        }
        if self.shape(root) != (1, 1) {
            return Err(dim_mismatch("backward needs a scalar root"));
        }
        self.consumed = true;
        let mut grads: Vec<Option<Matrix>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[root.0] = Some(Matrix::from_vec(1, 1, vec![1.0])?);
        for id in (0..=root.0).rev() {
            let Some(g) = grads[id].take() else { continue };
            let node = &self.nodes[id];
            if !node.needs_grad {
                continue;
            }
            self.propagate(node, &g, &mut grads)?;
            grads[id] = Some(g);
        }
        for (g, n) in grads.iter_mut().zip(&self.nodes) {
            if !matches!(n.op, Op::Leaf) {
                *g = None;
            }
        }
        Ok(Gradients { grads })
    }

    fn propagate(&self, node: &Node, g: &Matrix, grads: &mut [Option<Matrix>]) -> Result<()> {
        let nodes = &self.nodes;
        let wants = |v: Var| nodes[v.0].needs_grad;
        macro_rules! acc {
            ($v:expr, |$m:ident| $body:expr) => {{
                let v: Var = $v;
                if wants(v) {
                    let (r, c) = nodes[v.0].value.shape();
                    let mut $m = grads[v.0].take().unwrap_or_else(|| Matrix::zeros(r, c));
                    {
                        let $m: &mut Matrix = &mut $m;
                        $body;
                    }
                    grads[v.0] = Some($m);
                }
            }};
        }
        match &node.op {
            Op::Leaf | Op::Constant => {}
            Op::MatMul(a, b) => {
                let (va, vb) = (&nodes[a.0].value, &nodes[b.0].value);
                acc!(*a, |m| gemm(g, false, vb, true, m, 1.0));
                acc!(*b, |m| gemm(va, true, g, false, m, 1.0));
            }
            Op::MatMulConstLeft(c, b) => acc!(*b, |m| gemm(c, true, g, false, m, 1.0)),
            Op::MatMulConstRight(a, c) => acc!(*a, |m| gemm(g, false, c, true, m, 1.0)),
            Op::Add(a, b) => {
                acc!(*a, |m| m.add_assign(g));
                acc!(*b, |m| m.add_assign(g));
            }
            Op::Sub(a, b) => {
                acc!(*a, |m| m.add_assign(g));
                acc!(*b, |m| m.data_mut().iter_mut().zip(g.data()).for_each(|(o, x)| *o -= x));
            }
            Op::AddRowBias(a, bias) => {
                acc!(*a, |m| m.add_assign(g));
                acc!(*bias, |m| {
                    let row = m.row_mut(0);
                    for i in 0..g.rows() {
                        for (o, x) in row.iter_mut().zip(g.row(i)) {
                            *o += x;
                        }
                    }
                });
            }
            Op::Relu(a, mask) => acc!(*a, |m| {
                for ((o, x), on) in m.data_mut().iter_mut().zip(g.data()).zip(mask) {
                    if *on {
                        *o += x;
                    }
                }
            }),
            Op::Scale(a, s) => acc!(*a, |m| m.data_mut().iter_mut().zip(g.data()).for_each(|(o, x)| *o += s * x)),
            Op::GatherRows(a, idx) => acc!(*a, |m| {
                for (r, &i) in idx.iter().enumerate() {
                    for (o, x) in m.row_mut(i).iter_mut().zip(g.row(r)) {
                        *o += x;
                    }
                }
            }),
            Op::ScatterAddRows(a, idx) => acc!(*a, |m| {
                for (r, &i) in idx.iter().enumerate() {
                    for (o, x) in m.row_mut(r).iter_mut().zip(g.row(i)) {
                        *o += x;
                    }
                }
            }),
            Op::Select(a, idx) => acc!(*a, |m| {
                let d = m.data_mut();
                for (k, &i) in idx.iter().enumerate() {
                    d[i] += g.data()[k];
                }
            }),
            Op::ConcatCols(parts) => {
                let mut off = 0;
                for &p in parts {
                    let w = nodes[p.0].value.cols();
                    acc!(p, |m| {
                        for i in 0..g.rows() {
                            for (o, x) in m.row_mut(i).iter_mut().zip(&g.row(i)[off..off + w]) {
                                *o += x;
                            }
                        }
                    });
                    off += w;
                }
            }
            Op::ConcatRows(parts) => {
                let mut off = 0;
                for &p in parts {
                    let len = nodes[p.0].value.data().len();
                    acc!(p, |m| m
                        .data_mut()
                        .iter_mut()
                        .zip(&g.data()[off..off + len])
                        .for_each(|(o, x)| *o += x));
                    off += len;
                }
            }
            Op::Transpose(a) => acc!(*a, |m| m.add_assign(&g.transpose())),
            Op::Reshape(a) => acc!(*a, |m| m.data_mut().iter_mut().zip(g.data()).for_each(|(o, x)| *o += x)),
            Op::SquaredError(a, target) => {
                let s = 2.0 * g.get(0, 0);
                let va = &nodes[a.0].value;
                acc!(*a, |m| {
                    for ((o, p), t) in m.data_mut().iter_mut().zip(va.data()).zip(target.data()) {
                        *o += s * (p - t);
                    }
                });
            }
            Op::Solve(system, b) => {
                if wants(*b) {
                    let gb = solve_columns(system.as_ref(), g, true)?;
                    acc!(*b, |m| m.add_assign(&gb));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[Vec<f64>]) -> Matrix {
        Matrix::from_rows(rows).unwrap()
    }

    #[test]
    fn matmul_and_error_gradients() {
        let mut t = Tape::new();
        let a = t.leaf(m(&[vec![1.0, 2.0], vec![3.0, 4.0]]));
        let b = t.leaf(m(&[vec![0.5], vec![-1.0]]));
        let c = t.matmul(a, b).unwrap();
        let target = Arc::new(m(&[vec![0.0], vec![0.0]]));
        let l = t.squared_error(c, target).unwrap();
        // c = (-1.5, -2.5), L = 2.25 + 6.25
        assert_eq!(t.scalar(l), 8.5);
        let g = t.backward(l).unwrap();
        // dL/dc = 2c; dL/dA = 2c b^T; dL/db = A^T 2c
        assert_eq!(g.get(a).unwrap().data(), &[-1.5, 3.0, -2.5, 5.0]);
        assert_eq!(g.get(b).unwrap().data(), &[-18.0, -26.0]);
        assert!(matches!(t.backward(l), Err(Error::TapeConsumed)));
    }

    #[test]
    fn unused_leaf_has_no_gradient() {
        let mut t = Tape::new();
        let a = t.leaf(Matrix::from_vec(1, 1, vec![2.0]).unwrap());
        let unused = t.leaf(Matrix::from_vec(1, 1, vec![5.0]).unwrap());
        let l = t.squared_error(a, Arc::new(Matrix::zeros(1, 1))).unwrap();
        let g = t.backward(l).unwrap();
        assert!(g.get(unused).is_none());
        assert_eq!(g.get_or_zeros(unused, 1, 1).data(), &[0.0]);
        assert_eq!(g.get(a).unwrap().data(), &[4.0]);
    }

    #[test]
    fn solve_uses_transpose_adjoint() {
        let a = m(&[vec![4.0, 1.0], vec![2.0, 3.0]]);
        let lu = Arc::new(DenseLu::factorize(&a).unwrap());
        let mut t = Tape::new();
        let f = t.leaf(m(&[vec![1.0], vec![2.0]]));
        let x = t.solve(lu, f).unwrap();
        let w = Arc::new(m(&[vec![1.0, -2.0]]));
        let s = t.matmul_const_left(w, x).unwrap();
        let l = t.reshape(s, 1, 1).unwrap();
        let g = t.backward(l).unwrap();
        // dL/df = A^{-T} w^T; A^T = [[4,2],[1,3]], A^{-T} = [[3,-2],[-1,4]] / 10
        let gf = g.get(f).unwrap();
        assert!((gf.get(0, 0) - 0.7).abs() < 1e-15);
        assert!((gf.get(1, 0) + 0.9).abs() < 1e-15);
    }

    #[test]
    fn structural_ops_round_trip() {
        let mut t = Tape::new();
        let a = t.leaf(m(&[vec![1.0, -2.0], vec![3.0, 4.0], vec![-5.0, 6.0]]));
        let bias = t.leaf(m(&[vec![1.0, 1.0]]));
        let ab = t.add_row_bias(a, bias).unwrap();
        let r = t.relu(ab).unwrap();
        let gth = t.gather_rows(r, Arc::new(vec![2, 0, 2])).unwrap();
        let sc = t.scatter_add_rows(gth, Arc::new(vec![0, 1, 1]), 2).unwrap();
        let cc = t.concat_cols(&[sc, sc]).unwrap();
        let cr = t.concat_rows(&[cc, cc]).unwrap();
        let tr = t.transpose(cr);
        let sel = t.select(tr, Arc::new(vec![0, 5, 9]), 1, 3).unwrap();
        let sc2 = t.scale(sel, 0.5);
        let l = t.squared_error(sc2, Arc::new(Matrix::zeros(1, 3))).unwrap();
        assert!(t.scalar(l).is_finite());
        let g = t.backward(l).unwrap();
        assert_eq!(g.get(a).unwrap().shape(), (3, 2));
        assert_eq!(g.get(bias).unwrap().shape(), (1, 2));
    }
}
