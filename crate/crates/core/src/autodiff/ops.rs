use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{Node, Op, SegmentIndex, Tape, Var};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::{gemm, Tensor};

/// Elementwise nonlinearities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    LeakyRelu(f64),
    Relu,
    Tanh,
    /// ELU with alpha = 1.
    Elu,
    Sigmoid,
}

impl Activation {
    /// LeakyReLU with the usual negative slope of 0.2.
    pub const LEAKY: Activation = Activation::LeakyRelu(0.2);

    pub fn apply<T: Scalar>(self, x: T) -> T {
        match self {
            Activation::LeakyRelu(slope) => {
                if x >= T::zero() {
                    x
                } else {
                    x * T::of(slope)
                }
            }
            Activation::Relu => x.max(T::zero()),
            Activation::Tanh => x.tanh(),
            Activation::Elu => {
                if x > T::zero() {
                    x
                } else {
                    x.exp_m1()
                }
            }
            Activation::Sigmoid => T::one() / (T::one() + (-x).exp()),
        }
    }

    /// Derivative given input `x` and output `y`; kinks take the right-hand value.
    fn derivative<T: Scalar>(self, x: T, y: T) -> T {
        match self {
            Activation::LeakyRelu(slope) => {
                if x >= T::zero() {
                    T::one()
                } else {
                    T::of(slope)
                }
            }
            Activation::Relu => {
                if x >= T::zero() {
                    T::one()
                } else {
                    T::zero()
                }
            }
            Activation::Tanh => T::one() - y * y,
            Activation::Elu => {
                if x > T::zero() {
                    T::one()
                } else {
                    y + T::one()
                }
            }
            Activation::Sigmoid => y * (T::one() - y),
        }
    }
}

fn dim_err(msg: String) -> Error {
    Error::Dimension(msg)
}

impl<T: Scalar> Tape<T> {
    fn needs_any(&self, vars: &[Var]) -> bool {
        vars.iter().any(|&v| self.needs(v))
    }

    fn matrix_dims(&self, v: Var, what: &str) -> Result<(usize, usize)> {
        let s = self.shape(v);
        if s.len() != 2 {
            return Err(dim_err(format!("{what}: expected a matrix, got shape {s:?}")));
        }
        Ok((s[0], s[1]))
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (m, k) = self.matrix_dims(a, "matmul lhs")?;
        let (k2, n) = self.matrix_dims(b, "matmul rhs")?;
        if k != k2 {
            return Err(dim_err(format!("matmul inner dimensions {k} vs {k2}")));
        }
        let out = gemm(self.value(a).data(), self.value(b).data(), m, k, n);
        self.count(2 * m * k * n);
        let needs = self.needs_any(&[a, b]);
        Ok(self.push(Tensor::new(vec![m, n], out)?, Op::MatMul(a, b), needs))
    }

    /// `x [N×d] + b [d]`, bias broadcast over rows.
    pub fn add_row(&mut self, x: Var, b: Var) -> Result<Var> {
        let (n, d) = self.matrix_dims(x, "add_row")?;
        if self.shape(b) != [d] {
            return Err(dim_err(format!("bias shape {:?} vs row width {d}", self.shape(b))));
        }
        let bias = self.value(b).data().to_vec();
        let mut out = self.value(x).data().to_vec();
        for row in out.chunks_mut(d.max(1)) {
            for (o, &bv) in row.iter_mut().zip(&bias) {
                *o += bv;
            }
        }
        self.count(n * d);
        let needs = self.needs_any(&[x, b]);
        Ok(self.push(Tensor::new(vec![n, d], out)?, Op::AddRow(x, b), needs))
    }

    fn same_shape(&self, a: Var, b: Var, what: &str) -> Result<()> {
        if self.shape(a) != self.shape(b) {
            return Err(dim_err(format!(
                "{what}: shapes {:?} and {:?} differ",
                self.shape(a),
                self.shape(b)
            )));
        }
        Ok(())
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape(a, b, "add")?;
        let va = self.value(a);
        let vb = self.value(b);
        let data = va.data().iter().zip(vb.data()).map(|(&x, &y)| x + y).collect();
        let t = Tensor::new(va.shape().to_vec(), data)?;
        self.count(t.numel());
        let needs = self.needs_any(&[a, b]);
        Ok(self.push(t, Op::Add(a, b), needs))
    }

    /// Elementwise (Hadamard) product.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape(a, b, "mul")?;
        let va = self.value(a);
        let vb = self.value(b);
        let data = va.data().iter().zip(vb.data()).map(|(&x, &y)| x * y).collect();
        let t = Tensor::new(va.shape().to_vec(), data)?;
        self.count(t.numel());
        let needs = self.needs_any(&[a, b]);
        Ok(self.push(t, Op::Mul(a, b), needs))
    }

    pub fn scale(&mut self, x: Var, factor: T) -> Var {
        let t = self.value(x).map(|v| v * factor);
        self.count(t.numel());
        let needs = self.needs(x);
        self.push(t, Op::Scale(x, factor), needs)
    }

    pub fn activation(&mut self, x: Var, kind: Activation) -> Var {
        let t = self.value(x).map(|v| kind.apply(v));
        self.count(t.numel());
        let needs = self.needs(x);
        self.push(t, Op::Act(x, kind), needs)
    }

    /// Concatenation along `axis`.
    ///
    /// Axis 0 joins vectors end to end or stacks matrix rows; axis 1 joins
    /// matrix columns. Parts appear in argument order.
    pub fn concat(&mut self, parts: &[Var], axis: usize) -> Result<Var> {
        let Some(&first) = parts.first() else {
            return Err(dim_err("concat of zero parts".into()));
        };
        let rank = self.shape(first).len();
        if parts.iter().any(|&p| self.shape(p).len() != rank) {
            return Err(dim_err("concat parts differ in rank".into()));
        }
        let (shape, data) = match (rank, axis) {
            (1, 0) => {
                let data: Vec<T> =
                    parts.iter().flat_map(|&p| self.value(p).data().iter().copied()).collect();
                (vec![data.len()], data)
            }
            (2, 0) => {
                let cols = self.shape(first)[1];
                if parts.iter().any(|&p| self.shape(p)[1] != cols) {
                    return Err(dim_err("concat axis 0: column counts differ".into()));
                }
                let data: Vec<T> =
                    parts.iter().flat_map(|&p| self.value(p).data().iter().copied()).collect();
                (vec![data.len() / cols.max(1), cols], data)
            }
            (2, 1) => {
                let rows = self.shape(first)[0];
                if parts.iter().any(|&p| self.shape(p)[0] != rows) {
                    return Err(dim_err("concat axis 1: row counts differ".into()));
                }
                let cols: usize = parts.iter().map(|&p| self.shape(p)[1]).sum();
                let mut data = Vec::with_capacity(rows * cols);
                for r in 0..rows {
                    for &p in parts {
                        data.extend_from_slice(self.value(p).row(r));
                    }
                }
                (vec![rows, cols], data)
            }
            _ => return Err(dim_err(format!("concat axis {axis} unsupported for rank {rank}"))),
        };
        let needs = self.needs_any(parts);
        Ok(self.push(
            Tensor::new(shape, data)?,
            Op::Concat { parts: parts.to_vec(), axis },
            needs,
        ))
    }

    /// Row gather: `out[i] = x[index[i]]`. Works on vectors and matrices.
    pub fn gather_rows(&mut self, x: Var, index: impl Into<Arc<[usize]>>) -> Result<Var> {
        let index: Arc<[usize]> = index.into();
        let v = self.value(x);
        let rank = v.shape().len();
        if rank == 0 || rank > 2 {
            return Err(dim_err(format!("gather_rows on shape {:?}", v.shape())));
        }
        let n = v.rows();
        if let Some(&bad) = index.iter().find(|&&i| i >= n) {
            return Err(dim_err(format!("gather index {bad} out of range for {n} rows")));
        }
        let mut t = v.select_rows(&index);
        if rank == 1 {
            t = t.reshaped(vec![index.len()])?;
        }
        let needs = self.needs(x);
        Ok(self.push(t, Op::GatherRows(x, index), needs))
    }

    /// Scales row `i` of `x` by `w[i]`.
    pub fn mul_rows(&mut self, x: Var, w: Var) -> Result<Var> {
        let xv = self.value(x);
        let rows = xv.rows();
        let wv = self.value(w);
        if wv.numel() != rows || wv.shape().len() > 2 || (wv.is_matrix() && wv.cols() != 1) {
            return Err(dim_err(format!(
                "mul_rows: weights {:?} vs {rows} rows",
                wv.shape()
            )));
        }
        let cols = xv.cols();
        let mut data = xv.data().to_vec();
        for (row, &wi) in data.chunks_mut(cols.max(1)).zip(wv.data()) {
            for v in row {
                *v *= wi;
            }
        }
        let t = Tensor::new(xv.shape().to_vec(), data)?;
        self.count(t.numel());
        let needs = self.needs_any(&[x, w]);
        Ok(self.push(t, Op::MulRows(x, w), needs))
    }

    /// Softmax within each segment, stabilized by the per-segment maximum.
    pub fn segment_softmax(&mut self, scores: Var, segments: &Arc<SegmentIndex>) -> Result<Var> {
        let s = self.value(scores);
        if s.shape().len() != 1 || s.numel() != segments.len() {
            return Err(dim_err(format!(
                "segment_softmax: scores {:?} vs {} segment ids",
                s.shape(),
                segments.len()
            )));
        }
        let mut max = vec![T::neg_infinity(); segments.count()];
        for (&v, &seg) in s.data().iter().zip(segments.ids()) {
            if v > max[seg] {
                max[seg] = v;
            }
        }
        let mut out: Vec<T> = s
            .data()
            .iter()
            .zip(segments.ids())
            .map(|(&v, &seg)| (v - max[seg]).exp())
            .collect();
        let mut denom = vec![T::zero(); segments.count()];
        for (&e, &seg) in out.iter().zip(segments.ids()) {
            denom[seg] += e;
        }
        for (e, &seg) in out.iter_mut().zip(segments.ids()) {
            *e /= denom[seg];
        }
        self.count(4 * out.len());
        let needs = self.needs(scores);
        Ok(self.push(
            Tensor::vector(out),
            Op::SegmentSoftmax(scores, Arc::clone(segments)),
            needs,
        ))
    }

    /// Sums rows sharing a segment id; empty segments give zero rows.
    pub fn segment_sum(&mut self, values: Var, segments: &Arc<SegmentIndex>) -> Result<Var> {
        let v = self.value(values);
        let rank = v.shape().len();
        if rank == 0 || rank > 2 || v.rows() != segments.len() {
            return Err(dim_err(format!(
                "segment_sum: values {:?} vs {} segment ids",
                v.shape(),
                segments.len()
            )));
        }
        let cols = v.cols();
        let mut out = vec![T::zero(); segments.count() * cols];
        for (row, &seg) in v.data().chunks(cols.max(1)).zip(segments.ids()) {
            for (o, &x) in out[seg * cols..(seg + 1) * cols].iter_mut().zip(row) {
                *o += x;
            }
        }
        let shape =
            if rank == 1 { vec![segments.count()] } else { vec![segments.count(), cols] };
        self.count(v.numel());
        let needs = self.needs(values);
        Ok(self.push(
            Tensor::new(shape, out)?,
            Op::SegmentSum(values, Arc::clone(segments)),
            needs,
        ))
    }

    /// Column-wise mean of `[N×d]`, giving `[d]`.
    pub fn reduce_mean(&mut self, x: Var) -> Result<Var> {
        let (n, d) = self.matrix_dims(x, "reduce_mean")?;
        if n == 0 {
            return Err(Error::EmptyGraph("mean over zero rows".into()));
        }
        let v = self.value(x);
        let mut out = vec![T::zero(); d];
        for row in v.data().chunks(d.max(1)) {
            for (o, &x) in out.iter_mut().zip(row) {
                *o += x;
            }
        }
        let inv = T::one() / T::of(n as f64);
        for o in &mut out {
            *o *= inv;
        }
        self.count(n * d);
        let needs = self.needs(x);
        Ok(self.push(Tensor::vector(out), Op::ReduceMean(x), needs))
    }

    /// Column-wise max of `[N×d]`; ties go to the lowest row index.
    pub fn reduce_max(&mut self, x: Var) -> Result<Var> {
        let (n, d) = self.matrix_dims(x, "reduce_max")?;
        if n == 0 {
            return Err(Error::EmptyGraph("max over zero rows".into()));
        }
        let v = self.value(x);
        let mut out = v.row(0).to_vec();
        let mut arg = vec![0usize; d];
        for r in 1..n {
            for (c, &x) in v.row(r).iter().enumerate() {
                if x > out[c] {
                    out[c] = x;
                    arg[c] = r;
                }
            }
        }
        self.count(n * d);
        let needs = self.needs(x);
        Ok(self.push(Tensor::vector(out), Op::ReduceMax(x, arg), needs))
    }

    /// Sum of all elements as a scalar.
    pub fn sum(&mut self, x: Var) -> Var {
        let s: T = self.value(x).data().iter().copied().sum();
        self.count(self.value(x).numel());
        let needs = self.needs(x);
        self.push(Tensor::scalar(s), Op::Sum(x), needs)
    }

    pub fn reshape(&mut self, x: Var, shape: Vec<usize>) -> Result<Var> {
        let t = self.value(x).clone().reshaped(shape)?;
        let needs = self.needs(x);
        Ok(self.push(t, Op::Reshape(x), needs))
    }

    /// Numerically stable log-softmax of a vector.
    pub fn log_softmax(&mut self, x: Var) -> Result<Var> {
        let v = self.value(x);
        if v.shape().len() != 1 || v.numel() == 0 {
            return Err(dim_err(format!("log_softmax on shape {:?}", v.shape())));
        }
        let max = v.data().iter().copied().fold(T::neg_infinity(), T::max);
        let lse = max + v.data().iter().map(|&a| (a - max).exp()).sum::<T>().ln();
        let out: Vec<T> = v.data().iter().map(|&a| a - lse).collect();
        self.count(4 * out.len());
        let needs = self.needs(x);
        Ok(self.push(Tensor::vector(out), Op::LogSoftmax(x), needs))
    }

    /// Element `i` of a vector as a scalar.
    pub fn pick(&mut self, x: Var, i: usize) -> Result<Var> {
        let v = self.value(x);
        if v.shape().len() != 1 || i >= v.numel() {
            return Err(dim_err(format!("pick {i} from shape {:?}", v.shape())));
        }
        let t = Tensor::scalar(v.data()[i]);
        let needs = self.needs(x);
        Ok(self.push(t, Op::Pick(x, i), needs))
    }

    /// Euclidean norm of all elements.
    pub fn norm(&mut self, x: Var) -> Var {
        let v = self.value(x);
        let n = v.data().iter().map(|&a| a * a).sum::<T>().sqrt();
        self.count(2 * v.numel());
        let needs = self.needs(x);
        self.push(Tensor::scalar(n), Op::Norm(x), needs)
    }

    /// `x / s` for a one-element `s`.
    pub fn div_scalar(&mut self, x: Var, s: Var) -> Result<Var> {
        if self.value(s).numel() != 1 {
            return Err(dim_err(format!("divisor shape {:?} is not scalar", self.shape(s))));
        }
        let d = self.value(s).data()[0];
        let t = self.value(x).map(|a| a / d);
        self.count(t.numel());
        let needs = self.needs_any(&[x, s]);
        Ok(self.push(t, Op::DivScalar(x, s), needs))
    }

    /// Pushes one node's upstream gradient `g` into its inputs.
    pub(super) fn propagate(&self, node: &Node<T>, g: &[T], grads: &mut [Option<Vec<T>>]) {
        let mut acc = |v: Var, f: &mut dyn FnMut(&mut [T])| {
            if !self.needs(v) {
                return;
            }
            let buf = grads[v.0].get_or_insert_with(|| vec![T::zero(); self.value(v).numel()]);
            f(buf);
        };
        match &node.op {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                let (m, k) = (self.shape(*a)[0], self.shape(*a)[1]);
                let n = self.shape(*b)[1];
                let av = self.value(*a).data();
                let bv = self.value(*b).data();
                // dA = G·Bᵀ
                acc(*a, &mut |da| {
                    for i in 0..m {
                        let grow = &g[i * n..(i + 1) * n];
                        for p in 0..k {
                            let brow = &bv[p * n..(p + 1) * n];
                            let mut s = T::zero();
                            for (&x, &y) in grow.iter().zip(brow) {
                                s += x * y;
                            }
                            da[i * k + p] += s;
                        }
                    }
                });
                // dB = Aᵀ·G
                acc(*b, &mut |db| {
                    for i in 0..m {
                        let grow = &g[i * n..(i + 1) * n];
                        for p in 0..k {
                            let aip = av[i * k + p];
                            if aip == T::zero() {
                                continue;
                            }
                            for (o, &x) in db[p * n..(p + 1) * n].iter_mut().zip(grow) {
                                *o += aip * x;
                            }
                        }
                    }
                });
            }
            Op::AddRow(x, b) => {
                let d = self.shape(*b)[0];
                acc(*x, &mut |dx| add_into(dx, g));
                acc(*b, &mut |db| {
                    for row in g.chunks(d.max(1)) {
                        add_into(db, row);
                    }
                });
            }
            Op::Add(a, b) => {
                acc(*a, &mut |da| add_into(da, g));
                acc(*b, &mut |db| add_into(db, g));
            }
            Op::Mul(a, b) => {
                let av = self.value(*a).data();
                let bv = self.value(*b).data();
                acc(*a, &mut |da| {
                    for ((o, &gi), &y) in da.iter_mut().zip(g).zip(bv) {
                        *o += gi * y;
                    }
                });
                acc(*b, &mut |db| {
                    for ((o, &gi), &x) in db.iter_mut().zip(g).zip(av) {
                        *o += gi * x;
                    }
                });
            }
            Op::Scale(x, f) => {
                acc(*x, &mut |dx| {
                    for (o, &gi) in dx.iter_mut().zip(g) {
                        *o += gi * *f;
                    }
                });
            }
            Op::Act(x, kind) => {
                let xv = self.value(*x).data();
                let yv = node.value.data();
                acc(*x, &mut |dx| {
                    for (i, o) in dx.iter_mut().enumerate() {
                        *o += g[i] * kind.derivative(xv[i], yv[i]);
                    }
                });
            }
            Op::Concat { parts, axis } => match (node.value.shape().len(), axis) {
                (2, 1) => {
                    let rows = node.value.shape()[0];
                    let total = node.value.shape()[1];
                    let mut offset = 0;
                    for &p in parts {
                        let w = self.shape(p)[1];
                        acc(p, &mut |dp| {
                            for r in 0..rows {
                                let src = &g[r * total + offset..r * total + offset + w];
                                add_into(&mut dp[r * w..(r + 1) * w], src);
                            }
                        });
                        offset += w;
                    }
                }
                _ => {
                    let mut offset = 0;
                    for &p in parts {
                        let len = self.value(p).numel();
                        acc(p, &mut |dp| add_into(dp, &g[offset..offset + len]));
                        offset += len;
                    }
                }
            },
            Op::GatherRows(x, index) => {
                let cols = self.value(*x).cols();
                acc(*x, &mut |dx| {
                    for (i, &src) in index.iter().enumerate() {
                        add_into(&mut dx[src * cols..(src + 1) * cols], &g[i * cols..(i + 1) * cols]);
                    }
                });
            }
            Op::MulRows(x, w) => {
                let xv = self.value(*x);
                let cols = xv.cols();
                let wv = self.value(*w).data();
                acc(*x, &mut |dx| {
                    for (r, &wi) in wv.iter().enumerate() {
                        for c in 0..cols {
                            dx[r * cols + c] += g[r * cols + c] * wi;
                        }
                    }
                });
                acc(*w, &mut |dw| {
                    for (r, o) in dw.iter_mut().enumerate() {
                        let mut s = T::zero();
                        for c in 0..cols {
                            s += g[r * cols + c] * xv.data()[r * cols + c];
                        }
                        *o += s;
                    }
                });
            }
            Op::SegmentSoftmax(s, segs) => {
                let y = node.value.data();
                let mut dot = vec![T::zero(); segs.count()];
                for ((&gi, &yi), &seg) in g.iter().zip(y).zip(segs.ids()) {
                    dot[seg] += gi * yi;
                }
                acc(*s, &mut |ds| {
                    for (i, &seg) in segs.ids().iter().enumerate() {
                        ds[i] += y[i] * (g[i] - dot[seg]);
                    }
                });
            }
            Op::SegmentSum(v, segs) => {
                let cols = self.value(*v).cols();
                acc(*v, &mut |dv| {
                    for (i, &seg) in segs.ids().iter().enumerate() {
                        add_into(&mut dv[i * cols..(i + 1) * cols], &g[seg * cols..(seg + 1) * cols]);
                    }
                });
            }
            Op::ReduceMean(x) => {
                let n = self.shape(*x)[0];
                let inv = T::one() / T::of(n as f64);
                acc(*x, &mut |dx| {
                    for row in dx.chunks_mut(g.len().max(1)) {
                        for (o, &gi) in row.iter_mut().zip(g) {
                            *o += gi * inv;
                        }
                    }
                });
            }
            Op::ReduceMax(x, arg) => {
                let d = g.len();
                acc(*x, &mut |dx| {
                    for (c, &r) in arg.iter().enumerate() {
                        dx[r * d + c] += g[c];
                    }
                });
            }
            Op::Sum(x) => {
                acc(*x, &mut |dx| {
                    for o in dx.iter_mut() {
                        *o += g[0];
                    }
                });
            }
            Op::Reshape(x) => acc(*x, &mut |dx| add_into(dx, g)),
            Op::LogSoftmax(x) => {
                let total: T = g.iter().copied().sum();
                let y = node.value.data();
                acc(*x, &mut |dx| {
                    for i in 0..dx.len() {
                        dx[i] += g[i] - y[i].exp() * total;
                    }
                });
            }
            Op::Pick(x, i) => acc(*x, &mut |dx| dx[*i] += g[0]),
            Op::Norm(x) => {
                let n = node.value.data()[0];
                if n > T::zero() {
                    let xv = self.value(*x).data();
                    acc(*x, &mut |dx| {
                        for (o, &a) in dx.iter_mut().zip(xv) {
                            *o += g[0] * a / n;
                        }
                    });
                }
            }
            Op::DivScalar(x, s) => {
                let d = self.value(*s).data()[0];
                let xv = self.value(*x).data();
                acc(*x, &mut |dx| {
                    for (o, &gi) in dx.iter_mut().zip(g) {
                        *o += gi / d;
                    }
                });
                acc(*s, &mut |ds| {
                    let dot: T = g.iter().zip(xv).map(|(&gi, &a)| gi * a).sum();
                    ds[0] -= dot / (d * d);
                });
            }
        }
    }
}

fn add_into<T: Scalar>(dst: &mut [T], src: &[T]) {
    for (d, &s) in dst.iter_mut().zip(src) {
        *d += s;
    }
}
