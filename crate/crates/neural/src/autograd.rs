//! A small reverse-mode tape over dense `f64` matrices.
//!
//! Every operation appends a node holding its forward value; `backward`
//! walks the tape in reverse and accumulates gradients. Parameters enter the
//! tape by name, once each, so their gradients can be read back by name.

use std::collections::BTreeMap;

use ndarray::{concatenate, s, Array2, Axis};

use crate::params::ParamStore;

/// Handle to a node on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var(usize);

#[derive(Debug)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    MatMulT(Var, Var),
    Add(Var, Var),
    AddRow(Var, Var),
    Scale(Var, f64),
    Mul(Var, Var),
    MulConst(Var, Array2<f64>),
    Sigmoid(Var),
    Tanh(Var),
    Relu(Var),
    Softmax(Var),
    LayerNorm {
        x: Var,
        gamma: Var,
        beta: Var,
        xhat: Array2<f64>,
        inv_std: Vec<f64>,
    },
    ConcatCols(Vec<Var>),
    ConcatRows(Vec<Var>),
    SliceRows(Var, usize),
    SliceCols(Var, usize),
    GatherRows(Var, Vec<usize>),
    GatherIndex(Var, Array2<usize>),
    BucketSum(Var, Array2<usize>),
    CrossEntropy {
        logits: Var,
        targets: Vec<usize>,
        probs: Array2<f64>,
    },
}

struct Node {
    value: Array2<f64>,
    op: Op,
}

pub struct Tape<'p> {
    nodes: Vec<Node>,
    params: &'p ParamStore,
    param_vars: BTreeMap<String, Var>,
}

/// Gradients of one scalar with respect to every node on the tape.
pub struct Gradients {
    grads: Vec<Option<Array2<f64>>>,
}

impl Gradients {
    pub fn get(&self, v: Var) -> Option<&Array2<f64>> {
        self.grads[v.0].as_ref()
    }
}

fn softmax_rows(x: &Array2<f64>) -> Array2<f64> {
    let mut out = x.clone();
    for mut row in out.rows_mut() {
        let m = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        row.mapv_inplace(|v| if v == f64::NEG_INFINITY { 0.0 } else { (v - m).exp() });
        let z: f64 = row.sum();
        row.mapv_inplace(|v| v / z);
    }
    out
}

const LN_EPS: f64 = 1e-5;

impl<'p> Tape<'p> {
    pub fn new(params: &'p ParamStore) -> Self {
        Tape {
            nodes: Vec::new(),
            params,
            param_vars: BTreeMap::new(),
        }
    }

    fn push(&mut self, value: Array2<f64>, op: Op) -> Var {
        self.nodes.push(Node { value, op });
        Var(self.nodes.len() - 1)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Array2<f64> {
        &self.nodes[v.0].value
    }

    /// Scalar value of a 1×1 node.
    pub fn scalar(&self, v: Var) -> f64 {
        self.value(v)[[0, 0]]
    }

    pub fn constant(&mut self, value: Array2<f64>) -> Var {
        self.push(value, Op::Leaf)
    }

    /// The named parameter, entered on the tape on first use.
    ///
    /// Panics if the store has no such parameter; names are fixed by the
    /// model layout, so a miss is a programming error.
    pub fn param(&mut self, name: &str) -> Var {
        if let Some(v) = self.param_vars.get(name) {
            return *v;
        }
        let value = self
            .params
            .get(name)
            .unwrap_or_else(|| panic!("unknown parameter `{name}`"))
            .clone();
        let v = self.push(value, Op::Leaf);
        self.param_vars.insert(name.to_string(), v);
        v
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Var {
        let v = self.value(a).dot(self.value(b));
        self.push(v, Op::MatMul(a, b))
    }

    /// `a · bᵀ`
    pub fn matmul_t(&mut self, a: Var, b: Var) -> Var {
        let v = self.value(a).dot(&self.value(b).t());
        self.push(v, Op::MatMulT(a, b))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let v = self.value(a) + self.value(b);
        self.push(v, Op::Add(a, b))
    }

    /// Adds a 1×d row to every row of `a`.
    pub fn add_row(&mut self, a: Var, row: Var) -> Var {
        assert_eq!(self.value(row).nrows(), 1, "add_row expects a single row");
        let v = self.value(a) + self.value(row);
        self.push(v, Op::AddRow(a, row))
    }

    pub fn scale(&mut self, a: Var, k: f64) -> Var {
        let v = self.value(a) * k;
        self.push(v, Op::Scale(a, k))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        let v = self.value(a) * self.value(b);
        self.push(v, Op::Mul(a, b))
    }

    /// Elementwise product with a fixed matrix (dropout masks).
    pub fn mul_const(&mut self, a: Var, k: Array2<f64>) -> Var {
        let v = self.value(a) * &k;
        self.push(v, Op::MulConst(a, k))
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let v = self.value(a).mapv(|x| 1.0 / (1.0 + (-x).exp()));
        self.push(v, Op::Sigmoid(a))
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        let v = self.value(a).mapv(f64::tanh);
        self.push(v, Op::Tanh(a))
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let v = self.value(a).mapv(|x| x.max(0.0));
        self.push(v, Op::Relu(a))
    }

    /// Row-wise softmax. Entries equal to `-inf` get probability zero.
    pub fn softmax(&mut self, a: Var) -> Var {
        let v = softmax_rows(self.value(a));
        self.push(v, Op::Softmax(a))
    }

    /// Row-wise layer normalisation with gain and bias rows.
    pub fn layer_norm(&mut self, x: Var, gamma: Var, beta: Var) -> Var {
        let xv = self.value(x);
        let d = xv.ncols() as f64;
        let mut xhat = xv.clone();
        let mut inv_std = Vec::with_capacity(xv.nrows());
        for mut row in xhat.rows_mut() {
            let mean = row.sum() / d;
            let var = row.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / d;
            let is = 1.0 / (var + LN_EPS).sqrt();
            row.mapv_inplace(|v| (v - mean) * is);
            inv_std.push(is);
        }
        let out = &xhat * self.value(gamma) + self.value(beta);
        self.push(
            out,
            Op::LayerNorm {
                x,
                gamma,
                beta,
                xhat,
                inv_std,
            },
        )
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Var {
        let views: Vec<_> = parts.iter().map(|p| self.value(*p).view()).collect();
        let v = concatenate(Axis(1), &views).expect("row counts agree");
        self.push(v, Op::ConcatCols(parts.to_vec()))
    }

    pub fn concat_rows(&mut self, parts: &[Var]) -> Var {
        let views: Vec<_> = parts.iter().map(|p| self.value(*p).view()).collect();
        let v = concatenate(Axis(0), &views).expect("column counts agree");
        self.push(v, Op::ConcatRows(parts.to_vec()))
    }

    pub fn slice_rows(&mut self, a: Var, start: usize, len: usize) -> Var {
        let v = self.value(a).slice(s![start..start + len, ..]).to_owned();
        self.push(v, Op::SliceRows(a, start))
    }

    pub fn slice_cols(&mut self, a: Var, start: usize, len: usize) -> Var {
        let v = self.value(a).slice(s![.., start..start + len]).to_owned();
        self.push(v, Op::SliceCols(a, start))
    }

    /// Rows of `a` picked by index (embedding lookup).
    pub fn gather_rows(&mut self, a: Var, idx: &[usize]) -> Var {
        let v = self.value(a).select(Axis(0), idx);
        self.push(v, Op::GatherRows(a, idx.to_vec()))
    }

    /// `out[i][j] = a[i][idx[i][j]]`
    pub fn gather_index(&mut self, a: Var, idx: &Array2<usize>) -> Var {
        let av = self.value(a);
        let v = Array2::from_shape_fn(idx.dim(), |(i, j)| av[[i, idx[[i, j]]]]);
        self.push(v, Op::GatherIndex(a, idx.clone()))
    }

    /// `out[i][t] = Σ_j a[i][j]·[idx[i][j] = t]` for `t < buckets`.
    pub fn bucket_sum(&mut self, a: Var, idx: &Array2<usize>, buckets: usize) -> Var {
        let av = self.value(a);
        let mut v = Array2::zeros((av.nrows(), buckets));
        for ((i, j), &t) in idx.indexed_iter() {
            v[[i, t]] += av[[i, j]];
        }
        self.push(v, Op::BucketSum(a, idx.clone()))
    }

    /// Mean negative log-likelihood of `targets[r]` under the softmax of
    /// row `r` of `logits`. Returns a 1×1 node.
    pub fn cross_entropy(&mut self, logits: Var, targets: &[usize]) -> Var {
        let probs = softmax_rows(self.value(logits));
        assert_eq!(probs.nrows(), targets.len(), "one target per row");
        let n = targets.len().max(1) as f64;
        let nll: f64 = targets.iter().enumerate().map(|(r, &t)| -probs[[r, t]].ln()).sum::<f64>() / n;
        self.push(
            Array2::from_elem((1, 1), nll),
            Op::CrossEntropy {
                logits,
                targets: targets.to_vec(),
                probs,
            },
        )
    }

    /// Reverse pass from a 1×1 node.
    pub fn backward(&self, root: Var) -> Gradients {
        let mut grads: Vec<Option<Array2<f64>>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[root.0] = Some(Array2::ones(self.value(root).dim()));
        fn acc(grads: &mut [Option<Array2<f64>>], v: Var, g: Array2<f64>) {
            match &mut grads[v.0] {
                Some(x) => *x += &g,
                slot => *slot = Some(g),
            }
        }
        for idx in (0..=root.0).rev() {
            let Some(g) = grads[idx].take() else { continue };
            let node = &self.nodes[idx];
            match &node.op {
                Op::Leaf => {}
                Op::MatMul(a, b) => {
                    acc(&mut grads, *a, g.dot(&self.value(*b).t()));
                    acc(&mut grads, *b, self.value(*a).t().dot(&g));
                }
                Op::MatMulT(a, b) => {
                    acc(&mut grads, *a, g.dot(self.value(*b)));
                    acc(&mut grads, *b, g.t().dot(self.value(*a)));
                }
                Op::Add(a, b) => {
                    acc(&mut grads, *a, g.clone());
                    acc(&mut grads, *b, g.clone());
                }
                Op::AddRow(a, row) => {
                    acc(&mut grads, *row, g.sum_axis(Axis(0)).insert_axis(Axis(0)));
                    acc(&mut grads, *a, g.clone());
                }
                Op::Scale(a, k) => acc(&mut grads, *a, &g * *k),
                Op::Mul(a, b) => {
                    acc(&mut grads, *a, &g * self.value(*b));
                    acc(&mut grads, *b, &g * self.value(*a));
                }
                Op::MulConst(a, k) => acc(&mut grads, *a, &g * k),
                Op::Sigmoid(a) => acc(&mut grads, *a, &g * &node.value.mapv(|y| y * (1.0 - y))),
                Op::Tanh(a) => acc(&mut grads, *a, &g * &node.value.mapv(|y| 1.0 - y * y)),
                Op::Relu(a) => {
                    let mask = self.value(*a).mapv(|x| if x > 0.0 { 1.0 } else { 0.0 });
                    acc(&mut grads, *a, &g * &mask)
                }
                Op::Softmax(a) => {
                    let y = &node.value;
                    let dot = (&g * y).sum_axis(Axis(1)).insert_axis(Axis(1));
                    acc(&mut grads, *a, y * &(&g - &dot));
                }
                Op::LayerNorm {
                    x,
                    gamma,
                    beta,
                    xhat,
                    inv_std,
                } => {
                    acc(&mut grads, *beta, g.sum_axis(Axis(0)).insert_axis(Axis(0)));
                    acc(&mut grads, *gamma, (&g * xhat).sum_axis(Axis(0)).insert_axis(Axis(0)));
                    let dxhat = &g * self.value(*gamma);
                    let d = xhat.ncols() as f64;
                    let mut dx = Array2::zeros(xhat.dim());
                    for r in 0..xhat.nrows() {
                        let dh = dxhat.row(r);
                        let xh = xhat.row(r);
                        let sum_dh = dh.sum();
                        let sum_dhx = (&dh * &xh).sum();
                        for c in 0..xhat.ncols() {
                            dx[[r, c]] = inv_std[r] / d * (d * dh[c] - sum_dh - xh[c] * sum_dhx);
                        }
                    }
                    acc(&mut grads, *x, dx);
                }
                Op::ConcatCols(parts) => {
                    let mut off = 0;
                    for p in parts {
                        let w = self.value(*p).ncols();
                        acc(&mut grads, *p, g.slice(s![.., off..off + w]).to_owned());
                        off += w;
                    }
                }
                Op::ConcatRows(parts) => {
                    let mut off = 0;
                    for p in parts {
                        let h = self.value(*p).nrows();
                        acc(&mut grads, *p, g.slice(s![off..off + h, ..]).to_owned());
                        off += h;
                    }
                }
                Op::SliceRows(a, start) => {
                    let mut full = Array2::zeros(self.value(*a).dim());
                    full.slice_mut(s![*start..*start + g.nrows(), ..]).assign(&g);
                    acc(&mut grads, *a, full);
                }
                Op::SliceCols(a, start) => {
                    let mut full = Array2::zeros(self.value(*a).dim());
                    full.slice_mut(s![.., *start..*start + g.ncols()]).assign(&g);
                    acc(&mut grads, *a, full);
                }
                Op::GatherRows(a, idx) => {
                    let mut full = Array2::zeros(self.value(*a).dim());
                    for (r, &i) in idx.iter().enumerate() {
                        let mut row = full.row_mut(i);
                        row += &g.row(r);
                    }
                    acc(&mut grads, *a, full);
                }
                Op::GatherIndex(a, idx) => {
                    let mut full = Array2::zeros(self.value(*a).dim());
                    for ((i, j), &k) in idx.indexed_iter() {
                        full[[i, k]] += g[[i, j]];
                    }
                    acc(&mut grads, *a, full);
                }
                Op::BucketSum(a, idx) => {
                    let v = Array2::from_shape_fn(idx.dim(), |(i, j)| g[[i, idx[[i, j]]]]);
                    acc(&mut grads, *a, v);
                }
                Op::CrossEntropy { logits, targets, probs } => {
                    let n = targets.len().max(1) as f64;
                    let mut d = probs.clone();
                    for (r, &t) in targets.iter().enumerate() {
                        d[[r, t]] -= 1.0;
                    }
                    acc(&mut grads, *logits, d * (g[[0, 0]] / n));
                }
            }
            grads[idx] = Some(g);
        }
        Gradients { grads }
    }

    /// Gradients of every parameter used on this tape, keyed by name.
    pub fn param_grads(&self, grads: &Gradients) -> BTreeMap<String, Array2<f64>> {
        self.param_vars
            .iter()
            .map(|(name, v)| {
                let g = grads.get(*v).cloned().unwrap_or_else(|| Array2::zeros(self.value(*v).dim()));
                (name.clone(), g)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    /// Central differences of `f` around `x`, compared with the tape.
    fn check(x: Array2<f64>, f: impl Fn(&mut Tape, Var) -> Var) {
        let store = ParamStore::default();
        let mut tape = Tape::new(&store);
        let xv = tape.constant(x.clone());
        let out = f(&mut tape, xv);
        let grads = tape.backward(out);
        let analytic = grads.get(xv).unwrap().clone();
        let h = 1e-6;
        for idx in 0..x.len() {
            let (r, c) = (idx / x.ncols(), idx % x.ncols());
            let eval = |delta: f64| {
                let mut xp = x.clone();
                xp[[r, c]] += delta;
                let mut t = Tape::new(&store);
                let v = t.constant(xp);
                let o = f(&mut t, v);
                t.scalar(o)
            };
            let numeric = (eval(h) - eval(-h)) / (2.0 * h);
            assert!(
                (numeric - analytic[[r, c]]).abs() < 1e-6,
                "entry ({r},{c}): numeric {numeric} analytic {}",
                analytic[[r, c]]
            );
        }
    }

    fn sum_weighted(t: &mut Tape, v: Var) -> Var {
        // A fixed linear read-out to a scalar: Σ w_ij v_ij.
        let (r, c) = t.value(v).dim();
        let w = Array2::from_shape_fn((r, c), |(i, j)| 0.3 + 0.7 * ((i * 7 + j * 3) % 5) as f64);
        let wv = t.constant(w);
        let p = t.mul(v, wv);
        let ones_r = t.constant(Array2::ones((1, r)));
        let ones_c = t.constant(Array2::ones((c, 1)));
        let s = t.matmul(ones_r, p);
        t.matmul(s, ones_c)
    }

    fn x() -> Array2<f64> {
        array![[0.3, -1.2, 0.5], [1.1, 0.4, -0.7]]
    }

    #[test]
    fn elementwise_ops() {
        check(x(), |t, v| {
            let a = t.sigmoid(v);
            sum_weighted(t, a)
        });
        check(x(), |t, v| {
            let a = t.tanh(v);
            sum_weighted(t, a)
        });
        check(x(), |t, v| {
            let a = t.relu(v);
            sum_weighted(t, a)
        });
        check(x(), |t, v| {
            let a = t.mul(v, v);
            let b = t.scale(a, 0.5);
            sum_weighted(t, b)
        });
    }

    #[test]
    fn matrix_ops() {
        check(x(), |t, v| {
            let m = t.matmul_t(v, v);
            let n = t.matmul(m, v);
            sum_weighted(t, n)
        });
        check(x(), |t, v| {
            let row = t.slice_rows(v, 1, 1);
            let a = t.add_row(v, row);
            let c = t.concat_cols(&[a, v]);
            let r = t.concat_rows(&[c, c]);
            let s = t.slice_cols(r, 1, 4);
            sum_weighted(t, s)
        });
    }

    #[test]
    fn normalisers() {
        check(x(), |t, v| {
            let s = t.softmax(v);
            sum_weighted(t, s)
        });
        check(x(), |t, v| {
            let g = t.constant(array![[1.5, -0.5, 2.0]]);
            let b = t.constant(array![[0.1, 0.2, 0.3]]);
            let n = t.layer_norm(v, g, b);
            sum_weighted(t, n)
        });
        check(x(), |t, v| t.cross_entropy(v, &[2, 0]));
    }

    #[test]
    fn index_ops() {
        let idx = array![[0usize, 2, 2], [1, 1, 0]];
        check(x(), |t, v| {
            let g = t.gather_index(v, &idx);
            sum_weighted(t, g)
        });
        check(x(), |t, v| {
            let b = t.bucket_sum(v, &idx, 4);
            sum_weighted(t, b)
        });
        check(x(), |t, v| {
            let g = t.gather_rows(v, &[1, 0, 1]);
            sum_weighted(t, g)
        });
    }

    #[test]
    fn masked_softmax_zeroes_entries() {
        let store = ParamStore::default();
        let mut t = Tape::new(&store);
        let v = t.constant(array![[0.0, f64::NEG_INFINITY, 1.0]]);
        let s = t.softmax(v);
        assert_eq!(t.value(s)[[0, 1]], 0.0);
        assert!((t.value(s).sum() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn uniform_cross_entropy() {
        let store = ParamStore::default();
        let mut t = Tape::new(&store);
        let v = t.constant(Array2::zeros((3, 7)));
        let l = t.cross_entropy(v, &[0, 3, 6]);
        assert!((t.scalar(l) - 7f64.ln()).abs() < 1e-12);
    }
}
