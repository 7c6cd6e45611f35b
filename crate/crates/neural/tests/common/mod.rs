//! Straight-line reference implementations over nested `Vec`s, written
//! without the tape or ndarray arithmetic.

#![allow(dead_code)]

use kbqa_neural::params::ParamStore;

pub type Mat = Vec<Vec<f64>>;

pub fn param(p: &ParamStore, name: &str) -> Mat {
    let a = p.get(name).unwrap_or_else(|| panic!("missing {name}"));
    a.rows().into_iter().map(|r| r.to_vec()).collect()
}

pub fn from_array(a: &ndarray::Array2<f64>) -> Mat {
    a.rows().into_iter().map(|r| r.to_vec()).collect()
}

pub fn matmul(a: &Mat, b: &Mat) -> Mat {
    let (n, k, m) = (a.len(), b.len(), b[0].len());
    let mut out = vec![vec![0.0; m]; n];
    for i in 0..n {
        for j in 0..m {
            let mut s = 0.0;
            for t in 0..k {
                s += a[i][t] * b[t][j];
            }
            out[i][j] = s;
        }
    }
    out
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn softmax(row: &[f64]) -> Vec<f64> {
    let m = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = row.iter().map(|x| (x - m).exp()).collect();
    let z: f64 = e.iter().sum();
    e.iter().map(|x| x / z).collect()
}

pub fn layer_norm(x: &Mat, g: &[f64], b: &[f64]) -> Mat {
    x.iter()
        .map(|row| {
            let n = row.len() as f64;
            let mean = row.iter().sum::<f64>() / n;
            let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
            let sd = (var + 1e-5).sqrt();
            row.iter().enumerate().map(|(k, v)| (v - mean) / sd * g[k] + b[k]).collect()
        })
        .collect()
}

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Relation-aware layer: returns the output and per-head attention rows.
pub fn rat_layer(p: &ParamStore, l: usize, heads: usize, d_z: usize, x: &Mat, edges: &[Vec<usize>]) -> (Mat, Vec<Mat>) {
    let n = x.len();
    let d_x = x[0].len();
    let dk = d_x / heads;
    let r = param(p, &format!("enc{l}.edge"));
    let scale = (d_z as f64 / heads as f64).sqrt();
    let mut concat = vec![Vec::with_capacity(d_x); n];
    let mut alphas = Vec::new();
    for h in 0..heads {
        let q = matmul(x, &param(p, &format!("enc{l}.wq{h}")));
        let k = matmul(x, &param(p, &format!("enc{l}.wk{h}")));
        let v = matmul(x, &param(p, &format!("enc{l}.wv{h}")));
        let mut alpha = Vec::new();
        for i in 0..n {
            let scores: Vec<f64> = (0..n)
                .map(|j| {
                    let key: Vec<f64> = (0..dk).map(|t| k[j][t] + r[edges[i][j]][t]).collect();
                    dot(&q[i], &key) / scale
                })
                .collect();
            let a = softmax(&scores);
            let mut c = vec![0.0; dk];
            for j in 0..n {
                for t in 0..dk {
                    c[t] += a[j] * (v[j][t] + r[edges[i][j]][t]);
                }
            }
            concat[i].extend(c);
            alpha.push(a);
        }
        alphas.push(alpha);
    }
    let res: Mat = (0..n).map(|i| (0..d_x).map(|t| x[i][t] + concat[i][t]).collect()).collect();
    let y = layer_norm(&res, &param(p, &format!("enc{l}.ln1.g"))[0], &param(p, &format!("enc{l}.ln1.b"))[0]);
    let w1 = param(p, &format!("enc{l}.ff1.w"));
    let b1 = &param(p, &format!("enc{l}.ff1.b"))[0];
    let w2 = param(p, &format!("enc{l}.ff2.w"));
    let b2 = &param(p, &format!("enc{l}.ff2.b"))[0];
    let hidden: Mat = matmul(&y, &w1)
        .into_iter()
        .map(|row| row.iter().zip(b1).map(|(a, b)| (a + b).max(0.0)).collect())
        .collect();
    let f = matmul(&hidden, &w2);
    let res2: Mat = (0..n).map(|i| (0..d_x).map(|t| y[i][t] + f[i][t] + b2[t]).collect()).collect();
    let out = layer_norm(&res2, &param(p, &format!("enc{l}.ln2.g"))[0], &param(p, &format!("enc{l}.ln2.b"))[0]);
    (out, alphas)
}

pub fn max_abs_diff(a: &Mat, b: &ndarray::Array2<f64>) -> f64 {
    assert_eq!((a.len(), a[0].len()), b.dim());
    let mut m: f64 = 0.0;
    for (i, row) in a.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            m = m.max((v - b[[i, j]]).abs());
        }
    }
    m
}
