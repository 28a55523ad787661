//! Reference pre-norm transformer encoder block (single head).
//!
//! Row-vector convention: `x` is `T x D`, linear layers compute `x W + b`.
//!
//! ```text
//! h1  = LN(x; g1, be1)
//! A   = softmax_rows((h1 Wq + bq)(h1 Wk + bk)ᵀ / sqrt(D))
//! y   = x + A (h1 Wv + bv) Wo + bo
//! h2  = LN(y; g2, be2)
//! out = y + gelu(h2 W1 + b1) W2 + b2
//! ```
//!
//! GELU uses the tanh approximation.

use nalgebra::DMatrix;

use crate::rng::SplitMix64;
use crate::{Error, Result};

const LN_EPS: f64 = 1e-5;
const GELU_C: f64 = 0.044_715;

/// Weights of one block. Vectors (biases, norm gains) are `1 x n` matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockWeights {
    pub ln1_gain: DMatrix<f64>,
    pub ln1_bias: DMatrix<f64>,
    pub wq: DMatrix<f64>,
    pub bq: DMatrix<f64>,
    pub wk: DMatrix<f64>,
    pub bk: DMatrix<f64>,
    pub wv: DMatrix<f64>,
    pub bv: DMatrix<f64>,
    pub wo: DMatrix<f64>,
    pub bo: DMatrix<f64>,
    pub ln2_gain: DMatrix<f64>,
    pub ln2_bias: DMatrix<f64>,
    pub w1: DMatrix<f64>,
    pub b1: DMatrix<f64>,
    pub w2: DMatrix<f64>,
    pub b2: DMatrix<f64>,
}

impl BlockWeights {
    /// All projections zero, unit norm gains. The block is then the identity.
    pub fn zeros(dim: usize, hidden: usize) -> Self {
        let row = |n| DMatrix::zeros(1, n);
        Self {
            ln1_gain: DMatrix::from_element(1, dim, 1.0),
            ln1_bias: row(dim),
            wq: DMatrix::zeros(dim, dim),
            bq: row(dim),
            wk: DMatrix::zeros(dim, dim),
            bk: row(dim),
            wv: DMatrix::zeros(dim, dim),
            bv: row(dim),
            wo: DMatrix::zeros(dim, dim),
            bo: row(dim),
            ln2_gain: DMatrix::from_element(1, dim, 1.0),
            ln2_bias: row(dim),
            w1: DMatrix::zeros(dim, hidden),
            b1: row(hidden),
            w2: DMatrix::zeros(hidden, dim),
            b2: row(dim),
        }
    }

    /// Every entry drawn from `N(0, scale^2)`; norm gains are `1 + N(0, scale^2)`.
    pub fn seeded(dim: usize, hidden: usize, scale: f64, seed: u64) -> Self {
        let mut rng = SplitMix64::new(seed);
        let mut w = Self::zeros(dim, hidden);
        for (name, t) in w.tensors_mut() {
            let offset = if name.ends_with("gain") { 1.0 } else { 0.0 };
            for v in t.iter_mut() {
                *v = offset + scale * rng.next_gaussian();
            }
        }
        w
    }

    pub fn dim(&self) -> usize {
        self.wq.nrows()
    }

    pub fn hidden(&self) -> usize {
        self.w1.ncols()
    }

    pub fn tensors(&self) -> [(&'static str, &DMatrix<f64>); 16] {
        [
            ("ln1_gain", &self.ln1_gain),
            ("ln1_bias", &self.ln1_bias),
            ("wq", &self.wq),
            ("bq", &self.bq),
            ("wk", &self.wk),
            ("bk", &self.bk),
            ("wv", &self.wv),
            ("bv", &self.bv),
            ("wo", &self.wo),
            ("bo", &self.bo),
            ("ln2_gain", &self.ln2_gain),
            ("ln2_bias", &self.ln2_bias),
            ("w1", &self.w1),
            ("b1", &self.b1),
            ("w2", &self.w2),
            ("b2", &self.b2),
        ]
    }

    pub fn tensors_mut(&mut self) -> [(&'static str, &mut DMatrix<f64>); 16] {
        [
            ("ln1_gain", &mut self.ln1_gain),
            ("ln1_bias", &mut self.ln1_bias),
            ("wq", &mut self.wq),
            ("bq", &mut self.bq),
            ("wk", &mut self.wk),
            ("bk", &mut self.bk),
            ("wv", &mut self.wv),
            ("bv", &mut self.bv),
            ("wo", &mut self.wo),
            ("bo", &mut self.bo),
            ("ln2_gain", &mut self.ln2_gain),
            ("ln2_bias", &mut self.ln2_bias),
            ("w1", &mut self.w1),
            ("b1", &mut self.b1),
            ("w2", &mut self.w2),
            ("b2", &mut self.b2),
        ]
    }

    pub fn validate(&self) -> Result<()> {
        let (d, h) = (self.dim(), self.hidden());
        if d == 0 || h == 0 {
            return Err(Error::shape("block dimensions must be positive"));
        }
        let expect = |name: &str, m: &DMatrix<f64>, r: usize, c: usize| {
            if m.shape() != (r, c) {
                Err(Error::shape(format!("{name} is {:?}, expected ({r}, {c})", m.shape())))
            } else {
                Ok(())
            }
        };
        for (name, t) in self.tensors() {
            let (r, c) = match name {
                "wq" | "wk" | "wv" | "wo" => (d, d),
                "w1" => (d, h),
                "w2" => (h, d),
                "b1" => (1, h),
                _ => (1, d),
            };
            expect(name, t, r, c)?;
            if t.iter().any(|v| v.is_nan()) {
                return Err(Error::data(format!("{name} contains NaN")));
            }
        }
        Ok(())
    }
}

fn add_row(m: &mut DMatrix<f64>, row: &DMatrix<f64>) {
    for mut r in m.row_iter_mut() {
        r += row;
    }
}

fn col_sums(m: &DMatrix<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(1, m.ncols(), |_, c| m.column(c).sum())
}

struct Norm {
    xhat: DMatrix<f64>,
    inv_std: Vec<f64>,
    out: DMatrix<f64>,
}

fn layer_norm(x: &DMatrix<f64>, gain: &DMatrix<f64>, bias: &DMatrix<f64>) -> Norm {
    let d = x.ncols() as f64;
    let mut xhat = x.clone();
    let mut inv_std = Vec::with_capacity(x.nrows());
    for mut r in xhat.row_iter_mut() {
        let mean = r.sum() / d;
        let var = r.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / d;
        let s = 1.0 / (var + LN_EPS).sqrt();
        r.apply(|v| *v = (*v - mean) * s);
        inv_std.push(s);
    }
    let mut out = xhat.clone();
    for mut r in out.row_iter_mut() {
        r.component_mul_assign(gain);
        r += bias;
    }
    Norm { xhat, inv_std, out }
}

/// Returns `dx` and accumulates gain / bias gradients.
fn layer_norm_backward(
    n: &Norm,
    gain: &DMatrix<f64>,
    dout: &DMatrix<f64>,
    dgain: &mut DMatrix<f64>,
    dbias: &mut DMatrix<f64>,
) -> DMatrix<f64> {
    *dgain += col_sums(&dout.component_mul(&n.xhat));
    *dbias += col_sums(dout);
    let d = dout.ncols() as f64;
    let mut dx = DMatrix::zeros(dout.nrows(), dout.ncols());
    for t in 0..dout.nrows() {
        let dxhat = dout.row(t).component_mul(gain);
        let xhat = n.xhat.row(t);
        let m1 = dxhat.sum() / d;
        let m2 = dxhat.dot(&xhat) / d;
        for c in 0..dout.ncols() {
            dx[(t, c)] = n.inv_std[t] * (dxhat[c] - m1 - xhat[c] * m2);
        }
    }
    dx
}

fn gelu(u: f64) -> f64 {
    let k = (2.0 / std::f64::consts::PI).sqrt();
    0.5 * u * (1.0 + (k * (u + GELU_C * u * u * u)).tanh())
}

fn gelu_grad(u: f64) -> f64 {
    let k = (2.0 / std::f64::consts::PI).sqrt();
    let t = (k * (u + GELU_C * u * u * u)).tanh();
    0.5 * (1.0 + t) + 0.5 * u * (1.0 - t * t) * k * (1.0 + 3.0 * GELU_C * u * u)
}

fn softmax_rows(s: &mut DMatrix<f64>) {
    for mut r in s.row_iter_mut() {
        let m = r.max();
        r.apply(|v| *v = (*v - m).exp());
        let z = r.sum();
        r /= z;
    }
}

struct Cache {
    n1: Norm,
    q: DMatrix<f64>,
    k: DMatrix<f64>,
    v: DMatrix<f64>,
    attn: DMatrix<f64>,
    ctx: DMatrix<f64>,
    n2: Norm,
    u: DMatrix<f64>,
    g: DMatrix<f64>,
    out: DMatrix<f64>,
}

fn forward_cached(x: &DMatrix<f64>, w: &BlockWeights) -> Result<Cache> {
    w.validate()?;
    if x.ncols() != w.dim() {
        return Err(Error::shape(format!("tokens have width {}, block expects {}", x.ncols(), w.dim())));
    }
    if x.nrows() == 0 {
        return Err(Error::shape("empty token sequence"));
    }
    if x.iter().any(|v| v.is_nan()) {
        return Err(Error::data("token matrix contains NaN"));
    }
    let scale = 1.0 / (w.dim() as f64).sqrt();
    let n1 = layer_norm(x, &w.ln1_gain, &w.ln1_bias);
    let mut q = &n1.out * &w.wq;
    add_row(&mut q, &w.bq);
    let mut k = &n1.out * &w.wk;
    add_row(&mut k, &w.bk);
    let mut v = &n1.out * &w.wv;
    add_row(&mut v, &w.bv);
    let mut attn = (&q * k.transpose()) * scale;
    softmax_rows(&mut attn);
    let ctx = &attn * &v;
    let mut y = x + &ctx * &w.wo;
    add_row(&mut y, &w.bo);
    let n2 = layer_norm(&y, &w.ln2_gain, &w.ln2_bias);
    let mut u = &n2.out * &w.w1;
    add_row(&mut u, &w.b1);
    let g = u.map(gelu);
    let mut out = &y + &g * &w.w2;
    add_row(&mut out, &w.b2);
    Ok(Cache { n1, q, k, v, attn, ctx, n2, u, g, out })
}

pub fn encoder_block_forward(x: &DMatrix<f64>, w: &BlockWeights) -> Result<DMatrix<f64>> {
    Ok(forward_cached(x, w)?.out)
}

/// Row-stochastic attention matrix of the block for input `x`.
pub fn encoder_block_attention(x: &DMatrix<f64>, w: &BlockWeights) -> Result<DMatrix<f64>> {
    Ok(forward_cached(x, w)?.attn)
}

/// Gradients of `sum(dout ⊙ forward(x))` with respect to every weight and to `x`.
pub fn encoder_block_backward(
    x: &DMatrix<f64>,
    w: &BlockWeights,
    dout: &DMatrix<f64>,
) -> Result<(BlockWeights, DMatrix<f64>)> {
    let c = forward_cached(x, w)?;
    if dout.shape() != c.out.shape() {
        return Err(Error::shape(format!("upstream gradient is {:?}, output is {:?}", dout.shape(), c.out.shape())));
    }
    let (d, h) = (w.dim(), w.hidden());
    let mut gr = BlockWeights::zeros(d, h);
    gr.ln1_gain.fill(0.0);
    gr.ln2_gain.fill(0.0);

    // MLP branch.
    gr.w2 = c.g.transpose() * dout;
    gr.b2 = col_sums(dout);
    let mut du = dout * w.w2.transpose();
    du.zip_apply(&c.u, |g, u| *g *= gelu_grad(u));
    gr.w1 = c.n2.out.transpose() * &du;
    gr.b1 = col_sums(&du);
    let dh2 = &du * w.w1.transpose();
    let dy = dout + layer_norm_backward(&c.n2, &w.ln2_gain, &dh2, &mut gr.ln2_gain, &mut gr.ln2_bias);

    // Attention branch.
    gr.wo = c.ctx.transpose() * &dy;
    gr.bo = col_sums(&dy);
    let dctx = &dy * w.wo.transpose();
    let dattn = &dctx * c.v.transpose();
    let dv = c.attn.transpose() * &dctx;
    let scale = 1.0 / (d as f64).sqrt();
    let mut ds = DMatrix::zeros(c.attn.nrows(), c.attn.ncols());
    for t in 0..ds.nrows() {
        let a = c.attn.row(t);
        let inner = a.dot(&dattn.row(t));
        for s in 0..ds.ncols() {
            ds[(t, s)] = a[s] * (dattn[(t, s)] - inner) * scale;
        }
    }
    let dq = &ds * &c.k;
    let dk = ds.transpose() * &c.q;
    let h1t = c.n1.out.transpose();
    gr.wq = &h1t * &dq;
    gr.bq = col_sums(&dq);
    gr.wk = &h1t * &dk;
    gr.bk = col_sums(&dk);
    gr.wv = &h1t * &dv;
    gr.bv = col_sums(&dv);
    let dh1 = &dq * w.wq.transpose() + &dk * w.wk.transpose() + &dv * w.wv.transpose();
    let dx = &dy + layer_norm_backward(&c.n1, &w.ln1_gain, &dh1, &mut gr.ln1_gain, &mut gr.ln1_bias);
    Ok((gr, dx))
}

/// Relative error between an analytic and a numeric derivative. Pairs whose
/// magnitudes are both below `floor` count as agreeing to within `|a - n|`.
pub fn relative_error(analytic: f64, numeric: f64, floor: f64) -> f64 {
    let scale = analytic.abs().max(numeric.abs()).max(floor);
    (analytic - numeric).abs() / scale
}

/// Per-tensor worst relative error of the hand-derived gradient of
/// `sum(forward(x))` against central differences with step `h`.
pub fn gradient_check(x: &DMatrix<f64>, w: &BlockWeights, h: f64) -> Result<Vec<(&'static str, f64)>> {
    let ones = DMatrix::from_element(x.nrows(), x.ncols(), 1.0);
    let (grads, _) = encoder_block_backward(x, w, &ones)?;
    let mut report = Vec::with_capacity(16);
    for (idx, (name, g)) in grads.tensors().into_iter().enumerate() {
        let mut worst = 0.0f64;
        for e in 0..g.len() {
            let eval = |delta: f64| -> Result<f64> {
                let mut wp = w.clone();
                wp.tensors_mut()[idx].1.as_mut_slice()[e] += delta;
                Ok(encoder_block_forward(x, &wp)?.sum())
            };
            let numeric = (eval(h)? - eval(-h)?) / (2.0 * h);
            worst = worst.max(relative_error(g.as_slice()[e], numeric, 1e-6));
        }
        report.push((name, worst));
    }
    Ok(report)
}
