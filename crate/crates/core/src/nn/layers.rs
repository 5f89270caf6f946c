use ndarray::{Array1, Ix1, Ix4};
use rand::Rng;

use super::init;
use super::params::{Ctx, ParamId, ParamKind, ParamStore};
use crate::scalar::Scalar;
use crate::tape::Var;

/// Affine map on `[N, in] -> [N, out]`.
pub struct Linear {
    pub w: ParamId,
    pub b: ParamId,
    pub in_dim: usize,
    pub out_dim: usize,
}

impl Linear {
    pub fn new<T: Scalar, R: Rng>(
        store: &mut ParamStore<T>,
        rng: &mut R,
        name: &str,
        in_dim: usize,
        out_dim: usize,
    ) -> Self {
        let w = store.register(
            format!("{name}.w"),
            init::trunc_normal(rng, &[in_dim, out_dim], 0.02),
            ParamKind::Trainable,
        );
        let b = store.register(format!("{name}.b"), init::zeros(&[out_dim]), ParamKind::Trainable);
        Linear { w, b, in_dim, out_dim }
    }

    pub fn forward<T: Scalar>(&self, ctx: &mut Ctx<'_, T>, x: Var) -> Var {
        let w = ctx.param(self.w);
        let b = ctx.param(self.b);
        let y = ctx.tape.matmul(x, w);
        ctx.tape.add_row(y, b)
    }

    pub fn params(&self) -> Vec<ParamId> {
        vec![self.w, self.b]
    }
}

/// Stack of affine maps with GELU between them (none after the last).
pub struct Mlp {
    pub layers: Vec<Linear>,
}

impl Mlp {
    /// `dims` lists every width including input and output:
    /// `[in, h1, .., out]`.
    pub fn new<T: Scalar, R: Rng>(
        store: &mut ParamStore<T>,
        rng: &mut R,
        name: &str,
        dims: &[usize],
    ) -> Self {
        assert!(dims.len() >= 2, "mlp needs at least input and output widths");
        let layers = (0..dims.len() - 1)
            .map(|i| Linear::new(store, rng, &format!("{name}.{i}"), dims[i], dims[i + 1]))
            .collect();
        Mlp { layers }
    }

    pub fn forward<T: Scalar>(&self, ctx: &mut Ctx<'_, T>, x: Var) -> Var {
        let mut h = x;
        for (i, layer) in self.layers.iter().enumerate() {
            h = layer.forward(ctx, h);
            if i + 1 < self.layers.len() {
                h = ctx.tape.gelu(h);
            }
        }
        h
    }

    pub fn params(&self) -> Vec<ParamId> {
        self.layers.iter().flat_map(|l| l.params()).collect()
    }
}

/// Stride-1 convolution on `[N, C, H, W]`.
pub struct Conv2d {
    pub w: ParamId,
    pub b: ParamId,
    pub pad: (usize, usize),
}

impl Conv2d {
    pub fn new<T: Scalar, R: Rng>(
        store: &mut ParamStore<T>,
        rng: &mut R,
        name: &str,
        in_ch: usize,
        out_ch: usize,
        kernel: (usize, usize),
        pad: (usize, usize),
    ) -> Self {
        let fan_in = in_ch * kernel.0 * kernel.1;
        let w = store.register(
            format!("{name}.w"),
            init::he_normal(rng, &[out_ch, in_ch, kernel.0, kernel.1], fan_in),
            ParamKind::Trainable,
        );
        let b = store.register(format!("{name}.b"), init::zeros(&[out_ch]), ParamKind::Trainable);
        Conv2d { w, b, pad }
    }

    pub fn forward<T: Scalar>(&self, ctx: &mut Ctx<'_, T>, x: Var) -> Var {
        let w = ctx.param(self.w);
        let b = ctx.param(self.b);
        ctx.tape.conv2d(x, w, b, self.pad)
    }

    pub fn params(&self) -> Vec<ParamId> {
        vec![self.w, self.b]
    }
}

/// Channel batch norm with running statistics (momentum 0.1).
pub struct BatchNorm2d {
    pub gamma: ParamId,
    pub beta: ParamId,
    pub running_mean: ParamId,
    pub running_var: ParamId,
    pub momentum: f64,
    pub eps: f64,
}

impl BatchNorm2d {
    pub fn new<T: Scalar>(store: &mut ParamStore<T>, name: &str, channels: usize) -> Self {
        BatchNorm2d {
            gamma: store.register(format!("{name}.gamma"), init::ones(&[channels]), ParamKind::Trainable),
            beta: store.register(format!("{name}.beta"), init::zeros(&[channels]), ParamKind::Trainable),
            running_mean: store.register(
                format!("{name}.running_mean"),
                init::zeros(&[channels]),
                ParamKind::Buffer,
            ),
            running_var: store.register(
                format!("{name}.running_var"),
                init::ones(&[channels]),
                ParamKind::Buffer,
            ),
            momentum: 0.1,
            eps: 1e-5,
        }
    }

    pub fn forward<T: Scalar>(&self, ctx: &mut Ctx<'_, T>, x: Var) -> Var {
        let gamma = ctx.param(self.gamma);
        let beta = ctx.param(self.beta);
        let eps = T::of(self.eps);
        if ctx.training {
            let (mean, var, count) = {
                let x4 = ctx.tape.value(x).view().into_dimensionality::<Ix4>().expect("4-d input");
                let (n, c, h, w) = x4.dim();
                let m = T::of((n * h * w) as f64);
                let mut mean = Array1::<T>::zeros(c);
                let mut var = Array1::<T>::zeros(c);
                for ch in 0..c {
                    let mut acc = T::zero();
                    for s in 0..n {
                        for i in 0..h {
                            for j in 0..w {
                                acc += x4[(s, ch, i, j)];
                            }
                        }
                    }
                    mean[ch] = acc / m;
                    let mut v = T::zero();
                    for s in 0..n {
                        for i in 0..h {
                            for j in 0..w {
                                let d = x4[(s, ch, i, j)] - mean[ch];
                                v += d * d;
                            }
                        }
                    }
                    var[ch] = v / m;
                }
                (mean, var, n * h * w)
            };
            self.update_running(ctx.store, &mean, &var, count);
            ctx.tape.batch_norm(x, gamma, beta, &mean, &var, true, eps)
        } else {
            let mean = to1(ctx.store.value(self.running_mean));
            let var = to1(ctx.store.value(self.running_var));
            ctx.tape.batch_norm(x, gamma, beta, &mean, &var, false, eps)
        }
    }

    fn update_running<T: Scalar>(
        &self,
        store: &mut ParamStore<T>,
        mean: &Array1<T>,
        var: &Array1<T>,
        count: usize,
    ) {
        let m = T::of(self.momentum);
        let keep = T::one() - m;
        // Running variance tracks the unbiased estimate.
        let unbias = if count > 1 {
            T::of(count as f64 / (count as f64 - 1.0))
        } else {
            T::one()
        };
        {
            let rm = store.value_mut(self.running_mean);
            for (r, b) in rm.iter_mut().zip(mean.iter()) {
                *r = keep * *r + m * *b;
            }
        }
        let rv = store.value_mut(self.running_var);
        for (r, b) in rv.iter_mut().zip(var.iter()) {
            *r = keep * *r + m * *b * unbias;
        }
    }

    pub fn params(&self) -> Vec<ParamId> {
        vec![self.gamma, self.beta, self.running_mean, self.running_var]
    }
}

fn to1<T: Scalar>(a: &ndarray::ArrayD<T>) -> Array1<T> {
    a.view().into_dimensionality::<Ix1>().expect("1-d buffer").to_owned()
}

/// Row-wise layer norm with learned scale and shift.
pub struct LayerNorm {
    pub gamma: ParamId,
    pub beta: ParamId,
    pub eps: f64,
}

impl LayerNorm {
    pub fn new<T: Scalar>(store: &mut ParamStore<T>, name: &str, dim: usize) -> Self {
        LayerNorm {
            gamma: store.register(format!("{name}.gamma"), init::ones(&[dim]), ParamKind::Trainable),
            beta: store.register(format!("{name}.beta"), init::zeros(&[dim]), ParamKind::Trainable),
            eps: 1e-5,
        }
    }

    pub fn forward<T: Scalar>(&self, ctx: &mut Ctx<'_, T>, x: Var) -> Var {
        let gamma = ctx.param(self.gamma);
        let beta = ctx.param(self.beta);
        ctx.tape.layer_norm(x, gamma, beta, T::of(self.eps))
    }

    pub fn params(&self) -> Vec<ParamId> {
        vec![self.gamma, self.beta]
    }
}

/// Standard multi-head self-attention over a `[L, dim]` sequence.
pub struct MultiHeadAttention {
    pub q: Linear,
    pub k: Linear,
    pub v: Linear,
    pub o: Linear,
    pub heads: usize,
}

impl MultiHeadAttention {
    pub fn new<T: Scalar, R: Rng>(
        store: &mut ParamStore<T>,
        rng: &mut R,
        name: &str,
        dim: usize,
        heads: usize,
    ) -> Self {
        assert!(dim % heads == 0, "dim {dim} not divisible by heads {heads}");
        MultiHeadAttention {
            q: Linear::new(store, rng, &format!("{name}.q"), dim, dim),
            k: Linear::new(store, rng, &format!("{name}.k"), dim, dim),
            v: Linear::new(store, rng, &format!("{name}.v"), dim, dim),
            o: Linear::new(store, rng, &format!("{name}.o"), dim, dim),
            heads,
        }
    }

    pub fn forward<T: Scalar>(&self, ctx: &mut Ctx<'_, T>, x: Var) -> Var {
        let dim = self.q.out_dim;
        let dh = dim / self.heads;
        let scale = T::of(1.0 / (dh as f64).sqrt());
        let q = self.q.forward(ctx, x);
        let k = self.k.forward(ctx, x);
        let v = self.v.forward(ctx, x);
        let mut outs = Vec::with_capacity(self.heads);
        for h in 0..self.heads {
            let (from, to) = (h * dh, (h + 1) * dh);
            let qh = ctx.tape.slice_cols(q, from, to);
            let kh = ctx.tape.slice_cols(k, from, to);
            let vh = ctx.tape.slice_cols(v, from, to);
            let kt = ctx.tape.transpose(kh);
            let scores = ctx.tape.matmul(qh, kt);
            let scores = ctx.tape.scale(scores, scale);
            let attn = ctx.tape.softmax_rows(scores);
            outs.push(ctx.tape.matmul(attn, vh));
        }
        let cat = ctx.tape.concat_cols(&outs);
        self.o.forward(ctx, cat)
    }

    pub fn params(&self) -> Vec<ParamId> {
        [&self.q, &self.k, &self.v, &self.o].iter().flat_map(|l| l.params()).collect()
    }
}

/// Pre-norm Transformer encoder block.
pub struct TransformerBlock {
    pub ln1: LayerNorm,
    pub attn: MultiHeadAttention,
    pub ln2: LayerNorm,
    pub mlp: Mlp,
}

impl TransformerBlock {
    pub fn new<T: Scalar, R: Rng>(
        store: &mut ParamStore<T>,
        rng: &mut R,
        name: &str,
        dim: usize,
        heads: usize,
        mlp_ratio: usize,
    ) -> Self {
        TransformerBlock {
            ln1: LayerNorm::new(store, &format!("{name}.ln1"), dim),
            attn: MultiHeadAttention::new(store, rng, &format!("{name}.attn"), dim, heads),
            ln2: LayerNorm::new(store, &format!("{name}.ln2"), dim),
            mlp: Mlp::new(store, rng, &format!("{name}.mlp"), &[dim, dim * mlp_ratio, dim]),
        }
    }

    pub fn forward<T: Scalar>(&self, ctx: &mut Ctx<'_, T>, x: Var) -> Var {
        let h = self.ln1.forward(ctx, x);
        let a = self.attn.forward(ctx, h);
        let x = ctx.tape.add(x, a);
        let h = self.ln2.forward(ctx, x);
        let m = self.mlp.forward(ctx, h);
        ctx.tape.add(x, m)
    }

    pub fn params(&self) -> Vec<ParamId> {
        let mut p = self.ln1.params();
        p.extend(self.attn.params());
        p.extend(self.ln2.params());
        p.extend(self.mlp.params());
        p
    }
}

/// Per-frame output head: either a single affine map or a GELU MLP.
pub enum Head {
    Linear(Linear),
    Mlp(Mlp),
}

impl Head {
    pub fn forward<T: Scalar>(&self, ctx: &mut Ctx<'_, T>, x: Var) -> Var {
        match self {
            Head::Linear(l) => l.forward(ctx, x),
            Head::Mlp(m) => m.forward(ctx, x),
        }
    }

    pub fn params(&self) -> Vec<ParamId> {
        match self {
            Head::Linear(l) => l.params(),
            Head::Mlp(m) => m.params(),
        }
    }

    pub fn output_size(&self) -> usize {
        match self {
            Head::Linear(l) => l.out_dim,
            Head::Mlp(m) => m.layers.last().expect("nonempty mlp").out_dim,
        }
    }
}
