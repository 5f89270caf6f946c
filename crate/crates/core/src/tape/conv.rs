//! Batched 2-d convolution, pooling, upsampling and batch norm.
//!
//! Layout is `[N, C, H, W]`. Convolution is stride-1 with explicit
//! padding and is evaluated per sample through im2col + matmul; the
//! column matrix is rebuilt in the backward pass instead of being kept.

use ndarray::{Array1, Array2, Array4, ArrayD, Ix1, Ix4};

use super::{Tape, Var};
use crate::scalar::Scalar;

fn as4<T: Scalar>(a: &ArrayD<T>) -> ndarray::ArrayView4<'_, T> {
    a.view().into_dimensionality::<Ix4>().expect("4-d node")
}

fn im2col<T: Scalar>(
    x: &ndarray::ArrayView3<'_, T>,
    kh: usize,
    kw: usize,
    ph: usize,
    pw: usize,
    oh: usize,
    ow: usize,
) -> Array2<T> {
    let (c_in, h, w) = x.dim();
    let mut col = Array2::<T>::zeros((c_in * kh * kw, oh * ow));
    for c in 0..c_in {
        for ki in 0..kh {
            for kj in 0..kw {
                let row = (c * kh + ki) * kw + kj;
                for oi in 0..oh {
                    let ii = (oi + ki) as isize - ph as isize;
                    if ii < 0 || ii as usize >= h {
                        continue;
                    }
                    for oj in 0..ow {
                        let jj = (oj + kj) as isize - pw as isize;
                        if jj < 0 || jj as usize >= w {
                            continue;
                        }
                        col[(row, oi * ow + oj)] = x[(c, ii as usize, jj as usize)];
                    }
                }
            }
        }
    }
    col
}

fn col2im_add<T: Scalar>(
    dcol: &Array2<T>,
    dx: &mut ndarray::ArrayViewMut3<'_, T>,
    kh: usize,
    kw: usize,
    ph: usize,
    pw: usize,
    oh: usize,
    ow: usize,
) {
    let (c_in, h, w) = dx.dim();
    for c in 0..c_in {
        for ki in 0..kh {
            for kj in 0..kw {
                let row = (c * kh + ki) * kw + kj;
                for oi in 0..oh {
                    let ii = (oi + ki) as isize - ph as isize;
                    if ii < 0 || ii as usize >= h {
                        continue;
                    }
                    for oj in 0..ow {
                        let jj = (oj + kj) as isize - pw as isize;
                        if jj < 0 || jj as usize >= w {
                            continue;
                        }
                        dx[(c, ii as usize, jj as usize)] += dcol[(row, oi * ow + oj)];
                    }
                }
            }
        }
    }
}

impl<T: Scalar> Tape<T> {
    /// Stride-1 convolution: `x [N,Cin,H,W]`, `w [Cout,Cin,kh,kw]`, `b [Cout]`.
    pub fn conv2d(&mut self, x: Var, w: Var, b: Var, pad: (usize, usize)) -> Var {
        let xv = self.value(x).clone();
        let wv = self.value(w).clone();
        let bv = self.value(b).clone();
        let x4 = as4(&xv);
        let w4 = wv.view().into_dimensionality::<Ix4>().expect("4-d weight");
        let (n, c_in, h, w_in) = x4.dim();
        let (c_out, c_in_w, kh, kw) = w4.dim();
        assert_eq!(c_in, c_in_w, "conv channel mismatch");
        assert_eq!(self.shape(b), [c_out]);
        let (ph, pw) = pad;
        let oh = h + 2 * ph + 1 - kh;
        let ow = w_in + 2 * pw + 1 - kw;
        let wmat = Array2::from_shape_vec((c_out, c_in * kh * kw), w4.iter().copied().collect())
            .unwrap();
        let b1 = bv.view().into_dimensionality::<Ix1>().unwrap().to_owned();

        let mut out = Array4::<T>::zeros((n, c_out, oh, ow));
        for s in 0..n {
            let col = im2col(&x4.index_axis(ndarray::Axis(0), s), kh, kw, ph, pw, oh, ow);
            let y = wmat.dot(&col);
            let mut dst = out.index_axis_mut(ndarray::Axis(0), s);
            for co in 0..c_out {
                for oi in 0..oh {
                    for oj in 0..ow {
                        dst[(co, oi, oj)] = y[(co, oi * ow + oj)] + b1[co];
                    }
                }
            }
        }

        self.derived(&[x, w, b], out.into_dyn(), move |g, sink| {
            let g4 = as4(g);
            let x4 = as4(&xv);
            let mut dwmat = Array2::<T>::zeros((c_out, c_in * kh * kw));
            let mut db = Array1::<T>::zeros(c_out);
            let mut dx = Array4::<T>::zeros((n, c_in, h, w_in));
            for s in 0..n {
                let gs = g4.index_axis(ndarray::Axis(0), s);
                let mut gmat = Array2::<T>::zeros((c_out, oh * ow));
                for co in 0..c_out {
                    for oi in 0..oh {
                        for oj in 0..ow {
                            let v = gs[(co, oi, oj)];
                            gmat[(co, oi * ow + oj)] = v;
                            db[co] += v;
                        }
                    }
                }
                let col = im2col(&x4.index_axis(ndarray::Axis(0), s), kh, kw, ph, pw, oh, ow);
                dwmat += &gmat.dot(&col.t());
                let dcol = wmat.t().dot(&gmat);
                col2im_add(
                    &dcol,
                    &mut dx.index_axis_mut(ndarray::Axis(0), s),
                    kh,
                    kw,
                    ph,
                    pw,
                    oh,
                    ow,
                );
            }
            let dw = ArrayD::from_shape_vec(
                ndarray::IxDyn(&[c_out, c_in, kh, kw]),
                dwmat.iter().copied().collect(),
            )
            .unwrap();
            sink.add(x, dx.into_dyn());
            sink.add(w, dw);
            sink.add(b, db.into_dyn());
        })
    }

    /// 2x2 max pooling with stride 2. Spatial dims must be even.
    pub fn max_pool2x2(&mut self, x: Var) -> Var {
        let xv = self.value(x).clone();
        let x4 = as4(&xv);
        let (n, c, h, w) = x4.dim();
        assert!(h % 2 == 0 && w % 2 == 0, "pool input must have even dims, got {h}x{w}");
        let (oh, ow) = (h / 2, w / 2);
        let mut out = Array4::<T>::zeros((n, c, oh, ow));
        let mut arg = vec![0u8; n * c * oh * ow];
        for s in 0..n {
            for ch in 0..c {
                for oi in 0..oh {
                    for oj in 0..ow {
                        let mut best = T::neg_infinity();
                        let mut code = 0u8;
                        for di in 0..2 {
                            for dj in 0..2 {
                                let v = x4[(s, ch, 2 * oi + di, 2 * oj + dj)];
                                if v > best {
                                    best = v;
                                    code = (di * 2 + dj) as u8;
                                }
                            }
                        }
                        out[(s, ch, oi, oj)] = best;
                        arg[((s * c + ch) * oh + oi) * ow + oj] = code;
                    }
                }
            }
        }
        self.derived(&[x], out.into_dyn(), move |g, sink| {
            let g4 = as4(g);
            let mut dx = Array4::<T>::zeros((n, c, h, w));
            for s in 0..n {
                for ch in 0..c {
                    for oi in 0..oh {
                        for oj in 0..ow {
                            let code = arg[((s * c + ch) * oh + oi) * ow + oj] as usize;
                            let (di, dj) = (code / 2, code % 2);
                            dx[(s, ch, 2 * oi + di, 2 * oj + dj)] += g4[(s, ch, oi, oj)];
                        }
                    }
                }
            }
            sink.add(x, dx.into_dyn());
        })
    }

    /// Nearest-neighbor 2x upsampling.
    pub fn upsample2x(&mut self, x: Var) -> Var {
        let xv = self.value(x).clone();
        let x4 = as4(&xv);
        let (n, c, h, w) = x4.dim();
        let mut out = Array4::<T>::zeros((n, c, 2 * h, 2 * w));
        for s in 0..n {
            for ch in 0..c {
                for i in 0..h {
                    for j in 0..w {
                        let v = x4[(s, ch, i, j)];
                        for di in 0..2 {
                            for dj in 0..2 {
                                out[(s, ch, 2 * i + di, 2 * j + dj)] = v;
                            }
                        }
                    }
                }
            }
        }
        self.derived(&[x], out.into_dyn(), move |g, sink| {
            let g4 = as4(g);
            let mut dx = Array4::<T>::zeros((n, c, h, w));
            for s in 0..n {
                for ch in 0..c {
                    for i in 0..h {
                        for j in 0..w {
                            let mut acc = T::zero();
                            for di in 0..2 {
                                for dj in 0..2 {
                                    acc += g4[(s, ch, 2 * i + di, 2 * j + dj)];
                                }
                            }
                            dx[(s, ch, i, j)] = acc;
                        }
                    }
                }
            }
            sink.add(x, dx.into_dyn());
        })
    }

    /// Channel-wise batch normalization. `mean`/`var` are the statistics to
    /// normalize with; when `batch_stats` is true they are treated as
    /// functions of `x` (training mode) in the backward pass.
    pub fn batch_norm(
        &mut self,
        x: Var,
        gamma: Var,
        beta: Var,
        mean: &Array1<T>,
        var: &Array1<T>,
        batch_stats: bool,
        eps: T,
    ) -> Var {
        let xv = self.value(x).clone();
        let x4 = as4(&xv);
        let (n, c, h, w) = x4.dim();
        assert_eq!(mean.len(), c);
        assert_eq!(var.len(), c);
        let g1 = self.value(gamma).view().into_dimensionality::<Ix1>().unwrap().to_owned();
        let mut inv_std = Array1::<T>::zeros(c);
        for ch in 0..c {
            inv_std[ch] = T::one() / (var[ch] + eps).sqrt();
        }
        let mut xhat = Array4::<T>::zeros((n, c, h, w));
        let mut out = Array4::<T>::zeros((n, c, h, w));
        {
            let b1 = self.value(beta).view().into_dimensionality::<Ix1>().unwrap();
            for s in 0..n {
                for ch in 0..c {
                    for i in 0..h {
                        for j in 0..w {
                            let xh = (x4[(s, ch, i, j)] - mean[ch]) * inv_std[ch];
                            xhat[(s, ch, i, j)] = xh;
                            out[(s, ch, i, j)] = g1[ch] * xh + b1[ch];
                        }
                    }
                }
            }
        }
        let m = T::of((n * h * w) as f64);
        self.derived(&[x, gamma, beta], out.into_dyn(), move |g, sink| {
            let g4 = as4(g);
            let mut dgamma = Array1::<T>::zeros(c);
            let mut dbeta = Array1::<T>::zeros(c);
            let mut dx = Array4::<T>::zeros((n, c, h, w));
            for ch in 0..c {
                let mut sum_g = T::zero();
                let mut sum_gx = T::zero();
                for s in 0..n {
                    for i in 0..h {
                        for j in 0..w {
                            let go = g4[(s, ch, i, j)];
                            sum_g += go;
                            sum_gx += go * xhat[(s, ch, i, j)];
                        }
                    }
                }
                dgamma[ch] = sum_gx;
                dbeta[ch] = sum_g;
                let k = g1[ch] * inv_std[ch];
                if batch_stats {
                    let m1 = sum_g / m;
                    let m2 = sum_gx / m;
                    for s in 0..n {
                        for i in 0..h {
                            for j in 0..w {
                                let go = g4[(s, ch, i, j)];
                                dx[(s, ch, i, j)] = k * (go - m1 - xhat[(s, ch, i, j)] * m2);
                            }
                        }
                    }
                } else {
                    for s in 0..n {
                        for i in 0..h {
                            for j in 0..w {
                                dx[(s, ch, i, j)] = k * g4[(s, ch, i, j)];
                            }
                        }
                    }
                }
            }
            sink.add(x, dx.into_dyn());
            sink.add(gamma, dgamma.into_dyn());
            sink.add(beta, dbeta.into_dyn());
        })
    }

    /// Extract per-frame features of one sample: column `j` of
    /// `x[sample, :, :, :]` becomes row `j`, flattened as `c * H + h`.
    /// Only the first `frames` columns are taken.
    pub fn sample_frames(&mut self, x: Var, sample: usize, frames: usize) -> Var {
        let xv = self.value(x);
        let x4 = as4(xv);
        let (n, c, h, w) = x4.dim();
        assert!(sample < n && frames <= w);
        let mut out = Array2::<T>::zeros((frames, c * h));
        for j in 0..frames {
            for ch in 0..c {
                for i in 0..h {
                    out[(j, ch * h + i)] = x4[(sample, ch, i, j)];
                }
            }
        }
        self.derived(&[x], out.into_dyn(), move |g, sink| {
            let g2 = g.view().into_dimensionality::<ndarray::Ix2>().unwrap();
            let mut dx = Array4::<T>::zeros((n, c, h, w));
            for j in 0..frames {
                for ch in 0..c {
                    for i in 0..h {
                        dx[(sample, ch, i, j)] = g2[(j, ch * h + i)];
                    }
                }
            }
            sink.add(x, dx.into_dyn());
        })
    }

    /// Inverse of [`Tape::sample_frames`] for a single-sample batch: rows of
    /// `frames [L, C*H]` become columns of a `[1, C, H, L]` block.
    pub fn frames_to_chw(&mut self, frames: Var, c: usize, h: usize) -> Var {
        let fv = self.value(frames);
        let f2 = fv.view().into_dimensionality::<ndarray::Ix2>().unwrap();
        let (l, d) = f2.dim();
        assert_eq!(d, c * h, "frame width must equal C*H");
        let mut out = Array4::<T>::zeros((1, c, h, l));
        for j in 0..l {
            for ch in 0..c {
                for i in 0..h {
                    out[(0, ch, i, j)] = f2[(j, ch * h + i)];
                }
            }
        }
        self.derived(&[frames], out.into_dyn(), move |g, sink| {
            let g4 = as4(g);
            let mut df = Array2::<T>::zeros((l, d));
            for j in 0..l {
                for ch in 0..c {
                    for i in 0..h {
                        df[(j, ch * h + i)] = g4[(0, ch, i, j)];
                    }
                }
            }
            sink.add(frames, df.into_dyn());
        })
    }
}
