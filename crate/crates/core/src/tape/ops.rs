//! Elementwise, shape, reduction and matrix ops for the tape.

use ndarray::{Array1, Array2, ArrayD, Axis, Ix2, IxDyn};

use super::{Tape, Var};
use crate::scalar::Scalar;

fn as2<T: Scalar>(a: &ArrayD<T>) -> ndarray::ArrayView2<'_, T> {
    a.view().into_dimensionality::<Ix2>().expect("2-d node")
}

/// Reshape that tolerates non-standard layouts.
fn reshaped<T: Scalar>(a: &ArrayD<T>, shape: &[usize]) -> ArrayD<T> {
    let flat: Vec<T> = a.iter().copied().collect();
    ArrayD::from_shape_vec(IxDyn(shape), flat).expect("element count preserved")
}

impl<T: Scalar> Tape<T> {
    pub fn add(&mut self, a: Var, b: Var) -> Var {
        assert_eq!(self.shape(a), self.shape(b), "add shape mismatch");
        let value = self.value(a) + self.value(b);
        self.derived(&[a, b], value, move |g, sink| {
            sink.add(a, g.clone());
            sink.add(b, g.clone());
        })
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Var {
        assert_eq!(self.shape(a), self.shape(b), "sub shape mismatch");
        let value = self.value(a) - self.value(b);
        self.derived(&[a, b], value, move |g, sink| {
            sink.add(a, g.clone());
            sink.add(b, g.mapv(|x| -x));
        })
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        assert_eq!(self.shape(a), self.shape(b), "mul shape mismatch");
        let av = self.value(a).clone();
        let bv = self.value(b).clone();
        let value = &av * &bv;
        self.derived(&[a, b], value, move |g, sink| {
            sink.add(a, g * &bv);
            sink.add(b, g * &av);
        })
    }

    pub fn neg(&mut self, a: Var) -> Var {
        let value = self.value(a).mapv(|x| -x);
        self.derived(&[a], value, move |g, sink| sink.add(a, g.mapv(|x| -x)))
    }

    pub fn scale(&mut self, a: Var, c: T) -> Var {
        let value = self.value(a).mapv(|x| x * c);
        self.derived(&[a], value, move |g, sink| sink.add(a, g.mapv(|x| x * c)))
    }

    pub fn add_scalar(&mut self, a: Var, c: T) -> Var {
        let value = self.value(a).mapv(|x| x + c);
        self.derived(&[a], value, move |g, sink| sink.add(a, g.clone()))
    }

    /// `[N, D] + [D]` row-broadcast (bias add).
    pub fn add_row(&mut self, a: Var, b: Var) -> Var {
        let (n, d) = {
            let s = self.shape(a);
            assert_eq!(s.len(), 2);
            (s[0], s[1])
        };
        assert_eq!(self.shape(b), [d]);
        let bv = self.value(b).clone();
        let mut value = self.value(a).clone();
        {
            let b1 = bv.view().into_dimensionality::<ndarray::Ix1>().unwrap();
            let mut v2 = value.view_mut().into_dimensionality::<Ix2>().unwrap();
            for mut row in v2.rows_mut() {
                row += &b1;
            }
        }
        let _ = n;
        self.derived(&[a, b], value, move |g, sink| {
            sink.add(a, g.clone());
            sink.add(b, g.sum_axis(Axis(0)));
        })
    }

    /// `[N, D] - [D]` row-broadcast.
    pub fn sub_row(&mut self, a: Var, b: Var) -> Var {
        let neg_b = self.neg(b);
        self.add_row(a, neg_b)
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let av = self.value(a).clone();
        let value = av.mapv(|x| if x > T::zero() { x } else { T::zero() });
        self.derived(&[a], value, move |g, sink| {
            let mut dg = g.clone();
            ndarray::Zip::from(&mut dg).and(&av).for_each(|d, &x| {
                if x <= T::zero() {
                    *d = T::zero();
                }
            });
            sink.add(a, dg);
        })
    }

    /// Tanh-approximated GELU.
    pub fn gelu(&mut self, a: Var) -> Var {
        let av = self.value(a).clone();
        let c = T::of((2.0 / std::f64::consts::PI).sqrt());
        let k = T::of(0.044715);
        let half = T::of(0.5);
        let one = T::one();
        let three = T::of(3.0);
        let value = av.mapv(|x| {
            let t = (c * (x + k * x * x * x)).tanh();
            half * x * (one + t)
        });
        self.derived(&[a], value, move |g, sink| {
            let dg = ndarray::Zip::from(g).and(&av).map_collect(|&go, &x| {
                let inner = c * (x + k * x * x * x);
                let t = inner.tanh();
                let dinner = c * (one + three * k * x * x);
                let d = half * (one + t) + half * x * (one - t * t) * dinner;
                go * d
            });
            sink.add(a, dg);
        })
    }

    pub fn exp(&mut self, a: Var) -> Var {
        let value = self.value(a).mapv(|x| x.exp());
        let saved = value.clone();
        self.derived(&[a], value, move |g, sink| sink.add(a, g * &saved))
    }

    pub fn ln(&mut self, a: Var) -> Var {
        let av = self.value(a).clone();
        let value = av.mapv(|x| x.ln());
        self.derived(&[a], value, move |g, sink| sink.add(a, g / &av))
    }

    pub fn sqrt(&mut self, a: Var) -> Var {
        let value = self.value(a).mapv(|x| x.sqrt());
        let saved = value.clone();
        let two = T::of(2.0);
        self.derived(&[a], value, move |g, sink| {
            let dg = ndarray::Zip::from(g).and(&saved).map_collect(|&go, &y| go / (two * y));
            sink.add(a, dg);
        })
    }

    pub fn square(&mut self, a: Var) -> Var {
        let av = self.value(a).clone();
        let value = av.mapv(|x| x * x);
        let two = T::of(2.0);
        self.derived(&[a], value, move |g, sink| {
            let dg = ndarray::Zip::from(g).and(&av).map_collect(|&go, &x| go * two * x);
            sink.add(a, dg);
        })
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Var {
        let av = self.value(a).clone();
        let bv = self.value(b).clone();
        let (a2, b2) = (as2(&av), as2(&bv));
        assert_eq!(a2.ncols(), b2.nrows(), "matmul inner dims");
        let value = a2.dot(&b2).into_dyn();
        self.derived(&[a, b], value, move |g, sink| {
            let g2 = as2(g);
            let da = g2.dot(&as2(&bv).t()).into_dyn();
            let db = as2(&av).t().dot(&g2).into_dyn();
            sink.add(a, da);
            sink.add(b, db);
        })
    }

    pub fn transpose(&mut self, a: Var) -> Var {
        let value = as2(self.value(a)).t().to_owned().into_dyn();
        self.derived(&[a], value, move |g, sink| {
            sink.add(a, as2(g).t().to_owned().into_dyn());
        })
    }

    pub fn reshape(&mut self, a: Var, shape: &[usize]) -> Var {
        let old: Vec<usize> = self.shape(a).to_vec();
        let value = reshaped(self.value(a), shape);
        self.derived(&[a], value, move |g, sink| sink.add(a, reshaped(g, &old)))
    }

    /// Vertical concatenation of `[N_i, D]` blocks.
    pub fn concat_rows(&mut self, parts: &[Var]) -> Var {
        assert!(!parts.is_empty());
        let d = self.shape(parts[0])[1];
        let sizes: Vec<usize> = parts.iter().map(|p| self.shape(*p)[0]).collect();
        let total: usize = sizes.iter().sum();
        let mut value = Array2::<T>::zeros((total, d));
        let mut row = 0;
        for (p, &np) in parts.iter().zip(&sizes) {
            value.slice_mut(ndarray::s![row..row + np, ..]).assign(&as2(self.value(*p)));
            row += np;
        }
        let parts_owned: Vec<Var> = parts.to_vec();
        self.derived(parts, value.into_dyn(), move |g, sink| {
            let g2 = as2(g);
            let mut row = 0;
            for (p, np) in parts_owned.iter().zip(sizes) {
                sink.add(*p, g2.slice(ndarray::s![row..row + np, ..]).to_owned().into_dyn());
                row += np;
            }
        })
    }

    /// Horizontal concatenation of `[N, D_i]` blocks.
    pub fn concat_cols(&mut self, parts: &[Var]) -> Var {
        assert!(!parts.is_empty());
        let n = self.shape(parts[0])[0];
        let widths: Vec<usize> = parts.iter().map(|p| self.shape(*p)[1]).collect();
        let total: usize = widths.iter().sum();
        let mut value = Array2::<T>::zeros((n, total));
        let mut col = 0;
        for (p, &w) in parts.iter().zip(&widths) {
            value.slice_mut(ndarray::s![.., col..col + w]).assign(&as2(self.value(*p)));
            col += w;
        }
        let parts_owned: Vec<Var> = parts.to_vec();
        self.derived(parts, value.into_dyn(), move |g, sink| {
            let g2 = as2(g);
            let mut col = 0;
            for (p, w) in parts_owned.iter().zip(widths) {
                sink.add(*p, g2.slice(ndarray::s![.., col..col + w]).to_owned().into_dyn());
                col += w;
            }
        })
    }

    pub fn slice_cols(&mut self, a: Var, from: usize, to: usize) -> Var {
        let (n, d) = {
            let s = self.shape(a);
            (s[0], s[1])
        };
        assert!(from < to && to <= d);
        let value = as2(self.value(a)).slice(ndarray::s![.., from..to]).to_owned().into_dyn();
        self.derived(&[a], value, move |g, sink| {
            let mut da = Array2::<T>::zeros((n, d));
            da.slice_mut(ndarray::s![.., from..to]).assign(&as2(g));
            sink.add(a, da.into_dyn());
        })
    }

    /// Gather rows by index (duplicates allowed).
    pub fn select_rows(&mut self, a: Var, index: &[usize]) -> Var {
        let (n, d) = {
            let s = self.shape(a);
            (s[0], s[1])
        };
        let a2v = as2(self.value(a));
        let mut value = Array2::<T>::zeros((index.len(), d));
        for (i, &r) in index.iter().enumerate() {
            assert!(r < n, "row index out of range");
            value.row_mut(i).assign(&a2v.row(r));
        }
        let index_owned: Vec<usize> = index.to_vec();
        self.derived(&[a], value.into_dyn(), move |g, sink| {
            let g2 = as2(g);
            let mut da = Array2::<T>::zeros((n, d));
            for (i, &r) in index_owned.iter().enumerate() {
                let mut dst = da.row_mut(r);
                dst += &g2.row(i);
            }
            sink.add(a, da.into_dyn());
        })
    }

    /// Gather single entries of a 2-d node; result is a `[k]` vector.
    pub fn select_positions(&mut self, a: Var, index: &[(usize, usize)]) -> Var {
        let (n, d) = {
            let s = self.shape(a);
            (s[0], s[1])
        };
        let a2v = as2(self.value(a));
        let value: Array1<T> = index.iter().map(|&(r, c)| a2v[(r, c)]).collect();
        let index_owned: Vec<(usize, usize)> = index.to_vec();
        self.derived(&[a], value.into_dyn(), move |g, sink| {
            let mut da = Array2::<T>::zeros((n, d));
            for (i, &(r, c)) in index_owned.iter().enumerate() {
                da[(r, c)] += g[i];
            }
            sink.add(a, da.into_dyn());
        })
    }

    pub fn softmax_rows(&mut self, a: Var) -> Var {
        let value = softmax_value(self.value(a));
        let saved = value.clone();
        self.derived(&[a], value, move |g, sink| {
            let s2 = as2(&saved);
            let g2 = as2(g);
            let mut da = Array2::<T>::zeros(s2.raw_dim());
            for i in 0..s2.nrows() {
                let dot: T = g2.row(i).iter().zip(s2.row(i)).map(|(&gi, &si)| gi * si).sum();
                for j in 0..s2.ncols() {
                    da[(i, j)] = s2[(i, j)] * (g2[(i, j)] - dot);
                }
            }
            sink.add(a, da.into_dyn());
        })
    }

    pub fn log_softmax_rows(&mut self, a: Var) -> Var {
        let av = self.value(a);
        let sm = softmax_value(av);
        let value = {
            let a2 = as2(av);
            let mut out = Array2::<T>::zeros(a2.raw_dim());
            for i in 0..a2.nrows() {
                let row = a2.row(i);
                let max = row.iter().copied().fold(T::neg_infinity(), T::max);
                let lse: T = row.iter().map(|&x| (x - max).exp()).sum::<T>().ln() + max;
                for j in 0..a2.ncols() {
                    out[(i, j)] = a2[(i, j)] - lse;
                }
            }
            out.into_dyn()
        };
        self.derived(&[a], value, move |g, sink| {
            let s2 = as2(&sm);
            let g2 = as2(g);
            let mut da = Array2::<T>::zeros(s2.raw_dim());
            for i in 0..s2.nrows() {
                let gsum: T = g2.row(i).iter().copied().sum();
                for j in 0..s2.ncols() {
                    da[(i, j)] = g2[(i, j)] - s2[(i, j)] * gsum;
                }
            }
            sink.add(a, da.into_dyn());
        })
    }

    pub fn sum_all(&mut self, a: Var) -> Var {
        let shape: Vec<usize> = self.shape(a).to_vec();
        let total: T = self.value(a).iter().copied().sum();
        let value = ArrayD::from_elem(IxDyn(&[1]), total);
        self.derived(&[a], value, move |g, sink| {
            let gs = g[[0]];
            sink.add(a, ArrayD::from_elem(IxDyn(&shape), gs));
        })
    }

    pub fn mean_all(&mut self, a: Var) -> Var {
        let n = T::of(self.value(a).len() as f64);
        let s = self.sum_all(a);
        self.scale(s, T::one() / n)
    }

    /// Column sums of a 2-d node: `[N, D] -> [D]`.
    pub fn sum_axis0(&mut self, a: Var) -> Var {
        let n = self.shape(a)[0];
        let value = self.value(a).sum_axis(Axis(0));
        self.derived(&[a], value, move |g, sink| {
            let d = g.len();
            let g1 = g.view().into_dimensionality::<ndarray::Ix1>().unwrap();
            let mut da = Array2::<T>::zeros((n, d));
            for mut row in da.rows_mut() {
                row.assign(&g1);
            }
            sink.add(a, da.into_dyn());
        })
    }

    pub fn mean_axis0(&mut self, a: Var) -> Var {
        let n = T::of(self.shape(a)[0] as f64);
        let s = self.sum_axis0(a);
        self.scale(s, T::one() / n)
    }

    /// Row-wise l2 normalization. Rows must have nonzero norm; the caller
    /// is responsible for rejecting zero-norm inputs.
    pub fn l2_normalize_rows(&mut self, a: Var) -> Var {
        let a2 = as2(self.value(a)).to_owned();
        let mut norms = Array1::<T>::zeros(a2.nrows());
        let mut value = a2.clone();
        for (i, mut row) in value.rows_mut().into_iter().enumerate() {
            let n: T = row.iter().map(|&x| x * x).sum::<T>().sqrt();
            norms[i] = n;
            row.mapv_inplace(|x| x / n);
        }
        let y = value.clone();
        self.derived(&[a], value.into_dyn(), move |g, sink| {
            let g2 = as2(g);
            let mut da = Array2::<T>::zeros(y.raw_dim());
            for i in 0..y.nrows() {
                let yi = y.row(i);
                let gi = g2.row(i);
                let dot: T = yi.iter().zip(gi).map(|(&a, &b)| a * b).sum();
                for j in 0..y.ncols() {
                    da[(i, j)] = (gi[j] - yi[j] * dot) / norms[i];
                }
            }
            sink.add(a, da.into_dyn());
        })
    }

    /// Per-row layer normalization with affine parameters.
    pub fn layer_norm(&mut self, x: Var, gamma: Var, beta: Var, eps: T) -> Var {
        let x2 = as2(self.value(x)).to_owned();
        let (n, d) = (x2.nrows(), x2.ncols());
        assert_eq!(self.shape(gamma), [d]);
        assert_eq!(self.shape(beta), [d]);
        let gv = self.value(gamma).clone();
        let bv = self.value(beta).clone();
        let g1 = gv.view().into_dimensionality::<ndarray::Ix1>().unwrap().to_owned();
        let b1 = bv.view().into_dimensionality::<ndarray::Ix1>().unwrap().to_owned();
        let dd = T::of(d as f64);
        let mut xhat = Array2::<T>::zeros((n, d));
        let mut inv_std = Array1::<T>::zeros(n);
        let mut value = Array2::<T>::zeros((n, d));
        for i in 0..n {
            let row = x2.row(i);
            let mu: T = row.iter().copied().sum::<T>() / dd;
            let var: T = row.iter().map(|&v| (v - mu) * (v - mu)).sum::<T>() / dd;
            let istd = T::one() / (var + eps).sqrt();
            inv_std[i] = istd;
            for j in 0..d {
                let xh = (row[j] - mu) * istd;
                xhat[(i, j)] = xh;
                value[(i, j)] = g1[j] * xh + b1[j];
            }
        }
        self.derived(&[x, gamma, beta], value.into_dyn(), move |g, sink| {
            let g2 = as2(g);
            let mut dgamma = Array1::<T>::zeros(d);
            let mut dbeta = Array1::<T>::zeros(d);
            let mut dx = Array2::<T>::zeros((n, d));
            for i in 0..n {
                let mut sum_dxhat = T::zero();
                let mut sum_dxhat_xhat = T::zero();
                for j in 0..d {
                    let go = g2[(i, j)];
                    dgamma[j] += go * xhat[(i, j)];
                    dbeta[j] += go;
                    let dxhat = go * g1[j];
                    sum_dxhat += dxhat;
                    sum_dxhat_xhat += dxhat * xhat[(i, j)];
                }
                let m1 = sum_dxhat / dd;
                let m2 = sum_dxhat_xhat / dd;
                for j in 0..d {
                    let dxhat = g2[(i, j)] * g1[j];
                    dx[(i, j)] = inv_std[i] * (dxhat - m1 - xhat[(i, j)] * m2);
                }
            }
            sink.add(x, dx.into_dyn());
            sink.add(gamma, dgamma.into_dyn());
            sink.add(beta, dbeta.into_dyn());
        })
    }

    /// Value copy that blocks gradient flow.
    pub fn detach(&mut self, a: Var) -> Var {
        let value = self.value(a).clone();
        self.constant(value)
    }

    /// Emit `value` forward while passing gradients through to `src`
    /// unchanged (straight-through estimator).
    pub fn straight_through(&mut self, src: Var, value: ArrayD<T>) -> Var {
        assert_eq!(self.shape(src), value.shape(), "straight-through shape mismatch");
        self.derived(&[src], value, move |g, sink| sink.add(src, g.clone()))
    }
}

fn softmax_value<T: Scalar>(a: &ArrayD<T>) -> ArrayD<T> {
    let a2 = as2(a);
    let mut out = Array2::<T>::zeros(a2.raw_dim());
    for i in 0..a2.nrows() {
        let row = a2.row(i);
        let max = row.iter().copied().fold(T::neg_infinity(), T::max);
        let mut sum = T::zero();
        for j in 0..a2.ncols() {
            let e = (a2[(i, j)] - max).exp();
            out[(i, j)] = e;
            sum += e;
        }
        for j in 0..a2.ncols() {
            out[(i, j)] /= sum;
        }
    }
    out.into_dyn()
}
