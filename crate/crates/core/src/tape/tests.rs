use ndarray::{arr1, arr2, Array1, ArrayD, IxDyn};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::gradcheck::assert_gradients;
use super::Tape;

const EPS: f64 = 1e-5;
const TOL: f64 = 1e-4;

fn randa(shape: &[usize], seed: u64, lo: f64, hi: f64) -> ArrayD<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ArrayD::from_shape_fn(IxDyn(shape), |_| rng.gen_range(lo..hi))
}

#[test]
fn leaf_and_constant_plumbing() {
    let mut t = Tape::<f64>::new();
    let a = t.leaf(arr1(&[1.0, 2.0]).into_dyn());
    let c = t.constant(arr1(&[3.0]).into_dyn());
    assert_eq!(t.shape(a), [2]);
    assert!(t.requires_grad(a));
    assert!(!t.requires_grad(c));
    assert_eq!(t.scalar(c), 3.0);
    assert_eq!(t.len(), 2);
}

#[test]
fn add_mul_closed_form() {
    let mut t = Tape::<f64>::new();
    let x = t.leaf(arr1(&[2.0, -1.0]).into_dyn());
    let y = t.leaf(arr1(&[5.0, 4.0]).into_dyn());
    let xy = t.mul(x, y);
    let z = t.add(xy, x);
    let loss = t.sum_all(z);
    assert_eq!(t.scalar(loss), 2.0 * 5.0 + 2.0 + (-4.0) + (-1.0));
    let g = t.backward(loss);
    // d/dx (x*y + x) = y + 1, d/dy = x.
    assert_eq!(g.get(x).unwrap(), &arr1(&[6.0, 5.0]).into_dyn());
    assert_eq!(g.get(y).unwrap(), &arr1(&[2.0, -1.0]).into_dyn());
}

#[test]
fn fanout_accumulates() {
    let mut t = Tape::<f64>::new();
    let x = t.leaf(arr1(&[3.0]).into_dyn());
    let y = t.add(x, x);
    let loss = t.sum_all(y);
    let g = t.backward(loss);
    assert_eq!(g.get(x).unwrap(), &arr1(&[2.0]).into_dyn());
}

#[test]
fn matmul_closed_form() {
    let mut t = Tape::<f64>::new();
    let a = t.leaf(arr2(&[[1.0, 2.0], [3.0, 4.0]]).into_dyn());
    let b = t.leaf(arr2(&[[5.0], [6.0]]).into_dyn());
    let y = t.matmul(a, b);
    assert_eq!(t.value(y), &arr2(&[[17.0], [39.0]]).into_dyn());
    let loss = t.sum_all(y);
    let g = t.backward(loss);
    // dA = 1 * B^T broadcast over rows, dB = A^T * 1.
    assert_eq!(g.get(a).unwrap(), &arr2(&[[5.0, 6.0], [5.0, 6.0]]).into_dyn());
    assert_eq!(g.get(b).unwrap(), &arr2(&[[4.0], [6.0]]).into_dyn());
}

#[test]
fn softmax_rows_sum_to_one() {
    let mut t = Tape::<f64>::new();
    let a = t.leaf(randa(&[3, 5], 7, -4.0, 4.0));
    let s = t.softmax_rows(a);
    for row in t.value(s).view().into_dimensionality::<ndarray::Ix2>().unwrap().rows() {
        let sum: f64 = row.sum();
        assert!((sum - 1.0).abs() < 1e-12);
    }
}

#[test]
fn detach_blocks_gradient() {
    let mut t = Tape::<f64>::new();
    let x = t.leaf(arr1(&[2.0]).into_dyn());
    let d = t.detach(x);
    let y = t.mul(d, x);
    let loss = t.sum_all(y);
    let g = t.backward(loss);
    // Only the live branch contributes: d(detach(x)*x)/dx = detach(x) = 2.
    assert_eq!(g.get(x).unwrap(), &arr1(&[2.0]).into_dyn());
}

#[test]
fn straight_through_passes_gradient_unchanged() {
    let mut t = Tape::<f64>::new();
    let x = t.leaf(arr1(&[1.0, 2.0]).into_dyn());
    let q = t.straight_through(x, arr1(&[10.0, 20.0]).into_dyn());
    assert_eq!(t.value(q), &arr1(&[10.0, 20.0]).into_dyn());
    let sq = t.square(q);
    let loss = t.sum_all(sq);
    let g = t.backward(loss);
    // Forward uses the replaced value (grad 2*q) but flows to x as-is.
    assert_eq!(g.get(x).unwrap(), &arr1(&[20.0, 40.0]).into_dyn());
}

#[test]
#[should_panic(expected = "inference tape")]
fn backward_on_inference_tape_panics() {
    let mut t = Tape::<f64>::inference();
    let x = t.leaf(arr1(&[1.0]).into_dyn());
    let y = t.sum_all(x);
    t.backward(y);
}

#[test]
fn inference_tape_skips_closures() {
    let mut t = Tape::<f64>::inference();
    let x = t.leaf(arr1(&[1.0, 2.0]).into_dyn());
    let y = t.square(x);
    assert!(!t.requires_grad(y));
}

#[test]
fn grads_elementwise_chain() {
    // Positive inputs keep ln/sqrt well-defined and stay away from the
    // relu kink.
    let x = randa(&[2, 3], 11, 0.3, 1.8);
    assert_gradients(&[x], EPS, TOL, |t, v| {
        let a = t.relu(v[0]);
        let b = t.gelu(a);
        let c = t.exp(b);
        let d = t.ln(c);
        let e = t.sqrt(d);
        let f = t.square(e);
        let g = t.add_scalar(f, 0.5);
        let h = t.scale(g, -1.3);
        let i = t.neg(h);
        t.mean_all(i)
    });
}

#[test]
fn grads_binary_and_rows() {
    let a = randa(&[3, 4], 21, -1.0, 1.0);
    let b = randa(&[3, 4], 22, -1.0, 1.0);
    let r = randa(&[4], 23, -1.0, 1.0);
    assert_gradients(&[a, b, r], EPS, TOL, |t, v| {
        let s = t.sub(v[0], v[1]);
        let m = t.mul(s, v[1]);
        let p = t.add_row(m, v[2]);
        let q = t.sub_row(p, v[2]);
        let w = t.add(q, p);
        t.sum_all(w)
    });
}

#[test]
fn grads_matmul_reshape_transpose() {
    let a = randa(&[3, 4], 31, -1.0, 1.0);
    let b = randa(&[4, 2], 32, -1.0, 1.0);
    assert_gradients(&[a, b], EPS, TOL, |t, v| {
        let y = t.matmul(v[0], v[1]);
        let yt = t.transpose(y);
        let r = t.reshape(yt, &[3, 2]);
        let s = t.square(r);
        t.sum_all(s)
    });
}

#[test]
fn grads_concat_slice_select() {
    let a = randa(&[2, 3], 41, -1.0, 1.0);
    let b = randa(&[4, 3], 42, -1.0, 1.0);
    let c = randa(&[4, 5], 43, -1.0, 1.0);
    assert_gradients(&[a, b, c], EPS, TOL, |t, v| {
        let rows = t.concat_rows(&[v[0], v[1]]);
        let sel = t.select_rows(rows, &[0, 5, 5, 2]);
        let side = t.slice_cols(v[2], 1, 4);
        let cat = t.concat_cols(&[sel, side]);
        let picked = t.select_positions(cat, &[(0, 0), (3, 5), (1, 2)]);
        let sq = t.square(picked);
        t.sum_all(sq)
    });
}

#[test]
fn grads_softmax_and_log_softmax() {
    let a = randa(&[3, 6], 51, -2.0, 2.0);
    let w = randa(&[3, 6], 52, -1.0, 1.0);
    assert_gradients(&[a.clone(), w.clone()], EPS, TOL, |t, v| {
        let s = t.softmax_rows(v[0]);
        let m = t.mul(s, v[1]);
        t.sum_all(m)
    });
    assert_gradients(&[a, w], EPS, TOL, |t, v| {
        let s = t.log_softmax_rows(v[0]);
        let m = t.mul(s, v[1]);
        t.mean_all(m)
    });
}

#[test]
fn grads_reductions_and_rows() {
    let a = randa(&[4, 3], 61, -1.0, 1.0);
    assert_gradients(&[a], EPS, TOL, |t, v| {
        let s0 = t.sum_axis0(v[0]);
        let m0 = t.mean_axis0(v[0]);
        let d = t.mul(s0, m0);
        t.sum_all(d)
    });
}

#[test]
fn grads_l2_normalize() {
    let a = randa(&[3, 4], 71, 0.5, 1.5);
    let w = randa(&[3, 4], 72, -1.0, 1.0);
    assert_gradients(&[a, w], EPS, TOL, |t, v| {
        let n = t.l2_normalize_rows(v[0]);
        let m = t.mul(n, v[1]);
        t.sum_all(m)
    });
}

#[test]
fn l2_normalize_rows_have_unit_norm() {
    let mut t = Tape::<f64>::new();
    let a = t.leaf(randa(&[4, 6], 73, -2.0, 2.0));
    let n = t.l2_normalize_rows(a);
    let v = t.value(n).view().into_dimensionality::<ndarray::Ix2>().unwrap().to_owned();
    for row in v.rows() {
        let norm: f64 = row.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!((norm - 1.0).abs() < 1e-12);
    }
}

#[test]
fn grads_layer_norm() {
    let x = randa(&[3, 8], 81, -1.0, 1.0);
    let gamma = randa(&[8], 82, 0.5, 1.5);
    let beta = randa(&[8], 83, -0.5, 0.5);
    let w = randa(&[3, 8], 84, -1.0, 1.0);
    assert_gradients(&[x, gamma, beta, w], EPS, TOL, |t, v| {
        let y = t.layer_norm(v[0], v[1], v[2], 1e-5);
        let m = t.mul(y, v[3]);
        t.sum_all(m)
    });
}

#[test]
fn layer_norm_rows_standardized() {
    let mut t = Tape::<f64>::new();
    let x = t.leaf(randa(&[2, 16], 85, -3.0, 3.0));
    let gamma = t.leaf(ArrayD::ones(IxDyn(&[16])));
    let beta = t.leaf(ArrayD::zeros(IxDyn(&[16])));
    let y = t.layer_norm(x, gamma, beta, 1e-12);
    let v = t.value(y).view().into_dimensionality::<ndarray::Ix2>().unwrap().to_owned();
    for row in v.rows() {
        let mean: f64 = row.sum() / 16.0;
        let var: f64 = row.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / 16.0;
        assert!(mean.abs() < 1e-9);
        assert!((var - 1.0).abs() < 1e-6);
    }
}

#[test]
fn grads_conv_pool_upsample_frames() {
    let x = randa(&[2, 2, 4, 6], 91, -1.0, 1.0);
    let w = randa(&[3, 2, 3, 3], 92, -0.6, 0.6);
    let b = randa(&[3], 93, -0.2, 0.2);
    assert_gradients(&[x, w, b], EPS, TOL, |t, v| {
        let y = t.conv2d(v[0], v[1], v[2], (1, 1));
        let p = t.max_pool2x2(y);
        let u = t.upsample2x(p);
        let f0 = t.sample_frames(u, 0, 5);
        let f1 = t.sample_frames(u, 1, 6);
        let s0 = t.square(f0);
        let s1 = t.square(f1);
        let a0 = t.sum_all(s0);
        let a1 = t.sum_all(s1);
        t.add(a0, a1)
    });
}

#[test]
fn conv2d_matches_direct_sum() {
    // 1x1x2x2 input, 1-channel 2x2 kernel, no padding: single dot product.
    let mut t = Tape::<f64>::new();
    let x = t.leaf(
        ArrayD::from_shape_vec(IxDyn(&[1, 1, 2, 2]), vec![1.0, 2.0, 3.0, 4.0]).unwrap(),
    );
    let w = t.leaf(
        ArrayD::from_shape_vec(IxDyn(&[1, 1, 2, 2]), vec![10.0, 20.0, 30.0, 40.0]).unwrap(),
    );
    let b = t.leaf(arr1(&[0.5]).into_dyn());
    let y = t.conv2d(x, w, b, (0, 0));
    assert_eq!(t.shape(y), [1, 1, 1, 1]);
    assert_eq!(t.scalar(y), 10.0 + 40.0 + 90.0 + 160.0 + 0.5);
}

#[test]
fn max_pool_picks_maximum() {
    let mut t = Tape::<f64>::new();
    let x = t.leaf(
        ArrayD::from_shape_vec(IxDyn(&[1, 1, 2, 4]), vec![1.0, 5.0, 2.0, 0.0, 3.0, 4.0, 1.0, 9.0])
            .unwrap(),
    );
    let y = t.max_pool2x2(x);
    assert_eq!(
        t.value(y),
        &ArrayD::from_shape_vec(IxDyn(&[1, 1, 1, 2]), vec![5.0, 9.0]).unwrap()
    );
}

#[test]
fn grads_batch_norm_both_modes() {
    let x = randa(&[2, 3, 2, 4], 101, -1.0, 1.0);
    let gamma = randa(&[3], 102, 0.5, 1.5);
    let beta = randa(&[3], 103, -0.5, 0.5);
    let (mean, var) = channel_stats(&x);
    // Training mode: stats are a function of x, so they are recomputed on
    // every finite-difference probe inside the closure.
    assert_gradients(&[x.clone(), gamma.clone(), beta.clone()], EPS, TOL, |t, v| {
        let (m, s) = channel_stats(t.value(v[0]));
        let y = t.batch_norm(v[0], v[1], v[2], &m, &s, true, 1e-5);
        let sq = t.square(y);
        t.sum_all(sq)
    });
    // Eval mode: stats are fixed constants.
    assert_gradients(&[x, gamma, beta], EPS, TOL, |t, v| {
        let y = t.batch_norm(v[0], v[1], v[2], &mean, &var, false, 1e-5);
        let sq = t.square(y);
        t.sum_all(sq)
    });
}

fn channel_stats(x: &ArrayD<f64>) -> (Array1<f64>, Array1<f64>) {
    let x4 = x.view().into_dimensionality::<ndarray::Ix4>().unwrap();
    let (n, c, h, w) = x4.dim();
    let m = (n * h * w) as f64;
    let mut mean = Array1::<f64>::zeros(c);
    let mut var = Array1::<f64>::zeros(c);
    for ch in 0..c {
        let mut acc = 0.0;
        for s in 0..n {
            for i in 0..h {
                for j in 0..w {
                    acc += x4[(s, ch, i, j)];
                }
            }
        }
        mean[ch] = acc / m;
        let mut v = 0.0;
        for s in 0..n {
            for i in 0..h {
                for j in 0..w {
                    v += (x4[(s, ch, i, j)] - mean[ch]).powi(2);
                }
            }
        }
        var[ch] = v / m;
    }
    (mean, var)
}

#[test]
fn grads_frames_roundtrip() {
    let f = randa(&[5, 6], 111, -1.0, 1.0);
    assert_gradients(&[f], EPS, TOL, |t, v| {
        let x = t.frames_to_chw(v[0], 2, 3);
        let back = t.sample_frames(x, 0, 5);
        let d = t.mul(back, v[0]);
        t.sum_all(d)
    });
}

#[test]
fn frames_to_chw_inverts_sample_frames() {
    let mut t = Tape::<f64>::new();
    let f = t.leaf(randa(&[4, 6], 112, -1.0, 1.0));
    let x = t.frames_to_chw(f, 3, 2);
    assert_eq!(t.shape(x), [1, 3, 2, 4]);
    let back = t.sample_frames(x, 0, 4);
    assert_eq!(t.value(back), t.value(f));
}
