//! Weight initialization. All draws go through the caller's RNG, so a
//! seeded model is reproducible.

use ndarray::{ArrayD, IxDyn};
use rand::Rng;

use crate::scalar::Scalar;

/// Standard normal via Box-Muller on the caller's RNG.
fn normal<R: Rng>(rng: &mut R) -> f64 {
    loop {
        let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
        let u2: f64 = rng.gen_range(0.0..1.0);
        let z = (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos();
        if z.is_finite() {
            return z;
        }
    }
}

/// Normal(0, std) resampled until within two standard deviations.
pub fn trunc_normal<T: Scalar, R: Rng>(rng: &mut R, shape: &[usize], std: f64) -> ArrayD<T> {
    ArrayD::from_shape_simple_fn(IxDyn(shape), || {
        loop {
            let z = normal(rng) * std;
            if z.abs() <= 2.0 * std {
                return T::of(z);
            }
        }
    })
}

/// He initialization for ReLU stacks: Normal(0, sqrt(2 / fan_in)).
pub fn he_normal<T: Scalar, R: Rng>(rng: &mut R, shape: &[usize], fan_in: usize) -> ArrayD<T> {
    let std = (2.0 / fan_in as f64).sqrt();
    ArrayD::from_shape_simple_fn(IxDyn(shape), || T::of(normal(rng) * std))
}

pub fn zeros<T: Scalar>(shape: &[usize]) -> ArrayD<T> {
    ArrayD::zeros(IxDyn(shape))
}

pub fn ones<T: Scalar>(shape: &[usize]) -> ArrayD<T> {
    ArrayD::ones(IxDyn(shape))
}
