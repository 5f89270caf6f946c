//! Finite-difference verification of backward passes.
//!
//! The loss graph is rebuilt from scratch for every probe, so the check
//! also covers value caching inside ops. Intended for `f64` with small
//! shapes; tolerances around `1e-3` relative are realistic for central
//! differences with `eps = 1e-5`.

use ndarray::ArrayD;

use super::{Tape, Var};

/// Worst element found by [`check`].
#[derive(Debug, Clone, Copy)]
pub struct GradCheckReport {
    pub max_rel: f64,
    pub analytic: f64,
    pub numeric: f64,
    pub leaf: usize,
    pub elem: usize,
}

fn rel_err(a: f64, b: f64) -> f64 {
    let denom = a.abs().max(b.abs()).max(1e-4);
    (a - b).abs() / denom
}

/// Compare analytic gradients of `build`'s scalar output against central
/// finite differences, element by element, for every leaf.
pub fn check<F>(leaves: &[ArrayD<f64>], eps: f64, build: F) -> GradCheckReport
where
    F: Fn(&mut Tape<f64>, &[Var]) -> Var,
{
    let eval = |vals: &[ArrayD<f64>]| -> f64 {
        let mut tape = Tape::<f64>::inference();
        let vars: Vec<Var> = vals.iter().map(|v| tape.leaf(v.clone())).collect();
        let loss = build(&mut tape, &vars);
        tape.scalar(loss)
    };

    let mut tape = Tape::<f64>::new();
    let vars: Vec<Var> = leaves.iter().map(|v| tape.leaf(v.clone())).collect();
    let loss = build(&mut tape, &vars);
    let grads = tape.backward(loss);

    let mut report = GradCheckReport { max_rel: 0.0, analytic: 0.0, numeric: 0.0, leaf: 0, elem: 0 };
    for (li, leaf) in leaves.iter().enumerate() {
        let analytic = grads
            .get(vars[li])
            .cloned()
            .unwrap_or_else(|| ArrayD::zeros(leaf.raw_dim()));
        let flat_analytic: Vec<f64> = analytic.iter().copied().collect();
        for ei in 0..leaf.len() {
            let mut plus = leaves.to_vec();
            let mut minus = leaves.to_vec();
            {
                let p = plus[li].as_slice_mut().expect("contiguous leaf");
                p[ei] += eps;
                let m = minus[li].as_slice_mut().expect("contiguous leaf");
                m[ei] -= eps;
            }
            let numeric = (eval(&plus) - eval(&minus)) / (2.0 * eps);
            let a = flat_analytic[ei];
            let r = rel_err(a, numeric);
            if r > report.max_rel {
                report = GradCheckReport { max_rel: r, analytic: a, numeric, leaf: li, elem: ei };
            }
        }
    }
    report
}

/// Panic with context if any element disagrees beyond `tol` relative error.
pub fn assert_gradients<F>(leaves: &[ArrayD<f64>], eps: f64, tol: f64, build: F)
where
    F: Fn(&mut Tape<f64>, &[Var]) -> Var,
{
    let r = check(leaves, eps, build);
    assert!(
        r.max_rel <= tol,
        "gradient mismatch at leaf {} elem {}: analytic {} vs numeric {} (rel {:.3e} > {:.1e})",
        r.leaf,
        r.elem,
        r.analytic,
        r.numeric,
        r.max_rel,
        tol
    );
}
