//! Independent oracles shared by the integration tests.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use relaxo_core::regsolve::{build_regularizer, Regularizer, RegularizerKind};

/// Global NNLS minimizer of `‖Âx − b̂‖₂` by enumerating every support set:
/// each subset is solved unconstrained and the best nonnegative candidate wins.
pub fn brute_force_nnls(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let n = a.ncols();
    let mut best = DVector::zeros(n);
    let mut best_obj = b.norm_squared();
    for mask in 1u32..(1 << n) {
        let cols: Vec<usize> = (0..n).filter(|j| mask & (1 << j) != 0).collect();
        let sub = a.select_columns(&cols);
        let Ok(y) = sub.clone().svd(true, true).solve(b, 1e-14) else {
            continue;
        };
        if y.iter().any(|&v| v < 0.0) {
            continue;
        }
        let obj = (&sub * &y - b).norm_squared();
        if obj < best_obj {
            best_obj = obj;
            best = DVector::zeros(n);
            for (k, &j) in cols.iter().enumerate() {
                best[j] = y[k];
            }
        }
    }
    best
}

/// Random 3×4 operator with a first-difference regularizer, so the stacked
/// system `[A; λL]` is 6×4.
pub struct SmallProblem {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub l: Regularizer,
    pub lambda: f64,
}

impl SmallProblem {
    pub fn random<R: Rng>(rng: &mut R) -> Self {
        let a = DMatrix::from_fn(3, 4, |_, _| rng.random_range(-1.0..1.0));
        let b = DVector::from_fn(3, |_, _| rng.random_range(-1.0..1.0));
        let l = build_regularizer(RegularizerKind::FirstDiff, 4).unwrap();
        let lambda = 10f64.powf(rng.random_range(-2.0..0.5));
        SmallProblem { a, b, l, lambda }
    }

    pub fn stacked(&self) -> (DMatrix<f64>, DVector<f64>) {
        let mut a = DMatrix::zeros(6, 4);
        a.view_mut((0, 0), (3, 4)).copy_from(&self.a);
        a.view_mut((3, 0), (3, 4)).copy_from(&(&self.l.matrix * self.lambda));
        let mut b = DVector::zeros(6);
        b.rows_mut(0, 3).copy_from(&self.b);
        (a, b)
    }
}
