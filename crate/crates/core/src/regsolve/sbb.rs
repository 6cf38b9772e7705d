//! Projected Barzilai-Borwein NNLS with subspace step lengths.
//!
//! Step lengths alternate between the two BB formulas, computed on the free
//! variables only (those not held at zero by a positive gradient). Steps are
//! accepted by a nonmonotone Armijo test against the largest objective of a
//! recent window. The best iterate seen is returned.

use std::collections::VecDeque;

use nalgebra::DVector;

use super::{RegularizedProblem, Solution, SolveMethod};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SbbOptions {
    pub max_iter: usize,
    /// Stop when `‖x − P₊(x − ĝ)‖∞ ≤ tol (1 + ‖ĝ‖∞)`.
    pub tol: f64,
    /// Length of the nonmonotone acceptance window.
    pub window: usize,
}

impl Default for SbbOptions {
    fn default() -> Self {
        SbbOptions { max_iter: 5000, tol: 1e-6, window: 10 }
    }
}

const ARMIJO: f64 = 1e-4;
const STEP_MIN: f64 = 1e-30;
const STEP_MAX: f64 = 1e30;

pub fn solve_nnls_sbb(
    problem: &RegularizedProblem<'_>,
    init: &DVector<f64>,
    opts: &SbbOptions,
) -> Result<Solution> {
    let n = problem.n();
    if init.len() != n {
        return Err(Error::dim(format!("init has {} entries, problem has {n}", init.len())));
    }
    if init.iter().any(|&v| !(v >= 0.0)) {
        return Err(Error::domain("init must be non-negative"));
    }
    let g_mat = problem.normal_matrix();
    let c = problem.rhs();
    // Half the objective, minus the constant ½‖b‖².
    let f = |x: &DVector<f64>, gx: &DVector<f64>| 0.5 * x.dot(gx) - c.dot(x);

    let mut x = init.clone();
    let mut gx = &g_mat * &x;
    let mut grad = &gx - &c;
    let mut fx = f(&x, &gx);
    let mut history: VecDeque<f64> = VecDeque::with_capacity(opts.window.max(1));
    history.push_back(fx);
    let (mut best_x, mut best_f) = (x.clone(), fx);

    let ginf = grad.amax();
    let mut step = if ginf > 0.0 { 1.0 / ginf } else { 1.0 };
    let mut iterations = 0;
    let mut converged = false;

    loop {
        if projected_gradient_norm(&x, &grad) <= opts.tol * (1.0 + grad.amax()) {
            converged = true;
            break;
        }
        if iterations >= opts.max_iter {
            break;
        }
        iterations += 1;

        let trial = (&x - &grad * step).map(|v| v.max(0.0));
        let d = &trial - &x;
        let gd = grad.dot(&d);
        if gd >= 0.0 {
            // No descent available at this step length; restart it.
            step = 1.0 / grad.amax().max(f64::MIN_POSITIVE);
            continue;
        }
        let gdir = &g_mat * &d;
        let fref = history.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let dgd = d.dot(&gdir);
        let mut t = 1.0;
        loop {
            let ft = fx + t * gd + 0.5 * t * t * dgd;
            if ft <= fref + ARMIJO * t * gd || t < 1e-20 {
                break;
            }
            t *= 0.5;
        }
        let s = &d * t;
        let y = &gdir * t;
        x += &s;
        x.iter_mut().for_each(|v| *v = v.max(0.0));
        if iterations % 100 == 0 {
            gx = &g_mat * &x;
        } else {
            gx += &y;
        }
        grad = &gx - &c;
        fx = f(&x, &gx);
        if fx < best_f {
            best_f = fx;
            best_x.copy_from(&x);
        }
        if history.len() == opts.window.max(1) {
            history.pop_front();
        }
        history.push_back(fx);

        // Subspace BB: ignore variables held at the bound.
        let (mut ss, mut sy, mut yy) = (0.0, 0.0, 0.0);
        for i in 0..n {
            if x[i] > 0.0 || grad[i] < 0.0 {
                ss += s[i] * s[i];
                sy += s[i] * y[i];
                yy += y[i] * y[i];
            }
        }
        step = if sy <= 0.0 {
            STEP_MAX
        } else if iterations % 2 == 1 {
            ss / sy
        } else {
            sy / yy
        }
        .clamp(STEP_MIN, STEP_MAX);
    }

    let x = if converged && fx <= best_f { x } else { best_x };
    Ok(Solution::from_x(problem, x, SolveMethod::NnlsSbb, iterations, converged))
}

fn projected_gradient_norm(x: &DVector<f64>, g: &DVector<f64>) -> f64 {
    x.iter()
        .zip(g.iter())
        .map(|(&xi, &gi)| (xi - (xi - gi).max(0.0)).abs())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regsolve::{build_regularizer, solve_nnls_activeset, RegularizerKind};
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn optimal_start_stops_immediately() {
        let a = DMatrix::identity(3, 3);
        let b = DVector::from_vec(vec![1.0, 0.0, 2.0]);
        let l = build_regularizer(RegularizerKind::Identity, 3).unwrap();
        let p = RegularizedProblem::new(&a, &b, &l, 0.0).unwrap();
        let s = solve_nnls_sbb(&p, &b, &SbbOptions::default()).unwrap();
        assert!(s.iterations <= 1);
        assert!(s.converged);
    }

    #[test]
    fn matches_active_set_objective() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..20 {
            let a = DMatrix::from_fn(10, 6, |_, _| rng.random_range(-1.0..1.0));
            let b = DVector::from_fn(10, |_, _| rng.random_range(-1.0..1.0));
            let l = build_regularizer(RegularizerKind::SecondDiff, 6).unwrap();
            let p = RegularizedProblem::new(&a, &b, &l, 0.2).unwrap();
            let asx = solve_nnls_activeset(&p).unwrap();
            let bb = solve_nnls_sbb(&p, &DVector::zeros(6), &SbbOptions::default()).unwrap();
            let (fa, fb) = (p.objective(&asx.x), p.objective(&bb.x));
            assert!((fb - fa).abs() <= 1e-6 * fa.max(f64::MIN_POSITIVE), "{fa} {fb}");
            assert!(bb.x.iter().all(|&v| v >= 0.0));
        }
    }

    #[test]
    fn never_worse_than_start() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = DMatrix::from_fn(12, 8, |_, _| rng.random_range(0.0..1.0));
        let b = DVector::from_fn(12, |_, _| rng.random_range(-1.0..1.0));
        let l = build_regularizer(RegularizerKind::Identity, 8).unwrap();
        let p = RegularizedProblem::new(&a, &b, &l, 1e-3).unwrap();
        let init = DVector::from_element(8, 0.3);
        let opts = SbbOptions { max_iter: 3, ..SbbOptions::default() };
        let s = solve_nnls_sbb(&p, &init, &opts).unwrap();
        assert!(p.objective(&s.x) <= p.objective(&init));
    }

    #[test]
    fn rejects_negative_init() {
        let a = DMatrix::identity(2, 2);
        let b = DVector::zeros(2);
        let l = build_regularizer(RegularizerKind::Identity, 2).unwrap();
        let p = RegularizedProblem::new(&a, &b, &l, 0.0).unwrap();
        let init = DVector::from_vec(vec![-1.0, 0.0]);
        assert!(solve_nnls_sbb(&p, &init, &SbbOptions::default()).is_err());
    }
}
