//! Lawson-Hanson active-set NNLS on the normal equations of the stacked system.
//!
//! The passive-set subproblems are solved with a Cholesky factor of the
//! passive block of `G = AᵀA + λ²LᵀL`, extended by one row when a variable
//! enters and rebuilt when variables leave. A candidate whose column is
//! numerically dependent on the passive set, or whose unconstrained value is
//! not positive, is skipped until the passive set changes.

use nalgebra::DVector;

use super::{RegularizedProblem, Solution, SolveMethod};
use crate::error::{Error, Result};

/// Relative pivot threshold below which an entering column counts as dependent.
const DEPENDENT_PIVOT: f64 = 1e-13;

pub fn solve_nnls_activeset(problem: &RegularizedProblem<'_>) -> Result<Solution> {
    let g = problem.normal_matrix();
    let c = problem.rhs();
    let n = c.len();
    if n == 0 {
        return Err(Error::dim("empty problem"));
    }
    let tau = 1e-8 * c.amax();
    let max_outer = 3 * n;

    let mut x = DVector::<f64>::zeros(n);
    let mut passive: Vec<usize> = Vec::new();
    let mut in_passive = vec![false; n];
    let mut skip = vec![false; n];
    let mut chol = Chol::default();
    let mut iterations = 0;
    let mut converged = false;

    while iterations < max_outer {
        let w = &c - &g * &x;
        // Most positive dual among free candidates; ties go to the smallest index.
        let mut best: Option<usize> = None;
        for j in 0..n {
            if in_passive[j] || skip[j] || w[j] <= tau {
                continue;
            }
            if best.is_none_or(|b| w[j] > w[b]) {
                best = Some(j);
            }
        }
        let Some(j) = best else {
            converged = (0..n).all(|j| in_passive[j] || w[j] <= tau);
            break;
        };
        iterations += 1;

        if !chol.push(&g, &passive, j) {
            skip[j] = true;
            continue;
        }
        passive.push(j);
        let mut z = chol.solve_on(&passive, &c);
        if z[passive.len() - 1] <= 0.0 {
            chol.pop();
            passive.pop();
            skip[j] = true;
            continue;
        }
        in_passive[j] = true;
        skip.iter_mut().for_each(|s| *s = false);

        // Step back toward feasibility until the subproblem solution is positive.
        let mut inner = 0;
        while z.iter().any(|&v| v <= 0.0) {
            inner += 1;
            if inner > n {
                return Err(Error::Numerical("active-set inner loop did not terminate".into()));
            }
            let mut alpha = f64::INFINITY;
            for (k, &q) in passive.iter().enumerate() {
                if z[k] <= 0.0 {
                    let a = x[q] / (x[q] - z[k]);
                    alpha = alpha.min(a);
                }
            }
            for (k, &q) in passive.iter().enumerate() {
                x[q] += alpha * (z[k] - x[q]);
            }
            let before = passive.len();
            let floor = 10.0 * f64::EPSILON * x.amax();
            passive.retain(|&q| x[q] > floor);
            for q in 0..n {
                if in_passive[q] && !passive.contains(&q) {
                    in_passive[q] = false;
                    x[q] = 0.0;
                }
            }
            if passive.len() == before {
                // alpha pinned a variable exactly at zero through rounding; drop the smallest.
                let (k, _) = passive
                    .iter()
                    .enumerate()
                    .min_by(|a, b| x[*a.1].total_cmp(&x[*b.1]))
                    .expect("non-empty passive set");
                let q = passive.remove(k);
                in_passive[q] = false;
                x[q] = 0.0;
            }
            if !chol.rebuild(&g, &passive) {
                return Err(Error::Numerical("passive block lost positive definiteness".into()));
            }
            if passive.is_empty() {
                z = DVector::zeros(0);
                break;
            }
            z = chol.solve_on(&passive, &c);
        }
        for (k, &q) in passive.iter().enumerate() {
            x[q] = z[k];
        }
    }

    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("active-set solution is not finite".into()));
    }
    Ok(Solution::from_x(problem, x, SolveMethod::NnlsActiveSet, iterations, converged))
}

/// Lower-triangular Cholesky factor of a passive block, stored by rows.
#[derive(Default)]
struct Chol {
    rows: Vec<Vec<f64>>,
}

impl Chol {
    /// Extend the factor by variable `j`; false if the column is dependent.
    fn push(&mut self, g: &nalgebra::DMatrix<f64>, passive: &[usize], j: usize) -> bool {
        let p = passive.len();
        let mut row = vec![0.0; p + 1];
        for k in 0..p {
            let mut s = g[(passive[k], j)];
            for i in 0..k {
                s -= self.rows[k][i] * row[i];
            }
            row[k] = s / self.rows[k][k];
        }
        let d2 = g[(j, j)] - row[..p].iter().map(|v| v * v).sum::<f64>();
        if !(d2 > DEPENDENT_PIVOT * g[(j, j)]) || !d2.is_finite() {
            return false;
        }
        row[p] = d2.sqrt();
        self.rows.push(row);
        true
    }

    fn pop(&mut self) {
        self.rows.pop();
    }

    fn rebuild(&mut self, g: &nalgebra::DMatrix<f64>, passive: &[usize]) -> bool {
        self.rows.clear();
        let mut built: Vec<usize> = Vec::with_capacity(passive.len());
        for &q in passive {
            if !self.push(g, &built, q) {
                return false;
            }
            built.push(q);
        }
        true
    }

    /// Solve `G_PP z = c_P`.
    fn solve_on(&self, passive: &[usize], c: &DVector<f64>) -> DVector<f64> {
        let p = passive.len();
        let mut y = vec![0.0; p];
        for k in 0..p {
            let mut s = c[passive[k]];
            for i in 0..k {
                s -= self.rows[k][i] * y[i];
            }
            y[k] = s / self.rows[k][k];
        }
        for k in (0..p).rev() {
            let mut s = y[k];
            for i in k + 1..p {
                s -= self.rows[i][k] * y[i];
            }
            y[k] = s / self.rows[k][k];
        }
        DVector::from_vec(y)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regsolve::{
        build_regularizer, kkt_holds, solve_ls, RegularizerKind,
    };
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn clamps_negative_component() {
        let a = DMatrix::identity(2, 2);
        let b = DVector::from_vec(vec![1.0, -1.0]);
        let l = build_regularizer(RegularizerKind::Identity, 2).unwrap();
        let s = solve_nnls_activeset(&RegularizedProblem::new(&a, &b, &l, 0.0).unwrap()).unwrap();
        assert_eq!(s.x.as_slice(), &[1.0, 0.0]);
        assert!(s.converged);
    }

    #[test]
    fn nonnegative_data_is_reproduced() {
        let a = DMatrix::identity(4, 4);
        let b = DVector::from_vec(vec![0.5, 0.0, 2.0, 1.0]);
        let l = build_regularizer(RegularizerKind::Identity, 4).unwrap();
        let s = solve_nnls_activeset(&RegularizedProblem::new(&a, &b, &l, 0.0).unwrap()).unwrap();
        assert!((&s.x - &b).amax() < 1e-15);
    }

    #[test]
    fn agrees_with_ls_when_ls_is_nonnegative() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut hits = 0;
        for _ in 0..200 {
            let a = DMatrix::from_fn(8, 4, |_, _| rng.random_range(0.0..1.0));
            let xt = DVector::from_fn(4, |_, _| rng.random_range(0.5..1.5));
            let b = &a * &xt;
            let l = build_regularizer(RegularizerKind::FirstDiff, 4).unwrap();
            let p = RegularizedProblem::new(&a, &b, &l, 0.05).unwrap();
            let ls = solve_ls(&p).unwrap();
            if ls.x.iter().all(|&v| v >= 0.0) {
                hits += 1;
                let nn = solve_nnls_activeset(&p).unwrap();
                assert!((&ls.x - &nn.x).amax() < 1e-8);
            }
        }
        assert!(hits > 50);
    }

    #[test]
    fn handles_duplicate_columns() {
        let a = DMatrix::from_row_slice(3, 3, &[1., 1., 0., 1., 1., 1., 0., 0., 1.]);
        let b = DVector::from_vec(vec![1.0, 2.0, 1.0]);
        let l = build_regularizer(RegularizerKind::Identity, 3).unwrap();
        let p = RegularizedProblem::new(&a, &b, &l, 0.0).unwrap();
        let s = solve_nnls_activeset(&p).unwrap();
        assert!(s.x.iter().all(|&v| v >= 0.0));
        assert!(kkt_holds(&p, &s.x));
    }
}
