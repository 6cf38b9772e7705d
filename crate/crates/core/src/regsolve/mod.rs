//! Tikhonov-regularized least squares with and without non-negativity.
//!
//! Every solver minimizes `‖Ax − b‖² + λ²‖Lx‖²`, i.e. the plain least-squares
//! objective of the stacked system `Â = [A; λL]`, `b̂ = [b; 0]`.

mod nnls;
mod sbb;

pub use nnls::solve_nnls_activeset;
pub use sbb::{solve_nnls_sbb, SbbOptions};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RegularizerKind {
    Identity,
    FirstDiff,
    SecondDiff,
}

impl RegularizerKind {
    pub const ALL: [RegularizerKind; 3] =
        [RegularizerKind::Identity, RegularizerKind::FirstDiff, RegularizerKind::SecondDiff];
}

impl std::fmt::Display for RegularizerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            RegularizerKind::Identity => "I",
            RegularizerKind::FirstDiff => "L1",
            RegularizerKind::SecondDiff => "L2",
        })
    }
}

impl std::str::FromStr for RegularizerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "I" | "IDENTITY" | "L0" => Ok(RegularizerKind::Identity),
            "L1" | "FIRST" | "FIRSTDIFF" => Ok(RegularizerKind::FirstDiff),
            "L2" | "SECOND" | "SECONDDIFF" => Ok(RegularizerKind::SecondDiff),
            other => Err(Error::Config(format!("unknown regularizer `{other}`, expected I, L1 or L2"))),
        }
    }
}

/// Smoothing operator `L`: identity or an unscaled difference stencil.
#[derive(Debug, Clone, PartialEq)]
pub struct Regularizer {
    pub kind: RegularizerKind,
    pub matrix: DMatrix<f64>,
}

impl Regularizer {
    pub fn rows(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn cols(&self) -> usize {
        self.matrix.ncols()
    }
}

pub fn build_regularizer(kind: RegularizerKind, n: usize) -> Result<Regularizer> {
    let matrix = match kind {
        RegularizerKind::Identity => {
            if n == 0 {
                return Err(Error::dim("identity regularizer needs n >= 1"));
            }
            DMatrix::identity(n, n)
        }
        RegularizerKind::FirstDiff => {
            if n < 2 {
                return Err(Error::dim("first-difference regularizer needs n >= 2"));
            }
            DMatrix::from_fn(n - 1, n, |r, c| match c as isize - r as isize {
                0 => -1.0,
                1 => 1.0,
                _ => 0.0,
            })
        }
        RegularizerKind::SecondDiff => {
            if n < 3 {
                return Err(Error::dim("second-difference regularizer needs n >= 3"));
            }
            DMatrix::from_fn(n - 2, n, |r, c| match c as isize - r as isize {
                0 | 2 => 1.0,
                1 => -2.0,
                _ => 0.0,
            })
        }
    };
    Ok(Regularizer { kind, matrix })
}

/// Cached `AᵀA` and `LᵀL` for repeated solves with the same `A` and `L`.
#[derive(Debug, Clone)]
pub struct GramCache {
    pub ata: DMatrix<f64>,
    pub ltl: DMatrix<f64>,
}

impl GramCache {
    pub fn new(a: &DMatrix<f64>, l: &Regularizer) -> Result<Self> {
        if a.ncols() != l.cols() {
            return Err(Error::dim(format!(
                "operator has {} columns, regularizer {}",
                a.ncols(),
                l.cols()
            )));
        }
        Ok(GramCache { ata: a.tr_mul(a), ltl: l.matrix.tr_mul(&l.matrix) })
    }

    /// `AᵀA + λ²LᵀL`.
    pub fn normal_matrix(&self, lambda: f64) -> DMatrix<f64> {
        &self.ata + &self.ltl * (lambda * lambda)
    }
}

/// One Tikhonov problem `(A, b, L, λ)`.
#[derive(Debug, Clone, Copy)]
pub struct RegularizedProblem<'a> {
    pub a: &'a DMatrix<f64>,
    pub b: &'a DVector<f64>,
    pub l: &'a Regularizer,
    pub lambda: f64,
    pub gram: Option<&'a GramCache>,
}

impl<'a> RegularizedProblem<'a> {
    pub fn new(
        a: &'a DMatrix<f64>,
        b: &'a DVector<f64>,
        l: &'a Regularizer,
        lambda: f64,
    ) -> Result<Self> {
        if a.nrows() != b.len() {
            return Err(Error::dim(format!("A has {} rows, b has {} entries", a.nrows(), b.len())));
        }
        if a.ncols() != l.cols() {
            return Err(Error::dim(format!(
                "A has {} columns, L has {}",
                a.ncols(),
                l.cols()
            )));
        }
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(Error::domain(format!("lambda must be non-negative, got {lambda}")));
        }
        Ok(RegularizedProblem { a, b, l, lambda, gram: None })
    }

    pub fn with_gram(mut self, gram: &'a GramCache) -> Self {
        self.gram = Some(gram);
        self
    }

    pub fn n(&self) -> usize {
        self.a.ncols()
    }

    /// Stacked matrix `[A; λL]` and right-hand side `[b; 0]`.
    pub fn augmented(&self) -> (DMatrix<f64>, DVector<f64>) {
        let (m, n, p) = (self.a.nrows(), self.a.ncols(), self.l.rows());
        let mut ah = DMatrix::zeros(m + p, n);
        ah.rows_mut(0, m).copy_from(self.a);
        ah.rows_mut(m, p).copy_from(&(&self.l.matrix * self.lambda));
        let mut bh = DVector::zeros(m + p);
        bh.rows_mut(0, m).copy_from(self.b);
        (ah, bh)
    }

    /// `AᵀA + λ²LᵀL`, from the cache when present.
    pub fn normal_matrix(&self) -> DMatrix<f64> {
        match self.gram {
            Some(g) => g.normal_matrix(self.lambda),
            None => {
                let lam2 = self.lambda * self.lambda;
                self.a.tr_mul(self.a) + self.l.matrix.tr_mul(&self.l.matrix) * lam2
            }
        }
    }

    /// `Âᵀb̂ = Aᵀb`.
    pub fn rhs(&self) -> DVector<f64> {
        self.a.tr_mul(self.b)
    }

    /// `‖Ax − b‖₂` and `‖Lx‖₂`.
    pub fn norms(&self, x: &DVector<f64>) -> (f64, f64) {
        ((self.a * x - self.b).norm(), (&self.l.matrix * x).norm())
    }

    /// `‖Ax − b‖² + λ²‖Lx‖²`.
    pub fn objective(&self, x: &DVector<f64>) -> f64 {
        let (r, s) = self.norms(x);
        r * r + self.lambda * self.lambda * s * s
    }

    /// Gradient of `½` the objective, `Âᵀ(Âx − b̂)`, computed without the Gram matrix.
    pub fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        let r = self.a * x - self.b;
        let lx = &self.l.matrix * x;
        self.a.tr_mul(&r) + self.l.matrix.tr_mul(&lx) * (self.lambda * self.lambda)
    }

    /// KKT tolerance `1e-8 ‖Âᵀb̂‖∞`.
    pub fn kkt_tolerance(&self) -> f64 {
        1e-8 * self.rhs().amax()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SolveMethod {
    Ls,
    NnlsActiveSet,
    NnlsSbb,
}

impl SolveMethod {
    pub fn is_nonnegative(self) -> bool {
        !matches!(self, SolveMethod::Ls)
    }
}

impl std::fmt::Display for SolveMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SolveMethod::Ls => "ls",
            SolveMethod::NnlsActiveSet => "nnls-as",
            SolveMethod::NnlsSbb => "nnls-sbb",
        })
    }
}

impl std::str::FromStr for SolveMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ls" => Ok(SolveMethod::Ls),
            "nnls" | "nnls-as" | "active-set" => Ok(SolveMethod::NnlsActiveSet),
            "nnls-sbb" | "sbb" => Ok(SolveMethod::NnlsSbb),
            other => Err(Error::Config(format!(
                "unknown method `{other}`, expected ls, nnls-as or nnls-sbb"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub x: DVector<f64>,
    pub residual_norm: f64,
    pub seminorm: f64,
    pub iterations: usize,
    pub converged: bool,
    pub method: SolveMethod,
    /// The augmented system was numerically rank deficient (LS only).
    pub rank_deficient: bool,
}

impl Solution {
    pub(crate) fn from_x(
        problem: &RegularizedProblem<'_>,
        x: DVector<f64>,
        method: SolveMethod,
        iterations: usize,
        converged: bool,
    ) -> Self {
        let (residual_norm, seminorm) = problem.norms(&x);
        Solution { x, residual_norm, seminorm, iterations, converged, method, rank_deficient: false }
    }
}

/// Unconstrained minimizer via SVD of the augmented system. Rank-deficient
/// systems get the minimum-norm solution and are flagged.
pub fn solve_ls(problem: &RegularizedProblem<'_>) -> Result<Solution> {
    let (ah, bh) = problem.augmented();
    let n = ah.ncols();
    let svd = ah.svd(true, true);
    let smax = svd.singular_values.max();
    let tol = smax * f64::EPSILON * (ah_dims(problem) as f64);
    let rank = svd.singular_values.iter().filter(|&&s| s > tol).count();
    let x = svd
        .solve(&bh, tol)
        .map_err(|e| Error::Numerical(format!("SVD solve failed: {e}")))?;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("least-squares solution is not finite".into()));
    }
    let mut sol = Solution::from_x(problem, x, SolveMethod::Ls, 1, true);
    sol.rank_deficient = rank < n;
    Ok(sol)
}

fn ah_dims(p: &RegularizedProblem<'_>) -> usize {
    (p.a.nrows() + p.l.rows()).max(p.a.ncols())
}

/// Solve with the chosen method; SBB uses `opts` and starts from zero.
pub fn solve(problem: &RegularizedProblem<'_>, method: SolveMethod, opts: &SbbOptions) -> Result<Solution> {
    match method {
        SolveMethod::Ls => solve_ls(problem),
        SolveMethod::NnlsActiveSet => solve_nnls_activeset(problem),
        SolveMethod::NnlsSbb => {
            let init = DVector::zeros(problem.n());
            solve_nnls_sbb(problem, &init, opts)
        }
    }
}

/// Largest violation of the NNLS optimality conditions at `x`:
/// `|ĝ_i|` on the support, `max(0, −ĝ_i)` off it, and `max(0, −x_i)`.
pub fn kkt_violation(problem: &RegularizedProblem<'_>, x: &DVector<f64>) -> f64 {
    let g = problem.gradient(x);
    x.iter()
        .zip(g.iter())
        .map(|(&xi, &gi)| {
            if xi < 0.0 {
                -xi
            } else if xi > 0.0 {
                gi.abs()
            } else {
                (-gi).max(0.0)
            }
        })
        .fold(0.0, f64::max)
}

/// KKT certificate at tolerance `1e-8 ‖Âᵀb̂‖∞`.
pub fn kkt_holds(problem: &RegularizedProblem<'_>, x: &DVector<f64>) -> bool {
    kkt_violation(problem, x) <= problem.kkt_tolerance()
}
