//! Minimum-norm problems `min xᵀx s.t. A·x = b` and the exact change of their
//! optimal value when constraint rows are appended.
//!
//! For full-row-rank `A` the classical solution is
//!
//! ```text
//! x*  = Aᵀ(AAᵀ)⁻¹b
//! Cov = I − Aᵀ(AAᵀ)⁻¹A        (projector onto the null space of A)
//! f*  = bᵀ(AAᵀ)⁻¹b
//! ```
//!
//! Appending rows `A₂x = b₂` raises the optimum by exactly
//! `Δf = (A₂x* − b₂)ᵀ [A₂·Cov·A₂ᵀ]⁻¹ (A₂x* − b₂)`, so `f** = f* + Δf` without
//! solving the stacked problem.
//!
//! Both are evaluated through orthogonal factorizations rather than the normal
//! matrices above: with `Aᵀ = [Q₁ N]·[R; 0]`, `x* = Q₁R⁻ᵀb`, `f* = ‖R⁻ᵀb‖²` and
//! `Cov = N·Nᵀ`, and `Δf` comes from a QR factorization of `(A₂N)ᵀ`. Errors then
//! grow with the condition number of the constraints instead of its square.

use rayon::prelude::*;

use crate::error::{dim_mismatch, Error, Result};
use crate::linalg::{numerical_rank, Cholesky, DenseMatrix, DenseVector, Qr};

/// `min xᵀx` subject to `a·x = b`, with `a` of shape m×n, m ≤ n.
#[derive(Debug, Clone, PartialEq)]
pub struct LeastNormProblem {
    a: DenseMatrix,
    b: DenseVector,
}

impl LeastNormProblem {
    /// Checks shapes only; rank is checked when solving.
    pub fn new(a: DenseMatrix, b: DenseVector) -> Result<Self> {
        if a.rows() != b.len() {
            return Err(dim_mismatch("LeastNormProblem", a.rows(), b.len()));
        }
        if a.rows() > a.cols() {
            return Err(Error::InvalidArgument(format!(
                "more constraints ({}) than unknowns ({})",
                a.rows(),
                a.cols()
            )));
        }
        Ok(Self { a, b })
    }

    pub fn a(&self) -> &DenseMatrix {
        &self.a
    }

    pub fn b(&self) -> &DenseVector {
        &self.b
    }

    pub fn num_constraints(&self) -> usize {
        self.a.rows()
    }

    pub fn num_unknowns(&self) -> usize {
        self.a.cols()
    }
}

/// Optimal point, its covariance and the optimal value of a solved problem.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSolution {
    pub x_star: DenseVector,
    pub cov: DenseMatrix,
    /// Orthonormal basis `N` of the null space of `A`, with `cov = N·Nᵀ`.
    pub cov_factor: DenseMatrix,
    pub f_star: f64,
}

fn require_full_row_rank(a: &DenseMatrix) -> Result<()> {
    let rank = numerical_rank(a, None);
    if rank < a.rows() {
        return Err(Error::RankDeficient {
            rank,
            rows: a.rows(),
        });
    }
    Ok(())
}

/// Solves the problem in closed form.
pub fn solve_least_norm(p: &LeastNormProblem) -> Result<PhaseSolution> {
    require_full_row_rank(&p.a)?;
    let qr = Qr::new(&p.a.transpose())?;
    let y = qr.solve_rt(&p.b);
    let x_star = qr.range_basis().matvec(&y);
    let f_star = y.dot(&y);
    let cov_factor = qr.null_basis();
    let cov = (&cov_factor * &cov_factor.transpose()).symmetrized();
    Ok(PhaseSolution {
        x_star,
        cov,
        cov_factor,
        f_star,
    })
}

fn pivot_floor(a2: &DenseMatrix, cov_scale: f64, dim: usize) -> f64 {
    let row_scale = (0..a2.rows())
        .map(|i| a2.row(i).iter().map(|v| v * v).sum::<f64>())
        .fold(0.0, f64::max);
    100.0 * dim as f64 * f64::EPSILON * row_scale * cov_scale
}

/// Factors an already formed `W = A₂·Cov·A₂ᵀ` given the largest diagonal entry
/// of `Cov` and its dimension. Pivots negligible against `‖A₂‖²·‖Cov‖` make `W`
/// singular.
pub(crate) fn factor_projected(
    w: &DenseMatrix,
    a2: &DenseMatrix,
    cov_scale: f64,
    dim: usize,
) -> Result<Cholesky> {
    Cholesky::with_pivot_floor(w, pivot_floor(a2, cov_scale, dim)).map_err(|_| Error::SingularW)
}

/// `rᵀ [A₂·F·Fᵀ·A₂ᵀ]⁻¹ r` for a covariance given as `F·Fᵀ`, from the triangular
/// factor of `(A₂F)ᵀ`. The same pivot floor as [`factor_projected`] applies to
/// the squared diagonal of that factor.
pub(crate) fn factored_innovation_cost(
    a2: &DenseMatrix,
    cov_factor: &DenseMatrix,
    residual: &DenseVector,
) -> Result<f64> {
    if a2.rows() == 0 {
        return Ok(0.0);
    }
    let projected = a2 * cov_factor;
    if projected.cols() < projected.rows() {
        return Err(Error::SingularW);
    }
    let cov_scale = (0..cov_factor.rows())
        .map(|i| cov_factor.row(i).iter().map(|v| v * v).sum::<f64>())
        .fold(0.0, f64::max);
    let floor = pivot_floor(a2, cov_scale, cov_factor.rows());
    let qr = Qr::new(&projected.transpose())?;
    if qr.r().diagonal().iter().any(|d| d.is_nan() || d * d <= floor) {
        return Err(Error::SingularW);
    }
    let z = qr.solve_rt(residual);
    Ok(z.dot(&z))
}

/// Increase of the optimal value caused by appending `a2·x = b2`.
///
/// The caller forms `f** = f* + Δf`.
pub fn predict_delta_f(phase1: &PhaseSolution, a2: &DenseMatrix, b2: &DenseVector) -> Result<f64> {
    let n = phase1.x_star.len();
    if a2.cols() != n && a2.rows() > 0 {
        return Err(dim_mismatch("predict_delta_f A2 columns", n, a2.cols()));
    }
    if a2.rows() != b2.len() {
        return Err(dim_mismatch("predict_delta_f b2", a2.rows(), b2.len()));
    }
    let residual = &a2.matvec(&phase1.x_star) - b2;
    factored_innovation_cost(a2, &phase1.cov_factor, &residual)
}

/// Scores many candidate constraint sets against one shared phase-one solution.
pub fn predict_delta_f_batch(
    phase1: &PhaseSolution,
    candidates: &[(DenseMatrix, DenseVector)],
) -> Vec<Result<f64>> {
    candidates
        .par_iter()
        .map(|(a2, b2)| predict_delta_f(phase1, a2, b2))
        .collect()
}

/// Solves the problem with `a2·x = b2` appended to `p1`'s constraints.
pub fn solve_stacked(
    p1: &LeastNormProblem,
    a2: &DenseMatrix,
    b2: &DenseVector,
) -> Result<PhaseSolution> {
    if a2.rows() > 0 && a2.cols() != p1.num_unknowns() {
        return Err(dim_mismatch("solve_stacked A2 columns", p1.num_unknowns(), a2.cols()));
    }
    let a = DenseMatrix::vstack(&p1.a, a2)?;
    let b = p1.b.concat(b2);
    solve_least_norm(&LeastNormProblem::new(a, b)?)
}
