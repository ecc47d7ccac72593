//! Least-distance problems
//!
//! ```text
//! min (Hx − h)ᵀ Σ⁻¹ (Hx − h)   s.t.  A·x = b
//! ```
//!
//! with invertible `H` and SPD `Σ`. The substitution `y = Σ^{-1/2}(Hx − h)` turns
//! this into a least-norm problem in `y`, so the solution and the optimal-value
//! prediction carry over from [`crate::leastnorm`]. The covariance of `x*` is
//! reported in closed form as `Q − QAᵀ(AQAᵀ)⁻¹AQ` with `Q = H⁻¹ΣH⁻ᵀ`.

use crate::error::{dim_mismatch, Error, Result};
use crate::leastnorm::{factored_innovation_cost, solve_least_norm, LeastNormProblem};
use crate::linalg::{numerical_rank, symmetric_sqrt, Cholesky, DenseMatrix, DenseVector, Lu};

#[derive(Debug, Clone, PartialEq)]
pub struct LeastDistanceProblem {
    /// `H`, n×n and invertible.
    pub observation: DenseMatrix,
    /// `Σ`, n×n SPD.
    pub covariance: DenseMatrix,
    /// `h`, length n.
    pub measurement: DenseVector,
    /// Constraint matrix, m×n with full row rank.
    pub a: DenseMatrix,
    pub b: DenseVector,
}

impl LeastDistanceProblem {
    pub fn new(
        observation: DenseMatrix,
        covariance: DenseMatrix,
        measurement: DenseVector,
        a: DenseMatrix,
        b: DenseVector,
    ) -> Result<Self> {
        let n = measurement.len();
        if observation.shape() != (n, n) {
            return Err(dim_mismatch("LeastDistanceProblem H", format!("{n}x{n}"), format!("{:?}", observation.shape())));
        }
        if covariance.shape() != (n, n) {
            return Err(dim_mismatch("LeastDistanceProblem Σ", format!("{n}x{n}"), format!("{:?}", covariance.shape())));
        }
        if a.rows() > 0 && a.cols() != n {
            return Err(dim_mismatch("LeastDistanceProblem A", n, a.cols()));
        }
        if a.rows() != b.len() {
            return Err(dim_mismatch("LeastDistanceProblem b", a.rows(), b.len()));
        }
        Ok(Self {
            observation,
            covariance,
            measurement,
            a,
            b,
        })
    }

    pub fn dim(&self) -> usize {
        self.measurement.len()
    }

    /// The same objective with `a2·x = b2` appended to the constraints.
    pub fn stacked(&self, a2: &DenseMatrix, b2: &DenseVector) -> Result<Self> {
        Self::new(
            self.observation.clone(),
            self.covariance.clone(),
            self.measurement.clone(),
            DenseMatrix::vstack(&self.a, a2)?,
            self.b.concat(b2),
        )
    }

    /// `(Hx − h)ᵀ Σ⁻¹ (Hx − h)`.
    pub fn objective(&self, x: &DenseVector) -> Result<f64> {
        let r = &self.observation.matvec(x) - &self.measurement;
        Ok(Cholesky::new(&self.covariance)?.inv_quad_form(&r))
    }
}

/// Affine map `x = M·y + c` with `M = H⁻¹Σ^{1/2}` and `c = H⁻¹h`.
#[derive(Debug, Clone, PartialEq)]
pub struct VariableTransform {
    pub map: DenseMatrix,
    pub offset: DenseVector,
}

impl VariableTransform {
    pub fn to_x(&self, y: &DenseVector) -> DenseVector {
        &self.map.matvec(y) + &self.offset
    }

    /// Pushes a covariance of `y` through the map: `M·Cov(y)·Mᵀ`.
    pub fn covariance_to_x(&self, cov_y: &DenseMatrix) -> DenseMatrix {
        self.map.sandwich(cov_y)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LDPhaseSolution {
    pub x_star: DenseVector,
    pub cov: DenseMatrix,
    /// `F` with `cov = F·Fᵀ`, carried over from the least-norm form.
    pub cov_factor: DenseMatrix,
    pub f_star: f64,
}

fn factor_observation(h: &DenseMatrix) -> Result<Lu> {
    Lu::new(h).map_err(|e| match e {
        Error::SingularBlock => Error::SingularH,
        other => other,
    })
}

/// Rewrites the problem as `min yᵀy s.t. A·H⁻¹Σ^{1/2}·y = b − A·H⁻¹h`.
pub fn to_least_norm(p: &LeastDistanceProblem) -> Result<(LeastNormProblem, VariableTransform)> {
    let h_lu = factor_observation(&p.observation)?;
    let sqrt = symmetric_sqrt(&p.covariance)?;
    let map = h_lu.solve(&sqrt);
    let offset = h_lu.solve_vec(&p.measurement);
    let a_map = if p.a.rows() == 0 {
        DenseMatrix::zeros(0, p.dim())
    } else {
        &p.a * &map
    };
    let rhs = if p.a.rows() == 0 {
        DenseVector::zeros(0)
    } else {
        &p.b - &p.a.matvec(&offset)
    };
    Ok((LeastNormProblem::new(a_map, rhs)?, VariableTransform { map, offset }))
}

/// `Q − QAᵀ(AQAᵀ)⁻¹AQ` with `Q = H⁻¹ΣH⁻ᵀ`.
pub fn explicit_covariance(
    observation: &DenseMatrix,
    covariance: &DenseMatrix,
    a: &DenseMatrix,
) -> Result<DenseMatrix> {
    let h_lu = factor_observation(observation)?;
    let h_inv_sigma = h_lu.solve(covariance);
    let q = h_lu.solve(&h_inv_sigma.transpose()).transpose().symmetrized();
    if a.rows() == 0 {
        return Ok(q);
    }
    let aq = a * &q;
    let gram = Cholesky::new(&(&aq * &a.transpose()).symmetrized()).map_err(|_| Error::RankDeficient {
        rank: numerical_rank(a, None),
        rows: a.rows(),
    })?;
    Ok((&q - &(&aq.transpose() * &gram.solve(&aq))).symmetrized())
}

/// Solves the problem through its least-norm form; the covariance comes from the
/// explicit `Q` formula.
pub fn solve_ld(p: &LeastDistanceProblem) -> Result<LDPhaseSolution> {
    let (ln, transform) = to_least_norm(p)?;
    let y = solve_least_norm(&ln)?;
    let x_star = transform.to_x(&y.x_star);
    let cov = explicit_covariance(&p.observation, &p.covariance, &p.a)?;
    let cov_factor = &transform.map * &y.cov_factor;
    Ok(LDPhaseSolution {
        x_star,
        cov,
        cov_factor,
        f_star: y.f_star,
    })
}

/// Increase of the optimal value caused by appending `a2·x = b2`.
pub fn predict_delta_f_ld(sol: &LDPhaseSolution, a2: &DenseMatrix, b2: &DenseVector) -> Result<f64> {
    let n = sol.x_star.len();
    if a2.rows() > 0 && a2.cols() != n {
        return Err(dim_mismatch("predict_delta_f_ld A2 columns", n, a2.cols()));
    }
    if a2.rows() != b2.len() {
        return Err(dim_mismatch("predict_delta_f_ld b2", a2.rows(), b2.len()));
    }
    let residual = &a2.matvec(&sol.x_star) - b2;
    factored_innovation_cost(a2, &sol.cov_factor, &residual)
}
