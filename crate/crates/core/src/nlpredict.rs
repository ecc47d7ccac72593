//! Equality-constrained least distance on a product manifold:
//!
//! ```text
//! min Σᵢ ‖xᵢ ⊟ x̃ᵢ‖²_{Σᵢ}   s.t.   C(x) = 0
//! ```
//!
//! The state is a list of manifold points with one SPD weight block per point.
//! [`solve_nl`] is a sequential-linearization oracle; [`predict_delta_f_nl`]
//! estimates the cost of an additional constraint from a solved phase without
//! re-solving.

use rayon::prelude::*;

use crate::error::{dim_mismatch, Error, Result};
use crate::leastnorm::factor_projected;
use crate::liegroup::{boxminus, boxplus, left_jacobian, left_jacobian_inv, Pose, Twist};
use crate::linalg::{numerical_rank, Cholesky, DenseMatrix, DenseVector, Lu};

/// Central-difference step used wherever an analytic Jacobian is missing.
pub const FD_STEP: f64 = 1e-6;

/// Relative increase of the merit function still accepted by the line search;
/// covers round-off in evaluating large objectives near the optimum.
const MERIT_SLACK: f64 = 1e-10;

/// A point on a manifold with a retraction `⊞` and local difference `⊟`.
pub trait ManifoldPoint: Clone + Send + Sync {
    /// Tangent-space dimension.
    fn dim(&self) -> usize;

    /// `self ⊞ ξ`.
    fn retract(&self, xi: &[f64]) -> Self;

    /// `self ⊟ other`.
    fn local(&self, other: &Self) -> Result<Vec<f64>>;

    /// `∂((self ⊞ ξ) ⊟ target)/∂ξ` at `ξ = 0`.
    fn local_jacobian(&self, target: &Self) -> Result<DenseMatrix> {
        let d = self.dim();
        let mut jac = DenseMatrix::zeros(d, d);
        let mut xi = vec![0.0; d];
        for k in 0..d {
            xi[k] = FD_STEP;
            let plus = self.retract(&xi).local(target)?;
            xi[k] = -FD_STEP;
            let minus = self.retract(&xi).local(target)?;
            xi[k] = 0.0;
            for r in 0..d {
                jac[(r, k)] = (plus[r] - minus[r]) / (2.0 * FD_STEP);
            }
        }
        Ok(jac)
    }

    /// Inverse of [`ManifoldPoint::local_jacobian`].
    fn local_jacobian_inv(&self, target: &Self) -> Result<DenseMatrix> {
        Lu::new(&self.local_jacobian(target)?)
            .map(|lu| lu.inverse())
            .map_err(|_| Error::SingularH)
    }
}

impl ManifoldPoint for Pose {
    fn dim(&self) -> usize {
        6
    }

    fn retract(&self, xi: &[f64]) -> Self {
        boxplus(self, &Twist::from_slice(xi))
    }

    fn local(&self, other: &Self) -> Result<Vec<f64>> {
        Ok(boxminus(self, other)?.to_vector().as_slice().to_vec())
    }

    // (x·Exp(ξ)) ⊟ x̃ = Log(Exp(−ξ)·Exp(r)) ≈ r − J_l(r)⁻¹·ξ
    fn local_jacobian(&self, target: &Self) -> Result<DenseMatrix> {
        let r = boxminus(self, target)?;
        Ok((-left_jacobian_inv(&r)?).into())
    }

    fn local_jacobian_inv(&self, target: &Self) -> Result<DenseMatrix> {
        let r = boxminus(self, target)?;
        Ok((-left_jacobian(&r)).into())
    }
}

/// A point of a flat vector space: `x ⊞ ξ = x + ξ`, `x ⊟ y = y − x`.
#[derive(Debug, Clone, PartialEq)]
pub struct Euclidean(pub DenseVector);

impl ManifoldPoint for Euclidean {
    fn dim(&self) -> usize {
        self.0.len()
    }

    fn retract(&self, xi: &[f64]) -> Self {
        let data = self.0.iter().zip(xi).map(|(a, b)| a + b).collect();
        Euclidean(DenseVector::from_vec_unchecked(data))
    }

    fn local(&self, other: &Self) -> Result<Vec<f64>> {
        Ok(other.0.iter().zip(self.0.iter()).map(|(a, b)| a - b).collect())
    }

    fn local_jacobian(&self, _target: &Self) -> Result<DenseMatrix> {
        Ok(DenseMatrix::identity(self.dim()).scale(-1.0))
    }

    fn local_jacobian_inv(&self, target: &Self) -> Result<DenseMatrix> {
        self.local_jacobian(target)
    }
}

/// An equality constraint `C(x) = 0` over the whole state.
pub trait Constraint<P>: Send + Sync {
    /// Length of the residual vector.
    fn dim(&self) -> usize;

    fn evaluate(&self, x: &[P]) -> Result<DenseVector>;

    /// `∂C(x ⊞ ξ)/∂ξ` at `ξ = 0` over the stacked tangent space. `None` selects
    /// central finite differences.
    fn jacobian(&self, _x: &[P]) -> Option<Result<DenseMatrix>> {
        None
    }
}

/// `C(x) = b − A·x` over the concatenated coordinates of Euclidean points.
#[derive(Debug, Clone)]
pub struct LinearConstraint {
    pub a: DenseMatrix,
    pub b: DenseVector,
}

impl LinearConstraint {
    pub fn new(a: DenseMatrix, b: DenseVector) -> Result<Self> {
        if a.rows() != b.len() {
            return Err(dim_mismatch("LinearConstraint", a.rows(), b.len()));
        }
        Ok(Self { a, b })
    }
}

fn concat_points(x: &[Euclidean]) -> DenseVector {
    DenseVector::from_vec_unchecked(x.iter().flat_map(|p| p.0.iter().copied()).collect())
}

impl Constraint<Euclidean> for LinearConstraint {
    fn dim(&self) -> usize {
        self.b.len()
    }

    fn evaluate(&self, x: &[Euclidean]) -> Result<DenseVector> {
        let v = concat_points(x);
        if v.len() != self.a.cols() {
            return Err(dim_mismatch("LinearConstraint state", self.a.cols(), v.len()));
        }
        Ok(&self.b - &self.a.matvec(&v))
    }

    fn jacobian(&self, _x: &[Euclidean]) -> Option<Result<DenseMatrix>> {
        Some(Ok(self.a.scale(-1.0)))
    }
}

fn offsets_of<P: ManifoldPoint>(x: &[P]) -> Vec<usize> {
    let mut offsets = Vec::with_capacity(x.len() + 1);
    let mut acc = 0;
    offsets.push(0);
    for p in x {
        acc += p.dim();
        offsets.push(acc);
    }
    offsets
}

/// Problem data: measurements `x̃`, one weight block per point, constraints.
pub struct ManifoldProblem<P> {
    x_tilde: Vec<P>,
    sigma: Vec<DenseMatrix>,
    sigma_chol: Vec<Cholesky>,
    offsets: Vec<usize>,
    constraints: Vec<Box<dyn Constraint<P>>>,
}

impl<P: ManifoldPoint> ManifoldProblem<P> {
    /// `sigma[i]` weights `xᵢ ⊟ x̃ᵢ` and must be SPD of size `x_tilde[i].dim()`.
    pub fn new(x_tilde: Vec<P>, sigma: Vec<DenseMatrix>) -> Result<Self> {
        if x_tilde.len() != sigma.len() {
            return Err(dim_mismatch("ManifoldProblem blocks", x_tilde.len(), sigma.len()));
        }
        for (p, s) in x_tilde.iter().zip(&sigma) {
            if s.shape() != (p.dim(), p.dim()) {
                return Err(dim_mismatch(
                    "ManifoldProblem sigma block",
                    format!("{0}x{0}", p.dim()),
                    format!("{}x{}", s.rows(), s.cols()),
                ));
            }
        }
        let sigma_chol = sigma.iter().map(Cholesky::new).collect::<Result<Vec<_>>>()?;
        let offsets = offsets_of(&x_tilde);
        Ok(Self {
            x_tilde,
            sigma,
            sigma_chol,
            offsets,
            constraints: Vec::new(),
        })
    }

    pub fn with_constraint(mut self, c: impl Constraint<P> + 'static) -> Self {
        self.constraints.push(Box::new(c));
        self
    }

    pub fn add_constraint(&mut self, c: Box<dyn Constraint<P>>) {
        self.constraints.push(c);
    }

    pub fn x_tilde(&self) -> &[P] {
        &self.x_tilde
    }

    pub fn sigma(&self) -> &[DenseMatrix] {
        &self.sigma
    }

    pub fn tangent_dim(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    pub fn constraint_dim(&self) -> usize {
        self.constraints.iter().map(|c| c.dim()).sum()
    }

    /// `Σᵢ (xᵢ ⊟ x̃ᵢ)ᵀ Σᵢ⁻¹ (xᵢ ⊟ x̃ᵢ)`.
    pub fn objective(&self, x: &[P]) -> Result<f64> {
        self.check_state(x)?;
        let mut f = 0.0;
        for ((p, t), chol) in x.iter().zip(&self.x_tilde).zip(&self.sigma_chol) {
            let r = DenseVector::from_vec_unchecked(p.local(t)?);
            f += chol.inv_quad_form(&r);
        }
        Ok(f)
    }

    /// Stacked residual of all constraints.
    pub fn constraint_residual(&self, x: &[P]) -> Result<DenseVector> {
        let mut out = Vec::with_capacity(self.constraint_dim());
        for c in &self.constraints {
            out.extend(evaluate_checked(c.as_ref(), x)?.into_vec());
        }
        Ok(DenseVector::from_vec_unchecked(out))
    }

    fn check_state(&self, x: &[P]) -> Result<()> {
        if x.len() != self.x_tilde.len() || offsets_of(x) != self.offsets {
            return Err(dim_mismatch("state", self.tangent_dim(), offsets_of(x).last().unwrap()));
        }
        Ok(())
    }

    fn stacked_jacobian(&self, x: &[P]) -> Result<DenseMatrix> {
        let n = self.tangent_dim();
        let mut g = DenseMatrix::zeros(self.constraint_dim(), n);
        let mut row = 0;
        for c in &self.constraints {
            let (a, _) = linearize_constraint(c.as_ref(), x)?;
            g.set_block(row, 0, &a.scale(-1.0));
            row += c.dim();
        }
        Ok(g)
    }
}

fn evaluate_checked<P>(c: &dyn Constraint<P>, x: &[P]) -> Result<DenseVector> {
    let v = c.evaluate(x).map_err(|e| match e {
        Error::EvaluationFailure(_) | Error::NearPiRotation { .. } => e,
        other => Error::EvaluationFailure(other.to_string()),
    })?;
    if v.len() != c.dim() {
        return Err(Error::EvaluationFailure(format!(
            "constraint returned {} values, declared {}",
            v.len(),
            c.dim()
        )));
    }
    Ok(v)
}

fn numeric_jacobian<P: ManifoldPoint>(c: &dyn Constraint<P>, x: &[P]) -> Result<DenseMatrix> {
    let offsets = offsets_of(x);
    let mut jac = DenseMatrix::zeros(c.dim(), *offsets.last().unwrap());
    let mut work = x.to_vec();
    for (i, p) in x.iter().enumerate() {
        let mut xi = vec![0.0; p.dim()];
        for k in 0..p.dim() {
            xi[k] = FD_STEP;
            work[i] = p.retract(&xi);
            let plus = evaluate_checked(c, &work)?;
            xi[k] = -FD_STEP;
            work[i] = p.retract(&xi);
            let minus = evaluate_checked(c, &work)?;
            xi[k] = 0.0;
            for r in 0..c.dim() {
                jac[(r, offsets[i] + k)] = (plus[r] - minus[r]) / (2.0 * FD_STEP);
            }
        }
        work[i] = p.clone();
    }
    Ok(jac)
}

/// Linearizes `C` at `x` into `A·ξ = b` with `A = −∂C(x ⊞ ξ)/∂ξ` and `b = C(x)`.
pub fn linearize_constraint<P: ManifoldPoint>(
    c: &dyn Constraint<P>,
    x: &[P],
) -> Result<(DenseMatrix, DenseVector)> {
    let b = evaluate_checked(c, x)?;
    let n: usize = x.iter().map(|p| p.dim()).sum();
    let jac = match c.jacobian(x) {
        Some(j) => j?,
        None => numeric_jacobian(c, x)?,
    };
    if jac.shape() != (c.dim(), n) {
        return Err(dim_mismatch(
            "constraint jacobian",
            format!("{}x{}", c.dim(), n),
            format!("{}x{}", jac.rows(), jac.cols()),
        ));
    }
    Ok((jac.scale(-1.0), b))
}

/// Covariance in the tangent space of a solution, kept in factored form:
/// `Cov = Q − U·S⁻¹·Uᵀ` with block-diagonal `Q = H⁻¹ΣH⁻ᵀ`, `U = Q·Gᵀ` and
/// `S = G·Q·Gᵀ`, where `G` is the constraint Jacobian.
#[derive(Debug, Clone)]
pub struct TangentCovariance {
    blocks: Vec<DenseMatrix>,
    offsets: Vec<usize>,
    coupling: DenseMatrix,
    schur: Option<Cholesky>,
}

impl TangentCovariance {
    /// Block-diagonal covariance with no constraint correction.
    pub fn block_diagonal(blocks: Vec<DenseMatrix>) -> Self {
        let mut offsets = vec![0];
        for b in &blocks {
            offsets.push(offsets.last().unwrap() + b.rows());
        }
        let n = *offsets.last().unwrap();
        Self {
            blocks,
            offsets,
            coupling: DenseMatrix::zeros(n, 0),
            schur: None,
        }
    }

    fn constrained(blocks: Vec<DenseMatrix>, g: &DenseMatrix) -> Result<Self> {
        let mut cov = Self::block_diagonal(blocks);
        if g.rows() == 0 {
            return Ok(cov);
        }
        let u = cov.apply_blocks_transposed(g);
        let s = (g * &u).symmetrized();
        let chol = Cholesky::new(&s).map_err(|_| Error::RankDeficient {
            rank: numerical_rank(g, None),
            rows: g.rows(),
        })?;
        cov.coupling = u;
        cov.schur = Some(chol);
        Ok(cov)
    }

    pub fn dim(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    pub fn blocks(&self) -> &[DenseMatrix] {
        &self.blocks
    }

    /// `Q·aᵀ` for a matrix `a` with `dim()` columns.
    fn apply_blocks_transposed(&self, a: &DenseMatrix) -> DenseMatrix {
        let m = a.rows();
        let mut out = DenseMatrix::zeros(self.dim(), m);
        for (q, w) in self.blocks.iter().zip(self.offsets.windows(2)) {
            let (off, d) = (w[0], w[1] - w[0]);
            for c in 0..m {
                let arow = &a.row(c)[off..off + d];
                if arow.iter().all(|&v| v == 0.0) {
                    continue;
                }
                for r in 0..d {
                    out[(off + r, c)] = q.row(r).iter().zip(arow).map(|(x, y)| x * y).sum();
                }
            }
        }
        out
    }

    fn max_diagonal(&self) -> f64 {
        self.blocks
            .iter()
            .flat_map(|b| b.diagonal())
            .fold(0.0, f64::max)
    }

    /// `a·Cov·aᵀ` without materializing `Cov`.
    pub fn project(&self, a: &DenseMatrix) -> Result<DenseMatrix> {
        if a.cols() != self.dim() {
            return Err(dim_mismatch("TangentCovariance::project", self.dim(), a.cols()));
        }
        let qa = self.apply_blocks_transposed(a);
        let mut w = a * &qa;
        if let Some(chol) = &self.schur {
            let v = a * &self.coupling;
            let correction = &v * &chol.solve(&v.transpose());
            w = &w - &correction;
        }
        Ok(w.symmetrized())
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let n = self.dim();
        let mut out = DenseMatrix::zeros(n, n);
        for (q, w) in self.blocks.iter().zip(self.offsets.windows(2)) {
            out.set_block(w[0], w[0], q);
        }
        if let Some(chol) = &self.schur {
            let corr = &self.coupling * &chol.solve(&self.coupling.transpose());
            out = &out - &corr;
        }
        out.symmetrized()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Stop once [`Diagnostics::kkt_residual`] is below this.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Step halvings tried per iteration before giving up.
    pub max_halvings: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-10,
            max_iterations: 100,
            max_halvings: 40,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Diagnostics {
    pub iterations: usize,
    /// `max(‖C(x)‖∞, ‖ξ‖∞ / max(1, ‖ξ₀‖∞, ‖U·λ‖∞))` at the returned point, where
    /// `ξ = ξ₀ − U·λ` is the step; near the optimum the two terms cancel, so the
    /// step is measured against their size.
    pub kkt_residual: f64,
    pub constraint_residual: f64,
    pub converged: bool,
}

#[derive(Debug, Clone)]
pub struct NLPhaseSolution<P> {
    pub x_star: Vec<P>,
    pub cov: TangentCovariance,
    pub f_star: f64,
    pub diagnostics: Diagnostics,
}

/// Per-point linearization of the objective at `x`: the Gauss-Newton step to
/// `x̃` (`−H⁻¹r` blockwise) and the blocks `H⁻¹ΣH⁻ᵀ`.
fn linearize_objective<P: ManifoldPoint>(
    p: &ManifoldProblem<P>,
    x: &[P],
) -> Result<(Vec<f64>, Vec<DenseMatrix>)> {
    let mut step = Vec::with_capacity(p.tangent_dim());
    let mut blocks = Vec::with_capacity(x.len());
    for ((xi, ti), sigma) in x.iter().zip(&p.x_tilde).zip(&p.sigma) {
        let r = DenseVector::from_vec_unchecked(xi.local(ti)?);
        let j_inv = xi.local_jacobian_inv(ti)?;
        step.extend(j_inv.matvec(&r).iter().map(|v| -v));
        blocks.push((&j_inv * sigma).try_mul(&j_inv.transpose())?.symmetrized());
    }
    Ok((step, blocks))
}

fn retract_all<P: ManifoldPoint>(x: &[P], offsets: &[usize], step: &[f64], alpha: f64) -> Vec<P> {
    x.iter()
        .zip(offsets.windows(2))
        .map(|(p, w)| {
            let xi: Vec<f64> = step[w[0]..w[1]].iter().map(|v| alpha * v).collect();
            p.retract(&xi)
        })
        .collect()
}

fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Sequential linearization with an exact KKT solve per step.
///
/// Each iteration linearizes the residuals and constraints at the current point,
/// solves the resulting linear least-distance subproblem by eliminating the
/// block-diagonal weight, and retracts. Steps are halved until an ℓ₁ merit
/// `f + μ‖C‖₁` stops increasing. Returns the final iterate whether or not it
/// converged; check [`Diagnostics::converged`].
pub fn solve_nl_best_effort<P: ManifoldPoint>(
    p: &ManifoldProblem<P>,
    init: &[P],
    opts: &SolverOptions,
) -> Result<NLPhaseSolution<P>> {
    p.check_state(init)?;
    let mut x = init.to_vec();
    let mut mu = 0.0f64;
    let mut diagnostics = Diagnostics {
        iterations: 0,
        kkt_residual: f64::INFINITY,
        constraint_residual: f64::INFINITY,
        converged: false,
    };
    let merit = |x: &[P], mu: f64| -> Result<(f64, f64)> {
        let c = p.constraint_residual(x)?;
        Ok((p.objective(x)? + mu * c.iter().map(|v| v.abs()).sum::<f64>(), c.norm_inf()))
    };

    loop {
        let (step0, blocks) = linearize_objective(p, &x)?;
        let c = p.constraint_residual(&x)?;
        let g = p.stacked_jacobian(&x)?;
        let cov = TangentCovariance::constrained(blocks, &g)?;

        // λ = S⁻¹(C + G·ξ₀),  ξ = ξ₀ − U·λ
        let mut step = step0;
        let mut lambda_inf = 0.0;
        let mut term_scale = norm_inf(&step);
        if let Some(chol) = &cov.schur {
            let step_vec = DenseVector::from_vec_unchecked(step.clone());
            let rhs = &c + &g.matvec(&step_vec);
            let lambda = chol.solve_vec(&rhs);
            lambda_inf = lambda.norm_inf();
            let correction = cov.coupling.matvec(&lambda);
            term_scale = term_scale.max(correction.norm_inf());
            for (s, d) in step.iter_mut().zip(correction.iter()) {
                *s -= d;
            }
        }

        diagnostics.constraint_residual = c.norm_inf();
        diagnostics.kkt_residual = c.norm_inf().max(norm_inf(&step) / term_scale.max(1.0));
        if diagnostics.kkt_residual < opts.tolerance {
            diagnostics.converged = true;
            let f_star = p.objective(&x)?;
            return Ok(NLPhaseSolution {
                x_star: x,
                cov,
                f_star,
                diagnostics,
            });
        }
        if diagnostics.iterations >= opts.max_iterations {
            break;
        }
        diagnostics.iterations += 1;

        // the multiplier of f (no ½) is 2λ; the exact-penalty weight must exceed it
        mu = mu.max(4.0 * lambda_inf + 1.0);
        let (phi_old, _) = merit(&x, mu)?;
        let slack = MERIT_SLACK * phi_old.abs().max(1.0);
        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..=opts.max_halvings {
            let candidate = retract_all(&x, &p.offsets, &step, alpha);
            if let Ok((phi, _)) = merit(&candidate, mu) {
                if phi <= phi_old + slack {
                    accepted = Some(candidate);
                    break;
                }
            }
            alpha *= 0.5;
        }
        match accepted {
            Some(next) => x = next,
            None => break,
        }
    }

    let (_, blocks) = linearize_objective(p, &x)?;
    let g = p.stacked_jacobian(&x)?;
    let cov = TangentCovariance::constrained(blocks, &g)?;
    let f_star = p.objective(&x)?;
    Ok(NLPhaseSolution {
        x_star: x,
        cov,
        f_star,
        diagnostics,
    })
}

/// [`solve_nl_best_effort`] that reports non-convergence as an error.
pub fn solve_nl<P: ManifoldPoint>(
    p: &ManifoldProblem<P>,
    init: &[P],
    opts: &SolverOptions,
) -> Result<NLPhaseSolution<P>> {
    let sol = solve_nl_best_effort(p, init, opts)?;
    if !sol.diagnostics.converged {
        return Err(Error::NoConvergence {
            iterations: sol.diagnostics.iterations,
            kkt_residual: sol.diagnostics.kkt_residual,
        });
    }
    Ok(sol)
}

/// `Δf ≈ C₂(x*)ᵀ [A₂·Cov(x*)·A₂ᵀ]⁻¹ C₂(x*)` for a new constraint `C₂`.
pub fn predict_delta_f_nl<P: ManifoldPoint>(
    sol: &NLPhaseSolution<P>,
    c2: &dyn Constraint<P>,
) -> Result<f64> {
    let (a2, b2) = linearize_constraint(c2, &sol.x_star)?;
    if a2.rows() == 0 {
        return Ok(0.0);
    }
    let w = sol.cov.project(&a2)?;
    let chol = factor_projected(&w, &a2, sol.cov.max_diagonal(), sol.cov.dim())?;
    Ok(chol.inv_quad_form(&b2))
}

/// Scores several candidate constraints against one solution in parallel.
pub fn predict_delta_f_nl_batch<P: ManifoldPoint>(
    sol: &NLPhaseSolution<P>,
    candidates: &[&dyn Constraint<P>],
) -> Vec<Result<f64>> {
    candidates
        .par_iter()
        .map(|c| predict_delta_f_nl(sol, *c))
        .collect()
}
