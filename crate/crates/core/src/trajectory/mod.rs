//! Two-trajectory alignment.
//!
//! A trajectory is a head pose followed by a chain of relative poses; pose `k`
//! (1-based) is `head · rel₁ ⋯ rel_{k−1}`. Every variable (head and each edge)
//! carries its own 6×6 covariance. Aligning pose `l` of trajectory A with pose
//! `r` of trajectory B imposes
//!
//! ```text
//! C(x) = Log(ᴬT_l · ᴮT_r⁻¹) = 0
//! ```
//!
//! on the stacked state `[A-head, A-edges, B-head, B-edges]` and bends both
//! chains while minimizing `Σ ‖xᵢ ⊟ x̃ᵢ‖²_{Σᵢ}`. Before the constraint exists the
//! optimum is the measurements themselves with zero cost and covariance `Σ`, so
//! the aligned cost can be predicted from the measurements alone.
//!
//! # Constraint Jacobian
//!
//! With `η = C(x)` and variables perturbed on the right (`T ⊞ ξ = T·Exp(ξ)`):
//!
//! ```text
//! ∂C/∂ξ(A variable i) =  J_l(η)⁻¹ · Ad(ᴬT_i)                 i = 1..l
//! ∂C/∂ξ(B variable j) = −J_l(η)⁻¹ · Ad(ᴬT_l · ᴮT_r⁻¹ · ᴮT_j)   j = 1..r
//! ```
//!
//! where `ᴬT_i`, `ᴮT_j` are the chained poses ending at that variable (variable 1
//! is the head, variable `k ≥ 2` is edge `k−1`). Perturbing edge `j−1` of B moves
//! `ᴮT_r⁻¹` by `Exp(−Ad(ᴮT_j)·ξ)` on the right, which is why the B-side factor
//! is `ᴮT_j` counted from the head. [`alignment_jacobian`] returns the negated
//! Jacobian `A₂ = −∂C/∂ξ`.

mod io;
mod sim;

pub use io::{read_trajectory, trajectory_from_str, trajectory_to_string, write_trajectory};
pub use sim::{simulate_pair, SimConfig, SimulatedPair};

use std::iter::once;

use nalgebra::Vector6;

use crate::error::{dim_mismatch, Error, Result};
use crate::liegroup::{adjoint, left_jacobian_inv, log, Mat6, Pose, Twist};
use crate::linalg::DenseMatrix;
use crate::nlpredict::{
    solve_nl, Constraint, Diagnostics, ManifoldProblem, SolverOptions, TangentCovariance,
};
use crate::DenseVector;

/// Floor on the denominator of the relative error.
pub const REL_ERROR_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    head: Pose,
    rel_poses: Vec<Pose>,
    covariances: Vec<Mat6>,
}

fn check_spd(c: &Mat6) -> Result<()> {
    if !c.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite { index: 0 });
    }
    let asym = (c - c.transpose()).abs().max();
    if asym > 1e-12 * c.abs().max().max(f64::MIN_POSITIVE) || c.cholesky().is_none() {
        return Err(Error::NotSpd);
    }
    Ok(())
}

impl Trajectory {
    /// `covariances` holds the head covariance followed by one per edge.
    pub fn new(head: Pose, rel_poses: Vec<Pose>, covariances: Vec<Mat6>) -> Result<Self> {
        if covariances.len() != rel_poses.len() + 1 {
            return Err(dim_mismatch(
                "Trajectory covariances",
                rel_poses.len() + 1,
                covariances.len(),
            ));
        }
        covariances.iter().try_for_each(check_spd)?;
        Ok(Self {
            head,
            rel_poses,
            covariances,
        })
    }

    /// Rebuilds a trajectory from its variables `[head, edges...]`.
    pub fn from_variables(vars: &[Pose], covariances: Vec<Mat6>) -> Result<Self> {
        let (head, rel) = vars
            .split_first()
            .ok_or_else(|| Error::InvalidArgument("trajectory needs a head pose".into()))?;
        Self::new(*head, rel.to_vec(), covariances)
    }

    pub fn head(&self) -> &Pose {
        &self.head
    }

    pub fn rel_poses(&self) -> &[Pose] {
        &self.rel_poses
    }

    pub fn covariances(&self) -> &[Mat6] {
        &self.covariances
    }

    pub fn num_edges(&self) -> usize {
        self.rel_poses.len()
    }

    pub fn num_poses(&self) -> usize {
        self.rel_poses.len() + 1
    }

    /// `[head, edges...]`, the order used in the stacked state.
    pub fn variables(&self) -> Vec<Pose> {
        once(self.head).chain(self.rel_poses.iter().copied()).collect()
    }

    /// Pose `k` (1-based): head times the first `k − 1` relative poses.
    pub fn chain_pose(&self, k: usize) -> Result<Pose> {
        self.check_index(k)?;
        Ok(Pose::compose_chain(once(&self.head).chain(&self.rel_poses[..k - 1])))
    }

    /// All `N + 1` chained poses.
    pub fn chained_poses(&self) -> Vec<Pose> {
        chain_prefixes(&self.variables(), self.num_poses())
    }

    /// The same trajectory moved rigidly by `g` (left-multiplies the head).
    pub fn transformed(&self, g: &Pose) -> Trajectory {
        Trajectory {
            head: g * &self.head,
            ..self.clone()
        }
    }

    fn check_index(&self, k: usize) -> Result<()> {
        if k == 0 || k > self.num_poses() {
            return Err(Error::IndexOutOfRange {
                index: k,
                max: self.num_poses(),
            });
        }
        Ok(())
    }
}

/// Chained poses `vars[0]·…·vars[i]` for `i < count`, re-orthonormalized on the
/// same schedule as [`Pose::compose_chain`].
fn chain_prefixes(vars: &[Pose], count: usize) -> Vec<Pose> {
    let mut out = Vec::with_capacity(count);
    let mut acc = Pose::identity();
    for (k, v) in vars[..count].iter().enumerate() {
        acc = acc * *v;
        if (k + 1) % crate::liegroup::REORTHONORMALIZE_EVERY == 0 {
            acc = acc.orthonormalized();
        }
        out.push(acc);
    }
    out
}

/// Requires `ᴬT_l = ᴮT_r`; both indices are 1-based pose indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AlignmentPair {
    pub l: usize,
    pub r: usize,
}

impl AlignmentPair {
    pub fn new(l: usize, r: usize) -> Self {
        Self { l, r }
    }

    fn validate(&self, a: &Trajectory, b: &Trajectory) -> Result<()> {
        a.check_index(self.l)?;
        b.check_index(self.r)
    }
}

/// Per-variable blocks of `∂C/∂ξ` and the residual `η`, evaluated at the given
/// variables of both trajectories.
struct JacobianBlocks {
    a: Vec<Mat6>,
    b: Vec<Mat6>,
    eta: Twist,
}

fn jacobian_blocks(a_vars: &[Pose], b_vars: &[Pose], l: usize, r: usize) -> Result<JacobianBlocks> {
    let a_chain = chain_prefixes(a_vars, l);
    let b_chain = chain_prefixes(b_vars, r);
    let offset = a_chain[l - 1] * b_chain[r - 1].inverse();
    let eta = log(&offset)?;
    let j_inv = left_jacobian_inv(&eta)?;
    let a = a_chain.iter().map(|t| j_inv * adjoint(t)).collect();
    let b = b_chain.iter().map(|t| -(j_inv * adjoint(&(offset * *t)))).collect();
    Ok(JacobianBlocks { a, b, eta })
}

/// `A₂ = −∂C/∂ξ` over the full stacked tangent space (6 rows,
/// `6·(N_A + 1 + N_B + 1)` columns) and `η = Log(ᴬT_l·ᴮT_r⁻¹)`.
pub fn alignment_jacobian(
    a: &Trajectory,
    b: &Trajectory,
    pair: AlignmentPair,
) -> Result<(DenseMatrix, Twist)> {
    pair.validate(a, b)?;
    let blocks = jacobian_blocks(&a.variables(), &b.variables(), pair.l, pair.r)?;
    let jac = assemble_jacobian(&blocks, a.num_poses(), b.num_poses());
    Ok((jac.scale(-1.0), blocks.eta))
}

fn assemble_jacobian(blocks: &JacobianBlocks, n_a: usize, n_b: usize) -> DenseMatrix {
    let mut jac = DenseMatrix::zeros(6, 6 * (n_a + n_b));
    for (i, blk) in blocks.a.iter().enumerate() {
        jac.set_block(0, 6 * i, &DenseMatrix::from(*blk));
    }
    for (j, blk) in blocks.b.iter().enumerate() {
        jac.set_block(0, 6 * (n_a + j), &DenseMatrix::from(*blk));
    }
    jac
}

/// Predicted optimal cost of aligning `pair`, from the measurements alone:
/// `Δf = ηᵀ [A₂ Σ A₂ᵀ]⁻¹ η` with block-diagonal `Σ`.
pub fn predict_alignment_cost(a: &Trajectory, b: &Trajectory, pair: AlignmentPair) -> Result<f64> {
    pair.validate(a, b)?;
    let a_chain = chain_prefixes(&a.variables(), pair.l);
    let b_chain = chain_prefixes(&b.variables(), pair.r);
    let offset = a_chain[pair.l - 1] * b_chain[pair.r - 1].inverse();
    let eta = log(&offset)?;
    // A₂ᵢ = ±J_l⁻¹·Adᵢ, so A₂ΣA₂ᵀ = J_l⁻¹ (Σᵢ Adᵢ Σᵢ Adᵢᵀ) J_l⁻ᵀ
    let mut inner = Mat6::zeros();
    for (t, cov) in a_chain.iter().zip(&a.covariances) {
        let ad = adjoint(t);
        inner += ad * cov * ad.transpose();
    }
    for (t, cov) in b_chain.iter().zip(&b.covariances) {
        let ad = adjoint(&(offset * *t));
        inner += ad * cov * ad.transpose();
    }
    let j_inv = left_jacobian_inv(&eta)?;
    let w = j_inv * inner * j_inv.transpose();
    let w = (w + w.transpose()) * 0.5;
    let chol = w.cholesky().ok_or(Error::SingularW)?;
    let eta = eta.to_vector();
    let solved: Vector6<f64> = chol.solve(&eta);
    Ok(eta.dot(&solved).max(0.0))
}

/// `C(x) = Log(ᴬT_l·ᴮT_r⁻¹)` on the stacked state of two trajectories.
#[derive(Debug, Clone, Copy)]
pub struct AlignmentConstraint {
    /// Number of A variables (`N_A + 1`); B variables follow.
    pub a_len: usize,
    pub pair: AlignmentPair,
}

impl AlignmentConstraint {
    fn split<'a>(&self, x: &'a [Pose]) -> (&'a [Pose], &'a [Pose]) {
        x.split_at(self.a_len)
    }
}

impl Constraint<Pose> for AlignmentConstraint {
    fn dim(&self) -> usize {
        6
    }

    fn evaluate(&self, x: &[Pose]) -> Result<DenseVector> {
        let (a, b) = self.split(x);
        let ta = Pose::compose_chain(&a[..self.pair.l]);
        let tb = Pose::compose_chain(&b[..self.pair.r]);
        let eta = log(&(ta * tb.inverse()))?;
        Ok(DenseVector::from(eta.to_vector()))
    }

    fn jacobian(&self, x: &[Pose]) -> Option<Result<DenseMatrix>> {
        let (a, b) = self.split(x);
        Some(
            jacobian_blocks(a, b, self.pair.l, self.pair.r)
                .map(|blocks| assemble_jacobian(&blocks, a.len(), b.len())),
        )
    }
}

fn weight_blocks(a: &Trajectory, b: &Trajectory) -> Vec<DenseMatrix> {
    a.covariances
        .iter()
        .chain(&b.covariances)
        .map(|c| DenseMatrix::from(*c))
        .collect()
}

/// The alignment problem for `pair`, with the measurements as `x̃`.
pub fn alignment_problem(
    a: &Trajectory,
    b: &Trajectory,
    pair: AlignmentPair,
) -> Result<ManifoldProblem<Pose>> {
    pair.validate(a, b)?;
    let x_tilde: Vec<Pose> = a.variables().into_iter().chain(b.variables()).collect();
    Ok(ManifoldProblem::new(x_tilde, weight_blocks(a, b))?.with_constraint(AlignmentConstraint {
        a_len: a.num_poses(),
        pair,
    }))
}

#[derive(Debug, Clone)]
pub struct AlignmentSolution {
    pub f_real: f64,
    pub a: Trajectory,
    pub b: Trajectory,
    pub cov: TangentCovariance,
    pub diagnostics: Diagnostics,
}

/// Solves the alignment problem from the measurements and returns the optimal
/// cost and both bent trajectories.
pub fn solve_alignment(
    a: &Trajectory,
    b: &Trajectory,
    pair: AlignmentPair,
    opts: &SolverOptions,
) -> Result<AlignmentSolution> {
    let problem = alignment_problem(a, b, pair)?;
    let sol = solve_nl(&problem, problem.x_tilde(), opts)?;
    let (xa, xb) = sol.x_star.split_at(a.num_poses());
    Ok(AlignmentSolution {
        f_real: sol.f_star,
        a: Trajectory::from_variables(xa, a.covariances.clone())?,
        b: Trajectory::from_variables(xb, b.covariances.clone())?,
        cov: sol.cov,
        diagnostics: sol.diagnostics,
    })
}

/// Predicted and (optionally) solved cost of one pair, with wall-clock timings
/// in seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PredictionReport {
    pub delta_f: f64,
    pub f_real: Option<f64>,
    pub rel_error: Option<f64>,
    pub t_predict: f64,
    pub t_solve: Option<f64>,
}

impl PredictionReport {
    pub fn new(delta_f: f64, f_real: Option<f64>, t_predict: f64, t_solve: Option<f64>) -> Self {
        Self {
            delta_f,
            f_real,
            rel_error: f_real.map(|f| relative_error(delta_f, f)),
            t_predict,
            t_solve,
        }
    }
}

/// `|predicted − real| / max(real, REL_ERROR_FLOOR)`.
pub fn relative_error(predicted: f64, real: f64) -> f64 {
    (predicted - real).abs() / real.max(REL_ERROR_FLOOR)
}
