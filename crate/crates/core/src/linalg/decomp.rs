//! Factorizations and the solves built on them.
//!
//! Everything here is dense and written for the small, well-conditioned systems
//! the rest of the crate produces (tens to a few hundred unknowns).

use super::{DenseMatrix, DenseVector};
use crate::error::{dim_mismatch, Error, Result};

/// Relative symmetry tolerance accepted by the SPD routines.
pub const SYMMETRY_TOL: f64 = 1e-12;

const JACOBI_MAX_SWEEPS: usize = 100;

fn require_square(op: &'static str, m: &DenseMatrix) -> Result<()> {
    if !m.is_square() {
        return Err(dim_mismatch(op, "square", format!("{}x{}", m.rows(), m.cols())));
    }
    Ok(())
}

/// Lower-triangular Cholesky factor `L` with `M = L·Lᵀ`.
#[derive(Debug, Clone)]
pub struct Cholesky {
    l: DenseMatrix,
}

impl Cholesky {
    /// Factors `m`, treating any pivot at or below `n·ε·max(diag)` as a failure.
    pub fn new(m: &DenseMatrix) -> Result<Self> {
        require_square("cholesky", m)?;
        if m.asymmetry() > SYMMETRY_TOL {
            return Err(Error::NotSpd);
        }
        let max_diag = m.diagonal().into_iter().fold(0.0, f64::max);
        let floor = m.rows() as f64 * f64::EPSILON * max_diag;
        Self::with_pivot_floor(m, floor)
    }

    /// Factors `m`, failing when a pivot is not strictly above `floor`.
    ///
    /// Callers that know the natural scale of the matrix (e.g. a product whose
    /// factors have known magnitude) use this to catch numerically singular input
    /// whose own diagonal is tiny.
    pub fn with_pivot_floor(m: &DenseMatrix, floor: f64) -> Result<Self> {
        require_square("cholesky", m)?;
        let n = m.rows();
        let mut l = DenseMatrix::zeros(n, n);
        for j in 0..n {
            let mut d = m[(j, j)];
            for k in 0..j {
                d -= l[(j, k)] * l[(j, k)];
            }
            if d.is_nan() || d <= floor.max(0.0) {
                return Err(Error::NotSpd);
            }
            let d = d.sqrt();
            l[(j, j)] = d;
            for i in (j + 1)..n {
                let mut s = 0.5 * (m[(i, j)] + m[(j, i)]);
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / d;
            }
        }
        Ok(Self { l })
    }

    pub fn factor(&self) -> &DenseMatrix {
        &self.l
    }

    pub fn dim(&self) -> usize {
        self.l.rows()
    }

    fn forward(&self, b: &mut [f64]) {
        let n = self.dim();
        for i in 0..n {
            let mut s = b[i];
            for k in 0..i {
                s -= self.l[(i, k)] * b[k];
            }
            b[i] = s / self.l[(i, i)];
        }
    }

    fn backward(&self, b: &mut [f64]) {
        let n = self.dim();
        for i in (0..n).rev() {
            let mut s = b[i];
            for k in (i + 1)..n {
                s -= self.l[(k, i)] * b[k];
            }
            b[i] = s / self.l[(i, i)];
        }
    }

    pub fn solve_vec(&self, rhs: &DenseVector) -> DenseVector {
        assert_eq!(rhs.len(), self.dim());
        let mut x = rhs.as_slice().to_vec();
        self.forward(&mut x);
        self.backward(&mut x);
        DenseVector::from_vec_unchecked(x)
    }

    pub fn solve(&self, rhs: &DenseMatrix) -> DenseMatrix {
        assert_eq!(rhs.rows(), self.dim());
        let t = rhs.transpose();
        let mut out = Vec::with_capacity(rhs.rows() * rhs.cols());
        for j in 0..rhs.cols() {
            let mut col = t.row(j).to_vec();
            self.forward(&mut col);
            self.backward(&mut col);
            out.extend(col);
        }
        DenseMatrix::from_parts_unchecked(rhs.cols(), rhs.rows(), out).transpose()
    }

    /// `vᵀ M⁻¹ v`, evaluated as ‖L⁻¹v‖² so the result is never negative.
    pub fn inv_quad_form(&self, v: &DenseVector) -> f64 {
        assert_eq!(v.len(), self.dim());
        let mut y = v.as_slice().to_vec();
        self.forward(&mut y);
        y.iter().map(|a| a * a).sum()
    }
}

/// Solves `M·X = rhs` for symmetric positive-definite `M`.
pub fn solve_spd(m: &DenseMatrix, rhs: &DenseMatrix) -> Result<DenseMatrix> {
    require_square("solve_spd", m)?;
    if rhs.rows() != m.rows() {
        return Err(dim_mismatch("solve_spd", m.rows(), rhs.rows()));
    }
    Ok(Cholesky::new(m)?.solve(rhs))
}

/// Householder QR of a matrix with at least as many rows as columns,
/// `M = Q·[R; 0]` with `Q` square orthogonal and `R` upper triangular.
#[derive(Debug, Clone)]
pub struct Qr {
    q: DenseMatrix,
    r: DenseMatrix,
}

impl Qr {
    pub fn new(m: &DenseMatrix) -> Result<Self> {
        let (rows, cols) = m.shape();
        if rows < cols {
            return Err(dim_mismatch("qr", format!("rows >= {cols}"), rows));
        }
        let mut a = m.clone();
        let mut q = DenseMatrix::identity(rows);
        for k in 0..cols {
            let norm = (k..rows).map(|i| a[(i, k)] * a[(i, k)]).sum::<f64>().sqrt();
            if norm == 0.0 {
                continue;
            }
            let alpha = if a[(k, k)] >= 0.0 { -norm } else { norm };
            let mut v: Vec<f64> = (k..rows).map(|i| a[(i, k)]).collect();
            v[0] -= alpha;
            let vv: f64 = v.iter().map(|x| x * x).sum();
            if vv == 0.0 {
                continue;
            }
            for j in k..cols {
                let s = 2.0 * (k..rows).map(|i| v[i - k] * a[(i, j)]).sum::<f64>() / vv;
                for i in k..rows {
                    a[(i, j)] -= s * v[i - k];
                }
            }
            for i in 0..rows {
                let s = 2.0 * (k..rows).map(|c| q[(i, c)] * v[c - k]).sum::<f64>() / vv;
                for c in k..rows {
                    q[(i, c)] -= s * v[c - k];
                }
            }
        }
        let r = DenseMatrix::from_fn(cols, cols, |i, j| if i <= j { a[(i, j)] } else { 0.0 });
        Ok(Self { q, r })
    }

    pub fn q(&self) -> &DenseMatrix {
        &self.q
    }

    pub fn r(&self) -> &DenseMatrix {
        &self.r
    }

    /// Orthonormal basis of the column space (first `cols` columns of `Q`).
    pub fn range_basis(&self) -> DenseMatrix {
        let k = self.r.rows();
        self.q.block(0, 0, self.q.rows(), k)
    }

    /// Orthonormal basis of the orthogonal complement of the column space.
    pub fn null_basis(&self) -> DenseMatrix {
        let k = self.r.rows();
        self.q.block(0, k, self.q.rows(), self.q.rows() - k)
    }

    /// Solves `Rᵀ·y = b` by forward substitution. `R` must be nonsingular.
    pub fn solve_rt(&self, b: &DenseVector) -> DenseVector {
        let n = self.r.rows();
        assert_eq!(b.len(), n);
        let mut y = b.as_slice().to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s -= self.r[(k, i)] * y[k];
            }
            y[i] = s / self.r[(i, i)];
        }
        DenseVector::from_vec_unchecked(y)
    }
}

/// LU factorization with partial pivoting, `P·M = L·U`.
#[derive(Debug, Clone)]
pub struct Lu {
    lu: DenseMatrix,
    perm: Vec<usize>,
}

impl Lu {
    /// Fails with `SingularBlock` if a pivot falls below `n·ε·max|M|`.
    pub fn new(m: &DenseMatrix) -> Result<Self> {
        require_square("lu", m)?;
        let n = m.rows();
        let mut lu = m.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let tol = n as f64 * f64::EPSILON * m.max_abs();
        for k in 0..n {
            let (p, pivot) = (k..n)
                .map(|i| (i, lu[(i, k)].abs()))
                .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if pivot <= tol || pivot == 0.0 {
                return Err(Error::SingularBlock);
            }
            if p != k {
                perm.swap(p, k);
                for j in 0..n {
                    let tmp = lu[(k, j)];
                    lu[(k, j)] = lu[(p, j)];
                    lu[(p, j)] = tmp;
                }
            }
            for i in (k + 1)..n {
                let f = lu[(i, k)] / lu[(k, k)];
                lu[(i, k)] = f;
                for j in (k + 1)..n {
                    lu[(i, j)] -= f * lu[(k, j)];
                }
            }
        }
        Ok(Self { lu, perm })
    }

    fn solve_in_place(&self, b: &[f64]) -> Vec<f64> {
        let n = self.lu.rows();
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for k in 0..i {
                x[i] -= self.lu[(i, k)] * x[k];
            }
        }
        for i in (0..n).rev() {
            for k in (i + 1)..n {
                x[i] -= self.lu[(i, k)] * x[k];
            }
            x[i] /= self.lu[(i, i)];
        }
        x
    }

    pub fn solve_vec(&self, rhs: &DenseVector) -> DenseVector {
        assert_eq!(rhs.len(), self.lu.rows());
        DenseVector::from_vec_unchecked(self.solve_in_place(rhs.as_slice()))
    }

    pub fn solve(&self, rhs: &DenseMatrix) -> DenseMatrix {
        assert_eq!(rhs.rows(), self.lu.rows());
        let t = rhs.transpose();
        let mut out = Vec::with_capacity(rhs.rows() * rhs.cols());
        for j in 0..rhs.cols() {
            out.extend(self.solve_in_place(t.row(j)));
        }
        DenseMatrix::from_parts_unchecked(rhs.cols(), rhs.rows(), out).transpose()
    }

    pub fn inverse(&self) -> DenseMatrix {
        self.solve(&DenseMatrix::identity(self.lu.rows()))
    }
}

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Returns `(eigenvalues, V)` with `M = V·diag(λ)·Vᵀ`; columns of `V` are eigenvectors.
pub fn symmetric_eigen(m: &DenseMatrix) -> Result<(Vec<f64>, DenseMatrix)> {
    require_square("symmetric_eigen", m)?;
    let n = m.rows();
    let mut a = m.symmetrized();
    let mut v = DenseMatrix::identity(n);
    let scale = a.frobenius_norm();
    for _ in 0..JACOBI_MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)] * a[(i, j)])
            .sum::<f64>()
            .sqrt();
        if off <= f64::EPSILON * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    Ok((a.diagonal(), v))
}

/// Symmetric square root `S` with `S·S = M` for SPD `M`.
pub fn symmetric_sqrt(m: &DenseMatrix) -> Result<DenseMatrix> {
    require_square("symmetric_sqrt", m)?;
    if m.asymmetry() > SYMMETRY_TOL {
        return Err(Error::NotSpd);
    }
    let (vals, v) = symmetric_eigen(m)?;
    let max = vals.iter().fold(0.0_f64, |a, &b| a.max(b));
    let floor = m.rows() as f64 * f64::EPSILON * max;
    if vals.iter().any(|&l| l <= floor) {
        return Err(Error::NotSpd);
    }
    let n = m.rows();
    let scaled = DenseMatrix::from_fn(n, n, |i, j| v[(i, j)] * vals[j].sqrt());
    Ok((&scaled * &v.transpose()).symmetrized())
}

/// Singular values in descending order (one-sided Jacobi).
pub fn singular_values(m: &DenseMatrix) -> Vec<f64> {
    // Work on the orientation with fewer columns; singular values are shared.
    let mut a = if m.rows() >= m.cols() { m.clone() } else { m.transpose() };
    let (rows, cols) = a.shape();
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..cols {
            for q in (p + 1)..cols {
                let (mut alpha, mut beta, mut gamma) = (0.0, 0.0, 0.0);
                for i in 0..rows {
                    alpha += a[(i, p)] * a[(i, p)];
                    beta += a[(i, q)] * a[(i, q)];
                    gamma += a[(i, p)] * a[(i, q)];
                }
                if gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() || gamma == 0.0 {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..rows {
                    let aip = a[(i, p)];
                    let aiq = a[(i, q)];
                    a[(i, p)] = c * aip - s * aiq;
                    a[(i, q)] = s * aip + c * aiq;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sv: Vec<f64> = (0..cols)
        .map(|j| (0..rows).map(|i| a[(i, j)] * a[(i, j)]).sum::<f64>().sqrt())
        .collect();
    sv.sort_by(|x, y| y.total_cmp(x));
    sv
}

/// Default rank cutoff: `max(rows, cols) · ε · σ_max`.
pub fn default_rank_tolerance(m: &DenseMatrix, sigma_max: f64) -> f64 {
    m.rows().max(m.cols()) as f64 * f64::EPSILON * sigma_max
}

/// Number of singular values strictly above `tol` (default cutoff when `None`).
pub fn numerical_rank(m: &DenseMatrix, tol: Option<f64>) -> usize {
    if m.rows() == 0 || m.cols() == 0 {
        return 0;
    }
    let sv = singular_values(m);
    let tol = tol.unwrap_or_else(|| default_rank_tolerance(m, sv[0]));
    sv.iter().filter(|&&s| s > tol).count()
}

/// Block LDU factors of `[[U, P], [Q, V]]`.
#[derive(Debug, Clone)]
pub struct SchurFactors {
    /// `[[I, 0], [Q·U⁻¹, I]]`
    pub lower: DenseMatrix,
    /// `[[U, 0], [0, V − Q·U⁻¹·P]]`
    pub block_diag: DenseMatrix,
    /// `[[I, U⁻¹·P], [0, I]]`
    pub upper: DenseMatrix,
}

impl SchurFactors {
    /// The Schur complement `V − Q·U⁻¹·P` (lower-right block of `block_diag`).
    pub fn complement(&self, leading: usize) -> DenseMatrix {
        let n = self.block_diag.rows() - leading;
        self.block_diag.block(leading, leading, n, n)
    }

    pub fn reconstruct(&self) -> DenseMatrix {
        &(&self.lower * &self.block_diag) * &self.upper
    }
}

/// Factors `[[U, P], [Q, V]] = lower · block_diag · upper` around an invertible `U`.
pub fn schur_decompose(
    u: &DenseMatrix,
    p: &DenseMatrix,
    q: &DenseMatrix,
    v: &DenseMatrix,
) -> Result<SchurFactors> {
    require_square("schur_decompose", u)?;
    require_square("schur_decompose", v)?;
    let (k, m) = (u.rows(), v.rows());
    if p.shape() != (k, m) {
        return Err(dim_mismatch("schur_decompose P", format!("{k}x{m}"), format!("{:?}", p.shape())));
    }
    if q.shape() != (m, k) {
        return Err(dim_mismatch("schur_decompose Q", format!("{m}x{k}"), format!("{:?}", q.shape())));
    }
    let lu = Lu::new(u)?;
    let u_inv_p = lu.solve(p);
    // Q·U⁻¹ = (U⁻ᵀ·Qᵀ)ᵀ
    let q_u_inv = Lu::new(&u.transpose())?.solve(&q.transpose()).transpose();
    let complement = v - &(q * &u_inv_p);
    let n = k + m;

    let mut lower = DenseMatrix::identity(n);
    lower.set_block(k, 0, &q_u_inv);
    let mut block_diag = DenseMatrix::zeros(n, n);
    block_diag.set_block(0, 0, u);
    block_diag.set_block(k, k, &complement);
    let mut upper = DenseMatrix::identity(n);
    upper.set_block(0, k, &u_inv_p);
    Ok(SchurFactors {
        lower,
        block_diag,
        upper,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::testing::{random_matrix, random_spd};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn m(rows: &[&[f64]]) -> DenseMatrix {
        DenseMatrix::from_rows(rows).unwrap()
    }

    #[test]
    fn solve_spd_examples() {
        let e2 = m(&[&[0.0], &[1.0], &[0.0]]);
        assert_eq!(solve_spd(&DenseMatrix::identity(3), &e2).unwrap(), e2);

        let x = solve_spd(&m(&[&[4.0, 0.0], &[0.0, 9.0]]), &m(&[&[8.0], &[27.0]])).unwrap();
        assert!((x[(0, 0)] - 2.0).abs() < 1e-15 && (x[(1, 0)] - 3.0).abs() < 1e-15);

        let a = m(&[&[2.0, 1.0], &[1.0, 2.0]]);
        let rhs = m(&[&[3.0], &[3.0]]);
        let x = solve_spd(&a, &rhs).unwrap();
        // multiply back
        assert!((&a * &x).relative_error(&rhs) < 1e-15);
        assert!((x[(0, 0)] - 1.0).abs() < 1e-15 && (x[(1, 0)] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn solve_spd_errors() {
        let indefinite = m(&[&[1.0, 2.0], &[2.0, 1.0]]);
        assert_eq!(solve_spd(&indefinite, &DenseMatrix::identity(2)).unwrap_err(), Error::NotSpd);
        let asym = m(&[&[2.0, 1.0], &[0.0, 2.0]]);
        assert_eq!(solve_spd(&asym, &DenseMatrix::identity(2)).unwrap_err(), Error::NotSpd);
        assert!(matches!(
            solve_spd(&DenseMatrix::identity(2), &DenseMatrix::identity(3)),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            solve_spd(&DenseMatrix::zeros(2, 3), &DenseMatrix::identity(2)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn symmetric_sqrt_examples() {
        assert!(symmetric_sqrt(&DenseMatrix::identity(4))
            .unwrap()
            .relative_error(&DenseMatrix::identity(4))
            < 1e-15);
        let s = symmetric_sqrt(&DenseMatrix::from_diagonal(&[4.0, 9.0])).unwrap();
        assert!(s.relative_error(&DenseMatrix::from_diagonal(&[2.0, 3.0])) < 1e-15);

        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let spd = random_spd(&mut rng, 5);
        let s = symmetric_sqrt(&spd).unwrap();
        assert!((&s * &s).relative_error(&spd) < 1e-10);
        assert!(s.asymmetry() < 1e-12);

        assert_eq!(
            symmetric_sqrt(&m(&[&[1.0, 2.0], &[2.0, 1.0]])).unwrap_err(),
            Error::NotSpd
        );
    }

    #[test]
    fn numerical_rank_examples() {
        assert_eq!(numerical_rank(&DenseMatrix::identity(3), None), 3);
        assert_eq!(numerical_rank(&m(&[&[1.0, 2.0], &[2.0, 4.0]]), None), 1);
        assert_eq!(numerical_rank(&DenseMatrix::zeros(2, 2), None), 0);
        assert_eq!(numerical_rank(&DenseMatrix::zeros(0, 4), None), 0);

        // 3 orthonormal rows of a random 5x5 orthogonal matrix
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (_, q) = symmetric_eigen(&random_spd(&mut rng, 5)).unwrap();
        let rows = q.transpose().block(0, 0, 3, 5);
        assert!((&rows * &rows.transpose()).relative_error(&DenseMatrix::identity(3)) < 1e-12);
        assert_eq!(numerical_rank(&rows, None), 3);
        assert_eq!(numerical_rank(&rows.transpose(), None), 3);
        assert_eq!(numerical_rank(&rows, Some(2.0)), 0);
    }

    #[test]
    fn singular_values_match_known_matrix() {
        // diag(3, 2) rotated on both sides keeps singular values {3, 2}
        let c = 0.6;
        let s = 0.8;
        let r = m(&[&[c, -s], &[s, c]]);
        let a = &(&r * &DenseMatrix::from_diagonal(&[3.0, 2.0])) * &r.transpose();
        let sv = singular_values(&a);
        assert!((sv[0] - 3.0).abs() < 1e-14 && (sv[1] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn lu_solves_and_detects_singularity() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a = random_matrix(&mut rng, 6, 6);
        let lu = Lu::new(&a).unwrap();
        assert!((&a * &lu.inverse()).relative_error(&DenseMatrix::identity(6)) < 1e-10);
        assert_eq!(
            Lu::new(&m(&[&[1.0, 2.0], &[2.0, 4.0]])).unwrap_err(),
            Error::SingularBlock
        );
    }

    #[test]
    fn qr_reconstructs_and_is_orthogonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for (rows, cols) in [(7, 3), (5, 5), (4, 0), (6, 1)] {
            let a = random_matrix(&mut rng, rows, cols);
            let qr = Qr::new(&a).unwrap();
            let q = qr.q();
            assert!((&q.transpose() * q).relative_error(&DenseMatrix::identity(rows)) < 1e-14);
            let r = qr.r();
            for i in 0..cols {
                for j in 0..i {
                    assert_eq!(r[(i, j)], 0.0);
                }
            }
            if cols > 0 {
                assert!((&qr.range_basis() * r).relative_error(&a) < 1e-14);
                assert!((&a.transpose() * &qr.null_basis()).max_abs() < 1e-14);
            }
            assert_eq!(qr.null_basis().cols(), rows - cols);
        }
        let a = m(&[&[2.0, 1.0], &[0.0, 3.0], &[0.0, 0.0]]);
        let y = Qr::new(&a).unwrap().solve_rt(&DenseVector::new(vec![1.0, 2.0]).unwrap());
        // Rᵀy = b up to the signs Householder puts on R's rows
        let r = Qr::new(&a).unwrap().r().clone();
        assert!((&r.transpose().matvec(&y) - &DenseVector::new(vec![1.0, 2.0]).unwrap()).norm_inf() < 1e-15);
        assert!(Qr::new(&m(&[&[1.0, 2.0]])).is_err());
    }

    #[test]
    fn schur_identity_blocks() {
        let i2 = DenseMatrix::identity(2);
        let z = DenseMatrix::zeros(2, 2);
        let f = schur_decompose(&i2, &z, &z, &i2).unwrap();
        assert_eq!(f.lower, DenseMatrix::identity(4));
        assert_eq!(f.block_diag, DenseMatrix::identity(4));
        assert_eq!(f.upper, DenseMatrix::identity(4));
    }

    #[test]
    fn schur_scalar_blocks() {
        let one = |v: f64| m(&[&[v]]);
        let f = schur_decompose(&one(2.0), &one(1.0), &one(1.0), &one(2.0)).unwrap();
        // 2 − 1·(1/2)·1
        assert!((f.complement(1)[(0, 0)] - 1.5).abs() < 1e-15);
        assert!(f.reconstruct().relative_error(&m(&[&[2.0, 1.0], &[1.0, 2.0]])) < 1e-15);
    }

    #[test]
    fn schur_random_split_reconstructs() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let full = random_matrix(&mut rng, 4, 4);
        let f = schur_decompose(
            &full.block(0, 0, 2, 2),
            &full.block(0, 2, 2, 2),
            &full.block(2, 0, 2, 2),
            &full.block(2, 2, 2, 2),
        )
        .unwrap();
        assert!(f.reconstruct().relative_error(&full) < 1e-10);
    }

    #[test]
    fn schur_rejects_singular_leading_block() {
        let u = m(&[&[1.0, 2.0], &[2.0, 4.0]]);
        let i2 = DenseMatrix::identity(2);
        assert_eq!(schur_decompose(&u, &i2, &i2, &i2).unwrap_err(), Error::SingularBlock);
        assert!(matches!(
            schur_decompose(&i2, &DenseMatrix::zeros(2, 3), &i2, &i2),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
