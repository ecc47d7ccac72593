//! SE(3) primitives: exponential and logarithm maps, adjoint, left Jacobian and
//! its inverse, and the ⊞ / ⊟ operators.
//!
//! Conventions:
//! - twists are ordered `(rho, phi)`: translational part first, rotation second;
//! - `T ⊞ ξ = T·Exp(ξ)` (right perturbation);
//! - `T₁ ⊟ T₂ = Log(T₁⁻¹·T₂)`, i.e. `T₂` expressed relative to `T₁`;
//! - `Ad(T) = [[R, t^R], [0, R]]`, so that `T·Exp(ξ)·T⁻¹ = Exp(Ad(T)·ξ)`;
//! - the left Jacobian satisfies `Exp(η + δ) ≈ Exp(J_l(η)·δ)·Exp(η)`.

use std::ops::{Mul, Neg};

use nalgebra::{Matrix3, Matrix6, Vector3, Vector6};

use crate::error::{Error, Result};

pub type Mat6 = Matrix6<f64>;

/// Below this rotation angle `log` scales by the series of `θ/sin θ`.
pub const SMALL_ANGLE: f64 = 1e-8;

/// Below this angle the Rodrigues and Jacobian coefficients use their Taylor
/// series; the closed forms lose roughly `ε/θ²` of absolute accuracy there.
pub const SERIES_ANGLE: f64 = 0.1;

/// `log` refuses rotations whose trace is within this margin of −1.
pub const NEAR_PI_TRACE_MARGIN: f64 = 1e-9;

/// Jacobian inverses refuse rotation angles within this margin of π.
pub const NEAR_PI_ANGLE_MARGIN: f64 = 1e-6;

/// Rotations are re-projected onto SO(3) after this many chained compositions.
pub const REORTHONORMALIZE_EVERY: usize = 100;

const ORTHONORMAL_TOL: f64 = 1e-10;

pub fn hat(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

fn vee(m: &Matrix3<f64>) -> Vector3<f64> {
    Vector3::new(m[(2, 1)], m[(0, 2)], m[(1, 0)])
}

/// Tangent vector of SE(3).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Twist {
    pub rho: Vector3<f64>,
    pub phi: Vector3<f64>,
}

impl Twist {
    pub fn new(rho: Vector3<f64>, phi: Vector3<f64>) -> Self {
        Self { rho, phi }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn from_vector(v: &Vector6<f64>) -> Self {
        Self {
            rho: v.fixed_rows::<3>(0).into_owned(),
            phi: v.fixed_rows::<3>(3).into_owned(),
        }
    }

    pub fn from_slice(s: &[f64]) -> Self {
        assert_eq!(s.len(), 6, "twist needs 6 components");
        Self {
            rho: Vector3::new(s[0], s[1], s[2]),
            phi: Vector3::new(s[3], s[4], s[5]),
        }
    }

    pub fn to_vector(&self) -> Vector6<f64> {
        Vector6::new(self.rho.x, self.rho.y, self.rho.z, self.phi.x, self.phi.y, self.phi.z)
    }

    pub fn angle(&self) -> f64 {
        self.phi.norm()
    }

    pub fn norm(&self) -> f64 {
        self.to_vector().norm()
    }

    pub fn is_finite(&self) -> bool {
        self.to_vector().iter().all(|v| v.is_finite())
    }
}

impl Neg for Twist {
    type Output = Twist;
    fn neg(self) -> Twist {
        Twist::new(-self.rho, -self.phi)
    }
}

/// Rigid transform with rotation `R ∈ SO(3)` and translation `t` (meters).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    rotation: Matrix3<f64>,
    translation: Vector3<f64>,
}

impl Default for Pose {
    fn default() -> Self {
        Self::identity()
    }
}

fn orthonormality_error(r: &Matrix3<f64>) -> f64 {
    let gram = (r.transpose() * r - Matrix3::identity()).abs().max();
    gram.max((r.determinant() - 1.0).abs())
}

fn polar_projection(r: &Matrix3<f64>) -> Matrix3<f64> {
    let svd = r.svd(true, true);
    let (u, vt) = (svd.u.unwrap(), svd.v_t.unwrap());
    let mut fix = Matrix3::identity();
    if (u * vt).determinant() < 0.0 {
        fix[(2, 2)] = -1.0;
    }
    u * fix * vt
}

impl Pose {
    /// Validates `R` to be orthonormal with det +1 (tolerance 1e-10).
    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self> {
        if !rotation.iter().chain(translation.iter()).all(|v| v.is_finite()) {
            return Err(Error::NonFinite { index: 0 });
        }
        let error = orthonormality_error(&rotation);
        if error > ORTHONORMAL_TOL {
            return Err(Error::NotOrthonormal { error });
        }
        Ok(Self {
            rotation,
            translation,
        })
    }

    pub(crate) fn from_parts_unchecked(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Self {
        Self {
            rotation,
            translation,
        }
    }

    pub fn identity() -> Self {
        Self::from_parts_unchecked(Matrix3::identity(), Vector3::zeros())
    }

    pub fn from_translation(t: Vector3<f64>) -> Self {
        Self::from_parts_unchecked(Matrix3::identity(), t)
    }

    /// Rotation about z by `yaw` radians, then translation `t`.
    pub fn from_yaw(yaw: f64, t: Vector3<f64>) -> Self {
        let (s, c) = yaw.sin_cos();
        Self::from_parts_unchecked(Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0), t)
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }

    pub fn translation(&self) -> &Vector3<f64> {
        &self.translation
    }

    pub fn inverse(&self) -> Pose {
        let rt = self.rotation.transpose();
        Self::from_parts_unchecked(rt, -(rt * self.translation))
    }

    /// Same pose with the rotation projected back onto SO(3).
    pub fn orthonormalized(&self) -> Pose {
        Self::from_parts_unchecked(polar_projection(&self.rotation), self.translation)
    }

    pub fn orthonormality_error(&self) -> f64 {
        orthonormality_error(&self.rotation)
    }

    pub fn exp(xi: &Twist) -> Pose {
        exp(xi)
    }

    pub fn log(&self) -> Result<Twist> {
        log(self)
    }

    pub fn adjoint(&self) -> Mat6 {
        adjoint(self)
    }

    /// Row-major `R` followed by `t`.
    pub fn to_row12(&self) -> [f64; 12] {
        let mut out = [0.0; 12];
        for i in 0..3 {
            for j in 0..3 {
                out[3 * i + j] = self.rotation[(i, j)];
            }
            out[9 + i] = self.translation[i];
        }
        out
    }

    /// Inverse of [`Pose::to_row12`]. Rotations that are off SO(3) by less than
    /// 1e-6 (e.g. printed with limited precision) are re-projected; larger
    /// errors are rejected.
    pub fn from_row12(v: &[f64]) -> Result<Pose> {
        if v.len() != 12 {
            return Err(crate::error::dim_mismatch("Pose::from_row12", 12, v.len()));
        }
        let r = Matrix3::from_row_slice(&v[..9]);
        let t = Vector3::new(v[9], v[10], v[11]);
        match Pose::new(r, t) {
            Err(Error::NotOrthonormal { error }) if error < 1e-6 => {
                Ok(Pose::from_parts_unchecked(polar_projection(&r), t))
            }
            other => other,
        }
    }

    /// Left-to-right product of `poses`, re-orthonormalizing the running
    /// rotation every [`REORTHONORMALIZE_EVERY`] compositions.
    pub fn compose_chain<'a>(poses: impl IntoIterator<Item = &'a Pose>) -> Pose {
        let mut acc = Pose::identity();
        for (k, p) in poses.into_iter().enumerate() {
            acc = acc * *p;
            if (k + 1) % REORTHONORMALIZE_EVERY == 0 {
                acc = acc.orthonormalized();
            }
        }
        acc
    }
}

impl Mul for Pose {
    type Output = Pose;
    fn mul(self, rhs: Pose) -> Pose {
        Pose::from_parts_unchecked(
            self.rotation * rhs.rotation,
            self.rotation * rhs.translation + self.translation,
        )
    }
}

impl Mul<&Pose> for &Pose {
    type Output = Pose;
    fn mul(self, rhs: &Pose) -> Pose {
        *self * *rhs
    }
}

/// `sin θ/θ`, `(1 − cos θ)/θ²` and `(θ − sin θ)/θ³`.
fn so3_coefficients(theta: f64, series: bool) -> (f64, f64, f64) {
    let t2 = theta * theta;
    if series {
        let t4 = t2 * t2;
        let t8 = t4 * t4;
        (
            1.0 - t2 / 6.0 + t4 / 120.0 - t4 * t2 / 5040.0 + t8 / 362880.0,
            0.5 - t2 / 24.0 + t4 / 720.0 - t4 * t2 / 40320.0 + t8 / 3628800.0,
            1.0 / 6.0 - t2 / 120.0 + t4 / 5040.0 - t4 * t2 / 362880.0 + t8 / 39916800.0,
        )
    } else {
        let (s, c) = theta.sin_cos();
        (s / theta, (1.0 - c) / t2, (theta - s) / (t2 * theta))
    }
}

pub fn so3_exp(phi: &Vector3<f64>) -> Matrix3<f64> {
    let theta = phi.norm();
    let k = hat(phi);
    let (a, b, _) = so3_coefficients(theta, theta < SERIES_ANGLE);
    Matrix3::identity() + k * a + k * k * b
}

pub fn so3_log(r: &Matrix3<f64>) -> Result<Vector3<f64>> {
    let trace = r.trace();
    if trace <= -1.0 + NEAR_PI_TRACE_MARGIN {
        return Err(Error::NearPiRotation {
            angle: ((trace - 1.0) / 2.0).clamp(-1.0, 1.0).acos(),
        });
    }
    let v = vee(&(r - r.transpose())) * 0.5;
    let s = v.norm();
    let c = (trace - 1.0) / 2.0;
    let theta = s.atan2(c);
    if theta < SMALL_ANGLE {
        let t2 = theta * theta;
        Ok(v * (1.0 + t2 / 6.0 + 7.0 * t2 * t2 / 360.0))
    } else {
        Ok(v * (theta / s))
    }
}

pub fn so3_left_jacobian(phi: &Vector3<f64>) -> Matrix3<f64> {
    let k = hat(phi);
    let theta = phi.norm();
    let (_, b, c) = so3_coefficients(theta, theta < SERIES_ANGLE);
    Matrix3::identity() + k * b + k * k * c
}

fn inv_coefficient(theta: f64, series: bool) -> f64 {
    let t2 = theta * theta;
    if series {
        1.0 / 12.0 + t2 / 720.0 + t2 * t2 / 30240.0
    } else {
        let (s, c) = theta.sin_cos();
        1.0 / t2 - (1.0 + c) / (2.0 * theta * s)
    }
}

pub fn so3_left_jacobian_inv(phi: &Vector3<f64>) -> Matrix3<f64> {
    let theta = phi.norm();
    let k = hat(phi);
    let d = inv_coefficient(theta, theta < SERIES_ANGLE);
    Matrix3::identity() - k * 0.5 + k * k * d
}

fn q_coefficients(theta: f64, series: bool) -> (f64, f64) {
    let t2 = theta * theta;
    if series {
        (
            1.0 / 24.0 - t2 / 720.0 + t2 * t2 / 40320.0,
            1.0 / 120.0 - t2 / 2520.0 + t2 * t2 / 120960.0,
        )
    } else {
        let (s, co) = theta.sin_cos();
        let t4 = t2 * t2;
        (
            (t2 + 2.0 * co - 2.0) / (2.0 * t4),
            (2.0 * theta - 3.0 * s + theta * co) / (2.0 * t4 * theta),
        )
    }
}

/// Translational coupling block of the SE(3) left Jacobian.
fn q_block(rho: &Vector3<f64>, phi: &Vector3<f64>) -> Matrix3<f64> {
    let theta = phi.norm();
    let (_, _, b) = so3_coefficients(theta, theta < SERIES_ANGLE);
    let (c, d) = q_coefficients(theta, theta < SERIES_ANGLE);
    let r = hat(rho);
    let p = hat(phi);
    let pr = p * r;
    let rp = r * p;
    let prp = pr * p;
    let pp = p * p;
    r * 0.5 + (pr + rp + prp) * b + (pp * r + rp * p - prp * 3.0) * c + (prp * p + pp * rp) * d
}

fn assemble(diag: &Matrix3<f64>, upper: &Matrix3<f64>) -> Mat6 {
    let mut m = Mat6::zeros();
    m.fixed_view_mut::<3, 3>(0, 0).copy_from(diag);
    m.fixed_view_mut::<3, 3>(3, 3).copy_from(diag);
    m.fixed_view_mut::<3, 3>(0, 3).copy_from(upper);
    m
}

pub fn exp(xi: &Twist) -> Pose {
    Pose::from_parts_unchecked(so3_exp(&xi.phi), so3_left_jacobian(&xi.phi) * xi.rho)
}

pub fn log(t: &Pose) -> Result<Twist> {
    let phi = so3_log(&t.rotation)?;
    let rho = so3_left_jacobian_inv(&phi) * t.translation;
    Ok(Twist::new(rho, phi))
}

pub fn adjoint(t: &Pose) -> Mat6 {
    assemble(&t.rotation, &(hat(&t.translation) * t.rotation))
}

/// `J_l(η)` for SE(3).
pub fn left_jacobian(eta: &Twist) -> Mat6 {
    assemble(&so3_left_jacobian(&eta.phi), &q_block(&eta.rho, &eta.phi))
}

/// `J_l(η)⁻¹` for SE(3), in closed form.
pub fn left_jacobian_inv(eta: &Twist) -> Result<Mat6> {
    let angle = eta.angle();
    if angle >= std::f64::consts::PI - NEAR_PI_ANGLE_MARGIN {
        return Err(Error::NearPiRotation { angle });
    }
    let j_inv = so3_left_jacobian_inv(&eta.phi);
    let q = q_block(&eta.rho, &eta.phi);
    Ok(assemble(&j_inv, &(-(j_inv * q * j_inv))))
}

/// `T ⊞ ξ = T·Exp(ξ)`.
pub fn boxplus(t: &Pose, xi: &Twist) -> Pose {
    t * &exp(xi)
}

/// `T₁ ⊟ T₂ = Log(T₁⁻¹·T₂)`.
pub fn boxminus(t1: &Pose, t2: &Pose) -> Result<Twist> {
    log(&(t1.inverse() * *t2))
}
