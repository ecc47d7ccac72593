//! Planar random-walk trajectories with tangent-space noise.
//!
//! Each step turns the robot by a random heading change and then moves it
//! forward by a fixed distance. Trajectory B is moved rigidly so that its middle
//! pose coincides with A's middle pose; noise is applied afterwards, on the right
//! of every relative pose. Heads are kept exact.

use std::f64::consts::FRAC_PI_4;

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::Trajectory;
use crate::error::{Error, Result};
use crate::liegroup::{exp, Mat6, Pose, Twist};

/// Standard deviations used for the stored covariances when the corresponding
/// noise level is zero, so that covariances stay positive definite.
pub const FALLBACK_TRANS_STD: f64 = 0.1;
pub const FALLBACK_ROT_STD: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    /// Poses per trajectory (`N + 1`).
    pub n_poses: usize,
    /// Forward motion per step, meters.
    pub trans_step: f64,
    pub trans_noise_std: f64,
    pub rot_noise_std: f64,
    /// Heading changes are drawn uniformly from `(−max_turn, max_turn)`.
    pub max_turn: f64,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            n_poses: 20,
            trans_step: 1.0,
            trans_noise_std: 0.1,
            rot_noise_std: 0.01,
            max_turn: FRAC_PI_4,
            seed: 42,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_poses < 2 {
            return Err(Error::InvalidArgument(format!(
                "need at least 2 poses, got {}",
                self.n_poses
            )));
        }
        let finite_nonneg = |v: f64| v.is_finite() && v >= 0.0;
        if !finite_nonneg(self.trans_noise_std)
            || !finite_nonneg(self.rot_noise_std)
            || !finite_nonneg(self.max_turn)
            || !self.trans_step.is_finite()
        {
            return Err(Error::InvalidArgument(
                "noise levels, step and turn range must be finite and non-negative".into(),
            ));
        }
        Ok(())
    }

    /// Per-variable covariance `diag(σt²·I₃, σr²·I₃)`.
    pub fn covariance(&self) -> Mat6 {
        let pick = |v: f64, fallback: f64| if v > 0.0 { v } else { fallback };
        let t = pick(self.trans_noise_std, FALLBACK_TRANS_STD).powi(2);
        let r = pick(self.rot_noise_std, FALLBACK_ROT_STD).powi(2);
        Mat6::from_diagonal(&nalgebra::Vector6::new(t, t, t, r, r, r))
    }

    /// 1-based index of the pose both trajectories share before noise.
    pub fn middle_index(&self) -> usize {
        self.n_poses.div_ceil(2)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedPair {
    pub a: Trajectory,
    pub b: Trajectory,
    pub a_true: Trajectory,
    pub b_true: Trajectory,
}

fn random_walk(cfg: &SimConfig, rng: &mut ChaCha8Rng) -> Vec<Pose> {
    (1..cfg.n_poses)
        .map(|_| {
            let yaw = if cfg.max_turn > 0.0 {
                rng.random_range(-cfg.max_turn..cfg.max_turn)
            } else {
                0.0
            };
            let (s, c) = yaw.sin_cos();
            Pose::from_yaw(yaw, Vector3::new(c, s, 0.0) * cfg.trans_step)
        })
        .collect()
}

struct Noise {
    trans: Option<Normal<f64>>,
    rot: Option<Normal<f64>>,
}

impl Noise {
    fn new(cfg: &SimConfig) -> Self {
        let make = |s: f64| (s > 0.0).then(|| Normal::new(0.0, s).unwrap());
        Self {
            trans: make(cfg.trans_noise_std),
            rot: make(cfg.rot_noise_std),
        }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> Twist {
        let mut draw = |d: &Option<Normal<f64>>| match d {
            Some(d) => Vector3::new(d.sample(rng), d.sample(rng), d.sample(rng)),
            None => Vector3::zeros(),
        };
        let rho = draw(&self.trans);
        let phi = draw(&self.rot);
        Twist::new(rho, phi)
    }

    fn apply(&self, t: &Trajectory, rng: &mut ChaCha8Rng) -> Result<Trajectory> {
        let rel = t
            .rel_poses()
            .iter()
            .map(|p| p * &exp(&self.sample(rng)))
            .collect();
        Trajectory::new(*t.head(), rel, t.covariances().to_vec())
    }
}

/// Two noisy trajectories meeting in the middle plus their noise-free versions.
/// The same configuration always yields bit-identical output.
pub fn simulate_pair(cfg: &SimConfig) -> Result<SimulatedPair> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let covs = vec![cfg.covariance(); cfg.n_poses];
    let a_true = Trajectory::new(Pose::identity(), random_walk(cfg, &mut rng), covs.clone())?;
    let b_raw = Trajectory::new(Pose::identity(), random_walk(cfg, &mut rng), covs)?;

    let mid = cfg.middle_index();
    let g = a_true.chain_pose(mid)? * b_raw.chain_pose(mid)?.inverse();
    let b_true = b_raw.transformed(&g.orthonormalized());

    let noise = Noise::new(cfg);
    let a = noise.apply(&a_true, &mut rng)?;
    let b = noise.apply(&b_true, &mut rng)?;
    Ok(SimulatedPair {
        a,
        b,
        a_true,
        b_true,
    })
}
