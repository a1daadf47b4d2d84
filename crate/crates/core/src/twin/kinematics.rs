//! Serial-chain kinematics on standard DH parameters.

use std::f64::consts::PI;

use nalgebra::{Matrix6, UnitQuaternion, Vector6};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{Pose, Vec3};

pub const IK_DAMPING: f64 = 1e-3;
pub const IK_MAX_ITERS: usize = 200;
pub const IK_RESTARTS: usize = 8;
/// Residual at which the solver stops iterating.
pub const IK_TOL: f64 = 1e-10;
/// Largest joint change per DLS iteration, radians. Keeps the solver on
/// the seed's branch.
pub const IK_MAX_STEP: f64 = 0.5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KinError {
    #[error("joint vector has {got} entries, chain has {want}")]
    DimensionMismatch { want: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DhRow {
    pub a: f64,
    pub alpha: f64,
    pub d: f64,
    #[serde(default)]
    pub theta_offset: f64,
}

impl DhRow {
    fn transform(&self, q: f64) -> Pose {
        let rz = Pose::new(
            Vec3::new(0.0, 0.0, self.d),
            UnitQuaternion::from_axis_angle(&Vec3::z_axis(), q + self.theta_offset),
        );
        let rx = Pose::new(
            Vec3::new(self.a, 0.0, 0.0),
            UnitQuaternion::from_axis_angle(&Vec3::x_axis(), self.alpha),
        );
        rz.compose(&rx)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KinematicChain {
    pub rows: Vec<DhRow>,
    pub joint_limits: Vec<[f64; 2]>,
    pub max_joint_speed: f64,
}

impl KinematicChain {
    /// Universal Robots UR5e.
    pub fn ur5e() -> Self {
        let a = [0.0, -0.425, -0.3922, 0.0, 0.0, 0.0];
        let d = [0.1625, 0.0, 0.0, 0.1333, 0.0997, 0.0996];
        let alpha = [PI / 2.0, 0.0, 0.0, PI / 2.0, -PI / 2.0, 0.0];
        KinematicChain {
            rows: (0..6)
                .map(|i| DhRow {
                    a: a[i],
                    alpha: alpha[i],
                    d: d[i],
                    theta_offset: 0.0,
                })
                .collect(),
            joint_limits: vec![[-2.0 * PI, 2.0 * PI]; 6],
            max_joint_speed: PI / 2.0,
        }
    }

    pub fn dof(&self) -> usize {
        self.rows.len()
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.rows.is_empty() {
            return Err("chain has no joints".into());
        }
        if self.joint_limits.len() != self.rows.len() {
            return Err("one joint limit pair per row required".into());
        }
        if self
            .joint_limits
            .iter()
            .any(|[lo, hi]| lo.partial_cmp(hi) != Some(std::cmp::Ordering::Less))
        {
            return Err("joint limits must be ordered".into());
        }
        if self.max_joint_speed.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
            return Err("max_joint_speed must be positive".into());
        }
        Ok(())
    }

    pub fn within_limits(&self, q: &[f64]) -> bool {
        q.len() == self.dof()
            && q.iter()
                .zip(&self.joint_limits)
                .all(|(v, [lo, hi])| *v >= lo - 1e-12 && *v <= hi + 1e-12)
    }

    pub fn random_q(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        self.joint_limits
            .iter()
            .map(|[lo, hi]| rng.gen_range(*lo..*hi))
            .collect()
    }

    /// Frame poses 0..=n in the base frame (frame 0 is the base itself).
    pub fn frames(&self, q: &[f64]) -> Result<Vec<Pose>, KinError> {
        self.check(q)?;
        let mut out = Vec::with_capacity(q.len() + 1);
        let mut t = Pose::identity();
        out.push(t);
        for (row, qi) in self.rows.iter().zip(q) {
            t = t.compose(&row.transform(*qi));
            out.push(t);
        }
        Ok(out)
    }

    fn check(&self, q: &[f64]) -> Result<(), KinError> {
        if q.len() != self.dof() {
            return Err(KinError::DimensionMismatch {
                want: self.dof(),
                got: q.len(),
            });
        }
        Ok(())
    }
}

/// Flange pose in the base frame.
pub fn fk(chain: &KinematicChain, q: &[f64]) -> Result<Pose, KinError> {
    Ok(*chain.frames(q)?.last().unwrap())
}

/// Position error and rotation-vector error, both in the base frame.
fn pose_error(current: &Pose, target: &Pose) -> Vector6<f64> {
    let dp = target.translation - current.translation;
    let dr = (target.rotation * current.rotation.inverse()).scaled_axis();
    Vector6::new(dp.x, dp.y, dp.z, dr.x, dr.y, dr.z)
}

fn jacobian(frames: &[Pose]) -> nalgebra::Matrix6xX<f64> {
    let n = frames.len() - 1;
    let end = frames[n].translation;
    let mut j = nalgebra::Matrix6xX::zeros(n);
    for (i, f) in frames[..n].iter().enumerate() {
        let z = f.transform_vector(&Vec3::z());
        let v = z.cross(&(end - f.translation));
        j.fixed_view_mut::<3, 1>(0, i).copy_from(&v);
        j.fixed_view_mut::<3, 1>(3, i).copy_from(&z);
    }
    j
}

fn residual(chain: &KinematicChain, q: &[f64], target: &Pose) -> (f64, f64) {
    fk(chain, q)
        .map(|p| p.distance_to(target))
        .unwrap_or((f64::INFINITY, f64::INFINITY))
}

/// Damped least squares from one seed. Returns the raw (unwrapped) joints.
fn dls(chain: &KinematicChain, target: &Pose, seed: &[f64]) -> Option<Vec<f64>> {
    let n = chain.dof();
    let mut q = nalgebra::DVector::from_column_slice(seed);
    let lambda2 = IK_DAMPING * IK_DAMPING;
    for _ in 0..=IK_MAX_ITERS {
        let frames = chain.frames(q.as_slice()).ok()?;
        let e = pose_error(frames.last().unwrap(), target);
        if e.fixed_rows::<3>(0).norm() < IK_TOL && e.fixed_rows::<3>(3).norm() < IK_TOL {
            return Some(q.as_slice().to_vec());
        }
        let j = jacobian(&frames);
        let jjt: Matrix6<f64> = &j * j.transpose() + Matrix6::identity() * lambda2;
        let y = jjt.lu().solve(&e)?;
        let mut dq = j.transpose() * y;
        let m = dq.amax();
        if m > IK_MAX_STEP {
            dq *= IK_MAX_STEP / m;
        }
        q += dq;
        if q.iter().any(|v| !v.is_finite()) {
            return None;
        }
    }
    let _ = n;
    None
}

/// Shift every joint by whole turns to lie within limits, as close to
/// `near` as possible.
fn wrap_into_limits(chain: &KinematicChain, q: &[f64], near: &[f64]) -> Option<Vec<f64>> {
    let tau = 2.0 * PI;
    q.iter()
        .zip(&chain.joint_limits)
        .zip(near)
        .map(|((v, [lo, hi]), n)| {
            let k0 = ((n - v) / tau).round();
            [k0, k0 - 1.0, k0 + 1.0, k0 - 2.0, k0 + 2.0]
                .into_iter()
                .map(|k| v + k * tau)
                .filter(|c| *c >= *lo && *c <= *hi)
                .min_by(|a, b| (a - n).abs().total_cmp(&(b - n).abs()))
        })
        .collect()
}

/// Joints reaching `target` (flange pose, base frame), trying `seed` first
/// and then random restarts drawn from `rng`. `None` means unreachable.
pub fn ik(chain: &KinematicChain, target: &Pose, seed: &[f64], rng: &mut ChaCha8Rng) -> Option<Vec<f64>> {
    if seed.len() != chain.dof() {
        return None;
    }
    if residual(chain, seed, target).0 < IK_TOL && residual(chain, seed, target).1 < IK_TOL {
        return Some(seed.to_vec());
    }
    // Draw all restart seeds up front so the RNG advances identically
    // whether or not an early attempt succeeds.
    let restarts: Vec<Vec<f64>> = (0..IK_RESTARTS).map(|_| chain.random_q(rng)).collect();
    std::iter::once(seed.to_vec())
        .chain(restarts)
        .filter_map(|s| dls(chain, target, &s))
        .filter_map(|q| wrap_into_limits(chain, &q, seed))
        .find(|q| {
            let (l, a) = residual(chain, q, target);
            l < 1e-9 && a < 1e-9
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(7)
    }

    #[test]
    fn zero_twist_chain_sums_offsets() {
        let chain = KinematicChain {
            rows: vec![
                DhRow {
                    a: 0.1,
                    alpha: 0.0,
                    d: 0.2,
                    theta_offset: 0.0,
                },
                DhRow {
                    a: 0.3,
                    alpha: 0.0,
                    d: 0.0,
                    theta_offset: 0.0,
                },
            ],
            joint_limits: vec![[-PI, PI]; 2],
            max_joint_speed: 1.0,
        };
        let p = fk(&chain, &[0.0, 0.0]).unwrap();
        assert!((p.translation - Vec3::new(0.4, 0.0, 0.2)).norm() < 1e-15);
        assert!(p.rotation.angle() < 1e-15);
    }

    #[test]
    fn wrong_length_is_error() {
        let c = KinematicChain::ur5e();
        assert_eq!(
            fk(&c, &[0.0; 5]).unwrap_err(),
            KinError::DimensionMismatch { want: 6, got: 5 }
        );
    }

    #[test]
    fn ur5e_zero_pose() {
        let p = fk(&KinematicChain::ur5e(), &[0.0; 6]).unwrap();
        // Arm stretched along -x at zero.
        assert!((p.translation.x - (-0.8172)).abs() < 1e-9);
        assert!((p.translation.y - (-0.2329)).abs() < 1e-9);
        assert!((p.translation.z - 0.0628).abs() < 1e-9);
    }

    #[test]
    fn seed_is_fixed_point() {
        let c = KinematicChain::ur5e();
        let q = vec![0.3, -1.2, 1.1, -1.4, -1.5, 0.2];
        let t = fk(&c, &q).unwrap();
        assert_eq!(ik(&c, &t, &q, &mut rng()).unwrap(), q);
    }

    #[test]
    fn round_trip_random_targets() {
        let c = KinematicChain::ur5e();
        let mut r = rng();
        let mut ok = 0;
        for _ in 0..100 {
            let q = c.random_q(&mut r);
            let t = fk(&c, &q).unwrap();
            let seed = vec![0.0, -1.5, 1.5, -1.5, -1.5, 0.0];
            if let Some(s) = ik(&c, &t, &seed, &mut r) {
                assert!(c.within_limits(&s));
                let (l, a) = fk(&c, &s).unwrap().distance_to(&t);
                assert!(l < 1e-6 && a < 1e-6);
                ok += 1;
            }
        }
        assert!(ok >= 97, "{ok}");
    }

    #[test]
    fn far_target_unreachable() {
        let c = KinematicChain::ur5e();
        let t = Pose::from_translation(10.0, 0.0, 0.0);
        assert!(ik(&c, &t, &[0.0; 6], &mut rng()).is_none());
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let c = KinematicChain::ur5e();
        let q = [0.2, -1.0, 1.3, -0.7, 0.5, 0.1];
        let j = jacobian(&c.frames(&q).unwrap());
        let p0 = fk(&c, &q).unwrap();
        for i in 0..6 {
            let mut q1 = q;
            q1[i] += 1e-7;
            let e = pose_error(&p0, &fk(&c, &q1).unwrap()) / 1e-7;
            for r in 0..6 {
                assert!((e[r] - j[(r, i)]).abs() < 1e-5);
            }
        }
    }
}
