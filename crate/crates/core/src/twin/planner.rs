//! Joint-space straight-line planning with sampled collision checks and a
//! single lift-waypoint retry.

use std::collections::BTreeSet;
use std::sync::Arc;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::geom::{Capsule, PlacedMesh, Pose, TriMesh};
use crate::twin::kinematics::ik;
use crate::twin::snapshot::{link_capsules, CellSnapshot};
use crate::twin::state::{tool_tcp, CellState, TwinError, World};

/// Largest joint step between collision samples, radians.
pub const CHECK_STEP: f64 = 0.01;
/// Height of the retry waypoint above the higher endpoint.
pub const LIFT_HEIGHT: f64 = 0.15;
/// Penetration a carried part may have with its surroundings before it
/// counts as a collision.
pub const CONTACT_TOL: f64 = 5e-4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub robot: String,
    pub waypoints: Vec<Vec<f64>>,
    /// Seconds from the start, strictly increasing.
    pub timestamps: Vec<f64>,
}

impl Trajectory {
    pub fn duration(&self) -> f64 {
        self.timestamps.last().copied().unwrap_or(0.0)
    }

    /// Times each leg at `speed` on its largest joint delta; legs of zero
    /// length are dropped.
    pub fn timed(robot: &str, points: Vec<Vec<f64>>, speed: f64) -> Self {
        let mut waypoints: Vec<Vec<f64>> = Vec::new();
        let mut timestamps = Vec::new();
        for p in points {
            match waypoints.last() {
                None => {
                    timestamps.push(0.0);
                    waypoints.push(p);
                }
                Some(prev) => {
                    let d = max_delta(prev, &p);
                    if d > 0.0 {
                        timestamps.push(timestamps.last().unwrap() + d / speed);
                        waypoints.push(p);
                    }
                }
            }
        }
        Trajectory {
            robot: robot.to_string(),
            waypoints,
            timestamps,
        }
    }
}

pub fn max_delta(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// What a moving robot may hit, fixed at planning time.
pub struct CollisionScene<'a> {
    world: &'a World,
    robot: String,
    env: Vec<(String, Arc<PlacedMesh>)>,
    others: Vec<(String, Capsule)>,
    /// Carried parts, as mesh and pose relative to the TCP.
    carried: Vec<(String, Arc<TriMesh>, Pose)>,
}

impl<'a> CollisionScene<'a> {
    /// Objects carried by `robot` now, or when the snapshot was taken, are
    /// not obstacles to it.
    pub fn new(world: &'a World, state: &CellState, robot: &str, snap: &CellSnapshot, robot_robot: bool) -> Self {
        let mut carried_ids: BTreeSet<String> = BTreeSet::new();
        for root in state.held_by(robot) {
            carried_ids.extend(state.group(&root));
        }
        let tcp = state.world(&crate::twin::state::tcp_frame(robot)).unwrap_or_default();
        let carried = carried_ids
            .iter()
            .filter_map(|id| {
                let m = world.part_meshes.get(id)?.clone();
                let rel = tcp.inverse().compose(&state.world(id).ok()?);
                Some((id.clone(), m, rel))
            })
            .collect();
        let env = snap
            .objects
            .iter()
            .filter(|o| !carried_ids.contains(&o.id) && o.holder.as_deref() != Some(robot))
            .map(|o| (o.id.clone(), o.body.clone()))
            .collect();
        let others = if robot_robot {
            snap.robot_capsules
                .iter()
                .filter(|(r, _)| r.as_str() != robot)
                .flat_map(|(r, cs)| cs.iter().map(move |c| (r.clone(), *c)))
                .collect()
        } else {
            Vec::new()
        };
        CollisionScene {
            world,
            robot: robot.to_string(),
            env,
            others,
            carried,
        }
    }

    /// Ids hit with the robot at `q`, sorted.
    pub fn hits(&self, q: &[f64]) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        let caps = link_capsules(self.world, &self.robot, q);
        for c in &caps {
            for (id, m) in &self.env {
                if !out.contains(id) && c.intersects_mesh(m) {
                    out.insert(id.clone());
                }
            }
            for (id, o) in &self.others {
                if !out.contains(id) && c.intersects_capsule(o) {
                    out.insert(id.clone());
                }
            }
        }
        if !self.carried.is_empty() {
            let r = self.world.cell.robot(&self.robot).unwrap();
            let flange = crate::twin::kinematics::fk(&r.chain, q).unwrap();
            let tcp = r
                .base_pose
                .compose(&flange)
                .compose(&tool_tcp(&self.world.db, &r.mounted_tool));
            for (_, mesh, rel) in &self.carried {
                let body = PlacedMesh::new(mesh, &tcp.compose(rel));
                for (id, m) in &self.env {
                    if !out.contains(id) && body.overlaps_volume(m, CONTACT_TOL) {
                        out.insert(id.clone());
                    }
                }
            }
        }
        out
    }

    /// First colliding sample on the segment `a → b`, excluding `a`.
    pub fn segment_hits(&self, a: &[f64], b: &[f64], step: f64) -> BTreeSet<String> {
        let n = (max_delta(a, b) / step).ceil().max(1.0) as usize;
        for k in 1..=n {
            let t = k as f64 / n as f64;
            let q: Vec<f64> = a.iter().zip(b).map(|(x, y)| x + (y - x) * t).collect();
            let h = self.hits(&q);
            if !h.is_empty() {
                return h;
            }
        }
        BTreeSet::new()
    }

    pub fn path_hits(&self, waypoints: &[Vec<f64>], step: f64) -> BTreeSet<String> {
        for w in waypoints.windows(2) {
            let h = self.segment_hits(&w[0], &w[1], step);
            if !h.is_empty() {
                return h;
            }
        }
        BTreeSet::new()
    }
}

/// Plans the TCP of `robot` to `target` (cell frame).
pub fn plan(
    world: &World,
    state: &CellState,
    robot: &str,
    target: &Pose,
    snap: &CellSnapshot,
    rng: &mut ChaCha8Rng,
    robot_robot: bool,
) -> Result<Trajectory, TwinError> {
    let r = world
        .cell
        .robot(robot)
        .ok_or_else(|| TwinError::NotFound(robot.into()))?;
    let tcp = tool_tcp(&world.db, &r.mounted_tool);
    let to_flange = |p: &Pose| r.base_pose.inverse().compose(p).compose(&tcp.inverse());
    let q0 = state.robot_joints[robot].clone();
    let unreachable = || TwinError::Unreachable { robot: robot.into() };
    let q1 = ik(&r.chain, &to_flange(target), &q0, rng).ok_or_else(unreachable)?;
    let scene = CollisionScene::new(world, state, robot, snap, robot_robot);
    let speed = r.chain.max_joint_speed;

    let direct = scene.segment_hits(&q0, &q1, CHECK_STEP);
    if direct.is_empty() {
        return Ok(Trajectory::timed(robot, vec![q0, q1], speed));
    }
    let start = state.world(&crate::twin::state::tcp_frame(robot))?;
    let mut mid = (start.translation + target.translation) / 2.0;
    mid.z = start.translation.z.max(target.translation.z) + LIFT_HEIGHT;
    let lift = Pose::new(mid, target.rotation);
    let mut blocked = direct;
    if let Some(qm) = ik(&r.chain, &to_flange(&lift), &q0, rng) {
        let q2 = ik(&r.chain, &to_flange(target), &qm, rng).unwrap_or_else(|| q1.clone());
        let path = vec![q0, qm, q2];
        let h = scene.path_hits(&path, CHECK_STEP);
        if h.is_empty() {
            return Ok(Trajectory::timed(robot, path, speed));
        }
        blocked.extend(h);
    }
    Err(TwinError::InCollision {
        robot: robot.into(),
        objects: blocked.into_iter().collect(),
    })
}

/// Checks a trajectory against its robot's limits and speed.
pub fn validate_trajectory(world: &World, t: &Trajectory) -> Result<(), TwinError> {
    let r = world
        .cell
        .robot(&t.robot)
        .ok_or_else(|| TwinError::NotFound(t.robot.clone()))?;
    if t.waypoints.len() != t.timestamps.len() {
        return Err(TwinError::LimitViolation("one timestamp per waypoint required".into()));
    }
    for w in &t.waypoints {
        if !r.chain.within_limits(w) {
            return Err(TwinError::LimitViolation("waypoint outside joint limits".into()));
        }
    }
    for k in 1..t.waypoints.len() {
        let dt = t.timestamps[k] - t.timestamps[k - 1];
        if dt <= 0.0 {
            return Err(TwinError::LimitViolation("timestamps must increase".into()));
        }
        if max_delta(&t.waypoints[k - 1], &t.waypoints[k]) / dt > r.chain.max_joint_speed * (1.0 + 1e-9) {
            return Err(TwinError::LimitViolation("joint speed exceeded".into()));
        }
    }
    Ok(())
}
