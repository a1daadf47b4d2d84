//! Immutable views of the cell: collision snapshots for the planner and
//! scene documents for export.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::geom::{Capsule, PlacedMesh, Pose};
use crate::twin::kinematics::KinematicChain;
use crate::twin::state::{tool_tcp, CellState, ObjectKind, World};

#[derive(Debug, Clone)]
pub struct SnapObject {
    pub id: String,
    pub kind: ObjectKind,
    pub pose: Pose,
    pub body: Arc<PlacedMesh>,
    /// Robot carrying this object at snapshot time.
    pub holder: Option<String>,
}

#[derive(Debug, Clone)]
pub struct CellSnapshot {
    pub twin_time: f64,
    pub objects: Vec<SnapObject>,
    pub robot_joints: BTreeMap<String, Vec<f64>>,
    /// World-frame link capsules of every robot.
    pub robot_capsules: BTreeMap<String, Vec<Capsule>>,
}

impl CellSnapshot {
    pub fn part_count(&self) -> usize {
        self.objects.iter().filter(|o| o.kind == ObjectKind::Part).count()
    }
}

/// World-frame link capsules of a robot at joints `q`. Frame `dof + 1` is
/// the TCP.
pub fn link_capsules(world: &World, robot: &str, q: &[f64]) -> Vec<Capsule> {
    let Some(r) = world.cell.robot(robot) else {
        return Vec::new();
    };
    let frames = frames_with_tcp(&r.chain, &r.base_pose, &tool_tcp(&world.db, &r.mounted_tool), q);
    r.link_capsules
        .iter()
        .map(|c| Capsule {
            a: frames[c.from].translation,
            b: frames[c.to].translation,
            radius: c.radius,
        })
        .collect()
}

pub fn frames_with_tcp(chain: &KinematicChain, base: &Pose, tcp: &Pose, q: &[f64]) -> Vec<Pose> {
    let mut f: Vec<Pose> = chain
        .frames(q)
        .expect("joint vector matches chain")
        .iter()
        .map(|p| base.compose(p))
        .collect();
    let flange = *f.last().unwrap();
    f.push(flange.compose(tcp));
    f
}

pub fn take_snapshot(state: &CellState, world: &World) -> CellSnapshot {
    let mut objects = Vec::new();
    let mut push = |id: &str, kind: ObjectKind, mesh: Option<&Arc<crate::geom::TriMesh>>| {
        if let (Some(m), Ok(pose)) = (mesh, state.world(id)) {
            objects.push(SnapObject {
                id: id.to_string(),
                kind,
                pose,
                body: Arc::new(PlacedMesh::new(m, &pose)),
                holder: if kind == ObjectKind::Part {
                    state.holder(id)
                } else {
                    None
                },
            });
        }
    };
    for (id, m) in &world.jig_meshes {
        push(id, ObjectKind::Jig, Some(m));
    }
    for (id, m) in &world.obstacle_meshes {
        push(id, ObjectKind::Obstacle, Some(m));
    }
    for id in state.attachments.keys() {
        push(id, ObjectKind::Part, world.part_meshes.get(id));
    }
    objects.sort_by(|a, b| a.id.cmp(&b.id));
    let robot_capsules = state
        .robot_joints
        .iter()
        .map(|(r, q)| (r.clone(), link_capsules(world, r, q)))
        .collect();
    CellSnapshot {
        twin_time: state.twin_time,
        objects,
        robot_joints: state.robot_joints.clone(),
        robot_capsules,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneObject {
    pub id: String,
    pub kind: ObjectKind,
    /// Model or tool id the geometry comes from.
    pub mesh_ref: Option<String>,
    pub pose: Pose,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneDoc {
    pub cell_id: String,
    pub twin_time: f64,
    pub objects: Vec<SceneObject>,
    pub robot_joints: BTreeMap<String, Vec<f64>>,
    pub registers: BTreeMap<String, u32>,
    pub fastened: BTreeSet<String>,
}

impl SceneDoc {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scene serializes")
    }
}

pub fn snapshot_scene(state: &CellState, world: &World) -> SceneDoc {
    let objects = state
        .poses
        .iter()
        .filter_map(|(id, pose)| {
            let kind = world.kind_of(id)?;
            let mesh_ref = match kind {
                ObjectKind::Robot => world.cell.robot(id).map(|r| r.mounted_tool.clone()),
                ObjectKind::Jig => world.cell.jig(id).map(|j| j.tool_id.clone()),
                ObjectKind::Part => world.part_model(id).map(str::to_string),
                ObjectKind::Obstacle => Some(id.clone()),
                ObjectKind::Tcp | ObjectKind::Feeder => None,
            };
            Some(SceneObject {
                id: id.clone(),
                kind,
                mesh_ref,
                pose: *pose,
                parent: state.attachments.get(id).map(|a| a.parent.clone()),
            })
        })
        .collect();
    SceneDoc {
        cell_id: world.cell.cell_id.clone(),
        twin_time: state.twin_time,
        objects,
        robot_joints: state.robot_joints.clone(),
        registers: state.registers.clone(),
        fastened: state.fastened.clone(),
    }
}
