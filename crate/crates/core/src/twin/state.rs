//! Cell state: object poses, the attachment forest, robot joints, tool
//! registers and the fastened set.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cell_match::CellDescription;
use crate::design::{DesignDoc, JointKind};
use crate::geom::{Pose, TriMesh, Vec3};
use crate::tooling::{RegisterRole, Station, ToolKind, ToolingDb};
use crate::twin::kinematics::fk;

/// Id of the world frame.
pub const CELL: &str = "cell";
/// Seating, grasping and fastening tolerances.
pub const LIN_TOL: f64 = 1e-3;
pub const ANG_TOL: f64 = std::f64::consts::PI / 180.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TwinError {
    #[error("tool `{0}` is not in the tooling database")]
    UnknownTool(String),
    #[error("cell: {0}")]
    InvalidCell(String),
    #[error("no object `{0}`")]
    NotFound(String),
    #[error("jig `{jig}` does not hold model `{model}`")]
    ModelNotHeld { jig: String, model: String },
    #[error("part `{0}` is already present")]
    AlreadyPresent(String),
    #[error("robot `{0}` has nothing within grasp tolerance")]
    NothingToGrasp(String),
    #[error("robot `{0}` carries no gripper")]
    NoGripper(String),
    #[error("robot `{0}` carries no screwdriver")]
    NoScrewdriver(String),
    #[error("screwdriver on `{robot}` cannot drive `{screw}`")]
    UnsupportedScrew { robot: String, screw: String },
    #[error("tool is {distance:.6} m and {angle:.6} rad off joint `{joint}`")]
    NotAligned { joint: String, distance: f64, angle: f64 },
    #[error("parts of joint `{0}` are not at their assembly poses")]
    PartsNotPlaced(String),
    #[error("joint `{0}` is not a fastener")]
    NotAFastener(String),
    #[error("no design loaded")]
    NoDesign,
    #[error("robot `{robot}` cannot reach the target")]
    Unreachable { robot: String },
    #[error("motion of `{robot}` collides with {}", objects.join(", "))]
    InCollision { robot: String, objects: Vec<String> },
    #[error("trajectory violates limits: {0}")]
    LimitViolation(String),
    #[error("bad argument: {0}")]
    BadArgument(String),
}

impl TwinError {
    pub fn reason(&self) -> &'static str {
        match self {
            TwinError::UnknownTool(_) => "unknown_tool",
            TwinError::InvalidCell(_) => "invalid_cell",
            TwinError::NotFound(_) => "not_found",
            TwinError::ModelNotHeld { .. } => "model_not_held",
            TwinError::AlreadyPresent(_) => "already_present",
            TwinError::NothingToGrasp(_) => "nothing_to_grasp",
            TwinError::NoGripper(_) => "no_gripper",
            TwinError::NoScrewdriver(_) => "no_screwdriver",
            TwinError::UnsupportedScrew { .. } => "unsupported_screw",
            TwinError::NotAligned { .. } => "not_aligned",
            TwinError::PartsNotPlaced(_) => "parts_not_placed",
            TwinError::NotAFastener(_) => "not_a_fastener",
            TwinError::NoDesign => "no_design",
            TwinError::Unreachable { .. } => "unreachable",
            TwinError::InCollision { .. } => "in_collision",
            TwinError::LimitViolation(_) => "limit_violation",
            TwinError::BadArgument(_) => "bad_argument",
        }
    }

    pub fn objects(&self) -> Vec<String> {
        match self {
            TwinError::InCollision { objects, .. } => objects.clone(),
            TwinError::Unreachable { robot } => vec![robot.clone()],
            TwinError::NotFound(id) | TwinError::AlreadyPresent(id) => vec![id.clone()],
            _ => Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Attachment {
    pub parent: String,
    /// Child frame in the parent frame.
    pub relative: Pose,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellState {
    /// World pose of every object, including `<robot>/tcp` frames.
    pub poses: BTreeMap<String, Pose>,
    /// Parts only: where each part hangs in the attachment forest.
    pub attachments: BTreeMap<String, Attachment>,
    pub robot_joints: BTreeMap<String, Vec<f64>>,
    pub registers: BTreeMap<String, u32>,
    pub fastened: BTreeSet<String>,
    pub twin_time: f64,
}

pub fn tcp_frame(robot: &str) -> String {
    format!("{robot}/tcp")
}

/// Robot whose TCP frame `id` names.
pub fn tcp_owner(id: &str) -> Option<&str> {
    id.strip_suffix("/tcp")
}

/// World poses of attached frames, given the poses of root frames. Fails
/// on a cycle or a dangling parent.
pub fn resolve_frames(
    roots: &BTreeMap<String, Pose>,
    attachments: &BTreeMap<String, Attachment>,
) -> Result<BTreeMap<String, Pose>, String> {
    fn go(
        id: &str,
        roots: &BTreeMap<String, Pose>,
        att: &BTreeMap<String, Attachment>,
        out: &mut BTreeMap<String, Pose>,
        stack: &mut Vec<String>,
    ) -> Result<Pose, String> {
        if let Some(p) = out.get(id) {
            return Ok(*p);
        }
        if id == CELL {
            return Ok(Pose::identity());
        }
        let Some(a) = att.get(id) else {
            return roots.get(id).copied().ok_or_else(|| format!("unknown frame `{id}`"));
        };
        if stack.iter().any(|s| s == id) {
            return Err(format!("attachment cycle through `{id}`"));
        }
        stack.push(id.to_string());
        let parent = go(&a.parent, roots, att, out, stack)?;
        stack.pop();
        let w = parent.compose(&a.relative);
        out.insert(id.to_string(), w);
        Ok(w)
    }
    let mut out = roots.clone();
    for id in attachments.keys() {
        go(id, roots, attachments, &mut out, &mut Vec::new())?;
    }
    Ok(out)
}

/// Tool-centre point in the flange frame of the tool `tool_id`.
pub fn tool_tcp(db: &ToolingDb, tool_id: &str) -> Pose {
    db.gripper(tool_id)
        .map(|g| g.tcp)
        .or_else(|| db.screwdriver(tool_id).map(|s| s.tcp))
        .unwrap_or_default()
}

/// Fresh state: robots at home, jigs posed, no parts, time zero.
pub fn init_cell(c: &CellDescription, db: &ToolingDb) -> Result<CellState, TwinError> {
    c.validate(db).map_err(|e| match e {
        crate::cell_match::CellError::UnknownTool(t) => TwinError::UnknownTool(t),
        other => TwinError::InvalidCell(other.to_string()),
    })?;
    let mut poses = BTreeMap::new();
    let mut robot_joints = BTreeMap::new();
    let mut registers = BTreeMap::new();
    for r in &c.robots {
        let q = r.home_joints();
        let tcp = r
            .base_pose
            .compose(&fk(&r.chain, &q).map_err(|e| TwinError::InvalidCell(e.to_string()))?)
            .compose(&tool_tcp(db, &r.mounted_tool));
        poses.insert(r.robot_id.clone(), r.base_pose);
        poses.insert(tcp_frame(&r.robot_id), tcp);
        robot_joints.insert(r.robot_id.clone(), q);
        if let Some(g) = db.gripper(&r.mounted_tool) {
            registers.insert(r.robot_id.clone(), g.register_states[&RegisterRole::Open]);
        }
    }
    for j in &c.jigs {
        poses.insert(j.jig_id.clone(), j.pose);
    }
    for f in &c.screw_feeders {
        poses.insert(f.feeder_id.clone(), f.pose);
    }
    for o in &c.obstacles {
        poses.insert(o.obstacle_id.clone(), o.pose);
    }
    Ok(CellState {
        poses,
        attachments: BTreeMap::new(),
        robot_joints,
        registers,
        fastened: BTreeSet::new(),
        twin_time: 0.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectKind {
    Robot,
    Tcp,
    Jig,
    Feeder,
    Obstacle,
    Part,
}

/// Static data the state refers to: the cell, its tooling and the design.
#[derive(Debug, Clone)]
pub struct World {
    pub cell: CellDescription,
    pub db: ToolingDb,
    pub design: Option<DesignDoc>,
    pub part_meshes: BTreeMap<String, Arc<TriMesh>>,
    pub jig_meshes: BTreeMap<String, Arc<TriMesh>>,
    pub obstacle_meshes: BTreeMap<String, Arc<TriMesh>>,
}

impl World {
    pub fn new(cell: CellDescription, db: ToolingDb, design: Option<DesignDoc>) -> Self {
        let part_meshes = design
            .iter()
            .flat_map(|d| d.parts.iter())
            .map(|p| (p.part_id.clone(), Arc::new(p.mesh.clone())))
            .collect();
        let jig_meshes = cell
            .jigs
            .iter()
            .filter_map(|j| {
                let m = db.jig(&j.tool_id)?.mesh.clone()?;
                Some((j.jig_id.clone(), Arc::new(m)))
            })
            .collect();
        let obstacle_meshes = cell
            .obstacles
            .iter()
            .map(|o| (o.obstacle_id.clone(), Arc::new(o.mesh.clone())))
            .collect();
        World {
            cell,
            db,
            design,
            part_meshes,
            jig_meshes,
            obstacle_meshes,
        }
    }

    pub fn kind_of(&self, id: &str) -> Option<ObjectKind> {
        if tcp_owner(id).is_some_and(|r| self.cell.robot(r).is_some()) {
            Some(ObjectKind::Tcp)
        } else if self.cell.robot(id).is_some() {
            Some(ObjectKind::Robot)
        } else if self.cell.jig(id).is_some() {
            Some(ObjectKind::Jig)
        } else if self.cell.feeder(id).is_some() {
            Some(ObjectKind::Feeder)
        } else if self.cell.obstacles.iter().any(|o| o.obstacle_id == id) {
            Some(ObjectKind::Obstacle)
        } else if self.design.as_ref().is_some_and(|d| d.part(id).is_some()) {
            Some(ObjectKind::Part)
        } else {
            None
        }
    }

    pub fn tool_kind(&self, robot: &str) -> Option<ToolKind> {
        self.cell
            .robot(robot)
            .and_then(|r| self.db.get(&r.mounted_tool))
            .map(|t| t.kind)
    }

    /// The first assembly-station jig by id.
    pub fn assembly_jig(&self) -> Option<&str> {
        let mut v: Vec<&str> = self
            .cell
            .jigs
            .iter()
            .filter(|j| self.db.jig(&j.tool_id).is_some_and(|s| s.station == Station::Assembly))
            .map(|j| j.jig_id.as_str())
            .collect();
        v.sort();
        v.first().copied()
    }

    /// Pose of the assembly frame in the cell.
    pub fn assembly_frame(&self) -> Pose {
        self.assembly_jig()
            .and_then(|j| self.cell.jig(j))
            .map(|j| j.pose)
            .unwrap_or_default()
    }

    /// Cell-frame target of a part.
    pub fn assembly_target(&self, part: &str) -> Result<Pose, TwinError> {
        let d = self.design.as_ref().ok_or(TwinError::NoDesign)?;
        let p = d.part(part).ok_or_else(|| TwinError::NotFound(part.into()))?;
        Ok(self.assembly_frame().compose(&p.assembly_pose))
    }

    pub fn part_model(&self, part: &str) -> Option<&str> {
        self.design.as_ref()?.part(part).map(|p| p.model_id.as_str())
    }
}

impl CellState {
    pub fn world(&self, id: &str) -> Result<Pose, TwinError> {
        if id == CELL {
            return Ok(Pose::identity());
        }
        self.poses
            .get(id)
            .copied()
            .ok_or_else(|| TwinError::NotFound(id.into()))
    }

    /// `parent⁻¹ ∘ child`.
    pub fn transform(&self, parent: &str, child: &str) -> Result<Pose, TwinError> {
        Ok(self.world(parent)?.inverse().compose(&self.world(child)?))
    }

    pub fn is_part(&self, id: &str) -> bool {
        self.attachments.contains_key(id)
    }

    /// Topmost part of the rigid group containing `part`.
    pub fn group_root(&self, part: &str) -> String {
        let mut cur = part.to_string();
        while let Some(a) = self.attachments.get(&cur) {
            if !self.is_part(&a.parent) {
                break;
            }
            cur = a.parent.clone();
        }
        cur
    }

    /// Parts in the same rigid group as `part`, sorted.
    pub fn group(&self, part: &str) -> BTreeSet<String> {
        let root = self.group_root(part);
        self.attachments
            .keys()
            .filter(|p| self.group_root(p) == root)
            .cloned()
            .collect()
    }

    /// Robot whose TCP carries the group of `part`, if any.
    pub fn holder(&self, part: &str) -> Option<String> {
        let root = self.group_root(part);
        let parent = &self.attachments.get(&root)?.parent;
        tcp_owner(parent).map(str::to_string)
    }

    /// Group roots hanging directly from the TCP of `robot`.
    pub fn held_by(&self, robot: &str) -> Vec<String> {
        let tcp = tcp_frame(robot);
        self.attachments
            .iter()
            .filter(|(_, a)| a.parent == tcp)
            .map(|(id, _)| id.clone())
            .collect()
    }

    /// Rebuild world poses of attached parts from their parents.
    pub fn refresh(&mut self) {
        let roots: BTreeMap<String, Pose> = self
            .poses
            .iter()
            .filter(|(k, _)| !self.attachments.contains_key(*k))
            .map(|(k, v)| (k.clone(), *v))
            .collect();
        self.poses = resolve_frames(&roots, &self.attachments).expect("attachment forest is acyclic");
    }

    /// Hang `child` under `parent` keeping its world pose.
    pub fn attach(&mut self, child: &str, parent: &str) -> Result<(), TwinError> {
        let w = self.world(child)?;
        let rel = self.world(parent)?.inverse().compose(&w);
        self.attach_relative(child, parent, rel)
    }

    pub fn attach_relative(&mut self, child: &str, parent: &str, relative: Pose) -> Result<(), TwinError> {
        // Refuse cycles: `parent` must not sit below `child`.
        let mut cur = parent.to_string();
        while let Some(a) = self.attachments.get(&cur) {
            if cur == child {
                return Err(TwinError::BadArgument(format!(
                    "attaching `{child}` under `{parent}` forms a cycle"
                )));
            }
            cur = a.parent.clone();
        }
        if cur == child {
            return Err(TwinError::BadArgument(format!("attaching `{child}` under itself")));
        }
        self.attachments.insert(
            child.to_string(),
            Attachment {
                parent: parent.to_string(),
                relative,
            },
        );
        self.poses.insert(child.to_string(), Pose::identity());
        self.refresh();
        Ok(())
    }
}

/// Sets `robot`'s joints and moves its TCP frame (and whatever hangs off it).
pub fn set_joints(state: &mut CellState, world: &World, robot: &str, q: &[f64]) -> Result<(), TwinError> {
    let r = world
        .cell
        .robot(robot)
        .ok_or_else(|| TwinError::NotFound(robot.into()))?;
    let flange = fk(&r.chain, q).map_err(|e| TwinError::BadArgument(e.to_string()))?;
    let tcp = r
        .base_pose
        .compose(&flange)
        .compose(&tool_tcp(&world.db, &r.mounted_tool));
    state.robot_joints.insert(robot.to_string(), q.to_vec());
    state.poses.insert(tcp_frame(robot), tcp);
    state.refresh();
    Ok(())
}

/// True iff both joint parts sit at their targets.
pub fn joint_parts_placed(state: &CellState, world: &World, joint: &str) -> Result<bool, TwinError> {
    let d = world.design.as_ref().ok_or(TwinError::NoDesign)?;
    let j = d.joint(joint).ok_or_else(|| TwinError::NotFound(joint.into()))?;
    for p in [&j.part_a, &j.part_b] {
        let Ok(w) = state.world(p) else { return Ok(false) };
        if !state.is_part(p) || !w.approx_eq(&world.assembly_target(p)?, LIN_TOL, ANG_TOL) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Where a released group root comes to rest: snapped onto its assembly
/// target, else onto a matching jig seat, else left in the cell frame.
pub fn settle(state: &mut CellState, world: &World, root: &str) -> Result<(), TwinError> {
    let w = state.world(root)?;
    if let (Ok(target), Some(jig)) = (world.assembly_target(root), world.assembly_jig()) {
        if w.approx_eq(&target, LIN_TOL, ANG_TOL) {
            let rel = state.world(jig)?.inverse().compose(&target);
            return state.attach_relative(root, jig, rel);
        }
    }
    let model = world.part_model(root).unwrap_or_default().to_string();
    let mut jigs: Vec<_> = world.cell.jigs.iter().collect();
    jigs.sort_by(|a, b| a.jig_id.cmp(&b.jig_id));
    for j in jigs {
        if let Some(seat) = world.db.jig(&j.tool_id).and_then(|s| s.part_pose_in_jig.get(&model)) {
            let occupied = state
                .attachments
                .iter()
                .any(|(id, a)| a.parent == j.jig_id && id != root);
            if !occupied && w.approx_eq(&j.pose.compose(seat), LIN_TOL, ANG_TOL) {
                return state.attach_relative(root, &j.jig_id, *seat);
            }
        }
    }
    state.attach_relative(root, CELL, w)
}

/// Joins the rigid groups of `joint`'s parts. A group carried by a robot
/// is hung under the part on the other side, at the exact design relation.
pub fn join_groups(state: &mut CellState, world: &World, joint: &str) -> Result<(), TwinError> {
    let d = world.design.as_ref().ok_or(TwinError::NoDesign)?;
    let j = d.joint(joint).ok_or_else(|| TwinError::NotFound(joint.into()))?;
    let (ra, rb) = (state.group_root(&j.part_a), state.group_root(&j.part_b));
    if ra == rb {
        return Ok(());
    }
    let (anchor, moving) = if state.holder(&j.part_a).is_some() && state.holder(&j.part_b).is_none() {
        (&j.part_b, ra)
    } else {
        (&j.part_a, rb)
    };
    let asm = |p: &str| {
        d.part(p)
            .map(|p| p.assembly_pose)
            .ok_or_else(|| TwinError::NotFound(p.into()))
    };
    let rel = asm(anchor)?.inverse().compose(&asm(&moving)?);
    state.attach_relative(&moving, anchor, rel)
}

/// Deviation of the TCP from a fastener's target point and axis, cell frame.
pub fn fastener_deviation(state: &CellState, world: &World, robot: &str, joint: &str) -> Result<(f64, f64), TwinError> {
    let d = world.design.as_ref().ok_or(TwinError::NoDesign)?;
    let j = d.joint(joint).ok_or_else(|| TwinError::NotFound(joint.into()))?;
    if j.kind != JointKind::Fastener {
        return Err(TwinError::NotAFastener(joint.into()));
    }
    let meta = j
        .fastener_meta
        .as_ref()
        .ok_or_else(|| TwinError::NotAFastener(joint.into()))?;
    let frame = world.assembly_frame();
    let point = frame.transform_point(&meta.target_point);
    let axis = frame.transform_vector(&j.axis).normalize();
    let tcp = state.world(&tcp_frame(robot))?;
    let tool_z = tcp.transform_vector(&Vec3::z());
    let angle = tool_z.dot(&axis).clamp(-1.0, 1.0).acos();
    Ok(((tcp.translation - point).norm(), angle))
}
