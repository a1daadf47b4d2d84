//! Binding enriched sequences to the concrete resources of a cell.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::UnitQuaternion;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::design::DesignDoc;
use crate::geom::{Pose, TriMesh, Vec3};
use crate::sequencer::{levels, OpKind, SeqOp};
use crate::tooling::{EnrichedSequence, Role, ToolKind, ToolingDb};
use crate::twin::kinematics::KinematicChain;

/// Hover height above grasp and retreat poses, meters.
pub const CLEARANCE: f64 = 0.08;
/// Distance from which a part starts its final approach.
pub const APPROACH_DISTANCE: f64 = 0.06;
/// The final approach is split into this many straight segments.
pub const APPROACH_STEPS: usize = 4;
/// Back-off along the screw axis before driving.
pub const SCREW_BACKOFF: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkCapsule {
    /// Frame indices: 0 is the base, `dof` the flange, `dof + 1` the TCP.
    pub from: usize,
    pub to: usize,
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobotDesc {
    pub robot_id: String,
    pub base_pose: Pose,
    pub chain: KinematicChain,
    pub mounted_tool: String,
    #[serde(default)]
    pub link_capsules: Vec<LinkCapsule>,
    /// Start joints; zeros when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub home: Option<Vec<f64>>,
}

impl RobotDesc {
    pub fn home_joints(&self) -> Vec<f64> {
        self.home.clone().unwrap_or_else(|| vec![0.0; self.chain.dof()])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JigInstance {
    pub jig_id: String,
    pub tool_id: String,
    pub pose: Pose,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeederInstance {
    pub feeder_id: String,
    pub screw_type: String,
    pub pose: Pose,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Obstacle {
    pub obstacle_id: String,
    pub mesh: TriMesh,
    pub pose: Pose,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellDescription {
    pub cell_id: String,
    pub robots: Vec<RobotDesc>,
    pub jigs: Vec<JigInstance>,
    #[serde(default)]
    pub screw_feeders: Vec<FeederInstance>,
    #[serde(default)]
    pub obstacles: Vec<Obstacle>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CellError {
    #[error("duplicate object id `{0}` in cell")]
    DuplicateId(String),
    #[error("cell references unknown tool `{0}`")]
    UnknownTool(String),
    #[error("robot `{robot}`: {message}")]
    BadRobot { robot: String, message: String },
}

impl CellDescription {
    pub fn validate(&self, db: &ToolingDb) -> Result<(), CellError> {
        let mut ids = BTreeSet::from(["cell".to_string()]);
        let all = self
            .robots
            .iter()
            .map(|r| &r.robot_id)
            .chain(self.jigs.iter().map(|j| &j.jig_id))
            .chain(self.screw_feeders.iter().map(|f| &f.feeder_id))
            .chain(self.obstacles.iter().map(|o| &o.obstacle_id));
        for id in all {
            if !ids.insert(id.clone()) {
                return Err(CellError::DuplicateId(id.clone()));
            }
        }
        for r in &self.robots {
            if db.get(&r.mounted_tool).is_none() {
                return Err(CellError::UnknownTool(r.mounted_tool.clone()));
            }
            let bad = |m: String| CellError::BadRobot {
                robot: r.robot_id.clone(),
                message: m,
            };
            r.chain.validate().map_err(bad)?;
            if r.home.as_ref().is_some_and(|h| !r.chain.within_limits(h)) {
                return Err(bad("home joints outside limits".into()));
            }
            let top = r.chain.dof() + 1;
            if r.link_capsules
                .iter()
                .any(|c| c.from > top || c.to > top || c.radius < 0.0)
            {
                return Err(bad("link capsule frame index out of range".into()));
            }
        }
        for j in &self.jigs {
            if db.jig(&j.tool_id).is_none() {
                return Err(CellError::UnknownTool(j.tool_id.clone()));
            }
        }
        Ok(())
    }

    pub fn robot(&self, id: &str) -> Option<&RobotDesc> {
        self.robots.iter().find(|r| r.robot_id == id)
    }

    pub fn jig(&self, id: &str) -> Option<&JigInstance> {
        self.jigs.iter().find(|j| j.jig_id == id)
    }

    pub fn feeder(&self, id: &str) -> Option<&FeederInstance> {
        self.screw_feeders.iter().find(|f| f.feeder_id == id)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("cell serializes")
    }
}

/// Per-screw motion targets for a Fasten.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScrewTargets {
    pub joint_id: String,
    pub feeder: String,
    pub targets: BTreeMap<String, Pose>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundOp {
    pub op: SeqOp,
    pub level: usize,
    pub resources: BTreeMap<Role, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub part_model: Option<String>,
    /// Place only: the gripper keeps the part for the following Fasten.
    #[serde(default)]
    pub hold: bool,
    /// Fasten only: the part the gripper lets go of afterwards.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub held_part: Option<String>,
    /// Named tool-centre-point targets in the cell frame.
    pub targets: BTreeMap<String, Pose>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub screws: Vec<ScrewTargets>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bop {
    pub bop_id: String,
    pub cell_id: String,
    pub sequence_id: String,
    pub label: String,
    pub ops: Vec<BoundOp>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Error)]
#[error("sequence {sequence_id}: op `{op_id}` has no {role} of model `{model}` available")]
pub struct MatchFailure {
    pub sequence_id: String,
    pub op_id: String,
    pub role: Role,
    pub model: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LevelError {
    #[error("precedence graph has a cycle")]
    CycleDetected,
}

/// Longest-predecessor-path depth of every op.
pub fn assign_levels(s: &EnrichedSequence) -> Result<BTreeMap<String, usize>, LevelError> {
    let preds = crate::sequencer::precedence(&s.base);
    if preds.iter().enumerate().any(|(i, p)| p.iter().any(|&j| j >= i)) {
        return Err(LevelError::CycleDetected);
    }
    Ok(s.base
        .ops
        .iter()
        .zip(levels(&s.base))
        .map(|(o, l)| (o.op_id.clone(), l))
        .collect())
}

/// Rotation taking +z onto `axis`; a half turn about x when antiparallel.
pub fn z_onto(axis: &Vec3) -> UnitQuaternion<f64> {
    UnitQuaternion::rotation_between(&Vec3::z(), axis)
        .unwrap_or_else(|| UnitQuaternion::from_axis_angle(&Vec3::x_axis(), std::f64::consts::PI))
}

/// Tool-down pick pose on a screw feeder.
pub fn feeder_pick(f: &FeederInstance) -> Pose {
    f.pose.compose(&Pose::from_axis_angle(Vec3::x(), std::f64::consts::PI))
}

fn up(p: &Pose, h: f64) -> Pose {
    p.translated(&Vec3::new(0.0, 0.0, h))
}

struct Matcher<'a> {
    s: &'a EnrichedSequence,
    cell: &'a CellDescription,
    used: BTreeSet<(usize, Role, String)>,
}

impl Matcher<'_> {
    fn fail(&self, op: &SeqOp, role: Role, model: &str) -> MatchFailure {
        MatchFailure {
            sequence_id: self.s.base.sequence_id.clone(),
            op_id: op.op_id.clone(),
            role,
            model: model.into(),
        }
    }

    /// Lowest-id instance among `candidates` not yet used on this level.
    fn take(&mut self, level: usize, role: Role, candidates: Vec<String>) -> Option<String> {
        let pick = candidates
            .into_iter()
            .find(|c| !self.used.contains(&(level, role, c.clone())))?;
        self.used.insert((level, role, pick.clone()));
        Some(pick)
    }

    fn robots_with(&self, models: &[String]) -> Vec<String> {
        let mut v: Vec<String> = self
            .cell
            .robots
            .iter()
            .filter(|r| models.contains(&r.mounted_tool))
            .map(|r| r.robot_id.clone())
            .collect();
        v.sort();
        v
    }

    fn jigs_with(&self, models: &[String]) -> Vec<String> {
        let mut v: Vec<String> = self
            .cell
            .jigs
            .iter()
            .filter(|j| models.contains(&j.tool_id))
            .map(|j| j.jig_id.clone())
            .collect();
        v.sort();
        v
    }
}

fn model_list(m: &[String]) -> String {
    m.join("|")
}

pub fn match_cell(
    s: &EnrichedSequence,
    cell: &CellDescription,
    db: &ToolingDb,
    design: &DesignDoc,
) -> Result<Bop, MatchFailure> {
    let lv = levels(&s.base);
    let mut m = Matcher {
        s,
        cell,
        used: BTreeSet::new(),
    };
    let mut bound: Vec<BoundOp> = Vec::with_capacity(s.base.ops.len());
    let mut input_jig_of: BTreeMap<String, String> = BTreeMap::new();
    let mut gripper_of: BTreeMap<String, String> = BTreeMap::new();
    let mut asm_jig: Option<String> = None;
    let mut placed: BTreeSet<String> = BTreeSet::new();

    for (i, op) in s.base.ops.iter().enumerate() {
        let req = &s.bindings[&op.op_id];
        let level = lv[i];
        let mut resources = BTreeMap::new();
        let mut targets = BTreeMap::new();
        let mut screws = Vec::new();
        let mut hold = false;
        let model = req.part_model.clone().unwrap_or_default();
        match op.kind {
            OpKind::Unload => {
                let cands = m.jigs_with(&req.roles[&Role::InputJig]);
                let jig = m
                    .take(level, Role::InputJig, cands)
                    .ok_or_else(|| m.fail(op, Role::InputJig, &model_list(&req.roles[&Role::InputJig])))?;
                input_jig_of.insert(op.subject.clone(), jig.clone());
                resources.insert(Role::InputJig, jig);
            }
            OpKind::Place => {
                let gm = &req.roles[&Role::Gripper];
                let cands = m.robots_with(gm);
                let robot = m
                    .take(level, Role::Gripper, cands)
                    .ok_or_else(|| m.fail(op, Role::Gripper, &model_list(gm)))?;
                let in_jig = input_jig_of
                    .get(&op.subject)
                    .cloned()
                    .ok_or_else(|| m.fail(op, Role::InputJig, &model_list(&req.roles[&Role::InputJig])))?;
                let am = &req.roles[&Role::AssemblyJig];
                let jig_id = match &asm_jig {
                    Some(j) => j.clone(),
                    None => {
                        let j = m
                            .jigs_with(am)
                            .into_iter()
                            .next()
                            .ok_or_else(|| m.fail(op, Role::AssemblyJig, &model_list(am)))?;
                        asm_jig = Some(j.clone());
                        j
                    }
                };
                if !m.used.insert((level, Role::AssemblyJig, jig_id.clone())) {
                    return Err(m.fail(op, Role::AssemblyJig, &cell.jig(&jig_id).unwrap().tool_id));
                }
                let jig_inst = cell.jig(&jig_id).unwrap();
                let jig_spec = db.jig(&jig_inst.tool_id).expect("validated cell");
                let place_pose = req.place_pose.expect("place pose resolved");
                let seated = jig_spec
                    .part_pose_in_jig
                    .get(&model)
                    .is_some_and(|p| p.approx_eq(&place_pose, 1e-9, 1e-9));
                let next = s.base.ops.get(i + 1);
                let fastened_next = next.is_some_and(|n| {
                    n.kind == OpKind::Fasten
                        && n.joint_ids.iter().flatten().any(|j| {
                            design.joint(j).is_some_and(|jd| {
                                (jd.part_a == op.subject && placed.contains(&jd.part_b))
                                    || (jd.part_b == op.subject && placed.contains(&jd.part_a))
                            })
                        })
                });
                if !seated && !fastened_next {
                    return Err(m.fail(op, Role::AssemblyJig, &jig_inst.tool_id));
                }
                hold = !seated;

                let grasp = req.grasp_pose.expect("grasp resolved");
                let src_jig = cell.jig(&in_jig).unwrap();
                let seat = db
                    .jig(&src_jig.tool_id)
                    .and_then(|j| j.part_pose_in_jig.get(&model))
                    .copied()
                    .unwrap_or_default();
                let grasp_tcp = src_jig.pose.compose(&seat).compose(&grasp);
                let place_tcp = jig_inst.pose.compose(&place_pose).compose(&grasp);
                let approach = jig_inst.pose.transform_vector(&req.approach.unwrap_or(Vec3::z()));
                let pre_place = place_tcp.translated(&(approach * APPROACH_DISTANCE));
                targets.insert("pre_grasp".into(), up(&grasp_tcp, CLEARANCE));
                targets.insert("grasp".into(), grasp_tcp);
                targets.insert("lift".into(), up(&grasp_tcp, CLEARANCE));
                targets.insert("pre_place_high".into(), up(&pre_place, CLEARANCE));
                for k in 0..APPROACH_STEPS {
                    let f = (APPROACH_STEPS - k) as f64 / APPROACH_STEPS as f64;
                    targets.insert(
                        format!("approach_{k}"),
                        place_tcp.translated(&(approach * APPROACH_DISTANCE * f)),
                    );
                }
                targets.insert("place".into(), place_tcp);
                let retreat = if hold { place_tcp } else { up(&place_tcp, CLEARANCE) };
                targets.insert("retreat".into(), retreat);
                gripper_of.insert(op.subject.clone(), robot.clone());
                resources.insert(Role::Gripper, robot);
                resources.insert(Role::InputJig, in_jig);
                resources.insert(Role::AssemblyJig, jig_id);
                placed.insert(op.subject.clone());
            }
            OpKind::Fasten => {
                if let Some(dm) = req.roles.get(&Role::Screwdriver) {
                    let cands = m.robots_with(dm);
                    let robot = m
                        .take(level, Role::Screwdriver, cands)
                        .ok_or_else(|| m.fail(op, Role::Screwdriver, &model_list(dm)))?;
                    let frame = asm_jig
                        .as_ref()
                        .and_then(|j| cell.jig(j))
                        .map(|j| j.pose)
                        .unwrap_or_default();
                    let mut feeder_for: BTreeMap<String, String> = BTreeMap::new();
                    for t in &req.roles[&Role::ScrewFeeder] {
                        let mut cands: Vec<String> = cell
                            .screw_feeders
                            .iter()
                            .filter(|f| &f.screw_type == t)
                            .map(|f| f.feeder_id.clone())
                            .collect();
                        cands.sort();
                        let f = m
                            .take(level, Role::ScrewFeeder, cands)
                            .ok_or_else(|| m.fail(op, Role::ScrewFeeder, t))?;
                        feeder_for.insert(t.clone(), f);
                    }
                    for f in &req.fasteners {
                        let feeder = cell.feeder(&feeder_for[&f.screw_type]).unwrap();
                        let axis = frame.transform_vector(&f.axis);
                        let tcp = Pose::new(frame.transform_point(&f.target_point), z_onto(&axis));
                        let pick = feeder_pick(feeder);
                        let t = BTreeMap::from([
                            ("pre_feeder".to_string(), up(&pick, CLEARANCE)),
                            ("feeder".to_string(), pick),
                            ("pre_fasten".to_string(), tcp.translated(&(-axis * SCREW_BACKOFF))),
                            ("fasten".to_string(), tcp),
                        ]);
                        screws.push(ScrewTargets {
                            joint_id: f.joint_id.clone(),
                            feeder: feeder.feeder_id.clone(),
                            targets: t,
                        });
                    }
                    if let Some(first) = screws.first() {
                        targets.insert("park".into(), first.targets["pre_feeder"]);
                    }
                    resources.insert(
                        Role::ScrewFeeder,
                        feeder_for.values().next().cloned().unwrap_or_default(),
                    );
                    resources.insert(Role::Screwdriver, robot);
                }
                if let Some(held) = &req.held_part {
                    let robot = gripper_of.get(held).cloned().unwrap_or_default();
                    if !m.used.insert((level, Role::Gripper, robot.clone())) {
                        return Err(m.fail(op, Role::Gripper, &model_list(&req.roles[&Role::Gripper])));
                    }
                    let place = bound
                        .iter()
                        .find(|b| b.op.kind == OpKind::Place && &b.op.subject == held)
                        .map(|b| b.targets["place"])
                        .unwrap_or_default();
                    targets.insert("release_retreat".into(), up(&place, CLEARANCE));
                    resources.insert(Role::Gripper, robot);
                }
            }
        }
        bound.push(BoundOp {
            op: op.clone(),
            level,
            resources,
            part_model: req.part_model.clone(),
            hold,
            held_part: if op.kind == OpKind::Fasten {
                req.held_part.clone()
            } else {
                None
            },
            targets,
            screws,
        });
    }
    // Fasten ops release only parts that were held; parts seated in the jig
    // were let go at their Place.
    let held: BTreeSet<String> = bound
        .iter()
        .filter(|b| b.op.kind == OpKind::Place && b.hold)
        .map(|b| b.op.subject.clone())
        .collect();
    for b in bound.iter_mut().filter(|b| b.op.kind == OpKind::Fasten) {
        if b.held_part.as_ref().is_some_and(|p| !held.contains(p)) {
            b.held_part = None;
            b.targets.remove("release_retreat");
            b.resources.remove(&Role::Gripper);
        }
    }
    let order: Vec<usize> = {
        let mut idx: Vec<usize> = (0..bound.len()).collect();
        idx.sort_by_key(|&i| (bound[i].level, i));
        idx
    };
    let mut slots: Vec<Option<BoundOp>> = bound.into_iter().map(Some).collect();
    let ops = order.into_iter().map(|i| slots[i].take().unwrap()).collect();
    Ok(Bop {
        bop_id: format!("{}-{}", cell.cell_id, s.base.sequence_id),
        cell_id: cell.cell_id.clone(),
        sequence_id: s.base.sequence_id.clone(),
        label: s.base.label.clone(),
        ops,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SelectError {
    #[error("no cells to match against")]
    NoCells,
    #[error("no cell can run the sequence")]
    NoMatch(Vec<(String, MatchFailure)>),
}

/// First cell (input order) that yields a BOP.
pub fn select_cell(
    s: &EnrichedSequence,
    cells: &[CellDescription],
    db: &ToolingDb,
    design: &DesignDoc,
) -> Result<(String, Bop), SelectError> {
    if cells.is_empty() {
        return Err(SelectError::NoCells);
    }
    let results = crate::par::map(crate::par::Exec::default(), cells, |c| match_cell(s, c, db, design));
    let mut failures = Vec::new();
    for (c, r) in cells.iter().zip(results) {
        match r {
            Ok(b) => return Ok((c.cell_id.clone(), b)),
            Err(f) => failures.push((c.cell_id.clone(), f)),
        }
    }
    Err(SelectError::NoMatch(failures))
}

/// Checks the BOP invariants: resources exist, per-level injectivity, and
/// levels above every predecessor.
pub fn check_bop(b: &Bop, s: &EnrichedSequence, cell: &CellDescription, db: &ToolingDb) -> Result<(), String> {
    let mut seen = BTreeSet::new();
    for o in &b.ops {
        for (role, id) in &o.resources {
            let exists = cell.robot(id).is_some() || cell.jig(id).is_some() || cell.feeder(id).is_some();
            if !exists {
                return Err(format!("{}: unknown resource {id}", o.op.op_id));
            }
            if !seen.insert((o.level, *role, id.clone())) {
                return Err(format!("{}: {role} {id} reused on level {}", o.op.op_id, o.level));
            }
        }
        for (role, kind) in [
            (Role::Gripper, ToolKind::Gripper),
            (Role::Screwdriver, ToolKind::Screwdriver),
        ] {
            if let Some(r) = o.resources.get(&role) {
                let tool = cell.robot(r).and_then(|r| db.get(&r.mounted_tool));
                if tool.map(|t| t.kind) != Some(kind) {
                    return Err(format!("{}: {r} does not carry a {role}", o.op.op_id));
                }
            }
        }
    }
    let preds = crate::sequencer::precedence(&s.base);
    let level_of: BTreeMap<&str, usize> = b.ops.iter().map(|o| (o.op.op_id.as_str(), o.level)).collect();
    for (i, p) in preds.iter().enumerate() {
        let li = level_of[s.base.ops[i].op_id.as_str()];
        for &j in p {
            if level_of[s.base.ops[j].op_id.as_str()] >= li {
                return Err(format!("{} not above its predecessor", s.base.ops[i].op_id));
            }
        }
    }
    Ok(())
}
