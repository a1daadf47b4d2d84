//! Tooling database and per-operation tool matching.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::design::{DesignDoc, JointKind, RecipeSet};
use crate::feasibility::{feasible_directions, FeasibilityParams, SubassemblyGeom};
use crate::geom::{Pose, TriMesh, Vec3};
use crate::sequencer::{AssemblySequence, OpKind};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ToolingError {
    #[error("tool id `{0}` already registered")]
    DuplicateToolId(String),
    #[error("tool `{tool_id}`: {message}")]
    Validation { tool_id: String, message: String },
    #[error("tooling file: {0}")]
    Parse(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ToolKind {
    Gripper,
    Jig,
    Screwdriver,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegisterRole {
    Open,
    Close,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Station {
    Input,
    Assembly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GripperSpec {
    pub applicable_models: Vec<String>,
    /// Tool frame in the part frame, per model.
    pub grasp_poses: BTreeMap<String, Vec<Pose>>,
    pub register_states: BTreeMap<RegisterRole, u32>,
    /// Tool centre point in the flange frame.
    #[serde(default)]
    pub tcp: Pose,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JigSpec {
    pub held_models: Vec<String>,
    /// Part frame in the jig frame, per model.
    pub part_pose_in_jig: BTreeMap<String, Pose>,
    pub station: Station,
    /// Collision body in the jig frame.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mesh: Option<TriMesh>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScrewdriverSpec {
    pub holder_type: String,
    pub screw_types: Vec<String>,
    #[serde(default)]
    pub tcp: Pose,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolingRecord {
    pub tool_id: String,
    pub kind: ToolKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gripper: Option<GripperSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jig: Option<JigSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub screwdriver: Option<ScrewdriverSpec>,
}

impl ToolingRecord {
    pub fn validate(&self) -> Result<(), ToolingError> {
        let fail = |m: &str| {
            Err(ToolingError::Validation {
                tool_id: self.tool_id.clone(),
                message: m.into(),
            })
        };
        let present = [self.gripper.is_some(), self.jig.is_some(), self.screwdriver.is_some()];
        let want = match self.kind {
            ToolKind::Gripper => [true, false, false],
            ToolKind::Jig => [false, true, false],
            ToolKind::Screwdriver => [false, false, true],
        };
        if present != want {
            return fail("exactly the sub-record matching the kind must be present");
        }
        if let Some(g) = &self.gripper {
            for m in &g.applicable_models {
                if g.grasp_poses.get(m).is_none_or(|v| v.is_empty()) {
                    return fail(&format!("no grasp pose for model `{m}`"));
                }
            }
            for r in [RegisterRole::Open, RegisterRole::Close] {
                if !g.register_states.contains_key(&r) {
                    return fail("register_states needs open and close");
                }
            }
        }
        if let Some(j) = &self.jig {
            for m in &j.held_models {
                if !j.part_pose_in_jig.contains_key(m) {
                    return fail(&format!("no part pose for held model `{m}`"));
                }
            }
            if let Some(mesh) = &j.mesh {
                if let Err(e) = mesh.validate() {
                    return fail(&e.to_string());
                }
            }
        }
        if let Some(s) = &self.screwdriver {
            if s.screw_types.is_empty() {
                return fail("screwdriver supports no screw type");
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<ToolingRecord>", into = "Vec<ToolingRecord>")]
pub struct ToolingDb {
    pub records: BTreeMap<String, ToolingRecord>,
}

impl TryFrom<Vec<ToolingRecord>> for ToolingDb {
    type Error = ToolingError;

    fn try_from(v: Vec<ToolingRecord>) -> Result<Self, Self::Error> {
        v.into_iter().try_fold(ToolingDb::default(), register_tool)
    }
}

impl From<ToolingDb> for Vec<ToolingRecord> {
    fn from(db: ToolingDb) -> Self {
        db.records.into_values().collect()
    }
}

impl ToolingDb {
    pub fn get(&self, id: &str) -> Option<&ToolingRecord> {
        self.records.get(id)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn gripper(&self, id: &str) -> Option<&GripperSpec> {
        self.get(id).and_then(|r| r.gripper.as_ref())
    }

    pub fn jig(&self, id: &str) -> Option<&JigSpec> {
        self.get(id).and_then(|r| r.jig.as_ref())
    }

    pub fn screwdriver(&self, id: &str) -> Option<&ScrewdriverSpec> {
        self.get(id).and_then(|r| r.screwdriver.as_ref())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("tooling serializes")
    }
}

pub fn load_tooling(bytes: &[u8]) -> Result<ToolingDb, ToolingError> {
    serde_json::from_slice(bytes).map_err(|e| ToolingError::Parse(e.to_string()))
}

pub fn register_tool(mut db: ToolingDb, r: ToolingRecord) -> Result<ToolingDb, ToolingError> {
    if db.records.contains_key(&r.tool_id) {
        return Err(ToolingError::DuplicateToolId(r.tool_id));
    }
    r.validate()?;
    db.records.insert(r.tool_id.clone(), r);
    Ok(db)
}

pub fn match_gripper(db: &ToolingDb, model: &str) -> Vec<(String, Vec<Pose>)> {
    db.records
        .values()
        .filter_map(|r| {
            let g = r.gripper.as_ref()?;
            g.applicable_models
                .iter()
                .any(|m| m == model)
                .then(|| (r.tool_id.clone(), g.grasp_poses[model].clone()))
        })
        .collect()
}

pub fn match_jig(db: &ToolingDb, model: &str, station: Station) -> Vec<String> {
    db.records
        .values()
        .filter(|r| {
            r.jig
                .as_ref()
                .is_some_and(|j| j.station == station && j.held_models.iter().any(|m| m == model))
        })
        .map(|r| r.tool_id.clone())
        .collect()
}

pub fn jigs_at(db: &ToolingDb, station: Station) -> Vec<String> {
    db.records
        .values()
        .filter(|r| r.jig.as_ref().is_some_and(|j| j.station == station))
        .map(|r| r.tool_id.clone())
        .collect()
}

pub fn match_screwdriver(db: &ToolingDb, screw: &str) -> Vec<String> {
    db.records
        .values()
        .filter(|r| {
            r.screwdriver
                .as_ref()
                .is_some_and(|s| s.screw_types.iter().any(|t| t == screw))
        })
        .map(|r| r.tool_id.clone())
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Gripper,
    InputJig,
    AssemblyJig,
    Screwdriver,
    ScrewFeeder,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::Gripper => "gripper",
            Role::InputJig => "input_jig",
            Role::AssemblyJig => "assembly_jig",
            Role::Screwdriver => "screwdriver",
            Role::ScrewFeeder => "screw_feeder",
        }
    }
}

impl std::fmt::Display for Role {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A fastener to drive, in the assembly frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FastenerTarget {
    pub joint_id: String,
    pub screw_type: String,
    pub axis: Vec3,
    pub target_point: Vec3,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResourceRequirement {
    pub kind: OpKind,
    /// Candidate tool models per role, sorted. The feeder role lists screw types.
    pub roles: BTreeMap<Role, Vec<String>>,
    /// Model id of the part handled (Unload/Place) or held (Fasten).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub part_model: Option<String>,
    /// Part held by the gripper while fastening.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub held_part: Option<String>,
    /// Tool frame in the part frame.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grasp_pose: Option<Pose>,
    /// Part frame in the assembly frame.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub place_pose: Option<Pose>,
    /// Unit direction the part arrives from, assembly frame.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub approach: Option<Vec3>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub fasteners: Vec<FastenerTarget>,
}

impl ResourceRequirement {
    fn new(kind: OpKind) -> Self {
        ResourceRequirement {
            kind,
            roles: BTreeMap::new(),
            part_model: None,
            held_part: None,
            grasp_pose: None,
            place_pose: None,
            approach: None,
            fasteners: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnrichedSequence {
    pub base: AssemblySequence,
    pub bindings: BTreeMap<String, ResourceRequirement>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
#[error("op `{op_id}` needs a {role} for `{model}`; none in the tooling database")]
pub struct MissingTooling {
    pub op_id: String,
    pub role: Role,
    pub model: String,
}

/// Preferred approach directions, first feasible wins.
fn approach_candidates() -> [Vec3; 6] {
    [Vec3::z(), Vec3::x(), -Vec3::x(), Vec3::y(), -Vec3::y(), -Vec3::z()]
}

pub fn enrich_sequence(
    s: &AssemblySequence,
    db: &ToolingDb,
    recipes: &RecipeSet,
    design: &DesignDoc,
) -> Result<EnrichedSequence, MissingTooling> {
    let model_of = |p: &str| design.part(p).map(|d| d.model_id.clone()).unwrap_or_default();
    let missing = |op: &str, role, model: &str| MissingTooling {
        op_id: op.into(),
        role,
        model: model.into(),
    };
    let mut bindings = BTreeMap::new();
    let mut placed: BTreeSet<String> = BTreeSet::new();
    let mut last_placed: Option<String> = None;
    for op in &s.ops {
        let mut req = ResourceRequirement::new(op.kind);
        match op.kind {
            OpKind::Unload | OpKind::Place => {
                let model = model_of(&op.subject);
                let inputs = match_jig(db, &model, Station::Input);
                if inputs.is_empty() {
                    return Err(missing(&op.op_id, Role::InputJig, &model));
                }
                req.roles.insert(Role::InputJig, inputs);
                if op.kind == OpKind::Place {
                    let grippers = match_gripper(db, &model);
                    let Some((_, poses)) = grippers.first() else {
                        return Err(missing(&op.op_id, Role::Gripper, &model));
                    };
                    req.grasp_pose = recipes
                        .place_recipes
                        .get(&op.subject)
                        .copied()
                        .or(poses.first().copied());
                    req.roles
                        .insert(Role::Gripper, grippers.iter().map(|g| g.0.clone()).collect());
                    let asm = jigs_at(db, Station::Assembly);
                    if asm.is_empty() {
                        return Err(missing(&op.op_id, Role::AssemblyJig, &model));
                    }
                    req.roles.insert(Role::AssemblyJig, asm);
                    req.place_pose = design.part(&op.subject).map(|p| p.assembly_pose);
                    req.approach = Some(approach_direction(design, &placed, &op.subject));
                    placed.insert(op.subject.clone());
                    last_placed = Some(op.subject.clone());
                }
                req.part_model = Some(model);
            }
            OpKind::Fasten => {
                let joints = op.joint_ids.clone().unwrap_or_default();
                let mut screw_types = BTreeSet::new();
                for jid in &joints {
                    let Some(j) = design.joint(jid) else { continue };
                    if j.kind != JointKind::Fastener {
                        continue;
                    }
                    let meta = j.fastener_meta.as_ref().expect("validated fastener");
                    screw_types.insert(meta.screw_type.clone());
                    req.fasteners.push(FastenerTarget {
                        joint_id: jid.clone(),
                        screw_type: meta.screw_type.clone(),
                        axis: j.axis.normalize(),
                        target_point: meta.target_point,
                    });
                }
                if !screw_types.is_empty() {
                    let mut drivers: Option<BTreeSet<String>> = None;
                    for t in &screw_types {
                        let m: BTreeSet<String> = match_screwdriver(db, t).into_iter().collect();
                        drivers = Some(match drivers {
                            None => m,
                            Some(d) => d.intersection(&m).cloned().collect(),
                        });
                        if drivers.as_ref().is_some_and(BTreeSet::is_empty) {
                            return Err(missing(&op.op_id, Role::Screwdriver, t));
                        }
                    }
                    req.roles
                        .insert(Role::Screwdriver, drivers.unwrap().into_iter().collect());
                    req.roles.insert(Role::ScrewFeeder, screw_types.into_iter().collect());
                }
                if let Some(p) = &last_placed {
                    let model = model_of(p);
                    let grippers = match_gripper(db, &model);
                    if grippers.is_empty() {
                        return Err(missing(&op.op_id, Role::Gripper, &model));
                    }
                    req.roles
                        .insert(Role::Gripper, grippers.into_iter().map(|g| g.0).collect());
                    req.held_part = Some(p.clone());
                    req.part_model = Some(model);
                }
            }
        }
        bindings.insert(op.op_id.clone(), req);
    }
    Ok(EnrichedSequence {
        base: s.clone(),
        bindings,
    })
}

fn approach_direction(design: &DesignDoc, placed: &BTreeSet<String>, part: &str) -> Vec3 {
    if placed.is_empty() {
        return Vec3::z();
    }
    let fixed = SubassemblyGeom::from_design(design, placed);
    let moving = SubassemblyGeom::from_design(design, &BTreeSet::from([part.to_string()]));
    let params = FeasibilityParams {
        directions: approach_candidates().to_vec(),
        eps: design.eps,
        ..FeasibilityParams::default()
    };
    feasible_directions(&fixed, &moving, &params)
        .first()
        .copied()
        .unwrap_or(Vec3::z())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::build_joint_register;
    use crate::fixtures;
    use crate::liaison::build_liaison_graph;
    use crate::sequencer::{enumerate_sequences, DEFAULT_CAP};

    fn triplet_sequences() -> Vec<AssemblySequence> {
        let d = fixtures::triplet_design();
        let g = build_liaison_graph(&build_joint_register(&d), &d.part_ids());
        enumerate_sequences(&g, DEFAULT_CAP).unwrap().sequences
    }

    #[test]
    fn register_and_duplicates() {
        let db = fixtures::tooling_db();
        let n = db.len();
        let mut g = db.get("G1").unwrap().clone();
        g.tool_id = "G2".into();
        let db = register_tool(db, g.clone()).unwrap();
        assert_eq!(db.len(), n + 1);
        assert_eq!(
            register_tool(db, g).unwrap_err(),
            ToolingError::DuplicateToolId("G2".into())
        );
    }

    #[test]
    fn jig_without_part_pose_rejected() {
        let mut j = fixtures::tooling_db().get("JIG_A_IN").unwrap().clone();
        j.tool_id = "JIG_X".into();
        j.jig.as_mut().unwrap().part_pose_in_jig.clear();
        assert!(matches!(
            register_tool(ToolingDb::default(), j),
            Err(ToolingError::Validation { .. })
        ));
    }

    #[test]
    fn kind_mismatch_rejected() {
        let mut g = fixtures::tooling_db().get("G1").unwrap().clone();
        g.kind = ToolKind::Jig;
        assert!(g.validate().is_err());
    }

    #[test]
    fn gripper_matching() {
        let db = fixtures::tooling_db();
        let m = match_gripper(&db, "connector");
        assert_eq!(m.len(), 1);
        assert_eq!(m[0].0, "G1");
        assert_eq!(m[0].1.len(), 2);
        assert!(match_gripper(&db, "nope").is_empty());
        let mut g = db.get("G1").unwrap().clone();
        g.tool_id = "G0".into();
        let db = register_tool(db, g).unwrap();
        let ids: Vec<_> = match_gripper(&db, "connector").into_iter().map(|x| x.0).collect();
        assert_eq!(ids, ["G0", "G1"]);
    }

    #[test]
    fn jig_matching() {
        let db = fixtures::tooling_db();
        assert_eq!(match_jig(&db, "profile", Station::Input), ["JIG_A_IN", "JIG_C_IN"]);
        assert_eq!(match_jig(&db, "profile", Station::Assembly), ["JIG_ASM"]);
        assert!(match_jig(&db, "nope", Station::Input).is_empty());
    }

    #[test]
    fn screwdriver_matching() {
        let db = fixtures::tooling_db();
        assert_eq!(match_screwdriver(&db, fixtures::SCREW), ["SD1"]);
        assert!(match_screwdriver(&db, "M9").is_empty());
        let mut s = db.get("SD1").unwrap().clone();
        s.tool_id = "SD0".into();
        let db = register_tool(db, s).unwrap();
        assert_eq!(match_screwdriver(&db, fixtures::SCREW), ["SD0", "SD1"]);
    }

    #[test]
    fn enrich_abdc() {
        let d = fixtures::triplet_design();
        let db = fixtures::tooling_db();
        let s = &triplet_sequences()[0];
        let e = enrich_sequence(s, &db, &d.recipes, &d).unwrap();
        assert_eq!(e.bindings.len(), s.ops.len());
        let pb = &e.bindings["place_B"];
        assert_eq!(pb.roles[&Role::Gripper], ["G1"]);
        assert_eq!(pb.roles[&Role::InputJig], ["JIG_B_IN"]);
        assert_eq!(pb.roles[&Role::AssemblyJig], ["JIG_ASM"]);
        assert_eq!(pb.approach, Some(Vec3::z()));
        let fd = &e.bindings["fasten_D"];
        assert_eq!(fd.roles[&Role::Screwdriver], ["SD1"]);
        assert_eq!(fd.roles[&Role::Gripper], ["G1"]);
        assert_eq!(fd.held_part.as_deref(), Some("B"));
        assert_eq!(fd.fasteners.len(), 2);
    }

    #[test]
    fn enrich_reports_missing_tools() {
        let d = fixtures::triplet_design();
        let s = &triplet_sequences()[0];
        let mut db = fixtures::tooling_db();
        db.records.remove("SD1");
        let e = enrich_sequence(s, &db, &d.recipes, &d).unwrap_err();
        assert_eq!((e.op_id.as_str(), e.role), ("fasten_D", Role::Screwdriver));
        let mut db = fixtures::tooling_db();
        db.records.remove("G1");
        let e = enrich_sequence(s, &db, &d.recipes, &d).unwrap_err();
        assert_eq!(
            (e.op_id.as_str(), e.role, e.model.as_str()),
            ("place_A", Role::Gripper, "profile")
        );
    }

    #[test]
    fn grasp_recipe_composes_with_part_pose() {
        let d = fixtures::triplet_design();
        let db = fixtures::tooling_db();
        let e = enrich_sequence(&triplet_sequences()[0], &db, &d.recipes, &d).unwrap();
        let pa = &e.bindings["place_A"];
        let tool = pa.place_pose.unwrap().compose(&pa.grasp_pose.unwrap());
        let part = d.part("A").unwrap().assembly_pose;
        assert!((tool.translation - part.translation).norm() < 1e-12);
        assert!((tool.transform_vector(&Vec3::z()) + Vec3::z()).norm() < 1e-12);
    }

    #[test]
    fn db_json_round_trip() {
        let db = fixtures::tooling_db();
        let back = load_tooling(db.to_json().as_bytes()).unwrap();
        assert_eq!(back, db);
        assert!(load_tooling(b"[{\"tool_id\":1}]").is_err());
    }
}
