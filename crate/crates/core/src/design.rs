//! Design documents: parts with meshes and assembly poses, declared joints,
//! and the gripper/jig recipes extracted alongside them.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{PlacedMesh, Pose, TriMesh, Vec3, DEFAULT_EPS};
use crate::par::{self, Exec};

#[derive(Debug, Error)]
pub enum DesignError {
    #[error("schema error at `{path}`: {message}")]
    Schema { path: String, message: String },
    #[error("geometry error in `{subject}`: {message}")]
    Geometry { subject: String, message: String },
    #[error("reference error: `{name}` referenced by {context} does not exist")]
    Reference { name: String, context: String },
}

fn default_eps() -> f64 {
    DEFAULT_EPS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignDoc {
    pub design_id: String,
    #[serde(default = "default_eps")]
    pub eps: f64,
    pub parts: Vec<PartDef>,
    #[serde(default)]
    pub joints: Vec<JointDef>,
    #[serde(default)]
    pub recipes: RecipeSet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartDef {
    pub part_id: String,
    pub model_id: String,
    /// Closed mesh in the part frame.
    pub mesh: TriMesh,
    /// Part frame to assembly frame.
    pub assembly_pose: Pose,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JointKind {
    Rigid,
    Fastener,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FastenerMeta {
    pub screw_type: String,
    /// Assembly frame, meters.
    pub target_point: Vec3,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointDef {
    pub joint_id: String,
    pub kind: JointKind,
    pub part_a: String,
    pub part_b: String,
    /// Unit vector in the assembly frame. For fasteners this is the driving
    /// direction of the screw.
    pub axis: Vec3,
    pub origin: Vec3,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fastener_meta: Option<FastenerMeta>,
}

/// Gripper and jig poses captured from the recipe design file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RecipeSetRepr", into = "RecipeSetRepr")]
pub struct RecipeSet {
    /// Gripper frame relative to the part frame while grasping, per model.
    pub grasp_recipes: BTreeMap<String, Vec<Pose>>,
    /// Gripper frame relative to the part frame at insertion, per part.
    pub place_recipes: BTreeMap<String, Pose>,
    /// Part frame in the jig frame, keyed by `(jig_model, model_id)`.
    pub jig_part_poses: BTreeMap<(String, String), Pose>,
    /// Models that are never handled by a gripper.
    pub ungraspable: BTreeSet<String>,
}

#[derive(Serialize, Deserialize)]
struct GraspEntry {
    model_id: String,
    poses: Vec<Pose>,
}

#[derive(Serialize, Deserialize)]
struct PlaceEntry {
    part_id: String,
    pose: Pose,
}

#[derive(Serialize, Deserialize)]
struct JigPartEntry {
    jig_model: String,
    model_id: String,
    pose: Pose,
}

#[derive(Serialize, Deserialize)]
struct RecipeSetRepr {
    #[serde(default)]
    grasp: Vec<GraspEntry>,
    #[serde(default)]
    place: Vec<PlaceEntry>,
    #[serde(default)]
    jig_part: Vec<JigPartEntry>,
    #[serde(default)]
    ungraspable: Vec<String>,
}

impl TryFrom<RecipeSetRepr> for RecipeSet {
    type Error = String;

    fn try_from(r: RecipeSetRepr) -> Result<Self, String> {
        let mut out = RecipeSet::default();
        for g in r.grasp {
            if out.grasp_recipes.insert(g.model_id.clone(), g.poses).is_some() {
                return Err(format!("duplicate grasp recipe for model `{}`", g.model_id));
            }
        }
        for p in r.place {
            if out.place_recipes.insert(p.part_id.clone(), p.pose).is_some() {
                return Err(format!("duplicate place recipe for part `{}`", p.part_id));
            }
        }
        for j in r.jig_part {
            let key = (j.jig_model, j.model_id);
            if out.jig_part_poses.insert(key.clone(), j.pose).is_some() {
                return Err(format!("duplicate jig pose for ({}, {})", key.0, key.1));
            }
        }
        out.ungraspable = r.ungraspable.into_iter().collect();
        Ok(out)
    }
}

impl From<RecipeSet> for RecipeSetRepr {
    fn from(r: RecipeSet) -> Self {
        RecipeSetRepr {
            grasp: r
                .grasp_recipes
                .into_iter()
                .map(|(model_id, poses)| GraspEntry { model_id, poses })
                .collect(),
            place: r
                .place_recipes
                .into_iter()
                .map(|(part_id, pose)| PlaceEntry { part_id, pose })
                .collect(),
            jig_part: r
                .jig_part_poses
                .into_iter()
                .map(|((jig_model, model_id), pose)| JigPartEntry {
                    jig_model,
                    model_id,
                    pose,
                })
                .collect(),
            ungraspable: r.ungraspable.into_iter().collect(),
        }
    }
}

impl DesignDoc {
    pub fn part(&self, id: &str) -> Option<&PartDef> {
        self.parts.iter().find(|p| p.part_id == id)
    }

    pub fn joint(&self, id: &str) -> Option<&JointDef> {
        self.joints.iter().find(|j| j.joint_id == id)
    }

    pub fn part_ids(&self) -> BTreeSet<String> {
        self.parts.iter().map(|p| p.part_id.clone()).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("design serializes")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Issue {
    pub severity: Severity,
    pub code: String,
    pub subject: String,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub issues: Vec<Issue>,
}

impl ValidationReport {
    fn push(&mut self, severity: Severity, code: &str, subject: impl Into<String>, message: impl Into<String>) {
        self.issues.push(Issue {
            severity,
            code: code.to_string(),
            subject: subject.into(),
            message: message.into(),
        });
    }

    pub fn errors(&self) -> impl Iterator<Item = &Issue> {
        self.issues.iter().filter(|i| i.severity == Severity::Error)
    }

    pub fn warnings(&self) -> impl Iterator<Item = &Issue> {
        self.issues.iter().filter(|i| i.severity == Severity::Warning)
    }

    pub fn is_valid(&self) -> bool {
        self.errors().next().is_none()
    }
}

/// Full structural, referential and geometric check of a design. Never
/// fails; problems are reported as issues.
pub fn validate_design(d: &DesignDoc) -> ValidationReport {
    let mut r = ValidationReport::default();
    if d.parts.is_empty() {
        r.push(Severity::Error, "empty_parts", "parts", "design has no parts");
    }
    if !(d.eps.is_finite() && d.eps > 0.0) {
        r.push(
            Severity::Error,
            "bad_eps",
            "eps",
            format!("eps must be positive, got {}", d.eps),
        );
    }

    let mut seen = BTreeSet::new();
    let mut mesh_ok = BTreeSet::new();
    for (i, p) in d.parts.iter().enumerate() {
        if !seen.insert(p.part_id.as_str()) {
            r.push(
                Severity::Error,
                "duplicate_id",
                format!("parts[{i}].part_id"),
                format!("part id `{}` is not unique", p.part_id),
            );
        }
        if p.model_id.is_empty() {
            r.push(Severity::Error, "empty_model", &p.part_id, "model_id must be non-empty");
        }
        match p.mesh.validate() {
            Ok(()) => {
                mesh_ok.insert(i);
            }
            Err(e) => r.push(Severity::Error, "invalid_mesh", &p.part_id, e.to_string()),
        }
    }

    let mut joint_ids = BTreeSet::new();
    for (i, j) in d.joints.iter().enumerate() {
        if !joint_ids.insert(j.joint_id.as_str()) {
            r.push(
                Severity::Error,
                "duplicate_id",
                format!("joints[{i}].joint_id"),
                format!("joint id `{}` is not unique", j.joint_id),
            );
        }
        for end in [&j.part_a, &j.part_b] {
            if !seen.contains(end.as_str()) {
                r.push(
                    Severity::Error,
                    "dangling_reference",
                    end.clone(),
                    format!("joint `{}` references missing part `{end}`", j.joint_id),
                );
            }
        }
        if j.part_a == j.part_b {
            r.push(
                Severity::Error,
                "self_joint",
                &j.joint_id,
                "joint must connect two distinct parts",
            );
        }
        if (j.axis.norm() - 1.0).abs() > 1e-9 {
            r.push(
                Severity::Error,
                "bad_axis",
                &j.joint_id,
                "joint axis must be unit length",
            );
        }
        match (j.kind, &j.fastener_meta) {
            (JointKind::Fastener, None) => r.push(
                Severity::Error,
                "fastener_meta",
                &j.joint_id,
                "fastener joint lacks fastener_meta",
            ),
            (JointKind::Rigid, Some(_)) => r.push(
                Severity::Error,
                "fastener_meta",
                &j.joint_id,
                "rigid joint carries fastener_meta",
            ),
            _ => {}
        }
    }

    for part in d.recipes.place_recipes.keys() {
        if !seen.contains(part.as_str()) {
            r.push(
                Severity::Warning,
                "unknown_recipe_part",
                part.clone(),
                format!("place recipe for unknown part `{part}`"),
            );
        }
    }
    for w in missing_recipes(d) {
        r.push(
            Severity::Warning,
            "missing_recipe",
            w.model_id.clone(),
            format!("model `{}` has no grasp recipe", w.model_id),
        );
    }

    // Pairwise interference at the assembly poses.
    let placed: Vec<Option<PlacedMesh>> = d
        .parts
        .iter()
        .enumerate()
        .map(|(i, p)| mesh_ok.contains(&i).then(|| PlacedMesh::new(&p.mesh, &p.assembly_pose)))
        .collect();
    let pairs: Vec<(usize, usize)> = (0..d.parts.len())
        .flat_map(|i| (i + 1..d.parts.len()).map(move |j| (i, j)))
        .filter(|&(i, j)| placed[i].is_some() && placed[j].is_some())
        .collect();
    let hits = par::map(Exec::default(), &pairs, |&(i, j)| {
        placed[i]
            .as_ref()
            .unwrap()
            .overlaps_volume(placed[j].as_ref().unwrap(), d.eps)
    });
    for (&(i, j), hit) in pairs.iter().zip(hits) {
        if hit {
            let (a, b) = (&d.parts[i].part_id, &d.parts[j].part_id);
            r.push(
                Severity::Error,
                "assembled_interference",
                format!("{a}/{b}"),
                format!("parts `{a}` and `{b}` overlap in volume at their assembly poses"),
            );
        }
    }
    r
}

/// Parse and fully validate a design document.
pub fn load_design(bytes: &[u8]) -> Result<DesignDoc, DesignError> {
    let de = &mut serde_json::Deserializer::from_slice(bytes);
    let doc: DesignDoc = serde_path_to_error::deserialize(de).map_err(|e| DesignError::Schema {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })?;
    let report = validate_design(&doc);
    if let Some(issue) = report.errors().next() {
        return Err(match issue.code.as_str() {
            "dangling_reference" => DesignError::Reference {
                name: issue.subject.clone(),
                context: issue.message.clone(),
            },
            "invalid_mesh" | "assembled_interference" => DesignError::Geometry {
                subject: issue.subject.clone(),
                message: issue.message.clone(),
            },
            "empty_parts" => DesignError::Schema {
                path: "parts".into(),
                message: "at least one part is required".into(),
            },
            _ => DesignError::Schema {
                path: issue.subject.clone(),
                message: issue.message.clone(),
            },
        });
    }
    Ok(doc)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegisterEntry {
    pub part_a: String,
    pub part_b: String,
    pub kind: JointKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub screw_type: Option<String>,
}

/// Every joint mapped to the two parts it connects.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct JointRegister {
    pub entries: BTreeMap<String, RegisterEntry>,
}

impl JointRegister {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

pub fn build_joint_register(d: &DesignDoc) -> JointRegister {
    JointRegister {
        entries: d
            .joints
            .iter()
            .map(|j| {
                (
                    j.joint_id.clone(),
                    RegisterEntry {
                        part_a: j.part_a.clone(),
                        part_b: j.part_b.clone(),
                        kind: j.kind,
                        screw_type: j.fastener_meta.as_ref().map(|m| m.screw_type.clone()),
                    },
                )
            })
            .collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MissingRecipe {
    pub model_id: String,
}

fn missing_recipes(d: &DesignDoc) -> Vec<MissingRecipe> {
    let models: BTreeSet<&str> = d.parts.iter().map(|p| p.model_id.as_str()).collect();
    models
        .into_iter()
        .filter(|m| !d.recipes.ungraspable.contains(*m) && d.recipes.grasp_recipes.get(*m).is_none_or(|v| v.is_empty()))
        .map(|m| MissingRecipe {
            model_id: m.to_string(),
        })
        .collect()
}

/// The recipe set, plus a warning per graspable model without a grasp pose.
pub fn extract_recipes(d: &DesignDoc) -> (RecipeSet, Vec<MissingRecipe>) {
    (d.recipes.clone(), missing_recipes(d))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::geom::Vec3;

    #[test]
    fn triplet_loads() {
        let json = fixtures::triplet_design().to_json();
        let d = load_design(json.as_bytes()).unwrap();
        assert_eq!(d.parts.len(), 3);
        assert_eq!(d.joints.len(), 4);
        assert!(validate_design(&d).issues.is_empty());
    }

    #[test]
    fn empty_parts_is_schema_error() {
        let mut d = fixtures::triplet_design();
        d.parts.clear();
        d.joints.clear();
        let err = load_design(d.to_json().as_bytes()).unwrap_err();
        assert!(matches!(err, DesignError::Schema { .. }), "{err}");
    }

    #[test]
    fn dangling_part_reference() {
        let mut d = fixtures::triplet_design();
        d.joints[0].part_b = "Z".into();
        match load_design(d.to_json().as_bytes()).unwrap_err() {
            DesignError::Reference { name, .. } => assert_eq!(name, "Z"),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn malformed_json_reports_path() {
        let json = fixtures::triplet_design()
            .to_json()
            .replace("\"assembly_pose\"", "\"assembly_pos\"");
        match load_design(json.as_bytes()).unwrap_err() {
            DesignError::Schema { path, .. } => assert!(path.starts_with("parts[0]"), "{path}"),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn bad_mesh_is_geometry_error() {
        let mut d = fixtures::triplet_design();
        d.parts[1].mesh.triangles.pop();
        assert!(matches!(
            load_design(d.to_json().as_bytes()),
            Err(DesignError::Geometry { .. })
        ));
    }

    #[test]
    fn register_counts_per_pair() {
        let r = build_joint_register(&fixtures::triplet_design());
        assert_eq!(r.len(), 4);
        let ab = r
            .entries
            .values()
            .filter(|e| (e.part_a.as_str(), e.part_b.as_str()) == ("A", "B"))
            .count();
        let bc = r
            .entries
            .values()
            .filter(|e| (e.part_a.as_str(), e.part_b.as_str()) == ("B", "C"))
            .count();
        assert_eq!((ab, bc), (2, 2));
        assert!(r.entries.values().all(|e| e.screw_type.as_deref() == Some("M5x12")));
    }

    #[test]
    fn empty_register_and_mixed_kinds() {
        let mut d = fixtures::triplet_design();
        d.joints.clear();
        assert!(build_joint_register(&d).is_empty());

        let d = fixtures::chain4_design();
        let mut mixed = d.clone();
        mixed.joints.push(JointDef {
            joint_id: "S1".into(),
            kind: JointKind::Fastener,
            part_a: "A".into(),
            part_b: "B".into(),
            axis: Vec3::z(),
            origin: Vec3::zeros(),
            fastener_meta: Some(FastenerMeta {
                screw_type: "M4x8".into(),
                target_point: Vec3::zeros(),
            }),
        });
        let r = build_joint_register(&mixed);
        for j in &mixed.joints {
            let e = &r.entries[&j.joint_id];
            assert_eq!(e.kind, j.kind);
            assert_eq!(e.screw_type.is_some(), j.kind == JointKind::Fastener);
        }
    }

    #[test]
    fn recipes_cover_triplet_models_and_jigs() {
        let (r, warnings) = extract_recipes(&fixtures::triplet_design());
        assert!(warnings.is_empty());
        assert!(r.grasp_recipes.contains_key("profile"));
        assert!(r.grasp_recipes.contains_key("connector"));
        let jigs: BTreeSet<&str> = r.jig_part_poses.keys().map(|(j, _)| j.as_str()).collect();
        assert_eq!(jigs, BTreeSet::from(["JIG_A_IN", "JIG_B_IN", "JIG_C_IN", "JIG_ASM"]));
    }

    #[test]
    fn missing_recipe_warning() {
        let mut d = fixtures::triplet_design();
        d.recipes.grasp_recipes.remove("connector");
        let (_, warnings) = extract_recipes(&d);
        assert_eq!(
            warnings,
            vec![MissingRecipe {
                model_id: "connector".into()
            }]
        );
        d.recipes.ungraspable.insert("connector".into());
        assert!(extract_recipes(&d).1.is_empty());
    }

    #[test]
    fn recipe_frames_compose_to_world_gripper_pose() {
        let d = fixtures::triplet_design();
        let b = d.part("B").unwrap();
        let recipe = d.recipes.place_recipes["B"];
        let world = b.assembly_pose.compose(&recipe);
        // independent composition: rotate the recipe offset by hand
        let expected_t = b.assembly_pose.rotation * recipe.translation + b.assembly_pose.translation;
        let expected_r = b.assembly_pose.rotation * recipe.rotation;
        assert!((world.translation - expected_t).norm() < 1e-12);
        assert!(world.rotation.angle_to(&expected_r) < 1e-12);
        // the gripper z axis points down onto the part
        let z = world.transform_vector(&Vec3::z());
        assert!((z + Vec3::z()).norm() < 1e-12);
    }

    #[test]
    fn interference_and_duplicates_reported() {
        let mut d = fixtures::triplet_design();
        // slide C 6 mm toward A: 1 mm of interference past the 5 mm gap
        d.parts[2].assembly_pose.translation.x -= 0.006;
        let r = validate_design(&d);
        let e: Vec<_> = r.errors().collect();
        assert_eq!(e.len(), 1);
        assert_eq!(e[0].code, "assembled_interference");
        assert_eq!(e[0].subject, "A/C");

        let mut d = fixtures::triplet_design();
        d.parts[2].part_id = "A".into();
        assert!(validate_design(&d).errors().any(|i| i.code == "duplicate_id"));
    }

    #[test]
    fn document_round_trip_is_fixed_point() {
        let d = fixtures::triplet_design();
        let once = load_design(d.to_json().as_bytes()).unwrap();
        let twice = load_design(once.to_json().as_bytes()).unwrap();
        assert_eq!(once, twice);
        assert_eq!(once.to_json(), twice.to_json());
    }
}
