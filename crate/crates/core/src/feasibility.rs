//! Geometric join checks: a subassembly is pulled out of its partner in
//! discrete steps along candidate directions, testing for volume overlap.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::design::DesignDoc;
use crate::geom::{Aabb, PlacedMesh, Pose, TriMesh, Vec3};
use crate::par::{self, Exec};
use crate::sequencer::{merges, AssemblySequence};

pub const DEFAULT_STEP_RATIO: f64 = 0.75;

#[derive(Debug, Clone)]
pub struct SubassemblyGeom {
    pub parts: Vec<(String, TriMesh, Pose)>,
}

impl SubassemblyGeom {
    /// The listed parts at their assembly poses; unknown ids are skipped.
    pub fn from_design(d: &DesignDoc, ids: &BTreeSet<String>) -> Self {
        SubassemblyGeom {
            parts: d
                .parts
                .iter()
                .filter(|p| ids.contains(&p.part_id))
                .map(|p| (p.part_id.clone(), p.mesh.clone(), p.assembly_pose))
                .collect(),
        }
    }

    fn placed(&self) -> Vec<PlacedMesh> {
        self.parts.iter().map(|(_, m, p)| PlacedMesh::new(m, p)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DirectionMode {
    #[default]
    Axes,
    Joints,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityParams {
    pub directions: Vec<Vec3>,
    pub step_ratio: f64,
    pub eps: f64,
}

pub fn axis_directions() -> Vec<Vec3> {
    vec![Vec3::x(), -Vec3::x(), Vec3::y(), -Vec3::y(), Vec3::z(), -Vec3::z()]
}

impl Default for FeasibilityParams {
    fn default() -> Self {
        FeasibilityParams {
            directions: axis_directions(),
            step_ratio: DEFAULT_STEP_RATIO,
            eps: crate::geom::DEFAULT_EPS,
        }
    }
}

impl FeasibilityParams {
    /// Principal axes, plus both senses of every distinct joint axis in
    /// `Joints` mode.
    pub fn for_design(d: &DesignDoc, mode: DirectionMode, step_ratio: f64) -> Self {
        let mut directions = axis_directions();
        if mode == DirectionMode::Joints {
            for j in &d.joints {
                let n = j.axis.norm();
                if n == 0.0 {
                    continue;
                }
                for v in [j.axis / n, -j.axis / n] {
                    if !directions.iter().any(|u| (u - v).norm() < 1e-9) {
                        directions.push(v);
                    }
                }
            }
        }
        FeasibilityParams {
            directions,
            step_ratio,
            eps: d.eps,
        }
    }
}

/// `ratio` times the smallest part bounding-box diagonal in `a` and `b`.
pub fn join_step_size(a: &SubassemblyGeom, b: &SubassemblyGeom, ratio: f64) -> f64 {
    let min = a
        .parts
        .iter()
        .chain(&b.parts)
        .filter_map(|(_, m, _)| m.bounds())
        .map(|bb| bb.diagonal())
        .fold(f64::INFINITY, f64::min);
    ratio * min
}

fn union_box(ms: &[PlacedMesh]) -> Option<Aabb> {
    ms.iter().map(|m| m.aabb).reduce(|x, y| x.union(&y))
}

/// The sweep ends at the first step where the bounding boxes no longer
/// overlap, or after `k_max` steps.
fn sweep_clear(a: &[PlacedMesh], b: &[PlacedMesh], dir: &Vec3, step: f64, k_max: usize, eps: f64) -> bool {
    let (Some(abox), Some(bbox)) = (union_box(a), union_box(b)) else {
        return true;
    };
    for k in 1..=k_max {
        let d = dir * (k as f64 * step);
        if abox.penetration(&bbox.translated(&d)) <= eps {
            return true;
        }
        for mb in b {
            let mbox = mb.aabb.translated(&d);
            let near: Vec<&PlacedMesh> = a.iter().filter(|ma| ma.aabb.penetration(&mbox) > eps).collect();
            if near.is_empty() {
                continue;
            }
            let moved = mb.translated(&d);
            if near.iter().any(|ma| moved.overlaps_volume(ma, eps)) {
                return false;
            }
        }
    }
    true
}

/// Directions (from `dirs`, in order) along which `b` can be withdrawn from
/// `a` with steps of exactly `step`.
pub fn feasible_directions_with_step(
    a: &SubassemblyGeom,
    b: &SubassemblyGeom,
    dirs: &[Vec3],
    step: f64,
    eps: f64,
) -> Vec<Vec3> {
    let (pa, pb) = (a.placed(), b.placed());
    let span = match (union_box(&pa), union_box(&pb)) {
        (Some(x), Some(y)) => x.union(&y).diagonal(),
        _ => 0.0,
    };
    let k_max = (span / step).ceil() as usize + 2;
    dirs.iter()
        .filter(|d| sweep_clear(&pa, &pb, d, step, k_max, eps))
        .copied()
        .collect()
}

pub fn feasible_directions(a: &SubassemblyGeom, b: &SubassemblyGeom, p: &FeasibilityParams) -> Vec<Vec3> {
    let step = join_step_size(a, b, p.step_ratio);
    feasible_directions_with_step(a, b, &p.directions, step, p.eps)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityFailure {
    pub sequence_id: String,
    pub op_id: String,
    pub checked_directions: Vec<[f64; 3]>,
}

type MergeKey = (BTreeSet<String>, BTreeSet<String>);

/// Verdict for every distinct (fixed, moving) pair occurring in `seqs`.
pub fn merge_verdicts(
    seqs: &[AssemblySequence],
    design: &DesignDoc,
    exec: Exec,
    check: impl Fn(&SubassemblyGeom, &SubassemblyGeom) -> Vec<Vec3> + Sync,
) -> BTreeMap<MergeKey, Vec<Vec3>> {
    let keys: Vec<MergeKey> = seqs
        .iter()
        .flat_map(merges)
        .map(|m| (m.fixed, m.moving))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let verdicts = par::map(exec, &keys, |(f, m)| {
        check(
            &SubassemblyGeom::from_design(design, f),
            &SubassemblyGeom::from_design(design, m),
        )
    });
    keys.into_iter().zip(verdicts).collect()
}

pub fn filter_sequences(
    seqs: &[AssemblySequence],
    design: &DesignDoc,
    p: &FeasibilityParams,
) -> (Vec<AssemblySequence>, Vec<FeasibilityFailure>) {
    filter_sequences_with(seqs, design, p, Exec::default())
}

pub fn filter_sequences_with(
    seqs: &[AssemblySequence],
    design: &DesignDoc,
    p: &FeasibilityParams,
    exec: Exec,
) -> (Vec<AssemblySequence>, Vec<FeasibilityFailure>) {
    let verdicts = merge_verdicts(seqs, design, exec, |a, b| feasible_directions(a, b, p));
    let mut kept = Vec::new();
    let mut failures = Vec::new();
    for s in seqs {
        let blocked = merges(s)
            .into_iter()
            .find(|m| verdicts[&(m.fixed.clone(), m.moving.clone())].is_empty());
        match blocked {
            None => kept.push(s.clone()),
            Some(m) => failures.push(FeasibilityFailure {
                sequence_id: s.sequence_id.clone(),
                op_id: m.op_id,
                checked_directions: p.directions.iter().map(|d| [d.x, d.y, d.z]).collect(),
            }),
        }
    }
    (kept, failures)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::build_joint_register;
    use crate::fixtures;
    use crate::liaison::build_liaison_graph;
    use crate::sequencer::{enumerate_sequences, DEFAULT_CAP};

    fn set(ids: &[&str]) -> BTreeSet<String> {
        ids.iter().map(|s| s.to_string()).collect()
    }

    fn cube(id: &str, size: f64, at: [f64; 3]) -> SubassemblyGeom {
        SubassemblyGeom {
            parts: vec![(
                id.into(),
                TriMesh::cuboid(Vec3::new(size, size, size)),
                Pose::from_translation(at[0], at[1], at[2]),
            )],
        }
    }

    fn sequences(d: &DesignDoc) -> Vec<AssemblySequence> {
        let g = build_liaison_graph(&build_joint_register(d), &d.part_ids());
        enumerate_sequences(&g, DEFAULT_CAP).unwrap().sequences
    }

    #[test]
    fn step_size_examples() {
        let a = SubassemblyGeom {
            parts: vec![(
                "p".into(),
                TriMesh::cuboid(Vec3::new(0.04, 0.04, 0.08)),
                Pose::identity(),
            )],
        };
        let b = cube("q", 0.2, [1.0, 0.0, 0.0]);
        assert!((join_step_size(&a, &b, 0.75) - 0.75 * 0.0096f64.sqrt()).abs() < 1e-12);
        assert!((0.75 * 0.0096f64.sqrt() - 0.073485).abs() < 1e-6);
        let (u, v) = (cube("u", 1.0, [0.0; 3]), cube("v", 1.0, [1.0, 0.0, 0.0]));
        assert!((join_step_size(&u, &v, 0.75) - 0.75 * 3f64.sqrt()).abs() < 1e-12);
        assert!((join_step_size(&u, &v, 1.0) - 3f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn triplet_a_b_blocked_only_downward() {
        let d = fixtures::triplet_design();
        let a = SubassemblyGeom::from_design(&d, &set(&["A"]));
        let b = SubassemblyGeom::from_design(&d, &set(&["B"]));
        let dirs = feasible_directions(&a, &b, &FeasibilityParams::default());
        assert_eq!(dirs, vec![Vec3::x(), -Vec3::x(), Vec3::y(), -Vec3::y(), Vec3::z()]);
    }

    #[test]
    fn far_apart_all_free() {
        let a = cube("a", 0.1, [0.0; 3]);
        let b = cube("b", 0.1, [5.0, 0.0, 0.0]);
        assert_eq!(feasible_directions(&a, &b, &FeasibilityParams::default()).len(), 6);
    }

    #[test]
    fn caged_part_has_no_exit() {
        let d = fixtures::cage_design();
        let closed = SubassemblyGeom::from_design(&d, &set(&["L", "T"]));
        let p = SubassemblyGeom::from_design(&d, &set(&["P"]));
        assert!(feasible_directions(&closed, &p, &FeasibilityParams::default()).is_empty());
        let tray = SubassemblyGeom::from_design(&d, &set(&["T"]));
        assert_eq!(
            feasible_directions(&tray, &p, &FeasibilityParams::default()),
            vec![Vec3::z()]
        );
    }

    #[test]
    fn triplet_all_kept() {
        let d = fixtures::triplet_design();
        let seqs = sequences(&d);
        let (kept, fails) = filter_sequences(&seqs, &d, &FeasibilityParams::default());
        assert_eq!(kept.len(), 8);
        assert!(fails.is_empty());
    }

    #[test]
    fn cage_rejects_insertion_after_closure() {
        let d = fixtures::cage_design();
        let seqs = sequences(&d);
        let (kept, fails) = filter_sequences(&seqs, &d, &FeasibilityParams::default());
        assert_eq!(kept.len(), 4);
        assert_eq!(fails.len(), 4);
        for k in &kept {
            assert_eq!(k.ops.last().unwrap().kind, crate::sequencer::OpKind::Fasten);
            assert!(merges(k)[1].moving.contains("L") || merges(k)[1].fixed.contains("L"));
            assert!(!merges(k)[0].fixed.contains("L") && !merges(k)[0].moving.contains("L"));
        }
        for f in &fails {
            assert_eq!(f.checked_directions.len(), 6);
            let s = seqs.iter().find(|s| s.sequence_id == f.sequence_id).unwrap();
            assert_eq!(f.op_id, s.ops.last().unwrap().op_id);
        }
    }

    #[test]
    fn empty_input() {
        let d = fixtures::triplet_design();
        let (k, f) = filter_sequences(&[], &d, &FeasibilityParams::default());
        assert!(k.is_empty() && f.is_empty());
    }

    #[test]
    fn joint_mode_adds_axes() {
        let d = fixtures::triplet_design();
        // Screw axes are -z, already principal.
        assert_eq!(
            FeasibilityParams::for_design(&d, DirectionMode::Joints, 0.75)
                .directions
                .len(),
            6
        );
        let mut d2 = d.clone();
        d2.joints[0].axis = Vec3::new(1.0, 1.0, 0.0);
        assert_eq!(
            FeasibilityParams::for_design(&d2, DirectionMode::Joints, 0.75)
                .directions
                .len(),
            8
        );
    }

    #[test]
    fn thick_wall_is_not_tunnelled() {
        let wall = SubassemblyGeom {
            parts: vec![(
                "w".into(),
                TriMesh::cuboid(Vec3::new(0.05, 1.0, 1.0)),
                Pose::from_translation(0.045, 0.0, 0.0),
            )],
        };
        let c = cube("c", 0.04, [0.0; 3]);
        let dirs = feasible_directions(&wall, &c, &FeasibilityParams::default());
        assert!(!dirs.contains(&Vec3::x()));
        assert!(dirs.contains(&-Vec3::x()));
    }
}
