//! Reference designs, tooling and cells used by the tests, the benches and
//! the `fixtures` CLI subcommand.
//!
//! * triplet: profiles A and C bridged by connector B, four M5 screws.
//! * triplet_far: the same with the B–C screws moved out of reach.
//! * chain4: four cubes in a row, rigid joints.
//! * cage: a cube P inside a tray T closed by lid L.

use std::f64::consts::PI;

use std::collections::BTreeMap;

use crate::cell_match::{CellDescription, FeederInstance, JigInstance, LinkCapsule, Obstacle, RobotDesc};
use crate::design::{DesignDoc, FastenerMeta, JointDef, JointKind, PartDef, RecipeSet};
use crate::geom::{Pose, TriMesh, Vec3};
use crate::tooling::{
    register_tool, GripperSpec, JigSpec, RegisterRole, ScrewdriverSpec, Station, ToolKind, ToolingDb, ToolingRecord,
};
use crate::twin::kinematics::KinematicChain;

pub const SCREW: &str = "M5x12";

fn boxed(size: [f64; 3]) -> TriMesh {
    TriMesh::cuboid(Vec3::new(size[0], size[1], size[2]))
}

fn part(id: &str, model: &str, size: [f64; 3], center: [f64; 3]) -> PartDef {
    PartDef {
        part_id: id.into(),
        model_id: model.into(),
        mesh: boxed(size),
        assembly_pose: Pose::from_translation(center[0], center[1], center[2]),
    }
}

fn screw(id: &str, a: &str, b: &str, at: [f64; 3]) -> JointDef {
    let p = Vec3::new(at[0], at[1], at[2]);
    JointDef {
        joint_id: id.into(),
        kind: JointKind::Fastener,
        part_a: a.into(),
        part_b: b.into(),
        axis: -Vec3::z(),
        origin: p,
        fastener_meta: Some(FastenerMeta {
            screw_type: SCREW.into(),
            target_point: p,
        }),
    }
}

fn rigid(id: &str, a: &str, b: &str, axis: Vec3, origin: [f64; 3]) -> JointDef {
    JointDef {
        joint_id: id.into(),
        kind: JointKind::Rigid,
        part_a: a.into(),
        part_b: b.into(),
        axis,
        origin: Vec3::new(origin[0], origin[1], origin[2]),
        fastener_meta: None,
    }
}

/// Cube P sealed inside a closed hollow box S: no sequence can join them.
pub fn sealed_design() -> DesignDoc {
    let outer = boxed([0.12; 3]);
    let inner = boxed([0.08; 3]);
    let n = outer.vertices.len() as u32;
    let mut shell = outer;
    shell.vertices.extend(inner.vertices);
    shell
        .triangles
        .extend(inner.triangles.iter().map(|t| [t[0] + n, t[2] + n, t[1] + n]));
    let mut recipes = RecipeSet::default();
    for m in ["cube", "shell"] {
        recipes.grasp_recipes.insert(m.into(), vec![top_grasp()]);
    }
    DesignDoc {
        design_id: "sealed".into(),
        eps: 1e-6,
        parts: vec![
            part("P", "cube", [0.04; 3], [0.0, 0.0, 0.0]),
            PartDef {
                part_id: "S".into(),
                model_id: "shell".into(),
                mesh: shell,
                assembly_pose: Pose::identity(),
            },
        ],
        joints: vec![rigid("R1", "P", "S", Vec3::z(), [0.0, 0.0, -0.02])],
        recipes,
    }
}

/// Gripper pointing down (tool z = -z) at the part origin.
pub fn top_grasp() -> Pose {
    Pose::from_axis_angle(Vec3::x(), PI)
}

/// Same grasp turned half a revolution about the vertical.
pub fn top_grasp_flipped() -> Pose {
    Pose::from_axis_angle(Vec3::z(), PI).compose(&top_grasp())
}

pub const PROFILE_SIZE: [f64; 3] = [0.16, 0.04, 0.04];
pub const CONNECTOR_SIZE: [f64; 3] = [0.08, 0.04, 0.04];

/// Profiles A and C lie on the assembly jig 5 mm apart; connector B bridges
/// them on top and is screwed to each with two M5 screws driven along -z.
pub fn triplet_design() -> DesignDoc {
    let parts = vec![
        part("A", "profile", PROFILE_SIZE, [0.08, 0.0, 0.02]),
        part("B", "connector", CONNECTOR_SIZE, [0.1625, 0.0, 0.06]),
        part("C", "profile", PROFILE_SIZE, [0.245, 0.0, 0.02]),
    ];
    let joints = vec![
        screw("J1", "A", "B", [0.1425, -0.01, 0.08]),
        screw("J2", "A", "B", [0.1425, 0.01, 0.08]),
        screw("J3", "B", "C", [0.1825, -0.01, 0.08]),
        screw("J4", "B", "C", [0.1825, 0.01, 0.08]),
    ];
    let mut recipes = RecipeSet::default();
    for model in ["profile", "connector"] {
        recipes
            .grasp_recipes
            .insert(model.into(), vec![top_grasp(), top_grasp_flipped()]);
    }
    for p in ["A", "B", "C"] {
        recipes.place_recipes.insert(p.into(), top_grasp());
    }
    for (jig, model, z) in [
        ("JIG_A_IN", "profile", PROFILE_SIZE[2] / 2.0),
        ("JIG_C_IN", "profile", PROFILE_SIZE[2] / 2.0),
        ("JIG_B_IN", "connector", CONNECTOR_SIZE[2] / 2.0),
    ] {
        recipes
            .jig_part_poses
            .insert((jig.into(), model.into()), Pose::from_translation(0.0, 0.0, z));
    }
    recipes
        .jig_part_poses
        .insert(("JIG_ASM".into(), "profile".into()), parts[0].assembly_pose);
    DesignDoc {
        design_id: "triplet".into(),
        eps: 1e-6,
        parts,
        joints,
        recipes,
    }
}

/// The triplet with the B–C screw targets moved 1.5 m off the part, outside
/// the screwdriver robot's workspace.
pub fn triplet_far_design() -> DesignDoc {
    let mut d = triplet_design();
    d.design_id = "triplet_far".into();
    for j in d.joints.iter_mut().filter(|j| j.part_b == "C") {
        let m = j.fastener_meta.as_mut().unwrap();
        m.target_point.y += 1.5;
        j.origin = m.target_point;
    }
    d
}

/// Four 5 cm cubes in a row along x, rigidly joined A–B–C–D.
pub fn chain4_design() -> DesignDoc {
    let s = 0.05;
    let ids = ["A", "B", "C", "D"];
    let parts = ids
        .iter()
        .enumerate()
        .map(|(i, id)| part(id, "cube", [s; 3], [s * (i as f64 + 0.5), 0.0, s / 2.0]))
        .collect();
    let joints = (0..3)
        .map(|i| {
            rigid(
                &format!("R{}", i + 1),
                ids[i],
                ids[i + 1],
                Vec3::x(),
                [s * (i as f64 + 1.0), 0.0, s / 2.0],
            )
        })
        .collect();
    let mut recipes = RecipeSet::default();
    recipes.grasp_recipes.insert("cube".into(), vec![top_grasp()]);
    DesignDoc {
        design_id: "chain4".into(),
        eps: 1e-6,
        parts,
        joints,
        recipes,
    }
}

/// Square cup: outer half-width `outer`, cavity half-width `inner`, height
/// `height`, cavity floor at `floor`; open at the top.
pub fn cup_mesh(outer: f64, inner: f64, height: f64, floor: f64) -> TriMesh {
    let ring = |r: f64, z: f64| -> [Vec3; 4] {
        [
            Vec3::new(-r, -r, z),
            Vec3::new(r, -r, z),
            Vec3::new(r, r, z),
            Vec3::new(-r, r, z),
        ]
    };
    let rings = [
        ring(outer, 0.0),
        ring(outer, height),
        ring(inner, height),
        ring(inner, floor),
    ];
    let vertices: Vec<Vec3> = rings.iter().flatten().copied().collect();
    let idx = |r: usize, k: usize| (r * 4 + k % 4) as u32;
    let mut triangles = Vec::new();
    let mut quad = |q: [u32; 4], normal: Vec3| {
        let v = q.map(|i| vertices[i as usize]);
        let n = (v[1] - v[0]).cross(&(v[2] - v[0]));
        if n.dot(&normal) >= 0.0 {
            triangles.push([q[0], q[1], q[2]]);
            triangles.push([q[0], q[2], q[3]]);
        } else {
            triangles.push([q[0], q[2], q[1]]);
            triangles.push([q[0], q[3], q[2]]);
        }
    };
    quad([idx(0, 0), idx(0, 1), idx(0, 2), idx(0, 3)], -Vec3::z());
    quad([idx(3, 0), idx(3, 1), idx(3, 2), idx(3, 3)], Vec3::z());
    for k in 0..4 {
        let mid = (rings[0][k] + rings[0][(k + 1) % 4]) / 2.0;
        let out = Vec3::new(mid.x, mid.y, 0.0);
        quad([idx(0, k), idx(0, k + 1), idx(1, k + 1), idx(1, k)], out);
        quad([idx(1, k), idx(1, k + 1), idx(2, k + 1), idx(2, k)], Vec3::z());
        quad([idx(2, k), idx(2, k + 1), idx(3, k + 1), idx(3, k)], -out);
    }
    TriMesh { vertices, triangles }
}

/// Cube P floating in the middle of a tray T that lid L closes.
pub fn cage_design() -> DesignDoc {
    let tray = PartDef {
        part_id: "T".into(),
        model_id: "tray".into(),
        mesh: cup_mesh(0.04, 0.03, 0.10, 0.02),
        assembly_pose: Pose::identity(),
    };
    let parts = vec![
        part("L", "lid", [0.08, 0.08, 0.02], [0.0, 0.0, 0.11]),
        part("P", "cube", [0.04; 3], [0.0, 0.0, 0.06]),
        tray,
    ];
    let joints = vec![
        rigid("R1", "L", "T", Vec3::z(), [0.0, 0.0, 0.10]),
        rigid("R2", "P", "T", Vec3::z(), [0.0, 0.0, 0.04]),
    ];
    let mut recipes = RecipeSet::default();
    for m in ["lid", "cube", "tray"] {
        recipes.grasp_recipes.insert(m.into(), vec![top_grasp()]);
    }
    DesignDoc {
        design_id: "cage".into(),
        eps: 1e-6,
        parts,
        joints,
        recipes,
    }
}

/// Flange-to-TCP offsets of the fixture tools.
pub const GRIPPER_LENGTH: f64 = 0.15;
pub const SCREWDRIVER_LENGTH: f64 = 0.36;

fn jig_record(
    id: &str,
    station: Station,
    held: &[(&str, Pose)],
    plate_min: [f64; 3],
    plate_max: [f64; 3],
) -> ToolingRecord {
    ToolingRecord {
        tool_id: id.into(),
        kind: ToolKind::Jig,
        gripper: None,
        jig: Some(JigSpec {
            held_models: held.iter().map(|(m, _)| m.to_string()).collect(),
            part_pose_in_jig: held.iter().map(|(m, p)| (m.to_string(), *p)).collect(),
            station,
            mesh: Some(TriMesh::from_min_max(Vec3::from(plate_min), Vec3::from(plate_max))),
        }),
        screwdriver: None,
    }
}

/// Gripper G1 (profiles and connectors), screwdriver SD1 (M5x12), three
/// input jigs and the assembly jig JIG_ASM, whose seat takes profile A.
pub fn tooling_db() -> ToolingDb {
    let d = triplet_design();
    let tcp = Pose::from_translation(0.0, 0.0, GRIPPER_LENGTH);
    let grasps = vec![top_grasp(), top_grasp_flipped()];
    let g1 = ToolingRecord {
        tool_id: "G1".into(),
        kind: ToolKind::Gripper,
        gripper: Some(GripperSpec {
            applicable_models: vec!["profile".into(), "connector".into()],
            grasp_poses: BTreeMap::from([("profile".into(), grasps.clone()), ("connector".into(), grasps)]),
            register_states: BTreeMap::from([(RegisterRole::Open, 1), (RegisterRole::Close, 2)]),
            tcp,
        }),
        jig: None,
        screwdriver: None,
    };
    let sd1 = ToolingRecord {
        tool_id: "SD1".into(),
        kind: ToolKind::Screwdriver,
        gripper: None,
        jig: None,
        screwdriver: Some(ScrewdriverSpec {
            holder_type: "magnetic_bit".into(),
            screw_types: vec![SCREW.into()],
            tcp: Pose::from_translation(0.0, 0.0, SCREWDRIVER_LENGTH),
        }),
    };
    let seat = |z: f64| Pose::from_translation(0.0, 0.0, z);
    let input_plate = ([-0.1, -0.04, -0.01], [0.1, 0.04, 0.0]);
    let records = vec![
        g1,
        sd1,
        jig_record(
            "JIG_A_IN",
            Station::Input,
            &[("profile", seat(PROFILE_SIZE[2] / 2.0))],
            input_plate.0,
            input_plate.1,
        ),
        jig_record(
            "JIG_B_IN",
            Station::Input,
            &[("connector", seat(CONNECTOR_SIZE[2] / 2.0))],
            input_plate.0,
            input_plate.1,
        ),
        jig_record(
            "JIG_C_IN",
            Station::Input,
            &[("profile", seat(PROFILE_SIZE[2] / 2.0))],
            input_plate.0,
            input_plate.1,
        ),
        jig_record(
            "JIG_ASM",
            Station::Assembly,
            &[("profile", d.part("A").unwrap().assembly_pose)],
            [-0.02, -0.06, -0.01],
            [0.16, 0.06, 0.0],
        ),
    ];
    records
        .into_iter()
        .try_fold(ToolingDb::default(), register_tool)
        .expect("fixture tooling is valid")
}

/// Capsules around the UR5e links, by DH frame index.
pub fn ur5e_capsules() -> Vec<LinkCapsule> {
    [
        (0, 1, 0.06),
        (1, 2, 0.05),
        (2, 3, 0.045),
        (3, 4, 0.04),
        (4, 5, 0.04),
        (5, 6, 0.04),
    ]
    .into_iter()
    .map(|(from, to, radius)| LinkCapsule { from, to, radius })
    .collect()
}

pub const HOME: [f64; 6] = [0.0, -PI / 2.0, PI / 2.0, -PI / 2.0, -PI / 2.0, 0.0];

fn robot(id: &str, tool: &str, base: Pose) -> RobotDesc {
    RobotDesc {
        robot_id: id.into(),
        base_pose: base,
        chain: KinematicChain::ur5e(),
        mounted_tool: tool.into(),
        link_capsules: ur5e_capsules(),
        home: Some(HOME.to_vec()),
    }
}

fn jig(id: &str, at: [f64; 3]) -> JigInstance {
    JigInstance {
        jig_id: id.into(),
        tool_id: id.into(),
        pose: Pose::from_translation(at[0], at[1], at[2]),
    }
}

/// Where the assembly jig sits in the fixture cell.
pub const ASSEMBLY_ORIGIN: [f64; 3] = [0.30, 0.0, 0.0];

/// Gripper robot `robot_L` facing +x from the origin, screwdriver robot
/// `robot_R` facing it from x = 0.95, the assembly jig between them and the
/// input jigs and screw feeder along y = 0.4.
pub fn cell() -> CellDescription {
    CellDescription {
        cell_id: "FIX-CELL".into(),
        robots: vec![
            robot("robot_L", "G1", Pose::from_axis_angle(Vec3::z(), PI)),
            robot("robot_R", "SD1", Pose::from_translation(0.95, 0.0, 0.0)),
        ],
        jigs: vec![
            jig("JIG_A_IN", [0.0, 0.4, 0.0]),
            jig("JIG_ASM", ASSEMBLY_ORIGIN),
            jig("JIG_B_IN", [0.2, 0.4, 0.0]),
            jig("JIG_C_IN", [0.4, 0.4, 0.0]),
        ],
        screw_feeders: vec![FeederInstance {
            feeder_id: "feeder_1".into(),
            screw_type: SCREW.into(),
            pose: Pose::from_translation(0.95, 0.4, 0.0),
        }],
        obstacles: Vec::new(),
    }
}

/// The fixture cell with a wall between `robot_L` and the assembly jig.
pub fn wall_cell() -> CellDescription {
    let mut c = cell();
    c.cell_id = "FIX-WALL".into();
    c.obstacles.push(Obstacle {
        obstacle_id: "WALL".into(),
        mesh: TriMesh::from_min_max(Vec3::new(-0.01, -0.6, 0.0), Vec3::new(0.01, 0.6, 1.4)),
        pose: Pose::from_translation(0.2, 0.0, 0.0),
    });
    c
}

/// The fixture cell without its screwdriver robot.
pub fn cell_without_screwdriver() -> CellDescription {
    let mut c = cell();
    c.cell_id = "FIX-CELL-NOSD".into();
    c.robots.retain(|r| r.mounted_tool != "SD1");
    c
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::validate_design;

    #[test]
    fn fixture_designs_are_valid() {
        for d in [triplet_design(), triplet_far_design(), chain4_design(), cage_design()] {
            let r = validate_design(&d);
            assert!(r.is_valid(), "{}: {:?}", d.design_id, r.issues);
        }
    }

    #[test]
    fn cup_is_closed_with_expected_volume() {
        let m = cup_mesh(0.06, 0.04, 0.08, 0.02);
        m.validate().unwrap();
        let expected = 0.12 * 0.12 * 0.08 - 0.08 * 0.08 * 0.06;
        assert!((m.signed_volume() - expected).abs() < 1e-12);
    }
}
