use autoasm::fixtures;
use autoasm::geom::Pose;
use autoasm::pl::{interpret, parse, AbilityHost, Args, Value};
use autoasm::twin::state::tcp_frame;
use autoasm::twin::{Twin, TwinError};

fn twin() -> Twin {
    Twin::new(
        fixtures::cell(),
        fixtures::tooling_db(),
        Some(fixtures::triplet_design()),
        0,
    )
    .unwrap()
}

fn move_to(t: &mut Twin, robot: &str, target: &Pose) -> Result<(), TwinError> {
    let snap = t.snapshot();
    let traj = t.plan_trajectory(robot, target, &snap)?;
    t.execute_trajectory(robot, &traj)
}

fn above(p: &Pose, dz: f64) -> Pose {
    Pose::new(p.translation + autoasm::geom::Vec3::new(0.0, 0.0, dz), p.rotation)
}

#[test]
fn unload_grasp_carry_and_release() {
    let mut t = twin();
    t.unload_part("A", "JIG_A_IN").unwrap();
    assert!(matches!(
        t.unload_part("A", "JIG_A_IN"),
        Err(TwinError::AlreadyPresent(_))
    ));
    let grasp = t.state.world("A").unwrap().compose(&fixtures::top_grasp());
    move_to(&mut t, "robot_L", &above(&grasp, 0.08)).unwrap();
    move_to(&mut t, "robot_L", &grasp).unwrap();
    t.set_gripper("robot_L", "close").unwrap();
    assert_eq!(t.state.held_by("robot_L"), vec!["A".to_string()]);

    let before = t.state.world("A").unwrap();
    move_to(&mut t, "robot_L", &above(&grasp, 0.1)).unwrap();
    let lifted = t.state.world("A").unwrap();
    assert!((lifted.translation.z - before.translation.z - 0.1).abs() < 1e-9);

    // Lowered back onto its seat, the part snaps to the jig on release.
    move_to(&mut t, "robot_L", &grasp).unwrap();
    t.set_gripper("robot_L", "open").unwrap();
    assert!(t.state.held_by("robot_L").is_empty());
    assert_eq!(t.state.attachments["A"].parent, "JIG_A_IN");
    assert!(t.state.twin_time > 0.0);
}

#[test]
fn closing_on_nothing_fails() {
    let mut t = twin();
    assert!(matches!(
        t.set_gripper("robot_L", "close"),
        Err(TwinError::NothingToGrasp(_))
    ));
    assert!(matches!(t.set_gripper("robot_R", "open"), Err(TwinError::NoGripper(_))));
    assert!(matches!(
        t.set_gripper("robot_L", "half"),
        Err(TwinError::BadArgument(_))
    ));
}

#[test]
fn fasten_preconditions() {
    let mut t = twin();
    assert!(matches!(t.fasten("robot_L", "J1"), Err(TwinError::NoScrewdriver(_))));
    assert!(matches!(t.fasten("robot_R", "J9"), Err(TwinError::NotFound(_))));
    assert!(matches!(t.fasten("robot_R", "J1"), Err(TwinError::PartsNotPlaced(_))));
    assert!(t.state.fastened.is_empty());
}

#[test]
fn wall_blocks_the_gripper_robot() {
    let mut t = Twin::new(
        fixtures::wall_cell(),
        fixtures::tooling_db(),
        Some(fixtures::triplet_design()),
        0,
    )
    .unwrap();
    let target = Pose::new(autoasm::geom::Vec3::new(0.38, 0.0, 0.1), fixtures::top_grasp().rotation);
    let snap = t.snapshot();
    match t.plan_trajectory("robot_L", &target, &snap) {
        Err(TwinError::InCollision { robot, objects }) => {
            assert_eq!(robot, "robot_L");
            assert!(objects.contains(&"WALL".to_string()), "{objects:?}");
        }
        other => panic!("expected a collision, got {other:?}"),
    }
}

#[test]
fn transform_composition_law() {
    let mut t = twin();
    t.unload_part("B", "JIG_B_IN").unwrap();
    let ids = ["cell", "robot_L", "robot_R/tcp", "JIG_ASM", "B", "feeder_1"];
    for a in ids {
        for b in ids {
            for c in ids {
                let ab = t.get_transform(a, b).unwrap();
                let bc = t.get_transform(b, c).unwrap();
                let ac = t.get_transform(a, c).unwrap();
                let (l, ang) = ab.compose(&bc).distance_to(&ac);
                assert!(l < 1e-9 && ang < 1e-9, "{a} {b} {c}");
            }
        }
    }
}

#[test]
fn snapshots_are_isolated_from_later_motion() {
    let mut t = twin();
    let snap = t.snapshot();
    let tcp = tcp_frame("robot_L");
    let was = snap.objects.iter().find(|o| o.id == tcp).map(|o| o.pose);
    let joints = snap.robot_joints["robot_L"].clone();
    let start = t.state.world(&tcp).unwrap();
    move_to(&mut t, "robot_L", &above(&start, -0.1)).unwrap();
    assert_eq!(snap.robot_joints["robot_L"], joints);
    assert_eq!(snap.objects.iter().find(|o| o.id == tcp).map(|o| o.pose), was);
    assert!(t.state.world(&tcp).unwrap().distance_to(&start).0 > 0.09);
}

#[test]
fn execute_checks_robot_and_start() {
    let mut t = twin();
    let start = t.state.world(&tcp_frame("robot_L")).unwrap();
    let snap = t.snapshot();
    let traj = t.plan_trajectory("robot_L", &above(&start, -0.05), &snap).unwrap();
    assert!(matches!(
        t.execute_trajectory("robot_R", &traj),
        Err(TwinError::BadArgument(_))
    ));
    t.execute_trajectory("robot_L", &traj).unwrap();
    // Replaying from the old start is refused.
    assert!(matches!(
        t.execute_trajectory("robot_L", &traj),
        Err(TwinError::LimitViolation(_))
    ));
}

#[test]
fn planning_is_deterministic_per_seed() {
    let target = Pose::new(autoasm::geom::Vec3::new(0.2, 0.4, 0.1), fixtures::top_grasp().rotation);
    let plan = || {
        let mut t = twin();
        let snap = t.snapshot();
        t.plan_trajectory("robot_L", &target, &snap).unwrap()
    };
    assert_eq!(plan(), plan());
}

#[test]
fn abilities_through_pl() {
    let mut t = twin();
    let p = parse(
        "let tcp = get_transform(parent: \"cell\", child: \"robot_L/tcp\")\n\
         let rev = publish(topic: \"t\", key: \"k\", payload: {\"x\": 1})\n\
         let doc = retrieve(topic: \"t\", key: \"k\")\n\
         unload_part(part: \"C\", jig: \"JIG_C_IN\")\n\
         let info = get_assembly_info(part: \"C\")",
    )
    .unwrap();
    let trace = interpret(&p, &mut t);
    assert!(trace.ok(), "{:?}", trace.error);
    assert_eq!(trace.entries.len(), 5);
    assert_eq!(trace.entries[1].result, serde_json::json!(1.0));
    let mut args = Args::new();
    args.insert("part".into(), Value::Str("Z".into()));
    args.insert("jig".into(), Value::Str("JIG_C_IN".into()));
    let f = t.call("unload_part", &args).unwrap_err();
    assert_eq!(f.reason, "not_found");
}
