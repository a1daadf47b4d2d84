//! The twin's services as typed methods, and their process-language
//! bindings.

use std::sync::Arc;

use serde_json::json;

use crate::geom::Pose;
use crate::pl::{AbilityFailure, AbilityHost, AbilityRegistry, ArgType, Args, Value};
use crate::tooling::RegisterRole;
use crate::twin::planner::{self, validate_trajectory, Trajectory};
use crate::twin::snapshot::CellSnapshot;
use crate::twin::state::{
    fastener_deviation, join_groups, joint_parts_placed, set_joints, settle, tcp_frame, TwinError, ANG_TOL, LIN_TOL,
};
use crate::twin::{BusDoc, Twin};

pub fn registry() -> AbilityRegistry {
    use ArgType::*;
    let mut r = AbilityRegistry::default();
    r.add("get_cell_state", &[], Snapshot);
    r.add("get_transform", &[("parent", Str, true), ("child", Str, true)], Pose);
    r.add(
        "get_part_pose_in_jig",
        &[("jig", Str, true), ("part_model", Str, true)],
        Pose,
    );
    r.add(
        "get_assembly_info",
        &[("part", Str, false), ("joint", Str, false)],
        Json,
    );
    r.add(
        "plan_trajectory",
        &[
            ("robot", Str, true),
            ("target", Pose, true),
            ("collisions", Snapshot, true),
        ],
        Trajectory,
    );
    r.add(
        "execute_trajectory",
        &[("robot", Str, true), ("trajectory", Trajectory, true)],
        Null,
    );
    r.add("set_gripper", &[("robot", Str, true), ("register", Str, true)], Null);
    r.add("fasten", &[("robot", Str, true), ("joint", Str, true)], Null);
    r.add("unload_part", &[("part", Str, true), ("jig", Str, true)], Null);
    r.add(
        "publish",
        &[("topic", Str, true), ("key", Str, true), ("payload", Any, true)],
        Num,
    );
    r.add("retrieve", &[("topic", Str, true), ("key", Str, true)], Json);
    r
}

impl Twin {
    pub fn get_transform(&self, parent: &str, child: &str) -> Result<Pose, TwinError> {
        self.state.transform(parent, child)
    }

    pub fn get_part_pose_in_jig(&self, jig: &str, model: &str) -> Result<Pose, TwinError> {
        let inst = self
            .world
            .cell
            .jig(jig)
            .ok_or_else(|| TwinError::NotFound(jig.into()))?;
        let spec = self
            .world
            .db
            .jig(&inst.tool_id)
            .ok_or_else(|| TwinError::UnknownTool(inst.tool_id.clone()))?;
        if !spec.held_models.iter().any(|m| m == model) {
            return Err(TwinError::ModelNotHeld {
                jig: jig.into(),
                model: model.into(),
            });
        }
        Ok(spec.part_pose_in_jig[model])
    }

    /// Target pose of a part, or a joint's fastening data, in the cell frame.
    pub fn get_assembly_info(&self, part: Option<&str>, joint: Option<&str>) -> Result<serde_json::Value, TwinError> {
        let d = self.world.design.as_ref().ok_or(TwinError::NoDesign)?;
        let frame = self.world.assembly_frame();
        let v = match (part, joint) {
            (Some(p), None) => {
                let def = d.part(p).ok_or_else(|| TwinError::NotFound(p.into()))?;
                json!({
                    "part_id": p,
                    "model_id": def.model_id,
                    "target_pose": self.world.assembly_target(p)?,
                })
            }
            (None, Some(j)) => {
                let def = d.joint(j).ok_or_else(|| TwinError::NotFound(j.into()))?;
                let axis = frame.transform_vector(&def.axis);
                let origin = frame.transform_point(&def.origin);
                let mut v = json!({
                    "joint_id": j,
                    "kind": def.kind,
                    "part_a": def.part_a,
                    "part_b": def.part_b,
                    "axis": [axis.x, axis.y, axis.z],
                    "origin": [origin.x, origin.y, origin.z],
                });
                if let Some(m) = &def.fastener_meta {
                    let t = frame.transform_point(&m.target_point);
                    v["target_point"] = json!([t.x, t.y, t.z]);
                    v["screw_type"] = json!(m.screw_type);
                }
                v
            }
            _ => return Err(TwinError::BadArgument("give exactly one of `part` or `joint`".into())),
        };
        self.fcm
            .seal("assembly_info", v)
            .map(|e| e.payload)
            .map_err(|e| TwinError::BadArgument(e.to_string()))
    }

    pub fn plan_trajectory(
        &mut self,
        robot: &str,
        target: &Pose,
        snap: &CellSnapshot,
    ) -> Result<Trajectory, TwinError> {
        let rr = self.robot_robot_checks;
        let Twin { world, state, rng, .. } = self;
        planner::plan(world, state, robot, target, snap, rng, rr)
    }

    pub fn execute_trajectory(&mut self, robot: &str, t: &Trajectory) -> Result<(), TwinError> {
        if t.robot != robot {
            return Err(TwinError::BadArgument(format!(
                "trajectory was planned for `{}`",
                t.robot
            )));
        }
        if t.waypoints.is_empty() {
            return Ok(());
        }
        validate_trajectory(&self.world, t)?;
        let cur = &self.state.robot_joints[robot];
        if planner::max_delta(cur, &t.waypoints[0]) > 1e-9 {
            return Err(TwinError::LimitViolation(
                "trajectory does not start at the current joints".into(),
            ));
        }
        set_joints(&mut self.state, &self.world, robot, t.waypoints.last().unwrap())?;
        self.state.twin_time += t.duration();
        Ok(())
    }

    pub fn set_gripper(&mut self, robot: &str, register: &str) -> Result<(), TwinError> {
        let r = self
            .world
            .cell
            .robot(robot)
            .ok_or_else(|| TwinError::NotFound(robot.into()))?;
        let g = self
            .world
            .db
            .gripper(&r.mounted_tool)
            .ok_or_else(|| TwinError::NoGripper(robot.into()))?;
        let role = match register {
            "open" => RegisterRole::Open,
            "close" => RegisterRole::Close,
            other => {
                return Err(TwinError::BadArgument(format!(
                    "register `{other}` is neither open nor close"
                )))
            }
        };
        let word = g.register_states[&role];
        match role {
            RegisterRole::Close => {
                if self.state.held_by(robot).is_empty() {
                    let tcp = self.state.world(&tcp_frame(robot))?;
                    let mut best: Option<(f64, String)> = None;
                    for part in self.state.attachments.keys() {
                        if self.state.holder(part).is_some() {
                            continue;
                        }
                        let Some(model) = self.world.part_model(part) else {
                            continue;
                        };
                        let w = self.state.world(part)?;
                        for gp in g.grasp_poses.get(model).into_iter().flatten() {
                            let (l, a) = w.compose(gp).distance_to(&tcp);
                            if l <= LIN_TOL && a <= ANG_TOL && best.as_ref().is_none_or(|(d, _)| l < *d) {
                                best = Some((l, part.clone()));
                            }
                        }
                    }
                    let (_, part) = best.ok_or_else(|| TwinError::NothingToGrasp(robot.into()))?;
                    let root = self.state.group_root(&part);
                    self.state.attach(&root, &tcp_frame(robot))?;
                }
            }
            RegisterRole::Open => {
                for root in self.state.held_by(robot) {
                    settle(&mut self.state, &self.world, &root)?;
                }
            }
        }
        self.state.registers.insert(robot.into(), word);
        Ok(())
    }

    pub fn fasten(&mut self, robot: &str, joint: &str) -> Result<(), TwinError> {
        let r = self
            .world
            .cell
            .robot(robot)
            .ok_or_else(|| TwinError::NotFound(robot.into()))?;
        let sd = self
            .world
            .db
            .screwdriver(&r.mounted_tool)
            .ok_or_else(|| TwinError::NoScrewdriver(robot.into()))?;
        let d = self.world.design.as_ref().ok_or(TwinError::NoDesign)?;
        let j = d.joint(joint).ok_or_else(|| TwinError::NotFound(joint.into()))?;
        let meta = j
            .fastener_meta
            .as_ref()
            .ok_or_else(|| TwinError::NotAFastener(joint.into()))?;
        if !sd.screw_types.contains(&meta.screw_type) {
            return Err(TwinError::UnsupportedScrew {
                robot: robot.into(),
                screw: meta.screw_type.clone(),
            });
        }
        if !joint_parts_placed(&self.state, &self.world, joint)? {
            return Err(TwinError::PartsNotPlaced(joint.into()));
        }
        let (distance, angle) = fastener_deviation(&self.state, &self.world, robot, joint)?;
        if distance > LIN_TOL || angle > ANG_TOL {
            return Err(TwinError::NotAligned {
                joint: joint.into(),
                distance,
                angle,
            });
        }
        join_groups(&mut self.state, &self.world, joint)?;
        self.state.fastened.insert(joint.into());
        Ok(())
    }

    pub fn unload_part(&mut self, part: &str, jig: &str) -> Result<(), TwinError> {
        let model = self
            .world
            .part_model(part)
            .ok_or_else(|| TwinError::NotFound(part.into()))?
            .to_string();
        let seat = self.get_part_pose_in_jig(jig, &model)?;
        if self.state.is_part(part) {
            return Err(TwinError::AlreadyPresent(part.into()));
        }
        self.state.attach_relative(part, jig, seat)
    }

    /// Publishes through the bus; the document is schema-checked first.
    pub fn publish(&self, topic: &str, key: &str, payload: serde_json::Value) -> Result<u64, TwinError> {
        let next = self.bus.retrieve(topic, key).map_or(1, |d| d.revision + 1);
        self.fcm
            .seal(
                "bus_doc",
                json!({"topic": topic, "key": key, "payload": payload, "revision": next}),
            )
            .map_err(|e| TwinError::BadArgument(e.to_string()))?;
        Ok(self.bus.publish(topic, key, payload))
    }

    pub fn retrieve(&self, topic: &str, key: &str) -> Result<BusDoc, TwinError> {
        self.bus
            .retrieve(topic, key)
            .ok_or_else(|| TwinError::NotFound(format!("{topic}/{key}")))
    }
}

fn str_arg<'a>(args: &'a Args, name: &str) -> Result<&'a str, TwinError> {
    args.get(name)
        .and_then(Value::as_str)
        .ok_or_else(|| TwinError::BadArgument(format!("`{name}` must be a string")))
}

fn opt_str<'a>(args: &'a Args, name: &str) -> Option<&'a str> {
    args.get(name).and_then(Value::as_str)
}

fn failure(e: TwinError) -> AbilityFailure {
    AbilityFailure {
        reason: e.reason().into(),
        detail: e.to_string(),
        objects: e.objects(),
    }
}

impl AbilityHost for Twin {
    fn registry(&self) -> &AbilityRegistry {
        &self.registry
    }

    fn call(&mut self, ability: &str, args: &Args) -> Result<Value, AbilityFailure> {
        let out = match ability {
            "get_cell_state" => Ok(Value::Snapshot(Arc::new(self.snapshot()))),
            "get_transform" => self
                .get_transform(
                    str_arg(args, "parent").map_err(failure)?,
                    str_arg(args, "child").map_err(failure)?,
                )
                .map(Value::Pose),
            "get_part_pose_in_jig" => self
                .get_part_pose_in_jig(
                    str_arg(args, "jig").map_err(failure)?,
                    str_arg(args, "part_model").map_err(failure)?,
                )
                .map(Value::Pose),
            "get_assembly_info" => self
                .get_assembly_info(opt_str(args, "part"), opt_str(args, "joint"))
                .map(Value::Json),
            "plan_trajectory" => {
                let robot = str_arg(args, "robot").map_err(failure)?.to_string();
                let (Some(Value::Pose(target)), Some(Value::Snapshot(snap))) =
                    (args.get("target"), args.get("collisions"))
                else {
                    return Err(failure(TwinError::BadArgument(
                        "target pose and snapshot required".into(),
                    )));
                };
                let (target, snap) = (*target, snap.clone());
                self.plan_trajectory(&robot, &target, &snap)
                    .map(|t| Value::Trajectory(Arc::new(t)))
            }
            "execute_trajectory" => {
                let robot = str_arg(args, "robot").map_err(failure)?.to_string();
                let Some(Value::Trajectory(t)) = args.get("trajectory") else {
                    return Err(failure(TwinError::BadArgument("trajectory required".into())));
                };
                let t = t.clone();
                self.execute_trajectory(&robot, &t).map(|_| Value::Null)
            }
            "set_gripper" => {
                let robot = str_arg(args, "robot").map_err(failure)?.to_string();
                let reg = str_arg(args, "register").map_err(failure)?.to_string();
                self.set_gripper(&robot, &reg).map(|_| Value::Null)
            }
            "fasten" => {
                let robot = str_arg(args, "robot").map_err(failure)?.to_string();
                let joint = str_arg(args, "joint").map_err(failure)?.to_string();
                self.fasten(&robot, &joint).map(|_| Value::Null)
            }
            "unload_part" => {
                let part = str_arg(args, "part").map_err(failure)?.to_string();
                let jig = str_arg(args, "jig").map_err(failure)?.to_string();
                self.unload_part(&part, &jig).map(|_| Value::Null)
            }
            "publish" => {
                let payload = args.get("payload").map(Value::summary).unwrap_or_default();
                self.publish(
                    str_arg(args, "topic").map_err(failure)?,
                    str_arg(args, "key").map_err(failure)?,
                    payload,
                )
                .map(|r| Value::Num(r as f64))
            }
            "retrieve" => self
                .retrieve(
                    str_arg(args, "topic").map_err(failure)?,
                    str_arg(args, "key").map_err(failure)?,
                )
                .map(|d| Value::Json(serde_json::to_value(d).unwrap())),
            other => {
                return Err(AbilityFailure::new("unknown_ability", format!("no ability `{other}`")));
            }
        };
        out.map_err(failure)
    }

    fn twin_time(&self) -> f64 {
        self.state.twin_time
    }
}
