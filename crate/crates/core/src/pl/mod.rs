//! The process language: straight-line programs of named ability calls.
//!
//! ```text
//! program   := statement*
//! statement := "let" IDENT "=" call | call
//! call      := IDENT "(" [IDENT ":" expr ("," IDENT ":" expr)*] ")"
//! expr      := STRING | NUMBER | "pose(" NUMBER ("," NUMBER){6} ")" | IDENT | json
//! ```
//!
//! `#` starts a comment running to the end of the line. Pose literals are
//! `x, y, z, qw, qx, qy, qz`.

pub mod interp;
pub mod lexer;
pub mod parser;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::Pose;
use crate::twin::planner::Trajectory;
use crate::twin::snapshot::CellSnapshot;

pub use interp::{interpret, ExecutionTrace, TraceEntry};
pub use lexer::tokenize;
pub use parser::parse;

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
#[serde(tag = "error", rename_all = "snake_case")]
pub enum PlError {
    #[error("{line}:{col}: unexpected character `{ch}`")]
    Lex { line: usize, col: usize, ch: char },
    #[error("{line}:{col}: expected {expected}, found {found}")]
    Parse {
        line: usize,
        col: usize,
        expected: String,
        found: String,
    },
    #[error("line {line}: variable `{name}` used before it is bound")]
    UnboundVariable { name: String, line: usize },
    #[error("line {line}: unknown ability `{name}`")]
    UnknownAbility { name: String, line: usize },
    #[error("line {line}: `{ability}` argument `{arg}`: expected {expected}, got {found}")]
    ArgTypeMismatch {
        line: usize,
        ability: String,
        arg: String,
        expected: String,
        found: String,
    },
    #[error("line {line}: `{ability}` failed ({reason}): {detail}")]
    Ability {
        line: usize,
        statement: usize,
        ability: String,
        reason: String,
        detail: String,
        objects: Vec<String>,
    },
}

impl PlError {
    pub fn reason(&self) -> &str {
        match self {
            PlError::Lex { .. } | PlError::Parse { .. } | PlError::UnboundVariable { .. } => "parse_error",
            PlError::UnknownAbility { .. } => "unknown_ability",
            PlError::ArgTypeMismatch { .. } => "arg_type_mismatch",
            PlError::Ability { reason, .. } => reason,
        }
    }

    pub fn line(&self) -> usize {
        match self {
            PlError::Lex { line, .. }
            | PlError::Parse { line, .. }
            | PlError::UnboundVariable { line, .. }
            | PlError::UnknownAbility { line, .. }
            | PlError::ArgTypeMismatch { line, .. }
            | PlError::Ability { line, .. } => *line,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Str(String),
    Num(f64),
    /// `x, y, z, qw, qx, qy, qz`
    Pose([f64; 7]),
    Var(String),
    Json(serde_json::Value),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Call {
    pub ability: String,
    pub args: Vec<(String, Expr)>,
}

/// `line` is where the statement starts; it is ignored by equality.
#[derive(Debug, Clone)]
pub struct Stmt {
    pub binding: Option<String>,
    pub call: Call,
    pub line: usize,
}

impl PartialEq for Stmt {
    fn eq(&self, other: &Self) -> bool {
        self.binding == other.binding && self.call == other.call
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Program {
    pub statements: Vec<Stmt>,
}

pub fn pose_literal(p: &Pose) -> [f64; 7] {
    let q = p.wxyz();
    let t = p.translation;
    [t.x, t.y, t.z, q[0], q[1], q[2], q[3]]
}

pub fn fmt_num(v: f64) -> String {
    let s = format!("{v:?}");
    s.strip_suffix(".0").map(str::to_string).unwrap_or(s)
}

pub fn print_expr(e: &Expr) -> String {
    match e {
        Expr::Str(s) => serde_json::to_string(s).unwrap(),
        Expr::Num(v) => fmt_num(*v),
        Expr::Pose(v) => format!("pose({})", v.iter().map(|x| fmt_num(*x)).collect::<Vec<_>>().join(", ")),
        Expr::Var(v) => v.clone(),
        Expr::Json(j) => serde_json::to_string(j).unwrap(),
    }
}

pub fn print_call(c: &Call) -> String {
    let args: Vec<String> = c.args.iter().map(|(n, e)| format!("{n}: {}", print_expr(e))).collect();
    format!("{}({})", c.ability, args.join(", "))
}

/// One statement per line; parse(pretty_print(p)) == p.
pub fn pretty_print(p: &Program) -> String {
    let mut out = String::new();
    for s in &p.statements {
        if let Some(b) = &s.binding {
            let _ = write!(out, "let {b} = ");
        }
        out.push_str(&print_call(&s.call));
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArgType {
    Str,
    Num,
    Pose,
    Json,
    Snapshot,
    Trajectory,
    Null,
    Any,
}

#[derive(Debug, Clone)]
pub enum Value {
    Null,
    Num(f64),
    Str(String),
    Pose(Pose),
    Json(serde_json::Value),
    Snapshot(Arc<CellSnapshot>),
    Trajectory(Arc<Trajectory>),
}

impl Value {
    pub fn ty(&self) -> ArgType {
        match self {
            Value::Null => ArgType::Null,
            Value::Num(_) => ArgType::Num,
            Value::Str(_) => ArgType::Str,
            Value::Pose(_) => ArgType::Pose,
            Value::Json(_) => ArgType::Json,
            Value::Snapshot(_) => ArgType::Snapshot,
            Value::Trajectory(_) => ArgType::Trajectory,
        }
    }

    /// Compact JSON form for traces; snapshots and trajectories are summarized.
    pub fn summary(&self) -> serde_json::Value {
        use serde_json::json;
        match self {
            Value::Null => serde_json::Value::Null,
            Value::Num(v) => json!(v),
            Value::Str(s) => json!(s),
            Value::Pose(p) => serde_json::to_value(p).unwrap(),
            Value::Json(j) => j.clone(),
            Value::Snapshot(s) => json!({"snapshot": {"objects": s.objects.len(), "twin_time": s.twin_time}}),
            Value::Trajectory(t) => json!({"trajectory": {"waypoints": t.waypoints.len(), "duration": t.duration()}}),
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            Value::Str(s) => Some(s),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Param {
    pub name: String,
    pub ty: ArgType,
    pub required: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbilitySig {
    pub params: Vec<Param>,
    pub returns: ArgType,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AbilityRegistry {
    pub abilities: BTreeMap<String, AbilitySig>,
}

impl AbilityRegistry {
    pub fn add(&mut self, name: &str, params: &[(&str, ArgType, bool)], returns: ArgType) {
        let prev = self.abilities.insert(
            name.into(),
            AbilitySig {
                params: params
                    .iter()
                    .map(|(n, t, r)| Param {
                        name: n.to_string(),
                        ty: *t,
                        required: *r,
                    })
                    .collect(),
                returns,
            },
        );
        assert!(prev.is_none(), "ability `{name}` registered twice");
    }

    pub fn get(&self, name: &str) -> Option<&AbilitySig> {
        self.abilities.get(name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.abilities.contains_key(name)
    }
}

pub type Args = BTreeMap<String, Value>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AbilityFailure {
    pub reason: String,
    pub detail: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub objects: Vec<String>,
}

impl AbilityFailure {
    pub fn new(reason: &str, detail: impl Into<String>) -> Self {
        AbilityFailure {
            reason: reason.into(),
            detail: detail.into(),
            objects: Vec::new(),
        }
    }
}

/// Whatever executes abilities: the digital twin, or a test double.
pub trait AbilityHost {
    fn registry(&self) -> &AbilityRegistry;
    fn call(&mut self, ability: &str, args: &Args) -> Result<Value, AbilityFailure>;
    fn twin_time(&self) -> f64;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn print_parse_fixed_point() {
        let src = "let s = get_cell_state()\n\
                   let t = plan_trajectory(robot: \"robot_L\", target: pose(0.1, -2, 3e-7, 1, 0, 0, 0), collisions: s)\n\
                   publish(topic: \"ops\", key: \"k\\n\", payload: {\"z\": [1, 2.5], \"a\": null})\n";
        let p = parse(src).unwrap();
        let text = pretty_print(&p);
        let q = parse(&text).unwrap();
        assert_eq!(p, q);
        assert_eq!(pretty_print(&q), text);
        assert!(text.contains("{\"a\":null,\"z\":[1,2.5]}"));
    }

    #[test]
    fn empty_program_prints_empty() {
        assert_eq!(pretty_print(&Program::default()), "");
        assert_eq!(parse("").unwrap(), Program::default());
    }

    #[test]
    fn numbers_print_shortest() {
        assert_eq!(fmt_num(1.0), "1");
        assert_eq!(fmt_num(0.1 + 0.2), "0.30000000000000004");
        assert_eq!(fmt_num(-2.5e-9), "-2.5e-9");
        for v in [1e300, -1e-300, 123456789.125, 5e-324] {
            assert_eq!(fmt_num(v).parse::<f64>().unwrap(), v);
        }
    }
}
