//! Straight-line interpreter with a static type pass and first-error halt.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{AbilityHost, AbilityRegistry, ArgType, Args, Expr, PlError, Program, Value};
use crate::geom::Pose;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub statement: usize,
    pub line: usize,
    pub ability: String,
    pub args: BTreeMap<String, serde_json::Value>,
    pub result: serde_json::Value,
    pub twin_time: f64,
}

/// One entry per successfully executed statement; `error` holds what
/// stopped execution, if anything.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecutionTrace {
    pub statements: usize,
    pub entries: Vec<TraceEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<PlError>,
}

impl ExecutionTrace {
    pub fn ok(&self) -> bool {
        self.error.is_none()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("trace serializes")
    }
}

fn type_name(t: ArgType) -> String {
    serde_json::to_value(t).unwrap().as_str().unwrap().to_string()
}

fn literal_type(e: &Expr) -> Option<ArgType> {
    match e {
        Expr::Str(_) => Some(ArgType::Str),
        Expr::Num(_) => Some(ArgType::Num),
        Expr::Pose(_) => Some(ArgType::Pose),
        Expr::Json(_) => Some(ArgType::Json),
        Expr::Var(_) => None,
    }
}

fn accepts(want: ArgType, got: ArgType) -> bool {
    want == ArgType::Any || want == got
}

/// Checks abilities, argument names and types against the registry
/// without running anything.
pub fn check(p: &Program, reg: &AbilityRegistry) -> Result<(), PlError> {
    let mut vars: BTreeMap<&str, ArgType> = BTreeMap::new();
    for s in &p.statements {
        let ability = &s.call.ability;
        let sig = reg.get(ability).ok_or_else(|| PlError::UnknownAbility {
            name: ability.clone(),
            line: s.line,
        })?;
        let mismatch = |arg: &str, expected: String, found: String| PlError::ArgTypeMismatch {
            line: s.line,
            ability: ability.clone(),
            arg: arg.into(),
            expected,
            found,
        };
        for (name, e) in &s.call.args {
            let Some(param) = sig.params.iter().find(|p| &p.name == name) else {
                return Err(mismatch(name, "no such argument".into(), "an argument".into()));
            };
            let got = match e {
                Expr::Var(v) => vars.get(v.as_str()).copied().unwrap_or(ArgType::Any),
                other => literal_type(other).unwrap(),
            };
            if !accepts(param.ty, got) && got != ArgType::Any {
                return Err(mismatch(name, type_name(param.ty), type_name(got)));
            }
        }
        for param in sig.params.iter().filter(|p| p.required) {
            if !s.call.args.iter().any(|(n, _)| *n == param.name) {
                return Err(mismatch(&param.name, type_name(param.ty), "nothing".into()));
            }
        }
        if let Some(b) = &s.binding {
            vars.insert(b, sig.returns);
        }
    }
    Ok(())
}

fn eval(e: &Expr, env: &BTreeMap<String, Value>) -> Value {
    match e {
        Expr::Str(s) => Value::Str(s.clone()),
        Expr::Num(v) => Value::Num(*v),
        Expr::Pose(v) => Value::Pose(Pose::from_wxyz([v[0], v[1], v[2]], [v[3], v[4], v[5], v[6]])),
        Expr::Json(j) => Value::Json(j.clone()),
        Expr::Var(v) => env.get(v).cloned().unwrap_or(Value::Null),
    }
}

/// Runs `p` against `host`. Static errors yield an empty trace.
pub fn interpret(p: &Program, host: &mut dyn AbilityHost) -> ExecutionTrace {
    let mut trace = ExecutionTrace {
        statements: p.statements.len(),
        entries: Vec::new(),
        error: None,
    };
    if let Err(e) = check(p, host.registry()) {
        trace.error = Some(e);
        return trace;
    }
    let mut env: BTreeMap<String, Value> = BTreeMap::new();
    for (i, s) in p.statements.iter().enumerate() {
        let args: Args = s.call.args.iter().map(|(n, e)| (n.clone(), eval(e, &env))).collect();
        let sig = host.registry().get(&s.call.ability).cloned().expect("checked");
        if let Some((name, v, want)) = args.iter().find_map(|(n, v)| {
            let want = sig.params.iter().find(|p| &p.name == n)?.ty;
            (!accepts(want, v.ty())).then(|| (n.clone(), v.ty(), want))
        }) {
            trace.error = Some(PlError::ArgTypeMismatch {
                line: s.line,
                ability: s.call.ability.clone(),
                arg: name,
                expected: type_name(want),
                found: type_name(v),
            });
            return trace;
        }
        match host.call(&s.call.ability, &args) {
            Ok(v) => {
                trace.entries.push(TraceEntry {
                    statement: i,
                    line: s.line,
                    ability: s.call.ability.clone(),
                    args: args.iter().map(|(k, v)| (k.clone(), v.summary())).collect(),
                    result: v.summary(),
                    twin_time: host.twin_time(),
                });
                if let Some(b) = &s.binding {
                    env.insert(b.clone(), v);
                }
            }
            Err(f) => {
                trace.error = Some(PlError::Ability {
                    line: s.line,
                    statement: i,
                    ability: s.call.ability.clone(),
                    reason: f.reason,
                    detail: f.detail,
                    objects: f.objects,
                });
                return trace;
            }
        }
    }
    trace
}
