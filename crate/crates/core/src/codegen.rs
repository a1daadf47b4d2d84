//! Turns a BOP into one straight-line PL program by filling a template per
//! operation kind.
//!
//! Template directives are lines starting with `#!`:
//!
//! ```text
//! #! kind: place                  operation kind the template serves
//! #! params: a b c                parameters every op must bind
//! #! optional: d e                parameters that may be absent
//! #! repeat screws: x y           body repeated per screw, with x, y bound
//! #! if d                         body kept only when d is bound
//! #! end                          closes repeat / if
//! ```
//!
//! `{{name}}` placeholders become quoted strings or `pose(...)` literals.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cell_match::{Bop, BoundOp};
use crate::geom::Pose;
use crate::pl::{self, pose_literal, print_expr, AbilityRegistry, Expr, PlError};
use crate::sequencer::OpKind;
use crate::tooling::Role;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CodegenError {
    #[error("template for {kind}: {message}")]
    BadTemplate { kind: String, message: String },
    #[error("no template for op kind {kind}")]
    MissingTemplate { kind: String },
    #[error("op `{op_id}` does not bind parameter `{name}`")]
    MissingParam { op_id: String, name: String },
    #[error("generated program does not parse: {0}")]
    Unparsable(PlError),
    #[error("generated program calls unknown ability `{0}`")]
    UnknownAbility(String),
    #[error("templates: {0}")]
    Io(String),
}

#[derive(Debug, Clone, PartialEq)]
pub enum ParamValue {
    Str(String),
    Pose(Pose),
    List(Vec<BTreeMap<String, ParamValue>>),
}

impl ParamValue {
    fn render(&self) -> Option<String> {
        match self {
            ParamValue::Str(s) => Some(print_expr(&Expr::Str(s.clone()))),
            ParamValue::Pose(p) => Some(print_expr(&Expr::Pose(pose_literal(p)))),
            ParamValue::List(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Text(String),
    Repeat {
        list: String,
        fields: Vec<String>,
        body: Vec<Node>,
    },
    If {
        param: String,
        body: Vec<Node>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlTemplate {
    pub op_kind: OpKind,
    pub body: String,
    pub required_params: Vec<String>,
    pub optional_params: Vec<String>,
    nodes: Vec<Node>,
}

fn kind_name(k: OpKind) -> &'static str {
    match k {
        OpKind::Unload => "unload",
        OpKind::Place => "place",
        OpKind::Fasten => "fasten",
    }
}

fn placeholders(line: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut rest = line;
    while let Some(i) = rest.find("{{") {
        let Some(j) = rest[i..].find("}}") else { break };
        out.push(rest[i + 2..i + j].trim().to_string());
        rest = &rest[i + j + 2..];
    }
    out
}

impl PlTemplate {
    pub fn parse(text: &str) -> Result<Self, CodegenError> {
        let mut kind = None;
        let mut required = Vec::new();
        let mut optional = Vec::new();
        let mut stack: Vec<(Option<Node>, Vec<Node>)> = vec![(None, Vec::new())];
        let bad = |kind: Option<OpKind>, m: String| CodegenError::BadTemplate {
            kind: kind.map(kind_name).unwrap_or("?").into(),
            message: m,
        };
        let words = |s: &str| s.split_whitespace().map(str::to_string).collect::<Vec<_>>();
        for line in text.lines() {
            let Some(d) = line.strip_prefix("#!") else {
                stack.last_mut().unwrap().1.push(Node::Text(line.to_string()));
                continue;
            };
            let d = d.trim();
            if let Some(k) = d.strip_prefix("kind:") {
                kind = Some(match k.trim() {
                    "unload" => OpKind::Unload,
                    "place" => OpKind::Place,
                    "fasten" => OpKind::Fasten,
                    other => return Err(bad(kind, format!("unknown kind `{other}`"))),
                });
            } else if let Some(p) = d.strip_prefix("params:") {
                required.extend(words(p));
            } else if let Some(p) = d.strip_prefix("optional:") {
                optional.extend(words(p));
            } else if let Some(r) = d.strip_prefix("repeat ") {
                let (list, fields) = r
                    .split_once(':')
                    .ok_or_else(|| bad(kind, "repeat needs `list: fields`".into()))?;
                stack.push((
                    Some(Node::Repeat {
                        list: list.trim().into(),
                        fields: words(fields),
                        body: Vec::new(),
                    }),
                    Vec::new(),
                ));
            } else if let Some(p) = d.strip_prefix("if ") {
                stack.push((
                    Some(Node::If {
                        param: p.trim().into(),
                        body: Vec::new(),
                    }),
                    Vec::new(),
                ));
            } else if d == "end" {
                let (open, body) = stack
                    .pop()
                    .filter(|(o, _)| o.is_some())
                    .ok_or_else(|| bad(kind, "`end` without block".into()))?;
                let node = match open.unwrap() {
                    Node::Repeat { list, fields, .. } => Node::Repeat { list, fields, body },
                    Node::If { param, .. } => Node::If { param, body },
                    Node::Text(_) => unreachable!(),
                };
                stack.last_mut().unwrap().1.push(node);
            } else {
                return Err(bad(kind, format!("unknown directive `{d}`")));
            }
        }
        if stack.len() != 1 {
            return Err(bad(kind, "unclosed block".into()));
        }
        let op_kind = kind.ok_or_else(|| bad(kind, "missing `#! kind:`".into()))?;
        let t = PlTemplate {
            op_kind,
            body: text.to_string(),
            required_params: required,
            optional_params: optional,
            nodes: stack.pop().unwrap().1,
        };
        t.check_declared(&t.nodes, &BTreeSet::new())?;
        Ok(t)
    }

    fn check_declared(&self, nodes: &[Node], scope: &BTreeSet<String>) -> Result<(), CodegenError> {
        let declared = |n: &str| {
            scope.contains(n)
                || self.required_params.iter().any(|p| p == n)
                || self.optional_params.iter().any(|p| p == n)
        };
        let bad = |m: String| CodegenError::BadTemplate {
            kind: kind_name(self.op_kind).into(),
            message: m,
        };
        for n in nodes {
            match n {
                Node::Text(l) => {
                    if let Some(p) = placeholders(l).into_iter().find(|p| !declared(p)) {
                        return Err(bad(format!("placeholder `{p}` is not declared")));
                    }
                }
                Node::Repeat { fields, body, .. } => {
                    let mut inner = scope.clone();
                    inner.extend(fields.iter().cloned());
                    self.check_declared(body, &inner)?;
                }
                Node::If { param, body } => {
                    if !self.optional_params.contains(param) {
                        return Err(bad(format!("`if {param}` needs an optional parameter")));
                    }
                    self.check_declared(body, scope)?;
                }
            }
        }
        Ok(())
    }
}

pub fn default_templates() -> BTreeMap<OpKind, PlTemplate> {
    [
        include_str!("../templates/unload.pl"),
        include_str!("../templates/place.pl"),
        include_str!("../templates/fasten.pl"),
    ]
    .iter()
    .map(|t| {
        let t = PlTemplate::parse(t).expect("shipped template is valid");
        (t.op_kind, t)
    })
    .collect()
}

/// Reads `unload.pl`, `place.pl` and `fasten.pl` (whichever exist) from `dir`.
pub fn load_templates(dir: &Path) -> Result<BTreeMap<OpKind, PlTemplate>, CodegenError> {
    let mut out = BTreeMap::new();
    for name in ["unload", "place", "fasten"] {
        let p = dir.join(format!("{name}.pl"));
        if p.exists() {
            let text = std::fs::read_to_string(&p).map_err(|e| CodegenError::Io(e.to_string()))?;
            let t = PlTemplate::parse(&text)?;
            out.insert(t.op_kind, t);
        }
    }
    Ok(out)
}

/// Parameters an op binds, keyed as the templates expect.
pub fn op_params(op: &BoundOp) -> BTreeMap<String, ParamValue> {
    let s = |v: &str| ParamValue::Str(v.to_string());
    let mut m = BTreeMap::new();
    m.insert("op_id".into(), s(&op.op.op_id));
    if let Some(model) = &op.part_model {
        m.insert("part_model".into(), s(model));
    }
    match op.op.kind {
        OpKind::Unload | OpKind::Place => {
            m.insert("part".into(), s(&op.op.subject));
        }
        OpKind::Fasten => {}
    }
    let res = |r: Role| op.resources.get(&r);
    match op.op.kind {
        OpKind::Unload => {
            if let Some(j) = res(Role::InputJig) {
                m.insert("jig".into(), s(j));
            }
        }
        OpKind::Place => {
            for (key, role) in [
                ("robot", Role::Gripper),
                ("input_jig", Role::InputJig),
                ("assembly_jig", Role::AssemblyJig),
            ] {
                if let Some(v) = res(role) {
                    m.insert(key.into(), s(v));
                }
            }
            m.insert("release_state".into(), s(if op.hold { "close" } else { "open" }));
        }
        OpKind::Fasten => {
            if let Some(v) = res(Role::Screwdriver) {
                m.insert("screwdriver".into(), s(v));
            }
            if let Some(v) = res(Role::Gripper) {
                m.insert("gripper".into(), s(v));
            }
            if let Some(p) = &op.held_part {
                m.insert("held_part".into(), s(p));
            }
            let screws = op
                .screws
                .iter()
                .map(|sc| {
                    let mut item: BTreeMap<String, ParamValue> = sc
                        .targets
                        .iter()
                        .map(|(k, p)| (k.clone(), ParamValue::Pose(*p)))
                        .collect();
                    item.insert("joint".into(), s(&sc.joint_id));
                    item.insert("feeder_id".into(), s(&sc.feeder));
                    item
                })
                .collect();
            m.insert("screws".into(), ParamValue::List(screws));
        }
    }
    for (k, p) in &op.targets {
        m.insert(k.clone(), ParamValue::Pose(*p));
    }
    m
}

fn render_nodes(
    nodes: &[Node],
    op_id: &str,
    params: &BTreeMap<String, ParamValue>,
    scope: &BTreeMap<String, ParamValue>,
    out: &mut String,
) -> Result<(), CodegenError> {
    let missing = |name: &str| CodegenError::MissingParam {
        op_id: op_id.into(),
        name: name.into(),
    };
    for n in nodes {
        match n {
            Node::Text(line) => {
                let mut rendered = String::new();
                let mut rest = line.as_str();
                while let Some(i) = rest.find("{{") {
                    let j = rest[i..].find("}}").map(|j| i + j).ok_or_else(|| missing("}}"))?;
                    let name = rest[i + 2..j].trim();
                    let v = scope
                        .get(name)
                        .or_else(|| params.get(name))
                        .ok_or_else(|| missing(name))?;
                    rendered.push_str(&rest[..i]);
                    rendered.push_str(&v.render().ok_or_else(|| missing(name))?);
                    rest = &rest[j + 2..];
                }
                rendered.push_str(rest);
                out.push_str(&rendered);
                out.push('\n');
            }
            Node::Repeat { list, body, .. } => {
                let Some(ParamValue::List(items)) = params.get(list) else {
                    return Err(missing(list));
                };
                for item in items {
                    render_nodes(body, op_id, params, item, out)?;
                }
            }
            Node::If { param, body } => {
                if params.contains_key(param) {
                    render_nodes(body, op_id, params, scope, out)?;
                }
            }
        }
    }
    Ok(())
}

/// Placeholder-free PL text for one op.
pub fn render_op(t: &PlTemplate, op: &BoundOp) -> Result<String, CodegenError> {
    if t.op_kind != op.op.kind {
        return Err(CodegenError::MissingTemplate {
            kind: kind_name(op.op.kind).into(),
        });
    }
    let params = op_params(op);
    for p in &t.required_params {
        if !params.contains_key(p) {
            return Err(CodegenError::MissingParam {
                op_id: op.op.op_id.clone(),
                name: p.clone(),
            });
        }
    }
    let mut out = String::new();
    render_nodes(&t.nodes, &op.op.op_id, &params, &BTreeMap::new(), &mut out)?;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LineRange {
    pub op_id: String,
    /// 1-based, inclusive.
    pub first_line: usize,
    pub last_line: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlProgram {
    pub source: String,
    pub provenance: Vec<LineRange>,
}

impl PlProgram {
    /// Op whose fragment contains `line`.
    pub fn op_at(&self, line: usize) -> Option<&str> {
        self.provenance
            .iter()
            .find(|r| r.first_line <= line && line <= r.last_line)
            .map(|r| r.op_id.as_str())
    }

    pub fn map_json(&self) -> String {
        serde_json::to_string_pretty(&self.provenance).expect("provenance serializes")
    }
}

/// Fragments in BOP order, each headed by an op-id comment.
pub fn generate_program(b: &Bop, templates: &BTreeMap<OpKind, PlTemplate>) -> Result<PlProgram, CodegenError> {
    let mut source = String::new();
    let mut provenance = Vec::new();
    let mut line = 1;
    for op in &b.ops {
        let t = templates
            .get(&op.op.kind)
            .ok_or_else(|| CodegenError::MissingTemplate {
                kind: kind_name(op.op.kind).into(),
            })?;
        let frag = format!("# op {} (level {})\n{}", op.op.op_id, op.level, render_op(t, op)?);
        let n = frag.lines().count();
        provenance.push(LineRange {
            op_id: op.op.op_id.clone(),
            first_line: line,
            last_line: line + n - 1,
        });
        line += n;
        source.push_str(&frag);
    }
    pl::parse(&source).map_err(CodegenError::Unparsable)?;
    Ok(PlProgram { source, provenance })
}

/// Every called ability must exist in `reg`.
pub fn check_abilities(p: &PlProgram, reg: &AbilityRegistry) -> Result<(), CodegenError> {
    let ast = pl::parse(&p.source).map_err(CodegenError::Unparsable)?;
    match ast.statements.iter().find(|s| !reg.contains(&s.call.ability)) {
        Some(s) => Err(CodegenError::UnknownAbility(s.call.ability.clone())),
        None => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sequencer::SeqOp;

    fn op(kind: OpKind, subject: &str) -> BoundOp {
        BoundOp {
            op: SeqOp {
                op_id: format!("{}_{subject}", kind_name(kind)),
                kind,
                subject: subject.into(),
                joint_ids: None,
            },
            level: 0,
            resources: BTreeMap::new(),
            part_model: Some("profile".into()),
            hold: false,
            held_part: None,
            targets: BTreeMap::new(),
            screws: Vec::new(),
        }
    }

    #[test]
    fn unload_fragment() {
        let t = &default_templates()[&OpKind::Unload];
        let mut o = op(OpKind::Unload, "A");
        o.resources.insert(Role::InputJig, "JIG_A_IN".into());
        let f = render_op(t, &o).unwrap();
        assert!(f.contains("unload_part(part: \"A\", jig: \"JIG_A_IN\")"), "{f}");
        assert!(!f.contains("{{"));
        pl::parse(&f).unwrap();
    }

    #[test]
    fn fasten_without_screwdriver() {
        let t = &default_templates()[&OpKind::Fasten];
        let o = op(OpKind::Fasten, "D");
        assert_eq!(
            render_op(t, &o).unwrap_err(),
            CodegenError::MissingParam {
                op_id: "fasten_D".into(),
                name: "screwdriver".into()
            }
        );
    }

    #[test]
    fn empty_bop_is_empty_program() {
        let b = Bop {
            bop_id: "x".into(),
            cell_id: "c".into(),
            sequence_id: "S0001".into(),
            label: String::new(),
            ops: Vec::new(),
        };
        let p = generate_program(&b, &default_templates()).unwrap();
        assert_eq!(p.source, "");
        assert!(pl::parse(&p.source).unwrap().statements.is_empty());
    }

    #[test]
    fn missing_template() {
        let b = Bop {
            bop_id: "x".into(),
            cell_id: "c".into(),
            sequence_id: "S0001".into(),
            label: String::new(),
            ops: vec![op(OpKind::Unload, "A")],
        };
        let mut ts = default_templates();
        ts.remove(&OpKind::Unload);
        assert!(matches!(
            generate_program(&b, &ts),
            Err(CodegenError::MissingTemplate { .. })
        ));
    }

    #[test]
    fn template_directives_are_checked() {
        assert!(PlTemplate::parse("#! kind: unload\nf(a: {{x}})").is_err());
        assert!(PlTemplate::parse("#! kind: unload\n#! params: x\n#! if x\n#! end").is_err());
        assert!(PlTemplate::parse("#! kind: unload\n#! optional: x\n#! if x\n").is_err());
        assert!(PlTemplate::parse("f()").is_err());
        let t =
            PlTemplate::parse("#! kind: fasten\n#! params: op_id\n#! repeat screws: joint\nf(j: {{joint}})\n#! end")
                .unwrap();
        assert_eq!(t.required_params, vec!["op_id"]);
    }

    #[test]
    fn shipped_templates_call_known_abilities() {
        let reg = crate::twin::abilities::registry();
        for t in default_templates().values() {
            for n in &t.nodes {
                fn walk(n: &Node, reg: &AbilityRegistry) {
                    match n {
                        Node::Text(l) => {
                            let l = l.trim();
                            if l.is_empty() || l.starts_with('#') {
                                return;
                            }
                            let call = l
                                .strip_prefix("let ")
                                .and_then(|r| r.split_once('='))
                                .map_or(l, |(_, c)| c.trim());
                            let name = call.split('(').next().unwrap();
                            assert!(reg.contains(name), "{name}");
                        }
                        Node::Repeat { body, .. } | Node::If { body, .. } => body.iter().for_each(|b| walk(b, reg)),
                    }
                }
                walk(n, &reg);
            }
        }
    }
}
