//! Helpers shared by the integration suites: random liaison graphs, a
//! brute-force sequence oracle and a fine-step feasibility oracle.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use autoasm::design::DesignDoc;
use autoasm::feasibility::{feasible_directions, feasible_directions_with_step, FeasibilityParams, SubassemblyGeom};
use autoasm::liaison::LiaisonGraph;
use autoasm::sequencer::{merges, AssemblySequence, OpKind};
use rand::Rng;

/// Connected graph on `n` parts `P0..`: a random spanning tree plus random
/// extra edges.
pub fn random_graph<R: Rng>(rng: &mut R, n: usize) -> LiaisonGraph {
    let ids: Vec<String> = (0..n).map(|i| format!("P{i}")).collect();
    let mut g = LiaisonGraph {
        nodes: ids.iter().cloned().collect(),
        edges: BTreeMap::new(),
    };
    let add = |g: &mut LiaisonGraph, a: usize, b: usize| {
        let (a, b) = (a.min(b), a.max(b));
        let k = g.edges.len();
        g.edges
            .entry((ids[a].clone(), ids[b].clone()))
            .or_insert_with(|| vec![format!("J{k}")]);
    };
    for i in 1..n {
        let j = rng.gen_range(0..i);
        add(&mut g, i, j);
    }
    for a in 0..n {
        for b in a + 1..n {
            if rng.gen_bool(0.3) {
                add(&mut g, a, b);
            }
        }
    }
    g
}

fn connected(g: &LiaisonGraph, a: &BTreeSet<String>, b: &BTreeSet<String>) -> bool {
    g.edges
        .keys()
        .any(|(x, y)| (a.contains(x) && b.contains(y)) || (a.contains(y) && b.contains(x)))
}

/// Token of a sequence op with subassembly names replaced by their part
/// sets, so labels compare independently of naming.
pub fn canonical(s: &AssemblySequence) -> Vec<String> {
    let fastens: BTreeMap<usize, BTreeSet<String>> = merges(s)
        .into_iter()
        .map(|m| (m.op_index, m.fixed.union(&m.moving).cloned().collect()))
        .collect();
    s.ops
        .iter()
        .enumerate()
        .filter_map(|(i, o)| match o.kind {
            OpKind::Unload => None,
            OpKind::Place => Some(o.subject.clone()),
            OpKind::Fasten => Some(format!("{:?}", fastens[&i])),
        })
        .collect()
}

#[derive(Clone)]
enum Tok {
    Place(String),
    Fasten(BTreeSet<String>),
}

/// Checks the invariants a Fasten of `set` must satisfy at the end of
/// `prefix`: its block is the contiguous tail, holding exactly the places
/// and fastens inside `set`, and it splits into two liaison-connected
/// maximal children.
fn fasten_ok(g: &LiaisonGraph, prefix: &[Tok], set: &BTreeSet<String>) -> bool {
    let len = 2 * set.len() - 2;
    if prefix.len() < len {
        return false;
    }
    let block = &prefix[prefix.len() - len..];
    let mut places = BTreeSet::new();
    let mut inner: Vec<&BTreeSet<String>> = Vec::new();
    for t in block {
        match t {
            Tok::Place(p) if set.contains(p) => {
                places.insert(p.clone());
            }
            Tok::Fasten(s) if s.is_subset(set) && s != set => inner.push(s),
            _ => return false,
        }
    }
    if &places != set {
        return false;
    }
    let maximal: Vec<&BTreeSet<String>> = inner
        .iter()
        .copied()
        .filter(|s| !inner.iter().any(|o| o != s && s.is_subset(o)))
        .collect();
    let covered: BTreeSet<String> = maximal.iter().flat_map(|s| s.iter().cloned()).collect();
    let mut children: Vec<BTreeSet<String>> = maximal.into_iter().cloned().collect();
    children.extend(set.difference(&covered).map(|p| BTreeSet::from([p.clone()])));
    children.len() == 2 && connected(g, &children[0], &children[1])
}

/// Every op ordering (places and fastens of arbitrary part subsets) that
/// satisfies the sequence invariants, as canonical token lists.
pub fn oracle(g: &LiaisonGraph) -> BTreeSet<Vec<String>> {
    let parts: Vec<String> = g.nodes.iter().cloned().collect();
    let n = parts.len();
    let subsets: Vec<BTreeSet<String>> = (1u32..1 << n)
        .filter(|m| m.count_ones() >= 2)
        .map(|m| (0..n).filter(|i| m & (1 << i) != 0).map(|i| parts[i].clone()).collect())
        .collect();
    let mut out = BTreeSet::new();
    fn rec(
        g: &LiaisonGraph,
        parts: &[String],
        subsets: &[BTreeSet<String>],
        prefix: &mut Vec<Tok>,
        out: &mut BTreeSet<Vec<String>>,
    ) {
        let n = parts.len();
        if prefix.len() == 2 * n - 1 {
            let full: BTreeSet<String> = parts.iter().cloned().collect();
            let complete = n == 1 || matches!(prefix.last(), Some(Tok::Fasten(s)) if *s == full);
            if complete {
                out.insert(
                    prefix
                        .iter()
                        .map(|t| match t {
                            Tok::Place(p) => p.clone(),
                            Tok::Fasten(s) => format!("{s:?}"),
                        })
                        .collect(),
                );
            }
            return;
        }
        for p in parts {
            if !prefix.iter().any(|t| matches!(t, Tok::Place(q) if q == p)) {
                prefix.push(Tok::Place(p.clone()));
                rec(g, parts, subsets, prefix, out);
                prefix.pop();
            }
        }
        for s in subsets {
            let used = prefix.iter().any(|t| matches!(t, Tok::Fasten(q) if q == s));
            if !used && fasten_ok(g, prefix, s) {
                prefix.push(Tok::Fasten(s.clone()));
                rec(g, parts, subsets, prefix, out);
                prefix.pop();
            }
        }
    }
    rec(g, &parts, &subsets, &mut Vec::new(), &mut out);
    out
}

/// Fine-step sweep resolution of the feasibility oracle.
pub const FINE_STEP: f64 = 1e-3;

/// Compares coarse and 1 mm verdicts on every distinct merge of `seqs`;
/// returns the merges where they differ.
pub fn fine_disagreements(d: &DesignDoc, seqs: &[AssemblySequence], p: &FeasibilityParams) -> Vec<String> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for s in seqs {
        for m in merges(s) {
            if !seen.insert((m.fixed.clone(), m.moving.clone())) {
                continue;
            }
            let a = SubassemblyGeom::from_design(d, &m.fixed);
            let b = SubassemblyGeom::from_design(d, &m.moving);
            let coarse = feasible_directions(&a, &b, p);
            let fine = feasible_directions_with_step(&a, &b, &p.directions, FINE_STEP, p.eps);
            if coarse != fine {
                out.push(format!("{:?} <- {:?}: {coarse:?} vs {fine:?}", m.fixed, m.moving));
            }
        }
    }
    out
}

pub mod arb {
    use autoasm::pl::{Call, Expr, Program, Stmt};
    use proptest::prelude::*;

    fn ident() -> impl Strategy<Value = String> {
        "[a-z_][a-z0-9_]{0,8}".prop_filter("keyword", |s| {
            s != "let" && s != "pose" && s != "true" && s != "false" && s != "null"
        })
    }

    fn num() -> impl Strategy<Value = f64> {
        prop_oneof![
            any::<i32>().prop_map(f64::from),
            (-1e6f64..1e6),
            any::<f64>().prop_filter("finite", |v| v.is_finite()),
        ]
    }

    fn json() -> impl Strategy<Value = serde_json::Value> {
        let leaf = prop_oneof![
            Just(serde_json::Value::Null),
            any::<bool>().prop_map(serde_json::Value::Bool),
            any::<i64>().prop_map(|v| serde_json::json!(v)),
            num().prop_map(|v| serde_json::json!(v)),
            ".{0,6}".prop_map(serde_json::Value::String),
        ];
        leaf.prop_recursive(3, 16, 4, |inner| {
            prop_oneof![
                prop::collection::vec(inner.clone(), 0..4).prop_map(serde_json::Value::Array),
                prop::collection::btree_map("[a-z]{1,4}", inner, 0..4)
                    .prop_map(|m| serde_json::Value::Object(m.into_iter().collect())),
            ]
        })
        .prop_filter("container", |v| v.is_array() || v.is_object())
    }

    /// `Var(k)` refers to the k-th earlier binding, resolved in `program`.
    fn expr() -> impl Strategy<Value = Expr> {
        prop_oneof![
            ".{0,10}".prop_map(Expr::Str),
            num().prop_map(Expr::Num),
            prop::array::uniform7(num()).prop_map(Expr::Pose),
            (0usize..8).prop_map(|k| Expr::Var(k.to_string())),
            json().prop_map(Expr::Json),
        ]
    }

    fn stmt() -> impl Strategy<Value = (bool, String, Vec<(String, Expr)>)> {
        (
            any::<bool>(),
            ident(),
            prop::collection::btree_map(ident(), expr(), 0..4).prop_map(|m| m.into_iter().collect()),
        )
    }

    pub fn program() -> impl Strategy<Value = Program> {
        prop::collection::vec(stmt(), 0..10).prop_map(|raw| {
            let mut bound: Vec<String> = Vec::new();
            let statements = raw
                .into_iter()
                .enumerate()
                .map(|(i, (binds, ability, args))| {
                    let args = args
                        .into_iter()
                        .map(|(n, e)| match e {
                            Expr::Var(k) if bound.is_empty() => (n, Expr::Num(k.parse().unwrap())),
                            Expr::Var(k) => {
                                let k: usize = k.parse().unwrap();
                                (n, Expr::Var(bound[k % bound.len()].clone()))
                            }
                            e => (n, e),
                        })
                        .collect();
                    let binding = binds.then(|| format!("v{i}"));
                    if let Some(b) = &binding {
                        bound.push(b.clone());
                    }
                    Stmt {
                        binding,
                        call: Call { ability, args },
                        line: 0,
                    }
                })
                .collect();
            Program { statements }
        })
    }
}

pub mod kin {
    use std::collections::BTreeMap;
    use std::f64::consts::PI;

    use autoasm::geom::{Pose, Vec3};
    use autoasm::twin::kinematics::{fk, ik, KinematicChain};
    use autoasm::twin::state::{resolve_frames, Attachment};
    use rand::Rng;
    use rand_chacha::ChaCha8Rng;

    pub fn random_pose<R: Rng>(rng: &mut R) -> Pose {
        let axis = Vec3::new(
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        );
        let axis = if axis.norm() < 1e-3 { Vec3::z() } else { axis };
        Pose::from_axis_angle(axis, rng.gen_range(-PI..PI)).translated(&Vec3::new(
            rng.gen_range(-2.0..2.0),
            rng.gen_range(-2.0..2.0),
            rng.gen_range(-2.0..2.0),
        ))
    }

    /// IK on `n` targets from fk of random in-limit joints, seeded at a
    /// fixed home: (successes, largest linear error, largest angular error).
    pub fn ik_round_trips(n: usize, rng: &mut ChaCha8Rng) -> (usize, f64, f64) {
        let c = KinematicChain::ur5e();
        let seed = [0.0, -PI / 2.0, PI / 2.0, -PI / 2.0, -PI / 2.0, 0.0];
        let (mut ok, mut lin, mut ang) = (0, 0.0f64, 0.0f64);
        for _ in 0..n {
            let q = c.random_q(rng);
            let target = fk(&c, &q).unwrap();
            if let Some(s) = ik(&c, &target, &seed, rng) {
                let (l, a) = fk(&c, &s).unwrap().distance_to(&target);
                if l < 1e-6 && a < 1e-6 && c.within_limits(&s) {
                    ok += 1;
                }
                lin = lin.max(l);
                ang = ang.max(a);
            }
        }
        (ok, lin, ang)
    }

    /// Largest composition-law residual over a random object tree of `n`
    /// nodes: world(child) = world(parent) * relative, and
    /// rel(a, c) = rel(a, b) * rel(b, c) for random triples.
    pub fn tree_law_error(n: usize, rng: &mut ChaCha8Rng) -> f64 {
        let roots = BTreeMap::from([("root".to_string(), random_pose(rng))]);
        let mut attachments = BTreeMap::new();
        let mut ids = vec!["root".to_string()];
        for i in 0..n {
            let parent = ids[rng.gen_range(0..ids.len())].clone();
            let id = format!("n{i}");
            attachments.insert(
                id.clone(),
                Attachment {
                    parent,
                    relative: random_pose(rng),
                },
            );
            ids.push(id);
        }
        let world = resolve_frames(&roots, &attachments).unwrap();
        let mut worst = 0.0f64;
        let mut bump = |a: &Pose, b: &Pose| {
            let (l, r) = a.distance_to(b);
            worst = worst.max(l).max(r);
        };
        for (id, att) in &attachments {
            bump(&world[id], &world[&att.parent].compose(&att.relative));
        }
        let rel = |a: &str, b: &str| world[a].inverse().compose(&world[b]);
        for _ in 0..n {
            let pick = |rng: &mut ChaCha8Rng| ids[rng.gen_range(0..ids.len())].clone();
            let (a, b, c) = (pick(rng), pick(rng), pick(rng));
            bump(&rel(&a, &b).compose(&rel(&b, &c)), &rel(&a, &c));
        }
        worst
    }
}
