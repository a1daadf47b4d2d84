//! Merge-tree enumeration and contiguous-block linearization.
//!
//! Parts are indexed in sorted-id order and subassemblies are bitmasks.
//! Within a join, the first child is the larger one (ties: the one holding the
//! smallest part index). Splits of a set are ordered by the sorted index list
//! of their first child, which fixes a canonical order for trees and, through
//! child permutation, for sequences.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::rc::Rc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::liaison::{connected_components, LiaisonGraph};
use crate::par::{self, Exec};

pub const DEFAULT_CAP: usize = 10_000;
/// Split enumeration walks every subset of a set; past this size that is
/// no longer tractable.
pub const MAX_PARTS: usize = 24;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SequencerError {
    #[error("liaison graph is disconnected ({components} components)")]
    DisconnectedGraph { components: usize },
    #[error("design has {parts} parts; sequencing supports at most {MAX_PARTS}")]
    TooManyParts { parts: usize },
    #[error("design has no parts")]
    Empty,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MergeTree {
    Leaf(String),
    Join {
        subassembly_id: String,
        joint_ids: Vec<String>,
        children: Box<[MergeTree; 2]>,
    },
}

impl MergeTree {
    /// Part id for a leaf, subassembly id for a join.
    pub fn id(&self) -> &str {
        match self {
            MergeTree::Leaf(p) => p,
            MergeTree::Join { subassembly_id, .. } => subassembly_id,
        }
    }

    pub fn leaves(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves(&self, out: &mut BTreeSet<String>) {
        match self {
            MergeTree::Leaf(p) => {
                out.insert(p.clone());
            }
            MergeTree::Join { children, .. } => {
                children[0].collect_leaves(out);
                children[1].collect_leaves(out);
            }
        }
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self, MergeTree::Leaf(_))
    }

    pub fn join_count(&self) -> usize {
        match self {
            MergeTree::Leaf(_) => 0,
            MergeTree::Join { children, .. } => 1 + children[0].join_count() + children[1].join_count(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OpKind {
    Unload,
    Place,
    Fasten,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeqOp {
    pub op_id: String,
    pub kind: OpKind,
    pub subject: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub joint_ids: Option<Vec<String>>,
}

impl SeqOp {
    fn unload(p: &str) -> Self {
        SeqOp {
            op_id: format!("unload_{p}"),
            kind: OpKind::Unload,
            subject: p.into(),
            joint_ids: None,
        }
    }

    fn place(p: &str) -> Self {
        SeqOp {
            op_id: format!("place_{p}"),
            kind: OpKind::Place,
            subject: p.into(),
            joint_ids: None,
        }
    }

    fn fasten(sub: &str, joints: &[String]) -> Self {
        SeqOp {
            op_id: format!("fasten_{sub}"),
            kind: OpKind::Fasten,
            subject: sub.into(),
            joint_ids: Some(joints.to_vec()),
        }
    }
}

/// `tree` keeps its children in this sequence's linear order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssemblySequence {
    pub sequence_id: String,
    pub label: String,
    pub ops: Vec<SeqOp>,
    pub tree: MergeTree,
}

impl AssemblySequence {
    pub fn op_index(&self, op_id: &str) -> Option<usize> {
        self.ops.iter().position(|o| o.op_id == op_id)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeSet {
    pub trees: Vec<MergeTree>,
    pub truncated: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SequenceSet {
    pub sequences: Vec<AssemblySequence>,
    pub truncated: bool,
}

/// One join as it happens in a sequence: `fixed` is the block built first,
/// `moving` the block brought to it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MergeStep {
    pub op_index: usize,
    pub op_id: String,
    pub subassembly_id: String,
    pub fixed: BTreeSet<String>,
    pub moving: BTreeSet<String>,
    pub joint_ids: Vec<String>,
}

enum Node {
    Leaf(usize),
    Join(u64, Rc<Node>, Rc<Node>),
}

struct Enumerator<'a> {
    ids: Vec<&'a str>,
    adj: Vec<u64>,
    cap: usize,
    memo: HashMap<u64, Rc<Vec<Rc<Node>>>>,
}

fn bits(mask: u64) -> Vec<usize> {
    (0..64).filter(|i| mask & (1u64 << i) != 0).collect()
}

impl<'a> Enumerator<'a> {
    fn new(g: &'a LiaisonGraph, cap: usize) -> Self {
        let ids: Vec<&str> = g.nodes.iter().map(String::as_str).collect();
        let index: HashMap<&str, usize> = ids.iter().enumerate().map(|(i, s)| (*s, i)).collect();
        let mut adj = vec![0u64; ids.len()];
        for (a, b) in g.edges.keys() {
            let (i, j) = (index[a.as_str()], index[b.as_str()]);
            adj[i] |= 1 << j;
            adj[j] |= 1 << i;
        }
        Enumerator {
            ids,
            adj,
            cap,
            memo: HashMap::new(),
        }
    }

    fn connected(&self, mask: u64) -> bool {
        let start = mask & mask.wrapping_neg();
        let mut seen = start;
        let mut frontier = start;
        while frontier != 0 {
            let i = frontier.trailing_zeros() as usize;
            frontier &= frontier - 1;
            let new = self.adj[i] & mask & !seen;
            seen |= new;
            frontier |= new;
        }
        seen == mask
    }

    fn touches(&self, a: u64, b: u64) -> bool {
        bits(a).into_iter().any(|i| self.adj[i] & b != 0)
    }

    /// First children of all valid splits of `set`, in canonical order.
    fn splits(&self, set: u64) -> Vec<u64> {
        let low = set & set.wrapping_neg();
        let size = set.count_ones();
        let mut out = Vec::new();
        let mut sub = (set - 1) & set;
        while sub != 0 {
            let rest = set & !sub;
            let s = sub.count_ones();
            let first = 2 * s > size || (2 * s == size && sub & low != 0);
            if first && self.connected(sub) && self.connected(rest) && self.touches(sub, rest) {
                out.push(sub);
            }
            sub = (sub - 1) & set;
        }
        out.sort_by_key(|m| bits(*m));
        out
    }

    fn trees(&mut self, set: u64) -> Rc<Vec<Rc<Node>>> {
        if let Some(t) = self.memo.get(&set) {
            return t.clone();
        }
        let mut out = Vec::new();
        if set.count_ones() == 1 {
            out.push(Rc::new(Node::Leaf(set.trailing_zeros() as usize)));
        } else {
            'outer: for s1 in self.splits(set) {
                let left = self.trees(s1);
                let right = self.trees(set & !s1);
                for a in left.iter() {
                    for b in right.iter() {
                        if out.len() >= self.cap {
                            break 'outer;
                        }
                        out.push(Rc::new(Node::Join(set, a.clone(), b.clone())));
                    }
                }
            }
        }
        let out = Rc::new(out);
        self.memo.insert(set, out.clone());
        out
    }
}

/// D..Z, then A..C, then AA, AB, ... .
fn name_candidates() -> impl Iterator<Item = String> {
    let singles = ('D'..='Z').chain('A'..='C').map(String::from);
    let multi = (2u32..).flat_map(|len| {
        (0..26u64.pow(len)).map(move |mut k| {
            let mut s = vec![b'A'; len as usize];
            for c in s.iter_mut().rev() {
                *c = b'A' + (k % 26) as u8;
                k /= 26;
            }
            String::from_utf8(s).unwrap()
        })
    });
    singles.chain(multi)
}

fn mask_of(ids: &[&str], set: &BTreeSet<String>) -> u64 {
    ids.iter()
        .enumerate()
        .filter(|(_, id)| set.contains(**id))
        .fold(0, |m, (i, _)| m | (1 << i))
}

fn cut_joints(g: &LiaisonGraph, a: &BTreeSet<String>, b: &BTreeSet<String>) -> Vec<String> {
    let mut out: Vec<String> = g
        .edges
        .iter()
        .filter(|((x, y), _)| (a.contains(x) && b.contains(y)) || (a.contains(y) && b.contains(x)))
        .flat_map(|(_, j)| j.iter().cloned())
        .collect();
    out.sort();
    out
}

fn check_graph(g: &LiaisonGraph) -> Result<(), SequencerError> {
    if g.nodes.is_empty() {
        return Err(SequencerError::Empty);
    }
    if g.nodes.len() > MAX_PARTS {
        return Err(SequencerError::TooManyParts { parts: g.nodes.len() });
    }
    let components = connected_components(g).len();
    if components != 1 {
        return Err(SequencerError::DisconnectedGraph { components });
    }
    Ok(())
}

pub fn enumerate_merge_trees(g: &LiaisonGraph, cap: usize) -> Result<TreeSet, SequencerError> {
    check_graph(g)?;
    let mut en = Enumerator::new(g, cap.saturating_add(1));
    let full = if en.ids.len() == 64 {
        u64::MAX
    } else {
        (1u64 << en.ids.len()) - 1
    };
    let nodes = en.trees(full);
    let truncated = nodes.len() > cap;
    let nodes = &nodes[..nodes.len().min(cap)];

    // Names go to distinct non-root part sets in preorder over all trees.
    let taken: BTreeSet<&str> = en.ids.iter().copied().collect();
    let mut names = name_candidates().filter(|n| !taken.contains(n.as_str()));
    let mut named: HashMap<u64, String> = HashMap::new();
    fn visit(n: &Node, root: bool, named: &mut HashMap<u64, String>, names: &mut dyn Iterator<Item = String>) {
        if let Node::Join(m, a, b) = n {
            if !root && !named.contains_key(m) {
                named.insert(*m, names.next().unwrap());
            }
            visit(a, false, named, names);
            visit(b, false, named, names);
        }
    }
    for n in nodes {
        visit(n, true, &mut named, &mut names);
    }
    if full.count_ones() > 1 {
        named.insert(full, names.next().unwrap());
    }

    let ids = en.ids.clone();
    fn build(n: &Node, ids: &[&str], named: &HashMap<u64, String>, g: &LiaisonGraph) -> MergeTree {
        match n {
            Node::Leaf(i) => MergeTree::Leaf(ids[*i].to_string()),
            Node::Join(m, a, b) => {
                let (ta, tb) = (build(a, ids, named, g), build(b, ids, named, g));
                MergeTree::Join {
                    subassembly_id: named[m].clone(),
                    joint_ids: cut_joints(g, &ta.leaves(), &tb.leaves()),
                    children: Box::new([ta, tb]),
                }
            }
        }
    }
    let trees = nodes.iter().map(|n| build(n, &ids, &named, g)).collect();
    Ok(TreeSet { trees, truncated })
}

fn linearize_capped(t: &MergeTree, cap: usize) -> Vec<(Vec<SeqOp>, MergeTree)> {
    match t {
        MergeTree::Leaf(p) => vec![(vec![SeqOp::unload(p), SeqOp::place(p)], t.clone())],
        MergeTree::Join {
            subassembly_id,
            joint_ids,
            children,
        } => {
            let lins = [linearize_capped(&children[0], cap), linearize_capped(&children[1], cap)];
            let mut out = Vec::new();
            for (f, s) in [(0, 1), (1, 0)] {
                for (fo, ft) in &lins[f] {
                    for (so, st) in &lins[s] {
                        if out.len() >= cap {
                            return out;
                        }
                        let mut ops = Vec::with_capacity(fo.len() + so.len() + 1);
                        ops.extend_from_slice(fo);
                        ops.extend_from_slice(so);
                        ops.push(SeqOp::fasten(subassembly_id, joint_ids));
                        let tree = MergeTree::Join {
                            subassembly_id: subassembly_id.clone(),
                            joint_ids: joint_ids.clone(),
                            children: Box::new([ft.clone(), st.clone()]),
                        };
                        out.push((ops, tree));
                    }
                }
            }
            out
        }
    }
}

fn assemble(ops: Vec<SeqOp>, tree: MergeTree, n: usize) -> AssemblySequence {
    let mut s = AssemblySequence {
        sequence_id: format!("S{n:04}"),
        label: String::new(),
        ops,
        tree,
    };
    s.label = sequence_label(&s);
    s
}

/// All contiguous-block linearizations of `t`, canonical child order first.
pub fn linearize_tree(t: &MergeTree) -> Vec<AssemblySequence> {
    linearize_capped(t, usize::MAX)
        .into_iter()
        .enumerate()
        .map(|(i, (ops, tree))| assemble(ops, tree, i + 1))
        .collect()
}

pub fn enumerate_sequences(g: &LiaisonGraph, cap: usize) -> Result<SequenceSet, SequencerError> {
    enumerate_sequences_with(g, cap, Exec::default())
}

pub fn enumerate_sequences_with(g: &LiaisonGraph, cap: usize, exec: Exec) -> Result<SequenceSet, SequencerError> {
    let trees = enumerate_merge_trees(g, cap)?;
    let per_tree = par::map(exec, &trees.trees, |t| linearize_capped(t, cap.saturating_add(1)));
    let mut seen = BTreeSet::new();
    let mut sequences = Vec::new();
    let mut truncated = trees.truncated;
    for (ops, tree) in per_tree.into_iter().flatten() {
        let key: Vec<String> = ops.iter().map(|o| o.op_id.clone()).collect();
        if !seen.insert(key) {
            continue;
        }
        if sequences.len() == cap {
            truncated = true;
            break;
        }
        let n = sequences.len() + 1;
        sequences.push(assemble(ops, tree, n));
    }
    Ok(SequenceSet { sequences, truncated })
}

/// Place subjects and non-root Fasten subjects, concatenated.
pub fn sequence_label(s: &AssemblySequence) -> String {
    let root = s.tree.id();
    s.ops
        .iter()
        .filter(|o| match o.kind {
            OpKind::Place => true,
            OpKind::Fasten => o.subject != root,
            OpKind::Unload => false,
        })
        .map(|o| o.subject.as_str())
        .collect()
}

fn last_op(t: &MergeTree, s: &AssemblySequence) -> usize {
    match t {
        MergeTree::Leaf(p) => s.op_index(&format!("place_{p}")).expect("place op"),
        MergeTree::Join { subassembly_id, .. } => s.op_index(&format!("fasten_{subassembly_id}")).expect("fasten op"),
    }
}

/// Predecessor op indices for every op. Unloads gate their Place; a join's
/// Fasten waits for both blocks; a single part joined to a block is placed
/// only once that block is complete.
pub fn precedence(s: &AssemblySequence) -> Vec<Vec<usize>> {
    let mut preds = vec![Vec::new(); s.ops.len()];
    for (i, op) in s.ops.iter().enumerate() {
        if op.kind == OpKind::Place {
            if let Some(u) = s.op_index(&format!("unload_{}", op.subject)) {
                preds[i].push(u);
            }
        }
    }
    fn walk(t: &MergeTree, s: &AssemblySequence, preds: &mut [Vec<usize>]) {
        if let MergeTree::Join { children, .. } = t {
            let (x, y) = (&children[0], &children[1]);
            let f = last_op(t, s);
            let (lx, ly) = (last_op(x, s), last_op(y, s));
            preds[f].push(lx);
            preds[f].push(ly);
            if y.is_leaf() {
                preds[ly].push(lx);
            }
            walk(x, s, preds);
            walk(y, s, preds);
        }
    }
    walk(&s.tree, s, &mut preds);
    for p in &mut preds {
        p.sort_unstable();
        p.dedup();
    }
    preds
}

/// Longest-path depth of each op in the precedence DAG.
pub fn levels(s: &AssemblySequence) -> Vec<usize> {
    let preds = precedence(s);
    let mut level = vec![0usize; s.ops.len()];
    // Preds always precede in linear order, so one forward pass suffices.
    for i in 0..s.ops.len() {
        level[i] = preds[i].iter().map(|&p| level[p] + 1).max().unwrap_or(0);
    }
    level
}

/// Joins in op order, with the earlier-built block as `fixed`.
pub fn merges(s: &AssemblySequence) -> Vec<MergeStep> {
    let mut out = Vec::new();
    fn walk(t: &MergeTree, s: &AssemblySequence, out: &mut Vec<MergeStep>) {
        if let MergeTree::Join {
            subassembly_id,
            joint_ids,
            children,
        } = t
        {
            walk(&children[0], s, out);
            walk(&children[1], s, out);
            let op_index = last_op(t, s);
            out.push(MergeStep {
                op_index,
                op_id: s.ops[op_index].op_id.clone(),
                subassembly_id: subassembly_id.clone(),
                fixed: children[0].leaves(),
                moving: children[1].leaves(),
                joint_ids: joint_ids.clone(),
            });
        }
    }
    walk(&s.tree, s, &mut out);
    out.sort_by_key(|m| m.op_index);
    out
}

/// Checks the structural invariants of a sequence against its graph.
pub fn check_sequence(s: &AssemblySequence, g: &LiaisonGraph) -> Result<(), String> {
    let leaves = s.tree.leaves();
    if leaves != g.nodes {
        return Err("tree leaves differ from graph nodes".into());
    }
    let mut placed = BTreeMap::new();
    let mut unloaded = BTreeSet::new();
    for (i, o) in s.ops.iter().enumerate() {
        match o.kind {
            OpKind::Unload => {
                unloaded.insert(o.subject.clone());
                if o.joint_ids.is_some() {
                    return Err(format!("{} carries joint ids", o.op_id));
                }
            }
            OpKind::Place => {
                if !unloaded.contains(&o.subject) {
                    return Err(format!("{} before its unload", o.op_id));
                }
                if placed.insert(o.subject.clone(), i).is_some() {
                    return Err(format!("{} placed twice", o.subject));
                }
            }
            OpKind::Fasten => {}
        }
    }
    if placed.len() != leaves.len() {
        return Err("not every part placed exactly once".into());
    }
    let fastens = s.ops.iter().filter(|o| o.kind == OpKind::Fasten).count();
    if fastens != s.tree.join_count() {
        return Err("fasten count differs from join count".into());
    }
    for m in merges(s) {
        if cut_joints(g, &m.fixed, &m.moving).is_empty() {
            return Err(format!("{} joins unconnected blocks", m.op_id));
        }
        let block: BTreeSet<&String> = m.fixed.iter().chain(&m.moving).collect();
        let start = m.op_index + 1 - (2 * block.len() + block.len() - 1);
        for o in &s.ops[start..m.op_index] {
            let inside = match o.kind {
                OpKind::Fasten => true,
                _ => block.contains(&o.subject),
            };
            if !inside {
                return Err(format!("{} block is not contiguous", m.op_id));
            }
        }
    }
    let preds = precedence(s);
    if preds.iter().enumerate().any(|(i, p)| p.iter().any(|&j| j >= i)) {
        return Err("precedence is not forward".into());
    }
    Ok(())
}

/// Part bitmask over the sorted node list, exposed for oracles.
pub fn part_mask(g: &LiaisonGraph, set: &BTreeSet<String>) -> u64 {
    let ids: Vec<&str> = g.nodes.iter().map(String::as_str).collect();
    mask_of(&ids, set)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::build_joint_register;
    use crate::fixtures;
    use crate::liaison::build_liaison_graph;

    fn graph(d: &crate::design::DesignDoc) -> LiaisonGraph {
        build_liaison_graph(&build_joint_register(d), &d.part_ids())
    }

    fn labels(set: &SequenceSet) -> Vec<String> {
        set.sequences.iter().map(|s| s.label.clone()).collect()
    }

    #[test]
    fn triplet_trees() {
        let g = graph(&fixtures::triplet_design());
        let t = enumerate_merge_trees(&g, DEFAULT_CAP).unwrap();
        assert_eq!(t.trees.len(), 2);
        assert!(!t.truncated);
        let MergeTree::Join {
            subassembly_id,
            children,
            ..
        } = &t.trees[0]
        else {
            panic!()
        };
        assert_eq!(subassembly_id, "F");
        assert_eq!(children[0].id(), "D");
        assert_eq!(children[1].id(), "C");
        assert_eq!(t.trees[1].id(), "F");
        let MergeTree::Join { children, .. } = &t.trees[1] else {
            panic!()
        };
        assert_eq!(children[0].id(), "E");
        assert_eq!(children[0].leaves().len(), 2);
    }

    #[test]
    fn triplet_linearizations_match_paper_order() {
        let g = graph(&fixtures::triplet_design());
        let t = enumerate_merge_trees(&g, DEFAULT_CAP).unwrap();
        let l: Vec<_> = linearize_tree(&t.trees[0]).into_iter().map(|s| s.label).collect();
        assert_eq!(l, ["ABDC", "BADC", "CABD", "CBAD"]);
        let r: Vec<_> = linearize_tree(&t.trees[1]).into_iter().map(|s| s.label).collect();
        assert_eq!(r, ["BCEA", "CBEA", "ABCE", "ACBE"]);
    }

    #[test]
    fn triplet_eight_sequences() {
        let g = graph(&fixtures::triplet_design());
        let s = enumerate_sequences(&g, DEFAULT_CAP).unwrap();
        assert_eq!(
            labels(&s),
            ["ABDC", "BADC", "CABD", "CBAD", "BCEA", "CBEA", "ABCE", "ACBE"]
        );
        for q in &s.sequences {
            check_sequence(q, &g).unwrap();
        }
        let abdc = &s.sequences[0];
        assert_eq!(abdc.sequence_id, "S0001");
        let ids: Vec<_> = abdc.ops.iter().map(|o| o.op_id.as_str()).collect();
        assert_eq!(
            ids,
            ["unload_A", "place_A", "unload_B", "place_B", "fasten_D", "unload_C", "place_C", "fasten_F"]
        );
        assert_eq!(abdc.ops[4].joint_ids.as_deref().unwrap(), ["J1", "J2"]);
        assert_eq!(abdc.ops[7].joint_ids.as_deref().unwrap(), ["J3", "J4"]);
    }

    #[test]
    fn single_part() {
        let g = build_liaison_graph(&Default::default(), &BTreeSet::from(["P".to_string()]));
        let t = enumerate_merge_trees(&g, DEFAULT_CAP).unwrap();
        assert_eq!(t.trees, vec![MergeTree::Leaf("P".into())]);
        let s = enumerate_sequences(&g, DEFAULT_CAP).unwrap();
        assert_eq!(s.sequences.len(), 1);
        assert_eq!(s.sequences[0].label, "P");
        assert_eq!(s.sequences[0].ops.len(), 2);
    }

    #[test]
    fn chain4_five_trees() {
        let g = graph(&fixtures::chain4_design());
        let t = enumerate_merge_trees(&g, DEFAULT_CAP).unwrap();
        assert_eq!(t.trees.len(), 5);
        let s = enumerate_sequences(&g, DEFAULT_CAP).unwrap();
        assert_eq!(s.sequences.len(), 5 * 8);
        for q in &s.sequences {
            check_sequence(q, &g).unwrap();
        }
    }

    #[test]
    fn disconnected_rejected() {
        let g = build_liaison_graph(&Default::default(), &BTreeSet::from(["X".to_string(), "Y".to_string()]));
        assert_eq!(
            enumerate_sequences(&g, DEFAULT_CAP).unwrap_err(),
            SequencerError::DisconnectedGraph { components: 2 }
        );
    }

    #[test]
    fn cap_truncates() {
        let g = graph(&fixtures::triplet_design());
        let s = enumerate_sequences(&g, 3).unwrap();
        assert_eq!(labels(&s), ["ABDC", "BADC", "CABD"]);
        assert!(s.truncated);
        let s = enumerate_sequences(&g, 8).unwrap();
        assert!(!s.truncated);
    }

    #[test]
    fn levels_of_abdc() {
        let g = graph(&fixtures::triplet_design());
        let s = enumerate_sequences(&g, DEFAULT_CAP).unwrap();
        assert_eq!(levels(&s.sequences[0]), [0, 1, 0, 2, 3, 0, 4, 5]);
        let m = merges(&s.sequences[0]);
        assert_eq!(m.len(), 2);
        assert_eq!(m[0].fixed, BTreeSet::from(["A".to_string()]));
        assert_eq!(m[1].moving, BTreeSet::from(["C".to_string()]));
    }

    #[test]
    fn parallel_and_sequential_agree() {
        let g = graph(&fixtures::chain4_design());
        let a = enumerate_sequences_with(&g, DEFAULT_CAP, Exec::Sequential).unwrap();
        let b = enumerate_sequences_with(&g, DEFAULT_CAP, Exec::Parallel).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn names_skip_part_ids() {
        let n: Vec<String> = name_candidates().skip(22).take(6).collect();
        assert_eq!(n, ["Z", "A", "B", "C", "AA", "AB"]);
    }

    #[test]
    fn sequences_round_trip_json() {
        let g = graph(&fixtures::triplet_design());
        let s = enumerate_sequences(&g, DEFAULT_CAP).unwrap();
        let j = serde_json::to_string(&s.sequences).unwrap();
        let back: Vec<AssemblySequence> = serde_json::from_str(&j).unwrap();
        assert_eq!(back, s.sequences);
    }
}
