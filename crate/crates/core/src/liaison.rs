//! Part-connectivity graph built from the joint register.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::design::JointRegister;

/// Undirected graph: parts are nodes, each part pair joined by at least one
/// declared joint is an edge carrying those joint ids.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LiaisonGraph {
    pub nodes: BTreeSet<String>,
    /// Keyed by `(min, max)` part id.
    pub edges: BTreeMap<(String, String), Vec<String>>,
}

fn pair(a: &str, b: &str) -> (String, String) {
    if a <= b {
        (a.to_string(), b.to_string())
    } else {
        (b.to_string(), a.to_string())
    }
}

impl LiaisonGraph {
    pub fn joints_between(&self, a: &str, b: &str) -> Option<&Vec<String>> {
        self.edges.get(&pair(a, b))
    }

    pub fn neighbours<'a>(&'a self, n: &'a str) -> impl Iterator<Item = &'a str> + 'a {
        self.edges.keys().filter_map(move |(a, b)| {
            if a == n {
                Some(b.as_str())
            } else if b == n {
                Some(a.as_str())
            } else {
                None
            }
        })
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn to_adjacency(&self) -> AdjacencyDump {
        AdjacencyDump {
            nodes: self.nodes.iter().cloned().collect(),
            edges: self
                .edges
                .iter()
                .map(|((a, b), j)| AdjacencyEdge {
                    a: a.clone(),
                    b: b.clone(),
                    joints: j.clone(),
                })
                .collect(),
        }
    }
}

/// JSON adjacency-list form of the graph.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdjacencyDump {
    pub nodes: Vec<String>,
    pub edges: Vec<AdjacencyEdge>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdjacencyEdge {
    pub a: String,
    pub b: String,
    pub joints: Vec<String>,
}

pub fn build_liaison_graph(r: &JointRegister, parts: &BTreeSet<String>) -> LiaisonGraph {
    let mut edges: BTreeMap<(String, String), Vec<String>> = BTreeMap::new();
    for (jid, e) in &r.entries {
        debug_assert!(parts.contains(&e.part_a) && parts.contains(&e.part_b));
        if e.part_a == e.part_b {
            continue;
        }
        edges.entry(pair(&e.part_a, &e.part_b)).or_default().push(jid.clone());
    }
    LiaisonGraph {
        nodes: parts.clone(),
        edges,
    }
}

pub fn connected_components(g: &LiaisonGraph) -> Vec<BTreeSet<String>> {
    let mut seen: BTreeSet<&str> = BTreeSet::new();
    let mut out = Vec::new();
    for start in &g.nodes {
        if seen.contains(start.as_str()) {
            continue;
        }
        let mut comp = BTreeSet::new();
        let mut stack = vec![start.as_str()];
        while let Some(n) = stack.pop() {
            if !seen.insert(n) {
                continue;
            }
            comp.insert(n.to_string());
            stack.extend(g.neighbours(n).filter(|m| !seen.contains(m)));
        }
        out.push(comp);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::build_joint_register;
    use crate::fixtures;

    fn graph_of(d: &crate::design::DesignDoc) -> LiaisonGraph {
        build_liaison_graph(&build_joint_register(d), &d.part_ids())
    }

    #[test]
    fn triplet_graph() {
        let g = graph_of(&fixtures::triplet_design());
        assert_eq!(g.nodes.len(), 3);
        assert_eq!(g.edge_count(), 2);
        assert_eq!(g.joints_between("A", "B").unwrap().len(), 2);
        assert_eq!(g.joints_between("C", "B").unwrap().len(), 2);
        assert!(g.joints_between("A", "C").is_none());
        assert_eq!(connected_components(&g).len(), 1);
    }

    #[test]
    fn single_part_no_edges() {
        let g = build_liaison_graph(&JointRegister::default(), &BTreeSet::from(["A".to_string()]));
        assert_eq!(g.nodes.len(), 1);
        assert_eq!(g.edge_count(), 0);
        assert_eq!(connected_components(&g).len(), 1);
    }

    #[test]
    fn chain4_edges_and_split() {
        let mut g = graph_of(&fixtures::chain4_design());
        assert_eq!(g.edge_count(), 3);
        g.edges.remove(&pair("B", "C"));
        let comps = connected_components(&g);
        assert_eq!(comps.len(), 2);
        assert_eq!(comps[0], BTreeSet::from(["A".to_string(), "B".to_string()]));
        assert_eq!(comps[1], BTreeSet::from(["C".to_string(), "D".to_string()]));
    }

    #[test]
    fn isolated_parts() {
        let parts = BTreeSet::from(["X".to_string(), "Y".to_string()]);
        let g = build_liaison_graph(&JointRegister::default(), &parts);
        assert_eq!(connected_components(&g).len(), 2);
    }

    #[test]
    fn joint_counts_sum_to_register_size() {
        let d = fixtures::triplet_design();
        let r = build_joint_register(&d);
        let g = graph_of(&d);
        let total: usize = g.edges.values().map(Vec::len).sum();
        assert_eq!(total, r.len());
        assert!(g.edges.keys().all(|(a, b)| a < b));
        let dump = serde_json::to_value(g.to_adjacency()).unwrap();
        assert_eq!(dump["edges"].as_array().unwrap().len(), 2);
    }
}
