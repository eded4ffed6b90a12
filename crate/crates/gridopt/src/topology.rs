//! Reduced-graph construction and admissible-configuration enumeration.
//!
//! The full network is coarsened into a reduced graph: HV buses become HV
//! nodes, maximal groups of MV buses connected by permanently conducting
//! branches become single MV nodes, and each virtual breaker becomes one
//! edge. A configuration assigns open/closed to every edge; it is admissible
//! when each MV node is fed by exactly one HV node through exactly one path.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{BusKind, NetworkModel};

#[derive(Debug, Error)]
pub enum TopologyError {
    #[error("bit vector has length {got}, graph has {expected} edges")]
    LengthMismatch { got: usize, expected: usize },
    #[error("graph has {edges} edges, above the enumeration cap {cap}; raise the cap to proceed")]
    CapExceeded { edges: usize, cap: usize },
    #[error("virtual breaker {0:?} not present in the reduced graph")]
    UnknownEdge(String),
    #[error("configuration list is empty")]
    EmptyList,
}

/// Open/closed pattern over the reduced edges. Renders as a `01` string,
/// leftmost character = first edge; `1` means closed.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Bits(pub Vec<bool>);

impl Bits {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn closed(&self, i: usize) -> bool {
        self.0[i]
    }
}

impl fmt::Display for Bits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for Bits {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(format!("invalid bit character {:?}", other)),
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Bits)
    }
}

impl Serialize for Bits {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Bits {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Number of positions where two equal-length patterns differ.
pub fn hamming(a: &Bits, b: &Bits) -> Result<usize, TopologyError> {
    if a.len() != b.len() {
        return Err(TopologyError::LengthMismatch {
            got: b.len(),
            expected: a.len(),
        });
    }
    Ok(a.0.iter().zip(&b.0).filter(|(x, y)| x != y).count())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReducedNode {
    pub id: String,
    pub kind: BusKind,
    /// Buses of the full network merged into this node.
    pub members: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReducedEdge {
    /// Virtual breaker id.
    pub id: String,
    /// Indices into the node list.
    pub endpoints: (usize, usize),
    /// The two physical switches operated together.
    pub switches: (String, String),
    /// Branch of the full network this breaker sits on.
    pub branch: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReducedGraph {
    pub nodes: Vec<ReducedNode>,
    pub edges: Vec<ReducedEdge>,
}

impl ReducedGraph {
    pub fn node_of_bus(&self, bus: &str) -> Option<usize> {
        self.nodes
            .iter()
            .position(|n| n.members.iter().any(|m| m == bus))
    }

    pub fn hv_node_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.kind == BusKind::Hv).count()
    }
}

/// One admissible open/closed pattern, tagged with its position in the list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Configuration {
    pub index: usize,
    pub bits: Bits,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ListOrdering {
    Lexicographic,
    HammingChain,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfigurationList {
    pub configurations: Vec<Configuration>,
    pub ordering: ListOrdering,
}

impl ConfigurationList {
    pub fn len(&self) -> usize {
        self.configurations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.configurations.is_empty()
    }

    /// Lookup by 1-based index.
    pub fn get(&self, n_conf: usize) -> Option<&Configuration> {
        self.configurations.get(n_conf.checked_sub(1)?)
    }
}

/// Coarsen the network graph. Edge order follows the `virtual_breakers`
/// registry order of the source file, which fixes the meaning of every bit
/// position downstream.
pub fn reduce_graph(model: &NetworkModel) -> ReducedGraph {
    let bus_index: BTreeMap<&str, usize> = model
        .buses
        .iter()
        .enumerate()
        .map(|(i, b)| (b.id.as_str(), i))
        .collect();

    // Union MV buses across permanently conducting branches.
    let mut parent: Vec<usize> = (0..model.buses.len()).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for br in &model.branches {
        if br.breaker.is_some() {
            continue;
        }
        let a = bus_index[br.from.as_str()];
        let b = bus_index[br.to.as_str()];
        if model.buses[a].kind == BusKind::Mv && model.buses[b].kind == BusKind::Mv {
            let ra = find(&mut parent, a);
            let rb = find(&mut parent, b);
            if ra != rb {
                parent[ra] = rb;
            }
        }
    }

    let mut nodes: Vec<ReducedNode> = Vec::new();
    let mut node_of_bus: Vec<usize> = vec![usize::MAX; model.buses.len()];
    for (i, bus) in model.buses.iter().enumerate() {
        if bus.kind == BusKind::Hv {
            node_of_bus[i] = nodes.len();
            nodes.push(ReducedNode {
                id: bus.id.clone(),
                kind: BusKind::Hv,
                members: vec![bus.id.clone()],
            });
        }
    }
    let mut group_node: BTreeMap<usize, usize> = BTreeMap::new();
    for (i, bus) in model.buses.iter().enumerate() {
        if bus.kind == BusKind::Mv {
            let root = find(&mut parent, i);
            let node = *group_node.entry(root).or_insert_with(|| {
                nodes.push(ReducedNode {
                    id: format!("mv_group_{}", nodes.len()),
                    kind: BusKind::Mv,
                    members: Vec::new(),
                });
                nodes.len() - 1
            });
            node_of_bus[i] = node;
            nodes[node].members.push(bus.id.clone());
        }
    }

    let mut edges = Vec::new();
    for vb in &model.virtual_breakers {
        let branch = model
            .branches
            .iter()
            .find(|b| b.breaker.as_deref() == Some(vb.id.as_str()))
            .expect("validated model: every breaker is attached to a branch");
        let a = node_of_bus[bus_index[branch.from.as_str()]];
        let b = node_of_bus[bus_index[branch.to.as_str()]];
        edges.push(ReducedEdge {
            id: vb.id.clone(),
            endpoints: (a, b),
            switches: vb.switches.clone(),
            branch: branch.id.clone(),
        });
    }

    ReducedGraph { nodes, edges }
}

/// Radial topology test: in the closed-edge subgraph every MV node must be
/// connected to exactly one HV node, each fed component must be a tree, and
/// no two HV nodes may be connected.
pub fn is_radial(g: &ReducedGraph, bits: &Bits) -> Result<bool, TopologyError> {
    if bits.len() != g.edges.len() {
        return Err(TopologyError::LengthMismatch {
            got: bits.len(),
            expected: g.edges.len(),
        });
    }
    let n = g.nodes.len();
    let mut adjacency = vec![Vec::new(); n];
    let mut closed_edges = 0usize;
    for (i, edge) in g.edges.iter().enumerate() {
        if bits.closed(i) {
            closed_edges += 1;
            adjacency[edge.endpoints.0].push(edge.endpoints.1);
            adjacency[edge.endpoints.1].push(edge.endpoints.0);
        }
    }
    let _ = closed_edges;

    let mut component = vec![usize::MAX; n];
    let mut comp_count = 0usize;
    for start in 0..n {
        if component[start] != usize::MAX {
            continue;
        }
        let id = comp_count;
        comp_count += 1;
        component[start] = id;
        let mut stack = vec![start];
        while let Some(v) = stack.pop() {
            for &w in &adjacency[v] {
                if component[w] == usize::MAX {
                    component[w] = id;
                    stack.push(w);
                }
            }
        }
    }

    let mut hv_in = vec![0usize; comp_count];
    let mut mv_in = vec![0usize; comp_count];
    let mut edges_in = vec![0usize; comp_count];
    let mut nodes_in = vec![0usize; comp_count];
    for (v, node) in g.nodes.iter().enumerate() {
        nodes_in[component[v]] += 1;
        match node.kind {
            BusKind::Hv => hv_in[component[v]] += 1,
            BusKind::Mv => mv_in[component[v]] += 1,
        }
    }
    for (i, edge) in g.edges.iter().enumerate() {
        if bits.closed(i) {
            edges_in[component[edge.endpoints.0]] += 1;
        }
    }

    for c in 0..comp_count {
        if hv_in[c] > 1 {
            return Ok(false); // path between two HV substations
        }
        if mv_in[c] > 0 && hv_in[c] != 1 {
            return Ok(false); // unfed MV node
        }
        if hv_in[c] == 1 && edges_in[c] != nodes_in[c] - 1 {
            return Ok(false); // cycle inside a fed component
        }
    }
    Ok(true)
}

pub const DEFAULT_ENUMERATION_CAP: usize = 24;

/// Enumerate every admissible configuration, in lexicographic bit order.
///
/// Works by depth-first assignment of edge states with a union-find over the
/// partial forest: closing an edge inside one component (a cycle) or between
/// two components that both hold an HV node is pruned immediately, so only
/// HV-rooted forests are ever grown to completion.
pub fn enumerate_admissible(g: &ReducedGraph) -> Result<ConfigurationList, TopologyError> {
    enumerate_admissible_with_cap(g, DEFAULT_ENUMERATION_CAP)
}

pub fn enumerate_admissible_with_cap(
    g: &ReducedGraph,
    cap: usize,
) -> Result<ConfigurationList, TopologyError> {
    if g.edges.len() > cap {
        return Err(TopologyError::CapExceeded {
            edges: g.edges.len(),
            cap,
        });
    }

    #[derive(Clone)]
    struct Forest {
        parent: Vec<usize>,
        has_hv: Vec<bool>,
    }

    impl Forest {
        fn find(&mut self, mut i: usize) -> usize {
            while self.parent[i] != i {
                self.parent[i] = self.parent[self.parent[i]];
                i = self.parent[i];
            }
            i
        }

        /// Returns false when closing the edge can never lead to a radial
        /// configuration (cycle, or joining two fed trees).
        fn try_close(&mut self, a: usize, b: usize) -> bool {
            let ra = self.find(a);
            let rb = self.find(b);
            if ra == rb {
                return false;
            }
            if self.has_hv[ra] && self.has_hv[rb] {
                return false;
            }
            self.parent[ra] = rb;
            self.has_hv[rb] = self.has_hv[rb] || self.has_hv[ra];
            true
        }
    }

    fn descend(
        g: &ReducedGraph,
        depth: usize,
        bits: &mut Vec<bool>,
        forest: Forest,
        out: &mut Vec<Bits>,
    ) {
        if depth == g.edges.len() {
            let mut forest = forest;
            for (v, node) in g.nodes.iter().enumerate() {
                if node.kind == BusKind::Mv {
                    let root = forest.find(v);
                    if !forest.has_hv[root] {
                        return;
                    }
                }
            }
            out.push(Bits(bits.clone()));
            return;
        }
        // Open first so the output comes out in lexicographic order.
        bits.push(false);
        descend(g, depth + 1, bits, forest.clone(), out);
        bits.pop();

        let mut closed = forest;
        let (a, b) = g.edges[depth].endpoints;
        if closed.try_close(a, b) {
            bits.push(true);
            descend(g, depth + 1, bits, closed, out);
            bits.pop();
        }
    }

    let forest = Forest {
        parent: (0..g.nodes.len()).collect(),
        has_hv: g.nodes.iter().map(|n| n.kind == BusKind::Hv).collect(),
    };
    let mut found = Vec::new();
    descend(g, 0, &mut Vec::new(), forest, &mut found);

    Ok(ConfigurationList {
        configurations: found
            .into_iter()
            .enumerate()
            .map(|(i, bits)| Configuration { index: i + 1, bits })
            .collect(),
        ordering: ListOrdering::Lexicographic,
    })
}

/// Reorder a configuration list into a greedy nearest-neighbour chain under
/// the Hamming distance, so that adjacent indices differ in few breakers.
/// Starts from the lexicographically smallest pattern; ties go to the
/// lexicographically smaller candidate. Indices are reassigned 1..n.
pub fn order_by_hamming(list: &ConfigurationList) -> Result<ConfigurationList, TopologyError> {
    if list.is_empty() {
        return Err(TopologyError::EmptyList);
    }
    let mut remaining: Vec<&Bits> = list.configurations.iter().map(|c| &c.bits).collect();
    remaining.sort();
    let mut chain: Vec<Bits> = vec![remaining.remove(0).clone()];
    while !remaining.is_empty() {
        let last = chain.last().unwrap();
        let mut best = 0usize;
        let mut best_dist = usize::MAX;
        for (i, cand) in remaining.iter().enumerate() {
            let d = hamming(last, cand).expect("same-length patterns");
            if d < best_dist || (d == best_dist && *cand < remaining[best]) {
                best = i;
                best_dist = d;
            }
        }
        chain.push(remaining.remove(best).clone());
    }
    Ok(ConfigurationList {
        configurations: chain
            .into_iter()
            .enumerate()
            .map(|(i, bits)| Configuration { index: i + 1, bits })
            .collect(),
        ordering: ListOrdering::HammingChain,
    })
}

/// Physical switch states implied by a configuration: both switches of a
/// closed edge close, both switches of an open edge open.
pub fn apply_configuration(
    g: &ReducedGraph,
    conf: &Configuration,
) -> Result<BTreeMap<String, bool>, TopologyError> {
    if conf.bits.len() != g.edges.len() {
        return Err(TopologyError::LengthMismatch {
            got: conf.bits.len(),
            expected: g.edges.len(),
        });
    }
    let mut states = BTreeMap::new();
    for (i, edge) in g.edges.iter().enumerate() {
        let closed = conf.bits.closed(i);
        states.insert(edge.switches.0.clone(), closed);
        states.insert(edge.switches.1.clone(), closed);
    }
    Ok(states)
}

/// Branch ids that conduct under a configuration: unswitched branches always
/// do, switched branches only when their edge is closed.
pub fn conducting_branches(
    model: &NetworkModel,
    g: &ReducedGraph,
    conf: &Configuration,
) -> Result<Vec<String>, TopologyError> {
    if conf.bits.len() != g.edges.len() {
        return Err(TopologyError::LengthMismatch {
            got: conf.bits.len(),
            expected: g.edges.len(),
        });
    }
    let closed_breaker: BTreeMap<&str, bool> = g
        .edges
        .iter()
        .enumerate()
        .map(|(i, e)| (e.id.as_str(), conf.bits.closed(i)))
        .collect();
    Ok(model
        .branches
        .iter()
        .filter(|br| match &br.breaker {
            None => true,
            Some(vb) => *closed_breaker.get(vb.as_str()).unwrap_or(&false),
        })
        .map(|br| br.id.clone())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Branch, Bus, NetworkModel, VirtualBreaker};

    fn bus(id: &str, kind: BusKind) -> Bus {
        Bus {
            id: id.into(),
            kind,
            nominal_kv: 8.4,
            vmin_frac: 0.9,
            vmax_frac: 1.1,
        }
    }

    fn branch(id: &str, from: &str, to: &str, breaker: Option<&str>) -> Branch {
        Branch {
            id: id.into(),
            from: from.into(),
            to: to.into(),
            r_ohm: 0.5,
            x_ohm: 0.4,
            imax_a: 300.0,
            breaker: breaker.map(|s| s.into()),
        }
    }

    fn vb(id: &str) -> VirtualBreaker {
        VirtualBreaker {
            id: id.into(),
            switches: (format!("{id}_a"), format!("{id}_b")),
        }
    }

    /// HV1 - a - b - c - HV2 with a breaker on every link.
    fn chain_model() -> NetworkModel {
        let model = NetworkModel {
            buses: vec![
                bus("hv1", BusKind::Hv),
                bus("a", BusKind::Mv),
                bus("b", BusKind::Mv),
                bus("c", BusKind::Mv),
                bus("hv2", BusKind::Hv),
            ],
            branches: vec![
                branch("l1", "hv1", "a", Some("e1")),
                branch("l2", "a", "b", Some("e2")),
                branch("l3", "b", "c", Some("e3")),
                branch("l4", "c", "hv2", Some("e4")),
            ],
            generators: vec![],
            loads: vec![],
            tvr: None,
            virtual_breakers: vec![vb("e1"), vb("e2"), vb("e3"), vb("e4")],
        };
        model.validate().unwrap();
        model
    }

    #[test]
    fn full_merge_when_no_switches() {
        let model = NetworkModel {
            buses: vec![
                bus("hv1", BusKind::Hv),
                bus("a", BusKind::Mv),
                bus("b", BusKind::Mv),
            ],
            branches: vec![
                branch("l1", "hv1", "a", None),
                branch("l2", "a", "b", None),
            ],
            generators: vec![],
            loads: vec![],
            tvr: None,
            virtual_breakers: vec![],
        };
        model.validate().unwrap();
        let g = reduce_graph(&model);
        assert_eq!(g.nodes.len(), 2);
        assert_eq!(g.edges.len(), 0);
        assert_eq!(g.hv_node_count(), 1);
    }

    #[test]
    fn chain_reduces_without_merging() {
        let g = reduce_graph(&chain_model());
        assert_eq!(g.nodes.len(), 5);
        assert_eq!(g.edges.len(), 4);
    }

    #[test]
    fn radiality_on_the_chain() {
        let g = reduce_graph(&chain_model());
        // Both substations feeding is a loop between them.
        assert!(!is_radial(&g, &"1111".parse().unwrap()).unwrap());
        assert!(is_radial(&g, &"0111".parse().unwrap()).unwrap());
        // Everything open leaves the MV nodes unfed.
        assert!(!is_radial(&g, &"0000".parse().unwrap()).unwrap());
        assert!(matches!(
            is_radial(&g, &"01".parse().unwrap()),
            Err(TopologyError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn chain_has_four_admissible_configurations() {
        let g = reduce_graph(&chain_model());
        let list = enumerate_admissible(&g).unwrap();
        assert_eq!(list.len(), 4);
        let rendered: Vec<String> = list
            .configurations
            .iter()
            .map(|c| c.bits.to_string())
            .collect();
        assert_eq!(rendered, ["0111", "1011", "1101", "1110"]);
    }

    #[test]
    fn enumeration_matches_brute_force_on_chain() {
        let g = reduce_graph(&chain_model());
        let list = enumerate_admissible(&g).unwrap();
        let mut expected = Vec::new();
        for mask in 0u32..16 {
            let bits = Bits((0..4).map(|i| mask >> i & 1 == 1).collect());
            if is_radial(&g, &bits).unwrap() {
                expected.push(bits);
            }
        }
        expected.sort();
        let got: Vec<Bits> = list.configurations.into_iter().map(|c| c.bits).collect();
        assert_eq!(got, expected);
    }

    #[test]
    fn single_edge_single_feed() {
        let model = NetworkModel {
            buses: vec![bus("hv1", BusKind::Hv), bus("a", BusKind::Mv)],
            branches: vec![branch("l1", "hv1", "a", Some("e1"))],
            generators: vec![],
            loads: vec![],
            tvr: None,
            virtual_breakers: vec![vb("e1")],
        };
        model.validate().unwrap();
        let g = reduce_graph(&model);
        let list = enumerate_admissible(&g).unwrap();
        assert_eq!(list.len(), 1);
        assert_eq!(list.configurations[0].bits.to_string(), "1");
    }

    #[test]
    fn cap_errors_out() {
        let g = reduce_graph(&chain_model());
        assert!(matches!(
            enumerate_admissible_with_cap(&g, 3),
            Err(TopologyError::CapExceeded { edges: 4, cap: 3 })
        ));
    }

    #[test]
    fn hamming_counts_differing_positions() {
        let a: Bits = "0101".parse().unwrap();
        assert_eq!(hamming(&a, &"0101".parse().unwrap()).unwrap(), 0);
        assert_eq!(hamming(&a, &"0110".parse().unwrap()).unwrap(), 2);
        assert!(hamming(&a, &"01".parse().unwrap()).is_err());
    }

    #[test]
    fn ordering_chains_neighbours() {
        let list = ConfigurationList {
            configurations: ["1100", "1010", "1001"]
                .iter()
                .enumerate()
                .map(|(i, s)| Configuration {
                    index: i + 1,
                    bits: s.parse().unwrap(),
                })
                .collect(),
            ordering: ListOrdering::Lexicographic,
        };
        let ordered = order_by_hamming(&list).unwrap();
        let rendered: Vec<String> = ordered
            .configurations
            .iter()
            .map(|c| c.bits.to_string())
            .collect();
        assert_eq!(rendered, ["1001", "1010", "1100"]);
        for pair in ordered.configurations.windows(2) {
            assert_eq!(hamming(&pair[0].bits, &pair[1].bits).unwrap(), 2);
        }
        assert_eq!(
            ordered
                .configurations
                .iter()
                .map(|c| c.index)
                .collect::<Vec<_>>(),
            vec![1, 2, 3]
        );
    }

    #[test]
    fn ordering_single_configuration_unchanged() {
        let list = ConfigurationList {
            configurations: vec![Configuration {
                index: 1,
                bits: "101".parse().unwrap(),
            }],
            ordering: ListOrdering::Lexicographic,
        };
        let ordered = order_by_hamming(&list).unwrap();
        assert_eq!(ordered.configurations, list.configurations);
    }

    #[test]
    fn apply_configuration_drives_switch_pairs() {
        let g = reduce_graph(&chain_model());
        let conf = Configuration {
            index: 1,
            bits: "1011".parse().unwrap(),
        };
        let states = apply_configuration(&g, &conf).unwrap();
        assert_eq!(states.len(), 8);
        assert!(states["e1_a"]);
        assert!(states["e1_b"]);
        assert!(!states["e2_a"]);
        assert!(!states["e2_b"]);
        assert!(states["e3_a"]);
        assert!(states["e4_b"]);
    }

    #[test]
    fn conducting_branches_follow_breaker_states() {
        let model = chain_model();
        let g = reduce_graph(&model);
        let conf = Configuration {
            index: 1,
            bits: "0111".parse().unwrap(),
        };
        let ids = conducting_branches(&model, &g, &conf).unwrap();
        assert_eq!(ids, ["l2", "l3", "l4"]);
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn bits_pair(len: usize) -> impl Strategy<Value = (Bits, Bits)> {
            (
                proptest::collection::vec(any::<bool>(), len),
                proptest::collection::vec(any::<bool>(), len),
            )
                .prop_map(|(a, b)| (Bits(a), Bits(b)))
        }

        proptest! {
            #[test]
            fn hamming_equals_xor_popcount((a, b) in (1usize..24).prop_flat_map(bits_pair)) {
                let expected = a.0.iter().zip(&b.0).filter(|(x, y)| *x != *y).count();
                let xor_count = a
                    .0
                    .iter()
                    .zip(&b.0)
                    .map(|(x, y)| (*x as u64) ^ (*y as u64))
                    .sum::<u64>() as usize;
                prop_assert_eq!(hamming(&a, &b).unwrap(), expected);
                prop_assert_eq!(expected, xor_count);
            }

            #[test]
            fn hamming_is_a_metric(
                (a, b) in (1usize..16).prop_flat_map(bits_pair),
                c_raw in proptest::collection::vec(any::<bool>(), 16),
            ) {
                let c = Bits(c_raw[..a.len()].to_vec());
                let dab = hamming(&a, &b).unwrap();
                let dba = hamming(&b, &a).unwrap();
                let dac = hamming(&a, &c).unwrap();
                let dcb = hamming(&c, &b).unwrap();
                prop_assert_eq!(hamming(&a, &a).unwrap(), 0);
                prop_assert_eq!(dab, dba);
                prop_assert!(dab <= dac + dcb);
                prop_assert_eq!(dab == 0, a == b);
            }

            #[test]
            fn ordering_is_a_deterministic_permutation(
                raw in proptest::collection::hash_set(
                    proptest::collection::vec(any::<bool>(), 6),
                    1..20,
                )
            ) {
                let list = ConfigurationList {
                    configurations: raw
                        .into_iter()
                        .enumerate()
                        .map(|(i, bits)| Configuration { index: i + 1, bits: Bits(bits) })
                        .collect(),
                    ordering: ListOrdering::Lexicographic,
                };
                let once = order_by_hamming(&list).unwrap();
                let twice = order_by_hamming(&list).unwrap();
                prop_assert_eq!(&once, &twice);
                let mut before: Vec<Bits> =
                    list.configurations.iter().map(|c| c.bits.clone()).collect();
                let mut after: Vec<Bits> =
                    once.configurations.iter().map(|c| c.bits.clone()).collect();
                before.sort();
                after.sort();
                prop_assert_eq!(before, after);
                let indices: Vec<usize> = once.configurations.iter().map(|c| c.index).collect();
                prop_assert_eq!(indices, (1..=list.len()).collect::<Vec<_>>());
            }
        }
    }
}
