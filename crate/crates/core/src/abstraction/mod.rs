//! Elastic node grouping for search trees.
//!
//! Nodes at the same depth whose acting unit matches are merged into
//! [`AbstractGroup`]s when their sampled rewards and transitions are close
//! (complete linkage against every member). A grouped node is scored in
//! selection by its group's averaged statistics. [`Abstraction::split`]
//! hands each member its group's averages and returns to the ground tree.

mod similarity;

use std::collections::HashMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use similarity::{
    reward_error, transition_error, EdgeSample, NextStateSignature, TransitionErrorMode,
};

pub type NodeId = usize;
pub type GroupId = usize;

/// Read access to the tree nodes the abstraction groups.
pub trait SampledTree {
    fn node_count(&self) -> usize;
    fn depth(&self, node: NodeId) -> u32;
    /// Position of the acting unit in the searching player's unit order.
    fn unit_slot(&self, node: NodeId) -> u32;
    /// Ground `(X, N)` of the node (the statistics of the edge leading into it).
    fn stats(&self, node: NodeId) -> (f64, f64);
    /// Appends the node's sampled edges, in any order.
    fn samples(&self, node: NodeId, out: &mut Vec<EdgeSample>);
}

pub trait SampledTreeMut: SampledTree {
    fn set_stats(&mut self, node: NodeId, x: f64, n: f64);
}

/// Similarity thresholds `eta_R`, `eta_T`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub eta_r: f64,
    pub eta_t: f64,
    #[serde(default)]
    pub mode: TransitionErrorMode,
}

impl Thresholds {
    pub fn new(eta_r: f64, eta_t: f64) -> Self {
        Thresholds {
            eta_r,
            eta_t,
            mode: TransitionErrorMode::Normalized,
        }
    }

    /// Thresholds no pair of nodes can satisfy.
    pub fn unsatisfiable() -> Self {
        Thresholds::new(-1.0, -1.0)
    }

    pub fn similar(&self, a: &[EdgeSample], b: &[EdgeSample]) -> bool {
        reward_error(a, b) <= self.eta_r && transition_error(a, b, self.mode) <= self.eta_t
    }
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds::new(0.1, 0.3)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AbstractGroup {
    pub id: GroupId,
    pub depth: u32,
    pub unit_slot: u32,
    pub members: Vec<NodeId>,
    pub sum_x: f64,
    pub sum_n: f64,
}

impl AbstractGroup {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// `(X̂, N̂)`: member averages.
    pub fn stats(&self) -> (f64, f64) {
        group_stats(self)
    }
}

pub fn group_stats(group: &AbstractGroup) -> (f64, f64) {
    let m = group.members.len() as f64;
    debug_assert!(m >= 1.0, "groups are never empty");
    (group.sum_x / m, group.sum_n / m)
}

/// Diagnostics for one `construct` pass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BatchReport {
    pub iteration: u64,
    pub nodes: usize,
    pub groups: usize,
    pub compression_rate: f64,
    pub construct_micros: u64,
    /// Nodes that joined an existing group in this pass.
    pub joined: usize,
    /// Nodes that founded a new group in this pass.
    pub founded: usize,
}

/// The node partition `phi`. Nodes without a group count as singletons.
#[derive(Debug, Clone, Default)]
pub struct Abstraction {
    node_group: Vec<Option<GroupId>>,
    groups: Vec<AbstractGroup>,
    by_layer: HashMap<(u32, u32), Vec<GroupId>>,
    abandoned: bool,
}

impl Abstraction {
    pub fn new() -> Self {
        Self::default()
    }

    /// True once [`Abstraction::split`] ran; no further grouping happens.
    pub fn is_abandoned(&self) -> bool {
        self.abandoned
    }

    pub fn groups(&self) -> &[AbstractGroup] {
        &self.groups
    }

    pub fn group_id(&self, node: NodeId) -> Option<GroupId> {
        self.node_group.get(node).copied().flatten()
    }

    pub fn group_of(&self, node: NodeId) -> Option<&AbstractGroup> {
        self.group_id(node).map(|g| &self.groups[g])
    }

    /// Statistics selection should use for `node`: its group's averages when
    /// grouped with others, else the ground values.
    pub fn effective_stats<T: SampledTree + ?Sized>(&self, tree: &T, node: NodeId) -> (f64, f64) {
        match self.group_of(node) {
            Some(g) if g.len() > 1 => g.stats(),
            _ => tree.stats(node),
        }
    }

    /// Mirrors a ground backup of `(reward, 1)` into the node's group.
    pub fn record_backup(&mut self, node: NodeId, reward: f64) {
        if let Some(g) = self.group_id(node) {
            let g = &mut self.groups[g];
            g.sum_x += reward;
            g.sum_n += 1.0;
        }
    }

    /// Number of abstract nodes covering a tree of `node_count` nodes.
    pub fn group_count(&self, node_count: usize) -> usize {
        let grouped: usize = self.groups.iter().map(AbstractGroup::len).sum();
        self.groups.len() + node_count.saturating_sub(grouped)
    }

    /// Tree nodes per abstract node; 1.0 for the identity partition.
    pub fn compression_rate(&self, node_count: usize) -> f64 {
        compression_rate(self, node_count)
    }

    /// Greedy complete-linkage grouping of every ungrouped node, deepest
    /// layer first and in creation order within a layer. Existing groups are
    /// kept; the root layer (depth 0) is never grouped.
    pub fn construct<T: SampledTree + ?Sized>(
        &mut self,
        tree: &T,
        thresholds: &Thresholds,
        iteration: u64,
    ) -> BatchReport {
        let start = Instant::now();
        let n = tree.node_count();
        let (mut joined, mut founded) = (0, 0);
        if !self.abandoned {
            self.node_group.resize(n, None);
            let mut pending: Vec<(u32, NodeId)> = (0..n)
                .filter(|&id| self.node_group[id].is_none())
                .map(|id| (tree.depth(id), id))
                .filter(|&(d, _)| d >= 1)
                .collect();
            pending.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));

            let mut cache: Vec<Option<Vec<EdgeSample>>> = vec![None; n];
            let fill = |cache: &mut Vec<Option<Vec<EdgeSample>>>, node: NodeId| {
                if cache[node].is_none() {
                    let mut v = Vec::new();
                    tree.samples(node, &mut v);
                    v.sort_by_key(|s| s.action);
                    cache[node] = Some(v);
                }
            };

            for (depth, node) in pending {
                let layer = (depth, tree.unit_slot(node));
                fill(&mut cache, node);
                let mut home = None;
                for &gid in self.by_layer.get(&layer).map_or(&[][..], Vec::as_slice) {
                    let members = &self.groups[gid].members;
                    for &m in members {
                        fill(&mut cache, m);
                    }
                    let mine = cache[node].as_deref().unwrap();
                    if members
                        .iter()
                        .all(|&m| thresholds.similar(mine, cache[m].as_deref().unwrap()))
                    {
                        home = Some(gid);
                        break;
                    }
                }
                let (x, nv) = tree.stats(node);
                match home {
                    Some(gid) => {
                        let g = &mut self.groups[gid];
                        g.members.push(node);
                        g.sum_x += x;
                        g.sum_n += nv;
                        self.node_group[node] = Some(gid);
                        joined += 1;
                    }
                    None => {
                        let gid = self.groups.len();
                        self.groups.push(AbstractGroup {
                            id: gid,
                            depth,
                            unit_slot: layer.1,
                            members: vec![node],
                            sum_x: x,
                            sum_n: nv,
                        });
                        self.by_layer.entry(layer).or_default().push(gid);
                        self.node_group[node] = Some(gid);
                        founded += 1;
                    }
                }
            }
        }
        BatchReport {
            iteration,
            nodes: n,
            groups: self.group_count(n),
            compression_rate: self.compression_rate(n),
            construct_micros: start.elapsed().as_micros() as u64,
            joined,
            founded,
        }
    }

    /// Abandons grouping: every member of a multi-node group takes the
    /// group's `(X̂, N̂)` as its ground statistics, and the partition becomes
    /// the identity for the rest of the search.
    pub fn split<T: SampledTreeMut + ?Sized>(&mut self, tree: &mut T) {
        for g in &self.groups {
            if g.len() > 1 {
                let (x, n) = g.stats();
                for &m in &g.members {
                    tree.set_stats(m, x, n);
                }
            }
        }
        self.groups.clear();
        self.node_group.clear();
        self.by_layer.clear();
        self.abandoned = true;
    }
}

/// `N_tree / N_abs_tree`.
pub fn compression_rate(abstraction: &Abstraction, node_count: usize) -> f64 {
    if node_count == 0 {
        return 1.0;
    }
    node_count as f64 / abstraction.group_count(node_count) as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::Pos;

    /// Minimal tree: nodes with depth, slot, stats and samples.
    #[derive(Default)]
    struct Toy {
        nodes: Vec<(u32, u32, f64, f64, Vec<EdgeSample>)>,
    }

    impl Toy {
        fn add(&mut self, depth: u32, samples: Vec<EdgeSample>, x: f64, n: f64) -> NodeId {
            self.nodes.push((depth, 0, x, n, samples));
            self.nodes.len() - 1
        }
    }

    impl SampledTree for Toy {
        fn node_count(&self) -> usize {
            self.nodes.len()
        }
        fn depth(&self, node: NodeId) -> u32 {
            self.nodes[node].0
        }
        fn unit_slot(&self, node: NodeId) -> u32 {
            self.nodes[node].1
        }
        fn stats(&self, node: NodeId) -> (f64, f64) {
            (self.nodes[node].2, self.nodes[node].3)
        }
        fn samples(&self, node: NodeId, out: &mut Vec<EdgeSample>) {
            out.extend_from_slice(&self.nodes[node].4);
        }
    }

    impl SampledTreeMut for Toy {
        fn set_stats(&mut self, node: NodeId, x: f64, n: f64) {
            self.nodes[node].2 = x;
            self.nodes[node].3 = n;
        }
    }

    fn s(action: u64, r: f64) -> EdgeSample {
        EdgeSample {
            action,
            mean_return: r,
            next: NextStateSignature {
                pos: Pos::new(action as i32, 0),
                health: 1,
                target: None,
            },
        }
    }

    fn siblings() -> Toy {
        let mut t = Toy::default();
        t.add(0, vec![s(1, 0.5), s(2, 0.5)], 10.0, 20.0);
        t.add(1, vec![s(7, 0.4)], 2.0, 10.0);
        t.add(1, vec![s(7, 0.4)], 4.0, 20.0);
        t
    }

    #[test]
    fn identical_siblings_form_one_group() {
        let t = siblings();
        let mut phi = Abstraction::new();
        let report = phi.construct(&t, &Thresholds::default(), 20);
        assert_eq!(phi.group_id(1), phi.group_id(2));
        assert!(phi.group_id(1).is_some());
        assert_eq!(phi.group_id(0), None);
        assert_eq!((report.joined, report.founded), (1, 1));
        assert_eq!(phi.group_of(1).unwrap().stats(), (3.0, 15.0));
        assert_eq!(report.groups, 2);
        assert!((report.compression_rate - 1.5).abs() < 1e-12);
    }

    #[test]
    fn unsatisfiable_thresholds_keep_identity() {
        let t = siblings();
        let mut phi = Abstraction::new();
        phi.construct(&t, &Thresholds::unsatisfiable(), 20);
        assert_eq!(phi.compression_rate(t.node_count()), 1.0);
        assert_eq!(phi.effective_stats(&t, 1), (2.0, 10.0));
    }

    #[test]
    fn backup_shifts_the_average() {
        let t = siblings();
        let mut phi = Abstraction::new();
        phi.construct(&t, &Thresholds::default(), 20);
        phi.record_backup(1, 0.8);
        let (x, n) = phi.group_of(2).unwrap().stats();
        assert!((x - (3.0 + 0.8 / 2.0)).abs() < 1e-12);
        assert!((n - 15.5).abs() < 1e-12);
    }

    #[test]
    fn split_assigns_group_averages_and_is_idempotent() {
        let mut t = siblings();
        let mut phi = Abstraction::new();
        phi.construct(&t, &Thresholds::default(), 20);
        phi.split(&mut t);
        assert_eq!(t.stats(1), (3.0, 15.0));
        assert_eq!(t.stats(2), (3.0, 15.0));
        assert_eq!(t.stats(0), (10.0, 20.0));
        assert_eq!(phi.compression_rate(3), 1.0);
        phi.split(&mut t);
        assert_eq!(t.stats(1), (3.0, 15.0));
        // Nothing groups after the split.
        phi.construct(&t, &Thresholds::default(), 40);
        assert_eq!(phi.compression_rate(3), 1.0);
    }

    #[test]
    fn split_of_identity_changes_nothing() {
        let mut t = siblings();
        let mut phi = Abstraction::new();
        phi.split(&mut t);
        assert_eq!(t.stats(1), (2.0, 10.0));
        assert_eq!(t.stats(2), (4.0, 20.0));
    }

    #[test]
    fn complete_linkage_rejects_partial_matches() {
        let mut t = Toy::default();
        t.add(0, vec![], 0.0, 1.0);
        t.add(1, vec![s(1, 0.00)], 0.0, 1.0);
        t.add(1, vec![s(1, 0.08)], 0.0, 1.0);
        // Within 0.1 of node 2 but 0.16 away from node 1.
        t.add(1, vec![s(1, 0.16)], 0.0, 1.0);
        let mut phi = Abstraction::new();
        phi.construct(&t, &Thresholds::default(), 1);
        assert_eq!(phi.group_id(1), phi.group_id(2));
        assert_ne!(phi.group_id(3), phi.group_id(1));
    }

    #[test]
    fn groups_persist_and_absorb_new_nodes() {
        let mut t = siblings();
        let mut phi = Abstraction::new();
        phi.construct(&t, &Thresholds::default(), 20);
        let g = phi.group_id(1);
        t.add(1, vec![s(7, 0.45)], 1.0, 1.0);
        let report = phi.construct(&t, &Thresholds::default(), 40);
        assert_eq!(report.joined, 1);
        assert_eq!(phi.group_id(3), g);
        assert_eq!(phi.group_of(3).unwrap().sum_n, 31.0);
    }

    #[test]
    fn deeper_layers_are_processed_first() {
        let mut t = Toy::default();
        t.add(0, vec![], 0.0, 1.0);
        t.add(1, vec![], 0.0, 1.0);
        t.add(2, vec![], 0.0, 1.0);
        let mut phi = Abstraction::new();
        phi.construct(&t, &Thresholds::default(), 1);
        assert_eq!(phi.group_id(2), Some(0));
        assert_eq!(phi.group_id(1), Some(1));
    }
}
