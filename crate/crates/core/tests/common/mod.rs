//! Shared fixtures: a hand-built sampled tree with an independent error oracle,
//! and small-board state enumeration for the engine suites.
#![allow(dead_code)]

use std::collections::BTreeSet;
use std::sync::Arc;

use elastic_mcts::abstraction::{
    Abstraction, EdgeSample, NextStateSignature, NodeId, SampledTree, SampledTreeMut, Thresholds,
};
use elastic_mcts::engine::{GameConfig, GameState, Grid, Pos, Unit, UnitKind};
use rand::Rng;

pub mod engine_checks;
pub mod fuzz;

#[derive(Debug, Clone)]
pub struct ToyNode {
    pub parent: Option<NodeId>,
    pub depth: u32,
    pub slot: u32,
    pub action: u64,
    pub sig: NextStateSignature,
    pub x: f64,
    pub n: f64,
    pub children: Vec<NodeId>,
}

/// Tree with hand-chosen statistics. Node ids are creation order.
#[derive(Debug, Clone)]
pub struct ToyTree {
    pub nodes: Vec<ToyNode>,
}

fn sig(k: u8) -> NextStateSignature {
    NextStateSignature {
        pos: Pos::new(i32::from(k % 3), i32::from(k / 3)),
        health: 100,
        target: (k % 2 == 1).then_some((7, 40)),
    }
}

impl ToyTree {
    pub fn new() -> Self {
        ToyTree {
            nodes: vec![ToyNode {
                parent: None,
                depth: 0,
                slot: 0,
                action: 0,
                sig: sig(0),
                x: 0.0,
                n: 0.0,
                children: Vec::new(),
            }],
        }
    }

    /// Adds a child of a random node below `max_depth`. Actions come from a
    /// small alphabet and signatures from a small pool so that coincidences
    /// (and thus groupings) are common. Returns `None` if no slot was free.
    pub fn grow<R: Rng>(&mut self, rng: &mut R, max_depth: u32) -> Option<NodeId> {
        let parents: Vec<NodeId> = (0..self.nodes.len())
            .filter(|&i| self.nodes[i].depth < max_depth && self.nodes[i].children.len() < 5)
            .collect();
        if parents.is_empty() {
            return None;
        }
        let parent = parents[rng.random_range(0..parents.len())];
        let used: BTreeSet<u64> = self.nodes[parent]
            .children
            .iter()
            .map(|&c| self.nodes[c].action)
            .collect();
        let free: Vec<u64> = (0..6).filter(|a| !used.contains(a)).collect();
        let action = free[rng.random_range(0..free.len())];
        let depth = self.nodes[parent].depth + 1;
        let n = rng.random_range(1..5) as f64;
        // Means on a 0.04 grid keep reward errors away from the 0.1 threshold.
        let mean = 0.04 * rng.random_range(0..6) as f64;
        let id = self.nodes.len();
        self.nodes.push(ToyNode {
            parent: Some(parent),
            depth,
            slot: rng.random_range(0..2),
            action,
            sig: sig(rng.random_range(0..3)),
            x: mean * n,
            n,
            children: Vec::new(),
        });
        self.nodes[parent].children.push(id);
        Some(id)
    }

    pub fn random<R: Rng>(rng: &mut R, size: usize) -> Self {
        let mut t = ToyTree::new();
        while t.nodes.len() < size {
            if t.grow(rng, 4).is_none() {
                break;
            }
        }
        t
    }

    /// Adds `(reward, 1)` to `node` and its ancestors, mirrored into `phi`.
    pub fn backprop(&mut self, phi: &mut Abstraction, node: NodeId, reward: f64) {
        let mut v = Some(node);
        while let Some(id) = v {
            self.nodes[id].x += reward;
            self.nodes[id].n += 1.0;
            phi.record_backup(id, reward);
            v = self.nodes[id].parent;
        }
    }
}

impl SampledTree for ToyTree {
    fn node_count(&self) -> usize {
        self.nodes.len()
    }

    fn depth(&self, node: NodeId) -> u32 {
        self.nodes[node].depth
    }

    fn unit_slot(&self, node: NodeId) -> u32 {
        self.nodes[node].slot
    }

    fn stats(&self, node: NodeId) -> (f64, f64) {
        (self.nodes[node].x, self.nodes[node].n)
    }

    fn samples(&self, node: NodeId, out: &mut Vec<EdgeSample>) {
        // Reverse creation order on purpose: callers must not rely on ordering.
        for &c in self.nodes[node].children.iter().rev() {
            let ch = &self.nodes[c];
            out.push(EdgeSample {
                action: ch.action,
                mean_return: if ch.n > 0.0 { ch.x / ch.n } else { 0.0 },
                next: ch.sig,
            });
        }
    }
}

impl SampledTreeMut for ToyTree {
    fn set_stats(&mut self, node: NodeId, x: f64, n: f64) {
        self.nodes[node].x = x;
        self.nodes[node].n = n;
    }
}

/// Reward and transition errors of two nodes, straight from the definitions:
/// `max_a |R1(a) - R2(a)|` with missing actions scoring 0, and the summed
/// per-action total variation (0 or 2) divided by the number of actions in the union.
pub fn oracle_errors(t: &ToyTree, a: NodeId, b: NodeId) -> (f64, f64) {
    let edge = |node: NodeId, action: u64| {
        t.nodes[node]
            .children
            .iter()
            .map(|&c| &t.nodes[c])
            .find(|c| c.action == action)
            .map(|c| (if c.n > 0.0 { c.x / c.n } else { 0.0 }, c.sig))
    };
    let union: BTreeSet<u64> = t.nodes[a]
        .children
        .iter()
        .chain(&t.nodes[b].children)
        .map(|&c| t.nodes[c].action)
        .collect();
    let mut er: f64 = 0.0;
    let mut tv = 0.0;
    for &act in &union {
        let (ea, eb) = (edge(a, act), edge(b, act));
        let ra = ea.map_or(0.0, |e| e.0);
        let rb = eb.map_or(0.0, |e| e.0);
        er = er.max((ra - rb).abs());
        tv += match (ea, eb) {
            (Some(x), Some(y)) if x.1 == y.1 => 0.0,
            _ => 2.0,
        };
    }
    let et = if union.is_empty() {
        0.0
    } else {
        tv / union.len() as f64
    };
    (er, et)
}

pub fn oracle_similar(t: &ToyTree, a: NodeId, b: NodeId, th: &Thresholds) -> bool {
    let (er, et) = oracle_errors(t, a, b);
    er <= th.eta_r && et <= th.eta_t
}

/// Greedy complete-linkage grouping: every non-root node not yet in `groups`
/// is placed deepest layer first, creation order within a layer, into the
/// first (oldest) compatible group of its layer or a new one. Groups keep
/// creation order and members keep join order.
pub fn oracle_extend(
    t: &ToyTree,
    th: &Thresholds,
    mut groups: Vec<Vec<NodeId>>,
) -> Vec<Vec<NodeId>> {
    let placed: BTreeSet<NodeId> = groups.iter().flatten().copied().collect();
    let mut order: Vec<NodeId> = (1..t.nodes.len()).filter(|n| !placed.contains(n)).collect();
    order.sort_by(|&a, &b| t.nodes[b].depth.cmp(&t.nodes[a].depth).then(a.cmp(&b)));
    for node in order {
        let layer = (t.nodes[node].depth, t.nodes[node].slot);
        let home = groups.iter_mut().find(|g| {
            let head = g[0];
            (t.nodes[head].depth, t.nodes[head].slot) == layer
                && g.iter().all(|&m| oracle_similar(t, node, m, th))
        });
        match home {
            Some(g) => g.push(node),
            None => groups.push(vec![node]),
        }
    }
    groups
}

pub fn groups_of(phi: &Abstraction) -> Vec<Vec<NodeId>> {
    phi.groups().iter().map(|g| g.members.clone()).collect()
}

// ---------------------------------------------------------------- engine

pub fn unit(id: u32, owner: u8, kind: UnitKind, pos: Pos, health: i32) -> Unit {
    Unit {
        id,
        owner,
        kind,
        pos,
        health,
    }
}

/// Small boards used by the exhaustive engine suites.
pub fn small_boards() -> Vec<Arc<Grid>> {
    vec![
        Arc::new(Grid::open(3, 3)),
        Arc::new(Grid::from_rows(&["....", ".@..", "..@.", "...."]).unwrap()),
        Arc::new(Grid::from_rows(&[".....", ".@.@.", ".....", ".@@..", "....."]).unwrap()),
    ]
}

/// Every placement of `kinds` (player-tagged) on the board's floor cells,
/// unit ids in list order, each unit at the given health fraction.
pub fn placements(
    grid: &Arc<Grid>,
    config: &Arc<GameConfig>,
    kinds: &[(u8, UnitKind)],
    health_pct: i32,
) -> Vec<GameState> {
    fn arrangements(floor: &[Pos], k: usize, chosen: &mut Vec<Pos>, out: &mut Vec<Vec<Pos>>) {
        if chosen.len() == k {
            out.push(chosen.clone());
            return;
        }
        for &p in floor {
            if !chosen.contains(&p) {
                chosen.push(p);
                arrangements(floor, k, chosen, out);
                chosen.pop();
            }
        }
    }
    let floor: Vec<Pos> = grid.floor_cells().collect();
    let mut spots = Vec::new();
    arrangements(&floor, kinds.len(), &mut Vec::new(), &mut spots);
    spots
        .into_iter()
        .map(|cells| {
            let units = kinds
                .iter()
                .zip(cells)
                .enumerate()
                .map(|(id, (&(owner, kind), pos))| {
                    let max = config.spec(kind).max_health;
                    unit(id as u32, owner, kind, pos, (max * health_pct / 100).max(1))
                })
                .collect();
            GameState::new(grid.clone(), config.clone(), units).unwrap()
        })
        .collect()
}
