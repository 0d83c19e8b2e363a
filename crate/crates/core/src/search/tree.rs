use rand::Rng;

use crate::abstraction::{
    Abstraction, EdgeSample, NextStateSignature, NodeId, SampledTree, SampledTreeMut,
};
use crate::engine::{ForwardModel, GameState, Player, UnitAction, UnitId};

use super::eval::ucb1;
use super::order::UnitOrder;

/// How nodes branch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branching {
    /// One unit per layer, taken from the fixed unit order (MCTS_u).
    UnitOrdered,
    /// Every unacted unit's actions at every node (plain MCTS).
    AllUnits,
}

#[derive(Debug, Clone)]
pub(crate) struct Node {
    pub parent: Option<NodeId>,
    pub depth: u32,
    pub slot: u32,
    /// Action on the edge into this node and its index in the parent's legal list.
    pub action: Option<UnitAction>,
    pub action_index: u32,
    pub signature: Option<NextStateSignature>,
    pub state: GameState,
    pub terminal: bool,
    pub x: f64,
    pub n: f64,
    pub children: Vec<NodeId>,
    legal: Option<Vec<UnitAction>>,
    untried: Vec<u32>,
}

impl Node {
    fn new(state: GameState, parent: Option<NodeId>, depth: u32, slot: u32) -> Self {
        let terminal = state.outcome().is_terminal();
        Node {
            parent,
            depth,
            slot,
            action: None,
            action_index: 0,
            signature: None,
            state,
            terminal,
            x: 0.0,
            n: 0.0,
            children: Vec::new(),
            legal: None,
            untried: Vec::new(),
        }
    }

    pub fn mean(&self) -> f64 {
        if self.n > 0.0 {
            self.x / self.n
        } else {
            0.0
        }
    }
}

/// Per-search mutable context: forward model, random stream, evaluator and scratch space.
pub(crate) struct Ctx<'a, R: Rng + ?Sized> {
    pub fm: &'a mut ForwardModel,
    pub rng: &'a mut R,
    pub eval: &'a dyn Fn(&GameState, Player) -> f64,
    pub budget: u64,
    pub c: f64,
    pub rollout_len: u32,
    pub scratch: Vec<UnitAction>,
}

impl<R: Rng + ?Sized> Ctx<'_, R> {
    fn exhausted(&self) -> bool {
        self.fm.calls() >= self.budget
    }

    /// One uniform-random action for the first unacted unit of the side to move.
    fn random_step(&mut self, state: &mut GameState) {
        let unit = state
            .first_unacted()
            .expect("side to move has an unacted unit");
        self.scratch.clear();
        state
            .legal_actions_into(unit, &mut self.scratch)
            .expect("unacted unit of the side to move");
        let a = self.scratch[self.rng.random_range(0..self.scratch.len())];
        self.fm.step_trusted(state, &a);
    }
}

/// Search tree rooted at a state where `me` is to move.
#[derive(Debug, Clone)]
pub struct SearchTree {
    pub(crate) nodes: Vec<Node>,
    me: Player,
    order: UnitOrder,
    branching: Branching,
}

impl SearchTree {
    pub fn new(root: GameState, order: UnitOrder, branching: Branching) -> Self {
        let me = root.active_player();
        let slot = order.next_actor(&root).map_or(0, |(s, _)| s);
        let slot = if branching == Branching::AllUnits {
            0
        } else {
            slot
        };
        SearchTree {
            nodes: vec![Node::new(root, None, 0, slot)],
            me,
            order,
            branching,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn player(&self) -> Player {
        self.me
    }

    pub fn root_state(&self) -> &GameState {
        &self.nodes[0].state
    }

    pub fn children(&self, node: NodeId) -> &[NodeId] {
        &self.nodes[node].children
    }

    pub fn action(&self, node: NodeId) -> Option<UnitAction> {
        self.nodes[node].action
    }

    pub fn action_index(&self, node: NodeId) -> u32 {
        self.nodes[node].action_index
    }

    pub fn parent(&self, node: NodeId) -> Option<NodeId> {
        self.nodes[node].parent
    }

    /// Acting unit of the next decision at `state`, if `me` is to move.
    fn actor(&self, state: &GameState) -> Option<(u32, UnitId)> {
        if state.active_player() != self.me || state.outcome().is_terminal() {
            return None;
        }
        self.order.next_actor(state)
    }

    /// Legal actions at a node, computed on first use.
    pub(crate) fn ensure_legal(&mut self, node: NodeId) -> &[UnitAction] {
        if self.nodes[node].legal.is_none() {
            let state = &self.nodes[node].state;
            let mut legal = Vec::new();
            if !self.nodes[node].terminal {
                match self.branching {
                    Branching::UnitOrdered => {
                        let (_, unit) = self.actor(state).expect("non-terminal node on our turn");
                        state
                            .legal_actions_into(unit, &mut legal)
                            .expect("actor can act");
                    }
                    Branching::AllUnits => {
                        let units: Vec<UnitId> = state.unacted_units().map(|u| u.id).collect();
                        for u in units {
                            state
                                .legal_actions_into(u, &mut legal)
                                .expect("unacted unit");
                        }
                    }
                }
            }
            let n = &mut self.nodes[node];
            n.untried = (0..legal.len() as u32).rev().collect();
            n.legal = Some(legal);
        }
        self.nodes[node].legal.as_deref().unwrap()
    }

    pub fn legal_actions(&mut self, node: NodeId) -> Vec<UnitAction> {
        self.ensure_legal(node).to_vec()
    }

    /// Adds the child reached by the untried action at position `pick` of the untried list.
    fn expand<R: Rng + ?Sized>(
        &mut self,
        node: NodeId,
        pick: usize,
        ctx: &mut Ctx<'_, R>,
    ) -> NodeId {
        let index = self.nodes[node].untried.swap_remove(pick);
        let action = self.nodes[node].legal.as_ref().unwrap()[index as usize];
        let parent_state = &self.nodes[node].state;
        let mut state = ctx.fm.apply_trusted(parent_state, &action);

        let actor = *state
            .unit(action.unit_id)
            .expect("acting unit survives its own action");
        let target = action
            .target_id
            .map(|t| (t, state.unit(t).map_or(0, |u| u.health)));
        let signature = NextStateSignature {
            pos: actor.pos,
            health: actor.health,
            target,
        };

        // The opponent's whole turn is part of this transition.
        while !state.outcome().is_terminal() && state.active_player() != self.me {
            ctx.random_step(&mut state);
        }

        let slot = match self.branching {
            Branching::UnitOrdered => self.actor(&state).map_or(0, |(s, _)| s),
            Branching::AllUnits => 0,
        };
        let depth = self.nodes[node].depth + 1;
        let mut child = Node::new(state, Some(node), depth, slot);
        child.action = Some(action);
        child.action_index = index;
        child.signature = Some(signature);
        let id = self.nodes.len();
        self.nodes.push(child);
        self.nodes[node].children.push(id);
        id
    }

    /// Random playout of up to `rollout_len` unit actions (both sides), cut short
    /// at a terminal state or when the budget runs out.
    fn rollout<R: Rng + ?Sized>(&self, node: NodeId, ctx: &mut Ctx<'_, R>) -> f64 {
        let mut state = self.nodes[node].state.clone();
        for _ in 0..ctx.rollout_len {
            if state.outcome().is_terminal() || ctx.exhausted() {
                break;
            }
            ctx.random_step(&mut state);
        }
        (ctx.eval)(&state, self.me)
    }

    /// Child of `node` with the highest UCB1 score under `phi`; ties go to the
    /// lower action index.
    pub(crate) fn select(&self, node: NodeId, phi: &Abstraction, c: f64) -> NodeId {
        let parent_n = self.nodes[node].n;
        let mut best: Option<(f64, u32, NodeId)> = None;
        for &ch in &self.nodes[node].children {
            let (x, n) = phi.effective_stats(self, ch);
            let score = ucb1(x, n, parent_n, c);
            let idx = self.nodes[ch].action_index;
            let better = match best {
                None => true,
                Some((s, i, _)) => score > s || (score == s && idx < i),
            };
            if better {
                best = Some((score, idx, ch));
            }
        }
        best.expect("fully expanded node has children").2
    }

    /// One selection / expansion / rollout / backpropagation pass. Returns the
    /// backed-up reward and the path length.
    pub(crate) fn iterate<R: Rng + ?Sized>(
        &mut self,
        phi: &mut Abstraction,
        ctx: &mut Ctx<'_, R>,
    ) -> (f64, usize) {
        let mut path = vec![0];
        let mut node = 0;
        let reward = loop {
            if self.nodes[node].terminal {
                break (ctx.eval)(&self.nodes[node].state, self.me);
            }
            self.ensure_legal(node);
            let untried = self.nodes[node].untried.len();
            if untried > 0 {
                let pick = ctx.rng.random_range(0..untried);
                let child = self.expand(node, pick, ctx);
                path.push(child);
                break self.rollout(child, ctx);
            }
            node = self.select(node, phi, ctx.c);
            path.push(node);
        };
        for &v in &path {
            self.nodes[v].x += reward;
            self.nodes[v].n += 1.0;
            phi.record_backup(v, reward);
        }
        (reward, path.len())
    }

    /// Root child to play: most visits, then higher mean, then lower action index.
    /// Statistics are read through `phi` (group averages while grouping is active).
    pub fn recommend(&self, phi: &Abstraction) -> Option<UnitAction> {
        let mut best: Option<(f64, f64, u32, NodeId)> = None;
        for &ch in &self.nodes[0].children {
            let (x, n) = phi.effective_stats(self, ch);
            let mean = if n > 0.0 { x / n } else { 0.0 };
            let idx = self.nodes[ch].action_index;
            let better = match best {
                None => true,
                Some((bn, bm, bi, _)) => {
                    n > bn || (n == bn && (mean > bm || (mean == bm && idx < bi)))
                }
            };
            if better {
                best = Some((n, mean, idx, ch));
            }
        }
        best.and_then(|(.., ch)| self.nodes[ch].action)
    }
}

impl SampledTree for SearchTree {
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
        for &ch in &self.nodes[node].children {
            let c = &self.nodes[ch];
            out.push(EdgeSample {
                action: c.action.expect("child has an action").key(),
                mean_return: c.mean(),
                next: c.signature.expect("child has a signature"),
            });
        }
    }
}

impl SampledTreeMut for SearchTree {
    fn set_stats(&mut self, node: NodeId, x: f64, n: f64) {
        self.nodes[node].x = x;
        self.nodes[node].n = n;
    }
}
