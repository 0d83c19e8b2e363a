//! Monte Carlo Tree Search over unit actions.
//!
//! Two tree shapes are supported: plain MCTS, where every node offers the
//! actions of all units still to act, and MCTS_u, where each layer decides for
//! one unit following a fixed [`UnitOrder`]. The opponent's turn is folded into
//! the transition after our last unit acts, using uniform random actions.
//!
//! With abstraction enabled, [`run_search`] runs the elastic schedule: every
//! `batch` iterations the tree's nodes are grouped ([`Abstraction::construct`]),
//! and once the cutoff is passed the groups are split back into ground nodes
//! for the rest of the budget.

mod eval;
mod order;
mod tree;

use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::abstraction::{Abstraction, BatchReport, Thresholds, TransitionErrorMode};
use crate::engine::{ForwardModel, GameState, Player, UnitAction};

pub use eval::{evaluate_state, ucb1};
pub use order::UnitOrder;
pub use tree::{Branching, SearchTree};

/// When grouping is abandoned.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AbstractionCutoff {
    /// Split once this many iterations have completed.
    Iterations(u64),
    /// Split once this fraction of the forward-model budget is spent.
    /// `1.0` keeps the groups for the whole search.
    Proportion(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchParams {
    /// Exploration constant `C`.
    pub c: f64,
    /// Rollout length in unit actions.
    pub rollout_len: u32,
    pub fm_budget: u64,
    /// Iterations between abstraction passes (`B`).
    pub batch: u64,
    pub alpha_abs: AbstractionCutoff,
    pub eta_r: f64,
    pub eta_t: f64,
    #[serde(default)]
    pub transition_error_mode: TransitionErrorMode,
    pub abstraction_enabled: bool,
}

impl Default for SearchParams {
    fn default() -> Self {
        SearchParams {
            c: 0.1,
            rollout_len: 40,
            fm_budget: 30_000,
            batch: 20,
            alpha_abs: AbstractionCutoff::Iterations(240),
            eta_r: 0.1,
            eta_t: 0.3,
            transition_error_mode: TransitionErrorMode::Normalized,
            abstraction_enabled: false,
        }
    }
}

impl SearchParams {
    pub fn thresholds(&self) -> Thresholds {
        Thresholds {
            eta_r: self.eta_r,
            eta_t: self.eta_t,
            mode: self.transition_error_mode,
        }
    }

    pub fn validate(&self) -> Result<(), SearchError> {
        let bad = |why: &str| Err(SearchError::InvalidParams(why.to_string()));
        if !(self.c >= 0.0 && self.c.is_finite()) {
            return bad("c must be a finite non-negative number");
        }
        if self.abstraction_enabled && self.batch == 0 {
            return bad("batch must be positive");
        }
        if let AbstractionCutoff::Proportion(p) = self.alpha_abs {
            if !(0.0..=1.0).contains(&p) {
                return bad("alpha_abs proportion must lie in [0, 1]");
            }
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SearchError {
    #[error("the game is already over")]
    GameOver,
    #[error("it is not player {0}'s turn")]
    NotOurTurn(Player),
    #[error("invalid search parameters: {0}")]
    InvalidParams(String),
}

/// Diagnostics for one decision.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DecisionStats {
    pub iterations: u64,
    pub fm_calls: u64,
    /// Forward-model calls spent beyond the budget by the final iteration.
    pub overshoot: u64,
    pub wall_micros: u64,
    pub tree_nodes: usize,
    /// Abstract node count when the search ended.
    pub groups: usize,
    /// Iteration after which the groups were split, if they were.
    pub split_at: Option<u64>,
    #[serde(skip)]
    pub batches: Vec<BatchReport>,
}

#[derive(Debug, Clone)]
pub struct SearchResult {
    pub action: UnitAction,
    pub stats: DecisionStats,
}

/// Live search state: tree, abstraction and forward-model counter.
pub struct Search {
    pub tree: SearchTree,
    pub phi: Abstraction,
    pub fm: ForwardModel,
    pub params: SearchParams,
    pub iterations: u64,
    split_at: Option<u64>,
    batches: Vec<BatchReport>,
}

impl Search {
    pub fn new(
        root: GameState,
        params: SearchParams,
        order: UnitOrder,
        branching: Branching,
    ) -> Self {
        Search {
            tree: SearchTree::new(root, order, branching),
            phi: Abstraction::new(),
            fm: ForwardModel::new(),
            params,
            iterations: 0,
            split_at: None,
            batches: Vec::new(),
        }
    }

    /// Every iteration is charged at least one unit of budget, so a tree whose
    /// selection keeps ending in terminal nodes (no forward-model calls) still stops.
    pub fn budget_spent(&self) -> bool {
        self.fm.calls() >= self.params.fm_budget || self.iterations >= self.params.fm_budget
    }

    fn abstraction_active(&self) -> bool {
        self.params.abstraction_enabled && !self.phi.is_abandoned()
    }

    /// One MCTS iteration followed by the elastic schedule's bookkeeping.
    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R, eval: &dyn Fn(&GameState, Player) -> f64) {
        mcts_iteration(
            &mut self.tree,
            &mut self.phi,
            &self.params,
            &mut self.fm,
            rng,
            eval,
        );
        self.iterations += 1;
        if self.budget_spent() || !self.abstraction_active() {
            return;
        }
        let past_cutoff = match self.params.alpha_abs {
            AbstractionCutoff::Iterations(a) => self.iterations >= a,
            AbstractionCutoff::Proportion(p) => {
                self.fm.calls() as f64 >= p * self.params.fm_budget as f64
            }
        };
        if past_cutoff {
            self.phi.split(&mut self.tree);
            self.split_at = Some(self.iterations);
        } else if self.iterations.is_multiple_of(self.params.batch) {
            let report = self
                .phi
                .construct(&self.tree, &self.params.thresholds(), self.iterations);
            self.batches.push(report);
        }
    }

    pub fn run<R: Rng + ?Sized>(&mut self, rng: &mut R, eval: &dyn Fn(&GameState, Player) -> f64) {
        while !self.budget_spent() {
            self.step(rng, eval);
        }
    }

    pub fn recommend(&self) -> UnitAction {
        self.tree.recommend(&self.phi).unwrap_or_else(|| {
            let state = self.tree.root_state();
            UnitAction::do_nothing(state.first_unacted().expect("root has an actor"))
        })
    }

    pub fn stats(&self, wall_micros: u64) -> DecisionStats {
        let fm_calls = self.fm.calls();
        DecisionStats {
            iterations: self.iterations,
            fm_calls,
            overshoot: fm_calls.saturating_sub(self.params.fm_budget),
            wall_micros,
            tree_nodes: self.tree.len(),
            groups: self.phi.group_count(self.tree.len()),
            split_at: self.split_at,
            batches: self.batches.clone(),
        }
    }
}

/// A single selection / expansion / rollout / backpropagation pass under `phi`.
/// Returns the backed-up reward.
pub fn mcts_iteration<R: Rng + ?Sized>(
    tree: &mut SearchTree,
    phi: &mut Abstraction,
    params: &SearchParams,
    fm: &mut ForwardModel,
    rng: &mut R,
    eval: &dyn Fn(&GameState, Player) -> f64,
) -> f64 {
    let mut ctx = tree::Ctx {
        fm,
        rng,
        eval,
        budget: params.fm_budget,
        c: params.c,
        rollout_len: params.rollout_len,
        scratch: Vec::new(),
    };
    tree.iterate(phi, &mut ctx).0
}

fn check_root(root: &GameState, order: &UnitOrder) -> Result<(), SearchError> {
    if root.outcome().is_terminal() {
        return Err(SearchError::GameOver);
    }
    if root.active_player() != order.player() {
        return Err(SearchError::NotOurTurn(order.player()));
    }
    Ok(())
}

/// Searches the decision of the next unit to act at `root` and returns the
/// recommended action. Uses [`evaluate_state`] as the leaf evaluator.
pub fn run_search<R: Rng + ?Sized>(
    root: &GameState,
    params: &SearchParams,
    order: &UnitOrder,
    branching: Branching,
    rng: &mut R,
) -> Result<SearchResult, SearchError> {
    run_search_with(root, params, order, branching, rng, &evaluate_state)
}

/// [`run_search`] with a custom leaf evaluator.
pub fn run_search_with<R: Rng + ?Sized>(
    root: &GameState,
    params: &SearchParams,
    order: &UnitOrder,
    branching: Branching,
    rng: &mut R,
    eval: &dyn Fn(&GameState, Player) -> f64,
) -> Result<SearchResult, SearchError> {
    params.validate()?;
    check_root(root, order)?;
    let start = Instant::now();
    let mut search = Search::new(root.clone(), *params, order.clone(), branching);
    let legal = search.tree.legal_actions(0);
    if legal.len() == 1 {
        return Ok(SearchResult {
            action: legal[0],
            stats: search.stats(start.elapsed().as_micros() as u64),
        });
    }
    search.run(rng, eval);
    Ok(SearchResult {
        action: search.recommend(),
        stats: search.stats(start.elapsed().as_micros() as u64),
    })
}

/// Plans and plays our whole turn: one search per living unit in `order`,
/// each applied to the real state before the next unit is searched.
pub fn build_turn<R: Rng + ?Sized>(
    state: &GameState,
    params: &SearchParams,
    order: &UnitOrder,
    rng: &mut R,
) -> Result<(Vec<UnitAction>, Vec<DecisionStats>, GameState), SearchError> {
    check_root(state, order)?;
    let me = order.player();
    let mut fm = ForwardModel::new();
    let mut state = state.clone();
    let mut actions = Vec::new();
    let mut stats = Vec::new();
    while state.active_player() == me && !state.outcome().is_terminal() {
        let result = run_search(&state, params, order, Branching::UnitOrdered, rng)?;
        state = fm
            .apply(&state, &result.action)
            .expect("search recommends legal actions");
        actions.push(result.action);
        stats.push(result.stats);
    }
    Ok((actions, stats, state))
}
