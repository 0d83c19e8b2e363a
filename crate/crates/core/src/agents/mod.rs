//! Agents: the scripted baselines and the search-based players behind one interface.

mod combat;

use std::fmt;
use std::str::FromStr;

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::engine::{GameState, UnitAction};
use crate::search::{
    run_search, AbstractionCutoff, Branching, DecisionStats, SearchParams, UnitOrder,
};

pub use combat::{combat_action, isolation_scores, pick_target, CombatConfig};

/// Something that picks the next unit action when its side is to move.
pub trait Agent: Send {
    fn name(&self) -> &str;

    /// A legal action for one unacted unit of the side to move.
    fn act(&mut self, state: &GameState, rng: &mut dyn RngCore) -> UnitAction;

    /// Diagnostics of the most recent decision, if the agent searches.
    fn last_stats(&self) -> Option<&DecisionStats> {
        None
    }

    /// Forget per-game state (such as a drawn unit order).
    fn reset(&mut self) {}
}

/// Uniform choice over the legal actions of the first unacted unit.
pub fn random_agent_act<R: Rng + ?Sized>(state: &GameState, rng: &mut R) -> UnitAction {
    let unit = state
        .first_unacted()
        .expect("side to move has an unacted unit");
    let legal = state
        .legal_unit_actions(unit)
        .expect("unacted unit can act");
    legal[rng.random_range(0..legal.len())]
}

/// Scripted combat policy; the rng is unused because the policy has no random ties.
pub fn combat_agent_act<R: Rng + ?Sized>(
    state: &GameState,
    cfg: &CombatConfig,
    _rng: &mut R,
) -> UnitAction {
    combat_action(state, cfg).expect("side to move has an unacted unit")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentKind {
    Combat,
    Random,
    Mcts,
    MctsU,
    ElasticMctsU,
}

impl AgentKind {
    pub const ALL: [AgentKind; 5] = [
        AgentKind::Combat,
        AgentKind::Random,
        AgentKind::Mcts,
        AgentKind::MctsU,
        AgentKind::ElasticMctsU,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AgentKind::Combat => "combat",
            AgentKind::Random => "random",
            AgentKind::Mcts => "mcts",
            AgentKind::MctsU => "mcts_u",
            AgentKind::ElasticMctsU => "elastic_mcts_u",
        }
    }

    pub fn is_search(self) -> bool {
        matches!(
            self,
            AgentKind::Mcts | AgentKind::MctsU | AgentKind::ElasticMctsU
        )
    }

    /// Tuned parameters: MCTS {C=0.1, L=20}, MCTS_u {C=10, L=100},
    /// Elastic MCTS_u {C=0.1, L=40, B=20, cutoff 12B}.
    pub fn preset(self) -> SearchParams {
        let base = SearchParams::default();
        match self {
            AgentKind::Mcts => SearchParams {
                c: 0.1,
                rollout_len: 20,
                ..base
            },
            AgentKind::MctsU => SearchParams {
                c: 10.0,
                rollout_len: 100,
                ..base
            },
            AgentKind::ElasticMctsU => SearchParams {
                c: 0.1,
                rollout_len: 40,
                batch: 20,
                alpha_abs: AbstractionCutoff::Iterations(240),
                abstraction_enabled: true,
                ..base
            },
            AgentKind::Combat | AgentKind::Random => base,
        }
    }
}

impl fmt::Display for AgentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AgentKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        AgentKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = AgentKind::ALL.iter().map(|k| k.name()).collect();
                format!(
                    "unknown agent '{s}' (expected one of: {})",
                    names.join(", ")
                )
            })
    }
}

pub struct RandomAgent;

impl Agent for RandomAgent {
    fn name(&self) -> &str {
        "random"
    }

    fn act(&mut self, state: &GameState, rng: &mut dyn RngCore) -> UnitAction {
        random_agent_act(state, rng)
    }
}

#[derive(Default)]
pub struct CombatAgent {
    pub config: CombatConfig,
}

impl Agent for CombatAgent {
    fn name(&self) -> &str {
        "combat"
    }

    fn act(&mut self, state: &GameState, rng: &mut dyn RngCore) -> UnitAction {
        combat_agent_act(state, &self.config, rng)
    }
}

/// MCTS, MCTS_u or Elastic MCTS_u. The unit order is drawn at the agent's
/// first decision of a game and kept until [`Agent::reset`].
pub struct SearchAgent {
    kind: AgentKind,
    params: SearchParams,
    order: Option<UnitOrder>,
    stats: Option<DecisionStats>,
}

impl SearchAgent {
    pub fn new(kind: AgentKind, params: SearchParams) -> Self {
        assert!(kind.is_search(), "{kind} is not a search agent");
        let params = SearchParams {
            abstraction_enabled: kind == AgentKind::ElasticMctsU && params.abstraction_enabled,
            ..params
        };
        SearchAgent {
            kind,
            params,
            order: None,
            stats: None,
        }
    }

    pub fn params(&self) -> &SearchParams {
        &self.params
    }

    pub fn order(&self) -> Option<&UnitOrder> {
        self.order.as_ref()
    }
}

impl Agent for SearchAgent {
    fn name(&self) -> &str {
        self.kind.name()
    }

    fn act(&mut self, state: &GameState, rng: &mut dyn RngCore) -> UnitAction {
        let me = state.active_player();
        if self.order.as_ref().is_none_or(|o| o.player() != me) {
            self.order = Some(UnitOrder::random(state, me, rng));
        }
        let order = self.order.as_ref().unwrap();
        let branching = match self.kind {
            AgentKind::Mcts => Branching::AllUnits,
            _ => Branching::UnitOrdered,
        };
        let result = run_search(state, &self.params, order, branching, rng)
            .expect("agent is asked to act only on its own turn");
        self.stats = Some(result.stats);
        result.action
    }

    fn last_stats(&self) -> Option<&DecisionStats> {
        self.stats.as_ref()
    }

    fn reset(&mut self) {
        self.order = None;
        self.stats = None;
    }
}

/// Builds an agent by kind. `params` is ignored by the scripted agents.
pub fn make_agent(kind: AgentKind, params: SearchParams, combat: CombatConfig) -> Box<dyn Agent> {
    match kind {
        AgentKind::Random => Box::new(RandomAgent),
        AgentKind::Combat => Box::new(CombatAgent { config: combat }),
        _ => Box::new(SearchAgent::new(kind, params)),
    }
}
