use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::agents::Agent;
use crate::engine::{ForwardModel, GameState, Outcome, Player};
use crate::search::DecisionStats;

/// How a match ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum MatchOutcome {
    Win(Player),
    Draw,
    /// An agent returned an illegal action; the game was aborted.
    Failure {
        player: Player,
        turn: u32,
    },
}

impl MatchOutcome {
    pub fn label(self) -> String {
        match self {
            MatchOutcome::Win(p) => format!("win{p}"),
            MatchOutcome::Draw => "draw".to_string(),
            MatchOutcome::Failure { player, .. } => format!("failure{player}"),
        }
    }
}

/// Diagnostics of one search decision inside a match.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionRecord {
    pub player: Player,
    pub turn: u32,
    pub stats: DecisionStats,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchRecord {
    pub level: String,
    pub seed: u64,
    /// Agent labels in player order.
    pub players: [String; 2],
    pub outcome: MatchOutcome,
    /// Turn counter when the game ended.
    pub turns: u32,
    pub actions: usize,
    pub decisions: Vec<DecisionRecord>,
}

impl MatchRecord {
    /// Mean of `f` over `player`'s search decisions, or 0 without any.
    pub fn mean_decision(&self, player: Player, f: impl Fn(&DecisionStats) -> f64) -> f64 {
        let xs: Vec<f64> = self
            .decisions
            .iter()
            .filter(|d| d.player == player)
            .map(|d| f(&d.stats))
            .collect();
        if xs.is_empty() {
            0.0
        } else {
            xs.iter().sum::<f64>() / xs.len() as f64
        }
    }
}

/// Independent random stream for each player, both derived from the match seed.
pub fn player_rng(seed: u64, player: Player) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(u64::from(player) + 1);
    rng
}

/// Plays one game from `start` with `agents[p]` controlling player `p`.
/// `max_decisions` (search decisions of either side) cuts the game short and records a draw.
pub fn run_match(
    level: &str,
    start: &GameState,
    agents: [&mut dyn Agent; 2],
    seed: u64,
    max_decisions: Option<usize>,
) -> MatchRecord {
    let [a0, a1] = agents;
    let mut agents: [&mut dyn Agent; 2] = [a0, a1];
    for a in agents.iter_mut() {
        a.reset();
    }
    let players = [agents[0].name().to_string(), agents[1].name().to_string()];
    let mut rngs = [player_rng(seed, 0), player_rng(seed, 1)];
    let mut fm = ForwardModel::new();
    let mut state = start.clone();
    let mut decisions = Vec::new();
    let mut actions = 0;
    let record = |outcome, state: &GameState, decisions, actions| MatchRecord {
        level: level.to_string(),
        seed,
        players: players.clone(),
        outcome,
        turns: state.turn(),
        actions,
        decisions,
    };
    loop {
        match state.outcome() {
            Outcome::Win(p) => return record(MatchOutcome::Win(p), &state, decisions, actions),
            Outcome::Draw => return record(MatchOutcome::Draw, &state, decisions, actions),
            Outcome::Ongoing => {}
        }
        let p = state.active_player();
        if let Some(limit) = max_decisions {
            if decisions.len() >= limit {
                return record(MatchOutcome::Draw, &state, decisions, actions);
            }
        }
        let action = agents[p as usize].act(&state, &mut rngs[p as usize]);
        if let Some(stats) = agents[p as usize].last_stats() {
            decisions.push(DecisionRecord {
                player: p,
                turn: state.turn(),
                stats: stats.clone(),
            });
        }
        match fm.apply(&state, &action) {
            Ok(next) => state = next,
            Err(_) => {
                let turn = state.turn();
                return record(
                    MatchOutcome::Failure { player: p, turn },
                    &state,
                    decisions,
                    actions,
                );
            }
        }
        actions += 1;
    }
}
