//! Kill The King rules: grid maps, unit attribute tables, levels and the forward model.
//!
//! A game is two players on a grid map, each with one King plus an army of
//! Warriors, Archers and Healers. On its turn a player acts with every living
//! unit once, in any order: an optional move followed by an optional attack
//! (or heal, for Healers). Killing the opposing King wins; after
//! [`MAX_TURNS`] full rounds with both Kings alive the game is a draw.

mod grid;
mod level;
mod state;
mod units;

pub use grid::{load_map, Grid, Pos, Tile};
pub use level::{load_level, random_level, Composition, LevelFile, Placement};
pub use state::{
    outcome, ForwardModel, GameState, Outcome, Player, Unit, UnitAction, UnitId, MAX_TURNS,
    MAX_UNITS,
};
pub use units::{ActionType, GameConfig, UnitKind, UnitTypeSpec};

#[derive(Debug, thiserror::Error)]
pub enum EngineError {
    #[error("map: {0}")]
    Map(String),
    #[error("level: {0}")]
    Level(String),
    #[error("game config: {0}")]
    Config(String),
    #[error("unknown unit {0}")]
    UnknownUnit(UnitId),
    #[error("unit {0} does not belong to the active player")]
    NotYourUnit(UnitId),
    #[error("unit {0} has already acted this turn")]
    AlreadyActed(UnitId),
    #[error("illegal action {0}")]
    IllegalAction(String),
    #[error("the game is over")]
    GameOver,
}
