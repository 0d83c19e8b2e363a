//! Elastic Monte Carlo Tree Search for turn-based strategy games.
//!
//! The crate bundles a deterministic Kill The King engine ([`engine`]), an
//! MCTS core with a unit-ordered variant and elastic node grouping
//! ([`search`], [`abstraction`]), scripted baselines ([`agents`]), an NTBEA
//! parameter tuner ([`tuner`]) and the experiment harness behind the
//! `elastic-mcts` command-line tool ([`harness`]).

pub mod abstraction;
pub mod agents;
pub mod engine;
pub mod harness;
pub mod search;
pub mod tuner;
