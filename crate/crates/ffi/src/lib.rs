//! C ABI over the `elastic-mcts` engine and agents.
//!
//! Games and agents are opaque handles created by `emc_*_new`/`emc_game_load`
//! and released by the matching `*_free`. Every fallible call returns an
//! [`EmcStatus`]; on failure a message is available from
//! [`emc_last_error_message`] on the same thread. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::sync::Arc;

use elastic_mcts::agents::{Agent, AgentKind};
use elastic_mcts::engine::{
    load_level, load_map, ForwardModel, GameConfig, GameState, Outcome, Pos, UnitAction, UnitKind,
};
use elastic_mcts::harness::AgentConfig;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Parse = 3,
    IllegalAction = 4,
    GameOver = 5,
    BufferTooSmall = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmcOutcome {
    Ongoing = 0,
    Player0Wins = 1,
    Player1Wins = 2,
    Draw = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmcUnitKind {
    King = 0,
    Warrior = 1,
    Archer = 2,
    Healer = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EmcUnit {
    pub id: u32,
    pub owner: u8,
    /// An [`EmcUnitKind`] value.
    pub kind: u8,
    pub x: i32,
    pub y: i32,
    pub health: i32,
}

/// One unit's action. `has_move`/`has_target` flag the optional parts;
/// both zero means DoNothing.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EmcAction {
    pub unit_id: u32,
    pub has_move: u8,
    pub has_target: u8,
    pub move_x: i32,
    pub move_y: i32,
    pub target_id: u32,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EmcDecisionStats {
    pub iterations: u64,
    pub fm_calls: u64,
    pub wall_micros: u64,
    pub tree_nodes: u64,
    pub groups: u64,
}

/// Opaque game handle.
pub struct EmcGame {
    state: GameState,
    fm: ForwardModel,
}

/// Opaque agent handle with its own random stream.
pub struct EmcAgent {
    agent: Box<dyn Agent>,
    rng: ChaCha8Rng,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn fail(status: EmcStatus, msg: impl Into<String>) -> EmcStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
    status
}

fn guard(f: impl FnOnce() -> EmcStatus) -> EmcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => fail(EmcStatus::Panic, "internal panic"),
    }
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, EmcStatus> {
    if p.is_null() {
        return Err(fail(EmcStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(EmcStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

impl From<UnitAction> for EmcAction {
    fn from(a: UnitAction) -> Self {
        EmcAction {
            unit_id: a.unit_id,
            has_move: u8::from(a.move_to.is_some()),
            has_target: u8::from(a.target_id.is_some()),
            move_x: a.move_to.map_or(0, |p| p.x),
            move_y: a.move_to.map_or(0, |p| p.y),
            target_id: a.target_id.unwrap_or(0),
        }
    }
}

impl From<EmcAction> for UnitAction {
    fn from(a: EmcAction) -> Self {
        UnitAction {
            unit_id: a.unit_id,
            move_to: (a.has_move != 0).then_some(Pos::new(a.move_x, a.move_y)),
            target_id: (a.has_target != 0).then_some(a.target_id),
        }
    }
}

fn kind_code(k: UnitKind) -> u8 {
    k.index() as u8
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn emc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the calling thread's last error message into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length without the NUL.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn emc_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Builds a game from map text (MovingAI format), level text and an optional
/// unit attribute table (TOML; null for the default table).
///
/// # Safety
/// String arguments must be null or NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn emc_game_load(
    map_text: *const c_char,
    level_text: *const c_char,
    config_text: *const c_char,
    out: *mut *mut EmcGame,
) -> EmcStatus {
    guard(|| {
        if out.is_null() {
            return fail(EmcStatus::NullPointer, "out is null");
        }
        let map = match text(map_text, "map_text") {
            Ok(t) => t,
            Err(s) => return s,
        };
        let level = match text(level_text, "level_text") {
            Ok(t) => t,
            Err(s) => return s,
        };
        let config = if config_text.is_null() {
            GameConfig::default()
        } else {
            match text(config_text, "config_text").map(GameConfig::parse) {
                Ok(Ok(c)) => c,
                Ok(Err(e)) => return fail(EmcStatus::Parse, e.to_string()),
                Err(s) => return s,
            }
        };
        let grid = match load_map(map) {
            Ok(g) => Arc::new(g),
            Err(e) => return fail(EmcStatus::Parse, e.to_string()),
        };
        match load_level(level, grid, Arc::new(config)) {
            Ok(state) => {
                *out = Box::into_raw(Box::new(EmcGame {
                    state,
                    fm: ForwardModel::new(),
                }));
                EmcStatus::Ok
            }
            Err(e) => fail(EmcStatus::Parse, e.to_string()),
        }
    })
}

/// # Safety
/// `game` must be null or a handle from [`emc_game_load`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn emc_game_free(game: *mut EmcGame) {
    if !game.is_null() {
        drop(Box::from_raw(game));
    }
}

/// # Safety
/// `game` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn emc_game_outcome(game: *const EmcGame) -> EmcOutcome {
    let Some(g) = game.as_ref() else {
        return EmcOutcome::Ongoing;
    };
    match g.state.outcome() {
        Outcome::Ongoing => EmcOutcome::Ongoing,
        Outcome::Win(0) => EmcOutcome::Player0Wins,
        Outcome::Win(_) => EmcOutcome::Player1Wins,
        Outcome::Draw => EmcOutcome::Draw,
    }
}

/// Turn counter, or 0 for a null handle.
///
/// # Safety
/// `game` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn emc_game_turn(game: *const EmcGame) -> u32 {
    game.as_ref().map_or(0, |g| g.state.turn())
}

/// # Safety
/// `game` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn emc_game_active_player(game: *const EmcGame) -> u8 {
    game.as_ref().map_or(0, |g| g.state.active_player())
}

/// Forward-model calls applied to this game so far.
///
/// # Safety
/// `game` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn emc_game_fm_calls(game: *const EmcGame) -> u64 {
    game.as_ref().map_or(0, |g| g.fm.calls())
}

/// # Safety
/// `game` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn emc_game_unit_count(game: *const EmcGame) -> usize {
    game.as_ref().map_or(0, |g| g.state.units().len())
}

/// Living unit at `index` (units are ordered by id).
///
/// # Safety
/// `game` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn emc_game_unit(
    game: *const EmcGame,
    index: usize,
    out: *mut EmcUnit,
) -> EmcStatus {
    guard(|| {
        let (Some(g), false) = (game.as_ref(), out.is_null()) else {
            return fail(EmcStatus::NullPointer, "game or out is null");
        };
        let Some(u) = g.state.units().get(index) else {
            return fail(
                EmcStatus::InvalidArgument,
                format!("no unit at index {index}"),
            );
        };
        *out = EmcUnit {
            id: u.id,
            owner: u.owner,
            kind: kind_code(u.kind),
            x: u.pos.x,
            y: u.pos.y,
            health: u.health,
        };
        EmcStatus::Ok
    })
}

/// Writes up to `cap` legal actions of `unit_id` into `buf` and their total
/// number into `len`. Returns `BufferTooSmall` (with `len` set) when `cap` is short.
///
/// # Safety
/// `game` must be a live handle, `buf` must hold `cap` actions, `len` must be writable.
#[no_mangle]
pub unsafe extern "C" fn emc_game_legal_actions(
    game: *const EmcGame,
    unit_id: u32,
    buf: *mut EmcAction,
    cap: usize,
    len: *mut usize,
) -> EmcStatus {
    guard(|| {
        let (Some(g), false) = (game.as_ref(), len.is_null()) else {
            return fail(EmcStatus::NullPointer, "game or len is null");
        };
        if g.state.outcome().is_terminal() {
            return fail(EmcStatus::GameOver, "the game is over");
        }
        let legal = match g.state.legal_unit_actions(unit_id) {
            Ok(l) => l,
            Err(e) => return fail(EmcStatus::InvalidArgument, e.to_string()),
        };
        *len = legal.len();
        if legal.len() > cap {
            return fail(
                EmcStatus::BufferTooSmall,
                format!("{} actions, capacity {cap}", legal.len()),
            );
        }
        if buf.is_null() && !legal.is_empty() {
            return fail(EmcStatus::NullPointer, "buf is null");
        }
        for (i, a) in legal.into_iter().enumerate() {
            *buf.add(i) = a.into();
        }
        EmcStatus::Ok
    })
}

/// Applies one validated action.
///
/// # Safety
/// `game` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn emc_game_apply(game: *mut EmcGame, action: EmcAction) -> EmcStatus {
    guard(|| {
        let Some(g) = game.as_mut() else {
            return fail(EmcStatus::NullPointer, "game is null");
        };
        if g.state.outcome().is_terminal() {
            return fail(EmcStatus::GameOver, "the game is over");
        }
        match g.fm.apply(&g.state, &action.into()) {
            Ok(next) => {
                g.state = next;
                EmcStatus::Ok
            }
            Err(e) => fail(EmcStatus::IllegalAction, e.to_string()),
        }
    })
}

/// Creates an agent by name (`combat`, `random`, `mcts`, `mcts_u`,
/// `elastic_mcts_u`) with its tuned preset and the given budget and seed.
///
/// # Safety
/// `name` must be null or NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn emc_agent_new(
    name: *const c_char,
    fm_budget: u64,
    seed: u64,
    out: *mut *mut EmcAgent,
) -> EmcStatus {
    guard(|| {
        if out.is_null() {
            return fail(EmcStatus::NullPointer, "out is null");
        }
        let kind: AgentKind = match text(name, "name").map(str::parse) {
            Ok(Ok(k)) => k,
            Ok(Err(e)) => return fail(EmcStatus::InvalidArgument, e),
            Err(s) => return s,
        };
        if kind.is_search() && fm_budget == 0 {
            return fail(EmcStatus::InvalidArgument, "fm_budget must be positive");
        }
        *out = Box::into_raw(Box::new(EmcAgent {
            agent: AgentConfig::new(kind).build(fm_budget),
            rng: ChaCha8Rng::seed_from_u64(seed),
        }));
        EmcStatus::Ok
    })
}

/// # Safety
/// `agent` must be null or a handle from [`emc_agent_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn emc_agent_free(agent: *mut EmcAgent) {
    if !agent.is_null() {
        drop(Box::from_raw(agent));
    }
}

/// Forgets per-game state (the drawn unit order). Call between games.
///
/// # Safety
/// `agent` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn emc_agent_reset(agent: *mut EmcAgent) {
    if let Some(a) = agent.as_mut() {
        a.agent.reset();
    }
}

/// Asks the agent for the next action of the side to move. The game is not
/// modified; pass the action to [`emc_game_apply`]. `stats` may be null.
///
/// # Safety
/// Handles must be live; `out` must be writable; `stats` null or writable.
#[no_mangle]
pub unsafe extern "C" fn emc_agent_act(
    agent: *mut EmcAgent,
    game: *const EmcGame,
    out: *mut EmcAction,
    stats: *mut EmcDecisionStats,
) -> EmcStatus {
    guard(|| {
        let (Some(a), Some(g), false) = (agent.as_mut(), game.as_ref(), out.is_null()) else {
            return fail(EmcStatus::NullPointer, "agent, game or out is null");
        };
        if g.state.outcome().is_terminal() {
            return fail(EmcStatus::GameOver, "the game is over");
        }
        let action = a.agent.act(&g.state, &mut a.rng);
        *out = action.into();
        if let Some(s) = stats.as_mut() {
            *s = a
                .agent
                .last_stats()
                .map_or_else(EmcDecisionStats::default, |d| EmcDecisionStats {
                    iterations: d.iterations,
                    fm_calls: d.fm_calls,
                    wall_micros: d.wall_micros,
                    tree_nodes: d.tree_nodes as u64,
                    groups: d.groups as u64,
                });
        }
        EmcStatus::Ok
    })
}
