use std::fmt::Write as _;
use std::sync::Arc;

use super::grid::{Grid, Pos};
use super::units::{GameConfig, UnitKind, UnitTypeSpec};
use super::EngineError;

pub type UnitId = u32;

/// Player index, 0 or 1.
pub type Player = u8;

/// Game length cap in full rounds; a state at this turn with both kings alive is a draw.
pub const MAX_TURNS: u32 = 100;

/// Unit ids are bit positions in the acted mask.
pub const MAX_UNITS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Unit {
    pub id: UnitId,
    pub owner: Player,
    pub kind: UnitKind,
    pub pos: Pos,
    pub health: i32,
}

/// One unit's decision: optional move, then optional attack/heal. Both absent is DoNothing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct UnitAction {
    pub unit_id: UnitId,
    pub move_to: Option<Pos>,
    pub target_id: Option<UnitId>,
}

impl UnitAction {
    pub fn do_nothing(unit_id: UnitId) -> Self {
        UnitAction {
            unit_id,
            move_to: None,
            target_id: None,
        }
    }

    pub fn is_do_nothing(&self) -> bool {
        self.move_to.is_none() && self.target_id.is_none()
    }

    /// Injective 64-bit encoding, stable across states (coordinates below 2^15).
    pub fn key(&self) -> u64 {
        let mv = match self.move_to {
            Some(p) => (1u64 << 30) | ((p.x as u64 & 0x7fff) << 15) | (p.y as u64 & 0x7fff),
            None => 0,
        };
        let tgt = match self.target_id {
            Some(t) => 0x80 | (t as u64 & 0x7f),
            None => 0,
        };
        ((self.unit_id as u64) << 40) | (mv << 8) | tgt
    }
}

impl std::fmt::Display for UnitAction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "u{}", self.unit_id)?;
        match self.move_to {
            Some(p) => write!(f, " move {}:{}", p.x, p.y)?,
            None => f.write_str(" stay")?,
        }
        if let Some(t) = self.target_id {
            write!(f, " target {t}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outcome {
    Ongoing,
    Win(Player),
    Draw,
}

impl Outcome {
    pub fn is_terminal(self) -> bool {
        self != Outcome::Ongoing
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GameState {
    grid: Arc<Grid>,
    config: Arc<GameConfig>,
    units: Vec<Unit>,
    turn: u32,
    active: Player,
    acted: u64,
}

impl GameState {
    /// A fresh state at turn 0 with player 0 to move. Units keep their ids; they are stored sorted by id.
    pub fn new(
        grid: Arc<Grid>,
        config: Arc<GameConfig>,
        units: Vec<Unit>,
    ) -> Result<Self, EngineError> {
        GameState::from_parts(grid, config, units, 0, 0, &[])
    }

    /// Builds an arbitrary (mid-game) state, validating every board invariant.
    pub fn from_parts(
        grid: Arc<Grid>,
        config: Arc<GameConfig>,
        mut units: Vec<Unit>,
        turn: u32,
        active: Player,
        acted: &[UnitId],
    ) -> Result<Self, EngineError> {
        if turn > MAX_TURNS {
            return Err(EngineError::Level(format!(
                "turn {turn} exceeds {MAX_TURNS}"
            )));
        }
        if active > 1 {
            return Err(EngineError::Level(format!(
                "invalid active player {active}"
            )));
        }
        if units.len() > MAX_UNITS {
            return Err(EngineError::Level(format!(
                "at most {MAX_UNITS} units are supported"
            )));
        }
        units.sort_by_key(|u| u.id);
        for (i, u) in units.iter().enumerate() {
            if u.id as usize >= MAX_UNITS {
                return Err(EngineError::Level(format!("unit id {} out of range", u.id)));
            }
            if i > 0 && units[i - 1].id == u.id {
                return Err(EngineError::Level(format!("duplicate unit id {}", u.id)));
            }
            if u.owner > 1 {
                return Err(EngineError::Level(format!("invalid player {}", u.owner)));
            }
            if !grid.is_floor(u.pos) {
                return Err(EngineError::Level(format!(
                    "{} at {} is not on a floor cell",
                    u.kind, u.pos
                )));
            }
            if units[..i].iter().any(|o| o.pos == u.pos) {
                return Err(EngineError::Level(format!("two units placed at {}", u.pos)));
            }
            let max = config.spec(u.kind).max_health;
            if u.health <= 0 || u.health > max {
                return Err(EngineError::Level(format!(
                    "unit {} health {} outside (0, {max}]",
                    u.id, u.health
                )));
            }
        }
        for p in 0..2u8 {
            let kings = units
                .iter()
                .filter(|u| u.owner == p && u.kind == UnitKind::King)
                .count();
            if kings > 1 {
                return Err(EngineError::Level(format!("player {p} has {kings} kings")));
            }
        }
        let mut mask = 0u64;
        for &id in acted {
            match units.iter().find(|u| u.id == id) {
                Some(u) if u.owner == active => mask |= 1 << id,
                _ => {
                    return Err(EngineError::Level(format!(
                        "acted flag for unit {id} which is not an active player's unit"
                    )))
                }
            }
        }
        Ok(GameState {
            grid,
            config,
            units,
            turn,
            active,
            acted: mask,
        })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn config(&self) -> &Arc<GameConfig> {
        &self.config
    }

    pub fn units(&self) -> &[Unit] {
        &self.units
    }

    pub fn turn(&self) -> u32 {
        self.turn
    }

    pub fn active_player(&self) -> Player {
        self.active
    }

    pub fn spec(&self, kind: UnitKind) -> &UnitTypeSpec {
        self.config.spec(kind)
    }

    pub fn unit(&self, id: UnitId) -> Option<&Unit> {
        self.unit_index(id).map(|i| &self.units[i])
    }

    fn unit_index(&self, id: UnitId) -> Option<usize> {
        self.units.binary_search_by_key(&id, |u| u.id).ok()
    }

    pub fn unit_at(&self, pos: Pos) -> Option<&Unit> {
        self.units.iter().find(|u| u.pos == pos)
    }

    pub fn has_acted(&self, id: UnitId) -> bool {
        id < 64 && self.acted & (1 << id) != 0
    }

    pub fn king(&self, player: Player) -> Option<&Unit> {
        self.units
            .iter()
            .find(|u| u.owner == player && u.kind == UnitKind::King)
    }

    pub fn units_of(&self, player: Player) -> impl Iterator<Item = &Unit> + '_ {
        self.units.iter().filter(move |u| u.owner == player)
    }

    /// Active player's units that may still act this turn, in id order.
    pub fn unacted_units(&self) -> impl Iterator<Item = &Unit> + '_ {
        self.units
            .iter()
            .filter(move |u| u.owner == self.active && !self.has_acted(u.id))
    }

    pub fn first_unacted(&self) -> Option<UnitId> {
        self.unacted_units().next().map(|u| u.id)
    }

    pub fn outcome(&self) -> Outcome {
        outcome(self)
    }

    /// Canonical text form; equal states serialize identically.
    pub fn canonical(&self) -> String {
        let mut s = format!(
            "turn {} active {} acted {:016x}\n",
            self.turn, self.active, self.acted
        );
        for u in &self.units {
            let _ = writeln!(
                s,
                "{} {} {} {} {} {}",
                u.id, u.owner, u.kind, u.pos.x, u.pos.y, u.health
            );
        }
        s
    }

    /// Tiles the unit can move to this turn (excluding its own tile), in BFS order.
    pub fn reachable_tiles(&self, unit: &Unit) -> Vec<Pos> {
        let range = self.spec(unit.kind).move_range;
        let mut frontier = vec![unit.pos];
        let mut seen = vec![unit.pos];
        for _ in 0..range {
            let mut next = Vec::new();
            for p in &frontier {
                for n in p.neighbors() {
                    if self.grid.is_floor(n) && !seen.contains(&n) && self.unit_at(n).is_none() {
                        seen.push(n);
                        next.push(n);
                    }
                }
            }
            if next.is_empty() {
                break;
            }
            frontier = next;
        }
        seen.remove(0);
        seen
    }

    fn push_targets(
        &self,
        unit: &Unit,
        from: Pos,
        move_to: Option<Pos>,
        out: &mut Vec<UnitAction>,
    ) {
        let spec = self.spec(unit.kind);
        let range = spec.target_range(unit.kind);
        if range <= 0 {
            return;
        }
        let heals = unit.kind.heals();
        for t in &self.units {
            if t.id == unit.id || (t.owner == unit.owner) != heals {
                continue;
            }
            if from.manhattan(t.pos) <= range {
                out.push(UnitAction {
                    unit_id: unit.id,
                    move_to,
                    target_id: Some(t.id),
                });
            }
        }
    }

    /// Appends every legal action of `unit_id` to `out`. Index 0 is always DoNothing.
    pub fn legal_actions_into(
        &self,
        unit_id: UnitId,
        out: &mut Vec<UnitAction>,
    ) -> Result<(), EngineError> {
        let unit = *self.check_can_act(unit_id)?;
        out.push(UnitAction::do_nothing(unit_id));
        self.push_targets(&unit, unit.pos, None, out);
        for p in self.reachable_tiles(&unit) {
            out.push(UnitAction {
                unit_id,
                move_to: Some(p),
                target_id: None,
            });
            self.push_targets(&unit, p, Some(p), out);
        }
        Ok(())
    }

    pub fn legal_unit_actions(&self, unit_id: UnitId) -> Result<Vec<UnitAction>, EngineError> {
        let mut out = Vec::new();
        self.legal_actions_into(unit_id, &mut out)?;
        Ok(out)
    }

    fn check_can_act(&self, unit_id: UnitId) -> Result<&Unit, EngineError> {
        if self.outcome().is_terminal() {
            return Err(EngineError::GameOver);
        }
        let unit = self
            .unit(unit_id)
            .ok_or(EngineError::UnknownUnit(unit_id))?;
        if unit.owner != self.active {
            return Err(EngineError::NotYourUnit(unit_id));
        }
        if self.has_acted(unit_id) {
            return Err(EngineError::AlreadyActed(unit_id));
        }
        Ok(unit)
    }

    /// Checks legality without enumerating the whole action set.
    pub fn is_legal(&self, action: &UnitAction) -> Result<(), EngineError> {
        let unit = *self.check_can_act(action.unit_id)?;
        let illegal = |why: &str| EngineError::IllegalAction(format!("{action}: {why}"));
        let from = match action.move_to {
            Some(p) => {
                if !self.reachable_tiles(&unit).contains(&p) {
                    return Err(illegal("destination not reachable"));
                }
                p
            }
            None => unit.pos,
        };
        if let Some(t) = action.target_id {
            let target = self.unit(t).ok_or_else(|| illegal("no such target"))?;
            let heals = unit.kind.heals();
            if target.id == unit.id || (target.owner == unit.owner) != heals {
                return Err(illegal(if heals {
                    "heal target must be another allied unit"
                } else {
                    "attack target must be an enemy unit"
                }));
            }
            let range = self.spec(unit.kind).target_range(unit.kind);
            if range <= 0 || from.manhattan(target.pos) > range {
                return Err(illegal("target out of range"));
            }
        }
        Ok(())
    }

    /// Applies a known-legal action. Callers must have taken it from the legal set.
    pub(crate) fn successor(&self, action: &UnitAction) -> GameState {
        let mut next = self.clone();
        next.step_mut(action);
        next
    }

    fn step_mut(&mut self, action: &UnitAction) {
        let idx = self.unit_index(action.unit_id).expect("acting unit exists");
        let kind = self.units[idx].kind;
        if let Some(p) = action.move_to {
            self.units[idx].pos = p;
        }
        if let Some(t) = action.target_id {
            let ti = self.unit_index(t).expect("target exists");
            let spec = *self.spec(kind);
            if kind.heals() {
                let max = self.spec(self.units[ti].kind).max_health;
                self.units[ti].health = (self.units[ti].health + spec.heal_strength).min(max);
            } else {
                self.units[ti].health -= spec.attack_damage;
                if self.units[ti].health <= 0 {
                    self.units.remove(ti);
                }
            }
        }
        self.acted |= 1 << action.unit_id;
        if self.unacted_units().next().is_none() {
            if self.active == 1 {
                self.turn += 1;
            }
            self.active = 1 - self.active;
            self.acted = 0;
        }
    }
}

pub fn outcome(state: &GameState) -> Outcome {
    let k0 = state.king(0).is_some();
    let k1 = state.king(1).is_some();
    match (k0, k1) {
        (true, false) => Outcome::Win(0),
        (false, true) => Outcome::Win(1),
        // Both kings gone only happens in hand-built states.
        (false, false) => Outcome::Draw,
        (true, true) if state.turn >= MAX_TURNS => Outcome::Draw,
        (true, true) => Outcome::Ongoing,
    }
}

/// Forward model with its own call counter. One instance per game or search context.
#[derive(Debug, Clone, Default)]
pub struct ForwardModel {
    calls: u64,
}

impl ForwardModel {
    pub fn new() -> Self {
        Self::default()
    }

    /// Number of successful simulations performed so far.
    pub fn calls(&self) -> u64 {
        self.calls
    }

    /// Validated step. Rejected actions do not advance the counter.
    pub fn apply(
        &mut self,
        state: &GameState,
        action: &UnitAction,
    ) -> Result<GameState, EngineError> {
        state.is_legal(action)?;
        Ok(self.apply_trusted(state, action))
    }

    /// Step for actions drawn from [`GameState::legal_actions_into`] on the same state.
    pub fn apply_trusted(&mut self, state: &GameState, action: &UnitAction) -> GameState {
        debug_assert!(state.is_legal(action).is_ok(), "illegal action {action}");
        self.calls += 1;
        state.successor(action)
    }

    /// In-place variant of [`ForwardModel::apply_trusted`].
    pub fn step_trusted(&mut self, state: &mut GameState, action: &UnitAction) {
        debug_assert!(state.is_legal(action).is_ok(), "illegal action {action}");
        self.calls += 1;
        state.step_mut(action);
    }
}
