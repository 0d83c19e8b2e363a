use crate::engine::{GameState, Grid, Pos, Unit, UnitAction, UnitId};

/// Tunables of the scripted combat policy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CombatConfig {
    /// Manhattan radius used when counting units around an enemy.
    pub isolation_radius: i32,
}

impl Default for CombatConfig {
    fn default() -> Self {
        CombatConfig {
            isolation_radius: 2,
        }
    }
}

/// `(my units near e) - (e's allies near e)` for each enemy unit `e`.
pub fn isolation_scores(state: &GameState, cfg: &CombatConfig) -> Vec<(UnitId, i32)> {
    let me = state.active_player();
    state
        .units_of(1 - me)
        .map(|e| {
            let near = |u: &&Unit| u.id != e.id && u.pos.manhattan(e.pos) <= cfg.isolation_radius;
            let mine = state.units_of(me).filter(near).count() as i32;
            let theirs = state.units_of(1 - me).filter(near).count() as i32;
            (e.id, mine - theirs)
        })
        .collect()
}

/// Enemy with the highest isolation score, lowest id on ties.
pub fn pick_target(state: &GameState, cfg: &CombatConfig) -> Option<UnitId> {
    isolation_scores(state, cfg)
        .into_iter()
        .max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0)))
        .map(|(id, _)| id)
}

/// Strongest ally of `healer`: highest attack damage, then current health, then lowest id.
fn strongest_allies<'a>(state: &'a GameState, healer: &Unit) -> Vec<&'a Unit> {
    let mut allies: Vec<&Unit> = state
        .units_of(healer.owner)
        .filter(|u| u.id != healer.id)
        .collect();
    allies.sort_by(|a, b| {
        let da = state.spec(a.kind).attack_damage;
        let db = state.spec(b.kind).attack_damage;
        db.cmp(&da)
            .then(b.health.cmp(&a.health))
            .then(a.id.cmp(&b.id))
    });
    allies
}

fn post_move(action: &UnitAction, from: Pos) -> Pos {
    action.move_to.unwrap_or(from)
}

/// Among `candidates`, the action whose destination is closest (by terrain
/// path distance) to `goal`; ties keep the earliest action.
fn closest_to<'a>(
    grid: &Grid,
    goal: Pos,
    from: Pos,
    candidates: impl Iterator<Item = &'a UnitAction>,
) -> Option<UnitAction> {
    let field = grid.distance_field(goal);
    let dist = |p: Pos| field[grid.index(p)].map_or(u64::MAX, u64::from);
    let mut best: Option<(u64, i32, UnitAction)> = None;
    for a in candidates {
        let p = post_move(a, from);
        let key = (dist(p), p.manhattan(goal));
        if best.as_ref().is_none_or(|b| key < (b.0, b.1)) {
            best = Some((key.0, key.1, *a));
        }
    }
    best.map(|b| b.2)
}

/// Next action of the scripted combat policy for the first unacted unit.
pub fn combat_action(state: &GameState, cfg: &CombatConfig) -> Option<UnitAction> {
    let unit = *state.unacted_units().next()?;
    let legal = state.legal_unit_actions(unit.id).ok()?;
    let grid = state.grid();

    if unit.kind.heals() {
        let allies = strongest_allies(state, &unit);
        for ally in &allies {
            if ally.health >= state.spec(ally.kind).max_health {
                continue;
            }
            let heals = legal.iter().filter(|a| a.target_id == Some(ally.id));
            if let Some(a) = closest_to(grid, ally.pos, unit.pos, heals) {
                return Some(a);
            }
        }
        return match allies.first() {
            Some(ally) => closest_to(
                grid,
                ally.pos,
                unit.pos,
                legal.iter().filter(|a| a.target_id.is_none()),
            ),
            None => Some(legal[0]),
        };
    }

    let Some(target) = pick_target(state, cfg).and_then(|id| state.unit(id)) else {
        return Some(legal[0]);
    };
    let attacks = legal.iter().filter(|a| a.target_id == Some(target.id));
    if let Some(a) = closest_to(grid, target.pos, unit.pos, attacks) {
        return Some(a);
    }
    closest_to(
        grid,
        target.pos,
        unit.pos,
        legal.iter().filter(|a| a.target_id.is_none()),
    )
}
