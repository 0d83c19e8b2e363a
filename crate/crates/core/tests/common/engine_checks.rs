//! Exhaustive engine checks over small boards, shared by the property
//! suite and the acceptance run. Violations panic with the offending state.

use std::collections::HashSet;
use std::sync::Arc;

use super::{placements, small_boards};
use elastic_mcts::engine::{
    EngineError, ForwardModel, GameConfig, GameState, Grid, Outcome, Pos, UnitAction, UnitKind,
    MAX_TURNS,
};

use UnitKind::{Archer, Healer, King, Warrior};

fn acted(s: &GameState) -> Vec<u32> {
    s.units()
        .iter()
        .filter(|u| s.has_acted(u.id))
        .map(|u| u.id)
        .collect()
}

/// Rebuilding from parts re-runs every board validation.
fn revalidate(s: &GameState) -> Result<(), String> {
    GameState::from_parts(
        s.grid().clone(),
        s.config().clone(),
        s.units().to_vec(),
        s.turn(),
        s.active_player(),
        &acted(s),
    )
    .map(|_| ())
    .map_err(|e| format!("successor invalid: {e}"))
}

/// The expected successor, computed from the rules rather than the engine.
fn expected_units(s: &GameState, a: &UnitAction) -> Vec<(u32, Pos, i32)> {
    let actor = *s.unit(a.unit_id).unwrap();
    let spec = *s.spec(actor.kind);
    let mut out = Vec::new();
    for u in s.units() {
        let mut pos = u.pos;
        let mut hp = u.health;
        if u.id == actor.id {
            pos = a.move_to.unwrap_or(pos);
        }
        if Some(u.id) == a.target_id {
            if actor.kind == Healer {
                hp = (hp + spec.heal_strength).min(s.spec(u.kind).max_health);
            } else {
                hp -= spec.attack_damage;
            }
        }
        if hp > 0 {
            out.push((u.id, pos, hp));
        }
    }
    out
}

/// Every action the rules could conceivably name for `unit`: stay or any
/// board cell, combined with no target or any unit id (including bogus ones).
fn candidates(s: &GameState, id: u32) -> Vec<UnitAction> {
    let g = s.grid();
    let mut moves = vec![None];
    for y in -1..=g.height() {
        for x in -1..=g.width() {
            moves.push(Some(Pos::new(x, y)));
        }
    }
    let mut targets = vec![None];
    targets.extend((0..6).map(Some));
    let mut out = Vec::new();
    for &m in &moves {
        for &t in &targets {
            out.push(UnitAction {
                unit_id: id,
                move_to: m,
                target_id: t,
            });
        }
    }
    out
}

/// Rule-level legality, written independently of the engine's enumeration.
fn rules_allow(s: &GameState, a: &UnitAction) -> bool {
    let Some(u) = s.unit(a.unit_id) else {
        return false;
    };
    if u.owner != s.active_player() || s.has_acted(u.id) || s.outcome() != Outcome::Ongoing {
        return false;
    }
    let spec = s.spec(u.kind);
    let from = match a.move_to {
        None => u.pos,
        Some(p) => {
            // BFS distance over free floor cells.
            let mut dist = vec![u.pos];
            let mut frontier = vec![u.pos];
            let mut ok = false;
            for _ in 0..spec.move_range {
                let mut next = Vec::new();
                for q in &frontier {
                    for n in [
                        Pos::new(q.x + 1, q.y),
                        Pos::new(q.x - 1, q.y),
                        Pos::new(q.x, q.y + 1),
                        Pos::new(q.x, q.y - 1),
                    ] {
                        if s.grid().is_floor(n) && s.unit_at(n).is_none() && !dist.contains(&n) {
                            dist.push(n);
                            next.push(n);
                            ok |= n == p;
                        }
                    }
                }
                frontier = next;
            }
            if !ok {
                return false;
            }
            p
        }
    };
    match a.target_id {
        None => true,
        Some(t) => {
            let Some(t) = s.unit(t) else { return false };
            let (range, wants_ally) = if u.kind == Healer {
                (spec.heal_range, true)
            } else {
                (spec.attack_range, false)
            };
            t.id != u.id
                && (t.owner == u.owner) == wants_ally
                && (from.x - t.pos.x).abs() + (from.y - t.pos.y).abs() <= range
        }
    }
}

#[derive(Debug, Default)]
pub struct Tally {
    pub states: usize,
    pub steps: usize,
}

/// Runs every property on one state, for every unit of the active player.
pub fn check_state(s: &GameState, closure_scan: bool, tally: &mut Tally) {
    tally.states += 1;
    let config = s.config().clone();
    for u in s
        .units()
        .iter()
        .filter(|u| u.owner == s.active_player() && !s.has_acted(u.id))
    {
        let legal = s.legal_unit_actions(u.id).unwrap();
        assert_eq!(legal[0], UnitAction::do_nothing(u.id));
        let set: HashSet<UnitAction> = legal.iter().copied().collect();
        assert_eq!(
            set.len(),
            legal.len(),
            "duplicate actions\n{}",
            s.canonical()
        );
        let keys: HashSet<u64> = legal.iter().map(UnitAction::key).collect();
        assert_eq!(keys.len(), legal.len(), "action keys collide");

        if closure_scan {
            for c in candidates(s, u.id) {
                let rules = rules_allow(s, &c);
                assert_eq!(set.contains(&c), rules, "{c}\n{}", s.canonical());
                assert_eq!(s.is_legal(&c).is_ok(), rules, "{c}\n{}", s.canonical());
                if !rules {
                    let mut fm = ForwardModel::new();
                    assert!(fm.apply(s, &c).is_err());
                    assert_eq!(fm.calls(), 0, "rejected action was counted");
                }
            }
        }

        for a in &legal {
            tally.steps += 1;
            let mut fm = ForwardModel::new();
            let n1 = fm.apply(s, a).unwrap();
            assert_eq!(fm.calls(), 1);
            let n2 = fm.apply(s, a).unwrap();
            assert_eq!(fm.calls(), 2);
            assert_eq!(n1, n2, "nondeterministic step");
            let mut n3 = s.clone();
            fm.step_trusted(&mut n3, a);
            assert_eq!(fm.calls(), 3);
            assert_eq!(n1, n3, "in-place step differs");

            revalidate(&n1).unwrap();
            let got: Vec<(u32, Pos, i32)> =
                n1.units().iter().map(|v| (v.id, v.pos, v.health)).collect();
            assert_eq!(got, expected_units(s, a), "{a}\n{}", s.canonical());
            for v in n1.units() {
                let max = config.spec(v.kind).max_health;
                assert!(
                    v.health > 0 && v.health <= max,
                    "health {} of {}",
                    v.health,
                    v.id
                );
            }
            // Turn bookkeeping: the side passes once every living unit has acted.
            let unacted_after = s
                .units_of(s.active_player())
                .filter(|w| w.id != a.unit_id && !s.has_acted(w.id))
                .count();
            if unacted_after == 0 {
                assert_eq!(n1.active_player(), 1 - s.active_player());
                assert!(acted(&n1).is_empty());
                let turn = s.turn() + u32::from(s.active_player() == 1);
                assert_eq!(n1.turn(), turn);
            } else {
                assert_eq!(n1.active_player(), s.active_player());
                assert_eq!(n1.turn(), s.turn());
                assert!(n1.has_acted(a.unit_id));
            }
            let kings = (n1.king(0).is_some(), n1.king(1).is_some());
            let expect = match kings {
                (true, false) => Outcome::Win(0),
                (false, true) => Outcome::Win(1),
                (false, false) => Outcome::Draw,
                (true, true) if n1.turn() >= MAX_TURNS => Outcome::Draw,
                (true, true) => Outcome::Ongoing,
            };
            assert_eq!(n1.outcome(), expect);
        }
    }
}

pub fn with_active(s: &GameState, turn: u32, active: u8) -> GameState {
    GameState::from_parts(
        s.grid().clone(),
        s.config().clone(),
        s.units().to_vec(),
        turn,
        active,
        &[],
    )
    .unwrap()
}

pub fn exhaustive_sweep() -> Tally {
    let config = Arc::new(GameConfig::default());
    let armies: [&[(u8, UnitKind)]; 4] = [
        &[(0, King), (1, King)],
        &[(0, King), (0, Warrior), (1, King)],
        &[(0, King), (0, Healer), (1, King), (1, Archer)],
        &[(0, Archer), (0, King), (1, Warrior), (1, King)],
    ];
    let mut tally = Tally::default();
    for grid in &small_boards() {
        for (k, army) in armies.iter().enumerate() {
            // Four-unit armies on the larger boards skip the candidate scan,
            // which the smaller boards cover.
            let big = grid.floor_count() > 16 && army.len() == 4;
            let scan = grid.floor_count() <= 9 || army.len() <= 3;
            if big && k == 3 {
                continue;
            }
            for pct in [20, 100] {
                if big && pct == 100 {
                    continue;
                }
                for s in placements(grid, &config, army, pct) {
                    for active in 0..2u8 {
                        let s = with_active(&s, 7, active);
                        check_state(&s, scan, &mut tally);
                    }
                }
            }
        }
    }
    assert!(tally.states > 100_000, "{} states", tally.states);
    assert!(tally.steps > 1_000_000, "{} steps", tally.steps);
    tally
}

pub fn partial_turn_sweep() -> Tally {
    // Units that already acted cannot act again and do not block the side's pass.
    let config = Arc::new(GameConfig::default());
    let grid = Arc::new(Grid::open(3, 3));
    let mut tally = Tally::default();
    for s in placements(
        &grid,
        &config,
        &[(0, King), (0, Warrior), (0, Healer), (1, King)],
        50,
    ) {
        for done in [vec![0], vec![1], vec![0, 2]] {
            let s = GameState::from_parts(
                s.grid().clone(),
                config.clone(),
                s.units().to_vec(),
                3,
                0,
                &done,
            )
            .unwrap();
            for &d in &done {
                assert!(matches!(
                    s.legal_unit_actions(d),
                    Err(EngineError::AlreadyActed(_))
                ));
            }
            check_state(&s, true, &mut tally);
        }
    }
    assert!(tally.states > 1000);
    tally
}

/// Every placement at turn 99 ends in a draw once player 1 passes.
pub fn draw_sweep() -> usize {
    let config = Arc::new(GameConfig::default());
    let mut checked = 0;
    for grid in small_boards() {
        for s in placements(&grid, &config, &[(0, King), (1, King), (1, Warrior)], 100) {
            let last = GameState::from_parts(
                grid.clone(),
                config.clone(),
                s.units().to_vec(),
                MAX_TURNS - 1,
                1,
                &[],
            )
            .unwrap();
            let mut fm = ForwardModel::new();
            let mut st = last;
            for id in [1, 2] {
                st = fm.apply(&st, &UnitAction::do_nothing(id)).unwrap();
            }
            assert_eq!(st.turn(), MAX_TURNS);
            assert_eq!(st.outcome(), Outcome::Draw);
            assert!(matches!(
                st.legal_unit_actions(0),
                Err(EngineError::GameOver)
            ));
            assert_eq!(fm.calls(), 2);
            // One turn earlier nothing ends.
            let early = with_active(&s, MAX_TURNS - 2, 1);
            let mut st = early;
            for id in [1, 2] {
                st = fm.apply(&st, &UnitAction::do_nothing(id)).unwrap();
            }
            assert_eq!(st.outcome(), Outcome::Ongoing);
            checked += 1;
        }
    }
    assert!(checked > 1000);
    checked
}
