mod common;

use std::sync::Arc;

use common::engine_checks::{check_state, draw_sweep, exhaustive_sweep, partial_turn_sweep, Tally};
use common::unit;
use elastic_mcts::engine::{ForwardModel, GameConfig, GameState, Grid, Pos, UnitAction, UnitKind};
use proptest::prelude::*;

use UnitKind::{Archer, Healer, King, Warrior};

#[test]
fn exhaustive_small_boards() {
    exhaustive_sweep();
}

#[test]
fn partial_turns_are_exhaustive_too() {
    partial_turn_sweep();
}

#[test]
fn hundred_turn_draw_on_every_placement() {
    draw_sweep();
}

#[test]
fn healing_clamps_at_max_health() {
    let config = Arc::new(GameConfig::default());
    let grid = Arc::new(Grid::open(5, 5));
    let heal = config.spec(Healer).heal_strength;
    let max = config.spec(Warrior).max_health;
    for hp in 1..=max {
        let units = vec![
            unit(0, 0, King, Pos::new(0, 0), 100),
            unit(1, 0, Warrior, Pos::new(2, 2), hp),
            unit(2, 0, Healer, Pos::new(2, 3), 60),
            unit(3, 1, King, Pos::new(4, 4), 100),
        ];
        let s = GameState::new(grid.clone(), config.clone(), units).unwrap();
        let a = UnitAction {
            unit_id: 2,
            move_to: None,
            target_id: Some(1),
        };
        let n = ForwardModel::new().apply(&s, &a).unwrap();
        assert_eq!(n.unit(1).unwrap().health, (hp + heal).min(max));
    }
}

fn random_playout(seed: u64, picks: &[usize]) -> (Vec<String>, u64) {
    let config = Arc::new(GameConfig::default());
    let grid = Arc::new(Grid::from_rows(&[".....", ".@...", ".....", "...@.", "....."]).unwrap());
    let cells: Vec<Pos> = grid.floor_cells().collect();
    let kinds = [King, Archer, King, Warrior];
    let mut used = Vec::new();
    let mut units = Vec::new();
    for (i, k) in kinds.iter().enumerate() {
        let mut c = (seed as usize).wrapping_mul(31).wrapping_add(i * 7) % cells.len();
        while used.contains(&c) {
            c = (c + 1) % cells.len();
        }
        used.push(c);
        units.push(unit(
            i as u32,
            (i / 2) as u8,
            *k,
            cells[c],
            config.spec(*k).max_health,
        ));
    }
    let mut s = GameState::new(grid, config, units).unwrap();
    let mut fm = ForwardModel::new();
    let mut log = vec![s.canonical()];
    for &p in picks {
        if s.outcome().is_terminal() {
            break;
        }
        let id = s.first_unacted().unwrap();
        let legal = s.legal_unit_actions(id).unwrap();
        let a = legal[p % legal.len()];
        s = fm.apply(&s, &a).unwrap();
        log.push(s.canonical());
    }
    (log, fm.calls())
}

proptest! {
    #[test]
    fn playouts_replay_identically(seed in 0u64..1000, picks in prop::collection::vec(0usize..64, 0..200)) {
        let (a, calls_a) = random_playout(seed, &picks);
        let (b, calls_b) = random_playout(seed, &picks);
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(calls_a, calls_b);
        prop_assert_eq!(calls_a as usize, a.len() - 1);
    }

    #[test]
    fn random_states_satisfy_every_property(seed in 0u64..500, picks in prop::collection::vec(0usize..64, 0..40)) {
        let config = Arc::new(GameConfig::default());
        let grid = Arc::new(Grid::open(4, 4));
        let cells: Vec<Pos> = grid.floor_cells().collect();
        let army = [(0u8, King), (0, Healer), (1, King), (1, Archer)];
        let mut units = Vec::new();
        for (i, &(owner, kind)) in army.iter().enumerate() {
            let c = (seed as usize * (i + 3) + i * 5) % cells.len();
            let pos = (0..cells.len()).map(|k| cells[(c + k) % cells.len()])
                .find(|p| units.iter().all(|u: &elastic_mcts::engine::Unit| u.pos != *p)).unwrap();
            units.push(unit(i as u32, owner, kind, pos, config.spec(kind).max_health / 2));
        }
        let mut s = GameState::new(grid, config, units).unwrap();
        let mut fm = ForwardModel::new();
        let mut tally = Tally::default();
        for &p in &picks {
            if s.outcome().is_terminal() {
                break;
            }
            check_state(&s, true, &mut tally);
            let id = s.first_unacted().unwrap();
            let legal = s.legal_unit_actions(id).unwrap();
            s = fm.apply(&s, &legal[p % legal.len()]).unwrap();
        }
    }
}
