use rand::seq::SliceRandom;
use rand::Rng;

use crate::engine::{GameState, Player, UnitId};

/// Fixed permutation of one player's units, drawn once per game.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnitOrder {
    player: Player,
    units: Vec<UnitId>,
}

impl UnitOrder {
    pub fn new(player: Player, units: Vec<UnitId>) -> Self {
        UnitOrder { player, units }
    }

    /// Uniformly shuffled order over `player`'s living units.
    pub fn random<R: Rng + ?Sized>(state: &GameState, player: Player, rng: &mut R) -> Self {
        let mut units: Vec<UnitId> = state.units_of(player).map(|u| u.id).collect();
        units.shuffle(rng);
        UnitOrder { player, units }
    }

    /// Ids in the order's natural (id-sorted) arrangement.
    pub fn by_id(state: &GameState, player: Player) -> Self {
        UnitOrder {
            player,
            units: state.units_of(player).map(|u| u.id).collect(),
        }
    }

    pub fn player(&self) -> Player {
        self.player
    }

    pub fn units(&self) -> &[UnitId] {
        &self.units
    }

    /// First unit in the order that is alive and has not acted, with its slot.
    /// Dead units are skipped; units missing from the order come last.
    pub fn next_actor(&self, state: &GameState) -> Option<(u32, UnitId)> {
        if state.active_player() != self.player {
            return None;
        }
        for (slot, &id) in self.units.iter().enumerate() {
            if state.unit(id).is_some() && !state.has_acted(id) {
                return Some((slot as u32, id));
            }
        }
        state
            .unacted_units()
            .find(|u| !self.units.contains(&u.id))
            .map(|u| (self.units.len() as u32, u.id))
    }
}
