use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;

use super::grid::{Grid, Pos};
use super::state::{GameState, Player, Unit, MAX_UNITS};
use super::units::{GameConfig, UnitKind};
use super::EngineError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Placement {
    pub player: Player,
    pub kind: UnitKind,
    pub pos: Pos,
}

/// Parsed level file: a map reference plus unit placements.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LevelFile {
    pub map: String,
    pub placements: Vec<Placement>,
}

impl LevelFile {
    /// Format: `map <path>` followed by `<player> <TypeName> <x> <y>` lines. `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, EngineError> {
        let mut lines = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or("").trim())
            .enumerate()
            .filter(|(_, l)| !l.is_empty());
        let (_, first) = lines
            .next()
            .ok_or_else(|| EngineError::Level("empty level file".into()))?;
        let map = first
            .strip_prefix("map")
            .map(str::trim)
            .filter(|m| !m.is_empty())
            .ok_or_else(|| EngineError::Level(format!("expected `map <path>`, found {first:?}")))?
            .to_string();

        let mut placements = Vec::new();
        for (n, line) in lines {
            let bad = |why: &str| EngineError::Level(format!("line {}: {why}: {line:?}", n + 1));
            let fields: Vec<&str> = line.split_whitespace().collect();
            let [player, kind, x, y] = fields[..] else {
                return Err(bad("expected `<player> <TypeName> <x> <y>`"));
            };
            let player: Player = player
                .parse()
                .ok()
                .filter(|&p| p <= 1)
                .ok_or_else(|| bad("player must be 0 or 1"))?;
            let kind = UnitKind::from_str(kind).map_err(|_| bad("unknown unit type"))?;
            let x = x.parse().map_err(|_| bad("bad x coordinate"))?;
            let y = y.parse().map_err(|_| bad("bad y coordinate"))?;
            placements.push(Placement {
                player,
                kind,
                pos: Pos::new(x, y),
            });
        }
        Ok(LevelFile { map, placements })
    }

    /// Turns placements into the initial state. Unit ids follow placement order.
    pub fn build(
        &self,
        grid: Arc<Grid>,
        config: Arc<GameConfig>,
    ) -> Result<GameState, EngineError> {
        if self.placements.len() > MAX_UNITS {
            return Err(EngineError::Level(format!(
                "{} placements exceed the {MAX_UNITS}-unit limit",
                self.placements.len()
            )));
        }
        for (i, p) in self.placements.iter().enumerate() {
            match grid.tile(p.pos) {
                None => {
                    return Err(EngineError::Level(format!(
                        "{} at {} is out of bounds",
                        p.kind, p.pos
                    )))
                }
                Some(super::Tile::Blocked) => {
                    return Err(EngineError::Level(format!(
                        "{} at {} is on a blocked cell",
                        p.kind, p.pos
                    )))
                }
                Some(super::Tile::Floor) => {}
            }
            if self.placements[..i].iter().any(|q| q.pos == p.pos) {
                return Err(EngineError::Level(format!("two placements at {}", p.pos)));
            }
        }
        for player in 0..2 {
            let kings = self
                .placements
                .iter()
                .filter(|p| p.player == player && p.kind == UnitKind::King)
                .count();
            if kings != 1 {
                return Err(EngineError::Level(format!(
                    "player {player} has {kings} kings, expected exactly 1"
                )));
            }
        }
        let units = self
            .placements
            .iter()
            .enumerate()
            .map(|(i, p)| Unit {
                id: i as u32,
                owner: p.player,
                kind: p.kind,
                pos: p.pos,
                health: config.spec(p.kind).max_health,
            })
            .collect();
        GameState::new(grid, config, units)
    }
}

impl fmt::Display for LevelFile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "map {}", self.map)?;
        for p in &self.placements {
            writeln!(f, "{} {} {} {}", p.player, p.kind, p.pos.x, p.pos.y)?;
        }
        Ok(())
    }
}

pub fn load_level(
    text: &str,
    grid: Arc<Grid>,
    config: Arc<GameConfig>,
) -> Result<GameState, EngineError> {
    LevelFile::parse(text)?.build(grid, config)
}

/// Army composition such as `K1W1A1H`, `KWAH`, `K10W`: one King plus counted unit letters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Composition {
    counts: Vec<(UnitKind, usize)>,
}

impl Composition {
    pub fn units(&self) -> impl Iterator<Item = UnitKind> + '_ {
        self.counts
            .iter()
            .flat_map(|&(k, n)| std::iter::repeat_n(k, n))
    }

    pub fn unit_count(&self) -> usize {
        self.counts.iter().map(|&(_, n)| n).sum()
    }
}

impl FromStr for Composition {
    type Err = EngineError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = |why: &str| EngineError::Config(format!("composition {s:?}: {why}"));
        let mut counts: Vec<(UnitKind, usize)> = Vec::new();
        let mut digits = String::new();
        for c in s.trim().chars() {
            if c.is_ascii_digit() {
                digits.push(c);
                continue;
            }
            let kind = UnitKind::ALL
                .into_iter()
                .find(|k| k.letter() == c.to_ascii_uppercase())
                .ok_or_else(|| bad("unknown unit letter"))?;
            let n = if digits.is_empty() {
                1
            } else {
                digits.parse().map_err(|_| bad("bad count"))?
            };
            digits.clear();
            if n == 0 {
                continue;
            }
            match counts.iter_mut().find(|(k, _)| *k == kind) {
                Some((_, m)) => *m += n,
                None => counts.push((kind, n)),
            }
        }
        if !digits.is_empty() {
            return Err(bad("trailing count without a unit letter"));
        }
        let kings = counts
            .iter()
            .find(|(k, _)| *k == UnitKind::King)
            .map_or(0, |&(_, n)| n);
        if kings != 1 {
            return Err(bad("exactly one King per player is required"));
        }
        counts.sort_by_key(|&(k, _)| k);
        Ok(Composition { counts })
    }
}

impl fmt::Display for Composition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &(k, n) in &self.counts {
            if k == UnitKind::King {
                write!(f, "K")?;
            } else {
                write!(f, "{n}{}", k.letter())?;
            }
        }
        Ok(())
    }
}

/// Random level on the largest connected floor region: player 0 in the first half
/// of the map's longer axis, player 1 in the second half, uniform and collision-free.
pub fn random_level<R: Rng + ?Sized>(
    grid: &Grid,
    map_ref: &str,
    composition: &Composition,
    rng: &mut R,
) -> Result<LevelFile, EngineError> {
    let region = grid.largest_region();
    let split_x = grid.width() >= grid.height();
    let half = |p: &Pos| -> Player {
        let (c, len) = if split_x {
            (p.x, grid.width())
        } else {
            (p.y, grid.height())
        };
        u8::from(2 * c >= len)
    };
    let mut placements = Vec::new();
    for player in 0..2u8 {
        let mut cells: Vec<Pos> = region
            .iter()
            .copied()
            .filter(|p| half(p) == player)
            .collect();
        if cells.len() < composition.unit_count() {
            return Err(EngineError::Level(format!(
                "player {player} half has {} floor cells, {} units requested",
                cells.len(),
                composition.unit_count()
            )));
        }
        cells.shuffle(rng);
        for (kind, pos) in composition.units().zip(cells) {
            placements.push(Placement { player, kind, pos });
        }
    }
    Ok(LevelFile {
        map: map_ref.to_string(),
        placements,
    })
}
