use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::EngineError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum UnitKind {
    King,
    Warrior,
    Archer,
    Healer,
}

impl UnitKind {
    pub const ALL: [UnitKind; 4] = [
        UnitKind::King,
        UnitKind::Warrior,
        UnitKind::Archer,
        UnitKind::Healer,
    ];

    pub fn name(self) -> &'static str {
        match self {
            UnitKind::King => "King",
            UnitKind::Warrior => "Warrior",
            UnitKind::Archer => "Archer",
            UnitKind::Healer => "Healer",
        }
    }

    /// Single-letter code used in army compositions (`K1W1A1H`).
    pub fn letter(self) -> char {
        self.name().chars().next().unwrap()
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn action_types(self) -> &'static [ActionType] {
        match self {
            UnitKind::Healer => &[ActionType::Move, ActionType::Heal, ActionType::DoNothing],
            _ => &[ActionType::Move, ActionType::Attack, ActionType::DoNothing],
        }
    }

    pub fn heals(self) -> bool {
        self == UnitKind::Healer
    }
}

impl fmt::Display for UnitKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for UnitKind {
    type Err = EngineError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        UnitKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| EngineError::Config(format!("unknown unit type {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActionType {
    Move,
    Attack,
    Heal,
    DoNothing,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UnitTypeSpec {
    pub max_health: i32,
    pub move_range: i32,
    #[serde(default)]
    pub attack_range: i32,
    #[serde(default)]
    pub attack_damage: i32,
    #[serde(default)]
    pub heal_range: i32,
    #[serde(default)]
    pub heal_strength: i32,
}

impl UnitTypeSpec {
    /// Range of the unit's targeted action (attack or heal).
    pub fn target_range(&self, kind: UnitKind) -> i32 {
        if kind.heals() {
            self.heal_range
        } else {
            self.attack_range
        }
    }
}

/// Attribute table for all unit types.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GameConfig {
    specs: [UnitTypeSpec; 4],
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "PascalCase", deny_unknown_fields)]
struct ConfigFile {
    king: UnitTypeSpec,
    warrior: UnitTypeSpec,
    archer: UnitTypeSpec,
    healer: UnitTypeSpec,
}

impl Default for GameConfig {
    fn default() -> Self {
        GameConfig {
            specs: [
                UnitTypeSpec {
                    max_health: 100,
                    move_range: 2,
                    attack_range: 2,
                    attack_damage: 20,
                    heal_range: 0,
                    heal_strength: 0,
                },
                UnitTypeSpec {
                    max_health: 120,
                    move_range: 2,
                    attack_range: 1,
                    attack_damage: 30,
                    heal_range: 0,
                    heal_strength: 0,
                },
                UnitTypeSpec {
                    max_health: 80,
                    move_range: 2,
                    attack_range: 4,
                    attack_damage: 20,
                    heal_range: 0,
                    heal_strength: 0,
                },
                UnitTypeSpec {
                    max_health: 60,
                    move_range: 2,
                    attack_range: 0,
                    attack_damage: 0,
                    heal_range: 2,
                    heal_strength: 20,
                },
            ],
        }
    }
}

impl GameConfig {
    pub fn new(specs: [UnitTypeSpec; 4]) -> Result<Self, EngineError> {
        for kind in UnitKind::ALL {
            let s = &specs[kind.index()];
            let fields = [
                s.max_health,
                s.move_range,
                s.attack_range,
                s.attack_damage,
                s.heal_range,
                s.heal_strength,
            ];
            if fields.iter().any(|&v| v < 0) || s.max_health == 0 {
                return Err(EngineError::Config(format!(
                    "{kind}: attributes must be non-negative and max_health positive"
                )));
            }
            let heal_fields = s.heal_range != 0 || s.heal_strength != 0;
            let attack_fields = s.attack_range != 0 || s.attack_damage != 0;
            if kind.heals() && attack_fields {
                return Err(EngineError::Config(
                    "Healer cannot have attack_range or attack_damage".into(),
                ));
            }
            if !kind.heals() && heal_fields {
                return Err(EngineError::Config(format!(
                    "{kind} cannot have heal_range or heal_strength"
                )));
            }
        }
        Ok(GameConfig { specs })
    }

    pub fn spec(&self, kind: UnitKind) -> &UnitTypeSpec {
        &self.specs[kind.index()]
    }

    /// Parses the key-value attribute table (one TOML table per unit type).
    pub fn parse(text: &str) -> Result<Self, EngineError> {
        let file: ConfigFile =
            toml::from_str(text).map_err(|e| EngineError::Config(e.to_string()))?;
        GameConfig::new([file.king, file.warrior, file.archer, file.healer])
    }

    pub fn to_text(&self) -> String {
        let file = ConfigFile {
            king: self.specs[0],
            warrior: self.specs[1],
            archer: self.specs[2],
            healer: self.specs[3],
        };
        toml::to_string(&file).expect("attribute table serializes")
    }
}
