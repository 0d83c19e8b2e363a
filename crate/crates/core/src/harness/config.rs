use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::abstraction::TransitionErrorMode;
use crate::agents::{make_agent, Agent, AgentKind, CombatConfig};
use crate::engine::{load_map, random_level, Composition, GameConfig, GameState, Grid, LevelFile};
use crate::search::{AbstractionCutoff, SearchParams};

use super::HarnessError;

/// One side of a pairing: an agent kind plus optional overrides of its preset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentConfig {
    pub kind: AgentKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rollout_len: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fm_budget: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub batch: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_abs: Option<AbstractionCutoff>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta_r: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta_t: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transition_error_mode: Option<TransitionErrorMode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub isolation_radius: Option<i32>,
}

impl AgentConfig {
    pub fn new(kind: AgentKind) -> Self {
        AgentConfig {
            kind,
            label: None,
            c: None,
            rollout_len: None,
            fm_budget: None,
            batch: None,
            alpha_abs: None,
            eta_r: None,
            eta_t: None,
            transition_error_mode: None,
            isolation_radius: None,
        }
    }

    pub fn label(&self) -> String {
        self.label
            .clone()
            .unwrap_or_else(|| self.kind.name().to_string())
    }

    /// The kind's preset with this config's overrides applied.
    pub fn params(&self, default_budget: u64) -> SearchParams {
        let p = self.kind.preset();
        SearchParams {
            c: self.c.unwrap_or(p.c),
            rollout_len: self.rollout_len.unwrap_or(p.rollout_len),
            fm_budget: self.fm_budget.unwrap_or(default_budget),
            batch: self.batch.unwrap_or(p.batch),
            alpha_abs: self.alpha_abs.unwrap_or(p.alpha_abs),
            eta_r: self.eta_r.unwrap_or(p.eta_r),
            eta_t: self.eta_t.unwrap_or(p.eta_t),
            transition_error_mode: self
                .transition_error_mode
                .unwrap_or(p.transition_error_mode),
            abstraction_enabled: p.abstraction_enabled,
        }
    }

    pub fn combat(&self) -> CombatConfig {
        let d = CombatConfig::default();
        CombatConfig {
            isolation_radius: self.isolation_radius.unwrap_or(d.isolation_radius),
        }
    }

    pub fn build(&self, default_budget: u64) -> Box<dyn Agent> {
        make_agent(self.kind, self.params(default_budget), self.combat())
    }
}

/// Where the levels of an experiment come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelsConfig {
    /// Level files to load.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub files: Vec<PathBuf>,
    /// Map to generate levels on, when `files` is empty.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub map: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub composition: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_name")]
    pub name: String,
    /// Exactly two agents; win rates are reported for both.
    pub agents: Vec<AgentConfig>,
    pub levels: LevelsConfig,
    pub seeds: Vec<u64>,
    #[serde(default = "default_budget")]
    pub fm_budget: u64,
    #[serde(default)]
    pub master_seed: u64,
    /// Optional unit attribute table; the default table when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub game_config: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default = "default_jobs")]
    pub jobs: usize,
    /// Stop each game after this many decisions of the first agent (compression runs).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_decisions: Option<usize>,
}

fn default_name() -> String {
    "experiment".to_string()
}

fn default_budget() -> u64 {
    30_000
}

fn default_jobs() -> usize {
    1
}

/// A level ready to play.
#[derive(Debug, Clone)]
pub struct Level {
    pub id: String,
    pub state: GameState,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, HarnessError> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file; relative paths inside it are taken relative to the file.
    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = read(path)?;
        let mut cfg = Self::parse(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        cfg.levels.files.iter_mut().for_each(fix);
        cfg.levels.map.iter_mut().for_each(fix);
        cfg.game_config.iter_mut().for_each(fix);
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: &str| Err(HarnessError::Config(m.to_string()));
        if self.agents.len() != 2 {
            return bad("exactly two agents are required");
        }
        if self.seeds.is_empty() {
            return bad("seeds must not be empty");
        }
        if self.jobs == 0 {
            return bad("jobs must be at least 1");
        }
        let l = &self.levels;
        match (l.files.is_empty(), &l.map) {
            (true, None) => return bad("levels need either files or a map to generate on"),
            (false, Some(_)) => return bad("levels take either files or a map, not both"),
            (true, Some(_)) if l.composition.is_none() || l.count.is_none() => {
                return bad("generated levels need a composition and a count")
            }
            _ => {}
        }
        for a in &self.agents {
            a.params(self.fm_budget)
                .validate()
                .map_err(|e| HarnessError::Config(e.to_string()))?;
        }
        Ok(())
    }

    pub fn game_config(&self) -> Result<GameConfig, HarnessError> {
        match &self.game_config {
            None => Ok(GameConfig::default()),
            Some(p) => Ok(GameConfig::parse(&read(p)?)?),
        }
    }

    /// Loads (or generates) every level. Runs before any game starts so a
    /// missing map or bad level fails the whole experiment up front.
    pub fn load_levels(&self) -> Result<Vec<Level>, HarnessError> {
        let config = Arc::new(self.game_config()?);
        let l = &self.levels;
        if let Some(map) = &l.map {
            let grid = Arc::new(read_map(map)?);
            let comp: Composition = l
                .composition
                .as_deref()
                .unwrap_or_default()
                .parse()
                .map_err(HarnessError::Engine)?;
            let files = generate(
                &grid,
                &map.to_string_lossy(),
                &comp,
                l.count.unwrap_or(0),
                l.seed.unwrap_or(0),
            )?;
            return files
                .into_iter()
                .enumerate()
                .map(|(i, f)| {
                    Ok(Level {
                        id: format!("{}#{i:03}", stem(map)),
                        state: f.build(grid.clone(), config.clone())?,
                    })
                })
                .collect();
        }
        l.files
            .iter()
            .map(|path| {
                let level = LevelFile::parse(&read(path)?)?;
                let map = resolve_map(path, &level.map)?;
                let grid = Arc::new(read_map(&map)?);
                Ok(Level {
                    id: stem(path),
                    state: level.build(grid, config.clone())?,
                })
            })
            .collect()
    }
}

fn stem(p: &Path) -> String {
    p.file_stem().map_or_else(
        || p.to_string_lossy().into_owned(),
        |s| s.to_string_lossy().into_owned(),
    )
}

pub(crate) fn read(path: &Path) -> Result<String, HarnessError> {
    fs::read_to_string(path).map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Loads a map file, with a pointed message when the file is absent.
pub fn read_map(path: &Path) -> Result<Grid, HarnessError> {
    if !path.is_file() {
        return Err(HarnessError::MissingMap(path.to_path_buf()));
    }
    Ok(load_map(&read(path)?)?)
}

/// A level's map reference is looked up next to the level file first, then
/// relative to the working directory.
fn resolve_map(level_path: &Path, map_ref: &str) -> Result<PathBuf, HarnessError> {
    let r = Path::new(map_ref);
    if r.is_absolute() {
        return Ok(r.to_path_buf());
    }
    let beside = level_path.parent().unwrap_or(Path::new("")).join(r);
    if beside.is_file() {
        return Ok(beside);
    }
    if r.is_file() {
        return Ok(r.to_path_buf());
    }
    Err(HarnessError::MissingMap(beside))
}

/// `count` distinct random levels from one seed.
pub(crate) fn generate(
    grid: &Grid,
    map_ref: &str,
    comp: &Composition,
    count: usize,
    seed: u64,
) -> Result<Vec<LevelFile>, HarnessError> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut out: Vec<LevelFile> = Vec::with_capacity(count);
    let mut attempts = 0;
    while out.len() < count {
        let level = random_level(grid, map_ref, comp, &mut rng)?;
        attempts += 1;
        if !out.contains(&level) {
            out.push(level);
        } else if attempts > 100 * count {
            return Err(HarnessError::Config(format!(
                "could not draw {count} distinct levels"
            )));
        }
    }
    Ok(out)
}
