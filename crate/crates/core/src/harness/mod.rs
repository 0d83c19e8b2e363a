//! Experiment orchestration: matches, tournaments, threshold sweeps,
//! compression measurement, level generation and CSV/table output.

mod config;
mod experiment;
mod levels;
mod matches;
mod table;

use std::fs;
use std::path::{Path, PathBuf};

pub use config::{read_map, AgentConfig, ExperimentConfig, Level, LevelsConfig};
pub use experiment::{
    compression_curve, decision_timing, match_seed, measure_compression, play_all, run_experiment,
    summarize, summary_table, sweep_threshold, write_curve_csv, write_matches_csv,
    write_summary_csv, write_timing_csv, CompressionPoint, CompressionReport, DecisionTiming,
    ExperimentResult, PlayedMatch, SeedRates, WinRateSummary, SWEEP_PROPORTIONS,
};
pub use levels::gen_levels;
pub use matches::{player_rng, run_match, DecisionRecord, MatchOutcome, MatchRecord};
pub use table::{mean_std, pct, Table};

use crate::engine::EngineError;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("map file {0} not found; maps are not bundled automatically, see maps/README.md")]
    MissingMap(PathBuf),
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

pub(crate) fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>, HarnessError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|source| HarnessError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
    }
    Ok(csv::Writer::from_path(path)?)
}
