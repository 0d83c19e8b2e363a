use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::engine::Player;
use crate::search::AbstractionCutoff;

use super::config::{ExperimentConfig, Level};
use super::matches::{run_match, MatchOutcome, MatchRecord};
use super::table::{mean_std, pct, Table};
use super::HarnessError;

/// One scheduled game: agent A plays as player `side`.
#[derive(Debug, Clone, PartialEq)]
pub struct PlayedMatch {
    pub level_index: usize,
    pub seed: u64,
    pub side: Player,
    pub record: MatchRecord,
}

impl PlayedMatch {
    /// Player index of agent `agent` (0 = A, 1 = B).
    pub fn player_of(&self, agent: usize) -> Player {
        if agent == 0 {
            self.side
        } else {
            1 - self.side
        }
    }
}

/// Win rates of one seed, aggregated over levels and sides.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeedRates {
    pub seed: u64,
    pub games: usize,
    pub a: f64,
    pub b: f64,
    pub draw: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WinRateSummary {
    pub name: String,
    pub agent_a: String,
    pub agent_b: String,
    pub a_mean: f64,
    pub a_std: f64,
    pub b_mean: f64,
    pub b_std: f64,
    pub draw_mean: f64,
    /// Games counted in the win rates.
    pub games: usize,
    pub failures: usize,
    pub scheduled: usize,
    #[serde(skip)]
    pub per_seed: Vec<SeedRates>,
}

/// Mean and spread of one agent's per-decision wall time.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecisionTiming {
    pub agent: String,
    pub decisions: usize,
    pub mean_ms: f64,
    pub std_ms: f64,
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub summary: WinRateSummary,
    pub matches: Vec<PlayedMatch>,
}

/// Mixes the master seed with a match's coordinates (splitmix64 finalizer),
/// so each match's randomness is independent of scheduling.
pub fn match_seed(master: u64, level: usize, seed: u64, side: Player) -> u64 {
    let mut z = 0u64;
    for v in [master, level as u64, seed, u64::from(side)] {
        z = z.wrapping_add(v).wrapping_add(0x9e37_79b9_7f4a_7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^= z >> 31;
    }
    z
}

/// Every (level, seed, side) game of the config. Results come back in
/// schedule order whatever the number of worker threads.
pub fn play_all(
    cfg: &ExperimentConfig,
    levels: &[Level],
) -> Result<Vec<PlayedMatch>, HarnessError> {
    let mut schedule = Vec::new();
    for li in 0..levels.len() {
        for &seed in &cfg.seeds {
            for side in 0..2u8 {
                schedule.push((li, seed, side));
            }
        }
    }
    let play = |&(li, seed, side): &(usize, u64, Player)| {
        let mut a = cfg.agents[0].build(cfg.fm_budget);
        let mut b = cfg.agents[1].build(cfg.fm_budget);
        let level: &Level = &levels[li];
        let s = match_seed(cfg.master_seed, li, seed, side);
        let mut record = if side == 0 {
            run_match(
                &level.id,
                &level.state,
                [a.as_mut(), b.as_mut()],
                s,
                cfg.max_decisions,
            )
        } else {
            run_match(
                &level.id,
                &level.state,
                [b.as_mut(), a.as_mut()],
                s,
                cfg.max_decisions,
            )
        };
        let (la, lb) = (cfg.agents[0].label(), cfg.agents[1].label());
        record.players = if side == 0 { [la, lb] } else { [lb, la] };
        PlayedMatch {
            level_index: li,
            seed,
            side,
            record,
        }
    };
    if cfg.jobs <= 1 {
        return Ok(schedule.iter().map(play).collect());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| HarnessError::Config(e.to_string()))?;
    Ok(pool.install(|| schedule.par_iter().map(play).collect()))
}

pub fn summarize(cfg: &ExperimentConfig, matches: &[PlayedMatch]) -> WinRateSummary {
    let mut per_seed = Vec::new();
    let mut failures = 0;
    for &seed in &cfg.seeds {
        let (mut a, mut b, mut d, mut n) = (0usize, 0usize, 0usize, 0usize);
        for m in matches.iter().filter(|m| m.seed == seed) {
            match m.record.outcome {
                MatchOutcome::Failure { .. } => {
                    failures += 1;
                    continue;
                }
                MatchOutcome::Draw => d += 1,
                MatchOutcome::Win(p) if p == m.player_of(0) => a += 1,
                MatchOutcome::Win(_) => b += 1,
            }
            n += 1;
        }
        let rate = |k: usize| if n == 0 { 0.0 } else { k as f64 / n as f64 };
        per_seed.push(SeedRates {
            seed,
            games: n,
            a: rate(a),
            b: rate(b),
            draw: rate(d),
        });
    }
    let (a_mean, a_std) = mean_std(per_seed.iter().map(|s| s.a));
    let (b_mean, b_std) = mean_std(per_seed.iter().map(|s| s.b));
    let (draw_mean, _) = mean_std(per_seed.iter().map(|s| s.draw));
    WinRateSummary {
        name: cfg.name.clone(),
        agent_a: cfg.agents[0].label(),
        agent_b: cfg.agents[1].label(),
        a_mean,
        a_std,
        b_mean,
        b_std,
        draw_mean,
        games: per_seed.iter().map(|s| s.games).sum(),
        failures,
        scheduled: matches.len(),
        per_seed,
    }
}

/// Mean decision wall time of each agent over its searched decisions.
pub fn decision_timing(cfg: &ExperimentConfig, matches: &[PlayedMatch]) -> Vec<DecisionTiming> {
    (0..2)
        .map(|agent| {
            let ms: Vec<f64> = matches
                .iter()
                .flat_map(|m| {
                    let p = m.player_of(agent);
                    m.record
                        .decisions
                        .iter()
                        .filter(move |d| d.player == p && d.stats.iterations > 0)
                        .map(|d| d.stats.wall_micros as f64 / 1000.0)
                })
                .collect();
            let (mean_ms, std_ms) = mean_std(ms.iter().copied());
            DecisionTiming {
                agent: cfg.agents[agent].label(),
                decisions: ms.len(),
                mean_ms,
                std_ms,
            }
        })
        .collect()
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult, HarnessError> {
    cfg.validate()?;
    let levels = cfg.load_levels()?;
    let matches = play_all(cfg, &levels)?;
    Ok(ExperimentResult {
        summary: summarize(cfg, &matches),
        matches,
    })
}

#[derive(Serialize)]
struct MatchRow<'a> {
    level: &'a str,
    seed: u64,
    side: Player,
    player0: &'a str,
    player1: &'a str,
    outcome: String,
    winner: &'a str,
    turns: u32,
    actions: usize,
    decisions0: usize,
    decisions1: usize,
    mean_fm_calls0: f64,
    mean_fm_calls1: f64,
    mean_tree_nodes0: f64,
    mean_tree_nodes1: f64,
    mean_groups0: f64,
    mean_groups1: f64,
}

/// Per-match CSV. Only deterministic columns: the file is identical across
/// runs with the same config and seeds.
pub fn write_matches_csv(path: &Path, matches: &[PlayedMatch]) -> Result<(), HarnessError> {
    let mut w = super::csv_writer(path)?;
    for m in matches {
        let r = &m.record;
        let winner = match r.outcome {
            MatchOutcome::Win(p) => r.players[p as usize].as_str(),
            MatchOutcome::Draw => "draw",
            MatchOutcome::Failure { .. } => "none",
        };
        let count = |p: Player| r.decisions.iter().filter(|d| d.player == p).count();
        w.serialize(MatchRow {
            level: &r.level,
            seed: m.seed,
            side: m.side,
            player0: &r.players[0],
            player1: &r.players[1],
            outcome: r.outcome.label(),
            winner,
            turns: r.turns,
            actions: r.actions,
            decisions0: count(0),
            decisions1: count(1),
            mean_fm_calls0: r.mean_decision(0, |s| s.fm_calls as f64),
            mean_fm_calls1: r.mean_decision(1, |s| s.fm_calls as f64),
            mean_tree_nodes0: r.mean_decision(0, |s| s.tree_nodes as f64),
            mean_tree_nodes1: r.mean_decision(1, |s| s.tree_nodes as f64),
            mean_groups0: r.mean_decision(0, |s| s.groups as f64),
            mean_groups1: r.mean_decision(1, |s| s.groups as f64),
        })?;
    }
    w.flush().map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_summary_csv(path: &Path, rows: &[WinRateSummary]) -> Result<(), HarnessError> {
    let mut w = super::csv_writer(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Aligned text table in the win-rate layout: one row per summary.
pub fn summary_table(first_column: &str, rows: &[(String, &WinRateSummary)]) -> String {
    let mut t = Table::new(vec![
        first_column.to_string(),
        "agent A".into(),
        "win rate A".into(),
        "agent B".into(),
        "win rate B".into(),
        "draws".into(),
        "games".into(),
        "failures".into(),
    ]);
    for (key, s) in rows {
        t.row(vec![
            key.clone(),
            s.agent_a.clone(),
            pct(s.a_mean, s.a_std),
            s.agent_b.clone(),
            pct(s.b_mean, s.b_std),
            format!("{:.1}%", 100.0 * s.draw_mean),
            s.games.to_string(),
            s.failures.to_string(),
        ]);
    }
    t.render()
}

/// Proportions of the budget after which the elastic agent's groups are split.
pub const SWEEP_PROPORTIONS: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];

/// One experiment per proportion on shared levels and seeds; agent A must be
/// the elastic agent.
pub fn sweep_threshold(
    cfg: &ExperimentConfig,
    proportions: &[f64],
) -> Result<Vec<(f64, ExperimentResult)>, HarnessError> {
    cfg.validate()?;
    if !cfg.agents[0].kind.preset().abstraction_enabled {
        return Err(HarnessError::Config(
            "the sweep needs the elastic agent as the first agent".into(),
        ));
    }
    let levels = cfg.load_levels()?;
    let mut out = Vec::new();
    for &p in proportions {
        let mut c = cfg.clone();
        c.agents[0].alpha_abs = Some(AbstractionCutoff::Proportion(p));
        c.name = format!("{}@{:.0}%", cfg.name, 100.0 * p);
        c.validate()?;
        let matches = play_all(&c, &levels)?;
        out.push((
            p,
            ExperimentResult {
                summary: summarize(&c, &matches),
                matches,
            },
        ));
    }
    Ok(out)
}

/// Mean ± std of the compression rate after each batch, over every decision
/// of the first agent that reached that iteration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompressionPoint {
    pub iteration: u64,
    pub decisions: usize,
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone)]
pub struct CompressionReport {
    pub curve: Vec<CompressionPoint>,
    pub decisions: usize,
    pub timing: Vec<DecisionTiming>,
}

impl CompressionReport {
    pub fn at(&self, iteration: u64) -> Option<&CompressionPoint> {
        self.curve.iter().find(|p| p.iteration == iteration)
    }
}

pub fn compression_curve(matches: &[PlayedMatch]) -> (Vec<CompressionPoint>, usize) {
    let mut by_iter: BTreeMap<u64, Vec<f64>> = BTreeMap::new();
    let mut decisions = 0;
    for m in matches {
        let p = m.player_of(0);
        for d in m.record.decisions.iter().filter(|d| d.player == p) {
            if d.stats.iterations == 0 {
                continue;
            }
            decisions += 1;
            for b in &d.stats.batches {
                by_iter
                    .entry(b.iteration)
                    .or_default()
                    .push(b.compression_rate);
            }
        }
    }
    let curve = by_iter
        .into_iter()
        .map(|(iteration, xs)| {
            let (mean, std) = mean_std(xs.iter().copied());
            CompressionPoint {
                iteration,
                decisions: xs.len(),
                mean,
                std,
            }
        })
        .collect();
    (curve, decisions)
}

/// Plays the configured games and reports the elastic agent's compression curve
/// together with both agents' decision times.
pub fn measure_compression(cfg: &ExperimentConfig) -> Result<CompressionReport, HarnessError> {
    cfg.validate()?;
    if !cfg.agents[0].kind.preset().abstraction_enabled {
        return Err(HarnessError::Config(
            "compression is measured on the elastic agent, which must be the first agent".into(),
        ));
    }
    let levels = cfg.load_levels()?;
    let matches = play_all(cfg, &levels)?;
    let (curve, decisions) = compression_curve(&matches);
    Ok(CompressionReport {
        curve,
        decisions,
        timing: decision_timing(cfg, &matches),
    })
}

pub fn write_curve_csv(path: &Path, curve: &[CompressionPoint]) -> Result<(), HarnessError> {
    let mut w = super::csv_writer(path)?;
    for p in curve {
        w.serialize(p)?;
    }
    w.flush().map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_timing_csv(path: &Path, timing: &[DecisionTiming]) -> Result<(), HarnessError> {
    let mut w = super::csv_writer(path)?;
    for t in timing {
        w.serialize(t)?;
    }
    w.flush().map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::AgentKind;
    use crate::harness::{AgentConfig, LevelsConfig};
    use std::path::PathBuf;

    fn random_pair(seeds: Vec<u64>, count: usize) -> ExperimentConfig {
        let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../maps/lake24.map");
        ExperimentConfig {
            name: "rr".into(),
            agents: vec![
                AgentConfig::new(AgentKind::Random),
                AgentConfig::new(AgentKind::Random),
            ],
            levels: LevelsConfig {
                files: vec![],
                map: Some(dir),
                composition: Some("K1W1A1H".into()),
                count: Some(count),
                seed: Some(4),
            },
            seeds,
            fm_budget: 100,
            master_seed: 9,
            game_config: None,
            out: None,
            jobs: 1,
            max_decisions: None,
        }
    }

    #[test]
    fn one_level_one_seed_is_two_matches() {
        let r = run_experiment(&random_pair(vec![1], 1)).unwrap();
        assert_eq!(r.matches.len(), 2);
        assert_eq!(r.matches[0].side, 0);
        assert_eq!(r.matches[1].side, 1);
        let s = &r.summary;
        assert_eq!(s.games + s.failures, 2);
        for seed in &s.per_seed {
            assert!((seed.a + seed.b + seed.draw - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn thread_count_does_not_change_results() {
        let cfg = random_pair(vec![1, 2], 2);
        let serial = run_experiment(&cfg).unwrap();
        let par = run_experiment(&ExperimentConfig { jobs: 3, ..cfg }).unwrap();
        assert_eq!(serial.matches, par.matches);
    }

    #[test]
    fn match_seeds_differ_by_coordinate() {
        let s = [
            match_seed(1, 0, 0, 0),
            match_seed(1, 1, 0, 0),
            match_seed(1, 0, 1, 0),
            match_seed(1, 0, 0, 1),
            match_seed(2, 0, 0, 0),
        ];
        for i in 0..s.len() {
            for j in i + 1..s.len() {
                assert_ne!(s[i], s[j]);
            }
        }
    }

    #[test]
    fn sweep_counts_matches() {
        let mut cfg = random_pair(vec![1], 1);
        cfg.agents[0] = AgentConfig::new(AgentKind::ElasticMctsU);
        cfg.agents[1] = AgentConfig::new(AgentKind::Random);
        cfg.fm_budget = 60;
        cfg.max_decisions = Some(4);
        let rows = sweep_threshold(&cfg, &SWEEP_PROPORTIONS).unwrap();
        assert_eq!(rows.len(), 5);
        assert_eq!(rows.iter().map(|(_, r)| r.matches.len()).sum::<usize>(), 10);
    }

    #[test]
    fn sweep_rejects_non_elastic_first_agent() {
        assert!(sweep_threshold(&random_pair(vec![1], 1), &SWEEP_PROPORTIONS).is_err());
    }
}
