use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use elastic_mcts::agents::AgentKind;
use elastic_mcts::engine::{load_level, Composition, GameConfig};
use elastic_mcts::harness::{
    self, gen_levels, measure_compression, read_map, run_experiment, run_match, summary_table,
    sweep_threshold, AgentConfig, ExperimentConfig, MatchOutcome, PlayedMatch, Table,
    SWEEP_PROPORTIONS,
};
use elastic_mcts::tuner::{fitness_vs_combat, ntbea_run, NtbeaParams, ParamSpace};

#[derive(Parser)]
#[command(
    name = "elastic-mcts",
    version,
    about = "Elastic MCTS experiments on Kill The King"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Experiment config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Master seed; overrides the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Forward-model calls per decision; overrides the config.
    #[arg(long)]
    fm_budget: Option<u64>,
    /// Output CSV path; overrides the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Matches played concurrently.
    #[arg(long)]
    jobs: Option<usize>,
}

impl Common {
    fn load(&self) -> Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::load(&self.config)
            .with_context(|| format!("loading {}", self.config.display()))?;
        if let Some(s) = self.seed {
            cfg.master_seed = s;
        }
        if let Some(b) = self.fm_budget {
            cfg.fm_budget = b;
        }
        if let Some(j) = self.jobs {
            cfg.jobs = j;
        }
        if let Some(o) = &self.out {
            cfg.out = Some(o.clone());
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Play a single game on one level and print its log.
    Play {
        /// Level file.
        #[arg(long)]
        level: PathBuf,
        #[arg(long, default_value = "elastic_mcts_u")]
        p0: AgentKind,
        #[arg(long, default_value = "mcts_u")]
        p1: AgentKind,
        /// Optional unit attribute table (TOML).
        #[arg(long)]
        game_config: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 30_000)]
        fm_budget: u64,
        /// Write the per-match CSV here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run every (level, seed, side) match of a config and report win rates.
    Experiment(Common),
    /// Repeat an experiment with the elastic agent splitting at 0/25/50/75/100% of its budget.
    Sweep(Common),
    /// Record the elastic agent's compression rate after every batch.
    Compress(Common),
    /// Tune the first agent of a config with NTBEA against the Combat agent.
    Tune {
        #[command(flatten)]
        common: Common,
        /// Games per fitness evaluation.
        #[arg(long, default_value_t = 4)]
        games: usize,
        #[arg(long, default_value_t = 50)]
        iterations: usize,
        #[arg(long, default_value_t = 50)]
        neighbors: usize,
        /// Bandit exploration factor.
        #[arg(long, default_value_t = 2.0)]
        k: f64,
    },
    /// Write random levels for a map.
    GenLevels {
        #[arg(long)]
        map: PathBuf,
        #[arg(long, default_value = "K1W1A1H")]
        composition: Composition,
        #[arg(long, default_value_t = 50)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Play {
            level,
            p0,
            p1,
            game_config,
            seed,
            fm_budget,
            out,
        } => play(
            &level,
            [p0, p1],
            game_config.as_deref(),
            seed,
            fm_budget,
            out.as_deref(),
        ),
        Command::Experiment(c) => experiment(&c.load()?),
        Command::Sweep(c) => sweep(&c.load()?),
        Command::Compress(c) => compress(&c.load()?),
        Command::Tune {
            common,
            games,
            iterations,
            neighbors,
            k,
        } => tune(
            &common.load()?,
            games,
            &NtbeaParams {
                iterations,
                neighbors,
                k,
            },
        ),
        Command::GenLevels {
            map,
            composition,
            count,
            seed,
            out,
        } => {
            let paths = gen_levels(&map, &composition, count, seed, &out)?;
            println!("wrote {} levels to {}", paths.len(), out.display());
            Ok(())
        }
    }
}

fn output_path(cfg: &ExperimentConfig, suffix: &str) -> PathBuf {
    let base = cfg
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from("results").join(format!("{}.csv", cfg.name)));
    if suffix.is_empty() {
        return base;
    }
    let stem = base
        .file_stem()
        .map_or("out".into(), |s| s.to_string_lossy().into_owned());
    base.with_file_name(format!("{stem}_{suffix}.csv"))
}

fn play(
    level: &Path,
    kinds: [AgentKind; 2],
    game_config: Option<&Path>,
    seed: u64,
    fm_budget: u64,
    out: Option<&Path>,
) -> Result<()> {
    let text =
        std::fs::read_to_string(level).with_context(|| format!("reading {}", level.display()))?;
    let parsed = elastic_mcts::engine::LevelFile::parse(&text)?;
    let map = level.parent().unwrap_or(Path::new("")).join(&parsed.map);
    let map = if map.is_file() {
        map
    } else {
        PathBuf::from(&parsed.map)
    };
    let grid = Arc::new(read_map(&map)?);
    let config = match game_config {
        Some(p) => GameConfig::parse(&std::fs::read_to_string(p)?)?,
        None => GameConfig::default(),
    };
    let state = load_level(&text, grid, Arc::new(config))?;
    let mut a = AgentConfig::new(kinds[0]).build(fm_budget);
    let mut b = AgentConfig::new(kinds[1]).build(fm_budget);
    let id = level
        .file_stem()
        .map_or("level".into(), |s| s.to_string_lossy().into_owned());
    let record = run_match(&id, &state, [a.as_mut(), b.as_mut()], seed, None);
    let result = match record.outcome {
        MatchOutcome::Win(p) => format!("{} (player {p}) wins", record.players[p as usize]),
        MatchOutcome::Draw => "draw".to_string(),
        MatchOutcome::Failure { player, turn } => {
            format!("aborted: player {player} played an illegal action on turn {turn}")
        }
    };
    println!(
        "{} vs {} on {id}: {result} after {} turns, {} actions",
        record.players[0], record.players[1], record.turns, record.actions
    );
    for p in 0..2u8 {
        let n = record.decisions.iter().filter(|d| d.player == p).count();
        if n > 0 {
            println!(
                "  player {p}: {n} searched decisions, {:.1} ms mean, {:.0} tree nodes mean",
                record.mean_decision(p, |s| s.wall_micros as f64 / 1000.0),
                record.mean_decision(p, |s| s.tree_nodes as f64)
            );
        }
    }
    if let Some(out) = out {
        let played = PlayedMatch {
            level_index: 0,
            seed,
            side: 0,
            record,
        };
        harness::write_matches_csv(out, &[played])?;
    }
    Ok(())
}

fn experiment(cfg: &ExperimentConfig) -> Result<()> {
    let r = run_experiment(cfg)?;
    let out = output_path(cfg, "");
    harness::write_matches_csv(&out, &r.matches)?;
    harness::write_summary_csv(
        &output_path(cfg, "summary"),
        std::slice::from_ref(&r.summary),
    )?;
    harness::write_timing_csv(
        &output_path(cfg, "timing"),
        &harness::decision_timing(cfg, &r.matches),
    )?;
    print!(
        "{}",
        summary_table("experiment", &[(cfg.name.clone(), &r.summary)])
    );
    println!("matches written to {}", out.display());
    Ok(())
}

fn sweep(cfg: &ExperimentConfig) -> Result<()> {
    let rows = sweep_threshold(cfg, &SWEEP_PROPORTIONS)?;
    let summaries: Vec<_> = rows.iter().map(|(_, r)| r.summary.clone()).collect();
    harness::write_summary_csv(&output_path(cfg, ""), &summaries)?;
    let labelled: Vec<(String, &harness::WinRateSummary)> = rows
        .iter()
        .map(|(p, r)| (format!("{:.0}%", 100.0 * p), &r.summary))
        .collect();
    print!("{}", summary_table("split at", &labelled));
    Ok(())
}

fn compress(cfg: &ExperimentConfig) -> Result<()> {
    let report = measure_compression(cfg)?;
    harness::write_curve_csv(&output_path(cfg, ""), &report.curve)?;
    harness::write_timing_csv(&output_path(cfg, "timing"), &report.timing)?;
    let mut t = Table::new(vec![
        "iteration".into(),
        "decisions".into(),
        "compression".into(),
    ]);
    for p in &report.curve {
        t.row(vec![
            p.iteration.to_string(),
            p.decisions.to_string(),
            format!("{:.2}±{:.2}", p.mean, p.std),
        ]);
    }
    print!("{}", t.render());
    let mut t = Table::new(vec![
        "agent".into(),
        "decisions".into(),
        "decision time".into(),
    ]);
    for d in &report.timing {
        t.row(vec![
            d.agent.clone(),
            d.decisions.to_string(),
            format!("{:.1}±{:.1} ms", d.mean_ms, d.std_ms),
        ]);
    }
    print!("{}", t.render());
    Ok(())
}

fn tune(cfg: &ExperimentConfig, games: usize, params: &NtbeaParams) -> Result<()> {
    if games == 0 {
        bail!("--games must be at least 1");
    }
    let base = cfg.agents[0].clone();
    let Some(space) = ParamSpace::for_agent(base.kind) else {
        bail!("{} has no tunable parameters", base.kind);
    };
    let levels = cfg.load_levels()?;
    let budget = cfg.fm_budget;
    let mut evaluation = 0u64;
    let mut fitness = |c: &[usize]| {
        let agent = space.apply(c, &base);
        evaluation += 1;
        let seed = cfg.master_seed.wrapping_add(evaluation);
        fitness_vs_combat(&|| agent.build(budget), &levels, games, seed)
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.master_seed);
    let result = ntbea_run(&space, &mut fitness, params, &mut rng)?;
    let out = output_path(cfg, "");
    let mut w =
        csv::Writer::from_path(&out).with_context(|| format!("writing {}", out.display()))?;
    for row in &result.trace {
        w.serialize(row)?;
    }
    w.flush()?;
    let best = space.apply(&result.best, &base);
    let preset = out.with_extension("toml");
    std::fs::write(&preset, toml::to_string(&best)?)?;
    println!(
        "best: {} (modeled mean {:.3}); trace in {}, preset in {}",
        space.describe(&result.best),
        result.model.mean(&result.best),
        out.display(),
        preset.display()
    );
    Ok(())
}
