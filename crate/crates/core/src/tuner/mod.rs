//! N-Tuple Bandit Evolutionary Algorithm over discrete parameter grids, plus
//! the win-rate-against-Combat fitness used to tune the search agents.

use std::collections::HashMap;

use rand::Rng;
use serde::Serialize;

use crate::agents::{Agent, AgentKind, CombatAgent};
use crate::harness::{match_seed, run_match, AgentConfig, Level, MatchOutcome};
use crate::search::AbstractionCutoff;

/// Index of a value in each dimension.
pub type Candidate = Vec<usize>;

#[derive(Debug, Clone, PartialEq)]
pub struct Dimension {
    pub name: &'static str,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamSpace {
    pub dims: Vec<Dimension>,
}

impl ParamSpace {
    /// `C` and `L` for MCTS and MCTS_u: 20 points.
    pub fn mcts() -> Self {
        ParamSpace {
            dims: vec![
                Dimension {
                    name: "c",
                    values: vec![0.1, 1.0, 10.0, 100.0],
                },
                Dimension {
                    name: "rollout_len",
                    values: vec![20.0, 40.0, 60.0, 80.0, 100.0],
                },
            ],
        }
    }

    /// Adds the batch size `B` and the cutoff as a multiple of `B`: 240 points.
    pub fn elastic() -> Self {
        let mut s = Self::mcts();
        s.dims.push(Dimension {
            name: "batch",
            values: vec![20.0, 40.0, 60.0],
        });
        s.dims.push(Dimension {
            name: "alpha_multiple",
            values: vec![4.0, 8.0, 12.0, 16.0],
        });
        s
    }

    pub fn for_agent(kind: AgentKind) -> Option<Self> {
        match kind {
            AgentKind::Mcts | AgentKind::MctsU => Some(Self::mcts()),
            AgentKind::ElasticMctsU => Some(Self::elastic()),
            _ => None,
        }
    }

    pub fn size(&self) -> usize {
        self.dims.iter().map(|d| d.values.len()).product()
    }

    pub fn values(&self, c: &[usize]) -> Vec<f64> {
        self.dims.iter().zip(c).map(|(d, &i)| d.values[i]).collect()
    }

    /// Every candidate in lexicographic order.
    pub fn all(&self) -> Vec<Candidate> {
        let mut out = vec![Vec::new()];
        for d in &self.dims {
            out = out
                .into_iter()
                .flat_map(|c| {
                    (0..d.values.len()).map(move |i| {
                        let mut c = c.clone();
                        c.push(i);
                        c
                    })
                })
                .collect();
        }
        out
    }

    pub fn random<R: Rng + ?Sized>(&self, rng: &mut R) -> Candidate {
        self.dims
            .iter()
            .map(|d| rng.random_range(0..d.values.len()))
            .collect()
    }

    /// Each dimension is resampled to a different value with probability
    /// `1/dims`; if nothing changed, one random dimension is forced to change.
    pub fn mutate<R: Rng + ?Sized>(&self, c: &[usize], rng: &mut R) -> Candidate {
        let p = 1.0 / self.dims.len() as f64;
        let mut out = c.to_vec();
        let mut changed = false;
        for (i, d) in self.dims.iter().enumerate() {
            if d.values.len() > 1 && rng.random_bool(p) {
                out[i] = other_value(c[i], d.values.len(), rng);
                changed = true;
            }
        }
        let movable: Vec<usize> = (0..self.dims.len())
            .filter(|&i| self.dims[i].values.len() > 1)
            .collect();
        if !changed && !movable.is_empty() {
            let i = movable[rng.random_range(0..movable.len())];
            out[i] = other_value(c[i], self.dims[i].values.len(), rng);
        }
        out
    }

    /// Agent config with this candidate's values written over `base`.
    pub fn apply(&self, c: &[usize], base: &AgentConfig) -> AgentConfig {
        let mut cfg = base.clone();
        let mut batch = cfg.batch.unwrap_or(base.kind.preset().batch);
        let mut multiple = None;
        for (d, v) in self.dims.iter().zip(self.values(c)) {
            match d.name {
                "c" => cfg.c = Some(v),
                "rollout_len" => cfg.rollout_len = Some(v as u32),
                "batch" => batch = v as u64,
                "alpha_multiple" => multiple = Some(v as u64),
                _ => {}
            }
        }
        if self.dims.iter().any(|d| d.name == "batch") {
            cfg.batch = Some(batch);
        }
        if let Some(m) = multiple {
            cfg.alpha_abs = Some(AbstractionCutoff::Iterations(m * batch));
        }
        cfg
    }

    pub fn describe(&self, c: &[usize]) -> String {
        self.dims
            .iter()
            .zip(self.values(c))
            .map(|(d, v)| format!("{}={v}", d.name))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

fn other_value<R: Rng + ?Sized>(current: usize, n: usize, rng: &mut R) -> usize {
    let v = rng.random_range(0..n - 1);
    if v >= current {
        v + 1
    } else {
        v
    }
}

/// Fitness sums and visit counts for every 1-tuple, 2-tuple and the full tuple.
#[derive(Debug, Clone)]
pub struct NTupleModel {
    tuples: Vec<Vec<usize>>,
    tables: Vec<HashMap<Vec<usize>, (f64, u64)>>,
    total: u64,
}

/// Keeps the bonus finite for unseen combinations.
const EPSILON: f64 = 1e-6;

impl NTupleModel {
    pub fn new(dims: usize) -> Self {
        let mut tuples: Vec<Vec<usize>> = (0..dims).map(|i| vec![i]).collect();
        for i in 0..dims {
            for j in i + 1..dims {
                tuples.push(vec![i, j]);
            }
        }
        if dims > 2 {
            tuples.push((0..dims).collect());
        }
        let tables = vec![HashMap::new(); tuples.len()];
        NTupleModel {
            tuples,
            tables,
            total: 0,
        }
    }

    pub fn tuples(&self) -> &[Vec<usize>] {
        &self.tuples
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    fn key(tuple: &[usize], c: &[usize]) -> Vec<usize> {
        tuple.iter().map(|&d| c[d]).collect()
    }

    /// Index of the tuple spanning every dimension.
    fn full_tuple(&self) -> usize {
        let dims = self.tuples.iter().map(|t| t.len()).max().unwrap_or(0);
        self.tuples
            .iter()
            .position(|t| t.len() == dims)
            .unwrap_or(0)
    }

    pub fn add(&mut self, c: &[usize], fitness: f64) {
        for (t, table) in self.tuples.iter().zip(&mut self.tables) {
            let e = table.entry(Self::key(t, c)).or_insert((0.0, 0));
            e.0 += fitness;
            e.1 += 1;
        }
        self.total += 1;
    }

    /// Times this exact candidate was evaluated.
    pub fn visits(&self, c: &[usize]) -> u64 {
        let i = self.full_tuple();
        self.tables[i]
            .get(&Self::key(&self.tuples[i], c))
            .map_or(0, |e| e.1)
    }

    /// Average of the tuple means over the tuples that have seen this candidate's values.
    pub fn mean(&self, c: &[usize]) -> f64 {
        let (mut sum, mut n) = (0.0, 0);
        for (t, table) in self.tuples.iter().zip(&self.tables) {
            if let Some(&(x, k)) = table.get(&Self::key(t, c)) {
                sum += x / k as f64;
                n += 1;
            }
        }
        if n == 0 {
            0.0
        } else {
            sum / n as f64
        }
    }

    /// Mean-plus-bonus score averaged over all tuples; unseen tuples contribute the bonus only.
    pub fn ucb(&self, c: &[usize], k: f64) -> f64 {
        let ln_total = (self.total.max(1) as f64).ln();
        let mut score = 0.0;
        for (t, table) in self.tuples.iter().zip(&self.tables) {
            let (mean, count) = match table.get(&Self::key(t, c)) {
                Some(&(x, n)) => (x / n as f64, n as f64),
                None => (0.0, 0.0),
            };
            score += mean + k * (ln_total / (count + EPSILON)).sqrt();
        }
        score / self.tuples.len() as f64
    }

    /// Evaluated candidates, in first-seen order of the full tuple table.
    fn evaluated(&self) -> Vec<Candidate> {
        let i = self.full_tuple();
        let mut cands: Vec<Candidate> = self.tables[i].keys().cloned().collect();
        cands.sort();
        cands
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NtbeaParams {
    pub iterations: usize,
    pub neighbors: usize,
    /// Bandit exploration factor.
    pub k: f64,
}

impl Default for NtbeaParams {
    fn default() -> Self {
        NtbeaParams {
            iterations: 50,
            neighbors: 50,
            k: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRow {
    pub iteration: usize,
    pub candidate: String,
    pub fitness: f64,
    pub modeled_mean: f64,
}

#[derive(Debug, Clone)]
pub struct NtbeaResult {
    pub best: Candidate,
    pub trace: Vec<TraceRow>,
    pub model: NTupleModel,
}

#[derive(Debug, thiserror::Error)]
pub enum TunerError {
    #[error("the parameter space is empty")]
    EmptySpace,
}

/// Runs NTBEA and returns the evaluated candidate with the highest modeled
/// mean; ties go to the most evaluated, then to the lexicographically smallest.
pub fn ntbea_run<R: Rng + ?Sized>(
    space: &ParamSpace,
    fitness: &mut dyn FnMut(&[usize]) -> f64,
    params: &NtbeaParams,
    rng: &mut R,
) -> Result<NtbeaResult, TunerError> {
    if space.dims.is_empty() || space.size() == 0 {
        return Err(TunerError::EmptySpace);
    }
    let mut model = NTupleModel::new(space.dims.len());
    let mut current = space.random(rng);
    let mut trace = Vec::with_capacity(params.iterations);
    for iteration in 0..params.iterations {
        let f = fitness(&current);
        model.add(&current, f);
        trace.push(TraceRow {
            iteration,
            candidate: space.describe(&current),
            fitness: f,
            modeled_mean: model.mean(&current),
        });
        let mut best: Option<(f64, Candidate)> = None;
        for _ in 0..params.neighbors.max(1) {
            let n = space.mutate(&current, rng);
            let s = model.ucb(&n, params.k);
            if best.as_ref().is_none_or(|(b, _)| s > *b) {
                best = Some((s, n));
            }
        }
        current = best.unwrap().1;
    }
    let mut best: Option<(f64, u64, Candidate)> = None;
    for c in model.evaluated() {
        let (m, v) = (model.mean(&c), model.visits(&c));
        if best
            .as_ref()
            .is_none_or(|(bm, bv, _)| m > *bm || (m == *bm && v > *bv))
        {
            best = Some((m, v, c));
        }
    }
    Ok(NtbeaResult {
        best: best.map(|b| b.2).unwrap_or_default(),
        trace,
        model,
    })
}

/// Share of `games` won against the Combat agent (draws count half), sides
/// alternating and levels cycling. Game `i` is seeded from `(seed, i)`.
pub fn fitness_vs_combat(
    make: &dyn Fn() -> Box<dyn Agent>,
    levels: &[Level],
    games: usize,
    seed: u64,
) -> f64 {
    assert!(games >= 1 && !levels.is_empty());
    let mut score = 0.0;
    for i in 0..games {
        let level = &levels[i % levels.len()];
        let side = (i % 2) as u8;
        let mut me = make();
        let mut combat = CombatAgent::default();
        let s = match_seed(seed, i, 0, side);
        let agents: [&mut dyn Agent; 2] = if side == 0 {
            [me.as_mut(), &mut combat]
        } else {
            [&mut combat, me.as_mut()]
        };
        let r = run_match(&level.id, &level.state, agents, s, None);
        score += match r.outcome {
            MatchOutcome::Win(p) if p == side => 1.0,
            MatchOutcome::Draw => 0.5,
            _ => 0.0,
        };
    }
    score / games as f64
}
