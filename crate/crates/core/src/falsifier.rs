//! Falsification by stochastic local search over a gridded input space, and parameter
//! mining by bisection on top of it.
//!
//! A candidate picks one value level per control time of every input channel. The
//! search walks between candidates that differ by one level at one position, keeps a
//! bounded FIFO tabu list of visited candidates, refines the grid when it stalls, and
//! restarts from a random candidate once refinements run out.

use std::collections::hash_map::DefaultHasher;
use std::collections::{BTreeMap, HashSet, VecDeque};
use std::hash::{Hash, Hasher};

use num_traits::Zero;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::logic::Formula;
use crate::monitor::{robustness, MonitorError};
use crate::plant::{simulate, ChannelInput, InputSignal, Interpolation, ModelSpec, PlantError};
use crate::rational::{format_rational, parse_rational, rational_from_f64, to_f64, Rational};
use crate::templates::{TemplateError, TemplateInstance};
use crate::trace::Trace;

#[derive(Debug, Error)]
pub enum FalsifyError {
    #[error("invalid search configuration: {0}")]
    Config(String),
    #[error("invalid grid: {0}")]
    Grid(String),
    #[error(transparent)]
    Plant(#[from] PlantError),
    #[error(transparent)]
    Monitor(#[from] MonitorError),
    #[error(transparent)]
    Template(#[from] TemplateError),
}

/// Control times and value levels of one input channel.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelGrid {
    pub times: Vec<Rational>,
    pub levels: Vec<f64>,
    pub interp: Interpolation,
}

/// The discrete input space. `generation` counts refinements.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub channels: BTreeMap<String, ChannelGrid>,
    pub generation: u32,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GridFile {
    channels: BTreeMap<String, ChannelFile>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ChannelFile {
    times: Vec<Value>,
    levels: Vec<f64>,
    #[serde(default)]
    interp: Interpolation,
}

impl Grid {
    pub fn new(channels: BTreeMap<String, ChannelGrid>) -> Result<Self, FalsifyError> {
        if channels.is_empty() {
            return Err(FalsifyError::Grid("no input channels".into()));
        }
        for (name, channel) in &channels {
            let bad = |message: &str| FalsifyError::Grid(format!("channel `{name}`: {message}"));
            if channel.times.first() != Some(&Rational::zero()) {
                return Err(bad("control times must start at 0"));
            }
            if channel.times.windows(2).any(|pair| pair[0] >= pair[1]) {
                return Err(bad("control times must be strictly increasing"));
            }
            if channel.levels.len() < 2 {
                return Err(bad("at least two value levels are required"));
            }
            if channel.levels.iter().any(|v| !v.is_finite())
                || channel.levels.windows(2).any(|p| p[0] >= p[1])
            {
                return Err(bad("value levels must be finite and strictly increasing"));
            }
        }
        Ok(Self {
            channels,
            generation: 0,
        })
    }

    /// Parses `{"channels":{"u":{"times":[0,5],"levels":[0,1],"interp":"hold"}}}`. Times
    /// may be numbers or rational strings such as `"1/3"`.
    pub fn from_json(text: &str) -> Result<Self, FalsifyError> {
        let file: GridFile =
            serde_json::from_str(text).map_err(|e| FalsifyError::Grid(e.to_string()))?;
        let mut channels = BTreeMap::new();
        for (name, channel) in file.channels {
            let times = channel
                .times
                .iter()
                .map(|time| {
                    let parsed = match time {
                        Value::Number(n) => n
                            .as_f64()
                            .ok_or(())
                            .and_then(|v| rational_from_f64(v).map_err(|_| ())),
                        Value::String(s) => parse_rational(s).map_err(|_| ()),
                        _ => Err(()),
                    };
                    parsed.map_err(|_| {
                        FalsifyError::Grid(format!("channel `{name}`: bad control time {time}"))
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            channels.insert(
                name,
                ChannelGrid {
                    times,
                    levels: channel.levels,
                    interp: channel.interp,
                },
            );
        }
        Self::new(channels)
    }

    pub fn to_json(&self) -> Value {
        let channels: serde_json::Map<String, Value> = self
            .channels
            .iter()
            .map(|(name, channel)| {
                let times: Vec<String> = channel.times.iter().copied().map(format_rational).collect();
                let entry = serde_json::json!({"times": times, "levels": channel.levels, "interp": channel.interp});
                (name.clone(), entry)
            })
            .collect();
        serde_json::json!({ "channels": channels })
    }

    /// Last control time over all channels.
    pub fn last_control_time(&self) -> Rational {
        self.channels
            .values()
            .map(|c| *c.times.last().unwrap())
            .max()
            .unwrap_or_else(Rational::zero)
    }

    /// Number of candidates, saturating.
    pub fn size(&self) -> u128 {
        self.channels
            .values()
            .flat_map(|c| std::iter::repeat_n(c.levels.len() as u128, c.times.len()))
            .fold(1u128, u128::saturating_mul)
    }

    pub fn random_candidate(&self, rng: &mut impl Rng) -> Candidate {
        Candidate {
            indices: self
                .channels
                .iter()
                .map(|(name, c)| {
                    (
                        name.clone(),
                        (0..c.times.len())
                            .map(|_| rng.gen_range(0..c.levels.len()))
                            .collect(),
                    )
                })
                .collect(),
        }
    }

    /// Candidate number `rank` in mixed-radix order.
    fn candidate_at(&self, mut rank: u128) -> Candidate {
        let mut indices = BTreeMap::new();
        for (name, channel) in &self.channels {
            let radix = channel.levels.len() as u128;
            let digits = (0..channel.times.len())
                .map(|_| {
                    let digit = (rank % radix) as usize;
                    rank /= radix;
                    digit
                })
                .collect();
            indices.insert(name.clone(), digits);
        }
        Candidate { indices }
    }

    pub fn input_signal(&self, candidate: &Candidate) -> InputSignal {
        InputSignal {
            channels: self
                .channels
                .iter()
                .map(|(name, channel)| {
                    let values = candidate.indices[name]
                        .iter()
                        .map(|&i| channel.levels[i])
                        .collect();
                    let input = ChannelInput {
                        times: channel.times.clone(),
                        values,
                        interp: channel.interp,
                    };
                    (name.clone(), input)
                })
                .collect(),
        }
    }
}

/// One value-level index per control time, per channel.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Candidate {
    pub indices: BTreeMap<String, Vec<usize>>,
}

impl Candidate {
    /// Identity of the candidate on a grid of the given refinement generation.
    pub fn hash(&self, generation: u32) -> u64 {
        let mut hasher = DefaultHasher::new();
        generation.hash(&mut hasher);
        self.indices.hash(&mut hasher);
        hasher.finish()
    }

    pub fn is_valid_for(&self, grid: &Grid) -> bool {
        self.indices.len() == grid.channels.len()
            && grid.channels.iter().all(|(name, channel)| {
                self.indices.get(name).is_some_and(|digits| {
                    digits.len() == channel.times.len()
                        && digits.iter().all(|&i| i < channel.levels.len())
                })
            })
    }
}

/// Candidates differing from `candidate` by one level at one position, ordered by
/// channel, control time, then `-1` before `+1`.
pub fn neighbors(candidate: &Candidate, grid: &Grid) -> Vec<Candidate> {
    let mut result = Vec::new();
    for (name, channel) in &grid.channels {
        for position in 0..channel.times.len() {
            let index = candidate.indices[name][position];
            let moves = [
                index.checked_sub(1),
                Some(index + 1).filter(|i| *i < channel.levels.len()),
            ];
            for level in moves.into_iter().flatten() {
                let mut next = candidate.clone();
                next.indices.get_mut(name).unwrap()[position] = level;
                result.push(next);
            }
        }
    }
    result
}

fn with_midpoints<T: Copy>(values: &[T], midpoint: impl Fn(T, T) -> T) -> Vec<T> {
    let mut out = Vec::with_capacity(values.len() * 2);
    for pair in values.windows(2) {
        out.push(pair[0]);
        out.push(midpoint(pair[0], pair[1]));
    }
    out.push(*values.last().unwrap());
    out
}

/// Inserts the midpoint between neighbouring levels and neighbouring control times.
pub fn refine(grid: &Grid) -> Grid {
    let channels = grid
        .channels
        .iter()
        .map(|(name, channel)| {
            let refined = ChannelGrid {
                times: with_midpoints(&channel.times, |a, b| (a + b) / Rational::from_integer(2)),
                levels: with_midpoints(&channel.levels, |a, b| a + (b - a) / 2.0),
                interp: channel.interp,
            };
            (name.clone(), refined)
        })
        .collect();
    Grid {
        channels,
        generation: grid.generation + 1,
    }
}

/// Maps a candidate of `old` onto `refine(old)`. Old positions and levels move to even
/// indices. A new control time copies the preceding level under hold and takes the level
/// nearest the interpolated value under linear interpolation. The flag reports whether the
/// resulting input signal is unchanged.
pub fn embed(candidate: &Candidate, old: &Grid, refined: &Grid) -> (Candidate, bool) {
    let mut exact = true;
    let mut indices = BTreeMap::new();
    for (name, channel) in &old.channels {
        let levels = &refined.channels[name].levels;
        let digits = &candidate.indices[name];
        let mut out = Vec::with_capacity(digits.len() * 2);
        for (position, &digit) in digits.iter().enumerate() {
            out.push(digit * 2);
            if let Some(&next) = digits.get(position + 1) {
                match channel.interp {
                    Interpolation::Hold => out.push(digit * 2),
                    Interpolation::Linear => {
                        let target = (channel.levels[digit] + channel.levels[next]) / 2.0;
                        let nearest = (0..levels.len())
                            .min_by(|&a, &b| {
                                (levels[a] - target)
                                    .abs()
                                    .total_cmp(&(levels[b] - target).abs())
                            })
                            .unwrap();
                        exact &= levels[nearest] == target;
                        out.push(nearest);
                    }
                }
            }
        }
        indices.insert(name.clone(), out);
    }
    (Candidate { indices }, exact)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchConfig {
    /// Maximum number of simulations.
    pub budget: usize,
    pub seed: u64,
    /// Neighbours sampled per iteration.
    pub neighbor_sample_size: usize,
    /// Consecutive non-improving iterations before refining or restarting.
    pub stall_threshold: usize,
    pub max_refinements: usize,
    pub tabu_capacity: usize,
    /// `None` restarts as often as the budget allows.
    pub restart_limit: Option<usize>,
    /// Worker threads for neighbour evaluation; results do not depend on it.
    pub jobs: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            budget: 200,
            seed: 0,
            neighbor_sample_size: 8,
            stall_threshold: 10,
            max_refinements: 3,
            tabu_capacity: 1000,
            restart_limit: None,
            jobs: 1,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<(), FalsifyError> {
        let checks = [
            (self.budget, "budget"),
            (self.neighbor_sample_size, "neighbor sample size"),
            (self.stall_threshold, "stall threshold"),
            (self.tabu_capacity, "tabu capacity"),
            (self.jobs, "jobs"),
        ];
        match checks.iter().find(|(value, _)| *value == 0) {
            Some((_, name)) => Err(FalsifyError::Config(format!("{name} must be positive"))),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FalsificationStatus {
    Falsified,
    BudgetExhausted,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistoryEntry {
    pub hash: u64,
    pub robustness: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FalsificationResult {
    pub status: FalsificationStatus,
    pub best_candidate: Candidate,
    /// The grid `best_candidate` indexes into.
    pub best_grid: Grid,
    pub best_robustness: f64,
    pub simulations_used: usize,
    /// One entry per simulation, in evaluation order.
    pub history: Vec<HistoryEntry>,
}

impl FalsificationResult {
    pub fn best_input(&self) -> InputSignal {
        self.best_grid.input_signal(&self.best_candidate)
    }

    pub fn to_json(&self) -> Value {
        let candidate: serde_json::Map<String, Value> = self
            .best_input()
            .channels
            .into_iter()
            .map(|(name, input)| {
                let points: Vec<Value> = input
                    .times
                    .iter()
                    .zip(&input.values)
                    .map(|(t, v)| serde_json::json!([to_f64(*t), v]))
                    .collect();
                (name, Value::Array(points))
            })
            .collect();
        let history: Vec<Value> = self
            .history
            .iter()
            .map(|entry| serde_json::json!({"hash": format!("{:016x}", entry.hash), "robustness": entry.robustness}))
            .collect();
        serde_json::json!({
            "status": self.status,
            "best_candidate": candidate,
            "best_robustness": self.best_robustness,
            "simulations_used": self.simulations_used,
            "history": history,
        })
    }
}

/// Simulation horizon for a search: the formula horizon or the last control time,
/// whichever is later; one sample period when both are zero.
pub fn simulation_horizon(formula: &Formula, model: &ModelSpec, grid: &Grid) -> Rational {
    let horizon = formula.horizon().max(grid.last_control_time());
    if horizon.is_zero() {
        model.sample_period
    } else {
        horizon
    }
}

/// Simulates `input` on `model` and returns the trace.
pub fn simulate_candidate(
    formula: &Formula,
    model: &ModelSpec,
    candidate: &Candidate,
    grid: &Grid,
) -> Result<Trace, FalsifyError> {
    Ok(simulate(
        model,
        &grid.input_signal(candidate),
        simulation_horizon(formula, model, grid),
    )?)
}

/// Robustness of `formula` at time 0 on the simulated response to `candidate`.
pub fn cost(
    formula: &Formula,
    model: &ModelSpec,
    candidate: &Candidate,
    grid: &Grid,
) -> Result<f64, FalsifyError> {
    if !candidate.is_valid_for(grid) {
        return Err(FalsifyError::Grid("candidate does not fit the grid".into()));
    }
    let trace = simulate_candidate(formula, model, candidate, grid)?;
    Ok(robustness(formula, &trace, Rational::zero())?)
}

struct Search<'a> {
    formula: &'a Formula,
    model: &'a ModelSpec,
    cfg: &'a SearchConfig,
    pool: Option<rayon::ThreadPool>,
    tabu: VecDeque<u64>,
    tabu_set: HashSet<u64>,
    history: Vec<HistoryEntry>,
    best: Option<(Candidate, Grid, f64)>,
}

impl Search<'_> {
    fn remaining(&self) -> usize {
        self.cfg.budget - self.history.len()
    }

    fn is_tabu(&self, candidate: &Candidate, grid: &Grid) -> bool {
        self.tabu_set.contains(&candidate.hash(grid.generation))
    }

    fn mark(&mut self, hash: u64) {
        if self.tabu_set.insert(hash) {
            self.tabu.push_back(hash);
            if self.tabu.len() > self.cfg.tabu_capacity {
                let evicted = self.tabu.pop_front().unwrap();
                self.tabu_set.remove(&evicted);
            }
        }
    }

    /// Evaluates `batch` in order, stopping after the first negative cost. Returns the
    /// costs of the candidates actually recorded.
    fn evaluate(&mut self, batch: &[Candidate], grid: &Grid) -> Result<Vec<f64>, FalsifyError> {
        let batch = &batch[..batch.len().min(self.remaining())];
        let (formula, model) = (self.formula, self.model);
        let costs: Vec<Result<f64, FalsifyError>> = match &self.pool {
            Some(pool) => pool.install(|| {
                batch
                    .par_iter()
                    .map(|c| cost(formula, model, c, grid))
                    .collect()
            }),
            None => {
                let mut costs = Vec::new();
                for candidate in batch {
                    let value = cost(formula, model, candidate, grid);
                    let stop = matches!(value, Ok(v) if v < 0.0) || value.is_err();
                    costs.push(value);
                    if stop {
                        break;
                    }
                }
                costs
            }
        };
        let mut recorded = Vec::new();
        for (candidate, value) in batch.iter().zip(costs) {
            let value = value?;
            let hash = candidate.hash(grid.generation);
            self.history.push(HistoryEntry {
                hash,
                robustness: value,
            });
            self.mark(hash);
            if self.best.as_ref().is_none_or(|(_, _, best)| value < *best) {
                self.best = Some((candidate.clone(), grid.clone(), value));
            }
            recorded.push(value);
            if value < 0.0 {
                break;
            }
        }
        Ok(recorded)
    }

    /// A uniformly random non-tabu candidate, or `None` when every candidate is tabu.
    fn fresh_candidate(&self, grid: &Grid, rng: &mut ChaCha8Rng) -> Option<Candidate> {
        for _ in 0..64 {
            let candidate = grid.random_candidate(rng);
            if !self.is_tabu(&candidate, grid) {
                return Some(candidate);
            }
        }
        let size = grid.size();
        if size > self.tabu_set.len() as u128 + 64 {
            // Too large to enumerate; keep drawing, a free candidate exists.
            return std::iter::repeat_with(|| grid.random_candidate(rng))
                .find(|c| !self.is_tabu(c, grid));
        }
        let offset = rng.gen_range(0..size);
        (0..size)
            .map(|k| grid.candidate_at((k + offset) % size))
            .find(|c| !self.is_tabu(c, grid))
    }

    fn finish(
        self,
        status: FalsificationStatus,
        fallback: (Candidate, Grid),
    ) -> FalsificationResult {
        let (best_candidate, best_grid, best_robustness) =
            self.best
                .unwrap_or((fallback.0, fallback.1, crate::monitor::ROBUSTNESS_TOP));
        FalsificationResult {
            status,
            best_candidate,
            best_grid,
            best_robustness,
            simulations_used: self.history.len(),
            history: self.history,
        }
    }
}

/// Searches for an input whose simulated response gives `formula` negative robustness.
/// Deterministic for a fixed configuration, independent of `jobs`.
pub fn falsify(
    formula: &Formula,
    model: &ModelSpec,
    grid: &Grid,
    cfg: &SearchConfig,
) -> Result<FalsificationResult, FalsifyError> {
    cfg.validate()?;
    model.validate()?;
    let pool = if cfg.jobs > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.jobs)
            .build();
        Some(pool.map_err(|e| FalsifyError::Config(e.to_string()))?)
    } else {
        None
    };
    let mut search = Search {
        formula,
        model,
        cfg,
        pool,
        tabu: VecDeque::new(),
        tabu_set: HashSet::new(),
        history: Vec::new(),
        best: None,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut grid = grid.clone();
    let mut current = grid.random_candidate(&mut rng);
    let initial = (current.clone(), grid.clone());
    let mut current_cost = search.evaluate(std::slice::from_ref(&current), &grid)?[0];
    let mut stalls = 0;
    let mut refinements = 0;
    let mut restarts = 0;

    loop {
        if search.best.as_ref().is_some_and(|(_, _, cost)| *cost < 0.0) {
            return Ok(search.finish(FalsificationStatus::Falsified, initial));
        }
        if search.remaining() == 0 {
            return Ok(search.finish(FalsificationStatus::BudgetExhausted, initial));
        }

        let open: Vec<Candidate> = neighbors(&current, &grid)
            .into_iter()
            .filter(|c| !search.is_tabu(c, &grid))
            .collect();
        let amount = cfg.neighbor_sample_size.min(open.len());
        let mut picked = sample(&mut rng, open.len(), amount).into_vec();
        picked.sort_unstable();
        let batch: Vec<Candidate> = picked.into_iter().map(|i| open[i].clone()).collect();
        let costs = search.evaluate(&batch, &grid)?;
        let best_move = costs
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, c)| (i, *c));
        match best_move {
            Some((index, value)) if value < current_cost => {
                current = batch[index].clone();
                current_cost = value;
                stalls = 0;
            }
            _ => stalls += 1,
        }
        if stalls < cfg.stall_threshold {
            continue;
        }
        stalls = 0;
        if refinements < cfg.max_refinements {
            let refined = refine(&grid);
            let (embedded, exact) = embed(&current, &grid, &refined);
            grid = refined;
            refinements += 1;
            current = embedded;
            if exact {
                search.mark(current.hash(grid.generation));
            } else if let Some(&value) = search
                .evaluate(std::slice::from_ref(&current), &grid)?
                .first()
            {
                current_cost = value;
            }
            continue;
        }
        if cfg.restart_limit.is_some_and(|limit| restarts >= limit) {
            return Ok(search.finish(FalsificationStatus::BudgetExhausted, initial));
        }
        let Some(fresh) = search.fresh_candidate(&grid, &mut rng) else {
            // Every candidate of the finest grid has been visited recently.
            return Ok(search.finish(FalsificationStatus::BudgetExhausted, initial));
        };
        restarts += 1;
        current = fresh;
        if let Some(&value) = search
            .evaluate(std::slice::from_ref(&current), &grid)?
            .first()
        {
            current_cost = value;
        }
    }
}

/// Outcome of one bisection step.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MiningStep {
    #[serde(serialize_with = "serialize_rational")]
    pub value: Rational,
    pub status: FalsificationStatus,
    pub best_robustness: f64,
    pub simulations_used: usize,
}

fn serialize_rational<S: serde::Serializer>(
    value: &Rational,
    serializer: S,
) -> Result<S::Ok, S::Error> {
    serializer.serialize_str(&format_rational(*value))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MiningResult {
    /// Tightest parameter value the search failed to falsify.
    pub value: Rational,
    pub lo: Rational,
    pub hi: Rational,
    pub steps: Vec<MiningStep>,
}

impl MiningResult {
    pub fn to_json(&self, parameter: &str) -> Value {
        serde_json::json!({
            "parameter": parameter,
            "value": format_rational(self.value),
            "value_f64": to_f64(self.value),
            "lo": format_rational(self.lo),
            "hi": format_rational(self.hi),
            "steps": self.steps,
        })
    }
}

/// Bisects a monotone template parameter between a falsifiable `lo` and an unfalsified
/// `hi`, running one falsification per step. Best effort: the result was not falsified
/// within the budget, which does not prove it holds.
#[allow(clippy::too_many_arguments)]
pub fn mine_parameter(
    template: &TemplateInstance,
    parameter: &str,
    lo: Rational,
    hi: Rational,
    model: &ModelSpec,
    grid: &Grid,
    cfg: &SearchConfig,
    iterations: usize,
) -> Result<MiningResult, FalsifyError> {
    template.require_monotone(parameter)?;
    if lo >= hi {
        return Err(FalsifyError::Config("mining needs lo < hi".into()));
    }
    let (mut lo, mut hi) = (lo, hi);
    let mut steps = Vec::with_capacity(iterations);
    for _ in 0..iterations {
        let mid = (lo + hi) / Rational::from_integer(2);
        let formula = template.clone().with(parameter, mid).instantiate()?;
        let result = falsify(&formula, model, grid, cfg)?;
        if result.status == FalsificationStatus::Falsified {
            lo = mid;
        } else {
            hi = mid;
        }
        steps.push(MiningStep {
            value: mid,
            status: result.status,
            best_robustness: result.best_robustness,
            simulations_used: result.simulations_used,
        });
    }
    Ok(MiningResult {
        value: hi,
        lo,
        hi,
        steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::parse;

    fn r(n: i64) -> Rational {
        Rational::from_integer(n)
    }

    fn grid(times: &[i64], levels: &[f64]) -> Grid {
        let channel = ChannelGrid {
            times: times.iter().map(|t| r(*t)).collect(),
            levels: levels.to_vec(),
            interp: Interpolation::Hold,
        };
        Grid::new(BTreeMap::from([("u".to_string(), channel)])).unwrap()
    }

    fn candidate(indices: &[usize]) -> Candidate {
        Candidate {
            indices: BTreeMap::from([("u".to_string(), indices.to_vec())]),
        }
    }

    #[test]
    fn neighbor_structure() {
        let g = grid(&[0], &[0.0, 0.5, 1.0]);
        assert_eq!(neighbors(&candidate(&[0]), &g), vec![candidate(&[1])]);
        let g = grid(&[0, 5], &[0.0, 0.5, 1.0]);
        assert_eq!(
            neighbors(&candidate(&[1, 1]), &g),
            vec![
                candidate(&[0, 1]),
                candidate(&[2, 1]),
                candidate(&[1, 0]),
                candidate(&[1, 2])
            ]
        );
    }

    #[test]
    fn refinement() {
        let g = grid(&[0, 10], &[0.0, 1.0]);
        let once = refine(&g);
        assert_eq!(once.channels["u"].levels, vec![0.0, 0.5, 1.0]);
        assert_eq!(once.channels["u"].times, vec![r(0), r(5), r(10)]);
        assert_eq!(refine(&once).channels["u"].levels.len(), 5);

        let (embedded, exact) = embed(&candidate(&[1, 0]), &g, &once);
        assert!(exact);
        assert_eq!(embedded, candidate(&[2, 2, 0]));
        assert_eq!(
            g.input_signal(&candidate(&[1, 0])).channels["u"].value_at(r(7)),
            1.0
        );
        assert_eq!(
            once.input_signal(&embedded).channels["u"].value_at(r(7)),
            1.0
        );
    }

    #[test]
    fn linear_embedding() {
        let mut g = grid(&[0, 10], &[0.0, 1.0, 4.0]);
        g.channels.get_mut("u").unwrap().interp = Interpolation::Linear;
        let refined = refine(&g);
        let (embedded, exact) = embed(&candidate(&[0, 1]), &g, &refined);
        assert_eq!(embedded, candidate(&[0, 1, 2]));
        assert!(exact);
        let (embedded, exact) = embed(&candidate(&[0, 2]), &g, &refined);
        // Midpoint 2 is not a level of {0, 0.5, 1, 2.5, 4}; 2.5 is nearest.
        assert_eq!(embedded, candidate(&[0, 3, 4]));
        assert!(!exact);
    }

    #[test]
    fn grid_json() {
        let g = Grid::from_json(
            r#"{"channels":{"u":{"times":[0,"5/2",10],"levels":[0,0.5,1],"interp":"linear"}}}"#,
        )
        .unwrap();
        assert_eq!(g.channels["u"].times[1], Rational::new(5, 2));
        assert_eq!(Grid::from_json(&g.to_json().to_string()).unwrap(), g);
        assert!(Grid::from_json(r#"{"channels":{"u":{"times":[1],"levels":[0,1]}}}"#).is_err());
        assert!(Grid::from_json(r#"{"channels":{"u":{"times":[0],"levels":[1]}}}"#).is_err());
        assert!(Grid::from_json(r#"{"channels":{"u":{"times":[0],"levels":[1,0]}}}"#).is_err());
    }

    #[test]
    fn cost_examples() {
        let f = parse("G[0,40](x < 1.2)").unwrap();
        let model = ModelSpec::parse("secondorder").unwrap();
        let g = grid(&[0, 5, 10, 15, 20], &[0.0, 0.5, 1.0]);
        let step = cost(&f, &model, &candidate(&[2; 5]), &g).unwrap();
        assert!((step - (1.2 - 1.5266)).abs() < 2e-3, "{step}");
        assert_eq!(cost(&f, &model, &candidate(&[0; 5]), &g).unwrap(), 1.2);
        assert_eq!(cost(&f, &model, &candidate(&[2; 5]), &g).unwrap(), step);
        assert!(cost(&f, &model, &candidate(&[3; 5]), &g).is_err());
    }

    #[test]
    fn unfalsifiable_spec_exhausts_budget() {
        let model = ModelSpec::parse("secondorder").unwrap();
        let cfg = SearchConfig {
            budget: 10,
            ..SearchConfig::default()
        };
        let result = falsify(&Formula::True, &model, &grid(&[0, 5], &[0.0, 1.0]), &cfg).unwrap();
        assert_eq!(result.status, FalsificationStatus::BudgetExhausted);
        assert_eq!(result.simulations_used, 10);
        assert_eq!(result.best_robustness, crate::monitor::ROBUSTNESS_TOP);
    }

    #[test]
    fn exhausted_space_stops_early() {
        let model = ModelSpec::parse("secondorder").unwrap();
        let cfg = SearchConfig {
            budget: 1000,
            max_refinements: 0,
            stall_threshold: 1,
            ..SearchConfig::default()
        };
        let result = falsify(&Formula::True, &model, &grid(&[0], &[0.0, 1.0]), &cfg).unwrap();
        assert_eq!(result.status, FalsificationStatus::BudgetExhausted);
        assert_eq!(result.simulations_used, 2);
    }

    #[test]
    fn rejects_zero_budget() {
        let model = ModelSpec::parse("secondorder").unwrap();
        let cfg = SearchConfig {
            budget: 0,
            ..SearchConfig::default()
        };
        assert!(matches!(
            falsify(&Formula::True, &model, &grid(&[0], &[0.0, 1.0]), &cfg),
            Err(FalsifyError::Config(_))
        ));
    }

    #[test]
    fn zero_iterations_return_hi() {
        let template = TemplateInstance::parse("overshoot(x,ref=1,m=0.2,H=40)").unwrap();
        let model = ModelSpec::parse("secondorder").unwrap();
        let g = grid(&[0], &[0.0, 0.5, 1.0]);
        let mined = mine_parameter(
            &template,
            "m",
            r(0),
            r(1),
            &model,
            &g,
            &SearchConfig::default(),
            0,
        )
        .unwrap();
        assert_eq!(mined.value, r(1));
        assert!(matches!(
            mine_parameter(
                &template,
                "H",
                r(0),
                r(1),
                &model,
                &g,
                &SearchConfig::default(),
                3
            ),
            Err(FalsifyError::Template(TemplateError::NotMonotone { .. }))
        ));
    }
}
