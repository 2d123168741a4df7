use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::{select, untimed_cost, RaceConfig, SelectionReport, SolverSource};
use crate::csp::Model;
use crate::eps::{decompose, default_sample_size, srs_sample, Decomposition, DecompositionConfig};
use crate::error::RunError;
use crate::runner::{best_of, solve_all, CostLedger, Phase, SolveAllReport, TimeMode};
use crate::strategy::StrategyId;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PssConfig {
    pub race: RaceConfig,
    pub strategies: Vec<StrategyId>,
    pub workers: usize,
    /// Defaults to 30 subproblems per worker.
    pub target_subproblems: Option<usize>,
    /// Defaults to 1% of the subproblems, at least 30.
    pub sample_size: Option<usize>,
    /// Also run every strategy to completion on the sample, for comparison.
    pub measure_untimed: bool,
}

impl Default for PssConfig {
    fn default() -> Self {
        PssConfig {
            race: RaceConfig::default(),
            strategies: StrategyId::ALL.to_vec(),
            workers: 1,
            target_subproblems: None,
            sample_size: None,
            measure_untimed: false,
        }
    }
}

impl PssConfig {
    pub fn decomposition(&self) -> DecompositionConfig {
        let base = DecompositionConfig::for_workers(self.workers);
        match self.target_subproblems {
            Some(t) => DecompositionConfig {
                target_count: t,
                ..base
            },
            None => base,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PssOutcome {
    pub strategy: StrategyId,
    pub selection: SelectionReport,
    pub subproblems: usize,
    pub depth: usize,
    pub decomposition_work: u64,
    /// Sampled subproblem ids, ascending.
    pub sample: Vec<usize>,
    /// The winner on every subproblem outside the sample.
    pub solve: SolveAllReport,
    pub solve_cost: f64,
    /// Selection plus solve cost, in the time mode's unit.
    pub total_cost: f64,
    pub solutions: u64,
    pub best_objective: Option<i64>,
    pub untimed_race_cost: Option<f64>,
    /// Work the race simulation really executed, probes included.
    pub executed_selection: f64,
    pub ledger: CostLedger,
    pub wall: Duration,
}

/// Decomposes `model`, selects a strategy on a sample and solves the rest with it.
pub fn pss_select(model: &Model, cfg: &PssConfig) -> Result<PssOutcome, RunError> {
    let dec = decompose(model, &cfg.decomposition())?;
    pss_on_decomposition(model, &dec, cfg)
}

pub fn pss_on_decomposition(
    model: &Model,
    dec: &Decomposition,
    cfg: &PssConfig,
) -> Result<PssOutcome, RunError> {
    let started = Instant::now();
    cfg.race.validate().map_err(RunError::Config)?;
    if cfg.strategies.is_empty() {
        return Err(RunError::NoStrategies);
    }
    if dec.is_empty() {
        return Err(RunError::NoSubproblems);
    }
    let n = dec.len();
    let s = cfg.sample_size.unwrap_or_else(|| default_sample_size(n));
    let mut sample = srs_sample(n, s, cfg.race.sample_seed)?.indices;
    sample.sort_unstable();
    let rows = sample.iter().map(|&i| dec.subproblems[i].clone()).collect();
    let mut src = SolverSource::new(model, rows, cfg.strategies.clone(), cfg.race.time_mode);
    let labels = cfg
        .strategies
        .iter()
        .map(|s| s.label().to_string())
        .collect();
    let selection = select(&mut src, labels, sample.clone(), &cfg.race);
    let executed_selection = src.executed();
    let untimed_race_cost = cfg
        .measure_untimed
        .then(|| untimed_cost(&mut src, sample.len(), cfg.strategies.len()));
    let strategy = cfg.strategies[selection.winner];

    let mut in_sample = vec![false; n];
    for &i in &sample {
        in_sample[i] = true;
    }
    let rest: Vec<_> = dec
        .subproblems
        .iter()
        .filter(|sp| !in_sample[sp.id])
        .cloned()
        .collect();
    let solve = solve_all(
        model,
        &rest,
        strategy,
        cfg.workers,
        src.master_incumbent(),
        cfg.race.time_mode,
    )?;

    let sample_runs: Vec<_> = (0..sample.len())
        .map(|r| {
            src.outcome(r, selection.winner)
                .expect("winner column is exact")
        })
        .collect();
    let solutions = solve.solutions + sample_runs.iter().map(|o| o.solutions_found).sum::<u64>();
    let best_objective = best_of(
        model,
        solve.best_objective,
        sample_runs.iter().filter_map(|o| o.best_objective),
    );

    let mut ledger = CostLedger::new(cfg.workers);
    let solve_cost = match cfg.race.time_mode {
        TimeMode::Work => {
            ledger.charge(0, Phase::Decompose, dec.work as f64);
            for (w, load) in solve.per_worker.iter().enumerate() {
                ledger.charge(w, Phase::Solve, *load as f64);
            }
            solve.total_work as f64
        }
        TimeMode::Wall => {
            for (w, load) in solve.per_worker_ms.iter().enumerate() {
                ledger.charge(w, Phase::Solve, *load);
            }
            solve.per_worker_ms.iter().sum()
        }
    };
    for (a, t) in selection.race_totals.iter().enumerate() {
        ledger.charge(a, Phase::Selection, *t);
    }
    ledger.charge(0, Phase::Selection, selection.resolve_cost);

    Ok(PssOutcome {
        strategy,
        subproblems: n,
        depth: dec.depth,
        decomposition_work: dec.work,
        sample,
        solve_cost,
        total_cost: selection.selection_cost + solve_cost,
        solutions,
        best_objective,
        untimed_race_cost,
        executed_selection,
        ledger,
        solve,
        selection,
        wall: started.elapsed(),
    })
}
