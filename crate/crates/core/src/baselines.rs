//! Comparison methods: a UCB1 bandit choosing a strategy per subproblem, and
//! portfolios running several strategies on every subproblem.

use serde::{Deserialize, Serialize};

use crate::csp::Model;
use crate::eps::{Decomposition, Subproblem};
use crate::error::{BanditError, RunError};
use crate::runner::{best_of, solve_all, SolveAllReport, TimeMode};
use crate::search::{solve, SearchMode, SolveOutcome, WorkBudget};
use crate::selection::{pss_on_decomposition, PssConfig, PssOutcome};
use crate::strategy::StrategyId;

/// Reward scale anchored on the mean solving time `mu`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardConfig {
    pub mu: f64,
}

impl RewardConfig {
    pub fn new(mu: f64) -> Result<Self, BanditError> {
        if mu.is_nan() || mu <= 0.0 {
            return Err(BanditError::NonPositiveMean(mu));
        }
        Ok(RewardConfig { mu })
    }

    pub fn t_max(&self) -> f64 {
        10.0 * self.mu
    }

    pub fn t_min(&self) -> f64 {
        self.mu / 10.0
    }
}

/// `(ln t_max - ln t) / (ln t_max - ln t_min)`; 1 at `t_min`, 0 at `t_max`, negative beyond.
pub fn reward(t: f64, rc: &RewardConfig) -> Result<f64, BanditError> {
    if t.is_nan() || t <= 0.0 {
        return Err(BanditError::NonPositiveTime(t));
    }
    Ok((rc.t_max().ln() - t.ln()) / (rc.t_max().ln() - rc.t_min().ln()))
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ArmStats {
    pub pulls: u64,
    pub reward_sum: f64,
    /// `(step, reward)` for every pull.
    pub history: Vec<(u64, f64)>,
}

impl ArmStats {
    pub fn mean(&self) -> f64 {
        if self.pulls == 0 {
            0.0
        } else {
            self.reward_sum / self.pulls as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BanditState {
    /// Total pulls so far.
    pub m: u64,
    pub arms: Vec<ArmStats>,
}

impl BanditState {
    pub fn new(k: usize) -> Result<Self, BanditError> {
        if k == 0 {
            return Err(BanditError::NoArms);
        }
        Ok(BanditState {
            m: 0,
            arms: vec![ArmStats::default(); k],
        })
    }

    pub fn record(&mut self, arm: usize, r: f64) {
        let a = &mut self.arms[arm];
        a.pulls += 1;
        a.reward_sum += r;
        a.history.push((self.m, r));
        self.m += 1;
    }
}

/// Untried arms first, then `mean_i + sqrt(2 ln m / m_i)`; ties go to the lowest index.
pub fn ucb1_select(bs: &BanditState) -> usize {
    if let Some(i) = bs.arms.iter().position(|a| a.pulls == 0) {
        return i;
    }
    let ln_m = (bs.m as f64).ln();
    let score = |a: &ArmStats| a.mean() + (2.0 * ln_m / a.pulls as f64).sqrt();
    let mut best = 0;
    for i in 1..bs.arms.len() {
        if score(&bs.arms[i]) > score(&bs.arms[best]) {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MabTrace {
    pub choices: Vec<usize>,
    pub costs: Vec<f64>,
    pub pulls: Vec<u64>,
    pub total: f64,
    pub state: BanditState,
}

/// UCB1 over `steps` pulls; `cost(step, arm)` is the full solving time.
///
/// The reward scale uses the running mean of every time observed so far,
/// the current one included.
pub fn mab_core<F>(k: usize, steps: usize, mut cost: F) -> Result<MabTrace, BanditError>
where
    F: FnMut(usize, usize) -> f64,
{
    let mut bs = BanditState::new(k)?;
    let mut choices = Vec::with_capacity(steps);
    let mut costs = Vec::with_capacity(steps);
    let mut sum = 0.0;
    for step in 0..steps {
        let arm = ucb1_select(&bs);
        let t = cost(step, arm);
        sum += t;
        let rc = RewardConfig::new(sum / (step + 1) as f64)?;
        bs.record(arm, reward(t, &rc)?);
        choices.push(arm);
        costs.push(t);
    }
    Ok(MabTrace {
        pulls: bs.arms.iter().map(|a| a.pulls).collect(),
        total: sum,
        choices,
        costs,
        state: bs,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MabReport {
    pub strategies: Vec<StrategyId>,
    pub pulls: Vec<u64>,
    pub choices: Vec<StrategyId>,
    pub total_work: u64,
    /// In the time mode's unit.
    pub total_cost: f64,
    pub solutions: u64,
    pub best_objective: Option<i64>,
}

/// Solves the subproblems in queue order, one bandit pull each, without timeouts.
pub fn mab_run(
    model: &Model,
    subproblems: &[Subproblem],
    strategies: &[StrategyId],
    time_mode: TimeMode,
) -> Result<MabReport, RunError> {
    if strategies.is_empty() {
        return Err(RunError::NoStrategies);
    }
    let mut incumbent = None;
    let mut outcomes: Vec<SolveOutcome> = Vec::with_capacity(subproblems.len());
    let mut error = None;
    let trace = mab_core(strategies.len(), subproblems.len(), |step, arm| {
        let mode = SearchMode::for_model(model, incumbent);
        match solve(
            model,
            &subproblems[step],
            strategies[arm],
            mode,
            WorkBudget::unlimited(),
        ) {
            Ok(out) => {
                incumbent = best_of(model, incumbent, out.best_objective.into_iter());
                let t = match time_mode {
                    TimeMode::Work => out.work_used as f64,
                    TimeMode::Wall => out
                        .wall_time
                        .map_or(0.0, |d| d.as_secs_f64() * 1000.0)
                        .max(1e-6),
                };
                outcomes.push(out);
                t
            }
            Err(e) => {
                error.get_or_insert(e);
                1.0
            }
        }
    })
    .map_err(|e| RunError::Config(e.to_string()))?;
    if let Some(e) = error {
        return Err(e.into());
    }
    Ok(MabReport {
        strategies: strategies.to_vec(),
        pulls: trace.pulls,
        choices: trace.choices.iter().map(|&a| strategies[a]).collect(),
        total_work: outcomes.iter().map(|o| o.work_used).sum(),
        total_cost: trace.total,
        solutions: outcomes.iter().map(|o| o.solutions_found).sum(),
        best_objective: incumbent,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PortfolioReport {
    pub strategies: Vec<StrategyId>,
    pub totals: Vec<u64>,
    /// Sum over the members, as if each ran on its own core.
    pub total_work: u64,
    pub solutions: u64,
    pub best_objective: Option<i64>,
}

/// Every subproblem solved by every member.
pub fn portfolio_run(
    model: &Model,
    subproblems: &[Subproblem],
    strategies: &[StrategyId],
    workers: usize,
    time_mode: TimeMode,
) -> Result<PortfolioReport, RunError> {
    let runs: Vec<SolveAllReport> = strategies
        .iter()
        .map(|&s| solve_all(model, subproblems, s, workers, None, time_mode))
        .collect::<Result<_, _>>()?;
    Ok(portfolio_from_runs(model, &runs))
}

/// Portfolio accounting over runs that were already made.
pub fn portfolio_from_runs(model: &Model, runs: &[SolveAllReport]) -> PortfolioReport {
    let totals: Vec<u64> = runs.iter().map(|r| r.total_work).collect();
    PortfolioReport {
        strategies: runs.iter().map(|r| r.strategy).collect(),
        total_work: totals.iter().sum(),
        totals,
        solutions: runs.first().map_or(0, |r| r.solutions),
        best_objective: best_of(model, None, runs.iter().filter_map(|r| r.best_objective)),
    }
}

/// Portfolio total over a known cost matrix `costs[row][arm]`.
pub fn portfolio_cost(costs: &[Vec<f64>], arms: &[usize]) -> f64 {
    costs
        .iter()
        .map(|r| arms.iter().map(|&a| r[a]).sum::<f64>())
        .sum()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Pfolio2Report {
    pub pss: PssOutcome,
    /// Strategy run next to the winner, when the selection left several candidates.
    pub partner: Option<StrategyId>,
    pub partner_work: u64,
    pub total_cost: f64,
}

/// PSS, except that when several strategies survive the tests the two with
/// the smallest sample totals both solve the remaining subproblems.
pub fn pss_pfolio2(
    model: &Model,
    dec: &Decomposition,
    cfg: &PssConfig,
) -> Result<Pfolio2Report, RunError> {
    let pss = pss_on_decomposition(model, dec, cfg)?;
    let report = &pss.selection;
    let partner = report.survivors_tiebreak.as_ref().and_then(|cands| {
        cands
            .iter()
            .copied()
            .filter(|&c| c != report.winner)
            .min_by(|&a, &b| {
                report
                    .matrix
                    .total(a)
                    .total_cmp(&report.matrix.total(b))
                    .then(a.cmp(&b))
            })
            .map(|c| cfg.strategies[c])
    });
    let (partner_work, partner_cost) = match partner {
        Some(sid) => {
            let rest: Vec<Subproblem> = dec
                .subproblems
                .iter()
                .filter(|sp| pss.sample.binary_search(&sp.id).is_err())
                .cloned()
                .collect();
            let run = solve_all(model, &rest, sid, cfg.workers, None, cfg.race.time_mode)?;
            let cost = match cfg.race.time_mode {
                TimeMode::Work => run.total_work as f64,
                TimeMode::Wall => run.per_worker_ms.iter().sum(),
            };
            (run.total_work, cost)
        }
        None => (0, 0.0),
    };
    Ok(Pfolio2Report {
        total_cost: pss.total_cost + partner_cost,
        partner,
        partner_work,
        pss,
    })
}
