//! Strategy selection on a sample of subproblems.
//!
//! Every candidate is raced on each sampled subproblem; the slow ones are
//! stopped at a multiple of the first finisher's time. The strategy with the
//! smallest total is re-run without timeouts until its column is exact, and
//! every other strategy is then compared against it with a signed rank test
//! on data whose censoring cannot change `W+`.
//!
//! The algorithm only sees runtimes through [`RuntimeSource`], so the same
//! code runs on a fixed matrix, on the solver in work units, or on the solver
//! in wall-clock time.

mod driver;
mod source;

use serde::{Deserialize, Serialize};

use crate::stats::{
    censor_plan, paired_ttest, wsr_test, Decision, PairedDiffs, TTestResult, WsrResult,
};

pub use crate::runner::TimeMode;
pub use driver::{pss_on_decomposition, pss_select, PssConfig, PssOutcome};
pub use source::{MatrixSource, SolverSource};

/// One cell of the runtime matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Entry {
    pub value: f64,
    pub censored: bool,
    /// Limit the run was stopped at; always equal to `value` when censored.
    pub censor_limit: Option<f64>,
}

impl Entry {
    pub fn done(value: f64) -> Self {
        Entry {
            value,
            censored: false,
            censor_limit: None,
        }
    }

    pub fn stopped(limit: f64) -> Self {
        Entry {
            value: limit,
            censored: true,
            censor_limit: Some(limit),
        }
    }

    fn from_probe(p: Probe) -> Self {
        if p.complete {
            Entry::done(p.time)
        } else {
            Entry::stopped(p.time)
        }
    }
}

/// Result of one run: `time` is the cost if `complete`, the limit reached otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Probe {
    pub time: f64,
    pub complete: bool,
}

/// Observations per (sampled subproblem, strategy).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuntimeMatrix {
    pub arms: Vec<String>,
    /// Subproblem id of each row.
    pub rows: Vec<usize>,
    /// `entries[row][arm]`.
    pub entries: Vec<Vec<Entry>>,
}

impl RuntimeMatrix {
    /// A fully uncensored matrix.
    pub fn from_values(arms: Vec<String>, rows: Vec<usize>, values: &[Vec<f64>]) -> Self {
        let entries = values
            .iter()
            .map(|r| r.iter().map(|v| Entry::done(*v)).collect())
            .collect();
        RuntimeMatrix {
            arms,
            rows,
            entries,
        }
    }

    pub fn num_rows(&self) -> usize {
        self.entries.len()
    }

    pub fn num_arms(&self) -> usize {
        self.arms.len()
    }

    pub fn column(&self, arm: usize) -> Vec<f64> {
        self.entries.iter().map(|r| r[arm].value).collect()
    }

    pub fn censor_flags(&self, arm: usize) -> Vec<bool> {
        self.entries.iter().map(|r| r[arm].censored).collect()
    }

    /// Column total, timeouts counted at their censoring value.
    pub fn total(&self, arm: usize) -> f64 {
        self.entries.iter().map(|r| r[arm].value).sum()
    }

    pub fn totals(&self) -> Vec<f64> {
        (0..self.num_arms()).map(|a| self.total(a)).collect()
    }

    pub fn censored_count(&self, arm: usize) -> usize {
        self.entries.iter().filter(|r| r[arm].censored).count()
    }
}

/// Anything that can run strategy `arm` on sampled row `row`.
pub trait RuntimeSource {
    /// Runs to completion, or until `limit` when given.
    fn run(&mut self, row: usize, arm: usize, limit: Option<f64>) -> Probe;

    /// Stop point for the slower strategies once the first one finished in `t_star`.
    fn race_limit(&self, t_star: f64, factor: f64) -> f64 {
        t_star * factor
    }

    /// Races `arms` on `row`. The default simulates the parallel race.
    fn race(&mut self, row: usize, arms: &[usize], factor: f64) -> Vec<Entry> {
        simulate_race(self, row, arms, factor)
    }
}

/// Parallel race reproduced with sequential runs under a doubling shared budget.
///
/// Runs are deterministic, so the first budget at which some strategy
/// completes reveals the true first finisher `t*`; everyone is then judged
/// against the limit derived from `t*` exactly as in a parallel race.
pub fn simulate_race<S: RuntimeSource + ?Sized>(
    src: &mut S,
    row: usize,
    arms: &[usize],
    factor: f64,
) -> Vec<Entry> {
    if let [only] = arms {
        return vec![Entry::from_probe(src.run(row, *only, None))];
    }
    let mut budget = 1.0;
    let probes = loop {
        let probes: Vec<Probe> = arms
            .iter()
            .map(|&a| src.run(row, a, Some(budget)))
            .collect();
        if probes.iter().any(|p| p.complete) {
            break probes;
        }
        budget *= 2.0;
    };
    let t_star = probes
        .iter()
        .filter(|p| p.complete)
        .map(|p| p.time)
        .fold(f64::INFINITY, f64::min);
    let limit = src.race_limit(t_star, factor);
    arms.iter()
        .zip(probes)
        .map(|(&a, p)| match (p.complete, p.time <= limit) {
            (true, true) => Entry::done(p.time),
            (true, false) => Entry::stopped(limit),
            (false, _) if budget >= limit => Entry::stopped(limit),
            (false, _) => Entry::from_probe(src.run(row, a, Some(limit))),
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RaceConfig {
    pub timeout_factor: f64,
    /// Per-comparison significance level.
    pub alpha: f64,
    pub sample_seed: u64,
    pub time_mode: TimeMode,
}

impl Default for RaceConfig {
    fn default() -> Self {
        RaceConfig {
            timeout_factor: 2.0,
            alpha: 0.01,
            sample_seed: 0,
            time_mode: TimeMode::Work,
        }
    }
}

impl RaceConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.timeout_factor.is_nan() || self.timeout_factor <= 1.0 {
            return Err(format!(
                "timeout factor must exceed 1 (got {})",
                self.timeout_factor
            ));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(format!("alpha must lie in (0, 1) (got {})", self.alpha));
        }
        Ok(())
    }
}

/// Races every arm on every row and returns the censored matrix and its cost.
pub fn race_all<S: RuntimeSource + ?Sized>(
    src: &mut S,
    arms: Vec<String>,
    rows: Vec<usize>,
    cfg: &RaceConfig,
) -> (RuntimeMatrix, f64) {
    let all: Vec<usize> = (0..arms.len()).collect();
    let mut entries = Vec::with_capacity(rows.len());
    let mut cost = 0.0;
    for r in 0..rows.len() {
        let row = src.race(r, &all, cfg.timeout_factor);
        cost += row.iter().map(|e| e.value).sum::<f64>();
        entries.push(row);
    }
    (
        RuntimeMatrix {
            arms,
            rows,
            entries,
        },
        cost,
    )
}

fn resolve<S: RuntimeSource + ?Sized>(
    m: &mut RuntimeMatrix,
    src: &mut S,
    row: usize,
    arm: usize,
    limit: Option<f64>,
    cost: &mut f64,
) {
    let p = src.run(row, arm, limit);
    *cost += p.time;
    m.entries[row][arm] = Entry::from_probe(p);
}

fn argmin_total(m: &RuntimeMatrix, candidates: &[usize]) -> usize {
    let mut best = candidates[0];
    for &c in candidates {
        let (tc, tb) = (m.total(c), m.total(best));
        if tc < tb || (tc == tb && c < best) {
            best = c;
        }
    }
    best
}

/// Smallest-total candidate whose column is exact, re-running timeouts as needed.
/// Re-run cost is added to `cost`.
pub fn find_uncensored_best<S: RuntimeSource + ?Sized>(
    m: &mut RuntimeMatrix,
    src: &mut S,
    candidates: &[usize],
    cost: &mut f64,
) -> usize {
    loop {
        let b = argmin_total(m, candidates);
        let pending: Vec<usize> = (0..m.num_rows())
            .filter(|&r| m.entries[r][b].censored)
            .collect();
        if pending.is_empty() {
            return b;
        }
        for r in pending {
            resolve(m, src, r, b, None, cost);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Elimination {
    Eliminated(WsrResult),
    Survives(WsrResult),
    Reversal { wsr: WsrResult, ttest: TTestResult },
}

/// Compares `i` against the exact column `b`.
///
/// Entries of `i` stopped below `to(j)` are re-run up to `to(j)` first. A
/// re-run that finishes can reveal a larger positive difference, which
/// raises the thresholds, so this repeats until nothing changes.
pub fn eliminate<S: RuntimeSource + ?Sized>(
    m: &mut RuntimeMatrix,
    src: &mut S,
    b: usize,
    i: usize,
    cfg: &RaceConfig,
    cost: &mut f64,
) -> Elimination {
    let tb = m.column(b);
    loop {
        let known: Vec<f64> = (0..m.num_rows())
            .filter(|&r| !m.entries[r][i].censored)
            .map(|r| tb[r] - m.entries[r][i].value)
            .collect();
        let plan = censor_plan(&tb, &known);
        let mut changed = false;
        for r in 0..m.num_rows() {
            let e = m.entries[r][i];
            if e.censored && e.value < plan.thresholds[r] {
                resolve(m, src, r, i, Some(plan.thresholds[r]), cost);
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let pd = PairedDiffs::from_times(&tb, &m.column(i), &m.censor_flags(i)).expect("same rows");
    let wsr = wsr_test(&pd, cfg.alpha);
    match wsr.decision {
        Decision::FirstBetter => Elimination::Eliminated(wsr),
        Decision::NotSignificant => Elimination::Survives(wsr),
        Decision::SecondBetter => {
            for r in 0..m.num_rows() {
                if m.entries[r][i].censored {
                    resolve(m, src, r, i, None, cost);
                }
            }
            match paired_ttest(&tb, &m.column(i), cfg.alpha) {
                Ok(ttest) if ttest.decision == Decision::SecondBetter => {
                    Elimination::Reversal { wsr, ttest }
                }
                _ => Elimination::Survives(wsr),
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub arm: usize,
    pub against: usize,
    pub wsr: WsrResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReversalRecord {
    pub from: usize,
    pub to: usize,
    pub wsr: WsrResult,
    pub ttest: TTestResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionReport {
    pub winner: usize,
    /// Best strategy right after the race, before any comparison.
    pub race_best: usize,
    pub eliminated: Vec<Comparison>,
    /// Comparisons of the last pass that were not significant.
    pub survivors: Vec<Comparison>,
    /// Candidates of the final tie-break by sample total, when any survived.
    pub survivors_tiebreak: Option<Vec<usize>>,
    pub reversals: Vec<ReversalRecord>,
    pub comparisons: usize,
    pub overall_confidence: f64,
    /// Column totals right after the race.
    pub race_totals: Vec<f64>,
    pub race_cost: f64,
    /// Cost of every re-run after the race.
    pub resolve_cost: f64,
    pub selection_cost: f64,
    /// `s * timeout_factor * sum_j t(race_best, j)`.
    pub race_bound: f64,
    pub matrix: RuntimeMatrix,
}

impl SelectionReport {
    pub fn winner_label(&self) -> &str {
        &self.matrix.arms[self.winner]
    }

    pub fn is_eliminated(&self, arm: usize) -> bool {
        self.eliminated.iter().any(|c| c.arm == arm)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostBound {
    pub race_cost: f64,
    pub race_bound: f64,
    pub resolve_cost: f64,
}

impl CostBound {
    pub fn holds(&self) -> bool {
        self.race_cost <= self.race_bound
    }
}

pub fn selection_cost_bound(report: &SelectionReport) -> CostBound {
    CostBound {
        race_cost: report.race_cost,
        race_bound: report.race_bound,
        resolve_cost: report.resolve_cost,
    }
}

/// Runs the whole selection on the sample rows `rows`.
///
/// Other strategies are compared against the best in increasing order of
/// their total. A confirmed reversal makes the faster strategy the new
/// reference and restarts the pass over the strategies still in play;
/// earlier eliminations stand, and a former reference is never promoted back.
pub fn select<S: RuntimeSource + ?Sized>(
    src: &mut S,
    arms: Vec<String>,
    rows: Vec<usize>,
    cfg: &RaceConfig,
) -> SelectionReport {
    let k = arms.len();
    let (mut m, race_cost) = race_all(src, arms, rows, cfg);
    let race_totals = m.totals();
    let mut resolve_cost = 0.0;
    let all: Vec<usize> = (0..k).collect();
    let mut b = find_uncensored_best(&mut m, src, &all, &mut resolve_cost);
    let race_best = b;
    let race_bound = k as f64 * cfg.timeout_factor * m.total(b);

    let mut alive = vec![true; k];
    let mut former = vec![b];
    let mut eliminated = Vec::new();
    let mut reversals = Vec::new();
    let mut survivors = Vec::new();
    let mut comparisons = 0;
    loop {
        let mut order: Vec<usize> = (0..k).filter(|&a| alive[a] && a != b).collect();
        order.sort_by(|&x, &y| m.total(x).total_cmp(&m.total(y)).then(x.cmp(&y)));
        survivors.clear();
        let mut reversal = None;
        for i in order {
            comparisons += 1;
            match eliminate(&mut m, src, b, i, cfg, &mut resolve_cost) {
                Elimination::Eliminated(wsr) => {
                    alive[i] = false;
                    eliminated.push(Comparison {
                        arm: i,
                        against: b,
                        wsr,
                    });
                }
                Elimination::Survives(wsr) => survivors.push(Comparison {
                    arm: i,
                    against: b,
                    wsr,
                }),
                Elimination::Reversal { wsr, .. } if former.contains(&i) => {
                    survivors.push(Comparison {
                        arm: i,
                        against: b,
                        wsr,
                    })
                }
                Elimination::Reversal { wsr, ttest } => {
                    reversal = Some(ReversalRecord {
                        from: b,
                        to: i,
                        wsr,
                        ttest,
                    });
                    break;
                }
            }
        }
        match reversal {
            Some(r) => {
                log::info!(
                    "reversal: {} replaces {} as reference",
                    m.arms[r.to],
                    m.arms[r.from]
                );
                b = r.to;
                former.push(b);
                reversals.push(r);
            }
            None => break,
        }
    }

    let (winner, survivors_tiebreak) = if survivors.is_empty() {
        (b, None)
    } else {
        let mut cands = vec![b];
        cands.extend(survivors.iter().map(|c| c.arm));
        cands.sort();
        let w = find_uncensored_best(&mut m, src, &cands, &mut resolve_cost);
        (w, Some(cands))
    };
    SelectionReport {
        winner,
        race_best,
        eliminated,
        survivors,
        survivors_tiebreak,
        reversals,
        comparisons,
        overall_confidence: (1.0 - cfg.alpha).powi(comparisons as i32),
        race_totals,
        race_cost,
        resolve_cost,
        selection_cost: race_cost + resolve_cost,
        race_bound,
        matrix: m,
    }
}

/// Cost of the race if every strategy ran every sampled row to completion.
pub fn untimed_cost<S: RuntimeSource + ?Sized>(src: &mut S, rows: usize, arms: usize) -> f64 {
    let mut total = 0.0;
    for r in 0..rows {
        for a in 0..arms {
            total += src.run(r, a, None).time;
        }
    }
    total
}
