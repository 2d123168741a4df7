//! Result tables: every method on one problem next to its ratio to the best.

use std::fmt::Write as _;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::baselines::{
    mab_core, mab_run, portfolio_cost, portfolio_from_runs, MabReport, PortfolioReport,
};
use crate::csp::Model;
use crate::eps::Decomposition;
use crate::error::RunError;
use crate::runner::{solve_all, SolveAllReport, TimeMode};
use crate::selection::{
    pss_on_decomposition, select, untimed_cost, MatrixSource, PssConfig, PssOutcome, RaceConfig,
    SelectionReport,
};

/// One CSV / table line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodRow {
    pub problem: String,
    pub strategy: String,
    pub total_work: f64,
    pub wall_ms: f64,
    pub ratio: f64,
    pub censored_count: usize,
    pub winner_flag: bool,
}

/// Each total divided by the smallest one.
pub fn ratios(totals: &[f64]) -> Vec<f64> {
    let best = totals.iter().copied().fold(f64::INFINITY, f64::min);
    totals
        .iter()
        .map(|t| {
            if best > 0.0 {
                t / best
            } else if *t == 0.0 {
                1.0
            } else {
                f64::INFINITY
            }
        })
        .collect()
}

fn fill_ratios(rows: &mut [MethodRow]) {
    let totals: Vec<f64> = rows.iter().map(|r| r.total_work).collect();
    for (row, r) in rows.iter_mut().zip(ratios(&totals)) {
        row.ratio = r;
    }
}

pub fn render_table(rows: &[MethodRow]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<16} {:<12} {:>14} {:>10} {:>8} {:>9}  winner",
        "problem", "strategy", "total_work", "wall_ms", "ratio", "censored"
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{:<16} {:<12} {:>14} {:>10.1} {:>8.3} {:>9}  {}",
            r.problem,
            r.strategy,
            r.total_work,
            r.wall_ms,
            r.ratio,
            r.censored_count,
            if r.winner_flag { "*" } else { "" }
        );
    }
    out
}

fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1000.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SingleSummary {
    pub strategy: String,
    pub total_work: u64,
    pub solutions: u64,
    pub best_objective: Option<i64>,
    pub wall_ms: f64,
    pub load_balance: f64,
}

impl From<&SolveAllReport> for SingleSummary {
    fn from(r: &SolveAllReport) -> Self {
        SingleSummary {
            strategy: r.strategy.label().to_string(),
            total_work: r.total_work,
            solutions: r.solutions,
            best_objective: r.best_objective,
            wall_ms: ms(r.wall),
            load_balance: r.load_balance(),
        }
    }
}

/// Every method on one decomposed problem.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CompareReport {
    pub problem: String,
    pub subproblems: usize,
    pub singles: Vec<SingleSummary>,
    pub pss: PssOutcome,
    pub mab: MabReport,
    pub portfolio: PortfolioReport,
    pub rows: Vec<MethodRow>,
}

impl CompareReport {
    pub fn best_single(&self) -> &SingleSummary {
        self.singles
            .iter()
            .min_by_key(|s| s.total_work)
            .expect("at least one strategy")
    }

    /// Full-run work of the strategy chosen by PSS.
    pub fn winner_single(&self) -> &SingleSummary {
        let label = self.pss.strategy.label();
        self.singles
            .iter()
            .find(|s| s.strategy == label)
            .expect("winner was run")
    }
}

/// Runs every strategy alone, PSS, the bandit and a portfolio of the
/// `portfolio_size` best strategies on the same decomposition.
pub fn compare(
    model: &Model,
    dec: &Decomposition,
    cfg: &PssConfig,
    portfolio_size: usize,
) -> Result<CompareReport, RunError> {
    let runs: Vec<SolveAllReport> = cfg
        .strategies
        .iter()
        .map(|&s| {
            solve_all(
                model,
                &dec.subproblems,
                s,
                cfg.workers,
                None,
                cfg.race.time_mode,
            )
        })
        .collect::<Result<_, _>>()?;
    let pss = pss_on_decomposition(model, dec, cfg)?;
    let started = Instant::now();
    let mab = mab_run(model, &dec.subproblems, &cfg.strategies, cfg.race.time_mode)?;
    let mab_ms = ms(started.elapsed());

    let mut order: Vec<usize> = (0..runs.len()).collect();
    order.sort_by_key(|&i| (runs[i].total_work, i));
    let members: Vec<SolveAllReport> = order
        .iter()
        .take(portfolio_size.max(1))
        .map(|&i| runs[i].clone())
        .collect();
    let portfolio = portfolio_from_runs(model, &members);

    let problem = model.name().to_string();
    let mut rows: Vec<MethodRow> = runs
        .iter()
        .enumerate()
        .map(|(a, r)| MethodRow {
            problem: problem.clone(),
            strategy: r.strategy.label().to_string(),
            total_work: r.total_work as f64,
            wall_ms: ms(r.wall),
            ratio: 0.0,
            censored_count: pss.selection.matrix.censored_count(a),
            winner_flag: r.strategy == pss.strategy,
        })
        .collect();
    let extra = |name: &str, total: f64, wall_ms: f64| MethodRow {
        problem: problem.clone(),
        strategy: name.to_string(),
        total_work: total,
        wall_ms,
        ratio: 0.0,
        censored_count: 0,
        winner_flag: false,
    };
    rows.push(extra("pss", pss.total_cost, ms(pss.wall)));
    rows.push(extra("mab", mab.total_cost, mab_ms));
    rows.push(extra(
        &format!("portfolio-x{}", members.len()),
        portfolio.total_work as f64,
        members.iter().map(|r| ms(r.wall)).sum(),
    ));
    fill_ratios(&mut rows);
    Ok(CompareReport {
        problem,
        subproblems: dec.len(),
        singles: runs.iter().map(SingleSummary::from).collect(),
        pss,
        mab,
        portfolio,
        rows,
    })
}

/// The same comparison over a known runtime matrix.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FixtureReport {
    pub arms: Vec<String>,
    pub uncensored_totals: Vec<f64>,
    pub censored_totals: Vec<f64>,
    pub selection: SelectionReport,
    pub untimed_race_cost: f64,
    pub portfolio_total: f64,
    pub mab_total: f64,
    pub rows: Vec<MethodRow>,
}

pub fn compare_fixture(
    problem: &str,
    costs: &[Vec<f64>],
    arms: Vec<String>,
    cfg: &RaceConfig,
) -> Result<FixtureReport, RunError> {
    let k = arms.len();
    if k == 0 {
        return Err(RunError::NoStrategies);
    }
    if costs.is_empty() {
        return Err(RunError::NoSubproblems);
    }
    if let Some(bad) = costs.iter().position(|r| r.len() != k) {
        return Err(RunError::Config(format!(
            "row {bad} has {} values for {k} strategies",
            costs[bad].len()
        )));
    }
    cfg.validate().map_err(RunError::Config)?;
    let rows_ids: Vec<usize> = (0..costs.len()).collect();
    let selection = select(
        &mut MatrixSource::new(costs.to_vec()),
        arms.clone(),
        rows_ids,
        cfg,
    );
    let untimed_race_cost = untimed_cost(&mut MatrixSource::new(costs.to_vec()), costs.len(), k);
    let uncensored_totals: Vec<f64> = (0..k).map(|a| costs.iter().map(|r| r[a]).sum()).collect();
    let all: Vec<usize> = (0..k).collect();
    let portfolio_total = portfolio_cost(costs, &all);
    let mab = mab_core(k, costs.len(), |step, arm| costs[step][arm])
        .map_err(|e| RunError::Config(e.to_string()))?;

    let mut rows: Vec<MethodRow> = arms
        .iter()
        .enumerate()
        .map(|(a, name)| MethodRow {
            problem: problem.to_string(),
            strategy: name.clone(),
            total_work: uncensored_totals[a],
            wall_ms: 0.0,
            ratio: 0.0,
            censored_count: selection.matrix.censored_count(a),
            winner_flag: a == selection.winner,
        })
        .collect();
    for (name, total) in [
        ("pss", selection.selection_cost),
        ("mab", mab.total),
        ("portfolio", portfolio_total),
    ] {
        rows.push(MethodRow {
            problem: problem.to_string(),
            strategy: name.to_string(),
            total_work: total,
            wall_ms: 0.0,
            ratio: 0.0,
            censored_count: 0,
            winner_flag: false,
        });
    }
    fill_ratios(&mut rows);
    Ok(FixtureReport {
        arms,
        uncensored_totals,
        censored_totals: selection.race_totals.clone(),
        untimed_race_cost,
        portfolio_total,
        mab_total: mab.total,
        selection,
        rows,
    })
}

/// What one command run produced, for `--out`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub mode: String,
    pub problem: String,
    pub seed: u64,
    pub time_mode: TimeMode,
    pub winner: Option<String>,
    pub rows: Vec<MethodRow>,
    pub selection_cost: Option<f64>,
    pub total_work: f64,
    pub wall_ms: f64,
    pub config: serde_json::Value,
    /// The mode's own report.
    pub details: serde_json::Value,
}

impl RunReport {
    pub fn new(
        mode: &str,
        problem: &str,
        seed: u64,
        time_mode: TimeMode,
        config: serde_json::Value,
    ) -> Self {
        RunReport {
            mode: mode.to_string(),
            problem: problem.to_string(),
            seed,
            time_mode,
            winner: None,
            rows: Vec::new(),
            selection_cost: None,
            total_work: 0.0,
            wall_ms: 0.0,
            config,
            details: serde_json::Value::Null,
        }
    }

    pub fn with_rows(mut self, mut rows: Vec<MethodRow>) -> Self {
        fill_ratios(&mut rows);
        self.rows = rows;
        self
    }

    pub fn with_details<T: Serialize>(mut self, details: &T) -> Self {
        self.details = serde_json::to_value(details).unwrap_or(serde_json::Value::Null);
        self
    }
}

fn row(problem: &str, strategy: &str, total_work: f64, wall_ms: f64) -> MethodRow {
    MethodRow {
        problem: problem.to_string(),
        strategy: strategy.to_string(),
        total_work,
        wall_ms,
        ratio: 0.0,
        censored_count: 0,
        winner_flag: false,
    }
}

pub fn solve_rows(problem: &str, r: &SolveAllReport) -> Vec<MethodRow> {
    vec![row(
        problem,
        r.strategy.label(),
        r.total_work as f64,
        ms(r.wall),
    )]
}

/// Censored sample totals per strategy, the winner flagged.
pub fn pss_rows(problem: &str, out: &PssOutcome) -> Vec<MethodRow> {
    let sel = &out.selection;
    let mut rows: Vec<MethodRow> = sel
        .matrix
        .arms
        .iter()
        .enumerate()
        .map(|(a, name)| MethodRow {
            censored_count: sel.matrix.censored_count(a),
            winner_flag: a == sel.winner,
            ..row(problem, name, sel.race_totals[a], 0.0)
        })
        .collect();
    fill_ratios(&mut rows);
    rows
}

pub fn mab_rows(problem: &str, r: &MabReport, wall_ms: f64) -> Vec<MethodRow> {
    vec![row(problem, "mab", r.total_cost, wall_ms)]
}

pub fn portfolio_rows(
    problem: &str,
    members: &[SolveAllReport],
    p: &PortfolioReport,
) -> Vec<MethodRow> {
    let mut rows: Vec<MethodRow> = members
        .iter()
        .flat_map(|r| solve_rows(problem, r))
        .collect();
    let wall = rows.iter().map(|r| r.wall_ms).sum();
    rows.push(row(
        problem,
        &format!("portfolio-x{}", members.len()),
        p.total_work as f64,
        wall,
    ));
    fill_ratios(&mut rows);
    rows
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eps::{decompose, DecompositionConfig};
    use crate::fixtures;
    use crate::models;
    use proptest::prelude::*;

    #[test]
    fn didactic_tables() {
        let cfg = RaceConfig {
            alpha: 0.05,
            ..Default::default()
        };
        let r = compare_fixture(
            "didactic",
            &fixtures::didactic(),
            fixtures::didactic_labels(),
            &cfg,
        )
        .unwrap();
        assert_eq!(r.uncensored_totals, vec![1257., 9576., 1395., 2613.]);
        assert_eq!(r.censored_totals, vec![1257., 2484., 1395., 2142.]);
        assert_eq!(r.portfolio_total, 14841.);
        assert_eq!(r.untimed_race_cost, 14841.);
        assert_eq!(r.selection.winner, 0);
        assert_eq!(r.rows[0].ratio, 1.0);
        assert!(r.rows[0].winner_flag);
        let table = render_table(&r.rows);
        assert!(table.contains("portfolio"));
        assert!(compare_fixture("x", &[vec![1.0]], vec!["a".into(), "b".into()], &cfg).is_err());
    }

    #[test]
    fn compare_on_queens() {
        let m = models::nqueens(8);
        let d = decompose(&m, &DecompositionConfig::with_target(60)).unwrap();
        let r = compare(&m, &d, &PssConfig::default(), 4).unwrap();
        assert_eq!(r.singles.len(), 7);
        assert!(r.singles.iter().all(|s| s.solutions == 92));
        assert_eq!(r.pss.solutions, 92);
        assert_eq!(r.mab.solutions, 92);
        assert_eq!(r.portfolio.strategies.len(), 4);
        assert_eq!(r.rows.len(), 10);
        let min = r.rows.iter().map(|x| x.ratio).fold(f64::INFINITY, f64::min);
        assert_eq!(min, 1.0);
    }

    #[test]
    fn run_report_rows() {
        let m = models::nqueens(6);
        let d = decompose(&m, &DecompositionConfig::with_target(10)).unwrap();
        let cfg = PssConfig::default();
        let out = pss_on_decomposition(&m, &d, &cfg).unwrap();
        let r = RunReport::new(
            "pss",
            m.name(),
            0,
            TimeMode::Work,
            serde_json::json!({"n": 6}),
        )
        .with_rows(pss_rows(m.name(), &out))
        .with_details(&out);
        assert_eq!(r.rows.len(), 7);
        assert_eq!(r.rows.iter().filter(|x| x.winner_flag).count(), 1);
        assert_eq!(
            r.rows.iter().map(|x| x.ratio).fold(f64::INFINITY, f64::min),
            1.0
        );
        assert!(r.details["selection"]["winner"].is_number());
        assert!(pss_rows(m.name(), &out).iter().any(|x| x.ratio == 1.0));
        let text = serde_json::to_string(&r).unwrap();
        let back: RunReport = serde_json::from_str(&text).unwrap();
        assert_eq!(back.rows, r.rows);
    }

    proptest! {
        #[test]
        fn best_ratio_is_one(totals in prop::collection::vec(1u32..1_000_000, 1..12)) {
            let totals: Vec<f64> = totals.into_iter().map(f64::from).collect();
            let r = ratios(&totals);
            prop_assert!(r.iter().all(|x| *x >= 1.0));
            prop_assert_eq!(r.iter().copied().fold(f64::INFINITY, f64::min), 1.0);
        }
    }
}
