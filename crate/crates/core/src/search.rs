//! Depth-first binary branching search under a work budget.
//!
//! Work is counted in deterministic units: one for the root fixpoint, one per
//! branching decision (left `x = v` or right `x != v`) and one per failure.
//! Every unit is charged before it is spent, so a run completes if and only
//! if its total work fits in the budget, and an exhausted run reports exactly
//! `limit` units.

use std::sync::atomic::{AtomicU64, Ordering};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::csp::{Engine, Model, SearchState, Sense, VarId};
use crate::eps::Subproblem;
use crate::error::CspError;
use crate::strategy::{select_value, select_variable, CounterState, StrategyId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SearchMode {
    AllSolutions,
    FirstSolution,
    /// Branch and bound; only solutions strictly better than `incumbent` count.
    Optimize {
        incumbent: Option<i64>,
    },
}

impl SearchMode {
    /// The natural mode for a model: optimization when it has an objective.
    pub fn for_model(model: &Model, incumbent: Option<i64>) -> Self {
        if model.objective().is_some() {
            SearchMode::Optimize { incumbent }
        } else {
            SearchMode::AllSolutions
        }
    }
}

/// A wall-clock stop point shared between threads, in microseconds from `origin`.
#[derive(Debug)]
pub struct Deadline {
    origin: Instant,
    micros: AtomicU64,
}

impl Deadline {
    pub fn new(origin: Instant) -> Self {
        Deadline {
            origin,
            micros: AtomicU64::new(u64::MAX),
        }
    }

    pub fn origin(&self) -> Instant {
        self.origin
    }

    pub fn set_micros(&self, micros: u64) {
        self.micros.fetch_min(micros, Ordering::AcqRel);
    }

    pub fn micros(&self) -> u64 {
        self.micros.load(Ordering::Acquire)
    }

    fn passed(&self) -> bool {
        let limit = self.micros();
        limit != u64::MAX && self.origin.elapsed().as_micros() as u64 > limit
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct WorkBudget<'a> {
    /// Maximum work units; `None` is unlimited.
    pub limit: Option<u64>,
    pub deadline: Option<&'a Deadline>,
}

impl WorkBudget<'_> {
    pub fn unlimited() -> Self {
        WorkBudget::default()
    }

    pub fn units(limit: u64) -> Self {
        WorkBudget {
            limit: Some(limit),
            deadline: None,
        }
    }
}

impl<'a> WorkBudget<'a> {
    pub fn with_deadline(mut self, deadline: &'a Deadline) -> Self {
        self.deadline = Some(deadline);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    Complete,
    BudgetExhausted,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveOutcome {
    pub status: SolveStatus,
    pub solutions_found: u64,
    pub best_objective: Option<i64>,
    pub work_used: u64,
    pub decisions: u64,
    pub failures: u64,
    pub propagations: u64,
    #[serde(skip)]
    pub wall_time: Option<Duration>,
}

/// Equality ignores `wall_time`.
impl PartialEq for SolveOutcome {
    fn eq(&self, other: &Self) -> bool {
        self.status == other.status
            && self.solutions_found == other.solutions_found
            && self.best_objective == other.best_objective
            && self.work_used == other.work_used
            && self.decisions == other.decisions
            && self.failures == other.failures
            && self.propagations == other.propagations
    }
}

impl Eq for SolveOutcome {}

impl SolveOutcome {
    pub fn is_complete(&self) -> bool {
        self.status == SolveStatus::Complete
    }
}

struct OutOfBudget;

struct Run<'m, 'b> {
    model: &'m Model,
    sid: StrategyId,
    budget: WorkBudget<'b>,
    engine: Engine,
    counters: &'m mut CounterState,
    work: u64,
    decisions: u64,
    failures: u64,
    solutions: u64,
    best: Option<i64>,
    /// Inclusive bound on the objective variable, tightened by each solution.
    bound: Option<i64>,
}

impl Run<'_, '_> {
    #[inline]
    fn charge(&mut self) -> Result<(), OutOfBudget> {
        if self.budget.limit.is_some_and(|l| self.work >= l) {
            return Err(OutOfBudget);
        }
        if self.budget.deadline.is_some_and(Deadline::passed) {
            return Err(OutOfBudget);
        }
        self.work += 1;
        Ok(())
    }

    fn fail(&mut self, constraint: Option<usize>) -> Result<(), OutOfBudget> {
        if let Some(c) = constraint {
            self.counters.on_constraint_failure(self.model.scope(c));
        }
        self.charge()?;
        self.failures += 1;
        Ok(())
    }

    /// Applies the objective bound; returns false when it empties the domain.
    fn apply_bound(&self, state: &mut SearchState, modified: &mut Vec<VarId>) -> bool {
        let (Some(obj), Some(bound)) = (self.model.objective(), self.bound) else {
            return true;
        };
        let changed = match obj.sense {
            Sense::Minimize => state.set_max(obj.var, bound),
            Sense::Maximize => state.set_min(obj.var, bound),
        };
        if changed {
            modified.push(obj.var);
        }
        !state.is_failed()
    }

    fn propagate(
        &mut self,
        state: &mut SearchState,
        modified: &[VarId],
    ) -> Result<(), Option<usize>> {
        let result = self.engine.run_from(state, self.model, modified);
        let decision = self.decisions;
        for &v in &self.engine.changed {
            self.counters.on_propagation_event(v, decision);
        }
        result.map_err(|e| e.constraint)
    }

    fn record_solution(&mut self, state: &SearchState, optimize: bool) {
        self.solutions += 1;
        if !optimize {
            return;
        }
        let obj = self
            .model
            .objective()
            .expect("optimize mode requires an objective");
        let value = state
            .domain(obj.var)
            .value()
            .expect("solution is fully assigned") as i64;
        self.best = Some(value);
        self.bound = Some(match obj.sense {
            Sense::Minimize => value - 1,
            Sense::Maximize => value + 1,
        });
    }

    fn search(&mut self, root: SearchState, mode: SearchMode) -> Result<(), OutOfBudget> {
        let optimize = matches!(mode, SearchMode::Optimize { .. });
        let mut stack: Vec<(SearchState, VarId, i32)> = Vec::new();
        let mut state = root;
        let mut modified = Vec::with_capacity(2);
        loop {
            // `state` is a consistent fixpoint here
            match select_variable(&state, self.model, self.sid, self.counters) {
                None => {
                    self.record_solution(&state, optimize);
                    if mode == SearchMode::FirstSolution {
                        return Ok(());
                    }
                }
                Some(var) => {
                    let value = select_value(&state, var, self.sid);
                    self.charge()?;
                    self.decisions += 1;
                    self.counters.on_decision();
                    stack.push((state.clone(), var, value));
                    state
                        .assign(var, value)
                        .expect("selected value is in the domain");
                    match self.propagate(&mut state, &[var]) {
                        Ok(()) => continue,
                        Err(c) => self.fail(c)?,
                    }
                }
            }
            // backtrack to the most recent open right branch
            loop {
                let Some((saved, var, value)) = stack.pop() else {
                    return Ok(());
                };
                state = saved;
                self.charge()?;
                self.decisions += 1;
                self.counters.on_decision();
                modified.clear();
                state.remove(var, value);
                modified.push(var);
                if !self.apply_bound(&mut state, &mut modified) {
                    self.fail(None)?;
                    continue;
                }
                match self.propagate(&mut state, &modified) {
                    Ok(()) => break,
                    Err(c) => self.fail(c)?,
                }
            }
        }
    }
}

/// Solves `subproblem` with fresh strategy counters.
pub fn solve(
    model: &Model,
    subproblem: &Subproblem,
    sid: StrategyId,
    mode: SearchMode,
    budget: WorkBudget<'_>,
) -> Result<SolveOutcome, CspError> {
    let mut counters = CounterState::new(model.num_vars());
    solve_with_counters(model, subproblem, sid, mode, budget, &mut counters)
}

/// Solves `subproblem`, reusing the caller's counters across runs.
pub fn solve_with_counters(
    model: &Model,
    subproblem: &Subproblem,
    sid: StrategyId,
    mode: SearchMode,
    budget: WorkBudget<'_>,
    counters: &mut CounterState,
) -> Result<SolveOutcome, CspError> {
    let started = Instant::now();
    let mut run = Run {
        model,
        sid,
        budget,
        engine: Engine::new(model),
        counters,
        work: 0,
        decisions: 0,
        failures: 0,
        solutions: 0,
        best: None,
        bound: None,
    };
    if let SearchMode::Optimize { incumbent } = mode {
        let obj = model.objective().ok_or(CspError::NoObjective)?;
        run.bound = incumbent.map(|u| match obj.sense {
            Sense::Minimize => u - 1,
            Sense::Maximize => u + 1,
        });
    }

    let mut state = SearchState::root(model);
    let mut modified = Vec::with_capacity(subproblem.assignment.len());
    for &(var, value) in &subproblem.assignment {
        state
            .assign(var, value)
            .map_err(|_| CspError::InconsistentSubproblem)?;
        modified.push(var);
    }
    if run.charge().is_err() {
        return Ok(run.outcome(SolveStatus::BudgetExhausted, started));
    }
    if let Err(e) = run.engine.run_all(&mut state, model) {
        if !subproblem.assignment.is_empty() {
            return Err(CspError::InconsistentSubproblem);
        }
        // an inconsistent root simply has no solutions
        return Ok(match run.fail(e.constraint) {
            Ok(()) => run.outcome(SolveStatus::Complete, started),
            Err(OutOfBudget) => run.outcome(SolveStatus::BudgetExhausted, started),
        });
    }
    modified.clear();
    if !run.apply_bound(&mut state, &mut modified) {
        return Ok(match run.fail(None) {
            Ok(()) => run.outcome(SolveStatus::Complete, started),
            Err(OutOfBudget) => run.outcome(SolveStatus::BudgetExhausted, started),
        });
    }
    if !modified.is_empty() {
        if let Err(c) = run.propagate(&mut state, &modified) {
            return Ok(match run.fail(c) {
                Ok(()) => run.outcome(SolveStatus::Complete, started),
                Err(OutOfBudget) => run.outcome(SolveStatus::BudgetExhausted, started),
            });
        }
    }
    let status = match run.search(state, mode) {
        Ok(()) => SolveStatus::Complete,
        Err(OutOfBudget) => SolveStatus::BudgetExhausted,
    };
    Ok(run.outcome(status, started))
}

impl Run<'_, '_> {
    fn outcome(&self, status: SolveStatus, started: Instant) -> SolveOutcome {
        SolveOutcome {
            status,
            solutions_found: self.solutions,
            best_objective: self.best,
            work_used: self.work,
            decisions: self.decisions,
            failures: self.failures,
            propagations: self.engine.executions,
            wall_time: Some(started.elapsed()),
        }
    }
}

/// Counts every solution of the whole problem with `sid`, without a budget.
pub fn count_all(model: &Model, sid: StrategyId) -> Result<SolveOutcome, CspError> {
    solve(
        model,
        &Subproblem::root(),
        sid,
        SearchMode::AllSolutions,
        WorkBudget::unlimited(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::csp::Model;
    use crate::models;

    #[test]
    fn zero_budget_exhausts_immediately() {
        let m = models::nqueens(4);
        let out = solve(
            &m,
            &Subproblem::root(),
            StrategyId::FirstFail,
            SearchMode::AllSolutions,
            WorkBudget::units(0),
        )
        .unwrap();
        assert_eq!(out.status, SolveStatus::BudgetExhausted);
        assert_eq!(out.work_used, 0);
        assert_eq!(out.solutions_found, 0);
    }

    #[test]
    fn always_false_model_has_no_solutions() {
        let mut b = Model::builder("false");
        let x = b.int_var("x", 0, 3);
        b.linear_eq(vec![0], vec![x], 1);
        let m = b.build().unwrap();
        let out = count_all(&m, StrategyId::FirstFail).unwrap();
        assert_eq!(out.status, SolveStatus::Complete);
        assert_eq!(out.solutions_found, 0);

        let mut b = Model::builder("false-deep");
        let x = b.int_var("x", 0, 3);
        let y = b.int_var("y", 0, 3);
        b.not_equal(x, y, 0).linear_eq(vec![1, -1], vec![x, y], 0);
        let m = b.build().unwrap();
        let out = count_all(&m, StrategyId::FirstFail).unwrap();
        assert_eq!(out.status, SolveStatus::Complete);
        assert_eq!(out.solutions_found, 0);
    }

    #[test]
    fn unconstrained_variable_counts_its_domain() {
        let mut b = Model::builder("one");
        b.int_var("x", 1, 3);
        let m = b.build().unwrap();
        for sid in StrategyId::ALL {
            assert_eq!(count_all(&m, sid).unwrap().solutions_found, 3);
        }
    }

    #[test]
    fn first_solution_stops_early() {
        let m = models::nqueens(6);
        let out = solve(
            &m,
            &Subproblem::root(),
            StrategyId::FirstFail,
            SearchMode::FirstSolution,
            WorkBudget::unlimited(),
        )
        .unwrap();
        assert_eq!(out.solutions_found, 1);
        assert!(out.is_complete());
    }

    #[test]
    fn budget_boundary_is_exact() {
        let m = models::nqueens(6);
        let sub = Subproblem::root();
        let full = solve(
            &m,
            &sub,
            StrategyId::DomOverWdeg,
            SearchMode::AllSolutions,
            WorkBudget::unlimited(),
        )
        .unwrap();
        let w = full.work_used;
        let at = solve(
            &m,
            &sub,
            StrategyId::DomOverWdeg,
            SearchMode::AllSolutions,
            WorkBudget::units(w),
        )
        .unwrap();
        assert_eq!(at.status, SolveStatus::Complete);
        assert_eq!(at.solutions_found, full.solutions_found);
        assert_eq!(at.work_used, w);
        let below = solve(
            &m,
            &sub,
            StrategyId::DomOverWdeg,
            SearchMode::AllSolutions,
            WorkBudget::units(w - 1),
        )
        .unwrap();
        assert_eq!(below.status, SolveStatus::BudgetExhausted);
        assert_eq!(below.work_used, w - 1);
    }

    #[test]
    fn incumbent_prunes_optimization() {
        let m = models::golomb(4, 8);
        let sub = Subproblem::root();
        let best = solve(
            &m,
            &sub,
            StrategyId::FirstFail,
            SearchMode::Optimize { incumbent: None },
            WorkBudget::unlimited(),
        )
        .unwrap();
        assert_eq!(best.best_objective, Some(6));
        let none = solve(
            &m,
            &sub,
            StrategyId::FirstFail,
            SearchMode::Optimize { incumbent: Some(6) },
            WorkBudget::unlimited(),
        )
        .unwrap();
        assert_eq!(none.solutions_found, 0);
        assert!(none.is_complete());
    }
}
