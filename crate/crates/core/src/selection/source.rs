use std::collections::HashMap;
use std::time::Instant;

use super::{simulate_race, Entry, Probe, RuntimeSource};
use crate::csp::{Model, Sense};
use crate::eps::Subproblem;
use crate::runner::TimeMode;
use crate::search::{solve, Deadline, SearchMode, SolveOutcome, WorkBudget};
use crate::strategy::StrategyId;

/// Known costs, `costs[row][arm]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixSource {
    pub costs: Vec<Vec<f64>>,
    /// Number of `run` calls served.
    pub calls: usize,
}

impl MatrixSource {
    pub fn new(costs: Vec<Vec<f64>>) -> Self {
        MatrixSource { costs, calls: 0 }
    }
}

impl RuntimeSource for MatrixSource {
    fn run(&mut self, row: usize, arm: usize, limit: Option<f64>) -> Probe {
        self.calls += 1;
        let c = self.costs[row][arm];
        match limit {
            Some(l) if c > l => Probe {
                time: l,
                complete: false,
            },
            _ => Probe {
                time: c,
                complete: true,
            },
        }
    }
}

/// Runs the real solver on the sampled subproblems.
///
/// In work mode runs are deterministic: a finished run is cached and the
/// largest budget known to be insufficient is remembered, so repeated probes
/// cost nothing. Optimization rows are solved against the incumbent the master
/// held when the row's race started; the master bound improves after each race.
pub struct SolverSource<'m> {
    model: &'m Model,
    rows: Vec<Subproblem>,
    arms: Vec<StrategyId>,
    time_mode: TimeMode,
    master: Option<i64>,
    row_incumbent: Vec<Option<i64>>,
    finished: HashMap<(usize, usize), (SolveOutcome, f64)>,
    exhausted: HashMap<(usize, usize), f64>,
    executed: f64,
}

fn millis(started: Instant) -> f64 {
    started.elapsed().as_secs_f64() * 1000.0
}

impl<'m> SolverSource<'m> {
    pub fn new(
        model: &'m Model,
        rows: Vec<Subproblem>,
        arms: Vec<StrategyId>,
        time_mode: TimeMode,
    ) -> Self {
        let n = rows.len();
        SolverSource {
            model,
            rows,
            arms,
            time_mode,
            master: None,
            row_incumbent: vec![None; n],
            finished: HashMap::new(),
            exhausted: HashMap::new(),
            executed: 0.0,
        }
    }

    pub fn with_incumbent(mut self, incumbent: Option<i64>) -> Self {
        self.master = incumbent;
        self
    }

    pub fn master_incumbent(&self) -> Option<i64> {
        self.master
    }

    /// Completed run of `arm` on `row`, if any.
    pub fn outcome(&self, row: usize, arm: usize) -> Option<&SolveOutcome> {
        self.finished.get(&(row, arm)).map(|(o, _)| o)
    }

    /// Everything actually executed, probes included, in the source's time unit.
    pub fn executed(&self) -> f64 {
        self.executed
    }

    fn mode(&self, row: usize) -> SearchMode {
        SearchMode::for_model(self.model, self.row_incumbent[row])
    }

    fn time_of(&self, out: &SolveOutcome, ms: f64) -> f64 {
        match self.time_mode {
            TimeMode::Work => out.work_used as f64,
            TimeMode::Wall => ms,
        }
    }

    fn better(&self, a: Option<i64>, b: i64) -> i64 {
        match (a, self.model.objective().map(|o| o.sense)) {
            (Some(a), Some(Sense::Maximize)) => a.max(b),
            (Some(a), _) => a.min(b),
            (None, _) => b,
        }
    }

    fn commit(&mut self, row: usize) {
        for a in 0..self.arms.len() {
            if let Some(v) = self.outcome(row, a).and_then(|o| o.best_objective) {
                self.master = Some(self.better(self.master, v));
            }
        }
    }

    fn wall_race(&mut self, row: usize, arms: &[usize], factor: f64) -> Vec<Entry> {
        let deadline = Deadline::new(Instant::now());
        let mode = self.mode(row);
        let (model, sub) = (self.model, &self.rows[row]);
        let runs: Vec<(SolveOutcome, f64)> = std::thread::scope(|s| {
            let handles: Vec<_> = arms
                .iter()
                .map(|&a| {
                    let (sid, deadline) = (self.arms[a], &deadline);
                    s.spawn(move || {
                        let budget = WorkBudget::unlimited().with_deadline(deadline);
                        let out = solve(model, sub, sid, mode, budget)
                            .expect("sampled subproblems are consistent");
                        let ms = millis(deadline.origin());
                        if out.is_complete() {
                            deadline.set_micros((ms * 1000.0 * factor) as u64);
                        }
                        (out, ms)
                    })
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("race thread"))
                .collect()
        });
        let limit = deadline.micros() as f64 / 1000.0;
        arms.iter()
            .zip(runs)
            .map(|(&a, (out, ms))| {
                self.executed += ms.min(limit);
                if out.is_complete() && ms <= limit {
                    self.finished.insert((row, a), (out, ms));
                    Entry::done(ms)
                } else {
                    Entry::stopped(limit)
                }
            })
            .collect()
    }
}

impl RuntimeSource for SolverSource<'_> {
    fn run(&mut self, row: usize, arm: usize, limit: Option<f64>) -> Probe {
        if let Some((_, t)) = self.finished.get(&(row, arm)) {
            return match limit {
                Some(l) if *t > l => Probe {
                    time: l,
                    complete: false,
                },
                _ => Probe {
                    time: *t,
                    complete: true,
                },
            };
        }
        if let (Some(l), Some(known)) = (limit, self.exhausted.get(&(row, arm))) {
            if l <= *known {
                return Probe {
                    time: l,
                    complete: false,
                };
            }
        }
        let sid = self.arms[arm];
        let mode = self.mode(row);
        let started = Instant::now();
        let deadline;
        let budget = match (self.time_mode, limit) {
            (_, None) => WorkBudget::unlimited(),
            (TimeMode::Work, Some(l)) => WorkBudget::units(l.floor() as u64),
            (TimeMode::Wall, Some(l)) => {
                deadline = Deadline::new(started);
                deadline.set_micros((l * 1000.0) as u64);
                WorkBudget::unlimited().with_deadline(&deadline)
            }
        };
        let out = solve(self.model, &self.rows[row], sid, mode, budget)
            .expect("sampled subproblems are consistent");
        let t = self.time_of(&out, millis(started));
        let within = limit.is_none_or(|l| t <= l);
        if out.is_complete() && within {
            self.executed += t;
            self.finished.insert((row, arm), (out, t));
            Probe {
                time: t,
                complete: true,
            }
        } else {
            let l = limit.expect("an unlimited run always completes");
            self.executed += l.min(t);
            if self.time_mode == TimeMode::Work {
                self.exhausted.insert((row, arm), l);
            }
            Probe {
                time: l,
                complete: false,
            }
        }
    }

    fn race(&mut self, row: usize, arms: &[usize], factor: f64) -> Vec<Entry> {
        self.row_incumbent[row] = self.master;
        let entries = match self.time_mode {
            TimeMode::Work => simulate_race(self, row, arms, factor),
            TimeMode::Wall => self.wall_race(row, arms, factor),
        };
        self.commit(row);
        entries
    }
}
