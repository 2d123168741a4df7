//! Master-worker execution: a shared task queue pulled by a pool of threads,
//! plus per-worker and per-phase cost accounting.

use std::collections::VecDeque;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::atomic::{AtomicI64, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::csp::{Model, Sense};
use crate::eps::Subproblem;
use crate::error::RunError;
use crate::search::{solve, SearchMode, SolveOutcome, WorkBudget};
use crate::strategy::StrategyId;

/// How runtimes are measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TimeMode {
    /// Deterministic work units.
    #[default]
    Work,
    /// Milliseconds of wall-clock time.
    Wall,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskFailure {
    pub task: usize,
    pub message: String,
}

#[derive(Debug)]
pub struct PoolRun<R> {
    /// One entry per task, in task order.
    pub results: Vec<Result<R, TaskFailure>>,
    /// Worker that produced each result.
    pub worker: Vec<usize>,
}

fn panic_message(p: &(dyn std::any::Any + Send)) -> String {
    if let Some(s) = p.downcast_ref::<&str>() {
        s.to_string()
    } else if let Some(s) = p.downcast_ref::<String>() {
        s.clone()
    } else {
        "worker panicked".to_string()
    }
}

/// Runs `f` on every task with `workers` threads pulling from one queue.
///
/// A task's result and the worker that produced it.
type Finished<R> = (Result<R, TaskFailure>, usize);

/// `f` receives the worker index and the task. A task that panics is pushed
/// back on the queue once; a second panic is reported as a failure.
pub fn run_pool<T, R, F>(tasks: &[T], workers: usize, f: F) -> PoolRun<R>
where
    T: Sync,
    R: Send,
    F: Fn(usize, &T) -> R + Sync,
{
    let workers = workers.max(1);
    let queue: Mutex<VecDeque<(usize, u8)>> =
        Mutex::new((0..tasks.len()).map(|i| (i, 0)).collect());
    let done: Mutex<Vec<Option<Finished<R>>>> =
        Mutex::new((0..tasks.len()).map(|_| None).collect());
    std::thread::scope(|scope| {
        for w in 0..workers.min(tasks.len().max(1)) {
            let (queue, done, f) = (&queue, &done, &f);
            scope.spawn(move || loop {
                let Some((i, attempt)) = queue.lock().unwrap().pop_front() else {
                    break;
                };
                match catch_unwind(AssertUnwindSafe(|| f(w, &tasks[i]))) {
                    Ok(r) => done.lock().unwrap()[i] = Some((Ok(r), w)),
                    Err(p) if attempt == 0 => {
                        log::warn!(
                            "task {i} panicked on worker {w}, re-queued: {}",
                            panic_message(&*p)
                        );
                        queue.lock().unwrap().push_back((i, 1));
                    }
                    Err(p) => {
                        let failure = TaskFailure {
                            task: i,
                            message: panic_message(&*p),
                        };
                        done.lock().unwrap()[i] = Some((Err(failure), w));
                    }
                }
            });
        }
    });
    let mut results = Vec::with_capacity(tasks.len());
    let mut worker = Vec::with_capacity(tasks.len());
    for slot in done.into_inner().unwrap() {
        let (r, w) = slot.expect("every task is executed");
        results.push(r);
        worker.push(w);
    }
    PoolRun { results, worker }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Decompose,
    Selection,
    Solve,
}

/// Work charged per worker and per phase; both views always sum to the same total.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CostLedger {
    pub per_worker: Vec<f64>,
    pub decompose: f64,
    pub selection: f64,
    pub solve: f64,
}

impl CostLedger {
    pub fn new(workers: usize) -> Self {
        CostLedger {
            per_worker: vec![0.0; workers.max(1)],
            ..Default::default()
        }
    }

    pub fn charge(&mut self, worker: usize, phase: Phase, amount: f64) {
        let slots = self.per_worker.len();
        self.per_worker[worker % slots] += amount;
        match phase {
            Phase::Decompose => self.decompose += amount,
            Phase::Selection => self.selection += amount,
            Phase::Solve => self.solve += amount,
        }
    }

    pub fn phase(&self, phase: Phase) -> f64 {
        match phase {
            Phase::Decompose => self.decompose,
            Phase::Selection => self.selection,
            Phase::Solve => self.solve,
        }
    }

    pub fn grand_total(&self) -> f64 {
        self.per_worker.iter().sum()
    }
}

/// Largest load divided by the mean load; 1.0 is a perfect balance.
pub fn load_balance(loads: &[f64]) -> f64 {
    let mean = loads.iter().sum::<f64>() / loads.len().max(1) as f64;
    if mean <= 0.0 {
        return 1.0;
    }
    loads.iter().copied().fold(0.0, f64::max) / mean
}

/// Optimization bound shared by concurrent solves; only improvements are applied.
#[derive(Debug)]
pub struct SharedIncumbent {
    sense: Sense,
    value: AtomicI64,
}

impl SharedIncumbent {
    const NONE_MIN: i64 = i64::MAX;
    const NONE_MAX: i64 = i64::MIN;

    pub fn new(sense: Sense, initial: Option<i64>) -> Self {
        let empty = match sense {
            Sense::Minimize => Self::NONE_MIN,
            Sense::Maximize => Self::NONE_MAX,
        };
        SharedIncumbent {
            sense,
            value: AtomicI64::new(initial.unwrap_or(empty)),
        }
    }

    pub fn get(&self) -> Option<i64> {
        let v = self.value.load(Ordering::Acquire);
        match self.sense {
            Sense::Minimize if v == Self::NONE_MIN => None,
            Sense::Maximize if v == Self::NONE_MAX => None,
            _ => Some(v),
        }
    }

    pub fn offer(&self, v: i64) {
        match self.sense {
            Sense::Minimize => self.value.fetch_min(v, Ordering::AcqRel),
            Sense::Maximize => self.value.fetch_max(v, Ordering::AcqRel),
        };
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveAllReport {
    pub strategy: StrategyId,
    pub total_work: u64,
    pub solutions: u64,
    pub best_objective: Option<i64>,
    pub wall: Duration,
    /// Work per worker.
    pub per_worker: Vec<u64>,
    /// Wall-clock milliseconds per worker.
    pub per_worker_ms: Vec<f64>,
    pub outcomes: Vec<SolveOutcome>,
}

impl SolveAllReport {
    pub fn load_balance(&self) -> f64 {
        load_balance(
            &self
                .per_worker
                .iter()
                .map(|w| *w as f64)
                .collect::<Vec<_>>(),
        )
    }
}

/// Solves every subproblem with `sid` to completion.
///
/// Satisfaction problems go through the pool. Optimization problems share
/// an incumbent; in work mode they are solved sequentially in queue order so
/// that the pruning, and hence the work, is reproducible.
pub fn solve_all(
    model: &Model,
    subproblems: &[Subproblem],
    sid: StrategyId,
    workers: usize,
    incumbent: Option<i64>,
    time_mode: TimeMode,
) -> Result<SolveAllReport, RunError> {
    let started = Instant::now();
    let workers = workers.max(1);
    let mut per_worker = vec![0u64; workers];
    let mut per_worker_ms = vec![0.0; workers];
    let ms = |o: &SolveOutcome| o.wall_time.map_or(0.0, |d| d.as_secs_f64() * 1000.0);
    let mut outcomes = Vec::with_capacity(subproblems.len());
    match model.objective() {
        Some(_) if time_mode == TimeMode::Work => {
            let mut best = incumbent;
            for sp in subproblems {
                let out = solve(
                    model,
                    sp,
                    sid,
                    SearchMode::Optimize { incumbent: best },
                    WorkBudget::unlimited(),
                )?;
                if out.best_objective.is_some() {
                    best = out.best_objective;
                }
                per_worker[0] += out.work_used;
                per_worker_ms[0] += ms(&out);
                outcomes.push(out);
            }
        }
        objective => {
            let shared = objective.map(|o| SharedIncumbent::new(o.sense, incumbent));
            let run = run_pool(subproblems, workers, |_, sp| {
                let mode = match &shared {
                    Some(inc) => SearchMode::Optimize {
                        incumbent: inc.get(),
                    },
                    None => SearchMode::AllSolutions,
                };
                let out = solve(model, sp, sid, mode, WorkBudget::unlimited());
                if let (Some(inc), Ok(o)) = (&shared, &out) {
                    if let Some(v) = o.best_objective {
                        inc.offer(v);
                    }
                }
                out
            });
            for (i, r) in run.results.into_iter().enumerate() {
                let out = r.map_err(|f| RunError::TaskFailed {
                    task: f.task,
                    message: f.message,
                })??;
                per_worker[run.worker[i]] += out.work_used;
                per_worker_ms[run.worker[i]] += ms(&out);
                outcomes.push(out);
            }
        }
    }
    let best_objective = best_of(
        model,
        incumbent,
        outcomes.iter().filter_map(|o| o.best_objective),
    );
    Ok(SolveAllReport {
        strategy: sid,
        total_work: outcomes.iter().map(|o| o.work_used).sum(),
        solutions: outcomes.iter().map(|o| o.solutions_found).sum(),
        best_objective,
        wall: started.elapsed(),
        per_worker,
        per_worker_ms,
        outcomes,
    })
}

/// Best objective value among `start` and `values` under the model's sense.
pub fn best_of(
    model: &Model,
    start: Option<i64>,
    values: impl Iterator<Item = i64>,
) -> Option<i64> {
    let sense = model.objective()?.sense;
    values.chain(start).reduce(|a, b| match sense {
        Sense::Minimize => a.min(b),
        Sense::Maximize => a.max(b),
    })
}
