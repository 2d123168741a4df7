//! Static decomposition into propagation-consistent subproblems, and simple
//! random sampling over them.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::csp::{Engine, Model, SearchState, VarId};
use crate::error::{CspError, SampleError};

/// A partial assignment over the decomposition prefix.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Subproblem {
    pub id: usize,
    pub assignment: Vec<(VarId, i32)>,
}

impl Subproblem {
    /// The whole problem.
    pub fn root() -> Self {
        Subproblem {
            id: 0,
            assignment: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecompositionConfig {
    pub target_count: usize,
    /// Cap on the number of prefix variables; `None` allows every variable.
    pub max_prefix: Option<usize>,
    pub worker_count: usize,
}

impl DecompositionConfig {
    /// Thirty subproblems per worker.
    pub fn for_workers(worker_count: usize) -> Self {
        DecompositionConfig {
            target_count: 30 * worker_count.max(1),
            max_prefix: None,
            worker_count: worker_count.max(1),
        }
    }

    pub fn with_target(target_count: usize) -> Self {
        DecompositionConfig {
            target_count,
            max_prefix: None,
            worker_count: 1,
        }
    }
}

impl Default for DecompositionConfig {
    fn default() -> Self {
        Self::for_workers(1)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Decomposition {
    /// Subproblems in queue order.
    pub subproblems: Vec<Subproblem>,
    /// Number of prefix variables.
    pub depth: usize,
    /// False when the prefix cap was hit before reaching the target count.
    pub reached_target: bool,
    /// Work units spent enumerating (one per propagated assignment, one per failure).
    pub work: u64,
}

impl Decomposition {
    pub fn len(&self) -> usize {
        self.subproblems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subproblems.is_empty()
    }
}

/// Grows the prefix (variables in declaration order) one variable at a time,
/// re-enumerating all consistent instantiations, until at least
/// `target_count` subproblems exist or the prefix cap is reached.
pub fn decompose(model: &Model, cfg: &DecompositionConfig) -> Result<Decomposition, CspError> {
    let mut engine = Engine::new(model);
    let mut root = SearchState::root(model);
    if engine.run_all(&mut root, model).is_err() {
        return Err(CspError::InconsistentRoot);
    }
    let cap = cfg
        .max_prefix
        .unwrap_or(model.num_vars())
        .min(model.num_vars());
    let target = cfg.target_count.max(1);
    let mut work = 1u64;
    let mut depth = 0usize;
    loop {
        let mut found = Vec::new();
        let mut prefix = Vec::with_capacity(depth);
        enumerate(
            model,
            &mut engine,
            &root,
            depth,
            &mut prefix,
            &mut found,
            &mut work,
        );
        if found.len() >= target || depth >= cap {
            let reached_target = found.len() >= target;
            if !reached_target {
                log::warn!(
                    "decomposition of {} stopped at prefix {} with {} < {} subproblems",
                    model.name(),
                    depth,
                    found.len(),
                    target
                );
            }
            let subproblems = found
                .into_iter()
                .enumerate()
                .map(|(id, assignment)| Subproblem { id, assignment })
                .collect();
            return Ok(Decomposition {
                subproblems,
                depth,
                reached_target,
                work,
            });
        }
        depth += 1;
    }
}

fn enumerate(
    model: &Model,
    engine: &mut Engine,
    state: &SearchState,
    depth: usize,
    prefix: &mut Vec<(VarId, i32)>,
    out: &mut Vec<Vec<(VarId, i32)>>,
    work: &mut u64,
) {
    let level = prefix.len();
    if level == depth {
        out.push(prefix.clone());
        return;
    }
    let var = VarId(level);
    for value in state.domain(var).iter() {
        let mut child = state.clone();
        let changed = child
            .assign(var, value)
            .expect("value drawn from the domain");
        *work += 1;
        if changed && engine.run_from(&mut child, model, &[var]).is_err() {
            *work += 1;
            continue;
        }
        prefix.push((var, value));
        enumerate(model, engine, &child, depth, prefix, out, work);
        prefix.pop();
    }
}

/// A simple random sample of subproblem indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sample {
    pub indices: Vec<usize>,
    pub seed: u64,
}

/// Uniform sample of `k` distinct indices out of `0..population`, reproducible from `seed`.
pub fn srs_sample(population: usize, k: usize, seed: u64) -> Result<Sample, SampleError> {
    if k > population {
        return Err(SampleError::TooLarge { k, population });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let indices = rand::seq::index::sample(&mut rng, population, k).into_vec();
    Ok(Sample { indices, seed })
}

/// One percent of the population, at least 30, never more than the population.
pub fn default_sample_size(population: usize) -> usize {
    let one_percent = population.div_ceil(100);
    one_percent.max(30).min(population)
}
