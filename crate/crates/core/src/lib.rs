//! Parallel strategy selection on top of an embarrassingly parallel search
//! decomposition.
//!
//! A problem is split into many propagation-consistent subproblems
//! ([`eps`]). A simple random sample of them is used to race the candidate
//! variable-value strategies ([`strategy`]) under relative timeouts, and a
//! censoring-safe Wilcoxon signed rank procedure ([`stats`]) eliminates the
//! strategies that are significantly slower than the best one
//! ([`selection`]). The winner then solves the remaining subproblems on a
//! pool of workers ([`runner`]). Multi-armed bandit and portfolio baselines
//! live in [`baselines`].

pub mod baselines;
pub mod csp;
pub mod eps;
pub mod error;
pub mod fixtures;
pub mod json;
pub mod models;
pub mod report;
pub mod runner;
pub mod search;
pub mod selection;
pub mod stats;
pub mod strategy;

pub use csp::{Constraint, Domain, Model, ModelBuilder, SearchState, VarId};
pub use eps::{decompose, srs_sample, Decomposition, DecompositionConfig, Sample, Subproblem};
pub use error::{BanditError, CspError, ModelError, RunError, SampleError, StatsError};
pub use search::{count_all, solve, SearchMode, SolveOutcome, SolveStatus, WorkBudget};
pub use selection::{pss_select, PssConfig, PssOutcome, RaceConfig, SelectionReport, TimeMode};
pub use strategy::StrategyId;
