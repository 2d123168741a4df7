//! Dynamic variable-value strategies and the counters they learn from.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::csp::{Model, SearchState, VarId};

/// The candidate strategies. Every strategy assigns the minimum value of the
/// selected variable, except [`StrategyId::WdegMax`] which assigns the maximum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum StrategyId {
    /// Smallest domain.
    #[serde(rename = "ff")]
    FirstFail,
    /// Largest activity.
    #[serde(rename = "act")]
    Activity,
    /// Largest weighted degree, minimum value.
    #[serde(rename = "wdegm")]
    WdegMin,
    /// Largest weighted degree, maximum value.
    #[serde(rename = "wdegM")]
    WdegMax,
    /// Largest gap between the two largest values.
    #[serde(rename = "mregret")]
    MaxRegret,
    /// Largest number of constraints.
    #[serde(rename = "mostc")]
    MostConstrained,
    /// Smallest domain size over weighted degree.
    #[serde(rename = "dwdeg")]
    DomOverWdeg,
}

impl StrategyId {
    pub const ALL: [StrategyId; 7] = [
        StrategyId::FirstFail,
        StrategyId::Activity,
        StrategyId::WdegMin,
        StrategyId::WdegMax,
        StrategyId::MaxRegret,
        StrategyId::MostConstrained,
        StrategyId::DomOverWdeg,
    ];

    /// Command-line token.
    pub fn token(self) -> &'static str {
        match self {
            StrategyId::FirstFail => "ff",
            StrategyId::Activity => "act",
            StrategyId::WdegMin => "wdegm",
            StrategyId::WdegMax => "wdegM",
            StrategyId::MaxRegret => "mregret",
            StrategyId::MostConstrained => "mostc",
            StrategyId::DomOverWdeg => "dwdeg",
        }
    }

    /// Display label, as used in result tables.
    pub fn label(self) -> &'static str {
        match self {
            StrategyId::FirstFail => "FF",
            StrategyId::Activity => "Act",
            StrategyId::WdegMin => "Wdegm",
            StrategyId::WdegMax => "WdegM",
            StrategyId::MaxRegret => "MRegret",
            StrategyId::MostConstrained => "MostC",
            StrategyId::DomOverWdeg => "D/Wdeg",
        }
    }
}

impl fmt::Display for StrategyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown strategy '{0}' (expected one of ff, act, wdegm, wdegM, mregret, mostc, dwdeg)")]
pub struct UnknownStrategy(pub String);

impl FromStr for StrategyId {
    type Err = UnknownStrategy;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        StrategyId::ALL
            .into_iter()
            .find(|id| id.token() == s)
            .ok_or_else(|| UnknownStrategy(s.to_string()))
    }
}

/// Parses a comma-separated strategy list such as `ff,act,dwdeg`.
pub fn parse_strategy_list(s: &str) -> Result<Vec<StrategyId>, UnknownStrategy> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(StrategyId::from_str)
        .collect()
}

/// Per-run activity and weighted-degree counters.
#[derive(Debug, Clone, PartialEq)]
pub struct CounterState {
    pub activity: Vec<f64>,
    pub wdeg: Vec<u64>,
    /// Decision index (+1) at which each variable's activity was last bumped.
    last_bump: Vec<u64>,
    /// Multiplicative activity decay applied at every decision; 1.0 disables it.
    pub decay: f64,
}

impl CounterState {
    pub fn new(num_vars: usize) -> Self {
        CounterState {
            activity: vec![0.0; num_vars],
            wdeg: vec![0; num_vars],
            last_bump: vec![0; num_vars],
            decay: 1.0,
        }
    }

    pub fn with_decay(mut self, decay: f64) -> Self {
        self.decay = decay;
        self
    }

    /// Every variable of the failed constraint's scope gains one unit of weight.
    pub fn on_constraint_failure(&mut self, scope: &[VarId]) {
        for v in scope {
            self.wdeg[v.0] += 1;
        }
    }

    /// Bumps the activity of a pruned variable, at most once per decision.
    pub fn on_propagation_event(&mut self, var: VarId, decision_index: u64) {
        let stamp = decision_index + 1;
        if self.last_bump[var.0] != stamp {
            self.last_bump[var.0] = stamp;
            self.activity[var.0] += 1.0;
        }
    }

    pub(crate) fn on_decision(&mut self) {
        if self.decay != 1.0 {
            for a in &mut self.activity {
                *a *= self.decay;
            }
        }
    }
}

#[inline]
fn regret(state: &SearchState, v: VarId) -> i64 {
    let d = state.domain(v);
    match (d.max(), d.second_max()) {
        (Some(hi), Some(next)) => hi as i64 - next as i64,
        _ => 0,
    }
}

/// Chooses the next branching variable; `None` when every variable is fixed.
///
/// Ties go to the smallest variable index.
pub fn select_variable(
    state: &SearchState,
    model: &Model,
    sid: StrategyId,
    counters: &CounterState,
) -> Option<VarId> {
    let mut best: Option<VarId> = None;
    for (i, d) in state.domains().iter().enumerate() {
        if d.len() <= 1 {
            continue;
        }
        let v = VarId(i);
        let Some(b) = best else {
            best = Some(v);
            continue;
        };
        if better(state, model, sid, counters, v, b) {
            best = Some(v);
        }
    }
    best
}

/// Whether `a` is strictly preferred over `b`.
#[inline]
fn better(
    state: &SearchState,
    model: &Model,
    sid: StrategyId,
    c: &CounterState,
    a: VarId,
    b: VarId,
) -> bool {
    match sid {
        StrategyId::FirstFail => state.domain(a).len() < state.domain(b).len(),
        StrategyId::Activity => c.activity[a.0] > c.activity[b.0],
        StrategyId::WdegMin | StrategyId::WdegMax => c.wdeg[a.0] > c.wdeg[b.0],
        StrategyId::MaxRegret => regret(state, a) > regret(state, b),
        StrategyId::MostConstrained => model.degree(a) > model.degree(b),
        StrategyId::DomOverWdeg => {
            // size_a / wa < size_b / wb, cross-multiplied; zero weights count as one
            let wa = c.wdeg[a.0].max(1) as u128;
            let wb = c.wdeg[b.0].max(1) as u128;
            (state.domain(a).len() as u128) * wb < (state.domain(b).len() as u128) * wa
        }
    }
}

/// Value tried first on the left branch.
pub fn select_value(state: &SearchState, var: VarId, sid: StrategyId) -> i32 {
    let d = state.domain(var);
    let v = match sid {
        StrategyId::WdegMax => d.max(),
        _ => d.min(),
    };
    v.expect("select_value on an empty domain")
}
