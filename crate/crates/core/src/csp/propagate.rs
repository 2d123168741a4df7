//! Propagation to fixpoint.
//!
//! Propagator strength, per constraint kind:
//!
//! * `AllDifferent`: value-based. Every fixed value is removed from the other
//!   domains; two variables fixed to the same value fail.
//! * `LinearEq` / `LinearLe`: bounds reasoning on `sum(a_i * x_i)`.
//! * `AbsDiff`: domain consistency, every remaining value keeps a support.
//! * `NotEqual`: value removal once either side is fixed.
//!
//! Every propagator iterates to its own fixpoint before returning, so the
//! engine never re-queues the propagator that produced a change. The queue is
//! FIFO and seeded in constraint declaration order.

use std::collections::VecDeque;

use smallvec::SmallVec;

use super::domain::Domain;
use super::model::{Constraint, Model, VarId};
use crate::error::CspError;

/// Raised when propagation empties a domain or proves a constraint unsatisfiable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("inconsistent (constraint {constraint:?})")]
pub struct Inconsistent {
    /// The failing constraint, when the failure came from a propagator.
    pub constraint: Option<usize>,
}

/// Domain store for one search path.
///
/// Restoration on backtrack is done by the search, which keeps copies of the
/// states it may return to; copies are a flat memcpy of small bitsets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchState {
    domains: Vec<Domain>,
    failed: bool,
}

impl SearchState {
    pub fn root(model: &Model) -> Self {
        SearchState {
            domains: model.variables().iter().map(|v| v.domain.clone()).collect(),
            failed: false,
        }
    }

    pub fn from_domains(domains: Vec<Domain>) -> Self {
        let failed = domains.iter().any(Domain::is_empty);
        SearchState { domains, failed }
    }

    #[inline]
    pub fn domain(&self, var: VarId) -> &Domain {
        &self.domains[var.0]
    }

    pub fn domains(&self) -> &[Domain] {
        &self.domains
    }

    #[inline]
    pub fn is_failed(&self) -> bool {
        self.failed
    }

    pub fn is_assigned(&self) -> bool {
        self.domains.iter().all(Domain::is_singleton)
    }

    /// The full assignment, when every domain is a singleton.
    pub fn solution(&self) -> Option<Vec<i32>> {
        self.domains.iter().map(Domain::value).collect()
    }

    /// Fixes `var` to `value` without propagating.
    pub fn assign(&mut self, var: VarId, value: i32) -> Result<bool, CspError> {
        let dom = &mut self.domains[var.0];
        if !dom.contains(value) {
            return Err(CspError::ValueOutsideDomain { var, value });
        }
        Ok(dom.assign(value))
    }

    /// Removes `value` from `var` without propagating; an emptied domain flags failure.
    pub fn remove(&mut self, var: VarId, value: i32) -> bool {
        let changed = self.domains[var.0].remove(value);
        if self.domains[var.0].is_empty() {
            self.failed = true;
        }
        changed
    }

    pub(crate) fn set_max(&mut self, var: VarId, hi: i64) -> bool {
        let changed = self.domains[var.0].set_max(hi);
        if self.domains[var.0].is_empty() {
            self.failed = true;
        }
        changed
    }

    pub(crate) fn set_min(&mut self, var: VarId, lo: i64) -> bool {
        let changed = self.domains[var.0].set_min(lo);
        if self.domains[var.0].is_empty() {
            self.failed = true;
        }
        changed
    }
}

/// Runs every propagator of `model` on `state` to a common fixpoint.
pub fn propagate(state: &mut SearchState, model: &Model) -> Result<(), Inconsistent> {
    Engine::new(model).run_all(state, model)
}

/// Reusable propagation queue plus per-fixpoint change log.
#[derive(Debug, Clone)]
pub(crate) struct Engine {
    queue: VecDeque<usize>,
    queued: Vec<bool>,
    touched: Vec<bool>,
    /// Variables pruned by propagators during the last fixpoint, first-change order.
    pub(crate) changed: Vec<VarId>,
    scratch: Vec<VarId>,
    /// Propagator executions since construction.
    pub(crate) executions: u64,
}

impl Engine {
    pub(crate) fn new(model: &Model) -> Self {
        Engine {
            queue: VecDeque::with_capacity(model.constraints().len()),
            queued: vec![false; model.constraints().len()],
            touched: vec![false; model.num_vars()],
            changed: Vec::new(),
            scratch: Vec::new(),
            executions: 0,
        }
    }

    pub(crate) fn run_all(
        &mut self,
        state: &mut SearchState,
        model: &Model,
    ) -> Result<(), Inconsistent> {
        self.reset();
        if state.failed {
            return Err(Inconsistent { constraint: None });
        }
        for c in 0..model.constraints().len() {
            self.enqueue(c);
        }
        self.drain(state, model)
    }

    /// Propagates after the listed variables were modified externally.
    pub(crate) fn run_from(
        &mut self,
        state: &mut SearchState,
        model: &Model,
        modified: &[VarId],
    ) -> Result<(), Inconsistent> {
        self.reset();
        if state.failed {
            return Err(Inconsistent { constraint: None });
        }
        for v in modified {
            for &c in model.watchers(*v) {
                self.enqueue(c);
            }
        }
        self.drain(state, model)
    }

    fn reset(&mut self) {
        for v in self.changed.drain(..) {
            self.touched[v.0] = false;
        }
        for c in self.queue.drain(..) {
            self.queued[c] = false;
        }
    }

    #[inline]
    fn enqueue(&mut self, c: usize) {
        if !self.queued[c] {
            self.queued[c] = true;
            self.queue.push_back(c);
        }
    }

    fn drain(&mut self, state: &mut SearchState, model: &Model) -> Result<(), Inconsistent> {
        while let Some(c) = self.queue.pop_front() {
            self.queued[c] = false;
            self.executions += 1;
            self.scratch.clear();
            let outcome = filter(
                &model.constraints()[c],
                &mut state.domains,
                &mut self.scratch,
            );
            let mut changed = std::mem::take(&mut self.scratch);
            for &v in &changed {
                if !self.touched[v.0] {
                    self.touched[v.0] = true;
                    self.changed.push(v);
                }
            }
            if outcome.is_err() {
                state.failed = true;
                changed.clear();
                self.scratch = changed;
                for q in self.queue.drain(..) {
                    self.queued[q] = false;
                }
                return Err(Inconsistent {
                    constraint: Some(c),
                });
            }
            for &v in &changed {
                for &w in model.watchers(v) {
                    if w != c {
                        self.enqueue(w);
                    }
                }
            }
            changed.clear();
            self.scratch = changed;
        }
        Ok(())
    }
}

/// Marker for a wiped-out domain inside a propagator.
#[derive(Debug)]
pub(crate) struct Wipeout;

type Filtered = Result<(), Wipeout>;

/// Applies one propagator to its own fixpoint, appending modified variables to `changed`.
pub(crate) fn filter(c: &Constraint, doms: &mut [Domain], changed: &mut Vec<VarId>) -> Filtered {
    match c {
        Constraint::AllDifferent(vars) => all_different(vars, doms, changed),
        Constraint::LinearEq { coeffs, vars, rhs } => {
            linear(coeffs, vars, *rhs, true, doms, changed)
        }
        Constraint::LinearLe { coeffs, vars, rhs } => {
            linear(coeffs, vars, *rhs, false, doms, changed)
        }
        Constraint::AbsDiff { x, y, z } => abs_diff(*x, *y, *z, doms, changed),
        Constraint::NotEqual { x, y, offset } => not_equal(*x, *y, *offset, doms, changed),
    }
}

#[inline]
fn note(doms: &[Domain], v: VarId, changed: &mut Vec<VarId>) -> Filtered {
    changed.push(v);
    if doms[v.0].is_empty() {
        Err(Wipeout)
    } else {
        Ok(())
    }
}

fn all_different(vars: &[VarId], doms: &mut [Domain], changed: &mut Vec<VarId>) -> Filtered {
    let mut fixed: SmallVec<[usize; 16]> = (0..vars.len())
        .filter(|&i| doms[vars[i].0].is_singleton())
        .collect();
    while let Some(i) = fixed.pop() {
        let value = doms[vars[i].0].lb();
        for (j, &other) in vars.iter().enumerate() {
            if j == i {
                continue;
            }
            if other == vars[i] {
                // the same fixed variable listed twice
                return Err(Wipeout);
            }
            if doms[other.0].remove(value) {
                note(doms, other, changed)?;
                if doms[other.0].is_singleton() {
                    fixed.push(j);
                }
            }
        }
    }
    Ok(())
}

#[inline]
fn floor_div(a: i64, b: i64) -> i64 {
    let q = a / b;
    if (a % b != 0) && ((a < 0) != (b < 0)) {
        q - 1
    } else {
        q
    }
}

#[inline]
fn ceil_div(a: i64, b: i64) -> i64 {
    let q = a / b;
    if (a % b != 0) && ((a < 0) == (b < 0)) {
        q + 1
    } else {
        q
    }
}

#[inline]
fn term_bounds(a: i64, d: &Domain) -> (i64, i64) {
    let (lo, hi) = (d.lb() as i64, d.ub() as i64);
    if a >= 0 {
        (a * lo, a * hi)
    } else {
        (a * hi, a * lo)
    }
}

fn linear(
    coeffs: &[i64],
    vars: &[VarId],
    rhs: i64,
    equality: bool,
    doms: &mut [Domain],
    changed: &mut Vec<VarId>,
) -> Filtered {
    loop {
        let mut sum_min = 0i64;
        let mut sum_max = 0i64;
        for (a, v) in coeffs.iter().zip(vars) {
            let (lo, hi) = term_bounds(*a, &doms[v.0]);
            sum_min += lo;
            sum_max += hi;
        }
        if sum_min > rhs || (equality && sum_max < rhs) {
            return Err(Wipeout);
        }
        let mut progress = false;
        for (&a, &v) in coeffs.iter().zip(vars) {
            if a == 0 {
                continue;
            }
            let (lo, hi) = term_bounds(a, &doms[v.0]);
            // a * x <= rhs - (sum_min - lo)
            let upper = rhs - (sum_min - lo);
            let did = if a > 0 {
                doms[v.0].set_max(floor_div(upper, a))
            } else {
                doms[v.0].set_min(ceil_div(upper, a))
            };
            if did {
                note(doms, v, changed)?;
                progress = true;
            }
            if equality {
                // a * x >= rhs - (sum_max - hi)
                let lower = rhs - (sum_max - hi);
                let did = if a > 0 {
                    doms[v.0].set_min(ceil_div(lower, a))
                } else {
                    doms[v.0].set_max(floor_div(lower, a))
                };
                if did {
                    note(doms, v, changed)?;
                    progress = true;
                }
            }
            if progress {
                break;
            }
        }
        if !progress {
            return Ok(());
        }
    }
}

fn abs_diff(
    x: VarId,
    y: VarId,
    z: VarId,
    doms: &mut [Domain],
    changed: &mut Vec<VarId>,
) -> Filtered {
    loop {
        let mut progress = false;
        let (dx, dy, dz) = (doms[x.0].clone(), doms[y.0].clone(), doms[z.0].clone());
        for v in dz.iter() {
            let v = v as i64;
            let supported = v >= 0
                && dx
                    .iter()
                    .any(|a| dy.contains_wide(a as i64 - v) || dy.contains_wide(a as i64 + v));
            if !supported && doms[z.0].remove(v as i32) {
                note(doms, z, changed)?;
                progress = true;
            }
        }
        let dz = doms[z.0].clone();
        for a in dx.iter() {
            let a = a as i64;
            let supported = dz
                .iter()
                .any(|v| dy.contains_wide(a - v as i64) || dy.contains_wide(a + v as i64));
            if !supported && doms[x.0].remove(a as i32) {
                note(doms, x, changed)?;
                progress = true;
            }
        }
        let dx = doms[x.0].clone();
        for b in dy.iter() {
            let b = b as i64;
            let supported = dz
                .iter()
                .any(|v| dx.contains_wide(b + v as i64) || dx.contains_wide(b - v as i64));
            if !supported && doms[y.0].remove(b as i32) {
                note(doms, y, changed)?;
                progress = true;
            }
        }
        if !progress {
            return Ok(());
        }
    }
}

fn not_equal(
    x: VarId,
    y: VarId,
    offset: i64,
    doms: &mut [Domain],
    changed: &mut Vec<VarId>,
) -> Filtered {
    loop {
        let mut progress = false;
        if let Some(vy) = doms[y.0].value() {
            if doms[x.0].remove_wide(vy as i64 + offset) {
                note(doms, x, changed)?;
                progress = true;
            }
        }
        if let Some(vx) = doms[x.0].value() {
            if doms[y.0].remove_wide(vx as i64 - offset) {
                note(doms, y, changed)?;
                progress = true;
            }
        }
        if !progress {
            return Ok(());
        }
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::csp::Model;
    use proptest::prelude::*;

    fn state_of(model: &Model) -> SearchState {
        SearchState::root(model)
    }

    #[test]
    fn all_different_on_equal_singletons_fails() {
        let mut b = Model::builder("t");
        let x = b.int_var("x", 1, 1);
        let y = b.int_var("y", 1, 1);
        b.all_different(vec![x, y]);
        let m = b.build().unwrap();
        let mut s = state_of(&m);
        assert_eq!(
            propagate(&mut s, &m),
            Err(Inconsistent {
                constraint: Some(0)
            })
        );
        assert!(s.is_failed());
    }

    #[test]
    fn all_different_chains_singletons() {
        let mut b = Model::builder("t");
        let x = b.int_var("x", 1, 1);
        let y = b.int_var("y", 1, 2);
        let z = b.int_var("z", 1, 3);
        b.all_different(vec![x, y, z]);
        let m = b.build().unwrap();
        let mut s = state_of(&m);
        propagate(&mut s, &m).unwrap();
        assert_eq!(s.domain(y).values(), vec![2]);
        assert_eq!(s.domain(z).values(), vec![3]);
    }

    #[test]
    fn linear_eq_bounds() {
        let mut b = Model::builder("t");
        let x = b.int_var("x", 1, 3);
        let y = b.int_var("y", 1, 3);
        b.linear_eq(vec![1, 1], vec![x, y], 5);
        let m = b.build().unwrap();
        let mut s = state_of(&m);
        propagate(&mut s, &m).unwrap();
        // supports found by enumeration: (2,3), (3,2)
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for a in 1..=3 {
            for c in 1..=3 {
                if a + c == 5 {
                    xs.push(a);
                    ys.push(c);
                }
            }
        }
        xs.sort();
        xs.dedup();
        ys.sort();
        ys.dedup();
        assert_eq!(s.domain(x).values(), xs);
        assert_eq!(s.domain(y).values(), ys);
    }

    #[test]
    fn negative_coefficients_round_correctly() {
        // 2x - 3y <= -4 with x, y in 0..5: y >= (2x + 4) / 3
        let mut b = Model::builder("t");
        let x = b.int_var("x", 0, 5);
        let y = b.int_var("y", 0, 5);
        b.linear_le(vec![2, -3], vec![x, y], -4);
        let m = b.build().unwrap();
        let mut s = state_of(&m);
        propagate(&mut s, &m).unwrap();
        assert_eq!(s.domain(y).min(), Some(2));
        assert_eq!(s.domain(x).max(), Some(5));
    }

    #[test]
    fn assign_then_propagate_conflict() {
        let mut b = Model::builder("t");
        let x = b.int_var("x", 1, 3);
        let y = b.int_var("y", 2, 2);
        b.all_different(vec![x, y]);
        let m = b.build().unwrap();
        let mut s = state_of(&m);
        s.assign(x, 2).unwrap();
        assert!(propagate(&mut s, &m).is_err());
    }

    #[test]
    fn assign_contract() {
        let mut b = Model::builder("t");
        let x = b.int_var("x", 1, 3);
        let y = b.int_var("y", 5, 5);
        let m = b.build().unwrap();
        let mut s = state_of(&m);
        assert!(s.assign(x, 2).unwrap());
        assert_eq!(s.domain(x).values(), vec![2]);
        let before = s.clone();
        assert!(!s.assign(y, 5).unwrap());
        assert_eq!(s, before);
        assert!(matches!(
            s.assign(x, 9),
            Err(CspError::ValueOutsideDomain { .. })
        ));
    }

    #[test]
    fn abs_diff_supports() {
        let mut b = Model::builder("t");
        let x = b.int_var("x", 0, 2);
        let y = b.int_var("y", 0, 0);
        let z = b.int_var("z", 2, 5);
        b.abs_diff(x, y, z);
        let m = b.build().unwrap();
        let mut s = state_of(&m);
        propagate(&mut s, &m).unwrap();
        assert_eq!(s.domain(x).values(), vec![2]);
        assert_eq!(s.domain(z).values(), vec![2]);
    }

    #[test]
    fn not_equal_with_offset() {
        let mut b = Model::builder("t");
        let x = b.int_var("x", 0, 3);
        let y = b.int_var("y", 1, 1);
        b.not_equal(x, y, 2);
        let m = b.build().unwrap();
        let mut s = state_of(&m);
        propagate(&mut s, &m).unwrap();
        assert_eq!(s.domain(x).values(), vec![0, 1, 2]);
    }

    /// A random small model over a handful of variables.
    pub(crate) fn arb_model() -> impl Strategy<Value = Model> {
        let nvars = 2usize..5;
        nvars.prop_flat_map(|n| {
            let doms = proptest::collection::vec((-2i32..3, 0i32..4), n);
            let cons = proptest::collection::vec(arb_constraint(n), 0..5);
            (doms, cons).prop_map(|(doms, cons)| {
                let mut b = Model::builder("random");
                for (i, (lo, w)) in doms.into_iter().enumerate() {
                    b.int_var(format!("x{i}"), lo, lo + w);
                }
                for c in cons {
                    b.post(c);
                }
                b.build().unwrap()
            })
        })
    }

    fn arb_constraint(n: usize) -> impl Strategy<Value = Constraint> {
        let var = (0..n).prop_map(VarId);
        prop_oneof![
            proptest::collection::vec(var.clone(), 2..=n.min(4)).prop_map(Constraint::AllDifferent),
            (
                proptest::collection::vec((-3i64..4, var.clone()), 1..4),
                -4i64..8
            )
                .prop_map(|(t, rhs)| {
                    Constraint::LinearEq {
                        coeffs: t.iter().map(|p| p.0).collect(),
                        vars: t.iter().map(|p| p.1).collect(),
                        rhs,
                    }
                }),
            (
                proptest::collection::vec((-3i64..4, var.clone()), 1..4),
                -4i64..8
            )
                .prop_map(|(t, rhs)| {
                    Constraint::LinearLe {
                        coeffs: t.iter().map(|p| p.0).collect(),
                        vars: t.iter().map(|p| p.1).collect(),
                        rhs,
                    }
                }),
            (var.clone(), var.clone(), var.clone()).prop_map(|(x, y, z)| Constraint::AbsDiff {
                x,
                y,
                z
            }),
            (var.clone(), var, -2i64..3).prop_map(|(x, y, offset)| Constraint::NotEqual {
                x,
                y,
                offset
            }),
        ]
    }

    fn satisfies(c: &Constraint, a: &[i32]) -> bool {
        let v = |x: &VarId| a[x.0] as i64;
        match c {
            Constraint::AllDifferent(vars) => {
                let mut seen: Vec<i64> = vars.iter().map(v).collect();
                seen.sort();
                let n = seen.len();
                seen.dedup();
                seen.len() == n
            }
            Constraint::LinearEq { coeffs, vars, rhs } => {
                coeffs.iter().zip(vars).map(|(c, x)| c * v(x)).sum::<i64>() == *rhs
            }
            Constraint::LinearLe { coeffs, vars, rhs } => {
                coeffs.iter().zip(vars).map(|(c, x)| c * v(x)).sum::<i64>() <= *rhs
            }
            Constraint::AbsDiff { x, y, z } => v(z) == (v(x) - v(y)).abs(),
            Constraint::NotEqual { x, y, offset } => v(x) != v(y) + offset,
        }
    }

    pub(crate) fn brute_force_solutions(m: &Model, doms: &[Domain]) -> Vec<Vec<i32>> {
        let mut out = Vec::new();
        let mut cur = Vec::with_capacity(doms.len());
        fn rec(m: &Model, doms: &[Domain], cur: &mut Vec<i32>, out: &mut Vec<Vec<i32>>) {
            if cur.len() == doms.len() {
                if m.constraints().iter().all(|c| satisfies(c, cur)) {
                    out.push(cur.clone());
                }
                return;
            }
            for v in doms[cur.len()].iter() {
                cur.push(v);
                rec(m, doms, cur, out);
                cur.pop();
            }
        }
        rec(m, doms, &mut cur, &mut out);
        out
    }

    proptest! {
        #[test]
        fn propagation_is_monotone_idempotent_and_sound(m in arb_model()) {
            let root = SearchState::root(&m);
            let all = brute_force_solutions(&m, root.domains());
            let mut s = root.clone();
            match propagate(&mut s, &m) {
                Err(_) => prop_assert!(all.is_empty()),
                Ok(()) => {
                    for (d, r) in s.domains().iter().zip(root.domains()) {
                        prop_assert!(d.is_subset(r));
                    }
                    for sol in &all {
                        for (i, v) in sol.iter().enumerate() {
                            prop_assert!(s.domains()[i].contains(*v));
                        }
                    }
                    let mut again = s.clone();
                    propagate(&mut again, &m).unwrap();
                    prop_assert_eq!(&again, &s);
                    // fixpoint: no single propagator prunes further
                    for c in m.constraints() {
                        let mut doms = s.domains().to_vec();
                        let mut changed = Vec::new();
                        prop_assert!(filter(c, &mut doms, &mut changed).is_ok());
                        prop_assert!(changed.is_empty());
                    }
                }
            }
        }

        #[test]
        fn propagation_is_deterministic(m in arb_model()) {
            let mut a = SearchState::root(&m);
            let mut b = SearchState::root(&m);
            let ra = propagate(&mut a, &m);
            let rb = propagate(&mut b, &m);
            prop_assert_eq!(ra, rb);
            prop_assert_eq!(a, b);
        }
    }
}
