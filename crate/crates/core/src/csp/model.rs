use std::fmt;

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use super::domain::Domain;
use crate::error::ModelError;

/// Index of a variable in its model's declaration order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VarId(pub usize);

impl VarId {
    #[inline]
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for VarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VariableDecl {
    pub name: String,
    pub domain: Domain,
}

/// The constraint kinds understood by the propagation engine.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Constraint {
    AllDifferent(Vec<VarId>),
    /// `sum(coeffs[i] * vars[i]) == rhs`
    LinearEq {
        coeffs: Vec<i64>,
        vars: Vec<VarId>,
        rhs: i64,
    },
    /// `sum(coeffs[i] * vars[i]) <= rhs`
    LinearLe {
        coeffs: Vec<i64>,
        vars: Vec<VarId>,
        rhs: i64,
    },
    /// `z == |x - y|`
    AbsDiff {
        x: VarId,
        y: VarId,
        z: VarId,
    },
    /// `x != y + offset`
    NotEqual {
        x: VarId,
        y: VarId,
        offset: i64,
    },
}

impl Constraint {
    /// Variables mentioned by the constraint, deduplicated, in first-mention order.
    pub fn scope(&self) -> SmallVec<[VarId; 8]> {
        let mut out: SmallVec<[VarId; 8]> = SmallVec::new();
        let mut push = |v: VarId| {
            if !out.contains(&v) {
                out.push(v);
            }
        };
        match self {
            Constraint::AllDifferent(vars)
            | Constraint::LinearEq { vars, .. }
            | Constraint::LinearLe { vars, .. } => vars.iter().copied().for_each(&mut push),
            Constraint::AbsDiff { x, y, z } => {
                push(*x);
                push(*y);
                push(*z);
            }
            Constraint::NotEqual { x, y, .. } => {
                push(*x);
                push(*y);
            }
        }
        out
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Constraint::AllDifferent(_) => "all_different",
            Constraint::LinearEq { .. } => "linear_eq",
            Constraint::LinearLe { .. } => "linear_le",
            Constraint::AbsDiff { .. } => "abs_diff",
            Constraint::NotEqual { .. } => "not_equal",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Objective {
    pub var: VarId,
    pub sense: Sense,
}

/// An immutable, validated constraint model.
#[derive(Debug, Clone)]
pub struct Model {
    name: String,
    variables: Vec<VariableDecl>,
    constraints: Vec<Constraint>,
    objective: Option<Objective>,
    watchers: Vec<Vec<usize>>,
    scopes: Vec<SmallVec<[VarId; 8]>>,
}

impl Model {
    pub fn builder(name: impl Into<String>) -> ModelBuilder {
        ModelBuilder {
            name: name.into(),
            variables: Vec::new(),
            constraints: Vec::new(),
            objective: None,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn variables(&self) -> &[VariableDecl] {
        &self.variables
    }

    pub fn num_vars(&self) -> usize {
        self.variables.len()
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn objective(&self) -> Option<Objective> {
        self.objective
    }

    /// Indices of the constraints whose scope contains `var`, in declaration order.
    #[inline]
    pub fn watchers(&self, var: VarId) -> &[usize] {
        &self.watchers[var.0]
    }

    #[inline]
    pub fn scope(&self, constraint: usize) -> &[VarId] {
        &self.scopes[constraint]
    }

    /// Number of constraints whose scope contains `var`.
    #[inline]
    pub fn degree(&self, var: VarId) -> usize {
        self.watchers[var.0].len()
    }

    pub fn var_by_name(&self, name: &str) -> Option<VarId> {
        self.variables
            .iter()
            .position(|v| v.name == name)
            .map(VarId)
    }

    /// Rebuilds a builder with the same content.
    pub fn to_builder(&self) -> ModelBuilder {
        ModelBuilder {
            name: self.name.clone(),
            variables: self.variables.clone(),
            constraints: self.constraints.clone(),
            objective: self.objective,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ModelBuilder {
    name: String,
    variables: Vec<VariableDecl>,
    constraints: Vec<Constraint>,
    objective: Option<Objective>,
}

impl ModelBuilder {
    pub fn var(&mut self, name: impl Into<String>, domain: Domain) -> VarId {
        self.variables.push(VariableDecl {
            name: name.into(),
            domain,
        });
        VarId(self.variables.len() - 1)
    }

    pub fn int_var(&mut self, name: impl Into<String>, lo: i32, hi: i32) -> VarId {
        self.var(name, Domain::range(lo, hi))
    }

    pub fn post(&mut self, constraint: Constraint) -> &mut Self {
        self.constraints.push(constraint);
        self
    }

    pub fn all_different(&mut self, vars: Vec<VarId>) -> &mut Self {
        self.post(Constraint::AllDifferent(vars))
    }

    pub fn linear_eq(&mut self, coeffs: Vec<i64>, vars: Vec<VarId>, rhs: i64) -> &mut Self {
        self.post(Constraint::LinearEq { coeffs, vars, rhs })
    }

    pub fn linear_le(&mut self, coeffs: Vec<i64>, vars: Vec<VarId>, rhs: i64) -> &mut Self {
        self.post(Constraint::LinearLe { coeffs, vars, rhs })
    }

    pub fn abs_diff(&mut self, x: VarId, y: VarId, z: VarId) -> &mut Self {
        self.post(Constraint::AbsDiff { x, y, z })
    }

    pub fn not_equal(&mut self, x: VarId, y: VarId, offset: i64) -> &mut Self {
        self.post(Constraint::NotEqual { x, y, offset })
    }

    pub fn minimize(&mut self, var: VarId) -> &mut Self {
        self.objective = Some(Objective {
            var,
            sense: Sense::Minimize,
        });
        self
    }

    pub fn maximize(&mut self, var: VarId) -> &mut Self {
        self.objective = Some(Objective {
            var,
            sense: Sense::Maximize,
        });
        self
    }

    pub fn build(self) -> Result<Model, ModelError> {
        let n = self.variables.len();
        for (i, v) in self.variables.iter().enumerate() {
            if v.domain.is_empty() {
                return Err(ModelError::EmptyDomain {
                    var: v.name.clone(),
                    index: i,
                });
            }
        }
        let check = |c: usize, v: VarId| {
            if v.0 >= n {
                Err(ModelError::UnknownVariable {
                    constraint: c,
                    var: v.0,
                })
            } else {
                Ok(())
            }
        };
        for (ci, c) in self.constraints.iter().enumerate() {
            match c {
                Constraint::AllDifferent(vars) => {
                    if vars.is_empty() {
                        return Err(ModelError::EmptyScope { constraint: ci });
                    }
                }
                Constraint::LinearEq { coeffs, vars, .. }
                | Constraint::LinearLe { coeffs, vars, .. } => {
                    if vars.is_empty() {
                        return Err(ModelError::EmptyScope { constraint: ci });
                    }
                    if coeffs.len() != vars.len() {
                        return Err(ModelError::CoefficientMismatch {
                            constraint: ci,
                            coeffs: coeffs.len(),
                            vars: vars.len(),
                        });
                    }
                }
                _ => {}
            }
            for v in c.scope() {
                check(ci, v)?;
            }
        }
        if let Some(obj) = self.objective {
            if obj.var.0 >= n {
                return Err(ModelError::UnknownObjective { var: obj.var.0 });
            }
        }
        let scopes: Vec<_> = self.constraints.iter().map(Constraint::scope).collect();
        let mut watchers = vec![Vec::new(); n];
        for (ci, scope) in scopes.iter().enumerate() {
            for v in scope {
                watchers[v.0].push(ci);
            }
        }
        Ok(Model {
            name: self.name,
            variables: self.variables,
            constraints: self.constraints,
            objective: self.objective,
            watchers,
            scopes,
        })
    }
}
