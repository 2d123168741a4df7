//! Finite-domain constraint models and propagation.

mod domain;
mod model;
mod propagate;

pub use domain::{Domain, DomainIter};
pub use model::{Constraint, Model, ModelBuilder, Objective, Sense, VarId, VariableDecl};
pub use propagate::{propagate, Inconsistent, SearchState};

pub(crate) use propagate::Engine;
