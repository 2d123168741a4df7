//! JSON model format.
//!
//! ```json
//! {
//!   "name": "tiny",
//!   "variables": [
//!     {"id": "x", "domain": [0, 3]},
//!     {"id": "y", "domain": [1, 5, 9]},
//!     {"id": "z", "domain": {"values": [2, 7]}}
//!   ],
//!   "constraints": [
//!     {"kind": "all_different", "vars": ["x", "y"]},
//!     {"kind": "linear_eq", "coeffs": [1, 1], "vars": ["x", "y"], "rhs": 5},
//!     {"kind": "linear_le", "coeffs": [1, -1], "vars": ["x", "z"], "rhs": 0},
//!     {"kind": "abs_diff", "x": "x", "y": "y", "z": "z"},
//!     {"kind": "not_equal", "x": "x", "y": "z", "offset": 1}
//!   ],
//!   "objective": {"sense": "minimize", "var": "z"}
//! }
//! ```
//!
//! A two-element domain array is the interval `[lo, hi]`; any other array
//! lists the values. `{"values": [...]}` always lists values.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::csp::{Constraint, Domain, Model, Sense, VarId};

#[derive(Debug, thiserror::Error)]
pub enum JsonModelError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed model JSON at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{location}: {message}")]
    Invalid { location: String, message: String },
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelDoc {
    name: String,
    variables: Vec<VarDoc>,
    #[serde(default)]
    constraints: Vec<ConstraintDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    objective: Option<ObjectiveDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct VarDoc {
    id: String,
    domain: DomainDoc,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum DomainDoc {
    List(Vec<i32>),
    Values { values: Vec<i32> },
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum ConstraintDoc {
    AllDifferent {
        vars: Vec<String>,
    },
    LinearEq {
        coeffs: Vec<i64>,
        vars: Vec<String>,
        rhs: i64,
    },
    LinearLe {
        coeffs: Vec<i64>,
        vars: Vec<String>,
        rhs: i64,
    },
    AbsDiff {
        x: String,
        y: String,
        z: String,
    },
    NotEqual {
        x: String,
        y: String,
        #[serde(default)]
        offset: i64,
    },
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ObjectiveDoc {
    sense: Sense,
    var: String,
}

fn invalid(location: impl Into<String>, message: impl Into<String>) -> JsonModelError {
    JsonModelError::Invalid {
        location: location.into(),
        message: message.into(),
    }
}

pub fn load_json(path: impl AsRef<Path>) -> Result<Model, JsonModelError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| JsonModelError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_json(&text)
}

pub fn parse_json(text: &str) -> Result<Model, JsonModelError> {
    let doc: ModelDoc = serde_json::from_str(text).map_err(|e| JsonModelError::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let mut ids: HashMap<&str, VarId> = HashMap::new();
    let mut builder = Model::builder(doc.name.clone());
    for (i, v) in doc.variables.iter().enumerate() {
        let loc = format!("variables[{i}]");
        let domain = match &v.domain {
            DomainDoc::List(vals) if vals.len() == 2 => {
                if vals[0] > vals[1] {
                    return Err(invalid(
                        format!("{loc}.domain"),
                        format!("empty interval [{}, {}] for '{}'", vals[0], vals[1], v.id),
                    ));
                }
                Domain::range(vals[0], vals[1])
            }
            DomainDoc::List(vals) | DomainDoc::Values { values: vals } => {
                Domain::from_values(vals.iter().copied())
            }
        };
        if domain.is_empty() {
            return Err(invalid(
                format!("{loc}.domain"),
                format!("empty domain for '{}'", v.id),
            ));
        }
        let id = builder.var(v.id.clone(), domain);
        if ids.insert(v.id.as_str(), id).is_some() {
            return Err(invalid(
                format!("{loc}.id"),
                format!("duplicate variable id '{}'", v.id),
            ));
        }
    }
    let lookup = |loc: String, name: &str| {
        ids.get(name)
            .copied()
            .ok_or_else(|| invalid(loc, format!("unknown variable id '{name}'")))
    };
    for (ci, c) in doc.constraints.iter().enumerate() {
        let loc = format!("constraints[{ci}]");
        let many = |field: &str, names: &[String]| -> Result<Vec<VarId>, JsonModelError> {
            if names.is_empty() {
                return Err(invalid(format!("{loc}.{field}"), "empty variable list"));
            }
            names
                .iter()
                .enumerate()
                .map(|(k, n)| lookup(format!("{loc}.{field}[{k}]"), n))
                .collect()
        };
        let constraint = match c {
            ConstraintDoc::AllDifferent { vars } => Constraint::AllDifferent(many("vars", vars)?),
            ConstraintDoc::LinearEq { coeffs, vars, rhs }
            | ConstraintDoc::LinearLe { coeffs, vars, rhs } => {
                if coeffs.len() != vars.len() {
                    return Err(invalid(
                        format!("{loc}.coeffs"),
                        format!("{} coefficients for {} variables", coeffs.len(), vars.len()),
                    ));
                }
                let vars = many("vars", vars)?;
                if matches!(c, ConstraintDoc::LinearEq { .. }) {
                    Constraint::LinearEq {
                        coeffs: coeffs.clone(),
                        vars,
                        rhs: *rhs,
                    }
                } else {
                    Constraint::LinearLe {
                        coeffs: coeffs.clone(),
                        vars,
                        rhs: *rhs,
                    }
                }
            }
            ConstraintDoc::AbsDiff { x, y, z } => Constraint::AbsDiff {
                x: lookup(format!("{loc}.x"), x)?,
                y: lookup(format!("{loc}.y"), y)?,
                z: lookup(format!("{loc}.z"), z)?,
            },
            ConstraintDoc::NotEqual { x, y, offset } => Constraint::NotEqual {
                x: lookup(format!("{loc}.x"), x)?,
                y: lookup(format!("{loc}.y"), y)?,
                offset: *offset,
            },
        };
        builder.post(constraint);
    }
    if let Some(obj) = &doc.objective {
        let var = lookup("objective.var".to_string(), &obj.var)?;
        match obj.sense {
            Sense::Minimize => builder.minimize(var),
            Sense::Maximize => builder.maximize(var),
        };
    }
    builder.build().map_err(|e| invalid("model", e.to_string()))
}

pub fn to_json(model: &Model) -> String {
    let name = |v: &VarId| model.variables()[v.0].name.clone();
    let names = |vs: &[VarId]| vs.iter().map(name).collect::<Vec<_>>();
    let doc = ModelDoc {
        name: model.name().to_string(),
        variables: model
            .variables()
            .iter()
            .map(|v| VarDoc {
                id: v.name.clone(),
                domain: if v.domain.is_interval() {
                    DomainDoc::List(vec![v.domain.min().unwrap(), v.domain.max().unwrap()])
                } else {
                    DomainDoc::Values {
                        values: v.domain.values(),
                    }
                },
            })
            .collect(),
        constraints: model
            .constraints()
            .iter()
            .map(|c| match c {
                Constraint::AllDifferent(vars) => ConstraintDoc::AllDifferent { vars: names(vars) },
                Constraint::LinearEq { coeffs, vars, rhs } => ConstraintDoc::LinearEq {
                    coeffs: coeffs.clone(),
                    vars: names(vars),
                    rhs: *rhs,
                },
                Constraint::LinearLe { coeffs, vars, rhs } => ConstraintDoc::LinearLe {
                    coeffs: coeffs.clone(),
                    vars: names(vars),
                    rhs: *rhs,
                },
                Constraint::AbsDiff { x, y, z } => ConstraintDoc::AbsDiff {
                    x: name(x),
                    y: name(y),
                    z: name(z),
                },
                Constraint::NotEqual { x, y, offset } => ConstraintDoc::NotEqual {
                    x: name(x),
                    y: name(y),
                    offset: *offset,
                },
            })
            .collect(),
        objective: model.objective().map(|o| ObjectiveDoc {
            sense: o.sense,
            var: name(&o.var),
        }),
    };
    serde_json::to_string_pretty(&doc).expect("model document serializes")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models;
    use crate::search::{count_all, solve, SearchMode, WorkBudget};
    use crate::strategy::StrategyId;
    use crate::Subproblem;

    #[test]
    fn builtins_round_trip() {
        for m in [
            models::nqueens(6),
            models::allinterval(6),
            models::latin(3),
            models::magicsquare(3),
        ] {
            let back = parse_json(&to_json(&m)).unwrap();
            assert_eq!(back.constraints(), m.constraints());
            assert_eq!(
                count_all(&back, StrategyId::DomOverWdeg).unwrap(),
                count_all(&m, StrategyId::DomOverWdeg).unwrap()
            );
        }
        let g = models::golomb(4, 10);
        let back = parse_json(&to_json(&g)).unwrap();
        let mode = SearchMode::Optimize { incumbent: None };
        let a = solve(
            &g,
            &Subproblem::root(),
            StrategyId::FirstFail,
            mode,
            WorkBudget::unlimited(),
        )
        .unwrap();
        let b = solve(
            &back,
            &Subproblem::root(),
            StrategyId::FirstFail,
            mode,
            WorkBudget::unlimited(),
        )
        .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn dangling_id_is_named() {
        let text = r#"{"name": "t", "variables": [{"id": "x", "domain": [0, 2]}],
            "constraints": [{"kind": "not_equal", "x": "x", "y": "q7"}]}"#;
        let err = parse_json(text).unwrap_err().to_string();
        assert!(err.contains("q7"), "{err}");
        assert!(err.contains("constraints[0].y"), "{err}");
    }

    #[test]
    fn minimal_file_counts_domain() {
        let text = r#"{"name": "one", "variables": [{"id": "x", "domain": [1, 5, 9]}]}"#;
        let m = parse_json(text).unwrap();
        assert_eq!(
            count_all(&m, StrategyId::FirstFail)
                .unwrap()
                .solutions_found,
            3
        );
        let text = r#"{"name": "two", "variables": [{"id": "x", "domain": {"values": [2, 7]}}]}"#;
        assert_eq!(
            parse_json(text).unwrap().variables()[0].domain.values(),
            vec![2, 7]
        );
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(
            parse_json("{ nope"),
            Err(JsonModelError::Syntax { .. })
        ));
        let unknown_kind = r#"{"name": "t", "variables": [{"id": "x", "domain": [0, 2]}],
            "constraints": [{"kind": "regular", "vars": ["x"]}]}"#;
        assert!(parse_json(unknown_kind).is_err());
        let empty = r#"{"name": "t", "variables": [{"id": "x", "domain": [3, 1]}]}"#;
        assert!(parse_json(empty)
            .unwrap_err()
            .to_string()
            .contains("variables[0].domain"));
        let empty_list = r#"{"name": "t", "variables": [{"id": "x", "domain": []}]}"#;
        assert!(parse_json(empty_list).is_err());
    }
}
