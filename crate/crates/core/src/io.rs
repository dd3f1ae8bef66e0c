//! JSON network description files.
//!
//! ```json
//! {
//!   "vertices": ["o", "t"],
//!   "edges": [
//!     {"id": "e1", "tail": "o", "head": "t", "coeffs": [1]},
//!     {"id": "e2", "tail": "o", "head": "t", "coeffs": [0, 1]}
//!   ],
//!   "origin": "o",
//!   "destination": "t",
//!   "demand": 1,
//!   "r_a": 0.5
//! }
//! ```
//!
//! Optional fields: `sp_expression`, and `paths`, `paths_altruistic`,
//! `paths_selfish` as lists of edge-id lists. A path's edges may be listed
//! in any order. Missing path sets default to all routes, and the per-type
//! sets default to `paths`. `demand` defaults to 1; `r_a` is required.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::latency::{EdgeCosts, Posynomial};
use crate::network::{NetworkSpec, Path, PathSet, DEFAULT_ROUTE_CAP};
use crate::problem::{ProblemError, RoutingProblem};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("field `{field}`: {message}")]
    Field { field: String, message: String },
}

fn field_err(field: impl Into<String>, e: impl std::fmt::Display) -> ParseError {
    ParseError::Field {
        field: field.into(),
        message: e.to_string(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeRecord {
    pub id: String,
    pub tail: String,
    pub head: String,
    pub coeffs: Vec<f64>,
}

/// On-disk form of a routing problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkFile {
    pub vertices: Vec<String>,
    pub edges: Vec<EdgeRecord>,
    pub origin: String,
    pub destination: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sp_expression: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub paths: Option<Vec<Vec<String>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub paths_altruistic: Option<Vec<Vec<String>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub paths_selfish: Option<Vec<Vec<String>>>,
    #[serde(default = "default_demand")]
    pub demand: f64,
    pub r_a: f64,
}

fn default_demand() -> f64 {
    1.0
}

impl NetworkFile {
    pub fn parse(text: &str) -> Result<Self, ParseError> {
        serde_json::from_str(text).map_err(|e| ParseError::Syntax {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("network files serialize") + "\n"
    }

    pub fn to_problem(&self) -> Result<RoutingProblem, ParseError> {
        let spec = NetworkSpec {
            vertices: self.vertices.clone(),
            edges: self
                .edges
                .iter()
                .map(|e| (e.id.clone(), e.tail.clone(), e.head.clone()))
                .collect(),
            origin: self.origin.clone(),
            destination: self.destination.clone(),
            sp_expression: self.sp_expression.clone(),
            route_cap: DEFAULT_ROUTE_CAP,
        };
        let network = spec.build().map_err(|e| {
            let field = if self.sp_expression.is_some() {
                "sp_expression"
            } else {
                "edges"
            };
            field_err(field, e)
        })?;

        let costs = self
            .edges
            .iter()
            .enumerate()
            .map(|(i, e)| {
                Posynomial::new(e.coeffs.clone())
                    .map_err(|err| field_err(format!("edges[{i}].coeffs"), err))
            })
            .collect::<Result<Vec<_>, _>>()?;

        let path_set = |field: &str, lists: &[Vec<String>]| -> Result<PathSet, ParseError> {
            let mut paths = Vec::with_capacity(lists.len());
            for (i, list) in lists.iter().enumerate() {
                let ids = list
                    .iter()
                    .map(|name| {
                        network.edge_by_name(name).ok_or_else(|| {
                            field_err(format!("{field}[{i}]"), format!("unknown edge `{name}`"))
                        })
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                let path: Path = network.route_from_edges(&ids).ok_or_else(|| {
                    field_err(
                        format!("{field}[{i}]"),
                        "edges do not form an origin-destination route",
                    )
                })?;
                paths.push(path);
            }
            network.path_set(paths).map_err(|e| field_err(field, e))
        };

        let mut builder = RoutingProblem::builder(network.clone(), EdgeCosts::new(costs))
            .demand(self.demand)
            .altruistic_mass(self.r_a);
        if let Some(p) = &self.paths {
            builder = builder.paths(path_set("paths", p)?);
        }
        if let Some(p) = &self.paths_altruistic {
            builder = builder.altruistic_paths(path_set("paths_altruistic", p)?);
        }
        if let Some(p) = &self.paths_selfish {
            builder = builder.selfish_paths(path_set("paths_selfish", p)?);
        }
        builder.build().map_err(|e| {
            let field = match &e {
                ProblemError::InvalidDemand(_) => "demand",
                ProblemError::InvalidAltruisticMass { .. } => "r_a",
                ProblemError::PathNotAvailable { kind, .. } => match kind {
                    crate::problem::AgentType::Altruistic => "paths_altruistic",
                    crate::problem::AgentType::Selfish => "paths_selfish",
                },
                _ => "paths",
            };
            field_err(field, e)
        })
    }

    /// Describes `problem`. Path sets equal to their defaults are omitted.
    pub fn from_problem(problem: &RoutingProblem) -> Self {
        let net = problem.network();
        let names = |set: &PathSet| -> Vec<Vec<String>> {
            set.iter()
                .map(|p| {
                    p.edges()
                        .iter()
                        .map(|&e| net.edge_name(e).to_string())
                        .collect()
                })
                .collect()
        };
        let all = net.all_routes();
        NetworkFile {
            vertices: net.vertices().to_vec(),
            edges: net
                .edges()
                .iter()
                .map(|e| EdgeRecord {
                    id: e.name.clone(),
                    tail: net.vertex_name(e.tail).to_string(),
                    head: net.vertex_name(e.head).to_string(),
                    coeffs: problem.costs().get(e.id).expect("edge").coeffs().to_vec(),
                })
                .collect(),
            origin: net.vertex_name(net.origin()).to_string(),
            destination: net.vertex_name(net.destination()).to_string(),
            sp_expression: None,
            paths: (problem.paths() != &all).then(|| names(problem.paths())),
            paths_altruistic: (problem.paths_of(crate::problem::AgentType::Altruistic)
                != problem.paths())
            .then(|| names(problem.paths_of(crate::problem::AgentType::Altruistic))),
            paths_selfish: (problem.paths_of(crate::problem::AgentType::Selfish)
                != problem.paths())
            .then(|| names(problem.paths_of(crate::problem::AgentType::Selfish))),
            demand: problem.demand(),
            r_a: problem.r_a(),
        }
    }
}

/// Parses a network file into a routing problem.
pub fn parse_problem(text: &str) -> Result<RoutingProblem, ParseError> {
    NetworkFile::parse(text)?.to_problem()
}

#[cfg(test)]
mod tests {
    use super::*;

    const PIGOU: &str = r#"{
  "vertices": ["o", "t"],
  "edges": [
    {"id": "e1", "tail": "o", "head": "t", "coeffs": [1]},
    {"id": "e2", "tail": "o", "head": "t", "coeffs": [0, 1]}
  ],
  "origin": "o",
  "destination": "t",
  "r_a": 0.5
}"#;

    #[test]
    fn parses_minimal_file() {
        let p = parse_problem(PIGOU).unwrap();
        assert_eq!(p.demand(), 1.0);
        assert_eq!(p.r_a(), 0.5);
        assert_eq!(p.paths().len(), 2);
        assert!(p.is_symmetric() && p.is_braess_resistant());
    }

    #[test]
    fn syntax_errors_carry_position() {
        let err = parse_problem("{\n  \"vertices\": [\"o\",\n  oops").unwrap_err();
        match err {
            ParseError::Syntax { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn semantic_errors_name_the_field() {
        let bad_coeff = PIGOU.replace("[0, 1]", "[0, -1]");
        assert!(
            matches!(parse_problem(&bad_coeff), Err(ParseError::Field { field, .. }) if field == "edges[1].coeffs")
        );
        let bad_mass = PIGOU.replace("0.5", "2.5");
        assert!(
            matches!(parse_problem(&bad_mass), Err(ParseError::Field { field, .. }) if field == "r_a")
        );
        let missing = PIGOU.replace(",\n  \"r_a\": 0.5", "");
        assert!(matches!(
            parse_problem(&missing),
            Err(ParseError::Syntax { .. })
        ));
        let bad_path = PIGOU.replace("\"r_a\"", "\"paths\": [[\"e9\"]], \"r_a\"");
        assert!(
            matches!(parse_problem(&bad_path), Err(ParseError::Field { field, .. }) if field == "paths[0]")
        );
    }

    #[test]
    fn unordered_path_edges_are_accepted() {
        let text = r#"{
  "vertices": ["o", "m", "t"],
  "edges": [
    {"id": "a", "tail": "o", "head": "m", "coeffs": [1]},
    {"id": "b", "tail": "m", "head": "t", "coeffs": [1]}
  ],
  "origin": "o", "destination": "t",
  "paths": [["b", "a"]],
  "r_a": 0
}"#;
        let p = parse_problem(text).unwrap();
        assert_eq!(p.network().path_label(&p.paths().paths()[0]), "(a,b)");
    }

    #[test]
    fn round_trips_through_json() {
        let p = parse_problem(PIGOU).unwrap();
        let again = parse_problem(&NetworkFile::from_problem(&p).to_json()).unwrap();
        assert_eq!(p, again);
    }
}
