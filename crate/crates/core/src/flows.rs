//! Per-type path flows and their aggregation to edge flows.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::network::Path;
use crate::problem::{AgentType, RoutingProblem};

/// Absolute tolerance on mass conservation.
pub const FEASIBILITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FlowError {
    #[error("expected a {expected} flow, got a {found} flow")]
    KindMismatch {
        expected: AgentType,
        found: AgentType,
    },
    #[error("{kind} flow misses its mass by {deficit:e}")]
    InfeasibleFlow { kind: AgentType, deficit: f64 },
    #[error("{kind} flow puts negative mass {mass} on path {path}")]
    NegativeMass {
        kind: AgentType,
        path: String,
        mass: f64,
    },
    #[error("{kind} flow uses path {path}, which is not in its path set")]
    PathNotAllowed { kind: AgentType, path: String },
}

/// One problem with a candidate flow.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    NegativeMass {
        kind: AgentType,
        path: String,
        mass: f64,
    },
    /// `residual` is required mass minus assigned mass.
    Conservation {
        kind: AgentType,
        residual: f64,
    },
    PathNotAllowed {
        kind: AgentType,
        path: String,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NegativeMass { kind, path, mass } => {
                write!(f, "{kind}: negative mass {mass} on {path}")
            }
            Violation::Conservation { kind, residual } => {
                write!(f, "{kind}: mass conservation residual {residual:e}")
            }
            Violation::PathNotAllowed { kind, path } => {
                write!(f, "{kind}: path {path} not in path set")
            }
        }
    }
}

impl From<Violation> for FlowError {
    fn from(v: Violation) -> Self {
        match v {
            Violation::NegativeMass { kind, path, mass } => {
                FlowError::NegativeMass { kind, path, mass }
            }
            Violation::Conservation { kind, residual } => FlowError::InfeasibleFlow {
                kind,
                deficit: residual,
            },
            Violation::PathNotAllowed { kind, path } => FlowError::PathNotAllowed { kind, path },
        }
    }
}

/// Mass of one agent type on each path.
#[derive(Debug, Clone, PartialEq)]
pub struct TypedFlow {
    kind: AgentType,
    masses: BTreeMap<Path, f64>,
}

impl TypedFlow {
    /// Repeated paths accumulate.
    pub fn new(kind: AgentType, masses: impl IntoIterator<Item = (Path, f64)>) -> Self {
        let mut map = BTreeMap::new();
        for (p, m) in masses {
            *map.entry(p).or_insert(0.0) += m;
        }
        TypedFlow { kind, masses: map }
    }

    pub fn zero(kind: AgentType) -> Self {
        TypedFlow {
            kind,
            masses: BTreeMap::new(),
        }
    }

    /// The type's mass spread evenly over its path set.
    pub fn uniform(problem: &RoutingProblem, kind: AgentType) -> Self {
        let paths = problem.paths_of(kind);
        let share = problem.mass_of(kind) / paths.len() as f64;
        Self::new(kind, paths.iter().map(|p| (p.clone(), share)))
    }

    pub fn kind(&self) -> AgentType {
        self.kind
    }

    pub fn get(&self, path: &Path) -> f64 {
        self.masses.get(path).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Path, f64)> {
        self.masses.iter().map(|(p, &m)| (p, m))
    }

    pub fn total(&self) -> f64 {
        self.masses.values().sum()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        TypedFlow {
            kind: self.kind,
            masses: self
                .masses
                .iter()
                .map(|(p, &m)| (p.clone(), m * factor))
                .collect(),
        }
    }
}

/// Lists every feasibility violation of a pair of typed flows.
pub fn check_feasible(
    problem: &RoutingProblem,
    altruistic: &TypedFlow,
    selfish: &TypedFlow,
) -> Vec<Violation> {
    let mut out = check_typed(problem, AgentType::Altruistic, altruistic);
    out.extend(check_typed(problem, AgentType::Selfish, selfish));
    out
}

/// Violations of a single type's flow, checked against the rules for `kind`.
pub fn check_typed(problem: &RoutingProblem, kind: AgentType, flow: &TypedFlow) -> Vec<Violation> {
    let mut out = Vec::new();
    let allowed = problem.paths_of(kind);
    let label = |p: &Path| problem.network().path_label(p);
    for (p, m) in flow.iter() {
        if !allowed.contains(p) && m != 0.0 {
            out.push(Violation::PathNotAllowed {
                kind,
                path: label(p),
            });
        }
        if m < 0.0 {
            out.push(Violation::NegativeMass {
                kind,
                path: label(p),
                mass: m,
            });
        }
    }
    let residual = problem.mass_of(kind) - flow.total();
    if residual.abs() > FEASIBILITY_TOL {
        out.push(Violation::Conservation { kind, residual });
    }
    out
}

/// A feasible combined flow with path and edge aggregates computed eagerly.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkFlow {
    altruistic: TypedFlow,
    selfish: TypedFlow,
    path_flows: BTreeMap<Path, f64>,
    edge_flows: Vec<f64>,
    edge_flows_altruistic: Vec<f64>,
    edge_flows_selfish: Vec<f64>,
}

/// Combines the two typed flows, failing on the first feasibility violation.
pub fn aggregate(
    problem: &RoutingProblem,
    altruistic: TypedFlow,
    selfish: TypedFlow,
) -> Result<NetworkFlow, FlowError> {
    for (expected, flow) in [
        (AgentType::Altruistic, &altruistic),
        (AgentType::Selfish, &selfish),
    ] {
        if flow.kind() != expected {
            return Err(FlowError::KindMismatch {
                expected,
                found: flow.kind(),
            });
        }
    }
    if let Some(v) = check_feasible(problem, &altruistic, &selfish)
        .into_iter()
        .next()
    {
        return Err(v.into());
    }
    Ok(NetworkFlow::assemble(
        problem.network().edge_count(),
        altruistic,
        selfish,
    ))
}

impl NetworkFlow {
    pub(crate) fn assemble(edge_count: usize, altruistic: TypedFlow, selfish: TypedFlow) -> Self {
        let edge_sum = |flow: &TypedFlow| {
            let mut x = vec![0.0; edge_count];
            for (p, m) in flow.iter() {
                for e in p.edges() {
                    x[e.0] += m;
                }
            }
            x
        };
        let edge_flows_altruistic = edge_sum(&altruistic);
        let edge_flows_selfish = edge_sum(&selfish);
        let edge_flows = edge_flows_altruistic
            .iter()
            .zip(&edge_flows_selfish)
            .map(|(a, s)| a + s)
            .collect();
        let mut path_flows = BTreeMap::new();
        for (p, m) in altruistic.iter().chain(selfish.iter()) {
            *path_flows.entry(p.clone()).or_insert(0.0) += m;
        }
        NetworkFlow {
            altruistic,
            selfish,
            path_flows,
            edge_flows,
            edge_flows_altruistic,
            edge_flows_selfish,
        }
    }

    pub fn altruistic(&self) -> &TypedFlow {
        &self.altruistic
    }

    pub fn selfish(&self) -> &TypedFlow {
        &self.selfish
    }

    pub fn typed(&self, kind: AgentType) -> &TypedFlow {
        match kind {
            AgentType::Altruistic => &self.altruistic,
            AgentType::Selfish => &self.selfish,
        }
    }

    /// Combined path flow `x_p`.
    pub fn path_flow(&self, path: &Path) -> f64 {
        self.path_flows.get(path).copied().unwrap_or(0.0)
    }

    pub fn path_flows(&self) -> impl Iterator<Item = (&Path, f64)> {
        self.path_flows.iter().map(|(p, &m)| (p, m))
    }

    /// Combined edge flows `x_e`, indexed by edge id.
    pub fn edge_flows(&self) -> &[f64] {
        &self.edge_flows
    }

    pub fn edge_flows_of(&self, kind: AgentType) -> &[f64] {
        match kind {
            AgentType::Altruistic => &self.edge_flows_altruistic,
            AgentType::Selfish => &self.edge_flows_selfish,
        }
    }
}

/// Serialized form of one (path, type) mass.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlowRecord {
    #[serde(rename = "type")]
    pub kind: AgentType,
    pub path: Vec<String>,
    pub mass: f64,
}

/// One record per path in each type's path set, altruists first.
pub fn flow_records(problem: &RoutingProblem, flow: &NetworkFlow) -> Vec<FlowRecord> {
    let net = problem.network();
    AgentType::BOTH
        .iter()
        .flat_map(|&kind| {
            problem.paths_of(kind).iter().map(move |p| FlowRecord {
                kind,
                path: p
                    .edges()
                    .iter()
                    .map(|e| net.edge_name(*e).to_string())
                    .collect(),
                mass: flow.typed(kind).get(p),
            })
        })
        .collect()
}

/// CSV with header `type,path,mass`; path edges are space separated.
pub fn flows_to_csv(records: &[FlowRecord], fmt_num: impl Fn(f64) -> String) -> String {
    let mut out = String::from("type,path,mass\n");
    for r in records {
        out.push_str(&format!(
            "{},{},{}\n",
            r.kind,
            r.path.join(" "),
            fmt_num(r.mass)
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::latency::{EdgeCosts, Posynomial};
    use crate::network::{EdgeId, Network};

    fn p(ids: &[usize]) -> Path {
        Path::new(ids.iter().map(|&i| EdgeId(i - 1)).collect())
    }

    fn fig1b_like(r_a: f64) -> RoutingProblem {
        let n = Network::from_edges(
            &[("e1", "o", "t"), ("e2", "o", "t"), ("e3", "o", "t")],
            "o",
            "t",
        )
        .unwrap();
        let pa = n.path_set([p(&[1]), p(&[2])]).unwrap();
        let costs = EdgeCosts::new(vec![
            Posynomial::constant(2.0).unwrap(),
            Posynomial::monomial(1.0, 1).unwrap(),
            Posynomial::constant(1.0).unwrap(),
        ]);
        RoutingProblem::builder(n, costs)
            .altruistic_paths(pa)
            .demand(2.0)
            .altruistic_mass(r_a)
            .build()
            .unwrap()
    }

    #[test]
    fn aggregate_three_links() {
        let g = fig1b_like(1.0);
        let a = TypedFlow::new(AgentType::Altruistic, [(p(&[1]), 1.0)]);
        let s = TypedFlow::new(AgentType::Selfish, [(p(&[2]), 1.0)]);
        let x = aggregate(&g, a, s).unwrap();
        assert_eq!(x.edge_flows(), &[1.0, 1.0, 0.0]);
        assert_eq!(x.edge_flows_of(AgentType::Altruistic), &[1.0, 0.0, 0.0]);
        assert_eq!(x.path_flow(&p(&[2])), 1.0);
    }

    #[test]
    fn zero_demand_gives_zero_flow() {
        let g = fig1b_like(0.0).with_masses(0.0, 0.0).unwrap();
        let x = aggregate(
            &g,
            TypedFlow::zero(AgentType::Altruistic),
            TypedFlow::zero(AgentType::Selfish),
        )
        .unwrap();
        assert_eq!(x.edge_flows(), &[0.0; 3]);
    }

    #[test]
    fn shared_edge_adds_path_flows() {
        let n = Network::from_edges(
            &[("e1", "o", "m"), ("e2", "m", "t"), ("e3", "m", "t")],
            "o",
            "t",
        )
        .unwrap();
        let costs = EdgeCosts::new(vec![Posynomial::constant(1.0).unwrap(); 3]);
        let g = RoutingProblem::builder(n, costs)
            .demand(0.5)
            .build()
            .unwrap();
        let s = TypedFlow::new(AgentType::Selfish, [(p(&[1, 2]), 0.3), (p(&[1, 3]), 0.2)]);
        let x = aggregate(&g, TypedFlow::zero(AgentType::Altruistic), s).unwrap();
        assert!((x.edge_flows()[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn feasibility_report() {
        let g = fig1b_like(1.0);
        let a = TypedFlow::new(AgentType::Altruistic, [(p(&[1]), 1.0)]);
        let s = TypedFlow::new(AgentType::Selfish, [(p(&[2]), 0.5), (p(&[3]), 0.5)]);
        assert!(check_feasible(&g, &a, &s).is_empty());

        let bad_a = TypedFlow::new(AgentType::Altruistic, [(p(&[3]), 1.0)]);
        let v = check_feasible(&g, &bad_a, &s);
        assert_eq!(
            v,
            vec![Violation::PathNotAllowed {
                kind: AgentType::Altruistic,
                path: "(e3)".into()
            }]
        );

        let short = TypedFlow::new(AgentType::Selfish, [(p(&[2]), 0.9)]);
        match check_feasible(&g, &a, &short).as_slice() {
            [Violation::Conservation {
                kind: AgentType::Selfish,
                residual,
            }] => assert!((residual - 0.1).abs() < 1e-12),
            other => panic!("unexpected {other:?}"),
        }

        let neg = TypedFlow::new(AgentType::Selfish, [(p(&[2]), 1.5), (p(&[3]), -0.5)]);
        assert!(matches!(
            check_feasible(&g, &a, &neg).as_slice(),
            [Violation::NegativeMass { .. }]
        ));
    }

    #[test]
    fn aggregate_rejects_infeasible_and_swapped_flows() {
        let g = fig1b_like(1.0);
        let a = TypedFlow::new(AgentType::Altruistic, [(p(&[1]), 0.5)]);
        let s = TypedFlow::new(AgentType::Selfish, [(p(&[2]), 1.0)]);
        assert!(matches!(
            aggregate(&g, a.clone(), s.clone()),
            Err(FlowError::InfeasibleFlow { .. })
        ));
        assert!(matches!(
            aggregate(&g, s, a),
            Err(FlowError::KindMismatch { .. })
        ));
    }

    #[test]
    fn csv_export() {
        let g = fig1b_like(1.0);
        let a = TypedFlow::new(AgentType::Altruistic, [(p(&[1]), 1.0)]);
        let s = TypedFlow::new(AgentType::Selfish, [(p(&[2]), 1.0)]);
        let x = aggregate(&g, a, s).unwrap();
        let csv = flows_to_csv(&flow_records(&g, &x), |v| format!("{v}"));
        assert_eq!(
            csv,
            "type,path,mass\naltruistic,e1,1\naltruistic,e2,0\nselfish,e1,0\nselfish,e2,1\nselfish,e3,0\n"
        );
    }
}
