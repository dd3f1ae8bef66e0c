//! Dense per-type path-flow vectors used inside the solvers.

use crate::flows::{NetworkFlow, TypedFlow};
use crate::latency::{EdgeCosts, Posynomial};
use crate::network::{EdgeId, Path};
use crate::problem::{AgentType, RoutingProblem};

/// Path set of one type with masses aligned to it.
#[derive(Debug, Clone)]
pub(crate) struct TypeState {
    pub kind: AgentType,
    pub paths: Vec<Path>,
    pub masses: Vec<f64>,
    pub total: f64,
}

impl TypeState {
    pub fn uniform(problem: &RoutingProblem, kind: AgentType) -> Self {
        let paths: Vec<Path> = problem.paths_of(kind).iter().cloned().collect();
        let total = problem.mass_of(kind);
        let share = total / paths.len() as f64;
        TypeState {
            kind,
            masses: vec![share; paths.len()],
            paths,
            total,
        }
    }

    pub fn from_flow(problem: &RoutingProblem, flow: &TypedFlow) -> Self {
        let mut s = Self::uniform(problem, flow.kind());
        for (p, m) in s.paths.iter().zip(s.masses.iter_mut()) {
            *m = flow.get(p).max(0.0);
        }
        s
    }

    pub fn to_flow(&self) -> TypedFlow {
        TypedFlow::new(
            self.kind,
            self.paths.iter().cloned().zip(self.masses.iter().copied()),
        )
    }

    pub fn add_edge_flows(&self, edge_flows: &mut [f64]) {
        for (p, &m) in self.paths.iter().zip(&self.masses) {
            for e in p.edges() {
                edge_flows[e.0] += m;
            }
        }
    }

    pub fn edge_flows(&self, edge_count: usize) -> Vec<f64> {
        let mut x = vec![0.0; edge_count];
        self.add_edge_flows(&mut x);
        x
    }

    /// `self <- w * other + (1 - w) * self`
    pub fn blend(&mut self, other: &TypeState, w: f64) {
        for (m, o) in self.masses.iter_mut().zip(&other.masses) {
            *m = w * o + (1.0 - w) * *m;
        }
    }
}

/// Edge cost experienced by a type: latency for selfish agents, marginal
/// cost for altruists.
#[inline]
pub(crate) fn edge_cost(kind: AgentType, l: &Posynomial, x: f64) -> f64 {
    match kind {
        AgentType::Selfish => l.value(x),
        AgentType::Altruistic => l.marginal_value(x),
    }
}

pub(crate) fn path_cost(
    kind: AgentType,
    costs: &EdgeCosts,
    edge_flows: &[f64],
    edges: &[EdgeId],
) -> f64 {
    edges
        .iter()
        .map(|e| {
            edge_cost(
                kind,
                costs.get(*e).expect("edge in network"),
                edge_flows[e.0],
            )
        })
        .sum()
}

/// Returns `(min cost, mass-weighted regret)` of a type at the given edge flows.
pub(crate) fn type_regret(costs: &EdgeCosts, state: &TypeState, edge_flows: &[f64]) -> (f64, f64) {
    let c: Vec<f64> = state
        .paths
        .iter()
        .map(|p| path_cost(state.kind, costs, edge_flows, p.edges()))
        .collect();
    let min = c.iter().copied().fold(f64::INFINITY, f64::min);
    let regret = state
        .masses
        .iter()
        .zip(&c)
        .map(|(m, c)| m * (c - min))
        .sum::<f64>();
    (min, regret.max(0.0))
}

pub(crate) fn network_flow(problem: &RoutingProblem, a: &TypeState, s: &TypeState) -> NetworkFlow {
    NetworkFlow::assemble(problem.network().edge_count(), a.to_flow(), s.to_flow())
}
