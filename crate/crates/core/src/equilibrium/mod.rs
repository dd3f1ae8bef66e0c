//! Nash flows of the two-population routing game.
//!
//! Heterogeneous equilibria are computed by diagonalization: the selfish and
//! altruistic best-response programs are solved alternately, each against
//! the other population's current edge flows, and the iterates are averaged
//! with a damping factor. The mass-weighted regret ([`nash_gap`]) is the
//! convergence certificate.

mod dense;
mod oracle;
mod subproblem;

use thiserror::Error;

use crate::flows::{check_feasible, check_typed, FlowError, NetworkFlow, TypedFlow};
use crate::network::Path;
use crate::problem::{AgentType, RoutingProblem};

use dense::{network_flow, path_cost, type_regret, TypeState};
use subproblem::best_response;

pub use oracle::{brute_force_nash, grid_minimize, GRID_POINT_LIMIT};

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Convergence threshold on the Nash gap.
    pub eps_nash: f64,
    pub max_outer_iters: usize,
    /// Weight of the fresh best response when averaging iterates, in (0, 1].
    pub damping: f64,
    /// Relative duality-gap tolerance of each best-response solve.
    pub inner_tol: f64,
    pub max_inner_iters: usize,
    /// Grid spacing of the brute-force oracle, as a fraction of demand.
    pub grid_step: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            eps_nash: 1e-6,
            max_outer_iters: 10_000,
            damping: 0.5,
            inner_tol: 1e-9,
            max_inner_iters: 100_000,
            grid_step: 1e-2,
        }
    }
}

impl SolverConfig {
    /// Copy with the Nash-gap tolerance capped at `eps_nash` and the inner
    /// tolerance kept three orders of magnitude below it.
    pub fn tightened(&self, eps_nash: f64) -> Self {
        SolverConfig {
            eps_nash: self.eps_nash.min(eps_nash),
            inner_tol: self.inner_tol.min(eps_nash * 1e-3),
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        let positive = [
            ("eps_nash", self.eps_nash),
            ("damping", self.damping),
            ("inner_tol", self.inner_tol),
            ("grid_step", self.grid_step),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(SolverError::InvalidConfig(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        if self.damping > 1.0 {
            return Err(SolverError::InvalidConfig(format!(
                "damping must be at most 1, got {}",
                self.damping
            )));
        }
        if self.max_outer_iters == 0 || self.max_inner_iters == 0 {
            return Err(SolverError::InvalidConfig(
                "iteration limits must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// A (possibly approximate) Nash flow with its certificate.
#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumResult {
    pub flow: NetworkFlow,
    /// Minimum marginal path cost over the altruists' path set.
    pub lambda_a: f64,
    /// Minimum path latency over the selfish agents' path set.
    pub lambda_s: f64,
    pub nash_gap: f64,
    pub total_latency: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error("{kind} best response did not converge (gap {gap:e})")]
    SubproblemNonConvergence { kind: AgentType, gap: f64 },
    #[error("no equilibrium within the iteration limit; best gap {gap:e}")]
    NonConvergence {
        gap: f64,
        best: Box<EquilibriumResult>,
    },
    #[error("oracle grid has {points} points, more than the limit of {limit}")]
    GridTooLarge { points: u128, limit: u128 },
    #[error(transparent)]
    Flow(#[from] FlowError),
}

/// Cost of `path` for agents of `kind` under `flow`.
pub fn type_path_cost(
    problem: &RoutingProblem,
    flow: &NetworkFlow,
    kind: AgentType,
    path: &Path,
) -> f64 {
    path_cost(kind, problem.costs(), flow.edge_flows(), path.edges())
}

/// Minimum path cost of each type: `(lambda_a, lambda_s)`.
pub fn common_costs(problem: &RoutingProblem, flow: &NetworkFlow) -> (f64, f64) {
    let min = |kind| {
        problem
            .paths_of(kind)
            .iter()
            .map(|p| type_path_cost(problem, flow, kind, p))
            .fold(f64::INFINITY, f64::min)
    };
    (min(AgentType::Altruistic), min(AgentType::Selfish))
}

/// Mass-weighted regret `sum_theta sum_p x^theta_p (c^theta_p - min_q c^theta_q)`.
/// Zero exactly at a Nash flow.
pub fn nash_gap(problem: &RoutingProblem, flow: &NetworkFlow) -> f64 {
    AgentType::BOTH
        .iter()
        .map(|&kind| {
            let costs: Vec<(f64, f64)> = problem
                .paths_of(kind)
                .iter()
                .map(|p| {
                    (
                        flow.typed(kind).get(p),
                        type_path_cost(problem, flow, kind, p),
                    )
                })
                .collect();
            let min = costs.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
            costs
                .iter()
                .map(|(m, c)| m * (c - min))
                .sum::<f64>()
                .max(0.0)
        })
        .sum()
}

fn check_fixed(
    problem: &RoutingProblem,
    kind: AgentType,
    flow: &TypedFlow,
) -> Result<(), SolverError> {
    if flow.kind() != kind {
        return Err(FlowError::KindMismatch {
            expected: kind,
            found: flow.kind(),
        }
        .into());
    }
    match check_typed(problem, kind, flow).into_iter().next() {
        Some(v) => Err(FlowError::from(v).into()),
        None => Ok(()),
    }
}

fn solve_subproblem(
    problem: &RoutingProblem,
    kind: AgentType,
    fixed: &TypedFlow,
    config: &SolverConfig,
) -> Result<TypedFlow, SolverError> {
    config.validate()?;
    let other = match kind {
        AgentType::Altruistic => AgentType::Selfish,
        AgentType::Selfish => AgentType::Altruistic,
    };
    check_fixed(problem, other, fixed)?;
    let fixed_edges =
        TypeState::from_flow(problem, fixed).edge_flows(problem.network().edge_count());
    let mut state = TypeState::uniform(problem, kind);
    let out = best_response(
        problem.costs(),
        &mut state,
        &fixed_edges,
        config.inner_tol,
        config.max_inner_iters,
    );
    if !out.converged {
        return Err(SolverError::SubproblemNonConvergence { kind, gap: out.gap });
    }
    Ok(state.to_flow())
}

/// Selfish best response to a fixed altruistic flow.
pub fn solve_selfish_subproblem(
    problem: &RoutingProblem,
    fixed_altruistic: &TypedFlow,
    config: &SolverConfig,
) -> Result<TypedFlow, SolverError> {
    solve_subproblem(problem, AgentType::Selfish, fixed_altruistic, config)
}

/// Altruistic best response to a fixed selfish flow.
pub fn solve_altruistic_subproblem(
    problem: &RoutingProblem,
    fixed_selfish: &TypedFlow,
    config: &SolverConfig,
) -> Result<TypedFlow, SolverError> {
    solve_subproblem(problem, AgentType::Altruistic, fixed_selfish, config)
}

/// Computes a heterogeneous Nash flow.
///
/// The starting point is sequential: the selfish population first settles
/// alone, then the altruists best-respond to it. Diagonalization proceeds
/// from there. When one population is empty this is a single best-response
/// solve.
pub fn solve_heterogeneous(
    problem: &RoutingProblem,
    config: &SolverConfig,
) -> Result<EquilibriumResult, SolverError> {
    config.validate()?;
    let edge_count = problem.network().edge_count();
    let mut s = TypeState::uniform(problem, AgentType::Selfish);
    let mut a = TypeState::uniform(problem, AgentType::Altruistic);
    if problem.r_s() > 0.0 {
        best_response(
            problem.costs(),
            &mut s,
            &vec![0.0; edge_count],
            config.inner_tol,
            config.max_inner_iters,
        );
    }
    if problem.r_a() > 0.0 {
        let fixed = s.edge_flows(edge_count);
        best_response(
            problem.costs(),
            &mut a,
            &fixed,
            config.inner_tol,
            config.max_inner_iters,
        );
    }
    diagonalize(problem, config, a, s)
}

/// Like [`solve_heterogeneous`] but starting from a given feasible flow.
pub fn solve_heterogeneous_from(
    problem: &RoutingProblem,
    config: &SolverConfig,
    start: &NetworkFlow,
) -> Result<EquilibriumResult, SolverError> {
    config.validate()?;
    if let Some(v) = check_feasible(problem, start.altruistic(), start.selfish())
        .into_iter()
        .next()
    {
        return Err(FlowError::from(v).into());
    }
    let a = TypeState::from_flow(problem, start.altruistic());
    let s = TypeState::from_flow(problem, start.selfish());
    diagonalize(problem, config, a, s)
}

fn diagonalize(
    problem: &RoutingProblem,
    config: &SolverConfig,
    mut a: TypeState,
    mut s: TypeState,
) -> Result<EquilibriumResult, SolverError> {
    let costs = problem.costs();
    let edge_count = problem.network().edge_count();
    let active_a = problem.r_a() > 0.0;
    let active_s = problem.r_s() > 0.0;

    let mut best: Option<(f64, TypeState, TypeState, usize)> = None;
    for iter in 0..=config.max_outer_iters {
        let x = {
            let mut x = a.edge_flows(edge_count);
            s.add_edge_flows(&mut x);
            x
        };
        let gap = type_regret(costs, &a, &x).1 + type_regret(costs, &s, &x).1;
        if best.as_ref().is_none_or(|b| gap < b.0) {
            best = Some((gap, a.clone(), s.clone(), iter));
        }
        if gap <= config.eps_nash || iter == config.max_outer_iters {
            break;
        }

        if active_s {
            let fixed = a.edge_flows(edge_count);
            let mut br = s.clone();
            best_response(
                costs,
                &mut br,
                &fixed,
                config.inner_tol,
                config.max_inner_iters,
            );
            // a lone population needs no averaging
            let w = if active_a { config.damping } else { 1.0 };
            s.blend(&br, w);
        }
        if active_a {
            let fixed = s.edge_flows(edge_count);
            let mut br = a.clone();
            best_response(
                costs,
                &mut br,
                &fixed,
                config.inner_tol,
                config.max_inner_iters,
            );
            let w = if active_s { config.damping } else { 1.0 };
            a.blend(&br, w);
        }
    }

    let (gap, a, s, iterations) = best.expect("at least one iterate");
    let result = finish(problem, &a, &s, gap, iterations, gap <= config.eps_nash);
    if result.converged {
        Ok(result)
    } else {
        Err(SolverError::NonConvergence {
            gap,
            best: Box::new(result),
        })
    }
}

fn finish(
    problem: &RoutingProblem,
    a: &TypeState,
    s: &TypeState,
    gap: f64,
    iterations: usize,
    converged: bool,
) -> EquilibriumResult {
    let flow = network_flow(problem, a, s);
    let (lambda_a, lambda_s) = common_costs(problem, &flow);
    let total_latency = problem
        .costs()
        .total_latency(flow.edge_flows())
        .expect("non-negative flows");
    EquilibriumResult {
        flow,
        lambda_a,
        lambda_s,
        nash_gap: gap,
        total_latency,
        iterations,
        converged,
    }
}
