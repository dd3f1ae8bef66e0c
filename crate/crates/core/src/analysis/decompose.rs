//! Choosing among path decompositions of Nash flows.
//!
//! Path flows at equilibrium are generally not unique: in a network with two
//! parallel blocks in series, mass can be swapped between crossing routes
//! without changing any edge flow, and types can trade paths that are
//! min-cost for both. Edge flows fix every path cost, so any decomposition
//! that keeps the edge flows and puts each type only on its min-cost paths
//! is again a Nash flow.
//!
//! [`aligned_decompositions`] searches both flows' decompositions at once
//! with a small mixed-integer program. Binary indicators mark which
//! (type, path) pairs carry mass in the reference flow, since only those
//! trigger an ordering constraint.

use std::time::Duration;

use microlp::{ComparisonOp, LinearExpr, OptimizationDirection, Problem, Variable};

use crate::equilibrium::{type_path_cost, EquilibriumResult};
use crate::flows::{NetworkFlow, TypedFlow};
use crate::network::{EdgeId, Path};
use crate::problem::{AgentType, RoutingProblem};

/// Relative slack when deciding which paths are min-cost.
pub(crate) const MIN_COST_SLACK: f64 = 1e-7;
/// Allowed edge-flow mismatch, relative to demand.
const EDGE_TOL: f64 = 1e-9;
const TIME_LIMIT: Duration = Duration::from_secs(10);

struct Side<'a> {
    vars: Vec<(AgentType, &'a Path, Variable)>,
}

impl<'a> Side<'a> {
    /// Path-flow variables over each type's min-cost paths, tied to the
    /// solved edge flows (up to round-off) and type masses.
    fn new(lp: &mut Problem, game: &'a RoutingProblem, solved: &EquilibriumResult) -> Self {
        let flow = &solved.flow;
        let mut vars = Vec::new();
        for kind in AgentType::BOTH {
            if game.mass_of(kind) <= 0.0 {
                continue;
            }
            let lambda = match kind {
                AgentType::Altruistic => solved.lambda_a,
                AgentType::Selfish => solved.lambda_s,
            };
            let slack = MIN_COST_SLACK * lambda.abs().max(1.0);
            let start = vars.len();
            for p in game.paths_of(kind) {
                if type_path_cost(game, flow, kind, p) <= lambda + slack {
                    vars.push((kind, p, lp.add_var(0.0, (0.0, f64::INFINITY))));
                }
            }
            let total: Vec<(Variable, f64)> =
                vars[start..].iter().map(|(_, _, v)| (*v, 1.0)).collect();
            lp.add_constraint(total.as_slice(), ComparisonOp::Eq, game.mass_of(kind));
        }
        for (e, &load) in flow.edge_flows().iter().enumerate() {
            let on_edge: Vec<(Variable, f64)> = vars
                .iter()
                .filter(|(_, p, _)| p.contains(EdgeId(e)))
                .map(|(_, _, v)| (*v, 1.0))
                .collect();
            if !on_edge.is_empty() {
                // the solved flow may keep round-off mass on paths that are not min-cost
                let tol = EDGE_TOL * game.demand();
                lp.add_constraint(on_edge.as_slice(), ComparisonOp::Ge, load - tol);
                lp.add_constraint(on_edge.as_slice(), ComparisonOp::Le, load + tol);
            }
        }
        Side { vars }
    }

    /// `sign * (total flow on path)` added to `expr`.
    fn add_path(&self, expr: &mut LinearExpr, path: &Path, sign: f64) {
        for (_, _, v) in self.vars.iter().filter(|(_, p, _)| *p == path) {
            expr.add(*v, sign);
        }
    }

    fn flow(&self, game: &RoutingProblem, value: impl Fn(Variable) -> f64) -> NetworkFlow {
        let typed = |kind: AgentType| {
            TypedFlow::new(
                kind,
                self.vars
                    .iter()
                    .filter(|(k, _, _)| *k == kind)
                    .map(|(_, p, v)| ((*p).clone(), value(*v).max(0.0))),
            )
        };
        NetworkFlow::assemble(
            game.network().edge_count(),
            typed(AgentType::Altruistic),
            typed(AgentType::Selfish),
        )
    }
}

/// Finds Nash decompositions of `x` (for `game`) and `xt` (for `marginal`)
/// minimizing the largest ordering violation: paths used by altruists in
/// the first flow must not gain flow, paths used by selfish agents must not
/// lose flow. Altruist path flows of the first decomposition are either zero
/// or at least `epsilon`. Returns `None` if the solver gives up.
pub(crate) fn aligned_decompositions(
    game: &RoutingProblem,
    x: &EquilibriumResult,
    epsilon: f64,
    marginal: &RoutingProblem,
    xt: &EquilibriumResult,
) -> Option<(NetworkFlow, NetworkFlow)> {
    let mut lp = Problem::new(OptimizationDirection::Minimize);
    lp.set_time_limit(TIME_LIMIT);
    let excess = lp.add_var(1.0, (0.0, f64::INFINITY));
    let before = Side::new(&mut lp, game, x);
    let after = Side::new(&mut lp, marginal, xt);
    let big = game.demand();

    for &(kind, path, v) in &before.vars {
        let used = lp.add_binary_var(0.0);
        lp.add_constraint([(v, 1.0), (used, -big)], ComparisonOp::Le, 0.0);
        // altruist paths: after - before <= excess; selfish: before - after <= excess
        let sign = match kind {
            AgentType::Altruistic => {
                lp.add_constraint([(v, 1.0), (used, -epsilon)], ComparisonOp::Ge, 0.0);
                1.0
            }
            AgentType::Selfish => -1.0,
        };
        let mut expr = LinearExpr::empty();
        after.add_path(&mut expr, path, sign);
        before.add_path(&mut expr, path, -sign);
        expr.add(excess, -1.0);
        expr.add(used, big);
        lp.add_constraint(expr, ComparisonOp::Le, big);
    }

    let outcome = lp.solve().ok()?;
    let solution = outcome.solution()?;
    Some((
        before.flow(game, |v| solution[v]),
        after.flow(marginal, |v| solution[v]),
    ))
}
