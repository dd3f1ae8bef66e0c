//! Exhaustive grid oracles for small instances.
//!
//! These share nothing with the iterative solvers except the latency
//! functions themselves: every grid point is scored from scratch.

use crate::flows::{NetworkFlow, TypedFlow};
use crate::latency::Posynomial;
use crate::network::Path;
use crate::problem::{AgentType, RoutingProblem};

use super::{common_costs, EquilibriumResult, SolverError};

/// Largest grid the oracles will enumerate.
pub const GRID_POINT_LIMIT: u128 = 10_000_000;

/// Compositions of `units` into `parts` non-negative integers.
fn compositions(units: usize, parts: usize) -> Vec<Vec<usize>> {
    fn rec(left: usize, parts: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if parts == 1 {
            cur.push(left);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for k in 0..=left {
            cur.push(k);
            rec(left - k, parts - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(units, parts, &mut Vec::with_capacity(parts), &mut out);
    out
}

fn binomial(n: u128, k: u128) -> u128 {
    (0..k).fold(1u128, |acc, i| acc.saturating_mul(n - i) / (i + 1))
}

fn composition_count(units: usize, parts: usize) -> u128 {
    binomial((units + parts - 1) as u128, (parts - 1) as u128)
}

/// Grid of one type's mass over its paths: `(unit mass, unit count)`.
fn type_grid(mass: f64, spacing: f64) -> (f64, usize) {
    if mass <= 0.0 {
        return (0.0, 0);
    }
    let units = ((mass / spacing).round() as usize).max(1);
    (mass / units as f64, units)
}

struct Axis {
    paths: Vec<Path>,
    points: Vec<Vec<f64>>,
    /// Edge flows of each point.
    loads: Vec<Vec<f64>>,
}

impl Axis {
    fn new(paths: Vec<Path>, mass: f64, spacing: f64, edge_count: usize) -> Self {
        let (unit, units) = type_grid(mass, spacing);
        let points: Vec<Vec<f64>> = compositions(units, paths.len())
            .into_iter()
            .map(|c| c.into_iter().map(|k| k as f64 * unit).collect())
            .collect();
        let loads = points
            .iter()
            .map(|pt| {
                let mut x = vec![0.0; edge_count];
                for (p, m) in paths.iter().zip(pt) {
                    for e in p.edges() {
                        x[e.0] += m;
                    }
                }
                x
            })
            .collect();
        Axis {
            paths,
            points,
            loads,
        }
    }

    fn count(units: usize, paths: usize) -> u128 {
        composition_count(units, paths)
    }

    fn flow(&self, kind: AgentType, i: usize) -> TypedFlow {
        TypedFlow::new(
            kind,
            self.paths
                .iter()
                .cloned()
                .zip(self.points[i].iter().copied()),
        )
    }
}

fn regret(costs: &[f64], paths: &[Path], masses: &[f64]) -> f64 {
    let path_costs: Vec<f64> = paths
        .iter()
        .map(|p| p.edges().iter().map(|e| costs[e.0]).sum())
        .collect();
    let min = path_costs.iter().copied().fold(f64::INFINITY, f64::min);
    masses
        .iter()
        .zip(&path_costs)
        .map(|(m, c)| m * (c - min))
        .sum()
}

fn check_size(points: u128) -> Result<(), SolverError> {
    if points > GRID_POINT_LIMIT {
        return Err(SolverError::GridTooLarge {
            points,
            limit: GRID_POINT_LIMIT,
        });
    }
    Ok(())
}

/// Enumerates both types' path-flow simplices on a grid of spacing
/// `grid_step * demand` and returns the point with the smallest Nash gap.
pub fn brute_force_nash(
    problem: &RoutingProblem,
    grid_step: f64,
) -> Result<EquilibriumResult, SolverError> {
    if !(grid_step > 0.0 && grid_step <= 1.0) {
        return Err(SolverError::InvalidConfig(format!(
            "grid_step must lie in (0, 1], got {grid_step}"
        )));
    }
    let spacing = grid_step * problem.demand();
    let edge_count = problem.network().edge_count();
    let pa: Vec<Path> = problem
        .paths_of(AgentType::Altruistic)
        .iter()
        .cloned()
        .collect();
    let ps: Vec<Path> = problem
        .paths_of(AgentType::Selfish)
        .iter()
        .cloned()
        .collect();
    let (_, units_a) = type_grid(problem.r_a(), spacing);
    let (_, units_s) = type_grid(problem.r_s(), spacing);
    check_size(Axis::count(units_a, pa.len()).saturating_mul(Axis::count(units_s, ps.len())))?;

    let axis_a = Axis::new(pa, problem.r_a(), spacing, edge_count);
    let axis_s = Axis::new(ps, problem.r_s(), spacing, edge_count);
    let costs: Vec<&Posynomial> = problem.costs().iter().collect();

    let mut x = vec![0.0; edge_count];
    let mut lat = vec![0.0; edge_count];
    let mut mc = vec![0.0; edge_count];
    let mut best = (f64::INFINITY, 0, 0);
    for (i, load_a) in axis_a.loads.iter().enumerate() {
        for (j, load_s) in axis_s.loads.iter().enumerate() {
            for e in 0..edge_count {
                x[e] = load_a[e] + load_s[e];
                lat[e] = costs[e].value(x[e]);
                mc[e] = costs[e].marginal_value(x[e]);
            }
            let gap = regret(&mc, &axis_a.paths, &axis_a.points[i])
                + regret(&lat, &axis_s.paths, &axis_s.points[j]);
            if gap < best.0 {
                best = (gap, i, j);
            }
        }
    }

    let (gap, i, j) = best;
    let flow = NetworkFlow::assemble(
        edge_count,
        axis_a.flow(AgentType::Altruistic, i),
        axis_s.flow(AgentType::Selfish, j),
    );
    let (lambda_a, lambda_s) = common_costs(problem, &flow);
    let total_latency = problem
        .costs()
        .total_latency(flow.edge_flows())
        .expect("grid flows are non-negative");
    Ok(EquilibriumResult {
        flow,
        lambda_a,
        lambda_s,
        nash_gap: gap.max(0.0),
        total_latency,
        iterations: axis_a.points.len() * axis_s.points.len(),
        converged: true,
    })
}

/// Routes the whole demand as a single population of `kind` over its path
/// set and returns the grid point minimizing that population's potential:
/// the Beckmann potential for selfish agents, total latency for altruists.
pub fn grid_minimize(
    problem: &RoutingProblem,
    kind: AgentType,
    grid_step: f64,
) -> Result<(f64, TypedFlow), SolverError> {
    if !(grid_step > 0.0 && grid_step <= 1.0) {
        return Err(SolverError::InvalidConfig(format!(
            "grid_step must lie in (0, 1], got {grid_step}"
        )));
    }
    let paths: Vec<Path> = problem.paths_of(kind).iter().cloned().collect();
    let spacing = grid_step * problem.demand();
    let (_, units) = type_grid(problem.demand(), spacing);
    check_size(Axis::count(units, paths.len()))?;
    let axis = Axis::new(
        paths,
        problem.demand(),
        spacing,
        problem.network().edge_count(),
    );
    let costs = problem.costs();
    let objective = |x: &[f64]| -> f64 {
        costs
            .iter()
            .zip(x)
            .map(|(l, &xe)| match kind {
                AgentType::Selfish => l.integral_value(xe),
                AgentType::Altruistic => xe * l.value(xe),
            })
            .sum()
    };
    let (best, value) = axis
        .loads
        .iter()
        .enumerate()
        .map(|(i, x)| (i, objective(x)))
        .fold((0, f64::INFINITY), |b, c| if c.1 < b.1 { c } else { b });
    Ok((value, axis.flow(kind, best)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn composition_counts_match_enumeration() {
        for units in 0..6 {
            for parts in 1..4 {
                assert_eq!(
                    compositions(units, parts).len() as u128,
                    composition_count(units, parts)
                );
            }
        }
    }

    #[test]
    fn type_grid_keeps_mass() {
        let (unit, n) = type_grid(0.37, 0.1);
        assert_eq!(n, 4);
        assert!((unit * n as f64 - 0.37).abs() < 1e-15);
        assert_eq!(type_grid(0.0, 0.1), (0.0, 0));
        assert_eq!(type_grid(0.01, 0.1).1, 1);
    }
}
