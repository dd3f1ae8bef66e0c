//! Best response of one population with the other population's edge flows
//! held fixed.
//!
//! The best response minimizes the convex potential
//! `sum_e int_0^{y_e} c_e(f_e + t) dt`, where `f` is the fixed flow and `c_e`
//! is the type's edge cost (latency, or marginal cost for altruists). Its
//! first-order conditions are exactly the equilibrium conditions for the
//! type. The solver is a pairwise conditional-gradient method: each step
//! linearizes, picks the cheapest path (lowest index on ties) and the most
//! expensive used path, and moves mass between them with an exact line
//! search on the convex one-dimensional restriction.

use crate::latency::EdgeCosts;
use crate::network::EdgeId;

use super::dense::{edge_cost, TypeState};

pub(crate) const LINE_SEARCH_ITERS: usize = 80;

#[derive(Debug, Clone, Copy)]
pub(crate) struct InnerOutcome {
    /// Mass-weighted regret of the type at the returned flow.
    pub gap: f64,
    pub converged: bool,
}

/// Improves `state` in place towards the best response to `fixed`.
pub(crate) fn best_response(
    costs: &EdgeCosts,
    state: &mut TypeState,
    fixed: &[f64],
    tol: f64,
    max_iters: usize,
) -> InnerOutcome {
    let kind = state.kind;
    let n = state.paths.len();
    let mut load = vec![0.0; fixed.len()];
    let mut path_costs = vec![0.0; n];
    let mut gap = 0.0;

    for it in 0..=max_iters {
        load.copy_from_slice(fixed);
        state.add_edge_flows(&mut load);
        for (c, p) in path_costs.iter_mut().zip(&state.paths) {
            *c = p
                .edges()
                .iter()
                .map(|e| edge_cost(kind, costs.get(*e).expect("edge"), load[e.0]))
                .sum();
        }

        let mut cheap = 0;
        for i in 1..n {
            if path_costs[i] < path_costs[cheap] {
                cheap = i;
            }
        }
        let mut dear = None;
        for i in 0..n {
            if state.masses[i] > 0.0 && dear.is_none_or(|d: usize| path_costs[i] > path_costs[d]) {
                dear = Some(i);
            }
        }
        let weighted: f64 = state
            .masses
            .iter()
            .zip(&path_costs)
            .map(|(m, c)| m * c)
            .sum();
        gap = (weighted - state.total * path_costs[cheap]).max(0.0);
        let Some(dear) = dear else {
            return InnerOutcome {
                gap: 0.0,
                converged: true,
            };
        };
        if gap <= tol * weighted.abs() || dear == cheap || path_costs[dear] <= path_costs[cheap] {
            return InnerOutcome {
                gap,
                converged: true,
            };
        }
        if it == max_iters {
            break;
        }

        let from = state.paths[dear].edges();
        let to = state.paths[cheap].edges();
        let only_to: Vec<EdgeId> = to.iter().filter(|e| !from.contains(e)).copied().collect();
        let only_from: Vec<EdgeId> = from.iter().filter(|e| !to.contains(e)).copied().collect();
        let slope = |delta: f64| -> f64 {
            let gain: f64 = only_to
                .iter()
                .map(|e| edge_cost(kind, costs.get(*e).expect("edge"), load[e.0] + delta))
                .sum();
            let loss: f64 = only_from
                .iter()
                .map(|e| {
                    edge_cost(
                        kind,
                        costs.get(*e).expect("edge"),
                        (load[e.0] - delta).max(0.0),
                    )
                })
                .sum();
            gain - loss
        };

        let available = state.masses[dear];
        let step = if slope(available) <= 0.0 {
            available
        } else {
            bisect_root(slope, 0.0, available)
        };
        state.masses[dear] = if step == available {
            0.0
        } else {
            (available - step).max(0.0)
        };
        state.masses[cheap] += step;
    }
    InnerOutcome {
        gap,
        converged: false,
    }
}

/// Root of a non-decreasing function with `f(lo) < 0 < f(hi)`.
pub(crate) fn bisect_root(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..LINE_SEARCH_ITERS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisection_finds_root() {
        let r = bisect_root(|x| x * x - 0.5, 0.0, 1.0);
        assert!((r - 0.5f64.sqrt()).abs() < 1e-15);
    }
}
