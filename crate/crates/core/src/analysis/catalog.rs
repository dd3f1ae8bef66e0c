//! Named instances: the two inefficiency counterexamples and Pigou baselines.

use crate::equilibrium::SolverConfig;
use crate::latency::{EdgeCosts, Posynomial};
use crate::network::{Network, Path};
use crate::problem::RoutingProblem;

use super::{perversity_index, AnalysisError, PerversityResult};

/// Nash-gap tolerance used for catalog reproductions. Total latency error
/// shrinks roughly like the square root of the gap on these degenerate
/// instances, so the default tolerance is not enough for 1e-6 accuracy.
pub const CATALOG_EPS_NASH: f64 = 1e-12;

fn poly(coeffs: &[f64]) -> Posynomial {
    Posynomial::new(coeffs.to_vec()).expect("catalog coefficients are non-negative")
}

fn parallel_links(count: usize) -> Network {
    let names: Vec<String> = (1..=count).map(|i| format!("e{i}")).collect();
    let edges: Vec<(&str, &str, &str)> = names.iter().map(|n| (n.as_str(), "o", "t")).collect();
    Network::from_edges(&edges, "o", "t").expect("parallel links are series-parallel")
}

/// Three parallel links with `l1 = 1 + d`, `l2 = x^d`, `l3 = 1`, demand 2
/// and one unit of altruists restricted to `e1, e2`. Not symmetric.
///
/// Selfish-only flow: `(0, 1, 1)`, total latency 2. With altruists the
/// flow becomes `(1, 1, 0)` and total latency `2 + d`. That mixed
/// equilibrium is not unique: every `(t, 1, 1 - t)` with `t` in `[0, 1]`
/// is a Nash flow, with total latency `2 + d t`. The solver's sequential
/// start lands on `t = 1`.
pub fn fig1b(d: u32) -> RoutingProblem {
    let d = d.max(1) as usize;
    let network = parallel_links(3);
    let mut l2 = vec![0.0; d + 1];
    l2[d] = 1.0;
    let costs = EdgeCosts::new(vec![poly(&[1.0 + d as f64]), poly(&l2), poly(&[1.0])]);
    let top = network
        .path_set(["e1", "e2"].map(|e| Path::new(vec![network.edge_by_name(e).unwrap()])))
        .unwrap();
    RoutingProblem::builder(network, costs)
        .altruistic_paths(top)
        .demand(2.0)
        .altruistic_mass(1.0)
        .build()
        .expect("valid instance")
}

/// Five edges: `e1, e2` from `o` to `v`, `e3, e4` from `v` to `t`, and `e5`
/// from `o` to `t`. The route `(e2,e3)` is withheld, so the instance is
/// symmetric but not Braess-resistant. Demand 2, one unit of altruists.
///
/// Latencies `l1 = x, l2 = 1, l3 = 1, l4 = x, l5 = 3`:
///
/// | flow | `(e1,e3)` | `(e1,e4)` | `(e2,e4)` | `e5` | L |
/// |---|---|---|---|---|---|
/// | all selfish | 1 | 0 | 1 | 0 | 4 |
/// | mixed, altruists | 0 | 0 | 0 | 1 | 5 |
/// | mixed, selfish | 0 | 1 | 0 | 0 | |
///
/// At the all-selfish flow the three two-edge paths cost 2 and `e5` costs 3.
/// In the mixed flow selfish agents pay 2 on `(e1,e4)` and altruists pay
/// marginal cost 3 on `e5`, `(e1,e3)` and `(e2,e4)`.
pub fn fig1a() -> RoutingProblem {
    let network = Network::from_edges(
        &[
            ("e1", "o", "v"),
            ("e2", "o", "v"),
            ("e3", "v", "t"),
            ("e4", "v", "t"),
            ("e5", "o", "t"),
        ],
        "o",
        "t",
    )
    .expect("series-parallel");
    let costs = EdgeCosts::new(vec![
        poly(&[0.0, 1.0]),
        poly(&[1.0]),
        poly(&[1.0]),
        poly(&[0.0, 1.0]),
        poly(&[3.0]),
    ]);
    let route = |edges: &[&str]| {
        network
            .route_from_edges(
                &edges
                    .iter()
                    .map(|e| network.edge_by_name(e).unwrap())
                    .collect::<Vec<_>>(),
            )
            .unwrap()
    };
    let paths = network
        .path_set([
            route(&["e1", "e3"]),
            route(&["e1", "e4"]),
            route(&["e2", "e4"]),
            route(&["e5"]),
        ])
        .unwrap();
    RoutingProblem::builder(network, costs)
        .paths(paths)
        .demand(2.0)
        .altruistic_mass(1.0)
        .build()
        .expect("valid instance")
}

/// Two parallel links `l1 = a`, `l2 = b x`, unit demand, half altruistic.
pub fn pigou(a: f64, b: f64) -> RoutingProblem {
    let costs = EdgeCosts::new(vec![
        Posynomial::constant(a.max(0.0)).expect("non-negative"),
        Posynomial::monomial(b.max(0.0), 1).expect("non-negative"),
    ]);
    RoutingProblem::builder(parallel_links(2), costs)
        .demand(1.0)
        .altruistic_mass(0.5)
        .build()
        .expect("valid instance")
}

/// Perversity index of a catalog instance, solved to [`CATALOG_EPS_NASH`].
pub fn catalog_comparison(
    problem: &RoutingProblem,
    config: &SolverConfig,
) -> Result<PerversityResult, AnalysisError> {
    perversity_index(problem, &config.tightened(CATALOG_EPS_NASH))
}

#[derive(Debug, Clone)]
pub struct CatalogEntry {
    pub name: String,
    pub problem: RoutingProblem,
}

/// Every named instance with default parameters.
pub fn catalog() -> Vec<CatalogEntry> {
    let mut out = vec![CatalogEntry {
        name: "fig1a".into(),
        problem: fig1a(),
    }];
    out.extend((1..=4).map(|d| CatalogEntry {
        name: format!("fig1b-d{d}"),
        problem: fig1b(d),
    }));
    out.push(CatalogEntry {
        name: "pigou".into(),
        problem: pigou(1.0, 1.0),
    });
    out
}
