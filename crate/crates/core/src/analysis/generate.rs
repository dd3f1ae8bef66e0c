//! Seeded random series-parallel routing problems.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::latency::{EdgeCosts, Posynomial};
use crate::network::{EdgeId, NetworkSpec, SpTree};
use crate::problem::RoutingProblem;

/// Smallest linear coefficient drawn, keeping every latency strictly increasing.
pub const MIN_LINEAR_COEFF: f64 = 0.05;
const MAX_COEFF: f64 = 2.0;

fn random_tree(rng: &mut ChaCha8Rng, first: usize, n: usize) -> SpTree {
    if n == 1 {
        return SpTree::Leaf(EdgeId(first));
    }
    let k = rng.gen_range(1..n);
    let left = random_tree(rng, first, k);
    let right = random_tree(rng, first + k, n - k);
    if rng.gen_bool(0.5) {
        SpTree::series(left, right)
    } else {
        SpTree::parallel(left, right)
    }
}

fn random_latency(rng: &mut ChaCha8Rng, max_degree: usize) -> Posynomial {
    let degree = rng.gen_range(1..=max_degree.max(1));
    let coeffs = (0..=degree)
        .map(|i| {
            if i == 1 {
                rng.gen_range(MIN_LINEAR_COEFF..=MAX_COEFF)
            } else {
                rng.gen_range(0.0..=MAX_COEFF)
            }
        })
        .collect();
    Posynomial::new(coeffs).expect("coefficients are non-negative")
}

/// Builds a random symmetric, Braess-resistant problem with unit demand.
///
/// The edge count is uniform in `1..=max_edges`, the tree comes from
/// recursive random series/parallel splits, and each edge gets a
/// posynomial of degree `1..=max_degree` with coefficients in `[0, 2]` and
/// linear coefficient at least [`MIN_LINEAR_COEFF`]. `r_a` is clamped to
/// `[0, 1]`.
///
/// # Panics
/// If `max_edges` is zero.
pub fn generate_random_sp_problem(
    seed: u64,
    max_edges: usize,
    max_degree: usize,
    r_a: f64,
) -> RoutingProblem {
    assert!(max_edges >= 1, "max_edges must be at least 1");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(1..=max_edges);
    let tree = random_tree(&mut rng, 0, n);
    let (vertex_count, ends) = tree.realize();
    let name = |v: usize| match v {
        0 => "o".to_string(),
        1 => "t".to_string(),
        v => format!("v{v}"),
    };
    let spec = NetworkSpec::new(
        (0..vertex_count).map(name).collect(),
        ends.iter()
            .enumerate()
            .map(|(i, (t, h))| (format!("e{}", i + 1), name(t.0), name(h.0)))
            .collect(),
        "o",
        "t",
    );
    let network = spec.build().expect("realized trees are series-parallel");
    let costs = EdgeCosts::new(
        (0..n)
            .map(|_| random_latency(&mut rng, max_degree))
            .collect(),
    );
    RoutingProblem::builder(network, costs)
        .demand(1.0)
        .altruistic_mass(r_a.clamp(0.0, 1.0))
        .build()
        .expect("generated problems are valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_edge() {
        let p = generate_random_sp_problem(3, 1, 2, 0.5);
        assert_eq!(p.network().edge_count(), 1);
        assert!(p.is_symmetric() && p.is_braess_resistant());
    }

    #[test]
    fn deterministic_in_seed() {
        assert_eq!(
            generate_random_sp_problem(42, 8, 4, 0.3),
            generate_random_sp_problem(42, 8, 4, 0.3)
        );
        assert_ne!(
            generate_random_sp_problem(42, 8, 4, 0.3),
            generate_random_sp_problem(43, 8, 4, 0.3)
        );
    }

    #[test]
    fn predicates_hold_across_seeds() {
        for seed in 0..1000 {
            let p = generate_random_sp_problem(seed, 8, 4, 0.5);
            assert!(p.is_symmetric() && p.is_braess_resistant(), "seed {seed}");
            assert!(p.network().edge_count() <= 8);
            assert!(p
                .costs()
                .iter()
                .all(|l| l.is_strictly_increasing() && l.degree() <= 4));
        }
    }
}
