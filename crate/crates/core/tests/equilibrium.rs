use sp_routing::analysis::{fig1b, generate_random_sp_problem};
use sp_routing::equilibrium::*;
use sp_routing::flows::{aggregate, check_feasible, TypedFlow};
use sp_routing::latency::{EdgeCosts, Posynomial};
use sp_routing::network::{EdgeId, Network, Path};
use sp_routing::problem::{AgentType, RoutingProblem};

fn path(ids: &[usize]) -> Path {
    Path::new(ids.iter().map(|&i| EdgeId(i - 1)).collect())
}

fn poly(c: &[f64]) -> Posynomial {
    Posynomial::new(c.to_vec()).unwrap()
}

fn two_links(l1: &[f64], l2: &[f64], r_a: f64) -> RoutingProblem {
    let n = Network::from_edges(&[("e1", "o", "t"), ("e2", "o", "t")], "o", "t").unwrap();
    RoutingProblem::builder(n, EdgeCosts::new(vec![poly(l1), poly(l2)]))
        .demand(1.0)
        .altruistic_mass(r_a)
        .build()
        .unwrap()
}

fn series(r_a: f64) -> RoutingProblem {
    let n = Network::from_edges(&[("a", "o", "m"), ("b", "m", "t")], "o", "t").unwrap();
    RoutingProblem::builder(
        n,
        EdgeCosts::new(vec![poly(&[1.0, 1.0]), poly(&[0.0, 0.0, 3.0])]),
    )
    .demand(1.5)
    .altruistic_mass(r_a)
    .build()
    .unwrap()
}

fn typed(kind: AgentType, masses: &[(&[usize], f64)]) -> TypedFlow {
    TypedFlow::new(kind, masses.iter().map(|(p, m)| (path(p), *m)))
}

fn tight() -> SolverConfig {
    SolverConfig::default().tightened(1e-12)
}

#[test]
fn gap_of_fig1b_flows() {
    let g = fig1b(1);
    let x = aggregate(
        &g,
        typed(AgentType::Altruistic, &[(&[1], 1.0)]),
        typed(AgentType::Selfish, &[(&[2], 1.0)]),
    )
    .unwrap();
    assert_eq!(nash_gap(&g, &x), 0.0);

    let selfish = g.with_altruistic_mass(0.0).unwrap();
    let x = aggregate(
        &selfish,
        TypedFlow::zero(AgentType::Altruistic),
        typed(AgentType::Selfish, &[(&[3], 2.0)]),
    )
    .unwrap();
    assert_eq!(nash_gap(&selfish, &x), 2.0);
}

#[test]
fn gap_is_zero_on_a_single_path() {
    let g = series(1.5);
    let x = aggregate(
        &g,
        typed(AgentType::Altruistic, &[(&[1, 2], 1.5)]),
        TypedFlow::zero(AgentType::Selfish),
    )
    .unwrap();
    assert_eq!(nash_gap(&g, &x), 0.0);
}

#[test]
fn selfish_subproblem_examples() {
    let c = tight();
    let g = fig1b(1).with_altruistic_mass(0.0).unwrap();
    let s = solve_selfish_subproblem(&g, &TypedFlow::zero(AgentType::Altruistic), &c).unwrap();
    assert!(s.get(&path(&[1])).abs() < 1e-9);
    assert!((s.get(&path(&[2])) - 1.0).abs() < 1e-9);
    assert!((s.get(&path(&[3])) - 1.0).abs() < 1e-9);

    let g = two_links(&[0.0, 1.0], &[0.0, 1.0], 0.0);
    let s = solve_selfish_subproblem(&g, &TypedFlow::zero(AgentType::Altruistic), &c).unwrap();
    assert!((s.get(&path(&[1])) - 0.5).abs() < 1e-9);
    let x = aggregate(&g, TypedFlow::zero(AgentType::Altruistic), s).unwrap();
    assert!((common_costs(&g, &x).1 - 0.5).abs() < 1e-9);

    let g = series(0.5);
    let s =
        solve_selfish_subproblem(&g, &typed(AgentType::Altruistic, &[(&[1, 2], 0.5)]), &c).unwrap();
    assert_eq!(s.get(&path(&[1, 2])), 1.0);
}

#[test]
fn altruistic_subproblem_examples() {
    let c = tight();
    for d in 1..=4 {
        let g = fig1b(d);
        let a = solve_altruistic_subproblem(&g, &typed(AgentType::Selfish, &[(&[2], 1.0)]), &c)
            .unwrap();
        assert!((a.get(&path(&[1])) - 1.0).abs() < 1e-9);
        let x = aggregate(&g, a, typed(AgentType::Selfish, &[(&[2], 1.0)])).unwrap();
        assert!((common_costs(&g, &x).0 - (1.0 + d as f64)).abs() < 1e-9);
    }

    // marginal cost of x is 2x, equal to 1 at x = 1/2
    let g = two_links(&[1.0], &[0.0, 1.0], 1.0);
    let a = solve_altruistic_subproblem(&g, &TypedFlow::zero(AgentType::Selfish), &c).unwrap();
    assert!((a.get(&path(&[1])) - 0.5).abs() < 1e-9);
    assert!((a.get(&path(&[2])) - 0.5).abs() < 1e-9);

    let g = series(1.0);
    let a =
        solve_altruistic_subproblem(&g, &typed(AgentType::Selfish, &[(&[1, 2], 0.5)]), &c).unwrap();
    assert_eq!(a.get(&path(&[1, 2])), 1.0);
}

#[test]
fn subproblems_reject_bad_fixed_flows() {
    let g = fig1b(1);
    let c = SolverConfig::default();
    let wrong_kind = typed(AgentType::Selfish, &[(&[2], 1.0)]);
    assert!(matches!(
        solve_selfish_subproblem(&g, &wrong_kind, &c),
        Err(SolverError::Flow(_))
    ));
    let wrong_mass = typed(AgentType::Altruistic, &[(&[1], 0.4)]);
    assert!(matches!(
        solve_selfish_subproblem(&g, &wrong_mass, &c),
        Err(SolverError::Flow(_))
    ));
    let off_set = typed(AgentType::Altruistic, &[(&[3], 1.0)]);
    assert!(matches!(
        solve_selfish_subproblem(&g, &off_set, &c),
        Err(SolverError::Flow(_))
    ));
}

#[test]
fn heterogeneous_fig1b() {
    let c = tight();
    let r = solve_heterogeneous(&fig1b(2), &c).unwrap();
    assert!(r.converged);
    let edges = r.flow.edge_flows();
    for (got, want) in edges.iter().zip([1.0, 1.0, 0.0]) {
        assert!((got - want).abs() < 1e-9, "{edges:?}");
    }
    assert!((r.lambda_a - 3.0).abs() < 1e-9);
    assert!((r.lambda_s - 1.0).abs() < 1e-9);
    assert!((r.total_latency - 4.0).abs() < 1e-9);

    let r = solve_heterogeneous(&fig1b(2).with_altruistic_mass(0.0).unwrap(), &c).unwrap();
    for (got, want) in r.flow.edge_flows().iter().zip([0.0, 1.0, 1.0]) {
        assert!((got - want).abs() < 1e-9);
    }
    assert!((r.total_latency - 2.0).abs() < 1e-9);
}

#[test]
fn converged_results_are_certified() {
    let c = SolverConfig::default();
    for seed in 0..40 {
        let g = generate_random_sp_problem(seed, 8, 4, 0.5);
        let r = solve_heterogeneous(&g, &c).unwrap();
        assert!(r.converged);
        assert!(check_feasible(&g, r.flow.altruistic(), r.flow.selfish()).is_empty());
        assert!(r.nash_gap <= c.eps_nash);
        assert!((nash_gap(&g, &r.flow) - r.nash_gap).abs() <= 1e-12);
        let l = g.costs().total_latency(r.flow.edge_flows()).unwrap();
        assert!((l - r.total_latency).abs() <= 1e-12 * l.max(1.0));
    }
}

#[test]
fn non_convergence_returns_best_iterate() {
    let g = sp_routing::analysis::fig1a();
    let c = SolverConfig {
        max_outer_iters: 1,
        eps_nash: 1e-15,
        ..SolverConfig::default()
    };
    match solve_heterogeneous(&g, &c) {
        Err(SolverError::NonConvergence { gap, best }) => {
            assert!(!best.converged);
            assert_eq!(gap, best.nash_gap);
            assert!(check_feasible(&g, best.flow.altruistic(), best.flow.selfish()).is_empty());
        }
        other => panic!("expected non-convergence, got {other:?}"),
    }
}

#[test]
fn invalid_configs_are_rejected() {
    let g = fig1b(1);
    for c in [
        SolverConfig {
            damping: 0.0,
            ..SolverConfig::default()
        },
        SolverConfig {
            damping: 1.5,
            ..SolverConfig::default()
        },
        SolverConfig {
            eps_nash: -1.0,
            ..SolverConfig::default()
        },
        SolverConfig {
            max_outer_iters: 0,
            ..SolverConfig::default()
        },
    ] {
        assert!(matches!(
            solve_heterogeneous(&g, &c),
            Err(SolverError::InvalidConfig(_))
        ));
    }
}

#[test]
fn all_altruistic_flow_is_socially_optimal() {
    let c = tight();
    for seed in 0..30 {
        let g = generate_random_sp_problem(seed, 4, 3, 1.0);
        if g.paths().len() > 3 {
            continue;
        }
        let r = solve_heterogeneous(&g, &c).unwrap();
        let (best, _) = grid_minimize(&g, AgentType::Altruistic, 0.01).unwrap();
        assert!(
            r.total_latency <= best + 1e-9,
            "seed {seed}: {} > {best}",
            r.total_latency
        );
    }
}

#[test]
fn oracle_examples() {
    // every Nash flow of fig1b has the form (t, 1, 1 - t)
    let r = brute_force_nash(&fig1b(1), 0.05).unwrap();
    let x = r.flow.edge_flows();
    assert!(r.nash_gap < 1e-12);
    assert!((x[1] - 1.0).abs() <= 0.05 * 2.0);
    assert!((x[0] + x[2] - 1.0).abs() <= 0.05 * 2.0);

    let r = brute_force_nash(&series(0.7), 0.1).unwrap();
    assert_eq!(r.nash_gap, 0.0);
    assert!((r.flow.edge_flows()[0] - 1.5).abs() < 1e-12);

    let r = brute_force_nash(&two_links(&[1.0], &[0.0, 1.0], 0.0), 0.01).unwrap();
    assert!((r.flow.edge_flows()[1] - 1.0).abs() < 1e-12);
    assert!((r.lambda_s - 1.0).abs() < 1e-12);
}

#[test]
fn oracle_rejects_huge_grids_and_bad_steps() {
    let g = generate_random_sp_problem(3, 8, 2, 0.5);
    assert!(g.paths().len() >= 4);
    assert!(matches!(
        brute_force_nash(&g, 1e-4),
        Err(SolverError::GridTooLarge { .. })
    ));
    assert!(matches!(
        brute_force_nash(&g, 0.0),
        Err(SolverError::InvalidConfig(_))
    ));
    assert!(matches!(
        grid_minimize(&g, AgentType::Selfish, 2.0),
        Err(SolverError::InvalidConfig(_))
    ));
}

#[test]
fn grid_minimize_on_two_links() {
    // Beckmann potential of (1, x) is minimized with all mass on e2
    let g = two_links(&[1.0], &[0.0, 1.0], 0.0);
    let (v, f) = grid_minimize(&g, AgentType::Selfish, 0.01).unwrap();
    assert!((v - 0.5).abs() < 1e-12);
    assert!((f.get(&path(&[2])) - 1.0).abs() < 1e-12);
    // total latency is minimized at the even split
    let (v, f) = grid_minimize(&g, AgentType::Altruistic, 0.01).unwrap();
    assert!((v - 0.75).abs() < 1e-12);
    assert!((f.get(&path(&[1])) - 0.5).abs() < 1e-12);
}
