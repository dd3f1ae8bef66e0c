//! Perversity index, altruism sweeps, monotonicity checks and property
//! suites over random instances.

mod catalog;
mod decompose;
mod generate;
mod suite;

use thiserror::Error;

use crate::equilibrium::{
    solve_heterogeneous, solve_heterogeneous_from, EquilibriumResult, SolverConfig, SolverError,
};
use crate::flows::{NetworkFlow, TypedFlow};

use crate::problem::{AgentType, ProblemError, RoutingProblem};
use decompose::aligned_decompositions;

pub use catalog::{
    catalog, catalog_comparison, fig1a, fig1b, pigou, CatalogEntry, CATALOG_EPS_NASH,
};
pub use generate::{generate_random_sp_problem, MIN_LINEAR_COEFF};
pub use suite::{
    verify_corollary2, verify_lemma3, verify_theorem1, SuiteReport, SUITE_MAX_DEGREE,
    SUITE_MAX_EDGES,
};

/// Altruist path flows at or below this count as unused.
pub const POSITIVE_FLOW_THRESHOLD: f64 = 1e-7;
/// Tolerance of the path-flow orderings in [`check_lemma_path_ordering`].
pub const PATH_ORDERING_TOL: f64 = 1e-5;
/// Nash-gap tolerance of the solves behind path-flow comparisons.
pub const ORDERING_EPS_NASH: f64 = 1e-10;
/// Fraction of converged sweep points needed for a monotonicity verdict.
pub const MIN_CONVERGED_FRACTION: f64 = 0.9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("epsilon {epsilon} must lie in {range}")]
    EpsilonOutOfRange { epsilon: f64, range: String },
    #[error("hypothesis not met: {0}")]
    PredicateViolation(String),
    #[error("edge `{edge}` has no strictly increasing term")]
    DegenerateInstance { edge: String },
    #[error("grid size must be at least 2, got {0}")]
    InvalidGridSize(usize),
    #[error("demand must be positive")]
    ZeroDemand,
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Problem(#[from] ProblemError),
}

/// The same game with `epsilon` altruists turned selfish.
pub fn marginalize(
    problem: &RoutingProblem,
    epsilon: f64,
) -> Result<RoutingProblem, AnalysisError> {
    if !(epsilon > 0.0 && epsilon <= problem.r_a()) {
        return Err(AnalysisError::EpsilonOutOfRange {
            epsilon,
            range: format!("(0, {}]", problem.r_a()),
        });
    }
    Ok(problem.with_altruistic_mass((problem.r_a() - epsilon).max(0.0))?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerversityResult {
    pub l_heterogeneous: f64,
    pub l_all_selfish: f64,
    /// `l_heterogeneous / l_all_selfish`; above 1 means altruism hurt.
    pub index: f64,
}

pub fn perversity_index(
    problem: &RoutingProblem,
    config: &SolverConfig,
) -> Result<PerversityResult, AnalysisError> {
    if problem.demand() <= 0.0 {
        return Err(AnalysisError::ZeroDemand);
    }
    let het = solve_heterogeneous(problem, config)?;
    if problem.r_a() == 0.0 {
        let l = het.total_latency;
        return Ok(PerversityResult {
            l_heterogeneous: l,
            l_all_selfish: l,
            index: 1.0,
        });
    }
    let selfish = solve_heterogeneous(&problem.with_altruistic_mass(0.0)?, config)?;
    let (lh, ls) = (het.total_latency, selfish.total_latency);
    let index = if lh == 0.0 && ls == 0.0 { 1.0 } else { lh / ls };
    Ok(PerversityResult {
        l_heterogeneous: lh,
        l_all_selfish: ls,
        index,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub r_a: f64,
    pub total_latency: f64,
    pub lambda_a: f64,
    pub lambda_s: f64,
    pub nash_gap: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub points: Vec<SweepPoint>,
    /// Total latency is non-increasing over converged points within `tolerance`.
    pub monotone_total_latency: bool,
    /// Largest rise of total latency between consecutive converged points.
    pub max_violation: f64,
    pub tolerance: f64,
    pub unconverged: usize,
}

impl SweepReport {
    pub fn grid(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.r_a).collect()
    }

    /// Whether enough points converged for the monotonicity flag to count.
    pub fn has_verdict(&self) -> bool {
        let converged = self.points.len() - self.unconverged;
        converged as f64 >= MIN_CONVERGED_FRACTION * self.points.len() as f64
    }

    /// Consecutive converged pairs `(earlier, later)` in grid order.
    pub fn converged_pairs(&self) -> impl Iterator<Item = (&SweepPoint, &SweepPoint)> {
        let conv: Vec<&SweepPoint> = self.points.iter().filter(|p| p.converged).collect();
        (1..conv.len()).map(move |i| (conv[i - 1], conv[i]))
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("r_a,total_latency,lambda_a,lambda_s,nash_gap,converged\n");
        for p in &self.points {
            let nums = [p.r_a, p.total_latency, p.lambda_a, p.lambda_s, p.nash_gap]
                .map(|v| format_significant(v, 9));
            out.push_str(&format!("{},{}\n", nums.join(","), p.converged));
        }
        out
    }
}

/// Tolerance applied to Lambda and latency comparisons across a sweep.
pub fn monotonicity_tolerance(config: &SolverConfig, scale: f64) -> f64 {
    1e-6f64.max(10.0 * config.eps_nash) * scale.abs()
}

fn point(r_a: f64, res: &EquilibriumResult) -> SweepPoint {
    SweepPoint {
        r_a,
        total_latency: res.total_latency,
        lambda_a: res.lambda_a,
        lambda_s: res.lambda_s,
        nash_gap: res.nash_gap,
        converged: res.converged,
    }
}

/// Solves the game at `grid_size` evenly spaced altruistic masses from 0 to
/// the demand. Points that fail to converge are kept, flagged and left out
/// of the monotonicity verdict.
pub fn sweep_altruism(
    problem: &RoutingProblem,
    grid_size: usize,
    config: &SolverConfig,
) -> Result<SweepReport, AnalysisError> {
    if grid_size < 2 {
        return Err(AnalysisError::InvalidGridSize(grid_size));
    }
    config.validate()?;
    let d = problem.demand();
    let mut points = Vec::with_capacity(grid_size);
    for i in 0..grid_size {
        let r_a = if i + 1 == grid_size {
            d
        } else {
            d * i as f64 / (grid_size - 1) as f64
        };
        let p = problem.with_altruistic_mass(r_a)?;
        match solve_heterogeneous(&p, config) {
            Ok(res) => points.push(point(r_a, &res)),
            Err(SolverError::NonConvergence { best, .. }) => points.push(point(r_a, &best)),
            Err(e) => return Err(e.into()),
        }
    }
    let tolerance = monotonicity_tolerance(config, points[0].total_latency);
    let unconverged = points.iter().filter(|p| !p.converged).count();
    let mut report = SweepReport {
        points,
        monotone_total_latency: true,
        max_violation: 0.0,
        tolerance,
        unconverged,
    };
    let max_violation = report
        .converged_pairs()
        .map(|(a, b)| b.total_latency - a.total_latency)
        .fold(0.0, f64::max);
    report.max_violation = max_violation;
    report.monotone_total_latency = max_violation <= tolerance;
    Ok(report)
}

fn require_topology(problem: &RoutingProblem) -> Result<(), AnalysisError> {
    if !problem.is_symmetric() {
        return Err(AnalysisError::PredicateViolation(
            "problem is not symmetric".into(),
        ));
    }
    if !problem.is_braess_resistant() {
        return Err(AnalysisError::PredicateViolation(
            "problem is not Braess-resistant".into(),
        ));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct CostComparison {
    pub r_a_1: f64,
    pub r_a_2: f64,
    pub lambda_a_1: f64,
    pub lambda_a_2: f64,
    pub lambda_s_1: f64,
    pub lambda_s_2: f64,
    pub tolerance: f64,
}

impl CostComparison {
    /// More altruists never lower the altruists' cost or raise the selfish cost.
    pub fn holds(&self) -> bool {
        self.lambda_a_1 >= self.lambda_a_2 - self.tolerance
            && self.lambda_s_1 <= self.lambda_s_2 + self.tolerance
    }
}

/// Compares common costs at altruistic masses `r_a_1 >= r_a_2`.
pub fn check_corollary_monotone_costs(
    problem: &RoutingProblem,
    r_a_1: f64,
    r_a_2: f64,
    config: &SolverConfig,
) -> Result<CostComparison, AnalysisError> {
    require_topology(problem)?;
    if r_a_1 < r_a_2 {
        return Err(AnalysisError::PredicateViolation(format!(
            "expected r_a_1 >= r_a_2, got {r_a_1} < {r_a_2}"
        )));
    }
    let one = solve_heterogeneous(&problem.with_altruistic_mass(r_a_1)?, config)?;
    let two = solve_heterogeneous(&problem.with_altruistic_mass(r_a_2)?, config)?;
    let scale = [one.lambda_a, one.lambda_s, two.lambda_a, two.lambda_s, 1.0]
        .into_iter()
        .filter(|v| v.is_finite())
        .fold(0.0, f64::max);
    Ok(CostComparison {
        r_a_1,
        r_a_2,
        lambda_a_1: one.lambda_a,
        lambda_a_2: two.lambda_a,
        lambda_s_1: one.lambda_s,
        lambda_s_2: two.lambda_s,
        tolerance: monotonicity_tolerance(config, scale),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathOrdering {
    pub path: String,
    /// Type whose use of the path triggered the comparison.
    pub kind: AgentType,
    pub flow: f64,
    pub marginalized_flow: f64,
}

impl PathOrdering {
    /// Amount by which the expected ordering fails (non-positive when it holds).
    pub fn excess(&self) -> f64 {
        match self.kind {
            AgentType::Altruistic => self.marginalized_flow - self.flow,
            AgentType::Selfish => self.flow - self.marginalized_flow,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathOrderingReport {
    pub epsilon: f64,
    /// Comparisons between the aligned decompositions.
    pub comparisons: Vec<PathOrdering>,
    /// Comparisons between the decompositions the solver happened to return.
    pub solver_comparisons: Vec<PathOrdering>,
    pub tolerance: f64,
}

impl PathOrderingReport {
    pub fn max_excess(&self) -> f64 {
        self.comparisons
            .iter()
            .map(PathOrdering::excess)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn violations(&self) -> impl Iterator<Item = &PathOrdering> {
        self.comparisons
            .iter()
            .filter(|c| c.excess() > self.tolerance)
    }

    pub fn holds(&self) -> bool {
        self.violations().next().is_none()
    }
}

/// Smallest altruist path flow above [`POSITIVE_FLOW_THRESHOLD`].
pub fn min_positive_altruist_flow(flow: &NetworkFlow) -> Option<f64> {
    flow.altruistic()
        .iter()
        .map(|(_, m)| m)
        .filter(|&m| m > POSITIVE_FLOW_THRESHOLD)
        .min_by(f64::total_cmp)
}

/// Starting point for the marginalized game: `epsilon` altruist mass moved to
/// the selfish population on the paths it used, proportionally.
fn marginalized_start(reference: &NetworkFlow, epsilon: f64) -> (TypedFlow, TypedFlow) {
    let a = reference.altruistic();
    let share = epsilon / a.total();
    let altruistic = TypedFlow::new(
        AgentType::Altruistic,
        a.iter().map(|(p, m)| (p.clone(), m * (1.0 - share))),
    );
    let moved = a.iter().map(|(p, m)| (p.clone(), m * share));
    let selfish = TypedFlow::new(
        AgentType::Selfish,
        reference
            .selfish()
            .iter()
            .map(|(p, m)| (p.clone(), m))
            .chain(moved),
    );
    (altruistic, selfish)
}

/// Solves the game at `r_a` and after marginalizing `epsilon` altruists, and
/// compares path flows: paths used by altruists must not gain flow and paths
/// used by selfish agents must not lose flow.
///
/// Path flows of a Nash flow are not unique, and for some networks a badly
/// chosen decomposition of the first flow rules out every decomposition of
/// the second. Both flows are therefore re-decomposed, keeping edge flows and
/// min-cost supports, to satisfy the orderings as closely as possible before
/// comparing. The solver's own decompositions are kept in the report.
///
/// Both games are solved to at least [`ORDERING_EPS_NASH`].
pub fn check_lemma_path_ordering(
    problem: &RoutingProblem,
    r_a: f64,
    epsilon: f64,
    config: &SolverConfig,
) -> Result<PathOrderingReport, AnalysisError> {
    require_topology(problem)?;
    if let Some(e) = problem.network().edges().iter().find(|e| {
        !problem
            .costs()
            .get(e.id)
            .expect("edge")
            .is_strictly_increasing()
    }) {
        return Err(AnalysisError::DegenerateInstance {
            edge: e.name.clone(),
        });
    }
    let config = config.tightened(ORDERING_EPS_NASH);
    let game = problem.with_altruistic_mass(r_a)?;
    let x = solve_heterogeneous(&game, &config)?;
    check_ordering_against(&game, &x, epsilon, &config)
}

/// Path-ordering check against an already solved reference game.
pub(crate) fn check_ordering_against(
    game: &RoutingProblem,
    x: &EquilibriumResult,
    epsilon: f64,
    config: &SolverConfig,
) -> Result<PathOrderingReport, AnalysisError> {
    let min_flow =
        min_positive_altruist_flow(&x.flow).ok_or_else(|| AnalysisError::EpsilonOutOfRange {
            epsilon,
            range: "(0, 0): altruists route no flow".into(),
        })?;
    if !(epsilon > 0.0 && epsilon < min_flow) {
        return Err(AnalysisError::EpsilonOutOfRange {
            epsilon,
            range: format!("(0, {min_flow})"),
        });
    }
    let marginal = marginalize(game, epsilon)?;
    let (a0, s0) = marginalized_start(&x.flow, epsilon);
    let start = crate::flows::aggregate(&marginal, a0, s0).map_err(SolverError::from)?;
    let xt = solve_heterogeneous_from(&marginal, config, &start)?;

    let raw = orderings(game, &x.flow, &xt.flow);
    let max_excess = |c: &[PathOrdering]| {
        c.iter()
            .map(PathOrdering::excess)
            .fold(f64::NEG_INFINITY, f64::max)
    };
    let comparisons = match aligned_decompositions(game, x, epsilon, &marginal, &xt) {
        Some((before, after)) => {
            let aligned = orderings(game, &before, &after);
            if max_excess(&aligned) < max_excess(&raw) {
                aligned
            } else {
                raw.clone()
            }
        }
        None => raw.clone(),
    };
    Ok(PathOrderingReport {
        epsilon,
        comparisons,
        solver_comparisons: raw,
        tolerance: PATH_ORDERING_TOL,
    })
}

fn orderings(
    game: &RoutingProblem,
    before: &NetworkFlow,
    after: &NetworkFlow,
) -> Vec<PathOrdering> {
    let mut out = Vec::new();
    for p in game.paths() {
        for kind in AgentType::BOTH {
            if before.typed(kind).get(p) > POSITIVE_FLOW_THRESHOLD {
                out.push(PathOrdering {
                    path: game.network().path_label(p),
                    kind,
                    flow: before.path_flow(p),
                    marginalized_flow: after.path_flow(p),
                });
            }
        }
    }
    out
}

/// Formats `x` with `digits` significant digits, in plain notation where
/// that stays short and scientific notation otherwise.
pub fn format_significant(x: f64, digits: usize) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    if x == 0.0 {
        return "0".into();
    }
    let digits = digits.max(1);
    let sci = format!("{:.*e}", digits - 1, x);
    let exp: i32 = sci[sci.find('e').expect("exponent") + 1..]
        .parse()
        .expect("integer exponent");
    if !(-5..=15).contains(&exp) {
        let (mantissa, _) = sci.split_once('e').expect("exponent");
        return format!("{}e{exp}", trim_zeros(mantissa));
    }
    let rounded: f64 = sci.parse().expect("valid float");
    let decimals = (digits as i32 - 1 - exp).max(0) as usize;
    trim_zeros(&format!("{rounded:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn marginalize_moves_mass() {
        let p = pigou(1.0, 1.0).with_masses(2.0, 1.0).unwrap();
        let m = marginalize(&p, 0.25).unwrap();
        assert_eq!((m.r_a(), m.r_s()), (0.75, 1.25));
        assert_eq!(marginalize(&p, 1.0).unwrap().r_a(), 0.0);
        assert!(matches!(
            marginalize(&p, 1.5),
            Err(AnalysisError::EpsilonOutOfRange { .. })
        ));
        assert!(matches!(
            marginalize(&p, 0.0),
            Err(AnalysisError::EpsilonOutOfRange { .. })
        ));
        let twice = marginalize(&marginalize(&p, 0.25).unwrap(), 0.5).unwrap();
        assert_eq!(twice, marginalize(&p, 0.75).unwrap());
    }

    #[test]
    fn significant_digits() {
        assert_eq!(format_significant(2.0, 9), "2");
        assert_eq!(format_significant(0.1 + 0.2, 9), "0.3");
        assert_eq!(format_significant(1.0 / 3.0, 4), "0.3333");
        assert_eq!(format_significant(123456.789, 4), "123500");
        assert_eq!(format_significant(-2.5e-9, 9), "-2.5e-9");
        assert_eq!(format_significant(0.0, 9), "0");
    }

    #[test]
    fn perversity_of_pigou() {
        let p = pigou(1.0, 1.0).with_altruistic_mass(1.0).unwrap();
        let r = perversity_index(&p, &SolverConfig::default()).unwrap();
        assert!((r.l_heterogeneous - 0.75).abs() < 1e-6);
        assert!((r.l_all_selfish - 1.0).abs() < 1e-6);
        assert!((r.index - 0.75).abs() < 1e-6);
        let none = perversity_index(
            &p.with_altruistic_mass(0.0).unwrap(),
            &SolverConfig::default(),
        )
        .unwrap();
        assert_eq!(none.index, 1.0);
    }

    #[test]
    fn sweep_of_fig1b_is_not_monotone() {
        let r = sweep_altruism(&fig1b(2), 3, &SolverConfig::default()).unwrap();
        assert_eq!(r.grid(), vec![0.0, 1.0, 2.0]);
        assert!((r.points[0].total_latency - 2.0).abs() < 1e-6);
        assert!((r.points[1].total_latency - 4.0).abs() < 1e-6);
        assert!(!r.monotone_total_latency);
        assert!(r.max_violation >= 2.0 - 1e-6);
    }

    #[test]
    fn constant_latencies_give_flat_sweep() {
        // l2 = 0 x is identically zero
        let p = pigou(1.0, 0.0);
        let r = sweep_altruism(&p, 5, &SolverConfig::default()).unwrap();
        assert!(r.points.iter().all(|pt| pt.total_latency == 0.0));
        assert!(r.monotone_total_latency);
    }

    #[test]
    fn sweep_csv_header_and_rows() {
        let csv = sweep_altruism(&pigou(1.0, 1.0), 2, &SolverConfig::default())
            .unwrap()
            .to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(
            lines[0],
            "r_a,total_latency,lambda_a,lambda_s,nash_gap,converged"
        );
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with("0,1,"));
    }

    #[test]
    fn monotone_costs_on_pigou() {
        let c =
            check_corollary_monotone_costs(&pigou(1.0, 1.0), 0.8, 0.4, &SolverConfig::default())
                .unwrap();
        assert!(c.holds());
        let same =
            check_corollary_monotone_costs(&pigou(1.0, 1.0), 0.5, 0.5, &SolverConfig::default())
                .unwrap();
        assert!((same.lambda_a_1 - same.lambda_a_2).abs() <= same.tolerance);
        assert!((same.lambda_s_1 - same.lambda_s_2).abs() <= same.tolerance);
        assert!(matches!(
            check_corollary_monotone_costs(&fig1a(), 1.0, 0.5, &SolverConfig::default()),
            Err(AnalysisError::PredicateViolation(_))
        ));
    }

    #[test]
    fn path_ordering_on_pigou_and_series() {
        let strict = pigou(1.0, 1.0);
        // l1 = 1 is constant, so the instance is degenerate
        assert!(matches!(
            check_lemma_path_ordering(&strict, 0.6, 0.1, &SolverConfig::default()),
            Err(AnalysisError::DegenerateInstance { .. })
        ));
        let series = generate_random_sp_problem(0, 1, 2, 0.5);
        let r = check_lemma_path_ordering(&series, 0.5, 0.1, &SolverConfig::default()).unwrap();
        assert!(r.holds());
        assert!(r
            .comparisons
            .iter()
            .all(|c| (c.flow - 1.0).abs() < 1e-12 && (c.marginalized_flow - 1.0).abs() < 1e-12));
    }
}
