//! Property suites over seeded random symmetric, Braess-resistant instances.

use std::ops::Range;

use rayon::prelude::*;

use crate::equilibrium::{solve_heterogeneous, SolverConfig};

use super::{
    check_ordering_against, generate_random_sp_problem, min_positive_altruist_flow,
    monotonicity_tolerance, sweep_altruism, AnalysisError, SweepReport,
};

pub const SUITE_MAX_EDGES: usize = 8;
pub const SUITE_MAX_DEGREE: usize = 4;
/// Altruistic mass of suite instances (demand is 1).
const SUITE_R_A: f64 = 0.5;
const SWEEP_GRID: usize = 11;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SuiteReport {
    pub instances: usize,
    pub passed: usize,
    /// `(seed, description)` of every failed instance.
    pub failures: Vec<(u64, String)>,
    /// Solves attempted and solves that converged.
    pub solves: usize,
    pub converged: usize,
}

impl SuiteReport {
    pub fn converged_fraction(&self) -> f64 {
        if self.solves == 0 {
            1.0
        } else {
            self.converged as f64 / self.solves as f64
        }
    }

    pub fn ok(&self) -> bool {
        self.failures.is_empty() && self.converged_fraction() >= super::MIN_CONVERGED_FRACTION
    }
}

enum Outcome {
    Pass,
    Fail(String),
}

/// Outcome of one instance with its solve and convergence counts.
type Run = Result<(Outcome, usize, usize), AnalysisError>;

fn collect(
    seeds: Range<u64>,
    run: impl Fn(u64) -> Run + Sync,
) -> Result<SuiteReport, AnalysisError> {
    let results: Vec<(u64, Run)> = seeds
        .into_par_iter()
        .map(|seed| (seed, run(seed)))
        .collect();
    let mut report = SuiteReport::default();
    for (seed, r) in results {
        let (outcome, solves, converged) = r?;
        report.instances += 1;
        report.solves += solves;
        report.converged += converged;
        match outcome {
            Outcome::Pass => report.passed += 1,
            Outcome::Fail(why) => report.failures.push((seed, why)),
        }
    }
    Ok(report)
}

fn suite_sweep(seed: u64, config: &SolverConfig) -> Result<SweepReport, AnalysisError> {
    let problem = generate_random_sp_problem(seed, SUITE_MAX_EDGES, SUITE_MAX_DEGREE, SUITE_R_A);
    sweep_altruism(&problem, SWEEP_GRID, config)
}

fn counts(r: &SweepReport) -> (usize, usize) {
    (r.points.len(), r.points.len() - r.unconverged)
}

/// Total latency never rises with the altruistic fraction.
pub fn verify_theorem1(
    seeds: Range<u64>,
    config: &SolverConfig,
) -> Result<SuiteReport, AnalysisError> {
    collect(seeds, |seed| {
        let r = suite_sweep(seed, config)?;
        let (solves, converged) = counts(&r);
        let outcome = if r.monotone_total_latency {
            Outcome::Pass
        } else {
            Outcome::Fail(format!(
                "total latency rises by {:e} (tolerance {:e})",
                r.max_violation, r.tolerance
            ))
        };
        Ok((outcome, solves, converged))
    })
}

/// Altruists' common cost never falls and the selfish common cost never
/// rises with the altruistic fraction.
pub fn verify_corollary2(
    seeds: Range<u64>,
    config: &SolverConfig,
) -> Result<SuiteReport, AnalysisError> {
    collect(seeds, |seed| {
        let r = suite_sweep(seed, config)?;
        let (solves, converged) = counts(&r);
        let scale = r
            .points
            .iter()
            .flat_map(|p| [p.lambda_a, p.lambda_s])
            .filter(|v| v.is_finite())
            .fold(1.0, f64::max);
        let tol = monotonicity_tolerance(config, scale);
        let bad = r.converged_pairs().find_map(|(lo, hi)| {
            if hi.lambda_a < lo.lambda_a - tol {
                Some(format!(
                    "lambda_a falls from {} to {} between r_a {} and {}",
                    lo.lambda_a, hi.lambda_a, lo.r_a, hi.r_a
                ))
            } else if hi.lambda_s > lo.lambda_s + tol {
                Some(format!(
                    "lambda_s rises from {} to {} between r_a {} and {}",
                    lo.lambda_s, hi.lambda_s, lo.r_a, hi.r_a
                ))
            } else {
                None
            }
        });
        Ok((bad.map_or(Outcome::Pass, Outcome::Fail), solves, converged))
    })
}

/// Path-flow orderings after turning half the smallest positive altruist
/// path flow selfish. Solves run to at least [`super::ORDERING_EPS_NASH`].
pub fn verify_lemma3(
    seeds: Range<u64>,
    config: &SolverConfig,
) -> Result<SuiteReport, AnalysisError> {
    let config = &config.tightened(super::ORDERING_EPS_NASH);
    collect(seeds, |seed| {
        let problem =
            generate_random_sp_problem(seed, SUITE_MAX_EDGES, SUITE_MAX_DEGREE, SUITE_R_A);
        let x = match solve_heterogeneous(&problem, config) {
            Ok(x) => x,
            Err(crate::equilibrium::SolverError::NonConvergence { .. }) => {
                return Ok((
                    Outcome::Fail("reference solve did not converge".into()),
                    1,
                    0,
                ))
            }
            Err(e) => return Err(e.into()),
        };
        let Some(min_flow) = min_positive_altruist_flow(&x.flow) else {
            return Ok((Outcome::Fail("altruists route no flow".into()), 1, 1));
        };
        match check_ordering_against(&problem, &x, min_flow / 2.0, config) {
            Ok(report) if report.holds() => Ok((Outcome::Pass, 2, 2)),
            Ok(report) => {
                let v = report.violations().next().expect("violation");
                Ok((
                    Outcome::Fail(format!(
                        "{} path {} goes from {} to {} (epsilon {:e})",
                        v.kind, v.path, v.flow, v.marginalized_flow, report.epsilon
                    )),
                    2,
                    2,
                ))
            }
            Err(AnalysisError::Solver(crate::equilibrium::SolverError::NonConvergence {
                ..
            })) => Ok((
                Outcome::Fail("marginalized solve did not converge".into()),
                2,
                1,
            )),
            Err(e) => Err(e),
        }
    })
}
