use std::fs;
use std::ops::Range;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use sp_routing::analysis::{
    self, catalog_comparison, fig1a, fig1b, format_significant, perversity_index, sweep_altruism,
    AnalysisError, PerversityResult, SuiteReport,
};
use sp_routing::equilibrium::{solve_heterogeneous, EquilibriumResult, SolverConfig, SolverError};
use sp_routing::flows::flow_records;
use sp_routing::io::{parse_problem, NetworkFile};
use sp_routing::problem::RoutingProblem;

const HUMAN_DIGITS: usize = 4;

#[derive(Parser)]
#[command(
    name = "sp-routing",
    version,
    about = "Selfish and altruistic routing on series-parallel networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Recognize the topology and report the path-set predicates.
    Check { file: PathBuf },
    /// Solve for a heterogeneous Nash flow.
    Solve {
        file: PathBuf,
        /// Altruistic mass, overriding the file.
        #[arg(long = "r-a")]
        r_a: Option<f64>,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Solve over an even grid of altruistic masses and write CSV.
    Sweep {
        file: PathBuf,
        #[arg(long, default_value_t = 11)]
        grid_size: usize,
        /// CSV destination; standard output if omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Compare total latency with the all-selfish game.
    Perversity {
        file: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Build a named instance and compare it with its all-selfish version.
    Catalog {
        name: CatalogName,
        /// Degree of the polynomial edge (fig1b).
        #[arg(long, default_value_t = 2)]
        d: u32,
        /// Constant latency of the first link (pigou).
        #[arg(long, default_value_t = 1.0)]
        a: f64,
        /// Slope of the second link (pigou).
        #[arg(long, default_value_t = 1.0)]
        b: f64,
        /// Also write the instance as a network file.
        #[arg(long)]
        export: Option<PathBuf>,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Run a property suite over seeded random instances.
    Verify {
        suite: Suite,
        /// Seed count `N` (seeds 0..N) or a range `A..B`.
        #[arg(long)]
        seeds: Option<String>,
        #[command(flatten)]
        overrides: Overrides,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum CatalogName {
    Fig1a,
    Fig1b,
    Pigou,
}

#[derive(Clone, Copy, ValueEnum)]
enum Suite {
    Theorem1,
    Corollary2,
    Lemma3,
}

#[derive(Args)]
struct Overrides {
    #[arg(long)]
    eps_nash: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    damping: Option<f64>,
    #[arg(long)]
    grid_step: Option<f64>,
}

impl Overrides {
    fn config(&self) -> Result<SolverConfig, CliError> {
        let mut c = SolverConfig::default();
        if let Some(v) = self.eps_nash {
            c.eps_nash = v;
        }
        if let Some(v) = self.max_iters {
            c.max_outer_iters = v;
        }
        if let Some(v) = self.damping {
            c.damping = v;
        }
        if let Some(v) = self.grid_step {
            c.grid_step = v;
        }
        c.validate().map_err(|e| CliError::Input(e.to_string()))?;
        Ok(c)
    }
}

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    NonConvergence(String),
    #[error("{0}")]
    PropertyFailure(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::NonConvergence(_) => 1,
            CliError::Input(_) => 2,
            CliError::PropertyFailure(_) => 3,
        }
    }
}

impl From<SolverError> for CliError {
    fn from(e: SolverError) -> Self {
        match e {
            SolverError::NonConvergence { .. } | SolverError::SubproblemNonConvergence { .. } => {
                CliError::NonConvergence(e.to_string())
            }
            other => CliError::Input(other.to_string()),
        }
    }
}

impl From<AnalysisError> for CliError {
    fn from(e: AnalysisError) -> Self {
        match e {
            AnalysisError::Solver(s) => s.into(),
            other => CliError::Input(other.to_string()),
        }
    }
}

fn sig(x: f64) -> String {
    format_significant(x, HUMAN_DIGITS)
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "NO"
    }
}

fn load(file: &Path) -> Result<RoutingProblem, CliError> {
    let text = fs::read_to_string(file)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", file.display())))?;
    parse_problem(&text).map_err(|e| CliError::Input(format!("{}: {e}", file.display())))
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text)
        .map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display())))
}

fn check_line(problem: &RoutingProblem) -> String {
    format!(
        "series-parallel: yes; routes: {}; paths: {}; braess-resistant: {}; symmetric: {}",
        problem.network().routes().len(),
        problem.paths().len(),
        yes_no(problem.is_braess_resistant()),
        yes_no(problem.is_symmetric()),
    )
}

fn print_equilibrium(problem: &RoutingProblem, r: &EquilibriumResult) {
    println!("{:<10} {:<24} mass", "type", "path");
    for rec in flow_records(problem, &r.flow) {
        println!(
            "{:<10} {:<24} {}",
            rec.kind.to_string(),
            format!("({})", rec.path.join(",")),
            sig(rec.mass)
        );
    }
    println!("lambda_a: {}", sig(r.lambda_a));
    println!("lambda_s: {}", sig(r.lambda_s));
    println!("total latency: {}", sig(r.total_latency));
    println!("nash gap: {:e}", r.nash_gap);
}

fn print_perversity(r: &PerversityResult) {
    println!(
        "L_selfish={}, L_het={}, index={}",
        sig(r.l_all_selfish),
        sig(r.l_heterogeneous),
        sig(r.index)
    );
}

fn parse_seeds(text: Option<&str>, default: u64) -> Result<Range<u64>, CliError> {
    let bad = || {
        CliError::Input(format!(
            "--seeds expects `N` or `A..B`, got `{}`",
            text.unwrap_or_default()
        ))
    };
    match text {
        None => Ok(0..default),
        Some(t) => match t.split_once("..") {
            Some((a, b)) => {
                let (a, b) = (
                    a.trim().parse().map_err(|_| bad())?,
                    b.trim().parse().map_err(|_| bad())?,
                );
                if a < b {
                    Ok(a..b)
                } else {
                    Err(bad())
                }
            }
            None => Ok(0..t.trim().parse().map_err(|_| bad())?),
        },
    }
}

fn report_suite(name: &str, r: &SuiteReport) -> Result<(), CliError> {
    println!(
        "{name}: {} instances, {} passed, {} failed; converged {}/{} solves ({}%)",
        r.instances,
        r.passed,
        r.failures.len(),
        r.converged,
        r.solves,
        sig(100.0 * r.converged_fraction()),
    );
    for (seed, why) in &r.failures {
        println!("  seed {seed}: {why}");
    }
    if r.ok() {
        Ok(())
    } else if r.failures.is_empty() {
        Err(CliError::PropertyFailure(format!(
            "{name}: convergence rate below {}%",
            sig(100.0 * analysis::MIN_CONVERGED_FRACTION)
        )))
    } else {
        Err(CliError::PropertyFailure(format!(
            "{name}: {} instance(s) failed",
            r.failures.len()
        )))
    }
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Check { file } => {
            let problem = load(&file)?;
            println!("{}", check_line(&problem));
        }
        Command::Solve {
            file,
            r_a,
            overrides,
        } => {
            let config = overrides.config()?;
            let mut problem = load(&file)?;
            if let Some(r_a) = r_a {
                problem = problem
                    .with_altruistic_mass(r_a)
                    .map_err(|e| CliError::Input(format!("--r-a: {e}")))?;
            }
            let r = solve_heterogeneous(&problem, &config)?;
            print_equilibrium(&problem, &r);
        }
        Command::Sweep {
            file,
            grid_size,
            out,
            overrides,
        } => {
            let config = overrides.config()?;
            let problem = load(&file)?;
            let report = sweep_altruism(&problem, grid_size, &config)?;
            let verdict = if !report.has_verdict() {
                "monotone total latency: undetermined (fewer than two converged points)".to_string()
            } else if report.monotone_total_latency {
                "monotone total latency: yes".to_string()
            } else {
                format!(
                    "monotone total latency: NO (largest rise {}, tolerance {})",
                    sig(report.max_violation),
                    sig(report.tolerance)
                )
            };
            match &out {
                Some(path) => {
                    write_file(path, &report.to_csv())?;
                    println!("{verdict}");
                }
                None => {
                    print!("{}", report.to_csv());
                    eprintln!("{verdict}");
                }
            }
            if report.unconverged > 0 {
                return Err(CliError::NonConvergence(format!(
                    "{} of {} sweep points did not converge",
                    report.unconverged,
                    report.points.len()
                )));
            }
        }
        Command::Perversity { file, overrides } => {
            let config = overrides.config()?;
            let problem = load(&file)?;
            print_perversity(&perversity_index(&problem, &config)?);
        }
        Command::Catalog {
            name,
            d,
            a,
            b,
            export,
            overrides,
        } => {
            let config = overrides.config()?;
            let problem = match name {
                CatalogName::Fig1a => fig1a(),
                CatalogName::Fig1b => {
                    if d == 0 {
                        return Err(CliError::Input("--d must be at least 1".into()));
                    }
                    fig1b(d)
                }
                CatalogName::Pigou => {
                    if !(a >= 0.0 && b >= 0.0 && a.is_finite() && b.is_finite()) {
                        return Err(CliError::Input(
                            "--a and --b must be finite and non-negative".into(),
                        ));
                    }
                    analysis::pigou(a, b)
                }
            };
            if let Some(path) = &export {
                write_file(path, &NetworkFile::from_problem(&problem).to_json())?;
            }
            println!("{}", check_line(&problem));
            print_perversity(&catalog_comparison(&problem, &config)?);
        }
        Command::Verify {
            suite,
            seeds,
            overrides,
        } => {
            let config = overrides.config()?;
            let (name, default) = match suite {
                Suite::Theorem1 => ("theorem1", 500),
                Suite::Corollary2 => ("corollary2", 500),
                Suite::Lemma3 => ("lemma3", 100),
            };
            let seeds = parse_seeds(seeds.as_deref(), default)?;
            let report = match suite {
                Suite::Theorem1 => analysis::verify_theorem1(seeds, &config)?,
                Suite::Corollary2 => analysis::verify_corollary2(seeds, &config)?,
                Suite::Lemma3 => analysis::verify_lemma3(seeds, &config)?,
            };
            report_suite(name, &report)?;
        }
    }
    Ok(())
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Check { .. } => "check",
        Command::Solve { .. } => "solve",
        Command::Sweep { .. } => "sweep",
        Command::Perversity { .. } => "perversity",
        Command::Catalog { .. } => "catalog",
        Command::Verify { .. } => "verify",
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let name = command_name(&cli.command);
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {name}: {e}");
            ExitCode::from(e.code())
        }
    }
}
