//! The routing game: network, latencies, per-type path sets, and demand.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::latency::{EdgeCosts, LatencyError};
use crate::network::{is_braess_resistant, Network, NetworkError, PathSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AgentType {
    /// Routes on marginal path cost.
    Altruistic,
    /// Routes on experienced path latency.
    Selfish,
}

impl AgentType {
    pub const BOTH: [AgentType; 2] = [AgentType::Altruistic, AgentType::Selfish];
}

impl fmt::Display for AgentType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AgentType::Altruistic => "altruistic",
            AgentType::Selfish => "selfish",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProblemError {
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Latency(#[from] LatencyError),
    #[error("{kind} path {path} is not in the available path set")]
    PathNotAvailable { kind: AgentType, path: String },
    #[error("demand must be finite and non-negative, got {0}")]
    InvalidDemand(f64),
    #[error("altruistic mass {r_a} must lie in [0, {demand}]")]
    InvalidAltruisticMass { r_a: f64, demand: f64 },
}

/// A routing game with an altruistic and a selfish population.
#[derive(Debug, Clone, PartialEq)]
pub struct RoutingProblem {
    network: Network,
    costs: EdgeCosts,
    paths: PathSet,
    paths_altruistic: PathSet,
    paths_selfish: PathSet,
    demand: f64,
    r_a: f64,
}

/// Builder for [`RoutingProblem`]. Path sets default to all routes, with the
/// per-type sets defaulting to the available set; demand defaults to one.
#[derive(Debug, Clone)]
pub struct ProblemBuilder {
    network: Network,
    costs: EdgeCosts,
    paths: Option<PathSet>,
    paths_altruistic: Option<PathSet>,
    paths_selfish: Option<PathSet>,
    demand: f64,
    r_a: f64,
}

impl ProblemBuilder {
    pub fn paths(mut self, paths: PathSet) -> Self {
        self.paths = Some(paths);
        self
    }

    pub fn altruistic_paths(mut self, paths: PathSet) -> Self {
        self.paths_altruistic = Some(paths);
        self
    }

    pub fn selfish_paths(mut self, paths: PathSet) -> Self {
        self.paths_selfish = Some(paths);
        self
    }

    pub fn demand(mut self, demand: f64) -> Self {
        self.demand = demand;
        self
    }

    pub fn altruistic_mass(mut self, r_a: f64) -> Self {
        self.r_a = r_a;
        self
    }

    pub fn build(self) -> Result<RoutingProblem, ProblemError> {
        let network = self.network;
        if self.costs.len() != network.edge_count() {
            return Err(LatencyError::WrongEdgeCount {
                expected: network.edge_count(),
                actual: self.costs.len(),
            }
            .into());
        }
        let paths = match self.paths {
            Some(p) => {
                // re-validate: the set may come from another network
                is_braess_resistant(&network, &p)?;
                p
            }
            None => network.all_routes(),
        };
        let subset = |kind: AgentType, set: Option<PathSet>| -> Result<PathSet, ProblemError> {
            let set = set.unwrap_or_else(|| paths.clone());
            if let Some(p) = set.iter().find(|p| !paths.contains(p)) {
                return Err(ProblemError::PathNotAvailable {
                    kind,
                    path: network.path_label(p),
                });
            }
            Ok(set)
        };
        let paths_altruistic = subset(AgentType::Altruistic, self.paths_altruistic)?;
        let paths_selfish = subset(AgentType::Selfish, self.paths_selfish)?;
        let problem = RoutingProblem {
            network,
            costs: self.costs,
            paths,
            paths_altruistic,
            paths_selfish,
            demand: 0.0,
            r_a: 0.0,
        };
        problem.with_masses(self.demand, self.r_a)
    }
}

impl RoutingProblem {
    pub fn builder(network: Network, costs: EdgeCosts) -> ProblemBuilder {
        ProblemBuilder {
            network,
            costs,
            paths: None,
            paths_altruistic: None,
            paths_selfish: None,
            demand: 1.0,
            r_a: 0.0,
        }
    }

    pub fn network(&self) -> &Network {
        &self.network
    }

    pub fn costs(&self) -> &EdgeCosts {
        &self.costs
    }

    /// The available path set P.
    pub fn paths(&self) -> &PathSet {
        &self.paths
    }

    pub fn paths_of(&self, kind: AgentType) -> &PathSet {
        match kind {
            AgentType::Altruistic => &self.paths_altruistic,
            AgentType::Selfish => &self.paths_selfish,
        }
    }

    pub fn demand(&self) -> f64 {
        self.demand
    }

    pub fn r_a(&self) -> f64 {
        self.r_a
    }

    pub fn r_s(&self) -> f64 {
        self.demand - self.r_a
    }

    pub fn mass_of(&self, kind: AgentType) -> f64 {
        match kind {
            AgentType::Altruistic => self.r_a(),
            AgentType::Selfish => self.r_s(),
        }
    }

    /// Same game with a different altruistic mass and unchanged demand.
    pub fn with_altruistic_mass(&self, r_a: f64) -> Result<Self, ProblemError> {
        self.with_masses(self.demand, r_a)
    }

    pub fn with_masses(&self, demand: f64, r_a: f64) -> Result<Self, ProblemError> {
        if !demand.is_finite() || demand < 0.0 {
            return Err(ProblemError::InvalidDemand(demand));
        }
        if !(0.0..=demand).contains(&r_a) {
            return Err(ProblemError::InvalidAltruisticMass { r_a, demand });
        }
        Ok(RoutingProblem {
            demand,
            r_a,
            ..self.clone()
        })
    }

    /// Both types may use every available path.
    pub fn is_symmetric(&self) -> bool {
        self.paths_altruistic == self.paths && self.paths_selfish == self.paths
    }

    /// The available path set contains every route.
    pub fn is_braess_resistant(&self) -> bool {
        self.paths.len() == self.network.routes().len()
    }
}
