//! Routing games with selfish and altruistic agents on series-parallel
//! networks.

pub mod analysis;
pub mod equilibrium;
pub mod flows;
pub mod io;
pub mod latency;
pub mod network;
pub mod problem;
