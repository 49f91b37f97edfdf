//! Centrality measures for networks in which moving along an edge consumes one unit of a
//! resource ("state of charge") that is restored to full at a designated set of refill nodes.
//!
//! The crate provides:
//!
//! - [`graph`]: the base network, edge-list loaders, generators and spectral utilities;
//! - [`state`]: the directed state graph on `(node, charge)` pairs and feasible-walk queries;
//! - [`katz`], [`betweenness`], [`rwbc`]: the charge-aware centralities and their classical
//!   counterparts;
//! - [`simulate`]: spreading and particle-hopping simulators that produce realized scores;
//! - [`stats`]: Kendall rank correlation;
//! - [`testkit`]: brute-force oracles for small instances.

pub mod betweenness;
pub mod error;
pub mod graph;
pub mod katz;
pub mod rng;
pub mod rwbc;
pub mod score;
pub mod simulate;
pub mod state;
pub mod stats;
pub mod testkit;

pub use error::{Error, Result};
pub use graph::{Adjacency, Graph, NodeId, RefillSet, SocInstance};
pub use score::ScoreVector;
