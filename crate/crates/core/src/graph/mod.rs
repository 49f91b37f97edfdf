//! Base network representation shared by every other module.
//!
//! A [`Graph`] is stored twice: as the canonical edge list (each undirected edge once) and as a
//! CSR arc view ([`Adjacency`]) in which undirected edges appear in both directions. All kernels
//! operate on the arc view.

mod adjacency;
pub mod generators;
mod io;
mod spectral;

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use adjacency::Adjacency;
pub use io::{load_edge_list, read_edge_list, write_snap_tsv, EdgeListFormat, LoadReport};
pub use spectral::{spectral_radius, SpectralEstimate};

/// Dense node index in `[0, n)`.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub usize);

impl NodeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0
    }
}

impl From<usize> for NodeId {
    fn from(v: usize) -> Self {
        NodeId(v)
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Debug)]
pub struct Graph {
    directed: bool,
    edges: Vec<(NodeId, NodeId)>,
    labels: Vec<String>,
    label_index: HashMap<String, NodeId>,
    arcs: Adjacency,
    self_loops: usize,
}

impl Graph {
    /// Builds a graph on nodes `0..n` labelled by their index. Duplicate edges are collapsed.
    pub fn from_edges(n: usize, edges: &[(usize, usize)], directed: bool) -> Result<Self> {
        let labels = (0..n).map(|i| i.to_string()).collect();
        Self::with_labels(labels, edges, directed).map(|(g, _)| g)
    }

    /// Builds a graph from explicit labels. Returns the number of collapsed duplicate edges.
    pub fn with_labels(
        labels: Vec<String>,
        edges: &[(usize, usize)],
        directed: bool,
    ) -> Result<(Self, usize)> {
        let n = labels.len();
        let mut label_index = HashMap::with_capacity(n);
        for (i, l) in labels.iter().enumerate() {
            if label_index.insert(l.clone(), NodeId(i)).is_some() {
                return Err(Error::InvalidParameter(format!("duplicate node label {l:?}")));
            }
        }

        let mut seen = std::collections::HashSet::with_capacity(edges.len());
        let mut canonical = Vec::with_capacity(edges.len());
        let mut duplicates = 0;
        for &(u, v) in edges {
            for id in [u, v] {
                if id >= n {
                    return Err(Error::NodeOutOfRange { id, n });
                }
            }
            let key = if directed || u <= v { (u, v) } else { (v, u) };
            if seen.insert(key) {
                canonical.push((NodeId(key.0), NodeId(key.1)));
            } else {
                duplicates += 1;
            }
        }

        let self_loops = canonical.iter().filter(|(u, v)| u == v).count();
        let arc_iter = canonical.iter().flat_map(|&(u, v)| {
            let back = (!directed && u != v).then_some((v.0, u.0));
            std::iter::once((u.0, v.0)).chain(back)
        });
        let arcs = Adjacency::from_arcs(n, arc_iter);

        Ok((
            Graph {
                directed,
                edges: canonical,
                labels,
                label_index,
                arcs,
                self_loops,
            },
            duplicates,
        ))
    }

    pub fn node_count(&self) -> usize {
        self.labels.len()
    }

    /// Number of stored edges (undirected edges counted once).
    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn is_directed(&self) -> bool {
        self.directed
    }

    pub fn self_loop_count(&self) -> usize {
        self.self_loops
    }

    pub fn edges(&self) -> &[(NodeId, NodeId)] {
        &self.edges
    }

    /// The arc view: undirected edges expanded to both directions, neighbours ascending.
    pub fn arcs(&self) -> &Adjacency {
        &self.arcs
    }

    pub fn label(&self, v: NodeId) -> &str {
        &self.labels[v.0]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn node_by_label(&self, label: &str) -> Option<NodeId> {
        self.label_index.get(label).copied()
    }

    pub fn check_node(&self, v: NodeId) -> Result<()> {
        if v.0 < self.node_count() {
            Ok(())
        } else {
            Err(Error::NodeOutOfRange {
                id: v.0,
                n: self.node_count(),
            })
        }
    }

    /// Out-neighbours in ascending id order. For undirected graphs, all incident neighbours.
    pub fn out_neighbors(&self, v: NodeId) -> Result<impl Iterator<Item = NodeId> + '_> {
        self.check_node(v)?;
        Ok(self.arcs.neighbors(v.0).iter().map(|&w| NodeId(w)))
    }

    pub fn out_degree(&self, v: NodeId) -> usize {
        self.arcs.degree(v.0)
    }

    /// Largest eigenvalue of the adjacency operator; see [`spectral_radius`].
    pub fn spectral_radius(&self, tol: f64, max_iter: usize) -> Result<SpectralEstimate> {
        if self.node_count() == 0 {
            return Err(Error::EmptyGraph);
        }
        Ok(spectral_radius(&self.arcs, tol, max_iter))
    }

    /// Unweighted BFS distances from `s` along arcs; `None` when unreachable.
    pub fn bfs_distances(&self, s: NodeId) -> Vec<Option<usize>> {
        let n = self.node_count();
        let mut dist = vec![None; n];
        let mut queue = std::collections::VecDeque::new();
        dist[s.0] = Some(0);
        queue.push_back(s.0);
        while let Some(v) = queue.pop_front() {
            let d = dist[v].unwrap();
            for &w in self.arcs.neighbors(v) {
                if dist[w].is_none() {
                    dist[w] = Some(d + 1);
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    /// Longest finite shortest-path distance over all ordered pairs.
    pub fn longest_shortest_path(&self) -> usize {
        (0..self.node_count())
            .map(|s| {
                self.bfs_distances(NodeId(s))
                    .into_iter()
                    .flatten()
                    .max()
                    .unwrap_or(0)
            })
            .max()
            .unwrap_or(0)
    }
}

/// The set of refill nodes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RefillSet {
    mask: Vec<bool>,
    members: Vec<NodeId>,
}

impl RefillSet {
    pub fn new(n: usize, members: impl IntoIterator<Item = NodeId>) -> Result<Self> {
        let mut mask = vec![false; n];
        for v in members {
            if v.0 >= n {
                return Err(Error::NodeOutOfRange { id: v.0, n });
            }
            mask[v.0] = true;
        }
        let members = (0..n).filter(|&i| mask[i]).map(NodeId).collect();
        Ok(RefillSet { mask, members })
    }

    pub fn empty(n: usize) -> Self {
        RefillSet {
            mask: vec![false; n],
            members: Vec::new(),
        }
    }

    pub fn full(n: usize) -> Self {
        RefillSet {
            mask: vec![true; n],
            members: (0..n).map(NodeId).collect(),
        }
    }

    /// Uniform sample without replacement of `round(ratio * n)` nodes.
    pub fn sample<R: rand::Rng + ?Sized>(n: usize, ratio: f64, rng: &mut R) -> Result<Self> {
        if !(ratio > 0.0 && ratio <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "refill ratio must lie in (0, 1], got {ratio}"
            )));
        }
        let k = ((ratio * n as f64).round() as usize).min(n);
        let picked = rand::seq::index::sample(rng, n, k);
        RefillSet::new(n, picked.into_iter().map(NodeId))
    }

    #[inline]
    pub fn contains(&self, v: usize) -> bool {
        self.mask[v]
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn universe(&self) -> usize {
        self.mask.len()
    }

    /// Members in ascending order.
    pub fn members(&self) -> &[NodeId] {
        &self.members
    }
}

/// A graph together with its refill set and full state-of-charge budget.
#[derive(Clone, Debug)]
pub struct SocInstance<'g> {
    graph: &'g Graph,
    omega: RefillSet,
    kappa: usize,
}

impl<'g> SocInstance<'g> {
    pub fn new(graph: &'g Graph, omega: RefillSet, kappa: usize) -> Result<Self> {
        if kappa == 0 {
            return Err(Error::InvalidParameter("kappa must be at least 1".into()));
        }
        if omega.universe() != graph.node_count() {
            return Err(Error::DimensionMismatch {
                expected: graph.node_count(),
                got: omega.universe(),
            });
        }
        Ok(SocInstance { graph, omega, kappa })
    }

    pub fn graph(&self) -> &'g Graph {
        self.graph
    }

    pub fn omega(&self) -> &RefillSet {
        &self.omega
    }

    pub fn kappa(&self) -> usize {
        self.kappa
    }

    pub fn node_count(&self) -> usize {
        self.graph.node_count()
    }

    /// Charge left after moving into `to` while holding `soc`: refill nodes restore the full
    /// budget, every other node costs one unit, and an empty commodity cannot leave.
    #[inline]
    pub fn next_soc(&self, soc: usize, to: usize) -> Option<usize> {
        if self.omega.contains(to) {
            Some(self.kappa)
        } else if soc >= 1 {
            Some(soc - 1)
        } else {
            None
        }
    }

    /// Same instance with a different refill set.
    pub fn with_omega(&self, omega: RefillSet) -> Result<Self> {
        SocInstance::new(self.graph, omega, self.kappa)
    }

    /// Short human-readable description of the refill set, used in output metadata.
    pub fn omega_descriptor(&self) -> String {
        format!("{}/{} refill nodes", self.omega.len(), self.node_count())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path3() -> Graph {
        Graph::from_edges(3, &[(0, 1), (1, 2)], false).unwrap()
    }

    #[test]
    fn out_neighbors_undirected_path() {
        let g = path3();
        let got: Vec<_> = g.out_neighbors(NodeId(1)).unwrap().collect();
        assert_eq!(got, vec![NodeId(0), NodeId(2)]);
    }

    #[test]
    fn out_neighbors_isolated_and_directed() {
        let g = Graph::from_edges(3, &[(0, 1)], true).unwrap();
        assert_eq!(g.out_neighbors(NodeId(1)).unwrap().count(), 0);
        assert_eq!(g.out_neighbors(NodeId(2)).unwrap().count(), 0);
        assert!(matches!(
            g.out_neighbors(NodeId(3)).err(),
            Some(Error::NodeOutOfRange { id: 3, n: 3 })
        ));
    }

    #[test]
    fn duplicates_collapse_and_self_loops_count_once() {
        let (g, dups) = Graph::with_labels(
            vec!["a".into(), "b".into()],
            &[(0, 1), (1, 0), (0, 1), (1, 1)],
            false,
        )
        .unwrap();
        assert_eq!(dups, 2);
        assert_eq!(g.edge_count(), 2);
        assert_eq!(g.self_loop_count(), 1);
        assert_eq!(g.out_degree(NodeId(1)), 2);
        assert_eq!(g.arcs().arc_count(), 3);
    }

    #[test]
    fn degree_sum_matches_edge_count() {
        let g = path3();
        let total: usize = (0..3).map(|v| g.out_degree(NodeId(v))).sum();
        assert_eq!(total, 2 * g.edge_count());
        let d = Graph::from_edges(3, &[(0, 1), (1, 2), (2, 0)], true).unwrap();
        let total: usize = (0..3).map(|v| d.out_degree(NodeId(v))).sum();
        assert_eq!(total, d.edge_count());
    }

    #[test]
    fn refill_sample_size_and_range() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let omega = RefillSet::sample(100, 0.3, &mut rng).unwrap();
        assert_eq!(omega.len(), 30);
        assert!(omega.members().windows(2).all(|w| w[0] < w[1]));
        assert!(RefillSet::sample(10, 0.0, &mut rng).is_err());
        assert!(RefillSet::sample(10, 1.5, &mut rng).is_err());
    }

    #[test]
    fn instance_rejects_zero_kappa() {
        let g = path3();
        assert!(SocInstance::new(&g, RefillSet::empty(3), 0).is_err());
        assert!(SocInstance::new(&g, RefillSet::empty(4), 1).is_err());
    }

    #[test]
    fn next_soc_rules() {
        let g = path3();
        let inst = SocInstance::new(&g, RefillSet::new(3, [NodeId(1)]).unwrap(), 2).unwrap();
        assert_eq!(inst.next_soc(0, 1), Some(2));
        assert_eq!(inst.next_soc(2, 0), Some(1));
        assert_eq!(inst.next_soc(0, 2), None);
    }

    #[test]
    fn longest_shortest_path_on_path() {
        assert_eq!(path3().longest_shortest_path(), 2);
    }
}
