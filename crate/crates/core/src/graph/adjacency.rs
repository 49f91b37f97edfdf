/// Compressed sparse row adjacency over dense indices `0..n`.
///
/// Neighbour lists are sorted ascending. Parallel arcs are kept as given.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Adjacency {
    offsets: Vec<usize>,
    targets: Vec<usize>,
}

impl Adjacency {
    pub fn from_arcs(n: usize, arcs: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut list: Vec<(usize, usize)> = arcs.into_iter().collect();
        list.sort_unstable();
        let mut offsets = vec![0; n + 1];
        for &(u, v) in &list {
            assert!(u < n && v < n, "arc ({u}, {v}) out of range for {n} nodes");
            offsets[u + 1] += 1;
        }
        for i in 0..n {
            offsets[i + 1] += offsets[i];
        }
        let targets = list.into_iter().map(|(_, v)| v).collect();
        Adjacency { offsets, targets }
    }

    /// Builds directly from per-node neighbour lists, which must already be sorted.
    pub fn from_lists(lists: Vec<Vec<usize>>) -> Self {
        let mut offsets = Vec::with_capacity(lists.len() + 1);
        offsets.push(0);
        let mut targets = Vec::with_capacity(lists.iter().map(Vec::len).sum());
        for l in lists {
            debug_assert!(l.windows(2).all(|w| w[0] <= w[1]));
            targets.extend(l);
            offsets.push(targets.len());
        }
        Adjacency { offsets, targets }
    }

    #[inline]
    pub fn node_count(&self) -> usize {
        self.offsets.len().saturating_sub(1)
    }

    #[inline]
    pub fn arc_count(&self) -> usize {
        self.targets.len()
    }

    #[inline]
    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.targets[self.offsets[v]..self.offsets[v + 1]]
    }

    #[inline]
    pub fn degree(&self, v: usize) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    pub fn arcs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.node_count()).flat_map(move |u| self.neighbors(u).iter().map(move |&v| (u, v)))
    }

    pub fn transpose(&self) -> Adjacency {
        Adjacency::from_arcs(self.node_count(), self.arcs().map(|(u, v)| (v, u)))
    }

    /// Row action `y = A x`: `y[u] = sum of x[v] over arcs u -> v`.
    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        for (u, yu) in y.iter_mut().enumerate() {
            *yu = self.neighbors(u).iter().map(|&v| x[v]).sum();
        }
    }

    /// Strongly connected components (each as a sorted list of nodes).
    pub fn strongly_connected_components(&self) -> Vec<Vec<usize>> {
        let mut g = petgraph::graph::DiGraph::<(), (), usize>::with_capacity(
            self.node_count(),
            self.arc_count(),
        );
        for _ in 0..self.node_count() {
            g.add_node(());
        }
        for (u, v) in self.arcs() {
            g.add_edge(u.into(), v.into(), ());
        }
        petgraph::algo::tarjan_scc(&g)
            .into_iter()
            .map(|c| {
                let mut c: Vec<usize> = c.into_iter().map(|x| x.index()).collect();
                c.sort_unstable();
                c
            })
            .collect()
    }
}
