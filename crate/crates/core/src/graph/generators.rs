//! Synthetic undirected (and one directed) test graphs. Node labels are the dense ids.

use rand::Rng;

use super::Graph;

fn build(n: usize, edges: &[(usize, usize)], directed: bool) -> Graph {
    Graph::from_edges(n, edges, directed).expect("generator produced an out-of-range edge")
}

pub fn path(n: usize) -> Graph {
    let edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
    build(n, &edges, false)
}

pub fn cycle(n: usize) -> Graph {
    let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
    build(n, &edges, false)
}

/// Star with centre 0 and `leaves` leaves.
pub fn star(leaves: usize) -> Graph {
    let edges: Vec<_> = (1..=leaves).map(|i| (0, i)).collect();
    build(leaves + 1, &edges, false)
}

/// `rows x cols` lattice; node `r * cols + c`.
pub fn grid(rows: usize, cols: usize) -> Graph {
    build(rows * cols, &grid_edges(rows, cols, 0), false)
}

fn grid_edges(rows: usize, cols: usize, offset: usize) -> Vec<(usize, usize)> {
    let mut edges = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            let v = offset + r * cols + c;
            if c + 1 < cols {
                edges.push((v, v + 1));
            }
            if r + 1 < rows {
                edges.push((v, v + cols));
            }
        }
    }
    edges
}

/// Two `side x side` grids joined corner-to-corner by a path with `bridge_len` edges.
///
/// Nodes `0..side²` form the first grid, the `bridge_len - 1` bridge-interior nodes follow, and
/// the second grid comes last.
pub fn bridged_grids(side: usize, bridge_len: usize) -> Graph {
    assert!(bridge_len >= 1);
    let block = side * side;
    let interior = bridge_len - 1;
    let n = 2 * block + interior;
    let mut edges = grid_edges(side, side, 0);
    edges.extend(grid_edges(side, side, block + interior));
    let mut chain = vec![block - 1];
    chain.extend(block..block + interior);
    chain.push(block + interior);
    edges.extend(chain.windows(2).map(|w| (w[0], w[1])));
    build(n, &edges, false)
}

/// Preferential attachment: a clique on `m + 1` seed nodes, then each new node links to `m`
/// distinct existing nodes chosen with probability proportional to degree.
pub fn barabasi_albert<R: Rng + ?Sized>(n: usize, m: usize, rng: &mut R) -> Graph {
    assert!(m >= 1 && n > m);
    let mut edges = Vec::new();
    let mut ends: Vec<usize> = Vec::new();
    for u in 0..=m {
        for v in u + 1..=m {
            edges.push((u, v));
            ends.push(u);
            ends.push(v);
        }
    }
    let mut picked = Vec::with_capacity(m);
    for v in m + 1..n {
        picked.clear();
        while picked.len() < m {
            let u = ends[rng.random_range(0..ends.len())];
            if !picked.contains(&u) {
                picked.push(u);
            }
        }
        for &u in &picked {
            edges.push((u, v));
            ends.push(u);
            ends.push(v);
        }
    }
    build(n, &edges, false)
}

/// G(n, p); for directed graphs each ordered pair is drawn independently. No self-loops.
pub fn erdos_renyi<R: Rng + ?Sized>(n: usize, p: f64, directed: bool, rng: &mut R) -> Graph {
    let mut edges = Vec::new();
    for u in 0..n {
        let start = if directed { 0 } else { u + 1 };
        for v in start..n {
            if u != v && rng.random_bool(p) {
                edges.push((u, v));
            }
        }
    }
    build(n, &edges, directed)
}
