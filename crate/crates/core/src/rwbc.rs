//! Random-walk betweenness on directed graphs, and its charge-aware aggregation.
//!
//! For a pair `(s, t)` the host graph is first cut down to the nodes that lie on some `s -> t`
//! walk. On that subgraph, with `D` the out-degree matrix and `A` the adjacency matrix, the
//! vector `f = e_s^T (D_t - A_t)^{-1}` (row and column `t` removed, `f_t = 0`) gives the expected
//! number of times a walk absorbed at `t` uses each out-arc of a node, `F = D_f A` the expected
//! use of each arc, and the net flow through node `i` is
//!
//! ```text
//! I_i = 1/2 * sum over neighbours j (unordered pairs, once each) of |F_ij - F_ji|
//! ```
//!
//! On symmetric graphs this is current-flow betweenness with a unit current from `s` to `t`.

use std::collections::{BTreeMap, VecDeque};

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Adjacency, Graph, NodeId, SocInstance};
use crate::score::ScoreVector;
use crate::state::StateGraph;

/// Subgraphs up to this many nodes are solved by dense LU; larger ones iteratively.
pub const DENSE_SOLVE_LIMIT: usize = 2000;
pub const ITERATIVE_TOL: f64 = 1e-10;
pub const ITERATIVE_MAX_SWEEPS: usize = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StPair {
    pub source: NodeId,
    pub target: NodeId,
}

impl StPair {
    pub fn new(source: usize, target: usize) -> Result<Self> {
        if source == target {
            return Err(Error::InvalidParameter(format!(
                "source and target coincide ({source})"
            )));
        }
        Ok(StPair {
            source: NodeId(source),
            target: NodeId(target),
        })
    }
}

/// How the net flow of the two endpoints is reported.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EndpointFlow {
    /// Same half-sum formula as every other node.
    #[default]
    Uniform,
    /// Source and target are assigned a net flow of exactly 1.
    Unit,
}

impl std::str::FromStr for EndpointFlow {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(EndpointFlow::Uniform),
            "unit" => Ok(EndpointFlow::Unit),
            other => Err(Error::InvalidParameter(format!("unknown endpoint flow `{other}`"))),
        }
    }
}

/// Nodes of the host graph lying on a walk from the source to the target set, with all targets
/// merged into a single absorbing node (the last local index).
#[derive(Clone, Debug, PartialEq)]
pub struct WalkSubgraph {
    /// Host ids by local index; the last entry is the first target (representing all of them).
    pub nodes: Vec<usize>,
    pub source: usize,
    pub target: usize,
    /// Local out-arcs with multiplicity, sorted by head.
    pub out: Vec<Vec<(usize, u32)>>,
}

impl WalkSubgraph {
    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn out_degree(&self, i: usize) -> u32 {
        self.out[i].iter().map(|&(_, w)| w).sum()
    }

    pub fn arc_count(&self) -> usize {
        self.out.iter().map(|o| o.iter().map(|&(_, w)| w as usize).sum::<usize>()).sum()
    }
}

/// Forward reachability from `s` (without leaving `t`) intersected with co-reachability of `t`.
pub fn walk_subgraph(g: &Adjacency, s: usize, t: usize) -> WalkSubgraph {
    walk_subgraph_to_set(g, &g.transpose(), s, &[t])
}

/// As [`walk_subgraph`] with a set of targets merged into one absorbing node. `reverse` must be
/// the transpose of `g`.
pub fn walk_subgraph_to_set(
    g: &Adjacency,
    reverse: &Adjacency,
    s: usize,
    targets: &[usize],
) -> WalkSubgraph {
    let empty = WalkSubgraph {
        nodes: Vec::new(),
        source: 0,
        target: 0,
        out: Vec::new(),
    };
    if targets.is_empty() || targets.contains(&s) {
        return empty;
    }
    let n = g.node_count();
    let mut is_target = vec![false; n];
    for &t in targets {
        is_target[t] = true;
    }

    let mut fwd = vec![false; n];
    fwd[s] = true;
    let mut queue = VecDeque::from([s]);
    let mut hit = false;
    while let Some(v) = queue.pop_front() {
        for &w in g.neighbors(v) {
            if is_target[w] {
                hit = true;
            } else if !fwd[w] {
                fwd[w] = true;
                queue.push_back(w);
            }
        }
    }
    if !hit {
        return empty;
    }

    let mut bwd = vec![false; n];
    for &t in targets {
        bwd[t] = true;
        queue.push_back(t);
    }
    while let Some(v) = queue.pop_front() {
        for &u in reverse.neighbors(v) {
            if !bwd[u] && fwd[u] {
                bwd[u] = true;
                queue.push_back(u);
            }
        }
    }

    let mut local = vec![usize::MAX; n];
    let mut nodes = Vec::new();
    for v in 0..n {
        if fwd[v] && bwd[v] && !is_target[v] {
            local[v] = nodes.len();
            nodes.push(v);
        }
    }
    let tau = nodes.len();
    nodes.push(targets[0]);
    let mut out = vec![Vec::new(); nodes.len()];
    for (i, &u) in nodes[..tau].iter().enumerate() {
        let mut heads: BTreeMap<usize, u32> = BTreeMap::new();
        for &w in g.neighbors(u) {
            let h = if is_target[w] { tau } else { local[w] };
            if h != usize::MAX {
                *heads.entry(h).or_default() += 1;
            }
        }
        out[i] = heads.into_iter().collect();
    }
    WalkSubgraph {
        source: local[s],
        target: tau,
        nodes,
        out,
    }
}

/// Expected arc usage and net flow for one source-target pair, in local subgraph indices.
#[derive(Clone, Debug, PartialEq)]
pub struct FlowSolution {
    /// Host ids by local index (target last).
    pub nodes: Vec<usize>,
    /// Expected use of each out-arc of a node; zero at the target.
    pub f: Vec<f64>,
    /// `(tail, head, F)` per local arc, parallel arcs merged.
    pub arcs: Vec<(usize, usize, f64)>,
    pub net_flow: Vec<f64>,
}

impl FlowSolution {
    /// Net flow scattered onto host ids; the absorbing target is left out.
    pub fn net_flow_by_host(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        let last = self.nodes.len() - 1;
        self.nodes[..last]
            .iter()
            .copied()
            .zip(self.net_flow[..last].iter().copied())
    }
}

/// Random-walk betweenness contributions of a single pair on a directed graph. Returns `None`
/// when no walk leads from `s` to `t`.
pub fn directed_rwbc_pair(g: &Adjacency, s: usize, t: usize) -> Result<Option<FlowSolution>> {
    if s == t {
        return Err(Error::InvalidParameter("source equals target".into()));
    }
    let sub = walk_subgraph(g, s, t);
    if sub.is_empty() {
        return Ok(None);
    }
    solve_flow(&sub, EndpointFlow::Uniform).map(Some)
}

/// Solves `(D_t - A_t)^T f = e_s` on a walk subgraph and derives arc and net flows.
pub fn solve_flow(sub: &WalkSubgraph, endpoints: EndpointFlow) -> Result<FlowSolution> {
    let m = sub.len();
    let k = m - 1; // unknowns: every node except the target
    for i in 0..k {
        if sub.out_degree(i) == 0 {
            return Err(Error::Singular { node: sub.nodes[i] });
        }
    }
    let mut f = if k <= DENSE_SOLVE_LIMIT {
        dense_solve(sub, k)?
    } else {
        iterative_solve(sub, k)?
    };
    f.push(0.0);

    let mut arcs = Vec::with_capacity(sub.arc_count());
    for i in 0..k {
        for &(j, w) in &sub.out[i] {
            arcs.push((i, j, f[i] * w as f64));
        }
    }
    let mut net_flow = net_flow(m, &arcs);
    if endpoints == EndpointFlow::Unit {
        net_flow[sub.source] = 1.0;
        net_flow[sub.target] = 1.0;
    }
    Ok(FlowSolution {
        nodes: sub.nodes.clone(),
        f,
        arcs,
        net_flow,
    })
}

/// Half the summed absolute imbalance over unordered neighbour pairs.
pub fn net_flow(m: usize, arcs: &[(usize, usize, f64)]) -> Vec<f64> {
    let mut pair: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for &(i, j, flow) in arcs {
        if i == j {
            continue;
        }
        if i < j {
            *pair.entry((i, j)).or_default() += flow;
        } else {
            *pair.entry((j, i)).or_default() -= flow;
        }
    }
    let mut out = vec![0.0; m];
    for ((i, j), diff) in pair {
        let h = 0.5 * diff.abs();
        out[i] += h;
        out[j] += h;
    }
    out
}

fn dense_solve(sub: &WalkSubgraph, k: usize) -> Result<Vec<f64>> {
    let mut mat = DMatrix::<f64>::zeros(k, k);
    for i in 0..k {
        mat[(i, i)] += sub.out_degree(i) as f64;
        for &(j, w) in &sub.out[i] {
            if j < k {
                // transpose: row j, column i
                mat[(j, i)] -= w as f64;
            }
        }
    }
    let mut rhs = DVector::<f64>::zeros(k);
    rhs[sub.source] = 1.0;
    let lu = mat.lu();
    let sol = lu.solve(&rhs).ok_or(Error::Singular {
        node: sub.nodes[sub.source],
    })?;
    if sol.iter().any(|x| !x.is_finite()) {
        return Err(Error::Singular {
            node: sub.nodes[sub.source],
        });
    }
    Ok(sol.iter().copied().collect())
}

/// Gauss-Seidel on `d_i f_i - sum_{j -> i} w_ji f_j = [i = s]`.
///
/// Stops once the estimated distance to the fixed point, `change * rho / (1 - rho)` with `rho` the
/// observed contraction of successive updates, falls below the tolerance relative to `max |f|`.
fn iterative_solve(sub: &WalkSubgraph, k: usize) -> Result<Vec<f64>> {
    let mut incoming: Vec<Vec<(usize, f64)>> = vec![Vec::new(); k];
    for j in 0..k {
        for &(i, w) in &sub.out[j] {
            if i < k {
                incoming[i].push((j, w as f64));
            }
        }
    }
    let deg: Vec<f64> = (0..k).map(|i| sub.out_degree(i) as f64).collect();
    let mut f = vec![0.0; k];
    let mut prev_change = f64::INFINITY;
    let mut estimate = f64::INFINITY;
    for _ in 0..ITERATIVE_MAX_SWEEPS {
        let mut change = 0.0f64;
        let mut scale = 0.0f64;
        for i in 0..k {
            let b = if i == sub.source { 1.0 } else { 0.0 };
            let inflow: f64 = incoming[i].iter().map(|&(j, w)| w * f[j]).sum();
            let next = (b + inflow) / deg[i];
            change = change.max((next - f[i]).abs());
            scale = scale.max(next.abs());
            f[i] = next;
        }
        let rho = (change / prev_change).min(1.0);
        prev_change = change;
        estimate = if rho < 1.0 { change * rho / (1.0 - rho) } else { f64::INFINITY };
        if change == 0.0 || (estimate <= ITERATIVE_TOL * scale.max(1.0) && change <= ITERATIVE_TOL * scale.max(1.0)) {
            return Ok(f);
        }
    }
    Err(Error::NotConverged {
        iterations: ITERATIVE_MAX_SWEEPS,
        residual: estimate,
        partial: f,
    })
}

/// Aggregate scores plus the pairs that had no feasible walk.
#[derive(Clone, Debug, PartialEq)]
pub struct RwbcResult {
    pub scores: ScoreVector,
    pub skipped: Vec<StPair>,
}

pub fn soc_rwbc(inst: &SocInstance<'_>, pairs: &[StPair]) -> Result<RwbcResult> {
    soc_rwbc_with(inst, pairs, EndpointFlow::Uniform)
}

/// Charge-aware random-walk betweenness summed over `pairs`.
///
/// Each pair runs on the state graph from `(s, kappa)` with every arrival state `(t, i)` merged
/// into one absorbing node; per-state net flows are summed over charge levels.
pub fn soc_rwbc_with(
    inst: &SocInstance<'_>,
    pairs: &[StPair],
    endpoints: EndpointFlow,
) -> Result<RwbcResult> {
    if pairs.is_empty() {
        return Err(Error::InvalidParameter("no source-target pairs given".into()));
    }
    let g = inst.graph();
    for p in pairs {
        g.check_node(p.source)?;
        g.check_node(p.target)?;
    }
    let sg = StateGraph::build(inst, false);
    let layout = sg.layout();
    let reverse = sg.arcs().transpose();
    let per_pair: Vec<Result<Option<Vec<(usize, f64)>>>> = pairs
        .par_iter()
        .map(|p| {
            let src = layout.level(p.source.0, inst.kappa());
            let targets: Vec<usize> = (0..=inst.kappa()).map(|i| layout.level(p.target.0, i)).collect();
            let sub = walk_subgraph_to_set(sg.arcs(), &reverse, src, &targets);
            if sub.is_empty() {
                return Ok(None);
            }
            let sol = solve_flow(&sub, endpoints)?;
            Ok(Some(sol.net_flow_by_host().collect()))
        })
        .collect();

    let mut node = vec![0.0; layout.n];
    let mut skipped = Vec::new();
    for (p, r) in pairs.iter().zip(per_pair) {
        match r? {
            None => skipped.push(*p),
            Some(contrib) => {
                for (state, flow) in contrib {
                    node[layout.node_of(state)] += flow;
                }
            }
        }
    }
    if !skipped.is_empty() {
        log::info!("{} of {} pairs have no feasible walk", skipped.len(), pairs.len());
    }
    Ok(RwbcResult {
        scores: ScoreVector::new("soc-rwbc", node)
            .with_param("kappa", inst.kappa() as u64)
            .with_param("pairs", pairs.len() as u64)
            .with_param("skipped_pairs", skipped.len() as u64)
            .with_omega(inst.omega_descriptor()),
        skipped,
    })
}

/// Directed random-walk betweenness of the base graph summed over `pairs`.
pub fn standard_rwbc(g: &Graph, pairs: &[StPair]) -> Result<RwbcResult> {
    if pairs.is_empty() {
        return Err(Error::InvalidParameter("no source-target pairs given".into()));
    }
    let reverse = g.arcs().transpose();
    let per_pair: Vec<Result<Option<Vec<(usize, f64)>>>> = pairs
        .par_iter()
        .map(|p| {
            let sub = walk_subgraph_to_set(g.arcs(), &reverse, p.source.0, &[p.target.0]);
            if sub.is_empty() {
                return Ok(None);
            }
            Ok(Some(solve_flow(&sub, EndpointFlow::Uniform)?.net_flow_by_host().collect()))
        })
        .collect();
    let mut node = vec![0.0; g.node_count()];
    let mut skipped = Vec::new();
    for (p, r) in pairs.iter().zip(per_pair) {
        match r? {
            None => skipped.push(*p),
            Some(c) => c.into_iter().for_each(|(v, x)| node[v] += x),
        }
    }
    Ok(RwbcResult {
        scores: ScoreVector::new("rwbc", node)
            .with_param("pairs", pairs.len() as u64)
            .with_param("skipped_pairs", skipped.len() as u64),
        skipped,
    })
}

/// `count` ordered pairs drawn uniformly from all `s != t`.
pub fn sample_pairs<R: Rng + ?Sized>(n: usize, count: usize, rng: &mut R) -> Result<Vec<StPair>> {
    if n < 2 {
        return Err(Error::InvalidParameter("need at least two nodes to sample pairs".into()));
    }
    Ok((0..count)
        .map(|_| {
            let s = rng.random_range(0..n);
            let mut t = rng.random_range(0..n - 1);
            if t >= s {
                t += 1;
            }
            StPair {
                source: NodeId(s),
                target: NodeId(t),
            }
        })
        .collect())
}

/// Every ordered pair `s != t`.
pub fn all_pairs(n: usize) -> Vec<StPair> {
    (0..n)
        .flat_map(|s| {
            (0..n).filter(move |&t| t != s).map(move |t| StPair {
                source: NodeId(s),
                target: NodeId(t),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generators, RefillSet};

    fn digraph(n: usize, arcs: &[(usize, usize)]) -> Adjacency {
        Adjacency::from_arcs(n, arcs.iter().copied())
    }

    fn flow_of(sol: &FlowSolution, host: usize) -> f64 {
        sol.nodes.iter().position(|&v| v == host).map_or(0.0, |i| sol.net_flow[i])
    }

    #[test]
    fn subgraph_of_path() {
        let g = digraph(3, &[(0, 1), (1, 2)]);
        let sub = walk_subgraph(&g, 0, 2);
        assert_eq!(sub.nodes, vec![0, 1, 2]);
        assert_eq!(sub.arc_count(), 2);
    }

    #[test]
    fn dangling_branch_is_excluded() {
        // s=0 -> a=1 -> t=2, a -> b=3 dead end
        let g = digraph(4, &[(0, 1), (1, 2), (1, 3)]);
        let sub = walk_subgraph(&g, 0, 2);
        assert_eq!(sub.nodes, vec![0, 1, 2]);
        assert!(walk_subgraph(&g, 2, 0).is_empty());
    }

    #[test]
    fn directed_path_flows() {
        let g = digraph(3, &[(0, 1), (1, 2)]);
        let sol = directed_rwbc_pair(&g, 0, 2).unwrap().unwrap();
        assert_eq!(sol.f, vec![1.0, 1.0, 0.0]);
        assert_eq!(sol.net_flow, vec![0.5, 1.0, 0.5]);
    }

    #[test]
    fn diamond_splits_evenly() {
        let g = digraph(4, &[(0, 1), (0, 2), (1, 3), (2, 3)]);
        let sol = directed_rwbc_pair(&g, 0, 3).unwrap().unwrap();
        assert!((flow_of(&sol, 1) - 0.5).abs() < 1e-12);
        assert!((flow_of(&sol, 2) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn unreachable_pair_is_none() {
        let g = digraph(3, &[(0, 1)]);
        assert!(directed_rwbc_pair(&g, 0, 2).unwrap().is_none());
        assert!(directed_rwbc_pair(&g, 0, 0).is_err());
    }

    #[test]
    fn conservation_on_random_digraph() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let g = generators::erdos_renyi(12, 0.3, true, &mut rng);
        let mut checked = 0;
        for (s, t) in [(0, 5), (3, 7), (11, 2), (4, 9)] {
            let Some(sol) = directed_rwbc_pair(g.arcs(), s, t).unwrap() else { continue };
            checked += 1;
            let m = sol.nodes.len();
            let mut balance = vec![0.0; m];
            for &(i, j, fl) in &sol.arcs {
                balance[i] += fl;
                balance[j] -= fl;
            }
            for (i, b) in balance.iter().enumerate() {
                let want = if i == m - 1 { -1.0 } else if sol.nodes[i] == s { 1.0 } else { 0.0 };
                assert!((b - want).abs() < 1e-8, "node {i}: {b} vs {want}");
            }
            assert!(sol.f.iter().all(|&x| x >= 0.0));
        }
        assert!(checked > 0);
    }

    #[test]
    fn iterative_matches_dense() {
        let g = generators::grid(6, 6);
        let sub = walk_subgraph(g.arcs(), 0, 35);
        let k = sub.len() - 1;
        let dense = dense_solve(&sub, k).unwrap();
        let iter = iterative_solve(&sub, k).unwrap();
        for (a, b) in dense.iter().zip(&iter) {
            assert!((a - b).abs() < 1e-8 * a.abs().max(1.0), "{a} vs {b}");
        }
    }

    #[test]
    fn soc_path_pair_goes_through_middle() {
        let g = generators::path(3);
        let inst = SocInstance::new(&g, RefillSet::empty(3), 2).unwrap();
        let r = soc_rwbc(&inst, &[StPair::new(0, 2).unwrap()]).unwrap();
        assert!(r.skipped.is_empty());
        assert!((r.scores.values[1] - 1.0).abs() < 1e-12);
        assert!((r.scores.values[0] - 0.5).abs() < 1e-12);
        assert_eq!(r.scores.values[2], 0.0);
    }

    #[test]
    fn soc_infeasible_pair_is_skipped() {
        let g = generators::path(3);
        let inst = SocInstance::new(&g, RefillSet::empty(3), 1).unwrap();
        let r = soc_rwbc(&inst, &[StPair::new(0, 2).unwrap()]).unwrap();
        assert_eq!(r.skipped.len(), 1);
        assert!(r.scores.values.iter().all(|&v| v == 0.0));
        assert!(soc_rwbc(&inst, &[]).is_err());
    }

    #[test]
    fn full_refill_collapses_to_base_graph() {
        let g = generators::grid(3, 3);
        let inst = SocInstance::new(&g, RefillSet::full(9), 1).unwrap();
        let pairs = all_pairs(9);
        let soc = soc_rwbc(&inst, &pairs).unwrap();
        let base = standard_rwbc(&g, &pairs).unwrap();
        for (a, b) in soc.scores.values.iter().zip(&base.scores.values) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn unit_endpoint_convention() {
        let g = generators::path(3);
        let inst = SocInstance::new(&g, RefillSet::empty(3), 2).unwrap();
        let r = soc_rwbc_with(&inst, &[StPair::new(0, 2).unwrap()], EndpointFlow::Unit).unwrap();
        assert_eq!(r.scores.values, vec![1.0, 1.0, 0.0]);
    }

    #[test]
    fn sampled_pairs_are_distinct_endpoints() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let pairs = sample_pairs(5, 500, &mut rng).unwrap();
        assert!(pairs.iter().all(|p| p.source != p.target && p.target.0 < 5));
        assert_eq!(all_pairs(4).len(), 12);
    }
}
