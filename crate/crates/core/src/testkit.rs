//! Brute-force reference implementations.
//!
//! These follow the definitions directly and are only usable on small inputs. They back the
//! property tests and the command-line `--verify` mode.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::betweenness::{soc_betweenness_scores, Endpoints};
use crate::error::{Error, Result};
use crate::graph::{Adjacency, Graph, NodeId, SocInstance};
use crate::katz::{max_alpha, soc_katz, KatzParams, DEFAULT_TOL};
use crate::rng;
use crate::rwbc::{net_flow, walk_subgraph, WalkSubgraph};
use crate::score::ScoreVector;
use crate::state::count_feasible_walks;

/// Largest state space the dense oracles will materialize.
pub const DENSE_STATE_LIMIT: usize = 200;
/// Steps after which a single Monte-Carlo walk is abandoned.
pub const MAX_WALK_STEPS: usize = 10_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleBudget {
    pub max_nodes: usize,
    pub max_kappa: usize,
    pub max_walk_len: usize,
}

impl Default for OracleBudget {
    fn default() -> Self {
        OracleBudget {
            max_nodes: 8,
            max_kappa: 3,
            max_walk_len: 8,
        }
    }
}

impl OracleBudget {
    pub fn admit(&self, inst: &SocInstance<'_>) -> Result<()> {
        if inst.node_count() > self.max_nodes {
            return Err(Error::BudgetExceeded(format!(
                "{} nodes exceed the oracle limit of {}",
                inst.node_count(),
                self.max_nodes
            )));
        }
        if inst.kappa() > self.max_kappa {
            return Err(Error::BudgetExceeded(format!(
                "capacity {} exceeds the oracle limit of {}",
                inst.kappa(),
                self.max_kappa
            )));
        }
        Ok(())
    }
}

/// Every feasible walk from `s` to `t` of length at most `max_len`, as node sequences, in
/// lexicographic order of the neighbour lists.
pub fn enumerate_feasible_walks(
    inst: &SocInstance<'_>,
    s: NodeId,
    t: NodeId,
    max_len: usize,
    budget: &OracleBudget,
) -> Result<Vec<Vec<NodeId>>> {
    budget.admit(inst)?;
    inst.graph().check_node(s)?;
    inst.graph().check_node(t)?;
    if max_len > budget.max_walk_len {
        return Err(Error::BudgetExceeded(format!(
            "walk length {max_len} exceeds the oracle limit of {}",
            budget.max_walk_len
        )));
    }
    let mut out = Vec::new();
    let mut walk = vec![s.0];
    extend_walks(inst, &mut walk, inst.kappa(), t.0, max_len, &mut out);
    Ok(out)
}

fn extend_walks(
    inst: &SocInstance<'_>,
    walk: &mut Vec<usize>,
    soc: usize,
    t: usize,
    max_len: usize,
    out: &mut Vec<Vec<NodeId>>,
) {
    let u = *walk.last().unwrap();
    if u == t {
        out.push(walk.iter().map(|&v| NodeId(v)).collect());
    }
    if walk.len() > max_len {
        return;
    }
    for &v in inst.graph().arcs().neighbors(u) {
        let Some(next) = inst.next_soc(soc, v) else { continue };
        walk.push(v);
        extend_walks(inst, walk, next, t, max_len, out);
        walk.pop();
    }
}

/// Fewest hops from each `(node, charge)` to any arrival at `t`, by value iteration.
fn hops_to_target(inst: &SocInstance<'_>, t: usize) -> Vec<Vec<usize>> {
    let n = inst.node_count();
    let k = inst.kappa();
    let mut d = vec![vec![usize::MAX; k + 1]; n];
    d[t] = vec![0; k + 1];
    loop {
        let mut changed = false;
        for u in 0..n {
            if u == t {
                continue;
            }
            for c in 0..=k {
                let best = inst
                    .graph()
                    .arcs()
                    .neighbors(u)
                    .iter()
                    .filter_map(|&v| inst.next_soc(c, v).map(|c2| d[v][c2]))
                    .filter(|&x| x != usize::MAX)
                    .min();
                if let Some(b) = best {
                    if b + 1 < d[u][c] {
                        d[u][c] = b + 1;
                        changed = true;
                    }
                }
            }
        }
        if !changed {
            return d;
        }
    }
}

/// All shortest feasible walks from `s` to `t` (`t != s`), as node sequences.
pub fn shortest_feasible_walks(inst: &SocInstance<'_>, s: usize, t: usize) -> Vec<Vec<usize>> {
    let d = hops_to_target(inst, t);
    let k = inst.kappa();
    if d[s][k] == usize::MAX {
        return Vec::new();
    }
    let mut out = Vec::new();
    let mut walk = vec![s];
    fn go(
        inst: &SocInstance<'_>,
        d: &[Vec<usize>],
        walk: &mut Vec<usize>,
        soc: usize,
        out: &mut Vec<Vec<usize>>,
    ) {
        let u = *walk.last().unwrap();
        let left = d[u][soc];
        if left == 0 {
            out.push(walk.clone());
            return;
        }
        for &v in inst.graph().arcs().neighbors(u) {
            if let Some(c) = inst.next_soc(soc, v) {
                if d[v][c] != usize::MAX && d[v][c] + 1 == left {
                    walk.push(v);
                    go(inst, d, walk, c, out);
                    walk.pop();
                }
            }
        }
    }
    go(inst, &d, &mut walk, k, &mut out);
    out
}

/// Charge-aware betweenness straight from its definition: for every ordered pair `s != t`,
/// each shortest feasible walk credits `1 / sigma_st` to the node at every position after the
/// start (the endpoint included, repeated visits credited each time).
pub fn brute_soc_bc(inst: &SocInstance<'_>, budget: &OracleBudget) -> Result<ScoreVector> {
    brute_soc_bc_with(inst, budget, Endpoints::Target)
}

pub fn brute_soc_bc_with(
    inst: &SocInstance<'_>,
    budget: &OracleBudget,
    endpoints: Endpoints,
) -> Result<ScoreVector> {
    budget.admit(inst)?;
    let n = inst.node_count();
    let mut bc = vec![0.0; n];
    for s in 0..n {
        for t in 0..n {
            if s == t {
                continue;
            }
            let walks = shortest_feasible_walks(inst, s, t);
            let sigma = walks.len() as f64;
            for w in &walks {
                let end = match endpoints {
                    Endpoints::Target => w.len(),
                    Endpoints::Exclude => w.len() - 1,
                };
                for &v in &w[1..end] {
                    bc[v] += 1.0 / sigma;
                }
            }
        }
    }
    Ok(ScoreVector::new("soc-bc", bc).with_param("kappa", inst.kappa() as u64))
}

/// The block matrix of the state graph, rows and columns ordered by charge block (full first).
pub fn dense_bkappa(inst: &SocInstance<'_>) -> Result<DMatrix<f64>> {
    let n = inst.node_count();
    let k = inst.kappa();
    let m = n * (k + 1);
    if m > DENSE_STATE_LIMIT {
        return Err(Error::BudgetExceeded(format!(
            "{m} states exceed the dense limit of {DENSE_STATE_LIMIT}"
        )));
    }
    let mut a = DMatrix::<f64>::zeros(n, n);
    for (u, v) in inst.graph().arcs().arcs() {
        a[(u, v)] += 1.0;
    }
    let j = DMatrix::<f64>::from_diagonal(&DVector::from_fn(n, |i, _| {
        if inst.omega().contains(i) { 1.0 } else { 0.0 }
    }));
    let aj = &a * &j;
    let a_rest = &a * (DMatrix::<f64>::identity(n, n) - &j);
    let mut b = DMatrix::<f64>::zeros(m, m);
    for r in 0..=k {
        b.view_mut((r * n, 0), (n, n)).copy_from(&aj);
        if r < k {
            b.view_mut((r * n, (r + 1) * n), (n, n)).copy_from(&a_rest);
        }
    }
    Ok(b)
}

/// Largest eigenvalue modulus of a dense matrix.
pub fn dense_spectral_radius(m: &DMatrix<f64>) -> f64 {
    m.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Charge-aware Katz by direct inversion of `I - alpha B`.
pub fn dense_soc_katz(inst: &SocInstance<'_>, alpha: f64) -> Result<ScoreVector> {
    let n = inst.node_count();
    let b = dense_bkappa(inst)?;
    let m = b.nrows();
    let rho = dense_spectral_radius(&b);
    if alpha * rho >= 1.0 {
        return Err(Error::AlphaTooLarge {
            alpha,
            bound: 1.0 / rho,
        });
    }
    let sys = DMatrix::<f64>::identity(m, m) - b * alpha;
    let x = sys
        .lu()
        .solve(&DVector::from_element(m, 1.0))
        .ok_or(Error::Singular { node: 0 })?;
    Ok(ScoreVector::new("soc-katz", x.rows(0, n).iter().copied().collect())
        .with_param("alpha", alpha)
        .with_param("kappa", inst.kappa() as u64))
}

/// Monte-Carlo net-flow estimate with standard errors, indexed like the walk subgraph.
#[derive(Clone, Debug, PartialEq)]
pub struct MonteCarloFlow {
    pub nodes: Vec<usize>,
    pub net_flow: Vec<f64>,
    pub std_err: Vec<f64>,
    pub walks: usize,
}

/// Simulates `walks` absorbing random walks from `s` to `t` on the walk subgraph, estimates the
/// expected arc usage empirically and derives the net flow from it. Standard errors use the
/// linearization of the absolute differences around the estimate.
pub fn monte_carlo_rwbc(g: &Adjacency, s: usize, t: usize, walks: usize, seed: u64) -> Result<MonteCarloFlow> {
    if walks < 2 {
        return Err(Error::InvalidParameter("need at least two walks".into()));
    }
    let sub = walk_subgraph(g, s, t);
    if sub.is_empty() {
        return Err(Error::InvalidParameter(format!("no walk from {s} to {t}")));
    }
    let m = sub.len();
    let arc_list: Vec<(usize, usize)> = sub
        .out
        .iter()
        .enumerate()
        .flat_map(|(i, o)| o.iter().map(move |&(j, _)| (i, j)))
        .collect();
    let arc_id = |i: usize, j: usize| arc_list.binary_search(&(i, j)).unwrap();

    // first pass: mean traversals per arc
    let mut mean = vec![0.0; arc_list.len()];
    let mut counts = vec![0u64; arc_list.len()];
    for w in 0..walks {
        counts.iter_mut().for_each(|c| *c = 0);
        one_walk(&sub, seed, w, &arc_id, &mut counts)?;
        for (a, &c) in mean.iter_mut().zip(&counts) {
            *a += c as f64;
        }
    }
    mean.iter_mut().for_each(|a| *a /= walks as f64);
    let flows: Vec<(usize, usize, f64)> = arc_list.iter().zip(&mean).map(|(&(i, j), &f)| (i, j, f)).collect();
    let est = net_flow(m, &flows);

    // second pass: per-walk linearized contributions
    let sign: Vec<f64> = arc_list
        .iter()
        .enumerate()
        .map(|(a, &(i, j))| {
            let back = arc_list.binary_search(&(j, i)).map_or(0.0, |b| mean[b]);
            (mean[a] - back).signum() * ((mean[a] - back) != 0.0) as u8 as f64
        })
        .collect();
    let mut sum = vec![0.0; m];
    let mut sum_sq = vec![0.0; m];
    let mut g_walk = vec![0.0; m];
    for w in 0..walks {
        counts.iter_mut().for_each(|c| *c = 0);
        one_walk(&sub, seed, w, &arc_id, &mut counts)?;
        g_walk.iter_mut().for_each(|x| *x = 0.0);
        for (a, &(i, j)) in arc_list.iter().enumerate() {
            if i == j {
                continue;
            }
            // arc a adds +c to the (i, j) difference and -c to the (j, i) one; both endpoints
            // of the pair get half of it
            let x = 0.5 * sign[a] * counts[a] as f64;
            g_walk[i] += x;
            g_walk[j] += x;
        }
        for i in 0..m {
            sum[i] += g_walk[i];
            sum_sq[i] += g_walk[i] * g_walk[i];
        }
    }
    let wf = walks as f64;
    let std_err = (0..m)
        .map(|i| {
            let mu = sum[i] / wf;
            let var = (sum_sq[i] / wf - mu * mu).max(0.0) * wf / (wf - 1.0);
            (var / wf).sqrt()
        })
        .collect();
    Ok(MonteCarloFlow {
        nodes: sub.nodes.clone(),
        net_flow: est,
        std_err,
        walks,
    })
}

fn one_walk(
    sub: &WalkSubgraph,
    seed: u64,
    index: usize,
    arc_id: &impl Fn(usize, usize) -> usize,
    counts: &mut [u64],
) -> Result<()> {
    let mut r = rng::stream(seed, &[index as u64]);
    let mut at = sub.source;
    let mut steps = 0;
    while at != sub.target {
        let mut pick = r.random_range(0..sub.out_degree(at));
        let mut next = sub.out[at][0].0;
        for &(j, w) in &sub.out[at] {
            if pick < w {
                next = j;
                break;
            }
            pick -= w;
        }
        counts[arc_id(at, next)] += 1;
        at = next;
        steps += 1;
        if steps > MAX_WALK_STEPS {
            return Err(Error::BudgetExceeded(format!("walk exceeded {MAX_WALK_STEPS} steps")));
        }
    }
    Ok(())
}

/// Unit-current flow through every node of an undirected graph: potentials from the grounded
/// Laplacian (`V_t = 0`), node throughput `1/2 * sum_j A_ij |V_i - V_j|`.
pub fn current_flow_pair(g: &Graph, s: usize, t: usize) -> Result<Vec<f64>> {
    if g.is_directed() {
        return Err(Error::InvalidParameter("current flow needs an undirected graph".into()));
    }
    let n = g.node_count();
    let reach = g.bfs_distances(NodeId(s));
    if reach[t].is_none() {
        return Err(Error::InvalidParameter(format!("{t} unreachable from {s}")));
    }
    let comp: Vec<usize> = (0..n).filter(|&v| reach[v].is_some() && v != t).collect();
    let mut pos = vec![usize::MAX; n];
    for (i, &v) in comp.iter().enumerate() {
        pos[v] = i;
    }
    let k = comp.len();
    let mut lap = DMatrix::<f64>::zeros(k, k);
    for (u, v) in g.arcs().arcs() {
        if u == v || pos[u] == usize::MAX {
            continue;
        }
        lap[(pos[u], pos[u])] += 1.0;
        if pos[v] != usize::MAX {
            lap[(pos[u], pos[v])] -= 1.0;
        }
    }
    let mut b = DVector::<f64>::zeros(k);
    b[pos[s]] = 1.0;
    let x = lap.lu().solve(&b).ok_or(Error::Singular { node: s })?;
    let volt = |v: usize| if pos[v] == usize::MAX { 0.0 } else { x[pos[v]] };
    let mut out = vec![0.0; n];
    for (u, v) in g.arcs().arcs() {
        if reach[u].is_some() {
            out[u] += 0.5 * (volt(u) - volt(v)).abs();
        }
    }
    Ok(out)
}

/// Pair dependencies `delta_s(v) = sum over t in targets, t != v of sigma_st(v) / sigma_st` by
/// enumerating all shortest paths of an acyclic graph.
pub fn brute_pair_dependency(g: &Adjacency, s: usize, targets: &[usize]) -> Result<Vec<f64>> {
    let n = g.node_count();
    if !g.strongly_connected_components().iter().all(|c| c.len() == 1) || g.arcs().any(|(u, v)| u == v) {
        return Err(Error::InvalidParameter("dependency oracle needs an acyclic graph".into()));
    }
    let mut paths: Vec<Vec<usize>> = Vec::new();
    fn all_paths(g: &Adjacency, p: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        out.push(p.clone());
        let u = *p.last().unwrap();
        for &v in g.neighbors(u) {
            p.push(v);
            all_paths(g, p, out);
            p.pop();
        }
    }
    all_paths(g, &mut vec![s], &mut paths);
    let mut delta = vec![0.0; n];
    for &t in targets {
        if t == s {
            continue;
        }
        let to_t: Vec<&Vec<usize>> = paths.iter().filter(|p| *p.last().unwrap() == t).collect();
        let Some(len) = to_t.iter().map(|p| p.len()).min() else { continue };
        let shortest: Vec<&&Vec<usize>> = to_t.iter().filter(|p| p.len() == len).collect();
        let sigma = shortest.len() as f64;
        for p in shortest {
            for &v in &p[..p.len() - 1] {
                delta[v] += 1.0 / sigma;
            }
        }
    }
    Ok(delta)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub max_abs_diff: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Compares the fast kernels against the oracles on one small instance.
pub fn verify_instance(inst: &SocInstance<'_>, alpha: Option<f64>, budget: &OracleBudget) -> Result<VerifyReport> {
    budget.admit(inst)?;
    let n = inst.node_count();
    let mut checks = Vec::new();
    let mut push = |name: &str, diff: f64, tol: f64| {
        checks.push(Check {
            name: name.to_string(),
            max_abs_diff: diff,
            tolerance: tol,
            passed: diff <= tol,
        })
    };

    let mut worst = 0.0f64;
    for k in 0..=budget.max_walk_len.min(6) {
        let counts = count_feasible_walks(inst, k);
        for s in 0..n {
            for t in 0..n {
                let walks = enumerate_feasible_walks(inst, NodeId(s), NodeId(t), k, budget)?;
                let exact = walks.iter().filter(|w| w.len() == k + 1).count() as f64;
                worst = worst.max((exact - counts.get(s, t) as f64).abs());
            }
        }
    }
    push("feasible-walk-counts", worst, 0.0);

    let fast = soc_betweenness_scores(inst, Endpoints::Target);
    let slow = brute_soc_bc(inst, budget)?;
    push("soc-bc", max_diff(&fast.node, &slow.values), 1e-9);

    let bound = max_alpha(inst, DEFAULT_TOL);
    if n * (inst.kappa() + 1) <= DENSE_STATE_LIMIT {
        let rho = dense_spectral_radius(&dense_bkappa(inst)?);
        push("spectral-radius", (rho - bound.spectral.value).abs(), 1e-6 * rho.max(1.0));
        let a = alpha.unwrap_or_else(|| bound.default_alpha().min(0.5 / rho.max(1e-300)).min(1.0));
        let fast = soc_katz(inst, &KatzParams::new(a))?;
        let slow = dense_soc_katz(inst, a)?;
        let scale = slow.values.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        push("soc-katz", max_diff(&fast.values, &slow.values) / scale, 1e-8);
    }
    Ok(VerifyReport { checks })
}
