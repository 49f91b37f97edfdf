//! Shortest-path betweenness, classical and charge-aware.
//!
//! The charge-aware score counts shortest *feasible* walks. These correspond one-to-one with
//! shortest paths from `(s, kappa)` to `(t, *)` in the starred state graph, so the Brandes
//! accumulation runs on that graph with the dependency restricted to the starred targets:
//!
//! ```text
//! delta(v) = sum over w with v in P(w) of  sigma(v) / sigma(w) * (1_T(w) + delta(w))
//! ```
//!
//! A node's score is the sum of its per-level state scores. A walk that visits a node at two
//! different charge levels credits it twice.
//!
//! Endpoint convention: targets are credited (each reachable target receives 1 per source),
//! sources are not. [`Endpoints::Exclude`] switches both measures to the textbook convention.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::graph::{Adjacency, Graph, SocInstance};
use crate::score::ScoreVector;
use crate::state::{StateGraph, StateLayout};

/// Sources per work item; fixed so that the floating-point reduction order never depends on the
/// thread count.
const SOURCE_CHUNK: usize = 16;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Endpoints {
    /// Credit the target of every pair, never the source.
    #[default]
    Target,
    /// Credit interior nodes only.
    Exclude,
}

impl std::str::FromStr for Endpoints {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s {
            "target" => Ok(Endpoints::Target),
            "exclude" => Ok(Endpoints::Exclude),
            other => Err(crate::Error::InvalidParameter(format!("unknown endpoint convention `{other}`"))),
        }
    }
}

/// Single-source BFS record: distances, shortest-path counts and predecessor lists.
#[derive(Clone, Debug)]
pub struct DependencyState {
    pub source: usize,
    /// `u32::MAX` marks unreached nodes.
    pub dist: Vec<u32>,
    pub sigma: Vec<u64>,
    pub preds: Vec<Vec<usize>>,
    /// Reached nodes in BFS order (non-decreasing distance).
    pub order: Vec<usize>,
    /// Some path count overflowed `u64` and was clamped.
    pub saturated: bool,
}

impl DependencyState {
    pub fn new(n: usize) -> Self {
        DependencyState {
            source: 0,
            dist: vec![u32::MAX; n],
            sigma: vec![0; n],
            preds: vec![Vec::new(); n],
            order: Vec::new(),
            saturated: false,
        }
    }

    /// BFS from `source`, reusing buffers from any previous run.
    pub fn run(&mut self, arcs: &Adjacency, source: usize) {
        for &v in &self.order {
            self.dist[v] = u32::MAX;
            self.sigma[v] = 0;
            self.preds[v].clear();
        }
        self.order.clear();
        self.saturated = false;
        self.source = source;
        self.dist[source] = 0;
        self.sigma[source] = 1;
        self.order.push(source);
        let mut head = 0;
        while head < self.order.len() {
            let v = self.order[head];
            head += 1;
            let dv = self.dist[v];
            for &w in arcs.neighbors(v) {
                if self.dist[w] == u32::MAX {
                    self.dist[w] = dv + 1;
                    self.order.push(w);
                }
                if self.dist[w] == dv + 1 {
                    let (sum, over) = self.sigma[w].overflowing_add(self.sigma[v]);
                    self.sigma[w] = if over { u64::MAX } else { sum };
                    self.saturated |= over;
                    self.preds[w].push(v);
                }
            }
        }
    }

    pub fn from_source(arcs: &Adjacency, source: usize) -> Self {
        let mut s = DependencyState::new(arcs.node_count());
        s.run(arcs, source);
        s
    }
}

/// Dependency of the source on every node, restricted to pairs whose target satisfies
/// `is_target`.
pub fn target_restricted_dependency(
    state: &DependencyState,
    is_target: impl Fn(usize) -> bool,
) -> Vec<f64> {
    let n = state.dist.len();
    let mut delta = vec![0.0; n];
    let mut chi = vec![false; n];
    accumulate(state, &is_target, &mut delta, &mut chi, |_, _| {});
    delta
}

/// Back-propagation in non-increasing distance order. Only nodes that lie on a shortest path to
/// some target (`chi`) are expanded. `visit(w, delta_w)` is called for each such node.
fn accumulate(
    state: &DependencyState,
    is_target: &impl Fn(usize) -> bool,
    delta: &mut [f64],
    chi: &mut [bool],
    mut visit: impl FnMut(usize, f64),
) {
    for &v in &state.order {
        delta[v] = 0.0;
        chi[v] = is_target(v);
    }
    for &w in state.order.iter().rev() {
        if !chi[w] {
            continue;
        }
        let credit = if is_target(w) { 1.0 } else { 0.0 };
        let coeff = (credit + delta[w]) / state.sigma[w] as f64;
        for &v in &state.preds[w] {
            chi[v] = true;
            delta[v] += state.sigma[v] as f64 * coeff;
        }
        visit(w, delta[w]);
    }
}

/// State-level and node-level charge-aware betweenness.
#[derive(Clone, Debug, PartialEq)]
pub struct BcScores {
    pub layout: StateLayout,
    /// Indexed by flat state index, including the starred layer (always zero there).
    pub state: Vec<f64>,
    pub node: Vec<f64>,
    /// Some shortest-walk count overflowed `u64`; scores are then approximate.
    pub saturated: bool,
}

pub fn soc_betweenness(inst: &SocInstance<'_>) -> ScoreVector {
    let scores = soc_betweenness_scores(inst, Endpoints::Target);
    ScoreVector::new("soc-bc", scores.node)
        .with_param("kappa", inst.kappa() as u64)
        .with_omega(inst.omega_descriptor())
}

pub fn soc_betweenness_scores(inst: &SocInstance<'_>, endpoints: Endpoints) -> BcScores {
    let sg = StateGraph::build(inst, true);
    let layout = sg.layout();
    let arcs = sg.arcs();
    let total = sg.state_count();
    let n = layout.n;
    let is_target = |x: usize| layout.is_star(x);

    let sources: Vec<usize> = (0..n).map(|v| layout.level(v, inst.kappa())).collect();
    let partials: Vec<(Vec<f64>, bool)> = sources
        .par_chunks(SOURCE_CHUNK)
        .map(|chunk| {
            let mut bc = vec![0.0; total];
            let mut st = DependencyState::new(total);
            let mut delta = vec![0.0; total];
            let mut chi = vec![false; total];
            let mut saturated = false;
            for &s in chunk {
                st.run(arcs, s);
                saturated |= st.saturated;
                accumulate(&st, &is_target, &mut delta, &mut chi, |w, d| {
                    if w == s || layout.is_star(w) {
                        return;
                    }
                    let mut credit = d;
                    if endpoints == Endpoints::Exclude {
                        let star = layout.star(layout.node_of(w));
                        if st.dist[star] == st.dist[w] + 1 {
                            credit -= st.sigma[w] as f64 / st.sigma[star] as f64;
                        }
                    }
                    bc[w] += credit;
                });
            }
            (bc, saturated)
        })
        .collect();

    let mut state = vec![0.0; total];
    let mut saturated = false;
    for (part, sat) in partials {
        saturated |= sat;
        for (a, b) in state.iter_mut().zip(part) {
            *a += b;
        }
    }
    if saturated {
        log::warn!("shortest feasible walk counts overflowed u64; betweenness is approximate");
    }
    let mut node = vec![0.0; n];
    for idx in 0..layout.numeric_count() {
        node[layout.node_of(idx)] += state[idx];
    }
    BcScores {
        layout,
        state,
        node,
        saturated,
    }
}

pub fn standard_betweenness(g: &Graph) -> ScoreVector {
    standard_betweenness_with(g, Endpoints::Target)
}

/// Brandes betweenness (unnormalized) on the arc view of `g`.
pub fn standard_betweenness_with(g: &Graph, endpoints: Endpoints) -> ScoreVector {
    let arcs = g.arcs();
    let n = g.node_count();
    let target_credit = match endpoints {
        Endpoints::Target => 1.0,
        Endpoints::Exclude => 0.0,
    };
    let sources: Vec<usize> = (0..n).collect();
    let partials: Vec<Vec<f64>> = sources
        .par_chunks(SOURCE_CHUNK)
        .map(|chunk| {
            let mut bc = vec![0.0; n];
            let mut st = DependencyState::new(n);
            let mut delta = vec![0.0; n];
            let mut chi = vec![false; n];
            for &s in chunk {
                st.run(arcs, s);
                accumulate(&st, &|_| true, &mut delta, &mut chi, |w, d| {
                    if w != s {
                        bc[w] += d + target_credit;
                    }
                });
            }
            bc
        })
        .collect();
    let mut bc = vec![0.0; n];
    for part in partials {
        for (a, b) in bc.iter_mut().zip(part) {
            *a += b;
        }
    }
    let name = match endpoints {
        Endpoints::Target => "bc",
        Endpoints::Exclude => "bc-interior",
    };
    ScoreVector::new(name, bc)
}
