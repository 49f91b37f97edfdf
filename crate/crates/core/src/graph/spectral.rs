//! Perron root of a non-negative adjacency operator.
//!
//! The operator is split into strongly connected components; the spectral radius is the maximum
//! over components. Each non-trivial component is irreducible, so power iteration on the shifted
//! operator `M + I` (primitive, hence convergent even for periodic components such as bipartite
//! graphs) yields Collatz-Wielandt bounds `min_i (Mx)_i / x_i <= rho <= max_i (Mx)_i / x_i` that
//! close in on the root from both sides.

use serde::{Deserialize, Serialize};

use super::Adjacency;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralEstimate {
    /// Midpoint of the bracket.
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
    /// Whether every component's bracket closed to the requested relative tolerance.
    pub converged: bool,
    pub iterations: usize,
}

/// Power-iteration estimate of the largest eigenvalue of the operator with arcs `adj`.
pub fn spectral_radius(adj: &Adjacency, tol: f64, max_iter: usize) -> SpectralEstimate {
    let n = adj.node_count();
    let mut comps = adj.strongly_connected_components();
    // Large components first so the cheap degree bound prunes the small ones.
    comps.sort_by_key(|c| std::cmp::Reverse(c.len()));

    let mut comp_of = vec![usize::MAX; n];
    for (ci, c) in comps.iter().enumerate() {
        for &v in c {
            comp_of[v] = ci;
        }
    }

    let mut lower = 0.0f64;
    let mut upper = 0.0f64;
    let mut converged = true;
    let mut iterations = 0;

    for (ci, comp) in comps.iter().enumerate() {
        if comp.len() == 1 {
            let v = comp[0];
            if adj.neighbors(v).contains(&v) {
                lower = lower.max(1.0);
                upper = upper.max(1.0);
            }
            continue;
        }
        let index: std::collections::HashMap<usize, usize> =
            comp.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let lists: Vec<Vec<usize>> = comp
            .iter()
            .map(|&v| {
                adj.neighbors(v)
                    .iter()
                    .filter(|&&w| comp_of[w] == ci)
                    .map(|w| index[w])
                    .collect()
            })
            .collect();
        let degree_bound = lists.iter().map(Vec::len).max().unwrap_or(0) as f64;
        if degree_bound <= lower {
            continue;
        }
        let (lo, hi, ok, it) = component_bracket(&lists, tol, max_iter);
        lower = lower.max(lo);
        upper = upper.max(hi);
        converged &= ok;
        iterations = iterations.max(it);
    }
    upper = upper.max(lower);
    SpectralEstimate {
        value: 0.5 * (lower + upper),
        lower,
        upper,
        converged,
        iterations,
    }
}

fn component_bracket(lists: &[Vec<usize>], tol: f64, max_iter: usize) -> (f64, f64, bool, usize) {
    let m = lists.len();
    let mut x = vec![1.0f64; m];
    let mut y = vec![0.0f64; m];
    let (mut lo, mut hi) = (0.0, f64::INFINITY);
    for it in 1..=max_iter.max(1) {
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = x[i] + lists[i].iter().map(|&j| x[j]).sum::<f64>();
        }
        lo = f64::INFINITY;
        hi = 0.0f64;
        let mut ymax = 0.0f64;
        for i in 0..m {
            let r = y[i] / x[i];
            lo = lo.min(r);
            hi = hi.max(r);
            ymax = ymax.max(y[i]);
        }
        if hi - lo <= tol * hi {
            return (lo - 1.0, hi - 1.0, true, it);
        }
        for i in 0..m {
            x[i] = y[i] / ymax;
        }
    }
    (lo - 1.0, hi - 1.0, false, max_iter)
}
