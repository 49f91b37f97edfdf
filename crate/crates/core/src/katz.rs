//! Katz-type centralities.
//!
//! The charge-aware variant scores node `i` by the damped number of feasible walks that leave `i`
//! with full charge: `C = Z^T (I - alpha B)^{-1} I_stack 1`, where `B` is the state-graph operator,
//! `Z` selects the full-charge block and `I_stack` sums over charge levels. The series
//! `sum_k alpha^k B^k 1` (identity term included) is accumulated by repeated application of `B`
//! and the full-charge block is read off at the end.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{spectral_radius, Adjacency, Graph, SocInstance, SpectralEstimate};
use crate::score::ScoreVector;
use crate::state::StateGraph;

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 10_000;
/// Iteration cap for the power iteration behind [`max_alpha`].
pub const SPECTRAL_MAX_ITER: usize = 200_000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KatzParams {
    pub alpha: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl KatzParams {
    pub fn new(alpha: f64) -> Self {
        KatzParams {
            alpha,
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
        }
    }
}

/// Upper limit on usable damping factors, `1 / lambda_max`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlphaBound {
    /// `1 / lambda_max`, using the upper end of the eigenvalue bracket; `+inf` when nilpotent.
    pub value: f64,
    /// True when the operator has no cycles, so every damping factor converges.
    pub nilpotent: bool,
    pub spectral: SpectralEstimate,
}

impl AlphaBound {
    fn from_estimate(spectral: SpectralEstimate) -> Self {
        let nilpotent = spectral.upper <= 0.0;
        AlphaBound {
            value: if nilpotent { f64::INFINITY } else { 1.0 / spectral.upper },
            nilpotent,
            spectral,
        }
    }

    /// `0.9` of the bound, or `1` when any factor is admissible.
    pub fn default_alpha(&self) -> f64 {
        if self.nilpotent {
            1.0
        } else {
            0.9 * self.value
        }
    }

    fn check(&self, alpha: f64) -> Result<()> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "damping factor must be positive, got {alpha}"
            )));
        }
        if alpha >= self.value {
            return Err(Error::AlphaTooLarge {
                alpha,
                bound: self.value,
            });
        }
        Ok(())
    }
}

/// `1 / lambda_max(B_kappa)`, estimated by power iteration over the state graph.
///
/// The value is never smaller than `1 / lambda_max(A)`: feasible walks are a subset of walks.
pub fn max_alpha(inst: &SocInstance<'_>, tol: f64) -> AlphaBound {
    let sg = StateGraph::build(inst, false);
    AlphaBound::from_estimate(spectral_radius(sg.arcs(), tol, SPECTRAL_MAX_ITER))
}

/// `1 / lambda_max(A)` for the base graph.
pub fn max_alpha_standard(g: &Graph, tol: f64) -> AlphaBound {
    AlphaBound::from_estimate(spectral_radius(g.arcs(), tol, SPECTRAL_MAX_ITER))
}

pub fn soc_katz(inst: &SocInstance<'_>, p: &KatzParams) -> Result<ScoreVector> {
    let sg = StateGraph::build(inst, false);
    let bound = AlphaBound::from_estimate(spectral_radius(sg.arcs(), p.tol, SPECTRAL_MAX_ITER));
    bound.check(p.alpha)?;
    soc_katz_unchecked(&sg, p).map(|v| {
        ScoreVector::new("soc-katz", v)
            .with_param("alpha", p.alpha)
            .with_param("kappa", inst.kappa() as u64)
            .with_param("alpha_bound", bound.value)
            .with_omega(inst.omega_descriptor())
    })
}

/// Series accumulation without the eigenvalue check. The caller guarantees convergence.
pub(crate) fn soc_katz_unchecked(sg: &StateGraph<'_>, p: &KatzParams) -> Result<Vec<f64>> {
    let n = sg.layout().n;
    damped_walk_sums(sg.arcs(), p).map(|mut y| {
        // block 0 holds the full-charge states
        y.truncate(n);
        y
    })
}

pub fn standard_katz(g: &Graph, alpha: f64, tol: f64, max_iter: usize) -> Result<ScoreVector> {
    let bound = AlphaBound::from_estimate(spectral_radius(g.arcs(), tol, SPECTRAL_MAX_ITER));
    bound.check(alpha)?;
    let p = KatzParams { alpha, tol, max_iter };
    damped_walk_sums(g.arcs(), &p).map(|v| {
        ScoreVector::new("katz", v)
            .with_param("alpha", alpha)
            .with_param("alpha_bound", bound.value)
    })
}

/// `sum_{k >= 0} alpha^k M^k 1` for the operator with arcs `arcs`.
fn damped_walk_sums(arcs: &Adjacency, p: &KatzParams) -> Result<Vec<f64>> {
    let m = arcs.node_count();
    let mut sum = vec![1.0; m];
    let mut term = vec![1.0; m];
    let mut next = vec![0.0; m];
    let mut residual = if m == 0 { 0.0 } else { 1.0 };
    for _ in 0..p.max_iter {
        arcs.mul_vec(&term, &mut next);
        let mut term_norm = 0.0f64;
        let mut sum_norm = 0.0f64;
        for i in 0..m {
            let t = p.alpha * next[i];
            term[i] = t;
            sum[i] += t;
            term_norm = term_norm.max(t.abs());
            sum_norm = sum_norm.max(sum[i].abs());
        }
        residual = term_norm;
        if term_norm <= p.tol * sum_norm.max(1.0) {
            return Ok(sum);
        }
        if !term_norm.is_finite() {
            break;
        }
    }
    if m == 0 || residual == 0.0 {
        return Ok(sum);
    }
    Err(Error::NotConverged {
        iterations: p.max_iter,
        residual,
        partial: sum,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generators, NodeId, RefillSet};

    fn inst<'g>(g: &'g Graph, omega: &[usize], kappa: usize) -> SocInstance<'g> {
        let om = RefillSet::new(g.node_count(), omega.iter().map(|&v| NodeId(v))).unwrap();
        SocInstance::new(g, om, kappa).unwrap()
    }

    #[test]
    fn single_edge_kappa_one() {
        let g = generators::path(2);
        let c = soc_katz(&inst(&g, &[], 1), &KatzParams::new(0.5)).unwrap();
        assert_eq!(c.values, vec![1.5, 1.5]);
    }

    #[test]
    fn path_with_middle_refill() {
        // Hand solution of y = 1 + alpha * B y on the reachable states gives [3, 4, 3].
        let g = generators::path(3);
        let c = soc_katz(&inst(&g, &[1], 1), &KatzParams::new(0.5)).unwrap();
        for (got, want) in c.values.iter().zip([3.0, 4.0, 3.0]) {
            assert!((got - want).abs() < 1e-9, "{got} vs {want}");
        }
    }

    #[test]
    fn standard_katz_examples() {
        let empty = Graph::from_edges(3, &[], false).unwrap();
        assert_eq!(standard_katz(&empty, 0.5, 1e-12, 100).unwrap().values, vec![1.0; 3]);
        let edge = generators::path(2);
        let c = standard_katz(&edge, 0.5, 1e-12, 1000).unwrap();
        for v in c.values {
            assert!((v - 2.0).abs() < 1e-10);
        }
    }

    #[test]
    fn small_alpha_is_one_plus_alpha_degree() {
        let g = generators::star(4);
        let alpha = 1e-6;
        let c = soc_katz(&inst(&g, &[], 3), &KatzParams::new(alpha)).unwrap();
        assert!((c.values[0] - (1.0 + 4.0 * alpha)).abs() < 1e-10);
        assert!((c.values[1] - (1.0 + alpha)).abs() < 1e-10);
    }

    #[test]
    fn alpha_above_bound_is_rejected() {
        let g = generators::cycle(5);
        let err = standard_katz(&g, 0.5, 1e-10, 1000).unwrap_err();
        match err {
            Error::AlphaTooLarge { bound, .. } => assert!((bound - 0.5).abs() < 1e-8),
            other => panic!("{other:?}"),
        }
        let all = RefillSet::full(5);
        let i = SocInstance::new(&g, all, 2).unwrap();
        assert!(matches!(soc_katz(&i, &KatzParams::new(0.6)), Err(Error::AlphaTooLarge { .. })));
        assert!(soc_katz(&i, &KatzParams::new(-0.1)).is_err());
    }

    #[test]
    fn max_alpha_nilpotent_and_full_refill() {
        let arc = Graph::from_edges(2, &[(0, 1)], true).unwrap();
        let b = max_alpha(&inst(&arc, &[], 1), 1e-10);
        assert!(b.nilpotent && b.value.is_infinite());

        let g = generators::grid(4, 4);
        let full = SocInstance::new(&g, RefillSet::full(16), 3).unwrap();
        let soc = max_alpha(&full, 1e-12);
        let std = max_alpha_standard(&g, 1e-12);
        assert!((soc.value - std.value).abs() < 1e-9);
    }

    #[test]
    fn non_convergence_returns_partial_sums() {
        let g = generators::cycle(4);
        let p = KatzParams {
            alpha: 0.49,
            tol: 1e-14,
            max_iter: 3,
        };
        match damped_walk_sums(g.arcs(), &p) {
            Err(Error::NotConverged { partial, iterations, .. }) => {
                assert_eq!(iterations, 3);
                // 1 + 2a + 4a^2 + 8a^3
                let a = 0.49;
                let want = 1.0 + 2.0 * a + 4.0 * a * a + 8.0 * a * a * a;
                assert!((partial[0] - want).abs() < 1e-12);
            }
            other => panic!("{other:?}"),
        }
    }
}
