//! The state graph on `(node, charge)` pairs.
//!
//! States are laid out in blocks of `n`: block `b` holds charge level `kappa - b`, so block 0 is
//! the full-charge block in which every feasible walk starts. The optional starred layer
//! (`(u, *)`, one per node) follows the numeric blocks and absorbs arrivals at any charge.
//!
//! Arcs leaving `(u, i)` for each arc `u -> v` of the base graph:
//! - to `(v, kappa)` when `v` is a refill node;
//! - to `(v, i - 1)` otherwise, provided `i >= 1`.
//!
//! The row action of the numeric part is the block operator usually written `B_kappa`.

use std::collections::VecDeque;
use std::fmt;
use std::io::Write;

use crate::error::{Error, Result};
use crate::graph::{Adjacency, NodeId, SocInstance};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Soc {
    Level(usize),
    Star,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct StateNode {
    pub node: NodeId,
    pub soc: Soc,
}

impl StateNode {
    pub fn new(node: usize, soc: usize) -> Self {
        StateNode {
            node: NodeId(node),
            soc: Soc::Level(soc),
        }
    }

    pub fn star(node: usize) -> Self {
        StateNode {
            node: NodeId(node),
            soc: Soc::Star,
        }
    }
}

impl fmt::Display for StateNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.soc {
            Soc::Level(i) => write!(f, "({},{})", self.node, i),
            Soc::Star => write!(f, "({},*)", self.node),
        }
    }
}

/// Flat-index arithmetic for a state space with `n` nodes and budget `kappa`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StateLayout {
    pub n: usize,
    pub kappa: usize,
}

impl StateLayout {
    /// Number of numeric states, `n (kappa + 1)`.
    #[inline]
    pub fn numeric_count(&self) -> usize {
        self.n * (self.kappa + 1)
    }

    #[inline]
    pub fn level(&self, node: usize, soc: usize) -> usize {
        debug_assert!(soc <= self.kappa && node < self.n);
        (self.kappa - soc) * self.n + node
    }

    #[inline]
    pub fn star(&self, node: usize) -> usize {
        (self.kappa + 1) * self.n + node
    }

    #[inline]
    pub fn index(&self, s: StateNode) -> usize {
        match s.soc {
            Soc::Level(i) => self.level(s.node.0, i),
            Soc::Star => self.star(s.node.0),
        }
    }

    #[inline]
    pub fn node_of(&self, idx: usize) -> usize {
        idx % self.n
    }

    #[inline]
    pub fn is_star(&self, idx: usize) -> bool {
        idx >= self.numeric_count()
    }

    pub fn state(&self, idx: usize) -> StateNode {
        let node = NodeId(idx % self.n);
        let block = idx / self.n;
        let soc = if block > self.kappa {
            Soc::Star
        } else {
            Soc::Level(self.kappa - block)
        };
        StateNode { node, soc }
    }
}

/// Calls `emit(head)` for every numeric successor of numeric state `(u, soc)`.
#[inline]
pub(crate) fn for_each_successor(
    inst: &SocInstance<'_>,
    layout: StateLayout,
    u: usize,
    soc: usize,
    mut emit: impl FnMut(usize),
) {
    for &v in inst.graph().arcs().neighbors(u) {
        if let Some(j) = inst.next_soc(soc, v) {
            emit(layout.level(v, j));
        }
    }
}

#[derive(Clone, Debug)]
pub struct StateGraph<'g> {
    instance: SocInstance<'g>,
    layout: StateLayout,
    starred: bool,
    arcs: Adjacency,
}

impl<'g> StateGraph<'g> {
    pub fn build(inst: &SocInstance<'g>, starred: bool) -> Self {
        let layout = StateLayout {
            n: inst.node_count(),
            kappa: inst.kappa(),
        };
        let total = layout.numeric_count() + if starred { layout.n } else { 0 };
        let mut lists = Vec::with_capacity(total);
        for idx in 0..layout.numeric_count() {
            let u = layout.node_of(idx);
            let soc = inst.kappa() - idx / layout.n;
            let mut heads = Vec::with_capacity(inst.graph().out_degree(NodeId(u)) + 1);
            for_each_successor(inst, layout, u, soc, |h| heads.push(h));
            if starred {
                heads.push(layout.star(u));
            }
            heads.sort_unstable();
            lists.push(heads);
        }
        if starred {
            lists.resize_with(total, Vec::new);
        }
        StateGraph {
            instance: inst.clone(),
            layout,
            starred,
            arcs: Adjacency::from_lists(lists),
        }
    }

    pub fn instance(&self) -> &SocInstance<'g> {
        &self.instance
    }

    pub fn layout(&self) -> StateLayout {
        self.layout
    }

    pub fn is_starred(&self) -> bool {
        self.starred
    }

    pub fn state_count(&self) -> usize {
        self.arcs.node_count()
    }

    pub fn arcs(&self) -> &Adjacency {
        &self.arcs
    }

    pub fn index_of(&self, s: StateNode) -> Result<usize> {
        let ok = s.node.0 < self.layout.n
            && match s.soc {
                Soc::Level(i) => i <= self.layout.kappa,
                Soc::Star => self.starred,
            };
        if ok {
            Ok(self.layout.index(s))
        } else {
            Err(Error::InvalidParameter(format!("state {s} not in this state graph")))
        }
    }

    pub fn state_at(&self, idx: usize) -> StateNode {
        self.layout.state(idx)
    }

    /// `B_kappa x`, computed by arc traversal.
    pub fn apply_bkappa(&self, x: &[f64]) -> Result<Vec<f64>> {
        if self.starred {
            return Err(Error::InvalidParameter(
                "apply_bkappa needs the unstarred state graph".into(),
            ));
        }
        if x.len() != self.state_count() {
            return Err(Error::DimensionMismatch {
                expected: self.state_count(),
                got: x.len(),
            });
        }
        let mut y = vec![0.0; x.len()];
        self.arcs.mul_vec(x, &mut y);
        Ok(y)
    }

    /// Debug dump, one `(u,i) -> (v,j)` line per arc, using external node labels.
    pub fn write_arc_list<W: Write>(&self, mut out: W) -> Result<()> {
        let g = self.instance.graph();
        let show = |idx: usize| {
            let s = self.layout.state(idx);
            match s.soc {
                Soc::Level(i) => format!("({},{})", g.label(s.node), i),
                Soc::Star => format!("({},*)", g.label(s.node)),
            }
        };
        for (a, b) in self.arcs.arcs() {
            writeln!(out, "{} -> {}", show(a), show(b))?;
        }
        Ok(())
    }
}

/// Feasible-walk counts of one length, `counts[i * n + j]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WalkCounts {
    pub n: usize,
    pub counts: Vec<u64>,
    /// Set when some count exceeded `u64::MAX` and was clamped.
    pub saturated: bool,
}

impl WalkCounts {
    pub fn get(&self, i: usize, j: usize) -> u64 {
        self.counts[i * self.n + j]
    }

    pub fn row_sum(&self, i: usize) -> u64 {
        self.counts[i * self.n..(i + 1) * self.n]
            .iter()
            .fold(0u64, |a, &b| a.saturating_add(b))
    }
}

/// Number of feasible walks of length exactly `k` between every ordered pair, starting with
/// full charge and ending at any charge level.
pub fn count_feasible_walks(inst: &SocInstance<'_>, k: usize) -> WalkCounts {
    let sg = StateGraph::build(inst, false);
    let layout = sg.layout();
    let n = layout.n;
    let states = sg.state_count();
    let mut counts = vec![0u64; n * n];
    let mut saturated = false;
    let mut cur = vec![0u64; states];
    let mut next = vec![0u64; states];
    for i in 0..n {
        cur.iter_mut().for_each(|c| *c = 0);
        cur[layout.level(i, inst.kappa())] = 1;
        for _ in 0..k {
            next.iter_mut().for_each(|c| *c = 0);
            for (a, &ca) in cur.iter().enumerate() {
                if ca == 0 {
                    continue;
                }
                for &b in sg.arcs().neighbors(a) {
                    let (sum, over) = next[b].overflowing_add(ca);
                    next[b] = if over { u64::MAX } else { sum };
                    saturated |= over;
                }
            }
            std::mem::swap(&mut cur, &mut next);
        }
        for (idx, &c) in cur.iter().enumerate() {
            let cell = &mut counts[i * n + layout.node_of(idx)];
            let (sum, over) = cell.overflowing_add(c);
            *cell = if over { u64::MAX } else { sum };
            saturated |= over;
        }
    }
    WalkCounts { n, counts, saturated }
}

/// Length of a shortest feasible walk from `s` to `t`, or `None` when no feasible walk exists.
///
/// Equals the BFS distance from `(s, kappa)` to `(t, *)` in the starred state graph minus one.
pub fn shortest_feasible_walk_length(
    inst: &SocInstance<'_>,
    s: NodeId,
    t: NodeId,
) -> Result<Option<usize>> {
    let g = inst.graph();
    g.check_node(s)?;
    g.check_node(t)?;
    if s == t {
        return Ok(Some(0));
    }
    let layout = StateLayout {
        n: inst.node_count(),
        kappa: inst.kappa(),
    };
    let mut dist = vec![usize::MAX; layout.numeric_count()];
    let start = layout.level(s.0, inst.kappa());
    dist[start] = 0;
    let mut queue = VecDeque::from([start]);
    while let Some(a) = queue.pop_front() {
        let u = layout.node_of(a);
        if u == t.0 {
            return Ok(Some(dist[a]));
        }
        let soc = inst.kappa() - a / layout.n;
        let d = dist[a];
        for_each_successor(inst, layout, u, soc, |b| {
            if dist[b] == usize::MAX {
                dist[b] = d + 1;
                queue.push_back(b);
            }
        });
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generators, Graph, RefillSet};

    fn omega(n: usize, members: &[usize]) -> RefillSet {
        RefillSet::new(n, members.iter().map(|&v| NodeId(v))).unwrap()
    }

    fn arc_set(sg: &StateGraph<'_>) -> Vec<(StateNode, StateNode)> {
        let mut v: Vec<_> = sg
            .arcs()
            .arcs()
            .map(|(a, b)| (sg.state_at(a), sg.state_at(b)))
            .collect();
        v.sort_by_key(|(a, b)| (sg.layout().index(*a), sg.layout().index(*b)));
        v
    }

    #[test]
    fn layout_round_trip() {
        let l = StateLayout { n: 5, kappa: 3 };
        assert_eq!(l.level(2, 3), 2);
        assert_eq!(l.level(2, 0), 17);
        assert_eq!(l.star(4), 24);
        for idx in 0..25 {
            assert_eq!(l.index(l.state(idx)), idx);
        }
    }

    #[test]
    fn single_arc_no_refill() {
        let g = Graph::from_edges(2, &[(0, 1)], true).unwrap();
        let inst = SocInstance::new(&g, RefillSet::empty(2), 1).unwrap();
        let sg = StateGraph::build(&inst, false);
        assert_eq!(arc_set(&sg), vec![(StateNode::new(0, 1), StateNode::new(1, 0))]);
    }

    #[test]
    fn single_arc_refill_head() {
        let g = Graph::from_edges(2, &[(0, 1)], true).unwrap();
        let inst = SocInstance::new(&g, omega(2, &[1]), 1).unwrap();
        let sg = StateGraph::build(&inst, false);
        let arcs = arc_set(&sg);
        assert_eq!(arcs.len(), 2);
        assert!(arcs.contains(&(StateNode::new(0, 1), StateNode::new(1, 1))));
        assert!(arcs.contains(&(StateNode::new(0, 0), StateNode::new(1, 1))));
    }

    #[test]
    fn starred_path_enumeration() {
        let g = generators::path(3);
        let inst = SocInstance::new(&g, RefillSet::empty(3), 2).unwrap();
        let sg = StateGraph::build(&inst, true);
        assert_eq!(sg.state_count(), 12);
        let i = sg.index_of(StateNode::new(1, 0)).unwrap();
        let heads: Vec<_> = sg.arcs().neighbors(i).iter().map(|&h| sg.state_at(h)).collect();
        assert_eq!(heads, vec![StateNode::star(1)]);
        // no arcs leave stars
        for v in 0..3 {
            let s = sg.index_of(StateNode::star(v)).unwrap();
            assert!(sg.arcs().neighbors(s).is_empty());
        }
        // every numeric state has exactly one star arc
        let star_arcs = sg.arcs().arcs().filter(|&(_, b)| sg.layout().is_star(b)).count();
        assert_eq!(star_arcs, 9);
    }

    #[test]
    fn arc_classification_invariant() {
        let g = generators::grid(3, 3);
        let inst = SocInstance::new(&g, omega(9, &[4, 8]), 3).unwrap();
        let sg = StateGraph::build(&inst, false);
        for (a, b) in sg.arcs().arcs() {
            let (sa, sb) = (sg.state_at(a), sg.state_at(b));
            assert!(g.arcs().neighbors(sa.node.0).contains(&sb.node.0));
            let (Soc::Level(i), Soc::Level(j)) = (sa.soc, sb.soc) else { panic!() };
            if inst.omega().contains(sb.node.0) {
                assert_eq!(j, 3);
            } else {
                assert_eq!(j + 1, i);
            }
        }
    }

    #[test]
    fn apply_bkappa_examples() {
        let g = Graph::from_edges(2, &[(0, 1)], true).unwrap();
        let inst = SocInstance::new(&g, RefillSet::empty(2), 1).unwrap();
        let sg = StateGraph::build(&inst, false);
        assert_eq!(sg.apply_bkappa(&[0.0; 4]).unwrap(), vec![0.0; 4]);
        let mut e = vec![0.0; 4];
        e[sg.index_of(StateNode::new(1, 0)).unwrap()] = 1.0;
        let y = sg.apply_bkappa(&e).unwrap();
        assert_eq!(y[sg.index_of(StateNode::new(0, 1)).unwrap()], 1.0);
        assert_eq!(y.iter().sum::<f64>(), 1.0);
        assert!(matches!(sg.apply_bkappa(&[0.0; 3]), Err(Error::DimensionMismatch { .. })));
        let starred = StateGraph::build(&inst, true);
        assert!(starred.apply_bkappa(&[0.0; 6]).is_err());
    }

    #[test]
    fn walk_count_examples() {
        let g = generators::path(3);
        let inst = SocInstance::new(&g, RefillSet::empty(3), 1).unwrap();
        let c0 = count_feasible_walks(&inst, 0);
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(c0.get(i, j), u64::from(i == j));
            }
        }
        assert!(count_feasible_walks(&inst, 2).counts.iter().all(|&c| c == 0));

        let inst = SocInstance::new(&g, omega(3, &[1]), 1).unwrap();
        let c2 = count_feasible_walks(&inst, 2);
        assert_eq!(c2.get(0, 2), 1);
        assert_eq!(c2.get(2, 0), 1);
        // 0 -> 1 -> 0 is feasible too (refill at 1)
        assert_eq!(c2.get(0, 0), 1);
    }

    #[test]
    fn shortest_feasible_examples() {
        let g = generators::path(3);
        let run = |kappa, om: &[usize], s, t| {
            let inst = SocInstance::new(&g, omega(3, om), kappa).unwrap();
            shortest_feasible_walk_length(&inst, NodeId(s), NodeId(t)).unwrap()
        };
        assert_eq!(run(2, &[], 0, 2), Some(2));
        assert_eq!(run(1, &[], 0, 2), None);
        assert_eq!(run(1, &[1], 0, 2), Some(2));
        assert_eq!(run(1, &[], 1, 1), Some(0));
    }

    #[test]
    fn detour_through_refill() {
        // 0-1-2-3-4 path plus a spur 2-5 where 5 refills: with kappa 3 the walk 0->4 must
        // detour 0,1,2,5,2,3,4.
        let g = Graph::from_edges(6, &[(0, 1), (1, 2), (2, 3), (3, 4), (2, 5)], false).unwrap();
        let inst = SocInstance::new(&g, omega(6, &[5]), 3).unwrap();
        assert_eq!(shortest_feasible_walk_length(&inst, NodeId(0), NodeId(4)).unwrap(), Some(6));
    }

    #[test]
    fn arc_list_dump() {
        let g = Graph::from_edges(2, &[(0, 1)], true).unwrap();
        let inst = SocInstance::new(&g, RefillSet::empty(2), 1).unwrap();
        let mut buf = Vec::new();
        StateGraph::build(&inst, true).write_arc_list(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("(0,1) -> (1,0)\n"));
        assert!(text.contains("(1,0) -> (1,*)\n"));
    }
}
