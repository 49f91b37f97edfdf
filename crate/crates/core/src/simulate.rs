//! Spreading and traffic simulators producing realized centrality scores.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;
use std::num::NonZeroUsize;
use std::rc::Rc;
use std::str::FromStr;

use lru::LruCache;
use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Adjacency, NodeId, SocInstance};
use crate::rng;
use crate::rwbc::StPair;
use crate::score::ScoreVector;
use crate::state::{StateGraph, StateLayout};

pub const DEFAULT_SIR_MAX_STEPS: usize = 10_000;
pub const DEFAULT_INJECTION_RATE: f64 = 0.5;
pub const DEFAULT_CACHE_BYTES: usize = 256 << 20;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SirParams {
    pub alpha: f64,
    pub runs: usize,
    pub max_steps: usize,
    pub seed: u64,
}

impl SirParams {
    pub fn new(alpha: f64, runs: usize, seed: u64) -> Self {
        SirParams {
            alpha,
            runs,
            max_steps: DEFAULT_SIR_MAX_STEPS,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::InvalidParameter(format!(
                "transmission probability {} outside [0, 1]",
                self.alpha
            )));
        }
        if self.runs == 0 {
            return Err(Error::InvalidParameter("runs must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SirReport {
    pub episodes: u64,
    /// Episodes stopped by `max_steps` with infected nodes remaining.
    pub truncated: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SimReport {
    Sir(SirReport),
    Hopping(HoppingReport),
}

/// Realized per-node scores plus run counters.
#[derive(Clone, Debug, PartialEq)]
pub struct SimOutcome {
    pub scores: ScoreVector,
    pub report: SimReport,
}

const SUSCEPTIBLE: u8 = 0;
const INFECTED: u8 = 1;
const RECOVERED: u8 = 2;
const NEWLY_INFECTED: u8 = 3;

struct SirScratch {
    status: Vec<u8>,
    soc: Vec<usize>,
    touched: Vec<usize>,
    infected: Vec<(usize, usize)>,
    next: Vec<usize>,
}

impl SirScratch {
    fn new(n: usize) -> Self {
        SirScratch {
            status: vec![SUSCEPTIBLE; n],
            soc: vec![0; n],
            touched: Vec::new(),
            infected: Vec::new(),
            next: Vec::new(),
        }
    }

    /// One episode seeded at `seed`; returns the number of nodes ever infected and whether the
    /// step limit cut it short.
    fn episode<R: Rng>(
        &mut self,
        inst: &SocInstance<'_>,
        p: &SirParams,
        seed: usize,
        rng: &mut R,
    ) -> (usize, bool) {
        let arcs = inst.graph().arcs();
        self.touched.clear();
        self.infected.clear();
        self.status[seed] = INFECTED;
        self.touched.push(seed);
        self.infected.push((seed, inst.kappa()));
        let mut rounds = 0;
        while !self.infected.is_empty() && rounds < p.max_steps {
            rounds += 1;
            self.next.clear();
            for &(u, su) in &self.infected {
                for &w in arcs.neighbors(u) {
                    let st = self.status[w];
                    if st != SUSCEPTIBLE && st != NEWLY_INFECTED {
                        continue;
                    }
                    let Some(s) = inst.next_soc(su, w) else { continue };
                    if !(rng.random::<f64>() < p.alpha) {
                        continue;
                    }
                    if st == SUSCEPTIBLE {
                        self.status[w] = NEWLY_INFECTED;
                        self.soc[w] = s;
                        self.touched.push(w);
                        self.next.push(w);
                    } else {
                        self.soc[w] = self.soc[w].max(s);
                    }
                }
            }
            for &(u, _) in &self.infected {
                self.status[u] = RECOVERED;
            }
            self.infected.clear();
            for &w in &self.next {
                self.status[w] = INFECTED;
                self.infected.push((w, self.soc[w]));
            }
        }
        let truncated = !self.infected.is_empty();
        for &v in &self.touched {
            self.status[v] = SUSCEPTIBLE;
        }
        (self.touched.len(), truncated)
    }
}

/// Outbreak size of every episode seeded at `node`, in episode order.
pub fn sir_outbreak_sizes(inst: &SocInstance<'_>, p: &SirParams, node: NodeId) -> Result<Vec<usize>> {
    p.validate()?;
    inst.graph().check_node(node)?;
    let mut scratch = SirScratch::new(inst.node_count());
    Ok((0..p.runs)
        .map(|e| {
            let mut r = rng::stream(p.seed, &[node.0 as u64, e as u64]);
            scratch.episode(inst, p, node.0, &mut r).0
        })
        .collect())
}

/// Mean number of ever-infected nodes when the outbreak starts at each node.
///
/// Infection spreads in synchronous rounds and every infected node recovers after one round.
/// A node may pass the infection to a susceptible neighbour `w` when `w` is a refill node or its
/// own residual charge is at least one; `w` then holds full charge if it is a refill node and one
/// less than its best infecting parent otherwise. The seed starts with full charge.
pub fn sir_influence(inst: &SocInstance<'_>, p: &SirParams) -> Result<SimOutcome> {
    p.validate()?;
    let n = inst.node_count();
    let per_node: Vec<(f64, u64)> = (0..n)
        .into_par_iter()
        .map_init(
            || SirScratch::new(n),
            |scratch, v| {
                let mut total = 0usize;
                let mut truncated = 0u64;
                for e in 0..p.runs {
                    let mut r = rng::stream(p.seed, &[v as u64, e as u64]);
                    let (size, cut) = scratch.episode(inst, p, v, &mut r);
                    total += size;
                    truncated += cut as u64;
                }
                (total as f64 / p.runs as f64, truncated)
            },
        )
        .collect();
    let truncated = per_node.iter().map(|x| x.1).sum();
    let report = SirReport {
        episodes: (n * p.runs) as u64,
        truncated,
    };
    let scores = ScoreVector::new("sir-influence", per_node.into_iter().map(|x| x.0).collect())
        .with_param("alpha", p.alpha)
        .with_param("runs", p.runs as u64)
        .with_param("max_steps", p.max_steps as u64)
        .with_param("kappa", inst.kappa() as u64)
        .with_param("truncated_episodes", truncated)
        .with_omega(inst.omega_descriptor())
        .with_seed(p.seed);
    Ok(SimOutcome {
        scores,
        report: SimReport::Sir(report),
    })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RoutingPolicy {
    /// Follows a shortest feasible walk, drawn uniformly among all of them at injection.
    #[default]
    ShortestFeasible,
    /// Steps to a uniformly chosen successor state from which the target is still reachable.
    RandomFeasible,
}

impl fmt::Display for RoutingPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RoutingPolicy::ShortestFeasible => "shortest-feasible",
            RoutingPolicy::RandomFeasible => "random-feasible",
        })
    }
}

impl FromStr for RoutingPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "shortest" | "shortest-feasible" => Ok(RoutingPolicy::ShortestFeasible),
            "random" | "random-feasible" => Ok(RoutingPolicy::RandomFeasible),
            other => Err(Error::InvalidParameter(format!("unknown routing policy `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PairSampler {
    /// Uniform over ordered pairs admitting a feasible walk; infeasible draws are redrawn.
    #[default]
    UniformFeasible,
    /// Uniform over a fixed list.
    Fixed(Vec<StPair>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HoppingParams {
    pub policy: RoutingPolicy,
    pub duration: u64,
    /// Expected particles created per step: `floor(rate)` plus one more with probability
    /// `rate - floor(rate)`.
    pub injection_rate: f64,
    pub pairs: PairSampler,
    pub max_injections: Option<u64>,
    pub seed: u64,
    /// Memory allowed for cached per-target routing tables.
    pub cache_bytes: usize,
}

impl HoppingParams {
    pub fn new(policy: RoutingPolicy, duration: u64, seed: u64) -> Self {
        HoppingParams {
            policy,
            duration,
            injection_rate: DEFAULT_INJECTION_RATE,
            pairs: PairSampler::UniformFeasible,
            max_injections: None,
            seed,
            cache_bytes: DEFAULT_CACHE_BYTES,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.duration == 0 {
            return Err(Error::InvalidParameter("duration must be positive".into()));
        }
        if !(self.injection_rate.is_finite() && self.injection_rate >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "injection rate {} must be finite and non-negative",
                self.injection_rate
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct HoppingReport {
    pub steps: u64,
    /// Particles created; equals `delivered + in_flight + pending`.
    pub generated: u64,
    pub delivered: u64,
    pub in_flight: u64,
    /// Created but never placed because the source stayed occupied.
    pub pending: u64,
    /// Creations whose source was occupied at the time.
    pub delayed_injections: u64,
    pub resampled_pairs: u64,
    pub blocked_moves: u64,
    /// Closed cycles of mutually blocked particles that advanced together.
    pub rotations: u64,
}

/// Distance to the target set and number of shortest walks, per state.
struct TargetTable {
    dist: Vec<u32>,
    count: Vec<f64>,
}

impl TargetTable {
    fn reaches(&self, state: usize) -> bool {
        self.dist[state] != u32::MAX
    }
}

struct Router<'a> {
    inst: &'a SocInstance<'a>,
    layout: StateLayout,
    forward: Adjacency,
    reverse: Adjacency,
    cache: LruCache<usize, Rc<TargetTable>>,
}

impl<'a> Router<'a> {
    fn new(inst: &'a SocInstance<'a>, cache_bytes: usize) -> Self {
        let sg = StateGraph::build(inst, false);
        let layout = sg.layout();
        let reverse = sg.arcs().transpose();
        let forward = sg.arcs().clone();
        let per_table = layout.numeric_count() * 12;
        let cap = (cache_bytes / per_table.max(1)).clamp(1, inst.node_count().max(1));
        Router {
            inst,
            layout,
            forward,
            reverse,
            cache: LruCache::new(NonZeroUsize::new(cap).unwrap()),
        }
    }

    fn table(&mut self, target: usize) -> Rc<TargetTable> {
        if let Some(t) = self.cache.get(&target) {
            return Rc::clone(t);
        }
        let t = Rc::new(self.build(target));
        self.cache.put(target, Rc::clone(&t));
        t
    }

    fn build(&self, target: usize) -> TargetTable {
        let m = self.layout.numeric_count();
        let mut dist = vec![u32::MAX; m];
        let mut count = vec![0.0; m];
        let mut queue = VecDeque::new();
        for i in 0..=self.inst.kappa() {
            let x = self.layout.level(target, i);
            dist[x] = 0;
            count[x] = 1.0;
            queue.push_back(x);
        }
        while let Some(x) = queue.pop_front() {
            let d = dist[x] + 1;
            for &p in self.reverse.neighbors(x) {
                if self.layout.node_of(p) == target {
                    continue;
                }
                if dist[p] == u32::MAX {
                    dist[p] = d;
                    queue.push_back(p);
                }
                if dist[p] == d {
                    count[p] += count[x];
                }
            }
        }
        TargetTable { dist, count }
    }

    fn start(&self, source: usize) -> usize {
        self.layout.level(source, self.inst.kappa())
    }

    fn shortest_route<R: Rng>(&self, table: &TargetTable, from: usize, rng: &mut R) -> Vec<usize> {
        let mut route = Vec::with_capacity(table.dist[from] as usize);
        let mut x = from;
        while table.dist[x] > 0 {
            let want = table.dist[x] - 1;
            let next: Vec<usize> = self.forward.neighbors(x).iter().copied().filter(|&y| table.dist[y] == want).collect();
            let total: f64 = next.iter().map(|&y| table.count[y]).sum();
            x = if total.is_finite() {
                let mut r = rng.random::<f64>() * total;
                let mut pick = *next.last().expect("a shortest successor exists");
                for &y in &next {
                    r -= table.count[y];
                    if r < 0.0 {
                        pick = y;
                        break;
                    }
                }
                pick
            } else {
                next[rng.random_range(0..next.len())]
            };
            route.push(x);
        }
        route.reverse();
        route
    }

    fn random_step<R: Rng>(&self, table: &TargetTable, from: usize, rng: &mut R) -> usize {
        let ok: Vec<usize> = self.forward.neighbors(from).iter().copied().filter(|&y| table.reaches(y)).collect();
        assert!(!ok.is_empty(), "particle stranded at state {from}");
        ok[rng.random_range(0..ok.len())]
    }
}

struct Particle {
    target: usize,
    state: usize,
    /// Remaining states of a precomputed walk, next one last.
    route: Vec<usize>,
    table: Rc<TargetTable>,
}

struct Pending {
    source: usize,
    target: usize,
    table: Rc<TargetTable>,
}

/// Occupation ratio of every node under a discrete-time particle-hopping model.
///
/// Each step first removes particles that reached their target, then lets every other particle
/// attempt one move in a random order (a move into an occupied node fails and the particle waits,
/// unless the blocked particles form a closed cycle, which then advances as a whole), then places
/// waiting and newly created particles on free sources (first come first served per source), and
/// finally records which nodes are occupied. A node's score is the fraction of steps it held a
/// particle.
pub fn particle_hopping(inst: &SocInstance<'_>, p: &HoppingParams) -> Result<SimOutcome> {
    p.validate()?;
    let n = inst.node_count();
    if n < 2 {
        return Err(Error::InvalidParameter("need at least two nodes".into()));
    }
    if let PairSampler::Fixed(list) = &p.pairs {
        if list.is_empty() {
            return Err(Error::InvalidParameter("fixed pair list is empty".into()));
        }
        for pair in list {
            inst.graph().check_node(pair.source)?;
            inst.graph().check_node(pair.target)?;
            if pair.source == pair.target {
                return Err(Error::InvalidParameter("pair with equal endpoints".into()));
            }
        }
    }
    let mut router = Router::new(inst, p.cache_bytes);
    let fixed_feasible = match &p.pairs {
        PairSampler::Fixed(list) => list.iter().any(|q| {
            let start = router.start(q.source.0);
            router.table(q.target.0).reaches(start)
        }),
        PairSampler::UniformFeasible => true,
    };
    let mut rng = rng::stream(p.seed, &[]);
    let layout = router.layout;
    let mut occupied = vec![false; n];
    let mut occupied_steps = vec![0u64; n];
    let mut particles: Vec<Particle> = Vec::new();
    let mut pending: Vec<VecDeque<Pending>> = (0..n).map(|_| VecDeque::new()).collect();
    let mut waiting: BTreeSet<usize> = BTreeSet::new();
    let mut pending_count = 0u64;
    let mut rep = HoppingReport::default();
    let whole = p.injection_rate.floor() as u64;
    let frac = p.injection_rate - p.injection_rate.floor();
    let max_draws = (100 * n * n).max(10_000);
    let mut occupant = vec![FREE; n];
    let mut want: Vec<usize> = Vec::new();
    let mut moved: Vec<bool> = Vec::new();
    let mut mark: Vec<u8> = Vec::new();

    let place = |router: &mut Router<'_>,
                     rng: &mut rng::SimRng,
                     occupied: &mut [bool],
                     particles: &mut Vec<Particle>,
                     q: Pending| {
        debug_assert!(!occupied[q.source]);
        occupied[q.source] = true;
        let state = router.start(q.source);
        let route = match p.policy {
            RoutingPolicy::ShortestFeasible => router.shortest_route(&q.table, state, rng),
            RoutingPolicy::RandomFeasible => Vec::new(),
        };
        particles.push(Particle {
            target: q.target,
            state,
            route,
            table: q.table,
        });
    };

    for _step in 0..p.duration {
        // arrivals from the previous step leave the network
        let before = particles.len();
        particles.retain(|q| {
            let at = layout.node_of(q.state);
            if at == q.target {
                occupied[at] = false;
                false
            } else {
                true
            }
        });
        rep.delivered += (before - particles.len()) as u64;

        let m = particles.len();
        for (i, q) in particles.iter().enumerate() {
            occupant[layout.node_of(q.state)] = i;
        }
        let mut order: Vec<usize> = (0..m).collect();
        order.shuffle(&mut rng);
        want.clear();
        want.resize(m, usize::MAX);
        moved.clear();
        moved.resize(m, false);
        for &i in &order {
            let q = &mut particles[i];
            let next = match p.policy {
                RoutingPolicy::ShortestFeasible => *q.route.last().expect("route ends at target"),
                RoutingPolicy::RandomFeasible => router.random_step(&q.table, q.state, &mut rng),
            };
            want[i] = next;
            let from = layout.node_of(q.state);
            let to = layout.node_of(next);
            if to != from && occupied[to] {
                continue;
            }
            occupied[from] = false;
            occupant[from] = FREE;
            occupied[to] = true;
            occupant[to] = i;
            advance(q, next, p.policy);
            moved[i] = true;
        }

        // blocked particles waiting on each other in a closed cycle advance together
        mark.clear();
        mark.resize(m, 0);
        for &i in &order {
            let mut chain = Vec::new();
            let mut j = i;
            while !moved[j] && mark[j] == 0 {
                mark[j] = 1;
                chain.push(j);
                j = occupant[layout.node_of(want[j])];
                if j == FREE {
                    break;
                }
            }
            if j != FREE && !moved[j] && mark[j] == 1 {
                let start = chain.iter().position(|&c| c == j).expect("cycle closes on the chain");
                for &c in &chain[start..] {
                    let to = layout.node_of(want[c]);
                    occupant[to] = c;
                    advance(&mut particles[c], want[c], p.policy);
                    moved[c] = true;
                }
                rep.rotations += 1;
            }
            for &c in &chain {
                mark[c] = 2;
            }
        }
        rep.blocked_moves += moved.iter().filter(|&&x| !x).count() as u64;
        for q in &particles {
            occupant[layout.node_of(q.state)] = FREE;
        }

        let free: Vec<usize> = waiting.iter().copied().filter(|&v| !occupied[v]).collect();
        for v in free {
            let q = pending[v].pop_front().expect("waiting sources have a queue");
            if pending[v].is_empty() {
                waiting.remove(&v);
            }
            pending_count -= 1;
            place(&mut router, &mut rng, &mut occupied, &mut particles, q);
        }
        let mut create = whole + (frac > 0.0 && rng.random::<f64>() < frac) as u64;
        if let Some(cap) = p.max_injections {
            create = create.min(cap.saturating_sub(rep.generated));
        }
        for _ in 0..create {
            let Some((s, t, table)) = draw_pair(&mut router, &p.pairs, fixed_feasible, max_draws, &mut rng, &mut rep)? else {
                continue;
            };
            rep.generated += 1;
            let q = Pending { source: s, target: t, table };
            if occupied[s] {
                rep.delayed_injections += 1;
                pending[s].push_back(q);
                waiting.insert(s);
                pending_count += 1;
            } else {
                place(&mut router, &mut rng, &mut occupied, &mut particles, q);
            }
        }

        let mut seen = 0usize;
        for q in &particles {
            occupied_steps[layout.node_of(q.state)] += 1;
            seen += 1;
        }
        assert_eq!(
            seen,
            occupied.iter().filter(|&&o| o).count(),
            "two particles share a node"
        );
        assert_eq!(
            rep.generated,
            rep.delivered + particles.len() as u64 + pending_count,
            "particle count not conserved"
        );
        rep.steps += 1;
    }
    let arrived = particles.iter().filter(|q| layout.node_of(q.state) == q.target).count() as u64;
    rep.delivered += arrived;
    rep.in_flight = particles.len() as u64 - arrived;
    rep.pending = pending_count;

    let ratios: Vec<f64> = occupied_steps.iter().map(|&c| c as f64 / p.duration as f64).collect();
    let scores = ScoreVector::new("occupation-ratio", ratios)
        .with_param("policy", p.policy.to_string())
        .with_param("duration", p.duration)
        .with_param("injection_rate", p.injection_rate)
        .with_param("kappa", inst.kappa() as u64)
        .with_param("generated", rep.generated)
        .with_param("delivered", rep.delivered)
        .with_param("resampled_pairs", rep.resampled_pairs)
        .with_param("delayed_injections", rep.delayed_injections)
        .with_omega(inst.omega_descriptor())
        .with_seed(p.seed);
    Ok(SimOutcome {
        scores,
        report: SimReport::Hopping(rep),
    })
}

const FREE: usize = usize::MAX;

fn advance(q: &mut Particle, next: usize, policy: RoutingPolicy) {
    q.state = next;
    if policy == RoutingPolicy::ShortestFeasible {
        q.route.pop();
    }
}

fn draw_pair(
    router: &mut Router<'_>,
    sampler: &PairSampler,
    any_feasible: bool,
    max_draws: usize,
    rng: &mut rng::SimRng,
    rep: &mut HoppingReport,
) -> Result<Option<(usize, usize, Rc<TargetTable>)>> {
    let n = router.inst.node_count();
    for _ in 0..max_draws {
        let (s, t) = match sampler {
            PairSampler::UniformFeasible => {
                let s = rng.random_range(0..n);
                let mut t = rng.random_range(0..n - 1);
                if t >= s {
                    t += 1;
                }
                (s, t)
            }
            PairSampler::Fixed(list) => {
                let q = list[rng.random_range(0..list.len())];
                (q.source.0, q.target.0)
            }
        };
        let table = router.table(t);
        if table.reaches(router.start(s)) {
            return Ok(Some((s, t, table)));
        }
        rep.resampled_pairs += 1;
        if !any_feasible {
            return Ok(None);
        }
    }
    Err(Error::InvalidParameter(format!(
        "no feasible source-target pair found in {max_draws} draws"
    )))
}
