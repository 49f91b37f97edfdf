//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and exits non-zero if
//! any failed.
//!
//! Long runs on published datasets are opt-in through environment variables holding edge-list
//! paths: `SOC_ROUTER_EDGES` (router-level internet), `SOC_MINNESOTA_EDGES` (Minnesota roads,
//! `.mtx` accepted) and `SOC_GNUTELLA_EDGES` (Gnutella peer-to-peer, reported without a threshold).

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use soc_centrality::betweenness::{soc_betweenness, soc_betweenness_scores, standard_betweenness, Endpoints};
use soc_centrality::graph::{generators, load_edge_list, EdgeListFormat};
use soc_centrality::katz::{max_alpha, max_alpha_standard, soc_katz, standard_katz, KatzParams, DEFAULT_TOL};
use soc_centrality::rwbc::{directed_rwbc_pair, walk_subgraph};
use soc_centrality::simulate::{particle_hopping, sir_influence, HoppingParams, RoutingPolicy, SimReport, SirParams};
use soc_centrality::state::count_feasible_walks;
use soc_centrality::stats::{kendall_tau, kendall_tau_naive, pair_counts, pair_counts_naive, RankPairSet};
use soc_centrality::testkit::{brute_soc_bc, current_flow_pair, enumerate_feasible_walks, monte_carlo_rwbc, OracleBudget};
use soc_centrality::{Graph, NodeId, RefillSet, SocInstance};

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

struct Instance {
    graph: Graph,
    omega: RefillSet,
    kappa: usize,
}

impl Instance {
    fn inst(&self) -> SocInstance<'_> {
        SocInstance::new(&self.graph, self.omega.clone(), self.kappa).unwrap()
    }
}

/// 200 small random instances: n <= 8, edge probability 0.3, kappa <= 3, random refill set.
fn small_instances() -> Vec<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_601);
    (0..200)
        .map(|i| {
            let n = rng.random_range(2..=8);
            let graph = generators::erdos_renyi(n, 0.3, i % 2 == 0, &mut rng);
            let members: Vec<NodeId> = (0..n).filter(|_| rng.random_bool(0.3)).map(NodeId).collect();
            let omega = RefillSet::new(n, members).unwrap();
            let kappa = rng.random_range(1..=3);
            Instance { graph, omega, kappa }
        })
        .collect()
}

fn walk_counting() -> Outcome {
    let budget = OracleBudget::default();
    let mut mismatches = 0;
    let mut cells = 0u64;
    for c in small_instances() {
        let inst = c.inst();
        let n = c.graph.node_count();
        let walks: Vec<Vec<Vec<NodeId>>> = (0..n * n)
            .map(|st| enumerate_feasible_walks(&inst, NodeId(st / n), NodeId(st % n), 6, &budget).unwrap())
            .collect();
        for k in 0..=6 {
            let counts = count_feasible_walks(&inst, k);
            for st in 0..n * n {
                let exact = walks[st].iter().filter(|w| w.len() == k + 1).count() as u64;
                cells += 1;
                if counts.get(st / n, st % n) != exact {
                    mismatches += 1;
                }
            }
        }
    }
    outcome(mismatches == 0, format!("{cells} (pair, length) counts compared, {mismatches} mismatches"))
}

fn betweenness_oracle() -> Outcome {
    let budget = OracleBudget::default();
    let mut worst = 0.0f64;
    let mut saturated = false;
    for c in small_instances() {
        let inst = c.inst();
        let fast = soc_betweenness_scores(&inst, Endpoints::Target);
        saturated |= fast.saturated;
        let slow = brute_soc_bc(&inst, &budget).unwrap();
        for (a, b) in fast.node.iter().zip(&slow.values) {
            worst = worst.max((a - b).abs());
        }
    }
    outcome(worst <= 1e-9 && !saturated, format!("max |difference| {worst:.3e} over 200 instances"))
}

fn reductions() -> Outcome {
    // (a) no refills and capacity equal to the longest shortest path
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut graphs: Vec<Graph> = small_instances().into_iter().map(|c| c.graph).collect();
    graphs.push(generators::grid(6, 6));
    graphs.push(generators::barabasi_albert(60, 2, &mut rng));
    graphs.push(generators::erdos_renyi(40, 0.08, true, &mut rng));
    let mut worst_bc = 0.0f64;
    for g in &graphs {
        let kappa = g.longest_shortest_path().max(1);
        let inst = SocInstance::new(g, RefillSet::empty(g.node_count()), kappa).unwrap();
        let a = soc_betweenness(&inst);
        let b = standard_betweenness(g);
        for (x, y) in a.values.iter().zip(&b.values) {
            worst_bc = worst_bc.max((x - y).abs());
        }
    }

    // (b) every node refills
    let mut worst_katz = 0.0f64;
    for g in &graphs {
        let bound = max_alpha_standard(g, DEFAULT_TOL);
        let alpha = if bound.nilpotent { 0.5 } else { 0.5 * bound.value };
        for kappa in [1, 3] {
            let inst = SocInstance::new(g, RefillSet::full(g.node_count()), kappa).unwrap();
            let a = soc_katz(&inst, &KatzParams::new(alpha)).unwrap();
            let b = standard_katz(g, alpha, DEFAULT_TOL, 10_000).unwrap();
            for (x, y) in a.values.iter().zip(&b.values) {
                worst_katz = worst_katz.max((x - y).abs() / y.abs());
            }
        }
    }

    // (c) random walks on undirected graphs are unit currents
    let mut worst_flow = 0.0f64;
    let mut pairs = 0;
    while pairs < 100 {
        let n = rng.random_range(3..=12);
        let g = generators::erdos_renyi(n, 0.35, false, &mut rng);
        let (s, t) = (rng.random_range(0..n), rng.random_range(0..n));
        if s == t || g.bfs_distances(NodeId(s))[t].is_none() {
            continue;
        }
        pairs += 1;
        let sol = directed_rwbc_pair(g.arcs(), s, t).unwrap().unwrap();
        let lap = current_flow_pair(&g, s, t).unwrap();
        let mut mine = vec![0.0; n];
        for (i, &v) in sol.nodes.iter().enumerate() {
            mine[v] = sol.net_flow[i];
        }
        for v in 0..n {
            worst_flow = worst_flow.max((mine[v] - lap[v]).abs());
        }
    }
    outcome(
        worst_bc <= 1e-9 && worst_katz <= 1e-8 && worst_flow <= 1e-6,
        format!(
            "(a) bc diff {worst_bc:.3e} on {} graphs, (b) katz rel diff {worst_katz:.3e}, (c) current-flow diff {worst_flow:.3e} on {pairs} pairs",
            graphs.len()
        ),
    )
}

fn spectral_domination() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(44);
    let mut worst = f64::NEG_INFINITY;
    for i in 0..100 {
        let n = rng.random_range(4..=40);
        let g = generators::erdos_renyi(n, rng.random_range(0.05..0.4), i % 2 == 1, &mut rng);
        let omega = RefillSet::sample(n, rng.random_range(0.05..=1.0), &mut rng).unwrap();
        let inst = SocInstance::new(&g, omega, rng.random_range(1..=6)).unwrap();
        let b = max_alpha(&inst, DEFAULT_TOL).spectral.value;
        let a = max_alpha_standard(&g, DEFAULT_TOL).spectral.value;
        worst = worst.max(b - a);
    }
    outcome(worst <= 1e-8, format!("max lambda(B) - lambda(A) = {worst:.3e} over 100 instances"))
}

fn sir_correlation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(500);
    let g = generators::barabasi_albert(500, 2, &mut rng);
    let omega = RefillSet::sample(500, 0.3, &mut rng).unwrap();
    let inst = SocInstance::new(&g, omega, 5).unwrap();
    let expected = soc_katz(&inst, &KatzParams::new(0.03)).unwrap();
    let realized = sir_influence(&inst, &SirParams::new(0.03, 1000, 17)).unwrap();
    let tau = kendall_tau(&RankPairSet::new(expected.values, realized.scores.values).unwrap()).unwrap();
    outcome(tau >= 0.80, format!("tau {tau:.4} on a 500-node preferential-attachment graph (threshold 0.80)"))
}

fn occupation_correlation() -> Outcome {
    let g = generators::grid(30, 30);
    let mut rng = ChaCha8Rng::seed_from_u64(900);
    let omega = RefillSet::sample(900, 0.2, &mut rng).unwrap();
    let inst = SocInstance::new(&g, omega, 20).unwrap();
    let expected = soc_betweenness(&inst);
    let mut p = HoppingParams::new(RoutingPolicy::ShortestFeasible, 30_000, 21);
    p.injection_rate = 4.0;
    let out = particle_hopping(&inst, &p).unwrap();
    let SimReport::Hopping(r) = &out.report else { unreachable!() };
    let tau = kendall_tau(&RankPairSet::new(expected.values, out.scores.values.clone()).unwrap()).unwrap();
    outcome(
        tau >= 0.70 && r.delivered >= 100_000,
        format!("tau {tau:.4} on a 30x30 grid after {} completed trips (threshold 0.70)", r.delivered),
    )
}

fn monte_carlo_rwbc_agreement() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut cases = Vec::new();
    while cases.len() < 50 {
        let n = rng.random_range(5..=20);
        let g = generators::erdos_renyi(n, rng.random_range(0.15..0.4), true, &mut rng);
        let (s, t) = (rng.random_range(0..n), rng.random_range(0..n));
        if s == t || walk_subgraph(g.arcs(), s, t).is_empty() {
            continue;
        }
        cases.push((g, s, t, cases.len() as u64));
    }
    let per_case: Vec<(usize, usize)> = cases
        .par_iter()
        .map(|(g, s, t, seed)| {
            let exact = directed_rwbc_pair(g.arcs(), *s, *t).unwrap().unwrap();
            let mc = monte_carlo_rwbc(g.arcs(), *s, *t, 100_000, *seed).unwrap();
            let within = (0..mc.nodes.len())
                .filter(|&i| (mc.net_flow[i] - exact.net_flow[i]).abs() <= 3.0 * mc.std_err[i] + 1e-12)
                .count();
            (within, mc.nodes.len())
        })
        .collect();
    let within: usize = per_case.iter().map(|x| x.0).sum();
    let total: usize = per_case.iter().map(|x| x.1).sum();
    let share = within as f64 / total as f64;
    outcome(share >= 0.95, format!("{within}/{total} nodes ({:.1}%) within 3 standard errors", 100.0 * share))
}

fn kendall() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut mismatches = 0;
    for i in 0..1000 {
        let n = rng.random_range(2..=300);
        let levels = if i % 2 == 0 { 5 } else { 1_000_000 };
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(0..levels) as f64).collect();
        let z: Vec<f64> = (0..n).map(|_| rng.random_range(0..levels) as f64 * 0.5).collect();
        let p = RankPairSet::new(y, z).unwrap();
        let same = pair_counts(&p).unwrap() == pair_counts_naive(&p).unwrap()
            && kendall_tau(&p).unwrap().to_bits() == kendall_tau_naive(&p).unwrap().to_bits();
        mismatches += !same as usize;
    }
    let t = |y: &[f64], z: &[f64]| kendall_tau(&RankPairSet::new(y.to_vec(), z.to_vec()).unwrap()).unwrap();
    let fixed = t(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]) == 1.0
        && t(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]) == -1.0
        && t(&[1.0, 2.0, 3.0], &[2.0, 1.0, 3.0]) == 1.0 / 3.0;
    outcome(mismatches == 0 && fixed, format!("{mismatches} mismatches on 1000 vectors, fixed examples hold: {fixed}"))
}

fn soc(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_soc")).args(args).output().expect("running soc")
}

fn files_under(root: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for e in std::fs::read_dir(&dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(root).unwrap().display().to_string(), std::fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let graph = tmp.path().join("graph.tsv");
    let graph_s = graph.to_str().unwrap();
    assert!(soc(&["generate", "--kind", "ba", "--nodes", "60", "--m", "2", "--seed", "4", "--out", graph_s]).status.success());
    let runs: Vec<Vec<String>> = vec![
        vec!["experiment", "--measure", "soc-katz", "--model", "sir", "--alpha", "0.1", "--kappa", "3", "--runs", "50", "--ratios", "0.2,0.5", "--reps", "3"],
        vec!["experiment", "--measure", "soc-bc", "--model", "hopping", "--kappa", "4", "--duration", "500", "--injection-rate", "1.5", "--ratios", "0.3", "--reps", "2"],
        vec!["experiment", "--measure", "soc-rwbc", "--model", "hopping", "--kappa", "4", "--pairs", "20", "--duration", "300", "--ratios", "0.5", "--reps", "2", "--tau-b"],
        vec!["centrality", "--measure", "soc-rwbc", "--kappa", "3", "--omega-ratio", "0.4", "--pairs", "30"],
        vec!["simulate", "--model", "hopping", "--policy", "random-feasible", "--kappa", "3", "--omega-ratio", "0.4", "--duration", "400"],
    ]
    .into_iter()
    .map(|v| v.into_iter().map(String::from).collect())
    .collect();
    let mut compared = 0;
    for (i, args) in runs.iter().enumerate() {
        let mut trees = Vec::new();
        let out = tmp.path().join(format!("run{i}"));
        for _ in 0..2 {
            let _ = std::fs::remove_dir_all(&out);
            let mut full: Vec<&str> = args.iter().map(|s| s.as_str()).collect();
            full.extend(["--input", graph_s, "--seed", "9", "--out", out.to_str().unwrap()]);
            let res = soc(&full);
            if !res.status.success() {
                return outcome(false, format!("`soc {}` failed: {}", args.join(" "), String::from_utf8_lossy(&res.stderr)));
            }
            trees.push(files_under(&out));
        }
        if trees[0].is_empty() || trees[0] != trees[1] {
            return outcome(false, format!("`soc {}` produced different files on rerun", args.join(" ")));
        }
        compared += trees[0].len();
    }
    outcome(true, format!("{compared} output files byte-identical across reruns"))
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len().is_multiple_of(2) { 0.5 * (v[m - 1] + v[m]) } else { v[m] }
}

fn katz_trend() -> Outcome {
    let g = generators::grid(10, 10);
    let alpha = 0.1;
    let katz = standard_katz(&g, alpha, DEFAULT_TOL, 10_000).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(56);
    let omegas: Vec<RefillSet> = (0..30).map(|_| RefillSet::sample(100, 0.1, &mut rng).unwrap()).collect();
    let medians: Vec<f64> = [2usize, 4, 8, 16]
        .iter()
        .map(|&kappa| {
            let taus = omegas
                .iter()
                .map(|om| {
                    let inst = SocInstance::new(&g, om.clone(), kappa).unwrap();
                    let s = soc_katz(&inst, &KatzParams::new(alpha)).unwrap();
                    kendall_tau(&RankPairSet::new(s.values, katz.values.clone()).unwrap()).unwrap()
                })
                .collect();
            median(taus)
        })
        .collect();
    let monotone = medians.windows(2).all(|w| w[1] >= w[0]);
    outcome(monotone, format!("median tau for kappa 2, 4, 8, 16: {medians:.4?}"))
}

fn router_full() -> Option<Outcome> {
    let path = std::path::PathBuf::from(std::env::var_os("SOC_ROUTER_EDGES")?);
    let g = load_edge_list(&path, edge_format(&path), false).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2114);
    let mut taus = Vec::new();
    for _ in 0..30 {
        let omega = RefillSet::sample(g.node_count(), 0.3, &mut rng).unwrap();
        let inst = SocInstance::new(&g, omega, 5).unwrap();
        let e = soc_katz(&inst, &KatzParams::new(0.03)).unwrap();
        let r = sir_influence(&inst, &SirParams::new(0.03, 10_000, rng.random())).unwrap();
        taus.push(kendall_tau(&RankPairSet::new(e.values, r.scores.values).unwrap()).unwrap());
    }
    let m = median(taus);
    Some(outcome((0.915..=1.0).contains(&m), format!("median tau {m:.4} on the router network (band 0.915 to 1.0)")))
}

fn edge_format(path: &Path) -> EdgeListFormat {
    match path.extension().and_then(|e| e.to_str()) {
        Some("mtx") => EdgeListFormat::MatrixMarket,
        Some("csv") => EdgeListFormat::Csv,
        _ => EdgeListFormat::SnapTsv,
    }
}

fn minnesota_full() -> Option<Outcome> {
    let path = std::path::PathBuf::from(std::env::var_os("SOC_MINNESOTA_EDGES")?);
    let g = load_edge_list(&path, edge_format(&path), false).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2642);
    let mut taus = Vec::new();
    for rep in 0..30 {
        let omega = RefillSet::sample(g.node_count(), 0.2, &mut rng).unwrap();
        let inst = SocInstance::new(&g, omega, 20).unwrap();
        let e = soc_betweenness(&inst);
        let mut p = HoppingParams::new(RoutingPolicy::ShortestFeasible, 50_000, rep);
        p.injection_rate = 4.0;
        let r = particle_hopping(&inst, &p).unwrap();
        taus.push(kendall_tau(&RankPairSet::new(e.values, r.scores.values).unwrap()).unwrap());
    }
    let m = median(taus);
    Some(outcome((0.76..=0.89).contains(&m), format!("median tau {m:.4} on the Minnesota road network (band 0.76 to 0.89)")))
}

fn gnutella_full() -> Option<f64> {
    let path = std::path::PathBuf::from(std::env::var_os("SOC_GNUTELLA_EDGES")?);
    let g = load_edge_list(&path, edge_format(&path), true).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(6301);
    let omega = RefillSet::sample(g.node_count(), 0.2, &mut rng).unwrap();
    let inst = SocInstance::new(&g, omega, 4).unwrap();
    let e = soc_betweenness(&inst);
    let mut p = HoppingParams::new(RoutingPolicy::ShortestFeasible, 200_000, 1);
    p.injection_rate = 2.0;
    let r = particle_hopping(&inst, &p).unwrap();
    Some(kendall_tau(&RankPairSet::new(e.values, r.scores.values).unwrap()).unwrap())
}

type Criterion = (&'static str, Duration, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 10] = [
        ("1 feasible-walk counts match enumeration", Duration::from_secs(60), walk_counting),
        ("2 charge-aware betweenness matches brute force", Duration::from_secs(120), betweenness_oracle),
        ("3 reductions to classical measures", Duration::from_secs(300), reductions),
        ("4 state-graph spectral radius dominated", Duration::from_secs(300), spectral_domination),
        ("5 spreading influence correlates with charge-aware Katz", Duration::from_secs(600), sir_correlation),
        ("6 occupation ratio correlates with charge-aware betweenness", Duration::from_secs(900), occupation_correlation),
        ("7 random-walk flows agree with Monte Carlo", Duration::from_secs(600), monte_carlo_rwbc_agreement),
        ("8 fast Kendall tau equals the definition", Duration::from_secs(60), kendall),
        ("9 experiment reruns are byte-identical", Duration::from_secs(300), determinism),
        ("10 Katz agreement grows with capacity", Duration::from_secs(300), katz_trend),
    ];
    let mut failed = 0;
    for (name, limit, run) in criteria {
        let start = Instant::now();
        let res = run();
        let took = start.elapsed();
        let ok = res.passed && took <= limit;
        failed += !ok as usize;
        println!(
            "{} criterion {name}: {} [{:.1}s, limit {}s]",
            if ok { "PASS" } else { "FAIL" },
            res.detail,
            took.as_secs_f64(),
            limit.as_secs()
        );
    }
    for (name, run) in [
        ("router network spreading correlation", router_full as fn() -> Option<Outcome>),
        ("Minnesota occupation correlation", minnesota_full),
    ] {
        match run() {
            None => println!("SKIP opt-in {name}: dataset variable not set"),
            Some(res) => {
                failed += !res.passed as usize;
                println!("{} opt-in {name}: {}", if res.passed { "PASS" } else { "FAIL" }, res.detail);
            }
        }
    }
    match gnutella_full() {
        None => println!("SKIP opt-in Gnutella occupation correlation: dataset variable not set"),
        Some(tau) => println!("INFO opt-in Gnutella occupation correlation: tau {tau:.4}"),
    }
    if failed > 0 {
        println!("{failed} acceptance check(s) failed");
        std::process::exit(1);
    }
}
