use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use soc_centrality::betweenness::{soc_betweenness_scores, standard_betweenness_with, Endpoints};
use soc_centrality::graph::{generators, load_edge_list, write_snap_tsv, EdgeListFormat};
use soc_centrality::katz::{max_alpha, max_alpha_standard, soc_katz, standard_katz, KatzParams, DEFAULT_MAX_ITER, DEFAULT_TOL};
use soc_centrality::rng::{derive_seed, stream};
use soc_centrality::rwbc::{sample_pairs, soc_rwbc_with, standard_rwbc, EndpointFlow, StPair};
use soc_centrality::simulate::{
    particle_hopping, sir_influence, HoppingParams, PairSampler, RoutingPolicy, SimOutcome, SirParams,
    DEFAULT_INJECTION_RATE, DEFAULT_SIR_MAX_STEPS,
};
use soc_centrality::stats::{kendall_tau_with, summarize, CorrelationReport, RankPairSet, TauVariant};
use soc_centrality::testkit::{verify_instance, OracleBudget};
use soc_centrality::{Graph, NodeId, RefillSet, ScoreVector, SocInstance};

use crate::config::{ExperimentConfig, Measure, Model, DEFAULT_DURATION, DEFAULT_FORMAT, DEFAULT_RATIOS, DEFAULT_REPS, DEFAULT_RUNS};
use crate::output::{load_scores, read_lines, save_json, save_scores_csv, save_text, write_scores_csv, Provenance};
use crate::{Cli, Command, CorrelateArgs, GenerateArgs, GraphKind, VerifyFailed};

const OMEGA_STREAM: u64 = 1;
const PAIR_STREAM: u64 = 2;
const SIM_STREAM: u64 = 3;

pub fn run(cli: Cli) -> anyhow::Result<()> {
    let file = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    let settle = |flags: &ExperimentConfig| -> anyhow::Result<ExperimentConfig> {
        let cfg = file.overlay(flags)?;
        cfg.validate()?;
        Ok(cfg)
    };
    match cli.command {
        Command::Centrality { cfg, verify } => {
            let cfg = settle(&cfg)?;
            if verify {
                cmd_verify(cfg)
            } else {
                cmd_centrality(cfg)
            }
        }
        Command::Simulate { cfg } => cmd_simulate(settle(&cfg)?),
        Command::Experiment { cfg } => cmd_experiment(settle(&cfg)?),
        Command::Correlate(args) => cmd_correlate(args),
        Command::Generate(args) => cmd_generate(args),
    }
}

fn load_graph(cfg: &mut ExperimentConfig) -> anyhow::Result<Graph> {
    let format: EdgeListFormat = cfg.format.get_or_insert_with(|| DEFAULT_FORMAT.to_owned()).parse()?;
    let directed = *cfg.directed.get_or_insert(false);
    let path = cfg.input()?.to_owned();
    load_edge_list(&path, format, directed).with_context(|| format!("loading {}", path.display()))
}

fn node_by_label(g: &Graph, label: &str) -> anyhow::Result<NodeId> {
    g.node_by_label(label)
        .ok_or_else(|| anyhow!("unknown node label `{label}`"))
}

/// Refill set from a label file, a sampled ratio, or empty.
fn resolve_omega(cfg: &ExperimentConfig, g: &Graph, seed: u64) -> anyhow::Result<RefillSet> {
    let n = g.node_count();
    if let Some(path) = &cfg.omega_file {
        let ids = read_lines(path)?
            .iter()
            .map(|l| node_by_label(g, l))
            .collect::<anyhow::Result<Vec<_>>>()?;
        return Ok(RefillSet::new(n, ids)?);
    }
    match cfg.omega_ratio {
        Some(r) => Ok(RefillSet::sample(n, r, &mut stream(seed, &[OMEGA_STREAM]))?),
        None => Ok(RefillSet::empty(n)),
    }
}

fn resolve_pairs(cfg: &ExperimentConfig, g: &Graph, seed: u64) -> anyhow::Result<Option<Vec<StPair>>> {
    if let Some(path) = &cfg.pairs_file {
        let mut pairs = Vec::new();
        for line in read_lines(path)? {
            let mut it = line.split(|c: char| c.is_whitespace() || c == ',').filter(|s| !s.is_empty());
            let (Some(s), Some(t), None) = (it.next(), it.next(), it.next()) else {
                bail!("{}: expected `source target`, got {line:?}", path.display());
            };
            pairs.push(StPair::new(node_by_label(g, s)?.0, node_by_label(g, t)?.0)?);
        }
        if pairs.is_empty() {
            bail!("{} lists no pairs", path.display());
        }
        return Ok(Some(pairs));
    }
    match cfg.pairs {
        Some(0) => bail!("--pairs must be at least 1"),
        Some(k) => Ok(Some(sample_pairs(g.node_count(), k, &mut stream(seed, &[PAIR_STREAM]))?)),
        None => Ok(None),
    }
}

fn instance<'g>(cfg: &ExperimentConfig, g: &'g Graph, omega: RefillSet) -> anyhow::Result<SocInstance<'g>> {
    Ok(SocInstance::new(g, omega, cfg.kappa()?)?)
}

/// Computes `measure`, recording defaults it picked back into `cfg`.
fn compute(
    measure: Measure,
    cfg: &mut ExperimentConfig,
    g: &Graph,
    omega: RefillSet,
    pairs: Option<&[StPair]>,
) -> anyhow::Result<ScoreVector> {
    let endpoints = *cfg.endpoints.get_or_insert(Endpoints::Target);
    let pairs = || pairs.ok_or_else(|| anyhow!("{measure} needs --pairs or --pairs-file"));
    let scores = match measure {
        Measure::SocKatz => {
            let inst = instance(cfg, g, omega)?;
            let alpha = match cfg.alpha {
                Some(a) => a,
                None => max_alpha(&inst, DEFAULT_TOL).default_alpha(),
            };
            cfg.alpha = Some(alpha);
            soc_katz(&inst, &KatzParams::new(alpha))?
        }
        Measure::Katz => {
            let alpha = match cfg.alpha {
                Some(a) => a,
                None => max_alpha_standard(g, DEFAULT_TOL).default_alpha(),
            };
            cfg.alpha = Some(alpha);
            standard_katz(g, alpha, DEFAULT_TOL, DEFAULT_MAX_ITER)?
        }
        Measure::SocBc => {
            let inst = instance(cfg, g, omega)?;
            let bc = soc_betweenness_scores(&inst, endpoints);
            ScoreVector::new("soc-bc", bc.node)
                .with_param("kappa", inst.kappa() as u64)
                .with_param("saturated", bc.saturated)
                .with_omega(inst.omega_descriptor())
        }
        Measure::Bc => standard_betweenness_with(g, endpoints),
        Measure::SocRwbc => {
            let flow = *cfg.rwbc_endpoints.get_or_insert(EndpointFlow::Uniform);
            let inst = instance(cfg, g, omega)?;
            soc_rwbc_with(&inst, pairs()?, flow)?.scores
        }
        Measure::Rwbc => standard_rwbc(g, pairs()?)?.scores,
    };
    Ok(scores)
}

fn simulate(
    model: Model,
    cfg: &mut ExperimentConfig,
    g: &Graph,
    omega: RefillSet,
    pairs: Option<&[StPair]>,
    seed: u64,
) -> anyhow::Result<SimOutcome> {
    let inst = instance(cfg, g, omega)?;
    let sim_seed = derive_seed(seed, &[SIM_STREAM]);
    Ok(match model {
        Model::Sir => {
            let alpha = cfg.alpha.ok_or_else(|| anyhow!("sir needs --alpha"))?;
            let p = SirParams {
                alpha,
                runs: *cfg.runs.get_or_insert(DEFAULT_RUNS),
                max_steps: *cfg.max_steps.get_or_insert(DEFAULT_SIR_MAX_STEPS),
                seed: sim_seed,
            };
            sir_influence(&inst, &p)?
        }
        Model::Hopping => {
            let mut p = HoppingParams::new(
                *cfg.policy.get_or_insert(RoutingPolicy::ShortestFeasible),
                *cfg.duration.get_or_insert(DEFAULT_DURATION),
                sim_seed,
            );
            p.injection_rate = *cfg.injection_rate.get_or_insert(DEFAULT_INJECTION_RATE);
            p.max_injections = cfg.max_injections;
            if let Some(list) = pairs {
                p.pairs = PairSampler::Fixed(list.to_vec());
            }
            particle_hopping(&inst, &p)?
        }
    })
}

fn out_dir(cfg: &ExperimentConfig) -> Option<PathBuf> {
    cfg.out.clone()
}

fn cmd_centrality(mut cfg: ExperimentConfig) -> anyhow::Result<()> {
    let measure = cfg.measure.ok_or_else(|| anyhow!("missing --measure"))?;
    let g = load_graph(&mut cfg)?;
    let seed = *cfg.seed.get_or_insert(cfg.seed());
    let omega = if measure.is_charge_aware() {
        resolve_omega(&cfg, &g, seed)?
    } else {
        RefillSet::empty(g.node_count())
    };
    let pairs = if measure.needs_pairs() { resolve_pairs(&cfg, &g, seed)? } else { None };
    let scores = compute(measure, &mut cfg, &g, omega, pairs.as_deref())?;
    let prov = Provenance::new("centrality", &cfg)?;
    match out_dir(&cfg) {
        Some(dir) => {
            save_scores_csv(&dir.join(format!("{measure}.csv")), &prov, &g, &scores)?;
            save_json(&dir.join(format!("{measure}.json")), &prov, json!({ "meta": scores.meta }))?;
        }
        None => write_scores_csv(std::io::stdout().lock(), &prov, &g, &scores)?,
    }
    Ok(())
}

fn cmd_verify(mut cfg: ExperimentConfig) -> anyhow::Result<()> {
    let g = load_graph(&mut cfg)?;
    let seed = *cfg.seed.get_or_insert(cfg.seed());
    let omega = resolve_omega(&cfg, &g, seed)?;
    let inst = instance(&cfg, &g, omega)?;
    let report = verify_instance(&inst, cfg.alpha, &OracleBudget::default())?;
    let prov = Provenance::new("centrality --verify", &cfg)?;
    let body = json!({ "verify": report });
    match out_dir(&cfg) {
        Some(dir) => save_json(&dir.join("verify.json"), &prov, body)?,
        None => {
            let mut out = std::io::stdout().lock();
            serde_json::to_writer_pretty(&mut out, &json!({ "provenance": prov, "verify": report }))?;
            writeln!(out)?;
        }
    }
    for c in &report.checks {
        log::info!("{}: max difference {} (tolerance {})", c.name, c.max_abs_diff, c.tolerance);
    }
    if !report.passed() {
        return Err(VerifyFailed(report.checks.iter().filter(|c| !c.passed).map(|c| c.name.clone()).collect()).into());
    }
    Ok(())
}

fn cmd_simulate(mut cfg: ExperimentConfig) -> anyhow::Result<()> {
    let model = cfg.model.ok_or_else(|| anyhow!("missing --model"))?;
    let g = load_graph(&mut cfg)?;
    let seed = *cfg.seed.get_or_insert(cfg.seed());
    let omega = resolve_omega(&cfg, &g, seed)?;
    let pairs = resolve_pairs(&cfg, &g, seed)?;
    let outcome = simulate(model, &mut cfg, &g, omega, pairs.as_deref(), seed)?;
    let prov = Provenance::new("simulate", &cfg)?;
    match out_dir(&cfg) {
        Some(dir) => {
            save_scores_csv(&dir.join(format!("{model}.csv")), &prov, &g, &outcome.scores)?;
            save_json(
                &dir.join(format!("{model}.json")),
                &prov,
                json!({ "meta": outcome.scores.meta, "report": outcome.report }),
            )?;
        }
        None => write_scores_csv(std::io::stdout().lock(), &prov, &g, &outcome.scores)?,
    }
    Ok(())
}

fn ratio_dir(ratio: f64) -> String {
    format!("ratio_{ratio}")
}

fn rep_dir(rep: usize) -> String {
    format!("rep_{rep:02}")
}

fn cmd_experiment(mut cfg: ExperimentConfig) -> anyhow::Result<()> {
    let measure = cfg.measure.ok_or_else(|| anyhow!("missing --measure"))?;
    let model = cfg.model.ok_or_else(|| anyhow!("missing --model"))?;
    let out = cfg.out.clone().ok_or_else(|| anyhow!("experiment needs --out"))?;
    let g = load_graph(&mut cfg)?;
    let seed = *cfg.seed.get_or_insert(cfg.seed());
    let reps = *cfg.reps.get_or_insert(DEFAULT_REPS);
    let ratios = cfg.ratios.get_or_insert_with(|| DEFAULT_RATIOS.to_vec()).clone();
    let variant = if *cfg.tau_b.get_or_insert(false) { TauVariant::B } else { TauVariant::A };
    cfg.kappa()?;
    if cfg.omega_file.is_some() || cfg.omega_ratio.is_some() {
        bail!("experiment draws refill sets from --ratios; drop --omega-file / --omega-ratio");
    }

    let jobs: Vec<(usize, usize)> = (0..ratios.len()).flat_map(|r| (0..reps).map(move |k| (r, k))).collect();
    let results: Vec<anyhow::Result<()>> = jobs
        .par_iter()
        .map(|&(ri, rep)| {
            let ratio = ratios[ri];
            let rep_seed = derive_seed(seed, &[ri as u64, rep as u64]);
            let mut run_cfg = cfg.clone();
            run_cfg.omega_ratio = Some(ratio);
            run_cfg.seed = Some(rep_seed);
            run_cfg.ratios = None;
            run_cfg.reps = None;
            run_cfg.out = None;
            let omega = resolve_omega(&run_cfg, &g, rep_seed)?;
            let pairs = if measure.needs_pairs() || run_cfg.pairs.is_some() || run_cfg.pairs_file.is_some() {
                resolve_pairs(&run_cfg, &g, rep_seed)?
            } else {
                None
            };
            let expected = compute(measure, &mut run_cfg, &g, omega.clone(), pairs.as_deref())?;
            let realized = simulate(model, &mut run_cfg, &g, omega, pairs.as_deref(), rep_seed)?;
            let dir = out.join(ratio_dir(ratio)).join(rep_dir(rep));
            let prov = Provenance::new("experiment", &run_cfg)?;
            save_scores_csv(&dir.join("expected.csv"), &prov, &g, &expected)?;
            save_scores_csv(&dir.join("realized.csv"), &prov, &g, &realized.scores)?;
            let set = RankPairSet::new(expected.values.clone(), realized.scores.values.clone())?;
            let report = CorrelationReport {
                measure: measure.to_string(),
                simulation: model.to_string(),
                tau: kendall_tau_with(&set, variant)?,
                n: set.len(),
                omega_ratio: Some(ratio),
                kappa: run_cfg.kappa,
                seed: Some(rep_seed),
            };
            save_json(&dir.join("correlation.json"), &prov, json!({ "correlation": report, "simulation_report": realized.report }))?;
            log::info!("ratio {ratio} rep {rep}: tau {}", report.tau);
            Ok(())
        })
        .collect();
    for r in results {
        r?;
    }
    let prov = Provenance::new("experiment", &cfg)?;
    save_json(&out.join("config.json"), &prov, json!({}))?;
    batch_summary(&out, &out, variant, &prov)
}

#[derive(Serialize)]
struct BatchRow {
    ratio: f64,
    rep: usize,
    tau: f64,
}

/// Scans `ratio_*/rep_*` directories, correlates each pair of files and writes `taus.csv` and
/// `summary.csv` to `out`.
fn batch_summary(root: &Path, out: &Path, variant: TauVariant, prov: &Provenance) -> anyhow::Result<()> {
    let mut by_ratio: BTreeMap<String, (f64, Vec<BatchRow>)> = BTreeMap::new();
    let mut ratio_dirs: Vec<(f64, PathBuf)> = Vec::new();
    for entry in std::fs::read_dir(root).with_context(|| format!("listing {}", root.display()))? {
        let path = entry?.path();
        let Some(name) = path.file_name().and_then(|s| s.to_str()) else { continue };
        if let Some(r) = name.strip_prefix("ratio_").and_then(|r| r.parse::<f64>().ok()) {
            if path.is_dir() {
                ratio_dirs.push((r, path));
            }
        }
    }
    if ratio_dirs.is_empty() {
        bail!("no ratio_* directories under {}", root.display());
    }
    ratio_dirs.sort_by(|a, b| a.0.total_cmp(&b.0));
    for (ratio, dir) in ratio_dirs {
        let mut reps: Vec<(usize, PathBuf)> = Vec::new();
        for entry in std::fs::read_dir(&dir)? {
            let path = entry?.path();
            let Some(name) = path.file_name().and_then(|s| s.to_str()) else { continue };
            if let Some(k) = name.strip_prefix("rep_").and_then(|k| k.parse::<usize>().ok()) {
                reps.push((k, path));
            }
        }
        reps.sort();
        let mut rows = Vec::new();
        for (k, path) in reps {
            let (e, _) = load_scores(&path.join("expected.csv"))?;
            let (r, _) = load_scores(&path.join("realized.csv"))?;
            let set = RankPairSet::align(&e, &r).with_context(|| format!("aligning {}", path.display()))?;
            rows.push(BatchRow {
                ratio,
                rep: k,
                tau: kendall_tau_with(&set, variant)?,
            });
        }
        by_ratio.insert(format!("{:020.10}", ratio), (ratio, rows));
    }

    let mut taus = String::from("ratio,rep,tau\n");
    let mut summary = String::from("ratio,count,min,q1,median,q3,max,mean\n");
    for (ratio, rows) in by_ratio.values() {
        for row in rows {
            taus.push_str(&format!("{},{},{}\n", row.ratio, row.rep, row.tau));
        }
        if rows.is_empty() {
            continue;
        }
        let s = summarize(&rows.iter().map(|r| r.tau).collect::<Vec<_>>())?;
        summary.push_str(&format!(
            "{ratio},{},{},{},{},{},{},{}\n",
            s.count, s.min, s.q1, s.median, s.q3, s.max, s.mean
        ));
    }
    save_text(&out.join("taus.csv"), prov, &taus)?;
    save_text(&out.join("summary.csv"), prov, &summary)?;
    print!("{summary}");
    Ok(())
}

fn field<T: serde::de::DeserializeOwned>(prov: &Option<Value>, key: &str) -> Option<T> {
    prov.as_ref()
        .and_then(|p| p.get("config"))
        .and_then(|c| c.get(key))
        .and_then(|v| serde_json::from_value(v.clone()).ok())
}

fn cmd_correlate(args: CorrelateArgs) -> anyhow::Result<()> {
    let variant = if args.tau_b { TauVariant::B } else { TauVariant::A };
    if let Some(root) = &args.batch {
        let prov = Provenance::new("correlate", &json!({ "batch": root, "tau_b": args.tau_b }))?;
        let out = args.out.clone().unwrap_or_else(|| root.clone());
        return batch_summary(root, &out, variant, &prov);
    }
    let (epath, rpath) = match (&args.expected, &args.realized) {
        (Some(e), Some(r)) => (e, r),
        _ => bail!("correlate needs --expected and --realized, or --batch"),
    };
    let (e, eprov) = load_scores(epath)?;
    let (r, rprov) = load_scores(rpath)?;
    let set = RankPairSet::align(&e, &r)?;
    let stem = |p: &Path| p.file_stem().and_then(|s| s.to_str()).unwrap_or("").to_owned();
    let report = CorrelationReport {
        measure: field::<String>(&eprov, "measure").unwrap_or_else(|| stem(epath)),
        simulation: field::<String>(&rprov, "model").unwrap_or_else(|| stem(rpath)),
        tau: kendall_tau_with(&set, variant)?,
        n: set.len(),
        omega_ratio: field(&eprov, "omega-ratio"),
        kappa: field(&eprov, "kappa"),
        seed: field(&eprov, "seed"),
    };
    let prov = Provenance::new(
        "correlate",
        &json!({ "expected": epath, "realized": rpath, "tau_b": args.tau_b }),
    )?;
    match &args.out {
        Some(dir) => save_json(&dir.join("correlation.json"), &prov, json!({ "correlation": report }))?,
        None => {
            let mut out = std::io::stdout().lock();
            serde_json::to_writer_pretty(&mut out, &report)?;
            writeln!(out)?;
        }
    }
    Ok(())
}

fn cmd_generate(args: GenerateArgs) -> anyhow::Result<()> {
    let need = |v: Option<usize>, flag: &str| v.ok_or_else(|| anyhow!("{:?} needs --{flag}", args.kind));
    let mut rng = stream(args.seed, &[]);
    let g = match args.kind {
        GraphKind::Path => generators::path(need(args.nodes, "nodes")?),
        GraphKind::Cycle => generators::cycle(need(args.nodes, "nodes")?),
        GraphKind::Star => generators::star(need(args.nodes, "nodes")?),
        GraphKind::Grid => {
            let rows = need(args.rows, "rows")?;
            generators::grid(rows, args.cols.unwrap_or(rows))
        }
        GraphKind::Bridged => {
            if args.bridge == 0 {
                bail!("--bridge must be at least 1");
            }
            generators::bridged_grids(need(args.rows, "rows")?, args.bridge)
        }
        GraphKind::Ba => {
            let n = need(args.nodes, "nodes")?;
            if args.m == 0 || args.m >= n {
                bail!("--m must lie in 1..{n}");
            }
            generators::barabasi_albert(n, args.m, &mut rng)
        }
        GraphKind::Er => {
            let p = args.p.ok_or_else(|| anyhow!("er needs --p"))?;
            if !(0.0..=1.0).contains(&p) {
                bail!("--p must lie in [0, 1]");
            }
            generators::erdos_renyi(need(args.nodes, "nodes")?, p, args.directed, &mut rng)
        }
    };
    let prov = Provenance::new("generate", &args)?;
    let mut buf = Vec::new();
    write_snap_tsv(&g, &mut buf)?;
    let body = String::from_utf8(buf)?;
    match &args.out {
        Some(path) => save_text(path, &prov, &body)?,
        None => {
            let mut out = std::io::stdout().lock();
            writeln!(out, "{}", prov.comment_line()?)?;
            out.write_all(body.as_bytes())?;
        }
    }
    Ok(())
}
