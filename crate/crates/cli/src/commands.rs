use std::io::Write;
use std::path::PathBuf;

use serde::Serialize;

use evenloop_core::cycles::even_subgraph_exponent;
use evenloop_core::fk::{cftp_samples, exact_fk_distribution};
use evenloop_core::graph::{odd_boundary, GraphJson};
use evenloop_core::lab::{free_vs_wired_ues, loop_convergence, parity_experiment, projection_stabilization};
use evenloop_core::loop_o1::{couple_samples, exact_loop_distribution};
use evenloop_core::planar::{exact_ising_distribution, IsingParams};
use evenloop_core::verify::{run_suite, VerifyOptions};
use evenloop_core::wilson::{default_sink, legal_order_invariance_check, wilson_ust};
use evenloop_core::rng::derive_seed;
use evenloop_core::{
    BitVec, BoundarySet, ExactDistribution, ExhaustionFamily, FkParams, Graph, LoopParams, ParamsMap,
    PercolationConfig,
};

use crate::source::{io_err, open_out, out_name, resolve};
use crate::{
    CliError, CliResult, ExactArgs, Format, GraphOnlyArgs, LabArgs, SampleArgs, SpinMode, VerifyArgs, WilsonArgs,
    BUILD,
};

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    build: &'static str,
    command: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    graph: Option<&'a str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    params: Option<ParamsMap>,
    report: T,
}

fn write_json<T: Serialize>(path: Option<&PathBuf>, env: &Envelope<'_, T>) -> CliResult<()> {
    let mut out = open_out(path.map(|p| p.as_path()))?;
    let name = out_name(path);
    serde_json::to_writer_pretty(&mut out, env).map_err(|e| CliError::Input(format!("cannot write {name}: {e}")))?;
    writeln!(out).and_then(|_| out.flush()).map_err(|e| io_err(name.as_ref(), e))
}

fn boundary_label(b: &BoundarySet) -> String {
    let v: Vec<String> = b.iter().map(|x| x.to_string()).collect();
    format!("{{{}}}", v.join(" "))
}

fn check_loop_support(g: &Graph, eta: &PercolationConfig, b: &BoundarySet) -> CliResult<()> {
    let odd = odd_boundary(g, eta)?;
    if let Some(v) = odd.iter().find(|v| !b.contains(**v)) {
        return Err(CliError::Failed(format!("sample has odd vertex {v} outside the boundary set")));
    }
    check_forced(g, &eta.to_slots(g), b)
}

fn check_forced(g: &Graph, slots: &BitVec, b: &BoundarySet) -> CliResult<()> {
    match b.forced_slots(g).into_iter().find(|&s| !slots.get(s)) {
        Some(s) => Err(CliError::Failed(format!("sample has closed forced slot {s}"))),
        None => Ok(()),
    }
}

fn write_samples(
    a: &SampleArgs,
    g: &Graph,
    params: &ParamsMap,
    b: &BoundarySet,
    samples: &[PercolationConfig],
) -> CliResult<()> {
    let name = out_name(a.out.as_ref());
    let mut out = open_out(a.out.as_deref())?;
    let io = |e| io_err(name.as_ref(), e);
    writeln!(
        out,
        "# seed={} build={BUILD} graph={} x={} y={} p={} p_h={} boundary={}",
        a.seed,
        a.graph.graph,
        params.x,
        params.y,
        params.p,
        params.p_h,
        boundary_label(b)
    )
    .map_err(io)?;
    writeln!(out, "edges,sites").map_err(io)?;
    for s in samples {
        let (e, v) = s.bit_strings(g);
        writeln!(out, "{e},{v}").map_err(io)?;
    }
    out.flush().map_err(io)
}

pub fn sample_loop(a: &SampleArgs) -> CliResult<()> {
    let params = a.model.resolve()?;
    let (g, b) = resolve(&a.graph, params.y > 0.0)?;
    let lp = LoopParams::new(params.x, params.y, b.clone());
    let samples = couple_samples(&g, &lp, a.n, a.seed)?;
    for s in &samples {
        check_loop_support(&g, s, &b)?;
    }
    write_samples(a, &g, &params, &b, &samples)
}

pub fn sample_fk(a: &SampleArgs) -> CliResult<()> {
    let params = a.model.resolve()?;
    let (g, b) = resolve(&a.graph, params.p_h > 0.0)?;
    let fk = FkParams::new(params.p, params.p_h, b.clone());
    let samples = cftp_samples(&g, &fk, a.n, a.seed)?;
    for s in &samples {
        s.validate(&g)?;
        check_forced(&g, &s.to_slots(&g), &b)?;
    }
    write_samples(a, &g, &params, &b, &samples)
}

#[derive(Serialize)]
struct TableRow {
    config: String,
    probability: f64,
}

#[derive(Serialize)]
struct Table {
    model: &'static str,
    /// What the bits of `config` index.
    bits: String,
    boundary: Vec<usize>,
    rows: Vec<TableRow>,
}

fn write_table(
    a: &ExactArgs,
    model: &'static str,
    bits: String,
    params: Option<ParamsMap>,
    b: &BoundarySet,
    d: &ExactDistribution<f64>,
) -> CliResult<()> {
    match a.format {
        Format::Json => {
            let rows = d
                .entries()
                .iter()
                .map(|(k, w)| TableRow {
                    config: BitVec::from_key(d.n_bits(), *k).to_bit_string(),
                    probability: *w,
                })
                .collect();
            let env = Envelope {
                build: BUILD,
                command: model,
                graph: Some(&a.graph.graph),
                seed: None,
                params,
                report: Table {
                    model,
                    bits,
                    boundary: b.iter().collect(),
                    rows,
                },
            };
            write_json(a.out.as_ref(), &env)
        }
        Format::Csv => {
            let name = out_name(a.out.as_ref());
            let mut out = open_out(a.out.as_deref())?;
            let io = |e| io_err(name.as_ref(), e);
            let p = params
                .map(|p| format!(" x={} y={} p={} p_h={}", p.x, p.y, p.p, p.p_h))
                .unwrap_or_default();
            writeln!(
                out,
                "# build={BUILD} model={model} graph={}{p} boundary={} bits={bits}",
                a.graph.graph,
                boundary_label(b)
            )
            .map_err(io)?;
            d.write_csv(&mut out).map_err(io)?;
            out.flush().map_err(io)
        }
    }
}

fn slot_label(g: &Graph) -> String {
    format!("{} edges then {} ghost edges", g.num_edges(), g.num_sites())
}

pub fn exact_fk(a: &ExactArgs) -> CliResult<()> {
    let params = a.model.resolve()?;
    let (g, b) = resolve(&a.graph, params.p_h > 0.0)?;
    let d = exact_fk_distribution(&g, &FkParams::new(params.p, params.p_h, b.clone()))?;
    write_table(a, "fk", slot_label(&g), Some(params), &b, &d)
}

/// Loop weights accept activities above 1, which have no FK counterpart.
pub fn exact_loop(a: &ExactArgs) -> CliResult<()> {
    let (x, y, params) = match (a.model.x, a.model.y) {
        (Some(x), y) if a.model.p.is_none() && a.model.beta.is_none() => {
            let y = y.unwrap_or(0.0);
            (x, y, ParamsMap::from_loop(x, y).ok())
        }
        _ => {
            let p = a.model.resolve()?;
            (p.x, p.y, Some(p))
        }
    };
    let (g, b) = resolve(&a.graph, y > 0.0)?;
    let lp = LoopParams::new(x, y, b.clone());
    lp.validate_weights(&g)?;
    let d = exact_loop_distribution(&g, &lp)?;
    write_table(a, "loop", slot_label(&g), params, &b, &d)
}

pub fn exact_ising(a: &ExactArgs) -> CliResult<()> {
    let params = a.model.resolve()?;
    let beta = params.beta.unwrap_or_else(|| params.x.atanh());
    let h = params.h.unwrap_or_else(|| params.y.atanh());
    let (g, b) = resolve(&a.graph, h > 0.0)?;
    let boundary_spin = match a.boundary_spin {
        SpinMode::Plus => Some(1),
        SpinMode::Minus => Some(-1),
        SpinMode::Summed => None,
    };
    let d = exact_ising_distribution(&g, &IsingParams { beta, h, boundary_spin })?;
    let bits = format!("{} ordinary vertices, 1 = spin -1", g.ordinary_vertices().count());
    let full = ParamsMap { beta: Some(beta), h: Some(h), ..params };
    write_table(a, "ising", bits, Some(full), &b, &d)
}

fn parse_sink(g: &Graph, s: &str) -> CliResult<usize> {
    if s == "auto" {
        return Ok(default_sink(g));
    }
    let v: usize = s
        .parse()
        .map_err(|_| CliError::Input(format!("--sink must be `auto` or a vertex index, got `{s}`")))?;
    if v >= g.num_vertices() {
        return Err(CliError::Input(format!("sink {v} is not a vertex")));
    }
    Ok(v)
}

pub fn wilson_sample(a: &WilsonArgs) -> CliResult<()> {
    let (g, _) = resolve(&a.graph, false)?;
    let sink = parse_sink(&g, &a.sink)?;
    let name = out_name(a.out.as_ref());
    let mut out = open_out(a.out.as_deref())?;
    let io = |e| io_err(name.as_ref(), e);
    writeln!(out, "# seed={} build={BUILD} graph={} sink={sink}", a.seed, a.graph.graph).map_err(io)?;
    writeln!(out, "edges,sites").map_err(io)?;
    for i in 0..a.n as u64 {
        let t = wilson_ust(&g, sink, &[], derive_seed(a.seed, i))?;
        if !t.is_spanning_tree(&g) {
            return Err(CliError::Failed(format!("sample {i} is not a spanning tree")));
        }
        let (e, v) = PercolationConfig::from_slots(&g, &t.slots(&g))?.bit_strings(&g);
        writeln!(out, "{e},{v}").map_err(io)?;
    }
    out.flush().map_err(io)
}

pub fn wilson_popcheck(a: &WilsonArgs) -> CliResult<()> {
    let (g, _) = resolve(&a.graph, false)?;
    let sink = parse_sink(&g, &a.sink)?;
    let r = legal_order_invariance_check(&g, sink, a.seed, a.trials)?;
    let ok = r.ok;
    let counterexample = r.counterexample.clone();
    write_json(
        a.out.as_ref(),
        &Envelope {
            build: BUILD,
            command: "wilson popcheck",
            graph: Some(&a.graph.graph),
            seed: Some(a.seed),
            params: None,
            report: r,
        },
    )?;
    if ok {
        Ok(())
    } else {
        Err(CliError::Failed(counterexample.unwrap_or_default()))
    }
}

pub fn verify(a: &VerifyArgs) -> CliResult<()> {
    let opts = VerifyOptions {
        max_slots: a.max_edges,
        seed: a.seed,
        trials: a.trials,
    };
    let mut reports = Vec::new();
    for s in a.suites()? {
        let r = run_suite(s, &opts)?;
        println!(
            "{:<11} {}  cases={} max_error={:.3e}",
            s.to_string(),
            if r.passed { "PASS" } else { "FAIL" },
            r.cases,
            r.max_error
        );
        for f in r.failures.iter().take(5) {
            println!("    {f}");
        }
        reports.push(r);
    }
    if a.out.is_some() {
        write_json(
            a.out.as_ref(),
            &Envelope {
                build: BUILD,
                command: "verify",
                graph: None,
                seed: Some(a.seed),
                params: None,
                report: &reports,
            },
        )?;
    }
    let failed: Vec<String> = reports.iter().filter(|r| !r.passed).map(|r| r.suite.to_string()).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Failed(failed.join(", ")))
    }
}

fn need_seed(a: &LabArgs) -> CliResult<u64> {
    a.seed.ok_or_else(|| CliError::Input("this experiment is random and needs --seed".into()))
}

/// Uniform even subgraphs are Loop O(1) at `x = 1`.
fn ues_params() -> Option<ParamsMap> {
    ParamsMap::from_loop(1.0, 0.0).ok()
}

fn lab_json<T: Serialize>(a: &LabArgs, command: &str, seed: Option<u64>, params: Option<ParamsMap>, report: T) -> CliResult<()> {
    write_json(
        a.out.as_ref(),
        &Envelope {
            build: BUILD,
            command,
            graph: None,
            seed,
            params,
            report,
        },
    )
}

pub fn lab_converge(a: &LabArgs) -> CliResult<()> {
    let seed = need_seed(a)?;
    let n_list: Vec<usize> = (a.k.max(1)..=a.nmax).step_by(2).collect();
    if n_list.len() < 2 {
        return Err(CliError::Input(format!("need --nmax ≥ k + 2, got k = {} and nmax = {}", a.k, a.nmax)));
    }
    let r = loop_convergence(a.family, a.k, a.x, a.y, &n_list, a.samples, seed)?;
    let params = Some(r.params);
    lab_json(a, "lab converge", Some(seed), params, r)
}

pub fn lab_stabilize(a: &LabArgs) -> CliResult<()> {
    let r = projection_stabilization(a.family, a.k, a.nmax)?;
    lab_json(a, "lab stabilize", None, ues_params(), r)
}

pub fn lab_parity(a: &LabArgs) -> CliResult<()> {
    if a.family != ExhaustionFamily::Ladder {
        return Err(CliError::Input("the parity experiment runs on the ladder only".into()));
    }
    let seed = need_seed(a)?;
    let r = parity_experiment(a.nmax, a.samples, seed)?;
    lab_json(a, "lab parity", Some(seed), ues_params(), r)
}

pub fn lab_dichotomy(a: &LabArgs) -> CliResult<()> {
    let seed = need_seed(a)?;
    let window = if a.rung_cut {
        a.family.rung_cut(0)?
    } else {
        a.family.window(a.k)
    };
    let r = free_vs_wired_ues(a.family, &window, a.nmax, a.samples, seed)?;
    lab_json(a, "lab dichotomy", Some(seed), ues_params(), r)
}

#[derive(Serialize)]
struct GraphSummary {
    family: String,
    vertices: usize,
    edges: usize,
    ghost_sites: usize,
    ghost: Option<usize>,
    wired: Option<usize>,
    connected: bool,
    boundary: Vec<usize>,
    /// log2 of the number of even subgraphs relative to the boundary.
    even_exponent: usize,
    graph: GraphJson,
}

pub fn graph_show(a: &GraphOnlyArgs) -> CliResult<()> {
    let (g, b) = resolve(&a.graph, false)?;
    let summary = GraphSummary {
        family: format!("{:?}", g.family_tag()),
        vertices: g.num_vertices(),
        edges: g.num_edges(),
        ghost_sites: g.num_sites(),
        ghost: g.ghost(),
        wired: g.wired(),
        connected: g.is_connected(),
        boundary: b.iter().collect(),
        even_exponent: even_subgraph_exponent(&g, &b)?,
        graph: GraphJson::from_graph(&g)?,
    };
    write_json(
        a.out.as_ref(),
        &Envelope {
            build: BUILD,
            command: "graph show",
            graph: Some(&a.graph.graph),
            seed: None,
            params: None,
            report: summary,
        },
    )
}
