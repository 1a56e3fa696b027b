//! Exact verification suites over the test corpus, shared by the command
//! line and the test targets.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use rand::Rng;
use serde::Serialize;

use crate::corpus::{corpus, random_connected_graph};
use crate::cycles::count_even_subgraphs;
use crate::error::{Error, Result};
use crate::fk::exact_fk_distribution;
use crate::graph::{odd_boundary_slots, BoundarySet, Graph};
use crate::gf2::BitVec;
use crate::loop_o1::{conditional_uniformity_check, exact_loop_distribution, slot_activities, LoopParams};
use crate::oracle::tv_distance;
use crate::planar::{disagreement_edges, duality_check, grid_map, odd_dual_vertices, random_planar_map, wheel_map, PlanarMap, SpinConfig};
use crate::rng::{derive_seed, stream_rng};
use crate::wilson::legal_order_invariance_check;

/// Activity grid used by the coupling suite.
pub const ACTIVITY_GRID: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];
pub const DUALITY_BETAS: [f64; 3] = [0.0, 0.4, 0.8];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Counting,
    Coupling,
    Uniformity,
    Order,
    Duality,
}

impl Suite {
    pub const ALL: [Suite; 5] = [Suite::Counting, Suite::Coupling, Suite::Uniformity, Suite::Order, Suite::Duality];
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Suite::Counting => "counting",
            Suite::Coupling => "coupling",
            Suite::Uniformity => "uniformity",
            Suite::Order => "order",
            Suite::Duality => "duality",
        };
        f.write_str(s)
    }
}

impl FromStr for Suite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.to_string() == s.trim())
            .ok_or_else(|| Error::Parse(format!("unknown suite {s:?}")))
    }
}

#[derive(Clone, Debug)]
pub struct VerifyOptions {
    /// Corpus graphs with more slots than this are skipped.
    pub max_slots: usize,
    pub seed: u64,
    /// Invariance trials per random graph in the order suite.
    pub trials: usize,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            max_slots: 12,
            seed: 1,
            trials: 100,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub cases: usize,
    pub max_error: f64,
    pub failures: Vec<String>,
    pub passed: bool,
}

impl SuiteReport {
    fn new(suite: Suite) -> Self {
        SuiteReport {
            suite,
            cases: 0,
            max_error: 0.0,
            failures: Vec::new(),
            passed: true,
        }
    }

    fn record(&mut self, ok: bool, err: f64, what: impl FnOnce() -> String) {
        self.cases += 1;
        self.max_error = self.max_error.max(err);
        if !ok {
            self.passed = false;
            self.failures.push(what());
        }
    }
}

/// Boundary sets exercised on a graph: the natural one, and the natural one
/// plus the first ghost site when there is one.
pub fn boundary_cases(g: &Graph) -> Vec<BoundarySet> {
    let natural = BoundarySet::natural(g);
    let mut out = vec![natural.clone()];
    if let Some(&s) = g.ghost_sites().first() {
        let mut b = natural;
        b.0.insert(s);
        out.push(b);
    }
    out
}

pub fn run_suite(suite: Suite, opts: &VerifyOptions) -> Result<SuiteReport> {
    match suite {
        Suite::Counting => counting_suite(opts),
        Suite::Coupling => coupling_suite(opts),
        Suite::Uniformity => uniformity_suite(opts),
        Suite::Order => order_suite(opts),
        Suite::Duality => duality_suite(opts),
    }
}

/// Closed-form even-subgraph counts against enumeration.
pub fn counting_suite(opts: &VerifyOptions) -> Result<SuiteReport> {
    let mut rep = SuiteReport::new(Suite::Counting);
    for e in corpus().iter().filter(|e| e.graph.num_slots() <= opts.max_slots) {
        for b in boundary_cases(&e.graph) {
            let formula = count_even_subgraphs(&e.graph, &b)?;
            let forced = b.forced_slots(&e.graph);
            let len = e.graph.num_slots();
            let brute = (0..1u64 << len)
                .filter(|&k| {
                    let v = BitVec::from_key(len, k);
                    forced.iter().all(|&s| v.get(s))
                        && odd_boundary_slots(&e.graph, &v).iter().all(|&x| b.contains(x))
                })
                .count();
            let ok = formula == BigUint::from(brute);
            rep.record(ok, if ok { 0.0 } else { 1.0 }, || {
                format!("{} B={:?}: formula {formula}, enumeration {brute}", e.name, b.0)
            });
        }
    }
    Ok(rep)
}

/// Exact Loop O(1) OR Bernoulli against exact FK-Ising.
pub fn coupling_suite(opts: &VerifyOptions) -> Result<SuiteReport> {
    let mut rep = SuiteReport::new(Suite::Coupling);
    for e in corpus().iter().filter(|e| e.graph.num_slots() <= opts.max_slots) {
        let g = &e.graph;
        let ys: &[f64] = if g.num_sites() > 0 { &ACTIVITY_GRID } else { &[0.0] };
        for b in boundary_cases(g) {
            for &x in &ACTIVITY_GRID {
                // a forced ghost edge has zero weight at y = 0
                for &y in ys.iter().filter(|&&y| y > 0.0 || b.forced_slots(g).is_empty()) {
                    let lp = LoopParams::new(x, y, b.clone());
                    let pushed = exact_loop_distribution(g, &lp)?.bernoulli_or(&slot_activities(g, &x, &y))?;
                    let fk = exact_fk_distribution(g, &lp.fk_params())?;
                    let tv = tv_distance(&pushed, &fk)?;
                    rep.record(tv < 1e-12, tv, || format!("{} B={:?} x={x} y={y}: TV {tv:e}", e.name, b.0));
                }
            }
        }
    }
    Ok(rep)
}

/// Conditional law of the loop configuration given its union with the
/// Bernoulli configuration.
pub fn uniformity_suite(opts: &VerifyOptions) -> Result<SuiteReport> {
    let mut rep = SuiteReport::new(Suite::Uniformity);
    for e in corpus().iter().filter(|e| e.graph.num_slots() <= opts.max_slots.min(12)) {
        for b in boundary_cases(&e.graph) {
            for (x, y) in [(0.5, 0.5), (0.25, 0.75), (1.0, 0.1)] {
                let r = conditional_uniformity_check(&e.graph, &LoopParams::new(x, y, b.clone()))?;
                rep.record(r.ok, r.max_deviation, || {
                    format!("{} B={:?} x={x} y={y}: {r:?}", e.name, b.0)
                });
            }
        }
    }
    Ok(rep)
}

/// Colored-cycle multisets and final trees across popping orders on ten
/// random graphs.
pub fn order_suite(opts: &VerifyOptions) -> Result<SuiteReport> {
    let mut rep = SuiteReport::new(Suite::Order);
    for i in 0..10u64 {
        let mut rng = stream_rng(opts.seed, i);
        let n = rng.gen_range(5..10);
        let g = random_connected_graph(n, rng.gen_range(2..7), derive_seed(opts.seed, i))?;
        let r = legal_order_invariance_check(&g, 0, derive_seed(opts.seed, 100 + i), opts.trials)?;
        rep.record(r.ok, if r.ok { 0.0 } else { 1.0 }, || {
            r.counterexample.clone().unwrap_or_default()
        });
    }
    Ok(rep)
}

/// Maps used by the duality suite.
pub fn duality_maps(seed: u64) -> Result<Vec<(String, PlanarMap)>> {
    Ok(vec![
        ("grid3x3".to_string(), grid_map(3, 3)?),
        ("wheel5".to_string(), wheel_map(5)?),
        (format!("triangulated-2x3-{seed}"), random_planar_map(2, 3, seed)?),
    ])
}

/// Exact gradient pushforwards against Loop O(1) on the dual, and evenness
/// of gradients of random spins.
pub fn duality_suite(opts: &VerifyOptions) -> Result<SuiteReport> {
    let mut rep = SuiteReport::new(Suite::Duality);
    for (name, m) in duality_maps(opts.seed)? {
        for beta in DUALITY_BETAS {
            let r = duality_check(&m, beta)?;
            let err = r.tv_free_wired.max(r.tv_plus_free);
            rep.record(r.ok, err, || format!("{name} β={beta}: {r:?}"));
        }
    }
    let mut rng = stream_rng(opts.seed, 7);
    let mut violations = 0;
    for t in 0..10_000u64 {
        let m = random_planar_map(4, 4, derive_seed(opts.seed, t % 50))?;
        let sigma = SpinConfig((0..m.graph().num_vertices()).map(|_| if rng.gen::<bool>() { 1 } else { -1 }).collect());
        if !odd_dual_vertices(&m, &disagreement_edges(&m, &sigma)?).is_empty() {
            violations += 1;
        }
    }
    rep.record(violations == 0, violations as f64, || format!("{violations} odd gradient images"));
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suites_pass_on_small_graphs() {
        let opts = VerifyOptions {
            max_slots: 7,
            seed: 2,
            trials: 5,
        };
        for s in Suite::ALL {
            let r = run_suite(s, &opts).unwrap();
            assert!(r.passed, "{r:?}");
            assert!(r.cases > 0);
        }
        assert_eq!("order".parse::<Suite>().unwrap(), Suite::Order);
        assert!("nope".parse::<Suite>().is_err());
    }
}
