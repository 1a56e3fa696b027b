//! FK-Ising (the `q = 2` random-cluster model) with an external field:
//! exact weights, heat-bath Glauber updates and monotone coupling from the
//! past.
//!
//! The weight of a configuration is
//! `odds(p)^#open edges · odds(p_h)^#open ghost edges · 2^k`, where `k`
//! counts clusters avoiding the *rooted* set: the ghost vertex, Δ and the
//! boundary set. Ghost edges at boundary vertices are forced open.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::dsu::Dsu;
use crate::error::{Error, Result};
use crate::gf2::BitVec;
use crate::graph::{BoundarySet, Graph, PercolationConfig};
use crate::oracle::{check_cap, exact_distribution, ExactDistribution, Scalar};
use crate::rng::{derive_seed, stream_rng};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FkParams<W = f64> {
    pub p: W,
    pub p_h: W,
    pub boundary: BoundarySet,
}

impl<W: Scalar> FkParams<W> {
    pub fn new(p: W, p_h: W, boundary: BoundarySet) -> Self {
        FkParams { p, p_h, boundary }
    }

    pub fn validate(&self, g: &Graph) -> Result<()> {
        for (name, v) in [("p", &self.p), ("p_h", &self.p_h)] {
            if *v < W::zero() || *v > W::one() {
                return Err(Error::ParamOutOfRange(format!("{name} = {v:?} is outside [0, 1]")));
            }
        }
        self.boundary.validate(g)
    }

    pub fn to_f64(&self) -> FkParams<f64> {
        FkParams {
            p: self.p.to_f64(),
            p_h: self.p_h.to_f64(),
            boundary: self.boundary.clone(),
        }
    }
}

impl FkParams<f64> {
    /// `p = 1 − e^{−2β}`, `p_h = 1 − e^{−2h}`.
    pub fn from_beta(beta: f64, h: f64, boundary: BoundarySet) -> Result<Self> {
        if beta < 0.0 || h < 0.0 || beta.is_nan() || h.is_nan() {
            return Err(Error::ParamOutOfRange(format!("β = {beta}, h = {h} must be nonnegative")));
        }
        Ok(FkParams {
            p: -(-2.0 * beta).exp_m1(),
            p_h: -(-2.0 * h).exp_m1(),
            boundary,
        })
    }
}

/// Rooted vertices (merged into one cluster) for a boundary set.
pub fn rooted_vertices(g: &Graph, boundary: &BoundarySet) -> Vec<bool> {
    let mut r = vec![false; g.num_vertices()];
    if let Some(gh) = g.ghost() {
        r[gh] = true;
    }
    if let Some(d) = g.wired() {
        r[d] = true;
    }
    for v in boundary.iter() {
        r[v] = true;
    }
    r
}

struct WeightTable<W> {
    forced: Vec<usize>,
    forced_mask: u64,
    m: usize,
    pow_p: Vec<W>,
    pow_h: Vec<W>,
    pow2: Vec<W>,
    rooted: Vec<bool>,
    ends: Vec<(usize, usize)>,
    n: usize,
}

impl<W: Scalar> WeightTable<W> {
    fn new(g: &Graph, params: &FkParams<W>) -> Result<Self> {
        params.validate(g)?;
        let m = g.num_edges();
        let len = g.num_slots();
        let mut forced: Vec<usize> = params.boundary.forced_slots(g);
        if params.p.is_one() {
            forced.extend(0..m);
        }
        if params.p_h.is_one() {
            forced.extend(m..len);
        }
        forced.sort_unstable();
        forced.dedup();
        let forced_mask = forced.iter().filter(|&&s| s < 64).fold(0u64, |a, &s| a | (1 << s));
        let odds = |x: &W| {
            if x.is_one() {
                W::one()
            } else {
                x.clone() / (W::one() - x.clone())
            }
        };
        let powers = |base: W, k: usize| {
            let mut v = vec![W::one()];
            for i in 0..k {
                v.push(v[i].clone() * base.clone());
            }
            v
        };
        let two = W::one() + W::one();
        Ok(WeightTable {
            forced,
            forced_mask,
            m,
            pow_p: powers(odds(&params.p), m),
            pow_h: powers(odds(&params.p_h), len - m),
            pow2: powers(two, g.num_vertices()),
            rooted: rooted_vertices(g, &params.boundary),
            ends: (0..len).map(|s| g.slot_endpoints(s)).collect(),
            n: g.num_vertices(),
        })
    }

    fn weight_of<I: Iterator<Item = usize>>(&self, open: I) -> W {
        let mut d = Dsu::new(self.n);
        let (mut ne, mut ns) = (0, 0);
        for s in open {
            if self.forced.binary_search(&s).is_err() {
                if s < self.m {
                    ne += 1;
                } else {
                    ns += 1;
                }
            }
            let (a, b) = self.ends[s];
            d.union(a, b);
        }
        let mut first_root = None;
        for v in 0..self.n {
            if self.rooted[v] {
                match first_root {
                    None => first_root = Some(v),
                    Some(r) => {
                        d.union(r, v);
                    }
                }
            }
        }
        let clusters = d.num_sets() - usize::from(first_root.is_some());
        self.pow_p[ne].clone() * self.pow_h[ns].clone() * self.pow2[clusters].clone()
    }

    fn weight_bits(&self, slots: &BitVec) -> W {
        if self.forced.iter().any(|&s| !slots.get(s)) {
            return W::zero();
        }
        self.weight_of(slots.iter_ones())
    }

    /// Fast path for universes of at most 64 slots.
    fn weight(&self, key: u64) -> W {
        if key & self.forced_mask != self.forced_mask {
            return W::zero();
        }
        let mut k = key;
        self.weight_of(std::iter::from_fn(move || {
            (k != 0).then(|| {
                let s = k.trailing_zeros() as usize;
                k &= k - 1;
                s
            })
        }))
    }
}

/// Unnormalized FK weight of `omega`; zero outside the support.
pub fn fk_weight<W: Scalar>(g: &Graph, omega: &PercolationConfig, params: &FkParams<W>) -> Result<W> {
    omega.validate(g)?;
    let t = WeightTable::new(g, params)?;
    Ok(t.weight_bits(&omega.to_slots(g)))
}

/// Full normalized FK table over slot keys.
pub fn exact_fk_distribution<W: Scalar>(g: &Graph, params: &FkParams<W>) -> Result<ExactDistribution<W>> {
    check_cap(g.num_slots())?;
    let t = WeightTable::new(g, params)?;
    exact_distribution(g.num_slots(), |k| t.weight(k))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SlotRule {
    Free,
    Open,
    Closed,
}

/// Per-slot forcing and the rooted vertex set for one Glauber chain.
#[derive(Clone, Debug, PartialEq)]
pub struct Constraints {
    pub rules: Vec<SlotRule>,
    pub rooted: Vec<bool>,
}

impl Constraints {
    pub fn for_params(g: &Graph, params: &FkParams<f64>) -> Result<Self> {
        params.validate(g)?;
        let mut rules = vec![SlotRule::Free; g.num_slots()];
        for s in 0..g.num_slots() {
            let q = if g.is_ghost_slot(s) { params.p_h } else { params.p };
            if q >= 1.0 {
                rules[s] = SlotRule::Open;
            }
        }
        for s in params.boundary.forced_slots(g) {
            rules[s] = SlotRule::Open;
        }
        Ok(Constraints {
            rules,
            rooted: rooted_vertices(g, &params.boundary),
        })
    }

    /// Free boundary on the subgraph induced by `keep`: every slot leaving
    /// it is closed.
    pub fn free_truncation(g: &Graph, keep: &[bool]) -> Self {
        let rules = (0..g.num_slots())
            .map(|s| {
                let (a, b) = g.slot_endpoints(s);
                let inside = |v: usize| keep[v] || Some(v) == g.ghost();
                if inside(a) && inside(b) {
                    SlotRule::Free
                } else {
                    SlotRule::Closed
                }
            })
            .collect();
        let mut rooted = vec![false; g.num_vertices()];
        if let Some(gh) = g.ghost() {
            rooted[gh] = true;
        }
        Constraints { rules, rooted }
    }

    /// Wired boundary around `keep`: every vertex outside is rooted and every
    /// slot with no endpoint in `keep` is open.
    pub fn wired_truncation(g: &Graph, keep: &[bool]) -> Self {
        let rules = (0..g.num_slots())
            .map(|s| {
                let (a, b) = g.slot_endpoints(s);
                if keep[a] || keep[b] {
                    SlotRule::Free
                } else {
                    SlotRule::Open
                }
            })
            .collect();
        let rooted = (0..g.num_vertices()).map(|v| !keep[v]).collect();
        Constraints { rules, rooted }
    }
}

/// Heat-bath dynamics for one constraint set.
pub struct GlauberChain<'a> {
    g: &'a Graph,
    q_edge: f64,
    q_site: f64,
    lo_edge: f64,
    lo_site: f64,
    c: &'a Constraints,
    stamp: Vec<u32>,
    epoch: u32,
    queue: Vec<usize>,
}

fn lower(q: f64) -> f64 {
    if q <= 0.0 {
        0.0
    } else {
        q / (q + 2.0 * (1.0 - q))
    }
}

impl<'a> GlauberChain<'a> {
    pub fn new(g: &'a Graph, p: f64, p_h: f64, c: &'a Constraints) -> Self {
        GlauberChain {
            g,
            q_edge: p,
            q_site: p_h,
            lo_edge: lower(p),
            lo_site: lower(p_h),
            c,
            stamp: vec![0; g.num_vertices()],
            epoch: 0,
            queue: Vec::new(),
        }
    }

    /// Minimal state allowed by the constraints.
    pub fn bottom(&self) -> BitVec {
        let mut b = BitVec::zeros(self.g.num_slots());
        for (s, r) in self.c.rules.iter().enumerate() {
            if *r == SlotRule::Open {
                b.set(s, true);
            }
        }
        b
    }

    /// Maximal state allowed by the constraints.
    pub fn top(&self) -> BitVec {
        let mut b = BitVec::ones(self.g.num_slots());
        for (s, r) in self.c.rules.iter().enumerate() {
            if *r == SlotRule::Closed {
                b.set(s, false);
            }
        }
        b
    }

    fn next_epoch(&mut self) {
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.stamp.iter_mut().for_each(|x| *x = 0);
            self.epoch = 1;
        }
    }

    /// Searches the open slots (except `skip`) from `start`. Returns
    /// `(reached target, reached a rooted vertex)`, stopping at the first.
    fn search(&mut self, state: &BitVec, start: usize, target: usize, skip: usize) -> (bool, bool) {
        if self.c.rooted[start] {
            return (false, true);
        }
        self.next_epoch();
        self.queue.clear();
        self.queue.push(start);
        self.stamp[start] = self.epoch;
        let mut head = 0;
        while head < self.queue.len() {
            let v = self.queue[head];
            head += 1;
            for &(s, w) in self.g.slot_incident(v) {
                if s == skip || !state.get(s) || self.stamp[w] == self.epoch {
                    continue;
                }
                if w == target {
                    return (true, false);
                }
                if self.c.rooted[w] {
                    return (false, true);
                }
                self.stamp[w] = self.epoch;
                self.queue.push(w);
            }
        }
        (false, false)
    }

    /// Whether the endpoints of `s` are joined without `s`, with all rooted
    /// vertices counted as one.
    fn connected_off(&mut self, state: &BitVec, s: usize) -> bool {
        let (a, b) = self.g.slot_endpoints(s);
        if self.c.rooted[a] && self.c.rooted[b] {
            return true;
        }
        let (hit, rooted_a) = self.search(state, a, b, s);
        if hit {
            return true;
        }
        if !rooted_a {
            return false;
        }
        let (hit, rooted_b) = self.search(state, b, a, s);
        hit || rooted_b
    }

    /// Resamples slot `s` from its conditional law using the uniform `u`.
    /// Monotone in `state` for fixed `u`.
    pub fn update(&mut self, state: &mut BitVec, s: usize, u: f64) {
        let open = match self.c.rules[s] {
            SlotRule::Open => true,
            SlotRule::Closed => false,
            SlotRule::Free => {
                let (q, lo) = if self.g.is_ghost_slot(s) {
                    (self.q_site, self.lo_site)
                } else {
                    (self.q_edge, self.lo_edge)
                };
                if u < lo {
                    true
                } else if u >= q {
                    false
                } else {
                    self.connected_off(state, s)
                }
            }
        };
        state.set(s, open);
    }

    pub fn sweep(&mut self, state: &mut BitVec, us: &[f64]) {
        for (s, &u) in us.iter().enumerate() {
            self.update(state, s, u);
        }
    }
}

/// One heat-bath update of `site` (a slot index) driven by `u`.
pub fn glauber_step(
    g: &Graph,
    omega: &PercolationConfig,
    site: usize,
    u: f64,
    params: &FkParams<f64>,
) -> Result<PercolationConfig> {
    omega.validate(g)?;
    if site >= g.num_slots() {
        return Err(Error::InvalidIndex(site));
    }
    let c = Constraints::for_params(g, params)?;
    let mut chain = GlauberChain::new(g, params.p, params.p_h, &c);
    let mut state = omega.to_slots(g);
    chain.update(&mut state, site, u);
    PercolationConfig::from_slots(g, &state)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CftpOptions {
    /// Largest backward horizon, in sweeps, before giving up.
    pub max_sweeps: usize,
}

impl Default for CftpOptions {
    fn default() -> Self {
        CftpOptions { max_sweeps: 1 << 16 }
    }
}

fn sweep_uniforms(seed: u64, t: u64, len: usize) -> Vec<f64> {
    let mut rng = stream_rng(seed, t);
    (0..len).map(|_| rng.gen::<f64>()).collect()
}

/// Grand coupling of several constraint sets on one graph: every chain uses
/// the same uniforms per (time, slot). Returns one exact sample per chain,
/// all taken at the common coalescence horizon.
pub fn cftp_coupled(
    g: &Graph,
    p: f64,
    p_h: f64,
    chains: &[Constraints],
    seed: u64,
    opts: CftpOptions,
) -> Result<Vec<BitVec>> {
    for (name, v) in [("p", p), ("p_h", p_h)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::ParamOutOfRange(format!("{name} = {v} is outside [0, 1]")));
        }
    }
    let len = g.num_slots();
    let mut runners: Vec<GlauberChain> = chains.iter().map(|c| GlauberChain::new(g, p, p_h, c)).collect();
    let mut uniforms: Vec<Vec<f64>> = Vec::new();
    let mut horizon = 1usize;
    loop {
        while uniforms.len() < horizon {
            let t = uniforms.len() as u64 + 1;
            uniforms.push(sweep_uniforms(seed, t, len));
        }
        let mut out = Vec::with_capacity(runners.len());
        let mut all = true;
        for r in runners.iter_mut() {
            let mut top = r.top();
            let mut bot = r.bottom();
            for t in (0..horizon).rev() {
                r.sweep(&mut top, &uniforms[t]);
                r.sweep(&mut bot, &uniforms[t]);
            }
            if top != bot {
                all = false;
                break;
            }
            out.push(top);
        }
        if all {
            return Ok(out);
        }
        if horizon >= opts.max_sweeps {
            return Err(Error::CoalescenceCap(horizon));
        }
        horizon *= 2;
    }
}

/// Exact FK sample by monotone coupling from the past.
pub fn cftp_sample(g: &Graph, params: &FkParams<f64>, seed: u64) -> Result<PercolationConfig> {
    cftp_sample_with(g, params, seed, CftpOptions::default())
}

/// `n` independent samples; sample `i` uses seed `derive_seed(seed, i)`.
pub fn cftp_samples(g: &Graph, params: &FkParams<f64>, n: usize, seed: u64) -> Result<Vec<PercolationConfig>> {
    params.validate(g)?;
    (0..n as u64)
        .into_par_iter()
        .map(|i| cftp_sample(g, params, derive_seed(seed, i)))
        .collect()
}

pub fn cftp_sample_with(g: &Graph, params: &FkParams<f64>, seed: u64, opts: CftpOptions) -> Result<PercolationConfig> {
    let c = Constraints::for_params(g, params)?;
    let out = cftp_coupled(g, params.p, params.p_h, std::slice::from_ref(&c), seed, opts)?;
    PercolationConfig::from_slots(g, &out[0])
}

/// Nested truncations of one ambient graph: level `i` keeps the vertices
/// flagged in `levels[i].1`; `window` lists ambient slots inside every level.
#[derive(Clone, Debug)]
pub struct NestedTruncations {
    pub ambient: Graph,
    pub levels: Vec<(usize, Vec<bool>)>,
    pub window: Vec<usize>,
}

/// Coupled free and wired samples restricted to the window, one per level.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SandwichTrace {
    pub ns: Vec<usize>,
    pub free: Vec<String>,
    pub wired: Vec<String>,
}

/// One common-randomness run over all levels. The ordering
/// `free_n ≤ free_{n+1} ≤ wired_{n+1} ≤ wired_n` on the window is asserted.
pub fn monotone_sandwich_trace(nested: &NestedTruncations, p: f64, p_h: f64, seed: u64) -> Result<SandwichTrace> {
    let g = &nested.ambient;
    let mut chains = Vec::new();
    for (_, keep) in &nested.levels {
        chains.push(Constraints::free_truncation(g, keep));
    }
    for (_, keep) in &nested.levels {
        chains.push(Constraints::wired_truncation(g, keep));
    }
    let out = cftp_coupled(g, p, p_h, &chains, seed, CftpOptions::default())?;
    let k = nested.levels.len();
    let proj: Vec<BitVec> = out.iter().map(|s| s.project(&nested.window)).collect::<Result<_>>()?;
    for i in 0..k {
        assert!(proj[i].is_subset_of(&proj[k + i]), "free exceeds wired at level {i}");
        if i + 1 < k {
            assert!(proj[i].is_subset_of(&proj[i + 1]), "free trace decreased at level {i}");
            assert!(proj[k + i + 1].is_subset_of(&proj[k + i]), "wired trace increased at level {i}");
        }
    }
    Ok(SandwichTrace {
        ns: nested.levels.iter().map(|(n, _)| *n).collect(),
        free: proj[..k].iter().map(|b| b.to_bit_string()).collect(),
        wired: proj[k..].iter().map(|b| b.to_bit_string()).collect(),
    })
}
