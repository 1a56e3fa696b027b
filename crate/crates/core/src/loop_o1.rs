//! The Loop O(1) model: exact weights and tables, the parameter maps to
//! FK-Ising, and the two-stage sampler (FK sample, then a uniform even
//! subgraph of the open cluster structure).

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::cycles::{relative_even_generators, sample_uniform_even, TreeStrategy};
use crate::error::{Error, Result};
use crate::fk::{cftp_sample, FkParams};
use crate::gf2::BitVec;
use crate::graph::{odd_boundary_slots, BoundarySet, Graph, PercolationConfig};
use crate::oracle::{check_cap, exact_distribution, ExactDistribution, Scalar};
use crate::rng::{derive_seed, stream_rng};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LoopParams<W = f64> {
    pub x: W,
    pub y: W,
    pub boundary: BoundarySet,
}

impl<W: Scalar> LoopParams<W> {
    pub fn new(x: W, y: W, boundary: BoundarySet) -> Self {
        LoopParams { x, y, boundary }
    }

    /// Weights accept any nonnegative activities.
    pub fn validate_weights(&self, g: &Graph) -> Result<()> {
        for (name, v) in [("x", &self.x), ("y", &self.y)] {
            if v.is_negative() {
                return Err(Error::ParamOutOfRange(format!("{name} = {v:?} is negative")));
            }
        }
        self.boundary.validate(g)
    }

    /// Samplers need activities in `[0, 1]`.
    pub fn validate_sampler(&self, g: &Graph) -> Result<()> {
        self.validate_weights(g)?;
        for (name, v) in [("x", &self.x), ("y", &self.y)] {
            if *v > W::one() {
                return Err(Error::ParamOutOfRange(format!("{name} = {v:?} exceeds 1")));
            }
        }
        Ok(())
    }

    /// FK parameters `p = 2x/(1+x)`, `p_h = 2y/(1+y)` with the same boundary.
    pub fn fk_params(&self) -> FkParams<W> {
        FkParams {
            p: p_of_x(&self.x),
            p_h: p_of_x(&self.y),
            boundary: self.boundary.clone(),
        }
    }

    pub fn to_f64(&self) -> LoopParams<f64> {
        LoopParams {
            x: self.x.to_f64(),
            y: self.y.to_f64(),
            boundary: self.boundary.clone(),
        }
    }
}

/// `p = 2x / (1 + x)`.
pub fn p_of_x<W: Scalar>(x: &W) -> W {
    let two = W::one() + W::one();
    two * x.clone() / (W::one() + x.clone())
}

/// `x = p / (2 − p)`.
pub fn x_of_p<W: Scalar>(p: &W) -> W {
    let two = W::one() + W::one();
    p.clone() / (two - p.clone())
}

/// All parameter conventions for one point, as recorded in reports.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ParamsMap {
    pub x: f64,
    pub y: f64,
    pub p: f64,
    pub p_h: f64,
    pub beta: Option<f64>,
    pub h: Option<f64>,
}

impl ParamsMap {
    pub fn from_loop(x: f64, y: f64) -> Result<Self> {
        check_unit("x", x)?;
        check_unit("y", y)?;
        Ok(ParamsMap {
            x,
            y,
            p: p_of_x(&x),
            p_h: p_of_x(&y),
            beta: None,
            h: None,
        })
    }

    pub fn from_fk(p: f64, p_h: f64) -> Result<Self> {
        check_unit("p", p)?;
        check_unit("p_h", p_h)?;
        Ok(ParamsMap {
            x: x_of_p(&p),
            y: x_of_p(&p_h),
            p,
            p_h,
            beta: None,
            h: None,
        })
    }

    /// `x = tanh β`, `p = 1 − e^{−2β}` (and likewise for `h`).
    pub fn from_beta(beta: f64, h: f64) -> Result<Self> {
        if !(beta >= 0.0 && h >= 0.0) {
            return Err(Error::ParamOutOfRange(format!("β = {beta}, h = {h} must be nonnegative")));
        }
        Ok(ParamsMap {
            x: beta.tanh(),
            y: h.tanh(),
            p: -(-2.0 * beta).exp_m1(),
            p_h: -(-2.0 * h).exp_m1(),
            beta: Some(beta),
            h: Some(h),
        })
    }
}

fn check_unit(name: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::ParamOutOfRange(format!("{name} = {v} is outside [0, 1]")))
    }
}

/// Precomputed evaluation of the Loop weight over slot keys.
struct LoopTable<W> {
    forced_mask: u64,
    m: usize,
    parity: Vec<u128>,
    pow_x: Vec<W>,
    pow_y: Vec<W>,
}

impl<W: Scalar> LoopTable<W> {
    fn new(g: &Graph, params: &LoopParams<W>) -> Result<Self> {
        params.validate_weights(g)?;
        let len = g.num_slots();
        check_cap(len)?;
        let constrained: Vec<usize> = (0..g.num_vertices())
            .filter(|&v| g.is_ordinary(v) && !params.boundary.contains(v) && !g.slot_incident(v).is_empty())
            .collect();
        // at most 2 * 22 constrained endpoints
        let mut index = vec![usize::MAX; g.num_vertices()];
        for (i, &v) in constrained.iter().enumerate() {
            index[v] = i;
        }
        let parity = (0..len)
            .map(|s| {
                let (a, b) = g.slot_endpoints(s);
                let bit = |v: usize| if index[v] == usize::MAX { 0u128 } else { 1u128 << index[v] };
                bit(a) ^ bit(b)
            })
            .collect();
        let forced_mask = params.boundary.forced_slots(g).iter().fold(0u64, |a, &s| a | (1 << s));
        let powers = |base: &W, k: usize| {
            let mut v = vec![W::one()];
            for i in 0..k {
                v.push(v[i].clone() * base.clone());
            }
            v
        };
        Ok(LoopTable {
            forced_mask,
            m: g.num_edges(),
            parity,
            pow_x: powers(&params.x, g.num_edges()),
            pow_y: powers(&params.y, len - g.num_edges()),
        })
    }

    fn weight(&self, key: u64) -> W {
        if key & self.forced_mask != self.forced_mask {
            return W::zero();
        }
        let mut par = 0u128;
        let mut k = key;
        while k != 0 {
            let s = k.trailing_zeros() as usize;
            k &= k - 1;
            par ^= self.parity[s];
        }
        if par != 0 {
            return W::zero();
        }
        let edge_mask = (1u64 << self.m) - 1;
        let ne = (key & edge_mask).count_ones() as usize;
        let ns = (key & !edge_mask).count_ones() as usize;
        self.pow_x[ne].clone() * self.pow_y[ns].clone()
    }
}

/// `x^#open edges · y^#open vertices · 1{∂η ⊂ B} · 1{η_B ≡ 1}`.
pub fn loop_weight<W: Scalar>(g: &Graph, eta: &PercolationConfig, params: &LoopParams<W>) -> Result<W> {
    eta.validate(g)?;
    params.validate_weights(g)?;
    let slots = eta.to_slots(g);
    if params.boundary.forced_slots(g).iter().any(|&s| !slots.get(s)) {
        return Ok(W::zero());
    }
    if odd_boundary_slots(g, &slots)
        .iter()
        .any(|v| !params.boundary.contains(*v))
    {
        return Ok(W::zero());
    }
    let ne = eta.edge_bits.count_ones();
    let ns = eta.vertex_bits.count_ones();
    Ok(num_traits::pow(params.x.clone(), ne) * num_traits::pow(params.y.clone(), ns))
}

/// Normalized Loop O(1) table over slot keys.
pub fn exact_loop_distribution<W: Scalar>(g: &Graph, params: &LoopParams<W>) -> Result<ExactDistribution<W>> {
    let t = LoopTable::new(g, params)?;
    exact_distribution(g.num_slots(), |k| t.weight(k))
}

/// Pointwise OR with independent Bernoulli bits (`x` on edges, `y` on
/// ghost edges).
pub fn bernoulli_union<R: Rng + ?Sized>(
    g: &Graph,
    eta: &PercolationConfig,
    x: f64,
    y: f64,
    rng: &mut R,
) -> Result<PercolationConfig> {
    eta.validate(g)?;
    check_unit("x", x)?;
    check_unit("y", y)?;
    let mut out = eta.clone();
    for e in 0..g.num_edges() {
        if rng.gen::<f64>() < x {
            out.edge_bits.set(e, true);
        }
    }
    for &s in g.ghost_sites() {
        if rng.gen::<f64>() < y {
            out.vertex_bits.set(s, true);
        }
    }
    Ok(out)
}

/// Per-slot success probabilities `(x, …, x, y, …, y)`.
pub fn slot_activities<W: Scalar>(g: &Graph, x: &W, y: &W) -> Vec<W> {
    (0..g.num_slots())
        .map(|s| if g.is_ghost_slot(s) { y.clone() } else { x.clone() })
        .collect()
}

/// Tree choice for the second stage: fundamental cycles of a BFS forest,
/// or the forest-to-Δ construction on wired graphs.
pub fn default_strategy(g: &Graph, b: &BoundarySet) -> TreeStrategy {
    if g.wired().is_some() && b.iter().all(|v| Some(v) == g.wired()) {
        TreeStrategy::ForestToBoundary
    } else {
        TreeStrategy::Bfs
    }
}

/// Two-stage sampler: `ω′` by coupling from the past, then a uniform
/// element of `{ω ≤ ω′ : ∂ω ⊂ B, ω_B ≡ 1}`.
pub fn couple_sample(g: &Graph, params: &LoopParams<f64>, seed: u64) -> Result<PercolationConfig> {
    couple_sample_with(g, params, seed, default_strategy(g, &params.boundary))
}

pub fn couple_sample_with(
    g: &Graph,
    params: &LoopParams<f64>,
    seed: u64,
    strategy: TreeStrategy,
) -> Result<PercolationConfig> {
    params.validate_sampler(g)?;
    let omega = cftp_sample(g, &params.fk_params(), derive_seed(seed, 0))?;
    let open = omega.to_slots(g);
    let eta = uniform_below(g, &open, &params.boundary, strategy, derive_seed(seed, 1))?;
    assert_support(g, &eta, &params.boundary);
    assert!(eta.is_subset_of(&open), "sample escapes the FK configuration");
    PercolationConfig::from_slots(g, &eta)
}

/// Uniform element of `{ω ≤ open : ∂ω ⊂ B, ω_B ≡ 1}` as a slot vector.
pub fn uniform_below(g: &Graph, open: &BitVec, b: &BoundarySet, strategy: TreeStrategy, seed: u64) -> Result<BitVec> {
    let rs = relative_even_generators(g, open, b, strategy)?;
    let mut rng = stream_rng(seed, 0);
    let mut eta = sample_uniform_even(&rs.generators, &mut rng);
    eta.xor_assign(&rs.particular);
    Ok(eta)
}

/// Panics unless `∂η ⊂ B` and the forced bits on `B` are set.
pub fn assert_support(g: &Graph, eta: &BitVec, b: &BoundarySet) {
    for v in odd_boundary_slots(g, eta) {
        assert!(b.contains(v), "sample has odd vertex {v} outside the boundary set");
    }
    for s in b.forced_slots(g) {
        assert!(eta.get(s), "sample has a closed forced slot {s}");
    }
}

/// `n` independent samples; sample `i` uses seed `derive_seed(seed, i)`.
pub fn couple_samples(g: &Graph, params: &LoopParams<f64>, n: usize, seed: u64) -> Result<Vec<PercolationConfig>> {
    params.validate_sampler(g)?;
    (0..n as u64)
        .into_par_iter()
        .map(|i| couple_sample(g, params, derive_seed(seed, i)))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UniformityReport {
    /// Number of values of `η′` examined.
    pub conditionals: usize,
    /// Largest `|P(η = ω | η′) − 1/|S(η′)||` over all pairs.
    pub max_deviation: f64,
    /// Whether every conditional support equals `S(η′)` exactly.
    pub supports_match: bool,
    pub ok: bool,
}

/// From the exact joint law of `(η, η ∨ X)`, checks that the conditional of
/// `η` given `η ∨ X = ω′` is uniform on `{ω ≤ ω′ : ∂ω ⊂ B, ω_B ≡ 1}`.
pub fn conditional_uniformity_check<W: Scalar>(g: &Graph, params: &LoopParams<W>) -> Result<UniformityReport> {
    params.validate_sampler(g)?;
    let len = g.num_slots();
    if len > 14 {
        return Err(Error::StateSpaceTooLarge { bits: len, cap: 14 });
    }
    let loop_law = exact_loop_distribution(g, params)?;
    let act = slot_activities(g, &params.x, &params.y);
    let full = (1u64 << len) - 1;
    // joint[b] = list of (a, P(η = a, η′ = b))
    let mut joint: Vec<Vec<(u64, W)>> = vec![Vec::new(); 1 << len];
    for (a, pa) in loop_law.entries() {
        let free = full & !a;
        let mut sub = free;
        loop {
            let b = a | sub;
            let mut w = pa.clone();
            for (t, xt) in act.iter().enumerate() {
                if (b >> t) & 1 == 0 {
                    w = w * (W::one() - xt.clone());
                } else if (a >> t) & 1 == 0 {
                    w = w * xt.clone();
                }
            }
            if !w.is_zero() {
                joint[b as usize].push((*a, w));
            }
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & free;
        }
    }
    let forced = params.boundary.forced_slots(g);
    let mut report = UniformityReport {
        conditionals: 0,
        max_deviation: 0.0,
        supports_match: true,
        ok: true,
    };
    for (b, row) in joint.iter().enumerate() {
        if row.is_empty() {
            continue;
        }
        report.conditionals += 1;
        let b = b as u64;
        let mut target: Vec<u64> = Vec::new();
        let mut sub = b;
        loop {
            let v = BitVec::from_key(len, sub);
            let even = odd_boundary_slots(g, &v).iter().all(|x| params.boundary.contains(*x));
            if even && forced.iter().all(|&s| v.get(s)) {
                target.push(sub);
            }
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & b;
        }
        target.sort_unstable();
        let mut got: Vec<u64> = row.iter().map(|(a, _)| *a).collect();
        got.sort_unstable();
        if got != target {
            report.supports_match = false;
        }
        let total = row.iter().fold(W::zero(), |acc, (_, w)| acc + w.clone());
        let uniform = 1.0 / target.len() as f64;
        for (_, w) in row {
            let dev = ((w.clone() / total.clone()).to_f64() - uniform).abs();
            report.max_deviation = report.max_deviation.max(dev);
        }
    }
    report.ok = report.supports_match && report.max_deviation < 1e-12;
    Ok(report)
}

/// Complementing every edge maps the Loop law at `(x, y)` to the law at
/// `(1/x, y)` when each constrained vertex has even degree.
pub fn edge_complement(g: &Graph, key: u64) -> u64 {
    key ^ ((1u64 << g.num_edges()) - 1)
}

pub fn edge_complement_params<W: Scalar>(g: &Graph, params: &LoopParams<W>) -> Result<LoopParams<W>> {
    params.validate_weights(g)?;
    if params.x.is_zero() {
        return Err(Error::ParamOutOfRange("x must be positive".into()));
    }
    for v in g.ordinary_vertices() {
        if !params.boundary.contains(v) && g.degree(v) % 2 == 1 {
            return Err(Error::InvalidBoundary(format!("vertex {v} has odd degree")));
        }
    }
    Ok(LoopParams {
        x: W::one() / params.x.clone(),
        y: params.y.clone(),
        boundary: params.boundary.clone(),
    })
}

/// Complementing every slot maps `(x, y)` to `(1/x, 1/y)` when every
/// ordinary vertex is a ghost site of odd degree and `B = ∅`.
pub fn full_complement(g: &Graph, key: u64) -> u64 {
    key ^ ((1u64 << g.num_slots()) - 1)
}

pub fn full_complement_params<W: Scalar>(g: &Graph, params: &LoopParams<W>) -> Result<LoopParams<W>> {
    params.validate_weights(g)?;
    if params.x.is_zero() || params.y.is_zero() {
        return Err(Error::ParamOutOfRange("x and y must be positive".into()));
    }
    if !params.boundary.is_empty() || g.wired().is_some() {
        return Err(Error::InvalidBoundary("full complement needs a free boundary".into()));
    }
    for v in g.ordinary_vertices() {
        if g.site_slot(v).is_none() || g.degree(v) % 2 == 0 {
            return Err(Error::InvalidBoundary(format!(
                "vertex {v} must be an odd-degree ghost site"
            )));
        }
    }
    Ok(LoopParams {
        x: W::one() / params.x.clone(),
        y: W::one() / params.y.clone(),
        boundary: BoundarySet::free(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fk::exact_fk_distribution;
    use crate::graph::{attach_ghost, build_graph, wired_quotient, FamilySpec};
    use crate::oracle::{empirical_distribution, tv_distance};
    use num_rational::BigRational;

    fn fam(s: FamilySpec) -> Graph {
        build_graph(&s).unwrap()
    }

    fn r(a: i64, b: i64) -> BigRational {
        BigRational::new(a.into(), b.into())
    }

    #[test]
    fn weight_examples() {
        let k3 = fam(FamilySpec::Complete(3));
        let params = LoopParams::new(0.5, 0.0, BoundarySet::free());
        let zero = PercolationConfig::zeros(&k3);
        assert_eq!(loop_weight(&k3, &zero, &params).unwrap(), 1.0);
        let mut one = zero.clone();
        one.edge_bits.set(0, true);
        assert_eq!(loop_weight(&k3, &one, &params).unwrap(), 0.0);
        let full = PercolationConfig::full(&k3);
        assert_eq!(loop_weight(&k3, &full, &params).unwrap(), 0.125);
    }

    #[test]
    fn exact_tables() {
        let k3 = fam(FamilySpec::Complete(3));
        let d = exact_loop_distribution(&k3, &LoopParams::new(r(1, 1), r(0, 1), BoundarySet::free())).unwrap();
        assert_eq!(d.entries(), &[(0, r(1, 2)), (7, r(1, 2))]);
        let d = exact_loop_distribution(&k3, &LoopParams::new(0.0, 0.0, BoundarySet::free())).unwrap();
        assert_eq!(d.entries(), &[(0, 1.0)]);
        let k4 = fam(FamilySpec::Complete(4));
        let d = exact_loop_distribution(&k4, &LoopParams::new(r(1, 1), r(0, 1), BoundarySet::free())).unwrap();
        assert_eq!(d.support_len(), 8);
        assert!(d.entries().iter().all(|(_, w)| *w == r(1, 8)));
    }

    #[test]
    fn parameter_maps() {
        assert_eq!(p_of_x(&r(1, 3)), r(1, 2));
        assert_eq!(p_of_x(&r(1, 1)), r(1, 1));
        assert_eq!(x_of_p(&r(1, 2)), r(1, 3));
        let m = ParamsMap::from_beta(0.5, 0.0).unwrap();
        assert!((p_of_x(&m.x) - m.p).abs() < 1e-14);
        assert!((m.p - (1.0 - (-1.0f64).exp())).abs() < 1e-15);
        for beta in [0.0, 0.1, 0.7, 2.0, 9.0] {
            let t: f64 = f64::tanh(beta);
            assert!((2.0 * t / (1.0 + t) - (1.0 - (-2.0 * beta).exp())).abs() < 1e-14);
        }
        assert!(ParamsMap::from_loop(1.5, 0.0).is_err());
        assert!(ParamsMap::from_beta(-1.0, 0.0).is_err());
    }

    #[test]
    fn bernoulli_union_extremes() {
        let g = attach_ghost(&fam(FamilySpec::Cycle(4)), &[0, 1]).unwrap();
        let mut rng = stream_rng(1, 2);
        let mut eta = PercolationConfig::zeros(&g);
        eta.edge_bits.set(2, true);
        assert_eq!(bernoulli_union(&g, &eta, 0.0, 0.0, &mut rng).unwrap(), eta);
        let all = bernoulli_union(&g, &eta, 1.0, 0.0, &mut rng).unwrap();
        assert_eq!(all.edge_bits.count_ones(), 4);
    }

    #[test]
    fn k3_coupling_identity() {
        let k3 = fam(FamilySpec::Complete(3));
        let params = LoopParams::new(r(1, 2), r(0, 1), BoundarySet::free());
        let lp = exact_loop_distribution(&k3, &params).unwrap();
        let pushed = lp.bernoulli_or(&slot_activities(&k3, &params.x, &params.y)).unwrap();
        let fk = exact_fk_distribution(&k3, &params.fk_params()).unwrap();
        assert_eq!(pushed, fk);
    }

    #[test]
    fn coupling_sampler_cases() {
        let k3 = fam(FamilySpec::Complete(3));
        let p = LoopParams::new(1.0, 0.0, BoundarySet::free());
        let n = 4000;
        let full = (0..n)
            .filter(|&i| couple_sample(&k3, &p, i).unwrap().edge_bits.count_ones() == 3)
            .count();
        assert!((1800..2200).contains(&full), "{full}");
        let p0 = LoopParams::new(0.0, 0.0, BoundarySet::free());
        assert!(couple_sample(&k3, &p0, 3).unwrap().edge_bits.is_zero());
        assert!(couple_sample(&k3, &LoopParams::new(1.2, 0.0, BoundarySet::free()), 3).is_err());
    }

    #[test]
    fn wired_path_sampler_matches_exact() {
        let q = wired_quotient(&fam(FamilySpec::Path(6)), &[1, 2, 3, 4]).unwrap();
        let params = LoopParams::new(0.6, 0.0, BoundarySet::wired(&q).unwrap());
        let exact = exact_loop_distribution(&q, &params).unwrap();
        let samples = couple_samples(&q, &params, 20_000, 11).unwrap();
        let emp = empirical_distribution(q.num_slots(), samples.iter().map(|s| s.to_key(&q))).unwrap();
        assert!(tv_distance(&emp, &exact).unwrap() < 0.02);
    }

    #[test]
    fn conditional_uniformity_small() {
        let k3 = fam(FamilySpec::Complete(3));
        let rep = conditional_uniformity_check(&k3, &LoopParams::new(r(1, 2), r(0, 1), BoundarySet::free())).unwrap();
        assert!(rep.ok, "{rep:?}");
        let k4 = attach_ghost(&fam(FamilySpec::Complete(4)), &[0, 2]).unwrap();
        let rep = conditional_uniformity_check(&k4, &LoopParams::new(0.4, 0.7, BoundarySet::free())).unwrap();
        assert!(rep.ok, "{rep:?}");
    }

    #[test]
    fn complement_dualities() {
        // cycle: every vertex has degree 2
        let c5 = fam(FamilySpec::Cycle(5));
        let params = LoopParams::new(r(2, 5), r(0, 1), BoundarySet::free());
        let dual = edge_complement_params(&c5, &params).unwrap();
        let a = exact_loop_distribution(&c5, &params).unwrap();
        let b = exact_loop_distribution(&c5, &dual).unwrap();
        assert_eq!(a.pushforward(5, |k| edge_complement(&c5, k)), b);
        // K4 with a ghost edge everywhere: every degree is 3
        let k4 = attach_ghost(&fam(FamilySpec::Complete(4)), &[0, 1, 2, 3]).unwrap();
        let params = LoopParams::new(r(1, 3), r(3, 4), BoundarySet::free());
        let dual = full_complement_params(&k4, &params).unwrap();
        assert_eq!(dual.x, r(3, 1));
        let a = exact_loop_distribution(&k4, &params).unwrap();
        let b = exact_loop_distribution(&k4, &dual).unwrap();
        assert_eq!(a.pushforward(10, |k| full_complement(&k4, k)), b);
        assert!(edge_complement_params(&fam(FamilySpec::Path(3)), &params).is_err());
    }
}
