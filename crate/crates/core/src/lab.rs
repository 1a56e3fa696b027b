//! Exhaustion experiments on growing boxes of infinite graphs: projected
//! even-subgraph spaces, free against wired uniform even subgraphs, the rung
//! parity statistic on ladders, and Loop O(1) window convergence.
//!
//! Vertices of the infinite graphs are integer pairs. Box `n` is centered
//! at the origin; `G_n` is the induced subgraph and `G_n^w` additionally
//! sends every edge leaving the box to a single wired vertex Δ. Each slot
//! remembers the infinite edge it comes from, so windows are index-stable
//! across `n`.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cycles::{relative_even_generators, TreeStrategy};
use crate::error::{Error, Result};
use crate::fk::{monotone_sandwich_trace, NestedTruncations, SandwichTrace};
use crate::gf2::{project_space, Basis, BitVec};
use crate::graph::{attach_ghost, BoundarySet, Edge, FamilyTag, Graph};
use crate::loop_o1::{couple_samples, LoopParams, ParamsMap};
use crate::rng::{derive_seed, stream_rng};

pub type VKey = (i64, i64);
/// An infinite edge, endpoints in increasing order.
pub type EKey = (VKey, VKey);

/// Circumference of the cylinder family.
pub const CYLINDER_WIDTH: i64 = 4;

fn ekey(a: VKey, b: VKey) -> EKey {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExhaustionFamily {
    /// `Z`.
    Path,
    /// `Z × {0, 1}`.
    Ladder,
    /// `Z²`.
    Grid,
    /// Rooted binary tree; box `n` is depth at most `n`.
    BinaryTree,
    /// `Z × C_4`.
    Cylinder,
}

impl fmt::Display for ExhaustionFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ExhaustionFamily::Path => "path",
            ExhaustionFamily::Ladder => "ladder",
            ExhaustionFamily::Grid => "grid",
            ExhaustionFamily::BinaryTree => "binary-tree",
            ExhaustionFamily::Cylinder => "cylinder",
        };
        f.write_str(s)
    }
}

impl FromStr for ExhaustionFamily {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "path" | "z" => Ok(ExhaustionFamily::Path),
            "ladder" => Ok(ExhaustionFamily::Ladder),
            "grid" => Ok(ExhaustionFamily::Grid),
            "binary-tree" | "tree" => Ok(ExhaustionFamily::BinaryTree),
            "cylinder" => Ok(ExhaustionFamily::Cylinder),
            other => Err(Error::UnknownFamily(other.to_string())),
        }
    }
}

/// `G_n`, `G_n^w` and the infinite edge behind every slot.
#[derive(Clone, Debug)]
pub struct Truncation {
    pub n: usize,
    pub vertices: Vec<VKey>,
    pub free: Graph,
    pub free_keys: Vec<EKey>,
    pub wired: Graph,
    pub wired_keys: Vec<EKey>,
}

impl Truncation {
    pub fn free_slots(&self, window: &[EKey]) -> Result<Vec<usize>> {
        slots_for(&self.free_keys, window)
    }

    pub fn wired_slots(&self, window: &[EKey]) -> Result<Vec<usize>> {
        slots_for(&self.wired_keys, window)
    }
}

fn slots_for(keys: &[EKey], window: &[EKey]) -> Result<Vec<usize>> {
    let index: HashMap<EKey, usize> = keys.iter().enumerate().map(|(i, k)| (*k, i)).collect();
    window
        .iter()
        .map(|k| {
            index
                .get(k)
                .copied()
                .ok_or_else(|| Error::InvalidKeepSet(format!("window edge {k:?} is not in the truncation")))
        })
        .collect()
}

impl ExhaustionFamily {
    pub fn tag(&self) -> FamilyTag {
        match self {
            ExhaustionFamily::Path => FamilyTag::Path,
            ExhaustionFamily::Ladder => FamilyTag::Ladder,
            ExhaustionFamily::Grid => FamilyTag::Grid,
            ExhaustionFamily::BinaryTree => FamilyTag::Tree,
            ExhaustionFamily::Cylinder => FamilyTag::Cylinder,
        }
    }

    pub fn in_box(&self, v: VKey, n: usize) -> bool {
        let n = n as i64;
        match self {
            ExhaustionFamily::Path => v.1 == 0 && v.0.abs() <= n,
            ExhaustionFamily::Ladder => (0..2).contains(&v.1) && v.0.abs() <= n,
            ExhaustionFamily::Grid => v.0.abs() <= n && v.1.abs() <= n,
            ExhaustionFamily::BinaryTree => (0..=n).contains(&v.0) && v.1 >= 0 && v.1 < (1 << v.0),
            ExhaustionFamily::Cylinder => (0..CYLINDER_WIDTH).contains(&v.1) && v.0.abs() <= n,
        }
    }

    /// Vertices of box `n` in increasing order.
    pub fn box_vertices(&self, n: usize) -> Vec<VKey> {
        let m = n as i64;
        let mut out: Vec<VKey> = match self {
            ExhaustionFamily::Path => (-m..=m).map(|i| (i, 0)).collect(),
            ExhaustionFamily::Ladder => (-m..=m).flat_map(|i| [(i, 0), (i, 1)]).collect(),
            ExhaustionFamily::Grid => (-m..=m).flat_map(|i| (-m..=m).map(move |j| (i, j))).collect(),
            ExhaustionFamily::BinaryTree => (0..=m).flat_map(|d| (0..1i64 << d).map(move |i| (d, i))).collect(),
            ExhaustionFamily::Cylinder => (-m..=m).flat_map(|i| (0..CYLINDER_WIDTH).map(move |j| (i, j))).collect(),
        };
        out.sort_unstable();
        out
    }

    pub fn neighbors(&self, v: VKey) -> Vec<VKey> {
        let (i, j) = v;
        match self {
            ExhaustionFamily::Path => vec![(i - 1, 0), (i + 1, 0)],
            ExhaustionFamily::Ladder => vec![(i - 1, j), (i + 1, j), (i, 1 - j)],
            ExhaustionFamily::Grid => vec![(i - 1, j), (i + 1, j), (i, j - 1), (i, j + 1)],
            ExhaustionFamily::BinaryTree => {
                let mut out = vec![(i + 1, 2 * j), (i + 1, 2 * j + 1)];
                if i > 0 {
                    out.push((i - 1, j / 2));
                }
                out
            }
            ExhaustionFamily::Cylinder => vec![
                (i - 1, j),
                (i + 1, j),
                (i, (j + 1) % CYLINDER_WIDTH),
                (i, (j + CYLINDER_WIDTH - 1) % CYLINDER_WIDTH),
            ],
        }
    }

    pub fn truncation(&self, n: usize) -> Result<Truncation> {
        if n > 1 << 20 || (*self == ExhaustionFamily::BinaryTree && n > 20) {
            return Err(Error::InvalidSize(format!("truncation {n} is too large")));
        }
        let vertices = self.box_vertices(n);
        let index: HashMap<VKey, usize> = vertices.iter().enumerate().map(|(i, v)| (*v, i)).collect();
        let delta = vertices.len();
        let mut free_e: BTreeSet<EKey> = BTreeSet::new();
        let mut wired_e: BTreeSet<EKey> = BTreeSet::new();
        for &a in &vertices {
            for b in self.neighbors(a) {
                let k = ekey(a, b);
                if index.contains_key(&b) {
                    free_e.insert(k);
                }
                wired_e.insert(k);
            }
        }
        let build = |keys: &BTreeSet<EKey>, wired: bool| -> Result<(Graph, Vec<EKey>)> {
            let keys: Vec<EKey> = keys.iter().copied().collect();
            let edges = keys
                .iter()
                .enumerate()
                .map(|(id, (a, b))| Edge {
                    u: index.get(a).copied().unwrap_or(delta),
                    v: index.get(b).copied().unwrap_or(delta),
                    id,
                })
                .collect();
            let nv = if wired { delta + 1 } else { delta };
            let g = Graph::from_parts(nv, edges, None, wired.then_some(delta), Vec::new(), self.tag())?;
            Ok((g, keys))
        };
        let (free, free_keys) = build(&free_e, false)?;
        let (wired, wired_keys) = build(&wired_e, true)?;
        Ok(Truncation {
            n,
            vertices,
            free,
            free_keys,
            wired,
            wired_keys,
        })
    }

    /// Edges of `G_k`.
    pub fn window(&self, k: usize) -> Vec<EKey> {
        let vs = self.box_vertices(k);
        let mut out = BTreeSet::new();
        for &a in &vs {
            for b in self.neighbors(a) {
                if self.in_box(b, k) {
                    out.insert(ekey(a, b));
                }
            }
        }
        out.into_iter().collect()
    }

    /// The two rail edges between positions `i` and `i + 1` (ladder only).
    pub fn rung_cut(&self, i: i64) -> Result<Vec<EKey>> {
        if *self != ExhaustionFamily::Ladder {
            return Err(Error::InvalidCut(format!("rung cuts exist on the ladder, not on {self}")));
        }
        Ok(vec![ekey((i, 0), (i + 1, 0)), ekey((i, 1), (i + 1, 1))])
    }
}

/// Generators of the uniform even subgraph: BFS fundamental cycles on
/// `G_n` (free) or the forest-to-Δ construction on `G_n^w` (wired).
fn ues_generators(t: &Truncation, wired: bool, strategy: Option<TreeStrategy>) -> Result<Vec<BitVec>> {
    let (g, b, s) = if wired {
        (&t.wired, BoundarySet::wired(&t.wired)?, TreeStrategy::ForestToBoundary)
    } else {
        (&t.free, BoundarySet::free(), TreeStrategy::Bfs)
    };
    let open = BitVec::ones(g.num_slots());
    let rs = relative_even_generators(g, &open, &b, strategy.unwrap_or(s))?;
    Ok(rs.generators.elements().to_vec())
}

fn projected(gens: &[BitVec], window: &[usize]) -> Result<Basis> {
    let b = Basis::from_vectors(gens.first().map_or(0, |v| v.len()), gens)?;
    project_space(&b, window)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Stabilization {
    /// Smallest `N` with the same projected basis on `[N, n_max]`; absent
    /// when only `n_max` itself qualifies.
    pub n_stable: Option<usize>,
    pub ranks: Vec<(usize, usize)>,
    /// Rows of the final projected basis.
    pub basis: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProjectionReport {
    pub family: ExhaustionFamily,
    pub k: usize,
    pub n_max: usize,
    pub window: Vec<EKey>,
    pub free: Stabilization,
    pub wired: Stabilization,
    /// Every wired projected space contains the final one.
    pub wired_monotone: bool,
    /// Every free projected space is contained in the final wired one.
    pub free_below_wired: bool,
}

/// Projected free and wired even-subgraph spaces of window `k` for
/// `n = k..=n_max`.
pub fn projection_stabilization(family: ExhaustionFamily, k: usize, n_max: usize) -> Result<ProjectionReport> {
    if n_max < k {
        return Err(Error::InvalidSize(format!("n_max {n_max} is below k {k}")));
    }
    let window = family.window(k);
    let per_n: Vec<(usize, Basis, Basis)> = (k..=n_max)
        .into_par_iter()
        .map(|n| {
            let t = family.truncation(n)?;
            let f = projected(&ues_generators(&t, false, None)?, &t.free_slots(&window)?)?;
            let w = projected(&ues_generators(&t, true, None)?, &t.wired_slots(&window)?)?;
            Ok((n, f, w))
        })
        .collect::<Result<_>>()?;
    let stab = |pick: &dyn Fn(&(usize, Basis, Basis)) -> &Basis| {
        let last = pick(per_n.last().unwrap());
        let mut start = per_n.len() - 1;
        while start > 0 && pick(&per_n[start - 1]) == last {
            start -= 1;
        }
        Stabilization {
            n_stable: (start + 1 < per_n.len()).then(|| per_n[start].0),
            ranks: per_n.iter().map(|e| (e.0, pick(e).rank())).collect(),
            basis: last.rows().iter().map(|r| r.to_bit_string()).collect(),
        }
    };
    let final_w = &per_n.last().unwrap().2;
    Ok(ProjectionReport {
        family,
        k,
        n_max,
        window,
        free: stab(&|e| &e.1),
        wired: stab(&|e| &e.2),
        wired_monotone: per_n.iter().all(|e| final_w.is_subspace_of(&e.2)),
        free_below_wired: per_n.iter().all(|e| e.1.is_subspace_of(final_w)),
    })
}

/// Projected free (or wired) space of a window at one `n`.
pub fn projected_space(family: ExhaustionFamily, window: &[EKey], n: usize, wired: bool) -> Result<Basis> {
    let t = family.truncation(n)?;
    let slots = if wired { t.wired_slots(window)? } else { t.free_slots(window)? };
    projected(&ues_generators(&t, wired, None)?, &slots)
}

/// Samples of `sum of coin_i · gen_i`, projected to the window as keys.
fn ues_window_samples(gens: &[BitVec], window: &[usize], n_samples: usize, seed: u64) -> Result<Vec<u64>> {
    if window.len() > 64 {
        return Err(Error::InvalidKeepSet(format!("window has {} edges, at most 64 supported", window.len())));
    }
    let proj: Vec<u64> = gens
        .iter()
        .map(|g| Ok(g.project(window)?.to_key()))
        .collect::<Result<_>>()?;
    Ok((0..n_samples as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, i);
            let mut acc = 0u64;
            for chunk in proj.chunks(64) {
                let coins = rng.next_u64();
                for (j, v) in chunk.iter().enumerate() {
                    if (coins >> j) & 1 == 1 {
                        acc ^= v;
                    }
                }
            }
            acc
        })
        .collect())
}

/// Largest TV over all one- and two-edge marginals of two window samples,
/// with the pair attaining it.
pub fn max_pair_tv(a: &[u64], b: &[u64], width: usize) -> (f64, (usize, usize)) {
    let table = |s: &[u64]| {
        let mut t = vec![[0u32; 4]; width * width];
        for &x in s {
            for i in 0..width {
                let xi = ((x >> i) & 1) as usize;
                for j in i..width {
                    t[i * width + j][xi * 2 + ((x >> j) & 1) as usize] += 1;
                }
            }
        }
        t
    };
    let (ta, tb) = (table(a), table(b));
    let (na, nb) = (a.len().max(1) as f64, b.len().max(1) as f64);
    let mut best = (0.0, (0, 0));
    for i in 0..width {
        for j in i..width {
            let (ca, cb) = (&ta[i * width + j], &tb[i * width + j]);
            let tv = 0.5 * (0..4).map(|c| (ca[c] as f64 / na - cb[c] as f64 / nb).abs()).sum::<f64>();
            if tv > best.0 {
                best = (tv, (i, j));
            }
        }
    }
    best
}

/// Exact version of [`max_pair_tv`] for two uniform laws on subspaces.
pub fn exact_max_pair_tv(a: &Basis, b: &Basis) -> Result<f64> {
    let width = a.ambient_len();
    let law = |basis: &Basis, w: &[usize]| -> Result<[f64; 4]> {
        let p = project_space(basis, w)?;
        let elems = p.span_elements()?;
        let mut out = [0.0; 4];
        for e in &elems {
            let k = e.to_key() as usize;
            let k = if w.len() == 1 { k * 3 } else { (k & 1) * 2 + (k >> 1) };
            out[k] += 1.0 / elems.len() as f64;
        }
        Ok(out)
    };
    let mut best: f64 = 0.0;
    for i in 0..width {
        for j in i..width {
            let w: Vec<usize> = if i == j { vec![i] } else { vec![i, j] };
            let (la, lb) = (law(a, &w)?, law(b, &w)?);
            best = best.max(0.5 * (0..4).map(|c| (la[c] - lb[c]).abs()).sum::<f64>());
        }
    }
    Ok(best)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UesComparison {
    pub family: ExhaustionFamily,
    pub n: usize,
    pub window: Vec<EKey>,
    pub samples: usize,
    pub seed: u64,
    /// Largest TV over one- and two-edge window marginals, from samples.
    pub pair_tv: f64,
    pub worst_pair: (usize, usize),
    /// The same quantity computed from the projected spaces.
    pub exact_pair_tv: f64,
    /// TV of the full window law from samples (windows of at most 12 edges).
    pub joint_tv: Option<f64>,
    pub exact_joint_tv: Option<f64>,
}

/// Free (fundamental cycles on `G_n`) against wired (forest generating set
/// on `G_n^w`) uniform even subgraphs on a window.
pub fn free_vs_wired_ues(
    family: ExhaustionFamily,
    window: &[EKey],
    n: usize,
    n_samples: usize,
    seed: u64,
) -> Result<UesComparison> {
    let t = family.truncation(n)?;
    let (fw, ww) = (t.free_slots(window)?, t.wired_slots(window)?);
    let (fg, wg) = (ues_generators(&t, false, None)?, ues_generators(&t, true, None)?);
    let fs = ues_window_samples(&fg, &fw, n_samples, derive_seed(seed, 0))?;
    let ws = ues_window_samples(&wg, &ww, n_samples, derive_seed(seed, 1))?;
    let (pair_tv, worst_pair) = max_pair_tv(&fs, &ws, window.len());
    let (fb, wb) = (projected(&fg, &fw)?, projected(&wg, &ww)?);
    let exact_pair_tv = exact_max_pair_tv(&fb, &wb)?;
    let (joint_tv, exact_joint_tv) = if window.len() <= 12 {
        use crate::oracle::{empirical_distribution, tv_distance, ExactDistribution};
        let ef = empirical_distribution(window.len(), fs.iter().copied())?;
        let ew = empirical_distribution(window.len(), ws.iter().copied())?;
        let uf = ExactDistribution::<f64>::uniform(window.len(), fb.span_elements()?.iter().map(|v| v.to_key()))?;
        let uw = ExactDistribution::<f64>::uniform(window.len(), wb.span_elements()?.iter().map(|v| v.to_key()))?;
        (Some(tv_distance(&ef, &ew)?), Some(tv_distance(&uf, &uw)?))
    } else {
        (None, None)
    };
    Ok(UesComparison {
        family,
        n,
        window: window.to_vec(),
        samples: n_samples,
        seed,
        pair_tv,
        worst_pair,
        exact_pair_tv,
        joint_tv,
        exact_joint_tv,
    })
}

/// `|U ∩ F| mod 2` for a rung cut `F` of the wired ladder truncation.
pub fn parity_statistic(t: &Truncation, u: &BitVec, cut: &[usize]) -> Result<bool> {
    if t.wired.family_tag() != FamilyTag::Ladder {
        return Err(Error::InvalidCut("parity cuts are defined on ladder truncations".into()));
    }
    if u.len() != t.wired.num_slots() {
        return Err(Error::DimensionMismatch {
            expected: t.wired.num_slots(),
            got: u.len(),
        });
    }
    let mut keys: Vec<EKey> = cut
        .iter()
        .map(|&s| t.wired_keys.get(s).copied().ok_or(Error::InvalidIndex(s)))
        .collect::<Result<_>>()?;
    keys.sort_unstable();
    let valid = keys.len() == 2 && {
        let ((a0, b0), (a1, b1)) = (keys[0], keys[1]);
        a0.1 == 0 && a1.1 == 1 && a0.0 == a1.0 && b0 == (a0.0 + 1, 0) && b1 == (a1.0 + 1, 1)
    };
    if !valid {
        return Err(Error::InvalidCut(format!("{keys:?} is not a pair of rail edges at one position")));
    }
    Ok(cut.iter().filter(|&&s| u.get(s)).count() % 2 == 1)
}

/// Slots of every rung cut of `G_n^w`, left to right (including the cuts
/// through the edges to Δ).
pub fn all_rung_cuts(t: &Truncation) -> Result<Vec<Vec<usize>>> {
    let n = t.n as i64;
    (-n - 1..=n)
        .map(|i| t.wired_slots(&ExhaustionFamily::Ladder.rung_cut(i)?))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ParityReport {
    pub n: usize,
    pub samples: usize,
    pub seed: u64,
    pub cuts: usize,
    pub mean: f64,
    /// Samples whose parity differed between two cuts.
    pub invariance_violations: usize,
}

/// Parity of wired ladder uniform even subgraphs across every rung cut.
pub fn parity_experiment(n: usize, n_samples: usize, seed: u64) -> Result<ParityReport> {
    let t = ExhaustionFamily::Ladder.truncation(n)?;
    let gens = ues_generators(&t, true, None)?;
    let cuts = all_rung_cuts(&t)?;
    let len = t.wired.num_slots();
    let (ones, bad) = (0..n_samples as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, i);
            let mut u = BitVec::zeros(len);
            for chunk in gens.chunks(64) {
                let coins = rng.next_u64();
                for (j, g) in chunk.iter().enumerate() {
                    if (coins >> j) & 1 == 1 {
                        u.xor_assign(g);
                    }
                }
            }
            let xs: Vec<bool> = cuts.iter().map(|c| parity_statistic(&t, &u, c)).collect::<Result<_>>()?;
            let same = xs.iter().all(|&x| x == xs[0]);
            Ok((xs[0] as usize, (!same) as usize))
        })
        .try_reduce(|| (0, 0), |a, b| Ok((a.0 + b.0, a.1 + b.1)))?;
    Ok(ParityReport {
        n,
        samples: n_samples,
        seed,
        cuts: cuts.len(),
        mean: ones as f64 / n_samples.max(1) as f64,
        invariance_violations: bad,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub n: usize,
    pub next_n: usize,
    pub pair_tv: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub family: ExhaustionFamily,
    pub k: usize,
    pub params: ParamsMap,
    pub samples: usize,
    pub seed: u64,
    pub rows: Vec<ConvergenceRow>,
    /// Window open-edge frequencies at each `n`.
    pub densities: Vec<(usize, f64)>,
    pub sandwich: Option<SandwichTrace>,
}

/// Largest ambient slot count for which the coupled free/wired trace is run.
pub const SANDWICH_SLOT_CAP: usize = 4000;

fn with_field(g: &Graph, y: f64) -> Result<Graph> {
    if y > 0.0 {
        let sites: Vec<usize> = (0..g.num_vertices()).collect();
        attach_ghost(g, &sites)
    } else {
        Ok(g.clone())
    }
}

/// Free Loop O(1) on `G_n` (ghost on every vertex when `y > 0`) for each
/// `n` in `n_list`; reports window TV between consecutive sizes.
pub fn loop_convergence(
    family: ExhaustionFamily,
    k: usize,
    x: f64,
    y: f64,
    n_list: &[usize],
    n_samples: usize,
    seed: u64,
) -> Result<ConvergenceReport> {
    let params = ParamsMap::from_loop(x, y)?;
    let window = family.window(k);
    if window.len() > 64 {
        return Err(Error::InvalidKeepSet(format!("window has {} edges, at most 64 supported", window.len())));
    }
    let mut ns = n_list.to_vec();
    ns.sort_unstable();
    ns.dedup();
    if ns.iter().any(|&n| n < k) {
        return Err(Error::InvalidSize(format!("every n must be at least k = {k}")));
    }
    let mut samples = Vec::new();
    let mut densities = Vec::new();
    for (idx, &n) in ns.iter().enumerate() {
        let t = family.truncation(n)?;
        let g = with_field(&t.free, y)?;
        let slots = t.free_slots(&window)?;
        let lp = LoopParams::new(x, y, BoundarySet::free());
        let draws = couple_samples(&g, &lp, n_samples, derive_seed(seed, idx as u64))?;
        let keys: Vec<u64> = draws
            .iter()
            .map(|d| Ok(d.edge_bits.project(&slots)?.to_key()))
            .collect::<Result<_>>()?;
        let open: u64 = keys.iter().map(|k| k.count_ones() as u64).sum();
        densities.push((n, open as f64 / (n_samples.max(1) * window.len().max(1)) as f64));
        samples.push(keys);
    }
    let rows = (1..ns.len())
        .map(|i| ConvergenceRow {
            n: ns[i - 1],
            next_n: ns[i],
            pair_tv: max_pair_tv(&samples[i - 1], &samples[i], window.len()).0,
        })
        .collect();
    let sandwich = match ns.last() {
        Some(&top) => {
            let t = family.truncation(top)?;
            let ambient = with_field(&t.free, y)?;
            if ambient.num_slots() <= SANDWICH_SLOT_CAP {
                let levels = ns
                    .iter()
                    .map(|&n| {
                        let keep = (0..ambient.num_vertices())
                            .map(|v| v < t.vertices.len() && family.in_box(t.vertices[v], n))
                            .collect();
                        (n, keep)
                    })
                    .collect();
                let nested = NestedTruncations {
                    window: t.free_slots(&window)?,
                    ambient,
                    levels,
                };
                Some(monotone_sandwich_trace(&nested, params.p, params.p_h, derive_seed(seed, u64::MAX))?)
            } else {
                None
            }
        }
        None => None,
    };
    Ok(ConvergenceReport {
        family,
        k,
        params,
        samples: n_samples,
        seed,
        rows,
        densities,
        sandwich,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn truncations_are_nested() {
        for fam in [
            ExhaustionFamily::Path,
            ExhaustionFamily::Ladder,
            ExhaustionFamily::Grid,
            ExhaustionFamily::BinaryTree,
            ExhaustionFamily::Cylinder,
        ] {
            let a = fam.truncation(2).unwrap();
            let b = fam.truncation(3).unwrap();
            let kb: BTreeSet<EKey> = b.free_keys.iter().copied().collect();
            assert!(a.free_keys.iter().all(|k| kb.contains(k)));
            // the wired edges at n are exactly the free edges at n + 1 touching box n
            assert!(a.wired_keys.iter().all(|k| kb.contains(k)));
            assert!(a.free_slots(&fam.window(2)).is_ok());
            assert!(a.free_slots(&fam.window(3)).is_err());
            assert_eq!(fam.to_string().parse::<ExhaustionFamily>().unwrap(), fam);
        }
        let l = ExhaustionFamily::Ladder.truncation(1).unwrap();
        assert_eq!(l.free.num_vertices(), 6);
        assert_eq!(l.free.num_edges(), 7);
        assert_eq!(l.wired.num_edges(), 11);
    }

    #[test]
    fn path_free_space_is_trivial() {
        let r = projection_stabilization(ExhaustionFamily::Path, 2, 8).unwrap();
        assert!(r.free.ranks.iter().all(|&(_, rank)| rank == 0));
        // the wired path carries the through path
        assert!(r.wired.ranks.iter().all(|&(_, rank)| rank == 1));
    }

    #[test]
    fn ladder_stabilizes_with_through_class() {
        let r = projection_stabilization(ExhaustionFamily::Ladder, 3, 12).unwrap();
        let n = r.wired.n_stable.unwrap();
        assert!(n <= 8);
        assert!(r.wired_monotone && r.free_below_wired);
        let window = ExhaustionFamily::Ladder.window(3);
        let rail0: Vec<usize> = (0..window.len())
            .filter(|&i| window[i].0 .1 == 0 && window[i].1 .1 == 0)
            .collect();
        let v = BitVec::from_indices(window.len(), rail0).unwrap();
        let wired = projected_space(ExhaustionFamily::Ladder, &window, 12, true).unwrap();
        let free = projected_space(ExhaustionFamily::Ladder, &window, 12, false).unwrap();
        assert!(wired.contains(&v).unwrap());
        assert!(!free.contains(&v).unwrap());
    }

    #[test]
    fn grid_projections_agree() {
        let r = projection_stabilization(ExhaustionFamily::Grid, 1, 4).unwrap();
        assert_eq!(r.free.basis, r.wired.basis);
    }

    #[test]
    fn z_family_wired_is_all_or_nothing() {
        let window = ExhaustionFamily::Path.window(2);
        let cmp = free_vs_wired_ues(ExhaustionFamily::Path, &window, 5, 4000, 3).unwrap();
        assert_eq!(cmp.exact_joint_tv, Some(0.5));
        let w = projected_space(ExhaustionFamily::Path, &window, 5, true).unwrap();
        let elems: Vec<u64> = w.span_elements().unwrap().iter().map(|v| v.to_key()).collect();
        assert_eq!(elems, vec![0, (1 << window.len()) - 1]);
    }

    #[test]
    fn parity_examples() {
        let t = ExhaustionFamily::Ladder.truncation(2).unwrap();
        let cuts = all_rung_cuts(&t).unwrap();
        let empty = BitVec::zeros(t.wired.num_slots());
        assert!(cuts.iter().all(|c| !parity_statistic(&t, &empty, c).unwrap()));
        let rail: Vec<usize> = (0..t.wired_keys.len())
            .filter(|&s| {
                let (a, b) = t.wired_keys[s];
                a.1 == 0 && b.1 == 0
            })
            .collect();
        let u = BitVec::from_indices(t.wired.num_slots(), rail).unwrap();
        assert!(cuts.iter().all(|c| parity_statistic(&t, &u, c).unwrap()));
        let rung = t.wired_slots(&[((0, 0), (0, 1))]).unwrap();
        assert!(matches!(parity_statistic(&t, &u, &[rung[0], cuts[0][0]]), Err(Error::InvalidCut(_))));
        let rep = parity_experiment(3, 4000, 5).unwrap();
        assert_eq!(rep.invariance_violations, 0);
        assert!((rep.mean - 0.5).abs() < 0.04);
    }

    #[test]
    fn loop_convergence_trivial_cases() {
        let r = loop_convergence(ExhaustionFamily::Grid, 1, 0.0, 0.0, &[1, 2, 3], 50, 1).unwrap();
        assert!(r.rows.iter().all(|row| row.pair_tv == 0.0));
        assert!(r.densities.iter().all(|d| d.1 == 0.0));
        let r = loop_convergence(ExhaustionFamily::Path, 1, 0.7, 0.0, &[1, 2, 4], 50, 1).unwrap();
        assert!(r.densities.iter().all(|d| d.1 == 0.0));
        let r = loop_convergence(ExhaustionFamily::Grid, 1, 0.5, 0.2, &[1, 2, 3], 200, 4).unwrap();
        assert_eq!(r.sandwich.unwrap().ns, vec![1, 2, 3]);
    }
}
