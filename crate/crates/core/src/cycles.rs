//! Even-subgraph spaces over GF(2): generating-set constructions, uniform
//! sampling from a span, and even-subgraph counting.
//!
//! Vectors live on the slot universe of the host graph (edges, then ghost
//! edges). A configuration is *even relative to B* when every ordinary
//! vertex outside `B` has even incidence. Because the ghost vertex, Δ and
//! the members of `B` carry no parity constraint, that space is exactly the
//! cycle space of the graph obtained by gluing all of them into one vertex;
//! every construction below works on that glued multigraph.

use std::collections::VecDeque;

use num_bigint::BigUint;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dsu::Dsu;
use crate::error::{Error, Result};
use crate::gf2::{Basis, BitVec};
use crate::graph::{BoundarySet, FamilyTag, Graph};

pub type EdgeVector = BitVec;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ElementKind {
    FiniteCycle,
    PathToBoundary,
    GhostRayCycle,
    Face,
}

/// An ordered list of slot vectors with span semantics.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GeneratingSet {
    len: usize,
    elements: Vec<BitVec>,
    kinds: Vec<ElementKind>,
}

#[derive(Serialize, Deserialize)]
struct ElementJson {
    kind: ElementKind,
    slots: Vec<usize>,
}

impl GeneratingSet {
    pub fn new(len: usize) -> Self {
        GeneratingSet {
            len,
            elements: Vec::new(),
            kinds: Vec::new(),
        }
    }

    pub fn push(&mut self, v: BitVec, kind: ElementKind) -> Result<()> {
        if v.len() != self.len {
            return Err(Error::HostMismatch(self.len, v.len()));
        }
        self.elements.push(v);
        self.kinds.push(kind);
        Ok(())
    }

    pub fn host_len(&self) -> usize {
        self.len
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[BitVec] {
        &self.elements
    }

    pub fn kinds(&self) -> &[ElementKind] {
        &self.kinds
    }

    pub fn span_basis(&self) -> Basis {
        Basis::from_vectors(self.len, &self.elements).expect("elements share the host")
    }

    /// For each slot, the number of elements containing it.
    pub fn multiplicity(&self) -> Vec<usize> {
        let mut out = vec![0; self.len];
        for e in &self.elements {
            for i in e.iter_ones() {
                out[i] += 1;
            }
        }
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        let items: Vec<ElementJson> = self
            .elements
            .iter()
            .zip(&self.kinds)
            .map(|(e, &kind)| ElementJson {
                kind,
                slots: e.iter_ones().collect(),
            })
            .collect();
        serde_json::to_value(items).expect("plain data serializes")
    }

    pub fn from_json(len: usize, v: &serde_json::Value) -> Result<Self> {
        let items: Vec<ElementJson> =
            serde_json::from_value(v.clone()).map_err(|e| Error::Parse(e.to_string()))?;
        let mut out = GeneratingSet::new(len);
        for it in items {
            out.push(BitVec::from_indices(len, it.slots)?, it.kind)?;
        }
        Ok(out)
    }
}

/// XOR of a list of vectors on a common host.
pub fn xor_sum(len: usize, vs: &[EdgeVector]) -> Result<EdgeVector> {
    crate::gf2::xor_sum(len, vs)
}

/// Row-reduced basis of `span(vs)`.
pub fn gaussian_basis(len: usize, vs: &[EdgeVector]) -> Result<Basis> {
    crate::gf2::gaussian_basis(len, vs)
}

pub fn project(v: &EdgeVector, window: &[usize]) -> Result<EdgeVector> {
    v.project(window)
}

pub use crate::gf2::project_space;

/// XOR of an independent fair-coin subset of the generators.
pub fn sample_uniform_even<R: Rng + ?Sized>(gen: &GeneratingSet, rng: &mut R) -> EdgeVector {
    let mut acc = BitVec::zeros(gen.host_len());
    for e in gen.elements() {
        if rng.gen::<bool>() {
            acc.xor_assign(e);
        }
    }
    acc
}

/// The generator sum selected by the low bits of `coins`.
pub fn coin_sum(gen: &GeneratingSet, coins: u64) -> EdgeVector {
    let mut acc = BitVec::zeros(gen.host_len());
    for (i, e) in gen.elements().iter().enumerate() {
        if (coins >> i) & 1 == 1 {
            acc.xor_assign(e);
        }
    }
    acc
}

/// A multigraph on local vertices whose edges remember their host slot.
struct SlotGraph {
    nv: usize,
    ends: Vec<(usize, usize)>,
    slot: Vec<usize>,
    adj: Vec<Vec<(usize, usize)>>,
}

impl SlotGraph {
    fn new(nv: usize, ends: Vec<(usize, usize)>, slot: Vec<usize>) -> Self {
        let mut adj = vec![Vec::new(); nv];
        for (i, &(a, b)) in ends.iter().enumerate() {
            if a != b {
                adj[a].push((i, b));
                adj[b].push((i, a));
            }
        }
        SlotGraph { nv, ends, slot, adj }
    }

    /// The host slot graph, one local edge per slot.
    fn host(g: &Graph) -> Self {
        let ends = (0..g.num_slots()).map(|s| g.slot_endpoints(s)).collect();
        Self::new(g.num_vertices(), ends, (0..g.num_slots()).collect())
    }
}

/// A forest with parent pointers, for tree-path queries.
struct RootedForest {
    parent: Vec<Option<(usize, usize)>>,
    depth: Vec<usize>,
    comp: Vec<usize>,
}

impl RootedForest {
    /// Roots each tree component at its first vertex in `roots`.
    fn build(sg: &SlotGraph, tree: &[bool], roots: impl Iterator<Item = usize>) -> Self {
        let mut parent = vec![None; sg.nv];
        let mut depth = vec![0; sg.nv];
        let mut comp = vec![usize::MAX; sg.nv];
        let mut c = 0;
        for r in roots {
            if comp[r] != usize::MAX {
                continue;
            }
            comp[r] = c;
            let mut q = VecDeque::from([r]);
            while let Some(v) = q.pop_front() {
                for &(e, w) in &sg.adj[v] {
                    if tree[e] && comp[w] == usize::MAX {
                        comp[w] = c;
                        parent[w] = Some((v, e));
                        depth[w] = depth[v] + 1;
                        q.push_back(w);
                    }
                }
            }
            c += 1;
        }
        RootedForest { parent, depth, comp }
    }

    fn path(&self, mut a: usize, mut b: usize) -> Option<Vec<usize>> {
        if self.comp[a] != self.comp[b] {
            return None;
        }
        let mut out = Vec::new();
        while self.depth[a] > self.depth[b] {
            let (p, e) = self.parent[a].unwrap();
            out.push(e);
            a = p;
        }
        while self.depth[b] > self.depth[a] {
            let (p, e) = self.parent[b].unwrap();
            out.push(e);
            b = p;
        }
        while a != b {
            let (pa, ea) = self.parent[a].unwrap();
            let (pb, eb) = self.parent[b].unwrap();
            out.push(ea);
            out.push(eb);
            a = pa;
            b = pb;
        }
        Some(out)
    }
}

/// Fundamental cycles of `tree` (local edge flags) in `sg`, one per
/// non-tree local edge, as host slot vectors.
fn tree_cycles(sg: &SlotGraph, tree: &[bool], host_len: usize, special: Option<usize>) -> Vec<(BitVec, ElementKind)> {
    let forest = RootedForest::build(sg, tree, 0..sg.nv);
    let mut out = Vec::new();
    for (e, &(a, b)) in sg.ends.iter().enumerate() {
        if tree[e] {
            continue;
        }
        let mut v = BitVec::zeros(host_len);
        v.toggle(sg.slot[e]);
        let path = forest.path(a, b).expect("tree spans every component");
        let mut touches = special.is_some_and(|s| a == s || b == s);
        for &f in &path {
            v.toggle(sg.slot[f]);
            let (x, y) = sg.ends[f];
            touches |= special.is_some_and(|s| x == s || y == s);
        }
        let kind = if touches {
            ElementKind::PathToBoundary
        } else {
            ElementKind::FiniteCycle
        };
        out.push((v, kind));
    }
    out
}

fn slot_flags(len: usize, slots: &[usize]) -> Result<Vec<bool>> {
    let mut flags = vec![false; len];
    for &s in slots {
        if s >= len {
            return Err(Error::InvalidIndex(s));
        }
        if flags[s] {
            return Err(Error::NotSpanning(format!("slot {s} listed twice")));
        }
        flags[s] = true;
    }
    Ok(flags)
}

/// One fundamental cycle per non-tree slot of a spanning forest `tree`.
pub fn fundamental_cycles(g: &Graph, tree: &[usize]) -> Result<GeneratingSet> {
    let sg = SlotGraph::host(g);
    let flags = slot_flags(g.num_slots(), tree)?;
    let mut d = Dsu::new(g.num_vertices());
    for &s in tree {
        let (a, b) = g.slot_endpoints(s);
        if !d.union(a, b) {
            return Err(Error::NotSpanning(format!("slot {s} closes a cycle")));
        }
    }
    let mut full = Dsu::new(g.num_vertices());
    for &(a, b) in &sg.ends {
        full.union(a, b);
    }
    if full.num_sets() != d.num_sets() {
        return Err(Error::NotSpanning(format!(
            "forest has {} components, graph has {}",
            d.num_sets(),
            full.num_sets()
        )));
    }
    let mut out = GeneratingSet::new(g.num_slots());
    for (v, k) in tree_cycles(&sg, &flags, g.num_slots(), g.wired()) {
        out.push(v, k)?;
    }
    Ok(out)
}

/// BFS spanning forest of the slot graph, each component rooted at its
/// lowest vertex.
pub fn bfs_spanning_forest(g: &Graph) -> Vec<usize> {
    let n = g.num_vertices();
    let mut seen = vec![false; n];
    let mut out = Vec::new();
    for r in 0..n {
        if seen[r] {
            continue;
        }
        seen[r] = true;
        let mut q = VecDeque::from([r]);
        while let Some(v) = q.pop_front() {
            for &(s, w) in g.slot_incident(v) {
                if !seen[w] {
                    seen[w] = true;
                    out.push(s);
                    q.push_back(w);
                }
            }
        }
    }
    out
}

/// BFS spanning forest of the slot graph with Δ removed, for use with
/// [`forest_generating_set`].
pub fn bfs_forest_off_delta(g: &Graph) -> Result<Vec<usize>> {
    let delta = g.wired().ok_or(Error::NotWired)?;
    let n = g.num_vertices();
    let mut seen = vec![false; n];
    seen[delta] = true;
    let mut out = Vec::new();
    for r in 0..n {
        if seen[r] {
            continue;
        }
        seen[r] = true;
        let mut q = VecDeque::from([r]);
        while let Some(v) = q.pop_front() {
            for &(s, w) in g.slot_incident(v) {
                if !seen[w] {
                    seen[w] = true;
                    out.push(s);
                    q.push_back(w);
                }
            }
        }
    }
    Ok(out)
}

/// DFS spanning forest of the slot graph, each component rooted at its
/// lowest vertex.
pub fn dfs_spanning_forest(g: &Graph) -> Vec<usize> {
    let n = g.num_vertices();
    let mut seen = vec![false; n];
    let mut out = Vec::new();
    for r in 0..n {
        if seen[r] {
            continue;
        }
        seen[r] = true;
        let mut stack = vec![(r, 0usize)];
        while let Some(&mut (v, ref mut i)) = stack.last_mut() {
            let inc = g.slot_incident(v);
            if *i >= inc.len() {
                stack.pop();
                continue;
            }
            let (s, w) = inc[*i];
            *i += 1;
            if !seen[w] {
                seen[w] = true;
                out.push(s);
                stack.push((w, 0));
            }
        }
    }
    out
}

/// Generating set for the wired space from a spanning forest `forest` of
/// the non-Δ vertices.
///
/// Each forest component is joined to Δ through its lowest-index Δ-slot
/// (its *exit*); the elements are the fundamental cycles of forest + exits.
/// An element is the forest cycle when both ends of the slot share a
/// component, the path through Δ along both forest paths when they do not,
/// and the truncated ray (slot plus forest path to Δ) for slots at Δ. Exit
/// slots themselves yield nothing.
pub fn forest_generating_set(g: &Graph, forest: &[usize]) -> Result<GeneratingSet> {
    forest_cycles(g, forest, false)
}

/// As [`forest_generating_set`], but components with no Δ-slot are allowed
/// and contribute their own fundamental cycles.
pub fn forest_generating_set_lenient(g: &Graph, forest: &[usize]) -> Result<GeneratingSet> {
    forest_cycles(g, forest, true)
}

fn forest_cycles(g: &Graph, forest: &[usize], allow_unrooted: bool) -> Result<GeneratingSet> {
    let delta = g.wired().ok_or(Error::NotWired)?;
    let len = g.num_slots();
    let mut flags = slot_flags(len, forest)?;
    let mut d = Dsu::new(g.num_vertices());
    for &s in forest {
        let (a, b) = g.slot_endpoints(s);
        if a == delta || b == delta {
            return Err(Error::NotSpanning(format!("forest slot {s} touches Δ")));
        }
        if !d.union(a, b) {
            return Err(Error::NotSpanning(format!("slot {s} closes a cycle")));
        }
    }
    let mut has_exit = vec![false; g.num_vertices()];
    for s in 0..len {
        if flags[s] {
            continue;
        }
        let (a, b) = g.slot_endpoints(s);
        let inner = if a == delta {
            b
        } else if b == delta {
            a
        } else {
            continue;
        };
        let r = d.find(inner);
        if !has_exit[r] {
            has_exit[r] = true;
            flags[s] = true;
        }
    }
    if !allow_unrooted {
        for v in 0..g.num_vertices() {
            if v != delta && !has_exit[d.find(v)] {
                return Err(Error::NoRouteToBoundary(v));
            }
        }
    }
    let sg = SlotGraph::host(g);
    let mut out = GeneratingSet::new(len);
    for (v, k) in tree_cycles(&sg, &flags, len, Some(delta)) {
        out.push(v, k)?;
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GreedyMode {
    /// Finite cycles only: never route through Δ.
    Free,
    /// Cycles may pass through Δ.
    Wired,
}

/// BFS slot order from `root` (unreached slots appended in index order).
pub fn bfs_slot_order(g: &Graph, root: usize) -> Vec<usize> {
    let mut seen_v = vec![false; g.num_vertices()];
    let mut seen_s = vec![false; g.num_slots()];
    let mut order = Vec::with_capacity(g.num_slots());
    let roots = std::iter::once(root).chain((0..g.num_vertices()).filter(|&v| v != root));
    for r in roots {
        if r >= g.num_vertices() || seen_v[r] {
            continue;
        }
        seen_v[r] = true;
        let mut q = VecDeque::from([r]);
        while let Some(v) = q.pop_front() {
            for &(s, w) in g.slot_incident(v) {
                if !seen_s[s] {
                    seen_s[s] = true;
                    order.push(s);
                }
                if !seen_v[w] {
                    seen_v[w] = true;
                    q.push_back(w);
                }
            }
        }
    }
    order
}

/// Scans slots in `order`; for slot `e_k`, emits `e_k` plus a shortest
/// path between its endpoints that uses only slots later in the order, if
/// one exists. Free mode forbids paths through Δ. `order = None` uses the
/// BFS order from vertex 0.
pub fn greedy_generating_set(g: &Graph, order: Option<&[usize]>, mode: GreedyMode) -> Result<GeneratingSet> {
    let len = g.num_slots();
    let order: Vec<usize> = match order {
        Some(o) => o.to_vec(),
        None => bfs_slot_order(g, 0),
    };
    {
        let mut sorted = order.clone();
        sorted.sort_unstable();
        if sorted != (0..len).collect::<Vec<_>>() {
            return Err(Error::InvalidIndex(len));
        }
    }
    let forbidden = match mode {
        GreedyMode::Free => g.wired(),
        GreedyMode::Wired => None,
    };
    let mut rank = vec![0usize; len];
    for (k, &s) in order.iter().enumerate() {
        rank[s] = k;
    }
    let n = g.num_vertices();
    let mut out = GeneratingSet::new(len);
    let mut prev: Vec<Option<(usize, usize)>> = vec![None; n];
    let mut seen = vec![false; n];
    for (k, &e) in order.iter().enumerate() {
        let (a, b) = g.slot_endpoints(e);
        if forbidden.is_some_and(|f| a == f || b == f) {
            continue;
        }
        seen.iter_mut().for_each(|x| *x = false);
        seen[a] = true;
        let mut q = VecDeque::from([a]);
        while let Some(v) = q.pop_front() {
            if v == b {
                break;
            }
            for &(s, w) in g.slot_incident(v) {
                if rank[s] <= k || seen[w] || Some(w) == forbidden {
                    continue;
                }
                seen[w] = true;
                prev[w] = Some((v, s));
                q.push_back(w);
            }
        }
        if !seen[b] {
            continue;
        }
        let mut c = BitVec::zeros(len);
        c.toggle(e);
        let mut through = false;
        let mut v = b;
        while v != a {
            let (p, s) = prev[v].unwrap();
            c.toggle(s);
            through |= Some(v) == g.wired();
            v = p;
        }
        through |= Some(a) == g.wired() || Some(b) == g.wired();
        let kind = if through {
            ElementKind::PathToBoundary
        } else {
            ElementKind::FiniteCycle
        };
        out.push(c, kind)?;
    }
    Ok(out)
}

/// How the spanning tree of the glued graph is chosen.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TreeStrategy {
    /// BFS from the lowest vertex of each component.
    Bfs,
    /// DFS from the lowest vertex of each component.
    Dfs,
    /// BFS forest on the unglued vertices, each component joined to the
    /// glued vertex through its lowest-index slot there.
    ForestToBoundary,
}

/// Affine description of `{ω ≤ open : ∂ω ⊂ B, ω_B ≡ 1}`: a particular
/// element plus a generating set of the linear part.
#[derive(Clone, Debug)]
pub struct RelativeSpace {
    pub particular: BitVec,
    pub generators: GeneratingSet,
}

/// Gluing map: every non-ordinary vertex and every member of `B` goes to one
/// vertex. Returns the local vertex of each host vertex, the local vertex
/// count, and the glued vertex if any.
fn glue_map(g: &Graph, b: &BoundarySet) -> (Vec<usize>, usize, Option<usize>) {
    let glued: Vec<bool> = (0..g.num_vertices())
        .map(|v| !g.is_ordinary(v) || b.contains(v))
        .collect();
    let mut map = vec![0; g.num_vertices()];
    let mut next = 0;
    for v in 0..g.num_vertices() {
        if !glued[v] {
            map[v] = next;
            next += 1;
        }
    }
    let any = glued.iter().any(|&x| x);
    if any {
        for v in 0..g.num_vertices() {
            if glued[v] {
                map[v] = next;
            }
        }
        (map, next + 1, Some(next))
    } else {
        (map, next, None)
    }
}

/// Generating set (and particular element) of the configurations below
/// `open` that are even relative to `b` with bits on `b` forced to 1.
pub fn relative_even_generators(
    g: &Graph,
    open: &BitVec,
    b: &BoundarySet,
    strategy: TreeStrategy,
) -> Result<RelativeSpace> {
    if open.len() != g.num_slots() {
        return Err(Error::DimensionMismatch {
            expected: g.num_slots(),
            got: open.len(),
        });
    }
    b.validate(g)?;
    let len = g.num_slots();
    let mut particular = BitVec::zeros(len);
    for s in b.forced_slots(g) {
        if !open.get(s) {
            return Err(Error::InvalidBoundary(format!("forced slot {s} is closed")));
        }
        particular.set(s, true);
    }
    let (map, nv, glued) = glue_map(g, b);
    let mut ends = Vec::new();
    let mut slot = Vec::new();
    let mut generators = GeneratingSet::new(len);
    for s in open.iter_ones() {
        if particular.get(s) {
            continue;
        }
        let (u, v) = g.slot_endpoints(s);
        let (a, c) = (map[u], map[v]);
        if a == c {
            let mut x = BitVec::zeros(len);
            x.set(s, true);
            generators.push(x, ElementKind::PathToBoundary)?;
        } else {
            ends.push((a, c));
            slot.push(s);
        }
    }
    let sg = SlotGraph::new(nv, ends, slot);
    let tree = spanning_tree_local(&sg, strategy, glued);
    for (v, k) in tree_cycles(&sg, &tree, len, glued) {
        generators.push(v, k)?;
    }
    Ok(RelativeSpace { particular, generators })
}

fn spanning_tree_local(sg: &SlotGraph, strategy: TreeStrategy, glued: Option<usize>) -> Vec<bool> {
    let mut tree = vec![false; sg.ends.len()];
    let mut seen = vec![false; sg.nv];
    match strategy {
        TreeStrategy::Bfs => {
            for r in 0..sg.nv {
                if seen[r] {
                    continue;
                }
                seen[r] = true;
                let mut q = VecDeque::from([r]);
                while let Some(v) = q.pop_front() {
                    for &(e, w) in &sg.adj[v] {
                        if !seen[w] {
                            seen[w] = true;
                            tree[e] = true;
                            q.push_back(w);
                        }
                    }
                }
            }
        }
        TreeStrategy::Dfs => {
            for r in 0..sg.nv {
                if seen[r] {
                    continue;
                }
                seen[r] = true;
                let mut stack = vec![(r, 0usize)];
                while let Some(top) = stack.last_mut() {
                    let (v, i) = *top;
                    if i >= sg.adj[v].len() {
                        stack.pop();
                        continue;
                    }
                    top.1 += 1;
                    let (e, w) = sg.adj[v][i];
                    if !seen[w] {
                        seen[w] = true;
                        tree[e] = true;
                        stack.push((w, 0));
                    }
                }
            }
        }
        TreeStrategy::ForestToBoundary => {
            let Some(gl) = glued else {
                return spanning_tree_local(sg, TreeStrategy::Bfs, None);
            };
            seen[gl] = true;
            let mut comp = vec![usize::MAX; sg.nv];
            let mut c = 0;
            for r in 0..sg.nv {
                if seen[r] {
                    continue;
                }
                seen[r] = true;
                comp[r] = c;
                let mut q = VecDeque::from([r]);
                while let Some(v) = q.pop_front() {
                    for &(e, w) in &sg.adj[v] {
                        if !seen[w] {
                            seen[w] = true;
                            comp[w] = c;
                            tree[e] = true;
                            q.push_back(w);
                        }
                    }
                }
                c += 1;
            }
            let mut exit = vec![false; c];
            let mut at_glued: Vec<usize> = sg.adj[gl].iter().map(|&(e, _)| e).collect();
            at_glued.sort_by_key(|&e| sg.slot[e]);
            at_glued.dedup();
            for e in at_glued {
                let (a, b) = sg.ends[e];
                let inner = if a == gl { b } else { a };
                if !exit[comp[inner]] {
                    exit[comp[inner]] = true;
                    tree[e] = true;
                }
            }
        }
    }
    tree
}

/// `log2` of the number of configurations `ω ≤ full` with `∂ω ⊂ B` and
/// `ω_B ≡ 1`: `|E(H)| − |V(H)| + c(H)` for the glued graph `H`.
pub fn even_subgraph_exponent(g: &Graph, b: &BoundarySet) -> Result<usize> {
    b.validate(g)?;
    let forced = b.forced_slots(g);
    let (map, nv, _) = glue_map(g, b);
    let mut d = Dsu::new(nv);
    let mut edges = 0;
    for s in 0..g.num_slots() {
        if forced.contains(&s) {
            continue;
        }
        let (u, v) = g.slot_endpoints(s);
        d.union(map[u], map[v]);
        edges += 1;
    }
    Ok(edges + d.num_sets() - nv)
}

pub fn count_even_subgraphs(g: &Graph, b: &BoundarySet) -> Result<BigUint> {
    Ok(BigUint::from(1u32) << even_subgraph_exponent(g, b)?)
}

/// Generating set on a ladder with a ghost vertex built from the comb tree
/// (rail 0 plus every rung): one fundamental cycle per rail-1 edge, and for
/// each ghost slot up to two cycles that leave the ghost through that slot,
/// walk along rail 0 to the left or right, and return through the first
/// later vertex that is a ghost site.
pub fn ladder_ray_generating_set(g: &Graph) -> Result<GeneratingSet> {
    if g.family_tag() != FamilyTag::Ladder || g.wired().is_some() {
        return Err(Error::InvalidSize("expected a free ladder".into()));
    }
    g.ghost().ok_or_else(|| Error::InvalidSize("ladder has no ghost".into()))?;
    let n = (g.num_vertices() - 1) / 2;
    let m = g.num_edges();
    let len = g.num_slots();
    let rail0 = |i: usize| i - 1; // edge (i-1, i) on rail 0
    let rung = |i: usize| 2 * (n - 1) + i;
    let mut tree: Vec<usize> = (1..n).map(rail0).collect();
    tree.extend((0..n).map(rung));
    let flags = slot_flags(m, &tree)?;
    let sg = SlotGraph::new(
        g.num_vertices(),
        (0..m).map(|s| g.slot_endpoints(s)).collect(),
        (0..m).collect(),
    );
    let mut out = GeneratingSet::new(len);
    for (v, k) in tree_cycles(&sg, &flags, len, None) {
        out.push(v, k)?;
    }
    if !g.ghost_sites().is_empty() && g.ghost_sites()[0] >= n {
        return Err(Error::InvalidBoundary("rail 0 carries no ghost site, so the rays never close".into()));
    }
    let pos = |v: usize| if v < n { v } else { v - n };
    for (j, &site) in g.ghost_sites().iter().enumerate() {
        let i0 = pos(site);
        for dir in [-1i64, 1] {
            let mut c = BitVec::zeros(len);
            c.toggle(m + j);
            let mut cur = site;
            if site >= n {
                c.toggle(rung(i0));
                cur = i0;
                if g.site_slot(cur).is_some() {
                    c.toggle(g.site_slot(cur).unwrap());
                    out.push(c, ElementKind::GhostRayCycle)?;
                    continue;
                }
            }
            let mut closed = false;
            loop {
                let next = cur as i64 + dir;
                if next < 0 || next >= n as i64 {
                    break;
                }
                let next = next as usize;
                c.toggle(rail0(cur.max(next)));
                cur = next;
                if let Some(s) = g.site_slot(cur) {
                    c.toggle(s);
                    closed = true;
                    break;
                }
            }
            if closed {
                out.push(c, ElementKind::GhostRayCycle)?;
            }
        }
    }
    Ok(out)
}
