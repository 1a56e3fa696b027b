//! Finite multigraphs with an optional ghost vertex and an optional wired
//! vertex, plus the configuration space `{0,1}^(E ∪ sites)` living on them.
//!
//! Configurations are addressed through *slots*: slot `i < m` is graph edge
//! `i`, slot `m + j` is the ghost edge at the `j`-th ghost site (sites are
//! kept sorted). Every algorithm that works on "edges plus ghost edges" uses
//! this one index set.

mod family;
mod json;

use std::collections::{BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::dsu::Dsu;
use crate::error::{Error, Result};
use crate::gf2::BitVec;

pub use family::{build_graph, FamilySpec};
pub use json::{graph_from_json, graph_to_json, GraphJson};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyTag {
    Path,
    Cycle,
    Ladder,
    Grid,
    Torus,
    Complete,
    Tree,
    Cylinder,
    Custom,
}

/// An undirected edge. `id` is the stable identity carried through quotients.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub id: usize,
}

impl Edge {
    pub fn other(&self, x: usize) -> usize {
        if x == self.u {
            self.v
        } else {
            self.u
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Graph {
    n: usize,
    edges: Vec<Edge>,
    ghost: Option<usize>,
    wired: Option<usize>,
    ghost_sites: Vec<usize>,
    tag: FamilyTag,
    adj: Vec<Vec<(usize, usize)>>,
    slot_adj: Vec<Vec<(usize, usize)>>,
}

impl Graph {
    /// A plain graph on `n` vertices; edge identities are the list positions.
    pub fn new(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        Self::with_tag(n, edges, FamilyTag::Custom)
    }

    pub fn with_tag(n: usize, edges: &[(usize, usize)], tag: FamilyTag) -> Result<Self> {
        let edges = edges
            .iter()
            .enumerate()
            .map(|(id, &(u, v))| Edge { u, v, id })
            .collect();
        Self::from_parts(n, edges, None, None, Vec::new(), tag)
    }

    pub fn from_parts(
        n: usize,
        edges: Vec<Edge>,
        ghost: Option<usize>,
        wired: Option<usize>,
        mut ghost_sites: Vec<usize>,
        tag: FamilyTag,
    ) -> Result<Self> {
        for e in &edges {
            if e.u >= n {
                return Err(Error::InvalidVertex(e.u));
            }
            if e.v >= n {
                return Err(Error::InvalidVertex(e.v));
            }
            if e.u == e.v {
                return Err(Error::SelfLoop(e.u));
            }
        }
        for x in ghost.iter().chain(wired.iter()) {
            if *x >= n {
                return Err(Error::InvalidVertex(*x));
            }
        }
        ghost_sites.sort_unstable();
        ghost_sites.dedup();
        if !ghost_sites.is_empty() && ghost.is_none() {
            return Err(Error::InvalidBoundary("ghost sites given without a ghost vertex".into()));
        }
        for &s in &ghost_sites {
            if s >= n {
                return Err(Error::InvalidVertex(s));
            }
            if Some(s) == ghost || Some(s) == wired {
                return Err(Error::InvalidBoundary(format!(
                    "vertex {s} is special and cannot be a ghost site"
                )));
            }
        }
        let mut adj = vec![Vec::new(); n];
        for (i, e) in edges.iter().enumerate() {
            adj[e.u].push((i, e.v));
            adj[e.v].push((i, e.u));
        }
        let mut slot_adj = adj.clone();
        let m = edges.len();
        if let Some(gh) = ghost {
            for (j, &s) in ghost_sites.iter().enumerate() {
                slot_adj[s].push((m + j, gh));
                slot_adj[gh].push((m + j, s));
            }
        }
        Ok(Graph {
            n,
            edges,
            ghost,
            wired,
            ghost_sites,
            tag,
            adj,
            slot_adj,
        })
    }

    pub fn num_vertices(&self) -> usize {
        self.n
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn num_sites(&self) -> usize {
        self.ghost_sites.len()
    }

    /// Edges plus ghost-edge slots.
    pub fn num_slots(&self) -> usize {
        self.edges.len() + self.ghost_sites.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, i: usize) -> &Edge {
        &self.edges[i]
    }

    pub fn ghost(&self) -> Option<usize> {
        self.ghost
    }

    pub fn wired(&self) -> Option<usize> {
        self.wired
    }

    pub fn ghost_sites(&self) -> &[usize] {
        &self.ghost_sites
    }

    pub fn family_tag(&self) -> FamilyTag {
        self.tag
    }

    pub fn set_family_tag(&mut self, tag: FamilyTag) {
        self.tag = tag;
    }

    pub fn is_ordinary(&self, v: usize) -> bool {
        v < self.n && Some(v) != self.ghost && Some(v) != self.wired
    }

    pub fn ordinary_vertices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.n).filter(move |&v| self.is_ordinary(v))
    }

    /// `(edge index, neighbour)` pairs over graph edges only.
    pub fn incident(&self, v: usize) -> &[(usize, usize)] {
        &self.adj[v]
    }

    /// `(slot, neighbour)` pairs including ghost-edge slots.
    pub fn slot_incident(&self, v: usize) -> &[(usize, usize)] {
        &self.slot_adj[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn site_slot(&self, v: usize) -> Option<usize> {
        self.ghost_sites
            .binary_search(&v)
            .ok()
            .map(|j| self.edges.len() + j)
    }

    /// Endpoints of a slot; a ghost slot joins its site to the ghost vertex.
    pub fn slot_endpoints(&self, s: usize) -> (usize, usize) {
        let m = self.edges.len();
        if s < m {
            (self.edges[s].u, self.edges[s].v)
        } else {
            (self.ghost_sites[s - m], self.ghost.expect("ghost slot without ghost"))
        }
    }

    pub fn is_ghost_slot(&self, s: usize) -> bool {
        s >= self.edges.len()
    }

    /// Sum of edge identities is not meaningful; this is the largest one plus one.
    pub fn id_bound(&self) -> usize {
        self.edges.iter().map(|e| e.id + 1).max().unwrap_or(0)
    }

    /// Index of the edge carrying identity `id`, if present.
    pub fn edge_index_of_id(&self, id: usize) -> Option<usize> {
        self.edges.iter().position(|e| e.id == id)
    }

    pub fn is_connected(&self) -> bool {
        if self.n == 0 {
            return true;
        }
        let mut d = Dsu::new(self.n);
        for e in &self.edges {
            d.union(e.u, e.v);
        }
        d.num_sets() == 1
    }

    /// BFS edge order from `root` (edges in order of discovery, then any
    /// unreached edges in index order).
    pub fn bfs_edge_order(&self, root: usize) -> Vec<usize> {
        let mut seen_v = vec![false; self.n];
        let mut seen_e = vec![false; self.edges.len()];
        let mut order = Vec::with_capacity(self.edges.len());
        let mut roots: Vec<usize> = vec![root];
        roots.extend((0..self.n).filter(|&v| v != root));
        for r in roots {
            if r >= self.n || seen_v[r] {
                continue;
            }
            seen_v[r] = true;
            let mut q = VecDeque::from([r]);
            while let Some(v) = q.pop_front() {
                for &(e, w) in &self.adj[v] {
                    if !seen_e[e] {
                        seen_e[e] = true;
                        order.push(e);
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
}

/// `{0,1}` assignment to edges and to ghost edges (stored per vertex).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PercolationConfig {
    pub edge_bits: BitVec,
    pub vertex_bits: BitVec,
}

impl PercolationConfig {
    pub fn zeros(g: &Graph) -> Self {
        PercolationConfig {
            edge_bits: BitVec::zeros(g.num_edges()),
            vertex_bits: BitVec::zeros(g.num_vertices()),
        }
    }

    /// Every edge and every ghost edge open.
    pub fn full(g: &Graph) -> Self {
        let mut c = Self::zeros(g);
        c.edge_bits = BitVec::ones(g.num_edges());
        for &s in g.ghost_sites() {
            c.vertex_bits.set(s, true);
        }
        c
    }

    pub fn validate(&self, g: &Graph) -> Result<()> {
        if self.edge_bits.len() != g.num_edges() {
            return Err(Error::DimensionMismatch {
                expected: g.num_edges(),
                got: self.edge_bits.len(),
            });
        }
        if self.vertex_bits.len() != g.num_vertices() {
            return Err(Error::DimensionMismatch {
                expected: g.num_vertices(),
                got: self.vertex_bits.len(),
            });
        }
        for v in self.vertex_bits.iter_ones() {
            if g.site_slot(v).is_none() {
                return Err(Error::InvalidBoundary(format!(
                    "vertex bit set at {v}, which has no ghost edge"
                )));
            }
        }
        Ok(())
    }

    pub fn from_slots(g: &Graph, slots: &BitVec) -> Result<Self> {
        if slots.len() != g.num_slots() {
            return Err(Error::DimensionMismatch {
                expected: g.num_slots(),
                got: slots.len(),
            });
        }
        let m = g.num_edges();
        let mut c = Self::zeros(g);
        for s in slots.iter_ones() {
            if s < m {
                c.edge_bits.set(s, true);
            } else {
                c.vertex_bits.set(g.ghost_sites()[s - m], true);
            }
        }
        Ok(c)
    }

    pub fn to_slots(&self, g: &Graph) -> BitVec {
        let m = g.num_edges();
        let mut out = BitVec::zeros(g.num_slots());
        for e in self.edge_bits.iter_ones() {
            out.set(e, true);
        }
        for (j, &s) in g.ghost_sites().iter().enumerate() {
            if self.vertex_bits.get(s) {
                out.set(m + j, true);
            }
        }
        out
    }

    pub fn from_key(g: &Graph, key: u64) -> Self {
        Self::from_slots(g, &BitVec::from_key(g.num_slots(), key)).expect("slot count matches")
    }

    pub fn to_key(&self, g: &Graph) -> u64 {
        self.to_slots(g).to_key()
    }

    /// Pointwise `self <= other`.
    pub fn le(&self, other: &PercolationConfig) -> bool {
        self.edge_bits.is_subset_of(&other.edge_bits) && self.vertex_bits.is_subset_of(&other.vertex_bits)
    }

    /// Edge bits followed by ghost-site bits, as the CSV/table encoding.
    pub fn bit_strings(&self, g: &Graph) -> (String, String) {
        let sites: String = g
            .ghost_sites()
            .iter()
            .map(|&s| if self.vertex_bits.get(s) { '1' } else { '0' })
            .collect();
        (self.edge_bits.to_bit_string(), sites)
    }
}

/// A set of vertices at which the parity constraint is lifted.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BoundarySet(pub BTreeSet<usize>);

impl BoundarySet {
    pub fn free() -> Self {
        BoundarySet(BTreeSet::new())
    }

    /// `{Δ}`; errors if the graph has no wired vertex.
    pub fn wired(g: &Graph) -> Result<Self> {
        let d = g.wired().ok_or(Error::NotWired)?;
        Ok(BoundarySet(BTreeSet::from([d])))
    }

    /// Free on graphs without Δ, `{Δ}` otherwise.
    pub fn natural(g: &Graph) -> Self {
        match g.wired() {
            Some(d) => BoundarySet(BTreeSet::from([d])),
            None => Self::free(),
        }
    }

    pub fn contains(&self, v: usize) -> bool {
        self.0.contains(&v)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    /// Members must be Δ or ghost sites, and Δ (when present) must be a
    /// member: the wired vertex stands for the outside and carries no parity.
    pub fn validate(&self, g: &Graph) -> Result<()> {
        for v in self.iter() {
            if v >= g.num_vertices() {
                return Err(Error::InvalidVertex(v));
            }
            if Some(v) == g.wired() {
                continue;
            }
            if Some(v) == g.ghost() {
                return Err(Error::InvalidBoundary("the ghost vertex cannot be a boundary vertex".into()));
            }
            if g.site_slot(v).is_none() {
                return Err(Error::InvalidBoundary(format!(
                    "boundary vertex {v} has no ghost edge to carry its forced bit"
                )));
            }
        }
        if let Some(d) = g.wired() {
            if !self.contains(d) {
                return Err(Error::InvalidBoundary("wired graphs need Δ in the boundary set".into()));
            }
        }
        Ok(())
    }

    /// Ghost slots whose bit is forced to 1.
    pub fn forced_slots(&self, g: &Graph) -> Vec<usize> {
        self.iter().filter_map(|v| g.site_slot(v)).collect()
    }
}

/// Identifies every ordinary vertex outside `keep` (and Δ, and the ghost)
/// into a single new wired vertex; edges with both ends outside disappear.
pub fn wired_quotient(g: &Graph, keep: &[usize]) -> Result<Graph> {
    let keep_set: BTreeSet<usize> = keep.iter().copied().collect();
    if keep_set.is_empty() {
        return Err(Error::InvalidKeepSet("keep set is empty".into()));
    }
    for &v in &keep_set {
        if !g.is_ordinary(v) {
            return Err(Error::InvalidKeepSet(format!("vertex {v} is not an ordinary vertex")));
        }
    }
    if keep_set.len() == g.ordinary_vertices().count() {
        return Err(Error::InvalidKeepSet("keep set contains every vertex".into()));
    }
    let k = keep_set.len();
    let delta = k;
    let mut relabel = vec![delta; g.num_vertices()];
    for (i, &v) in keep_set.iter().enumerate() {
        relabel[v] = i;
    }
    let edges: Vec<Edge> = g
        .edges()
        .iter()
        .filter_map(|e| {
            let (a, b) = (relabel[e.u], relabel[e.v]);
            (a != b).then_some(Edge { u: a, v: b, id: e.id })
        })
        .collect();
    let (ghost, sites) = match g.ghost() {
        Some(_) => (
            Some(delta),
            g.ghost_sites()
                .iter()
                .filter(|s| keep_set.contains(s))
                .map(|&s| relabel[s])
                .collect(),
        ),
        None => (None, Vec::new()),
    };
    Graph::from_parts(k + 1, edges, ghost, Some(delta), sites, g.family_tag())
}

/// Adds a wired vertex Δ and, for every ordinary vertex, one edge to Δ per
/// unit of degree missing relative to the maximum degree. On a box of a
/// lattice this reproduces the edges that leave the box.
pub fn wire_to_max_degree(g: &Graph) -> Result<Graph> {
    if g.wired().is_some() || g.ghost().is_some() {
        return Err(Error::InvalidKeepSet("graph already has a special vertex".into()));
    }
    let n = g.num_vertices();
    let max = (0..n).map(|v| g.degree(v)).max().unwrap_or(0);
    let mut edges = g.edges().to_vec();
    let mut id = g.id_bound();
    for v in 0..n {
        for _ in g.degree(v)..max {
            edges.push(Edge { u: v, v: n, id });
            id += 1;
        }
    }
    if edges.len() == g.num_edges() {
        return Err(Error::InvalidKeepSet("graph is regular, so no vertex has a missing edge to wire".into()));
    }
    Graph::from_parts(n + 1, edges, None, Some(n), Vec::new(), g.family_tag())
}

/// Adds a ghost vertex `v*` with one ghost edge per site.
pub fn attach_ghost(g: &Graph, sites: &[usize]) -> Result<Graph> {
    if g.ghost().is_some() {
        return Err(Error::GhostPresent);
    }
    for &s in sites {
        if !g.is_ordinary(s) {
            return Err(Error::InvalidVertex(s));
        }
    }
    let gh = g.num_vertices();
    Graph::from_parts(
        gh + 1,
        g.edges().to_vec(),
        Some(gh),
        g.wired(),
        sites.to_vec(),
        g.family_tag(),
    )
}

/// The spanning subgraph `ω*` of open slots as a plain graph on the same
/// vertex set. `origin[i]` is the slot of the host that edge `i` came from.
#[derive(Clone, Debug)]
pub struct Enhanced {
    pub graph: Graph,
    pub origin: Vec<usize>,
}

pub fn enhance(g: &Graph, omega: &PercolationConfig) -> Result<Enhanced> {
    omega.validate(g)?;
    let slots = omega.to_slots(g);
    enhance_slots(g, &slots)
}

pub fn enhance_slots(g: &Graph, slots: &BitVec) -> Result<Enhanced> {
    if slots.len() != g.num_slots() {
        return Err(Error::DimensionMismatch {
            expected: g.num_slots(),
            got: slots.len(),
        });
    }
    let m = g.num_edges();
    let base = g.id_bound();
    let mut edges = Vec::new();
    let mut origin = Vec::new();
    for s in slots.iter_ones() {
        let (u, v) = g.slot_endpoints(s);
        let id = if s < m { g.edge(s).id } else { base + (s - m) };
        edges.push(Edge { u, v, id });
        origin.push(s);
    }
    let graph = Graph::from_parts(g.num_vertices(), edges, g.ghost(), g.wired(), Vec::new(), g.family_tag())?;
    Ok(Enhanced { graph, origin })
}

/// Ordinary vertices with odd total incidence (vertex bit plus open edges).
pub fn odd_boundary(g: &Graph, eta: &PercolationConfig) -> Result<Vec<usize>> {
    eta.validate(g)?;
    let mut parity = vec![false; g.num_vertices()];
    for e in eta.edge_bits.iter_ones() {
        let ed = g.edge(e);
        parity[ed.u] ^= true;
        parity[ed.v] ^= true;
    }
    for v in eta.vertex_bits.iter_ones() {
        parity[v] ^= true;
    }
    Ok((0..g.num_vertices())
        .filter(|&v| parity[v] && g.is_ordinary(v))
        .collect())
}

/// Odd ordinary vertices of a slot vector (no validation).
pub fn odd_boundary_slots(g: &Graph, slots: &BitVec) -> Vec<usize> {
    let mut parity = vec![false; g.num_vertices()];
    for s in slots.iter_ones() {
        let (u, v) = g.slot_endpoints(s);
        parity[u] ^= true;
        parity[v] ^= true;
    }
    (0..g.num_vertices())
        .filter(|&v| parity[v] && g.is_ordinary(v))
        .collect()
}

/// Connected components as dense labels per vertex.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partition {
    pub labels: Vec<usize>,
    pub count: usize,
}

impl Partition {
    pub fn blocks(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.count];
        for (v, &l) in self.labels.iter().enumerate() {
            out[l].push(v);
        }
        out
    }
}

/// Components over the open slots of `restricted_to`, or over every slot.
pub fn components(g: &Graph, restricted_to: Option<&PercolationConfig>) -> Result<Partition> {
    let slots = match restricted_to {
        Some(c) => {
            c.validate(g)?;
            c.to_slots(g)
        }
        None => BitVec::ones(g.num_slots()),
    };
    Ok(slot_components(g, &slots))
}

pub fn slot_components(g: &Graph, slots: &BitVec) -> Partition {
    let mut d = Dsu::new(g.num_vertices());
    for s in slots.iter_ones() {
        let (u, v) = g.slot_endpoints(s);
        d.union(u, v);
    }
    let count = d.num_sets();
    Partition {
        labels: d.labels(),
        count,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn wiring_fills_missing_degree() {
        let g = build_graph(&FamilySpec::Grid(3, 3)).unwrap();
        let w = wire_to_max_degree(&g).unwrap();
        assert_eq!(w.wired(), Some(9));
        assert_eq!(w.num_edges(), 12 + 12);
        assert!((0..9).all(|v| w.degree(v) == 4));
        assert!(wire_to_max_degree(&build_graph(&FamilySpec::Cycle(5)).unwrap()).is_err());
    }

    fn path(n: usize) -> Graph {
        build_graph(&FamilySpec::Path(n)).unwrap()
    }

    fn cycle(n: usize) -> Graph {
        build_graph(&FamilySpec::Cycle(n)).unwrap()
    }

    #[test]
    fn rejects_self_loops() {
        assert_eq!(Graph::new(2, &[(1, 1)]), Err(Error::SelfLoop(1)));
        assert_eq!(Graph::new(2, &[(0, 2)]), Err(Error::InvalidVertex(2)));
    }

    #[test]
    fn quotient_of_path_middle() {
        let q = wired_quotient(&path(5), &[1, 2, 3]).unwrap();
        assert_eq!(q.num_vertices(), 4);
        assert_eq!(q.num_edges(), 4);
        assert_eq!(q.wired(), Some(3));
        assert!(q.edges().iter().all(|e| e.u != e.v));
    }

    #[test]
    fn quotient_of_cycle_keeps_double_edge() {
        // cycle 0-1-2-3-0, keep {0,1}: edges 1-2 and 3-0 both hit Δ, 2-3 vanishes
        let q = wired_quotient(&cycle(4), &[0, 1]).unwrap();
        assert_eq!(q.num_edges(), 3);
        let to_delta: Vec<_> = q.edges().iter().filter(|e| e.u == 2 || e.v == 2).collect();
        assert_eq!(to_delta.len(), 2);
        let mut ids: Vec<usize> = q.edges().iter().map(|e| e.id).collect();
        ids.sort();
        assert_eq!(ids, vec![0, 1, 3]);
    }

    #[test]
    fn quotient_rejects_bad_keep_sets() {
        let g = path(4);
        assert!(wired_quotient(&g, &[0, 1, 2, 3]).is_err());
        assert!(wired_quotient(&g, &[]).is_err());
    }

    #[test]
    fn quotient_identifies_ghost_with_delta() {
        let g = attach_ghost(&path(4), &[0, 1, 2, 3]).unwrap();
        let q = wired_quotient(&g, &[1, 2]).unwrap();
        assert_eq!(q.ghost(), q.wired());
        assert_eq!(q.ghost_sites(), &[0, 1]);
    }

    #[test]
    fn attach_ghost_cases() {
        let g = attach_ghost(&path(3), &[0, 1, 2]).unwrap();
        assert_eq!(g.num_sites(), 3);
        assert_eq!(g.num_slots(), 5);
        let iso = attach_ghost(&path(3), &[]).unwrap();
        assert_eq!(iso.num_vertices(), 4);
        assert_eq!(iso.slot_incident(3).len(), 0);
        assert_eq!(attach_ghost(&g, &[0]), Err(Error::GhostPresent));
    }

    #[test]
    fn enhance_cases() {
        let k3 = attach_ghost(&build_graph(&FamilySpec::Complete(3)).unwrap(), &[0, 1, 2]).unwrap();
        let e = enhance(&k3, &PercolationConfig::zeros(&k3)).unwrap();
        assert_eq!(e.graph.num_edges(), 0);
        let e = enhance(&k3, &PercolationConfig::full(&k3)).unwrap();
        assert_eq!(e.graph.num_edges(), 6);
        // edges {01,12} open, ghost edge at vertex 2
        let mut c = PercolationConfig::zeros(&k3);
        c.edge_bits.set(0, true);
        c.edge_bits.set(1, true);
        c.vertex_bits.set(2, true);
        let e = enhance(&k3, &c).unwrap();
        assert_eq!(e.graph.num_edges(), 3);
        assert_eq!(e.origin, vec![0, 1, 5]);
        let bad = PercolationConfig {
            edge_bits: BitVec::zeros(2),
            vertex_bits: BitVec::zeros(4),
        };
        assert!(enhance(&k3, &bad).is_err());
    }

    #[test]
    fn odd_boundary_cases() {
        let k3 = attach_ghost(&build_graph(&FamilySpec::Complete(3)).unwrap(), &[0, 1, 2]).unwrap();
        let mut c = PercolationConfig::zeros(&k3);
        c.edge_bits.set(0, true);
        let e0 = k3.edge(0);
        assert_eq!(odd_boundary(&k3, &c).unwrap(), {
            let mut v = vec![e0.u, e0.v];
            v.sort();
            v
        });
        let full_tri = PercolationConfig {
            edge_bits: BitVec::ones(3),
            vertex_bits: BitVec::zeros(4),
        };
        assert!(odd_boundary(&k3, &full_tri).unwrap().is_empty());
        let mut w = PercolationConfig::zeros(&k3);
        w.vertex_bits.set(1, true);
        assert_eq!(odd_boundary(&k3, &w).unwrap(), vec![1]);
    }

    #[test]
    fn components_cases() {
        let g = Graph::new(5, &[]).unwrap();
        assert_eq!(components(&g, None).unwrap().count, 5);
        assert_eq!(components(&path(4), None).unwrap().count, 1);
        let g = Graph::new(4, &[(0, 1), (1, 2), (2, 3)]).unwrap();
        let mut c = PercolationConfig::zeros(&g);
        c.edge_bits.set(0, true);
        c.edge_bits.set(2, true);
        assert_eq!(components(&g, Some(&c)).unwrap().count, 2);
    }

    #[test]
    fn boundary_validation() {
        let q = wired_quotient(&path(5), &[1, 2, 3]).unwrap();
        assert!(BoundarySet::wired(&q).unwrap().validate(&q).is_ok());
        assert!(BoundarySet::free().validate(&q).is_err());
        assert!(BoundarySet::wired(&path(3)).is_err());
        let g = attach_ghost(&path(3), &[1]).unwrap();
        assert!(BoundarySet(BTreeSet::from([1])).validate(&g).is_ok());
        assert!(BoundarySet(BTreeSet::from([0])).validate(&g).is_err());
    }

    fn arb_graph() -> impl Strategy<Value = (Graph, u64)> {
        (2usize..7)
            .prop_flat_map(|n| {
                let e = prop::collection::vec((0..n, 0..n), 0..10);
                let sites = prop::collection::vec(any::<bool>(), n);
                (Just(n), e, sites, any::<u64>())
            })
            .prop_map(|(n, es, sites, key)| {
                let es: Vec<_> = es.into_iter().filter(|(a, b)| a != b).collect();
                let g = Graph::new(n, &es).unwrap();
                let s: Vec<usize> = (0..n).filter(|&i| sites[i]).collect();
                (attach_ghost(&g, &s).unwrap(), key)
            })
    }

    proptest! {
        #[test]
        fn handshake_parity((g, key) in arb_graph()) {
            let c = PercolationConfig::from_key(&g, key & ((1u64 << g.num_slots()) - 1));
            let mut plain = c.clone();
            plain.vertex_bits = BitVec::zeros(g.num_vertices());
            prop_assert_eq!(odd_boundary(&g, &plain).unwrap().len() % 2, 0);
            prop_assert_eq!(
                odd_boundary(&g, &c).unwrap(),
                odd_boundary_slots(&g, &c.to_slots(&g))
            );
        }

        #[test]
        fn quotient_drops_exactly_outside_edges((g, key) in arb_graph()) {
            let n = g.num_vertices() - 1;
            let keep: Vec<usize> = (0..n).filter(|i| (key >> i) & 1 == 1).collect();
            prop_assume!(!keep.is_empty() && keep.len() < n);
            let q = wired_quotient(&g, &keep).unwrap();
            let mut expect: Vec<usize> = g.edges().iter()
                .filter(|e| keep.contains(&e.u) || keep.contains(&e.v))
                .map(|e| e.id).collect();
            let mut got: Vec<usize> = q.edges().iter().map(|e| e.id).collect();
            expect.sort();
            got.sort();
            prop_assert_eq!(expect, got);
        }

        #[test]
        fn full_enhancement_reproduces_edges((g, _k) in arb_graph()) {
            let e = enhance(&g, &PercolationConfig::full(&g)).unwrap();
            prop_assert_eq!(e.graph.num_edges(), g.num_slots());
            for (i, ed) in e.graph.edges().iter().enumerate() {
                prop_assert_eq!((ed.u, ed.v), g.slot_endpoints(e.origin[i]));
            }
        }

        #[test]
        fn slot_roundtrip((g, key) in arb_graph()) {
            let key = key & ((1u64 << g.num_slots()) - 1);
            let c = PercolationConfig::from_key(&g, key);
            prop_assert_eq!(c.to_key(&g), key);
        }
    }
}
