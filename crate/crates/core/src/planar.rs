//! Planar maps given by rotation systems, dual maps, Ising spins from FK
//! clusters, and the gradient map from spins to even subgraphs of the dual.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::cycles::{ElementKind, GeneratingSet};
use crate::dsu::Dsu;
use crate::error::{Error, Result};
use crate::fk::exact_fk_distribution;
use crate::fk::FkParams;
use crate::gf2::BitVec;
use crate::graph::{BoundarySet, Edge, FamilySpec, FamilyTag, Graph, PercolationConfig};
use crate::loop_o1::{exact_loop_distribution, LoopParams};
use crate::oracle::{check_cap, exact_distribution, tv_distance, ExactDistribution, Scalar};
use crate::rng::stream_rng;

/// A connected plain graph with a cyclic order of edges at every vertex.
///
/// Dart `2e` runs `u → v` along edge `e = (u, v)`, dart `2e + 1` runs back.
#[derive(Clone, Debug)]
pub struct PlanarMap {
    graph: Graph,
    rotation: Vec<Vec<usize>>,
    outer_face: usize,
    faces: Vec<Vec<usize>>,
    face_of: Vec<usize>,
}

fn tail(g: &Graph, d: usize) -> usize {
    let e = g.edge(d / 2);
    if d % 2 == 0 {
        e.u
    } else {
        e.v
    }
}

impl PlanarMap {
    /// `rotation[v]` lists the edges at `v` in cyclic order. Without a hint
    /// the outer face is the longest one (lowest index on ties).
    pub fn from_rotation(graph: Graph, rotation: Vec<Vec<usize>>, outer_hint: Option<usize>) -> Result<Self> {
        if graph.ghost().is_some() || graph.wired().is_some() {
            return Err(Error::NonPlanar("maps are built on plain graphs".into()));
        }
        let n = graph.num_vertices();
        if rotation.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: rotation.len(),
            });
        }
        if !graph.is_connected() {
            return Err(Error::NonPlanar("map is disconnected".into()));
        }
        let m = graph.num_edges();
        // position of every dart in the rotation at its tail
        let mut slot_of = vec![usize::MAX; 2 * m];
        for (v, rot) in rotation.iter().enumerate() {
            let mut seen: Vec<usize> = rot.clone();
            seen.sort_unstable();
            let mut inc: Vec<usize> = graph.incident(v).iter().map(|&(e, _)| e).collect();
            inc.sort_unstable();
            if seen != inc {
                return Err(Error::NonPlanar(format!("rotation at {v} is not a permutation of its edges")));
            }
            for (i, &e) in rot.iter().enumerate() {
                let d = if graph.edge(e).u == v { 2 * e } else { 2 * e + 1 };
                slot_of[d] = i;
            }
        }
        let next = |d: usize| {
            let r = d ^ 1;
            let v = tail(&graph, r);
            let rot = &rotation[v];
            let e = rot[(slot_of[r] + 1) % rot.len()];
            if graph.edge(e).u == v {
                2 * e
            } else {
                2 * e + 1
            }
        };
        let mut face_of = vec![usize::MAX; 2 * m];
        let mut faces = Vec::new();
        for d0 in 0..2 * m {
            if face_of[d0] != usize::MAX {
                continue;
            }
            let f = faces.len();
            let mut face = Vec::new();
            let mut d = d0;
            loop {
                face_of[d] = f;
                face.push(d);
                d = next(d);
                if d == d0 {
                    break;
                }
            }
            faces.push(face);
        }
        if m == 0 {
            faces.push(Vec::new());
        }
        if n as i64 - m as i64 + faces.len() as i64 != 2 {
            return Err(Error::NonPlanar(format!(
                "Euler characteristic {} − {} + {} ≠ 2",
                n,
                m,
                faces.len()
            )));
        }
        let outer_face = match outer_hint {
            Some(f) if f < faces.len() => f,
            Some(f) => return Err(Error::InvalidIndex(f)),
            None => (0..faces.len()).max_by(|&a, &b| faces[a].len().cmp(&faces[b].len()).then(b.cmp(&a))).unwrap(),
        };
        Ok(PlanarMap {
            graph,
            rotation,
            outer_face,
            faces,
            face_of,
        })
    }

    /// Straight-line embedding: rotations sorted counterclockwise by angle;
    /// the outer face is the one with positive signed area.
    pub fn from_coordinates(graph: Graph, coords: &[(f64, f64)]) -> Result<Self> {
        if coords.len() != graph.num_vertices() {
            return Err(Error::DimensionMismatch {
                expected: graph.num_vertices(),
                got: coords.len(),
            });
        }
        let rotation = (0..graph.num_vertices())
            .map(|v| {
                let (x0, y0) = coords[v];
                let mut inc: Vec<(f64, usize)> = graph
                    .incident(v)
                    .iter()
                    .map(|&(e, w)| ((coords[w].1 - y0).atan2(coords[w].0 - x0), e))
                    .collect();
                inc.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                inc.into_iter().map(|(_, e)| e).collect()
            })
            .collect();
        let mut map = Self::from_rotation(graph, rotation, None)?;
        let area = |face: &[usize]| {
            face.iter()
                .map(|&d| {
                    let (a, b) = (tail(&map.graph, d), tail(&map.graph, d ^ 1));
                    coords[a].0 * coords[b].1 - coords[b].0 * coords[a].1
                })
                .sum::<f64>()
        };
        if map.graph.num_edges() > 0 {
            map.outer_face = (0..map.faces.len())
                .max_by(|&a, &b| area(&map.faces[a]).total_cmp(&area(&map.faces[b])))
                .unwrap();
        }
        Ok(map)
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn rotation(&self) -> &[Vec<usize>] {
        &self.rotation
    }

    pub fn outer_face(&self) -> usize {
        self.outer_face
    }

    pub fn num_faces(&self) -> usize {
        self.faces.len()
    }

    /// Face boundaries as dart cycles.
    pub fn face_darts(&self) -> &[Vec<usize>] {
        &self.faces
    }

    /// Face boundaries as edge sequences.
    pub fn faces(&self) -> Vec<Vec<usize>> {
        self.faces.iter().map(|f| f.iter().map(|d| d / 2).collect()).collect()
    }

    /// Faces on the two sides of edge `e`: (left of dart `2e`, of `2e + 1`).
    pub fn edge_faces(&self, e: usize) -> (usize, usize) {
        (self.face_of[2 * e], self.face_of[2 * e + 1])
    }

    /// Dual map: one vertex per face, dual edge `e` crossing edge `e`.
    pub fn dual(&self) -> Result<PlanarMap> {
        let m = self.graph.num_edges();
        let mut edges = Vec::with_capacity(m);
        for e in 0..m {
            let (a, b) = self.edge_faces(e);
            if a == b {
                return Err(Error::DegenerateFace(format!("edge {e} has the same face on both sides")));
            }
            edges.push(Edge { u: a, v: b, id: e });
        }
        let g = Graph::from_parts(self.faces.len(), edges, None, None, Vec::new(), FamilyTag::Custom)?;
        let rotation = self.faces.iter().map(|f| f.iter().map(|d| d / 2).collect()).collect();
        PlanarMap::from_rotation(g, rotation, None)
    }

    /// Dual graph with the outer face as the wired vertex Δ; edge `e` of the
    /// result crosses edge `e` of the map.
    pub fn wired_dual_graph(&self) -> Result<Graph> {
        let d = self.dual()?;
        let edges = d.graph.edges().to_vec();
        Graph::from_parts(d.graph.num_vertices(), edges, None, Some(self.outer_face), Vec::new(), FamilyTag::Custom)
    }

    /// Boundaries of the bounded faces as edge vectors (multiplicities
    /// mod 2).
    pub fn face_generating_set(&self) -> Result<GeneratingSet> {
        let m = self.graph.num_edges();
        let mut gen = GeneratingSet::new(m);
        for (f, face) in self.faces.iter().enumerate() {
            if f == self.outer_face {
                continue;
            }
            let mut v = BitVec::zeros(m);
            for d in face {
                v.toggle(d / 2);
            }
            gen.push(v, ElementKind::Face)?;
        }
        Ok(gen)
    }

    pub fn to_json(&self) -> MapJson {
        MapJson {
            vertices: self.graph.num_vertices(),
            edges: self.graph.edges().iter().map(|e| [e.u, e.v]).collect(),
            rotation: self.rotation.clone(),
            outer_face: Some(self.outer_face),
        }
    }
}

/// Map file format: a graph plus per-vertex cyclic edge lists.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MapJson {
    pub vertices: usize,
    pub edges: Vec<[usize; 2]>,
    pub rotation: Vec<Vec<usize>>,
    #[serde(default)]
    pub outer_face: Option<usize>,
}

impl MapJson {
    pub fn into_map(self) -> Result<PlanarMap> {
        let edges: Vec<(usize, usize)> = self.edges.iter().map(|&[u, v]| (u, v)).collect();
        let g = Graph::new(self.vertices, &edges)?;
        PlanarMap::from_rotation(g, self.rotation, self.outer_face)
    }
}

pub fn map_from_json(s: &str) -> Result<PlanarMap> {
    let raw: MapJson = serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
    raw.into_map()
}

/// Grid with unit spacing.
pub fn grid_map(rows: usize, cols: usize) -> Result<PlanarMap> {
    let g = crate::graph::build_graph(&FamilySpec::Grid(rows, cols))?;
    let coords: Vec<(f64, f64)> = (0..rows * cols).map(|v| ((v % cols) as f64, (v / cols) as f64)).collect();
    PlanarMap::from_coordinates(g, &coords)
}

/// Cycle on the unit circle.
pub fn cycle_map(n: usize) -> Result<PlanarMap> {
    let g = crate::graph::build_graph(&FamilySpec::Cycle(n))?;
    let coords: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let t = std::f64::consts::TAU * i as f64 / n as f64;
            (t.cos(), t.sin())
        })
        .collect();
    PlanarMap::from_coordinates(g, &coords)
}

/// Wheel: hub 0 at the origin, rim `1..=n`.
pub fn wheel_map(n: usize) -> Result<PlanarMap> {
    if n < 3 {
        return Err(Error::InvalidSize(format!("wheel needs at least 3 rim vertices, got {n}")));
    }
    let mut edges: Vec<(usize, usize)> = (1..=n).map(|i| (0, i)).collect();
    edges.extend((1..=n).map(|i| (i, i % n + 1)));
    let g = Graph::new(n + 1, &edges)?;
    let mut coords = vec![(0.0, 0.0)];
    coords.extend((0..n).map(|i| {
        let t = std::f64::consts::TAU * i as f64 / n as f64;
        (t.cos(), t.sin())
    }));
    PlanarMap::from_coordinates(g, &coords)
}

/// Grid in which each unit square independently gets one diagonal with
/// probability 1/2 (the direction is random too).
pub fn random_planar_map(rows: usize, cols: usize, seed: u64) -> Result<PlanarMap> {
    let base = crate::graph::build_graph(&FamilySpec::Grid(rows, cols))?;
    let mut edges: Vec<(usize, usize)> = base.edges().iter().map(|e| (e.u, e.v)).collect();
    let mut rng = stream_rng(seed, 0);
    for r in 0..rows.saturating_sub(1) {
        for c in 0..cols.saturating_sub(1) {
            let v = r * cols + c;
            match rng.gen_range(0..4) {
                0 => edges.push((v, v + cols + 1)),
                1 => edges.push((v + 1, v + cols)),
                _ => {}
            }
        }
    }
    let g = Graph::new(rows * cols, &edges)?;
    let coords: Vec<(f64, f64)> = (0..rows * cols).map(|v| ((v % cols) as f64, (v / cols) as f64)).collect();
    PlanarMap::from_coordinates(g, &coords)
}

/// Spins `±1` indexed by vertex; non-ordinary vertices carry the spin of
/// their cluster.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct SpinConfig(pub Vec<i8>);

impl SpinConfig {
    /// Bit `i` set when the `i`-th ordinary vertex has spin −1.
    pub fn key(&self, g: &Graph) -> u64 {
        g.ordinary_vertices()
            .enumerate()
            .fold(0, |k, (i, v)| if self.0[v] < 0 { k | (1 << i) } else { k })
    }

    pub fn from_key(g: &Graph, key: u64, rooted_spin: i8) -> Self {
        let mut s = vec![rooted_spin; g.num_vertices()];
        for (i, v) in g.ordinary_vertices().enumerate() {
            s[v] = if (key >> i) & 1 == 1 { -1 } else { 1 };
        }
        SpinConfig(s)
    }
}

fn check_spin(g: &Graph, boundary_spin: Option<i8>) -> Result<()> {
    match boundary_spin {
        Some(s) if s != 1 && s != -1 => Err(Error::ParamOutOfRange(format!("spin {s} is not ±1"))),
        Some(_) if g.ghost().is_none() && g.wired().is_none() => Err(Error::InvalidBoundary(
            "a boundary spin needs a ghost or wired vertex".into(),
        )),
        _ => Ok(()),
    }
}

/// Cluster labels of `ω` with all non-ordinary vertices merged.
fn clusters(g: &Graph, slots: &BitVec) -> (Vec<usize>, usize, Option<usize>) {
    let mut d = Dsu::new(g.num_vertices());
    for s in slots.iter_ones() {
        let (a, b) = g.slot_endpoints(s);
        d.union(a, b);
    }
    let special: Vec<usize> = (0..g.num_vertices()).filter(|&v| !g.is_ordinary(v)).collect();
    for w in special.windows(2) {
        d.union(w[0], w[1]);
    }
    let labels = d.labels();
    let count = labels.iter().copied().max().map_or(0, |x| x + 1);
    let rooted = special.first().map(|&v| labels[v]);
    (labels, count, rooted)
}

/// Colors each cluster of `ω` by an independent fair sign; the cluster of
/// the ghost/Δ takes `boundary_spin` when given.
pub fn ising_from_fk<R: Rng + ?Sized>(
    g: &Graph,
    omega: &PercolationConfig,
    boundary_spin: Option<i8>,
    rng: &mut R,
) -> Result<SpinConfig> {
    omega.validate(g)?;
    check_spin(g, boundary_spin)?;
    let (labels, count, rooted) = clusters(g, &omega.to_slots(g));
    let signs: Vec<i8> = (0..count)
        .map(|c| match (rooted, boundary_spin) {
            (Some(r), Some(s)) if r == c => s,
            _ => {
                if rng.gen::<bool>() {
                    1
                } else {
                    -1
                }
            }
        })
        .collect();
    Ok(SpinConfig(labels.iter().map(|&l| signs[l]).collect()))
}

/// Exact law of the coloring of a fixed FK key, over ordinary-vertex spin
/// keys.
pub fn coloring_kernel<W: Scalar>(g: &Graph, omega_key: u64, boundary_spin: Option<i8>) -> Vec<(u64, W)> {
    let slots = BitVec::from_key(g.num_slots(), omega_key);
    let (labels, count, rooted) = clusters(g, &slots);
    let fixed = rooted.filter(|_| boundary_spin.is_some());
    let free: Vec<usize> = (0..count).filter(|&c| Some(c) != fixed).collect();
    let w = W::one() / num_traits::pow(W::one() + W::one(), free.len());
    let ordinary: Vec<usize> = g.ordinary_vertices().collect();
    (0..1u64 << free.len())
        .map(|mask| {
            let mut minus = vec![false; count];
            if let (Some(r), Some(s)) = (fixed, boundary_spin) {
                minus[r] = s < 0;
            }
            for (j, &c) in free.iter().enumerate() {
                minus[c] = (mask >> j) & 1 == 1;
            }
            let key = ordinary
                .iter()
                .enumerate()
                .fold(0u64, |k, (i, &v)| if minus[labels[v]] { k | (1 << i) } else { k });
            (key, w.clone())
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct IsingParams {
    pub beta: f64,
    pub h: f64,
    /// Spin of the ghost/Δ; summed over when absent.
    pub boundary_spin: Option<i8>,
}

/// Exact Ising law over ordinary-vertex spin keys: weight
/// `exp(β Σ_edges σσ + h Σ_sites σ_v σ_ghost)`.
pub fn exact_ising_distribution(g: &Graph, params: &IsingParams) -> Result<ExactDistribution<f64>> {
    check_spin(g, params.boundary_spin)?;
    let ordinary: Vec<usize> = g.ordinary_vertices().collect();
    check_cap(ordinary.len())?;
    let mut index = vec![usize::MAX; g.num_vertices()];
    for (i, &v) in ordinary.iter().enumerate() {
        index[v] = i;
    }
    let roots: Vec<i8> = match params.boundary_spin {
        Some(s) => vec![s],
        None if g.ghost().is_some() || g.wired().is_some() => vec![1, -1],
        None => vec![1],
    };
    let top = params.beta * g.num_edges() as f64 + params.h * g.num_sites() as f64;
    let slots: Vec<(usize, usize, f64)> = (0..g.num_slots())
        .map(|s| {
            let (a, b) = g.slot_endpoints(s);
            let c = if g.is_ghost_slot(s) { params.h } else { params.beta };
            (a, b, c)
        })
        .collect();
    exact_distribution(ordinary.len(), |key| {
        let spin = |v: usize, r: i8| -> f64 {
            if index[v] == usize::MAX {
                r as f64
            } else if (key >> index[v]) & 1 == 1 {
                -1.0
            } else {
                1.0
            }
        };
        roots
            .iter()
            .map(|&r| {
                let e: f64 = slots.iter().map(|&(a, b, c)| c * spin(a, r) * spin(b, r)).sum();
                (e - top).exp()
            })
            .sum::<f64>()
    })
}

/// Pushforward of exact FK through the cluster coloring.
pub fn exact_es_ising(g: &Graph, fk: &FkParams<f64>, boundary_spin: Option<i8>) -> Result<ExactDistribution<f64>> {
    check_spin(g, boundary_spin)?;
    let d = exact_fk_distribution(g, fk)?;
    let n_out = g.ordinary_vertices().count();
    Ok(d.pushforward_kernel(n_out, |k| coloring_kernel(g, k, boundary_spin)))
}

/// Edges whose endpoints carry different spins.
pub fn disagreement_edges(m: &PlanarMap, sigma: &SpinConfig) -> Result<BitVec> {
    let g = m.graph();
    if sigma.0.len() != g.num_vertices() {
        return Err(Error::DimensionMismatch {
            expected: g.num_vertices(),
            got: sigma.0.len(),
        });
    }
    let mut out = BitVec::zeros(g.num_edges());
    for (i, e) in g.edges().iter().enumerate() {
        if sigma.0[e.u] != sigma.0[e.v] {
            out.set(i, true);
        }
    }
    Ok(out)
}

/// Faces (dual vertices) met by an odd number of edges of `edges`.
pub fn odd_dual_vertices(m: &PlanarMap, edges: &BitVec) -> Vec<usize> {
    m.face_darts()
        .iter()
        .enumerate()
        .filter(|(_, face)| face.iter().filter(|&&d| edges.get(d / 2)).count() % 2 == 1)
        .map(|(f, _)| f)
        .collect()
}

/// Disagreement edges of `σ`, indexed by map edge (equivalently by dual
/// edge). Panics if the image fails to be even on the dual.
pub fn gradient(m: &PlanarMap, sigma: &SpinConfig) -> Result<BitVec> {
    let out = disagreement_edges(m, sigma)?;
    let odd = odd_dual_vertices(m, &out);
    assert!(odd.is_empty(), "gradient image is odd at dual vertices {odd:?}");
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DualityReport {
    pub beta: f64,
    pub x: f64,
    /// Free Ising on the map against wired Loop O(1) on the dual.
    pub tv_free_wired: f64,
    /// Ising with one outer vertex fixed to +1 against free Loop O(1) on
    /// the dual.
    pub tv_plus_free: f64,
    pub ok: bool,
}

/// Exact comparison of gradient images of Ising on `m` with Loop O(1) on
/// the dual at `x = e^{−2β}`.
pub fn duality_check(m: &PlanarMap, beta: f64) -> Result<DualityReport> {
    if beta < 0.0 || beta.is_nan() {
        return Err(Error::ParamOutOfRange(format!("β = {beta}")));
    }
    let g = m.graph();
    let ne = g.num_edges();
    check_cap(ne)?;
    check_cap(g.num_vertices())?;
    let x = (-2.0 * beta).exp();

    let free = exact_ising_distribution(
        g,
        &IsingParams {
            beta,
            h: 0.0,
            boundary_spin: None,
        },
    )?;
    let free_img = free.pushforward(ne, |k| gradient(m, &SpinConfig::from_key(g, k, 1)).unwrap().to_key());
    let wd = m.wired_dual_graph()?;
    let wired_loop = exact_loop_distribution(&wd, &LoopParams::new(x, 0.0, BoundarySet::wired(&wd)?))?;
    let tv_free_wired = tv_distance(&free_img, &wired_loop)?;

    let root = outer_vertex(m);
    let pinned = Graph::from_parts(g.num_vertices(), g.edges().to_vec(), None, Some(root), Vec::new(), FamilyTag::Custom)?;
    let plus = exact_ising_distribution(
        &pinned,
        &IsingParams {
            beta,
            h: 0.0,
            boundary_spin: Some(1),
        },
    )?;
    let plus_img = plus.pushforward(ne, |k| {
        gradient(m, &SpinConfig::from_key(&pinned, k, 1)).unwrap().to_key()
    });
    let dual = m.dual()?;
    let free_loop = exact_loop_distribution(dual.graph(), &LoopParams::new(x, 0.0, BoundarySet::free()))?;
    let tv_plus_free = tv_distance(&plus_img, &free_loop)?;
    Ok(DualityReport {
        beta,
        x,
        tv_free_wired,
        tv_plus_free,
        ok: tv_free_wired < 1e-10 && tv_plus_free < 1e-10,
    })
}

/// Lowest-index vertex on the outer face.
pub fn outer_vertex(m: &PlanarMap) -> usize {
    m.face_darts()[m.outer_face()]
        .iter()
        .map(|&d| tail(m.graph(), d))
        .min()
        .unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cycles::{bfs_spanning_forest, fundamental_cycles};
    use crate::graph::{attach_ghost, build_graph};

    #[test]
    fn face_counts() {
        assert_eq!(cycle_map(4).unwrap().num_faces(), 2);
        let g = grid_map(3, 3).unwrap();
        assert_eq!(g.num_faces(), 5);
        assert_eq!(g.faces()[g.outer_face()].len(), 8);
        let single = PlanarMap::from_coordinates(Graph::new(2, &[(0, 1)]).unwrap(), &[(0.0, 0.0), (1.0, 0.0)]).unwrap();
        assert_eq!(single.num_faces(), 1);
        let lone = PlanarMap::from_rotation(Graph::new(1, &[]).unwrap(), vec![vec![]], None).unwrap();
        assert_eq!(lone.num_faces(), 1);
    }

    #[test]
    fn nonplanar_rotation_rejected() {
        let k4 = build_graph(&FamilySpec::Complete(4)).unwrap();
        let coords = [(0.0, 0.0), (4.0, 0.0), (2.0, 3.0), (2.0, 1.0)];
        assert_eq!(PlanarMap::from_coordinates(k4, &coords).unwrap().num_faces(), 4);
        let mut edges = Vec::new();
        for a in 0..3 {
            for b in 3..6 {
                edges.push((a, b));
            }
        }
        let k33 = Graph::new(6, &edges).unwrap();
        let rot: Vec<Vec<usize>> = (0..6).map(|v| k33.incident(v).iter().map(|&(e, _)| e).collect()).collect();
        assert!(matches!(PlanarMap::from_rotation(k33, rot, None), Err(Error::NonPlanar(_))));
        let bad = PlanarMap::from_rotation(Graph::new(2, &[(0, 1)]).unwrap(), vec![vec![], vec![0]], None);
        assert!(bad.is_err());
    }

    #[test]
    fn duals() {
        let c = cycle_map(5).unwrap();
        let d = c.dual().unwrap();
        assert_eq!(d.graph().num_vertices(), 2);
        assert_eq!(d.graph().num_edges(), 5);
        let g = grid_map(3, 3).unwrap();
        let d = g.dual().unwrap();
        assert_eq!(d.graph().num_vertices(), 5);
        assert_eq!(d.graph().num_edges(), 12);
        let outer = g.outer_face();
        assert_eq!(d.graph().degree(outer), 8);
        for f in (0..5).filter(|&f| f != outer) {
            assert_eq!(d.graph().degree(f), 4);
        }
        for m in [c, g, wheel_map(5).unwrap(), random_planar_map(3, 4, 2).unwrap()] {
            let dd = m.dual().unwrap().dual().unwrap();
            assert_eq!(dd.graph().num_vertices(), m.graph().num_vertices());
            // every vertex star of the double dual is a vertex star of the map
            let star = |g: &Graph, v: usize| {
                let mut es: Vec<usize> = g.incident(v).iter().map(|&(e, _)| e).collect();
                es.sort_unstable();
                es
            };
            let mut matched = vec![false; m.graph().num_vertices()];
            for w in 0..dd.graph().num_vertices() {
                let es = star(dd.graph(), w);
                let v = (0..m.graph().num_vertices())
                    .find(|&v| star(m.graph(), v) == es)
                    .expect("double dual star matches a vertex star");
                matched[v] = true;
            }
            assert_eq!(dd.faces().len(), m.num_faces());
            assert!(matched.iter().all(|&b| b));
        }
        let tree = PlanarMap::from_coordinates(Graph::new(2, &[(0, 1)]).unwrap(), &[(0.0, 0.0), (1.0, 0.0)]).unwrap();
        assert!(matches!(tree.dual(), Err(Error::DegenerateFace(_))));
    }

    #[test]
    fn face_span_equals_cycle_space() {
        for m in [grid_map(3, 4).unwrap(), wheel_map(6).unwrap(), random_planar_map(4, 4, 9).unwrap()] {
            let faces = m.face_generating_set().unwrap();
            let tree = fundamental_cycles(m.graph(), &bfs_spanning_forest(m.graph())).unwrap();
            assert_eq!(faces.span_basis(), tree.span_basis());
            assert_eq!(faces.len(), tree.len());
        }
    }

    #[test]
    fn coloring_examples() {
        let g = build_graph(&FamilySpec::Grid(2, 2)).unwrap();
        let mut rng = stream_rng(4, 0);
        let s = ising_from_fk(&g, &PercolationConfig::full(&g), None, &mut rng).unwrap();
        assert!(s.0.iter().all(|&x| x == s.0[0]));
        let gg = attach_ghost(&g, &[0, 1, 2, 3]).unwrap();
        let s = ising_from_fk(&gg, &PercolationConfig::full(&gg), Some(1), &mut rng).unwrap();
        assert!(s.0.iter().all(|&x| x == 1));
        assert!(ising_from_fk(&g, &PercolationConfig::zeros(&g), Some(1), &mut rng).is_err());
        let k = coloring_kernel::<f64>(&g, 0, None);
        assert_eq!(k.len(), 16);
    }

    #[test]
    fn es_matches_ising() {
        let k3 = build_graph(&FamilySpec::Complete(3)).unwrap();
        for beta in [0.0, 0.3, 1.1] {
            let fk = FkParams::from_beta(beta, 0.0, BoundarySet::free()).unwrap();
            let a = exact_es_ising(&k3, &fk, None).unwrap();
            let b = exact_ising_distribution(&k3, &IsingParams { beta, h: 0.0, boundary_spin: None }).unwrap();
            assert!(tv_distance(&a, &b).unwrap() < 1e-12);
        }
        let g = attach_ghost(&build_graph(&FamilySpec::Cycle(4)).unwrap(), &[0, 2]).unwrap();
        let fk = FkParams::from_beta(0.4, 0.7, BoundarySet::free()).unwrap();
        for spin in [None, Some(1)] {
            let a = exact_es_ising(&g, &fk, spin).unwrap();
            let b = exact_ising_distribution(&g, &IsingParams { beta: 0.4, h: 0.7, boundary_spin: spin }).unwrap();
            assert!(tv_distance(&a, &b).unwrap() < 1e-12);
        }
    }

    #[test]
    fn gradient_examples() {
        let m = grid_map(3, 3).unwrap();
        let plus = SpinConfig(vec![1; 9]);
        assert!(gradient(&m, &plus).unwrap().is_zero());
        let mut one = plus.clone();
        one.0[4] = -1;
        let img = gradient(&m, &one).unwrap();
        let star: Vec<usize> = m.graph().incident(4).iter().map(|&(e, _)| e).collect();
        assert_eq!(img, BitVec::from_indices(12, star.iter().copied()).unwrap());
        let mut rng = stream_rng(8, 0);
        for t in 0..200 {
            let rm = random_planar_map(4, 5, t).unwrap();
            let s = SpinConfig((0..20).map(|_| if rng.gen::<bool>() { 1 } else { -1 }).collect());
            gradient(&rm, &s).unwrap();
        }
    }

    #[test]
    fn exact_duality_small() {
        for m in [grid_map(2, 2).unwrap(), cycle_map(5).unwrap(), wheel_map(4).unwrap()] {
            for beta in [0.0, 0.4, 1.5] {
                let r = duality_check(&m, beta).unwrap();
                assert!(r.ok, "{r:?}");
            }
        }
        let r = duality_check(&grid_map(2, 2).unwrap(), 8.0).unwrap();
        assert!(r.tv_free_wired < 1e-6);
    }

    #[test]
    fn json_roundtrip() {
        let m = wheel_map(5).unwrap();
        let s = serde_json::to_string(&m.to_json()).unwrap();
        let back = map_from_json(&s).unwrap();
        assert_eq!(back.faces(), m.faces());
        assert_eq!(back.outer_face(), m.outer_face());
    }
}
