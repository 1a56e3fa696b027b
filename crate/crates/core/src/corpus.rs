//! Small named test graphs: plain graphs, multigraphs, graphs with ghost
//! edges and wired quotients. Every entry has at most 10 edges.

use rand::Rng;

use crate::error::Result;
use crate::graph::{attach_ghost, build_graph, wired_quotient, FamilySpec, Graph};
use crate::rng::stream_rng;

#[derive(Clone, Debug)]
pub struct CorpusEntry {
    pub name: &'static str,
    pub graph: Graph,
}

fn fam(s: FamilySpec) -> Result<Graph> {
    build_graph(&s)
}

/// The fixed corpus, in a stable order.
pub fn corpus() -> Vec<CorpusEntry> {
    build().expect("corpus graphs are well formed")
}

fn build() -> Result<Vec<CorpusEntry>> {
    let mut out = Vec::new();
    let mut add = |name: &'static str, graph: Graph| out.push(CorpusEntry { name, graph });

    add("path3", fam(FamilySpec::Path(3))?);
    add("path5", fam(FamilySpec::Path(5))?);
    add("cycle3", fam(FamilySpec::Cycle(3))?);
    add("cycle4", fam(FamilySpec::Cycle(4))?);
    add("cycle5", fam(FamilySpec::Cycle(5))?);
    add("k4", fam(FamilySpec::Complete(4))?);
    add("grid2x2", fam(FamilySpec::Grid(2, 2))?);
    add("grid2x3", fam(FamilySpec::Grid(2, 3))?);
    add("ladder3", fam(FamilySpec::Ladder(3))?);
    add("tree3", fam(FamilySpec::Tree(3))?);
    add("theta", Graph::new(2, &[(0, 1), (0, 1), (0, 1)])?);
    add("doubled-triangle", Graph::new(3, &[(0, 1), (0, 1), (1, 2), (2, 0)])?);
    add("k4-minus-edge", Graph::new(4, &[(0, 1), (0, 2), (0, 3), (1, 2), (2, 3)])?);
    add("bowtie", Graph::new(5, &[(0, 1), (1, 2), (2, 0), (2, 3), (3, 4), (4, 2)])?);
    add(
        "k2-3",
        Graph::new(5, &[(0, 2), (0, 3), (0, 4), (1, 2), (1, 3), (1, 4)])?,
    );
    add(
        "wheel4",
        Graph::new(5, &[(0, 1), (0, 2), (0, 3), (0, 4), (1, 2), (2, 3), (3, 4), (4, 1)])?,
    );
    add("two-triangles", Graph::new(6, &[(0, 1), (1, 2), (2, 0), (3, 4), (4, 5), (5, 3)])?);
    add("triangle-and-point", Graph::new(4, &[(0, 1), (1, 2), (2, 0)])?);

    add("wired-path5", wired_quotient(&fam(FamilySpec::Path(5))?, &[1, 2, 3])?);
    add("wired-cycle6", wired_quotient(&fam(FamilySpec::Cycle(6))?, &[0, 1, 2])?);
    add("wired-grid3x3-center", wired_quotient(&fam(FamilySpec::Grid(3, 3))?, &[4])?);
    add("wired-grid3x3-pair", wired_quotient(&fam(FamilySpec::Grid(3, 3))?, &[4, 5])?);
    add("wired-ladder4", wired_quotient(&fam(FamilySpec::Ladder(4))?, &[1, 2, 5, 6])?);
    add("wired-k4", wired_quotient(&fam(FamilySpec::Complete(4))?, &[0, 1])?);

    add("cycle4-ghost", attach_ghost(&fam(FamilySpec::Cycle(4))?, &[0, 2])?);
    add("k3-ghost", attach_ghost(&fam(FamilySpec::Complete(3))?, &[0, 1, 2])?);
    add("path4-ghost", attach_ghost(&fam(FamilySpec::Path(4))?, &[0, 3])?);
    add("grid2x2-ghost", attach_ghost(&fam(FamilySpec::Grid(2, 2))?, &[0])?);
    add(
        "wired-path5-ghost",
        wired_quotient(&attach_ghost(&fam(FamilySpec::Path(5))?, &[1, 2])?, &[1, 2, 3])?,
    );
    add(
        "wired-cycle5-ghost",
        wired_quotient(&attach_ghost(&fam(FamilySpec::Cycle(5))?, &[0, 3])?, &[0, 1, 2, 3])?,
    );
    Ok(out)
}

/// Looks up a corpus graph by name.
pub fn corpus_graph(name: &str) -> Option<Graph> {
    corpus().into_iter().find(|e| e.name == name).map(|e| e.graph)
}

/// Random spanning tree by attachment plus `extra` random non-loop edges.
pub fn random_connected_graph(n: usize, extra: usize, seed: u64) -> Result<Graph> {
    let mut rng = stream_rng(seed, 0);
    let mut edges = Vec::new();
    for v in 1..n {
        edges.push((rng.gen_range(0..v), v));
    }
    if n >= 2 {
        for _ in 0..extra {
            let a = rng.gen_range(0..n);
            let mut b = rng.gen_range(0..n - 1);
            if b >= a {
                b += 1;
            }
            edges.push((a, b));
        }
    }
    Graph::new(n.max(1), &edges)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corpus_shape() {
        let c = corpus();
        assert!(c.len() >= 25);
        assert!(c.iter().all(|e| e.graph.num_edges() <= 10));
        assert!(c.iter().filter(|e| e.graph.wired().is_some()).count() >= 6);
        assert!(c.iter().filter(|e| e.graph.num_sites() > 0).count() >= 5);
        let mut names: Vec<_> = c.iter().map(|e| e.name).collect();
        names.sort_unstable();
        names.dedup();
        assert_eq!(names.len(), c.len());
        assert!(corpus_graph("k4").is_some());
    }

    #[test]
    fn random_graphs_are_connected() {
        for s in 0..20 {
            let g = random_connected_graph(7, 5, s).unwrap();
            assert!(g.is_connected());
            assert_eq!(g.num_edges(), 11);
        }
    }
}
