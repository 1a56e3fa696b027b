//! Fixtures shared by the benchmarks.

use evenloop_core::graph::attach_ghost;
use evenloop_core::{build_graph, BoundarySet, FamilySpec, Graph, LoopParams};

/// `side x side` grid with a ghost edge at every vertex when `field` is set.
pub fn grid(side: usize, field: bool) -> Graph {
    let g = build_graph(&FamilySpec::Grid(side, side)).expect("grid sizes are positive");
    if field {
        let sites: Vec<usize> = (0..g.num_vertices()).collect();
        attach_ghost(&g, &sites).expect("fresh grid has no ghost")
    } else {
        g
    }
}

/// Free-boundary loop parameters.
pub fn loop_params(x: f64, y: f64) -> LoopParams {
    LoopParams::new(x, y, BoundarySet::free())
}
