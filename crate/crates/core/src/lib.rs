//! Exact and sampled finite-volume machinery for the Loop O(1) model,
//! FK-Ising, uniform even subgraphs, Wilson's algorithm and planar duality.

pub mod corpus;
pub mod cycles;
pub mod dsu;
pub mod error;
pub mod fk;
pub mod gf2;
pub mod graph;
pub mod lab;
pub mod loop_o1;
pub mod oracle;
pub mod planar;
pub mod rng;
pub mod verify;
pub mod wilson;

pub use cycles::{EdgeVector, ElementKind, GeneratingSet, TreeStrategy};
pub use error::{Error, Result};
pub use fk::FkParams;
pub use gf2::{Basis, BitVec};
pub use graph::{build_graph, BoundarySet, FamilySpec, FamilyTag, Graph, PercolationConfig};
pub use lab::ExhaustionFamily;
pub use loop_o1::{LoopParams, ParamsMap};
pub use oracle::ExactDistribution;
pub use planar::{PlanarMap, SpinConfig};
pub use wilson::{ArrowStacks, ColoredCycle, OrientedTree};
