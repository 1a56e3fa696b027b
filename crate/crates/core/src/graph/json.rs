//! JSON graph format.
//!
//! `vertices` counts ordinary vertices plus Δ (when `wired`, Δ is the last
//! one); the ghost vertex is implicit. A ghost exists when `ghost_sites` is
//! non-empty or `ghost` is true; on wired graphs it is identified with Δ.

use serde::{Deserialize, Serialize};

use super::{Edge, FamilyTag, Graph};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphJson {
    pub vertices: usize,
    pub edges: Vec<[usize; 2]>,
    #[serde(default)]
    pub ghost_sites: Vec<usize>,
    #[serde(default)]
    pub wired: bool,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub ghost: bool,
}

impl GraphJson {
    pub fn into_graph(self) -> Result<Graph> {
        let edges: Vec<Edge> = self
            .edges
            .iter()
            .enumerate()
            .map(|(id, &[u, v])| Edge { u, v, id })
            .collect();
        let has_ghost = self.ghost || !self.ghost_sites.is_empty();
        let (n, wired, ghost) = if self.wired {
            if self.vertices == 0 {
                return Err(Error::Parse("wired graph needs at least the Δ vertex".into()));
            }
            let d = self.vertices - 1;
            (self.vertices, Some(d), has_ghost.then_some(d))
        } else if has_ghost {
            (self.vertices + 1, None, Some(self.vertices))
        } else {
            (self.vertices, None, None)
        };
        for &s in &self.ghost_sites {
            if s >= self.vertices || Some(s) == wired {
                return Err(Error::Parse(format!("ghost site {s} is not an ordinary vertex")));
            }
        }
        Graph::from_parts(n, edges, ghost, wired, self.ghost_sites, FamilyTag::Custom)
    }

    pub fn from_graph(g: &Graph) -> Result<Self> {
        let vertices = match (g.ghost(), g.wired()) {
            (Some(gh), Some(d)) if gh == d => g.num_vertices(),
            (Some(gh), _) => {
                if gh != g.num_vertices() - 1 {
                    return Err(Error::Parse("ghost vertex must be the last vertex".into()));
                }
                g.num_vertices() - 1
            }
            _ => g.num_vertices(),
        };
        if let Some(d) = g.wired() {
            if d != vertices - 1 {
                return Err(Error::Parse("Δ must be the last non-ghost vertex".into()));
            }
        }
        Ok(GraphJson {
            vertices,
            edges: g.edges().iter().map(|e| [e.u, e.v]).collect(),
            ghost_sites: g.ghost_sites().to_vec(),
            wired: g.wired().is_some(),
            ghost: g.ghost().is_some() && g.ghost_sites().is_empty(),
        })
    }
}

pub fn graph_from_json(s: &str) -> Result<Graph> {
    let raw: GraphJson = serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
    raw.into_graph()
}

pub fn graph_to_json(g: &Graph) -> Result<String> {
    let raw = GraphJson::from_graph(g)?;
    serde_json::to_string(&raw).map_err(|e| Error::Parse(e.to_string()))
}
