//! Graph sources, boundary handling and parameter resolution.

use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use evenloop_core::graph::{attach_ghost, graph_from_json, wire_to_max_degree};
use evenloop_core::{build_graph, BoundarySet, FamilySpec, Graph, ParamsMap};

use crate::{BoundaryMode, CliError, CliResult, GhostMode, GraphArgs, ModelArgs};

pub fn load_graph(src: &str) -> CliResult<Graph> {
    if src.starts_with("family:") {
        let spec: FamilySpec = src.parse()?;
        return Ok(build_graph(&spec)?);
    }
    let text = fs::read_to_string(src).map_err(|source| CliError::Io {
        path: src.to_string(),
        source,
    })?;
    Ok(graph_from_json(&text)?)
}

/// Ghost edges on every ordinary vertex. On wired graphs the ghost is Δ.
pub fn with_field(g: &Graph) -> CliResult<Graph> {
    if g.ghost().is_some() {
        return Ok(g.clone());
    }
    let sites: Vec<usize> = g.ordinary_vertices().collect();
    Ok(match g.wired() {
        Some(d) => Graph::from_parts(g.num_vertices(), g.edges().to_vec(), Some(d), Some(d), sites, g.family_tag())?,
        None => attach_ghost(g, &sites)?,
    })
}

/// Loads the graph, wires it when asked, attaches the field ghost, and
/// returns the boundary set.
pub fn resolve(args: &GraphArgs, field: bool) -> CliResult<(Graph, BoundarySet)> {
    let mut g = load_graph(&args.graph)?;
    if args.boundary == BoundaryMode::Wired && g.wired().is_none() {
        if g.ghost().is_some() {
            return Err(CliError::Input(
                "--boundary wired needs a graph without a ghost; use --ghost to add the field afterwards".into(),
            ));
        }
        g = wire_to_max_degree(&g)?;
    }
    let attach = match args.ghost {
        GhostMode::All => true,
        GhostMode::Auto => field,
        GhostMode::None => false,
    };
    if attach {
        g = with_field(&g)?;
    }
    let b = match args.boundary {
        BoundaryMode::Natural => BoundarySet::natural(&g),
        BoundaryMode::Wired => BoundarySet::wired(&g)?,
        BoundaryMode::Free => {
            if g.wired().is_some() {
                return Err(CliError::Input("a wired graph needs Δ in the boundary set".into()));
            }
            BoundarySet::free()
        }
    };
    b.validate(&g)?;
    Ok((g, b))
}

fn exclusive(a: bool, b: bool, what: &str) -> CliResult<()> {
    if a && b {
        Err(CliError::Input(format!("give either {what}, not both")))
    } else {
        Ok(())
    }
}

impl ModelArgs {
    /// Parameter map from loop activities, FK probabilities or β/h.
    pub fn resolve(&self) -> CliResult<ParamsMap> {
        let loop_given = self.x.is_some() || self.y.is_some();
        let fk_given = self.p.is_some() || self.p_h.is_some();
        let beta_given = self.beta.is_some() || self.h.is_some();
        exclusive(loop_given, fk_given, "--x/--y or --p/--p-h")?;
        exclusive(loop_given, beta_given, "--x/--y or --beta/--h")?;
        exclusive(fk_given, beta_given, "--p/--p-h or --beta/--h")?;
        Ok(if fk_given {
            ParamsMap::from_fk(self.p.unwrap_or(0.0), self.p_h.unwrap_or(0.0))?
        } else if beta_given {
            ParamsMap::from_beta(self.beta.unwrap_or(0.0), self.h.unwrap_or(0.0))?
        } else if loop_given {
            ParamsMap::from_loop(self.x.unwrap_or(0.0), self.y.unwrap_or(0.0))?
        } else {
            return Err(CliError::Input("no model parameters given".into()));
        })
    }
}

pub fn open_out(path: Option<&Path>) -> CliResult<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(fs::File::create(p).map_err(|source| io_err(p, source))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

pub fn io_err(path: &Path, source: io::Error) -> CliError {
    CliError::Io {
        path: path.display().to_string(),
        source,
    }
}

pub fn out_name(path: Option<&PathBuf>) -> String {
    path.map(|p| p.display().to_string()).unwrap_or_else(|| "<stdout>".into())
}
