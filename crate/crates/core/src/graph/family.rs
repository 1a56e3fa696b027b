use std::fmt;
use std::str::FromStr;

use super::{FamilyTag, Graph};
use crate::error::{Error, Result};

/// Named graph families with their size parameters.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FamilySpec {
    Path(usize),
    Cycle(usize),
    /// `n` rungs of `Z x {0,1}`.
    Ladder(usize),
    /// `rows x cols` rectangular lattice.
    Grid(usize, usize),
    Torus(usize, usize),
    Complete(usize),
    /// Complete binary tree with the given number of levels.
    Tree(usize),
    /// `len x circ` grid with periodic second coordinate.
    Cylinder(usize, usize),
}

impl FamilySpec {
    pub fn tag(&self) -> FamilyTag {
        match self {
            FamilySpec::Path(_) => FamilyTag::Path,
            FamilySpec::Cycle(_) => FamilyTag::Cycle,
            FamilySpec::Ladder(_) => FamilyTag::Ladder,
            FamilySpec::Grid(..) => FamilyTag::Grid,
            FamilySpec::Torus(..) => FamilyTag::Torus,
            FamilySpec::Complete(_) => FamilyTag::Complete,
            FamilySpec::Tree(_) => FamilyTag::Tree,
            FamilySpec::Cylinder(..) => FamilyTag::Cylinder,
        }
    }
}

impl fmt::Display for FamilySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FamilySpec::Path(n) => write!(f, "path:{n}"),
            FamilySpec::Cycle(n) => write!(f, "cycle:{n}"),
            FamilySpec::Ladder(n) => write!(f, "ladder:{n}"),
            FamilySpec::Grid(r, c) => write!(f, "grid:{r}x{c}"),
            FamilySpec::Torus(r, c) => write!(f, "torus:{r}x{c}"),
            FamilySpec::Complete(n) => write!(f, "complete:{n}"),
            FamilySpec::Tree(d) => write!(f, "tree:{d}"),
            FamilySpec::Cylinder(l, c) => write!(f, "cylinder:{l}x{c}"),
        }
    }
}

fn parse_size(s: &str) -> Result<usize> {
    let v: i64 = s
        .trim()
        .parse()
        .map_err(|_| Error::InvalidSize(format!("`{s}` is not an integer")))?;
    if v <= 0 {
        return Err(Error::InvalidSize(format!("size must be positive, got {v}")));
    }
    Ok(v as usize)
}

fn parse_pair(s: &str) -> Result<(usize, usize)> {
    match s.split_once(['x', ',']) {
        Some((a, b)) => Ok((parse_size(a)?, parse_size(b)?)),
        None => {
            let n = parse_size(s)?;
            Ok((n, n))
        }
    }
}

impl FromStr for FamilySpec {
    type Err = Error;

    /// Accepts `name:size` or `name:RxC`, optionally prefixed by `family:`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.strip_prefix("family:").unwrap_or(s);
        let (name, arg) = s
            .split_once(':')
            .ok_or_else(|| Error::InvalidSize(format!("missing size in `{s}`")))?;
        Ok(match name.to_ascii_lowercase().as_str() {
            "path" => FamilySpec::Path(parse_size(arg)?),
            "cycle" => FamilySpec::Cycle(parse_size(arg)?),
            "ladder" => FamilySpec::Ladder(parse_size(arg)?),
            "grid" => {
                let (r, c) = parse_pair(arg)?;
                FamilySpec::Grid(r, c)
            }
            "torus" => {
                let (r, c) = parse_pair(arg)?;
                FamilySpec::Torus(r, c)
            }
            "complete" => FamilySpec::Complete(parse_size(arg)?),
            "tree" => FamilySpec::Tree(parse_size(arg)?),
            "cylinder" => {
                let (l, c) = parse_pair(arg)?;
                FamilySpec::Cylinder(l, c)
            }
            other => return Err(Error::UnknownFamily(other.to_string())),
        })
    }
}

fn positive(n: usize) -> Result<()> {
    if n == 0 {
        Err(Error::InvalidSize("size must be positive".into()))
    } else {
        Ok(())
    }
}

/// Builds a family member with deterministic vertex and edge numbering.
///
/// Grid-like families number vertex `(r, c)` as `r * cols + c`, listing
/// horizontal edges before vertical ones. Ladders put rail 0 on vertices
/// `0..n`, rail 1 on `n..2n`, and list rail edges before rungs.
pub fn build_graph(spec: &FamilySpec) -> Result<Graph> {
    let mut edges = Vec::new();
    let n = match *spec {
        FamilySpec::Path(n) => {
            positive(n)?;
            edges.extend((1..n).map(|i| (i - 1, i)));
            n
        }
        FamilySpec::Cycle(n) => {
            if n < 3 {
                return Err(Error::InvalidSize(format!("cycle needs at least 3 vertices, got {n}")));
            }
            edges.extend((0..n).map(|i| (i, (i + 1) % n)));
            n
        }
        FamilySpec::Ladder(n) => {
            positive(n)?;
            for rail in 0..2 {
                edges.extend((1..n).map(|i| (rail * n + i - 1, rail * n + i)));
            }
            edges.extend((0..n).map(|i| (i, n + i)));
            2 * n
        }
        FamilySpec::Grid(r, c) => {
            positive(r)?;
            positive(c)?;
            for i in 0..r {
                edges.extend((1..c).map(|j| (i * c + j - 1, i * c + j)));
            }
            for i in 1..r {
                edges.extend((0..c).map(|j| ((i - 1) * c + j, i * c + j)));
            }
            r * c
        }
        FamilySpec::Torus(r, c) => {
            if r < 3 || c < 3 {
                return Err(Error::InvalidSize("torus sides must be at least 3".into()));
            }
            for i in 0..r {
                edges.extend((0..c).map(|j| (i * c + j, i * c + (j + 1) % c)));
            }
            for i in 0..r {
                edges.extend((0..c).map(|j| (i * c + j, ((i + 1) % r) * c + j)));
            }
            r * c
        }
        FamilySpec::Complete(n) => {
            positive(n)?;
            for i in 0..n {
                edges.extend((i + 1..n).map(|j| (i, j)));
            }
            n
        }
        FamilySpec::Tree(d) => {
            positive(d)?;
            if d > 20 {
                return Err(Error::InvalidSize(format!("tree depth {d} too large")));
            }
            let n = (1usize << d) - 1;
            edges.extend((1..n).map(|i| ((i - 1) / 2, i)));
            n
        }
        FamilySpec::Cylinder(l, c) => {
            positive(l)?;
            if c < 3 {
                return Err(Error::InvalidSize("cylinder circumference must be at least 3".into()));
            }
            for i in 0..l {
                edges.extend((0..c).map(|j| (i * c + j, i * c + (j + 1) % c)));
            }
            for i in 1..l {
                edges.extend((0..c).map(|j| ((i - 1) * c + j, i * c + j)));
            }
            l * c
        }
    };
    Graph::with_tag(n, &edges, spec.tag())
}
