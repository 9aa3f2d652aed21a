//! Versioned JSON region documents.
//!
//! ```json
//! {"version": 1, "lattice": "square",
//!  "shape": {"type": "rectangle", "m": 8, "n": 8},
//!  "remove": [[0, 0], [7, 7]],
//!  "weights": {"default": "1", "by_label": {"vertical": "2"},
//!              "edges": [{"white": [0, 0], "black": [1, 0], "weight": "3/2"}]}}
//! ```

use num_rational::BigRational;
use num_traits::One;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::collections::BTreeMap;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::graph::{self, BipartiteGraph, Label, Lattice, TriCell};

pub const VERSION: u32 = 1;

/// A positive rational read from a JSON integer or a `"p/q"` string.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rat(pub BigRational);

impl Serialize for Rat {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.0.to_string())
    }
}

impl<'de> Deserialize<'de> for Rat {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = serde_json::Value::deserialize(d)?;
        let s = match &v {
            serde_json::Value::String(s) => s.clone(),
            serde_json::Value::Number(n) if n.is_i64() || n.is_u64() => n.to_string(),
            _ => return Err(serde::de::Error::custom("weight must be an integer or a \"p/q\" string")),
        };
        BigRational::from_str(s.trim()).map(Rat).map_err(|_| serde::de::Error::custom(format!("bad rational {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Shape {
    /// Square grid, `m` columns by `n` rows.
    Rectangle { m: usize, n: usize },
    /// Honeycomb hexagon with sides `a, b, c`.
    Hexagon { a: usize, b: usize, c: usize },
    /// Square cells `[x, y]` or honeycomb triangles `[i, j, k]` (k = 0 up, 1 down).
    Cells { cells: Vec<Vec<i64>> },
    /// Periodic graph with an `l x l` fundamental domain.
    Torus { l: usize },
    /// Explicit fundamental domain with signs and magnetic exponents.
    FundamentalDomain { nw: usize, nb: usize, edges: Vec<FdEdgeSpec> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FdEdgeSpec {
    pub w: usize,
    pub b: usize,
    pub weight: Rat,
    #[serde(default = "plus_one")]
    pub sign: i8,
    #[serde(default)]
    pub exp: (i32, i32),
}

fn plus_one() -> i8 {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeWeight {
    pub white: Vec<i64>,
    pub black: Vec<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub weight: Rat,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Weights {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub default: Option<Rat>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub by_label: BTreeMap<String, Rat>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub edges: Vec<EdgeWeight>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionSpec {
    pub version: u32,
    pub lattice: Lattice,
    pub shape: Shape,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub remove: Vec<Vec<i64>>,
    #[serde(default)]
    pub weights: Weights,
}

impl RegionSpec {
    pub fn from_json(s: &str) -> Result<Self> {
        let spec: RegionSpec = serde_json::from_str(s).map_err(|e| Error::Malformed(e.to_string()))?;
        if spec.version != VERSION {
            return Err(Error::Malformed(format!("unsupported region version {}", spec.version)));
        }
        Ok(spec)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("region serializes")
    }

    pub fn new(lattice: Lattice, shape: Shape) -> Self {
        RegionSpec { version: VERSION, lattice, shape, remove: Vec::new(), weights: Weights::default() }
    }
}

fn square_cell(v: &[i64]) -> Result<(i64, i64)> {
    match v {
        [x, y] => Ok((*x, *y)),
        _ => Err(Error::Malformed("square cells are [x, y]".into())),
    }
}

fn tri_cell(v: &[i64]) -> Result<TriCell> {
    match v {
        [i, j, k] if *k == 0 || *k == 1 => Ok((*i, *j, *k as u8)),
        _ => Err(Error::Malformed("honeycomb cells are [i, j, k] with k in {0, 1}".into())),
    }
}

/// Builds the embedded graph described by a region document. Unbalanced
/// regions are returned as they are; see `BipartiteGraph::is_balanced`.
pub fn build_region(spec: &RegionSpec) -> Result<BipartiteGraph> {
    let g = match (spec.lattice, &spec.shape) {
        (Lattice::Square, Shape::Rectangle { m, n }) => {
            let mut cells: Vec<(i64, i64)> =
                (0..*n as i64).flat_map(|y| (0..*m as i64).map(move |x| (x, y))).collect();
            let removed = spec.remove.iter().map(|c| square_cell(c)).collect::<Result<Vec<_>>>()?;
            cells.retain(|c| !removed.contains(c));
            graph::square_cells(&cells)?
        }
        (Lattice::Square, Shape::Cells { cells }) => {
            let removed = spec.remove.iter().map(|c| square_cell(c)).collect::<Result<Vec<_>>>()?;
            let mut cs = cells.iter().map(|c| square_cell(c)).collect::<Result<Vec<_>>>()?;
            cs.retain(|c| !removed.contains(c));
            graph::square_cells(&cs)?
        }
        (Lattice::Honeycomb, Shape::Hexagon { a, b, c }) => {
            let removed = spec.remove.iter().map(|c| tri_cell(c)).collect::<Result<Vec<_>>>()?;
            let mut cs = graph::hexagon_triangles(*a, *b, *c);
            cs.retain(|c| !removed.contains(c));
            graph::honeycomb_cells(&cs)?
        }
        (Lattice::Honeycomb, Shape::Cells { cells }) => {
            let removed = spec.remove.iter().map(|c| tri_cell(c)).collect::<Result<Vec<_>>>()?;
            let mut cs = cells.iter().map(|c| tri_cell(c)).collect::<Result<Vec<_>>>()?;
            cs.retain(|c| !removed.contains(c));
            graph::honeycomb_cells(&cs)?
        }
        (Lattice::Honeycomb, Shape::Torus { l }) => graph::honeycomb_torus(*l)?,
        (Lattice::Square, Shape::Torus { l }) => graph::square_torus(*l)?,
        (lat, shape) => {
            return Err(Error::Malformed(format!("shape {shape:?} is not available on lattice {lat:?}")));
        }
    };
    apply_weights(g, &spec.weights)
}

fn apply_weights(mut g: BipartiteGraph, w: &Weights) -> Result<BipartiteGraph> {
    let default = w.default.as_ref().map(|r| r.0.clone()).unwrap_or_else(BigRational::one);
    let mut by_label = BTreeMap::new();
    for (k, v) in &w.by_label {
        let l = Label::parse(k).ok_or_else(|| Error::Malformed(format!("unknown edge label {k:?}")))?;
        by_label.insert(l, v.0.clone());
    }
    let mut weights: Vec<BigRational> =
        g.edges.iter().map(|e| by_label.get(&e.label).cloned().unwrap_or_else(|| default.clone())).collect();
    for ov in &w.edges {
        let label = match &ov.label {
            Some(s) => Some(Label::parse(s).ok_or_else(|| Error::Malformed(format!("unknown edge label {s:?}")))?),
            None => None,
        };
        let (wc, bc) = match (ov.white.as_slice(), ov.black.as_slice()) {
            ([a, b], [c, d]) => ((*a, *b), (*c, *d)),
            _ => return Err(Error::Malformed("edge overrides name cells as [x, y]".into())),
        };
        let mut hit = false;
        for (i, e) in g.edges.iter().enumerate() {
            if g.whites[e.white].cell == wc && g.blacks[e.black].cell == bc && label.is_none_or(|l| l == e.label) {
                weights[i] = ov.weight.0.clone();
                hit = true;
            }
        }
        if !hit {
            return Err(Error::Malformed(format!("no edge between white {wc:?} and black {bc:?}")));
        }
    }
    g = g.with_weights(&weights)?;
    Ok(g)
}
