//! JSON documents written by the command line. Every document carries the
//! tool version and parses back into an equal value.

use serde::{Deserialize, Serialize};

/// Stamped into every JSON, CSV and SVG output.
pub const VERSION: &str = concat!("dimers ", env!("CARGO_PKG_VERSION"));

fn version() -> String {
    VERSION.to_string()
}

/// One number, for `--json` on the scalar commands. Exact values are
/// `"p/q"` or integer strings; floats use the shortest round-trip decimal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalarDoc {
    pub version: String,
    pub quantity: String,
    pub value: String,
}

impl ScalarDoc {
    pub fn new(quantity: &str, value: String) -> Self {
        ScalarDoc { version: version(), quantity: quantity.into(), value }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatchingDoc {
    pub version: String,
    /// Edge ids in region order, one per white vertex.
    pub edges: Vec<usize>,
}

impl MatchingDoc {
    pub fn new(edges: Vec<usize>) -> Self {
        MatchingDoc { version: version(), edges }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleDoc {
    pub version: String,
    pub seed: u64,
    pub method: String,
    pub samples: Vec<Vec<usize>>,
    /// Log-probability of each exact sample; empty for chains.
    pub log_probs: Vec<f64>,
}

impl SampleDoc {
    pub fn new(seed: u64, method: &str, samples: Vec<Vec<usize>>, log_probs: Vec<f64>) -> Self {
        SampleDoc { version: version(), seed, method: method.into(), samples, log_probs }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TermDoc {
    pub i: i32,
    pub j: i32,
    pub coeff: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CharpolyDoc {
    pub version: String,
    pub terms: Vec<TermDoc>,
    /// Counterclockwise hull vertices.
    pub newton_polygon: Vec<(i64, i64)>,
    pub interior_points: usize,
}

impl CharpolyDoc {
    pub fn new(terms: Vec<TermDoc>, newton_polygon: Vec<(i64, i64)>, interior_points: usize) -> Self {
        CharpolyDoc { version: version(), terms, newton_polygon, interior_points }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TorusZDoc {
    pub version: String,
    pub n: usize,
    pub z: String,
    pub signs: [[i8; 2]; 2],
}

impl TorusZDoc {
    pub fn new(n: usize, z: String, signs: [[i8; 2]; 2]) -> Self {
        TorusZDoc { version: version(), n, z, signs }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComponentDoc {
    pub id: usize,
    pub cells: usize,
    pub bounded: bool,
    pub slope: (i64, i64),
    pub centroid: (f64, f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AmoebaDoc {
    pub version: String,
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
    pub nx: usize,
    pub ny: usize,
    pub amoeba_cells: usize,
    pub bounded: usize,
    pub unbounded: usize,
    pub components: Vec<ComponentDoc>,
}

impl AmoebaDoc {
    pub fn new(r: &dimers::amoeba::AmoebaRaster) -> Self {
        let components: Vec<ComponentDoc> = r
            .components
            .iter()
            .map(|c| ComponentDoc { id: c.id, cells: c.cells, bounded: c.bounded, slope: c.slope, centroid: c.centroid })
            .collect();
        AmoebaDoc {
            version: version(),
            x_range: r.x_range,
            y_range: r.y_range,
            nx: r.nx,
            ny: r.ny,
            amoeba_cells: r.member.iter().filter(|&&m| m).count(),
            bounded: components.iter().filter(|c| c.bounded).count(),
            unbounded: components.iter().filter(|c| !c.bounded).count(),
            components,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseDoc {
    pub version: String,
    pub phase: String,
    pub slope: (f64, f64),
    /// Point of the amoeba plane dual to the slope.
    pub dual: (f64, f64),
}

impl PhaseDoc {
    pub fn new(l: &dimers::phase::PhaseLabel) -> Self {
        let phase = serde_json::to_value(l.phase).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
        PhaseDoc { version: version(), phase, slope: l.slope, dual: l.dual }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinimizerDoc {
    pub objective: f64,
    pub extrapolated: f64,
    pub residual: f64,
    pub sweeps: usize,
    /// Largest gap to the Burgers heights, in mesh cells.
    pub linf_cells: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitShapeDoc {
    pub version: String,
    pub per_unit: usize,
    pub degree: usize,
    pub coeffs: Vec<((usize, usize), f64)>,
    pub fit_residual: f64,
    pub shift: Option<f64>,
    pub nodes: usize,
    pub liquid_nodes: usize,
    pub boundary_points: usize,
    pub max_loop_residual: f64,
    pub minimizer: Option<MinimizerDoc>,
}

/// Polygon input: oblique vertex coordinates, counterclockwise.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolygonDoc {
    #[serde(default = "one")]
    pub version: u32,
    pub vertices: Vec<(f64, f64)>,
}

fn one() -> u32 {
    1
}
