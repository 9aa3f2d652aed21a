//! The `dimers` command line: argument grammar, dispatch to the library and
//! the mapping from failures to exit codes (1 bad input, 2 infeasible,
//! 3 tolerance).

pub mod docs;
pub mod svg;

use std::ffi::OsString;
use std::collections::BTreeMap;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use dimers::amoeba::{amoeba_raster, auto_window};
use dimers::error::ErrorKind;
use dimers::fluctuations as fl;
use dimers::graph::BipartiteGraph;
use dimers::height::{height_function, tileable, BaseFlow, Matching};
use dimers::kasteleyn::{count, edge_probabilities, to_f64, KasteleynMatrix};
use dimers::laurent::LaurentPoly2;
use dimers::limit_shape as ls;
use dimers::phase::{classify_point, classify_slope, default_raster};
use dimers::phasing::kasteleyn_phasing;
use dimers::region::{build_region, Rat, RegionSpec};
use dimers::ronkin::{dual_point, free_energy, ronkin, surface_tension_honeycomb};
use dimers::sampler::{collect_stats, edge_midpoint, exact_batch, glauber_batch, ChainConfig, SampleBatch, StatsQuery};
use dimers::torus::{characteristic_polynomial, height_change_distribution, torus_partition, FundamentalDomain};

use docs::*;

#[derive(Parser, Debug)]
#[command(name = "dimers", version, about = "Dimer model toolkit: counting, sampling, spectral curves, limit shapes")]
pub struct Cli {
    /// Cap on worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Master seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct PolyInput {
    /// Laurent polynomial as JSON triples [[coeff, i, j], ...]; coeff is an
    /// integer or a "p/q" string.
    #[arg(long, conflicts_with = "region")]
    pub poly: Option<String>,
    /// Torus or fundamental-domain region whose characteristic polynomial to use.
    #[arg(long)]
    pub region: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct ChainArgs {
    /// Sampler.
    #[arg(long, value_enum, default_value_t = SamplerKind::Exact)]
    pub method: SamplerKind,
    /// Independent Glauber chains.
    #[arg(long, default_value_t = 4)]
    pub chains: usize,
    /// Glauber burn-in in proposals (default: 10 sweeps of all faces).
    #[arg(long)]
    pub burn_in: Option<u64>,
    /// Proposals between recorded Glauber samples (0: one sweep).
    #[arg(long, default_value_t = 0)]
    pub thin: u64,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum SamplerKind {
    Exact,
    Glauber,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Exact weighted number of dimer covers.
    Count {
        region: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Whether a dimer cover exists ("true"/"false").
    Tileable {
        region: PathBuf,
        /// Write a witness matching as JSON.
        #[arg(long)]
        witness: Option<PathBuf>,
    },
    /// Height function of a matching as CSV (face, x, y, height, exact).
    Height {
        region: PathBuf,
        /// Matching JSON (default: a maximum-matching witness).
        #[arg(long)]
        matching: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also draw the tiling.
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Random dimer covers as matching JSON and/or an SVG of the first one.
    Sample {
        region: PathBuf,
        #[arg(long, default_value_t = 1)]
        count: usize,
        #[command(flatten)]
        chain: ChainArgs,
        /// Matching JSON path (stdout when neither --out nor --svg is given).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Empirical edge frequencies as CSV, optionally with exact marginals.
    Stats {
        region: PathBuf,
        #[arg(long, default_value_t = 1000)]
        count: usize,
        #[command(flatten)]
        chain: ChainArgs,
        /// Add exact probabilities and binomial z-scores.
        #[arg(long)]
        exact: bool,
        /// Write per-face height mean and variance CSV here.
        #[arg(long)]
        heights: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Characteristic polynomial of a periodic region as JSON.
    Charpoly { region: PathBuf },
    /// Exact partition function of the n x n torus cover.
    TorusZ {
        region: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        json: bool,
    },
    /// Honeycomb n x n torus counts by height change, as a CSV matrix.
    HeightDist {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rasterized amoeba: component report JSON and optional SVG.
    Amoeba {
        #[command(flatten)]
        input: PolyInput,
        /// xmin,xmax,ymin,ymax (default: tentacle crossings padded by 1).
        #[arg(long, allow_hyphen_values = true)]
        window: Option<String>,
        /// Raster cells per side.
        #[arg(long, default_value_t = 400)]
        res: usize,
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Ronkin function R(x, y).
    Ronkin {
        #[command(flatten)]
        input: PolyInput,
        #[arg(long, allow_hyphen_values = true)]
        x: f64,
        #[arg(long, allow_hyphen_values = true)]
        y: f64,
        #[arg(long)]
        json: bool,
    },
    /// Free energy R(0, 0) per fundamental domain.
    FreeEnergy {
        #[command(flatten)]
        input: PolyInput,
        #[arg(long)]
        json: bool,
    },
    /// Surface tension at slope (s, t); uniform honeycomb without a polynomial.
    SurfaceTension {
        #[command(flatten)]
        input: PolyInput,
        #[arg(long, allow_hyphen_values = true)]
        s: f64,
        #[arg(long, allow_hyphen_values = true)]
        t: f64,
        #[arg(long)]
        json: bool,
    },
    /// Phase of the measure at a slope (--s/--t) or an amoeba point (--x/--y).
    Phase {
        #[command(flatten)]
        input: PolyInput,
        #[arg(long, allow_hyphen_values = true, requires = "t", conflicts_with_all = ["x", "y"])]
        s: Option<f64>,
        #[arg(long, allow_hyphen_values = true, requires = "s")]
        t: Option<f64>,
        #[arg(long, allow_hyphen_values = true, requires = "y")]
        x: Option<f64>,
        #[arg(long, allow_hyphen_values = true, requires = "x")]
        y: Option<f64>,
    },
    /// Burgers limit shape of a lozenge polygon: summary JSON plus CSV/SVG files.
    LimitShape {
        /// Polygon JSON {"vertices": [[x, y], ...]} in oblique coordinates
        /// (default: the regular hexagon of side 1).
        #[arg(long)]
        polygon: Option<PathBuf>,
        /// Mesh nodes per unit length.
        #[arg(long, default_value_t = 32)]
        per_unit: usize,
        /// Largest allowed loop integral of the slope field.
        #[arg(long, default_value_t = 0.1)]
        loop_tol: f64,
        /// Also run the convex minimizer and compare heights.
        #[arg(long)]
        minimize: bool,
        /// Minimizer sweep cap.
        #[arg(long, default_value_t = 5000)]
        max_sweeps: usize,
        #[arg(long)]
        slopes: Option<PathBuf>,
        #[arg(long)]
        heights: Option<PathBuf>,
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Fluctuation checks as CSV: column variance, kernel asymptotics, torus moments.
    Fluctuations {
        /// Edge weights a,b,c.
        #[arg(long, default_value = "1,1,1")]
        weights: String,
        #[arg(long, default_value_t = 100)]
        kmin: usize,
        #[arg(long, default_value_t = 10000)]
        kmax: usize,
        /// Log-spaced k values in the variance fit.
        #[arg(long, default_value_t = 30)]
        points: usize,
        /// Largest radius in the kernel asymptotics table.
        #[arg(long, default_value_t = 80)]
        rmax: i64,
        /// Torus side for moment checks (0 skips them).
        #[arg(long, default_value_t = 0)]
        torus: usize,
        #[arg(long, default_value_t = 16)]
        chains: usize,
        #[arg(long, default_value_t = 60)]
        per_chain: usize,
        /// Burn-in and thinning, in sweeps of 2 l^2 proposals.
        #[arg(long, default_value_t = 2000)]
        burn_in_sweeps: u64,
        #[arg(long, default_value_t = 20)]
        thin_sweeps: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// A failure with its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl From<dimers::Error> for Failure {
    fn from(e: dimers::Error) -> Self {
        let code = match e.kind() {
            ErrorKind::Input => 1,
            ErrorKind::Infeasible => 2,
            ErrorKind::Tolerance => 3,
        };
        Failure { code, message: e.to_string() }
    }
}

fn input_error(msg: impl Into<String>) -> Failure {
    Failure { code: 1, message: msg.into() }
}

type Res<T> = std::result::Result<T, Failure>;

/// Parses `argv` (program name first), runs the command and returns the
/// process exit code. Help and version requests exit 0.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    if let Some(n) = cli.threads {
        // a second call in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    match execute(&cli) {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

fn read(path: &Path) -> Res<String> {
    fs::read_to_string(path).map_err(|e| input_error(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, body: &str) -> Res<()> {
    fs::write(path, body).map_err(|e| input_error(format!("{}: {e}", path.display())))
}

/// Writes to `path`, or to stdout without one.
fn emit(path: Option<&Path>, body: &str) -> Res<()> {
    match path {
        Some(p) => write_file(p, body),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(body.as_bytes()).and_then(|_| out.flush()).map_err(|e| input_error(e.to_string()))
        }
    }
}

fn json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("documents serialize");
    s.push('\n');
    s
}

/// CSV text with a leading `# dimers x.y.z` comment line.
fn csv_text(header: &[&str], rows: Vec<Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory csv");
    for r in rows {
        w.write_record(&r).expect("in-memory csv");
    }
    let body = String::from_utf8(w.into_inner().expect("in-memory csv")).expect("utf8 csv");
    format!("# {VERSION}\n{body}")
}

fn scalar(json_out: bool, quantity: &str, value: String) -> Res<()> {
    if json_out {
        emit(None, &json(&ScalarDoc::new(quantity, value)))
    } else {
        emit(None, &format!("{value}\n"))
    }
}

fn load_spec(path: &Path) -> Res<RegionSpec> {
    Ok(RegionSpec::from_json(&read(path)?)?)
}

fn load_region(path: &Path) -> Res<BipartiteGraph> {
    Ok(build_region(&load_spec(path)?)?)
}

fn load_matching(g: &BipartiteGraph, path: &Path) -> Res<Matching> {
    let doc: MatchingDoc = serde_json::from_str(&read(path)?).map_err(|e| input_error(format!("matching JSON: {e}")))?;
    Ok(Matching::from_edges(g, &doc.edges)?)
}

fn witness(g: &BipartiteGraph) -> Res<Matching> {
    match tileable(g) {
        (true, Some(m)) => Ok(m),
        _ => Err(dimers::Error::Untileable.into()),
    }
}

pub fn parse_poly(s: &str) -> Res<LaurentPoly2> {
    let triples: Vec<(Rat, i32, i32)> = serde_json::from_str(s).map_err(|e| input_error(format!("polynomial JSON: {e}")))?;
    let mut p = LaurentPoly2::zero();
    for (c, i, j) in triples {
        p.add_term((i, j), &c.0);
    }
    if p.is_zero() {
        return Err(input_error("zero polynomial"));
    }
    Ok(p)
}

fn polynomial(input: &PolyInput) -> Res<Option<LaurentPoly2>> {
    match (&input.poly, &input.region) {
        (Some(s), _) => parse_poly(s).map(Some),
        (None, Some(path)) => {
            let fd = FundamentalDomain::from_spec(&load_spec(path)?)?;
            Ok(Some(characteristic_polynomial(&fd)?))
        }
        (None, None) => Ok(None),
    }
}

fn required_poly(input: &PolyInput) -> Res<LaurentPoly2> {
    polynomial(input)?.ok_or_else(|| input_error("give --poly or --region"))
}

fn batch(g: &BipartiteGraph, count: usize, chain: &ChainArgs, seed: u64) -> Res<SampleBatch> {
    if count == 0 {
        return Err(input_error("--count must be positive"));
    }
    Ok(match chain.method {
        SamplerKind::Exact => exact_batch(g, &kasteleyn_phasing(g), count, seed)?,
        SamplerKind::Glauber => {
            let chains = chain.chains.clamp(1, count);
            let cfg = ChainConfig { chains, burn_in: chain.burn_in, thin: chain.thin, per_chain: count.div_ceil(chains) };
            let mut b = glauber_batch(g, cfg, seed)?;
            b.matchings.truncate(count);
            b
        }
    })
}

/// Exactly `n` comma-separated numbers.
fn floats(s: &str, n: usize) -> Res<Vec<f64>> {
    let v: Vec<f64> = s.split(',').map(|t| t.trim().parse::<f64>()).collect::<std::result::Result<_, _>>().map_err(|e| input_error(format!("{s:?}: {e}")))?;
    if v.len() != n {
        return Err(input_error(format!("{s:?}: expected {n} comma-separated numbers")));
    }
    Ok(v)
}

/// Shortest decimal that parses back to the same `f64`.
fn num(x: f64) -> String {
    format!("{x:?}")
}

fn execute(cli: &Cli) -> Res<()> {
    let seed = cli.seed;
    match &cli.command {
        Command::Count { region, json: j } => {
            let g = load_region(region)?;
            let z = if g.is_balanced() { count(&g)? } else { Default::default() };
            scalar(*j, "partition_function", z.to_string())
        }
        Command::Tileable { region, witness: out } => {
            let g = load_region(region)?;
            let (ok, m) = tileable(&g);
            if let (Some(path), Some(m)) = (out, m) {
                write_file(path, &json(&MatchingDoc::new(m.edges())))?;
            }
            emit(None, &format!("{ok}\n"))
        }
        Command::Height { region, matching, out, svg: pic } => {
            let g = load_region(region)?;
            let m = match matching {
                Some(p) => load_matching(&g, p)?,
                None => witness(&g)?,
            };
            let h = height_function(&g, &m, &BaseFlow::Uniform, None)?;
            let rows = (0..g.faces.len())
                .filter_map(|f| {
                    let v = h.get(f)?;
                    let c = g.faces[f].centroid;
                    Some(vec![f.to_string(), num(c.0), num(c.1), num(to_f64(&v)), v.to_string()])
                })
                .collect();
            if let Some(p) = pic {
                write_file(p, &svg::tiling(&g, &m))?;
            }
            emit(out.as_deref(), &csv_text(&["face", "x", "y", "height", "exact"], rows))
        }
        Command::Sample { region, count, chain, out, svg: pic } => {
            let g = load_region(region)?;
            let b = batch(&g, *count, chain, seed)?;
            let method = if chain.method == SamplerKind::Exact { "exact" } else { "glauber" };
            let doc = SampleDoc::new(seed, method, b.matchings.iter().map(|m| m.edges()).collect(), b.log_probs.clone());
            if let Some(p) = pic {
                write_file(p, &svg::tiling(&g, &b.matchings[0]))?;
            }
            if out.is_some() || pic.is_none() {
                emit(out.as_deref(), &json(&doc))?;
            }
            Ok(())
        }
        Command::Stats { region, count, chain, exact, heights, out } => {
            let g = load_region(region)?;
            let b = batch(&g, *count, chain, seed)?;
            let faces: Vec<usize> = if heights.is_some() { g.bounded_faces().map(|(f, _)| f).collect() } else { Vec::new() };
            let q = StatsQuery { faces: faces.clone(), base: Some(BaseFlow::Uniform), density_cell: None };
            let st = collect_stats(&g, &b, &q)?;
            let probs = if *exact {
                let ph = kasteleyn_phasing(&g);
                Some(edge_probabilities(&g, &KasteleynMatrix::new(&g, &ph))?)
            } else {
                None
            };
            let mut header = vec!["edge", "white", "black", "label", "x", "y", "freq"];
            if probs.is_some() {
                header.extend(["exact", "z"]);
            }
            let rows = (0..g.edges.len())
                .map(|e| {
                    let ed = &g.edges[e];
                    let mid = edge_midpoint(&g, e);
                    let mut r = vec![e.to_string(), ed.white.to_string(), ed.black.to_string(), ed.label.name().to_string(), num(mid.0), num(mid.1), num(st.edge_freq[e])];
                    if let Some(p) = &probs {
                        let pf = to_f64(&p[e]);
                        r.extend([p[e].to_string(), num(st.edge_z(e, pf))]);
                    }
                    r
                })
                .collect();
            if let Some(path) = heights {
                let hrows = faces
                    .iter()
                    .enumerate()
                    .map(|(i, &f)| {
                        let c = g.faces[f].centroid;
                        vec![f.to_string(), num(c.0), num(c.1), num(st.height_mean[i]), num(st.height_var[i])]
                    })
                    .collect();
                write_file(path, &csv_text(&["face", "x", "y", "mean", "variance"], hrows))?;
            }
            emit(out.as_deref(), &csv_text(&header, rows))
        }
        Command::Charpoly { region } => {
            let fd = FundamentalDomain::from_spec(&load_spec(region)?)?;
            let p = characteristic_polynomial(&fd)?;
            let terms = p.terms.iter().map(|(&(i, j), c)| TermDoc { i, j, coeff: c.to_string() }).collect();
            let np = p.newton_polygon();
            let interior = np.interior_lattice_points().len();
            emit(None, &json(&CharpolyDoc::new(terms, np.vertices, interior)))
        }
        Command::TorusZ { region, n, json: j } => {
            let fd = FundamentalDomain::from_spec(&load_spec(region)?)?;
            let tp = torus_partition(&fd, *n)?;
            if *j {
                emit(None, &json(&TorusZDoc::new(*n, tp.z.to_string(), tp.signs)))
            } else {
                emit(None, &format!("{}\n", tp.z))
            }
        }
        Command::HeightDist { n, out } => {
            let dist = height_change_distribution(*n)?;
            let n = *n as i64;
            let mut header: Vec<String> = vec!["hx\\hy".into()];
            header.extend((0..=n).map(|k| k.to_string()));
            let rows = (0..=n)
                .map(|hx| {
                    let mut r = vec![hx.to_string()];
                    r.extend((0..=n).map(|hy| dist.get(&(hx, hy)).map_or_else(|| "0".to_string(), |c| c.to_string())));
                    r
                })
                .collect();
            let hdr: Vec<&str> = header.iter().map(String::as_str).collect();
            emit(out.as_deref(), &csv_text(&hdr, rows))
        }
        Command::Amoeba { input, window, res, svg: pic } => {
            let p = required_poly(input)?;
            let ((x0, x1), (y0, y1)) = match window {
                Some(w) => {
                    let w = floats(w, 4)?;
                    ((w[0], w[1]), (w[2], w[3]))
                }
                None => auto_window(&p, 1.0),
            };
            if !(x0 < x1 && y0 < y1) || *res < 2 {
                return Err(input_error("empty window or raster"));
            }
            let r = amoeba_raster(&p, (x0, x1), (y0, y1), *res, *res);
            if let Some(path) = pic {
                write_file(path, &svg::amoeba(&r))?;
            }
            emit(None, &json(&AmoebaDoc::new(&r)))
        }
        Command::Ronkin { input, x, y, json: j } => {
            let p = required_poly(input)?;
            scalar(*j, "ronkin", num(ronkin(&p, *x, *y)?))
        }
        Command::FreeEnergy { input, json: j } => {
            let p = required_poly(input)?;
            scalar(*j, "free_energy", num(free_energy(&p)?))
        }
        Command::SurfaceTension { input, s, t, json: j } => {
            let sigma = match polynomial(input)? {
                None => surface_tension_honeycomb(*s, *t)?,
                Some(p) => {
                    let (x, y) = dual_point(&p, *s, *t, (0.0, 0.0))?;
                    s * x + t * y - ronkin(&p, x, y)?
                }
            };
            scalar(*j, "surface_tension", num(sigma))
        }
        Command::Phase { input, s, t, x, y } => {
            let p = required_poly(input)?;
            let label = match (s, t, x, y) {
                (Some(s), Some(t), _, _) => classify_slope(&p, *s, *t, &default_raster(&p, 300))?,
                (_, _, Some(x), Some(y)) => classify_point(&p, *x, *y)?,
                _ => return Err(input_error("give --s/--t or --x/--y")),
            };
            emit(None, &json(&PhaseDoc::new(&label)))
        }
        Command::LimitShape { polygon, per_unit, loop_tol, minimize, max_sweeps, slopes, heights, svg: pic } => {
            let poly = match polygon {
                Some(path) => {
                    let doc: PolygonDoc = serde_json::from_str(&read(path)?).map_err(|e| input_error(format!("polygon JSON: {e}")))?;
                    ls::Polygon::new(doc.vertices)
                }
                None => ls::Polygon::hexagon(1.0),
            };
            limit_shape(&poly, *per_unit, *loop_tol, minimize.then_some(*max_sweeps), slopes, heights, pic)
        }
        Command::Fluctuations { weights, kmin, kmax, points, rmax, torus, chains, per_chain, burn_in_sweeps, thin_sweeps, out } => {
            let w = floats(weights, 3)?;
            let (a, b, c) = (w[0], w[1], w[2]);
            let (ta, _, _) = fl::triangle_angles(a, b, c).ok_or_else(|| input_error("weights violate the triangle inequality"))?;
            let mut rows = Vec::new();
            let fit = fl::variance_log_fit(ta, *kmin, *kmax, *points)?;
            for &(k, v) in &fit.points {
                rows.push(vec!["variance".into(), k.to_string(), num(v), num(fit.slope * (k as f64).ln() + fit.intercept), String::new(), String::new()]);
            }
            let target = 1.0 / (std::f64::consts::PI * std::f64::consts::PI);
            rows.push(vec!["variance_slope".into(), String::new(), num(fit.slope), num(target), String::new(), String::new()]);
            // kernel against its pole expansion along the direction (2, 1)
            let mut r = 5;
            while r <= *rmax {
                let (x, y) = (r - r / 3, r / 3);
                let exact = fl::kinv_infinite(x, y, a, b, c)?;
                let asym = fl::kinv_asymptotic_fourier(x as f64, y as f64);
                rows.push(vec!["asymptotic".into(), (x.abs() + y.abs()).to_string(), num(exact), num(asym), String::new(), String::new()]);
                r *= 2;
            }
            if *torus > 0 {
                if (a, b, c) != (1.0, 1.0, 1.0) {
                    return Err(input_error("torus moments use uniform weights"));
                }
                moment_rows(*torus, *chains, *per_chain, *burn_in_sweeps, *thin_sweeps, seed, &mut rows)?;
            }
            emit(out.as_deref(), &csv_text(&["kind", "x", "value", "predicted", "stderr", "z"], rows))
        }
    }
}

/// Five points in the pattern used for moment checks, scaled to side `l`.
pub fn moment_points(l: usize) -> Vec<(f64, f64)> {
    let s = l as f64 / 30.0;
    [(8.0, 8.0), (16.0, 8.0), (10.0, 14.0), (18.0, 14.0), (12.0, 8.0)].iter().map(|&(x, y)| (x * s, y * s)).collect()
}

/// Increment pairs compared against the free-field second moment.
pub const MOMENT_PAIRS: [((usize, usize), (usize, usize)); 3] = [((0, 1), (2, 3)), ((0, 2), (1, 3)), ((0, 4), (2, 3))];

fn moment_rows(l: usize, chains: usize, per_chain: usize, burn: u64, thin: u64, seed: u64, rows: &mut Vec<Vec<String>>) -> Res<()> {
    let sweep = 2 * (l * l) as u64;
    let cfg = ChainConfig { chains, burn_in: Some(burn * sweep), thin: thin * sweep, per_chain };
    let data = fl::sample_torus_heights(l, &moment_points(l), cfg, seed)?;
    for (p, q) in MOMENT_PAIRS {
        let cmp = fl::compare_second_moment(&data, p, q)?;
        let key = format!("{}{}|{}{}", p.0, p.1, q.0, q.1);
        rows.push(vec!["moment".into(), key, num(cmp.estimate.mean), num(cmp.predicted), num(cmp.estimate.stderr), num(cmp.z)]);
    }
    let w = fl::wick_defect(&data, [(0, 1), (0, 1), (2, 3), (2, 3)])?;
    rows.push(vec!["wick".into(), "01|01|23|23".into(), num(w.mean), num(0.0), num(w.stderr), num(w.z(0.0))]);
    Ok(())
}

fn limit_shape(
    poly: &ls::Polygon,
    per_unit: usize,
    loop_tol: f64,
    minimize: Option<usize>,
    slopes: &Option<PathBuf>,
    heights: &Option<PathBuf>,
    pic: &Option<PathBuf>,
) -> Res<()> {
    if per_unit == 0 {
        return Err(input_error("--per-unit must be positive"));
    }
    let fit = ls::fit_tangency_curve(poly)?;
    let eq = ls::Burgers::Plain(fit.q.clone());
    let field = ls::slope_field(&eq, poly, per_unit)?;
    let boundary = ls::frozen_boundary(&eq, &field);
    let bh = poly.boundary_height()?;
    let v0 = poly.vertices[0];
    let node = |v: f64| (v * per_unit as f64).round() as i64;
    let (bi, bj) = (node(v0.0) - field.origin.0, node(v0.1) - field.origin.1);
    if bi < 0 || bj < 0 {
        return Err(input_error("polygon vertex off the mesh"));
    }
    let hs = ls::height_from_slopefield(&field, (bi as usize, bj as usize), bh(v0.0, v0.1), loop_tol)?;

    let mut min_doc = None;
    let mut min_h = None;
    if let Some(max_sweeps) = minimize {
        let m = ls::minimize_surface_tension(poly, &bh, per_unit, max_sweeps, 1e-10)?;
        let mut linf: f64 = 0.0;
        for (k, &(i, j)) in m.mesh.nodes.iter().enumerate() {
            if let Some(h) = hs.at_node(i, j) {
                linf = linf.max((h - m.h[k]).abs());
            }
        }
        min_doc = Some(MinimizerDoc {
            objective: m.objective,
            extrapolated: m.extrapolated_objective(),
            residual: m.residual,
            sweeps: m.sweeps,
            linf_cells: linf * per_unit as f64,
        });
        min_h = Some(m);
    }

    let min_index: BTreeMap<(i64, i64), usize> =
        min_h.iter().flat_map(|m| m.mesh.nodes.iter().enumerate().map(|(k, &n)| (n, k))).collect();
    let mut nodes = 0;
    let mut liquid = 0;
    let mut srows = Vec::new();
    let mut hrows = Vec::new();
    for iy in 0..field.ny {
        for ix in 0..field.nx {
            let Some(p) = field.get(ix, iy) else { continue };
            nodes += 1;
            liquid += p.is_liquid() as usize;
            let (x, y) = field.coords(ix, iy);
            let (s, t) = p.slope();
            let phase = if p.is_liquid() { "liquid" } else { "frozen" };
            srows.push(vec![num(x), num(y), phase.to_string(), num(s), num(t)]);
            if let Some(h) = hs.h[iy * field.nx + ix] {
                let (i, j) = (field.origin.0 + ix as i64, field.origin.1 + iy as i64);
                let mut r = vec![num(x), num(y), num(h)];
                if let Some(m) = &min_h {
                    r.push(min_index.get(&(i, j)).map(|&k| num(m.h[k])).unwrap_or_default());
                }
                hrows.push(r);
            }
        }
    }
    if let Some(p) = slopes {
        write_file(p, &csv_text(&["x", "y", "phase", "s", "t"], srows))?;
    }
    if let Some(p) = heights {
        let header: &[&str] = if min_h.is_some() { &["x", "y", "burgers", "minimizer"] } else { &["x", "y", "burgers"] };
        write_file(p, &csv_text(header, hrows))?;
    }
    if let Some(p) = pic {
        write_file(p, &svg::limit_shape(poly, &boundary))?;
    }
    let doc = LimitShapeDoc {
        version: VERSION.to_string(),
        per_unit,
        degree: fit.q.degree,
        coeffs: fit.q.coeffs.clone(),
        fit_residual: fit.residual,
        shift: fit.shift,
        nodes,
        liquid_nodes: liquid,
        boundary_points: boundary.len(),
        max_loop_residual: hs.max_loop_residual,
        minimizer: min_doc,
    };
    emit(None, &json(&doc))
}
